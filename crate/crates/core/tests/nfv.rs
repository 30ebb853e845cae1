use coded_nfv::channel::{Purpose, RngStream};
use coded_nfv::convcode::{ConvCode, LinearCode, Termination};
use coded_nfv::gf2::{BitMatrix, BitVec};
use coded_nfv::nfv::{NfvScheme, Recovery, SchemeSpec, ServerOutcome};

fn all_schemes(k: usize, n: usize) -> impl Iterator<Item = NfvScheme> {
    (0u64..1 << (k * n)).filter_map(move |bits| {
        let cols: Vec<u64> = (0..n).map(|j| (bits >> (k * j)) & ((1 << k) - 1)).collect();
        NfvScheme::new(BitMatrix::from_column_words(k, &cols), "g").ok()
    })
}

fn messages(k: usize, len: usize, t: u64) -> Vec<BitVec> {
    (0..k as u32).map(|i| RngStream::new(21, t, Purpose::Message(i)).bits(len)).collect()
}

#[test]
fn recovery_exhaustive_over_trusted_sets() {
    for (k, n) in [(1, 1), (1, 3), (2, 2), (2, 3), (2, 4), (3, 3), (3, 4), (3, 5)] {
        for (idx, scheme) in all_schemes(k, n).enumerate().step_by(7) {
            let truth = messages(k, 9, idx as u64);
            let targets = scheme.server_targets(&truth).unwrap();
            for mask in 0u64..1 << n {
                let outcomes: Vec<ServerOutcome> = (0..n)
                    .map(|j| {
                        if (mask >> j) & 1 == 1 {
                            ServerOutcome { available: true, decoded: Some(targets[j].clone()), correct: true }
                        } else {
                            ServerOutcome::unavailable()
                        }
                    })
                    .collect();
                let rank = scheme.matrix().select_columns(&(0..n).filter(|j| (mask >> j) & 1 == 1).collect::<Vec<_>>()).rank();
                match scheme.recover(&outcomes).unwrap() {
                    Recovery::Recovered(got) => {
                        assert_eq!(rank, k);
                        assert_eq!(got, truth);
                    }
                    Recovery::Failure => assert!(rank < k),
                    Recovery::Inconsistent => panic!("consistent outputs reported inconsistent"),
                }
                assert_eq!(scheme.recoverable(mask), rank == k);
            }
        }
    }
}

#[test]
fn untrusted_outputs_are_ignored() {
    let scheme = NfvScheme::coded_xor(3, 2).unwrap();
    let truth = messages(2, 20, 0);
    let targets = scheme.server_targets(&truth).unwrap();
    let mut garbage = targets[2].clone();
    garbage.flip(3);
    let outcomes = vec![
        ServerOutcome { available: true, decoded: Some(targets[0].clone()), correct: true },
        ServerOutcome { available: true, decoded: Some(targets[1].clone()), correct: true },
        ServerOutcome { available: true, decoded: Some(garbage.clone()), correct: false },
    ];
    assert_eq!(scheme.recover(&outcomes).unwrap(), Recovery::Recovered(truth));
    let mut lying = outcomes;
    lying[2].correct = true;
    assert_eq!(scheme.recover(&lying).unwrap(), Recovery::Inconsistent);
}

#[test]
fn mfr_agrees_with_subset_search() {
    for (k, n) in [(1, 3), (2, 3), (2, 4), (3, 4), (3, 5)] {
        for scheme in all_schemes(k, n) {
            let mfr = scheme.mfr();
            assert_eq!(mfr, scheme.mfr_subset_search().unwrap());
            let witness = scheme.mfr_witness();
            assert_eq!(witness.len(), mfr);
            let all = (1u64 << n) - 1;
            let removed = witness.iter().fold(0u64, |m, &j| m | (1 << j));
            assert!(!scheme.recoverable(all & !removed));
        }
    }
}

#[test]
fn named_schemes() {
    let div = NfvScheme::diversity(3, 2).unwrap();
    let coded = NfvScheme::coded_xor(3, 2).unwrap();
    assert_eq!(div.matrix().to_string(), "100\n011");
    assert_eq!(coded.matrix().to_string(), "101\n011");
    assert_eq!((div.mfr(), coded.mfr()), (1, 2));
    assert_eq!(div.mfr_witness(), vec![0]);
    let spec: SchemeSpec = "matrix:101/011".parse().unwrap();
    assert_eq!(spec.build(9, 9).unwrap().matrix(), coded.matrix());
    assert!("matrix:101/001".parse::<SchemeSpec>().unwrap().build(3, 2).is_err());
}

#[test]
fn noiseless_pipeline_recovers_messages() {
    let code = ConvCode::standard_k7(70, Termination::Unterminated).unwrap();
    for scheme in [NfvScheme::diversity(3, 2).unwrap(), NfvScheme::coded_xor(3, 2).unwrap(), NfvScheme::coded_xor(5, 3).unwrap()] {
        for t in 0..20 {
            let truth = messages(scheme.n_frames(), 70, t);
            let received: Vec<BitVec> = truth.iter().map(|u| code.encode(u).unwrap()).collect();
            let inputs = scheme.server_inputs(&received).unwrap();
            let targets = scheme.server_targets(&truth).unwrap();
            let outcomes: Vec<ServerOutcome> = inputs
                .iter()
                .zip(&targets)
                .map(|(y, target)| {
                    let decoded = code.decode(y).unwrap();
                    ServerOutcome { available: true, correct: &decoded == target, decoded: Some(decoded) }
                })
                .collect();
            assert!(outcomes.iter().all(|o| o.correct));
            assert_eq!(scheme.recover(&outcomes).unwrap(), Recovery::Recovered(truth));
        }
    }
}
