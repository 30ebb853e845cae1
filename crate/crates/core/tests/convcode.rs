use coded_nfv::channel::{BscChannel, Purpose, RngStream};
use coded_nfv::convcode::{
    append_crc, check_decoded, ConvCode, DetectionMode, LinearCode, Termination, CRC_BITS,
};
use coded_nfv::gf2::BitVec;

fn standard(term: Termination) -> ConvCode {
    ConvCode::standard_k7(70, term).unwrap()
}

/// Shift-register encoder written out longhand, one tap string per output.
fn reference_encode(taps: &[&str], message: &[u8], tail: usize) -> Vec<u8> {
    let k = taps[0].len();
    let mut register = vec![0u8; k]; // register[0] = current input
    let mut out = Vec::new();
    for &b in message.iter().chain(std::iter::repeat_n(&0, tail)) {
        register.rotate_right(1);
        register[0] = b;
        for tap in taps {
            let bit = tap
                .bytes()
                .zip(&register)
                .map(|(t, r)| (t - b'0') & r)
                .fold(0, |a, x| a ^ x);
            out.push(bit);
        }
    }
    out
}

fn to_bits(v: &BitVec) -> Vec<u8> {
    v.iter().map(u8::from).collect()
}

#[test]
fn impulse_response_interleaves_generators() {
    let code = standard(Termination::Unterminated);
    let mut u = BitVec::zeros(70);
    u.set(0, true);
    let x = code.encode(&u).unwrap();
    // 171 = 1111001, 133 = 1011011, interleaved
    let expected = [1, 1, 1, 0, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1];
    assert_eq!(&to_bits(&x)[..14], &expected);
    assert!(x.iter().skip(14).all(|b| !b));
    assert_eq!(
        to_bits(&x),
        reference_encode(&["1111001", "1011011"], &to_bits(&u), 0)
    );
}

#[test]
fn matches_longhand_shift_register() {
    for term in [Termination::Unterminated, Termination::ZeroTail] {
        let code = standard(term);
        for t in 0..50 {
            let u = RngStream::new(3, t, Purpose::Message(0)).bits(70);
            let tail = code.tail_bits();
            assert_eq!(
                to_bits(&code.encode(&u).unwrap()),
                reference_encode(&["1111001", "1011011"], &to_bits(&u), tail)
            );
        }
    }
    let code = ConvCode::new(3, vec![0o7, 0o5, 0o3], 12, Termination::ZeroTail).unwrap();
    let u = RngStream::new(4, 0, Purpose::Message(0)).bits(12);
    assert_eq!(
        to_bits(&code.encode(&u).unwrap()),
        reference_encode(&["111", "101", "011"], &to_bits(&u), 2)
    );
}

#[test]
fn encoding_is_linear() {
    for term in [Termination::Unterminated, Termination::ZeroTail] {
        let code = standard(term);
        for t in 0..1000 {
            let a = RngStream::new(5, t, Purpose::Message(0)).bits(70);
            let b = RngStream::new(5, t, Purpose::Message(1)).bits(70);
            let lhs = code.encode(&a.xor(&b).unwrap()).unwrap();
            let rhs = code.encode(&a).unwrap().xor(&code.encode(&b).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn noiseless_decoding_round_trips() {
    for term in [Termination::Unterminated, Termination::ZeroTail] {
        let code = standard(term);
        for t in 0..100 {
            let u = RngStream::new(6, t, Purpose::Message(0)).bits(70);
            assert_eq!(code.decode(&code.encode(&u).unwrap()).unwrap(), u);
        }
    }
}

#[test]
fn every_single_bit_error_is_corrected() {
    for term in [Termination::Unterminated, Termination::ZeroTail] {
        let code = standard(term);
        // without a tail the last few message bits are covered by fewer than
        // d_free coded bits, so a flip there can tie with another codeword
        let exact_until = match term {
            Termination::ZeroTail => code.codeword_len(),
            Termination::Unterminated => code.codeword_len() - 12,
        };
        for t in 0..5 {
            let u = RngStream::new(7, t, Purpose::Message(0)).bits(70);
            let x = code.encode(&u).unwrap();
            for i in 0..x.len() {
                let mut y = x.clone();
                y.flip(i);
                let decoded = code.decode(&y).unwrap();
                if i < exact_until {
                    assert_eq!(decoded, u, "{term} flip {i}");
                } else {
                    assert!(code.encode(&decoded).unwrap().distance(&y).unwrap() <= 1);
                }
            }
        }
    }
}

#[test]
fn viterbi_is_maximum_likelihood() {
    // brute force over all 2^12 messages of a short frame
    for term in [Termination::Unterminated, Termination::ZeroTail] {
        let code = ConvCode::standard_k7(12, term).unwrap();
        let codewords: Vec<BitVec> = (0..1u64 << 12)
            .map(|u| code.encode(&BitVec::from_u64(u, 12)).unwrap())
            .collect();
        let channel = BscChannel::new(0.12).unwrap();
        for t in 0..200 {
            let u = RngStream::new(8, t, Purpose::Message(0)).bits(12);
            let noise = channel.sample_noise(code.codeword_len(), &mut RngStream::new(8, t, Purpose::Noise(0)));
            let y = code.encode(&u).unwrap().xor(&noise).unwrap();
            let best = codewords.iter().map(|c| c.distance(&y).unwrap()).min().unwrap();
            let decoded = code.decode(&y).unwrap();
            assert_eq!(code.encode(&decoded).unwrap().distance(&y).unwrap(), best);
        }
    }
}

#[test]
fn frame_error_rate_grows_with_p() {
    let code = standard(Termination::Unterminated);
    let trials = 4000u64;
    let fer = |p: f64| {
        let channel = BscChannel::new(p).unwrap();
        let errors = (0..trials)
            .filter(|&t| {
                let u = RngStream::new(9, t, Purpose::Message(0)).bits(70);
                let z = channel.sample_noise(140, &mut RngStream::new(9, t, Purpose::Noise(0)));
                code.decode(&code.encode(&u).unwrap().xor(&z).unwrap()).unwrap() != u
            })
            .count();
        errors as f64 / trials as f64
    };
    let rates: Vec<f64> = [0.01, 0.05, 0.1].into_iter().map(fer).collect();
    for w in rates.windows(2) {
        let sigma = ((w[0] * (1.0 - w[0]) + w[1] * (1.0 - w[1])) / trials as f64).sqrt();
        assert!(w[1] + 3.0 * sigma >= w[0], "{rates:?}");
    }
}

#[test]
fn crc_detects_corrupted_messages() {
    let trials = 1000u64;
    let mut detected = 0u64;
    for t in 0..trials {
        let truth = append_crc(&RngStream::new(10, t, Purpose::Message(0)).bits(70 - CRC_BITS));
        let mut wrong = truth.clone();
        // random nonzero error pattern
        let mut err = RngStream::new(10, t, Purpose::Noise(0)).bits(70);
        if err.is_zero() {
            err.flip(0);
        }
        wrong.xor_assign(&err).unwrap();
        assert!(check_decoded(DetectionMode::Crc16, &truth, None));
        assert!(!check_decoded(DetectionMode::Genie, &wrong, Some(&truth)));
        if !check_decoded(DetectionMode::Crc16, &wrong, None) {
            detected += 1;
        }
    }
    let miss = 2f64.powi(-16);
    let sigma = (miss * (1.0 - miss) / trials as f64).sqrt();
    assert!(detected as f64 / trials as f64 >= 1.0 - miss - 3.0 * sigma);
}
