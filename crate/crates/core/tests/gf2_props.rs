use std::collections::HashSet;

use coded_nfv::gf2::{solve, BitMatrix, BitVec};
use coded_nfv::Error;
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = BitMatrix> {
    proptest::collection::vec(proptest::collection::vec(any::<bool>(), cols), rows).prop_map(|rows| {
        BitMatrix::from_rows(rows.into_iter().map(BitVec::from_bits).collect()).unwrap()
    })
}

fn bitvec(len: usize) -> impl Strategy<Value = BitVec> {
    proptest::collection::vec(any::<bool>(), len).prop_map(BitVec::from_bits)
}

/// Rank as log2 of the number of distinct vectors in the row span.
fn span_rank(m: &BitMatrix) -> usize {
    let k = m.n_rows();
    let span: HashSet<BitVec> = (0..1u64 << k)
        .map(|u| m.encode(&BitVec::from_u64(u, k)).unwrap())
        .collect();
    span.len().trailing_zeros() as usize
}

/// Smallest number of removed columns that drops the rank below K.
fn removal_distance(m: &BitMatrix) -> usize {
    let n = m.n_cols();
    (0..1u32 << n)
        .filter(|removed| {
            let keep: Vec<usize> = (0..n).filter(|j| (removed >> j) & 1 == 0).collect();
            m.select_columns(&keep).rank() < m.n_rows()
        })
        .map(|removed| removed.count_ones() as usize)
        .min()
        .unwrap()
}

fn column_subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..1 << n).map(move |s| (0..n).filter(|j| (s >> j) & 1 == 1).collect())
}

proptest! {
    #[test]
    fn xor_group_laws(a in bitvec(37), b in bitvec(37), c in bitvec(37)) {
        let ab = a.xor(&b).unwrap();
        prop_assert_eq!(ab.len(), 37);
        prop_assert_eq!(&ab, &b.xor(&a).unwrap());
        prop_assert_eq!(ab.xor(&c).unwrap(), a.xor(&b.xor(&c).unwrap()).unwrap());
        prop_assert!(a.xor(&a).unwrap().is_zero());
    }

    #[test]
    fn xor_of_noisy_frames_is_noisy_xor(x1 in bitvec(140), x2 in bitvec(140), z1 in bitvec(140), z2 in bitvec(140)) {
        let y1 = x1.xor(&z1).unwrap();
        let y2 = x2.xor(&z2).unwrap();
        let lhs = y1.xor(&y2).unwrap();
        let rhs = x1.xor(&x2).unwrap().xor(&z1.xor(&z2).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn rank_matches_span_count(rows in 1usize..=4, cols in 1usize..=6, seed in any::<u64>()) {
        let m = BitMatrix::from_column_words(rows, &(0..cols).map(|j| seed.rotate_left(7 * j as u32) & ((1 << rows) - 1)).collect::<Vec<_>>());
        prop_assert_eq!(m.rank(), span_rank(&m));
        prop_assert!(m.rank() <= rows.min(cols));
    }

    #[test]
    fn rank_matches_span_count_dense(m in matrix(4, 6)) {
        prop_assert_eq!(m.rank(), span_rank(&m));
    }

    #[test]
    fn solve_recovers_every_message(m in matrix(3, 5), width in 1usize..80, seed in any::<u64>()) {
        prop_assume!(m.rank() == 3);
        let mut rng_state = seed;
        let mut next = || { rng_state = rng_state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407); rng_state };
        let messages: Vec<BitVec> = (0..3).map(|_| BitVec::from_words(vec![next(), next()], width)).collect();
        for cols in column_subsets(5) {
            let sub = m.select_columns(&cols);
            let rhs: Vec<BitVec> = cols.iter().map(|&j| {
                let mut acc = BitVec::zeros(width);
                for (i, u) in messages.iter().enumerate() {
                    if m.get(i, j) { acc.xor_assign(u).unwrap(); }
                }
                acc
            }).collect();
            let result = solve(&sub, &rhs);
            if sub.rank() == 3 {
                prop_assert_eq!(result.unwrap(), messages.clone());
            } else {
                let is_rank_deficient = matches!(result, Err(Error::RankDeficient { .. }));
                prop_assert!(is_rank_deficient);
            }
        }
    }

    #[test]
    fn min_distance_equals_removal_distance_3x5(m in matrix(3, 5)) {
        prop_assume!(m.rank() == 3);
        prop_assert_eq!(m.min_distance().unwrap(), removal_distance(&m));
    }

    #[test]
    fn text_round_trip(m in matrix(3, 7)) {
        prop_assert_eq!(m.to_string().parse::<BitMatrix>().unwrap(), m);
    }
}

#[test]
fn min_distance_equals_removal_distance_all_2x3() {
    for bits in 0u32..64 {
        let cols: Vec<u64> = (0..3).map(|j| u64::from((bits >> (2 * j)) & 3)).collect();
        let m = BitMatrix::from_column_words(2, &cols);
        if m.rank() == 2 {
            assert_eq!(m.min_distance().unwrap(), removal_distance(&m), "{m:?}");
        }
    }
}

#[test]
fn solve_exhaustive_small_systems() {
    // every full-rank K×N with K <= 3, N <= 4, every 1-bit message tuple
    for k in 1..=3usize {
        for n in k..=4usize {
            for bits in 0u64..1 << (k * n) {
                let cols: Vec<u64> = (0..n).map(|j| (bits >> (k * j)) & ((1 << k) - 1)).collect();
                let m = BitMatrix::from_column_words(k, &cols);
                if m.rank() < k {
                    continue;
                }
                for u in 0..1u64 << k {
                    let message = BitVec::from_u64(u, k);
                    let codeword = m.encode(&message).unwrap();
                    let rhs: Vec<BitVec> = (0..n).map(|j| BitVec::from_bits([codeword.get(j)])).collect();
                    let solved = solve(&m, &rhs).unwrap();
                    let back = BitVec::from_bits(solved.iter().map(|v| v.get(0)));
                    assert_eq!(back, message);
                }
            }
        }
    }
}

#[test]
fn full_rank_3x3_round_trip() {
    let m: BitMatrix = "110\n011\n111".parse().unwrap();
    assert_eq!(m.rank(), 3);
    for u in 0..8u64 {
        let message = BitVec::from_u64(u, 3);
        let codeword = m.encode(&message).unwrap();
        let rhs: Vec<BitVec> = (0..3).map(|j| BitVec::from_bits([codeword.get(j)])).collect();
        let solved = solve(&m, &rhs).unwrap();
        assert_eq!(BitVec::from_bits(solved.iter().map(|v| v.get(0))), message);
    }
}
