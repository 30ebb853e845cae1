//! Exhaustive reference for tiny block codes.
//!
//! Enumerates every message tuple, every noise pattern and every server
//! availability pattern, with its own table-driven ML decoder and its own
//! recoverability test. Nothing here goes through the Monte Carlo pipeline,
//! the GF(2) solver, or the rank routines, so it can referee them.

use crate::blockcode::BlockCode;
use crate::convcode::LinearCode;
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::nfv::NfvScheme;

/// Upper bound on `2^{K(k+n)}` message/noise combinations.
pub const ORACLE_BUDGET: u64 = 1 << 26;

/// Exact end-to-end error probability for a tiny block code under a scheme
/// with at most 3 servers and 2 frames.
pub fn oracle_perr_tiny(code: &BlockCode, scheme: &NfvScheme, p: f64, q: f64) -> Result<f64> {
    let (k, n) = (code.message_len(), code.codeword_len());
    let (frames, servers) = (scheme.n_frames(), scheme.n_servers());
    if n > 14 || frames > 2 || servers > 3 {
        return Err(Error::TooLarge {
            what: "oracle instance (n <= 14, K <= 2, N <= 3)",
            limit: 14,
        });
    }
    let combos_log2 = frames * (k + n);
    if combos_log2 >= 64 || 1u64 << combos_log2 > ORACLE_BUDGET {
        return Err(Error::TooLarge {
            what: "oracle message/noise combinations",
            limit: ORACLE_BUDGET as usize,
        });
    }
    if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArg(format!("p = {p}, q = {q} must lie in [0, 1]")));
    }

    let to_word = |v: &BitVec| v.iter().enumerate().fold(0u64, |w, (i, b)| w | (u64::from(b) << i));
    let codewords: Vec<u64> = (0..1u64 << k)
        .map(|u| to_word(&code.encode(&BitVec::from_u64(u, k)).expect("k-bit message")))
        .collect();
    // minimum-distance decoding table, ties to the lowest message
    let decode: Vec<u64> = (0..1u64 << n)
        .map(|y| {
            (0..1u64 << k)
                .min_by_key(|&u| ((codewords[u as usize] ^ y).count_ones(), u))
                .expect("at least one codeword")
        })
        .collect();
    let noise_prob: Vec<f64> = (0..=n)
        .map(|w| p.powi(w as i32) * (1.0 - p).powi((n - w) as i32))
        .collect();
    let columns: Vec<u64> = (0..servers).map(|j| scheme.column_word(j)).collect();

    // determined(S): no nonzero message combination is invisible to every server in S
    let determined = |set: u64| {
        (1..1u64 << frames).all(|v| {
            (0..servers).any(|j| (set >> j) & 1 == 1 && (v & columns[j]).count_ones() % 2 == 1)
        })
    };
    let success: Vec<f64> = (0..1u64 << servers)
        .map(|correct| {
            (0..1u64 << servers)
                .filter(|&up| determined(correct & up))
                .map(|up| {
                    let u = up.count_ones() as i32;
                    (1.0 - q).powi(u) * q.powi(servers as i32 - u)
                })
                .sum()
        })
        .collect();

    let mut mass = vec![0.0f64; 1 << servers];
    let msg_mask = (1u64 << k) - 1;
    let noise_mask = (1u64 << n) - 1;
    let message_prob = 1.0 / (1u64 << (frames * k)) as f64;
    for msgs in 0..1u64 << (frames * k) {
        let u: Vec<u64> = (0..frames).map(|i| (msgs >> (i * k)) & msg_mask).collect();
        for noise in 0..1u64 << (frames * n) {
            let z: Vec<u64> = (0..frames).map(|i| (noise >> (i * n)) & noise_mask).collect();
            let prob = z
                .iter()
                .map(|zi| noise_prob[zi.count_ones() as usize])
                .product::<f64>()
                * message_prob;
            let mut correct = 0u64;
            for (j, &col) in columns.iter().enumerate() {
                let (mut input, mut target) = (0u64, 0u64);
                for i in 0..frames {
                    if (col >> i) & 1 == 1 {
                        input ^= codewords[u[i] as usize] ^ z[i];
                        target ^= u[i];
                    }
                }
                if decode[input as usize] == target {
                    correct |= 1 << j;
                }
            }
            mass[correct as usize] += prob;
        }
    }
    let p_succ: f64 = mass.iter().zip(&success).map(|(m, s)| m * s).sum();
    Ok((1.0 - p_succ).clamp(0.0, 1.0))
}
