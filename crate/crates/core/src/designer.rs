//! Search for NFV generator matrices under the erasure view of the servers.
//!
//! A server whose input combines `d` frames is lost with probability
//! `e_d = q + (1 − q)·f(d)`, where `f(d)` is the decoder's frame error rate on
//! the combined channel. Denser columns raise `f`, sparser matrices lower the
//! minimum distance; ranking candidates by exact failure probability weighs
//! the two against each other.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::channel::{effective_p, BscChannel, Purpose, RngStream};
use crate::convcode::LinearCode;
use crate::error::{Error, Result};
use crate::gf2::{rank_of_words, BitMatrix};
use crate::nfv::NfvScheme;
use crate::trials;

/// Bound on `N` for exact erasure enumeration and on `K` for codeword enumeration.
pub const MAX_DESIGN_SIZE: usize = 20;

/// Decoder frame error rate `f(d)` for `d = 1..=d_max` combined frames.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FTable {
    values: Vec<f64>,
}

impl FTable {
    /// `values[d − 1]` is `f(d)`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArg("f table is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArg(format!("f value {v} is not a probability")));
        }
        Ok(Self { values })
    }

    /// Same `f` for every weight up to `d_max`.
    pub fn constant(f: f64, d_max: usize) -> Result<Self> {
        Self::new(vec![f; d_max.max(1)])
    }

    pub fn d_max(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, d: usize) -> Option<f64> {
        d.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    /// `d,f` rows under a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,f\n");
        for (i, f) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, f);
        }
        out
    }

    /// Parses `d,f` rows; the header is optional and `d` must run 1, 2, 3, ...
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || (lineno == 0 && line.starts_with('d')) {
                continue;
            }
            let (d, f) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected d,f", lineno + 1)))?;
            let d: usize = d
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad d: {e}", lineno + 1)))?;
            let f: f64 = f
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: bad f: {e}", lineno + 1)))?;
            if d != values.len() + 1 {
                return Err(Error::Parse(format!(
                    "line {}: expected d = {}, got {d}",
                    lineno + 1,
                    values.len() + 1
                )));
            }
            values.push(f);
        }
        Self::new(values)
    }
}

/// Monte Carlo frame error rate of `code` on BSC(effective_p(p, d)) for each
/// `d ≤ d_max`. All weights share the same uniform draws, so the noise
/// patterns are nested as `d` grows.
pub fn measure_f<C: LinearCode + ?Sized>(
    code: &C,
    p: f64,
    d_max: usize,
    trials: u64,
    seed: u64,
) -> Result<FTable> {
    if d_max == 0 {
        return Err(Error::InvalidArg("d_max must be at least 1".into()));
    }
    if trials == 0 {
        return Err(Error::InvalidArg("trials must be at least 1".into()));
    }
    let values = (1..=d_max)
        .map(|d| {
            let channel = BscChannel::new(effective_p(p, d)?)?;
            let errors = trials::run(
                trials,
                || 0u64,
                |errors, t| {
                    let message = RngStream::new(seed, t, Purpose::Message(0)).bits(code.message_len());
                    let mut y = code.encode(&message).expect("message length matches code");
                    let noise = channel.sample_noise(
                        code.codeword_len(),
                        &mut RngStream::new(seed, t, Purpose::Noise(0)),
                    );
                    y.xor_assign(&noise).expect("noise length matches codeword");
                    if code.decode(&y).expect("codeword length matches code") != message {
                        *errors += 1;
                    }
                },
            );
            Ok(errors as f64 / trials as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    FTable::new(values)
}

/// Independent server erasures with probability `q + (1 − q)·f(d_j)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErasureModel {
    pub q: f64,
    pub f_table: FTable,
}

impl ErasureModel {
    pub fn new(q: f64, f_table: FTable) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidArg(format!("q = {q} is not in [0, 1]")));
        }
        Ok(Self { q, f_table })
    }

    /// Erasure probability of a server combining `d` frames.
    pub fn erasure(&self, d: usize) -> Result<f64> {
        let f = self.f_table.get(d).ok_or_else(|| {
            Error::InvalidArg(format!(
                "f table covers d <= {}, column weight {d} requested",
                self.f_table.d_max()
            ))
        })?;
        Ok(self.q + (1.0 - self.q) * f)
    }
}

/// Exact probability that the surviving columns fail to span all frames,
/// with server `j` erased independently according to its column weight.
pub fn erasure_perr(g: &BitMatrix, model: &ErasureModel) -> Result<f64> {
    let erasures = g
        .column_weights()
        .into_iter()
        .map(|d| model.erasure(d))
        .collect::<Result<Vec<_>>>()?;
    erasure_perr_with(g, &erasures)
}

/// [`erasure_perr`] with explicit per-server erasure probabilities.
pub fn erasure_perr_with(g: &BitMatrix, erasures: &[f64]) -> Result<f64> {
    let n = g.n_cols();
    if erasures.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: erasures.len(),
        });
    }
    if n > MAX_DESIGN_SIZE {
        return Err(Error::TooLarge {
            what: "erasure patterns 2^N",
            limit: 1 << MAX_DESIGN_SIZE,
        });
    }
    let cols = g
        .column_words()
        .ok_or_else(|| Error::InvalidArg("more than 64 frames".into()))?;
    let k = g.n_rows();
    let mut p_fail = 0.0;
    let mut survivors = Vec::with_capacity(n);
    for up in 0..1u64 << n {
        survivors.clear();
        let mut prob = 1.0;
        for (j, (&c, &e)) in cols.iter().zip(erasures).enumerate() {
            if (up >> j) & 1 == 1 {
                survivors.push(c);
                prob *= 1.0 - e;
            } else {
                prob *= e;
            }
        }
        if rank_of_words(&survivors) < k {
            p_fail += prob;
        }
    }
    Ok(p_fail.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    /// Rows of the generator as `'0'`/`'1'` strings.
    #[serde(serialize_with = "serialize_rows")]
    pub matrix: BitMatrix,
    pub p_err: f64,
    pub min_dist: usize,
    pub max_col_weight: usize,
    pub mfr: usize,
    pub column_weights: Vec<usize>,
}

fn serialize_rows<S: serde::Serializer>(m: &BitMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.rows().iter().map(ToString::to_string))
}

impl DesignReport {
    pub fn evaluate(matrix: BitMatrix, model: &ErasureModel) -> Result<Self> {
        let p_err = erasure_perr(&matrix, model)?;
        let min_dist = matrix.min_distance()?;
        let scheme = NfvScheme::new(matrix.clone(), "candidate")?;
        let mfr = scheme.mfr_subset_search()?;
        let column_weights = matrix.column_weights();
        Ok(Self {
            max_col_weight: column_weights.iter().copied().max().unwrap_or(0),
            matrix,
            p_err,
            min_dist,
            mfr,
            column_weights,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Most candidate matrices evaluated; exhaustive when the canonical space fits.
    pub max_candidates: usize,
    /// Seed for random sampling when the space does not fit.
    pub seed: u64,
}

/// Number of multisets of size `n` drawn from `m` kinds, saturating.
fn multiset_count(m: u64, n: u64) -> u64 {
    // C(m + n − 1, n)
    let mut acc: u128 = 1;
    for i in 0..n {
        acc = acc * u128::from(m + i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All nondecreasing length-`n` sequences over `1..=max` (canonical column lists).
fn canonical_candidates(max: u64, n: usize) -> Vec<Vec<u64>> {
    let mut out = Vec::new();
    let mut cur = vec![1u64; n];
    if n == 0 {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(pos) = (0..n).rev().find(|&i| cur[i] < max) else {
            return out;
        };
        let v = cur[pos] + 1;
        for c in &mut cur[pos..] {
            *c = v;
        }
    }
}

/// Rounds to 12 significant digits so that float noise does not reorder ties.
fn rank_key(p: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let scale = 10f64.powi(11 - p.abs().log10().floor() as i32);
    (p * scale).round() / scale
}

/// Ranked full-rank `K × N` generators without zero columns.
///
/// Column order only relabels servers, so candidates are deduplicated by
/// their sorted column list. Ordering: erasure failure probability, then
/// largest column weight, then the sorted column list.
pub fn search_gnfv(
    n_frames: usize,
    n_servers: usize,
    model: &ErasureModel,
    budget: SearchBudget,
) -> Result<Vec<DesignReport>> {
    if budget.max_candidates == 0 {
        return Err(Error::InvalidArg("search budget must be positive".into()));
    }
    if n_frames == 0 || n_servers < n_frames {
        return Err(Error::InvalidArg(format!(
            "need N >= K >= 1, got K={n_frames}, N={n_servers}"
        )));
    }
    if n_frames > MAX_DESIGN_SIZE || n_servers > MAX_DESIGN_SIZE {
        return Err(Error::TooLarge {
            what: "design size (K, N)",
            limit: MAX_DESIGN_SIZE,
        });
    }
    let max_col = (1u64 << n_frames) - 1;
    let space = multiset_count(max_col, n_servers as u64);
    let candidates: Vec<Vec<u64>> = if space <= budget.max_candidates as u64 {
        canonical_candidates(max_col, n_servers)
    } else {
        let mut rng = RngStream::new(budget.seed, 0, Purpose::Other(0));
        let mut seen = BTreeSet::new();
        for _ in 0..budget.max_candidates {
            let mut cols: Vec<u64> = (0..n_servers).map(|_| rng.random_range(1..=max_col)).collect();
            cols.sort_unstable();
            seen.insert(cols);
        }
        seen.into_iter().collect()
    };

    let evaluate = |cols: &Vec<u64>| -> Result<Option<(Vec<u64>, DesignReport)>> {
        if rank_of_words(cols) < n_frames {
            return Ok(None);
        }
        let m = BitMatrix::from_column_words(n_frames, cols);
        Ok(Some((cols.clone(), DesignReport::evaluate(m, model)?)))
    };
    #[cfg(feature = "parallel")]
    let evaluated: Vec<_> = {
        use rayon::prelude::*;
        candidates.par_iter().map(evaluate).collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let evaluated: Vec<_> = candidates.iter().map(evaluate).collect::<Result<Vec<_>>>()?;

    let mut ranked: Vec<(Vec<u64>, DesignReport)> = evaluated.into_iter().flatten().collect();
    ranked.sort_by(|(ca, a), (cb, b)| {
        rank_key(a.p_err)
            .total_cmp(&rank_key(b.p_err))
            .then(a.max_col_weight.cmp(&b.max_col_weight))
            .then_with(|| ca.cmp(cb))
    });
    Ok(ranked.into_iter().map(|(_, r)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> BitMatrix {
        s.replace('/', "\n").parse().unwrap()
    }

    #[test]
    fn closed_forms_for_three_servers() {
        for e in [0.0, 0.01, 0.1, 0.37, 1.0] {
            let coded = erasure_perr_with(&m("101/011"), &[e; 3]).unwrap();
            assert!((coded - (e * e * e + 3.0 * e * e * (1.0 - e))).abs() < 1e-12);
            let div = erasure_perr_with(&m("100/011"), &[e; 3]).unwrap();
            assert!((div - (1.0 - (1.0 - e) * (1.0 - e * e))).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_erasure_full_rank_never_fails() {
        let model = ErasureModel::new(0.0, FTable::constant(0.0, 3).unwrap()).unwrap();
        assert_eq!(erasure_perr(&m("1011/0111"), &model).unwrap(), 0.0);
    }

    #[test]
    fn erasure_uses_column_weight() {
        let model = ErasureModel::new(0.1, FTable::new(vec![0.0, 0.5]).unwrap()).unwrap();
        assert!((model.erasure(1).unwrap() - 0.1).abs() < 1e-15);
        assert!((model.erasure(2).unwrap() - 0.55).abs() < 1e-15);
        assert!(model.erasure(3).is_err());
        let direct = erasure_perr_with(&m("101/011"), &[0.1, 0.1, 0.55]).unwrap();
        assert_eq!(erasure_perr(&m("101/011"), &model).unwrap(), direct);
    }

    #[test]
    fn f_table_csv() {
        let t = FTable::new(vec![0.025, 0.37]).unwrap();
        assert_eq!(t.to_csv(), "d,f\n1,0.025\n2,0.37\n");
        assert_eq!(FTable::from_csv(&t.to_csv()).unwrap(), t);
        assert!(FTable::from_csv("d,f\n2,0.1\n").is_err());
        assert!(FTable::from_csv("1,1.5\n").is_err());
        assert!(FTable::from_csv("").is_err());
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multiset_count(3, 3), 10);
        assert_eq!(canonical_candidates(3, 3).len(), 10);
        assert_eq!(canonical_candidates(1, 1), vec![vec![1]]);
        assert_eq!(multiset_count(1 << 20, 20), u64::MAX);
    }

    #[test]
    fn two_by_two_only_identity() {
        let model = ErasureModel::new(0.1, FTable::new(vec![0.02, 0.2]).unwrap()).unwrap();
        let budget = SearchBudget { max_candidates: 1000, seed: 1 };
        let ranked = search_gnfv(2, 2, &model, budget).unwrap();
        let e1: f64 = 0.1 + 0.9 * 0.02;
        let best = &ranked[0];
        assert_eq!(best.matrix.rank(), 2);
        assert_eq!(best.max_col_weight, 1);
        assert!((best.p_err - (1.0 - (1.0 - e1) * (1.0 - e1))).abs() < 1e-12);
    }

    #[test]
    fn single_server_single_frame() {
        let model = ErasureModel::new(0.01, FTable::new(vec![0.03]).unwrap()).unwrap();
        let budget = SearchBudget { max_candidates: 10, seed: 1 };
        let ranked = search_gnfv(1, 1, &model, budget).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].matrix, BitMatrix::identity(1));
        assert!((ranked[0].p_err - (0.01 + 0.99 * 0.03)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_search_arguments() {
        let model = ErasureModel::new(0.01, FTable::constant(0.0, 2).unwrap()).unwrap();
        assert!(search_gnfv(2, 3, &model, SearchBudget { max_candidates: 0, seed: 1 }).is_err());
        assert!(search_gnfv(3, 2, &model, SearchBudget { max_candidates: 10, seed: 1 }).is_err());
    }
}
