//! End-to-end error probability of an NFV scheme.
//!
//! The expensive part, decoding, is captured once per `(scheme, p)` as a
//! joint distribution over which servers decode correctly. Server failures
//! enter analytically afterwards, so a whole sweep over `q` reuses one
//! Monte Carlo run. [`full_mc_perr`] simulates everything, availability
//! included, and serves as a cross-check.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::channel::{BscChannel, Purpose, RngStream, ServerFailureModel};
use crate::convcode::{append_crc, check_decoded, DetectionMode, LinearCode, CRC_BITS};
use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::nfv::{NfvScheme, Recovery, ServerOutcome};
use crate::trials::{self, Accumulator};

/// Largest server count handled by exhaustive availability enumeration.
pub const MAX_ENUM_SERVERS: usize = 20;

const Z95: f64 = 1.959_963_984_540_054;

/// Empirical distribution of the decode-correctness mask (bit `j` set when
/// server `j` decoded its input correctly) over jointly simulated trials.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointDecodePmf {
    n_servers: usize,
    counts: BTreeMap<u64, u64>,
    trials: u64,
}

impl JointDecodePmf {
    pub fn new(n_servers: usize) -> Self {
        Self {
            n_servers,
            counts: BTreeMap::new(),
            trials: 0,
        }
    }

    /// Distribution concentrated on a single mask.
    pub fn point_mass(n_servers: usize, mask: u64, trials: u64) -> Self {
        let mut pmf = Self::new(n_servers);
        pmf.counts.insert(mask, trials);
        pmf.trials = trials;
        pmf
    }

    pub fn from_counts(n_servers: usize, counts: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut pmf = Self::new(n_servers);
        for (mask, c) in counts {
            pmf.add(mask, c);
        }
        pmf
    }

    pub fn add(&mut self, mask: u64, count: u64) {
        if count > 0 {
            *self.counts.entry(mask).or_insert(0) += count;
            self.trials += count;
        }
    }

    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn probability(&self, mask: u64) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        self.counts.get(&mask).copied().unwrap_or(0) as f64 / self.trials as f64
    }

    /// Fraction of trials in which server `j` decoded incorrectly.
    pub fn marginal_error(&self, j: usize) -> f64 {
        let wrong: u64 = self
            .counts
            .iter()
            .filter(|(m, _)| (*m >> j) & 1 == 0)
            .map(|(_, c)| c)
            .sum();
        wrong as f64 / self.trials.max(1) as f64
    }

    /// Mean and 95% half-width of a per-trial failure probability `w(mask)`.
    fn estimate(&self, estimator: EstimatorKind, w: impl Fn(u64) -> f64) -> ErrEstimate {
        let t = self.trials as f64;
        let (s1, s2) = self.counts.iter().fold((0.0, 0.0), |(s1, s2), (&m, &c)| {
            let v = w(m);
            (s1 + c as f64 * v, s2 + c as f64 * v * v)
        });
        let mean = (s1 / t).clamp(0.0, 1.0);
        let var = (s2 / t - mean * mean).max(0.0);
        ErrEstimate::new(mean, var, self.trials, estimator)
    }
}

impl Accumulator for JointDecodePmf {
    fn merge(mut self, other: Self) -> Self {
        for (m, c) in other.counts {
            self.add(m, c);
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    /// Exact availability enumeration over the joint decode pmf.
    #[serde(rename = "exact")]
    ExactEnum,
    /// The closed forms with `(1 − q)^{|S|}` weighting, 3-server/2-frame only.
    #[serde(rename = "paper")]
    PaperFormula,
    /// Whole-pipeline simulation including availability sampling.
    #[serde(rename = "fullmc")]
    FullMc,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ExactEnum => "exact",
            Self::PaperFormula => "paper",
            Self::FullMc => "fullmc",
        })
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "exactenum" => Ok(Self::ExactEnum),
            "paper" | "formula" | "paperformula" => Ok(Self::PaperFormula),
            "fullmc" | "mc" => Ok(Self::FullMc),
            other => Err(Error::Parse(format!("unknown estimator {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrEstimate {
    pub p_err: f64,
    /// 95% half-width; Wilson-based when fewer than 10 failures are expected.
    pub ci_halfwidth: f64,
    pub trials: u64,
    pub estimator: EstimatorKind,
}

impl ErrEstimate {
    fn new(mean: f64, var: f64, trials: u64, estimator: EstimatorKind) -> Self {
        let n = trials.max(1) as f64;
        let ci_halfwidth = if mean * n < 10.0 {
            wilson_halfwidth(mean, n)
        } else {
            Z95 * (var / n).sqrt()
        };
        Self {
            p_err: mean,
            ci_halfwidth,
            trials,
            estimator,
        }
    }

    /// Standard error implied by the half-width.
    pub fn sigma(&self) -> f64 {
        self.ci_halfwidth / Z95
    }
}

/// Largest distance from `p` to either end of the 95% Wilson interval.
fn wilson_halfwidth(p: f64, n: f64) -> f64 {
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (center - p).abs() + half
}

/// Frames drawn for one trial.
struct TrialFrames {
    messages: Vec<BitVec>,
    inputs: Vec<BitVec>,
    targets: Vec<BitVec>,
}

fn check_code_scheme<C: LinearCode + ?Sized>(code: &C, framed: bool) -> Result<()> {
    if framed && code.message_len() <= CRC_BITS {
        return Err(Error::InvalidArg(format!(
            "CRC detection needs k > {CRC_BITS}, got {}",
            code.message_len()
        )));
    }
    Ok(())
}

fn draw_frames<C: LinearCode + ?Sized>(
    code: &C,
    scheme: &NfvScheme,
    channel: &BscChannel,
    seed: u64,
    trial: u64,
    framed: bool,
) -> TrialFrames {
    let k = code.message_len();
    let n = code.codeword_len();
    let mut messages = Vec::with_capacity(scheme.n_frames());
    let mut received = Vec::with_capacity(scheme.n_frames());
    for i in 0..scheme.n_frames() as u32 {
        let mut rng = RngStream::new(seed, trial, Purpose::Message(i));
        let message = if framed {
            append_crc(&rng.bits(k - CRC_BITS))
        } else {
            rng.bits(k)
        };
        let mut y = code.encode(&message).expect("message length matches code");
        let noise = channel.sample_noise(n, &mut RngStream::new(seed, trial, Purpose::Noise(i)));
        y.xor_assign(&noise).expect("noise length matches codeword");
        messages.push(message);
        received.push(y);
    }
    let inputs = scheme.server_inputs(&received).expect("one frame per row");
    let targets = scheme.server_targets(&messages).expect("one frame per row");
    TrialFrames {
        messages,
        inputs,
        targets,
    }
}

/// Monte Carlo estimate of the joint decode-correctness distribution with
/// genie detection: server `j` is correct when its decoder returns
/// `⊕_i G[i][j]·u_i` exactly.
pub fn estimate_joint_pmf<C: LinearCode + ?Sized>(
    code: &C,
    scheme: &NfvScheme,
    p: f64,
    trials: u64,
    seed: u64,
) -> Result<JointDecodePmf> {
    if trials == 0 {
        return Err(Error::InvalidArg("trials must be at least 1".into()));
    }
    let channel = BscChannel::new(p)?;
    check_code_scheme(code, false)?;
    let n = scheme.n_servers();
    Ok(trials::run(
        trials,
        || JointDecodePmf::new(n),
        |pmf, t| {
            let frames = draw_frames(code, scheme, &channel, seed, t, false);
            let mask = frames
                .inputs
                .iter()
                .zip(&frames.targets)
                .enumerate()
                .fold(0u64, |mask, (j, (input, target))| {
                    let decoded = code.decode(input).expect("input length matches code");
                    mask | (u64::from(&decoded == target) << j)
                });
            pmf.add(mask, 1);
        },
    ))
}

/// The two 3-server, 2-frame layouts the closed forms are written for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaperScheme {
    /// `[[1,0,0],[0,1,1]]`: server 1 must succeed, plus server 2 or 3.
    Diversity3x2,
    /// `[[1,0,1],[0,1,1]]`: any two servers suffice.
    Coded3x2,
}

impl PaperScheme {
    /// Recognizes the two layouts by their exact generator matrix.
    pub fn classify(scheme: &NfvScheme) -> Option<Self> {
        if scheme.n_frames() != 2 || scheme.n_servers() != 3 {
            return None;
        }
        let cols: Vec<u64> = (0..3).map(|j| scheme.column_word(j)).collect();
        match cols.as_slice() {
            [0b01, 0b10, 0b10] => Some(Self::Diversity3x2),
            [0b01, 0b10, 0b11] => Some(Self::Coded3x2),
            _ => None,
        }
    }

    fn counts(self, correct: u64) -> bool {
        let size = correct.count_ones();
        match self {
            Self::Diversity3x2 => size >= 2 && correct & 1 == 1,
            Self::Coded3x2 => size >= 2,
        }
    }
}

/// `P_err = 1 − Σ_S Pr(S)(1 − q)^{|S|}`, the sum running over the correct
/// sets `S` that permit recovery (`|S| ≥ 2` and, for diversity, `1 ∈ S`).
///
/// Both layouts use the complement form; the coded formula is sometimes
/// printed without the leading `1 −`.
pub fn paper_formula_perr(pmf: &JointDecodePmf, q: f64, kind: PaperScheme) -> Result<ErrEstimate> {
    ServerFailureModel::new(q, 3)?;
    if pmf.n_servers() != 3 {
        return Err(Error::InvalidArg(format!(
            "closed forms need N = 3, K = 2; pmf has N = {}",
            pmf.n_servers()
        )));
    }
    Ok(pmf.estimate(EstimatorKind::PaperFormula, |correct| {
        if kind.counts(correct) {
            1.0 - (1.0 - q).powi(correct.count_ones() as i32)
        } else {
            1.0
        }
    }))
}

/// Probability that recovery succeeds given that exactly the servers in
/// `correct` decoded correctly and each server is up with probability `1 − q`.
fn success_given_correct(scheme: &NfvScheme, correct: u64, q: f64) -> f64 {
    let size = correct.count_ones() as i32;
    let mut total = 0.0;
    let mut sub = correct;
    loop {
        if scheme.recoverable(sub) {
            let up = sub.count_ones() as i32;
            total += (1.0 - q).powi(up) * q.powi(size - up);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & correct;
    }
    total
}

/// `P_err = 1 − Σ_C pmf(C) Σ_A Pr(A)·[columns of C ∩ A have rank K]`, with the
/// availability sum done exactly.
pub fn exact_enum_perr(pmf: &JointDecodePmf, q: f64, scheme: &NfvScheme) -> Result<ErrEstimate> {
    ServerFailureModel::new(q, scheme.n_servers())?;
    if scheme.n_servers() > MAX_ENUM_SERVERS {
        return Err(Error::TooLarge {
            what: "availability patterns 2^N",
            limit: 1 << MAX_ENUM_SERVERS,
        });
    }
    if pmf.n_servers() != scheme.n_servers() {
        return Err(Error::LengthMismatch {
            expected: scheme.n_servers(),
            found: pmf.n_servers(),
        });
    }
    Ok(pmf.estimate(EstimatorKind::ExactEnum, |correct| {
        1.0 - success_given_correct(scheme, correct, q)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FullMcReport {
    pub estimate: ErrEstimate,
    pub failures: u64,
    /// Trials where the controller returned wrong messages without noticing.
    pub undetected: u64,
}

/// Simulates the whole pipeline: frames, channel noise, server availability,
/// per-server decoding and verification, then controller recovery.
pub fn full_mc_perr<C: LinearCode + ?Sized>(
    code: &C,
    scheme: &NfvScheme,
    p: f64,
    q: f64,
    trials: u64,
    seed: u64,
    mode: DetectionMode,
) -> Result<FullMcReport> {
    if trials == 0 {
        return Err(Error::InvalidArg("trials must be at least 1".into()));
    }
    let channel = BscChannel::new(p)?;
    let failures_model = ServerFailureModel::new(q, scheme.n_servers())?;
    let framed = mode == DetectionMode::Crc16;
    check_code_scheme(code, framed)?;
    let (failures, undetected) = trials::run(
        trials,
        || (0u64, 0u64),
        |acc, t| {
            let frames = draw_frames(code, scheme, &channel, seed, t, framed);
            let available = failures_model
                .sample_availability(&mut RngStream::new(seed, t, Purpose::Availability));
            let outcomes: Vec<ServerOutcome> = frames
                .inputs
                .iter()
                .zip(&frames.targets)
                .enumerate()
                .map(|(j, (input, target))| {
                    if (available >> j) & 1 == 0 {
                        return ServerOutcome::unavailable();
                    }
                    let decoded = code.decode(input).expect("input length matches code");
                    ServerOutcome {
                        available: true,
                        correct: check_decoded(mode, &decoded, Some(target)),
                        decoded: Some(decoded),
                    }
                })
                .collect();
            match scheme.recover(&outcomes).expect("one outcome per server") {
                Recovery::Recovered(messages) if messages == frames.messages => {}
                Recovery::Recovered(_) => {
                    acc.0 += 1;
                    acc.1 += 1;
                }
                Recovery::Failure | Recovery::Inconsistent => acc.0 += 1,
            }
        },
    );
    let mean = failures as f64 / trials as f64;
    Ok(FullMcReport {
        estimate: ErrEstimate::new(mean, mean * (1.0 - mean), trials, EstimatorKind::FullMc),
        failures,
        undetected,
    })
}
