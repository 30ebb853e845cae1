//! Feedforward convolutional codes with hard-decision Viterbi decoding, and
//! the CRC wrapper used for realistic error detection.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::gf2::BitVec;

/// A binary linear code mapping `k`-bit messages to `n`-bit codewords.
///
/// Implementations must be GF(2)-linear: the in-network XOR of received
/// frames relies on `encode(a ⊕ b) == encode(a) ⊕ encode(b)`.
pub trait LinearCode: Sync {
    fn message_len(&self) -> usize;
    fn codeword_len(&self) -> usize;
    fn encode(&self, message: &BitVec) -> Result<BitVec>;
    /// Maximum-likelihood message estimate for a BSC with crossover below 1/2.
    fn decode(&self, received: &BitVec) -> Result<BitVec>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Termination {
    /// The encoder is not flushed; `n = rate_inverse · k`.
    #[default]
    Unterminated,
    /// `constraint_length − 1` zero bits flush the register; `n = rate_inverse · (k + constraint_length − 1)`.
    ZeroTail,
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "unterminated" | "none" => Ok(Self::Unterminated),
            "zerotail" | "zero-tail" | "zero_tail" | "tail" => Ok(Self::ZeroTail),
            other => Err(Error::Parse(format!("unknown termination {other:?}"))),
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Unterminated => "unterminated",
            Self::ZeroTail => "zerotail",
        })
    }
}

/// Largest supported constraint length (2^15 trellis states).
pub const MAX_CONSTRAINT_LENGTH: usize = 16;

/// Rate `1/taps.len()` feedforward convolutional code over `k`-bit frames.
///
/// Tap `g` is read most-significant bit first: its top bit (bit
/// `constraint_length − 1`) multiplies the current input and lower bits
/// multiply progressively older inputs. `171` octal is `1111001`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvCode {
    constraint_length: usize,
    taps: Vec<u32>,
    k: usize,
    termination: Termination,
    // outputs[state << 1 | input]: one output bit per tap, tap 0 in bit 0
    outputs: Vec<u32>,
    // metric_table[symbol * 2·states + (state << 1 | input)], when small enough
    metric_table: Option<Vec<u32>>,
}

const MAX_METRIC_TABLE: usize = 1 << 20;

impl ConvCode {
    pub fn new(
        constraint_length: usize,
        taps: Vec<u32>,
        k: usize,
        termination: Termination,
    ) -> Result<Self> {
        if !(2..=MAX_CONSTRAINT_LENGTH).contains(&constraint_length) {
            return Err(Error::InvalidArg(format!(
                "constraint length must be in 2..={MAX_CONSTRAINT_LENGTH}, got {constraint_length}"
            )));
        }
        if taps.is_empty() || taps.len() > 32 {
            return Err(Error::InvalidArg(format!(
                "need between 1 and 32 taps, got {}",
                taps.len()
            )));
        }
        if let Some(t) = taps.iter().find(|&&t| t >> constraint_length != 0) {
            return Err(Error::InvalidArg(format!(
                "tap {t:o} has more than {constraint_length} bits"
            )));
        }
        if !taps.iter().any(|&t| t >> (constraint_length - 1) == 1) {
            return Err(Error::InvalidArg(
                "no tap uses the current input bit".into(),
            ));
        }
        if k == 0 {
            return Err(Error::InvalidArg("message length k must be positive".into()));
        }
        let states = 1usize << (constraint_length - 1);
        let outputs = (0..2 * states)
            .map(|idx| {
                let state = (idx >> 1) as u32;
                let input = (idx & 1) as u32;
                let reg = (input << (constraint_length - 1)) | state;
                taps.iter()
                    .enumerate()
                    .fold(0u32, |acc, (t, &g)| acc | (((g & reg).count_ones() & 1) << t))
            })
            .collect::<Vec<u32>>();
        let symbols = 1usize << taps.len().min(21);
        let metric_table = (symbols * outputs.len() <= MAX_METRIC_TABLE).then(|| {
            (0..symbols as u32)
                .flat_map(|sym| outputs.iter().map(move |&o| (o ^ sym).count_ones()))
                .collect()
        });
        Ok(Self {
            constraint_length,
            taps,
            k,
            termination,
            outputs,
            metric_table,
        })
    }

    /// The constraint-length-7 rate-1/2 code with generators 171 and 133 (octal).
    pub fn standard_k7(k: usize, termination: Termination) -> Result<Self> {
        Self::new(7, vec![0o171, 0o133], k, termination)
    }

    pub fn constraint_length(&self) -> usize {
        self.constraint_length
    }

    pub fn taps(&self) -> &[u32] {
        &self.taps
    }

    pub fn rate_inverse(&self) -> usize {
        self.taps.len()
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn tail_bits(&self) -> usize {
        match self.termination {
            Termination::Unterminated => 0,
            Termination::ZeroTail => self.constraint_length - 1,
        }
    }

    fn steps(&self) -> usize {
        self.k + self.tail_bits()
    }

    fn n_states(&self) -> usize {
        1 << (self.constraint_length - 1)
    }

    /// Decodes with caller-provided trellis memory.
    pub fn decode_with(&self, received: &BitVec, scratch: &mut ViterbiScratch) -> Result<BitVec> {
        check_len(self.codeword_len(), received.len())?;
        let states = self.n_states();
        let steps = self.steps();
        let r = self.rate_inverse();
        let shift = self.constraint_length - 2;
        let mask = states - 1;
        let words_per_step = states.div_ceil(64);
        const UNREACHED: u32 = u32::MAX / 2;

        scratch.metrics.clear();
        scratch.metrics.resize(states, UNREACHED);
        scratch.metrics[0] = 0;
        scratch.next.clear();
        scratch.next.resize(states, 0);
        scratch.decisions.clear();
        scratch.decisions.resize(steps * words_per_step, 0);

        for t in 0..steps {
            let symbol = (0..r).fold(0u32, |acc, j| {
                acc | (u32::from(received.get(t * r + j)) << j)
            });
            let decisions = &mut scratch.decisions[t * words_per_step..(t + 1) * words_per_step];
            let branch: &[u32] = match &self.metric_table {
                Some(table) => {
                    let width = 2 * states;
                    &table[symbol as usize * width..(symbol as usize + 1) * width]
                }
                None => {
                    scratch.branch.clear();
                    scratch
                        .branch
                        .extend(self.outputs.iter().map(|&o| (o ^ symbol).count_ones()));
                    &scratch.branch
                }
            };
            // Butterfly: predecessors 2i and 2i+1 feed next states i (input 0)
            // and i + states/2 (input 1).
            let half = states / 2;
            let (lo, hi) = scratch.next[..states].split_at_mut(half);
            let butterflies = scratch.metrics[..states]
                .chunks_exact(2)
                .zip(branch.chunks_exact(4))
                .zip(lo.iter_mut().zip(hi.iter_mut()));
            for (i, ((old, bm), (to_lo, to_hi))) in butterflies.enumerate() {
                // ties keep the lower-numbered predecessor
                let (m0, m1) = (old[0] + bm[0], old[1] + bm[2]);
                let odd_lo = m1 < m0;
                *to_lo = if odd_lo { m1 } else { m0 };
                let (m0, m1) = (old[0] + bm[1], old[1] + bm[3]);
                let odd_hi = m1 < m0;
                *to_hi = if odd_hi { m1 } else { m0 };
                decisions[i / 64] |= u64::from(odd_lo) << (i % 64);
                let j = i + half;
                decisions[j / 64] |= u64::from(odd_hi) << (j % 64);
            }
            std::mem::swap(&mut scratch.metrics, &mut scratch.next);
        }

        let mut state = match self.termination {
            Termination::ZeroTail => 0,
            Termination::Unterminated => scratch
                .metrics
                .iter()
                .enumerate()
                .min_by_key(|&(s, &m)| (m, s))
                .map_or(0, |(s, _)| s),
        };
        let mut message = BitVec::zeros(self.k);
        for t in (0..steps).rev() {
            let input = state >> shift;
            if t < self.k {
                message.set(t, input == 1);
            }
            let d = (scratch.decisions[t * words_per_step + state / 64] >> (state % 64)) & 1;
            state = ((state << 1) & mask) | d as usize;
        }
        Ok(message)
    }
}

/// Reusable trellis buffers for [`ConvCode::decode_with`].
#[derive(Debug, Default, Clone)]
pub struct ViterbiScratch {
    metrics: Vec<u32>,
    next: Vec<u32>,
    decisions: Vec<u64>,
    branch: Vec<u32>,
}

impl LinearCode for ConvCode {
    fn message_len(&self) -> usize {
        self.k
    }

    fn codeword_len(&self) -> usize {
        self.rate_inverse() * self.steps()
    }

    fn encode(&self, message: &BitVec) -> Result<BitVec> {
        check_len(self.k, message.len())?;
        let r = self.rate_inverse();
        let mut out = BitVec::zeros(self.codeword_len());
        let mut state = 0usize;
        for t in 0..self.steps() {
            let input = usize::from(t < self.k && message.get(t));
            let symbol = self.outputs[(state << 1) | input];
            for j in 0..r {
                if (symbol >> j) & 1 == 1 {
                    out.set(t * r + j, true);
                }
            }
            state = ((input << (self.constraint_length - 1)) | state) >> 1;
        }
        Ok(out)
    }

    fn decode(&self, received: &BitVec) -> Result<BitVec> {
        self.decode_with(received, &mut ViterbiScratch::default())
    }
}

/// Parses comma- or whitespace-separated octal generator polynomials, e.g. `"171,133"`.
pub fn parse_octal_taps(s: &str) -> Result<Vec<u32>> {
    let taps = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            u32::from_str_radix(t, 8).map_err(|e| Error::Parse(format!("bad octal tap {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if taps.is_empty() {
        return Err(Error::Parse("no taps given".into()));
    }
    Ok(taps)
}

pub fn format_octal_taps(taps: &[u32]) -> String {
    taps.iter()
        .map(|t| format!("{t:o}"))
        .collect::<Vec<_>>()
        .join(",")
}

/// How a controller decides whether a server's decoded output is correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetectionMode {
    /// Compare against the true message inside the simulator.
    #[default]
    Genie,
    /// Verify the trailing 16-bit CRC carried in the message.
    Crc16,
}

impl FromStr for DetectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "genie" => Ok(Self::Genie),
            "crc" | "crc16" => Ok(Self::Crc16),
            other => Err(Error::Parse(format!("unknown detection mode {other:?}"))),
        }
    }
}

impl fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Genie => "genie",
            Self::Crc16 => "crc16",
        })
    }
}

pub const CRC_BITS: usize = 16;
const CRC_POLY: u16 = 0x1021;

/// CRC-16 with polynomial x^16+x^12+x^5+1 and zero initial register.
///
/// The zero initial value keeps the check linear, so the XOR of two framed
/// messages is itself a validly framed message.
pub fn crc16(bits: &BitVec) -> u16 {
    bits.iter().fold(0u16, |reg, b| {
        let feedback = ((reg >> 15) & 1 == 1) ^ b;
        let reg = reg << 1;
        if feedback {
            reg ^ CRC_POLY
        } else {
            reg
        }
    })
}

/// Appends the 16-bit CRC of `payload`, most significant bit first.
pub fn append_crc(payload: &BitVec) -> BitVec {
    let crc = crc16(payload);
    let mut out = payload.clone();
    for i in (0..CRC_BITS).rev() {
        out.push((crc >> i) & 1 == 1);
    }
    out
}

/// Whether the trailing CRC of a framed message verifies.
pub fn crc_verifies(message: &BitVec) -> bool {
    // remainder of payload ‖ crc is zero
    message.len() >= CRC_BITS && crc16(message) == 0
}

/// Accept/reject verdict on a decoder output. In genie mode `truth` is
/// required; in CRC mode it is ignored.
pub fn check_decoded(mode: DetectionMode, decoded: &BitVec, truth: Option<&BitVec>) -> bool {
    match mode {
        DetectionMode::Genie => truth.is_some_and(|t| t == decoded),
        DetectionMode::Crc16 => crc_verifies(decoded),
    }
}
