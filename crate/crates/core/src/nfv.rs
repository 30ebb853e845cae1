//! The NFV layer: how `K` received frames are mapped onto `N` decoding
//! servers through a `K × N` generator matrix, and how the controller
//! recovers all messages from whichever servers come back correct.
//!
//! Server `j` receives `⊕_i G[i][j]·y_i`. Since the channel code is linear,
//! that input is a noisy codeword of `⊕_i G[i][j]·u_i`, which is what the
//! server's decoder targets.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_len, Error, Result};
use crate::gf2::{rank_of_words, solve, BitMatrix, BitVec};

/// Server masks are `u64`, so at most 64 servers (and 64 frames).
pub const MAX_SERVERS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NfvScheme {
    g: BitMatrix,
    name: String,
    columns: Vec<u64>,
}

impl NfvScheme {
    /// Validates that `g` has full row rank and no all-zero column.
    pub fn new(g: BitMatrix, name: impl Into<String>) -> Result<Self> {
        let (k, n) = (g.n_rows(), g.n_cols());
        if k == 0 || n > MAX_SERVERS || k > MAX_SERVERS {
            return Err(Error::InvalidArg(format!(
                "scheme must have 1..={MAX_SERVERS} frames and at most {MAX_SERVERS} servers, got K={k}, N={n}"
            )));
        }
        let rank = g.rank();
        if rank < k {
            return Err(Error::RankDeficient { rank, needed: k });
        }
        if let Some(j) = (0..n).find(|&j| g.column_weight(j) == 0) {
            return Err(Error::InvalidArg(format!("server {} receives no frame", j + 1)));
        }
        let columns = g.column_words().expect("at most 64 rows");
        Ok(Self {
            g,
            name: name.into(),
            columns,
        })
    }

    /// Identity on the first `K` servers; every extra server duplicates the
    /// last frame.
    pub fn diversity(n_servers: usize, n_frames: usize) -> Result<Self> {
        check_sizes(n_servers, n_frames)?;
        let mut g = BitMatrix::zeros(n_frames, n_servers);
        for j in 0..n_servers {
            g.set(j.min(n_frames - 1), j, true);
        }
        Self::new(g, "diversity")
    }

    /// Identity on the first `K` servers; every extra server gets the XOR of
    /// all frames.
    pub fn coded_xor(n_servers: usize, n_frames: usize) -> Result<Self> {
        check_sizes(n_servers, n_frames)?;
        let mut g = BitMatrix::zeros(n_frames, n_servers);
        for i in 0..n_frames {
            g.set(i, i, true);
            for j in n_frames..n_servers {
                g.set(i, j, true);
            }
        }
        Self::new(g, "coded")
    }

    pub fn matrix(&self) -> &BitMatrix {
        &self.g
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_frames(&self) -> usize {
        self.g.n_rows()
    }

    pub fn n_servers(&self) -> usize {
        self.g.n_cols()
    }

    /// Column `j` of the generator as a frame mask.
    pub fn column_word(&self, j: usize) -> u64 {
        self.columns[j]
    }

    /// Number of frames combined at each server.
    pub fn column_weights(&self) -> Vec<usize> {
        self.g.column_weights()
    }

    /// Whether the servers in `mask` determine every message.
    pub fn recoverable(&self, mask: u64) -> bool {
        let cols: Vec<u64> = (0..self.n_servers())
            .filter(|j| (mask >> j) & 1 == 1)
            .map(|j| self.columns[j])
            .collect();
        rank_of_words(&cols) == self.n_frames()
    }

    /// Inputs to the `N` servers: server `j` gets the XOR of the received
    /// frames selected by column `j`.
    pub fn server_inputs(&self, received: &[BitVec]) -> Result<Vec<BitVec>> {
        check_len(self.n_frames(), received.len())?;
        let len = received[0].len();
        (0..self.n_servers())
            .map(|j| {
                let mut acc = BitVec::zeros(len);
                for (i, y) in received.iter().enumerate() {
                    if (self.columns[j] >> i) & 1 == 1 {
                        acc.xor_assign(y)?;
                    }
                }
                Ok(acc)
            })
            .collect()
    }

    /// Reference outputs of the servers: `⊕_i G[i][j]·u_i` for each `j`.
    pub fn server_targets(&self, messages: &[BitVec]) -> Result<Vec<BitVec>> {
        self.server_inputs(messages)
    }

    /// Controller recovery from the trusted server outputs.
    pub fn recover(&self, outcomes: &[ServerOutcome]) -> Result<Recovery> {
        check_len(self.n_servers(), outcomes.len())?;
        let trusted: Vec<usize> = outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_trusted())
            .map(|(j, _)| j)
            .collect();
        let mask = trusted.iter().fold(0u64, |m, &j| m | (1 << j));
        if !self.recoverable(mask) {
            return Ok(Recovery::Failure);
        }
        let rhs: Vec<BitVec> = trusted
            .iter()
            .map(|&j| outcomes[j].decoded.clone().expect("trusted output present"))
            .collect();
        match solve(&self.g.select_columns(&trusted), &rhs) {
            Ok(messages) => Ok(Recovery::Recovered(messages)),
            Err(Error::InconsistentSystem) => Ok(Recovery::Inconsistent),
            Err(e) => Err(e),
        }
    }

    /// Minimum number of server removals that makes recovery impossible.
    ///
    /// Removing the servers in `R` loses recovery exactly when some nonzero
    /// codeword `u·G` is supported inside `R`, so this equals the minimum
    /// distance of `G`.
    pub fn mfr(&self) -> usize {
        self.g.min_distance().expect("full-rank scheme has nonzero codewords")
    }

    /// A minimal set of servers (0-based) whose removal prevents recovery:
    /// the support of a minimum-weight codeword.
    pub fn mfr_witness(&self) -> Vec<usize> {
        let (_, codeword) = self
            .g
            .min_weight_codeword()
            .expect("full-rank scheme has nonzero codewords");
        codeword.support()
    }

    /// MFR by direct search over removal sets of increasing size.
    pub fn mfr_subset_search(&self) -> Result<usize> {
        let n = self.n_servers();
        if n > 20 {
            return Err(Error::TooLarge {
                what: "server subsets 2^N",
                limit: 1 << 20,
            });
        }
        let all = (1u64 << n) - 1;
        let mut best = n;
        for removed in 0..=all {
            let size = removed.count_ones() as usize;
            if size < best && !self.recoverable(all & !removed) {
                best = size;
            }
        }
        Ok(best)
    }
}

fn check_sizes(n_servers: usize, n_frames: usize) -> Result<()> {
    if n_frames == 0 || n_servers < n_frames {
        return Err(Error::InvalidArg(format!(
            "need N >= K >= 1, got N={n_servers}, K={n_frames}"
        )));
    }
    Ok(())
}

/// What server `j` reported back to the controller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerOutcome {
    pub available: bool,
    pub decoded: Option<BitVec>,
    /// Verdict of the error-detection step (genie or CRC).
    pub correct: bool,
}

impl ServerOutcome {
    pub fn unavailable() -> Self {
        Self {
            available: false,
            decoded: None,
            correct: false,
        }
    }

    fn is_trusted(&self) -> bool {
        self.available && self.correct && self.decoded.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Recovery {
    Recovered(Vec<BitVec>),
    /// Trusted servers do not span all frames.
    Failure,
    /// Trusted outputs contradict each other; only possible with an
    /// undetected decoding error.
    Inconsistent,
}

/// A scheme named on the command line or in a config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SchemeSpec {
    Diversity,
    Coded,
    /// Rows separated by `/`, e.g. `matrix:101/011`.
    Matrix(BitMatrix),
}

impl SchemeSpec {
    /// Instantiates the scheme; `N` and `K` are ignored for explicit matrices.
    pub fn build(&self, n_servers: usize, n_frames: usize) -> Result<NfvScheme> {
        match self {
            SchemeSpec::Diversity => NfvScheme::diversity(n_servers, n_frames),
            SchemeSpec::Coded => NfvScheme::coded_xor(n_servers, n_frames),
            SchemeSpec::Matrix(g) => NfvScheme::new(g.clone(), self.to_string()),
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "diversity" => Ok(Self::Diversity),
            "coded" => Ok(Self::Coded),
            _ => match s.strip_prefix("matrix:") {
                Some(rows) => Ok(Self::Matrix(rows.replace('/', "\n").parse()?)),
                None => Err(Error::Parse(format!(
                    "unknown scheme {s:?}; expected diversity, coded or matrix:<rows>"
                ))),
            },
        }
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeSpec::Diversity => f.write_str("diversity"),
            SchemeSpec::Coded => f.write_str("coded"),
            SchemeSpec::Matrix(g) => write!(f, "matrix:{}", g.to_string().replace('\n', "/")),
        }
    }
}
