//! Binary symmetric channel noise, independent server failures, and
//! counter-based random streams keyed by `(master seed, trial, purpose)`.

use rand::distr::{Bernoulli, Distribution};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gf2::BitVec;

fn check_probability(name: &str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::InvalidArg(format!("{name} = {value} is not in [0, 1]")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscChannel {
    p: f64,
}

impl BscChannel {
    pub fn new(p: f64) -> Result<Self> {
        check_probability("p", p)?;
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Noise vector with independent Bernoulli(p) bits.
    pub fn sample_noise(&self, len: usize, rng: &mut RngStream) -> BitVec {
        // p is validated in the constructor
        let dist = Bernoulli::new(self.p).expect("p in [0, 1]");
        BitVec::from_bits((0..len).map(|_| dist.sample(rng)))
    }
}

/// `N` servers failing independently with probability `q` each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServerFailureModel {
    q: f64,
    n_servers: usize,
}

impl ServerFailureModel {
    pub fn new(q: f64, n_servers: usize) -> Result<Self> {
        check_probability("q", q)?;
        if n_servers > 64 {
            return Err(Error::InvalidArg(format!(
                "at most 64 servers supported, got {n_servers}"
            )));
        }
        Ok(Self { q, n_servers })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n_servers(&self) -> usize {
        self.n_servers
    }

    /// Availability mask: bit `j` set when server `j` is up.
    pub fn sample_availability(&self, rng: &mut RngStream) -> u64 {
        let dist = Bernoulli::new(1.0 - self.q).expect("q in [0, 1]");
        (0..self.n_servers).fold(0u64, |mask, j| mask | (u64::from(dist.sample(rng)) << j))
    }
}

/// Probability that the XOR of `d` independent Bernoulli(p) bits is one,
/// `(1 − (1 − 2p)^d) / 2`. For `d = 2` this is `2p(1 − p)`.
pub fn effective_p(p: f64, d: usize) -> Result<f64> {
    check_probability("p", p)?;
    if d == 0 {
        return Err(Error::InvalidArg("combined frame count d must be at least 1".into()));
    }
    match d {
        1 => Ok(p),
        2 => Ok(2.0 * p * (1.0 - p)),
        _ => Ok((1.0 - (1.0 - 2.0 * p).powi(d as i32)) / 2.0),
    }
}

/// What a random stream is used for within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Message(u32),
    Noise(u32),
    Availability,
    Other(u32),
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Message(i) => (1 << 32) | u64::from(i),
            Purpose::Noise(i) => (2 << 32) | u64::from(i),
            Purpose::Availability => 3 << 32,
            Purpose::Other(i) => (4 << 32) | u64::from(i),
        }
    }
}

/// Deterministic random stream for one `(trial, purpose)` pair.
///
/// The ChaCha key is derived from the master seed and the purpose, and the
/// trial index selects the ChaCha stream, so any trial can be regenerated
/// without touching the others.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(master_seed: u64, trial: u64, purpose: Purpose) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&purpose.code().to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(trial);
        Self(rng)
    }

    /// Uniform random bit vector.
    pub fn bits(&mut self, len: usize) -> BitVec {
        let words = (0..len.div_ceil(64)).map(|_| self.next_u64()).collect();
        BitVec::from_words(words, len)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_noise() {
        let mut rng = RngStream::new(1, 0, Purpose::Noise(0));
        assert_eq!(BscChannel::new(0.0).unwrap().sample_noise(100, &mut rng), BitVec::zeros(100));
        assert_eq!(BscChannel::new(1.0).unwrap().sample_noise(100, &mut rng), BitVec::ones(100));
        assert!(BscChannel::new(1.5).is_err());
        assert!(BscChannel::new(f64::NAN).is_err());
    }

    #[test]
    fn degenerate_availability() {
        let mut rng = RngStream::new(1, 0, Purpose::Availability);
        assert_eq!(ServerFailureModel::new(0.0, 3).unwrap().sample_availability(&mut rng), 0b111);
        assert_eq!(ServerFailureModel::new(1.0, 3).unwrap().sample_availability(&mut rng), 0);
        assert!(ServerFailureModel::new(-0.1, 3).is_err());
    }

    #[test]
    fn effective_p_closed_form() {
        assert!((effective_p(0.05, 2).unwrap() - 0.095).abs() < 1e-15);
        assert_eq!(effective_p(0.3, 1).unwrap(), 0.3);
        assert!(effective_p(0.1, 0).is_err());
        // brute-force parity over the 8 noise patterns of three bits
        let p: f64 = 0.05;
        let brute: f64 = (0u32..8)
            .filter(|z| z.count_ones() % 2 == 1)
            .map(|z| p.powi(z.count_ones() as i32) * (1.0 - p).powi(3 - z.count_ones() as i32))
            .sum();
        assert!((effective_p(p, 3).unwrap() - brute).abs() < 1e-15);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = RngStream::new(7, 3, Purpose::Noise(1)).bits(256);
        let b = RngStream::new(7, 3, Purpose::Noise(1)).bits(256);
        assert_eq!(a, b);
        assert_ne!(a, RngStream::new(7, 4, Purpose::Noise(1)).bits(256));
        assert_ne!(a, RngStream::new(7, 3, Purpose::Noise(0)).bits(256));
        assert_ne!(a, RngStream::new(8, 3, Purpose::Noise(1)).bits(256));
        assert_ne!(a, RngStream::new(7, 3, Purpose::Message(1)).bits(256));
    }
}
