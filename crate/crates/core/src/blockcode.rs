//! Small binary linear block codes with exhaustive maximum-likelihood decoding.

use crate::convcode::LinearCode;
use crate::error::{check_len, Error, Result};
use crate::gf2::{BitMatrix, BitVec, MAX_ENUM_ROWS};

/// Block code given by a `k × n` generator; decoding searches all `2^k`
/// codewords and breaks distance ties toward the lowest message index
/// (message bit `i` weighted `2^i`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockCode {
    generator: BitMatrix,
    codewords: Vec<BitVec>,
}

impl BlockCode {
    pub fn new(generator: BitMatrix) -> Result<Self> {
        let k = generator.n_rows();
        if k == 0 || k > MAX_ENUM_ROWS {
            return Err(Error::InvalidArg(format!(
                "block code needs 1..={MAX_ENUM_ROWS} message bits, got {k}"
            )));
        }
        if generator.rank() < k {
            return Err(Error::RankDeficient {
                rank: generator.rank(),
                needed: k,
            });
        }
        let codewords = (0..1u64 << k)
            .map(|u| generator.encode(&BitVec::from_u64(u, k)))
            .collect::<Result<_>>()?;
        Ok(Self {
            generator,
            codewords,
        })
    }

    /// `(n, 1)` repetition code.
    pub fn repetition(n: usize) -> Result<Self> {
        Self::new(BitMatrix::from_rows(vec![BitVec::ones(n)])?)
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }
}

impl LinearCode for BlockCode {
    fn message_len(&self) -> usize {
        self.generator.n_rows()
    }

    fn codeword_len(&self) -> usize {
        self.generator.n_cols()
    }

    fn encode(&self, message: &BitVec) -> Result<BitVec> {
        self.generator.encode(message)
    }

    fn decode(&self, received: &BitVec) -> Result<BitVec> {
        check_len(self.codeword_len(), received.len())?;
        let mut best = (usize::MAX, 0u64);
        for (u, cw) in self.codewords.iter().enumerate() {
            let d = cw.distance(received)?;
            if d < best.0 {
                best = (d, u as u64);
            }
        }
        Ok(BitVec::from_u64(best.1, self.message_len()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn repetition_majority() {
        let c = BlockCode::repetition(3).unwrap();
        assert_eq!(c.encode(&"1".parse().unwrap()).unwrap(), BitVec::ones(3));
        for (y, u) in [("000", "0"), ("010", "0"), ("110", "1"), ("111", "1"), ("101", "1")] {
            assert_eq!(c.decode(&y.parse().unwrap()).unwrap(), u.parse().unwrap(), "{y}");
        }
    }

    #[test]
    fn hamming_corrects_single_errors() {
        let g: BitMatrix = "1000110\n0100101\n0010011\n0001111".parse().unwrap();
        let c = BlockCode::new(g).unwrap();
        for u in 0..16 {
            let u = BitVec::from_u64(u, 4);
            let x = c.encode(&u).unwrap();
            for i in 0..7 {
                let mut y = x.clone();
                y.flip(i);
                assert_eq!(c.decode(&y).unwrap(), u);
            }
        }
    }

    #[test]
    fn rejects_rank_deficient_generator() {
        let g: BitMatrix = "110\n110".parse().unwrap();
        assert!(BlockCode::new(g).is_err());
    }
}
