//! Comparison algorithms on the four-block dual: the two-block accelerated
//! gradient method ABCGD, plain cyclic BCD and its gradient variant mBCD,
//! and the randomized accelerated eRABCD with its gradient variant eRABCD2.

mod abcgd;
mod bcd;
mod erabcd;

pub use abcgd::solve_abcgd;
pub use bcd::{solve_bcd, solve_mbcd};
pub use erabcd::{alpha_next, solve_erabcd, solve_erabcd2, AcceleratedState};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{build_gram, power_lambda_max, DenseGram, LinearMap};
use crate::problem::BestApproxInstance;

/// One of the four dual blocks, in the order `y, z, Z, S`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    Y,
    Z,
    ZMat,
    S,
}

impl Block {
    pub const ORDER: [Block; 4] = [Block::Y, Block::Z, Block::ZMat, Block::S];

    /// 1-based index in the order `y, z, Z, S`.
    pub fn index(self) -> usize {
        match self {
            Block::Y => 1,
            Block::Z => 2,
            Block::ZMat => 3,
            Block::S => 4,
        }
    }
}

/// Uniform block choices for the randomized method.
///
/// Stream: a ChaCha8 generator seeded through `seed_from_u64(seed)`; each
/// draw takes one `next_u32()` and keeps its top two bits, so the `k`-th
/// block is `Block::ORDER[(u32_k >> 30) as usize]`. ChaCha8 output is
/// specified bit for bit, which makes traces portable across platforms.
#[derive(Debug, Clone)]
pub struct RandomSchedule {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSchedule {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_block(&mut self) -> Block {
        Block::ORDER[(self.rng.next_u32() >> 30) as usize]
    }
}

impl Iterator for RandomSchedule {
    type Item = Block;

    fn next(&mut self) -> Option<Block> {
        Some(self.next_block())
    }
}

/// `(𝒜𝒜*)` factor and `λmax(ℬℬ*)`, needed by every baseline.
pub(crate) struct Setup {
    pub gram: DenseGram,
    pub lambda_b: f64,
}

impl Setup {
    pub fn new(inst: &BestApproxInstance) -> Result<Self> {
        let gram = build_gram(&inst.eq)?;
        let lambda_b = power_lambda_max(|v| inst.ineq.gram_apply(v), inst.m_ineq());
        if inst.m_ineq() > 0 && !(lambda_b > 0.0) {
            return Err(Error::Invalid("inequality map is identically zero".into()));
        }
        Ok(Self { gram, lambda_b })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_blocks() {
        let a: Vec<Block> = RandomSchedule::new(7).take(200).collect();
        let b: Vec<Block> = RandomSchedule::new(7).take(200).collect();
        let c: Vec<Block> = RandomSchedule::new(8).take(200).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn blocks_are_roughly_uniform() {
        let mut counts = [0usize; 4];
        for b in RandomSchedule::new(1).take(40_000) {
            counts[b.index() - 1] += 1;
        }
        for c in counts {
            assert!((9_000..11_000).contains(&c), "{counts:?}");
        }
    }
}
