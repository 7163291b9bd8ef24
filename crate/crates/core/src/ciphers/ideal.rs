use std::sync::OnceLock;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::BlockCipher;
use crate::bitblocks::{Block, BlockWidth};
use crate::error::{Error, Result};

/// A uniformly random permutation stored as a lookup table, standing in for
/// an ideal block cipher.
///
/// The table is a seeded Fisher-Yates shuffle of `0..2^n`; the same seed
/// and width always give the same permutation. The inverse table is built
/// on first decryption, so encrypt-only uses such as IV derivation skip it.
#[derive(Clone)]
pub struct IdealCipher {
    width: BlockWidth,
    forward: Vec<u32>,
    inverse: OnceLock<Vec<u32>>,
}

impl IdealCipher {
    pub const MAX_BITS: u32 = 20;

    pub fn new(seed: u64, width: BlockWidth) -> Result<Self> {
        Self::check_width(width)?;
        let size = 1usize << width.bits();
        let mut forward: Vec<u32> = (0..size as u32).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        shuffle(&mut forward, &mut rng);
        Ok(Self {
            width,
            forward,
            inverse: OnceLock::new(),
        })
    }

    pub fn check_width(width: BlockWidth) -> Result<()> {
        if width.bits() > Self::MAX_BITS {
            return Err(Error::Capacity {
                bits: width.bits(),
                max: Self::MAX_BITS,
            });
        }
        Ok(())
    }

    pub fn table(&self) -> &[u32] {
        &self.forward
    }

    fn inverse(&self) -> &[u32] {
        self.inverse.get_or_init(|| {
            let mut inverse = vec![0u32; self.forward.len()];
            for (x, &y) in self.forward.iter().enumerate() {
                inverse[y as usize] = x as u32;
            }
            inverse
        })
    }
}

// Fisher-Yates with Lemire's nearly divisionless bounded draw. Table
// construction dominates experiments at n = 16, and `gen_range` divides on
// every call.
fn shuffle(table: &mut [u32], rng: &mut ChaCha8Rng) {
    for i in (1..table.len()).rev() {
        let j = below(rng, i as u32 + 1);
        table.swap(i, j as usize);
    }
}

// Uniform in 0..bound.
fn below(rng: &mut ChaCha8Rng, bound: u32) -> u32 {
    let mut m = u64::from(rng.next_u32()) * u64::from(bound);
    if (m as u32) < bound {
        let threshold = bound.wrapping_neg() % bound;
        while (m as u32) < threshold {
            m = u64::from(rng.next_u32()) * u64::from(bound);
        }
    }
    (m >> 32) as u32
}

impl std::fmt::Debug for IdealCipher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IdealCipher").field("width", &self.width).finish_non_exhaustive()
    }
}

impl BlockCipher for IdealCipher {
    fn width(&self) -> BlockWidth {
        self.width
    }

    #[inline]
    fn encrypt_block(&self, x: Block) -> Block {
        Block::truncated(self.width, self.forward[x.value() as usize] as u128)
    }

    #[inline]
    fn decrypt_block(&self, y: Block) -> Block {
        Block::truncated(self.width, self.inverse()[y.value() as usize] as u128)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(n: u32) -> BlockWidth {
        BlockWidth::new(n).unwrap()
    }

    #[test]
    fn deterministic_per_seed_and_width() {
        let a = IdealCipher::new(42, w(8)).unwrap();
        let b = IdealCipher::new(42, w(8)).unwrap();
        assert_eq!(a.table(), b.table());
        let c = IdealCipher::new(43, w(8)).unwrap();
        assert_ne!(a.table(), c.table());
    }

    #[test]
    fn table_is_a_permutation() {
        let c = IdealCipher::new(1, w(8)).unwrap();
        let mut sorted = c.table().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..256).collect::<Vec<u32>>());
    }

    #[test]
    fn all_permutations_equally_likely() {
        // Each of the 24 permutations of a 2-bit block should turn up about
        // 2000 times; 23 degrees of freedom, 0.1% critical value 49.7.
        let mut counts = std::collections::HashMap::new();
        let seeds = 48_000u64;
        for seed in 0..seeds {
            let c = IdealCipher::new(seed, w(2)).unwrap();
            *counts.entry(c.table().to_vec()).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 24);
        let expected = seeds as f64 / 24.0;
        let chi2: f64 = counts.values().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 49.7, "chi-square {chi2}");
    }

    #[test]
    fn capacity_enforced() {
        assert_eq!(
            IdealCipher::new(0, w(22)).unwrap_err(),
            Error::Capacity { bits: 22, max: 20 }
        );
    }

    #[test]
    fn fixed_points_average_about_one() {
        // A uniform random permutation has one fixed point on average, with
        // variance one; 64 seeds give a standard error of 1/8.
        let total: usize = (0..64u64)
            .map(|seed| {
                let c = IdealCipher::new(seed, w(8)).unwrap();
                c.table().iter().enumerate().filter(|&(x, &y)| x as u32 == y).count()
            })
            .sum();
        let mean = total as f64 / 64.0;
        assert!((mean - 1.0).abs() < 0.5, "mean fixed points {mean}");
    }
}
