use num_integer::{gcd, lcm};
use serde::Serialize;

use super::block::{Block, BlockWidth};
use crate::error::{Error, Result};

/// A permutation of bit positions within an `n`-bit block.
///
/// `mapping[i]` is the position that bit `i` moves to. Positions are
/// 0-based internally, 0 being the leftmost bit.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct PositionPermutation {
    mapping: Vec<u16>,
}

impl PositionPermutation {
    pub fn new(mapping: Vec<u16>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &target in &mapping {
            let t = target as usize;
            if t >= n || seen[t] {
                return Err(Error::InvalidParameter(format!(
                    "position mapping is not a bijection on 0..{n}"
                )));
            }
            seen[t] = true;
        }
        Ok(Self { mapping })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mapping: (0..n as u16).collect(),
        }
    }

    /// The bit permutation realized by the IOBC feedback function.
    pub fn iobc(width: BlockWidth) -> Result<Self> {
        width.require_multiple_of_four()?;
        let m = width.half() as usize;
        let left = m - 1;
        let right = m + 1;
        let mut mapping = Vec::with_capacity(width.bits() as usize);
        mapping.extend((0..left).map(|i| ((i + 1) % left) as u16));
        mapping.extend((0..right).map(|i| (left + (i + 1) % right) as u16));
        Ok(Self { mapping })
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    pub fn mapping(&self) -> &[u16] {
        &self.mapping
    }

    /// Moves every bit of `x` to its mapped position.
    pub fn apply(&self, x: Block) -> Result<Block> {
        let n = x.width().bits() as usize;
        if n != self.mapping.len() {
            return Err(Error::WidthMismatch {
                left: n as u32,
                right: self.mapping.len() as u32,
            });
        }
        let mut out = 0u128;
        for (from, &to) in self.mapping.iter().enumerate() {
            let bit = (x.value() >> (n - 1 - from)) & 1;
            out |= bit << (n - 1 - to as usize);
        }
        Block::new(x.width(), out)
    }

    /// `self` applied `k` times.
    pub fn power(&self, k: u64) -> Self {
        let mapping = (0..self.mapping.len())
            .map(|start| {
                let mut pos = start;
                // Cycle lengths bound the walk, so reduce k per cycle.
                let cycle = self.cycle_len_of(start) as u64;
                for _ in 0..(k % cycle) {
                    pos = self.mapping[pos] as usize;
                }
                pos as u16
            })
            .collect();
        Self { mapping }
    }

    fn cycle_len_of(&self, start: usize) -> usize {
        let mut len = 1;
        let mut pos = self.mapping[start] as usize;
        while pos != start {
            pos = self.mapping[pos] as usize;
            len += 1;
        }
        len
    }

    /// Cycle lengths, in order of each cycle's smallest position.
    pub fn cycle_lengths(&self) -> Vec<u64> {
        let mut seen = vec![false; self.mapping.len()];
        let mut lengths = Vec::new();
        for start in 0..self.mapping.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0u64;
            let mut pos = start;
            while !seen[pos] {
                seen[pos] = true;
                pos = self.mapping[pos] as usize;
                len += 1;
            }
            lengths.push(len);
        }
        lengths
    }

    /// Least `i >= 1` with `p^i` the identity: the lcm of the cycle lengths.
    pub fn order(&self) -> u128 {
        self.cycle_lengths()
            .into_iter()
            .fold(1u128, |acc, len| lcm(acc, len as u128))
    }

    /// `log2` of the fraction of blocks fixed by `p^k`.
    ///
    /// A cycle of length `L` splits into `gcd(L, k)` cycles under `p^k`, and
    /// a block is fixed exactly when it is constant on every cycle, so the
    /// fraction is `2^(c - n)` for `c` cycles in total.
    pub fn fixed_point_log2_fraction(&self, k: u64) -> Result<i32> {
        if k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        let cycles: u64 = self.cycle_lengths().into_iter().map(|len| gcd(len, k)).sum();
        Ok(cycles as i32 - self.mapping.len() as i32)
    }
}

pub fn iobc_position_permutation(width: BlockWidth) -> Result<PositionPermutation> {
    PositionPermutation::iobc(width)
}

pub fn permutation_order(p: &PositionPermutation) -> u128 {
    p.order()
}

pub fn fixed_point_log2_fraction(p: &PositionPermutation, k: u64) -> Result<i32> {
    p.fixed_point_log2_fraction(k)
}
