use super::BlockCipher;
use crate::bitblocks::{Block, BlockWidth};
use crate::error::{Error, Result};

/// Balanced Feistel network over the two `n/2`-bit halves.
///
/// Round function: `F(x, k_i) = mix64(x ^ k_i)` truncated to `n/2` bits,
/// where `mix64` is the SplitMix64 output finalizer. Round keys come from a
/// SplitMix64 stream seeded with the 128-bit key. No security is claimed;
/// this backend exists to run the modes at widths where tables do not fit.
#[derive(Clone, Debug)]
pub struct FeistelCipher {
    width: BlockWidth,
    half_mask: u128,
    round_keys: Vec<u64>,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl FeistelCipher {
    pub const MIN_ROUNDS: u32 = 8;

    pub fn new(key: u128, width: BlockWidth, rounds: u32) -> Result<Self> {
        Self::check_params(width, rounds)?;
        let mut state = (key as u64) ^ mix64((key >> 64) as u64 ^ GOLDEN_GAMMA);
        let round_keys = (0..rounds)
            .map(|_| {
                state = state.wrapping_add(GOLDEN_GAMMA);
                mix64(state)
            })
            .collect();
        let half_mask = Block::ones(width).halves().1;
        Ok(Self {
            width,
            half_mask,
            round_keys,
        })
    }

    /// Any even width works; only the round count is constrained.
    pub fn check_params(_width: BlockWidth, rounds: u32) -> Result<()> {
        if rounds < Self::MIN_ROUNDS {
            return Err(Error::Config(format!(
                "Feistel needs at least {} rounds, got {rounds}",
                Self::MIN_ROUNDS
            )));
        }
        Ok(())
    }

    pub fn rounds(&self) -> usize {
        self.round_keys.len()
    }

    #[inline]
    fn round(&self, x: u128, key: u64) -> u128 {
        (mix64(x as u64 ^ key) as u128) & self.half_mask
    }
}

impl BlockCipher for FeistelCipher {
    fn width(&self) -> BlockWidth {
        self.width
    }

    fn encrypt_block(&self, x: Block) -> Block {
        let (mut l, mut r) = x.halves();
        for &k in &self.round_keys {
            let next = l ^ self.round(r, k);
            l = r;
            r = next;
        }
        Block::from_halves(self.width, l, r)
    }

    fn decrypt_block(&self, y: Block) -> Block {
        let (mut l, mut r) = y.halves();
        for &k in self.round_keys.iter().rev() {
            let prev = r ^ self.round(l, k);
            r = l;
            l = prev;
        }
        Block::from_halves(self.width, l, r)
    }
}
