use std::fmt;
use std::ops::BitXor;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Cipher block length in bits.
///
/// Always even (the EPBC feedback splits a block into equal halves) and at
/// most 128 so that a block fits in one machine word pair.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct BlockWidth(u32);

impl BlockWidth {
    pub const MAX_BITS: u32 = 128;

    pub fn new(bits: u32) -> Result<Self> {
        if !(2..=Self::MAX_BITS).contains(&bits) {
            return Err(Error::InvalidWidth {
                bits,
                reason: "must lie in 2..=128",
            });
        }
        if !bits.is_multiple_of(2) {
            return Err(Error::InvalidWidth {
                bits,
                reason: "must be even",
            });
        }
        Ok(Self(bits))
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.0
    }

    /// m = n/2.
    #[inline]
    pub fn half(self) -> u32 {
        self.0 / 2
    }

    /// Serialized length, `ceil(n/8)`.
    #[inline]
    pub fn byte_len(self) -> usize {
        (self.0 as usize).div_ceil(8)
    }

    /// Hex length, `ceil(n/4)`.
    #[inline]
    pub fn hex_len(self) -> usize {
        (self.0 as usize).div_ceil(4)
    }

    #[inline]
    pub fn mask(self) -> u128 {
        low_mask(self.0)
    }

    /// Fails unless the width has the `n = 2m`, `m` even, shape the IOBC rotation needs.
    pub fn require_multiple_of_four(self) -> Result<()> {
        if !self.0.is_multiple_of(4) {
            return Err(Error::InvalidWidth {
                bits: self.0,
                reason: "IOBC feedback needs n = 2m with m even",
            });
        }
        Ok(())
    }

    /// Number of distinct blocks, if it fits in a `u64`.
    pub fn block_count(self) -> Option<u64> {
        if self.0 < 64 {
            Some(1u64 << self.0)
        } else {
            None
        }
    }
}

impl TryFrom<u32> for BlockWidth {
    type Error = Error;

    fn try_from(bits: u32) -> Result<Self> {
        Self::new(bits)
    }
}

impl From<BlockWidth> for u32 {
    fn from(w: BlockWidth) -> u32 {
        w.0
    }
}

impl fmt::Display for BlockWidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[inline]
pub(crate) fn low_mask(bits: u32) -> u128 {
    if bits >= 128 {
        u128::MAX
    } else {
        (1u128 << bits) - 1
    }
}

/// An n-bit block.
///
/// Bit 1 is the leftmost bit and is held as the most significant bit of
/// the `n`-bit integer value, so "leftmost m bits" is `value >> (n - m)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    width: BlockWidth,
    value: u128,
}

impl Block {
    pub fn new(width: BlockWidth, value: u128) -> Result<Self> {
        if value & !width.mask() != 0 {
            return Err(Error::ValueOutOfRange { bits: width.bits() });
        }
        Ok(Self { width, value })
    }

    /// Keeps the low `n` bits of `value`.
    #[inline]
    pub fn truncated(width: BlockWidth, value: u128) -> Self {
        Self {
            width,
            value: value & width.mask(),
        }
    }

    #[inline]
    pub fn zero(width: BlockWidth) -> Self {
        Self { width, value: 0 }
    }

    #[inline]
    pub fn ones(width: BlockWidth) -> Self {
        Self {
            width,
            value: width.mask(),
        }
    }

    pub fn random<R: Rng + ?Sized>(width: BlockWidth, rng: &mut R) -> Self {
        Self::truncated(width, rng.gen::<u128>())
    }

    #[inline]
    pub fn width(&self) -> BlockWidth {
        self.width
    }

    #[inline]
    pub fn value(&self) -> u128 {
        self.value
    }

    /// Bit `i`, 1-based from the left.
    pub fn bit(&self, i: u32) -> bool {
        let n = self.width.bits();
        assert!((1..=n).contains(&i), "bit index {i} outside 1..={n}");
        (self.value >> (n - i)) & 1 == 1
    }

    #[inline]
    pub fn weight(&self) -> u32 {
        self.value.count_ones()
    }

    /// Width-checked XOR.
    pub fn xor(&self, other: &Block) -> Result<Block> {
        self.check_same_width(other)?;
        Ok(Block {
            width: self.width,
            value: self.value ^ other.value,
        })
    }

    pub fn check_same_width(&self, other: &Block) -> Result<()> {
        if self.width != other.width {
            return Err(Error::WidthMismatch {
                left: self.width.bits(),
                right: other.width.bits(),
            });
        }
        Ok(())
    }

    /// The left and right `n/2`-bit halves.
    #[inline]
    pub fn halves(&self) -> (u128, u128) {
        let m = self.width.half();
        (self.value >> m, self.value & low_mask(m))
    }

    /// Joins two `n/2`-bit halves.
    #[inline]
    pub fn from_halves(width: BlockWidth, left: u128, right: u128) -> Self {
        let m = width.half();
        Self::truncated(width, (left << m) | (right & low_mask(m)))
    }

    /// Big-endian bytes, leftmost bit in the MSB of the first byte; unused
    /// trailing bits of the last byte are zero.
    pub fn to_bytes(&self) -> Vec<u8> {
        let len = self.width.byte_len();
        let pad = (len * 8) as u32 - self.width.bits();
        let shifted = self.value << pad;
        shifted.to_be_bytes()[16 - len..].to_vec()
    }

    pub fn from_bytes(width: BlockWidth, bytes: &[u8]) -> Result<Self> {
        let len = width.byte_len();
        if bytes.len() != len {
            return Err(Error::Format(format!(
                "expected {len} bytes for a {width}-bit block, got {}",
                bytes.len()
            )));
        }
        let mut buf = [0u8; 16];
        buf[16 - len..].copy_from_slice(bytes);
        let raw = u128::from_be_bytes(buf);
        let pad = (len * 8) as u32 - width.bits();
        if raw & low_mask(pad) != 0 {
            return Err(Error::Format("nonzero padding bits in final byte".into()));
        }
        Ok(Self {
            width,
            value: raw >> pad,
        })
    }

    /// Lowercase hex, `ceil(n/4)` digits, leftmost bit first.
    pub fn to_hex(&self) -> String {
        let digits = self.width.hex_len();
        let pad = (digits * 4) as u32 - self.width.bits();
        format!("{:0digits$x}", self.value << pad, digits = digits)
    }

    pub fn from_hex(width: BlockWidth, s: &str) -> Result<Self> {
        let digits = width.hex_len();
        if s.len() != digits {
            return Err(Error::Hex(format!(
                "expected {digits} hex digits for a {width}-bit block, got {}",
                s.len()
            )));
        }
        if !s.bytes().all(|c| c.is_ascii_hexdigit()) {
            return Err(Error::Hex(format!("{s:?}: not a hex string")));
        }
        let raw = u128::from_str_radix(s, 16).map_err(|e| Error::Hex(format!("{s:?}: {e}")))?;
        let pad = (digits * 4) as u32 - width.bits();
        if raw & low_mask(pad) != 0 {
            return Err(Error::Hex(format!("{s:?}: nonzero padding bits")));
        }
        Ok(Self {
            width,
            value: raw >> pad,
        })
    }
}

/// Unchecked XOR for internal hot loops.
///
/// Panics on a width mismatch; public entry points validate widths first
/// and use [`Block::xor`] where the inputs are caller supplied.
impl BitXor for Block {
    type Output = Block;

    #[inline]
    fn bitxor(self, rhs: Block) -> Block {
        assert_eq!(self.width, rhs.width, "block width mismatch");
        Block {
            width: self.width,
            value: self.value ^ rhs.value,
        }
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Block<{}>({})", self.width, self.to_hex())
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[derive(Serialize, Deserialize)]
struct BlockRepr {
    width: BlockWidth,
    hex: String,
}

impl Serialize for Block {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        BlockRepr {
            width: self.width,
            hex: self.to_hex(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Block {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = BlockRepr::deserialize(deserializer)?;
        Block::from_hex(repr.width, &repr.hex).map_err(serde::de::Error::custom)
    }
}

/// Parses a bit string such as `"1011 0110"`; spaces are ignored.
pub fn block_from_bits(bits: &str) -> Result<Block> {
    let digits: Vec<char> = bits.chars().filter(|c| !c.is_whitespace()).collect();
    let width = BlockWidth::new(digits.len() as u32)?;
    let mut value = 0u128;
    for c in digits {
        value = (value << 1)
            | match c {
                '0' => 0,
                '1' => 1,
                other => return Err(Error::InvalidParameter(format!("bad bit {other:?}"))),
            };
    }
    Block::new(width, value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(n: u32) -> BlockWidth {
        BlockWidth::new(n).unwrap()
    }

    #[test]
    fn width_validation() {
        assert!(BlockWidth::new(0).is_err());
        assert!(BlockWidth::new(7).is_err());
        assert!(BlockWidth::new(130).is_err());
        assert!(w(10).require_multiple_of_four().is_err());
        assert!(w(12).require_multiple_of_four().is_ok());
    }

    #[test]
    fn xor_examples() {
        let x = block_from_bits("1011 0110").unwrap();
        assert_eq!(x.xor(&x).unwrap(), Block::zero(x.width()));
        assert_eq!(x.xor(&Block::zero(x.width())).unwrap(), x);
        let a = block_from_bits("1011").unwrap();
        let b = block_from_bits("0110").unwrap();
        assert_eq!(a.xor(&b).unwrap(), block_from_bits("1101").unwrap());
    }

    #[test]
    fn xor_rejects_width_mismatch() {
        let a = Block::zero(w(8));
        let b = Block::zero(w(16));
        assert_eq!(
            a.xor(&b),
            Err(Error::WidthMismatch { left: 8, right: 16 })
        );
    }

    #[test]
    fn bit_indexing_is_left_to_right() {
        let x = block_from_bits("1000 0001").unwrap();
        assert!(x.bit(1));
        assert!(!x.bit(2));
        assert!(x.bit(8));
        assert_eq!(x.value(), 0x81);
    }

    #[test]
    fn serialization_pads_at_the_right() {
        let x = Block::new(w(12), 0xabc).unwrap();
        assert_eq!(x.to_bytes(), vec![0xab, 0xc0]);
        assert_eq!(x.to_hex(), "abc");
        let y = Block::new(w(10), 0b11_0000_0001).unwrap();
        assert_eq!(y.to_bytes(), vec![0b1100_0000, 0b0100_0000]);
        assert_eq!(y.to_hex(), "c04");
        assert!(Block::from_bytes(w(12), &[0xab, 0xc1]).is_err());
        assert!(Block::from_hex(w(10), "c05").is_err());
        assert!(Block::from_hex(w(8), "abc").is_err());
    }

    #[test]
    fn value_range_checked() {
        assert!(Block::new(w(8), 0x100).is_err());
        assert_eq!(Block::truncated(w(8), 0x1ff).value(), 0xff);
    }

    proptest! {
        #[test]
        fn bytes_and_hex_round_trip(half in 1u32..=64, v in any::<u128>()) {
            let width = w(half * 2);
            let b = Block::truncated(width, v);
            prop_assert_eq!(Block::from_bytes(width, &b.to_bytes()).unwrap(), b);
            prop_assert_eq!(Block::from_hex(width, &b.to_hex()).unwrap(), b);
            let json = serde_json::to_string(&b).unwrap();
            prop_assert_eq!(serde_json::from_str::<Block>(&json).unwrap(), b);
        }

        #[test]
        fn halves_round_trip(half in 1u32..=64, v in any::<u128>()) {
            let width = w(half * 2);
            let b = Block::truncated(width, v);
            let (l, r) = b.halves();
            prop_assert_eq!(Block::from_halves(width, l, r), b);
        }
    }
}
