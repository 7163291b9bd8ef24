use super::{ModeKind, SequencedCiphertext};
use crate::bitblocks::{Block, BlockWidth};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"MDC1";
const VERSION: u8 = 0x01;
const FLAG_SEQUENCE: u8 = 0x01;
const HEADER_LEN: usize = 4 + 1 + 1 + 2 + 4 + 1;

/// Binary ciphertext container.
///
/// ```text
/// "MDC1" | version 0x01 | mode id u8 | width u16 BE | t u32 BE | flags u8
///   | [S]  (present iff flags bit 0)
///   | C_1 .. C_t
/// ```
///
/// Every block occupies `ceil(n/8)` bytes, leftmost bit first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Container {
    pub mode: ModeKind,
    pub ciphertext: SequencedCiphertext,
}

impl Container {
    pub fn new(mode: ModeKind, ciphertext: SequencedCiphertext) -> Result<Self> {
        ciphertext.width()?;
        Ok(Self { mode, ciphertext })
    }

    pub fn width(&self) -> BlockWidth {
        self.ciphertext.blocks[0].width()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let width = self.width();
        let block_len = width.byte_len();
        let t = self.ciphertext.blocks.len();
        let seq = self.ciphertext.sequence.is_some() as usize;
        let mut out = Vec::with_capacity(HEADER_LEN + (t + seq) * block_len);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.mode.id());
        out.extend_from_slice(&(width.bits() as u16).to_be_bytes());
        out.extend_from_slice(&(t as u32).to_be_bytes());
        out.push(if seq == 1 { FLAG_SEQUENCE } else { 0 });
        if let Some(s) = &self.ciphertext.sequence {
            out.extend_from_slice(&s.to_bytes());
        }
        for b in &self.ciphertext.blocks {
            out.extend_from_slice(&b.to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "container truncated: {} bytes, header needs {HEADER_LEN}",
                bytes.len()
            )));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let mode = ModeKind::from_id(bytes[5])?;
        let bits = u16::from_be_bytes([bytes[6], bytes[7]]) as u32;
        let width = BlockWidth::new(bits).map_err(|e| Error::Format(e.to_string()))?;
        let t = u32::from_be_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
        let flags = bytes[12];
        if flags & !FLAG_SEQUENCE != 0 {
            return Err(Error::Format(format!("unknown flags {flags:#04x}")));
        }
        if t == 0 {
            return Err(Error::Format("container holds no blocks".into()));
        }
        let has_sequence = flags & FLAG_SEQUENCE != 0;
        let block_len = width.byte_len();
        let expected = (t as u64 + has_sequence as u64) * block_len as u64;
        let body = &bytes[HEADER_LEN..];
        if body.len() as u64 != expected {
            return Err(Error::Format(format!(
                "body is {} bytes, header promises {expected}",
                body.len()
            )));
        }
        let mut chunks = body.chunks_exact(block_len);
        let sequence = if has_sequence {
            Some(Block::from_bytes(width, chunks.next().expect("length checked"))?)
        } else {
            None
        };
        let blocks = chunks
            .map(|chunk| Block::from_bytes(width, chunk))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mode,
            ciphertext: SequencedCiphertext::new(sequence, blocks),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(n: u32) -> BlockWidth {
        BlockWidth::new(n).unwrap()
    }

    #[test]
    fn layout_is_bit_exact() {
        let width = w(12);
        let c = Container::new(
            ModeKind::Iobc,
            SequencedCiphertext::new(
                Some(Block::new(width, 0x005).unwrap()),
                vec![Block::new(width, 0xabc).unwrap(), Block::new(width, 0x123).unwrap()],
            ),
        )
        .unwrap();
        let bytes = c.to_bytes();
        assert_eq!(
            bytes,
            vec![
                b'M', b'D', b'C', b'1', 0x01, 0x01, 0x00, 0x0c, 0, 0, 0, 2, 0x01, //
                0x00, 0x50, 0xab, 0xc0, 0x12, 0x30,
            ]
        );
        assert_eq!(Container::from_bytes(&bytes).unwrap(), c);
    }

    #[test]
    fn malformed_inputs_rejected() {
        let width = w(8);
        let c = Container::new(
            ModeKind::Epbc,
            SequencedCiphertext::new(None, vec![Block::new(width, 1).unwrap(); 3]),
        )
        .unwrap();
        let good = c.to_bytes();
        assert!(Container::from_bytes(&good[..good.len() - 1]).is_err());
        assert!(Container::from_bytes(&good[..5]).is_err());
        let mut extra = good.clone();
        extra.push(0);
        assert!(Container::from_bytes(&extra).is_err());
        for (index, value) in [(0, b'X'), (4, 2), (5, 3), (7, 7), (12, 0x02)] {
            let mut bad = good.clone();
            bad[index] = value;
            assert!(
                matches!(Container::from_bytes(&bad), Err(Error::Format(_))),
                "byte {index}"
            );
        }
        let mut zero_t = good[..HEADER_LEN].to_vec();
        zero_t[8..12].copy_from_slice(&[0, 0, 0, 0]);
        assert!(Container::from_bytes(&zero_t).is_err());
    }

    #[test]
    fn empty_ciphertext_rejected() {
        assert!(Container::new(ModeKind::Epbc, SequencedCiphertext::new(None, vec![])).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(half in 1u32..=64, mode in 0u8..3, seq in proptest::option::of(any::<u128>()),
                      values in proptest::collection::vec(any::<u128>(), 1..20)) {
            let width = w(half * 2);
            let c = Container::new(
                ModeKind::from_id(mode).unwrap(),
                SequencedCiphertext::new(
                    seq.map(|s| Block::truncated(width, s)),
                    values.into_iter().map(|v| Block::truncated(width, v)).collect(),
                ),
            ).unwrap();
            prop_assert_eq!(Container::from_bytes(&c.to_bytes()).unwrap(), c);
        }
    }
}
