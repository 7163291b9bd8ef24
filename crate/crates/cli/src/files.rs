use std::path::Path;

use anyhow::Context;
use mdclab::bitblocks::{Block, BlockWidth};
use mdclab::modes::Container;

use crate::FormatError;

pub fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read_container(path: &Path) -> anyhow::Result<Container> {
    let bytes = read(path)?;
    Container::from_bytes(&bytes)
        .map_err(|e| FormatError(format!("{}: {e}", path.display())).into())
}

/// Splits a message into `ceil(n/8)`-byte blocks. No padding is applied, so
/// the length must already be a whole number of blocks.
pub fn blocks_from_bytes(width: BlockWidth, bytes: &[u8]) -> anyhow::Result<Vec<Block>> {
    let len = width.byte_len();
    if bytes.is_empty() || !bytes.len().is_multiple_of(len) {
        return Err(FormatError(format!(
            "message of {} bytes is not a positive multiple of the {len}-byte block",
            bytes.len()
        ))
        .into());
    }
    bytes
        .chunks(len)
        .map(|chunk| Block::from_bytes(width, chunk).map_err(|e| FormatError(e.to_string()).into()))
        .collect()
}

pub fn bytes_from_blocks(blocks: &[Block]) -> Vec<u8> {
    blocks.iter().flat_map(|b| b.to_bytes()).collect()
}
