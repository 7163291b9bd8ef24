use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockDecrypt, BlockEncrypt, KeyInit};
use aes::{Aes128, Aes192, Aes256};

use super::BlockCipher;
use crate::bitblocks::{Block, BlockWidth};
use crate::error::{Error, Result};

#[derive(Clone)]
enum Primitive {
    Aes128(Aes128),
    Aes192(Aes192),
    Aes256(Aes256),
}

/// Adapter for standard block ciphers, selected by name.
///
/// Supported: `aes128`, `aes192`, `aes256` (all 128-bit blocks).
#[derive(Clone)]
pub struct ExternalCipher {
    name: String,
    width: BlockWidth,
    primitive: Primitive,
}

impl ExternalCipher {
    pub fn new(name: &str, key: &[u8], declared: BlockWidth) -> Result<Self> {
        Self::check_width(name, declared)?;
        let expected = Self::key_len(name)?;
        if key.len() != expected {
            return Err(Error::Config(format!(
                "{name} needs a {expected}-byte key, got {} bytes",
                key.len()
            )));
        }
        let bad_key = |_| Error::Config(format!("{name}: invalid key"));
        let primitive = match name {
            "aes128" => Primitive::Aes128(Aes128::new_from_slice(key).map_err(bad_key)?),
            "aes192" => Primitive::Aes192(Aes192::new_from_slice(key).map_err(bad_key)?),
            "aes256" => Primitive::Aes256(Aes256::new_from_slice(key).map_err(bad_key)?),
            _ => unreachable!("validated by key_len"),
        };
        Ok(Self {
            name: name.to_string(),
            width: declared,
            primitive,
        })
    }

    pub fn key_len(name: &str) -> Result<usize> {
        match name {
            "aes128" => Ok(16),
            "aes192" => Ok(24),
            "aes256" => Ok(32),
            other => Err(Error::Config(format!("unavailable external cipher {other:?}"))),
        }
    }

    pub fn native_width(name: &str) -> Result<u32> {
        Self::key_len(name).map(|_| 128)
    }

    pub fn check_width(name: &str, declared: BlockWidth) -> Result<()> {
        let native = Self::native_width(name)?;
        if declared.bits() != native {
            return Err(Error::Config(format!(
                "{name} has {native}-bit blocks but {declared} bits were declared"
            )));
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn run(&self, x: Block, forward: bool) -> Block {
        let mut buf = GenericArray::clone_from_slice(&x.value().to_be_bytes());
        match (&self.primitive, forward) {
            (Primitive::Aes128(c), true) => c.encrypt_block(&mut buf),
            (Primitive::Aes128(c), false) => c.decrypt_block(&mut buf),
            (Primitive::Aes192(c), true) => c.encrypt_block(&mut buf),
            (Primitive::Aes192(c), false) => c.decrypt_block(&mut buf),
            (Primitive::Aes256(c), true) => c.encrypt_block(&mut buf),
            (Primitive::Aes256(c), false) => c.decrypt_block(&mut buf),
        }
        let mut out = [0u8; 16];
        out.copy_from_slice(&buf);
        Block::truncated(self.width, u128::from_be_bytes(out))
    }
}

impl std::fmt::Debug for ExternalCipher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalCipher").field("name", &self.name).finish_non_exhaustive()
    }
}

impl BlockCipher for ExternalCipher {
    fn width(&self) -> BlockWidth {
        self.width
    }

    fn encrypt_block(&self, x: Block) -> Block {
        self.run(x, true)
    }

    fn decrypt_block(&self, y: Block) -> Block {
        self.run(y, false)
    }
}
