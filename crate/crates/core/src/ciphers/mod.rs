//! Pluggable block-cipher backends.
//!
//! Every backend is a keyed permutation of [`Block`]s of one width. The
//! table-driven [`IdealCipher`] is the default for statistical work; the
//! [`FeistelCipher`] covers widths too large for tables and
//! [`ExternalCipher`] wraps standard primitives.

mod external;
mod feistel;
mod ideal;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitblocks::{Block, BlockWidth};
use crate::error::{Error, Result};

pub use external::ExternalCipher;
pub use feistel::FeistelCipher;
pub use ideal::IdealCipher;

/// A keyed block cipher `e_K` / `d_K`.
pub trait BlockCipher: Send + Sync + fmt::Debug {
    fn width(&self) -> BlockWidth;

    /// Encrypts a block of [`BlockCipher::width`] bits. Implementations may
    /// panic on other widths; use [`BlockCipher::encrypt`] for checked calls.
    fn encrypt_block(&self, x: Block) -> Block;

    fn decrypt_block(&self, y: Block) -> Block;

    fn encrypt(&self, x: Block) -> Result<Block> {
        self.check(x)?;
        Ok(self.encrypt_block(x))
    }

    fn decrypt(&self, y: Block) -> Result<Block> {
        self.check(y)?;
        Ok(self.decrypt_block(y))
    }

    fn check(&self, x: Block) -> Result<()> {
        if x.width() != self.width() {
            return Err(Error::WidthMismatch {
                left: x.width().bits(),
                right: self.width().bits(),
            });
        }
        Ok(())
    }
}

/// Which backend to build, with its key material.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CipherSpec {
    Ideal { seed: u64 },
    Feistel { key: u128, rounds: u32 },
    External { name: String, key: Vec<u8> },
}

impl CipherSpec {
    pub fn build(&self, width: BlockWidth) -> Result<Arc<dyn BlockCipher>> {
        Ok(match self {
            CipherSpec::Ideal { seed } => Arc::new(IdealCipher::new(*seed, width)?),
            CipherSpec::Feistel { key, rounds } => {
                Arc::new(FeistelCipher::new(*key, width, *rounds)?)
            }
            CipherSpec::External { name, key } => {
                Arc::new(ExternalCipher::new(name, key, width)?)
            }
        })
    }
}

/// A backend family; keys are drawn per use.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CipherBackend {
    Ideal,
    Feistel { rounds: u32 },
    External { name: String },
}

impl CipherBackend {
    /// Draws fresh key material for this backend.
    pub fn random_spec<R: Rng + ?Sized>(&self, rng: &mut R) -> CipherSpec {
        match self {
            CipherBackend::Ideal => CipherSpec::Ideal { seed: rng.gen() },
            CipherBackend::Feistel { rounds } => CipherSpec::Feistel {
                key: rng.gen(),
                rounds: *rounds,
            },
            CipherBackend::External { name } => {
                let len = ExternalCipher::key_len(name).unwrap_or(16);
                let mut key = vec![0u8; len];
                rng.fill(key.as_mut_slice());
                CipherSpec::External {
                    name: name.clone(),
                    key,
                }
            }
        }
    }

    /// Rejects widths the backend cannot serve, before any work starts.
    pub fn check_width(&self, width: BlockWidth) -> Result<()> {
        match self {
            CipherBackend::Ideal => IdealCipher::check_width(width),
            CipherBackend::Feistel { rounds } => FeistelCipher::check_params(width, *rounds),
            CipherBackend::External { name } => ExternalCipher::check_width(name, width),
        }
    }

    /// Key material from raw bytes: a big-endian seed of at most 8 bytes
    /// for the table, a key of at most 16 bytes for Feistel, and exactly the
    /// primitive's key length for external ciphers.
    pub fn spec_from_key(&self, key: &[u8]) -> Result<CipherSpec> {
        let too_long = |max: usize| {
            Error::Config(format!("key of {} bytes, at most {max} allowed", key.len()))
        };
        Ok(match self {
            CipherBackend::Ideal => {
                if key.len() > 8 {
                    return Err(too_long(8));
                }
                let seed = key.iter().fold(0u64, |acc, &b| acc << 8 | u64::from(b));
                CipherSpec::Ideal { seed }
            }
            CipherBackend::Feistel { rounds } => {
                if key.len() > 16 {
                    return Err(too_long(16));
                }
                let key = key.iter().fold(0u128, |acc, &b| acc << 8 | u128::from(b));
                CipherSpec::Feistel {
                    key,
                    rounds: *rounds,
                }
            }
            CipherBackend::External { name } => {
                let expected = ExternalCipher::key_len(name)?;
                if key.len() != expected {
                    return Err(Error::Config(format!(
                        "{name} needs a {expected}-byte key, got {} bytes",
                        key.len()
                    )));
                }
                CipherSpec::External {
                    name: name.clone(),
                    key: key.to_vec(),
                }
            }
        })
    }

    pub fn build_random<R: Rng + ?Sized>(
        &self,
        width: BlockWidth,
        rng: &mut R,
    ) -> Result<Arc<dyn BlockCipher>> {
        self.random_spec(rng).build(width)
    }
}

#[cfg(test)]
pub(crate) mod conformance {
    //! Interface checks shared by every backend.

    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    pub fn check_round_trip(cipher: &dyn BlockCipher, samples: usize) {
        let width = cipher.width();
        let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
        for _ in 0..samples {
            let x = Block::random(width, &mut rng);
            let y = cipher.encrypt(x).unwrap();
            assert_eq!(y.width(), width);
            assert_eq!(cipher.decrypt(y).unwrap(), x);
        }
    }

    /// Exhaustive bijectivity and round trip, for widths up to 12 bits.
    pub fn check_exhaustive(cipher: &dyn BlockCipher) {
        let width = cipher.width();
        assert!(width.bits() <= 12);
        let mut image = HashSet::new();
        for v in 0..1u128 << width.bits() {
            let x = Block::new(width, v).unwrap();
            let y = cipher.encrypt(x).unwrap();
            assert!(image.insert(y), "encryption is not injective");
            assert_eq!(cipher.decrypt(y).unwrap(), x);
        }
    }

    pub fn check_width_rejected(cipher: &dyn BlockCipher) {
        let other = if cipher.width().bits() == 8 { 10 } else { 8 };
        let x = Block::zero(BlockWidth::new(other).unwrap());
        assert!(matches!(cipher.encrypt(x), Err(Error::WidthMismatch { .. })));
        assert!(matches!(cipher.decrypt(x), Err(Error::WidthMismatch { .. })));
    }

    pub fn check_all(cipher: &dyn BlockCipher) {
        if cipher.width().bits() <= 12 {
            check_exhaustive(cipher);
        }
        check_round_trip(cipher, 1000);
        check_width_rejected(cipher);
    }

    #[test]
    fn every_backend_conforms() {
        for n in [2u32, 4, 8, 10, 12, 16, 20] {
            let w = BlockWidth::new(n).unwrap();
            check_all(&IdealCipher::new(n as u64, w).unwrap());
        }
        for n in [2u32, 8, 12, 16, 32, 64, 100, 128] {
            let w = BlockWidth::new(n).unwrap();
            check_all(&FeistelCipher::new(0x0123_4567_89ab_cdef_fedc_ba98_7654_3210, w, 8).unwrap());
        }
        let w128 = BlockWidth::new(128).unwrap();
        for name in ["aes128", "aes192", "aes256"] {
            let key = vec![7u8; ExternalCipher::key_len(name).unwrap()];
            check_all(&ExternalCipher::new(name, &key, w128).unwrap());
        }
    }

    #[test]
    fn specs_build_matching_backends() {
        let w = BlockWidth::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for backend in [CipherBackend::Ideal, CipherBackend::Feistel { rounds: 10 }] {
            backend.check_width(w).unwrap();
            let c = backend.build_random(w, &mut rng).unwrap();
            check_round_trip(c.as_ref(), 100);
        }
        let aes = CipherBackend::External { name: "aes128".into() };
        assert!(aes.check_width(w).is_err());
        let w128 = BlockWidth::new(128).unwrap();
        let c = aes.build_random(w128, &mut rng).unwrap();
        check_round_trip(c.as_ref(), 100);
        assert!(CipherBackend::Ideal.check_width(BlockWidth::new(22).unwrap()).is_err());
    }

    #[test]
    fn specs_from_key_bytes() {
        assert_eq!(
            CipherBackend::Ideal.spec_from_key(&[1, 2]).unwrap(),
            CipherSpec::Ideal { seed: 0x0102 }
        );
        assert!(CipherBackend::Ideal.spec_from_key(&[0; 9]).is_err());
        let feistel = CipherBackend::Feistel { rounds: 8 };
        assert_eq!(
            feistel.spec_from_key(&[0xff; 16]).unwrap(),
            CipherSpec::Feistel { key: u128::MAX, rounds: 8 }
        );
        let aes = CipherBackend::External { name: "aes128".into() };
        assert!(aes.spec_from_key(&[0; 15]).is_err());
        assert!(aes.spec_from_key(&[0; 16]).is_ok());
    }
}
