//! The chained MDC construction shared by PES-PCBC, IOBC and EPBC.
//!
//! Encryption of `P_1..P_t` under IVs `(F_0, G_0)`:
//!
//! ```text
//! G_i = P_i ^ F_{i-1}
//! F_i = e_K(G_i)
//! C_1 = F_1 ^ G_0
//! C_i = F_i ^ g(G_{i-1})      (i >= 2)
//! ```
//!
//! The receiver accepts when the last recovered plaintext block equals the
//! MDC block. The modes differ only in `g` and in how the IVs are chosen.

mod container;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bitblocks::{Block, BlockWidth, FeedbackFunction};
use crate::ciphers::BlockCipher;
use crate::error::{Error, Result};

pub use container::Container;

/// One of the three concrete modes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeKind {
    PesPcbc,
    Iobc,
    Epbc,
}

impl ModeKind {
    pub const ALL: [ModeKind; 3] = [ModeKind::PesPcbc, ModeKind::Iobc, ModeKind::Epbc];

    pub fn feedback(self) -> FeedbackFunction {
        match self {
            ModeKind::PesPcbc => FeedbackFunction::Identity,
            ModeKind::Iobc => FeedbackFunction::IobcRotation,
            ModeKind::Epbc => FeedbackFunction::EpbcBoolean,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModeKind::PesPcbc => "pes-pcbc",
            ModeKind::Iobc => "iobc",
            ModeKind::Epbc => "epbc",
        }
    }

    /// Container mode id.
    pub fn id(self) -> u8 {
        match self {
            ModeKind::PesPcbc => 0,
            ModeKind::Iobc => 1,
            ModeKind::Epbc => 2,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(ModeKind::PesPcbc),
            1 => Ok(ModeKind::Iobc),
            2 => Ok(ModeKind::Epbc),
            other => Err(Error::Format(format!("unknown mode id {other}"))),
        }
    }

    /// IOBC messages hold at most `n^2/2 - 1` blocks, MDC included.
    pub fn max_blocks(self, width: BlockWidth) -> Option<usize> {
        match self {
            ModeKind::Iobc => {
                let n = width.bits() as usize;
                Some(n * n / 2 - 1)
            }
            ModeKind::PesPcbc | ModeKind::Epbc => None,
        }
    }
}

impl std::str::FromStr for ModeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pes-pcbc" | "pes" => Ok(ModeKind::PesPcbc),
            "iobc" => Ok(ModeKind::Iobc),
            "epbc" => Ok(ModeKind::Epbc),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for ModeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// The initial chaining values `(F_0, G_0)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct IvPair {
    pub f0: Block,
    pub g0: Block,
}

impl IvPair {
    pub fn new(f0: Block, g0: Block) -> Result<Self> {
        f0.check_same_width(&g0)?;
        Ok(Self { f0, g0 })
    }

    /// A random pair with `F_0 != G_0`.
    pub fn random_distinct<R: Rng + ?Sized>(width: BlockWidth, rng: &mut R) -> Self {
        loop {
            let f0 = Block::random(width, rng);
            let g0 = Block::random(width, rng);
            if f0 != g0 {
                return Self { f0, g0 };
            }
        }
    }

    pub fn width(&self) -> BlockWidth {
        self.f0.width()
    }
}

/// `F_0 = e_{K'}(S)`, `G_0 = e_{K'}(F_0)`.
pub fn derive_ivs(aux: &dyn BlockCipher, sequence: Block) -> Result<IvPair> {
    let f0 = aux.encrypt(sequence)?;
    let g0 = aux.encrypt_block(f0);
    Ok(IvPair { f0, g0 })
}

/// Sequence-number IV derivation with a monotonic counter.
#[derive(Debug)]
pub struct SequenceIvs {
    aux: Arc<dyn BlockCipher>,
    next: AtomicU64,
}

impl SequenceIvs {
    pub fn new(aux: Arc<dyn BlockCipher>, first: u64) -> Self {
        Self {
            aux,
            next: AtomicU64::new(first),
        }
    }

    pub fn aux(&self) -> &dyn BlockCipher {
        self.aux.as_ref()
    }

    /// Issues the next sequence number; no value is ever issued twice.
    pub fn issue(&self) -> Result<Block> {
        let width = self.aux.width();
        let limit = width.block_count().unwrap_or(u64::MAX);
        let s = self
            .next
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |s| {
                (s < limit && s != u64::MAX).then_some(s + 1)
            })
            .map_err(|_| Error::SequenceExhausted)?;
        Ok(Block::truncated(width, s as u128))
    }
}

/// How a [`ModeInstance`] chooses `(F_0, G_0)` for each sealed message.
#[derive(Debug)]
pub enum IvPolicy {
    /// One secret pair for every message. Permitted for PES-PCBC and EPBC,
    /// and what the IV-reuse forgery exploits.
    Reused(IvPair),
    /// A fresh secret pair per message. The receiver must be handed the
    /// pair out of band, see [`ModeInstance::open_verify_with`].
    Fresh(Mutex<ChaCha8Rng>),
    /// IVs derived from a transmitted sequence number.
    DerivedFromSequence(SequenceIvs),
}

impl IvPolicy {
    pub fn fresh(seed: u64) -> Self {
        IvPolicy::Fresh(Mutex::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    pub fn derived(aux: Arc<dyn BlockCipher>) -> Self {
        IvPolicy::DerivedFromSequence(SequenceIvs::new(aux, 0))
    }
}

/// Internal values `F_0..F_t` and `G_0..G_t` of one (de/en)cryption.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct EncryptionTrace {
    pub f: Vec<Block>,
    pub g: Vec<Block>,
}

impl EncryptionTrace {
    /// Number of message blocks `t`.
    pub fn len(&self) -> usize {
        self.f.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `[S], C_1..C_t`.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct SequencedCiphertext {
    pub sequence: Option<Block>,
    pub blocks: Vec<Block>,
}

impl SequencedCiphertext {
    pub fn new(sequence: Option<Block>, blocks: Vec<Block>) -> Self {
        Self { sequence, blocks }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Block `C_i`, 1-based.
    pub fn block(&self, i: usize) -> Block {
        self.blocks[i - 1]
    }

    /// Width of the blocks; fails on an empty or mixed-width list.
    pub fn width(&self) -> Result<BlockWidth> {
        let first = self.blocks.first().ok_or(Error::EmptyMessage)?;
        for b in &self.blocks {
            first.check_same_width(b)?;
        }
        if let Some(s) = &self.sequence {
            first.check_same_width(s)?;
        }
        Ok(first.width())
    }
}

/// Result of a successful seal.
#[derive(Clone, Debug)]
pub struct Sealed {
    pub ciphertext: SequencedCiphertext,
    pub ivs: IvPair,
    pub trace: EncryptionTrace,
}

/// Receiver decision.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict {
    /// Integrity check passed; the message without its MDC block.
    Accept(Vec<Block>),
    Reject,
}

impl Verdict {
    pub fn is_accept(&self) -> bool {
        matches!(self, Verdict::Accept(_))
    }
}

/// A configured mode: cipher, feedback function, IV policy, MDC block.
#[derive(Debug)]
pub struct ModeInstance {
    kind: ModeKind,
    cipher: Arc<dyn BlockCipher>,
    iv_policy: IvPolicy,
    max_blocks: Option<usize>,
    mdc: Block,
}

impl ModeInstance {
    pub fn new(kind: ModeKind, cipher: Arc<dyn BlockCipher>, iv_policy: IvPolicy) -> Result<Self> {
        let width = cipher.width();
        kind.feedback().check_width(width)?;
        match &iv_policy {
            IvPolicy::Reused(ivs) => {
                Block::zero(width).check_same_width(&ivs.f0)?;
                ivs.f0.check_same_width(&ivs.g0)?;
                if ivs.f0 == ivs.g0 {
                    return Err(Error::EqualIvs);
                }
            }
            IvPolicy::DerivedFromSequence(seq) => {
                if seq.aux().width() != width {
                    return Err(Error::WidthMismatch {
                        left: seq.aux().width().bits(),
                        right: width.bits(),
                    });
                }
            }
            IvPolicy::Fresh(_) => {}
        }
        Ok(Self {
            kind,
            cipher,
            iv_policy,
            max_blocks: kind.max_blocks(width),
            mdc: Block::zero(width),
        })
    }

    /// Replaces the default all-zero MDC block.
    pub fn with_mdc(mut self, mdc: Block) -> Result<Self> {
        self.mdc.check_same_width(&mdc)?;
        self.mdc = mdc;
        Ok(self)
    }

    pub fn kind(&self) -> ModeKind {
        self.kind
    }

    pub fn feedback(&self) -> FeedbackFunction {
        self.kind.feedback()
    }

    pub fn width(&self) -> BlockWidth {
        self.cipher.width()
    }

    pub fn cipher(&self) -> &dyn BlockCipher {
        self.cipher.as_ref()
    }

    pub fn iv_policy(&self) -> &IvPolicy {
        &self.iv_policy
    }

    pub fn max_blocks(&self) -> Option<usize> {
        self.max_blocks
    }

    pub fn mdc(&self) -> Block {
        self.mdc
    }

    fn check_blocks(&self, blocks: &[Block]) -> Result<()> {
        if blocks.is_empty() {
            return Err(Error::EmptyMessage);
        }
        let zero = Block::zero(self.width());
        blocks.iter().try_for_each(|b| zero.check_same_width(b))
    }

    fn check_ivs(&self, ivs: &IvPair) -> Result<()> {
        let zero = Block::zero(self.width());
        zero.check_same_width(&ivs.f0)?;
        zero.check_same_width(&ivs.g0)
    }

    /// Encrypts `P_1..P_t` under the given IVs, returning `C_1..C_t` and the trace.
    pub fn encrypt_blocks(
        &self,
        ivs: &IvPair,
        plaintext: &[Block],
    ) -> Result<(Vec<Block>, EncryptionTrace)> {
        self.check_blocks(plaintext)?;
        self.check_ivs(ivs)?;
        if let Some(max) = self.max_blocks {
            if plaintext.len() > max {
                return Err(Error::LengthLimit {
                    blocks: plaintext.len(),
                    max,
                });
            }
        }
        let g = self.feedback();
        let t = plaintext.len();
        let mut f_trace = Vec::with_capacity(t + 1);
        let mut g_trace = Vec::with_capacity(t + 1);
        f_trace.push(ivs.f0);
        g_trace.push(ivs.g0);
        let mut ciphertext = Vec::with_capacity(t);
        for (i, &p) in plaintext.iter().enumerate() {
            let f_prev = f_trace[i];
            let g_prev = g_trace[i];
            let g_i = p ^ f_prev;
            let f_i = self.cipher.encrypt_block(g_i);
            let mask = if i == 0 { g_prev } else { g.eval(g_prev) };
            ciphertext.push(f_i ^ mask);
            f_trace.push(f_i);
            g_trace.push(g_i);
        }
        Ok((
            ciphertext,
            EncryptionTrace {
                f: f_trace,
                g: g_trace,
            },
        ))
    }

    /// Inverts [`ModeInstance::encrypt_blocks`].
    pub fn decrypt_blocks(
        &self,
        ivs: &IvPair,
        ciphertext: &[Block],
    ) -> Result<(Vec<Block>, EncryptionTrace)> {
        self.check_blocks(ciphertext)?;
        self.check_ivs(ivs)?;
        let g = self.feedback();
        let t = ciphertext.len();
        let mut f_trace = Vec::with_capacity(t + 1);
        let mut g_trace = Vec::with_capacity(t + 1);
        f_trace.push(ivs.f0);
        g_trace.push(ivs.g0);
        let mut plaintext = Vec::with_capacity(t);
        for (i, &c) in ciphertext.iter().enumerate() {
            let f_prev = f_trace[i];
            let g_prev = g_trace[i];
            let mask = if i == 0 { g_prev } else { g.eval(g_prev) };
            let f_i = c ^ mask;
            let g_i = self.cipher.decrypt_block(f_i);
            plaintext.push(g_i ^ f_prev);
            f_trace.push(f_i);
            g_trace.push(g_i);
        }
        Ok((
            plaintext,
            EncryptionTrace {
                f: f_trace,
                g: g_trace,
            },
        ))
    }

    /// IVs for a transmitted sequence number under the derived policy.
    pub fn ivs_for_sequence(&self, sequence: Block) -> Result<IvPair> {
        match &self.iv_policy {
            IvPolicy::DerivedFromSequence(seq) => derive_ivs(seq.aux(), sequence),
            _ => Err(Error::MissingIvs("policy does not derive IVs from sequence numbers")),
        }
    }

    /// Appends the MDC block, draws IVs per policy and encrypts.
    pub fn seal(&self, message: &[Block]) -> Result<Sealed> {
        self.check_length(message.len() + 1)?;
        let (ivs, sequence) = match &self.iv_policy {
            IvPolicy::Reused(ivs) => (*ivs, None),
            IvPolicy::Fresh(rng) => {
                let mut rng = rng.lock().expect("IV generator poisoned");
                (IvPair::random_distinct(self.width(), &mut *rng), None)
            }
            IvPolicy::DerivedFromSequence(seq) => {
                let s = seq.issue()?;
                (derive_ivs(seq.aux(), s)?, Some(s))
            }
        };
        self.seal_with_ivs(message, ivs, sequence)
    }

    /// Seals under caller-chosen IVs, bypassing the policy. Used to stage
    /// IV reuse and other deliberately insecure configurations.
    pub fn seal_with_ivs(
        &self,
        message: &[Block],
        ivs: IvPair,
        sequence: Option<Block>,
    ) -> Result<Sealed> {
        let mut plaintext = Vec::with_capacity(message.len() + 1);
        plaintext.extend_from_slice(message);
        plaintext.push(self.mdc);
        let (blocks, trace) = self.encrypt_blocks(&ivs, &plaintext)?;
        Ok(Sealed {
            ciphertext: SequencedCiphertext::new(sequence, blocks),
            ivs,
            trace,
        })
    }

    /// Seals at an explicit sequence number, reusing it if asked to.
    pub fn seal_at_sequence(&self, message: &[Block], sequence: Block) -> Result<Sealed> {
        let ivs = self.ivs_for_sequence(sequence)?;
        self.seal_with_ivs(message, ivs, Some(sequence))
    }

    fn check_length(&self, blocks: usize) -> Result<()> {
        match self.max_blocks {
            Some(max) if blocks > max => Err(Error::LengthLimit { blocks, max }),
            _ => Ok(()),
        }
    }

    /// Decrypts and checks the MDC, resolving IVs from the policy.
    pub fn open_verify(&self, c: &SequencedCiphertext) -> Result<Verdict> {
        let ivs = match (&self.iv_policy, &c.sequence) {
            (IvPolicy::DerivedFromSequence(seq), Some(s)) => {
                Block::zero(self.width()).check_same_width(s).map_err(format_error)?;
                derive_ivs(seq.aux(), *s)?
            }
            (IvPolicy::DerivedFromSequence(_), None) => {
                return Err(Error::Format("sequence number missing".into()))
            }
            (_, Some(_)) => {
                return Err(Error::Format("unexpected sequence number".into()));
            }
            (IvPolicy::Reused(ivs), None) => *ivs,
            (IvPolicy::Fresh(_), None) => {
                return Err(Error::MissingIvs("fresh IVs must be supplied by the caller"))
            }
        };
        self.open_verify_with(c, &ivs)
    }

    /// Decrypts under the given IVs and checks the MDC.
    pub fn open_verify_with(&self, c: &SequencedCiphertext, ivs: &IvPair) -> Result<Verdict> {
        self.check_blocks(&c.blocks).map_err(format_error)?;
        if self.check_length(c.len()).is_err() {
            return Ok(Verdict::Reject);
        }
        let (mut plaintext, _) = self.decrypt_blocks(ivs, &c.blocks)?;
        if plaintext.last() == Some(&self.mdc) {
            plaintext.pop();
            Ok(Verdict::Accept(plaintext))
        } else {
            Ok(Verdict::Reject)
        }
    }
}

fn format_error(e: Error) -> Error {
    match e {
        Error::Format(_) => e,
        other => Error::Format(other.to_string()),
    }
}
