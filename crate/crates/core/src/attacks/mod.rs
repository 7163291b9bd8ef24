//! Forgery constructions against the chained MDC modes.
//!
//! Every constructor is pure: it returns a [`ForgeryPlan`] and never talks to
//! a receiver. Submitting a plan is a separate step through a
//! [`VerifierOracle`], which counts queries. Block indices are 1-based and
//! follow the chaining equations, so `C_1` is `blocks[0]`.
//!
//! Constructors named `oracle_*` read internal values from an
//! [`EncryptionTrace`](crate::modes::EncryptionTrace) and exist to check the
//! constructions; the others use only ciphertext, known plaintext and
//! guesses.

mod birthday;
mod insert;
mod splice;


use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::analysis::Probability;
use crate::bitblocks::{Block, BlockWidth, FeedbackFunction};
use crate::error::{Error, Result};
use crate::modes::{Container, IvPair, ModeInstance, ModeKind, SequencedCiphertext};

pub use birthday::{birthday_chosen_plaintext, BirthdayConfig, BirthdayOutcome, Collision};
pub use insert::{
    epbc_delta_candidates, epbc_guess_forgery, epbc_guess_success, epbc_guess_success_within,
    forge_general_insert,
    forge_pes_insert, oracle_insert_delta, CandidateStream, GuessOutcome,
};
pub use splice::{
    forge_iobc_shorten, forge_iv_reuse, forge_splice, oracle_splice_correction,
    shortening_delta, shortening_success,
};

/// A known plaintext block: message number (0 for the only or first
/// message) and 1-based block index.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct KnownBlock {
    pub message: usize,
    pub index: usize,
}

/// What an attack consumed besides the ciphertexts themselves.
#[derive(Clone, PartialEq, Eq, Debug, Default, Serialize)]
pub struct Knowledge {
    pub ciphertexts: usize,
    pub known_plaintext: Vec<KnownBlock>,
    /// Internal chaining values read from a trace, such as `G_3`.
    pub internal_values: Vec<String>,
    /// Oracle submissions spent on guessing.
    pub guesses: u64,
    pub chosen_plaintexts: usize,
    pub shared_ivs: bool,
}

impl Knowledge {
    fn known(mut self, message: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        self.known_plaintext
            .extend(indices.into_iter().map(|index| KnownBlock { message, index }));
        self
    }
}

/// A forged ciphertext with the knowledge it needed and its predicted
/// acceptance probability.
#[derive(Clone, PartialEq, Debug, Serialize)]
pub struct ForgeryPlan {
    pub attack: &'static str,
    pub forged: SequencedCiphertext,
    pub knowledge: Knowledge,
    pub predicted_success: Probability,
}

impl ForgeryPlan {
    pub fn container(&self, mode: ModeKind) -> Result<Container> {
        Container::new(mode, self.forged.clone())
    }

    /// JSON description written next to the forged container.
    pub fn sidecar(&self, mode: ModeKind) -> serde_json::Value {
        serde_json::json!({
            "schema": 1,
            "mode": mode,
            "attack": self.attack,
            "blocks": self.forged.len(),
            "sequence": self.forged.sequence,
            "knowledge": self.knowledge,
            "predicted_success": self.predicted_success,
        })
    }
}

/// A receiver that answers accept or reject and nothing else.
pub trait VerifierOracle {
    fn verify(&self, c: &SequencedCiphertext) -> Result<bool>;
    fn queries(&self) -> u64;
}

/// A receiver backed by a [`ModeInstance`]. When built with
/// [`ModeOracle::with_ivs`] it holds the IVs of one session, as a receiver
/// of freshly keyed messages would.
#[derive(Debug)]
pub struct ModeOracle<'a> {
    mode: &'a ModeInstance,
    ivs: Option<IvPair>,
    queries: AtomicU64,
}

impl<'a> ModeOracle<'a> {
    pub fn new(mode: &'a ModeInstance) -> Self {
        Self {
            mode,
            ivs: None,
            queries: AtomicU64::new(0),
        }
    }

    pub fn with_ivs(mode: &'a ModeInstance, ivs: IvPair) -> Self {
        Self {
            ivs: Some(ivs),
            ..Self::new(mode)
        }
    }
}

impl VerifierOracle for ModeOracle<'_> {
    fn verify(&self, c: &SequencedCiphertext) -> Result<bool> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        let verdict = match &self.ivs {
            Some(ivs) => self.mode.open_verify_with(c, ivs)?,
            None => self.mode.open_verify(c)?,
        };
        Ok(verdict.is_accept())
    }

    fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// A sender that seals attacker-chosen messages under its own key.
pub trait SealOracle {
    fn seal(&self, message: &[Block]) -> Result<SequencedCiphertext>;
}

/// Seals through a [`ModeInstance`] and remembers each message's IVs, so an
/// experiment can later play the matching receiver.
#[derive(Debug)]
pub struct RecordingSealer<'a> {
    mode: &'a ModeInstance,
    ivs: Mutex<Vec<IvPair>>,
}

impl<'a> RecordingSealer<'a> {
    pub fn new(mode: &'a ModeInstance) -> Self {
        Self {
            mode,
            ivs: Mutex::new(Vec::new()),
        }
    }

    /// IVs of the `index`-th sealed message, counting from 0.
    pub fn ivs(&self, index: usize) -> Option<IvPair> {
        self.ivs.lock().expect("sealer log poisoned").get(index).copied()
    }

    pub fn sealed(&self) -> usize {
        self.ivs.lock().expect("sealer log poisoned").len()
    }
}

impl SealOracle for RecordingSealer<'_> {
    fn seal(&self, message: &[Block]) -> Result<SequencedCiphertext> {
        let sealed = self.mode.seal(message)?;
        self.ivs.lock().expect("sealer log poisoned").push(sealed.ivs);
        Ok(sealed.ciphertext)
    }
}

/// How a corrupted ciphertext block relates to the block the receiver's
/// chain expects at that point.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corruption {
    /// Independent of the expected value; may hit it by chance.
    Random,
    /// Guaranteed to differ from it.
    Distinct,
}

/// Approximate probability that a ciphertext corrupted at one block is
/// still accepted, when `aligned_after` genuine blocks follow the corrupted
/// one before the final block.
///
/// After the corruption the receiver's chain can fall back into step with
/// the genuine one: for bijective `g` only if the corrupted block itself
/// lands on the right value, for EPBC also whenever `g` maps a wrong `G` to
/// the right output, which happens with probability about `(3/8)^(n/2)` per
/// block. Independently, the final block matches the MDC with probability
/// `2^-n`. Exact for bijective `g`; for EPBC the per-block events are
/// treated as independent.
pub fn chance_acceptance(
    g: FeedbackFunction,
    width: BlockWidth,
    corruption: Corruption,
    aligned_after: u32,
) -> f64 {
    let n = width.bits() as i32;
    let land = 2f64.powi(-n);
    let (q_random, q_distinct) = if g.is_bijective() {
        (land, 0.0)
    } else {
        let same_image = 1.5f64.powi(width.half() as i32);
        (same_image * land, (same_image - 1.0) / (2f64.powi(n) - 1.0))
    };
    let mut miss = 1.0 - land;
    if aligned_after == 0 {
        if corruption == Corruption::Random {
            miss *= 1.0 - land;
        }
    } else {
        let first = match corruption {
            Corruption::Random => q_random,
            Corruption::Distinct => q_distinct,
        };
        miss *= (1.0 - first) * (1.0 - q_distinct).powi(aligned_after as i32 - 1);
    }
    1.0 - miss
}

fn check_index(index: usize, ok: bool, constraint: impl Into<String>) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange {
            index,
            constraint: constraint.into(),
        })
    }
}

fn check_widths(c: &SequencedCiphertext, others: &[Block]) -> Result<()> {
    let width = c.width()?;
    let zero = Block::zero(width);
    others.iter().try_for_each(|b| zero.check_same_width(b))
}

fn require_linear(kind: ModeKind, attack: &'static str) -> Result<()> {
    if kind.feedback().is_linear() {
        Ok(())
    } else {
        Err(Error::NonLinearFeedback(attack))
    }
}
