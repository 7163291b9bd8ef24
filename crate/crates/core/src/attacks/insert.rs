use super::{check_index, check_widths, ForgeryPlan, Knowledge, VerifierOracle};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Pow, Zero};

use crate::analysis::{binom_sum, binomial, binomial_cdf, Probability};
use crate::bitblocks::{low_mask, Block, BlockWidth, FeedbackFunction};
use crate::error::{Error, Result};
use crate::modes::{EncryptionTrace, ModeKind, SequencedCiphertext};

fn inserted(c: &SequencedCiphertext, j: usize, block: Block) -> SequencedCiphertext {
    let mut blocks = Vec::with_capacity(c.len() + 2);
    blocks.extend_from_slice(&c.blocks[..j]);
    blocks.push(block);
    blocks.extend_from_slice(&c.blocks[j - 1..]);
    SequencedCiphertext::new(c.sequence, blocks)
}

fn check_insert_index(c: &SequencedCiphertext, j: usize) -> Result<()> {
    let t = c.len();
    check_index(j, 1 < j && j < t, format!("need 1 < j < t = {t}"))
}

/// `C_1..C_j, P_j, C_j..C_t` against PES-PCBC, accepted with certainty.
pub fn forge_pes_insert(
    kind: ModeKind,
    c: &SequencedCiphertext,
    j: usize,
    p_j: Block,
) -> Result<ForgeryPlan> {
    if kind != ModeKind::PesPcbc {
        return Err(Error::WrongMode {
            attack: "pes-insert",
            mode: kind.name(),
        });
    }
    check_widths(c, &[p_j])?;
    check_insert_index(c, j)?;
    Ok(ForgeryPlan {
        attack: "pes-insert",
        forged: inserted(c, j, p_j),
        knowledge: Knowledge {
            ciphertexts: 1,
            ..Knowledge::default()
        }
        .known(0, [j]),
        predicted_success: Probability::one(),
    })
}

/// `C_1..C_j, P_j ^ delta, C_j..C_t` for any feedback function. Accepted
/// exactly when `delta = G_j ^ g(G_j)`; the plan's prediction assumes it is.
pub fn forge_general_insert(
    c: &SequencedCiphertext,
    j: usize,
    p_j: Block,
    delta: Block,
) -> Result<ForgeryPlan> {
    check_widths(c, &[p_j, delta])?;
    check_insert_index(c, j)?;
    Ok(ForgeryPlan {
        attack: "general-insert",
        forged: inserted(c, j, p_j ^ delta),
        knowledge: Knowledge {
            ciphertexts: 1,
            ..Knowledge::default()
        }
        .known(0, [j]),
        predicted_success: Probability::one(),
    })
}

/// `G_j ^ g(G_j)`, read from an encryption trace.
pub fn oracle_insert_delta(g: FeedbackFunction, trace: &EncryptionTrace, j: usize) -> Result<Block> {
    check_index(j, j < trace.g.len(), format!("trace holds G_0..G_{}", trace.len()))?;
    let gj = trace.g[j];
    Ok(gj ^ g.apply(gj)?)
}

/// Candidates for the EPBC insertion delta `H || !H`, with `H` of weight at
/// most `weight_limit`, lightest first and ascending within a weight.
pub fn epbc_delta_candidates(width: BlockWidth, weight_limit: u32) -> CandidateStream {
    CandidateStream {
        width,
        limit: weight_limit.min(width.half()),
        weight: 0,
        next: Some(0),
    }
}

/// Iterator returned by [`epbc_delta_candidates`].
#[derive(Clone, Debug)]
pub struct CandidateStream {
    width: BlockWidth,
    limit: u32,
    weight: u32,
    next: Option<u128>,
}

impl CandidateStream {
    /// Number of candidates the full stream yields.
    pub fn total(&self) -> num_bigint::BigUint {
        binom_sum(u64::from(self.width.half()), u64::from(self.limit)).expect("limit <= m")
    }

    // Next larger integer with the same number of set bits.
    fn successor(x: u128) -> Option<u128> {
        let c = x & x.wrapping_neg();
        let r = x.checked_add(c)?;
        Some((((r ^ x) >> 2) / c) | r)
    }
}

impl Iterator for CandidateStream {
    type Item = Block;

    fn next(&mut self) -> Option<Block> {
        let m = self.width.half();
        let h = self.next?;
        let mask = low_mask(m);
        let same_weight = if h == 0 {
            None
        } else {
            Self::successor(h).filter(|&s| s <= mask)
        };
        self.next = match same_weight {
            Some(s) => Some(s),
            None if self.weight < self.limit => {
                self.weight += 1;
                Some(low_mask(self.weight))
            }
            None => None,
        };
        Some(Block::from_halves(self.width, h, !h & mask))
    }
}

/// Probability that the EPBC insertion delta lies among the candidates:
/// each bit of its left half is set with probability 1/4.
pub fn epbc_guess_success(width: BlockWidth, weight_limit: u32) -> Probability {
    let m = width.half();
    binomial_cdf(
        u64::from(m),
        u64::from(weight_limit.min(m)),
        &Probability::ratio(1, 4).expect("valid"),
    )
}

/// [`epbc_guess_success`] when only the first `max_trials` candidates are
/// tried.
pub fn epbc_guess_success_within(
    width: BlockWidth,
    weight_limit: u32,
    max_trials: Option<u64>,
) -> Probability {
    let Some(max) = max_trials else {
        return epbc_guess_success(width, weight_limit);
    };
    let m = u64::from(width.half());
    let mut left = BigUint::from(max);
    let mut total = BigRational::zero();
    for w in 0..=u64::from(weight_limit).min(m) {
        let take = binomial(m, w).min(left.clone());
        left -= &take;
        // (1/4)^w (3/4)^(m-w) = 3^(m-w) / 4^m
        let num = BigInt::from(take) * BigInt::from(3u8).pow((m - w) as u32);
        total += BigRational::new(num, BigInt::from(4u8).pow(m as u32));
    }
    Probability::new(total).expect("at most one")
}

/// Result of [`epbc_guess_forgery`].
#[derive(Clone, Debug, PartialEq)]
pub enum GuessOutcome {
    Success { plan: ForgeryPlan, trials: u64 },
    Exhausted { trials: u64 },
}

impl GuessOutcome {
    pub fn trials(&self) -> u64 {
        match self {
            GuessOutcome::Success { trials, .. } | GuessOutcome::Exhausted { trials } => *trials,
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, GuessOutcome::Success { .. })
    }
}

/// Submits [`forge_general_insert`] with each EPBC candidate until the
/// oracle accepts, the candidates run out or `max_trials` is reached.
pub fn epbc_guess_forgery(
    kind: ModeKind,
    c: &SequencedCiphertext,
    j: usize,
    p_j: Block,
    oracle: &dyn VerifierOracle,
    weight_limit: u32,
    max_trials: Option<u64>,
) -> Result<GuessOutcome> {
    if kind != ModeKind::Epbc {
        return Err(Error::WrongMode {
            attack: "epbc-guess",
            mode: kind.name(),
        });
    }
    let width = c.width()?;
    check_widths(c, &[p_j])?;
    check_insert_index(c, j)?;
    let mut trials = 0u64;
    for delta in epbc_delta_candidates(width, weight_limit) {
        if max_trials.is_some_and(|max| trials >= max) {
            break;
        }
        let mut plan = forge_general_insert(c, j, p_j, delta)?;
        trials += 1;
        if oracle.verify(&plan.forged)? {
            plan.attack = "epbc-guess";
            plan.knowledge.guesses = trials;
            plan.predicted_success = epbc_guess_success_within(width, weight_limit, max_trials);
            return Ok(GuessOutcome::Success { plan, trials });
        }
    }
    Ok(GuessOutcome::Exhausted { trials })
}
