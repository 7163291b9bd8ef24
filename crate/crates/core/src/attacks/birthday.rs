use rand::Rng;
use serde::Serialize;

use super::{forge_splice, ForgeryPlan, SealOracle};
use crate::analysis::Probability;
use crate::bitblocks::Block;
use crate::error::{Error, Result};
use crate::modes::SequencedCiphertext;

/// Chosen messages are `blocks_per_message` copies of `p_star`; `budget`
/// of them are sealed.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BirthdayConfig {
    pub p_star: Block,
    pub blocks_per_message: usize,
    pub budget: usize,
}

/// `C'_j = C_i` with `P'_j = P_i = P*`. Messages are numbered in sealing
/// order from 0; `prefix` supplies `C'`.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub struct Collision {
    pub prefix: usize,
    pub j: usize,
    pub suffix: usize,
    pub i: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BirthdayOutcome {
    Forgery {
        plan: ForgeryPlan,
        collision: Collision,
        /// Colliding cross-message pairs available to choose from.
        pairs: u64,
    },
    NoCollision,
}

impl BirthdayOutcome {
    pub fn collided(&self) -> bool {
        matches!(self, BirthdayOutcome::Forgery { .. })
    }
}

const MAX_RESAMPLES: usize = 1000;

/// Seals the chosen messages, indexes every `(C value, position)` of the
/// repeated block and splices across one colliding pair drawn uniformly:
/// `C'_1..C'_{j-1}, C_i, C_{i+1}..C_t`.
///
/// Roughly half of all colliding pairs come from chains that have merged,
/// and those splices are accepted. Pairs whose splice reproduces a sealed
/// ciphertext are redrawn.
pub fn birthday_chosen_plaintext<R: Rng + ?Sized>(
    sealer: &dyn SealOracle,
    config: &BirthdayConfig,
    rng: &mut R,
) -> Result<BirthdayOutcome> {
    if config.blocks_per_message < 2 {
        return Err(Error::InvalidParameter(
            "birthday messages need at least 2 blocks".into(),
        ));
    }
    let message = vec![config.p_star; config.blocks_per_message];
    let sealed: Vec<SequencedCiphertext> = (0..config.budget)
        .map(|_| sealer.seal(&message))
        .collect::<Result<_>>()?;

    // (value, message, position) for positions 2..=blocks_per_message; the
    // MDC block follows, so every such position is below t.
    let mut entries: Vec<(u128, u32, u32)> = Vec::with_capacity(config.budget * message.len());
    for (a, c) in sealed.iter().enumerate() {
        for pos in 2..=config.blocks_per_message {
            entries.push((c.block(pos).value(), a as u32, pos as u32));
        }
    }
    entries.sort_unstable();

    let mut groups: Vec<(usize, usize, u64)> = Vec::new();
    let mut start = 0;
    while start < entries.len() {
        let mut end = start + 1;
        while end < entries.len() && entries[end].0 == entries[start].0 {
            end += 1;
        }
        let cross = cross_pairs(&entries[start..end]).len() as u64;
        if cross > 0 {
            groups.push((start, end, cross));
        }
        start = end;
    }
    let pairs: u64 = groups.iter().map(|g| g.2).sum();
    if pairs == 0 {
        return Ok(BirthdayOutcome::NoCollision);
    }

    for _ in 0..MAX_RESAMPLES {
        let mut r = rng.gen_range(0..pairs);
        let &(s, e, _) = groups
            .iter()
            .find(|g| {
                if r < g.2 {
                    true
                } else {
                    r -= g.2;
                    false
                }
            })
            .expect("r < total");
        let (x, y) = cross_pairs(&entries[s..e])[r as usize];
        let (p, q) = if rng.gen::<bool>() { (x, y) } else { (y, x) };
        let collision = Collision {
            prefix: p.1 as usize,
            j: p.2 as usize,
            suffix: q.1 as usize,
            i: q.2 as usize,
        };
        let c_prime = &sealed[collision.prefix];
        let c = &sealed[collision.suffix];
        let mut plan = forge_splice(c, c_prime, collision.j, collision.i, Block::zero(config.p_star.width()))?;
        if plan.forged == *c || plan.forged == *c_prime {
            continue;
        }
        plan.attack = "birthday";
        plan.knowledge.ciphertexts = config.budget;
        plan.knowledge.chosen_plaintexts = config.budget;
        plan.predicted_success = Probability::ratio(1, 2).expect("valid");
        return Ok(BirthdayOutcome::Forgery {
            plan,
            collision,
            pairs,
        });
    }
    Ok(BirthdayOutcome::NoCollision)
}

type Entry = (u128, u32, u32);

fn cross_pairs(group: &[Entry]) -> Vec<(Entry, Entry)> {
    let mut out = Vec::new();
    for (n, x) in group.iter().enumerate() {
        for y in &group[n + 1..] {
            if x.1 != y.1 {
                out.push((*x, *y));
            }
        }
    }
    out
}
