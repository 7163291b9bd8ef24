use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{AttackName, Setup, TrialOutcome};
use crate::analysis::Probability;
use crate::attacks::{
    birthday_chosen_plaintext, chance_acceptance, epbc_delta_candidates, epbc_guess_forgery,
    epbc_guess_success_within, forge_general_insert, forge_iobc_shorten, forge_iv_reuse,
    forge_pes_insert, forge_splice, oracle_insert_delta, oracle_splice_correction,
    shortening_success, BirthdayConfig, BirthdayOutcome, Corruption, GuessOutcome, ModeOracle,
    RecordingSealer, VerifierOracle,
};
use crate::bitblocks::Block;
use crate::ciphers::CipherBackend;
use crate::error::Result;
use crate::modes::{IvPair, IvPolicy, ModeInstance, ModeKind, Sealed};

// IOBC derives IVs from sequence numbers; the other modes draw a fresh
// secret pair per message, which the receiver is handed directly.
fn instance(s: &Setup, backend: &CipherBackend, rng: &mut ChaCha8Rng) -> Result<ModeInstance> {
    let cipher = backend.build_random(s.width, rng)?;
    let policy = match s.mode {
        ModeKind::Iobc => IvPolicy::derived(backend.build_random(s.width, rng)?),
        _ => IvPolicy::fresh(rng.gen()),
    };
    ModeInstance::new(s.mode, cipher, policy)
}

fn receiver(m: &ModeInstance, ivs: IvPair) -> ModeOracle<'_> {
    match m.kind() {
        ModeKind::Iobc => ModeOracle::new(m),
        _ => ModeOracle::with_ivs(m, ivs),
    }
}

fn message(s: &Setup, rng: &mut ChaCha8Rng) -> Vec<Block> {
    (0..s.t - 1).map(|_| Block::random(s.width, rng)).collect()
}

fn nonzero(s: &Setup, rng: &mut ChaCha8Rng) -> Block {
    loop {
        let b = Block::random(s.width, rng);
        if b.value() != 0 {
            return b;
        }
    }
}

fn single(success: bool) -> TrialOutcome {
    TrialOutcome {
        success,
        queries: 1,
        ..TrialOutcome::default()
    }
}

pub(super) fn run_trial(
    s: &Setup,
    backend: &CipherBackend,
    rng: &mut ChaCha8Rng,
) -> Result<TrialOutcome> {
    let m = instance(s, backend, rng)?;
    let g = m.feedback();
    match s.attack {
        AttackName::PesInsert => {
            let msg = message(s, rng);
            let sealed = m.seal(&msg)?;
            let p_j = if s.control { Block::random(s.width, rng) } else { msg[s.j - 1] };
            let plan = forge_pes_insert(s.mode, &sealed.ciphertext, s.j, p_j)?;
            Ok(single(receiver(&m, sealed.ivs).verify(&plan.forged)?))
        }
        AttackName::GeneralInsert => {
            let msg = message(s, rng);
            let sealed = m.seal(&msg)?;
            let mut delta = oracle_insert_delta(g, &sealed.trace, s.j)?;
            if s.control {
                delta = delta ^ nonzero(s, rng);
            }
            let plan = forge_general_insert(&sealed.ciphertext, s.j, msg[s.j - 1], delta)?;
            Ok(single(receiver(&m, sealed.ivs).verify(&plan.forged)?))
        }
        AttackName::EpbcGuess => {
            let msg = message(s, rng);
            let sealed = m.seal(&msg)?;
            let oracle = receiver(&m, sealed.ivs);
            let cap = s.budget.map(|b| b as u64);
            let out = epbc_guess_forgery(
                s.mode,
                &sealed.ciphertext,
                s.j,
                msg[s.j - 1],
                &oracle,
                s.weight_limit,
                cap,
            )?;
            // Bookkeeping only: whether the true delta was on the list.
            let delta = oracle_insert_delta(g, &sealed.trace, s.j)?;
            let covered = match cap {
                None => delta.halves().0.count_ones() <= s.weight_limit,
                Some(cap) => epbc_delta_candidates(s.width, s.weight_limit)
                    .take(cap as usize)
                    .any(|c| c == delta),
            };
            Ok(TrialOutcome {
                success: matches!(out, GuessOutcome::Success { .. }),
                queries: oracle.queries(),
                chosen: 0,
                condition: Some(covered),
            })
        }
        AttackName::Splice => {
            let (a, b) = (message(s, rng), message(s, rng));
            let (sealed, sealed_prime) = (m.seal(&a)?, m.seal(&b)?);
            let correction = if s.control {
                Block::random(s.width, rng)
            } else {
                oracle_splice_correction(g, &sealed.trace, &sealed_prime.trace, s.u, s.v)?
            };
            let plan = forge_splice(
                &sealed.ciphertext,
                &sealed_prime.ciphertext,
                s.u,
                s.v,
                correction,
            )?;
            Ok(single(receiver(&m, sealed_prime.ivs).verify(&plan.forged)?))
        }
        AttackName::IobcShorten => {
            let msg = message(s, rng);
            let sealed = m.seal(&msg)?;
            let c = &sealed.ciphertext;
            let plan = if s.control {
                let v = s.j + 2 * s.k + 1;
                forge_splice(c, c, s.j + 1, v, Block::random(s.width, rng))?
            } else {
                let known: Vec<Block> = (1..=s.k).map(|i| msg[s.j + 2 * i - 1]).collect();
                forge_iobc_shorten(s.mode, c, &known, s.j, s.k)?
            };
            Ok(single(receiver(&m, sealed.ivs).verify(&plan.forged)?))
        }
        AttackName::IvReuse => {
            let (a, b) = (message(s, rng), message(s, rng));
            let (sealed, sealed_prime) = if s.control {
                (m.seal(&a)?, m.seal(&b)?)
            } else {
                shared_ivs(&m, &a, &b, rng)?
            };
            let plan = forge_iv_reuse(
                s.mode,
                &sealed.ciphertext,
                &sealed_prime.ciphertext,
                a[1],
                b[1],
            )?;
            Ok(single(receiver(&m, sealed_prime.ivs).verify(&plan.forged)?))
        }
        AttackName::Birthday => {
            let budget = s.budget.expect("validated");
            let sealer = RecordingSealer::new(&m);
            let config = BirthdayConfig {
                p_star: Block::random(s.width, rng),
                blocks_per_message: s.t - 1,
                budget,
            };
            let out = birthday_chosen_plaintext(&sealer, &config, rng)?;
            let chosen = budget as u64;
            Ok(match out {
                BirthdayOutcome::Forgery { plan, collision, .. } => {
                    let ivs = sealer.ivs(collision.prefix).expect("recorded");
                    TrialOutcome {
                        success: receiver(&m, ivs).verify(&plan.forged)?,
                        queries: 1,
                        chosen,
                        condition: Some(true),
                    }
                }
                BirthdayOutcome::NoCollision => TrialOutcome {
                    success: false,
                    queries: 0,
                    chosen,
                    condition: Some(false),
                },
            })
        }
    }
}

fn shared_ivs(
    m: &ModeInstance,
    a: &[Block],
    b: &[Block],
    rng: &mut ChaCha8Rng,
) -> Result<(Sealed, Sealed)> {
    if m.kind() == ModeKind::Iobc {
        let seq = Block::random(m.width(), rng);
        Ok((m.seal_at_sequence(a, seq)?, m.seal_at_sequence(b, seq)?))
    } else {
        let ivs = IvPair::random_distinct(m.width(), rng);
        Ok((m.seal_with_ivs(a, ivs, None)?, m.seal_with_ivs(b, ivs, None)?))
    }
}

pub(super) fn condition_name(attack: AttackName) -> Option<&'static str> {
    match attack {
        AttackName::EpbcGuess => Some("delta covered"),
        AttackName::Birthday => Some("collision found"),
        _ => None,
    }
}

/// The attack's own success probability, the total used for the band and
/// the predicted rate under the side condition, if any.
pub(super) fn predict(s: &Setup) -> (Probability, f64, Option<f64>) {
    let g = s.mode.feedback();
    let chance = |c: Corruption, after: usize| chance_acceptance(g, s.width, c, after as u32);
    let certain = (Probability::one(), 1.0, None);
    let control = |p: f64| (Probability::zero(), p, None);
    match s.attack {
        AttackName::PesInsert if s.control => control(chance(Corruption::Random, s.t - s.j)),
        AttackName::GeneralInsert if s.control => control(chance(Corruption::Distinct, s.t - s.j)),
        AttackName::PesInsert | AttackName::GeneralInsert => certain,
        AttackName::EpbcGuess => {
            let cap = s.budget.map(|b| b as u64);
            let attack = epbc_guess_success_within(s.width, s.weight_limit, cap);
            let listed = epbc_delta_candidates(s.width, s.weight_limit).total();
            let tried = match cap {
                Some(cap) => listed.min(cap.into()),
                None => listed,
            };
            // A wrong guess that is accepted anyway is still a forgery.
            let rho = chance(Corruption::Distinct, s.t - s.j);
            let tries = u32::try_from(tried).unwrap_or(u32::MAX);
            let miss = (1.0 - rho).powf(f64::from(tries));
            let p = attack.to_f64();
            (attack, p + (1.0 - p) * (1.0 - miss), Some(1.0))
        }
        AttackName::Splice if s.control => control(chance(Corruption::Random, s.t - s.v - 1)),
        AttackName::Splice => certain,
        AttackName::IobcShorten => {
            let v = s.j + 2 * s.k + 1;
            if s.control {
                return control(chance(Corruption::Random, s.t - v - 1));
            }
            let attack = shortening_success(s.mode, s.width, s.k as u64).expect("validated");
            let p = attack.to_f64();
            let total = p + (1.0 - p) * chance(Corruption::Distinct, s.t - v - 1);
            (attack, total, None)
        }
        AttackName::IvReuse if s.control => control(chance(Corruption::Random, s.t - 4)),
        AttackName::IvReuse => certain,
        AttackName::Birthday => {
            // Cross-message pairs among the positions 2..t-1 of each message.
            let per = (s.t - 2) as f64;
            let budget = s.budget.expect("validated") as f64;
            let pairs = budget * (budget - 1.0) / 2.0 * per * per;
            let collide = 1.0 - (-pairs * 2f64.powi(-(s.width.bits() as i32))).exp();
            // Splices from unmerged chains still pass by chance; the suffix
            // position is roughly uniform over 2..t-1.
            let stray = (2..s.t)
                .map(|i| chance(Corruption::Distinct, s.t - i - 1))
                .sum::<f64>()
                / per;
            let half = Probability::ratio(1, 2).expect("valid");
            let given = 0.5 + 0.5 * stray;
            (half, collide * given, Some(given))
        }
    }
}
