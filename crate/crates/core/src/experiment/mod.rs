//! Seeded Monte-Carlo experiments: one attack, many independent trials.
//!
//! Trial `i` draws everything (keys, IVs, messages, attacker coins) from a
//! ChaCha8 generator seeded with the experiment seed and set to stream `i`,
//! so results do not depend on how trials are scheduled.

mod trials;


use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{best_shortening_power, Probability};
use crate::bitblocks::{BlockWidth, PositionPermutation};
use crate::ciphers::CipherBackend;
use crate::error::{Error, Result};
use crate::modes::ModeKind;

pub const SCHEMA: u32 = 1;

/// Ciphertext length used when none is given, MDC block included.
pub const DEFAULT_BLOCKS: usize = 8;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackName {
    PesInsert,
    GeneralInsert,
    EpbcGuess,
    Splice,
    IobcShorten,
    IvReuse,
    Birthday,
}

impl AttackName {
    pub const ALL: [AttackName; 7] = [
        AttackName::PesInsert,
        AttackName::GeneralInsert,
        AttackName::EpbcGuess,
        AttackName::Splice,
        AttackName::IobcShorten,
        AttackName::IvReuse,
        AttackName::Birthday,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AttackName::PesInsert => "pes-insert",
            AttackName::GeneralInsert => "general-insert",
            AttackName::EpbcGuess => "epbc-guess",
            AttackName::Splice => "splice",
            AttackName::IobcShorten => "iobc-shorten",
            AttackName::IvReuse => "iv-reuse",
            AttackName::Birthday => "birthday",
        }
    }

    /// Modes the attack applies to.
    pub fn modes(self) -> &'static [ModeKind] {
        match self {
            AttackName::PesInsert => &[ModeKind::PesPcbc],
            AttackName::EpbcGuess => &[ModeKind::Epbc],
            AttackName::IobcShorten | AttackName::IvReuse => &[ModeKind::PesPcbc, ModeKind::Iobc],
            AttackName::GeneralInsert | AttackName::Splice | AttackName::Birthday => &ModeKind::ALL,
        }
    }

    /// Whether the attack has a control variant that spoils its key step.
    pub fn has_control(self) -> bool {
        !matches!(self, AttackName::EpbcGuess | AttackName::Birthday)
    }
}

impl fmt::Display for AttackName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AttackName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AttackName::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown attack {s:?}")))
    }
}

/// Attack parameters. Unset values get defaults during validation.
///
/// `blocks` is the ciphertext length `t` of the attacked message, MDC block
/// included. `budget` caps oracle queries for `epbc-guess` and is the number
/// of sealed messages for `birthday`. With `control` set, the attack's key
/// ingredient is replaced by a random or wrong value, so acceptance falls to
/// chance level.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_limit: Option<u32>,
    #[serde(default)]
    pub control: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: ModeKind,
    pub width: u32,
    pub cipher: CipherBackend,
    pub seed: u64,
    pub trials: u64,
    pub attack: AttackName,
    #[serde(default)]
    pub params: AttackParams,
}

/// Fully resolved parameters, checked against the attack's preconditions.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Setup {
    pub mode: ModeKind,
    pub width: BlockWidth,
    pub attack: AttackName,
    pub t: usize,
    pub j: usize,
    pub k: usize,
    pub u: usize,
    pub v: usize,
    pub budget: Option<usize>,
    pub weight_limit: u32,
    pub control: bool,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl ExperimentConfig {
    pub fn new(mode: ModeKind, width: u32, attack: AttackName) -> Self {
        Self {
            mode,
            width,
            cipher: CipherBackend::Ideal,
            seed: 0,
            trials: 1000,
            attack,
            params: AttackParams::default(),
        }
    }

    /// Fills in defaults and checks every precondition, so that a config
    /// which validates cannot fail for parameter reasons mid-run.
    pub fn validate(&self) -> Result<ExperimentConfig> {
        let setup = self.setup()?;
        let mut out = self.clone();
        let p = &mut out.params;
        p.blocks = Some(setup.t);
        match setup.attack {
            AttackName::PesInsert | AttackName::GeneralInsert => p.j = Some(setup.j),
            AttackName::EpbcGuess => {
                p.j = Some(setup.j);
                p.weight_limit = Some(setup.weight_limit);
            }
            AttackName::Splice => {
                p.u = Some(setup.u);
                p.v = Some(setup.v);
            }
            AttackName::IobcShorten => {
                p.j = Some(setup.j);
                p.k = Some(setup.k);
            }
            AttackName::IvReuse => {}
            AttackName::Birthday => p.budget = setup.budget,
        }
        Ok(out)
    }

    pub(crate) fn setup(&self) -> Result<Setup> {
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        let width = BlockWidth::new(self.width)?;
        self.mode.feedback().check_width(width)?;
        self.cipher.check_width(width)?;
        let attack = self.attack;
        if !attack.modes().contains(&self.mode) {
            return Err(Error::WrongMode {
                attack: attack.name(),
                mode: self.mode.name(),
            });
        }
        let p = &self.params;
        if p.control && !attack.has_control() {
            return Err(invalid(format!("{attack} has no control variant")));
        }
        let unused = |name: &str, set: bool| -> Result<()> {
            if set {
                Err(invalid(format!("{attack} does not take --{name}")))
            } else {
                Ok(())
            }
        };
        let mut s = Setup {
            mode: self.mode,
            width,
            attack,
            t: p.blocks.unwrap_or(DEFAULT_BLOCKS),
            j: 0,
            k: 0,
            u: 0,
            v: 0,
            budget: None,
            weight_limit: 0,
            control: p.control,
        };
        let t = s.t;
        let range = |name: &str, x: usize, ok: bool, rule: &str| -> Result<usize> {
            if ok {
                Ok(x)
            } else {
                Err(invalid(format!("{name} = {x} violates {rule} (t = {t})")))
            }
        };
        match attack {
            AttackName::PesInsert | AttackName::GeneralInsert => {
                unused("k", p.k.is_some())?;
                unused("u", p.u.is_some())?;
                unused("v", p.v.is_some())?;
                unused("budget", p.budget.is_some())?;
                unused("weight-limit", p.weight_limit.is_some())?;
                let j = p.j.unwrap_or(2);
                s.j = range("j", j, 1 < j && j < t, "1 < j < t")?;
            }
            AttackName::EpbcGuess => {
                unused("k", p.k.is_some())?;
                unused("u", p.u.is_some())?;
                unused("v", p.v.is_some())?;
                // Inserting next to the MDC block leaves one aligned block,
                // which keeps chance acceptance of wrong guesses low.
                let j = p.j.unwrap_or(t.saturating_sub(1));
                s.j = range("j", j, 1 < j && j < t, "1 < j < t")?;
                s.weight_limit = p.weight_limit.unwrap_or((self.width / 8).max(1));
                s.budget = p.budget;
            }
            AttackName::Splice => {
                unused("j", p.j.is_some())?;
                unused("k", p.k.is_some())?;
                unused("budget", p.budget.is_some())?;
                unused("weight-limit", p.weight_limit.is_some())?;
                let u = p.u.unwrap_or(3);
                let v = p.v.unwrap_or(4);
                s.u = range("u", u, 1 < u && u <= t, "1 < u <= t'")?;
                s.v = range("v", v, 1 < v && v < t, "1 < v < t")?;
            }
            AttackName::IobcShorten => {
                unused("u", p.u.is_some())?;
                unused("v", p.v.is_some())?;
                unused("budget", p.budget.is_some())?;
                unused("weight-limit", p.weight_limit.is_some())?;
                let j = p.j.unwrap_or(1);
                let k = match p.k {
                    Some(k) => k,
                    None => default_shortening(self.mode, width, j)?,
                };
                if k == 0 {
                    return Err(invalid("k must be at least 1"));
                }
                s.t = p.blocks.unwrap_or(j + 2 * k + 2);
                let t = s.t;
                if j == 0 || j + 2 * k + 2 > t {
                    return Err(invalid(format!(
                        "need j >= 1 and j + 2k + 2 <= t, got j = {j}, k = {k}, t = {t}"
                    )));
                }
                s.j = j;
                s.k = k;
            }
            AttackName::IvReuse => {
                unused("j", p.j.is_some())?;
                unused("k", p.k.is_some())?;
                unused("u", p.u.is_some())?;
                unused("v", p.v.is_some())?;
                unused("budget", p.budget.is_some())?;
                unused("weight-limit", p.weight_limit.is_some())?;
                range("blocks", t, t >= 4, "t >= 4")?;
            }
            AttackName::Birthday => {
                unused("j", p.j.is_some())?;
                unused("k", p.k.is_some())?;
                unused("u", p.u.is_some())?;
                unused("v", p.v.is_some())?;
                unused("weight-limit", p.weight_limit.is_some())?;
                s.t = p.blocks.unwrap_or(65);
                range("blocks", s.t, s.t >= 3, "t >= 3")?;
                let budget = p.budget.unwrap_or(1024);
                if budget == 0 {
                    return Err(invalid("budget must be at least 1"));
                }
                s.budget = Some(budget);
            }
        }
        if s.t < 2 {
            return Err(invalid("messages need at least 2 blocks"));
        }
        if let Some(max) = self.mode.max_blocks(width) {
            if s.t > max {
                return Err(Error::LengthLimit { blocks: s.t, max });
            }
        }
        Ok(s)
    }
}

/// Shortening power with the best fixed-point fraction that still fits
/// in one message; 1 for identity feedback.
fn default_shortening(mode: ModeKind, width: BlockWidth, j: usize) -> Result<usize> {
    if mode != ModeKind::Iobc {
        return Ok(1);
    }
    let (k, _) = best_shortening_power(&PositionPermutation::iobc(width)?)?;
    let k = k as usize;
    match mode.max_blocks(width) {
        Some(max) if j + 2 * k + 2 > max => {
            Err(invalid(format!("best k = {k} does not fit in {max} blocks; set --k")))
        }
        _ => Ok(k),
    }
}

/// What one trial produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct TrialOutcome {
    pub success: bool,
    pub queries: u64,
    pub chosen: u64,
    /// Whether the trial met the attack's side condition, if it has one.
    pub condition: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueryStats {
    pub total: u64,
    pub mean: f64,
    pub max: u64,
    /// Number of trials per verifier query count.
    pub histogram: BTreeMap<u64, u64>,
}

/// Success among trials meeting a side condition, such as "a collision
/// was found" or "the true delta was among the candidates".
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conditional {
    pub condition: &'static str,
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub predicted: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    /// The attack's own success probability.
    pub attack: Probability,
    /// Probability used for the band: the attack's, plus chance acceptance
    /// of forgeries that miss. Equals the chance rate for controls.
    pub total: f64,
    pub sigma: f64,
    pub band: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub trials: u64,
    pub successes: u64,
    pub empirical: f64,
    pub prediction: Prediction,
    pub within_band: bool,
    pub queries: QueryStats,
    pub chosen_plaintexts: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub conditional: Option<Conditional>,
    #[serde(skip)]
    pub duration: Duration,
}

impl ExperimentResult {
    /// Pretty JSON; byte-identical for identical configs.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serialises")
    }

    pub fn to_table(&self) -> String {
        let c = &self.config;
        let mut rows: Vec<(String, String)> = vec![
            ("attack".into(), c.attack.to_string()),
            ("mode".into(), c.mode.to_string()),
            ("width".into(), c.width.to_string()),
            ("seed".into(), c.seed.to_string()),
            ("control".into(), c.params.control.to_string()),
            ("trials".into(), self.trials.to_string()),
            ("successes".into(), self.successes.to_string()),
            ("empirical".into(), format!("{:.6}", self.empirical)),
            ("predicted (attack)".into(), format!("{:.6}", self.prediction.attack.to_f64())),
            ("predicted".into(), format!("{:.6}", self.prediction.total)),
            (
                "3 sigma band".into(),
                format!("[{:.6}, {:.6}]", self.prediction.band[0], self.prediction.band[1]),
            ),
            ("within band".into(), self.within_band.to_string()),
            ("mean queries".into(), format!("{:.3}", self.queries.mean)),
            ("max queries".into(), self.queries.max.to_string()),
        ];
        if let Some(cond) = &self.conditional {
            rows.push((
                format!("given {}", cond.condition),
                format!("{}/{} = {:.6}", cond.successes, cond.trials, cond.rate),
            ));
        }
        rows.push(("duration".into(), format!("{:.3} s", self.duration.as_secs_f64())));
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        rows.iter()
            .map(|(k, v)| format!("{k:<width$}  {v}\n"))
            .collect()
    }
}

/// How trials are scheduled. Results are identical either way.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        return Execution::Parallel;
        #[cfg(not(feature = "parallel"))]
        Execution::Sequential
    }
}

/// The generator for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(config, Execution::default())
}

pub fn run_experiment_with(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult> {
    let resolved = config.validate()?;
    let setup = resolved.setup()?;
    let start = Instant::now();
    let run = |i: u64| trials::run_trial(&setup, &resolved.cipher, &mut trial_rng(resolved.seed, i));
    let outcomes: Vec<TrialOutcome> = match exec {
        Execution::Sequential => (0..resolved.trials).map(run).collect::<Result<_>>()?,
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..resolved.trials).into_par_iter().map(run).collect::<Result<_>>()?
        }
    };
    let duration = start.elapsed();
    log::debug!("{} trials of {} in {:?}", resolved.trials, resolved.attack, duration);
    Ok(summarise(resolved, &setup, &outcomes, duration))
}

fn summarise(
    config: ExperimentConfig,
    setup: &Setup,
    outcomes: &[TrialOutcome],
    duration: Duration,
) -> ExperimentResult {
    let trials = outcomes.len() as u64;
    let successes = outcomes.iter().filter(|o| o.success).count() as u64;
    let empirical = successes as f64 / trials as f64;

    let (attack, total, conditional_prediction) = trials::predict(setup);
    let sigma = (total * (1.0 - total) / trials as f64).sqrt();
    let band = [(total - 3.0 * sigma).max(0.0), (total + 3.0 * sigma).min(1.0)];
    // Rounding slack so that certain outcomes sit inside a zero-width band.
    let within_band = empirical >= band[0] - 1e-12 && empirical <= band[1] + 1e-12;

    let mut histogram = BTreeMap::new();
    for o in outcomes {
        *histogram.entry(o.queries).or_insert(0) += 1;
    }
    let total_queries: u64 = outcomes.iter().map(|o| o.queries).sum();
    let queries = QueryStats {
        total: total_queries,
        mean: total_queries as f64 / trials as f64,
        max: outcomes.iter().map(|o| o.queries).max().unwrap_or(0),
        histogram,
    };

    let conditional = trials::condition_name(setup.attack).map(|condition| {
        let met: Vec<_> = outcomes.iter().filter(|o| o.condition == Some(true)).collect();
        let hits = met.iter().filter(|o| o.success).count() as u64;
        Conditional {
            condition,
            trials: met.len() as u64,
            successes: hits,
            rate: if met.is_empty() { 0.0 } else { hits as f64 / met.len() as f64 },
            predicted: conditional_prediction,
        }
    });

    ExperimentResult {
        schema: SCHEMA,
        config,
        trials,
        successes,
        empirical,
        prediction: Prediction {
            attack,
            total,
            sigma,
            band,
        },
        within_band,
        queries,
        chosen_plaintexts: outcomes.iter().map(|o| o.chosen).sum(),
        conditional,
        duration,
    }
}
