//! Running the machine-room prelude end to end, plus a native
//! re-implementation of the exact same run.
//!
//! [`run_bandit`] composes the prelude fragments, typechecks the result
//! under the empty ambient row, evaluates it, and reads the round-by-round
//! history out of the evaluator's handler trace. [`oracle_bandit`] plays
//! the same rounds natively, drawing from the same [`RandomSource`] in the
//! same order, so the two agree arm for arm and bit for bit; being a few
//! thousand times faster, the oracle is the one to use for statistics over
//! many seeds.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use crate::ast::{Constant, EffectSet, ValKind};
use crate::check::{type_of_comp, Mode};
use crate::diag::Diagnostic;
use crate::eval::{EvalError, Evaluator, Outcome, RandomSource};
use crate::parse::parse_program;
use crate::prelude;

/// Everything a run needs. `machines` must be at least 1 and `rounds` at
/// least 0; the payout for arm `a` is `a + uniform[0, width)`.
#[derive(Clone, Copy, Debug)]
pub struct BanditConfig {
    pub machines: i64,
    pub rounds: i64,
    pub epsilon: f64,
    pub initial: f64,
    pub width: f64,
    pub seed: u64,
}

impl Default for BanditConfig {
    fn default() -> BanditConfig {
        BanditConfig {
            machines: prelude::DEFAULT_MACHINES,
            rounds: prelude::DEFAULT_ROUNDS,
            epsilon: prelude::DEFAULT_EPSILON,
            initial: prelude::DEFAULT_INITIAL,
            width: prelude::DEFAULT_WIDTH,
            seed: 0,
        }
    }
}

/// One played round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Round {
    pub arm: i64,
    pub reward: f64,
    pub cumulative: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub rounds: Vec<Round>,
    /// The program's final value; always equals the last cumulative reward.
    pub total: f64,
}

#[derive(Debug)]
pub enum BanditError {
    /// The composed program failed to parse or typecheck.
    Static(Vec<Diagnostic>),
    /// Evaluation aborted (a failing builtin or a dynamic type fault).
    Runtime(EvalError),
    FuelExhausted,
    /// The run finished but its trace and value disagree; a bug in either
    /// the prelude or the evaluator, never a user error.
    Internal(String),
}

impl fmt::Display for BanditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BanditError::Static(ds) => match ds.first() {
                Some(d) => write!(f, "{d}"),
                None => write!(f, "static error"),
            },
            BanditError::Runtime(e) => write!(f, "{e}"),
            BanditError::FuelExhausted => write!(f, "the run did not finish within its fuel"),
            BanditError::Internal(m) => write!(f, "internal: {m}"),
        }
    }
}

/// More steps than any sane run takes (a 500-round default run is around
/// two million), small enough that a diverging replacement prelude fails
/// in seconds rather than hanging.
pub const BANDIT_FUEL: u64 = 200_000_000;

/// The four prelude fragments as source text.
#[derive(Clone, Debug)]
pub struct Fragments {
    pub environment: String,
    pub interface: String,
    pub learner: String,
    pub main_loop: String,
}

impl Fragments {
    pub fn builtin(cfg: &BanditConfig) -> Fragments {
        Fragments {
            environment: prelude::environment_source(cfg.machines, cfg.width),
            interface: prelude::interface_source(cfg.machines),
            learner: prelude::learner_source(cfg.epsilon, cfg.initial),
            main_loop: prelude::main_loop_source(cfg.rounds),
        }
    }

    /// Loads `environment.leff`, `interface.leff`, `learner.leff` and
    /// `main_loop.leff` from `dir`. A file that is missing falls back to the
    /// built-in template; a file that exists is used verbatim, so whatever
    /// parameters it bakes in win over `cfg`.
    pub fn from_dir(dir: &Path, cfg: &BanditConfig) -> io::Result<Fragments> {
        let mut out = Fragments::builtin(cfg);
        for (name, slot) in [
            ("environment.leff", &mut out.environment),
            ("interface.leff", &mut out.interface),
            ("learner.leff", &mut out.learner),
            ("main_loop.leff", &mut out.main_loop),
        ] {
            let path = dir.join(name);
            match fs::read_to_string(&path) {
                Ok(text) => *slot = text,
                Err(e) if e.kind() == io::ErrorKind::NotFound => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }

    pub fn composed(&self) -> String {
        prelude::compose(&self.environment, &self.interface, &self.learner, &self.main_loop)
    }
}

/// Composes the built-in fragments for `cfg` and plays them.
pub fn run_bandit(cfg: &BanditConfig) -> Result<RunOutcome, BanditError> {
    run_source(&Fragments::builtin(cfg).composed(), cfg.seed)
}

/// Typechecks `source` under the empty ambient row and evaluates it,
/// reconstructing the rounds from the `do` and `reward` events in the
/// handler trace.
pub fn run_source(source: &str, seed: u64) -> Result<RunOutcome, BanditError> {
    let prog = parse_program(source).map_err(BanditError::Static)?;
    let main = match prog.linked_main() {
        Some(m) => m,
        None => {
            return Err(BanditError::Internal("the composed program has no main".into()));
        }
    };
    type_of_comp(&prog.registry, Mode::Effects, &EffectSet::empty(), &main)
        .map_err(|d| BanditError::Static(vec![d]))?;

    let mut ev = Evaluator::new(prog.registry, seed);
    let outcome = ev.evaluate(&main, BANDIT_FUEL).map_err(BanditError::Runtime)?;
    let total = match outcome {
        Outcome::Value(v) => match v.kind() {
            ValKind::Const(Constant::Real(x)) => *x,
            _ => {
                return Err(BanditError::Internal(
                    "the run's value is not a real number".into(),
                ))
            }
        },
        Outcome::Stuck { op, .. } => {
            return Err(BanditError::Internal(format!(
                "operation {op} escaped the handler nest"
            )))
        }
        Outcome::FuelExhausted(_) => return Err(BanditError::FuelExhausted),
    };

    let rounds = rounds_from_trace(&ev.take_trace())?;
    let last = rounds.last().map(|r| r.cumulative).unwrap_or(0.0);
    if total.to_bits() != last.to_bits() {
        return Err(BanditError::Internal(format!(
            "the run's value {total} is not the cumulative reward {last}"
        )));
    }
    Ok(RunOutcome { rounds, total })
}

/// Pairs the i-th `do` with the i-th `reward`. Handlers fire strictly in
/// round order (each round's pull completes before the next begins), so
/// position is identity.
fn rounds_from_trace(trace: &[crate::eval::TraceEvent]) -> Result<Vec<Round>, BanditError> {
    let mut arms = Vec::new();
    let mut rewards = Vec::new();
    for ev in trace {
        match ev.op.text().as_ref() {
            "do" => match ev.arg.kind() {
                ValKind::Const(Constant::Int(a)) => arms.push(*a),
                _ => {
                    return Err(BanditError::Internal(
                        "a do event carried a non-integer action".into(),
                    ))
                }
            },
            "reward" => match ev.arg.kind() {
                ValKind::Const(Constant::Real(x)) => rewards.push(*x),
                _ => {
                    return Err(BanditError::Internal(
                        "a reward event carried a non-real payout".into(),
                    ))
                }
            },
            _ => {}
        }
    }
    if arms.len() != rewards.len() {
        return Err(BanditError::Internal(format!(
            "{} pulls but {} rewards in the trace",
            arms.len(),
            rewards.len()
        )));
    }
    let mut cumulative = 0.0;
    Ok(arms
        .into_iter()
        .zip(rewards)
        .map(|(arm, reward)| {
            cumulative += reward;
            Round { arm, reward, cumulative }
        })
        .collect())
}

/// The same run, natively: one table row (a bandit has a single abstract
/// state) of `(pull count, estimate)` per arm, created on the first choice.
/// Per round the draws are: the exploration coin, the explored arm index
/// only when the coin is at most epsilon, and the payout noise. This matches
/// the object program draw for draw, which the tests check bit for bit.
pub fn oracle_bandit(cfg: &BanditConfig) -> RunOutcome {
    debug_assert!(cfg.machines >= 1, "a machine room needs at least one arm");
    let mut rng = RandomSource::new(cfg.seed);
    let mut entries: Vec<(i64, f64)> = Vec::new();
    let mut rounds = Vec::with_capacity(cfg.rounds.max(0) as usize);
    let mut cumulative = 0.0f64;
    for _ in 0..cfg.rounds.max(0) {
        if entries.is_empty() {
            entries = vec![(0, cfg.initial); cfg.machines.max(0) as usize];
        }
        let coin = rng.unit() * 1.0;
        let na = if coin <= cfg.epsilon {
            rng.below(entries.len() as i64) as usize
        } else {
            let mut bi = 0;
            let mut bv = entries[0].1;
            for (i, &(_, v)) in entries.iter().enumerate().skip(1) {
                if v > bv {
                    bi = i;
                    bv = v;
                }
            }
            bi
        };
        entries[na].0 += 1;
        let arm = na as i64 + 1;
        let noise = rng.unit() * cfg.width;
        let payout = arm as f64 + noise;
        let (c, v) = entries[na];
        entries[na].1 = v + (payout - v) / (c as f64);
        cumulative += payout;
        rounds.push(Round { arm, reward: payout, cumulative });
    }
    RunOutcome { total: rounds.last().map(|r| r.cumulative).unwrap_or(0.0), rounds }
}

/// Mean reward over the last `n` rounds (all of them when fewer were played);
/// 0 for an empty run.
pub fn mean_last(rounds: &[Round], n: usize) -> f64 {
    let tail = &rounds[rounds.len().saturating_sub(n)..];
    if tail.is_empty() {
        return 0.0;
    }
    tail.iter().map(|r| r.reward).sum::<f64>() / tail.len() as f64
}

/// `round,arm,reward,cumulative`, rounds numbered from 1. Reals print in
/// shortest round-trip form, so equal seeds give byte-identical files.
pub fn write_csv<W: Write>(mut out: W, rounds: &[Round]) -> io::Result<()> {
    writeln!(out, "round,arm,reward,cumulative")?;
    for (i, r) in rounds.iter().enumerate() {
        writeln!(out, "{},{},{},{}", i + 1, r.arm, r.reward, r.cumulative)?;
    }
    Ok(())
}

pub fn csv_string(rounds: &[Round]) -> String {
    let mut buf = Vec::new();
    write_csv(&mut buf, rounds).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("csv is ascii")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> BanditConfig {
        BanditConfig { rounds: 30, seed: 11, ..BanditConfig::default() }
    }

    #[test]
    fn a_short_run_plays_every_round_and_totals_up() {
        let out = run_bandit(&small()).unwrap();
        assert_eq!(out.rounds.len(), 30);
        for r in &out.rounds {
            assert!((1..=6).contains(&r.arm), "arm {} out of range", r.arm);
            assert!(r.reward >= r.arm as f64 && r.reward < r.arm as f64 + 10.0);
        }
        assert_eq!(out.total, out.rounds.last().unwrap().cumulative);
    }

    #[test]
    fn the_oracle_and_the_object_program_agree_bit_for_bit() {
        for seed in [0, 1, 7, 99] {
            let cfg = BanditConfig { rounds: 25, seed, ..BanditConfig::default() };
            let object = run_bandit(&cfg).unwrap();
            let native = oracle_bandit(&cfg);
            assert_eq!(object.rounds.len(), native.rounds.len());
            for (i, (a, b)) in object.rounds.iter().zip(&native.rounds).enumerate() {
                assert_eq!(a.arm, b.arm, "seed {seed} round {i}: arm");
                assert_eq!(
                    a.reward.to_bits(),
                    b.reward.to_bits(),
                    "seed {seed} round {i}: reward {} vs {}",
                    a.reward,
                    b.reward
                );
            }
            assert_eq!(object.total.to_bits(), native.total.to_bits());
        }
    }

    #[test]
    fn deterministic_variant_settles_on_the_best_arm() {
        // width 0 and epsilon 0: payouts are exactly the arm number and the
        // optimistic initial estimate makes the learner try each arm once,
        // lowest first, then stay on the best one
        let cfg = BanditConfig {
            rounds: 12,
            epsilon: 0.0,
            width: 0.0,
            seed: 3,
            ..BanditConfig::default()
        };
        let object = run_bandit(&cfg).unwrap();
        let arms: Vec<i64> = object.rounds.iter().map(|r| r.arm).collect();
        assert_eq!(arms, vec![1, 2, 3, 4, 5, 6, 6, 6, 6, 6, 6, 6]);
        let native = oracle_bandit(&cfg);
        let narms: Vec<i64> = native.rounds.iter().map(|r| r.arm).collect();
        assert_eq!(arms, narms);
        for r in &object.rounds {
            assert_eq!(r.reward, r.arm as f64);
        }
    }

    #[test]
    fn zero_rounds_is_an_empty_run() {
        let cfg = BanditConfig { rounds: 0, ..BanditConfig::default() };
        let out = run_bandit(&cfg).unwrap();
        assert!(out.rounds.is_empty());
        assert_eq!(out.total, 0.0);
        assert_eq!(csv_string(&out.rounds), "round,arm,reward,cumulative\n");
    }

    #[test]
    fn csv_is_stable_for_a_seed() {
        let cfg = BanditConfig { rounds: 8, seed: 42, ..BanditConfig::default() };
        let a = csv_string(&run_bandit(&cfg).unwrap().rounds);
        let b = csv_string(&run_bandit(&cfg).unwrap().rounds);
        assert_eq!(a, b);
        assert!(a.starts_with("round,arm,reward,cumulative\n1,"));
        assert_eq!(a.lines().count(), 9);
    }

    #[test]
    fn mean_last_handles_short_and_long_tails() {
        let rounds: Vec<Round> = (1..=5)
            .map(|i| Round { arm: 1, reward: i as f64, cumulative: 0.0 })
            .collect();
        assert_eq!(mean_last(&rounds, 2), 4.5);
        assert_eq!(mean_last(&rounds, 100), 3.0);
        assert_eq!(mean_last(&[], 10), 0.0);
    }

    #[test]
    fn fragments_from_a_directory_override_templates() {
        let dir = tempfile::tempdir().unwrap();
        // a louder environment: arm a pays a + U[0, 100)
        let custom = prelude::environment_source(6, 100.0);
        fs::write(dir.path().join("environment.leff"), &custom).unwrap();
        let cfg = BanditConfig { rounds: 5, seed: 1, ..BanditConfig::default() };
        let frags = Fragments::from_dir(dir.path(), &cfg).unwrap();
        assert_eq!(frags.environment, custom);
        assert_eq!(frags.main_loop, prelude::main_loop_source(5));
        let out = run_source(&frags.composed(), cfg.seed).unwrap();
        assert_eq!(out.rounds.len(), 5);
        // the custom payout spread is visible in the rewards
        assert!(out.rounds.iter().any(|r| r.reward > 16.0));
    }

    #[test]
    fn the_learned_estimates_converge_natively() {
        // 100k pulls of each arm pins the empirical mean near arm + 5
        let cfg = BanditConfig { rounds: 100_000, epsilon: 1.0, ..Default::default() };
        let out = oracle_bandit(&cfg);
        for arm in 1..=6 {
            let picks: Vec<f64> = out
                .rounds
                .iter()
                .filter(|r| r.arm == arm)
                .map(|r| r.reward)
                .collect();
            let mean = picks.iter().sum::<f64>() / picks.len() as f64;
            assert!(
                (mean - (arm as f64 + 5.0)).abs() < 0.1,
                "arm {arm}: mean {mean}"
            );
        }
    }
}
