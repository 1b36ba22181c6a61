//! The `leff` executable.
//!
//! Five subcommands over `.leff` files: `check` (types, rows ignored),
//! `effcheck` (types with effect rows, plus optional fragment profile),
//! `grade` (operation-order word), `run` (evaluate), and `bandit` (play the
//! machine-room prelude and emit the round history as CSV).
//!
//! Exit codes: 0 success, 1 static error (parse, type, effect, grade,
//! profile), 2 runtime error (an unhandled operation or a failing builtin),
//! 3 fuel exhausted, 4 usage error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use leff::ast::EffectSet;
use leff::bandit::{mean_last, run_source, BanditConfig, BanditError, Fragments};
use leff::check::{check_program, row_spec, Mode};
use leff::diag::Diagnostic;
use leff::eval::{Evaluator, Outcome};
use leff::grade::{grade_program, main_word_ok, word_to_string};
use leff::parse::{parse_program, SourceProgram};
use leff::pretty::{type_to_string, val_to_string};
use leff::profile::{check_profile, parse_profile};

const STATIC_ERR: u8 = 1;
const RUNTIME_ERR: u8 = 2;
const FUEL_ERR: u8 = 3;
const USAGE_ERR: u8 = 4;

#[derive(Parser)]
#[command(name = "leff", version, about = "a small language of effect handlers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and typecheck a file with effect rows ignored
    Check { file: PathBuf },
    /// Typecheck with effect rows tracked
    Effcheck {
        file: PathBuf,
        /// Ambient row the main computation may use: `empty`, `any`, `env`,
        /// `rl`, `rl_abs`, `iface_abs`, a literal `{op, op}`, or a union
        /// like `env+rl`
        #[arg(long, default_value = "empty")]
        effects: String,
        /// Also enforce a fragment vocabulary: `env`, `rl`, or `iface`
        #[arg(long)]
        profile: Option<String>,
    },
    /// Normalize the program's operation word under choice*do*reward = 1
    Grade {
        file: PathBuf,
        /// Refuse ungraded operations instead of treating them as the unit
        #[arg(long)]
        strict: bool,
    },
    /// Evaluate the main computation and print its value
    Run {
        file: PathBuf,
        /// Maximum number of steps
        #[arg(long, default_value_t = 1_000_000)]
        fuel: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Play the bandit prelude and print one CSV row per round
    Bandit {
        /// How many arms the machine room has
        #[arg(long, default_value_t = leff::prelude::DEFAULT_MACHINES)]
        machines: i64,
        #[arg(long, default_value_t = leff::prelude::DEFAULT_ROUNDS)]
        rounds: i64,
        /// Exploration probability
        #[arg(long, default_value_t = leff::prelude::DEFAULT_EPSILON)]
        epsilon: f64,
        /// Initial estimate for a never-pulled arm
        #[arg(long, default_value_t = leff::prelude::DEFAULT_INITIAL)]
        init: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of standard output
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version print to stdout and succeed; anything
            // else is a usage error
            let code = if e.use_stderr() { USAGE_ERR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.cmd {
        Cmd::Check { file } => check_cmd(&file),
        Cmd::Effcheck { file, effects, profile } => effcheck_cmd(&file, &effects, profile),
        Cmd::Grade { file, strict } => grade_cmd(&file, strict),
        Cmd::Run { file, fuel, seed } => run_cmd(&file, fuel, seed),
        Cmd::Bandit { machines, rounds, epsilon, init, seed, trace_out } => {
            bandit_cmd(machines, rounds, epsilon, init, seed, trace_out.as_deref())
        }
    };
    ExitCode::from(code)
}

fn report(file: &Path, ds: &[Diagnostic]) {
    for d in ds {
        eprintln!("{}:{d}", file.display());
    }
}

fn load(file: &Path) -> Result<SourceProgram, u8> {
    let text = match std::fs::read_to_string(file) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("leff: {}: {e}", file.display());
            return Err(USAGE_ERR);
        }
    };
    parse_program(&text).map_err(|ds| {
        report(file, &ds);
        STATIC_ERR
    })
}

fn report_type(ty: Option<leff::ast::Type>) {
    match ty {
        Some(t) => println!("ok: {}", type_to_string(&t)),
        None => println!("ok"),
    }
}

fn check_cmd(file: &Path) -> u8 {
    let prog = match load(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match check_program(&prog, Mode::Simple, &EffectSet::Any) {
        Ok(ty) => {
            report_type(ty);
            0
        }
        Err(ds) => {
            report(file, &ds);
            STATIC_ERR
        }
    }
}

fn effcheck_cmd(file: &Path, effects: &str, profile: Option<String>) -> u8 {
    let prog = match load(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let profile = match profile.map(|p| parse_profile(&p)).transpose() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("leff: --profile: {e}");
            return USAGE_ERR;
        }
    };
    let ambient = match row_spec(&prog.registry, effects) {
        Ok(row) => row,
        Err(e) => {
            eprintln!("leff: --effects: {e}");
            return USAGE_ERR;
        }
    };
    let ty = match check_program(&prog, Mode::Effects, &ambient) {
        Ok(ty) => ty,
        Err(ds) => {
            report(file, &ds);
            return STATIC_ERR;
        }
    };
    if let Some(p) = profile {
        let flagged = check_profile(&prog, p);
        if !flagged.is_empty() {
            report(file, &flagged);
            return STATIC_ERR;
        }
    }
    report_type(ty);
    0
}

fn grade_cmd(file: &Path, strict: bool) -> u8 {
    let prog = match load(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match grade_program(&prog, strict) {
        Ok(word) if main_word_ok(&word) => {
            println!("grade: {}", word_to_string(&word));
            0
        }
        Ok(word) => {
            let span = prog.main.as_ref().map(|m| m.span()).unwrap_or(leff::ast::Span::synth());
            let d = Diagnostic::error(
                span,
                format!(
                    "the operation word normalizes to {}, not a power of do",
                    word_to_string(&word)
                ),
            );
            report(file, &[d]);
            STATIC_ERR
        }
        Err(d) => {
            report(file, &[d]);
            STATIC_ERR
        }
    }
}

fn run_cmd(file: &Path, fuel: u64, seed: u64) -> u8 {
    let prog = match load(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    if let Err(ds) = check_program(&prog, Mode::Simple, &EffectSet::Any) {
        report(file, &ds);
        return STATIC_ERR;
    }
    let main = match prog.linked_main() {
        Some(m) => m,
        None => {
            eprintln!("{}: error: nothing to run (the file has no main computation)", file.display());
            return STATIC_ERR;
        }
    };
    let mut ev = Evaluator::new(prog.registry, seed);
    match ev.evaluate(&main, fuel) {
        Ok(Outcome::Value(v)) => {
            println!("{}", val_to_string(&v));
            0
        }
        Ok(Outcome::Stuck { op, .. }) => {
            println!("stuck: {op}");
            RUNTIME_ERR
        }
        Ok(Outcome::FuelExhausted(_)) => {
            eprintln!("leff: fuel exhausted after {fuel} steps");
            FUEL_ERR
        }
        Err(e) => {
            eprintln!("{}:{e}", file.display());
            RUNTIME_ERR
        }
    }
}

fn bandit_cmd(
    machines: i64,
    rounds: i64,
    epsilon: f64,
    init: f64,
    seed: u64,
    trace_out: Option<&Path>,
) -> u8 {
    if machines < 1 {
        eprintln!("leff: --machines must be at least 1");
        return USAGE_ERR;
    }
    if rounds < 0 {
        eprintln!("leff: --rounds must not be negative");
        return USAGE_ERR;
    }
    let cfg = BanditConfig {
        machines,
        rounds,
        epsilon,
        initial: init,
        seed,
        ..BanditConfig::default()
    };
    let fragments = match std::env::var_os("LEFF_PRELUDE") {
        Some(dir) => match Fragments::from_dir(Path::new(&dir), &cfg) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("leff: LEFF_PRELUDE: {e}");
                return USAGE_ERR;
            }
        },
        None => Fragments::builtin(&cfg),
    };
    let outcome = match run_source(&fragments.composed(), cfg.seed) {
        Ok(o) => o,
        Err(BanditError::Static(ds)) => {
            report(Path::new("prelude"), &ds);
            return STATIC_ERR;
        }
        Err(BanditError::FuelExhausted) => {
            eprintln!("leff: {}", BanditError::FuelExhausted);
            return FUEL_ERR;
        }
        Err(e) => {
            eprintln!("leff: {e}");
            return RUNTIME_ERR;
        }
    };
    let csv = leff::bandit::csv_string(&outcome.rounds);
    if let Some(path) = trace_out {
        if let Err(e) = std::fs::write(path, &csv) {
            eprintln!("leff: {}: {e}", path.display());
            return USAGE_ERR;
        }
    } else {
        print!("{csv}");
    }
    println!("mean_last_100={}", mean_last(&outcome.rounds, 100));
    0
}
