//! Command-line front end: satisfiability with witness synthesis, word
//! evaluation, automaton export, and the differential self-check.
//!
//! Exit codes: 0 — a verdict was computed (SAT or UNSAT, true or false,
//! clean check); 1 — the differential check found disagreements; 2 — input
//! could not be parsed (also used by argument errors); 3 — the request was
//! refused as too large; 4 — an internal validation failed, which means a
//! bug — outputs with this code must never be trusted.
//!
//! JSON output (`--format json`) is byte-deterministic for a given input
//! and build: it carries no timings; keys are emitted in sorted order.

use std::io::Read;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ordltl::solver::{self, SolveError, Status};
use ordltl::{
    differential_run_with_fault, eval_checked, BuildOptions, FaultInjection, Formula, GenConfig,
    Ordinal, OrdinalAutomaton, Word,
};

const EXIT_VERDICT: i32 = 0;
const EXIT_CHECK_FAILED: i32 = 1;
const EXIT_PARSE: i32 = 2;
const EXIT_TOO_LARGE: i32 = 3;
const EXIT_INTERNAL: i32 = 4;

#[derive(Parser)]
#[command(
    name = "ordltl",
    version,
    about = "Satisfiability and model checking for temporal logic over transfinite words"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Fault {
    /// Invert the pending-obligation clause of the limit transition rule.
    FlipLimitA,
}

impl Fault {
    fn injection(self) -> FaultInjection {
        match self {
            Fault::FlipLimitA => FaultInjection::FlipLimitConditionA,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide satisfiability; print and optionally save a model.
    Sat {
        /// Formula, e.g. "G (p -> F q)".
        formula: String,
        /// Search words of length below w^(max-level+1).
        #[arg(long, default_value_t = 3)]
        max_level: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Write the witness word as JSON to this file.
        #[arg(long)]
        witness_out: Option<PathBuf>,
        /// Refuse formulas whose state space would exceed this.
        #[arg(long, env = "ORDLTL_MAX_STATES")]
        max_states: Option<u64>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Evaluate a formula on a word (JSON file, or "-" for stdin).
    Eval {
        formula: String,
        /// Path to the word in JSON form.
        word: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print the formula automaton as DOT.
    Dot {
        formula: String,
        #[arg(long, env = "ORDLTL_MAX_STATES")]
        max_states: Option<u64>,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
    /// Run the differential harness: solver verdicts against the
    /// independent evaluator on a reproducible random corpus.
    Check {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        cases: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<Fault>,
    },
}

fn main() {
    env_logger::init();
    std::process::exit(run(Cli::parse()));
}

fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Sat {
            formula,
            max_level,
            format,
            witness_out,
            max_states,
            inject_fault,
        } => cmd_sat(
            &formula,
            max_level,
            format,
            witness_out.as_deref(),
            build_options(max_states, inject_fault),
        ),
        Command::Eval {
            formula,
            word,
            format,
        } => cmd_eval(&formula, &word, format),
        Command::Dot {
            formula,
            max_states,
            inject_fault,
        } => cmd_dot(&formula, build_options(max_states, inject_fault)),
        Command::Check {
            seed,
            cases,
            format,
            inject_fault,
        } => cmd_check(seed, cases, format, inject_fault),
    }
}

fn build_options(max_states: Option<u64>, fault: Option<Fault>) -> BuildOptions {
    let mut options = BuildOptions::default();
    if let Some(m) = max_states {
        options.max_states = m;
    }
    if let Some(f) = fault {
        options.fault = f.injection();
    }
    options
}

fn parse_formula(text: &str) -> Result<Formula, i32> {
    Formula::parse(text).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_PARSE
    })
}

fn solve_exit(e: &SolveError) -> i32 {
    match e {
        SolveError::BoundTooHigh { .. } | SolveError::TooLarge(_) => EXIT_TOO_LARGE,
        SolveError::WitnessValidation { .. } => EXIT_INTERNAL,
    }
}

fn cmd_sat(
    formula: &str,
    max_level: u32,
    format: Format,
    witness_out: Option<&std::path::Path>,
    options: BuildOptions,
) -> i32 {
    let phi = match parse_formula(formula) {
        Ok(phi) => phi,
        Err(code) => return code,
    };
    let verdict = match solver::satisfiable_with(&phi, max_level, options) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return solve_exit(&e);
        }
    };
    let bound = Ordinal::omega_pow(max_level + 1);
    if let (Some(path), Some(witness)) = (witness_out, &verdict.witness) {
        let payload = serde_json::to_string(witness).expect("words serialize");
        if let Err(e) = std::fs::write(path, payload + "\n") {
            eprintln!("error: cannot write witness file: {e}");
            return EXIT_INTERNAL;
        }
    }
    match format {
        Format::Json => {
            let status = match verdict.status {
                Status::Sat => "sat",
                Status::Unsat => "unsat",
            };
            let out = json!({
                "schemaVersion": 1,
                "command": "sat",
                "formula": formula,
                "bound": bound.to_string(),
                "status": status,
                "witness": verdict.witness.as_ref().map(|w| serde_json::to_value(w).expect("words serialize")),
                "length": verdict.witness.as_ref().map(|w| w.length().to_string()),
                "level": verdict.level,
                "stats": {
                    "stateCount": verdict.stats.state_count,
                    "factCount": verdict.stats.fact_count,
                },
            });
            println!("{out}");
        }
        Format::Text => match verdict.status {
            Status::Sat => {
                let witness = verdict.witness.as_ref().expect("SAT carries a witness");
                println!("SAT");
                println!("witness: {witness}");
                println!("length: {}", witness.length());
                println!("level: {}", verdict.level.expect("SAT carries a level"));
                println!("elapsed: {}ms", verdict.stats.elapsed_millis);
            }
            Status::Unsat => {
                println!("UNSAT");
                println!("no model of length below {bound}");
                println!("elapsed: {}ms", verdict.stats.elapsed_millis);
            }
        },
    }
    EXIT_VERDICT
}

fn cmd_eval(formula: &str, word_path: &str, format: Format) -> i32 {
    let phi = match parse_formula(formula) {
        Ok(phi) => phi,
        Err(code) => return code,
    };
    let text = if word_path == "-" {
        let mut buf = String::new();
        match std::io::stdin().read_to_string(&mut buf) {
            Ok(_) => buf,
            Err(e) => {
                eprintln!("error: cannot read stdin: {e}");
                return EXIT_PARSE;
            }
        }
    } else {
        match std::fs::read_to_string(word_path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {word_path}: {e}");
                return EXIT_PARSE;
            }
        }
    };
    let word: Word = match serde_json::from_str(&text) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: invalid word: {e}");
            return EXIT_PARSE;
        }
    };
    let result = match eval_checked(&phi, &word) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INTERNAL;
        }
    };
    match format {
        Format::Json => {
            let out = json!({
                "schemaVersion": 1,
                "command": "eval",
                "formula": formula,
                "length": word.length().to_string(),
                "result": result,
            });
            println!("{out}");
        }
        Format::Text => println!("{result}"),
    }
    EXIT_VERDICT
}

fn cmd_dot(formula: &str, options: BuildOptions) -> i32 {
    let phi = match parse_formula(formula) {
        Ok(phi) => phi,
        Err(code) => return code,
    };
    match OrdinalAutomaton::build_with(&phi, options) {
        Ok(automaton) => {
            print!("{}", automaton.to_dot());
            EXIT_VERDICT
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_TOO_LARGE
        }
    }
}

fn cmd_check(seed: u64, cases: usize, format: Format, fault: Option<Fault>) -> i32 {
    let config = GenConfig {
        seed,
        case_count: cases,
        ..GenConfig::default()
    };
    let injection = fault.map_or(FaultInjection::None, Fault::injection);
    let report = differential_run_with_fault(&config, injection);
    match format {
        Format::Json => {
            let header = json!({
                "schemaVersion": 1,
                "command": "check",
                "seed": seed,
                "cases": cases,
            });
            println!("{header}");
            print!("{}", report.jsonl());
            let summary = json!({
                "summary": {
                    "cases": report.cases.len(),
                    "failures": report.failure_count,
                    "shrunk": report.shrunk,
                },
            });
            println!("{summary}");
        }
        Format::Text => {
            print!("{}", report.jsonl());
            println!("{}", report.summary());
            if let Some(shrunk) = &report.shrunk {
                println!("shrunk first failure to: {shrunk}");
            }
        }
    }
    if report.ok() {
        EXIT_VERDICT
    } else {
        EXIT_CHECK_FAILED
    }
}
