//! Satisfiability, validity, and equivalence decisions with validated
//! witnesses.
//!
//! The solver builds the formula automaton, runs the layered emptiness
//! search up to a level bound `K`, and — crucially — never reports SAT on
//! the automaton's word alone: every extracted witness is replayed through
//! the semantic evaluator first, so a SAT verdict always carries a word
//! that provably satisfies the formula. A failed replay is surfaced as
//! [`SolveError::WitnessValidation`] rather than silently swallowed.
//!
//! Validity and equivalence reduce to satisfiability of the negation
//! (respectively, of the negated biconditional); their counterexamples are
//! witnesses of the reduced problem.

use std::time::Instant;

use thiserror::Error;

use crate::automaton::{BuildError, BuildOptions, OrdinalAutomaton};
use crate::eval::{EvalError, Evaluator};
use crate::syntax::Formula;
use crate::word::Word;

/// Highest supported level bound: the search space beyond ω^5 explodes and
/// nothing in the test corpus needs it.
pub const MAX_LEVEL_BOUND: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
}

/// Search effort indicators, for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveStats {
    pub state_count: usize,
    pub fact_count: usize,
    pub elapsed_millis: u128,
}

/// Outcome of a satisfiability query bounded by words of length below
/// ω^{K+1}.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub status: Status,
    /// An evaluator-validated model, present exactly for SAT.
    pub witness: Option<Word>,
    /// Degree of the witness length, present exactly for SAT.
    pub level: Option<u32>,
    pub stats: SolveStats,
}

/// Outcome of a validity or equivalence query: `holds` with no
/// counterexample, or a validated counterexample word.
#[derive(Debug, Clone)]
pub struct UniversalVerdict {
    pub holds: bool,
    pub counterexample: Option<Word>,
    /// Degree of the counterexample length when one exists.
    pub level: Option<u32>,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("level bound {requested} exceeds the supported maximum {max}")]
    BoundTooHigh { requested: u32, max: u32 },
    #[error(transparent)]
    TooLarge(#[from] BuildError),
    #[error(
        "internal error: witness validation failed for `{formula}` on `{witness}`: {detail}"
    )]
    WitnessValidation {
        formula: String,
        witness: String,
        detail: String,
    },
}

/// The default level bound: enough for every formula whose models need
/// finitely iterated limits, kept small because each level multiplies the
/// search.
pub fn default_level(phi: &Formula) -> u32 {
    (phi.size() as u32).min(3)
}

/// Is `phi` satisfiable by a word of length in [1, ω^{max_level+1})?
pub fn satisfiable(phi: &Formula, max_level: u32) -> Result<Verdict, SolveError> {
    satisfiable_with(phi, max_level, BuildOptions::default())
}

pub fn satisfiable_with(
    phi: &Formula,
    max_level: u32,
    options: BuildOptions,
) -> Result<Verdict, SolveError> {
    if max_level > MAX_LEVEL_BOUND {
        return Err(SolveError::BoundTooHigh {
            requested: max_level,
            max: MAX_LEVEL_BOUND,
        });
    }
    let start = Instant::now();
    let automaton = OrdinalAutomaton::build_with(phi, options)?;
    let report = automaton.emptiness(max_level);
    let stats = |elapsed: u128| SolveStats {
        state_count: automaton.state_count(),
        fact_count: report.fact_count,
        elapsed_millis: elapsed,
    };
    match &report.witness {
        None => Ok(Verdict {
            status: Status::Unsat,
            witness: None,
            level: None,
            stats: stats(start.elapsed().as_millis()),
        }),
        Some((skeleton, level)) => {
            let word = automaton.extract_witness(skeleton).map_err(|e| {
                SolveError::WitnessValidation {
                    formula: phi.to_string(),
                    witness: "<unextractable skeleton>".into(),
                    detail: e.to_string(),
                }
            })?;
            debug_assert_eq!(*level, word.length().degree());
            validate_witness(phi, &word)?;
            Ok(Verdict {
                status: Status::Sat,
                witness: Some(word),
                level: Some(*level),
                stats: stats(start.elapsed().as_millis()),
            })
        }
    }
}

fn validate_witness(phi: &Formula, word: &Word) -> Result<(), SolveError> {
    let verdict = Evaluator::new(phi).eval(word);
    match verdict {
        Ok(true) => Ok(()),
        Ok(false) => Err(SolveError::WitnessValidation {
            formula: phi.to_string(),
            witness: word.to_string(),
            detail: "the extracted word does not satisfy the formula".into(),
        }),
        Err(EvalError::Inconsistency { message, .. }) => Err(SolveError::WitnessValidation {
            formula: phi.to_string(),
            witness: word.to_string(),
            detail: message,
        }),
    }
}

/// Is `phi` true on every word of length in [1, ω^{max_level+1})? Holds
/// exactly when `!phi` has no such model; the counterexample, if any, is a
/// validated model of `!phi`.
pub fn valid(phi: &Formula, max_level: u32) -> Result<UniversalVerdict, SolveError> {
    let refuted = satisfiable(&Formula::not(phi.clone()), max_level)?;
    Ok(UniversalVerdict {
        holds: refuted.status == Status::Unsat,
        counterexample: refuted.witness,
        level: refuted.level,
        stats: refuted.stats,
    })
}

/// Do `a` and `b` agree on every word of length in [1, ω^{max_level+1})?
/// Decided as validity of the biconditional; a distinguishing word is
/// returned and logged.
pub fn equivalent(a: &Formula, b: &Formula, max_level: u32) -> Result<UniversalVerdict, SolveError> {
    let verdict = valid(&Formula::iff(a.clone(), b.clone()), max_level)?;
    if let Some(word) = &verdict.counterexample {
        log::info!("distinguishing word for `{a}` vs `{b}`: {word}");
    }
    Ok(verdict)
}
