//! Satisfiability and model checking for linear temporal logic interpreted
//! over transfinite words — words whose length is an ordinal below ω^ω.
//!
//! The crate provides:
//!
//! - [`syntax`]: the formula AST, parser and printer;
//! - [`ordinal`]: ordinal arithmetic in Cantor normal form;
//! - [`word`]: finitely presented transfinite words built from
//!   concatenation and ω-power;
//! - [`eval`]: a semantic evaluator that decides whether a word satisfies a
//!   formula;
//! - [`automaton`]: the formula automaton, its emptiness check and witness
//!   extraction;
//! - [`solver`]: the top-level satisfiability / validity / equivalence API;
//! - [`testkit`]: generators and a differential test harness that
//!   cross-checks the solver against the evaluator.

pub mod automaton;
pub mod closure;
pub mod eval;
pub mod ordinal;
pub mod solver;
pub mod syntax;
pub mod testkit;
pub mod word;

pub use automaton::{
    BuildError, BuildOptions, EmptinessReport, FaultInjection, OrdinalAutomaton, RunSkeleton,
    StateSet, WitnessError,
};
pub use closure::{Closure, MaxConsSet};
pub use eval::{eval, eval_checked, eval_naive_finite, EvalError, Evaluator};
pub use ordinal::{Ordinal, OrdinalError};
pub use solver::{
    default_level, equivalent, satisfiable, satisfiable_with, valid, SolveError, SolveStats,
    Status, UniversalVerdict, Verdict,
};
pub use syntax::{Formula, ParseError, Proposition};
pub use testkit::{
    differential_run, differential_run_with_fault, gen_formula, gen_word, propositions,
    CaseReport, GenConfig, Report,
};
pub use word::{Letter, Word, WordError};
