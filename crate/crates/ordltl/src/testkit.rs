//! Reproducible random generators and the differential test harness.
//!
//! The harness pits the automaton-based solver against the semantic
//! evaluator, which shares no transition machinery with it: SAT verdicts
//! must come with a witness the evaluator confirms, and UNSAT verdicts are
//! attacked with an exhaustive search over short finite words plus a large
//! batch of random transfinite words. Any disagreement is a bug in one of
//! the two sides — including a deliberately injected one, which is how the
//! harness itself is tested.
//!
//! Reproducibility: every case draws from a counter-seeded stream of its
//! own (stream `2i` for the formula of case `i`, stream `2i+1` for its
//! countermodel words), so a case can be replayed in isolation and results
//! do not shift when unrelated draws are added elsewhere.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::automaton::{BuildOptions, FaultInjection};
use crate::eval::{eval_naive_finite, Evaluator};
use crate::solver::{default_level, satisfiable_with, Status};
use crate::syntax::{Formula, Proposition};
use crate::word::{Letter, Word};

/// Number of random transfinite words thrown at each UNSAT verdict.
const COUNTERMODEL_DRAWS: usize = 1000;
/// Length bound of the exhaustive finite countermodel search.
const EXHAUSTIVE_LEN: usize = 6;
/// Regeneration attempts per size during shrinking.
const SHRINK_TRIES: u64 = 20;

/// Generation parameters for the differential corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    /// Upper bound on generated formula size (node count).
    pub max_size: usize,
    /// Number of distinct propositions available to the generators.
    pub prop_count: usize,
    /// Upper bound on ω-power nesting in generated words.
    pub max_level: usize,
    pub case_count: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 42,
            max_size: 12,
            prop_count: 3,
            max_level: 2,
            case_count: 500,
        }
    }
}

/// The propositions `p0 .. p{n-1}`.
pub fn propositions(n: usize) -> Vec<Proposition> {
    (0..n)
        .map(|i| Proposition::new(format!("p{i}")).expect("generated names are valid"))
        .collect()
}

/// A random formula of size at most `max_size`, built from the core
/// constructors only. Sizes and shapes vary: the target size is drawn
/// first, then operators are drawn with weights that keep every core
/// constructor common as a root.
pub fn gen_formula(rng: &mut ChaCha8Rng, max_size: usize, props: &[Proposition]) -> Formula {
    let target = rng.gen_range(1..=max_size.max(1));
    gen_sized(rng, target, props)
}

fn gen_sized(rng: &mut ChaCha8Rng, budget: usize, props: &[Proposition]) -> Formula {
    let leaf = |rng: &mut ChaCha8Rng| {
        if props.is_empty() || rng.gen_range(0..4) == 0 {
            Formula::True
        } else {
            Formula::Atom(props[rng.gen_range(0..props.len())].clone())
        }
    };
    if budget <= 1 {
        return leaf(rng);
    }
    if budget == 2 {
        return match rng.gen_range(0..9) {
            0 => leaf(rng),
            1..=2 => leaf(rng),
            3..=5 => Formula::not(gen_sized(rng, 1, props)),
            _ => Formula::next(gen_sized(rng, 1, props)),
        };
    }
    match rng.gen_range(0..12) {
        0 => Formula::True,
        1..=2 => leaf(rng),
        3..=4 => Formula::not(gen_sized(rng, budget - 1, props)),
        5..=6 => Formula::next(gen_sized(rng, budget - 1, props)),
        7..=9 => {
            let left = rng.gen_range(1..budget - 1);
            Formula::and(
                gen_sized(rng, left, props),
                gen_sized(rng, budget - 1 - left, props),
            )
        }
        _ => {
            let left = rng.gen_range(1..budget - 1);
            Formula::until(
                gen_sized(rng, left, props),
                gen_sized(rng, budget - 1 - left, props),
            )
        }
    }
}

/// A random word with ω-power nesting depth at most `max_level`. The depth
/// is drawn uniformly, so deeply nested words stay a sizable share of any
/// corpus.
pub fn gen_word(rng: &mut ChaCha8Rng, props: &[Proposition], max_level: usize) -> Word {
    let level = rng.gen_range(0..=max_level);
    gen_leveled(rng, props, level)
}

fn gen_leveled(rng: &mut ChaCha8Rng, props: &[Proposition], level: usize) -> Word {
    if level == 0 {
        let parts = (0..rng.gen_range(1..=3))
            .map(|_| Word::single(random_letter(rng, props)))
            .collect();
        return Word::cat(parts);
    }
    let power = Word::omega(gen_leveled(rng, props, level - 1));
    let mut parts = Vec::new();
    if rng.gen_bool(0.3) {
        let depth = rng.gen_range(0..level);
        parts.push(gen_leveled(rng, props, depth));
    }
    parts.push(power);
    if rng.gen_bool(0.3) {
        let depth = rng.gen_range(0..level);
        parts.push(gen_leveled(rng, props, depth));
    }
    Word::cat(parts)
}

fn random_letter(rng: &mut ChaCha8Rng, props: &[Proposition]) -> Letter {
    Letter::new(props.iter().filter(|_| rng.gen_bool(0.5)).cloned())
}

/// One case's outcome, serialized as a JSON line.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct CaseReport {
    pub i: usize,
    pub formula: String,
    pub status: String,
    pub ok: bool,
    pub detail: String,
}

/// Outcome of a differential run.
#[derive(Debug, Clone)]
pub struct Report {
    pub cases: Vec<CaseReport>,
    pub failure_count: usize,
    /// For the first failure: a smaller formula failing the same harness,
    /// when regeneration at reduced sizes finds one.
    pub shrunk: Option<String>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.failure_count == 0
    }

    /// One JSON object per case, one case per line.
    pub fn jsonl(&self) -> String {
        let mut out = String::new();
        for case in &self.cases {
            out.push_str(&serde_json::to_string(case).expect("reports serialize"));
            out.push('\n');
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "differential: {} cases, {} failure{}",
            self.cases.len(),
            self.failure_count,
            if self.failure_count == 1 { "" } else { "s" }
        )
    }
}

/// Runs the differential harness over a generated corpus.
pub fn differential_run(config: &GenConfig) -> Report {
    differential_run_with_fault(config, FaultInjection::None)
}

/// Same harness with a rule mutation injected into the solver side; a
/// healthy harness must report failures for every supported mutation.
pub fn differential_run_with_fault(config: &GenConfig, fault: FaultInjection) -> Report {
    let props = propositions(config.prop_count);
    let mut cases = Vec::with_capacity(config.case_count);
    let mut failure_count = 0;
    let mut shrunk = None;
    for i in 0..config.case_count {
        let mut frng = ChaCha8Rng::seed_from_u64(config.seed);
        frng.set_stream(2 * i as u64);
        let phi = gen_formula(&mut frng, config.max_size, &props);
        let mut wrng = ChaCha8Rng::seed_from_u64(config.seed);
        wrng.set_stream(2 * i as u64 + 1);
        let case = run_case(i, &phi, &props, config, fault, &mut wrng);
        if !case.ok {
            failure_count += 1;
            if shrunk.is_none() {
                shrunk = shrink(i, &phi, &props, config, fault);
            }
        }
        cases.push(case);
    }
    Report {
        cases,
        failure_count,
        shrunk,
    }
}

fn run_case(
    i: usize,
    phi: &Formula,
    props: &[Proposition],
    config: &GenConfig,
    fault: FaultInjection,
    wrng: &mut ChaCha8Rng,
) -> CaseReport {
    let report = |status: &str, ok: bool, detail: String| CaseReport {
        i,
        formula: phi.to_string(),
        status: status.into(),
        ok,
        detail,
    };
    let options = BuildOptions {
        fault,
        ..BuildOptions::default()
    };
    let verdict = match satisfiable_with(phi, default_level(phi), options) {
        Err(e) => return report("error", false, e.to_string()),
        Ok(v) => v,
    };
    match verdict.status {
        Status::Sat => {
            // The solver validates witnesses itself; replay through the
            // public evaluator anyway so the harness stands on its own.
            let witness = verdict.witness.expect("SAT carries a witness");
            match crate::eval::eval_checked(phi, &witness) {
                Ok(true) => report("sat", true, format!("witness length {}", witness.length())),
                Ok(false) => report("sat", false, format!("witness refuted: {witness}")),
                Err(e) => report("sat", false, format!("evaluator error: {e}")),
            }
        }
        Status::Unsat => {
            let evaluator = Evaluator::new(phi);
            match evaluator.find_finite_model(&evaluator.full_alphabet(), EXHAUSTIVE_LEN) {
                Err(e) => return report("unsat", false, format!("evaluator error: {e}")),
                Ok(Some(model)) => {
                    let word = Word::cat(model.into_iter().map(Word::single).collect());
                    return report("unsat", false, format!("finite countermodel: {word}"));
                }
                Ok(None) => {}
            }
            for _ in 0..COUNTERMODEL_DRAWS {
                let word = gen_word(wrng, props, config.max_level);
                let holds = match crate::eval::eval_checked(phi, &word) {
                    Ok(h) => h,
                    Err(e) => return report("unsat", false, format!("evaluator error: {e}")),
                };
                if holds {
                    return report("unsat", false, format!("random countermodel: {word}"));
                }
                if word.level() == 0 && holds != eval_naive_finite(phi, &word, 0) {
                    return report(
                        "unsat",
                        false,
                        format!("oracle disagreement on finite word: {word}"),
                    );
                }
            }
            report("unsat", true, "corroborated".into())
        }
    }
}

/// Looks for a smaller formula failing the same way, regenerating at each
/// size from fresh deterministic streams.
fn shrink(
    i: usize,
    original: &Formula,
    props: &[Proposition],
    config: &GenConfig,
    fault: FaultInjection,
) -> Option<String> {
    for size in 1..original.size() {
        for salt in 0..SHRINK_TRIES {
            let stream = 1_000_000 + (i as u64) * SHRINK_TRIES * 64 + (size as u64) * SHRINK_TRIES + salt;
            let mut frng = ChaCha8Rng::seed_from_u64(config.seed);
            frng.set_stream(2 * stream);
            let candidate = gen_sized(&mut frng, size, props);
            if candidate.size() > original.size() {
                continue;
            }
            let mut wrng = ChaCha8Rng::seed_from_u64(config.seed);
            wrng.set_stream(2 * stream + 1);
            let case = run_case(i, &candidate, props, config, fault, &mut wrng);
            if !case.ok {
                return Some(candidate.to_string());
            }
        }
    }
    None
}
