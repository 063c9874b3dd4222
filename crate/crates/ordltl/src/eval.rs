//! The semantic evaluator: decides whether a word satisfies a formula.
//!
//! [`eval`] answers "does φ hold at position 0 of w" directly from the
//! semantics, independently of the automaton pipeline, which makes it the
//! ground-truth oracle for differential testing of the solver.
//!
//! # How it works
//!
//! Truth of every closure member is propagated backwards through the word.
//! For a single letter this is one application of the step rules
//! (`Xψ` holds now iff `ψ` holds at the next position; `ψ1 U ψ2` holds now
//! iff at the next position `ψ2` holds or both `ψ1` and the until hold); a
//! concatenation composes right to left; word end is the assignment where
//! nothing has a successor, so every `X` and every until is false.
//!
//! An ω-power `v^ω` is the interesting case. Every block start of `v^ω`
//! begins an identical suffix, so all block starts share one assignment `T`
//! satisfying `T = transfer(v, T)`. It is computed in three-valued logic:
//!
//! 1. Kleene iteration from the all-unknown assignment. This determines
//!    exactly the members whose truth is forced at a finite distance (an
//!    until fulfilled or refuted within finitely many traversals, booleans,
//!    `X`).
//! 2. Untils still unknown are fulfilled nowhere at finite distance, so
//!    their truth rests on the limit: `ψ1 U ψ2` is true iff `ψ1` holds at
//!    every position of one traversal and the continuation justifies it
//!    (`ψ2` at the limit position, or `ψ1` and the until there). The rule is
//!    evaluated in three-valued logic, untils in ascending size order so
//!    that each one only reads already-settled values, re-completing the
//!    fixpoint after each resolution. Residual unknowns are left in place
//!    when the continuation itself is partial — that happens only while an
//!    enclosing ω-power is still iterating, and keeps the nesting monotone.
//! 3. Once the continuation is fully defined, the result must be a fully
//!    defined fixpoint; anything else reports an internal inconsistency
//!    instead of guessing.
//!
//! [`eval_naive_finite`] is a deliberately separate implementation for
//! finite words — a direct recursion over positions with no shared code —
//! used to cross-check `eval` on the finite fragment.

use std::collections::HashMap;

use thiserror::Error;

use crate::closure::Closure;
use crate::syntax::Formula;
use crate::word::{Letter, Word};

/// Three-valued truth. `Unknown` appears only in intermediate fixpoint
/// states, never in a final result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Truth3 {
    False,
    Unknown,
    True,
}

impl Truth3 {
    fn from_bool(b: bool) -> Truth3 {
        if b {
            Truth3::True
        } else {
            Truth3::False
        }
    }

    fn is_determined(self) -> bool {
        self != Truth3::Unknown
    }
}

/// Kleene conjunction: false dominates, unknown is absorbed by false only.
/// With the ordering False < Unknown < True this is the minimum.
fn and3(a: Truth3, b: Truth3) -> Truth3 {
    a.min(b)
}

/// Kleene disjunction: the maximum under False < Unknown < True.
fn or3(a: Truth3, b: Truth3) -> Truth3 {
    a.max(b)
}

/// Kleene negation: swaps the determined values, fixes Unknown.
fn not3(a: Truth3) -> Truth3 {
    match a {
        Truth3::False => Truth3::True,
        Truth3::Unknown => Truth3::Unknown,
        Truth3::True => Truth3::False,
    }
}

/// Truth of every closure member at one position — one value per complement
/// pair, the negative side implied by negation. `exists: false` is the
/// assignment used past the end of the word: no position follows, `X` and
/// until members are false there by fiat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Assignment {
    vals: Vec<Truth3>,
    exists: bool,
}

impl Assignment {
    fn bottom(pairs: usize) -> Assignment {
        Assignment {
            vals: vec![Truth3::Unknown; pairs],
            exists: true,
        }
    }

    fn end(pairs: usize) -> Assignment {
        Assignment {
            vals: vec![Truth3::Unknown; pairs],
            exists: false,
        }
    }

    fn truth3(&self, closure: &Closure, phi: &Formula) -> Truth3 {
        let (idx, positive) = closure
            .pair_of(phi)
            .unwrap_or_else(|| panic!("formula {phi} is not in the closure"));
        let v = self.vals[idx];
        if positive {
            v
        } else {
            not3(v)
        }
    }

    fn fully_defined(&self) -> bool {
        !self.exists || self.vals.iter().all(|v| v.is_determined())
    }

    /// Pointwise information refinement: every determined entry of `self`
    /// is determined and equal in `other`.
    #[cfg(debug_assertions)]
    fn refined_by(&self, other: &Assignment) -> bool {
        self.exists == other.exists
            && self
                .vals
                .iter()
                .zip(&other.vals)
                .all(|(a, b)| !a.is_determined() || a == b)
    }
}

/// Errors from checked evaluation.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum EvalError {
    /// The fixpoint verification failed; indicates a bug in the evaluator,
    /// never expected on released versions.
    #[error("internal inconsistency while evaluating {formula}: {message}")]
    Inconsistency { formula: String, message: String },
}

/// A reusable evaluator for one formula: the closure and the derived
/// bookkeeping are built once, then any number of words can be evaluated.
pub struct Evaluator {
    root: Formula,
    closure: Closure,
    /// Pair indices ordered by representative size, so every pair is
    /// computed after the pairs it depends on.
    order: Vec<usize>,
    /// `(pair, ψ1, ψ2)` for every pair whose representative is `ψ1 U ψ2`,
    /// in ascending size order.
    untils: Vec<(usize, Formula, Formula)>,
}

type FixKey = (usize, Vec<Truth3>, bool);

/// Per-evaluation scratch: memoizes ω-power fixpoints by the identity of
/// the ω-power node within the input word and the continuation assignment.
struct Workspace {
    fix_memo: HashMap<FixKey, Assignment>,
}

impl Evaluator {
    pub fn new(phi: &Formula) -> Evaluator {
        let closure = Closure::of(phi);
        let mut order: Vec<usize> = (0..closure.pair_count()).collect();
        order.sort_by_key(|&idx| closure.rep(idx).size());
        let mut untils: Vec<(usize, Formula, Formula)> = closure
            .reps()
            .iter()
            .enumerate()
            .filter_map(|(idx, rep)| match rep {
                Formula::Until(a, b) => Some((idx, (**a).clone(), (**b).clone())),
                _ => None,
            })
            .collect();
        untils.sort_by_key(|(idx, _, _)| closure.rep(*idx).size());
        Evaluator {
            root: phi.clone(),
            closure,
            order,
            untils,
        }
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn formula(&self) -> &Formula {
        &self.root
    }

    /// Truth of the formula at position 0 of `w`.
    pub fn eval(&self, w: &Word) -> Result<bool, EvalError> {
        let mut ws = Workspace {
            fix_memo: HashMap::new(),
        };
        let end = Assignment::end(self.closure.pair_count());
        let start = self.transfer(&mut ws, w, &end)?;
        match start.truth3(&self.closure, &self.root) {
            Truth3::True => Ok(true),
            Truth3::False => Ok(false),
            Truth3::Unknown => Err(self.inconsistency("root value left unknown")),
        }
    }

    fn inconsistency(&self, message: &str) -> EvalError {
        EvalError::Inconsistency {
            formula: self.root.to_string(),
            message: message.to_string(),
        }
    }

    /// One backward step: truth at a position from its letter and the
    /// assignment at the following position.
    fn step(&self, letter: &Letter, after: &Assignment) -> Assignment {
        let mut out = Assignment::bottom(self.closure.pair_count());
        for &idx in &self.order {
            out.vals[idx] = match self.closure.rep(idx) {
                Formula::True => Truth3::True,
                Formula::Atom(p) => Truth3::from_bool(letter.contains(p)),
                Formula::And(a, b) => and3(
                    out.truth3(&self.closure, a),
                    out.truth3(&self.closure, b),
                ),
                Formula::Next(psi) => {
                    if !after.exists {
                        Truth3::False
                    } else {
                        after.truth3(&self.closure, psi)
                    }
                }
                Formula::Until(a, b) => {
                    if !after.exists {
                        Truth3::False
                    } else {
                        let rep = self.closure.rep(idx).clone();
                        or3(
                            after.truth3(&self.closure, b),
                            and3(after.truth3(&self.closure, a), after.truth3(&self.closure, &rep)),
                        )
                    }
                }
                Formula::Not(_) => unreachable!("representatives are never negations"),
            };
        }
        out
    }

    /// Truth at the first position of `segment`, given truth at the
    /// position immediately following it.
    fn transfer(
        &self,
        ws: &mut Workspace,
        segment: &Word,
        after: &Assignment,
    ) -> Result<Assignment, EvalError> {
        match segment {
            Word::Single(letter) => Ok(self.step(letter, after)),
            Word::Cat(parts) => {
                let mut cur = after.clone();
                for part in parts.iter().rev() {
                    cur = self.transfer(ws, part, &cur)?;
                }
                Ok(cur)
            }
            Word::OmegaPow(body) => {
                let key = segment as *const Word as usize;
                self.fix_loop(ws, key, body, after)
            }
        }
    }

    /// The shared block-start assignment of `body^ω`, given the assignment
    /// at the limit position that follows the whole power.
    fn fix_loop(
        &self,
        ws: &mut Workspace,
        key_ptr: usize,
        body: &Word,
        after_limit: &Assignment,
    ) -> Result<Assignment, EvalError> {
        let key: FixKey = (key_ptr, after_limit.vals.clone(), after_limit.exists);
        if let Some(hit) = ws.fix_memo.get(&key) {
            return Ok(hit.clone());
        }

        let mut t = Assignment::bottom(self.closure.pair_count());
        self.complete(ws, body, &mut t)?;

        loop {
            let mut changed = false;
            for (idx, psi1, psi2) in &self.untils {
                if t.vals[*idx].is_determined() {
                    continue;
                }
                let everywhere = self.all_positions3(ws, psi1, body, &t)?.0;
                let continuation = if !after_limit.exists {
                    Truth3::False
                } else {
                    let u = self.closure.rep(*idx).clone();
                    or3(
                        after_limit.truth3(&self.closure, psi2),
                        and3(
                            after_limit.truth3(&self.closure, psi1),
                            after_limit.truth3(&self.closure, &u),
                        ),
                    )
                };
                let resolved = and3(everywhere, continuation);
                if resolved.is_determined() {
                    t.vals[*idx] = resolved;
                    self.complete(ws, body, &mut t)?;
                    if t.vals[*idx] != resolved {
                        return Err(self.inconsistency(
                            "resolved until changed under completion",
                        ));
                    }
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        if after_limit.fully_defined() {
            if !t.fully_defined() {
                return Err(self.inconsistency("loop assignment left partially defined"));
            }
            let check = self.transfer(ws, body, &t)?;
            if check != t {
                return Err(self.inconsistency("loop assignment is not a fixed point"));
            }
        }

        ws.fix_memo.insert(key, t.clone());
        Ok(t)
    }

    /// Iterates `t ← transfer(body, t)` to the least fixpoint at or above
    /// `t`. Information only ever increases, so the chain is short; failure
    /// to converge within the structural bound is an internal error.
    fn complete(
        &self,
        ws: &mut Workspace,
        body: &Word,
        t: &mut Assignment,
    ) -> Result<(), EvalError> {
        let bound = 2 * self.closure.pair_count() + 2;
        for _ in 0..bound {
            let next = self.transfer(ws, body, t)?;
            #[cfg(debug_assertions)]
            debug_assert!(
                t.refined_by(&next),
                "loop iteration lost information"
            );
            if next == *t {
                return Ok(());
            }
            *t = next;
        }
        Err(self.inconsistency("loop iteration did not converge"))
    }

    /// Truth of `psi` conjoined over every position of `segment`, given the
    /// assignment after the segment. Also returns the assignment at the
    /// segment's first position.
    fn all_positions3(
        &self,
        ws: &mut Workspace,
        psi: &Formula,
        segment: &Word,
        after: &Assignment,
    ) -> Result<(Truth3, Assignment), EvalError> {
        match segment {
            Word::Single(letter) => {
                let here = self.step(letter, after);
                let v = here.truth3(&self.closure, psi);
                Ok((v, here))
            }
            Word::Cat(parts) => {
                let mut cur = after.clone();
                let mut conj = Truth3::True;
                for part in parts.iter().rev() {
                    let (c, start) = self.all_positions3(ws, psi, part, &cur)?;
                    conj = and3(conj, c);
                    cur = start;
                }
                Ok((conj, cur))
            }
            Word::OmegaPow(body) => {
                // Every traversal of body^ω sees the same suffixes, so one
                // traversal covers all positions of the power.
                let key = segment as *const Word as usize;
                let t = self.fix_loop(ws, key, body, after)?;
                let (conj, _) = self.all_positions3(ws, psi, body, &t)?;
                Ok((conj, t))
            }
        }
    }

    /// Searches for a finite word of length ≤ `max_len` over the given
    /// alphabet that satisfies the formula. Words are extended on the left
    /// so suffix assignments are shared across candidates; lengths are
    /// tried in increasing order, so the first hit is length-minimal (and
    /// smallest in alphabet order among those).
    pub fn find_finite_model(
        &self,
        alphabet: &[Letter],
        max_len: usize,
    ) -> Result<Option<Vec<Letter>>, EvalError> {
        if alphabet.is_empty() {
            return Ok(None);
        }
        let end = Assignment::end(self.closure.pair_count());
        let mut suffix = Vec::new();
        for len in 1..=max_len {
            if let Some(word) = self.find_rec(alphabet, len, &end, &mut suffix)? {
                return Ok(Some(word));
            }
        }
        Ok(None)
    }

    /// Searches for a satisfying word of exactly `budget` more letters in
    /// front of the suffix described by `after`.
    fn find_rec(
        &self,
        alphabet: &[Letter],
        budget: usize,
        after: &Assignment,
        suffix: &mut Vec<Letter>,
    ) -> Result<Option<Vec<Letter>>, EvalError> {
        for letter in alphabet {
            let here = self.step(letter, after);
            if budget == 1 {
                if here.truth3(&self.closure, &self.root) == Truth3::True {
                    let mut word = vec![letter.clone()];
                    word.extend(suffix.iter().rev().cloned());
                    return Ok(Some(word));
                }
            } else {
                suffix.push(letter.clone());
                let found = self.find_rec(alphabet, budget - 1, &here, suffix)?;
                suffix.pop();
                if found.is_some() {
                    return Ok(found);
                }
            }
        }
        Ok(None)
    }

    /// The alphabet of all letters over the formula's propositions, in a
    /// fixed order (subset masks ascending).
    pub fn full_alphabet(&self) -> Vec<Letter> {
        let props = self.closure.propositions();
        let n = props.len();
        (0..(1usize << n))
            .map(|mask| {
                Letter::new(
                    props
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| (mask >> i) & 1 == 1)
                        .map(|(_, p)| p.clone()),
                )
            })
            .collect()
    }
}

/// Whether `phi` holds at position 0 of `w`.
///
/// Total for well-formed inputs; panics on an internal evaluator
/// inconsistency (see [`eval_checked`] for the fallible form).
pub fn eval(phi: &Formula, w: &Word) -> bool {
    eval_checked(phi, w).expect("evaluator inconsistency")
}

/// Whether `phi` holds at position 0 of `w`, with internal verification
/// failures reported instead of panicking.
pub fn eval_checked(phi: &Formula, w: &Word) -> Result<bool, EvalError> {
    Evaluator::new(phi).eval(w)
}

/// Direct recursive semantics on a finite word: enumerate positions and
/// check the definition literally. Exponential and proud of it — this is
/// the cross-check for [`eval`], implemented without sharing any code with
/// it.
///
/// Panics if `w` is not finite or `pos` is out of range.
pub fn eval_naive_finite(phi: &Formula, w: &Word, pos: usize) -> bool {
    let letters = flatten_finite(w);
    assert!(pos < letters.len(), "position {pos} out of range");
    naive_at(phi, &letters, pos)
}

fn flatten_finite(w: &Word) -> Vec<Letter> {
    match w {
        Word::Single(letter) => vec![letter.clone()],
        Word::Cat(parts) => parts.iter().flat_map(flatten_finite).collect(),
        Word::OmegaPow(_) => panic!("eval_naive_finite requires a finite word"),
    }
}

fn naive_at(phi: &Formula, letters: &[Letter], i: usize) -> bool {
    match phi {
        Formula::True => true,
        Formula::Atom(p) => letters[i].contains(p),
        Formula::Not(a) => !naive_at(a, letters, i),
        Formula::And(a, b) => naive_at(a, letters, i) && naive_at(b, letters, i),
        Formula::Next(a) => i + 1 < letters.len() && naive_at(a, letters, i + 1),
        Formula::Until(a, b) => (i + 1..letters.len()).any(|j| {
            naive_at(b, letters, j) && (i + 1..j).all(|k| naive_at(a, letters, k))
        }),
    }
}
