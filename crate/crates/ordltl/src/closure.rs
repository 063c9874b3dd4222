//! Formula closures and maximal consistent sets — the state-building
//! machinery of the tableau.
//!
//! The closure of φ is the set of subformulas of φ together with their
//! complements, where a double negation ¬¬χ is identified with χ. The
//! closure is represented by its complement pairs: each pair is named by its
//! positive representative, the formula left after stripping all outer
//! negations. A member of the closure is then a representative with a
//! polarity.
//!
//! A maximal consistent set picks one side of every pair, subject to the
//! local constraints: ⊤ is in whenever ⊤ is in the closure, and a
//! conjunction is in exactly when both conjuncts are. `Next` and `Until`
//! members carry no local constraint — they speak about strictly later
//! positions, and the transition rules govern them instead.

use std::fmt;

use crate::syntax::{Formula, Proposition};
use crate::word::Letter;

/// The closure of a formula, organized as complement pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Closure {
    /// Positive representatives, strictly sorted. A representative is never
    /// a negation; index in this list is the pair index used everywhere.
    reps: Vec<Formula>,
}

/// Strips outer negations: returns the non-negation root and the polarity
/// (`true` if an even number of negations was removed).
pub fn normalize(phi: &Formula) -> (&Formula, bool) {
    let mut cur = phi;
    let mut positive = true;
    while let Formula::Not(inner) = cur {
        cur = inner;
        positive = !positive;
    }
    (cur, positive)
}

impl Closure {
    /// Builds the closure of `phi`.
    pub fn of(phi: &Formula) -> Closure {
        let mut reps: Vec<Formula> = phi
            .subformulas()
            .iter()
            .map(|f| normalize(f).0.clone())
            .collect();
        reps.sort();
        reps.dedup();
        Closure { reps }
    }

    /// Number of complement pairs. The closure has `2 * pair_count()`
    /// members.
    pub fn pair_count(&self) -> usize {
        self.reps.len()
    }

    /// The positive representative of pair `idx`.
    pub fn rep(&self, idx: usize) -> &Formula {
        &self.reps[idx]
    }

    pub fn reps(&self) -> &[Formula] {
        &self.reps
    }

    /// Pair index of a formula, if its representative is in the closure.
    pub fn pair_of(&self, phi: &Formula) -> Option<(usize, bool)> {
        let (root, positive) = normalize(phi);
        self.reps
            .binary_search(root)
            .ok()
            .map(|idx| (idx, positive))
    }

    /// Whether `phi` is a closure member (up to double-negation
    /// identification).
    pub fn contains(&self, phi: &Formula) -> bool {
        self.pair_of(phi).is_some()
    }

    /// The canonical complement of a member: `ψ ↦ ¬ψ` with double negations
    /// stripped, so the result is always a representative or its single
    /// negation.
    pub fn complement(&self, phi: &Formula) -> Option<Formula> {
        let (idx, positive) = self.pair_of(phi)?;
        let rep = self.reps[idx].clone();
        Some(if positive { Formula::not(rep) } else { rep })
    }

    /// All closure members in canonical form: each representative followed
    /// by its negation, in pair order.
    pub fn members(&self) -> Vec<Formula> {
        let mut out = Vec::with_capacity(self.reps.len() * 2);
        for rep in &self.reps {
            out.push(rep.clone());
            out.push(Formula::not(rep.clone()));
        }
        out
    }

    /// Enumerates every maximal consistent set over this closure, in
    /// ascending order of the underlying membership mask. The position of a
    /// set in the result is its canonical state index.
    pub fn enumerate_maxcons(&self) -> Vec<MaxConsSet> {
        let pairs = self.pair_count();
        assert!(
            pairs <= MAX_ENUMERABLE_PAIRS,
            "closure with {pairs} pairs is too large to enumerate"
        );
        let mut out = Vec::new();
        'mask: for bits in 0..(1u64 << pairs) {
            let candidate = MaxConsSet { bits };
            for (idx, rep) in self.reps.iter().enumerate() {
                match rep {
                    Formula::True => {
                        if !candidate.member(idx) {
                            continue 'mask;
                        }
                    }
                    Formula::And(a, b) => {
                        let both = self.truth_in(&candidate, a) && self.truth_in(&candidate, b);
                        if candidate.member(idx) != both {
                            continue 'mask;
                        }
                    }
                    _ => {}
                }
            }
            out.push(candidate);
        }
        out
    }

    /// Truth of an arbitrary closure member under a candidate set.
    /// Panics if `phi`'s representative is not in the closure.
    pub fn truth_in(&self, s: &MaxConsSet, phi: &Formula) -> bool {
        let (idx, positive) = self
            .pair_of(phi)
            .unwrap_or_else(|| panic!("formula {phi} is not in the closure"));
        s.member(idx) == positive
    }

    /// The letter a state emits: the propositions whose atoms it contains.
    pub fn letter_of(&self, s: &MaxConsSet) -> Letter {
        Letter::new(self.reps.iter().enumerate().filter_map(|(idx, rep)| {
            match rep {
                Formula::Atom(p) if s.member(idx) => Some(p.clone()),
                _ => None,
            }
        }))
    }

    /// Propositions mentioned anywhere in the closure.
    pub fn propositions(&self) -> Vec<Proposition> {
        let mut out: Vec<Proposition> = self
            .reps
            .iter()
            .flat_map(|rep| rep.propositions())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Renders a maximal consistent set as its member list, in pair order.
    pub fn describe(&self, s: &MaxConsSet) -> String {
        let mut out = String::from("{");
        for (idx, rep) in self.reps.iter().enumerate() {
            if idx > 0 {
                out.push_str(", ");
            }
            if !s.member(idx) {
                out.push('!');
                match rep {
                    Formula::True | Formula::Atom(_) => out.push_str(&rep.to_string()),
                    _ => {
                        out.push('(');
                        out.push_str(&rep.to_string());
                        out.push(')');
                    }
                }
            } else {
                out.push_str(&rep.to_string());
            }
        }
        out.push('}');
        out
    }
}

/// Enumeration works on a `u64` membership mask; this bounds it well below
/// the state-explosion guard used by the automaton builder.
const MAX_ENUMERABLE_PAIRS: usize = 32;

/// A maximal consistent set, stored as one bit per complement pair:
/// bit `i` set means the positive representative of pair `i` is a member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MaxConsSet {
    bits: u64,
}

impl MaxConsSet {
    /// Whether the positive representative of pair `idx` is a member.
    pub fn member(&self, idx: usize) -> bool {
        (self.bits >> idx) & 1 == 1
    }

    pub fn mask(&self) -> u64 {
        self.bits
    }
}

impl fmt::Display for MaxConsSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "maxcons({:#x})", self.bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Formula {
        Formula::parse(s).expect("valid formula")
    }

    #[test]
    fn closure_of_atom() {
        let c = Closure::of(&parse("p"));
        assert_eq!(c.members(), vec![parse("p"), parse("!p")]);
        assert_eq!(c.pair_count(), 1);
    }

    #[test]
    fn closure_of_until() {
        let c = Closure::of(&parse("p U q"));
        assert_eq!(c.members().len(), 6);
        for m in ["p U q", "!(p U q)", "p", "!p", "q", "!q"] {
            assert!(c.contains(&parse(m)), "missing {m}");
        }
        assert!(!c.contains(&parse("T")));
    }

    #[test]
    fn complement_is_an_involution() {
        let c = Closure::of(&parse("p U (q & !p)"));
        for m in c.members() {
            let comp = c.complement(&m).unwrap();
            assert_ne!(comp, m);
            assert_eq!(c.complement(&comp).unwrap(), m);
        }
    }

    #[test]
    fn double_negation_is_identified() {
        let c = Closure::of(&parse("p"));
        assert!(c.contains(&parse("!!p")));
        assert_eq!(c.pair_of(&parse("!!p")), c.pair_of(&parse("p")));
        assert_eq!(c.complement(&parse("!!p")).unwrap(), parse("!p"));
    }

    #[test]
    fn closure_monotone_under_subformulas() {
        let phi = parse("p U (q & !p)");
        let big = Closure::of(&phi);
        for sub in phi.subformulas() {
            for m in Closure::of(&sub).members() {
                assert!(big.contains(&m), "{m} missing from closure of {phi}");
            }
        }
    }

    #[test]
    fn maxcons_of_atom() {
        let c = Closure::of(&parse("p"));
        let sets = c.enumerate_maxcons();
        assert_eq!(sets.len(), 2);
        assert_eq!(c.describe(&sets[0]), "{!p}");
        assert_eq!(c.describe(&sets[1]), "{p}");
    }

    #[test]
    fn maxcons_of_conjunction_respects_coherence() {
        let c = Closure::of(&parse("p & q"));
        let sets = c.enumerate_maxcons();
        assert_eq!(sets.len(), 4);
        let descriptions: Vec<String> = sets.iter().map(|s| c.describe(s)).collect();
        // Pair order is p, q, p∧q.
        assert_eq!(
            descriptions,
            vec![
                "{!p, !q, !(p & q)}",
                "{p, !q, !(p & q)}",
                "{!p, q, !(p & q)}",
                "{p, q, p & q}",
            ]
        );
    }

    #[test]
    fn maxcons_of_until_has_no_local_constraint() {
        let c = Closure::of(&parse("p U q"));
        // Three free pairs (p, q, pUq): all 8 candidate rows are valid.
        assert_eq!(c.enumerate_maxcons().len(), 8);
    }

    #[test]
    fn maxcons_matches_brute_force_filter() {
        for text in ["p", "p & q", "p U q", "G p", "X (p | q)", "p & !p"] {
            let phi = parse(text);
            let c = Closure::of(&phi);
            let fast: Vec<u64> = c.enumerate_maxcons().iter().map(|s| s.mask()).collect();
            let brute: Vec<u64> = (0..(1u64 << c.pair_count()))
                .filter(|&bits| {
                    let s = MaxConsSet { bits };
                    c.reps().iter().enumerate().all(|(idx, rep)| match rep {
                        Formula::True => s.member(idx),
                        Formula::And(a, b) => {
                            s.member(idx) == (c.truth_in(&s, a) && c.truth_in(&s, b))
                        }
                        _ => true,
                    })
                })
                .collect();
            assert_eq!(fast, brute, "mismatch for {text}");
        }
    }

    #[test]
    fn maxcons_count_is_at_most_exponential_in_pairs() {
        for text in ["p", "p & q", "p U q", "G p", "F p", "p U (q & !p)"] {
            let c = Closure::of(&parse(text));
            let count = c.enumerate_maxcons().len() as u64;
            assert!(count <= 1 << c.pair_count(), "count too large for {text}");
        }
    }

    #[test]
    fn always_formula_has_four_pairs_and_four_states() {
        // G p desugars to ¬¬(¬¬p ∧ ¬(⊤ U ¬p)); pairs: ⊤, p, the ∧-formula,
        // and the until. The ∧ is forced and ⊤ is forced, so 4 states remain.
        let c = Closure::of(&parse("G p"));
        assert_eq!(c.pair_count(), 4);
        assert!(c.contains(&parse("T")));
        assert_eq!(c.enumerate_maxcons().len(), 4);
    }

    #[test]
    fn letter_of_collects_member_atoms() {
        let c = Closure::of(&parse("p & !q"));
        let sets = c.enumerate_maxcons();
        for s in &sets {
            let letter = c.letter_of(s);
            for prop in c.propositions() {
                let atom = Formula::Atom(prop.clone());
                assert_eq!(letter.contains(&prop), c.truth_in(s, &atom));
            }
        }
        // A state with no atom members emits the empty letter.
        let none = sets
            .iter()
            .find(|s| {
                !c.truth_in(s, &parse("p")) && !c.truth_in(s, &parse("q"))
            })
            .unwrap();
        assert_eq!(c.letter_of(none), Letter::default());
    }
}
