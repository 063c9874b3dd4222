//! The formula automaton over transfinite words: tableau states, successor
//! and limit transitions, a layered emptiness check, and witness extraction.
//!
//! # Construction
//!
//! States are the maximal consistent subsets of the formula's closure; a
//! state emits the letter made of its member atoms. A successor step from
//! `s` to `t` is allowed when every `X` and until member of `s` is threaded
//! correctly through `t` ([`OrdinalAutomaton::succ_allowed`]). A limit
//! position whose cofinally visited state set is `S` may continue in state
//! `t` when the until obligations pending in `S` are coherently justified
//! ([`OrdinalAutomaton::limit_allowed`]).
//!
//! # Emptiness
//!
//! The search is stratified by ordinal level. A level-j "fact" says: some
//! run over a word of length ω^j leads from an anchor state to a target
//! state, visiting a known set of states. Level-0 facts are the successor
//! edges; a level-(j+1) fact arises from a closed walk over facts of level
//! ≤ j (its visited-union is the cofinal set S) and a target accepted by
//! `limit_allowed`. A word of successor length is accepted through a fact
//! path from an initial state to an end-consistent state; a word of limit
//! length through a reachable closed walk whose visited-union satisfies
//! [`OrdinalAutomaton::limit_end_accepting`].
//!
//! Closed walks are enumerated per strongly connected component by a
//! bounded simple-cycle search, then closed under merging of walks that
//! share a rotation point. The bounds (cycle length, cycle count, merge
//! count, search budget) keep the search finite; they can in principle miss
//! witnesses, so UNSAT answers are corroborated by the differential test
//! harness rather than trusted blindly. SAT answers are always validated
//! against the semantic evaluator by the solver layer.

use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::fmt::Write as _;

use thiserror::Error;

use crate::closure::{Closure, MaxConsSet};
use crate::syntax::Formula;
use crate::word::{Letter, Word};

/// A set of state indices, packed as a bitset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateSet {
    blocks: Vec<u64>,
}

impl StateSet {
    pub fn new(universe: usize) -> StateSet {
        StateSet {
            blocks: vec![0; universe.div_ceil(64)],
        }
    }

    pub fn insert(&mut self, i: usize) {
        self.blocks[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, i: usize) -> bool {
        (self.blocks[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn union_with(&mut self, other: &StateSet) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    pub fn is_subset_of(&self, other: &StateSet) -> bool {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|b| *b == 0)
    }

    /// Member indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.blocks.iter().enumerate().flat_map(|(k, block)| {
            let mut b = *block;
            std::iter::from_fn(move || {
                if b == 0 {
                    None
                } else {
                    let bit = b.trailing_zeros() as usize;
                    b &= b - 1;
                    Some(k * 64 + bit)
                }
            })
        })
    }
}

/// Deliberate rule mutations for exercising the differential harness. The
/// harness must detect each of these; they are reachable from the CLI
/// through a hidden flag and are never enabled by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultInjection {
    #[default]
    None,
    /// Inverts the "pending obligations pass through the limit" clause of
    /// the limit transition rule wherever it applies.
    FlipLimitConditionA,
}

/// Construction options.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions {
    /// Refuse to build when the candidate state space 2^pairs exceeds this.
    /// Hard-capped at 2^31 regardless.
    pub max_states: u64,
    pub fault: FaultInjection,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_states: 1 << 22,
            fault: FaultInjection::None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error(
        "the formula's closure has {pairs} complement pairs, giving up to \
         2^{pairs} states, above the configured bound of {max_states}"
    )]
    TooManyStates { pairs: usize, max_states: u64 },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum WitnessError {
    #[error("malformed run skeleton: {0}")]
    Malformed(String),
}

/// A derivation-shaped description of an accepting run, reconstructible
/// into a word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunSkeleton {
    /// A run through the listed states, one position each.
    Finite(Vec<usize>),
    /// A prefix followed by a closed walk repeated ω times. `target` is the
    /// state at the limit position when the word continues there; `None`
    /// when the word ends at the limit.
    LimitStep {
        prefix: Vec<RunSkeleton>,
        cycle: Vec<RunSkeleton>,
        target: Option<usize>,
    },
    /// Concatenation of sub-runs.
    Seq(Vec<RunSkeleton>),
}

impl RunSkeleton {
    /// The ordinal degree of the word this skeleton denotes: 0 for finite,
    /// one above the cycle's degree for a limit step.
    pub fn level(&self) -> u32 {
        match self {
            RunSkeleton::Finite(_) => 0,
            RunSkeleton::LimitStep { prefix, cycle, .. } => {
                let p = prefix.iter().map(RunSkeleton::level).max().unwrap_or(0);
                let c = cycle.iter().map(RunSkeleton::level).max().unwrap_or(0);
                p.max(c + 1)
            }
            RunSkeleton::Seq(parts) => {
                parts.iter().map(RunSkeleton::level).max().unwrap_or(0)
            }
        }
    }
}

/// Result of an emptiness search: the witness skeleton with its level when
/// the language is non-empty within the bound, plus search statistics.
#[derive(Debug, Clone)]
pub struct EmptinessReport {
    pub witness: Option<(RunSkeleton, u32)>,
    /// Number of limit facts derived during the search.
    pub fact_count: usize,
}

/// `(pair index, polarity)` of a formula inside its closure.
type PairRef = (usize, bool);

/// Aggregates of one until over a cofinal state set.
#[derive(Debug, Clone, Copy)]
struct UntilProfile {
    some_u: bool,
    all_u: bool,
    some_rhs: bool,
    all_lhs: bool,
}

#[derive(Debug)]
struct NextInfo {
    pair: usize,
    operand: PairRef,
}

#[derive(Debug)]
struct UntilInfo {
    pair: usize,
    lhs: PairRef,
    rhs: PairRef,
}

/// The formula automaton.
#[derive(Debug)]
pub struct OrdinalAutomaton {
    formula: Formula,
    closure: Closure,
    states: Vec<MaxConsSet>,
    letters: Vec<Letter>,
    initial: Vec<usize>,
    /// Successor rows: `succ[s]` is the set of allowed successors of `s`.
    succ: Vec<StateSet>,
    end_states: StateSet,
    nexts: Vec<NextInfo>,
    untils: Vec<UntilInfo>,
    fault: FaultInjection,
}

impl OrdinalAutomaton {
    pub fn build(phi: &Formula) -> Result<OrdinalAutomaton, BuildError> {
        Self::build_with(phi, BuildOptions::default())
    }

    pub fn build_with(
        phi: &Formula,
        options: BuildOptions,
    ) -> Result<OrdinalAutomaton, BuildError> {
        let closure = Closure::of(phi);
        let pairs = closure.pair_count();
        let bound = options.max_states.min(1 << 31);
        if pairs >= 32 || (1u64 << pairs) > bound {
            return Err(BuildError::TooManyStates {
                pairs,
                max_states: options.max_states,
            });
        }

        let pair_ref = |f: &Formula| -> PairRef {
            closure
                .pair_of(f)
                .expect("operand of a closure member is in the closure")
        };
        let mut nexts = Vec::new();
        let mut untils = Vec::new();
        for (pair, rep) in closure.reps().iter().enumerate() {
            match rep {
                Formula::Next(a) => nexts.push(NextInfo {
                    pair,
                    operand: pair_ref(a),
                }),
                Formula::Until(a, b) => untils.push(UntilInfo {
                    pair,
                    lhs: pair_ref(a),
                    rhs: pair_ref(b),
                }),
                _ => {}
            }
        }

        let states = closure.enumerate_maxcons();
        let n = states.len();
        assert!(
            (n as u64) <= 1u64 << pairs,
            "state count exceeds 2^pairs; enumeration is broken"
        );
        let letters: Vec<Letter> = states.iter().map(|s| closure.letter_of(s)).collect();
        let initial: Vec<usize> = (0..n)
            .filter(|&i| closure.truth_in(&states[i], phi))
            .collect();

        let mut automaton = OrdinalAutomaton {
            formula: phi.clone(),
            closure,
            states,
            letters,
            initial,
            succ: Vec::new(),
            end_states: StateSet::new(n),
            nexts,
            untils,
            fault: options.fault,
        };
        automaton.succ = (0..n)
            .map(|s| {
                let mut row = StateSet::new(n);
                for t in 0..n {
                    if automaton.succ_allowed(s, t) {
                        row.insert(t);
                    }
                }
                row
            })
            .collect();
        let mut ends = StateSet::new(n);
        for s in 0..n {
            if automaton.end_consistent(s) {
                ends.insert(s);
            }
        }
        automaton.end_states = ends;
        Ok(automaton)
    }

    pub fn formula(&self) -> &Formula {
        &self.formula
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn states(&self) -> &[MaxConsSet] {
        &self.states
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn letter(&self, state: usize) -> &Letter {
        &self.letters[state]
    }

    pub fn successors(&self, state: usize) -> &StateSet {
        &self.succ[state]
    }

    fn truth(&self, state: usize, r: PairRef) -> bool {
        self.states[state].member(r.0) == r.1
    }

    /// One-step rule: every `Xψ` of `s` holds iff `ψ` holds in `t`, and
    /// every until of `s` holds iff it is fulfilled or threaded in `t`.
    pub fn succ_allowed(&self, s: usize, t: usize) -> bool {
        self.nexts.iter().all(|nx| {
            self.states[s].member(nx.pair) == self.truth(t, nx.operand)
        }) && self.untils.iter().all(|u| {
            let threaded = self.truth(t, u.rhs)
                || (self.truth(t, u.lhs) && self.states[t].member(u.pair));
            self.states[s].member(u.pair) == threaded
        })
    }

    /// Limit-transition rule: may a limit position with cofinally visited
    /// state set `s_set` continue in state `t`?
    pub fn limit_allowed(&self, s_set: &StateSet, t: usize) -> bool {
        self.limit_allowed_from(&self.limit_profile(s_set), t)
    }

    /// The per-until aggregates of a cofinal state set, reusable across
    /// continuation states.
    fn limit_profile(&self, s_set: &StateSet) -> Vec<UntilProfile> {
        debug_assert!(!s_set.is_empty());
        self.untils
            .iter()
            .map(|u| {
                let mut profile = UntilProfile {
                    some_u: false,
                    all_u: true,
                    some_rhs: false,
                    all_lhs: true,
                };
                for s in s_set.iter() {
                    let has_u = self.states[s].member(u.pair);
                    profile.some_u |= has_u;
                    profile.all_u &= has_u;
                    profile.some_rhs |= self.truth(s, u.rhs);
                    profile.all_lhs &= self.truth(s, u.lhs);
                }
                profile
            })
            .collect()
    }

    fn limit_allowed_from(&self, profile: &[UntilProfile], t: usize) -> bool {
        self.untils.iter().zip(profile).all(|(u, p)| {
            let tail = self.truth(t, u.rhs)
                || (self.truth(t, u.lhs) && self.states[t].member(u.pair));

            // Pending obligations with no cofinal fulfillment must hold
            // everywhere below the limit and pass through it.
            let mut cond_a = if p.some_u && !p.some_rhs {
                p.all_u && p.all_lhs && tail
            } else {
                true
            };
            if self.fault == FaultInjection::FlipLimitConditionA && p.some_u && !p.some_rhs {
                cond_a = !cond_a;
            }
            // Truth forced from below: lhs everywhere plus a fulfillment
            // (cofinal or at/after the limit) forces the until everywhere.
            let cond_b = if p.all_lhs && (p.some_rhs || tail) {
                p.all_u
            } else {
                true
            };
            // Falsity must be justified: an until false somewhere below the
            // limit is incompatible with a forcing configuration.
            let cond_c = if !p.all_u && !p.some_rhs {
                !(p.all_lhs && tail)
            } else {
                true
            };
            cond_a && cond_b && cond_c
        })
    }

    /// May a word of successor length end in state `s`? No `X` member and
    /// no until member — nothing may require a next position.
    pub fn end_consistent(&self, s: usize) -> bool {
        self.nexts.iter().all(|nx| !self.states[s].member(nx.pair))
            && self.untils.iter().all(|u| !self.states[s].member(u.pair))
    }

    /// May a word of limit length end with cofinally visited set `s_set`?
    /// Every cofinally pending until must be cofinally fulfilled. `X`
    /// members impose nothing: below a limit every position has a
    /// successor.
    pub fn limit_end_accepting(&self, s_set: &StateSet) -> bool {
        debug_assert!(!s_set.is_empty());
        self.untils.iter().all(|u| {
            let some_u = s_set.iter().any(|s| self.states[s].member(u.pair));
            let some_rhs = s_set.iter().any(|s| self.truth(s, u.rhs));
            !some_u || some_rhs
        })
    }

    /// Decides whether the automaton accepts some word of length below
    /// ω^{max_level+1} (and of length ≥ 1), returning a witness skeleton
    /// and its level on success.
    pub fn emptiness(&self, max_level: u32) -> EmptinessReport {
        Search::new(self).run(max_level)
    }

    /// Reconstructs the word denoted by a run skeleton.
    pub fn extract_witness(&self, skeleton: &RunSkeleton) -> Result<Word, WitnessError> {
        self.skeleton_word(skeleton)
    }

    fn skeleton_word(&self, skeleton: &RunSkeleton) -> Result<Word, WitnessError> {
        match skeleton {
            RunSkeleton::Finite(states) => {
                if states.is_empty() {
                    return Err(WitnessError::Malformed("empty finite run".into()));
                }
                let singles = states
                    .iter()
                    .map(|&s| {
                        self.letters
                            .get(s)
                            .map(|l| Word::single(l.clone()))
                            .ok_or_else(|| {
                                WitnessError::Malformed(format!("state {s} out of range"))
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Word::cat(singles))
            }
            RunSkeleton::LimitStep { prefix, cycle, .. } => {
                if cycle.is_empty() {
                    return Err(WitnessError::Malformed("empty cycle".into()));
                }
                let cycle_words = cycle
                    .iter()
                    .map(|p| self.skeleton_word(p))
                    .collect::<Result<Vec<_>, _>>()?;
                let power = Word::omega(Word::cat(cycle_words));
                if prefix.is_empty() {
                    Ok(power)
                } else {
                    let mut parts = prefix
                        .iter()
                        .map(|p| self.skeleton_word(p))
                        .collect::<Result<Vec<_>, _>>()?;
                    parts.push(power);
                    Ok(Word::cat(parts))
                }
            }
            RunSkeleton::Seq(parts) => {
                if parts.is_empty() {
                    return Err(WitnessError::Malformed("empty run sequence".into()));
                }
                let words = parts
                    .iter()
                    .map(|p| self.skeleton_word(p))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Word::cat(words))
            }
        }
    }

    /// DOT rendering of the successor graph. Initial states are doubly
    /// circled; end-consistent states are bold. Node labels list the state's
    /// closure members in pair order. Output is byte-deterministic.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        out.push_str("digraph automaton {\n");
        if self.initial.is_empty() {
            out.push_str("  // initial states: none\n");
        }
        out.push_str("  rankdir=LR;\n");
        for (i, state) in self.states.iter().enumerate() {
            let mut attrs = format!("label=\"{}\"", self.closure.describe(state));
            if self.initial.contains(&i) {
                attrs.push_str(", peripheries=2");
            }
            if self.end_states.contains(i) {
                attrs.push_str(", style=bold");
            }
            let _ = writeln!(out, "  s{i} [{attrs}];");
        }
        for s in 0..self.states.len() {
            for t in self.succ[s].iter() {
                let _ = writeln!(out, "  s{s} -> s{t};");
            }
        }
        out.push_str("}\n");
        out
    }
}

/// One edge of the emptiness multigraph: a successor step or a derived
/// limit fact, entered at a recorded source state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Edge {
    src: usize,
    kind: EdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeKind {
    Step { tgt: usize },
    Fact { id: usize },
}

/// A derived limit fact: from any state in `srcs`, a run over a word of
/// length ω^level reaches the limit position in state `tgt`, visiting
/// exactly the states in `visited` (which includes `tgt` by convention).
#[derive(Debug, Clone)]
struct Fact {
    level: u32,
    /// Rotation points of the walk, sorted ascending.
    srcs: Vec<usize>,
    tgt: usize,
    visited: StateSet,
    /// The closed walk generating the ω-power, anchored at `walk[0].src`.
    walk: Vec<Edge>,
}

/// A closed walk and the state set it visits — a candidate cofinal set.
#[derive(Debug, Clone)]
struct Candidate {
    set: StateSet,
    walk: Vec<Edge>,
    /// Rotation points, sorted ascending.
    anchors: Vec<usize>,
    /// Highest edge level on the walk; the candidate denotes words of
    /// degree `max_level + 1`.
    max_level: u32,
}

/// Search bounds. The caps keep cycle enumeration finite; missing a walk can
/// only turn an actual SAT into an UNSAT answer, never the reverse, and the
/// differential harness watches for exactly that.
const CYCLE_LEN_CAP: usize = 12;
const CYCLES_CAP: usize = 1500;
const CANDIDATES_CAP: usize = 2500;
const DFS_BUDGET: usize = 200_000;
/// Stop enumerating when this many expansions in a row yield nothing new;
/// dense tableaux have astronomically many near-duplicate cycles.
const BARREN_CAP: usize = 20_000;
const FACTS_CAP: usize = 4000;

struct Search<'a> {
    a: &'a OrdinalAutomaton,
    n: usize,
    facts: Vec<Fact>,
    /// Candidates across all stages, dedup-keyed by (set, anchors).
    candidates: Vec<Candidate>,
    candidate_keys: BTreeMap<(StateSet, Vec<usize>), ()>,
}

/// Breadth-first reachability over step and fact edges, recording parents
/// for path reconstruction.
struct Reach {
    dist: Vec<Option<u32>>,
    parent: Vec<Option<(usize, Edge)>>,
}

/// Enumeration budget: a hard expansion cap, a cutoff after a barren streak,
/// and the count of walks recorded so far.
struct Budget {
    expansions: usize,
    barren: usize,
    found: usize,
}

impl Budget {
    fn spent(&self) -> bool {
        self.expansions == 0 || self.barren == 0 || self.found >= CYCLES_CAP
    }

    fn expand(&mut self) {
        self.expansions -= 1;
        self.barren = self.barren.saturating_sub(1);
    }

    fn productive(&mut self) {
        self.found += 1;
        self.barren = BARREN_CAP;
    }
}

impl<'a> Search<'a> {
    fn new(a: &'a OrdinalAutomaton) -> Search<'a> {
        Search {
            a,
            n: a.state_count(),
            facts: Vec::new(),
            candidates: Vec::new(),
            candidate_keys: BTreeMap::new(),
        }
    }

    fn run(mut self, max_level: u32) -> EmptinessReport {
        for level in 0..=max_level {
            if level >= 1 {
                self.extend_candidates(level - 1);
                self.derive_facts(level);
            }
            let reach = self.reachability(level);

            // Successor-length route: a path of facts from an initial state
            // to an end-consistent state; the final state's letter ends the
            // word.
            if let Some(skeleton) = self.successor_route(&reach) {
                let lvl = skeleton.level();
                return EmptinessReport {
                    witness: Some((skeleton, lvl)),
                    fact_count: self.facts.len(),
                };
            }

            // Limit-length route: a reachable closed walk, every cofinally
            // pending until cofinally fulfilled.
            if level >= 1 {
                if let Some(skeleton) = self.limit_route(level, &reach) {
                    let lvl = skeleton.level();
                    return EmptinessReport {
                        witness: Some((skeleton, lvl)),
                        fact_count: self.facts.len(),
                    };
                }
            }
        }
        EmptinessReport {
            witness: None,
            fact_count: self.facts.len(),
        }
    }

    fn edge_tgt(&self, e: &Edge) -> usize {
        match e.kind {
            EdgeKind::Step { tgt } => tgt,
            EdgeKind::Fact { id } => self.facts[id].tgt,
        }
    }

    fn edge_level(&self, e: &Edge) -> u32 {
        match e.kind {
            EdgeKind::Step { .. } => 0,
            EdgeKind::Fact { id } => self.facts[id].level,
        }
    }

    fn add_edge_visited(&self, e: &Edge, into: &mut StateSet) {
        match e.kind {
            EdgeKind::Step { tgt } => {
                into.insert(e.src);
                into.insert(tgt);
            }
            EdgeKind::Fact { id } => into.union_with(&self.facts[id].visited),
        }
    }

    /// Out-edges of `s` over facts with level ≤ `level`, in deterministic
    /// order: steps by target, then facts by id.
    fn out_edges(&self, s: usize, level: u32, mut f: impl FnMut(Edge)) {
        for tgt in self.a.succ[s].iter() {
            f(Edge {
                src: s,
                kind: EdgeKind::Step { tgt },
            });
        }
        for (id, fact) in self.facts.iter().enumerate() {
            if fact.level <= level && fact.srcs.binary_search(&s).is_ok() {
                f(Edge {
                    src: s,
                    kind: EdgeKind::Fact { id },
                });
            }
        }
    }

    /// Adjacency lists over edges of level ≤ `level`, materialized once per
    /// search round so the inner loops allocate nothing.
    fn adjacency(&self, level: u32) -> Vec<Vec<Edge>> {
        (0..self.n)
            .map(|s| {
                let mut edges = Vec::new();
                self.out_edges(s, level, |e| edges.push(e));
                edges
            })
            .collect()
    }

    /// Enumerates closed walks over edges of level ≤ `edge_level` and adds
    /// them (and their share-a-rotation-point merges) to the candidate
    /// store.
    fn extend_candidates(&mut self, edge_level: u32) {
        // Without new facts at this level the edge set equals the previous
        // round's, so every walk is already recorded.
        if edge_level >= 1 && !self.facts.iter().any(|f| f.level == edge_level) {
            return;
        }
        let adj = self.adjacency(edge_level);
        let sccs = self.tarjan_sccs(&adj);
        let mut budget = Budget {
            expansions: DFS_BUDGET,
            barren: BARREN_CAP,
            found: 0,
        };

        let mut scc_of = vec![usize::MAX; self.n];
        for (k, scc) in sccs.iter().enumerate() {
            for &s in scc {
                scc_of[s] = k;
            }
        }

        // Simple cycles, canonicalized by starting at their smallest state.
        // The on-path buffer is restored after each search, so one
        // allocation serves every start.
        let mut path = Vec::new();
        let mut on_path = vec![false; self.n];
        for scc in &sccs {
            for &start in scc {
                if budget.spent() {
                    break;
                }
                self.cycle_dfs(start, start, &adj, &scc_of, &mut path, &mut on_path, &mut budget);
            }
        }

        // Merge closure: two walks sharing a rotation point concatenate
        // into one walk visiting the union of their states.
        let mut i = 0;
        while i < self.candidates.len() && self.candidates.len() < CANDIDATES_CAP {
            let mut j = 0;
            while j < i && self.candidates.len() < CANDIDATES_CAP {
                if let Some(merged) = self.merge_candidates(&self.candidates[i], &self.candidates[j])
                {
                    self.push_candidate(merged);
                }
                j += 1;
            }
            i += 1;
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn cycle_dfs(
        &mut self,
        start: usize,
        cur: usize,
        adj: &[Vec<Edge>],
        scc_of: &[usize],
        path: &mut Vec<Edge>,
        on_path: &mut Vec<bool>,
        budget: &mut Budget,
    ) {
        if budget.spent() {
            return;
        }
        budget.expand();
        for k in 0..adj[cur].len() {
            if budget.spent() {
                return;
            }
            let e = adj[cur][k];
            let tgt = self.edge_tgt(&e);
            if tgt == start {
                path.push(e);
                if self.record_cycle(path.clone()) {
                    budget.productive();
                }
                path.pop();
                continue;
            }
            // Only states above the canonical start, inside the same SCC,
            // not yet on the path.
            if tgt < start
                || scc_of[tgt] != scc_of[start]
                || on_path[tgt]
                || path.len() + 1 >= CYCLE_LEN_CAP
            {
                continue;
            }
            path.push(e);
            on_path[tgt] = true;
            self.cycle_dfs(start, tgt, adj, scc_of, path, on_path, budget);
            on_path[tgt] = false;
            path.pop();
        }
    }

    /// Builds a candidate from a closed walk; returns whether it was new.
    fn record_cycle(&mut self, walk: Vec<Edge>) -> bool {
        let mut set = StateSet::new(self.n);
        for e in &walk {
            self.add_edge_visited(e, &mut set);
        }
        let mut anchors: Vec<usize> = walk.iter().map(|e| e.src).collect();
        anchors.sort_unstable();
        anchors.dedup();
        let max_level = walk.iter().map(|e| self.edge_level(e)).max().unwrap_or(0);
        self.push_candidate(Candidate {
            set,
            walk,
            anchors,
            max_level,
        })
    }

    fn push_candidate(&mut self, c: Candidate) -> bool {
        if self.candidates.len() >= CANDIDATES_CAP {
            return false;
        }
        let key = (c.set.clone(), c.anchors.clone());
        if self.candidate_keys.contains_key(&key) {
            return false;
        }
        self.candidate_keys.insert(key, ());
        self.candidates.push(c);
        true
    }

    fn merge_candidates(&self, a: &Candidate, b: &Candidate) -> Option<Candidate> {
        let common = a.anchors.iter().find(|x| b.anchors.binary_search(x).is_ok())?;
        let rotated_a = rotate_walk(&a.walk, *common)?;
        let rotated_b = rotate_walk(&b.walk, *common)?;
        let mut walk = rotated_a;
        walk.extend(rotated_b);
        let mut set = a.set.clone();
        set.union_with(&b.set);
        let mut anchors = a.anchors.clone();
        anchors.extend(&b.anchors);
        anchors.sort_unstable();
        anchors.dedup();
        Some(Candidate {
            set,
            walk,
            anchors,
            max_level: a.max_level.max(b.max_level),
        })
    }

    /// Derives level-`level` facts from candidates whose walks peak at
    /// level-(level-1) edges.
    fn derive_facts(&mut self, level: u32) {
        let mut new_facts = Vec::new();
        for c in &self.candidates {
            if c.max_level != level - 1 {
                continue;
            }
            let profile = self.a.limit_profile(&c.set);
            for t in 0..self.n {
                if !self.a.limit_allowed_from(&profile, t) {
                    continue;
                }
                let mut visited = c.set.clone();
                visited.insert(t);
                new_facts.push(Fact {
                    level,
                    srcs: c.anchors.clone(),
                    tgt: t,
                    visited,
                    walk: c.walk.clone(),
                });
            }
        }
        for fact in new_facts {
            self.push_fact(fact);
        }
    }

    /// Keeps the fact store free of dominated entries: a fact is redundant
    /// when another fact with the same target admits at least the same
    /// anchors, visits at most the same states, and has at most the same
    /// level.
    fn push_fact(&mut self, fact: Fact) {
        if self.facts.len() >= FACTS_CAP {
            return;
        }
        let dominated = |a: &Fact, b: &Fact| {
            a.tgt == b.tgt
                && a.level >= b.level
                && b.visited.is_subset_of(&a.visited)
                && a.srcs.iter().all(|s| b.srcs.binary_search(s).is_ok())
        };
        if self.facts.iter().any(|f| dominated(&fact, f)) {
            return;
        }
        self.facts.retain(|f| !dominated(f, &fact));
        self.facts.push(fact);
    }

    /// BFS from all initial states over edges of level ≤ `level`.
    fn reachability(&self, level: u32) -> Reach {
        let mut dist = vec![None; self.n];
        let mut parent = vec![None; self.n];
        let mut queue = VecDeque::new();
        for &s in &self.a.initial {
            if dist[s].is_none() {
                dist[s] = Some(0);
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            let d = dist[s].expect("queued states have distances");
            let mut edges = Vec::new();
            self.out_edges(s, level, |e| edges.push(e));
            for e in edges {
                let t = self.edge_tgt(&e);
                if dist[t].is_none() {
                    dist[t] = Some(d + 1);
                    parent[t] = Some((s, e));
                    queue.push_back(t);
                }
            }
        }
        Reach { dist, parent }
    }

    fn path_to(&self, reach: &Reach, target: usize) -> Vec<Edge> {
        let mut edges = Vec::new();
        let mut cur = target;
        while let Some((prev, e)) = reach.parent[cur] {
            edges.push(e);
            cur = prev;
        }
        edges.reverse();
        edges
    }

    fn successor_route(&self, reach: &Reach) -> Option<RunSkeleton> {
        let t = (0..self.n)
            .filter(|&t| self.a.end_states.contains(t) && reach.dist[t].is_some())
            .min_by_key(|&t| (reach.dist[t], t))?;
        let mut parts: Vec<RunSkeleton> = self
            .path_to(reach, t)
            .iter()
            .map(|e| self.edge_skeleton(e))
            .collect();
        parts.push(RunSkeleton::Finite(vec![t]));
        Some(seq(coalesce(parts)))
    }

    fn limit_route(&self, level: u32, reach: &Reach) -> Option<RunSkeleton> {
        let mut best: Option<(u32, usize, usize)> = None;
        for (ci, c) in self.candidates.iter().enumerate() {
            if c.max_level + 1 > level || !self.a.limit_end_accepting(&c.set) {
                continue;
            }
            let anchor = c
                .anchors
                .iter()
                .copied()
                .filter(|&m| reach.dist[m].is_some())
                .min_by_key(|&m| (reach.dist[m], m));
            if let Some(m) = anchor {
                let d = reach.dist[m].expect("anchor is reachable");
                let key = (d, ci, m);
                if best.is_none_or(|b| key < b) {
                    best = Some(key);
                }
            }
        }
        let (_, ci, m) = best?;
        let c = &self.candidates[ci];
        let walk = rotate_walk(&c.walk, m).expect("anchor is a rotation point");
        let cycle = coalesce(walk.iter().map(|e| self.edge_skeleton(e)).collect());
        let mut parts: Vec<RunSkeleton> = self
            .path_to(reach, m)
            .iter()
            .map(|e| self.edge_skeleton(e))
            .collect();
        parts.push(RunSkeleton::LimitStep {
            prefix: Vec::new(),
            cycle,
            target: None,
        });
        Some(seq(coalesce(parts)))
    }

    fn edge_skeleton(&self, e: &Edge) -> RunSkeleton {
        match e.kind {
            EdgeKind::Step { .. } => RunSkeleton::Finite(vec![e.src]),
            EdgeKind::Fact { id } => {
                let fact = &self.facts[id];
                let walk = rotate_walk(&fact.walk, e.src)
                    .expect("fact entered at one of its rotation points");
                let cycle = coalesce(walk.iter().map(|w| self.edge_skeleton(w)).collect());
                RunSkeleton::LimitStep {
                    prefix: Vec::new(),
                    cycle,
                    target: Some(fact.tgt),
                }
            }
        }
    }

    /// Strongly connected components over the given adjacency, using an
    /// iterative Tarjan so deep graphs cannot overflow the stack.
    fn tarjan_sccs(&self, adj: &[Vec<Edge>]) -> Vec<Vec<usize>> {
        #[derive(Clone)]
        struct NodeState {
            index: u32,
            lowlink: u32,
            on_stack: bool,
        }
        const UNVISITED: u32 = u32::MAX;
        let n = self.n;
        let mut st = vec![
            NodeState {
                index: UNVISITED,
                lowlink: 0,
                on_stack: false
            };
            n
        ];
        let mut counter = 0u32;
        let mut stack: Vec<usize> = Vec::new();
        let mut sccs: Vec<Vec<usize>> = Vec::new();

        for root in 0..n {
            if st[root].index != UNVISITED {
                continue;
            }
            // Explicit DFS frames: (node, out-edge targets, next child).
            let mut frames: Vec<(usize, Vec<usize>, usize)> = Vec::new();
            let targets = adj[root].iter().map(|e| self.edge_tgt(e)).collect();
            st[root].index = counter;
            st[root].lowlink = counter;
            counter += 1;
            st[root].on_stack = true;
            stack.push(root);
            frames.push((root, targets, 0));

            while let Some(frame) = frames.last_mut() {
                let v = frame.0;
                let child = if frame.2 < frame.1.len() {
                    let w = frame.1[frame.2];
                    frame.2 += 1;
                    Some(w)
                } else {
                    None
                };
                if let Some(w) = child {
                    if st[w].index == UNVISITED {
                        let w_targets = adj[w].iter().map(|e| self.edge_tgt(e)).collect();
                        st[w].index = counter;
                        st[w].lowlink = counter;
                        counter += 1;
                        st[w].on_stack = true;
                        stack.push(w);
                        frames.push((w, w_targets, 0));
                    } else if st[w].on_stack {
                        st[v].lowlink = st[v].lowlink.min(st[w].index);
                    }
                } else {
                    frames.pop();
                    if let Some(parent_frame) = frames.last() {
                        let low = st[v].lowlink;
                        let parent = parent_frame.0;
                        st[parent].lowlink = st[parent].lowlink.min(low);
                    }
                    if st[v].lowlink == st[v].index {
                        let mut scc = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack underflow");
                            st[w].on_stack = false;
                            scc.push(w);
                            if w == v {
                                break;
                            }
                        }
                        scc.sort_unstable();
                        sccs.push(scc);
                    }
                }
            }
        }
        sccs.sort_by_key(|scc| scc[0]);
        sccs
    }
}

/// Rotates a closed walk so it starts at `anchor`; `None` if `anchor` is
/// not one of the walk's edge sources.
fn rotate_walk(walk: &[Edge], anchor: usize) -> Option<Vec<Edge>> {
    let at = walk.iter().position(|e| e.src == anchor)?;
    let mut out = Vec::with_capacity(walk.len());
    out.extend_from_slice(&walk[at..]);
    out.extend_from_slice(&walk[..at]);
    Some(out)
}

/// Merges adjacent finite runs so skeletons stay readable.
fn coalesce(parts: Vec<RunSkeleton>) -> Vec<RunSkeleton> {
    let mut out: Vec<RunSkeleton> = Vec::with_capacity(parts.len());
    for part in parts {
        match (out.last_mut(), part) {
            (Some(RunSkeleton::Finite(acc)), RunSkeleton::Finite(more)) => {
                acc.extend(more);
            }
            (_, other) => out.push(other),
        }
    }
    out
}

fn seq(mut parts: Vec<RunSkeleton>) -> RunSkeleton {
    if parts.len() == 1 {
        parts.pop().expect("one element")
    } else {
        RunSkeleton::Seq(parts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval;
    use crate::ordinal::Ordinal;

    fn parse(s: &str) -> Formula {
        Formula::parse(s).expect("valid formula")
    }

    fn build(s: &str) -> OrdinalAutomaton {
        OrdinalAutomaton::build(&parse(s)).expect("buildable formula")
    }

    /// The unique state satisfying all given formulas.
    fn state_where(a: &OrdinalAutomaton, members: &[&str]) -> usize {
        let needles: Vec<Formula> = members.iter().map(|m| parse(m)).collect();
        let hits: Vec<usize> = (0..a.state_count())
            .filter(|&i| {
                needles
                    .iter()
                    .all(|f| a.closure().truth_in(&a.states()[i], f))
            })
            .collect();
        assert_eq!(hits.len(), 1, "state description must be unique");
        hits[0]
    }

    fn set_of(a: &OrdinalAutomaton, states: &[usize]) -> StateSet {
        let mut s = StateSet::new(a.state_count());
        for &i in states {
            s.insert(i);
        }
        s
    }

    #[test]
    fn build_examples() {
        let a = build("p");
        assert_eq!(a.state_count(), 2);
        assert_eq!(a.initial(), &[1]);

        let a = build("p & !p");
        assert!(a.initial().is_empty());

        let a = build("p U q");
        assert_eq!(a.state_count(), 8);
        assert_eq!(a.initial().len(), 4);
    }

    #[test]
    fn build_refuses_oversized_closures() {
        let phi = parse("G (p1 & p2 & p3 & p4)");
        let err = OrdinalAutomaton::build_with(
            &phi,
            BuildOptions {
                max_states: 8,
                fault: FaultInjection::None,
            },
        )
        .unwrap_err();
        assert!(matches!(err, BuildError::TooManyStates { .. }));
    }

    #[test]
    fn state_count_within_exponential_bound() {
        for f in ["p", "p U q", "G p", "F (p & q)", "G F p & F G !p"] {
            let a = build(f);
            let pairs = a.closure().pair_count() as u32;
            assert!(
                (a.state_count() as u64) <= 2u64.pow(pairs),
                "state bound violated for {f}"
            );
        }
    }

    #[test]
    fn succ_rule_examples() {
        let a = build("p U q");
        let s = state_where(&a, &["p U q", "p", "!q"]);
        let fulfilled = state_where(&a, &["q", "!p", "!(p U q)"]);
        assert!(a.succ_allowed(s, fulfilled));
        let dead = state_where(&a, &["!q", "!p", "!(p U q)"]);
        assert!(!a.succ_allowed(s, dead));
    }

    #[test]
    fn always_state_self_loops() {
        let a = build("G p");
        // The state asserting the G p pattern: p holds and the eventuality
        // of !p is denied.
        let g = a.initial()[0];
        assert!(a.succ_allowed(g, g));
        assert_eq!(a.initial().len(), 1);
    }

    #[test]
    fn end_rule_examples() {
        let a = build("p U q");
        assert!(a.end_consistent(state_where(&a, &["p", "!q", "!(p U q)"])));
        assert!(!a.end_consistent(state_where(&a, &["p", "!q", "p U q"])));

        let a = build("X T");
        let with_x = state_where(&a, &["X T"]);
        assert!(!a.end_consistent(with_x));
    }

    #[test]
    fn limit_rule_examples() {
        let a = build("p U q");
        let pending = state_where(&a, &["p", "!q", "p U q"]);
        let fulfilling = state_where(&a, &["q", "!p", "!(p U q)"]);
        let dead = state_where(&a, &["!q", "!p", "!(p U q)"]);
        let calm = state_where(&a, &["p", "!q", "!(p U q)"]);

        // Pending through the limit with no fulfillment below: only a
        // fulfilling or threading continuation is coherent.
        let s = set_of(&a, &[pending]);
        assert!(a.limit_allowed(&s, fulfilling));
        assert!(a.limit_allowed(&s, pending));
        assert!(!a.limit_allowed(&s, dead));
        assert!(!a.limit_allowed(&s, calm));

        // The until claimed false below the limit while its left side holds
        // throughout: a fulfilling continuation would force it true, so only
        // non-forcing continuations are coherent.
        let cs = set_of(&a, &[calm]);
        assert!(!a.limit_allowed(&cs, fulfilling));
        assert!(!a.limit_allowed(&cs, pending));
        assert!(a.limit_allowed(&cs, dead));
    }

    #[test]
    fn limit_rule_agrees_with_the_evaluator_on_self_loops() {
        let phi = parse("p U q");
        let a = build("p U q");
        for claimed in [true, false] {
            let membership = if claimed { "p U q" } else { "!(p U q)" };
            let looped = state_where(&a, &["p", "!q", membership]);
            assert!(a.succ_allowed(looped, looped));
            let s = set_of(&a, &[looped]);
            let power = Word::omega(Word::single(a.letter(looped).clone()));
            for t in 0..a.state_count() {
                if !a.end_consistent(t) {
                    continue;
                }
                let continued =
                    Word::cat(vec![power.clone(), Word::single(a.letter(t).clone())]);
                // An end-consistent continuation is admitted exactly when
                // the assembled word's truth value matches the claim made
                // everywhere below the limit.
                assert_eq!(
                    a.limit_allowed(&s, t),
                    eval(&phi, &continued) == claimed,
                    "limit rule / evaluator mismatch (claimed={claimed}, t={t})"
                );
            }
        }
    }

    #[test]
    fn limit_end_examples() {
        let a = build("G F p");
        // p recurs and the eventuality is claimed fulfilled by it: every
        // cofinally pending until is cofinally fulfilled.
        let recurring = state_where(&a, &["p", "T U p", "G F p"]);
        assert!(a.limit_end_accepting(&set_of(&a, &[recurring])));
        // The eventuality stays pending but p never holds: rejected.
        let starving = state_where(&a, &["!p", "T U p", "G F p"]);
        assert!(!a.limit_end_accepting(&set_of(&a, &[starving])));
        // Together they are accepting again.
        assert!(a.limit_end_accepting(&set_of(&a, &[recurring, starving])));

        let b = build("p U q");
        let pending = state_where(&b, &["p", "!q", "p U q"]);
        assert!(!b.limit_end_accepting(&set_of(&b, &[pending])));
        let calm = state_where(&b, &["p", "!q", "!(p U q)"]);
        assert!(b.limit_end_accepting(&set_of(&b, &[calm])));
    }

    #[test]
    fn emptiness_finds_single_letter_witness() {
        let a = build("p");
        let report = a.emptiness(3);
        let (skeleton, level) = report.witness.expect("p is satisfiable");
        assert_eq!(level, 0);
        let word = a.extract_witness(&skeleton).unwrap();
        assert_eq!(word, Word::single(Letter::of(&["p"])));
    }

    #[test]
    fn emptiness_rejects_contradictions() {
        let a = build("p & !p");
        assert!(a.emptiness(3).witness.is_none());
    }

    #[test]
    fn emptiness_needs_level_one_for_endless_time() {
        let a = build("G X T");
        let report = a.emptiness(3);
        let (skeleton, level) = report.witness.expect("G X T has an ω-word model");
        assert_eq!(level, 1);
        let word = a.extract_witness(&skeleton).unwrap();
        assert_eq!(word.length(), Ordinal::omega());
        assert!(eval(&parse("G X T"), &word));
        // No witness exists below ω.
        assert!(a.emptiness(0).witness.is_none());
    }

    #[test]
    fn emptiness_witnesses_satisfy_their_formulas() {
        for f in [
            "p",
            "p U q",
            "G p",
            "F (p & q)",
            "G F p",
            "p U (q & !p)",
            "X X p",
            "G (p -> X p)",
            "F p & F !p",
        ] {
            let phi = parse(f);
            let a = OrdinalAutomaton::build(&phi).unwrap();
            let report = a.emptiness(3);
            let (skeleton, _) = report
                .witness
                .unwrap_or_else(|| panic!("{f} should be satisfiable"));
            let word = a.extract_witness(&skeleton).unwrap();
            assert!(eval(&phi, &word), "witness for {f} fails evaluation: {word}");
        }
    }

    #[test]
    fn injected_fault_changes_limit_transitions() {
        let phi = parse("p U q");
        let healthy = OrdinalAutomaton::build(&phi).unwrap();
        let faulty = OrdinalAutomaton::build_with(
            &phi,
            BuildOptions {
                fault: FaultInjection::FlipLimitConditionA,
                ..BuildOptions::default()
            },
        )
        .unwrap();
        let pending = state_where(&healthy, &["p", "!q", "p U q"]);
        let s = set_of(&healthy, &[pending]);
        let mut flipped = 0;
        for t in 0..healthy.state_count() {
            if healthy.limit_allowed(&s, t) != faulty.limit_allowed(&s, t) {
                flipped += 1;
            }
        }
        assert!(flipped > 0, "the fault must be observable");
    }

    #[test]
    fn dot_output_is_deterministic_and_marked() {
        let a = build("p");
        let dot = a.to_dot();
        assert_eq!(dot, a.to_dot());
        assert!(dot.contains("peripheries=2"));
        assert!(dot.contains("style=bold"));
        assert!(dot.starts_with("digraph automaton {"));

        let empty = build("p & !p");
        assert!(empty.to_dot().contains("// initial states: none"));
    }

    #[test]
    fn skeleton_levels_match_word_degrees() {
        for f in ["p", "G X T", "G F p", "p U q"] {
            let a = build(f);
            if let Some((skeleton, level)) = a.emptiness(3).witness {
                let word = a.extract_witness(&skeleton).unwrap();
                assert_eq!(level, word.length().degree(), "level mismatch for {f}");
                assert_eq!(level, skeleton.level());
            }
        }
    }

    #[test]
    fn malformed_skeletons_are_rejected() {
        let a = build("p");
        assert!(a.extract_witness(&RunSkeleton::Finite(vec![])).is_err());
        assert!(a.extract_witness(&RunSkeleton::Finite(vec![99])).is_err());
        assert!(a
            .extract_witness(&RunSkeleton::LimitStep {
                prefix: vec![],
                cycle: vec![],
                target: None,
            })
            .is_err());
    }
}
