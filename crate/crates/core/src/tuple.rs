//! The tuple chain: states are tuples of closed values, actions split a
//! pair component or apply a function component to an argument built from
//! other components.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::rc::Rc;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::dist::{fmt_rational, half, rat, Dist, Rational};
use crate::semantics::Evaluator;
use crate::syntax::{self, biased_choice, is_affine, Kind, SyntaxError, Term, TypingContext};
use crate::templates::{component_var, OpenValueTemplate};
use crate::trace::split_top_level;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TupleState(Vec<Term>);

impl TupleState {
    pub fn new(components: Vec<Term>) -> Self {
        debug_assert!(components.iter().all(|v| v.is_value() && v.is_closed()));
        TupleState(components)
    }

    pub fn singleton(v: Term) -> Self {
        TupleState::new(vec![v])
    }

    pub fn components(&self) -> &[Term] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for TupleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "]")
    }
}

/// Indices are 1-based. `gamma` is sorted and never contains `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TupleAction {
    Cut(usize),
    Appl {
        i: usize,
        gamma: Vec<usize>,
        body: Term,
    },
}

impl fmt::Display for TupleAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TupleAction::Cut(i) => write!(f, "cut({i})"),
            TupleAction::Appl { i, gamma, body } => {
                let g: Vec<String> = gamma.iter().map(|j| component_var(*j).to_string()).collect();
                write!(f, "appl({i};{};{body})", g.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TupleError {
    #[error("malformed tuple action `{0}`")]
    Malformed(String),
    #[error("in tuple action `{action}`: {source}")]
    Term {
        action: String,
        source: SyntaxError,
    },
    #[error("invalid open value: {0}")]
    BadOpenValue(String),
    #[error("action {action} does not apply to {state}: {reason}")]
    InvalidAction {
        action: String,
        state: String,
        reason: String,
    },
}

fn parse_index(s: &str, whole: &str) -> Result<usize, TupleError> {
    let s = s.trim();
    let j = s
        .strip_prefix("x_")
        .unwrap_or(s)
        .parse::<usize>()
        .map_err(|_| TupleError::Malformed(whole.to_string()))?;
    if j == 0 {
        return Err(TupleError::Malformed(whole.to_string()));
    }
    Ok(j)
}

impl TupleAction {
    /// `appl(i; Γ; C)` after checking that `(Γ, C)` is an open value.
    pub fn appl(i: usize, mut gamma: Vec<usize>, body: Term) -> Result<Self, TupleError> {
        gamma.sort_unstable();
        gamma.dedup();
        if i == 0 || gamma.contains(&0) {
            return Err(TupleError::BadOpenValue("indices start at 1".into()));
        }
        if gamma.contains(&i) {
            return Err(TupleError::BadOpenValue(format!(
                "context may not mention the target x_{i}"
            )));
        }
        let ctx = TypingContext::of(gamma.iter().map(|j| component_var(*j)));
        if !is_affine(&ctx, &body) {
            return Err(TupleError::BadOpenValue(format!(
                "{body} is not affine over the context"
            )));
        }
        let shape_ok = match body.kind() {
            Kind::Abs(..) => true,
            Kind::Var(x) => ctx.contains(x),
            _ => false,
        };
        if !shape_ok {
            return Err(TupleError::BadOpenValue(format!(
                "{body} is neither a context variable nor an abstraction"
            )));
        }
        Ok(TupleAction::Appl { i, gamma, body })
    }

    pub fn parse(text: &str) -> Result<Self, TupleError> {
        let s = text.trim();
        let malformed = || TupleError::Malformed(s.to_string());
        let call = |head: &str| {
            s.strip_prefix(head)
                .map(str::trim_start)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        if let Some(inner) = call("cut") {
            return Ok(TupleAction::Cut(parse_index(inner, s)?));
        }
        let inner = call("appl").ok_or_else(malformed)?;
        let masked = inner.replace("(+)", "#+#");
        let parts = split_top_level(&masked);
        if parts.len() != 3 {
            return Err(malformed());
        }
        let i = parse_index(parts[0], s)?;
        let gamma = if parts[1].trim().is_empty() {
            Vec::new()
        } else {
            parts[1]
                .split(',')
                .map(|g| parse_index(g, s))
                .collect::<Result<Vec<_>, _>>()?
        };
        let start = parts[0].len() + parts[1].len() + 2;
        let body = syntax::parse(&inner[start..]).map_err(|source| TupleError::Term {
            action: s.to_string(),
            source,
        })?;
        TupleAction::appl(i, gamma, body)
    }

    pub fn target(&self) -> usize {
        match self {
            TupleAction::Cut(i) | TupleAction::Appl { i, .. } => *i,
        }
    }
}

/// A sequence of tuple actions.
pub type TupleTrace = Vec<TupleAction>;

pub fn fmt_tuple_trace(s: &[TupleAction]) -> String {
    if s.is_empty() {
        return "eps".into();
    }
    s.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";")
}

pub fn parse_tuple_trace(text: &str) -> Result<TupleTrace, TupleError> {
    let s = text.trim();
    if s.is_empty() || s == "eps" || s == "ε" {
        return Ok(Vec::new());
    }
    let masked = s.replace("(+)", "#+#");
    let mut out = Vec::new();
    let mut offset = 0;
    for part in split_top_level(&masked) {
        out.push(TupleAction::parse(&s[offset..offset + part.len()])?);
        offset += part.len() + 1;
    }
    Ok(out)
}

fn invalid(a: &TupleAction, k: &TupleState, reason: impl Into<String>) -> TupleError {
    TupleError::InvalidAction {
        action: a.to_string(),
        state: k.to_string(),
        reason: reason.into(),
    }
}

/// One transition of the tuple chain.
///
/// `cut(i)` on a pair `<N, L>` replaces it by the values of `N` and `L`.
/// `appl(i; Γ; C)` on `\y. N` evaluates `N{C{s_j/x_j}/y}`; the components
/// named in `Γ` are consumed and the result takes the place of component `i`
/// among the survivors, which keep their relative order.
pub fn tuple_step(k: &TupleState, a: &TupleAction) -> Result<Dist<TupleState>, TupleError> {
    tuple_step_with(Evaluator::shared(), k, a)
}

fn tuple_step_with(
    ev: &Evaluator,
    k: &TupleState,
    a: &TupleAction,
) -> Result<Dist<TupleState>, TupleError> {
    let n = k.len();
    let i = a.target();
    if i == 0 || i > n {
        return Err(invalid(a, k, format!("index {i} out of range 1..={n}")));
    }
    let target = &k.0[i - 1];
    match a {
        TupleAction::Cut(_) => {
            let Kind::Pair(l, r) = target.kind() else {
                return Err(invalid(a, k, "component is not a pair"));
            };
            let rd = ev.eval(r);
            let mut out = Dist::empty();
            for (lv, p) in ev.eval(l).iter() {
                for (rv, q) in rd.iter() {
                    let mut comps = Vec::with_capacity(n + 1);
                    comps.extend_from_slice(&k.0[..i - 1]);
                    comps.push(lv.clone());
                    comps.push(rv.clone());
                    comps.extend_from_slice(&k.0[i..]);
                    out.add(TupleState(comps), p * q);
                }
            }
            Ok(out)
        }
        TupleAction::Appl { gamma, body, .. } => {
            let Kind::Abs(y, fbody) = target.kind() else {
                return Err(invalid(a, k, "component is not an abstraction"));
            };
            if let Some(j) = gamma.iter().find(|j| **j > n) {
                return Err(invalid(a, k, format!("context index {j} out of range")));
            }
            let names: Vec<_> = gamma.iter().map(|j| component_var(*j)).collect();
            let bindings: Vec<(&str, &Term)> = names
                .iter()
                .zip(gamma)
                .map(|(x, j)| (&**x, &k.0[j - 1]))
                .collect();
            let arg = body.substitute_all(&bindings);
            let result = ev.eval(&fbody.substitute(y, &arg));
            Ok(result.map(|w| {
                let comps = (1..=n)
                    .filter(|j| !gamma.contains(j))
                    .map(|j| if j == i { w.clone() } else { k.0[j - 1].clone() })
                    .collect();
                TupleState(comps)
            }))
        }
    }
}

/// Lift a step to distributions; inapplicable actions drop their mass.
pub fn tuple_step_dist(ev: &Evaluator, d: &Dist<TupleState>, a: &TupleAction) -> Dist<TupleState> {
    d.bind(|k| tuple_step_with(ev, k, a).unwrap_or_default())
}

pub fn tuple_trace_prob(k: &TupleState, s: &[TupleAction]) -> Rational {
    tuple_dist_trace_prob(&Dist::dirac(k.clone()), s)
}

pub fn tuple_dist_trace_prob(d: &Dist<TupleState>, s: &[TupleAction]) -> Rational {
    let ev = Evaluator::shared();
    let mut cur = d.clone();
    for a in s {
        if cur.is_empty() {
            return Rational::zero();
        }
        cur = tuple_step_dist(ev, &cur, a);
    }
    cur.weight()
}

/// The distribution of singleton tuples a program evaluates to.
pub fn program_tuples(m: &Term) -> Dist<TupleState> {
    Evaluator::shared().eval(m).map(|v| TupleState::singleton(v.clone()))
}

/// `Σ ⟦m⟧(V)·Pr(⟨V⟩, s)`.
pub fn program_tuple_trace_prob(m: &Term, s: &[TupleAction]) -> Rational {
    tuple_dist_trace_prob(&program_tuples(m), s)
}

/// Every action applicable in principle to tuples of length `len`: for each
/// target, `cut` first and then each template under every injective choice
/// of context indices.
pub fn enumerate_actions(len: usize, templates: &[OpenValueTemplate]) -> Vec<TupleAction> {
    let mut out = Vec::new();
    for i in 1..=len {
        out.push(TupleAction::Cut(i));
        let others: Vec<usize> = (1..=len).filter(|j| *j != i).collect();
        for t in templates {
            for targets in injections(&others, t.holes) {
                let body = t.instantiate(&targets);
                let mut gamma = targets.clone();
                gamma.sort_unstable();
                out.push(TupleAction::Appl { i, gamma, body });
            }
        }
    }
    out
}

fn injections(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (idx, &j) in pool.iter().enumerate() {
        let mut rest = pool.to_vec();
        rest.remove(idx);
        for mut tail in injections(&rest, k - 1) {
            tail.insert(0, j);
            out.push(tail);
        }
    }
    out
}

fn tuple_len(d: &Dist<TupleState>) -> usize {
    d.support().map(TupleState::len).max().unwrap_or(0)
}

/// Result of a bounded search for the tuple distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleDistance {
    pub distance: Rational,
    pub witness: TupleTrace,
    pub max_tuple_len: usize,
    pub nodes: usize,
}

impl TupleDistance {
    pub fn to_json(&self) -> Json {
        json!({
            "distance": fmt_rational(&self.distance),
            "witness": fmt_tuple_trace(&self.witness),
            "mode": "lower-bound",
            "max_tuple_len": self.max_tuple_len,
        })
    }
}

/// The actions of [`enumerate_actions`] grouped by target slot.
struct ActionTable {
    actions: Vec<TupleAction>,
    blocks: Vec<SlotBlock>,
}

/// Slot `i` owns `actions[cut..end]`, starting with its `cut`.
struct SlotBlock {
    cut: usize,
    end: usize,
    /// The first `appl` for each distinct context, in order.
    representatives: Vec<usize>,
}

impl ActionTable {
    fn new(len: usize, templates: &[OpenValueTemplate]) -> Self {
        let actions = enumerate_actions(len, templates);
        let mut blocks: Vec<SlotBlock> = Vec::with_capacity(len);
        for (idx, a) in actions.iter().enumerate() {
            match a {
                TupleAction::Cut(_) => blocks.push(SlotBlock {
                    cut: idx,
                    end: idx + 1,
                    representatives: Vec::new(),
                }),
                TupleAction::Appl { gamma, .. } => {
                    let block = blocks.last_mut().expect("every slot starts with cut");
                    block.end = idx + 1;
                    let fresh = block.representatives.iter().all(|r| match &actions[*r] {
                        TupleAction::Appl { gamma: g, .. } => g != gamma,
                        TupleAction::Cut(_) => true,
                    });
                    if fresh {
                        block.representatives.push(idx);
                    }
                }
            }
        }
        ActionTable { actions, blocks }
    }
}

struct Search<'a> {
    ev: &'a Evaluator,
    templates: &'a [OpenValueTemplate],
    actions: HashMap<usize, Rc<ActionTable>>,
    best: TupleDistance,
    visited: HashMap<(Dist<TupleState>, Dist<TupleState>), usize>,
    prefix: TupleTrace,
}

impl Search<'_> {
    fn actions_for(&mut self, len: usize) -> Rc<ActionTable> {
        let templates = self.templates;
        self.actions
            .entry(len)
            .or_insert_with(|| Rc::new(ActionTable::new(len, templates)))
            .clone()
    }

    /// Expand the distinct nonempty successor pairs of a node, in action order.
    ///
    /// When no tuple in either support has a function at slot `i` that uses
    /// its argument, every `appl` at `i` with the same context has the same
    /// outcome, so only the first such action is played.
    fn children(
        &mut self,
        dk: &Dist<TupleState>,
        dh: &Dist<TupleState>,
    ) -> Vec<(TupleAction, Dist<TupleState>, Dist<TupleState>)> {
        let len = tuple_len(dk).max(tuple_len(dh));
        let table = self.actions_for(len);
        let tuples: Vec<&TupleState> = dk.support().chain(dh.support()).collect();
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for i in 1..=len {
            let (mut abs, mut pair, mut uses_arg) = (false, false, false);
            for c in tuples.iter().filter_map(|t| t.0.get(i - 1)) {
                match c.kind() {
                    Kind::Abs(y, body) => {
                        abs = true;
                        uses_arg |= body.occurs_free(y);
                    }
                    Kind::Pair(..) => pair = true,
                    _ => {}
                }
            }
            let block = &table.blocks[i - 1];
            let cut = pair.then_some(block.cut);
            let appls: Box<dyn Iterator<Item = usize>> = match (abs, uses_arg) {
                (false, _) => Box::new(std::iter::empty()),
                (true, false) => Box::new(block.representatives.iter().copied()),
                (true, true) => Box::new(block.cut + 1..block.end),
            };
            for idx in cut.into_iter().chain(appls) {
                let a = &table.actions[idx];
                let ek = tuple_step_dist(self.ev, dk, a);
                let eh = tuple_step_dist(self.ev, dh, a);
                if ek.is_empty() && eh.is_empty() {
                    continue;
                }
                if seen.insert((ek.clone(), eh.clone())) {
                    out.push((a.clone(), ek, eh));
                }
            }
        }
        out
    }

    fn dfs(&mut self, dk: Dist<TupleState>, dh: Dist<TupleState>, remaining: usize) {
        self.best.nodes += 1;
        let (wk, wh) = (dk.weight(), dh.weight());
        self.best.max_tuple_len = self.best.max_tuple_len.max(tuple_len(&dk)).max(tuple_len(&dh));
        let gap = (&wk - &wh).abs();
        if gap > self.best.distance {
            self.best.distance = gap;
            self.best.witness = self.prefix.clone();
        }
        if remaining == 0 || wk.max(wh) <= self.best.distance {
            return;
        }
        let key = (dk, dh);
        if self.visited.get(&key).is_some_and(|r| *r >= remaining) {
            return;
        }
        self.visited.insert(key.clone(), remaining);
        let (dk, dh) = key;
        for (a, ek, eh) in self.children(&dk, &dh) {
            self.prefix.push(a);
            self.dfs(ek, eh, remaining - 1);
            self.prefix.pop();
        }
    }
}

/// Lower bound on the tuple distance over traces of length at most
/// `max_len` built from the templates. The witness is the first trace in
/// depth-first action order that attains the bound.
///
/// A node is not expanded when both acceptance probabilities are at most
/// the best gap so far, since probabilities only decrease along a trace.
/// Sibling actions with identical successor pairs are explored once, and
/// so are distribution pairs already explored with at least as much budget.
pub fn tuple_distance_lb(
    m: &Term,
    n: &Term,
    templates: &[OpenValueTemplate],
    max_len: usize,
) -> TupleDistance {
    let mut s = Search {
        ev: Evaluator::shared(),
        templates,
        actions: HashMap::new(),
        best: TupleDistance {
            distance: Rational::zero(),
            witness: Vec::new(),
            max_tuple_len: 1,
            nodes: 0,
        },
        visited: HashMap::new(),
        prefix: Vec::new(),
    };
    s.dfs(program_tuples(m), program_tuples(n), max_len);
    s.best
}

/// The two example pairs of the tuple chain: a pair of noisy functions and
/// a pair of clean ones.
pub fn expair() -> (Term, Term) {
    let noisy = || Term::abs("z", Term::choice(Term::identity(), Term::omega()));
    let clean = || Term::abs("z", Term::identity());
    (
        Term::pair(noisy(), noisy()),
        Term::pair(clean(), clean()),
    )
}

/// `cut(1); appl(1;;I); appl(2;;I)`.
pub fn expair_trace() -> TupleTrace {
    vec![
        TupleAction::Cut(1),
        apply_identity(1),
        apply_identity(2),
    ]
}

fn apply_identity(i: usize) -> TupleAction {
    TupleAction::Appl {
        i,
        gamma: Vec::new(),
        body: Term::identity(),
    }
}

fn lam_omega() -> Term {
    Term::abs("x", Term::omega())
}

/// `M₀ = N₀ = <\x. Ω, \x. Ω>`,
/// `M_{n+1} = <\x. Mₙ, \x. Ω>`,
/// `N_{n+1} = <\x. (Nₙ ⊕_{1/2^{n+1}} Ω), \x. (Ω ⊕_{1/2^{n+1}} I)>`.
pub fn build_mn_nn(n: u32) -> (Term, Term) {
    let mut m = Term::pair(lam_omega(), lam_omega());
    let mut nn = m.clone();
    for k in 1..=n {
        m = Term::pair(Term::abs("x", m), lam_omega());
        nn = Term::pair(
            Term::abs("x", biased_choice(nn, Term::omega(), k)),
            Term::abs("x", biased_choice(Term::omega(), Term::identity(), k)),
        );
    }
    (m, nn)
}

/// `s₀ = ε`, `s_{n+1} = cut(1); appl(1;;I); sₙ`.
pub fn build_sn(n: usize) -> TupleTrace {
    (0..n)
        .flat_map(|_| [TupleAction::Cut(1), apply_identity(1)])
        .collect()
}

/// `uₙ = Π_{1≤i≤n} (1 − 1/2^i)`.
pub fn u_seq(n: u32) -> Rational {
    (1..=n).fold(Rational::one(), |acc, i| {
        acc * (Rational::one() - Rational::new(1.into(), num_bigint::BigInt::from(2).pow(i)))
    })
}

/// A pair of tuples from the family used to bound the Mₙ/Nₙ distance:
/// `K = <Mₙ, (\x. Ω)^m>` and `H = <Nₙ, \x. (Ω ⊕_{1/2^{kᵢ}} I) ...>`.
pub fn family_pair(n: u32, ks: &[u32]) -> (TupleState, TupleState) {
    let (m, nn) = build_mn_nn(n);
    let mut k = vec![m];
    let mut h = vec![nn];
    for &ki in ks {
        k.push(lam_omega());
        h.push(Term::abs("x", biased_choice(Term::omega(), Term::identity(), ki)));
    }
    (TupleState::new(k), TupleState::new(h))
}

/// Outcome of the exhaustive partition check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionReport {
    pub nodes: usize,
    pub violation: Option<(TupleTrace, Rational, Rational)>,
}

/// Check that along every trace up to `max_len`, either `Pr(K) = 0` and
/// `Pr(H) ≤ 1/2`, or `Pr(K) = 1` and `Pr(H) ≥ bound`.
///
/// Prefixes in the first class are not extended: both probabilities can only
/// decrease, so every extension stays in it.
pub fn check_partition(
    k: &TupleState,
    h: &TupleState,
    bound: &Rational,
    templates: &[OpenValueTemplate],
    max_len: usize,
) -> PartitionReport {
    struct Walk<'a> {
        search: Search<'a>,
        bound: &'a Rational,
        report: PartitionReport,
    }
    impl Walk<'_> {
        fn go(&mut self, dk: Dist<TupleState>, dh: Dist<TupleState>, remaining: usize) {
            if self.report.violation.is_some() {
                return;
            }
            self.report.nodes += 1;
            let (wk, wh) = (dk.weight(), dh.weight());
            let low = wk.is_zero() && wh <= half();
            let high = wk.is_one() && wh >= *self.bound;
            if !low && !high {
                self.report.violation = Some((self.search.prefix.clone(), wk, wh));
                return;
            }
            if low || remaining == 0 {
                return;
            }
            let key = (dk, dh);
            if self.search.visited.get(&key).is_some_and(|r| *r >= remaining) {
                return;
            }
            self.search.visited.insert(key.clone(), remaining);
            let (dk, dh) = key;
            for (a, ek, eh) in self.search.children(&dk, &dh) {
                self.search.prefix.push(a);
                self.go(ek, eh, remaining - 1);
                self.search.prefix.pop();
            }
        }
    }
    let mut w = Walk {
        search: Search {
            ev: Evaluator::shared(),
            templates,
            actions: HashMap::new(),
            best: TupleDistance {
                distance: Rational::zero(),
                witness: Vec::new(),
                max_tuple_len: 0,
                nodes: 0,
            },
            visited: HashMap::new(),
            prefix: Vec::new(),
        },
        bound,
        report: PartitionReport {
            nodes: 0,
            violation: None,
        },
    };
    w.go(Dist::dirac(k.clone()), Dist::dirac(h.clone()), max_len);
    w.report
}

/// One row of the Mₙ/Nₙ report.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyRow {
    pub n: u32,
    pub pr_m: Rational,
    pub pr_n: Rational,
    pub u: Rational,
}

impl FamilyRow {
    pub fn compute(n: u32) -> Self {
        let (m, nn) = build_mn_nn(n);
        let s = build_sn(n as usize);
        FamilyRow {
            n,
            pr_m: program_tuple_trace_prob(&m, &s),
            pr_n: program_tuple_trace_prob(&nn, &s),
            u: u_seq(n),
        }
    }

    pub fn separation(&self) -> Rational {
        (&self.pr_m - &self.pr_n).abs()
    }

    pub fn holds(&self) -> bool {
        self.pr_m.is_one() && self.pr_n == self.u && self.separation() == Rational::one() - &self.u
    }

    pub fn to_json(&self) -> Json {
        json!({
            "n": self.n,
            "pr_m": fmt_rational(&self.pr_m),
            "pr_n": fmt_rational(&self.pr_n),
            "u": fmt_rational(&self.u),
            "one_minus_u": fmt_rational(&(Rational::one() - &self.u)),
            "holds": self.holds(),
        })
    }
}

/// `1 − 1/2^k`.
pub fn noise_factor(k: u32) -> Rational {
    Rational::one() - rat(1, 1i64 << k)
}
