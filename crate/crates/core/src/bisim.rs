//! A finite fragment of the labelled Markov chain over programs and
//! distinguished values, and the bisimulation metric on it as the fixpoint
//! of the lifting operator.

use std::fmt;

use indexmap::IndexSet;
use log::{debug, log_enabled, Level};
use num_traits::Zero;
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::dist::{fmt_rational, Dist, Rational};
use crate::kantorovich::{lift, PseudoMetric};
use crate::semantics::{check_program, EvalError, Evaluator};
use crate::syntax::{Kind, Term};
use crate::templates::TENSOR_VARS;

/// A state of the chain: a program, or a value in its distinguished copy.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LmcState {
    Prog(Term),
    DVal(Term),
}

impl LmcState {
    pub fn term(&self) -> &Term {
        match self {
            LmcState::Prog(t) | LmcState::DVal(t) => t,
        }
    }

    pub fn is_prog(&self) -> bool {
        matches!(self, LmcState::Prog(_))
    }
}

impl fmt::Display for LmcState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LmcState::Prog(t) => write!(f, "{t}"),
            LmcState::DVal(t) => write!(f, "^({t})"),
        }
    }
}

/// An external action on distinguished values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Label {
    App(Term),
    Tensor(Term),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::App(v) => write!(f, "app({v})"),
            Label::Tensor(l) => write!(f, "tensor({l})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BisimError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("fragment exceeds the state budget of {0}")]
    BudgetExceeded(usize),
    #[error("metric iteration did not stabilize within {0} rounds")]
    NonConvergence(usize),
}

#[derive(Debug, Clone)]
pub struct LmcConfig {
    pub universe: Vec<Term>,
    pub tensor_bodies: Vec<Term>,
    pub max_depth: usize,
    pub state_cap: usize,
    pub max_rounds: usize,
}

impl LmcConfig {
    pub fn new(universe: Vec<Term>, max_depth: usize) -> Self {
        LmcConfig {
            universe,
            tensor_bodies: Vec::new(),
            max_depth,
            state_cap: 10_000,
            max_rounds: 10_000,
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        self.universe
            .iter()
            .cloned()
            .map(Label::App)
            .chain(self.tensor_bodies.iter().cloned().map(Label::Tensor))
            .collect()
    }
}

/// States reachable from two roots within a depth budget.
///
/// Every program state carries its evaluation. A distinguished value at
/// depth below the budget carries one successor distribution per label
/// (empty when the label does not apply); deeper ones are truncated.
#[derive(Debug, Clone)]
pub struct LmcFragment {
    states: IndexSet<LmcState>,
    depth: Vec<usize>,
    labels: Vec<Label>,
    eval: Vec<Option<Dist<usize>>>,
    actions: Vec<Option<Vec<Dist<usize>>>>,
    roots: (usize, usize),
}

impl LmcFragment {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &LmcState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &LmcState) -> Option<usize> {
        self.states.get_index_of(s)
    }

    pub fn roots(&self) -> (usize, usize) {
        self.roots
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn depth(&self, i: usize) -> usize {
        self.depth[i]
    }

    pub fn eval_of(&self, i: usize) -> Option<&Dist<usize>> {
        self.eval[i].as_ref()
    }

    /// Successors of a distinguished value under label `l`, or `None` when
    /// the state is truncated or not a distinguished value.
    pub fn action_of(&self, i: usize, l: usize) -> Option<&Dist<usize>> {
        self.actions[i].as_ref().map(|a| &a[l])
    }

    pub fn is_truncated(&self, i: usize) -> bool {
        !self.states[i].is_prog() && self.actions[i].is_none()
    }

    fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let evals = self.eval[i].iter().flat_map(|d| d.support().copied());
        let acts = self.actions[i]
            .iter()
            .flat_map(|a| a.iter().flat_map(|d| d.support().copied()));
        evals.chain(acts)
    }

    /// States from which no truncated state is reachable. On these the
    /// computed metric is the exact distance of the underlying chain.
    pub fn complete_states(&self) -> Vec<usize> {
        let mut tainted: Vec<bool> = (0..self.len()).map(|i| self.is_truncated(i)).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for i in 0..self.len() {
                if !tainted[i] && self.successors(i).any(|j| tainted[j]) {
                    tainted[i] = true;
                    changed = true;
                }
            }
        }
        (0..self.len()).filter(|i| !tainted[*i]).collect()
    }

    /// Indices of program states and of distinguished values.
    pub fn kind_blocks(&self) -> (Vec<usize>, Vec<usize>) {
        (0..self.len()).partition(|i| self.states[*i].is_prog())
    }

    pub fn to_json(&self) -> Json {
        let label_names: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        let dist_json = |d: &Dist<usize>| -> Json {
            Json::Array(
                d.iter()
                    .map(|(s, p)| json!({"state": s, "p": fmt_rational(p)}))
                    .collect(),
            )
        };
        let states: Vec<Json> = (0..self.len())
            .map(|i| {
                let s = &self.states[i];
                let mut o = json!({
                    "id": i,
                    "kind": if s.is_prog() { "prog" } else { "value" },
                    "term": s.term().to_string(),
                    "depth": self.depth[i],
                });
                if let Some(e) = &self.eval[i] {
                    o["eval"] = dist_json(e);
                }
                match &self.actions[i] {
                    Some(acts) => {
                        let m: serde_json::Map<String, Json> = label_names
                            .iter()
                            .zip(acts)
                            .map(|(l, d)| (l.clone(), dist_json(d)))
                            .collect();
                        o["actions"] = Json::Object(m);
                    }
                    None if !s.is_prog() => o["truncated"] = Json::Bool(true),
                    None => {}
                }
                o
            })
            .collect();
        json!({
            "roots": [self.roots.0, self.roots.1],
            "labels": label_names,
            "states": states,
        })
    }
}

struct Builder<'a> {
    ev: &'a Evaluator,
    cap: usize,
    frag: LmcFragment,
}

impl Builder<'_> {
    fn intern(&mut self, s: LmcState, depth: usize) -> Result<(usize, bool), BisimError> {
        if let Some(i) = self.frag.states.get_index_of(&s) {
            return Ok((i, false));
        }
        if self.frag.states.len() >= self.cap {
            return Err(BisimError::BudgetExceeded(self.cap));
        }
        let (i, _) = self.frag.states.insert_full(s);
        self.frag.depth.push(depth);
        self.frag.eval.push(None);
        self.frag.actions.push(None);
        Ok((i, true))
    }
}

fn successor(v: &Term, label: &Label) -> Option<Term> {
    match (v.kind(), label) {
        (Kind::Abs(x, body), Label::App(arg)) => Some(body.substitute(x, arg)),
        (Kind::Pair(l, r), Label::Tensor(body)) => Some(Term::let_pair(
            TENSOR_VARS.0,
            TENSOR_VARS.1,
            Term::pair(l.clone(), r.clone()),
            body.clone(),
        )),
        _ => None,
    }
}

/// Explore from `m` and `n` level by level: evaluate the programs of the
/// current level, then play every label on the new distinguished values
/// whose depth is below the budget.
pub fn build_lmc(m: &Term, n: &Term, config: &LmcConfig) -> Result<LmcFragment, BisimError> {
    check_program(m)?;
    check_program(n)?;
    let labels = config.labels();
    let mut b = Builder {
        ev: Evaluator::shared(),
        cap: config.state_cap,
        frag: LmcFragment {
            states: IndexSet::new(),
            depth: Vec::new(),
            labels: labels.clone(),
            eval: Vec::new(),
            actions: Vec::new(),
            roots: (0, 0),
        },
    };
    let (rm, _) = b.intern(LmcState::Prog(m.clone()), 0)?;
    let (rn, _) = b.intern(LmcState::Prog(n.clone()), 0)?;
    b.frag.roots = (rm, rn);
    let mut progs = vec![rm];
    if rn != rm {
        progs.push(rn);
    }
    let mut level = 0;
    while !progs.is_empty() {
        let mut values = Vec::new();
        for &p in &progs {
            let term = b.frag.states[p].term().clone();
            let mut d = Dist::empty();
            for (v, w) in b.ev.eval(&term).iter() {
                let (i, fresh) = b.intern(LmcState::DVal(v.clone()), level)?;
                if fresh {
                    values.push(i);
                }
                d.add(i, w.clone());
            }
            b.frag.eval[p] = Some(d);
        }
        let mut next = Vec::new();
        if level < config.max_depth {
            for &v in &values {
                let term = b.frag.states[v].term().clone();
                let mut per_label = Vec::with_capacity(labels.len());
                for l in &labels {
                    let mut d = Dist::empty();
                    if let Some(t) = successor(&term, l) {
                        let (i, fresh) = b.intern(LmcState::Prog(t), level + 1)?;
                        if fresh {
                            next.push(i);
                        }
                        d = Dist::dirac(i);
                    }
                    per_label.push(d);
                }
                b.frag.actions[v] = Some(per_label);
            }
        }
        progs = next;
        level += 1;
    }
    debug!(
        "fragment with {} states, depth {}",
        b.frag.len(),
        config.max_depth
    );
    Ok(b.frag)
}

fn f_cell(frag: &LmcFragment, mu: &PseudoMetric, i: usize, j: usize) -> Rational {
    match (&frag.states[i], &frag.states[j]) {
        (LmcState::Prog(_), LmcState::Prog(_)) => {
            lift(mu, frag.eval[i].as_ref().unwrap(), frag.eval[j].as_ref().unwrap())
        }
        (LmcState::DVal(_), LmcState::DVal(_)) => match (&frag.actions[i], &frag.actions[j]) {
            (Some(a), Some(b)) => a
                .iter()
                .zip(b)
                .map(|(d, e)| lift(mu, d, e))
                .max()
                .unwrap_or_else(Rational::zero),
            _ => Rational::zero(),
        },
        _ => Rational::zero(),
    }
}

/// One application of the operator: program pairs compare their
/// evaluations, distinguished values take the worst label, and mixed pairs
/// are at distance zero.
pub fn apply_f(frag: &LmcFragment, mu: &PseudoMetric) -> PseudoMetric {
    let n = frag.len();
    let mut out = PseudoMetric::zero(n);
    for i in 0..n {
        for j in 0..i {
            out.set(i, j, f_cell(frag, mu, i, j));
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct FixpointRun {
    pub metric: PseudoMetric,
    pub rounds: usize,
}

/// Iterate [`apply_f`] from the zero metric until it is exactly stable.
pub fn bisim_metric(frag: &LmcFragment, max_rounds: usize) -> Result<FixpointRun, BisimError> {
    let mut mu = PseudoMetric::zero(frag.len());
    for round in 1..=max_rounds {
        let next = apply_f(frag, &mu);
        if log_enabled!(Level::Debug) {
            debug!("metric after round {round}:\n{}", render_matrix(&next));
        }
        if next == mu {
            return Ok(FixpointRun { metric: mu, rounds: round });
        }
        mu = next;
    }
    Err(BisimError::NonConvergence(max_rounds))
}

fn render_matrix(mu: &PseudoMetric) -> String {
    mu.rows()
        .map(|r| r.iter().map(fmt_rational).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone)]
pub struct BisimDistance {
    pub distance: Rational,
    pub fragment: LmcFragment,
    pub metric: PseudoMetric,
    pub rounds: usize,
}

impl BisimDistance {
    pub fn to_json(&self, config: &LmcConfig) -> Json {
        json!({
            "distance": fmt_rational(&self.distance),
            "mode": "exact-fixpoint",
            "universe": config.universe.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
            "depth": config.max_depth,
            "states": self.fragment.len(),
            "rounds": self.rounds,
        })
    }
}

/// The bisimulation distance between two programs on the fragment they
/// generate. Restricting labels to the universe and depth can only lower it.
pub fn bisim_distance(m: &Term, n: &Term, config: &LmcConfig) -> Result<BisimDistance, BisimError> {
    let fragment = build_lmc(m, n, config)?;
    let run = bisim_metric(&fragment, config.max_rounds)?;
    let (a, b) = fragment.roots();
    Ok(BisimDistance {
        distance: run.metric.get(a, b).clone(),
        metric: run.metric,
        rounds: run.rounds,
        fragment,
    })
}
