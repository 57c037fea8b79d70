//! Traces of observations, their acceptance probabilities, and a bounded
//! search for the trace distance.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::dist::{fmt_rational, Dist, Rational};
use crate::semantics::Evaluator;
use crate::syntax::{self, is_affine, Kind, SyntaxError, Term, TypingContext};
use crate::templates::TENSOR_VARS;

/// One observation: pass a closed value as argument, or split a pair and
/// continue with an open body over `x, y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TraceAction {
    App(Term),
    Tensor(Term),
}

impl fmt::Display for TraceAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceAction::App(v) => write!(f, "app({v})"),
            TraceAction::Tensor(l) => write!(f, "tensor({l})"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Trace(Vec<TraceAction>);

impl Trace {
    pub fn new(actions: Vec<TraceAction>) -> Self {
        Trace(actions)
    }

    pub fn empty() -> Self {
        Trace(Vec::new())
    }

    pub fn actions(&self) -> &[TraceAction] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, a: TraceAction) {
        self.0.push(a);
    }

    pub fn extended(&self, a: TraceAction) -> Trace {
        let mut t = self.clone();
        t.push(a);
        t
    }

    pub fn has_tensor(&self) -> bool {
        self.0.iter().any(|a| matches!(a, TraceAction::Tensor(_)))
    }
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "eps");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceError {
    #[error("malformed action `{0}`: expected app(<term>) or tensor(<term>)")]
    Malformed(String),
    #[error("in action `{action}`: {source}")]
    Term {
        action: String,
        source: SyntaxError,
    },
    #[error("app argument {0} must be a closed affine value")]
    BadArgument(Term),
    #[error("tensor body {0} must be affine with free variables among x, y")]
    BadTensorBody(Term),
}

/// Split on `;` outside parentheses and angle brackets.
pub(crate) fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' | '<' | '⟨' => depth += 1,
            ')' | '>' | '⟩' => depth -= 1,
            ';' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// `(\x. x) (+) omega` contains `(+)`, which is not a bracket; keep it from
/// unbalancing the depth count.
fn mask_choice(s: &str) -> String {
    s.replace("(+)", "#+#")
}

fn unwrap_call<'a>(s: &'a str, head: &str) -> Option<&'a str> {
    let rest = s.strip_prefix(head)?.trim_start();
    let inner = rest.strip_prefix('(')?.strip_suffix(')')?;
    Some(inner)
}

impl TraceAction {
    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let s = text.trim();
        let parse_term = |inner: &str| {
            syntax::parse(inner).map_err(|source| TraceError::Term {
                action: s.to_string(),
                source,
            })
        };
        if let Some(inner) = unwrap_call(s, "app") {
            let v = parse_term(inner)?;
            if !v.is_value() || !syntax::is_program(&v) {
                return Err(TraceError::BadArgument(v));
            }
            Ok(TraceAction::App(v))
        } else if let Some(inner) = unwrap_call(s, "tensor") {
            let l = parse_term(inner)?;
            let ctx = TypingContext::of([TENSOR_VARS.0, TENSOR_VARS.1]);
            if !is_affine(&ctx, &l) {
                return Err(TraceError::BadTensorBody(l));
            }
            Ok(TraceAction::Tensor(l))
        } else {
            Err(TraceError::Malformed(s.to_string()))
        }
    }
}

impl Trace {
    /// Parse `eps` or `;`-separated actions.
    pub fn parse(text: &str) -> Result<Self, TraceError> {
        let s = text.trim();
        if s.is_empty() || s == "eps" || s == "ε" {
            return Ok(Trace::empty());
        }
        let masked = mask_choice(s);
        let mut actions = Vec::new();
        let mut offset = 0;
        for part in split_top_level(&masked) {
            let original = &s[offset..offset + part.len()];
            offset += part.len() + 1;
            actions.push(TraceAction::parse(original)?);
        }
        Ok(Trace(actions))
    }
}

/// `Pr(m, s)` by direct recursion on the trace.
pub fn trace_accept(m: &Term, s: &Trace) -> Rational {
    accept_from(Evaluator::shared(), m, s.actions())
}

fn accept_from(ev: &Evaluator, m: &Term, s: &[TraceAction]) -> Rational {
    if !m.is_value() {
        let mut total = Rational::zero();
        for (v, p) in ev.eval(m).iter() {
            total += p * accept_from(ev, v, s);
        }
        return total;
    }
    let Some((a, rest)) = s.split_first() else {
        return Rational::one();
    };
    match (m.kind(), a) {
        (Kind::Abs(x, body), TraceAction::App(v)) => accept_from(ev, &body.substitute(x, v), rest),
        (Kind::Pair(l, r), TraceAction::Tensor(body)) => {
            let rd = ev.eval(r);
            let mut total = Rational::zero();
            for (lv, p) in ev.eval(l).iter() {
                for (rv, q) in rd.iter() {
                    let next = body
                        .substitute(TENSOR_VARS.0, lv)
                        .substitute(TENSOR_VARS.1, rv);
                    total += p * q * accept_from(ev, &next, rest);
                }
            }
            total
        }
        _ => Rational::zero(),
    }
}

/// Normalize by silent evaluation steps: `Σ d(M)·⟦M⟧`.
pub fn tau_normalize(ev: &Evaluator, d: &Dist<Term>) -> Dist<Term> {
    d.bind(|m| ev.eval(m))
}

/// The labelled step of the distribution LTS on a value distribution.
/// Values where the action is undefined drop their mass.
pub fn lts_action(d: &Dist<Term>, a: &TraceAction) -> Dist<Term> {
    d.bind(|v| match (v.kind(), a) {
        (Kind::Abs(x, body), TraceAction::App(arg)) => Dist::dirac(body.substitute(x, arg)),
        (Kind::Pair(l, r), TraceAction::Tensor(body)) => Dist::dirac(Term::let_pair(
            TENSOR_VARS.0,
            TENSOR_VARS.1,
            Term::pair(l.clone(), r.clone()),
            body.clone(),
        )),
        _ => Dist::empty(),
    })
}

/// `Pr(s)(d)` in the distribution LTS: the weight reached after playing `s`,
/// with silent normalization before each action and at the end.
pub fn lts_trace_accept(d: &Dist<Term>, s: &Trace) -> Rational {
    let ev = Evaluator::shared();
    let mut cur = tau_normalize(ev, d);
    for a in s.actions() {
        if cur.is_empty() {
            return Rational::zero();
        }
        cur = tau_normalize(ev, &lts_action(&cur, a));
    }
    cur.weight()
}

/// The observation alphabet for a given configuration: `app V` for every
/// universe value, then `tensor L` for every template body.
pub fn action_alphabet(universe: &[Term], tensor_bodies: &[Term]) -> Vec<TraceAction> {
    universe
        .iter()
        .cloned()
        .map(TraceAction::App)
        .chain(tensor_bodies.iter().cloned().map(TraceAction::Tensor))
        .collect()
}

/// Every trace of length at most `max_len` over the alphabet, in
/// length-lexicographic order.
pub fn enumerate_traces(
    universe: &[Term],
    tensor_bodies: &[Term],
    max_len: usize,
) -> impl Iterator<Item = Trace> {
    let alphabet = action_alphabet(universe, tensor_bodies);
    let mut level = vec![Trace::empty()];
    let mut len = 0;
    std::iter::from_fn(move || {
        if len > max_len {
            return None;
        }
        let out = std::mem::take(&mut level);
        len += 1;
        if len <= max_len {
            level = out
                .iter()
                .flat_map(|t| alphabet.iter().map(move |a| t.extended(a.clone())))
                .collect();
        }
        Some(out)
    })
    .flatten()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDistance {
    pub distance: Rational,
    pub witness: Trace,
    pub traces_examined: usize,
}

impl TraceDistance {
    pub fn to_json(&self) -> Json {
        json!({
            "distance": fmt_rational(&self.distance),
            "witness": self.witness.to_string(),
            "mode": "lower-bound",
        })
    }
}

/// Lower bound on the trace distance: the largest `|Pr(m,s) − Pr(n,s)|`
/// over the traces of [`enumerate_traces`], with the first trace (in that
/// order) attaining it.
///
/// Traces are explored level by level on the pair of value distributions
/// reached so far. A prefix whose two acceptance probabilities are both at
/// most the current best is not extended, since acceptance only decreases
/// along extensions.
pub fn trace_distance_lb(
    m: &Term,
    n: &Term,
    universe: &[Term],
    tensor_bodies: &[Term],
    max_len: usize,
) -> TraceDistance {
    let ev = Evaluator::shared();
    let alphabet = action_alphabet(universe, tensor_bodies);
    let start = (
        tau_normalize(ev, &Dist::dirac(m.clone())),
        tau_normalize(ev, &Dist::dirac(n.clone())),
    );
    let mut best = TraceDistance {
        distance: (start.0.weight() - start.1.weight()).abs(),
        witness: Trace::empty(),
        traces_examined: 1,
    };
    let mut level = vec![(Trace::empty(), start)];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for (trace, (dm, dn)) in &level {
            if dm.weight().max(dn.weight()) <= best.distance {
                continue;
            }
            for a in &alphabet {
                let em = tau_normalize(ev, &lts_action(dm, a));
                let en = tau_normalize(ev, &lts_action(dn, a));
                let t = trace.extended(a.clone());
                best.traces_examined += 1;
                let gap = (em.weight() - en.weight()).abs();
                if gap > best.distance {
                    best.distance = gap;
                    best.witness = t.clone();
                }
                next.push((t, (em, en)));
            }
        }
        level = next;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{half, rat};
    use crate::syntax::parse;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    fn app_i(n: usize) -> Trace {
        Trace::new(vec![TraceAction::App(Term::identity()); n])
    }

    #[test]
    fn acceptance_examples() {
        assert_eq!(trace_accept(&p("I"), &Trace::empty()), Rational::one());
        assert_eq!(trace_accept(&p("omega"), &Trace::empty()), Rational::zero());
        let m = p("I (+) omega");
        for k in 0..4 {
            assert_eq!(trace_accept(&m, &app_i(k)), half());
        }
    }

    #[test]
    fn mismatched_action_is_zero() {
        let t = Trace::new(vec![TraceAction::Tensor(p("x y"))]);
        assert_eq!(trace_accept(&p("I"), &t), Rational::zero());
        assert_eq!(trace_accept(&p("<I, I>"), &app_i(1)), Rational::zero());
    }

    #[test]
    fn tensor_action() {
        let m = p("<\\z. (I (+) omega), \\z. (I (+) omega)>");
        let body = p("x I (y I)");
        let t = Trace::new(vec![TraceAction::Tensor(body)]);
        assert_eq!(trace_accept(&m, &t), rat(1, 4));
        assert_eq!(lts_trace_accept(&Dist::dirac(m), &t), rat(1, 4));
    }

    #[test]
    fn lts_examples() {
        assert_eq!(
            lts_trace_accept(&Dist::dirac(p("I")), &Trace::empty()),
            Rational::one()
        );
        assert_eq!(
            lts_trace_accept(&Dist::dirac(p("I (+) omega")), &Trace::empty()),
            half()
        );
    }

    #[test]
    fn enumeration_counts() {
        let u = [Term::identity()];
        assert_eq!(enumerate_traces(&u, &[], 0).collect::<Vec<_>>(), vec![Trace::empty()]);
        assert_eq!(
            enumerate_traces(&u, &[], 1).collect::<Vec<_>>(),
            vec![Trace::empty(), app_i(1)]
        );
        assert_eq!(enumerate_traces(&u, &[], 2).count(), 3);
        let k = p("\\a. \\b. a");
        assert_eq!(enumerate_traces(&[Term::identity(), k], &[], 2).count(), 7);
    }

    #[test]
    fn distance_examples() {
        let u = [Term::identity()];
        let r = trace_distance_lb(&p("I"), &p("omega"), &u, &[], 0);
        assert_eq!(r.distance, Rational::one());
        assert!(r.witness.is_empty());
        let r = trace_distance_lb(&p("I (+) omega"), &p("I"), &u, &[], 3);
        assert_eq!(r.distance, half());
        assert!(r.witness.is_empty());
        let m = p("\\a. \\b. a (+) b");
        let r = trace_distance_lb(&m, &m, &u, &[], 3);
        assert_eq!(r.distance, Rational::zero());
        assert!(r.witness.is_empty());
    }

    #[test]
    fn distance_finds_deeper_witness() {
        let u = [Term::identity()];
        let r = trace_distance_lb(&p("\\z. I"), &p("\\z. omega"), &u, &[], 2);
        assert_eq!(r.distance, Rational::one());
        assert_eq!(r.witness, app_i(1));
    }

    #[test]
    fn trace_syntax_round_trip() {
        let t = Trace::parse("app(\\x. x); tensor(x (y I)); app(I (+) I)");
        assert!(matches!(t, Err(TraceError::BadArgument(_))));
        let t = Trace::parse("app(\\x. x); tensor(x (y I))").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(Trace::parse(&t.to_string()).unwrap(), t);
        assert_eq!(Trace::parse("eps").unwrap(), Trace::empty());
        assert_eq!(Trace::empty().to_string(), "eps");
        assert!(matches!(Trace::parse("foo(I)"), Err(TraceError::Malformed(_))));
        assert!(matches!(
            Trace::parse("tensor(x x)"),
            Err(TraceError::BadTensorBody(_))
        ));
        let t = Trace::parse("app(\\a. a (+) omega)").unwrap();
        assert_eq!(t.len(), 1);
    }
}
