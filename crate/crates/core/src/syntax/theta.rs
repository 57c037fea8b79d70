use std::collections::HashSet;

use super::term::{Kind, Name, Term};
use crate::trace::{Trace, TraceAction};

fn fresh_name(base: &str, avoid: &HashSet<Name>) -> Name {
    if !avoid.iter().any(|n| &**n == base) {
        return base.into();
    }
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|c| !avoid.iter().any(|n| &**n == c.as_str()))
        .unwrap()
        .into()
}

/// Encode pairs into the pure calculus:
/// `<M, N>` becomes `\k. k M' N'` and `let <x, y> = M in N` becomes
/// `M' (\x. \y. N')`. Every other constructor is mapped homomorphically.
pub fn encode_theta(t: &Term) -> Term {
    match t.kind() {
        Kind::Var(_) | Kind::Omega => t.clone(),
        Kind::Abs(x, b) => Term::abs(x.clone(), encode_theta(b)),
        Kind::App(l, r) => Term::app(encode_theta(l), encode_theta(r)),
        Kind::Choice(l, r) => Term::choice(encode_theta(l), encode_theta(r)),
        Kind::Pair(l, r) => {
            let l2 = encode_theta(l);
            let r2 = encode_theta(r);
            let mut avoid = l2.all_names();
            avoid.extend(r2.all_names());
            let k = fresh_name("k", &avoid);
            Term::abs(k.clone(), Term::apps(Term::var(k), [l2, r2]))
        }
        Kind::LetPair(x, y, m, n) => Term::app(
            encode_theta(m),
            Term::abs(x.clone(), Term::abs(y.clone(), encode_theta(n))),
        ),
    }
}

/// Encode a pairs-calculus trace: `tensor(L)` becomes `app(\x. \y. L')`.
pub fn encode_theta_trace(s: &Trace) -> Trace {
    Trace::new(
        s.actions()
            .iter()
            .map(|a| match a {
                TraceAction::App(v) => TraceAction::App(encode_theta(v)),
                TraceAction::Tensor(body) => TraceAction::App(Term::abs(
                    "x",
                    Term::abs("y", encode_theta(body)),
                )),
            })
            .collect(),
    )
}
