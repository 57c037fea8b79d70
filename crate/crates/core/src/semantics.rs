//! Call-by-value evaluation of closed terms to value subdistributions.
//!
//! [`Evaluator::eval`] is the big-step semantics, memoized on exact syntax
//! so that the names in a result never depend on what was evaluated before. [`step_one`] and [`eval_small`] are the
//! one-step relation and its iteration on distributions; the two agree
//! exactly on every program.

use std::hash::{Hash, Hasher};
use std::sync::OnceLock;

use dashmap::DashMap;
use log::warn;
use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::dist::{half, Dist};
use crate::syntax::{check_affine, AffinityError, Kind, Name, Term, TypingContext};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("term is not closed: free variable {0}")]
    NotClosed(Name),
    #[error("term is not affine: {0}")]
    NotAffine(AffinityError),
    #[error("term {0} is already a value")]
    IsValue(Term),
}

/// Reject terms that are not programs.
pub fn check_program(m: &Term) -> Result<(), EvalError> {
    if let Some(x) = m.free_vars().into_iter().next() {
        return Err(EvalError::NotClosed(x));
    }
    check_affine(&TypingContext::empty(), m).map_err(EvalError::NotAffine)
}

/// Memo key: a term compared with its bound names.
#[derive(Clone)]
struct Exact(Term);

impl PartialEq for Exact {
    fn eq(&self, other: &Self) -> bool {
        self.0.identical(&other.0)
    }
}

impl Eq for Exact {}

impl Hash for Exact {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state);
    }
}

/// Big-step evaluator with a shared memo table.
#[derive(Default)]
pub struct Evaluator {
    memo: DashMap<Exact, Dist<Term>>,
}

impl Evaluator {
    pub fn new() -> Self {
        Self::default()
    }

    /// A process-wide evaluator; results are pure, so sharing the memo is safe.
    pub fn shared() -> &'static Evaluator {
        static SHARED: OnceLock<Evaluator> = OnceLock::new();
        SHARED.get_or_init(Evaluator::new)
    }

    pub fn memo_len(&self) -> usize {
        self.memo.len()
    }

    /// `⟦m⟧` with the program check.
    pub fn eval_checked(&self, m: &Term) -> Result<Dist<Term>, EvalError> {
        check_program(m)?;
        Ok(self.eval(m))
    }

    /// `⟦m⟧` for a closed term. Affinity is what guarantees termination.
    pub fn eval(&self, m: &Term) -> Dist<Term> {
        if m.is_value() {
            return Dist::dirac(m.clone());
        }
        let key = Exact(m.clone());
        if let Some(d) = self.memo.get(&key) {
            return d.clone();
        }
        let d = self.eval_uncached(m);
        self.memo.insert(key, d.clone());
        d
    }

    fn eval_uncached(&self, m: &Term) -> Dist<Term> {
        match m.kind() {
            Kind::Omega => Dist::empty(),
            Kind::Choice(l, r) => {
                let mut d = self.eval(l).scale(&half());
                d.add_scaled(&half(), &self.eval(r));
                d
            }
            Kind::App(f, a) => {
                let fd = self.eval(f);
                if fd.is_empty() {
                    return fd;
                }
                let ad = self.eval(a);
                let mut out = Dist::empty();
                for (fv, p) in fd.iter() {
                    let Kind::Abs(x, body) = fv.kind() else {
                        warn!("stuck application of {fv}; counted as divergence");
                        continue;
                    };
                    for (av, q) in ad.iter() {
                        out.add_scaled(&(p * q), &self.eval(&body.substitute(x, av)));
                    }
                }
                out
            }
            Kind::LetPair(x, y, scrut, body) => {
                let mut out = Dist::empty();
                for (sv, p) in self.eval(scrut).iter() {
                    let Kind::Pair(l, r) = sv.kind() else {
                        warn!("stuck let over {sv}; counted as divergence");
                        continue;
                    };
                    let rd = self.eval(r);
                    for (lv, q) in self.eval(l).iter() {
                        for (rv, w) in rd.iter() {
                            let inst = body.substitute(x, lv).substitute(y, rv);
                            out.add_scaled(&(p * q * w), &self.eval(&inst));
                        }
                    }
                }
                out
            }
            Kind::Var(_) | Kind::Abs(..) | Kind::Pair(..) => unreachable!("values handled above"),
        }
    }
}

/// `⟦m⟧` through the shared evaluator.
pub fn eval_big(m: &Term) -> Result<Dist<Term>, EvalError> {
    Evaluator::shared().eval_checked(m)
}

/// The one-step successor distribution of a closed non-value.
pub fn step_one(m: &Term) -> Result<Dist<Term>, EvalError> {
    if m.is_value() {
        return Err(EvalError::IsValue(m.clone()));
    }
    Ok(step(m))
}

fn step(m: &Term) -> Dist<Term> {
    match m.kind() {
        Kind::Omega => Dist::empty(),
        Kind::Choice(l, r) => {
            let mut d = Dist::empty();
            d.add(l.clone(), half());
            d.add(r.clone(), half());
            d
        }
        Kind::App(f, a) if !f.is_value() => step(f).map(|f2| Term::app(f2.clone(), a.clone())),
        Kind::App(f, a) if !a.is_value() => step(a).map(|a2| Term::app(f.clone(), a2.clone())),
        Kind::App(f, a) => match f.kind() {
            Kind::Abs(x, body) => Dist::dirac(body.substitute(x, a)),
            _ => {
                warn!("stuck application of {f}; counted as divergence");
                Dist::empty()
            }
        },
        Kind::LetPair(x, y, scrut, body) => {
            let rebuild = |s: &Term| Term::let_pair(x.clone(), y.clone(), s.clone(), body.clone());
            match scrut.kind() {
                _ if !scrut.is_value() => step(scrut).map(rebuild),
                Kind::Pair(l, r) if !l.is_value() => {
                    step(l).map(|l2| rebuild(&Term::pair(l2.clone(), r.clone())))
                }
                Kind::Pair(l, r) if !r.is_value() => {
                    step(r).map(|r2| rebuild(&Term::pair(l.clone(), r2.clone())))
                }
                Kind::Pair(l, r) => Dist::dirac(body.substitute(x, l).substitute(y, r)),
                _ => {
                    warn!("stuck let over {scrut}; counted as divergence");
                    Dist::empty()
                }
            }
        }
        Kind::Var(_) | Kind::Abs(..) | Kind::Pair(..) => unreachable!("caller excludes values"),
    }
}

/// `size(D) = Σ_{M ∈ supp D} 3^size(M)`.
pub fn dist_measure(d: &Dist<Term>) -> BigUint {
    d.support().map(Term::measure).fold(BigUint::zero(), |a, b| a + b)
}

/// `3^size(m)`: an upper bound on the number of distribution steps.
pub fn step_count_bound(m: &Term) -> BigUint {
    m.measure()
}

/// One lifted step: every non-value in the support moves, values stay put.
pub fn step_dist(d: &Dist<Term>) -> Dist<Term> {
    d.bind(|t| {
        if t.is_value() {
            Dist::dirac(t.clone())
        } else {
            step(t)
        }
    })
}

/// A complete small-step run.
#[derive(Debug, Clone)]
pub struct SmallStepRun {
    pub result: Dist<Term>,
    /// Number of lifted steps until only values remain.
    pub rounds: u64,
    /// Measure of the distribution before each step and after the last one.
    pub measures: Vec<BigUint>,
}

impl SmallStepRun {
    pub fn strictly_decreasing(&self) -> bool {
        self.measures.windows(2).all(|w| w[1] < w[0])
    }
}

/// Iterate [`step_dist`] from `δm` to a value distribution, recording the
/// measure after every round.
pub fn run_small(m: &Term) -> Result<SmallStepRun, EvalError> {
    check_program(m)?;
    let mut d = Dist::dirac(m.clone());
    let mut measures = vec![dist_measure(&d)];
    let mut rounds = 0;
    while d.support().any(|t| !t.is_value()) {
        d = step_dist(&d);
        rounds += 1;
        measures.push(dist_measure(&d));
    }
    Ok(SmallStepRun {
        result: d,
        rounds,
        measures,
    })
}

pub fn eval_small(m: &Term) -> Result<Dist<Term>, EvalError> {
    run_small(m).map(|r| r.result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{rat, Rational};
    use crate::syntax::parse;
    use num_traits::One;

    fn p(s: &str) -> Term {
        parse(s).unwrap()
    }

    #[test]
    fn big_step_examples() {
        let d = eval_big(&p("I (+) omega")).unwrap();
        assert_eq!(d.get(&Term::identity()), half());
        assert_eq!(d.len(), 1);
        assert!(eval_big(&p("omega")).unwrap().is_empty());
        let d = eval_big(&p("(\\x. x) (\\y. omega)")).unwrap();
        assert_eq!(d, Dist::dirac(p("\\y. omega")));
    }

    #[test]
    fn big_step_rejects_non_programs() {
        assert!(matches!(eval_big(&p("x")), Err(EvalError::NotClosed(_))));
        assert!(matches!(
            eval_big(&p("\\x. x x")),
            Err(EvalError::NotAffine(_))
        ));
    }

    #[test]
    fn one_step_examples() {
        let d = step_one(&p("I (+) \\y. omega")).unwrap();
        assert_eq!(d.get(&Term::identity()), half());
        assert_eq!(d.get(&p("\\y. omega")), half());
        assert_eq!(step_one(&p("(\\x. x) I")).unwrap(), Dist::dirac(Term::identity()));
        assert!(step_one(&p("omega")).unwrap().is_empty());
        assert!(matches!(step_one(&p("I")), Err(EvalError::IsValue(_))));
    }

    #[test]
    fn argument_reduces_only_after_function() {
        let d = step_one(&p("(I (+) I) (I I)")).unwrap();
        assert_eq!(d, Dist::dirac(p("I (I I)")));
        let d = step_one(&p("I ((\\x. x) I)")).unwrap();
        assert_eq!(d, Dist::dirac(p("I I")));
    }

    #[test]
    fn small_step_examples() {
        assert_eq!(eval_small(&p("I (+) omega")).unwrap().weight(), half());
        let v = p("\\z. z (\\w. w)");
        assert_eq!(eval_small(&v).unwrap(), Dist::dirac(v));
        let d = eval_small(&p("(I (+) omega) (I (+) omega)")).unwrap();
        assert_eq!(d.get(&Term::identity()), rat(1, 4));
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn bound_examples() {
        assert_eq!(step_count_bound(&p("omega")), BigUint::from(1u32));
        assert_eq!(step_count_bound(&p("\\x. x")), BigUint::from(9u32));
        assert_eq!(step_count_bound(&p("(\\x. x) (\\y. y)")), BigUint::from(81u32));
    }

    #[test]
    fn pairs_semantics() {
        let pair = p("<I (+) omega, I>");
        assert_eq!(eval_big(&pair).unwrap(), Dist::dirac(pair));
        let t = p("let <a, b> = <I (+) omega, I> in a b");
        assert_eq!(eval_big(&t).unwrap().weight(), half());
        assert_eq!(eval_small(&t).unwrap(), eval_big(&t).unwrap());
    }

    #[test]
    fn stuck_terms_lose_mass() {
        assert!(eval_big(&p("<I, I> I")).unwrap().is_empty());
        assert!(eval_small(&p("let <a, b> = I in a")).unwrap().is_empty());
    }

    #[test]
    fn measure_decreases() {
        let run = run_small(&p("(\\f. f I) ((\\x. x) (+) omega)")).unwrap();
        assert!(run.strictly_decreasing());
        assert_eq!(run.result.weight(), half());
        let run = run_small(&p("I")).unwrap();
        assert_eq!(run.rounds, 0);
        assert_eq!(run.result.weight(), Rational::one());
    }
}
