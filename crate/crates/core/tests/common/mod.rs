#![allow(dead_code)]

pub mod oracle;

use metric_wb::dist::{rat, Dist, Rational};
use metric_wb::kantorovich::PseudoMetric;
use metric_wb::syntax::{Name, Term, Type, Unifier};
use metric_wb::trace::{Trace, TraceAction};
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Random term generator. Every generated term is affine over the
/// variables it was given; with no free variables it is a program.
pub struct TermGen {
    pub pairs: bool,
    counter: usize,
}

impl TermGen {
    pub fn new(pairs: bool) -> Self {
        TermGen { pairs, counter: 0 }
    }

    fn fresh(&mut self) -> Name {
        self.counter += 1;
        format!("v{}", self.counter).into()
    }

    /// A closed affine term with `size()` at most `budget`.
    pub fn closed(&mut self, rng: &mut StdRng, budget: u64) -> Term {
        self.term(rng, &[], budget.max(1))
    }

    /// A closed value of size at most `budget` (at least 2).
    pub fn closed_value(&mut self, rng: &mut StdRng, budget: u64) -> Term {
        self.value(rng, &[], budget.max(2))
    }

    /// An affine term whose free variables are among `avail`.
    pub fn open(&mut self, rng: &mut StdRng, avail: &[Name], budget: u64) -> Term {
        self.term(rng, avail, budget.max(1))
    }

    fn split(rng: &mut StdRng, avail: &[Name]) -> (Vec<Name>, Vec<Name>) {
        let mut l = Vec::new();
        let mut r = Vec::new();
        for x in avail {
            match rng.gen_range(0..3) {
                0 => l.push(x.clone()),
                1 => r.push(x.clone()),
                _ => {}
            }
        }
        (l, r)
    }

    fn value(&mut self, rng: &mut StdRng, avail: &[Name], budget: u64) -> Term {
        if self.pairs && budget >= 3 && rng.gen_bool(0.3) {
            let (l, r) = Self::split(rng, avail);
            let lb = rng.gen_range(1..budget - 1);
            let a = self.term(rng, &l, lb);
            let b = self.term(rng, &r, budget - 1 - lb);
            return Term::pair(a, b);
        }
        let x = self.fresh();
        let mut inner = avail.to_vec();
        inner.push(x.clone());
        let body = self.term(rng, &inner, budget - 1);
        Term::abs(x, body)
    }

    fn term(&mut self, rng: &mut StdRng, avail: &[Name], budget: u64) -> Term {
        if budget <= 1 {
            return match avail.choose(rng) {
                Some(x) if rng.gen_bool(0.8) => Term::var(x.clone()),
                _ => Term::omega(),
            };
        }
        let roll = rng.gen_range(0..100);
        let lets = self.pairs && budget >= 4;
        match roll {
            0..=9 => match avail.choose(rng) {
                Some(x) => Term::var(x.clone()),
                None => self.value(rng, avail, budget),
            },
            10..=13 => Term::omega(),
            14..=39 => self.value(rng, avail, budget),
            40..=64 if budget >= 3 => {
                let (l, r) = Self::split(rng, avail);
                let lb = rng.gen_range(1..budget - 1);
                let f = self.term(rng, &l, lb);
                let a = self.term(rng, &r, budget - 1 - lb);
                Term::app(f, a)
            }
            65..=84 if budget >= 3 => {
                let lb = rng.gen_range(1..budget - 1);
                let a = self.term(rng, avail, lb);
                let b = self.term(rng, avail, budget - 1 - lb);
                Term::choice(a, b)
            }
            85..=99 if lets => {
                let (l, r) = Self::split(rng, avail);
                let lb = rng.gen_range(1..budget - 2);
                let scrut = self.term(rng, &l, lb);
                let (x, y) = (self.fresh(), self.fresh());
                let mut inner = r;
                inner.push(x.clone());
                inner.push(y.clone());
                let body = self.term(rng, &inner, budget - 2 - lb);
                Term::let_pair(x, y, scrut, body)
            }
            _ => self.value(rng, avail, budget),
        }
    }
}

/// A random trace over the given alphabet sizes.
pub fn random_trace(
    rng: &mut StdRng,
    gen: &mut TermGen,
    max_len: usize,
    value_budget: u64,
) -> Trace {
    let len = rng.gen_range(0..=max_len);
    let xy: Vec<Name> = vec!["x".into(), "y".into()];
    let actions = (0..len)
        .map(|_| {
            if gen.pairs && rng.gen_bool(0.4) {
                TraceAction::Tensor(gen.open(rng, &xy, value_budget))
            } else {
                TraceAction::App(gen.closed_value(rng, value_budget))
            }
        })
        .collect();
    Trace::new(actions)
}

/// A well-typed pairs-mode instance: a closed program together with a trace
/// whose actions agree with the program's inferred type.
pub fn typed_instance(
    rng: &mut StdRng,
    term_budget: u64,
    max_len: usize,
) -> (Term, Trace) {
    let mut gen = TermGen::new(true);
    loop {
        let m = gen.closed(rng, term_budget);
        let mut u = Unifier::new();
        let Ok(mut ty) = u.infer(&[], &m) else { continue };
        let mut actions = Vec::new();
        let len = rng.gen_range(0..=max_len);
        let mut attempts = 0;
        while actions.len() < len && attempts < 50 {
            attempts += 1;
            let current = u.resolve(&ty);
            let want_tensor = match current {
                Type::Tensor(..) => true,
                Type::Arrow(..) => false,
                Type::Var(_) => rng.gen_bool(0.4),
                Type::Base => break,
            };
            if want_tensor {
                let (a, b) = (u.fresh(), u.fresh());
                let mut trial = u.clone();
                if trial.unify(&current, &Type::tensor(a.clone(), b.clone())).is_err() {
                    continue;
                }
                let xy: Vec<Name> = vec!["x".into(), "y".into()];
                let bb = rng.gen_range(1..6);
                let body = gen.open(rng, &xy, bb);
                let env = vec![("x".into(), a), ("y".into(), b)];
                let Ok(tb) = trial.infer(&env, &body) else { continue };
                u = trial;
                ty = tb;
                actions.push(TraceAction::Tensor(body));
            } else {
                let vb = rng.gen_range(2..7);
                let v = gen.closed_value(rng, vb);
                let mut trial = u.clone();
                let Ok(tv) = trial.infer(&[], &v) else { continue };
                let r = trial.fresh();
                if trial.unify(&current, &Type::arrow(tv, r.clone())).is_err() {
                    continue;
                }
                u = trial;
                ty = r;
                actions.push(TraceAction::App(v));
            }
        }
        return (m, Trace::new(actions));
    }
}

/// A random dyadic rational in `[0, 1]` with denominator `2^bits`.
pub fn dyadic(rng: &mut StdRng, bits: u32) -> Rational {
    let d = 1i64 << bits;
    rat(rng.gen_range(0..=d), d)
}

/// A random subdistribution over `0..n` with dyadic weights.
pub fn random_subdist(rng: &mut StdRng, n: usize) -> Dist<usize> {
    let mut d = Dist::empty();
    let mut left = Rational::one();
    let size = rng.gen_range(0..=n);
    let mut states: Vec<usize> = (0..n).collect();
    states.shuffle(rng);
    for &s in states.iter().take(size) {
        let p = dyadic(rng, 3) * &left;
        left -= &p;
        d.add(s, p);
    }
    d
}

/// A random premetric: symmetric, zero diagonal, entries in `[0, 1]`.
pub fn random_premetric(rng: &mut StdRng, n: usize) -> PseudoMetric {
    let mut mu = PseudoMetric::zero(n);
    for i in 0..n {
        for j in i + 1..n {
            mu.set(i, j, dyadic(rng, 3));
        }
    }
    mu
}

/// A random pseudometric: shortest paths over a random premetric.
pub fn random_metric(rng: &mut StdRng, n: usize) -> PseudoMetric {
    let mu = random_premetric(rng, n);
    let mut d: Vec<Vec<Rational>> = (0..n)
        .map(|i| (0..n).map(|j| mu.get(i, j).clone()).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = &d[i][k] + &d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    PseudoMetric::from_matrix(d).expect("shortest paths form a pseudometric")
}

pub fn is_zero(r: &Rational) -> bool {
    r.is_zero()
}
