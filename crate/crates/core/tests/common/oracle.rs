//! Reference implementations used to cross-check the library.

use std::collections::HashMap;

use metric_wb::dist::{Dist, Rational};
use metric_wb::syntax::{Kind, Term};
use num_traits::{One, Signed, Zero};

/// Independent term representation with string names.
#[derive(Clone, Debug)]
pub enum O {
    Var(String),
    Abs(String, Box<O>),
    App(Box<O>, Box<O>),
    Choice(Box<O>, Box<O>),
    Omega,
    Pair(Box<O>, Box<O>),
    Let(String, String, Box<O>, Box<O>),
}

pub fn from_term(t: &Term) -> O {
    match t.kind() {
        Kind::Var(x) => O::Var(x.to_string()),
        Kind::Abs(x, b) => O::Abs(x.to_string(), Box::new(from_term(b))),
        Kind::App(f, a) => O::App(Box::new(from_term(f)), Box::new(from_term(a))),
        Kind::Choice(l, r) => O::Choice(Box::new(from_term(l)), Box::new(from_term(r))),
        Kind::Omega => O::Omega,
        Kind::Pair(l, r) => O::Pair(Box::new(from_term(l)), Box::new(from_term(r))),
        Kind::LetPair(x, y, m, n) => O::Let(
            x.to_string(),
            y.to_string(),
            Box::new(from_term(m)),
            Box::new(from_term(n)),
        ),
    }
}

pub fn to_term(o: &O) -> Term {
    match o {
        O::Var(x) => Term::var(x.as_str()),
        O::Abs(x, b) => Term::abs(x.as_str(), to_term(b)),
        O::App(f, a) => Term::app(to_term(f), to_term(a)),
        O::Choice(l, r) => Term::choice(to_term(l), to_term(r)),
        O::Omega => Term::omega(),
        O::Pair(l, r) => Term::pair(to_term(l), to_term(r)),
        O::Let(x, y, m, n) => Term::let_pair(x.as_str(), y.as_str(), to_term(m), to_term(n)),
    }
}

/// Substitution of a closed term: no capture is possible.
fn subst(o: &O, x: &str, v: &O) -> O {
    match o {
        O::Var(y) if y == x => v.clone(),
        O::Var(_) | O::Omega => o.clone(),
        O::Abs(y, _) if y == x => o.clone(),
        O::Abs(y, b) => O::Abs(y.clone(), Box::new(subst(b, x, v))),
        O::App(f, a) => O::App(Box::new(subst(f, x, v)), Box::new(subst(a, x, v))),
        O::Choice(l, r) => O::Choice(Box::new(subst(l, x, v)), Box::new(subst(r, x, v))),
        O::Pair(l, r) => O::Pair(Box::new(subst(l, x, v)), Box::new(subst(r, x, v))),
        O::Let(a, b, m, n) => {
            let n2 = if a == x || b == x { (**n).clone() } else { subst(n, x, v) };
            O::Let(a.clone(), b.clone(), Box::new(subst(m, x, v)), Box::new(n2))
        }
    }
}

fn is_value(o: &O) -> bool {
    matches!(o, O::Abs(..) | O::Pair(..) | O::Var(_))
}

/// Outcome list with repetitions; merged by the caller.
fn run(o: &O, p: Rational, out: &mut Vec<(O, Rational)>) {
    match o {
        _ if is_value(o) => out.push((o.clone(), p)),
        O::Omega => {}
        O::Choice(l, r) => {
            let h = p / Rational::from_integer(2.into());
            run(l, h.clone(), out);
            run(r, h, out);
        }
        O::App(f, a) => {
            let mut fs = Vec::new();
            run(f, Rational::one(), &mut fs);
            for (fv, fp) in fs {
                let O::Abs(x, body) = fv else { continue };
                let mut args = Vec::new();
                run(a, Rational::one(), &mut args);
                for (av, ap) in args {
                    run(&subst(&body, &x, &av), &p * &fp * ap, out);
                }
            }
        }
        O::Let(x, y, m, n) => {
            let mut ms = Vec::new();
            run(m, Rational::one(), &mut ms);
            for (mv, mp) in ms {
                let O::Pair(l, r) = mv else { continue };
                let mut ls = Vec::new();
                run(&l, Rational::one(), &mut ls);
                let mut rs = Vec::new();
                run(&r, Rational::one(), &mut rs);
                for (lv, lp) in &ls {
                    for (rv, rp) in &rs {
                        let body = subst(&subst(n, x, lv), y, rv);
                        run(&body, &p * &mp * lp * rp, out);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Naive big-step evaluation without sharing or memoization.
pub fn naive_eval(t: &Term) -> Dist<Term> {
    let mut outcomes = Vec::new();
    run(&from_term(t), Rational::one(), &mut outcomes);
    let mut d = Dist::empty();
    for (v, p) in outcomes {
        d.add(to_term(&v), p);
    }
    d
}

/// Whether some evaluation path reaches `omega` or gets stuck.
pub fn may_lose_mass(t: &Term) -> bool {
    naive_eval(t).weight() < Rational::one()
}

/// Free occurrence count of each variable, taking the maximum over the two
/// branches of a choice.
fn counts(o: &O) -> HashMap<String, usize> {
    fn merge_sum(a: &mut HashMap<String, usize>, b: HashMap<String, usize>) {
        for (k, v) in b {
            *a.entry(k).or_default() += v;
        }
    }
    match o {
        O::Var(x) => HashMap::from([(x.clone(), 1)]),
        O::Omega => HashMap::new(),
        O::Abs(x, b) => {
            let mut c = counts(b);
            c.remove(x);
            c
        }
        O::App(l, r) | O::Pair(l, r) => {
            let mut c = counts(l);
            merge_sum(&mut c, counts(r));
            c
        }
        O::Choice(l, r) => {
            let mut c = counts(l);
            for (k, v) in counts(r) {
                let e = c.entry(k).or_default();
                *e = (*e).max(v);
            }
            c
        }
        O::Let(x, y, m, n) => {
            let mut cn = counts(n);
            cn.remove(x);
            cn.remove(y);
            let mut c = counts(m);
            merge_sum(&mut c, cn);
            c
        }
    }
}

fn binders_ok(o: &O) -> bool {
    let once = |body: &O, x: &str| counts(body).get(x).copied().unwrap_or(0) <= 1;
    match o {
        O::Var(_) | O::Omega => true,
        O::Abs(x, b) => once(b, x) && binders_ok(b),
        O::App(l, r) | O::Pair(l, r) | O::Choice(l, r) => binders_ok(l) && binders_ok(r),
        O::Let(x, y, m, n) => x != y && once(n, x) && once(n, y) && binders_ok(m) && binders_ok(n),
    }
}

/// Closed and every bound variable used at most once.
pub fn naive_is_program(t: &Term) -> bool {
    let o = from_term(t);
    counts(&o).is_empty() && binders_ok(&o)
}

fn solve_square(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let n = b.len();
    let mut m: Vec<Vec<Rational>> = a
        .iter()
        .zip(b)
        .map(|(row, r)| {
            let mut row = row.clone();
            row.push(r.clone());
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let pv = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &pv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for c in 0..=n {
                    let sub = &f * &m[col][c];
                    m[r][c] -= sub;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Maximum of `c·x` subject to `A x ≤ b` (rows already include any sign
/// constraints) by enumerating all vertices. `None` when infeasible. The
/// caller must ensure the polytope is bounded.
pub fn vertex_max(c: &[Rational], a: &[Vec<Rational>], b: &[Rational]) -> Option<Rational> {
    let n = c.len();
    let mut best: Option<Rational> = None;
    for rows in combinations(a.len(), n) {
        let sa: Vec<Vec<Rational>> = rows.iter().map(|&r| a[r].clone()).collect();
        let sb: Vec<Rational> = rows.iter().map(|&r| b[r].clone()).collect();
        let Some(x) = solve_square(&sa, &sb) else { continue };
        let feasible = a.iter().zip(b).all(|(row, rhs)| {
            let lhs: Rational = row.iter().zip(&x).map(|(p, q)| p * q).sum();
            lhs <= *rhs
        });
        if !feasible {
            continue;
        }
        let v: Rational = c.iter().zip(&x).map(|(p, q)| p * q).sum();
        if best.as_ref().is_none_or(|b| v > *b) {
            best = Some(v);
        }
    }
    best
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}
