use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigUint;

/// Variable names. Cheap to clone and shared between copies of a term.
pub type Name = Arc<str>;

/// The constructors of the calculus: affine λ-terms with fair choice,
/// divergence and (optionally) pairs.
#[derive(Debug, Clone)]
pub enum Kind {
    Var(Name),
    Abs(Name, Term),
    App(Term, Term),
    Choice(Term, Term),
    Omega,
    Pair(Term, Term),
    LetPair(Name, Name, Term, Term),
}

#[derive(Debug)]
struct Node {
    kind: Kind,
    // Structural hash that ignores every variable name, so alpha-equivalent
    // terms always collide. Equality does the real work.
    shape: u64,
    size: u64,
}

/// A shared, immutable term.
///
/// Equality and hashing are alpha-equivalence: `\x. x` and `\y. y` are the
/// same key in a map. Free variables are compared by name.
#[derive(Clone)]
pub struct Term(Arc<Node>);

fn mix(tag: u64, parts: &[u64]) -> u64 {
    // FNV-1a over the tag and the child hashes.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ tag;
    for p in parts {
        for b in p.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

impl Term {
    fn build(kind: Kind) -> Term {
        let (shape, size) = match &kind {
            Kind::Var(_) => (mix(1, &[]), 1),
            Kind::Abs(_, b) => (mix(2, &[b.shape()]), 1 + b.size()),
            Kind::App(f, a) => (mix(3, &[f.shape(), a.shape()]), f.size() + a.size()),
            Kind::Choice(l, r) => (
                mix(4, &[l.shape(), r.shape()]),
                1 + l.size().max(r.size()),
            ),
            Kind::Omega => (mix(5, &[]), 0),
            Kind::Pair(l, r) => (mix(6, &[l.shape(), r.shape()]), 1 + l.size() + r.size()),
            Kind::LetPair(_, _, m, n) => (
                mix(7, &[m.shape(), n.shape()]),
                2 + m.size() + n.size(),
            ),
        };
        Term(Arc::new(Node { kind, shape, size }))
    }

    pub fn var(name: impl Into<Name>) -> Term {
        Term::build(Kind::Var(name.into()))
    }

    pub fn abs(name: impl Into<Name>, body: Term) -> Term {
        Term::build(Kind::Abs(name.into(), body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::build(Kind::App(f, a))
    }

    /// Left-nested application `f a1 a2 ...`.
    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn choice(l: Term, r: Term) -> Term {
        Term::build(Kind::Choice(l, r))
    }

    pub fn omega() -> Term {
        Term::build(Kind::Omega)
    }

    pub fn pair(l: Term, r: Term) -> Term {
        Term::build(Kind::Pair(l, r))
    }

    pub fn let_pair(x: impl Into<Name>, y: impl Into<Name>, scrutinee: Term, body: Term) -> Term {
        Term::build(Kind::LetPair(x.into(), y.into(), scrutinee, body))
    }

    /// The identity `\x. x`.
    pub fn identity() -> Term {
        Term::abs("x", Term::var("x"))
    }

    pub fn kind(&self) -> &Kind {
        &self.0.kind
    }

    fn shape(&self) -> u64 {
        self.0.shape
    }

    /// The termination measure: `size(Ω) = 0`, `size(x) = 1`,
    /// `size(λx.M) = 1 + size(M)`, `size(MN) = size(M) + size(N)`,
    /// `size(M ⊕ N) = 1 + max(size M, size N)`. Pairs count
    /// `1 + size M + size N` and `let` counts `2 + size M + size N`.
    pub fn size(&self) -> u64 {
        self.0.size
    }

    /// `3^size`, the bound on the number of distribution-level reduction
    /// rounds.
    pub fn measure(&self) -> BigUint {
        BigUint::from(3u32).pow(self.size() as u32)
    }

    pub fn is_value(&self) -> bool {
        matches!(self.kind(), Kind::Abs(..) | Kind::Pair(..))
    }

    pub fn is_abs(&self) -> bool {
        matches!(self.kind(), Kind::Abs(..))
    }

    pub fn is_pair(&self) -> bool {
        matches!(self.kind(), Kind::Pair(..))
    }

    pub fn ptr_eq(&self, other: &Term) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Syntactic identity, bound names included.
    pub fn identical(&self, other: &Term) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        if self.shape() != other.shape() || self.size() != other.size() {
            return false;
        }
        match (self.kind(), other.kind()) {
            (Kind::Var(x), Kind::Var(y)) => x == y,
            (Kind::Omega, Kind::Omega) => true,
            (Kind::Abs(x, m), Kind::Abs(y, n)) => x == y && m.identical(n),
            (Kind::App(l1, r1), Kind::App(l2, r2))
            | (Kind::Choice(l1, r1), Kind::Choice(l2, r2))
            | (Kind::Pair(l1, r1), Kind::Pair(l2, r2)) => l1.identical(l2) && r1.identical(r2),
            (Kind::LetPair(x1, y1, m1, n1), Kind::LetPair(x2, y2, m2, n2)) => {
                x1 == x2 && y1 == y2 && m1.identical(m2) && n1.identical(n2)
            }
            _ => false,
        }
    }

    /// Free variables, sorted by name.
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        collect_free(self, &mut bound, &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn occurs_free(&self, x: &str) -> bool {
        self.free_vars().iter().any(|v| &**v == x)
    }

    /// Every name appearing in the term, bound or free.
    pub fn all_names(&self) -> HashSet<Name> {
        let mut out = HashSet::new();
        collect_names(self, &mut out);
        out
    }

    pub fn contains_pairs(&self) -> bool {
        match self.kind() {
            Kind::Var(_) | Kind::Omega => false,
            Kind::Pair(..) | Kind::LetPair(..) => true,
            Kind::Abs(_, b) => b.contains_pairs(),
            Kind::App(l, r) | Kind::Choice(l, r) => l.contains_pairs() || r.contains_pairs(),
        }
    }

    /// `self{v/x}`. The substituted term is expected to be closed, which
    /// every use in the semantics guarantees, so no renaming is needed.
    pub fn substitute(&self, x: &str, v: &Term) -> Term {
        if !self.occurs_free(x) {
            return self.clone();
        }
        self.subst_rec(x, v)
    }

    fn subst_rec(&self, x: &str, v: &Term) -> Term {
        match self.kind() {
            Kind::Var(y) => {
                if &**y == x {
                    v.clone()
                } else {
                    self.clone()
                }
            }
            Kind::Omega => self.clone(),
            Kind::Abs(y, b) => {
                if &**y == x {
                    self.clone()
                } else {
                    Term::abs(y.clone(), b.subst_rec(x, v))
                }
            }
            Kind::App(l, r) => Term::app(l.subst_rec(x, v), r.subst_rec(x, v)),
            Kind::Choice(l, r) => Term::choice(l.subst_rec(x, v), r.subst_rec(x, v)),
            Kind::Pair(l, r) => Term::pair(l.subst_rec(x, v), r.subst_rec(x, v)),
            Kind::LetPair(a, b, m, n) => {
                let m2 = m.subst_rec(x, v);
                let n2 = if &**a == x || &**b == x {
                    n.clone()
                } else {
                    n.subst_rec(x, v)
                };
                Term::let_pair(a.clone(), b.clone(), m2, n2)
            }
        }
    }

    /// Simultaneous substitution of closed terms for several variables.
    pub fn substitute_all(&self, bindings: &[(&str, &Term)]) -> Term {
        bindings
            .iter()
            .fold(self.clone(), |acc, (x, v)| acc.substitute(x, v))
    }

    /// Replace free occurrences of `from` by the variable `to`. Only safe
    /// when `to` is not bound anywhere inside the term.
    pub fn rename_free(&self, from: &str, to: &str) -> Term {
        self.substitute(from, &Term::var(to))
    }
}

fn collect_free(t: &Term, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match t.kind() {
        Kind::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        Kind::Omega => {}
        Kind::Abs(x, b) => {
            bound.push(x.clone());
            collect_free(b, bound, out);
            bound.pop();
        }
        Kind::App(l, r) | Kind::Choice(l, r) | Kind::Pair(l, r) => {
            collect_free(l, bound, out);
            collect_free(r, bound, out);
        }
        Kind::LetPair(x, y, m, n) => {
            collect_free(m, bound, out);
            bound.push(x.clone());
            bound.push(y.clone());
            collect_free(n, bound, out);
            bound.pop();
            bound.pop();
        }
    }
}

fn collect_names(t: &Term, out: &mut HashSet<Name>) {
    match t.kind() {
        Kind::Var(x) => {
            out.insert(x.clone());
        }
        Kind::Omega => {}
        Kind::Abs(x, b) => {
            out.insert(x.clone());
            collect_names(b, out);
        }
        Kind::App(l, r) | Kind::Choice(l, r) | Kind::Pair(l, r) => {
            collect_names(l, out);
            collect_names(r, out);
        }
        Kind::LetPair(x, y, m, n) => {
            out.insert(x.clone());
            out.insert(y.clone());
            collect_names(m, out);
            collect_names(n, out);
        }
    }
}

/// Position of `x` among the binders in scope, innermost first.
fn binder_index(env: &[Name], x: &Name) -> Option<usize> {
    env.iter().rev().position(|b| b == x)
}

fn alpha_eq(a: &Term, b: &Term, env_a: &mut Vec<Name>, env_b: &mut Vec<Name>) -> bool {
    if a.shape() != b.shape() || a.size() != b.size() {
        return false;
    }
    if env_a.is_empty() && env_b.is_empty() && a.ptr_eq(b) {
        return true;
    }
    match (a.kind(), b.kind()) {
        (Kind::Var(x), Kind::Var(y)) => match (binder_index(env_a, x), binder_index(env_b, y)) {
            (Some(i), Some(j)) => i == j,
            (None, None) => x == y,
            _ => false,
        },
        (Kind::Omega, Kind::Omega) => true,
        (Kind::Abs(x, m), Kind::Abs(y, n)) => {
            env_a.push(x.clone());
            env_b.push(y.clone());
            let r = alpha_eq(m, n, env_a, env_b);
            env_a.pop();
            env_b.pop();
            r
        }
        (Kind::App(l1, r1), Kind::App(l2, r2))
        | (Kind::Choice(l1, r1), Kind::Choice(l2, r2))
        | (Kind::Pair(l1, r1), Kind::Pair(l2, r2)) => {
            alpha_eq(l1, l2, env_a, env_b) && alpha_eq(r1, r2, env_a, env_b)
        }
        (Kind::LetPair(x1, y1, m1, n1), Kind::LetPair(x2, y2, m2, n2)) => {
            if !alpha_eq(m1, m2, env_a, env_b) {
                return false;
            }
            env_a.push(x1.clone());
            env_a.push(y1.clone());
            env_b.push(x2.clone());
            env_b.push(y2.clone());
            let r = alpha_eq(n1, n2, env_a, env_b);
            env_a.truncate(env_a.len() - 2);
            env_b.truncate(env_b.len() - 2);
            r
        }
        _ => false,
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        alpha_eq(self, other, &mut Vec::new(), &mut Vec::new())
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.shape());
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Term({self})")
    }
}
