//! Optional simple-type validation for the pairs calculus: an opaque base
//! type, affine arrows and tensors. Types are inferred by first-order
//! unification, so terms need no annotations. A well-typed program never
//! gets stuck on a `let` over an abstraction or an application of a pair.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::affine::{check_affine, AffinityError, TypingContext};
use super::term::{Kind, Name, Term};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Type {
    Base,
    Var(usize),
    Arrow(Box<Type>, Box<Type>),
    Tensor(Box<Type>, Box<Type>),
}

impl Type {
    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn tensor(a: Type, b: Type) -> Type {
        Type::Tensor(Box::new(a), Box::new(b))
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        match self {
            Type::Base => write!(f, "i"),
            Type::Var(n) => write!(f, "'t{n}"),
            Type::Arrow(a, b) => {
                if nested {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, true)?;
                write!(f, " -o ")?;
                b.fmt_prec(f, false)?;
                if nested {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Type::Tensor(a, b) => {
                write!(f, "(")?;
                a.fmt_prec(f, true)?;
                write!(f, " * ")?;
                b.fmt_prec(f, true)?;
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("cannot unify {0} with {1}")]
    Mismatch(Type, Type),
    #[error("infinite type: 't{0} occurs in {1}")]
    Occurs(usize, Type),
    #[error("variable {0} is not in scope")]
    Unbound(Name),
    #[error(transparent)]
    Affinity(#[from] AffinityError),
}

/// Unification state: a substitution on type variables.
#[derive(Debug, Default, Clone)]
pub struct Unifier {
    next: usize,
    solved: HashMap<usize, Type>,
}

impl Unifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self) -> Type {
        self.next += 1;
        Type::Var(self.next - 1)
    }

    /// Apply the current substitution everywhere.
    pub fn resolve(&self, t: &Type) -> Type {
        match t {
            Type::Base => Type::Base,
            Type::Var(v) => match self.solved.get(v) {
                Some(s) => self.resolve(s),
                None => t.clone(),
            },
            Type::Arrow(a, b) => Type::arrow(self.resolve(a), self.resolve(b)),
            Type::Tensor(a, b) => Type::tensor(self.resolve(a), self.resolve(b)),
        }
    }

    fn occurs(&self, v: usize, t: &Type) -> bool {
        match self.resolve(t) {
            Type::Var(w) => v == w,
            Type::Base => false,
            Type::Arrow(a, b) | Type::Tensor(a, b) => self.occurs(v, &a) || self.occurs(v, &b),
        }
    }

    pub fn unify(&mut self, a: &Type, b: &Type) -> Result<(), TypeError> {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (&a, &b) {
            (Type::Var(v), Type::Var(w)) if v == w => Ok(()),
            (Type::Var(v), other) | (other, Type::Var(v)) => {
                if self.occurs(*v, other) {
                    return Err(TypeError::Occurs(*v, other.clone()));
                }
                self.solved.insert(*v, other.clone());
                Ok(())
            }
            (Type::Base, Type::Base) => Ok(()),
            (Type::Arrow(a1, b1), Type::Arrow(a2, b2))
            | (Type::Tensor(a1, b1), Type::Tensor(a2, b2)) => {
                self.unify(a1, a2)?;
                self.unify(b1, b2)
            }
            _ => Err(TypeError::Mismatch(a.clone(), b.clone())),
        }
    }

    /// Infer a type for `t` under `env`. Affinity is not checked here.
    pub fn infer(&mut self, env: &[(Name, Type)], t: &Term) -> Result<Type, TypeError> {
        match t.kind() {
            Kind::Var(x) => env
                .iter()
                .rev()
                .find(|(n, _)| n == x)
                .map(|(_, ty)| ty.clone())
                .ok_or_else(|| TypeError::Unbound(x.clone())),
            Kind::Omega => Ok(self.fresh()),
            Kind::Abs(x, b) => {
                let a = self.fresh();
                let mut inner = env.to_vec();
                inner.push((x.clone(), a.clone()));
                let r = self.infer(&inner, b)?;
                Ok(Type::arrow(a, r))
            }
            Kind::App(f, a) => {
                let tf = self.infer(env, f)?;
                let ta = self.infer(env, a)?;
                let r = self.fresh();
                self.unify(&tf, &Type::arrow(ta, r.clone()))?;
                Ok(r)
            }
            Kind::Choice(l, r) => {
                let tl = self.infer(env, l)?;
                let tr = self.infer(env, r)?;
                self.unify(&tl, &tr)?;
                Ok(tl)
            }
            Kind::Pair(l, r) => {
                let tl = self.infer(env, l)?;
                let tr = self.infer(env, r)?;
                Ok(Type::tensor(tl, tr))
            }
            Kind::LetPair(x, y, m, n) => {
                let tm = self.infer(env, m)?;
                let a = self.fresh();
                let b = self.fresh();
                self.unify(&tm, &Type::tensor(a.clone(), b.clone()))?;
                let mut inner = env.to_vec();
                inner.push((x.clone(), a));
                inner.push((y.clone(), b));
                self.infer(&inner, n)
            }
        }
    }
}

/// Affinity plus simple types for a closed term; returns the principal type.
pub fn typecheck(t: &Term) -> Result<Type, TypeError> {
    check_affine(&TypingContext::empty(), t)?;
    let mut u = Unifier::new();
    let ty = u.infer(&[], t)?;
    Ok(u.resolve(&ty))
}
