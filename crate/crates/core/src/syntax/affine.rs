use std::collections::BTreeSet;

use thiserror::Error;

use super::term::{Kind, Name, Term};

/// Why a term fails the affinity judgment `Γ ⊢ M`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AffinityError {
    #[error("variable {0} used twice")]
    UsedTwice(Name),
    #[error("variable {0} is not in scope")]
    Unbound(Name),
    #[error("let binds {0} twice")]
    DuplicateBinder(Name),
}

/// A typing context Γ: a finite set of variable names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TypingContext(BTreeSet<Name>);

impl TypingContext {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn of<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<Name>,
    {
        TypingContext(names.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, x: &str) -> bool {
        self.0.iter().any(|n| &**n == x)
    }

    fn with(&self, names: &[&Name]) -> Self {
        let mut next = self.0.clone();
        for n in names {
            next.insert((*n).clone());
        }
        TypingContext(next)
    }
}

/// Decide `Γ ⊢ t`. Application, pairs and `let` split the context into
/// disjoint halves; the two branches of a choice share it.
pub fn check_affine(ctx: &TypingContext, t: &Term) -> Result<(), AffinityError> {
    match t.kind() {
        Kind::Var(x) => {
            if ctx.contains(x) {
                Ok(())
            } else {
                Err(AffinityError::Unbound(x.clone()))
            }
        }
        Kind::Omega => Ok(()),
        Kind::Abs(x, b) => check_affine(&ctx.with(&[x]), b),
        Kind::Choice(l, r) => {
            check_affine(ctx, l)?;
            check_affine(ctx, r)
        }
        Kind::App(l, r) | Kind::Pair(l, r) => {
            check_affine(ctx, l)?;
            check_affine(ctx, r)?;
            disjoint(&l.free_vars(), &r.free_vars())
        }
        Kind::LetPair(x, y, m, n) => {
            if x == y {
                return Err(AffinityError::DuplicateBinder(x.clone()));
            }
            check_affine(ctx, m)?;
            check_affine(&ctx.with(&[x, y]), n)?;
            let mut body_free = n.free_vars();
            body_free.remove(x);
            body_free.remove(y);
            disjoint(&m.free_vars(), &body_free)
        }
    }
}

fn disjoint(a: &BTreeSet<Name>, b: &BTreeSet<Name>) -> Result<(), AffinityError> {
    match a.intersection(b).next() {
        Some(x) => Err(AffinityError::UsedTwice(x.clone())),
        None => Ok(()),
    }
}

pub fn is_affine(ctx: &TypingContext, t: &Term) -> bool {
    check_affine(ctx, t).is_ok()
}

/// A program: a closed affine term.
pub fn is_program(t: &Term) -> bool {
    is_affine(&TypingContext::empty(), t)
}
