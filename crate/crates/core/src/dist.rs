//! Finite subdistributions with exact rational weights.

use std::fmt;
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value as Json};
use thiserror::Error;

use crate::syntax::Term;

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn half() -> Rational {
    rat(1, 2)
}

/// Render as `num/den`, always with an explicit denominator.
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parse `num/den` or a bare integer.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistError {
    #[error("mixture coefficients sum to {}, which exceeds 1", fmt_rational(.0))]
    CoefficientOverflow(Rational),
    #[error("negative mixture coefficient {}", fmt_rational(.0))]
    NegativeCoefficient(Rational),
}

/// A finite subdistribution: strictly positive weights with total at most 1.
/// Iteration follows insertion order, which keeps every rendering stable.
#[derive(Clone, PartialEq, Eq)]
pub struct Dist<T: Eq + Hash> {
    weights: IndexMap<T, Rational>,
}

impl<T: Eq + Hash> Default for Dist<T> {
    fn default() -> Self {
        Dist {
            weights: IndexMap::new(),
        }
    }
}

/// Order-independent, so it agrees with the map equality.
impl<T: Eq + Hash> Hash for Dist<T> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let mut acc: u64 = 0;
        for (x, p) in &self.weights {
            let mut h = DefaultHasher::new();
            x.hash(&mut h);
            p.hash(&mut h);
            acc = acc.wrapping_add(h.finish());
        }
        state.write_usize(self.weights.len());
        state.write_u64(acc);
    }
}

impl<T: Eq + Hash + Clone> Dist<T> {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dirac(x: T) -> Self {
        let mut d = Self::empty();
        d.weights.insert(x, Rational::one());
        d
    }

    /// Convex combination `Σ cᵢ·dᵢ`. Equal elements are collapsed.
    pub fn mix(parts: &[(Rational, Dist<T>)]) -> Result<Self, DistError> {
        let mut total = Rational::zero();
        for (c, _) in parts {
            if c.is_negative() {
                return Err(DistError::NegativeCoefficient(c.clone()));
            }
            total += c;
        }
        if total > Rational::one() {
            return Err(DistError::CoefficientOverflow(total));
        }
        let mut out = Self::empty();
        for (c, d) in parts {
            out.add_scaled(c, d);
        }
        Ok(out)
    }

    /// Add `p` to the weight of `x`. Callers are responsible for keeping the
    /// total at most 1.
    pub fn add(&mut self, x: T, p: Rational) {
        if p.is_zero() {
            return;
        }
        match self.weights.get_mut(&x) {
            Some(w) => *w += p,
            None => {
                self.weights.insert(x, p);
            }
        }
    }

    /// `self += c·d`.
    pub fn add_scaled(&mut self, c: &Rational, d: &Dist<T>) {
        if c.is_zero() {
            return;
        }
        for (x, p) in &d.weights {
            self.add(x.clone(), c * p);
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::empty();
        out.add_scaled(c, self);
        out
    }

    pub fn weight(&self) -> Rational {
        self.weights.values().fold(Rational::zero(), |a, b| a + b)
    }

    pub fn get(&self, x: &T) -> Rational {
        self.weights.get(x).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &Rational)> {
        self.weights.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &T> {
        self.weights.keys()
    }

    pub fn contains(&self, x: &T) -> bool {
        self.weights.contains_key(x)
    }

    /// Push the distribution forward along `f`.
    pub fn map<U: Eq + Hash + Clone>(&self, mut f: impl FnMut(&T) -> U) -> Dist<U> {
        let mut out = Dist::empty();
        for (x, p) in &self.weights {
            out.add(f(x), p.clone());
        }
        out
    }

    /// Monadic bind: `Σ_x self(x)·f(x)`.
    pub fn bind<U: Eq + Hash + Clone>(&self, mut f: impl FnMut(&T) -> Dist<U>) -> Dist<U> {
        let mut out = Dist::empty();
        for (x, p) in &self.weights {
            out.add_scaled(p, &f(x));
        }
        out
    }
}

impl<T: Eq + Hash + fmt::Display> fmt::Debug for Dist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (x, p)) in self.weights.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}: {}", fmt_rational(p))?;
        }
        write!(f, "}}")
    }
}

impl<T: Eq + Hash + fmt::Display> fmt::Display for Dist<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Dist<Term> {
    /// `{"support":[{"elem": "<term>", "p": "n/d"}, ...], "weight": "n/d"}`
    pub fn to_json(&self) -> Json {
        let support: Vec<Json> = self
            .weights
            .iter()
            .map(|(t, p)| json!({"elem": t.to_string(), "p": fmt_rational(p)}))
            .collect();
        json!({"support": support, "weight": fmt_rational(&self.weight())})
    }
}
