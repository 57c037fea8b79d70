use num_traits::{One, Zero};
use thiserror::Error;

use super::lp::{solve_lp_exact, LinearProgram, LpError, Relation, Sense};
use crate::dist::{fmt_rational, Dist, Rational};

/// A symmetric matrix of distances in `[0, 1]` over states `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoMetric {
    n: usize,
    d: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("distance {v} at ({1}, {2}) is outside [0, 1]", v = fmt_rational(.0))]
    OutOfRange(Rational, usize, usize),
    #[error("distance at ({0}, {0}) is not zero")]
    Diagonal(usize),
    #[error("distances at ({0}, {1}) and ({1}, {0}) differ")]
    Asymmetric(usize, usize),
    #[error("triangle inequality fails for {0}, {1}, {2}")]
    Triangle(usize, usize, usize),
}

impl PseudoMetric {
    pub fn zero(n: usize) -> Self {
        PseudoMetric {
            n,
            d: vec![Rational::zero(); n * n],
        }
    }

    /// Build from a full matrix, checking range, diagonal and symmetry.
    pub fn from_matrix(rows: Vec<Vec<Rational>>) -> Result<Self, MetricError> {
        let n = rows.len();
        let mut m = PseudoMetric::zero(n);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, v) in row.into_iter().enumerate() {
                if v < Rational::zero() || v > Rational::one() {
                    return Err(MetricError::OutOfRange(v, i, j));
                }
                m.d[i * n + j] = v;
            }
        }
        for i in 0..n {
            if !m.get(i, i).is_zero() {
                return Err(MetricError::Diagonal(i));
            }
            for j in 0..i {
                if m.get(i, j) != m.get(j, i) {
                    return Err(MetricError::Asymmetric(i, j));
                }
            }
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.d[i * self.n + j]
    }

    /// Set both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.d[i * self.n + j] = v.clone();
        self.d[j * self.n + i] = v;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Rational]> {
        self.d.chunks(self.n.max(1)).take(self.n)
    }

    /// Pointwise `self ≤ other`.
    pub fn le(&self, other: &PseudoMetric) -> bool {
        self.n == other.n && self.d.iter().zip(&other.d).all(|(a, b)| a <= b)
    }

    /// Check the triangle inequality on the given subset of states.
    pub fn check_triangle_on(&self, states: &[usize]) -> Result<(), MetricError> {
        for &a in states {
            for &b in states {
                for &c in states {
                    if self.get(a, c) > &(self.get(a, b) + self.get(b, c)) {
                        return Err(MetricError::Triangle(a, b, c));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn check_triangle(&self) -> Result<(), MetricError> {
        self.check_triangle_on(&(0..self.n).collect::<Vec<_>>())
    }
}

/// A feasible solution of the transport program: `h[i][j]` moves mass from
/// `rows[i]` to `cols[j]`; `w` and `z` are the unmatched parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportPlan {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub h: Vec<Vec<Rational>>,
    pub w: Vec<Rational>,
    pub z: Vec<Rational>,
}

impl TransportPlan {
    /// Row and column marginals match the two distributions.
    pub fn is_feasible_for(&self, d: &Dist<usize>, e: &Dist<usize>) -> bool {
        let nonneg = |v: &Rational| *v >= Rational::zero();
        if !self.w.iter().chain(&self.z).all(nonneg) || !self.h.iter().flatten().all(nonneg) {
            return false;
        }
        let rows_ok = self.rows.iter().enumerate().all(|(i, s)| {
            let sum = self.h[i].iter().fold(self.w[i].clone(), |a, b| a + b);
            sum == d.get(s)
        });
        let cols_ok = self.cols.iter().enumerate().all(|(j, t)| {
            let sum = self.h.iter().fold(self.z[j].clone(), |a, row| a + &row[j]);
            sum == e.get(t)
        });
        rows_ok && cols_ok && d.len() == self.rows.len() && e.len() == self.cols.len()
    }

    pub fn cost(&self, mu: &PseudoMetric) -> Rational {
        let mut c = self.w.iter().chain(&self.z).fold(Rational::zero(), |a, b| a + b);
        for (i, s) in self.rows.iter().enumerate() {
            for (j, t) in self.cols.iter().enumerate() {
                c += &self.h[i][j] * mu.get(*s, *t);
            }
        }
        c
    }
}

fn unexpected(e: LpError) -> ! {
    panic!("transport program is always feasible and bounded, solver reported: {e}")
}

/// The Kantorovich lifting as a transport program with unit-cost slacks:
/// minimize `Σ h·μ + Σ w + Σ z` with `Σ_j h_ij + w_i = d(s_i)` and
/// `Σ_i h_ij + z_j = e(t_j)`.
pub fn lift_primal(mu: &PseudoMetric, d: &Dist<usize>, e: &Dist<usize>) -> (Rational, TransportPlan) {
    let rows: Vec<usize> = d.support().copied().collect();
    let cols: Vec<usize> = e.support().copied().collect();
    let (p, q) = (rows.len(), cols.len());
    let h_var = |i: usize, j: usize| i * q + j;
    let w_var = |i: usize| p * q + i;
    let z_var = |j: usize| p * q + p + j;
    let nvars = p * q + p + q;

    let mut objective = vec![Rational::zero(); nvars];
    for (i, s) in rows.iter().enumerate() {
        for (j, t) in cols.iter().enumerate() {
            objective[h_var(i, j)] = mu.get(*s, *t).clone();
        }
        objective[w_var(i)] = Rational::one();
    }
    for j in 0..q {
        objective[z_var(j)] = Rational::one();
    }
    let mut lp = LinearProgram::new(Sense::Minimize, objective);
    for (i, s) in rows.iter().enumerate() {
        let mut c = vec![Rational::zero(); nvars];
        for j in 0..q {
            c[h_var(i, j)] = Rational::one();
        }
        c[w_var(i)] = Rational::one();
        lp.constrain(c, Relation::Eq, d.get(s));
    }
    for (j, t) in cols.iter().enumerate() {
        let mut c = vec![Rational::zero(); nvars];
        for i in 0..p {
            c[h_var(i, j)] = Rational::one();
        }
        c[z_var(j)] = Rational::one();
        lp.constrain(c, Relation::Eq, e.get(t));
    }
    let sol = solve_lp_exact(&lp).unwrap_or_else(|e| unexpected(e));
    let x = sol.assignment;
    let plan = TransportPlan {
        h: (0..p)
            .map(|i| (0..q).map(|j| x[h_var(i, j)].clone()).collect())
            .collect(),
        w: (0..p).map(|i| x[w_var(i)].clone()).collect(),
        z: (0..q).map(|j| x[z_var(j)].clone()).collect(),
        rows,
        cols,
    };
    (sol.value, plan)
}

/// The dual program: maximize `Σ a_s d(s) + Σ b_t e(t)` over free `a, b`
/// with `a_s ≤ 1`, `b_t ≤ 1` and `a_s + b_t ≤ μ(s, t)`.
pub fn lift_dual(mu: &PseudoMetric, d: &Dist<usize>, e: &Dist<usize>) -> Rational {
    let rows: Vec<usize> = d.support().copied().collect();
    let cols: Vec<usize> = e.support().copied().collect();
    let (p, q) = (rows.len(), cols.len());
    let mut objective: Vec<Rational> = rows.iter().map(|s| d.get(s)).collect();
    objective.extend(cols.iter().map(|t| e.get(t)));
    let mut lp = LinearProgram::new(Sense::Maximize, objective);
    for v in 0..p + q {
        lp.set_free(v);
        let mut c = vec![Rational::zero(); p + q];
        c[v] = Rational::one();
        lp.constrain(c, Relation::Le, Rational::one());
    }
    for (i, s) in rows.iter().enumerate() {
        for (j, t) in cols.iter().enumerate() {
            let mut c = vec![Rational::zero(); p + q];
            c[i] = Rational::one();
            c[p + j] = Rational::one();
            lp.constrain(c, Relation::Le, mu.get(*s, *t).clone());
        }
    }
    solve_lp_exact(&lp).unwrap_or_else(|e| unexpected(e)).value
}

/// The lifted distance, skipping the solver when the answer is immediate.
pub fn lift(mu: &PseudoMetric, d: &Dist<usize>, e: &Dist<usize>) -> Rational {
    match (d.len(), e.len()) {
        (0, 0) => Rational::zero(),
        (0, _) => e.weight(),
        (_, 0) => d.weight(),
        (1, 1) => {
            let (s, p) = d.iter().next().unwrap();
            let (t, q) = e.iter().next().unwrap();
            if p == q {
                p * mu.get(*s, *t)
            } else {
                lift_primal(mu, d, e).0
            }
        }
        _ => lift_primal(mu, d, e).0,
    }
}
