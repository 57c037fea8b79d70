//! Exact rational linear programming: two-phase simplex on a dense tableau
//! with Bland's pivoting rule.

use std::fmt::Write as _;

use log::{log_enabled, trace, Level};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::dist::{fmt_rational, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

/// `optimize c·x` subject to the constraints. Variables are non-negative
/// unless marked free.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
    pub free: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpSolution {
    pub value: Rational,
    pub assignment: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("constraint {0} has {1} coefficients, expected {2}")]
    Shape(usize, usize, usize),
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<Rational>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            constraints: Vec::new(),
            free: vec![false; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }
}

struct Tableau {
    // rows[r] = coefficients over every column, then the right-hand side
    rows: Vec<Vec<Rational>>,
    basis: Vec<usize>,
    // reduced costs over every column, then minus the objective value
    cost: Vec<Rational>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Rational {
        &self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v /= &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for (v, pv) in self.cost.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        self.basis[r] = c;
        self.dump("pivot");
    }

    fn set_objective(&mut self, c: &[Rational]) {
        self.cost = c.to_vec();
        self.cost.resize(self.cols + 1, Rational::zero());
        for r in 0..self.rows.len() {
            let b = self.basis[r];
            let f = self.cost[b].clone();
            if f.is_zero() {
                continue;
            }
            for (v, rv) in self.cost.iter_mut().zip(&self.rows[r]) {
                *v -= &f * rv;
            }
        }
    }

    /// Minimize the current cost row, entering only columns in `allowed`.
    fn run(&mut self, allowed: usize) -> Result<(), LpError> {
        loop {
            // Bland: lowest-index improving column, lowest-index basic variable on ties
            let Some(c) = (0..allowed).find(|&j| self.cost[j].is_negative()) else {
                return Ok(());
            };
            let mut leave: Option<(usize, Rational)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => {
                        ratio < *lratio || (ratio == *lratio && self.basis[r] < self.basis[*lr])
                    }
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Err(LpError::Unbounded),
            }
        }
    }

    fn dump(&self, what: &str) {
        if !log_enabled!(Level::Trace) {
            return;
        }
        let mut s = format!("tableau after {what}:\n");
        for (r, row) in self.rows.iter().enumerate() {
            let _ = write!(s, "  [x{}]", self.basis[r]);
            for v in row {
                let _ = write!(s, " {}", fmt_rational(v));
            }
            s.push('\n');
        }
        s.push_str("  cost");
        for v in &self.cost {
            let _ = write!(s, " {}", fmt_rational(v));
        }
        trace!("{s}");
    }
}

/// Solve exactly. Returns an optimal basic solution in the original variables.
pub fn solve_lp_exact(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let n = lp.num_vars();
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(LpError::Shape(i, c.coeffs.len(), n));
        }
    }

    // Column layout: one column per variable, a second (negated) column for
    // each free variable, one slack per inequality, one artificial per row.
    let mut neg_col = vec![None; n];
    let mut cols = n;
    for (v, free) in lp.free.iter().enumerate() {
        if *free {
            neg_col[v] = Some(cols);
            cols += 1;
        }
    }
    let mut slack_col = vec![None; lp.constraints.len()];
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.relation != Relation::Eq {
            slack_col[i] = Some(cols);
            cols += 1;
        }
    }
    let structural = cols;
    let m = lp.constraints.len();
    cols += m;

    let mut rows = Vec::with_capacity(m);
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![Rational::zero(); cols + 1];
        for (v, a) in c.coeffs.iter().enumerate() {
            row[v] = a.clone();
            if let Some(nc) = neg_col[v] {
                row[nc] = -a;
            }
        }
        match (c.relation, slack_col[i]) {
            (Relation::Le, Some(s)) => row[s] = Rational::one(),
            (Relation::Ge, Some(s)) => row[s] = -Rational::one(),
            _ => {}
        }
        row[cols] = c.rhs.clone();
        if c.rhs.is_negative() {
            for v in row.iter_mut() {
                *v = -&*v;
            }
        }
        row[structural + i] = Rational::one();
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        basis: (structural..structural + m).collect(),
        cost: Vec::new(),
        cols,
    };

    // Phase one: minimize the sum of artificials.
    let mut phase_one = vec![Rational::zero(); cols];
    for v in phase_one.iter_mut().skip(structural) {
        *v = Rational::one();
    }
    t.set_objective(&phase_one);
    t.dump("phase one setup");
    t.run(cols)?;
    if !t.cost[cols].is_zero() {
        return Err(LpError::Infeasible);
    }

    // Drive artificials out of the basis; rows where that is impossible are
    // redundant and dropped.
    let mut r = 0;
    while r < t.rows.len() {
        if t.basis[r] >= structural {
            match (0..structural).find(|&j| !t.rows[r][j].is_zero()) {
                Some(j) => t.pivot(r, j),
                None => {
                    t.rows.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase two on the original objective, artificials barred from entering.
    let sign = match lp.sense {
        Sense::Minimize => Rational::one(),
        Sense::Maximize => -Rational::one(),
    };
    let mut obj = vec![Rational::zero(); cols];
    for (v, c) in lp.objective.iter().enumerate() {
        obj[v] = &sign * c;
        if let Some(nc) = neg_col[v] {
            obj[nc] = -&obj[v];
        }
    }
    t.set_objective(&obj);
    t.dump("phase two setup");
    t.run(structural)?;

    let mut column_value = vec![Rational::zero(); cols];
    for (r, b) in t.basis.iter().enumerate() {
        column_value[*b] = t.rhs(r).clone();
    }
    let assignment: Vec<Rational> = (0..n)
        .map(|v| match neg_col[v] {
            Some(nc) => &column_value[v] - &column_value[nc],
            None => column_value[v].clone(),
        })
        .collect();
    let value = lp
        .objective
        .iter()
        .zip(&assignment)
        .fold(Rational::zero(), |acc, (c, x)| acc + c * x);
    Ok(LpSolution { value, assignment })
}
