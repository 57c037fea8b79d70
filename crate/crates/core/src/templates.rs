//! Finite families of open terms used to instantiate observation actions:
//! tensor bodies over `x, y` and open values for tuple applications.

use std::collections::HashSet;

use crate::syntax::{Kind, Name, Term};

/// Variable names bound by a tensor action body.
pub const TENSOR_VARS: (&str, &str) = ("x", "y");

/// Default size cap for generated templates.
pub const DEFAULT_TEMPLATE_SIZE: u64 = 6;

#[derive(Clone)]
enum Atom {
    Var(usize),
    Const(Term),
}

/// Every applicative combination `a₁ a₂ …` (arbitrary bracketing) of the
/// given atoms whose size is at most `max_size`. Each variable is used at
/// most once; constants may repeat. Output is ordered by size and then by
/// construction order, with alpha-equivalent duplicates dropped.
pub fn applicative_combinations(vars: &[Name], constants: &[Term], max_size: u64) -> Vec<Term> {
    assert!(vars.len() < 64);
    let mut atoms: Vec<(Atom, u64)> = vars
        .iter()
        .enumerate()
        .map(|(i, _)| (Atom::Var(i), 1))
        .collect();
    atoms.extend(constants.iter().map(|c| (Atom::Const(c.clone()), c.size())));

    // by_size[s] holds (term, mask of used variables)
    let cap = max_size as usize;
    let mut by_size: Vec<Vec<(Term, u64)>> = vec![Vec::new(); cap + 1];
    for (atom, s) in &atoms {
        let s = *s as usize;
        if s > cap {
            continue;
        }
        let entry = match atom {
            Atom::Var(i) => (Term::var(vars[*i].clone()), 1u64 << i),
            Atom::Const(c) => (c.clone(), 0),
        };
        by_size[s].push(entry);
    }
    for s in 1..=cap {
        let mut fresh = Vec::new();
        for a in 1..s {
            let b = s - a;
            for (f, fm) in &by_size[a] {
                for (g, gm) in &by_size[b] {
                    if fm & gm == 0 {
                        fresh.push((Term::app(f.clone(), g.clone()), fm | gm));
                    }
                }
            }
        }
        by_size[s].extend(fresh);
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for bucket in by_size {
        for (t, _) in bucket {
            if seen.insert(t.clone()) {
                out.push(t);
            }
        }
    }
    out
}

/// Bodies `L` for the tensor action `⊗L`, with free variables among `x, y`.
pub fn tensor_templates(universe: &[Term], max_size: u64) -> Vec<Term> {
    let vars: Vec<Name> = vec![TENSOR_VARS.0.into(), TENSOR_VARS.1.into()];
    applicative_combinations(&vars, universe, max_size)
}

/// Name of the tuple hole bound to component `j` (1-based).
pub fn component_var(j: usize) -> Name {
    format!("x_{j}").into()
}

fn hole_name(k: usize) -> Name {
    format!("h{k}").into()
}

/// An open value with `holes` canonical holes `h1, h2, …`, numbered in
/// order of first occurrence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenValueTemplate {
    pub term: Term,
    pub holes: usize,
}

impl OpenValueTemplate {
    /// Replace hole `hk` by the component variable `x_{targets[k-1]}`.
    pub fn instantiate(&self, targets: &[usize]) -> Term {
        assert_eq!(targets.len(), self.holes);
        let mut t = self.term.clone();
        for (k, j) in targets.iter().enumerate() {
            t = t.rename_free(&hole_name(k + 1), &component_var(*j));
        }
        t
    }
}

fn holes_in_order(t: &Term, out: &mut Vec<Name>) {
    match t.kind() {
        Kind::Var(x) => {
            if x.starts_with('h') && !out.contains(x) {
                out.push(x.clone());
            }
        }
        Kind::App(f, a) => {
            holes_in_order(f, out);
            holes_in_order(a, out);
        }
        Kind::Abs(_, b) => holes_in_order(b, out),
        _ => {}
    }
}

/// Open values for tuple applications: the closed universe values, a single
/// hole, and `λy. D` for applicative combinations `D` of `y`, holes and
/// universe values with `size(λy. D) ≤ max_size`.
pub fn open_value_templates(universe: &[Term], max_size: u64) -> Vec<OpenValueTemplate> {
    let mut out: Vec<OpenValueTemplate> = universe
        .iter()
        .filter(|v| v.is_value())
        .map(|v| OpenValueTemplate {
            term: v.clone(),
            holes: 0,
        })
        .collect();
    out.push(OpenValueTemplate {
        term: Term::var(hole_name(1)),
        holes: 1,
    });
    if max_size < 2 {
        return out;
    }
    let body_cap = max_size - 1;
    let mut vars: Vec<Name> = vec!["y".into()];
    vars.extend((1..=body_cap as usize).map(hole_name));
    for d in applicative_combinations(&vars, universe, body_cap) {
        let mut order = Vec::new();
        holes_in_order(&d, &mut order);
        let canonical = order
            .iter()
            .enumerate()
            .all(|(k, h)| **h == *hole_name(k + 1));
        if !canonical {
            continue;
        }
        out.push(OpenValueTemplate {
            term: Term::abs("y", d),
            holes: order.len(),
        });
    }
    out
}
