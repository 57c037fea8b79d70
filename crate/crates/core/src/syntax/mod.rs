//! Terms of the affine probabilistic λ-calculus with pairs: representation,
//! parsing, printing, affinity and simple-type checking, and the encoding of
//! pairs into the pure calculus.

mod affine;
mod parse;
mod pretty;
mod term;
mod theta;
mod types;

pub use affine::{check_affine, is_affine, is_program, AffinityError, TypingContext};
pub use parse::{binder_names, parse, rename_apart, SyntaxError};
pub use term::{Kind, Name, Term};
pub use theta::{encode_theta, encode_theta_trace};
pub use types::{typecheck, Type, TypeError, Unifier};

/// `M ⊕_p N` for a dyadic `p = 1/2^k`: behaves as `M` with probability
/// `1 - p` and as `N` with probability `p`.
///
/// `M` occurs once in the result. A selector term `T ⊕ (T ⊕ (... ⊕ F))` is
/// applied to two thunks, so the size grows linearly in `k` instead of
/// copying `M` into every branch. The two thunks sit on opposite sides of
/// an application, so `M` and `N` must not share free variables.
pub fn biased_choice(m: Term, n: Term, k: u32) -> Term {
    assert!(k >= 1, "biased choice needs p = 1/2^k with k >= 1");
    let unit = Term::identity();
    let pick_first = Term::abs(
        "a",
        Term::abs("b", Term::app(Term::var("a"), unit.clone())),
    );
    let pick_second = Term::abs(
        "a",
        Term::abs("b", Term::app(Term::var("b"), unit)),
    );
    let mut selector = pick_second;
    for _ in 0..k {
        selector = Term::choice(pick_first.clone(), selector);
    }
    let mut d = String::from("d");
    while m.occurs_free(&d) || n.occurs_free(&d) {
        d.push('\'');
    }
    Term::apps(
        selector,
        [Term::abs(d.as_str(), m), Term::abs(d.as_str(), n)],
    )
}
