use std::fmt::{self, Write};

use super::term::{Kind, Term};

// Three precedence levels: binders and choice at the top, application in
// the middle, atoms at the bottom. `(+)` is right-associative and binds
// looser than application.

fn top(t: &Term, out: &mut String) -> fmt::Result {
    match t.kind() {
        Kind::Abs(x, b) => {
            write!(out, "\\{x}. ")?;
            top(b, out)
        }
        Kind::LetPair(x, y, m, n) => {
            write!(out, "let <{x}, {y}> = ")?;
            top(m, out)?;
            out.push_str(" in ");
            top(n, out)
        }
        Kind::Choice(l, r) => {
            application(l, out)?;
            out.push_str(" (+) ");
            top(r, out)
        }
        _ => application(t, out),
    }
}

fn application(t: &Term, out: &mut String) -> fmt::Result {
    match t.kind() {
        Kind::App(f, a) => {
            application(f, out)?;
            out.push(' ');
            atom(a, out)
        }
        _ => atom(t, out),
    }
}

fn atom(t: &Term, out: &mut String) -> fmt::Result {
    match t.kind() {
        Kind::Var(x) => write!(out, "{x}"),
        Kind::Omega => write!(out, "omega"),
        Kind::Pair(l, r) => {
            out.push('<');
            top(l, out)?;
            out.push_str(", ");
            top(r, out)?;
            out.push('>');
            Ok(())
        }
        _ => {
            out.push('(');
            top(t, out)?;
            out.push(')');
            Ok(())
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        top(self, &mut s)?;
        f.write_str(&s)
    }
}
