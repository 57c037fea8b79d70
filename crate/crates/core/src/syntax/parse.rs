//! Surface syntax:
//!
//! ```text
//! term := "\" ident "." term
//!       | "let" "<" ident "," ident ">" "=" term "in" term
//!       | app ["(+)" term]
//! app  := atom atom*          (left-associative)
//! atom := ident | "I" | "omega" | "(" term ")" | "<" term "," term ">"
//! ```
//!
//! `I` is sugar for `\x. x`. Binders are renamed apart after parsing so that
//! no two binders share a name and no binder shadows a free variable.

use std::collections::HashSet;

use thiserror::Error;

use super::term::{Kind, Name, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {pos}: {message}")]
pub struct SyntaxError {
    pub pos: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Lambda,
    Dot,
    LParen,
    RParen,
    LAngle,
    RAngle,
    Comma,
    Choice,
    Equals,
    Ident(String),
    Let,
    In,
    Omega,
    Id,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Lambda => "'\\'".into(),
        Tok::Dot => "'.'".into(),
        Tok::LParen => "'('".into(),
        Tok::RParen => "')'".into(),
        Tok::LAngle => "'<'".into(),
        Tok::RAngle => "'>'".into(),
        Tok::Comma => "','".into(),
        Tok::Choice => "'(+)'".into(),
        Tok::Equals => "'='".into(),
        Tok::Ident(s) => format!("identifier '{s}'"),
        Tok::Let => "'let'".into(),
        Tok::In => "'in'".into(),
        Tok::Omega => "'omega'".into(),
        Tok::Id => "'I'".into(),
    }
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>, SyntaxError> {
    let mut out = Vec::new();
    let mut it = src.char_indices().peekable();
    while let Some(&(pos, c)) = it.peek() {
        if c.is_whitespace() {
            it.next();
            continue;
        }
        if src[pos..].starts_with("(+)") {
            out.push((pos, Tok::Choice));
            it.next();
            it.next();
            it.next();
            continue;
        }
        let simple = match c {
            '\\' | 'λ' => Some(Tok::Lambda),
            '.' => Some(Tok::Dot),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '<' | '⟨' => Some(Tok::LAngle),
            '>' | '⟩' => Some(Tok::RAngle),
            ',' => Some(Tok::Comma),
            '=' => Some(Tok::Equals),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((pos, t));
            it.next();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = pos;
            let mut end = pos;
            while let Some(&(p, d)) = it.peek() {
                if d.is_ascii_alphanumeric() || d == '_' || d == '\'' {
                    end = p + d.len_utf8();
                    it.next();
                } else {
                    break;
                }
            }
            let word = &src[start..end];
            let tok = match word {
                "let" => Tok::Let,
                "in" => Tok::In,
                "omega" => Tok::Omega,
                "I" => Tok::Id,
                _ => Tok::Ident(word.to_string()),
            };
            out.push((start, tok));
            continue;
        }
        return Err(SyntaxError {
            pos,
            message: format!("unexpected character '{c}'"),
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.at += 1;
                Ok(())
            }
            Some(t) => {
                let msg = format!("expected {}, found {}", describe(&want), describe(t));
                self.error(msg)
            }
            None => self.error(format!("expected {}, found end of input", describe(&want))),
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.at += 1;
                Ok(s)
            }
            Some(t) => {
                let msg = format!("expected identifier, found {}", describe(t));
                self.error(msg)
            }
            None => self.error("expected identifier, found end of input"),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.peek() {
            Some(Tok::Lambda) => {
                self.at += 1;
                let x = self.ident()?;
                self.expect(Tok::Dot)?;
                let body = self.term()?;
                Ok(Term::abs(x, body))
            }
            Some(Tok::Let) => {
                self.at += 1;
                self.expect(Tok::LAngle)?;
                let x = self.ident()?;
                self.expect(Tok::Comma)?;
                let y = self.ident()?;
                if x == y {
                    return self.error(format!("let binds '{x}' twice"));
                }
                self.expect(Tok::RAngle)?;
                self.expect(Tok::Equals)?;
                let m = self.term()?;
                self.expect(Tok::In)?;
                let n = self.term()?;
                Ok(Term::let_pair(x, y, m, n))
            }
            _ => {
                let l = self.application()?;
                if self.peek() == Some(&Tok::Choice) {
                    self.at += 1;
                    let r = self.term()?;
                    Ok(Term::choice(l, r))
                } else {
                    Ok(l)
                }
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Ident(_) | Tok::Id | Tok::Omega | Tok::LParen | Tok::LAngle)
        )
    }

    fn application(&mut self) -> Result<Term, SyntaxError> {
        let mut t = self.atom()?;
        loop {
            if self.starts_atom() {
                let a = self.atom()?;
                t = Term::app(t, a);
            } else if matches!(self.peek(), Some(Tok::Lambda | Tok::Let)) {
                // a trailing binder extends to the right as the last argument
                let a = self.term()?;
                return Ok(Term::app(t, a));
            } else {
                return Ok(t);
            }
        }
    }

    fn atom(&mut self) -> Result<Term, SyntaxError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.at += 1;
                Ok(Term::var(s))
            }
            Some(Tok::Id) => {
                self.at += 1;
                Ok(Term::identity())
            }
            Some(Tok::Omega) => {
                self.at += 1;
                Ok(Term::omega())
            }
            Some(Tok::LParen) => {
                self.at += 1;
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Some(Tok::LAngle) => {
                self.at += 1;
                let l = self.term()?;
                self.expect(Tok::Comma)?;
                let r = self.term()?;
                self.expect(Tok::RAngle)?;
                Ok(Term::pair(l, r))
            }
            Some(t) => self.error(format!("expected a term, found {}", describe(&t))),
            None => self.error("expected a term, found end of input"),
        }
    }
}

/// Parse a term and rename its binders apart.
pub fn parse(text: &str) -> Result<Term, SyntaxError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
    };
    let t = p.term()?;
    if let Some(tok) = p.peek() {
        let msg = format!("unexpected {} after term", describe(tok));
        return p.error(msg);
    }
    Ok(rename_apart(&t))
}

/// Rename binders so that all binders are pairwise distinct and distinct
/// from the free variables. Names are kept whenever possible.
pub fn rename_apart(t: &Term) -> Term {
    let all = t.all_names();
    let mut taken: HashSet<Name> = t.free_vars().into_iter().collect();
    let mut r = Renamer {
        all,
        taken: &mut taken,
    };
    r.walk(t, &mut Vec::new())
}

struct Renamer<'a> {
    all: HashSet<Name>,
    taken: &'a mut HashSet<Name>,
}

impl Renamer<'_> {
    fn fresh(&mut self, base: &Name) -> Name {
        if !self.taken.contains(base) {
            self.taken.insert(base.clone());
            return base.clone();
        }
        let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
        let stem = if stem.is_empty() { "v" } else { stem };
        let mut k = 1usize;
        loop {
            let cand: Name = format!("{stem}{k}").into();
            if !self.taken.contains(&cand) && !self.all.contains(&cand) {
                self.taken.insert(cand.clone());
                return cand;
            }
            k += 1;
        }
    }

    fn walk(&mut self, t: &Term, env: &mut Vec<(Name, Name)>) -> Term {
        match t.kind() {
            Kind::Var(x) => match env.iter().rev().find(|(from, _)| from == x) {
                Some((_, to)) => Term::var(to.clone()),
                None => t.clone(),
            },
            Kind::Omega => t.clone(),
            Kind::Abs(x, b) => {
                let nx = self.fresh(x);
                env.push((x.clone(), nx.clone()));
                let nb = self.walk(b, env);
                env.pop();
                Term::abs(nx, nb)
            }
            Kind::App(l, r) => Term::app(self.walk(l, env), self.walk(r, env)),
            Kind::Choice(l, r) => Term::choice(self.walk(l, env), self.walk(r, env)),
            Kind::Pair(l, r) => Term::pair(self.walk(l, env), self.walk(r, env)),
            Kind::LetPair(x, y, m, n) => {
                let nm = self.walk(m, env);
                let nx = self.fresh(x);
                let ny = self.fresh(y);
                env.push((x.clone(), nx.clone()));
                env.push((y.clone(), ny.clone()));
                let nn = self.walk(n, env);
                env.pop();
                env.pop();
                Term::let_pair(nx, ny, nm, nn)
            }
        }
    }
}

/// Collect binder names; used by tests to check the renaming invariant.
pub fn binder_names(t: &Term) -> Vec<Name> {
    let mut out = Vec::new();
    fn go(t: &Term, out: &mut Vec<Name>) {
        match t.kind() {
            Kind::Var(_) | Kind::Omega => {}
            Kind::Abs(x, b) => {
                out.push(x.clone());
                go(b, out);
            }
            Kind::App(l, r) | Kind::Choice(l, r) | Kind::Pair(l, r) => {
                go(l, out);
                go(r, out);
            }
            Kind::LetPair(x, y, m, n) => {
                out.push(x.clone());
                out.push(y.clone());
                go(m, out);
                go(n, out);
            }
        }
    }
    go(t, &mut out);
    out
}
