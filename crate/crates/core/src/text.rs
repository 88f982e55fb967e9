//! Text formats: `.ssg` automaton files and element expressions.
//!
//! An automaton file declares the alphabet size and then one state per line:
//!
//! ```text
//! # Grigorchuk group
//! alphabet 2
//! a = (0 1) (1, 1)
//! b = e (a, c)
//! c = e (a, d)
//! d = e (1, b)
//! ```
//!
//! The permutation is `e`, cycle notation such as `(0 1)(2 3)`, or an image list
//! `perm [1 0 2]`. The final parenthesized group lists the section at each letter; `1` is the
//! identity and is never declared. `#` starts a comment.
//!
//! Element expressions use `*` for products, `^k` / `^-k` for powers and parentheses, with
//! powers binding tighter than products: `(a*b)^-1*c^2`.

use std::collections::HashMap;

use crate::error::{Diagnostic, Error, Result};
use crate::wreath::{is_reserved_name, Automaton, Element, Perm, StateSpec, Symbol, MAX_DEGREE};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Eq,
    Star,
    Caret,
    Minus,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Int(n) => format!("`{n}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::LBracket => "`[`".into(),
        Tok::RBracket => "`]`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eq => "`=`".into(),
        Tok::Star => "`*`".into(),
        Tok::Caret => "`^`".into(),
        Tok::Minus => "`-`".into(),
    }
}

/// Splits one line into tokens with 1-based columns.
fn lex(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, Diagnostic> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            '#' => break,
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => out.push((Tok::LParen, col)),
            ')' => out.push((Tok::RParen, col)),
            '[' => out.push((Tok::LBracket, col)),
            ']' => out.push((Tok::RBracket, col)),
            ',' => out.push((Tok::Comma, col)),
            '=' => out.push((Tok::Eq, col)),
            '*' => out.push((Tok::Star, col)),
            '^' => out.push((Tok::Caret, col)),
            '-' => out.push((Tok::Minus, col)),
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n = text
                    .parse()
                    .map_err(|_| Diagnostic::new(line_no, col, format!("number {text} too large")))?;
                out.push((Tok::Int(n), col));
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'')
                {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
                continue;
            }
            other => {
                return Err(Diagnostic::new(
                    line_no,
                    col,
                    format!("unexpected character {other:?}"),
                ))
            }
        }
        i += 1;
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn next(&mut self) -> Option<(&'a Tok, usize)> {
        let t = self.toks.get(self.pos).map(|(t, c)| (t, *c));
        self.pos += 1;
        t
    }

    fn err(&self, msg: impl Into<String>) -> Diagnostic {
        Diagnostic::new(self.line, self.col(), msg)
    }

    fn expect(&mut self, want: &Tok) -> Result<usize, Diagnostic> {
        match self.next() {
            Some((t, c)) if t == want => Ok(c),
            Some((t, c)) => Err(Diagnostic::new(
                self.line,
                c,
                format!("expected {}, found {}", describe(want), describe(t)),
            )),
            None => Err(Diagnostic::new(
                self.line,
                self.end_col,
                format!("expected {}, found end of line", describe(want)),
            )),
        }
    }
}

struct PendingState {
    name: String,
    perm: Perm,
    sections: Vec<(String, usize)>,
    line: usize,
}

fn parse_err(d: Diagnostic) -> Error {
    Error::Parse(d)
}

/// Parses an automaton file.
pub fn parse_automaton(text: &str) -> Result<Automaton> {
    let mut degree: Option<usize> = None;
    let mut pending: Vec<PendingState> = Vec::new();
    let mut declared: HashMap<String, usize> = HashMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = lex(line, line_no).map_err(parse_err)?;
        if toks.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            toks: &toks,
            pos: 0,
            line: line_no,
            end_col: line.chars().count() + 1,
        };
        match cur.next() {
            Some((Tok::Ident(kw), col)) if kw == "alphabet" => {
                if degree.is_some() {
                    return Err(parse_err(Diagnostic::new(
                        line_no,
                        col,
                        "alphabet declared twice",
                    )));
                }
                let (d, dcol) = match cur.next() {
                    Some((Tok::Int(d), c)) => (*d as usize, c),
                    _ => return Err(parse_err(cur.err("expected the alphabet size"))),
                };
                if d < 2 {
                    return Err(parse_err(Diagnostic::new(
                        line_no,
                        dcol,
                        format!("alphabet size must be at least 2, got {d}"),
                    )));
                }
                if d > MAX_DEGREE {
                    return Err(parse_err(Diagnostic::new(
                        line_no,
                        dcol,
                        format!("alphabet size {d} exceeds the supported maximum {MAX_DEGREE}"),
                    )));
                }
                if cur.peek().is_some() {
                    return Err(parse_err(cur.err("unexpected trailing input")));
                }
                degree = Some(d);
            }
            Some((Tok::Ident(name), col)) => {
                let d = degree.ok_or_else(|| {
                    parse_err(Diagnostic::new(
                        line_no,
                        col,
                        "state declared before `alphabet`",
                    ))
                })?;
                if is_reserved_name(name) {
                    return Err(parse_err(Diagnostic::new(
                        line_no,
                        col,
                        format!("state name `{name}` is reserved"),
                    )));
                }
                if let Some(prev) = declared.get(name) {
                    return Err(parse_err(Diagnostic::new(
                        line_no,
                        col,
                        format!("duplicate state {name} (first declared on line {prev})"),
                    )));
                }
                cur.expect(&Tok::Eq).map_err(parse_err)?;
                let perm = parse_perm(&mut cur, d).map_err(parse_err)?;
                let sections = parse_sections(&mut cur, d).map_err(parse_err)?;
                if cur.peek().is_some() {
                    return Err(parse_err(cur.err("unexpected trailing input")));
                }
                declared.insert(name.clone(), line_no);
                pending.push(PendingState {
                    name: name.clone(),
                    perm,
                    sections,
                    line: line_no,
                });
            }
            Some((t, col)) => {
                return Err(parse_err(Diagnostic::new(
                    line_no,
                    col,
                    format!("expected `alphabet` or a state name, found {}", describe(t)),
                )))
            }
            None => unreachable!(),
        }
    }
    let degree =
        degree.ok_or_else(|| parse_err(Diagnostic::new(1, 1, "missing `alphabet` line")))?;
    for st in &pending {
        for (target, col) in &st.sections {
            if target != "1" && !declared.contains_key(target) {
                return Err(parse_err(Diagnostic::new(
                    st.line,
                    *col,
                    format!("unknown state {target}"),
                )));
            }
        }
    }
    let specs = pending
        .into_iter()
        .map(|p| StateSpec {
            name: p.name,
            perm: p.perm,
            sections: p.sections.into_iter().map(|(t, _)| t).collect(),
        })
        .collect();
    Automaton::new(degree, specs)
}

fn parse_perm(cur: &mut Cursor<'_>, degree: usize) -> Result<Perm, Diagnostic> {
    let start_col = cur.col();
    match cur.peek() {
        Some(Tok::Ident(s)) if s == "e" => {
            cur.next();
            Ok(Perm::identity(degree))
        }
        Some(Tok::Ident(s)) if s == "perm" => {
            cur.next();
            cur.expect(&Tok::LBracket)?;
            let mut images = Vec::new();
            loop {
                match cur.next() {
                    Some((Tok::Int(x), _)) => images.push(*x),
                    Some((Tok::RBracket, _)) => break,
                    Some((t, c)) => {
                        return Err(Diagnostic::new(
                            cur.line,
                            c,
                            format!("malformed permutation: unexpected {}", describe(t)),
                        ))
                    }
                    None => return Err(cur.err("malformed permutation: missing `]`")),
                }
            }
            if images.len() != degree || images.iter().any(|&x| x as usize >= degree) {
                return Err(Diagnostic::new(
                    cur.line,
                    start_col,
                    format!("malformed permutation: need {degree} images in 0..{degree}"),
                ));
            }
            Perm::from_images(images.into_iter().map(|x| x as u8).collect())
                .map_err(|_| Diagnostic::new(cur.line, start_col, "malformed permutation: not a bijection"))
        }
        Some(Tok::LParen) => {
            let mut cycles: Vec<Vec<u8>> = Vec::new();
            // Cycle groups hold bare letters; the section group is the first one with a comma
            // or a name.
            while cur.peek() == Some(&Tok::LParen) && is_cycle_group(cur) {
                cur.next();
                let mut cycle = Vec::new();
                loop {
                    match cur.next() {
                        Some((Tok::Int(x), c)) => {
                            if *x as usize >= degree {
                                return Err(Diagnostic::new(
                                    cur.line,
                                    c,
                                    format!("malformed permutation: letter {x} out of range 0..{degree}"),
                                ));
                            }
                            cycle.push(*x as u8);
                        }
                        Some((Tok::RParen, _)) => break,
                        _ => unreachable!("checked by is_cycle_group"),
                    }
                }
                cycles.push(cycle);
            }
            if cycles.is_empty() {
                return Err(Diagnostic::new(
                    cur.line,
                    start_col,
                    "malformed permutation: expected `e`, `perm [..]` or cycles",
                ));
            }
            Perm::from_cycles(degree, &cycles).map_err(|e| {
                Diagnostic::new(cur.line, start_col, format!("malformed permutation: {e}"))
            })
        }
        _ => Err(cur.err("malformed permutation: expected `e`, `perm [..]` or cycles")),
    }
}

/// Whether the parenthesized group at the cursor contains only letters.
fn is_cycle_group(cur: &Cursor<'_>) -> bool {
    let mut i = cur.pos + 1;
    while let Some((t, _)) = cur.toks.get(i) {
        match t {
            Tok::Int(_) => i += 1,
            Tok::RParen => {
                // `(1)` alone could be a one-letter section list on a unary alphabet; those
                // are rejected earlier, so any all-letter group is a cycle unless it is last.
                return cur.toks.get(i + 1).is_some();
            }
            _ => return false,
        }
    }
    false
}

fn parse_sections(cur: &mut Cursor<'_>, degree: usize) -> Result<Vec<(String, usize)>, Diagnostic> {
    let open = cur.col();
    cur.expect(&Tok::LParen)?;
    let mut out = Vec::new();
    loop {
        match cur.next() {
            Some((Tok::Ident(name), c)) => out.push((name.clone(), c)),
            Some((Tok::Int(1), c)) => out.push(("1".to_string(), c)),
            Some((t, c)) => {
                return Err(Diagnostic::new(
                    cur.line,
                    c,
                    format!("expected a state name or `1`, found {}", describe(t)),
                ))
            }
            None => return Err(cur.err("unterminated section list")),
        }
        match cur.next() {
            Some((Tok::Comma, _)) => continue,
            Some((Tok::RParen, _)) => break,
            Some((t, c)) => {
                return Err(Diagnostic::new(
                    cur.line,
                    c,
                    format!("expected `,` or `)`, found {}", describe(t)),
                ))
            }
            None => return Err(cur.err("unterminated section list")),
        }
    }
    if out.len() != degree {
        return Err(Diagnostic::new(
            cur.line,
            open,
            format!("expected {degree} sections, found {}", out.len()),
        ));
    }
    Ok(out)
}

/// Parses an element expression over the states of `aut`; the result is freely reduced.
pub fn parse_element(expr: &str, aut: &Automaton) -> Result<Element> {
    if expr.contains('\n') {
        return Err(parse_err(Diagnostic::new(1, 1, "expression spans several lines")));
    }
    let toks = lex(expr, 1).map_err(parse_err)?;
    let mut cur = Cursor {
        toks: &toks,
        pos: 0,
        line: 1,
        end_col: expr.chars().count() + 1,
    };
    if cur.peek().is_none() {
        return Err(parse_err(cur.err("empty expression")));
    }
    let word = parse_product(&mut cur, aut).map_err(parse_err)?;
    if let Some(t) = cur.peek() {
        return Err(parse_err(cur.err(format!("unexpected {}", describe(t)))));
    }
    Ok(aut.element(&word))
}

fn parse_product(cur: &mut Cursor<'_>, aut: &Automaton) -> Result<Vec<Symbol>, Diagnostic> {
    let mut word = parse_power(cur, aut)?;
    while cur.peek() == Some(&Tok::Star) {
        cur.next();
        word.extend(parse_power(cur, aut)?);
    }
    Ok(word)
}

fn parse_power(cur: &mut Cursor<'_>, aut: &Automaton) -> Result<Vec<Symbol>, Diagnostic> {
    let mut word = parse_atom(cur, aut)?;
    while cur.peek() == Some(&Tok::Caret) {
        cur.next();
        let negative = if cur.peek() == Some(&Tok::Minus) {
            cur.next();
            true
        } else {
            false
        };
        let k = match cur.next() {
            Some((Tok::Int(k), _)) if *k <= 1 << 20 => *k as usize,
            Some((_, c)) => return Err(Diagnostic::new(1, c, "malformed power")),
            None => return Err(cur.err("malformed power: missing exponent")),
        };
        let base: Vec<Symbol> = if negative {
            word.iter().rev().map(|s| s.inv()).collect()
        } else {
            word
        };
        word = Vec::with_capacity(base.len() * k);
        for _ in 0..k {
            word.extend_from_slice(&base);
        }
    }
    Ok(word)
}

fn parse_atom(cur: &mut Cursor<'_>, aut: &Automaton) -> Result<Vec<Symbol>, Diagnostic> {
    match cur.next() {
        Some((Tok::Ident(name), c)) => match aut.state_index(name) {
            Some(i) => Ok(vec![Symbol::new(i, false)]),
            None => Err(Diagnostic::new(1, c, format!("unknown state {name}"))),
        },
        Some((Tok::Int(1), _)) => Ok(Vec::new()),
        Some((Tok::LParen, _)) => {
            let w = parse_product(cur, aut)?;
            cur.expect(&Tok::RParen)?;
            Ok(w)
        }
        Some((t, c)) => Err(Diagnostic::new(
            1,
            c,
            format!("expected a state name, `1` or `(`, found {}", describe(t)),
        )),
        None => Err(cur.err("unexpected end of expression")),
    }
}
