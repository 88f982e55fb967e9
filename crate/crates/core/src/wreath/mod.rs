//! Finite-state automorphisms of the `d`-ary rooted tree, presented by a wreath recursion.
//!
//! Composition convention, used by every formula in this crate:
//!
//! ```text
//! (g * h)(v) = g(h(v))
//! ```
//!
//! so the word `[s1, s2, ..., sk]` acts by applying `sk` first and `s1` last, and sections of a
//! product obey `(g * h)|_v = g|_{h(v)} * h|_v`.
//!
//! Inverse states are never stored. The inverse of a state `s` acts by `perm_s^{-1}` and has
//! sections `s^{-1}|_x = (s|_{perm_s^{-1}(x)})^{-1}`.

pub(crate) mod action;
pub(crate) mod machine;

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use action::LevelPerm;
pub use machine::{Equality, MachineNode, SectionMachine};

/// A letter of the alphabet `0..d`.
pub type Letter = u8;

/// Largest supported alphabet.
pub const MAX_DEGREE: usize = 64;

/// A permutation of the alphabet, stored as its image list.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct Perm(Vec<Letter>);

impl Perm {
    pub fn identity(degree: usize) -> Self {
        Perm((0..degree as u8).collect())
    }

    /// Builds a permutation from an image list, checking that it is a bijection.
    pub fn from_images(images: Vec<Letter>) -> Result<Self> {
        let d = images.len();
        let mut seen = vec![false; d];
        for &x in &images {
            let x = x as usize;
            if x >= d || seen[x] {
                return Err(Error::InvalidAutomaton(format!(
                    "image list {images:?} is not a permutation of 0..{d}"
                )));
            }
            seen[x] = true;
        }
        Ok(Perm(images))
    }

    /// Builds a permutation of `0..degree` from disjoint cycles.
    pub fn from_cycles(degree: usize, cycles: &[Vec<Letter>]) -> Result<Self> {
        let mut images: Vec<Letter> = (0..degree as u8).collect();
        let mut used = vec![false; degree];
        for cycle in cycles {
            for (k, &x) in cycle.iter().enumerate() {
                let xi = x as usize;
                if xi >= degree {
                    return Err(Error::LetterOutOfRange {
                        letter: xi,
                        degree,
                    });
                }
                if used[xi] {
                    return Err(Error::InvalidAutomaton(format!(
                        "letter {x} appears in more than one cycle"
                    )));
                }
                used[xi] = true;
                images[xi] = cycle[(k + 1) % cycle.len()];
            }
        }
        Ok(Perm(images))
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn images(&self) -> &[Letter] {
        &self.0
    }

    #[inline]
    pub fn apply(&self, x: Letter) -> Letter {
        self.0[x as usize]
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (x, &y) in self.0.iter().enumerate() {
            inv[y as usize] = x as u8;
        }
        Perm(inv)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Perm) -> Perm {
        Perm(other.0.iter().map(|&x| self.0[x as usize]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(x, &y)| x == y as usize)
    }

    pub fn fixes(&self, x: Letter) -> bool {
        self.0[x as usize] == x
    }

    /// Disjoint cycles including fixed points, each starting at its smallest letter,
    /// ordered by that letter.
    pub fn all_cycles(&self) -> Vec<Vec<Letter>> {
        let mut seen = vec![false; self.0.len()];
        let mut cycles = Vec::new();
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x as u8);
                x = self.0[x] as usize;
            }
            cycles.push(cycle);
        }
        cycles
    }

    /// Non-trivial cycles only, in the canonical order of [`Perm::all_cycles`].
    pub fn cycles(&self) -> Vec<Vec<Letter>> {
        self.all_cycles()
            .into_iter()
            .filter(|c| c.len() > 1)
            .collect()
    }
}

impl fmt::Display for Perm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return f.write_str("e");
        }
        for c in cycles {
            let parts: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            write!(f, "({})", parts.join(" "))?;
        }
        Ok(())
    }
}

/// A vertex of the tree: a finite word over the alphabet. The empty word is the root.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize)]
pub struct Vertex(pub Vec<Letter>);

impl Vertex {
    pub fn root() -> Self {
        Vertex(Vec::new())
    }

    pub fn level(&self) -> usize {
        self.0.len()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// Big-endian rank: `x1 x2 ... xn` has rank `sum x_k d^(n-k)`.
    pub fn rank(&self, degree: usize) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &x| acc * degree + x as usize)
    }

    /// Inverse of [`Vertex::rank`].
    pub fn from_rank(mut rank: usize, level: usize, degree: usize) -> Self {
        let mut letters = vec![0u8; level];
        for slot in letters.iter_mut().rev() {
            *slot = (rank % degree) as u8;
            rank /= degree;
        }
        Vertex(letters)
    }

    /// Parses a vertex such as `"0110"`. Alphabets larger than 10 use dot-separated letters.
    pub fn parse(text: &str, degree: usize) -> Result<Self> {
        let text = text.trim();
        let letters: Vec<usize> = if text.is_empty() || text == "ε" {
            Vec::new()
        } else if text.contains('.') || degree > 10 {
            text.split('.')
                .map(|p| {
                    p.trim().parse::<usize>().map_err(|_| {
                        Error::InvalidAutomaton(format!("malformed vertex {text:?}"))
                    })
                })
                .collect::<Result<_>>()?
        } else {
            text.chars()
                .map(|c| {
                    c.to_digit(10).map(|x| x as usize).ok_or_else(|| {
                        Error::InvalidAutomaton(format!("malformed vertex {text:?}"))
                    })
                })
                .collect::<Result<_>>()?
        };
        for &x in &letters {
            if x >= degree {
                return Err(Error::LetterOutOfRange { letter: x, degree });
            }
        }
        Ok(Vertex(letters.into_iter().map(|x| x as u8).collect()))
    }

    pub fn display(&self, degree: usize) -> String {
        if self.0.is_empty() {
            return "ε".to_string();
        }
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        if degree > 10 {
            parts.join(".")
        } else {
            parts.concat()
        }
    }
}

impl From<&[Letter]> for Vertex {
    fn from(letters: &[Letter]) -> Self {
        Vertex(letters.to_vec())
    }
}

/// A state or the inverse of a state: one letter of an element word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize)]
pub struct Symbol {
    pub state: u32,
    pub inverse: bool,
}

impl Symbol {
    pub fn new(state: usize, inverse: bool) -> Self {
        Symbol {
            state: state as u32,
            inverse,
        }
    }

    pub fn inv(self) -> Self {
        Symbol {
            state: self.state,
            inverse: !self.inverse,
        }
    }

    /// Dense index `2 * state + inverse`, used for per-symbol tables.
    #[inline]
    pub fn index(self) -> usize {
        2 * self.state as usize + self.inverse as usize
    }
}

/// Where a state goes when reading a letter.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub enum Target {
    Identity,
    State(usize),
}

#[derive(Clone, Debug)]
pub struct State {
    pub name: String,
    pub perm: Perm,
    pub(crate) inv_perm: Perm,
    pub sections: Vec<Target>,
}

/// Declarative description of a state, with sections given by name (`"1"` is the identity).
#[derive(Clone, Debug)]
pub struct StateSpec {
    pub name: String,
    pub perm: Perm,
    pub sections: Vec<String>,
}

/// A finite wreath recursion over the alphabet `0..degree`.
#[derive(Clone, Debug)]
pub struct Automaton {
    degree: usize,
    states: Vec<State>,
    by_name: HashMap<String, usize>,
    trivial: Vec<bool>,
    content_hash: [u8; 32],
}

pub const IDENTITY_NAME: &str = "1";

pub(crate) fn is_reserved_name(name: &str) -> bool {
    matches!(name, "1" | "e" | "perm" | "alphabet")
}

impl Automaton {
    pub fn new(degree: usize, specs: Vec<StateSpec>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::InvalidAutomaton(format!(
                "alphabet size must be at least 2, got {degree}"
            )));
        }
        if degree > MAX_DEGREE {
            return Err(Error::InvalidAutomaton(format!(
                "alphabet size {degree} exceeds the supported maximum {MAX_DEGREE}"
            )));
        }
        let mut by_name = HashMap::new();
        for (i, s) in specs.iter().enumerate() {
            if is_reserved_name(&s.name) {
                return Err(Error::InvalidAutomaton(format!(
                    "state name {:?} is reserved",
                    s.name
                )));
            }
            if by_name.insert(s.name.clone(), i).is_some() {
                return Err(Error::InvalidAutomaton(format!(
                    "duplicate state {}",
                    s.name
                )));
            }
        }
        let mut states = Vec::with_capacity(specs.len());
        for s in specs {
            if s.perm.degree() != degree {
                return Err(Error::InvalidAutomaton(format!(
                    "permutation of state {} has degree {}, expected {degree}",
                    s.name,
                    s.perm.degree()
                )));
            }
            if s.sections.len() != degree {
                return Err(Error::InvalidAutomaton(format!(
                    "state {} has {} sections, expected {degree}",
                    s.name,
                    s.sections.len()
                )));
            }
            let sections = s
                .sections
                .iter()
                .map(|t| {
                    if t == IDENTITY_NAME {
                        Ok(Target::Identity)
                    } else {
                        by_name
                            .get(t)
                            .map(|&i| Target::State(i))
                            .ok_or_else(|| Error::InvalidAutomaton(format!("unknown state {t}")))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let inv_perm = s.perm.inverse();
            states.push(State {
                name: s.name,
                perm: s.perm,
                inv_perm,
                sections,
            });
        }
        let trivial = trivial_states(&states);
        let mut aut = Automaton {
            degree,
            states,
            by_name,
            trivial,
            content_hash: [0; 32],
        };
        aut.content_hash = Sha256::digest(aut.to_string().as_bytes()).into();
        Ok(aut)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Whether the state acts as the identity automorphism.
    pub fn is_trivial_state(&self, state: usize) -> bool {
        self.trivial[state]
    }

    /// Indices of states that act non-trivially, in declaration order.
    pub fn nontrivial_states(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&i| !self.trivial[i])
            .collect()
    }

    /// SHA-256 of the canonical serialization.
    pub fn content_hash(&self) -> [u8; 32] {
        self.content_hash
    }

    pub fn content_hash_hex(&self) -> String {
        self.content_hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub(crate) fn fingerprint(&self) -> u64 {
        u64::from_le_bytes(self.content_hash[..8].try_into().unwrap())
    }

    /// All symbols in shortlex order: `s0, s0^-1, s1, s1^-1, ...`.
    pub fn symbols(&self) -> Vec<Symbol> {
        (0..self.states.len())
            .flat_map(|s| [Symbol::new(s, false), Symbol::new(s, true)])
            .collect()
    }

    pub fn symbol_name(&self, sym: Symbol) -> String {
        let name = &self.states[sym.state as usize].name;
        if sym.inverse {
            format!("{name}^-1")
        } else {
            name.clone()
        }
    }

    /// Image of a letter under a symbol.
    #[inline]
    pub fn symbol_image(&self, sym: Symbol, x: Letter) -> Letter {
        let st = &self.states[sym.state as usize];
        if sym.inverse {
            st.inv_perm.apply(x)
        } else {
            st.perm.apply(x)
        }
    }

    /// Section of a symbol at a letter; `None` is the identity.
    #[inline]
    pub fn symbol_section(&self, sym: Symbol, x: Letter) -> Option<Symbol> {
        let st = &self.states[sym.state as usize];
        let (letter, inverse) = if sym.inverse {
            (st.inv_perm.apply(x), true)
        } else {
            (x, false)
        };
        match st.sections[letter as usize] {
            Target::Identity => None,
            Target::State(i) => Some(Symbol::new(i, inverse)),
        }
    }

    pub fn symbol_perm(&self, sym: Symbol) -> &Perm {
        let st = &self.states[sym.state as usize];
        if sym.inverse {
            &st.inv_perm
        } else {
            &st.perm
        }
    }

    pub fn identity(&self) -> Element {
        Element {
            word: Vec::new(),
            origin: self.fingerprint(),
        }
    }

    /// The element represented by a single state.
    pub fn generator(&self, state: usize) -> Element {
        self.element(&[Symbol::new(state, false)])
    }

    /// The element represented by a word, freely reduced.
    pub fn element(&self, word: &[Symbol]) -> Element {
        Element {
            word: free_reduce(word.iter().copied()),
            origin: self.fingerprint(),
        }
    }

    pub(crate) fn check(&self, g: &Element) -> Result<()> {
        if g.origin != self.fingerprint() {
            return Err(Error::MismatchedAutomata);
        }
        Ok(())
    }

    pub(crate) fn check_vertex(&self, v: &Vertex) -> Result<()> {
        match v.0.iter().find(|&&x| x as usize >= self.degree) {
            Some(&x) => Err(Error::LetterOutOfRange {
                letter: x as usize,
                degree: self.degree,
            }),
            None => Ok(()),
        }
    }

    /// Renders an element as a product expression, compressing runs into powers.
    pub fn format_element(&self, g: &Element) -> String {
        if g.word.is_empty() {
            return IDENTITY_NAME.to_string();
        }
        let mut parts = Vec::new();
        let mut i = 0;
        while i < g.word.len() {
            let sym = g.word[i];
            let mut j = i;
            while j < g.word.len() && g.word[j] == sym {
                j += 1;
            }
            let run = (j - i) as i64;
            let name = &self.states[sym.state as usize].name;
            let exp = if sym.inverse { -run } else { run };
            if exp == 1 {
                parts.push(name.clone());
            } else {
                parts.push(format!("{name}^{exp}"));
            }
            i = j;
        }
        parts.join("*")
    }

    /// Removes symbols of trivial states and freely reduces. The element is unchanged.
    pub(crate) fn normalize(&self, word: impl IntoIterator<Item = Symbol>) -> Vec<Symbol> {
        free_reduce(
            word.into_iter()
                .filter(|s| !self.trivial[s.state as usize]),
        )
    }
}

/// Greatest fixed point: a state is trivial iff its permutation is the identity and all its
/// sections are trivial.
fn trivial_states(states: &[State]) -> Vec<bool> {
    let mut trivial: Vec<bool> = states.iter().map(|s| s.perm.is_identity()).collect();
    loop {
        let mut changed = false;
        for (i, s) in states.iter().enumerate() {
            if trivial[i]
                && s.sections.iter().any(|t| match t {
                    Target::Identity => false,
                    Target::State(j) => !trivial[*j],
                })
            {
                trivial[i] = false;
                changed = true;
            }
        }
        if !changed {
            return trivial;
        }
    }
}

pub(crate) fn free_reduce(word: impl IntoIterator<Item = Symbol>) -> Vec<Symbol> {
    let mut out: Vec<Symbol> = Vec::new();
    for s in word {
        if out.last() == Some(&s.inv()) {
            out.pop();
        } else {
            out.push(s);
        }
    }
    out
}

impl fmt::Display for Automaton {
    /// Canonical text form; parses back to an identical automaton.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "alphabet {}", self.degree)?;
        for s in &self.states {
            let secs: Vec<&str> = s
                .sections
                .iter()
                .map(|t| match t {
                    Target::Identity => IDENTITY_NAME,
                    Target::State(i) => self.states[*i].name.as_str(),
                })
                .collect();
            writeln!(f, "{} = {} ({})", s.name, s.perm, secs.join(", "))?;
        }
        Ok(())
    }
}

impl PartialEq for Automaton {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree
            && self.states.len() == other.states.len()
            && self.states.iter().zip(&other.states).all(|(a, b)| {
                a.name == b.name && a.perm == b.perm && a.sections == b.sections
            })
    }
}

impl Eq for Automaton {}

/// A freely reduced word over states and their inverses. The empty word is the identity.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Element {
    word: Vec<Symbol>,
    origin: u64,
}

impl Element {
    pub fn word(&self) -> &[Symbol] {
        &self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    /// True for the empty word. Other words may still act trivially; use
    /// [`Automaton::equal`] for that.
    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// `self * other` under `(gh)(v) = g(h(v))`.
    pub fn multiply(&self, other: &Element) -> Result<Element> {
        if self.origin != other.origin {
            return Err(Error::MismatchedAutomata);
        }
        Ok(Element {
            word: free_reduce(self.word.iter().chain(&other.word).copied()),
            origin: self.origin,
        })
    }

    pub fn invert(&self) -> Element {
        Element {
            word: self.word.iter().rev().map(|s| s.inv()).collect(),
            origin: self.origin,
        }
    }

    /// `self^k` for any integer `k`.
    pub fn pow(&self, k: i64) -> Element {
        let base = if k < 0 { self.invert() } else { self.clone() };
        let mut word = Vec::new();
        for _ in 0..k.unsigned_abs() {
            word.extend_from_slice(&base.word);
        }
        Element {
            word: free_reduce(word),
            origin: self.origin,
        }
    }

    pub(crate) fn with_word(&self, word: Vec<Symbol>) -> Element {
        Element {
            word,
            origin: self.origin,
        }
    }
}
