use serde::Serialize;

use super::{Automaton, Element, Letter, Symbol, Vertex};
use crate::error::{Error, Result};

/// The permutation a tree automorphism induces on the `d^n` vertices of level `n`.
///
/// `images[rank(v)] = rank(g(v))` with the big-endian ranking of [`Vertex::rank`].
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct LevelPerm {
    degree: usize,
    level: usize,
    images: Vec<u32>,
}

/// Number of leaves at `level`, or a [`Error::TableOverflow`] when it exceeds `budget`.
pub fn leaf_count(degree: usize, level: usize, budget: usize) -> Result<usize> {
    let leaves = (degree as u128).checked_pow(level as u32).unwrap_or(u128::MAX);
    if leaves > budget as u128 || leaves > u32::MAX as u128 {
        return Err(Error::TableOverflow {
            level,
            leaves,
            budget,
        });
    }
    Ok(leaves as usize)
}

impl LevelPerm {
    pub fn identity(degree: usize, level: usize) -> Self {
        let n = degree.pow(level as u32);
        LevelPerm {
            degree,
            level,
            images: (0..n as u32).collect(),
        }
    }

    /// Wraps an image table without checking prefix preservation.
    pub fn from_images(degree: usize, level: usize, images: Vec<u32>) -> Self {
        debug_assert_eq!(images.len(), degree.pow(level as u32));
        LevelPerm {
            degree,
            level,
            images,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }

    pub fn into_images(self) -> Vec<u32> {
        self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &j)| i == j as usize)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &LevelPerm) -> LevelPerm {
        LevelPerm {
            degree: self.degree,
            level: self.level,
            images: other
                .images
                .iter()
                .map(|&i| self.images[i as usize])
                .collect(),
        }
    }

    pub fn inverse(&self) -> LevelPerm {
        let mut inv = vec![0u32; self.images.len()];
        for (i, &j) in self.images.iter().enumerate() {
            inv[j as usize] = i as u32;
        }
        LevelPerm {
            degree: self.degree,
            level: self.level,
            images: inv,
        }
    }

    /// Number of fixed leaves.
    pub fn fixed_points(&self) -> usize {
        self.images
            .iter()
            .enumerate()
            .filter(|(i, &j)| *i == j as usize)
            .count()
    }

    /// The action on level `n <= self.level`.
    pub fn restrict(&self, n: usize) -> LevelPerm {
        LevelPerm {
            degree: self.degree,
            level: n,
            images: restrict_images(&self.images, self.degree, self.level, n),
        }
    }

    /// The action of the section at the vertex of rank `vertex` on level `vertex_level`,
    /// as a permutation of level `self.level - vertex_level`.
    pub fn section_at(&self, vertex: usize, vertex_level: usize) -> LevelPerm {
        let sub = self.level - vertex_level;
        LevelPerm {
            degree: self.degree,
            level: sub,
            images: section_images(&self.images, self.degree, self.level, vertex, vertex_level),
        }
    }

    /// Checks that the table is a bijection that maps vertices sharing a prefix to vertices
    /// sharing a prefix, at every level.
    pub fn is_tree_automorphism(&self) -> bool {
        let n = self.images.len();
        let mut seen = vec![false; n];
        for &j in &self.images {
            if j as usize >= n || seen[j as usize] {
                return false;
            }
            seen[j as usize] = true;
        }
        let mut block = 1usize;
        for _ in 0..self.level {
            let next = block * self.degree;
            for chunk_start in (0..n).step_by(next) {
                let target = self.images[chunk_start] as usize / next;
                if (chunk_start..chunk_start + next)
                    .any(|i| self.images[i] as usize / next != target)
                {
                    return false;
                }
            }
            block = next;
        }
        true
    }
}

pub(crate) fn restrict_images(images: &[u32], degree: usize, level: usize, n: usize) -> Vec<u32> {
    let stride = degree.pow((level - n) as u32);
    let count = degree.pow(n as u32);
    (0..count)
        .map(|i| images[i * stride] / stride as u32)
        .collect()
}

pub(crate) fn section_images(
    images: &[u32],
    degree: usize,
    level: usize,
    vertex: usize,
    vertex_level: usize,
) -> Vec<u32> {
    let block = degree.pow((level - vertex_level) as u32);
    let base = vertex * block;
    (0..block)
        .map(|w| images[base + w] % block as u32)
        .collect()
}

impl Automaton {
    /// One symbol acting on a vertex: returns the image and the section at the vertex.
    pub(crate) fn symbol_walk(&self, sym: Symbol, v: &[Letter]) -> (Vec<Letter>, Option<Symbol>) {
        let mut out = Vec::with_capacity(v.len());
        let mut cur = Some(sym);
        for &x in v {
            match cur {
                Some(s) => {
                    out.push(self.symbol_image(s, x));
                    cur = self.symbol_section(s, x);
                }
                None => out.push(x),
            }
        }
        (out, cur)
    }

    /// `g(v)`.
    pub fn apply(&self, g: &Element, v: &Vertex) -> Result<Vertex> {
        self.check(g)?;
        self.check_vertex(v)?;
        let mut cur = v.0.clone();
        for &sym in g.word().iter().rev() {
            cur = self.symbol_walk(sym, &cur).0;
        }
        Ok(Vertex(cur))
    }

    /// `g|_v`, the element with `g(vw) = g(v) g|_v(w)`, freely reduced.
    pub fn section(&self, g: &Element, v: &Vertex) -> Result<Element> {
        self.check(g)?;
        self.check_vertex(v)?;
        Ok(g.with_word(self.word_section(g.word(), &v.0)))
    }

    pub(crate) fn word_section(&self, word: &[Symbol], v: &[Letter]) -> Vec<Symbol> {
        let mut u = v.to_vec();
        let mut parts = Vec::with_capacity(word.len());
        for &sym in word.iter().rev() {
            let (img, sec) = self.symbol_walk(sym, &u);
            if let Some(s) = sec {
                parts.push(s);
            }
            u = img;
        }
        parts.reverse();
        super::free_reduce(parts)
    }

    /// The action of a word on the first level together with its sections at every letter.
    pub(crate) fn word_first_level(&self, word: &[Symbol]) -> (Vec<Letter>, Vec<Vec<Symbol>>) {
        let d = self.degree();
        let mut perm = Vec::with_capacity(d);
        let mut sections = Vec::with_capacity(d);
        for x in 0..d as u8 {
            let mut cur = x;
            let mut parts = Vec::with_capacity(word.len());
            for &sym in word.iter().rev() {
                if let Some(s) = self.symbol_section(sym, cur) {
                    parts.push(s);
                }
                cur = self.symbol_image(sym, cur);
            }
            parts.reverse();
            perm.push(cur);
            sections.push(parts);
        }
        (perm, sections)
    }

    /// Level-`n` tables of every symbol, indexed by [`Symbol::index`].
    pub fn symbol_tables(&self, n: usize, budget: usize) -> Result<Vec<LevelPerm>> {
        leaf_count(self.degree(), n, budget)?;
        let d = self.degree();
        let syms = self.symbols();
        let mut tables: Vec<Vec<u32>> = vec![vec![0]; syms.len()];
        let mut identity: Vec<u32> = vec![0];
        for k in 1..=n {
            let block = d.pow((k - 1) as u32);
            let mut next = Vec::with_capacity(syms.len());
            for &sym in &syms {
                let mut t = vec![0u32; block * d];
                for x in 0..d {
                    let img = self.symbol_image(sym, x as u8) as usize;
                    let sub = match self.symbol_section(sym, x as u8) {
                        Some(s) => &tables[s.index()],
                        None => &identity,
                    };
                    let base = (img * block) as u32;
                    for (w, &sw) in sub.iter().enumerate() {
                        t[x * block + w] = base + sw;
                    }
                }
                next.push(t);
            }
            tables = next;
            identity = (0..(block * d) as u32).collect();
        }
        Ok(tables
            .into_iter()
            .map(|images| LevelPerm::from_images(d, n, images))
            .collect())
    }

    /// The permutation `g` induces on level `n`.
    pub fn level_perm(&self, g: &Element, n: usize, budget: usize) -> Result<LevelPerm> {
        self.check(g)?;
        let tables = self.symbol_tables(n, budget)?;
        Ok(word_table(&tables, g.word(), self.degree(), n))
    }
}

/// Composes per-symbol tables along a word.
pub(crate) fn word_table(tables: &[LevelPerm], word: &[Symbol], degree: usize, n: usize) -> LevelPerm {
    let mut acc = LevelPerm::identity(degree, n);
    for &sym in word {
        acc = acc.compose(&tables[sym.index()]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::super::tests::odometer;
    use super::*;
    use crate::DEFAULT_TABLE_BUDGET;

    fn v(s: &str) -> Vertex {
        Vertex::parse(s, 2).unwrap()
    }

    #[test]
    fn odometer_apply() {
        let aut = odometer();
        let a = aut.generator(0);
        assert_eq!(aut.apply(&a, &v("00")).unwrap(), v("10"));
        assert_eq!(aut.apply(&a, &v("10")).unwrap(), v("01"));
        assert_eq!(aut.apply(&a, &v("11")).unwrap(), v("00"));
    }

    #[test]
    fn odometer_square_acts_below_first_letter() {
        // Oracle: a^2 adds 2 to the binary integer read little-endian, so it keeps the first
        // letter and adds 1 to the rest.
        let aut = odometer();
        let a = aut.generator(0);
        let a2 = a.pow(2);
        for len in 0..=8usize {
            for rank in 0..(1usize << len) {
                let w = Vertex::from_rank(rank, len, 2);
                for first in 0..2u8 {
                    let mut letters = vec![first];
                    letters.extend_from_slice(&w.0);
                    let got = aut.apply(&a2, &Vertex(letters)).unwrap();
                    let mut expected = vec![first];
                    expected.extend(aut.apply(&a, &w).unwrap().0);
                    assert_eq!(got.0, expected);
                }
            }
        }
    }

    #[test]
    fn odometer_sections() {
        let aut = odometer();
        let a = aut.generator(0);
        assert!(aut.section(&a, &v("0")).unwrap().is_empty());
        assert_eq!(aut.section(&a, &v("1")).unwrap(), a);
        let a2 = a.pow(2);
        assert_eq!(aut.section(&a2, &v("0")).unwrap(), a);
        assert_eq!(aut.section(&a2, &v("1")).unwrap(), a);
        let id = aut.identity();
        for s in ["", "0", "1", "0110"] {
            assert!(aut.section(&id, &v(s)).unwrap().is_empty());
        }
    }

    #[test]
    fn letter_out_of_range() {
        let aut = odometer();
        let err = aut.apply(&aut.generator(0), &Vertex(vec![2])).unwrap_err();
        assert!(matches!(err, Error::LetterOutOfRange { letter: 2, degree: 2 }));
        assert!(aut.section(&aut.generator(0), &Vertex(vec![0, 5])).is_err());
    }

    #[test]
    fn odometer_level_perms() {
        let aut = odometer();
        let a = aut.generator(0);
        let p1 = aut.level_perm(&a, 1, DEFAULT_TABLE_BUDGET).unwrap();
        assert_eq!(p1.images(), &[1, 0]);
        // 00 -> 10 -> 01 -> 11 -> 00, ranks 0 -> 2 -> 1 -> 3 -> 0
        let p2 = aut.level_perm(&a, 2, DEFAULT_TABLE_BUDGET).unwrap();
        assert_eq!(p2.images(), &[2, 3, 1, 0]);
        for leaf in 0..4 {
            let w = Vertex::from_rank(leaf, 2, 2);
            assert_eq!(
                p2.images()[leaf] as usize,
                aut.apply(&a, &w).unwrap().rank(2)
            );
        }
        let id = aut.level_perm(&aut.identity(), 3, DEFAULT_TABLE_BUDGET).unwrap();
        assert!(id.is_identity());
        assert_eq!(aut.level_perm(&a, 0, DEFAULT_TABLE_BUDGET).unwrap().images(), &[0]);
    }

    #[test]
    fn table_budget_overflow() {
        let aut = odometer();
        let err = aut.level_perm(&aut.generator(0), 12, 1000).unwrap_err();
        assert!(matches!(err, Error::TableOverflow { level: 12, .. }));
    }

    #[test]
    fn restrict_and_section_of_tables() {
        let aut = odometer();
        let a = aut.generator(0);
        let p3 = aut.level_perm(&a, 3, DEFAULT_TABLE_BUDGET).unwrap();
        assert_eq!(p3.restrict(2), aut.level_perm(&a, 2, DEFAULT_TABLE_BUDGET).unwrap());
        assert!(p3.is_tree_automorphism());
        let a2 = a.pow(2);
        let q = aut.level_perm(&a2, 3, DEFAULT_TABLE_BUDGET).unwrap();
        // a^2 = (a, a): both sections at level 1 act as a on level 2
        for x in 0..2 {
            assert_eq!(q.section_at(x, 1), aut.level_perm(&a, 2, DEFAULT_TABLE_BUDGET).unwrap());
        }
        assert!(!LevelPerm::from_images(2, 2, vec![1, 2, 0, 3]).is_tree_automorphism());
    }
}
