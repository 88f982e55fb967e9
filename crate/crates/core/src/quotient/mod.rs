//! Finite level quotients `π_n(G)` and the uniform measure they inherit from Haar measure.
//!
//! `π_n` of the group and of its closure coincide, so every exact measure computed here is a
//! statement about the closure as well: a cone set `C_a = π_n^{-1}(a)` has measure
//! `1/|π_n(G)|`.

mod cache;

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use indexmap::IndexSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::wreath::action::{leaf_count, restrict_images, section_images};
use crate::wreath::{Automaton, Element, LevelPerm, Symbol, Vertex};
use crate::{Budgets, Measure};

pub use cache::{QuotientCache, CACHE_DIR_ENV, CACHE_VERSION};

/// Total table entries a quotient may hold, whatever its element budget: wide levels get a
/// proportionally smaller element cap so memory stays near 256 MiB.
pub const QUOTIENT_CELLS: usize = 1 << 26;

/// The finite group `π_n(G)`, as deduplicated leaf permutation tables.
///
/// Elements are stored in breadth-first order over the generators `s0, s0^-1, s1, ...`, so each
/// element's witness is its shortlex-least word. Index 0 is the identity.
#[derive(Clone, Debug)]
pub struct LevelQuotient {
    degree: usize,
    level: usize,
    tables: IndexSet<Box<[u32]>>,
    witnesses: Vec<Vec<Symbol>>,
}

impl LevelQuotient {
    /// Breadth-first closure of the generator images at level `n`.
    pub fn enumerate(aut: &Automaton, n: usize, budgets: &Budgets) -> Result<Self> {
        Self::generated_by(aut, n, &aut.symbols(), budgets)
    }

    /// `π_n` of the subgroup generated by `syms`, which should be closed under inversion.
    pub fn generated_by(aut: &Automaton, n: usize, syms: &[Symbol], budgets: &Budgets) -> Result<Self> {
        let leaves = leaf_count(aut.degree(), n, budgets.table_leaves)?;
        let gens = aut.symbol_tables(n, budgets.table_leaves)?;
        let cap = budgets.quotient_elements.min((QUOTIENT_CELLS / leaves).max(1));
        let mut tables: IndexSet<Box<[u32]>> = IndexSet::new();
        let mut witnesses = vec![Vec::new()];
        tables.insert((0..leaves as u32).collect());
        let mut next = 0;
        while next < tables.len() {
            for &sym in syms {
                let gen = gens[sym.index()].images();
                let cur = &tables[next];
                let product: Box<[u32]> = gen.iter().map(|&i| cur[i as usize]).collect();
                if tables.contains(&product) {
                    continue;
                }
                debug_assert!(
                    LevelPerm::from_images(aut.degree(), n, product.to_vec()).is_tree_automorphism()
                );
                if tables.len() >= cap {
                    return Err(Error::QuotientOverflow { level: n, budget: cap });
                }
                let mut w = witnesses[next].clone();
                w.push(sym);
                tables.insert(product);
                witnesses.push(w);
            }
            next += 1;
        }
        Ok(LevelQuotient {
            degree: aut.degree(),
            level: n,
            tables,
            witnesses,
        })
    }

    pub(crate) fn from_parts(
        degree: usize,
        level: usize,
        tables: IndexSet<Box<[u32]>>,
        witnesses: Vec<Vec<Symbol>>,
    ) -> Self {
        LevelQuotient {
            degree,
            level,
            tables,
            witnesses,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// `|π_n(G)|`.
    pub fn order(&self) -> usize {
        self.tables.len()
    }

    pub fn leaves(&self) -> usize {
        self.degree.pow(self.level as u32)
    }

    pub fn table(&self, i: usize) -> &[u32] {
        &self.tables[i]
    }

    pub fn perm(&self, i: usize) -> LevelPerm {
        LevelPerm::from_images(self.degree, self.level, self.tables[i].to_vec())
    }

    /// Shortlex-least word mapping to element `i`.
    pub fn witness(&self, i: usize) -> &[Symbol] {
        &self.witnesses[i]
    }

    pub fn witness_element(&self, aut: &Automaton, i: usize) -> Element {
        aut.element(&self.witnesses[i])
    }

    pub fn index_of(&self, table: &[u32]) -> Option<usize> {
        self.tables.get_index_of(table)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.tables.iter().map(|t| &**t)
    }

    /// Index of `table(i) ∘ table(j)`.
    pub fn compose(&self, i: usize, j: usize) -> usize {
        let (a, b) = (&self.tables[i], &self.tables[j]);
        let p: Vec<u32> = b.iter().map(|&x| a[x as usize]).collect();
        self.index_of(&p).expect("quotient is closed under composition")
    }

    /// Number of fixed leaves of element `i`.
    pub fn fixed_points(&self, i: usize) -> usize {
        self.tables[i]
            .iter()
            .enumerate()
            .filter(|(k, &x)| *k == x as usize)
            .count()
    }

    /// Projection of element `i` to level `n <= self.level()`.
    pub fn restrict(&self, i: usize, n: usize) -> Vec<u32> {
        restrict_images(&self.tables[i], self.degree, self.level, n)
    }

    /// Action of the section of element `i` at the level-`vertex_level` vertex of rank
    /// `vertex`, on the `self.level() - vertex_level` levels below it.
    pub fn section(&self, i: usize, vertex: usize, vertex_level: usize) -> Vec<u32> {
        section_images(&self.tables[i], self.degree, self.level, vertex, vertex_level)
    }

    /// A seeded, exactly uniform sampler over the elements.
    pub fn sampler(&self, seed: u64) -> UniformSampler<'_> {
        UniformSampler {
            quotient: self,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

/// Iterator of uniformly distributed element indices.
pub struct UniformSampler<'a> {
    quotient: &'a LevelQuotient,
    rng: ChaCha8Rng,
}

impl Iterator for UniformSampler<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        Some(self.rng.random_range(0..self.quotient.order()))
    }
}

/// Draws one uniform element of `π_n(G)`; the same seed always gives the same element.
pub fn uniform_sample(q: &LevelQuotient, seed: u64) -> usize {
    q.sampler(seed).next().unwrap()
}

/// Memoizing provider of the level quotients of one automaton, optionally backed by an on-disk
/// cache.
pub struct QuotientTower<'a> {
    aut: &'a Automaton,
    budgets: Budgets,
    cache: Option<QuotientCache>,
    levels: Mutex<HashMap<usize, Arc<LevelQuotient>>>,
    /// Lowest level known to exceed the budget, with the cap it hit. Orders and table widths
    /// only grow with the level, so every deeper level overflows too.
    overflow: Mutex<Option<(usize, usize)>>,
}

impl<'a> QuotientTower<'a> {
    pub fn new(aut: &'a Automaton, budgets: Budgets) -> Self {
        QuotientTower {
            aut,
            budgets,
            cache: None,
            levels: Mutex::new(HashMap::new()),
            overflow: Mutex::new(None),
        }
    }

    pub fn with_cache(mut self, cache: Option<QuotientCache>) -> Self {
        self.cache = cache;
        self
    }

    pub fn automaton(&self) -> &'a Automaton {
        self.aut
    }

    pub fn budgets(&self) -> &Budgets {
        &self.budgets
    }

    /// `π_n(G)`.
    pub fn level(&self, n: usize) -> Result<Arc<LevelQuotient>> {
        if let Some(q) = self.levels.lock().unwrap().get(&n) {
            return Ok(q.clone());
        }
        if let Some((level, budget)) = *self.overflow.lock().unwrap() {
            if n >= level {
                return Err(Error::QuotientOverflow { level, budget });
            }
        }
        let cached = self
            .cache
            .as_ref()
            .and_then(|c| c.load(self.aut, n))
            .filter(|q| q.order() <= self.budgets.quotient_elements);
        let q = match cached {
            Some(q) => q,
            None => {
                let q = LevelQuotient::enumerate(self.aut, n, &self.budgets).inspect_err(|e| {
                    if let Error::QuotientOverflow { level, budget } = *e {
                        let mut o = self.overflow.lock().unwrap();
                        if o.is_none_or(|(l, _)| level < l) {
                            *o = Some((level, budget));
                        }
                    }
                })?;
                if let Some(c) = &self.cache {
                    // A failed write only costs a recomputation next time.
                    let _ = c.store(self.aut, &q);
                }
                q
            }
        };
        let q = Arc::new(q);
        self.levels.lock().unwrap().insert(n, q.clone());
        Ok(q)
    }
}

/// `π_n(G)` for a single level.
pub fn level_quotient(aut: &Automaton, n: usize, budgets: &Budgets) -> Result<LevelQuotient> {
    if n == 0 {
        return Err(Error::InvalidArgument("level must be at least 1".into()));
    }
    LevelQuotient::enumerate(aut, n, budgets)
}

/// A cone set `C_a`, named by its level and the element `a` of `π_n(G)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeId {
    pub level: usize,
    pub element: Vec<u32>,
}

/// `μ(C_a) = 1/|π_n(G)|`.
pub fn cone_measure(q: &LevelQuotient, cone: &ConeId) -> Result<Measure> {
    if cone.level != q.level() || q.index_of(&cone.element).is_none() {
        return Err(Error::NotInQuotient { level: cone.level });
    }
    Ok(Measure::new(1, q.order() as u64))
}

/// A subgroup of `π_m(G)`, as a sorted set of tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Subgroup {
    pub level: usize,
    pub order: usize,
    #[serde(skip)]
    pub elements: BTreeSet<Vec<u32>>,
}

impl Subgroup {
    pub fn trivial(degree: usize, level: usize) -> Self {
        let mut elements = BTreeSet::new();
        elements.insert((0..degree.pow(level as u32) as u32).collect());
        Subgroup {
            level,
            order: 1,
            elements,
        }
    }

    fn from_set(level: usize, elements: BTreeSet<Vec<u32>>) -> Self {
        Subgroup {
            level,
            order: elements.len(),
            elements,
        }
    }

    pub fn contains(&self, table: &[u32]) -> bool {
        self.elements.contains(table)
    }

    pub fn intersect(&self, other: &Subgroup) -> Subgroup {
        Subgroup::from_set(
            self.level,
            self.elements.intersection(&other.elements).cloned().collect(),
        )
    }
}

fn check_vertex_level(v: &Vertex, n: usize, degree: usize) -> Result<()> {
    if v.level() != n {
        return Err(Error::InvalidArgument(format!(
            "vertex {} is not on level {n}",
            v.display(degree)
        )));
    }
    if let Some(&x) = v.letters().iter().find(|&&x| x as usize >= degree) {
        return Err(Error::LetterOutOfRange {
            letter: x as usize,
            degree,
        });
    }
    Ok(())
}

/// `{π_m(g|_v) : g ∈ St_G(n)}` for a vertex `v` of level `n`: the image of the homomorphism
/// "take the section at `v`, then project to level `m`" on the level stabilizer, computed
/// inside `π_{n+m}(G)`.
pub fn stabilizer_section_subgroup(
    tower: &QuotientTower<'_>,
    n: usize,
    m: usize,
    v: &Vertex,
) -> Result<Subgroup> {
    let d = tower.automaton().degree();
    check_vertex_level(v, n, d)?;
    if m == 0 {
        return Ok(Subgroup::trivial(d, 0));
    }
    let q = tower.level(n + m)?;
    let vr = v.rank(d);
    let mut set = BTreeSet::new();
    for i in 0..q.order() {
        let r = q.restrict(i, n);
        if r.iter().enumerate().all(|(k, &x)| k == x as usize) {
            set.insert(q.section(i, vr, n));
        }
    }
    Ok(Subgroup::from_set(m, set))
}

/// `π_m(G_v)`, where `G_v` collects the sections at `v` of the elements fixing `v`.
pub fn vertex_section_group(tower: &QuotientTower<'_>, v: &Vertex, m: usize) -> Result<Subgroup> {
    let d = tower.automaton().degree();
    let n = v.level();
    check_vertex_level(v, n, d)?;
    if m == 0 {
        return Ok(Subgroup::trivial(d, 0));
    }
    let q = tower.level(n + m)?;
    let vr = v.rank(d);
    let stride = d.pow(m as u32);
    let mut set = BTreeSet::new();
    for i in 0..q.order() {
        if q.table(i)[vr * stride] as usize / stride == vr {
            set.insert(q.section(i, vr, n));
        }
    }
    Ok(Subgroup::from_set(m, set))
}

/// One triple `(a, v, b)` with `μ(C_a ∩ T_v^{-1}(C_b)) < μ(C_a) μ(C_b)`.
#[derive(Clone, Debug, Serialize)]
pub struct SubindependenceViolation {
    pub a: String,
    pub v: String,
    pub b: String,
    #[serde(with = "crate::serde_ratio")]
    pub lhs: Measure,
    #[serde(with = "crate::serde_ratio")]
    pub rhs: Measure,
}

#[derive(Clone, Debug, Serialize)]
pub struct SubindependenceReport {
    pub n: usize,
    pub m: usize,
    pub order_n: usize,
    pub order_m: usize,
    pub order_n_plus_m: usize,
    /// Triples with a non-empty intersection.
    pub triples: usize,
    pub violations: Vec<SubindependenceViolation>,
    /// Smallest `lhs / rhs` over the checked triples.
    #[serde(with = "crate::serde_ratio::option")]
    pub min_ratio: Option<Measure>,
    /// Whether `Σ_b lhs(a, v, b) = μ(C_a)` held for every `(a, v)`.
    pub marginals_exact: bool,
    /// Sections that fell outside `π_m(G)`; non-zero only for input that is not self-similar.
    pub sections_outside: usize,
    pub note: Option<String>,
}

/// Exhaustive check of `μ(C_a ∩ T_v^{-1}(C_b)) ≥ μ(C_a) μ(C_b)` over all `a ∈ π_n(G)`,
/// `v ∈ 𝓛_n`, `b ∈ π_m(G)` with a non-empty intersection, in exact arithmetic.
///
/// The intersection measure is the fraction of `h ∈ π_{n+m}(G)` whose level-`n` part is `a`
/// and whose section at `v`, projected to level `m`, is `b`.
pub fn subindependence_check(tower: &QuotientTower<'_>, n: usize, m: usize) -> Result<SubindependenceReport> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be at least 1".into()));
    }
    let aut = tower.automaton();
    let d = aut.degree();
    let qn = tower.level(n)?;
    let qm = tower.level(m)?;
    let q = tower.level(n + m)?;
    let vertices = d.pow(n as u32);
    let (on, om, onm) = (qn.order(), qm.order(), q.order());

    let dense = on.saturating_mul(vertices).saturating_mul(om) <= 1 << 26;
    let mut dense_counts: Vec<u32> = if dense { vec![0; on * vertices * om] } else { Vec::new() };
    let mut sparse_counts: HashMap<(usize, usize, usize), u32> = HashMap::new();
    let mut outside = 0usize;
    for i in 0..onm {
        let a = qn
            .index_of(&q.restrict(i, n))
            .expect("restriction lies in the lower quotient");
        for v in 0..vertices {
            match qm.index_of(&q.section(i, v, n)) {
                Some(b) => {
                    if dense {
                        dense_counts[(a * vertices + v) * om + b] += 1;
                    } else {
                        *sparse_counts.entry((a, v, b)).or_default() += 1;
                    }
                }
                None => outside += 1,
            }
        }
    }
    let counts: Vec<((usize, usize, usize), u32)> = if dense {
        dense_counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| ((k / om / vertices, (k / om) % vertices, k % om), c))
            .collect()
    } else {
        let mut v: Vec<_> = sparse_counts.into_iter().collect();
        v.sort_unstable();
        v
    };

    let rhs = Measure::new(1, (on as u64) * (om as u64));
    let mut violations = Vec::new();
    let mut min_ratio: Option<Measure> = None;
    let mut marginal: HashMap<(usize, usize), u64> = HashMap::new();
    for &((a, v, b), c) in &counts {
        let lhs = Measure::new(c as u64, onm as u64);
        let ratio = lhs / rhs;
        if min_ratio.is_none_or(|r| ratio < r) {
            min_ratio = Some(ratio);
        }
        *marginal.entry((a, v)).or_default() += c as u64;
        if lhs < rhs {
            violations.push(SubindependenceViolation {
                a: aut.format_element(&qn.witness_element(aut, a)),
                v: Vertex::from_rank(v, n, d).display(d),
                b: aut.format_element(&qm.witness_element(aut, b)),
                lhs,
                rhs,
            });
        }
    }
    // Every (a, v) pair occurs, and its counts add up to |π_{n+m}| / |π_n|.
    let marginals_exact = outside == 0
        && marginal.len() == on * vertices
        && marginal
            .values()
            .all(|&total| Measure::new(total, onm as u64) == Measure::new(1, on as u64));
    let note = if violations.is_empty() && outside == 0 {
        None
    } else {
        Some("violations found: the self-similarity hypothesis is likely violated".to_string())
    };
    Ok(SubindependenceReport {
        n,
        m,
        order_n: on,
        order_m: om,
        order_n_plus_m: onm,
        triples: counts.len(),
        violations,
        min_ratio,
        marginals_exact,
        sections_outside: outside,
        note,
    })
}
