//! Fixed-point statistics: the conditional increase of `Y_n`, the curve `μ(Y_n ≥ 1)`, evidence
//! for virtual super strong fractality, and the kneading and three-condition checkers.
//!
//! `Y_n(g)` is the number of level-`n` vertices fixed by `g`. Every probability here is taken
//! under the uniform measure on a level quotient and computed exactly, except the Monte-Carlo
//! column of [`FppEstimate`].

mod kneading;
mod prop4;
mod search;
mod vssf;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quotient::{LevelQuotient, QuotientTower};
use crate::Measure;

pub use kneading::{check_kneading, KneadingCheck, KneadingReport, KneadingVerdict};
pub use prop4::{
    check_prop4, conditions_one_two, Cond2Check, Membership, MembershipRow, OrderingResult, Prop4Condition,
    Prop4Report, Prop4Verdict, Prop4Witness, ProductCheck, Tri,
};
pub use search::{
    canonical_form, relabel, search_kneading, CatalogRow, Frontier, SearchOutcome, SearchSpace, SearchSummary,
};
pub use vssf::{check_vssf, KApproximant, Representative, Surjectivity, VssfEvidence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisStatus {
    Established,
    Failed,
    Unknown,
}

/// Whether the hypotheses behind the bound `p ≥ 1/|π_m(G)|` were established at the checked
/// reach, with the reasons when they were not.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hypotheses {
    pub status: HypothesisStatus,
    pub reasons: Vec<String>,
}

/// `p = μ(Y_{n+m} > r | Y_n = r)` against the bound `ε = 1/|π_m(G)|`.
#[derive(Clone, Debug, Serialize)]
pub struct MartingaleReport {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    /// `|A_{n,r}|`, the number of `a ∈ π_n(G)` with `Y_n(a) = r`.
    pub a_size: usize,
    /// Elements of `π_{n+m}(G)` lying over `A_{n,r}`.
    pub sample_space: usize,
    /// Those among them with `Y_{n+m} > r`.
    pub favorable: usize,
    #[serde(with = "crate::serde_ratio::option")]
    pub p: Option<Measure>,
    #[serde(with = "crate::serde_ratio")]
    pub epsilon: Measure,
    pub vacuous: bool,
    pub passes: bool,
    pub hypotheses: Hypotheses,
    pub diagnostic: Option<String>,
}

fn fixed_count(table: &[u32]) -> usize {
    table.iter().enumerate().filter(|(k, &x)| *k == x as usize).count()
}

/// Exact conditional probability over `π_{n+m}(G)`, together with an evaluation of the
/// hypotheses (vertex sections onto, coset representatives fixing infinitely many ends and
/// having `Y_m(s) > r`, and `r > 0`) at reach `(n, m)`.
pub fn conditional_increase(tower: &QuotientTower<'_>, n: usize, m: usize, r: usize) -> Result<MartingaleReport> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument("n and m must be at least 1".into()));
    }
    let q = tower.level(n + m)?;
    let order_m = tower.level(m)?.order();
    let qn = tower.level(n)?;
    let a_size = (0..qn.order()).filter(|&i| qn.fixed_points(i) == r).count();
    let (mut sample_space, mut favorable) = (0usize, 0usize);
    for i in 0..q.order() {
        if fixed_count(&q.restrict(i, n)) == r {
            sample_space += 1;
            if q.fixed_points(i) > r {
                favorable += 1;
            }
        }
    }
    let epsilon = Measure::new(1, order_m as u64);
    let vacuous = sample_space == 0;
    let p = (!vacuous).then(|| Measure::new(favorable as u64, sample_space as u64));
    let passes = p.is_none_or(|p| p >= epsilon);
    let hypotheses = bound_hypotheses(tower, n, m, r)?;
    let diagnostic = match (passes, hypotheses.status) {
        (true, _) => None,
        (false, HypothesisStatus::Established) => {
            Some("bound violated although the hypotheses hold at this reach".to_string())
        }
        (false, _) => Some(format!(
            "bound fails and the hypotheses fail or are unconfirmed: {}",
            hypotheses.reasons.join("; ")
        )),
    };
    Ok(MartingaleReport {
        n,
        m,
        r,
        a_size,
        sample_space,
        favorable,
        p,
        epsilon,
        vacuous,
        passes,
        hypotheses,
        diagnostic,
    })
}

fn bound_hypotheses(tower: &QuotientTower<'_>, n: usize, m: usize, r: usize) -> Result<Hypotheses> {
    let mut failed = Vec::new();
    let mut unknown = Vec::new();
    if r == 0 {
        failed.push("r = 0 lies outside the range r > 0 of the bound".to_string());
    }
    let ev = check_vssf(tower, n, m)?;
    if let Some(bad) = ev.surjectivity.iter().find(|s| !s.onto) {
        failed.push(format!(
            "the section group at {} maps onto {} of {} elements at level {}",
            bad.vertex, bad.order, bad.full_order, bad.m
        ));
    }
    if let Some(reason) = &ev.overflow {
        unknown.push(format!("evidence incomplete: {reason}"));
    }
    if !ev.stabilized {
        unknown.push("the index of the approximants has not stabilized".to_string());
    }
    for s in &ev.representatives {
        match s.ends.kind() {
            Some(crate::ends::EndKind::InfinitelyMany) => {}
            Some(_) => failed.push(format!("representative {} fixes {}", s.element, s.ends.label())),
            None => unknown.push(format!("ends of representative {} unresolved", s.element)),
        }
        if s.level == m && s.fixed_points <= r {
            failed.push(format!(
                "representative {} has Y_{m} = {} <= r; m is too small",
                s.element, s.fixed_points
            ));
        }
    }
    if ev.representatives.first().is_some_and(|s| s.level != m) {
        unknown.push(format!("representatives were not computed at level {m}"));
    }
    let status = if !failed.is_empty() {
        HypothesisStatus::Failed
    } else if !unknown.is_empty() {
        HypothesisStatus::Unknown
    } else {
        HypothesisStatus::Established
    };
    failed.extend(unknown);
    Ok(Hypotheses { status, reasons: failed })
}

/// `μ(Y_n = r)` for each `r` that occurs, in increasing `r`.
pub fn fixed_point_distribution(q: &LevelQuotient) -> Vec<(usize, Measure)> {
    let mut counts = vec![0u64; q.leaves() + 1];
    for i in 0..q.order() {
        counts[q.fixed_points(i)] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(r, c)| (r, Measure::new(c, q.order() as u64)))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelFpp {
    pub level: usize,
    pub order: usize,
    /// Elements of `π_n(G)` with at least one fixed leaf.
    pub with_fixed_leaf: usize,
    #[serde(with = "crate::serde_ratio")]
    pub value: Measure,
}

/// Monte-Carlo estimate of `μ(Y_n ≥ 1)` from exactly uniform draws, with a 99% Wilson interval.
#[derive(Clone, Debug, Serialize)]
pub struct SampledFpp {
    pub level: usize,
    pub samples: usize,
    pub hits: usize,
    pub estimate: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FppEstimate {
    pub requested_levels: usize,
    /// Deepest level whose quotient was enumerated.
    pub reach: usize,
    pub exact: Vec<LevelFpp>,
    pub sampled: Vec<SampledFpp>,
    pub nonincreasing: bool,
    pub strictly_decreasing: bool,
    pub stopped: Option<String>,
}

const Z_99: f64 = 2.5758293035489004;

fn wilson(hits: usize, n: usize) -> (f64, f64) {
    let (h, n) = (hits as f64, n as f64);
    let p = h / n;
    let z2 = Z_99 * Z_99;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let radius = Z_99 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - radius).max(0.0), (center + radius).min(1.0))
}

/// Exact `μ(Y_n ≥ 1)` for `n = 1..=max_level` while `π_n(G)` stays within budget. Sampling runs
/// only on enumerated levels, with `samples` draws per level seeded by `seed + n`.
pub fn estimate_fpp(tower: &QuotientTower<'_>, max_level: usize, samples: usize, seed: u64) -> Result<FppEstimate> {
    if max_level == 0 {
        return Err(Error::InvalidArgument("max level must be at least 1".into()));
    }
    let mut exact = Vec::new();
    let mut sampled = Vec::new();
    let mut stopped = None;
    for n in 1..=max_level {
        let q = match tower.level(n) {
            Ok(q) => q,
            Err(e) if e.is_budget() => {
                stopped = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        };
        let with_fixed_leaf = (0..q.order()).filter(|&i| q.fixed_points(i) > 0).count();
        exact.push(LevelFpp {
            level: n,
            order: q.order(),
            with_fixed_leaf,
            value: Measure::new(with_fixed_leaf as u64, q.order() as u64),
        });
        if samples > 0 {
            let hits = q
                .sampler(seed.wrapping_add(n as u64))
                .take(samples)
                .filter(|&i| q.fixed_points(i) > 0)
                .count();
            let (low, high) = wilson(hits, samples);
            sampled.push(SampledFpp {
                level: n,
                samples,
                hits,
                estimate: hits as f64 / samples as f64,
                low,
                high,
            });
        }
    }
    let nonincreasing = exact.windows(2).all(|w| w[1].value <= w[0].value);
    let strictly_decreasing = exact.windows(2).all(|w| w[1].value < w[0].value);
    Ok(FppEstimate {
        requested_levels: max_level,
        reach: exact.len(),
        exact,
        sampled,
        nonincreasing,
        strictly_decreasing,
        stopped,
    })
}
