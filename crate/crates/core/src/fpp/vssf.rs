//! Finite-level evidence for virtual super strong fractality.
//!
//! Two things are checked: every vertex section group maps onto `π_m(G)`, and the approximants
//! `K⁽ⁿ⁾ = ⋂_{k ≤ n} π_m(St_G(k)_{0^k})` along the leftmost path stabilize. Each approximant
//! contains `π_m(K_G)`, so the reported indices are lower bounds for `[π_m(G) : π_m(K_G)]`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::ends::{classify_fixed_ends, EndVerdict};
use crate::error::{Error, Result};
use crate::quotient::{stabilizer_section_subgroup, vertex_section_group, QuotientTower};
use crate::wreath::Vertex;

/// Representatives tried per coset while looking for one that fixes infinitely many ends.
const REPRESENTATIVE_TRIES: usize = 16;

#[derive(Clone, Debug, Serialize)]
pub struct Surjectivity {
    pub vertex: String,
    pub m: usize,
    /// `|π_m(G_v)|`.
    pub order: usize,
    /// `|π_m(G)|`.
    pub full_order: usize,
    pub onto: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct KApproximant {
    pub n: usize,
    pub m: usize,
    pub order: usize,
    /// `[π_m(G) : K⁽ⁿ⁾]`.
    pub index: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Representative {
    pub element: String,
    /// Level of the quotient the cosets were taken in.
    pub level: usize,
    /// `Y_level` of the representative.
    pub fixed_points: usize,
    pub ends: EndVerdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct VssfEvidence {
    pub max_n: usize,
    pub max_m: usize,
    pub surjectivity: Vec<Surjectivity>,
    pub all_onto: bool,
    pub approximants: Vec<KApproximant>,
    /// Whether the last two approximant indices at the deepest `m` agree.
    pub stabilized: bool,
    pub index: Option<usize>,
    /// One representative per coset of the deepest approximant.
    pub representatives: Vec<Representative>,
    pub all_representatives_infinite: bool,
    /// Set when a budget cut the evidence short.
    pub overflow: Option<String>,
}

/// Runs `f`, turning a budget error into `None` recorded in `overflow`.
fn budgeted<T>(overflow: &mut Option<String>, f: impl FnOnce() -> Result<T>) -> Result<Option<T>> {
    match f() {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_budget() => {
            overflow.get_or_insert(e.to_string());
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// `K⁽ⁿ⁾` at level `m`, as a set of tables of `π_m(G)`.
pub(crate) fn approximant(tower: &QuotientTower<'_>, n: usize, m: usize) -> Result<BTreeSet<Vec<u32>>> {
    let mut k: BTreeSet<Vec<u32>> = tower.level(m)?.iter().map(<[u32]>::to_vec).collect();
    for j in 1..=n {
        let sub = stabilizer_section_subgroup(tower, j, m, &Vertex(vec![0; j]))?;
        k = k.intersection(&sub.elements).cloned().collect();
    }
    Ok(k)
}

pub fn check_vssf(tower: &QuotientTower<'_>, max_n: usize, max_m: usize) -> Result<VssfEvidence> {
    if max_n == 0 || max_m == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    let aut = tower.automaton();
    let d = aut.degree();
    let mut overflow = None;

    let mut surjectivity = Vec::new();
    'surj: for k in 1..=max_n {
        for rank in 0..d.pow(k as u32) {
            let v = Vertex::from_rank(rank, k, d);
            for m in 1..=max_m {
                let Some(full) = budgeted(&mut overflow, || tower.level(m))? else {
                    break 'surj;
                };
                let Some(sub) = budgeted(&mut overflow, || vertex_section_group(tower, &v, m))? else {
                    break 'surj;
                };
                surjectivity.push(Surjectivity {
                    vertex: v.display(d),
                    m,
                    order: sub.order,
                    full_order: full.order(),
                    onto: sub.order == full.order(),
                });
            }
        }
    }
    let all_onto = surjectivity.iter().all(|s| s.onto);

    let mut approximants = Vec::new();
    let mut deepest: Option<(usize, BTreeSet<Vec<u32>>)> = None;
    'approx: for m in 1..=max_m {
        let Some(qm) = budgeted(&mut overflow, || tower.level(m))? else {
            break;
        };
        let mut k: BTreeSet<Vec<u32>> = qm.iter().map(<[u32]>::to_vec).collect();
        approximants.push(KApproximant {
            n: 0,
            m,
            order: k.len(),
            index: 1,
        });
        for n in 1..=max_n {
            let path = Vertex(vec![0; n]);
            let Some(sub) = budgeted(&mut overflow, || stabilizer_section_subgroup(tower, n, m, &path))? else {
                break 'approx;
            };
            k = k.intersection(&sub.elements).cloned().collect();
            approximants.push(KApproximant {
                n,
                m,
                order: k.len(),
                index: qm.order() / k.len(),
            });
            deepest = Some((m, k.clone()));
        }
    }
    let last_m = deepest.as_ref().map(|(m, _)| *m);
    let at_last: Vec<&KApproximant> = approximants
        .iter()
        .filter(|a| Some(a.m) == last_m)
        .collect();
    let stabilized = at_last.len() >= 2 && {
        let t = &at_last[at_last.len() - 2..];
        t[0].index == t[1].index
    };
    let index = at_last.last().map(|a| a.index);

    let mut representatives = Vec::new();
    if let Some((m, k)) = &deepest {
        let qm = tower.level(*m)?;
        let kidx: Vec<usize> = k.iter().map(|t| qm.index_of(t).expect("subgroup of the quotient")).collect();
        let mut coset = vec![usize::MAX; qm.order()];
        let mut cosets: Vec<Vec<usize>> = Vec::new();
        for i in 0..qm.order() {
            if coset[i] != usize::MAX {
                continue;
            }
            let members: Vec<usize> = kidx.iter().map(|&h| qm.compose(i, h)).collect();
            for &x in &members {
                coset[x] = cosets.len();
            }
            let mut members = members;
            members.sort_unstable();
            cosets.push(members);
        }
        let budget = tower.budgets().closure_nodes;
        for members in &cosets {
            let mut chosen = None;
            for &x in members.iter().take(REPRESENTATIVE_TRIES) {
                let g = qm.witness_element(aut, x);
                let ends = classify_fixed_ends(aut, &g, budget)?;
                let infinite = ends.is_infinite();
                if chosen.is_none() || infinite {
                    chosen = Some((x, g, ends));
                }
                if infinite {
                    break;
                }
            }
            let (x, g, ends) = chosen.expect("cosets are non-empty");
            representatives.push(Representative {
                element: aut.format_element(&g),
                level: *m,
                fixed_points: qm.fixed_points(x),
                ends,
            });
        }
    }
    let all_representatives_infinite = !representatives.is_empty() && representatives.iter().all(|r| r.ends.is_infinite());
    Ok(VssfEvidence {
        max_n,
        max_m,
        surjectivity,
        all_onto,
        approximants,
        stabilized,
        index,
        representatives,
        all_representatives_infinite,
        overflow,
    })
}
