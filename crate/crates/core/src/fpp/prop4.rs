//! The three-condition test for `μ(fixes an end) = 0` on groups generated by the nontrivial
//! states `g_1, ..., g_n` of a kneading automaton:
//!
//! 1. some letter `x₀` is moved by exactly one generator `g_i`;
//! 2. `g_j|_{x₀} ≠ g_i` for every `j ≠ i`;
//! 3. every nucleus element lying in `H_i = ⟨g_j : j ≠ i⟩` fixes infinitely many ends.
//!
//! Membership in `H_i` is decided soundly in both directions or left unknown: a level quotient
//! of `H_i` missing the element proves non-membership, an explicit word proves membership, and an
//! exhausted enumeration of a finite `H_i` proves non-membership.

use std::collections::HashMap;

use serde::Serialize;

use super::kneading::{check_kneading, KneadingReport, KneadingVerdict};
use super::vssf::approximant;
use crate::ends::{classify_fixed_ends, EndKind, EndVerdict};
use crate::error::Result;
use crate::nucleus::{compute_nucleus, NucleusBudget, NucleusStatus};
use crate::quotient::{LevelQuotient, QuotientTower};
use crate::wreath::{Automaton, Element, Equality, Letter, Symbol, Target};
use crate::Budgets;

/// Orderings are only enumerated up to this many generators.
const MAX_ORDERED_GENERATORS: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Tri {
    Holds,
    Fails,
    Unknown,
}

impl Tri {
    fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::Fails, _) | (_, Tri::Fails) => Tri::Fails,
            (Tri::Unknown, _) | (_, Tri::Unknown) => Tri::Unknown,
            _ => Tri::Holds,
        }
    }

    fn all(items: impl IntoIterator<Item = Tri>) -> Tri {
        items.into_iter().fold(Tri::Holds, Tri::and)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Cond2Check {
    pub other: String,
    pub section: String,
    pub holds: Tri,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Membership {
    Member { word: String },
    NonMember { reason: String },
    Unknown,
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipRow {
    pub element: String,
    pub membership: Membership,
    /// End classification, for members only.
    pub ends: Option<EndVerdict>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop4Witness {
    pub letter: Letter,
    pub generator: String,
    pub cond2: Vec<Cond2Check>,
    pub cond2_holds: Tri,
    /// Not evaluated when condition 2 already fails.
    pub cond3: Vec<MembershipRow>,
    pub cond3_holds: Option<Tri>,
    pub holds: Tri,
    #[serde(skip)]
    generator_index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Prop4Condition {
    #[serde(rename = "kneading")]
    Kneading,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Prop4Verdict {
    Holds { letter: Letter, generator: String },
    Fails { condition: Prop4Condition, witness: String },
    Unknown { reason: String },
}

#[derive(Clone, Debug, Serialize)]
pub struct OrderingResult {
    pub order: Vec<String>,
    pub in_approximant: bool,
}

/// Whether `π_m(g_{σ1} ⋯ g_{σn})` lies in the approximant `K⁽ⁿ⁾` of `K_G`. The approximant
/// contains `π_m(K_G)`, so a passing ordering is necessary evidence, not proof.
#[derive(Clone, Debug, Serialize)]
pub struct ProductCheck {
    pub n: usize,
    pub m: usize,
    pub orderings: Vec<OrderingResult>,
    pub any: bool,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop4Report {
    pub generators: Vec<String>,
    pub kneading: KneadingReport,
    pub contracting: bool,
    pub nucleus: Vec<String>,
    pub witnesses: Vec<Prop4Witness>,
    pub product_check: ProductCheck,
    pub verdict: Prop4Verdict,
}

fn target_element(aut: &Automaton, t: Target) -> Element {
    match t {
        Target::Identity => aut.identity(),
        Target::State(s) => aut.generator(s),
    }
}

/// Witnesses `(x₀, g_i)` of condition 1 with condition 2 evaluated.
fn witnesses(aut: &Automaton, closure_budget: usize) -> Result<Vec<Prop4Witness>> {
    let gens = aut.nontrivial_states();
    let mut out = Vec::new();
    for x in 0..aut.degree() as Letter {
        let movers: Vec<usize> = gens
            .iter()
            .copied()
            .filter(|&g| !aut.states()[g].perm.fixes(x))
            .collect();
        let [i] = movers[..] else { continue };
        let gi = aut.generator(i);
        let mut cond2 = Vec::new();
        for &j in gens.iter().filter(|&&j| j != i) {
            let t = aut.states()[j].sections[x as usize];
            let section = target_element(aut, t);
            let holds = match aut.equal(&section, &gi, closure_budget)? {
                Equality::Equal => Tri::Fails,
                Equality::Distinct(_) => Tri::Holds,
                Equality::Unknown => Tri::Unknown,
            };
            cond2.push(Cond2Check {
                other: aut.states()[j].name.clone(),
                section: aut.format_element(&section),
                holds,
            });
        }
        let cond2_holds = Tri::all(cond2.iter().map(|c| c.holds));
        out.push(Prop4Witness {
            letter: x,
            generator: aut.states()[i].name.clone(),
            cond2,
            cond2_holds,
            cond3: Vec::new(),
            cond3_holds: None,
            holds: cond2_holds.and(Tri::Unknown),
            generator_index: i,
        });
    }
    Ok(out)
}

/// Conditions 1 and 2 only: whether a witness exists, and whether some witness passes 2.
pub fn conditions_one_two(aut: &Automaton, closure_budget: usize) -> Result<(bool, Tri)> {
    let ws = witnesses(aut, closure_budget)?;
    let cond2 = if ws.iter().any(|w| w.cond2_holds == Tri::Holds) {
        Tri::Holds
    } else if ws.iter().any(|w| w.cond2_holds == Tri::Unknown) {
        Tri::Unknown
    } else {
        Tri::Fails
    };
    Ok((!ws.is_empty(), cond2))
}

/// Everything known about membership in one subgroup `H_i`.
struct SubgroupProbe {
    sieve: Vec<LevelQuotient>,
    ball: HashMap<Vec<u32>, Element>,
    complete: bool,
}

impl SubgroupProbe {
    fn new(aut: &Automaton, syms: &[Symbol], budgets: &Budgets) -> Result<Self> {
        let mut sieve = Vec::new();
        for k in 1..=budgets.sieve_level {
            match LevelQuotient::generated_by(aut, k, syms, budgets) {
                Ok(q) => sieve.push(q),
                Err(e) if e.is_budget() => break,
                Err(e) => return Err(e),
            }
        }

        // Ball in the Cayley graph of H_i, one shortlex word per element.
        let mut ball = HashMap::new();
        let id = aut.identity();
        ball.insert(aut.section_closure(&id, budgets.closure_nodes)?.key(), id.clone());
        let mut frontier = vec![id];
        let mut complete = true;
        for _ in 0..budgets.word_search_len {
            let mut next = Vec::new();
            for g in &frontier {
                for &s in syms {
                    let h = aut.element(&[g.word(), &[s]].concat());
                    let key = match aut.section_closure(&h, budgets.closure_nodes) {
                        Ok(m) => m.key(),
                        Err(e) if e.is_budget() => {
                            complete = false;
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    if ball.contains_key(&key) {
                        continue;
                    }
                    if ball.len() >= budgets.word_search_elements {
                        complete = false;
                        break;
                    }
                    ball.insert(key, h.clone());
                    next.push(h);
                }
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        if !frontier.is_empty() {
            complete = false;
        }
        Ok(SubgroupProbe { sieve, ball, complete })
    }

    fn membership(&self, aut: &Automaton, g: &Element, budgets: &Budgets) -> Result<Membership> {
        for q in &self.sieve {
            let t = aut.level_perm(g, q.level(), budgets.table_leaves)?;
            if q.index_of(t.images()).is_none() {
                return Ok(Membership::NonMember {
                    reason: format!("outside the level-{} image", q.level()),
                });
            }
        }
        let key = aut.section_closure(g, budgets.closure_nodes)?.key();
        if let Some(w) = self.ball.get(&key) {
            return Ok(Membership::Member {
                word: aut.format_element(w),
            });
        }
        if self.complete {
            return Ok(Membership::NonMember {
                reason: "the subgroup is finite and was enumerated".into(),
            });
        }
        Ok(Membership::Unknown)
    }
}

fn lex_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (1..n).rev().find(|&i| p[i - 1] < p[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| p[j] > p[i - 1]).unwrap();
        p.swap(i - 1, j);
        p[i..].reverse();
    }
}

fn product_check(tower: &QuotientTower<'_>, gens: &[usize]) -> Result<ProductCheck> {
    let aut = tower.automaton();
    let mut check = ProductCheck {
        n: 0,
        m: 0,
        orderings: Vec::new(),
        any: false,
        skipped: None,
    };
    if gens.len() > MAX_ORDERED_GENERATORS {
        check.skipped = Some(format!("more than {MAX_ORDERED_GENERATORS} generators"));
        return Ok(check);
    }
    let mut found = None;
    for (n, m) in [(2, 2), (1, 1)] {
        match approximant(tower, n, m) {
            Ok(k) => {
                found = Some((n, m, k));
                break;
            }
            Err(e) if e.is_budget() => check.skipped = Some(e.to_string()),
            Err(e) => return Err(e),
        }
    }
    let Some((n, m, k)) = found else {
        return Ok(check);
    };
    check.skipped = None;
    check.n = n;
    check.m = m;
    for order in lex_permutations(gens.len()) {
        let word: Vec<Symbol> = order.iter().map(|&i| Symbol::new(gens[i], false)).collect();
        let t = aut.level_perm(&aut.element(&word), m, tower.budgets().table_leaves)?;
        let in_approximant = k.contains(t.images());
        check.any |= in_approximant;
        check.orderings.push(OrderingResult {
            order: order.iter().map(|&i| aut.states()[gens[i]].name.clone()).collect(),
            in_approximant,
        });
    }
    Ok(check)
}

pub fn check_prop4(tower: &QuotientTower<'_>) -> Result<Prop4Report> {
    let aut = tower.automaton();
    let budgets = *tower.budgets();
    let gens = aut.nontrivial_states();
    let kneading = check_kneading(aut);
    let nucleus = compute_nucleus(
        aut,
        &NucleusBudget {
            max_elements: budgets.nucleus_elements,
            max_generations: budgets.nucleus_generations,
            closure_nodes: budgets.closure_nodes,
        },
    )?;
    let contracting = nucleus.status == NucleusStatus::Contracting;
    let mut ws = witnesses(aut, budgets.closure_nodes)?;

    let mut probes: HashMap<usize, SubgroupProbe> = HashMap::new();
    for w in &mut ws {
        if w.cond2_holds == Tri::Fails {
            w.holds = Tri::Fails;
            continue;
        }
        if !contracting {
            w.cond3_holds = Some(Tri::Unknown);
            w.holds = Tri::Unknown;
            continue;
        }
        let i = w.generator_index;
        if let std::collections::hash_map::Entry::Vacant(slot) = probes.entry(i) {
            let syms: Vec<Symbol> = gens
                .iter()
                .filter(|&&j| j != i)
                .flat_map(|&j| [Symbol::new(j, false), Symbol::new(j, true)])
                .collect();
            slot.insert(SubgroupProbe::new(aut, &syms, &budgets)?);
        }
        let probe = &probes[&i];
        let mut rows = Vec::new();
        for e in &nucleus.elements {
            let membership = probe.membership(aut, &e.element, &budgets)?;
            let ends = match membership {
                Membership::Member { .. } => Some(classify_fixed_ends(aut, &e.element, budgets.closure_nodes)?),
                _ => None,
            };
            rows.push(MembershipRow {
                element: e.name.clone(),
                membership,
                ends,
            });
        }
        let cond3 = Tri::all(rows.iter().map(|r| match (&r.membership, &r.ends) {
            (Membership::NonMember { .. }, _) => Tri::Holds,
            (Membership::Unknown, _) => Tri::Unknown,
            (_, Some(v)) => match v.kind() {
                Some(EndKind::InfinitelyMany) => Tri::Holds,
                Some(_) => Tri::Fails,
                None => Tri::Unknown,
            },
            (_, None) => Tri::Unknown,
        }));
        w.cond3 = rows;
        w.cond3_holds = Some(cond3);
        w.holds = w.cond2_holds.and(cond3);
    }

    let verdict = if let KneadingVerdict::NotKneading { condition, reason } = &kneading.verdict {
        Prop4Verdict::Fails {
            condition: Prop4Condition::Kneading,
            witness: format!("{condition}: {reason}"),
        }
    } else if ws.is_empty() {
        Prop4Verdict::Fails {
            condition: Prop4Condition::One,
            witness: "every letter is moved by zero or several generators".into(),
        }
    } else if let Some(w) = ws.iter().find(|w| w.holds == Tri::Holds) {
        Prop4Verdict::Holds {
            letter: w.letter,
            generator: w.generator.clone(),
        }
    } else if ws.iter().any(|w| w.holds == Tri::Unknown) {
        let reason = if contracting {
            "membership or end classification unresolved within budget"
        } else {
            "the nucleus did not close within budget"
        };
        Prop4Verdict::Unknown { reason: reason.into() }
    } else if let Some(w) = ws.iter().find(|w| w.cond2_holds != Tri::Fails) {
        let bad = w
            .cond3
            .iter()
            .find(|r| r.ends.as_ref().is_some_and(|v| !v.is_infinite()))
            .expect("condition 3 failed on some member");
        Prop4Verdict::Fails {
            condition: Prop4Condition::Three,
            witness: format!(
                "x0 = {}, g_i = {}: {} lies in the subgroup and fixes {}",
                w.letter,
                w.generator,
                bad.element,
                bad.ends.as_ref().unwrap().label()
            ),
        }
    } else {
        let w = &ws[0];
        let bad = w.cond2.iter().find(|c| c.holds == Tri::Fails).unwrap();
        Prop4Verdict::Fails {
            condition: Prop4Condition::Two,
            witness: format!(
                "x0 = {}, g_i = {}: {}|{} = {}",
                w.letter, w.generator, bad.other, w.letter, bad.section
            ),
        }
    };

    Ok(Prop4Report {
        generators: gens.iter().map(|&g| aut.states()[g].name.clone()).collect(),
        kneading,
        contracting,
        nucleus: nucleus.elements.iter().map(|e| e.name.clone()).collect(),
        witnesses: ws,
        product_check: product_check(tower, &gens)?,
        verdict,
    })
}
