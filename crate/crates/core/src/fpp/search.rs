//! Exhaustive enumeration of small automata up to state renaming and alphabet relabeling.
//!
//! For alphabet size `d` and `s` states, candidates are numbered `0..(d!·(s+1)^d)^s` in mixed
//! radix, one digit per state (state 0 most significant). A digit encodes the state's
//! permutation (lexicographic rank) and its sections (letter 0 most significant, 0 for the
//! identity and `k + 1` for state `k`). A candidate is kept when every state is nontrivial and
//! its encoding is the least among all relabelings, so each class appears exactly once. The
//! position `(d, s, next)` is a complete description of the search state, which makes runs
//! resumable and splittable.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::kneading::check_kneading;
use super::prop4::{conditions_one_two, Tri};
use crate::error::{Error, Result};
use crate::wreath::{Automaton, Letter, Perm, StateSpec, Target};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchSpace {
    pub alphabets: Vec<usize>,
    pub max_states: usize,
}

/// The next candidate to examine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Frontier {
    pub alphabet: usize,
    pub states: usize,
    pub next: u64,
}

impl fmt::Display for Frontier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "alphabet={} states={} next={}", self.alphabet, self.states, self.next)
    }
}

impl FromStr for Frontier {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed frontier: {s:?}"));
        let mut fields = [None; 3];
        for part in s.split_whitespace() {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            let slot = match k {
                "alphabet" => 0,
                "states" => 1,
                "next" => 2,
                _ => return Err(bad()),
            };
            fields[slot] = Some(v.parse::<u64>().map_err(|_| bad())?);
        }
        match fields {
            [Some(a), Some(s), Some(n)] => Ok(Frontier {
                alphabet: a as usize,
                states: s as usize,
                next: n,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CatalogRow {
    pub alphabet: usize,
    pub states: usize,
    pub index: u64,
    pub automaton: String,
    pub kneading: bool,
    /// Evaluated for kneading automata only.
    pub cond1: Option<bool>,
    /// Evaluated when condition 1 holds.
    pub cond2: Option<Tri>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchSummary {
    pub examined: u64,
    pub catalogued: u64,
    pub kneading: u64,
    pub failing_cond1: u64,
    pub failing_cond2: u64,
    pub undecided: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchOutcome {
    pub rows: Vec<CatalogRow>,
    pub summary: SearchSummary,
    pub complete: bool,
    /// Where to resume when the budget ran out.
    pub frontier: Option<Frontier>,
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn candidate_count(d: usize, s: usize) -> Option<u64> {
    let digit = factorial(d).checked_mul((s as u64 + 1).checked_pow(d as u32)?)?;
    digit.checked_pow(s as u32)
}

/// The `k`-th permutation of `0..d` in lexicographic order.
fn nth_permutation(d: usize, mut k: u64) -> Vec<Letter> {
    let mut pool: Vec<Letter> = (0..d as Letter).collect();
    let mut out = Vec::with_capacity(d);
    for i in (0..d).rev() {
        let f = factorial(i);
        out.push(pool.remove((k / f) as usize));
        k %= f;
    }
    out
}

/// Per state: permutation images, then section codes (0 identity, `k + 1` state `k`).
type Table = Vec<(Vec<Letter>, Vec<u8>)>;

fn decode(d: usize, s: usize, mut index: u64) -> Table {
    let sec_radix = (s as u64 + 1).pow(d as u32);
    let digit_radix = factorial(d) * sec_radix;
    let mut digits = vec![0u64; s];
    for k in (0..s).rev() {
        digits[k] = index % digit_radix;
        index /= digit_radix;
    }
    digits
        .into_iter()
        .map(|digit| {
            let perm = nth_permutation(d, digit / sec_radix);
            let mut code = digit % sec_radix;
            let mut secs = vec![0u8; d];
            for x in (0..d).rev() {
                secs[x] = (code % (s as u64 + 1)) as u8;
                code /= s as u64 + 1;
            }
            (perm, secs)
        })
        .collect()
}

fn encoding(table: &Table) -> Vec<u8> {
    table
        .iter()
        .flat_map(|(p, s)| p.iter().copied().chain(s.iter().copied()))
        .collect()
}

/// Renames state `i` to `states[i]` and letter `x` to `letters[x]`.
fn relabel_table(table: &Table, states: &[usize], letters: &[Letter]) -> Table {
    let d = letters.len();
    let mut out = vec![(vec![0; d], vec![0; d]); table.len()];
    for (i, (perm, secs)) in table.iter().enumerate() {
        let (p, s) = &mut out[states[i]];
        for x in 0..d {
            let y = letters[x] as usize;
            p[y] = letters[perm[x] as usize];
            s[y] = match secs[x] {
                0 => 0,
                k => states[k as usize - 1] as u8 + 1,
            };
        }
    }
    out
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    (0..factorial(n))
        .map(|k| nth_permutation(n, k).into_iter().map(usize::from).collect())
        .collect()
}

fn canonical_table(table: &Table, d: usize) -> Table {
    let letter_perms = all_permutations(d);
    let mut best: Option<(Vec<u8>, Table)> = None;
    for sp in all_permutations(table.len()) {
        for lp in &letter_perms {
            let lp: Vec<Letter> = lp.iter().map(|&x| x as Letter).collect();
            let t = relabel_table(table, &sp, &lp);
            let e = encoding(&t);
            if best.as_ref().is_none_or(|(b, _)| e < *b) {
                best = Some((e, t));
            }
        }
    }
    best.map(|(_, t)| t).unwrap_or_default()
}

fn state_name(i: usize) -> String {
    const NAMES: &[u8] = b"abcdfghijklmnopqrstuvwxyz";
    match NAMES.get(i) {
        Some(&c) => (c as char).to_string(),
        None => format!("s{i}"),
    }
}

fn build(d: usize, table: &Table) -> Result<Automaton> {
    let specs = table
        .iter()
        .enumerate()
        .map(|(i, (perm, secs))| {
            Ok(StateSpec {
                name: state_name(i),
                perm: Perm::from_images(perm.clone())?,
                sections: secs
                    .iter()
                    .map(|&k| if k == 0 { "1".into() } else { state_name(k as usize - 1) })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Automaton::new(d, specs)
}

fn table_of(aut: &Automaton) -> Table {
    aut.states()
        .iter()
        .map(|st| {
            let secs = st
                .sections
                .iter()
                .map(|t| match t {
                    Target::Identity => 0,
                    Target::State(k) => *k as u8 + 1,
                })
                .collect();
            (st.perm.images().to_vec(), secs)
        })
        .collect()
}

/// The least relabeling of `aut` (states renamed `a, b, c, d, f, ...`).
pub fn canonical_form(aut: &Automaton) -> Result<Automaton> {
    build(aut.degree(), &canonical_table(&table_of(aut), aut.degree()))
}

/// `aut` with letter `x` renamed `letters(x)`.
pub fn relabel(aut: &Automaton, letters: &Perm) -> Result<Automaton> {
    if letters.degree() != aut.degree() {
        return Err(Error::InvalidArgument("relabeling has the wrong degree".into()));
    }
    let ids: Vec<usize> = (0..aut.num_states()).collect();
    let t = relabel_table(&table_of(aut), &ids, letters.images());
    let names: Vec<&str> = aut.states().iter().map(|s| s.name.as_str()).collect();
    let specs = t
        .iter()
        .enumerate()
        .map(|(i, (perm, secs))| {
            Ok(StateSpec {
                name: names[i].to_string(),
                perm: Perm::from_images(perm.clone())?,
                sections: secs
                    .iter()
                    .map(|&k| if k == 0 { "1".into() } else { names[k as usize - 1].to_string() })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Automaton::new(aut.degree(), specs)
}

fn one_line(aut: &Automaton) -> String {
    aut.to_string().trim_end().replace('\n', "; ")
}

/// Examines at most `budget` candidates starting at `start` (or the beginning), returning the
/// catalog rows found in deterministic order.
pub fn search_kneading(
    space: &SearchSpace,
    start: Option<Frontier>,
    budget: u64,
    closure_budget: usize,
) -> Result<SearchOutcome> {
    let mut alphabets = space.alphabets.clone();
    alphabets.sort_unstable();
    alphabets.dedup();
    if let Some(&d) = alphabets.iter().find(|&&d| !(2..=8).contains(&d)) {
        return Err(Error::InvalidArgument(format!("alphabet size {d} is outside 2..=8")));
    }
    let positions: Vec<(usize, usize, u64)> = alphabets
        .iter()
        .flat_map(|&d| (0..=space.max_states).map(move |s| (d, s)))
        .map(|(d, s)| {
            candidate_count(d, s)
                .map(|c| (d, s, c))
                .ok_or_else(|| Error::InvalidArgument(format!("search space for d={d}, s={s} is too large")))
        })
        .collect::<Result<_>>()?;
    let (mut block, mut next) = match start {
        None => (0, 0),
        Some(f) => {
            let b = positions
                .iter()
                .position(|&(d, s, _)| d == f.alphabet && s == f.states)
                .filter(|&b| f.next <= positions[b].2)
                .ok_or_else(|| Error::InvalidArgument(format!("frontier {f} is outside the search space")))?;
            (b, f.next)
        }
    };

    let mut rows = Vec::new();
    let mut summary = SearchSummary::default();
    while block < positions.len() {
        let (d, s, count) = positions[block];
        if next >= count {
            block += 1;
            next = 0;
            continue;
        }
        if summary.examined >= budget {
            return Ok(SearchOutcome {
                rows,
                summary,
                complete: false,
                frontier: Some(Frontier {
                    alphabet: d,
                    states: s,
                    next,
                }),
            });
        }
        let index = next;
        next += 1;
        summary.examined += 1;
        let table = decode(d, s, index);
        if encoding(&canonical_table(&table, d)) != encoding(&table) {
            continue;
        }
        let aut = build(d, &table)?;
        if aut.nontrivial_states().len() != s {
            continue;
        }
        let kneading = check_kneading(&aut).is_kneading();
        let (mut cond1, mut cond2) = (None, None);
        if kneading {
            summary.kneading += 1;
            let (c1, c2) = conditions_one_two(&aut, closure_budget)?;
            cond1 = Some(c1);
            if c1 {
                cond2 = Some(c2);
                match c2 {
                    Tri::Fails => summary.failing_cond2 += 1,
                    Tri::Unknown => summary.undecided += 1,
                    Tri::Holds => {}
                }
            } else {
                summary.failing_cond1 += 1;
            }
        }
        summary.catalogued += 1;
        rows.push(CatalogRow {
            alphabet: d,
            states: s,
            index,
            automaton: one_line(&aut),
            kneading,
            cond1,
            cond2,
        });
    }
    Ok(SearchOutcome {
        rows,
        summary,
        complete: true,
        frontier: None,
    })
}
