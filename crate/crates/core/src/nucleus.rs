//! Nucleus of a contracting wreath recursion.
//!
//! The nucleus is the set of elements that occur as sections at arbitrarily deep levels. For a
//! single element these are the nodes of its section machine reachable from a cycle
//! ([`SectionMachine::recurrent_nodes`]). The closure starts from the recurrent sections of the
//! states and their inverses, then repeatedly adds the recurrent sections of products of two
//! current members until a whole generation adds nothing.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::wreath::machine::shortlex_less;
use crate::wreath::{Automaton, Element, Perm, SectionMachine, Symbol};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NucleusStatus {
    Contracting,
    BudgetExceeded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct NucleusBudget {
    pub max_elements: usize,
    pub max_generations: usize,
    /// Per-product section closure cap.
    pub closure_nodes: usize,
}

impl Default for NucleusBudget {
    fn default() -> Self {
        NucleusBudget {
            max_elements: 50_000,
            max_generations: 64,
            closure_nodes: crate::DEFAULT_CLOSURE_BUDGET,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct NucleusElement {
    pub name: String,
    #[serde(skip)]
    pub element: Element,
    pub perm: Perm,
    /// Index of the section at each letter.
    pub sections: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct NucleusReport {
    pub status: NucleusStatus,
    pub size: usize,
    pub generations: usize,
    /// Members in shortlex order of their shortest known word. Complete only when the status is
    /// `Contracting`.
    pub elements: Vec<NucleusElement>,
    #[serde(skip)]
    keys: HashMap<Vec<u32>, usize>,
}

impl NucleusReport {
    /// Exact membership test, `None` if the element's closure overflows.
    pub fn index_of(&self, aut: &Automaton, g: &Element, closure_budget: usize) -> Result<Option<usize>> {
        let m = aut.section_closure(g, closure_budget)?;
        Ok(self.keys.get(&m.key()).copied())
    }

    pub fn identity_index(&self) -> Option<usize> {
        self.elements.iter().position(|e| e.element.is_empty())
    }
}

struct Pool {
    keys: HashMap<Vec<u32>, usize>,
    words: Vec<Vec<Symbol>>,
}

impl Pool {
    /// Inserts the recurrent nodes of a machine; returns how many were new.
    fn absorb(&mut self, machine: &SectionMachine) -> usize {
        let mut added = 0;
        for node in machine.recurrent_nodes() {
            let key = machine.key_at(node);
            let word = machine.nodes()[node].representative.word();
            match self.keys.get(&key) {
                Some(&i) => {
                    if shortlex_less(word, &self.words[i]) {
                        self.words[i] = word.to_vec();
                    }
                }
                None => {
                    self.keys.insert(key, self.words.len());
                    self.words.push(word.to_vec());
                    added += 1;
                }
            }
        }
        added
    }
}

/// Computes the nucleus, or reports that the closure did not stabilize within the budget.
pub fn compute_nucleus(aut: &Automaton, budget: &NucleusBudget) -> Result<NucleusReport> {
    let mut pool = Pool {
        keys: HashMap::new(),
        words: Vec::new(),
    };
    let identity = aut.section_closure(&aut.identity(), 1)?;
    pool.absorb(&identity);
    for sym in aut.symbols() {
        let m = aut.section_closure(&aut.element(&[sym]), budget.closure_nodes)?;
        pool.absorb(&m);
    }

    let mut done: HashSet<(usize, usize)> = HashSet::new();
    let mut generations = 0;
    let mut status = NucleusStatus::Contracting;
    'outer: loop {
        if generations >= budget.max_generations {
            status = NucleusStatus::BudgetExceeded;
            break;
        }
        generations += 1;
        let size = pool.words.len();
        let mut added = 0;
        for i in 0..size {
            for j in 0..size {
                if !done.insert((i, j)) {
                    continue;
                }
                let p = aut.element(&[pool.words[i].as_slice(), pool.words[j].as_slice()].concat());
                let m = match aut.section_closure(&p, budget.closure_nodes) {
                    Ok(m) => m,
                    Err(Error::ClosureOverflow { .. }) => {
                        status = NucleusStatus::BudgetExceeded;
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                };
                added += pool.absorb(&m);
                if pool.words.len() > budget.max_elements {
                    status = NucleusStatus::BudgetExceeded;
                    break 'outer;
                }
            }
        }
        if added == 0 {
            break;
        }
    }

    // Canonical order, then section indices.
    let mut order: Vec<usize> = (0..pool.words.len()).collect();
    order.sort_by(|&a, &b| {
        let (wa, wb) = (&pool.words[a], &pool.words[b]);
        (wa.len(), wa).cmp(&(wb.len(), wb))
    });
    let mut position = vec![0; order.len()];
    for (pos, &i) in order.iter().enumerate() {
        position[i] = pos;
    }
    let keys: HashMap<Vec<u32>, usize> = pool
        .keys
        .iter()
        .map(|(k, &i)| (k.clone(), position[i]))
        .collect();
    let mut elements = Vec::with_capacity(order.len());
    for &i in &order {
        let element = aut.element(&pool.words[i]);
        let machine = aut.section_closure(&element, budget.closure_nodes)?;
        let root = &machine.nodes()[0];
        let sections = if status == NucleusStatus::Contracting {
            root.successors
                .iter()
                .map(|&s| keys[&machine.key_at(s)])
                .collect()
        } else {
            root.successors
                .iter()
                .map(|&s| keys.get(&machine.key_at(s)).copied().unwrap_or(usize::MAX))
                .collect()
        };
        elements.push(NucleusElement {
            name: aut.format_element(&element),
            element,
            perm: root.perm.clone(),
            sections,
        });
    }
    Ok(NucleusReport {
        status,
        size: elements.len(),
        generations,
        elements,
        keys,
    })
}
