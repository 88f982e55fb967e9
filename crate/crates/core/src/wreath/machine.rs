//! Section closures of single elements, minimized by bisimulation.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::{Automaton, Element, Letter, Perm, Symbol, Vertex};
use crate::error::{Error, Result};

/// One bisimulation class of sections.
#[derive(Clone, Debug)]
pub struct MachineNode {
    pub perm: Perm,
    pub successors: Vec<usize>,
    pub identity: bool,
    /// Shortlex-least explored word in the class.
    pub representative: Element,
}

/// The minimal finite-state machine of a single element.
///
/// Nodes are numbered breadth-first from the root (node 0), reading letters in increasing
/// order, so two elements are equal exactly when their machines are identical.
#[derive(Clone, Debug)]
pub struct SectionMachine {
    degree: usize,
    nodes: Vec<MachineNode>,
}

/// Result of [`Automaton::equal`].
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub enum Equality {
    Equal,
    /// A vertex whose images differ.
    Distinct(Vertex),
    /// The section closure of `g h^-1` outgrew the budget.
    Unknown,
}

struct Explored {
    words: Vec<Vec<Symbol>>,
    perms: Vec<Vec<Letter>>,
    succ: Vec<Vec<usize>>,
}

impl Automaton {
    /// Breadth-first closure of the sections of `word`, deduplicated by normalized word.
    fn explore(&self, word: &[Symbol], budget: usize) -> Result<Explored> {
        let start = self.normalize(word.iter().copied());
        let mut index: HashMap<Vec<Symbol>, usize> = HashMap::new();
        let mut ex = Explored {
            words: vec![start.clone()],
            perms: Vec::new(),
            succ: Vec::new(),
        };
        index.insert(start, 0);
        let mut next = 0;
        while next < ex.words.len() {
            let (perm, sections) = self.word_first_level(&ex.words[next]);
            let mut succ = Vec::with_capacity(sections.len());
            for s in sections {
                let s = self.normalize(s);
                let id = match index.get(&s) {
                    Some(&id) => id,
                    None => {
                        let id = ex.words.len();
                        if id >= budget {
                            return Err(Error::ClosureOverflow { budget });
                        }
                        index.insert(s.clone(), id);
                        ex.words.push(s);
                        id
                    }
                };
                succ.push(id);
            }
            ex.perms.push(perm);
            ex.succ.push(succ);
            next += 1;
        }
        Ok(ex)
    }

    /// The bisimulation-minimal machine of all sections of `g`.
    ///
    /// Fails with [`Error::ClosureOverflow`] when more than `budget` distinct section words
    /// appear, which covers both non-finite-state behaviour and a budget set too low.
    pub fn section_closure(&self, g: &Element, budget: usize) -> Result<SectionMachine> {
        self.check(g)?;
        let ex = self.explore(g.word(), budget.max(1))?;
        Ok(SectionMachine::minimize(self.degree(), ex, g))
    }

    /// Exact equality test.
    ///
    /// Explores the sections of `g h^-1` breadth-first. The first section with a non-identity
    /// first-level action yields a distinguishing vertex; a closure in which every section acts
    /// trivially on the first level proves `g = h`.
    pub fn equal(&self, g: &Element, h: &Element, budget: usize) -> Result<Equality> {
        let p = g.multiply(&h.invert())?;
        self.check(&p)?;
        let start = self.normalize(p.word().iter().copied());
        let mut index: HashMap<Vec<Symbol>, usize> = HashMap::new();
        let mut words = vec![start.clone()];
        let mut parent: Vec<Option<(usize, Letter)>> = vec![None];
        index.insert(start, 0);
        let mut next = 0;
        while next < words.len() {
            let (perm, sections) = self.word_first_level(&words[next]);
            if let Some(x) = (0..perm.len()).find(|&x| perm[x] as usize != x) {
                let mut path = vec![x as Letter];
                let mut cur = next;
                while let Some((p, letter)) = parent[cur] {
                    path.push(letter);
                    cur = p;
                }
                path.reverse();
                // p(u) != u with p = g h^-1, so g and h differ at h^-1(u).
                let witness = self.apply(&h.invert(), &Vertex(path))?;
                return Ok(Equality::Distinct(witness));
            }
            for (x, s) in sections.into_iter().enumerate() {
                let s = self.normalize(s);
                if !index.contains_key(&s) {
                    if words.len() >= budget {
                        return Ok(Equality::Unknown);
                    }
                    index.insert(s.clone(), words.len());
                    words.push(s);
                    parent.push(Some((next, x as Letter)));
                }
            }
            next += 1;
        }
        Ok(Equality::Equal)
    }
}

impl SectionMachine {
    fn minimize(degree: usize, ex: Explored, origin: &Element) -> SectionMachine {
        let n = ex.words.len();
        // Moore refinement: start from the first-level action, split until successors agree.
        let mut class: Vec<usize> = {
            let mut ids: HashMap<&[Letter], usize> = HashMap::new();
            ex.perms
                .iter()
                .map(|p| {
                    let next = ids.len();
                    *ids.entry(p.as_slice()).or_insert(next)
                })
                .collect()
        };
        let mut count = class.iter().max().map_or(0, |m| m + 1);
        loop {
            let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
            let refined: Vec<usize> = (0..n)
                .map(|i| {
                    let mut sig = Vec::with_capacity(degree + 1);
                    sig.push(class[i]);
                    sig.extend(ex.succ[i].iter().map(|&j| class[j]));
                    let next = ids.len();
                    *ids.entry(sig).or_insert(next)
                })
                .collect();
            let new_count = ids.len();
            class = refined;
            if new_count == count {
                break;
            }
            count = new_count;
        }

        // Canonical numbering: breadth-first from the root's class.
        let mut queue = VecDeque::from([0usize]);
        let mut any_of_class: Vec<usize> = vec![usize::MAX; count];
        for i in 0..n {
            if any_of_class[class[i]] == usize::MAX {
                any_of_class[class[i]] = i;
            }
        }
        let mut renumber = vec![usize::MAX; count];
        renumber[class[0]] = 0;
        let mut canon_class = vec![class[0]];
        while let Some(c) = queue.pop_front() {
            let rep = any_of_class[canon_class[c]];
            for &s in &ex.succ[rep] {
                let sc = class[s];
                if renumber[sc] == usize::MAX {
                    renumber[sc] = canon_class.len();
                    canon_class.push(sc);
                    queue.push_back(renumber[sc]);
                }
            }
        }

        let mut best: Vec<Option<usize>> = vec![None; canon_class.len()];
        for i in 0..n {
            let c = renumber[class[i]];
            if c == usize::MAX {
                continue;
            }
            let better = match best[c] {
                None => true,
                Some(j) => shortlex_less(&ex.words[i], &ex.words[j]),
            };
            if better {
                best[c] = Some(i);
            }
        }

        let nodes: Vec<MachineNode> = canon_class
            .iter()
            .enumerate()
            .map(|(c, &cls)| {
                let rep = any_of_class[cls];
                let successors: Vec<usize> =
                    ex.succ[rep].iter().map(|&s| renumber[class[s]]).collect();
                let perm = Perm(ex.perms[rep].clone());
                let identity = perm.is_identity() && successors.iter().all(|&s| s == c);
                MachineNode {
                    perm,
                    successors,
                    identity,
                    representative: origin.with_word(ex.words[best[c].unwrap()].clone()),
                }
            })
            .collect();
        SectionMachine { degree, nodes }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[MachineNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> usize {
        0
    }

    /// Whether the machine's root element acts trivially.
    pub fn is_identity(&self) -> bool {
        self.nodes[0].identity
    }

    /// Canonical encoding of the sub-machine rooted at `node`. Two nodes, possibly of different
    /// machines over the same alphabet, represent the same automorphism iff their keys agree.
    pub fn key_at(&self, node: usize) -> Vec<u32> {
        let mut number: HashMap<usize, u32> = HashMap::new();
        let mut order = vec![node];
        number.insert(node, 0);
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            for &s in &self.nodes[u].successors {
                if let Entry::Vacant(slot) = number.entry(s) {
                    slot.insert(order.len() as u32);
                    order.push(s);
                }
            }
            i += 1;
        }
        let mut key = Vec::with_capacity(order.len() * 2 * self.degree);
        for &u in &order {
            key.extend(self.nodes[u].perm.images().iter().map(|&x| x as u32));
            key.extend(self.nodes[u].successors.iter().map(|s| number[s]));
        }
        key
    }

    pub fn key(&self) -> Vec<u32> {
        self.key_at(0)
    }

    /// Nodes lying on a directed cycle (including self-loops).
    pub fn cyclic_nodes(&self) -> Vec<bool> {
        cyclic_nodes(self.nodes.len(), |u| self.nodes[u].successors.iter().copied())
    }

    /// Nodes reachable from a cycle: exactly the sections occurring at arbitrarily deep levels.
    pub fn recurrent_nodes(&self) -> Vec<usize> {
        let cyclic = self.cyclic_nodes();
        let mut seen = cyclic.clone();
        let mut stack: Vec<usize> = (0..self.nodes.len()).filter(|&u| cyclic[u]).collect();
        while let Some(u) = stack.pop() {
            for &s in &self.nodes[u].successors {
                if !seen[s] {
                    seen[s] = true;
                    stack.push(s);
                }
            }
        }
        (0..self.nodes.len()).filter(|&u| seen[u]).collect()
    }
}

/// Marks nodes that lie on a directed cycle of the graph given by `edges`.
pub(crate) fn cyclic_nodes<I, F>(n: usize, edges: F) -> Vec<bool>
where
    F: Fn(usize) -> I,
    I: Iterator<Item = usize>,
{
    let mut g: DiGraph<(), ()> = DiGraph::with_capacity(n, n);
    let ids: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    let mut self_loop = vec![false; n];
    for u in 0..n {
        for v in edges(u) {
            if u == v {
                self_loop[u] = true;
            }
            g.add_edge(ids[u], ids[v], ());
        }
    }
    let mut cyclic = self_loop;
    for scc in tarjan_scc(&g) {
        if scc.len() > 1 {
            for v in scc {
                cyclic[v.index()] = true;
            }
        }
    }
    cyclic
}

pub(crate) fn shortlex_less(a: &[Symbol], b: &[Symbol]) -> bool {
    (a.len(), a) < (b.len(), b)
}
