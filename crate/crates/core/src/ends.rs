//! Fixed ends of finite-state automorphisms.
//!
//! An end fixed by `g` is an infinite path in the *fixed graph* of `g`: the section machine
//! restricted to the edges `u --x--> u|_x` with `u(x) = x`. After trimming nodes without an
//! infinite continuation, `g` fixes
//!
//! * no end when the root is trimmed away,
//! * infinitely many ends when some reachable node on a cycle has two or more surviving edges,
//! * otherwise finitely many, one per path from the root into a cycle.

use std::collections::VecDeque;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::wreath::machine::cyclic_nodes;
use crate::wreath::{Automaton, Element, Letter, SectionMachine, Symbol, Vertex};

/// Ends listed explicitly in a [`Certificate::FinitelyMany`].
pub const MAX_LISTED_ENDS: usize = 1024;

/// The machine of an element together with its fixed-letter edges.
#[derive(Clone, Debug)]
pub struct FixedGraph {
    machine: SectionMachine,
    edges: Vec<Vec<(Letter, usize)>>,
    kept: Vec<bool>,
}

/// An eventually periodic end `prefix · period^∞`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeriodicEnd {
    pub prefix: Vec<Letter>,
    pub period: Vec<Letter>,
}

impl PeriodicEnd {
    /// The first `len` letters of the end.
    pub fn truncate(&self, len: usize) -> Vertex {
        let mut out: Vec<Letter> = self.prefix.iter().copied().take(len).collect();
        while out.len() < len {
            let k = (out.len() - self.prefix.len()) % self.period.len();
            out.push(self.period[k]);
        }
        Vertex(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EndKind {
    NoEnds,
    FinitelyMany(u128),
    InfinitelyMany,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Certificate {
    /// `Y_level(g) = 0`.
    NoEnds { level: usize },
    /// The fixed ends, complete unless `truncated`.
    FinitelyMany {
        ends: Vec<PeriodicEnd>,
        truncated: bool,
    },
    /// From the root, `path` reaches a node lying on the cycle `cycle` that also has the
    /// surviving edge `exit`. `uncountable` records whether some strongly connected part of the
    /// fixed graph branches internally.
    InfinitelyMany {
        path: Vec<Letter>,
        cycle: Vec<Letter>,
        exit: Letter,
        uncountable: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EndClassification {
    pub kind: EndKind,
    pub certificate: Certificate,
}

/// A classification, or `Unknown` when the section closure outgrew its budget.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum EndVerdict {
    Classified(EndClassification),
    Unknown { budget: usize },
}

impl EndVerdict {
    pub fn kind(&self) -> Option<EndKind> {
        match self {
            EndVerdict::Classified(c) => Some(c.kind),
            EndVerdict::Unknown { .. } => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.kind() == Some(EndKind::InfinitelyMany)
    }

    pub fn label(&self) -> String {
        match self.kind() {
            Some(EndKind::NoEnds) => "NoEnds".into(),
            Some(EndKind::FinitelyMany(c)) => format!("FinitelyMany({c})"),
            Some(EndKind::InfinitelyMany) => "InfinitelyMany".into(),
            None => "Unknown".into(),
        }
    }
}

/// `Y_n(g)`: the number of level-`n` vertices fixed by `g`.
pub fn count_fixed_level(aut: &Automaton, g: &Element, n: usize, table_budget: usize) -> Result<usize> {
    Ok(aut.level_perm(g, n, table_budget)?.fixed_points())
}

impl FixedGraph {
    pub fn new(machine: SectionMachine) -> Self {
        let edges: Vec<Vec<(Letter, usize)>> = machine
            .nodes()
            .iter()
            .map(|node| {
                (0..machine.degree() as Letter)
                    .filter(|&x| node.perm.fixes(x))
                    .map(|x| (x, node.successors[x as usize]))
                    .collect()
            })
            .collect();
        let n = edges.len();
        let mut kept = vec![true; n];
        loop {
            let mut changed = false;
            for u in 0..n {
                if kept[u] && !edges[u].iter().any(|&(_, v)| kept[v]) {
                    kept[u] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        FixedGraph {
            machine,
            edges,
            kept,
        }
    }

    pub fn machine(&self) -> &SectionMachine {
        &self.machine
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Fixed-letter edges of a node, untrimmed.
    pub fn edges(&self, node: usize) -> &[(Letter, usize)] {
        &self.edges[node]
    }

    /// Whether the node starts an infinite path.
    pub fn is_kept(&self, node: usize) -> bool {
        self.kept[node]
    }

    /// Number of length-`n` paths from the root in the untrimmed graph, which equals `Y_n`.
    pub fn count_paths(&self, n: usize) -> u128 {
        let mut ways = vec![0u128; self.len()];
        ways[0] = 1;
        for _ in 0..n {
            let mut next = vec![0u128; self.len()];
            for (u, &w) in ways.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                for &(_, v) in &self.edges[u] {
                    next[v] = next[v].saturating_add(w);
                }
            }
            ways = next;
        }
        ways.iter().fold(0u128, |a, &b| a.saturating_add(b))
    }

    fn kept_edges(&self, u: usize) -> impl Iterator<Item = (Letter, usize)> + '_ {
        self.edges[u].iter().copied().filter(|&(_, v)| self.kept[v])
    }

    /// Kept nodes reachable from the root through kept nodes.
    fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        if !self.kept[0] {
            return seen;
        }
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            for (_, v) in self.kept_edges(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Longest path from the root in the untrimmed graph; only meaningful when the root is
    /// trimmed, in which case every path is finite.
    fn longest_path(&self) -> usize {
        let n = self.len();
        let mut memo: Vec<Option<usize>> = vec![None; n];
        // Iterative post-order DFS.
        let mut stack = vec![(0usize, false)];
        while let Some((u, done)) = stack.pop() {
            if memo[u].is_some() {
                continue;
            }
            if done {
                let best = self.edges[u]
                    .iter()
                    .map(|&(_, v)| memo[v].unwrap() + 1)
                    .max()
                    .unwrap_or(0);
                memo[u] = Some(best);
            } else {
                stack.push((u, true));
                for &(_, v) in &self.edges[u] {
                    if memo[v].is_none() {
                        stack.push((v, false));
                    }
                }
            }
        }
        memo[0].unwrap()
    }

    pub fn classify(&self) -> EndClassification {
        if !self.kept[0] {
            return EndClassification {
                kind: EndKind::NoEnds,
                certificate: Certificate::NoEnds {
                    level: self.longest_path() + 1,
                },
            };
        }
        let reach = self.reachable();
        let n = self.len();
        let reach_ref = &reach;
        let cyclic = cyclic_nodes(n, |u| {
            let ok = reach_ref[u];
            self.kept_edges(u)
                .filter(move |&(_, v)| ok && reach_ref[v])
                .map(|(_, v)| v)
        });
        let out_degree = |u: usize| self.kept_edges(u).count();

        if let Some(u) = (0..n).find(|&u| reach[u] && cyclic[u] && out_degree(u) >= 2) {
            let path = self.path_to(u, &reach);
            let cycle = self.cycle_through(u, &reach);
            let exit = self
                .kept_edges(u)
                .map(|(x, _)| x)
                .find(|&x| x != cycle[0])
                .expect("branching node has a second edge");
            return EndClassification {
                kind: EndKind::InfinitelyMany,
                certificate: Certificate::InfinitelyMany {
                    path,
                    cycle,
                    exit,
                    uncountable: self.branches_inside_component(&reach),
                },
            };
        }

        // Every reachable cyclic node continues deterministically around its cycle, so ends
        // correspond to paths through the acyclic part into the first cyclic node.
        let mut count: Vec<Option<u128>> = vec![None; n];
        let mut stack = vec![(0usize, false)];
        while let Some((u, done)) = stack.pop() {
            if count[u].is_some() {
                continue;
            }
            if cyclic[u] {
                count[u] = Some(1);
            } else if done {
                let total = self
                    .kept_edges(u)
                    .map(|(_, v)| count[v].unwrap())
                    .fold(0u128, |a, b| a.saturating_add(b));
                count[u] = Some(total);
            } else {
                stack.push((u, true));
                for (_, v) in self.kept_edges(u) {
                    if count[v].is_none() {
                        stack.push((v, false));
                    }
                }
            }
        }
        let total = count[0].unwrap();
        let mut ends = Vec::new();
        let truncated = !self.list_ends(0, &mut Vec::new(), &cyclic, &mut ends);
        EndClassification {
            kind: EndKind::FinitelyMany(total),
            certificate: Certificate::FinitelyMany { ends, truncated },
        }
    }

    /// Depth-first listing of ends in lexicographic order; false once the cap is hit.
    fn list_ends(
        &self,
        u: usize,
        prefix: &mut Vec<Letter>,
        cyclic: &[bool],
        out: &mut Vec<PeriodicEnd>,
    ) -> bool {
        if cyclic[u] {
            if out.len() >= MAX_LISTED_ENDS {
                return false;
            }
            let mut period = Vec::new();
            let mut v = u;
            loop {
                let (x, w) = self.kept_edges(v).next().expect("cyclic node has an edge");
                period.push(x);
                v = w;
                if v == u {
                    break;
                }
            }
            out.push(PeriodicEnd {
                prefix: prefix.clone(),
                period,
            });
            return true;
        }
        let next: Vec<(Letter, usize)> = self.kept_edges(u).collect();
        for (x, v) in next {
            prefix.push(x);
            let ok = self.list_ends(v, prefix, cyclic, out);
            prefix.pop();
            if !ok {
                return false;
            }
        }
        true
    }

    fn path_to(&self, target: usize, reach: &[bool]) -> Vec<Letter> {
        let mut parent: Vec<Option<(usize, Letter)>> = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            if u == target {
                break;
            }
            for (x, v) in self.kept_edges(u) {
                if reach[v] && !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((u, x));
                    queue.push_back(v);
                }
            }
        }
        let mut path = Vec::new();
        let mut cur = target;
        while let Some((p, x)) = parent[cur] {
            path.push(x);
            cur = p;
        }
        path.reverse();
        path
    }

    /// Letters of a shortest cycle through `u`.
    fn cycle_through(&self, u: usize, reach: &[bool]) -> Vec<Letter> {
        let mut parent: Vec<Option<(usize, Letter)>> = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::new();
        for (x, v) in self.kept_edges(u) {
            if v == u {
                return vec![x];
            }
            if reach[v] && !seen[v] {
                seen[v] = true;
                parent[v] = Some((u, x));
                queue.push_back(v);
            }
        }
        while let Some(w) = queue.pop_front() {
            for (x, v) in self.kept_edges(w) {
                if v == u {
                    let mut cycle = vec![x];
                    let mut cur = w;
                    while cur != u {
                        let (p, y) = parent[cur].unwrap();
                        cycle.push(y);
                        cur = p;
                    }
                    cycle.reverse();
                    return cycle;
                }
                if reach[v] && !seen[v] {
                    seen[v] = true;
                    parent[v] = Some((w, x));
                    queue.push_back(v);
                }
            }
        }
        unreachable!("node is on a cycle")
    }

    /// Whether some strongly connected part of the reachable trimmed graph contains a node with
    /// two edges staying inside it (uncountably many fixed ends).
    fn branches_inside_component(&self, reach: &[bool]) -> bool {
        use petgraph::algo::tarjan_scc;
        use petgraph::graph::DiGraph;
        let n = self.len();
        let mut g: DiGraph<(), ()> = DiGraph::new();
        let ids: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
        for u in (0..n).filter(|&u| reach[u]) {
            for (_, v) in self.kept_edges(u) {
                if reach[v] {
                    g.add_edge(ids[u], ids[v], ());
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        for (c, scc) in tarjan_scc(&g).into_iter().enumerate() {
            for v in scc {
                comp[v.index()] = c;
            }
        }
        (0..n).filter(|&u| reach[u]).any(|u| {
            self.kept_edges(u)
                .filter(|&(_, v)| reach[v] && comp[v] == comp[u])
                .count()
                >= 2
        })
    }
}

/// Builds the fixed graph of `g`.
pub fn fixed_graph(aut: &Automaton, g: &Element, budget: usize) -> Result<FixedGraph> {
    Ok(FixedGraph::new(aut.section_closure(g, budget)?))
}

/// Classifies the fixed ends of `g`; a closure overflow becomes [`EndVerdict::Unknown`].
pub fn classify_fixed_ends(aut: &Automaton, g: &Element, budget: usize) -> Result<EndVerdict> {
    match fixed_graph(aut, g, budget) {
        Ok(graph) => Ok(EndVerdict::Classified(graph.classify())),
        Err(Error::ClosureOverflow { budget }) => Ok(EndVerdict::Unknown { budget }),
        Err(e) => Err(e),
    }
}

/// A word whose element fixes finitely many (but at least one) ends.
#[derive(Clone, Debug, Serialize)]
pub struct DichotomyViolation {
    pub element: String,
    pub count: u128,
    pub ends: Vec<PeriodicEnd>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyReport {
    pub word_len: usize,
    pub words: usize,
    pub no_ends: usize,
    pub infinitely_many: usize,
    pub violations: Vec<DichotomyViolation>,
    pub unknown: Vec<String>,
}

/// All freely reduced words of length at most `max_len`, in shortlex order.
pub fn reduced_words(aut: &Automaton, max_len: usize) -> Vec<Vec<Symbol>> {
    let syms = aut.symbols();
    let mut out = vec![Vec::new()];
    let mut layer: Vec<Vec<Symbol>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for &s in &syms {
                if w.last() == Some(&s.inv()) {
                    continue;
                }
                let mut v = w.clone();
                v.push(s);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Classifies every reduced word of length at most `word_len` and lists the elements that
/// fix a finite non-zero number of ends.
pub fn check_end_dichotomy(aut: &Automaton, word_len: usize, budget: usize) -> Result<DichotomyReport> {
    let mut report = DichotomyReport {
        word_len,
        words: 0,
        no_ends: 0,
        infinitely_many: 0,
        violations: Vec::new(),
        unknown: Vec::new(),
    };
    for word in reduced_words(aut, word_len) {
        let g = aut.element(&word);
        report.words += 1;
        match classify_fixed_ends(aut, &g, budget)? {
            EndVerdict::Unknown { .. } => report.unknown.push(aut.format_element(&g)),
            EndVerdict::Classified(c) => match (c.kind, c.certificate) {
                (EndKind::NoEnds, _) => report.no_ends += 1,
                (EndKind::InfinitelyMany, _) => report.infinitely_many += 1,
                (EndKind::FinitelyMany(count), Certificate::FinitelyMany { ends, .. }) => {
                    report.violations.push(DichotomyViolation {
                        element: aut.format_element(&g),
                        count,
                        ends,
                    })
                }
                (EndKind::FinitelyMany(_), _) => unreachable!(),
            },
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{parse_automaton, parse_element};
    use crate::{DEFAULT_CLOSURE_BUDGET, DEFAULT_TABLE_BUDGET};

    const ODOMETER: &str = "alphabet 2\na = (0 1) (1, a)";
    const GRIGORCHUK: &str = "alphabet 2\na = (0 1) (1, 1)\nb = e (a, c)\nc = e (a, d)\nd = e (1, b)";
    const ONE_END: &str = "alphabet 2\na = (0 1) (1, a)\ns = e (s, a)";

    fn classify(text: &str, expr: &str) -> EndClassification {
        let aut = parse_automaton(text).unwrap();
        let g = parse_element(expr, &aut).unwrap();
        match classify_fixed_ends(&aut, &g, DEFAULT_CLOSURE_BUDGET).unwrap() {
            EndVerdict::Classified(c) => c,
            EndVerdict::Unknown { .. } => panic!("unexpected overflow"),
        }
    }

    #[test]
    fn fixed_level_counts() {
        let aut = parse_automaton(GRIGORCHUK).unwrap();
        let b = parse_element("b", &aut).unwrap();
        assert_eq!(count_fixed_level(&aut, &b, 0, DEFAULT_TABLE_BUDGET).unwrap(), 1);
        assert_eq!(count_fixed_level(&aut, &b, 1, DEFAULT_TABLE_BUDGET).unwrap(), 2);
        // b|_0 = a fixes nothing below 0, b|_1 = c fixes both letters below 1
        assert_eq!(count_fixed_level(&aut, &b, 2, DEFAULT_TABLE_BUDGET).unwrap(), 2);
        let odo = parse_automaton(ODOMETER).unwrap();
        let a = parse_element("a", &odo).unwrap();
        assert_eq!(count_fixed_level(&odo, &a, 1, DEFAULT_TABLE_BUDGET).unwrap(), 0);
        assert_eq!(count_fixed_level(&odo, &odo.identity(), 5, DEFAULT_TABLE_BUDGET).unwrap(), 32);
    }

    #[test]
    fn odometer_fixes_no_ends() {
        let c = classify(ODOMETER, "a");
        assert_eq!(c.kind, EndKind::NoEnds);
        assert_eq!(c.certificate, Certificate::NoEnds { level: 1 });
        let c = classify(ODOMETER, "a^4");
        assert_eq!(c.certificate, Certificate::NoEnds { level: 3 });
    }

    #[test]
    fn identity_fixes_everything() {
        let c = classify(ODOMETER, "1");
        assert_eq!(c.kind, EndKind::InfinitelyMany);
        match c.certificate {
            Certificate::InfinitelyMany { uncountable, .. } => assert!(uncountable),
            other => panic!("{other:?}"),
        }
        let aut = parse_automaton(ODOMETER).unwrap();
        let graph = fixed_graph(&aut, &aut.identity(), 10).unwrap();
        assert_eq!(graph.len(), 1);
        assert_eq!(graph.edges(0), &[(0, 0), (1, 0)]);
    }

    #[test]
    fn grigorchuk_b_fixed_graph() {
        let aut = parse_automaton(GRIGORCHUK).unwrap();
        let b = parse_element("b", &aut).unwrap();
        let graph = fixed_graph(&aut, &b, 100).unwrap();
        // nodes in BFS order: b, a, c, 1, d
        assert_eq!(graph.edges(0).len(), 2);
        let d_node = graph
            .machine()
            .nodes()
            .iter()
            .position(|n| aut.format_element(&n.representative) == "d")
            .unwrap();
        let d_edges = graph.edges(d_node);
        assert_eq!(d_edges.len(), 2);
        assert_eq!(d_edges[1], (1, 0));
        assert_eq!(graph.classify().kind, EndKind::InfinitelyMany);
    }

    #[test]
    fn single_fixed_end() {
        let c = classify(ONE_END, "s");
        assert_eq!(c.kind, EndKind::FinitelyMany(1));
        assert_eq!(
            c.certificate,
            Certificate::FinitelyMany {
                ends: vec![PeriodicEnd {
                    prefix: vec![],
                    period: vec![0]
                }],
                truncated: false
            }
        );
    }

    #[test]
    fn countable_infinity_is_not_uncountable() {
        // u = (u, a) fixes only 0^inf; w = (w, u) fixes 0^inf and every 0^k 1 0^inf.
        let text = "alphabet 2\na = (0 1) (1, a)\nu = e (u, a)\nw = e (w, u)";
        let c = classify(text, "w");
        assert_eq!(c.kind, EndKind::InfinitelyMany);
        match c.certificate {
            Certificate::InfinitelyMany {
                uncountable,
                cycle,
                exit,
                ..
            } => {
                assert!(!uncountable);
                assert_eq!(cycle, vec![0]);
                assert_eq!(exit, 1);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn finite_ends_through_a_dag() {
        // v = (u, u) with u fixing only 0^inf: fixes 0 0^inf and 1 0^inf.
        let text = "alphabet 2\na = (0 1) (1, a)\nu = e (u, a)\nv = e (u, u)";
        let c = classify(text, "v");
        assert_eq!(c.kind, EndKind::FinitelyMany(2));
        let aut = parse_automaton(text).unwrap();
        let v = parse_element("v", &aut).unwrap();
        if let Certificate::FinitelyMany { ends, .. } = &c.certificate {
            for end in ends {
                let w = end.truncate(32);
                assert_eq!(aut.apply(&v, &w).unwrap(), w);
            }
        }
        // u also fixes 0^(k-1) 1 at level k, a vertex with no fixed children
        for k in 2..10 {
            assert_eq!(count_fixed_level(&aut, &v, k, DEFAULT_TABLE_BUDGET).unwrap(), 4);
        }
    }

    #[test]
    fn path_counts_match_level_counts() {
        let aut = parse_automaton(GRIGORCHUK).unwrap();
        for expr in ["b", "a*b*a*c", "b*a*d*a", "c*a*b"] {
            let g = parse_element(expr, &aut).unwrap();
            let graph = fixed_graph(&aut, &g, 1000).unwrap();
            for n in 0..=10 {
                assert_eq!(
                    graph.count_paths(n) as usize,
                    count_fixed_level(&aut, &g, n, DEFAULT_TABLE_BUDGET).unwrap(),
                    "{expr} at level {n}"
                );
            }
        }
    }

    #[test]
    fn dichotomy_sweeps() {
        let odo = parse_automaton(ODOMETER).unwrap();
        let r = check_end_dichotomy(&odo, 6, DEFAULT_CLOSURE_BUDGET).unwrap();
        assert_eq!(r.words, 13);
        assert_eq!(r.no_ends, 12);
        assert_eq!(r.infinitely_many, 1);
        assert!(r.violations.is_empty() && r.unknown.is_empty());

        let aut = parse_automaton(ONE_END).unwrap();
        let r = check_end_dichotomy(&aut, 1, DEFAULT_CLOSURE_BUDGET).unwrap();
        let names: Vec<&str> = r.violations.iter().map(|v| v.element.as_str()).collect();
        assert!(names.contains(&"s"));
        assert!(r.violations.iter().all(|v| v.count == 1));
    }

    #[test]
    fn reduced_word_counts() {
        let aut = parse_automaton(GRIGORCHUK).unwrap();
        // 1 + 8 + 8*7 + 8*49
        assert_eq!(reduced_words(&aut, 3).len(), 1 + 8 + 56 + 392);
    }
}
