//! Structural kneading conditions on the nontrivial states of an automaton.
//!
//! * K1: along every cycle of a state's action on the alphabet, at most one section is
//!   nontrivial.
//! * K2: every nontrivial state is the section of exactly one nontrivial state at exactly one
//!   letter.
//! * K3: the cycle diagram is a tree: the bipartite graph joining each letter to the nontrivial
//!   cycles through it is connected and acyclic.
//!
//! Planarity of the cycle diagram is not checked and is listed as such in every report.

use serde::Serialize;

use crate::wreath::{Automaton, Target};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum KneadingVerdict {
    Kneading,
    NotKneading { condition: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KneadingCheck {
    pub condition: String,
    pub holds: bool,
    pub detail: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KneadingReport {
    pub verdict: KneadingVerdict,
    pub checks: Vec<KneadingCheck>,
    pub unchecked: Vec<String>,
}

impl KneadingReport {
    pub fn is_kneading(&self) -> bool {
        self.verdict == KneadingVerdict::Kneading
    }
}

fn nontrivial_target(aut: &Automaton, t: Target) -> Option<usize> {
    match t {
        Target::State(s) if !aut.is_trivial_state(s) => Some(s),
        _ => None,
    }
}

fn cycle_sections(aut: &Automaton) -> Option<String> {
    for g in aut.nontrivial_states() {
        let st = &aut.states()[g];
        for cycle in st.perm.all_cycles() {
            let active: Vec<_> = cycle
                .iter()
                .filter(|&&x| nontrivial_target(aut, st.sections[x as usize]).is_some())
                .collect();
            if active.len() > 1 {
                return Some(format!(
                    "{} has nontrivial sections at letters {} and {} of one cycle",
                    st.name, active[0], active[1]
                ));
            }
        }
    }
    None
}

fn incoming_arrows(aut: &Automaton) -> Option<String> {
    let mut incoming: Vec<Vec<(usize, u8)>> = vec![Vec::new(); aut.num_states()];
    for g in aut.nontrivial_states() {
        for (x, &t) in aut.states()[g].sections.iter().enumerate() {
            if let Some(h) = nontrivial_target(aut, t) {
                incoming[h].push((g, x as u8));
            }
        }
    }
    for h in aut.nontrivial_states() {
        let name = &aut.states()[h].name;
        match incoming[h].as_slice() {
            [_] => {}
            [] => return Some(format!("{name} is not a section of any nontrivial state")),
            [(g1, x1), (g2, x2), ..] => {
                let n = |g: &usize| &aut.states()[*g].name;
                return Some(format!(
                    "{name} has two incoming arrows: {}|{x1} and {}|{x2}",
                    n(g1),
                    n(g2)
                ));
            }
        }
    }
    None
}

fn tree_like(aut: &Automaton) -> Option<String> {
    let d = aut.degree();
    let mut parent: Vec<usize> = (0..d).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    // A cycle of length k is a star on its k letters; the bipartite graph is a tree exactly
    // when every such star joins k previously separate components.
    for g in aut.nontrivial_states() {
        let st = &aut.states()[g];
        for cycle in st.perm.cycles() {
            let mut roots: Vec<usize> = cycle.iter().map(|&x| find(&mut parent, x as usize)).collect();
            roots.sort_unstable();
            roots.dedup();
            if roots.len() < cycle.len() {
                return Some(format!("a cycle of {} closes a loop in the cycle diagram", st.name));
            }
            for &r in &roots[1..] {
                parent[r] = roots[0];
            }
        }
    }
    let r0 = find(&mut parent, 0);
    if (1..d).any(|x| find(&mut parent, x) != r0) {
        return Some("the cycle diagram is disconnected".into());
    }
    None
}

pub fn check_kneading(aut: &Automaton) -> KneadingReport {
    let results = [
        ("K1 one nontrivial section per cycle", cycle_sections(aut)),
        ("K2 unique incoming arrow", incoming_arrows(aut)),
        ("K3 tree-like cycle diagram", tree_like(aut)),
    ];
    let verdict = results
        .iter()
        .find_map(|(c, r)| {
            r.as_ref().map(|r| KneadingVerdict::NotKneading {
                condition: c.to_string(),
                reason: r.clone(),
            })
        })
        .unwrap_or(KneadingVerdict::Kneading);
    KneadingReport {
        verdict,
        checks: results
            .into_iter()
            .map(|(c, r)| KneadingCheck {
                condition: c.to_string(),
                holds: r.is_none(),
                detail: r,
            })
            .collect(),
        unchecked: vec!["planarity of the cycle diagram".into()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpp::tests::{BASILICA, GRIGORCHUK, ODOMETER};
    use crate::text::parse_automaton;

    fn verdict(text: &str) -> KneadingVerdict {
        check_kneading(&parse_automaton(text).unwrap()).verdict
    }

    #[test]
    fn corpus_verdicts() {
        assert_eq!(verdict(ODOMETER), KneadingVerdict::Kneading);
        assert_eq!(verdict(BASILICA), KneadingVerdict::Kneading);
        match verdict(GRIGORCHUK) {
            KneadingVerdict::NotKneading { condition, reason } => {
                assert!(condition.starts_with("K2"));
                assert_eq!(reason, "a has two incoming arrows: b|0 and c|0");
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn two_incoming_arrows() {
        let v = verdict("alphabet 2\na = (0 1) (1, a)\nb = e (a, 1)");
        assert!(matches!(v, KneadingVerdict::NotKneading { ref reason, .. } if reason.contains("a|1 and b|0")));
    }

    #[test]
    fn two_sections_on_a_cycle() {
        let v = verdict("alphabet 2\na = (0 1) (b, a)\nb = (0 1) (1, 1)");
        assert!(matches!(v, KneadingVerdict::NotKneading { ref condition, .. } if condition.starts_with("K1")));
    }

    #[test]
    fn cycle_diagram_shape() {
        // two transpositions on the same pair form a loop
        let v = verdict("alphabet 2\na = (0 1) (1, a)\nb = (0 1) (b, 1)");
        assert!(matches!(v, KneadingVerdict::NotKneading { ref condition, .. } if condition.starts_with("K3")));
        // no active state at all leaves the letters disconnected
        let v = verdict("alphabet 2");
        assert!(matches!(v, KneadingVerdict::NotKneading { ref reason, .. } if reason.contains("disconnected")));
        // (0 1) and (1 2) form a tree on three letters
        let v = verdict("alphabet 3\ng = (0 1) (1, 1, h)\nh = (1 2) (g, 1, 1)");
        assert_eq!(v, KneadingVerdict::Kneading);
    }

    #[test]
    fn trivial_states_are_ignored() {
        let v = verdict("alphabet 2\na = (0 1) (t, a)\nt = e (t, t)");
        assert_eq!(v, KneadingVerdict::Kneading);
    }
}
