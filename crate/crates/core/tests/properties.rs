use arbor_core::fpp::estimate_fpp;
use arbor_core::quotient::QuotientTower;
use arbor_core::{
    parse_automaton, parse_element, Automaton, Budgets, Element, Equality, Perm, StateSpec, Symbol, Vertex,
    DEFAULT_CLOSURE_BUDGET,
};
use proptest::prelude::*;

const TABLES: usize = 1 << 16;

/// An automaton on `degree` letters with `states` states, given by a permutation index and a
/// section code per letter (0 is the identity, `i` is state `i - 1`).
#[derive(Clone, Debug)]
struct Spec {
    degree: usize,
    perms: Vec<Vec<u8>>,
    sections: Vec<Vec<usize>>,
}

impl Spec {
    fn automaton(&self) -> Automaton {
        let names: Vec<String> = (0..self.perms.len()).map(|i| format!("s{i}")).collect();
        let specs = self
            .perms
            .iter()
            .zip(&self.sections)
            .zip(&names)
            .map(|((p, secs), name)| StateSpec {
                name: name.clone(),
                perm: Perm::from_images(p.clone()).unwrap(),
                sections: secs
                    .iter()
                    .map(|&c| if c == 0 { "1".to_string() } else { names[c - 1].clone() })
                    .collect(),
            })
            .collect();
        Automaton::new(self.degree, specs).unwrap()
    }
}

fn spec() -> impl Strategy<Value = Spec> {
    (2usize..=3, 1usize..=3).prop_flat_map(|(degree, states)| {
        let perm = Just((0..degree as u8).collect::<Vec<u8>>()).prop_shuffle();
        let secs = prop::collection::vec(0..=states, degree);
        (
            Just(degree),
            prop::collection::vec(perm, states),
            prop::collection::vec(secs, states),
        )
            .prop_map(|(degree, perms, sections)| Spec {
                degree,
                perms,
                sections,
            })
    })
}

fn word(states: usize, max_len: usize) -> impl Strategy<Value = Vec<Symbol>> {
    prop::collection::vec((0..states, any::<bool>()).prop_map(|(s, i)| Symbol::new(s, i)), 0..=max_len)
}

/// An automaton with three elements of it.
fn setup() -> impl Strategy<Value = (Spec, Vec<Symbol>, Vec<Symbol>, Vec<Symbol>)> {
    spec().prop_flat_map(|s| {
        let n = s.perms.len();
        (Just(s), word(n, 6), word(n, 6), word(n, 6))
    })
}

fn table(aut: &Automaton, g: &Element, n: usize) -> Vec<u32> {
    aut.level_perm(g, n, TABLES).unwrap().into_images()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn level_action_is_a_homomorphism((s, u, v, _) in setup(), n in 1usize..=5) {
        let aut = s.automaton();
        let (g, h) = (aut.element(&u), aut.element(&v));
        let gh = g.multiply(&h).unwrap();
        let lhs = aut.level_perm(&gh, n, TABLES).unwrap();
        let rhs = aut.level_perm(&g, n, TABLES).unwrap().compose(&aut.level_perm(&h, n, TABLES).unwrap());
        prop_assert_eq!(lhs.images(), rhs.images());
        let inv = aut.level_perm(&g.invert(), n, TABLES).unwrap();
        let expected = aut.level_perm(&g, n, TABLES).unwrap().inverse();
        prop_assert_eq!(inv.images(), expected.images());
    }

    #[test]
    fn sections_of_products((s, u, v, _) in setup(), x in prop::collection::vec(0u8..2, 1..=3)) {
        let aut = s.automaton();
        let (g, h) = (aut.element(&u), aut.element(&v));
        let x = Vertex(x);
        let gh = g.multiply(&h).unwrap();
        let hx = aut.apply(&h, &x).unwrap();
        let expected = aut.section(&g, &hx).unwrap().multiply(&aut.section(&h, &x).unwrap()).unwrap();
        let got = aut.section(&gh, &x).unwrap();
        prop_assert_eq!(aut.equal(&got, &expected, DEFAULT_CLOSURE_BUDGET).unwrap(), Equality::Equal);
        prop_assert_eq!(table(&aut, &got, 3), table(&aut, &expected, 3));
    }

    #[test]
    fn action_preserves_prefixes((s, u, _, _) in setup(), seed in any::<u64>()) {
        let aut = s.automaton();
        let g = aut.element(&u);
        let d = aut.degree();
        let letters: Vec<u8> = (0..6).map(|i| ((seed >> (8 * i)) % d as u64) as u8).collect();
        let image = aut.apply(&g, &Vertex(letters.clone())).unwrap();
        prop_assert_eq!(image.level(), letters.len());
        for j in 0..=letters.len() {
            let prefix = aut.apply(&g, &Vertex(letters[..j].to_vec())).unwrap();
            prop_assert_eq!(prefix.letters(), &image.letters()[..j]);
        }
        // g(vw) = g(v) g|_v(w)
        let (v, w) = letters.split_at(2);
        let gv = aut.apply(&g, &Vertex(v.to_vec())).unwrap();
        let tail = aut.apply(&aut.section(&g, &Vertex(v.to_vec())).unwrap(), &Vertex(w.to_vec())).unwrap();
        prop_assert_eq!([gv.letters(), tail.letters()].concat(), image.letters().to_vec());
    }

    #[test]
    fn equality_matches_tables((s, u, v, w) in setup()) {
        let aut = s.automaton();
        let g = aut.element(&u);
        // compare against a conjugate of itself half of the time so equal pairs occur
        let k = aut.element(&w);
        let h = if v.len() % 2 == 0 { k.multiply(&g).unwrap().multiply(&k.invert()).unwrap() } else { aut.element(&v) };
        match aut.equal(&g, &h, DEFAULT_CLOSURE_BUDGET).unwrap() {
            Equality::Equal => {
                for n in 1..=6 {
                    prop_assert_eq!(table(&aut, &g, n), table(&aut, &h, n));
                }
            }
            Equality::Distinct(x) => {
                prop_assert_ne!(aut.apply(&g, &x).unwrap(), aut.apply(&h, &x).unwrap());
            }
            Equality::Unknown => {}
        }
    }

    #[test]
    fn automata_round_trip(s in spec()) {
        let aut = s.automaton();
        let text = aut.to_string();
        let back = parse_automaton(&text).unwrap();
        prop_assert_eq!(&back, &aut);
        prop_assert_eq!(back.to_string(), text);
        prop_assert_eq!(back.content_hash(), aut.content_hash());
    }

    #[test]
    fn elements_round_trip((s, u, _, _) in setup()) {
        let aut = s.automaton();
        let g = aut.element(&u);
        let back = parse_element(&aut.format_element(&g), &aut).unwrap();
        prop_assert_eq!(back.word(), g.word());
    }

    #[test]
    fn fixed_point_proportion_never_increases(s in spec()) {
        let aut = s.automaton();
        let budgets = Budgets { quotient_elements: 20_000, ..Budgets::default() };
        let est = estimate_fpp(&QuotientTower::new(&aut, budgets), 4, 0, 0).unwrap();
        prop_assert!(est.nonincreasing);
    }
}

