//! Acceptance suite: one line per criterion, with the tolerance and time limit it is held to.
//!
//! Runs without the libtest harness so every line is printed even when all criteria pass.

use std::collections::{HashMap, HashSet};
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use arbor_core::ends::{classify_fixed_ends, fixed_graph};
use arbor_core::fpp::{
    check_prop4, check_vssf, conditional_increase, estimate_fpp, search_kneading, HypothesisStatus, Prop4Condition,
    Prop4Verdict, SearchSpace,
};
use arbor_core::nucleus::{compute_nucleus, NucleusBudget, NucleusStatus};
use arbor_core::quotient::{subindependence_check, QuotientTower};
use arbor_core::{parse_automaton, Automaton, Budgets, Equality, Measure, Symbol, Target, DEFAULT_CLOSURE_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CORPUS: [&str; 6] = ["odometer", "grigorchuk", "basilica", "one_end", "broken", "trivial"];

fn corpus_path(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", &format!("{name}.ssg")].iter().collect()
}

fn load(name: &str) -> Automaton {
    parse_automaton(&std::fs::read_to_string(corpus_path(name)).unwrap()).unwrap()
}

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_word(aut: &Automaton, rng: &mut ChaCha8Rng, max_len: usize) -> Vec<Symbol> {
    let syms = aut.symbols();
    let len = rng.random_range(0..=max_len);
    let mut w: Vec<Symbol> = Vec::new();
    if syms.is_empty() {
        return w;
    }
    while w.len() < len {
        let s = syms[rng.random_range(0..syms.len())];
        if w.last() != Some(&s.inv()) {
            w.push(s);
        }
    }
    w
}

// 1 ---------------------------------------------------------------------------------------------

fn subindependence() -> Result<String, String> {
    let mut runs = vec![];
    for name in ["odometer", "grigorchuk", "basilica"] {
        for (n, m) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            runs.push((name, n, m));
        }
    }
    runs.push(("odometer", 3, 1));
    let mut triples = 0;
    for (name, n, m) in &runs {
        let aut = load(name);
        let r = subindependence_check(&QuotientTower::new(&aut, Budgets::default()), *n, *m).map_err(|e| e.to_string())?;
        ensure(r.violations.is_empty(), || format!("{name} ({n},{m}): {} violations", r.violations.len()))?;
        ensure(r.marginals_exact && r.sections_outside == 0, || format!("{name} ({n},{m}): inconsistent counts"))?;
        triples += r.triples;
    }
    Ok(format!("0 violations over {triples} triples in {} runs", runs.len()))
}

// 2 ---------------------------------------------------------------------------------------------

fn martingale() -> Result<String, String> {
    let mut gated = vec![];
    let mut excluded = vec![];
    let mut checked = 0;
    for name in CORPUS {
        let aut = load(name);
        let tower = QuotientTower::new(&aut, Budgets::default());
        let ev = check_vssf(&tower, 3, 2).map_err(|e| e.to_string())?;
        let passes = ev.all_onto && ev.stabilized && ev.all_representatives_infinite && ev.overflow.is_none();
        if !passes {
            let why = if ev.overflow.is_some() {
                "evidence beyond budget"
            } else if !ev.all_onto {
                "sections not onto"
            } else {
                "representatives"
            };
            // informational only: how the bound fares where the quotients are in reach
            let (mut ok, mut cases) = (0, 0);
            for n in 1..=3 {
                for m in 1..=2 {
                    for r in 1..=aut.degree().pow(n as u32) {
                        match conditional_increase(&tower, n, m, r) {
                            Ok(rep) if rep.a_size > 0 => {
                                cases += 1;
                                ok += rep.passes as usize;
                            }
                            _ => {}
                        }
                    }
                }
            }
            excluded.push(format!("{name} ({why}; bound held in {ok} of {cases} computable cases)"));
            continue;
        }
        gated.push(name);
        let d = aut.degree();
        for n in 1..=3 {
            for m in 1..=2 {
                for r in 1..=d.pow(n as u32) {
                    let rep = conditional_increase(&tower, n, m, r).map_err(|e| e.to_string())?;
                    if rep.a_size == 0 {
                        continue;
                    }
                    checked += 1;
                    let p = rep.p.expect("non-empty A");
                    ensure(p >= rep.epsilon, || format!("{name} n={n} m={m} r={r}: p={p} < ε={}", rep.epsilon))?;
                }
            }
        }
    }
    let aut = load("odometer");
    let tower = QuotientTower::new(&aut, Budgets::default());
    let r0 = conditional_increase(&tower, 1, 1, 0).map_err(|e| e.to_string())?;
    ensure(
        r0.hypotheses.status == HypothesisStatus::Failed && r0.diagnostic.is_some() && !r0.passes,
        || "odometer r=0 gave no hypothesis-failure diagnostic".into(),
    )?;
    ensure(!gated.is_empty(), || "no group passed the evidence gate".into())?;
    Ok(format!(
        "p ≥ 1/|π_m| on {checked} non-empty A_(n,r) for {}; excluded: {}; odometer r=0 diagnostic emitted",
        gated.join(", "),
        excluded.join(", ")
    ))
}

// 3 ---------------------------------------------------------------------------------------------

fn fpp_curve() -> Result<String, String> {
    let aut = load("odometer");
    let est = estimate_fpp(&QuotientTower::new(&aut, Budgets::default()), 10, 0, 0).map_err(|e| e.to_string())?;
    ensure(est.reach == 10, || format!("odometer reach {}", est.reach))?;
    for l in &est.exact {
        ensure(l.value == Measure::new(1, 1 << l.level), || format!("odometer level {}: {}", l.level, l.value))?;
    }
    let mut reach = vec![];
    for name in CORPUS {
        let aut = load(name);
        let est = estimate_fpp(&QuotientTower::new(&aut, Budgets::default()), 10, 0, 0).map_err(|e| e.to_string())?;
        ensure(est.nonincreasing, || format!("{name} increases somewhere"))?;
        reach.push(format!("{name} {}", est.reach));
    }
    Ok(format!("odometer 2^-n exact for n=1..10; nonincreasing at reach: {}", reach.join(", ")))
}

// 4 ---------------------------------------------------------------------------------------------

/// A state or an inverse state, as the oracle sees it.
type OSym = (usize, bool);

/// Brute-force end counting straight from the state table, independent of the engine's
/// section machines: nodes of the untrimmed fixed graph are raw section words.
struct Oracle {
    perms: Vec<Vec<u8>>,
    inverses: Vec<Vec<u8>>,
    sections: Vec<Vec<Option<usize>>>,
    degree: usize,
}

impl Oracle {
    fn new(aut: &Automaton) -> Self {
        let perms: Vec<Vec<u8>> = aut.states().iter().map(|s| s.perm.images().to_vec()).collect();
        let inverses = perms
            .iter()
            .map(|p| {
                let mut q = vec![0u8; p.len()];
                for (x, &y) in p.iter().enumerate() {
                    q[y as usize] = x as u8;
                }
                q
            })
            .collect();
        let sections = aut
            .states()
            .iter()
            .map(|s| {
                s.sections
                    .iter()
                    .map(|t| match t {
                        Target::Identity => None,
                        Target::State(i) => Some(*i),
                    })
                    .collect()
            })
            .collect();
        Oracle {
            perms,
            inverses,
            sections,
            degree: aut.degree(),
        }
    }

    /// Image of `x` under the word and the section word at `x`; the rightmost symbol acts first.
    fn step(&self, w: &[OSym], x: u8) -> (u8, Vec<OSym>) {
        let mut y = x;
        let mut secs = vec![None; w.len()];
        for i in (0..w.len()).rev() {
            let (s, inv) = w[i];
            let (image, at) = if inv {
                let pre = self.inverses[s][y as usize];
                (pre, pre)
            } else {
                (self.perms[s][y as usize], y)
            };
            secs[i] = self.sections[s][at as usize].map(|t| (t, inv));
            y = image;
        }
        (y, secs.into_iter().flatten().collect())
    }

    /// `Y_k` for `k = 0..=depth` by depth-first search over fixed vertices.
    fn fixed_counts(&self, w: &[OSym], depth: usize) -> Vec<u128> {
        fn go(o: &Oracle, w: &[OSym], k: usize, memo: &mut HashMap<(Vec<OSym>, usize), u128>) -> u128 {
            if k == 0 {
                return 1;
            }
            if let Some(&c) = memo.get(&(w.to_vec(), k)) {
                return c;
            }
            let mut c = 0;
            for x in 0..o.degree as u8 {
                let (y, sec) = o.step(w, x);
                if y == x {
                    c += go(o, &sec, k - 1, memo);
                }
            }
            memo.insert((w.to_vec(), k), c);
            c
        }
        let mut memo = HashMap::new();
        (0..=depth).map(|k| go(self, w, k, &mut memo)).collect()
    }

    /// Classification by explicit path analysis of the untrimmed fixed graph.
    fn classify(&self, w: &[OSym]) -> String {
        let mut index: HashMap<Vec<OSym>, usize> = HashMap::new();
        let mut words = vec![w.to_vec()];
        let mut edges: Vec<Vec<usize>> = vec![];
        index.insert(w.to_vec(), 0);
        let mut i = 0;
        while i < words.len() {
            let mut out = vec![];
            for x in 0..self.degree as u8 {
                let (y, sec) = self.step(&words[i], x);
                if y == x {
                    let next = words.len();
                    let j = *index.entry(sec.clone()).or_insert(next);
                    if j == next {
                        words.push(sec);
                    }
                    out.push(j);
                }
            }
            edges.push(out);
            i += 1;
        }
        let n = words.len();
        // live nodes start an infinite path: prune nodes whose successors are all dead
        let mut live = vec![true; n];
        loop {
            let mut changed = false;
            for u in 0..n {
                if live[u] && !edges[u].iter().any(|&v| live[v]) {
                    live[u] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if !live[0] {
            return "NoEnds".into();
        }
        let reaches = |from: usize, target: usize| -> bool {
            let mut seen = vec![false; n];
            let mut stack = vec![from];
            while let Some(u) = stack.pop() {
                if u == target {
                    return true;
                }
                if !std::mem::replace(&mut seen[u], true) {
                    stack.extend(edges[u].iter().copied().filter(|&v| live[v]));
                }
            }
            false
        };
        let cyclic: Vec<bool> = (0..n)
            .map(|u| live[u] && edges[u].iter().any(|&v| live[v] && reaches(v, u)))
            .collect();
        let live_out = |u: usize| edges[u].iter().filter(|&&v| live[v]).count();
        if (0..n).any(|u| cyclic[u] && live_out(u) > 1) {
            return "InfinitelyMany".into();
        }
        fn paths(u: usize, edges: &[Vec<usize>], live: &[bool], cyclic: &[bool], memo: &mut [Option<u128>]) -> u128 {
            if cyclic[u] {
                return 1;
            }
            if let Some(c) = memo[u] {
                return c;
            }
            let c = edges[u]
                .iter()
                .filter(|&&v| live[v])
                .map(|&v| paths(v, edges, live, cyclic, memo))
                .sum();
            memo[u] = Some(c);
            c
        }
        let c = paths(0, &edges, &live, &cyclic, &mut vec![None; n]);
        format!("FinitelyMany({c})")
    }
}

fn ends_oracle() -> Result<String, String> {
    const WORDS: usize = 1000;
    const DEPTH: usize = 14;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut summary = vec![];
    let (mut total, mut unknown_total) = (0, 0);
    for name in CORPUS {
        let aut = load(name);
        if aut.symbols().is_empty() {
            summary.push(format!("{name}: only the empty word"));
            continue;
        }
        let oracle = Oracle::new(&aut);
        let (mut agree, mut unknown) = (0, 0);
        let mut kinds: HashMap<&str, usize> = HashMap::new();
        for _ in 0..WORDS {
            let word = random_word(&aut, &mut rng, 6);
            let g = aut.element(&word);
            let shown = aut.format_element(&g);
            let verdict = classify_fixed_ends(&aut, &g, DEFAULT_CLOSURE_BUDGET).map_err(|e| e.to_string())?;
            if verdict.kind().is_none() {
                unknown += 1;
                continue;
            }
            let osyms: Vec<OSym> = word.iter().map(|s| (s.state as usize, s.inverse)).collect();
            let expected = oracle.classify(&osyms);
            ensure(verdict.label() == expected, || format!("{name} {shown}: engine {} oracle {expected}", verdict.label()))?;
            let y = oracle.fixed_counts(&osyms, DEPTH);
            let graph = fixed_graph(&aut, &g, DEFAULT_CLOSURE_BUDGET).map_err(|e| e.to_string())?;
            for (k, &yk) in y.iter().enumerate() {
                ensure(graph.count_paths(k) == yk, || format!("{name} {shown}: Y_{k} engine {} oracle {yk}", graph.count_paths(k)))?;
            }
            // NoEnds must show up as Y_k = 0 once k passes the certificate level
            if expected == "NoEnds" {
                ensure(y[DEPTH] == 0, || format!("{name} {shown}: NoEnds but Y_{DEPTH} = {}", y[DEPTH]))?;
            }
            let kind = expected.split('(').next().unwrap();
            *kinds.entry(if kind == "NoEnds" { "none" } else if kind == "InfinitelyMany" { "inf" } else { "fin" }).or_default() += 1;
            agree += 1;
        }
        ensure(unknown * 100 < WORDS, || format!("{name}: {unknown} unknown of {WORDS}"))?;
        total += agree;
        unknown_total += unknown;
        summary.push(format!(
            "{name} {agree}/{} (none {}, finite {}, infinite {})",
            WORDS - unknown,
            kinds.get("none").unwrap_or(&0),
            kinds.get("fin").unwrap_or(&0),
            kinds.get("inf").unwrap_or(&0)
        ));
    }
    Ok(format!(
        "100% agreement on {total} words, {unknown_total} unknown; {}",
        summary.join("; ")
    ))
}

// 5 ---------------------------------------------------------------------------------------------

/// Leaf permutation of an element at `level`, as images in rank order.
fn table(aut: &Automaton, w: &arbor_core::Element, level: usize) -> Vec<u32> {
    aut.level_perm(w, level, 1 << 24).unwrap().images().to_vec()
}

/// Section tables at every vertex of `level`, restricted to `depth` below it.
fn sections_at(t: &[u32], degree: usize, level: usize, depth: usize) -> Vec<Vec<u32>> {
    let width = degree.pow(depth as u32) as u32;
    (0..degree.pow(level as u32) as u32)
        .map(|v| (0..width).map(|w| t[(v * width + w) as usize] % width).collect())
        .collect()
}

/// The action of a depth-`from` table on the top `to` levels.
fn restrict(t: &[u32], degree: usize, from: usize, to: usize) -> Vec<u32> {
    let extra = degree.pow((from - to) as u32) as u32;
    (0..degree.pow(to as u32) as u32).map(|v| t[(v * extra) as usize] / extra).collect()
}

fn nucleus_check() -> Result<String, String> {
    const DEPTH: usize = 10;
    let expected = [("odometer", vec!["1", "a", "a^-1"]), ("grigorchuk", vec!["1", "a", "b", "c", "d"])];
    let mut out = vec![];
    for (name, names) in expected {
        let aut = load(name);
        let rep = compute_nucleus(&aut, &NucleusBudget::default()).map_err(|e| e.to_string())?;
        ensure(rep.status == NucleusStatus::Contracting, || format!("{name}: not contracting"))?;
        let got: HashSet<&str> = rep.elements.iter().map(|e| e.name.as_str()).collect();
        ensure(got == names.iter().copied().collect(), || format!("{name}: nucleus {got:?}"))?;
        let d = aut.degree();
        let tables: Vec<Vec<u32>> = rep.elements.iter().map(|e| table(&aut, &e.element, DEPTH)).collect();
        let lookup: HashMap<&[u32], usize> = tables.iter().enumerate().map(|(i, t)| (t.as_slice(), i)).collect();
        ensure(lookup.len() == tables.len(), || format!("{name}: nucleus elements coincide at depth {DEPTH}"))?;

        // closure under sections
        let mut succ = vec![vec![]; tables.len()];
        for (i, e) in rep.elements.iter().enumerate() {
            let t = table(&aut, &e.element, DEPTH + 1);
            for s in sections_at(&t, d, 1, DEPTH) {
                let j = *lookup.get(s.as_slice()).ok_or_else(|| format!("{name}: a section of {} escapes", e.name))?;
                succ[i].push(j);
            }
        }
        // absorption: every pair product has all its sections in the set at some level <= 3
        let deep: Vec<Vec<u32>> = rep.elements.iter().map(|e| table(&aut, &e.element, DEPTH + 3)).collect();
        let mut worst = 0;
        for y in &deep {
            for z in &deep {
                let p: Vec<u32> = z.iter().map(|&i| y[i as usize]).collect();
                let level = (0..=3)
                    .find(|&k| {
                        let restricted = sections_at(&p, d, k, DEPTH + 3 - k);
                        restricted
                            .iter()
                            .all(|s| lookup.contains_key(restrict(s, d, DEPTH + 3 - k, DEPTH).as_slice()))
                    })
                    .ok_or_else(|| format!("{name}: a pair product is not absorbed by level 3"))?;
                worst = worst.max(level);
            }
        }
        // minimality: every member is a section of a recurrent member at every depth, so any
        // set absorbing all deep sections contains it and no member can be removed
        let reach = |from: usize| {
            let mut seen = vec![false; tables.len()];
            let mut stack = succ[from].clone();
            while let Some(u) = stack.pop() {
                if !std::mem::replace(&mut seen[u], true) {
                    stack.extend(succ[u].iter().copied());
                }
            }
            seen
        };
        let reachable: Vec<Vec<bool>> = (0..tables.len()).map(reach).collect();
        for i in 0..tables.len() {
            let deep = (0..tables.len()).any(|r| reachable[r][r] && (r == i || reachable[r][i]));
            ensure(deep, || format!("{name}: removing {} keeps an absorbing set", rep.elements[i].name))?;
        }
        out.push(format!("{name} size {} (absorbed by level {worst})", tables.len()));
    }
    Ok(format!("{}; closure, absorption and minimality re-checked on depth-{DEPTH} tables", out.join(", ")))
}

// 6 ---------------------------------------------------------------------------------------------

fn equality() -> Result<String, String> {
    const PAIRS: usize = 10_000;
    const LEVEL: usize = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut summary = vec![];
    for name in CORPUS {
        let aut = load(name);
        let gens: Vec<(Symbol, Vec<u32>)> = aut
            .symbols()
            .into_iter()
            .map(|s| (s, table(&aut, &aut.element(&[s]), LEVEL)))
            .collect();
        let word_table = |w: &[Symbol]| -> Vec<u32> {
            let mut t: Vec<u32> = (0..aut.degree().pow(LEVEL as u32) as u32).collect();
            for s in w {
                let g = &gens.iter().find(|(x, _)| x == s).unwrap().1;
                t = g.iter().map(|&i| t[i as usize]).collect();
            }
            t
        };
        let (mut equal, mut unknown) = (0, 0);
        for _ in 0..PAIRS {
            let (u, v) = (random_word(&aut, &mut rng, 8), random_word(&aut, &mut rng, 8));
            let (g, h) = (aut.element(&u), aut.element(&v));
            let same = word_table(&u) == word_table(&v);
            let eq = aut.equal(&g, &h, DEFAULT_CLOSURE_BUDGET).map_err(|e| e.to_string())?;
            let shown = || format!("{name}: {} vs {}", aut.format_element(&g), aut.format_element(&h));
            match eq {
                Equality::Equal => ensure(same, || format!("{}: equal but tables differ", shown()))?,
                Equality::Distinct(_) => ensure(!same, || format!("{}: distinct but tables agree", shown()))?,
                Equality::Unknown => unknown += 1,
            }
            equal += same as usize;
        }
        ensure(unknown == 0, || format!("{name}: {unknown} undecided pairs"))?;
        summary.push(format!("{name} {equal} equal"));
    }
    Ok(format!("0 disagreements with π_{LEVEL} tables on {PAIRS} pairs per group ({})", summary.join(", ")))
}

// 7 ---------------------------------------------------------------------------------------------

fn prop4() -> Result<String, String> {
    let mut out = vec![];
    for (name, want) in [("odometer", "holds"), ("basilica", "holds"), ("broken", "fails2")] {
        let aut = load(name);
        let tower = QuotientTower::new(&aut, Budgets::default());
        let rep = check_prop4(&tower).map_err(|e| e.to_string())?;
        match (&rep.verdict, want) {
            (Prop4Verdict::Holds { letter, generator }, "holds") => {
                let est = estimate_fpp(&tower, 10, 0, 0).map_err(|e| e.to_string())?;
                ensure(est.strictly_decreasing && est.reach >= 3, || format!("{name}: FPP not strictly decreasing"))?;
                out.push(format!("{name} Holds(x0={letter}, {generator}), FPP strictly decreasing to level {}", est.reach));
            }
            (Prop4Verdict::Fails { condition: Prop4Condition::Two, witness }, "fails2") if !witness.is_empty() => {
                out.push(format!("{name} Fails(2) [{witness}]"));
            }
            (v, _) => return Err(format!("{name}: {v:?}")),
        }
    }
    Ok(out.join("; "))
}

// 8 ---------------------------------------------------------------------------------------------

fn search() -> Result<String, String> {
    let space = SearchSpace {
        alphabets: vec![2],
        max_states: 2,
    };
    let run = |start, budget| search_kneading(&space, start, budget, DEFAULT_CLOSURE_BUDGET).map_err(|e| e.to_string());
    let whole = run(None, u64::MAX)?;
    ensure(whole.complete, || "search did not finish".into())?;
    let s = &whole.summary;
    ensure(s.failing_cond1 + s.failing_cond2 == 0, || format!("{} + {} failures", s.failing_cond1, s.failing_cond2))?;
    ensure(s.undecided == 0, || format!("{} undecided", s.undecided))?;
    let again = run(None, u64::MAX)?;
    ensure(again.rows == whole.rows, || "second run differs".into())?;
    // interrupted every 29 candidates and restarted from the printed frontier
    let mut rows = vec![];
    let mut start = None;
    let mut restarts = 0;
    loop {
        let part = run(start, 29)?;
        rows.extend(part.rows);
        match part.frontier {
            Some(f) => {
                start = Some(f.to_string().parse().map_err(|e: arbor_core::Error| e.to_string())?);
                restarts += 1;
            }
            None => break,
        }
    }
    ensure(rows == whole.rows, || "resumed catalog differs".into())?;
    Ok(format!(
        "{} examined, {} catalogued, {} kneading, 0 failing conditions 1-2; identical on rerun and across {restarts} restarts",
        s.examined, s.catalogued, s.kneading
    ))
}

// 9 ---------------------------------------------------------------------------------------------

fn arbor(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_arbor"))
        .env_remove("ARBOR_CACHE_DIR")
        .args(args)
        .output()
        .unwrap();
    out.stdout
}

fn determinism() -> Result<String, String> {
    let p = |n: &str| corpus_path(n).to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["fpp".into(), p("grigorchuk"), "--max-level".into(), "4".into(), "--samples".into(), "2000".into()],
        vec!["martingale".into(), p("odometer"), "-n".into(), "2".into(), "-m".into(), "2".into(), "-r".into(), "4".into()],
        vec!["subindep".into(), p("basilica"), "-n".into(), "2".into(), "-m".into(), "1".into()],
        vec!["prop4".into(), p("broken")],
        vec!["nucleus".into(), p("grigorchuk")],
        vec!["search".into(), "--alphabet".into(), "2".into(), "--states".into(), "2".into()],
    ];
    for args in &runs {
        let mut full = vec!["--json", "--seed", "11"];
        full.extend(args.iter().map(String::as_str));
        let (a, b) = (arbor(&full), arbor(&full));
        ensure(!a.is_empty() && a == b, || format!("{} output differs between runs", args[0]))?;
    }
    for name in CORPUS {
        let aut = load(name);
        let text = aut.to_string();
        let back = parse_automaton(&text).map_err(|e| e.to_string())?;
        ensure(back == aut && back.to_string() == text, || format!("{name} does not round-trip"))?;
        ensure(arbor(&["format", &p(name)]) == text.as_bytes(), || format!("{name}: CLI format differs"))?;
    }
    Ok(format!("{} commands byte-identical across runs; {} corpus files round-trip", runs.len(), CORPUS.len()))
}

fn main() -> ExitCode {
    let criteria: [(u8, &str, &str, Duration, Check); 9] = [
        (1, "subindependence", "exact rationals", Duration::from_secs(60), subindependence),
        (2, "martingale bound", "exact", Duration::from_secs(120), martingale),
        (3, "FPP curve", "zero tolerance", Duration::from_secs(120), fpp_curve),
        (4, "ends vs oracle", "100% agreement, unknown < 1%", Duration::from_secs(300), ends_oracle),
        (5, "nucleus", "exact sets", Duration::from_secs(30), nucleus_check),
        (6, "equality", "zero disagreements", Duration::from_secs(300), equality),
        (7, "three-condition test", "exact verdicts", Duration::from_secs(180), prop4),
        (8, "kneading search", "zero failures", Duration::from_secs(300), search),
        (9, "determinism and round trip", "byte-identical", Duration::from_secs(300), determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, tolerance, limit, check) in criteria {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|s| {
            if elapsed <= limit {
                Ok(s)
            } else {
                Err(format!("{s}; took {:.1} s, over the {} s limit", elapsed.as_secs_f64(), limit.as_secs()))
            }
        });
        let (verdict, detail) = match &result {
            Ok(s) => ("PASS", s),
            Err(s) => ("FAIL", s),
        };
        println!(
            "criterion {id} [{name}] {verdict}: {detail} (tolerance: {tolerance}; {:.1} s of {} s)",
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
        failed += result.is_err() as usize;
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
