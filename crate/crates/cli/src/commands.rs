//! One function per subcommand, each producing a text rendering and a JSON result.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use arbor_core::ends::{check_end_dichotomy, classify_fixed_ends, Certificate, EndVerdict, PeriodicEnd};
use arbor_core::fpp::{
    check_prop4, check_vssf, conditional_increase, estimate_fpp, fixed_point_distribution, search_kneading,
    Frontier, HypothesisStatus, Membership, Prop4Verdict, SearchSpace, Tri,
};
use arbor_core::nucleus::{compute_nucleus, NucleusBudget, NucleusStatus};
use arbor_core::quotient::{subindependence_check, QuotientTower};
use arbor_core::{parse_element, Automaton, Letter, Measure};
use serde_json::{json, Value};

use crate::{CliError, Context, Outcome, Status};

fn outcome(status: Status, text: String, result: Value) -> Outcome {
    Outcome {
        status,
        text,
        result,
        records: Vec::new(),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn tower<'a>(ctx: &Context, aut: &'a Automaton) -> QuotientTower<'a> {
    QuotientTower::new(aut, ctx.budgets).with_cache(ctx.cache.clone())
}

fn word(letters: &[Letter], degree: usize) -> String {
    let parts: Vec<String> = letters.iter().map(|x| x.to_string()).collect();
    if degree > 10 {
        parts.join(".")
    } else {
        parts.concat()
    }
}

fn periodic(end: &PeriodicEnd, degree: usize) -> String {
    format!("{}({})^ω", word(&end.prefix, degree), word(&end.period, degree))
}

fn describe_ends(v: &EndVerdict, degree: usize) -> String {
    match v {
        EndVerdict::Unknown { budget } => format!("Unknown, section closure exceeded {budget} words"),
        EndVerdict::Classified(c) => match &c.certificate {
            Certificate::NoEnds { level } => format!("NoEnds, certificate k={level}"),
            Certificate::FinitelyMany { ends, truncated } => {
                let list: Vec<String> = ends.iter().map(|e| periodic(e, degree)).collect();
                let more = if *truncated { ", ..." } else { "" };
                format!("{}, ends {}{more}", v.label(), list.join(", "))
            }
            Certificate::InfinitelyMany {
                path,
                cycle,
                exit,
                uncountable,
            } => format!(
                "InfinitelyMany, certificate path={} cycle={} exit={exit}{}",
                word(path, degree),
                word(cycle, degree),
                if *uncountable { " (uncountably many)" } else { "" }
            ),
        },
    }
}

fn ratio(r: &Measure) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn format(aut: &Automaton) -> Outcome {
    let text = aut.to_string();
    outcome(Status::Ok, text.clone(), json!({ "canonical": text }))
}

pub fn nucleus(ctx: &Context, aut: &Automaton) -> Result<Outcome, CliError> {
    let b = ctx.budgets;
    let report = compute_nucleus(
        aut,
        &NucleusBudget {
            max_elements: b.nucleus_elements,
            max_generations: b.nucleus_generations,
            closure_nodes: b.closure_nodes,
        },
    )?;
    let mut text = String::new();
    let status = match report.status {
        NucleusStatus::Contracting => {
            writeln!(text, "contracting, nucleus of size {}", report.size).unwrap();
            Status::Ok
        }
        NucleusStatus::BudgetExceeded => {
            writeln!(
                text,
                "no nucleus found within budget: {} elements after {} generations",
                report.size, report.generations
            )
            .unwrap();
            Status::BudgetExhausted
        }
    };
    let mut elements = Vec::new();
    for e in &report.elements {
        let sections: Vec<&str> = e.sections.iter().map(|&i| report.elements[i].name.as_str()).collect();
        writeln!(text, "{} = {} ({})", e.name, e.perm, sections.join(", ")).unwrap();
        elements.push(json!({ "name": e.name, "perm": e.perm.to_string(), "sections": e.sections }));
    }
    let result = json!({
        "status": report.status,
        "size": report.size,
        "generations": report.generations,
        "elements": elements,
    });
    Ok(outcome(status, text, result))
}

pub fn ends(ctx: &Context, aut: &Automaton, element: &str) -> Result<Outcome, CliError> {
    let g = parse_element(element, aut)?;
    let verdict = classify_fixed_ends(aut, &g, ctx.budgets.closure_nodes)?;
    let status = if verdict.kind().is_some() {
        Status::Ok
    } else {
        Status::BudgetExhausted
    };
    let text = format!("{}\n", describe_ends(&verdict, aut.degree()));
    let result = json!({
        "element": aut.format_element(&g),
        "label": verdict.label(),
        "verdict": verdict,
    });
    Ok(outcome(status, text, result))
}

pub fn dichotomy(ctx: &Context, aut: &Automaton, word_len: usize) -> Result<Outcome, CliError> {
    let r = check_end_dichotomy(aut, word_len, ctx.budgets.closure_nodes)?;
    let mut text = format!(
        "{} words up to length {}: {} fix no ends, {} fix infinitely many, {} violations, {} unknown\n",
        r.words,
        r.word_len,
        r.no_ends,
        r.infinitely_many,
        r.violations.len(),
        r.unknown.len()
    );
    for v in &r.violations {
        let ends: Vec<String> = v.ends.iter().map(|e| periodic(e, aut.degree())).collect();
        writeln!(text, "violation: {} fixes {} ends: {}", v.element, v.count, ends.join(", ")).unwrap();
    }
    for u in &r.unknown {
        writeln!(text, "unknown: {u}").unwrap();
    }
    let status = if !r.violations.is_empty() {
        Status::CheckFailed
    } else if !r.unknown.is_empty() {
        Status::BudgetExhausted
    } else {
        Status::Ok
    };
    Ok(outcome(status, text, to_json(&r)))
}

pub fn quotient(ctx: &Context, aut: &Automaton, n: usize) -> Result<Outcome, CliError> {
    if n == 0 {
        return Err(arbor_core::Error::InvalidArgument("level must be at least 1".into()).into());
    }
    let q = tower(ctx, aut).level(n)?;
    let dist = fixed_point_distribution(&q);
    let mut text = format!("|π_{n}| = {}\n", q.order());
    for (r, mu) in &dist {
        writeln!(text, "μ(Y_{n} = {r}) = {}", ratio(mu)).unwrap();
    }
    let result = json!({
        "level": n,
        "order": q.order(),
        "fixed_points": dist.iter().map(|(r, mu)| json!({ "r": r, "measure": ratio(mu) })).collect::<Vec<_>>(),
    });
    Ok(outcome(Status::Ok, text, result))
}

pub fn subindep(ctx: &Context, aut: &Automaton, n: usize, m: usize) -> Result<Outcome, CliError> {
    let r = subindependence_check(&tower(ctx, aut), n, m)?;
    let mut text = format!("{} violations / {} triples\n", r.violations.len(), r.triples);
    if let Some(min) = &r.min_ratio {
        writeln!(text, "smallest ratio {}", ratio(min)).unwrap();
    }
    for v in &r.violations {
        writeln!(
            text,
            "violation: a={} v={} b={}: {} < {}",
            v.a,
            v.v,
            v.b,
            ratio(&v.lhs),
            ratio(&v.rhs)
        )
        .unwrap();
    }
    if let Some(note) = &r.note {
        writeln!(text, "note: {note}").unwrap();
    }
    let status = if r.violations.is_empty() {
        Status::Ok
    } else {
        Status::CheckFailed
    };
    Ok(outcome(status, text, to_json(&r)))
}

pub fn martingale(ctx: &Context, aut: &Automaton, n: usize, m: usize, r: usize) -> Result<Outcome, CliError> {
    let rep = conditional_increase(&tower(ctx, aut), n, m, r)?;
    let mut text = match &rep.p {
        Some(p) => format!(
            "p = {} ({} of {}), ε = {}, {}\n",
            ratio(p),
            rep.favorable,
            rep.sample_space,
            ratio(&rep.epsilon),
            if rep.passes { "p ≥ ε" } else { "p < ε" }
        ),
        None => format!("no element of π_{n} fixes exactly {r} vertices; the bound holds vacuously\n"),
    };
    let hyp = match rep.hypotheses.status {
        HypothesisStatus::Established => "established",
        HypothesisStatus::Failed => "failed",
        HypothesisStatus::Unknown => "unknown",
    };
    writeln!(text, "hypotheses {hyp}").unwrap();
    for reason in &rep.hypotheses.reasons {
        writeln!(text, "  {reason}").unwrap();
    }
    if let Some(d) = &rep.diagnostic {
        writeln!(text, "diagnostic: {d}").unwrap();
    }
    let status = if rep.passes { Status::Ok } else { Status::CheckFailed };
    Ok(outcome(status, text, to_json(&rep)))
}

pub fn fpp(ctx: &Context, aut: &Automaton, max_level: usize, samples: usize) -> Result<Outcome, CliError> {
    let est = estimate_fpp(&tower(ctx, aut), max_level, samples, ctx.seed)?;
    let mut text = String::new();
    for (e, s) in est.exact.iter().zip(&est.sampled) {
        writeln!(
            text,
            "n={} fpp={} sampled={:.4} [{:.4}, {:.4}]",
            e.level,
            ratio(&e.value),
            s.estimate,
            s.low,
            s.high
        )
        .unwrap();
    }
    for e in est.exact.iter().skip(est.sampled.len()) {
        writeln!(text, "n={} fpp={}", e.level, ratio(&e.value)).unwrap();
    }
    writeln!(
        text,
        "reach {} of {}, nonincreasing={}, strictly decreasing={}",
        est.reach, est.requested_levels, est.nonincreasing, est.strictly_decreasing
    )
    .unwrap();
    if let Some(s) = &est.stopped {
        writeln!(text, "stopped: {s}").unwrap();
    }
    let status = if !est.nonincreasing {
        Status::CheckFailed
    } else if est.reach < est.requested_levels {
        Status::BudgetExhausted
    } else {
        Status::Ok
    };
    Ok(outcome(status, text, to_json(&est)))
}

pub fn vssf(ctx: &Context, aut: &Automaton, max_n: usize, max_m: usize) -> Result<Outcome, CliError> {
    let ev = check_vssf(&tower(ctx, aut), max_n, max_m)?;
    let onto = ev.surjectivity.iter().filter(|s| s.onto).count();
    let mut text = format!("vertex sections onto π_m: {onto} of {}\n", ev.surjectivity.len());
    for s in ev.surjectivity.iter().filter(|s| !s.onto) {
        writeln!(text, "  v={} m={}: {} of {}", s.vertex, s.m, s.order, s.full_order).unwrap();
    }
    for a in &ev.approximants {
        writeln!(text, "K approximant n={} m={}: order {}, index {}", a.n, a.m, a.order, a.index).unwrap();
    }
    writeln!(
        text,
        "stabilized={}, index lower bound {}",
        ev.stabilized,
        ev.index.map_or("unknown".to_string(), |i| i.to_string())
    )
    .unwrap();
    for r in &ev.representatives {
        writeln!(text, "representative {}: Y_{} = {}, {}", r.element, r.level, r.fixed_points, r.ends.label()).unwrap();
    }
    if let Some(o) = &ev.overflow {
        writeln!(text, "overflow: {o}").unwrap();
    }
    let status = if !ev.all_onto {
        Status::CheckFailed
    } else if ev.overflow.is_some() {
        Status::BudgetExhausted
    } else {
        Status::Ok
    };
    Ok(outcome(status, text, to_json(&ev)))
}

fn tri(t: Tri) -> &'static str {
    match t {
        Tri::Holds => "holds",
        Tri::Fails => "fails",
        Tri::Unknown => "unknown",
    }
}

pub fn prop4(ctx: &Context, aut: &Automaton) -> Result<Outcome, CliError> {
    let rep = check_prop4(&tower(ctx, aut))?;
    let mut text = String::new();
    let status = match &rep.verdict {
        Prop4Verdict::Holds { letter, generator } => {
            writeln!(text, "Holds with x0 = {letter}, g_i = {generator}").unwrap();
            Status::Ok
        }
        Prop4Verdict::Fails { condition, witness } => {
            let c = serde_json::to_value(condition).expect("condition serializes");
            writeln!(text, "Fails({}): {witness}", c.as_str().unwrap_or_default()).unwrap();
            Status::CheckFailed
        }
        Prop4Verdict::Unknown { reason } => {
            writeln!(text, "Unknown: {reason}").unwrap();
            Status::BudgetExhausted
        }
    };
    writeln!(text, "kneading: {}", rep.kneading.is_kneading()).unwrap();
    writeln!(text, "contracting: {}, nucleus {{{}}}", rep.contracting, rep.nucleus.join(", ")).unwrap();
    for w in &rep.witnesses {
        writeln!(
            text,
            "x0 = {}, g_i = {}: condition 2 {}, condition 3 {}",
            w.letter,
            w.generator,
            tri(w.cond2_holds),
            w.cond3_holds.map_or("not evaluated", tri)
        )
        .unwrap();
        for row in &w.cond3 {
            let m = match &row.membership {
                Membership::Member { word } => format!("member as {word}"),
                Membership::NonMember { reason } => format!("not a member: {reason}"),
                Membership::Unknown => "membership unknown".to_string(),
            };
            let ends = row.ends.as_ref().map(|e| format!(", {}", e.label())).unwrap_or_default();
            writeln!(text, "  {}: {m}{ends}", row.element).unwrap();
        }
    }
    let pc = &rep.product_check;
    match &pc.skipped {
        Some(s) => writeln!(text, "product check skipped: {s}").unwrap(),
        None => writeln!(
            text,
            "product check n={} m={}: {} of {} orderings land in the approximant",
            pc.n,
            pc.m,
            pc.orderings.iter().filter(|o| o.in_approximant).count(),
            pc.orderings.len()
        )
        .unwrap(),
    }
    Ok(outcome(status, text, to_json(&rep)))
}

pub fn search(
    ctx: &Context,
    alphabets: &[usize],
    states: usize,
    resume: Option<&str>,
    checkpoint: Option<&Path>,
) -> Result<Outcome, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    let start: Option<Frontier> = match (resume, checkpoint) {
        (Some(r), _) => Some(r.parse()?),
        (None, Some(p)) if p.exists() => {
            let s = fs::read_to_string(p).map_err(io(p))?;
            Some(s.trim().parse()?)
        }
        _ => None,
    };
    let space = SearchSpace {
        alphabets: alphabets.to_vec(),
        max_states: states,
    };
    let out = search_kneading(
        &space,
        start,
        ctx.budgets.search_candidates as u64,
        ctx.budgets.closure_nodes,
    )?;
    if let Some(p) = checkpoint {
        match &out.frontier {
            Some(f) => fs::write(p, format!("{f}\n")).map_err(io(p))?,
            None if p.exists() => fs::remove_file(p).map_err(io(p))?,
            None => {}
        }
    }
    let mut text = String::new();
    for row in &out.rows {
        let verdict = match (row.kneading, row.cond1, row.cond2) {
            (false, ..) => "not kneading".to_string(),
            (true, Some(false), _) => "kneading, condition 1 fails".to_string(),
            (true, _, Some(t)) => format!("kneading, condition 2 {}", tri(t)),
            (true, ..) => "kneading".to_string(),
        };
        writeln!(text, "[{}] {}: {verdict}", row.index, row.automaton).unwrap();
    }
    let s = &out.summary;
    writeln!(
        text,
        "examined {}, catalogued {}, kneading {}, failing condition 1: {}, failing condition 2: {}, undecided {}",
        s.examined, s.catalogued, s.kneading, s.failing_cond1, s.failing_cond2, s.undecided
    )
    .unwrap();
    match &out.frontier {
        Some(f) => writeln!(text, "incomplete, resume at \"{f}\"").unwrap(),
        None => writeln!(text, "complete").unwrap(),
    }
    let status = if s.failing_cond1 + s.failing_cond2 > 0 {
        Status::CheckFailed
    } else if !out.complete || s.undecided > 0 {
        Status::BudgetExhausted
    } else {
        Status::Ok
    };
    let result = json!({
        "summary": s,
        "complete": out.complete,
        "frontier": out.frontier.map(|f| f.to_string()),
    });
    Ok(Outcome {
        status,
        text,
        result,
        records: out.rows.iter().map(to_json).collect(),
    })
}
