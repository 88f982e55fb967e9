//! Browser bindings: three operations on an automaton given as text, each returning JSON.

use arbor_core::ends::classify_fixed_ends;
use arbor_core::fpp::estimate_fpp;
use arbor_core::quotient::QuotientTower;
use arbor_core::{parse_automaton, parse_element, Budgets};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Budgets sized for an interactive page.
fn budgets() -> Budgets {
    Budgets {
        quotient_elements: 100_000,
        table_leaves: 1 << 16,
        ..Budgets::default()
    }
}

fn render(v: serde_json::Value) -> String {
    serde_json::to_string(&v).expect("values serialize")
}

/// Exact proportion of elements fixing a leaf at levels `1..=max_level`, plus seeded samples.
pub fn fpp_curve_json(text: &str, max_level: usize, samples: usize, seed: u64) -> Result<String, String> {
    let aut = parse_automaton(text).map_err(|e| e.to_string())?;
    let tower = QuotientTower::new(&aut, budgets());
    let est = estimate_fpp(&tower, max_level, samples, seed).map_err(|e| e.to_string())?;
    Ok(render(serde_json::to_value(&est).expect("reports serialize")))
}

/// End classification of one element.
pub fn fixed_ends_json(text: &str, element: &str) -> Result<String, String> {
    let aut = parse_automaton(text).map_err(|e| e.to_string())?;
    let g = parse_element(element, &aut).map_err(|e| e.to_string())?;
    let verdict = classify_fixed_ends(&aut, &g, budgets().closure_nodes).map_err(|e| e.to_string())?;
    Ok(render(json!({ "label": verdict.label(), "verdict": verdict })))
}

/// Images of the level-`n` vertices under one element, in rank order.
pub fn level_action_json(text: &str, element: &str, n: usize) -> Result<String, String> {
    let aut = parse_automaton(text).map_err(|e| e.to_string())?;
    let g = parse_element(element, &aut).map_err(|e| e.to_string())?;
    let p = aut.level_perm(&g, n, budgets().table_leaves).map_err(|e| e.to_string())?;
    Ok(render(json!({ "degree": aut.degree(), "level": n, "images": p.images() })))
}

#[wasm_bindgen]
pub fn fpp_curve(text: &str, max_level: usize, samples: usize, seed: u64) -> Result<String, JsError> {
    fpp_curve_json(text, max_level, samples, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn fixed_ends(text: &str, element: &str) -> Result<String, JsError> {
    fixed_ends_json(text, element).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn level_action(text: &str, element: &str, n: usize) -> Result<String, JsError> {
    level_action_json(text, element, n).map_err(|e| JsError::new(&e))
}
