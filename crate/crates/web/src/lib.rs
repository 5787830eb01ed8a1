//! Browser bindings for the static demo page. Every entry point takes and
//! returns JSON strings so the page needs no generated type glue.

use relsec::io::SpecFile;
use relsec::optimize::{optimize_design, wiretap_baseline_with, OptimizerConfig};
use relsec::regime::{best_case_rate, case_rate, DEFAULT_TOL};
use relsec::{
    assemble_joint, classify, compute_info_quantities, evaluate_rate_point, Alphabets, ChannelSpec, InfoQuantities,
    InputDesign, RateChoice, RegimeCase,
};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest heatmap side, in grid points.
const MAX_SIDE: usize = 240;

#[derive(Serialize)]
struct LeafRate {
    #[serde(flatten)]
    case: RegimeCase,
    choice: RateChoice,
}

#[derive(Serialize)]
struct Analysis {
    quantities: InfoQuantities,
    leaves: Vec<LeafRate>,
    best: usize,
}

#[derive(Serialize)]
struct Heatmap {
    r2: Vec<f64>,
    r_hat: Vec<f64>,
    /// `r1[i][j]` at `(r2[i], r_hat[j])`; `null` below the diagonal.
    r1: Vec<Vec<Option<f64>>>,
    max_r1: f64,
}

#[derive(Serialize)]
struct Explorer {
    quantities: InfoQuantities,
    leaf: RegimeCase,
    r1: f64,
    baseline: f64,
    design: DesignView,
}

#[derive(Serialize)]
struct DesignView {
    p_x1: Vec<f64>,
    p_x2: Vec<f64>,
    comp_size: usize,
    q: Vec<f64>,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn quantities_of(spec_json: &str) -> Result<InfoQuantities, String> {
    let file = SpecFile::parse_str(spec_json).map_err(|e| e.to_string())?;
    let design = file.require_design("analyze").map_err(|e| e.to_string())?;
    let joint = assemble_joint(&file.spec, design).map_err(|e| e.to_string())?;
    Ok(compute_info_quantities(&joint))
}

/// Information quantities, matching leaves with their closed-form rates,
/// and the index of the best leaf.
#[wasm_bindgen]
pub fn analyze(spec_json: &str) -> Result<String, String> {
    let q = quantities_of(spec_json)?;
    let mut leaves = Vec::new();
    for case in classify(&q, DEFAULT_TOL).map_err(|e| e.to_string())? {
        let choice = case_rate(&q, case.leaf, DEFAULT_TOL).map_err(|e| e.to_string())?;
        leaves.push(LeafRate { case, choice });
    }
    let best = leaves.iter().enumerate().fold(0, |b, (i, l)| if l.choice.r1 > leaves[b].choice.r1 { i } else { b });
    to_json(&Analysis { quantities: q, leaves, best })
}

/// Secrecy rate over a square grid of `(r2, r_hat)` with `side` points per
/// axis spanning `[0, max_rate]`.
#[wasm_bindgen]
pub fn rate_heatmap(spec_json: &str, max_rate: f64, side: usize) -> Result<String, String> {
    if !(max_rate > 0.0 && max_rate.is_finite()) {
        return Err(format!("rate range must be positive, got {max_rate}"));
    }
    if !(2..=MAX_SIDE).contains(&side) {
        return Err(format!("grid side must be between 2 and {MAX_SIDE}, got {side}"));
    }
    let q = quantities_of(spec_json)?;
    let axis: Vec<f64> = (0..side).map(|i| max_rate * i as f64 / (side - 1) as f64).collect();
    let mut max_r1 = 0.0f64;
    let r1 = axis
        .iter()
        .map(|&r2| {
            axis.iter()
                .map(|&h| {
                    (h >= r2).then(|| {
                        let v = evaluate_rate_point(&q, r2, h, DEFAULT_TOL).r1;
                        max_r1 = max_r1.max(v);
                        v
                    })
                })
                .collect()
        })
        .collect();
    to_json(&Heatmap { r2: axis.clone(), r_hat: axis, r1, max_r1 })
}

/// Binary relay family: the relay hears `X1` through `relay_flip`, Bob hears
/// `X1` through `bob_flip` and the relay input through `link_flip`, and Eve
/// hears `X1 xor X2` through `eve_flip`.
pub fn binary_family(relay_flip: f64, bob_flip: f64, link_flip: f64, eve_flip: f64) -> Result<ChannelSpec, String> {
    for (name, p) in [("relay", relay_flip), ("bob", bob_flip), ("link", link_flip), ("eve", eve_flip)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("{name} flip must lie in [0, 1], got {p}"));
        }
    }
    let f = |a: usize, b: usize, p: f64| if a == b { 1.0 - p } else { p };
    ChannelSpec::from_fn(Alphabets::new(2, 2, 2, 4, 2), |x1, x2, y2, y3, z| {
        f(x1, y2, relay_flip) * f(x1, y3 / 2, bob_flip) * f(x2, y3 % 2, link_flip) * f(x1 ^ x2, z, eve_flip)
    })
    .map_err(|e| e.to_string())
}

/// Optimized design, regime and rate for one member of [`binary_family`],
/// next to the best rate without the relay.
#[wasm_bindgen]
pub fn explore_binary(relay_flip: f64, bob_flip: f64, link_flip: f64, eve_flip: f64, restarts: usize) -> Result<String, String> {
    let spec = binary_family(relay_flip, bob_flip, link_flip, eve_flip)?;
    let cfg = OptimizerConfig { restarts: restarts.clamp(1, 8), max_iters: 60, ..OptimizerConfig::for_alphabets(spec.alphabets()) };
    let best = optimize_design(&spec, &cfg).map_err(|e| e.to_string())?;
    let baseline = wiretap_baseline_with(&spec, &cfg).map_err(|e| e.to_string())?;
    let q = compute_info_quantities(&assemble_joint(&spec, &best.design).map_err(|e| e.to_string())?);
    let InputDesign { p_x1, p_x2, comp_size, q: comp } = best.design;
    to_json(&Explorer {
        quantities: q,
        leaf: best.case,
        r1: best.choice.r1,
        baseline,
        design: DesignView { p_x1, p_x2, comp_size, q: comp },
    })
}

/// Best closed-form rate of a spec's design; a small convenience for the page.
#[wasm_bindgen]
pub fn best_rate(spec_json: &str) -> Result<f64, String> {
    let q = quantities_of(spec_json)?;
    best_case_rate(&q, DEFAULT_TOL).map(|(_, c)| c.r1).map_err(|e| e.to_string())
}
