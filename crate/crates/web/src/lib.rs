//! WebAssembly bindings for the in-browser demo. Every export takes a model
//! file as JSON text and returns JSON text; errors come back as JS exceptions.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use spinsqueeze::dynamics::{evolve_reports, HarnessOptions};
use spinsqueeze::io::ModelFile;
use spinsqueeze::kernel::{positivity_threshold, summarize, KernelOptions, KernelSummary};
use spinsqueeze::squeezing::squeezing_report;
use spinsqueeze::statevec::ground_state;
use spinsqueeze::CouplingSpec;

/// Keeps a single call well under a second in the browser.
pub const MAX_DEMO_SITES: usize = 10;

pub const MAX_POINTS: usize = 400;

fn parse(model_json: &str) -> Result<CouplingSpec, String> {
    let spec = ModelFile::from_json(model_json).and_then(|f| f.build()).map_err(|e| e.to_string())?;
    if spec.n_sites() > MAX_DEMO_SITES {
        return Err(format!("demo is limited to {MAX_DEMO_SITES} sites, got {}", spec.n_sites()));
    }
    Ok(spec)
}

fn linear_grid(max: f64, points: usize) -> Result<Vec<f64>, String> {
    if !(max > 0.0 && max.is_finite()) {
        return Err(format!("range must be positive, got {max}"));
    }
    if !(2..=MAX_POINTS).contains(&points) {
        return Err(format!("points must be in 2..={MAX_POINTS}, got {points}"));
    }
    Ok((1..=points).map(|k| max * k as f64 / points as f64).collect())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("serializable output")
}

#[derive(Serialize)]
struct KernelView {
    model_hash: String,
    summary: KernelSummary,
    active_terms: KernelSummary,
    predicted_t1_slope: f64,
    /// At unit field.
    predicted_t2_slope: f64,
}

pub fn kernel_summary_json(model_json: &str) -> Result<String, String> {
    let spec = parse(model_json)?;
    let active = summarize(&spec, &KernelOptions::active_terms());
    let n = spec.n_sites() as f64;
    let thr = positivity_threshold(&spec);
    let clip = |v: f64| if v > thr { v } else { 0.0 };
    Ok(to_json(&KernelView {
        model_hash: spec.model_hash(),
        summary: summarize(&spec, &KernelOptions::default()),
        predicted_t1_slope: -4.0 * clip(active.i_max.value) / n + 0.0,
        predicted_t2_slope: -2.0 * clip(active.r_max.value) / n + 0.0,
        active_terms: active,
    }))
}

#[derive(Serialize)]
struct Curve {
    x: Vec<f64>,
    xi2_local: Vec<f64>,
    xi2_uniform: Vec<f64>,
    jz: Vec<f64>,
    /// Slope of the first-order line `1 + slope * x`.
    predicted_slope: f64,
}

pub fn dynamics_curve_json(model_json: &str, t_max: f64, points: usize) -> Result<String, String> {
    let spec = parse(model_json)?;
    let grid = linear_grid(t_max, points)?;
    let (reports, i_max) = evolve_reports(&spec, &grid, &HarnessOptions::default()).map_err(|e| e.to_string())?;
    let i_eff = if i_max > positivity_threshold(&spec) { i_max } else { 0.0 };
    Ok(to_json(&Curve {
        xi2_local: reports.iter().map(|r| r.xi2_local).collect(),
        xi2_uniform: reports.iter().map(|r| r.xi2_uniform).collect(),
        jz: reports.iter().map(|r| r.jz()).collect(),
        predicted_slope: -4.0 * i_eff / spec.n_sites() as f64 + 0.0,
        x: grid,
    }))
}

pub fn adiabatic_curve_json(model_json: &str, field: f64, lambda_max: f64, points: usize) -> Result<String, String> {
    let spec = parse(model_json)?;
    let grid = linear_grid(lambda_max, points)?;
    let summary = summarize(&spec, &KernelOptions::active_terms());
    let mut local = HarnessOptions::default().local;
    local.seeds.push(summary.r_max.angles.clone());
    let reports = grid
        .iter()
        .map(|&l| {
            let gs = ground_state(&spec, l, field).map_err(|e| e.to_string())?;
            squeezing_report(&gs.state, &local).map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, String>>()?;
    let r = summary.r_max.value;
    let r_eff = if r > positivity_threshold(&spec) { r } else { 0.0 };
    Ok(to_json(&Curve {
        xi2_local: reports.iter().map(|r| r.xi2_local).collect(),
        xi2_uniform: reports.iter().map(|r| r.xi2_uniform).collect(),
        jz: reports.iter().map(|r| r.jz()).collect(),
        predicted_slope: -2.0 * r_eff / (field * spec.n_sites() as f64) + 0.0,
        x: grid,
    }))
}

/// Kernel values `R0, I0, I_max, R_max` with their optimal angles.
#[wasm_bindgen]
pub fn kernel_summary(model_json: &str) -> Result<String, JsError> {
    kernel_summary_json(model_json).map_err(|e| JsError::new(&e))
}

/// `xi^2(t)` from the coherent spin state on `t_max / points .. t_max`.
#[wasm_bindgen]
pub fn dynamics_curve(model_json: &str, t_max: f64, points: usize) -> Result<String, JsError> {
    dynamics_curve_json(model_json, t_max, points).map_err(|e| JsError::new(&e))
}

/// Ground-state `xi^2(lambda)` of `lambda H - h sum S^z`.
#[wasm_bindgen]
pub fn adiabatic_curve(model_json: &str, field: f64, lambda_max: f64, points: usize) -> Result<String, JsError> {
    adiabatic_curve_json(model_json, field, lambda_max, points).map_err(|e| JsError::new(&e))
}
