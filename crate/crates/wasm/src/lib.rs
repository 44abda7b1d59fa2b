//! Browser bindings for the epiclose model.
//!
//! Every exported function takes a JSON request string and returns a JSON
//! response string, so the page needs no generated type glue. The plain
//! Rust functions behind them are public for native use and tests.

use std::sync::Arc;

use epiclose::groundtruth::{self, BinaryPolicy, SearchResult};
use epiclose::metapop::{simulate, ClosureSchedule, ModelParams, Scenario};
use epiclose::rng::derive_seed;
use epiclose::stats;
use epiclose::synth::{self, SynthSpec};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

type Result<T> = std::result::Result<T, String>;

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct CurveRequest {
    pub r0: f64,
    /// Weeks with schools closed.
    pub closed_weeks: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub deterministic: bool,
}

impl Default for CurveRequest {
    fn default() -> Self {
        Self { r0: 1.8, closed_weeks: Vec::new(), runs: 20, seed: 1, deterministic: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveResponse {
    pub population: f64,
    /// Mean daily new infections with the closures.
    pub incidence: Vec<f64>,
    /// The same with schools always open, on the same seeds.
    pub baseline: Vec<f64>,
    pub attack_rate: f64,
    pub baseline_attack_rate: f64,
}

fn demo_district(params: ModelParams) -> Result<Scenario> {
    let data = synth::generate(&SynthSpec::default()).map_err(|e| e.to_string())?;
    Scenario::single_district(data.censuses[0].clone(), &data.contacts, params).map_err(|e| e.to_string())
}

fn mean_curves(curves: &[Vec<f64>]) -> Vec<f64> {
    let n = curves.iter().map(Vec::len).max().unwrap_or(0);
    (0..n).map(|d| curves.iter().map(|c| c.get(d).copied().unwrap_or(0.0)).sum::<f64>() / curves.len() as f64).collect()
}

/// Mean epidemic curve of the demo district under a closure schedule.
pub fn curve(req: &CurveRequest) -> Result<CurveResponse> {
    let mut params = ModelParams { r0: req.r0, ..Default::default() };
    if req.deterministic {
        params = params.deterministic();
    }
    let sc = Arc::new(demo_district(params).map_err(|e| e.to_string())?);
    let weeks = sc.params().horizon_weeks;
    let flags: Vec<bool> = (0..weeks).map(|w| req.closed_weeks.contains(&w)).collect();
    let closed = ClosureSchedule::all_open(1, weeks).with_patch(0, flags).map_err(|e| e.to_string())?;
    let open = ClosureSchedule::all_open(1, weeks);
    let runs = if req.deterministic { 1 } else { req.runs.clamp(1, 500) };
    let (mut inc, mut base, mut ar, mut ar_base) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 0..runs {
        let seed = derive_seed(req.seed, i as u64);
        let t = simulate(&sc, &closed, seed).map_err(|e| e.to_string())?;
        let b = simulate(&sc, &open, seed).map_err(|e| e.to_string())?;
        inc.push(t.incidence());
        base.push(b.incidence());
        ar.push(t.attack_rate());
        ar_base.push(b.attack_rate());
    }
    Ok(CurveResponse {
        population: sc.population(),
        incidence: mean_curves(&inc),
        baseline: mean_curves(&base),
        attack_rate: stats::mean(&ar),
        baseline_attack_rate: stats::mean(&ar_base),
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct GroundTruthRequest {
    pub r0: f64,
    pub weeks: usize,
    pub budget: usize,
}

impl Default for GroundTruthRequest {
    fn default() -> Self {
        Self { r0: 1.8, weeks: 16, budget: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthResponse {
    pub result: SearchResult,
    pub incidence: Vec<f64>,
    pub baseline: Vec<f64>,
}

/// Exhaustive search on the deterministic demo district; the browser runs
/// it single-threaded, so the window is capped at 20 weeks.
pub fn ground_truth(req: &GroundTruthRequest) -> Result<GroundTruthResponse> {
    if req.weeks > 20 {
        return Err("at most 20 weeks in the browser".into());
    }
    let sc = demo_district(ModelParams { r0: req.r0, ..Default::default() }.deterministic())?;
    let result = groundtruth::exhaustive_search(&sc, req.weeks, req.budget, None).map_err(|e| e.to_string())?;
    let best: BinaryPolicy = result.best_policy.parse().map_err(|e: epiclose::Error| e.to_string())?;
    let c = curve(&CurveRequest {
        r0: req.r0,
        closed_weeks: result.closed_weeks.clone(),
        deterministic: true,
        ..Default::default()
    })?;
    debug_assert_eq!(best.closures() as usize, result.closed_weeks.len());
    Ok(GroundTruthResponse { result, incidence: c.incidence, baseline: c.baseline })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct GridRequest {
    pub r0: Vec<f64>,
    pub mu: Vec<f64>,
    pub runs: usize,
    pub districts: usize,
    pub seed: u64,
}

impl Default for GridRequest {
    fn default() -> Self {
        Self { r0: vec![1.4, 1.8, 2.2], mu: vec![0.0, 0.5, 1.0], runs: 3, districts: 12, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResponse {
    pub r0: Vec<f64>,
    pub mu: Vec<f64>,
    /// `peak_day[i][j]` for `r0[i]` and `mu[j]`.
    pub peak_day: Vec<Vec<f64>>,
}

/// Mean peak day of a synthetic multi-district model over an `R0 × mu` grid.
pub fn peak_day_grid(req: &GridRequest) -> Result<GridResponse> {
    if req.r0.len() * req.mu.len() * req.runs > 400 || req.districts > 60 {
        return Err("grid too large for the browser".into());
    }
    let data = synth::generate(&SynthSpec { districts: req.districts.max(2), seed: req.seed, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let mut peak_day = Vec::new();
    for &r0 in &req.r0 {
        let mut row = Vec::new();
        for &mu in &req.mu {
            let params = ModelParams { r0, mu: Some(mu), ..Default::default() };
            let sc = Arc::new(
                Scenario::new(data.censuses.clone(), data.mobility.clone(), &data.contacts, params)
                    .map_err(|e| e.to_string())?,
            );
            let open = ClosureSchedule::all_open(sc.len(), sc.params().horizon_weeks);
            let peaks = (0..req.runs.max(1))
                .map(|i| simulate(&sc, &open, derive_seed(req.seed, i as u64)).map(|t| t.peak().0 as f64))
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            row.push(stats::mean(&peaks));
        }
        peak_day.push(row);
    }
    Ok(GridResponse { r0: req.r0.clone(), mu: req.mu.clone(), peak_day })
}

fn call<Q: for<'de> Deserialize<'de>, A: Serialize>(request: &str, f: impl Fn(&Q) -> Result<A>) -> Result<String> {
    let q: Q = serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))?;
    serde_json::to_string(&f(&q)?).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = simulateCurve)]
pub fn simulate_curve_js(request: &str) -> std::result::Result<String, JsValue> {
    call(request, curve).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = groundTruth)]
pub fn ground_truth_js(request: &str) -> std::result::Result<String, JsValue> {
    call(request, ground_truth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = peakDayGrid)]
pub fn peak_day_grid_js(request: &str) -> std::result::Result<String, JsValue> {
    call(request, peak_day_grid).map_err(|e| JsValue::from_str(&e))
}
