use epiclose_wasm::*;

#[test]
fn closures_lower_the_curve() {
    let open = curve(&CurveRequest { runs: 5, ..Default::default() }).unwrap();
    assert_eq!(open.incidence, open.baseline);
    let closed = curve(&CurveRequest { runs: 5, closed_weeks: (2..8).collect(), ..Default::default() }).unwrap();
    assert!(closed.attack_rate < closed.baseline_attack_rate);
    assert_eq!(closed.incidence.len(), 43 * 7 + 1);
}

#[test]
fn deterministic_curve_is_single_run() {
    let a = curve(&CurveRequest { deterministic: true, runs: 50, ..Default::default() }).unwrap();
    let b = curve(&CurveRequest { deterministic: true, runs: 1, ..Default::default() }).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ground_truth_beats_baseline() {
    let r = ground_truth(&GroundTruthRequest { weeks: 10, budget: 3, ..Default::default() }).unwrap();
    assert_eq!(r.result.evaluated, 1 + 10 + 45 + 120);
    assert!(r.result.improvement >= 0.0);
    let ar_from_curve: f64 = r.incidence.iter().sum();
    assert!(ar_from_curve < r.baseline.iter().sum::<f64>() + 1e-9);
    assert!(ground_truth(&GroundTruthRequest { weeks: 30, ..Default::default() }).is_err());
}

#[test]
fn grid_shape_and_trend() {
    let g = peak_day_grid(&GridRequest { r0: vec![1.4, 2.4], mu: vec![0.6], runs: 2, ..Default::default() }).unwrap();
    assert_eq!(g.peak_day.len(), 2);
    assert!(g.peak_day[1][0] < g.peak_day[0][0]);
    assert!(peak_day_grid(&GridRequest { runs: 100, ..Default::default() }).is_err());
}
