//! Acceptance suite. Prints one PASS/FAIL line per criterion and a summary.
//! `ACCEPTANCE_ONLY=2,5` runs a subset; `ACCEPTANCE_STRICT=1` exits non-zero
//! when any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use epiclose::census::{aitchison_distance, aitchison_mean, hull_vertices, project, SimplexPoint};
use epiclose::env::EnvConfig;
use epiclose::groundtruth::{enumerate_policies, exhaustive_search};
use epiclose::metapop::{simulate, simulate_with, ClosureSchedule, HolidayWindow, ModelParams, Scenario};
use epiclose::network::{build_commute_graph, detect_communities};
use epiclose::ppo::loss::{loss_and_grad, RolloutBatch};
use epiclose::ppo::model::log_prob;
use epiclose::ppo::net::{Activation, Mlp};
use epiclose::ppo::{evaluate_policy, train, train_trials, ActorCritic, AggregatedPolicy, Evaluation, PpoHyper};
use epiclose::rng::{self, derive_seed, Stream};
use epiclose::stats;
use epiclose::synth::{self, SynthSpec};
use epiclose::{Census, ContactPair, SeirState};
use rand::Rng;

type Check = Result<String, String>;
type Criterion = (usize, &'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn demo_data() -> synth::SynthData {
    synth::generate(&SynthSpec::default()).unwrap()
}

/// 1. Population conservation of the stochastic model.
fn conservation() -> Check {
    let start = Instant::now();
    let data = synth::generate(&SynthSpec { districts: 100, seed: 11, ..Default::default() }).unwrap();
    let mut worst = 0.0f64;
    for (k, census) in data.censuses.iter().enumerate() {
        let sc = Arc::new(Scenario::single_district(census.clone(), &data.contacts, ModelParams::default()).unwrap());
        let t = simulate(&sc, &ClosureSchedule::all_open(1, 43), derive_seed(1, k as u64)).unwrap();
        for d in &t.days {
            for g in 0..4 {
                worst = worst.max((d.totals.group_population(g) - census.counts[g]).abs() / census.counts[g]);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst < 1e-6 && secs < 60.0, format!("max relative drift {worst:.2e} over 100 runs in {secs:.1}s"))
}

/// Independent SEIR right-hand side for the reference integrator.
fn seir_rhs(y: &[f64; 16], beta: f64, m: &[[f64; 4]; 4], n: &[f64; 4], gamma: f64, zeta: f64) -> [f64; 16] {
    let mut dy = [0.0; 16];
    for i in 0..4 {
        let phi: f64 = (0..4).map(|j| beta * m[i][j] * y[8 + j] / n[j]).sum();
        let inf = phi * y[i];
        dy[i] = -inf;
        dy[4 + i] = inf - zeta * y[4 + i];
        dy[8 + i] = zeta * y[4 + i] - gamma * y[8 + i];
        dy[12 + i] = gamma * y[8 + i];
    }
    dy
}

fn power_radius(m: &[[f64; 4]; 4]) -> f64 {
    let mut v = [1.0; 4];
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w: Vec<f64> = (0..4).map(|i| (0..4).map(|j| m[i][j] * v[j]).sum()).collect();
        let norm = w.iter().cloned().fold(0.0, f64::max);
        v = [w[0] / norm, w[1] / norm, w[2] / norm, w[3] / norm];
        lambda = norm;
    }
    lambda
}

/// Reference epidemic with reciprocal contacts and beta computed here from
/// first principles, integrated with RK4 (or explicit Euler when `euler`).
/// Returns (peak day, attack rate).
fn reference_epidemic(census: &Census, contacts: &ContactPair, r0: f64, dt: f64, euler: bool) -> (u32, f64) {
    let n = census.counts;
    let raw = contacts.term.entries();
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (raw[i][j] * n[i] + raw[j][i] * n[j]) / (2.0 * n[i]);
        }
    }
    let gamma = 1.0 / 1.8;
    let beta = r0 * gamma / power_radius(&m);
    let mut y = [0.0; 16];
    y[..4].copy_from_slice(&n);
    y[2] -= 10.0;
    y[10] = 10.0;
    let s0: f64 = y[..4].iter().sum();
    let steps = (1.0 / dt).round() as usize;
    let mut best = (0, 0.0);
    for day in 1..=301u32 {
        let before: f64 = y[..4].iter().sum();
        for _ in 0..steps {
            let k1 = seir_rhs(&y, beta, &m, &n, gamma, 1.0);
            if euler {
                y = std::array::from_fn(|i| y[i] + dt * k1[i]);
                continue;
            }
            let add = |a: &[f64; 16], k: &[f64; 16], h: f64| -> [f64; 16] { std::array::from_fn(|i| a[i] + h * k[i]) };
            let k2 = seir_rhs(&add(&y, &k1, dt / 2.0), beta, &m, &n, gamma, 1.0);
            let k3 = seir_rhs(&add(&y, &k2, dt / 2.0), beta, &m, &n, gamma, 1.0);
            let k4 = seir_rhs(&add(&y, &k3, dt), beta, &m, &n, gamma, 1.0);
            y = std::array::from_fn(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
        let inc = before - y[..4].iter().sum::<f64>();
        if inc > best.1 {
            best = (day, inc);
        }
    }
    (best.0, (s0 - y[..4].iter().sum::<f64>()) / census.total())
}

/// 2. Deterministic model against a fine-step reference integrator.
fn integrator_oracle() -> Check {
    let data = demo_data();
    let census = &data.censuses[0];
    let mut lines = Vec::new();
    let mut ok = true;
    for r0 in [1.4, 1.8, 2.4] {
        let params = ModelParams { r0, ..Default::default() }.deterministic();
        let sc = Arc::new(Scenario::single_district(census.clone(), &data.contacts, params).unwrap());
        let t = simulate(&sc, &ClosureSchedule::all_open(1, 43), 0).unwrap();
        let (ref_peak, ref_ar) = reference_epidemic(census, &data.contacts, r0, 1e-4, false);
        let (_, euler_ar) = reference_epidemic(census, &data.contacts, r0, 0.25, true);
        let dp = (t.peak().0 as i64 - ref_peak as i64).abs();
        let dar = (t.attack_rate() - ref_ar).abs() * 100.0;
        ok &= dp <= 1 && dar <= 0.5;
        lines.push(format!(
            "R0 {r0}: peak {} vs {ref_peak}, AR diff {dar:.3} pp (independent Euler at the same step: {:.1e} pp)",
            t.peak().0,
            (t.attack_rate() - euler_ar).abs() * 100.0
        ));
    }
    ensure(ok, lines.join("; "))
}

/// 3. Constant-intensity arrivals against the discretised exponential.
fn nhpp_ks() -> Check {
    use epiclose::metapop::{maybe_infect, ArrivalMode, PatchRuntime};
    let c = 0.35;
    let n = 10_000;
    let census = Census::new("x", [10.0, 10.0, 100.0, 10.0]).unwrap();
    let mut r = rng::stream(2024, Stream::Arrivals, 0);
    let mut days = Vec::with_capacity(n);
    for _ in 0..n {
        let mut p = PatchRuntime::new(SeirState::susceptible(&census), ArrivalMode::Stochastic.draw(&mut r));
        p.record_intensity(c);
        let mut t = 0u32;
        loop {
            t += 1;
            p.record_intensity(c);
            if maybe_infect(&mut p, t, &mut r, ArrivalMode::Stochastic, 1.0) {
                break;
            }
        }
        days.push(t);
    }
    let max_day = *days.iter().max().unwrap() as usize;
    let mut counts = vec![0usize; max_day + 1];
    days.iter().for_each(|&d| counts[d as usize] += 1);
    let (mut cum, mut d_stat) = (0usize, 0.0f64);
    for (k, &cnt) in counts.iter().enumerate() {
        cum += cnt;
        d_stat = d_stat.max((cum as f64 / n as f64 - (1.0 - (-c * k as f64).exp())).abs());
    }
    let critical = 1.628 / (n as f64).sqrt();
    ensure(d_stat < critical, format!("KS D = {d_stat:.4}, critical {critical:.4} (alpha 0.01, n {n})"))
}

/// 4. Aggregate meta-population attack rate against single-district runs.
fn attack_rate_equivalence() -> Check {
    let data = synth::generate(&SynthSpec { districts: 20, seed: 4, ..Default::default() }).unwrap();
    let pop: f64 = data.censuses.iter().map(Census::total).sum();
    let mut lines = Vec::new();
    let mut ok = true;
    for r0 in [1.6, 2.0, 2.4] {
        let params = ModelParams { r0, ..Default::default() };
        let sc = Arc::new(
            Scenario::new(data.censuses.clone(), data.mobility.clone(), &data.contacts, params.clone()).unwrap(),
        );
        let sched = ClosureSchedule::all_open(20, 43);
        let mut ars = Vec::new();
        let mut all_infected = 0;
        for k in 0..20u64 {
            let t = simulate(&sc, &sched, k).unwrap();
            if t.infection_day.iter().all(Option::is_some) {
                all_infected += 1;
                ars.push(t.attack_rate());
            }
        }
        let weighted: f64 = data
            .censuses
            .iter()
            .map(|c| {
                let single = Arc::new(
                    Scenario::single_district(c.clone(), &data.contacts, params.clone().deterministic()).unwrap(),
                );
                simulate(&single, &ClosureSchedule::all_open(1, 43), 0).unwrap().attack_rate() * c.total()
            })
            .sum::<f64>()
            / pop;
        let meta = stats::mean(&ars);
        let rel = (meta - weighted).abs() / weighted;
        ok &= all_infected > 0 && rel <= 0.05;
        lines.push(format!(
            "R0 {r0}: meta {meta:.4} vs single {weighted:.4} ({:.2}% rel, {all_infected}/20 runs fully infected)",
            rel * 100.0
        ));
    }
    ensure(ok, lines.join("; "))
}

fn mean_peak_day(sc: &Arc<Scenario>, runs: u64) -> f64 {
    let sched = ClosureSchedule::all_open(sc.len(), sc.params().horizon_weeks);
    let peaks: Vec<f64> = (0..runs).map(|k| simulate(sc, &sched, k).unwrap().peak().0 as f64).collect();
    stats::mean(&peaks)
}

/// 5. Mean peak day falls with R0 and moves monotonically with mu.
fn peak_day_trends() -> Check {
    let data = synth::generate(&SynthSpec { districts: 20, seed: 4, ..Default::default() }).unwrap();
    let build = |params: ModelParams| {
        Arc::new(Scenario::new(data.censuses.clone(), data.mobility.clone(), &data.contacts, params).unwrap())
    };
    let r0s = [1.4, 1.6, 1.8, 2.0, 2.2, 2.4];
    let by_r0: Vec<f64> =
        r0s.iter().map(|&r0| mean_peak_day(&build(ModelParams { r0, ..Default::default() }), 100)).collect();
    let r0_ok = by_r0.windows(2).all(|w| w[1] < w[0]);
    let mus = [0.0, 0.3, 0.6, 1.0];
    let by_mu: Vec<f64> =
        mus.iter().map(|&mu| mean_peak_day(&build(ModelParams { mu: Some(mu), ..Default::default() }), 100)).collect();
    let mu_ok = by_mu.windows(2).all(|w| w[1] <= w[0]) || by_mu.windows(2).all(|w| w[1] >= w[0]);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join(" ");
    ensure(r0_ok && mu_ok, format!("peak day by R0 [{}], by mu at R0 1.8 [{}]", fmt(&by_r0), fmt(&by_mu)))
}

/// 6. Ground-truth enumeration count, budget monotonicity and search time.
fn ground_truth_sanity() -> Check {
    let binom = |n: u64, k: u64| (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1));
    let expected: u64 = (0..=6).map(|k| binom(25, k)).sum();
    let count = enumerate_policies(25, 6).unwrap().count() as u64;
    let data = demo_data();
    let sc =
        Scenario::single_district(data.censuses[0].clone(), &data.contacts, ModelParams::default().deterministic())
            .unwrap();
    let start = Instant::now();
    let b6 = exhaustive_search(&sc, 25, 6, None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let b4 = exhaustive_search(&sc, 25, 4, None).unwrap();
    let b2 = exhaustive_search(&sc, 25, 2, None).unwrap();
    let monotone = b6.improvement >= b4.improvement && b4.improvement >= b2.improvement;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    ensure(
        count == expected && count == 245_506 && monotone && secs < 600.0,
        format!(
            "{count} policies (oracle {expected}); improvement b2 {:.5} <= b4 {:.5} <= b6 {:.5}; full search {secs:.1}s on {threads} thread(s)",
            b2.improvement, b4.improvement, b6.improvement
        ),
    )
}

/// 7. PPO against the exhaustive ground truth on one district.
fn ppo_vs_ground_truth() -> Check {
    let data = demo_data();
    let census = data.censuses[0].clone();
    let mut lines = Vec::new();
    let mut ok = true;
    for r0 in [1.8, 2.4] {
        let start = Instant::now();
        let params = ModelParams { r0, ..Default::default() };
        let det = Scenario::single_district(census.clone(), &data.contacts, params.clone().deterministic()).unwrap();
        let gt = exhaustive_search(&det, 25, 6, None).unwrap();
        let sc = Arc::new(Scenario::single_district(census.clone(), &data.contacts, params).unwrap());
        let cfg = EnvConfig::new(sc, vec![0], 6).unwrap();
        let nets: Vec<ActorCritic> =
            train_trials(&cfg, &PpoHyper::default(), 10_000, 5, 7).unwrap().into_iter().map(|r| r.net).collect();
        let selection: Vec<f64> =
            nets.iter().map(|n| evaluate_policy(n, &cfg, 200, 1_000_001).unwrap().summary.mean).collect();
        let best = (0..nets.len()).max_by(|&a, &b| selection[a].total_cmp(&selection[b])).unwrap();
        let eval = evaluate_policy(&nets[best], &cfg, 1000, 2_000_003).unwrap();
        let s = eval.summary;
        let secs = start.elapsed().as_secs_f64();
        let cell_ok = s.median >= 0.9 * gt.improvement && (s.p05..=s.p95).contains(&gt.improvement) && secs <= 7200.0;
        ok &= cell_ok;
        lines.push(format!(
            "R0 {r0}: ground truth {:.4} ({}), best trial median {:.4} ({:.0}%), [p05 {:.4}, p95 {:.4}], {secs:.0}s",
            gt.improvement,
            gt.best_policy,
            s.median,
            100.0 * s.median / gt.improvement,
            s.p05,
            s.p95
        ));
    }
    ensure(ok, lines.join("; "))
}

/// 8. Joint community control against independent single-district policies.
fn joint_vs_aggregated() -> Check {
    let joint_episodes: usize =
        std::env::var("ACCEPTANCE_JOINT_EPISODES").ok().and_then(|v| v.parse().ok()).unwrap_or(100_000);
    let member_episodes = 10_000;
    let data = synth::generate(&SynthSpec { districts: 40, clusters: 5, seed: 5, ..Default::default() }).unwrap();
    let part = detect_communities(&build_commute_graph(&data.mobility), 0).unwrap();
    let seed_patch = 0;
    let target = (0..part.count())
        .filter(|&c| part.community[seed_patch] != c)
        .min_by_key(|&c| part.members(c).len().abs_diff(8))
        .ok_or("no community without the seed district")?;
    let members = part.members(target);
    let params = ModelParams { r0: 1.8, seed_patch, ..Default::default() };
    let sc = Arc::new(Scenario::new(data.censuses.clone(), data.mobility.clone(), &data.contacts, params).unwrap());
    let joint_cfg = EnvConfig::new(Arc::clone(&sc), members.clone(), 6).unwrap();
    let hyper = PpoHyper::default();
    let mut configs = vec![joint_cfg.clone()];
    configs.extend(members.iter().map(|&m| EnvConfig::new(Arc::clone(&sc), vec![m], 6).unwrap()));
    #[cfg(feature = "parallel")]
    use rayon::prelude::*;
    #[cfg(feature = "parallel")]
    let iter = configs.par_iter().enumerate();
    #[cfg(not(feature = "parallel"))]
    let iter = configs.iter().enumerate();
    let mut nets: Vec<ActorCritic> = iter
        .map(|(k, c)| {
            let episodes = if k == 0 { joint_episodes } else { member_episodes };
            train(c, &hyper, episodes, derive_seed(31, k as u64), |_, _| Ok(())).unwrap().net
        })
        .collect();
    let joint = nets.remove(0);
    let aggregated = AggregatedPolicy::new(nets).unwrap();
    let ej: Evaluation = evaluate_policy(&joint, &joint_cfg, 1000, 77).unwrap();
    let ea: Evaluation = evaluate_policy(&aggregated, &joint_cfg, 1000, 77).unwrap();
    let diff: Vec<f64> = ej.improvements.iter().zip(&ea.improvements).map(|(a, b)| a - b).collect();
    let effect = stats::mean(&diff) / stats::std_dev(&diff).max(1e-300);
    ensure(
        ej.summary.mean >= ea.summary.mean,
        format!(
            "{} districts, {joint_episodes} joint / {member_episodes} single-district episodes: joint mean {:.5}, aggregated mean {:.5}, paired effect size {effect:.3}",
            members.len(),
            ej.summary.mean,
            ea.summary.mean
        ),
    )
}

/// 9. Single-threaded speed of a 379-patch run.
fn performance() -> Check {
    let data = synth::generate(&SynthSpec { districts: 379, seed: 9, ..Default::default() }).unwrap();
    let sc = Arc::new(Scenario::new(data.censuses, data.mobility, &data.contacts, ModelParams::default()).unwrap());
    let sched = ClosureSchedule::all_open(379, 43);
    simulate_with(&sc, &sched, 0, false).unwrap();
    let start = Instant::now();
    let mut infected = 0;
    for k in 0..20 {
        let t = simulate_with(&sc, &sched, k, false).unwrap();
        infected += t.infection_day.iter().filter(|d| d.is_some()).count();
    }
    let per_run = start.elapsed().as_secs_f64() / 20.0;
    ensure(
        1.0 / per_run >= 2.0,
        format!(
            "{:.1} runs/s single-threaded ({:.0} ms/run, {:.0} patches infected on average)",
            1.0 / per_run,
            per_run * 1e3,
            infected as f64 / 20.0
        ),
    )
}

/// Local maxima of `xs` (plateaus count once, at their first index).
fn local_maxima(xs: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < xs.len() {
        if xs[i] > xs[i - 1] {
            let mut j = i;
            while j + 1 < xs.len() && xs[j + 1] == xs[i] {
                j += 1;
            }
            if j + 1 < xs.len() && xs[j + 1] < xs[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// 10. An exogenous holiday opening during growth splits the curve in two.
fn two_peak_holiday() -> Check {
    let data = demo_data();
    let base = ModelParams { r0: 1.4, gamma: 1.0 / 2.6, horizon_weeks: 52, ..Default::default() };
    let census = data.censuses[0].clone();
    let det =
        Arc::new(Scenario::single_district(census.clone(), &data.contacts, base.clone().deterministic()).unwrap());
    let open = simulate(&det, &ClosureSchedule::all_open(1, 52), 0).unwrap();
    let peak = open.peak();
    let growth_day = open.days.iter().find(|d| d.new_infections >= 0.3 * peak.1).unwrap().day;
    let start_week = (growth_day / 7) as usize;
    let holidays = vec![HolidayWindow { start_week, end_week: start_week + 6 }];
    let sc = Arc::new(Scenario::single_district(census, &data.contacts, ModelParams { holidays, ..base }).unwrap());
    let curves: Vec<Vec<f64>> =
        (0..50).map(|k| simulate(&sc, &ClosureSchedule::all_open(1, 52), k).unwrap().incidence()).collect();
    let mean: Vec<f64> = (0..curves[0].len()).map(|d| curves.iter().map(|c| c[d]).sum::<f64>() / 50.0).collect();
    let smooth: Vec<f64> = (0..mean.len())
        .map(|d| {
            let lo = d.saturating_sub(3);
            let hi = (d + 4).min(mean.len());
            mean[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let mut maxima = local_maxima(&smooth);
    maxima.sort_by(|&a, &b| smooth[b].total_cmp(&smooth[a]));
    if maxima.len() < 2 {
        return Err(format!("holiday weeks {start_week}..{}: only {} local maximum", start_week + 6, maxima.len()));
    }
    let (a, b) = (maxima[0].min(maxima[1]), maxima[0].max(maxima[1]));
    let trough = smooth[a..=b].iter().cloned().fold(f64::INFINITY, f64::min);
    let depth = 1.0 - trough / smooth[a].min(smooth[b]);
    ensure(
        depth >= 0.2,
        format!(
            "holiday weeks {start_week}..{}: peaks on days {a} ({:.0}) and {b} ({:.0}), trough {trough:.0} ({:.0}% below the lower peak)",
            start_week + 6,
            smooth[a],
            smooth[b],
            depth * 100.0
        ),
    )
}

fn fd_ok(fd: f64, an: f64) -> bool {
    (fd - an).abs() <= 1e-4 * fd.abs().max(1e-4)
}

/// 11. Finite-difference checks of every layer kind and the PPO loss.
fn gradient_suite() -> Check {
    let mut r = rng::stream(99, Stream::Init, 0);
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut ok = true;
    let cases: Vec<(Vec<usize>, Vec<Activation>)> = vec![
        (vec![3, 2], vec![Activation::Identity]),
        (vec![3, 2], vec![Activation::Tanh]),
        (vec![3, 2], vec![Activation::Sigmoid]),
        (vec![4, 5, 3, 2], vec![Activation::Tanh, Activation::Sigmoid, Activation::Identity]),
    ];
    for (sizes, acts) in cases {
        let mut net = Mlp::new(&sizes, &acts).unwrap();
        for p in net.params_mut() {
            *p = r.random_range(-1.0..1.0);
        }
        let x: Vec<f64> = (0..sizes[0]).map(|_| r.random_range(-1.0..1.0)).collect();
        let coef: Vec<f64> = (0..net.outputs()).map(|k| 0.5 + k as f64).collect();
        let f = |n: &Mlp| n.forward(&x).unwrap().iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>();
        let cache = net.forward_cached(&x).unwrap();
        let mut g = vec![0.0; net.params().len()];
        net.backward(&cache, &coef, &mut g);
        for k in 0..g.len() {
            let mut p = net.clone();
            p.params_mut()[k] += 1e-5;
            let mut m = net.clone();
            m.params_mut()[k] -= 1e-5;
            let fd = (f(&p) - f(&m)) / 2e-5;
            ok &= fd_ok(fd, g[k]);
            worst = worst.max((fd - g[k]).abs() / fd.abs().max(1e-4));
            checked += 1;
        }
    }
    for (inputs, districts, hidden, perturb) in [(2, 1, 1, 0.1), (5, 2, 4, 0.6)] {
        let mut net = ActorCritic::new(inputs, districts, &[hidden]).unwrap();
        for p in net.policy.params_mut().iter_mut().chain(net.value.params_mut().iter_mut()) {
            *p = r.random_range(-1.0..1.0);
        }
        let mut batch = RolloutBatch::new(inputs, districts);
        for _ in 0..12 {
            let obs: Vec<f64> = (0..inputs).map(|_| r.random::<f64>()).collect();
            let action: Vec<bool> = (0..districts).map(|_| r.random::<bool>()).collect();
            let af: Vec<f64> = action.iter().map(|&a| f64::from(u8::from(a))).collect();
            let lp = log_prob(&net.logits(&obs).unwrap(), &af) + perturb * r.random_range(-1.0..1.0);
            batch.push(&obs, &action, lp, 0.0, 0.0, false);
        }
        batch.advantages = (0..12).map(|_| r.random_range(-2.0..2.0)).collect();
        batch.returns = (0..12).map(|_| r.random_range(-1.0..1.0)).collect();
        let idx: Vec<usize> = (0..12).collect();
        let h = PpoHyper::default();
        let total = |n: &ActorCritic| loss_and_grad(n, &batch, &batch.advantages, &idx, &h).unwrap().0.total;
        let (_, g) = loss_and_grad(&net, &batch, &batch.advantages, &idx, &h).unwrap();
        let np = net.policy.params().len();
        for k in 0..g.len() {
            let shifted = |d: f64| {
                let mut n = net.clone();
                if k < np {
                    n.policy.params_mut()[k] += d;
                } else {
                    n.value.params_mut()[k - np] += d;
                }
                total(&n)
            };
            let fd = (shifted(1e-5) - shifted(-1e-5)) / 2e-5;
            ok &= fd_ok(fd, g[k]);
            worst = worst.max((fd - g[k]).abs() / fd.abs().max(1e-4));
            checked += 1;
        }
    }
    ensure(ok, format!("{checked} partial derivatives, worst relative error {worst:.2e}"))
}

/// 12. Aitchison mean idempotence, metric axioms and hull invariance.
fn compositional() -> Check {
    let mut r = rng::stream(12, Stream::DataGen, 0);
    let mut point = || SimplexPoint::close(std::array::from_fn(|_| r.random_range(0.01..1.0))).unwrap();
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = point();
        let m = aitchison_mean(&[p, p, p]).unwrap();
        worst = worst.max(aitchison_distance(&m, &p));
    }
    let mut metric_ok = true;
    for _ in 0..1000 {
        let (x, y, z) = (point(), point(), point());
        let (dxy, dyz, dxz) = (aitchison_distance(&x, &y), aitchison_distance(&y, &z), aitchison_distance(&x, &z));
        metric_ok &= aitchison_distance(&x, &x) <= 1e-9
            && dxy >= 0.0
            && (dxy - aitchison_distance(&y, &x)).abs() <= 1e-9
            && dxz <= dxy + dyz + 1e-9;
    }
    let pts: Vec<SimplexPoint> = (0..200).map(|_| point()).collect();
    let hulls: Vec<Vec<usize>> = (0..4)
        .map(|drop| {
            let mut h = hull_vertices(&pts.iter().map(|p| project(p, drop)).collect::<Vec<_>>()).unwrap();
            h.sort_unstable();
            h
        })
        .collect();
    let hull_ok = hulls.iter().all(|h| h == &hulls[0]);
    ensure(
        worst <= 1e-9 && metric_ok && hull_ok,
        format!(
            "mean idempotence error {worst:.1e}; metric axioms on 1000 triples {}; hull of {} vertices identical for all 4 dropped parts: {hull_ok}",
            if metric_ok { "hold" } else { "violated" },
            hulls[0].len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "conservation", conservation),
        (2, "integrator oracle", integrator_oracle),
        (3, "arrival process", nhpp_ks),
        (4, "attack-rate equivalence", attack_rate_equivalence),
        (5, "peak-day trends", peak_day_trends),
        (6, "ground truth", ground_truth_sanity),
        (7, "PPO vs ground truth", ppo_vs_ground_truth),
        (8, "joint vs aggregated", joint_vs_aggregated),
        (9, "performance", performance),
        (10, "two-peak holiday", two_peak_holiday),
        (11, "gradients", gradient_suite),
        (12, "compositional analytics", compositional),
    ];
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let (mut passed, mut failed) = (0, 0);
    for (k, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&k)) {
            continue;
        }
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(d) => {
                passed += 1;
                println!("PASS criterion {k:>2} ({name}): {d} [{secs:.1}s]");
            }
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {k:>2} ({name}): {d} [{secs:.1}s]");
            }
        }
    }
    println!("acceptance: {passed} passed, {failed} failed");
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
