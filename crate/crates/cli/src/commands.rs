use std::path::{Path, PathBuf};
use std::sync::Arc;

use epiclose::config::ExperimentConfig;
use epiclose::env::{Env, EnvConfig};
use epiclose::groundtruth::{self, BinaryPolicy};
use epiclose::io;
use epiclose::metapop::{simulate_with, ClosureSchedule, Scenario};
use epiclose::network::{build_commute_graph, detect_communities};
use epiclose::ppo::{self, ActorCritic, Checkpoint, ClosurePolicy, SchedulePolicy};
use epiclose::rng::derive_seed;
use epiclose::stats::{self, Summary};
use epiclose::synth::{self, SynthSpec};
use epiclose::{census, Error, Result};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::manifest;
use crate::ConfigArg;

fn load(arg: &ConfigArg) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(&arg.config)?;
    if let Some(s) = arg.seed {
        cfg.seed = s;
    }
    if let Some(out) = &arg.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn prepare(cfg: &ExperimentConfig, command: &str) -> Result<PathBuf> {
    let dir = cfg.output_dir.join(command);
    std::fs::create_dir_all(&dir)?;
    manifest::write(&dir, command, cfg)?;
    Ok(dir)
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(io::create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn gen_data(districts: usize, seed: u64, clusters: usize, out: &Path) -> Result<()> {
    let spec = SynthSpec { districts, seed, clusters, ..Default::default() };
    let data = synth::generate(&spec)?;
    let files = synth::write_files(&data, out)?;
    #[derive(Serialize)]
    struct Row<'a> {
        district_id: &'a str,
        x: f64,
        y: f64,
        cluster: usize,
        population: f64,
    }
    let rows: Vec<Row> = data
        .censuses
        .iter()
        .zip(&data.coordinates)
        .zip(&data.cluster)
        .map(|((c, &(x, y)), &cluster)| Row { district_id: &c.district_id, x, y, cluster, population: c.total() })
        .collect();
    write_csv_rows(&out.join("districts.csv"), &rows)?;
    io::write_json(&out.join("generator.json"), &json!({ "spec": spec, "files": files }))?;
    println!("wrote {} districts to {}", districts, out.display());
    Ok(())
}

pub fn simulate(arg: &ConfigArg, runs: usize, deterministic: bool) -> Result<()> {
    let cfg = load(arg)?;
    let dir = prepare(&cfg, "simulate")?;
    let data = cfg.load_data()?;
    let mut scenario = cfg.scenario(&data)?;
    if deterministic {
        scenario = scenario.with_params(scenario.params().clone().deterministic())?;
    }
    let scenario = Arc::new(scenario);
    let schedule = ClosureSchedule::all_open(scenario.len(), scenario.params().horizon_weeks);
    let summaries = (0..runs)
        .into_par_iter()
        .map(|i| {
            let traj = simulate_with(&scenario, &schedule, derive_seed(cfg.seed, i as u64), scenario.len() >= 48)?;
            traj.write_csv(io::create(&dir.join(format!("run_{i:03}.csv")))?)?;
            Ok(traj.summary())
        })
        .collect::<Result<Vec<_>>>()?;
    let ar: Vec<f64> = summaries.iter().map(|s| s.attack_rate).collect();
    let peaks: Vec<f64> = summaries.iter().map(|s| s.peak_day as f64).collect();
    io::write_json(
        &dir.join("summary.json"),
        &json!({ "runs": summaries, "attack_rate": Summary::of(&ar), "peak_day": Summary::of(&peaks) }),
    )?;
    println!("{runs} runs, mean attack rate {:.4}, mean peak day {:.1}", stats::mean(&ar), stats::mean(&peaks));
    Ok(())
}

/// `start:end:step`, end inclusive.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad range {s:?}"))))
        .collect::<Result<_>>()?;
    let [a, b, step] = parts[..] else {
        return Err(Error::Config(format!("range {s:?} is not start:end:step")));
    };
    if !(step > 0.0) || b < a {
        return Err(Error::Config(format!("range {s:?} is empty")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| round9(a + k as f64 * step)).collect())
}

/// Comma list; a `...` entry continues the step of the two values before it
/// up to the value after it.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let toks: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| Error::Config(format!("bad number {t:?} in {s:?}")));
    let mut out = Vec::new();
    let mut k = 0;
    while k < toks.len() {
        if toks[k] == "..." {
            if out.len() < 2 || k + 1 >= toks.len() {
                return Err(Error::Config(format!("'...' needs two values before and one after in {s:?}")));
            }
            let end = num(toks[k + 1])?;
            let step = out[out.len() - 1] - out[out.len() - 2];
            let start = out.pop().expect("checked");
            out.extend(parse_range(&format!("{start}:{end}:{step}"))?);
            k += 2;
        } else {
            out.push(num(toks[k])?);
            k += 1;
        }
    }
    Ok(out)
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

pub fn calibrate(arg: &ConfigArg, r0: &str, mu: &str, runs: usize) -> Result<()> {
    let cfg = load(arg)?;
    let r0s = parse_range(r0)?;
    let mus = parse_list(mu)?;
    let dir = prepare(&cfg, "calibrate")?;
    let data = cfg.load_data()?;
    let base = cfg.scenario(&data)?;
    #[derive(Serialize)]
    struct Cell {
        r0: f64,
        mu: f64,
        runs: usize,
        mean_peak_day: f64,
        sd_peak_day: f64,
        mean_attack_rate: f64,
    }
    let cells: Vec<(f64, f64)> = r0s.iter().flat_map(|&r| mus.iter().map(move |&m| (r, m))).collect();
    let rows = cells
        .par_iter()
        .map(|&(r, m)| {
            let params = epiclose::metapop::ModelParams { r0: r, mu: Some(m), ..base.params().clone() };
            let sc = Arc::new(base.with_params(params)?);
            let schedule = ClosureSchedule::all_open(sc.len(), sc.params().horizon_weeks);
            let mut peaks = Vec::with_capacity(runs);
            let mut ars = Vec::with_capacity(runs);
            for i in 0..runs {
                let t = simulate_with(&sc, &schedule, derive_seed(cfg.seed, i as u64), false)?;
                peaks.push(t.peak().0 as f64);
                ars.push(t.attack_rate());
            }
            Ok(Cell {
                r0: r,
                mu: m,
                runs,
                mean_peak_day: stats::mean(&peaks),
                sd_peak_day: stats::std_dev(&peaks),
                mean_attack_rate: stats::mean(&ars),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_csv_rows(&dir.join("peak_days.csv"), &rows)?;
    println!("{} grid cells written to {}", rows.len(), dir.join("peak_days.csv").display());
    Ok(())
}

fn seed_district_scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    let data = cfg.load_data()?;
    let full = cfg.scenario(&data)?;
    let mut params = full.params().clone().deterministic();
    let census = full.censuses()[params.seed_patch].clone();
    params.seed_patch = 0;
    Scenario::single_district(census, full.raw_contacts(), params)
}

pub fn ground_truth(arg: &ConfigArg, budget: Option<u32>, weeks: Option<usize>, dump_all: bool) -> Result<()> {
    let cfg = load(arg)?;
    let b = budget.unwrap_or(cfg.budget_weeks) as usize;
    let w = weeks.unwrap_or(cfg.ground_truth_weeks);
    let dir = prepare(&cfg, "ground-truth")?;
    let sc = seed_district_scenario(&cfg)?;
    log::info!("searching {} policies", groundtruth::policy_count(w, b));
    let mut table = Vec::new();
    let res = groundtruth::exhaustive_search(&sc, w, b, dump_all.then_some(&mut table))?;
    io::write_json(&dir.join("result.json"), &json!({ "district": sc.censuses()[0].district_id, "result": res }))?;
    if dump_all {
        groundtruth::write_table(&table, io::create(&dir.join("policies.csv"))?)?;
    }
    println!(
        "best {} attack rate {:.5} (baseline {:.5}, improvement {:.5}) over {} policies",
        res.best_policy, res.best_attack_rate, res.baseline_attack_rate, res.improvement, res.evaluated
    );
    Ok(())
}

fn env_setup(cfg: &ExperimentConfig) -> Result<EnvConfig> {
    let data = cfg.load_data()?;
    let sc = Arc::new(cfg.scenario(&data)?);
    cfg.env_config(sc)
}

fn controlled_ids(env: &EnvConfig) -> Vec<String> {
    env.controlled.iter().map(|&p| env.scenario.censuses()[p].district_id.clone()).collect()
}

pub fn train(arg: &ConfigArg, episodes: Option<usize>, trials: Option<usize>, checkpoint_every: usize) -> Result<()> {
    let cfg = load(arg)?;
    let episodes = episodes.unwrap_or(cfg.episodes);
    let trials = trials.unwrap_or(cfg.trials).max(1);
    let dir = prepare(&cfg, "train")?;
    let env = env_setup(&cfg)?;
    let ids = controlled_ids(&env);
    let checkpoint = |net: &ActorCritic, seed: u64, path: &Path| {
        Checkpoint { net: net.clone(), hyper: cfg.ppo.clone(), seed, controlled: ids.clone() }.save(path)
    };
    let results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(cfg.seed, t as u64);
            let tdir = dir.join(format!("trial_{t}"));
            std::fs::create_dir_all(&tdir)?;
            let res = ppo::train(&env, &cfg.ppo, episodes, seed, |k, net| {
                if checkpoint_every > 0 && k % checkpoint_every == 0 {
                    checkpoint(net, seed, &tdir.join("checkpoint.ckpt"))?;
                }
                Ok(())
            })?;
            ppo::write_learning_curve(&res.episode_returns, io::create(&tdir.join("learning_curve.csv"))?)?;
            checkpoint(&res.net, seed, &tdir.join("final.ckpt"))?;
            let selection_runs = cfg.eval_runs.clamp(1, 200);
            let eval = ppo::evaluate_policy(&res.net, &env, selection_runs, derive_seed(!cfg.seed, t as u64))?;
            Ok((res, eval.summary.mean))
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (0..results.len()).max_by(|&a, &b| results[a].1.total_cmp(&results[b].1)).expect("at least one trial");
    checkpoint(&results[best].0.net, results[best].0.seed, &dir.join("best.ckpt"))?;
    let trials_json: Vec<_> = results
        .iter()
        .enumerate()
        .map(|(t, (r, sel))| {
            let tail = &r.episode_returns[r.episode_returns.len().saturating_sub(100)..];
            json!({ "trial": t, "seed": r.seed, "episodes": r.episode_returns.len(), "updates": r.updates.len(),
                    "mean_return_last_100": stats::mean(tail), "selection_mean_improvement": sel })
        })
        .collect();
    io::write_json(
        &dir.join("summary.json"),
        &json!({ "controlled": ids, "trials": trials_json, "best_trial": best }),
    )?;
    println!("trained {trials} trial(s); best trial {best}, selection improvement {:.5}", results[best].1);
    Ok(())
}

pub fn evaluate(
    arg: &ConfigArg,
    checkpoint: Option<&Path>,
    schedule: Option<&str>,
    runs: Option<usize>,
    episode_logs: usize,
) -> Result<()> {
    let cfg = load(arg)?;
    let dir = prepare(&cfg, "evaluate")?;
    let env = env_setup(&cfg)?;
    let runs = runs.unwrap_or(cfg.eval_runs);
    let policy: Box<dyn ClosurePolicy> = match (checkpoint, schedule) {
        (Some(path), _) => {
            let ck = Checkpoint::load(path)?;
            if ck.controlled != controlled_ids(&env) {
                return Err(Error::Config(format!(
                    "checkpoint controls {:?} but the configuration controls {:?}",
                    ck.controlled,
                    controlled_ids(&env)
                )));
            }
            Box::new(ck.net)
        }
        (None, Some(bits)) => {
            if env.controlled.len() != 1 {
                return Err(Error::Config("a schedule applies to a single controlled district".into()));
            }
            Box::new(SchedulePolicy::from_binary(&bits.parse::<BinaryPolicy>()?))
        }
        (None, None) => return Err(Error::Config("give --checkpoint or --schedule".into())),
    };
    let eval = ppo::evaluate_policy(policy.as_ref(), &env, runs, cfg.seed)?;
    #[derive(Serialize)]
    struct Row {
        run: usize,
        seed: u64,
        baseline_attack_rate: f64,
        policy_attack_rate: f64,
        improvement: f64,
        improvement_all_patches: f64,
        closures: u32,
    }
    let rows: Vec<Row> = (0..eval.seeds.len())
        .map(|i| Row {
            run: i,
            seed: eval.seeds[i],
            baseline_attack_rate: eval.baseline_attack_rates[i],
            policy_attack_rate: eval.policy_attack_rates[i],
            improvement: eval.improvements[i],
            improvement_all_patches: eval.improvements_all_patches[i],
            closures: eval.closures[i],
        })
        .collect();
    write_csv_rows(&dir.join("improvements.csv"), &rows)?;
    io::write_json(
        &dir.join("evaluation.json"),
        &json!({ "controlled": controlled_ids(&env), "runs": runs, "improvement": eval.summary,
                 "improvement_all_patches": Summary::of(&eval.improvements_all_patches) }),
    )?;
    for (k, &seed) in eval.seeds.iter().take(episode_logs).enumerate() {
        let mut e = Env::new(env.clone(), seed)?;
        let mut obs = e.observation();
        while !e.is_done() {
            obs = e.step(&policy.decide(e.week(), &obs)?)?.observation;
        }
        e.log().write_csv(io::create(&dir.join(format!("episode_{k:03}.csv")))?)?;
        io::write_json(&dir.join(format!("episode_{k:03}.json")), &e.log().summary())?;
    }
    let s = eval.summary;
    println!(
        "improvement over {runs} runs: mean {:.5}, median {:.5}, [p05 {:.5}, p95 {:.5}]",
        s.mean, s.median, s.p05, s.p95
    );
    Ok(())
}

pub fn communities(arg: &ConfigArg, community: Option<usize>) -> Result<()> {
    let cfg = load(arg)?;
    let dir = prepare(&cfg, "communities")?;
    let data = cfg.load_data()?;
    let graph = build_commute_graph(&data.mobility);
    let part = detect_communities(&graph, cfg.seed)?;
    #[derive(Serialize)]
    struct Row<'a> {
        district_id: &'a str,
        community: usize,
    }
    let rows: Vec<Row> =
        graph.ids.iter().zip(&part.community).map(|(id, &c)| Row { district_id: id, community: c }).collect();
    write_csv_rows(&dir.join("communities.csv"), &rows)?;
    let members = |c: usize| part.members(c).into_iter().map(|v| graph.ids[v].clone()).collect::<Vec<_>>();
    let selected = match community {
        Some(c) if c >= part.count() => {
            return Err(Error::Config(format!("community {c} does not exist ({} found)", part.count())));
        }
        Some(c) => Some(members(c)),
        None => None,
    };
    io::write_json(
        &dir.join("communities.json"),
        &json!({ "count": part.count(), "modularity": part.modularity,
                 "communities": (0..part.count()).map(members).collect::<Vec<_>>(), "selected": selected }),
    )?;
    println!("{} communities, modularity {:.4}", part.count(), part.modularity);
    if let Some(m) = selected {
        println!("{}", m.join(" "));
    }
    Ok(())
}

pub fn select_districts(arg: &ConfigArg) -> Result<()> {
    let cfg = load(arg)?;
    let dir = prepare(&cfg, "select-districts")?;
    let data = cfg.load_data()?;
    let sel = census::select_representative_districts(&data.censuses)?;
    io::write_json(&dir.join("selection.json"), &sel)?;
    #[derive(Serialize)]
    struct Row<'a> {
        district_id: &'a str,
        children: f64,
        adolescents: f64,
        adults: f64,
        elderly: f64,
        selected: &'a str,
    }
    let rows = data
        .censuses
        .iter()
        .filter_map(|c| {
            let p = census::to_simplex(c).ok()?;
            let [a, b, d, e] = *p.parts();
            let role = sel.districts.iter().find(|s| s.district_id == c.district_id).map_or("", |s| s.role.as_str());
            Some(Row {
                district_id: &c.district_id,
                children: a,
                adolescents: b,
                adults: d,
                elderly: e,
                selected: role,
            })
        })
        .collect::<Vec<_>>();
    write_csv_rows(&dir.join("compositions.csv"), &rows)?;
    let names: Vec<&str> = sel.districts.iter().map(|d| d.district_id.as_str()).collect();
    println!("selected {}", names.join(" "));
    Ok(())
}
