use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sinai_core::analysis::{basic_valley, gamma_n, margin_n, search_cap};
use sinai_core::chain::{
    expected_local_time, oracle_expected_local_time, oracle_hit_prob, sandwich_bounds,
    ChainSegment, Target,
};
use sinai_core::env::Environment;
use sinai_core::experiments::report::{records_to_csv, to_csv};
use sinai_core::experiments::stats::Estimate;
use sinai_core::experiments::*;
use sinai_core::potential::Potential;
use sinai_core::seeds::{derive_seed, replica_seeds};
use sinai_core::walk::{concentration_radius, run, stats};

use crate::config::{Check, Config, Experiment, Walks};
use crate::Failure;

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("creating {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::Runtime(format!("writing {}: {e}", path.display())))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    s.push('\n');
    write(dir, name, &s)
}

fn missing(section: &str) -> Failure {
    Failure::Validation(format!("the configuration has no [{section}] table"))
}

fn check_betas(betas: &[f64]) -> Result<(), Failure> {
    match betas.iter().find(|b| !(0.0..1.0).contains(*b)) {
        Some(b) => Err(Failure::Validation(format!("beta = {b} must lie in [0, 1)"))),
        None => Ok(()),
    }
}

pub fn simulate(cfg: &Config) -> Result<(), Failure> {
    let sim = cfg.simulate.as_ref().ok_or_else(|| missing("simulate"))?;
    let out = cfg.out_dir()?;
    check_betas(&sim.betas)?;
    let (env_seed, walk_seed) = replica_seeds(cfg.seed, "simulate", 0);
    let env_seed = sim.env_seed.unwrap_or(env_seed);
    let walk_seed = sim.walk_seed.unwrap_or(walk_seed);
    let env = Environment::new(cfg.distribution.clone(), env_seed)?;
    let mut pot = Potential::from_env(env, sim.start, sim.start)?;
    let result = run(&mut pot, walk_seed, sim.n, sim.start)?;
    let s = stats(&result.field)?;
    let radii = sim
        .betas
        .iter()
        .map(|b| Ok(json!({ "beta": b, "y": concentration_radius(&result.field, *b)? })))
        .collect::<Result<Vec<_>, sinai_core::Error>>()?;
    let records = result.field.iter().map(|(site, count)| [site.to_string(), count.to_string()]);
    let header = ["site".to_string(), "count".to_string()];
    write(out, "local_time.csv", &records_to_csv("local_time", 1, &header, records)?)?;
    write_json(
        out,
        "stats.json",
        &json!({
            "n": sim.n,
            "env_seed": env_seed,
            "walk_seed": walk_seed,
            "start": sim.start,
            "final_position": result.state.position,
            "mass": result.field.total(),
            "visited": result.field.visited_range(),
            "l_star": s.l_star,
            "favorites": s.favorites,
            "fav_spread": s.fav_spread,
            "radii": radii,
            "digest": format!("{:#018x}", result.field.digest()),
        }),
    )
}

pub fn valley(cfg: &Config) -> Result<(), Failure> {
    let v = cfg.valley.as_ref().ok_or_else(|| missing("valley"))?;
    let out = cfg.out_dir()?;
    let sigma = cfg.distribution.sigma();
    let cap = match v.cap {
        Some(c) => c,
        None => search_cap(v.n, sigma)?,
    };
    if v.pad < 0 {
        return Err(Failure::Validation("pad must be nonnegative".into()));
    }
    let env_seed = v.env_seed.unwrap_or_else(|| replica_seeds(cfg.seed, "valley", 0).0);
    let env = Environment::new(cfg.distribution.clone(), env_seed)?;
    let mut pot = Potential::from_env(env, 0, 0)?;
    let (gamma, margin) = (gamma_n(v.n)?, margin_n(v.n)?);
    let found = basic_valley(&mut pot, gamma, margin, cap)?;
    write_json(
        out,
        "valley.json",
        &json!({
            "n": v.n,
            "env_seed": env_seed,
            "gamma": gamma,
            "margin": margin,
            "cap": cap,
            "found": found.is_some(),
            "valley": found,
        }),
    )?;
    let Some(b) = found else {
        write(out, "potential.csv", &records_to_csv("potential", 1, &["site".into(), "s".into()], Vec::<[String; 2]>::new())?)?;
        return Err(Failure::NoValley);
    };
    let (lo, hi) = (b.m_prime - v.pad, b.m_right + v.pad);
    pot.ensure(lo, hi)?;
    let records = (lo..=hi).map(|k| [k.to_string(), pot.s(k).to_string()]);
    write(out, "potential.csv", &records_to_csv("potential", 1, &["site".into(), "s".into()], records)?)
}

#[derive(Serialize)]
struct CheckResult {
    check: Check,
    pass: bool,
    report: Value,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| Failure::Runtime(e.to_string()))
}

/// Closed forms against the linear solves, and the occupation sandwich, on
/// `environments` fresh environments.
fn chain_tables(cfg: &Config, environments: usize) -> Result<(Vec<[String; 7]>, bool, bool), Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, "verify/oracle-picks", 0));
    let eta0 = cfg.distribution.eta0();
    let mut rows = Vec::with_capacity(environments);
    let (mut oracle_ok, mut sandwich_ok) = (true, true);
    for e in 0..environments {
        let env_seed = derive_seed(cfg.seed, "verify/oracle", e as u64);
        let env = Environment::new(cfg.distribution.clone(), env_seed)?;
        let pot = Potential::from_env(env, -60, 60)?;
        let a = rng.random_range(-60..=20);
        let b = a + rng.random_range(1..=40);
        let seg = ChainSegment::new(&pot, a, b)?;
        let mut hit = 0.0f64;
        for x in a..=b {
            for t in [Target::Above, Target::Below] {
                hit = hit.max((seg.hit_prob(x, t)? - oracle_hit_prob(&seg, x, t)?).abs());
            }
        }
        let i = rng.random_range(-30..=30);
        let (mut local, mut violations, mut tight) = (0.0f64, 0u32, 0u32);
        for x in (i - 30..=i + 30).filter(|x| *x != i) {
            let c = expected_local_time(&pot, i, x)?;
            let o = oracle_expected_local_time(&pot, i, x)?;
            local = local.max((c - o).abs() / o.max(1.0));
            if (x - i).abs() <= 20 {
                let s = sandwich_bounds(&pot, i, x, eta0)?;
                violations += u32::from(!s.holds_within(1e-12));
                tight += u32::from(s.is_tight(1e-12));
            }
        }
        oracle_ok &= hit <= 1e-10 && local <= 1e-9;
        sandwich_ok &= violations == 0;
        rows.push([
            e.to_string(),
            env_seed.to_string(),
            format!("[{a}, {b}]"),
            hit.to_string(),
            local.to_string(),
            violations.to_string(),
            tight.to_string(),
        ]);
    }
    Ok((rows, oracle_ok, sandwich_ok))
}

pub fn verify(cfg: &Config) -> Result<(), Failure> {
    let v = cfg.verify.clone().unwrap_or_else(|| {
        toml::from_str("").expect("every verify field has a default")
    });
    let out = cfg.out_dir()?;
    let (dist, seed, workers) = (&cfg.distribution, cfg.seed, cfg.workers);
    let mut results = Vec::new();
    if v.checks.iter().any(|c| matches!(c, Check::Oracle | Check::Sandwich)) {
        let (rows, oracle_ok, sandwich_ok) = chain_tables(cfg, v.environments)?;
        let header: Vec<String> = ["env", "env_seed", "interval", "max_hit_err", "max_local_time_rel_err", "sandwich_violations", "sandwich_tight"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        write(out, "oracle.csv", &records_to_csv("oracle", 1, &header, rows)?)?;
        for (check, pass) in [(Check::Oracle, oracle_ok), (Check::Sandwich, sandwich_ok)] {
            if v.checks.contains(&check) {
                let report = json!({ "environments": v.environments, "table": "oracle.csv" });
                results.push(CheckResult { check, pass, report });
            }
        }
    }
    for &check in &v.checks {
        let (pass, report) = match check {
            Check::Oracle | Check::Sandwich => continue,
            Check::Wald => {
                let r = verify_wald_bounds(dist, 5.0, 5.0, v.trials, seed, workers)?;
                (r.pass, to_value(&r)?)
            }
            Check::SqrtTail => {
                let r = verify_sqrt_tail(dist, &[4, 16, 64, 256, 1024], v.trials, seed, workers)?;
                (r.pass, to_value(&r)?)
            }
            Check::Band => {
                let r = verify_band_expectation(dist, v.n, &[1.0, 4.0, 16.0], &[1, 2, 3], v.replicas, seed, workers)?;
                (r.pass, to_value(&r)?)
            }
            Check::Slice => {
                let r = verify_slice_bound(dist, v.n, v.replicas, &[1.0, 16.0, 256.0], seed, workers)?;
                (r.pass, to_value(&r)?)
            }
            Check::GoodEnv => {
                let r = verify_good_env_rate(dist, v.n, 0.5, v.replicas, seed, workers)?;
                (r.pass, to_value(&r)?)
            }
        };
        results.push(CheckResult { check, pass, report });
    }
    let rows: Vec<[String; 2]> = results
        .iter()
        .map(|r| [serde_json::to_string(&r.check).unwrap().trim_matches('"').to_string(), r.pass.to_string()])
        .collect();
    write(out, "verify.csv", &records_to_csv("verify", 1, &["check".into(), "pass".into()], rows)?)?;
    write_json(out, "verify.json", &json!({ "seed": seed, "checks": results }))?;
    let failed: Vec<String> = rows_failed(&results);
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("checks failed: {}", failed.join(", "))))
    }
}

fn rows_failed(results: &[CheckResult]) -> Vec<String> {
    results
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{:?}", r.check))
        .collect()
}

fn campaign(cfg: &Config, w: &Walks) -> Result<Campaign, Failure> {
    let mut c = match (&w.schedule, w.max_n) {
        (Some(s), None) => {
            let mut c = Campaign::new(cfg.distribution.clone(), 16, w.replicas, cfg.seed);
            c.schedule = s.clone();
            c
        }
        (None, Some(max_n)) => Campaign::new(cfg.distribution.clone(), max_n, w.replicas, cfg.seed),
        _ => return Err(Failure::Validation("give exactly one of `max_n` and `schedule`".into())),
    };
    if let Some(b) = &w.betas {
        c.betas = b.clone();
    }
    if let Some(x) = w.c3 {
        c.c3 = x;
    }
    if let Some(x) = w.c2_quantile {
        c.c2_quantile = x;
    }
    if let Some(x) = w.max_steps {
        c.max_steps = x;
    }
    c.validate()?;
    Ok(c)
}

fn verdict(pass: bool, name: &str) -> Result<(), Failure> {
    if pass {
        Ok(())
    } else {
        Err(Failure::Verification(format!("{name} did not meet its pass criterion")))
    }
}

fn estimate_cells(e: &Estimate) -> [String; 3] {
    [e.value.to_string(), e.std_err.to_string(), e.samples.to_string()]
}

pub fn experiment(cfg: &Config) -> Result<(), Failure> {
    let exp = cfg.experiment.as_ref().ok_or_else(|| missing("experiment"))?;
    let out = cfg.out_dir()?;
    let (dist, seed, workers) = (&cfg.distribution, cfg.seed, cfg.workers);
    let est_header = |first: &[&str]| -> Vec<String> {
        first
            .iter()
            .chain(["estimate", "std_err", "samples"].iter())
            .map(|s| s.to_string())
            .collect()
    };
    match exp {
        Experiment::Concentration(w) => {
            let r = probe_concentration(&campaign(cfg, w)?, workers)?;
            write(out, "concentration.csv", &r.csv()?)?;
            let mut summary = to_value(&r)?;
            summary.as_object_mut().unwrap().remove("rows");
            write_json(out, "concentration.json", &summary)?;
            verdict(r.pass, "concentration")
        }
        Experiment::BetaScaling(w) => {
            let c = campaign(cfg, w)?;
            let r = probe_beta_scaling(&c, workers)?;
            write(out, "beta_scaling.csv", &to_csv("beta_scaling", 1, &r.betas.iter().zip(&r.medians).collect::<Vec<_>>())?)?;
            write_json(out, "beta_scaling.json", &r)?;
            verdict(r.pass, "beta scaling")
        }
        Experiment::FavoriteSites(w) => {
            let c = campaign(cfg, w)?;
            let r = probe_favorite_sites(&c, w.trajectories, w.trajectory_steps, workers)?;
            write(out, "favorite_checks.csv", &to_csv("favorite_checks", 1, &r.checks)?)?;
            write_json(out, "favorite_sites.json", &r)?;
            verdict(r.pass, "favorite-site inclusion")
        }
        Experiment::ZeroOne { max_n, environments, walks_per_env } => {
            let r = probe_zero_one(dist, &geometric_schedule(*max_n), *environments, *walks_per_env, seed, workers)?;
            write_json(out, "zero_one.json", &r)
        }
        Experiment::Wald { a, d, trials } => {
            let r = verify_wald_bounds(dist, *a, *d, *trials, seed, workers)?;
            write_json(out, "wald.json", &r)?;
            verdict(r.pass, "wald bounds")
        }
        Experiment::SqrtTail { r, trials } => {
            let rep = verify_sqrt_tail(dist, r, *trials, seed, workers)?;
            let rows = rep.points.iter().map(|p| {
                let [a, b, c] = estimate_cells(&p.estimate);
                [p.r.to_string(), a, b, c]
            });
            write(out, "sqrt_tail.csv", &records_to_csv("sqrt_tail", 1, &est_header(&["r"]), rows)?)?;
            write_json(out, "sqrt_tail.json", &rep)?;
            verdict(rep.pass, "sqrt tail")
        }
        Experiment::Band { n, c_tilde, bands, replicas } => {
            let r = verify_band_expectation(dist, *n, c_tilde, bands, *replicas, seed, workers)?;
            let rows = r.cells.iter().map(|c| {
                let [a, b, s] = estimate_cells(&c.estimate);
                [c.c_tilde.to_string(), c.band.to_string(), a, b, s]
            });
            write(out, "band.csv", &records_to_csv("band", 1, &est_header(&["c_tilde", "band"]), rows)?)?;
            write_json(out, "band.json", &r)?;
            verdict(r.pass, "band expectation")
        }
        Experiment::Slice { n, valleys, c_tilde } => {
            let r = verify_slice_bound(dist, *n, *valleys, c_tilde, seed, workers)?;
            write_json(out, "slice.json", &r)?;
            verdict(r.pass, "slice bound")
        }
        Experiment::GoodEnvRate { n, beta, replicas } => {
            let r = verify_good_env_rate(dist, *n, *beta, *replicas, seed, workers)?;
            write(out, "c0_grid.csv", &to_csv("c0_grid", 1, &r.calibration.grid)?)?;
            write_json(out, "good_env_rate.json", &r)?;
            verdict(r.pass, "good-environment rate")
        }
        Experiment::Escape { n, pairs } => {
            let r = probe_escape(dist, *n, *pairs, seed, workers)?;
            write_json(out, "escape.json", &r)
        }
    }
}
