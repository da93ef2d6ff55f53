//! Browser bindings. Every export takes a JSON environment law and returns a
//! JSON document for the page to draw.

use serde::Serialize;
use sinai_core::analysis::{basic_valley, gamma_n, margin_n, search_cap, BasicValley};
use sinai_core::chain::{oracle_hit_prob, ChainSegment, Target};
use sinai_core::env::{EnvDistribution, Environment};
use sinai_core::potential::Potential;
use sinai_core::walk::{concentration_radius, run, stats};
use wasm_bindgen::prelude::*;

const MAX_STEPS: u64 = 20_000_000;
const MAX_SPAN: i64 = 2_000;

fn law(json: &str) -> Result<EnvDistribution, String> {
    let d: EnvDistribution = serde_json::from_str(json).map_err(|e| format!("law: {e}"))?;
    d.validate().map_err(|e| e.to_string())?;
    Ok(d)
}

fn potential(json: &str, env_seed: u64) -> Result<Potential, String> {
    let env = Environment::new(law(json)?, env_seed).map_err(|e| e.to_string())?;
    Potential::from_env(env, 0, 0).map_err(|e| e.to_string())
}

fn encode<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct Profile {
    gamma: f64,
    margin: f64,
    cap: i64,
    valley: Option<BasicValley>,
    lo: i64,
    s: Vec<f64>,
}

/// Potential around the basic valley at scale `n`, or around the origin when
/// there is none.
pub fn valley_profile_json(law: &str, env_seed: u64, n: u64) -> Result<String, String> {
    let mut pot = potential(law, env_seed)?;
    let d = pot.environment().expect("built from an environment").distribution().clone();
    let err = |e: sinai_core::Error| e.to_string();
    let (gamma, margin) = (gamma_n(n).map_err(err)?, margin_n(n).map_err(err)?);
    let cap = search_cap(n, d.sigma()).map_err(err)?;
    let valley = basic_valley(&mut pot, gamma, margin, cap).map_err(err)?;
    let (lo, hi) = match &valley {
        Some(v) => {
            let pad = (v.m_right - v.m_prime) / 20 + 1;
            (v.m_prime - pad, v.m_right + pad)
        }
        None => (-500, 500),
    };
    let s = pot.range(lo, hi).map_err(err)?.to_vec();
    encode(&Profile { gamma, margin, cap, valley, lo, s })
}

#[derive(Serialize)]
struct Histogram {
    n: u64,
    lo: i64,
    counts: Vec<u64>,
    final_position: i64,
    l_star: u64,
    favorites: Vec<i64>,
    radius_half: u64,
}

/// One walk of `n` steps from the origin: its local-time histogram.
pub fn simulate_json(law: &str, env_seed: u64, walk_seed: u64, n: u64) -> Result<String, String> {
    if n == 0 || n > MAX_STEPS {
        return Err(format!("n must lie in 1..={MAX_STEPS}"));
    }
    let mut pot = potential(law, env_seed)?;
    let out = run(&mut pot, walk_seed, n, 0).map_err(|e| e.to_string())?;
    let s = stats(&out.field).map_err(|e| e.to_string())?;
    let (lo, counts) = out.field.dense();
    encode(&Histogram {
        n,
        lo,
        counts: counts.to_vec(),
        final_position: out.state.position,
        l_star: s.l_star,
        favorites: s.favorites,
        radius_half: concentration_radius(&out.field, 0.5).map_err(|e| e.to_string())?,
    })
}

#[derive(Serialize)]
struct HitCurve {
    a: i64,
    b: i64,
    s: Vec<f64>,
    closed: Vec<f64>,
    oracle: Vec<f64>,
    max_err: f64,
}

/// Probability of reaching `b` before `a` from every start in `[a, b]`,
/// by the closed form and by a direct linear solve.
pub fn hit_curve_json(law: &str, env_seed: u64, a: i64, b: i64) -> Result<String, String> {
    if b <= a || b - a > MAX_SPAN {
        return Err(format!("need a < b with b - a <= {MAX_SPAN}"));
    }
    let mut pot = potential(law, env_seed)?;
    pot.ensure(a, b).map_err(|e| e.to_string())?;
    let s = pot.range(a, b).map_err(|e| e.to_string())?.to_vec();
    let seg = ChainSegment::new(&pot, a, b).map_err(|e| e.to_string())?;
    let mut closed = Vec::with_capacity(s.len());
    let mut oracle = Vec::with_capacity(s.len());
    for x in a..=b {
        closed.push(seg.hit_prob(x, Target::Above).map_err(|e| e.to_string())?);
        oracle.push(oracle_hit_prob(&seg, x, Target::Above).map_err(|e| e.to_string())?);
    }
    let max_err = closed.iter().zip(&oracle).fold(0.0f64, |m, (c, o)| m.max((c - o).abs()));
    encode(&HitCurve { a, b, s, closed, oracle, max_err })
}

#[wasm_bindgen]
pub fn valley_profile(law: &str, env_seed: u64, n: u64) -> Result<String, JsValue> {
    valley_profile_json(law, env_seed, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn simulate(law: &str, env_seed: u64, walk_seed: u64, n: u64) -> Result<String, JsValue> {
    simulate_json(law, env_seed, walk_seed, n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn hit_curve(law: &str, env_seed: u64, a: i64, b: i64) -> Result<String, JsValue> {
    hit_curve_json(law, env_seed, a, b).map_err(|e| JsValue::from_str(&e))
}
