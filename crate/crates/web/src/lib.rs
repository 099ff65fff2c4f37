//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns JSON text. The plain functions are usable
//! natively; the `#[wasm_bindgen]` wrappers only convert errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use pruneobs::estimation::{decode, weighted_observer, DEFAULT_OMEGA};
use pruneobs::experiments::{gen_random_system, sweep_with_workers, DEFAULT_SPECTRAL_RADIUS, SweepConfig};
use pruneobs::fdia::{random_support, synthesize_fdia};
use pruneobs::linalg::{complement, l1_norm};
use pruneobs::pruning::{poisson_binomial_pmf, prune_product, prune_quantile, SupportPrior};
use pruneobs::{build_horizon, Vector};

fn to_text<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn parse<'a, T: Deserialize<'a>>(json: &'a str) -> Result<T, String> {
    serde_json::from_str(json).map_err(|e| format!("bad input: {e}"))
}

/// Runs a sweep from a (partial) sweep configuration and returns its rows.
pub fn sweep_curve_json(config: &str) -> Result<String, String> {
    let cfg: SweepConfig = parse(config)?;
    if cfg.trials > 2000 {
        return Err("the demo caps trials at 2000".into());
    }
    let res = sweep_with_workers(&cfg, Some(1)).map_err(|e| e.to_string())?;
    to_text(&res.rows)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PruneInput {
    p: Vec<f64>,
    q_hat: Vec<u8>,
    eta: f64,
    #[serde(default)]
    quantile: bool,
}

#[derive(Serialize)]
struct PruneView {
    #[serde(rename = "I")]
    offline_set: Vec<usize>,
    pruned_set: Vec<usize>,
    l_eta: Option<usize>,
    /// Product of the confidences on the offline set.
    beta: f64,
    /// Distribution of the number of correct labels.
    pmf: Vec<f64>,
}

pub fn prune_explorer_json(input: &str) -> Result<String, String> {
    let inp: PruneInput = parse(input)?;
    let prior = SupportPrior::new(inp.q_hat, inp.p).map_err(|e| e.to_string())?;
    let pruned = if inp.quantile {
        prune_quantile(&prior, inp.eta)
    } else {
        prune_product(&prior, inp.eta)
    }
    .map_err(|e| e.to_string())?;
    let pmf = poisson_binomial_pmf(&prior.p).map_err(|e| e.to_string())?;
    to_text(&PruneView {
        beta: pruned.offline_set.iter().map(|&i| prior.p[i]).product(),
        offline_set: pruned.offline_set,
        pruned_set: pruned.safe_set,
        l_eta: pruned.l_eta,
        pmf: pmf.r,
    })
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AttackInput {
    seed: u64,
    m: usize,
    n: usize,
    attack_fraction: f64,
    epsilon_factor: f64,
}

impl Default for AttackInput {
    fn default() -> Self {
        Self { seed: 0, m: 20, n: 10, attack_fraction: 0.3, epsilon_factor: 0.01 }
    }
}

#[derive(Serialize)]
struct Decoded {
    x_hat: Vec<f64>,
    error: f64,
    residual_l1: f64,
}

#[derive(Serialize)]
struct AttackView {
    support: Vec<usize>,
    epsilon: f64,
    feasible: bool,
    unbounded: bool,
    alpha_guarantee: Option<f64>,
    x_star: Vec<f64>,
    e_t: Vec<f64>,
    l1: Decoded,
    detector_flag: bool,
    /// Weighted decoder given the true safe rows.
    weighted_oracle: Decoded,
}

/// Random plant and state, stealthy attack on a random support, then the
/// plain decoder next to the weighted decoder with a perfect prior.
pub fn attack_demo_json(input: &str) -> Result<String, String> {
    let inp: AttackInput = parse(input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(inp.seed);
    let sys = gen_random_system(inp.m, inp.n, DEFAULT_SPECTRAL_RADIUS, &mut rng).map_err(|e| e.to_string())?;
    let model = build_horizon(&sys, 1).map_err(|e| e.to_string())?;
    let x = Vector::from_fn(inp.n, |_, _| rng.sample(StandardNormal));
    let support = random_support(model.rows(), inp.attack_fraction, &mut rng).map_err(|e| e.to_string())?;
    if support.is_empty() {
        return Err("attack fraction too small for a non-empty support".into());
    }
    let eps = inp.epsilon_factor * l1_norm(&(model.h() * &x));
    let plan = synthesize_fdia(&model, &support, eps).map_err(|e| e.to_string())?;
    let y = plan.apply(&model, &x);
    let plain = decode(&model, &y).map_err(|e| e.to_string())?;
    let safe = complement(&support, model.rows());
    let oracle = weighted_observer(&model, &y, &safe, DEFAULT_OMEGA).map_err(|e| e.to_string())?;
    let view = |est: &pruneobs::estimation::EstimateResult| Decoded {
        x_hat: est.x_hat.iter().copied().collect(),
        error: (&est.x_hat - &x).norm(),
        residual_l1: est.residual_l1,
    };
    to_text(&AttackView {
        detector_flag: plain.residual_l1 > eps,
        l1: view(&plain),
        weighted_oracle: view(&oracle),
        support: plan.support.clone(),
        epsilon: eps,
        feasible: plan.feasible,
        unbounded: plan.unbounded,
        alpha_guarantee: plan.alpha_guarantee,
        x_star: x.iter().copied().collect(),
        e_t: plan.e_t.iter().copied().collect(),
    })
}

#[wasm_bindgen]
pub fn sweep_curve(config: &str) -> Result<String, JsError> {
    sweep_curve_json(config).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn prune_explorer(input: &str) -> Result<String, JsError> {
    prune_explorer_json(input).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn attack_demo(input: &str) -> Result<String, JsError> {
    attack_demo_json(input).map_err(|e| JsError::new(&e))
}
