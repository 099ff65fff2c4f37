use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{decode, weighted_observer, DEFAULT_OMEGA};
use crate::fdia::{random_support, support_size, synthesize_fdia};
use crate::linalg::{self, Vector};
use crate::lti::build_horizon;
use crate::pruning::{indicator_from_support, jitter_confidences, sample_prior, Strategy};
use crate::seeding::derive_seed;

use super::systems::{gen_random_system, DEFAULT_SPECTRAL_RADIUS};

/// Detector threshold used by the trial's decoder and granted to the attacker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonPolicy {
    /// `epsilon = factor * ||y*_T||_1`.
    Relative { factor: f64 },
    Absolute { value: f64 },
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        EpsilonPolicy::Relative { factor: 0.01 }
    }
}

impl EpsilonPolicy {
    pub fn epsilon(&self, clean: &Vector) -> f64 {
        match *self {
            EpsilonPolicy::Relative { factor } => factor * linalg::l1_norm(clean),
            EpsilonPolicy::Absolute { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub attack_grid: Vec<f64>,
    pub trials: usize,
    pub true_rate: f64,
    /// Half-width of the uniform jitter around `true_rate`.
    pub jitter: f64,
    pub eta: f64,
    pub omega: f64,
    pub epsilon_policy: EpsilonPolicy,
    pub strategies: Vec<Strategy>,
    pub master_seed: u64,
    pub spectral_radius: f64,
    /// Success iff `||x_hat - x*|| <= success_tol * ||x*||`.
    pub success_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            m: 20,
            n: 10,
            horizon: 1,
            attack_grid: (0..=7).map(|i| i as f64 / 10.0).collect(),
            trials: 1000,
            true_rate: 0.6,
            jitter: 0.1,
            eta: 0.9,
            omega: DEFAULT_OMEGA,
            epsilon_policy: EpsilonPolicy::default(),
            strategies: Strategy::ALL.to_vec(),
            master_seed: 0,
            spectral_radius: DEFAULT_SPECTRAL_RADIUS,
            success_tol: 1e-3,
        }
    }
}

impl SweepConfig {
    pub fn rows(&self) -> usize {
        self.horizon * self.m
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.n == 0 || self.m <= self.n {
            return bad(format!("need m > n >= 1, got m={}, n={}", self.m, self.n));
        }
        if self.horizon == 0 {
            return bad("T must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.attack_grid.is_empty() {
            return bad("attack grid is empty".into());
        }
        for &p in &self.attack_grid {
            if !(0.0..1.0).contains(&p) {
                return bad(format!("attack fractions must lie in [0,1), got {p}"));
            }
            if support_size(self.rows(), p) >= self.rows() {
                return bad(format!("attack fraction {p} leaves no safe rows"));
            }
        }
        if !(self.true_rate > 0.0 && self.true_rate <= 1.0) {
            return bad("true_rate must lie in (0,1]".into());
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return bad("jitter must be non-negative".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad("eta must lie in (0,1)".into());
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return bad("omega must lie in [0,1]".into());
        }
        match self.epsilon_policy {
            EpsilonPolicy::Relative { factor } if !(factor >= 0.0 && factor.is_finite()) => {
                return bad("epsilon factor must be non-negative".into())
            }
            EpsilonPolicy::Absolute { value } if !(value >= 0.0 && value.is_finite()) => {
                return bad("epsilon must be non-negative".into())
            }
            _ => {}
        }
        if self.strategies.is_empty() {
            return bad("no strategies selected".into());
        }
        if !(self.spectral_radius > 0.0 && self.spectral_radius.is_finite()) {
            return bad("spectral radius target must be positive".into());
        }
        if !(self.success_tol > 0.0) {
            return bad("success tolerance must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub strategy: Strategy,
    pub success: bool,
    pub error_l2: f64,
    pub trusted_rows: usize,
}

/// One paired trial: every strategy decodes the same attacked window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub p_a: f64,
    pub trial_index: u64,
    pub attack_feasible: Option<bool>,
    pub unbounded: bool,
    pub records: Vec<TrialRecord>,
}

impl TrialOutcome {
    pub fn record(&self, strategy: Strategy) -> Option<&TrialRecord> {
        self.records.iter().find(|r| r.strategy == strategy)
    }
}

/// Draw order from the trial seed: system, `x*`, support, confidences, prior.
pub fn run_trial(cfg: &SweepConfig, p_a: f64, trial_index: u64) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, trial_index));
    let sys = gen_random_system(cfg.m, cfg.n, cfg.spectral_radius, &mut rng)?;
    let model = build_horizon(&sys, cfg.horizon)?;
    let x_star = Vector::from_fn(cfg.n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let rows = model.rows();
    let support = random_support(rows, p_a, &mut rng)?;
    let clean = model.h() * &x_star;
    let epsilon = cfg.epsilon_policy.epsilon(&clean);
    let (y, attack_feasible, unbounded) = if support.is_empty() {
        (clean, None, false)
    } else {
        let plan = synthesize_fdia(&model, &support, epsilon)?;
        (plan.apply(&model, &x_star), Some(plan.feasible), plan.unbounded)
    };
    let q = indicator_from_support(&support, rows)?;
    let p = jitter_confidences(rows, cfg.true_rate, cfg.jitter, &mut rng)?;
    let prior = sample_prior(&q, &p, &mut rng)?;

    let tol = cfg.success_tol * x_star.norm();
    let mut records = Vec::with_capacity(cfg.strategies.len());
    for &strategy in &cfg.strategies {
        let trusted = strategy.trusted_rows(&prior, cfg.eta)?;
        let est = if trusted.is_empty() {
            decode(&model, &y)?
        } else {
            weighted_observer(&model, &y, &trusted, cfg.omega)?
        };
        let error_l2 = (&est.x_hat - &x_star).norm();
        records.push(TrialRecord {
            strategy,
            success: error_l2 <= tol,
            error_l2,
            trusted_rows: trusted.len(),
        });
    }
    Ok(TrialOutcome {
        p_a,
        trial_index,
        attack_feasible,
        unbounded,
        records,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "P_A")]
    pub p_a: f64,
    pub strategy: Strategy,
    pub success_rate: f64,
    pub stderr: f64,
    pub mean_error: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn row(&self, p_a: f64, strategy: Strategy) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.p_a == p_a && r.strategy == strategy)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["P_A", "strategy", "success_rate", "stderr", "mean_error"])?;
        for r in &self.rows {
            w.write_record([
                r.p_a.to_string(),
                r.strategy.to_string(),
                r.success_rate.to_string(),
                r.stderr.to_string(),
                r.mean_error.to_string(),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn aggregate(cfg: &SweepConfig, outcomes: &[TrialOutcome]) -> SweepResult {
    let mut rows = Vec::new();
    for (g, &p_a) in cfg.attack_grid.iter().enumerate() {
        let chunk = &outcomes[g * cfg.trials..(g + 1) * cfg.trials];
        for &strategy in &cfg.strategies {
            let recs: Vec<&TrialRecord> = chunk.iter().filter_map(|o| o.record(strategy)).collect();
            let trials = recs.len();
            let successes = recs.iter().filter(|r| r.success).count();
            let rate = successes as f64 / trials as f64;
            rows.push(SweepRow {
                p_a,
                strategy,
                success_rate: rate,
                stderr: (rate * (1.0 - rate) / trials as f64).sqrt(),
                mean_error: recs.iter().map(|r| r.error_l2).sum::<f64>() / trials as f64,
                trials,
            });
        }
    }
    SweepResult {
        config: cfg.clone(),
        rows,
    }
}

/// Runs every `(grid point, trial)` pair; output is independent of scheduling.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    sweep_with_workers(cfg, None)
}

/// As [`sweep`], with an explicit worker count (`Some(1)` runs inline).
pub fn sweep_with_workers(cfg: &SweepConfig, workers: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let items: Vec<(f64, u64)> = cfg
        .attack_grid
        .iter()
        .flat_map(|&p| (0..cfg.trials as u64).map(move |t| (p, t)))
        .collect();
    let outcomes = run_items(cfg, &items, workers)?;
    Ok(aggregate(cfg, &outcomes))
}

#[cfg(feature = "parallel")]
fn run_items(cfg: &SweepConfig, items: &[(f64, u64)], workers: Option<usize>) -> Result<Vec<TrialOutcome>> {
    use rayon::prelude::*;
    if workers == Some(1) {
        return items.iter().map(|&(p, t)| run_trial(cfg, p, t)).collect();
    }
    let work = || items.par_iter().map(|&(p, t)| run_trial(cfg, p, t)).collect::<Result<Vec<_>>>();
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start {w} workers: {e}")))?
            .install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_items(cfg: &SweepConfig, items: &[(f64, u64)], _workers: Option<usize>) -> Result<Vec<TrialOutcome>> {
    items.iter().map(|&(p, t)| run_trial(cfg, p, t)).collect()
}
