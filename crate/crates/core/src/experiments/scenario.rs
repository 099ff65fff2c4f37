use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{decode, weighted_observer, DEFAULT_OMEGA};
use crate::fdia::support_size;
use crate::linalg::Vector;
use crate::lti::{build_horizon, simulate, stack_window, LtiSystem};
use crate::observer::luenberger_baseline;
use crate::pruning::{indicator_from_support, jitter_confidences, prune_product, sample_prior, SupportPrior};
use crate::system_file::{parse_system_json, LoadedSystem};

/// Five-state surrogate grid model shipped with the crate. It is a small
/// hand-built oscillatory network, not the IEEE 14-bus system.
pub const SURROGATE_GRID5_JSON: &str = include_str!("../../data/surrogate_grid5.json");

pub fn surrogate_system() -> LoadedSystem {
    parse_system_json(SURROGATE_GRID5_JSON).expect("bundled surrogate system is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ObserverKind {
    /// Luenberger observer with the steady-state Kalman gain.
    #[serde(rename = "LO")]
    Luenberger,
    /// Plain l1 moving-horizon observer.
    #[serde(rename = "L1O")]
    L1,
    /// Weighted l1 observer with the pruned prior.
    #[serde(rename = "WL1P")]
    WeightedPruned,
}

impl ObserverKind {
    pub const ALL: [ObserverKind; 3] = [ObserverKind::Luenberger, ObserverKind::L1, ObserverKind::WeightedPruned];
}

/// Persistent attack on the chosen sensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackSignal {
    /// Sensor `j` (the `j`-th attacked one) receives
    /// `amplitude * sin(2 pi t / period + 2 pi j / count)`.
    Sinusoid { amplitude: f64, period: f64 },
    /// The attacked sensors report a fake state offset
    /// `d(t) = amplitude * (sin(2 pi t / period + 2 pi i / n))_i`, i.e. `e_j = C_j d(t)`.
    StateOffset { amplitude: f64, period: f64 },
    None,
}

impl AttackSignal {
    fn schedule(&self, sys: &LtiSystem, sensors: &[usize], steps: usize) -> Vec<Vector> {
        let m = sys.m();
        let n = sys.n();
        (0..steps)
            .map(|t| {
                let mut e = Vector::zeros(m);
                let t = t as f64;
                match *self {
                    AttackSignal::Sinusoid { amplitude, period } => {
                        let count = sensors.len().max(1) as f64;
                        for (j, &s) in sensors.iter().enumerate() {
                            e[s] = amplitude * (TAU * t / period + TAU * j as f64 / count).sin();
                        }
                    }
                    AttackSignal::StateOffset { amplitude, period } => {
                        let d = Vector::from_fn(n, |i, _| amplitude * (TAU * t / period + TAU * i as f64 / n as f64).sin());
                        let cd = sys.c() * d;
                        for &s in sensors {
                            e[s] = cd[s];
                        }
                    }
                    AttackSignal::None => {}
                }
                e
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub steps: usize,
    /// Fraction of sensors under persistent attack.
    pub attack_fraction: f64,
    /// Explicit attacked sensors; overrides the seeded random choice.
    pub attacked_sensors: Option<Vec<usize>>,
    pub signal: AttackSignal,
    pub omega: f64,
    pub eta: f64,
    /// Mean confidence of the per-sensor prior.
    pub true_rate: f64,
    pub jitter: f64,
    pub seed: u64,
    pub observers: Vec<ObserverKind>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            horizon: 3,
            steps: 300,
            attack_fraction: 0.3,
            attacked_sensors: None,
            signal: AttackSignal::Sinusoid {
                amplitude: 2.0,
                period: 30.0,
            },
            omega: DEFAULT_OMEGA,
            eta: 0.9,
            true_rate: 0.97,
            jitter: 0.03,
            seed: 5,
            observers: ObserverKind::ALL.to_vec(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self, sys: &LtiSystem) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.horizon == 0 {
            return bad("T must be at least 1".into());
        }
        if self.steps < self.horizon {
            return bad(format!("steps ({}) must be at least T ({})", self.steps, self.horizon));
        }
        if !(0.0..1.0).contains(&self.attack_fraction) {
            return bad("attack fraction must lie in [0,1)".into());
        }
        if let Some(s) = &self.attacked_sensors {
            if let Some(&i) = s.iter().find(|&&i| i >= sys.m()) {
                return Err(Error::IndexOutOfRange { index: i, len: sys.m() });
            }
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return bad("omega must lie in [0,1]".into());
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return bad("eta must lie in (0,1)".into());
        }
        if !(self.true_rate > 0.0 && self.true_rate <= 1.0) {
            return bad("true_rate must lie in (0,1]".into());
        }
        match self.signal {
            AttackSignal::Sinusoid { amplitude, period } | AttackSignal::StateOffset { amplitude, period }
                if !(amplitude.is_finite() && period > 0.0) =>
            {
                return bad("attack signal needs a finite amplitude and a positive period".into())
            }
            _ => {}
        }
        if self.observers.is_empty() {
            return bad("no observers selected".into());
        }
        Ok(())
    }
}

/// Estimation errors above this (max-abs over coordinates) count as a spike.
pub const SPIKE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObserverMetrics<T = f64> {
    #[serde(rename = "LO", skip_serializing_if = "Option::is_none")]
    pub lo: Option<T>,
    #[serde(rename = "L1O", skip_serializing_if = "Option::is_none")]
    pub l1o: Option<T>,
    #[serde(rename = "WL1P", skip_serializing_if = "Option::is_none")]
    pub wl1p: Option<T>,
}

impl<T: Copy> ObserverMetrics<T> {
    fn empty() -> Self {
        Self {
            lo: None,
            l1o: None,
            wl1p: None,
        }
    }

    pub fn get(&self, kind: ObserverKind) -> Option<T> {
        match kind {
            ObserverKind::Luenberger => self.lo,
            ObserverKind::L1 => self.l1o,
            ObserverKind::WeightedPruned => self.wl1p,
        }
    }

    fn slot(&mut self, kind: ObserverKind) -> &mut Option<T> {
        match kind {
            ObserverKind::Luenberger => &mut self.lo,
            ObserverKind::L1 => &mut self.l1o,
            ObserverKind::WeightedPruned => &mut self.wl1p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoordinateMetrics {
    pub coordinate: usize,
    pub rms: ObserverMetrics,
    pub max_abs: ObserverMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioMetrics {
    pub coordinates: Vec<CoordinateMetrics>,
    /// Windows whose estimate misses the state by more than [`SPIKE_TOL`].
    pub spikes: ObserverMetrics<usize>,
    pub attacked_sensors: Vec<usize>,
    pub trusted_sensors: Vec<usize>,
    /// Whether every trusted sensor is truly unattacked.
    pub prior_precise: bool,
    pub evaluated_steps: usize,
}

/// Simulates the attacked trajectory and scores each observer on the window
/// start states `x_0 .. x_{steps - T}`.
pub fn run_scenario(sys: &LtiSystem, x0: &Vector, cfg: &ScenarioConfig) -> Result<ScenarioMetrics> {
    cfg.validate(sys)?;
    let m = sys.m();
    let n = sys.n();
    let t_len = cfg.horizon;
    let model = build_horizon(sys, t_len)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut attacked = match &cfg.attacked_sensors {
        Some(s) => s.clone(),
        None => rand::seq::index::sample(&mut rng, m, support_size(m, cfg.attack_fraction)).into_vec(),
    };
    attacked.sort_unstable();
    attacked.dedup();
    if attacked.len() >= m {
        return Err(Error::SupportTooLarge { size: attacked.len(), rows: m });
    }

    let q = indicator_from_support(&attacked, m)?;
    let p = jitter_confidences(m, cfg.true_rate, cfg.jitter, &mut rng)?;
    let prior: SupportPrior = sample_prior(&q, &p, &mut rng)?;
    let trusted_sensors = prune_product(&prior, cfg.eta)?.safe_set;
    let trusted_rows: Vec<usize> = (0..t_len)
        .flat_map(|t| trusted_sensors.iter().map(move |&s| t * m + s))
        .collect();

    let schedule = cfg.signal.schedule(sys, &attacked, cfg.steps);
    let traj = simulate(sys, x0, cfg.steps, Some(&schedule))?;
    let starts = cfg.steps - t_len + 1;

    let mut errors: Vec<(ObserverKind, Vec<Vector>)> = Vec::new();
    for &kind in &cfg.observers {
        let estimates: Vec<Vector> = match kind {
            ObserverKind::Luenberger => luenberger_baseline(sys, &traj.attacked_measurements, None)?
                .into_iter()
                .take(starts)
                .collect(),
            ObserverKind::L1 | ObserverKind::WeightedPruned => (0..starts)
                .map(|s| {
                    let w = stack_window(&traj, s + t_len - 1, t_len)?;
                    let est = if kind == ObserverKind::L1 || trusted_rows.is_empty() {
                        decode(&model, &w.y)?
                    } else {
                        weighted_observer(&model, &w.y, &trusted_rows, cfg.omega)?
                    };
                    Ok(est.x_hat)
                })
                .collect::<Result<Vec<_>>>()?,
        };
        let errs = estimates
            .iter()
            .zip(&traj.states)
            .map(|(e, x)| e - x)
            .collect();
        errors.push((kind, errs));
    }

    let coordinates = (0..n)
        .map(|i| {
            let mut rms = ObserverMetrics::empty();
            let mut max_abs = ObserverMetrics::empty();
            for (kind, errs) in &errors {
                let sq: f64 = errs.iter().map(|e| e[i] * e[i]).sum();
                *rms.slot(*kind) = Some((sq / errs.len() as f64).sqrt());
                *max_abs.slot(*kind) = Some(errs.iter().map(|e| e[i].abs()).fold(0.0, f64::max));
            }
            CoordinateMetrics {
                coordinate: i,
                rms,
                max_abs,
            }
        })
        .collect();
    let mut spikes = ObserverMetrics::empty();
    for (kind, errs) in &errors {
        *spikes.slot(*kind) = Some(errs.iter().filter(|e| e.amax() > SPIKE_TOL).count());
    }

    Ok(ScenarioMetrics {
        coordinates,
        spikes,
        prior_precise: trusted_sensors.iter().all(|&s| q.q[s] == 1),
        attacked_sensors: attacked,
        trusted_sensors,
        evaluated_steps: starts,
    })
}
