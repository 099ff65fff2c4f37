use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};

use pruneobs::analysis::rip_constant;
use pruneobs::estimation::{decode, weighted_observer, DEFAULT_OMEGA};
use pruneobs::experiments::{
    run_scenario, surrogate_system, sweep_with_workers, AttackSignal, EpsilonPolicy, ScenarioConfig, SweepConfig,
};
use pruneobs::fdia::{
    fdia_feasibility, is_successful, random_support, synthesize_fdia_capped, AttackPlan, Verdict, DEFAULT_CAP_FACTOR,
};
use pruneobs::pruning::{
    ppv, prune_product, prune_quantile, sample_prior, set_ppv, Strategy, SupportIndicator,
    SupportPrior,
};
use pruneobs::system_file::load_system_json;
use pruneobs::{build_horizon, HorizonModel, Vector};

use crate::io::{from_map, load_system, read_config, read_vector, take_keys, take_system};
use crate::{
    invalid, AttackArgs, CliResult, EstimateArgs, OutputFormat, PruneArgs, PruneRule, RipArgs, ScenarioArgs,
    SignalKind, SweepArgs, SystemArgs,
};

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| crate::CliError::Validation(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Merges flags over the config file for subcommands whose config mirrors
/// their flag set.
fn config_and_system<T: serde::de::DeserializeOwned>(
    path: Option<&std::path::Path>,
    flags: SystemArgs,
) -> CliResult<(T, SystemArgs)> {
    let mut map = read_config(path)?;
    let system = take_system(&mut map)?;
    Ok((from_map(map)?, flags.or(system)))
}

fn horizon_model(system: &SystemArgs) -> CliResult<(HorizonModel, usize)> {
    let loaded = load_system(system)?;
    let t = system.horizon.unwrap_or(1);
    if t == 0 {
        return invalid("T must be at least 1");
    }
    Ok((build_horizon(&loaded.system, t)?, loaded.system.n()))
}

fn check_state(x: &[f64], n: usize) -> CliResult<Vector> {
    if x.len() != n {
        return invalid(format!("x_star has length {}, expected {n}", x.len()));
    }
    Ok(Vector::from_column_slice(x))
}

#[derive(Serialize)]
struct AttackOutput {
    #[serde(flatten)]
    plan: AttackPlan,
    #[serde(skip_serializing_if = "Option::is_none")]
    verdict: Option<Verdict>,
}

pub fn attack(flags: AttackArgs) -> CliResult<String> {
    let (cfg, system): (AttackArgs, SystemArgs) = config_and_system(flags.common.config.as_deref(), flags.system.clone())?;
    let epsilon = match flags.epsilon.or(cfg.epsilon) {
        Some(e) if e >= 0.0 && e.is_finite() => e,
        Some(_) => return invalid("epsilon must be non-negative"),
        None => return invalid("--epsilon is required"),
    };
    let cap = flags.cap.or(cfg.cap).unwrap_or(DEFAULT_CAP_FACTOR * epsilon);
    if !(cap >= 0.0 && cap.is_finite()) {
        return invalid("cap must be non-negative");
    }
    let alpha = flags.alpha.or(cfg.alpha);
    if alpha.is_some_and(|a| !(a >= 0.0)) {
        return invalid("alpha must be non-negative");
    }
    let (model, n) = horizon_model(&system)?;
    let support = match (flags.support.or(cfg.support), flags.attack_fraction.or(cfg.attack_fraction)) {
        (Some(s), None) => s,
        (None, Some(frac)) => {
            if !(0.0..1.0).contains(&frac) {
                return invalid("attack_fraction must lie in [0,1)");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(flags.seed.or(cfg.seed).unwrap_or(0));
            random_support(model.rows(), frac, &mut rng)?
        }
        (Some(_), Some(_)) => return invalid("give either --support or --attack-fraction, not both"),
        (None, None) => return invalid("--support or --attack-fraction is required"),
    };
    let plan = synthesize_fdia_capped(&model, &support, epsilon, cap)?;
    let verdict = match flags.x_star.or(cfg.x_star) {
        Some(x) => {
            let x = check_state(&x, n)?;
            let alpha = match alpha.or(plan.alpha_guarantee) {
                Some(a) => a,
                None => fdia_feasibility(&model, &plan.support, epsilon)?.alpha_bound.unwrap_or(0.0),
            };
            Some(is_successful(&plan, &model, &x, epsilon, alpha)?)
        }
        None => None,
    };
    to_json(&AttackOutput { plan, verdict })
}

pub fn estimate(flags: EstimateArgs) -> CliResult<String> {
    let (cfg, system): (EstimateArgs, SystemArgs) = config_and_system(flags.common.config.as_deref(), flags.system.clone())?;
    let omega = flags.omega.or(cfg.omega).unwrap_or(DEFAULT_OMEGA);
    if !(0.0..=1.0).contains(&omega) {
        return invalid("omega must lie in [0,1]");
    }
    let epsilon = flags.epsilon.or(cfg.epsilon);
    if epsilon.is_some_and(|e| !(e >= 0.0)) {
        return invalid("epsilon must be non-negative");
    }
    let Some(y_path) = flags.y.or(cfg.y) else {
        return invalid("--y is required");
    };
    let (model, n) = horizon_model(&system)?;
    let y = Vector::from_vec(read_vector(&y_path, "y")?);
    let x_star = flags.x_star.or(cfg.x_star).map(|x| check_state(&x, n)).transpose()?;
    let mut est = match flags.safe.or(cfg.safe) {
        Some(safe) => weighted_observer(&model, &y, &safe, omega)?,
        None => decode(&model, &y)?,
    };
    if let Some(e) = epsilon {
        est = est.with_detector(e);
    }
    if let Some(x) = &x_star {
        est = est.with_truth(x);
    }
    to_json(&est)
}

#[derive(Serialize)]
struct PruneOutput {
    #[serde(rename = "I")]
    offline_set: Vec<usize>,
    pruned_set: Vec<usize>,
    strategy: &'static str,
    eta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_eta: Option<usize>,
    q_hat: Vec<u8>,
    /// Precision of the pruned set (needs the true indicator).
    ppv: Option<f64>,
    prior_ppv: Option<f64>,
}

fn check_binary(v: &[u8], name: &str) -> CliResult<()> {
    if v.iter().any(|&b| b > 1) {
        return invalid(format!("{name} entries must be 0 or 1"));
    }
    Ok(())
}

pub fn prune(flags: PruneArgs) -> CliResult<String> {
    let cfg: PruneArgs = from_map(read_config(flags.common.config.as_deref())?)?;
    let eta = flags.eta.or(cfg.eta).unwrap_or(0.9);
    if !(eta > 0.0 && eta < 1.0) {
        return invalid("eta must lie in (0,1)");
    }
    let Some(p) = flags.p.or(cfg.p) else {
        return invalid("--p is required");
    };
    if let Some(bad) = p.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
        return invalid(format!("confidences must lie in (0,1], got {bad}"));
    }
    let q = flags.q.or(cfg.q);
    let q_hat = flags.q_hat.or(cfg.q_hat);
    let rule = flags.strategy.or(cfg.strategy).unwrap_or(PruneRule::Product);
    for (v, name) in [(&q, "q"), (&q_hat, "q_hat")] {
        if let Some(v) = v {
            check_binary(v, name)?;
            if v.len() != p.len() {
                return invalid(format!("{name} has length {}, p has length {}", v.len(), p.len()));
            }
        }
    }
    let truth = q.map(|q| SupportIndicator { q });
    let prior = match (q_hat, &truth) {
        (Some(qh), _) => SupportPrior::new(qh, p)?,
        (None, Some(t)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(flags.seed.or(cfg.seed).unwrap_or(0));
            sample_prior(t, &p, &mut rng)?
        }
        (None, None) => return invalid("--q-hat or --q is required"),
    };
    let pruned = match rule {
        PruneRule::Product => prune_product(&prior, eta)?,
        PruneRule::Quantile => prune_quantile(&prior, eta)?,
    };
    let prior_ppv = match &truth {
        Some(t) if prior.q_hat.contains(&1) => Some(ppv(t, &prior.q_hat)?),
        _ => None,
    };
    to_json(&PruneOutput {
        ppv: truth.as_ref().map(|t| set_ppv(t, &pruned.safe_set)),
        prior_ppv,
        offline_set: pruned.offline_set,
        pruned_set: pruned.safe_set,
        strategy: match rule {
            PruneRule::Product => "product",
            PruneRule::Quantile => "quantile",
        },
        eta,
        l_eta: pruned.l_eta,
        q_hat: prior.q_hat,
    })
}

pub fn rip(flags: RipArgs) -> CliResult<String> {
    let (cfg, system): (RipArgs, SystemArgs) = config_and_system(flags.common.config.as_deref(), flags.system.clone())?;
    let Some(s) = flags.s.or(cfg.s) else {
        return invalid("--S is required");
    };
    let budget = flags.budget.or(cfg.budget).unwrap_or(100_000);
    let (model, _) = horizon_model(&system)?;
    if s == 0 || s > model.rows() {
        return invalid(format!("S must lie in [1, {}]", model.rows()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(flags.seed.or(cfg.seed).unwrap_or(0));
    to_json(&rip_constant(&model, s, budget, &mut rng)?)
}

pub fn sweep(flags: SweepArgs) -> CliResult<String> {
    let mut map = read_config(flags.common.config.as_deref())?;
    let workers: Option<usize> = take_keys::<Map<String, Value>>(&mut map, &["workers"])?
        .remove("workers")
        .map(|v| serde_json::from_value(v).map_err(|e| crate::CliError::Validation(format!("invalid workers: {e}"))))
        .transpose()?;
    let mut cfg: SweepConfig = from_map(map)?;
    macro_rules! set {
        ($($field:ident <- $flag:ident),*) => { $(if let Some(v) = flags.$flag.clone() { cfg.$field = v; })* };
    }
    set!(m <- m, n <- n, horizon <- horizon, attack_grid <- grid, trials <- trials, true_rate <- true_rate,
         jitter <- jitter, eta <- eta, omega <- omega, master_seed <- seed, spectral_radius <- spectral_radius);
    if let Some(f) = flags.epsilon_factor {
        cfg.epsilon_policy = EpsilonPolicy::Relative { factor: f };
    }
    if let Some(names) = &flags.strategies {
        cfg.strategies = names
            .iter()
            .map(|s| s.parse::<Strategy>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| crate::CliError::Validation(e.to_string()))?;
    }
    let workers = flags.workers.or(workers);
    if workers == Some(0) {
        return invalid("workers must be at least 1");
    }
    cfg.validate()?;
    let result = sweep_with_workers(&cfg, workers)?;
    match flags.format {
        OutputFormat::Csv => Ok(result.to_csv()?),
        OutputFormat::Json => {
            let mut s = result.to_json()?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn scenario(flags: ScenarioArgs) -> CliResult<String> {
    let mut map = read_config(flags.common.config.as_deref())?;
    let system_path: Option<std::path::PathBuf> = take_keys::<Map<String, Value>>(&mut map, &["system"])?
        .remove("system")
        .map(|v| serde_json::from_value(v).map_err(|e| crate::CliError::Validation(format!("invalid system path: {e}"))))
        .transpose()?;
    let mut cfg: ScenarioConfig = from_map(map)?;
    macro_rules! set {
        ($($field:ident <- $flag:ident),*) => { $(if let Some(v) = flags.$flag.clone() { cfg.$field = v; })* };
    }
    set!(horizon <- horizon, steps <- steps, attack_fraction <- attack_fraction, omega <- omega, eta <- eta,
         true_rate <- true_rate, jitter <- jitter, seed <- seed);
    if let Some(a) = &flags.attacked {
        cfg.attacked_sensors = Some(a.clone());
    }
    let (amp0, per0) = match cfg.signal {
        AttackSignal::Sinusoid { amplitude, period } | AttackSignal::StateOffset { amplitude, period } => (amplitude, period),
        AttackSignal::None => (2.0, 30.0),
    };
    let amplitude = flags.amplitude.unwrap_or(amp0);
    let period = flags.period.unwrap_or(per0);
    let kind = flags.signal.unwrap_or(match cfg.signal {
        AttackSignal::Sinusoid { .. } => SignalKind::Sinusoid,
        AttackSignal::StateOffset { .. } => SignalKind::StateOffset,
        AttackSignal::None => SignalKind::None,
    });
    cfg.signal = match kind {
        SignalKind::Sinusoid => AttackSignal::Sinusoid { amplitude, period },
        SignalKind::StateOffset => AttackSignal::StateOffset { amplitude, period },
        SignalKind::None => AttackSignal::None,
    };
    let loaded = match flags.system.or(system_path) {
        Some(p) => load_system_json(&p)?,
        None => surrogate_system(),
    };
    cfg.validate(&loaded.system)?;
    let x0 = loaded.x0.unwrap_or_else(|| Vector::from_element(loaded.system.n(), 1.0));
    to_json(&run_scenario(&loaded.system, &x0, &cfg)?)
}
