//! Monte Carlo sweeps over attack fractions and trajectory scenarios.

mod scenario;
mod sweep;
mod systems;

pub use scenario::{
    run_scenario, surrogate_system, AttackSignal, CoordinateMetrics, ObserverKind, ObserverMetrics, ScenarioConfig,
    ScenarioMetrics, SURROGATE_GRID5_JSON,
};
pub use sweep::{
    run_trial, sweep, sweep_with_workers, EpsilonPolicy, SweepConfig, SweepResult, SweepRow, TrialOutcome,
    TrialRecord,
};
pub use systems::{gen_random_system, DEFAULT_SPECTRAL_RADIUS, MAX_RESAMPLES};
