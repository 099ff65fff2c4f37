//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use pruneobs::analysis::{best_bound, rip_constant};
use pruneobs::estimation::{decode, weighted_observer};
use pruneobs::experiments::{gen_random_system, run_scenario, surrogate_system, sweep, ScenarioConfig, SweepConfig};
use pruneobs::fdia::{fdia_feasibility, is_successful, random_support, synthesize_fdia};
use pruneobs::pruning::{
    indicator_from_support, jitter_confidences, poisson_binomial_pmf, ppv_guarantee_check, prune_offline,
    prune_product, sample_prior, set_ppv, Strategy,
};
use pruneobs::{build_horizon, LtiSystem};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn gaussian(rng: &mut StdRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn gaussian_vec(rng: &mut StdRng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

fn stable_a(rng: &mut StdRng, n: usize) -> DMatrix<f64> {
    let a = gaussian(rng, n, n);
    let radius = a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    a * (0.9 / radius.max(1e-12))
}

fn exact_recovery() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..200 {
        let sys = gen_random_system(20, 10, 0.95, &mut rng).expect("system");
        let model = build_horizon(&sys, 1).expect("horizon");
        let x = gaussian_vec(&mut rng, 10);
        let y = model.h() * &x;
        let est = decode(&model, &y).expect("decode");
        let rel = (&est.x_hat - &x).norm() / x.norm();
        worst = worst.max(rel);
        if rel > 1e-8 {
            failures += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        failures == 0 && elapsed < Duration::from_secs(30),
        format!("{failures}/200 above 1e-8, worst relative error {worst:.2e}, {:.1}s", elapsed.as_secs_f64()),
    )
}

fn base_sweep(grid: Vec<f64>, strategies: Vec<Strategy>) -> SweepConfig {
    SweepConfig {
        m: 20,
        n: 10,
        horizon: 1,
        attack_grid: grid,
        trials: 500,
        true_rate: 0.6,
        eta: 0.9,
        omega: 0.01,
        strategies,
        master_seed: 2024,
        ..SweepConfig::default()
    }
}

fn collapse() -> Outcome {
    let cfg = base_sweep(vec![0.55, 0.6, 0.7], vec![Strategy::None]);
    let res = sweep(&cfg).expect("sweep");
    let rates: Vec<f64> = cfg
        .attack_grid
        .iter()
        .map(|&p| res.row(p, Strategy::None).expect("row").success_rate)
        .collect();
    outcome(rates.iter().all(|&r| r <= 0.05), format!("none success at P_A 0.55/0.6/0.7: {rates:?}"))
}

fn ordering() -> Outcome {
    let start = Instant::now();
    let grid = vec![0.3, 0.4, 0.5, 0.6, 0.7];
    let cfg = base_sweep(grid.clone(), vec![Strategy::None, Strategy::Prior, Strategy::PrunedProduct]);
    let res = sweep(&cfg).expect("sweep");
    let mut pass = start.elapsed() < Duration::from_secs(600);
    let mut violations = Vec::new();
    for &p in &grid {
        let get = |s| res.row(p, s).expect("row");
        let (none, prior, pruned) = (get(Strategy::None), get(Strategy::Prior), get(Strategy::PrunedProduct));
        for (hi, lo, label) in [(pruned, prior, "pruned>=prior"), (prior, none, "prior>=none")] {
            let slack = 3.0 * (hi.stderr.powi(2) + lo.stderr.powi(2)).sqrt();
            if hi.success_rate + slack < lo.success_rate {
                pass = false;
                violations.push(format!(
                    "P_A={p}: {label} violated ({:.3} vs {:.3}, slack {:.3})",
                    hi.success_rate, lo.success_rate, slack
                ));
            }
        }
    }
    let detail = if violations.is_empty() {
        format!("all orderings hold, {:.1}s", start.elapsed().as_secs_f64())
    } else {
        violations.join("; ")
    };
    outcome(pass, detail)
}

fn ppv_guarantee() -> Outcome {
    let mut rng = StdRng::seed_from_u64(404);
    let rows = 20;
    let mut pass = true;
    let mut parts = Vec::new();
    for eta in [0.5, 0.8, 0.95] {
        let p = jitter_confidences(rows, 0.6, 0.1, &mut rng).expect("p");
        let generator = |r: &mut StdRng| {
            let support = random_support(rows, 0.3, r).expect("support");
            indicator_from_support(&support, rows).expect("indicator")
        };
        let est = ppv_guarantee_check(generator, &p, eta, Strategy::PrunedProduct, 10_000, &mut rng).expect("check");
        let ok = est.rate >= eta - 3.0 * est.stderr;
        pass &= ok;
        parts.push(format!("eta={eta}: rate {:.4} (empty sets {})", est.rate, est.empty_sets));
    }
    outcome(pass, parts.join(", "))
}

fn attack_guarantee() -> Outcome {
    let mut rng = StdRng::seed_from_u64(505);
    let mut found = 0;
    let mut failures = Vec::new();
    let mut attempts = 0;
    while found < 200 && attempts < 10_000 {
        attempts += 1;
        let n = rng.random_range(2..=3);
        let m = rng.random_range(n + 3..=n + 7);
        let k = m - 2;
        let mut c = gaussian(&mut rng, m, n);
        for r in k..m {
            c.row_mut(r).scale_mut(0.01);
        }
        let sys = LtiSystem::new(stable_a(&mut rng, n), c).expect("system");
        let model = build_horizon(&sys, 1).expect("horizon");
        let support: Vec<usize> = (0..k).collect();
        let eps = rng.random_range(0.01..1.0);
        let feas = fdia_feasibility(&model, &support, eps).expect("feasibility");
        let Some(alpha) = feas.alpha_bound.filter(|_| feas.condition_holds) else {
            continue;
        };
        found += 1;
        let x = gaussian_vec(&mut rng, n);
        let plan = synthesize_fdia(&model, &support, eps).expect("plan");
        let v = is_successful(&plan, &model, &x, eps, alpha).expect("verdict");
        let residual = (plan.apply(&model, &x) - model.h() * &v.x_hat).abs().sum();
        if !(v.stealth_ok && v.bias >= alpha && residual <= eps + 1e-6) {
            failures.push(format!("instance {found}: bias {:.3e} alpha {alpha:.3e} residual {residual:.3e} eps {eps:.3e}", v.bias));
        }
    }
    outcome(
        found == 200 && failures.is_empty(),
        format!("{found} feasible instances, {} failures {}", failures.len(), failures.iter().take(3).join("; ")),
    )
}

fn pmf_exactness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(606);
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let n = 1 + t % 12;
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..=1.0)).collect();
        let pmf = poisson_binomial_pmf(&p).expect("pmf");
        let mut oracle = vec![0.0; n + 1];
        for mask in 0u32..(1 << n) {
            let mut prob = 1.0;
            for (i, &pi) in p.iter().enumerate() {
                prob *= if mask >> i & 1 == 1 { pi } else { 1.0 - pi };
            }
            oracle[mask.count_ones() as usize] += prob;
        }
        for (a, b) in pmf.r.iter().zip(&oracle) {
            worst = worst.max((a - b).abs());
        }
    }
    outcome(worst <= 1e-12, format!("worst deviation {worst:.2e}"))
}

fn pruning_optimality() -> Outcome {
    let mut rng = StdRng::seed_from_u64(707);
    let mut mismatches = 0;
    for t in 0..100 {
        let n = 1 + t % 15;
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..=1.0)).collect();
        let eta = rng.random_range(0.05..0.99);
        let kept = prune_offline(&p, eta).expect("prune").len();
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let prod: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| p[i]).product();
            if prod >= eta {
                best = best.max(mask.count_ones() as usize);
            }
        }
        if kept != best {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches}/100 cardinality mismatches"))
}

fn rip_oracle() -> Outcome {
    let mut rng = StdRng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    let mut inexact = 0;
    for i in 0..20 {
        let (m, t) = [(4, 3), (6, 2), (3, 4), (5, 2)][i % 4];
        let n = 2;
        let sys = LtiSystem::new(stable_a(&mut rng, n), gaussian(&mut rng, m, n)).expect("system");
        let model = build_horizon(&sys, t).expect("horizon");
        let q = model.h().clone().qr().q();
        for s in 1..=3 {
            let est = rip_constant(&model, s, 1_000_000, &mut rng).expect("rip");
            if !est.exact {
                inexact += 1;
            }
            let oracle = (0..model.rows())
                .combinations(s)
                .map(|rows| {
                    let sub = q.select_rows(rows.iter());
                    let sv = sub.singular_values();
                    sv.iter().fold(0.0f64, |a, &b| a.max(b)).powi(2)
                })
                .fold(0.0, f64::max);
            worst = worst.max((est.delta_s - oracle).abs());
        }
    }
    outcome(worst <= 1e-9 && inexact == 0, format!("worst deviation {worst:.2e}"))
}

fn bound_soundness() -> Outcome {
    let mut rng = StdRng::seed_from_u64(909);
    let mut found = 0;
    let mut attempts = 0;
    let mut worst_margin = f64::INFINITY;
    let mut violations = 0;
    while found < 50 && attempts < 20_000 {
        attempts += 1;
        let (m, t) = [(6, 2), (4, 3), (5, 2)][attempts % 3];
        let n = 2;
        let sys = LtiSystem::new(stable_a(&mut rng, n), gaussian(&mut rng, m, n)).expect("system");
        let model = build_horizon(&sys, t).expect("horizon");
        let rows = model.rows();
        let k = rng.random_range(1..=2);
        let support = rand::seq::index::sample(&mut rng, rows, k).into_vec();
        let mut e = gaussian_vec(&mut rng, rows) * 1e-3;
        for &i in &support {
            e[i] += 10.0 * rng.sample::<f64, _>(StandardNormal);
        }
        let q = indicator_from_support(&support, rows).expect("indicator");
        let p: Vec<f64> = (0..rows).map(|_| rng.random_range(0.95..=1.0)).collect();
        let prior = sample_prior(&q, &p, &mut rng).expect("prior");
        let trusted = prune_product(&prior, 0.5).expect("prune").safe_set;
        if trusted.is_empty() || set_ppv(&q, &trusted) < 1.0 {
            continue;
        }
        let omega = 0.01;
        let Some(report) = best_bound(&model, &e, &trusted, k, omega, 1_000_000, &mut rng).expect("bound") else {
            continue;
        };
        found += 1;
        let x = gaussian_vec(&mut rng, n);
        let y = model.h() * &x + &e;
        let est = weighted_observer(&model, &y, &trusted, omega).expect("estimate");
        let err = (&est.x_hat - &x).norm();
        let margin = report.bound + 1e-6 - err;
        worst_margin = worst_margin.min(margin);
        if margin < 0.0 {
            violations += 1;
        }
    }
    outcome(
        found == 50 && violations == 0,
        format!("{found} qualifying instances in {attempts} draws, {violations} violations, min slack {worst_margin:.3e}"),
    )
}

fn scenario_ordering() -> Outcome {
    let loaded = surrogate_system();
    let x0 = loaded.x0.clone().expect("surrogate x0");
    let metrics = run_scenario(&loaded.system, &x0, &ScenarioConfig::default()).expect("scenario");
    let mut pass = true;
    let mut parts = Vec::new();
    for c in &metrics.coordinates {
        let (lo, wl1p) = (c.rms.lo.expect("LO"), c.rms.wl1p.expect("WL1P"));
        let (max_w, max_l1) = (c.max_abs.wl1p.expect("WL1P"), c.max_abs.l1o.expect("L1O"));
        pass &= lo >= 100.0 * wl1p && max_w <= max_l1;
        parts.push(format!("x{}: LO {lo:.3} WL1P {wl1p:.1e} max {max_w:.1e}<={max_l1:.1e}", c.coordinate));
    }
    outcome(pass, parts.join(", "))
}

fn run_cli(args: &[&str], out: &Path) -> Option<Vec<u8>> {
    let status = Command::new(env!("CARGO_BIN_EXE_pruneobs"))
        .args(args)
        .arg("--out")
        .arg(out)
        .status()
        .ok()?;
    if !status.success() {
        return None;
    }
    std::fs::read(out).ok()
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let sys = dir.path().join("sys.json");
    std::fs::write(&sys, pruneobs::experiments::SURROGATE_GRID5_JSON).expect("write system");
    let sys = sys.to_str().expect("utf-8 path");
    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("sweep", vec!["sweep", "--trials", "40", "--grid", "0.1,0.3,0.6", "--seed", "7"]),
        ("sweep-json", vec!["sweep", "--trials", "20", "--grid", "0.2", "--seed", "3", "--format", "json", "--workers", "2"]),
        ("attack", vec!["attack", "--system", sys, "--T", "2", "--attack-fraction", "0.3", "--seed", "11", "--epsilon", "0.5", "--x-star", "1,2,3,4,5"]),
        ("prune", vec!["prune", "--p", "0.99,0.9,0.97,0.6,0.95,0.8", "--q", "1,0,1,1,0,1", "--seed", "5", "--eta", "0.8", "--strategy", "quantile"]),
        ("rip", vec!["rip", "--system", sys, "--T", "1", "--S", "3", "--budget", "50", "--seed", "9"]),
        ("scenario", vec!["scenario", "--steps", "80", "--seed", "13"]),
    ];
    let mut bad = Vec::new();
    for (name, args) in &runs {
        let first = run_cli(args, &dir.path().join(format!("{name}.1")));
        let second = run_cli(args, &dir.path().join(format!("{name}.2")));
        match (first, second) {
            (Some(a), Some(b)) if a == b && !a.is_empty() => {}
            _ => bad.push(*name),
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { format!("{} subcommands byte-identical", runs.len()) } else { format!("differing or failing: {bad:?}") })
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("attack-free exact recovery", exact_recovery),
        ("collapse above one half", collapse),
        ("strategy ordering", ordering),
        ("PPV guarantee", ppv_guarantee),
        ("stealthy attack guarantee", attack_guarantee),
        ("Poisson-binomial exactness", pmf_exactness),
        ("pruning optimality", pruning_optimality),
        ("RIP oracle equivalence", rip_oracle),
        ("recovery bound soundness", bound_soundness),
        ("scenario ordering", scenario_ordering),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {:>2} {}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
