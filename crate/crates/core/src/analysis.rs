//! Restricted-isometry constants of `U2^T` and the weighted-observer error bound.
//!
//! Sparsities are counted over the stacked window: `k` below is the number of
//! attacked rows `K = |T|` of `y_T` (the per-step count times `m` when the
//! attack is uniform over time).

use itertools::Itertools;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::best_k_sparse_error;
use crate::linalg::{self, Matrix, Vector};
use crate::lti::HorizonModel;

/// Smallest admissible denominator of the constant `C1`.
pub const DENOMINATOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RipEstimate {
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "delta_S")]
    pub delta_s: f64,
    #[serde(rename = "supports_checked")]
    pub n_supports_checked: usize,
    pub exact: bool,
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn support_deviation(f: &Matrix, cols: &[usize]) -> f64 {
    let sub = f.select_columns(cols);
    let eig = (sub.transpose() * &sub).symmetric_eigenvalues();
    eig.iter().map(|l| (l - 1.0).abs()).fold(0.0, f64::max)
}

/// RIP constant of the columns of `f` at sparsity `s`: the largest deviation
/// from 1 of the Gram eigenvalues over all `s`-column submatrices, or over
/// `budget` random ones when there are more than `budget` supports.
pub fn rip_constant_of<R: Rng + ?Sized>(f: &Matrix, s: usize, budget: usize, rng: &mut R) -> Result<RipEstimate> {
    let cols = f.ncols();
    if budget == 0 {
        return Err(Error::BudgetZero);
    }
    if s == 0 || s > cols {
        return Err(Error::InvalidParameter(format!("sparsity must lie in [1, {cols}], got {s}")));
    }
    let total = binomial(cols, s);
    if total <= budget as u128 {
        let delta = (0..cols)
            .combinations(s)
            .map(|c| support_deviation(f, &c))
            .fold(0.0, f64::max);
        return Ok(RipEstimate {
            s,
            delta_s: delta,
            n_supports_checked: total as usize,
            exact: true,
        });
    }
    let mut delta: f64 = 0.0;
    for _ in 0..budget {
        let mut c = rand::seq::index::sample(rng, cols, s).into_vec();
        c.sort_unstable();
        delta = delta.max(support_deviation(f, &c));
    }
    Ok(RipEstimate {
        s,
        delta_s: delta,
        n_supports_checked: budget,
        exact: false,
    })
}

/// RIP constant of the coding matrix `U2^T` of a horizon model.
pub fn rip_constant<R: Rng + ?Sized>(model: &HorizonModel, s: usize, budget: usize, rng: &mut R) -> Result<RipEstimate> {
    rip_constant_of(&model.u2().transpose(), s, budget, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub a: usize,
    /// Untrusted rows over attacked rows.
    pub rho: f64,
    pub omega: f64,
    /// Attacked rows `K` in the stacked window.
    pub k: usize,
    /// `delta_{aK}`.
    pub delta_a: f64,
    /// `delta_{(a+1)K}`.
    pub delta_a1: f64,
    pub sigma_min_h: f64,
    /// `sigma_K(e)`.
    pub sigma_k_e: f64,
    /// `||e||_1` restricted to the trusted rows.
    pub e_pruned_l1: f64,
}

impl BoundInputs {
    /// `C = a / (omega + (1 - omega) sqrt(rho - 1))^2`, infinite when the
    /// denominator vanishes.
    pub fn c(&self) -> f64 {
        let d = self.omega + (1.0 - self.omega) * (self.rho - 1.0).max(0.0).sqrt();
        self.a as f64 / (d * d)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.a >= 1
            && (0.0..=1.0).contains(&self.omega)
            && (0.0..1.0).contains(&self.delta_a)
            && (0.0..1.0).contains(&self.delta_a1)
            && self.k >= 1
            && self.sigma_min_h > 0.0
            && (self.a as f64) >= self.rho - 1.0 - 1e-12;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("inconsistent bound inputs {self:?}")))
        }
    }
}

/// `delta_{aK} + C delta_{(a+1)K} <= C - 1`, evaluated after dividing by `C`
/// so that `C = inf` is handled.
pub fn bound_condition(inputs: &BoundInputs) -> bool {
    let c = inputs.c();
    inputs.delta_a1 <= 1.0 - (1.0 + inputs.delta_a) / c
}

/// `C1 / (sigma_min(H) sqrt(K)) * (omega sigma_K(e) + (1 - omega) ||e_trusted||_1)`.
pub fn recovery_bound(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    if !bound_condition(inputs) {
        return Err(Error::ConditionViolated(format!(
            "delta_a + C delta_(a+1) > C - 1 with C = {}",
            inputs.c()
        )));
    }
    let c = inputs.c();
    let lo = (1.0 - inputs.delta_a1).sqrt();
    let hi = (1.0 + inputs.delta_a).sqrt();
    let denom = lo - hi / c;
    if denom <= DENOMINATOR_TOL {
        return Err(Error::ConditionViolated(format!("bound denominator {denom:e} is not positive")));
    }
    let c1 = 2.0 / (inputs.a as f64).sqrt() * (lo + hi) / denom;
    let tail = inputs.omega * inputs.sigma_k_e + (1.0 - inputs.omega) * inputs.e_pruned_l1;
    Ok(c1 / (inputs.sigma_min_h * (inputs.k as f64).sqrt()) * tail)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub inputs: BoundInputs,
    pub bound: f64,
}

/// Searches integers `a >= max(rho - 1, 1)` with `(a + 1) K <= Tm` for one whose
/// exact RIP constants satisfy the condition and returns the tightest bound
/// found. `None` when no admissible `a` exists or the constants cannot be
/// computed exactly within `budget` supports.
pub fn best_bound<R: Rng + ?Sized>(
    model: &HorizonModel,
    e: &Vector,
    trusted: &[usize],
    k: usize,
    omega: f64,
    budget: usize,
    rng: &mut R,
) -> Result<Option<BoundReport>> {
    let rows = model.rows();
    if e.len() != rows {
        return Err(Error::DimensionMismatch(format!("e has length {}, expected {rows}", e.len())));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("attack sparsity must be at least 1".into()));
    }
    let untrusted = rows - trusted.len();
    let rho = untrusted as f64 / k as f64;
    let a_min = ((rho - 1.0).ceil() as usize).max(1);
    let f = model.u2().transpose();
    let e_trusted = linalg::l1_norm(&linalg::select_entries(e, trusted));
    let sigma_k_e = best_k_sparse_error(e, k);
    let mut best: Option<BoundReport> = None;
    let mut a = a_min;
    while (a + 1) * k <= rows {
        let d_a = rip_constant_of(&f, a * k, budget, rng)?;
        let d_a1 = rip_constant_of(&f, (a + 1) * k, budget, rng)?;
        if !(d_a.exact && d_a1.exact) {
            break;
        }
        let inputs = BoundInputs {
            a,
            rho,
            omega,
            k,
            delta_a: d_a.delta_s,
            delta_a1: d_a1.delta_s,
            sigma_min_h: model.sigma_min(),
            sigma_k_e,
            e_pruned_l1: e_trusted,
        };
        if d_a.delta_s < 1.0 && d_a1.delta_s < 1.0 && bound_condition(&inputs) {
            if let Ok(bound) = recovery_bound(&inputs) {
                if best.is_none_or(|b| bound < b.bound) {
                    best = Some(BoundReport { inputs, bound });
                }
            }
        }
        a += 1;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_delta(a: usize, omega: f64, rho: f64) -> BoundInputs {
        BoundInputs {
            a,
            rho,
            omega,
            k: 1,
            delta_a: 0.0,
            delta_a1: 0.0,
            sigma_min_h: 1.0,
            sigma_k_e: 0.0,
            e_pruned_l1: 1.0,
        }
    }

    #[test]
    fn binomial_values() {
        assert_eq!(binomial(10, 2), 45);
        assert_eq!(binomial(12, 3), 220);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(binomial(1000, 500), u128::MAX);
    }

    #[test]
    fn isometry_has_zero_constant() {
        let q = Matrix::identity(5, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for s in 1..=5 {
            let r = rip_constant_of(&q, s, 1000, &mut rng).unwrap();
            assert!(r.delta_s < 1e-12);
            assert!(r.exact);
        }
    }

    #[test]
    fn single_column_constant_is_norm_deviation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = Matrix::from_fn(4, 7, |_, _| rng.random::<f64>() - 0.5);
        let direct = (0..7).map(|j| (f.column(j).norm_squared() - 1.0).abs()).fold(0.0, f64::max);
        let r = rip_constant_of(&f, 1, 100, &mut rng).unwrap();
        assert!((r.delta_s - direct).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_labelled_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = Matrix::from_fn(6, 10, |_, _| rng.random::<f64>() - 0.5);
        let exact = rip_constant_of(&f, 3, 1000, &mut rng).unwrap();
        let sampled = rip_constant_of(&f, 3, 10, &mut rng).unwrap();
        assert!(exact.exact && exact.n_supports_checked == 120);
        assert!(!sampled.exact && sampled.n_supports_checked == 10);
        assert!(sampled.delta_s <= exact.delta_s + 1e-15);
        assert_eq!(rip_constant_of(&f, 3, 0, &mut rng).unwrap_err(), Error::BudgetZero);
    }

    #[test]
    fn condition_examples() {
        let i = zero_delta(4, 0.0, 2.0);
        assert!((i.c() - 4.0).abs() < 1e-15);
        assert!(bound_condition(&i));
        let edge = zero_delta(1, 1.0, 2.0);
        assert!((edge.c() - 1.0).abs() < 1e-15);
        assert!(bound_condition(&edge));
        // C = 1.2 from a = 6, omega = 0, rho = 6
        let mut bad = zero_delta(6, 0.0, 6.0);
        assert!((bad.c() - 1.2).abs() < 1e-12);
        bad.delta_a = 0.5;
        assert!(!bound_condition(&bad));
        assert!(matches!(recovery_bound(&bad), Err(Error::ConditionViolated(_))));
    }

    #[test]
    fn bound_examples() {
        let i = zero_delta(4, 0.0, 2.0);
        assert!((recovery_bound(&i).unwrap() - 8.0 / 3.0).abs() < 1e-12);
        let mut clean = i;
        clean.e_pruned_l1 = 0.0;
        assert_eq!(recovery_bound(&clean).unwrap(), 0.0);
        // boundary C = 1 has a zero denominator
        assert!(matches!(recovery_bound(&zero_delta(1, 1.0, 2.0)), Err(Error::ConditionViolated(_))));
        // rho = 1 with omega = 0 gives C = inf
        let inf = zero_delta(1, 0.0, 1.0);
        assert!(inf.c().is_infinite());
        assert!(bound_condition(&inf));
        assert!((recovery_bound(&inf).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn constants_grow_with_sparsity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = Matrix::from_fn(10, 3, |_, _| rng.random::<f64>() - 0.5);
        let model = HorizonModel::from_observation_matrix(h, 1, 10).unwrap();
        let mut prev = 0.0;
        for s in 1..=4 {
            let r = rip_constant(&model, s, 1000, &mut rng).unwrap();
            assert!(r.exact);
            assert!(r.delta_s + 1e-12 >= prev);
            prev = r.delta_s;
        }
    }
}
