//! l1 and weighted-l1 decoders, the residual detector and sparse-approximation error.
//!
//! Every decoder here reduces to the box-constrained dual of the weighted l1
//! regression
//!
//! ```text
//! min_z  sum_j w_j |y_j - (M z)_j|        (primal)
//! max_l  y^T l  s.t.  M^T l = 0, |l_j| <= w_j   (dual)
//! ```
//!
//! which is solved exactly by the simplex in [`crate::lp`]. The primal point is
//! read off the optimal basis (`M_B z = y_B`) and the pair is accepted only
//! when the duality gap is below `1e-8 * (1 + |objective|)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector, DEFAULT_RANK_TOL};
use crate::lp::BoxLp;
use crate::lti::HorizonModel;

/// Relative duality-gap tolerance certifying an l1 solve.
pub const GAP_TOL: f64 = 1e-8;

/// Default weight on untrusted rows.
pub const DEFAULT_OMEGA: f64 = 0.01;

/// Row weights: `1` on trusted rows, `omega` on the others.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightVector {
    w: Vec<f64>,
    omega: f64,
}

impl WeightVector {
    /// All rows trusted (plain l1).
    pub fn uniform(len: usize) -> Self {
        Self {
            w: vec![1.0; len],
            omega: 1.0,
        }
    }

    pub fn from_trusted(len: usize, trusted: &[usize], omega: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&omega) {
            return Err(Error::InvalidParameter(format!(
                "omega must lie in [0,1], got {omega}"
            )));
        }
        let mut w = vec![omega; len];
        for &i in trusted {
            if i >= len {
                return Err(Error::IndexOutOfRange { index: i, len });
            }
            w[i] = 1.0;
        }
        Ok(Self { w, omega })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Output of a decoder run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    #[serde(serialize_with = "linalg::ser_vector")]
    pub x_hat: Vector,
    /// Optimal weighted l1 value `sum_j w_j |(y - H x_hat)_j|`.
    pub objective: f64,
    /// Unweighted residual `||y - H x_hat||_1`.
    pub residual_l1: f64,
    pub detector_flag: Option<bool>,
    pub error_l2: Option<f64>,
    pub duality_gap: f64,
    pub iterations: usize,
}

impl EstimateResult {
    /// Sets the detector flag for threshold `epsilon` (strict `>`).
    pub fn with_detector(mut self, epsilon: f64) -> Self {
        self.detector_flag = Some(self.residual_l1 > epsilon);
        self
    }

    pub fn with_truth(mut self, x_star: &Vector) -> Self {
        self.error_l2 = Some((&self.x_hat - x_star).norm());
        self
    }
}

/// Solution of a weighted l1 regression `min_z sum w_j |y_j - (M z)_j|`.
#[derive(Debug, Clone)]
pub struct L1Fit {
    pub z: Vector,
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
}

pub fn weighted_l1_fit(m: &Matrix, y: &Vector, w: &[f64]) -> Result<L1Fit> {
    let (rows, n) = m.shape();
    if y.len() != rows || w.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {rows} rows, y has {}, weights have {}",
            y.len(),
            w.len()
        )));
    }
    if let Some(bad) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::InvalidParameter(format!("invalid row weight {bad}")));
    }
    let active: Vec<usize> = (0..rows).filter(|&i| w[i] > 0.0).collect();
    let eff = linalg::select_rows(m, &active);
    let r = linalg::rank(&eff, DEFAULT_RANK_TOL);
    if r < n {
        return Err(Error::RankDeficient { rank: r, n });
    }

    let weights = Vector::from_column_slice(w);
    let lp = BoxLp {
        cost: -y,
        constraints: m.transpose(),
        rhs: Vector::zeros(n),
        lower: -&weights,
        upper: weights.clone(),
    };
    let sol = lp.solve()?;
    if sol.basis.iter().any(|&j| j >= rows) {
        return Err(Error::SolverFailure("artificial variable left in the optimal basis".into()));
    }
    let mb = linalg::select_rows(m, &sol.basis);
    let yb = linalg::select_entries(y, &sol.basis);
    let z = mb
        .lu()
        .solve(&yb)
        .ok_or_else(|| Error::SolverFailure("singular optimal basis".into()))?;

    let resid = y - m * &z;
    let objective: f64 = resid.iter().zip(w).map(|(r, wj)| wj * r.abs()).sum();
    let lambda = &sol.x;
    let dual_objective = y.dot(lambda);
    let dual_infeas = (m.transpose() * lambda).amax();
    let scale = 1.0 + objective.abs();
    let gap = objective - dual_objective;
    if dual_infeas > 1e-8 * (1.0 + m.amax() * weights.amax()) || gap.abs() > GAP_TOL * scale {
        return Err(Error::SolverFailure(format!(
            "optimality certificate failed: gap {gap:e}, dual infeasibility {dual_infeas:e}"
        )));
    }
    Ok(L1Fit {
        z,
        objective,
        dual_objective,
        iterations: sol.iterations,
    })
}

/// Weighted l1 observer in the `H`/state parameterisation.
pub fn solve_weighted_l1(model: &HorizonModel, y: &Vector, w: &WeightVector) -> Result<EstimateResult> {
    check_len(model, y)?;
    if w.len() != model.rows() {
        return Err(Error::DimensionMismatch(format!(
            "weight vector has length {}, expected {}",
            w.len(),
            model.rows()
        )));
    }
    let fit = weighted_l1_fit(model.h(), y, w.as_slice())?;
    let residual_l1 = linalg::l1_norm(&model.residual(y, &fit.z));
    Ok(EstimateResult {
        x_hat: fit.z,
        objective: fit.objective,
        residual_l1,
        detector_flag: None,
        error_l2: None,
        duality_gap: fit.objective - fit.dual_objective,
        iterations: fit.iterations,
    })
}

/// Plain l1 decoder: `x_hat = V Sigma^-1 argmin_z ||y - U1 z||_1`.
pub fn decode(model: &HorizonModel, y: &Vector) -> Result<EstimateResult> {
    check_len(model, y)?;
    let w = vec![1.0; model.rows()];
    let fit = weighted_l1_fit(model.u1(), y, &w)?;
    let x_hat = model.state_from_coords(&fit.z);
    let residual_l1 = linalg::l1_norm(&model.residual(y, &x_hat));
    Ok(EstimateResult {
        x_hat,
        objective: residual_l1,
        residual_l1,
        detector_flag: None,
        error_l2: None,
        duality_gap: fit.objective - fit.dual_objective,
        iterations: fit.iterations,
    })
}

/// Residual detector: raises the flag iff `||y - H x_hat||_1 > epsilon`.
pub fn detect(model: &HorizonModel, y: &Vector, x_hat: &Vector, epsilon: f64) -> bool {
    linalg::l1_norm(&model.residual(y, x_hat)) > epsilon
}

/// Weighted observer with weight 1 on `safe_set` and `omega` elsewhere.
pub fn weighted_observer(model: &HorizonModel, y: &Vector, safe_set: &[usize], omega: f64) -> Result<EstimateResult> {
    let w = WeightVector::from_trusted(model.rows(), safe_set, omega)?;
    solve_weighted_l1(model, y, &w)
}

/// `sigma_k(e)`: l1 norm of `e` after removing its `k` largest-magnitude entries.
/// Among equal magnitudes the lowest index is retained first.
pub fn best_k_sparse_error(e: &Vector, k: usize) -> f64 {
    let mut order: Vec<usize> = (0..e.len()).collect();
    order.sort_by(|&a, &b| e[b].abs().total_cmp(&e[a].abs()).then(a.cmp(&b)));
    order.iter().skip(k).map(|&i| e[i].abs()).sum()
}

fn check_len(model: &HorizonModel, y: &Vector) -> Result<()> {
    if y.len() != model.rows() {
        return Err(Error::DimensionMismatch(format!(
            "y_T has length {}, model has {} rows",
            y.len(),
            model.rows()
        )));
    }
    Ok(())
}
