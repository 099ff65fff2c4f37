//! Stealthy false-data-injection attack synthesis and verification.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::{decode, detect};
use crate::linalg::{self, Matrix, Vector};
use crate::lti::HorizonModel;

/// Singular values at or below this make the attacker's program unbounded.
pub const UNBOUNDED_TOL: f64 = 1e-10;

/// Relative shrink of the stealth budget so that rounding never pushes the
/// residual of a boundary attack over the detector threshold.
pub const BUDGET_MARGIN: f64 = 1e-9;

/// Default cap on `||z_e||` in the unbounded case, as a multiple of `epsilon`.
pub const DEFAULT_CAP_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackPlan {
    pub support: Vec<usize>,
    pub epsilon: f64,
    #[serde(serialize_with = "linalg::ser_vector")]
    pub z_e: Vector,
    #[serde(rename = "e_T", serialize_with = "linalg::ser_vector")]
    pub e_t: Vector,
    pub alpha_guarantee: Option<f64>,
    /// Whether the sufficient success condition holds for this support.
    pub feasible: bool,
    pub unbounded: bool,
}

impl AttackPlan {
    /// Attacked window `y_T = H x* + e_T`.
    pub fn apply(&self, model: &HorizonModel, x_star: &Vector) -> Vector {
        model.h() * x_star + &self.e_t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Feasibility {
    pub condition_holds: bool,
    pub alpha_bound: Option<f64>,
    /// `||U1_{T^c}||_2`.
    pub safe_block_norm: f64,
    /// `1 / (2 sqrt(Tm - |T|))`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    #[serde(serialize_with = "linalg::ser_vector")]
    pub x_hat: Vector,
    pub bias: f64,
    pub residual_l1: f64,
    pub bias_ok: bool,
    pub stealth_ok: bool,
    pub success: bool,
}

fn validate_support(model: &HorizonModel, support: &[usize]) -> Result<Vec<usize>> {
    let rows = model.rows();
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut s = support.to_vec();
    s.sort_unstable();
    s.dedup();
    if let Some(&bad) = s.iter().find(|&&i| i >= rows) {
        return Err(Error::IndexOutOfRange { index: bad, len: rows });
    }
    if s.len() >= rows {
        return Err(Error::SupportTooLarge { size: s.len(), rows });
    }
    Ok(s)
}

/// Smallest singular value of `g` and a unit right singular vector for it.
/// Wide blocks have a non-trivial null space, found through `G^T G`.
fn smallest_right_singular(g: &Matrix) -> (f64, Vector) {
    let (r, n) = g.shape();
    if r < n {
        let eig = (g.transpose() * g).symmetric_eigen();
        let j = eig.eigenvalues.imin();
        let mut v = eig.eigenvectors.column(j).into_owned();
        v /= v.norm();
        let sigma = if r == 0 { 0.0 } else { (g * &v).norm() };
        return (sigma.min(eig.eigenvalues[j].max(0.0).sqrt()), v);
    }
    let svd = g.clone().svd(false, true);
    let j = svd.singular_values.imin();
    let v_t = svd.v_t.expect("right singular vectors requested");
    (svd.singular_values[j], v_t.row(j).transpose())
}

/// Optimal attack with the default unbounded cap `10^3 * epsilon`.
pub fn synthesize_fdia(model: &HorizonModel, support: &[usize], epsilon: f64) -> Result<AttackPlan> {
    synthesize_fdia_capped(model, support, epsilon, DEFAULT_CAP_FACTOR * epsilon)
}

/// Maximises `||z||_2` subject to `||U1_{T^c} z||_2 <= epsilon / sqrt(Tm - |T|)`
/// and injects `e_T = U1_T z` on the support. When the safe block has a null
/// direction the program is unbounded and `||z_e||` is set to `cap`.
pub fn synthesize_fdia_capped(model: &HorizonModel, support: &[usize], epsilon: f64, cap: f64) -> Result<AttackPlan> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be non-negative, got {epsilon}")));
    }
    if !(cap >= 0.0 && cap.is_finite()) {
        return Err(Error::InvalidParameter(format!("magnitude cap must be non-negative, got {cap}")));
    }
    let support = validate_support(model, support)?;
    let rows = model.rows();
    let safe = linalg::complement(&support, rows);
    let budget = (1.0 - BUDGET_MARGIN) * epsilon / ((rows - support.len()) as f64).sqrt();
    let g = linalg::select_rows(model.u1(), &safe);
    let (sigma_min, mut v) = smallest_right_singular(&g);
    linalg::canonical_sign(&mut v);
    let unbounded = sigma_min <= UNBOUNDED_TOL;
    let z_e = if unbounded { v * cap } else { v * (budget / sigma_min) };

    let mut e_t = Vector::zeros(rows);
    let u1z = model.u1() * &z_e;
    for &i in &support {
        e_t[i] = u1z[i];
    }
    let feas = fdia_feasibility(model, &support, epsilon)?;
    Ok(AttackPlan {
        support,
        epsilon,
        z_e,
        e_t,
        alpha_guarantee: feas.alpha_bound,
        feasible: feas.condition_holds,
        unbounded,
    })
}

/// Checks `||U1_{T^c}||_2 < 1 / (2 sqrt(Tm - |T|))` and, when it holds, returns
/// the guaranteed bias
/// `alpha = eps / (2 sqrt(Tm) s) * (1 / (s_c sqrt(Tm - |T|)) - 2)`
/// with `s = sigma_max(H)` and `s_c = ||U1_{T^c}||_2`.
pub fn fdia_feasibility(model: &HorizonModel, support: &[usize], epsilon: f64) -> Result<Feasibility> {
    let support = validate_support(model, support)?;
    let rows = model.rows();
    let safe = linalg::complement(&support, rows);
    let g = linalg::select_rows(model.u1(), &safe);
    let s_c = linalg::spectral_norm(&g);
    let root = ((rows - support.len()) as f64).sqrt();
    let threshold = 1.0 / (2.0 * root);
    let condition_holds = s_c < threshold;
    let alpha_bound = condition_holds.then(|| {
        let lead = epsilon / (2.0 * (rows as f64).sqrt() * model.sigma_max());
        if s_c == 0.0 {
            f64::INFINITY
        } else {
            lead * (1.0 / (s_c * root) - 2.0)
        }
    });
    Ok(Feasibility {
        condition_holds,
        alpha_bound,
        safe_block_norm: s_c,
        threshold,
    })
}

/// Runs the decoder-detector pair on `H x* + e_T`.
pub fn is_successful(plan: &AttackPlan, model: &HorizonModel, x_star: &Vector, epsilon: f64, alpha: f64) -> Result<Verdict> {
    if x_star.len() != model.n() {
        return Err(Error::DimensionMismatch(format!(
            "x* has length {}, expected {}",
            x_star.len(),
            model.n()
        )));
    }
    let y = plan.apply(model, x_star);
    let est = decode(model, &y)?;
    let bias = (x_star - &est.x_hat).norm();
    let stealth_ok = !detect(model, &y, &est.x_hat, epsilon);
    let bias_ok = bias >= alpha;
    Ok(Verdict {
        residual_l1: est.residual_l1,
        x_hat: est.x_hat,
        bias,
        bias_ok,
        stealth_ok,
        success: bias_ok && stealth_ok,
    })
}

/// Number of attacked rows for attack fraction `p_a` out of `rows`.
pub fn support_size(rows: usize, p_a: f64) -> usize {
    (p_a * rows as f64 + 1e-9).floor() as usize
}

/// Uniform support of size `floor(p_a * rows)`, sorted ascending.
pub fn random_support<R: Rng + ?Sized>(rows: usize, p_a: f64, rng: &mut R) -> Result<Vec<usize>> {
    if !(0.0..1.0).contains(&p_a) {
        return Err(Error::InvalidParameter(format!("attack fraction must lie in [0,1), got {p_a}")));
    }
    let size = support_size(rows, p_a);
    if size >= rows && rows > 0 {
        return Err(Error::SupportTooLarge { size, rows });
    }
    let mut s = rand::seq::index::sample(rng, rows, size).into_vec();
    s.sort_unstable();
    Ok(s)
}
