//! Luenberger baseline with the steady-state Kalman predictor gain.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::lti::{check_observability, LtiSystem};

pub const GAIN_TOL: f64 = 1e-10;
pub const MAX_RICCATI_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone)]
pub struct KalmanGain {
    /// Predictor gain `L = A P C^T (C P C^T + I)^-1`.
    pub gain: Matrix,
    /// Stabilising solution of the discrete Riccati equation.
    pub covariance: Matrix,
    pub iterations: usize,
}

/// Iterates `P <- A P A^T + I - A P C^T (C P C^T + I)^-1 C P A^T` from `P = I`
/// until the gain moves by at most [`GAIN_TOL`] (max-abs entry).
pub fn steady_state_gain(sys: &LtiSystem) -> Result<KalmanGain> {
    let a = sys.a();
    let c = sys.c();
    let n = sys.n();
    let m = sys.m();
    let q = Matrix::identity(n, n);
    let r = Matrix::identity(m, m);
    let mut p = Matrix::identity(n, n);
    let mut prev: Option<Matrix> = None;
    for it in 1..=MAX_RICCATI_ITERATIONS {
        let s = c * &p * c.transpose() + &r;
        let s_inv = s
            .try_inverse()
            .ok_or(Error::RiccatiDivergence { iterations: it })?;
        let apc = a * &p * c.transpose();
        let gain = &apc * &s_inv;
        let next = a * &p * a.transpose() + &q - &gain * apc.transpose();
        p = (&next + next.transpose()) * 0.5;
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::RiccatiDivergence { iterations: it });
        }
        if let Some(g) = &prev {
            if (&gain - g).amax() <= GAIN_TOL {
                return Ok(KalmanGain {
                    gain,
                    covariance: p,
                    iterations: it,
                });
            }
        }
        prev = Some(gain);
    }
    Err(Error::RiccatiDivergence {
        iterations: MAX_RICCATI_ITERATIONS,
    })
}

/// Spectral radius of a square matrix.
pub fn spectral_radius(m: &Matrix) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Runs `x_{i+1} = A x_i + L (y_i - C x_i)` from `x_hat_0` over the
/// measurements; element `i` of the output is the estimate of `x_i`.
pub fn luenberger_baseline(sys: &LtiSystem, measurements: &[Vector], x_hat_0: Option<&Vector>) -> Result<Vec<Vector>> {
    let report = check_observability(sys);
    if !report.observable() {
        return Err(Error::NotObservable {
            rank: report.rank,
            n: report.n,
        });
    }
    let gain = steady_state_gain(sys)?.gain;
    let mut x = match x_hat_0 {
        Some(x0) if x0.len() != sys.n() => {
            return Err(Error::DimensionMismatch(format!(
                "initial estimate has length {}, expected {}",
                x0.len(),
                sys.n()
            )))
        }
        Some(x0) => x0.clone(),
        None => Vector::zeros(sys.n()),
    };
    let mut out = Vec::with_capacity(measurements.len());
    for y in measurements {
        if y.len() != sys.m() {
            return Err(Error::DimensionMismatch(format!(
                "measurement has length {}, expected {}",
                y.len(),
                sys.m()
            )));
        }
        out.push(x.clone());
        x = sys.a() * &x + &gain * (y - sys.c() * &x);
    }
    Ok(out)
}
