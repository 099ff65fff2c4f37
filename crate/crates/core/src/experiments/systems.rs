use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::lti::{check_observability, LtiSystem};
use crate::observer::spectral_radius;

pub const DEFAULT_SPECTRAL_RADIUS: f64 = 0.95;
pub const MAX_RESAMPLES: usize = 100;

/// Gaussian `(A, C)` with `A` rescaled to the requested spectral radius,
/// redrawn until observable.
pub fn gen_random_system<R: Rng + ?Sized>(m: usize, n: usize, spectral_radius_target: f64, rng: &mut R) -> Result<LtiSystem> {
    if n == 0 || m <= n {
        return Err(Error::InvalidParameter(format!("need m > n >= 1, got m={m}, n={n}")));
    }
    if !(spectral_radius_target > 0.0 && spectral_radius_target.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "spectral radius target must be positive, got {spectral_radius_target}"
        )));
    }
    for _ in 0..=MAX_RESAMPLES {
        let mut a = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let c = Matrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let rho = spectral_radius(&a);
        if rho <= 1e-12 {
            continue;
        }
        a *= spectral_radius_target / rho;
        let sys = LtiSystem::new(a, c)?;
        if check_observability(&sys).observable() {
            return Ok(sys);
        }
    }
    Err(Error::GenerationFailed { attempts: MAX_RESAMPLES + 1 })
}
