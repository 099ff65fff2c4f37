//! Linear time-invariant plant, T-horizon stacking and trajectory simulation.
//!
//! Row convention used throughout the crate: a window `[i-T+1, i]` is stacked
//! newest measurement first, so the top block of `H` is `C A^(T-1)` and the
//! bottom block is `C`. Every stacked vector (`y_T`, `e_T`) follows the same
//! order, and the estimated state is the one at the window start, `x_(i-T+1)`.

use nalgebra::SVD;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector, DEFAULT_RANK_TOL};

/// The `(A, C)` pair of a noiseless, input-free plant.
#[derive(Debug, Clone, PartialEq)]
pub struct LtiSystem {
    a: Matrix,
    c: Matrix,
}

impl LtiSystem {
    pub fn new(a: Matrix, c: Matrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 {
            return Err(Error::DimensionMismatch("state dimension is zero".into()));
        }
        if c.ncols() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "C has {} columns but A is {}x{}",
                c.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        if c.nrows() == 0 {
            return Err(Error::DimensionMismatch("C has no rows".into()));
        }
        if a.iter().chain(c.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("system matrices must be finite".into()));
        }
        Ok(Self { a, c })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn c(&self) -> &Matrix {
        &self.c
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Measurement dimension.
    pub fn m(&self) -> usize {
        self.c.nrows()
    }
}

/// Result of an observability rank test on `[C; CA; ...; CA^(n-1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObservabilityReport {
    pub rank: usize,
    pub n: usize,
    /// Smallest singular value above the rank threshold (0 when rank is 0).
    pub smallest_nonzero_sv: f64,
}

impl ObservabilityReport {
    pub fn observable(&self) -> bool {
        self.rank == self.n
    }
}

pub fn check_observability(sys: &LtiSystem) -> ObservabilityReport {
    check_observability_with_tol(sys, DEFAULT_RANK_TOL)
}

pub fn check_observability_with_tol(sys: &LtiSystem, rel_tol: f64) -> ObservabilityReport {
    let n = sys.n();
    let obs = stacked_observability(sys, n, false);
    let sv = linalg::singular_values(&obs);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let kept: Vec<f64> = if smax > 0.0 {
        sv.iter().copied().filter(|&s| s > rel_tol * smax).collect()
    } else {
        Vec::new()
    };
    ObservabilityReport {
        rank: kept.len(),
        n,
        smallest_nonzero_sv: kept.iter().copied().fold(f64::INFINITY, f64::min).min(smax),
    }
}

/// `[C; CA; ...; CA^(T-1)]`, or the reversed block order when `newest_first`.
fn stacked_observability(sys: &LtiSystem, horizon: usize, newest_first: bool) -> Matrix {
    let (m, n) = (sys.m(), sys.n());
    let mut out = Matrix::zeros(horizon * m, n);
    let mut block = sys.c.clone();
    for j in 0..horizon {
        let slot = if newest_first { horizon - 1 - j } else { j };
        out.view_mut((slot * m, 0), (m, n)).copy_from(&block);
        block = &block * &sys.a;
    }
    out
}

/// The stacked observation matrix `H` of a window together with its SVD.
///
/// `H = U1 * diag(sigma) * V^T`, and `U2` completes `U1` to an orthonormal basis
/// of `R^(Tm)`, so `U2^T H = 0`.
#[derive(Debug, Clone)]
pub struct HorizonModel {
    horizon: usize,
    m: usize,
    h: Matrix,
    u1: Matrix,
    u2: Matrix,
    sigma: Vector,
    v: Matrix,
}

impl HorizonModel {
    /// Builds a model directly from an observation matrix, without a plant.
    pub fn from_observation_matrix(h: Matrix, horizon: usize, m: usize) -> Result<Self> {
        let n = h.ncols();
        if n == 0 || h.nrows() != horizon * m {
            return Err(Error::DimensionMismatch(format!(
                "H is {}x{}, expected {} rows",
                h.nrows(),
                n,
                horizon * m
            )));
        }
        if h.nrows() < n {
            return Err(Error::RankDeficient { rank: h.nrows(), n });
        }
        let svd = SVD::new(h.clone(), true, true);
        let sigma = svd.singular_values.clone();
        let sigma_max = sigma[0];
        let sigma_min = sigma[n - 1];
        if !(sigma_min >= 1e-12 * sigma_max) || sigma_max == 0.0 {
            return Err(Error::DegenerateSvd {
                sigma_min,
                sigma_max,
            });
        }
        let u1 = svd.u.expect("left singular vectors requested");
        let v = svd.v_t.expect("right singular vectors requested").transpose();
        let u2 = linalg::orthogonal_complement(&u1);
        Ok(Self {
            horizon,
            m,
            h,
            u1,
            u2,
            sigma,
            v,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Sensors per step.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.h.ncols()
    }

    /// Number of stacked rows, `T * m`.
    pub fn rows(&self) -> usize {
        self.h.nrows()
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    pub fn u1(&self) -> &Matrix {
        &self.u1
    }

    pub fn u2(&self) -> &Matrix {
        &self.u2
    }

    /// Singular values of `H`, descending.
    pub fn sigma(&self) -> &Vector {
        &self.sigma
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn sigma_min(&self) -> f64 {
        self.sigma[self.sigma.len() - 1]
    }

    pub fn sigma_max(&self) -> f64 {
        self.sigma[0]
    }

    /// Maps decoder coordinates `z` (in the `U1` basis) to a state: `V Sigma^-1 z`.
    pub fn state_from_coords(&self, z: &Vector) -> Vector {
        let scaled = Vector::from_iterator(z.len(), z.iter().zip(self.sigma.iter()).map(|(a, s)| a / s));
        &self.v * scaled
    }

    /// Inverse of [`state_from_coords`](Self::state_from_coords): `Sigma V^T x`.
    pub fn coords_from_state(&self, x: &Vector) -> Vector {
        let t = self.v.transpose() * x;
        Vector::from_iterator(t.len(), t.iter().zip(self.sigma.iter()).map(|(a, s)| a * s))
    }

    pub fn residual(&self, y: &Vector, x: &Vector) -> Vector {
        y - &self.h * x
    }
}

/// Stacks `T` steps of the plant into a [`HorizonModel`].
pub fn build_horizon(sys: &LtiSystem, horizon: usize) -> Result<HorizonModel> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon T must be at least 1".into()));
    }
    let report = check_observability(sys);
    if !report.observable() {
        return Err(Error::NotObservable {
            rank: report.rank,
            n: report.n,
        });
    }
    let h = stacked_observability(sys, horizon, true);
    HorizonModel::from_observation_matrix(h, horizon, sys.m())
}

/// Simulated states with clean and attacked measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vector>,
    pub clean_measurements: Vec<Vector>,
    pub attacked_measurements: Vec<Vector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn attack(&self, i: usize) -> Vector {
        &self.attacked_measurements[i] - &self.clean_measurements[i]
    }
}

/// Runs `x_(i+1) = A x_i`, `y_i = C x_i + e_i` for `steps` samples starting at `x0`.
pub fn simulate(
    sys: &LtiSystem,
    x0: &Vector,
    steps: usize,
    attack_schedule: Option<&[Vector]>,
) -> Result<Trajectory> {
    if x0.len() != sys.n() {
        return Err(Error::DimensionMismatch(format!(
            "x0 has length {}, state dimension is {}",
            x0.len(),
            sys.n()
        )));
    }
    if let Some(schedule) = attack_schedule {
        if schedule.len() < steps {
            return Err(Error::DimensionMismatch(format!(
                "attack schedule covers {} steps, {} requested",
                schedule.len(),
                steps
            )));
        }
        if let Some(bad) = schedule.iter().take(steps).find(|e| e.len() != sys.m()) {
            return Err(Error::DimensionMismatch(format!(
                "attack vector has length {}, expected {}",
                bad.len(),
                sys.m()
            )));
        }
    }
    let mut states = Vec::with_capacity(steps);
    let mut clean = Vec::with_capacity(steps);
    let mut attacked = Vec::with_capacity(steps);
    let mut x = x0.clone();
    for i in 0..steps {
        let y = &sys.c * &x;
        let y_att = match attack_schedule {
            Some(s) => &y + &s[i],
            None => y.clone(),
        };
        let next = &sys.a * &x;
        states.push(x);
        clean.push(y);
        attacked.push(y_att);
        x = next;
    }
    Ok(Trajectory {
        states,
        clean_measurements: clean,
        attacked_measurements: attacked,
    })
}

/// A stacked window `(y_T, x_(i-T+1), e_T)` ending at `end_index`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub y: Vector,
    pub x_start: Vector,
    pub e: Vector,
}

pub fn stack_window(traj: &Trajectory, end_index: usize, horizon: usize) -> Result<Window> {
    if horizon == 0 || end_index >= traj.len() || end_index + 1 < horizon {
        return Err(Error::WindowOutOfRange {
            end: end_index,
            horizon,
            len: traj.len(),
        });
    }
    let m = traj.clean_measurements[end_index].len();
    let mut y = Vector::zeros(horizon * m);
    let mut e = Vector::zeros(horizon * m);
    for b in 0..horizon {
        let step = end_index - b;
        y.rows_mut(b * m, m).copy_from(&traj.attacked_measurements[step]);
        e.rows_mut(b * m, m).copy_from(&traj.attack(step));
    }
    Ok(Window {
        y,
        x_start: traj.states[end_index + 1 - horizon].clone(),
        e,
    })
}

/// Stacks an arbitrary sequence of measurements ending at `end_index` (newest first).
pub fn stack_measurements(measurements: &[Vector], end_index: usize, horizon: usize) -> Result<Vector> {
    if horizon == 0 || end_index >= measurements.len() || end_index + 1 < horizon {
        return Err(Error::WindowOutOfRange {
            end: end_index,
            horizon,
            len: measurements.len(),
        });
    }
    let m = measurements[end_index].len();
    let mut y = Vector::zeros(horizon * m);
    for b in 0..horizon {
        y.rows_mut(b * m, m).copy_from(&measurements[end_index - b]);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn single_step_horizon_is_c() {
        let sys = LtiSystem::new(Matrix::identity(2, 2), m(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0])).unwrap();
        let model = build_horizon(&sys, 1).unwrap();
        assert_eq!(model.h(), sys.c());
        // singular values of [[1,0],[0,1],[1,1]] are sqrt(3) and 1
        assert!((model.sigma_max() - 3f64.sqrt()).abs() < 1e-12);
        assert!((model.sigma_min() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_step_shift_register() {
        let sys = LtiSystem::new(m(2, 2, &[0.0, 1.0, 0.0, 0.0]), m(1, 2, &[1.0, 0.0])).unwrap();
        let model = build_horizon(&sys, 2).unwrap();
        assert_eq!(model.h(), &m(2, 2, &[0.0, 1.0, 1.0, 0.0]));
        let report = check_observability(&sys);
        assert_eq!(report.rank, 2);
        assert!(report.observable());
    }

    #[test]
    fn rank_deficient_sensors_are_not_observable() {
        let sys = LtiSystem::new(Matrix::identity(2, 2), m(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0])).unwrap();
        assert_eq!(build_horizon(&sys, 3).unwrap_err(), Error::NotObservable { rank: 1, n: 2 });
    }

    #[test]
    fn observability_ranks() {
        let direct = LtiSystem::new(Matrix::identity(3, 3), Matrix::identity(3, 3)).unwrap();
        assert_eq!(check_observability(&direct).rank, 3);
        let blind = LtiSystem::new(Matrix::identity(3, 3), Matrix::zeros(4, 3)).unwrap();
        let report = check_observability(&blind);
        assert_eq!(report.rank, 0);
        assert!(!report.observable());
    }

    #[test]
    fn zero_horizon_rejected() {
        let sys = LtiSystem::new(Matrix::identity(1, 1), Matrix::identity(1, 1)).unwrap();
        assert!(matches!(build_horizon(&sys, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn identity_dynamics_hold_state() {
        let sys = LtiSystem::new(Matrix::identity(2, 2), Matrix::identity(2, 2)).unwrap();
        let traj = simulate(&sys, &Vector::from_vec(vec![1.0, 2.0]), 3, None).unwrap();
        assert_eq!(traj.len(), 3);
        for x in &traj.states {
            assert_eq!(x, &Vector::from_vec(vec![1.0, 2.0]));
        }
    }

    #[test]
    fn geometric_growth_and_window() {
        let sys = LtiSystem::new(m(1, 1, &[2.0]), m(3, 1, &[1.0, 1.0, 1.0])).unwrap();
        let traj = simulate(&sys, &Vector::from_vec(vec![1.0]), 3, None).unwrap();
        let xs: Vec<f64> = traj.states.iter().map(|x| x[0]).collect();
        assert_eq!(xs, vec![1.0, 2.0, 4.0]);
        // window [0, 1] with x_0 = 1: y_T = [C*2*1; C*1]
        let w = stack_window(&traj, 1, 2).unwrap();
        assert_eq!(w.y.as_slice(), &[2.0, 2.0, 2.0, 1.0, 1.0, 1.0]);
        assert_eq!(w.x_start[0], 1.0);
        let model = build_horizon(&sys, 2).unwrap();
        assert!((&w.y - model.h() * &w.x_start).amax() < 1e-12);
    }

    #[test]
    fn additive_attack_and_single_step_window() {
        let sys = LtiSystem::new(Matrix::identity(2, 2), m(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0])).unwrap();
        let attack = vec![Vector::from_vec(vec![5.0, 0.0, 0.0]); 4];
        let traj = simulate(&sys, &Vector::from_vec(vec![0.5, -1.0]), 4, Some(&attack)).unwrap();
        for i in 0..4 {
            assert_eq!(traj.attack(i), attack[i]);
        }
        let w = stack_window(&traj, 3, 1).unwrap();
        assert_eq!(w.y, traj.attacked_measurements[3]);
        assert_eq!(w.x_start, traj.states[3]);
    }

    #[test]
    fn window_bounds_and_dimension_errors() {
        let sys = LtiSystem::new(Matrix::identity(1, 1), Matrix::identity(1, 1)).unwrap();
        let traj = simulate(&sys, &Vector::from_vec(vec![1.0]), 3, None).unwrap();
        assert!(matches!(stack_window(&traj, 1, 3), Err(Error::WindowOutOfRange { .. })));
        assert!(matches!(stack_window(&traj, 3, 1), Err(Error::WindowOutOfRange { .. })));
        assert!(matches!(
            simulate(&sys, &Vector::from_vec(vec![1.0, 2.0]), 2, None),
            Err(Error::DimensionMismatch(_))
        ));
        let bad = vec![Vector::zeros(2); 2];
        assert!(matches!(simulate(&sys, &Vector::from_vec(vec![1.0]), 2, Some(&bad)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn non_square_a_rejected() {
        assert!(LtiSystem::new(Matrix::zeros(2, 3), Matrix::zeros(2, 3)).is_err());
    }
}
