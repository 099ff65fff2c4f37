//! Dense bounded-variable primal simplex.
//!
//! Solves `min c^T x  s.t.  A x = b,  l <= x <= u` where every lower bound is
//! finite and upper bounds may be `+inf`. The basis inverse is recomputed from
//! scratch every iteration; the problems handled here have a handful of rows
//! (the state dimension), so this is cheap and keeps the iterates accurate.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

#[derive(Debug, Clone)]
pub struct BoxLp {
    pub cost: Vector,
    pub constraints: Matrix,
    pub rhs: Vector,
    pub lower: Vector,
    pub upper: Vector,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Reduced-cost threshold, relative to `1 + max|c|`.
    pub optimality_tol: f64,
    /// Phase-I infeasibility threshold, relative to `1 + max|b|`.
    pub feasibility_tol: f64,
    pub pivot_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            optimality_tol: 1e-11,
            feasibility_tol: 1e-9,
            pivot_tol: 1e-11,
            degenerate_limit: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vector,
    /// Simplex multipliers `pi` with `B^T pi = c_B`.
    pub duals: Vector,
    /// Basic column per constraint row; indices `>= x.len()` are artificials
    /// left on redundant rows.
    pub basis: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Basic,
    AtLower,
    AtUpper,
}

struct Tableau<'a> {
    a: Matrix,
    rhs: &'a Vector,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    slot: Vec<Slot>,
    basis: Vec<usize>,
    iterations: usize,
    opts: SimplexOptions,
}

impl BoxLp {
    fn validate(&self) -> Result<()> {
        let (rows, cols) = self.constraints.shape();
        if self.cost.len() != cols || self.lower.len() != cols || self.upper.len() != cols {
            return Err(Error::DimensionMismatch(format!(
                "LP with {cols} columns has cost/lower/upper of lengths {}/{}/{}",
                self.cost.len(),
                self.lower.len(),
                self.upper.len()
            )));
        }
        if self.rhs.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "LP with {rows} rows has rhs of length {}",
                self.rhs.len()
            )));
        }
        for j in 0..cols {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() || u.is_nan() || u < l {
                return Err(Error::InvalidParameter(format!(
                    "invalid bounds [{l}, {u}] on LP column {j}"
                )));
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.solve_with(SimplexOptions::default())
    }

    pub fn solve_with(&self, opts: SimplexOptions) -> Result<LpSolution> {
        self.validate()?;
        let (rows, cols) = self.constraints.shape();

        // Nonbasic start: the bound the objective prefers.
        let mut lower: Vec<f64> = self.lower.iter().copied().collect();
        let mut upper: Vec<f64> = self.upper.iter().copied().collect();
        let mut slot = Vec::with_capacity(cols + rows);
        let mut value = Vec::with_capacity(cols + rows);
        for j in 0..cols {
            if self.cost[j] < 0.0 && upper[j].is_finite() {
                slot.push(Slot::AtUpper);
                value.push(upper[j]);
            } else {
                slot.push(Slot::AtLower);
                value.push(lower[j]);
            }
        }
        let x_n = Vector::from_column_slice(&value);
        let resid = &self.rhs - &self.constraints * x_n;

        let mut a = Matrix::zeros(rows, cols + rows);
        a.view_mut((0, 0), (rows, cols)).copy_from(&self.constraints);
        for i in 0..rows {
            a[(i, cols + i)] = if resid[i] < 0.0 { -1.0 } else { 1.0 };
            lower.push(0.0);
            upper.push(f64::INFINITY);
            slot.push(Slot::Basic);
            value.push(resid[i].abs());
        }

        let mut tab = Tableau {
            a,
            rhs: &self.rhs,
            lower,
            upper,
            value,
            slot,
            basis: (cols..cols + rows).collect(),
            iterations: 0,
            opts,
        };

        let mut phase1 = Vector::zeros(cols + rows);
        phase1.rows_mut(cols, rows).fill(1.0);
        tab.run(&phase1)?;
        let infeasibility: f64 = (cols..cols + rows).map(|j| tab.value[j].abs()).sum();
        let b_scale = 1.0 + self.rhs.amax();
        if infeasibility > opts.feasibility_tol * b_scale {
            return Err(Error::SolverFailure(format!(
                "LP infeasible (phase-I residual {infeasibility:e})"
            )));
        }
        tab.expel_artificials(cols)?;
        for j in cols..cols + rows {
            tab.upper[j] = 0.0;
            if tab.slot[j] != Slot::Basic {
                tab.slot[j] = Slot::AtLower;
                tab.value[j] = 0.0;
            }
        }

        let mut phase2 = Vector::zeros(cols + rows);
        phase2.rows_mut(0, cols).copy_from(&self.cost);
        let duals = tab.run(&phase2)?;

        let x = Vector::from_iterator(cols, tab.value[..cols].iter().copied());
        let objective = self.cost.dot(&x);
        Ok(LpSolution {
            x,
            duals,
            basis: tab.basis.clone(),
            objective,
            iterations: tab.iterations,
        })
    }
}

impl Tableau<'_> {
    fn basis_inverse(&self) -> Result<Matrix> {
        let rows = self.basis.len();
        let b = Matrix::from_fn(rows, rows, |i, k| self.a[(i, self.basis[k])]);
        b.try_inverse()
            .ok_or_else(|| Error::SolverFailure("singular simplex basis".into()))
    }

    /// Recomputes basic values from the nonbasic ones.
    fn refresh_basic(&mut self, binv: &Matrix) {
        let mut rhs = self.rhs.clone();
        for j in 0..self.slot.len() {
            if self.slot[j] != Slot::Basic && self.value[j] != 0.0 {
                rhs.axpy(-self.value[j], &self.a.column(j), 1.0);
            }
        }
        let xb = binv * rhs;
        for (k, &j) in self.basis.iter().enumerate() {
            self.value[j] = xb[k];
        }
    }

    /// Iterates to optimality for `cost`; returns the final multipliers.
    fn run(&mut self, cost: &Vector) -> Result<Vector> {
        let rows = self.basis.len();
        let cols = self.slot.len();
        let opt_tol = self.opts.optimality_tol * (1.0 + cost.amax());
        let mut degenerate_streak = 0usize;
        loop {
            let binv = self.basis_inverse()?;
            self.refresh_basic(&binv);
            let cb = Vector::from_iterator(rows, self.basis.iter().map(|&j| cost[j]));
            let pi = binv.transpose() * cb;

            let bland = degenerate_streak >= self.opts.degenerate_limit;
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..cols {
                if self.slot[j] == Slot::Basic || self.upper[j] <= self.lower[j] {
                    continue;
                }
                let d = cost[j] - self.a.column(j).dot(&pi);
                let (dir, score) = match self.slot[j] {
                    Slot::AtLower if d < -opt_tol => (1.0, -d),
                    Slot::AtUpper if d > opt_tol => (-1.0, d),
                    _ => continue,
                };
                let better = match entering {
                    None => true,
                    Some((_, _, best)) => !bland && score > best,
                };
                if better {
                    entering = Some((j, dir, score));
                }
            }
            let Some((j, dir, _)) = entering else {
                return Ok(pi);
            };

            self.iterations += 1;
            if self.iterations > self.opts.max_iterations {
                return Err(Error::SolverFailure(format!(
                    "simplex iteration limit {} reached",
                    self.opts.max_iterations
                )));
            }

            let alpha = &binv * self.a.column(j);
            let mut step = self.upper[j] - self.lower[j];
            let mut leaving: Option<usize> = None;
            for k in 0..rows {
                let g = -dir * alpha[k];
                let var = self.basis[k];
                let t = if g < -self.opts.pivot_tol {
                    (self.value[var] - self.lower[var]) / -g
                } else if g > self.opts.pivot_tol && self.upper[var].is_finite() {
                    (self.upper[var] - self.value[var]) / g
                } else {
                    continue;
                };
                let t = t.max(0.0);
                let take = if t < step - 1e-12 {
                    true
                } else if t <= step + 1e-12 {
                    match leaving {
                        None => true,
                        Some(prev) if bland => var < self.basis[prev],
                        Some(prev) => g.abs() > alpha[prev].abs(),
                    }
                } else {
                    false
                };
                if take {
                    step = t;
                    leaving = Some(k);
                }
            }
            if !step.is_finite() {
                return Err(Error::SolverFailure("LP is unbounded".into()));
            }
            degenerate_streak = if step <= 1e-12 { degenerate_streak + 1 } else { 0 };

            match leaving {
                None => {
                    // bound flip
                    if dir > 0.0 {
                        self.slot[j] = Slot::AtUpper;
                        self.value[j] = self.upper[j];
                    } else {
                        self.slot[j] = Slot::AtLower;
                        self.value[j] = self.lower[j];
                    }
                }
                Some(k) => {
                    let out = self.basis[k];
                    let g = -dir * alpha[k];
                    if g < 0.0 {
                        self.slot[out] = Slot::AtLower;
                        self.value[out] = self.lower[out];
                    } else {
                        self.slot[out] = Slot::AtUpper;
                        self.value[out] = self.upper[out];
                    }
                    self.value[j] += dir * step;
                    self.slot[j] = Slot::Basic;
                    self.basis[k] = j;
                }
            }
        }
    }

    /// Pivots zero-valued artificials out of the basis where a structural
    /// column can replace them. Artificials on redundant rows stay basic.
    fn expel_artificials(&mut self, structural: usize) -> Result<()> {
        let rows = self.basis.len();
        for k in 0..rows {
            if self.basis[k] < structural {
                continue;
            }
            let binv = self.basis_inverse()?;
            let row = binv.row(k);
            let mut best: Option<(usize, f64)> = None;
            for j in 0..structural {
                if self.slot[j] == Slot::Basic {
                    continue;
                }
                let piv = (row * self.a.column(j))[(0, 0)].abs();
                if piv > 1e-8 && best.is_none_or(|(_, b)| piv > b) {
                    best = Some((j, piv));
                }
            }
            if let Some((j, _)) = best {
                let out = self.basis[k];
                self.slot[out] = Slot::AtLower;
                self.value[out] = 0.0;
                self.slot[j] = Slot::Basic;
                self.basis[k] = j;
            }
        }
        let binv = self.basis_inverse()?;
        self.refresh_basic(&binv);
        Ok(())
    }
}
