//! Box-constrained nonlinear least squares.
//!
//! Levenberg–Marquardt on the free variables with Marquardt diagonal scaling.
//! Variables sitting on a bound with the gradient pushing outward are frozen
//! for the step; trial points that cross a bound are reflected back into the
//! box and the better of the reflected and projected points is kept.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Residual vector and Jacobian of a least-squares problem.
pub trait Problem {
    fn n_residuals(&self) -> usize;
    fn n_params(&self) -> usize;
    fn residuals(&self, params: &[f64], out: &mut [f64]);
    /// Row `i`, column `j` holds `∂r_i/∂p_j`.
    fn jacobian(&self, params: &[f64], out: &mut DMatrix<f64>);
}

#[derive(Clone, Debug)]
pub struct Options {
    pub max_iterations: usize,
    /// Threshold on the scaled projected gradient
    /// `max_j |g_j| / (‖J_j‖·‖r‖)` over non-frozen variables.
    pub gtol: f64,
    /// Relative step size below which the iteration is considered stalled.
    pub xtol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { max_iterations: 1000, gtol: 1e-10, xtol: 1e-15 }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub params: Vec<f64>,
    /// `Σ r_i²`.
    pub cost: f64,
    pub residuals: Vec<f64>,
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
    pub projected_gradient: f64,
}

fn cost_of(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Scaled projected gradient. Pinned variables and variables on a bound
/// whose gradient points out of the box do not count.
fn projected_gradient(
    x: &[f64],
    g: &DVector<f64>,
    jac: &DMatrix<f64>,
    rnorm: f64,
    lower: &[f64],
    upper: &[f64],
    pinned: &[bool],
) -> f64 {
    if rnorm == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0f64;
    for j in 0..x.len() {
        if pinned[j] || (x[j] <= lower[j] && g[j] > 0.0) || (x[j] >= upper[j] && g[j] < 0.0) {
            continue;
        }
        let cn = jac.column(j).norm();
        if cn == 0.0 {
            continue;
        }
        worst = worst.max(g[j].abs() / (cn * rnorm));
    }
    worst
}

fn reflect(v: f64, lo: f64, hi: f64) -> f64 {
    let mut v = v;
    for _ in 0..4 {
        if v < lo {
            v = 2.0 * lo - v;
        } else if v > hi {
            v = 2.0 * hi - v;
        } else {
            return v;
        }
    }
    v.clamp(lo, hi)
}

/// Minimize `Σ r_i(p)²` subject to `lower ≤ p ≤ upper`; `pinned` variables
/// stay at their starting values.
pub fn minimize<P: Problem + ?Sized>(
    problem: &P,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    pinned: &[bool],
    opts: &Options,
) -> Result<Solution> {
    let n = problem.n_params();
    let m = problem.n_residuals();
    if start.len() != n || lower.len() != n || upper.len() != n || pinned.len() != n {
        return Err(Error::Config("least-squares vectors have inconsistent lengths".into()));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::Config("lower bound above upper bound".into()));
    }
    let mut x: Vec<f64> = start.iter().zip(lower.iter().zip(upper)).map(|(&v, (&l, &u))| v.clamp(l, u)).collect();
    let mut r = vec![0.0; m];
    problem.residuals(&x, &mut r);
    let mut cost = cost_of(&r);
    if !cost.is_finite() {
        return Err(Error::NumericalIntegrity("non-finite residuals at the starting point".into()));
    }
    let mut jac = DMatrix::zeros(m, n);
    problem.jacobian(&x, &mut jac);

    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut trial = vec![0.0; m];
    let mut trial_alt = vec![0.0; m];
    let mut stalled = 0;

    for iteration in 0..opts.max_iterations {
        let rv = DVector::from_column_slice(&r);
        let g = jac.transpose() * &rv;
        let pg = projected_gradient(&x, &g, &jac, rv.norm(), lower, upper, pinned);
        if pg <= opts.gtol || stalled >= 3 {
            return Ok(Solution { params: x, cost, residuals: r, jacobian: jac, iterations: iteration, projected_gradient: pg });
        }

        let free: Vec<usize> = (0..n)
            .filter(|&j| {
                !(pinned[j] || (x[j] <= lower[j] && g[j] > 0.0) || (x[j] >= upper[j] && g[j] < 0.0))
            })
            .collect();
        let k = free.len();
        let jf = DMatrix::from_fn(m, k, |i, c| jac[(i, free[c])]);
        let jtj = jf.transpose() * &jf;
        let gf = DVector::from_fn(k, |c, _| g[free[c]]);
        let max_diag = (0..k).map(|c| jtj[(c, c)]).fold(0.0f64, f64::max);
        let floor = max_diag.max(1e-300) * 1e-14;

        let mut accepted = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for c in 0..k {
                a[(c, c)] += lambda * jtj[(c, c)].max(floor);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let delta = chol.solve(&(-&gf));

            let mut projected = x.clone();
            let mut reflected = x.clone();
            let mut crossed = false;
            for (c, &j) in free.iter().enumerate() {
                let v = x[j] + delta[c];
                projected[j] = v.clamp(lower[j], upper[j]);
                reflected[j] = reflect(v, lower[j], upper[j]);
                crossed |= v < lower[j] || v > upper[j];
            }
            problem.residuals(&projected, &mut trial);
            let mut new_cost = cost_of(&trial);
            let mut new_x = projected;
            if crossed {
                problem.residuals(&reflected, &mut trial_alt);
                let alt = cost_of(&trial_alt);
                if alt < new_cost {
                    new_cost = alt;
                    new_x = reflected;
                    std::mem::swap(&mut trial, &mut trial_alt);
                }
            }
            // Predicted reduction of the linear model along the step actually taken.
            let step = DVector::from_fn(n, |j, _| new_x[j] - x[j]);
            let lin = &rv + &jac * &step;
            let predicted = cost - lin.norm_squared();
            let actual = cost - new_cost;
            let rho = if predicted > 0.0 { actual / predicted } else { -1.0 };

            if new_cost.is_finite() && actual >= 0.0 && rho > 0.0 {
                let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                stalled = if step.norm() <= opts.xtol * (xnorm + opts.xtol) { stalled + 1 } else { 0 };
                x = new_x;
                std::mem::swap(&mut r, &mut trial);
                cost = new_cost;
                problem.jacobian(&x, &mut jac);
                lambda *= (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3));
                lambda = lambda.max(1e-15);
                nu = 2.0;
                accepted = true;
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if !lambda.is_finite() || lambda > 1e30 {
                break;
            }
        }
        if !accepted {
            // No descent possible at machine precision.
            stalled += 1;
            lambda = 1e-3;
            nu = 2.0;
        }
    }
    Err(Error::NonConvergence { iterations: opts.max_iterations, best_cost: cost, best_params: x })
}

/// `(JᵀJ)⁺ · s²` via SVD with a relative singular-value cutoff.
pub fn covariance(jac: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    let jtj = jac.transpose() * jac;
    let svd = jtj.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let cutoff = smax * f64::EPSILON * jtj.nrows().max(1) as f64;
    let mut pinv = svd.pseudo_inverse(cutoff).unwrap_or_else(|_| DMatrix::zeros(jtj.nrows(), jtj.ncols()));
    pinv *= scale;
    // Symmetrize away round-off.
    let t = pinv.transpose();
    (pinv + t) * 0.5
}
