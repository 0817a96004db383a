//! Small dense optimizers: Nelder-Mead for the design problems and
//! Levenberg-Marquardt for curve fitting.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop when the spread of objective values across the simplex falls below
    /// this (and the simplex is reasonably small).
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evaluations: 20_000, f_tol: 1e-14, x_tol: 1e-10 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

/// Adaptive Nelder-Mead (dimension-dependent coefficients). `step` sets the
/// initial simplex edge along each coordinate.
pub fn nelder_mead<F>(f: F, x0: &[f64], step: &[f64], opts: NelderMeadOptions) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
    let (rho, sigma) = (0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();
    let mut evaluations = n + 1;
    let mut converged = false;

    while evaluations < opts.max_evaluations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = (values[n] - values[0]).abs();
        let diameter = simplex[1..]
            .iter()
            .map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (spread <= opts.f_tol && diameter <= opts.x_tol.sqrt()) || diameter <= opts.x_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|x| x[j]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        evaluations += 1;
        if fr < values[0] {
            let xe = along(alpha * gamma);
            let fe = eval(&xe);
            evaluations += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(alpha * rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        evaluations += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> =
                simplex[i].iter().zip(&simplex[0]).map(|(x, b)| b + sigma * (x - b)).collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
        evaluations += n;
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum { x: simplex[best].clone(), value: values[best], evaluations, converged }
}

/// Nelder-Mead restarted from its own optimum until the value stops improving.
pub fn nelder_mead_restarts<F>(f: F, x0: &[f64], step: &[f64], opts: NelderMeadOptions, restarts: usize) -> Minimum
where
    F: Fn(&[f64]) -> f64,
{
    let mut best = nelder_mead(&f, x0, step, opts);
    for _ in 0..restarts {
        let scaled: Vec<f64> = step.iter().map(|s| s * 0.1).collect();
        let next = nelder_mead(&f, &best.x, &scaled, opts);
        let improved = next.value < best.value - 1e-15 * best.value.abs().max(1e-300);
        let evaluations = best.evaluations + next.evaluations;
        if next.value <= best.value {
            best = Minimum { evaluations, ..next };
        } else {
            best.evaluations = evaluations;
        }
        if !improved {
            break;
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub initial_lambda: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-12, initial_lambda: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: DVector<f64>,
    pub residuals: DVector<f64>,
    /// Jacobian of the residuals at the optimum.
    pub jacobian: DMatrix<f64>,
    pub iterations: usize,
}

impl LmFit {
    pub fn sum_of_squares(&self) -> f64 {
        self.residuals.norm_squared()
    }

    /// `σ²(JᵀJ)⁻¹` with σ² estimated from the residuals; `None` if singular.
    pub fn covariance(&self) -> Option<DMatrix<f64>> {
        let m = self.residuals.len();
        let n = self.params.len();
        let dof = m.saturating_sub(n).max(1) as f64;
        let s2 = self.sum_of_squares() / dof;
        let jtj = self.jacobian.transpose() * &self.jacobian;
        jtj.try_inverse().map(|inv| inv * s2)
    }

    /// Ratio of extreme singular values of the Jacobian.
    pub fn condition_number(&self) -> f64 {
        let sv = self.jacobian.clone().svd(false, false).singular_values;
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

/// Levenberg-Marquardt on `residual(p)` with a forward-difference Jacobian.
pub fn levenberg_marquardt<F>(residual: F, p0: &[f64], opts: LmOptions) -> Result<LmFit>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut p = DVector::from_column_slice(p0);
    let mut r = residual(&p);
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailure("residuals are not finite at the starting point".into()));
    }
    let mut cost = r.norm_squared();
    let mut lambda = opts.initial_lambda;
    let mut jac = jacobian(&residual, &p, &r);
    for it in 0..opts.max_iterations {
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = &p + &step;
            let rt = residual(&trial);
            let ct = rt.norm_squared();
            if ct.is_finite() && ct <= cost {
                let rel = (cost - ct) / cost.max(1e-300);
                let small_step = step.norm() <= opts.tolerance * (p.norm() + opts.tolerance);
                p = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-15);
                accepted = true;
                jac = jacobian(&residual, &p, &r);
                if rel < opts.tolerance || small_step {
                    return Ok(LmFit { params: p, residuals: r, jacobian: jac, iterations: it + 1 });
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No downhill step exists at any damping: we are at a minimum.
            return Ok(LmFit { params: p, residuals: r, jacobian: jac, iterations: it + 1 });
        }
    }
    Err(Error::ConvergenceFailure { iterations: opts.max_iterations, residual: cost })
}

fn jacobian<F>(residual: &F, p: &DVector<f64>, r0: &DVector<f64>) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut j = DMatrix::zeros(r0.len(), p.len());
    for k in 0..p.len() {
        let h = 1e-7 * p[k].abs().max(1e-3);
        let mut q = p.clone();
        q[k] += h;
        let rk = residual(&q);
        j.set_column(k, &((rk - r0) / h));
    }
    j
}
