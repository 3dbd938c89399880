//! A small BFGS minimizer with backtracking line search.
//!
//! The objective may return a non-finite value to signal that a point lies
//! outside its domain; the line search then shrinks the step.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iter: usize,
    /// Converged once ‖∇f‖_∞ falls below this.
    pub grad_tol: f64,
    /// Converged when a step changes neither f nor x appreciably.
    pub step_tol: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-7,
            step_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value after each accepted iteration, starting at x0.
    pub trace: Vec<f64>,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which writes the gradient into its second argument and
/// returns the objective value.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut trace = vec![fx];

    if n == 0 || !fx.is_finite() {
        return BfgsResult {
            x,
            f: fx,
            grad_norm: 0.0,
            iterations: 0,
            converged: n == 0,
            trace,
        };
    }

    // Inverse Hessian approximation, row-major.
    let mut hinv = identity(n, 1.0 / inf_norm(&g).max(1.0));
    let mut first_update = true;
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    let mut restarted = false;

    while iterations < opts.max_iter {
        if inf_norm(&g) < opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;

        for i in 0..n {
            dir[i] = -(0..n).map(|j| hinv[i * n + j] * g[j]).sum::<f64>();
        }
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            // Not a descent direction: fall back to steepest descent.
            hinv = identity(n, 1.0 / inf_norm(&g).max(1.0));
            for i in 0..n {
                dir[i] = -hinv[i * n + i] * g[i];
            }
            slope = dot(&dir, &g);
        }

        let mut step = 1.0;
        let mut accepted = false;
        let mut f_new = f64::INFINITY;
        for _ in 0..60 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            f_new = f(&x_new, &mut g_new);
            if f_new.is_finite() && f_new <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }

        if !accepted {
            if restarted {
                // No further decrease is attainable at working precision.
                converged = inf_norm(&g) < opts.grad_tol.sqrt();
                break;
            }
            restarted = true;
            hinv = identity(n, 1.0 / inf_norm(&g).max(1.0));
            first_update = true;
            continue;
        }
        restarted = false;

        let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
        let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
        let f_change = fx - f_new;
        x.copy_from_slice(&x_new);
        g.copy_from_slice(&g_new);
        fx = f_new;
        trace.push(fx);

        if inf_norm(&s) < opts.step_tol * (1.0 + inf_norm(&x)) && f_change <= opts.step_tol * (1.0 + fx.abs()) {
            converged = inf_norm(&g) < opts.grad_tol.sqrt();
            break;
        }

        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if first_update {
                let scale = sy / dot(&y, &y);
                hinv = identity(n, scale);
                first_update = false;
            }
            bfgs_update(&mut hinv, &s, &y, sy);
        }
    }

    if !converged && inf_norm(&g) < opts.grad_tol {
        converged = true;
    }

    BfgsResult {
        grad_norm: inf_norm(&g),
        x,
        f: fx,
        iterations,
        converged,
        trace,
    }
}

fn identity(n: usize, scale: f64) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = scale;
    }
    m
}

/// H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ with ρ = 1/(sᵀy).
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let r = minimize(f, &[-1.2, 1.0], &BfgsOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn trace_is_monotone() {
        let f = |x: &[f64], g: &mut [f64]| {
            g[0] = 4.0 * x[0].powi(3) + 1.0;
            g[1] = 2.0 * (x[1] - 3.0);
            x[0].powi(4) + x[0] + (x[1] - 3.0).powi(2)
        };
        let r = minimize(f, &[2.0, -5.0], &BfgsOptions::default());
        assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(r.converged);
    }

    #[test]
    fn domain_violations_shrink_the_step() {
        // f(x) = x − ln x on x > 0, minimum at 1.
        let f = |x: &[f64], g: &mut [f64]| {
            if x[0] <= 0.0 {
                return f64::INFINITY;
            }
            g[0] = 1.0 - 1.0 / x[0];
            x[0] - x[0].ln()
        };
        let r = minimize(f, &[20.0], &BfgsOptions::default());
        assert!((r.x[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn empty_problem() {
        let r = minimize(|_, _| 3.0, &[], &BfgsOptions::default());
        assert!(r.converged);
        assert_eq!(r.f, 3.0);
    }
}
