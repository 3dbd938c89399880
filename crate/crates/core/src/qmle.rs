//! GARCH(p,q) short-run component under the unit-variance identification
//! ω = 1 − Σα − Σβ, its Gaussian quasi-likelihood and the QMLE.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data_io::ReturnSeries;
use crate::error::{Result, SgarchError};
use crate::linalg;
use crate::longrun::LongRunFit;
use crate::optim::{self, BfgsOptions};

/// Lower bound for free coefficients inside the optimizer.
pub const EPS_THETA: f64 = 1e-6;
/// Minimum intercept ω, so Σα + Σβ ≤ 1 − EPS_OMEGA.
pub const EPS_OMEGA: f64 = 1e-6;

/// Model order: `p` GARCH lags (β) and `q` ARCH lags (α).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Order {
    pub p: usize,
    pub q: usize,
}

impl Order {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(SgarchError::InvalidOrder { p, q });
        }
        Ok(Self { p, q })
    }

    /// Number of coefficients p + q.
    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    /// Coefficient names in θ order.
    pub fn names(&self) -> Vec<String> {
        (1..=self.q)
            .map(|i| format!("alpha{i}"))
            .chain((1..=self.p).map(|j| format!("beta{j}")))
            .collect()
    }
}

/// θ = (α_1..α_q, β_1..β_p) with derived ω.
#[derive(Debug, Clone, PartialEq)]
pub struct GarchParams {
    order: Order,
    theta: Vec<f64>,
}

impl GarchParams {
    /// Requires nonnegative coefficients with Σθ ≤ 1 − EPS_OMEGA.
    pub fn new(order: Order, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != order.dim() {
            return Err(SgarchError::InvalidParams(format!(
                "expected {} coefficients, got {}",
                order.dim(),
                theta.len()
            )));
        }
        if let Some(v) = theta.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(SgarchError::InvalidParams(format!("coefficient {v} is negative or not finite")));
        }
        let sum: f64 = theta.iter().sum();
        // Small slack for values produced exactly at the optimizer bound.
        if sum > 1.0 - EPS_OMEGA * (1.0 - 1e-9) {
            return Err(SgarchError::InvalidParams(format!(
                "coefficients sum to {sum}; need at most {}",
                1.0 - EPS_OMEGA
            )));
        }
        Ok(Self { order, theta })
    }

    pub fn order(&self) -> Order {
        self.order
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn alpha(&self) -> &[f64] {
        &self.theta[..self.order.q]
    }

    pub fn beta(&self) -> &[f64] {
        &self.theta[self.order.q..]
    }

    /// Σα + Σβ.
    pub fn persistence(&self) -> f64 {
        self.theta.iter().sum()
    }

    pub fn omega(&self) -> f64 {
        1.0 - self.persistence()
    }
}

/// ĝ_t and ∂ĝ_t/∂θ (row-major, T × (p+q)).
#[derive(Debug, Clone, PartialEq)]
pub struct GarchFilter {
    pub g: Vec<f64>,
    pub dg: Vec<f64>,
    dim: usize,
}

impl GarchFilter {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dg_at(&self, t: usize) -> &[f64] {
        &self.dg[t * self.dim..(t + 1) * self.dim]
    }
}

/// Runs the recursion g_t = ω + Σα_i u²_{t−i} + Σβ_j g_{t−j} with pre-sample
/// u² = g = 1, together with its exact derivative recursion.
pub fn garch_filter(u_sq: &[f64], params: &GarchParams) -> Result<GarchFilter> {
    if let Some(t) = u_sq.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(SgarchError::NonFinite { row: t });
    }
    Ok(filter_unchecked(u_sq, params))
}

fn filter_unchecked(u_sq: &[f64], params: &GarchParams) -> GarchFilter {
    let Order { p, q } = params.order;
    let dim = p + q;
    let n = u_sq.len();
    let alpha = params.alpha();
    let beta = params.beta();
    let omega = params.omega();
    let mut g = vec![0.0; n];
    let mut dg = vec![0.0; n * dim];
    for t in 0..n {
        let mut gt = omega;
        for i in 1..=q {
            let u = if t >= i { u_sq[t - i] } else { 1.0 };
            gt += alpha[i - 1] * u;
            dg[t * dim + i - 1] = u - 1.0;
        }
        for j in 1..=p {
            let gp = if t >= j { g[t - j] } else { 1.0 };
            gt += beta[j - 1] * gp;
            dg[t * dim + q + j - 1] = gp - 1.0;
        }
        for j in 1..=p.min(t) {
            let b = beta[j - 1];
            let (head, tail) = dg.split_at_mut(t * dim);
            let prev = &head[(t - j) * dim..(t - j + 1) * dim];
            for (d, pv) in tail[..dim].iter_mut().zip(prev) {
                *d += b * pv;
            }
        }
        g[t] = gt;
    }
    GarchFilter { g, dg, dim }
}

/// L(θ) = Σ [u_t²/g_t + ln g_t] on devolatilized squares.
pub fn neg_loglik_squares(u_sq: &[f64], params: &GarchParams) -> Result<f64> {
    let f = garch_filter(u_sq, params)?;
    Ok(u_sq.iter().zip(&f.g).map(|(u, g)| u / g + g.ln()).sum())
}

/// L̂_T(θ) with û_t = y_t/√τ̂_t.
pub fn neg_loglik(series: &ReturnSeries, longrun: &LongRunFit, params: &GarchParams) -> Result<f64> {
    let u_sq = longrun.devolatilize_squares(series)?;
    neg_loglik_squares(&u_sq, params)
}

/// Value and analytic gradient Σ (1 − u²/g)·(∂g/∂θ)/g.
pub fn neg_loglik_grad(u_sq: &[f64], params: &GarchParams) -> Result<(f64, Vec<f64>)> {
    let f = garch_filter(u_sq, params)?;
    Ok(value_and_grad(u_sq, &f))
}

fn value_and_grad(u_sq: &[f64], f: &GarchFilter) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; f.dim];
    for (t, (u, g)) in u_sq.iter().zip(&f.g).enumerate() {
        value += u / g + g.ln();
        let w = (1.0 - u / g) / g;
        for (gr, d) in grad.iter_mut().zip(f.dg_at(t)) {
            *gr += w * d;
        }
    }
    (value, grad)
}

/// Filtered quantities at an estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilteredSeries {
    pub u_hat: Vec<f64>,
    pub g_hat: Vec<f64>,
    pub eta_hat: Vec<f64>,
    /// ψ̂_t = (∂ĝ_t/∂θ)/ĝ_t.
    pub psi_hat: Vec<Vec<f64>>,
}

impl FilteredSeries {
    pub fn len(&self) -> usize {
        self.g_hat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g_hat.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.psi_hat.first().map_or(0, Vec::len)
    }

    /// Builds the filtered series from y and τ̂.
    pub fn compute(series: &ReturnSeries, tau: &[f64], params: &GarchParams) -> Result<Self> {
        if tau.len() != series.len() {
            return Err(SgarchError::InvalidConfig("τ̂ and series lengths differ".into()));
        }
        let mut u_hat = Vec::with_capacity(tau.len());
        for (t, (y, tau)) in series.values().iter().zip(tau).enumerate() {
            if !(*tau > 0.0 && tau.is_finite()) {
                return Err(SgarchError::Degenerate(format!("non-positive long-run variance at t={}", t + 1)));
            }
            u_hat.push(y / tau.sqrt());
        }
        Self::from_u(u_hat, params)
    }

    /// Builds the filtered series from devolatilized observations.
    pub fn from_u(u_hat: Vec<f64>, params: &GarchParams) -> Result<Self> {
        let u_sq: Vec<f64> = u_hat.iter().map(|u| u * u).collect();
        let f = garch_filter(&u_sq, params)?;
        let eta_hat = u_hat.iter().zip(&f.g).map(|(u, g)| u / g.sqrt()).collect();
        let psi_hat = (0..u_hat.len())
            .map(|t| f.dg_at(t).iter().map(|d| d / f.g[t]).collect())
            .collect();
        Ok(Self {
            u_hat,
            g_hat: f.g,
            eta_hat,
            psi_hat,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmleOptions {
    pub max_iter: usize,
    /// Tolerance on the gradient of L/T.
    pub grad_tol: f64,
    /// Run the moment-matched and jittered starts in addition to the first.
    pub multi_start: bool,
}

impl Default for QmleOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            grad_tol: 1e-7,
            multi_start: true,
        }
    }
}

/// Estimate on devolatilized squares, before any filtering output.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaresFit {
    pub params: GarchParams,
    /// L(θ̂) as a sum over t.
    pub neg_loglik: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: GarchParams,
    pub filtered: FilteredSeries,
    /// Criterion value L̂_T(θ̂) = Σ(û²/ĝ + ln ĝ); smaller is better.
    pub loglik: f64,
    pub longrun: LongRunFit,
    pub converged: bool,
    pub iterations: usize,
}

/// Default start: α = 0.05/q, β = 0.85/p; α = 0.1/q without GARCH lags.
pub fn default_start(order: Order) -> Vec<f64> {
    let Order { p, q } = order;
    let a = if p == 0 { 0.1 / q as f64 } else { 0.05 / q as f64 };
    let mut v = vec![a; q];
    v.extend(std::iter::repeat_n(0.85 / p.max(1) as f64, p));
    v
}

/// Start matched to the first two autocorrelations of u².
fn moment_start(u_sq: &[f64], order: Order) -> Vec<f64> {
    let Order { p, q } = order;
    let rho = acf(u_sq, 2.max(q));
    if p == 0 {
        let mut a: Vec<f64> = rho.iter().take(q).map(|r| r.clamp(0.01, 0.9 / q as f64)).collect();
        let s: f64 = a.iter().sum();
        if s > 0.9 {
            a.iter_mut().for_each(|x| *x *= 0.9 / s);
        }
        return a;
    }
    let a_total = rho[0].clamp(0.02, 0.3);
    let persistence = if rho[0] > 1e-3 { rho[1] / rho[0] } else { 0.9 };
    let persistence = persistence.clamp(a_total + 0.05, 0.97);
    let b_total = persistence - a_total;
    let mut v = vec![a_total / q as f64; q];
    v.extend(std::iter::repeat_n(b_total / p as f64, p));
    v
}

fn acf(x: &[f64], lags: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let den: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (1..=lags)
        .map(|k| {
            if den <= 0.0 || k >= n {
                return 0.0;
            }
            (k..n).map(|t| (x[t] - mean) * (x[t - k] - mean)).sum::<f64>() / den
        })
        .collect()
}

fn jitter_start(order: Order) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ea5_0d11);
    let mut v: Vec<f64> = default_start(order)
        .into_iter()
        .map(|x| x * rng.random_range(0.5..1.5))
        .collect();
    let s: f64 = v.iter().sum();
    if s > 0.95 {
        v.iter_mut().for_each(|x| *x *= 0.95 / s);
    }
    v
}

/// Which coordinates are optimized and which are held fixed.
struct Layout {
    order: Order,
    free: Vec<usize>,
    pinned: Vec<(usize, f64)>,
    /// Mass shared by the free coordinates above their lower bounds.
    budget: f64,
}

impl Layout {
    fn new(order: Order, pinned: Vec<(usize, f64)>) -> Result<Self> {
        let dim = order.dim();
        let free: Vec<usize> = (0..dim).filter(|i| pinned.iter().all(|(j, _)| j != i)).collect();
        let pinned_sum: f64 = pinned.iter().map(|(_, v)| v).sum();
        let budget = 1.0 - EPS_OMEGA - pinned_sum - free.len() as f64 * EPS_THETA;
        if !free.is_empty() && budget <= 0.0 {
            return Err(SgarchError::Infeasible(format!(
                "pinned coefficients sum to {pinned_sum}, leaving no room for the free ones"
            )));
        }
        Ok(Self {
            order,
            free,
            pinned,
            budget,
        })
    }

    /// θ from z via a softmax with an implicit zero slack coordinate.
    fn theta(&self, z: &[f64], weights: &mut Vec<f64>) -> Vec<f64> {
        let m = z.iter().fold(0.0f64, |a, v| a.max(*v));
        weights.clear();
        weights.extend(z.iter().map(|v| (v - m).exp()));
        let denom: f64 = weights.iter().sum::<f64>() + (-m).exp();
        weights.iter_mut().for_each(|w| *w /= denom);
        let mut theta = vec![0.0; self.order.dim()];
        for (k, &i) in self.free.iter().enumerate() {
            theta[i] = EPS_THETA + self.budget * weights[k];
        }
        for &(i, v) in &self.pinned {
            theta[i] = v;
        }
        theta
    }

    /// Inverse of `theta`, clamping starts that violate the bounds.
    fn z_from_theta(&self, theta: &[f64]) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .free
            .iter()
            .map(|&i| ((theta[i] - EPS_THETA) / self.budget).max(1e-8))
            .collect();
        let total: f64 = s.iter().sum();
        if total > 1.0 - 1e-4 {
            s.iter_mut().for_each(|x| *x *= (1.0 - 1e-4) / total);
        }
        let slack = 1.0 - s.iter().sum::<f64>();
        s.iter().map(|x| (x / slack).ln()).collect()
    }
}

fn run_layout(u_sq: &[f64], layout: &Layout, starts: &[Vec<f64>], opts: &QmleOptions) -> Result<SquaresFit> {
    let n = u_sq.len() as f64;
    let order = layout.order;
    if layout.free.is_empty() {
        let theta = layout.theta(&[], &mut Vec::new());
        let params = GarchParams::new(order, theta)?;
        let value = neg_loglik_squares(u_sq, &params)?;
        return Ok(SquaresFit {
            params,
            neg_loglik: value,
            converged: true,
            iterations: 0,
        });
    }

    let bfgs = BfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol,
        ..BfgsOptions::default()
    };
    let mut best: Option<(optim::BfgsResult, usize)> = None;
    let mut total_iter = 0;
    for start in starts {
        let z0 = layout.z_from_theta(start);
        let mut weights = Vec::new();
        let objective = |z: &[f64], grad: &mut [f64]| -> f64 {
            let theta = layout.theta(z, &mut weights);
            let Ok(params) = GarchParams::new(order, theta) else {
                return f64::INFINITY;
            };
            let f = filter_unchecked(u_sq, &params);
            let (value, g_theta) = value_and_grad(u_sq, &f);
            // Chain rule through θ_i = ε + B·s_i(z).
            let mean: f64 = layout.free.iter().zip(&weights).map(|(&i, s)| g_theta[i] * s).sum();
            for (k, &i) in layout.free.iter().enumerate() {
                grad[k] = layout.budget * weights[k] * (g_theta[i] - mean) / n;
            }
            value / n
        };
        let r = optim::minimize(objective, &z0, &bfgs);
        total_iter += r.iterations;
        let better = match &best {
            None => true,
            Some((b, _)) => r.f < b.f,
        };
        if better && r.f.is_finite() {
            best = Some((r, total_iter));
        }
        if !opts.multi_start {
            break;
        }
    }
    let Some((r, _)) = best else {
        return Err(SgarchError::NotConverged("likelihood is not finite at any start".into()));
    };
    let theta = layout.theta(&r.x, &mut Vec::new());
    let params = GarchParams::new(order, theta)?;
    let value = neg_loglik_squares(u_sq, &params)?;
    if !r.converged {
        log::debug!("QMLE stopped after {} iterations with |grad| = {:.3e}", r.iterations, r.grad_norm);
    }
    Ok(SquaresFit {
        params,
        neg_loglik: value,
        converged: r.converged,
        iterations: total_iter,
    })
}

fn starts_for(u_sq: &[f64], order: Order, init: Option<&[f64]>, opts: &QmleOptions) -> Result<Vec<Vec<f64>>> {
    let mut starts = Vec::new();
    if let Some(init) = init {
        GarchParams::new(order, init.to_vec())?;
        starts.push(init.to_vec());
    } else {
        starts.push(default_start(order));
    }
    if opts.multi_start {
        starts.push(moment_start(u_sq, order));
        starts.push(jitter_start(order));
    }
    Ok(starts)
}

/// QMLE on devolatilized squares u_t² = y_t²/τ̂_t.
pub fn fit_squares(u_sq: &[f64], order: Order, init: Option<&[f64]>, opts: &QmleOptions) -> Result<SquaresFit> {
    if let Some(t) = u_sq.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(SgarchError::NonFinite { row: t });
    }
    let starts = starts_for(u_sq, order, init, opts)?;
    run_layout(u_sq, &Layout::new(order, Vec::new())?, &starts, opts)
}

fn assemble(series: &ReturnSeries, longrun: &LongRunFit, fit: SquaresFit) -> Result<FitResult> {
    let filtered = FilteredSeries::compute(series, &longrun.tau_hat, &fit.params)?;
    Ok(FitResult {
        params: fit.params,
        filtered,
        loglik: fit.neg_loglik,
        longrun: longrun.clone(),
        converged: fit.converged,
        iterations: fit.iterations,
    })
}

/// Two-step QMLE θ̂ given a long-run fit.
pub fn fit_qmle(
    series: &ReturnSeries,
    longrun: &LongRunFit,
    order: Order,
    init: Option<&[f64]>,
    opts: &QmleOptions,
) -> Result<FitResult> {
    series.require_estimable()?;
    let u_sq = longrun.devolatilize_squares(series)?;
    let fit = fit_squares(&u_sq, order, init, opts)?;
    assemble(series, longrun, fit)
}

/// Linear restriction R θ = r of full row rank.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    r_mat: DMatrix<f64>,
    r: DVector<f64>,
}

impl LinearConstraint {
    pub fn new(r_mat: DMatrix<f64>, r: DVector<f64>) -> Result<Self> {
        if r_mat.nrows() != r.len() {
            return Err(SgarchError::InvalidConfig(format!(
                "R has {} rows but r has {} entries",
                r_mat.nrows(),
                r.len()
            )));
        }
        if r_mat.nrows() == 0 {
            return Err(SgarchError::InvalidConfig("constraint has no rows".into()));
        }
        if r_mat.iter().chain(r.iter()).any(|v| !v.is_finite()) {
            return Err(SgarchError::InvalidConfig("constraint has non-finite entries".into()));
        }
        let rank = linalg::rank(&r_mat);
        if rank < r_mat.nrows() {
            return Err(SgarchError::RankDeficient {
                rank,
                rows: r_mat.nrows(),
            });
        }
        Ok(Self { r_mat, r })
    }

    /// Row-major R.
    pub fn from_rows(rows: &[Vec<f64>], r: &[f64]) -> Result<Self> {
        let d = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != cols) {
            return Err(SgarchError::InvalidConfig("rows of R have different lengths".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(d, cols, &flat), DVector::from_column_slice(r))
    }

    /// θ_i = 0 for each listed index.
    pub fn zeros(dim: usize, indices: &[usize]) -> Result<Self> {
        let rows: Vec<Vec<f64>> = indices
            .iter()
            .map(|&i| (0..dim).map(|j| f64::from(u8::from(i == j))).collect())
            .collect();
        Self::from_rows(&rows, &vec![0.0; indices.len()])
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.r_mat
    }

    pub fn rhs(&self) -> &DVector<f64> {
        &self.r
    }

    pub fn rank(&self) -> usize {
        self.r_mat.nrows()
    }

    /// Multiplies row i of (R, r) by `factors[i]`.
    pub fn scale_rows(&self, factors: &[f64]) -> Result<Self> {
        let mut m = self.r_mat.clone();
        let mut r = self.r.clone();
        for (i, f) in factors.iter().enumerate() {
            m.row_mut(i).scale_mut(*f);
            r[i] *= f;
        }
        Self::new(m, r)
    }

    /// Coordinate pins θ_j = value when every row touches a single coefficient.
    fn as_pins(&self) -> Option<Vec<(usize, f64)>> {
        let mut pins: Vec<(usize, f64)> = Vec::new();
        for i in 0..self.r_mat.nrows() {
            let row = self.r_mat.row(i);
            let scale = row.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let nz: Vec<usize> = (0..row.len()).filter(|&j| row[j].abs() > 1e-12 * scale).collect();
            if nz.len() != 1 {
                return None;
            }
            let j = nz[0];
            if pins.iter().any(|(k, _)| *k == j) {
                return None;
            }
            pins.push((j, self.r[i] / row[j]));
        }
        Some(pins)
    }
}

fn check_point_feasible(theta: &[f64]) -> bool {
    theta.iter().all(|v| *v >= 0.0) && theta.iter().sum::<f64>() <= 1.0 - EPS_OMEGA
}

/// Constrained QMLE on squares under R θ = r.
pub fn fit_squares_constrained(
    u_sq: &[f64],
    order: Order,
    constraint: &LinearConstraint,
    opts: &QmleOptions,
) -> Result<SquaresFit> {
    if constraint.matrix().ncols() != order.dim() {
        return Err(SgarchError::InvalidConfig(format!(
            "R has {} columns but the model has {} coefficients",
            constraint.matrix().ncols(),
            order.dim()
        )));
    }
    if let Some(t) = u_sq.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(SgarchError::NonFinite { row: t });
    }
    let starts = starts_for(u_sq, order, None, opts)?;

    if let Some(pins) = constraint.as_pins() {
        if let Some((j, v)) = pins.iter().find(|(_, v)| !(*v >= 0.0)) {
            return Err(SgarchError::Infeasible(format!("coefficient {j} pinned to {v} < 0")));
        }
        let mut pinned_theta = vec![0.0; order.dim()];
        for &(j, v) in &pins {
            pinned_theta[j] = v;
        }
        if !check_point_feasible(&pinned_theta) {
            return Err(SgarchError::Infeasible("pinned coefficients exceed the stationarity bound".into()));
        }
        let layout = Layout::new(order, pins)?;
        return run_layout(u_sq, &layout, &starts, opts);
    }

    general_constrained(u_sq, order, constraint, &starts, opts)
}

/// θ = θ₀ + N φ over the null space of R; points leaving the parameter region
/// are rejected by the line search.
fn general_constrained(
    u_sq: &[f64],
    order: Order,
    constraint: &LinearConstraint,
    starts: &[Vec<f64>],
    opts: &QmleOptions,
) -> Result<SquaresFit> {
    let n = u_sq.len() as f64;
    let base = linalg::min_norm_solution(constraint.matrix(), constraint.rhs())?;
    let null = linalg::null_space(constraint.matrix());
    let project = |theta: &[f64]| -> DVector<f64> {
        let d = DVector::from_column_slice(theta) - &base;
        null.transpose() * d
    };
    // Coordinates the constraint fixes at zero come back as ±1e-17 round-off.
    let to_theta = |phi: &DVector<f64>| -> Vec<f64> {
        (&base + &null * phi)
            .iter()
            .map(|v| if v.abs() < 1e-12 { 0.0 } else { *v })
            .collect()
    };

    let mut feasible_starts: Vec<DVector<f64>> = Vec::new();
    let mut candidates: Vec<Vec<f64>> = starts.to_vec();
    candidates.push(vec![0.01; order.dim()]);
    candidates.push(base.iter().copied().collect());
    for c in &candidates {
        let phi = project(c);
        // Shrink toward the minimum-norm point if the projection leaves the region.
        for shrink in [1.0, 0.5, 0.25, 0.0] {
            let candidate = &phi * shrink;
            if check_point_feasible(&to_theta(&candidate)) {
                feasible_starts.push(candidate);
                break;
            }
        }
    }
    if feasible_starts.is_empty() {
        return Err(SgarchError::Infeasible(
            "no point of the parameter region satisfies R θ = r".into(),
        ));
    }
    if null.ncols() == 0 {
        let params = GarchParams::new(order, to_theta(&feasible_starts[0]))?;
        let value = neg_loglik_squares(u_sq, &params)?;
        return Ok(SquaresFit {
            params,
            neg_loglik: value,
            converged: true,
            iterations: 0,
        });
    }

    let bfgs = BfgsOptions {
        max_iter: opts.max_iter,
        grad_tol: opts.grad_tol,
        ..BfgsOptions::default()
    };
    let mut best: Option<optim::BfgsResult> = None;
    let mut iterations = 0;
    for phi0 in feasible_starts.iter().take(if opts.multi_start { usize::MAX } else { 1 }) {
        let objective = |phi: &[f64], grad: &mut [f64]| -> f64 {
            let theta = to_theta(&DVector::from_column_slice(phi));
            if !check_point_feasible(&theta) {
                return f64::INFINITY;
            }
            let Ok(params) = GarchParams::new(order, theta) else {
                return f64::INFINITY;
            };
            let f = filter_unchecked(u_sq, &params);
            let (value, g_theta) = value_and_grad(u_sq, &f);
            let g_phi = null.transpose() * DVector::from_vec(g_theta);
            for (g, v) in grad.iter_mut().zip(g_phi.iter()) {
                *g = v / n;
            }
            value / n
        };
        let r = optim::minimize(objective, phi0.as_slice(), &bfgs);
        iterations += r.iterations;
        if best.as_ref().is_none_or(|b| r.f < b.f) {
            best = Some(r);
        }
    }
    let r = best.expect("at least one feasible start");
    let params = GarchParams::new(order, to_theta(&DVector::from_vec(r.x.clone())))?;
    let value = neg_loglik_squares(u_sq, &params)?;
    Ok(SquaresFit {
        params,
        neg_loglik: value,
        converged: r.converged,
        iterations,
    })
}

/// Constrained QMLE θ̂_{T|0} under R θ = r.
pub fn fit_qmle_constrained(
    series: &ReturnSeries,
    longrun: &LongRunFit,
    order: Order,
    constraint: &LinearConstraint,
    opts: &QmleOptions,
) -> Result<FitResult> {
    series.require_estimable()?;
    let u_sq = longrun.devolatilize_squares(series)?;
    let fit = fit_squares_constrained(&u_sq, order, constraint, opts)?;
    assemble(series, longrun, fit)
}
