//! Rolling-origin volatility forecasts, QLIKE evaluation and the
//! Diebold–Mariano comparison.
//!
//! An origin `n` means the forecaster sees observations 1..n
//! and predicts y²_{n+h}. Every model is refitted on `series.head(n)`, so
//! nothing after the origin can leak into a forecast.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::alt;
use crate::data_io::ReturnSeries;
use crate::error::{Result, SgarchError};
use crate::longrun::{Boundary, CvConfig};
use crate::optim::{self, BfgsOptions};
use crate::pipeline::{self, Bandwidth};
use crate::qmle::{self, GarchParams, Order, QmleOptions};

/// Defaults for the origin range and local-window search.
pub const DEFAULT_ORIGIN_START: usize = 1500;
pub const DEFAULT_HORIZONS: [usize; 4] = [1, 5, 10, 22];
pub const DEFAULT_LOOKBACK: usize = 50;
pub const DEFAULT_RESELECT_EVERY: usize = 250;

/// Failure share above which a model's column is reported invalid.
pub const MAX_FAILURE_SHARE: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastModel {
    /// Semiparametric GARCH at the configured order.
    Sgarch,
    /// Semiparametric ARCH(q).
    SarchQ,
    /// Stationary GARCH with variance targeting.
    GarchVt,
    /// ARCH(q) on a tuned trailing window with a free intercept.
    LsArchQ,
}

impl ForecastModel {
    pub const ALL: [ForecastModel; 4] = [
        ForecastModel::Sgarch,
        ForecastModel::SarchQ,
        ForecastModel::GarchVt,
        ForecastModel::LsArchQ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ForecastModel::Sgarch => "sgarch",
            ForecastModel::SarchQ => "sarch_q",
            ForecastModel::GarchVt => "garch_vt",
            ForecastModel::LsArchQ => "ls_arch_q",
        }
    }
}

impl FromStr for ForecastModel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "sgarch" => Ok(ForecastModel::Sgarch),
            "sarch" | "sarch_q" => Ok(ForecastModel::SarchQ),
            "garch_vt" | "vt" => Ok(ForecastModel::GarchVt),
            "ls_arch" | "ls_arch_q" | "lsarch" => Ok(ForecastModel::LsArchQ),
            _ => Err(format!("unknown model `{s}` (expected sgarch, sarch_q, garch_vt or ls_arch_q)")),
        }
    }
}

impl fmt::Display for ForecastModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForecastConfig {
    /// Forecast horizons t₀.
    pub horizons: Vec<usize>,
    /// First origin T₀ (number of in-sample observations).
    pub origin_start: usize,
    /// Evaluate every `origin_stride`-th origin; 1 uses all of them.
    pub origin_stride: usize,
    pub models: Vec<ForecastModel>,
    /// Order of the semiparametric GARCH model.
    pub sgarch_order: Order,
    /// ARCH order for S-ARCH and LS-ARCH.
    pub q_arch: usize,
    pub window_grid: Vec<usize>,
    pub lookback: usize,
    /// Origins between bandwidth re-selections.
    pub reselect_every: usize,
    /// Fixed bandwidth instead of cross-validation.
    pub bandwidth: Option<f64>,
    #[serde(skip)]
    pub qmle: QmleOptions,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            horizons: DEFAULT_HORIZONS.to_vec(),
            origin_start: DEFAULT_ORIGIN_START,
            origin_stride: 1,
            models: ForecastModel::ALL.to_vec(),
            sgarch_order: Order::new(1, 1).expect("valid order"),
            q_arch: 5,
            window_grid: (1..=10).map(|k| 50 * k).collect(),
            lookback: DEFAULT_LOOKBACK,
            reselect_every: DEFAULT_RESELECT_EVERY,
            bandwidth: None,
            qmle: QmleOptions::default(),
        }
    }
}

impl ForecastConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(SgarchError::InvalidConfig(m));
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return bad("horizons must be positive and non-empty".into());
        }
        if self.models.is_empty() {
            return bad("no models selected".into());
        }
        if self.q_arch == 0 {
            return bad("ARCH order must be at least 1".into());
        }
        if self.origin_stride == 0 || self.reselect_every == 0 {
            return bad("origin stride and re-selection cadence must be positive".into());
        }
        let min_h = *self.horizons.iter().min().expect("non-empty");
        if self.origin_start + min_h > n {
            return bad(format!(
                "origin start {} plus horizon {min_h} exceeds the sample size {n}",
                self.origin_start
            ));
        }
        if self.models.contains(&ForecastModel::LsArchQ) {
            let max_w = self.window_grid.iter().copied().max().unwrap_or(0);
            if self.window_grid.is_empty() || self.window_grid.iter().any(|&w| w <= self.q_arch) {
                return bad(format!("window grid must be non-empty with every window above q = {}", self.q_arch));
            }
            if max_w >= self.origin_start {
                return bad("window grid values must be below the origin start".into());
            }
            if max_w + self.lookback > self.origin_start {
                return Err(SgarchError::InsufficientHistory(format!(
                    "largest window {max_w} plus lookback {} exceeds origin start {}",
                    self.lookback, self.origin_start
                )));
            }
        }
        Ok(())
    }
}

/// Multi-step forecasts of g from the end of a filtered path.
///
/// Future u² are replaced by their g forecasts. Returns g_{n+1}..g_{n+h_max}.
pub fn forecast_g_path(params: &GarchParams, u_sq: &[f64], g: &[f64], h_max: usize) -> Vec<f64> {
    let (alpha, beta, omega) = (params.alpha(), params.beta(), params.omega());
    let n = u_sq.len();
    // Known history followed by forecasts; E u² = g beyond the sample.
    let mut u_ext: Vec<f64> = u_sq.to_vec();
    let mut g_ext: Vec<f64> = g.to_vec();
    for _ in 0..h_max {
        let t = u_ext.len();
        let lag = |v: &[f64], k: usize| if t >= k { v[t - k] } else { 1.0 };
        let mut next = omega;
        for (i, a) in alpha.iter().enumerate() {
            next += a * lag(&u_ext, i + 1);
        }
        for (j, b) in beta.iter().enumerate() {
            next += b * lag(&g_ext, j + 1);
        }
        u_ext.push(next);
        g_ext.push(next);
    }
    g_ext[n..].to_vec()
}

/// Forecasts at one origin for each requested horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OriginForecast {
    pub origin: usize,
    /// Variance level frozen at the origin (τ̂, τ̄, or 1 for LS-ARCH).
    pub level: f64,
    pub theta: Vec<f64>,
    /// Bandwidth, for the semiparametric models.
    pub h_used: Option<f64>,
    /// Aligned with the requested horizons.
    pub y_sq_hat: Vec<f64>,
    pub converged: bool,
}

/// S-GARCH (or S-ARCH with p = 0) forecast from data 1..origin.
///
/// τ is frozen at τ̂ at the origin; the reflection at the right edge uses
/// only in-sample observations.
pub fn forecast_sgarch(
    series: &ReturnSeries,
    origin: usize,
    order: Order,
    bandwidth: &Bandwidth,
    horizons: &[usize],
    init: Option<&[f64]>,
    opts: &QmleOptions,
) -> Result<OriginForecast> {
    let sample = series.head(origin)?;
    sample.require_estimable()?;
    let (lr, _) = pipeline::longrun_fit(&sample, bandwidth, Boundary::Reflection)?;
    let fit = qmle::fit_qmle(&sample, &lr, order, init, opts)?;
    let tau_end = *lr.tau_hat.last().expect("non-empty sample");
    let u_sq: Vec<f64> = fit.filtered.u_hat.iter().map(|u| u * u).collect();
    let h_max = horizons.iter().copied().max().unwrap_or(0);
    let path = forecast_g_path(&fit.params, &u_sq, &fit.filtered.g_hat, h_max);
    Ok(OriginForecast {
        origin,
        level: tau_end,
        theta: fit.params.theta().to_vec(),
        h_used: Some(lr.h_used),
        y_sq_hat: horizons.iter().map(|&h| tau_end * path[h - 1]).collect(),
        converged: fit.converged,
    })
}

/// Variance-targeted GARCH forecast τ̄·g.
pub fn forecast_vt(
    series: &ReturnSeries,
    origin: usize,
    order: Order,
    horizons: &[usize],
    opts: &QmleOptions,
) -> Result<OriginForecast> {
    let sample = series.head(origin)?;
    let vt = alt::fit_vt(&sample, order, opts)?;
    let u_sq: Vec<f64> = vt.filtered.u_hat.iter().map(|u| u * u).collect();
    let h_max = horizons.iter().copied().max().unwrap_or(0);
    let path = forecast_g_path(&vt.params, &u_sq, &vt.filtered.g_hat, h_max);
    Ok(OriginForecast {
        origin,
        level: vt.tau_bar,
        theta: vt.params.theta().to_vec(),
        h_used: None,
        y_sq_hat: horizons.iter().map(|&h| vt.tau_bar * path[h - 1]).collect(),
        converged: vt.converged,
    })
}

/// ARCH(q) with a free intercept: σ²_t = c + Σ a_i y²_{t−i}.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchFit {
    pub intercept: f64,
    pub alpha: Vec<f64>,
    pub converged: bool,
}

const ARCH_BUDGET: f64 = 1.0 - 1e-6;

impl ArchFit {
    /// σ² forecasts for horizons 1..h_max after the last element of `y_sq`.
    pub fn forecast_path(&self, y_sq: &[f64], h_max: usize) -> Vec<f64> {
        let q = self.alpha.len();
        let mut ext: Vec<f64> = y_sq[y_sq.len().saturating_sub(q)..].to_vec();
        let mut out = Vec::with_capacity(h_max);
        for _ in 0..h_max {
            let t = ext.len();
            let mut s = self.intercept;
            for (i, a) in self.alpha.iter().enumerate() {
                if t > i {
                    s += a * ext[t - i - 1];
                }
            }
            out.push(s);
            ext.push(s);
        }
        out
    }

    fn to_free(&self) -> Vec<f64> {
        let rest = (1.0 - self.alpha.iter().sum::<f64>() / ARCH_BUDGET).max(1e-12);
        let mut z = vec![self.intercept.max(1e-300).ln()];
        z.extend(self.alpha.iter().map(|a| (a / ARCH_BUDGET).max(1e-12).ln() - rest.ln()));
        z
    }

    fn from_free(z: &[f64]) -> Self {
        let (c, a) = softmax_arch(z);
        Self { intercept: c, alpha: a, converged: false }
    }
}

/// (exp z₀, B·softmax(z₁..z_q, 0)).
fn softmax_arch(z: &[f64]) -> (f64, Vec<f64>) {
    let m = z[1..].iter().fold(0.0f64, |a, v| a.max(*v));
    let e: Vec<f64> = z[1..].iter().map(|v| (v - m).exp()).collect();
    let denom = e.iter().sum::<f64>() + (-m).exp();
    (z[0].exp(), e.iter().map(|v| ARCH_BUDGET * v / denom).collect())
}

/// Mean Gaussian criterion over t = q..n and its gradient in the free coordinates.
fn arch_objective(y_sq: &[f64], q: usize, z: &[f64], grad: &mut [f64]) -> f64 {
    let n = y_sq.len();
    let m = (n - q) as f64;
    let (c, a) = softmax_arch(z);
    let mut value = 0.0;
    let mut g_c = 0.0;
    let mut g_a = vec![0.0; q];
    for t in q..n {
        let mut s = c;
        for i in 0..q {
            s += a[i] * y_sq[t - i - 1];
        }
        if !(s > 0.0) {
            return f64::INFINITY;
        }
        value += y_sq[t] / s + s.ln();
        let w = (1.0 - y_sq[t] / s) / s;
        g_c += w;
        for i in 0..q {
            g_a[i] += w * y_sq[t - i - 1];
        }
    }
    grad[0] = g_c * c / m;
    let weighted: f64 = a.iter().zip(&g_a).map(|(ai, gi)| ai * gi).sum();
    for i in 0..q {
        grad[i + 1] = a[i] * (g_a[i] - weighted / ARCH_BUDGET) / m;
    }
    value / m
}

/// Gaussian QMLE of ARCH(q) with a free intercept, conditioning on the first q values.
pub fn fit_arch_free(y_sq: &[f64], q: usize, init: Option<&ArchFit>) -> Result<ArchFit> {
    let n = y_sq.len();
    if q == 0 || n <= q + 1 {
        return Err(SgarchError::TooShort { needed: q + 2, got: n });
    }
    let mean = y_sq.iter().sum::<f64>() / n as f64;
    if !(mean > 0.0) {
        return Err(SgarchError::Degenerate("window of zero returns".into()));
    }
    let start = init.cloned().unwrap_or_else(|| ArchFit {
        intercept: 0.5 * mean,
        alpha: vec![0.5 / q as f64; q],
        converged: false,
    });
    let objective = |z: &[f64], grad: &mut [f64]| arch_objective(y_sq, q, z, grad);
    let opts = BfgsOptions { max_iter: 300, grad_tol: 1e-7, ..BfgsOptions::default() };
    let r = optim::minimize(objective, &start.to_free(), &opts);
    if !r.f.is_finite() {
        return Err(SgarchError::NotConverged("ARCH likelihood is not finite".into()));
    }
    let mut fit = ArchFit::from_free(&r.x);
    fit.converged = r.converged;
    Ok(fit)
}

/// Trailing-window ARCH fits keyed by (end, window), reused across origins.
#[derive(Debug, Default)]
pub struct ArchWindowCache {
    fits: HashMap<(usize, usize), ArchFit>,
}

impl ArchWindowCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }

    /// Fit on y²_{end−window+1..end} (1-based, inclusive).
    fn get(&mut self, y_sq: &[f64], end: usize, window: usize, q: usize) -> Result<&ArchFit> {
        if !self.fits.contains_key(&(end, window)) {
            let warm = self.fits.get(&(end - 1, window)).cloned();
            let fit = fit_arch_free(&y_sq[end - window..end], q, warm.as_ref())?;
            self.fits.insert((end, window), fit);
        }
        Ok(&self.fits[&(end, window)])
    }

    /// Drops fits that no later origin can reuse.
    fn prune_before(&mut self, end: usize) {
        self.fits.retain(|(e, _), _| *e >= end);
    }
}

/// LS-ARCH window choice and forecast at one origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LsArchForecast {
    pub window: usize,
    /// One-step QLIKE over the lookback for each grid window.
    pub window_qlike: Vec<(usize, f64)>,
    pub forecast: OriginForecast,
}

/// Picks T̃ by one-step QLIKE over origins origin−lookback..origin−1, then forecasts.
pub fn forecast_ls_arch(
    series: &ReturnSeries,
    origin: usize,
    q: usize,
    window_grid: &[usize],
    lookback: usize,
    horizons: &[usize],
    cache: &mut ArchWindowCache,
) -> Result<LsArchForecast> {
    let max_w = window_grid.iter().copied().max().unwrap_or(0);
    if window_grid.is_empty() || origin > series.len() || max_w + lookback > origin {
        return Err(SgarchError::InsufficientHistory(format!(
            "origin {origin} needs {} observations for window {max_w} and lookback {lookback}",
            max_w + lookback
        )));
    }
    let y_sq: Vec<f64> = series.values()[..origin].iter().map(|y| y * y).collect();
    let mut window_qlike = Vec::with_capacity(window_grid.len());
    let mut best: Option<(usize, f64)> = None;
    let mut grid = window_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    for &w in &grid {
        let mut loss = 0.0;
        for end in origin - lookback..origin {
            let fit = cache.get(&y_sq, end, w, q)?;
            let f = fit.forecast_path(&y_sq[..end], 1)[0];
            loss += qlike_term(f, y_sq[end]);
        }
        loss /= lookback as f64;
        window_qlike.push((w, loss));
        // Strict improvement keeps the smallest window on ties.
        if best.is_none_or(|(_, b)| loss < b) {
            best = Some((w, loss));
        }
    }
    let (window, _) = best.expect("non-empty grid");
    let fit = cache.get(&y_sq, origin, window, q)?.clone();
    let h_max = horizons.iter().copied().max().unwrap_or(0);
    let path = fit.forecast_path(&y_sq, h_max);
    let mut theta = vec![fit.intercept];
    theta.extend(&fit.alpha);
    Ok(LsArchForecast {
        window,
        window_qlike,
        forecast: OriginForecast {
            origin,
            level: 1.0,
            theta,
            h_used: None,
            y_sq_hat: horizons.iter().map(|&h| path[h - 1]).collect(),
            converged: fit.converged,
        },
    })
}

/// log f + y²/f.
pub fn qlike_term(forecast: f64, y_sq: f64) -> f64 {
    forecast.ln() + y_sq / forecast
}

/// Mean QLIKE of aligned forecast and realization streams.
pub fn qlike(forecasts: &[f64], y_sq: &[f64]) -> Result<f64> {
    if forecasts.len() != y_sq.len() || forecasts.is_empty() {
        return Err(SgarchError::InvalidConfig("forecast and realization lengths differ or are zero".into()));
    }
    if forecasts.iter().any(|f| !(*f > 0.0)) {
        return Err(SgarchError::InvalidParams("variance forecasts must be positive".into()));
    }
    Ok(forecasts.iter().zip(y_sq).map(|(f, y)| qlike_term(*f, *y)).sum::<f64>() / forecasts.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DmResult {
    pub statistic: f64,
    pub p_value: f64,
    pub mean_diff: f64,
}

/// Diebold–Mariano test on d_t = loss_a − loss_b with a rectangular HAC
/// variance using `lag` autocovariances; two-sided normal p-value.
pub fn diebold_mariano(loss_a: &[f64], loss_b: &[f64], lag: usize) -> Result<DmResult> {
    let n = loss_a.len();
    if n != loss_b.len() || n < 2 {
        return Err(SgarchError::InvalidConfig("DM test needs two aligned loss series of length ≥ 2".into()));
    }
    let d: Vec<f64> = loss_a.iter().zip(loss_b).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let gamma = |j: usize| (j..n).map(|t| (d[t] - mean) * (d[t - j] - mean)).sum::<f64>() / n as f64;
    let g0 = gamma(0);
    if g0 == 0.0 {
        let statistic = if mean == 0.0 { 0.0 } else { mean.signum() * f64::INFINITY };
        let p_value = if mean == 0.0 { 1.0 } else { 0.0 };
        return Ok(DmResult { statistic, p_value, mean_diff: mean });
    }
    let mut var = g0;
    for j in 1..=lag.min(n - 1) {
        var += 2.0 * gamma(j);
    }
    // Rectangular weights can give a negative estimate; fall back to γ₀.
    if !(var > 0.0) {
        var = g0;
    }
    let statistic = mean / (var / n as f64).sqrt();
    let normal = Normal::standard();
    let p_value = (2.0 * normal.sf(statistic.abs())).min(1.0);
    Ok(DmResult { statistic, p_value, mean_diff: mean })
}

/// Per-origin forecasts of one model; `None` where the fit failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelForecasts {
    pub model: ForecastModel,
    pub origins: Vec<usize>,
    /// `[origin][horizon]`, aligned with the config horizons.
    pub forecasts: Vec<Option<Vec<f64>>>,
    pub failures: usize,
    /// LS-ARCH only: selected windows per origin.
    pub windows: Vec<Option<usize>>,
}

/// Runs one model over all evaluation origins.
pub fn rolling_forecasts(series: &ReturnSeries, cfg: &ForecastConfig, model: ForecastModel) -> Result<ModelForecasts> {
    let n = series.len();
    cfg.validate(n)?;
    let min_h = *cfg.horizons.iter().min().expect("validated");
    let origins: Vec<usize> = (cfg.origin_start..=n - min_h).step_by(cfg.origin_stride).collect();
    let order = match model {
        ForecastModel::SarchQ | ForecastModel::LsArchQ => Order::new(0, cfg.q_arch)?,
        _ => cfg.sgarch_order,
    };
    let warm_opts = QmleOptions { multi_start: false, ..cfg.qmle };
    let mut forecasts = Vec::with_capacity(origins.len());
    let mut windows = Vec::with_capacity(origins.len());
    let mut failures = 0;
    let mut prev_theta: Option<Vec<f64>> = None;
    let mut h_state: Option<(usize, f64)> = None;
    let mut cache = ArchWindowCache::new();

    for &origin in &origins {
        let result = match model {
            ForecastModel::Sgarch | ForecastModel::SarchQ => {
                let bandwidth = match cfg.bandwidth {
                    Some(h) => Bandwidth::Fixed(h),
                    None => {
                        let stale = h_state.is_none_or(|(at, _)| origin >= at + cfg.reselect_every);
                        if stale {
                            let sample = series.head(origin)?;
                            match pipeline::longrun_fit(&sample, &Bandwidth::Cv(CvConfig::with_pilot(order)), Boundary::Reflection) {
                                Ok((lr, _)) => h_state = Some((origin, lr.h_used)),
                                Err(e) => log::warn!("{model}: bandwidth selection failed at origin {origin}: {e}"),
                            }
                        }
                        match h_state {
                            Some((_, h)) => Bandwidth::Fixed(h),
                            None => Bandwidth::Cv(CvConfig::with_pilot(order)),
                        }
                    }
                };
                let (init, opts) = match &prev_theta {
                    Some(t) => (Some(t.as_slice()), &warm_opts),
                    None => (None, &cfg.qmle),
                };
                forecast_sgarch(series, origin, order, &bandwidth, &cfg.horizons, init, opts)
                    .map(|f| (f, None))
            }
            ForecastModel::GarchVt => {
                forecast_vt(series, origin, cfg.sgarch_order, &cfg.horizons, &cfg.qmle).map(|f| (f, None))
            }
            ForecastModel::LsArchQ => {
                let r = forecast_ls_arch(series, origin, cfg.q_arch, &cfg.window_grid, cfg.lookback, &cfg.horizons, &mut cache);
                cache.prune_before(origin.saturating_sub(cfg.lookback));
                r.map(|f| (f.forecast, Some(f.window)))
            }
        };
        match result {
            Ok((f, w)) if f.converged && f.y_sq_hat.iter().all(|v| *v > 0.0 && v.is_finite()) => {
                if matches!(model, ForecastModel::Sgarch | ForecastModel::SarchQ) {
                    prev_theta = Some(f.theta.clone());
                }
                forecasts.push(Some(f.y_sq_hat));
                windows.push(w);
            }
            Ok(_) => {
                failures += 1;
                forecasts.push(None);
                windows.push(None);
            }
            Err(e) => {
                log::debug!("{model}: origin {origin} failed: {e}");
                failures += 1;
                forecasts.push(None);
                windows.push(None);
            }
        }
    }
    Ok(ModelForecasts { model, origins, forecasts, failures, windows })
}

/// QLIKE of one model at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QlikeCell {
    pub model: ForecastModel,
    pub horizon: usize,
    /// `None` when the model failed at more than the allowed share of origins.
    pub qlike: Option<f64>,
    pub n_origins: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DmComparison {
    pub horizon: usize,
    pub best: ForecastModel,
    pub other: ForecastModel,
    pub n: usize,
    pub result: DmResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QlikeReport {
    pub config: ForecastConfig,
    pub cells: Vec<QlikeCell>,
    pub dm: Vec<DmComparison>,
}

impl QlikeReport {
    pub fn qlike(&self, model: ForecastModel, horizon: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.model == model && c.horizon == horizon)
            .and_then(|c| c.qlike)
    }

    pub fn best(&self, horizon: usize) -> Option<ForecastModel> {
        self.dm.iter().find(|d| d.horizon == horizon).map(|d| d.best).or_else(|| {
            self.cells
                .iter()
                .filter(|c| c.horizon == horizon && c.qlike.is_some())
                .min_by(|a, b| a.qlike.partial_cmp(&b.qlike).expect("finite"))
                .map(|c| c.model)
        })
    }
}

/// Per-origin QLIKE losses of a model at a horizon, `None` where missing.
fn losses(mf: &ModelForecasts, y_sq: &[f64], hi: usize, h: usize) -> Vec<Option<f64>> {
    mf.origins
        .iter()
        .zip(&mf.forecasts)
        .map(|(&o, f)| {
            let target = o + h;
            if target > y_sq.len() {
                return None;
            }
            f.as_ref().map(|v| qlike_term(v[hi], y_sq[target - 1]))
        })
        .collect()
}

/// QLIKE table and DM tests of the best model against each other one.
pub fn qlike_report(series: &ReturnSeries, cfg: &ForecastConfig) -> Result<QlikeReport> {
    let runs = cfg
        .models
        .iter()
        .map(|&m| rolling_forecasts(series, cfg, m))
        .collect::<Result<Vec<_>>>()?;
    evaluate(series, cfg, &runs)
}

/// Builds the report from precomputed rolling forecasts.
pub fn evaluate(series: &ReturnSeries, cfg: &ForecastConfig, runs: &[ModelForecasts]) -> Result<QlikeReport> {
    let y_sq = series.squares();
    let mut cells = Vec::new();
    let mut dm = Vec::new();
    for (hi, &h) in cfg.horizons.iter().enumerate() {
        let per_model: Vec<Vec<Option<f64>>> = runs.iter().map(|r| losses(r, &y_sq, hi, h)).collect();
        let mut valid = Vec::new();
        for (r, l) in runs.iter().zip(&per_model) {
            let eligible = r.origins.iter().filter(|&&o| o + h <= y_sq.len()).count();
            let failed = l.iter().zip(&r.origins).filter(|(v, &o)| v.is_none() && o + h <= y_sq.len()).count();
            let ok: Vec<f64> = l.iter().flatten().copied().collect();
            let usable = eligible > 0 && (failed as f64) <= MAX_FAILURE_SHARE * eligible as f64 && !ok.is_empty();
            let q = usable.then(|| ok.iter().sum::<f64>() / ok.len() as f64);
            if q.is_some() {
                valid.push(cells.len());
            } else if eligible > 0 {
                log::warn!("{}: failed at {failed} of {eligible} origins for horizon {h}; column invalid", r.model);
            }
            cells.push(QlikeCell { model: r.model, horizon: h, qlike: q, n_origins: eligible, failures: failed });
        }
        let Some(&best_idx) = valid.iter().min_by(|&&a, &&b| {
            cells[a].qlike.partial_cmp(&cells[b].qlike).expect("finite losses")
        }) else {
            continue;
        };
        let best_model = cells[best_idx].model;
        let bi = runs.iter().position(|r| r.model == best_model).expect("present");
        for &ci in &valid {
            let other = cells[ci].model;
            if other == best_model {
                continue;
            }
            let oi = runs.iter().position(|r| r.model == other).expect("present");
            let (a, b): (Vec<f64>, Vec<f64>) = per_model[bi]
                .iter()
                .zip(&per_model[oi])
                .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
                .unzip();
            if a.len() < 2 {
                continue;
            }
            let result = diebold_mariano(&a, &b, h - 1)?;
            dm.push(DmComparison { horizon: h, best: best_model, other, n: a.len(), result });
        }
    }
    Ok(QlikeReport { config: cfg.clone(), cells, dm })
}

/// Models as rows, horizons as columns; `sig_h` marks the best model with
/// `best` and others significantly worse at 5% with `*`.
pub fn write_qlike_csv<W: Write>(report: &QlikeReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let horizons = &report.config.horizons;
    let mut header = vec!["model".to_string()];
    for h in horizons {
        header.push(format!("qlike_{h}"));
        header.push(format!("sig_{h}"));
    }
    w.write_record(&header)?;
    for &m in &report.config.models {
        let mut row = vec![m.to_string()];
        for &h in horizons {
            row.push(report.qlike(m, h).map_or("NA".to_string(), |v| format!("{v:.4}")));
            let marker = if report.best(h) == Some(m) {
                "best"
            } else if report
                .dm
                .iter()
                .any(|d| d.horizon == h && d.other == m && d.result.p_value < 0.05)
            {
                "*"
            } else {
                ""
            };
            row.push(marker.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
