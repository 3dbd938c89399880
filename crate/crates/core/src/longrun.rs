//! Kernel estimation of the long-run variance component τ(t/T) and
//! cross-validated bandwidth selection.
//!
//! The estimator is the unnormalized Nadaraya–Watson sum
//!
//! ```text
//! τ̂_t = (1/T) Σ_s K_h((t − s)/T) · y_s²
//! ```
//!
//! Near the sample ends the squared data are mirrored about the first and
//! last observation (y_{1−j} = y_{1+j}, y_{T+j} = y_{T−j}) so that boundary
//! points see a full kernel window.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data_io::{variance, ReturnSeries};
use crate::error::{Result, SgarchError};
use crate::kernel::{KernelKind, KernelSpec};
use crate::qmle::{self, Order, QmleOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Mirror the data about both endpoints.
    #[default]
    Reflection,
    /// Plain sum over the observed sample.
    InteriorOnly,
}

/// Per-observation long-run variance estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LongRunFit {
    pub tau_hat: Vec<f64>,
    pub h_used: f64,
    pub boundary: Boundary,
    #[serde(skip)]
    pub kernel: KernelKind,
}

impl LongRunFit {
    /// A constant long-run component, as used by variance targeting.
    pub fn constant(value: f64, len: usize) -> Self {
        Self {
            tau_hat: vec![value; len],
            h_used: f64::NAN,
            boundary: Boundary::InteriorOnly,
            kernel: KernelKind::Epanechnikov,
        }
    }

    /// Devolatilized squares û_t² = y_t²/τ̂_t.
    pub fn devolatilize_squares(&self, series: &ReturnSeries) -> Result<Vec<f64>> {
        if self.tau_hat.len() != series.len() {
            return Err(SgarchError::InvalidConfig(format!(
                "long-run fit has {} points but the series has {}",
                self.tau_hat.len(),
                series.len()
            )));
        }
        series
            .values()
            .iter()
            .zip(&self.tau_hat)
            .enumerate()
            .map(|(t, (y, tau))| {
                if *tau > 0.0 && tau.is_finite() {
                    Ok(y * y / tau)
                } else {
                    Err(SgarchError::Degenerate(format!(
                        "non-positive long-run variance {tau} at t={}",
                        t + 1
                    )))
                }
            })
            .collect()
    }
}

/// Source index (0-based) of padded position `p` under reflection.
#[inline]
pub(crate) fn reflect_index(p: isize, n: usize) -> usize {
    let last = n as isize - 1;
    if p < 0 {
        (-p) as usize
    } else if p > last {
        (2 * last - p) as usize
    } else {
        p as usize
    }
}

/// Half-width [T·h] of the kernel window.
fn window_radius(n: usize, h: f64) -> usize {
    (n as f64 * h).floor() as usize
}

fn check_window(n: usize, h: f64) -> Result<()> {
    if (n as f64) * h < 2.0 {
        return Err(SgarchError::InvalidBandwidth {
            h,
            reason: "T·h < 2: kernel window contains too few observations",
        });
    }
    Ok(())
}

/// Kernel estimate of τ_t from squared observations.
pub fn tau_from_squares(y_sq: &[f64], spec: &KernelSpec, boundary: Boundary) -> Result<Vec<f64>> {
    let n = y_sq.len();
    let h = spec.bandwidth();
    check_window(n, h)?;
    let m = window_radius(n, h);
    if m >= n {
        return Err(SgarchError::InvalidBandwidth {
            h,
            reason: "kernel window exceeds the sample",
        });
    }
    let nf = n as f64;
    let weights: Vec<f64> = (0..=m).map(|d| spec.scaled(d as f64 / nf)).collect();

    let value = |p: isize| -> f64 {
        match boundary {
            Boundary::Reflection => y_sq[reflect_index(p, n)],
            Boundary::InteriorOnly => {
                if p < 0 || p >= n as isize {
                    0.0
                } else {
                    y_sq[p as usize]
                }
            }
        }
    };

    let tau = (0..n)
        .map(|t| {
            let ti = t as isize;
            // Symmetric pairs keep the sum invariant to time reversal.
            let mut acc = weights[0] * y_sq[t];
            for (d, w) in weights.iter().enumerate().skip(1) {
                let d = d as isize;
                acc += w * (value(ti - d) + value(ti + d));
            }
            acc / nf
        })
        .collect();
    Ok(tau)
}

/// Estimates τ̂_t for every observation.
pub fn estimate_tau(series: &ReturnSeries, spec: &KernelSpec, boundary: Boundary) -> Result<LongRunFit> {
    let tau_hat = tau_from_squares(&series.squares(), spec, boundary)?;
    Ok(LongRunFit {
        tau_hat,
        h_used: spec.bandwidth(),
        boundary,
        kernel: spec.kind,
    })
}

/// τ̂(x) at an arbitrary point, using the plain sample sum.
pub fn tau_at(series: &ReturnSeries, spec: &KernelSpec, x: f64) -> f64 {
    let nf = series.len() as f64;
    series
        .values()
        .iter()
        .enumerate()
        .map(|(s, y)| spec.scaled(x - (s + 1) as f64 / nf) * y * y)
        .sum::<f64>()
        / nf
}

/// Bartlett-weighted long-run variance with truncation lag `lag`.
pub(crate) fn bartlett_long_run_variance(z: &[f64], lag: usize) -> f64 {
    let n = z.len();
    let mean = z.iter().sum::<f64>() / n as f64;
    let autocov = |j: usize| -> f64 {
        (j..n).map(|t| (z[t] - mean) * (z[t - j] - mean)).sum::<f64>() / n as f64
    };
    let mut omega = autocov(0);
    for j in 1..=lag.min(n - 1) {
        omega += 2.0 * (1.0 - j as f64 / (lag as f64 + 1.0)) * autocov(j);
    }
    omega
}

/// Pointwise confidence interval for τ(x) at an interior point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Plug-in asymptotic variance V̂(x).
    pub variance: f64,
}

/// Normal-approximation interval τ̂(x) ∓ z·√(V̂(x)/(Th)), with
/// V̂(x) = τ̂(x)²·∫K²·Ω̂_z and Ω̂_z a Bartlett long-run variance of
/// ẑ_t = û_t² − 1 truncated at ⌊T^{1/3}⌋. The h² bias term is not added.
pub fn tau_pointwise_ci(fit: &LongRunFit, series: &ReturnSeries, x: f64, level: f64) -> Result<TauInterval> {
    let h = fit.h_used;
    if !(x - h >= 0.0 && x + h <= 1.0) {
        return Err(SgarchError::NearBoundary { x });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(SgarchError::InvalidConfig(format!("confidence level {level} not in (0,1)")));
    }
    let spec = KernelSpec::new(fit.kernel, h)?;
    let n = series.len();
    let estimate = tau_at(series, &spec, x);
    let z: Vec<f64> = fit.devolatilize_squares(series)?.into_iter().map(|u2| u2 - 1.0).collect();
    let lag = (n as f64).cbrt().floor() as usize;
    let omega = bartlett_long_run_variance(&z, lag);
    let variance = estimate * estimate * fit.kernel.roughness() * omega;
    let q = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let half = q * (variance / (n as f64 * h)).sqrt();
    Ok(TauInterval {
        estimate,
        lower: estimate - half,
        upper: estimate + half,
        variance,
    })
}

/// Settings for the two-step cross-validation bandwidth search.
#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    /// Rate exponent λ₀ of the pilot bandwidth h₀ = T^{−λ₀}.
    pub lambda0: f64,
    pub c_min_factor: f64,
    pub c_max_factor: f64,
    pub grid_size: usize,
    /// Order of the pilot GARCH model fitted to the devolatilized data.
    pub pilot_order: Order,
    pub kernel: KernelKind,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            lambda0: 2.0 / 7.0,
            c_min_factor: 0.5,
            c_max_factor: 3.0,
            grid_size: 25,
            pilot_order: Order::new(1, 1).expect("valid order"),
            kernel: KernelKind::Epanechnikov,
        }
    }
}

impl CvConfig {
    pub fn with_pilot(pilot_order: Order) -> Self {
        Self {
            pilot_order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda0 > 0.25 && self.lambda0 < 0.5) {
            return Err(SgarchError::InvalidConfig(format!(
                "lambda0 = {} outside (1/4, 1/2)",
                self.lambda0
            )));
        }
        if !(self.c_min_factor > 0.0 && self.c_min_factor < self.c_max_factor) {
            return Err(SgarchError::InvalidConfig(
                "need 0 < c_min_factor < c_max_factor".into(),
            ));
        }
        if self.grid_size == 0 {
            return Err(SgarchError::InvalidConfig("grid_size must be positive".into()));
        }
        Ok(())
    }

    /// Endpoints [c_min·T^{−λ₀}, c_max·T^{−λ₀}] with c = factor·V̂ar^{λ₀},
    /// the upper end clipped below 0.5.
    pub fn grid_bounds(&self, n: usize, sample_var: f64) -> (f64, f64) {
        let rate = (n as f64).powf(-self.lambda0);
        let scale = sample_var.powf(self.lambda0);
        let lo = self.c_min_factor * scale * rate;
        let hi = (self.c_max_factor * scale * rate).min(MAX_BANDWIDTH);
        (lo, hi)
    }

    /// Log-spaced search grid.
    pub fn grid(&self, n: usize, sample_var: f64) -> Vec<f64> {
        let (lo, hi) = self.grid_bounds(n, sample_var);
        if self.grid_size == 1 || hi <= lo {
            return vec![lo.min(hi)];
        }
        let (a, b) = (lo.ln(), hi.ln());
        (0..self.grid_size)
            .map(|i| {
                if i + 1 == self.grid_size {
                    hi
                } else {
                    (a + (b - a) * i as f64 / (self.grid_size - 1) as f64).exp()
                }
            })
            .collect()
    }
}

/// Largest bandwidth used by the search.
pub const MAX_BANDWIDTH: f64 = 0.5 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvResult {
    pub h_cv: f64,
    /// (h, CV(h)) for every grid point, in increasing h.
    pub curve: Vec<(f64, f64)>,
    pub pilot_h: f64,
    /// Short-run variance of the pilot fit.
    #[serde(skip)]
    pub pilot_g: Vec<f64>,
}

/// Cross-validated bandwidth: pilot τ̂ and GARCH fit at h₀ = T^{−λ₀}, then
/// the minimizer of CV(h) = Σ_t {y_t²/(τ̂_{−t}(h)·ĝ_{t,0}) − 1}² over the grid.
pub fn select_bandwidth_cv(series: &ReturnSeries, cfg: &CvConfig) -> Result<CvResult> {
    cfg.validate()?;
    series.require_estimable()?;
    let n = series.len();
    let var = variance(series.values())?;
    if !(var > 0.0) {
        return Err(SgarchError::Degenerate("series has zero sample variance".into()));
    }
    let y_sq = series.squares();

    let pilot_h = (n as f64).powf(-cfg.lambda0);
    let pilot_spec = KernelSpec::new(cfg.kernel, pilot_h)?;
    let pilot_tau = tau_from_squares(&y_sq, &pilot_spec, Boundary::Reflection)?;
    let u_sq = divide_checked(&y_sq, &pilot_tau)?;
    let pilot = qmle::fit_squares(&u_sq, cfg.pilot_order, None, &QmleOptions::default())?;
    let pilot_g = qmle::garch_filter(&u_sq, &pilot.params)?.g;

    let grid: Vec<f64> = cfg
        .grid(n, var)
        .into_iter()
        .filter(|h| n as f64 * h >= 2.0)
        .collect();
    if grid.is_empty() {
        return Err(SgarchError::InvalidBandwidth {
            h: cfg.grid_bounds(n, var).1,
            reason: "every grid bandwidth gives T·h < 2",
        });
    }
    let curve = cv_curve(&y_sq, &pilot_g, &grid, cfg.kernel);

    // Strict comparison keeps the smallest h among ties.
    let mut best = curve[0];
    for &(h, cv) in &curve[1..] {
        if cv < best.1 {
            best = (h, cv);
        }
    }
    if !best.1.is_finite() {
        return Err(SgarchError::Degenerate(
            "cross-validation criterion is not finite for any bandwidth".into(),
        ));
    }
    Ok(CvResult {
        h_cv: best.0,
        curve,
        pilot_h,
        pilot_g,
    })
}

fn divide_checked(num: &[f64], den: &[f64]) -> Result<Vec<f64>> {
    num.iter()
        .zip(den)
        .enumerate()
        .map(|(t, (a, b))| {
            if *b > 0.0 {
                Ok(a / b)
            } else {
                Err(SgarchError::Degenerate(format!(
                    "non-positive long-run variance at t={}",
                    t + 1
                )))
            }
        })
        .collect()
}

/// CV(h) at each bandwidth of `grid`; each value is computed independently.
pub fn cv_curve(y_sq: &[f64], pilot_g: &[f64], grid: &[f64], kernel: KernelKind) -> Vec<(f64, f64)> {
    let n = y_sq.len();
    let max_m = grid.iter().map(|h| window_radius(n, *h)).max().unwrap_or(0).min(n - 1);
    let padded = PaddedSquares::new(y_sq, max_m);
    grid.iter()
        .map(|&h| {
            let weights = kernel_weights(n, h, kernel);
            let mut total = 0.0;
            for t in 0..n {
                let loo = padded.leave_one_out(t, &weights) / n as f64;
                if !(loo > 0.0) {
                    return (h, f64::INFINITY);
                }
                let r = y_sq[t] / (loo * pilot_g[t]) - 1.0;
                total += r * r;
            }
            (h, total)
        })
        .collect()
}

/// Leave-one-out estimates τ̂_{−t}(h) for every t.
pub fn leave_one_out_tau(y_sq: &[f64], h: f64, kernel: KernelKind) -> Result<Vec<f64>> {
    let n = y_sq.len();
    check_window(n, h)?;
    let m = window_radius(n, h);
    if m >= n {
        return Err(SgarchError::InvalidBandwidth {
            h,
            reason: "kernel window exceeds the sample",
        });
    }
    let padded = PaddedSquares::new(y_sq, m);
    let weights = kernel_weights(n, h, kernel);
    Ok((0..n).map(|t| padded.leave_one_out(t, &weights) / n as f64).collect())
}

/// w_d = K_h(d/T) for d = 0..=[Th].
fn kernel_weights(n: usize, h: f64, kernel: KernelKind) -> Vec<f64> {
    let m = window_radius(n, h);
    (0..=m).map(|d| kernel.eval(d as f64 / (n as f64 * h)) / h).collect()
}

/// Squared data with reflected padding of `pad` points on each side.
struct PaddedSquares {
    n: usize,
    pad: usize,
    values: Vec<f64>,
}

impl PaddedSquares {
    fn new(y_sq: &[f64], pad: usize) -> Self {
        let n = y_sq.len();
        let values = (0..n + 2 * pad)
            .map(|j| y_sq[reflect_index(j as isize - pad as isize, n)])
            .collect();
        Self { n, pad, values }
    }

    /// T·τ̂_{−t}: the kernel sum without y_t and without its mirror images
    /// at positions −t and 2(T−1)−t.
    fn leave_one_out(&self, t: usize, weights: &[f64]) -> f64 {
        let m = weights.len() - 1;
        let c = t + self.pad;
        let v = &self.values;
        let left_copy = 2 * t;
        let right_copy = 2 * (self.n - 1 - t);
        let mut acc = 0.0;
        if left_copy > m && right_copy > m {
            for d in 1..=m {
                acc += weights[d] * (v[c - d] + v[c + d]);
            }
        } else {
            for d in 1..=m {
                let l = if d == left_copy { 0.0 } else { v[c - d] };
                let r = if d == right_copy { 0.0 } else { v[c + d] };
                acc += weights[d] * (l + r);
            }
        }
        acc
    }
}
