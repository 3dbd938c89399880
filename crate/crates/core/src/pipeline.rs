//! The full two-step estimation: bandwidth, τ̂, QMLE and covariance.

use std::fmt;
use std::str::FromStr;

use crate::asymptotics::{self, AsymptoticCov};
use crate::data_io::ReturnSeries;
use crate::error::{Result, SgarchError};
use crate::kernel::KernelSpec;
use crate::longrun::{self, Boundary, CvConfig, CvResult, LongRunFit};
use crate::qmle::{self, FitResult, Order, QmleOptions};

/// How the smoothing bandwidth is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum Bandwidth {
    /// Cross-validation; the pilot order is taken from the config.
    Cv(CvConfig),
    Fixed(f64),
}

impl Bandwidth {
    /// CV with the fitted model itself as pilot.
    pub fn cv_with_pilot(order: Order) -> Self {
        Bandwidth::Cv(CvConfig::with_pilot(order))
    }
}

impl FromStr for Bandwidth {
    type Err = String;

    /// `auto` or a number in (0, 0.5).
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Bandwidth::Cv(CvConfig::default()));
        }
        s.parse::<f64>()
            .map(Bandwidth::Fixed)
            .map_err(|_| format!("bandwidth must be `auto` or a number, got `{s}`"))
    }
}

impl fmt::Display for Bandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bandwidth::Cv(_) => f.write_str("auto"),
            Bandwidth::Fixed(h) => write!(f, "{h}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SgarchFit {
    pub fit: FitResult,
    pub cov: AsymptoticCov,
    pub cv: Option<CvResult>,
}

impl SgarchFit {
    pub fn h_used(&self) -> f64 {
        self.fit.longrun.h_used
    }
}

/// Long-run fit at a chosen or cross-validated bandwidth.
pub fn longrun_fit(series: &ReturnSeries, bandwidth: &Bandwidth, boundary: Boundary) -> Result<(LongRunFit, Option<CvResult>)> {
    match bandwidth {
        Bandwidth::Fixed(h) => {
            let spec = KernelSpec::epanechnikov(*h)?;
            Ok((longrun::estimate_tau(series, &spec, boundary)?, None))
        }
        Bandwidth::Cv(cfg) => {
            let cv = longrun::select_bandwidth_cv(series, cfg)?;
            let spec = KernelSpec::new(cfg.kernel, cv.h_cv)?;
            Ok((longrun::estimate_tau(series, &spec, boundary)?, Some(cv)))
        }
    }
}

/// Bandwidth selection, τ̂, θ̂ and Σ̂ in one call.
pub fn fit_sgarch(
    series: &ReturnSeries,
    order: Order,
    bandwidth: &Bandwidth,
    boundary: Boundary,
    opts: &QmleOptions,
) -> Result<SgarchFit> {
    series.require_estimable()?;
    let (lr, cv) = longrun_fit(series, bandwidth, boundary)?;
    let fit = qmle::fit_qmle(series, &lr, order, None, opts)?;
    let cov = asymptotics::estimate_covariance(&fit.filtered)?;
    Ok(SgarchFit { fit, cov, cv })
}

/// Rejects an empty or malformed order pair from user input.
pub fn parse_order(p: usize, q: usize) -> Result<Order> {
    Order::new(p, q).map_err(|_| SgarchError::InvalidOrder { p, q })
}
