//! Data generation for the four Monte-Carlo designs and the replication
//! harnesses built on top of it.
//!
//! Every replication draws from its own ChaCha stream selected by the
//! replication index, so results do not depend on how replications are
//! scheduled across threads.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{StandardNormal, StudentT};
use rayon::prelude::*;
use serde::Serialize;

use crate::alt;
use crate::data_io::ReturnSeries;
use crate::error::{Result, SgarchError};
use crate::inference::{self, LinearConstraint, DEFAULT_LAGS};
use crate::kernel::KernelSpec;
use crate::longrun::{Boundary, CvConfig};
use crate::pipeline::{self, Bandwidth};
use crate::qmle::{FilteredSeries, GarchParams, Order, QmleOptions};

/// Discarded steps before the first retained observation.
pub const BURN_IN: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dgp {
    /// ARCH(2), α = (0.3, 0.3).
    Dgp1Sarch2,
    /// GARCH(1,1), (α, β) = (0.1, 0.8).
    Dgp2Sgarch11,
    /// GARCH(1,2), (α₁, β₁, α₂) = (0.3, 0.3, 0.03k).
    Dgp3Sgarch12,
    /// GARCH(2,1), (α₁, β₁, β₂) = (0.3, 0.3, 0.03k).
    Dgp4Sgarch21,
}

impl Dgp {
    pub fn order(self) -> Order {
        let (p, q) = match self {
            Dgp::Dgp1Sarch2 => (0, 2),
            Dgp::Dgp2Sgarch11 => (1, 1),
            Dgp::Dgp3Sgarch12 => (1, 2),
            Dgp::Dgp4Sgarch21 => (2, 1),
        };
        Order::new(p, q).expect("fixed design orders are valid")
    }

    /// True θ in (α₁..α_q, β₁..β_p) order.
    pub fn theta(self, k: u32) -> Vec<f64> {
        let extra = 0.03 * k as f64;
        match self {
            Dgp::Dgp1Sarch2 => vec![0.3, 0.3],
            Dgp::Dgp2Sgarch11 => vec![0.1, 0.8],
            Dgp::Dgp3Sgarch12 => vec![0.3, extra, 0.3],
            Dgp::Dgp4Sgarch21 => vec![0.3, 0.3, extra],
        }
    }

    pub fn params(self, k: u32) -> Result<GarchParams> {
        GarchParams::new(self.order(), self.theta(k))
    }

    /// Position of the coefficient driven by k, if any.
    pub fn deviation_index(self) -> Option<usize> {
        match self {
            Dgp::Dgp3Sgarch12 => Some(1),
            Dgp::Dgp4Sgarch21 => Some(2),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dgp::Dgp1Sarch2 => "dgp1",
            Dgp::Dgp2Sgarch11 => "dgp2",
            Dgp::Dgp3Sgarch12 => "dgp3",
            Dgp::Dgp4Sgarch21 => "dgp4",
        }
    }
}

impl FromStr for Dgp {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dgp1" | "dgp1_sarch2" => Ok(Dgp::Dgp1Sarch2),
            "dgp2" | "dgp2_sgarch11" => Ok(Dgp::Dgp2Sgarch11),
            "dgp3" | "dgp3_sgarch12" => Ok(Dgp::Dgp3Sgarch12),
            "dgp4" | "dgp4_sgarch21" => Ok(Dgp::Dgp4Sgarch21),
            _ => Err(format!("unknown dgp `{s}` (expected dgp1..dgp4)")),
        }
    }
}

impl fmt::Display for Dgp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Long-run variance designs on [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TauShape {
    /// τ(x) = 1.
    Constant,
    /// τ(x) = 1 + 2x.
    Linear,
    /// τ(x) = 1 + sin(4πx)/2.
    Cyclical,
}

impl TauShape {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TauShape::Constant => 1.0,
            TauShape::Linear => 1.0 + 2.0 * x,
            TauShape::Cyclical => 1.0 + (4.0 * std::f64::consts::PI * x).sin() / 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TauShape::Constant => "constant",
            TauShape::Linear => "linear",
            TauShape::Cyclical => "cyclical",
        }
    }
}

impl FromStr for TauShape {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "constant" => Ok(TauShape::Constant),
            "linear" => Ok(TauShape::Linear),
            "cyclical" => Ok(TauShape::Cyclical),
            _ => Err(format!("unknown tau shape `{s}` (expected constant, linear or cyclical)")),
        }
    }
}

impl fmt::Display for TauShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Unit-variance innovation laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    Normal,
    St10,
    St5,
}

impl Innovation {
    pub fn dof(self) -> Option<f64> {
        match self {
            Innovation::Normal => None,
            Innovation::St10 => Some(10.0),
            Innovation::St5 => Some(5.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Innovation::Normal => "normal",
            Innovation::St10 => "st10",
            Innovation::St5 => "st5",
        }
    }

    /// Population kurtosis E η⁴.
    pub fn kurtosis(self) -> f64 {
        match self.dof() {
            None => 3.0,
            Some(nu) => 3.0 + 6.0 / (nu - 4.0),
        }
    }

    fn sampler(self) -> InnovationSampler {
        match self.dof() {
            None => InnovationSampler::Normal,
            Some(nu) => InnovationSampler::StudentT {
                dist: StudentT::new(nu).expect("positive degrees of freedom"),
                scale: ((nu - 2.0) / nu).sqrt(),
            },
        }
    }
}

impl FromStr for Innovation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "normal" | "n01" | "gaussian" => Ok(Innovation::Normal),
            "st10" => Ok(Innovation::St10),
            "st5" => Ok(Innovation::St5),
            _ => Err(format!("unknown innovation law `{s}` (expected normal, st10 or st5)")),
        }
    }
}

impl fmt::Display for Innovation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

enum InnovationSampler {
    Normal,
    StudentT { dist: StudentT<f64>, scale: f64 },
}

impl InnovationSampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            InnovationSampler::Normal => rng.sample(StandardNormal),
            InnovationSampler::StudentT { dist, scale } => rng.sample(dist) * scale,
        }
    }
}

/// One Monte-Carlo design cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSpec {
    pub dgp: Dgp,
    pub k: u32,
    pub tau_shape: TauShape,
    pub innovation: Innovation,
    #[serde(rename = "T")]
    pub n_obs: usize,
    pub n_reps: usize,
    pub seed: u64,
}

impl SimSpec {
    pub fn new(dgp: Dgp, tau_shape: TauShape, innovation: Innovation, n_obs: usize, n_reps: usize, seed: u64) -> Self {
        Self { dgp, k: 0, tau_shape, innovation, n_obs, n_reps, seed }
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > 10 {
            return Err(SgarchError::InvalidConfig(format!("k = {} is outside 0..=10", self.k)));
        }
        if self.n_obs < 2 {
            return Err(SgarchError::TooShort { needed: 2, got: self.n_obs });
        }
        self.dgp.params(self.k).map(|_| ())
    }
}

/// Simulated path together with the latent components.
#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub y: Vec<f64>,
    pub tau: Vec<f64>,
    pub g: Vec<f64>,
    pub eta: Vec<f64>,
}

impl SimPath {
    /// True conditional variance τ_t g_t.
    pub fn conditional_variance(&self) -> Vec<f64> {
        self.tau.iter().zip(&self.g).map(|(t, g)| t * g).collect()
    }
}

/// The RNG for replication `rep`.
pub fn rep_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Simulates with an explicit burn-in length.
///
/// The retained innovations are drawn first and the burn-in innovations
/// after them, applied backwards in time, so a longer burn-in only prepends
/// older shocks and leaves the retained ones untouched.
pub fn simulate_path_with_burn(spec: &SimSpec, rep: u64, burn_in: usize) -> Result<SimPath> {
    spec.validate()?;
    let params = spec.dgp.params(spec.k)?;
    let (alpha, beta, omega) = (params.alpha(), params.beta(), params.omega());
    let n = spec.n_obs;

    let sampler = spec.innovation.sampler();
    let mut rng = rep_rng(spec.seed, rep);
    let retained: Vec<f64> = (0..n).map(|_| sampler.draw(&mut rng)).collect();
    let mut burn: Vec<f64> = (0..burn_in).map(|_| sampler.draw(&mut rng)).collect();
    burn.reverse();

    // Stationary start: pre-sample u² and g at their mean of one.
    let total = burn_in + n;
    let mut u_sq = vec![1.0; total];
    let mut g = vec![1.0; total];
    let mut eta_all = burn;
    eta_all.extend_from_slice(&retained);
    for t in 0..total {
        let mut gt = omega;
        for (i, a) in alpha.iter().enumerate() {
            gt += a * if t > i { u_sq[t - i - 1] } else { 1.0 };
        }
        for (j, b) in beta.iter().enumerate() {
            gt += b * if t > j { g[t - j - 1] } else { 1.0 };
        }
        g[t] = gt;
        u_sq[t] = gt * eta_all[t] * eta_all[t];
    }

    let nf = n as f64;
    let tau: Vec<f64> = (1..=n).map(|t| spec.tau_shape.eval(t as f64 / nf)).collect();
    let g_kept = g[burn_in..].to_vec();
    let y = (0..n).map(|t| (tau[t] * g_kept[t]).sqrt() * retained[t]).collect();
    Ok(SimPath { y, tau, g: g_kept, eta: retained })
}

pub fn simulate_path(spec: &SimSpec, rep: u64) -> Result<SimPath> {
    simulate_path_with_burn(spec, rep, BURN_IN)
}

/// One replication of the design as a return series.
pub fn simulate(spec: &SimSpec, rep: u64) -> Result<ReturnSeries> {
    let path = simulate_path(spec, rep)?;
    ReturnSeries::new(path.y, format!("{}-{}-{}-rep{}", spec.dgp, spec.tau_shape, spec.innovation, rep))
}

/// Which estimators a cell evaluates besides the semiparametric QMLE.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CellOptions {
    /// Fitted order; defaults to the design's own.
    pub fit_order: Option<Order>,
    /// `None` means cross-validation with the fitted model as pilot.
    pub bandwidth: Option<f64>,
    pub variance_targeting: bool,
    pub three_step: bool,
    pub qmle: QmleOptions,
}

/// Estimates from one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepOutcome {
    pub rep: u64,
    pub theta_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub h_used: f64,
    pub theta_vt: Option<Vec<f64>>,
    pub theta_three_step: Option<Vec<f64>>,
}

/// Bias, empirical and mean asymptotic standard deviations per coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorStats {
    pub mean: Vec<f64>,
    pub bias: Vec<f64>,
    pub esd: Vec<f64>,
    /// Delta-method standard error of each ESD.
    pub esd_se: Vec<f64>,
    /// Mean plug-in standard error; absent where none is computed.
    pub asd: Option<Vec<f64>>,
}

impl EstimatorStats {
    pub fn from_draws(draws: &[Vec<f64>], truth: &[f64], se: Option<&[Vec<f64>]>) -> Self {
        let dim = truth.len();
        let n = draws.len() as f64;
        let mut mean = vec![0.0; dim];
        for d in draws {
            for i in 0..dim {
                mean[i] += d[i];
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut m2 = vec![0.0; dim];
        let mut m4 = vec![0.0; dim];
        for d in draws {
            for i in 0..dim {
                let e = d[i] - mean[i];
                m2[i] += e * e;
                m4[i] += e.powi(4);
            }
        }
        let esd: Vec<f64> = m2.iter().map(|s| (s / (n - 1.0)).sqrt()).collect();
        let esd_se = (0..dim)
            .map(|i| {
                let var = m2[i] / n;
                let var_of_var = (m4[i] / n - var * var).max(0.0) / n;
                if esd[i] > 0.0 {
                    var_of_var.sqrt() / (2.0 * esd[i])
                } else {
                    0.0
                }
            })
            .collect();
        let asd = se.map(|rows| {
            let mut a = vec![0.0; dim];
            for r in rows {
                for i in 0..dim {
                    a[i] += r[i];
                }
            }
            a.iter().map(|v| v / n).collect()
        });
        Self {
            bias: mean.iter().zip(truth).map(|(m, t)| m - t).collect(),
            mean,
            esd,
            esd_se,
            asd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellReport {
    pub spec: SimSpec,
    pub names: Vec<String>,
    pub truth: Vec<f64>,
    pub n_used: usize,
    pub n_excluded: usize,
    pub qmle: Option<EstimatorStats>,
    pub vt: Option<EstimatorStats>,
    pub three_step: Option<EstimatorStats>,
    pub mean_h: f64,
    #[serde(skip)]
    pub outcomes: Vec<RepOutcome>,
}

/// Fits one replication; `Err` marks an excluded replication.
pub fn run_replication(spec: &SimSpec, rep: u64, opts: &CellOptions) -> Result<RepOutcome> {
    let series = simulate(spec, rep)?;
    let order = opts.fit_order.unwrap_or(spec.dgp.order());
    let bandwidth = match opts.bandwidth {
        Some(h) => Bandwidth::Fixed(h),
        None => Bandwidth::cv_with_pilot(order),
    };
    let fit = pipeline::fit_sgarch(&series, order, &bandwidth, Boundary::Reflection, &opts.qmle)?;
    if !fit.fit.converged {
        return Err(SgarchError::NotConverged(format!("replication {rep}")));
    }
    let theta_vt = if opts.variance_targeting {
        let vt = alt::fit_vt(&series, order, &opts.qmle)?;
        if !vt.converged {
            return Err(SgarchError::NotConverged(format!("variance targeting, replication {rep}")));
        }
        Some(vt.params.theta().to_vec())
    } else {
        None
    };
    let theta_three_step = if opts.three_step {
        let spec_k = KernelSpec::new(fit.fit.longrun.kernel, fit.h_used())?;
        Some(alt::three_step_update(&fit.fit, &series, &spec_k)?.theta_check)
    } else {
        None
    };
    Ok(RepOutcome {
        rep,
        theta_hat: fit.fit.params.theta().to_vec(),
        se: fit.cov.se.clone(),
        h_used: fit.h_used(),
        theta_vt,
        theta_three_step,
    })
}

/// Runs all replications of a cell and summarizes the converged ones.
pub fn run_cell(spec: &SimSpec, opts: &CellOptions) -> Result<CellReport> {
    spec.validate()?;
    let order = opts.fit_order.unwrap_or(spec.dgp.order());
    if order != spec.dgp.order() {
        return Err(SgarchError::InvalidConfig(
            "bias is only defined when the fitted order matches the design".into(),
        ));
    }
    let truth = spec.dgp.theta(spec.k);
    let results: Vec<Result<RepOutcome>> = (0..spec.n_reps as u64)
        .into_par_iter()
        .map(|rep| run_replication(spec, rep, opts))
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    for (rep, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => log::info!("cell {}/{}/{} replication {rep} excluded: {e}", spec.dgp, spec.tau_shape, spec.innovation),
        }
    }
    let n_used = outcomes.len();
    let n_excluded = spec.n_reps - n_used;
    let stats = |pick: &dyn Fn(&RepOutcome) -> Option<Vec<f64>>, with_se: bool| -> Option<EstimatorStats> {
        if n_used < 2 {
            return None;
        }
        let draws: Option<Vec<Vec<f64>>> = outcomes.iter().map(pick).collect();
        let se: Vec<Vec<f64>> = outcomes.iter().map(|o| o.se.clone()).collect();
        draws.map(|d| EstimatorStats::from_draws(&d, &truth, with_se.then_some(se.as_slice())))
    };
    let qmle = if n_used == 1 {
        let o = &outcomes[0];
        Some(EstimatorStats {
            mean: o.theta_hat.clone(),
            bias: o.theta_hat.iter().zip(&truth).map(|(a, b)| a - b).collect(),
            esd: vec![0.0; truth.len()],
            esd_se: vec![0.0; truth.len()],
            asd: Some(o.se.clone()),
        })
    } else {
        stats(&|o| Some(o.theta_hat.clone()), true)
    };
    let vt = stats(&|o| o.theta_vt.clone(), false);
    let three_step = stats(&|o| o.theta_three_step.clone(), false);
    let mean_h = if n_used > 0 {
        outcomes.iter().map(|o| o.h_used).sum::<f64>() / n_used as f64
    } else {
        f64::NAN
    };
    Ok(CellReport {
        spec: spec.clone(),
        names: order.names(),
        truth,
        n_used,
        n_excluded,
        qmle,
        vt,
        three_step,
        mean_h,
        outcomes,
    })
}

/// Runs a grid of cells in order.
pub fn run_cells(cells: &[SimSpec], opts: &CellOptions) -> Result<Vec<CellReport>> {
    cells.iter().map(|c| run_cell(c, opts)).collect()
}

/// One row per cell: design, counts, then Bias/ESD/ASD ×100 per coefficient.
pub fn write_cells_csv<W: Write>(reports: &[CellReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let max_dim = reports.iter().map(|r| r.names.len()).max().unwrap_or(0);
    let mut header: Vec<String> = ["dgp", "k", "tau", "dist", "T", "reps", "n_used", "n_excluded", "seed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let names = reports.first().map(|r| r.names.clone()).unwrap_or_default();
    let same_names = reports.iter().all(|r| r.names == names);
    for i in 0..max_dim {
        let label = if same_names { names[i].clone() } else { format!("coef{}", i + 1) };
        for stat in ["bias_x100", "esd_x100", "asd_x100"] {
            header.push(format!("{label}_{stat}"));
        }
    }
    w.write_record(&header)?;
    for r in reports {
        let s = &r.spec;
        let mut row = vec![
            s.dgp.to_string(),
            s.k.to_string(),
            s.tau_shape.to_string(),
            s.innovation.to_string(),
            s.n_obs.to_string(),
            s.n_reps.to_string(),
            r.n_used.to_string(),
            r.n_excluded.to_string(),
            s.seed.to_string(),
        ];
        for i in 0..max_dim {
            match r.qmle.as_ref().filter(|_| i < r.names.len()) {
                Some(st) => {
                    row.push(fmt_x100(st.bias[i]));
                    row.push(fmt_x100(st.esd[i]));
                    row.push(st.asd.as_ref().map_or(String::new(), |a| fmt_x100(a[i])));
                }
                None => row.extend([String::new(), String::new(), String::new()]),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt_x100(v: f64) -> String {
    format!("{:.4}", 100.0 * v)
}

/// Rejection-frequency experiment for an omitted GARCH coefficient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSpec {
    pub dgp: Dgp,
    pub tau_shape: TauShape,
    pub innovation: Innovation,
    #[serde(rename = "T")]
    pub n_obs: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub k_set: Vec<u32>,
    pub lags: Vec<usize>,
    pub level: f64,
}

impl PowerSpec {
    pub fn new(dgp: Dgp, n_obs: usize, n_reps: usize, seed: u64, k_set: Vec<u32>) -> Self {
        Self {
            dgp,
            tau_shape: TauShape::Constant,
            innovation: Innovation::Normal,
            n_obs,
            n_reps,
            seed,
            k_set,
            lags: DEFAULT_LAGS.to_vec(),
            level: 0.05,
        }
    }
}

/// p-values of the LM test and of Q(ℓ) for each lag, one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerDraw {
    pub rep: u64,
    pub lm_p: f64,
    pub q_p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerRow {
    pub k: u32,
    pub n_used: usize,
    pub n_excluded: usize,
    pub lm_rate: f64,
    /// Rejection rates aligned with `PowerSpec::lags`.
    pub q_rates: Vec<f64>,
    #[serde(skip)]
    pub draws: Vec<PowerDraw>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerReport {
    pub spec: PowerSpec,
    pub rows: Vec<PowerRow>,
}

/// Null S-GARCH(1,1) fit, LM against the design's order and Q(ℓ) on the null residuals.
pub fn power_replication(spec: &PowerSpec, k: u32, rep: u64, opts: &QmleOptions) -> Result<PowerDraw> {
    let extra = spec.dgp.deviation_index().ok_or_else(|| {
        SgarchError::InvalidConfig(format!("{} has no deviation coefficient", spec.dgp))
    })?;
    let sim = SimSpec {
        dgp: spec.dgp,
        k,
        tau_shape: spec.tau_shape,
        innovation: spec.innovation,
        n_obs: spec.n_obs,
        n_reps: spec.n_reps,
        seed: spec.seed,
    };
    let series = simulate(&sim, rep)?;
    let null_order = Order::new(1, 1)?;
    let alt_order = spec.dgp.order();
    let (lr, _) = pipeline::longrun_fit(&series, &Bandwidth::Cv(CvConfig::with_pilot(null_order)), Boundary::Reflection)?;
    let constraint = LinearConstraint::zeros(alt_order.dim(), &[extra])?;
    let lm = inference::lm_test(&series, &lr, alt_order, &constraint, opts)?;

    let mut theta_null = lm.restricted.params.theta().to_vec();
    theta_null.remove(extra);
    let null_params = GarchParams::new(null_order, theta_null)?;
    let filtered = FilteredSeries::compute(&series, &lr.tau_hat, &null_params)?;
    let q_p = spec
        .lags
        .iter()
        .map(|&ell| inference::portmanteau_filtered(&filtered, ell).map(|(r, _)| r.p_value))
        .collect::<Result<Vec<_>>>()?;
    Ok(PowerDraw { rep, lm_p: lm.report.p_value, q_p })
}

/// Rejection frequencies at `spec.level` for each k; common random numbers across k.
pub fn run_power_curves(spec: &PowerSpec, opts: &QmleOptions) -> Result<PowerReport> {
    if !(spec.level > 0.0 && spec.level < 1.0) {
        return Err(SgarchError::InvalidConfig(format!("level {} is not in (0, 1)", spec.level)));
    }
    let mut rows = Vec::with_capacity(spec.k_set.len());
    for &k in &spec.k_set {
        let results: Vec<Result<PowerDraw>> = (0..spec.n_reps as u64)
            .into_par_iter()
            .map(|rep| power_replication(spec, k, rep, opts))
            .collect();
        let mut draws = Vec::with_capacity(results.len());
        for (rep, r) in results.into_iter().enumerate() {
            match r {
                Ok(d) => draws.push(d),
                Err(e) => log::info!("{} k={k} replication {rep} excluded: {e}", spec.dgp),
            }
        }
        let n_used = draws.len();
        let rate = |ps: &mut dyn Iterator<Item = f64>| {
            if n_used == 0 {
                f64::NAN
            } else {
                ps.filter(|p| *p < spec.level).count() as f64 / n_used as f64
            }
        };
        let lm_rate = rate(&mut draws.iter().map(|d| d.lm_p));
        let q_rates = (0..spec.lags.len()).map(|i| rate(&mut draws.iter().map(|d| d.q_p[i]))).collect();
        rows.push(PowerRow { k, n_used, n_excluded: spec.n_reps - n_used, lm_rate, q_rates, draws });
    }
    Ok(PowerReport { spec: spec.clone(), rows })
}

/// Columns k, LM, Q(ℓ)..., counts.
pub fn write_power_csv<W: Write>(report: &PowerReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["k".to_string(), "lm".to_string()];
    header.extend(report.spec.lags.iter().map(|l| format!("q{l}")));
    header.extend(["n_used".to_string(), "n_excluded".to_string()]);
    w.write_record(&header)?;
    for r in &report.rows {
        let mut row = vec![r.k.to_string(), format!("{:.4}", r.lm_rate)];
        row.extend(r.q_rates.iter().map(|q| format!("{q:.4}")));
        row.extend([r.n_used.to_string(), r.n_excluded.to_string()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
