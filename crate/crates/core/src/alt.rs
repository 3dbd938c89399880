//! Variance-targeting estimator and the three-step updated estimator.

use nalgebra::{DMatrix, DVector};

use crate::asymptotics::{self, sandwich, AsymptoticCov};
use crate::data_io::ReturnSeries;
use crate::error::{Result, SgarchError};
use crate::kernel::KernelSpec;
use crate::linalg;
use crate::longrun::{tau_from_squares, LongRunFit};
use crate::qmle::{self, garch_filter, FilteredSeries, FitResult, GarchParams, Order, QmleOptions};

#[derive(Debug, Clone)]
pub struct VtResult {
    /// τ̄ = (1/T) Σ y_t².
    pub tau_bar: f64,
    pub params: GarchParams,
    pub filtered: FilteredSeries,
    pub cov: AsymptoticCov,
    pub loglik: f64,
    pub converged: bool,
}

/// τ̄ then QMLE on ū_t = y_t/√τ̄.
pub fn fit_vt(series: &ReturnSeries, order: Order, opts: &QmleOptions) -> Result<VtResult> {
    series.require_estimable()?;
    let n = series.len();
    let tau_bar = series.values().iter().map(|y| y * y).sum::<f64>() / n as f64;
    if !(tau_bar > 0.0) {
        return Err(SgarchError::Degenerate("all observations are zero".into()));
    }
    let longrun = LongRunFit::constant(tau_bar, n);
    let fit = qmle::fit_qmle(series, &longrun, order, None, opts)?;
    let cov = asymptotics::estimate_covariance(&fit.filtered)?;
    Ok(VtResult {
        tau_bar,
        params: fit.params,
        filtered: fit.filtered,
        cov,
        loglik: fit.loglik,
        converged: fit.converged,
    })
}

/// ∂l/∂τ for l(τ) = ln g + ln τ + y²/(τ g).
pub fn dl_dtau(tau: f64, y_sq: f64, g: f64) -> f64 {
    1.0 / tau - y_sq / (tau * tau * g)
}

/// ∂²l/∂τ².
pub fn d2l_dtau2(tau: f64, y_sq: f64, g: f64) -> f64 {
    -1.0 / (tau * tau) + 2.0 * y_sq / (tau * tau * tau * g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThreeStepResult {
    pub tau_check: Vec<f64>,
    /// θ̌ after one Newton step; may leave the parameter region.
    pub theta_check: Vec<f64>,
    pub order: Order,
    /// Points where the τ update was not positive and τ̂ was kept.
    pub tau_fallbacks: usize,
    /// Score ∂Ľ*/∂θ at θ̂.
    pub score: Vec<f64>,
}

impl ThreeStepResult {
    pub fn params(&self) -> Result<GarchParams> {
        GarchParams::new(self.order, self.theta_check.clone())
    }

    /// ω̌ = 1 − Σθ̌.
    pub fn omega(&self) -> f64 {
        1.0 - self.theta_check.iter().sum::<f64>()
    }

    /// γ̌ = 1 − Σβ̌.
    pub fn gamma(&self) -> f64 {
        1.0 - self.theta_check[self.order.q..].iter().sum::<f64>()
    }
}

/// One Newton step on τ at every t/T followed by one Newton step on θ.
pub fn three_step_update(fit: &FitResult, series: &ReturnSeries, spec: &KernelSpec) -> Result<ThreeStepResult> {
    if !fit.converged {
        return Err(SgarchError::NotConverged("three-step update needs a converged first fit".into()));
    }
    let n = series.len();
    let tau_hat = &fit.longrun.tau_hat;
    let g_hat = &fit.filtered.g_hat;
    if tau_hat.len() != n || g_hat.len() != n {
        return Err(SgarchError::InvalidConfig("fit and series lengths differ".into()));
    }
    let y_sq = series.squares();

    // Kernel averages (1/T)Σ K_h w_t and (1/T)Σ K_h y_t²/ĝ_t share the τ̂ window.
    let boundary = fit.longrun.boundary;
    let s0 = tau_from_squares(&vec![1.0; n], spec, boundary)?;
    let ratio: Vec<f64> = y_sq.iter().zip(g_hat).map(|(y, g)| y / g).collect();
    let s1 = tau_from_squares(&ratio, spec, boundary)?;

    let mut fallbacks = 0;
    let tau_check: Vec<f64> = (0..n)
        .map(|t| {
            let tau = tau_hat[t];
            // With τ fixed at τ̂(x), both averages are linear in s0 and s1.
            let first = s0[t] / tau - s1[t] / (tau * tau);
            let second = -s0[t] / (tau * tau) + 2.0 * s1[t] / (tau * tau * tau);
            let updated = tau - first / second;
            if updated > 0.0 && updated.is_finite() {
                updated
            } else {
                fallbacks += 1;
                tau
            }
        })
        .collect();
    if fallbacks > 0 {
        log::warn!("three-step update kept τ̂ at {fallbacks} points");
    }

    let u_sq: Vec<f64> = y_sq.iter().zip(&tau_check).map(|(y, t)| y / t).collect();
    let (theta_check, score) = newton_theta_step(&u_sq, &fit.params)?;

    Ok(ThreeStepResult {
        tau_check,
        theta_check,
        order: fit.params.order(),
        tau_fallbacks: fallbacks,
        score,
    })
}

/// θ̌ = θ̂ − H⁻¹S with the centered score S = Σ(ψ̌ − Ǧ)(1 − η̌²) and
/// H = Σ(ψ̌ψ̌ᵀ − ǦǦᵀ), on squares u² = y²/τ̌. Returns (θ̌, S).
pub fn newton_theta_step(u_sq: &[f64], theta_hat: &GarchParams) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = u_sq.len();
    let f = garch_filter(u_sq, theta_hat)?;
    let dim = f.dim();
    let nf = n as f64;
    let psi: Vec<DVector<f64>> = (0..n)
        .map(|t| DVector::from_iterator(dim, f.dg_at(t).iter().map(|d| d / f.g[t])))
        .collect();
    let g_bar = psi.iter().fold(DVector::zeros(dim), |a, p| a + p) / nf;
    let mut score = DVector::zeros(dim);
    let mut hess = DMatrix::zeros(dim, dim);
    for t in 0..n {
        let eta_sq = u_sq[t] / f.g[t];
        score += (&psi[t] - &g_bar) * (1.0 - eta_sq);
        hess += &psi[t] * psi[t].transpose();
    }
    hess -= &g_bar * g_bar.transpose() * nf;
    let theta = theta_hat.theta();
    if score.iter().all(|v| *v == 0.0) {
        return Ok((theta.to_vec(), score.iter().copied().collect()));
    }
    let step = linalg::sym_inverse(&hess, "three-step Hessian")? * &score;
    let updated = theta.iter().zip(step.iter()).map(|(a, s)| a - s).collect();
    Ok((updated, score.iter().copied().collect()))
}

/// Σ* = (κ − 1) J₁*⁻¹ (J₁* + J₂*) J₁*⁻¹ with sample averages and ω̌, γ̌ from θ̌.
pub fn sigma_star_plugin(three: &ThreeStepResult, filtered: &FilteredSeries) -> Result<AsymptoticCov> {
    let n = filtered.len();
    let dim = filtered.dim();
    let nf = n as f64;
    let mut psi_bar = DVector::zeros(dim);
    let mut inv_g_bar = 0.0;
    let mut psi_over_g = DVector::zeros(dim);
    let mut kappa = 0.0;
    for t in 0..n {
        let psi = DVector::from_column_slice(&filtered.psi_hat[t]);
        let g = filtered.g_hat[t];
        inv_g_bar += 1.0 / g;
        psi_over_g += &psi / g;
        psi_bar += psi;
        kappa += filtered.eta_hat[t].powi(4);
    }
    psi_bar /= nf;
    inv_g_bar /= nf;
    psi_over_g /= nf;
    kappa /= nf;

    let mut j1 = DMatrix::zeros(dim, dim);
    for p in &filtered.psi_hat {
        let c = DVector::from_column_slice(p) - &psi_bar;
        j1 += &c * c.transpose();
    }
    j1 /= nf;
    if j1.iter().all(|v| v.abs() < 1e-300) {
        return Err(SgarchError::Singular {
            what: "J1*",
            cond: f64::INFINITY,
        });
    }
    let v = &psi_bar * inv_g_bar - psi_over_g;
    let ratio = three.omega() / three.gamma();
    let j2 = &v * v.transpose() * (ratio * ratio);
    let (sigma, se) = sandwich(kappa, &j1, &j2, n, "J1*")?;
    Ok(AsymptoticCov {
        kappa_hat: kappa,
        j1_hat: j1,
        j2_hat: j2,
        sigma_hat: sigma,
        se,
        n_obs: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::longrun::{estimate_tau, Boundary};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn garch_series(n: usize, seed: u64, scale: impl Fn(f64) -> f64) -> ReturnSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (0.1, 0.8);
        let (mut g, mut u2): (f64, f64) = (1.0, 1.0);
        let mut y = Vec::with_capacity(n);
        for t in 0..n + 200 {
            g = 1.0 - a - b + a * u2 + b * g;
            let e: f64 = rng.sample(StandardNormal);
            let u = g.sqrt() * e;
            u2 = u * u;
            if t >= 200 {
                let x = (t - 200 + 1) as f64 / n as f64;
                y.push(scale(x).sqrt() * u);
            }
        }
        ReturnSeries::new(y, "y").unwrap()
    }

    #[test]
    fn tau_bar_example() {
        let mut v = vec![1.0, -1.0, 2.0, -2.0];
        v = v.repeat(15);
        let s = ReturnSeries::new(v, "").unwrap();
        let r = fit_vt(&s, Order::new(1, 1).unwrap(), &QmleOptions::default()).unwrap();
        assert_relative_eq!(r.tau_bar, 2.5, epsilon = 1e-15);
    }

    #[test]
    fn vt_is_scale_invariant() {
        let s = garch_series(1500, 1, |_| 1.0);
        let order = Order::new(1, 1).unwrap();
        let opts = QmleOptions::default();
        let a = fit_vt(&s, order, &opts).unwrap();
        for c in [4.0, 0.37, 12.5] {
            let scaled = ReturnSeries::new(s.values().iter().map(|y| y * c).collect(), "").unwrap();
            let b = fit_vt(&scaled, order, &opts).unwrap();
            assert_relative_eq!(b.tau_bar, a.tau_bar * c * c, max_relative = 1e-13);
            for (x, y) in a.params.theta().iter().zip(b.params.theta()) {
                assert!((x - y).abs() < 1e-10, "{x} vs {y}");
            }
        }
        // Powers of two scale exactly.
        let scaled = ReturnSeries::new(s.values().iter().map(|y| y * 4.0).collect(), "").unwrap();
        assert_eq!(fit_vt(&scaled, order, &opts).unwrap().params, a.params);
    }

    #[test]
    fn tau_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let l = |tau: f64, y: f64, g: f64| g.ln() + tau.ln() + y / (tau * g);
        for _ in 0..20 {
            let tau = rng.random_range(0.3..3.0);
            let y = rng.random_range(0.01..5.0);
            let g = rng.random_range(0.3..2.0);
            let h = 1e-5 * tau;
            let d1 = (l(tau + h, y, g) - l(tau - h, y, g)) / (2.0 * h);
            let d2 = (dl_dtau(tau + h, y, g) - dl_dtau(tau - h, y, g)) / (2.0 * h);
            assert!((dl_dtau(tau, y, g) - d1).abs() <= 1e-6 * d1.abs().max(1e-3));
            assert!((d2l_dtau2(tau, y, g) - d2).abs() <= 1e-6 * d2.abs().max(1e-3));
        }
    }

    fn first_fit(s: &ReturnSeries, h: f64) -> (FitResult, KernelSpec) {
        let spec = KernelSpec::epanechnikov(h).unwrap();
        let lr = estimate_tau(s, &spec, Boundary::Reflection).unwrap();
        let fit = qmle::fit_qmle(s, &lr, Order::new(1, 1).unwrap(), None, &QmleOptions::default()).unwrap();
        (fit, spec)
    }

    #[test]
    fn three_step_moves_little_and_keeps_tau_positive() {
        let s = garch_series(2000, 3, |x| 1.0 + 2.0 * x);
        let (fit, spec) = first_fit(&s, 0.1);
        let three = three_step_update(&fit, &s, &spec).unwrap();
        assert!(three.tau_check.iter().all(|t| *t > 0.0));
        for (a, b) in fit.params.theta().iter().zip(&three.theta_check) {
            assert!((a - b).abs() < 0.05, "{a} vs {b}");
        }
        let sigma = sigma_star_plugin(&three, &fit.filtered).unwrap();
        assert!((0..2).all(|i| sigma.sigma_hat[(i, i)] >= 0.0));
        assert!(linalg::rank(&sigma.j2_hat) <= 1);
    }

    #[test]
    fn zero_score_leaves_theta() {
        // ω + α + β = 1 exactly in binary, so u² ≡ 1 gives ĝ ≡ 1 and η² ≡ 1.
        let p = GarchParams::new(Order::new(1, 1).unwrap(), vec![0.25, 0.5]).unwrap();
        let (theta, score) = newton_theta_step(&[1.0; 100], &p).unwrap();
        assert_eq!(score, vec![0.0, 0.0]);
        assert_eq!(theta, vec![0.25, 0.5]);
    }

    #[test]
    fn omega_and_gamma_of_update() {
        let three = ThreeStepResult {
            tau_check: vec![1.0; 4],
            theta_check: vec![0.1, 0.8],
            order: Order::new(1, 1).unwrap(),
            tau_fallbacks: 0,
            score: vec![0.0, 0.0],
        };
        assert_eq!(three.params().unwrap().theta(), &[0.1, 0.8]);
        assert_relative_eq!(three.omega(), 0.1, epsilon = 1e-15);
        assert_relative_eq!(three.gamma(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn constant_psi_is_singular() {
        let s = garch_series(300, 4, |_| 1.0);
        let (fit, spec) = first_fit(&s, 0.2);
        let three = three_step_update(&fit, &s, &spec).unwrap();
        let mut f = fit.filtered.clone();
        f.psi_hat.iter_mut().for_each(|p| *p = vec![0.3, -0.2]);
        assert!(matches!(sigma_star_plugin(&three, &f), Err(SgarchError::Singular { .. })));
    }
}
