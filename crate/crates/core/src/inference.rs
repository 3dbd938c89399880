//! LM test for linear restrictions and the portmanteau test on squared
//! standardized residuals.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::asymptotics::{self, ResidualMoments};
use crate::data_io::ReturnSeries;
use crate::error::{Result, SgarchError};
use crate::linalg;
use crate::longrun::LongRunFit;
pub use crate::qmle::LinearConstraint;
use crate::qmle::{self, FilteredSeries, FitResult, Order, QmleOptions};

/// Levels at which decisions are reported.
pub const REPORT_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

/// Lag choices exposed by default for the portmanteau test.
pub const DEFAULT_LAGS: [usize; 3] = [6, 9, 12];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Keyed by level formatted as text, e.g. "0.05".
    pub reject_at: BTreeMap<String, bool>,
}

impl TestReport {
    pub fn chi_squared(statistic: f64, df: usize) -> Self {
        let p_value = chi2_sf(statistic, df);
        let reject_at = REPORT_LEVELS
            .iter()
            .map(|l| (format!("{l:.2}"), p_value < *l))
            .collect();
        Self {
            statistic,
            df,
            p_value,
            reject_at,
        }
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Upper tail 1 − F_{χ²_df}(x).
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    (1.0 - dist.cdf(x)).clamp(0.0, 1.0)
}

/// Score ∂L̂/∂θ = Σ ψ̂_t (1 − η̂_t²) at the filtered estimate.
pub fn score(filtered: &FilteredSeries) -> DVector<f64> {
    let mut s = DVector::zeros(filtered.dim());
    for (psi, eta) in filtered.psi_hat.iter().zip(&filtered.eta_hat) {
        let w = 1.0 - eta * eta;
        for (i, p) in psi.iter().enumerate() {
            s[i] += p * w;
        }
    }
    s
}

/// LM_T = (1/T) sᵀ J₁⁻¹ Rᵀ (R Σ Rᵀ)⁻¹ R J₁⁻¹ s from quantities at θ̂_{T|0}.
pub fn lm_statistic(filtered: &FilteredSeries, constraint: &LinearConstraint) -> Result<TestReport> {
    let r = constraint.matrix();
    if r.ncols() != filtered.dim() {
        return Err(SgarchError::InvalidConfig(format!(
            "R has {} columns but the model has {} coefficients",
            r.ncols(),
            filtered.dim()
        )));
    }
    // Unit-norm rows; the statistic does not depend on row scale.
    let mut r = r.clone();
    for mut row in r.row_iter_mut() {
        let norm = row.norm();
        if norm > 0.0 {
            row /= norm;
        }
    }
    let r = &r;
    let s = score(filtered);
    let cov = asymptotics::estimate_covariance(filtered)?;
    let j1_inv = linalg::sym_inverse(&cov.j1_hat, "J1")?;
    let middle = linalg::sym_inverse(&(r * &cov.sigma_hat * r.transpose()), "R Sigma R'")?;
    let v = r * &j1_inv * &s;
    let stat = (v.transpose() * middle * &v)[(0, 0)] / filtered.len() as f64;
    Ok(TestReport::chi_squared(stat.max(0.0), constraint.rank()))
}

/// Result of an LM test along with the restricted fit.
#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub report: TestReport,
    pub restricted: FitResult,
}

/// Fits θ̂_{T|0} under the constraint and computes LM_T.
pub fn lm_test(
    series: &ReturnSeries,
    longrun: &LongRunFit,
    order: Order,
    constraint: &LinearConstraint,
    opts: &QmleOptions,
) -> Result<LmOutcome> {
    let restricted = qmle::fit_qmle_constrained(series, longrun, order, constraint, opts)?;
    if !restricted.converged {
        return Err(SgarchError::NotConverged("constrained fit for the LM test".into()));
    }
    let report = lm_statistic(&restricted.filtered, constraint)?;
    Ok(LmOutcome { report, restricted })
}

/// ρ̂_k, k = 1..ℓ, of η̂² around its sample mean.
pub fn squared_residual_acf(eta_hat: &[f64], ell: usize) -> Result<Vec<f64>> {
    let n = eta_hat.len();
    if ell == 0 || 2 * ell >= n {
        return Err(SgarchError::InvalidConfig(format!(
            "lag count {ell} must satisfy 1 ≤ ℓ < T/2 with T = {n}"
        )));
    }
    let sq: Vec<f64> = eta_hat.iter().map(|e| e * e).collect();
    let mean = sq.iter().sum::<f64>() / n as f64;
    let den: f64 = sq.iter().map(|v| (v - mean).powi(2)).sum();
    if !(den > 0.0) {
        return Err(SgarchError::Degenerate("squared residuals are constant".into()));
    }
    Ok((1..=ell)
        .map(|k| (k..n).map(|t| (sq[t] - mean) * (sq[t - k] - mean)).sum::<f64>() / den)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortmanteauInternals {
    pub rho_hat: Vec<f64>,
    /// ℓ × (p+q), row k is D̂_k.
    pub d_hat: DMatrix<f64>,
    pub h_hat: Vec<f64>,
    pub f_hat: Vec<f64>,
    pub sigma_p1: DMatrix<f64>,
    pub sigma_p2: DMatrix<f64>,
    pub sigma_p: DMatrix<f64>,
}

/// Σ̂_P and ρ̂ from filtered residuals.
pub fn portmanteau_internals(filtered: &FilteredSeries, ell: usize) -> Result<PortmanteauInternals> {
    let rho_hat = squared_residual_acf(&filtered.eta_hat, ell)?;
    let n = filtered.len();
    let nf = n as f64;
    let dim = filtered.dim();
    let mom = ResidualMoments::compute(filtered)?;
    let e2: Vec<f64> = filtered.eta_hat.iter().map(|e| e * e - 1.0).collect();

    let mut d_hat = DMatrix::zeros(ell, dim);
    let mut h_hat = vec![0.0; ell];
    let mut f_hat = vec![0.0; ell];
    for k in 1..=ell {
        let (mut h, mut f) = (0.0, 0.0);
        for t in k..n {
            let w = e2[t - k];
            let g = filtered.g_hat[t];
            h += w / g;
            f += w * g;
            for (i, p) in filtered.psi_hat[t].iter().enumerate() {
                d_hat[(k - 1, i)] += w * p;
            }
        }
        h_hat[k - 1] = h / nf;
        f_hat[k - 1] = f / nf;
    }
    d_hat /= nf;

    let j1_inv = linalg::sym_inverse(&mom.j1, "J1")?;
    let big = ell + 1 + dim;
    let mut p1 = DMatrix::zeros(ell, big);
    p1.view_mut((0, 0), (ell, ell)).fill_with_identity();
    for k in 0..ell {
        p1[(k, ell)] = -h_hat[k];
    }
    p1.view_mut((0, ell + 1), (ell, dim)).copy_from(&(-(&d_hat * &j1_inv)));

    let m = &mom.mean_psi_over_g;
    let eg2 = mom.mean_g_sq;
    let f_vec = DVector::from_column_slice(&f_hat);
    let mut p2 = DMatrix::zeros(big, big);
    p2.view_mut((0, 0), (ell, ell))
        .copy_from(&(DMatrix::identity(ell, ell) * (mom.kappa - 1.0)));
    p2.view_mut((0, ell), (ell, 1)).copy_from(&f_vec);
    p2.view_mut((0, ell + 1), (ell, dim))
        .copy_from(&(&d_hat - &f_vec * m.transpose()));
    p2[(ell, ell)] = eg2;
    p2.view_mut((ell, ell + 1), (1, dim)).copy_from(&(-m.transpose() * eg2));
    p2.view_mut((ell + 1, ell + 1), (dim, dim)).copy_from(&(&mom.j1 + mom.j2()));
    for i in 0..big {
        for j in 0..i {
            p2[(i, j)] = p2[(j, i)];
        }
    }

    if !(mom.kappa > 1.0) {
        return Err(SgarchError::Degenerate("residual kurtosis κ̂ ≤ 1".into()));
    }
    let sp = (&p1 * &p2 * p1.transpose()) / (mom.kappa - 1.0);
    let sigma_p = (&sp + sp.transpose()) * 0.5;
    Ok(PortmanteauInternals {
        rho_hat,
        d_hat,
        h_hat,
        f_hat,
        sigma_p1: p1,
        sigma_p2: p2,
        sigma_p,
    })
}

/// Q = T ρ̂ᵀ Σ̂_P⁻¹ ρ̂ with ℓ degrees of freedom.
pub fn portmanteau_statistic(rho: &[f64], sigma_p: &DMatrix<f64>, n_obs: usize) -> Result<TestReport> {
    let inv = linalg::spd_inverse(sigma_p, "Sigma_P")?;
    let r = DVector::from_column_slice(rho);
    let q = (r.transpose() * inv * &r)[(0, 0)] * n_obs as f64;
    Ok(TestReport::chi_squared(q.max(0.0), rho.len()))
}

/// Q_T(ℓ) from filtered residuals.
pub fn portmanteau_filtered(filtered: &FilteredSeries, ell: usize) -> Result<(TestReport, PortmanteauInternals)> {
    let internals = portmanteau_internals(filtered, ell)?;
    let report = portmanteau_statistic(&internals.rho_hat, &internals.sigma_p, filtered.len())?;
    Ok((report, internals))
}

/// Q_T(ℓ) for a converged fit.
pub fn portmanteau_test(fit: &FitResult, ell: usize) -> Result<(TestReport, PortmanteauInternals)> {
    if !fit.converged {
        return Err(SgarchError::NotConverged("portmanteau test needs a converged fit".into()));
    }
    portmanteau_filtered(&fit.filtered, ell)
}

/// One-sample Kolmogorov–Smirnov test against U(0,1): (D_n, asymptotic p-value).
pub fn ks_uniform(sample: &[f64]) -> (f64, f64) {
    let n = sample.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let nf = n as f64;
    let d = x
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let v = v.clamp(0.0, 1.0);
            ((i + 1) as f64 / nf - v).max(v - i as f64 / nf)
        })
        .fold(0.0f64, f64::max);
    let sn = nf.sqrt();
    (d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d))
}

/// P(K > λ) for the Kolmogorov distribution.
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmle::GarchParams;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn garch_u(theta: &[f64], n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (theta[0], theta[1]);
        let (mut g, mut u2) = (1.0, 1.0);
        let mut out = Vec::with_capacity(n);
        for t in 0..n + 200 {
            g = 1.0 - a - b + a * u2 + b * g;
            let e: f64 = rng.sample(StandardNormal);
            let u = g.sqrt() * e;
            u2 = u * u;
            if t >= 200 {
                out.push(u);
            }
        }
        out
    }

    fn fitted(n: usize, seed: u64) -> FilteredSeries {
        let u = garch_u(&[0.1, 0.8], n, seed);
        let u_sq: Vec<f64> = u.iter().map(|x| x * x).collect();
        let fit = qmle::fit_squares(&u_sq, Order::new(1, 1).unwrap(), None, &QmleOptions::default()).unwrap();
        FilteredSeries::from_u(u, &fit.params).unwrap()
    }

    fn textbook_acf(x: &[f64], k: usize) -> f64 {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let c0: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let ck: f64 = x.windows(k + 1).map(|w| (w[0] - mean) * (w[k] - mean)).sum::<f64>() / n;
        ck / c0
    }

    #[test]
    fn acf_matches_textbook_routine() {
        let eta: Vec<f64> = (0..100).map(|t| if t % 2 == 0 { 1.0 } else { 2f64.sqrt() }).collect();
        let rho = squared_residual_acf(&eta, 3).unwrap();
        let sq: Vec<f64> = eta.iter().map(|e| e * e).collect();
        for k in 1..=3 {
            assert!((rho[k - 1] - textbook_acf(&sq, k)).abs() < 1e-12);
        }
        assert_relative_eq!(rho[0], -0.99, epsilon = 1e-12);
    }

    #[test]
    fn acf_rejects_constant_and_long_lags() {
        assert!(matches!(squared_residual_acf(&[1.0; 20], 2), Err(SgarchError::Degenerate(_))));
        assert!(squared_residual_acf(&[1.0, 2.0, 3.0, 4.0], 2).is_err());
    }

    #[test]
    fn iid_acf_inside_bartlett_band() {
        let n = 1000;
        let reps = 200;
        let mut inside = 0;
        let mut total = 0;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..reps {
            let eta: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            for r in squared_residual_acf(&eta, 6).unwrap() {
                total += 1;
                if r.abs() <= 3.0 / (n as f64).sqrt() {
                    inside += 1;
                }
            }
        }
        assert!(inside as f64 / total as f64 >= 0.99);
    }

    #[test]
    fn zero_rho_gives_zero_q() {
        let f = fitted(1000, 1);
        let internals = portmanteau_internals(&f, 6).unwrap();
        let rep = portmanteau_statistic(&[0.0; 6], &internals.sigma_p, 1000).unwrap();
        assert_eq!(rep.statistic, 0.0);
        assert_eq!(rep.p_value, 1.0);
        let (rep, _) = portmanteau_filtered(&f, 6).unwrap();
        assert!(rep.statistic > 0.0);
    }

    #[test]
    fn portmanteau_matrices_are_symmetric_and_bounded() {
        let f = fitted(1500, 2);
        let (_, int) = portmanteau_filtered(&f, 9).unwrap();
        assert!(int.rho_hat.iter().all(|r| r.abs() <= 1.0));
        assert_eq!(int.sigma_p2, int.sigma_p2.transpose());
        assert_eq!(int.sigma_p, int.sigma_p.transpose());
        assert_eq!(int.sigma_p1.shape(), (9, 9 + 1 + 2));
    }

    #[test]
    fn zero_score_gives_zero_lm() {
        let mut f = fitted(800, 3);
        // Pairs with equal ψ̂ and η̂² = 1 ∓ 1/2 cancel in the score.
        for t in 0..f.len() {
            f.eta_hat[t] = if t % 2 == 0 { 0.5f64.sqrt() } else { 1.5f64.sqrt() };
            if t % 2 == 1 {
                f.psi_hat[t] = f.psi_hat[t - 1].clone();
            }
        }
        let c = LinearConstraint::zeros(2, &[1]).unwrap();
        let rep = lm_statistic(&f, &c).unwrap();
        assert!(rep.statistic.abs() < 1e-20, "{}", rep.statistic);
        assert_relative_eq!(rep.p_value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn fully_pinned_lm_is_well_posed() {
        let u = garch_u(&[0.1, 0.8], 3000, 4);
        let p = GarchParams::new(Order::new(1, 1).unwrap(), vec![0.1, 0.8]).unwrap();
        let f = FilteredSeries::from_u(u, &p).unwrap();
        let c = LinearConstraint::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.1, 0.8]).unwrap();
        let rep = lm_statistic(&f, &c).unwrap();
        assert!(rep.statistic.is_finite());
        assert_eq!(rep.df, 2);
        assert_relative_eq!(rep.p_value, chi2_sf(rep.statistic, 2), epsilon = 0.0);
    }

    #[test]
    fn chi2_tail_values() {
        assert_relative_eq!(chi2_sf(3.841458820694124, 1), 0.05, epsilon = 1e-9);
        assert_relative_eq!(chi2_sf(12.591587243743977, 6), 0.05, epsilon = 1e-9);
        assert_eq!(chi2_sf(0.0, 3), 1.0);
    }

    #[test]
    fn ks_detects_non_uniformity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..500).map(|_| rng.random::<f64>()).collect();
        assert!(ks_uniform(&u).1 > 0.01);
        let skewed: Vec<f64> = u.iter().map(|v| v * v).collect();
        assert!(ks_uniform(&skewed).1 < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lm_invariant_to_row_scaling(s1 in 0.01f64..100.0, s2 in -100.0f64..-0.01, seed in 0u64..50) {
            let u = garch_u(&[0.1, 0.8], 600, seed);
            let p = GarchParams::new(Order::new(2, 1).unwrap(), vec![0.1, 0.5, 0.2]).unwrap();
            let f = FilteredSeries::from_u(u, &p).unwrap();
            let c = LinearConstraint::from_rows(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, -1.0]], &[0.5, -0.1]).unwrap();
            let a = lm_statistic(&f, &c).unwrap().statistic;
            let b = lm_statistic(&f, &c.scale_rows(&[s1, s2]).unwrap()).unwrap().statistic;
            prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-12), "{} vs {}", a, b);
        }

        #[test]
        fn q_is_nonnegative_and_zero_only_at_zero(seed in 0u64..50, scale in prop_oneof![Just(0.0), 1e-4f64..0.1]) {
            let f = fitted(600, seed);
            let int = portmanteau_internals(&f, 6).unwrap();
            let rho: Vec<f64> = int.rho_hat.iter().map(|r| r * scale).collect();
            // Small samples can give an indefinite Σ̂_P, which is refused.
            let Ok(rep) = portmanteau_statistic(&rho, &int.sigma_p, 600) else {
                prop_assert!(int.sigma_p.clone().symmetric_eigenvalues().min() <= 0.0);
                return Ok(());
            };
            let q = rep.statistic;
            prop_assert!(q >= 0.0);
            prop_assert_eq!(q == 0.0, scale == 0.0);
        }
    }
}
