//! Plug-in estimate of the adaptive covariance
//! Σ = (κ − 1) J₁⁻¹ (J₁ + J₂) J₁⁻¹ and standard errors.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Result, SgarchError};
use crate::linalg;
use crate::qmle::FilteredSeries;

/// Sample moments shared by the covariance and the portmanteau test.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualMoments {
    /// κ̂ = (1/T) Σ η̂⁴.
    pub kappa: f64,
    /// (1/T) Σ ψ̂ ψ̂ᵀ.
    pub j1: DMatrix<f64>,
    /// (1/T) Σ ĝ².
    pub mean_g_sq: f64,
    /// (1/T) Σ ψ̂/ĝ.
    pub mean_psi_over_g: DVector<f64>,
}

impl ResidualMoments {
    pub fn compute(filtered: &FilteredSeries) -> Result<Self> {
        let n = filtered.len();
        if n == 0 {
            return Err(SgarchError::TooShort { needed: 1, got: 0 });
        }
        let dim = filtered.dim();
        let nf = n as f64;
        let mut kappa = 0.0;
        let mut mean_g_sq = 0.0;
        let mut j1 = DMatrix::zeros(dim, dim);
        let mut m = DVector::zeros(dim);
        for t in 0..n {
            let eta = filtered.eta_hat[t];
            let g = filtered.g_hat[t];
            let psi = &filtered.psi_hat[t];
            kappa += eta.powi(4);
            mean_g_sq += g * g;
            for i in 0..dim {
                m[i] += psi[i] / g;
                for j in 0..dim {
                    j1[(i, j)] += psi[i] * psi[j];
                }
            }
        }
        Ok(Self {
            kappa: kappa / nf,
            j1: j1 / nf,
            mean_g_sq: mean_g_sq / nf,
            mean_psi_over_g: m / nf,
        })
    }

    /// Ĵ₂ = ((1/T)Σĝ²)·m̂ m̂ᵀ with m̂ = (1/T)Σψ̂/ĝ.
    pub fn j2(&self) -> DMatrix<f64> {
        &self.mean_psi_over_g * self.mean_psi_over_g.transpose() * self.mean_g_sq
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticCov {
    pub kappa_hat: f64,
    pub j1_hat: DMatrix<f64>,
    pub j2_hat: DMatrix<f64>,
    pub sigma_hat: DMatrix<f64>,
    /// √(Σ̂_ii / T).
    pub se: Vec<f64>,
    pub n_obs: usize,
}

/// Serializable view with row-major matrices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovSummary {
    pub kappa_hat: f64,
    pub sigma_hat: Vec<f64>,
    pub se: Vec<f64>,
}

impl AsymptoticCov {
    pub fn summary(&self) -> CovSummary {
        CovSummary {
            kappa_hat: self.kappa_hat,
            sigma_hat: linalg::to_row_major(&self.sigma_hat),
            se: self.se.clone(),
        }
    }
}

/// (κ − 1) A⁻¹ (A + B) A⁻¹, symmetrized, with standard errors for `n` observations.
pub(crate) fn sandwich(
    kappa: f64,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    n: usize,
    what: &'static str,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let a_inv = linalg::sym_inverse(a, what)?;
    let s = (&a_inv * (a + b) * &a_inv) * (kappa - 1.0);
    let s = (&s + s.transpose()) * 0.5;
    let se = (0..s.nrows()).map(|i| (s[(i, i)].max(0.0) / n as f64).sqrt()).collect();
    Ok((s, se))
}

/// Σ̂_T from the filtered residuals at θ̂.
pub fn estimate_covariance(filtered: &FilteredSeries) -> Result<AsymptoticCov> {
    let mom = ResidualMoments::compute(filtered)?;
    let j2 = mom.j2();
    let (sigma, se) = sandwich(mom.kappa, &mom.j1, &j2, filtered.len(), "J1")?;
    Ok(AsymptoticCov {
        kappa_hat: mom.kappa,
        j1_hat: mom.j1,
        j2_hat: j2,
        sigma_hat: sigma,
        se,
        n_obs: filtered.len(),
    })
}
