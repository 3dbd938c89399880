//! Smoothing kernels on [-1, 1].

use crate::error::{Result, SgarchError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelKind {
    /// K(x) = 3/4 (1 - x²) on |x| ≤ 1.
    #[default]
    Epanechnikov,
}

impl KernelKind {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            KernelKind::Epanechnikov => {
                if x.abs() <= 1.0 {
                    0.75 * (1.0 - x * x)
                } else {
                    0.0
                }
            }
        }
    }

    /// ∫ K(x)² dx.
    pub fn roughness(self) -> f64 {
        match self {
            KernelKind::Epanechnikov => 0.6,
        }
    }

    /// C_r = ∫ x^r K(x) dx by composite Simpson quadrature.
    pub fn moment(self, r: u32) -> f64 {
        simpson(|x| x.powi(r as i32) * self.eval(x), -1.0, 1.0, 2000)
    }
}

pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// A kernel together with its bandwidth h ∈ (0, 0.5).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    bandwidth: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth < 0.5) {
            return Err(SgarchError::InvalidBandwidth {
                h: bandwidth,
                reason: "bandwidth must lie in (0, 0.5)",
            });
        }
        Ok(Self { kind, bandwidth })
    }

    pub fn epanechnikov(bandwidth: f64) -> Result<Self> {
        Self::new(KernelKind::Epanechnikov, bandwidth)
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.kind.eval(x)
    }

    /// K_h(u) = K(u/h)/h.
    pub fn scaled(&self, u: f64) -> f64 {
        self.kind.eval(u / self.bandwidth) / self.bandwidth
    }
}
