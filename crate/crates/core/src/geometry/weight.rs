use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::domain::Domain;
use crate::linalg::{CMatrix, HermitianMatrix, C64};

pub type ScalarFn = dyn Fn(&[C64]) -> f64 + Send + Sync;
pub type HessianFn = dyn Fn(&[C64]) -> HermitianMatrix + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Exact,
    FiniteDifference,
}

/// A smooth real function `φ` on (a domain in) `ℂ^n`, standing for the
/// metric `h = e^{-φ}` or a twisting weight `ψ`.
///
/// Second derivatives come from an exact Hessian closure when one is
/// attached, otherwise from central differences.
#[derive(Clone)]
pub struct Weight {
    n: usize,
    label: String,
    eval: Arc<ScalarFn>,
    hessian: Option<Arc<HessianFn>>,
    domain: Option<Domain>,
}

impl fmt::Debug for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Weight")
            .field("n", &self.n)
            .field("label", &self.label)
            .field("mode", &self.mode())
            .field("domain", &self.domain)
            .finish()
    }
}

impl Weight {
    pub fn new(n: usize, label: impl Into<String>, f: impl Fn(&[C64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            n,
            label: label.into(),
            eval: Arc::new(f),
            hessian: None,
            domain: None,
        }
    }

    pub fn with_exact_hessian(mut self, h: impl Fn(&[C64]) -> HermitianMatrix + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    /// Drops any exact Hessian so derivatives fall back to finite differences.
    pub fn finite_difference(mut self) -> Self {
        self.hessian = None;
        self
    }

    /// Restricts the weight to `domain`; finite-difference Hessians then
    /// enforce a boundary margin.
    pub fn on_domain(mut self, domain: Domain) -> Result<Self> {
        if domain.dim() != self.n {
            return Err(Error::Input(format!(
                "domain dimension {} does not match weight dimension {}",
                domain.dim(),
                self.n
            )));
        }
        self.domain = Some(domain);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> Option<&Domain> {
        self.domain.as_ref()
    }

    pub fn mode(&self) -> DerivativeMode {
        if self.hessian.is_some() {
            DerivativeMode::Exact
        } else {
            DerivativeMode::FiniteDifference
        }
    }

    pub fn eval(&self, z: &[C64]) -> f64 {
        debug_assert_eq!(z.len(), self.n);
        (self.eval)(z)
    }

    pub fn exact_hessian(&self, z: &[C64]) -> Option<HermitianMatrix> {
        self.hessian.as_ref().map(|h| h(z))
    }

    /// `φ(z) = Σ_{j,k} A_{jk} z_j z̄_k`, whose complex Hessian is `A`.
    pub fn hermitian_quadratic(a: &HermitianMatrix) -> Self {
        let n = a.dim();
        let m = a.matrix().clone();
        let h = a.clone();
        Self::new(n, format!("hermitian_quadratic({n})"), move |z| {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                for k in 0..n {
                    s += m[(j, k)] * z[j] * z[k].conj();
                }
            }
            s.re
        })
        .with_exact_hessian(move |_| h.clone())
    }

    /// `φ(z) = Σ_j a_j |z_j|²`.
    pub fn diagonal_quadratic(coeffs: &[f64]) -> Self {
        let a = HermitianMatrix::diagonal(coeffs).expect("finite coefficients");
        let mut w = Self::hermitian_quadratic(&a);
        w.label = format!("diagonal_quadratic({coeffs:?})");
        w
    }

    /// `|z|²`, the potential of the Euclidean metric.
    pub fn norm_squared(n: usize) -> Self {
        let mut w = Self::diagonal_quadratic(&vec![1.0; n]);
        w.label = "|z|^2".into();
        w
    }

    pub fn zero(n: usize) -> Self {
        Self::new(n, "0", |_| 0.0).with_exact_hessian(move |_| HermitianMatrix::new(CMatrix::zeros(n, n)).unwrap())
    }

    /// `self + other`; exact only when both summands are.
    pub fn add(&self, other: &Weight) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Input("adding weights of different dimension".into()));
        }
        let (a, b) = (self.eval.clone(), other.eval.clone());
        let mut w = Self::new(self.n, format!("({}) + ({})", self.label, other.label), move |z| a(z) + b(z));
        if let (Some(ha), Some(hb)) = (self.hessian.clone(), other.hessian.clone()) {
            w = w.with_exact_hessian(move |z| {
                HermitianMatrix::new(ha(z).matrix().add(hb(z).matrix())).expect("finite Hessian")
            });
        }
        w.domain = self.domain.clone().or_else(|| other.domain.clone());
        Ok(w)
    }

    /// `s · self`.
    pub fn scaled(&self, s: f64) -> Self {
        let a = self.eval.clone();
        let mut w = Self::new(self.n, format!("{s} * ({})", self.label), move |z| s * a(z));
        if let Some(h) = self.hessian.clone() {
            w = w.with_exact_hessian(move |z| {
                HermitianMatrix::new(h(z).matrix().scale(C64::new(s, 0.0))).expect("finite Hessian")
            });
        }
        w.domain = self.domain.clone();
        w
    }

    /// `ζ ↦ φ(base + V ζ)`. The complex Hessian transforms as `Vᵀ H V̄`.
    pub fn compose_affine(&self, base: Vec<C64>, v: CMatrix) -> Result<Self> {
        if base.len() != self.n || v.rows() != self.n || v.cols() != self.n {
            return Err(Error::Input("affine change of coordinates has wrong shape".into()));
        }
        let n = self.n;
        let map = {
            let base = base.clone();
            let v = v.clone();
            move |zeta: &[C64]| -> Vec<C64> {
                let vz = v.matvec(zeta);
                base.iter().zip(vz).map(|(b, d)| b + d).collect()
            }
        };
        let f = self.eval.clone();
        let map_f = map.clone();
        let mut w = Self::new(n, format!("{} ∘ affine", self.label), move |zeta| f(&map_f(zeta)));
        if let Some(h) = self.hessian.clone() {
            let vt = v.transpose();
            let vbar = v.conj();
            w = w.with_exact_hessian(move |zeta| {
                let hz = h(&map(zeta));
                HermitianMatrix::new(vt.matmul(hz.matrix()).matmul(&vbar)).expect("finite Hessian")
            });
        }
        Ok(w)
    }

    /// Largest deviation between the exact Hessian and its central-difference
    /// estimate with step `h_step` over `points`. Errors if the deviation
    /// exceeds `tolerance`; returns 0 for finite-difference weights.
    pub fn spot_check_hessian(&self, points: &[Vec<C64>], h_step: f64, tolerance: f64) -> Result<f64> {
        let Some(hess) = &self.hessian else {
            return Ok(0.0);
        };
        let mut worst = 0.0f64;
        for z in points {
            let exact = hess(z);
            let fd = crate::geometry::hessian::finite_difference_hessian(self, z, h_step)?;
            worst = worst.max(exact.matrix().sub(fd.matrix()).max_abs());
        }
        if worst > tolerance {
            return Err(Error::Input(format!(
                "exact Hessian of '{}' disagrees with finite differences by {worst:.3e}",
                self.label
            )));
        }
        Ok(worst)
    }
}
