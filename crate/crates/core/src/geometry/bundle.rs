use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::hessian::complex_hessian;
use crate::geometry::weight::Weight;
use crate::linalg::{CMatrix, HermitianMatrix, C64};

/// Tolerance for `Θ_{jk̄}* = Θ_{kj̄}`.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Curvature blocks `Θ_{jk̄}` (each `r×r`) of a rank-`r` bundle over
/// `ℂ^n`, evaluated at one point. Block `(j,k)` is stored at `j*n + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureAtPoint {
    n: usize,
    r: usize,
    blocks: Vec<CMatrix>,
}

impl CurvatureAtPoint {
    pub fn new(n: usize, r: usize, blocks: Vec<CMatrix>) -> Result<Self> {
        if n == 0 || r == 0 {
            return Err(Error::Input("curvature needs n >= 1 and r >= 1".into()));
        }
        if blocks.len() != n * n {
            return Err(Error::Input(format!("expected {} curvature blocks, got {}", n * n, blocks.len())));
        }
        if blocks.iter().any(|b| b.rows() != r || b.cols() != r) {
            return Err(Error::Input(format!("curvature blocks must be {r}x{r}")));
        }
        if blocks.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("curvature block".into()));
        }
        let scale = 1.0 + blocks.iter().map(|b| b.max_abs()).fold(0.0, f64::max);
        for j in 0..n {
            for k in 0..n {
                let defect = blocks[j * n + k].adjoint().sub(&blocks[k * n + j]).max_abs();
                if defect > SYMMETRY_TOLERANCE * scale {
                    return Err(Error::Input(format!(
                        "curvature is not Hermitian: |Θ_{}{}* - Θ_{}{}| = {defect:.3e}",
                        j + 1,
                        k + 1,
                        k + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { n, r, blocks })
    }

    /// Line-bundle curvature: `r = 1` with `Θ_{jk̄} = H_{jk}`.
    pub fn from_hermitian(h: &HermitianMatrix) -> Self {
        let n = h.dim();
        let blocks = (0..n * n)
            .map(|i| CMatrix::from_fn(1, 1, |_, _| h.get(i / n, i % n)))
            .collect();
        Self { n, r: 1, blocks }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn block(&self, j: usize, k: usize) -> &CMatrix {
        &self.blocks[j * self.n + k]
    }

    /// The curvature as one Hermitian matrix on `ℂ^n ⊗ ℂ^r`, row index
    /// `j*r + α`.
    pub fn full_matrix(&self) -> HermitianMatrix {
        let (n, r) = (self.n, self.r);
        let m = CMatrix::from_fn(n * r, n * r, |row, col| self.block(row / r, col / r)[(row % r, col % r)]);
        HermitianMatrix::new(m).expect("validated blocks")
    }

    /// `Σ_j Θ_{jj̄}`, the trace of the curvature with respect to the
    /// Euclidean metric.
    pub fn trace_operator(&self) -> HermitianMatrix {
        let mut t = CMatrix::zeros(self.r, self.r);
        for j in 0..self.n {
            t = t.add(self.block(j, j));
        }
        HermitianMatrix::new(t).expect("validated blocks")
    }

    /// `(M_a)_{jk} = ⟨Θ_{jk̄} a, a⟩`.
    pub fn directional(&self, a: &[C64]) -> HermitianMatrix {
        let n = self.n;
        let m = CMatrix::from_fn(n, n, |j, k| {
            let ta = self.block(j, k).matvec(a);
            ta.iter().zip(a).map(|(x, y)| x * y.conj()).sum()
        });
        HermitianMatrix::new(m).expect("finite directional curvature")
    }
}

type BlockFn = dyn Fn(&[C64]) -> Result<CurvatureAtPoint> + Send + Sync;

/// A curvature field `z ↦ (Θ_{jk̄}(z))`.
#[derive(Clone)]
pub struct BundleCurvature {
    n: usize,
    r: usize,
    label: String,
    eval: Arc<BlockFn>,
}

impl fmt::Debug for BundleCurvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundleCurvature")
            .field("n", &self.n)
            .field("r", &self.r)
            .field("label", &self.label)
            .finish()
    }
}

impl BundleCurvature {
    pub fn new(
        n: usize,
        r: usize,
        label: impl Into<String>,
        f: impl Fn(&[C64]) -> Result<CurvatureAtPoint> + Send + Sync + 'static,
    ) -> Self {
        Self {
            n,
            r,
            label: label.into(),
            eval: Arc::new(f),
        }
    }

    /// The same blocks at every point.
    pub fn constant(at: CurvatureAtPoint) -> Self {
        let (n, r) = (at.n, at.r);
        Self::new(n, r, "constant", move |_| Ok(at.clone()))
    }

    /// Curvature `∂∂̄φ` of the line bundle with metric `e^{-φ}`.
    pub fn from_weight(w: &Weight, h_step: f64) -> Self {
        let w = w.clone();
        let label = format!("ddbar({})", w.label());
        Self::new(w.dim(), 1, label, move |z| {
            Ok(CurvatureAtPoint::from_hermitian(&complex_hessian(&w, z, h_step)?))
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn at(&self, z: &[C64]) -> Result<CurvatureAtPoint> {
        if z.len() != self.n {
            return Err(Error::Input(format!(
                "point has dimension {}, curvature has base dimension {}",
                z.len(),
                self.n
            )));
        }
        let c = (self.eval)(z)?;
        if c.n != self.n || c.r != self.r {
            return Err(Error::Input(format!(
                "curvature evaluator returned n={}, r={}; expected n={}, r={}",
                c.n, c.r, self.n, self.r
            )));
        }
        Ok(c)
    }
}
