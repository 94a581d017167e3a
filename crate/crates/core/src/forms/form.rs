use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{from_pairs, norm_sqr, to_pairs, CMatrix, HermitianMatrix, C64};
use crate::multi_index::{binomial, multi_indices, MultiIndex};

fn check_shape(n: usize, q: usize, r: usize) -> Result<usize> {
    if n == 0 || r == 0 {
        return Err(Error::Input(format!("need n >= 1 and r >= 1, got n={n}, r={r}")));
    }
    if q > n {
        return Err(Error::Input(format!("form degree q={q} exceeds n={n}")));
    }
    Ok(binomial(n, q) * r)
}

/// Coefficients of `f = Σ_I f_I dz_1∧⋯∧dz_n∧dz̄_I` with `f_I ∈ ℂ^r`,
/// flattened as multi-index (lexicographic) major, rank minor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FormWire", into = "FormWire")]
pub struct FormNQ {
    n: usize,
    q: usize,
    r: usize,
    coeffs: Vec<C64>,
}

impl FormNQ {
    pub fn zeros(n: usize, q: usize, r: usize) -> Result<Self> {
        let len = check_shape(n, q, r)?;
        Ok(Self {
            n,
            q,
            r,
            coeffs: vec![C64::new(0.0, 0.0); len],
        })
    }

    pub fn from_coefficients(n: usize, q: usize, r: usize, coeffs: Vec<C64>) -> Result<Self> {
        let len = check_shape(n, q, r)?;
        if coeffs.len() != len {
            return Err(Error::Input(format!(
                "(n,q)=({n},{q}) rank {r} form needs {len} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite("form coefficients".into()));
        }
        Ok(Self { n, q, r, coeffs })
    }

    /// `e_I ⊗ e_α`, the monomial with a single unit coefficient.
    pub fn basis(n: usize, q: usize, r: usize, index: &MultiIndex, alpha: usize) -> Result<Self> {
        let mut f = Self::zeros(n, q, r)?;
        let pos = multi_indices(n, q)?
            .iter()
            .position(|m| m == index)
            .ok_or_else(|| Error::Input(format!("multi-index {index} is not of degree {q} in C^{n}")))?;
        if alpha >= r {
            return Err(Error::Input(format!("bundle index {alpha} out of range for rank {r}")));
        }
        f.coeffs[pos * r + alpha] = C64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coeffs
    }

    /// The `r`-vector `f_I` for the `k`-th multi-index.
    pub fn component(&self, k: usize) -> &[C64] {
        &self.coeffs[k * self.r..(k + 1) * self.r]
    }

    /// Pointwise norm with orthonormal monomials.
    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.coeffs)
    }
}

#[derive(Serialize, Deserialize)]
struct FormWire {
    n: usize,
    q: usize,
    r: usize,
    ordering: Vec<MultiIndex>,
    coefficients: Vec<[f64; 2]>,
}

fn check_ordering(n: usize, q: usize, ordering: &[MultiIndex]) -> Result<()> {
    if ordering != multi_indices(n, q)?.as_slice() {
        return Err(Error::Input(format!(
            "ordering must list the degree-{q} multi-indices of C^{n} lexicographically"
        )));
    }
    Ok(())
}

impl TryFrom<FormWire> for FormNQ {
    type Error = Error;

    fn try_from(w: FormWire) -> Result<Self> {
        check_shape(w.n, w.q, w.r)?;
        check_ordering(w.n, w.q, &w.ordering)?;
        Self::from_coefficients(w.n, w.q, w.r, from_pairs(&w.coefficients))
    }
}

impl From<FormNQ> for FormWire {
    fn from(f: FormNQ) -> Self {
        Self {
            n: f.n,
            q: f.q,
            r: f.r,
            ordering: multi_indices(f.n, f.q).expect("validated shape"),
            coefficients: to_pairs(&f.coeffs),
        }
    }
}

/// A Hermitian operator on the coefficient space of [`FormNQ`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorWire", into = "OperatorWire")]
pub struct OperatorNQ {
    n: usize,
    q: usize,
    r: usize,
    matrix: HermitianMatrix,
}

impl OperatorNQ {
    pub fn new(n: usize, q: usize, r: usize, matrix: HermitianMatrix) -> Result<Self> {
        let len = check_shape(n, q, r)?;
        if matrix.dim() != len {
            return Err(Error::Input(format!(
                "operator on (n,q)=({n},{q}) rank {r} forms must be {len}x{len}, got {}",
                matrix.dim()
            )));
        }
        Ok(Self { n, q, r, matrix })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    fn check_form(&self, f: &FormNQ) -> Result<()> {
        if (f.n, f.q, f.r) != (self.n, self.q, self.r) {
            return Err(Error::Input(format!(
                "operator acts on (n,q,r)=({},{},{}), form is ({},{},{})",
                self.n, self.q, self.r, f.n, f.q, f.r
            )));
        }
        Ok(())
    }

    pub fn apply(&self, f: &FormNQ) -> Result<FormNQ> {
        self.check_form(f)?;
        let coeffs = self.matrix.matrix().matvec(&f.coeffs);
        FormNQ::from_coefficients(self.n, self.q, self.r, coeffs)
    }

    /// `⟨A f, f⟩`.
    pub fn quadratic_form(&self, f: &FormNQ) -> Result<f64> {
        self.check_form(f)?;
        Ok(self.matrix.quadratic_form(&f.coeffs))
    }

    /// `⟨A x, x⟩` on raw coefficients, unchecked beyond length.
    pub fn quadratic_form_raw(&self, x: &[C64]) -> f64 {
        self.matrix.quadratic_form(x)
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            matrix: self.matrix.add_scaled_identity(c),
            ..self.clone()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct OperatorWire {
    n: usize,
    q: usize,
    r: usize,
    ordering: Vec<MultiIndex>,
    /// Row-major entries.
    matrix: Vec<[f64; 2]>,
}

impl TryFrom<OperatorWire> for OperatorNQ {
    type Error = Error;

    fn try_from(w: OperatorWire) -> Result<Self> {
        let len = check_shape(w.n, w.q, w.r)?;
        check_ordering(w.n, w.q, &w.ordering)?;
        if w.matrix.len() != len * len {
            return Err(Error::Input(format!("operator matrix needs {} entries", len * len)));
        }
        let m = CMatrix::from_row_major(len, len, from_pairs(&w.matrix))?;
        let h = HermitianMatrix::new(m.clone())?;
        if h.matrix().sub(&m).max_abs() > 1e-12 * (1.0 + m.max_abs()) {
            return Err(Error::Input("operator matrix is not Hermitian".into()));
        }
        Self::new(w.n, w.q, w.r, h)
    }
}

impl From<OperatorNQ> for OperatorWire {
    fn from(a: OperatorNQ) -> Self {
        Self {
            n: a.n,
            q: a.q,
            r: a.r,
            ordering: multi_indices(a.n, a.q).expect("validated shape"),
            matrix: to_pairs(a.matrix.matrix().as_slice()),
        }
    }
}
