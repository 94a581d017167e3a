use std::sync::Arc;

use crate::error::{Error, Result};
use crate::forms::exterior::{interior_dz, lambda_matrix, wedge_dzbar, FormSpace};
use crate::linalg::{CMatrix, C64};
use crate::multi_index::binomial;

/// An `(n,q)`-form field with differentiable coefficients.
pub trait FormField: Sync {
    fn n(&self) -> usize;
    fn q(&self) -> usize;
    /// Coefficients at `z` in [`FormNQ`](crate::forms::FormNQ) order.
    fn value(&self, z: &[C64]) -> Vec<C64>;
    /// `∂g_I/∂z̄_l`, indexed `[l][I]`.
    fn dbar_partials(&self, z: &[C64]) -> Result<Vec<Vec<C64>>>;
}

/// A field with constant coefficients.
#[derive(Debug, Clone)]
pub struct ConstantField {
    n: usize,
    q: usize,
    coeffs: Vec<C64>,
}

impl ConstantField {
    pub fn new(n: usize, q: usize, coeffs: Vec<C64>) -> Result<Self> {
        if q > n || coeffs.len() != binomial(n, q) {
            return Err(Error::Input(format!("constant (n,q)=({n},{q}) field has wrong shape")));
        }
        Ok(Self { n, q, coeffs })
    }

    pub fn zero(n: usize, q: usize) -> Self {
        Self {
            n,
            q,
            coeffs: vec![C64::new(0.0, 0.0); binomial(n, q)],
        }
    }
}

impl FormField for ConstantField {
    fn n(&self) -> usize {
        self.n
    }

    fn q(&self) -> usize {
        self.q
    }

    fn value(&self, _: &[C64]) -> Vec<C64> {
        self.coeffs.clone()
    }

    fn dbar_partials(&self, _: &[C64]) -> Result<Vec<Vec<C64>>> {
        Ok(vec![vec![C64::new(0.0, 0.0); self.coeffs.len()]; self.n])
    }
}

type CoeffFn = dyn Fn(&[C64]) -> Vec<C64> + Send + Sync;

/// A field given only by its coefficients; `∂/∂z̄_l` comes from central
/// differences `½(δ_x + iδ_y)` with step `h`.
#[derive(Clone)]
pub struct FiniteDifferenceField {
    n: usize,
    q: usize,
    h: f64,
    f: Arc<CoeffFn>,
}

impl FiniteDifferenceField {
    pub fn new(n: usize, q: usize, h: f64, f: impl Fn(&[C64]) -> Vec<C64> + Send + Sync + 'static) -> Self {
        Self {
            n,
            q,
            h,
            f: Arc::new(f),
        }
    }
}

impl FormField for FiniteDifferenceField {
    fn n(&self) -> usize {
        self.n
    }

    fn q(&self) -> usize {
        self.q
    }

    fn value(&self, z: &[C64]) -> Vec<C64> {
        (self.f)(z)
    }

    fn dbar_partials(&self, z: &[C64]) -> Result<Vec<Vec<C64>>> {
        let h = self.h;
        let mut p = z.to_vec();
        let mut out = Vec::with_capacity(self.n);
        for l in 0..self.n {
            let mut diff = |d: C64| {
                p[l] = z[l] + d;
                let plus = (self.f)(&p);
                p[l] = z[l] - d;
                let minus = (self.f)(&p);
                p[l] = z[l];
                plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<C64>>()
            };
            let dx = diff(C64::new(h, 0.0));
            let dy = diff(C64::new(0.0, h));
            let d: Vec<C64> = dx.iter().zip(&dy).map(|(a, b)| 0.5 * (a + C64::i() * b)).collect();
            if d.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::Input(format!("coefficients not differentiable at {z:?}")));
            }
            out.push(d);
        }
        Ok(out)
    }
}

/// Precomputed constant-coefficient maps for `D′*` on `(n,q)`-forms.
///
/// `D′*` lands in `(n−1,q)`-forms, in [`FormSpace`] order.
#[derive(Debug, Clone)]
pub struct DPrimeStar {
    n: usize,
    q: usize,
    lambda: CMatrix,
    wedge_bar: Vec<CMatrix>,
    interior: Vec<CMatrix>,
    out_len: usize,
}

impl DPrimeStar {
    pub fn new(n: usize, q: usize) -> Result<Self> {
        if q == 0 || q > n {
            return Err(Error::Input(format!("D'* needs 1 <= q <= n, got q={q}, n={n}")));
        }
        let top = FormSpace::new(n, n, q)?;
        let low = FormSpace::new(n, n - 1, q - 1)?;
        let out = FormSpace::new(n, n - 1, q)?;
        let lambda = lambda_matrix(&top, &low);
        let wedge_bar = (0..n).map(|l| low.matrix_of(&out, |m| wedge_dzbar(l, m))).collect();
        let interior = (0..n).map(|j| top.matrix_of(&out, |m| interior_dz(j, m))).collect();
        Ok(Self {
            n,
            q,
            lambda,
            wedge_bar,
            interior,
            out_len: out.len(),
        })
    }

    pub fn output_len(&self) -> usize {
        self.out_len
    }

    fn check(&self, partials: &[Vec<C64>]) -> Result<()> {
        let len = binomial(self.n, self.q);
        if partials.len() != self.n || partials.iter().any(|p| p.len() != len) {
            return Err(Error::Input("partials have the wrong shape".into()));
        }
        Ok(())
    }

    /// `−i ∂̄(Λ g)`, the commutation-relation form valid for `∂̄`-closed `g`.
    pub fn closed(&self, partials: &[Vec<C64>]) -> Result<Vec<C64>> {
        self.check(partials)?;
        let mut out = vec![C64::new(0.0, 0.0); self.out_len];
        for (l, d) in partials.iter().enumerate() {
            let v = self.wedge_bar[l].matvec(&self.lambda.matvec(d));
            out.iter_mut().zip(v).for_each(|(o, x)| *o += C64::new(0.0, -1.0) * x);
        }
        Ok(out)
    }

    /// `−Σ_j ι_{z_j} ∂g/∂z̄_j`, the flat adjoint of `∂`.
    pub fn flat(&self, partials: &[Vec<C64>]) -> Result<Vec<C64>> {
        self.check(partials)?;
        let mut out = vec![C64::new(0.0, 0.0); self.out_len];
        for (j, d) in partials.iter().enumerate() {
            let v = self.interior[j].matvec(d);
            out.iter_mut().zip(v).for_each(|(o, x)| *o -= x);
        }
        Ok(out)
    }

    /// Adjoint of `D′ = ∂ − ∂(mψ)∧` in the weight `e^{−mψ}`, expanded as
    /// `e^{mψ} ∂*(e^{−mψ} g) − (∂(mψ)∧)* g`; `psi_bar[j] = ∂ψ/∂z̄_j`.
    /// The two `m`-dependent pieces cancel, leaving [`Self::flat`].
    pub fn weighted(&self, value: &[C64], partials: &[Vec<C64>], m: f64, psi_bar: &[C64]) -> Result<Vec<C64>> {
        self.check(partials)?;
        if psi_bar.len() != self.n || value.len() != binomial(self.n, self.q) {
            return Err(Error::Input("weight gradient or value has the wrong shape".into()));
        }
        let mut adjoint = vec![C64::new(0.0, 0.0); self.out_len];
        let mut connection = vec![C64::new(0.0, 0.0); self.out_len];
        for j in 0..self.n {
            let shifted: Vec<C64> = partials[j]
                .iter()
                .zip(value)
                .map(|(d, g)| d - m * psi_bar[j] * g)
                .collect();
            let v = self.interior[j].matvec(&shifted);
            adjoint.iter_mut().zip(v).for_each(|(o, x)| *o -= x);
            let w = self.interior[j].matvec(value);
            connection.iter_mut().zip(w).for_each(|(o, x)| *o += m * psi_bar[j] * x);
        }
        Ok(adjoint.iter().zip(&connection).map(|(a, b)| a - b).collect())
    }

    /// Coefficients of `∂̄g` as an `(n,q+1)`-form (empty when `q = n`).
    pub fn dbar(&self, partials: &[Vec<C64>]) -> Result<Vec<C64>> {
        self.check(partials)?;
        if self.q == self.n {
            return Ok(Vec::new());
        }
        let from = FormSpace::new(self.n, self.n, self.q)?;
        let to = FormSpace::new(self.n, self.n, self.q + 1)?;
        let mut out = vec![C64::new(0.0, 0.0); to.len()];
        for (l, d) in partials.iter().enumerate() {
            let v = from.matrix_of(&to, |m| wedge_dzbar(l, m)).matvec(d);
            out.iter_mut().zip(v).for_each(|(o, x)| *o += x);
        }
        Ok(out)
    }
}

/// `D′*g = −i ∂̄(Λ g)` at `z` for a `∂̄`-closed field.
pub fn dprime_star_closed(g: &dyn FormField, z: &[C64]) -> Result<Vec<C64>> {
    let ops = DPrimeStar::new(g.n(), g.q())?;
    ops.closed(&g.dbar_partials(z)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_sqr;

    #[test]
    fn constant_and_zero_fields_vanish() {
        let g = ConstantField::new(2, 1, vec![C64::new(1.0, 2.0), C64::new(-3.0, 0.0)]).unwrap();
        let z = [C64::new(0.1, 0.2), C64::new(0.3, 0.4)];
        assert!(norm_sqr(&dprime_star_closed(&g, &z).unwrap()) == 0.0);
        assert!(norm_sqr(&dprime_star_closed(&ConstantField::zero(3, 2), &[z[0]; 3]).unwrap()) == 0.0);
    }

    /// `g = ∂̄v` for an explicit `(n,q−1)` polynomial form `v`, so `g` is
    /// closed and both routes must agree.
    #[test]
    fn commutation_route_matches_flat_adjoint_on_exact_forms() {
        // n = 2, q = 1: v = z̄1² z2 + z1 z̄2³ (a function), g_l = ∂v/∂z̄_l
        let g = FiniteDifferenceField::new(2, 1, 1e-4, |z| {
            vec![2.0 * z[0].conj() * z[1], 3.0 * z[0] * z[1].conj().powi(2)]
        });
        let ops = DPrimeStar::new(2, 1).unwrap();
        for z in [[C64::new(0.3, -0.2), C64::new(0.1, 0.5)], [C64::new(-0.7, 0.1), C64::new(0.2, 0.2)]] {
            let p = g.dbar_partials(&z).unwrap();
            assert!(norm_sqr(&ops.dbar(&p).unwrap()) < 1e-14);
            let a = ops.closed(&p).unwrap();
            let b = ops.flat(&p).unwrap();
            let diff: Vec<C64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            assert!(norm_sqr(&diff) < 1e-20 * (1.0 + norm_sqr(&a)));
            let w = ops.weighted(&g.value(&z), &p, 1e3, &[C64::new(0.4, 1.0), C64::new(-2.0, 0.5)]).unwrap();
            let diff: Vec<C64> = w.iter().zip(&b).map(|(x, y)| x - y).collect();
            assert!(norm_sqr(&diff).sqrt() < 1e-10);
        }
    }

    #[test]
    fn non_closed_forms_are_detected() {
        // g = z̄1 dz̄2 is not closed: |∂̄g| = 1
        let g = FiniteDifferenceField::new(2, 1, 1e-4, |z| vec![C64::new(0.0, 0.0), z[0].conj()]);
        let ops = DPrimeStar::new(2, 1).unwrap();
        let p = g.dbar_partials(&[C64::new(0.1, 0.1), C64::new(0.2, 0.0)]).unwrap();
        assert!((norm_sqr(&ops.dbar(&p).unwrap()) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn non_differentiable_coefficients_rejected() {
        let g = FiniteDifferenceField::new(1, 1, 1e-3, |z| vec![C64::new(z[0].re.ln(), 0.0)]);
        assert!(matches!(dprime_star_closed(&g, &[C64::new(0.0005, 0.0)]), Err(Error::Input(_))));
    }
}
