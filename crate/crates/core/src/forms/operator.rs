use crate::error::{Error, Result};
use crate::forms::form::{FormNQ, OperatorNQ};
use crate::geometry::bundle::CurvatureAtPoint;
use crate::linalg::{norm_sqr, CMatrix, Cholesky, HermitianMatrix, C64};
use crate::multi_index::{insert_sign, IndexBasis};

/// The curvature operator `[iΘ, Λ]` on `(n,q)`-forms, assembled from
///
/// `⟨Af, f⟩ = Σ_{j,k} Σ_{|K|=q−1} ⟨Θ_{jk̄} f_{jK}, f_{kK}⟩`
///
/// where `f_{jK} = ε(j,K) f_{{j}∪K}` is the antisymmetric extension. The
/// block in row `{k}∪K`, column `{j}∪K` collects `ε(k,K)ε(j,K)Θ_{jk̄}`. In
/// particular `A = Θᵀ` for `q = 1`, and `A = Σ_j Θ_{jj̄}` for `q = n`.
pub fn commutator_operator(theta: &CurvatureAtPoint, q: usize) -> Result<OperatorNQ> {
    let (n, r) = (theta.n(), theta.r());
    if q == 0 || q > n {
        return Err(Error::Input(format!("commutator operator needs 1 <= q <= n, got q={q}, n={n}")));
    }
    let target = IndexBasis::new(n, q)?;
    let dim = target.len() * r;
    let mut a = CMatrix::zeros(dim, dim);
    for k_index in IndexBasis::new(n, q - 1)?.iter() {
        let k_mask = k_index.mask();
        for j in 0..n {
            let Some((sj, col_mask)) = insert_sign(j, k_mask) else { continue };
            let col = target.position_of_mask(col_mask).expect("degree-q index");
            for k in 0..n {
                let Some((sk, row_mask)) = insert_sign(k, k_mask) else { continue };
                let row = target.position_of_mask(row_mask).expect("degree-q index");
                let block = theta.block(j, k);
                let s = C64::new(sj * sk, 0.0);
                for alpha in 0..r {
                    for beta in 0..r {
                        a[(row * r + alpha, col * r + beta)] += s * block[(alpha, beta)];
                    }
                }
            }
        }
    }
    OperatorNQ::new(n, q, r, HermitianMatrix::new(a)?)
}

/// [`commutator_operator`] for a line bundle with curvature matrix `Θ`.
pub fn commutator_of_hermitian(theta: &HermitianMatrix, q: usize) -> Result<OperatorNQ> {
    commutator_operator(&CurvatureAtPoint::from_hermitian(theta), q)
}

/// `[∂∂̄ψ, Λ] + c` on scalar `(n,q)`-forms; must be positive definite.
pub fn twist_operator(h_psi: &HermitianMatrix, c: f64, q: usize) -> Result<OperatorNQ> {
    twist_operator_rank(h_psi, c, q, 1)
}

/// [`twist_operator`] tensored with `Id_r`, for `E`-valued forms.
pub fn twist_operator_rank(h_psi: &HermitianMatrix, c: f64, q: usize, r: usize) -> Result<OperatorNQ> {
    if !c.is_finite() || c < 0.0 {
        return Err(Error::Input(format!("c must be finite and non-negative, got {c}")));
    }
    if r == 0 {
        return Err(Error::Input("rank must be >= 1".into()));
    }
    let n = h_psi.dim();
    let blocks = (0..n * n)
        .map(|i| CMatrix::identity(r).scale(h_psi.get(i / n, i % n)))
        .collect();
    let theta = CurvatureAtPoint::new(n, r, blocks)?;
    let a = commutator_operator(&theta, q)?.shifted(c);
    Cholesky::factor(a.matrix()).map_err(|e| match e {
        Error::Definiteness(msg) => Error::Definiteness(format!("twist operator ([ddbar psi, Lambda] + {c}): {msg}")),
        other => other,
    })?;
    Ok(a)
}

/// Solves `A g = f` for positive definite `A`.
pub fn apply_inverse(a: &OperatorNQ, f: &FormNQ) -> Result<FormNQ> {
    if (f.n(), f.q(), f.r()) != (a.n(), a.q(), a.r()) {
        return Err(Error::Input("form and operator shapes differ".into()));
    }
    let chol = Cholesky::factor(a.matrix())?;
    let b = f.coefficients();
    let mut g = chol.solve(b);
    // one step of iterative refinement
    let ag = a.matrix().matrix().matvec(&g);
    let resid: Vec<C64> = b.iter().zip(&ag).map(|(x, y)| x - y).collect();
    let corr = chol.solve(&resid);
    g.iter_mut().zip(&corr).for_each(|(x, d)| *x += d);

    let ag = a.matrix().matrix().matvec(&g);
    let resid: Vec<C64> = b.iter().zip(&ag).map(|(x, y)| x - y).collect();
    let (rn, bn) = (norm_sqr(&resid).sqrt(), norm_sqr(b).sqrt());
    if rn > 1e-10 * bn.max(f64::MIN_POSITIVE) && rn > 0.0 {
        return Err(Error::Definiteness(format!(
            "operator too ill-conditioned: residual {rn:.3e} for |f| = {bn:.3e}"
        )));
    }
    FormNQ::from_coefficients(a.n(), a.q(), a.r(), g)
}
