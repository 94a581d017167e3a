use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{to_pairs, C64};
use crate::solver::dbar::{discretize_dbar, DbarOperator};
use crate::solver::grid::GridField;

pub const CG_TOLERANCE: f64 = 1e-9;
pub const CG_MAX_ITERATIONS: usize = 100_000;
/// Iterations allowed without a 1% drop of the best residual before the
/// right-hand side is declared inconsistent.
pub const STAGNATION_WINDOW: usize = 500;

const CHUNK: usize = 4096;

/// Inner product summed over fixed chunks in a fixed order, so results do
/// not depend on the thread count.
fn dot(x: &[C64], y: &[C64]) -> C64 {
    let partial: Vec<C64> = x
        .par_chunks(CHUNK)
        .zip(y.par_chunks(CHUNK))
        .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u.conj() * v).sum())
        .collect();
    partial.iter().sum()
}

fn norm(x: &[C64]) -> f64 {
    dot(x, x).re.sqrt()
}

#[derive(Debug, Clone)]
pub struct MinimalSolution {
    pub u: GridField,
    /// `Σ |u|² e^{−w} dV`.
    pub lhs: f64,
    pub cg_iterations: usize,
    /// Relative residual `|∂̄u − f| / |f|`.
    pub residual: f64,
}

/// The solution of `∂̄u = f` of least norm in `Σ|u|² e^{−w} dV`.
///
/// Solves `D W⁻¹ D* μ = f` (with `W = e^{−w}`) by conjugate gradients with
/// diagonal preconditioning, then sets `u = W⁻¹ D* μ`, which is orthogonal
/// to `ker D` in the weighted inner product by construction.
pub fn minimal_solution(f: &GridField, weight: &[f64]) -> Result<MinimalSolution> {
    let grid = &f.grid;
    if f.q == 0 {
        return Err(Error::Input("right-hand side must have degree q >= 1".into()));
    }
    if weight.len() != grid.len() {
        return Err(Error::Input(format!(
            "weight has {} values, grid has {} points",
            weight.len(),
            grid.len()
        )));
    }
    if let Some(p) = (0..grid.len()).find(|&p| grid.in_mask(p) && !weight[p].is_finite()) {
        return Err(Error::NonFinite(format!("weight at {:?}", grid.point(p))));
    }
    let op = discretize_dbar(grid, f.q)?;
    let width = op.to_width();
    if let Some(p) = (0..grid.len())
        .find(|&p| !grid.in_level(p, f.q) && f.values[p * width..(p + 1) * width].iter().any(|c| c.norm() > 0.0))
    {
        return Err(Error::Input(format!(
            "right-hand side must vanish within {} grid steps of the boundary; nonzero at {:?}",
            f.q,
            to_pairs(&grid.point(p))
        )));
    }
    let winv: Vec<f64> = weight
        .iter()
        .enumerate()
        .map(|(p, w)| if grid.in_level(p, f.q - 1) { w.exp() } else { 0.0 })
        .collect();

    let fnorm = norm(&f.values);
    if fnorm == 0.0 {
        return Ok(MinimalSolution {
            u: GridField::zeros(grid, f.q - 1)?,
            lhs: 0.0,
            cg_iterations: 0,
            residual: 0.0,
        });
    }

    let diag = op.normal_diagonal(&winv);
    let inv_diag: Vec<f64> = diag.iter().map(|d| if *d > 0.0 { 1.0 / d } else { 0.0 }).collect();

    let mut mu = vec![C64::new(0.0, 0.0); f.values.len()];
    let mut r = f.values.clone();
    let mut p: Vec<C64> = r.iter().zip(&inv_diag).map(|(x, d)| x * d).collect();
    // ‖r‖² and ⟨r, M⁻¹r⟩ for the diagonal preconditioner M
    let (mut rr, mut rz) = r
        .iter()
        .zip(&inv_diag)
        .fold((0.0, 0.0), |(a, b), (x, d)| (a + x.norm_sqr(), b + x.norm_sqr() * d));
    let mut v = vec![C64::new(0.0, 0.0); op.from_len()];
    let mut ap = vec![C64::new(0.0, 0.0); op.to_len()];
    let mut iterations = 0;
    let mut best = 1.0f64;
    let mut best_at = 0;
    loop {
        let rel = rr.sqrt() / fnorm;
        if rel <= CG_TOLERANCE {
            break;
        }
        if rel < 0.99 * best {
            best = rel;
            best_at = iterations;
        }
        if iterations - best_at > STAGNATION_WINDOW {
            return Err(Error::Inconsistent { residual: best });
        }
        if iterations >= CG_MAX_ITERATIONS {
            return Err(Error::SolverNoConvergence {
                iterations,
                residual: rel,
            });
        }
        op.adjoint_scaled_into(&p, &winv, &mut v);
        op.apply_into(&v, &mut ap);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            return Err(Error::Inconsistent { residual: rel });
        }
        let alpha = rz / pap;
        let parts: Vec<(f64, f64)> = mu
            .par_chunks_mut(CHUNK)
            .zip(r.par_chunks_mut(CHUNK))
            .zip(p.par_chunks(CHUNK))
            .zip(ap.par_chunks(CHUNK))
            .zip(inv_diag.par_chunks(CHUNK))
            .map(|((((mu, r), p), ap), d)| {
                let (mut a, mut b) = (0.0, 0.0);
                for i in 0..mu.len() {
                    mu[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                    let s = r[i].norm_sqr();
                    a += s;
                    b += s * d[i];
                }
                (a, b)
            })
            .collect();
        rr = parts.iter().map(|x| x.0).sum();
        let rz_new: f64 = parts.iter().map(|x| x.1).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_chunks_mut(CHUNK)
            .zip(r.par_chunks(CHUNK))
            .zip(inv_diag.par_chunks(CHUNK))
            .for_each(|((p, r), d)| {
                for i in 0..p.len() {
                    p[i] = r[i] * d[i] + beta * p[i];
                }
            });
        iterations += 1;
    }

    let u = GridField {
        grid: grid.clone(),
        q: f.q - 1,
        values: {
            op.adjoint_scaled_into(&mu, &winv, &mut v);
            v
        },
    };
    let du = op.apply(&u.values);
    let diff: Vec<C64> = du.iter().zip(&f.values).map(|(a, b)| a - b).collect();
    let residual = norm(&diff) / fnorm;
    let lhs = u.weighted_norm_sqr(weight);
    Ok(MinimalSolution {
        u,
        lhs,
        cg_iterations: iterations,
        residual,
    })
}

/// The discrete operator paired with a field, for callers that build
/// right-hand sides as `f = ∂̄v`.
pub fn dbar_of(v: &GridField) -> Result<GridField> {
    let op: DbarOperator = discretize_dbar(&v.grid, v.q + 1)?;
    op.apply_field(v)
}
