use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{apply_inverse, twist_operator, FormNQ};
use crate::geometry::hessian::{complex_hessian, DEFAULT_H_STEP};
use crate::geometry::weight::Weight;
use crate::linalg::{to_pairs, C64};
use crate::solver::cg::{minimal_solution, CG_TOLERANCE};
use crate::solver::grid::GridField;

/// Both sides of the twisted estimate
/// `∫|u|² e^{−φ−ψ} ≤ ∫⟨([∂∂̄ψ, Λ] + c)⁻¹ f, f⟩ e^{−φ−ψ}` for the minimal `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: usize,
    pub q: usize,
    pub c: f64,
    pub points_per_axis: usize,
    pub phi: String,
    pub psi: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, or 0 when `f = 0`.
    pub ratio: f64,
    pub cg_iterations: usize,
    pub residual: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub report: SolveReport,
    pub u: GridField,
}

/// Grid values of `φ + ψ` at masked points (0 elsewhere).
pub fn total_weight(f: &GridField, phi: &Weight, psi: &Weight) -> Result<Vec<f64>> {
    let grid = &f.grid;
    (0..grid.len())
        .into_par_iter()
        .map(|p| {
            if !grid.in_mask(p) {
                return Ok(0.0);
            }
            let z = grid.point(p);
            let v = phi.eval(&z) + psi.eval(&z);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite(format!("weight phi + psi at {:?}", to_pairs(&z))))
            }
        })
        .collect()
}

pub fn estimate_ratio(f: &GridField, phi: &Weight, psi: &Weight, c: f64, q: usize) -> Result<Estimate> {
    let grid = &f.grid;
    let n = grid.n();
    if f.q != q {
        return Err(Error::Input(format!("f has degree {}, expected q={q}", f.q)));
    }
    if !c.is_finite() || c < 0.0 {
        return Err(Error::Input(format!("c must be finite and non-negative, got {c}")));
    }
    if phi.dim() != n || psi.dim() != n {
        return Err(Error::Input("weights must live on the grid's C^n".into()));
    }
    let band = f.margin_band_max();
    if band > 0.0 {
        return Err(Error::Input(format!(
            "f must vanish on the margin band near the boundary (found |f| = {band:.3e})"
        )));
    }
    let weight = total_weight(f, phi, psi)?;

    let rhs_terms: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|p| {
            let fp = f.at(p);
            if !grid.in_mask(p) || fp.iter().all(|x| *x == C64::new(0.0, 0.0)) {
                return Ok(0.0);
            }
            let z = grid.point(p);
            let h = complex_hessian(psi, &z, DEFAULT_H_STEP)?;
            let t = twist_operator(&h, c, q).map_err(|e| match e {
                Error::Definiteness(m) => Error::Definiteness(format!("at {:?}: {m}", to_pairs(&z))),
                other => other,
            })?;
            let form = FormNQ::from_coefficients(n, q, 1, fp.to_vec())?;
            let g = apply_inverse(&t, &form)?;
            let s: f64 = g.coefficients().iter().zip(fp).map(|(a, b)| (a * b.conj()).re).sum();
            Ok(s * (-weight[p]).exp())
        })
        .collect::<Result<_>>()?;
    let rhs = rhs_terms.iter().sum::<f64>() * grid.cell_volume();

    let solution = minimal_solution(f, &weight)?;
    let ratio = if rhs > 0.0 { solution.lhs / rhs } else { 0.0 };

    Ok(Estimate {
        report: SolveReport {
            n,
            q,
            c,
            points_per_axis: grid.points_per_axis(),
            phi: phi.label().to_string(),
            psi: psi.label().to_string(),
            lhs: solution.lhs,
            rhs,
            ratio,
            cg_iterations: solution.cg_iterations,
            residual: solution.residual,
            tolerance: CG_TOLERANCE,
        },
        u: solution.u,
    })
}
