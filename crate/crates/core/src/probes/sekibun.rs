use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{commutator_of_hermitian, DPrimeStar, FormField};
use crate::geometry::hessian::{complex_hessian, DEFAULT_H_STEP};
use crate::geometry::weight::Weight;
use crate::linalg::{norm_sqr, C64};
use crate::probes::probe::{ProbeConfig, ProbeForm};
use crate::probes::quadrature::{ball_quadrature, BallLevel, BallQuadrature};

/// Largest change of the functional under one quadrature refinement,
/// relative to the quadrature magnitude.
pub const RESOLUTION_LIMIT: f64 = 0.02;
/// Nodes at which the weighted form of `D′*` is compared against the
/// closed form, per scheduled `m`.
pub const DEVIATION_NODES: usize = 4096;

/// One evaluation of the functional
/// `R(m) = ∫|D′*g|² e^{−mψ} + ∫⟨(A − c)g, g⟩ e^{−mψ}`, `ψ = |ζ|² − r²/4`.
///
/// Values are stored without the constant factor `e^{mr²/4}`, which would
/// overflow for large `m`: `R(m) = e^{log_factor} · r_scaled`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SekibunValue {
    pub m: f64,
    pub r_scaled: f64,
    pub log_factor: f64,
    pub first_term: f64,
    pub second_term: f64,
    /// `∫(|first integrand| + |second integrand|) e^{−m|ζ|²}`.
    pub scale: f64,
}

/// The two integrands at the nodes of a ball quadrature. Neither depends on `m`.
#[derive(Debug, Clone)]
pub struct Integrands {
    r: f64,
    radius_sq: Vec<f64>,
    weights: Vec<f64>,
    first: Vec<f64>,
    second: Vec<f64>,
}

impl Integrands {
    pub fn evaluate(g: &dyn FormField, rotated: &Weight, c: f64, quad: &BallQuadrature) -> Result<Self> {
        let (n, q) = (g.n(), g.q());
        if rotated.dim() != n || quad.n != n {
            return Err(Error::Input("probe, weight and quadrature dimensions differ".into()));
        }
        let ops = DPrimeStar::new(n, q)?;
        let pairs: Vec<(f64, f64)> = (0..quad.len())
            .into_par_iter()
            .map(|i| {
                let z = quad.node(i);
                let value = g.value(z);
                if value.iter().all(|x| *x == C64::new(0.0, 0.0)) {
                    return Ok((0.0, 0.0));
                }
                let a = norm_sqr(&ops.closed(&g.dbar_partials(z)?)?);
                let h = complex_hessian(rotated, z, DEFAULT_H_STEP)?;
                let op = commutator_of_hermitian(&h, q)?;
                let b = op.quadratic_form_raw(&value) - c * norm_sqr(&value);
                Ok((a, b))
            })
            .collect::<Result<_>>()?;
        let (first, second) = pairs.into_iter().unzip();
        Ok(Self {
            r: quad.r,
            radius_sq: (0..quad.len()).map(|i| norm_sqr(quad.node(i))).collect(),
            weights: quad.weights.clone(),
            first,
            second,
        })
    }

    pub fn value(&self, m: f64) -> SekibunValue {
        let (mut first, mut second, mut scale) = (0.0, 0.0, 0.0);
        for i in 0..self.weights.len() {
            let w = self.weights[i] * (-m * self.radius_sq[i]).exp();
            first += w * self.first[i];
            second += w * self.second[i];
            scale += w * (self.first[i].abs() + self.second[i].abs());
        }
        SekibunValue {
            m,
            r_scaled: first + second,
            log_factor: m * self.r * self.r / 4.0,
            first_term: first,
            second_term: second,
            scale,
        }
    }

    /// Maxima of `|D′*g|²` and `|⟨(A − c)g, g⟩|` over annulus nodes `|ζ| > r/2`.
    pub fn annulus_bounds(&self) -> (f64, f64) {
        let inner = 0.25 * self.r * self.r;
        let mut c1 = 0.0f64;
        let mut c2 = 0.0f64;
        for i in 0..self.weights.len() {
            if self.radius_sq[i] > inner {
                c1 = c1.max(self.first[i]);
                c2 = c2.max(self.second[i].abs());
            }
        }
        (c1, c2)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `R(m)` for one `m` on the base quadrature.
pub fn sekibun_functional(g: &dyn FormField, cfg: &ProbeConfig, w: &Weight, c: f64, m: f64) -> Result<SekibunValue> {
    check_m(m)?;
    let quad = ball_quadrature(cfg.n, cfg.r, BallLevel::base(cfg.n))?;
    Ok(Integrands::evaluate(g, &cfg.rotated_weight(w)?, c, &quad)?.value(m))
}

fn check_m(m: f64) -> Result<()> {
    if m.is_finite() && m > 0.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("m must be positive, got {m}")))
    }
}

/// Largest gap, relative to `max(1, max |D′*g|²)`, between `|D′*g|²` from
/// the closed form and from the weighted form `e^{mψ}∂*(e^{−mψ}g) − (∂(mψ)∧)*g`
/// over all `m` in `schedule`, at up to [`DEVIATION_NODES`] quadrature nodes.
pub fn dprime_star_deviation(g: &dyn FormField, quad: &BallQuadrature, schedule: &[f64]) -> Result<f64> {
    let ops = DPrimeStar::new(g.n(), g.q())?;
    let stride = quad.len().div_ceil(DEVIATION_NODES).max(1);
    let per_node: Vec<(f64, f64)> = (0..quad.len())
        .step_by(stride)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|i| {
            let z = quad.node(i);
            let value = g.value(z);
            let partials = g.dbar_partials(z)?;
            let closed = norm_sqr(&ops.closed(&partials)?);
            // ∂ψ/∂z̄_j = ζ_j for ψ = |ζ|² − r²/4
            let mut worst = 0.0f64;
            for &m in schedule {
                let weighted = norm_sqr(&ops.weighted(&value, &partials, m, z)?);
                worst = worst.max((weighted - closed).abs());
            }
            Ok((worst, closed))
        })
        .collect::<Result<_>>()?;
    let top = per_node.iter().fold(1.0f64, |a, p| a.max(p.1));
    Ok(per_node.iter().fold(0.0f64, |a, p| a.max(p.0)) / top)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SekibunEntry {
    #[serde(flatten)]
    pub value: SekibunValue,
    /// `r_scaled` on the refined quadrature.
    pub refined_r_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub config: ProbeConfig,
    pub c: f64,
    pub entries: Vec<SekibunEntry>,
    pub c1: f64,
    pub c2: f64,
    /// First scheduled `m` with `R(m) < 0`; the schedule stops there.
    pub m_star: Option<f64>,
    pub dprime_star_deviation: f64,
    pub nodes: usize,
    pub refined_nodes: usize,
    pub resolution_limit: f64,
}

impl ProbeReport {
    /// Smallest `r_scaled / scale` over the evaluated schedule.
    pub fn min_relative(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| if e.value.scale > 0.0 { e.value.r_scaled / e.value.scale } else { 0.0 })
            .fold(f64::INFINITY, f64::min)
    }

    /// CSV trace `m, r_scaled, log_factor, first_term, second_term, scale, refined_r_scaled`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Input(format!("cannot write {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(["m", "r_scaled", "log_factor", "first_term", "second_term", "scale", "refined_r_scaled"])
            .map_err(io)?;
        for e in &self.entries {
            let v = e.value;
            w.write_record(
                [v.m, v.r_scaled, v.log_factor, v.first_term, v.second_term, v.scale, e.refined_r_scaled]
                    .map(|x| format!("{x:e}")),
            )
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
    }
}

/// Runs the functional over `cfg.m_schedule` with early exit at the first
/// negative value, checking each value against one quadrature refinement.
pub fn run_probe(g: &ProbeForm, cfg: &ProbeConfig, w: &Weight, c: f64) -> Result<ProbeReport> {
    if cfg.m_schedule.is_empty() || cfg.m_schedule.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Input("m_schedule must be non-empty and strictly increasing".into()));
    }
    for &m in &cfg.m_schedule {
        check_m(m)?;
    }
    if g.n() != cfg.n || g.q() != cfg.q || (g.cutoff().r - cfg.r).abs() > 0.0 {
        return Err(Error::Input("probe form does not match its configuration".into()));
    }
    let rotated = cfg.rotated_weight(w)?;
    let base_quad = ball_quadrature(cfg.n, cfg.r, BallLevel::base(cfg.n))?;
    let base = Integrands::evaluate(g, &rotated, c, &base_quad)?;
    let fine_quad = ball_quadrature(cfg.n, cfg.r, BallLevel::refined(cfg.n))?;
    let fine = Integrands::evaluate(g, &rotated, c, &fine_quad)?;
    drop(fine_quad);

    let mut entries = Vec::new();
    let mut m_star = None;
    for &m in &cfg.m_schedule {
        let value = base.value(m);
        let refined = fine.value(m).r_scaled;
        let change = (refined - value.r_scaled).abs();
        let limit = RESOLUTION_LIMIT * value.scale;
        if change > limit {
            return Err(Error::Resolution { change, limit });
        }
        entries.push(SekibunEntry {
            value,
            refined_r_scaled: refined,
        });
        if value.r_scaled < 0.0 {
            m_star = Some(m);
            break;
        }
    }
    let evaluated: Vec<f64> = entries.iter().map(|e| e.value.m).collect();
    let deviation = dprime_star_deviation(g, &base_quad, &evaluated)?;
    let (c1, c2) = base.annulus_bounds();
    Ok(ProbeReport {
        config: cfg.clone(),
        c,
        entries,
        c1,
        c2,
        m_star,
        dprime_star_deviation: deviation,
        nodes: base.len(),
        refined_nodes: fine.len(),
        resolution_limit: RESOLUTION_LIMIT,
    })
}
