use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::domain::Domain;
use crate::geometry::hessian::complex_hessian;
use crate::geometry::positivity::{Certificate, Criterion, PositivityReport, Witness};
use crate::geometry::sampling::halton;
use crate::geometry::weight::Weight;
use crate::linalg::{eig_hermitian, to_pairs, C64};
use crate::multi_index::MultiIndex;
use crate::probes::quadrature::composite_rule;
use crate::spectral::q_smallest_sum;

/// Total fiber quadrature nodes aimed for by [`FiberQuadrature::with_budget`].
pub const FIBER_NODES: usize = 10_000;
pub const FIBER_ORDER: usize = 8;
/// Allowed change of `φ` under rotations of the fiber coordinates.
pub const INVARIANCE_TOLERANCE: f64 = 1e-8;
const INVARIANCE_SAMPLES: usize = 64;
pub const FIBER_TOLERANCE: f64 = 1e-6;

/// A Reinhardt fiber `{ inner_j < |w_j| < outer_j }` centred at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fiber {
    pub inner: Vec<f64>,
    pub outer: Vec<f64>,
}

impl Fiber {
    pub fn polydisc(radii: Vec<f64>) -> Result<Self> {
        Self::annuli(vec![0.0; radii.len()], radii)
    }

    pub fn annuli(inner: Vec<f64>, outer: Vec<f64>) -> Result<Self> {
        if inner.is_empty() || inner.len() != outer.len() {
            return Err(Error::Input("fiber needs matching, non-empty radius lists".into()));
        }
        for (a, b) in inner.iter().zip(&outer) {
            if !(a.is_finite() && b.is_finite() && *a >= 0.0 && b > a) {
                return Err(Error::Input(format!("fiber radii must satisfy 0 <= inner < outer, got {a}, {b}")));
            }
        }
        Ok(Self { inner, outer })
    }

    /// A polydisc domain centred at the origin, as a fiber.
    pub fn from_domain(d: &Domain) -> Result<Self> {
        d.validate()?;
        if d.kind != crate::geometry::DomainKind::Polydisc || d.center.iter().any(|c| c.norm() > 0.0) {
            return Err(Error::Input("fiber domains must be polydiscs centred at the origin".into()));
        }
        Self::polydisc(d.radii.clone())
    }

    pub fn dim(&self) -> usize {
        self.inner.len()
    }
}

/// Tensor-product rule in the fiber radii `ρ_j`, composite Gauss–Legendre per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberQuadrature {
    pub panels_per_axis: usize,
    pub order: usize,
    pub total_nodes: usize,
}

impl FiberQuadrature {
    /// About `total` nodes split evenly over `m` axes.
    pub fn with_budget(m: usize, total: usize) -> Result<Self> {
        if m == 0 || total == 0 {
            return Err(Error::Input("fiber quadrature needs m >= 1 and a positive node budget".into()));
        }
        let per_axis = (total as f64).powf(1.0 / m as f64);
        let panels = ((per_axis / FIBER_ORDER as f64).round() as usize).max(1);
        let total_nodes = (panels * FIBER_ORDER).checked_pow(m as u32).unwrap_or(usize::MAX);
        if total_nodes > 100 * total.max(FIBER_NODES) {
            return Err(Error::Refused(format!("fiber quadrature with {total_nodes} nodes")));
        }
        Ok(Self {
            panels_per_axis: panels,
            order: FIBER_ORDER,
            total_nodes,
        })
    }
}

/// `φ̃(z) = −log ∫_D e^{−φ(z,w)} dV(w)` on a base grid, with the
/// Hessian eigenvalue data used for the positivity report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberIntegralField {
    pub n_base: usize,
    pub fiber: Fiber,
    pub quadrature: FiberQuadrature,
    pub points_per_axis: usize,
    pub h_step: f64,
    pub q: usize,
    pub points: Vec<Vec<[f64; 2]>>,
    pub values: Vec<f64>,
    pub q_sums: Vec<f64>,
    pub min_eigenvalues: Vec<f64>,
}

impl FiberIntegralField {
    /// CSV with columns `x1,y1,…,phi_tilde,q_sum,lambda_min`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: csv::Error| Error::Input(format!("cannot write {}: {e}", path.display()));
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        let mut header: Vec<String> = (1..=self.n_base).flat_map(|j| [format!("x{j}"), format!("y{j}")]).collect();
        header.extend(["phi_tilde", "q_sum", "lambda_min"].map(String::from));
        w.write_record(&header).map_err(io)?;
        for (i, p) in self.points.iter().enumerate() {
            let mut row: Vec<String> = p.iter().flat_map(|c| [format!("{:e}", c[0]), format!("{:e}", c[1])]).collect();
            row.extend([self.values[i], self.q_sums[i], self.min_eigenvalues[i]].map(|x| format!("{x:e}")));
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiberLabel {
    /// `q = 1`: positivity of `φ̃` is guaranteed.
    Theorem,
    /// `q ≥ 2`: an open question; results are evidence only.
    Exploration,
}

/// Note attached to a failing `q ≥ 2` run.
pub const COUNTEREXAMPLE_NOTE: &str = "potential counterexample — verify analytically";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrekopaOutcome {
    pub field: FiberIntegralField,
    pub report: PositivityReport,
    pub label: FiberLabel,
    pub note: Option<String>,
}

/// Cell-centred points of a `points_per_axis^{2n}` lattice over the bounding
/// box of `base`, kept when at least `margin` inside the domain.
pub fn base_points(base: &Domain, points_per_axis: usize, margin: f64) -> Result<Vec<Vec<C64>>> {
    base.validate()?;
    let n = base.dim();
    if points_per_axis == 0 {
        return Err(Error::Input("base grid needs at least one point per axis".into()));
    }
    let total = points_per_axis
        .checked_pow(2 * n as u32)
        .filter(|t| *t <= 1 << 22)
        .ok_or_else(|| Error::Refused(format!("base grid {points_per_axis}^{}", 2 * n)))?;
    let half = base.bounding_half_widths();
    let mut out = Vec::new();
    for code in 0..total {
        let mut c = code;
        let mut x = vec![0.0; 2 * n];
        for a in (0..2 * n).rev() {
            let i = c % points_per_axis;
            c /= points_per_axis;
            x[a] = -half[a] + 2.0 * half[a] * (i as f64 + 0.5) / points_per_axis as f64;
        }
        let z: Vec<C64> = (0..n).map(|j| base.center[j] + C64::new(x[2 * j], x[2 * j + 1])).collect();
        if base.distance_to_boundary(&z) >= margin {
            out.push(z);
        }
    }
    Ok(out)
}

struct RadialRule {
    /// Per-axis radii and weights (weights include `2π ρ`).
    axes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl RadialRule {
    fn new(fiber: &Fiber, quad: &FiberQuadrature) -> Self {
        let axes = fiber
            .inner
            .iter()
            .zip(&fiber.outer)
            .map(|(a, b)| {
                let breaks: Vec<f64> = (0..=quad.panels_per_axis)
                    .map(|k| a + (b - a) * k as f64 / quad.panels_per_axis as f64)
                    .collect();
                let (rho, w) = composite_rule(&breaks, quad.order);
                let w = rho.iter().zip(&w).map(|(r, w)| TAU * r * w).collect();
                (rho, w)
            })
            .collect();
        Self { axes }
    }

    /// `−log Σ w e^{−φ(z, ρ)}`, summed with a running maximum shift.
    fn phi_tilde(&self, phi: &Weight, z: &[C64]) -> f64 {
        let m = self.axes.len();
        let sizes: Vec<usize> = self.axes.iter().map(|a| a.0.len()).collect();
        let total: usize = sizes.iter().product();
        let mut point: Vec<C64> = z.to_vec();
        point.resize(z.len() + m, C64::new(0.0, 0.0));
        let mut shift = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for code in 0..total {
            let mut c = code;
            let mut weight = 1.0;
            for (j, (rho, w)) in self.axes.iter().enumerate() {
                let k = c % sizes[j];
                c /= sizes[j];
                point[z.len() + j] = C64::new(rho[k], 0.0);
                weight *= w[k];
            }
            let e = -phi.eval(&point);
            if !e.is_finite() {
                return f64::NAN;
            }
            if e > shift {
                sum *= (shift - e).exp();
                shift = e;
            }
            sum += weight * (e - shift).exp();
        }
        -(shift + sum.ln())
    }
}

/// Checks `φ(z, w) = φ(z, (e^{iθ_j} w_j))` at Halton samples of base, fiber and angles.
fn check_invariance(phi: &Weight, base: &[Vec<C64>], fiber: &Fiber) -> Result<f64> {
    let m = fiber.dim();
    let n = phi.dim() - m;
    let mut worst = 0.0f64;
    for s in 0..INVARIANCE_SAMPLES {
        let u = halton(s as u64 + 1, 3 * m + 1);
        let z = &base[(u[3 * m] * base.len() as f64) as usize % base.len()];
        let mut p = z.clone();
        let mut rotated = z.clone();
        for j in 0..m {
            let rho = fiber.inner[j] + (fiber.outer[j] - fiber.inner[j]) * u[3 * j];
            let arg = TAU * u[3 * j + 1];
            p.push(C64::from_polar(rho, arg));
            rotated.push(C64::from_polar(rho, arg + TAU * u[3 * j + 2]));
        }
        let (a, b) = (phi.eval(&p), phi.eval(&rotated));
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFinite(format!("weight at {:?}", to_pairs(&p))));
        }
        let gap = (a - b).abs() / a.abs().max(1.0);
        if gap > INVARIANCE_TOLERANCE {
            return Err(Error::Precondition(format!(
                "weight depends on the fiber arguments: change {gap:.3e} under rotation at {:?}",
                to_pairs(&p)
            )));
        }
        worst = worst.max(gap);
    }
    debug_assert!(n >= 1);
    Ok(worst)
}

/// Options for [`fiber_integrate_prekopa`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FiberOptions {
    pub points_per_axis: usize,
    pub fiber_nodes: usize,
    pub h_step: f64,
    pub tolerance: f64,
}

impl Default for FiberOptions {
    fn default() -> Self {
        Self {
            points_per_axis: 32,
            fiber_nodes: FIBER_NODES,
            h_step: crate::geometry::hessian::DEFAULT_H_STEP,
            tolerance: FIBER_TOLERANCE,
        }
    }
}

/// Integrates `e^{−φ}` over a Reinhardt fiber and checks uniform
/// `q`-positivity with constant `c` of the resulting base weight `φ̃`.
pub fn fiber_integrate_prekopa(
    phi: &Weight,
    fiber: &Fiber,
    base: &Domain,
    q: usize,
    c: f64,
    opts: &FiberOptions,
) -> Result<PrekopaOutcome> {
    let m = fiber.dim();
    let n = base.dim();
    if phi.dim() != n + m {
        return Err(Error::Input(format!(
            "weight has dimension {}, base + fiber have {}",
            phi.dim(),
            n + m
        )));
    }
    if q == 0 || q > n {
        return Err(Error::Input(format!("q must satisfy 1 <= q <= {n}, got {q}")));
    }
    if !c.is_finite() || c < 0.0 {
        return Err(Error::Input(format!("c must be finite and non-negative, got {c}")));
    }
    if !(opts.h_step.is_finite() && opts.h_step > 0.0) || !(opts.tolerance >= 0.0) {
        return Err(Error::Input("h_step must be positive and tolerance non-negative".into()));
    }
    let points = base_points(base, opts.points_per_axis, 2.0 * opts.h_step)?;
    if points.is_empty() {
        return Err(Error::Input("base grid has no points inside the base domain".into()));
    }
    check_invariance(phi, &points, fiber)?;
    let quad = FiberQuadrature::with_budget(m, opts.fiber_nodes)?;
    let rule = std::sync::Arc::new(RadialRule::new(fiber, &quad));

    let tilde = {
        let phi = phi.clone();
        let rule = rule.clone();
        Weight::new(n, format!("fiber integral of {}", phi.label()), move |z| rule.phi_tilde(&phi, z))
            .finite_difference()
            .on_domain(base.clone())?
    };
    let rows: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|z| {
            let v = tilde.eval(z);
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("fiber integral at {:?}", to_pairs(z))));
            }
            let s = eig_hermitian(&complex_hessian(&tilde, z, opts.h_step)?)?;
            Ok((v, q_smallest_sum(&s, q)?, s.min()))
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.1 < rows[best].1 {
            best = i;
        }
    }
    let min = rows[best].1;
    let report = PositivityReport::build(
        Criterion::UniformQPositive,
        q,
        c,
        min,
        min - c,
        opts.tolerance,
        &points[best],
        Witness::Subset(MultiIndex::new((0..q).collect())?),
        points.len(),
        Certificate::SampledDomain,
    );
    let label = if q == 1 { FiberLabel::Theorem } else { FiberLabel::Exploration };
    let note = (label == FiberLabel::Exploration && !report.pass).then(|| COUNTEREXAMPLE_NOTE.to_string());
    let field = FiberIntegralField {
        n_base: n,
        fiber: fiber.clone(),
        quadrature: quad,
        points_per_axis: opts.points_per_axis,
        h_step: opts.h_step,
        q,
        points: points.iter().map(|z| to_pairs(z)).collect(),
        values: rows.iter().map(|r| r.0).collect(),
        q_sums: rows.iter().map(|r| r.1).collect(),
        min_eigenvalues: rows.iter().map(|r| r.2).collect(),
    };
    Ok(PrekopaOutcome {
        field,
        report,
        label,
        note,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn small(points_per_axis: usize) -> FiberOptions {
        FiberOptions {
            points_per_axis,
            ..FiberOptions::default()
        }
    }

    #[test]
    fn budget_split() {
        let one = FiberQuadrature::with_budget(1, FIBER_NODES).unwrap();
        assert_eq!((one.panels_per_axis, one.total_nodes), (1250, 10_000));
        let two = FiberQuadrature::with_budget(2, FIBER_NODES).unwrap();
        assert_eq!(two.total_nodes, 104 * 104);
    }

    #[test]
    fn separable_weight_gives_base_hessian() {
        // φ̃ = |z|² − log π on the unit-disc fiber
        let phi = Weight::norm_squared(2);
        let fiber = Fiber::polydisc(vec![1.0]).unwrap();
        let base = Domain::unit_polydisc(1);
        let out = fiber_integrate_prekopa(&phi, &fiber, &base, 1, 1.0, &small(8)).unwrap();
        let want0 = -(PI * (1.0 - (-1.0f64).exp())).ln();
        for (p, v) in out.field.points.iter().zip(&out.field.values) {
            let z2 = p[0][0] * p[0][0] + p[0][1] * p[0][1];
            assert!((v - (z2 + want0)).abs() < 1e-12);
        }
        for s in &out.field.q_sums {
            assert!((s - 1.0).abs() < 1e-6, "{s}");
        }
        assert!(out.report.pass && out.label == FiberLabel::Theorem && out.note.is_none());
    }

    #[test]
    fn coupled_weight_matches_closed_form() {
        // φ = |z|²(1 + |w|²): e^{−φ̃} = π e^{−|z|²}(1 − e^{−|z|²})/|z|²
        let phi = Weight::new(2, "|z1|^2 (1 + |w1|^2)", |z| z[0].norm_sqr() * (1.0 + z[1].norm_sqr()));
        let fiber = Fiber::polydisc(vec![1.0]).unwrap();
        let base = Domain::unit_polydisc(1);
        let out = fiber_integrate_prekopa(&phi, &fiber, &base, 1, 0.0, &small(8)).unwrap();
        for (p, v) in out.field.points.iter().zip(&out.field.values) {
            let s = p[0][0] * p[0][0] + p[0][1] * p[0][1];
            let want = s - (PI * (-(-s).exp_m1()) / s).ln();
            assert!((v - want).abs() < 1e-10, "{v} vs {want}");
        }
        assert!(out.field.min_eigenvalues.iter().all(|l| *l >= -1e-3));
    }

    #[test]
    fn annulus_fiber_and_two_dimensional_base() {
        let phi = Weight::diagonal_quadratic(&[-1.0, 3.0, 1.0]);
        let fiber = Fiber::annuli(vec![0.5], vec![1.0]).unwrap();
        let base = Domain::unit_polydisc(2);
        let opts = FiberOptions {
            points_per_axis: 3,
            fiber_nodes: 800,
            ..FiberOptions::default()
        };
        let out = fiber_integrate_prekopa(&phi, &fiber, &base, 2, 1.0, &opts).unwrap();
        assert_eq!(out.label, FiberLabel::Exploration);
        assert!(out.field.q_sums.iter().all(|s| (s - 2.0).abs() < 1e-6));
        assert!(out.report.pass && out.note.is_none());
    }

    #[test]
    fn failing_exploration_is_flagged() {
        let phi = Weight::diagonal_quadratic(&[-1.0, 1.5, 1.0]);
        let fiber = Fiber::polydisc(vec![1.0]).unwrap();
        let opts = FiberOptions {
            points_per_axis: 2,
            fiber_nodes: 400,
            ..FiberOptions::default()
        };
        let out = fiber_integrate_prekopa(&phi, &fiber, &Domain::unit_polydisc(2), 2, 1.0, &opts).unwrap();
        assert!(!out.report.pass);
        assert_eq!(out.note.as_deref(), Some(COUNTEREXAMPLE_NOTE));
    }

    #[test]
    fn argument_dependence_rejected() {
        let phi = Weight::new(2, "|z1|^2 + re(w1)", |z| z[0].norm_sqr() + z[1].re);
        let fiber = Fiber::polydisc(vec![1.0]).unwrap();
        let err = fiber_integrate_prekopa(&phi, &fiber, &Domain::unit_polydisc(1), 1, 0.0, &small(4)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err:?}");
    }

    #[test]
    fn csv_layout() {
        let phi = Weight::norm_squared(2);
        let fiber = Fiber::polydisc(vec![1.0]).unwrap();
        let out = fiber_integrate_prekopa(&phi, &fiber, &Domain::unit_polydisc(1), 1, 0.0, &small(4)).unwrap();
        let dir = std::env::temp_dir().join(format!("fiber-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.csv");
        out.field.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x1,y1,phi_tilde,q_sum,lambda_min"));
        assert_eq!(text.lines().count(), 1 + out.field.points.len());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
