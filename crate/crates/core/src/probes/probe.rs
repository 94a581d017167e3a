use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{commutator_of_hermitian, FormField};
use crate::geometry::domain::{Domain, SAMPLE_MARGIN};
use crate::geometry::hessian::{complex_hessian, DEFAULT_H_STEP};
use crate::geometry::weight::Weight;
use crate::linalg::{eig_hermitian, from_pairs, to_pairs, CMatrix, C64};
use crate::multi_index::{binomial, IndexBasis, MultiIndex};
use crate::probes::cutoff::Cutoff;
use crate::solver::{dbar_of, GridField, GridSpec};
use crate::spectral::q_smallest_sum;

/// Halton samples used to certify the violation margin on the probe ball.
pub const CERTIFICATION_SAMPLES: usize = 4096;
/// Radius halvings tried before certification gives up.
pub const MAX_SHRINKS: usize = 10;

/// The default `m`-schedule `1, 2, 4, …, 2^14`.
pub fn default_schedule() -> Vec<f64> {
    (0..=14).map(|k| 2f64.powi(k)).collect()
}

/// The probe `g = ∂̄v` with `v = (−1)^{n+q−1} χ(|ζ|) ζ̄_q dZ∧dz̄_1∧⋯∧dz̄_{q−1}`
/// in recentred, rotated coordinates `ζ`.
///
/// Only the components `I = {1,…,q−1, l}` with `l ≥ q` are nonzero:
/// `g_I = k(t) ζ_l ζ̄_q + χ(t) δ_{lq}` where `k = χ'/(2t)`. On `|ζ| ≤ r/2`
/// this is the monomial `dZ∧dz̄_1∧⋯∧dz̄_q`.
#[derive(Debug, Clone)]
pub struct ProbeForm {
    n: usize,
    q: usize,
    cutoff: Cutoff,
    /// `(l, position of {1..q−1, l})` for `l = q..n` (0-based `l`).
    slots: Vec<(usize, usize)>,
    len: usize,
}

impl ProbeForm {
    pub fn new(n: usize, q: usize, r: f64) -> Result<Self> {
        if q == 0 || q > n {
            return Err(Error::Input(format!("probe needs 1 <= q <= n, got q={q}, n={n}")));
        }
        let basis = IndexBasis::new(n, q)?;
        let head = (1u32 << (q - 1)) - 1;
        let slots = (q - 1..n)
            .map(|l| (l, basis.position_of_mask(head | (1 << l)).expect("degree-q index")))
            .collect();
        Ok(Self {
            n,
            q,
            cutoff: Cutoff::new(r)?,
            slots,
            len: binomial(n, q),
        })
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    /// The monomial `F = dZ∧dz̄_1∧⋯∧dz̄_q` in coefficient order.
    pub fn monomial(&self) -> Vec<C64> {
        let mut f = vec![C64::new(0.0, 0.0); self.len];
        f[self.slots[0].1] = C64::new(1.0, 0.0);
        f
    }

    /// Coefficient of `v` on `dZ∧dz̄_1∧⋯∧dz̄_{q−1}` (its only component).
    pub fn potential(&self, z: &[C64]) -> C64 {
        let t = crate::linalg::norm_sqr(z).sqrt();
        let sign = if (self.n + self.q - 1) % 2 == 0 { 1.0 } else { -1.0 };
        sign * self.cutoff.value(t) * z[self.q - 1].conj()
    }
}

impl FormField for ProbeForm {
    fn n(&self) -> usize {
        self.n
    }

    fn q(&self) -> usize {
        self.q
    }

    fn value(&self, z: &[C64]) -> Vec<C64> {
        let t = crate::linalg::norm_sqr(z).sqrt();
        let chi = self.cutoff.value(t);
        let (k, _) = self.cutoff.radial_factors(t);
        let zq = z[self.q - 1].conj();
        let mut g = vec![C64::new(0.0, 0.0); self.len];
        for &(l, pos) in &self.slots {
            g[pos] = k * z[l] * zq;
            if l == self.q - 1 {
                g[pos] += chi;
            }
        }
        g
    }

    fn dbar_partials(&self, z: &[C64]) -> Result<Vec<Vec<C64>>> {
        if z.len() != self.n {
            return Err(Error::Input(format!("point has dimension {}, probe has {}", z.len(), self.n)));
        }
        let t = crate::linalg::norm_sqr(z).sqrt();
        let (k, dk) = self.cutoff.radial_factors(t);
        let mut out = vec![vec![C64::new(0.0, 0.0); self.len]; self.n];
        if k == 0.0 && dk == 0.0 {
            return Ok(out);
        }
        let qi = self.q - 1;
        let zq = z[qi].conj();
        let a = dk / (2.0 * t);
        for (j, row) in out.iter_mut().enumerate() {
            for &(l, pos) in &self.slots {
                let mut d = a * z[j] * z[l] * zq;
                if j == qi {
                    d += k * z[l];
                }
                if l == qi {
                    d += k * z[j];
                }
                row[pos] = d;
            }
        }
        Ok(out)
    }
}

/// Parameters of a probe: where it sits, how it is rotated, and the
/// certified violation margin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub n: usize,
    pub q: usize,
    pub c: f64,
    /// Radius actually used (after any certification shrinks).
    pub r: f64,
    pub r_requested: f64,
    pub witness: Vec<[f64; 2]>,
    /// Unitary `U` with `U* Θ(witness) U` diagonal (ascending); the probe
    /// lives in coordinates `z = witness + Ū ζ`.
    pub rotation: Vec<Vec<[f64; 2]>>,
    pub eigenvalues: Vec<f64>,
    /// The violating `q`-subset in rotated coordinates.
    pub index_set: MultiIndex,
    /// `q_smallest_sum(Θ(witness)) − c`; negative for a genuine violation.
    pub violation: f64,
    /// Required margin `−violation / 2`; absent for control probes.
    pub delta_target: Option<f64>,
    /// Certified margin: `⟨(A − c)F, F⟩ ≤ −delta` at every sample of the ball.
    pub delta: Option<f64>,
    pub certification_samples: usize,
    pub shrinks: usize,
    pub m_schedule: Vec<f64>,
}

impl ProbeConfig {
    pub fn witness_point(&self) -> Vec<C64> {
        from_pairs(&self.witness)
    }

    pub fn rotation_matrix(&self) -> CMatrix {
        let n = self.rotation.len();
        CMatrix::from_fn(n, n, |i, j| C64::new(self.rotation[i][j][0], self.rotation[i][j][1]))
    }

    /// `ζ ↦ φ(witness + Ū ζ)`, whose complex Hessian is `U* Θ U`.
    pub fn rotated_weight(&self, w: &Weight) -> Result<Weight> {
        w.compose_affine(self.witness_point(), self.rotation_matrix().conj())
    }
}

fn validate(w: &Weight, q: usize, c: f64, witness: &[C64], r: f64) -> Result<()> {
    let n = w.dim();
    if witness.len() != n {
        return Err(Error::Input(format!("witness has dimension {}, weight has {n}", witness.len())));
    }
    if q == 0 || q > n {
        return Err(Error::Input(format!("probe needs 1 <= q <= n, got q={q}, n={n}")));
    }
    if !c.is_finite() || c < 0.0 {
        return Err(Error::Input(format!("c must be finite and non-negative, got {c}")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Input(format!("probe radius must be positive, got {r}")));
    }
    if let Some(d) = w.domain() {
        if !d.contains(witness) {
            return Err(Error::Input("witness lies outside the weight's domain".into()));
        }
    }
    Ok(())
}

/// Largest `⟨(A(ζ) − c)F, F⟩` over a Halton sample of the closed ball `|ζ| ≤ r`.
fn sampled_max_on_ball(rotated: &Weight, q: usize, c: f64, r: f64, probe: &ProbeForm) -> Result<f64> {
    let n = rotated.dim();
    let ball = Domain::ball(vec![C64::new(0.0, 0.0); n], r / (1.0 - SAMPLE_MARGIN))?;
    let mut points = ball.sample(CERTIFICATION_SAMPLES);
    points.push(vec![C64::new(0.0, 0.0); n]);
    let f = probe.monomial();
    let values: Vec<f64> = points
        .par_iter()
        .map(|z| {
            let h = complex_hessian(rotated, z, DEFAULT_H_STEP)?;
            let a = commutator_of_hermitian(&h, q)?;
            Ok(a.quadratic_form_raw(&f) - c)
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

fn prepare(w: &Weight, q: usize, c: f64, witness: &[C64], r: f64) -> Result<(ProbeConfig, Weight)> {
    validate(w, q, c, witness, r)?;
    let h = complex_hessian(w, witness, DEFAULT_H_STEP)?;
    let spectrum = eig_hermitian(&h)?;
    let violation = q_smallest_sum(&spectrum, q)? - c;
    let n = w.dim();
    let u = &spectrum.unitary;
    let config = ProbeConfig {
        n,
        q,
        c,
        r,
        r_requested: r,
        witness: to_pairs(witness),
        rotation: (0..n).map(|i| (0..n).map(|j| [u[(i, j)].re, u[(i, j)].im]).collect()).collect(),
        eigenvalues: spectrum.eigenvalues.clone(),
        index_set: MultiIndex::new((0..q).collect())?,
        violation,
        delta_target: None,
        delta: None,
        certification_samples: 0,
        shrinks: 0,
        m_schedule: default_schedule(),
    };
    let rotated = config.rotated_weight(w)?;
    Ok((config, rotated))
}

/// Largest radius `≤ r` (by halving) whose ball stays `2·DEFAULT_H_STEP`
/// inside the weight's domain.
fn fit_to_domain(w: &Weight, witness: &[C64], mut r: f64, shrinks: &mut usize) -> Result<f64> {
    if let Some(d) = w.domain() {
        let room = d.distance_to_boundary(witness) - 2.0 * DEFAULT_H_STEP;
        while r > room {
            r *= 0.5;
            *shrinks += 1;
            if *shrinks > MAX_SHRINKS {
                return Err(Error::Precondition(format!(
                    "no probe ball of radius >= {r:.3e} fits in the domain at the witness"
                )));
            }
        }
    }
    Ok(r)
}

/// Builds the probe at a violating witness and certifies
/// `⟨([iΘ,Λ] − c)F, F⟩ < −δ` on the ball of radius `r`, halving `r` until
/// the sampled maximum is below `−δ₀` with `δ₀ = −violation/2`.
pub fn build_probe_form(w: &Weight, q: usize, c: f64, witness: &[C64], r: f64) -> Result<(ProbeForm, ProbeConfig)> {
    let (mut config, rotated) = prepare(w, q, c, witness, r)?;
    if config.violation >= 0.0 {
        return Err(Error::Precondition(format!(
            "no violation at the witness: sum of the {q} smallest eigenvalues exceeds c by {:.6e}",
            config.violation
        )));
    }
    let target = -0.5 * config.violation;
    let mut shrinks = 0;
    let mut r = fit_to_domain(w, witness, r, &mut shrinks)?;
    loop {
        let probe = ProbeForm::new(config.n, q, r)?;
        let max = sampled_max_on_ball(&rotated, q, c, r, &probe)?;
        if max < -target {
            config.r = r;
            config.delta_target = Some(target);
            config.delta = Some(-max);
            config.certification_samples = CERTIFICATION_SAMPLES + 1;
            config.shrinks = shrinks;
            return Ok((probe, config));
        }
        if shrinks >= MAX_SHRINKS {
            return Err(Error::Precondition(format!(
                "could not certify a violation margin of {target:.3e} down to radius {r:.3e}"
            )));
        }
        r *= 0.5;
        shrinks += 1;
    }
}

/// A probe at a point where no violation is required, for control runs of
/// the functional. No margin is certified.
pub fn build_control_probe(w: &Weight, q: usize, c: f64, witness: &[C64], r: f64) -> Result<(ProbeForm, ProbeConfig)> {
    let (mut config, _) = prepare(w, q, c, witness, r)?;
    let mut shrinks = 0;
    let r = fit_to_domain(w, witness, r, &mut shrinks)?;
    config.r = r;
    config.shrinks = shrinks;
    Ok((ProbeForm::new(config.n, q, r)?, config))
}

/// The right-hand side `f = ∂̄v` on a grid for the probe potential `v`
/// centred at `center` with radius `r` (unrotated coordinates).
pub fn probe_rhs(grid: &GridSpec, q: usize, center: &[C64], r: f64) -> Result<GridField> {
    let n = grid.n();
    if center.len() != n {
        return Err(Error::Input(format!("center has dimension {}, grid has {n}", center.len())));
    }
    let probe = ProbeForm::new(n, q, r)?;
    let lower = IndexBasis::new(n, q - 1)?;
    let slot = lower.position_of_mask((1u32 << (q - 1)) - 1).expect("degree-(q-1) index");
    let v = GridField::from_fn(grid, q - 1, |z| {
        let zeta: Vec<C64> = z.iter().zip(center).map(|(a, b)| a - b).collect();
        let mut out = vec![C64::new(0.0, 0.0); lower.len()];
        out[slot] = probe.potential(&zeta);
        out
    })?;
    dbar_of(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{DPrimeStar, FiniteDifferenceField};

    fn point(n: usize, seed: usize, r: f64) -> Vec<C64> {
        let u = crate::geometry::sampling::halton(seed as u64 + 1, 2 * n);
        let z: Vec<C64> = (0..n).map(|j| C64::new(u[2 * j] - 0.5, u[2 * j + 1] - 0.5)).collect();
        let s = r / crate::linalg::norm_sqr(&z).sqrt();
        z.iter().map(|c| c * s).collect()
    }

    #[test]
    fn monomial_on_inner_ball_and_zero_outside() {
        let p = ProbeForm::new(2, 1, 0.8).unwrap();
        assert_eq!(p.value(&point(2, 3, 0.3)), p.monomial());
        assert!(p.value(&point(2, 3, 0.85)).iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn probe_is_dbar_of_potential() {
        // oracle: ∂̄v by finite differences of the potential, assembled with
        // the sign (−1)^n ε(l, K) of the exterior convention
        let h = 1e-5;
        for (n, q) in [(1, 1), (2, 1), (2, 2), (3, 2)] {
            let p = ProbeForm::new(n, q, 0.8).unwrap();
            let basis = IndexBasis::new(n, q).unwrap();
            let head = (1u32 << (q - 1)) - 1;
            for s in 0..20 {
                let z = point(n, s, 0.4 + 0.02 * s as f64);
                let mut want = vec![C64::new(0.0, 0.0); basis.len()];
                for l in 0..n {
                    let Some((eps, mask)) = crate::multi_index::insert_sign(l, head) else { continue };
                    let mut zp = z.clone();
                    let mut zm = z.clone();
                    zp[l] += h;
                    zm[l] -= h;
                    let dx = (p.potential(&zp) - p.potential(&zm)) / (2.0 * h);
                    zp[l] += C64::new(-h, h);
                    zm[l] += C64::new(h, -h);
                    let dy = (p.potential(&zp) - p.potential(&zm)) / (2.0 * h);
                    let sign = if n % 2 == 0 { eps } else { -eps };
                    want[basis.position_of_mask(mask).unwrap()] += sign * 0.5 * (dx + C64::i() * dy);
                }
                let got = p.value(&z);
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).norm() < 1e-7, "n={n} q={q}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn probe_is_closed_and_partials_match_differences() {
        for (n, q) in [(2, 1), (2, 2), (3, 1), (3, 2)] {
            let p = ProbeForm::new(n, q, 0.8).unwrap();
            let ops = DPrimeStar::new(n, q).unwrap();
            let pc = p.clone();
            let fd = FiniteDifferenceField::new(n, q, 1e-5, move |z| pc.value(z));
            for s in 0..20 {
                let z = point(n, s, 0.41 + 0.019 * s as f64);
                let exact = p.dbar_partials(&z).unwrap();
                let approx = fd.dbar_partials(&z).unwrap();
                for (a, b) in exact.iter().flatten().zip(approx.iter().flatten()) {
                    assert!((a - b).norm() < 1e-5 * (1.0 + a.norm()), "n={n} q={q}");
                }
                let d = ops.dbar(&exact).unwrap();
                assert!(d.iter().all(|c| c.norm() < 1e-10), "n={n} q={q}");
            }
        }
    }

    #[test]
    fn certifies_the_standard_violation() {
        let w = Weight::diagonal_quadratic(&[-1.0, 1.0]);
        let zero = vec![C64::new(0.0, 0.0); 2];
        let (_, cfg) = build_probe_form(&w, 1, 0.0, &zero, 0.8).unwrap();
        assert_eq!(cfg.index_set.one_based(), vec![1]);
        assert!((cfg.delta.unwrap() - 1.0).abs() < 1e-9);
        assert!((cfg.delta_target.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(cfg.r, 0.8);
    }

    #[test]
    fn identity_rotation_and_margin_two() {
        let w = Weight::diagonal_quadratic(&[-3.0, 1.0]);
        let zero = vec![C64::new(0.0, 0.0); 2];
        let (_, cfg) = build_probe_form(&w, 1, 0.0, &zero, 0.5).unwrap();
        let u = cfg.rotation_matrix();
        assert!(u.sub(&CMatrix::identity(2)).max_abs() < 1e-12);
        assert!(cfg.delta.unwrap() >= 2.0);
    }

    #[test]
    fn rotation_diagonalizes_off_diagonal_curvature() {
        // Θ = [[0, 2], [2, 0]] has eigenvalues ±2
        let a = crate::linalg::HermitianMatrix::from_real_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let w = Weight::hermitian_quadratic(&a);
        let zero = vec![C64::new(0.0, 0.0); 2];
        let (_, cfg) = build_probe_form(&w, 1, 0.0, &zero, 0.5).unwrap();
        let h = complex_hessian(&cfg.rotated_weight(&w).unwrap(), &zero, 1e-3).unwrap();
        assert!((h.get(0, 0).re + 2.0).abs() < 1e-12 && h.get(0, 1).norm() < 1e-12);
        assert!((cfg.delta.unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn grid_rhs_matches_probe_on_the_inner_ball() {
        let g = GridSpec::over_domain(&Domain::unit_polydisc(2), 32).unwrap();
        let zero = vec![C64::new(0.0, 0.0); 2];
        for q in 1..=2 {
            let f = probe_rhs(&g, q, &zero, 0.6).unwrap();
            let p = ProbeForm::new(2, q, 0.6).unwrap();
            assert_eq!(f.margin_band_max(), 0.0);
            for i in 0..g.len() {
                let z = g.point(i);
                if crate::linalg::norm_sqr(&z).sqrt() + 0.0625 < 0.3 {
                    for (a, b) in f.at(i).iter().zip(p.monomial()) {
                        assert!((a - b).norm() < 1e-12, "q={q}");
                    }
                }
            }
        }
    }

    #[test]
    fn top_degree_uses_the_single_index() {
        let p = ProbeForm::new(3, 3, 0.5).unwrap();
        assert_eq!(p.monomial(), vec![C64::new(1.0, 0.0)]);
    }

    #[test]
    fn radius_shrinks_until_certified() {
        // Θ11 = −1 + 4|z2|², so the margin 1/2 holds only for |z2| < 0.35
        let w = Weight::new(2, "-|z1|^2 + 4|z1|^2|z2|^2 + |z2|^2", |z| {
            -z[0].norm_sqr() + 4.0 * z[0].norm_sqr() * z[1].norm_sqr() + z[1].norm_sqr()
        });
        let zero = vec![C64::new(0.0, 0.0); 2];
        let (_, cfg) = build_probe_form(&w, 1, 0.0, &zero, 0.8).unwrap();
        assert!(cfg.shrinks >= 1 && cfg.r < 0.8);
        assert!(cfg.delta.unwrap() > cfg.delta_target.unwrap());
    }

    #[test]
    fn no_violation_is_a_precondition_error() {
        let w = Weight::norm_squared(2);
        let zero = vec![C64::new(0.0, 0.0); 2];
        assert!(matches!(build_probe_form(&w, 1, 0.0, &zero, 0.5), Err(Error::Precondition(_))));
        assert!(build_control_probe(&w, 1, 0.0, &zero, 0.5).is_ok());
    }
}
