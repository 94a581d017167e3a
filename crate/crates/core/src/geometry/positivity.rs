//! Pointwise positivity criteria sampled over a domain.
//!
//! Every report carries a `margin`: the amount by which the criterion
//! holds (negative when it fails). `pass` is `margin >= -tolerance`;
//! `strict` is `margin > tolerance`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::bundle::{BundleCurvature, CurvatureAtPoint};
use crate::geometry::domain::Domain;
use crate::geometry::hessian::{complex_hessian, DEFAULT_H_STEP};
use crate::geometry::sampling::sphere_points;
use crate::geometry::weight::Weight;
use crate::linalg::{eig_hermitian, from_pairs, to_pairs, C64};
use crate::multi_index::MultiIndex;
use crate::spectral::q_smallest_sum;

pub const DEFAULT_SAMPLES: usize = 256;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DESCENT_ITERATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckOptions {
    pub samples: usize,
    pub h_step: f64,
    pub tolerance: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            h_step: DEFAULT_H_STEP,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl CheckOptions {
    pub fn with_samples(samples: usize) -> Self {
        Self {
            samples,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Input("samples must be >= 1".into()));
        }
        if !(self.h_step.is_finite() && self.h_step > 0.0) {
            return Err(Error::Input("h_step must be positive".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(Error::Input("tolerance must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    QPositive,
    UniformQPositive,
    RcTrace,
    RcDirectional,
}

/// How strongly a report's conclusion is backed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// Checked at every point of a deterministic interior sample.
    SampledDomain,
    /// Exact at the single point given.
    Pointwise,
    /// Minimum over a sampled, locally refined set of bundle directions.
    SampledCertificate,
}

/// Where the minimum was attained. Subsets index the ascending spectrum
/// at the witness point (1-based); vectors are bundle directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Subset(MultiIndex),
    Vector(#[serde(with = "pair_vec")] Vec<C64>),
}

mod pair_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let p: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(from_pairs(&p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub criterion: Criterion,
    pub q: usize,
    pub c: f64,
    pub min_value: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub strict: bool,
    pub witness_point: Vec<[f64; 2]>,
    pub witness: Witness,
    pub samples_used: usize,
    pub certificate: Certificate,
}

impl PositivityReport {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn build(
        criterion: Criterion,
        q: usize,
        c: f64,
        min_value: f64,
        margin: f64,
        tolerance: f64,
        witness_point: &[C64],
        witness: Witness,
        samples_used: usize,
        certificate: Certificate,
    ) -> Self {
        Self {
            criterion,
            q,
            c,
            min_value,
            margin,
            tolerance,
            pass: margin >= -tolerance,
            strict: margin > tolerance,
            witness_point: to_pairs(witness_point),
            witness,
            samples_used,
            certificate,
        }
    }
}

fn check_c(c: f64) -> Result<()> {
    if !c.is_finite() {
        return Err(Error::Input("c must be finite".into()));
    }
    if c < 0.0 {
        return Err(Error::Input(format!("c must be non-negative, got {c}")));
    }
    Ok(())
}

fn check_domain(w: &Weight, d: &Domain) -> Result<()> {
    d.validate()?;
    if d.dim() != w.dim() {
        return Err(Error::Input(format!(
            "domain dimension {} does not match weight dimension {}",
            d.dim(),
            w.dim()
        )));
    }
    Ok(())
}

/// Evaluates `f` at every sample in parallel and returns the sample with
/// the smallest value (first one on ties).
fn sampled_min<F>(w: &Weight, d: &Domain, opts: &CheckOptions, f: F) -> Result<(Vec<C64>, f64)>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let points = d.sample(opts.samples);
    let values: Vec<f64> = points
        .par_iter()
        .map(|z| {
            let h = complex_hessian(w, z, opts.h_step)?;
            let s = eig_hermitian(&h)?;
            f(&s.eigenvalues)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    Ok((points[best].clone(), values[best]))
}

/// At least `n − q` positive Hessian eigenvalues everywhere on the sample:
/// `min_value = min λ_{q+1}` (ascending order).
pub fn check_q_positive(w: &Weight, q: usize, d: &Domain, opts: &CheckOptions) -> Result<PositivityReport> {
    opts.validate()?;
    check_domain(w, d)?;
    let n = w.dim();
    if q >= n {
        return Err(Error::Input(format!("q-positivity needs q <= n-1, got q={q}, n={n}")));
    }
    let (z, min) = sampled_min(w, d, opts, |ev| Ok(ev[q]))?;
    Ok(PositivityReport::build(
        Criterion::QPositive,
        q,
        0.0,
        min,
        min,
        opts.tolerance,
        &z,
        Witness::Subset(MultiIndex::new(vec![q])?),
        opts.samples,
        Certificate::SampledDomain,
    ))
}

/// Sum of the `q` smallest Hessian eigenvalues is at least `c` everywhere
/// on the sample.
pub fn check_uniform_q_positive(
    w: &Weight,
    q: usize,
    c: f64,
    d: &Domain,
    opts: &CheckOptions,
) -> Result<PositivityReport> {
    opts.validate()?;
    check_c(c)?;
    check_domain(w, d)?;
    let n = w.dim();
    if q == 0 || q > n {
        return Err(Error::Input(format!("uniform q-positivity needs 1 <= q <= n, got q={q}, n={n}")));
    }
    let (z, min) = sampled_min(w, d, opts, |ev| Ok(ev[..q].iter().sum()))?;
    Ok(PositivityReport::build(
        Criterion::UniformQPositive,
        q,
        c,
        min,
        min - c,
        opts.tolerance,
        &z,
        Witness::Subset(MultiIndex::new((0..q).collect())?),
        opts.samples,
        Certificate::SampledDomain,
    ))
}

/// Uniform q-positivity at explicit points, for callers that sample their
/// own families of subdomains.
pub fn uniform_q_sum_at(w: &Weight, q: usize, z: &[C64], h_step: f64) -> Result<f64> {
    let s = eig_hermitian(&complex_hessian(w, z, h_step)?)?;
    q_smallest_sum(&s, q)
}

/// `λ_min(Σ_j Θ_{jj̄}(z)) ≥ c`; `min_value` is `λ_min − c`.
pub fn rc_trace_check(b: &BundleCurvature, c: f64, z: &[C64], tolerance: f64) -> Result<PositivityReport> {
    check_c(c)?;
    let at = b.at(z)?;
    let s = eig_hermitian(&at.trace_operator())?;
    let value = s.min() - c;
    Ok(PositivityReport::build(
        Criterion::RcTrace,
        at.n(),
        c,
        value,
        value,
        tolerance,
        z,
        Witness::Vector(s.eigenvector(0)),
        1,
        Certificate::Pointwise,
    ))
}

fn lambda_max(at: &CurvatureAtPoint, a: &[C64]) -> Result<f64> {
    Ok(eig_hermitian(&at.directional(a))?.max())
}

fn normalized(mut a: Vec<C64>) -> Vec<C64> {
    let norm = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    a.iter_mut().for_each(|x| *x /= norm);
    a
}

/// `min_a λ_max(M_a)` over unit `a ∈ ℂ^r`, with `(M_a)_{jk} = ⟨Θ_{jk̄}a, a⟩`.
///
/// The minimum is taken over `direction_samples` low-discrepancy sphere
/// points, then refined by coordinate descent from the worst one.
pub fn rc_directional_check(
    b: &BundleCurvature,
    z: &[C64],
    direction_samples: usize,
    tolerance: f64,
) -> Result<PositivityReport> {
    if direction_samples == 0 {
        return Err(Error::Input("direction_samples must be >= 1".into()));
    }
    let at = b.at(z)?;
    let r = at.r();
    let dirs = sphere_points(direction_samples, r);
    let values: Vec<f64> = dirs.par_iter().map(|a| lambda_max(&at, a)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    let (mut a, mut value) = (dirs[best].clone(), values[best]);

    let mut step = 0.25;
    for _ in 0..DESCENT_ITERATIONS {
        let mut improved = false;
        for coord in 0..2 * r {
            for sign in [1.0, -1.0] {
                let mut trial = a.clone();
                let delta = if coord % 2 == 0 {
                    C64::new(sign * step, 0.0)
                } else {
                    C64::new(0.0, sign * step)
                };
                trial[coord / 2] += delta;
                let trial = normalized(trial);
                let v = lambda_max(&at, &trial)?;
                if v < value {
                    a = trial;
                    value = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }

    Ok(PositivityReport::build(
        Criterion::RcDirectional,
        0,
        0.0,
        value,
        value,
        tolerance,
        z,
        Witness::Vector(a),
        direction_samples,
        Certificate::SampledCertificate,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CMatrix, HermitianMatrix};

    fn opts() -> CheckOptions {
        CheckOptions::with_samples(64)
    }

    fn origin(n: usize) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); n]
    }

    #[test]
    fn q_positive_examples() {
        let d = Domain::unit_polydisc(2);
        let r = check_q_positive(&Weight::norm_squared(2), 0, &d, &opts()).unwrap();
        assert!(r.pass && (r.min_value - 1.0).abs() < 1e-12);
        let r = check_q_positive(&Weight::diagonal_quadratic(&[1.0, -1.0]), 1, &d, &opts()).unwrap();
        assert!(r.pass);
        let r = check_q_positive(&Weight::diagonal_quadratic(&[-1.0, -1.0]), 1, &d, &opts()).unwrap();
        assert!(!r.pass);
        assert!(check_q_positive(&Weight::norm_squared(2), 2, &d, &opts()).is_err());
    }

    #[test]
    fn uniform_examples() {
        let r = check_uniform_q_positive(&Weight::norm_squared(3), 2, 2.0, &Domain::unit_ball(3), &opts()).unwrap();
        assert!(r.pass && (r.min_value - 2.0).abs() < 1e-12);
        let d = Domain::unit_polydisc(2);
        let r = check_uniform_q_positive(&Weight::diagonal_quadratic(&[-1.0, 1.0]), 1, 0.0, &d, &opts()).unwrap();
        assert!(!r.pass && (r.min_value + 1.0).abs() < 1e-12);
        let r = check_uniform_q_positive(&Weight::diagonal_quadratic(&[-1.0, 3.0]), 2, 1.0, &d, &opts()).unwrap();
        assert!(r.pass && (r.min_value - 2.0).abs() < 1e-12);
        assert!(check_uniform_q_positive(&Weight::norm_squared(2), 1, -0.5, &d, &opts()).is_err());
    }

    #[test]
    fn finite_difference_witness_is_the_minimizer() {
        // Hessian diag(1 + 4|z1|^2 ... ) minimized at the centre
        let w = Weight::new(1, "|z|^2 + |z|^4", |z| z[0].norm_sqr() + z[0].norm_sqr().powi(2));
        let r = check_uniform_q_positive(&w, 1, 0.0, &Domain::unit_polydisc(1), &opts()).unwrap();
        let p = r.witness_point[0];
        assert!(p[0].hypot(p[1]) < 0.2);
        assert!(r.pass && r.strict);
    }

    #[test]
    fn rc_trace_examples() {
        let id = |n: usize, r: usize, s: f64| {
            let blocks = (0..n * n)
                .map(|i| {
                    if i / n == i % n {
                        CMatrix::identity(r).scale(C64::new(s, 0.0))
                    } else {
                        CMatrix::zeros(r, r)
                    }
                })
                .collect();
            BundleCurvature::constant(CurvatureAtPoint::new(n, r, blocks).unwrap())
        };
        let r = rc_trace_check(&id(3, 2, 1.0), 3.0, &origin(3), 1e-9).unwrap();
        assert!(r.pass && r.min_value.abs() < 1e-12);

        let blocks = vec![
            CMatrix::from_real_diagonal(&[2.0, -1.0]),
            CMatrix::zeros(2, 2),
            CMatrix::zeros(2, 2),
            CMatrix::from_real_diagonal(&[0.0, 2.0]),
        ];
        let b = BundleCurvature::constant(CurvatureAtPoint::new(2, 2, blocks).unwrap());
        let r = rc_trace_check(&b, 0.0, &origin(2), 1e-9).unwrap();
        assert!(r.pass && (r.min_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rc_directional_examples() {
        let blocks = |s: f64| {
            (0..4)
                .map(|i| {
                    if i / 2 == i % 2 {
                        CMatrix::identity(2).scale(C64::new(s, 0.0))
                    } else {
                        CMatrix::zeros(2, 2)
                    }
                })
                .collect()
        };
        let pos = BundleCurvature::constant(CurvatureAtPoint::new(2, 2, blocks(1.0)).unwrap());
        let r = rc_directional_check(&pos, &origin(2), 32, 1e-9).unwrap();
        assert!(r.pass && (r.min_value - 1.0).abs() < 1e-12);
        let neg = BundleCurvature::constant(CurvatureAtPoint::new(2, 2, blocks(-1.0)).unwrap());
        assert!(!rc_directional_check(&neg, &origin(2), 32, 1e-9).unwrap().pass);
    }

    #[test]
    fn rc_directional_finds_negative_direction() {
        let b = BundleCurvature::constant(
            CurvatureAtPoint::new(1, 2, vec![CMatrix::from_real_diagonal(&[1.0, -1.0])]).unwrap(),
        );
        let r = rc_directional_check(&b, &origin(1), 64, 1e-9).unwrap();
        assert!(!r.pass);
        assert!((r.min_value + 1.0).abs() < 1e-6, "{}", r.min_value);
        let Witness::Vector(a) = &r.witness else { panic!() };
        assert!(a[1].norm() > 1.0 - 1e-3);
    }

    #[test]
    fn rc_trace_rank_one_is_uniform_at_q_equals_n() {
        let h = HermitianMatrix::from_real_rows(&[vec![-1.0, 0.5], vec![0.5, 3.0]]).unwrap();
        let w = Weight::hermitian_quadratic(&h);
        let b = BundleCurvature::from_weight(&w, 1e-3);
        let t = rc_trace_check(&b, 1.0, &origin(2), 1e-9).unwrap();
        let u = check_uniform_q_positive(&w, 2, 1.0, &Domain::unit_polydisc(2), &opts()).unwrap();
        assert!((t.min_value - u.margin).abs() < 1e-12);
    }
}
