use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::domain::Domain;
use crate::geometry::positivity::{check_uniform_q_positive, CheckOptions, PositivityReport};
use crate::geometry::weight::Weight;
use crate::linalg::to_pairs;

/// Slack allowed when validating that a sequence decreases.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub q: usize,
    pub c: f64,
    pub sequence: Vec<PositivityReport>,
    pub limit: PositivityReport,
    pub sequence_passes: bool,
    pub limit_passes: bool,
    /// A passing sequence with a failing limit would contradict the
    /// preservation of uniform positivity under decreasing limits.
    pub consistent: bool,
}

/// Checks uniform `q`-positivity with constant `c` for every member of a
/// pointwise decreasing sequence and for its limit.
pub fn monotone_limit_check(
    sequence: &[Weight],
    limit: &Weight,
    q: usize,
    c: f64,
    domain: &Domain,
    opts: &CheckOptions,
) -> Result<MonotoneReport> {
    if sequence.is_empty() {
        return Err(Error::Input("monotone sequence is empty".into()));
    }
    opts.validate()?;
    let points = domain.sample(opts.samples);
    let chain: Vec<&Weight> = sequence.iter().chain(std::iter::once(limit)).collect();
    for (j, pair) in chain.windows(2).enumerate() {
        let bad = points.par_iter().find_first(|z| {
            let (a, b) = (pair[0].eval(z), pair[1].eval(z));
            !(a.is_finite() && b.is_finite()) || a < b - MONOTONE_TOLERANCE * a.abs().max(b.abs()).max(1.0)
        });
        if let Some(z) = bad {
            let what = if j + 1 == sequence.len() {
                format!("the limit exceeds member {}", j + 1)
            } else {
                format!("member {} exceeds member {}", j + 2, j + 1)
            };
            return Err(Error::Input(format!(
                "sequence is not pointwise decreasing: {what} at {:?}",
                to_pairs(z)
            )));
        }
    }
    let reports = sequence
        .iter()
        .map(|w| check_uniform_q_positive(w, q, c, domain, opts))
        .collect::<Result<Vec<_>>>()?;
    let limit = check_uniform_q_positive(limit, q, c, domain, opts)?;
    let sequence_passes = reports.iter().all(|r| r.pass);
    Ok(MonotoneReport {
        q,
        c,
        sequence: reports,
        limit_passes: limit.pass,
        consistent: limit.pass || !sequence_passes,
        sequence_passes,
        limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(base: &[f64], bump: &[f64], len: usize) -> (Vec<Weight>, Weight) {
        let seq = (1..=len)
            .map(|j| {
                let d: Vec<f64> = base.iter().zip(bump).map(|(a, b)| a + b / j as f64).collect();
                Weight::diagonal_quadratic(&d)
            })
            .collect();
        (seq, Weight::diagonal_quadratic(base))
    }

    #[test]
    fn positive_quadratic_family() {
        let (seq, lim) = family(&[1.0, 1.0], &[1.0, 1.0], 6);
        let d = Domain::unit_polydisc(2);
        let rep = monotone_limit_check(&seq, &lim, 1, 1.0, &d, &CheckOptions::default()).unwrap();
        assert!(rep.sequence_passes && rep.limit_passes && rep.consistent);
        assert!((rep.limit.min_value - 1.0).abs() < 1e-12);
        for (j, r) in rep.sequence.iter().enumerate() {
            assert!((r.min_value - (1.0 + 1.0 / (j + 1) as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn partially_negative_family() {
        let (seq, lim) = family(&[-1.0, 2.0], &[1.0, 0.0], 6);
        let d = Domain::unit_ball(2);
        let rep = monotone_limit_check(&seq, &lim, 2, 1.0, &d, &CheckOptions::default()).unwrap();
        assert!(rep.sequence_passes && rep.limit_passes);
        assert!((rep.limit.min_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn increasing_sequence_rejected() {
        let (mut seq, lim) = family(&[1.0], &[1.0], 3);
        seq.reverse();
        let d = Domain::unit_polydisc(1);
        let err = monotone_limit_check(&seq, &lim, 1, 0.0, &d, &CheckOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Input(ref m) if m.contains("not pointwise decreasing")));
    }

    #[test]
    fn limit_above_sequence_rejected() {
        let (seq, _) = family(&[1.0], &[1.0], 3);
        let d = Domain::unit_polydisc(1);
        let lim = Weight::diagonal_quadratic(&[5.0]);
        assert!(monotone_limit_check(&seq, &lim, 1, 0.0, &d, &CheckOptions::default()).is_err());
    }
}
