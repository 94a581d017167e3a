//! Eigenvalue-sum criteria: the minimum over all distinct `q`-subsets of
//! eigenvalues, and the explicit enumeration used to cross-check it.

use crate::error::{Error, Result};
use crate::linalg::Spectrum;
use crate::multi_index::multi_indices;

/// Enumeration refuses spectra larger than this (C(12,6) = 924 subsets).
pub const SUBSET_ORACLE_MAX_DIM: usize = 12;

/// Sum of the `q` smallest eigenvalues, which is the minimum of every sum
/// of `q` distinct eigenvalues counted with multiplicity.
pub fn q_smallest_sum(s: &Spectrum, q: usize) -> Result<f64> {
    let n = s.dim();
    if q == 0 || q > n {
        return Err(Error::Input(format!("q={q} must satisfy 1 <= q <= {n}")));
    }
    Ok(s.eigenvalues[..q].iter().sum())
}

/// Every sum of `q` distinct eigenvalues, ascending.
pub fn subset_sums_oracle(s: &Spectrum, q: usize) -> Result<Vec<f64>> {
    let n = s.dim();
    if n > SUBSET_ORACLE_MAX_DIM {
        return Err(Error::Refused(format!(
            "subset enumeration limited to dim <= {SUBSET_ORACLE_MAX_DIM}, got {n}"
        )));
    }
    if q == 0 || q > n {
        return Err(Error::Input(format!("q={q} must satisfy 1 <= q <= {n}")));
    }
    let mut sums: Vec<f64> = multi_indices(n, q)?
        .iter()
        .map(|m| m.indices().iter().map(|&i| s.eigenvalues[i]).sum())
        .collect();
    sums.sort_by(|a, b| a.total_cmp(b));
    Ok(sums)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(v: &[f64]) -> Spectrum {
        Spectrum::from_eigenvalues(v.to_vec()).unwrap()
    }

    #[test]
    fn two_smallest_and_trace() {
        let s = spec(&[-1.0, 2.0, 3.0]);
        assert_eq!(q_smallest_sum(&s, 2).unwrap(), 1.0);
        assert_eq!(q_smallest_sum(&s, 3).unwrap(), 4.0);
    }

    #[test]
    fn q_out_of_range() {
        let s = spec(&[1.0, 2.0]);
        assert!(matches!(q_smallest_sum(&s, 0), Err(Error::Input(_))));
        assert!(matches!(q_smallest_sum(&s, 3), Err(Error::Input(_))));
    }

    #[test]
    fn oracle_small_cases() {
        assert_eq!(subset_sums_oracle(&spec(&[1.0, 2.0]), 1).unwrap(), vec![1.0, 2.0]);
        assert_eq!(subset_sums_oracle(&spec(&[1.0, 2.0, 3.0]), 2).unwrap(), vec![3.0, 4.0, 5.0]);
        let s = spec(&[-1.0, 0.0, 2.0]);
        assert_eq!(subset_sums_oracle(&s, 2).unwrap()[0], q_smallest_sum(&s, 2).unwrap());
        assert_eq!(subset_sums_oracle(&s, 2).unwrap()[0], -1.0);
    }

    #[test]
    fn oracle_refuses_large() {
        let s = spec(&[0.0; 13]);
        assert!(matches!(subset_sums_oracle(&s, 2), Err(Error::Refused(_))));
    }

    #[test]
    fn increments_by_next_eigenvalue() {
        let s = spec(&[-2.5, -1.0, 0.25, 4.0, 7.5]);
        for q in 1..5 {
            let d = q_smallest_sum(&s, q + 1).unwrap() - q_smallest_sum(&s, q).unwrap();
            assert_eq!(d, s.eigenvalues[q]);
        }
    }
}
