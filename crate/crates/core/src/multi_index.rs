//! Strictly increasing multi-indices `i_1 < ... < i_q` labelling the
//! monomials `dz_1 ∧ ... ∧ dz_n ∧ dz̄_{i_1} ∧ ... ∧ dz̄_{i_q}`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest ambient dimension supported by the bitmask representation.
pub const MAX_DIM: usize = 31;

/// A strictly increasing index tuple, stored 0-based.
///
/// Displayed and serialized 1-based, matching the usual `dz̄_1 … dz̄_n`
/// labelling.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(try_from = "Vec<usize>")]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    /// From 0-based entries.
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Input(format!(
                "multi-index entries must be strictly increasing: {indices:?}"
            )));
        }
        if indices.last().is_some_and(|&i| i >= MAX_DIM) {
            return Err(Error::Input(format!("multi-index entry exceeds {MAX_DIM}")));
        }
        Ok(Self(indices))
    }

    /// From 1-based entries.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        if indices.contains(&0) {
            return Err(Error::Input("1-based multi-index contains 0".into()));
        }
        Self::new(indices.iter().map(|i| i - 1).collect())
    }

    pub fn from_mask(mask: u32) -> Self {
        Self((0..32).filter(|b| mask & (1 << b) != 0).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn mask(&self) -> u32 {
        self.0.iter().fold(0u32, |m, &i| m | (1 << i))
    }

    pub fn fits(&self, n: usize) -> bool {
        self.0.last().is_none_or(|&i| i < n)
    }
}

impl TryFrom<Vec<usize>> for MultiIndex {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::from_one_based(&v)
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(|i| i.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// All strictly increasing `q`-tuples from `{0..n}` in lexicographic order.
pub fn multi_indices(n: usize, q: usize) -> Result<Vec<MultiIndex>> {
    if q > n {
        return Err(Error::Input(format!("multi-index degree q={q} exceeds n={n}")));
    }
    if n > MAX_DIM {
        return Err(Error::Input(format!("dimension n={n} exceeds {MAX_DIM}")));
    }
    let mut out = Vec::with_capacity(binomial(n, q));
    let mut cur: Vec<usize> = (0..q).collect();
    loop {
        out.push(MultiIndex(cur.clone()));
        // advance to the next combination
        let mut i = q;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if cur[i] < n - q + i {
                cur[i] += 1;
                for j in (i + 1)..q {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Lexicographic enumeration of degree-`q` multi-indices plus reverse lookup.
#[derive(Debug, Clone)]
pub struct IndexBasis {
    n: usize,
    q: usize,
    list: Vec<MultiIndex>,
    lookup: HashMap<u32, usize>,
}

impl IndexBasis {
    pub fn new(n: usize, q: usize) -> Result<Self> {
        let list = multi_indices(n, q)?;
        let lookup = list.iter().enumerate().map(|(k, m)| (m.mask(), k)).collect();
        Ok(Self { n, q, list, lookup })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn len(&self) -> usize {
        self.list.len()
    }

    pub fn is_empty(&self) -> bool {
        self.list.is_empty()
    }

    pub fn get(&self, k: usize) -> &MultiIndex {
        &self.list[k]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.list.iter()
    }

    pub fn position_of_mask(&self, mask: u32) -> Option<usize> {
        self.lookup.get(&mask).copied()
    }

    pub fn position(&self, m: &MultiIndex) -> Option<usize> {
        self.position_of_mask(m.mask())
    }
}

/// Sign and mask of `dz̄_j ∧ dz̄_K` rewritten in increasing order, or `None`
/// when `j ∈ K`.
pub fn insert_sign(j: usize, k_mask: u32) -> Option<(f64, u32)> {
    if k_mask & (1 << j) != 0 {
        return None;
    }
    let below = (k_mask & ((1u32 << j) - 1)).count_ones();
    let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
    Some((sign, k_mask | (1 << j)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerates_pairs_of_three() {
        let m: Vec<Vec<usize>> = multi_indices(3, 2).unwrap().iter().map(|m| m.one_based()).collect();
        assert_eq!(m, vec![vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn empty_index() {
        let m = multi_indices(2, 0).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].degree(), 0);
    }

    #[test]
    fn binomial_count() {
        assert_eq!(multi_indices(5, 3).unwrap().len(), 10);
        for n in 0..9 {
            for q in 0..=n {
                assert_eq!(multi_indices(n, q).unwrap().len(), binomial(n, q));
            }
        }
    }

    #[test]
    fn degree_above_dim_rejected() {
        assert!(matches!(multi_indices(2, 3), Err(Error::Input(_))));
    }

    #[test]
    fn non_increasing_rejected() {
        assert!(MultiIndex::new(vec![1, 1]).is_err());
        assert!(MultiIndex::from_one_based(&[0, 2]).is_err());
    }

    #[test]
    fn insert_sign_counts_transpositions() {
        // dz̄_2 ∧ dz̄_1 = - dz̄_1 ∧ dz̄_2  (0-based: j=1, K={0})
        assert_eq!(insert_sign(1, 0b1), Some((-1.0, 0b11)));
        assert_eq!(insert_sign(0, 0b10), Some((1.0, 0b11)));
        assert_eq!(insert_sign(1, 0b10), None);
        // dz̄_2 ∧ dz̄_1 ∧ dz̄_3 = - dz̄_1 dz̄_2 dz̄_3
        assert_eq!(insert_sign(1, 0b101), Some((-1.0, 0b111)));
    }

    #[test]
    fn serde_is_one_based() {
        let m = MultiIndex::new(vec![0, 2]).unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), "[1,3]");
        let back: MultiIndex = serde_json::from_str("[1,3]").unwrap();
        assert_eq!(back, m);
    }
}
