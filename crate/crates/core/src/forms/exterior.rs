//! Constant-coefficient exterior algebra on `ℂ^n` for `(p,q)`-forms.
//!
//! A monomial is `dz_H ∧ dz̄_A` with `H`, `A` increasing, held as bitmasks.
//! Monomials are orthonormal, so every interior product is the exact
//! adjoint of the matching wedge.

use std::collections::HashMap;

use crate::error::Result;
use crate::linalg::{CMatrix, C64};
use crate::multi_index::{insert_sign, multi_indices};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub hol: u32,
    pub anti: u32,
}

fn parity(bits: u32) -> f64 {
    if bits.count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `dz_j ∧ m`.
pub fn wedge_dz(j: usize, m: Monomial) -> Option<(f64, Monomial)> {
    let (s, hol) = insert_sign(j, m.hol)?;
    Some((s, Monomial { hol, anti: m.anti }))
}

/// `dz̄_j ∧ m`; passing `dz_H` costs `(−1)^{|H|}`.
pub fn wedge_dzbar(j: usize, m: Monomial) -> Option<(f64, Monomial)> {
    let (s, anti) = insert_sign(j, m.anti)?;
    Some((s * parity(m.hol), Monomial { hol: m.hol, anti }))
}

/// Adjoint of [`wedge_dz`].
pub fn interior_dz(j: usize, m: Monomial) -> Option<(f64, Monomial)> {
    if m.hol & (1 << j) == 0 {
        return None;
    }
    let rest = Monomial {
        hol: m.hol & !(1 << j),
        anti: m.anti,
    };
    wedge_dz(j, rest).map(|(s, _)| (s, rest))
}

/// Adjoint of [`wedge_dzbar`].
pub fn interior_dzbar(j: usize, m: Monomial) -> Option<(f64, Monomial)> {
    if m.anti & (1 << j) == 0 {
        return None;
    }
    let rest = Monomial {
        hol: m.hol,
        anti: m.anti & !(1 << j),
    };
    wedge_dzbar(j, rest).map(|(s, _)| (s, rest))
}

/// Ordered basis of `(p,q)`-forms on `ℂ^n`: holomorphic part outer,
/// antiholomorphic part inner, both lexicographic.
#[derive(Debug, Clone)]
pub struct FormSpace {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    basis: Vec<Monomial>,
    lookup: HashMap<Monomial, usize>,
}

impl FormSpace {
    pub fn new(n: usize, p: usize, q: usize) -> Result<Self> {
        let hs = multi_indices(n, p)?;
        let qs = multi_indices(n, q)?;
        let basis: Vec<Monomial> = hs
            .iter()
            .flat_map(|h| {
                qs.iter().map(move |a| Monomial {
                    hol: h.mask(),
                    anti: a.mask(),
                })
            })
            .collect();
        let lookup = basis.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        Ok(Self { n, p, q, basis, lookup })
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn monomial(&self, i: usize) -> Monomial {
        self.basis[i]
    }

    pub fn position(&self, m: Monomial) -> Option<usize> {
        self.lookup.get(&m).copied()
    }

    /// Matrix of a monomial-to-monomial operator from `self` into `target`.
    pub fn matrix_of(&self, target: &FormSpace, op: impl Fn(Monomial) -> Option<(f64, Monomial)>) -> CMatrix {
        let mut m = CMatrix::zeros(target.len(), self.len());
        for (col, &mono) in self.basis.iter().enumerate() {
            if let Some((s, img)) = op(mono) {
                let row = target.position(img).expect("image lies in target space");
                m[(row, col)] += C64::new(s, 0.0);
            }
        }
        m
    }
}

/// `Λ = −i Σ_j ι_{z̄_j} ι_{z_j}` from `(p,q)` to `(p−1,q−1)`: the adjoint of
/// `ω ∧` for `ω = i Σ dz_j ∧ dz̄_j`.
pub fn lambda_matrix(from: &FormSpace, to: &FormSpace) -> CMatrix {
    let mut total = CMatrix::zeros(to.len(), from.len());
    for j in 0..from.n {
        let m = from.matrix_of(to, |mono| {
            let (s1, a) = interior_dz(j, mono)?;
            let (s2, b) = interior_dzbar(j, a)?;
            Some((s1 * s2, b))
        });
        total = total.add(&m.scale(C64::new(0.0, -1.0)));
    }
    total
}

/// `Σ_{jk} Θ_{jk} dz_j ∧ dz̄_k ∧ ·` from `(p,q)` to `(p+1,q+1)`, where `Θ`
/// is `n×n` and scalar. Multiply by `i` for `iΘ`.
pub fn curvature_wedge_matrix(theta: &CMatrix, from: &FormSpace, to: &FormSpace) -> CMatrix {
    let n = from.n;
    let mut total = CMatrix::zeros(to.len(), from.len());
    for j in 0..n {
        for k in 0..n {
            let m = from.matrix_of(to, |mono| {
                let (s1, a) = wedge_dzbar(k, mono)?;
                let (s2, b) = wedge_dz(j, a)?;
                Some((s1 * s2, b))
            });
            total = total.add(&m.scale(theta[(j, k)]));
        }
    }
    total
}
