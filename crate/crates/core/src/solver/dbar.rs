use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::multi_index::{insert_sign, IndexBasis};
use crate::solver::grid::{GridField, GridSpec};

/// One `±∂/∂z̄_l` term from component `from` to component `to`, with the
/// sign folded into the difference weights.
#[derive(Debug, Clone, Copy)]
struct Stencil {
    l: usize,
    from: usize,
    to: usize,
    sx: usize,
    sy: usize,
    cx: f64,
    cy: f64,
}

/// Discrete `∂̄` from `(n,q−1)` to `(n,q)` grid fields.
///
/// `∂̄(u dZ∧dz̄_J) = (−1)^n Σ_l ∂u/∂z̄_l dZ∧dz̄_l∧dz̄_J`, with
/// `∂/∂z̄_l = ½(δ_x + iδ_y)` by central differences. Output is produced on
/// the level-`q` mask, whose stencils lie in the level-`(q−1)` mask, so
/// no values from outside the domain are read and the difference
/// operators commute: `∂̄∘∂̄ = 0` holds on any mask.
/// Grid points per parallel work item.
const BLOCK: usize = 1024;

#[derive(Debug, Clone)]
pub struct DbarOperator {
    grid: GridSpec,
    q: usize,
    from_width: usize,
    to_width: usize,
    terms: Vec<Stencil>,
    /// Largest `k` with the point in level `k`, or `u8::MAX` outside the mask.
    depth: Vec<u8>,
}

pub fn discretize_dbar(grid: &GridSpec, q: usize) -> Result<DbarOperator> {
    let n = grid.n();
    if n > 2 {
        return Err(Error::UnsupportedDimension(format!("dbar grids support n <= 2, got {n}")));
    }
    if q == 0 || q > n {
        return Err(Error::Input(format!("dbar into (n,q)-forms needs 1 <= q <= n, got q={q}")));
    }
    let from = IndexBasis::new(n, q - 1)?;
    let to = IndexBasis::new(n, q)?;
    let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut terms = Vec::new();
    for (fi, j) in from.iter().enumerate() {
        for l in 0..n {
            if let Some((s, mask)) = insert_sign(l, j.mask()) {
                let sign = s * parity;
                terms.push(Stencil {
                    l,
                    from: fi,
                    to: to.position_of_mask(mask).expect("degree-q index"),
                    sx: grid.stride(2 * l),
                    sy: grid.stride(2 * l + 1),
                    cx: sign / (4.0 * grid.spacing(2 * l)),
                    cy: sign / (4.0 * grid.spacing(2 * l + 1)),
                });
            }
        }
    }
    let depth = (0..grid.len())
        .map(|p| match (0..=n).take_while(|&k| grid.in_level(p, k)).last() {
            Some(k) => k as u8,
            None => u8::MAX,
        })
        .collect();
    Ok(DbarOperator {
        grid: grid.clone(),
        q,
        from_width: from.len(),
        to_width: to.len(),
        terms,
        depth,
    })
}

impl DbarOperator {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Degree of the target forms.
    pub fn q(&self) -> usize {
        self.q
    }

    pub fn from_width(&self) -> usize {
        self.from_width
    }

    pub fn to_width(&self) -> usize {
        self.to_width
    }

    pub fn from_len(&self) -> usize {
        self.grid.len() * self.from_width
    }

    pub fn to_len(&self) -> usize {
        self.grid.len() * self.to_width
    }

    fn in_level(&self, p: usize, k: usize) -> bool {
        let d = self.depth[p];
        d != u8::MAX && d as usize >= k
    }

    /// `f` at `p ± s` along `axis` if that point is in level `q`, else 0.
    fn outer(&self, f: &[C64], p: usize, axis: usize, dir: isize, comp: usize) -> C64 {
        let nb = if self.in_level(p, 1) {
            Some(if dir > 0 { p + self.grid.stride(axis) } else { p - self.grid.stride(axis) })
        } else {
            self.grid.step(p, axis, dir)
        };
        match nb {
            Some(nb) if self.in_level(nb, self.q) => f[nb * self.to_width + comp],
            _ => C64::new(0.0, 0.0),
        }
    }

    pub fn apply(&self, u: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.to_len()];
        self.apply_into(u, &mut out);
        out
    }

    /// [`Self::apply`] into an existing buffer, overwriting it.
    pub fn apply_into(&self, u: &[C64], out: &mut [C64]) {
        assert_eq!(u.len(), self.from_len());
        assert_eq!(out.len(), self.to_len());
        let w = self.to_width;
        out.par_chunks_mut(w * BLOCK).enumerate().for_each(|(b, block)| {
            for (i, f) in block.chunks_mut(w).enumerate() {
                let p = b * BLOCK + i;
                f.fill(C64::new(0.0, 0.0));
                if !self.in_level(p, self.q) {
                    continue;
                }
                // level-q stencils stay inside level q−1
                let fw = self.from_width;
                for t in &self.terms {
                    let dx = u[(p + t.sx) * fw + t.from] - u[(p - t.sx) * fw + t.from];
                    let dy = u[(p + t.sy) * fw + t.from] - u[(p - t.sy) * fw + t.from];
                    f[t.to] += C64::new(dx.re * t.cx - dy.im * t.cy, dx.im * t.cx + dy.re * t.cy);
                }
            }
        });
    }

    pub fn adjoint(&self, f: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.from_len()];
        self.gather(f, None, &mut out);
        out
    }

    /// `S D* f` for a pointwise scalar `S` into `out`, in one pass.
    pub fn adjoint_scaled_into(&self, f: &[C64], scale: &[f64], out: &mut [C64]) {
        assert_eq!(scale.len(), self.grid.len());
        self.gather(f, Some(scale), out)
    }

    fn gather(&self, f: &[C64], scale: Option<&[f64]>, out: &mut [C64]) {
        assert_eq!(f.len(), self.to_len());
        assert_eq!(out.len(), self.from_len());
        let w = self.from_width;
        out.par_chunks_mut(w * BLOCK).enumerate().for_each(|(b, block)| {
            for (i, u) in block.chunks_mut(w).enumerate() {
                let p = b * BLOCK + i;
                u.fill(C64::new(0.0, 0.0));
                if !self.in_level(p, self.q - 1) {
                    continue;
                }
                let tw = self.to_width;
                let interior = self.in_level(p, self.q + 1);
                for t in &self.terms {
                    let (dx, dy) = if interior {
                        (
                            f[(p - t.sx) * tw + t.to] - f[(p + t.sx) * tw + t.to],
                            f[(p + t.sy) * tw + t.to] - f[(p - t.sy) * tw + t.to],
                        )
                    } else {
                        let (x, y) = (2 * t.l, 2 * t.l + 1);
                        (
                            self.outer(f, p, x, -1, t.to) - self.outer(f, p, x, 1, t.to),
                            self.outer(f, p, y, 1, t.to) - self.outer(f, p, y, -1, t.to),
                        )
                    };
                    u[t.from] += C64::new(dx.re * t.cx - dy.im * t.cy, dx.im * t.cx + dy.re * t.cy);
                }
                if let Some(s) = scale {
                    u.iter_mut().for_each(|c| *c *= s[p]);
                }
            }
        });
    }

    pub fn apply_field(&self, u: &GridField) -> Result<GridField> {
        if u.grid != self.grid || u.q + 1 != self.q {
            return Err(Error::Input(format!(
                "dbar into degree {} needs a degree-{} field on the same grid",
                self.q,
                self.q - 1
            )));
        }
        Ok(GridField {
            grid: self.grid.clone(),
            q: self.q,
            values: self.apply(&u.values),
        })
    }

    /// Diagonal of `D W⁻¹ D*` for pointwise scalar `winv`.
    pub fn normal_diagonal(&self, winv: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.to_len()];
        out.par_chunks_mut(self.to_width).enumerate().for_each(|(p, d)| {
            if !self.in_level(p, self.q) {
                return;
            }
            for t in &self.terms {
                d[t.to] += t.cx * t.cx * (winv[p + t.sx] + winv[p - t.sx]);
                d[t.to] += t.cy * t.cy * (winv[p + t.sy] + winv[p - t.sy]);
            }
        });
        out
    }
}
