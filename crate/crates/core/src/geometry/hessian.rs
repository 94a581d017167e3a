use crate::error::{Error, Result};
use crate::geometry::weight::Weight;
use crate::linalg::{CMatrix, HermitianMatrix, C64};

/// Default central-difference step for complex Hessians.
pub const DEFAULT_H_STEP: f64 = 1e-3;

/// Complex Hessian `(∂²φ/∂z_j∂z̄_k)_{jk}` at `z`.
///
/// Uses the exact Hessian when the weight carries one. Otherwise requires
/// `z` to sit at least `2·h_step` inside the weight's domain (when one is
/// attached) and falls back to [`finite_difference_hessian`].
pub fn complex_hessian(w: &Weight, z: &[C64], h_step: f64) -> Result<HermitianMatrix> {
    if z.len() != w.dim() {
        return Err(Error::Input(format!(
            "point has dimension {}, weight has {}",
            z.len(),
            w.dim()
        )));
    }
    if let Some(h) = w.exact_hessian(z) {
        if !h.matrix().is_finite() {
            return Err(Error::NonFinite(format!("exact Hessian of '{}'", w.label())));
        }
        return Ok(h);
    }
    if let Some(d) = w.domain() {
        let dist = d.distance_to_boundary(z);
        if dist < 2.0 * h_step {
            return Err(Error::Margin {
                point: z.iter().map(|c| [c.re, c.im]).collect(),
                distance: dist,
                required: 2.0 * h_step,
            });
        }
    }
    finite_difference_hessian(w, z, h_step)
}

/// Central-difference complex Hessian through the real-coordinate identity
/// `∂²/∂z_j∂z̄_k = ¼[(∂x_j∂x_k + ∂y_j∂y_k) + i(∂x_j∂y_k − ∂y_j∂x_k)]`.
pub fn finite_difference_hessian(w: &Weight, z: &[C64], h: f64) -> Result<HermitianMatrix> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::Input(format!("h_step must be positive, got {h}")));
    }
    let n = z.len();
    let m = 2 * n;
    let mut x: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
    let eval = |x: &[f64]| -> Result<f64> {
        let p: Vec<C64> = x.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
        let v = w.eval(&p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("weight '{}' at {:?}", w.label(), p)))
        }
    };

    let f0 = eval(&x)?;
    let mut d2 = vec![0.0; m * m];
    let h2 = h * h;
    for a in 0..m {
        let xa = x[a];
        x[a] = xa + h;
        let fp = eval(&x)?;
        x[a] = xa - h;
        let fm = eval(&x)?;
        x[a] = xa;
        d2[a * m + a] = (fp - 2.0 * f0 + fm) / h2;
    }
    for a in 0..m {
        for b in (a + 1)..m {
            let (xa, xb) = (x[a], x[b]);
            let corner = |sa: f64, sb: f64, x: &mut Vec<f64>| -> Result<f64> {
                x[a] = xa + sa * h;
                x[b] = xb + sb * h;
                let v = eval(x);
                x[a] = xa;
                x[b] = xb;
                v
            };
            let fpp = corner(1.0, 1.0, &mut x)?;
            let fpm = corner(1.0, -1.0, &mut x)?;
            let fmp = corner(-1.0, 1.0, &mut x)?;
            let fmm = corner(-1.0, -1.0, &mut x)?;
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h2);
            d2[a * m + b] = v;
            d2[b * m + a] = v;
        }
    }

    let hess = CMatrix::from_fn(n, n, |j, k| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        let re = d2[xj * m + xk] + d2[yj * m + yk];
        let im = d2[xj * m + yk] - d2[yj * m + xk];
        C64::new(0.25 * re, 0.25 * im)
    });
    HermitianMatrix::new(hess)
}
