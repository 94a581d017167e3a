use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for i in 0..order.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // three-term recurrence for P_order and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 1 { x } else { p1 };
            let pm1 = if order == 1 { 1.0 } else { p0 };
            dp = n * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    if order % 2 == 1 {
        nodes[order / 2] = 0.0;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule over consecutive `panels` (given by their
/// breakpoints).
pub fn composite_rule(breaks: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let mut nodes = Vec::with_capacity((breaks.len() - 1) * order);
    let mut weights = Vec::with_capacity(nodes.capacity());
    for ab in breaks.windows(2) {
        let (mid, half) = (0.5 * (ab[0] + ab[1]), 0.5 * (ab[1] - ab[0]));
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + half * xi);
            weights.push(half * wi);
        }
    }
    (nodes, weights)
}

/// Resolution of [`ball_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallLevel {
    /// Gauss order per radial panel.
    pub radial_order: usize,
    /// Equal panels on `[r/2, r]`.
    pub outer_panels: usize,
    /// Gauss order per orthant angle.
    pub angular_order: usize,
    /// Trapezoid points per phase.
    pub phases: usize,
}

/// Radial panels below `r/2` are graded by halving down to `r / 2^GRADED_PANELS`.
pub const GRADED_PANELS: usize = 10;

impl BallLevel {
    pub fn base(n: usize) -> Self {
        if n <= 2 {
            Self { radial_order: 8, outer_panels: 6, angular_order: 10, phases: 12 }
        } else {
            Self { radial_order: 8, outer_panels: 6, angular_order: 6, phases: 8 }
        }
    }

    pub fn refined(n: usize) -> Self {
        if n <= 2 {
            Self { radial_order: 12, outer_panels: 9, angular_order: 16, phases: 20 }
        } else {
            Self { radial_order: 12, outer_panels: 9, angular_order: 9, phases: 12 }
        }
    }
}

/// Maximum dimension supported by the ball quadrature.
pub const MAX_BALL_DIM: usize = 3;

/// Nodes and weights for `∫_{|ζ| < r} f dV` on `ℂ^n` in polar form
/// `ζ_j = t u_j e^{iθ_j}` with `u` on the positive orthant of the unit
/// sphere, `dV = t^{2n−1} Π u_j dσ(u) dt dθ`.
#[derive(Debug, Clone)]
pub struct BallQuadrature {
    pub n: usize,
    pub r: f64,
    /// Node coordinates, `n` per node.
    pub points: Vec<C64>,
    pub weights: Vec<f64>,
}

impl BallQuadrature {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[C64] {
        &self.points[i * self.n..(i + 1) * self.n]
    }
}

pub fn ball_quadrature(n: usize, r: f64, level: BallLevel) -> Result<BallQuadrature> {
    if n == 0 || n > MAX_BALL_DIM {
        return Err(Error::Refused(format!("ball quadrature supports 1 <= n <= {MAX_BALL_DIM}, got {n}")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Input(format!("ball radius must be positive, got {r}")));
    }
    let mut breaks = vec![0.0];
    for k in (1..=GRADED_PANELS).rev() {
        breaks.push(r / 2f64.powi(k as i32));
    }
    for k in 1..=level.outer_panels {
        breaks.push(0.5 * r + 0.5 * r * k as f64 / level.outer_panels as f64);
    }
    let (radii, radial_w) = composite_rule(&breaks, level.radial_order);

    // orthant directions u with weight Π u_j dσ(u)
    let (ax, aw) = composite_rule(&[0.0, FRAC_PI_2], level.angular_order);
    let mut dirs: Vec<(Vec<f64>, f64)> = vec![(vec![1.0], 1.0)];
    for _ in 1..n {
        let mut next = Vec::with_capacity(dirs.len() * ax.len());
        for (u, w) in &dirs {
            // split the last coordinate s into (s cos α, s sin α); going
            // from S^{d−1} to S^d the sphere element gains a factor s
            let d = u.len();
            let s = u[d - 1];
            for (a, wa) in ax.iter().zip(&aw) {
                let mut v = u[..d - 1].to_vec();
                v.push(s * a.cos());
                v.push(s * a.sin());
                next.push((v, w * wa * s));
            }
        }
        dirs = next;
    }
    let dirs: Vec<(Vec<f64>, f64)> = dirs
        .into_iter()
        .map(|(u, w)| {
            let prod: f64 = u.iter().product();
            (u, w * prod)
        })
        .collect();

    let phase_w = TAU / level.phases as f64;
    let total = level.phases.pow(n as u32);
    let count = radii.len() * dirs.len() * total;
    let mut points = Vec::with_capacity(count * n);
    let mut weights = Vec::with_capacity(count);
    for (t, wt) in radii.iter().zip(&radial_w) {
        let wt = wt * t.powi(2 * n as i32 - 1);
        for (u, wu) in &dirs {
            for code in 0..total {
                let mut c = code;
                for uj in u {
                    let k = c % level.phases;
                    c /= level.phases;
                    points.push(C64::from_polar(t * uj, phase_w * (k as f64 + 0.5)));
                }
                weights.push(wt * wu * phase_w.powi(n as i32));
            }
        }
    }
    Ok(BallQuadrature { n, r, points, weights })
}
