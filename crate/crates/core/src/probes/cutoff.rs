use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial `C^∞` cutoff: `χ(t) = 1` for `t ≤ r/2`, `0` for `t ≥ r`, and
/// `1 − S(s)` in between with `s = 2t/r − 1` and the smooth step
/// `S(s) = 1 / (1 + e^{1/s − 1/(1−s)})`, flat to all orders at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub r: f64,
}

/// `(S, S', S'')` at `s ∈ (0,1)`.
fn smooth_step(s: f64) -> (f64, f64, f64) {
    let e = 1.0 / s - 1.0 / (1.0 - s);
    let big = 700.0;
    let step = if e > big {
        0.0
    } else if e < -big {
        1.0
    } else {
        1.0 / (1.0 + e.exp())
    };
    let w = step * (1.0 - step);
    if w == 0.0 {
        return (step, 0.0, 0.0);
    }
    let p = 1.0 / (s * s) + 1.0 / ((1.0 - s) * (1.0 - s));
    let dp = -2.0 / (s * s * s) + 2.0 / ((1.0 - s) * (1.0 - s) * (1.0 - s));
    let d1 = w * p;
    let d2 = d1 * (1.0 - 2.0 * step) * p + w * dp;
    (step, d1, d2)
}

impl Cutoff {
    pub fn new(r: f64) -> Result<Self> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Input(format!("cutoff radius must be positive, got {r}")));
        }
        Ok(Self { r })
    }

    /// `(χ(t), χ'(t), χ''(t))`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        let r = self.r;
        if t <= 0.5 * r {
            return (1.0, 0.0, 0.0);
        }
        if t >= r {
            return (0.0, 0.0, 0.0);
        }
        let s = 2.0 * t / r - 1.0;
        let (step, d1, d2) = smooth_step(s);
        let ds = 2.0 / r;
        (1.0 - step, -d1 * ds, -d2 * ds * ds)
    }

    pub fn value(&self, t: f64) -> f64 {
        self.eval(t).0
    }

    /// `k(t) = χ'(t)/(2t)` and `k'(t)`, the radial factors of `∂χ/∂z̄_j = k ζ_j`.
    pub fn radial_factors(&self, t: f64) -> (f64, f64) {
        let (_, d1, d2) = self.eval(t);
        if d1 == 0.0 && d2 == 0.0 {
            return (0.0, 0.0);
        }
        let k = d1 / (2.0 * t);
        let dk = (d2 - d1 / t) / (2.0 * t);
        (k, dk)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_support_and_monotone() {
        let c = Cutoff::new(0.8).unwrap();
        assert_eq!(c.value(0.0), 1.0);
        assert_eq!(c.value(0.4), 1.0);
        assert_eq!(c.value(0.8), 0.0);
        assert_eq!(c.value(2.0), 0.0);
        let mut last = 1.0;
        for i in 0..=400 {
            let v = c.value(0.4 + 0.4 * i as f64 / 400.0);
            assert!(v <= last + 1e-15 && (0.0..=1.0).contains(&v));
            last = v;
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let c = Cutoff::new(0.8).unwrap();
        let h = 1e-5;
        for i in 1..100 {
            let t = 0.4 + 0.4 * i as f64 / 100.0;
            let (_, d1, d2) = c.eval(t);
            let fd1 = (c.value(t + h) - c.value(t - h)) / (2.0 * h);
            let fd2 = (c.eval(t + h).1 - c.eval(t - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6 * (1.0 + d1.abs()), "t={t}");
            assert!((d2 - fd2).abs() < 1e-5 * (1.0 + d2.abs()), "t={t}");
        }
    }

    #[test]
    fn derivatives_vanish_continuously_at_both_ends() {
        let c = Cutoff::new(1.0).unwrap();
        for t in [0.5 + 1e-3, 1.0 - 1e-3] {
            let (_, d1, d2) = c.eval(t);
            assert!(d1.abs() < 1e-100 && d2.abs() < 1e-100, "t={t}: {d1} {d2}");
        }
    }
}
