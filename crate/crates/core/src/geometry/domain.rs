use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::sampling::{halton_points, MAX_HALTON_DIM};
use crate::linalg::C64;

/// Fraction of each radius kept free when sampling the interior.
pub const SAMPLE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Polydisc,
    Ball,
    Box,
}

/// A bounded pseudoconvex domain in `ℂ^n`.
///
/// `radii` holds one radius per complex axis for a polydisc, a single
/// radius for a ball, and one half-width per real axis
/// (`x_1, y_1, x_2, y_2, …`) for a box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub kind: DomainKind,
    #[serde(with = "pairs")]
    pub center: Vec<C64>,
    pub radii: Vec<f64>,
}

mod pairs {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{from_pairs, to_pairs, C64};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let p: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(from_pairs(&p))
    }
}

impl Domain {
    pub fn new(kind: DomainKind, center: Vec<C64>, radii: Vec<f64>) -> Result<Self> {
        let d = Self { kind, center, radii };
        d.validate()?;
        Ok(d)
    }

    pub fn polydisc(center: Vec<C64>, radii: Vec<f64>) -> Result<Self> {
        Self::new(DomainKind::Polydisc, center, radii)
    }

    pub fn ball(center: Vec<C64>, radius: f64) -> Result<Self> {
        Self::new(DomainKind::Ball, center, vec![radius])
    }

    pub fn boxed(center: Vec<C64>, half_widths: Vec<f64>) -> Result<Self> {
        Self::new(DomainKind::Box, center, half_widths)
    }

    /// Unit polydisc centred at the origin.
    pub fn unit_polydisc(n: usize) -> Self {
        Self::polydisc(vec![C64::new(0.0, 0.0); n], vec![1.0; n]).expect("valid unit polydisc")
    }

    pub fn unit_ball(n: usize) -> Self {
        Self::ball(vec![C64::new(0.0, 0.0); n], 1.0).expect("valid unit ball")
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.center.len();
        if n == 0 {
            return Err(Error::Input("domain dimension must be >= 1".into()));
        }
        if 2 * n > MAX_HALTON_DIM {
            return Err(Error::Input(format!("domain dimension {n} too large")));
        }
        let expected = match self.kind {
            DomainKind::Polydisc => n,
            DomainKind::Ball => 1,
            DomainKind::Box => 2 * n,
        };
        if self.radii.len() != expected {
            return Err(Error::Input(format!(
                "{:?} in C^{n} needs {expected} radii, got {}",
                self.kind,
                self.radii.len()
            )));
        }
        if self.radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::Input("domain radii must be finite and positive".into()));
        }
        if self.center.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Input("domain center must be finite".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Signed distance-like margin: positive inside, the smallest gap to
    /// the boundary along the defining constraints.
    pub fn distance_to_boundary(&self, z: &[C64]) -> f64 {
        match self.kind {
            DomainKind::Polydisc => z
                .iter()
                .zip(&self.center)
                .zip(&self.radii)
                .map(|((z, c), r)| r - (z - c).norm())
                .fold(f64::INFINITY, f64::min),
            DomainKind::Ball => {
                let d: f64 = z.iter().zip(&self.center).map(|(z, c)| (z - c).norm_sqr()).sum();
                self.radii[0] - d.sqrt()
            }
            DomainKind::Box => z
                .iter()
                .zip(&self.center)
                .enumerate()
                .flat_map(|(j, (z, c))| {
                    let d = z - c;
                    [self.radii[2 * j] - d.re.abs(), self.radii[2 * j + 1] - d.im.abs()]
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, z: &[C64]) -> bool {
        self.distance_to_boundary(z) > 0.0
    }

    /// Half-widths of the axis-aligned bounding box, per real axis.
    pub fn bounding_half_widths(&self) -> Vec<f64> {
        let n = self.dim();
        match self.kind {
            DomainKind::Polydisc => self.radii.iter().flat_map(|&r| [r, r]).collect(),
            DomainKind::Ball => vec![self.radii[0]; 2 * n],
            DomainKind::Box => self.radii.clone(),
        }
    }

    /// Maps a point of `[0,1)^{2n}` into the domain, keeping a
    /// [`SAMPLE_MARGIN`] fraction of each radius clear of the boundary.
    pub fn map_unit_cube(&self, u: &[f64]) -> Vec<C64> {
        use std::f64::consts::TAU;
        let n = self.dim();
        let shrink = 1.0 - SAMPLE_MARGIN;
        match self.kind {
            DomainKind::Polydisc => (0..n)
                .map(|j| {
                    let rho = shrink * self.radii[j] * u[2 * j].sqrt();
                    self.center[j] + C64::from_polar(rho, TAU * u[2 * j + 1])
                })
                .collect(),
            DomainKind::Ball => {
                // radial map of the cube [-1,1]^{2n} onto the unit ball
                let x: Vec<f64> = u.iter().map(|t| 2.0 * t - 1.0).collect();
                let l2 = x.iter().map(|t| t * t).sum::<f64>().sqrt();
                let linf = x.iter().fold(0.0f64, |m, t| m.max(t.abs()));
                let scale = if l2 > 0.0 { linf / l2 } else { 0.0 };
                let s = shrink * self.radii[0] * scale;
                (0..n)
                    .map(|j| self.center[j] + C64::new(s * x[2 * j], s * x[2 * j + 1]))
                    .collect()
            }
            DomainKind::Box => (0..n)
                .map(|j| {
                    let re = shrink * self.radii[2 * j] * (2.0 * u[2 * j] - 1.0);
                    let im = shrink * self.radii[2 * j + 1] * (2.0 * u[2 * j + 1] - 1.0);
                    self.center[j] + C64::new(re, im)
                })
                .collect(),
        }
    }

    /// Deterministic Halton sample of the interior.
    pub fn sample(&self, count: usize) -> Vec<Vec<C64>> {
        halton_points(count, 2 * self.dim())
            .iter()
            .map(|u| self.map_unit_cube(u))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_stay_inside_with_margin() {
        let c = vec![C64::new(0.5, -0.25), C64::new(0.0, 1.0)];
        let domains = [
            Domain::polydisc(c.clone(), vec![1.0, 0.5]).unwrap(),
            Domain::ball(c.clone(), 0.7).unwrap(),
            Domain::boxed(c.clone(), vec![1.0, 0.2, 0.3, 0.4]).unwrap(),
        ];
        for d in &domains {
            for z in d.sample(500) {
                let dist = d.distance_to_boundary(&z);
                let rmin = d.radii.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(dist >= SAMPLE_MARGIN * rmin - 1e-12, "{d:?} {z:?} {dist}");
            }
        }
    }

    #[test]
    fn rejects_bad_radii() {
        let c = vec![C64::new(0.0, 0.0)];
        assert!(Domain::polydisc(c.clone(), vec![0.0]).is_err());
        assert!(Domain::polydisc(c.clone(), vec![1.0, 1.0]).is_err());
        assert!(Domain::boxed(c.clone(), vec![1.0]).is_err());
        assert!(Domain::ball(vec![], 1.0).is_err());
    }

    #[test]
    fn ball_map_covers_radius() {
        let d = Domain::unit_ball(2);
        let far = d
            .sample(2000)
            .iter()
            .map(|z| z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        assert!(far > 0.9 && far <= 0.95 + 1e-12);
    }
}
