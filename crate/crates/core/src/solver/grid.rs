use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::domain::Domain;
use crate::linalg::{from_pairs, to_pairs, C64};
use crate::multi_index::{binomial, multi_indices, MultiIndex};

pub const MIN_POINTS_PER_AXIS: usize = 16;
pub const MAX_TOTAL_POINTS: usize = 1 << 24;
/// Compactly supported fields vanish within this many grid steps of the
/// domain boundary.
pub const MARGIN_STEPS: f64 = 4.0;

/// A cell-centred uniform grid over a box in `ℂ^n = ℝ^{2n}`, optionally
/// masked by a domain. Real axes are ordered `x_1, y_1, x_2, y_2, …`;
/// point indices are row-major with the last axis fastest.
///
/// Degree-`k` fields live on the level-`k` mask: level 0 is the domain
/// mask and level `k+1` keeps the level-`k` points whose axis neighbours
/// are all in level `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridWire", into = "GridWire")]
pub struct GridSpec {
    n: usize,
    lower: Vec<f64>,
    extent: Vec<f64>,
    points_per_axis: usize,
    domain: Option<Domain>,
    strides: Vec<usize>,
    levels: Vec<Vec<bool>>,
}

#[derive(Serialize, Deserialize)]
struct GridWire {
    n: usize,
    lower: Vec<f64>,
    extent: Vec<f64>,
    points_per_axis: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<Domain>,
}

impl TryFrom<GridWire> for GridSpec {
    type Error = Error;

    fn try_from(w: GridWire) -> Result<Self> {
        GridSpec::new(w.n, w.lower, w.extent, w.points_per_axis, w.domain)
    }
}

impl From<GridSpec> for GridWire {
    fn from(g: GridSpec) -> Self {
        Self {
            n: g.n,
            lower: g.lower,
            extent: g.extent,
            points_per_axis: g.points_per_axis,
            domain: g.domain,
        }
    }
}

impl GridSpec {
    pub fn new(
        n: usize,
        lower: Vec<f64>,
        extent: Vec<f64>,
        points_per_axis: usize,
        domain: Option<Domain>,
    ) -> Result<Self> {
        if !(1..=2).contains(&n) {
            return Err(Error::UnsupportedDimension(format!("grids support n in {{1,2}}, got n={n}")));
        }
        if lower.len() != 2 * n || extent.len() != 2 * n {
            return Err(Error::Input(format!("grid needs {} lower corners and extents", 2 * n)));
        }
        if lower.iter().any(|x| !x.is_finite()) || extent.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
            return Err(Error::Input("grid box must be finite with positive extents".into()));
        }
        if points_per_axis < MIN_POINTS_PER_AXIS {
            return Err(Error::Input(format!(
                "points_per_axis must be >= {MIN_POINTS_PER_AXIS}, got {points_per_axis}"
            )));
        }
        let total = (points_per_axis as u128).pow(2 * n as u32);
        if total > MAX_TOTAL_POINTS as u128 {
            return Err(Error::Refused(format!("grid has {total} points, limit is {MAX_TOTAL_POINTS}")));
        }
        if let Some(d) = &domain {
            d.validate()?;
            if d.dim() != n {
                return Err(Error::Input("grid and domain dimensions differ".into()));
            }
        }
        let mut g = Self {
            n,
            lower,
            extent,
            points_per_axis,
            domain,
            strides: (0..2 * n).map(|a| points_per_axis.pow((2 * n - 1 - a) as u32)).collect(),
            levels: Vec::new(),
        };
        let mask = match &g.domain {
            Some(d) => (0..g.len()).into_par_iter().map(|p| d.contains(&g.point(p))).collect(),
            None => vec![true; g.len()],
        };
        g.levels.push(mask);
        for _ in 0..n {
            let prev = g.levels.last().expect("level 0");
            let next = (0..g.len())
                .into_par_iter()
                .map(|p| {
                    prev[p]
                        && (0..2 * n).all(|a| [-1, 1].iter().all(|&d| g.step(p, a, d).is_some_and(|q| prev[q])))
                })
                .collect();
            g.levels.push(next);
        }
        Ok(g)
    }

    /// The bounding box of `d`, masked by `d`.
    pub fn over_domain(d: &Domain, points_per_axis: usize) -> Result<Self> {
        let hw = d.bounding_half_widths();
        let lower = (0..2 * d.dim())
            .map(|a| {
                let c = d.center[a / 2];
                (if a % 2 == 0 { c.re } else { c.im }) - hw[a]
            })
            .collect();
        let extent = hw.iter().map(|w| 2.0 * w).collect();
        Self::new(d.dim(), lower, extent, points_per_axis, Some(d.clone()))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn domain(&self) -> Option<&Domain> {
        self.domain.as_ref()
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(2 * self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.points_per_axis as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..2 * self.n).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Volume of one cell, `Π_a h_a`.
    pub fn cell_volume(&self) -> f64 {
        (0..2 * self.n).map(|a| self.spacing(a)).product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn axis_index(&self, p: usize, axis: usize) -> usize {
        (p / self.stride(axis)) % self.points_per_axis
    }

    pub fn point(&self, p: usize) -> Vec<C64> {
        let coord = |a: usize| self.lower[a] + (self.axis_index(p, a) as f64 + 0.5) * self.spacing(a);
        (0..self.n).map(|j| C64::new(coord(2 * j), coord(2 * j + 1))).collect()
    }

    /// Grid point one step from `p` along `axis` in direction `dir` (±1).
    pub fn step(&self, p: usize, axis: usize, dir: isize) -> Option<usize> {
        let i = self.axis_index(p, axis) as isize + dir;
        if i < 0 || i >= self.points_per_axis as isize {
            return None;
        }
        let s = self.stride(axis);
        Some(if dir > 0 { p + s } else { p - s })
    }

    /// [`Self::step`], kept only when the neighbour is in level `k`.
    pub fn neighbour_in(&self, p: usize, axis: usize, dir: isize, k: usize) -> Option<usize> {
        self.step(p, axis, dir).filter(|&q| self.levels[k][q])
    }

    pub fn in_mask(&self, p: usize) -> bool {
        self.levels[0][p]
    }

    pub fn mask(&self) -> &[bool] {
        &self.levels[0]
    }

    /// Whether `p` carries degree-`k` coefficients.
    pub fn in_level(&self, p: usize, k: usize) -> bool {
        self.levels[k][p]
    }

    /// Masked points closer than [`MARGIN_STEPS`] grid steps to the
    /// boundary of the domain (or of the box when unmasked).
    pub fn in_margin_band(&self, p: usize) -> bool {
        if !self.in_mask(p) {
            return false;
        }
        let band = MARGIN_STEPS * self.max_spacing();
        match &self.domain {
            Some(d) => d.distance_to_boundary(&self.point(p)) < band,
            None => (0..2 * self.n).any(|a| {
                let i = self.axis_index(p, a) as f64 + 0.5;
                let dist = i.min(self.points_per_axis as f64 - i) * self.spacing(a);
                dist < band
            }),
        }
    }
}

/// Coefficients of an `(n,q)`-form at every grid point, point-major.
/// Points outside the domain mask hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: GridSpec,
    pub q: usize,
    pub values: Vec<C64>,
}

impl GridField {
    pub fn zeros(grid: &GridSpec, q: usize) -> Result<Self> {
        if q > grid.n {
            return Err(Error::Input(format!("degree q={q} exceeds n={}", grid.n)));
        }
        Ok(Self {
            grid: grid.clone(),
            q,
            values: vec![C64::new(0.0, 0.0); grid.len() * binomial(grid.n, q)],
        })
    }

    /// Samples `f` at masked points.
    pub fn from_fn(grid: &GridSpec, q: usize, f: impl Fn(&[C64]) -> Vec<C64> + Sync) -> Result<Self> {
        let mut field = Self::zeros(grid, q)?;
        let width = field.width();
        field.values.par_chunks_mut(width).enumerate().try_for_each(|(p, out)| {
            if !grid.in_mask(p) {
                return Ok(());
            }
            let v = f(&grid.point(p));
            if v.len() != width {
                return Err(Error::Input(format!("field closure returned {} coefficients, need {width}", v.len())));
            }
            if v.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
                return Err(Error::NonFinite(format!("field value at {:?}", grid.point(p))));
            }
            out.copy_from_slice(&v);
            Ok(())
        })?;
        Ok(field)
    }

    /// Number of coefficients per point.
    pub fn width(&self) -> usize {
        binomial(self.grid.n, self.q)
    }

    pub fn at(&self, p: usize) -> &[C64] {
        let w = self.width();
        &self.values[p * w..(p + 1) * w]
    }

    /// Zeroes the coefficients outside the level-`q` mask, where a
    /// degree-`q` field can lie in the range of the discrete `∂̄`.
    pub fn restrict_to_level(mut self) -> Self {
        let w = self.width();
        for p in 0..self.grid.len() {
            if !self.grid.in_level(p, self.q) {
                self.values[p * w..(p + 1) * w].fill(C64::new(0.0, 0.0));
            }
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    /// Largest coefficient modulus inside the margin band.
    pub fn margin_band_max(&self) -> f64 {
        (0..self.grid.len())
            .into_par_iter()
            .filter(|&p| self.grid.in_margin_band(p))
            .map(|p| self.at(p).iter().map(|c| c.norm()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    /// `Σ_x |f(x)|² e^{−w(x)} dV` over masked points.
    pub fn weighted_norm_sqr(&self, weight: &[f64]) -> f64 {
        let w = self.width();
        let partial: Vec<f64> = self
            .values
            .par_chunks(w * 1024)
            .enumerate()
            .map(|(chunk, vals)| {
                vals.chunks(w)
                    .enumerate()
                    .map(|(k, v)| {
                        let p = chunk * 1024 + k;
                        if self.grid.in_mask(p) {
                            v.iter().map(|c| c.norm_sqr()).sum::<f64>() * (-weight[p]).exp()
                        } else {
                            0.0
                        }
                    })
                    .sum()
            })
            .collect();
        partial.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// One row per masked point: real coordinates, then `re`/`im` per
    /// coefficient (`re_1_2`, `im_1_2` for `dz̄_1 ∧ dz̄_2`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.grid.n;
        let labels: Vec<String> = multi_indices(n, self.q)?
            .iter()
            .map(|m| {
                let s: Vec<String> = m.one_based().iter().map(|i| i.to_string()).collect();
                if s.is_empty() {
                    "0".to_string()
                } else {
                    s.join("_")
                }
            })
            .collect();
        let mut header: Vec<String> = (1..=n).flat_map(|j| [format!("x{j}"), format!("y{j}")]).collect();
        for l in &labels {
            header.push(format!("re_{l}"));
            header.push(format!("im_{l}"));
        }
        let io = |e: csv::Error| Error::Input(format!("writing CSV: {e}"));
        w.write_record(&header).map_err(io)?;
        for p in 0..self.grid.len() {
            if !self.grid.in_mask(p) {
                continue;
            }
            let mut row: Vec<String> = self
                .grid
                .point(p)
                .iter()
                .flat_map(|z| [z.re.to_string(), z.im.to_string()])
                .collect();
            for c in self.at(p) {
                row.push(c.re.to_string());
                row.push(c.im.to_string());
            }
            w.write_record(&row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Input(format!("writing CSV: {e}")))?;
        Ok(())
    }
}

/// JSON layout: `{grid, n, q, ordering, values}` with `values` point-major
/// `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct FieldWire {
    grid: GridSpec,
    n: usize,
    q: usize,
    ordering: Vec<MultiIndex>,
    values: Vec<[f64; 2]>,
}

impl Serialize for GridField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldWire {
            grid: self.grid.clone(),
            n: self.grid.n,
            q: self.q,
            ordering: multi_indices(self.grid.n, self.q).map_err(serde::ser::Error::custom)?,
            values: to_pairs(&self.values),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = FieldWire::deserialize(d)?;
        if w.n != w.grid.n {
            return Err(D::Error::custom("field n differs from grid n"));
        }
        let expected = multi_indices(w.n, w.q).map_err(D::Error::custom)?;
        if w.ordering != expected {
            return Err(D::Error::custom("ordering must be lexicographic"));
        }
        if w.values.len() != w.grid.len() * expected.len() {
            return Err(D::Error::custom("values length does not match grid"));
        }
        Ok(Self {
            grid: w.grid,
            q: w.q,
            values: from_pairs(&w.values),
        })
    }
}
