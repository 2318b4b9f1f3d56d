//! Discrete curves and the finite-difference geometry on them.
//!
//! A curve is `N` vertices `γ_0..γ_{N-1}` in `R^d` sampled at `u_i = i/N`.
//! Indices wrap modulo `N`; for cocompact curves a wrap also adds the period
//! vector, `γ_{i+N} = γ_i + p`. Edge quantities live at half points
//! `i + 1/2`, vertex quantities at integer points.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{ChenError, Result};

/// Minimum vertex count; the composed fourth-derivative stencil is 5 wide.
pub const MIN_POINTS: usize = 5;

/// An edge shorter than this fraction of the total length rejects the curve.
pub const DEGENERATE_EDGE_TOL: f64 = 1e-14;

/// Winding estimates farther than this from an integer are reported as suspect.
pub const WINDING_SLACK: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveTopology {
    Closed,
    /// Translation-periodic curve: one period is stored and
    /// `γ_{i+N} = γ_i + period`.
    Cocompact { period: Vec<f64> },
}

impl CurveTopology {
    pub fn period(&self) -> Option<&[f64]> {
        match self {
            CurveTopology::Closed => None,
            CurveTopology::Cocompact { period } => Some(period),
        }
    }

    pub fn is_closed(&self) -> bool {
        matches!(self, CurveTopology::Closed)
    }
}

/// A polygonal curve with closed or cocompact topology.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    dim: usize,
    points: Vec<f64>,
    topology: CurveTopology,
}

/// Signed curvature at vertices and its arclength derivative at half points.
#[derive(Debug, Clone)]
pub struct Curvature {
    pub k: Vec<f64>,
    /// `k_s` at `i + 1/2`, i.e. `(k_{i+1} - k_i) / ℓ_i`.
    pub k_s: Vec<f64>,
}

/// Scalar diagnostics of a curve. Planar-only entries are `None` for `d != 2`;
/// area and isoperimetric ratio are also `None` for cocompact curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricReport {
    pub length: f64,
    pub area: Option<f64>,
    pub winding: Option<i64>,
    /// `L³ ∫ (k_s² + k⁴) ds`
    pub q: Option<f64>,
    /// `L ∫ k² ds`
    pub r: Option<f64>,
    /// `1 − 4ωπA / L²`
    pub iso_ratio: Option<f64>,
    /// `max_i |δ_s² γ_i|`
    pub max_curvature: f64,
    /// `max ℓ_i / min ℓ_i`
    pub equidist_ratio: f64,
}

impl DiscreteCurve {
    /// Builds a curve from a flat coordinate buffer `[x0, y0, x1, y1, ...]`.
    pub fn new(dim: usize, points: Vec<f64>, topology: CurveTopology) -> Result<Self> {
        if dim < 2 {
            return Err(ChenError::BadDimension(dim));
        }
        if !points.len().is_multiple_of(dim) {
            return Err(ChenError::RaggedPoints {
                len: points.len(),
                dim,
            });
        }
        let n = points.len() / dim;
        if n < MIN_POINTS {
            return Err(ChenError::TooFewPoints(n));
        }
        if let CurveTopology::Cocompact { period } = &topology {
            if period.len() != dim || period.iter().all(|&p| p == 0.0) {
                return Err(ChenError::BadPeriod);
            }
        }
        let curve = DiscreteCurve {
            dim,
            points,
            topology,
        };
        curve.check_edges()?;
        Ok(curve)
    }

    pub fn from_planar(points: &[[f64; 2]], topology: CurveTopology) -> Result<Self> {
        let flat = points.iter().flat_map(|p| p.iter().copied()).collect();
        Self::new(2, flat, topology)
    }

    /// Same topology and dimension, new coordinates.
    pub fn with_points(&self, points: Vec<f64>) -> Result<Self> {
        Self::new(self.dim, points, self.topology.clone())
    }

    fn check_edges(&self) -> Result<()> {
        let edges = self.edge_lengths();
        let total: f64 = edges.iter().sum();
        for (index, &length) in edges.iter().enumerate() {
            if !(length > DEGENERATE_EDGE_TOL * total) || !length.is_finite() {
                return Err(ChenError::DegenerateEdge { index, length });
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn topology(&self) -> &CurveTopology {
        &self.topology
    }

    pub fn coords(&self) -> &[f64] {
        &self.points
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn is_planar(&self) -> bool {
        self.dim == 2
    }

    /// Maps an unwrapped index to `(stored index, number of periods crossed)`.
    pub fn wrap(&self, j: isize) -> (usize, isize) {
        let n = self.len() as isize;
        (j.rem_euclid(n) as usize, j.div_euclid(n))
    }

    /// Coordinate `c` of `γ_j` for any integer `j`, with the period offset applied.
    #[inline]
    pub fn coord(&self, j: isize, c: usize) -> f64 {
        let (i, shift) = self.wrap(j);
        let base = self.points[i * self.dim + c];
        match &self.topology {
            CurveTopology::Cocompact { period } if shift != 0 => base + shift as f64 * period[c],
            _ => base,
        }
    }

    fn diff_norm(&self, a: isize, b: isize) -> f64 {
        (0..self.dim)
            .map(|c| {
                let d = self.coord(a, c) - self.coord(b, c);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// `ℓ_i = |γ_{i+1} − γ_i|` for `i = 0..N`.
    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.len() as isize)
            .map(|i| self.diff_norm(i + 1, i))
            .collect()
    }

    /// Edge lengths `ℓ_i` and vertex weights `ds_i = (ℓ_{i−1} + ℓ_i) / 2`.
    pub fn edge_and_vertex_lengths(&self) -> (Vec<f64>, Vec<f64>) {
        let edges = self.edge_lengths();
        let n = edges.len();
        let weights = (0..n)
            .map(|i| 0.5 * (edges[(i + n - 1) % n] + edges[i]))
            .collect();
        (edges, weights)
    }

    pub fn length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Centred unit tangents `(γ_{i+1} − γ_{i−1}) / |γ_{i+1} − γ_{i−1}|`, flat.
    pub fn tangents(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let d = self.dim;
        let scale = self.length();
        let mut out = vec![0.0; n * d];
        for i in 0..n {
            let ii = i as isize;
            let norm = self.diff_norm(ii + 1, ii - 1);
            if !(norm > DEGENERATE_EDGE_TOL * scale) {
                return Err(ChenError::CoincidentNeighbours { index: i });
            }
            for c in 0..d {
                out[i * d + c] = (self.coord(ii + 1, c) - self.coord(ii - 1, c)) / norm;
            }
        }
        Ok(out)
    }

    /// Planar normals, the `+π/2` rotation of the tangents.
    pub fn normals(&self) -> Result<Vec<f64>> {
        self.require_planar()?;
        let tau = self.tangents()?;
        Ok(tau
            .chunks_exact(2)
            .flat_map(|t| [-t[1], t[0]])
            .collect())
    }

    fn require_planar(&self) -> Result<()> {
        if self.dim == 2 {
            Ok(())
        } else {
            Err(ChenError::UnsupportedDimension(self.dim))
        }
    }

    /// Per-vertex coefficients `[c₋, c₀, c₊]` of `δ_s²`:
    /// `δ_s² f_i = c₋ f_{i−1} + c₀ f_i + c₊ f_{i+1}`.
    pub fn second_diff_stencil(&self) -> Vec<[f64; 3]> {
        let (edges, weights) = self.edge_and_vertex_lengths();
        let n = edges.len();
        (0..n)
            .map(|i| {
                let minus = 1.0 / (edges[(i + n - 1) % n] * weights[i]);
                let plus = 1.0 / (edges[i] * weights[i]);
                [minus, -(minus + plus), plus]
            })
            .collect()
    }

    /// Per-vertex coefficients of `(δ_s²)²` at offsets `−2..=2`.
    pub fn fourth_diff_stencil(&self) -> Vec<[f64; 5]> {
        let inner = self.second_diff_stencil();
        let n = inner.len();
        (0..n)
            .map(|i| {
                let mut out = [0.0; 5];
                for (p, &outer) in inner[i].iter().enumerate() {
                    let j = (i + n + p - 1) % n;
                    for (q, &c) in inner[j].iter().enumerate() {
                        out[p + q] += outer * c;
                    }
                }
                out
            })
            .collect()
    }

    fn apply_second_diff(&self, f: &[f64], k: usize, offset: Option<&[f64]>) -> Vec<f64> {
        let n = self.len();
        assert_eq!(f.len(), n * k, "field length must be N·k");
        let stencil = self.second_diff_stencil();
        let mut out = vec![0.0; n * k];
        for (i, st) in stencil.iter().enumerate() {
            for (p, &coef) in st.iter().enumerate() {
                let (j, shift) = self.wrap(i as isize + p as isize - 1);
                for c in 0..k {
                    let mut v = f[j * k + c];
                    if let (Some(off), true) = (offset, shift != 0) {
                        v += shift as f64 * off[c];
                    }
                    out[i * k + c] += coef * v;
                }
            }
        }
        out
    }

    /// `δ_s² f` for a periodic field with `k` components per vertex.
    pub fn arclength_d2(&self, f: &[f64], k: usize) -> Vec<f64> {
        self.apply_second_diff(f, k, None)
    }

    /// `δ_s² γ`, with cocompact period offsets added at the wrap.
    pub fn arclength_d2_position(&self) -> Vec<f64> {
        self.apply_second_diff(&self.points, self.dim, self.topology.period())
    }

    /// `(δ_s²)² f` for a periodic field.
    pub fn arclength_d4(&self, f: &[f64], k: usize) -> Vec<f64> {
        let once = self.arclength_d2(f, k);
        self.arclength_d2(&once, k)
    }

    /// `(δ_s²)² γ`.
    pub fn arclength_d4_position(&self) -> Vec<f64> {
        let once = self.arclength_d2_position();
        self.arclength_d2(&once, self.dim)
    }

    /// `max_i |δ_s² γ_i|`, the discrete `‖κ‖∞`.
    pub fn max_curvature(&self) -> f64 {
        self.arclength_d2_position()
            .chunks_exact(self.dim)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn equidist_ratio(&self) -> f64 {
        let edges = self.edge_lengths();
        let max = edges.iter().copied().fold(f64::MIN, f64::max);
        let min = edges.iter().copied().fold(f64::MAX, f64::min);
        max / min
    }

    /// `k_i = ⟨δ_s² γ_i, ν_i⟩` and `k_s` at half points.
    pub fn signed_curvature(&self) -> Result<Curvature> {
        self.require_planar()?;
        let nu = self.normals()?;
        let kappa = self.arclength_d2_position();
        let k: Vec<f64> = kappa
            .chunks_exact(2)
            .zip(nu.chunks_exact(2))
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1])
            .collect();
        let edges = self.edge_lengths();
        let n = k.len();
        let k_s = (0..n).map(|i| (k[(i + 1) % n] - k[i]) / edges[i]).collect();
        Ok(Curvature { k, k_s })
    }

    /// Total turning of the edge directions divided by `2π`.
    pub fn turning_number(&self) -> Result<f64> {
        self.require_planar()?;
        let n = self.len() as isize;
        let edge = |i: isize| {
            [
                self.coord(i + 1, 0) - self.coord(i, 0),
                self.coord(i + 1, 1) - self.coord(i, 1),
            ]
        };
        let total: f64 = (0..n)
            .map(|i| {
                let a = edge(i - 1);
                let b = edge(i);
                (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1])
            })
            .sum();
        Ok(total / (2.0 * PI))
    }

    /// Shoelace signed area of a closed planar polygon.
    pub fn signed_area(&self) -> Result<f64> {
        self.require_planar()?;
        if !self.topology.is_closed() {
            return Err(ChenError::NotApplicable(
                "area of a cocompact curve".into(),
            ));
        }
        let n = self.len();
        let p = &self.points;
        let twice: f64 = (0..n)
            .map(|i| {
                let j = (i + 1) % n;
                p[2 * i] * p[2 * j + 1] - p[2 * j] * p[2 * i + 1]
            })
            .sum();
        Ok(0.5 * twice)
    }

    /// `L³ ∫(k_s² + k⁴) ds` and `L ∫ k² ds` from precomputed curvature.
    fn energy_monitors(&self, curv: &Curvature, edges: &[f64], weights: &[f64]) -> (f64, f64) {
        let length: f64 = edges.iter().sum();
        let ks2: f64 = curv.k_s.iter().zip(edges).map(|(ks, l)| ks * ks * l).sum();
        let k4: f64 = curv.k.iter().zip(weights).map(|(k, w)| k.powi(4) * w).sum();
        let k2: f64 = curv.k.iter().zip(weights).map(|(k, w)| k * k * w).sum();
        (length.powi(3) * (ks2 + k4), length * k2)
    }

    pub fn report(&self) -> Result<GeometricReport> {
        let (edges, weights) = self.edge_and_vertex_lengths();
        let length: f64 = edges.iter().sum();
        let max_edge = edges.iter().copied().fold(f64::MIN, f64::max);
        let min_edge = edges.iter().copied().fold(f64::MAX, f64::min);
        let mut report = GeometricReport {
            length,
            area: None,
            winding: None,
            q: None,
            r: None,
            iso_ratio: None,
            max_curvature: self.max_curvature(),
            equidist_ratio: max_edge / min_edge,
        };
        if !self.is_planar() {
            return Ok(report);
        }
        let turning = self.turning_number()?;
        let winding = turning.round();
        if (turning - winding).abs() > WINDING_SLACK {
            log::warn!("inconsistent curve: turning number {turning:.4} is not near an integer");
        }
        report.winding = Some(winding as i64);
        let curv = self.signed_curvature()?;
        let (q, r) = self.energy_monitors(&curv, &edges, &weights);
        report.q = Some(q);
        report.r = Some(r);
        if self.topology.is_closed() {
            let area = self.signed_area()?;
            report.area = Some(area);
            report.iso_ratio = Some(1.0 - 4.0 * winding * PI * area / (length * length));
        }
        Ok(report)
    }

    /// Resamples to `m` points at equal arclength along the polygon, starting
    /// at `γ_0`.
    pub fn resample_arclength(&self, m: usize) -> Result<DiscreteCurve> {
        if m < MIN_POINTS {
            return Err(ChenError::TooFewPoints(m));
        }
        let n = self.len();
        let d = self.dim;
        let edges = self.edge_lengths();
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        for l in &edges {
            cumulative.push(cumulative.last().unwrap() + l);
        }
        let total = cumulative[n];
        let mut out = Vec::with_capacity(m * d);
        let mut seg = 0;
        for j in 0..m {
            let s = total * j as f64 / m as f64;
            while seg + 1 < n && cumulative[seg + 1] <= s {
                seg += 1;
            }
            let frac = ((s - cumulative[seg]) / edges[seg]).clamp(0.0, 1.0);
            let a = seg as isize;
            for c in 0..d {
                let p0 = self.coord(a, c);
                let p1 = self.coord(a + 1, c);
                out.push(p0 + frac * (p1 - p0));
            }
        }
        DiscreteCurve::new(d, out, self.topology.clone())
    }

    /// Uniformly scaled copy (period vectors scale too).
    pub fn scaled(&self, factor: f64) -> Result<DiscreteCurve> {
        let topology = match &self.topology {
            CurveTopology::Closed => CurveTopology::Closed,
            CurveTopology::Cocompact { period } => CurveTopology::Cocompact {
                period: period.iter().map(|p| p * factor).collect(),
            },
        };
        DiscreteCurve::new(
            self.dim,
            self.points.iter().map(|x| x * factor).collect(),
            topology,
        )
    }

    /// Vertex centroid weighted by `ds_i`.
    pub fn weighted_centroid(&self) -> Vec<f64> {
        let (_, weights) = self.edge_and_vertex_lengths();
        let total: f64 = weights.iter().sum();
        (0..self.dim)
            .map(|c| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * self.points[i * self.dim + c])
                    .sum::<f64>()
                    / total
            })
            .collect()
    }

    /// Area centroid of a closed planar polygon; falls back to the weighted
    /// vertex centroid when the signed area vanishes (figure-eights).
    pub fn area_centroid(&self) -> Result<[f64; 2]> {
        let area = self.signed_area()?;
        let fallback = self.weighted_centroid();
        if area.abs() <= 1e-12 * self.length().powi(2) {
            return Ok([fallback[0], fallback[1]]);
        }
        let n = self.len();
        let p = &self.points;
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let j = (i + 1) % n;
            let cross = p[2 * i] * p[2 * j + 1] - p[2 * j] * p[2 * i + 1];
            cx += (p[2 * i] + p[2 * j]) * cross;
            cy += (p[2 * i + 1] + p[2 * j + 1]) * cross;
        }
        Ok([cx / (6.0 * area), cy / (6.0 * area)])
    }
}

/// Largest distance from a vertex of `curve` to the closed polyline `reference`
/// and vice versa (discrete Hausdorff distance between the two polygons'
/// vertex sets and edges).
pub fn hausdorff_distance(curve: &[f64], reference: &[f64]) -> f64 {
    fn one_sided(points: &[f64], poly: &[f64]) -> f64 {
        let m = poly.len() / 2;
        points
            .chunks_exact(2)
            .map(|p| {
                (0..m)
                    .map(|i| {
                        let j = (i + 1) % m;
                        segment_distance(p, &poly[2 * i..2 * i + 2], &poly[2 * j..2 * j + 2])
                    })
                    .fold(f64::MAX, f64::min)
            })
            .fold(0.0, f64::max)
    }
    one_sided(curve, reference).max(one_sided(reference, curve))
}

fn segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
    let (px, py) = (p[0] - a[0], p[1] - a[1]);
    let len2 = ex * ex + ey * ey;
    let t = if len2 > 0.0 {
        ((px * ex + py * ey) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((px - t * ex).powi(2) + (py - t * ey).powi(2)).sqrt()
}
