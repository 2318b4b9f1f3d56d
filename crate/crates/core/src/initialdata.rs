//! Initial curves: circles, ellipses, lemniscates, the Lamé curve, stars,
//! limaçons, dumbbells, cocompact graphs and file input.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;

use crate::analytic::convtest_g;
use crate::error::{ChenError, Result};
use crate::geometry::{CurveTopology, DiscreteCurve};
use crate::io::load_curve;

/// Oversampling factor used before arclength resampling of parametric shapes.
const OVERSAMPLE: usize = 32;

/// Largest `ℛ(0)` for which the cocompact convergence theorem applies.
pub const COCOMPACT_R_LIMIT: f64 = 0.75;

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn one_u() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// Round `ω`-fold circle; `radius` wins over `length`, default radius 1.
    Circle {
        #[serde(default = "one_u")]
        omega: u32,
        #[serde(default)]
        radius: Option<f64>,
        #[serde(default)]
        length: Option<f64>,
    },
    /// `x = ratio·cos θ`, `y = sin θ`.
    Ellipse {
        #[serde(default = "two")]
        axis_ratio: f64,
    },
    BernoulliLemniscate {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `(x² + y²)² = x² − c y²`, horizontal extent `2·scale`.
    GeronoVariant {
        #[serde(default = "default_gerono_c")]
        c: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `x⁴/256 + y² = 1`.
    Lame,
    /// Polar `r = 1 + amp·cos(lobes·θ)`.
    Star {
        #[serde(default = "default_star_amp")]
        amp: f64,
        #[serde(default = "default_star_lobes")]
        lobes: u32,
    },
    /// Polar `r = loop_param + cos θ`; an inner loop for `loop_param < 1`.
    Limacon {
        #[serde(default = "default_limacon")]
        loop_param: f64,
    },
    /// Neck branches `y = ±(x⁴/4 + c/2)` on `[−1, 1]` closed by circular caps.
    Dumbbell {
        #[serde(default = "default_neck")]
        neck_gap: f64,
    },
    /// One period of `y = A sin(2π f x)`, period vector `(1, 0)`.
    CocompactGraph {
        #[serde(default)]
        amplitude: f64,
        #[serde(default = "one_u")]
        frequency: u32,
    },
    /// Unit circle parametrised by `g(u, 0)` from the convergence test.
    ConvergenceTest,
    FromFile { path: PathBuf },
}

fn default_gerono_c() -> f64 {
    10.0
}
fn default_star_amp() -> f64 {
    0.1
}
fn default_star_lobes() -> u32 {
    5
}
fn default_limacon() -> f64 {
    0.5
}
fn default_neck() -> f64 {
    0.04
}
fn default_n() -> usize {
    256
}

impl Shape {
    pub fn name(&self) -> &'static str {
        match self {
            Shape::Circle { .. } => "circle",
            Shape::Ellipse { .. } => "ellipse",
            Shape::BernoulliLemniscate { .. } => "bernoulli_lemniscate",
            Shape::GeronoVariant { .. } => "gerono_variant",
            Shape::Lame => "lame",
            Shape::Star { .. } => "star",
            Shape::Limacon { .. } => "limacon",
            Shape::Dumbbell { .. } => "dumbbell",
            Shape::CocompactGraph { .. } => "cocompact_graph",
            Shape::ConvergenceTest => "convergence_test",
            Shape::FromFile { .. } => "from_file",
        }
    }

    /// Winding number the generator is built to have, where known.
    pub fn expected_winding(&self) -> Option<i64> {
        match self {
            Shape::Circle { omega, .. } => Some(*omega as i64),
            Shape::BernoulliLemniscate { .. } | Shape::GeronoVariant { .. } => Some(0),
            Shape::Limacon { loop_param } => Some(if *loop_param < 1.0 { 2 } else { 1 }),
            Shape::Ellipse { .. }
            | Shape::Lame
            | Shape::Star { .. }
            | Shape::Dumbbell { .. }
            | Shape::ConvergenceTest => Some(1),
            Shape::CocompactGraph { .. } | Shape::FromFile { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub shape: Shape,
    /// Number of vertices. For files, `0` keeps the stored vertices.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Redistribute vertices at equal arclength.
    #[serde(default)]
    pub resample_to_arclength: bool,
    /// Rescale so the polygon has this length.
    #[serde(default)]
    pub normalize_length: Option<f64>,
}

impl CurveSpec {
    pub fn new(shape: Shape, n: usize) -> Self {
        CurveSpec {
            shape,
            n,
            resample_to_arclength: false,
            normalize_length: None,
        }
    }

    pub fn resampled(mut self) -> Self {
        self.resample_to_arclength = true;
        self
    }

    pub fn with_length(mut self, length: f64) -> Self {
        self.normalize_length = Some(length);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ChenError::InvalidConfig(msg));
        if self.n != 0 && self.n < crate::geometry::MIN_POINTS {
            return bad(format!("n = {} is below the minimum of 5", self.n));
        }
        if self.n == 0 && !matches!(self.shape, Shape::FromFile { .. }) {
            return bad("n must be given for generated shapes".into());
        }
        if let Some(l) = self.normalize_length {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("normalize_length must be positive, got {l}"));
            }
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                bad(format!("{name} must be positive, got {v}"))
            }
        };
        match &self.shape {
            Shape::Circle {
                omega,
                radius,
                length,
            } => {
                if *omega == 0 {
                    return bad("circle omega must be at least 1".into());
                }
                if let Some(r) = radius {
                    positive("radius", *r)?;
                }
                if let Some(l) = length {
                    positive("length", *l)?;
                }
            }
            Shape::Ellipse { axis_ratio } => positive("axis_ratio", *axis_ratio)?,
            Shape::BernoulliLemniscate { scale } => positive("scale", *scale)?,
            Shape::GeronoVariant { c, scale } => {
                positive("c", *c)?;
                positive("scale", *scale)?;
            }
            Shape::Star { amp, lobes } => {
                if !(amp.abs() < 1.0) || *lobes == 0 {
                    return bad("star needs |amp| < 1 and lobes ≥ 1".into());
                }
            }
            Shape::Limacon { loop_param } => {
                if !(loop_param.is_finite()) || loop_param.abs() == 1.0 {
                    return bad("limacon loop_param must be finite and ≠ ±1".into());
                }
            }
            Shape::Dumbbell { neck_gap } => {
                positive("neck_gap", *neck_gap)?;
                if !self.n.is_multiple_of(4) {
                    return bad("dumbbell needs n divisible by 4".into());
                }
            }
            Shape::CocompactGraph { amplitude, frequency } => {
                if !amplitude.is_finite() || *frequency == 0 {
                    return bad("graph needs finite amplitude and frequency ≥ 1".into());
                }
            }
            Shape::Lame | Shape::ConvergenceTest | Shape::FromFile { .. } => {}
        }
        Ok(())
    }
}

/// Samples a closed parametric curve at `m` equally spaced parameters in `[0, 2π)`.
fn sample_closed(m: usize, f: impl Fn(f64) -> [f64; 2]) -> Result<DiscreteCurve> {
    let pts: Vec<[f64; 2]> = (0..m)
        .map(|i| f(2.0 * PI * i as f64 / m as f64))
        .collect();
    DiscreteCurve::from_planar(&pts, CurveTopology::Closed)
}

/// Samples at `n` parameters, or at `OVERSAMPLE·n` followed by arclength
/// resampling when requested.
fn parametric(n: usize, resample: bool, f: impl Fn(f64) -> [f64; 2]) -> Result<DiscreteCurve> {
    if resample {
        sample_closed(OVERSAMPLE * n, f)?.resample_arclength(n)
    } else {
        sample_closed(n, f)
    }
}

pub fn generate(spec: &CurveSpec) -> Result<DiscreteCurve> {
    spec.validate()?;
    let n = spec.n;
    let rs = spec.resample_to_arclength;
    let curve = match &spec.shape {
        Shape::Circle {
            omega,
            radius,
            length,
        } => {
            let w = *omega as f64;
            let r = radius
                .or_else(|| length.map(|l| l / (2.0 * PI * w)))
                .unwrap_or(1.0);
            // Uniform already; resampling would only move vertices onto chords.
            sample_closed(n, |t| [r * (w * t).cos(), r * (w * t).sin()])?
        }
        Shape::Ellipse { axis_ratio } => {
            let a = *axis_ratio;
            parametric(n, rs, |t| [a * t.cos(), t.sin()])?
        }
        Shape::BernoulliLemniscate { scale } => parametric(n, rs, |t| {
            let (s, c) = t.sin_cos();
            let den = 1.0 + s * s;
            [scale * c / den, scale * s * c / den]
        })?,
        Shape::GeronoVariant { c, scale } => {
            // Rational parametrisation, the image of a hyperbola under
            // inversion; c = 1 gives the Bernoulli lemniscate.
            let sc = c.sqrt();
            parametric(n, rs, |t| {
                let (s, co) = t.sin_cos();
                let den = 1.0 + s * s / c;
                [scale * co / den, scale * s * co / (sc * den)]
            })?
        }
        Shape::Lame => parametric(n, rs, |t| {
            let (s, c) = t.sin_cos();
            [4.0 * c.signum() * c.abs().sqrt(), s]
        })?,
        Shape::Star { amp, lobes } => {
            let k = *lobes as f64;
            parametric(n, rs, |t| {
                let r = 1.0 + amp * (k * t).cos();
                [r * t.cos(), r * t.sin()]
            })?
        }
        Shape::Limacon { loop_param } => parametric(n, rs, |t| {
            let r = loop_param + t.cos();
            [r * t.cos(), r * t.sin()]
        })?,
        Shape::Dumbbell { neck_gap } => dumbbell(*neck_gap, n)?,
        Shape::CocompactGraph { amplitude, frequency } => {
            graph_line(*amplitude, *frequency, n, rs)?
        }
        Shape::ConvergenceTest => sample_closed(n, |t| {
            let g = 2.0 * PI * convtest_g(t / (2.0 * PI), 0.0);
            [g.cos(), g.sin()]
        })?,
        Shape::FromFile { path } => {
            let c = load_curve(path)?;
            if rs && n != 0 {
                c.resample_arclength(n)?
            } else {
                c
            }
        }
    };
    match spec.normalize_length {
        Some(target) => curve.scaled(target / curve.length()),
        None => Ok(curve),
    }
}

fn graph_line(amplitude: f64, frequency: u32, n: usize, resample: bool) -> Result<DiscreteCurve> {
    let f = frequency as f64;
    let m = if resample { OVERSAMPLE * n } else { n };
    let pts: Vec<[f64; 2]> = (0..m)
        .map(|i| {
            let x = i as f64 / m as f64;
            [x, amplitude * (2.0 * PI * f * x).sin()]
        })
        .collect();
    let topo = CurveTopology::Cocompact {
        period: vec![1.0, 0.0],
    };
    let c = DiscreteCurve::from_planar(&pts, topo)?;
    if resample {
        c.resample_arclength(n)
    } else {
        Ok(c)
    }
}

/// A cocompact graph together with its `ℛ(0) = L ∫ k² ds`.
#[derive(Debug, Clone)]
pub struct CocompactLine {
    pub curve: DiscreteCurve,
    pub r0: f64,
    /// Whether `ℛ(0) ≤ 3/4`.
    pub satisfies_hypothesis: bool,
}

pub fn cocompact_line(amplitude: f64, frequency: u32, n: usize) -> Result<CocompactLine> {
    let curve = graph_line(amplitude, frequency, n, true)?;
    let r0 = curve.report()?.r.unwrap_or(0.0);
    Ok(CocompactLine {
        curve,
        r0,
        satisfies_hypothesis: r0 <= COCOMPACT_R_LIMIT,
    })
}

/// Dumbbell built from one quarter by the two axis reflections, so that the
/// upper and lower neck branches mirror exactly.
fn dumbbell(c: f64, n: usize) -> Result<DiscreteCurve> {
    const X: f64 = 1.0;
    const DENSE: usize = 4096;
    let f = |x: f64| x.powi(4) / 4.0 + c / 2.0;
    let df = |x: f64| x.powi(3);
    let (y_end, slope) = (f(X), df(X));
    let centre = X + slope * y_end;
    let radius = y_end * (1.0 + slope * slope).sqrt();
    // Lower branch from (0, −c/2) to (X, −f(X)) as a dense polyline.
    let branch: Vec<[f64; 2]> = (0..=DENSE)
        .map(|i| {
            let x = X * i as f64 / DENSE as f64;
            [x, -f(x)]
        })
        .collect();
    let mut cumulative = vec![0.0];
    for w in branch.windows(2) {
        let step = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        cumulative.push(cumulative.last().unwrap() + step);
    }
    let branch_len = *cumulative.last().unwrap();
    let start_angle = (-y_end).atan2(X - centre);
    let cap_len = -start_angle * radius;
    let quarter = branch_len + cap_len;
    let at = |s: f64| -> [f64; 2] {
        if s <= branch_len {
            let j = cumulative.partition_point(|&v| v <= s).clamp(1, DENSE);
            let frac = (s - cumulative[j - 1]) / (cumulative[j] - cumulative[j - 1]);
            let (a, b) = (branch[j - 1], branch[j]);
            [a[0] + frac * (b[0] - a[0]), a[1] + frac * (b[1] - a[1])]
        } else if quarter - s <= 1e-12 * quarter {
            // Cap apex, exactly on the axis of symmetry.
            [centre + radius, 0.0]
        } else {
            let angle = start_angle + (s - branch_len) / radius;
            [centre + radius * angle.cos(), radius * angle.sin()]
        }
    };
    let m = n / 4;
    let h = quarter / m as f64;
    let mut pts = Vec::with_capacity(n);
    for q in 0..4 {
        for j in 0..m {
            let s = j as f64 * h;
            let back = (m - j) as f64 * h;
            let p = match q {
                0 => at(s),
                1 => {
                    let p = at(back);
                    [p[0], -p[1]]
                }
                2 => {
                    let p = at(s);
                    [-p[0], -p[1]]
                }
                _ => {
                    let p = at(back);
                    [-p[0], p[1]]
                }
            };
            pts.push(p);
        }
    }
    DiscreteCurve::from_planar(&pts, CurveTopology::Closed)
}
