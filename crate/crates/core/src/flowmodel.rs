//! The frozen-coefficient operator of the modified flow
//!
//! ```text
//! ∂_σ γ = A(γ)γ,   A(γ) = −b (I − P) δ_s⁴ + P ∂_u²,   ∂_σ t = b,
//! ```
//!
//! with `P = ττᵀ`, `b = a / (1 + ‖κ‖∞⁴)` and `∂_u²` the raw parameter
//! Laplacian with `Δu = 1/N`.

use serde::{Deserialize, Serialize};

use crate::error::{ChenError, Result};
use crate::geometry::DiscreteCurve;
use crate::linsolve::CyclicBlockBanded;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Time-scale knob in the Sundman factor.
    pub a: f64,
    /// Equidistribution ratio above which a run warns.
    pub equidist_threshold: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            a: 1.0,
            equidist_threshold: 2.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(ChenError::InvalidConfig(format!(
                "model.a must be positive, got {}",
                self.a
            )));
        }
        if !(self.equidist_threshold >= 1.0) {
            return Err(ChenError::InvalidConfig(format!(
                "model.equidist_threshold must be at least 1, got {}",
                self.equidist_threshold
            )));
        }
        Ok(())
    }
}

/// `b = a / (1 + ‖κ‖∞⁴)`.
pub fn sundman_factor(curve: &DiscreteCurve, params: &ModelParams) -> f64 {
    params.a / (1.0 + curve.max_curvature().powi(4))
}

/// `A(w)` together with the constant term contributed by the period offsets
/// of a cocompact curve, so that the flow velocity is `A w + affine`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub matrix: CyclicBlockBanded<f64>,
    /// `None` for closed curves.
    pub affine: Option<Vec<f64>>,
    /// The Sundman factor `b` the matrix was assembled with.
    pub sundman: f64,
}

impl OperatorMatrix {
    /// `A w + affine`.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = self.matrix.apply(w);
        if let Some(aff) = &self.affine {
            for (o, a) in out.iter_mut().zip(aff) {
                *o += a;
            }
        }
        out
    }

    /// The linear form on `(w, 1)`: the affine term becomes a border column
    /// with a zero corner. Closed curves are returned unchanged.
    pub fn homogenized(&self) -> CyclicBlockBanded<f64> {
        let mut m = self.matrix.clone();
        if let Some(aff) = &self.affine {
            m.set_border(aff.clone(), 0.0)
                .expect("affine term has the core size");
        }
        m
    }
}

pub fn assemble_operator(curve: &DiscreteCurve, params: &ModelParams) -> Result<OperatorMatrix> {
    assemble_with_factor(curve, sundman_factor(curve, params))
}

/// Assembles `A` with a prescribed `b` in front of the fourth-order part.
pub fn assemble_with_factor(curve: &DiscreteCurve, b: f64) -> Result<OperatorMatrix> {
    let n = curve.len();
    let d = curve.dim();
    let tau = curve.tangents()?;
    let fourth = curve.fourth_diff_stencil();
    let nn = (n * n) as f64;
    let laplace = [0.0, nn, -2.0 * nn, nn, 0.0];

    let mut matrix = CyclicBlockBanded::zeros(n, d)?;
    let period = curve.topology().period().map(<[f64]>::to_vec);
    let mut affine = period.as_ref().map(|_| vec![0.0; n * d]);

    for i in 0..n {
        let t = &tau[i * d..(i + 1) * d];
        for m in -2..=2isize {
            let s = (m + 2) as usize;
            let (c4, c2) = (fourth[i][s], laplace[s]);
            let block = matrix.block_mut(i, m);
            for r in 0..d {
                for c in 0..d {
                    let p = t[r] * t[c];
                    let id = if r == c { 1.0 } else { 0.0 };
                    block[r * d + c] = -b * (id - p) * c4 + p * c2;
                }
            }
            if let (Some(per), Some(aff)) = (&period, &mut affine) {
                let (_, shift) = curve.wrap(i as isize + m);
                if shift != 0 {
                    let block = matrix.block(i, m);
                    for r in 0..d {
                        let row: f64 = (0..d).map(|c| block[r * d + c] * per[c]).sum();
                        aff[i * d + r] += shift as f64 * row;
                    }
                }
            }
        }
    }
    Ok(OperatorMatrix {
        matrix,
        affine,
        sundman: b,
    })
}

/// Velocity of the unmodified flow, `−(δ_s²)²γ`, per vertex.
#[derive(Debug, Clone)]
pub struct ChenVelocity {
    /// Flat `N·d` vector.
    pub velocity: Vec<f64>,
    /// Planar only: `⟨v, ν⟩ = −F` with `F = k_ss − k³`.
    pub normal_speed: Option<Vec<f64>>,
    /// Planar only: `⟨v, τ⟩ = G` with `G = 3 k k_s`.
    pub tangential_speed: Option<Vec<f64>>,
}

pub fn chen_velocity(curve: &DiscreteCurve) -> Result<ChenVelocity> {
    let velocity: Vec<f64> = curve.arclength_d4_position().iter().map(|v| -v).collect();
    let (normal_speed, tangential_speed) = if curve.is_planar() {
        let tau = curve.tangents()?;
        let dot = |basis: &[f64], rot: bool| -> Vec<f64> {
            velocity
                .chunks_exact(2)
                .zip(basis.chunks_exact(2))
                .map(|(v, t)| {
                    if rot {
                        -v[0] * t[1] + v[1] * t[0]
                    } else {
                        v[0] * t[0] + v[1] * t[1]
                    }
                })
                .collect()
        };
        (Some(dot(&tau, true)), Some(dot(&tau, false)))
    } else {
        (None, None)
    };
    Ok(ChenVelocity {
        velocity,
        normal_speed,
        tangential_speed,
    })
}
