//! Interval-violation metrics, the stress objective and its gradient.

use crate::error::{Error, Result};
use crate::model::{EdgeConstraint, Instance};
use crate::Vec3;

/// Below this inter-atomic distance the stress is not differentiable.
pub const COINCIDENT_TOL: f64 = 1e-12;

/// Auxiliary distance variables, one per instance edge (same order as
/// [`Instance::edges`]).
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceVariables {
    pub values: Vec<f64>,
}

/// Normalized interval violation `max{0, (dL - r)/dL, (r - dU)/dU}`.
pub fn edge_residual(x: &[Vec3], e: &EdgeConstraint) -> f64 {
    residual_at((x[e.i] - x[e.j]).norm(), e)
}

#[inline]
pub fn residual_at(r: f64, e: &EdgeConstraint) -> f64 {
    let below = (e.lower - r) / e.lower;
    let above = (r - e.upper) / e.upper;
    below.max(above).max(0.0)
}

/// Largest violation among edges from already-placed atoms to atom `i`.
/// `x` needs positions for atoms `0..=i` only.
pub fn lde_local(x: &[Vec3], inst: &Instance, i: usize) -> f64 {
    inst.back_edges(i)
        .iter()
        .map(|&k| edge_residual(x, &inst.edges()[k]))
        .fold(0.0, f64::max)
}

pub fn lde_global(x: &[Vec3], inst: &Instance) -> f64 {
    inst.edges().iter().map(|e| edge_residual(x, e)).fold(0.0, f64::max)
}

pub fn mde_global(x: &[Vec3], inst: &Instance) -> f64 {
    let sum: f64 = inst.edges().iter().map(|e| edge_residual(x, e)).sum();
    sum / inst.n_edges() as f64
}

/// `(LDE, MDE)` in one pass.
pub fn lde_mde(x: &[Vec3], inst: &Instance) -> (f64, f64) {
    let mut max = 0.0f64;
    let mut sum = 0.0;
    for e in inst.edges() {
        let r = edge_residual(x, e);
        max = max.max(r);
        sum += r;
    }
    (max, sum / inst.n_edges() as f64)
}

/// `σ = ½ Σ w (|x_i - x_j| - d)²`.
pub fn stress(x: &[Vec3], inst: &Instance, d: &DistanceVariables) -> f64 {
    let mut s = 0.0;
    for ((e, w), dv) in inst.edges().iter().zip(inst.weights()).zip(&d.values) {
        let r = (x[e.i] - x[e.j]).norm();
        if r <= COINCIDENT_TOL {
            log::warn!("stress evaluated at coincident atoms {} and {}", e.i + 1, e.j + 1);
        }
        s += w * (r - dv) * (r - dv);
    }
    0.5 * s
}

/// Stress value plus gradients with respect to positions and distance
/// variables. Fails at coincident edge endpoints.
pub fn stress_gradient(
    x: &[Vec3],
    inst: &Instance,
    d: &DistanceVariables,
    grad_x: &mut [Vec3],
    grad_d: &mut [f64],
) -> Result<f64> {
    grad_x.iter_mut().for_each(|g| *g = Vec3::zeros());
    let mut s = 0.0;
    for (k, e) in inst.edges().iter().enumerate() {
        let diff = x[e.i] - x[e.j];
        let r = diff.norm();
        if !(r > COINCIDENT_TOL) {
            return Err(Error::NonsmoothPoint(e.i + 1, e.j + 1));
        }
        let w = inst.weights()[k];
        let gap = r - d.values[k];
        s += w * gap * gap;
        let g = diff * (w * gap / r);
        grad_x[e.i] += g;
        grad_x[e.j] -= g;
        grad_d[k] = -w * gap;
    }
    Ok(0.5 * s)
}

/// Each variable set to the current distance projected onto its interval,
/// which minimizes the stress over the box for fixed positions.
pub fn init_distance_variables(x: &[Vec3], inst: &Instance) -> DistanceVariables {
    DistanceVariables {
        values: inst
            .edges()
            .iter()
            .map(|e| (x[e.i] - x[e.j]).norm().clamp(e.lower, e.upper))
            .collect(),
    }
}
