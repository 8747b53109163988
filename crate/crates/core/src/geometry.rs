//! Sequential placement: the first three atoms in a fixed gauge, then each
//! atom from its three predecessors, a bond length, a bond angle and a torsion.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, TorsionDomain};
use crate::Vec3;

/// Cross-product norm at or below which three points count as collinear.
pub const COLLINEAR_TOL: f64 = 1e-12;

/// Snap radius for cosines next to ±1 before `acos`.
const COS_SNAP_TOL: f64 = 1e-9;

/// Right-handed orthonormal frame attached to three consecutive atoms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    /// Along the bond `x_{i-2} -> x_{i-1}`.
    pub u1: Vec3,
    /// In the plane of the three atoms, perpendicular to `u1`, on the side of `x_{i-3}`.
    pub u2: Vec3,
    /// Normal to that plane, `u1 × u2`.
    pub u3: Vec3,
}

impl LocalFrame {
    pub fn determinant(&self) -> f64 {
        self.u1.dot(&self.u2.cross(&self.u3))
    }

    /// Maps frame coordinates to a world-space displacement.
    pub fn apply(&self, local: Vec3) -> Vec3 {
        self.u1 * local.x + self.u2 * local.y + self.u3 * local.z
    }
}

/// Gauge-fixed positions of the first three atoms.
pub fn place_first_three(d12: f64, d23: f64, theta3: f64) -> Result<[Vec3; 3]> {
    if !(d12 > 0.0 && d23 > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "nonpositive bond length ({d12}, {d23})"
        )));
    }
    if !(theta3 > 0.0 && theta3 < std::f64::consts::PI) {
        return Err(Error::DegenerateGeometry(format!("bond angle {theta3} not in (0, pi)")));
    }
    Ok([
        Vec3::zeros(),
        Vec3::new(-d12, 0.0, 0.0),
        Vec3::new(-d12 + d23 * theta3.cos(), d23 * theta3.sin(), 0.0),
    ])
}

/// Frame with `v1 = x_{i-1} - x_{i-2}`, `v2 = x_{i-3} - x_{i-2}`,
/// `u1 = v1/|v1|`, `u3 = v1×v2/|v1×v2|`, `u2 = u3×u1`.
pub fn local_frame(x_im3: &Vec3, x_im2: &Vec3, x_im1: &Vec3) -> Result<LocalFrame> {
    let v1 = x_im1 - x_im2;
    let v2 = x_im3 - x_im2;
    let normal = v1.cross(&v2);
    let nn = normal.norm();
    if nn <= COLLINEAR_TOL || v1.norm() <= COLLINEAR_TOL {
        return Err(Error::DegenerateGeometry("collinear predecessors".into()));
    }
    let u1 = v1.normalize();
    let u3 = normal / nn;
    let u2 = u3.cross(&u1);
    Ok(LocalFrame { u1, u2, u3 })
}

/// `x_i = x_{i-1} + U·(-d cosθ, d sinθ cosτ, d sinθ sinτ)`, where θ is the
/// angle at `x_{i-1}` between `x_{i-2}` and `x_i`, and τ is the signed
/// dihedral of `(x_{i-3}, x_{i-2}, x_{i-1}, x_i)` as measured by [`dihedral`].
pub fn place_atom(x_im3: &Vec3, x_im2: &Vec3, x_im1: &Vec3, d: f64, theta: f64, tau: f64) -> Result<Vec3> {
    let frame = local_frame(x_im3, x_im2, x_im1)?;
    Ok(place_in_frame(&frame, x_im1, d, theta, tau))
}

#[inline]
pub(crate) fn place_in_frame(frame: &LocalFrame, x_im1: &Vec3, d: f64, theta: f64, tau: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = tau.sin_cos();
    x_im1 + frame.apply(Vec3::new(-d * ct, d * st * cp, d * st * sp))
}

/// Signed torsion angle in `(-π, π]`.
///
/// With `b1 = b - a`, `b2 = c - b`, `b3 = d - c`, `n1 = b1×b2`, `n2 = b2×b3`:
/// `atan2(|b2|·(b1·n2), n1·n2)`. Cis is 0, trans is π, and the sign agrees with
/// the τ fed to [`place_atom`].
pub fn dihedral(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> Result<f64> {
    let b1 = b - a;
    let b2 = c - b;
    let b3 = d - c;
    let n1 = b1.cross(&b2);
    let n2 = b2.cross(&b3);
    if n1.norm() <= COLLINEAR_TOL || n2.norm() <= COLLINEAR_TOL {
        return Err(Error::DegenerateGeometry("degenerate dihedral quadruple".into()));
    }
    let y = b2.norm() * b1.dot(&n2);
    let x = n1.dot(&n2);
    let t = y.atan2(x);
    Ok(if t <= -std::f64::consts::PI { std::f64::consts::PI } else { t })
}

/// Positions of atoms `i-3, i-2, i-1` in the gauge of [`place_first_three`],
/// built from the instance's exact lengths. Torsion-to-distance conversion
/// depends only on these lengths, so any congruent triple gives the same answer.
pub fn canonical_predecessors(inst: &Instance, i: usize) -> Result<[Vec3; 3]> {
    assert!(i >= 3);
    place_first_three(
        inst.exact_length(i - 3, i - 2),
        inst.exact_length(i - 2, i - 1),
        inst.bond_angle(i - 1),
    )
}

/// `|x_i(τ) - x_{i-3}|` for atom `i` placed from the given predecessors.
pub fn distance_from_torsion(inst: &Instance, i: usize, tau: f64, preds: &[Vec3; 3]) -> Result<f64> {
    let x = place_atom(
        &preds[0],
        &preds[1],
        &preds[2],
        inst.exact_length(i - 1, i),
        inst.bond_angle(i),
        tau,
    )?;
    Ok((x - preds[0]).norm())
}

/// Coefficients `(a, b)` of `d(τ)² = a + b·cos τ` for atom `i`.
pub fn torsion_distance_coefficients(inst: &Instance, i: usize) -> Result<(f64, f64)> {
    let preds = canonical_predecessors(inst, i)?;
    let d0 = distance_from_torsion(inst, i, 0.0, &preds)?;
    let dpi = distance_from_torsion(inst, i, std::f64::consts::PI, &preds)?;
    Ok(((d0 * d0 + dpi * dpi) / 2.0, (d0 * d0 - dpi * dpi) / 2.0))
}

fn snap_cos(c: f64) -> f64 {
    if c >= 1.0 - COS_SNAP_TOL {
        1.0
    } else if c <= -1.0 + COS_SNAP_TOL {
        -1.0
    } else {
        c
    }
}

/// Symmetric torsion domain implied by the `{i-3, i}` distance interval.
pub fn torsion_domain_from_distance(inst: &Instance, i: usize) -> Result<TorsionDomain> {
    let (a, b) = torsion_distance_coefficients(inst, i)?;
    let edge = inst
        .edge(i - 3, i)
        .ok_or_else(|| Error::DegenerateGeometry(format!("missing edge ({}, {})", i - 2, i + 1)))?;
    let (l2, u2) = (edge.lower * edge.lower, edge.upper * edge.upper);
    let infeasible = || Error::InfeasibleDiscretization {
        atom: i + 1,
        lower: edge.lower,
        upper: edge.upper,
        reach_lo: (a - b.abs()).max(0.0).sqrt(),
        reach_hi: (a + b.abs()).sqrt(),
    };

    if b.abs() <= 1e-14 * a {
        // Distance independent of τ.
        let tol = 1e-9 * a;
        return if l2 - tol <= a && a <= u2 + tol {
            Ok(TorsionDomain::Symmetric { lo: 0.0, hi: std::f64::consts::PI })
        } else {
            Err(infeasible())
        };
    }
    let c1 = (l2 - a) / b;
    let c2 = (u2 - a) / b;
    let (c_lo, c_hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
    if c_lo > 1.0 + COS_SNAP_TOL || c_hi < -1.0 - COS_SNAP_TOL {
        return Err(infeasible());
    }
    let c_lo = snap_cos(c_lo.clamp(-1.0, 1.0));
    let c_hi = snap_cos(c_hi.clamp(-1.0, 1.0));
    Ok(TorsionDomain::Symmetric {
        lo: c_hi.acos(),
        hi: c_lo.acos(),
    })
}

/// Uniform sample over the domain. A symmetric union picks each side with
/// probability proportional to its length, i.e. one half.
pub fn sample_torsion<R: Rng + ?Sized>(dom: &TorsionDomain, rng: &mut R) -> f64 {
    match *dom {
        TorsionDomain::Single { lo, hi } => uniform(lo, hi, rng),
        TorsionDomain::Symmetric { lo, hi } => {
            let m = uniform(lo, hi, rng);
            if rng.random::<bool>() {
                m
            } else {
                -m
            }
        }
    }
}

fn uniform<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if hi > lo {
        (lo + (hi - lo) * rng.random::<f64>()).min(hi)
    } else {
        lo
    }
}

/// Full chain from per-atom torsions (`torsions[k]` for `k >= 3`; earlier
/// entries are ignored).
pub fn realize(inst: &Instance, torsions: &[f64]) -> Result<Vec<Vec3>> {
    let n = inst.n_atoms();
    let first = place_first_three(
        inst.exact_length(0, 1),
        inst.exact_length(1, 2),
        inst.bond_angle(2),
    )?;
    let mut x = Vec::with_capacity(n);
    x.extend_from_slice(&first);
    for k in 3..n {
        let p = place_atom(
            &x[k - 3],
            &x[k - 2],
            &x[k - 1],
            inst.exact_length(k - 1, k),
            inst.bond_angle(k),
            torsions[k],
        )?;
        x.push(p);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AtomRecord, EdgeConstraint};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;
    use std::f64::consts::PI;

    fn angle_at(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
        let u = (a - b).normalize();
        let v = (c - b).normalize();
        u.dot(&v).clamp(-1.0, 1.0).acos()
    }

    fn random_point(rng: &mut ChaCha8Rng) -> Vec3 {
        Vec3::new(
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        )
    }

    /// Backbone-like chain: bonds 1.526 Å, angles 111°, with a given d_{i-3,i} interval
    /// for atom 3 and loose intervals elsewhere.
    fn chain_instance(n: usize, d14: (f64, f64)) -> Instance {
        let bond = 1.526;
        let theta = 111f64.to_radians();
        let d13 = (2.0 * bond * bond * (1.0 - theta.cos())).sqrt();
        let mut edges = Vec::new();
        for j in 1..n {
            edges.push(EdgeConstraint::exact(j - 1, j, bond));
            if j >= 2 {
                edges.push(EdgeConstraint::exact(j - 2, j, d13));
            }
            if j >= 3 {
                let (lo, hi) = if j == 3 { d14 } else { (2.0, 4.0) };
                edges.push(EdgeConstraint::new(j - 3, j, lo, hi));
            }
        }
        let atoms = (0..n).map(|k| AtomRecord::new("C", k + 1)).collect();
        Instance::new(atoms, edges, BTreeMap::new()).unwrap()
    }

    #[test]
    fn first_three_examples() {
        let x = place_first_three(1.0, 1.0, PI / 2.0).unwrap();
        assert_abs_diff_eq!(x[2], Vec3::new(-1.0, 1.0, 0.0), epsilon = 1e-15);
        let x = place_first_three(1.5, 1.4, PI / 2.0).unwrap();
        assert_abs_diff_eq!(x[2], Vec3::new(-1.5, 1.4, 0.0), epsilon = 1e-15);

        let (d, theta) = (1.526, 1.91);
        let x = place_first_three(d, d, theta).unwrap();
        let law = (2.0 * d * d - 2.0 * d * d * theta.cos()).sqrt();
        assert_abs_diff_eq!((x[0] - x[2]).norm(), law, epsilon = 1e-12);
        assert_abs_diff_eq!((x[0] - x[1]).norm(), d, epsilon = 1e-12);
        assert_abs_diff_eq!((x[1] - x[2]).norm(), d, epsilon = 1e-12);

        assert!(place_first_three(0.0, 1.0, 1.0).is_err());
        assert!(place_first_three(1.0, 1.0, PI).is_err());
    }

    #[test]
    fn axis_aligned_frame() {
        let f = local_frame(&Vec3::new(0.0, 1.0, 0.0), &Vec3::zeros(), &Vec3::new(1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f.u1, Vec3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.u2, Vec3::y(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.u3, Vec3::z(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.determinant(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn collinear_frame_is_rejected() {
        let r = local_frame(&Vec3::new(2.0, 0.0, 0.0), &Vec3::zeros(), &Vec3::new(1.0, 0.0, 0.0));
        assert!(matches!(r, Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn random_frames_are_orthonormal_and_right_handed() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
            let f = local_frame(&a, &b, &c).unwrap();
            for u in [f.u1, f.u2, f.u3] {
                assert!((u.norm() - 1.0).abs() <= 1e-12);
            }
            assert!(f.u1.dot(&f.u2).abs() <= 1e-12);
            assert!(f.u1.dot(&f.u3).abs() <= 1e-12);
            assert!(f.u2.dot(&f.u3).abs() <= 1e-12);
            assert!((f.determinant() - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn coplanar_and_mirror_placements() {
        let (a, b, c) = (Vec3::new(0.3, 1.2, -0.4), Vec3::new(0.1, 0.0, 0.2), Vec3::new(1.4, -0.2, 0.5));
        let f = local_frame(&a, &b, &c).unwrap();
        for tau in [0.0, PI] {
            let x = place_atom(&a, &b, &c, 1.5, 1.9, tau).unwrap();
            assert!((x - c).dot(&f.u3).abs() < 1e-12);
        }
        let (p, m) = (
            place_atom(&a, &b, &c, 1.5, 1.9, 0.8).unwrap(),
            place_atom(&a, &b, &c, 1.5, 1.9, -0.8).unwrap(),
        );
        // Reflection through the plane of the predecessors.
        let reflected = p - f.u3 * (2.0 * (p - c).dot(&f.u3));
        assert_abs_diff_eq!(reflected, m, epsilon = 1e-12);
    }

    #[test]
    fn planar_dihedrals() {
        let a = Vec3::new(0.0, 1.0, 0.0);
        let b = Vec3::zeros();
        let c = Vec3::new(1.0, 0.0, 0.0);
        assert_abs_diff_eq!(dihedral(&a, &b, &c, &Vec3::new(1.0, 1.0, 0.0)).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dihedral(&a, &b, &c, &Vec3::new(1.0, -1.0, 0.0)).unwrap(), PI, epsilon = 1e-15);
        assert!(dihedral(&a, &b, &c, &Vec3::new(2.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn place_then_measure_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let (a, b, c) = (random_point(&mut rng), random_point(&mut rng), random_point(&mut rng));
            let d = rng.random_range(0.8..2.0);
            let theta = rng.random_range(0.3..2.8);
            for k in -3..=3 {
                let tau = k as f64;
                let x = place_atom(&a, &b, &c, d, theta, tau).unwrap();
                assert!(((x - c).norm() - d).abs() <= 1e-10);
                assert!((angle_at(&b, &c, &x) - theta).abs() <= 1e-10);
                assert!((dihedral(&a, &b, &c, &x).unwrap() - tau).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn distance_is_even_affine_in_cos_and_max_at_trans() {
        let inst = chain_instance(6, (2.0, 4.0));
        let preds = canonical_predecessors(&inst, 4).unwrap();
        let f = |t: f64| distance_from_torsion(&inst, 4, t, &preds).unwrap();
        for k in 0..=60 {
            let t = -PI + k as f64 * PI / 30.0;
            assert_abs_diff_eq!(f(t), f(-t), epsilon = 1e-12);
        }
        let best = (0..=3600)
            .map(|k| -PI + k as f64 * PI / 1800.0)
            .max_by(|x, y| f(*x).total_cmp(&f(*y)))
            .unwrap();
        assert!((best.abs() - PI).abs() < 1e-9);

        // Fit d² = a + b cos τ from τ = 0.4 and 2.1, predict τ = -1.3.
        let (t1, t2, t3) = (0.4f64, 2.1f64, -1.3f64);
        let b = (f(t1).powi(2) - f(t2).powi(2)) / (t1.cos() - t2.cos());
        let a = f(t1).powi(2) - b * t1.cos();
        assert!((f(t3).powi(2) - (a + b * t3.cos())).abs() < 1e-10);

        let (a2, b2) = torsion_distance_coefficients(&inst, 4).unwrap();
        for k in 0..=40 {
            let t = -PI + k as f64 * PI / 20.0;
            assert!((f(t).powi(2) - (a2 + b2 * t.cos())).abs() < 1e-10);
        }
    }

    #[test]
    fn exact_trans_distance_gives_point_domain() {
        let probe = chain_instance(5, (2.0, 4.0));
        let preds = canonical_predecessors(&probe, 3).unwrap();
        let dpi = distance_from_torsion(&probe, 3, PI, &preds).unwrap();
        let inst = chain_instance(5, (dpi, dpi));
        let dom = *inst.torsion_domain(3);
        assert_eq!(dom, TorsionDomain::Symmetric { lo: PI, hi: PI });
    }

    #[test]
    fn full_range_gives_unconstrained_domain() {
        let probe = chain_instance(5, (2.0, 4.0));
        let preds = canonical_predecessors(&probe, 3).unwrap();
        let d0 = distance_from_torsion(&probe, 3, 0.0, &preds).unwrap();
        let dpi = distance_from_torsion(&probe, 3, PI, &preds).unwrap();
        let inst = chain_instance(5, (d0, dpi));
        let (lo, hi) = inst.torsion_domain(3).bounds();
        assert_eq!((lo, hi), (0.0, PI));
    }

    #[test]
    fn unreachable_interval_is_infeasible() {
        let atoms: Vec<_> = (0..4).map(|k| AtomRecord::new("C", k + 1)).collect();
        let bond = 1.526;
        let d13 = 2.5;
        let edges = vec![
            EdgeConstraint::exact(0, 1, bond),
            EdgeConstraint::exact(1, 2, bond),
            EdgeConstraint::exact(0, 2, d13),
            EdgeConstraint::exact(1, 3, d13),
            EdgeConstraint::exact(2, 3, bond),
            EdgeConstraint::new(0, 3, 5.0, 6.0),
        ];
        assert!(matches!(
            Instance::new(atoms, edges, BTreeMap::new()),
            Err(Error::InfeasibleDiscretization { atom: 4, .. })
        ));
    }

    #[test]
    fn derived_domain_matches_grid_feasibility() {
        // A reference torsion widened by ±25°, mapped to a distance interval,
        // mapped back: the domain must contain exactly the grid points whose
        // placement distance lies in the interval.
        let probe = chain_instance(5, (2.0, 4.0));
        let preds = canonical_predecessors(&probe, 3).unwrap();
        let reference = -1.1f64;
        let half = 25f64.to_radians();
        let ds = [reference - half, reference + half].map(|t| distance_from_torsion(&probe, 3, t, &preds).unwrap());
        let (lo_d, hi_d) = (ds[0].min(ds[1]), ds[0].max(ds[1]));
        let inst = chain_instance(5, (lo_d, hi_d));
        let dom = *inst.torsion_domain(3);
        assert!(dom.contains(reference));
        let min_width = 2.0 * half;
        assert!(dom.measure() / 2.0 >= min_width - 1e-9);
        let mut k = 0;
        while -PI + k as f64 * 1e-3 <= PI {
            let t = -PI + k as f64 * 1e-3;
            let d = distance_from_torsion(&inst, 3, t, &preds).unwrap();
            let inside = d >= lo_d - 1e-12 && d <= hi_d + 1e-12;
            let (lo, hi) = dom.bounds();
            let near_edge = (t.abs() - lo).abs() < 1e-6 || (t.abs() - hi).abs() < 1e-6;
            if !near_edge {
                assert_eq!(dom.contains(t), inside, "tau {t}");
            }
            k += 1;
        }
    }

    #[test]
    fn sampling_respects_domains() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let point = TorsionDomain::Single { lo: 0.7, hi: 0.7 };
        assert!((0..100).all(|_| sample_torsion(&point, &mut rng) == 0.7));
        let single = TorsionDomain::Single { lo: 0.1, hi: 0.2 };
        assert!((0..1000).all(|_| {
            let t = sample_torsion(&single, &mut rng);
            (0.1..=0.2).contains(&t)
        }));
    }

    #[test]
    fn symmetric_sampling_splits_evenly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dom = TorsionDomain::Symmetric { lo: 0.5, hi: 1.2 };
        let n = 100_000;
        let mut positive = 0usize;
        for _ in 0..n {
            let t = sample_torsion(&dom, &mut rng);
            assert!(dom.contains(t));
            positive += (t > 0.0) as usize;
        }
        let sigma = (n as f64 * 0.25).sqrt();
        assert!((positive as f64 - n as f64 / 2.0).abs() <= 3.0 * sigma);
    }

    #[test]
    fn realize_honours_discretization_lengths() {
        let inst = chain_instance(12, (2.0, 4.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let tau: Vec<f64> = (0..12).map(|_| rng.random_range(-PI..PI)).collect();
        let x = realize(&inst, &tau).unwrap();
        for k in 1..12 {
            assert!(((x[k] - x[k - 1]).norm() - inst.exact_length(k - 1, k)).abs() < 1e-10);
            if k >= 2 {
                assert!(((x[k] - x[k - 2]).norm() - inst.exact_length(k - 2, k)).abs() < 1e-10);
            }
            if k >= 3 {
                let t = dihedral(&x[k - 3], &x[k - 2], &x[k - 1], &x[k]).unwrap();
                assert!((t - tau[k]).abs() < 1e-8);
                if tau[k] != 0.0 {
                    assert_eq!(t.signum(), tau[k].signum());
                }
            }
        }
    }
}
