use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::reference::Reference;
use crate::error::{Error, Result};
use crate::geometry::{dihedral, place_atom, place_first_three};
use crate::model::{bond_angle_from_distances, AtomRecord, EdgeConstraint, Instance, TorsionDomain};
use crate::Vec3;

/// Smallest lower bound emitted for an interval edge, in Å.
pub const LOWER_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    /// Total width of the torsion window around each reference dihedral.
    pub angle_width_deg: f64,
    /// Hydrogen pairs closer than this in the reference get an interval edge.
    pub hh_cutoff: f64,
    /// Interval width for hydrogens in the same or adjacent residues.
    pub hh_width_adjacent: f64,
    /// Interval width for all other hydrogen pairs.
    pub hh_width_other: f64,
    pub include_hydrogens: bool,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            angle_width_deg: 50.0,
            hh_cutoff: 5.0,
            hh_width_adjacent: 1.0,
            hh_width_other: 2.0,
            include_hydrogens: true,
        }
    }
}

fn wrap(t: f64) -> f64 {
    let r = (t + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        PI
    } else {
        r
    }
}

/// Torsion domain for the window `[t - w/2, t + w/2]`, plus the range of
/// `cos τ` over it. Windows crossing 0 or π become symmetric unions over
/// the covered magnitudes.
fn window(t: f64, w: f64) -> (TorsionDomain, f64, f64) {
    if w >= 2.0 * PI {
        return (TorsionDomain::Symmetric { lo: 0.0, hi: PI }, -1.0, 1.0);
    }
    let (t1, t2) = (t - w / 2.0, t + w / 2.0);
    let crosses_zero = t1 <= 0.0 && 0.0 <= t2;
    let crosses_pi = t2 >= PI || t1 <= -PI;
    let c_hi = if crosses_zero { 1.0 } else { t1.cos().max(t2.cos()) };
    let c_lo = if crosses_pi { -1.0 } else { t1.cos().min(t2.cos()) };
    let dom = match (crosses_zero, crosses_pi) {
        (true, true) => TorsionDomain::Symmetric { lo: 0.0, hi: PI },
        (true, false) => TorsionDomain::Symmetric { lo: 0.0, hi: t1.abs().max(t2.abs()) },
        (false, true) => TorsionDomain::Symmetric {
            lo: wrap(t1).abs().min(wrap(t2).abs()),
            hi: PI,
        },
        (false, false) => TorsionDomain::Single { lo: t1, hi: t2 },
    };
    (dom, c_lo, c_hi)
}

/// Builds an instance for which `reference` is feasible: exact edges for
/// spans 1 and 2, a torsion window of `angle_width_deg` turned into the
/// span-3 interval and a torsion annotation, and optional hydrogen-pair
/// intervals. Atom order is taken as given.
pub fn generate_instance(reference: &Reference, params: &GeneratorParams) -> Result<Instance> {
    let x = &reference.coords;
    let n = x.len();
    if n < 3 || reference.atoms.len() != n {
        return Err(Error::InvalidArgument(format!("reference needs at least 3 labelled atoms, has {n}")));
    }
    if !(params.angle_width_deg >= 0.0) || !(params.hh_width_adjacent >= 0.0) || !(params.hh_width_other >= 0.0) {
        return Err(Error::InvalidArgument("generator widths must be nonnegative".into()));
    }
    if let Some(k) = (1..n).find(|&k| reference.atoms[k].residue < reference.atoms[k - 1].residue) {
        return Err(Error::InvalidArgument(format!(
            "reference out of order: atom {} has residue {} after residue {}",
            k + 1,
            reference.atoms[k].residue,
            reference.atoms[k - 1].residue
        )));
    }
    let dist = |i: usize, j: usize| (x[i] - x[j]).norm();
    let w = params.angle_width_deg.to_radians();

    let mut edges = Vec::new();
    let mut annotations = BTreeMap::new();
    for i in 1..n {
        edges.push(EdgeConstraint::exact(i - 1, i, dist(i - 1, i)));
        if i >= 2 {
            edges.push(EdgeConstraint::exact(i - 2, i, dist(i - 2, i)));
            bond_angle_from_distances(dist(i - 2, i - 1), dist(i - 1, i), dist(i - 2, i)).map_err(|_| {
                Error::DegenerateGeometry(format!("atoms {}..{} are collinear", i - 1, i + 1))
            })?;
        }
        if i >= 3 {
            let d_ref = dist(i - 3, i);
            let tau = dihedral(&x[i - 3], &x[i - 2], &x[i - 1], &x[i])?;
            if w == 0.0 {
                edges.push(EdgeConstraint::exact(i - 3, i, d_ref));
                annotations.insert(i, TorsionDomain::Single { lo: tau, hi: tau });
                continue;
            }
            let (dom, c_lo, c_hi) = window(tau, w);
            let theta = bond_angle_from_distances(dist(i - 2, i - 1), dist(i - 1, i), dist(i - 2, i))?;
            let at = |c: f64| -> Result<f64> {
                let p = place_atom(&x[i - 3], &x[i - 2], &x[i - 1], dist(i - 1, i), theta, c.clamp(-1.0, 1.0).acos())?;
                Ok((p - x[i - 3]).norm())
            };
            let (d1, d2) = (at(c_lo)?, at(c_hi)?);
            let lo = d1.min(d2).min(d_ref).max(LOWER_FLOOR).min(d_ref);
            let hi = d1.max(d2).max(d_ref);
            edges.push(EdgeConstraint::new(i - 3, i, lo, hi));
            annotations.insert(i, dom);
        }
    }

    if params.include_hydrogens {
        for i in 0..n {
            if !reference.atoms[i].is_hydrogen() {
                continue;
            }
            for j in i + 4..n {
                if !reference.atoms[j].is_hydrogen() {
                    continue;
                }
                let r = dist(i, j);
                if r > params.hh_cutoff {
                    continue;
                }
                let adjacent = reference.atoms[i].residue.abs_diff(reference.atoms[j].residue) <= 1;
                let width = if adjacent { params.hh_width_adjacent } else { params.hh_width_other };
                let lo = (r - width / 2.0).max(LOWER_FLOOR).min(r);
                edges.push(EdgeConstraint::new(i, j, lo, r + width / 2.0));
            }
        }
    }
    Instance::new(reference.atoms.clone(), edges, annotations)
}

const N_CA: f64 = 1.458;
const CA_C: f64 = 1.525;
const C_N: f64 = 1.329;
const N_H: f64 = 1.01;
const CA_HA: f64 = 1.09;

/// Ideal-geometry backbone of `n_residues` residues in the order
/// N, H, CA, HA, C with seeded helix/strand-like φ/ψ.
pub fn synthetic_backbone(n_residues: usize, seed: u64) -> Result<Reference> {
    if n_residues == 0 {
        return Err(Error::InvalidArgument("at least one residue required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deg = f64::to_radians;
    let (ang_n, ang_ca, ang_c) = (deg(121.7), deg(111.2), deg(116.2));

    // Heavy chain N1 CA1 C1 N2 ...
    let mut heavy: Vec<Vec3> = place_first_three(N_CA, CA_C, ang_ca)?.to_vec();
    for _ in 1..n_residues {
        let (phi, psi) = if rng.random::<bool>() { (-63.0, -43.0) } else { (-120.0, 130.0) };
        let psi = deg(psi + rng.random_range(-10.0..10.0));
        let phi = deg(phi + rng.random_range(-10.0..10.0));
        let omega = deg(180.0 + rng.random_range(-5.0..5.0));
        let k = heavy.len();
        let n = place_atom(&heavy[k - 3], &heavy[k - 2], &heavy[k - 1], C_N, ang_c, psi)?;
        heavy.push(n);
        let ca = place_atom(&heavy[k - 2], &heavy[k - 1], &heavy[k], N_CA, ang_n, omega)?;
        heavy.push(ca);
        let c = place_atom(&heavy[k - 1], &heavy[k], &heavy[k + 1], CA_C, ang_ca, phi)?;
        heavy.push(c);
    }

    let mut atoms = Vec::with_capacity(5 * n_residues);
    let mut coords = Vec::with_capacity(5 * n_residues);
    let half_tet = deg(109.5 / 2.0);
    for r in 0..n_residues {
        let (n, ca, c) = (heavy[3 * r], heavy[3 * r + 1], heavy[3 * r + 2]);
        let h = if r == 0 {
            place_atom(&c, &ca, &n, N_H, deg(109.5), deg(60.0))?
        } else {
            let prev_c = heavy[3 * r - 1];
            n + ((n - prev_c).normalize() + (n - ca).normalize()).normalize() * N_H
        };
        let u = (n - ca).normalize();
        let v = (c - ca).normalize();
        let bis = (u + v).normalize();
        let perp = u.cross(&v).normalize();
        let ha = ca + (-bis * half_tet.cos() + perp * half_tet.sin()).normalize() * CA_HA;
        for (name, p) in [("N", n), ("H", h), ("CA", ca), ("HA", ha), ("C", c)] {
            atoms.push(AtomRecord::new(name, r + 1));
            coords.push(p);
        }
    }
    Ok(Reference { atoms, coords })
}
