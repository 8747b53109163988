use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{local_frame, place_first_three, place_in_frame, sample_torsion};
use crate::metrics::{lde_global, lde_local};
use crate::model::{Instance, TorsionDomain};
use crate::Vec3;

/// Torsion per atom; entries for the first three atoms are unused and zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionAssignment {
    pub values: Vec<f64>,
}

impl TorsionAssignment {
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// True when every torsion lies in the instance's domain.
    pub fn within(&self, inst: &Instance) -> bool {
        (3..inst.n_atoms()).all(|k| inst.torsion_domain(k).contains(self.values[k]))
    }
}

/// Angle-guided greedy construction: for each atom, `n_tors` torsions are
/// sampled from its domain and the placement with the smallest local
/// violation against already-placed atoms is kept.
///
/// `domains[k]` must be set for every `k >= 3`; usually this is
/// [`Instance::torsion_domains`].
pub fn greedy_construction<R: Rng + ?Sized>(
    inst: &Instance,
    n_tors: usize,
    domains: &[Option<TorsionDomain>],
    rng: &mut R,
) -> Result<(TorsionAssignment, Vec<Vec3>)> {
    if domains.len() != inst.n_atoms() {
        return Err(Error::InvalidArgument("one domain slot per atom expected".into()));
    }
    construct(inst, n_tors, |k| domains[k].as_ref(), rng)
}

pub(crate) fn construct<'a, R, D>(
    inst: &Instance,
    n_tors: usize,
    domain_of: D,
    rng: &mut R,
) -> Result<(TorsionAssignment, Vec<Vec3>)>
where
    R: Rng + ?Sized,
    D: Fn(usize) -> Option<&'a TorsionDomain>,
{
    if n_tors == 0 {
        return Err(Error::InvalidArgument("n_tors must be at least 1".into()));
    }
    let n = inst.n_atoms();
    let mut x = Vec::with_capacity(n);
    x.extend_from_slice(&place_first_three(
        inst.exact_length(0, 1),
        inst.exact_length(1, 2),
        inst.bond_angle(2),
    )?);
    let mut tau = vec![0.0; n];

    for i in 3..n {
        let dom = domain_of(i).ok_or_else(|| Error::InvalidArgument(format!("no torsion domain for atom {}", i + 1)))?;
        let frame = local_frame(&x[i - 3], &x[i - 2], &x[i - 1])?;
        let anchor = x[i - 1];
        let d = inst.exact_length(i - 1, i);
        let theta = inst.bond_angle(i);
        x.push(anchor);

        let mut best_lde = f64::INFINITY;
        let mut best = (0.0, anchor);
        for _ in 0..n_tors {
            let t = sample_torsion(dom, rng);
            x[i] = place_in_frame(&frame, &anchor, d, theta, t);
            let l = lde_local(&x, inst, i);
            if l < best_lde {
                best_lde = l;
                best = (t, x[i]);
            }
        }
        tau[i] = best.0;
        x[i] = best.1;
    }
    Ok((TorsionAssignment { values: tau }, x))
}

/// Portion of `dom` on the side of `tau`. `tau == 0` keeps the whole domain.
pub fn sign_restricted_domain(dom: &TorsionDomain, tau: f64) -> Result<TorsionDomain> {
    if tau == 0.0 {
        return Ok(*dom);
    }
    match *dom {
        TorsionDomain::Symmetric { lo, hi } => Ok(if tau > 0.0 {
            TorsionDomain::Single { lo, hi }
        } else {
            TorsionDomain::Single { lo: -hi, hi: -lo }
        }),
        TorsionDomain::Single { lo, hi } => {
            let (lo, hi) = if tau > 0.0 { (lo.max(0.0), hi) } else { (lo, hi.min(0.0)) };
            if lo > hi {
                Err(Error::EmptyDomain)
            } else {
                Ok(TorsionDomain::Single { lo, hi })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImproveOutcome {
    pub tau: TorsionAssignment,
    pub x: Vec<Vec3>,
    pub lde: f64,
    /// Atoms whose sign flip was accepted, in order.
    pub accepted: Vec<usize>,
    /// Global LDE after each atom of the sweep (one entry per atom `>= 3`).
    pub lde_trace: Vec<f64>,
}

/// One sign-consistent sweep. For every atom whose negated torsion is still
/// admissible, a fresh construction is run with that atom restricted to the
/// flipped side; the result replaces the current conformation only if its
/// global LDE is strictly smaller.
pub fn improve<R: Rng + ?Sized>(
    x: Vec<Vec3>,
    tau: TorsionAssignment,
    inst: &Instance,
    n_tors: usize,
    rng: &mut R,
) -> Result<ImproveOutcome> {
    let n = inst.n_atoms();
    let mut out = ImproveOutcome {
        lde: lde_global(&x, inst),
        tau,
        x,
        accepted: Vec::new(),
        lde_trace: Vec::with_capacity(n.saturating_sub(3)),
    };
    for i in 3..n {
        let dom = inst.torsion_domain(i);
        let flipped = -out.tau.get(i);
        if out.lde > 0.0 && dom.contains(flipped) {
            let restricted = sign_restricted_domain(dom, flipped)?;
            let (t2, x2) = construct(
                inst,
                n_tors,
                |k| if k == i { Some(&restricted) } else { inst.torsion_domains()[k].as_ref() },
                rng,
            )?;
            let l2 = lde_global(&x2, inst);
            if l2 < out.lde {
                out.lde = l2;
                out.x = x2;
                out.tau = t2;
                out.accepted.push(i);
            }
        }
        out.lde_trace.push(out.lde);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_restriction_examples() {
        let sym = TorsionDomain::Symmetric { lo: 0.5, hi: 1.0 };
        assert_eq!(sign_restricted_domain(&sym, -0.7).unwrap(), TorsionDomain::Single { lo: -1.0, hi: -0.5 });
        assert_eq!(sign_restricted_domain(&sym, 0.7).unwrap(), TorsionDomain::Single { lo: 0.5, hi: 1.0 });
        let single = TorsionDomain::Single { lo: 0.2, hi: 0.4 };
        assert_eq!(sign_restricted_domain(&single, 0.3).unwrap(), single);
        assert!(matches!(sign_restricted_domain(&single, -0.3), Err(Error::EmptyDomain)));
        let straddle = TorsionDomain::Single { lo: -0.2, hi: 0.4 };
        assert_eq!(sign_restricted_domain(&straddle, -0.1).unwrap(), TorsionDomain::Single { lo: -0.2, hi: 0.0 });
        assert_eq!(sign_restricted_domain(&straddle, 0.0).unwrap(), straddle);
    }
}
