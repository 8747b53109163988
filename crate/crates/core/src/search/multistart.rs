use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::construct::{greedy_construction, improve, TorsionAssignment};
use super::rmsd::kabsch_rmsd;
use crate::error::{Error, Result};
use crate::geometry::dihedral;
use crate::metrics::{init_distance_variables, lde_mde, stress, stress_gradient, DistanceVariables};
use crate::model::{Conformation, Instance, SolverParams};
use crate::spg::{spg_minimize, FreeBox, Objective, SpgStatus};
use crate::Vec3;

/// Stress over the packed variable `z = [x_1 … x_n | d_1 … d_|E|]`.
pub struct StressObjective<'a> {
    inst: &'a Instance,
    x: Vec<Vec3>,
    gx: Vec<Vec3>,
    d: DistanceVariables,
}

impl<'a> StressObjective<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        let n = inst.n_atoms();
        Self {
            inst,
            x: vec![Vec3::zeros(); n],
            gx: vec![Vec3::zeros(); n],
            d: DistanceVariables { values: vec![0.0; inst.n_edges()] },
        }
    }

    /// Feasible set: free positions times the edge intervals.
    pub fn feasible_set(&self) -> FreeBox {
        let (lo, hi) = self.inst.edges().iter().map(|e| (e.lower, e.upper)).unzip();
        FreeBox::new(3 * self.inst.n_atoms(), lo, hi).expect("instance bounds are ordered")
    }
}

/// Packs positions and distance variables into one vector.
pub fn pack(x: &[Vec3], d: &DistanceVariables) -> Vec<f64> {
    let mut z = Vec::with_capacity(3 * x.len() + d.values.len());
    for p in x {
        z.extend_from_slice(&[p.x, p.y, p.z]);
    }
    z.extend_from_slice(&d.values);
    z
}

/// Inverse of [`pack`] for an instance with `n` atoms.
pub fn unpack(z: &[f64], n: usize) -> (Vec<Vec3>, DistanceVariables) {
    let x = z[..3 * n].chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect();
    (x, DistanceVariables { values: z[3 * n..].to_vec() })
}

impl Objective for StressObjective<'_> {
    fn evaluate(&mut self, z: &[f64], grad: &mut [f64]) -> Result<f64> {
        let n = self.x.len();
        for (p, c) in self.x.iter_mut().zip(z[..3 * n].chunks_exact(3)) {
            *p = Vec3::new(c[0], c[1], c[2]);
        }
        self.d.values.copy_from_slice(&z[3 * n..]);
        let (gpos, gd) = grad.split_at_mut(3 * n);
        let f = stress_gradient(&self.x, self.inst, &self.d, &mut self.gx, gd)?;
        for (c, g) in gpos.chunks_exact_mut(3).zip(&self.gx) {
            c.copy_from_slice(&[g.x, g.y, g.z]);
        }
        Ok(f)
    }
}

#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub conformation: Conformation,
    pub mde: f64,
    pub lde: f64,
    pub torsions: TorsionAssignment,
}

/// Conformations kept by the multistart loop; members are pairwise more than
/// `eps_similar` apart in aligned RMSD.
#[derive(Debug, Clone)]
pub struct ConformationPool {
    eps_similar: f64,
    entries: Vec<PoolEntry>,
}

impl ConformationPool {
    pub fn new(eps_similar: f64) -> Self {
        Self { eps_similar, entries: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    /// True when `x` is farther than `eps_similar` from every member.
    pub fn is_distinct(&self, x: &[Vec3], inst: &Instance) -> Result<bool> {
        for e in &self.entries {
            if kabsch_rmsd(&e.conformation.coords, x, inst)? <= self.eps_similar {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Inserts `entry` if it is distinct; reports whether it was.
    pub fn try_insert(&mut self, entry: PoolEntry, inst: &Instance) -> Result<bool> {
        if !self.is_distinct(&entry.conformation.coords, inst)? {
            return Ok(false);
        }
        self.entries.push(entry);
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// A conformation met the MDE or LDE tolerance.
    Solved,
    /// The loop ended without meeting a tolerance.
    BestEffort,
    /// The wall-clock budget ran out.
    TimeLimit,
}

/// Stage that produced the returned conformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolvePhase {
    Construction,
    Refinement,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub conformation: Conformation,
    pub lde: f64,
    pub mde: f64,
    /// Stress at the returned positions with distance variables projected
    /// onto their intervals.
    pub stress: f64,
    pub status: SolveStatus,
    pub phase: SolvePhase,
    /// Trials started.
    pub trials: usize,
    pub pool: ConformationPool,
    pub spg_calls: usize,
    /// SPG runs that reached the stress success threshold.
    pub spg_success: usize,
    /// Best MDE seen after each trial.
    pub best_mde_history: Vec<f64>,
    pub elapsed: Duration,
}

impl SolveOutcome {
    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }
}

struct Best {
    x: Vec<Vec3>,
    lde: f64,
    mde: f64,
    phase: SolvePhase,
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Signed dihedrals of a conformation, in the layout of [`TorsionAssignment`].
fn measured_torsions(x: &[Vec3]) -> TorsionAssignment {
    let mut values = vec![0.0; x.len()];
    for i in 3..x.len() {
        values[i] = dihedral(&x[i - 3], &x[i - 2], &x[i - 1], &x[i]).unwrap_or(0.0);
    }
    TorsionAssignment { values }
}

/// Multistart driver: greedy construction plus sign-consistent improvement,
/// RMSD de-duplication against a pool, and SPG refinement of the stress.
/// Returns the first conformation meeting a tolerance, otherwise the one with
/// the smallest MDE among everything evaluated.
pub fn multistart_solve(inst: &Instance, params: &SolverParams) -> Result<SolveOutcome> {
    params.check()?;
    let start = Instant::now();
    let expired = || params.time_limit.is_some_and(|lim| start.elapsed() >= lim);
    let meets = |lde: f64, mde: f64| mde <= params.eps_mde || lde <= params.eps_lde;
    let spg_params = params.spg_params();
    let n = inst.n_atoms();

    let mut pool = ConformationPool::new(params.eps_similar);
    let mut best: Option<Best> = None;
    let mut history = Vec::new();
    let mut spg_calls = 0;
    let mut spg_success = 0;
    let mut stall = 0;
    let mut trials = 0;
    let mut timed_out = false;
    let mut solved = false;

    let consider = |best: &mut Option<Best>, x: &[Vec3], lde: f64, mde: f64, phase| {
        if best.as_ref().is_none_or(|b| mde < b.mde) {
            *best = Some(Best { x: x.to_vec(), lde, mde, phase });
        }
    };
    let record = |history: &mut Vec<f64>, mde: f64| {
        let prev = history.last().copied().unwrap_or(f64::INFINITY);
        history.push(prev.min(mde));
    };

    'trials: for c in 0..params.n_trial {
        if expired() {
            timed_out = true;
            break;
        }
        trials += 1;
        let mut rng = trial_rng(params.rng_seed, c);
        let (mut tau, mut x) = greedy_construction(inst, params.n_tors, inst.torsion_domains(), &mut rng)?;
        for _ in 0..params.n_impr {
            let out = improve(x, tau, inst, params.n_tors, &mut rng)?;
            x = out.x;
            tau = out.tau;
        }
        let (lde, mde) = lde_mde(&x, inst);
        consider(&mut best, &x, lde, mde, SolvePhase::Construction);
        if meets(lde, mde) {
            // Keep the construction itself even if an earlier one had lower MDE.
            best = Some(Best { x, lde, mde, phase: SolvePhase::Construction });
            solved = true;
            record(&mut history, mde);
            break;
        }

        let distinct = pool.is_distinct(&x, inst)?;
        let mut accepted = false;
        if distinct {
            if expired() {
                timed_out = true;
                record(&mut history, mde);
                break;
            }
            let d0 = init_distance_variables(&x, inst);
            let mut obj = StressObjective::new(inst);
            let set = obj.feasible_set();
            spg_calls += 1;
            match spg_minimize(&mut obj, &set, &pack(&x, &d0), &spg_params) {
                Ok(res) => {
                    if res.status == SpgStatus::SuccessTolerance {
                        spg_success += 1;
                    }
                    let (x2, _) = unpack(&res.z, n);
                    let (lde2, mde2) = lde_mde(&x2, inst);
                    if meets(lde2, mde2) {
                        best = Some(Best { x: x2, lde: lde2, mde: mde2, phase: SolvePhase::Refinement });
                        solved = true;
                        record(&mut history, mde2);
                        break 'trials;
                    }
                    consider(&mut best, &x2, lde2, mde2, SolvePhase::Refinement);
                    let entry = PoolEntry {
                        torsions: measured_torsions(&x2),
                        conformation: Conformation { coords: x2 },
                        mde: mde2,
                        lde: lde2,
                    };
                    accepted = pool.try_insert(entry, inst)?;
                }
                Err(Error::NonsmoothPoint(i, j)) => {
                    log::warn!("trial {}: refinement hit coincident atoms {i} and {j}", c + 1);
                }
                Err(e) => return Err(e),
            }
        }
        record(&mut history, best.as_ref().map_or(f64::INFINITY, |b| b.mde));
        if accepted {
            stall = 0;
        } else {
            stall += 1;
        }
        if pool.len() > params.n_conf || stall >= params.stall_trials {
            break;
        }
    }

    let best = match best {
        Some(b) => b,
        None => {
            // Budget expired before any trial ran: one construction, unimproved.
            let mut rng = trial_rng(params.rng_seed, 0);
            let (_, x) = greedy_construction(inst, params.n_tors, inst.torsion_domains(), &mut rng)?;
            let (lde, mde) = lde_mde(&x, inst);
            Best { x, lde, mde, phase: SolvePhase::Construction }
        }
    };
    let status = if solved {
        SolveStatus::Solved
    } else if timed_out {
        SolveStatus::TimeLimit
    } else {
        SolveStatus::BestEffort
    };
    let sigma = stress(&best.x, inst, &init_distance_variables(&best.x, inst));
    Ok(SolveOutcome {
        conformation: Conformation::new(best.x)?,
        lde: best.lde,
        mde: best.mde,
        stress: sigma,
        status,
        phase: best.phase,
        trials,
        pool,
        spg_calls,
        spg_success,
        best_mde_history: history,
        elapsed: start.elapsed(),
    })
}
