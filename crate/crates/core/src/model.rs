//! Domain types shared by every other module: atoms, interval edges, torsion
//! domains, the validated [`Instance`], conformations and solver parameters.
//!
//! Atom indices are zero-based in memory. Files and human-facing messages use
//! one-based ordinals.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::geometry;
use crate::spg::SpgParams;
use crate::Vec3;

/// Tolerance on the law-of-cosines cosine below which a triple counts as collinear.
const COLLINEAR_COS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomRecord {
    pub name: String,
    /// One-based residue ordinal.
    pub residue: usize,
}

impl AtomRecord {
    pub fn new(name: impl Into<String>, residue: usize) -> Self {
        Self {
            name: name.into(),
            residue,
        }
    }

    pub fn is_hydrogen(&self) -> bool {
        self.name.starts_with('H')
    }
}

/// Distance bounds between atoms `i < j`, in Å.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeConstraint {
    pub i: usize,
    pub j: usize,
    pub lower: f64,
    pub upper: f64,
}

impl EdgeConstraint {
    pub fn new(i: usize, j: usize, lower: f64, upper: f64) -> Self {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        Self { i, j, lower, upper }
    }

    pub fn exact(i: usize, j: usize, d: f64) -> Self {
        Self::new(i, j, d, d)
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }

    /// True for the `{i-1,i}`, `{i-2,i}` and `{i-3,i}` edges.
    pub fn is_discretization(&self) -> bool {
        matches!(self.j - self.i, 1..=3)
    }

    pub fn span(&self) -> usize {
        self.j - self.i
    }
}

/// Admissible torsion angles, in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TorsionDomain {
    /// `[lo, hi]` with `-π ≤ lo ≤ hi ≤ π`.
    Single { lo: f64, hi: f64 },
    /// `[-hi, -lo] ∪ [lo, hi]` with `0 ≤ lo ≤ hi ≤ π`.
    Symmetric { lo: f64, hi: f64 },
}

impl TorsionDomain {
    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        let pi = std::f64::consts::PI;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < -pi || hi > pi {
            return Err(Error::InvalidArgument(format!(
                "single torsion interval [{lo}, {hi}] must satisfy -pi <= lo <= hi <= pi"
            )));
        }
        Ok(TorsionDomain::Single { lo, hi })
    }

    pub fn symmetric(lo: f64, hi: f64) -> Result<Self> {
        let pi = std::f64::consts::PI;
        if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < 0.0 || hi > pi {
            return Err(Error::InvalidArgument(format!(
                "symmetric torsion interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= pi"
            )));
        }
        Ok(TorsionDomain::Symmetric { lo, hi })
    }

    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            TorsionDomain::Single { lo, hi } | TorsionDomain::Symmetric { lo, hi } => (lo, hi),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self, TorsionDomain::Symmetric { .. })
    }

    pub fn contains(&self, tau: f64) -> bool {
        match *self {
            TorsionDomain::Single { lo, hi } => lo <= tau && tau <= hi,
            TorsionDomain::Symmetric { lo, hi } => lo <= tau.abs() && tau.abs() <= hi,
        }
    }

    /// Total angular measure of the domain.
    pub fn measure(&self) -> f64 {
        match *self {
            TorsionDomain::Single { lo, hi } => hi - lo,
            TorsionDomain::Symmetric { lo, hi } => 2.0 * (hi - lo),
        }
    }
}

/// A single violated instance invariant. Displays one-based atom ordinals.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewAtoms(usize),
    BadPair { i: usize, j: usize },
    NonFiniteBound { i: usize, j: usize },
    NonpositiveBound { i: usize, j: usize },
    InvertedBounds { i: usize, j: usize },
    DuplicateEdge { i: usize, j: usize },
    MissingEdge { i: usize, j: usize },
    MustBeExact { i: usize, j: usize },
    /// `atom` is the vertex of the degenerate angle.
    DegenerateAngle { atom: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::TooFewAtoms(n) => write!(f, "instance has {n} atoms, at least 3 required"),
            Violation::BadPair { i, j } => write!(f, "edge ({}, {}) is not an ordered pair of known atoms", i + 1, j + 1),
            Violation::NonFiniteBound { i, j } => write!(f, "edge ({}, {}) has a non-finite bound", i + 1, j + 1),
            Violation::NonpositiveBound { i, j } => write!(f, "edge ({}, {}) has a nonpositive lower bound", i + 1, j + 1),
            Violation::InvertedBounds { i, j } => write!(f, "edge ({}, {}) has lower > upper", i + 1, j + 1),
            Violation::DuplicateEdge { i, j } => write!(f, "edge ({}, {}) is given more than once", i + 1, j + 1),
            Violation::MissingEdge { i, j } => write!(f, "required edge ({}, {}) is missing", i + 1, j + 1),
            Violation::MustBeExact { i, j } => write!(f, "edge ({}, {}) must be exact", i + 1, j + 1),
            Violation::DegenerateAngle { atom } => {
                write!(f, "atoms {}..{} are collinear (bond angle not in (0, pi))", atom, atom + 2)
            }
        }
    }
}

/// Checks every structural invariant an instance needs for sequential placement.
/// Returns an empty list for valid input.
pub fn validate_instance(atoms: &[AtomRecord], edges: &[EdgeConstraint]) -> Vec<Violation> {
    let n = atoms.len();
    let mut out = Vec::new();
    if n < 3 {
        out.push(Violation::TooFewAtoms(n));
    }

    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    for (k, e) in edges.iter().enumerate() {
        let (i, j) = (e.i, e.j);
        if i >= j || j >= n {
            out.push(Violation::BadPair { i, j });
            continue;
        }
        if !(e.lower.is_finite() && e.upper.is_finite()) {
            out.push(Violation::NonFiniteBound { i, j });
            continue;
        }
        if e.lower <= 0.0 {
            out.push(Violation::NonpositiveBound { i, j });
        }
        if e.lower > e.upper {
            out.push(Violation::InvertedBounds { i, j });
        }
        if matches!(j - i, 1 | 2) && e.lower < e.upper {
            out.push(Violation::MustBeExact { i, j });
        }
        if seen.insert((i, j), k).is_some() {
            out.push(Violation::DuplicateEdge { i, j });
        }
    }

    for j in 1..n {
        for span in 1..=3.min(j) {
            if !seen.contains_key(&(j - span, j)) {
                out.push(Violation::MissingEdge { i: j - span, j });
            }
        }
    }

    // Bond angle at vertex k-1 of the triple (k-2, k-1, k); only checked when
    // all three exact lengths are present.
    let exact = |i: usize, j: usize| -> Option<f64> {
        let e = &edges[*seen.get(&(i, j))?];
        (e.is_exact() && e.lower > 0.0).then_some(e.lower)
    };
    for k in 2..n {
        if let (Some(ab), Some(bc), Some(ac)) = (exact(k - 2, k - 1), exact(k - 1, k), exact(k - 2, k)) {
            if bond_angle_from_distances(ab, bc, ac).is_err() {
                out.push(Violation::DegenerateAngle { atom: k - 1 });
            }
        }
    }
    out
}

/// `min(max(r, lower), upper)`.
pub fn project_interval(r: f64, lower: f64, upper: f64) -> Result<f64> {
    if lower > upper {
        return Err(Error::InvalidBounds { lower, upper });
    }
    Ok(r.max(lower).min(upper))
}

/// Angle at vertex `b` of the triangle with side lengths `|ab|`, `|bc|`, `|ac|`.
pub fn bond_angle_from_distances(d_ab: f64, d_bc: f64, d_ac: f64) -> Result<f64> {
    if !(d_ab > 0.0 && d_bc > 0.0 && d_ac > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "nonpositive side in triangle ({d_ab}, {d_bc}, {d_ac})"
        )));
    }
    let cos = (d_ab * d_ab + d_bc * d_bc - d_ac * d_ac) / (2.0 * d_ab * d_bc);
    if !(cos.abs() < 1.0 - COLLINEAR_COS_TOL) {
        return Err(Error::DegenerateGeometry(format!(
            "collinear triangle ({d_ab}, {d_bc}, {d_ac}), cos = {cos}"
        )));
    }
    Ok(cos.acos())
}

/// A validated iDMDGP instance with cached bond angles, torsion domains and
/// stress weights. Immutable once built.
#[derive(Debug, Clone)]
pub struct Instance {
    atoms: Vec<AtomRecord>,
    edges: Vec<EdgeConstraint>,
    lookup: HashMap<(usize, usize), usize>,
    back_edges: Vec<Vec<usize>>,
    weights: Vec<f64>,
    bond_angles: Vec<f64>,
    torsion_domains: Vec<Option<TorsionDomain>>,
    annotations: BTreeMap<usize, TorsionDomain>,
}

impl Instance {
    /// Validates the parts, derives bond angles and torsion domains, and
    /// builds the weight vector. Explicit `annotations` (atom index → domain)
    /// take precedence over distance-derived domains.
    pub fn new(
        atoms: Vec<AtomRecord>,
        mut edges: Vec<EdgeConstraint>,
        annotations: BTreeMap<usize, TorsionDomain>,
    ) -> Result<Self> {
        let violations = validate_instance(&atoms, &edges);
        if let Some(Violation::DuplicateEdge { i, j }) = violations
            .iter()
            .find(|v| matches!(v, Violation::DuplicateEdge { .. }))
        {
            return Err(Error::DuplicateEdge(*i, *j));
        }
        if !violations.is_empty() {
            return Err(Error::InvalidInstance(violations));
        }
        let n = atoms.len();
        if let Some(&bad) = annotations.keys().find(|&&k| k < 3 || k >= n) {
            return Err(Error::InvalidArgument(format!(
                "torsion annotation for atom {} is outside 4..={n}",
                bad + 1
            )));
        }

        edges.sort_by_key(|e| (e.i, e.j));
        let lookup: HashMap<_, _> = edges.iter().enumerate().map(|(k, e)| ((e.i, e.j), k)).collect();
        let mut back_edges = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            back_edges[e.j].push(k);
        }

        let raw: Vec<f64> = edges
            .iter()
            .map(|e| if e.is_discretization() { 2.0 } else { 1.0 })
            .collect();
        let total: f64 = raw.iter().sum();
        let weights = raw.into_iter().map(|w| w / total).collect();

        let mut inst = Instance {
            atoms,
            edges,
            lookup,
            back_edges,
            weights,
            bond_angles: vec![f64::NAN; n],
            torsion_domains: vec![None; n],
            annotations,
        };
        for k in 2..n {
            let ab = inst.exact_length(k - 2, k - 1);
            let bc = inst.exact_length(k - 1, k);
            let ac = inst.exact_length(k - 2, k);
            inst.bond_angles[k] = bond_angle_from_distances(ab, bc, ac)?;
        }
        for k in 3..n {
            let dom = match inst.annotations.get(&k) {
                Some(d) => *d,
                None => geometry::torsion_domain_from_distance(&inst, k)?,
            };
            inst.torsion_domains[k] = Some(dom);
        }
        Ok(inst)
    }

    pub fn n_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn atoms(&self) -> &[AtomRecord] {
        &self.atoms
    }

    /// Edges sorted by `(i, j)`.
    pub fn edges(&self) -> &[EdgeConstraint] {
        &self.edges
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.lookup.get(&key).copied()
    }

    pub fn edge(&self, i: usize, j: usize) -> Option<&EdgeConstraint> {
        self.edge_index(i, j).map(|k| &self.edges[k])
    }

    /// Indices of the edges `{i, j}` with `i < j`.
    pub fn back_edges(&self, j: usize) -> &[usize] {
        &self.back_edges[j]
    }

    /// Stress weights, one per edge, summing to 1.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Bond angle at vertex `k-1` between atoms `k-2` and `k`, for `k >= 2`.
    pub fn bond_angle(&self, k: usize) -> f64 {
        assert!(k >= 2, "bond angle defined from the third atom on");
        self.bond_angles[k]
    }

    /// Torsion domain of the quadruple ending at atom `k`, for `k >= 3`.
    pub fn torsion_domain(&self, k: usize) -> &TorsionDomain {
        self.torsion_domains[k]
            .as_ref()
            .expect("torsion domain defined from the fourth atom on")
    }

    /// Per-atom domains (`None` for the first three atoms).
    pub fn torsion_domains(&self) -> &[Option<TorsionDomain>] {
        &self.torsion_domains
    }

    /// Domains that came from explicit annotations rather than distances.
    pub fn annotations(&self) -> &BTreeMap<usize, TorsionDomain> {
        &self.annotations
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate_instance(&self.atoms, &self.edges)
    }

    /// Length of an exact edge. Panics if the edge is absent; callers only
    /// ask for discretization edges, which validation guarantees.
    pub fn exact_length(&self, i: usize, j: usize) -> f64 {
        self.edge(i, j)
            .unwrap_or_else(|| panic!("edge ({i}, {j}) missing from validated instance"))
            .lower
    }
}

/// Atom positions, one column per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct Conformation {
    pub coords: Vec<Vec3>,
}

impl Conformation {
    pub fn new(coords: Vec<Vec3>) -> Result<Self> {
        if coords.iter().any(|x| !x.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidArgument("conformation has non-finite coordinates".into()));
        }
        Ok(Self { coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.coords[i] - self.coords[j]).norm()
    }
}

/// Tunables of the multistart solver. Defaults are the published settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverParams {
    pub n_trial: usize,
    pub n_conf: usize,
    pub n_tors: usize,
    pub n_impr: usize,
    pub eps_mde: f64,
    pub eps_lde: f64,
    pub eps_similar: f64,
    /// Consecutive near-duplicate trials tolerated before giving up.
    pub stall_trials: usize,
    pub spg_max_iter: usize,
    pub spg_stress_success: f64,
    pub spg_stall_window: usize,
    pub rng_seed: u64,
    pub time_limit: Option<Duration>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            n_trial: 500,
            n_conf: 50,
            n_tors: 20,
            n_impr: 3,
            eps_mde: 1e-3,
            eps_lde: 1e-2,
            eps_similar: 5.0,
            stall_trials: 50,
            spg_max_iter: 30_000,
            spg_stress_success: 1e-7,
            spg_stall_window: 100,
            rng_seed: 0,
            time_limit: None,
        }
    }
}

impl SolverParams {
    pub fn check(&self) -> Result<()> {
        let counts = [
            ("n_trial", self.n_trial),
            ("n_conf", self.n_conf),
            ("n_tors", self.n_tors),
            ("stall_trials", self.stall_trials),
            ("spg_max_iter", self.spg_max_iter),
            ("spg_stall_window", self.spg_stall_window),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
        let tols = [
            ("eps_mde", self.eps_mde),
            ("eps_lde", self.eps_lde),
            ("eps_similar", self.eps_similar),
            ("spg_stress_success", self.spg_stress_success),
        ];
        if let Some((name, _)) = tols.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(format!("{name} must be positive")));
        }
        Ok(())
    }

    pub fn spg_params(&self) -> SpgParams {
        SpgParams {
            max_iter: self.spg_max_iter,
            success_f: self.spg_stress_success,
            stall_window: self.spg_stall_window,
            ..SpgParams::default()
        }
    }
}
