//! Python bindings: instances, the generator, the solver and the metrics.

use std::path::PathBuf;
use std::time::Duration;

use idmdgp::io::{self, GeneratorParams};
use idmdgp::metrics::lde_mde;
use idmdgp::search::kabsch_rmsd;
use idmdgp::{multistart_solve, SolveOutcome, SolverParams, Vec3};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(pyidmdgp, IdmdgpError, PyException);

fn err(e: idmdgp::Error) -> PyErr {
    IdmdgpError::new_err(e.to_string())
}

type Point = (f64, f64, f64);

fn to_vec3(inst: &idmdgp::Instance, coords: &[Point]) -> PyResult<Vec<Vec3>> {
    if coords.len() != inst.n_atoms() {
        return Err(PyValueError::new_err(format!(
            "{} coordinates for {} atoms",
            coords.len(),
            inst.n_atoms()
        )));
    }
    Ok(coords.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect())
}

fn to_points(x: &[Vec3]) -> Vec<Point> {
    x.iter().map(|p| (p.x, p.y, p.z)).collect()
}

/// An interval distance geometry instance.
#[pyclass(name = "Instance", frozen)]
pub struct PyInstance {
    inner: idmdgp::Instance,
}

#[pymethods]
impl PyInstance {
    /// Reads an instance file.
    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        io::parse_instance(&path).map(|inner| Self { inner }).map_err(err)
    }

    /// Parses instance text.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        io::parse_instance_str(text, "<string>").map(|inner| Self { inner }).map_err(err)
    }

    /// Builds an instance from reference-coordinate text.
    #[staticmethod]
    #[pyo3(signature = (reference, angle_width=50.0, hh_cutoff=5.0, hh_width_adjacent=1.0, hh_width_other=2.0, hydrogens=true))]
    fn generate(
        reference: &str,
        angle_width: f64,
        hh_cutoff: f64,
        hh_width_adjacent: f64,
        hh_width_other: f64,
        hydrogens: bool,
    ) -> PyResult<Self> {
        let r = io::parse_reference_str(reference, "<string>").map_err(err)?;
        let params = GeneratorParams {
            angle_width_deg: angle_width,
            hh_cutoff,
            hh_width_adjacent,
            hh_width_other,
            include_hydrogens: hydrogens,
        };
        io::generate_instance(&r, &params).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn n_atoms(&self) -> usize {
        self.inner.n_atoms()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    /// `(name, residue)` per atom.
    fn atoms(&self) -> Vec<(String, usize)> {
        self.inner.atoms().iter().map(|a| (a.name.clone(), a.residue)).collect()
    }

    /// `(i, j, lower, upper)` per edge, 1-based.
    fn edges(&self) -> Vec<(usize, usize, f64, f64)> {
        self.inner.edges().iter().map(|e| (e.i + 1, e.j + 1, e.lower, e.upper)).collect()
    }

    fn to_text(&self) -> String {
        io::format_instance(&self.inner)
    }

    /// `(lde, mde)` of a conformation.
    fn lde_mde(&self, coords: Vec<Point>) -> PyResult<(f64, f64)> {
        Ok(lde_mde(&to_vec3(&self.inner, &coords)?, &self.inner))
    }

    /// RMSD after optimal superposition.
    fn rmsd(&self, a: Vec<Point>, b: Vec<Point>) -> PyResult<f64> {
        let (a, b) = (to_vec3(&self.inner, &a)?, to_vec3(&self.inner, &b)?);
        kabsch_rmsd(&a, &b, &self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Instance(atoms={}, edges={})", self.inner.n_atoms(), self.inner.n_edges())
    }
}

/// Result of a multistart solve.
#[pyclass(name = "Solution", frozen, get_all)]
pub struct PySolution {
    coords: Vec<Point>,
    lde: f64,
    mde: f64,
    stress: f64,
    status: String,
    trials: usize,
    pool_size: usize,
    spg_calls: usize,
    elapsed: f64,
}

impl From<SolveOutcome> for PySolution {
    fn from(o: SolveOutcome) -> Self {
        Self {
            coords: to_points(&o.conformation.coords),
            lde: o.lde,
            mde: o.mde,
            stress: o.stress,
            status: format!("{:?}", o.status),
            trials: o.trials,
            pool_size: o.pool_size(),
            spg_calls: o.spg_calls,
            elapsed: o.elapsed.as_secs_f64(),
        }
    }
}

#[pymethods]
impl PySolution {
    #[getter]
    fn solved(&self) -> bool {
        self.status == "Solved"
    }

    fn __repr__(&self) -> String {
        format!("Solution(status={}, lde={:.3e}, mde={:.3e}, trials={})", self.status, self.lde, self.mde, self.trials)
    }
}

#[pyfunction]
#[pyo3(signature = (instance, seed=0, time_limit=None, n_trial=500, n_conf=50, n_tors=20, n_impr=3, eps_mde=1e-3, eps_lde=1e-2, eps_similar=5.0))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    instance: &PyInstance,
    seed: u64,
    time_limit: Option<f64>,
    n_trial: usize,
    n_conf: usize,
    n_tors: usize,
    n_impr: usize,
    eps_mde: f64,
    eps_lde: f64,
    eps_similar: f64,
) -> PyResult<PySolution> {
    let time_limit = time_limit
        .map(|s| Duration::try_from_secs_f64(s).map_err(|e| PyValueError::new_err(e.to_string())))
        .transpose()?;
    let params = SolverParams {
        n_trial,
        n_conf,
        n_tors,
        n_impr,
        eps_mde,
        eps_lde,
        eps_similar,
        rng_seed: seed,
        time_limit,
        ..SolverParams::default()
    };
    let inst = &instance.inner;
    py.detach(|| multistart_solve(inst, &params)).map(PySolution::from).map_err(err)
}

/// Reference-coordinate text for an ideal-geometry synthetic backbone.
#[pyfunction]
#[pyo3(signature = (residues=17, seed=0))]
fn synthetic_reference(residues: usize, seed: u64) -> PyResult<String> {
    io::synthetic_backbone(residues, seed).map(|r| io::format_reference(&r)).map_err(err)
}

#[pymodule]
fn pyidmdgp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("IdmdgpError", m.py().get_type::<IdmdgpError>())?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_reference, m)?)?;
    Ok(())
}
