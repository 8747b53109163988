use std::path::PathBuf;

use thiserror::Error;

use crate::model::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid bounds: lower {lower} > upper {upper}")]
    InvalidBounds { lower: f64, upper: f64 },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("infeasible discretization at atom {atom}: distance interval [{lower}, {upper}] outside reachable range [{reach_lo}, {reach_hi}]")]
    InfeasibleDiscretization {
        atom: usize,
        lower: f64,
        upper: f64,
        reach_lo: f64,
        reach_hi: f64,
    },

    #[error("empty torsion domain after sign restriction")]
    EmptyDomain,

    #[error("nonsmooth point: atoms {0} and {1} coincide")]
    NonsmoothPoint(usize, usize),

    #[error("stationary start: projected gradient step is zero")]
    StationaryStart,

    #[error("RMSD selection: {0}")]
    Selection(String),

    #[error("duplicate edge between atoms {} and {}", .0 + 1, .1 + 1)]
    DuplicateEdge(usize, usize),

    #[error("invalid instance: {}", format_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("performance profile: {0}")]
    ProfileMismatch(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

fn format_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
