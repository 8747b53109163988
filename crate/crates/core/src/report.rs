//! Run reports and benchmark results tables.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use crate::error::{Error, Result};
use crate::io::AlgorithmRuns;
use crate::model::Instance;
use crate::search::{SolveOutcome, SolveStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportStatus {
    Solved,
    BestEffort,
    TimeLimit,
    Error,
}

impl From<SolveStatus> for ReportStatus {
    fn from(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Solved => ReportStatus::Solved,
            SolveStatus::BestEffort => ReportStatus::BestEffort,
            SolveStatus::TimeLimit => ReportStatus::TimeLimit,
        }
    }
}

impl fmt::Display for ReportStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportStatus::Solved => "Solved",
            ReportStatus::BestEffort => "BestEffort",
            ReportStatus::TimeLimit => "TimeLimit",
            ReportStatus::Error => "Error",
        })
    }
}

impl FromStr for ReportStatus {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "Solved" => Ok(ReportStatus::Solved),
            "BestEffort" => Ok(ReportStatus::BestEffort),
            "TimeLimit" => Ok(ReportStatus::TimeLimit),
            "Error" => Ok(ReportStatus::Error),
            other => Err(format!("unknown status '{other}'")),
        }
    }
}

/// Wall time as recorded in reports: whole runs under one second count as
/// one second, longer ones are kept at centisecond resolution.
pub fn clamp_runtime(elapsed: Duration) -> f64 {
    let s = elapsed.as_secs_f64();
    if s < 1.0 {
        1.0
    } else {
        (s * 100.0).round() / 100.0
    }
}

/// Summary of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub instance: String,
    pub atoms: usize,
    pub edges: usize,
    pub pool: usize,
    pub lde: f64,
    pub mde: f64,
    pub stress: f64,
    /// Clamped wall time, see [`clamp_runtime`].
    pub time_s: f64,
    pub status: ReportStatus,
    pub seed: u64,
    pub trials: usize,
    pub spg_calls: usize,
    pub spg_success: usize,
}

impl RunReport {
    pub fn from_outcome(id: &str, inst: &Instance, out: &SolveOutcome, seed: u64) -> Self {
        Self {
            instance: id.to_owned(),
            atoms: inst.n_atoms(),
            edges: inst.n_edges(),
            pool: out.pool_size(),
            lde: out.lde,
            mde: out.mde,
            stress: out.stress,
            time_s: clamp_runtime(out.elapsed),
            status: out.status.into(),
            seed,
            trials: out.trials,
            spg_calls: out.spg_calls,
            spg_success: out.spg_success,
        }
    }

    /// Report for a run that failed before producing a conformation.
    pub fn failed(id: &str, seed: u64, elapsed: Duration) -> Self {
        Self {
            instance: id.to_owned(),
            atoms: 0,
            edges: 0,
            pool: 0,
            lde: f64::NAN,
            mde: f64::NAN,
            stress: f64::NAN,
            time_s: clamp_runtime(elapsed),
            status: ReportStatus::Error,
            seed,
            trials: 0,
            spg_calls: 0,
            spg_success: 0,
        }
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "instance: {}", self.instance);
        let _ = writeln!(s, "atoms: {}", self.atoms);
        let _ = writeln!(s, "edges: {}", self.edges);
        let _ = writeln!(s, "pool: {}", self.pool);
        let _ = writeln!(s, "lde: {:.5e}", self.lde);
        let _ = writeln!(s, "mde: {:.5e}", self.mde);
        let _ = writeln!(s, "stress: {:.5e}", self.stress);
        let _ = writeln!(s, "time_s: {:.2}", self.time_s);
        let _ = writeln!(s, "status: {}", self.status);
        let _ = writeln!(s, "seed: {}", self.seed);
        let _ = writeln!(s, "trials: {}", self.trials);
        let _ = writeln!(s, "spg_calls: {}", self.spg_calls);
        let _ = writeln!(s, "spg_success: {}", self.spg_success);
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let map: BTreeMap<&str, &str> = text
            .lines()
            .filter_map(|l| l.split_once(':'))
            .map(|(k, v)| (k.trim(), v.trim()))
            .collect();
        let get = |k: &str| {
            map.get(k)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("report lacks '{k}'")))
        };
        Ok(Self {
            instance: get("instance")?.to_owned(),
            atoms: num(get("atoms")?, "atoms")?,
            edges: num(get("edges")?, "edges")?,
            pool: num(get("pool")?, "pool")?,
            lde: num(get("lde")?, "lde")?,
            mde: num(get("mde")?, "mde")?,
            stress: num(get("stress")?, "stress")?,
            time_s: num(get("time_s")?, "time_s")?,
            status: get("status")?.parse().map_err(Error::InvalidArgument)?,
            seed: num(get("seed")?, "seed")?,
            trials: num(get("trials")?, "trials")?,
            spg_calls: num(get("spg_calls")?, "spg_calls")?,
            spg_success: num(get("spg_success")?, "spg_success")?,
        })
    }
}

fn num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::InvalidArgument(format!("{what}: cannot parse '{s}'")))
}

pub const RESULTS_HEADER: &str = "instance\tatoms\tedges\tpool\tlde\tmde\ttime_s\tstatus\tseed";

/// One tab-separated results row, matching [`RESULTS_HEADER`].
pub fn results_row(r: &RunReport) -> String {
    format!(
        "{}\t{}\t{}\t{}\t{:.5e}\t{:.5e}\t{:.2}\t{}\t{}",
        r.instance, r.atoms, r.edges, r.pool, r.lde, r.mde, r.time_s, r.status, r.seed
    )
}

pub fn format_results(rows: &[RunReport]) -> String {
    let mut s = format!("{RESULTS_HEADER}\n");
    for r in rows {
        s.push_str(&results_row(r));
        s.push('\n');
    }
    s
}

/// `(instance, time_s, status)` per row of a results table.
pub fn parse_results_str(text: &str, origin: impl AsRef<Path>) -> Result<Vec<(String, f64, ReportStatus)>> {
    let perr = |line: usize, message: String| Error::Parse {
        path: origin.as_ref().to_path_buf(),
        line,
        message,
    };
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') || line == RESULTS_HEADER {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 9 {
            return Err(perr(k + 1, format!("expected 9 tab-separated fields, found {}", f.len())));
        }
        let time: f64 = f[6]
            .parse()
            .map_err(|_| perr(k + 1, format!("time '{}' is not a number", f[6])))?;
        let status = f[7].parse().map_err(|m| perr(k + 1, m))?;
        out.push((f[0].to_owned(), time, status));
    }
    Ok(out)
}

/// Results table as profile input: rows not `Solved` count as failures.
pub fn results_to_runs(label: &str, rows: &[(String, f64, ReportStatus)]) -> Result<AlgorithmRuns> {
    let mut runtimes = BTreeMap::new();
    for (id, t, status) in rows {
        let v = (*status == ReportStatus::Solved).then_some(*t);
        if runtimes.insert(id.clone(), v).is_some() {
            return Err(Error::ProfileMismatch(format!("'{label}' lists problem '{id}' twice")));
        }
    }
    Ok(AlgorithmRuns { label: label.to_owned(), runtimes })
}
