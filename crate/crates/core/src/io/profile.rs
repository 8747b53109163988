use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Runtimes of one algorithm per problem; `None` marks a failure.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgorithmRuns {
    pub label: String,
    pub runtimes: BTreeMap<String, Option<f64>>,
}

/// Support points `(t, ρ(t))` of a right-continuous step function; `ρ` is
/// constant from each point up to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileCurve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl ProfileCurve {
    /// `ρ(t)`; zero below the first support point.
    pub fn rho_at(&self, t: f64) -> f64 {
        self.points.iter().take_while(|(s, _)| *s <= t).last().map_or(0.0, |p| p.1)
    }
}

/// Performance ratios `r[a][p] = t[a][p] / min_a t[a][p]`, infinite on
/// failure (including problems nobody solved).
pub fn performance_ratios(algos: &[AlgorithmRuns]) -> Result<Vec<Vec<f64>>> {
    let first = algos
        .first()
        .ok_or_else(|| Error::ProfileMismatch("no algorithms given".into()))?;
    for a in algos {
        if !a.runtimes.keys().eq(first.runtimes.keys()) {
            return Err(Error::ProfileMismatch(format!(
                "'{}' and '{}' cover different problem sets",
                first.label, a.label
            )));
        }
        if let Some((p, t)) = a.runtimes.iter().find(|(_, t)| t.is_some_and(|t| !(t > 0.0 && t.is_finite()))) {
            return Err(Error::ProfileMismatch(format!(
                "'{}' has nonpositive or non-finite runtime {:?} on '{p}'",
                a.label, t
            )));
        }
    }
    let problems: Vec<&String> = first.runtimes.keys().collect();
    if problems.is_empty() {
        return Err(Error::ProfileMismatch("empty problem set".into()));
    }
    let best: Vec<f64> = problems
        .iter()
        .map(|p| {
            algos
                .iter()
                .filter_map(|a| a.runtimes[*p])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(algos
        .iter()
        .map(|a| {
            problems
                .iter()
                .zip(&best)
                .map(|(p, b)| match a.runtimes[*p] {
                    Some(t) if b.is_finite() => t / b,
                    _ => f64::INFINITY,
                })
                .collect()
        })
        .collect())
}

/// Step points of `ρ_a(t) = |{p : r_pa ≤ t}| / |P|` for every algorithm:
/// one point at `t = 1` and one at each larger distinct finite ratio.
pub fn performance_profile(algos: &[AlgorithmRuns]) -> Result<Vec<ProfileCurve>> {
    let ratios = performance_ratios(algos)?;
    Ok(algos
        .iter()
        .zip(ratios)
        .map(|(a, r)| {
            let total = r.len() as f64;
            let mut finite: Vec<f64> = r.iter().copied().filter(|v| v.is_finite()).collect();
            finite.sort_by(f64::total_cmp);
            let mut support = vec![1.0];
            support.extend(finite.iter().copied().filter(|&v| v > 1.0));
            support.dedup();
            let points = support
                .into_iter()
                .map(|t| (t, finite.iter().filter(|&&v| v <= t).count() as f64 / total))
                .collect();
            ProfileCurve { label: a.label.clone(), points }
        })
        .collect())
}

/// `v` with six significant digits in plain decimal notation.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.5}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Table `algorithm<TAB>t<TAB>rho` with a header line.
pub fn format_profile(curves: &[ProfileCurve]) -> String {
    let mut s = String::from("algorithm\tt\trho\n");
    for c in curves {
        for &(t, rho) in &c.points {
            let _ = writeln!(s, "{}\t{}\t{}", c.label, format_sig6(t), format_sig6(rho));
        }
    }
    s
}
