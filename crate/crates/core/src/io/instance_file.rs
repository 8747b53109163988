use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{AtomRecord, EdgeConstraint, Instance, TorsionDomain};

/// Reads and validates an instance file.
pub fn parse_instance(path: impl AsRef<Path>) -> Result<Instance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_instance_str(&text, path)
}

/// Parses instance text; `origin` only labels error messages.
pub fn parse_instance_str(text: &str, origin: impl AsRef<Path>) -> Result<Instance> {
    let origin = origin.as_ref();
    let perr = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut atoms: BTreeMap<usize, (AtomRecord, usize)> = BTreeMap::new();
    let mut edges = Vec::new();
    let mut torsions: BTreeMap<usize, (TorsionDomain, usize)> = BTreeMap::new();

    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "E" => {
                if fields.len() != 9 {
                    return Err(perr(lineno, format!("edge record needs 8 fields, found {}", fields.len() - 1)));
                }
                let i = parse_index(fields[1]).map_err(|m| perr(lineno, m))?;
                let j = parse_index(fields[2]).map_err(|m| perr(lineno, m))?;
                if i >= j {
                    return Err(perr(lineno, format!("edge indices must satisfy i < j, got {} {}", i + 1, j + 1)));
                }
                let lo = parse_f64(fields[3], "dL").map_err(|m| perr(lineno, m))?;
                let hi = parse_f64(fields[4], "dU").map_err(|m| perr(lineno, m))?;
                if lo > hi {
                    return Err(perr(lineno, format!("dL = {lo} exceeds dU = {hi}")));
                }
                for (idx, name, res) in [(i, fields[5], fields[6]), (j, fields[7], fields[8])] {
                    let residue: usize = res
                        .parse()
                        .map_err(|_| perr(lineno, format!("residue '{res}' is not a nonnegative integer")))?;
                    let rec = AtomRecord::new(name, residue);
                    match atoms.get(&idx) {
                        Some((prev, first)) if *prev != rec => {
                            return Err(perr(
                                lineno,
                                format!(
                                    "atom {} is '{} {}' here but '{} {}' on line {first}",
                                    idx + 1,
                                    name,
                                    residue,
                                    prev.name,
                                    prev.residue
                                ),
                            ))
                        }
                        Some(_) => {}
                        None => {
                            atoms.insert(idx, (rec, lineno));
                        }
                    }
                }
                edges.push(EdgeConstraint::new(i, j, lo, hi));
            }
            "T" => {
                if fields.len() != 5 {
                    return Err(perr(lineno, format!("torsion record needs 4 fields, found {}", fields.len() - 1)));
                }
                let i = parse_index(fields[1]).map_err(|m| perr(lineno, m))?;
                let lo = parse_f64(fields[2], "tauL").map_err(|m| perr(lineno, m))?;
                let hi = parse_f64(fields[3], "tauU").map_err(|m| perr(lineno, m))?;
                let dom = torsion_from_record(lo, hi, fields[4]).map_err(|m| perr(lineno, m))?;
                if let Some((_, first)) = torsions.insert(i, (dom, lineno)) {
                    return Err(perr(lineno, format!("second torsion record for atom {} (first on line {first})", i + 1)));
                }
            }
            other => return Err(perr(lineno, format!("unknown record type '{other}'"))),
        }
    }

    let n = atoms.keys().next_back().map_or(0, |m| m + 1);
    if let Some(missing) = (0..n).find(|k| !atoms.contains_key(k)) {
        return Err(perr(0, format!("atom {} appears in no edge record", missing + 1)));
    }
    if let Some((&i, &(_, line))) = torsions.iter().find(|(&i, _)| i < 3 || i >= n) {
        return Err(perr(line, format!("torsion record for atom {} outside 4..={n}", i + 1)));
    }
    let atoms = atoms.into_values().map(|(a, _)| a).collect();
    let annotations = torsions.into_iter().map(|(i, (d, _))| (i, d)).collect();
    Instance::new(atoms, edges, annotations)
}

fn parse_index(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(format!("atom index '{s}' is not a positive integer")),
    }
}

fn parse_f64(s: &str, what: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{what} '{s}' is not a finite number")),
    }
}

/// `lo hi sign` in degrees. `±` (also `+-`) is the symmetric union over
/// magnitudes in `[lo, hi]`; `+` is `[lo, hi]`; `-` (also `−`) is `[-hi, -lo]`.
fn torsion_from_record(lo: f64, hi: f64, sign: &str) -> std::result::Result<TorsionDomain, String> {
    if !(0.0..=180.0).contains(&lo) || !(0.0..=180.0).contains(&hi) || lo > hi {
        return Err(format!("torsion magnitudes must satisfy 0 <= tauL <= tauU <= 180, got {lo} {hi}"));
    }
    let (lo, hi) = (lo.to_radians(), hi.to_radians());
    let dom = match sign {
        "±" | "+-" => TorsionDomain::symmetric(lo, hi),
        "+" => TorsionDomain::single(lo, hi),
        "-" | "−" => TorsionDomain::single(-hi, -lo),
        other => return Err(format!("torsion sign '{other}' is not one of +, -, ±")),
    };
    dom.map_err(|e| e.to_string())
}

fn torsion_record(dom: &TorsionDomain) -> (f64, f64, &'static str) {
    match *dom {
        TorsionDomain::Symmetric { lo, hi } => (lo.to_degrees(), hi.to_degrees(), "±"),
        TorsionDomain::Single { lo, hi } if lo >= 0.0 => (lo.to_degrees(), hi.to_degrees(), "+"),
        TorsionDomain::Single { lo, hi } if hi <= 0.0 => ((-hi).to_degrees(), (-lo).to_degrees(), "-"),
        // A single interval straddling zero has no one-sided record; widen to
        // the symmetric hull.
        TorsionDomain::Single { lo, hi } => (0.0, lo.abs().max(hi).to_degrees(), "±"),
    }
}

/// Instance text in the format read by [`parse_instance_str`].
pub fn format_instance(inst: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# {} atoms, {} edges", inst.n_atoms(), inst.n_edges());
    let atoms = inst.atoms();
    for e in inst.edges() {
        let (a, b) = (&atoms[e.i], &atoms[e.j]);
        let _ = writeln!(
            s,
            "E {} {} {} {} {} {} {} {}",
            e.i + 1,
            e.j + 1,
            e.lower,
            e.upper,
            a.name,
            a.residue,
            b.name,
            b.residue
        );
    }
    for (&i, dom) in inst.annotations() {
        let (lo, hi, sign) = torsion_record(dom);
        let _ = writeln!(s, "T {} {} {} {}", i + 1, lo.min(180.0), hi.min(180.0), sign);
    }
    s
}

pub fn write_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_instance(inst)).map_err(|e| Error::io(path, e))
}
