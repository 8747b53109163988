use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{init_distance_variables, lde_mde, stress};
use crate::model::{AtomRecord, Instance};
use crate::Vec3;

/// Labelled coordinates, one atom per line as `index name residue x y z`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub atoms: Vec<AtomRecord>,
    pub coords: Vec<Vec3>,
}

impl Reference {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

pub fn parse_reference(path: impl AsRef<Path>) -> Result<Reference> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_reference_str(&text, path)
}

/// Parses reference or conformation text. `#` lines (including a conformation
/// trailer) are skipped.
pub fn parse_reference_str(text: &str, origin: impl AsRef<Path>) -> Result<Reference> {
    let perr = |line: usize, message: String| Error::Parse {
        path: origin.as_ref().to_path_buf(),
        line,
        message,
    };
    let mut atoms = Vec::new();
    let mut coords = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let lineno = k + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 6 {
            return Err(perr(lineno, format!("expected 'index name residue x y z', found {} fields", f.len())));
        }
        let index: usize = f[0]
            .parse()
            .map_err(|_| perr(lineno, format!("index '{}' is not a positive integer", f[0])))?;
        if index != atoms.len() + 1 {
            return Err(perr(lineno, format!("index {index} out of sequence, expected {}", atoms.len() + 1)));
        }
        let residue: usize = f[2]
            .parse()
            .map_err(|_| perr(lineno, format!("residue '{}' is not a nonnegative integer", f[2])))?;
        let mut xyz = [0.0; 3];
        for (c, s) in xyz.iter_mut().zip(&f[3..]) {
            *c = match s.parse::<f64>() {
                Ok(v) if v.is_finite() => v,
                _ => return Err(perr(lineno, format!("coordinate '{s}' is not a finite number"))),
            };
        }
        atoms.push(AtomRecord::new(f[1], residue));
        coords.push(Vec3::from(xyz));
    }
    Ok(Reference { atoms, coords })
}

fn push_atoms(s: &mut String, atoms: &[AtomRecord], coords: &[Vec3]) {
    for (k, (a, p)) in atoms.iter().zip(coords).enumerate() {
        let _ = writeln!(s, "{} {} {} {:.6} {:.6} {:.6}", k + 1, a.name, a.residue, p.x, p.y, p.z);
    }
}

pub fn format_reference(r: &Reference) -> String {
    let mut s = String::new();
    push_atoms(&mut s, &r.atoms, &r.coords);
    s
}

pub fn write_reference(r: &Reference, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_reference(r)).map_err(|e| Error::io(path, e))
}

/// Conformation text with a trailing metrics block.
pub fn format_conformation(x: &[Vec3], inst: &Instance) -> Result<String> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("refusing to write an empty conformation".into()));
    }
    if x.len() != inst.n_atoms() {
        return Err(Error::InvalidArgument(format!(
            "conformation has {} atoms, instance {}",
            x.len(),
            inst.n_atoms()
        )));
    }
    let (lde, mde) = lde_mde(x, inst);
    let sigma = stress(x, inst, &init_distance_variables(x, inst));
    let mut s = String::new();
    push_atoms(&mut s, inst.atoms(), x);
    let _ = writeln!(s, "# LDE {lde:.5e}");
    let _ = writeln!(s, "# MDE {mde:.5e}");
    let _ = writeln!(s, "# stress {sigma:.5e}");
    Ok(s)
}

pub fn write_conformation(x: &[Vec3], inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_conformation(x, inst)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `(LDE, MDE, stress)` read back from a conformation trailer.
pub fn parse_trailer(text: &str) -> Option<(f64, f64, f64)> {
    let get = |key: &str| {
        text.lines()
            .filter_map(|l| l.strip_prefix("# "))
            .find_map(|l| l.strip_prefix(key)?.trim().parse::<f64>().ok())
    };
    Some((get("LDE ")?, get("MDE ")?, get("stress ")?))
}
