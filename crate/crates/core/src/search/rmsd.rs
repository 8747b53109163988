use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::model::Instance;
use crate::Vec3;

/// Above this many atoms only `CA` atoms take part in the comparison.
pub const ALL_ATOM_LIMIT: usize = 200;

fn centroid(p: &[Vec3]) -> Vec3 {
    p.iter().fold(Vec3::zeros(), |a, b| a + b) / p.len() as f64
}

/// Proper rotation `R` (det +1) minimizing `Σ |y_k - R x_k|²` for centered
/// point sets.
pub fn optimal_rotation(x: &[Vec3], y: &[Vec3]) -> Matrix3<f64> {
    let h: Matrix3<f64> = x.iter().zip(y).map(|(a, b)| a * b.transpose()).sum();
    let svd = h.svd(true, true);
    let u = svd.u.expect("3x3 SVD yields U");
    let v = svd.v_t.expect("3x3 SVD yields V^T").transpose();
    let d = (v * u.transpose()).determinant().signum();
    v * Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, d)) * u.transpose()
}

/// Minimal RMSD over rigid motions between paired point sets.
pub fn superposed_rmsd(x: &[Vec3], y: &[Vec3]) -> f64 {
    assert_eq!(x.len(), y.len());
    if x.is_empty() {
        return 0.0;
    }
    let cx = centroid(x);
    let cy = centroid(y);
    let xc: Vec<Vec3> = x.iter().map(|p| p - cx).collect();
    let yc: Vec<Vec3> = y.iter().map(|p| p - cy).collect();
    let r = optimal_rotation(&xc, &yc);
    let ss: f64 = xc.iter().zip(&yc).map(|(a, b)| (b - r * a).norm_squared()).sum();
    (ss / x.len() as f64).sqrt()
}

/// Kabsch-aligned RMSD between two conformations of `inst`: all atoms up to
/// [`ALL_ATOM_LIMIT`], otherwise the atoms named `CA`.
pub fn kabsch_rmsd(x: &[Vec3], y: &[Vec3], inst: &Instance) -> Result<f64> {
    if x.len() != y.len() || x.len() != inst.n_atoms() {
        return Err(Error::InvalidArgument(format!(
            "RMSD needs two conformations of {} atoms, got {} and {}",
            inst.n_atoms(),
            x.len(),
            y.len()
        )));
    }
    if x.len() <= ALL_ATOM_LIMIT {
        return Ok(superposed_rmsd(x, y));
    }
    let sel: Vec<usize> = inst
        .atoms()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.name == "CA")
        .map(|(k, _)| k)
        .collect();
    if sel.is_empty() {
        return Err(Error::Selection(format!(
            "{} atoms but no atom named CA",
            x.len()
        )));
    }
    let xs: Vec<Vec3> = sel.iter().map(|&k| x[k]).collect();
    let ys: Vec<Vec3> = sel.iter().map(|&k| y[k]).collect();
    Ok(superposed_rmsd(&xs, &ys))
}
