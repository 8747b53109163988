//! Spectral projected gradient with a nonmonotone (max over a window) Armijo
//! line search and safeguarded quadratic backtracking.
//!
//! The feasible set is a product of a free block and a box block:
//! `z = [free (n_free) | boxed (lower ≤ z ≤ upper)]`.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SpgParams {
    /// Sufficient-decrease parameter.
    pub gamma: f64,
    /// Nonmonotone window length.
    pub memory: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub max_iter: usize,
    pub success_f: f64,
    pub stall_window: usize,
    pub stall_rel_decrease: f64,
    pub step_zero_tol: f64,
    /// Backtracking steps allowed per iteration before giving up.
    pub max_backtracks: usize,
}

impl Default for SpgParams {
    fn default() -> Self {
        Self {
            gamma: 1e-4,
            memory: 10,
            lambda_min: 1e-30,
            lambda_max: 1e30,
            sigma1: 0.1,
            sigma2: 0.9,
            max_iter: 30_000,
            success_f: 1e-7,
            stall_window: 100,
            stall_rel_decrease: 1e-12,
            step_zero_tol: 1e-16,
            max_backtracks: 100,
        }
    }
}

impl SpgParams {
    pub fn check(&self) -> Result<()> {
        let ok = self.gamma > 0.0
            && self.gamma < 1.0
            && 0.0 < self.sigma1
            && self.sigma1 < self.sigma2
            && self.sigma2 < 1.0
            && 0.0 < self.lambda_min
            && self.lambda_min <= self.lambda_max
            && self.memory >= 1
            && self.max_backtracks >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid SPG parameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpgStatus {
    SuccessTolerance,
    Stalled,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SpgResult {
    /// Best iterate seen.
    pub z: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub status: SpgStatus,
    /// Objective values of the last `memory` accepted iterates.
    pub f_history: Vec<f64>,
}

/// Objective with gradient. `grad` has the length of `z` and is overwritten.
pub trait Objective {
    fn evaluate(&mut self, z: &[f64], grad: &mut [f64]) -> Result<f64>;
}

impl<F> Objective for F
where
    F: FnMut(&[f64], &mut [f64]) -> Result<f64>,
{
    fn evaluate(&mut self, z: &[f64], grad: &mut [f64]) -> Result<f64> {
        self(z, grad)
    }
}

/// `R^n_free × [lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeBox {
    pub n_free: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FreeBox {
    pub fn new(n_free: usize, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::InvalidArgument("box bound lengths differ".into()));
        }
        if let Some((l, u)) = lower.iter().zip(&upper).find(|(l, u)| l > u) {
            return Err(Error::InvalidBounds { lower: *l, upper: *u });
        }
        Ok(Self { n_free, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.n_free + self.lower.len()
    }

    pub fn project(&self, z: &mut [f64]) {
        for ((v, l), u) in z[self.n_free..].iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.max(*l).min(*u);
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z[self.n_free..]
            .iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, l), u)| l <= v && v <= u)
    }
}

fn projected_step(z: &[f64], g: &[f64], lambda: f64, set: &FreeBox, out: &mut [f64]) {
    for ((o, zi), gi) in out.iter_mut().zip(z).zip(g) {
        *o = zi - lambda * gi;
    }
    set.project(out);
    for (o, zi) in out.iter_mut().zip(z) {
        *o -= zi;
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `clamp(1 / |P(z0 - g0) - z0|_inf, λ_min, λ_max)`.
pub fn initial_spectral_step(z0: &[f64], g0: &[f64], set: &FreeBox, params: &SpgParams) -> Result<f64> {
    let mut step = vec![0.0; z0.len()];
    projected_step(z0, g0, 1.0, set, &mut step);
    let norm = inf_norm(&step);
    if norm == 0.0 {
        return Err(Error::StationaryStart);
    }
    Ok((1.0 / norm).clamp(params.lambda_min, params.lambda_max))
}

/// Minimizes `obj` over `set` starting at `z0` (projected first).
pub fn spg_minimize<O: Objective + ?Sized>(
    obj: &mut O,
    set: &FreeBox,
    z0: &[f64],
    params: &SpgParams,
) -> Result<SpgResult> {
    params.check()?;
    if z0.len() != set.dim() {
        return Err(Error::InvalidArgument(format!(
            "start has {} coordinates, feasible set {}",
            z0.len(),
            set.dim()
        )));
    }
    let n = z0.len();
    let mut z = z0.to_vec();
    set.project(&mut z);
    let mut g = vec![0.0; n];
    let mut f = obj.evaluate(&z, &mut g)?;

    let mut history: VecDeque<f64> = VecDeque::with_capacity(params.memory);
    history.push_back(f);
    let finish = |z: Vec<f64>, f: f64, iterations, status, history: &VecDeque<f64>| SpgResult {
        z,
        f,
        iterations,
        status,
        f_history: history.iter().copied().collect(),
    };

    if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Ok(finish(z, f, 0, SpgStatus::NumericalFailure, &history));
    }
    if f <= params.success_f {
        return Ok(finish(z, f, 0, SpgStatus::SuccessTolerance, &history));
    }
    let mut lambda = match initial_spectral_step(&z, &g, set, params) {
        Ok(l) => l,
        Err(Error::StationaryStart) => return Ok(finish(z, f, 0, SpgStatus::Stalled, &history)),
        Err(e) => return Err(e),
    };

    let mut best_z = z.clone();
    let mut best_f = f;
    let mut stall_count = 0usize;
    let mut d = vec![0.0; n];
    let mut z_trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];

    for iter in 0..params.max_iter {
        projected_step(&z, &g, lambda, set, &mut d);
        if inf_norm(&d) <= params.step_zero_tol {
            return Ok(finish(best_z, best_f, iter, SpgStatus::Stalled, &history));
        }
        let gtd = dot(&g, &d);
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..params.max_backtracks {
            for ((t, zi), di) in z_trial.iter_mut().zip(&z).zip(&d) {
                *t = zi + alpha * di;
            }
            // z and z + d are feasible; the segment between them is, but
            // rounding in the sum can leave a bound by an ulp.
            set.project(&mut z_trial);
            let f_trial = obj.evaluate(&z_trial, &mut g_trial)?;
            if !f_trial.is_finite() || g_trial.iter().any(|v| !v.is_finite()) {
                return Ok(finish(best_z, best_f, iter, SpgStatus::NumericalFailure, &history));
            }
            if f_trial <= f_ref + params.gamma * alpha * gtd {
                accepted = Some(f_trial);
                break;
            }
            let denom = f_trial - f - alpha * gtd;
            let candidate = if denom > 0.0 {
                -0.5 * alpha * alpha * gtd / denom
            } else {
                alpha / 2.0
            };
            alpha = candidate.clamp(params.sigma1 * alpha, params.sigma2 * alpha);
        }
        let Some(f_new) = accepted else {
            return Ok(finish(best_z, best_f, iter, SpgStatus::Stalled, &history));
        };

        let mut sty = 0.0;
        let mut sts = 0.0;
        for k in 0..n {
            let s = z_trial[k] - z[k];
            let y = g_trial[k] - g[k];
            sty += s * y;
            sts += s * s;
        }
        lambda = if sty <= 0.0 {
            params.lambda_max
        } else {
            (sts / sty).clamp(params.lambda_min, params.lambda_max)
        };

        std::mem::swap(&mut z, &mut z_trial);
        std::mem::swap(&mut g, &mut g_trial);
        f = f_new;
        if history.len() == params.memory {
            history.pop_front();
        }
        history.push_back(f);

        let prev_best = best_f;
        if f < best_f {
            best_f = f;
            best_z.copy_from_slice(&z);
        }
        if best_f <= params.success_f {
            return Ok(finish(best_z, best_f, iter + 1, SpgStatus::SuccessTolerance, &history));
        }
        if prev_best - best_f <= params.stall_rel_decrease * prev_best.abs() {
            stall_count += 1;
            if stall_count >= params.stall_window {
                return Ok(finish(best_z, best_f, iter + 1, SpgStatus::Stalled, &history));
            }
        } else {
            stall_count = 0;
        }
    }
    Ok(finish(best_z, best_f, params.max_iter, SpgStatus::MaxIter, &history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn half_norm_sq(z: &[f64], g: &mut [f64]) -> Result<f64> {
        g.copy_from_slice(z);
        Ok(0.5 * dot(z, z))
    }

    #[test]
    fn convex_quadratic_in_box() {
        let n = 8;
        let set = FreeBox::new(0, vec![-1.0; n], vec![1.0; n]).unwrap();
        let z0: Vec<f64> = (0..n).map(|k| 0.9 - 0.2 * k as f64).collect();
        let r = spg_minimize(&mut half_norm_sq, &set, &z0, &SpgParams::default()).unwrap();
        assert_eq!(r.status, SpgStatus::SuccessTolerance);
        assert!(r.f <= 1e-7);
        assert!(r.iterations < 100);
    }

    #[test]
    fn minimizer_start_returns_immediately() {
        let set = FreeBox::new(2, vec![-1.0; 2], vec![1.0; 2]).unwrap();
        let r = spg_minimize(&mut half_norm_sq, &set, &[0.0; 4], &SpgParams::default()).unwrap();
        assert_eq!(r.status, SpgStatus::SuccessTolerance);
        assert!(r.iterations <= 1);
        assert_eq!(r.f, 0.0);
    }

    #[test]
    fn initial_step_on_free_block() {
        let set = FreeBox::new(3, vec![], vec![]).unwrap();
        let l = initial_spectral_step(&[1.0, 2.0, 3.0], &[0.5, -2.0, 1.0], &set, &SpgParams::default()).unwrap();
        assert_eq!(l, 0.5);
    }

    #[test]
    fn initial_step_detects_stationary_start() {
        // Free coordinate has zero gradient; boxed ones sit on bounds with the
        // gradient pushing outward.
        let set = FreeBox::new(1, vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let r = initial_spectral_step(&[3.0, 0.0, 1.0], &[0.0, 2.0, -2.0], &set, &SpgParams::default());
        assert!(matches!(r, Err(Error::StationaryStart)));
    }

    #[test]
    fn separable_quadratic_matches_projected_minimizer() {
        // f = Σ c_k (z_k - t_k)² / 2 with box [-1, 1]: minimizer is clamp(t).
        let c = [1.0, 3.0, 0.5, 10.0, 2.0];
        let t = [0.3, -2.0, 1.7, 0.9, -0.4];
        let mut f = |z: &[f64], g: &mut [f64]| -> Result<f64> {
            let mut v = 0.0;
            for k in 0..5 {
                g[k] = c[k] * (z[k] - t[k]);
                v += 0.5 * c[k] * (z[k] - t[k]).powi(2);
            }
            // Shift so the constrained optimum has objective 0.
            let opt: f64 = (0..5).map(|k| 0.5 * c[k] * (t[k].clamp(-1.0, 1.0) - t[k]).powi(2)).sum();
            Ok(v - opt)
        };
        let set = FreeBox::new(0, vec![-1.0; 5], vec![1.0; 5]).unwrap();
        let params = SpgParams { success_f: 1e-14, ..SpgParams::default() };
        let r = spg_minimize(&mut f, &set, &[0.0; 5], &params).unwrap();
        for k in 0..5 {
            assert!((r.z[k] - t[k].clamp(-1.0, 1.0)).abs() < 1e-6, "{:?}", r.z);
        }
    }

    /// Records every evaluated point to check feasibility and the line-search rule.
    struct Recorder<F> {
        inner: F,
        points: Vec<(Vec<f64>, f64)>,
    }

    impl<F: FnMut(&[f64], &mut [f64]) -> Result<f64>> Objective for Recorder<F> {
        fn evaluate(&mut self, z: &[f64], grad: &mut [f64]) -> Result<f64> {
            let f = (self.inner)(z, grad)?;
            self.points.push((z.to_vec(), f));
            Ok(f)
        }
    }

    #[test]
    fn iterates_stay_in_box_and_run_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 6;
        let lower: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.0)).collect();
        let upper: Vec<f64> = lower.iter().map(|l| l + rng.random_range(0.1..1.0)).collect();
        let set = FreeBox::new(2, lower, upper).unwrap();
        // Nonconvex coupling between free and boxed coordinates.
        let rosen = |z: &[f64], g: &mut [f64]| -> Result<f64> {
            let mut v = 0.0;
            g.iter_mut().for_each(|x| *x = 0.0);
            for k in 0..z.len() - 1 {
                let a = z[k + 1] - z[k] * z[k];
                let b = 1.0 - z[k];
                v += 10.0 * a * a + b * b;
                g[k] += -40.0 * z[k] * a - 2.0 * b;
                g[k + 1] += 20.0 * a;
            }
            Ok(v)
        };
        let z0 = vec![0.5; 8];
        let params = SpgParams { max_iter: 500, ..SpgParams::default() };
        let mut rec = Recorder { inner: rosen, points: Vec::new() };
        let r1 = spg_minimize(&mut rec, &set, &z0, &params).unwrap();
        assert!(rec.points.iter().all(|(z, _)| set.contains(z)));
        assert!(r1.f <= rec.points[0].1);

        let mut rec2 = Recorder { inner: rosen, points: Vec::new() };
        let r2 = spg_minimize(&mut rec2, &set, &z0, &params).unwrap();
        assert_eq!(r1.z, r2.z);
        assert_eq!(r1.iterations, r2.iterations);
        assert_eq!(rec.points.len(), rec2.points.len());
    }

    #[test]
    fn rejects_bad_parameters() {
        let set = FreeBox::new(1, vec![], vec![]).unwrap();
        let bad = SpgParams { sigma1: 0.95, ..SpgParams::default() };
        assert!(spg_minimize(&mut half_norm_sq, &set, &[1.0], &bad).is_err());
        assert!(FreeBox::new(0, vec![1.0], vec![0.0]).is_err());
    }
}
