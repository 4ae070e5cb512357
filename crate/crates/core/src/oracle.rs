//! Non-intrusive reference: sampled velocity realizations, each run through a
//! scalar level-set solver, reduced to ensemble statistics.
//!
//! The scalar solver is written separately from [`crate::solver`] and shares
//! only the grid and initial-condition types. Its numerics follow the same
//! discretization (local Lax-Friedrichs on `∂_t u + ∇(v‖u‖) = 0`, explicit
//! Euler, face velocities at face midpoints) so that a one-mode intrusive run
//! and a scalar run agree to rounding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basis::{GpcBasis, QuadratureRule};
use crate::error::{Error, Result};
use crate::solver::{Grid, InitialCondition, VelocitySpec};

/// Scalar fields at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarSnapshot {
    pub t: f64,
    pub step: usize,
    pub phi: Vec<f64>,
    pub u: Vec<[f64; 2]>,
}

/// Deterministic level-set run for one velocity realization.
#[derive(Debug, Clone)]
pub struct ScalarLevelSet {
    grid: Grid,
    cell_v: Vec<f64>,
    /// `face_v[a][c]` = velocity at the upper axis-`a` face of cell `c`.
    face_v: Vec<Vec<f64>>,
    /// Velocity at the lower axis-`a` face, used on outflow boundaries.
    lower_v: Vec<Vec<f64>>,
    pub phi: Vec<f64>,
    pub u: Vec<[f64; 2]>,
    pub t: f64,
    pub steps: usize,
    cfl: f64,
}

impl ScalarLevelSet {
    pub fn new(grid: &Grid, phi0: &InitialCondition, velocity: impl Fn([f64; 2]) -> f64, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl < 1.0) {
            return Err(Error::InvalidArgument(format!("cfl number {cfl} outside (0, 1)")));
        }
        let n = grid.n_cells();
        let mut phi = Vec::with_capacity(n);
        let mut u = Vec::with_capacity(n);
        let mut degenerate = Vec::new();
        for c in 0..n {
            let x = cell_center(grid, c);
            let g = phi0.gradient(x);
            let g = if grid.dims == 1 { [g[0], 0.0] } else { g };
            if g[0].hypot(g[1]) <= 1e-12 {
                degenerate.push(c);
            }
            phi.push(phi0.value(x));
            u.push(g);
        }
        if !degenerate.is_empty() {
            return Err(Error::DegenerateGradient { cells: degenerate });
        }
        let h = [grid.dx, grid.dy];
        let face = |side: f64| -> Vec<Vec<f64>> {
            (0..grid.dims)
                .map(|a| {
                    (0..n)
                        .map(|c| {
                            let mut x = cell_center(grid, c);
                            x[a] += 0.5 * side * h[a];
                            velocity(x)
                        })
                        .collect()
                })
                .collect()
        };
        Ok(Self {
            grid: grid.clone(),
            cell_v: (0..n).map(|c| velocity(cell_center(grid, c))).collect(),
            face_v: face(1.0),
            lower_v: face(-1.0),
            phi,
            u,
            t: 0.0,
            steps: 0,
            cfl,
        })
    }

    fn norms(&self) -> Result<Vec<f64>> {
        let norms: Vec<f64> = self.u.iter().map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt()).collect();
        let bad: Vec<usize> = (0..norms.len()).filter(|&c| norms[c] <= 1e-10 * (1.0 + norms[c])).collect();
        if let Some(&c) = bad.first() {
            return Err(Error::NotSpd {
                min_eigenvalue: norms[c],
            });
        }
        Ok(norms)
    }

    fn upper(&self, c: usize, a: usize) -> Option<usize> {
        let g = &self.grid;
        let (i, j) = (c % g.nx, c / g.nx);
        let (pos, len) = if a == 0 { (i, g.nx) } else { (j, g.ny) };
        let next = if pos + 1 < len {
            pos + 1
        } else if g.boundary == crate::solver::Boundary::Periodic {
            0
        } else {
            return None;
        };
        Some(if a == 0 { j * g.nx + next } else { next * g.nx + i })
    }

    fn lower(&self, c: usize, a: usize) -> Option<usize> {
        let g = &self.grid;
        let (i, j) = (c % g.nx, c / g.nx);
        let (pos, len) = if a == 0 { (i, g.nx) } else { (j, g.ny) };
        let prev = if pos > 0 {
            pos - 1
        } else if g.boundary == crate::solver::Boundary::Periodic {
            len - 1
        } else {
            return None;
        };
        Some(if a == 0 { j * g.nx + prev } else { prev * g.nx + i })
    }

    /// Stable step size of the current state.
    pub fn max_dt(&self) -> Result<f64> {
        let norms = self.norms()?;
        Ok(self.coefficients(&norms).1)
    }

    /// LLF coefficients on upper faces and the CFL step.
    fn coefficients(&self, norms: &[f64]) -> (Vec<Vec<f64>>, f64) {
        let g = &self.grid;
        let n = g.n_cells();
        let speed = |c: usize, a: usize, v: f64| (v * self.u[c][a] / norms[c]).abs();
        let alpha: Vec<Vec<f64>> = (0..g.dims)
            .map(|a| {
                (0..n)
                    .map(|c| {
                        let v = self.face_v[a][c];
                        match self.upper(c, a) {
                            Some(r) => speed(c, a, v).max(speed(r, a, v)),
                            None => speed(c, a, v),
                        }
                    })
                    .collect()
            })
            .collect();
        let h = [g.dx, g.dy];
        let mut rate = 0.0f64;
        for c in 0..n {
            let mut r = 0.0;
            for a in 0..g.dims {
                let lo = match self.lower(c, a) {
                    Some(l) => alpha[a][l],
                    None => speed(c, a, self.lower_v[a][c]),
                };
                r += lo.max(alpha[a][c]) / h[a];
            }
            rate = rate.max(r);
        }
        let dt = if rate > 0.0 {
            self.cfl / rate
        } else {
            self.cfl * if g.dims == 2 { g.dx.min(g.dy) } else { g.dx }
        };
        (alpha, dt)
    }

    /// One Euler step, at most `dt_cap` long. Returns the step taken.
    pub fn step(&mut self, dt_cap: Option<f64>) -> Result<f64> {
        let g = self.grid.clone();
        let n = g.n_cells();
        let norms = self.norms()?;
        let (alpha, dt_max) = self.coefficients(&norms);
        let dt = dt_cap.map_or(dt_max, |cap| dt_max.min(cap));
        let h = [g.dx, g.dy];
        // flux[a][c][b]: block-b flux through the upper axis-a face of c.
        let flux: Vec<Vec<[f64; 2]>> = (0..g.dims)
            .map(|a| {
                (0..n)
                    .map(|c| {
                        let v = self.face_v[a][c];
                        let mut f = [0.0; 2];
                        match self.upper(c, a) {
                            Some(r) => {
                                for (b, fb) in f.iter_mut().enumerate().take(g.dims) {
                                    *fb = -0.5 * alpha[a][c] * (self.u[r][b] - self.u[c][b]);
                                }
                                f[a] += 0.5 * (v * norms[c] + v * norms[r]);
                            }
                            None => f[a] = v * norms[c],
                        }
                        f
                    })
                    .collect()
            })
            .collect();
        let mut u = self.u.clone();
        for c in 0..n {
            let mut div = [0.0; 2];
            for a in 0..g.dims {
                let lower = match self.lower(c, a) {
                    Some(l) => flux[a][l],
                    None => {
                        let mut f = [0.0; 2];
                        f[a] = self.lower_v[a][c] * norms[c];
                        f
                    }
                };
                for b in 0..g.dims {
                    div[b] += (flux[a][c][b] - lower[b]) * (1.0 / h[a]);
                }
            }
            for b in 0..g.dims {
                u[c][b] = self.u[c][b] - div[b] * dt;
            }
        }
        for c in 0..n {
            self.phi[c] -= self.cell_v[c] * norms[c] * dt;
        }
        self.u = u;
        self.t += dt;
        self.steps += 1;
        Ok(dt)
    }

    pub fn snapshot(&self) -> ScalarSnapshot {
        ScalarSnapshot {
            t: self.t,
            step: self.steps,
            phi: self.phi.clone(),
            u: self.u.clone(),
        }
    }

    /// Steps to `t_end`, clipping the last step; snapshots at the start,
    /// every `snapshot_every` steps (if nonzero) and at the end.
    pub fn run_to(&mut self, t_end: f64, snapshot_every: usize) -> Result<Vec<ScalarSnapshot>> {
        let mut out = vec![self.snapshot()];
        let tol = 1e-14 * t_end.abs().max(1.0);
        while t_end - self.t > tol {
            self.step(Some(t_end - self.t))?;
            if t_end - self.t <= tol {
                self.t = t_end;
            }
            if snapshot_every > 0 && self.steps.is_multiple_of(snapshot_every) {
                out.push(self.snapshot());
            }
        }
        if out.last().map(|s| s.step) != Some(self.steps) {
            out.push(self.snapshot());
        }
        Ok(out)
    }
}

fn cell_center(grid: &Grid, c: usize) -> [f64; 2] {
    let (i, j) = (c % grid.nx, c / grid.nx);
    if grid.dims == 1 {
        [grid.origin[0] + i as f64 * grid.dx, 0.0]
    } else {
        [grid.origin[0] + i as f64 * grid.dx, grid.origin[1] + j as f64 * grid.dy]
    }
}

/// Scalar level-set solve for one velocity field `v(x)`.
pub fn deterministic_solve(
    grid: &Grid,
    phi0: &InitialCondition,
    velocity: impl Fn([f64; 2]) -> f64,
    t_end: f64,
    cfl: f64,
    snapshot_every: usize,
) -> Result<Vec<ScalarSnapshot>> {
    ScalarLevelSet::new(grid, phi0, velocity, cfl)?.run_to(t_end, snapshot_every)
}

/// How the stochastic coordinates are sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleMode {
    /// `samples` independent draws of `ξ ~ U(-1, 1)^L` from ChaCha8 seeded with `seed`.
    MonteCarlo { samples: usize, seed: u64 },
    /// Tensor Gauss-Legendre nodes with probability weights.
    Collocation { nodes_per_dim: usize },
}

/// One sample's final fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRun {
    pub xi: Vec<f64>,
    pub weight: f64,
    pub phi_field: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub mode: EnsembleMode,
    pub t: f64,
    pub samples: Vec<SampleRun>,
    pub mean: Vec<f64>,
    /// Weighted population variance `Σ w (φ − mean)²`.
    pub variance: Vec<f64>,
}

/// Sample points and weights for a mode.
pub fn sample_points(dim: usize, mode: EnsembleMode) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    match mode {
        EnsembleMode::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("Monte Carlo needs at least one sample".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xi = (0..samples)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            Ok((xi, vec![1.0 / samples as f64; samples]))
        }
        EnsembleMode::Collocation { nodes_per_dim } => {
            if nodes_per_dim == 0 {
                return Err(Error::InvalidArgument("collocation needs at least one node".into()));
            }
            let rule = QuadratureRule::tensor_gauss(dim, nodes_per_dim);
            Ok((rule.nodes, rule.weights))
        }
    }
}

/// Runs every sample to `t_end` and reduces the final `φ` fields.
pub fn ensemble(
    basis: &GpcBasis,
    grid: &Grid,
    phi0: &InitialCondition,
    velocity: &VelocitySpec,
    t_end: f64,
    cfl: f64,
    mode: EnsembleMode,
) -> Result<Ensemble> {
    if velocity.len() != basis.len() {
        return Err(Error::DimensionMismatch {
            expected: basis.len(),
            got: velocity.len(),
        });
    }
    let (points, weights) = sample_points(basis.dim(), mode)?;
    let samples: Vec<SampleRun> = points
        .into_par_iter()
        .zip(weights)
        .map(|(xi, weight)| {
            let mut run = ScalarLevelSet::new(grid, phi0, |x| velocity.realize(basis, x, &xi), cfl)?;
            run.run_to(t_end, 0)?;
            Ok(SampleRun {
                xi,
                weight,
                phi_field: run.phi,
            })
        })
        .collect::<Result<_>>()?;
    let weighted: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.phi_field.iter().map(|p| s.weight * p).collect())
        .collect();
    let mean = pairwise_sum(&weighted);
    let sq: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| s.phi_field.iter().zip(&mean).map(|(p, m)| s.weight * (p - m) * (p - m)).collect())
        .collect();
    let variance = pairwise_sum(&sq);
    Ok(Ensemble {
        mode,
        t: t_end,
        samples,
        mean,
        variance,
    })
}

/// Elementwise sum of equal-length rows by a balanced binary tree, so the
/// result does not depend on how samples were scheduled.
pub fn pairwise_sum(rows: &[Vec<f64>]) -> Vec<f64> {
    match rows.len() {
        0 => Vec::new(),
        1 => rows[0].clone(),
        n => {
            let (a, b) = rayon::join(|| pairwise_sum(&rows[..n / 2]), || pairwise_sum(&rows[n / 2..]));
            a.iter().zip(&b).map(|(x, y)| x + y).collect()
        }
    }
}

impl Ensemble {
    /// Standard error of the Monte Carlo mean, `sqrt(s² / N)` with the
    /// unbiased sample variance. `None` for collocation.
    pub fn standard_error(&self) -> Option<Vec<f64>> {
        match self.mode {
            EnsembleMode::MonteCarlo { samples, .. } if samples > 1 => {
                let n = samples as f64;
                Some(self.variance.iter().map(|v| (v * n / (n - 1.0) / n).sqrt()).collect())
            }
            _ => None,
        }
    }

    pub fn std_dev(&self) -> Vec<f64> {
        self.variance.iter().map(|v| v.sqrt()).collect()
    }

    /// Weighted empirical `P[|φ| ≤ ε]` per cell.
    pub fn cdf_abs(&self, epsilon: f64) -> Vec<f64> {
        let rows: Vec<Vec<f64>> = self
            .samples
            .iter()
            .map(|s| s.phi_field.iter().map(|p| if p.abs() <= epsilon { s.weight } else { 0.0 }).collect())
            .collect();
        pairwise_sum(&rows)
    }

    /// Union and intersection over samples of the cells touched by the zero
    /// level set: `φ_c = 0`, or a sign change to an axis neighbor.
    pub fn envelopes(&self, grid: &Grid) -> (Vec<bool>, Vec<bool>) {
        let n = grid.n_cells();
        let mut union = vec![false; n];
        let mut intersection = vec![true; n];
        for s in &self.samples {
            let mask = zero_crossing_cells(grid, &s.phi_field);
            for c in 0..n {
                union[c] |= mask[c];
                intersection[c] &= mask[c];
            }
        }
        if self.samples.is_empty() {
            intersection.fill(false);
        }
        (union, intersection)
    }
}

/// Cells whose value is zero or differs in sign from an axis neighbor.
pub fn zero_crossing_cells(grid: &Grid, phi: &[f64]) -> Vec<bool> {
    (0..grid.n_cells())
        .map(|c| {
            phi[c] == 0.0
                || (0..grid.dims).any(|a| {
                    [-1, 1].iter().any(|&side| {
                        grid.neighbor(c, a, side)
                            .is_some_and(|d| phi[c].signum() != phi[d].signum() && phi[d] != 0.0)
                    })
                })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{Boundary, ModeFunction};

    fn line(n: usize, boundary: Boundary) -> Grid {
        Grid::covering(1, [n, 1], [-1.0, 0.0], [1.0, 0.0], boundary).unwrap()
    }

    #[test]
    fn zero_velocity_keeps_phi() {
        let g = line(32, Boundary::Outflow);
        let phi0 = InitialCondition::Wave {
            slope: [1.0, 0.0],
            amplitude: 0.1,
            wavenumber: [3.0, 0.0],
            offset: 0.2,
        };
        let snaps = deterministic_solve(&g, &phi0, |_| 0.0, 0.3, 0.5, 0).unwrap();
        assert_eq!(snaps.first().unwrap().phi, snaps.last().unwrap().phi);
        assert_eq!(snaps.last().unwrap().t, 0.3);
    }

    #[test]
    fn plane_translates_at_unit_speed() {
        let g = line(50, Boundary::Outflow);
        let phi0 = InitialCondition::Plane {
            slope: [1.0, 0.0],
            offset: 0.0,
        };
        let s = deterministic_solve(&g, &phi0, |_| 1.0, 0.25, 0.45, 0).unwrap();
        let last = s.last().unwrap();
        for c in 0..50 {
            let x = g.center(c)[0];
            assert!((last.phi[c] - (x - 0.25)).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_gradient_rejected() {
        let g = Grid::covering(2, [5, 5], [-1.0, -1.0], [1.0, 1.0], Boundary::Outflow).unwrap();
        let phi0 = InitialCondition::Circle {
            center: [0.0, 0.0],
            radius: 0.5,
        };
        let err = ScalarLevelSet::new(&g, &phi0, |_| 1.0, 0.4).unwrap_err();
        assert_eq!(err, Error::DegenerateGradient { cells: vec![12] });
    }

    #[test]
    fn deterministic_velocity_gives_identical_samples() {
        let basis = GpcBasis::new(1, 2).unwrap();
        let g = line(24, Boundary::Periodic);
        let phi0 = InitialCondition::Wave {
            slope: [1.0, 0.0],
            amplitude: 0.1,
            wavenumber: [std::f64::consts::PI, 0.0],
            offset: 0.0,
        };
        let v = VelocitySpec::new(vec![ModeFunction::Constant(0.7), ModeFunction::Constant(0.0), ModeFunction::Constant(0.0)]);
        let e = ensemble(&basis, &g, &phi0, &v, 0.2, 0.45, EnsembleMode::MonteCarlo { samples: 7, seed: 3 }).unwrap();
        assert!(e.variance.iter().all(|&x| x.abs() < 1e-28));
        let single = deterministic_solve(&g, &phi0, |_| 0.7, 0.2, 0.45, 0).unwrap();
        for (m, p) in e.mean.iter().zip(&single.last().unwrap().phi) {
            assert!((m - p).abs() < 1e-13);
        }
    }

    #[test]
    fn single_sample_equals_deterministic_solve() {
        let basis = GpcBasis::new(1, 1).unwrap();
        let g = line(20, Boundary::Outflow);
        let phi0 = InitialCondition::Plane {
            slope: [2.0, 0.0],
            offset: 0.1,
        };
        let v = VelocitySpec::uniform(&[1.0, 0.2]);
        let mode = EnsembleMode::MonteCarlo { samples: 1, seed: 11 };
        let e = ensemble(&basis, &g, &phi0, &v, 0.1, 0.4, mode).unwrap();
        let xi = e.samples[0].xi.clone();
        let vx = v.realize(&basis, [0.0, 0.0], &xi);
        let single = deterministic_solve(&g, &phi0, |_| vx, 0.1, 0.4, 0).unwrap();
        assert_eq!(e.mean, single.last().unwrap().phi);
        assert_eq!(e.samples[0].weight, 1.0);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let basis = GpcBasis::new(1, 1).unwrap();
        let g = line(16, Boundary::Periodic);
        let phi0 = InitialCondition::Wave {
            slope: [1.0, 0.0],
            amplitude: 0.2,
            wavenumber: [std::f64::consts::PI, 0.0],
            offset: 0.0,
        };
        let v = VelocitySpec::uniform(&[1.0, 0.1]);
        let mode = EnsembleMode::MonteCarlo { samples: 33, seed: 42 };
        let a = ensemble(&basis, &g, &phi0, &v, 0.1, 0.45, mode).unwrap();
        let b = ensemble(&basis, &g, &phi0, &v, 0.1, 0.45, mode).unwrap();
        assert_eq!(a, b);
        let total: f64 = a.samples.iter().map(|s| s.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collocation_is_exact_for_polynomial_fields() {
        // φ_c(ξ) = Σ_k a_{c,k} ξ^k for k ≤ 2n − 1 has closed-form moments.
        let n = 4;
        let (xi, w) = sample_points(1, EnsembleMode::Collocation { nodes_per_dim: n }).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let coeffs = [0.3, -1.2, 0.7, 0.25];
        let rows: Vec<Vec<f64>> = xi
            .iter()
            .zip(&w)
            .map(|(x, w)| {
                let val: f64 = coeffs.iter().enumerate().map(|(k, a)| a * x[0].powi(k as i32)).sum();
                vec![w * val, w * val * val]
            })
            .collect();
        let s = pairwise_sum(&rows);
        let moment = |k: usize| if k % 2 == 1 { 0.0 } else { 1.0 / (k as f64 + 1.0) };
        let mean: f64 = coeffs.iter().enumerate().map(|(k, a)| a * moment(k)).sum();
        let mut second = 0.0;
        for (i, a) in coeffs.iter().enumerate() {
            for (j, b) in coeffs.iter().enumerate() {
                second += a * b * moment(i + j);
            }
        }
        assert!((s[0] - mean).abs() < 1e-14);
        assert!((s[1] - second).abs() < 1e-14);
    }

    #[test]
    fn envelopes_and_cdf() {
        let g = line(5, Boundary::Outflow);
        let e = Ensemble {
            mode: EnsembleMode::Collocation { nodes_per_dim: 2 },
            t: 0.0,
            samples: vec![
                SampleRun {
                    xi: vec![-0.5],
                    weight: 0.5,
                    phi_field: vec![-2.0, -1.0, 0.5, 1.0, 2.0],
                },
                SampleRun {
                    xi: vec![0.5],
                    weight: 0.5,
                    phi_field: vec![-2.0, -1.0, -0.5, 1.0, 2.0],
                },
            ],
            mean: vec![0.0; 5],
            variance: vec![0.0; 5],
        };
        let (union, inter) = e.envelopes(&g);
        assert_eq!(union, vec![false, true, true, true, false]);
        assert_eq!(inter, vec![false, false, true, false, false]);
        assert_eq!(e.cdf_abs(0.5), vec![0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(e.cdf_abs(1.0), vec![0.0, 1.0, 1.0, 1.0, 0.0]);
    }
}
