//! First-order finite-volume integration of the stochastic Galerkin
//! level-set system on uniform 1D/2D grids.
//!
//! The gradient modes `û` are evolved with a local Lax-Friedrichs scheme and
//! explicit Euler steps, in either the conservative form (velocity inside the
//! flux, evaluated at faces) or the capacity form (`P(v̂)⁻¹` weighting the time
//! derivative, velocity at cell centers, source `−P(v̂)⁻¹ (∂_{x_a} v̂ ∗ ‖u‖̂)`).
//! The level-set modes `φ̂` follow pointwise with `∂_t φ̂ = −v̂ ∗ ‖u‖̂`.

mod grid;
mod initial;
mod velocity;

pub use grid::{Boundary, Grid};
pub use initial::InitialCondition;
pub use velocity::{ModeFunction, Table, VelocitySpec};

use rayon::prelude::*;

use crate::algebra::{
    galerkin_product, gpc_norm_with_floor, p_matrix, GpcMatrix, GpcVector,
};
use crate::basis::GpcBasis;
use crate::error::{Error, Result};
use crate::flux::{capacity_radius, conservative_radius, diagonalize_velocity, GradState};

pub const DEFAULT_CFL: f64 = 0.45;

/// Shift added to `Σ û_i^{∗2}` when the norm floor is switched on.
pub const NORM_FLOOR_DELTA: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Form {
    #[default]
    Conservative,
    Capacity,
}

/// Cell averages of `φ̂` and `û` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub grid: Grid,
    pub t: f64,
    pub u_field: Vec<GradState>,
    pub phi_field: Vec<GpcVector>,
    pub form: Form,
    pub cfl_number: f64,
    pub step_count: usize,
    /// Adds `δ e_1` to the summed second moments before the Galerkin root.
    /// Off by default; switching it on changes the discretized equations.
    pub norm_floor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepReport {
    pub dt_used: f64,
    pub max_wavespeed: f64,
    /// Cells whose norm, hyperbolicity or velocity operator check failed.
    pub positivity_failures: Vec<usize>,
    pub halted: bool,
}

/// A refused step. The state it was applied to is left unchanged.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("step {step} halted: {error} ({} offending cells)", report.positivity_failures.len())]
pub struct StepFailure {
    pub step: usize,
    pub error: Error,
    pub report: StepReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    pub phi_field: Vec<GpcVector>,
    pub u_field: Vec<GradState>,
    pub gradient_consistency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub snapshots: Vec<Snapshot>,
    pub steps: usize,
    pub failure: Option<StepFailure>,
}

/// Findings of [`Solver::audit`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Audit {
    pub positivity_failures: Vec<usize>,
    pub nonhyperbolic_cells: Vec<usize>,
    pub singular_velocity_cells: Vec<usize>,
    /// Largest stable time step, when every check passed.
    pub dt_max: Option<f64>,
    pub first_error: Option<Error>,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.first_error.is_none()
    }
}

/// Per-step quantities shared by the flux evaluation and the CFL bound.
struct Plan {
    norms: Vec<GpcVector>,
    /// `alpha[a][c]`: LLF coefficient on the upper axis-`a` face of cell `c`.
    alpha_upper: Vec<Vec<f64>>,
    dt_max: f64,
    max_wavespeed: f64,
}

/// Finite-volume solver bound to one basis, velocity field and grid.
///
/// Velocities at cell centers and faces are evaluated once at construction.
pub struct Solver<'a> {
    basis: &'a GpcBasis,
    velocity: &'a VelocitySpec,
    grid: Grid,
    cell_velocity: Vec<GpcVector>,
    cell_velocity_gradient: Vec<[GpcVector; 2]>,
    /// `face_velocity[a][c]` = `[lower, upper]` face velocity of cell `c`.
    face_velocity: Vec<Vec<[GpcVector; 2]>>,
    cell_velocity_operator: Vec<GpcMatrix>,
    cell_velocity_radius: Vec<f64>,
    cell_velocity_min_abs: Vec<f64>,
}

impl<'a> Solver<'a> {
    pub fn new(basis: &'a GpcBasis, velocity: &'a VelocitySpec, grid: Grid) -> Result<Self> {
        if velocity.len() != basis.len() {
            return Err(Error::DimensionMismatch {
                expected: basis.len(),
                got: velocity.len(),
            });
        }
        let n = grid.n_cells();
        let cell_velocity: Vec<GpcVector> = (0..n).map(|c| velocity.eval(grid.center(c))).collect();
        let cell_velocity_gradient = (0..n).map(|c| velocity.gradient(grid.center(c))).collect();
        let face_velocity = (0..grid.dims)
            .map(|a| {
                (0..n)
                    .map(|c| {
                        [
                            velocity.eval(grid.face_midpoint(c, a, -1)),
                            velocity.eval(grid.face_midpoint(c, a, 1)),
                        ]
                    })
                    .collect()
            })
            .collect();
        let cell_velocity_operator: Vec<GpcMatrix> = cell_velocity.iter().map(|v| p_matrix(basis, v)).collect();
        let (radius, min_abs): (Vec<f64>, Vec<f64>) = cell_velocity
            .iter()
            .zip(&cell_velocity_operator)
            .map(|(v, p)| {
                if v.is_deterministic() {
                    (v[0].abs(), v[0].abs())
                } else {
                    let eig = p.symmetric_eigenvalues();
                    let abs = eig.iter().map(|l| l.abs());
                    (abs.clone().fold(0.0, f64::max), abs.fold(f64::INFINITY, f64::min))
                }
            })
            .unzip();
        Ok(Self {
            basis,
            velocity,
            grid,
            cell_velocity,
            cell_velocity_gradient,
            face_velocity,
            cell_velocity_operator,
            cell_velocity_radius: radius,
            cell_velocity_min_abs: min_abs,
        })
    }

    pub fn basis(&self) -> &GpcBasis {
        self.basis
    }

    pub fn velocity(&self) -> &VelocitySpec {
        self.velocity
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Deterministic initial data: `φ̂ = φ_0 e_1`, `û = ∇φ_0 e_1` per cell.
    ///
    /// Fails with [`Error::DegenerateGradient`] if `∇φ_0` vanishes on a cell.
    pub fn init_deterministic(&self, phi0: &InitialCondition, form: Form, cfl_number: f64) -> Result<SolverState> {
        let n = self.basis.len();
        let g = &self.grid;
        let mut degenerate = Vec::new();
        let mut phi_field = Vec::with_capacity(g.n_cells());
        let mut u_field = Vec::with_capacity(g.n_cells());
        for c in 0..g.n_cells() {
            let p = g.center(c);
            let grad = phi0.gradient(p);
            let norm = if g.dims == 1 { grad[0].abs() } else { grad[0].hypot(grad[1]) };
            if norm <= 1e-12 {
                degenerate.push(c);
            }
            phi_field.push(GpcVector::constant(n, phi0.value(p)));
            let comps = (0..g.dims).map(|a| GpcVector::constant(n, grad[a])).collect();
            u_field.push(GradState::from_components(comps));
        }
        if !degenerate.is_empty() {
            return Err(Error::DegenerateGradient { cells: degenerate });
        }
        self.with_fields(phi_field, u_field, form, cfl_number)
    }

    /// State from explicit gPC fields.
    pub fn with_fields(
        &self,
        phi_field: Vec<GpcVector>,
        u_field: Vec<GradState>,
        form: Form,
        cfl_number: f64,
    ) -> Result<SolverState> {
        let cells = self.grid.n_cells();
        if phi_field.len() != cells || u_field.len() != cells {
            return Err(Error::DimensionMismatch {
                expected: cells,
                got: phi_field.len().min(u_field.len()),
            });
        }
        if !(cfl_number > 0.0 && cfl_number < 1.0) {
            return Err(Error::InvalidArgument(format!("cfl number {cfl_number} outside (0, 1)")));
        }
        for (phi, u) in phi_field.iter().zip(&u_field) {
            if phi.len() != self.basis.len() || u.len() != self.basis.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.basis.len(),
                    got: phi.len(),
                });
            }
            if u.dims() != self.grid.dims {
                return Err(Error::InvalidArgument("gradient dimension differs from the grid".into()));
            }
        }
        Ok(SolverState {
            grid: self.grid.clone(),
            t: 0.0,
            u_field,
            phi_field,
            form,
            cfl_number,
            step_count: 0,
            norm_floor: None,
        })
    }

    /// The Galerkin root already insists on `λ_min(P(‖u‖̂)) > 1e-10 (1 + |‖u‖̂|_∞)`,
    /// the authoritative positivity check for the flux Jacobians.
    fn cell_norm(&self, u: &GradState, floor: Option<f64>) -> Result<GpcVector> {
        gpc_norm_with_floor(self.basis, &u.components(), floor)
    }

    /// `‖u‖̂` on every cell; failing cells are collected.
    pub fn norm_field(&self, state: &SolverState) -> std::result::Result<Vec<GpcVector>, (Error, Vec<usize>)> {
        let results: Vec<Result<GpcVector>> = state
            .u_field
            .par_iter()
            .map(|u| self.cell_norm(u, state.norm_floor))
            .collect();
        collect_cells(results)
    }

    fn plan(&self, state: &SolverState) -> std::result::Result<Plan, (Error, Vec<usize>)> {
        let g = &self.grid;
        let n = g.n_cells();
        if state.form == Form::Capacity {
            let singular: Vec<usize> = (0..n)
                .filter(|&c| self.cell_velocity_min_abs[c] <= crate::flux::VELOCITY_INVERTIBILITY_TOL)
                .collect();
            if let Some(&c) = singular.first() {
                let err = Error::SingularVelocityOperator {
                    min_abs_eigenvalue: self.cell_velocity_min_abs[c],
                };
                return Err((err, singular));
            }
        }
        let norms = self.norm_field(state)?;

        let mut alpha_upper = Vec::with_capacity(g.dims);
        let mut alpha_boundary = Vec::with_capacity(g.dims);
        for a in 0..g.dims {
            let (upper, boundary) = match state.form {
                Form::Capacity => {
                    let sigma: Vec<Result<f64>> = (0..n)
                        .into_par_iter()
                        .map(|c| capacity_radius(self.basis, state.u_field[c].component(a), &norms[c]))
                        .collect();
                    let sigma = collect_cells(sigma)?;
                    let upper = (0..n)
                        .map(|c| match g.neighbor(c, a, 1) {
                            Some(r) => sigma[c].max(sigma[r]),
                            None => sigma[c],
                        })
                        .collect();
                    (upper, sigma)
                }
                Form::Conservative => {
                    let upper: Vec<Result<f64>> = (0..n)
                        .into_par_iter()
                        .map(|c| {
                            let v = &self.face_velocity[a][c][1];
                            let l = conservative_radius(self.basis, state.u_field[c].component(a), &norms[c], v)?;
                            match g.neighbor(c, a, 1) {
                                Some(r) => {
                                    let s = conservative_radius(self.basis, state.u_field[r].component(a), &norms[r], v)?;
                                    Ok(l.max(s))
                                }
                                None => Ok(l),
                            }
                        })
                        .collect();
                    let upper = collect_cells(upper)?;
                    let boundary: Vec<Result<f64>> = (0..n)
                        .into_par_iter()
                        .map(|c| {
                            if g.neighbor(c, a, -1).is_some() {
                                return Ok(0.0);
                            }
                            let v = &self.face_velocity[a][c][0];
                            conservative_radius(self.basis, state.u_field[c].component(a), &norms[c], v)
                        })
                        .collect();
                    (upper, collect_cells(boundary)?)
                }
            };
            alpha_upper.push(upper);
            alpha_boundary.push(boundary);
        }

        let mut max_rate = 0.0f64;
        let mut max_wavespeed = 0.0f64;
        for c in 0..n {
            let mut rate = 0.0;
            let mut speed = 0.0f64;
            for a in 0..g.dims {
                let lower = match g.neighbor(c, a, -1) {
                    Some(l) => alpha_upper[a][l],
                    None => alpha_boundary[a][c],
                };
                let s = lower.max(alpha_upper[a][c]);
                rate += s / g.spacing(a);
                speed = speed.max(s);
            }
            if state.form == Form::Capacity {
                rate *= self.cell_velocity_radius[c];
                speed *= self.cell_velocity_radius[c];
            }
            max_rate = max_rate.max(rate);
            max_wavespeed = max_wavespeed.max(speed);
        }
        let dt_max = if max_rate > 0.0 {
            state.cfl_number / max_rate
        } else {
            f64::INFINITY
        };
        Ok(Plan {
            norms,
            alpha_upper,
            dt_max,
            max_wavespeed,
        })
    }

    /// Largest time step allowed by the CFL condition of the state's form.
    pub fn max_stable_dt(&self, state: &SolverState) -> std::result::Result<f64, StepFailure> {
        self.plan(state)
            .map(|p| p.dt_max)
            .map_err(|e| failure(state, e))
    }

    /// Checks positivity, hyperbolicity and velocity invertibility without
    /// stepping.
    pub fn audit(&self, state: &SolverState) -> Audit {
        let mut audit = Audit::default();
        if state.form == Form::Capacity {
            audit.singular_velocity_cells = (0..self.grid.n_cells())
                .filter(|&c| self.cell_velocity_min_abs[c] <= crate::flux::VELOCITY_INVERTIBILITY_TOL)
                .collect();
        }
        match self.norm_field(state) {
            Ok(_) => {}
            Err((e, cells)) => {
                audit.positivity_failures = cells;
                audit.first_error = Some(e);
                return audit;
            }
        }
        match self.plan(state) {
            Ok(p) => audit.dt_max = Some(p.dt_max),
            Err((e, cells)) => {
                if matches!(e, Error::NonHyperbolic { .. }) {
                    audit.nonhyperbolic_cells = cells;
                }
                audit.first_error = Some(e);
            }
        }
        audit
    }

    /// One explicit Euler step with the largest CFL-stable time step.
    pub fn step(&self, state: &mut SolverState) -> std::result::Result<StepReport, StepFailure> {
        self.advance(state, None, None)
    }

    /// One step with a prescribed `dt`, refused if it violates the CFL bound.
    pub fn step_with_dt(&self, state: &mut SolverState, dt: f64) -> std::result::Result<StepReport, StepFailure> {
        self.advance(state, Some(dt), None)
    }

    fn advance(
        &self,
        state: &mut SolverState,
        dt: Option<f64>,
        t_end: Option<f64>,
    ) -> std::result::Result<StepReport, StepFailure> {
        assert_eq!(state.grid, self.grid, "state grid differs from the solver grid");
        let plan = self.plan(state).map_err(|e| failure(state, e))?;
        let fallback = state.cfl_number * self.grid.dx.min(if self.grid.dims == 2 { self.grid.dy } else { f64::INFINITY });
        let dt_max = if plan.dt_max.is_finite() { plan.dt_max } else { fallback };
        let dt = match dt {
            Some(dt) => {
                if !(dt > 0.0) {
                    let err = Error::InvalidArgument(format!("time step {dt} must be positive"));
                    return Err(failure(state, (err, Vec::new())));
                }
                if dt > plan.dt_max * (1.0 + 1e-12) {
                    let err = Error::CflViolation {
                        dt,
                        dt_max: plan.dt_max,
                    };
                    return Err(failure(state, (err, Vec::new())));
                }
                dt
            }
            None => match t_end {
                Some(t_end) => dt_max.min(t_end - state.t),
                None => dt_max,
            },
        };

        let new_u = self.update_gradients(state, &plan, dt);
        let new_phi = self.step_phi(&state.phi_field, &plan.norms, dt);
        state.u_field = new_u;
        state.phi_field = new_phi;
        state.t += dt;
        state.step_count += 1;
        Ok(StepReport {
            dt_used: dt,
            max_wavespeed: plan.max_wavespeed,
            positivity_failures: Vec::new(),
            halted: false,
        })
    }

    /// Numerical flux on the upper axis-`a` face of cell `c`, all blocks.
    fn face_flux(&self, state: &SolverState, plan: &Plan, a: usize, c: usize) -> Vec<GpcVector> {
        let g = &self.grid;
        let u = &state.u_field;
        let flux_of = |cell: usize, v: &GpcVector| -> GpcVector {
            match state.form {
                Form::Conservative => galerkin_product(self.basis, v, &plan.norms[cell]),
                Form::Capacity => plan.norms[cell].clone(),
            }
        };
        let v = &self.face_velocity[a][c][1];
        let Some(r) = g.neighbor(c, a, 1) else {
            let mut out = vec![GpcVector::zeros(self.basis.len()); g.dims];
            out[a] = flux_of(c, v);
            return out;
        };
        let alpha = plan.alpha_upper[a][c];
        let fl = flux_of(c, v);
        let fr = flux_of(r, v);
        (0..g.dims)
            .map(|b| {
                let jump = u[r].component(b) - u[c].component(b);
                let mut f = &jump * (-0.5 * alpha);
                if b == a {
                    f += &(&(&fl + &fr) * 0.5);
                }
                f
            })
            .collect()
    }

    /// Flux on the lower outflow-boundary face of cell `c`.
    fn boundary_flux(&self, state: &SolverState, plan: &Plan, a: usize, c: usize) -> Vec<GpcVector> {
        let mut out = vec![GpcVector::zeros(self.basis.len()); self.grid.dims];
        out[a] = match state.form {
            Form::Conservative => galerkin_product(self.basis, &self.face_velocity[a][c][0], &plan.norms[c]),
            Form::Capacity => plan.norms[c].clone(),
        };
        out
    }

    fn update_gradients(&self, state: &SolverState, plan: &Plan, dt: f64) -> Vec<GradState> {
        let g = &self.grid;
        let n = g.n_cells();
        let upper: Vec<Vec<Vec<GpcVector>>> = (0..g.dims)
            .map(|a| (0..n).into_par_iter().map(|c| self.face_flux(state, plan, a, c)).collect())
            .collect();
        (0..n)
            .into_par_iter()
            .map(|c| {
                let mut div = vec![GpcVector::zeros(self.basis.len()); g.dims];
                for a in 0..g.dims {
                    let boundary;
                    let lower = match g.neighbor(c, a, -1) {
                        Some(l) => &upper[a][l],
                        None => {
                            boundary = self.boundary_flux(state, plan, a, c);
                            &boundary
                        }
                    };
                    let inv = 1.0 / g.spacing(a);
                    for (b, d) in div.iter_mut().enumerate() {
                        *d += &(&(&upper[a][c][b] - &lower[b]) * inv);
                    }
                }
                let comps = (0..g.dims)
                    .map(|b| {
                        let rate = match state.form {
                            Form::Conservative => div[b].clone(),
                            Form::Capacity => {
                                let flux = GpcVector::from_dvector(&self.cell_velocity_operator[c] * div[b].coeffs());
                                let dv = &self.cell_velocity_gradient[c][b];
                                &flux + &galerkin_product(self.basis, dv, &plan.norms[c])
                            }
                        };
                        state.u_field[c].component(b) - &(&rate * dt)
                    })
                    .collect();
                GradState::from_components(comps)
            })
            .collect()
    }

    /// `φ̂_c ← φ̂_c − dt · v̂(x_c) ∗ ‖u_c‖̂`.
    pub fn step_phi(&self, phi: &[GpcVector], norms: &[GpcVector], dt: f64) -> Vec<GpcVector> {
        phi.par_iter()
            .zip(norms)
            .enumerate()
            .map(|(c, (p, nrm))| p - &(&galerkin_product(self.basis, &self.cell_velocity[c], nrm) * dt))
            .collect()
    }

    /// Steps until `t_end`, clipping the last step, with snapshots at the
    /// start, every `snapshot_every` steps (if nonzero) and at the end.
    pub fn run(&self, state: &mut SolverState, t_end: f64, snapshot_every: usize) -> Result<RunOutcome> {
        if !(t_end >= state.t) {
            return Err(Error::InvalidArgument(format!(
                "t_end {t_end} precedes the current time {}",
                state.t
            )));
        }
        let mut snapshots = vec![snapshot(state)];
        let mut steps = 0;
        let tol = 1e-14 * t_end.abs().max(1.0);
        while t_end - state.t > tol {
            match self.advance(state, None, Some(t_end)) {
                Ok(_) => {}
                Err(f) => {
                    return Ok(RunOutcome {
                        snapshots,
                        steps,
                        failure: Some(f),
                    })
                }
            }
            steps += 1;
            if t_end - state.t <= tol {
                state.t = t_end;
            }
            if snapshot_every > 0 && steps % snapshot_every == 0 {
                snapshots.push(snapshot(state));
            }
        }
        if snapshots.last().map(|s| s.step) != Some(state.step_count) {
            snapshots.push(snapshot(state));
        }
        Ok(RunOutcome {
            snapshots,
            steps,
            failure: None,
        })
    }

    /// Effective volumes `Δx / D_ℓ(v̂(x_j))` of the diagonalized 1D capacity
    /// system, one row per cell with eigenvalues in ascending order.
    pub fn effective_volumes(&self) -> Result<Vec<Vec<f64>>> {
        if self.grid.dims != 1 {
            return Err(Error::InvalidArgument("effective volumes are defined on 1D grids".into()));
        }
        self.cell_velocity
            .iter()
            .map(|v| {
                let (_, d) = diagonalize_velocity(self.basis, v);
                let min_abs = d.iter().fold(f64::INFINITY, |m, l| m.min(l.abs()));
                if min_abs <= crate::flux::VELOCITY_INVERTIBILITY_TOL {
                    return Err(Error::SingularVelocityOperator {
                        min_abs_eigenvalue: min_abs,
                    });
                }
                Ok(d.iter().map(|l| self.grid.dx / l).collect())
            })
            .collect()
    }
}

fn collect_cells<T>(results: Vec<Result<T>>) -> std::result::Result<Vec<T>, (Error, Vec<usize>)> {
    let mut first = None;
    let mut cells = Vec::new();
    let mut out = Vec::with_capacity(results.len());
    for (c, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => {
                cells.push(c);
                first.get_or_insert(e);
            }
        }
    }
    match first {
        None => Ok(out),
        Some(e) => Err((e, cells)),
    }
}

fn failure(state: &SolverState, (error, cells): (Error, Vec<usize>)) -> StepFailure {
    StepFailure {
        step: state.step_count,
        error,
        report: StepReport {
            dt_used: 0.0,
            max_wavespeed: 0.0,
            positivity_failures: cells,
            halted: true,
        },
    }
}

fn snapshot(state: &SolverState) -> Snapshot {
    Snapshot {
        t: state.t,
        step: state.step_count,
        phi_field: state.phi_field.clone(),
        u_field: state.u_field.clone(),
        gradient_consistency: gradient_consistency(state),
    }
}

/// `max |D_h φ̂ − û|` over cells, modes and axes, with central differences in
/// the interior and second-order one-sided differences at the domain edges.
pub fn gradient_consistency(state: &SolverState) -> f64 {
    let g = &state.grid;
    let phi = &state.phi_field;
    let mut worst = 0.0f64;
    for c in 0..g.n_cells() {
        let (i, j) = g.coords(c);
        for a in 0..g.dims {
            let h = g.spacing(a);
            let n = g.count(a);
            let pos = if a == 0 { i } else { j };
            let at = |p: usize| phi[if a == 0 { g.index(p, j) } else { g.index(i, p) }].coeffs();
            let d = if pos == 0 {
                (at(0) * -3.0 + at(1) * 4.0 - at(2)) / (2.0 * h)
            } else if pos == n - 1 {
                (at(n - 1) * 3.0 - at(n - 2) * 4.0 + at(n - 3)) / (2.0 * h)
            } else {
                (at(pos + 1) - at(pos - 1)) / (2.0 * h)
            };
            worst = worst.max((d - state.u_field[c].component(a).coeffs()).amax());
        }
    }
    worst
}
