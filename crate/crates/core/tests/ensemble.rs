//! Intrusive runs against sampled ensembles, and the solve/snapshot/band pipeline.

use std::f64::consts::PI;

use sgls_core::io::{read_snapshot, write_snapshot, ByteOrder, FieldSnapshot};
use sgls_core::oracle::{ensemble, EnsembleMode};
use sgls_core::quantile::{CdfEvaluator, Surrogate, DEFAULT_N_CDF};
use sgls_core::solver::{Boundary, Form, Grid, InitialCondition, Solver, VelocitySpec};
use sgls_core::GpcBasis;

fn wave() -> InitialCondition {
    InitialCondition::Wave {
        slope: [1.0, 0.0],
        amplitude: 0.5 / PI,
        wavenumber: [PI, 0.0],
        offset: 0.0,
    }
}

fn periodic_line(n: usize) -> Grid {
    Grid::covering(1, [n, 1], [-1.0, 0.0], [1.0, 0.0], Boundary::Periodic).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn collocation_mean_within_monte_carlo_error() {
    let basis = GpcBasis::new(1, 1).unwrap();
    let spec = VelocitySpec::uniform(&[1.0, 0.1]);
    let grid = periodic_line(64);
    let t_end = 0.3;
    let col = ensemble(&basis, &grid, &wave(), &spec, t_end, 0.45, EnsembleMode::Collocation { nodes_per_dim: 8 }).unwrap();
    let mc = ensemble(
        &basis,
        &grid,
        &wave(),
        &spec,
        t_end,
        0.45,
        EnsembleMode::MonteCarlo { samples: 10_000, seed: 7 },
    )
    .unwrap();
    let se = mc.standard_error().unwrap();
    assert!(col.standard_error().is_none());
    let worst = col
        .mean
        .iter()
        .zip(&mc.mean)
        .zip(&se)
        .map(|((a, b), s)| (a - b).abs() / s.max(1e-12))
        .fold(0.0, f64::max);
    assert!(worst < 3.0, "collocation vs MC: {worst:.2} standard errors");
}

/// Mean of the intrusive solution against the collocation mean on the same grid.
fn intrusive_gap(n: usize) -> f64 {
    let basis = GpcBasis::new(1, 4).unwrap();
    let spec = VelocitySpec::uniform(&[1.0, 0.1, 0.0, 0.0, 0.0]);
    let grid = periodic_line(n);
    let solver = Solver::new(&basis, &spec, grid.clone()).unwrap();
    let mut state = solver.init_deterministic(&wave(), Form::Conservative, 0.45).unwrap();
    let out = solver.run(&mut state, 0.3, 0).unwrap();
    assert!(out.failure.is_none());
    let mean: Vec<f64> = state.phi_field.iter().map(|p| p[0]).collect();
    let col = ensemble(&basis, &grid, &wave(), &spec, 0.3, 0.45, EnsembleMode::Collocation { nodes_per_dim: 8 }).unwrap();
    max_abs_diff(&mean, &col.mean)
}

#[test]
fn intrusive_mean_approaches_sampled_mean_under_refinement() {
    let gaps: Vec<f64> = [32, 64, 128].into_iter().map(intrusive_gap).collect();
    for w in gaps.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!(rate > 0.7, "gaps {gaps:?}, observed rate {rate:.2}");
    }
}

#[test]
fn band_survives_snapshot_round_trip() {
    let basis = GpcBasis::new(1, 2).unwrap();
    let spec = VelocitySpec::uniform(&[1.0, 0.2, 0.0]);
    let grid = periodic_line(48);
    let solver = Solver::new(&basis, &spec, grid).unwrap();
    let mut state = solver.init_deterministic(&wave(), Form::Capacity, 0.45).unwrap();
    solver.run(&mut state, 0.2, 0).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snap.bin");
    let snap = FieldSnapshot::from_state(&state);
    write_snapshot(&path, &snap).unwrap();
    let back = read_snapshot(&path).unwrap();
    assert_eq!(back, snap);
    let big = FieldSnapshot::from_bytes(&snap.to_bytes(ByteOrder::Big).unwrap()).unwrap();
    assert_eq!(big, snap);

    let eval = CdfEvaluator::new(&basis, Surrogate::Pointwise, DEFAULT_N_CDF).unwrap();
    let direct = eval.perturbed_level_set(&state.phi_field, 0.1, 0.5, state.t).unwrap();
    let loaded = eval.perturbed_level_set(&back.phi_field(), 0.1, 0.5, back.t).unwrap();
    assert_eq!(direct, loaded);
    assert!(direct.count() > 0);
}
