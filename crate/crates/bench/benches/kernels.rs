use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use corrosim_bench::bench_scene;
use corrosim_core::{
    advect, gp_fit_auto, normal_velocity, reinitialize, solve, step_transport, volume_positive,
    ScalarField, SolverOptions, SparseMatrix, Unit, VelocityField,
};

fn bench_transport(c: &mut Criterion) {
    let (_, phi, state, params) = bench_scene();
    let opts = SolverOptions::default();
    c.bench_function("step_transport_33cubed", |b| {
        b.iter(|| step_transport(black_box(&state), &phi, &params, 0.025, &opts).unwrap())
    });
}

fn bench_interface(c: &mut Criterion) {
    let (grid, phi, state, params) = bench_scene();
    c.bench_function("normal_velocity_33cubed", |b| {
        b.iter(|| normal_velocity(&state.c_mg, &state.c_film, black_box(&phi), &params, 3, 0.025).unwrap())
    });
    let vel = VelocityField::from_field(ScalarField::constant(grid, Unit::Velocity, 0.01));
    c.bench_function("advect_33cubed", |b| {
        b.iter(|| advect(black_box(&phi), &vel, 0.025).unwrap())
    });
    // warp the field so the sweep cannot short-circuit
    let warped = corrosim_core::LevelSetField::from_field(
        ScalarField::from_values(
            grid,
            Unit::Length,
            phi.values().iter().map(|v| v * 1.7).collect(),
        )
        .unwrap(),
    )
    .unwrap();
    c.bench_function("reinitialize_33cubed", |b| {
        b.iter(|| reinitialize(black_box(&warped)).unwrap())
    });
    c.bench_function("volume_positive_33cubed", |b| {
        b.iter(|| volume_positive(black_box(&phi)))
    });
}

fn bench_solver(c: &mut Criterion) {
    // 3D Poisson-like stencil on a 24³ grid
    let n1 = 24usize;
    let n = n1 * n1 * n1;
    let idx = |i: usize, j: usize, k: usize| (k * n1 + j) * n1 + i;
    let mut rows = vec![Vec::new(); n];
    for k in 0..n1 {
        for j in 0..n1 {
            for i in 0..n1 {
                let r = idx(i, j, k);
                let mut neighbors = Vec::new();
                if k > 0 {
                    neighbors.push(idx(i, j, k - 1));
                }
                if j > 0 {
                    neighbors.push(idx(i, j - 1, k));
                }
                if i > 0 {
                    neighbors.push(idx(i - 1, j, k));
                }
                if i + 1 < n1 {
                    neighbors.push(idx(i + 1, j, k));
                }
                if j + 1 < n1 {
                    neighbors.push(idx(i, j + 1, k));
                }
                if k + 1 < n1 {
                    neighbors.push(idx(i, j, k + 1));
                }
                let diag = 1.0 + 0.5 * neighbors.len() as f64;
                let mut entries: Vec<(usize, f64)> =
                    neighbors.into_iter().map(|c| (c, -0.5)).collect();
                entries.push((r, diag));
                entries.sort_by_key(|e| e.0);
                rows[r] = entries;
            }
        }
    }
    let a = SparseMatrix::from_rows(rows).unwrap();
    let b: Vec<f64> = (0..n).map(|i| ((i % 17) as f64 - 8.0) * 1e-6).collect();
    c.bench_function("cg_solve_24cubed", |bch| {
        bch.iter(|| solve(black_box(&a), &b, 1e-9, 10_000).unwrap())
    });
}

fn bench_gp(c: &mut Criterion) {
    let xs: Vec<Vec<f64>> = (0..24).map(|i| vec![(i as f64 + 0.5) / 24.0]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| (x[0] - 0.3) * (x[0] - 0.3)).collect();
    c.bench_function("gp_fit_auto_24pts", |b| {
        b.iter(|| gp_fit_auto(black_box(&xs), &ys).unwrap())
    });
}

fn config() -> Criterion {
    Criterion::default().sample_size(10)
}

criterion_group! {
    name = benches;
    config = config();
    targets = bench_transport, bench_interface, bench_solver, bench_gp
}
criterion_main!(benches);
