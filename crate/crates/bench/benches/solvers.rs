use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use edm_bench::{anchor, canonical_spec, params};
use edm_core::build_grid;
use edm_core::choquard::solve_canonical_ground_state;
use edm_core::continuation::newton_correct;
use edm_core::edm_system::EdmSystem;
use edm_core::newton::NewtonOptions;
use edm_core::potentials::newtonian_potential;

fn ground_state(c: &mut Criterion) {
    let mut g = c.benchmark_group("choquard");
    for n in [500, 2000] {
        let grid = build_grid(canonical_spec(n)).unwrap();
        g.bench_with_input(BenchmarkId::new("solve", n), &grid, |b, grid| {
            b.iter(|| solve_canonical_ground_state(black_box(grid), 1e-10).unwrap())
        });
        let gs = solve_canonical_ground_state(&grid, 1e-10).unwrap();
        g.bench_with_input(BenchmarkId::new("potential", n), &gs.phi, |b, phi| {
            b.iter(|| newtonian_potential(black_box(phi)).unwrap())
        });
    }
    g.finish();
}

fn scaled_system(c: &mut Criterion) {
    let s = anchor(2000);
    let eps = 1e-3;
    let sys = EdmSystem::new(s.grid.clone(), params(), eps).unwrap();
    let state = s.with_eps(eps);
    let x = state.to_vector();
    let mut g = c.benchmark_group("edm_n2000");
    g.bench_function("residual", |b| {
        b.iter(|| sys.residual_vector(black_box(&x)).unwrap())
    });
    g.bench_function("jacobian", |b| {
        b.iter(|| sys.jacobian(black_box(&state)).unwrap())
    });
    let jac = sys.jacobian(&state).unwrap();
    g.bench_function("factor", |b| b.iter(|| jac.factor().unwrap()));
    g.sample_size(10);
    let opts = NewtonOptions {
        tol: 1e-10,
        ..NewtonOptions::default()
    };
    g.bench_function("corrector", |b| {
        b.iter(|| newton_correct(eps, black_box(&state), &params(), &opts).unwrap())
    });
    g.finish();
}

criterion_group!(benches, ground_state, scaled_system);
criterion_main!(benches);
