//! The same workloads on rayon and inside `par::sequential_scope`.
//!
//! Build with `--no-default-features` to compile the fallback alone; both
//! arms then measure the sequential path.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use verifier_core::bogoliubov::{mode_sum_lower_bound, QuadraticModeSystem};
use verifier_core::eigen::EigenOptions;
use verifier_core::graph::{cheeger_constant, GridGraph};
use verifier_core::par;
use verifier_core::scattering::{cutoff_pair, solve_scattering, PotentialSpec};
use verifier_core::symmetrization::{boundary_effect, identity_full_check, BoundaryOptions, SymmetrizedKernel};

fn well() -> PotentialSpec {
    PotentialSpec::SquareWell {
        amplitude: 2.0,
        range: 0.5,
    }
}

fn both<F: Fn()>(c: &mut Criterion, group: &str, work: F) {
    let mut g = c.benchmark_group(group);
    g.sample_size(10);
    g.bench_function(BenchmarkId::new("rayon", par::is_parallel()), |b| b.iter(&work));
    g.bench_function(BenchmarkId::new("sequential", false), |b| {
        b.iter(|| par::sequential_scope(&work))
    });
    g.finish();
}

fn identity(c: &mut Criterion) {
    let sol = solve_scattering(&well(), 1.0, 4096).unwrap();
    let kernel = SymmetrizedKernel::from_pair(&cutoff_pair(&sol, 16.0, 0.5).unwrap(), 2).unwrap();
    both(c, "identity_d2_order64", || {
        black_box(identity_full_check(&kernel, 3, 64).unwrap());
    });
}

fn boundary(c: &mut Criterion) {
    let v = well();
    let opts = BoundaryOptions::default();
    both(c, "boundary_effect_l8", || {
        black_box(boundary_effect(8.0, 8.0, 0.25, &v, &opts).unwrap());
    });
}

fn cheeger(c: &mut Criterion) {
    let g = GridGraph::new(18, 1).unwrap();
    let opts = EigenOptions::default();
    both(c, "cheeger_exhaustive_m18", || {
        black_box(cheeger_constant(&g, &opts).unwrap());
    });
}

fn mode_sum(c: &mut Criterion) {
    let sol = solve_scattering(&well(), 1.0, 4096).unwrap();
    let sys = QuadraticModeSystem::new(&sol, 8.0, 32.0, std::f64::consts::FRAC_PI_2, 128).unwrap();
    both(c, "mode_sum_cutoff128", || {
        black_box(mode_sum_lower_bound(&sys).unwrap());
    });
}

criterion_group!(benches, identity, boundary, cheeger, mode_sum);
criterion_main!(benches);
