//! Parallel-vs-sequential comparison of the two workloads that fan out
//! over independent runs: parameter sweeps and refinement confirmation.
//! Build with `--no-default-features` to strip rayon entirely; with the
//! default `parallel` feature both backends are benched side by side.

use criterion::{criterion_group, criterion_main, Criterion};
use ksblow_core::config::SimulationConfig;
use ksblow_core::grid::RadialMesh;
use ksblow_core::initdata::InitialDataSpec;
use ksblow_core::nonlinearity::NonlinearityModel;
use ksblow_core::solver::{confirm_blowup, Scenario, SolverConfig};
use ksblow_core::sweep::{expand_cells, run_cells_sequential, SweepSpec};
use std::hint::black_box;

const SWEEP: &str = r#"
[template]
model = "semilinear"

[template.mesh]
r = 1.0
n = 48

[template.solver]
t_end = 0.004
dt_max = 1e-3

[template.initial_data]
profile = "rational4"
m = 1.0
eta = 0.2
v_mode = "elliptic"

[template.diagnostics]
every_steps = 200

[axes]
m = [0.5, 1.0, 2.0, 4.0]
eta = [0.15, 0.25]
"#;

fn sweep_cells() -> Vec<(ksblow_core::sweep::CellOverrides, SimulationConfig)> {
    let spec = SweepSpec::from_toml(SWEEP).unwrap();
    expand_cells(&spec).unwrap()
}

fn bench_sweep(c: &mut Criterion) {
    let cells = sweep_cells();
    let mut group = c.benchmark_group("sweep_8_cells");
    group.sample_size(10);
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(run_cells_sequential(black_box(&cells))))
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| {
            black_box(ksblow_core::sweep::run_cells_parallel(
                black_box(&cells),
                None,
            ))
        })
    });
    group.finish();
}

fn blowup_scenario() -> Scenario {
    Scenario {
        model: NonlinearityModel::power_diffusion(-1.0).unwrap(),
        mesh: RadialMesh::new(0.04, 48).unwrap(),
        initial: InitialDataSpec {
            m: 1.0,
            eta: 0.004,
            ..Default::default()
        },
        solver: SolverConfig {
            t_end: 1.0,
            u_blowup_threshold: 2e5,
            record_every_steps: 0,
            ..Default::default()
        },
    }
}

fn bench_refinements(c: &mut Criterion) {
    let scenario = blowup_scenario();
    let mut group = c.benchmark_group("confirm_blowup_3_levels");
    group.sample_size(10);
    // confirm_blowup itself dispatches on the feature; bench the
    // sequential baseline by running the levels one at a time.
    group.bench_function("sequential", |b| {
        b.iter(|| {
            for j in 0..3usize {
                let mesh =
                    RadialMesh::new(scenario.mesh.r_outer(), scenario.mesh.n() << j).unwrap();
                black_box(scenario.run_on(mesh).unwrap());
            }
        })
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(confirm_blowup(black_box(&scenario), 3).unwrap()))
    });
    #[cfg(not(feature = "parallel"))]
    group.bench_function("confirm_sequential_dispatch", |b| {
        b.iter(|| black_box(confirm_blowup(black_box(&scenario), 3).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_refinements);
criterion_main!(benches);
