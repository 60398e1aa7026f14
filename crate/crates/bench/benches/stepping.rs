use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use gbbmb_bench::{solitary_start, two_edge_network, y_network};
use gbbmb_core::{assemble_system, run, Bootstrap, GridSpec, JunctionCondition, SteppingWorkspace};

fn reference_grid(horizon: f64) -> GridSpec {
    GridSpec::new(0.025, 0.025, horizon).unwrap()
}

fn bench_assemble(c: &mut Criterion) {
    let net = two_edge_network(1.5, (0.0, 0.0), JunctionCondition::MassConservation);
    let grid = reference_grid(40.0);
    c.bench_function("assemble_system/two_edge_8001_nodes", |b| {
        b.iter(|| assemble_system(black_box(&net), black_box(&grid)).unwrap())
    });
}

fn bench_step(c: &mut Criterion) {
    let grid = reference_grid(40.0);
    let mut group = c.benchmark_group("leapfrog_step");
    for (name, net) in [
        (
            "two_edge",
            two_edge_network(1.5, (0.0, 0.0), JunctionCondition::MassConservation),
        ),
        (
            "two_edge_viscous",
            two_edge_network(1.5, (1.0, 0.1), JunctionCondition::MassConservation),
        ),
        ("y_network", y_network(1.2)),
    ] {
        let (_, start) = solitary_start(&net, &grid, 5.0, 60.0);
        let ws = SteppingWorkspace::new(&net, &grid, start, &Bootstrap::SemiImplicit).unwrap();
        group.bench_function(name, |b| {
            b.iter_batched_ref(
                || ws.clone(),
                |ws| {
                    ws.step().unwrap();
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn bench_run(c: &mut Criterion) {
    let net = two_edge_network(1.1, (0.0, 0.0), JunctionCondition::MassConservation);
    let grid = reference_grid(1.0);
    let (wave, start) = solitary_start(&net, &grid, 2.0, 60.0);
    let mut group = c.benchmark_group("run");
    group.sample_size(20);
    group.bench_function("c2_one_time_unit", |b| {
        b.iter(|| {
            run(
                &net,
                &grid,
                &start,
                &Bootstrap::ExactTranslate(wave),
                usize::MAX,
                |_| {},
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_assemble, bench_step, bench_run);
criterion_main!(benches);
