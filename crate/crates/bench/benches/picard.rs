use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use gbbmb_bench::two_edge_network;
use gbbmb_core::{picard_solve, JunctionCondition, QuadratureGrid, SolitaryWaveParams};

fn bench_picard(c: &mut Criterion) {
    let net = two_edge_network(1.0, (0.0, 0.0), JunctionCondition::MassConservation);
    let mut group = c.benchmark_group("picard_solve");
    group.sample_size(10);
    for y_step in [0.1, 0.05] {
        let q = QuadratureGrid::for_network(&net, y_step, 0.0125, 20.0).unwrap();
        // Small solitary wave just upstream of the junction, sampled in
        // local coordinates (edge 0 runs away from the junction).
        let wave = SolitaryWaveParams::new(1.05, -5.0, net.edge(0), net.p()).unwrap();
        let phi: Vec<Vec<f64>> = (0..net.num_edges())
            .map(|i| {
                let sign = if i == 0 { -1.0 } else { 1.0 };
                (0..q.nodes()).map(|j| wave.profile(sign * q.y(j), 0.0)).collect()
            })
            .collect();
        group.bench_function(format!("c1.05_t0.25_y_step{y_step}"), |b| {
            b.iter(|| picard_solve(black_box(&net), black_box(&phi), 0.25, &q, 1e-10, 50).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_picard);
criterion_main!(benches);
