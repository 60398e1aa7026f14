//! Shared fixtures for the benchmarks under benches/.

use gbbmb_core::{EdgeSpec, GridSpec, JunctionCondition, NetworkState, SolitaryPlacement, StarNetwork};

/// The reference two-edge setup: α=γ=1, p=1, edges of length 100, incoming
/// edge μ=1, ν=ν₁; outgoing edge μ=μ₂, ν=ν₂.
pub fn two_edge_network(mu2: f64, nu: (f64, f64), junction: JunctionCondition) -> StarNetwork {
    StarNetwork::two_edge(
        EdgeSpec::incoming(1.0, 1.0, 1.0, nu.0, 100.0),
        EdgeSpec::outgoing(mu2, 1.0, 1.0, nu.1, 100.0),
        1,
        junction,
    )
    .expect("valid two-edge network")
}

/// A symmetric three-edge star with the same per-edge coefficients.
pub fn y_network(mu: f64) -> StarNetwork {
    StarNetwork::new(
        vec![
            EdgeSpec::incoming(1.0, 1.0, 1.0, 0.0, 100.0),
            EdgeSpec::outgoing(mu, 1.0, 1.0, 0.0, 100.0),
            EdgeSpec::outgoing(mu, 1.0, 1.0, 0.0, 100.0),
        ],
        1,
        JunctionCondition::MassConservation,
    )
    .expect("valid Y network")
}

/// A solitary wave of speed `c` at path coordinate `x0` on the incoming edge.
pub fn solitary_start(network: &StarNetwork, grid: &GridSpec, c: f64, x0: f64) -> (SolitaryPlacement, NetworkState) {
    let wave = SolitaryPlacement::new(network, 0, c, x0).expect("valid solitary wave");
    let state = wave.state(network, grid, 0.0).expect("state fits the grid");
    (wave, state)
}
