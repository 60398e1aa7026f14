//! Mass, energy and reflection diagnostics for network states.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fd::{GridSpec, NetworkState};
use crate::network::StarNetwork;
use crate::waves::anti_solitary_depth;

fn trapezoid(values: impl ExactSizeIterator<Item = f64>, dx: f64) -> f64 {
    let n = values.len();
    let mut sum = 0.0;
    for (k, v) in values.enumerate() {
        let w = if k == 0 || k + 1 == n { 0.5 } else { 1.0 };
        sum += w * v;
    }
    sum * dx
}

/// `M = Σᵢ ∫ uᵢ dx` by the composite trapezoid rule on each edge.
pub fn mass(state: &NetworkState, grid: &GridSpec) -> f64 {
    (0..state.num_edges())
        .map(|i| trapezoid(state.edge_samples(i).into_iter(), grid.dx))
        .sum()
}

/// `∂ₛuᵢ` on edge `i`: centred inside, one-sided at the junction and boundary.
pub fn edge_derivative(state: &NetworkState, edge: usize, dx: f64) -> Vec<f64> {
    let u = state.edge_samples(edge);
    let m = u.len() - 1;
    (0..=m)
        .map(|k| match k {
            0 => (u[1] - u[0]) / dx,
            k if k == m => (u[m] - u[m - 1]) / dx,
            k => (u[k + 1] - u[k - 1]) / (2.0 * dx),
        })
        .collect()
}

fn gradient_norms(state: &NetworkState, grid: &GridSpec) -> Vec<f64> {
    (0..state.num_edges())
        .map(|i| {
            let d = edge_derivative(state, i, grid.dx);
            trapezoid(d.iter().map(|v| v * v), grid.dx)
        })
        .collect()
}

/// `E = ½ Σᵢ ∫ (uᵢ² + μᵢ² uᵢ,ₓ²) dx`.
pub fn energy(state: &NetworkState, network: &StarNetwork, grid: &GridSpec) -> f64 {
    let grads = gradient_norms(state, grid);
    0.5 * network
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let u = state.edge_samples(i);
            trapezoid(u.iter().map(|v| v * v), grid.dx) + e.mu * e.mu * grads[i]
        })
        .sum::<f64>()
}

/// Right-hand side of the energy identity
/// `dE/dt = -h² Σᵢ σᵢ (αᵢ/2 + γᵢ hᵖ/((p+1)(p+2))) - Σᵢ νᵢ ∫ uᵢ,ₓ²`.
pub fn energy_rate_rhs(state: &NetworkState, network: &StarNetwork, grid: &GridSpec) -> f64 {
    let h = state.junction();
    let pf = network.p() as f64;
    let hp = h.powi(network.p() as i32);
    let bracket: f64 = network
        .edges()
        .iter()
        .map(|e| e.sigma() * (0.5 * e.alpha + e.gamma * hp / ((pf + 1.0) * (pf + 2.0))))
        .sum();
    let grads = gradient_norms(state, grid);
    let dissipation: f64 = network.edges().iter().zip(&grads).map(|(e, g)| e.nu * g).sum();
    -h * h * bracket - dissipation
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub time: f64,
    pub mass: f64,
    /// `100 |M(t) - M(0)| / M(0)`; absolute drift when `M(0) = 0`.
    pub delta_mass_percent: f64,
    pub energy: f64,
    pub energy_rate_formula: f64,
    pub junction_value: f64,
    /// Largest `|u|` at the last interior node of any edge, i.e. next to the
    /// truncation boundary.
    pub boundary_value: f64,
}

pub const CSV_HEADER: [&str; 7] = [
    "time",
    "mass",
    "delta_mass_percent",
    "energy",
    "energy_rate_formula",
    "junction_value",
    "boundary_value",
];

/// Accumulates one record per observed snapshot.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecorder {
    network: StarNetwork,
    grid: GridSpec,
    initial_mass: Option<f64>,
    records: Vec<DiagnosticsRecord>,
}

impl DiagnosticsRecorder {
    pub fn new(network: &StarNetwork, grid: &GridSpec) -> Self {
        Self {
            network: network.clone(),
            grid: *grid,
            initial_mass: None,
            records: Vec::new(),
        }
    }

    pub fn observe(&mut self, state: &NetworkState) -> DiagnosticsRecord {
        let m = mass(state, &self.grid);
        let m0 = *self.initial_mass.get_or_insert(m);
        let record = DiagnosticsRecord {
            time: state.time,
            mass: m,
            delta_mass_percent: delta_mass(m0, m),
            energy: energy(state, &self.network, &self.grid),
            energy_rate_formula: energy_rate_rhs(state, &self.network, &self.grid),
            junction_value: state.junction(),
            boundary_value: boundary_value(state),
        };
        self.records.push(record);
        record
    }

    pub fn records(&self) -> &[DiagnosticsRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<DiagnosticsRecord> {
        self.records
    }
}

fn boundary_value(state: &NetworkState) -> f64 {
    (0..state.num_edges())
        .map(|i| state.value(i, state.intervals(i) - 1).abs())
        .fold(0.0, f64::max)
}

/// Time of the first record whose `boundary_value` exceeds `level`: from then
/// on the truncation boundary is interacting with the solution.
pub fn boundary_contact_time(records: &[DiagnosticsRecord], level: f64) -> Option<f64> {
    records.iter().find(|r| r.boundary_value > level).map(|r| r.time)
}

fn delta_mass(m0: f64, m: f64) -> f64 {
    if m0 == 0.0 {
        (m - m0).abs()
    } else {
        100.0 * (m - m0).abs() / m0
    }
}

/// `δM(t)` over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMassSeries {
    pub points: Vec<(f64, f64)>,
    /// `false` when `M(0) = 0`: the values are then absolute drifts `|M(t) - M(0)|`.
    pub relative: bool,
}

impl DeltaMassSeries {
    pub fn max(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    /// Time at which `δM` peaks (first occurrence).
    pub fn argmax_time(&self) -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for &(t, v) in &self.points {
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((t, v));
            }
        }
        best.map(|b| b.0)
    }

    /// The points with `time <= t_end`.
    pub fn until(&self, t_end: f64) -> Self {
        Self {
            points: self.points.iter().copied().filter(|p| p.0 <= t_end).collect(),
            relative: self.relative,
        }
    }
}

pub fn delta_mass_series(records: &[DiagnosticsRecord]) -> DeltaMassSeries {
    let m0 = records.first().map(|r| r.mass).unwrap_or(0.0);
    DeltaMassSeries {
        points: records.iter().map(|r| (r.time, delta_mass(m0, r.mass))).collect(),
        relative: m0 != 0.0,
    }
}

/// Central-difference `dE/dt` at interior records.
pub fn energy_rate_numerical(records: &[DiagnosticsRecord]) -> Vec<(f64, f64)> {
    records
        .windows(3)
        .map(|w| (w[1].time, (w[2].energy - w[0].energy) / (w[2].time - w[0].time)))
        .collect()
}

/// Thresholds for calling a negative excursion on the incoming edge a
/// reflected wave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionCriterion {
    /// Fraction of the incident amplitude the excursion must reach.
    pub threshold: f64,
    /// Consecutive post-crossing snapshots that must show it.
    pub min_consecutive: usize,
    /// Absolute depth floor; the effective level is the larger of this and
    /// `threshold · amplitude`.
    pub min_depth: f64,
}

impl Default for ReflectionCriterion {
    fn default() -> Self {
        Self {
            threshold: 0.02,
            min_consecutive: 5,
            min_depth: 0.0,
        }
    }
}

impl ReflectionCriterion {
    /// Default thresholds with the depth floor set to the shallowest
    /// anti-solitary wave the incoming edge supports.
    pub fn for_network(network: &StarNetwork, incoming_edge: usize) -> Result<Self> {
        if incoming_edge >= network.num_edges() {
            return Err(Error::InvalidNetwork(format!("no edge {incoming_edge}")));
        }
        Ok(Self {
            min_depth: anti_solitary_depth(network.edge(incoming_edge), network.p()),
            ..Self::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionVerdict {
    pub reflected: bool,
    /// Most negative incoming-edge value after the crossing.
    pub min_excursion: f64,
    /// Distance from the junction where `min_excursion` occurred.
    pub location: f64,
    pub incident_amplitude: f64,
    /// Snapshot time at which the junction value peaked.
    pub crossing_time: f64,
}

/// Looks for an anti-solitary wave travelling back into the incoming edge.
///
/// The incident amplitude is the maximum of the first snapshot; the crossing
/// is the snapshot where the junction value peaks. After it, each snapshot's
/// deepest incoming-edge trough is tracked. A snapshot counts when that trough
/// reaches `-max(threshold · amplitude, min_depth)` and lies farther from the junction than the
/// previous snapshot's trough, so dips that stay bound to the junction never
/// qualify. A reflection needs `min_consecutive` counting snapshots in a row.
pub fn detect_reflection(
    history: &[NetworkState],
    incoming_edge: usize,
    criterion: ReflectionCriterion,
    dx: f64,
) -> Result<ReflectionVerdict> {
    let first = history.first().ok_or(Error::EmptyHistory)?;
    let amplitude = first.global_samples().into_iter().fold(f64::MIN, f64::max);
    let (cross_idx, _) = history.iter().enumerate().fold((0, f64::MIN), |best, (i, s)| {
        if s.junction() > best.1 {
            (i, s.junction())
        } else {
            best
        }
    });
    let limit = -(criterion.threshold * amplitude).max(criterion.min_depth);
    let mut min_excursion = 0.0;
    let mut location = 0.0;
    let mut previous_trough: Option<usize> = None;
    let mut run = 0usize;
    let mut longest = 0usize;
    for s in &history[cross_idx + 1..] {
        let (mut trough, mut at) = (f64::INFINITY, 0usize);
        for k in 1..=s.intervals(incoming_edge) {
            let v = s.value(incoming_edge, k);
            if v < trough {
                trough = v;
                at = k;
            }
        }
        if trough < min_excursion {
            min_excursion = trough;
            location = at as f64 * dx;
        }
        let receding = previous_trough.is_some_and(|p| at > p);
        if trough <= limit && receding {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
        previous_trough = Some(at);
    }
    Ok(ReflectionVerdict {
        reflected: amplitude > 0.0 && longest >= criterion.min_consecutive,
        min_excursion,
        location,
        incident_amplitude: amplitude,
        crossing_time: history[cross_idx].time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{EdgeSpec, JunctionCondition};
    use approx::assert_relative_eq;

    fn network(nu: (f64, f64), alpha: (f64, f64)) -> StarNetwork {
        StarNetwork::two_edge(
            EdgeSpec::incoming(1.0, alpha.0, 1.0, nu.0, 10.0),
            EdgeSpec::outgoing(1.2, alpha.1, 1.0, nu.1, 10.0),
            1,
            JunctionCondition::MassConservation,
        )
        .unwrap()
    }

    fn bump(grid: &GridSpec, net: &StarNetwork) -> NetworkState {
        let m = grid.intervals(net).unwrap();
        NetworkState::from_fn(&m, grid.dx, |i, s| {
            let x = if i == 0 { -s } else { s };
            (-(x - 0.5) * (x - 0.5)).exp()
        })
    }

    #[test]
    fn zero_state_has_zero_diagnostics() {
        let net = network((0.3, 0.1), (1.0, 1.0));
        let grid = GridSpec::new(0.1, 0.1, 1.0).unwrap();
        let z = NetworkState::zeros(&grid.intervals(&net).unwrap());
        assert_eq!(mass(&z, &grid), 0.0);
        assert_eq!(energy(&z, &net, &grid), 0.0);
        assert_eq!(energy_rate_rhs(&z, &net, &grid), 0.0);
    }

    #[test]
    fn mass_is_linear_and_energy_quadratic() {
        let net = network((0.0, 0.0), (1.0, 1.0));
        let grid = GridSpec::new(0.05, 0.05, 1.0).unwrap();
        let s = bump(&grid, &net);
        let scaled = s.combine(2.5, &s, 0.0);
        assert_relative_eq!(mass(&scaled, &grid), 2.5 * mass(&s, &grid), max_relative = 1e-14);
        assert_relative_eq!(
            energy(&scaled, &net, &grid),
            6.25 * energy(&s, &net, &grid),
            max_relative = 1e-14
        );
        // ∫ e^{-(x-½)²} over ℝ is √π
        assert_relative_eq!(mass(&s, &grid), std::f64::consts::PI.sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn rate_with_cancelling_junction_flux_and_no_viscosity_is_zero() {
        let net = network((0.0, 0.0), (1.0, 1.0));
        let grid = GridSpec::new(0.05, 0.05, 1.0).unwrap();
        assert_eq!(energy_rate_rhs(&bump(&grid, &net), &net, &grid), 0.0);
    }

    #[test]
    fn rate_with_zero_junction_value_is_pure_dissipation() {
        let net = network((0.7, 0.2), (1.0, 2.0));
        let grid = GridSpec::new(0.05, 0.05, 1.0).unwrap();
        let m = grid.intervals(&net).unwrap();
        let s = NetworkState::from_fn(&m, grid.dx, |_, s| s * (-(s - 3.0) * (s - 3.0)).exp());
        let rate = energy_rate_rhs(&s, &net, &grid);
        let g0 = edge_derivative(&s, 0, grid.dx);
        let g1 = edge_derivative(&s, 1, grid.dx);
        let expect =
            -(0.7 * trapezoid(g0.iter().map(|v| v * v), grid.dx) + 0.2 * trapezoid(g1.iter().map(|v| v * v), grid.dx));
        assert!(rate < 0.0);
        assert_relative_eq!(rate, expect, max_relative = 1e-14);
    }

    #[test]
    fn y_network_junction_bracket() {
        let net = StarNetwork::new(
            vec![
                EdgeSpec::incoming(1.0, 1.0, 1.0, 0.0, 1.0),
                EdgeSpec::outgoing(1.0, 1.0, 1.0, 0.0, 1.0),
                EdgeSpec::outgoing(1.0, 1.0, 1.0, 0.0, 1.0),
            ],
            2,
            JunctionCondition::MassConservation,
        )
        .unwrap();
        let grid = GridSpec::new(0.25, 0.1, 1.0).unwrap();
        let s = NetworkState::from_fn(&grid.intervals(&net).unwrap(), grid.dx, |_, s| 1.0 - s);
        // the ν = 0 network has no dissipation; σ-sum = +1 gives ½ + 1/12
        assert_relative_eq!(energy_rate_rhs(&s, &net, &grid), -7.0 / 12.0, max_relative = 1e-14);
    }

    #[test]
    fn delta_mass_of_constant_series_is_zero() {
        let rec = |t: f64, m: f64| DiagnosticsRecord {
            time: t,
            mass: m,
            delta_mass_percent: 0.0,
            energy: 1.0,
            energy_rate_formula: 0.0,
            junction_value: 0.0,
            boundary_value: t,
        };
        let flat: Vec<_> = (0..5).map(|k| rec(k as f64, 2.0)).collect();
        let s = delta_mass_series(&flat);
        assert!(s.relative);
        assert!(s.points.iter().all(|p| p.1 == 0.0));

        let varying = vec![rec(0.0, 2.0), rec(1.0, 2.02), rec(2.0, 1.99)];
        let s = delta_mass_series(&varying);
        assert_relative_eq!(s.max(), 1.0, max_relative = 1e-12);
        assert_eq!(s.argmax_time(), Some(1.0));

        let zero = vec![rec(0.0, 0.0), rec(1.0, 0.5)];
        let s = delta_mass_series(&zero);
        assert!(!s.relative);
        assert_eq!(s.max(), 0.5);

        // boundary_value grows with time in these records
        assert_eq!(boundary_contact_time(&flat, 2.5), Some(3.0));
        assert_eq!(boundary_contact_time(&flat, 10.0), None);
        let early = delta_mass_series(&varying).until(0.5);
        assert_eq!(early.max(), 0.0);
    }

    fn synthetic_history(dip: f64, snapshots: usize) -> Vec<NetworkState> {
        let m = [20usize, 20];
        let mut out = vec![];
        // pulse approaching the junction, crossing at snapshot 2
        for (t, h) in [(0.0, 0.0), (1.0, 0.5), (2.0, 1.0)] {
            let mut s = NetworkState::from_fn(&m, 1.0, |i, s| {
                if i == 0 && s == 5.0 {
                    1.0
                } else if s == 0.0 {
                    h
                } else {
                    0.0
                }
            });
            s.time = t;
            out.push(s);
        }
        for n in 0..snapshots {
            let at = (3 + n) as f64;
            let mut s = NetworkState::from_fn(&m, 1.0, |i, s| if i == 0 && s == at { dip } else { 0.0 });
            s.time = 3.0 + n as f64;
            out.push(s);
        }
        out
    }

    #[test]
    fn reflection_needs_a_sustained_dip() {
        let c = ReflectionCriterion::default();
        // the first post-crossing snapshot has no predecessor trough, so six
        // receding snapshots give a run of five
        let v = detect_reflection(&synthetic_history(-0.1, 6), 0, c, 1.0).unwrap();
        assert!(v.reflected);
        assert_eq!(v.min_excursion, -0.1);
        assert_eq!(v.location, 3.0);
        let short = detect_reflection(&synthetic_history(-0.1, 5), 0, c, 1.0).unwrap();
        assert!(!short.reflected);
        assert_eq!(v.crossing_time, 2.0);
        let shallow = detect_reflection(&synthetic_history(-0.01, 10), 0, c, 1.0).unwrap();
        assert!(!shallow.reflected);
        assert!(matches!(detect_reflection(&[], 0, c, 1.0), Err(Error::EmptyHistory)));
    }

    #[test]
    fn junction_bound_dip_is_not_a_reflection() {
        let m = [20usize, 20];
        let mut h = synthetic_history(-0.1, 0);
        for n in 0..10 {
            // deep trough drifting towards the junction
            let at = 12.0 - n as f64;
            let mut s = NetworkState::from_fn(&m, 1.0, |i, s| if i == 0 && s == at { -0.5 } else { 0.0 });
            s.time = 3.0 + n as f64;
            h.push(s);
        }
        let v = detect_reflection(&h, 0, ReflectionCriterion::default(), 1.0).unwrap();
        assert!(!v.reflected);
        assert_eq!(v.min_excursion, -0.5);
    }

    #[test]
    fn reflection_is_monotone_in_threshold() {
        let h = synthetic_history(-0.05, 8);
        let mut previous = true;
        for k in 0..40 {
            let c = ReflectionCriterion {
                threshold: k as f64 * 0.005,
                min_consecutive: 5,
                min_depth: 0.0,
            };
            let v = detect_reflection(&h, 0, c, 1.0).unwrap().reflected;
            assert!(
                previous || !v,
                "verdict flipped back to true at threshold {}",
                c.threshold
            );
            previous = v;
        }
    }
}
