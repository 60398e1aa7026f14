//! Implicit leapfrog stepping of gBBMB on a star network.
//!
//! Interior nodes of every edge use the three-point scheme
//!
//! ```text
//! L(uⁿ⁺¹) + κ S(uⁿ⁺¹) = L(uⁿ⁻¹) - κ S(uⁿ⁻¹) + σ (Δt Δx/μ²) (α + γ (uⁿ_k)^p) (uⁿ_{k+1} - uⁿ_{k-1})
//! L(w) = w_{k-1} - (2 + (Δx/μ)²) w_k + w_{k+1},   S(w) = w_{k-1} - 2 w_k + w_{k+1},   κ = ν Δt/μ²
//! ```
//!
//! in each edge's junction-outward coordinate, i.e. the dispersive leapfrog
//! with the viscous term averaged over levels `n±1`. The junction row is a
//! one-sided, leapfrog-in-time discretization of the flux balance
//!
//! ```text
//! Σᵢ μᵢ² (uᵢ[1] - h)ⁿ⁺¹ = Σᵢ μᵢ² (uᵢ[1] - h)ⁿ⁻¹ + 2ΔtΔx Σᵢ σᵢ fᵢ(hⁿ) - 2Δt Σᵢ νᵢ (uᵢ[1] - h)ⁿ
//! ```
//!
//! which, for two edges, is the familiar interface equation written over the
//! single array `u₀ … u_J`. The matrix does not depend on time and is
//! factored once.

use crate::error::{Error, Result};
use crate::fd::linalg::{EdgeBlock, JunctionSystem};
use crate::fd::state::{GridSpec, NetworkState, SolitaryPlacement};
use crate::network::{JunctionCondition, StarNetwork};

#[derive(Debug, Clone, Copy)]
struct EdgeCoefficients {
    /// `(Δx/μ)²`
    r: f64,
    /// `ν Δt / μ²`
    kappa: f64,
    /// `Δt Δx / μ²`
    adv: f64,
    sigma: f64,
    alpha: f64,
    gamma: f64,
}

/// The factored implicit operator for one `(network, grid)` pair.
///
/// Boundary unknowns are eliminated (they are pinned to 0), so the system
/// unknowns are the junction value and every interior sample.
#[derive(Debug, Clone)]
pub struct SystemMatrix {
    system: JunctionSystem,
    coeffs: Vec<EdgeCoefficients>,
    intervals: Vec<usize>,
    p: u32,
}

impl SystemMatrix {
    /// `[sub, diag, super]` of an interior row on `edge`.
    pub fn interior_stencil(&self, edge: usize) -> [f64; 3] {
        let b = &self.system.blocks()[edge];
        [b.off, b.diag, b.off]
    }

    /// Coefficients of `(uᵢ[1] - h)` in the junction row.
    pub fn junction_weights(&self) -> &[f64] {
        self.system.weights()
    }

    pub fn intervals(&self) -> &[usize] {
        &self.intervals
    }

    /// Dense matrix with unknowns `[h, edge 1 interior…, edge 2 interior…]`.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.system.to_dense()
    }

    fn solve(&self, rhs: &mut [Vec<f64>], junction_rhs: f64) -> f64 {
        self.system.solve(rhs, junction_rhs)
    }

    /// Interior right-hand sides `L(prev) + w_ν κ S(prev) + w_a σ(ΔtΔx/μ²)(α+γ curr^p) δcurr`.
    /// Leapfrog uses `w_a = 1, w_ν = -1`; the one-level bootstrap `w_a = ½, w_ν = 0`.
    fn interior_rhs(
        &self,
        prev: &NetworkState,
        curr: &NetworkState,
        weight: f64,
        viscous_weight: f64,
        out: &mut [Vec<f64>],
    ) {
        let p = self.p as i32;
        for (i, c) in self.coeffs.iter().enumerate() {
            let m = self.intervals[i];
            let side = 1.0 + viscous_weight * c.kappa;
            let centre = 2.0 + c.r + 2.0 * viscous_weight * c.kappa;
            let adv = weight * c.sigma * c.adv;
            let pt = prev.tail(i);
            let ct = curr.tail(i);
            let ph = prev.junction();
            let ch = curr.junction();
            let r = &mut out[i];
            for k in 1..m {
                // tails are offset by one: tail[k-1] = u(s_k)
                let pl = if k == 1 { ph } else { pt[k - 2] };
                let cl = if k == 1 { ch } else { ct[k - 2] };
                let pc = pt[k - 1];
                let cc = ct[k - 1];
                let pr = pt[k];
                let cr = ct[k];
                let speed = c.alpha + c.gamma * cc.powi(p);
                r[k - 1] = side * (pl + pr) - centre * pc + adv * speed * (cr - cl);
            }
        }
    }

    fn advance(&self, rhs: &mut [Vec<f64>], junction_rhs: f64, time: f64) -> NetworkState {
        let h = self.solve(rhs, junction_rhs);
        let mut next = NetworkState::zeros(&self.intervals);
        next.set_junction(h);
        for (i, interior) in rhs.iter().enumerate() {
            next.set_interior(i, interior);
        }
        next.time = time;
        next
    }
}

/// Builds and factors the implicit operator.
pub fn assemble_system(network: &StarNetwork, grid: &GridSpec) -> Result<SystemMatrix> {
    let intervals = grid.intervals(network)?;
    let (dx, dt) = (grid.dx, grid.dt);
    let mut blocks = Vec::with_capacity(network.num_edges());
    let mut coeffs = Vec::with_capacity(network.num_edges());
    for (e, &m) in network.edges().iter().zip(&intervals) {
        let mu2 = e.mu * e.mu;
        let c = EdgeCoefficients {
            r: dx * dx / mu2,
            kappa: e.nu * dt / mu2,
            adv: dt * dx / mu2,
            sigma: e.sigma(),
            alpha: e.alpha,
            gamma: e.gamma,
        };
        let block = EdgeBlock::new(m - 1, 1.0 + c.kappa, -(2.0 + c.r) - 2.0 * c.kappa).map_err(|err| {
            Error::SingularMatrix(format!("{err}; dx = {dx}, dt = {dt}, mu = {}, nu = {}", e.mu, e.nu))
        })?;
        blocks.push(block);
        coeffs.push(c);
    }
    let weights = network.edges().iter().map(|e| e.mu * e.mu).collect();
    let system = JunctionSystem::new(blocks, weights)?;
    Ok(SystemMatrix {
        system,
        coeffs,
        intervals,
        p: network.p(),
    })
}

/// `Σᵢ σᵢ fᵢ(h)`: for two edges, `f₂(h) - f₁(h)`.
pub fn junction_flux_imbalance(network: &StarNetwork, h: f64) -> f64 {
    network.edges().iter().map(|e| e.sigma() * e.flux(network.p(), h)).sum()
}

/// Right-hand side of the discrete mass-conservation junction row for the
/// step `n → n+1`.
pub fn interface_rhs(network: &StarNetwork, state_n: &NetworkState, state_nm1: &NetworkState, grid: &GridSpec) -> f64 {
    let history: f64 = network
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| e.mu * e.mu * (state_nm1.value(i, 1) - state_nm1.junction()))
        .sum();
    let viscous: f64 = network
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| e.nu * (state_n.value(i, 1) - state_n.junction()))
        .sum();
    history + 2.0 * grid.dt * grid.dx * junction_flux_imbalance(network, state_n.junction()) - 2.0 * grid.dt * viscous
}

fn junction_rhs(network: &StarNetwork, curr: &NetworkState, prev: &NetworkState, grid: &GridSpec) -> f64 {
    match network.junction_condition() {
        JunctionCondition::MassConservation => interface_rhs(network, curr, prev, grid),
        JunctionCondition::Kirchhoff => 0.0,
    }
}

/// How the second history level `u(·, Δt)` is produced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bootstrap {
    /// Sample the solitary wave at `t = Δt`.
    ExactTranslate(SolitaryPlacement),
    /// One step of backward Euler on dispersion and dissipation with explicit
    /// advection and an explicit junction flux.
    SemiImplicit,
}

fn semi_implicit_step(
    matrix: &SystemMatrix,
    network: &StarNetwork,
    grid: &GridSpec,
    state0: &NetworkState,
) -> NetworkState {
    let mut rhs: Vec<Vec<f64>> = matrix.intervals.iter().map(|&m| vec![0.0; m - 1]).collect();
    // L(u¹) + κS(u¹) = L(u⁰) + ½σ(ΔtΔx/μ²)(α+γu⁰^p)δu⁰
    matrix.interior_rhs(state0, state0, 0.5, 0.0, &mut rhs);
    let jr = match network.junction_condition() {
        JunctionCondition::MassConservation => {
            let h = state0.junction();
            let mut r = grid.dt * grid.dx * junction_flux_imbalance(network, h);
            for (i, e) in network.edges().iter().enumerate() {
                let d = state0.value(i, 1) - h;
                r += (e.mu * e.mu - grid.dt * e.nu) * d;
            }
            r
        }
        JunctionCondition::Kirchhoff => 0.0,
    };
    matrix.advance(&mut rhs, jr, state0.time + grid.dt)
}

/// Approximates `u(·, Δt)` from the initial state.
pub fn bootstrap_first_level(
    state0: &NetworkState,
    network: &StarNetwork,
    grid: &GridSpec,
    mode: &Bootstrap,
) -> Result<NetworkState> {
    match mode {
        Bootstrap::ExactTranslate(wave) => wave.state(network, grid, state0.time + grid.dt),
        Bootstrap::SemiImplicit => {
            let matrix = assemble_system(network, grid)?;
            Ok(semi_implicit_step(&matrix, network, grid, state0))
        }
    }
}

/// Factored operator plus the two leapfrog history levels of one run.
#[derive(Debug, Clone)]
pub struct SteppingWorkspace {
    network: StarNetwork,
    grid: GridSpec,
    matrix: SystemMatrix,
    prev: NetworkState,
    curr: NetworkState,
    steps_taken: usize,
    start_time: f64,
    scratch: Vec<Vec<f64>>,
}

impl SteppingWorkspace {
    /// Assembles the operator and bootstraps level 1 from `initial`.
    pub fn new(network: &StarNetwork, grid: &GridSpec, initial: NetworkState, bootstrap: &Bootstrap) -> Result<Self> {
        let matrix = assemble_system(network, grid)?;
        if initial.intervals_all() != matrix.intervals {
            return Err(Error::InvalidState(format!(
                "initial state has intervals {:?}, grid expects {:?}",
                initial.intervals_all(),
                matrix.intervals
            )));
        }
        let first = match bootstrap {
            Bootstrap::SemiImplicit => semi_implicit_step(&matrix, network, grid, &initial),
            other => bootstrap_first_level(&initial, network, grid, other)?,
        };
        Self::from_levels(network, grid, matrix, initial, first)
    }

    /// Starts from two explicit history levels `u⁰`, `u¹`.
    pub fn with_levels(
        network: &StarNetwork,
        grid: &GridSpec,
        level0: NetworkState,
        level1: NetworkState,
    ) -> Result<Self> {
        let matrix = assemble_system(network, grid)?;
        Self::from_levels(network, grid, matrix, level0, level1)
    }

    fn from_levels(
        network: &StarNetwork,
        grid: &GridSpec,
        matrix: SystemMatrix,
        prev: NetworkState,
        curr: NetworkState,
    ) -> Result<Self> {
        for s in [&prev, &curr] {
            if s.intervals_all() != matrix.intervals {
                return Err(Error::InvalidState("history level does not match the grid".into()));
            }
        }
        let scratch = matrix.intervals.iter().map(|&m| vec![0.0; m - 1]).collect();
        Ok(Self {
            network: network.clone(),
            grid: *grid,
            matrix,
            start_time: prev.time,
            prev,
            curr,
            steps_taken: 1,
            scratch,
        })
    }

    pub fn matrix(&self) -> &SystemMatrix {
        &self.matrix
    }

    pub fn previous(&self) -> &NetworkState {
        &self.prev
    }

    pub fn current(&self) -> &NetworkState {
        &self.curr
    }

    /// Index of the current level (`u¹` after bootstrapping).
    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// Advances one `Δt` and returns the new current level.
    pub fn step(&mut self) -> Result<&NetworkState> {
        self.matrix
            .interior_rhs(&self.prev, &self.curr, 1.0, -1.0, &mut self.scratch);
        let jr = junction_rhs(&self.network, &self.curr, &self.prev, &self.grid);
        let time = self.start_time + self.grid.dt * (self.steps_taken + 1) as f64;
        let next = self.matrix.advance(&mut self.scratch, jr, time);
        if !next.is_finite() {
            return Err(Error::Unstable {
                step: self.steps_taken + 1,
                time,
                last_stable_time: self.curr.time,
                max_abs: self.curr.max_abs(),
            });
        }
        self.prev = std::mem::replace(&mut self.curr, next);
        self.steps_taken += 1;
        Ok(&self.curr)
    }
}

/// Integrates from `initial` to the grid horizon. `observe` sees the state at
/// step 0, every `stride` steps and at the final step.
pub fn run(
    network: &StarNetwork,
    grid: &GridSpec,
    initial: &NetworkState,
    bootstrap: &Bootstrap,
    stride: usize,
    mut observe: impl FnMut(&NetworkState),
) -> Result<NetworkState> {
    let stride = stride.max(1);
    let total = grid.steps();
    observe(initial);
    if total == 0 {
        return Ok(initial.clone());
    }
    let mut ws = SteppingWorkspace::new(network, grid, initial.clone(), bootstrap)?;
    if !ws.current().is_finite() {
        return Err(Error::Unstable {
            step: 1,
            time: ws.current().time,
            last_stable_time: initial.time,
            max_abs: initial.max_abs(),
        });
    }
    if stride == 1 || total == 1 {
        observe(ws.current());
    }
    while ws.steps_taken() < total {
        ws.step()?;
        let n = ws.steps_taken();
        if n % stride == 0 || n == total {
            observe(ws.current());
        }
    }
    Ok(ws.curr)
}
