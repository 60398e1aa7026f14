//! Fixed-point (Picard) solver for gBBMB on a star network.
//!
//! Each edge is mapped to `[0, ∞)` with the junction at `x = 0`, and the
//! solution is the fixed point of
//!
//! ```text
//! Ψ[u]ᵢ(x,t) = e^{-λᵢt} φᵢ(x) + (Φ[u](t) + φ(0)(1 - e^{-λᵢt})) e^{-x/μᵢ}
//!              + σᵢ B_adv,ᵢ[uᵢ](x,t) + B_visc,ᵢ[uᵢ](x,t),          λᵢ = νᵢ/μᵢ²
//! B_adv[u](x,t)  = ∫₀ᵗ∫₀^∞ e^{-λ(t-s)} K(x,y) f(u(y,s)) dy ds
//! B_visc[u](x,t) = λ ∫₀ᵗ∫₀^∞ e^{-λ(t-s)} G(x,y) u(y,s) dy ds
//! Φ[u](t) = h(t) - φ(0)
//! h(t) = φ(0) e^{-ν*t/μ*}
//!        - Σᵢ 1/(μᵢμ*) ∫₀ᵗ∫₀^∞ e^{-ν*(t-s)/μ* - y/μᵢ} (σᵢ fᵢ(uᵢ) - (νᵢ/μᵢ) uᵢ) dy ds
//! ```
//!
//! with `μ* = Σ μᵢ` and `ν* = Σ νᵢ/μᵢ`. All integrals use the composite
//! trapezoid rule on a uniform `(y, t)` grid, truncated at `y_max`. The
//! exponential kernels are separable, so every spatial integral for all
//! nodes at one time level costs O(nodes) via forward/backward recursions;
//! the results are identical to the plain trapezoid sums, which the pointwise
//! [`op_b_adv`], [`op_b_visc`] and [`junction_value_h`] evaluate directly.

use crate::error::{Error, Result};
use crate::network::{EdgeSpec, StarNetwork};
use crate::waves::GreensSpec;

/// Constants of the linear ODE satisfied by the junction value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JunctionOdeParams {
    /// `μ* = Σᵢ μᵢ`
    pub mu_star: f64,
    /// `ν* = Σᵢ νᵢ/μᵢ`
    pub nu_star: f64,
}

impl JunctionOdeParams {
    pub fn from_network(network: &StarNetwork) -> Self {
        let edges = network.edges();
        Self {
            mu_star: edges.iter().map(|e| e.mu).sum(),
            nu_star: edges.iter().map(|e| e.nu / e.mu).sum(),
        }
    }

    /// Decay rate `ν*/μ*` of the homogeneous junction ODE.
    pub fn rate(&self) -> f64 {
        self.nu_star / self.mu_star
    }
}

/// Uniform quadrature grid `y_j = j·y_step ∈ [0, y_max]`, `t_n = n·t_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    pub y_max: f64,
    pub y_step: f64,
    pub t_step: f64,
}

/// Kernel tails `e^{-y/μ}` must have decayed by `e^{-10}` at `y_max`.
pub const TAIL_WIDTHS: f64 = 10.0;

impl QuadratureGrid {
    /// `y_max` must be an integer multiple of `y_step`.
    pub fn new(y_max: f64, y_step: f64, t_step: f64) -> Result<Self> {
        for (name, v) in [("y_max", y_max), ("y_step", y_step), ("t_step", t_step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidGrid(format!("{name} must be positive, got {v}")));
            }
        }
        let q = Self { y_max, y_step, t_step };
        q.intervals()?;
        Ok(q)
    }

    /// `y_max = 10·max μᵢ + support_radius`, rounded up to a multiple of `y_step`.
    pub fn for_network(network: &StarNetwork, y_step: f64, t_step: f64, support_radius: f64) -> Result<Self> {
        let reach = TAIL_WIDTHS * max_mu(network) + support_radius.max(0.0);
        let intervals = (reach / y_step).ceil().max(1.0);
        Self::new(intervals * y_step, y_step, t_step)
    }

    /// Checks the truncation against the network's widest kernel.
    pub fn validate_for(&self, network: &StarNetwork) -> Result<()> {
        let needed = TAIL_WIDTHS * max_mu(network);
        if self.y_max < needed * (1.0 - 1e-12) {
            return Err(Error::InvalidGrid(format!(
                "y_max = {} is below {TAIL_WIDTHS}·max μ = {needed}",
                self.y_max
            )));
        }
        Ok(())
    }

    /// Number of spatial intervals.
    pub fn intervals(&self) -> Result<usize> {
        whole_steps(self.y_max, self.y_step, "y_max", "y_step")
    }

    /// Number of spatial nodes (`intervals + 1`).
    pub fn nodes(&self) -> usize {
        self.intervals().expect("validated in constructor") + 1
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.y_step
    }

    /// Index `n` with `t = n·t_step`.
    pub fn time_index(&self, t: f64) -> Result<usize> {
        if t == 0.0 {
            return Ok(0);
        }
        whole_steps(t, self.t_step, "t", "t_step")
    }

    /// `max_i e^{-y_max/μᵢ}`, the size of the neglected kernel tail relative
    /// to its value at the junction.
    pub fn tail_bound(&self, network: &StarNetwork) -> f64 {
        (-self.y_max / max_mu(network)).exp()
    }
}

fn max_mu(network: &StarNetwork) -> f64 {
    network.edges().iter().map(|e| e.mu).fold(0.0, f64::max)
}

fn whole_steps(length: f64, step: f64, what: &str, unit: &str) -> Result<usize> {
    let n = (length / step).round();
    if length.is_nan() || length < 0.0 || (n * step - length).abs() > 1e-9 * length.max(step) {
        return Err(Error::InvalidGrid(format!(
            "{what} = {length} is not a whole number of {unit} = {step}"
        )));
    }
    Ok(n as usize)
}

/// Samples `u(y_j, t_n)` of one edge, stored by time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSamples {
    levels: Vec<Vec<f64>>,
}

impl SpaceTimeSamples {
    /// `levels[n][j] = u(y_j, t_n)`; every level must have the same length.
    pub fn new(levels: Vec<Vec<f64>>) -> Result<Self> {
        let width = levels.first().map(Vec::len).unwrap_or(0);
        if width == 0 || levels.iter().any(|l| l.len() != width) {
            return Err(Error::InvalidState(
                "space-time samples must be a non-empty rectangle".into(),
            ));
        }
        Ok(Self { levels })
    }

    /// `u(y, t) = φ(y)` on `levels` time levels.
    pub fn constant_in_time(phi: &[f64], levels: usize) -> Self {
        Self {
            levels: vec![phi.to_vec(); levels.max(1)],
        }
    }

    pub fn from_fn(q: &QuadratureGrid, levels: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let nodes = q.nodes();
        Self {
            levels: (0..levels.max(1))
                .map(|n| (0..nodes).map(|j| f(q.y(j), n as f64 * q.t_step)).collect())
                .collect(),
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn nodes(&self) -> usize {
        self.levels[0].len()
    }

    pub fn level(&self, n: usize) -> &[f64] {
        &self.levels[n]
    }

    pub fn at(&self, n: usize, j: usize) -> f64 {
        self.levels[n][j]
    }

    pub fn last(&self) -> &[f64] {
        self.levels.last().expect("non-empty")
    }

    fn sup_diff(&self, other: &Self) -> f64 {
        self.levels
            .iter()
            .zip(&other.levels)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

fn trapezoid_weight(k: usize, last: usize) -> f64 {
    if k == 0 || k == last {
        0.5
    } else {
        1.0
    }
}

fn check_samples(u: &SpaceTimeSamples, q: &QuadratureGrid, n: usize) -> Result<()> {
    if u.nodes() != q.nodes() {
        return Err(Error::InvalidState(format!(
            "samples have {} nodes, grid has {}",
            u.nodes(),
            q.nodes()
        )));
    }
    if u.num_levels() <= n {
        return Err(Error::InvalidState(format!(
            "samples cover {} time levels, level {n} requested",
            u.num_levels()
        )));
    }
    Ok(())
}

/// Direct double trapezoid of `∫₀ᵗ∫₀^{y_max} e^{-λ(t-s)} k(y) g(u(y,s)) dy ds`.
fn double_trapezoid(
    u: &SpaceTimeSamples,
    q: &QuadratureGrid,
    n: usize,
    lambda: f64,
    kernel: impl Fn(f64) -> f64,
    g: impl Fn(f64) -> f64,
) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let last = q.nodes() - 1;
    let kv: Vec<f64> = (0..=last).map(|j| kernel(q.y(j))).collect();
    let mut total = 0.0;
    for m in 0..=n {
        let inner: f64 = (0..=last)
            .map(|j| trapezoid_weight(j, last) * kv[j] * g(u.at(m, j)))
            .sum::<f64>()
            * q.y_step;
        let decay = (-lambda * (n - m) as f64 * q.t_step).exp();
        total += trapezoid_weight(m, n) * decay * inner;
    }
    total * q.t_step
}

/// `B_adv[u](x, t)` for one edge, by direct quadrature. `t` must be a grid time.
pub fn op_b_adv(edge: &EdgeSpec, p: u32, u: &SpaceTimeSamples, x: f64, t: f64, q: &QuadratureGrid) -> Result<f64> {
    let n = q.time_index(t)?;
    check_samples(u, q, n)?;
    if x == 0.0 {
        // K(0, y) = 0 for every y > 0
        return Ok(0.0);
    }
    let green = GreensSpec::new(edge.mu)?;
    let lambda = edge.nu / (edge.mu * edge.mu);
    // at the right end of the grid only the y < x side of the jump exists
    let at_end = |y: f64| x >= q.y_max && y >= q.y_max;
    let kernel = |y: f64| {
        if at_end(y) {
            ((-2.0 * x / edge.mu).exp() + 1.0) / (2.0 * edge.mu * edge.mu)
        } else {
            green.k(x, y)
        }
    };
    Ok(double_trapezoid(u, q, n, lambda, kernel, |v| edge.flux(p, v)))
}

/// `B_visc[u](x, t)` for one edge, by direct quadrature. `t` must be a grid time.
pub fn op_b_visc(edge: &EdgeSpec, u: &SpaceTimeSamples, x: f64, t: f64, q: &QuadratureGrid) -> Result<f64> {
    let n = q.time_index(t)?;
    check_samples(u, q, n)?;
    if edge.nu == 0.0 {
        return Ok(0.0);
    }
    let green = GreensSpec::new(edge.mu)?;
    let lambda = edge.nu / (edge.mu * edge.mu);
    Ok(lambda * double_trapezoid(u, q, n, lambda, |y| green.g(x, y), |v| v))
}

/// Junction value `h(t)` implied by the samples `u` (one per edge), by
/// direct quadrature. `h(0) = phi0` exactly.
pub fn junction_value_h(
    network: &StarNetwork,
    u: &[SpaceTimeSamples],
    phi0: f64,
    t: f64,
    q: &QuadratureGrid,
) -> Result<f64> {
    if u.len() != network.num_edges() {
        return Err(Error::InvalidState(format!(
            "{} sample sets for {} edges",
            u.len(),
            network.num_edges()
        )));
    }
    let n = q.time_index(t)?;
    let ode = JunctionOdeParams::from_network(network);
    let mut h = phi0 * (-ode.rate() * t).exp();
    for (e, ui) in network.edges().iter().zip(u) {
        check_samples(ui, q, n)?;
        let forcing = double_trapezoid(
            ui,
            q,
            n,
            ode.rate(),
            |y| (-y / e.mu).exp(),
            |v| e.sigma() * e.flux(network.p(), v) - e.nu / e.mu * v,
        );
        h -= forcing / (e.mu * ode.mu_star);
    }
    Ok(h)
}

/// Per-edge quadrature machinery for the O(nodes) kernel applications.
#[derive(Debug, Clone)]
struct EdgeKernels {
    mu: f64,
    /// `e^{-Δy/μ}`
    step_decay: f64,
    /// `e^{-y_j/μ}`
    decay_from_junction: Vec<f64>,
    dy: f64,
    /// scratch: left and right partial sums
    left: Vec<f64>,
    right: Vec<f64>,
}

impl EdgeKernels {
    fn new(mu: f64, q: &QuadratureGrid) -> Self {
        let nodes = q.nodes();
        Self {
            mu,
            step_decay: (-q.y_step / mu).exp(),
            decay_from_junction: (0..nodes).map(|j| (-q.y(j) / mu).exp()).collect(),
            dy: q.y_step,
            left: vec![0.0; nodes],
            right: vec![0.0; nodes],
        }
    }

    /// `∫₀^{y_max} e^{-y/μ} v(y) dy`.
    fn weighted_mass(&self, v: &[f64]) -> f64 {
        let last = v.len() - 1;
        v.iter()
            .zip(&self.decay_from_junction)
            .enumerate()
            .map(|(j, (a, b))| trapezoid_weight(j, last) * a * b)
            .sum::<f64>()
            * self.dy
    }

    /// Fills `left[j] = ∫₀^{y_j} e^{-(y_j-y)/μ} v dy` and
    /// `right[j] = ∫_{y_j}^{y_max} e^{-(y-y_j)/μ} v dy`.
    fn sweep(&mut self, v: &[f64]) {
        let (d, half) = (self.step_decay, 0.5 * self.dy);
        let last = v.len() - 1;
        self.left[0] = 0.0;
        for j in 1..=last {
            self.left[j] = d * self.left[j - 1] + half * (d * v[j - 1] + v[j]);
        }
        self.right[last] = 0.0;
        for j in (0..last).rev() {
            self.right[j] = d * self.right[j + 1] + half * (v[j] + d * v[j + 1]);
        }
    }

    /// `out[j] = ∫ K(y_j, y) v(y) dy`.
    fn apply_k(&mut self, v: &[f64], out: &mut [f64]) {
        let s = self.weighted_mass(v);
        self.sweep(v);
        let c = 0.5 / (self.mu * self.mu);
        for (((o, d), l), r) in out
            .iter_mut()
            .zip(&self.decay_from_junction)
            .zip(&self.left)
            .zip(&self.right)
        {
            *o = c * (d * s + l - r);
        }
        // K(0, y) vanishes identically; avoid round-off at the junction
        out[0] = 0.0;
    }

    /// `out[j] = ∫ G(y_j, y) v(y) dy`.
    fn apply_g(&mut self, v: &[f64], out: &mut [f64]) {
        let s = self.weighted_mass(v);
        self.sweep(v);
        let c = -0.5 / self.mu;
        for (((o, d), l), r) in out
            .iter_mut()
            .zip(&self.decay_from_junction)
            .zip(&self.left)
            .zip(&self.right)
        {
            *o = c * (d * s - l - r);
        }
        out[0] = 0.0;
    }
}

/// Outcome of the fixed-point iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardReport {
    pub iterations: usize,
    /// `sup |Ψ[uᵏ] - uᵏ|` after each iteration.
    pub residuals: Vec<f64>,
    /// Relative size of the neglected kernel tail beyond `y_max`.
    pub tail_bound: f64,
}

/// Fixed point of `Ψ` on the quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardSolution {
    pub fields: Vec<SpaceTimeSamples>,
    /// `h(t_n)` for every time level.
    pub junction: Vec<f64>,
    pub grid: QuadratureGrid,
    pub report: PicardReport,
}

impl PicardSolution {
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.grid.t_step
    }

    /// `Σᵢ ∫₀^{y_max} uᵢ(y, t_n) dy` by the trapezoid rule.
    pub fn mass(&self, n: usize) -> f64 {
        self.fields
            .iter()
            .map(|f| {
                let v = f.level(n);
                let last = v.len() - 1;
                v.iter()
                    .enumerate()
                    .map(|(j, x)| trapezoid_weight(j, last) * x)
                    .sum::<f64>()
                    * self.grid.y_step
            })
            .sum()
    }
}

/// Evaluates `Ψ[u]` for all edges, levels and nodes.
struct PsiOperator<'a> {
    network: &'a StarNetwork,
    phi: &'a [Vec<f64>],
    phi0: f64,
    q: QuadratureGrid,
    levels: usize,
    kernels: Vec<EdgeKernels>,
}

impl<'a> PsiOperator<'a> {
    fn junction_series(&mut self, u: &[SpaceTimeSamples]) -> Vec<f64> {
        let ode = JunctionOdeParams::from_network(self.network);
        let p = self.network.p();
        let dt = self.q.t_step;
        let decay = (-ode.rate() * dt).exp();
        let mut h = vec![0.0; self.levels];
        // running trapezoid of the forcing, one accumulator over all edges
        let mut acc = 0.0;
        let mut prev_forcing = 0.0;
        for (n, hn) in h.iter_mut().enumerate() {
            let mut forcing = 0.0;
            for (i, e) in self.network.edges().iter().enumerate() {
                let integrand: Vec<f64> = u[i]
                    .level(n)
                    .iter()
                    .map(|&v| e.sigma() * e.flux(p, v) - e.nu / e.mu * v)
                    .collect();
                forcing += self.kernels[i].weighted_mass(&integrand) / (e.mu * ode.mu_star);
            }
            if n > 0 {
                acc = decay * acc + 0.5 * dt * (decay * prev_forcing + forcing);
            }
            prev_forcing = forcing;
            *hn = self.phi0 * (-ode.rate() * n as f64 * dt).exp() - acc;
        }
        h
    }

    fn apply(&mut self, u: &[SpaceTimeSamples]) -> (Vec<SpaceTimeSamples>, Vec<f64>) {
        let h = self.junction_series(u);
        let p = self.network.p();
        let dt = self.q.t_step;
        let nodes = self.q.nodes();
        let mut out = Vec::with_capacity(u.len());
        for (i, e) in self.network.edges().iter().enumerate() {
            let lambda = e.nu / (e.mu * e.mu);
            let decay = (-lambda * dt).exp();
            let mut adv_acc = vec![0.0; nodes];
            let mut visc_acc = vec![0.0; nodes];
            let mut prev_adv = vec![0.0; nodes];
            let mut prev_visc = vec![0.0; nodes];
            let mut cur_adv = vec![0.0; nodes];
            let mut cur_visc = vec![0.0; nodes];
            let mut levels = Vec::with_capacity(self.levels);
            for (n, &hn) in h.iter().enumerate() {
                let flux: Vec<f64> = u[i].level(n).iter().map(|&v| e.flux(p, v)).collect();
                self.kernels[i].apply_k(&flux, &mut cur_adv);
                if lambda > 0.0 {
                    self.kernels[i].apply_g(u[i].level(n), &mut cur_visc);
                }
                if n > 0 {
                    for j in 0..nodes {
                        adv_acc[j] = decay * adv_acc[j] + 0.5 * dt * (decay * prev_adv[j] + cur_adv[j]);
                        visc_acc[j] = decay * visc_acc[j] + 0.5 * dt * (decay * prev_visc[j] + cur_visc[j]);
                    }
                }
                std::mem::swap(&mut prev_adv, &mut cur_adv);
                std::mem::swap(&mut prev_visc, &mut cur_visc);

                let t = n as f64 * dt;
                let damp = (-lambda * t).exp();
                let coupling = hn - self.phi0 + self.phi0 * (1.0 - damp);
                let row: Vec<f64> = (0..nodes)
                    .map(|j| {
                        damp * self.phi[i][j]
                            + coupling * self.kernels[i].decay_from_junction[j]
                            + e.sigma() * adv_acc[j]
                            + lambda * visc_acc[j]
                    })
                    .collect();
                levels.push(row);
            }
            out.push(SpaceTimeSamples { levels });
        }
        (out, h)
    }
}

/// Iterates `u ← Ψ[u]` from the time-constant extension of `phi` until the
/// sup-norm change drops below `tol`.
///
/// `phi[i][j]` is the initial value on edge `i` at `y_j`; all edges must agree
/// at the junction. `t_final` must be a whole number of `t_step`s.
pub fn picard_solve(
    network: &StarNetwork,
    phi: &[Vec<f64>],
    t_final: f64,
    q: &QuadratureGrid,
    tol: f64,
    max_iters: usize,
) -> Result<PicardSolution> {
    q.validate_for(network)?;
    if phi.len() != network.num_edges() {
        return Err(Error::InvalidState(format!(
            "{} initial profiles for {} edges",
            phi.len(),
            network.num_edges()
        )));
    }
    let nodes = q.nodes();
    if let Some(bad) = phi.iter().position(|p| p.len() != nodes) {
        return Err(Error::InvalidState(format!(
            "initial profile on edge {bad} has {} nodes, grid has {nodes}",
            phi[bad].len()
        )));
    }
    let phi0 = phi[0][0];
    let scale = phi.iter().flatten().fold(1.0_f64, |m, v| m.max(v.abs()));
    if phi.iter().any(|p| (p[0] - phi0).abs() > 1e-12 * scale) {
        return Err(Error::InvalidState(
            "initial data is discontinuous at the junction".into(),
        ));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidState(format!("tolerance must be positive, got {tol}")));
    }
    let levels = q.time_index(t_final)? + 1;
    let mut op = PsiOperator {
        network,
        phi,
        phi0,
        q: *q,
        levels,
        kernels: network.edges().iter().map(|e| EdgeKernels::new(e.mu, q)).collect(),
    };
    let mut u: Vec<SpaceTimeSamples> = phi
        .iter()
        .map(|p| SpaceTimeSamples::constant_in_time(p, levels))
        .collect();
    let mut residuals = Vec::new();
    for k in 1..=max_iters {
        let (next, h) = op.apply(&u);
        let residual = next.iter().zip(&u).map(|(a, b)| a.sup_diff(b)).fold(0.0, f64::max);
        residuals.push(residual);
        if !residual.is_finite() {
            break;
        }
        u = next;
        if residual < tol {
            return Ok(PicardSolution {
                fields: u,
                junction: h,
                grid: *q,
                report: PicardReport {
                    iterations: k,
                    residuals,
                    tail_bound: q.tail_bound(network),
                },
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: residuals.len(),
        residual: residuals.last().copied().unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::JunctionCondition;
    use crate::waves::SolitaryWaveParams;
    use approx::assert_relative_eq;

    fn network(mu: (f64, f64), nu: (f64, f64), alpha: f64, gamma: f64) -> StarNetwork {
        StarNetwork::two_edge(
            EdgeSpec::incoming(mu.0, alpha, gamma, nu.0, 100.0),
            EdgeSpec::outgoing(mu.1, alpha, gamma, nu.1, 100.0),
            1,
            JunctionCondition::MassConservation,
        )
        .unwrap()
    }

    #[test]
    fn junction_ode_constants() {
        let net = network((1.0, 2.0), (0.5, 1.0), 1.0, 1.0);
        let ode = JunctionOdeParams::from_network(&net);
        assert_eq!(ode.mu_star, 3.0);
        assert_eq!(ode.nu_star, 1.0);
    }

    #[test]
    fn grid_validation() {
        assert!(QuadratureGrid::new(1.0, 0.3, 0.1).is_err());
        assert!(QuadratureGrid::new(1.0, 0.0, 0.1).is_err());
        let net = network((1.0, 1.5), (0.0, 0.0), 1.0, 1.0);
        let q = QuadratureGrid::new(10.0, 0.05, 0.1).unwrap();
        assert!(q.validate_for(&net).is_err());
        let q = QuadratureGrid::for_network(&net, 0.05, 0.1, 2.0).unwrap();
        assert_relative_eq!(q.y_max, 17.0, max_relative = 1e-12);
        assert_eq!(q.nodes(), 341);
        assert!(q.validate_for(&net).is_ok());
        assert!(q.time_index(0.25).is_err());
        assert_eq!(q.time_index(0.3).unwrap(), 3);
    }

    #[test]
    fn operators_vanish_on_zero_and_at_time_zero() {
        let e = EdgeSpec::outgoing(1.0, 1.0, 1.0, 1.0, 10.0);
        let q = QuadratureGrid::new(10.0, 0.1, 0.1).unwrap();
        let zero = SpaceTimeSamples::from_fn(&q, 3, |_, _| 0.0);
        let one = SpaceTimeSamples::from_fn(&q, 3, |_, _| 1.0);
        assert_eq!(op_b_adv(&e, 1, &zero, 1.0, 0.2, &q).unwrap(), 0.0);
        assert_eq!(op_b_visc(&e, &zero, 1.0, 0.2, &q).unwrap(), 0.0);
        assert_eq!(op_b_adv(&e, 1, &one, 1.0, 0.0, &q).unwrap(), 0.0);
        assert_eq!(op_b_visc(&e, &one, 1.0, 0.0, &q).unwrap(), 0.0);
        let inviscid = EdgeSpec::outgoing(1.0, 1.0, 1.0, 0.0, 10.0);
        assert_eq!(op_b_visc(&inviscid, &one, 1.0, 0.2, &q).unwrap(), 0.0);
        assert_eq!(op_b_adv(&e, 1, &one, 0.0, 0.2, &q).unwrap(), 0.0);
        assert!(op_b_adv(&e, 1, &one, 1.0, 0.3, &q).is_err());
    }

    #[test]
    fn b_visc_of_constant_matches_closed_form() {
        // ∫G(1,y)dy = 1 - e⁻¹ and ∫₀¹ e^{-(1-s)} ds = 1 - e⁻¹
        let e = EdgeSpec::outgoing(1.0, 1.0, 1.0, 1.0, 30.0);
        let exact = (1.0 - (-1.0f64).exp()).powi(2);
        assert_relative_eq!(exact, 0.399576, epsilon = 1e-6);
        let err = |h: f64| {
            let q = QuadratureGrid::new(30.0, h, h).unwrap();
            let one = SpaceTimeSamples::from_fn(&q, q.time_index(1.0).unwrap() + 1, |_, _| 1.0);
            (op_b_visc(&e, &one, 1.0, 1.0, &q).unwrap() - exact).abs()
        };
        let (coarse, fine) = (err(0.02), err(0.01));
        assert!(fine < 2e-5, "error {fine}");
        // second-order quadrature
        assert!((3.5..4.5).contains(&(coarse / fine)), "ratio {}", coarse / fine);
    }

    #[test]
    fn b_adv_of_linear_flux_matches_closed_form() {
        // ν = 0, f(u) = u, u(y,s) = e^{-y}: ∫K(1,y)e^{-y}dy = e⁻¹/2, so B_adv(1,t) = t e⁻¹/2
        let e = EdgeSpec::outgoing(1.0, 1.0, 0.0, 0.0, 30.0);
        let q = QuadratureGrid::new(30.0, 0.005, 0.05).unwrap();
        let u = SpaceTimeSamples::from_fn(&q, 11, |y, _| (-y).exp());
        let v = op_b_adv(&e, 1, &u, 1.0, 0.5, &q).unwrap();
        assert_relative_eq!(v, 0.25 * (-1.0f64).exp(), max_relative = 1e-5);
    }

    #[test]
    fn fast_kernels_equal_direct_trapezoid() {
        let q = QuadratureGrid::new(12.0, 0.1, 0.1).unwrap();
        let v: Vec<f64> = (0..q.nodes())
            .map(|j| (q.y(j) * 0.7).sin() * (-0.2 * q.y(j)).exp())
            .collect();
        let mut k = EdgeKernels::new(1.3, &q);
        let green = GreensSpec::new(1.3).unwrap();
        let mut out_k = vec![0.0; v.len()];
        let mut out_g = vec![0.0; v.len()];
        k.apply_k(&v, &mut out_k);
        k.apply_g(&v, &mut out_g);
        let last = v.len() - 1;
        // interior nodes: the jump of K sits strictly inside the integration range
        for j in [1usize, 7, 60, last - 1] {
            let x = q.y(j);
            let direct = |ker: &dyn Fn(f64, f64) -> f64| {
                (0..=last)
                    .map(|m| trapezoid_weight(m, last) * ker(x, q.y(m)) * v[m])
                    .sum::<f64>()
                    * q.y_step
            };
            assert_relative_eq!(out_k[j], direct(&|a, b| green.k(a, b)), epsilon = 1e-13);
            assert_relative_eq!(out_g[j], direct(&|a, b| green.g(a, b)), epsilon = 1e-13);
        }
        assert_eq!(out_k[0], 0.0);
        assert_eq!(out_g[0], 0.0);
    }

    #[test]
    fn junction_value_decays_from_initial_value() {
        // μ* = 1, ν* = 1 with two edges of μ = ½, ν = ¼
        let net = network((0.5, 0.5), (0.25, 0.25), 1.0, 1.0);
        let q = QuadratureGrid::new(6.0, 0.1, 0.1).unwrap();
        let zero = vec![SpaceTimeSamples::from_fn(&q, 11, |_, _| 0.0); 2];
        for t in [0.0, 0.3, 1.0] {
            assert_relative_eq!(
                junction_value_h(&net, &zero, 1.0, t, &q).unwrap(),
                (-t).exp(),
                max_relative = 1e-14
            );
            assert_eq!(junction_value_h(&net, &zero, 0.0, t, &q).unwrap(), 0.0);
        }
    }

    #[test]
    fn junction_forcing_cancels_for_mirror_edges() {
        let net = network((1.0, 1.0), (0.0, 0.0), 1.0, 1.0);
        let q = QuadratureGrid::new(10.0, 0.1, 0.1).unwrap();
        let u = SpaceTimeSamples::from_fn(&q, 6, |y, t| (1.0 + t) * (-y).exp());
        let both = vec![u.clone(), u];
        assert_eq!(junction_value_h(&net, &both, 0.7, 0.5, &q).unwrap(), 0.7);
    }

    #[test]
    fn zero_data_is_a_fixed_point() {
        let net = network((1.0, 1.2), (0.1, 0.0), 1.0, 1.0);
        let q = QuadratureGrid::for_network(&net, 0.1, 0.05, 0.0).unwrap();
        let phi = vec![vec![0.0; q.nodes()]; 2];
        let sol = picard_solve(&net, &phi, 0.2, &q, 1e-10, 5).unwrap();
        assert_eq!(sol.report.iterations, 1);
        assert_eq!(sol.report.residuals, vec![0.0]);
        assert!(sol.fields.iter().all(|f| f.last().iter().all(|v| *v == 0.0)));
    }

    fn solitary_phi(net: &StarNetwork, q: &QuadratureGrid, c: f64, offset: f64) -> (SolitaryWaveParams, Vec<Vec<f64>>) {
        // path coordinate: incoming edge x = -y, outgoing x = y; peak at x = -offset
        let w = SolitaryWaveParams::new(c, -offset, net.edge(0), net.p()).unwrap();
        let phi = (0..2)
            .map(|i| {
                let sign = if i == 0 { -1.0 } else { 1.0 };
                (0..q.nodes()).map(|j| w.profile(sign * q.y(j), 0.0)).collect()
            })
            .collect();
        (w, phi)
    }

    #[test]
    fn fixed_point_reproduces_the_travelling_wave() {
        let net = network((1.0, 1.0), (0.0, 0.0), 1.0, 1.0);
        let q = QuadratureGrid::for_network(&net, 0.05, 0.0125, 90.0).unwrap();
        let (w, phi) = solitary_phi(&net, &q, 1.05, 5.0);
        let sol = picard_solve(&net, &phi, 0.25, &q, 1e-10, 50).unwrap();
        let n = sol.fields[0].num_levels() - 1;
        let t = sol.time(n);
        let mut err: f64 = 0.0;
        for (i, f) in sol.fields.iter().enumerate() {
            let sign = if i == 0 { -1.0 } else { 1.0 };
            for j in 0..q.nodes() {
                err = err.max((f.at(n, j) - w.profile(sign * q.y(j), t)).abs());
            }
        }
        assert!(err < 1e-4, "sup error {err}");
        // the junction value tracks the wave's front
        assert_relative_eq!(sol.junction[n], w.profile(0.0, t), max_relative = 1e-3);
        assert!(sol.junction[n] > sol.junction[0]);
    }

    #[test]
    fn fixed_point_is_continuous_and_starts_from_phi() {
        let net = network((1.0, 1.3), (0.4, 0.1), 1.0, 1.0);
        let q = QuadratureGrid::for_network(&net, 0.05, 0.0125, 60.0).unwrap();
        let (_, phi) = solitary_phi(&net, &q, 1.2, 3.0);
        let sol = picard_solve(&net, &phi, 0.25, &q, 1e-10, 60).unwrap();
        for (f, p) in sol.fields.iter().zip(&phi) {
            assert_eq!(f.level(0), p.as_slice());
            for n in 0..f.num_levels() {
                assert_relative_eq!(f.at(n, 0), sol.junction[n], epsilon = 1e-14);
            }
        }
        // mass is conserved by the junction condition up to quadrature error
        let m0 = sol.mass(0);
        let drift = (0..sol.fields[0].num_levels())
            .map(|n| (sol.mass(n) - m0).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-4 * m0, "mass drift {drift} of {m0}");
    }

    #[test]
    fn affine_iteration_contracts_faster_for_shorter_times() {
        let net = network((1.0, 1.0), (0.0, 0.0), 1.0, 0.0);
        let q = QuadratureGrid::for_network(&net, 0.05, 0.01, 20.0).unwrap();
        let bump = |y: f64| (-(y - 2.0).powi(2)).exp();
        let phi: Vec<Vec<f64>> = vec![(0..q.nodes()).map(|j| bump(q.y(j))).collect(); 2];
        let ratio = |t: f64| {
            let r = picard_solve(&net, &phi, t, &q, 1e-13, 40).unwrap().report.residuals;
            r[2] / r[1]
        };
        let (long, short) = (ratio(0.4), ratio(0.2));
        assert!(long < 1.0);
        assert!((1.6..2.4).contains(&(long / short)), "ratios {long} vs {short}");
    }

    #[test]
    fn long_horizons_fail_to_converge() {
        let net = network((1.0, 1.0), (0.0, 0.0), 1.0, 1.0);
        let q = QuadratureGrid::for_network(&net, 0.1, 0.1, 20.0).unwrap();
        let (_, phi) = solitary_phi(&net, &q, 5.0, 3.0);
        match picard_solve(&net, &phi, 10.0, &q, 1e-12, 3) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-12);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn discontinuous_initial_data_is_rejected() {
        let net = network((1.0, 1.0), (0.0, 0.0), 1.0, 1.0);
        let q = QuadratureGrid::for_network(&net, 0.1, 0.1, 0.0).unwrap();
        let mut phi = vec![vec![0.0; q.nodes()]; 2];
        phi[1][0] = 1.0;
        assert!(matches!(
            picard_solve(&net, &phi, 0.1, &q, 1e-8, 5),
            Err(Error::InvalidState(_))
        ));
    }
}
