//! Closed-form objects: solitary-wave data, the half-line Green's function of
//! `1 - μ² ∂ₓ²` and its `y`-derivative kernel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::EdgeSpec;

/// Beyond this value of the `cosh` argument the profile is returned as 0.
pub const COSH_ARGUMENT_CUTOFF: f64 = 350.0;

/// Solitary wave of gBBM travelling at speed `c` on an edge with
/// coefficients `(μ, α, γ)`:
///
/// ```text
/// u(x, t) = [A cosh(W (x - x₀ - c t))]^(-2/p)
/// W = p/(2μ) √(1 - α/c),   A = p/(2μW) √(2γ / (c (p+1)(p+2)))
/// ```
///
/// `W` is the inverse width (wavenumber) of the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitaryWaveParams {
    pub c: f64,
    pub x0: f64,
    /// Inverse width.
    pub w: f64,
    /// Amplitude parameter; the peak value is `A^(-2/p)`.
    pub a: f64,
    pub p: u32,
}

impl SolitaryWaveParams {
    pub fn new(c: f64, x0: f64, edge: &EdgeSpec, p: u32) -> Result<Self> {
        if !(c.is_finite() && x0.is_finite()) {
            return Err(Error::InvalidWave("speed and center must be finite".into()));
        }
        if c <= edge.alpha || c <= 0.0 {
            return Err(Error::InvalidWave(format!(
                "speed c = {c} must exceed the edge's alpha = {}",
                edge.alpha
            )));
        }
        if edge.gamma <= 0.0 {
            return Err(Error::InvalidWave("gamma must be positive for a solitary wave".into()));
        }
        if p < 1 {
            return Err(Error::InvalidWave("p must be >= 1".into()));
        }
        let pf = p as f64;
        let w = pf / (2.0 * edge.mu) * (1.0 - edge.alpha / c).sqrt();
        let a = pf / (2.0 * edge.mu * w) * (2.0 * edge.gamma / (c * (pf + 1.0) * (pf + 2.0))).sqrt();
        Ok(Self { c, x0, w, a, p })
    }

    /// Peak value `A^(-2/p)`.
    pub fn amplitude(&self) -> f64 {
        self.a.powf(-2.0 / self.p as f64)
    }

    pub fn peak_position(&self, t: f64) -> f64 {
        self.x0 + self.c * t
    }

    pub fn profile(&self, x: f64, t: f64) -> f64 {
        let arg = self.w * (x - self.x0 - self.c * t);
        if arg.abs() > COSH_ARGUMENT_CUTOFF {
            return 0.0;
        }
        (self.a * arg.cosh()).powf(-2.0 / self.p as f64)
    }

    /// `∫ u dx` in closed form. Only `p = 1` has one here: `2 / (W A²)`.
    pub fn mass(&self) -> Result<f64> {
        if self.p != 1 {
            return Err(Error::Unsupported(format!(
                "closed-form solitary mass needs p = 1, got p = {}",
                self.p
            )));
        }
        Ok(2.0 / (self.w * self.a * self.a))
    }

    /// Composite trapezoid of the profile over `x₀ ± half_width/W`.
    pub fn mass_by_quadrature(&self, half_width: f64, intervals: usize) -> f64 {
        let lo = self.x0 - half_width / self.w;
        let hi = self.x0 + half_width / self.w;
        let h = (hi - lo) / intervals as f64;
        let inner: f64 = (1..intervals).map(|k| self.profile(lo + k as f64 * h, 0.0)).sum();
        h * (inner + 0.5 * (self.profile(lo, 0.0) + self.profile(hi, 0.0)))
    }

    /// Closed form when available, otherwise a fine quadrature.
    pub fn mass_any_p(&self) -> f64 {
        self.mass().unwrap_or_else(|_| self.mass_by_quadrature(40.0, 40_000))
    }
}

/// Smallest depth a negative-polarity solitary wave can have on `edge`.
///
/// Solitary waves with `c < 0` exist only for odd `p` and have peak value
/// `-[(α - c)(p+1)(p+2) / (2γ)]^(1/p)`; letting `c → 0⁻` gives the bound
/// `[α (p+1)(p+2) / (2γ)]^(1/p)`. Anything shallower cannot travel backwards
/// as a coherent pulse. Returns 0 when no such bound applies (even `p`,
/// `α ≤ 0`, or `γ ≤ 0`).
pub fn anti_solitary_depth(edge: &EdgeSpec, p: u32) -> f64 {
    if p.is_multiple_of(2) || edge.alpha <= 0.0 || edge.gamma <= 0.0 {
        return 0.0;
    }
    let pf = p as f64;
    (edge.alpha * (pf + 1.0) * (pf + 2.0) / (2.0 * edge.gamma)).powf(1.0 / pf)
}

/// Free-function form of [`SolitaryWaveParams::profile`].
pub fn solitary_profile(params: &SolitaryWaveParams, x: f64, t: f64) -> f64 {
    params.profile(x, t)
}

/// Green's function data for `1 - μ² ∂ₓ²` on the half line with `G(0, y) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreensSpec {
    pub mu: f64,
}

impl GreensSpec {
    pub fn new(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidNetwork(format!("mu must be positive, got {mu}")));
        }
        Ok(Self { mu })
    }

    /// `G(x, y) = -(e^{-(x+y)/μ} - e^{-|x-y|/μ}) / (2μ)`.
    pub fn g(&self, x: f64, y: f64) -> f64 {
        let mu = self.mu;
        -((-(x + y) / mu).exp() - (-(x - y).abs() / mu).exp()) / (2.0 * mu)
    }

    /// `K(x, y) = ∂_y G = (e^{-(x+y)/μ} + sgn(x-y) e^{-|x-y|/μ}) / (2μ²)`,
    /// with `sgn(0) = 0`.
    pub fn k(&self, x: f64, y: f64) -> f64 {
        let mu = self.mu;
        let d = x - y;
        let sgn = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        ((-(x + y) / mu).exp() + sgn * (-d.abs() / mu).exp()) / (2.0 * mu * mu)
    }
}

pub fn greens_g(spec: &GreensSpec, x: f64, y: f64) -> f64 {
    spec.g(x, y)
}

pub fn kernel_k(spec: &GreensSpec, x: f64, y: f64) -> f64 {
    spec.k(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn edge(mu: f64) -> EdgeSpec {
        EdgeSpec::incoming(mu, 1.0, 1.0, 0.0, 100.0)
    }

    #[test]
    fn anti_solitary_depth_matches_limit_of_backward_waves() {
        let e = EdgeSpec::incoming(1.0, 1.0, 1.0, 0.0, 10.0);
        assert_abs_diff_eq!(anti_solitary_depth(&e, 1), 3.0, epsilon = 1e-14);
        // p = 1 backward wave of speed c has peak 3(c - α)/γ
        let c = -1e-9;
        assert_abs_diff_eq!(anti_solitary_depth(&e, 1), -3.0 * (c - 1.0), epsilon = 1e-8);
        assert_abs_diff_eq!(anti_solitary_depth(&e, 3), 10f64.powf(1.0 / 3.0), epsilon = 1e-14);
        assert_eq!(anti_solitary_depth(&e, 2), 0.0);
        let e0 = EdgeSpec::incoming(1.0, 0.0, 1.0, 0.0, 10.0);
        assert_eq!(anti_solitary_depth(&e0, 1), 0.0);
    }

    #[test]
    fn amplitudes_of_reference_waves() {
        let slow = SolitaryWaveParams::new(2.0, 60.0, &edge(1.0), 1).unwrap();
        assert_relative_eq!(slow.amplitude(), 3.0, max_relative = 1e-12);
        assert_relative_eq!(slow.profile(60.0, 0.0), 3.0, max_relative = 1e-12);
        let fast = SolitaryWaveParams::new(5.0, 60.0, &edge(1.0), 1).unwrap();
        assert_relative_eq!(fast.amplitude(), 12.0, max_relative = 1e-12);
        assert_relative_eq!(fast.profile(65.0, 1.0), 12.0, max_relative = 1e-12);
    }

    #[test]
    fn rejects_degenerate_waves() {
        assert!(SolitaryWaveParams::new(1.0, 0.0, &edge(1.0), 1).is_err());
        assert!(SolitaryWaveParams::new(0.5, 0.0, &edge(1.0), 1).is_err());
        let flat = EdgeSpec::incoming(1.0, 1.0, 0.0, 0.0, 10.0);
        assert!(SolitaryWaveParams::new(2.0, 0.0, &flat, 1).is_err());
    }

    /// Residual of `c μ² u'' = (c - α) u - γ u^{p+1}/(p+1)`, the travelling-wave
    /// reduction of gBBM, by second differences.
    #[test]
    fn profile_solves_travelling_wave_ode() {
        for p in [1u32, 2, 3] {
            let e = EdgeSpec::incoming(1.3, 0.7, 0.8, 0.0, 100.0);
            let wave = SolitaryWaveParams::new(2.5, 0.0, &e, p).unwrap();
            let h = 1e-3;
            for &x in &[-3.0, -1.0, -0.2, 0.0, 0.4, 2.0] {
                let u = wave.profile(x, 0.0);
                let upp = (wave.profile(x + h, 0.0) - 2.0 * u + wave.profile(x - h, 0.0)) / (h * h);
                let lhs = wave.c * e.mu * e.mu * upp;
                let rhs = (wave.c - e.alpha) * u - e.gamma * u.powi(p as i32 + 1) / (p as f64 + 1.0);
                assert!((lhs - rhs).abs() < 1e-5 * (1.0 + u.abs()), "p={p} x={x} {lhs} {rhs}");
            }
        }
    }

    #[test]
    fn closed_form_mass_matches_quadrature() {
        // 2/(W A²) with W = 1/(2√2), A⁻² = 3 gives 12√2.
        let slow = SolitaryWaveParams::new(2.0, 60.0, &edge(1.0), 1).unwrap();
        assert_relative_eq!(slow.mass().unwrap(), 12.0 * 2f64.sqrt(), max_relative = 1e-12);
        // W = 1/√5, A⁻² = 12 gives 24√5.
        let fast = SolitaryWaveParams::new(5.0, 60.0, &edge(1.0), 1).unwrap();
        assert_relative_eq!(fast.mass().unwrap(), 24.0 * 5f64.sqrt(), max_relative = 1e-12);
        for wave in [slow, fast] {
            let q = wave.mass_by_quadrature(20.0, 20_000);
            assert_relative_eq!(q, wave.mass().unwrap(), max_relative = 1e-6);
        }
        let p2 = SolitaryWaveParams::new(2.0, 0.0, &edge(1.0), 2).unwrap();
        assert!(p2.mass().is_err());
        assert!(p2.mass_any_p() > 0.0);
    }

    #[test]
    fn mass_vanishes_as_speed_approaches_alpha() {
        let masses: Vec<f64> = [1.1, 1.01, 1.001, 1.0001]
            .iter()
            .map(|&c| SolitaryWaveParams::new(c, 0.0, &edge(1.0), 1).unwrap().mass().unwrap())
            .collect();
        assert!(masses.windows(2).all(|w| w[1] < w[0]));
        // 12 √(c (c - 1)) for μ = α = γ = 1
        assert!(masses[3] < 0.15);
    }

    #[test]
    fn far_field_is_zero_not_nan() {
        let wave = SolitaryWaveParams::new(5.0, 0.0, &edge(1.0), 1).unwrap();
        assert_eq!(wave.profile(1e6, 0.0), 0.0);
        assert!(wave.profile(700.0, 0.0).is_finite());
    }

    #[test]
    fn greens_function_values() {
        let g = GreensSpec::new(1.0).unwrap();
        for y in [0.0, 0.3, 5.0] {
            assert_eq!(g.g(0.0, y), 0.0);
        }
        assert_relative_eq!(g.g(1.0, 1.0), 0.5 * (1.0 - (-2f64).exp()), max_relative = 1e-14);
        assert_relative_eq!(g.g(1.0, 1.0), 0.432_332_358_381_693_6, max_relative = 1e-12);
        assert!(g.g(60.0, 1.0).abs() < 1e-20);
    }

    #[test]
    fn kernel_values() {
        let k = GreensSpec::new(1.0).unwrap();
        for y in [0.1, 1.0, 4.0] {
            assert!(k.k(0.0, y).abs() < 1e-16);
        }
        for x in [0.0, 0.5, 2.0] {
            assert_relative_eq!(k.k(x, x), 0.5 * (-2.0 * x).exp(), max_relative = 1e-14);
        }
        assert_relative_eq!(
            k.k(2.0, 1.0),
            0.5 * ((-3f64).exp() + (-1f64).exp()),
            max_relative = 1e-14
        );
        assert_relative_eq!(k.k(2.0, 1.0), 0.208_833_254_8, max_relative = 1e-9);
        assert!(GreensSpec::new(0.0).is_err());
    }

    /// Applies `1 - μ² ∂ₓₓ` by second differences to `x ↦ ∫ G(x,y) f(y) dy`.
    #[test]
    fn greens_function_inverts_the_operator() {
        let mu = 0.8;
        let g = GreensSpec::new(mu).unwrap();
        let f = |y: f64| (-(y - 4.0) * (y - 4.0)).exp();
        let dy = 1e-3;
        let n = 12_000;
        let apply = |x: f64| -> f64 {
            let mut s = 0.0;
            for k in 0..=n {
                let y = k as f64 * dy;
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                s += w * g.g(x, y) * f(y);
            }
            s * dy
        };
        let h = 0.05;
        for &x in &[1.5, 3.0, 4.0, 5.2, 7.0] {
            let v = apply(x);
            let lap = (apply(x + h) - 2.0 * v + apply(x - h)) / (h * h);
            let back = v - mu * mu * lap;
            assert!((back - f(x)).abs() < 2e-3, "x={x}: {back} vs {}", f(x));
        }
    }

    proptest! {
        #[test]
        fn greens_symmetric_and_bounded(mu in 0.1f64..5.0, x in 0.0f64..50.0, y in 0.0f64..50.0) {
            let g = GreensSpec::new(mu).unwrap();
            prop_assert!((g.g(x, y) - g.g(y, x)).abs() <= 1e-15 / mu);
            let bound = ((-(x - y).abs() / mu).exp() + (-(x + y) / mu).exp()) / (2.0 * mu);
            prop_assert!(g.g(x, y).abs() <= bound + 1e-15);
            prop_assert!(g.g(x, y).abs() <= 1.0 / mu);
        }

        #[test]
        fn travelling_wave_identity(c in 1.05f64..6.0, x in 0.0f64..120.0, t in 0.0f64..20.0) {
            let wave = SolitaryWaveParams::new(c, 60.0, &EdgeSpec::incoming(1.0, 1.0, 1.0, 0.0, 1.0), 1).unwrap();
            let moving = wave.profile(x, t);
            let shifted = wave.profile(x - c * t, 0.0);
            prop_assert!((moving - shifted).abs() <= 1e-12 * moving.abs().max(shifted.abs()) + 1e-300);
        }
    }
}
