//! Star networks: semi-infinite edges glued at one junction, each edge
//! carrying its own gBBMB coefficients.
//!
//! Edge 0 (`e₁` in one-based numbering) is the single incoming edge. Every edge is
//! parameterized by the distance `s ≥ 0` from the junction, so the incoming
//! edge is the mirror image of `(-∞, 0]` and its advective flux enters the
//! local equations with sign `σ = -1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signed sums below this magnitude count as exactly zero.
pub const ZERO_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    Incoming,
    Outgoing,
}

impl Orientation {
    /// `σ = -1` for incoming edges, `+1` for outgoing ones.
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Incoming => -1.0,
            Orientation::Outgoing => 1.0,
        }
    }
}

/// Closure imposed at the junction in addition to continuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JunctionCondition {
    /// Total dispersive, advective and viscous flux balances across the
    /// junction; total mass is conserved for any coefficients.
    #[default]
    MassConservation,
    /// Classical flux matching of `μ² u_x` only.
    Kirchhoff,
}

/// One semi-infinite edge, truncated to `[0, truncation_length]` for computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub orientation: Orientation,
    /// Dispersion coefficient.
    pub mu: f64,
    /// Linear advection speed.
    pub alpha: f64,
    /// Nonlinear advection weight, in `[0, 1]`.
    pub gamma: f64,
    /// Viscoelastic dissipation.
    pub nu: f64,
    pub truncation_length: f64,
}

impl EdgeSpec {
    pub fn new(orientation: Orientation, mu: f64, alpha: f64, gamma: f64, nu: f64, length: f64) -> Self {
        Self {
            orientation,
            mu,
            alpha,
            gamma,
            nu,
            truncation_length: length,
        }
    }

    pub fn incoming(mu: f64, alpha: f64, gamma: f64, nu: f64, length: f64) -> Self {
        Self::new(Orientation::Incoming, mu, alpha, gamma, nu, length)
    }

    pub fn outgoing(mu: f64, alpha: f64, gamma: f64, nu: f64, length: f64) -> Self {
        Self::new(Orientation::Outgoing, mu, alpha, gamma, nu, length)
    }

    pub fn sigma(&self) -> f64 {
        self.orientation.sign()
    }

    /// `f(u) = α u + γ u^{p+1} / (p+1)`.
    pub fn flux(&self, p: u32, u: f64) -> f64 {
        self.alpha * u + self.gamma * u.powi(p as i32 + 1) / (p as f64 + 1.0)
    }

    /// `f'(u) = α + γ u^p`.
    pub fn flux_speed(&self, p: u32, u: f64) -> f64 {
        self.alpha + self.gamma * u.powi(p as i32)
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidNetwork(format!("edge {}: {what}", index + 1)));
        let finite = [self.mu, self.alpha, self.gamma, self.nu, self.truncation_length]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return bad("coefficients must be finite");
        }
        if self.mu <= 0.0 {
            return bad(&format!("mu must be positive, got {}", self.mu));
        }
        if self.alpha < 0.0 {
            return bad(&format!("alpha must be nonnegative, got {}", self.alpha));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad(&format!("gamma must lie in [0, 1], got {}", self.gamma));
        }
        if self.nu < 0.0 {
            return bad(&format!("nu must be nonnegative, got {}", self.nu));
        }
        if self.truncation_length <= 0.0 {
            return bad(&format!(
                "truncation length must be positive, got {}",
                self.truncation_length
            ));
        }
        Ok(())
    }
}

/// Global well-posedness verdict from the sign of the junction energy flux.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GwpClass {
    /// `p` even with `Σσα ≥ 0` and `Σσγ ≥ 0`.
    EnergyNonIncreasingEvenP,
    /// `Σσα = Σσγ = 0`, any `p`.
    EnergyNonIncreasingAnyP,
    Inconclusive,
}

impl GwpClass {
    pub fn energy_non_increasing(self) -> bool {
        !matches!(self, GwpClass::Inconclusive)
    }
}

/// A validated star network. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StarNetwork {
    edges: Vec<EdgeSpec>,
    p: u32,
    junction: JunctionCondition,
}

impl StarNetwork {
    /// Validates coefficients and topology: at least two edges, exactly one
    /// incoming edge and it comes first, `p ≥ 1`.
    pub fn new(edges: Vec<EdgeSpec>, p: u32, junction: JunctionCondition) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::InvalidNetwork(format!(
                "a star network needs at least two edges, got {}",
                edges.len()
            )));
        }
        if p < 1 {
            return Err(Error::InvalidNetwork("nonlinearity power p must be >= 1".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            e.validate(i)?;
        }
        let incoming: Vec<usize> = edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.orientation == Orientation::Incoming)
            .map(|(i, _)| i)
            .collect();
        match incoming.as_slice() {
            [0] => {}
            [] => return Err(Error::InvalidNetwork("no incoming edge".into())),
            [i] => {
                return Err(Error::InvalidNetwork(format!(
                    "the incoming edge must be edge 1, found it at edge {}",
                    i + 1
                )))
            }
            many => {
                return Err(Error::InvalidNetwork(format!(
                    "exactly one incoming edge is supported, found {}",
                    many.len()
                )))
            }
        }
        Ok(Self { edges, p, junction })
    }

    /// Two-edge network `e₁ → e₂`.
    pub fn two_edge(incoming: EdgeSpec, outgoing: EdgeSpec, p: u32, junction: JunctionCondition) -> Result<Self> {
        Self::new(vec![incoming, outgoing], p, junction)
    }

    pub fn edges(&self) -> &[EdgeSpec] {
        &self.edges
    }

    pub fn edge(&self, i: usize) -> &EdgeSpec {
        &self.edges[i]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn junction_condition(&self) -> JunctionCondition {
        self.junction
    }

    /// Same network with a different junction closure.
    pub fn with_junction_condition(&self, junction: JunctionCondition) -> Self {
        Self {
            junction,
            ..self.clone()
        }
    }

    /// Advective flux of edge `edge_index` evaluated at `u`.
    pub fn advective_flux(&self, edge_index: usize, u: f64) -> f64 {
        self.edges[edge_index].flux(self.p, u)
    }

    /// `Σᵢ σᵢ αᵢ`.
    pub fn signed_alpha_sum(&self) -> f64 {
        self.edges.iter().map(|e| e.sigma() * e.alpha).sum()
    }

    /// `Σᵢ σᵢ γᵢ`.
    pub fn signed_gamma_sum(&self) -> f64 {
        self.edges.iter().map(|e| e.sigma() * e.gamma).sum()
    }

    /// Which energy-based global existence criterion applies, if any.
    pub fn gwp_classification(&self) -> GwpClass {
        let sa = self.signed_alpha_sum();
        let sg = self.signed_gamma_sum();
        if sa.abs() <= ZERO_SUM_TOLERANCE && sg.abs() <= ZERO_SUM_TOLERANCE {
            GwpClass::EnergyNonIncreasingAnyP
        } else if self.p.is_multiple_of(2) && sa >= -ZERO_SUM_TOLERANCE && sg >= -ZERO_SUM_TOLERANCE {
            GwpClass::EnergyNonIncreasingEvenP
        } else {
            GwpClass::Inconclusive
        }
    }
}
