use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::StarNetwork;
use crate::waves::SolitaryWaveParams;

/// Uniform space-time grid shared by every edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dx: f64,
    pub dt: f64,
    /// Final simulated time.
    pub horizon: f64,
}

impl GridSpec {
    pub fn new(dx: f64, dt: f64, horizon: f64) -> Result<Self> {
        let g = Self { dx, dt, horizon };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0 && self.dx.is_finite()) {
            return Err(Error::InvalidGrid(format!("dx must be positive, got {}", self.dx)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be nonnegative, got {}",
                self.horizon
            )));
        }
        Ok(())
    }

    /// Number of time steps to reach the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Number of `dx` intervals on each edge; every truncation length must be
    /// an integer multiple of `dx` and span at least three intervals.
    pub fn intervals(&self, network: &StarNetwork) -> Result<Vec<usize>> {
        self.validate()?;
        network
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let ratio = e.truncation_length / self.dx;
                let m = ratio.round();
                if (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
                    return Err(Error::InvalidGrid(format!(
                        "edge {} length {} is not a multiple of dx = {}",
                        i + 1,
                        e.truncation_length,
                        self.dx
                    )));
                }
                if m < 3.0 {
                    return Err(Error::InvalidGrid(format!(
                        "edge {} needs at least 3 intervals, has {}",
                        i + 1,
                        m
                    )));
                }
                Ok(m as usize)
            })
            .collect()
    }
}

/// Samples of the solution on every edge at one time level.
///
/// Every edge is sampled at `s_k = k·dx`, `k = 0..=M`, measured from the
/// junction. The `k = 0` sample is the single shared junction value `h`;
/// the `k = M` sample is the homogeneous Dirichlet boundary and always 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub time: f64,
    junction: f64,
    /// `tails[i][k-1]` holds `u_i(s_k)` for `k = 1..=M_i`.
    tails: Vec<Vec<f64>>,
}

impl NetworkState {
    pub fn zeros(intervals: &[usize]) -> Self {
        Self {
            time: 0.0,
            junction: 0.0,
            tails: intervals.iter().map(|&m| vec![0.0; m]).collect(),
        }
    }

    /// Samples `f(edge, s)`; the junction value is taken from edge 0 and the
    /// outer boundary samples are pinned to 0.
    pub fn from_fn(intervals: &[usize], dx: f64, f: impl Fn(usize, f64) -> f64) -> Self {
        let junction = f(0, 0.0);
        let tails = intervals
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                let mut v: Vec<f64> = (1..=m).map(|k| f(i, k as f64 * dx)).collect();
                v[m - 1] = 0.0;
                v
            })
            .collect();
        Self {
            time: 0.0,
            junction,
            tails,
        }
    }

    /// Builds a state from full per-edge arrays (junction at index 0).
    /// Junction samples must agree and boundary samples must vanish.
    pub fn from_edge_samples(samples: Vec<Vec<f64>>, time: f64) -> Result<Self> {
        let first = samples
            .first()
            .and_then(|s| s.first())
            .copied()
            .ok_or_else(|| Error::InvalidState("no samples".into()))?;
        let mut tails = Vec::with_capacity(samples.len());
        for (i, s) in samples.into_iter().enumerate() {
            if s.len() < 2 {
                return Err(Error::InvalidState(format!("edge {} has fewer than 2 samples", i + 1)));
            }
            if (s[0] - first).abs() > 1e-12 * first.abs().max(1.0) {
                return Err(Error::InvalidState(format!(
                    "junction discontinuity: edge 1 has {first}, edge {} has {}",
                    i + 1,
                    s[0]
                )));
            }
            let last = *s.last().unwrap();
            if last.abs() > 1e-12 {
                return Err(Error::InvalidState(format!(
                    "edge {} boundary sample must be 0, got {last}",
                    i + 1
                )));
            }
            let mut tail = s[1..].to_vec();
            *tail.last_mut().unwrap() = 0.0;
            tails.push(tail);
        }
        Ok(Self {
            time,
            junction: first,
            tails,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.tails.len()
    }

    /// Number of intervals `M` on edge `i`.
    pub fn intervals(&self, i: usize) -> usize {
        self.tails[i].len()
    }

    pub fn intervals_all(&self) -> Vec<usize> {
        self.tails.iter().map(Vec::len).collect()
    }

    pub fn junction(&self) -> f64 {
        self.junction
    }

    /// `u_i(s_k)`.
    #[inline]
    pub fn value(&self, i: usize, k: usize) -> f64 {
        if k == 0 {
            self.junction
        } else {
            self.tails[i][k - 1]
        }
    }

    /// Full samples of edge `i`, junction first.
    pub fn edge_samples(&self, i: usize) -> Vec<f64> {
        std::iter::once(self.junction)
            .chain(self.tails[i].iter().copied())
            .collect()
    }

    pub(crate) fn tail(&self, i: usize) -> &[f64] {
        &self.tails[i]
    }

    pub(crate) fn set_interior(&mut self, i: usize, interior: &[f64]) {
        let m = self.tails[i].len();
        self.tails[i][..m - 1].copy_from_slice(interior);
        self.tails[i][m - 1] = 0.0;
    }

    pub(crate) fn set_junction(&mut self, h: f64) {
        self.junction = h;
    }

    pub fn max_abs(&self) -> f64 {
        self.tails
            .iter()
            .flatten()
            .fold(self.junction.abs(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.junction.is_finite() && self.tails.iter().flatten().all(|v| v.is_finite())
    }

    /// `a·self + b·other` on the same layout.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        assert_eq!(self.intervals_all(), other.intervals_all());
        Self {
            time: self.time,
            junction: a * self.junction + b * other.junction,
            tails: self
                .tails
                .iter()
                .zip(&other.tails)
                .map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect())
                .collect(),
        }
    }

    /// All samples as one array: edge 0 reversed (outer boundary first), the
    /// junction, then every outgoing edge from junction to boundary.
    pub fn global_samples(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.tails[0].iter().rev().copied().collect();
        out.push(self.junction);
        for t in &self.tails[1..] {
            out.extend_from_slice(t);
        }
        out
    }

    /// `(edge, k)` labels matching [`Self::global_samples`].
    pub fn global_layout(&self) -> Vec<(usize, usize)> {
        let m0 = self.tails[0].len();
        let mut out: Vec<(usize, usize)> = (1..=m0).rev().map(|k| (0, k)).collect();
        out.push((0, 0));
        for (i, t) in self.tails.iter().enumerate().skip(1) {
            out.extend((1..=t.len()).map(|k| (i, k)));
        }
        out
    }
}

/// Position along the path from the incoming edge's outer end through the
/// junction, which sits at `x = L₁`. Outgoing edges all continue from `L₁`.
pub fn path_coordinate(network: &StarNetwork, edge: usize, s: f64) -> f64 {
    let l1 = network.edge(0).truncation_length;
    if edge == 0 {
        l1 - s
    } else {
        l1 + s
    }
}

/// A solitary wave laid out along path coordinates, with its shape taken from
/// the host edge's coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitaryPlacement {
    pub params: SolitaryWaveParams,
    pub host_edge: usize,
}

impl SolitaryPlacement {
    pub fn new(network: &StarNetwork, host_edge: usize, c: f64, x0: f64) -> Result<Self> {
        if host_edge >= network.num_edges() {
            return Err(Error::InvalidWave(format!(
                "host edge {} does not exist",
                host_edge + 1
            )));
        }
        let params = SolitaryWaveParams::new(c, x0, network.edge(host_edge), network.p())?;
        Ok(Self { params, host_edge })
    }

    pub fn state(&self, network: &StarNetwork, grid: &GridSpec, t: f64) -> Result<NetworkState> {
        let intervals = grid.intervals(network)?;
        let mut s = NetworkState::from_fn(&intervals, grid.dx, |i, s| {
            self.params.profile(path_coordinate(network, i, s), t)
        });
        s.time = t;
        Ok(s)
    }
}
