//! Banded solves for the implicit stepper.
//!
//! Each edge contributes a tridiagonal block; the shared junction unknown
//! borders all of them (an arrowhead matrix). The junction unknown is
//! eliminated with a Schur complement, so one step costs one Thomas sweep
//! per edge. For two edges this is the same arithmetic as a single
//! tridiagonal solve over the concatenated array.

use crate::error::{Error, Result};

/// LU factors of a tridiagonal matrix (no pivoting).
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    lower: Vec<f64>,
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
}

impl TridiagonalLu {
    /// Factors the matrix with sub-diagonal `lower`, diagonal `diag` and
    /// super-diagonal `upper` (`lower[0]` and `upper[n-1]` are ignored).
    pub fn factor(lower: &[f64], diag: &[f64], upper: &[f64]) -> Result<Self> {
        let n = diag.len();
        assert!(lower.len() == n && upper.len() == n, "band lengths must match");
        let mut inv_pivot = vec![0.0; n];
        let mut l = vec![0.0; n];
        let mut pivot = diag.first().copied().unwrap_or(1.0);
        for k in 0..n {
            if k > 0 {
                l[k] = lower[k] * inv_pivot[k - 1];
                pivot = diag[k] - l[k] * upper[k - 1];
            }
            if pivot.abs() <= f64::EPSILON * diag[k].abs().max(1.0) || !pivot.is_finite() {
                return Err(Error::SingularMatrix(format!("zero pivot at row {k}")));
            }
            inv_pivot[k] = 1.0 / pivot;
        }
        Ok(Self {
            lower: l,
            upper: upper.to_vec(),
            inv_pivot,
        })
    }

    /// Constant-coefficient symmetric band `[off, diag, off]` of size `n`.
    pub fn factor_constant(n: usize, off: f64, diag: f64) -> Result<Self> {
        Self::factor(&vec![off; n], &vec![diag; n], &vec![off; n])
    }

    pub fn len(&self) -> usize {
        self.inv_pivot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv_pivot.is_empty()
    }

    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        let n = self.len();
        debug_assert_eq!(rhs.len(), n);
        for k in 1..n {
            rhs[k] -= self.lower[k] * rhs[k - 1];
        }
        if n == 0 {
            return;
        }
        rhs[n - 1] *= self.inv_pivot[n - 1];
        for k in (0..n - 1).rev() {
            rhs[k] = (rhs[k] - self.upper[k] * rhs[k + 1]) * self.inv_pivot[k];
        }
    }
}

/// One edge's interior block `off·v[k-1] + diag·v[k] + off·v[k+1]`, whose
/// first row also sees the junction unknown with coefficient `off`.
#[derive(Debug, Clone)]
pub struct EdgeBlock {
    pub off: f64,
    pub diag: f64,
    lu: TridiagonalLu,
    /// `T⁻¹ (off · e₁)`: the block's response to a unit junction value.
    junction_response: Vec<f64>,
}

impl EdgeBlock {
    pub fn new(n: usize, off: f64, diag: f64) -> Result<Self> {
        let lu = TridiagonalLu::factor_constant(n, off, diag)?;
        let mut junction_response = vec![0.0; n];
        if n > 0 {
            junction_response[0] = off;
        }
        lu.solve_in_place(&mut junction_response);
        Ok(Self {
            off,
            diag,
            lu,
            junction_response,
        })
    }

    pub fn len(&self) -> usize {
        self.lu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lu.is_empty()
    }
}

/// Arrowhead system: edge blocks plus one junction row
/// `Σᵢ wᵢ (vᵢ[0] - h) = r`.
#[derive(Debug, Clone)]
pub struct JunctionSystem {
    blocks: Vec<EdgeBlock>,
    weights: Vec<f64>,
    schur: f64,
}

impl JunctionSystem {
    pub fn new(blocks: Vec<EdgeBlock>, weights: Vec<f64>) -> Result<Self> {
        assert_eq!(blocks.len(), weights.len());
        // Eliminating vᵢ = yᵢ - h zᵢ from the junction row leaves
        // h · Σ wᵢ (1 + zᵢ[0]) = Σ wᵢ yᵢ[0] - r.
        let schur: f64 = blocks
            .iter()
            .zip(&weights)
            .map(|(b, w)| w * (1.0 + b.junction_response.first().copied().unwrap_or(0.0)))
            .sum();
        if !schur.is_finite() || schur.abs() < 1e-300 {
            return Err(Error::SingularMatrix(format!(
                "junction Schur complement is {schur:e} for weights {weights:?}"
            )));
        }
        Ok(Self { blocks, weights, schur })
    }

    pub fn blocks(&self) -> &[EdgeBlock] {
        &self.blocks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Solves in place: on entry `rhs[i]` holds edge `i`'s interior right-hand
    /// side, on exit its interior solution. Returns the junction value.
    pub fn solve(&self, rhs: &mut [Vec<f64>], junction_rhs: f64) -> f64 {
        let mut numer = -junction_rhs;
        for ((block, w), r) in self.blocks.iter().zip(&self.weights).zip(rhs.iter_mut()) {
            block.lu.solve_in_place(r);
            numer += w * r.first().copied().unwrap_or(0.0);
        }
        let h = numer / self.schur;
        for (block, r) in self.blocks.iter().zip(rhs.iter_mut()) {
            for (v, z) in r.iter_mut().zip(&block.junction_response) {
                *v -= h * z;
            }
        }
        h
    }

    /// Dense copy of the full matrix, unknowns ordered as
    /// `[h, edge 0 interior…, edge 1 interior…, …]` with the junction row first.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = 1 + self.blocks.iter().map(|b| b.len()).sum::<usize>();
        let mut m = vec![vec![0.0; n]; n];
        let mut offset = 1;
        for (block, w) in self.blocks.iter().zip(&self.weights) {
            m[0][0] -= w;
            if !block.is_empty() {
                m[0][offset] += w;
            }
            for k in 0..block.len() {
                let row = offset + k;
                m[row][row] = block.diag;
                if k == 0 {
                    m[row][0] = block.off;
                } else {
                    m[row][row - 1] = block.off;
                }
                if k + 1 < block.len() {
                    m[row][row + 1] = block.off;
                }
            }
            offset += block.len();
        }
        m
    }
}
