use serde::{Deserialize, Serialize};

use super::{c64, Matrix, QuantumError};
use crate::atom::LevelScheme;

/// Largest composite dimension accepted by [`build_space`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceBudget {
    pub max_dim: usize,
}

impl Default for SpaceBudget {
    /// Allows the full 16-level atom with two photons per mode (dim 144).
    fn default() -> Self {
        Self { max_dim: 160 }
    }
}

/// Atom ⊗ mode a ⊗ mode b, with the atomic index slowest and mode b fastest:
/// `index = (atom · (n_a + 1) + n_a) · (n_b + 1) + n_b` where `n_a, n_b` are
/// photon numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeSpace {
    pub scheme: LevelScheme,
    pub cutoff_a: usize,
    pub cutoff_b: usize,
}

impl CompositeSpace {
    pub fn dim(&self) -> usize {
        self.scheme.len() * (self.cutoff_a + 1) * (self.cutoff_b + 1)
    }

    pub fn n_levels(&self) -> usize {
        self.scheme.len()
    }

    pub fn index(&self, atom: usize, n_a: usize, n_b: usize) -> usize {
        debug_assert!(atom < self.scheme.len() && n_a <= self.cutoff_a && n_b <= self.cutoff_b);
        (atom * (self.cutoff_a + 1) + n_a) * (self.cutoff_b + 1) + n_b
    }

    /// Inverse of [`CompositeSpace::index`].
    pub fn decompose(&self, idx: usize) -> (usize, usize, usize) {
        let nb = self.cutoff_b + 1;
        let na = self.cutoff_a + 1;
        (idx / (na * nb), (idx / nb) % na, idx % nb)
    }

    /// Number of excitations `n_a + n_b + [atom excited]` of a basis state.
    pub fn excitations(&self, idx: usize) -> usize {
        let (atom, na, nb) = self.decompose(idx);
        na + nb + usize::from(self.scheme.levels()[atom].is_excited())
    }

    /// Partial trace over both modes.
    pub fn reduced_atomic_state(&self, rho: &Matrix) -> Matrix {
        let n = self.n_levels();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = c64::new(0.0, 0.0);
                for na in 0..=self.cutoff_a {
                    for nb in 0..=self.cutoff_b {
                        acc += rho[(self.index(i, na, nb), self.index(j, na, nb))];
                    }
                }
                out[(i, j)] = acc;
            }
        }
        out
    }

    /// `ρ_atom ⊗ |0,0⟩⟨0,0|`.
    pub fn with_vacuum(&self, atomic: &Matrix) -> Result<Matrix, QuantumError> {
        let n = self.n_levels();
        if atomic.nrows() != n || atomic.ncols() != n {
            return Err(QuantumError::DimensionMismatch { expected: n, got: atomic.nrows() });
        }
        let mut out = Matrix::zeros(self.dim(), self.dim());
        for i in 0..n {
            for j in 0..n {
                out[(self.index(i, 0, 0), self.index(j, 0, 0))] = atomic[(i, j)];
            }
        }
        Ok(out)
    }
}

pub fn build_space(
    scheme: LevelScheme,
    cutoff_a: usize,
    cutoff_b: usize,
    budget: SpaceBudget,
) -> Result<CompositeSpace, QuantumError> {
    if scheme.is_empty() {
        return Err(QuantumError::InvalidSpace("no atomic levels"));
    }
    if cutoff_a < 1 || cutoff_b < 1 {
        return Err(QuantumError::InvalidSpace("photon cutoffs must be at least 1"));
    }
    let space = CompositeSpace { scheme, cutoff_a, cutoff_b };
    let dim = space.dim();
    if dim > budget.max_dim {
        return Err(QuantumError::Capacity { dim, max_dim: budget.max_dim });
    }
    Ok(space)
}
