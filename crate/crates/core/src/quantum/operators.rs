use super::space::CompositeSpace;
use super::{c64, Matrix};
use crate::fields::Spherical;

/// System operators on the composite space, stored dense.
#[derive(Debug, Clone)]
pub struct Operators {
    pub dim: usize,
    pub a: Matrix,
    pub b: Matrix,
    /// Atomic lowering operator per polarization, indexed by [`Spherical::index`];
    /// `σ_q = Σ c |g⟩⟨e|` over the couplings with polarization `q`.
    pub sigma: [Matrix; 3],
    /// `|i⟩⟨i| ⊗ 1` for every atomic level.
    pub level_projectors: Vec<Matrix>,
}

impl Operators {
    pub fn sigma(&self, q: Spherical) -> &Matrix {
        &self.sigma[q.index()]
    }

    pub fn identity(&self) -> Matrix {
        Matrix::identity(self.dim, self.dim)
    }
}

pub fn build_operators(space: &CompositeSpace) -> Operators {
    let dim = space.dim();
    let levels = space.n_levels();
    let mut a = Matrix::zeros(dim, dim);
    let mut b = Matrix::zeros(dim, dim);
    for atom in 0..levels {
        for na in 0..=space.cutoff_a {
            for nb in 0..=space.cutoff_b {
                let col = space.index(atom, na, nb);
                if na > 0 {
                    a[(space.index(atom, na - 1, nb), col)] = c64::new((na as f64).sqrt(), 0.0);
                }
                if nb > 0 {
                    b[(space.index(atom, na, nb - 1), col)] = c64::new((nb as f64).sqrt(), 0.0);
                }
            }
        }
    }

    let mut sigma = [Matrix::zeros(dim, dim), Matrix::zeros(dim, dim), Matrix::zeros(dim, dim)];
    for c in space.scheme.couplings() {
        let s = &mut sigma[c.q.index()];
        for na in 0..=space.cutoff_a {
            for nb in 0..=space.cutoff_b {
                s[(space.index(c.ground, na, nb), space.index(c.excited, na, nb))] += c64::new(c.amplitude, 0.0);
            }
        }
    }

    let level_projectors = (0..levels)
        .map(|atom| {
            let mut p = Matrix::zeros(dim, dim);
            for na in 0..=space.cutoff_a {
                for nb in 0..=space.cutoff_b {
                    let i = space.index(atom, na, nb);
                    p[(i, i)] = c64::new(1.0, 0.0);
                }
            }
            p
        })
        .collect();

    Operators { dim, a, b, sigma, level_projectors }
}
