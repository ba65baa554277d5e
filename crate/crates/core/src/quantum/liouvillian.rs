use std::collections::HashMap;

use super::operators::Operators;
use super::system::SystemParams;
use super::{c64, Matrix};
use crate::fields::Spherical;

/// Lindblad generator acting on column-stacked density matrices,
/// `vec(ρ)[i + dim·j] = ρ_ij`, stored in compressed sparse rows.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<c64>,
}

impl Liouvillian {
    /// Dimension of the underlying Hilbert space.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Size of the vectorized state, `dim²`.
    pub fn size(&self) -> usize {
        self.dim * self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, c64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// `out = L · x`.
    pub fn apply(&self, x: &[c64], out: &mut [c64]) {
        debug_assert_eq!(x.len(), self.size());
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = c64::new(0.0, 0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    pub fn apply_to_matrix(&self, rho: &Matrix) -> Matrix {
        let x = vectorize(rho);
        let mut y = vec![c64::new(0.0, 0.0); x.len()];
        self.apply(&x, &mut y);
        unvectorize(&y, self.dim)
    }

    /// Frobenius norm of the generator.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn diagonal(&self, r: usize) -> c64 {
        self.row(r).find(|&(c, _)| c == r).map(|(_, v)| v).unwrap_or(c64::new(0.0, 0.0))
    }

    /// Triplets `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, c64)> + '_ {
        (0..self.size()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `L + diag(shift)`, e.g. a detuning-dependent commutator term.
    pub fn with_diagonal(&self, shift: &[c64]) -> Liouvillian {
        let n = self.size();
        debug_assert_eq!(shift.len(), n);
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + n);
        let mut values = Vec::with_capacity(self.nnz() + n);
        row_ptr.push(0);
        for r in 0..n {
            let mut placed = shift[r] == c64::new(0.0, 0.0);
            for (c, v) in self.row(r) {
                if !placed && c >= r {
                    if c == r {
                        col_idx.push(c);
                        values.push(v + shift[r]);
                        placed = true;
                        continue;
                    }
                    col_idx.push(r);
                    values.push(shift[r]);
                    placed = true;
                }
                col_idx.push(c);
                values.push(v);
            }
            if !placed {
                col_idx.push(r);
                values.push(shift[r]);
            }
            row_ptr.push(col_idx.len());
        }
        Liouvillian { dim: self.dim, row_ptr, col_idx, values }
    }

    fn from_entries(dim: usize, entries: HashMap<(usize, usize), c64>) -> Self {
        let n = dim * dim;
        let mut sorted: Vec<((usize, usize), c64)> = entries.into_iter().filter(|(_, v)| *v != c64::new(0.0, 0.0)).collect();
        sorted.sort_unstable_by_key(|&(k, _)| k);
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        for ((r, c), v) in sorted {
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { dim, row_ptr, col_idx, values }
    }
}

pub fn vectorize(rho: &Matrix) -> Vec<c64> {
    let dim = rho.nrows();
    let mut v = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        for i in 0..dim {
            v.push(rho[(i, j)]);
        }
    }
    v
}

pub fn unvectorize(v: &[c64], dim: usize) -> Matrix {
    Matrix::from_fn(dim, dim, |i, j| v[i + dim * j])
}

fn nonzeros(m: &Matrix) -> Vec<(usize, usize, c64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != c64::new(0.0, 0.0) {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Accumulates superoperators `ρ ↦ A ρ B` into a triplet map.
struct SuperBuilder {
    dim: usize,
    entries: HashMap<(usize, usize), c64>,
}

impl SuperBuilder {
    fn add(&mut self, row: usize, col: usize, v: c64) {
        *self.entries.entry((row, col)).or_insert(c64::new(0.0, 0.0)) += v;
    }

    /// `ρ ↦ s · A ρ`
    fn left(&mut self, a: &[(usize, usize, c64)], s: c64) {
        let d = self.dim;
        for &(i, k, v) in a {
            for j in 0..d {
                self.add(i + d * j, k + d * j, s * v);
            }
        }
    }

    /// `ρ ↦ s · ρ B`
    fn right(&mut self, b: &[(usize, usize, c64)], s: c64) {
        let d = self.dim;
        for &(l, j, v) in b {
            for i in 0..d {
                self.add(i + d * j, i + d * l, s * v);
            }
        }
    }

    /// `ρ ↦ s · C ρ C†`
    fn sandwich(&mut self, c: &[(usize, usize, c64)], s: c64) {
        let d = self.dim;
        for &(i, k, v) in c {
            for &(j, l, w) in c {
                // (C ρ C†)_ij = C_ik ρ_kl conj(C_jl)
                self.add(i + d * j, k + d * l, s * v * w.conj());
            }
        }
    }

    fn dissipator(&mut self, c: &Matrix, rate: f64) {
        if rate == 0.0 {
            return;
        }
        let cdc = c.adjoint() * c;
        let c_nz = nonzeros(c);
        let cdc_nz = nonzeros(&cdc);
        let r = c64::new(rate, 0.0);
        self.sandwich(&c_nz, r);
        self.left(&cdc_nz, -0.5 * r);
        self.right(&cdc_nz, -0.5 * r);
    }
}

/// `L[ρ] = −i[H, ρ] + Σ_k D[c_k]ρ` with cavity collapse operators `√(2κ₀) a`,
/// `√(2κ_ext) a` (same for `b`) and atomic collapse operators `√(2γ) σ_q`.
pub fn build_liouvillian(h: &Matrix, ops: &Operators, params: &SystemParams) -> Liouvillian {
    let dim = ops.dim;
    let mut sb = SuperBuilder { dim, entries: HashMap::new() };
    let h_nz = nonzeros(h);
    sb.left(&h_nz, c64::new(0.0, -1.0));
    sb.right(&h_nz, c64::new(0.0, 1.0));

    for mode in [&ops.a, &ops.b] {
        sb.dissipator(mode, 2.0 * params.kappa0);
        sb.dissipator(mode, 2.0 * params.kappa_ext);
    }
    for q in Spherical::ALL {
        sb.dissipator(ops.sigma(q), 2.0 * params.gamma);
    }
    Liouvillian::from_entries(dim, sb.entries)
}
