use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use super::liouvillian::{unvectorize, Liouvillian};
use super::{c64, Matrix, QuantumError};

/// Density matrix on the composite space.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    pub matrix: Matrix,
}

impl DensityOperator {
    pub fn new(matrix: Matrix) -> Result<Self, QuantumError> {
        if matrix.nrows() != matrix.ncols() {
            return Err(QuantumError::DimensionMismatch { expected: matrix.nrows(), got: matrix.ncols() });
        }
        Ok(Self { matrix })
    }

    /// Pure state `|i⟩⟨i|`.
    pub fn basis_state(dim: usize, i: usize) -> Self {
        let mut m = Matrix::zeros(dim, dim);
        m[(i, i)] = c64::new(1.0, 0.0);
        Self { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut err: f64 = 0.0;
        for j in 0..d {
            for i in 0..=j {
                err = err.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        err
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, QuantumError> {
        let herm = (&self.matrix + self.matrix.adjoint()) * faer::Scale(c64::new(0.5, 0.0));
        let mut ev = herm
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| QuantumError::Solver(format!("{e:?}")))?;
        ev.sort_by(|a, b| a.total_cmp(b));
        Ok(ev)
    }

    /// Checks Hermiticity (1e-10), unit trace (1e-10) and positivity (−1e-8).
    pub fn validate(&self) -> Result<(), QuantumError> {
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(QuantumError::InvalidState(format!("hermiticity error {herm:e}")));
        }
        let tr = self.trace();
        if (tr - c64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(QuantumError::InvalidState(format!("trace {tr}")));
        }
        let min = self.eigenvalues()?[0];
        if min < -1e-8 {
            return Err(QuantumError::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Diagonal of `Tr_modes ρ` in the order of the atomic levels.
    pub fn atomic_populations(&self, projectors: &[Matrix]) -> Vec<f64> {
        projectors.iter().map(|p| expectation(p, self).map(|v| v.re).unwrap_or(f64::NAN)).collect()
    }
}

/// `tr(op · ρ)`.
pub fn expectation(op: &Matrix, rho: &DensityOperator) -> Result<c64, QuantumError> {
    let d = rho.dim();
    if op.nrows() != d || op.ncols() != d {
        return Err(QuantumError::DimensionMismatch { expected: d, got: op.nrows() });
    }
    let mut acc = c64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            acc += op[(i, k)] * rho.matrix[(k, i)];
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// Dense LU for small generators, sparse LU otherwise.
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateOptions {
    pub solver: SolverKind,
    /// Largest number of retained unknowns solved densely under [`SolverKind::Auto`].
    pub dense_limit: usize,
    /// Relative residual tolerance `‖L[ρ]‖ / ‖L‖`.
    pub tolerance: f64,
    /// Run the Hermiticity/trace/positivity checks on the result.
    pub validate: bool,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        Self { solver: SolverKind::Auto, dense_limit: 300, tolerance: 1e-8, validate: true }
    }
}

/// Solves `L[ρ] = 0, tr ρ = 1` by replacing one generator row by the trace
/// condition. Only population rows `(k, k)` are linearly dependent, so the
/// replaced row is the population row with the largest diagonal magnitude.
///
/// Matrix elements not connected to the populations through the generator
/// (symmetry sectors such as a conserved `Δm`) vanish in a unique steady state
/// and are dropped before factorizing.
pub fn steady_state(l: &Liouvillian, opts: &SteadyStateOptions) -> Result<DensityOperator, QuantumError> {
    let n = l.size();
    let dim = l.dim();
    let pivot_row = (0..dim)
        .map(|k| k + dim * k)
        .map(|r| (r, l.diagonal(r).norm()))
        .fold((0, f64::MIN), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0;
    let sector = population_sector(l);
    let m = sector.len();
    let mut pos = vec![usize::MAX; n];
    for (k, &r) in sector.iter().enumerate() {
        pos[r] = k;
    }
    let dense = match opts.solver {
        SolverKind::Dense => true,
        SolverKind::Sparse => false,
        SolverKind::Auto => m <= opts.dense_limit,
    };
    let mut xs = vec![c64::new(0.0, 0.0); n];
    if dense {
        let mut a = Matrix::zeros(m, m);
        for &r in &sector {
            if r == pivot_row {
                continue;
            }
            for (c, v) in l.row(r) {
                a[(pos[r], pos[c])] = v;
            }
        }
        for k in 0..dim {
            a[(pos[pivot_row], pos[k + dim * k])] = c64::new(1.0, 0.0);
        }
        let mut rhs = Matrix::zeros(m, 1);
        rhs[(pos[pivot_row], 0)] = c64::new(1.0, 0.0);
        let x = a.partial_piv_lu().solve(&rhs);
        for (k, &r) in sector.iter().enumerate() {
            xs[r] = x[(k, 0)];
        }
    } else {
        solve_sparse_hermitian(l, pivot_row, &sector, &pos, &mut xs)?;
    }

    // a degenerate null space makes the bordered system singular: the solve
    // either blows up or produces entries no density matrix can have
    if xs.iter().any(|v| !v.re.is_finite() || !v.im.is_finite() || v.norm() > 1.0 + 1e-6) {
        return Err(QuantumError::NonUnique);
    }
    let mut resid = vec![c64::new(0.0, 0.0); n];
    l.apply(&xs, &mut resid);
    let residual = resid.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let tolerance = opts.tolerance * l.norm();
    if residual > tolerance {
        return Err(QuantumError::Convergence { residual, tolerance });
    }
    let rho = DensityOperator { matrix: unvectorize(&xs, dim) };
    if opts.validate {
        rho.validate()?;
    }
    Ok(rho)
}

/// Sorted vectorized indices in the connected components (of the generator's
/// sparsity graph) that contain a population.
fn population_sector(l: &Liouvillian) -> Vec<usize> {
    let n = l.size();
    let d = l.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for r in 0..n {
        for (c, _) in l.row(r) {
            let (a, b) = (find(&mut parent, r), find(&mut parent, c));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut keep = vec![false; n];
    for k in 0..d {
        let root = find(&mut parent, k + d * k);
        keep[root] = true;
    }
    (0..n).filter(|&r| keep[find(&mut parent, r)]).collect()
}

/// Sparse LU on the real parametrization of Hermitian `ρ`: for `i < j` the slot
/// of `(i, j)` holds `Re ρ_ij` and the slot of `(j, i)` holds `Im ρ_ij`,
/// diagonal slots hold the populations. Only the rows with `i ≤ j` are
/// independent, which halves the work relative to the complex system.
fn solve_sparse_hermitian(
    l: &Liouvillian,
    pivot_row: usize,
    sector: &[usize],
    pos: &[usize],
    x: &mut [c64],
) -> Result<(), QuantumError> {
    let m = sector.len();
    let d = l.dim();
    let i_unit = c64::new(0.0, 1.0);
    let mut trips: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(4 * l.nnz());
    for &r in sector {
        let (i, j) = (r % d, r / d);
        if i > j || r == pivot_row {
            continue;
        }
        let (row_re, row_im) = (pos[i + d * j], pos[j + d * i]);
        let mut push = |col: usize, z: c64| {
            if z.re != 0.0 {
                trips.push(Triplet::new(row_re, pos[col], z.re));
            }
            if i != j && z.im != 0.0 {
                trips.push(Triplet::new(row_im, pos[col], z.im));
            }
        };
        for (c, v) in l.row(r) {
            let (k, q) = (c % d, c / d);
            match k.cmp(&q) {
                std::cmp::Ordering::Less => {
                    push(k + d * q, v);
                    push(q + d * k, v * i_unit);
                }
                std::cmp::Ordering::Equal => push(c, v),
                std::cmp::Ordering::Greater => {
                    push(q + d * k, v);
                    push(k + d * q, -v * i_unit);
                }
            }
        }
    }
    trips.extend((0..d).map(|k| Triplet::new(pos[pivot_row], pos[k + d * k], 1.0)));
    let a = SparseColMat::<usize, f64>::try_new_from_triplets(m, m, &trips)
        .map_err(|e| QuantumError::Solver(format!("{e:?}")))?;
    let lu = a.sp_lu().map_err(|e| match e {
        faer::sparse::linalg::LuError::SymbolicSingular { .. } => QuantumError::NonUnique,
        e => QuantumError::Solver(format!("{e:?}")),
    })?;
    let mut rhs = faer::Mat::<f64>::zeros(m, 1);
    rhs[(pos[pivot_row], 0)] = 1.0;
    let y = lu.solve(&rhs);
    for &r in sector {
        let (i, j) = (r % d, r / d);
        let (lo, hi) = (pos[i.min(j) + d * i.max(j)], pos[i.max(j) + d * i.min(j)]);
        x[r] = match i.cmp(&j) {
            std::cmp::Ordering::Less => c64::new(y[(lo, 0)], y[(hi, 0)]),
            std::cmp::Ordering::Equal => c64::new(y[(lo, 0)], 0.0),
            std::cmp::Ordering::Greater => c64::new(y[(lo, 0)], -y[(hi, 0)]),
        };
    }
    Ok(())
}
