use serde::{Deserialize, Serialize};

use super::liouvillian::{unvectorize, vectorize, Liouvillian};
use super::steady::DensityOperator;
use super::{c64, QuantumError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step (s); zero lets the integrator pick one from `‖L‖`.
    pub initial_step: f64,
    /// Smallest admissible step relative to the integration span.
    pub min_step_fraction: f64,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, initial_step: 0.0, min_step_fraction: 1e-14, max_steps: 5_000_000 }
    }
}

// Dormand–Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand–Prince integrator for `dx/dt = L x` on vectorized states.
pub struct Integrator<'a> {
    l: &'a Liouvillian,
    opts: EvolveOptions,
    k: Vec<Vec<c64>>,
    stage: Vec<c64>,
    x5: Vec<c64>,
    h: f64,
}

impl<'a> Integrator<'a> {
    pub fn new(l: &'a Liouvillian, opts: EvolveOptions) -> Self {
        let n = l.size();
        let h = if opts.initial_step > 0.0 {
            opts.initial_step
        } else {
            // spectral radius bounded by the largest row sum
            let rate = (0..n)
                .map(|r| l.row(r).map(|(_, v)| v.norm()).sum::<f64>())
                .fold(0.0, f64::max)
                .max(1e-300);
            0.1 / rate
        };
        Self {
            l,
            opts,
            k: vec![vec![c64::new(0.0, 0.0); n]; 7],
            stage: vec![c64::new(0.0, 0.0); n],
            x5: vec![c64::new(0.0, 0.0); n],
            h,
        }
    }

    /// Advances `x` from `t0` to exactly `t1`.
    pub fn advance(&mut self, x: &mut [c64], t0: f64, t1: f64) -> Result<(), QuantumError> {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let min_step = self.opts.min_step_fraction * span.max(self.h);
        let n = x.len();
        let mut t = t0;
        let mut steps = 0usize;
        // first-same-as-last: k[0] holds L x at the current point
        self.l.apply(x, &mut self.k[0]);
        while t < t1 {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(QuantumError::Stiffness { t, h: self.h });
            }
            let last = t + self.h >= t1;
            let h = if last { t1 - t } else { self.h };
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = x[i];
                    for (j, &a) in A[s].iter().enumerate().take(s) {
                        if a != 0.0 {
                            acc += self.k[j][i] * (h * a);
                        }
                    }
                    self.stage[i] = acc;
                }
                let (_, tail) = self.k.split_at_mut(s);
                self.l.apply(&self.stage, &mut tail[0]);
            }
            let mut err_sq = 0.0;
            for i in 0..n {
                let mut y5 = x[i];
                let mut y4 = x[i];
                for s in 0..7 {
                    if B5[s] != 0.0 {
                        y5 += self.k[s][i] * (h * B5[s]);
                    }
                    if B4[s] != 0.0 {
                        y4 += self.k[s][i] * (h * B4[s]);
                    }
                }
                let scale = self.opts.atol + self.opts.rtol * x[i].norm().max(y5.norm());
                err_sq += ((y5 - y4).norm() / scale).powi(2);
                self.x5[i] = y5;
            }
            let err = (err_sq / n as f64).sqrt();
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                x.copy_from_slice(&self.x5);
                self.k.swap(0, 6);
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.h = h * (0.9 * err.powf(-0.25)).clamp(0.1, 0.9);
                if self.h < min_step {
                    return Err(QuantumError::Stiffness { t, h: self.h });
                }
            }
        }
        Ok(())
    }
}

/// Integrates `dρ/dt = L[ρ]` from `t_grid[0]` and returns the state at every
/// grid point (the first entry is `rho0` itself).
pub fn time_evolve(
    rho0: &DensityOperator,
    l: &Liouvillian,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<DensityOperator>, QuantumError> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(QuantumError::InvalidGrid);
    }
    if rho0.dim() != l.dim() {
        return Err(QuantumError::DimensionMismatch { expected: l.dim(), got: rho0.dim() });
    }
    let mut x = vectorize(&rho0.matrix);
    let mut out = vec![rho0.clone()];
    let mut integ = Integrator::new(l, *opts);
    for w in t_grid.windows(2) {
        integ.advance(&mut x, w[0], w[1])?;
        out.push(DensityOperator { matrix: unvectorize(&x, l.dim()) });
    }
    Ok(out)
}
