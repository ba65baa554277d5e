use serde::{Deserialize, Serialize};

use super::{GDistribution, Geometry, ModelConfig, SpectrumError, SpectrumResult, TransmissionTable, MHZ};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Relative decrease of the objective below which a start has converged.
    pub tolerance: f64,
    /// Smallest admissible width (rad/s).
    pub sigma_min: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iterations: 200, tolerance: 1e-8, sigma_min: 0.05 * MHZ }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub g_mean_fit: f64,
    pub g_sigma_fit: f64,
    /// Euclidean norm of the residual vector.
    pub residual_norm: f64,
    /// Covariance of `(g_mean, g_sigma)` in (rad/s)².
    pub covariance: [[f64; 2]; 2],
    pub iterations: usize,
    /// Index of the winning start.
    pub start: usize,
    pub model: Vec<f64>,
    pub warnings: Vec<String>,
}

struct Problem<'a> {
    table: &'a TransmissionTable,
    data: &'a [f64],
    template: GDistribution,
    lo: [f64; 2],
    hi: [f64; 2],
}

impl Problem<'_> {
    /// Parameters are carried in MHz to keep the normal equations well scaled.
    fn model(&self, p: [f64; 2]) -> Result<Vec<f64>, SpectrumError> {
        let dist = GDistribution { g_mean: p[0] * MHZ, g_sigma: p[1] * MHZ, ..self.template };
        self.table.average(&dist.weights()?)
    }

    fn residual(&self, p: [f64; 2]) -> Result<Vec<f64>, SpectrumError> {
        Ok(self.model(p)?.iter().zip(self.data).map(|(m, d)| m - d).collect())
    }

    fn clamp(&self, p: [f64; 2]) -> [f64; 2] {
        [p[0].clamp(self.lo[0], self.hi[0]), p[1].clamp(self.lo[1], self.hi[1])]
    }

    fn jacobian(&self, p: [f64; 2]) -> Result<Vec<[f64; 2]>, SpectrumError> {
        let h = 1e-5;
        let mut cols = Vec::with_capacity(2);
        for k in 0..2 {
            let (mut up, mut dn) = (p, p);
            up[k] += h;
            dn[k] -= h;
            let (ru, rd) = (self.residual(up)?, self.residual(dn)?);
            cols.push(ru.iter().zip(&rd).map(|(u, d)| (u - d) / (2.0 * h)).collect::<Vec<_>>());
        }
        Ok((0..self.data.len()).map(|i| [cols[0][i], cols[1][i]]).collect())
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum()
}

fn normal_equations(j: &[[f64; 2]], r: &[f64]) -> ([[f64; 2]; 2], [f64; 2]) {
    let mut a = [[0.0; 2]; 2];
    let mut b = [0.0; 2];
    for (row, &ri) in j.iter().zip(r) {
        for p in 0..2 {
            b[p] -= row[p] * ri;
            for q in 0..2 {
                a[p][q] += row[p] * row[q];
            }
        }
    }
    (a, b)
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() <= 1e-300 || !det.is_finite() {
        return None;
    }
    Some([(b[0] * a[1][1] - a[0][1] * b[1]) / det, (a[0][0] * b[1] - b[0] * a[1][0]) / det])
}

struct Run {
    p: [f64; 2],
    s: f64,
    iterations: usize,
}

/// Levenberg–Marquardt with box projection.
fn levenberg_marquardt(prob: &Problem, start: [f64; 2], opts: &FitOptions) -> Result<Run, SpectrumError> {
    let mut p = prob.clamp(start);
    let mut r = prob.residual(p)?;
    let mut s = sum_sq(&r);
    let mut lambda = 1e-3;
    let mut trace = vec![s];
    for it in 1..=opts.max_iterations {
        let j = prob.jacobian(p)?;
        let (a, b) = normal_equations(&j, &r);
        let grad = b[0].abs().max(b[1].abs());
        if grad < 1e-15 || s < 1e-28 {
            return Ok(Run { p, s, iterations: it });
        }
        loop {
            let damped = [[a[0][0] * (1.0 + lambda), a[0][1]], [a[1][0], a[1][1] * (1.0 + lambda)]];
            let step = solve2(damped, b);
            let trial = step.map(|d| prob.clamp([p[0] + d[0], p[1] + d[1]]));
            let improved = match trial {
                Some(t) => {
                    let rt = prob.residual(t)?;
                    let st = sum_sq(&rt);
                    if st < s {
                        let moved = ((t[0] - p[0]).powi(2) + (t[1] - p[1]).powi(2)).sqrt();
                        let decrease = s - st;
                        p = t;
                        r = rt;
                        s = st;
                        trace.push(s);
                        lambda = (lambda / 10.0).max(1e-12);
                        if decrease <= opts.tolerance * s.max(1e-300) || moved < 1e-12 {
                            return Ok(Run { p, s, iterations: it });
                        }
                        true
                    } else {
                        false
                    }
                }
                None => false,
            };
            if improved {
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                // no descent direction left: a (possibly constrained) minimum
                return Ok(Run { p, s, iterations: it });
            }
        }
    }
    Err(SpectrumError::FitConvergence { iterations: opts.max_iterations, trace })
}

/// Fits the mean and width of the coupling distribution to a measured
/// spectrum. The bounds and node count of `template` are kept fixed; its mean
/// and width are ignored. Multi-start: the mean starts at 25, 50 and 75 % of
/// the bounds, the width at 25 % of their span.
pub fn fit_spectrum(
    data: &SpectrumResult,
    config: &ModelConfig,
    geometry: Geometry,
    template: &GDistribution,
    opts: &FitOptions,
) -> Result<FitResult, SpectrumError> {
    template.validate()?;
    if data.len() < 3 {
        return Err(SpectrumError::Domain("at least three data points are needed".into()));
    }
    let span = template.g_max - template.g_min;
    let nodes = GDistribution { g_sigma: 1.0, n_nodes: template.n_nodes.max(2), ..*template };
    let table = TransmissionTable::compute(config, geometry, &nodes.nodes(), &data.detunings)?;
    let prob = Problem {
        table: &table,
        data: &data.transmission,
        template: nodes,
        lo: [template.g_min / MHZ, opts.sigma_min / MHZ],
        hi: [template.g_max / MHZ, span / MHZ],
    };

    let mut best: Option<(usize, Run)> = None;
    let mut last_err = None;
    for (k, frac) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let start = [(template.g_min + frac * span) / MHZ, 0.25 * span / MHZ];
        match levenberg_marquardt(&prob, start, opts) {
            Ok(run) => {
                if best.as_ref().is_none_or(|(_, b)| run.s < b.s) {
                    best = Some((k, run));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((start, run)) = best else {
        return Err(last_err.expect("at least one start ran"));
    };

    let j = prob.jacobian(run.p)?;
    let (a, _) = normal_equations(&j, &vec![0.0; j.len()]);
    let dof = (data.len() - 2) as f64;
    let s2 = run.s / dof;
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let mut warnings = Vec::new();
    let covariance = if det.abs() > 1e-300 {
        let scale = s2 * MHZ * MHZ / det;
        [[a[1][1] * scale, -a[0][1] * scale], [-a[1][0] * scale, a[0][0] * scale]]
    } else {
        warnings.push("singular Jacobian; covariance unavailable".to_string());
        [[f64::NAN; 2]; 2]
    };
    let near = |x: f64, b: f64| (x - b).abs() <= 1e-6 * (1.0 + b.abs());
    if near(run.p[0], prob.lo[0]) || near(run.p[0], prob.hi[0]) {
        warnings.push(format!("fitted mean {} MHz sits on the truncation bound", run.p[0]));
    }
    if near(run.p[1], prob.lo[1]) || near(run.p[1], prob.hi[1]) {
        warnings.push(format!("fitted width {} MHz sits on its bound", run.p[1]));
    }
    Ok(FitResult {
        g_mean_fit: run.p[0] * MHZ,
        g_sigma_fit: run.p[1] * MHZ,
        residual_norm: run.s.sqrt(),
        covariance,
        iterations: run.iterations,
        start,
        model: prob.model(run.p)?,
        warnings,
    })
}
