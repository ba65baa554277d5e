//! Monte Carlo transits of single atoms through the evanescent field and the
//! real-time trigger / survival protocol built on the detected photon stream.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectra::{Geometry, ModelConfig, SpectrumError, SpectrumModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransitError {
    #[error("time step {dt:e} s does not resolve the transit (sigma_t/4 = {limit:e} s)")]
    Resolution { dt: f64, limit: f64 },
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// Coupling strength `g(t)` on a uniform grid starting at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitTrajectory {
    pub dt: f64,
    pub duration: f64,
    pub g_of_t: Vec<f64>,
}

impl TransitTrajectory {
    /// Linear interpolation, zero outside the grid.
    pub fn g_at(&self, t: f64) -> f64 {
        if !(t >= 0.0) || t > self.duration {
            return 0.0;
        }
        let x = t / self.dt;
        let i = (x.floor() as usize).min(self.g_of_t.len() - 1);
        let Some(&next) = self.g_of_t.get(i + 1) else {
            return self.g_of_t[i];
        };
        let f = x - i as f64;
        self.g_of_t[i] * (1.0 - f) + next * f
    }

    pub fn peak(&self) -> f64 {
        self.g_of_t.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitParams {
    pub g_peak: f64,
    /// Gaussian width of the transit (s).
    pub sigma_t: f64,
    pub duration: f64,
    pub dt: f64,
    /// Relative standard deviation of the peak coupling from shot to shot.
    pub peak_jitter: f64,
}

impl Default for TransitParams {
    fn default() -> Self {
        Self { g_peak: 17.0 * crate::spectra::MHZ, sigma_t: 2e-6, duration: 16e-6, dt: 50e-9, peak_jitter: 0.0 }
    }
}

/// Gaussian transit `g(t) = g_peak exp(−(t − T/2)² / 2σ_t²)`.
pub fn sample_trajectory(params: &TransitParams, seed: u64) -> Result<TransitTrajectory, TransitError> {
    let TransitParams { g_peak, sigma_t, duration, dt, peak_jitter } = *params;
    if !(g_peak >= 0.0) || !(sigma_t > 0.0) || !(duration > 0.0) || !(dt > 0.0) || !(peak_jitter >= 0.0) {
        return Err(TransitError::Invalid(format!("{params:?}")));
    }
    if dt > sigma_t / 4.0 {
        return Err(TransitError::Resolution { dt, limit: sigma_t / 4.0 });
    }
    let peak = if peak_jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = Normal::new(1.0, peak_jitter).map_err(|e| TransitError::Invalid(e.to_string()))?;
        g_peak * n.sample(&mut rng).max(0.0)
    } else {
        g_peak
    };
    let n = (duration / dt).round() as usize;
    let g_of_t = (0..=n)
        .map(|k| {
            let z = (k as f64 * dt - duration / 2.0) / sigma_t;
            peak * (-0.5 * z * z).exp()
        })
        .collect();
    Ok(TransitTrajectory { dt, duration: n as f64 * dt, g_of_t })
}

/// On-resonance transmission `T(g)` tabulated on an increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionCurve {
    pub g: Vec<f64>,
    pub t: Vec<f64>,
}

impl TransmissionCurve {
    pub fn constant(t: f64) -> Self {
        Self { g: vec![0.0], t: vec![t] }
    }

    /// Steady-state transmission of the co-propagating probe at zero detuning.
    pub fn from_model(config: &ModelConfig, geometry: Geometry, g_max: f64, points: usize) -> Result<Self, TransitError> {
        if points < 2 || !(g_max > 0.0) {
            return Err(TransitError::Invalid("transmission grid needs g_max > 0 and at least two points".into()));
        }
        let model = SpectrumModel::new(config, geometry)?;
        let g: Vec<f64> = (0..points).map(|k| g_max * k as f64 / (points - 1) as f64).collect();
        let t = g.par_iter().map(|&g| model.transmission(g, 0.0)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { g, t })
    }

    /// Linear interpolation, clamped to the end values.
    pub fn at(&self, g: f64) -> f64 {
        let k = self.g.partition_point(|&x| x <= g);
        if k == 0 {
            return self.t[0];
        }
        if k == self.g.len() {
            return self.t[k - 1];
        }
        let f = (g - self.g[k - 1]) / (self.g[k] - self.g[k - 1]);
        self.t[k - 1] * (1.0 - f) + self.t[k] * f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriggerConfig {
    pub dt1: f64,
    pub eta1: u32,
    pub dt2: f64,
    pub eta2: u32,
    pub detector_efficiency: f64,
    pub probe_flux: f64,
    /// Spectroscopy interval between trigger and survival window (s).
    pub gap: f64,
    /// Lowest transmission reached in practice by the empty resonator.
    pub residual_transmission: f64,
}

impl TriggerConfig {
    pub fn for_geometry(geometry: Geometry) -> Self {
        let eta1 = match geometry.class() {
            crate::fields::ModeClass::Tm => 6,
            crate::fields::ModeClass::Te => 4,
        };
        Self { eta1, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), TransitError> {
        if !(self.dt1 > 0.0) || !(self.dt2 > 0.0) || !(self.gap >= 0.0) {
            return Err(TransitError::Invalid("windows must be positive".into()));
        }
        if self.eta1 < 1 || self.eta2 < 1 {
            return Err(TransitError::Invalid("thresholds must be at least 1".into()));
        }
        if !(self.detector_efficiency > 0.0 && self.detector_efficiency <= 1.0) {
            return Err(TransitError::Invalid(format!("detector efficiency {}", self.detector_efficiency)));
        }
        if !(self.probe_flux >= 0.0) || !(0.0..=1.0).contains(&self.residual_transmission) {
            return Err(TransitError::Invalid("probe flux and residual transmission".into()));
        }
        Ok(())
    }

    /// Detected count rate at transmission `t`.
    pub fn rate(&self, t: f64) -> f64 {
        self.probe_flux * self.detector_efficiency * t.max(self.residual_transmission).min(1.0)
    }
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            dt1: 1.2e-6,
            eta1: 6,
            dt2: 1e-6,
            eta2: 2,
            detector_efficiency: 0.5,
            probe_flux: 1.2e7,
            gap: 1e-6,
            residual_transmission: 0.01,
        }
    }
}

/// Detection timestamps of an inhomogeneous Poisson process with rate
/// `flux · η · T(g(t))`, drawn by thinning a homogeneous process at the
/// maximal rate `flux · η`. With a common seed the accepted set only grows
/// with the transmission.
pub fn photon_count_stream(
    traj: &TransitTrajectory,
    curve: &TransmissionCurve,
    cfg: &TriggerConfig,
    seed: u64,
) -> Vec<f64> {
    let max_rate = cfg.probe_flux * cfg.detector_efficiency;
    let mut out = Vec::new();
    if !(max_rate > 0.0) {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(max_rate).expect("positive rate");
    let mut t = 0.0;
    loop {
        t += exp.sample(&mut rng);
        if t > traj.duration {
            break;
        }
        let u: f64 = rng.random();
        if u * max_rate < cfg.rate(curve.at(traj.g_at(t))) {
            out.push(t);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub triggered: bool,
    pub trigger_time: Option<f64>,
    pub survived: bool,
    pub photon_record: Vec<f64>,
}

/// Sliding-window trigger: the first photon completing `eta1` counts within
/// `dt1` fires; after `gap` the survival window `dt2` needs `eta2` counts.
pub fn run_trigger_protocol(timestamps: &[f64], cfg: &TriggerConfig) -> ProtocolOutcome {
    let k = cfg.eta1.max(1) as usize;
    let trigger_time = (k - 1..timestamps.len())
        .find(|&i| timestamps[i] - timestamps[i + 1 - k] <= cfg.dt1)
        .map(|i| timestamps[i]);
    let survived = trigger_time.is_some_and(|t0| {
        let start = t0 + cfg.gap;
        let end = start + cfg.dt2;
        let n = timestamps.iter().filter(|&&t| t > start && t <= end).count();
        n >= cfg.eta2 as usize
    });
    ProtocolOutcome { triggered: trigger_time.is_some(), trigger_time, survived, photon_record: timestamps.to_vec() }
}

/// One simulated transit, exported as a JSON line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitRecord {
    pub seed: u64,
    pub g_peak_mhz: f64,
    pub triggered: bool,
    pub trigger_time: Option<f64>,
    pub survived: bool,
    pub photons: usize,
}

pub fn simulate_transit(
    params: &TransitParams,
    curve: &TransmissionCurve,
    cfg: &TriggerConfig,
    seed: u64,
) -> Result<(TransitRecord, ProtocolOutcome), TransitError> {
    let traj = sample_trajectory(params, seed)?;
    // independent streams for the trajectory jitter and the photon arrivals
    let stream = photon_count_stream(&traj, curve, cfg, seed ^ 0x9e37_79b9_7f4a_7c15);
    let outcome = run_trigger_protocol(&stream, cfg);
    let record = TransitRecord {
        seed,
        g_peak_mhz: traj.peak() / crate::spectra::MHZ,
        triggered: outcome.triggered,
        trigger_time: outcome.trigger_time,
        survived: outcome.survived,
        photons: stream.len(),
    };
    Ok((record, outcome))
}

/// Runs `runs` transits with seeds `base_seed, base_seed + 1, ...`.
pub fn run_ensemble(
    params: &TransitParams,
    curve: &TransmissionCurve,
    cfg: &TriggerConfig,
    base_seed: u64,
    runs: usize,
) -> Result<Vec<TransitRecord>, TransitError> {
    cfg.validate()?;
    (0..runs as u64)
        .into_par_iter()
        .map(|k| simulate_transit(params, curve, cfg, base_seed.wrapping_add(k)).map(|(r, _)| r))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub runs: usize,
    pub triggered: usize,
    pub survived: usize,
    pub trigger_probability: f64,
    /// Binomial standard error of the trigger probability.
    pub trigger_stderr: f64,
    pub mean_photons: f64,
}

impl EnsembleSummary {
    pub fn from_records(records: &[TransitRecord]) -> Self {
        let runs = records.len();
        let triggered = records.iter().filter(|r| r.triggered).count();
        let survived = records.iter().filter(|r| r.survived).count();
        let n = runs.max(1) as f64;
        let p = triggered as f64 / n;
        Self {
            runs,
            triggered,
            survived,
            trigger_probability: p,
            trigger_stderr: (p * (1.0 - p) / n).sqrt(),
            mean_photons: records.iter().map(|r| r.photons as f64).sum::<f64>() / n,
        }
    }

    pub fn csv_header() -> &'static str {
        "runs,triggered,survived,trigger_probability,trigger_stderr,mean_photons"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.8},{:.8},{:.6}",
            self.runs, self.triggered, self.survived, self.trigger_probability, self.trigger_stderr, self.mean_photons
        )
    }
}

pub fn to_json_lines(records: &[TransitRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Poisson probability mass `P(N = k)` for mean `mu`.
pub fn poisson_pmf(k: i64, mu: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    if mu == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ln = k as f64 * mu.ln() - mu - (1..=k).map(|j| (j as f64).ln()).sum::<f64>();
    ln.exp()
}

/// `P(N ≤ k)`.
pub fn poisson_cdf(k: i64, mu: f64) -> f64 {
    (0..=k).map(|j| poisson_pmf(j, mu)).sum()
}

/// `P(N ≥ k)`, summed from the tail upward for accuracy at small means.
pub fn poisson_tail(k: u32, mu: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut j = k as i64;
    loop {
        let p = poisson_pmf(j, mu);
        sum += p;
        if j as f64 > mu && p < sum * 1e-17 {
            break;
        }
        j += 1;
    }
    sum
}

/// Probability that some window of length `w` inside `[0, t]` holds at least
/// `k ≥ 2` events of a homogeneous Poisson process with rate `rate`
/// (Naus' product approximation).
pub fn poisson_scan_probability(k: u32, rate: f64, w: f64, t: f64) -> f64 {
    let k = k as i64;
    let psi = rate * w;
    let l = t / w;
    let p = |j: i64| poisson_pmf(j, psi);
    let f = |j: i64| if j < 0 { 0.0 } else { poisson_cdf(j, psi) };
    let q2 = f(k - 1).powi(2) - (k - 1) as f64 * p(k) * p(k - 2) - ((k - 1) as f64 - psi) * p(k) * f(k - 3);
    let a1 = 2.0 * p(k) * f(k - 1) * ((k - 1) as f64 * f(k - 2) - psi * f(k - 3));
    let a2 = 0.5
        * p(k).powi(2)
        * ((k - 1) as f64 * (k - 2) as f64 * f(k - 3) - 2.0 * (k - 2) as f64 * psi * f(k - 4) + psi * psi * f(k - 5));
    let a3: f64 = (1..k).map(|r| p(2 * k - r) * f(r - 1).powi(2)).sum();
    let a4: f64 = (2..k).map(|r| p(2 * k - r) * p(r) * ((r - 1) as f64 * f(r - 2) - psi * f(r - 3))).sum();
    let q3 = f(k - 1).powi(3) - a1 + a2 + a3 - a4;
    1.0 - q2 * (q3 / q2).powf(l - 2.0)
}
