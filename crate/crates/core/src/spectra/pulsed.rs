use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    transmission_from_field, GDistribution, Geometry, ModelConfig, SpectrumError, SpectrumModel, SpectrumResult, MHZ,
};
use crate::quantum::{c64, vectorize, Integrator, QuantumError};

/// Time window over which the probe field is averaged after switching it on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeWindow {
    /// Start of the averaging window after the switch-on (s); `None` means `5/κ_tot`.
    pub t_start: Option<f64>,
    /// Window length (s).
    pub t_len: f64,
    /// Simpson intervals across the window (rounded up to even).
    pub intervals: usize,
    /// Amplitude of the co-propagating light that prepares the atom;
    /// `None` uses the probe amplitude.
    pub pump_alpha: Option<f64>,
}

impl Default for ProbeWindow {
    fn default() -> Self {
        Self { t_start: None, t_len: 100e-9, intervals: 80, pump_alpha: None }
    }
}

/// Transmission of a short probe pulse sent onto the atomic state prepared by
/// the co-propagating steady state at zero detuning. The probe field is
/// amplitude-averaged over the window before squaring.
pub fn pulsed_probe_spectrum(
    config: &ModelConfig,
    geometry: Geometry,
    detunings: &[f64],
    g: f64,
    window: &ProbeWindow,
) -> Result<SpectrumResult, SpectrumError> {
    let relax = 5.0 / config.kappa_tot();
    let t_start = window.t_start.unwrap_or(relax);
    if !(t_start >= 0.0) || !(window.t_len > 0.0) {
        return Err(SpectrumError::Domain(format!(
            "probe window start {t_start} s, length {} s",
            window.t_len
        )));
    }
    let mut warnings = Vec::new();
    if t_start < relax * (1.0 - 1e-12) {
        warnings.push(format!(
            "probe window starts at {:.3e} s, before the resonator field has relaxed (5/kappa_tot = {:.3e} s)",
            t_start, relax
        ));
    }

    if g == 0.0 && geometry != Geometry::Empty {
        let cutoff = config.cutoff_a.max(config.cutoff_b);
        let empty = ModelConfig { cutoff_a: cutoff, cutoff_b: 1, ..*config };
        let mut out = pulsed_probe_spectrum(&empty, Geometry::Empty, detunings, 0.0, window)?;
        out.geometry = geometry;
        return Ok(out);
    }
    let pump_config = ModelConfig { alpha_in: window.pump_alpha.unwrap_or(config.alpha_in), ..*config };
    let pump = SpectrumModel::new(&pump_config, geometry.co_partner())?;
    let prepared = pump.steady_state(g, 0.0)?;
    let atomic = pump.space().reduced_atomic_state(&prepared.matrix);

    let model = SpectrumModel::new(config, geometry)?;
    let x0 = vectorize(&model.space().with_vacuum(&atomic)?);
    let dim = model.space().dim();
    let params = model.params(g, 0.0);
    let field: Vec<(usize, usize, c64)> = {
        let d = params.driven_mode(model.operators());
        let mut nz = Vec::new();
        for k in 0..dim {
            for i in 0..dim {
                if d[(i, k)] != c64::new(0.0, 0.0) {
                    nz.push((i, k, d[(i, k)]));
                }
            }
        }
        nz
    };
    let mean_field = |x: &[c64]| field.iter().map(|&(i, k, v)| v * x[k + dim * i]).sum::<c64>();
    let trace = |x: &[c64]| (0..dim).map(|k| x[k + dim * k]).sum::<c64>();

    let n = window.intervals.max(2).div_ceil(2) * 2;
    let h = window.t_len / n as f64;
    let base = model.generator(g, 0.0)?;
    let t = detunings
        .par_iter()
        .map(|&delta| {
            let l = base.with_diagonal(&model.detuning_shift(delta));
            let mut integ = Integrator::new(&l, config.evolve);
            let mut x = x0.clone();
            let wrap = |e: QuantumError| SpectrumError::AtDetuning { delta_mhz: delta / MHZ, source: e };
            integ.advance(&mut x, 0.0, t_start).map_err(wrap)?;
            let mut acc = mean_field(&x);
            for k in 1..=n {
                let t0 = t_start + (k - 1) as f64 * h;
                integ.advance(&mut x, t0, t0 + h).map_err(wrap)?;
                let w = if k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                acc += mean_field(&x) * w;
            }
            let drift = (trace(&x) - c64::new(1.0, 0.0)).norm();
            if drift > 1e-6 {
                return Err(wrap(QuantumError::InvalidState(format!("trace drifted by {drift:e}"))));
            }
            let avg = acc / (3.0 * n as f64);
            transmission_from_field(avg, &model.params(g, delta))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = SpectrumResult::new(detunings.to_vec(), t, geometry)?;
    out.coupling = format!("g/2pi = {} MHz", g / MHZ);
    out.warnings = warnings;
    Ok(out)
}

/// [`pulsed_probe_spectrum`] averaged over a coupling distribution.
pub fn averaged_pulsed_spectrum(
    config: &ModelConfig,
    geometry: Geometry,
    detunings: &[f64],
    dist: &GDistribution,
    window: &ProbeWindow,
) -> Result<SpectrumResult, SpectrumError> {
    let mut t = vec![0.0; detunings.len()];
    let mut warnings = Vec::new();
    for (g, w) in dist.quadrature()? {
        let s = pulsed_probe_spectrum(config, geometry, detunings, g, window)?;
        for (acc, x) in t.iter_mut().zip(&s.transmission) {
            *acc += w * x;
        }
        if warnings.is_empty() {
            warnings = s.warnings;
        }
    }
    let mut out = SpectrumResult::new(detunings.to_vec(), t, geometry)?;
    out.coupling = format!(
        "truncated normal: mean {} MHz, sigma {} MHz, bounds [{}, {}] MHz, {} nodes",
        dist.g_mean / MHZ,
        dist.g_sigma / MHZ,
        dist.g_min / MHZ,
        dist.g_max / MHZ,
        dist.n_nodes
    );
    out.warnings = warnings;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{empty_cavity_transmission, LevelSelection};

    #[test]
    fn empty_resonator_pulse_reaches_steady_state() {
        let c = ModelConfig { cutoff_a: 6, alpha_in: 500.0, ..ModelConfig::default() };
        let d = [-10.0 * MHZ, 0.0, 15.0 * MHZ];
        let s = pulsed_probe_spectrum(&c, Geometry::Empty, &d, 0.0, &ProbeWindow::default()).unwrap();
        assert!(s.warnings.is_empty());
        for (t, x) in s.transmission.iter().zip(&d) {
            // the field has relaxed to e^{-5} of its initial deviation
            assert!((t - empty_cavity_transmission(*x, c.kappa0, c.kappa_ext)).abs() < 2e-3, "{t}");
        }
    }

    #[test]
    fn early_window_is_flagged() {
        let c = ModelConfig { levels: LevelSelection::TwoLevel, alpha_in: 100.0, ..ModelConfig::default() };
        let w = ProbeWindow { t_start: Some(1e-9), t_len: 20e-9, ..ProbeWindow::default() };
        let s = pulsed_probe_spectrum(&c, Geometry::CoTm, &[0.0], 10.0 * MHZ, &w).unwrap();
        assert_eq!(s.warnings.len(), 1);
        assert!(s.transmission[0].is_finite());
    }
}
