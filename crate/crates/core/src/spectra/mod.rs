//! Fibre transmission spectra for the co- and counter-propagating probe
//! geometries, coupling-strength averaging, fitting, and the transversal
//! standing-wave benchmark.
//!
//! Transmission is `T = |α_out / α_in|²` with the input–output relation
//! `α_out = α_in − √(2κ_ext) ⟨d⟩` for the driven mode `d`. Together with the
//! drive term `i√(2κ_ext) α_in (d† − d)` this reproduces the closed-form
//! empty-cavity Lorentzian, including `T = 0` at critical coupling.

mod averaging;
mod fit;
mod model;
mod pulsed;

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::{FieldError, ModeClass};
use crate::quantum::{c64, expectation, DensityOperator, DriveMode, Operators, QuantumError, SystemParams};

pub use averaging::{gauss_legendre, GDistribution};
pub use fit::{fit_spectrum, FitOptions, FitResult};
pub use model::{
    averaged_spectrum, empty_cavity_spectrum, legacy_standing_wave_spectrum, sweep_spectrum, LevelSelection, ModelConfig, SpectrumModel,
    TransmissionTable,
};
pub use pulsed::{averaged_pulsed_spectrum, pulsed_probe_spectrum, ProbeWindow};

/// `2π × 1 MHz` in rad/s.
pub const MHZ: f64 = 2.0 * PI * 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("transmission is undefined without a drive (alpha_in = 0)")]
    UndefinedTransmission,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("solver failed at detuning {delta_mhz} MHz: {source}")]
    AtDetuning { delta_mhz: f64, source: QuantumError },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("fit did not converge after {iterations} iterations (objective trace {trace:?})")]
    FitConvergence { iterations: usize, trace: Vec<f64> },
}

/// Probe geometry. Co-propagating probes drive mode `a`, the + sense in which
/// the atom was prepared; counter-propagating probes drive mode `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Geometry {
    #[serde(rename = "co_TM")]
    CoTm,
    #[serde(rename = "co_TE")]
    CoTe,
    #[serde(rename = "counter_TM")]
    CounterTm,
    #[serde(rename = "counter_TE")]
    CounterTe,
    #[serde(rename = "empty")]
    Empty,
    #[serde(rename = "legacy")]
    Legacy,
}

impl Geometry {
    pub const ALL: [Geometry; 6] =
        [Geometry::CoTm, Geometry::CoTe, Geometry::CounterTm, Geometry::CounterTe, Geometry::Empty, Geometry::Legacy];

    pub fn tag(self) -> &'static str {
        match self {
            Geometry::CoTm => "co_TM",
            Geometry::CoTe => "co_TE",
            Geometry::CounterTm => "counter_TM",
            Geometry::CounterTe => "counter_TE",
            Geometry::Empty => "empty",
            Geometry::Legacy => "legacy",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Geometry> {
        Geometry::ALL.into_iter().find(|g| g.tag() == tag)
    }

    /// Mode class of the resonator modes; the empty and legacy benchmarks are
    /// polarization-free and report TM.
    pub fn class(self) -> ModeClass {
        match self {
            Geometry::CoTe | Geometry::CounterTe => ModeClass::Te,
            _ => ModeClass::Tm,
        }
    }

    pub fn drive_mode(self) -> DriveMode {
        match self {
            Geometry::CounterTm | Geometry::CounterTe => DriveMode::B,
            _ => DriveMode::A,
        }
    }

    pub fn is_counter(self) -> bool {
        self.drive_mode() == DriveMode::B
    }

    /// The co-propagating geometry used for detection and optical pumping.
    pub fn co_partner(self) -> Geometry {
        match self {
            Geometry::CounterTm => Geometry::CoTm,
            Geometry::CounterTe => Geometry::CoTe,
            g => g,
        }
    }

    /// Ground sublevel the atom is prepared in by the detection light.
    pub fn initial_m(self) -> i32 {
        match self.class() {
            ModeClass::Tm => 3,
            ModeClass::Te => 0,
        }
    }

    /// Dominant transition `(m_g, m_e)` the resonator is tuned to.
    pub fn reference_transition(self) -> (i32, i32) {
        match self.class() {
            ModeClass::Tm => (3, 4),
            ModeClass::Te => (0, 0),
        }
    }
}

impl std::fmt::Display for Geometry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

/// Transmission versus probe detuning `Δ_rs` (rad/s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub detunings: Vec<f64>,
    pub transmission: Vec<f64>,
    pub geometry: Geometry,
    /// Free-form description of the coupling used (fixed g or distribution).
    #[serde(default)]
    pub coupling: String,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SpectrumResult {
    pub fn new(detunings: Vec<f64>, transmission: Vec<f64>, geometry: Geometry) -> Result<Self, SpectrumError> {
        if detunings.len() != transmission.len() {
            return Err(SpectrumError::Domain(format!(
                "{} detunings but {} transmission values",
                detunings.len(),
                transmission.len()
            )));
        }
        if let Some(t) = transmission.iter().find(|t| !(**t >= 0.0)) {
            return Err(SpectrumError::Domain(format!("negative or invalid transmission {t}")));
        }
        Ok(Self { detunings, transmission, geometry, coupling: String::new(), warnings: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.detunings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.detunings.is_empty()
    }

    /// Indices of strict interior local minima.
    pub fn local_minima(&self) -> Vec<usize> {
        let t = &self.transmission;
        (1..t.len().saturating_sub(1)).filter(|&i| t[i] < t[i - 1] && t[i] <= t[i + 1]).collect()
    }

    /// CSV with columns `detuning_MHz,transmission[,model_transmission]`,
    /// detunings divided by 2π.
    pub fn to_csv(&self, model: Option<&[f64]>) -> Result<String, SpectrumError> {
        if let Some(m) = model {
            if m.len() != self.len() {
                return Err(SpectrumError::Domain("model column length mismatch".into()));
            }
        }
        let mut out = String::from("detuning_MHz,transmission");
        if model.is_some() {
            out.push_str(",model_transmission");
        }
        out.push('\n');
        for i in 0..self.len() {
            write!(out, "{:.6},{:.10}", self.detunings[i] / MHZ, self.transmission[i]).expect("string write");
            if let Some(m) = model {
                write!(out, ",{:.10}", m[i]).expect("string write");
            }
            out.push('\n');
        }
        Ok(out)
    }

    /// Parses the CSV layout of [`SpectrumResult::to_csv`] (extra columns ignored).
    pub fn from_csv(text: &str, geometry: Geometry) -> Result<Self, SpectrumError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| SpectrumError::Domain("empty CSV".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let di = cols.iter().position(|c| *c == "detuning_MHz");
        let ti = cols.iter().position(|c| *c == "transmission");
        let (Some(di), Some(ti)) = (di, ti) else {
            return Err(SpectrumError::Domain("CSV needs detuning_MHz and transmission columns".into()));
        };
        let (mut d, mut t) = (Vec::new(), Vec::new());
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |i: usize| {
                fields
                    .get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| SpectrumError::Domain(format!("bad CSV row {}: {line}", n + 2)))
            };
            d.push(parse(di)? * MHZ);
            t.push(parse(ti)?);
        }
        Self::new(d, t, geometry)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum serializes")
    }
}

/// `T = |1 − √(2κ_ext) ⟨d⟩ / α_in|²` from a steady (or instantaneous) state.
pub fn transmission_from_state(
    rho: &DensityOperator,
    ops: &Operators,
    params: &SystemParams,
) -> Result<f64, SpectrumError> {
    let d = expectation(params.driven_mode(ops), rho)?;
    transmission_from_field(d, params)
}

/// Same as [`transmission_from_state`] given `⟨d⟩` directly.
pub fn transmission_from_field(d: c64, params: &SystemParams) -> Result<f64, SpectrumError> {
    if params.alpha_in == 0.0 {
        return Err(SpectrumError::UndefinedTransmission);
    }
    let out = c64::new(1.0, 0.0) - d * ((2.0 * params.kappa_ext).sqrt() / params.alpha_in);
    Ok(out.norm_sqr())
}

/// `T(Δ) = ((κ₀ − κ_ext)² + Δ²) / ((κ₀ + κ_ext)² + Δ²)`.
pub fn empty_cavity_transmission(delta: f64, kappa0: f64, kappa_ext: f64) -> f64 {
    let num = (kappa0 - kappa_ext).powi(2) + delta * delta;
    let den = (kappa0 + kappa_ext).powi(2) + delta * delta;
    num / den
}

/// Weak-drive amplitude transmission of a two-level atom in one mode,
/// `t = 1 − 2κ_ext / (κ + iΔ_c + g² / (γ + iΔ_a))`.
pub fn two_level_amplitude(delta_c: f64, delta_a: f64, g: f64, kappa0: f64, kappa_ext: f64, gamma: f64) -> c64 {
    let atom = c64::new(g * g, 0.0) / c64::new(gamma, delta_a);
    c64::new(1.0, 0.0) - c64::new(2.0 * kappa_ext, 0.0) / (c64::new(kappa0 + kappa_ext, delta_c) + atom)
}
