//! Run configuration. All frequencies are given in MHz as `ω/2π` and
//! converted to rad/s on use; times carry their unit in the key name.

use serde::{Deserialize, Serialize};
use wgm_cqed::atom::{AtomParams, GAUSS};
use wgm_cqed::quantum::SpaceBudget;
use wgm_cqed::spectra::{FitOptions, GDistribution, Geometry, LevelSelection, ModelConfig, ProbeWindow, MHZ};
use wgm_cqed::transit::{TransitParams, TriggerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Fields,
    Spectrum,
    Averaged,
    Fit,
    Legacy,
    Pulsed,
    Transit,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fields => "fields",
            Scenario::Spectrum => "spectrum",
            Scenario::Averaged => "averaged",
            Scenario::Fit => "fit",
            Scenario::Legacy => "legacy",
            Scenario::Pulsed => "pulsed",
            Scenario::Transit => "transit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub resonator: ResonatorSection,
    #[serde(default)]
    pub atom: AtomSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub distribution: DistributionSection,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub pulsed: PulsedSection,
    #[serde(default)]
    pub transit: TransitSection,
    #[serde(default)]
    pub fields: FieldsSection,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Directory for artifacts, relative to the working directory.
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "output".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonatorSection {
    /// Total field decay rate κ/2π (MHz), the HWHM of the empty resonance.
    pub kappa_tot_mhz: f64,
    /// Fibre coupling rate κ_ext/2π (MHz); half of κ at critical coupling.
    pub kappa_ext_mhz: f64,
}

impl Default for ResonatorSection {
    fn default() -> Self {
        Self { kappa_tot_mhz: 10.0, kappa_ext_mhz: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtomSection {
    /// Natural linewidth Γ/2π (MHz); the dipole decays at γ = Γ/2.
    pub linewidth_mhz: f64,
    /// Guiding field along the quantization axis (G).
    pub b_gauss: f64,
    pub zeeman: bool,
}

impl Default for AtomSection {
    fn default() -> Self {
        Self { linewidth_mhz: 6.07, b_gauss: 4.5, zeeman: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Levels {
    Full,
    Pruned,
    TwoLevel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub geometry: Geometry,
    /// Fixed coupling g/2π (MHz) for single-g scenarios.
    pub g_mhz: f64,
    /// Resonator–atom detuning from the dominant transition (MHz).
    pub delta_ca_mhz: f64,
    /// Probe photon flux at the fibre input (photons/s).
    pub probe_flux: f64,
    pub refractive_index: f64,
    pub levels: Levels,
    /// Dipole hops kept around the prepared state when `levels = "pruned"`.
    pub hops: usize,
    pub cutoff_a: usize,
    pub cutoff_b: usize,
    pub max_dim: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            geometry: Geometry::CoTm,
            g_mhz: 20.0,
            delta_ca_mhz: 0.0,
            probe_flux: 1.2e7,
            refractive_index: 1.45,
            levels: Levels::Full,
            hops: 2,
            cutoff_a: 1,
            cutoff_b: 1,
            max_dim: SpaceBudget::default().max_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Probe detuning Δ_rs/2π range (MHz).
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub points: usize,
    /// Standard deviation of Gaussian noise added to the written transmission
    /// (synthetic data), seeded by `seed`.
    pub noise: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { start_mhz: -60.0, stop_mhz: 60.0, points: 121, noise: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DistributionSection {
    pub g_mean_mhz: f64,
    pub g_sigma_mhz: f64,
    pub g_min_mhz: f64,
    pub g_max_mhz: f64,
    pub nodes: usize,
}

impl Default for DistributionSection {
    fn default() -> Self {
        Self { g_mean_mhz: 17.0, g_sigma_mhz: 6.0, g_min_mhz: 7.5, g_max_mhz: 30.0, nodes: 17 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// CSV with `detuning_MHz,transmission` columns, relative to the config file.
    pub data: Option<String>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub sigma_min_mhz: f64,
}

impl Default for FitSection {
    fn default() -> Self {
        let o = FitOptions::default();
        Self { data: None, max_iterations: o.max_iterations, tolerance: o.tolerance, sigma_min_mhz: o.sigma_min / MHZ }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulsedSection {
    pub window_ns: f64,
    /// Window start after switch-on (ns); 5/κ when absent.
    pub start_ns: Option<f64>,
    /// Flux of the spectroscopy light (photons/s); the detection light uses
    /// `model.probe_flux`. Defaults to the detection flux.
    pub spectroscopy_flux: Option<f64>,
    /// Average over the coupling distribution instead of using `model.g_mhz`.
    pub averaged: bool,
}

impl Default for PulsedSection {
    fn default() -> Self {
        Self { window_ns: 100.0, start_ns: None, spectroscopy_flux: None, averaged: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransitSection {
    pub g_peak_mhz: f64,
    pub sigma_t_us: f64,
    pub duration_us: f64,
    pub dt_ns: f64,
    pub peak_jitter: f64,
    pub runs: usize,
    pub dt1_us: f64,
    /// Trigger threshold; 6 for TM and 4 for TE when absent.
    pub eta1: Option<u32>,
    pub dt2_us: f64,
    pub eta2: u32,
    pub detector_efficiency: f64,
    pub gap_us: f64,
    pub residual_transmission: f64,
    /// Grid points of the tabulated on-resonance transmission T(g).
    pub curve_points: usize,
}

impl Default for TransitSection {
    fn default() -> Self {
        let t = TriggerConfig::default();
        Self {
            g_peak_mhz: 17.0,
            sigma_t_us: 2.0,
            duration_us: 16.0,
            dt_ns: 50.0,
            peak_jitter: 0.0,
            runs: 1000,
            dt1_us: t.dt1 * 1e6,
            eta1: None,
            dt2_us: t.dt2 * 1e6,
            eta2: t.eta2,
            detector_efficiency: t.detector_efficiency,
            gap_us: t.gap * 1e6,
            residual_transmission: t.residual_transmission,
            curve_points: 31,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldsSection {
    pub indices: Vec<f64>,
    pub d_min_nm: f64,
    pub d_max_nm: f64,
    pub points: usize,
}

impl Default for FieldsSection {
    fn default() -> Self {
        Self { indices: vec![1.3, 1.45, 1.6, 1.8, 2.0], d_min_nm: 50.0, d_max_nm: 300.0, points: 26 }
    }
}

impl RunConfig {
    pub fn with_defaults(scenario: Scenario) -> Self {
        Self {
            scenario,
            seed: default_seed(),
            output: OutputSection::default(),
            resonator: ResonatorSection::default(),
            atom: AtomSection::default(),
            model: ModelSection::default(),
            sweep: SweepSection::default(),
            distribution: DistributionSection::default(),
            fit: FitSection::default(),
            pulsed: PulsedSection::default(),
            transit: TransitSection::default(),
            fields: FieldsSection::default(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Range and consistency checks, reported with the offending key.
    pub fn validate(&self) -> Result<(), String> {
        let positive = |key: &str, v: f64| if v > 0.0 && v.is_finite() { Ok(()) } else { Err(format!("{key} must be positive, got {v}")) };
        positive("resonator.kappa_tot_mhz", self.resonator.kappa_tot_mhz)?;
        positive("resonator.kappa_ext_mhz", self.resonator.kappa_ext_mhz)?;
        if self.resonator.kappa_ext_mhz >= self.resonator.kappa_tot_mhz {
            return Err("resonator.kappa_ext_mhz must be smaller than resonator.kappa_tot_mhz".into());
        }
        positive("atom.linewidth_mhz", self.atom.linewidth_mhz)?;
        if !(self.model.g_mhz >= 0.0) {
            return Err(format!("model.g_mhz must be non-negative, got {}", self.model.g_mhz));
        }
        if !(self.model.probe_flux >= 0.0) {
            return Err("model.probe_flux must be non-negative".into());
        }
        if self.model.cutoff_a < 1 || self.model.cutoff_b < 1 {
            return Err("model.cutoff_a and model.cutoff_b must be at least 1".into());
        }
        if self.sweep.points < 2 || !(self.sweep.stop_mhz > self.sweep.start_mhz) {
            return Err("sweep needs stop_mhz > start_mhz and at least 2 points".into());
        }
        if !(self.sweep.noise >= 0.0) {
            return Err("sweep.noise must be non-negative".into());
        }
        let d = &self.distribution;
        if !(d.g_min_mhz < d.g_max_mhz) || !(d.g_sigma_mhz >= 0.0) || d.nodes == 0 {
            return Err("distribution needs g_min_mhz < g_max_mhz, g_sigma_mhz >= 0 and nodes >= 1".into());
        }
        positive("pulsed.window_ns", self.pulsed.window_ns)?;
        if let Some(f) = self.pulsed.spectroscopy_flux {
            positive("pulsed.spectroscopy_flux", f)?;
        }
        if self.scenario == Scenario::Fit && self.fit.data.is_none() {
            return Err("fit.data is required for scenario = \"fit\"".into());
        }
        let t = &self.transit;
        positive("transit.sigma_t_us", t.sigma_t_us)?;
        positive("transit.duration_us", t.duration_us)?;
        positive("transit.dt_ns", t.dt_ns)?;
        if self.fields.points < 2 || self.fields.indices.is_empty() {
            return Err("fields needs at least one index and two distance points".into());
        }
        Ok(())
    }

    pub fn model_config(&self) -> ModelConfig {
        let m = &self.model;
        let kappa_tot = self.resonator.kappa_tot_mhz * MHZ;
        let kappa_ext = self.resonator.kappa_ext_mhz * MHZ;
        let alpha_in = m.probe_flux.sqrt();
        ModelConfig {
            kappa0: kappa_tot - kappa_ext,
            kappa_ext,
            atom: AtomParams {
                gamma: 0.5 * self.atom.linewidth_mhz * MHZ,
                b_z: self.atom.b_gauss * GAUSS,
                ..AtomParams::default()
            },
            zeeman: self.atom.zeeman,
            delta_ca: m.delta_ca_mhz * MHZ,
            alpha_in,
            refractive_index: m.refractive_index,
            levels: match m.levels {
                Levels::Full => LevelSelection::Full,
                Levels::Pruned => LevelSelection::Pruned { hops: m.hops },
                Levels::TwoLevel => LevelSelection::TwoLevel,
            },
            cutoff_a: m.cutoff_a,
            cutoff_b: m.cutoff_b,
            budget: SpaceBudget { max_dim: m.max_dim },
            ..ModelConfig::default()
        }
    }

    pub fn detunings(&self) -> Vec<f64> {
        let s = &self.sweep;
        (0..s.points)
            .map(|k| (s.start_mhz + (s.stop_mhz - s.start_mhz) * k as f64 / (s.points - 1) as f64) * MHZ)
            .collect()
    }

    pub fn distribution(&self) -> GDistribution {
        let d = &self.distribution;
        GDistribution {
            g_mean: d.g_mean_mhz * MHZ,
            g_sigma: d.g_sigma_mhz * MHZ,
            g_min: d.g_min_mhz * MHZ,
            g_max: d.g_max_mhz * MHZ,
            n_nodes: d.nodes,
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            max_iterations: self.fit.max_iterations,
            tolerance: self.fit.tolerance,
            sigma_min: self.fit.sigma_min_mhz * MHZ,
        }
    }

    /// Model for the pulsed scenario: the probe amplitude is the spectroscopy
    /// flux, the preparing light keeps the detection flux.
    pub fn pulsed_setup(&self) -> (ModelConfig, ProbeWindow) {
        let mut model = self.model_config();
        if let Some(f) = self.pulsed.spectroscopy_flux {
            model.alpha_in = f.sqrt();
        }
        let window = ProbeWindow {
            t_start: self.pulsed.start_ns.map(|t| t * 1e-9),
            t_len: self.pulsed.window_ns * 1e-9,
            pump_alpha: Some(self.model.probe_flux.sqrt()),
            ..ProbeWindow::default()
        };
        (model, window)
    }

    pub fn transit_params(&self) -> TransitParams {
        let t = &self.transit;
        TransitParams {
            g_peak: t.g_peak_mhz * MHZ,
            sigma_t: t.sigma_t_us * 1e-6,
            duration: t.duration_us * 1e-6,
            dt: t.dt_ns * 1e-9,
            peak_jitter: t.peak_jitter,
        }
    }

    pub fn trigger_config(&self) -> TriggerConfig {
        let t = &self.transit;
        let base = TriggerConfig::for_geometry(self.model.geometry);
        TriggerConfig {
            dt1: t.dt1_us * 1e-6,
            eta1: t.eta1.unwrap_or(base.eta1),
            dt2: t.dt2_us * 1e-6,
            eta2: t.eta2,
            detector_efficiency: t.detector_efficiency,
            probe_flux: self.model.probe_flux,
            gap: t.gap_us * 1e-6,
            residual_transmission: t.residual_transmission,
        }
    }
}
