use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    empty_cavity_transmission, transmission_from_state, two_level_amplitude, GDistribution, Geometry, SpectrumError,
    SpectrumResult, MHZ,
};
use crate::atom::{AtomParams, LevelScheme, Sublevel, TransitionTable};
use crate::fields::{longitudinal_ratio, ModeClass, ModePolarization, RefractiveRatio, Sense, SILICA_INDEX};
use crate::quantum::{
    build_hamiltonian, build_liouvillian, build_operators, build_space, c64, steady_state, CompositeSpace,
    DensityOperator, EvolveOptions, Liouvillian, ModeCoupling, Operators, SpaceBudget, SteadyStateOptions,
    SystemParams,
};

/// Input flux of the detection light, photons/s.
pub const DEFAULT_PROBE_FLUX: f64 = 1.2e7;

/// Which atomic sublevels enter the quantum model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevelSelection {
    /// All 7 + 9 sublevels.
    Full,
    /// Sublevels within `hops` dipole transitions of the prepared ground state.
    Pruned { hops: usize },
    /// Only the dominant transition of the geometry.
    TwoLevel,
}

/// Physical and numerical settings shared by all spectrum calculations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kappa0: f64,
    pub kappa_ext: f64,
    pub atom: AtomParams,
    /// Include Zeeman shifts of the sublevels.
    pub zeeman: bool,
    /// Resonator–atom detuning with respect to the dominant transition (rad/s).
    pub delta_ca: f64,
    /// Probe amplitude, √(photons/s).
    pub alpha_in: f64,
    pub refractive_index: f64,
    /// Overrides `|E_long/E_trans|` of the TM modes (1 = perfectly circular).
    pub tm_ratio: Option<f64>,
    pub levels: LevelSelection,
    pub cutoff_a: usize,
    pub cutoff_b: usize,
    pub azimuth_phase: f64,
    pub backscatter: f64,
    pub budget: SpaceBudget,
    pub solver: SteadyStateOptions,
    pub evolve: EvolveOptions,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kappa0: 5.0 * MHZ,
            kappa_ext: 5.0 * MHZ,
            atom: AtomParams::default(),
            zeeman: true,
            delta_ca: 0.0,
            alpha_in: DEFAULT_PROBE_FLUX.sqrt(),
            refractive_index: SILICA_INDEX,
            tm_ratio: None,
            levels: LevelSelection::Full,
            cutoff_a: 1,
            cutoff_b: 1,
            azimuth_phase: 0.0,
            backscatter: 0.0,
            budget: SpaceBudget::default(),
            solver: SteadyStateOptions::default(),
            evolve: EvolveOptions::default(),
        }
    }
}

impl ModelConfig {
    pub fn kappa_tot(&self) -> f64 {
        self.kappa0 + self.kappa_ext
    }

    pub fn tm_longitudinal_ratio(&self) -> Result<f64, SpectrumError> {
        match self.tm_ratio {
            Some(r) if r >= 0.0 => Ok(r),
            Some(r) => Err(SpectrumError::Domain(format!("negative TM ratio {r}"))),
            None => Ok(longitudinal_ratio(RefractiveRatio::from_index(self.refractive_index)?.value())?),
        }
    }

    /// Mode polarizations `(a, b)` for a mode class.
    pub fn modes(&self, class: ModeClass) -> Result<(ModePolarization, ModePolarization), SpectrumError> {
        Ok(match class {
            ModeClass::Tm => {
                let r = self.tm_longitudinal_ratio()?;
                (ModePolarization::tm(Sense::Plus, r)?, ModePolarization::tm(Sense::Minus, r)?)
            }
            ModeClass::Te => (ModePolarization::te(Sense::Plus), ModePolarization::te(Sense::Minus)),
        })
    }

    pub fn scheme(&self, geometry: Geometry) -> LevelScheme {
        if geometry == Geometry::Empty {
            return LevelScheme::two_level();
        }
        let (m_g, m_e) = geometry.reference_transition();
        match self.levels {
            LevelSelection::Full => LevelScheme::rb85(&self.atom, self.zeeman).with_reference(m_g, m_e),
            LevelSelection::Pruned { hops } => LevelScheme::rb85(&self.atom, self.zeeman)
                .with_reference(m_g, m_e)
                .pruned(geometry.initial_m(), hops),
            LevelSelection::TwoLevel => {
                let levels = [Sublevel::ground(m_g), Sublevel::excited(m_e)]
                    .into_iter()
                    .map(|l| if self.zeeman { self.atom.shifted(l) } else { l })
                    .collect();
                LevelScheme::new(levels, &TransitionTable::rb85_d2()).with_reference(m_g, m_e)
            }
        }
    }
}

/// Quantum model of one geometry with the space and operators built once.
pub struct SpectrumModel {
    config: ModelConfig,
    geometry: Geometry,
    space: CompositeSpace,
    ops: Operators,
    mode_a: ModeCoupling,
    mode_b: ModeCoupling,
    excitations: Vec<f64>,
}

impl SpectrumModel {
    pub fn new(config: &ModelConfig, geometry: Geometry) -> Result<Self, SpectrumError> {
        if geometry == Geometry::Legacy {
            return Err(SpectrumError::Domain("the legacy benchmark has no quantum model".into()));
        }
        config.atom.validate().map_err(|e| SpectrumError::Domain(e.to_string()))?;
        let space = build_space(config.scheme(geometry), config.cutoff_a, config.cutoff_b, config.budget)?;
        let ops = build_operators(&space);
        let (pa, pb) = config.modes(geometry.class())?;
        let excitations = (0..space.dim()).map(|i| space.excitations(i) as f64).collect();
        Ok(Self {
            config: *config,
            geometry,
            space,
            ops,
            mode_a: ModeCoupling::new(pa)?,
            mode_b: ModeCoupling::new(pb)?,
            excitations,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn operators(&self) -> &Operators {
        &self.ops
    }

    pub fn params(&self, g: f64, delta: f64) -> SystemParams {
        let c = &self.config;
        SystemParams {
            g0: if self.geometry == Geometry::Empty { 0.0 } else { g },
            kappa0: c.kappa0,
            kappa_ext: c.kappa_ext,
            gamma: c.atom.gamma,
            delta_cs: delta,
            delta_ca: c.delta_ca,
            drive_mode: self.geometry.drive_mode(),
            alpha_in: c.alpha_in,
            mode_a: self.mode_a,
            mode_b: self.mode_b,
            azimuth_phase: c.azimuth_phase,
            backscatter: c.backscatter,
        }
    }

    pub fn generator(&self, g: f64, delta: f64) -> Result<Liouvillian, SpectrumError> {
        let p = self.params(g, delta);
        let h = build_hamiltonian(&self.space, &self.ops, &p)?;
        Ok(build_liouvillian(&h, &self.ops, &p))
    }

    /// Diagonal of the detuning term: `H(Δ) = H(0) + Δ N` with `N` the
    /// excitation number, so `L(Δ) = L(0) + Δ·(−i)(N_i − N_j)`.
    pub fn detuning_shift(&self, delta: f64) -> Vec<c64> {
        let d = self.space.dim();
        let n = &self.excitations;
        (0..d * d).map(|k| c64::new(0.0, -delta * (n[k % d] - n[k / d]))).collect()
    }

    pub fn steady_state(&self, g: f64, delta: f64) -> Result<DensityOperator, SpectrumError> {
        let l = self.generator(g, delta)?;
        steady_state(&l, &self.config.solver).map_err(|e| at(delta, e))
    }

    pub fn transmission(&self, g: f64, delta: f64) -> Result<f64, SpectrumError> {
        if let Some(empty) = self.decoupled(g)? {
            return empty.transmission(0.0, delta);
        }
        let rho = self.steady_state(g, delta)?;
        transmission_from_state(&rho, &self.ops, &self.params(g, delta))
    }

    /// At `g = 0` the atomic populations are undetermined; the resonator sees
    /// an empty cavity with the same photon cutoffs.
    fn decoupled(&self, g: f64) -> Result<Option<SpectrumModel>, SpectrumError> {
        if g != 0.0 || self.geometry == Geometry::Empty {
            return Ok(None);
        }
        let cutoff = self.config.cutoff_a.max(self.config.cutoff_b);
        let config = ModelConfig { cutoff_a: cutoff, cutoff_b: 1, ..self.config };
        Ok(Some(SpectrumModel::new(&config, Geometry::Empty)?))
    }

    /// Steady-state transmission at every detuning for one coupling strength.
    pub fn sweep(&self, g: f64, detunings: &[f64]) -> Result<Vec<f64>, SpectrumError> {
        if self.config.alpha_in == 0.0 {
            return Err(SpectrumError::UndefinedTransmission);
        }
        if let Some(empty) = self.decoupled(g)? {
            return empty.sweep(0.0, detunings);
        }
        let base = self.generator(g, 0.0)?;
        detunings
            .par_iter()
            .map(|&delta| {
                let l = base.with_diagonal(&self.detuning_shift(delta));
                let rho = steady_state(&l, &self.config.solver).map_err(|e| at(delta, e))?;
                transmission_from_state(&rho, &self.ops, &self.params(g, delta))
            })
            .collect()
    }

    /// Transmission on a grid of coupling strengths and detunings.
    pub fn table(&self, nodes: &[f64], detunings: &[f64]) -> Result<TransmissionTable, SpectrumError> {
        let values = nodes.iter().map(|&g| self.sweep(g, detunings)).collect::<Result<Vec<_>, _>>()?;
        Ok(TransmissionTable { nodes: nodes.to_vec(), detunings: detunings.to_vec(), values })
    }
}

fn at(delta: f64, source: crate::quantum::QuantumError) -> SpectrumError {
    SpectrumError::AtDetuning { delta_mhz: delta / MHZ, source }
}

/// `values[k][i]` is the transmission at `nodes[k]`, `detunings[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionTable {
    pub nodes: Vec<f64>,
    pub detunings: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl TransmissionTable {
    /// Builds a table for any geometry, the legacy one included.
    pub fn compute(
        config: &ModelConfig,
        geometry: Geometry,
        nodes: &[f64],
        detunings: &[f64],
    ) -> Result<Self, SpectrumError> {
        if geometry == Geometry::Legacy {
            let values = nodes.iter().map(|&g| legacy_values(config, detunings, g)).collect();
            return Ok(Self { nodes: nodes.to_vec(), detunings: detunings.to_vec(), values });
        }
        SpectrumModel::new(config, geometry)?.table(nodes, detunings)
    }

    /// `Σ_k w_k T_k(Δ)`.
    pub fn average(&self, weights: &[f64]) -> Result<Vec<f64>, SpectrumError> {
        if weights.len() != self.nodes.len() {
            return Err(SpectrumError::Domain(format!(
                "{} weights for {} nodes",
                weights.len(),
                self.nodes.len()
            )));
        }
        let mut out = vec![0.0; self.detunings.len()];
        for (w, row) in weights.iter().zip(&self.values) {
            for (o, t) in out.iter_mut().zip(row) {
                *o += w * t;
            }
        }
        Ok(out)
    }
}

fn legacy_values(config: &ModelConfig, detunings: &[f64], g: f64) -> Vec<f64> {
    detunings
        .iter()
        .map(|&d| {
            let delta_a = d - config.delta_ca;
            let coupled =
                two_level_amplitude(d, delta_a, std::f64::consts::SQRT_2 * g, config.kappa0, config.kappa_ext, config.atom.gamma);
            let uncoupled = two_level_amplitude(d, delta_a, 0.0, config.kappa0, config.kappa_ext, config.atom.gamma);
            ((coupled + uncoupled) * 0.5).norm_sqr()
        })
        .collect()
}

/// Transversal ring-resonator benchmark: the atom sits at the node of one
/// standing-wave mode and the antinode (coupling `√2 g`) of the other, and the
/// two channels each carry half of the probe amplitude.
pub fn legacy_standing_wave_spectrum(config: &ModelConfig, detunings: &[f64], g: f64) -> SpectrumResult {
    let mut out = SpectrumResult::new(detunings.to_vec(), legacy_values(config, detunings, g), Geometry::Legacy)
        .expect("legacy transmission is finite and non-negative");
    out.coupling = format!("g/2pi = {} MHz", g / MHZ);
    out
}

/// Steady-state spectrum at a fixed coupling strength.
pub fn sweep_spectrum(
    config: &ModelConfig,
    geometry: Geometry,
    detunings: &[f64],
    g: f64,
) -> Result<SpectrumResult, SpectrumError> {
    if geometry == Geometry::Legacy {
        return Ok(legacy_standing_wave_spectrum(config, detunings, g));
    }
    let t = SpectrumModel::new(config, geometry)?.sweep(g, detunings)?;
    let mut out = SpectrumResult::new(detunings.to_vec(), t, geometry)?;
    out.coupling = format!("g/2pi = {} MHz", g / MHZ);
    Ok(out)
}

/// Spectrum averaged over a truncated-normal distribution of coupling strengths.
pub fn averaged_spectrum(
    config: &ModelConfig,
    geometry: Geometry,
    detunings: &[f64],
    dist: &GDistribution,
) -> Result<SpectrumResult, SpectrumError> {
    let q = dist.quadrature()?;
    let nodes: Vec<f64> = q.iter().map(|&(g, _)| g).collect();
    let weights: Vec<f64> = q.iter().map(|&(_, w)| w).collect();
    let table = TransmissionTable::compute(config, geometry, &nodes, detunings)?;
    let mut out = SpectrumResult::new(detunings.to_vec(), table.average(&weights)?, geometry)?;
    out.coupling = format!(
        "truncated normal: mean {} MHz, sigma {} MHz, bounds [{}, {}] MHz, {} nodes",
        dist.g_mean / MHZ,
        dist.g_sigma / MHZ,
        dist.g_min / MHZ,
        dist.g_max / MHZ,
        dist.n_nodes
    );
    Ok(out)
}

/// Closed-form empty-cavity spectrum in the same container.
pub fn empty_cavity_spectrum(config: &ModelConfig, detunings: &[f64]) -> SpectrumResult {
    let t = detunings.iter().map(|&d| empty_cavity_transmission(d, config.kappa0, config.kappa_ext)).collect();
    SpectrumResult::new(detunings.to_vec(), t, Geometry::Empty).expect("closed form is non-negative")
}
