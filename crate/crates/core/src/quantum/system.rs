use serde::{Deserialize, Serialize};

use super::operators::Operators;
use super::space::CompositeSpace;
use super::{c64, Matrix, QuantumError};
use crate::fields::{mode_overlaps, FieldError, ModePolarization, Spherical};

/// Which mode the probe drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveMode {
    /// Mode `a`, + propagation sense.
    A,
    /// Mode `b`, − propagation sense.
    B,
}

/// Polarization of one resonator mode together with its overlap amplitudes
/// `u_q = ê·e_q*` with the spherical components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCoupling {
    pub polarization: ModePolarization,
    pub overlaps: [c64; 3],
}

impl ModeCoupling {
    pub fn new(polarization: ModePolarization) -> Result<Self, FieldError> {
        Ok(Self { polarization, overlaps: mode_overlaps(&polarization)? })
    }

    pub fn overlap(&self, q: Spherical) -> c64 {
        self.overlaps[q.index()]
    }

    pub fn check_normalized(&self, tol: f64) -> Result<(), QuantumError> {
        let total: f64 = self.overlaps.iter().map(|u| u.norm_sqr()).sum();
        if (total - 1.0).abs() > tol {
            return Err(QuantumError::Consistency(format!(
                "mode overlaps sum to {total}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Rates (rad/s) and detunings (rad/s) of the driven atom–resonator–fibre system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Peak atom–mode coupling `g₀`, multiplied by overlap and dipole amplitude.
    pub g0: f64,
    pub kappa0: f64,
    pub kappa_ext: f64,
    pub gamma: f64,
    /// Resonator–probe detuning `Δ_rs = ω_r − ω_s`.
    pub delta_cs: f64,
    /// Resonator–atom detuning `ω_r − ω_a` with respect to the reference transition.
    pub delta_ca: f64,
    pub drive_mode: DriveMode,
    /// Input amplitude in √(photons/s).
    pub alpha_in: f64,
    pub mode_a: ModeCoupling,
    pub mode_b: ModeCoupling,
    /// Azimuthal position of the atom, entering as `e^{±iφ}` on the two modes.
    pub azimuth_phase: f64,
    /// Coherent backscattering `h (a†b + b†a)`; zero unless studying sensitivity.
    pub backscatter: f64,
}

impl SystemParams {
    pub fn kappa_tot(&self) -> f64 {
        self.kappa0 + self.kappa_ext
    }

    /// Drive strength `√(2κ_ext) α_in` entering the Hamiltonian.
    pub fn drive_rate(&self) -> f64 {
        (2.0 * self.kappa_ext).sqrt() * self.alpha_in
    }

    /// Input amplitude giving mean photon number `n` in the empty, resonant
    /// cavity, `n = 2κ_ext α² / κ_tot²`.
    pub fn alpha_for_photon_number(n: f64, kappa0: f64, kappa_ext: f64) -> f64 {
        (n * (kappa0 + kappa_ext).powi(2) / (2.0 * kappa_ext)).sqrt()
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        for (name, v) in [("kappa0", self.kappa0), ("kappa_ext", self.kappa_ext), ("gamma", self.gamma)] {
            if !(v > 0.0) {
                return Err(QuantumError::Consistency(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.g0 >= 0.0) {
            return Err(QuantumError::Consistency(format!("g0 must be non-negative, got {}", self.g0)));
        }
        self.mode_a.check_normalized(1e-10)?;
        self.mode_b.check_normalized(1e-10)?;
        Ok(())
    }

    pub fn driven_mode<'a>(&self, ops: &'a Operators) -> &'a Matrix {
        match self.drive_mode {
            DriveMode::A => &ops.a,
            DriveMode::B => &ops.b,
        }
    }
}

/// Generalized Jaynes–Cummings Hamiltonian in the frame rotating at the probe
/// frequency:
///
/// `H = Δ_cs (a†a + b†b) + Σ_e (Δ_as + ζ_e − ζ_ref)|e⟩⟨e| + Σ_g ζ_g |g⟩⟨g|
///    + g₀ Σ_q [u_q(a) e^{iφ} a σ_q† + u_q(b) e^{−iφ} b σ_q†] + h.c.
///    + i√(2κ_ext) α_in (d† − d) + h (a†b + b†a)`
///
/// with `Δ_as = Δ_cs − Δ_ca` and `σ_q†` raising with the dipole amplitudes.
pub fn build_hamiltonian(space: &CompositeSpace, ops: &Operators, params: &SystemParams) -> Result<Matrix, QuantumError> {
    params.validate()?;
    let dim = ops.dim;
    let mut h = Matrix::zeros(dim, dim);
    let delta_as = params.delta_cs - params.delta_ca;
    let offset = space.scheme.line_offset();

    for idx in 0..dim {
        let (atom, na, nb) = space.decompose(idx);
        let level = &space.scheme.levels()[atom];
        let atomic = if level.is_excited() {
            delta_as + level.energy_shift - offset
        } else {
            level.energy_shift
        };
        h[(idx, idx)] = c64::new(params.delta_cs * (na + nb) as f64 + atomic, 0.0);
    }

    let phase_a = c64::from_polar(1.0, params.azimuth_phase);
    let phase_b = c64::from_polar(1.0, -params.azimuth_phase);
    let mut coupling = Matrix::zeros(dim, dim);
    for q in Spherical::ALL {
        let ua = params.mode_a.overlap(q) * phase_a * params.g0;
        let ub = params.mode_b.overlap(q) * phase_b * params.g0;
        if ua == c64::new(0.0, 0.0) && ub == c64::new(0.0, 0.0) {
            continue;
        }
        let raise = ops.sigma(q).adjoint().to_owned();
        coupling += (&ops.a * &raise) * faer::Scale(ua) + (&ops.b * &raise) * faer::Scale(ub);
    }
    h += &coupling + coupling.adjoint();

    let d = params.driven_mode(ops);
    let eps = params.drive_rate();
    if eps != 0.0 {
        h += (d.adjoint().to_owned() - d) * faer::Scale(c64::new(0.0, eps));
    }
    if params.backscatter != 0.0 {
        let ab = &ops.a.adjoint() * &ops.b;
        h += (&ab + ab.adjoint()) * faer::Scale(c64::new(params.backscatter, 0.0));
    }
    Ok(h)
}
