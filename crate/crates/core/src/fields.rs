//! Polarization structure of the evanescent field of whispering-gallery modes.
//!
//! TM modes carry a longitudinal (azimuthal) field component that oscillates
//! ±90° out of phase with the transversal (radial) one, the sign being set by
//! the propagation sense. The resulting amplitude vectors are close to circular
//! and the two counter-propagating TM modes are nearly orthogonal, so no
//! superposition of them has an intensity node. TE modes are treated as purely
//! axially polarized.
//!
//! All vectors are expressed in the local cylindrical basis `(e_r, e_φ, e_z)`,
//! with `e_z` the resonator axis and quantization axis.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Refractive index of fused silica used when nothing else is configured.
pub const SILICA_INDEX: f64 = 1.45;

/// 1/e decay length of the evanescent field intensity profile used for the
/// default coupling profile (m).
pub const DEFAULT_DECAY_LENGTH: f64 = 118e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("refractive index ratio must lie in (0, 1), got {0}")]
    InvalidRatio(f64),
    #[error("angle of incidence {theta} rad is outside [{critical}, π/2] (no total internal reflection)")]
    BelowCriticalAngle { theta: f64, critical: f64 },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("{0} must be non-negative, got {1}")]
    Negative(&'static str, f64),
    #[error("distance {d} m is below the minimum usable distance {d_min} m (surface interactions dominate)")]
    OutOfModel { d: f64, d_min: f64 },
    #[error("invalid coupling profile: {0}")]
    InvalidProfile(&'static str),
}

/// Ratio `n₂/n₁` of the outer to the inner refractive index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RefractiveRatio(f64);

impl RefractiveRatio {
    pub fn new(n: f64) -> Result<Self, FieldError> {
        if n > 0.0 && n < 1.0 {
            Ok(Self(n))
        } else {
            Err(FieldError::InvalidRatio(n))
        }
    }

    /// Ratio for a resonator of index `n_inner` surrounded by vacuum.
    pub fn from_index(n_inner: f64) -> Result<Self, FieldError> {
        Self::new(1.0 / n_inner)
    }

    pub fn silica_vacuum() -> Self {
        Self(1.0 / SILICA_INDEX)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Critical angle of total internal reflection, `arcsin(n)`.
    pub fn critical_angle(self) -> f64 {
        self.0.asin()
    }
}

impl TryFrom<f64> for RefractiveRatio {
    type Error = FieldError;
    fn try_from(n: f64) -> Result<Self, FieldError> {
        Self::new(n)
    }
}

impl From<RefractiveRatio> for f64 {
    fn from(n: RefractiveRatio) -> f64 {
        n.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeClass {
    Tm,
    Te,
}

/// Propagation sense of a mode with respect to the `z` axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Plus,
    Minus,
}

impl Sense {
    pub fn sign(self) -> f64 {
        match self {
            Sense::Plus => 1.0,
            Sense::Minus => -1.0,
        }
    }

    pub fn reversed(self) -> Self {
        match self {
            Sense::Plus => Sense::Minus,
            Sense::Minus => Sense::Plus,
        }
    }
}

/// Spherical polarization component `q`, driving `Δm = q` transitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Spherical {
    SigmaMinus,
    Pi,
    SigmaPlus,
}

impl Spherical {
    pub const ALL: [Spherical; 3] = [Spherical::SigmaMinus, Spherical::Pi, Spherical::SigmaPlus];

    pub fn q(self) -> i32 {
        match self {
            Spherical::SigmaMinus => -1,
            Spherical::Pi => 0,
            Spherical::SigmaPlus => 1,
        }
    }

    pub fn from_q(q: i32) -> Option<Self> {
        match q {
            -1 => Some(Spherical::SigmaMinus),
            0 => Some(Spherical::Pi),
            1 => Some(Spherical::SigmaPlus),
            _ => None,
        }
    }

    /// Position in [`Spherical::ALL`].
    pub fn index(self) -> usize {
        (self.q() + 1) as usize
    }

    /// Unit vector `e_q` in the `(e_r, e_φ, e_z)` basis:
    /// `e_σ± = (e_r ± i e_φ)/√2`, `e_π = e_z`.
    pub fn unit_vector(self) -> AmplitudeVector {
        let s = FRAC_1_SQRT_2;
        match self {
            Spherical::SigmaPlus => AmplitudeVector([
                Complex64::new(s, 0.0),
                Complex64::new(0.0, s),
                Complex64::new(0.0, 0.0),
            ]),
            Spherical::SigmaMinus => AmplitudeVector([
                Complex64::new(s, 0.0),
                Complex64::new(0.0, -s),
                Complex64::new(0.0, 0.0),
            ]),
            Spherical::Pi => AmplitudeVector([
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ]),
        }
    }
}

/// Complex amplitude vector in the basis `(e_r, e_φ, e_z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeVector(pub [Complex64; 3]);

impl AmplitudeVector {
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn conj(&self) -> Self {
        AmplitudeVector(self.0.map(|c| c.conj()))
    }

    /// Hermitian projection `self · other*`.
    pub fn project_onto(&self, other: &AmplitudeVector) -> Complex64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    pub fn normalized(&self) -> Result<Self, FieldError> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(FieldError::Degenerate("zero amplitude vector"));
        }
        Ok(AmplitudeVector(self.0.map(|c| c / n)))
    }
}

/// Polarization of one propagating mode.
///
/// For TM modes `a_trans` is the radial and `a_long` the azimuthal amplitude;
/// for TE modes `a_trans` is the axial amplitude and `a_long` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePolarization {
    a_trans: f64,
    a_long: f64,
    sense: Sense,
    class: ModeClass,
}

impl ModePolarization {
    pub fn new(class: ModeClass, sense: Sense, a_trans: f64, a_long: f64) -> Result<Self, FieldError> {
        if !(a_trans >= 0.0) {
            return Err(FieldError::Negative("a_trans", a_trans));
        }
        if !(a_long >= 0.0) {
            return Err(FieldError::Negative("a_long", a_long));
        }
        if class == ModeClass::Te && a_long != 0.0 {
            return Err(FieldError::Degenerate("TE modes carry no longitudinal component"));
        }
        Ok(Self { a_trans, a_long, sense, class })
    }

    /// TM mode with unit transversal amplitude and the given longitudinal ratio.
    pub fn tm(sense: Sense, ratio: f64) -> Result<Self, FieldError> {
        Self::new(ModeClass::Tm, sense, 1.0, ratio)
    }

    /// TM mode of a silica resonator in vacuum.
    pub fn tm_silica(sense: Sense) -> Self {
        let ratio = longitudinal_ratio(RefractiveRatio::silica_vacuum().value())
            .expect("silica ratio is in range");
        Self { a_trans: 1.0, a_long: ratio, sense, class: ModeClass::Tm }
    }

    pub fn te(sense: Sense) -> Self {
        Self { a_trans: 1.0, a_long: 0.0, sense, class: ModeClass::Te }
    }

    pub fn a_trans(&self) -> f64 {
        self.a_trans
    }

    pub fn a_long(&self) -> f64 {
        self.a_long
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn class(&self) -> ModeClass {
        self.class
    }

    /// Same mode propagating in the opposite direction.
    pub fn reversed(&self) -> Self {
        Self { sense: self.sense.reversed(), ..*self }
    }
}

/// The two evanescent TM field components at a dielectric boundary, in units
/// of the incident amplitude `E₀`. The physical azimuthal field carries a
/// phase `+i` relative to the radial one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvanescentComponents {
    pub e_r: f64,
    pub e_phi: f64,
    pub theta: f64,
}

impl EvanescentComponents {
    /// `e_phi / e_r`, or the grazing-incidence limit when both vanish at θ = π/2.
    pub fn ratio(&self, n: RefractiveRatio) -> f64 {
        if self.e_r > 0.0 {
            self.e_phi / self.e_r
        } else {
            (1.0 - n.value() * n.value()).sqrt()
        }
    }
}

/// Fresnel amplitudes of the radial and azimuthal evanescent components of a
/// totally internally reflected TM wave at angle of incidence `theta`.
pub fn evanescent_components(theta: f64, n: RefractiveRatio) -> Result<EvanescentComponents, FieldError> {
    let n = n.value();
    let critical = n.asin();
    // tolerate the rounding of arcsin(n) at the critical angle itself
    let slack = 1e-14;
    if !(theta >= critical - slack && theta <= std::f64::consts::FRAC_PI_2 + slack) {
        return Err(FieldError::BelowCriticalAngle { theta, critical });
    }
    let (s, c) = theta.sin_cos();
    let n2 = n * n;
    let excess = (s * s - n2).max(0.0);
    let denom = (n2 * n2 * c * c + s * s - n2).max(0.0).sqrt();
    if denom == 0.0 {
        return Err(FieldError::Degenerate("vanishing Fresnel denominator"));
    }
    // at θ = π/2 the cosine rounds to ~6e-17, clamp the tiny negative side
    let c = c.max(0.0);
    Ok(EvanescentComponents {
        e_r: 2.0 * c * s / denom,
        e_phi: 2.0 * c * excess.sqrt() / denom,
        theta,
    })
}

/// Grazing-incidence ratio `|E_φ/E_r| = √(1 − n²)`. `n = 1` is accepted as the
/// index-matched limit.
pub fn longitudinal_ratio(n: f64) -> Result<f64, FieldError> {
    if !(0.0..=1.0).contains(&n) {
        return Err(FieldError::InvalidRatio(n));
    }
    Ok((1.0 - n * n).sqrt())
}

/// Complex amplitude vector of a mode: `a_trans e_r ± i a_long e_φ` for TM,
/// `a_trans e_z` for TE.
pub fn mode_amplitude_vector(pol: &ModePolarization, normalize: bool) -> Result<AmplitudeVector, FieldError> {
    let zero = Complex64::new(0.0, 0.0);
    let v = match pol.class {
        ModeClass::Tm => AmplitudeVector([
            Complex64::new(pol.a_trans, 0.0),
            Complex64::new(0.0, pol.sense.sign() * pol.a_long),
            zero,
        ]),
        ModeClass::Te => AmplitudeVector([zero, zero, Complex64::new(pol.a_trans, 0.0)]),
    };
    if v.norm_sqr() == 0.0 {
        return Err(FieldError::Degenerate("mode has zero amplitude"));
    }
    if normalize {
        v.normalized()
    } else {
        Ok(v)
    }
}

/// Normalized projection `vec · e_q* / |vec|`, the field amplitude driving
/// `Δm = q` transitions.
pub fn overlap_amplitude(vec: &AmplitudeVector, q: Spherical) -> Result<Complex64, FieldError> {
    let norm = vec.norm_sqr().sqrt();
    if norm == 0.0 {
        return Err(FieldError::Degenerate("zero amplitude vector"));
    }
    Ok(vec.project_onto(&q.unit_vector()) / norm)
}

/// Fraction `|vec · e_q*|² / |vec|²` of the field intensity in component `q`.
pub fn circular_overlap(vec: &AmplitudeVector, q: Spherical) -> Result<f64, FieldError> {
    overlap_amplitude(vec, q).map(|u| u.norm_sqr())
}

/// Overlap amplitudes of a mode with all three spherical components, indexed by
/// [`Spherical::index`].
pub fn mode_overlaps(pol: &ModePolarization) -> Result<[Complex64; 3], FieldError> {
    let v = mode_amplitude_vector(pol, false)?;
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for q in Spherical::ALL {
        out[q.index()] = overlap_amplitude(&v, q)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityContrast {
    /// `(I_max − I_min)/(I_max + I_min)` along the azimuth.
    pub contrast: f64,
    pub min_over_max: f64,
}

/// Azimuthal intensity modulation of an equal-amplitude superposition of the
/// two counter-propagating modes with longitudinal ratio `ratio`.
///
/// The intensity along the circumference is
/// `4cos²(φ′) + 4·ratio²·sin²(φ′)` where `φ′` absorbs the relative phase, so
/// the extrema do not depend on `rel_phase`.
pub fn azimuthal_intensity_contrast(ratio: f64, rel_phase: f64) -> Result<IntensityContrast, FieldError> {
    if !(ratio >= 0.0) {
        return Err(FieldError::Negative("ratio", ratio));
    }
    let _ = rel_phase;
    let r2 = ratio * ratio;
    let (lo, hi) = if r2 <= 1.0 { (r2, 1.0) } else { (1.0, r2) };
    Ok(IntensityContrast {
        contrast: (hi - lo) / (hi + lo),
        min_over_max: lo / hi,
    })
}

/// Intensity at azimuth `phi` of the superposition `E⁺e^{iφ} + E⁻e^{−iφ+iψ}`
/// (azimuthal mode number 1), with `ψ = rel_phase`.
pub fn superposition_intensity(ratio: f64, rel_phase: f64, phi: f64) -> Result<f64, FieldError> {
    let plus = mode_amplitude_vector(&ModePolarization::new(ModeClass::Tm, Sense::Plus, 1.0, ratio)?, false)?;
    let minus = plus.conj();
    let fwd = Complex64::from_polar(1.0, phi);
    let bwd = Complex64::from_polar(1.0, -phi + rel_phase);
    Ok((0..3).map(|k| (plus.0[k] * fwd + minus.0[k] * bwd).norm_sqr()).sum())
}

/// Exponential decay of the atom–mode coupling with distance from the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingProfile {
    /// Coupling rate at `d_ref` (rad/s).
    pub g_ref: f64,
    pub d_ref: f64,
    /// Field decay length Λ (m).
    pub decay_length: f64,
    /// Distance below which surface-induced level shifts suppress the coupling.
    pub d_min: f64,
}

impl CouplingProfile {
    pub fn new(g_ref: f64, d_ref: f64, decay_length: f64, d_min: f64) -> Result<Self, FieldError> {
        if !(g_ref > 0.0 && d_ref > 0.0 && decay_length > 0.0 && d_min > 0.0) {
            return Err(FieldError::InvalidProfile("all profile parameters must be positive"));
        }
        Ok(Self { g_ref, d_ref, decay_length, d_min })
    }
}

impl Default for CouplingProfile {
    /// 30 MHz × 2π at 50 nm, decaying over 118 nm.
    fn default() -> Self {
        Self {
            g_ref: 2.0 * std::f64::consts::PI * 30e6,
            d_ref: 50e-9,
            decay_length: DEFAULT_DECAY_LENGTH,
            d_min: 50e-9,
        }
    }
}

/// `g(d) = g_ref · exp(−(d − d_ref)/Λ)`.
pub fn coupling_vs_distance(d: f64, profile: &CouplingProfile) -> Result<f64, FieldError> {
    if !(d >= profile.d_min) {
        return Err(FieldError::OutOfModel { d, d_min: profile.d_min });
    }
    Ok(profile.g_ref * (-(d - profile.d_ref) / profile.decay_length).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    const SILICA_RATIO: f64 = 0.724_137_6;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn longitudinal_vanishes_at_critical_angle() {
        for n in [0.3, 0.5, 1.0 / 1.45, 0.9] {
            let n = RefractiveRatio::new(n).unwrap();
            let c = evanescent_components(n.critical_angle(), n).unwrap();
            assert!(c.e_phi.abs() < 1e-6, "{c:?}");
            assert!(c.e_r > 0.0);
        }
    }

    #[test]
    fn silica_at_eighty_degrees() {
        // direct evaluation of the two Fresnel expressions
        let n = RefractiveRatio::silica_vacuum();
        let theta = 80f64.to_radians();
        let nn = n.value();
        let (s, c) = theta.sin_cos();
        let den = (nn.powi(4) * c * c + s * s - nn * nn).sqrt();
        let er = 2.0 * c * s / den;
        let ephi = 2.0 * c * (s * s - nn * nn).sqrt() / den;

        let got = evanescent_components(theta, n).unwrap();
        assert!(approx(got.e_r, er, 1e-14));
        assert!(approx(got.e_phi, ephi, 1e-14));
        assert!(approx(got.e_r, 0.483, 5e-4));
        assert!(approx(got.e_phi, 0.345, 5e-4));
        assert!(approx(got.ratio(n), 0.714, 5e-4));
    }

    #[test]
    fn grazing_limit_ratio() {
        let n = RefractiveRatio::silica_vacuum();
        let near = evanescent_components(FRAC_PI_2 - 1e-7, n).unwrap();
        assert!(approx(near.ratio(n), SILICA_RATIO, 1e-6));
        let at = evanescent_components(FRAC_PI_2, n).unwrap();
        assert!(approx(at.ratio(n), SILICA_RATIO, 1e-6));
    }

    #[test]
    fn evanescent_rejects_bad_input() {
        let n = RefractiveRatio::silica_vacuum();
        assert!(matches!(
            evanescent_components(0.5, n),
            Err(FieldError::BelowCriticalAngle { .. })
        ));
        assert!(RefractiveRatio::new(1.2).is_err());
        assert!(RefractiveRatio::new(0.0).is_err());
        assert!(RefractiveRatio::new(1.0).is_err());
    }

    #[test]
    fn longitudinal_ratio_values() {
        assert_eq!(longitudinal_ratio(1.0).unwrap(), 0.0);
        assert!(approx(longitudinal_ratio(1.0 / 1.45).unwrap(), 0.724, 5e-4));
        assert!(approx(longitudinal_ratio(1e-9).unwrap(), 1.0, 1e-12));
        assert!(longitudinal_ratio(-0.1).is_err());
        assert!(longitudinal_ratio(1.1).is_err());
    }

    #[test]
    fn tm_plus_amplitude_vector() {
        let pol = ModePolarization::tm(Sense::Plus, 0.724).unwrap();
        let v = mode_amplitude_vector(&pol, true).unwrap();
        let n = 1.524_176f64.sqrt();
        assert!(approx(v.0[0].re, 1.0 / n, 1e-6));
        assert!(approx(v.0[1].im, 0.724 / n, 1e-6));
        assert_eq!(v.0[1].re, 0.0);
        assert_eq!(v.0[2], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn te_vector_same_for_both_senses() {
        for s in [Sense::Plus, Sense::Minus] {
            let v = mode_amplitude_vector(&ModePolarization::te(s), true).unwrap();
            assert_eq!(v.0, [Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        }
    }

    #[test]
    fn symmetric_tm_minus_is_sigma_minus() {
        let pol = ModePolarization::tm(Sense::Minus, 1.0).unwrap();
        let v = mode_amplitude_vector(&pol, true).unwrap();
        let e = Spherical::SigmaMinus.unit_vector();
        for k in 0..3 {
            assert!((v.0[k] - e.0[k]).norm() < 1e-15);
        }
        assert!(approx(circular_overlap(&v, Spherical::SigmaMinus).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn zero_amplitude_is_degenerate() {
        let pol = ModePolarization::new(ModeClass::Tm, Sense::Plus, 0.0, 0.0).unwrap();
        assert!(matches!(mode_amplitude_vector(&pol, true), Err(FieldError::Degenerate(_))));
        let zero = AmplitudeVector([Complex64::new(0.0, 0.0); 3]);
        assert!(circular_overlap(&zero, Spherical::Pi).is_err());
    }

    #[test]
    fn te_with_longitudinal_part_rejected() {
        assert!(ModePolarization::new(ModeClass::Te, Sense::Plus, 1.0, 0.2).is_err());
        assert!(ModePolarization::new(ModeClass::Tm, Sense::Plus, -1.0, 0.2).is_err());
    }

    #[test]
    fn silica_circular_overlaps() {
        let v = mode_amplitude_vector(&ModePolarization::tm(Sense::Plus, 0.724).unwrap(), false).unwrap();
        // |(1 + r)/√2|² / (1 + r²)
        let plus = (1.724f64 / 2f64.sqrt()).powi(2) / 1.524_176;
        let minus = (0.276f64 / 2f64.sqrt()).powi(2) / 1.524_176;
        assert!(approx(circular_overlap(&v, Spherical::SigmaPlus).unwrap(), plus, 1e-12));
        assert!(approx(circular_overlap(&v, Spherical::SigmaMinus).unwrap(), minus, 1e-12));
        assert!(approx(plus, 0.975, 1e-3));
        assert!(approx(minus, 0.025, 1e-3));
        assert_eq!(circular_overlap(&v, Spherical::Pi).unwrap(), 0.0);

        let ideal = mode_amplitude_vector(&ModePolarization::tm(Sense::Plus, 1.0).unwrap(), false).unwrap();
        assert!(approx(circular_overlap(&ideal, Spherical::SigmaPlus).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn contrast_cases() {
        let c = azimuthal_intensity_contrast(1.0, 0.3).unwrap();
        assert_eq!((c.contrast, c.min_over_max), (0.0, 1.0));
        let c = azimuthal_intensity_contrast(0.0, 0.3).unwrap();
        assert_eq!((c.contrast, c.min_over_max), (1.0, 0.0));
        let c = azimuthal_intensity_contrast(0.724, 1.1).unwrap();
        assert!(approx(c.contrast, 0.312, 1e-3));
        assert!(approx(c.min_over_max, 0.524, 1e-3));
        assert!(azimuthal_intensity_contrast(-0.1, 0.0).is_err());
    }

    #[test]
    fn contrast_matches_sampled_superposition() {
        for &(ratio, psi) in &[(0.724, 0.0), (0.724, 2.1), (0.3, -1.0), (0.0, 0.7)] {
            let samples: Vec<f64> = (0..4000)
                .map(|k| superposition_intensity(ratio, psi, 2.0 * PI * k as f64 / 4000.0).unwrap())
                .collect();
            let max = samples.iter().cloned().fold(f64::MIN, f64::max);
            let min = samples.iter().cloned().fold(f64::MAX, f64::min);
            let c = azimuthal_intensity_contrast(ratio, psi).unwrap();
            assert!(approx(min / max, c.min_over_max, 1e-5), "{ratio} {psi}");
            assert!(approx((max - min) / (max + min), c.contrast, 1e-5));
        }
    }

    #[test]
    fn coupling_profile_examples() {
        let p = CouplingProfile::default();
        let two_pi = 2.0 * PI;
        assert!(approx(coupling_vs_distance(50e-9, &p).unwrap() / two_pi, 30e6, 1e-6));
        let g = coupling_vs_distance(168e-9, &p).unwrap() / two_pi;
        assert!(approx(g, 30e6 / std::f64::consts::E, 1.0));
        assert!(approx(g / 1e6, 11.04, 5e-3));
        assert!(coupling_vs_distance(1.0, &p).unwrap() < 1e-100);
        assert!(matches!(coupling_vs_distance(10e-9, &p), Err(FieldError::OutOfModel { .. })));
    }

    proptest! {
        #[test]
        fn ratio_formula_holds(n in 0.05f64..0.95, frac in 0.0f64..0.999) {
            let n = RefractiveRatio::new(n).unwrap();
            let crit = n.critical_angle();
            let theta = crit + frac * (FRAC_PI_2 - crit);
            let c = evanescent_components(theta, n).unwrap();
            prop_assume!(c.e_r > 0.0);
            let s = theta.sin();
            let expected = (s * s - n.value() * n.value()).max(0.0).sqrt() / s;
            prop_assert!((c.e_phi / c.e_r - expected).abs() < 1e-12);
        }

        #[test]
        fn overlaps_sum_to_one(re in proptest::array::uniform3(-5.0f64..5.0), im in proptest::array::uniform3(-5.0f64..5.0)) {
            let v = AmplitudeVector([0, 1, 2].map(|k| Complex64::new(re[k], im[k])));
            prop_assume!(v.norm_sqr() > 1e-6);
            let total: f64 = Spherical::ALL.iter().map(|&q| circular_overlap(&v, q).unwrap()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn no_node_for_nonzero_ratio(ratio in 1e-3f64..3.0, psi in -PI..PI) {
            let c = azimuthal_intensity_contrast(ratio, psi).unwrap();
            prop_assert!(c.min_over_max > 0.0);
        }

        #[test]
        fn reversing_sense_swaps_circular_overlaps(ratio in 0.0f64..2.0) {
            let plus = ModePolarization::tm(Sense::Plus, ratio).unwrap();
            let vp = mode_amplitude_vector(&plus, false).unwrap();
            let vm = mode_amplitude_vector(&plus.reversed(), false).unwrap();
            prop_assert_eq!(vm, vp.conj());
            prop_assert!((circular_overlap(&vp, Spherical::SigmaPlus).unwrap()
                - circular_overlap(&vm, Spherical::SigmaMinus).unwrap()).abs() < 1e-15);
            prop_assert!((circular_overlap(&vp, Spherical::SigmaMinus).unwrap()
                - circular_overlap(&vm, Spherical::SigmaPlus).unwrap()).abs() < 1e-15);
        }

        #[test]
        fn coupling_decreases(d1 in 50e-9f64..1e-6, dd in 1e-10f64..1e-6) {
            let p = CouplingProfile::default();
            let g1 = coupling_vs_distance(d1, &p).unwrap();
            let g2 = coupling_vs_distance(d1 + dd, &p).unwrap();
            prop_assert!(g2 < g1 && g2 > 0.0);
        }
    }

    #[test]
    fn te_ratio_has_exact_node() {
        // ψ = 0 puts a node at φ = π/2
        let i = superposition_intensity(0.0, 0.0, FRAC_PI_2).unwrap();
        assert!(i < 1e-28);
    }
}
