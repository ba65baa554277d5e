//! Hyperfine Zeeman structure of the ⁸⁵Rb D2 line, restricted to the closed
//! `F = 3 → F′ = 4` manifold.
//!
//! Relative dipole amplitudes are Clebsch–Gordan coefficients
//! `⟨F=3, m_g; 1, q | F′=4, m_e⟩` (Condon–Shortley phases), so that every
//! excited sublevel has unit total branching into the ground manifold.

use std::f64::consts::PI;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fields::Spherical;

pub const GROUND_F: i32 = 3;
pub const EXCITED_F: i32 = 4;

/// Bohr magneton over Planck's constant (Hz/T).
pub const BOHR_MAGNETON_HZ_PER_TESLA: f64 = 1.399_624_493_61e10;

pub const GAUSS: f64 = 1e-4;

/// Natural linewidth Γ/2π of the Rb D2 line (Hz).
pub const RB85_D2_LINEWIDTH_HZ: f64 = 6.07e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AtomError {
    #[error("invalid angular momenta J={j}, I={i}, F={f}")]
    InvalidAngularMomenta { j: f64, i: f64, f: f64 },
    #[error("transition m_g={m_g} → m_e={m_e} is dipole forbidden")]
    Forbidden { m_g: i32, m_e: i32 },
    #[error("sublevel m={m} outside manifold with F={f}")]
    OutOfManifold { m: i32, f: i32 },
    #[error("transition table is not normalized: excited m={m_e} has total branching {total}")]
    Unnormalized { m_e: i32, total: f64 },
    #[error("atomic decay rate must be positive, got {0}")]
    InvalidGamma(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Ground,
    Excited,
}

impl Manifold {
    pub fn f(self) -> i32 {
        match self {
            Manifold::Ground => GROUND_F,
            Manifold::Excited => EXCITED_F,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sublevel {
    pub manifold: Manifold,
    pub m: i32,
    /// Zeeman shift relative to the zero-field level (rad/s).
    pub energy_shift: f64,
}

impl Sublevel {
    pub fn new(manifold: Manifold, m: i32) -> Result<Self, AtomError> {
        let f = manifold.f();
        if m.abs() > f {
            return Err(AtomError::OutOfManifold { m, f });
        }
        Ok(Self { manifold, m, energy_shift: 0.0 })
    }

    pub fn ground(m: i32) -> Self {
        Self::new(Manifold::Ground, m).expect("ground sublevel in range")
    }

    pub fn excited(m: i32) -> Self {
        Self::new(Manifold::Excited, m).expect("excited sublevel in range")
    }

    pub fn is_excited(&self) -> bool {
        self.manifold == Manifold::Excited
    }

    /// Same manifold and `m`, ignoring the energy.
    pub fn same_state(&self, other: &Sublevel) -> bool {
        self.manifold == other.manifold && self.m == other.m
    }
}

impl std::fmt::Display for Sublevel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.manifold {
            Manifold::Ground => write!(f, "g(F=3,m={})", self.m),
            Manifold::Excited => write!(f, "e(F'=4,m={})", self.m),
        }
    }
}

/// All 16 sublevels, ground `m = −3..=3` followed by excited `m = −4..=4`.
pub fn all_sublevels() -> Vec<Sublevel> {
    (-GROUND_F..=GROUND_F)
        .map(Sublevel::ground)
        .chain((-EXCITED_F..=EXCITED_F).map(Sublevel::excited))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    /// Excited-state amplitude decay rate γ (rad/s); population decays at 2γ.
    pub gamma: f64,
    pub gf_ground: f64,
    pub gf_excited: f64,
    /// Magnetic field along the quantization axis (T).
    pub b_z: f64,
}

impl Default for AtomParams {
    fn default() -> Self {
        Self {
            gamma: PI * RB85_D2_LINEWIDTH_HZ,
            gf_ground: lande_gf(0.5, 2.5, 3.0, 2.0).expect("valid"),
            gf_excited: lande_gf(1.5, 2.5, 4.0, 4.0 / 3.0).expect("valid"),
            b_z: 4.5 * GAUSS,
        }
    }
}

impl AtomParams {
    pub fn validate(&self) -> Result<(), AtomError> {
        if !(self.gamma > 0.0) {
            return Err(AtomError::InvalidGamma(self.gamma));
        }
        Ok(())
    }

    pub fn gf(&self, manifold: Manifold) -> f64 {
        match manifold {
            Manifold::Ground => self.gf_ground,
            Manifold::Excited => self.gf_excited,
        }
    }

    /// Sublevel with its Zeeman shift filled in.
    pub fn shifted(&self, level: Sublevel) -> Sublevel {
        Sublevel {
            energy_shift: zeeman_shift(&level, self.gf(level.manifold), self.b_z),
            ..level
        }
    }
}

fn is_half_integer_multiple(x: f64) -> bool {
    let d = 2.0 * x;
    (d - d.round()).abs() < 1e-12 && x >= 0.0
}

/// Hyperfine Landé factor with the nuclear contribution neglected,
/// `g_F = g_J [F(F+1) + J(J+1) − I(I+1)] / (2F(F+1))`.
pub fn lande_gf(j: f64, i: f64, f: f64, gj: f64) -> Result<f64, AtomError> {
    let bad = || AtomError::InvalidAngularMomenta { j, i, f };
    if !(is_half_integer_multiple(j) && is_half_integer_multiple(i) && is_half_integer_multiple(f)) {
        return Err(bad());
    }
    // F must be reachable from J ⊗ I in integer steps
    let lo = (j - i).abs();
    let steps = f - lo;
    if f < lo - 1e-12 || f > j + i + 1e-12 || (steps - steps.round()).abs() > 1e-12 {
        return Err(bad());
    }
    if f == 0.0 {
        return Err(bad());
    }
    Ok(gj * (f * (f + 1.0) + j * (j + 1.0) - i * (i + 1.0)) / (2.0 * f * (f + 1.0)))
}

/// Linear Zeeman shift `m g_F μ_B B` as an angular frequency.
pub fn zeeman_shift(level: &Sublevel, gf: f64, b_z: f64) -> f64 {
    2.0 * PI * level.m as f64 * gf * BOHR_MAGNETON_HZ_PER_TESLA * b_z
}

fn factorial(n: i64) -> i128 {
    assert!(n >= 0, "negative factorial argument");
    (1..=n as i128).product()
}

/// Squared Clebsch–Gordan coefficient `⟨j1 m1; j2 m2 | J M⟩²` and its sign,
/// evaluated exactly via the Racah formula. Arguments are doubled quantum
/// numbers (`2j`, `2m`) so that half-integers are representable.
pub fn clebsch_gordan_sq_doubled(j1: i64, m1: i64, j2: i64, m2: i64, jt: i64, mt: i64) -> (Ratio<i128>, i32) {
    let zero = (Ratio::from_integer(0), 0);
    if m1 + m2 != mt || m1.abs() > j1 || m2.abs() > j2 || mt.abs() > jt {
        return zero;
    }
    if jt < (j1 - j2).abs() || jt > j1 + j2 || (j1 + j2 + jt) % 2 != 0 {
        return zero;
    }
    if (j1 + m1) % 2 != 0 || (j2 + m2) % 2 != 0 || (jt + mt) % 2 != 0 {
        return zero;
    }
    let h = |x: i64| x / 2;
    let pre = Ratio::new(
        (jt + 1) as i128
            * factorial(h(jt + j1 - j2))
            * factorial(h(jt - j1 + j2))
            * factorial(h(j1 + j2 - jt))
            * factorial(h(jt + mt))
            * factorial(h(jt - mt))
            * factorial(h(j1 - m1))
            * factorial(h(j1 + m1))
            * factorial(h(j2 - m2))
            * factorial(h(j2 + m2)),
        factorial(h(j1 + j2 + jt) + 1),
    );
    let mut sum = Ratio::from_integer(0i128);
    for k in 0..=h(j1 + j2 + jt) {
        let args = [
            k,
            h(j1 + j2 - jt) - k,
            h(j1 - m1) - k,
            h(j2 + m2) - k,
            h(jt - j2 + m1) + k,
            h(jt - j1 - m2) + k,
        ];
        if args.iter().any(|&a| a < 0) {
            continue;
        }
        let den: i128 = args.iter().map(|&a| factorial(a)).product();
        let term = Ratio::new(1, den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let sign = if sum > Ratio::from_integer(0) {
        1
    } else if sum < Ratio::from_integer(0) {
        -1
    } else {
        0
    };
    (pre * sum * sum, sign)
}

/// Clebsch–Gordan coefficient for integer or half-integer arguments.
pub fn clebsch_gordan(j1: f64, m1: f64, j2: f64, m2: f64, jt: f64, mt: f64) -> f64 {
    let d = |x: f64| (2.0 * x).round() as i64;
    let (sq, sign) = clebsch_gordan_sq_doubled(d(j1), d(m1), d(j2), d(m2), d(jt), d(mt));
    sign as f64 * (*sq.numer() as f64 / *sq.denom() as f64).sqrt()
}

/// Exact relative strength `amplitude²` of `F=3, m_g → F′=4, m_e`.
pub fn transition_strength(m_g: i32, m_e: i32) -> Result<Ratio<i128>, AtomError> {
    let q = m_e - m_g;
    if q.abs() > 1 || m_g.abs() > GROUND_F || m_e.abs() > EXCITED_F {
        return Err(AtomError::Forbidden { m_g, m_e });
    }
    let (sq, _) = clebsch_gordan_sq_doubled(
        2 * GROUND_F as i64,
        2 * m_g as i64,
        2,
        2 * q as i64,
        2 * EXCITED_F as i64,
        2 * m_e as i64,
    );
    Ok(sq)
}

/// Polarization and relative dipole amplitude of `F=3, m_g → F′=4, m_e`.
pub fn dipole_amplitude(m_g: i32, m_e: i32) -> Result<(Spherical, f64), AtomError> {
    let q = Spherical::from_q(m_e - m_g).ok_or(AtomError::Forbidden { m_g, m_e })?;
    if m_g.abs() > GROUND_F || m_e.abs() > EXCITED_F {
        return Err(AtomError::Forbidden { m_g, m_e });
    }
    let amp = clebsch_gordan(GROUND_F as f64, m_g as f64, 1.0, q.q() as f64, EXCITED_F as f64, m_e as f64);
    Ok((q, amp))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub m_g: i32,
    pub m_e: i32,
    pub q: Spherical,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionTable {
    pub entries: Vec<Transition>,
}

impl TransitionTable {
    /// Every dipole-allowed transition of the `F=3 → F′=4` manifold, ordered by
    /// `m_g` then `q`.
    pub fn rb85_d2() -> Self {
        let mut entries = Vec::new();
        for m_g in -GROUND_F..=GROUND_F {
            for q in Spherical::ALL {
                let m_e = m_g + q.q();
                if m_e.abs() <= EXCITED_F {
                    let (_, amplitude) = dipole_amplitude(m_g, m_e).expect("allowed by construction");
                    entries.push(Transition { m_g, m_e, q, amplitude });
                }
            }
        }
        Self { entries }
    }

    pub fn get(&self, m_g: i32, m_e: i32) -> Option<&Transition> {
        self.entries.iter().find(|t| t.m_g == m_g && t.m_e == m_e)
    }

    /// Total squared amplitude out of the excited sublevel `m_e`.
    pub fn branching_total(&self, m_e: i32) -> f64 {
        self.entries
            .iter()
            .filter(|t| t.m_e == m_e)
            .map(|t| t.amplitude * t.amplitude)
            .sum()
    }

    pub fn check_normalized(&self, tol: f64) -> Result<(), AtomError> {
        for m_e in -EXCITED_F..=EXCITED_F {
            let total = self.branching_total(m_e);
            if (total - 1.0).abs() > tol {
                return Err(AtomError::Unnormalized { m_e, total });
            }
        }
        Ok(())
    }
}

/// Coefficients of the atomic lowering operator for one polarization:
/// `σ_q = Σ c |g, m_e − q⟩⟨e, m_e|`, with collapse rate `2γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayChannel {
    pub q: Spherical,
    /// Population decay rate Γ = 2γ multiplying `σ_q† σ_q` (rad/s).
    pub rate: f64,
    /// `(m_e, m_g, coefficient)` entries.
    pub coefficients: Vec<(i32, i32, f64)>,
}

impl DecayChannel {
    pub fn branching(&self, m_e: i32) -> f64 {
        self.coefficients
            .iter()
            .filter(|(e, _, _)| *e == m_e)
            .map(|(_, _, c)| c * c)
            .sum()
    }
}

pub fn decay_channels(table: &TransitionTable, gamma: f64) -> Result<Vec<DecayChannel>, AtomError> {
    if !(gamma > 0.0) {
        return Err(AtomError::InvalidGamma(gamma));
    }
    table.check_normalized(1e-10)?;
    Ok(Spherical::ALL
        .iter()
        .map(|&q| DecayChannel {
            q,
            rate: 2.0 * gamma,
            coefficients: table
                .entries
                .iter()
                .filter(|t| t.q == q)
                .map(|t| (t.m_e, t.m_g, t.amplitude))
                .collect(),
        })
        .collect())
}

/// Dipole coupling between two entries of a [`LevelScheme`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelCoupling {
    pub ground: usize,
    pub excited: usize,
    pub q: Spherical,
    pub amplitude: f64,
}

/// Ordered set of sublevels (possibly pruned) with the couplings between them.
///
/// Excited-state energies are measured from a reference transition: with
/// `reference = Some((m_g, m_e))` the bare frequency of that transition is the
/// atomic line frequency entering the atom–cavity detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelScheme {
    levels: Vec<Sublevel>,
    couplings: Vec<LevelCoupling>,
    reference: Option<(i32, i32)>,
}

impl LevelScheme {
    /// Builds the scheme from sublevels and every table entry whose two ends are
    /// both present.
    pub fn new(levels: Vec<Sublevel>, table: &TransitionTable) -> Self {
        let find = |man: Manifold, m: i32| levels.iter().position(|l| l.manifold == man && l.m == m);
        let couplings = table
            .entries
            .iter()
            .filter_map(|t| {
                Some(LevelCoupling {
                    ground: find(Manifold::Ground, t.m_g)?,
                    excited: find(Manifold::Excited, t.m_e)?,
                    q: t.q,
                    amplitude: t.amplitude,
                })
            })
            .collect();
        Self { levels, couplings, reference: None }
    }

    /// All 16 sublevels with Zeeman shifts (or without when `zeeman` is false).
    pub fn rb85(params: &AtomParams, zeeman: bool) -> Self {
        let levels = all_sublevels()
            .into_iter()
            .map(|l| if zeeman { params.shifted(l) } else { l })
            .collect();
        Self::new(levels, &TransitionTable::rb85_d2())
    }

    /// The stretched cycling pair `m=3 → m′=4` alone: an ideal two-level atom
    /// coupled only through σ⁺ with unit amplitude.
    pub fn two_level() -> Self {
        Self::new(vec![Sublevel::ground(3), Sublevel::excited(4)], &TransitionTable::rb85_d2())
            .with_reference(3, 4)
    }

    pub fn with_reference(mut self, m_g: i32, m_e: i32) -> Self {
        self.reference = Some((m_g, m_e));
        self
    }

    pub fn reference(&self) -> Option<(i32, i32)> {
        self.reference
    }

    pub fn levels(&self) -> &[Sublevel] {
        &self.levels
    }

    pub fn couplings(&self) -> &[LevelCoupling] {
        &self.couplings
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn index_of(&self, manifold: Manifold, m: i32) -> Option<usize> {
        self.levels.iter().position(|l| l.manifold == manifold && l.m == m)
    }

    /// Energy subtracted from every excited level so that the reference
    /// transition sits at the bare line frequency.
    pub fn line_offset(&self) -> f64 {
        let Some((m_g, m_e)) = self.reference else { return 0.0 };
        let energy = |man, m| self.index_of(man, m).map(|i| self.levels[i].energy_shift);
        match (energy(Manifold::Ground, m_g), energy(Manifold::Excited, m_e)) {
            (Some(g), Some(e)) => e - g,
            _ => 0.0,
        }
    }

    /// Keeps the sublevels reachable from ground `m_g` within `hops` dipole
    /// transitions (excitation or decay), closed under spontaneous decay so
    /// that every retained excited level keeps its full branching.
    pub fn pruned(&self, m_g: i32, hops: usize) -> Self {
        let n = self.levels.len();
        let mut keep = vec![false; n];
        let Some(start) = self.index_of(Manifold::Ground, m_g) else {
            return self.clone();
        };
        keep[start] = true;
        let mut frontier = vec![start];
        for _ in 0..hops {
            let mut next = Vec::new();
            for &i in &frontier {
                for c in &self.couplings {
                    let other = if c.ground == i {
                        c.excited
                    } else if c.excited == i {
                        c.ground
                    } else {
                        continue;
                    };
                    if !keep[other] {
                        keep[other] = true;
                        next.push(other);
                    }
                }
            }
            frontier = next;
        }
        for c in &self.couplings {
            if keep[c.excited] {
                keep[c.ground] = true;
            }
        }
        let levels: Vec<Sublevel> = (0..n).filter(|&i| keep[i]).map(|i| self.levels[i]).collect();
        let remap: Vec<Option<usize>> = {
            let mut k = 0;
            keep.iter()
                .map(|&kp| {
                    if kp {
                        k += 1;
                        Some(k - 1)
                    } else {
                        None
                    }
                })
                .collect()
        };
        let couplings = self
            .couplings
            .iter()
            .filter_map(|c| {
                Some(LevelCoupling { ground: remap[c.ground]?, excited: remap[c.excited]?, ..*c })
            })
            .collect();
        Self { levels, couplings, reference: self.reference }
    }

    /// Total squared decay amplitude out of level `i` (1 for complete excited
    /// levels, 0 for ground levels).
    pub fn branching_total(&self, i: usize) -> f64 {
        self.couplings
            .iter()
            .filter(|c| c.excited == i)
            .map(|c| c.amplitude * c.amplitude)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Explicit ⟨j, m−q; 1, q | j+1, m⟩ coupling formulas for j2 = 1.
    fn cg_stretch_oracle(j: f64, m: f64, q: i32) -> f64 {
        let d = (2.0 * j + 1.0) * (2.0 * j + 2.0);
        match q {
            1 => ((j + m) * (j + m + 1.0) / d).sqrt(),
            0 => ((j - m + 1.0) * (j + m + 1.0) * 2.0 / d).sqrt(),
            -1 => ((j - m) * (j - m + 1.0) / d).sqrt(),
            _ => 0.0,
        }
    }

    #[test]
    fn lande_examples() {
        assert!((lande_gf(0.5, 2.5, 3.0, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((lande_gf(1.5, 2.5, 4.0, 4.0 / 3.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((lande_gf(1.5, 0.0, 1.5, 4.0 / 3.0).unwrap() - 4.0 / 3.0).abs() < 1e-15);
        assert!(lande_gf(0.5, 2.5, 4.0, 2.0).is_err());
        assert!(lande_gf(0.5, 2.5, 2.5, 2.0).is_err());
        assert!(lande_gf(0.3, 2.5, 3.0, 2.0).is_err());
    }

    #[test]
    fn zeeman_examples() {
        let b = 4.5 * GAUSS;
        assert_eq!(zeeman_shift(&Sublevel::ground(0), 1.0 / 3.0, b), 0.0);
        let s = zeeman_shift(&Sublevel::ground(3), 1.0 / 3.0, b) / (2.0 * PI);
        assert!((s / 1e6 - 6.30).abs() < 5e-3, "{s}");
        assert_eq!(
            zeeman_shift(&Sublevel::excited(2), 0.5, -b),
            -zeeman_shift(&Sublevel::excited(2), 0.5, b)
        );
        assert_eq!(
            zeeman_shift(&Sublevel::excited(-2), 0.5, b),
            -zeeman_shift(&Sublevel::excited(2), 0.5, b)
        );
    }

    #[test]
    fn dipole_examples() {
        let (q, a) = dipole_amplitude(3, 4).unwrap();
        assert_eq!(q, Spherical::SigmaPlus);
        assert!((a - 1.0).abs() < 1e-15);

        let (q, a) = dipole_amplitude(3, 2).unwrap();
        assert_eq!(q, Spherical::SigmaMinus);
        assert!((a * a - 1.0 / 28.0).abs() < 1e-15);
        assert_eq!(transition_strength(3, 2).unwrap(), Ratio::new(1, 28));

        let (q, a) = dipole_amplitude(0, 0).unwrap();
        assert_eq!(q, Spherical::Pi);
        assert!((a * a - 4.0 / 7.0).abs() < 1e-15);

        assert!(matches!(dipole_amplitude(0, 2), Err(AtomError::Forbidden { .. })));
        assert!(dipole_amplitude(3, 5).is_err());
    }

    #[test]
    fn table_matches_explicit_formulas() {
        let table = TransitionTable::rb85_d2();
        assert_eq!(table.entries.len(), 21);
        for t in &table.entries {
            let oracle = cg_stretch_oracle(3.0, t.m_e as f64, t.q.q());
            assert!((t.amplitude.abs() - oracle).abs() < 1e-14, "{t:?} vs {oracle}");
        }
        let max = table.entries.iter().map(|t| t.amplitude.abs()).fold(0.0, f64::max);
        assert_eq!(max, table.get(3, 4).unwrap().amplitude);
        assert_eq!(table.get(-3, -4).unwrap().amplitude.abs(), max);
    }

    #[test]
    fn general_cg_known_values() {
        // ⟨1/2 1/2; 1/2 −1/2 | 1 0⟩ = 1/√2, ⟨1/2 1/2; 1/2 −1/2 | 0 0⟩ = 1/√2
        assert!((clebsch_gordan(0.5, 0.5, 0.5, -0.5, 1.0, 0.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(0.5, 0.5, 0.5, -0.5, 0.0, 0.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((clebsch_gordan(0.5, -0.5, 0.5, 0.5, 0.0, 0.0) + 0.5f64.sqrt()).abs() < 1e-15);
        // ⟨1 1; 1 −1 | 1 0⟩ = 1/√2
        assert!((clebsch_gordan(1.0, 1.0, 1.0, -1.0, 1.0, 0.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(clebsch_gordan(1.0, 1.0, 1.0, 1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn decay_channel_examples() {
        let table = TransitionTable::rb85_d2();
        let gamma = 1.7;
        let chans = decay_channels(&table, gamma).unwrap();
        assert_eq!(chans.len(), 3);
        let plus = chans.iter().find(|c| c.q == Spherical::SigmaPlus).unwrap();
        assert_eq!(plus.coefficients.iter().filter(|(e, _, _)| *e == 4).count(), 1);
        assert!((plus.branching(4) - 1.0).abs() < 1e-15);
        for m_e in -4..=4 {
            let total: f64 = chans.iter().map(|c| c.branching(m_e)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(chans.iter().all(|c| c.rate == 2.0 * gamma));
        }
        let at_zero: usize = chans.iter().map(|c| c.coefficients.iter().filter(|(e, _, _)| *e == 0).count()).sum();
        assert_eq!(at_zero, 3);
    }

    #[test]
    fn unnormalized_table_rejected() {
        let mut table = TransitionTable::rb85_d2();
        table.entries[0].amplitude *= 0.5;
        assert!(matches!(decay_channels(&table, 1.0), Err(AtomError::Unnormalized { .. })));
        assert!(decay_channels(&TransitionTable::rb85_d2(), 0.0).is_err());
    }

    #[test]
    fn sublevel_ranges() {
        let all = all_sublevels();
        assert_eq!(all.iter().filter(|s| !s.is_excited()).count(), 7);
        assert_eq!(all.iter().filter(|s| s.is_excited()).count(), 9);
        assert!(Sublevel::new(Manifold::Ground, 4).is_err());
    }

    #[test]
    fn pruning_keeps_decay_closure() {
        let full = LevelScheme::rb85(&AtomParams::default(), true).with_reference(3, 4);
        assert_eq!(full.len(), 16);
        assert_eq!(full.couplings().len(), 21);
        let p = full.pruned(3, 2);
        let names: Vec<String> = p.levels().iter().map(|l| l.to_string()).collect();
        assert_eq!(p.len(), 6, "{names:?}");
        for (i, l) in p.levels().iter().enumerate() {
            if l.is_excited() {
                assert!((p.branching_total(i) - 1.0).abs() < 1e-12, "{l}");
            }
        }
        assert_eq!(full.pruned(3, 100).len(), 16);
        assert_eq!(p.reference(), Some((3, 4)));
    }

    #[test]
    fn reference_offset_is_transition_shift() {
        let s = LevelScheme::rb85(&AtomParams::default(), true).with_reference(3, 4);
        let g = s.levels()[s.index_of(Manifold::Ground, 3).unwrap()].energy_shift;
        let e = s.levels()[s.index_of(Manifold::Excited, 4).unwrap()].energy_shift;
        assert_eq!(s.line_offset(), e - g);
        assert!((s.line_offset() / (2.0 * PI) / 1e6 - 6.30).abs() < 5e-3);
        let two = LevelScheme::two_level();
        assert_eq!(two.len(), 2);
        assert_eq!(two.couplings().len(), 1);
        assert_eq!(two.couplings()[0].amplitude, 1.0);
        assert_eq!(two.line_offset(), 0.0);
    }

    proptest! {
        #[test]
        fn selection_and_reflection(m_g in -3i32..=3, m_e in -4i32..=4) {
            match dipole_amplitude(m_g, m_e) {
                Ok((_, a)) => {
                    prop_assert!((m_e - m_g).abs() <= 1);
                    let (_, r) = dipole_amplitude(-m_g, -m_e).unwrap();
                    prop_assert!((a * a - r * r).abs() < 1e-15);
                }
                Err(_) => prop_assert!((m_e - m_g).abs() > 1),
            }
        }
    }
}
