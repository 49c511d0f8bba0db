//! Per-mode cavity quantities: propagation and reflection phases, Airy
//! functions, finesse, mode width, free spectral range and the choice of
//! mirror phases that puts the band centers on resonance.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::dispersion::{CrystalSpec, Polarization};
use crate::error::{invalid, Error, Result};
use crate::SPEED_OF_LIGHT;

/// Field mode inside the cavity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Signal,
    Idler,
    Pump,
}

impl Mode {
    /// Type-I e → o + o: the pump is extraordinary, signal and idler ordinary.
    pub fn polarization(self) -> Polarization {
        match self {
            Mode::Pump => Polarization::ExtraordinaryAtCutAngle,
            Mode::Signal | Mode::Idler => Polarization::Ordinary,
        }
    }
}

/// Amplitude reflectivity `r = |r| e^{iδ}` of one mirror for one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorSpec {
    magnitude: f64,
    phase: f64,
}

impl MirrorSpec {
    pub fn new(magnitude: f64, phase: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&magnitude) {
            return Err(invalid(format!(
                "mirror reflectivity magnitude must lie in [0, 1], got {magnitude}"
            )));
        }
        if !phase.is_finite() {
            return Err(invalid(format!("mirror phase must be finite, got {phase}")));
        }
        Ok(Self { magnitude, phase })
    }

    pub fn perfect() -> Self {
        Self {
            magnitude: 1.0,
            phase: 0.0,
        }
    }

    pub fn transparent() -> Self {
        Self {
            magnitude: 0.0,
            phase: 0.0,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.magnitude
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn reflectivity(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }

    /// Lossless transmissivity `|t| = √(1 − |r|²)`.
    pub fn transmissivity(&self) -> f64 {
        (1.0 - self.magnitude * self.magnitude).max(0.0).sqrt()
    }

    fn with_magnitude(self, magnitude: f64) -> Result<Self> {
        Self::new(magnitude, self.phase)
    }

    fn with_phase(self, phase: f64) -> Self {
        Self { phase, ..self }
    }
}

/// The two mirrors seen by one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMirrors {
    pub mirror1: MirrorSpec,
    pub mirror2: MirrorSpec,
}

impl ModeMirrors {
    pub fn new(mirror1: MirrorSpec, mirror2: MirrorSpec) -> Self {
        Self { mirror1, mirror2 }
    }

    /// Phase sum `δ₁ + δ₂`.
    pub fn phase_sum(&self) -> f64 {
        self.mirror1.phase + self.mirror2.phase
    }
}

/// Central signal and idler frequencies the cavity is designed around.
/// The pump center is their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterFrequencies {
    pub signal: f64,
    pub idler: f64,
}

impl CenterFrequencies {
    pub fn degenerate(omega: f64) -> Self {
        Self {
            signal: omega,
            idler: omega,
        }
    }

    pub fn pump(&self) -> f64 {
        self.signal + self.idler
    }

    pub fn of(&self, mode: Mode) -> f64 {
        match mode {
            Mode::Signal => self.signal,
            Mode::Idler => self.idler,
            Mode::Pump => self.pump(),
        }
    }
}

/// Treatment of the dispersive round-trip phase Γ_μ inside Δ_μ.
///
/// The coefficient `2k′(ω₀)L` is a time. `BandCenter` turns it into the
/// constant phase `2k′(ω₀)Lω₀`, which the solved mirror phases absorb.
/// `LinearInOmega` uses `2k′(ω₀)Lω`; that cancels the first-order frequency
/// dependence of `2θ_μ`, so the resonance comb collapses, and it is offered
/// only for comparison. `Zero` drops the term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum GammaConvention {
    #[default]
    BandCenter,
    LinearInOmega,
    Zero,
}

/// One of the four resonance conditions, in priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResonanceCondition {
    /// `Δ_s(ω_s0) = 0 mod 2π`.
    Signal,
    /// `Δ_i(ω_i0) = 0 mod 2π`.
    Idler,
    /// `Δ_p(ω_p0) = 0 mod 2π`.
    Pump,
    /// `θ_s + θ_i + θ_p + δ_1s + δ_1i + δ_2p = 0 mod 2π` at the band centers.
    Pair,
}

/// A mirror phase that may be held fixed while solving for resonance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MirrorPhase {
    Signal1,
    Signal2,
    Idler1,
    Idler2,
    Pump1,
    Pump2,
}

/// Result of [`CavitySpec::solve_resonance_phases`].
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSolution {
    pub cavity: CavitySpec,
    /// Conditions that could not be met with the free phases available.
    pub relaxed: Vec<ResonanceCondition>,
}

/// Cavity of length `L` around a crystal of length `ℓ`, with mirror 1 at the
/// input and mirror 2 at the output.
#[derive(Debug, Clone, PartialEq)]
pub struct CavitySpec {
    length: f64,
    crystal: CrystalSpec,
    signal: ModeMirrors,
    idler: ModeMirrors,
    pump: ModeMirrors,
    centers: CenterFrequencies,
    gamma: GammaConvention,
}

impl CavitySpec {
    pub fn new(
        length: f64,
        crystal: CrystalSpec,
        signal: ModeMirrors,
        idler: ModeMirrors,
        pump: ModeMirrors,
        centers: CenterFrequencies,
        gamma: GammaConvention,
    ) -> Result<Self> {
        if !(length.is_finite() && length >= crystal.length()) {
            return Err(invalid(format!(
                "cavity length {length} m must be at least the crystal length {} m",
                crystal.length()
            )));
        }
        for (name, m) in [("signal", &signal), ("idler", &idler)] {
            if m.mirror1.magnitude() != 1.0 {
                return Err(Error::Unsupported(format!(
                    "mirror 1 must reflect the {name} mode perfectly (|r_1| = 1), got {}",
                    m.mirror1.magnitude()
                )));
            }
        }
        for w in [centers.signal, centers.idler, centers.pump()] {
            crystal.refractive_index(w, Polarization::Ordinary)?;
        }
        Ok(Self {
            length,
            crystal,
            signal,
            idler,
            pump,
            centers,
            gamma,
        })
    }

    /// Singly-resonant cavity: mirror 1 perfect for signal and idler, mirror 2
    /// with magnitude `r2_signal` / `r2_idler`, both transparent for the pump.
    /// All mirror phases start at zero.
    pub fn singly_resonant(
        crystal: CrystalSpec,
        length: f64,
        r2_signal: f64,
        r2_idler: f64,
        centers: CenterFrequencies,
    ) -> Result<Self> {
        Self::new(
            length,
            crystal,
            ModeMirrors::new(MirrorSpec::perfect(), MirrorSpec::new(r2_signal, 0.0)?),
            ModeMirrors::new(MirrorSpec::perfect(), MirrorSpec::new(r2_idler, 0.0)?),
            ModeMirrors::new(MirrorSpec::transparent(), MirrorSpec::transparent()),
            centers,
            GammaConvention::default(),
        )
    }

    /// Copy with new pump mirror magnitudes; phases are kept.
    pub fn with_pump_mirrors(&self, r1p: f64, r2p: f64) -> Result<Self> {
        let mut out = self.clone();
        out.pump.mirror1 = out.pump.mirror1.with_magnitude(r1p)?;
        out.pump.mirror2 = out.pump.mirror2.with_magnitude(r2p)?;
        Ok(out)
    }

    /// Copy with new mirror-2 magnitudes for signal and idler; phases are kept.
    pub fn with_output_reflectivity(&self, r2_signal: f64, r2_idler: f64) -> Result<Self> {
        let mut out = self.clone();
        out.signal.mirror2 = out.signal.mirror2.with_magnitude(r2_signal)?;
        out.idler.mirror2 = out.idler.mirror2.with_magnitude(r2_idler)?;
        Ok(out)
    }

    pub fn with_gamma(&self, gamma: GammaConvention) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }

    pub fn with_phase(&self, which: MirrorPhase, phase: f64) -> Self {
        let mut out = self.clone();
        let m = match which {
            MirrorPhase::Signal1 => &mut out.signal.mirror1,
            MirrorPhase::Signal2 => &mut out.signal.mirror2,
            MirrorPhase::Idler1 => &mut out.idler.mirror1,
            MirrorPhase::Idler2 => &mut out.idler.mirror2,
            MirrorPhase::Pump1 => &mut out.pump.mirror1,
            MirrorPhase::Pump2 => &mut out.pump.mirror2,
        };
        *m = m.with_phase(phase);
        out
    }

    pub fn phase(&self, which: MirrorPhase) -> f64 {
        match which {
            MirrorPhase::Signal1 => self.signal.mirror1.phase,
            MirrorPhase::Signal2 => self.signal.mirror2.phase,
            MirrorPhase::Idler1 => self.idler.mirror1.phase,
            MirrorPhase::Idler2 => self.idler.mirror2.phase,
            MirrorPhase::Pump1 => self.pump.mirror1.phase,
            MirrorPhase::Pump2 => self.pump.mirror2.phase,
        }
    }

    /// Cavity length L in meters.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn crystal(&self) -> &CrystalSpec {
        &self.crystal
    }

    pub fn centers(&self) -> CenterFrequencies {
        self.centers
    }

    pub fn gamma_convention(&self) -> GammaConvention {
        self.gamma
    }

    pub fn mirrors(&self, mode: Mode) -> &ModeMirrors {
        match mode {
            Mode::Signal => &self.signal,
            Mode::Idler => &self.idler,
            Mode::Pump => &self.pump,
        }
    }

    /// True when either mirror reflects the pump.
    pub fn is_doubly_resonant(&self) -> bool {
        self.pump.mirror1.magnitude() > 0.0 || self.pump.mirror2.magnitude() > 0.0
    }

    /// Free-space phase `γ = ω(L − ℓ)/(2c)` of half the empty part of the cavity.
    pub fn free_space_half_phase(&self, omega: f64) -> f64 {
        omega * (self.length - self.crystal.length()) / (2.0 * SPEED_OF_LIGHT)
    }

    /// Single-pass phase `θ = ω(L − ℓ)/c + k(ω)ℓ`.
    pub fn single_pass_phase(&self, omega: f64, mode: Mode) -> Result<f64> {
        let k = self.crystal.wavevector(omega, mode.polarization())?;
        Ok(omega * (self.length - self.crystal.length()) / SPEED_OF_LIGHT
            + k * self.crystal.length())
    }

    /// Round-trip group delay `2k′(ω₀)L` (seconds) at the band center of `mode`.
    pub fn round_trip_group_delay(&self, mode: Mode) -> Result<f64> {
        let w0 = self.centers.of(mode);
        Ok(2.0 * self.crystal.group_slowness(w0, mode.polarization())? * self.length)
    }

    /// Dispersive round-trip phase Γ_μ at `omega` under the configured
    /// convention. Defined only for `L = ℓ` unless the convention is `Zero`.
    pub fn extra_cavity_phase(&self, omega: f64, mode: Mode) -> Result<f64> {
        if self.gamma == GammaConvention::Zero {
            return Ok(0.0);
        }
        if self.length != self.crystal.length() {
            return Err(Error::Unsupported(format!(
                "the dispersive phase Γ is defined only for L = ℓ (L = {} m, ℓ = {} m); use the zero convention",
                self.length,
                self.crystal.length()
            )));
        }
        let delay = self.round_trip_group_delay(mode)?;
        Ok(match self.gamma {
            GammaConvention::BandCenter => delay * self.centers.of(mode),
            GammaConvention::LinearInOmega => delay * omega,
            GammaConvention::Zero => 0.0,
        })
    }

    /// Round-trip phase mismatch, `Δ_μ = 2θ_μ + δ_1μ + δ_2μ − Γ_μ` for signal
    /// and idler and `Δ_p = 2θ_p + δ_1p + δ_2p` for the pump. Not folded to 2π.
    pub fn round_trip_phase_mismatch(&self, omega: f64, mode: Mode) -> Result<f64> {
        let base = 2.0 * self.single_pass_phase(omega, mode)? + self.mirrors(mode).phase_sum();
        match mode {
            Mode::Pump => Ok(base),
            _ => Ok(base - self.extra_cavity_phase(omega, mode)?),
        }
    }

    /// Δ_μ with each large phase reduced modulo 2π before summing. Equal to
    /// [`Self::round_trip_phase_mismatch`] modulo 2π but free of the rounding
    /// of sums of hundreds of radians; used wherever only `e^{iΔ}` matters.
    pub fn reduced_phase_mismatch(&self, omega: f64, mode: Mode) -> Result<f64> {
        let two_theta = wrap(2.0 * self.single_pass_phase(omega, mode)?);
        let base = two_theta + self.mirrors(mode).phase_sum();
        match mode {
            Mode::Pump => Ok(base),
            _ => Ok(base - wrap(self.extra_cavity_phase(omega, mode)?)),
        }
    }

    /// Effective reflectivity entering the Airy function: `|r_2|` for signal
    /// and idler (mirror 1 is perfect), `|r_1p r_2p|` for the pump.
    pub fn effective_reflectivity(&self, mode: Mode) -> f64 {
        let m = self.mirrors(mode);
        match mode {
            Mode::Pump => m.mirror1.magnitude() * m.mirror2.magnitude(),
            _ => m.mirror2.magnitude(),
        }
    }

    /// Peak Airy prefactor `|t|²/(1 − r_eff)²`, with `t = t_2` for signal and
    /// idler and `t = t_1p` for the pump.
    pub fn airy_peak(&self, mode: Mode) -> Result<f64> {
        let r = self.effective_reflectivity(mode);
        if r >= 1.0 {
            return Err(Error::Divergent("Airy function"));
        }
        let m = self.mirrors(mode);
        let t = match mode {
            Mode::Pump => m.mirror1.transmissivity(),
            _ => m.mirror2.transmissivity(),
        };
        Ok(t * t / ((1.0 - r) * (1.0 - r)))
    }

    /// Airy function of `mode` at `omega`.
    pub fn airy(&self, omega: f64, mode: Mode) -> Result<f64> {
        let peak = self.airy_peak(mode)?;
        let f = coefficient_of_finesse(self.effective_reflectivity(mode))?;
        let delta = self.reduced_phase_mismatch(omega, mode)?;
        Ok(airy_from_phase(peak, f, delta))
    }

    /// Optical length `ℓ n(ω₀) + (L − ℓ)` of one pass.
    pub fn optical_length(&self, omega0: f64, mode: Mode) -> Result<f64> {
        let n = self.crystal.refractive_index(omega0, mode.polarization())?;
        Ok(self.crystal.length() * n + (self.length - self.crystal.length()))
    }

    /// Mode width `δω = 2c / (ℓn(ω₀) + (L − ℓ)) · ℱ^{−1/2}`.
    pub fn mode_width(&self, omega0: f64, mode: Mode) -> Result<f64> {
        let f = coefficient_of_finesse(self.effective_reflectivity(mode))?;
        if f == 0.0 {
            return Err(invalid(
                "mode width is infinite for a zero coefficient of finesse",
            ));
        }
        Ok(2.0 * SPEED_OF_LIGHT / self.optical_length(omega0, mode)? / f.sqrt())
    }

    /// Free spectral range `Δω = πc / (ℓn(ω₀) + (L − ℓ))`.
    pub fn free_spectral_range(&self, omega0: f64, mode: Mode) -> Result<f64> {
        Ok(PI * SPEED_OF_LIGHT / self.optical_length(omega0, mode)?)
    }

    /// Round-trip time `2(ℓn(ω₀) + (L − ℓ))/c`.
    pub fn round_trip_time(&self, omega0: f64, mode: Mode) -> Result<f64> {
        Ok(2.0 * self.optical_length(omega0, mode)? / SPEED_OF_LIGHT)
    }

    /// Pair phase `Δ = θ_s + θ_i + θ_p + δ_1s + δ_1i + δ_2p` with θ_p at
    /// ω_s + ω_i, each θ reduced modulo 2π.
    pub fn pair_phase(&self, omega_s: f64, omega_i: f64) -> Result<f64> {
        Ok(wrap(self.single_pass_phase(omega_s, Mode::Signal)?)
            + wrap(self.single_pass_phase(omega_i, Mode::Idler)?)
            + wrap(self.single_pass_phase(omega_s + omega_i, Mode::Pump)?)
            + self.signal.mirror1.phase
            + self.idler.mirror1.phase
            + self.pump.mirror2.phase)
    }

    /// Chooses mirror phases so that the band centers are resonant.
    ///
    /// Signal and idler resonance are always requested. When `omega_p0` is
    /// given the pump resonance and the pair condition are added. Phases in
    /// `locked` are held at the given values. Each remaining condition is
    /// solved for one free phase, preferring the order δ_2s, δ_2i, δ_2p, δ_1p,
    /// δ_1s, δ_1i; unused free phases are set to zero and all solved phases
    /// are wrapped to [0, 2π). Conditions that cannot be met are relaxed,
    /// lowest priority first, and reported.
    pub fn solve_resonance_phases(
        &self,
        omega_s0: f64,
        omega_i0: f64,
        omega_p0: Option<f64>,
        locked: &[(MirrorPhase, f64)],
    ) -> Result<PhaseSolution> {
        const ORDER: [MirrorPhase; 6] = [
            MirrorPhase::Signal2,
            MirrorPhase::Idler2,
            MirrorPhase::Pump2,
            MirrorPhase::Pump1,
            MirrorPhase::Signal1,
            MirrorPhase::Idler1,
        ];
        let col = |p: MirrorPhase| ORDER.iter().position(|&q| q == p).unwrap_or(0);
        let is_locked = |p: MirrorPhase| locked.iter().any(|&(q, _)| q == p);

        // Each row: integer coefficients over ORDER and the required phase sum.
        let two_theta = |w: f64, m: Mode| -> Result<f64> {
            let mut v = 2.0 * self.single_pass_phase(w, m)?;
            if m != Mode::Pump {
                v -= self.extra_cavity_phase(w, m)?;
            }
            Ok(v)
        };
        let mut rows: Vec<(ResonanceCondition, [i64; 6], f64)> = Vec::new();
        let mut row = |cond, vars: &[MirrorPhase], rhs: f64| {
            let mut a = [0i64; 6];
            for &v in vars {
                a[col(v)] = 1;
            }
            rows.push((cond, a, rhs));
        };
        row(
            ResonanceCondition::Signal,
            &[MirrorPhase::Signal1, MirrorPhase::Signal2],
            -two_theta(omega_s0, Mode::Signal)?,
        );
        row(
            ResonanceCondition::Idler,
            &[MirrorPhase::Idler1, MirrorPhase::Idler2],
            -two_theta(omega_i0, Mode::Idler)?,
        );
        if let Some(wp) = omega_p0 {
            row(
                ResonanceCondition::Pump,
                &[MirrorPhase::Pump1, MirrorPhase::Pump2],
                -two_theta(wp, Mode::Pump)?,
            );
            let theta_sum = self.single_pass_phase(omega_s0, Mode::Signal)?
                + self.single_pass_phase(omega_i0, Mode::Idler)?
                + self.single_pass_phase(wp, Mode::Pump)?;
            row(
                ResonanceCondition::Pair,
                &[MirrorPhase::Signal1, MirrorPhase::Idler1, MirrorPhase::Pump2],
                -theta_sum,
            );
        }

        // Move locked phases to the right-hand side.
        for (_, a, rhs) in rows.iter_mut() {
            for &(p, value) in locked {
                let c = col(p);
                *rhs -= a[c] as f64 * value;
                a[c] = 0;
            }
        }

        // Forward elimination in priority order.
        let mut pivots: Vec<(usize, [i64; 6], f64)> = Vec::new();
        let mut relaxed = Vec::new();
        for (cond, mut a, mut rhs) in rows {
            for &(pc, pa, prhs) in &pivots {
                let factor = a[pc] * pa[pc];
                if factor != 0 {
                    for k in 0..6 {
                        a[k] -= factor * pa[k];
                    }
                    rhs -= factor as f64 * prhs;
                }
            }
            let pivot = (0..6).find(|&c| a[c].abs() == 1 && !is_locked(ORDER[c]));
            match pivot {
                Some(c) => pivots.push((c, a, rhs)),
                None => {
                    if a.iter().all(|&x| x == 0) && wrap_signed(rhs).abs() < 1e-9 {
                        continue;
                    }
                    relaxed.push(cond);
                }
            }
        }

        // Back substitution; free phases that are not pivots stay at zero.
        let mut value = [0.0f64; 6];
        for &(p, v) in locked {
            value[col(p)] = v;
        }
        for &(pc, a, rhs) in pivots.iter().rev() {
            let mut acc = rhs;
            for k in 0..6 {
                if k != pc && !is_locked(ORDER[k]) {
                    acc -= a[k] as f64 * value[k];
                }
            }
            value[pc] = wrap(acc * a[pc] as f64);
        }

        let mut cavity = self.clone();
        for (k, &p) in ORDER.iter().enumerate() {
            cavity = cavity.with_phase(p, value[k]);
        }
        Ok(PhaseSolution { cavity, relaxed })
    }
}

/// Coefficient of finesse `ℱ = 4r/(1 − r)²`.
pub fn coefficient_of_finesse(r_eff: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r_eff) {
        return Err(invalid(format!(
            "effective reflectivity must lie in [0, 1], got {r_eff}"
        )));
    }
    if r_eff == 1.0 {
        return Err(Error::Divergent("coefficient of finesse"));
    }
    Ok(4.0 * r_eff / ((1.0 - r_eff) * (1.0 - r_eff)))
}

/// Airy weight `peak / (1 + ℱ sin²(Δ/2))`.
pub fn airy_from_phase(peak: f64, finesse: f64, delta: f64) -> f64 {
    let s = (0.5 * delta).sin();
    peak / (1.0 + finesse * s * s)
}

/// Wraps an angle to [0, 2π).
pub fn wrap(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Wraps an angle to (−π, π].
pub fn wrap_signed(phase: f64) -> f64 {
    let w = wrap(phase);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
