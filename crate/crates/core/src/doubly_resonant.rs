//! Doubly-resonant cavity: the pump also circulates, and the pair amplitudes
//! from successive pump passes interfere.

use num_complex::Complex64;

use crate::cavity::{wrap, CavitySpec, Mode};
use crate::error::{invalid, Error, Result};
use crate::grid::{Axis, SpectralGrid};
use crate::spectral::{grid_from_samples, SpdcSource};

/// Below this pump reflectivity the factor `Y` is never formed explicitly.
pub const SMALL_R1P: f64 = 1e-12;

/// Phases and mirror coefficients entering the pump-pass sums at one
/// `(ω_s, ω_i)`. Single-pass phases are reduced modulo 2π.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrPhaseContext {
    pub theta_s: f64,
    pub theta_i: f64,
    pub theta_p: f64,
    /// `θ_s + θ_i`.
    pub theta_si: f64,
    /// Free-space pump phase between mirror 1 and the crystal.
    pub gamma_p: f64,
    pub r1s: Complex64,
    pub r1i: Complex64,
    pub r1p: Complex64,
    pub r2p: Complex64,
    pub t1p: f64,
}

impl DrPhaseContext {
    pub fn new(cavity: &CavitySpec, omega_s: f64, omega_i: f64) -> Result<Self> {
        let theta_s = wrap(cavity.single_pass_phase(omega_s, Mode::Signal)?);
        let theta_i = wrap(cavity.single_pass_phase(omega_i, Mode::Idler)?);
        Self::from_signal_idler(cavity, theta_s, theta_i, omega_s + omega_i)
    }

    fn from_signal_idler(
        cavity: &CavitySpec,
        theta_s: f64,
        theta_i: f64,
        omega_p: f64,
    ) -> Result<Self> {
        let pump = cavity.mirrors(Mode::Pump);
        Ok(Self {
            theta_s,
            theta_i,
            theta_p: wrap(cavity.single_pass_phase(omega_p, Mode::Pump)?),
            theta_si: theta_s + theta_i,
            gamma_p: wrap(cavity.free_space_half_phase(omega_p)),
            r1s: cavity.mirrors(Mode::Signal).mirror1.reflectivity(),
            r1i: cavity.mirrors(Mode::Idler).mirror1.reflectivity(),
            r1p: pump.mirror1.reflectivity(),
            r2p: pump.mirror2.reflectivity(),
            t1p: pump.mirror1.transmissivity(),
        })
    }

    /// Pump round-trip factor `q = r_1p r_2p e^{i2θ_p}`.
    pub fn round_trip(&self) -> Complex64 {
        self.r1p * self.r2p * Complex64::from_polar(1.0, 2.0 * self.theta_p)
    }

    /// `r_2p r_1s r_1i e^{i(θ_si + θ_p)}`, the pair created on the return pass.
    pub fn return_pass(&self) -> Complex64 {
        self.r2p * self.r1s * self.r1i * Complex64::from_polar(1.0, self.theta_si + self.theta_p)
    }

    fn entrance(&self) -> Complex64 {
        Complex64::from_polar(self.t1p, self.gamma_p)
    }
}

/// `Y = 1 + r_1p⁻¹ r_1s r_1i e^{i(θ_si − θ_p)}`.
pub fn y_factor(ctx: &DrPhaseContext) -> Result<Complex64> {
    if ctx.r1p.norm() < SMALL_R1P {
        return Err(invalid(
            "Y divides by r_1p, which vanishes; use the grouped pump-pass sum instead",
        ));
    }
    Ok(Complex64::new(1.0, 0.0)
        + ctx.r1s * ctx.r1i * Complex64::from_polar(1.0, ctx.theta_si - ctx.theta_p) / ctx.r1p)
}

/// Pump-pass factor of the first `1 + 2n` passes,
/// `t_1p e^{iγ_p}[1 + (q + r_2p r_1s r_1i e^{i(θ_si+θ_p)})(1 − qⁿ)/(1 − q)]`.
/// The bracket is `Y r_1p r_2p e^{i2θ_p}` written without dividing by `r_1p`.
pub fn pump_pass_factor_partial(ctx: &DrPhaseContext, n_groups: u32) -> Result<Complex64> {
    let q = ctx.round_trip();
    if q.norm() >= 1.0 {
        return Err(Error::Divergent("doubly-resonant pump-pass sum"));
    }
    let one = Complex64::new(1.0, 0.0);
    let geometric = if n_groups == 0 {
        Complex64::new(0.0, 0.0)
    } else {
        (one - q.powu(n_groups)) / (one - q)
    };
    Ok(ctx.entrance() * (one + (q + ctx.return_pass()) * geometric))
}

/// Many-pass limit `t_1p e^{iγ_p}(1 + r_2p r_1s r_1i e^{i(θ_si+θ_p)})/(1 − q)`.
pub fn pump_pass_factor(ctx: &DrPhaseContext) -> Result<Complex64> {
    let q = ctx.round_trip();
    if q.norm() >= 1.0 {
        return Err(Error::Divergent("doubly-resonant pump-pass sum"));
    }
    let one = Complex64::new(1.0, 0.0);
    Ok(ctx.entrance() * (one + ctx.return_pass()) / (one - q))
}

/// Partial doubly-resonant amplitude `f_DR^(1+2n)`.
pub fn jsa_dr_partial(
    source: &SpdcSource,
    omega_s: f64,
    omega_i: f64,
    n_groups: u32,
) -> Result<Complex64> {
    let ctx = DrPhaseContext::new(&source.cavity, omega_s, omega_i)?;
    Ok(pump_pass_factor_partial(&ctx, n_groups)? * source.jsa_sr(omega_s, omega_i)?)
}

/// Doubly-resonant amplitude `f_DR` in the many-pass limit.
pub fn jsa_dr_limit(source: &SpdcSource, omega_s: f64, omega_i: f64) -> Result<Complex64> {
    let ctx = DrPhaseContext::new(&source.cavity, omega_s, omega_i)?;
    Ok(pump_pass_factor(&ctx)? * source.jsa_sr(omega_s, omega_i)?)
}

/// `𝒫 = (1 + |r_2p|)² [1 − 4|r_2p|/(1 + |r_2p|)² sin²(Δ/2)]`.
pub fn phase_balancing_from_phase(r2p: f64, delta: f64) -> f64 {
    let s = (0.5 * delta).sin();
    (1.0 + r2p) * (1.0 + r2p) - 4.0 * r2p * s * s
}

/// Phase-balancing factor at `(ω_s, ω_i)` with
/// `Δ = θ_s + θ_i + θ_p + δ_1s + δ_1i + δ_2p`.
pub fn phase_balancing(cavity: &CavitySpec, omega_s: f64, omega_i: f64) -> Result<f64> {
    let r2p = cavity.mirrors(Mode::Pump).mirror2.magnitude();
    Ok(phase_balancing_from_phase(r2p, cavity.pair_phase(omega_s, omega_i)?))
}

/// `S_DR = 𝒜_s 𝒜_i 𝒜_p(ω_s + ω_i) 𝒫 |f|²` at one point.
pub fn jsi_dr(source: &SpdcSource, omega_s: f64, omega_i: f64) -> Result<f64> {
    let cav = &source.cavity;
    Ok(cav.airy(omega_s + omega_i, Mode::Pump)?
        * phase_balancing(cav, omega_s, omega_i)?
        * source.jsi_sr(omega_s, omega_i)?)
}

/// `S_DR` on a signal/idler grid (`x` = ω_s, `y` = ω_i).
pub fn jsi_doubly_resonant(source: &SpdcSource, x: Axis, y: Axis) -> Result<SpectralGrid<f64>> {
    let s = source.mode_samples(&x, Mode::Signal)?;
    let i = source.mode_samples(&y, Mode::Idler)?;
    let cav = &source.cavity;
    let mirrors = (
        cav.mirrors(Mode::Signal).mirror1.phase(),
        cav.mirrors(Mode::Idler).mirror1.phase(),
        cav.mirrors(Mode::Pump).mirror2.phase(),
    );
    let r2p = cav.mirrors(Mode::Pump).mirror2.magnitude();
    cav.airy_peak(Mode::Pump)?;
    grid_from_samples(x, y, |col, row| {
        let wp = s.omega[col] + i.omega[row];
        let theta_p = wrap(cav.single_pass_phase(wp, Mode::Pump)?);
        let delta = wrap(s.theta[col]) + wrap(i.theta[row]) + theta_p + mirrors.0 + mirrors.1 + mirrors.2;
        let bare = source.jsa_bare_from_samples(&s, &i, col, row)?.norm_sqr();
        Ok(s.airy[col]
            * i.airy[row]
            * cav.airy(wp, Mode::Pump)?
            * phase_balancing_from_phase(r2p, delta)
            * bare)
    })
}

/// `f_DR` on a signal/idler grid.
pub fn jsa_doubly_resonant(
    source: &SpdcSource,
    x: Axis,
    y: Axis,
) -> Result<SpectralGrid<Complex64>> {
    let s = source.mode_samples(&x, Mode::Signal)?;
    let i = source.mode_samples(&y, Mode::Idler)?;
    let cav = &source.cavity;
    grid_from_samples(x, y, |col, row| {
        let ctx = DrPhaseContext::from_signal_idler(
            cav,
            wrap(s.theta[col]),
            wrap(i.theta[row]),
            s.omega[col] + i.omega[row],
        )?;
        Ok(pump_pass_factor(&ctx)?
            * s.amplitude[col]
            * i.amplitude[row]
            * source.jsa_bare_from_samples(&s, &i, col, row)?)
    })
}
