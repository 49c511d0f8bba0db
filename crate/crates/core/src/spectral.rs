//! Bare and singly-resonant joint spectra: pump envelope, phasematching,
//! filters, the cavity amplitude factors and marginal spectra.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::cavity::{wrap, CavitySpec, Mode};
use crate::dispersion::{CrystalSpec, Polarization};
use crate::error::{invalid, Error, Result};
use crate::grid::{trapezoid, Axis, Coordinates, SpectralGrid};
use crate::wavelength_interval_to_angular;

/// Minimum number of samples across one cavity mode width.
pub const MIN_SAMPLES_PER_MODE: f64 = 8.0;

/// Gaussian pump: envelope `α(ω) = exp[−(ω − ω_p0)²/σ²]` and pulse energy `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSpec {
    center: f64,
    sigma: f64,
    energy: f64,
}

impl PumpSpec {
    pub fn new(center: f64, sigma: f64, energy: f64) -> Result<Self> {
        if !(center > 0.0 && center.is_finite()) {
            return Err(invalid(format!("pump center must be > 0, got {center} rad/s")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid(format!("pump bandwidth σ must be > 0, got {sigma} rad/s")));
        }
        if !(energy >= 0.0 && energy.is_finite()) {
            return Err(invalid(format!("pump energy must be ≥ 0, got {energy} J")));
        }
        Ok(Self {
            center,
            sigma,
            energy,
        })
    }

    /// Pump whose intensity `|α|²` has full width `fwhm_lambda` at half maximum
    /// around the vacuum wavelength `lambda`.
    pub fn from_fwhm_wavelength(lambda: f64, fwhm_lambda: f64, energy: f64) -> Result<Self> {
        let fwhm = wavelength_interval_to_angular(lambda, fwhm_lambda);
        Self::new(crate::angular_frequency(lambda), sigma_from_intensity_fwhm(fwhm), energy)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.center, sigma, self.energy)
    }

    pub fn with_energy(&self, energy: f64) -> Result<Self> {
        Self::new(self.center, self.sigma, energy)
    }

    /// Full width at half maximum of `|α|²`, `σ√(2 ln 2)`.
    pub fn intensity_fwhm(&self) -> f64 {
        self.sigma * (2.0 * LN_2).sqrt()
    }
}

/// Amplitude width σ of a Gaussian `exp(−x²/σ²)` whose square has the given FWHM.
pub fn sigma_from_intensity_fwhm(fwhm: f64) -> f64 {
    fwhm / (2.0 * LN_2).sqrt()
}

/// Pump envelope `exp[−(ω − ω_p0)²/σ²]`.
pub fn pump_envelope(pump: &PumpSpec, omega: f64) -> f64 {
    let x = (omega - pump.center) / pump.sigma;
    (-x * x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FilterShape {
    Gaussian,
    None,
}

/// Spectral filter on one output arm. For `Gaussian`, the intensity
/// transmission `|F|²` has full width `fwhm` at half maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    center: f64,
    fwhm: f64,
    shape: FilterShape,
}

impl FilterSpec {
    pub fn gaussian(center: f64, fwhm: f64) -> Result<Self> {
        if !(fwhm > 0.0 && fwhm.is_finite()) {
            return Err(invalid(format!("filter FWHM must be > 0, got {fwhm} rad/s")));
        }
        Ok(Self {
            center,
            fwhm,
            shape: FilterShape::Gaussian,
        })
    }

    /// Gaussian filter specified by a wavelength center and FWHM.
    pub fn gaussian_wavelength(lambda: f64, fwhm_lambda: f64) -> Result<Self> {
        Self::gaussian(
            crate::angular_frequency(lambda),
            wavelength_interval_to_angular(lambda, fwhm_lambda),
        )
    }

    pub fn none() -> Self {
        Self {
            center: 0.0,
            fwhm: f64::INFINITY,
            shape: FilterShape::None,
        }
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn fwhm(&self) -> f64 {
        self.fwhm
    }

    pub fn shape(&self) -> FilterShape {
        self.shape
    }

    /// Amplitude transmission `F(ω) = exp[−2 ln 2 (ω − ω_c)²/W²]`.
    pub fn amplitude(&self, omega: f64) -> f64 {
        match self.shape {
            FilterShape::None => 1.0,
            FilterShape::Gaussian => {
                let x = (omega - self.center) / self.fwhm;
                (-2.0 * LN_2 * x * x).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Filters {
    pub signal: FilterSpec,
    pub idler: FilterSpec,
}

impl Filters {
    pub fn none() -> Self {
        Self {
            signal: FilterSpec::none(),
            idler: FilterSpec::none(),
        }
    }
}

/// `sin(x)/x`, with a series near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Wavevector mismatch `Δk = k_p(ω_s + ω_i) − k_s(ω_s) − k_i(ω_i)`.
pub fn wavevector_mismatch(crystal: &CrystalSpec, omega_s: f64, omega_i: f64) -> Result<f64> {
    let kp = crystal.wavevector(omega_s + omega_i, Polarization::ExtraordinaryAtCutAngle)?;
    let ks = crystal.wavevector(omega_s, Polarization::Ordinary)?;
    let ki = crystal.wavevector(omega_i, Polarization::Ordinary)?;
    Ok(kp - ks - ki)
}

/// `sinc(Δkℓ/2)·exp(iΔkℓ/2)` for a mismatch `dk`.
pub fn phasematching_from_mismatch(dk: f64, length: f64) -> Complex64 {
    let x = 0.5 * dk * length;
    Complex64::from_polar(sinc(x), x)
}

/// Phasematching function `φ(ω_i, ω_s) = sinc(Δkℓ/2) e^{iΔkℓ/2}`.
pub fn phasematching(crystal: &CrystalSpec, omega_s: f64, omega_i: f64) -> Result<Complex64> {
    Ok(phasematching_from_mismatch(
        wavevector_mismatch(crystal, omega_s, omega_i)?,
        crystal.length(),
    ))
}

/// Closed-form amplitude factor `A_μ^(n)` after `n` passes:
/// `t_2 e^{i[γ + (n−1)Γ]} (1 − xⁿ)/(1 − x)` with `x = |r_2| e^{iΔ_μ}`.
pub fn sr_amplitude_factor_finite(
    cavity: &CavitySpec,
    omega: f64,
    mode: Mode,
    n_passes: u32,
) -> Result<Complex64> {
    if mode == Mode::Pump {
        return Err(invalid("the singly-resonant amplitude factor is defined for signal and idler"));
    }
    if n_passes == 0 {
        return Err(invalid("the number of passes must be at least 1"));
    }
    let r = cavity.effective_reflectivity(mode);
    if r >= 1.0 {
        return Err(Error::Divergent("singly-resonant amplitude factor"));
    }
    let t = cavity.mirrors(mode).mirror2.transmissivity();
    let delta = cavity.reduced_phase_mismatch(omega, mode)?;
    let gamma = wrap(cavity.free_space_half_phase(omega));
    let big_gamma = wrap(cavity.extra_cavity_phase(omega, mode)?);
    let x = Complex64::from_polar(r, delta);
    let prefactor = Complex64::from_polar(t, gamma + (n_passes as f64 - 1.0) * big_gamma);
    let sum = if (Complex64::new(1.0, 0.0) - x).norm() < 1e-300 {
        Complex64::new(n_passes as f64, 0.0)
    } else {
        (Complex64::new(1.0, 0.0) - x.powu(n_passes)) / (Complex64::new(1.0, 0.0) - x)
    };
    Ok(prefactor * sum)
}

/// Limit amplitude factor `t_2 e^{iγ}/(1 − |r_2| e^{iΔ_μ})`. The unit-modulus
/// phase `e^{i(n−1)Γ}` of the finite sum has no limit and is dropped; the
/// squared magnitude is the Airy function.
pub fn sr_amplitude_factor(cavity: &CavitySpec, omega: f64, mode: Mode) -> Result<Complex64> {
    let r = cavity.effective_reflectivity(mode);
    if r >= 1.0 {
        return Err(Error::Divergent("singly-resonant amplitude factor"));
    }
    let t = cavity.mirrors(mode).mirror2.transmissivity();
    let delta = cavity.reduced_phase_mismatch(omega, mode)?;
    let gamma = wrap(cavity.free_space_half_phase(omega));
    Ok(Complex64::from_polar(t, gamma) / (Complex64::new(1.0, 0.0) - Complex64::from_polar(r, delta)))
}

/// Per-frequency quantities for one output mode along one grid axis.
#[derive(Debug, Clone)]
pub struct ModeSamples {
    pub omega: Vec<f64>,
    /// Wavevector in the crystal.
    pub k: Vec<f64>,
    /// Single-pass phase θ.
    pub theta: Vec<f64>,
    /// Filter amplitude.
    pub filter: Vec<f64>,
    /// Limit amplitude factor `A_μ`.
    pub amplitude: Vec<Complex64>,
    /// Airy function `|A_μ|²`.
    pub airy: Vec<f64>,
}

/// Pump, crystal, cavity and filters of one photon-pair source.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdcSource {
    pub cavity: CavitySpec,
    pub pump: PumpSpec,
    pub filters: Filters,
}

impl SpdcSource {
    pub fn new(cavity: CavitySpec, pump: PumpSpec, filters: Filters) -> Self {
        Self {
            cavity,
            pump,
            filters,
        }
    }

    pub fn crystal(&self) -> &CrystalSpec {
        self.cavity.crystal()
    }

    fn filter(&self, mode: Mode) -> &FilterSpec {
        match mode {
            Mode::Idler => &self.filters.idler,
            _ => &self.filters.signal,
        }
    }

    /// Bare joint spectral amplitude `f = α(ω_s + ω_i) φ F_s F_i`.
    pub fn jsa_bare(&self, omega_s: f64, omega_i: f64) -> Result<Complex64> {
        let phi = phasematching(self.crystal(), omega_s, omega_i)?;
        let scale = pump_envelope(&self.pump, omega_s + omega_i)
            * self.filters.signal.amplitude(omega_s)
            * self.filters.idler.amplitude(omega_i);
        Ok(phi * scale)
    }

    /// Singly-resonant amplitude `f_SR = A_s A_i f` in the many-pass limit.
    pub fn jsa_sr(&self, omega_s: f64, omega_i: f64) -> Result<Complex64> {
        Ok(sr_amplitude_factor(&self.cavity, omega_s, Mode::Signal)?
            * sr_amplitude_factor(&self.cavity, omega_i, Mode::Idler)?
            * self.jsa_bare(omega_s, omega_i)?)
    }

    /// Finite-pass amplitude `f_SR^(n) = A_s^(n) A_i^(n) f`.
    pub fn jsa_sr_finite(&self, omega_s: f64, omega_i: f64, n_passes: u32) -> Result<Complex64> {
        Ok(sr_amplitude_factor_finite(&self.cavity, omega_s, Mode::Signal, n_passes)?
            * sr_amplitude_factor_finite(&self.cavity, omega_i, Mode::Idler, n_passes)?
            * self.jsa_bare(omega_s, omega_i)?)
    }

    /// `S_SR = 𝒜_s(ω_s) 𝒜_i(ω_i) |f|²`.
    pub fn jsi_sr(&self, omega_s: f64, omega_i: f64) -> Result<f64> {
        Ok(self.cavity.airy(omega_s, Mode::Signal)?
            * self.cavity.airy(omega_i, Mode::Idler)?
            * self.jsa_bare(omega_s, omega_i)?.norm_sqr())
    }

    /// Samples of the single-mode quantities of `mode` along `axis`.
    pub fn mode_samples(&self, axis: &Axis, mode: Mode) -> Result<ModeSamples> {
        let n = axis.len();
        let mut out = ModeSamples {
            omega: Vec::with_capacity(n),
            k: Vec::with_capacity(n),
            theta: Vec::with_capacity(n),
            filter: Vec::with_capacity(n),
            amplitude: Vec::with_capacity(n),
            airy: Vec::with_capacity(n),
        };
        let filter = self.filter(mode);
        for w in axis.values() {
            let a = sr_amplitude_factor(&self.cavity, w, mode)?;
            out.omega.push(w);
            out.k.push(self.crystal().wavevector(w, Polarization::Ordinary)?);
            out.theta.push(self.cavity.single_pass_phase(w, mode)?);
            out.filter.push(filter.amplitude(w));
            out.amplitude.push(a);
            out.airy.push(self.cavity.airy(w, mode)?);
        }
        Ok(out)
    }

    /// Bare amplitude at grid point `(col, row)` from precomputed samples.
    pub(crate) fn jsa_bare_from_samples(
        &self,
        s: &ModeSamples,
        i: &ModeSamples,
        col: usize,
        row: usize,
    ) -> Result<Complex64> {
        let wp = s.omega[col] + i.omega[row];
        let kp = self
            .crystal()
            .wavevector(wp, Polarization::ExtraordinaryAtCutAngle)?;
        let phi = phasematching_from_mismatch(kp - s.k[col] - i.k[row], self.crystal().length());
        Ok(phi * (pump_envelope(&self.pump, wp) * s.filter[col] * i.filter[row]))
    }

    /// Default signal and idler axes: `n` samples spanning ±3 filter FWHM
    /// around the band centers (±2% of the center without filters).
    pub fn default_axes(&self, n: usize) -> Result<(Axis, Axis)> {
        let centers = self.cavity.centers();
        let axis = |f: &FilterSpec, w0: f64| -> Result<Axis> {
            let half = match f.shape() {
                FilterShape::Gaussian => 3.0 * f.fwhm(),
                FilterShape::None => 0.02 * w0,
            };
            Axis::from_range(w0 - half, w0 + half, n)
        };
        Ok((
            axis(&self.filters.signal, centers.signal)?,
            axis(&self.filters.idler, centers.idler)?,
        ))
    }
}

/// Bare joint spectral amplitude on a signal/idler grid.
pub fn jsa_bare_grid(source: &SpdcSource, x: Axis, y: Axis) -> Result<SpectralGrid<Complex64>> {
    let s = source.mode_samples(&x, Mode::Signal)?;
    let i = source.mode_samples(&y, Mode::Idler)?;
    grid_from_samples(x, y, |col, row| source.jsa_bare_from_samples(&s, &i, col, row))
}

/// Singly-resonant amplitude `A_s A_i f` on a signal/idler grid.
pub fn jsa_singly_resonant(
    source: &SpdcSource,
    x: Axis,
    y: Axis,
) -> Result<SpectralGrid<Complex64>> {
    let s = source.mode_samples(&x, Mode::Signal)?;
    let i = source.mode_samples(&y, Mode::Idler)?;
    grid_from_samples(x, y, |col, row| {
        Ok(source.jsa_bare_from_samples(&s, &i, col, row)? * s.amplitude[col] * i.amplitude[row])
    })
}

/// `S_SR = 𝒜_s 𝒜_i |f|²` on a signal/idler grid (`x` = ω_s, `y` = ω_i).
pub fn jsi_singly_resonant(source: &SpdcSource, x: Axis, y: Axis) -> Result<SpectralGrid<f64>> {
    let s = source.mode_samples(&x, Mode::Signal)?;
    let i = source.mode_samples(&y, Mode::Idler)?;
    grid_from_samples(x, y, |col, row| {
        Ok(s.airy[col] * i.airy[row] * source.jsa_bare_from_samples(&s, &i, col, row)?.norm_sqr())
    })
}

/// `|f|²` on a signal/idler grid.
pub fn jsi_bare(source: &SpdcSource, x: Axis, y: Axis) -> Result<SpectralGrid<f64>> {
    Ok(jsa_bare_grid(source, x, y)?.map(|v| v.norm_sqr()))
}

pub(crate) fn grid_from_samples<T, F>(x: Axis, y: Axis, f: F) -> Result<SpectralGrid<T>>
where
    T: Send + Clone + Default,
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    SpectralGrid::try_from_indices(x, y, Coordinates::SignalIdler, f)
}

/// Smallest number of samples per cavity mode width along the two axes of a
/// signal/idler grid. Infinite when the cavity has no finesse.
pub fn samples_per_mode_width(cavity: &CavitySpec, x: &Axis, y: &Axis) -> Result<f64> {
    let centers = cavity.centers();
    let mut worst = f64::INFINITY;
    for (axis, mode, w0) in [
        (x, Mode::Signal, centers.signal),
        (y, Mode::Idler, centers.idler),
    ] {
        if cavity.effective_reflectivity(mode) == 0.0 {
            continue;
        }
        worst = worst.min(cavity.mode_width(w0, mode)? / axis.step());
    }
    Ok(worst)
}

/// Fails with [`Error::UnderResolved`] when fewer than
/// [`MIN_SAMPLES_PER_MODE`] samples fall across a mode width.
pub fn require_resolution(cavity: &CavitySpec, x: &Axis, y: &Axis) -> Result<f64> {
    let s = samples_per_mode_width(cavity, x, y)?;
    if s < MIN_SAMPLES_PER_MODE {
        let needed = x.len() as f64 * MIN_SAMPLES_PER_MODE / s;
        return Err(Error::UnderResolved(format!(
            "{s:.2} samples per mode width, need {MIN_SAMPLES_PER_MODE}; use at least {} samples per axis over the same span",
            needed.ceil() as usize
        )));
    }
    Ok(s)
}

/// Which frequency a marginal keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marginal {
    Signal,
    Idler,
}

/// A one-dimensional sampled density.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl Density {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.values, self.axis.step())
    }
}

/// Integrates a signal/idler grid over the other frequency by the trapezoid rule.
pub fn marginal_spectrum(grid: &SpectralGrid<f64>, keep: Marginal) -> Result<Density> {
    if grid.coords != Coordinates::SignalIdler {
        return Err(Error::DimensionMismatch(
            "marginal spectra need a signal/idler grid".into(),
        ));
    }
    let (ny, nx) = grid.values.dim();
    if ny != grid.y.len() || nx != grid.x.len() {
        return Err(Error::DimensionMismatch(format!(
            "grid values {:?} do not match axes ({}, {})",
            grid.values.dim(),
            grid.y.len(),
            grid.x.len()
        )));
    }
    Ok(match keep {
        Marginal::Signal => Density {
            axis: grid.x,
            values: (0..nx)
                .map(|c| trapezoid(&grid.values.column(c).to_vec(), grid.y.step()))
                .collect(),
        },
        Marginal::Idler => Density {
            axis: grid.y,
            values: (0..ny)
                .map(|r| trapezoid(&grid.values.row(r).to_vec(), grid.x.step()))
                .collect(),
        },
    })
}

/// Pearson correlation of `(x, y)` weighted by the grid values.
pub fn weighted_correlation(grid: &SpectralGrid<f64>) -> Result<f64> {
    let mut w = 0.0;
    let (mut mx, mut my) = (0.0, 0.0);
    for ((r, c), &v) in grid.values.indexed_iter() {
        if v < 0.0 {
            return Err(invalid("correlation weights must be non-negative"));
        }
        w += v;
        mx += v * c as f64;
        my += v * r as f64;
    }
    if w <= 0.0 {
        return Err(invalid("correlation needs a non-zero weight"));
    }
    mx /= w;
    my /= w;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for ((r, c), &v) in grid.values.indexed_iter() {
        let dx = c as f64 - mx;
        let dy = r as f64 - my;
        sxx += v * dx * dx;
        syy += v * dy * dy;
        sxy += v * dx * dy;
    }
    // Axis steps are positive, so index-space correlation equals the physical one.
    Ok(sxy / (sxx * syy).sqrt())
}
