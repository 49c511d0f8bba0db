//! Narrowband singly-resonant source design for an atomic transition.
//!
//! Steps: signal at the transition, idler from energy conservation, cut
//! angle from phasematching, cavity length (`L = ℓ`) from the required mode
//! spacing in wavelength, mirror-2 reflectivity from the required mode width,
//! and the largest pump width that still fills a single mode.

use std::fmt::Write as _;

use crate::cavity::{CavitySpec, CenterFrequencies, Mode};
use crate::dispersion::{phasematching_angle, CrystalModel, CrystalSpec, Polarization};
use crate::error::{invalid, Error, Result};
use crate::grid::{Axis, Coordinates, SpectralGrid};
use crate::spectral::{marginal_spectrum, Density, Filters, Marginal, PumpSpec, SpdcSource};
use crate::{
    angular_frequency, angular_interval_to_wavelength, wavelength, wavelength_interval_to_angular,
    SPEED_OF_LIGHT,
};
use crate::brightness::matched_sigma;

/// Cavity length quoted in the literature for the Ca⁺ 854.2 nm design, kept
/// for comparison with the length obtained from the mode spacing.
pub const REFERENCE_CA_LENGTH: f64 = 220e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DesignTarget {
    pub lambda_signal: f64,
    /// Angular FWHM the signal mode must have.
    pub transition_bandwidth: f64,
    pub lambda_pump: f64,
    /// Wavelength separation required between adjacent cavity modes.
    pub delta_lambda_max: f64,
    pub crystal: CrystalModel,
    /// Use this cavity length instead of the one set by `delta_lambda_max`.
    pub pinned_length: Option<f64>,
}

impl DesignTarget {
    /// 854.2 nm signal, 2π·20 MHz mode width, 400 nm pump, 0.5 nm mode
    /// spacing, BBO.
    pub fn calcium_854() -> Self {
        Self {
            lambda_signal: 854.2e-9,
            transition_bandwidth: 2.0 * std::f64::consts::PI * 20e6,
            lambda_pump: 400e-9,
            delta_lambda_max: 0.5e-9,
            crystal: CrystalModel::bbo(),
            pinned_length: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda_signal", self.lambda_signal),
            ("transition_bandwidth", self.transition_bandwidth),
            ("lambda_pump", self.lambda_pump),
            ("delta_lambda_max", self.delta_lambda_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(l) = self.pinned_length {
            if !(l > 0.0 && l.is_finite()) {
                return Err(invalid(format!("pinned cavity length must be positive, got {l}")));
            }
        }
        if self.lambda_pump >= self.lambda_signal {
            return Err(invalid(format!(
                "pump wavelength {} m must be shorter than the signal wavelength {} m",
                self.lambda_pump, self.lambda_signal
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignResult {
    pub lambda_idler: f64,
    pub cut_angle: f64,
    /// Cavity and crystal length (`L = ℓ`); the pinned length when given.
    pub cavity_length: f64,
    /// Length that puts adjacent modes `delta_lambda_max` apart at λ_s.
    pub length_from_spacing: f64,
    pub r2_magnitude: f64,
    pub finesse: f64,
    pub sigma_max: f64,
    /// Mode width and spacing of the resulting cavity at ω_s.
    pub mode_width: f64,
    pub free_spectral_range: f64,
    pub notes: Vec<String>,
}

impl DesignResult {
    /// `key = value` pairs in SI units, in a fixed order.
    pub fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("lambda_idler_m", format!("{:.17e}", self.lambda_idler)),
            ("cut_angle_rad", format!("{:.17e}", self.cut_angle)),
            ("cut_angle_deg", format!("{:.17e}", self.cut_angle.to_degrees())),
            ("cavity_length_m", format!("{:.17e}", self.cavity_length)),
            ("length_from_spacing_m", format!("{:.17e}", self.length_from_spacing)),
            ("r2_magnitude", format!("{:.17e}", self.r2_magnitude)),
            ("finesse", format!("{:.17e}", self.finesse)),
            ("sigma_max_rad_s", format!("{:.17e}", self.sigma_max)),
            ("mode_width_rad_s", format!("{:.17e}", self.mode_width)),
            ("free_spectral_range_rad_s", format!("{:.17e}", self.free_spectral_range)),
        ]
    }
}

/// Idler wavelength from `1/λ_p = 1/λ_s + 1/λ_i`.
pub fn idler_wavelength(lambda_pump: f64, lambda_signal: f64) -> Result<f64> {
    let inv = 1.0 / lambda_pump - 1.0 / lambda_signal;
    if !(inv > 0.0) {
        return Err(invalid("signal wavelength must exceed the pump wavelength"));
    }
    Ok(1.0 / inv)
}

/// Crystal length `ℓ = L` whose free spectral range `πc/(ℓn)` equals
/// `delta_lambda` in wavelength at `lambda`.
pub fn length_for_mode_spacing(lambda: f64, delta_lambda: f64, index: f64) -> f64 {
    let spacing = wavelength_interval_to_angular(lambda, delta_lambda);
    std::f64::consts::PI * SPEED_OF_LIGHT / (index * spacing)
}

/// Coefficient of finesse giving mode width `delta_omega` for optical length
/// `optical_length`: `√ℱ = 2c/(optical_length·δω)`.
pub fn finesse_for_mode_width(delta_omega: f64, optical_length: f64) -> f64 {
    let root = 2.0 * SPEED_OF_LIGHT / (optical_length * delta_omega);
    root * root
}

/// Root `r ∈ [0, 1)` of `ℱ = 4r/(1 − r)²`, as `ℱ/(√(ℱ+1) + 1)²`.
pub fn reflectivity_for_finesse(finesse: f64) -> Result<f64> {
    if !(finesse >= 0.0 && finesse.is_finite()) {
        return Err(invalid(format!("coefficient of finesse must be finite and ≥ 0, got {finesse}")));
    }
    let s = (finesse + 1.0).sqrt() + 1.0;
    let r = finesse / (s * s);
    if r >= 1.0 {
        return Err(Error::Infeasible(format!(
            "coefficient of finesse {finesse:e} needs |r_2| = 1"
        )));
    }
    Ok(r)
}

/// Runs the design recipe.
pub fn design_source(target: &DesignTarget) -> Result<DesignResult> {
    target.validate()?;
    let lambda_idler = idler_wavelength(target.lambda_pump, target.lambda_signal)?;
    let (ws, wi, wp) = (
        angular_frequency(target.lambda_signal),
        angular_frequency(lambda_idler),
        angular_frequency(target.lambda_pump),
    );
    let probe = CrystalSpec::new(target.crystal.clone(), 0.0, 1e-3)?;
    let cut_angle = phasematching_angle(&probe, wp, ws, wi)?;
    let n = probe.refractive_index(ws, Polarization::Ordinary)?;
    let length_from_spacing = length_for_mode_spacing(target.lambda_signal, target.delta_lambda_max, n);
    let cavity_length = target.pinned_length.unwrap_or(length_from_spacing);
    let free_spectral_range = std::f64::consts::PI * SPEED_OF_LIGHT / (cavity_length * n);
    if target.transition_bandwidth >= free_spectral_range {
        return Err(Error::Infeasible(format!(
            "transition bandwidth {:e} rad/s is not below the mode spacing {free_spectral_range:e} rad/s",
            target.transition_bandwidth
        )));
    }
    let finesse = finesse_for_mode_width(target.transition_bandwidth, cavity_length * n);
    let r2_magnitude = reflectivity_for_finesse(finesse)?;

    let mut notes = Vec::new();
    let achieved_spacing = angular_interval_to_wavelength(target.lambda_signal, free_spectral_range);
    if target.pinned_length.is_some() {
        notes.push(format!(
            "cavity length pinned to {:.1} µm; the mode spacing of {:.3} nm would need {:.1} µm, \
             and the pinned length gives adjacent modes {:.3} nm apart",
            cavity_length * 1e6,
            target.delta_lambda_max * 1e9,
            length_from_spacing * 1e6,
            achieved_spacing * 1e9
        ));
    }
    if target.crystal.name.eq_ignore_ascii_case("bbo")
        && (target.lambda_signal - 854.2e-9).abs() < 0.05e-9
        && (target.delta_lambda_max - 0.5e-9).abs() < 1e-12
    {
        notes.push(format!(
            "literature value for this target is L = {:.0} µm; the mode-spacing relation gives {:.1} µm ({:.2}× larger)",
            REFERENCE_CA_LENGTH * 1e6,
            length_from_spacing * 1e6,
            length_from_spacing / REFERENCE_CA_LENGTH
        ));
    }
    Ok(DesignResult {
        lambda_idler,
        cut_angle,
        cavity_length,
        length_from_spacing,
        r2_magnitude,
        finesse,
        sigma_max: matched_sigma(target.transition_bandwidth),
        mode_width: target.transition_bandwidth,
        free_spectral_range,
        notes,
    })
}

/// Singly-resonant cavity described by `result`, with mirror phases set for
/// resonance at the signal and idler centers.
pub fn design_cavity(target: &DesignTarget, result: &DesignResult) -> Result<CavitySpec> {
    let crystal = CrystalSpec::new(target.crystal.clone(), result.cut_angle, result.cavity_length)?;
    let centers = CenterFrequencies {
        signal: angular_frequency(target.lambda_signal),
        idler: angular_frequency(result.lambda_idler),
    };
    let r2 = result.r2_magnitude;
    Ok(CavitySpec::singly_resonant(crystal, result.cavity_length, r2, r2, centers)?
        .solve_resonance_phases(centers.signal, centers.idler, None, &[])?
        .cavity)
}

/// Signal-marginal check of a design: the single-photon spectrum of the
/// central mode under a pump of width `sigma`, without filters. At
/// `σ = sigma_max` the idler Airy factor narrows the marginal to about
/// 0.8 δω; for `δω ≪ σ ≪ Δω` it approaches δω.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignCheck {
    pub sigma: f64,
    pub marginal: Density,
    pub center_wavelength: f64,
    /// FWHM of the signal marginal, rad/s.
    pub fwhm: f64,
    pub idler_mode_width: f64,
    pub signal_mode_width: f64,
}

/// Full width at half maximum of a single-peaked density, by linear
/// interpolation of the half-maximum crossings.
pub fn fwhm(density: &Density) -> Result<f64> {
    let v = &density.values;
    let (k, &max) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite density"))
        .ok_or_else(|| invalid("empty density"))?;
    let half = 0.5 * max;
    let crossing = |from: usize, to: usize| {
        let (a, b) = (v[from], v[to]);
        let (xa, xb) = (density.axis.value(from), density.axis.value(to));
        xa + (half - a) * (xb - xa) / (b - a)
    };
    let right = (k + 1..v.len()).find(|&j| v[j] < half).ok_or_else(|| invalid("density does not fall to half maximum on the right"))?;
    let left = (0..k).rev().find(|&j| v[j] < half).ok_or_else(|| invalid("density does not fall to half maximum on the left"))?;
    Ok(crossing(right - 1, right) - crossing(left + 1, left))
}

/// Evaluates the designed cavity on a `(2·half_samples+1)²` grid spanning
/// `±span` mode widths around the signal and idler centers.
pub fn check_design(
    target: &DesignTarget,
    result: &DesignResult,
    sigma: f64,
    span: f64,
    half_samples: usize,
) -> Result<DesignCheck> {
    let cavity = design_cavity(target, result)?;
    let centers = cavity.centers();
    let dw = result.mode_width;
    let n = 2 * half_samples + 1;
    let step = span * dw / half_samples as f64;
    let x = Axis::centered(centers.signal, step, n)?;
    let y = Axis::centered(centers.idler, step, n)?;
    let pump = PumpSpec::new(centers.pump(), sigma, 1.0)?;
    let source = SpdcSource::new(cavity, pump, Filters::none());
    let jsi = SpectralGrid::try_from_fn(x, y, Coordinates::SignalIdler, |s, i| source.jsi_sr(s, i))?;
    let marginal = marginal_spectrum(&jsi, Marginal::Signal)?;
    let weight: f64 = marginal.values.iter().sum();
    let mean = marginal
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| v * x.value(k))
        .sum::<f64>()
        / weight;
    Ok(DesignCheck {
        sigma,
        fwhm: fwhm(&marginal)?,
        center_wavelength: wavelength(mean),
        marginal,
        signal_mode_width: source.cavity.mode_width(centers.signal, Mode::Signal)?,
        idler_mode_width: source.cavity.mode_width(centers.idler, Mode::Idler)?,
    })
}

/// Human-readable summary of the six design steps and, when given, the
/// spectral check.
pub fn report_design(target: &DesignTarget, result: &DesignResult, check: Option<&DesignCheck>) -> String {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = String::new();
    let _ = writeln!(out, "Source design ({})", target.crystal.name);
    let _ = writeln!(
        out,
        "1. signal: {:.1} nm, transition bandwidth {:.2} MHz (δω = {:.4e} rad/s)",
        target.lambda_signal * 1e9,
        target.transition_bandwidth / two_pi / 1e6,
        target.transition_bandwidth
    );
    let _ = writeln!(
        out,
        "2. pump {:.1} nm -> idler {:.2} nm",
        target.lambda_pump * 1e9,
        result.lambda_idler * 1e9
    );
    let _ = writeln!(out, "3. phasematching cut angle {:.3} deg", result.cut_angle.to_degrees());
    let _ = writeln!(
        out,
        "4. cavity length L = ℓ = {:.1} µm (mode spacing {:.3} nm requires {:.1} µm)",
        result.cavity_length * 1e6,
        target.delta_lambda_max * 1e9,
        result.length_from_spacing * 1e6
    );
    let _ = writeln!(
        out,
        "5. coefficient of finesse {:.4e}, mirror 2 reflectivity |r2| = {:.6}",
        result.finesse, result.r2_magnitude
    );
    let _ = writeln!(
        out,
        "6. pump bandwidth σ ≤ {:.4e} rad/s ({:.2} MHz)",
        result.sigma_max,
        result.sigma_max / two_pi / 1e6
    );
    let _ = writeln!(
        out,
        "mode width δω = {:.4e} rad/s ({:.2} MHz), mode spacing Δω = {:.4e} rad/s ({:.4} nm)",
        result.mode_width,
        result.mode_width / two_pi / 1e6,
        result.free_spectral_range,
        angular_interval_to_wavelength(target.lambda_signal, result.free_spectral_range) * 1e9
    );
    if let Some(c) = check {
        let ratio = c.fwhm / target.transition_bandwidth;
        let _ = writeln!(
            out,
            "check (σ = {:.4e} rad/s): signal photon centered at {:.1} nm, bandwidth {:.2} MHz (marginal FWHM / target = {:.3}, {})",
            c.sigma,
            c.center_wavelength * 1e9,
            c.fwhm / two_pi / 1e6,
            ratio,
            if (ratio - 1.0).abs() <= 0.1 { "within 10%" } else { "outside 10%" }
        );
        let _ = writeln!(
            out,
            "check: idler mode width {:.4e} rad/s, signal mode width {:.4e} rad/s",
            c.idler_mode_width, c.signal_mode_width
        );
    }
    for note in &result.notes {
        let _ = writeln!(out, "note: {note}");
    }
    out
}
