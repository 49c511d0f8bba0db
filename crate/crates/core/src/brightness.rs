//! Pair brightness per pump pulse,
//! `B = (bU/σ) ∬ [k′ω/n²]_s [k′ω/n²]_i S dω_s dω_i`, with `b = 1`, and the
//! sweeps over pump bandwidth and mirror reflectivities.
//!
//! Two integrators are provided. [`brightness`] applies the 2-D trapezoid
//! rule to a precomputed joint spectral intensity. [`integrate_brightness`]
//! evaluates `S` on lines of constant `ω₊ = ω_s + ω_i`, with the `ω₊` nodes
//! concentrated where the pump envelope and any pump resonance live; the
//! sweeps use it because a resolved square grid at high finesse is too large.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;

use crate::cavity::{wrap_signed, Mode};
use crate::dispersion::{CrystalSpec, Polarization};
use crate::doubly_resonant::jsi_dr;
use crate::error::{invalid, Result};
use crate::grid::{trapezoid, Axis, Coordinates, SpectralGrid};
use crate::spectral::{require_resolution, FilterShape, SpdcSource};

/// How the bracketed factors `k′(ω)ω/n²(ω)` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FactorMode {
    /// At every frequency.
    Exact,
    /// Frozen at the signal and idler band centers.
    #[default]
    CentralApprox,
}

/// Unit in which a pump bandwidth σ is quoted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SigmaUnits {
    /// rad/s.
    #[default]
    Angular,
    /// Hz; multiplied by 2π on conversion.
    Cyclic,
}

impl SigmaUnits {
    pub fn to_angular(self, sigma: f64) -> f64 {
        match self {
            SigmaUnits::Angular => sigma,
            SigmaUnits::Cyclic => 2.0 * PI * sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BrightnessResult {
    /// `B` with `b = 1`; only ratios of this value are meaningful.
    pub value: f64,
    /// `∬ [k′ω/n²]_s [k′ω/n²]_i S dω_s dω_i`.
    pub raw_integral: f64,
    pub normalization_ref: String,
}

const UNNORMALIZED: &str = "b = 1; divide by a reference brightness";

/// `k′(ω)ω/n²(ω)` for an ordinary-polarized output photon.
pub fn emission_factor(crystal: &CrystalSpec, omega: f64) -> Result<f64> {
    let n = crystal.refractive_index(omega, Polarization::Ordinary)?;
    Ok(crystal.group_slowness(omega, Polarization::Ordinary)? * omega / (n * n))
}

fn check_jsi(values: impl Iterator<Item = f64>) -> Result<()> {
    for v in values {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(invalid(format!(
                "joint spectral intensity must be finite and non-negative, found {v}"
            )));
        }
    }
    Ok(())
}

/// Brightness of a precomputed joint spectral intensity by the 2-D trapezoid
/// rule. Sum/difference grids carry the Jacobian ½. Fails when the grid has
/// fewer than 8 samples per cavity mode width of `source`.
pub fn brightness(
    jsi: &SpectralGrid<f64>,
    source: &SpdcSource,
    factors: FactorMode,
) -> Result<BrightnessResult> {
    check_jsi(jsi.values.iter().copied())?;
    let (to_si, jacobian): (fn(f64, f64) -> (f64, f64), f64) = match jsi.coords {
        Coordinates::SignalIdler => (|x, y| (x, y), 1.0),
        Coordinates::SumDifference => (|p, m| (0.5 * (p + m), 0.5 * (p - m)), 0.5),
    };
    if jsi.coords == Coordinates::SignalIdler {
        require_resolution(&source.cavity, &jsi.x, &jsi.y)?;
    } else {
        // Signal moves by half an ω± step per sample.
        let half = |a: &Axis| Axis::new(0.0, 0.5 * a.step(), 2);
        require_resolution(&source.cavity, &half(&jsi.x)?, &half(&jsi.y)?)?;
    }
    let crystal = source.crystal();
    let centers = source.cavity.centers();
    let central = (
        emission_factor(crystal, centers.signal)?,
        emission_factor(crystal, centers.idler)?,
    );
    let weighted = SpectralGrid::try_from_indices(jsi.x, jsi.y, jsi.coords, |col, row| {
        let s = jsi.values[(row, col)];
        if s == 0.0 {
            return Ok(0.0);
        }
        let (ws, wi) = to_si(jsi.x.value(col), jsi.y.value(row));
        let (ks, ki) = match factors {
            FactorMode::CentralApprox => central,
            FactorMode::Exact => (emission_factor(crystal, ws)?, emission_factor(crystal, wi)?),
        };
        Ok(ks * ki * s)
    })?;
    let raw = jacobian * weighted.integral();
    Ok(BrightnessResult {
        value: source.pump.energy() / source.pump.sigma() * raw,
        raw_integral: raw,
        normalization_ref: UNNORMALIZED.into(),
    })
}

/// Sampling of [`integrate_brightness`]. Steps are fractions of the pump
/// width σ, the signal mode width δω, the pump mode width δω_p and the filter
/// FWHM W; `refinement` divides every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationOptions {
    pub factors: FactorMode,
    pub refinement: f64,
    pub sigma_step: f64,
    pub mode_step: f64,
    pub filter_step: f64,
    pub pump_mode_step: f64,
    /// Half-width, in δω_p, of the refined window around each pump resonance.
    pub pump_mode_window: f64,
    pub sigma_span: f64,
    pub filter_span: f64,
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self {
            factors: FactorMode::CentralApprox,
            refinement: 1.0,
            sigma_step: 1.0 / 8.0,
            mode_step: 1.0 / 4.0,
            filter_step: 1.0 / 8.0,
            pump_mode_step: 1.0 / 8.0,
            pump_mode_window: 40.0,
            sigma_span: 3.5,
            filter_span: 6.0,
        }
    }
}

/// Joint spectral intensity of `source`: singly or doubly resonant according
/// to the pump mirrors.
pub fn jsi_point(source: &SpdcSource, omega_s: f64, omega_i: f64) -> Result<f64> {
    if source.cavity.is_doubly_resonant() {
        jsi_dr(source, omega_s, omega_i)
    } else {
        source.jsi_sr(omega_s, omega_i)
    }
}

fn signal_mode_width(source: &SpdcSource) -> Result<Option<f64>> {
    let cav = &source.cavity;
    let r = cav
        .effective_reflectivity(Mode::Signal)
        .max(cav.effective_reflectivity(Mode::Idler));
    if r == 0.0 {
        return Ok(None);
    }
    let ws = cav.mode_width(cav.centers().signal, Mode::Signal)?;
    let wi = cav.mode_width(cav.centers().idler, Mode::Idler)?;
    Ok(Some(ws.min(wi)))
}

/// `ω₊` nodes: a uniform base lattice plus refined windows around each pump
/// resonance inside the span.
fn plus_nodes(source: &SpdcSource, half_span: f64, base_step: f64, opts: &IntegrationOptions) -> Result<Vec<f64>> {
    let cav = &source.cavity;
    let wp0 = source.pump.center();
    let n = (half_span / base_step).ceil() as i64;
    let step = half_span / n as f64;
    let mut nodes: Vec<f64> = (-n..=n).map(|k| wp0 + k as f64 * step).collect();
    let rp = cav.effective_reflectivity(Mode::Pump);
    if cav.is_doubly_resonant() && rp > 0.0 && rp < 1.0 {
        let width = cav.mode_width(wp0, Mode::Pump)?;
        let fsr = cav.free_spectral_range(wp0, Mode::Pump)?;
        let fine = opts.pump_mode_step * width / opts.refinement;
        let window = opts.pump_mode_window * width;
        if fine < step {
            // Nearest resonance from the wrapped pump phase; Δ_p advances 2π per FSR.
            let offset = wrap_signed(cav.reduced_phase_mismatch(wp0, Mode::Pump)?);
            let first = wp0 - offset / (2.0 * PI) * fsr;
            let m = ((half_span + window) / fsr).ceil() as i64;
            let count = (window / fine).ceil() as i64;
            for j in -m..=m {
                let c = first + j as f64 * fsr;
                for q in -count..=count {
                    let w = c + q as f64 * fine;
                    if (w - wp0).abs() <= half_span {
                        nodes.push(w);
                    }
                }
            }
        }
    }
    nodes.sort_by(|a, b| a.partial_cmp(b).expect("finite nodes"));
    let tol = 1e-9 * step;
    nodes.dedup_by(|a, b| (*a - *b).abs() <= tol);
    Ok(nodes)
}

/// Brightness of `source` by line integration in `(ω₊, ω₋)`.
///
/// `ω₊` spans `±sigma_span·σ` about the pump center (capped at
/// `±filter_span·W` with filters), stepped by `min(σ/8, δω/4)` and refined
/// to `δω_p/8` within `±40 δω_p` of each pump resonance. `ω₋` spans
/// `±filter_span·W` (±5% of the pump center without filters) in steps of
/// `min(W/8, δω/4)`. A pump with `|r_1p| = 1` cannot enter the cavity and
/// gives `B = 0`.
pub fn integrate_brightness(source: &SpdcSource, opts: &IntegrationOptions) -> Result<BrightnessResult> {
    if !(opts.refinement > 0.0) {
        return Err(invalid("refinement must be positive"));
    }
    let cav = &source.cavity;
    let zero = || BrightnessResult {
        value: 0.0,
        raw_integral: 0.0,
        normalization_ref: UNNORMALIZED.into(),
    };
    if cav.is_doubly_resonant() && cav.mirrors(Mode::Pump).mirror1.transmissivity() == 0.0 {
        return Ok(zero());
    }
    let sigma = source.pump.sigma();
    let delta = signal_mode_width(source)?;
    let filters = &source.filters;
    let w = match (filters.signal.shape(), filters.idler.shape()) {
        (FilterShape::Gaussian, FilterShape::Gaussian) => Some(filters.signal.fwhm().max(filters.idler.fwhm())),
        (FilterShape::Gaussian, _) => Some(filters.signal.fwhm()),
        (_, FilterShape::Gaussian) => Some(filters.idler.fwhm()),
        _ => None,
    };
    let wp0 = source.pump.center();
    let mut plus_half = opts.sigma_span * sigma;
    let minus_half = match w {
        Some(w) => {
            plus_half = plus_half.min(opts.filter_span * w);
            opts.filter_span * w
        }
        None => 0.05 * wp0,
    };
    let fine = |a: f64| delta.map_or(a, |d| a.min(opts.mode_step * d)) / opts.refinement;
    let plus_step = fine(opts.sigma_step * sigma);
    let minus_step = fine(w.map_or(minus_half / 64.0, |w| opts.filter_step * w));

    let nodes = plus_nodes(source, plus_half, plus_step, opts)?;
    let m = (minus_half / minus_step).ceil() as usize;
    let centers = cav.centers();
    let minus_axis = Axis::centered(centers.signal - centers.idler, minus_half / m as f64, 2 * m + 1)?;

    let crystal = source.crystal();
    let central = (
        emission_factor(crystal, centers.signal)?,
        emission_factor(crystal, centers.idler)?,
    );
    let lines: Vec<f64> = nodes
        .par_iter()
        .map(|&wp| -> Result<f64> {
            let mut samples = Vec::with_capacity(minus_axis.len());
            for wm in minus_axis.values() {
                let (ws, wi) = (0.5 * (wp + wm), 0.5 * (wp - wm));
                let s = jsi_point(source, ws, wi)?;
                let (ks, ki) = match opts.factors {
                    FactorMode::CentralApprox => central,
                    FactorMode::Exact => (emission_factor(crystal, ws)?, emission_factor(crystal, wi)?),
                };
                samples.push(ks * ki * s);
            }
            Ok(trapezoid(&samples, minus_axis.step()))
        })
        .collect::<Result<_>>()?;
    let mut outer = 0.0;
    for k in 1..nodes.len() {
        outer += 0.5 * (nodes[k] - nodes[k - 1]) * (lines[k] + lines[k - 1]);
    }
    let raw = 0.5 * outer;
    Ok(BrightnessResult {
        value: source.pump.energy() / sigma * raw,
        raw_integral: raw,
        normalization_ref: UNNORMALIZED.into(),
    })
}

/// Copy of `source` with output-mirror reflectivity `r2` for signal and idler.
pub fn with_output_reflectivity(source: &SpdcSource, r2: f64) -> Result<SpdcSource> {
    Ok(SpdcSource::new(
        source.cavity.with_output_reflectivity(r2, r2)?,
        source.pump,
        source.filters,
    ))
}

fn with_sigma(source: &SpdcSource, sigma: f64) -> Result<SpdcSource> {
    Ok(SpdcSource::new(source.cavity.clone(), source.pump.with_sigma(sigma)?, source.filters))
}

/// Brightness of the equivalent source without a cavity (`|r_2| = 0`) at σ.
pub fn no_cavity_brightness(source: &SpdcSource, sigma: f64, opts: &IntegrationOptions) -> Result<f64> {
    let bare = with_sigma(&with_output_reflectivity(source, 0.0)?, sigma)?;
    let bare = if bare.cavity.is_doubly_resonant() {
        SpdcSource::new(bare.cavity.with_pump_mirrors(0.0, 0.0)?, bare.pump, bare.filters)
    } else {
        bare
    };
    Ok(integrate_brightness(&bare, opts)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSweepRow {
    pub sigma: f64,
    pub r2: f64,
    pub b_norm: f64,
}

/// `B(σ, |r_2|)` normalized to the no-cavity brightness at `reference_sigma`
/// (the smallest σ of the list when `None`). Rows run over `r2s`, then σ.
pub fn brightness_vs_sigma_sweep(
    base: &SpdcSource,
    sigmas: &[f64],
    r2s: &[f64],
    reference_sigma: Option<f64>,
    opts: &IntegrationOptions,
) -> Result<Vec<SigmaSweepRow>> {
    if sigmas.is_empty() || r2s.is_empty() {
        return Err(invalid("σ and |r_2| lists must be non-empty"));
    }
    let sigma_ref = reference_sigma.unwrap_or_else(|| sigmas.iter().cloned().fold(f64::INFINITY, f64::min));
    let reference = no_cavity_brightness(base, sigma_ref, opts)?;
    let tuples: Vec<(f64, f64)> = r2s
        .iter()
        .flat_map(|&r2| sigmas.iter().map(move |&s| (r2, s)))
        .collect();
    tuples
        .par_iter()
        .map(|&(r2, sigma)| {
            let src = with_sigma(&with_output_reflectivity(base, r2)?, sigma)?;
            Ok(SigmaSweepRow {
                sigma,
                r2,
                b_norm: integrate_brightness(&src, opts)?.value / reference,
            })
        })
        .collect()
}

/// `σ = δω/√(2 ln 2)`, the pump width matched to one cavity mode.
pub fn matched_sigma(mode_width: f64) -> f64 {
    mode_width / (2.0 * LN_2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauRow {
    pub r2: f64,
    pub sigma: f64,
    pub b_norm: f64,
}

/// Plateau brightness per `|r_2|`, each at its matched σ, normalized to the
/// no-cavity brightness at the smallest matched σ. `|r_2| = 0` is the
/// reference itself and gives exactly 1.
pub fn plateau_brightness_vs_r2(base: &SpdcSource, r2s: &[f64], opts: &IntegrationOptions) -> Result<Vec<PlateauRow>> {
    let w0 = base.cavity.centers().signal;
    let sigmas: Vec<Option<f64>> = r2s
        .iter()
        .map(|&r2| -> Result<Option<f64>> {
            if r2 == 0.0 {
                return Ok(None);
            }
            let cav = base.cavity.with_output_reflectivity(r2, r2)?;
            Ok(Some(matched_sigma(cav.mode_width(w0, Mode::Signal)?)))
        })
        .collect::<Result<_>>()?;
    let sigma_ref = sigmas
        .iter()
        .flatten()
        .cloned()
        .fold(base.pump.sigma(), f64::min);
    let reference = no_cavity_brightness(base, sigma_ref, opts)?;
    r2s.par_iter()
        .zip(sigmas.par_iter())
        .map(|(&r2, sigma)| match sigma {
            None => Ok(PlateauRow { r2, sigma: sigma_ref, b_norm: 1.0 }),
            Some(sigma) => {
                let src = with_sigma(&with_output_reflectivity(base, r2)?, *sigma)?;
                Ok(PlateauRow {
                    r2,
                    sigma: *sigma,
                    b_norm: integrate_brightness(&src, opts)?.value / reference,
                })
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpMirrorRow {
    pub sigma: f64,
    pub r1p: f64,
    pub b_norm: f64,
}

/// `B(|r_1p|)` at each σ, normalized to `B(|r_1p| = 0)` at the same σ. The
/// pump mirror-2 reflectivity and all phases are taken from `base`. Rows run
/// over σ, then `|r_1p|`.
pub fn brightness_vs_r1p_sweep(
    base: &SpdcSource,
    r1ps: &[f64],
    sigmas: &[f64],
    opts: &IntegrationOptions,
) -> Result<Vec<PumpMirrorRow>> {
    let r2p = base.cavity.mirrors(Mode::Pump).mirror2.magnitude();
    let at = |r1p: f64, sigma: f64| -> Result<f64> {
        let cav = base.cavity.with_pump_mirrors(r1p, r2p)?;
        let src = SpdcSource::new(cav, base.pump.with_sigma(sigma)?, base.filters);
        Ok(integrate_brightness(&src, opts)?.value)
    };
    let references: Vec<f64> = sigmas.par_iter().map(|&s| at(0.0, s)).collect::<Result<_>>()?;
    let tuples: Vec<(usize, f64)> = (0..sigmas.len())
        .flat_map(|k| r1ps.iter().map(move |&r| (k, r)))
        .collect();
    tuples
        .par_iter()
        .map(|&(k, r1p)| {
            Ok(PumpMirrorRow {
                sigma: sigmas[k],
                r1p,
                b_norm: at(r1p, sigmas[k])? / references[k],
            })
        })
        .collect()
}

/// Ratio `B_cavity(σ)/B_no-cavity(σ)` at `|r_2|`.
pub fn enhancement(base: &SpdcSource, r2: f64, sigma: f64, opts: &IntegrationOptions) -> Result<f64> {
    let src = with_sigma(&with_output_reflectivity(base, r2)?, sigma)?;
    Ok(integrate_brightness(&src, opts)?.value / no_cavity_brightness(base, sigma, opts)?)
}

/// Largest σ in `[lo, hi]` at which the enhancement at `|r_2|` reaches
/// `threshold`: a log-spaced scan downward from `hi`, then bisection in
/// `ln σ` to relative width `1e−3`.
pub fn crossover_sigma(
    base: &SpdcSource,
    r2: f64,
    threshold: f64,
    (lo, hi): (f64, f64),
    opts: &IntegrationOptions,
) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Err(invalid(format!("crossover bracket [{lo}, {hi}] is not increasing")));
    }
    const SCAN: usize = 16;
    let ratio = (hi / lo).ln();
    let sigma_at = |k: usize| hi * (-(k as f64) / SCAN as f64 * ratio).exp();
    let mut above = None;
    for k in 0..=SCAN {
        if enhancement(base, r2, sigma_at(k), opts)? >= threshold {
            above = Some(k);
            break;
        }
    }
    let k = above.ok_or_else(|| {
        invalid(format!("enhancement stays below {threshold} for σ in [{lo:e}, {hi:e}]"))
    })?;
    if k == 0 {
        return Err(invalid(format!("enhancement already exceeds {threshold} at σ = {hi:e}")));
    }
    let (mut a, mut b) = (sigma_at(k).ln(), sigma_at(k - 1).ln());
    while b - a > 1e-3 {
        let mid = 0.5 * (a + b);
        if enhancement(base, r2, mid.exp(), opts)? >= threshold {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((0.5 * (a + b)).exp())
}
