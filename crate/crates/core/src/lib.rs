//! Photon pairs from spontaneous parametric downconversion (SPDC) inside a
//! nonlinear optical cavity.
//!
//! The crate models a nonlinear crystal of length ℓ between two mirrors.
//! Mirror 1 is perfectly reflecting for the signal and idler photons, so
//! every pair leaves through mirror 2. In the singly-resonant case the pump
//! crosses the crystal once; in the doubly-resonant case mirrors 1 and 2 also
//! reflect the pump and it makes repeated passes.
//!
//! Module map:
//!
//! * [`dispersion`]: Sellmeier indices, wavevectors, group slowness and the
//!   type-I phasematching angle.
//! * [`cavity`]: per-mode phases, Airy functions, finesse, mode width,
//!   free spectral range and resonance-phase solving.
//! * [`spectral`]: pump envelope, phasematching function, filters, the bare
//!   and singly-resonant joint spectral amplitude/intensity, marginals.
//! * [`doubly_resonant`]: pump-pass sums, pump Airy function, phase balancing
//!   and the doubly-resonant joint spectral intensity.
//! * [`temporal`]: rotation to sum/difference frequencies, the joint temporal
//!   intensity, emission-time-difference marginal and correlation time.
//! * [`brightness`]: pair brightness per pump pulse and parameter sweeps.
//! * [`design`]: narrowband source design for an atomic transition.
//!
//! Angular frequencies are in rad/s, lengths in meters and times in seconds
//! at every public boundary.

pub mod brightness;
pub mod cavity;
pub mod design;
pub mod dispersion;
pub mod doubly_resonant;
mod error;
pub mod grid;
pub mod spectral;
pub mod temporal;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Angular frequency (rad/s) of light with vacuum wavelength `lambda` (m).
pub fn angular_frequency(lambda: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda
}

/// Vacuum wavelength (m) of light with angular frequency `omega` (rad/s).
pub fn wavelength(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / omega
}

/// Converts a wavelength interval `delta_lambda` around `lambda` into the
/// corresponding angular-frequency interval, `2πc Δλ / λ²`.
pub fn wavelength_interval_to_angular(lambda: f64, delta_lambda: f64) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * delta_lambda / (lambda * lambda)
}

/// Inverse of [`wavelength_interval_to_angular`].
pub fn angular_interval_to_wavelength(lambda: f64, delta_omega: f64) -> f64 {
    delta_omega * lambda * lambda / (2.0 * std::f64::consts::PI * SPEED_OF_LIGHT)
}
