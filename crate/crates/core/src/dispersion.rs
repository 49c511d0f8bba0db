//! Crystal dispersion: refractive index, wavevector, group slowness and the
//! collinear type-I phasematching angle of a uniaxial crystal.

use std::f64::consts::FRAC_PI_2;

use roots::{find_root_brent, SimpleConvergency};

use crate::error::{invalid, Error, Result};
use crate::{wavelength, SPEED_OF_LIGHT};

/// Relative finite-difference step used for `dk/dω`.
pub const GROUP_SLOWNESS_STEP: f64 = 1e-6;

/// Sellmeier coefficient set `n² = a + b/(λ² − c) − d·λ²` with λ in µm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sellmeier {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Sellmeier {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    /// A model with a frequency-independent index `n`.
    pub fn constant(n: f64) -> Self {
        Self::new(n * n, 0.0, 0.0, 0.0)
    }

    pub fn index_squared(&self, lambda_um: f64) -> f64 {
        let l2 = lambda_um * lambda_um;
        let pole = if self.b == 0.0 { 0.0 } else { self.b / (l2 - self.c) };
        self.a + pole - self.d * l2
    }
}

/// Polarization of a field inside the crystal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    Ordinary,
    /// Extraordinary wave propagating at the crystal's cut angle to the optic axis.
    ExtraordinaryAtCutAngle,
}

/// Dispersion data for a uniaxial crystal: the two principal Sellmeier sets and
/// the wavelength window over which they are valid.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalModel {
    pub name: String,
    pub ordinary: Sellmeier,
    pub extraordinary: Sellmeier,
    /// Validity window in µm, `(min, max)`.
    pub window_um: (f64, f64),
}

impl CrystalModel {
    /// β-barium borate.
    pub fn bbo() -> Self {
        Self {
            name: "bbo".to_string(),
            ordinary: Sellmeier::new(2.7405, 0.0184, 0.0179, 0.0155),
            extraordinary: Sellmeier::new(2.3730, 0.0128, 0.0156, 0.0044),
            window_um: (0.2, 1.1),
        }
    }

    /// A dispersionless medium with index `n` for both polarizations.
    pub fn dispersionless(n: f64) -> Self {
        Self {
            name: format!("constant-{n}"),
            ordinary: Sellmeier::constant(n),
            extraordinary: Sellmeier::constant(n),
            window_um: (0.1, 10.0),
        }
    }

    /// Looks up a built-in model by name.
    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bbo" => Some(Self::bbo()),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.window_um;
        if !(lo > 0.0 && hi > lo) {
            return Err(invalid(format!(
                "crystal '{}': validity window [{lo}, {hi}] µm is empty",
                self.name
            )));
        }
        for k in 0..=64 {
            let lambda = lo + (hi - lo) * k as f64 / 64.0;
            for set in [&self.ordinary, &self.extraordinary] {
                let n2 = set.index_squared(lambda);
                if !(n2.is_finite() && n2 >= 1.0) {
                    return Err(invalid(format!(
                        "crystal '{}': Sellmeier n² = {n2} at {lambda} µm (must be real and at least 1)",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A cut crystal of a given length.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    model: CrystalModel,
    cut_angle: f64,
    length: f64,
}

impl CrystalSpec {
    pub fn new(model: CrystalModel, cut_angle: f64, length: f64) -> Result<Self> {
        model.validate()?;
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid(format!("crystal length must be > 0, got {length} m")));
        }
        if !(0.0..=FRAC_PI_2).contains(&cut_angle) {
            return Err(invalid(format!(
                "cut angle must lie in [0, π/2], got {cut_angle} rad"
            )));
        }
        Ok(Self {
            model,
            cut_angle,
            length,
        })
    }

    pub fn model(&self) -> &CrystalModel {
        &self.model
    }

    pub fn cut_angle(&self) -> f64 {
        self.cut_angle
    }

    /// Crystal length ℓ in meters.
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn with_cut_angle(&self, cut_angle: f64) -> Result<Self> {
        Self::new(self.model.clone(), cut_angle, self.length)
    }

    pub fn with_length(&self, length: f64) -> Result<Self> {
        Self::new(self.model.clone(), self.cut_angle, length)
    }

    /// Angular-frequency validity window `(min, max)` in rad/s.
    pub fn omega_window(&self) -> (f64, f64) {
        let (lo, hi) = self.model.window_um;
        (wavelength(hi * 1e-6), wavelength(lo * 1e-6))
    }

    fn check_window(&self, omega: f64) -> Result<()> {
        let (lo, hi) = self.omega_window();
        if omega.is_finite() && omega >= lo && omega <= hi {
            Ok(())
        } else {
            Err(Error::OutOfWindow {
                quantity: "angular frequency",
                value: omega,
                min: lo,
                max: hi,
                unit: "rad/s",
            })
        }
    }

    fn index_at(&self, omega: f64, polarization: Polarization, cut_angle: f64) -> f64 {
        let lambda_um = wavelength(omega) * 1e6;
        let no2 = self.model.ordinary.index_squared(lambda_um);
        match polarization {
            Polarization::Ordinary => no2.sqrt(),
            Polarization::ExtraordinaryAtCutAngle => {
                let ne2 = self.model.extraordinary.index_squared(lambda_um);
                let (s, c) = cut_angle.sin_cos();
                (c * c / no2 + s * s / ne2).sqrt().recip()
            }
        }
    }

    /// Refractive index at `omega`. The extraordinary index at the cut angle θ
    /// follows the index ellipse `1/n²(θ) = cos²θ/n_o² + sin²θ/n_e²`.
    pub fn refractive_index(&self, omega: f64, polarization: Polarization) -> Result<f64> {
        self.check_window(omega)?;
        Ok(self.index_at(omega, polarization, self.cut_angle))
    }

    /// Wavevector `k = n(ω)·ω/c` in rad/m.
    pub fn wavevector(&self, omega: f64, polarization: Polarization) -> Result<f64> {
        Ok(self.refractive_index(omega, polarization)? * omega / SPEED_OF_LIGHT)
    }

    /// Group slowness `k'(ω) = dk/dω` in s/m, by a central difference with
    /// step `GROUP_SLOWNESS_STEP·ω`.
    pub fn group_slowness(&self, omega: f64, polarization: Polarization) -> Result<f64> {
        self.group_slowness_with_step(omega, polarization, GROUP_SLOWNESS_STEP * omega)
    }

    /// Central-difference `dk/dω` with an explicit absolute step `h` (rad/s).
    pub fn group_slowness_with_step(
        &self,
        omega: f64,
        polarization: Polarization,
        h: f64,
    ) -> Result<f64> {
        self.check_window(omega)?;
        let (lo, hi) = self.omega_window();
        if omega - h < lo || omega + h > hi {
            return Err(Error::OutOfWindow {
                quantity: "angular frequency (finite-difference stencil)",
                value: omega,
                min: lo + h,
                max: hi - h,
                unit: "rad/s",
            });
        }
        let k = |w: f64| self.index_at(w, polarization, self.cut_angle) * w / SPEED_OF_LIGHT;
        Ok((k(omega + h) - k(omega - h)) / (2.0 * h))
    }

    /// Collinear type-I (e → o + o) wavevector mismatch
    /// `Δk = k_e(θ, ω_p) − k_o(ω_s) − k_o(ω_i)` at cut angle `theta`.
    pub fn type_one_mismatch(
        &self,
        theta: f64,
        omega_p: f64,
        omega_s: f64,
        omega_i: f64,
    ) -> Result<f64> {
        for w in [omega_p, omega_s, omega_i] {
            self.check_window(w)?;
        }
        Ok(self.mismatch_unchecked(theta, omega_p, omega_s, omega_i))
    }

    fn mismatch_unchecked(&self, theta: f64, omega_p: f64, omega_s: f64, omega_i: f64) -> f64 {
        let kp = self.index_at(omega_p, Polarization::ExtraordinaryAtCutAngle, theta) * omega_p;
        let ks = self.index_at(omega_s, Polarization::Ordinary, theta) * omega_s;
        let ki = self.index_at(omega_i, Polarization::Ordinary, theta) * omega_i;
        (kp - ks - ki) / SPEED_OF_LIGHT
    }
}

/// Cut angle θ ∈ [0, π/2] at which collinear type-I phasematching
/// `k_p(ω_p0) − k_s(ω_s0) − k_i(ω_i0) = 0` holds, with the pump extraordinary.
pub fn phasematching_angle(
    crystal: &CrystalSpec,
    omega_p0: f64,
    omega_s0: f64,
    omega_i0: f64,
) -> Result<f64> {
    let sum = omega_s0 + omega_i0;
    if ((omega_p0 - sum) / omega_p0).abs() > 1e-9 {
        return Err(invalid(format!(
            "energy conservation violated: ω_p0 = {omega_p0:.9e} but ω_s0 + ω_i0 = {sum:.9e}"
        )));
    }
    let at_zero = crystal.type_one_mismatch(0.0, omega_p0, omega_s0, omega_i0)?;
    let at_right_angle = crystal.type_one_mismatch(FRAC_PI_2, omega_p0, omega_s0, omega_i0)?;
    if at_zero == 0.0 {
        return Ok(0.0);
    }
    if at_right_angle == 0.0 {
        return Ok(FRAC_PI_2);
    }
    if at_zero.signum() == at_right_angle.signum() {
        return Err(Error::NotPhasematchable {
            at_zero,
            at_right_angle,
        });
    }
    let mut convergency = SimpleConvergency {
        eps: 1e-15_f64,
        max_iter: 200,
    };
    let f = |theta: f64| crystal.mismatch_unchecked(theta, omega_p0, omega_s0, omega_i0);
    find_root_brent(0.0, FRAC_PI_2, f, &mut convergency).map_err(|e| {
        Error::Unsupported(format!("phasematching root search failed: {e:?}"))
    })
}
