#![allow(dead_code)]

use spdc_cavity::cavity::{CavitySpec, CenterFrequencies};
use spdc_cavity::dispersion::{phasematching_angle, CrystalModel, CrystalSpec};
use spdc_cavity::spectral::{FilterSpec, Filters, PumpSpec, SpdcSource};
use spdc_cavity::angular_frequency;

pub const LAMBDA_PUMP: f64 = 400e-9;
pub const CRYSTAL_LENGTH: f64 = 20e-6;

pub fn degenerate_crystal(length: f64) -> CrystalSpec {
    let wp = angular_frequency(LAMBDA_PUMP);
    let c = CrystalSpec::new(CrystalModel::bbo(), 0.0, length).unwrap();
    let theta = phasematching_angle(&c, wp, wp / 2.0, wp / 2.0).unwrap();
    c.with_cut_angle(theta).unwrap()
}

/// Degenerate BBO source at 800 nm, 20 µm crystal with L = ℓ, 5 nm pump and
/// 30 nm filters, phases set for resonance at the band center.
pub fn degenerate_source(r2: f64) -> SpdcSource {
    let wp = angular_frequency(LAMBDA_PUMP);
    let w0 = wp / 2.0;
    let cav = CavitySpec::singly_resonant(
        degenerate_crystal(CRYSTAL_LENGTH),
        CRYSTAL_LENGTH,
        r2,
        r2,
        CenterFrequencies::degenerate(w0),
    )
    .unwrap()
    .solve_resonance_phases(w0, w0, None, &[])
    .unwrap()
    .cavity;
    let pump = PumpSpec::from_fwhm_wavelength(LAMBDA_PUMP, 5e-9, 1.0).unwrap();
    let f = FilterSpec::gaussian_wavelength(800e-9, 30e-9).unwrap();
    SpdcSource::new(cav, pump, Filters { signal: f, idler: f })
}

/// Doubly-resonant variant of [`degenerate_source`].
pub fn dr_source(r2: f64, r1p: f64, r2p: f64) -> SpdcSource {
    let wp = angular_frequency(LAMBDA_PUMP);
    let w0 = wp / 2.0;
    let src = degenerate_source(r2);
    let cav = src
        .cavity
        .with_pump_mirrors(r1p, r2p)
        .unwrap()
        .solve_resonance_phases(w0, w0, Some(wp), &[])
        .unwrap()
        .cavity;
    SpdcSource::new(cav, src.pump, src.filters)
}
