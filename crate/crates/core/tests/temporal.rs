mod common;

use spdc_cavity::cavity::Mode;
use spdc_cavity::temporal::{temporal_analysis, TemporalOptions};

#[test]
fn degenerate_pipeline_comb_and_parseval() {
    let src = common::degenerate_source(0.73);
    let a = temporal_analysis(&src, &TemporalOptions::default()).unwrap();
    let m = &a.marginal;
    let dt = m.axis.step();

    // Highest peak at t₋ = 0.
    let (k_max, _) = m
        .values
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (k, &v)| if v > b.1 { (k, v) } else { b });
    assert!(m.axis.value(k_max).abs() <= dt);

    let spacing = a.peaks.mean_spacing().unwrap();
    println!("peaks {} spacing {spacing:e} round trip {:e} dt {dt:e}", a.peaks.len(), a.plan.round_trip);
    assert!((spacing - a.plan.round_trip).abs() <= dt);
    assert!((a.plan.round_trip - 0.222e-12).abs() < 0.002e-12);

    // Degenerate source: two-sided marginal is symmetric about t₋ = 0.
    let n = m.values.len();
    let c = n / 2;
    let max = m.values[c];
    for j in 1..c {
        assert!((m.values[c + j] - m.values[c - j]).abs() <= 1e-6 * max, "{j}");
    }

    // Parseval through rotate → DFT.
    assert!((a.temporal_power / (2.0 * a.rotated_power) - 1.0).abs() < 1e-4);
    println!("spectral {:e} rotated {:e}", a.spectral_power, a.rotated_power);
}

#[test]
fn correlation_time_grows_as_modes_narrow() {
    let mut last = (f64::INFINITY, 0.0);
    for r2 in [0.5, 0.7, 0.9] {
        let src = common::degenerate_source(r2);
        let a = temporal_analysis(&src, &TemporalOptions::default()).unwrap();
        let dw = src.cavity.mode_width(src.cavity.centers().signal, Mode::Signal).unwrap();
        println!("r2 {r2} dw {dw:e} tc {:e} peaks {}", a.correlation_time, a.peaks.len());
        assert!(dw < last.0);
        assert!(a.correlation_time > last.1);
        let spacing = a.peaks.mean_spacing().unwrap();
        println!("spacing {spacing:e} rt {:e} dt {:e}", a.plan.round_trip, a.marginal.axis.step());
        assert!((spacing - a.plan.round_trip).abs() <= a.marginal.axis.step());
        last = (dw, a.correlation_time);
    }
}
