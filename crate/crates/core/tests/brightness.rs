mod common;

use std::time::Instant;

use spdc_cavity::brightness::{
    brightness_vs_r1p_sweep, brightness_vs_sigma_sweep, crossover_sigma, enhancement, matched_sigma,
    plateau_brightness_vs_r2, IntegrationOptions,
};
use spdc_cavity::cavity::Mode;

fn opts() -> IntegrationOptions {
    IntegrationOptions::default()
}

#[test]
fn crossover_tracks_free_spectral_range() {
    for r2 in [0.5, 0.7, 0.9] {
        let t = Instant::now();
        let base = common::degenerate_source(r2);
        let w0 = base.cavity.centers().signal;
        let predicted = matched_sigma(base.cavity.free_spectral_range(w0, Mode::Signal).unwrap());
        let found = crossover_sigma(&base, r2, 1.02, (predicted / 4.0, predicted * 4.0), &opts()).unwrap();
        println!("r2 {r2}: crossover {found:e} predicted {predicted:e} ratio {:.3} ({:?})", found / predicted, t.elapsed());
        assert!((found / predicted - 1.0).abs() < 0.2);
    }
}

#[test]
fn plateau_scales_with_inverse_loss() {
    let t = Instant::now();
    let rows = plateau_brightness_vs_r2(&common::degenerate_source(0.9), &[0.9, 0.95, 0.99], &opts()).unwrap();
    let x: Vec<f64> = rows.iter().map(|r| 1.0 / (1.0 - r.r2)).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.b_norm).collect();
    println!("plateau {y:?} ({:?})", t.elapsed());
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    println!("R² {r2}");
    assert!(r2 > 0.95);
    assert!(y.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn small_sigma_ordering_and_large_sigma_parity() {
    let base = common::degenerate_source(0.5);
    let t = Instant::now();
    let rows = brightness_vs_sigma_sweep(&base, &[3e11, 3e14], &[0.0, 0.5, 0.7, 0.9], None, &opts()).unwrap();
    println!("{rows:?} ({:?})", t.elapsed());
    let small: Vec<f64> = rows.iter().filter(|r| r.sigma == 3e11).map(|r| r.b_norm).collect();
    assert!((small[0] - 1.0).abs() < 1e-12);
    assert!(small.windows(2).all(|w| w[1] > w[0]));
    for r2 in [0.5, 0.7, 0.9] {
        let e = enhancement(&base, r2, 3e14, &opts()).unwrap();
        println!("large-σ enhancement r2 {r2}: {e}");
        assert!((e - 1.0).abs() < 0.15);
    }
}

#[test]
fn double_resonance_enhances_at_small_sigma() {
    let base = common::dr_source(0.73, 0.0, 1.0);
    let r1ps = [0.0, 0.3, 0.5, 0.7, 0.9, 0.99, 0.999, 0.99999, 1.0];
    let t = Instant::now();
    let rows = brightness_vs_r1p_sweep(&base, &r1ps, &[2e11], &opts()).unwrap();
    for r in &rows {
        println!("r1p {} B {}", r.r1p, r.b_norm);
    }
    println!("({:?})", t.elapsed());
    assert!((rows[0].b_norm - 1.0).abs() < 1e-12);
    assert!(rows[..5].windows(2).all(|w| w[1].b_norm > w[0].b_norm));
    assert_eq!(rows.last().unwrap().b_norm, 0.0);
}
