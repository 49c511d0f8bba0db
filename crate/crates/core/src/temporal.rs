//! Time-domain view of the pair: the joint temporal intensity in
//! `t± = t_s ± t_i`, the emission-time-difference marginal `S₋(t₋)`, its peak
//! comb and the correlation time.
//!
//! The temporal amplitude is `f̃(t₊, t₋) = C Σ f(ω₊, ω₋) e^{−i(ω₊t₊ + ω₋t₋)/2}`,
//! so `(ω₊, ω₋)` pair with `(t₊/2, t₋/2)`. A Gaussian amplitude `exp(−ω₋²/σ²)`
//! becomes `exp(−t₋²/(4/σ)²)`: width `4/σ` in `t₋`, or `2/σ` in `t₋/2`, the
//! familiar `2/σ` of the per-photon pair `(ω_s, t_s)`. `C` makes the discrete
//! Parseval sum exact, `Σ|f|² dω₊dω₋ = Σ|f̃|² dt₊dt₋`.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::cavity::Mode;
use crate::error::{invalid, Error, Result};
use crate::grid::{trapezoid, Axis, Coordinates, SpectralGrid};
use crate::spectral::{jsa_singly_resonant, Density, FilterShape, SpdcSource};

/// Shortest accepted time window, in cavity round trips.
pub const MIN_WINDOW_ROUND_TRIPS: f64 = 20.0;

/// Joint temporal intensity; `values[(row, col)]` sits at
/// `(t₊, t₋) = (t_plus.value(col), t_minus.value(row))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalGrid {
    pub t_plus: Axis,
    pub t_minus: Axis,
    pub values: Array2<f64>,
}

impl TemporalGrid {
    /// `Σ|f̃|² dt₊dt₋`.
    pub fn power(&self) -> f64 {
        self.values.sum() * self.t_plus.step() * self.t_minus.step()
    }
}

/// Maxima of a one-dimensional density.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    pub positions: Vec<f64>,
    pub heights: Vec<f64>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Mean spacing between consecutive peaks.
    pub fn mean_spacing(&self) -> Option<f64> {
        let n = self.positions.len();
        (n >= 2).then(|| (self.positions[n - 1] - self.positions[0]) / (n - 1) as f64)
    }
}

/// Integrated power of a grid, `Σ|f|² dω_s dω_i` on signal/idler grids and
/// `½ Σ|f|² dω₊dω₋` on sum/difference grids (the Jacobian of the rotation).
pub fn spectral_power(grid: &SpectralGrid<Complex64>) -> f64 {
    let sum: f64 = grid.values.iter().map(|v| v.norm_sqr()).sum();
    let jacobian = match grid.coords {
        Coordinates::SignalIdler => 1.0,
        Coordinates::SumDifference => 0.5,
    };
    jacobian * sum * grid.cell_area()
}

/// Rotated axes that cover the support of a square signal/idler grid, with
/// spacing twice the source spacing so that every rotated node is a source
/// node.
pub fn rotated_axes(grid: &SpectralGrid<Complex64>) -> Result<(Axis, Axis)> {
    let (x, y) = (grid.x, grid.y);
    check_square(grid)?;
    let h = x.step();
    let n = x.len();
    let half = ((n - 1) / 2) as f64;
    let plus = Axis::new(x.start() + y.start(), 2.0 * h, n)?;
    let minus = Axis::new(x.start() - y.start() - 2.0 * h * half, 2.0 * h, n)?;
    Ok((plus, minus))
}

fn check_square<T>(grid: &SpectralGrid<T>) -> Result<()> {
    if grid.coords != Coordinates::SignalIdler {
        return Err(Error::DimensionMismatch("expected a signal/idler grid".into()));
    }
    let (x, y) = (grid.x, grid.y);
    if x.len() != y.len() || ((x.step() - y.step()) / x.step()).abs() > 1e-12 {
        return Err(invalid(format!(
            "rotation needs a square grid with equal spacing (got {}×{}, steps {:e} and {:e})",
            x.len(),
            y.len(),
            x.step(),
            y.step()
        )));
    }
    Ok(())
}

/// Bilinear sample of a grid at fractional indices; zero outside.
fn bilinear(values: &Array2<Complex64>, col: f64, row: f64) -> Complex64 {
    let (ny, nx) = values.dim();
    const SNAP: f64 = 1e-9;
    let snap = |v: f64| {
        let r = v.round();
        if (v - r).abs() < SNAP {
            r
        } else {
            v
        }
    };
    let (col, row) = (snap(col), snap(row));
    if col < 0.0 || row < 0.0 || col > (nx - 1) as f64 || row > (ny - 1) as f64 {
        return Complex64::new(0.0, 0.0);
    }
    let c0 = col.floor() as usize;
    let r0 = row.floor() as usize;
    let fc = col - c0 as f64;
    let fr = row - r0 as f64;
    let c1 = (c0 + 1).min(nx - 1);
    let r1 = (r0 + 1).min(ny - 1);
    let top = values[(r0, c0)] * (1.0 - fc) + values[(r0, c1)] * fc;
    let bottom = values[(r1, c0)] * (1.0 - fc) + values[(r1, c1)] * fc;
    top * (1.0 - fr) + bottom * fr
}

/// Resamples a square signal/idler amplitude onto the default rotated axes.
pub fn to_rotated_coordinates(grid: &SpectralGrid<Complex64>) -> Result<SpectralGrid<Complex64>> {
    let (plus, minus) = rotated_axes(grid)?;
    to_rotated_coordinates_on(grid, plus, minus)
}

/// Resamples a square signal/idler amplitude onto the given `(ω₊, ω₋)` axes
/// by bilinear interpolation, with zeros outside the source support.
pub fn to_rotated_coordinates_on(
    grid: &SpectralGrid<Complex64>,
    plus: Axis,
    minus: Axis,
) -> Result<SpectralGrid<Complex64>> {
    check_square(grid)?;
    let (x, y) = (grid.x, grid.y);
    Ok(SpectralGrid::from_fn(plus, minus, Coordinates::SumDifference, |wp, wm| {
        let ws = 0.5 * (wp + wm);
        let wi = 0.5 * (wp - wm);
        bilinear(&grid.values, x.position(ws), y.position(wi))
    }))
}

/// Resamples a rotated amplitude back onto signal/idler axes.
pub fn from_rotated_coordinates(
    grid: &SpectralGrid<Complex64>,
    signal: Axis,
    idler: Axis,
) -> Result<SpectralGrid<Complex64>> {
    if grid.coords != Coordinates::SumDifference {
        return Err(Error::DimensionMismatch("expected a sum/difference grid".into()));
    }
    let (p, m) = (grid.x, grid.y);
    Ok(SpectralGrid::from_fn(signal, idler, Coordinates::SignalIdler, |ws, wi| {
        bilinear(&grid.values, p.position(ws + wi), m.position(ws - wi))
    }))
}

/// Time axis conjugate to a frequency axis under the kernel `e^{−iωt/2}`:
/// spacing `4π/(N dω)`, centered on zero.
fn time_axis(freq: &Axis) -> Result<Axis> {
    let n = freq.len();
    let dt = 4.0 * PI / (n as f64 * freq.step());
    Axis::new(-((n / 2) as f64) * dt, dt, n)
}

/// In-place 2-D FFT over a row-major `rows × cols` buffer.
fn fft2(data: &mut Vec<Complex64>, rows: usize, cols: usize) {
    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft_forward(cols);
    data.par_chunks_mut(cols).for_each(|line| row_fft.process(line));
    let mut transposed = vec![Complex64::new(0.0, 0.0); rows * cols];
    transposed
        .par_chunks_mut(rows)
        .enumerate()
        .for_each(|(c, line)| {
            for (r, v) in line.iter_mut().enumerate() {
                *v = data[r * cols + c];
            }
        });
    let col_fft = planner.plan_fft_forward(rows);
    transposed.par_chunks_mut(rows).for_each(|line| col_fft.process(line));
    data.par_chunks_mut(cols).enumerate().for_each(|(r, line)| {
        for (c, v) in line.iter_mut().enumerate() {
            *v = transposed[c * rows + r];
        }
    });
}

/// Joint temporal intensity `|f̃(t₊, t₋)|²` of a rotated amplitude.
///
/// Fails when the `t₋` window `4π/dω₋` is shorter than
/// [`MIN_WINDOW_ROUND_TRIPS`] round trips of duration `round_trip`.
pub fn joint_temporal_intensity(
    grid: &SpectralGrid<Complex64>,
    round_trip: f64,
) -> Result<TemporalGrid> {
    if grid.coords != Coordinates::SumDifference {
        return Err(Error::DimensionMismatch(
            "the temporal transform needs a sum/difference grid".into(),
        ));
    }
    let (plus, minus) = (grid.x, grid.y);
    let window = 4.0 * PI / minus.step();
    let needed = MIN_WINDOW_ROUND_TRIPS * round_trip;
    if window < needed {
        let step = 4.0 * PI / needed;
        let span = minus.step() * minus.len() as f64;
        let n = (span / step).ceil() as usize;
        return Err(Error::UnderResolved(format!(
            "time window {window:.4e} s is shorter than {MIN_WINDOW_ROUND_TRIPS} round trips ({needed:.4e} s); \
             use a frequency step of at most {step:.4e} rad/s, i.e. at least {} samples per axis over the same span",
            n.next_power_of_two()
        )));
    }
    let (rows, cols) = (minus.len(), plus.len());
    let mut data: Vec<Complex64> = grid.values.iter().copied().collect();
    fft2(&mut data, rows, cols);

    let t_plus = time_axis(&plus)?;
    let t_minus = time_axis(&minus)?;
    let c2 = plus.step() * minus.step()
        / ((rows * cols) as f64 * t_plus.step() * t_minus.step());
    // fftshift: output index k holds frequency bin (k + N/2) mod N.
    let mut values = Array2::<f64>::zeros((rows, cols));
    for r in 0..rows {
        let sr = (r + rows - rows / 2) % rows;
        for c in 0..cols {
            let sc = (c + cols - cols / 2) % cols;
            values[(r, c)] = c2 * data[sr * cols + sc].norm_sqr();
        }
    }
    Ok(TemporalGrid {
        t_plus,
        t_minus,
        values,
    })
}

/// `S₋(t₋) = ∫dt₊ |f̃|²` by the trapezoid rule.
pub fn time_difference_marginal(grid: &TemporalGrid) -> Density {
    let values = grid
        .values
        .rows()
        .into_iter()
        .map(|row| trapezoid(&row.to_vec(), grid.t_plus.step()))
        .collect();
    Density {
        axis: grid.t_minus,
        values,
    }
}

/// Local maxima above `min_prominence · max`, refined by a three-point
/// parabolic fit.
pub fn extract_peaks(density: &Density, min_prominence: f64) -> Result<PeakSet> {
    let v = &density.values;
    if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(invalid("peak extraction needs a finite, non-negative density"));
    }
    let max = v.iter().cloned().fold(0.0, f64::max);
    let threshold = min_prominence * max;
    let mut peaks = PeakSet {
        positions: Vec::new(),
        heights: Vec::new(),
    };
    let n = v.len();
    for k in 0..n {
        let left = if k > 0 { v[k - 1] } else { f64::NEG_INFINITY };
        let right = if k + 1 < n { v[k + 1] } else { f64::NEG_INFINITY };
        if !(v[k] > left && v[k] >= right && v[k] > threshold && v[k] > 0.0) {
            continue;
        }
        let (mut offset, mut height) = (0.0, v[k]);
        if k > 0 && k + 1 < n {
            let denom = left - 2.0 * v[k] + right;
            if denom < 0.0 {
                offset = 0.5 * (left - right) / denom;
                height = v[k] - 0.25 * (left - right) * offset;
            }
        }
        peaks.positions.push(density.axis.value(k) + offset * density.axis.step());
        peaks.heights.push(height);
    }
    if peaks.is_empty() {
        return Err(Error::NoPeaks {
            threshold,
            fraction: min_prominence,
        });
    }
    Ok(peaks)
}

/// Height-weighted standard deviation of the peak positions,
/// `√(Σ h_k (τ_k − τ̄)² / Σ h_k)`.
pub fn correlation_time(peaks: &PeakSet) -> Result<f64> {
    if peaks.len() < 2 {
        return Err(invalid(format!(
            "the correlation time needs at least 2 peaks, got {}",
            peaks.len()
        )));
    }
    let w: f64 = peaks.heights.iter().sum();
    let mean = peaks
        .positions
        .iter()
        .zip(&peaks.heights)
        .map(|(t, h)| t * h)
        .sum::<f64>()
        / w;
    let var = peaks
        .positions
        .iter()
        .zip(&peaks.heights)
        .map(|(t, h)| h * (t - mean) * (t - mean))
        .sum::<f64>()
        / w;
    Ok(var.sqrt())
}

/// Sizing of the spectral grids behind a temporal analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalPlan {
    /// Phase-index round trip `2(ℓn + L − ℓ)/c`.
    pub round_trip: f64,
    /// `max(round_trips · round_trip, width_factor / δω)`, stretched so the
    /// comb has decayed below the peak cutoff at the window edge.
    pub window: f64,
    /// Rotated-grid spacing `4π/window`.
    pub spacing: f64,
    /// Rotated samples per axis (a power of two).
    pub samples: usize,
    /// Half-spans of the amplitude support in ω₊ and ω₋.
    pub half_span_plus: f64,
    pub half_span_minus: f64,
}

/// Options of [`temporal_analysis`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalOptions {
    pub round_trips: f64,
    pub width_factor: f64,
    pub min_samples: usize,
    pub min_prominence: f64,
}

impl Default for TemporalOptions {
    fn default() -> Self {
        Self {
            round_trips: 40.0,
            width_factor: 10.0,
            min_samples: 2048,
            min_prominence: 1e-4,
        }
    }
}

/// Chooses the time window, rotated spacing and sample count for `source`.
pub fn plan(source: &SpdcSource, options: &TemporalOptions) -> Result<TemporalPlan> {
    let cav = &source.cavity;
    let w0 = cav.centers().signal;
    let round_trip = cav.round_trip_time(w0, Mode::Signal)?;
    let mut window = options.round_trips * round_trip;
    let rho = cav.effective_reflectivity(Mode::Signal) * cav.effective_reflectivity(Mode::Idler);
    if rho > 0.0 {
        window = window.max(options.width_factor / cav.mode_width(w0, Mode::Signal)?);
        // S₋ teeth fall as ρ^|m|; keep the wrapped tail a decade under the cutoff.
        let teeth = (0.1 * options.min_prominence).ln() / rho.ln();
        window = window.max(2.0 * teeth.ceil() * round_trip);
    }
    let spacing = 4.0 * PI / window;
    let sigma = source.pump.sigma();
    let (half_span_plus, half_span_minus) = match source.filters.signal.shape() {
        FilterShape::Gaussian => {
            let w = source.filters.signal.fwhm().max(source.filters.idler.fwhm());
            ((5.0 * sigma).min(6.0 * w), 6.0 * w)
        }
        FilterShape::None => (5.0 * sigma, 0.05 * w0),
    };
    let needed = (2.0 * half_span_plus.max(half_span_minus) / spacing).ceil() as usize + 1;
    let samples = needed.max(options.min_samples).next_power_of_two();
    Ok(TemporalPlan {
        round_trip,
        window,
        spacing,
        samples,
        half_span_plus,
        half_span_minus,
    })
}

/// Output of [`temporal_analysis`].
#[derive(Debug, Clone)]
pub struct TemporalAnalysis {
    pub plan: TemporalPlan,
    pub grid: TemporalGrid,
    pub marginal: Density,
    pub peaks: PeakSet,
    pub correlation_time: f64,
    /// Power of the signal/idler amplitude that was rotated.
    pub spectral_power: f64,
    /// Power after rotation and after the transform.
    pub rotated_power: f64,
    pub temporal_power: f64,
}

/// Singly-resonant amplitude → rotation → DFT → `S₋` → peaks → `t_C`.
pub fn temporal_analysis(source: &SpdcSource, options: &TemporalOptions) -> Result<TemporalAnalysis> {
    let plan = plan(source, options)?;
    let centers = source.cavity.centers();
    let h = 0.5 * plan.spacing;
    // Signal/idler support of the rotated box, on the half-spacing lattice.
    let half = 0.5 * (plan.half_span_plus + plan.half_span_minus);
    let k = (half / h).ceil() as usize;
    let n_si = 2 * k + 1;
    let s_axis = Axis::new(centers.signal - k as f64 * h, h, n_si)?;
    let i_axis = Axis::new(centers.idler - k as f64 * h, h, n_si)?;
    let jsa = jsa_singly_resonant(source, s_axis, i_axis)?;

    let n = plan.samples;
    let plus = Axis::new(centers.pump() - (n / 2) as f64 * plan.spacing, plan.spacing, n)?;
    let minus = Axis::new(
        centers.signal - centers.idler - (n / 2) as f64 * plan.spacing,
        plan.spacing,
        n,
    )?;
    let rotated = to_rotated_coordinates_on(&jsa, plus, minus)?;
    let spectral = spectral_power(&jsa);
    let rotated_power = spectral_power(&rotated);
    let grid = joint_temporal_intensity(&rotated, plan.round_trip)?;
    let temporal_power = grid.power();
    let marginal = time_difference_marginal(&grid);
    let peaks = extract_peaks(&marginal, options.min_prominence)?;
    let correlation_time = correlation_time(&peaks)?;
    Ok(TemporalAnalysis {
        plan,
        grid,
        marginal,
        peaks,
        correlation_time,
        spectral_power: spectral,
        rotated_power,
        temporal_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gaussian_grid(n: usize, h: f64, cs: f64, ci: f64, width: f64) -> SpectralGrid<Complex64> {
        let x = Axis::centered(0.0, h, n).unwrap();
        SpectralGrid::from_fn(x, x, Coordinates::SignalIdler, |s, i| {
            let a = ((s - cs) / width).powi(2) + ((i - ci) / width).powi(2);
            Complex64::new((-a).exp(), 0.0)
        })
    }

    #[test]
    fn delta_peak_maps_to_sum_and_difference() {
        let x = Axis::new(0.0, 1.0, 9).unwrap();
        let mut g = SpectralGrid::from_fn(x, x, Coordinates::SignalIdler, |_, _| Complex64::new(0.0, 0.0));
        g.values[(2, 6)] = Complex64::new(1.0, 0.0);
        let r = to_rotated_coordinates(&g).unwrap();
        let (_, (row, col)) = r.map(|v| v.norm()).argmax();
        assert_eq!(r.x.value(col), 6.0 + 2.0);
        assert_eq!(r.y.value(row), 6.0 - 2.0);
    }

    #[test]
    fn rotated_nodes_are_source_nodes() {
        let g = gaussian_grid(33, 1.0, 2.0, -3.0, 7.0);
        let r = to_rotated_coordinates(&g).unwrap();
        for ((row, col), v) in r.values.indexed_iter() {
            let s = 0.5 * (r.x.value(col) + r.y.value(row));
            let i = 0.5 * (r.x.value(col) - r.y.value(row));
            let (ps, pi) = (g.x.position(s), g.y.position(i));
            assert!((ps - ps.round()).abs() < 1e-9 && (pi - pi.round()).abs() < 1e-9);
            if (0.0..=32.0).contains(&ps) && (0.0..=32.0).contains(&pi) {
                assert_eq!(*v, g.values[(pi.round() as usize, ps.round() as usize)]);
            }
        }
    }

    #[test]
    fn rotation_round_trip_in_the_interior() {
        let g = gaussian_grid(129, 1.0, 0.0, 0.0, 60.0);
        let r = to_rotated_coordinates(&g).unwrap();
        let back = from_rotated_coordinates(&r, g.x, g.y).unwrap();
        for row in 32..97 {
            for col in 32..97 {
                let a = g.values[(row, col)];
                let b = back.values[(row, col)];
                assert!((a - b).norm() <= 1e-3 * a.norm(), "{row} {col}");
            }
        }
    }

    #[test]
    fn rotation_preserves_power() {
        let g = gaussian_grid(257, 1.0, 3.0, -2.0, 20.0);
        let r = to_rotated_coordinates_on(
            &g,
            Axis::centered(0.0, 2.0, 512).unwrap(),
            Axis::centered(0.0, 2.0, 512).unwrap(),
        )
        .unwrap();
        assert!((spectral_power(&r) / spectral_power(&g) - 1.0).abs() < 5e-3);
    }

    #[test]
    fn pump_ridge_becomes_constant_sum() {
        let x = Axis::centered(0.0, 1.0, 65).unwrap();
        let g = SpectralGrid::from_fn(x, x, Coordinates::SignalIdler, |s, i| {
            Complex64::new((-((s + i - 4.0) / 3.0).powi(2)).exp(), 0.0)
        });
        let r = to_rotated_coordinates(&g).unwrap();
        let (_, (row, col)) = r.map(|v| v.norm()).argmax();
        let _ = row;
        assert_eq!(r.x.value(col), 4.0);
        // Along ω₋ at fixed ω₊ = 4 the ridge is flat inside the support.
        let c = r.x.nearest(4.0);
        let mid = r.y.len() / 2;
        for k in mid - 8..mid + 8 {
            assert_relative_eq!(r.values[(k, c)].re, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_width_convention() {
        let sigma = 1e12;
        let d = sigma / 16.0;
        let n = 512;
        let ax = Axis::centered(0.0, d, n).unwrap();
        let g = SpectralGrid::from_fn(ax, ax, Coordinates::SumDifference, |wp, wm| {
            Complex64::new((-(wm / sigma).powi(2) - (wp / sigma).powi(2)).exp(), 0.0)
        });
        let t = joint_temporal_intensity(&g, 0.0).unwrap();
        let m = time_difference_marginal(&t);
        // |f̃|² ∝ exp(−2 t₋²/(4/σ)²): half maximum at t₋ = (4/σ)√(ln 2 / 2).
        let peak = m.values[n / 2];
        let target = 4.0 / sigma * (std::f64::consts::LN_2 / 2.0).sqrt();
        let k = (n / 2..n).find(|&k| m.values[k] < 0.5 * peak).unwrap();
        let (t0, t1) = (m.axis.value(k - 1), m.axis.value(k));
        let (v0, v1) = (m.values[k - 1], m.values[k]);
        let crossing = t0 + (0.5 * peak - v0) * (t1 - t0) / (v1 - v0);
        assert!((crossing / target - 1.0).abs() < 1e-2, "{crossing} {target}");
    }

    #[test]
    fn parseval_is_exact() {
        let ax = Axis::centered(3e14, 1e11, 64).unwrap();
        let ay = Axis::centered(-2e13, 1e11, 128).unwrap();
        let g = SpectralGrid::from_fn(ax, ay, Coordinates::SumDifference, |wp, wm| {
            Complex64::from_polar(
                (-((wp - 3e14) / 1e12).powi(2) - ((wm + 2e13) / 2e12).powi(2)).exp(),
                1e-12 * wp * wm.signum(),
            )
        });
        let t = joint_temporal_intensity(&g, 0.0).unwrap();
        let spectral: f64 = g.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_area();
        assert_relative_eq!(t.power(), spectral, max_relative = 1e-6);
    }

    #[test]
    fn short_window_is_rejected() {
        let ax = Axis::centered(0.0, 1e12, 64).unwrap();
        let g = SpectralGrid::from_fn(ax, ax, Coordinates::SumDifference, |_, _| Complex64::new(1.0, 0.0));
        let window = 4.0 * PI / 1e12;
        let err = joint_temporal_intensity(&g, window / 10.0).unwrap_err();
        match err {
            Error::UnderResolved(msg) => assert!(msg.contains("samples per axis")),
            other => panic!("{other:?}"),
        }
        assert!(joint_temporal_intensity(&g, window / 20.0).is_ok());
    }

    #[test]
    fn separable_marginal() {
        let tp = Axis::new(-2.0, 0.5, 9).unwrap();
        let tm = Axis::new(-1.0, 0.25, 9).unwrap();
        let values = Array2::from_shape_fn((9, 9), |(r, c)| {
            (1.0 + tm.value(r).powi(2)) * (-(tp.value(c)).powi(2)).exp()
        });
        let g = TemporalGrid { t_plus: tp, t_minus: tm, values };
        let m = time_difference_marginal(&g);
        let fp: Vec<f64> = tp.values().iter().map(|t| (-t * t).exp()).collect();
        let ip = trapezoid(&fp, 0.5);
        for (r, v) in m.values.iter().enumerate() {
            assert_relative_eq!(*v, ip * (1.0 + tm.value(r).powi(2)), max_relative = 1e-13);
        }
    }

    fn density(axis: Axis, f: impl Fn(f64) -> f64) -> Density {
        Density {
            values: axis.values().into_iter().map(f).collect(),
            axis,
        }
    }

    #[test]
    fn single_gaussian_peak() {
        let a = Axis::new(-10.0, 0.1, 201).unwrap();
        let p = extract_peaks(&density(a, |t| (-(t - 1.234).powi(2)).exp()), 1e-3).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p.positions[0] - 1.234).abs() < 0.1);
    }

    #[test]
    fn two_separated_peaks() {
        let a = Axis::new(-20.0, 0.05, 801).unwrap();
        let w = 0.5;
        let p = extract_peaks(
            &density(a, |t| (-((t + 2.5) / w).powi(2)).exp() + (-((t - 2.5) / w).powi(2)).exp()),
            1e-3,
        )
        .unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn decaying_comb_peak_count() {
        let spacing = 1.0;
        let rho: f64 = 0.5;
        let a = Axis::new(-0.5, 0.01, 3001).unwrap();
        let comb = density(a, |t| {
            (0..40)
                .map(|k| rho.powi(k) * (-((t - k as f64 * spacing) / 0.05).powi(2)).exp())
                .sum()
        });
        let prominence = 1e-4;
        // Teeth with ρ^k > 1e−4: k < ln(1e−4)/ln ρ.
        let expected = ((prominence as f64).ln() / rho.ln()).ceil() as usize;
        let p = extract_peaks(&comb, prominence).unwrap();
        assert_eq!(p.len(), expected);
    }

    #[test]
    fn no_peaks_is_an_error() {
        let a = Axis::new(0.0, 1.0, 10).unwrap();
        assert!(matches!(extract_peaks(&density(a, |_| 0.0), 0.1), Err(Error::NoPeaks { .. })));
    }

    #[test]
    fn correlation_time_of_symmetric_pair() {
        let p = PeakSet {
            positions: vec![-3.0, 3.0],
            heights: vec![2.0, 2.0],
        };
        assert_relative_eq!(correlation_time(&p).unwrap(), 3.0, max_relative = 1e-15);
        let single = PeakSet {
            positions: vec![0.0],
            heights: vec![1.0],
        };
        assert!(correlation_time(&single).is_err());
    }

    #[test]
    fn correlation_time_of_geometric_comb() {
        let t = 2.0;
        let rho: f64 = 0.6;
        let k_max = 400;
        let p = PeakSet {
            positions: (0..k_max).map(|k| k as f64 * t).collect(),
            heights: (0..k_max).map(|k| rho.powi(k as i32)).collect(),
        };
        assert_relative_eq!(
            correlation_time(&p).unwrap(),
            t * rho.sqrt() / (1.0 - rho),
            max_relative = 1e-12
        );
    }

    proptest! {
        #[test]
        fn correlation_time_is_shift_invariant(shift in -1e3f64..1e3, a in 0.1f64..5.0, b in 0.1f64..5.0) {
            let p = PeakSet { positions: vec![0.0, 1.0, 3.0], heights: vec![a, b, 1.0] };
            let q = PeakSet { positions: p.positions.iter().map(|x| x + shift).collect(), heights: p.heights.clone() };
            prop_assert!((correlation_time(&p).unwrap() - correlation_time(&q).unwrap()).abs() < 1e-9);
        }
    }
}
