//! Uniform sample axes and two-dimensional spectral grids.

use ndarray::Array2;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// A uniformly spaced, strictly increasing sample axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    start: f64,
    step: f64,
    len: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, len: usize) -> Result<Self> {
        if len == 0 {
            return Err(invalid("axis must have at least one sample"));
        }
        if !(start.is_finite() && step.is_finite() && step > 0.0) {
            return Err(invalid(format!(
                "axis needs a finite start and positive step (start = {start}, step = {step})"
            )));
        }
        Ok(Self { start, step, len })
    }

    /// `len` samples from `min` to `max` inclusive.
    pub fn from_range(min: f64, max: f64, len: usize) -> Result<Self> {
        if len < 2 || !(max > min) {
            return Err(invalid(format!(
                "axis range [{min}, {max}] with {len} samples is not strictly increasing"
            )));
        }
        Self::new(min, (max - min) / (len - 1) as f64, len)
    }

    /// `len` samples spaced by `step`, symmetric about `center`.
    pub fn centered(center: f64, step: f64, len: usize) -> Result<Self> {
        Self::new(center - step * (len as f64 - 1.0) / 2.0, step, len)
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn end(&self) -> f64 {
        self.value(self.len - 1)
    }

    pub fn value(&self, index: usize) -> f64 {
        self.start + self.step * index as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.value(k)).collect()
    }

    /// Fractional index of `x` on this axis (may fall outside `[0, len−1]`).
    pub fn position(&self, x: f64) -> f64 {
        (x - self.start) / self.step
    }

    /// Index of the sample nearest to `x`, clamped to the axis.
    pub fn nearest(&self, x: f64) -> usize {
        self.position(x).round().clamp(0.0, (self.len - 1) as f64) as usize
    }
}

/// Coordinate system of a [`SpectralGrid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coordinates {
    /// Columns run over ω_s, rows over ω_i.
    SignalIdler,
    /// Columns run over ω₊ = ω_s + ω_i, rows over ω₋ = ω_s − ω_i.
    SumDifference,
}

/// Samples on a rectangular lattice. `values[(row, col)]` sits at
/// `(x.value(col), y.value(row))`; for signal/idler grids that is
/// `(ω_s, ω_i)`, so rows index the idler.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid<T> {
    pub x: Axis,
    pub y: Axis,
    pub coords: Coordinates,
    pub values: Array2<T>,
}

impl<T> SpectralGrid<T> {
    pub fn new(x: Axis, y: Axis, coords: Coordinates, values: Array2<T>) -> Result<Self> {
        if values.dim() != (y.len(), x.len()) {
            return Err(Error::DimensionMismatch(format!(
                "values are {:?} but axes need ({}, {})",
                values.dim(),
                y.len(),
                x.len()
            )));
        }
        Ok(Self {
            x,
            y,
            coords,
            values,
        })
    }

    /// Fills the grid from `f(x, y)`, rows in parallel.
    pub fn from_fn<F>(x: Axis, y: Axis, coords: Coordinates, f: F) -> Self
    where
        T: Send + Clone + Default,
        F: Fn(f64, f64) -> T + Sync,
    {
        let mut data = vec![T::default(); x.len() * y.len()];
        data.par_chunks_mut(x.len()).enumerate().for_each(|(row, line)| {
            let yv = y.value(row);
            for (col, v) in line.iter_mut().enumerate() {
                *v = f(x.value(col), yv);
            }
        });
        let values = Array2::from_shape_vec((y.len(), x.len()), data)
            .expect("buffer length matches the axes");
        Self {
            x,
            y,
            coords,
            values,
        }
    }

    /// Fallible row-parallel fill; the first error in row order is returned.
    pub fn try_from_fn<F>(x: Axis, y: Axis, coords: Coordinates, f: F) -> Result<Self>
    where
        T: Send + Clone + Default,
        F: Fn(f64, f64) -> Result<T> + Sync,
    {
        Self::try_from_indices(x, y, coords, |col, row| f(x.value(col), y.value(row)))
    }

    /// Fallible row-parallel fill from `f(col, row)`.
    pub fn try_from_indices<F>(x: Axis, y: Axis, coords: Coordinates, f: F) -> Result<Self>
    where
        T: Send + Clone + Default,
        F: Fn(usize, usize) -> Result<T> + Sync,
    {
        let mut data = vec![T::default(); x.len() * y.len()];
        let errors: Vec<Option<Error>> = data
            .par_chunks_mut(x.len())
            .enumerate()
            .map(|(row, line)| {
                for (col, v) in line.iter_mut().enumerate() {
                    match f(col, row) {
                        Ok(val) => *v = val,
                        Err(e) => return Some(e),
                    }
                }
                None
            })
            .collect();
        if let Some(e) = errors.into_iter().flatten().next() {
            return Err(e);
        }
        let values = Array2::from_shape_vec((y.len(), x.len()), data)
            .expect("buffer length matches the axes");
        Ok(Self {
            x,
            y,
            coords,
            values,
        })
    }

    pub fn map<U, F>(&self, f: F) -> SpectralGrid<U>
    where
        F: Fn(&T) -> U,
    {
        SpectralGrid {
            x: self.x,
            y: self.y,
            coords: self.coords,
            values: self.values.map(f),
        }
    }

    /// Area of one lattice cell.
    pub fn cell_area(&self) -> f64 {
        self.x.step() * self.y.step()
    }
}

impl SpectralGrid<f64> {
    /// Largest value and its `(row, col)` index.
    pub fn argmax(&self) -> (f64, (usize, usize)) {
        let mut best = (f64::NEG_INFINITY, (0, 0));
        for ((r, c), &v) in self.values.indexed_iter() {
            if v > best.0 {
                best = (v, (r, c));
            }
        }
        best
    }

    pub fn max(&self) -> f64 {
        self.argmax().0
    }

    /// Two-dimensional trapezoidal integral over the lattice.
    pub fn integral(&self) -> f64 {
        let (ny, nx) = self.values.dim();
        let weight = |k: usize, n: usize| if n > 1 && (k == 0 || k == n - 1) { 0.5 } else { 1.0 };
        let mut acc = 0.0;
        for r in 0..ny {
            let wr = weight(r, ny);
            let mut row = 0.0;
            for c in 0..nx {
                row += weight(c, nx) * self.values[(r, c)];
            }
            acc += wr * row;
        }
        acc * self.cell_area()
    }
}

/// Trapezoidal integral of uniformly spaced samples.
pub fn trapezoid(samples: &[f64], step: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let inner: f64 = samples[1..n - 1].iter().sum();
            step * (inner + 0.5 * (samples[0] + samples[n - 1]))
        }
    }
}
