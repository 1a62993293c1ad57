//! Periodic tensor-product grids on `[-L_j, L_j)` and their transform plans.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible number of points along an axis.
pub const MIN_POINTS: usize = 8;

/// Plain-data description of a grid, used in configs and sidecars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub half_widths: Vec<f64>,
    pub points: Vec<usize>,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        Grid::new(self.dim, &self.half_widths, &self.points)
    }
}

struct Plans {
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

struct Inner {
    dim: usize,
    half_widths: Vec<f64>,
    points: Vec<usize>,
    spacing: Vec<f64>,
    coords: Vec<Vec<f64>>,
    wavenumbers: Vec<Vec<f64>>,
    // Nyquist entry zeroed; used by odd-order derivatives.
    wavenumbers_odd: Vec<Vec<f64>>,
    plans: Plans,
}

/// Uniform periodic grid. Cheap to clone; transform plans are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<Inner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.inner.dim)
            .field("half_widths", &self.inner.half_widths)
            .field("points", &self.inner.points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.points == other.inner.points
                && self.inner.half_widths == other.inner.half_widths)
    }
}

/// `make_grid` under its conventional name.
pub fn make_grid(dim: usize, half_widths: &[f64], points: &[usize]) -> Result<Grid> {
    Grid::new(dim, half_widths, points)
}

impl Grid {
    pub fn new(dim: usize, half_widths: &[f64], points: &[usize]) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if half_widths.len() != dim || points.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} half-widths and point counts, got {} and {}",
                half_widths.len(),
                points.len()
            )));
        }
        for (axis, (&l, &n)) in half_widths.iter().zip(points).enumerate() {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!("axis {axis}: half-width {l} must be positive")));
            }
            if n < MIN_POINTS {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: {n} points is below the minimum of {MIN_POINTS}"
                )));
            }
            if n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("axis {axis}: point count {n} is odd")));
            }
            if !n.is_power_of_two() {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: point count {n} is not a power of two"
                )));
            }
        }

        let spacing: Vec<f64> = half_widths
            .iter()
            .zip(points)
            .map(|(&l, &n)| 2.0 * l / n as f64)
            .collect();
        let coords = half_widths
            .iter()
            .zip(points)
            .zip(&spacing)
            .map(|((&l, &n), &h)| (0..n).map(|i| -l + i as f64 * h).collect())
            .collect();
        let wavenumbers: Vec<Vec<f64>> = half_widths
            .iter()
            .zip(points)
            .map(|(&l, &n)| {
                let dk = std::f64::consts::PI / l;
                (0..n)
                    .map(|k| {
                        let k = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
                        k * dk
                    })
                    .collect()
            })
            .collect();
        let wavenumbers_odd = wavenumbers
            .iter()
            .map(|xi| {
                let mut xi = xi.clone();
                let n = xi.len();
                xi[n / 2] = 0.0;
                xi
            })
            .collect();

        let mut planner = FftPlanner::new();
        let forward = points.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = points.iter().map(|&n| planner.plan_fft_inverse(n)).collect();

        Ok(Self {
            inner: Arc::new(Inner {
                dim,
                half_widths: half_widths.to_vec(),
                points: points.to_vec(),
                spacing,
                coords,
                wavenumbers,
                wavenumbers_odd,
                plans: Plans { forward, inverse },
            }),
        })
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            dim: self.dim(),
            half_widths: self.half_widths().to_vec(),
            points: self.points().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn half_widths(&self) -> &[f64] {
        &self.inner.half_widths
    }

    pub fn points(&self) -> &[usize] {
        &self.inner.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.inner.spacing
    }

    /// Sample coordinates `-L + i h` along `axis`.
    pub fn coords(&self, axis: usize) -> &[f64] {
        &self.inner.coords[axis]
    }

    /// Wavenumbers in standard FFT order (Nyquist stored as `-pi/h`).
    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.inner.wavenumbers[axis]
    }

    /// Wavenumbers with the Nyquist mode zeroed, for odd-order derivatives.
    pub fn wavenumbers_odd(&self, axis: usize) -> &[f64] {
        &self.inner.wavenumbers_odd[axis]
    }

    /// Largest resolved wavenumber `pi / h` along `axis`.
    pub fn max_wavenumber(&self, axis: usize) -> f64 {
        std::f64::consts::PI / self.inner.spacing[axis]
    }

    pub fn len(&self) -> usize {
        self.inner.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight `prod h_j`.
    pub fn cell_volume(&self) -> f64 {
        self.inner.spacing.iter().product()
    }

    /// Row-major strides (axis 0 slowest).
    pub fn strides(&self) -> Vec<usize> {
        let n = &self.inner.points;
        let mut strides = vec![1; n.len()];
        for axis in (0..n.len() - 1).rev() {
            strides[axis] = strides[axis + 1] * n[axis + 1];
        }
        strides
    }

    /// Multi-index of a flat index; unused trailing axes are zero.
    #[inline]
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let n = &self.inner.points;
        let mut idx = [0usize; 3];
        for axis in (0..n.len()).rev() {
            idx[axis] = flat % n[axis];
            flat /= n[axis];
        }
        idx
    }

    /// Physical position of a flat index; unused trailing axes are zero.
    #[inline]
    pub fn position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim() {
            x[axis] = self.inner.coords[axis][idx[axis]];
        }
        x
    }

    /// Evaluate `f(x)` at every grid point, row-major.
    pub fn sample<F: Fn([f64; 3]) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        (0..self.len()).into_par_iter().map(|i| f(self.position(i))).collect()
    }

    /// Same grid with every half-width multiplied by `factor` (same point counts).
    pub fn scaled(&self, factor: f64) -> Result<Grid> {
        let hw: Vec<f64> = self.half_widths().iter().map(|l| l * factor).collect();
        Grid::new(self.dim(), &hw, self.points())
    }

    /// Unnormalized forward (`inverse = false`) or normalized inverse 1D transform of
    /// every line along `axis`.
    pub fn transform_axis(&self, data: &mut [Complex64], axis: usize, inverse: bool) {
        assert_eq!(data.len(), self.len(), "buffer does not match grid");
        let n = self.inner.points[axis];
        let stride = self.strides()[axis];
        let fft = if inverse {
            &self.inner.plans.inverse[axis]
        } else {
            &self.inner.plans.forward[axis]
        };
        let scratch_len = fft.get_inplace_scratch_len();

        if stride == 1 {
            data.par_chunks_mut(n).for_each_init(
                || vec![Complex64::new(0.0, 0.0); scratch_len],
                |scratch, line| fft.process_with_scratch(line, scratch),
            );
        } else {
            // Transpose each (n x stride) block so lines become contiguous.
            let block = n * stride;
            let mut buf = vec![Complex64::new(0.0, 0.0); block];
            for chunk in data.chunks_mut(block) {
                buf.par_chunks_mut(n).enumerate().for_each(|(s, line)| {
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = chunk[i * stride + s];
                    }
                });
                buf.par_chunks_mut(n).for_each_init(
                    || vec![Complex64::new(0.0, 0.0); scratch_len],
                    |scratch, line| fft.process_with_scratch(line, scratch),
                );
                chunk.par_chunks_mut(stride).enumerate().for_each(|(i, row)| {
                    for (s, v) in row.iter_mut().enumerate() {
                        *v = buf[s * n + i];
                    }
                });
            }
        }
        if inverse {
            let scale = 1.0 / n as f64;
            data.par_iter_mut().for_each(|v| *v *= scale);
        }
    }

    /// Transform along every axis.
    pub fn transform(&self, data: &mut [Complex64], inverse: bool) {
        for axis in 0..self.dim() {
            self.transform_axis(data, axis, inverse);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_dimensional_spacing_and_band() {
        let g = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        assert_eq!(g.spacing(), &[0.25, 0.25]);
        let xi_max = g.wavenumbers(0).iter().fold(0.0f64, |m, &k| m.max(k.abs()));
        assert!((xi_max - 4.0 * PI).abs() < 1e-12);
        assert!((g.max_wavenumber(0) - 4.0 * PI).abs() < 1e-12);
        assert_eq!(g.coords(1)[0], -8.0);
        assert!((g.coords(1)[5] - (-8.0 + 5.0 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn three_dimensional_grid_is_valid() {
        let g = make_grid(3, &[6.0, 6.0, 6.0], &[32, 32, 32]).unwrap();
        assert_eq!(g.len(), 32 * 32 * 32);
        assert_eq!(g.strides(), vec![1024, 32, 1]);
        let p = g.position(32 * 32 + 2);
        assert_eq!(p, [-6.0 + 0.375, -6.0, -6.0 + 2.0 * 0.375]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_grid(2, &[8.0, 8.0], &[7, 64]).is_err());
        assert!(make_grid(2, &[8.0, 8.0], &[4, 64]).is_err());
        assert!(make_grid(2, &[8.0, 8.0], &[24, 64]).is_err());
        assert!(make_grid(2, &[0.0, 8.0], &[64, 64]).is_err());
        assert!(make_grid(2, &[-1.0, 8.0], &[64, 64]).is_err());
        assert!(make_grid(4, &[1.0; 4], &[8; 4]).is_err());
        assert!(make_grid(2, &[8.0], &[64, 64]).is_err());
    }

    #[test]
    fn deterministic_for_equal_inputs() {
        let a = make_grid(2, &[5.0, 7.0], &[32, 16]).unwrap();
        let b = make_grid(2, &[5.0, 7.0], &[32, 16]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.wavenumbers(1), b.wavenumbers(1));
    }
}
