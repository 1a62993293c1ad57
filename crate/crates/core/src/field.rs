//! Sampled fields on a [`Grid`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Complex samples on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

/// Real samples on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

impl ComplexField {
    pub fn new(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_fn<F: Fn([f64; 3]) -> Complex64 + Sync>(grid: &Grid, f: F) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(grid.position(i))).collect();
        Self { grid: grid.clone(), values }
    }

    pub fn from_real(field: &RealField) -> Self {
        Self {
            grid: field.grid.clone(),
            values: field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// First non-finite sample, if any.
    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            Some(index) => Err(Error::CorruptField { index }),
            None => Ok(()),
        }
    }

    pub fn same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `|u|^2` as a real field.
    pub fn density(&self) -> RealField {
        RealField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// `M(u) = ||u||_2^2`.
    pub fn mass(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    /// `<a, b> = int a conj(b)`.
    pub fn inner(&self, other: &ComplexField) -> Complex64 {
        debug_assert!(self.grid == other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<Complex64>()
            * self.grid.cell_volume()
    }

    /// `int |u|^q`.
    pub fn lp_norm_pow(&self, q: f64) -> f64 {
        self.values.iter().map(|v| v.norm().powf(q)).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn scale(&mut self, s: f64) {
        self.values.par_iter_mut().for_each(|v| *v *= s);
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn scale_complex(&mut self, s: Complex64) {
        self.values.par_iter_mut().for_each(|v| *v *= s);
    }

    /// `self += a * x`.
    pub fn axpy(&mut self, a: f64, x: &ComplexField) {
        debug_assert!(self.grid == x.grid);
        self.values.par_iter_mut().zip(&x.values).for_each(|(v, w)| *v += w * a);
    }

    /// `a * self + b * x` as a new field.
    pub fn lincomb(&self, a: f64, b: f64, x: &ComplexField) -> Self {
        debug_assert!(self.grid == x.grid);
        let values = self.values.par_iter().zip(&x.values).map(|(v, w)| v * a + w * b).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn sub(&self, other: &ComplexField) -> Self {
        self.lincomb(1.0, -1.0, other)
    }

    /// Multiply pointwise by a real field.
    pub fn mul_real(&self, f: &RealField) -> Self {
        debug_assert!(self.grid == f.grid);
        let values = self.values.par_iter().zip(&f.values).map(|(v, w)| v * w).collect();
        Self { grid: self.grid.clone(), values }
    }

    pub fn map<F: Fn(Complex64) -> Complex64 + Sync>(&self, f: F) -> Self {
        Self { grid: self.grid.clone(), values: self.values.par_iter().map(|&v| f(v)).collect() }
    }
}

impl RealField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    pub fn from_fn<F: Fn([f64; 3]) -> f64 + Sync>(grid: &Grid, f: F) -> Self {
        Self { grid: grid.clone(), values: grid.sample(f) }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(index) => Err(Error::CorruptField { index }),
            None => Ok(()),
        }
    }
}
