//! Fourier transforms, spectral derivatives, quadrature and trigonometric resampling.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid;

/// Spectral tail fraction above which derivatives are flagged as unresolved.
pub const DEFAULT_TAIL_WARN: f64 = 1e-8;

/// Fraction of the band (per axis) beyond which a mode counts as "tail".
pub const TAIL_BAND: f64 = 2.0 / 3.0;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Forward transform. Output holds unnormalized coefficients in FFT order.
pub fn transform_forward(f: &ComplexField) -> ComplexField {
    let mut v = f.values().to_vec();
    f.grid().transform(&mut v, false);
    ComplexField::new(f.grid(), v).expect("length preserved")
}

/// Inverse of [`transform_forward`].
pub fn transform_inverse(coeffs: &ComplexField) -> ComplexField {
    let mut v = coeffs.values().to_vec();
    coeffs.grid().transform(&mut v, true);
    ComplexField::new(coeffs.grid(), v).expect("length preserved")
}

/// Weight `w` with `sum |f|^2 prod h = w * sum |f_hat|^2`.
pub fn parseval_weight(grid: &Grid) -> f64 {
    grid.cell_volume() / grid.len() as f64
}

/// Rectangle-rule quadrature `sum f prod h`.
pub fn integrate(f: &RealField) -> f64 {
    f.values().iter().sum::<f64>() * f.grid().cell_volume()
}

/// Quadrature of an arbitrary per-point integrand.
pub fn integrate_with<F: Fn(usize) -> f64 + Sync>(grid: &Grid, f: F) -> f64 {
    // Chunked so the summation order is fixed regardless of thread count.
    const CHUNK: usize = 4096;
    let n = grid.len();
    let partial: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(&f).sum::<f64>())
        .collect();
    partial.iter().sum::<f64>() * grid.cell_volume()
}

/// `|xi|^2` at a flat spectral index (Nyquist included).
#[inline]
fn xi_sq(grid: &Grid, flat: usize) -> f64 {
    let idx = grid.unravel(flat);
    (0..grid.dim()).map(|a| grid.wavenumbers(a)[idx[a]].powi(2)).sum()
}

/// Fraction of spectral energy in modes beyond [`TAIL_BAND`] of the band on any axis.
pub fn tail_fraction_of_coeffs(coeffs: &ComplexField) -> f64 {
    let grid = coeffs.grid();
    let cut: Vec<f64> = (0..grid.dim()).map(|a| TAIL_BAND * grid.max_wavenumber(a)).collect();
    let mut total = 0.0;
    let mut tail = 0.0;
    for (flat, c) in coeffs.values().iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        let idx = grid.unravel(flat);
        if (0..grid.dim()).any(|a| grid.wavenumbers(a)[idx[a]].abs() > cut[a]) {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

pub fn tail_fraction(f: &ComplexField) -> f64 {
    tail_fraction_of_coeffs(&transform_forward(f))
}

/// Resolution verdict for a field at a given tail threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resolution {
    pub tail_fraction: f64,
    pub threshold: f64,
}

impl Resolution {
    pub fn resolved(&self) -> bool {
        self.tail_fraction <= self.threshold
    }
}

/// Spectral derivative along one axis.
pub fn derivative(f: &ComplexField, axis: usize) -> ComplexField {
    let grid = f.grid();
    let mut v = f.values().to_vec();
    grid.transform_axis(&mut v, axis, false);
    let xi = grid.wavenumbers_odd(axis);
    let n = grid.points()[axis];
    let stride = grid.strides()[axis];
    v.par_iter_mut().enumerate().for_each(|(flat, c)| {
        let k = (flat / stride) % n;
        *c *= I * xi[k];
    });
    grid.transform_axis(&mut v, axis, true);
    ComplexField::new(grid, v).expect("length preserved")
}

/// Per-axis spectral gradient.
pub fn gradient(f: &ComplexField) -> Vec<ComplexField> {
    gradient_checked(f, DEFAULT_TAIL_WARN).0
}

/// Gradient plus the resolution of the input; a warning is logged when unresolved.
pub fn gradient_checked(f: &ComplexField, tail_threshold: f64) -> (Vec<ComplexField>, Resolution) {
    let resolution = Resolution { tail_fraction: tail_fraction(f), threshold: tail_threshold };
    if !resolution.resolved() {
        log::warn!(
            "gradient of an unresolved field: tail fraction {:.3e} exceeds {:.1e}",
            resolution.tail_fraction,
            tail_threshold
        );
    }
    let grads = (0..f.grid().dim()).map(|a| derivative(f, a)).collect();
    (grads, resolution)
}

/// Spectral Laplacian.
pub fn laplacian(f: &ComplexField) -> ComplexField {
    let grid = f.grid();
    let mut v = f.values().to_vec();
    grid.transform(&mut v, false);
    v.par_iter_mut().enumerate().for_each(|(flat, c)| *c *= -xi_sq(grid, flat));
    grid.transform(&mut v, true);
    ComplexField::new(grid, v).expect("length preserved")
}

/// `||grad f||_2^2` evaluated in Fourier space; equals `<-Lap f, f>` exactly.
pub fn kinetic(f: &ComplexField) -> f64 {
    let coeffs = transform_forward(f);
    let grid = f.grid();
    let s: f64 = coeffs
        .values()
        .iter()
        .enumerate()
        .map(|(flat, c)| xi_sq(grid, flat) * c.norm_sqr())
        .sum();
    s * parseval_weight(grid)
}

/// Apply a radial Fourier multiplier `m(|xi|^2)`.
pub fn apply_multiplier<F: Fn(f64) -> f64 + Sync>(f: &ComplexField, m: F) -> ComplexField {
    let grid = f.grid();
    let mut v = f.values().to_vec();
    grid.transform(&mut v, false);
    v.par_iter_mut().enumerate().for_each(|(flat, c)| *c *= m(xi_sq(grid, flat)));
    grid.transform(&mut v, true);
    ComplexField::new(grid, v).expect("length preserved")
}

/// Row `k` of the trigonometric interpolation operator: weights such that
/// `f(y) = sum_k w_k c_k` for FFT coefficients `c` of samples on `[-L, L)`.
fn interpolation_weights(grid: &Grid, axis: usize, y: f64) -> Vec<Complex64> {
    let n = grid.points()[axis];
    let l = grid.half_widths()[axis];
    let xi = grid.wavenumbers(axis);
    let s = y + l;
    (0..n)
        .map(|k| {
            if k == n / 2 {
                // Split Nyquist symmetrically so real data interpolates to real values.
                Complex64::new((xi[k] * s).cos() / n as f64, 0.0)
            } else {
                Complex64::from_polar(1.0 / n as f64, xi[k] * s)
            }
        })
        .collect()
}

/// Contract axis `axis` of a row-major tensor of shape `dims` with a dense matrix
/// `mat` (rows x dims[axis]).
fn mode_product(data: &[Complex64], dims: &[usize], axis: usize, mat: &[Vec<Complex64>]) -> (Vec<Complex64>, Vec<usize>) {
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let n = dims[axis];
    let m = mat.len();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * m * inner];
    out.par_chunks_mut(inner).enumerate().for_each(|(oi, row)| {
        let o = oi / m;
        let i = oi % m;
        let w = &mat[i];
        let base = o * n * inner;
        for (k, wk) in w.iter().enumerate() {
            if *wk == Complex64::new(0.0, 0.0) {
                continue;
            }
            let src = &data[base + k * inner..base + (k + 1) * inner];
            for (r, s) in row.iter_mut().zip(src) {
                *r += wk * s;
            }
        }
    });
    let mut new_dims = dims.to_vec();
    new_dims[axis] = m;
    (out, new_dims)
}

/// Resample `f` onto `target`, evaluating the trigonometric interpolant of `f` at
/// `x_j = stretch_j * y_j` for every target point `y`. Points whose source
/// coordinate lies outside the source box get zero (the field is taken to vanish
/// outside the box). Returns the resampled samples and the fraction of `f`'s mass
/// lying outside the region covered by the target box.
pub fn resample_stretched(f: &ComplexField, target: &Grid, stretch: &[f64]) -> Result<(ComplexField, f64)> {
    let src = f.grid();
    if target.dim() != src.dim() || stretch.len() != src.dim() {
        return Err(Error::DimensionMismatch { expected: src.dim(), got: target.dim() });
    }
    let coeffs = transform_forward(f);
    let mut data = coeffs.into_values();
    let mut dims = src.points().to_vec();
    for axis in 0..src.dim() {
        let l = src.half_widths()[axis];
        let mat: Vec<Vec<Complex64>> = target
            .coords(axis)
            .iter()
            .map(|&y| {
                let x = stretch[axis] * y;
                if x < -l || x >= l {
                    vec![Complex64::new(0.0, 0.0); dims[axis]]
                } else {
                    interpolation_weights(src, axis, x)
                }
            })
            .collect();
        let (d, nd) = mode_product(&data, &dims, axis, &mat);
        data = d;
        dims = nd;
    }
    let out = ComplexField::new(target, data)?;

    // Mass of f outside the image of the target box.
    let covered: Vec<(f64, f64)> = (0..src.dim())
        .map(|a| {
            let lt = target.half_widths()[a];
            let s = stretch[a].abs();
            (-s * lt, s * lt)
        })
        .collect();
    let total = f.mass();
    let outside = integrate_with(src, |i| {
        let x = src.position(i);
        if (0..src.dim()).any(|a| x[a] < covered[a].0 || x[a] >= covered[a].1) {
            f.values()[i].norm_sqr()
        } else {
            0.0
        }
    });
    let fraction = if total > 0.0 { outside / total } else { 0.0 };
    Ok((out, fraction))
}

/// Evaluate the trigonometric interpolant of `f` at arbitrary points.
pub fn evaluate_at(f: &ComplexField, points: &[[f64; 3]]) -> Vec<Complex64> {
    let grid = f.grid();
    let coeffs = transform_forward(f);
    let c = coeffs.values();
    let dim = grid.dim();
    points
        .par_iter()
        .map(|p| {
            let w: Vec<Vec<Complex64>> = (0..dim).map(|a| interpolation_weights(grid, a, p[a])).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for (flat, ck) in c.iter().enumerate() {
                let idx = grid.unravel(flat);
                let mut term = *ck;
                for a in 0..dim {
                    term *= w[a][idx[a]];
                }
                acc += term;
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn gaussian(grid: &Grid) -> ComplexField {
        ComplexField::from_fn(grid, |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
            Complex64::new(PI.powf(-0.5) * (-r2 / 2.0).exp(), 0.0)
        })
    }

    #[test]
    fn plane_wave_has_single_coefficient() {
        let g = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        let xi = g.wavenumbers(0)[3];
        let f = ComplexField::from_fn(&g, |x| Complex64::from_polar(1.0, xi * x[0]));
        let c = transform_forward(&f);
        let big: Vec<usize> = c
            .values()
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 1e-9 * g.len() as f64)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(big.len(), 1);
        assert_eq!(g.unravel(big[0]), [3, 0, 0]);
    }

    #[test]
    fn round_trip_is_identity() {
        let g = make_grid(2, &[8.0, 6.0], &[32, 64]).unwrap();
        let f = ComplexField::from_fn(&g, |x| Complex64::new((x[0] * 0.3).sin(), x[1].cos() * (-x[0] * x[0]).exp()));
        let back = transform_inverse(&transform_forward(&f));
        let err = f.values().iter().zip(back.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(err < 1e-12 * f.max_abs());
    }

    #[test]
    fn gaussian_tail_is_negligible() {
        let g = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        assert!(tail_fraction(&gaussian(&g)) < 1e-12);
    }

    #[test]
    fn gradient_of_plane_wave_and_constant() {
        let g = make_grid(2, &[8.0, 8.0], &[32, 32]).unwrap();
        let xi = g.wavenumbers(0)[2];
        let f = ComplexField::from_fn(&g, |x| Complex64::from_polar(1.0, xi * x[0]));
        let d = gradient(&f);
        for (a, b) in d[0].values().iter().zip(f.values()) {
            assert!((a - I * xi * b).norm() < 1e-12);
        }
        assert!(d[1].max_abs() < 1e-12);
        let c = ComplexField::from_fn(&g, |_| Complex64::new(2.5, -1.0));
        for comp in gradient(&c) {
            assert!(comp.max_abs() < 1e-13);
        }
    }

    #[test]
    fn gaussian_kinetic_energy_is_one() {
        let g = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        let f = gaussian(&g);
        let via_grad: f64 = gradient(&f).iter().map(|d| d.mass()).sum();
        assert!((via_grad - 1.0).abs() < 1e-8);
        assert!((kinetic(&f) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadrature_examples() {
        let g = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        let one = RealField::from_fn(&g, |_| 1.0);
        assert!((integrate(&one) - 256.0).abs() < 1e-10);
        assert!((integrate(&gaussian(&g).density()) - 1.0).abs() < 1e-12);
        let odd = RealField::from_fn(&g, |x| x[0] * (-(x[0] * x[0] + x[1] * x[1])).exp());
        assert!(integrate(&odd).abs() < 1e-14);
    }

    #[test]
    fn unresolved_field_is_flagged() {
        let g = make_grid(2, &[4.0, 4.0], &[16, 16]).unwrap();
        let f = ComplexField::from_fn(&g, |x| Complex64::new((-(x[0] * x[0] + x[1] * x[1]) * 40.0).exp(), 0.0));
        let (_, res) = gradient_checked(&f, DEFAULT_TAIL_WARN);
        assert!(!res.resolved());
    }

    #[test]
    fn resampling_reproduces_smooth_function() {
        let g = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        let f = ComplexField::from_fn(&g, |x| Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1]) / 2.0).exp(), x[0] * (-(x[0] * x[0] + x[1] * x[1])).exp()));
        let s = 1.3;
        let t = make_grid(2, &[7.0, 7.0], &[32, 64]).unwrap();
        let (r, frac) = resample_stretched(&f, &t, &[s, s]).unwrap();
        assert!(frac < 1e-12);
        let exact = ComplexField::from_fn(&t, |y| {
            let x = [s * y[0], s * y[1]];
            Complex64::new((-(x[0] * x[0] + 2.0 * x[1] * x[1]) / 2.0).exp(), x[0] * (-(x[0] * x[0] + x[1] * x[1])).exp())
        });
        let err = r.sub(&exact).max_abs();
        assert!(err < 1e-10, "{err}");
        let pts = [[0.3, -1.1, 0.0], [2.0, 0.25, 0.0]];
        let vals = evaluate_at(&f, &pts);
        for (p, v) in pts.iter().zip(vals) {
            let e = Complex64::new((-(p[0] * p[0] + 2.0 * p[1] * p[1]) / 2.0).exp(), p[0] * (-(p[0] * p[0] + p[1] * p[1])).exp());
            assert!((v - e).norm() < 1e-10);
        }
    }
}
