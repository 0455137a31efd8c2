//! Scalar fields on the periodic torus `[-π, π]^d` and their Fourier transforms.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::{Real, SpectralReal};

/// Uniform collocation grid with `n` points per dimension on `[-π, π]^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!(
                "{n} points per dimension, need at least 2"
            )));
        }
        n.checked_pow(dim as u32)
            .ok_or_else(|| Error::InvalidGrid("point count overflows usize".into()))?;
        Ok(Self { dim, n })
    }

    /// Builds a grid from per-axis extents; anisotropic extents are rejected.
    pub fn from_extents(extents: &[usize]) -> Result<Self> {
        let Some(&n) = extents.first() else {
            return Err(Error::InvalidGrid("no extents".into()));
        };
        if extents.iter().any(|&e| e != n) {
            return Err(Error::InvalidGrid(format!(
                "anisotropic extents {extents:?}"
            )));
        }
        Self::new(extents.len(), n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    /// Total number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extents(&self) -> Vec<usize> {
        vec![self.n; self.dim]
    }

    /// Grid spacing `h = 2π / n`.
    pub fn spacing<T: Real>(&self) -> T {
        T::lit(2.0) * T::PI() / T::from_usize(self.n).unwrap()
    }

    /// Quadrature weight `h^dim`.
    pub fn cell_volume<T: Real>(&self) -> T {
        self.spacing::<T>().powi(self.dim as i32)
    }

    /// Physical coordinate of grid index `j` along any axis.
    pub fn coordinate<T: Real>(&self, j: usize) -> T {
        -T::PI() + T::from_usize(j).unwrap() * self.spacing::<T>()
    }

    /// Row-major multi-index of a flat index.
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        for slot in idx.iter_mut().rev() {
            *slot = flat % self.n;
            flat /= self.n;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + (i % self.n))
    }

    /// Signed wavenumber of FFT index `m`, in `{-⌊n/2⌋, …, ⌈n/2⌉-1}`.
    pub fn wavenumber(&self, m: usize) -> i64 {
        if m < self.n.div_ceil(2) {
            m as i64
        } else {
            m as i64 - self.n as i64
        }
    }

    /// Signed wavevector of a flat coefficient index.
    pub fn wavevector(&self, flat: usize) -> Vec<i64> {
        self.multi_index(flat)
            .into_iter()
            .map(|m| self.wavenumber(m))
            .collect()
    }

    /// `|k|²` for a flat coefficient index.
    pub fn wavevector_sq(&self, flat: usize) -> i64 {
        self.wavevector(flat).iter().map(|k| k * k).sum()
    }

    /// Flat coefficient index of a signed wavevector, if it lies in range.
    pub fn coefficient_index(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let lo = -((self.n / 2) as i64);
        let hi = (self.n.div_ceil(2)) as i64 - 1;
        let mut flat = 0;
        for &ka in k {
            if ka < lo || ka > hi {
                return None;
            }
            let m = if ka < 0 { ka + self.n as i64 } else { ka } as usize;
            flat = flat * self.n + m;
        }
        Some(flat)
    }
}

/// Real point values on a [`TorusGrid`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    grid: TorusGrid,
    values: Vec<T>,
}

/// Max norm, quadrature-weighted L² norm and arithmetic mean of a field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms<T> {
    pub linf: T,
    pub l2: T,
    pub mean: T,
}

impl<T: Real> Field<T> {
    pub fn new(grid: TorusGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn constant(grid: TorusGrid, c: T) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Samples `f` at every grid point; `f` receives the physical coordinates.
    pub fn from_fn(grid: TorusGrid, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let mut x = vec![T::zero(); grid.dim()];
        let values = (0..grid.len())
            .map(|flat| {
                for (xa, ia) in x.iter_mut().zip(grid.multi_index(flat)) {
                    *xa = grid.coordinate(ia);
                }
                f(&x)
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn norms(&self) -> Norms<T> {
        norms_and_mean(self)
    }
}

/// `linf = max |u|`, `l2 = sqrt(h^d Σ u²)`, `mean = Σ u / n^d`.
pub fn norms_and_mean<T: Real>(field: &Field<T>) -> Norms<T> {
    vector_norms(field.values(), field.grid().cell_volume())
}

pub(crate) fn vector_norms<T: Real>(values: &[T], cell_volume: T) -> Norms<T> {
    let linf = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let sq: T = values.iter().map(|&v| v * v).sum();
    let sum: T = values.iter().copied().sum();
    Norms {
        linf,
        l2: (cell_volume * sq).sqrt(),
        mean: sum / T::from_usize(values.len()).unwrap(),
    }
}

/// Fourier coefficients `ĉ(k) = n^{-d} Σ_j u(x_j) e^{-i k·x_j}`, stored in FFT index order.
///
/// With this normalization `u(x) = Σ_k ĉ(k) e^{i k·x}` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients<T> {
    grid: TorusGrid,
    coefficients: Vec<Complex<T>>,
}

impl<T: Real> SpectralCoefficients<T> {
    pub fn new(grid: TorusGrid, coefficients: Vec<Complex<T>>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} coefficients for a grid of {} points",
                coefficients.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    /// Coefficient at a signed wavevector; zero outside the resolved band.
    pub fn get(&self, k: &[i64]) -> Complex<T> {
        self.grid
            .coefficient_index(k)
            .map(|i| self.coefficients[i])
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// `(wavevector, coefficient)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (Vec<i64>, Complex<T>)> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| (self.grid.wavevector(i), c))
    }

    /// L² norm over the torus via Parseval, `(2π)^d Σ |ĉ|²`.
    pub fn l2_norm(&self) -> T {
        let volume = (T::lit(2.0) * T::PI()).powi(self.grid.dim() as i32);
        let sq: T = self.coefficients.iter().map(|c| c.norm_sqr()).sum();
        (volume * sq).sqrt()
    }
}

/// Cached FFT plans for one grid.
#[derive(Clone)]
pub struct Transform<T: SpectralReal> {
    grid: TorusGrid,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: SpectralReal> std::fmt::Debug for Transform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transform")
            .field("grid", &self.grid)
            .finish()
    }
}

impl<T: SpectralReal> Transform<T> {
    pub fn new(grid: TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.points_per_dim()),
            inverse: planner.plan_fft_inverse(grid.points_per_dim()),
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Unnormalized DFT over grid indices (no coordinate phase).
    pub fn forward_raw(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut data: Vec<Complex<T>> =
            values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        self.apply_axes(&mut data, &self.forward);
        data
    }

    /// Inverse of [`Self::forward_raw`], returning the real part.
    pub fn inverse_raw(&self, mut data: Vec<Complex<T>>) -> Vec<T> {
        self.apply_axes(&mut data, &self.inverse);
        let scale = T::one() / T::from_usize(self.grid.len()).unwrap();
        data.into_iter().map(|c| c.re * scale).collect()
    }

    fn apply_axes(&self, data: &mut [Complex<T>], fft: &Arc<dyn Fft<T>>) {
        let n = self.grid.points_per_dim();
        let dim = self.grid.dim();
        if dim == 1 {
            fft.process(data);
            return;
        }
        let mut line = vec![Complex::new(T::zero(), T::zero()); n];
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        for axis in 0..dim {
            let stride = n.pow((dim - 1 - axis) as u32);
            let outer = n.pow(axis as u32);
            for o in 0..outer {
                for i in 0..stride {
                    let base = o * n * stride + i;
                    for (m, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + m * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (m, v) in line.iter().enumerate() {
                        data[base + m * stride] = *v;
                    }
                }
            }
        }
    }

    /// `|k|²` per flat coefficient index.
    pub fn wavevector_sq(&self) -> Vec<T> {
        (0..self.grid.len())
            .map(|i| T::from_i64(self.grid.wavevector_sq(i)).unwrap())
            .collect()
    }

    /// 2/3-rule mask: `true` where every `|k_a| ≤ n/3`.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let cutoff = self.grid.points_per_dim() as i64 / 3;
        (0..self.grid.len())
            .map(|i| self.grid.wavevector(i).iter().all(|k| k.abs() <= cutoff))
            .collect()
    }

    fn phase(&self, flat: usize) -> T {
        // x_j = -π + j h, so e^{-i k x_j} = (-1)^{Σk} e^{-i k j h}.
        let parity: i64 = self.grid.wavevector(flat).iter().sum();
        if parity.rem_euclid(2) == 0 {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn transform(&self, field: &Field<T>) -> SpectralCoefficients<T> {
        let scale = T::one() / T::from_usize(self.grid.len()).unwrap();
        let coefficients = self
            .forward_raw(field.values())
            .into_iter()
            .enumerate()
            .map(|(i, c)| c * (scale * self.phase(i)))
            .collect();
        SpectralCoefficients {
            grid: self.grid,
            coefficients,
        }
    }

    pub fn inverse_transform(&self, coeffs: &SpectralCoefficients<T>) -> Result<Field<T>> {
        let total = T::from_usize(self.grid.len()).unwrap();
        let raw = coeffs
            .coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (total * self.phase(i)))
            .collect();
        Field::new(self.grid, self.inverse_raw(raw))
    }

    /// Applies the multiplier `-|k|²`.
    pub fn laplacian(&self, values: &[T]) -> Vec<T> {
        let mut hat = self.forward_raw(values);
        for (c, k2) in hat.iter_mut().zip(self.wavevector_sq()) {
            *c = *c * (-k2);
        }
        self.inverse_raw(hat)
    }
}

pub fn transform<T: SpectralReal>(field: &Field<T>) -> SpectralCoefficients<T> {
    Transform::new(*field.grid()).transform(field)
}

pub fn inverse_transform<T: SpectralReal>(coeffs: &SpectralCoefficients<T>) -> Result<Field<T>> {
    Transform::new(*coeffs.grid()).inverse_transform(coeffs)
}

/// Spectral Laplacian; the `k = 0` coefficient of the output is exactly zero.
pub fn spectral_laplacian<T: SpectralReal>(field: &Field<T>) -> Field<T> {
    let values = Transform::new(*field.grid()).laplacian(field.values());
    Field {
        grid: *field.grid(),
        values,
    }
}
