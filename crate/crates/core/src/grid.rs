//! Uniform periodic grids and the sampled fields that live on them.
//!
//! Samples are stored per component in row-major point order: for a 3D grid
//! the flat index of point `(ix, iy, iz)` is `(ix * n + iy) * n + iz`, so the
//! last axis is contiguous. Component `c` occupies
//! `values[c * npoints .. (c + 1) * npoints]`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic box `[0, length)^dim` sampled with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dim must be 2 or 3, got {dim}")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n must be a power of two >= 8, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "length must be positive and finite, got {length}"
            )));
        }
        Ok(Grid { dim, n, length })
    }

    /// Grid on the standard `2π` torus.
    pub fn periodic(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, 2.0 * PI)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn npoints(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Measure of the torus, `length^dim`.
    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Volume of one grid cell, the quadrature weight of every sample.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Per-axis indices of a flat point index. Unused trailing axes are zero.
    #[inline]
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let (shift, mask) = (self.n.trailing_zeros(), self.n - 1);
        let mut out = [0usize; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = idx & mask;
            idx >>= shift;
        }
        out
    }

    #[inline]
    pub fn ravel(&self, ix: [usize; 3]) -> usize {
        let shift = self.n.trailing_zeros();
        let mut idx = 0;
        for &i in ix.iter().take(self.dim) {
            idx = (idx << shift) | i;
        }
        idx
    }

    /// Physical coordinates of a grid point.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let ix = self.unravel(idx);
        let h = self.spacing();
        [ix[0] as f64 * h, ix[1] as f64 * h, ix[2] as f64 * h]
    }

    /// Signed integer wavenumber of FFT index `j`; the Nyquist index maps to `-n/2`.
    #[inline]
    pub fn mode_index(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Angular wavenumber per unit integer mode, `2π / length`.
    pub fn base_wavenumber(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Physical wavenumbers `k_j` along one axis, including the Nyquist mode.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let k0 = self.base_wavenumber();
        (0..self.n)
            .map(|j| self.mode_index(j) as f64 * k0)
            .collect()
    }

    /// Wavenumbers used for odd-order derivatives: the Nyquist mode is zeroed so
    /// that odd derivatives of real fields stay real.
    pub fn odd_wavenumbers(&self) -> Vec<f64> {
        let mut k = self.wavenumbers();
        k[self.n / 2] = 0.0;
        k
    }

    /// Index of the mode `-k` for the mode at flat index `idx`.
    #[inline]
    pub fn mirror(&self, idx: usize) -> usize {
        let (shift, mask) = (self.n.trailing_zeros(), self.n - 1);
        let mut out = 0;
        for axis in 0..self.dim {
            let i = (idx >> (shift as usize * (self.dim - 1 - axis))) & mask;
            out = (out << shift) | (self.n - i) & mask;
        }
        out
    }
}

/// Real samples of a (possibly vector- or tensor-valued) field.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        assert!(components >= 1, "a field needs at least one component");
        Field {
            grid,
            components,
            values: vec![0.0; grid.npoints() * components],
        }
    }

    pub fn from_values(grid: Grid, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::Shape("a field needs at least one component".into()));
        }
        let expected = grid.npoints() * components;
        if values.len() != expected {
            return Err(Error::Shape(format!(
                "expected {expected} samples, got {}",
                values.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Field {
            grid,
            components,
            values,
        })
    }

    /// Samples the function `f(x) -> [component values]` at every grid point.
    pub fn from_fn(grid: Grid, components: usize, f: impl Fn([f64; 3]) -> Vec<f64>) -> Self {
        let np = grid.npoints();
        let mut field = Field::zeros(grid, components);
        for p in 0..np {
            let v = f(grid.coords(p));
            debug_assert_eq!(v.len(), components);
            for (c, x) in v.into_iter().enumerate() {
                field.values[c * np + p] = x;
            }
        }
        field
    }

    pub fn scalar_fn(grid: Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self::from_fn(grid, 1, |x| vec![f(x)])
    }

    /// Stacks single- or multi-component fields into one field.
    pub fn stack(parts: &[&Field]) -> Result<Field> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Shape("nothing to stack".into()))?;
        let grid = first.grid;
        let mut values = Vec::new();
        let mut components = 0;
        for p in parts {
            if p.grid != grid {
                return Err(Error::Shape(
                    "stacked fields live on different grids".into(),
                ));
            }
            components += p.components;
            values.extend_from_slice(&p.values);
        }
        Ok(Field {
            grid,
            components,
            values,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let np = self.grid.npoints();
        &self.values[c * np..(c + 1) * np]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [f64] {
        let np = self.grid.npoints();
        &mut self.values[c * np..(c + 1) * np]
    }

    /// Copy of component `c` as a scalar field.
    pub fn extract(&self, c: usize) -> Field {
        Field {
            grid: self.grid,
            components: 1,
            values: self.component(c).to_vec(),
        }
    }

    /// Pointwise Euclidean magnitude over components.
    pub fn magnitude(&self) -> Vec<f64> {
        let np = self.grid.npoints();
        let mut out = vec![0.0; np];
        for c in 0..self.components {
            for (o, v) in out.iter_mut().zip(self.component(c)) {
                *o += v * v;
            }
        }
        out.iter_mut().for_each(|o| *o = o.sqrt());
        out
    }

    pub fn scaled(&self, factor: f64) -> Field {
        Field {
            grid: self.grid,
            components: self.components,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Cyclic shift of the samples by `shift[axis]` points along each axis.
    pub fn shifted(&self, shift: [usize; 3]) -> Field {
        let g = self.grid;
        let np = g.npoints();
        let mut out = Field::zeros(g, self.components);
        for p in 0..np {
            let mut ix = g.unravel(p);
            for (axis, i) in ix.iter_mut().enumerate().take(g.dim()) {
                *i = (*i + shift[axis]) % g.n();
            }
            let q = g.ravel(ix);
            for c in 0..self.components {
                out.values[c * np + q] = self.values[c * np + p];
            }
        }
        out
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_same_shape(other)?;
        Ok(Field {
            grid: self.grid,
            components: self.components,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub(crate) fn check_same_shape(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return Err(Error::Shape(format!(
                "{} components on {:?} vs {} components on {:?}",
                self.components, self.grid, other.components, other.grid
            )));
        }
        Ok(())
    }
}

/// Fourier coefficients of a real field, normalized so that the `k = 0`
/// coefficient is the mean of the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid, components: usize) -> Self {
        SpectralField {
            grid,
            components,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.npoints() * components],
        }
    }

    pub fn from_coeffs(grid: Grid, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.npoints() * components || components == 0 {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                grid.npoints() * components,
                coeffs.len()
            )));
        }
        Ok(SpectralField {
            grid,
            components,
            coeffs,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let np = self.grid.npoints();
        &self.coeffs[c * np..(c + 1) * np]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let np = self.grid.npoints();
        &mut self.coeffs[c * np..(c + 1) * np]
    }

    pub fn extract(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid,
            components: 1,
            coeffs: self.component(c).to_vec(),
        }
    }

    /// Components `start..start + count` as a new spectral field.
    pub fn select(&self, start: usize, count: usize) -> SpectralField {
        let np = self.grid.npoints();
        SpectralField {
            grid: self.grid,
            components: count,
            coeffs: self.coeffs[start * np..(start + count) * np].to_vec(),
        }
    }

    /// Largest deviation from `F(-k) = conj(F(k))`, and the coefficient scale.
    pub fn hermitian_defect(&self) -> (f64, f64) {
        let g = self.grid;
        let np = g.npoints();
        let mut defect: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for c in 0..self.components {
            let comp = &self.coeffs[c * np..(c + 1) * np];
            for (idx, z) in comp.iter().enumerate() {
                scale = scale.max(z.norm());
                let m = g.mirror(idx);
                if m >= idx {
                    defect = defect.max((z - comp[m].conj()).norm());
                }
            }
        }
        (defect, scale)
    }

    /// `sum_k |F_k|^2` times the torus volume: the squared L² norm by Parseval.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.volume()
    }
}
