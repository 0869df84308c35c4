//! Forward and inverse multi-dimensional FFTs of real fields.
//!
//! Two real components are transformed with a single complex FFT by packing
//! them as `a + i b` and separating the spectra with the Hermitian symmetry of
//! each part.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid, SpectralField};

/// Relative Hermitian asymmetry above which `inverse` refuses its input.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;

type Plan = Arc<dyn Fft<f64>>;

fn plan(n: usize, direction: FftDirection) -> Plan {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Plan>>> = OnceLock::new();
    let forward = direction == FftDirection::Forward;
    let mut cache = PLANS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .expect("fft plan cache poisoned");
    cache
        .entry((n, forward))
        .or_insert_with(|| FftPlanner::new().plan_fft(n, direction))
        .clone()
}

/// Unnormalized in-place transform of one component along every axis.
fn transform_nd(grid: &Grid, data: &mut [Complex64], direction: FftDirection) {
    let n = grid.n();
    let np = grid.npoints();
    debug_assert_eq!(data.len(), np);
    let fft = plan(n, direction);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // Last axis is contiguous: every run of n samples is one line.
    fft.process_with_scratch(data, &mut scratch);

    // Other axes: gather a block of strided lines into a small contiguous
    // buffer, transform, scatter back.
    const BLOCK: usize = 32;
    let mut lines = vec![Complex64::new(0.0, 0.0); BLOCK * n];
    for axis in 0..grid.dim() - 1 {
        let stride = n.pow((grid.dim() - 1 - axis) as u32);
        let block = BLOCK.min(stride);
        let buf = &mut lines[..block * n];
        for base in (0..np).step_by(n * stride) {
            for start in (0..stride).step_by(block) {
                for j in 0..n {
                    let row = &data[base + j * stride + start..][..block];
                    for (b, z) in row.iter().enumerate() {
                        buf[b * n + j] = *z;
                    }
                }
                fft.process_with_scratch(buf, &mut scratch);
                for j in 0..n {
                    let row = &mut data[base + j * stride + start..][..block];
                    for (b, z) in row.iter_mut().enumerate() {
                        *z = buf[b * n + j];
                    }
                }
            }
        }
    }
}

/// Fourier coefficients of every component of `f`.
pub fn forward(f: &Field) -> SpectralField {
    let grid = *f.grid();
    let np = grid.npoints();
    let norm = 1.0 / np as f64;
    let mut out = SpectralField::zeros(grid, f.components());
    let mut buf = vec![Complex64::new(0.0, 0.0); np];
    let mut c = 0;
    while c < f.components() {
        if c + 1 < f.components() {
            let (a, b) = (f.component(c), f.component(c + 1));
            for ((z, &x), &y) in buf.iter_mut().zip(a).zip(b) {
                *z = Complex64::new(x, y);
            }
            transform_nd(&grid, &mut buf, FftDirection::Forward);
            let half = 0.5 * norm;
            let (lo, hi) = out.coeffs_mut().split_at_mut((c + 1) * np);
            let (ca, cb) = (&mut lo[c * np..], &mut hi[..np]);
            for idx in 0..np {
                let zk = buf[idx];
                let zm = buf[grid.mirror(idx)].conj();
                ca[idx] = (zk + zm) * half;
                // (zk - zm) / (2i)
                let d = (zk - zm) * half;
                cb[idx] = Complex64::new(d.im, -d.re);
            }
            c += 2;
        } else {
            for (z, &x) in buf.iter_mut().zip(f.component(c)) {
                *z = Complex64::new(x, 0.0);
            }
            transform_nd(&grid, &mut buf, FftDirection::Forward);
            for (o, z) in out.component_mut(c).iter_mut().zip(&buf) {
                *o = z * norm;
            }
            c += 1;
        }
    }
    out
}

/// Real field with the given Fourier coefficients.
///
/// Rejects spectra that are not Hermitian, since they do not describe a real
/// field and indicate a bug in whatever produced them.
pub fn inverse(spec: &SpectralField) -> Result<Field> {
    let (asymmetry, scale) = spec.hermitian_defect();
    if asymmetry > HERMITIAN_TOLERANCE * scale + f64::MIN_POSITIVE {
        return Err(Error::NotHermitian { asymmetry, scale });
    }
    Ok(inverse_unchecked(spec))
}

/// Inverse transform for spectra that are Hermitian by construction.
pub(crate) fn inverse_unchecked(spec: &SpectralField) -> Field {
    let grid = *spec.grid();
    let np = grid.npoints();
    let mut out = Field::zeros(grid, spec.components());
    let mut buf = vec![Complex64::new(0.0, 0.0); np];
    let mut c = 0;
    while c < spec.components() {
        if c + 1 < spec.components() {
            let i = Complex64::new(0.0, 1.0);
            for ((z, a), b) in buf
                .iter_mut()
                .zip(spec.component(c))
                .zip(spec.component(c + 1))
            {
                *z = a + i * b;
            }
            transform_nd(&grid, &mut buf, FftDirection::Inverse);
            for (o, z) in out.component_mut(c).iter_mut().zip(&buf) {
                *o = z.re;
            }
            for (o, z) in out.component_mut(c + 1).iter_mut().zip(&buf) {
                *o = z.im;
            }
            c += 2;
        } else {
            buf.copy_from_slice(spec.component(c));
            transform_nd(&grid, &mut buf, FftDirection::Inverse);
            for (o, z) in out.component_mut(c).iter_mut().zip(&buf) {
                *o = z.re;
            }
            c += 1;
        }
    }
    out
}
