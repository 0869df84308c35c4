//! Exact spectral differential operators, Leray projection and dealiasing.
//!
//! Tensor-valued results use the layout `out[c * dim + i] = ∂_i f_c`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{forward, inverse_unchecked};
use crate::grid::{Field, Grid, SpectralField};

/// Calls `f(flat_index, [j0, j1, j2])` for every mode of the grid.
#[inline]
pub(crate) fn for_each_mode(grid: &Grid, mut f: impl FnMut(usize, [usize; 3])) {
    let n = grid.n();
    let mut idx = 0;
    if grid.dim() == 2 {
        for j0 in 0..n {
            for j1 in 0..n {
                f(idx, [j0, j1, 0]);
                idx += 1;
            }
        }
    } else {
        for j0 in 0..n {
            for j1 in 0..n {
                for j2 in 0..n {
                    f(idx, [j0, j1, j2]);
                    idx += 1;
                }
            }
        }
    }
}

/// `(i k)^order` for every FFT index along one axis.
fn derivative_symbol(grid: &Grid, order: u32) -> Vec<Complex64> {
    let k = if order % 2 == 1 {
        grid.odd_wavenumbers()
    } else {
        grid.wavenumbers()
    };
    let i_pow = Complex64::new(0.0, 1.0).powu(order);
    k.iter().map(|&kj| i_pow * kj.powi(order as i32)).collect()
}

/// `∂_axis^order` of every component.
pub fn derivative(spec: &SpectralField, axis: usize, order: u32) -> SpectralField {
    let grid = *spec.grid();
    assert!(axis < grid.dim(), "axis {axis} out of range");
    let symbol = derivative_symbol(&grid, order);
    let mut out = spec.clone();
    for c in 0..spec.components() {
        let comp = out.component_mut(c);
        for_each_mode(&grid, |idx, j| comp[idx] *= symbol[j[axis]]);
    }
    out
}

/// Applies `∂^alpha` (a multi-index of per-axis orders) to every component.
pub fn mixed_derivative(spec: &SpectralField, alpha: [u32; 3]) -> SpectralField {
    let grid = *spec.grid();
    let symbols: Vec<Vec<Complex64>> = (0..grid.dim())
        .map(|a| derivative_symbol(&grid, alpha[a]))
        .collect();
    let mut out = spec.clone();
    for c in 0..spec.components() {
        let comp = out.component_mut(c);
        for_each_mode(&grid, |idx, j| {
            let mut m = Complex64::new(1.0, 0.0);
            for (a, s) in symbols.iter().enumerate() {
                m *= s[j[a]];
            }
            comp[idx] *= m;
        });
    }
    out
}

/// Spectral gradient: `dim` components per input component.
pub fn gradient_spectral(spec: &SpectralField) -> SpectralField {
    let grid = *spec.grid();
    let dim = grid.dim();
    let np = grid.npoints();
    let k = grid.odd_wavenumbers();
    let mut out = SpectralField::zeros(grid, spec.components() * dim);
    for c in 0..spec.components() {
        let src = spec.component(c);
        for i in 0..dim {
            let dst = &mut out.coeffs_mut()[(c * dim + i) * np..(c * dim + i + 1) * np];
            for_each_mode(&grid, |idx, j| {
                dst[idx] = Complex64::new(0.0, k[j[i]]) * src[idx];
            });
        }
    }
    out
}

pub fn laplacian_spectral(spec: &SpectralField) -> SpectralField {
    let grid = *spec.grid();
    let k = grid.wavenumbers();
    let mut out = spec.clone();
    for c in 0..spec.components() {
        let comp = out.component_mut(c);
        for_each_mode(&grid, |idx, j| {
            let k2: f64 = (0..grid.dim()).map(|a| k[j[a]] * k[j[a]]).sum();
            comp[idx] *= -k2;
        });
    }
    out
}

pub fn divergence_spectral(spec: &SpectralField) -> Result<SpectralField> {
    let grid = *spec.grid();
    let dim = grid.dim();
    if spec.components() != dim {
        return Err(Error::Shape(format!(
            "divergence needs {dim} components, got {}",
            spec.components()
        )));
    }
    let k = grid.odd_wavenumbers();
    let mut out = SpectralField::zeros(grid, 1);
    let dst = out.coeffs_mut();
    for i in 0..dim {
        let src = spec.component(i);
        for_each_mode(&grid, |idx, j| {
            dst[idx] += Complex64::new(0.0, k[j[i]]) * src[idx];
        });
    }
    Ok(out)
}

/// Curl of a 3-vector in 3D, or the scalar curl `∂_x v_y - ∂_y v_x` in 2D.
pub fn curl_spectral(spec: &SpectralField) -> Result<SpectralField> {
    let grid = *spec.grid();
    let dim = grid.dim();
    if spec.components() != dim {
        return Err(Error::Shape(format!(
            "curl on a {dim}D grid needs {dim} components, got {}",
            spec.components()
        )));
    }
    let k = grid.odd_wavenumbers();
    let i = Complex64::new(0.0, 1.0);
    if dim == 2 {
        let mut out = SpectralField::zeros(grid, 1);
        let (vx, vy) = (spec.component(0), spec.component(1));
        let dst = out.coeffs_mut();
        for_each_mode(&grid, |idx, j| {
            dst[idx] = i * (k[j[0]] * vy[idx] - k[j[1]] * vx[idx]);
        });
        return Ok(out);
    }
    let mut out = SpectralField::zeros(grid, 3);
    let np = grid.npoints();
    let (vx, vy, vz) = (spec.component(0), spec.component(1), spec.component(2));
    let (w0, rest) = out.coeffs_mut().split_at_mut(np);
    let (w1, w2) = rest.split_at_mut(np);
    for_each_mode(&grid, |idx, j| {
        let (kx, ky, kz) = (k[j[0]], k[j[1]], k[j[2]]);
        w0[idx] = i * (ky * vz[idx] - kz * vy[idx]);
        w1[idx] = i * (kz * vx[idx] - kx * vz[idx]);
        w2[idx] = i * (kx * vy[idx] - ky * vx[idx]);
    });
    Ok(out)
}

pub fn gradient(f: &Field) -> Field {
    inverse_unchecked(&gradient_spectral(&forward(f)))
}

pub fn laplacian(f: &Field) -> Field {
    inverse_unchecked(&laplacian_spectral(&forward(f)))
}

pub fn divergence(v: &Field) -> Result<Field> {
    Ok(inverse_unchecked(&divergence_spectral(&forward(v))?))
}

pub fn curl(v: &Field) -> Result<Field> {
    Ok(inverse_unchecked(&curl_spectral(&forward(v))?))
}

/// Projects a vector field onto its divergence-free part, `(I - k kᵀ/|k|²) V̂`.
///
/// The mean mode is left unchanged. The projector uses the same wavenumbers
/// as the spectral divergence, so the result is divergence-free mode by mode.
pub fn leray_project(spec: &SpectralField) -> Result<SpectralField> {
    let grid = *spec.grid();
    let dim = grid.dim();
    if spec.components() != dim {
        return Err(Error::Shape(format!(
            "Leray projection needs {dim} components, got {}",
            spec.components()
        )));
    }
    let k = grid.odd_wavenumbers();
    let np = grid.npoints();
    let mut out = spec.clone();
    let coeffs = out.coeffs_mut();
    for_each_mode(&grid, |idx, j| {
        let kv = [k[j[0]], k[j[1]], if dim == 3 { k[j[2]] } else { 0.0 }];
        let k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
        if k2 == 0.0 {
            return;
        }
        let mut kdotv = Complex64::new(0.0, 0.0);
        for a in 0..dim {
            kdotv += coeffs[a * np + idx] * kv[a];
        }
        let s = kdotv / k2;
        for a in 0..dim {
            coeffs[a * np + idx] -= s * kv[a];
        }
    });
    Ok(out)
}

/// Largest integer mode kept by the 2/3 rule.
pub fn dealias_cutoff(grid: &Grid) -> i64 {
    // |m| <= n/3
    (grid.n() / 3) as i64
}

/// Zeroes every mode with some `|k_axis| > n/3`.
pub fn dealias_in_place(spec: &mut SpectralField) {
    let grid = *spec.grid();
    let cut = dealias_cutoff(&grid);
    let keep: Vec<bool> = (0..grid.n())
        .map(|j| grid.mode_index(j).abs() <= cut)
        .collect();
    let dim = grid.dim();
    for c in 0..spec.components() {
        let comp = spec.component_mut(c);
        for_each_mode(&grid, |idx, j| {
            if !(0..dim).all(|a| keep[j[a]]) {
                comp[idx] = Complex64::new(0.0, 0.0);
            }
        });
    }
}

pub fn dealias(spec: &SpectralField) -> SpectralField {
    let mut out = spec.clone();
    dealias_in_place(&mut out);
    out
}

/// `‖∇^order f‖²_{L²}` by Parseval, with the same per-axis symbols as
/// [`mixed_derivative`] so it agrees with the physical-space tensor norm.
pub fn homogeneous_energy(spec: &SpectralField, order: u32) -> f64 {
    let grid = *spec.grid();
    let k = if order % 2 == 1 {
        grid.odd_wavenumbers()
    } else {
        grid.wavenumbers()
    };
    let mut total = 0.0;
    for c in 0..spec.components() {
        let comp = spec.component(c);
        for_each_mode(&grid, |idx, j| {
            let k2: f64 = (0..grid.dim()).map(|a| k[j[a]] * k[j[a]]).sum();
            total += k2.powi(order as i32) * comp[idx].norm_sqr();
        });
    }
    total * grid.volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fft::inverse;

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = Grid::periodic(3, 8).unwrap();
        let f = Field::scalar_fn(g, |_| 4.0);
        let d = inverse(&derivative(&forward(&f), 0, 1)).unwrap();
        assert!(d.max_abs() < 1e-14);
    }

    #[test]
    fn derivatives_of_sine_are_exact() {
        for n in [8, 16, 32] {
            let g = Grid::periodic(2, n).unwrap();
            let f = Field::scalar_fn(g, |x| x[0].sin());
            let s = forward(&f);
            let d1 = inverse(&derivative(&s, 0, 1)).unwrap();
            let d2 = inverse(&derivative(&s, 0, 2)).unwrap();
            let cos = Field::scalar_fn(g, |x| x[0].cos());
            assert!(max_diff(&d1, &cos) < 1e-13);
            assert!(max_diff(&d2, &f.scaled(-1.0)) < 1e-13);
        }
    }

    #[test]
    fn curl_of_shear_flow() {
        let g = Grid::periodic(3, 16).unwrap();
        let v = Field::from_fn(g, 3, |x| vec![x[1].sin(), 0.0, 0.0]);
        let w = curl(&v).unwrap();
        let expected = Field::from_fn(g, 3, |x| vec![0.0, 0.0, -x[1].cos()]);
        assert!(max_diff(&w, &expected) < 1e-13);
    }

    #[test]
    fn curl_rejects_wrong_component_count() {
        let g = Grid::periodic(3, 8).unwrap();
        let v = Field::zeros(g, 2);
        assert!(matches!(curl(&v), Err(Error::Shape(_))));
        assert!(matches!(divergence(&v), Err(Error::Shape(_))));
    }

    #[test]
    fn leray_single_mode_matches_hand_projection() {
        // v = (sin x, 0, 0) is a pure gradient of -cos x: it projects to zero.
        let g = Grid::periodic(3, 8).unwrap();
        let v = Field::from_fn(g, 3, |x| vec![x[0].sin(), 0.0, 0.0]);
        let p = inverse(&leray_project(&forward(&v)).unwrap()).unwrap();
        assert!(p.max_abs() < 1e-15);

        // v = (sin(x+y), 0, 0): k = (1,1,0), P v̂ = v̂ - (k·v̂/2) k.
        let v = Field::from_fn(g, 3, |x| vec![(x[0] + x[1]).sin(), 0.0, 0.0]);
        let p = inverse(&leray_project(&forward(&v)).unwrap()).unwrap();
        let expected = Field::from_fn(g, 3, |x| {
            let s = (x[0] + x[1]).sin();
            vec![0.5 * s, -0.5 * s, 0.0]
        });
        assert!(max_diff(&p, &expected) < 1e-14);
    }

    #[test]
    fn dealias_masks_high_modes() {
        let g = Grid::periodic(2, 16).unwrap(); // cutoff 5
        let low = Field::scalar_fn(g, |x| (5.0 * x[0]).cos() + x[1].sin());
        let high = Field::scalar_fn(g, |x| (6.0 * x[1]).sin());
        let s_low = forward(&low);
        let change = dealias(&s_low)
            .coeffs()
            .iter()
            .zip(s_low.coeffs())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(change < 1e-15);
        let zeroed = crate::fft::inverse_unchecked(&dealias(&forward(&high)));
        assert!(zeroed.max_abs() < 1e-14);
        let mixed = forward(&Field::scalar_fn(g, |x| {
            (5.0 * x[0]).cos() + x[1].sin() + (6.0 * x[1]).sin() * (2.0 * x[0]).cos()
        }));
        let kept = inverse(&dealias(&mixed)).unwrap();
        assert!(max_diff(&kept, &low) < 1e-14);
    }
}
