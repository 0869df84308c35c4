//! Discrete Lebesgue, Sobolev and BMO norms on the periodic grid.
//!
//! Integrals use the uniform periodic quadrature `sum f(x) h^dim`, which is
//! spectrally accurate for smooth periodic fields. Vector and tensor fields
//! are measured through their pointwise Euclidean (Frobenius) magnitude.

use crate::error::{Error, Result};
use crate::fft::{forward, inverse_unchecked};
use crate::grid::{Field, Grid, SpectralField};
use crate::ops::mixed_derivative;

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!(
            "Lebesgue exponent must be >= 1, got {p}"
        )));
    }
    Ok(())
}

/// `(sum |m(x)|^p h^dim)^(1/p)` for pointwise magnitudes `m`, or `max |m|` when `p = ∞`.
pub fn lp_of_magnitude(grid: &Grid, magnitude: &[f64], p: f64) -> Result<f64> {
    check_exponent(p)?;
    if p.is_infinite() {
        return Ok(magnitude.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let w = grid.cell_volume();
    let sum: f64 = if p == 2.0 {
        magnitude.iter().map(|v| v * v).sum()
    } else {
        magnitude.iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok((sum * w).powf(1.0 / p))
}

pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    lp_of_magnitude(f.grid(), &f.magnitude(), p)
}

/// All multi-indices `alpha` with `|alpha| = order` on a `dim`-dimensional grid,
/// with the multinomial multiplicity `order! / alpha!`.
pub(crate) fn multi_indices(dim: usize, order: u32) -> Vec<([u32; 3], f64)> {
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let mut out = Vec::new();
    for a0 in 0..=order {
        if dim == 2 {
            let a1 = order - a0;
            out.push(([a0, a1, 0], fact(order) / (fact(a0) * fact(a1))));
            continue;
        }
        for a1 in 0..=order - a0 {
            let a2 = order - a0 - a1;
            out.push(([a0, a1, a2], fact(order) / (fact(a0) * fact(a1) * fact(a2))));
        }
    }
    out
}

/// Pointwise Frobenius magnitude of the full tensor `∇^order f`.
///
/// Each distinct multi-index is evaluated once and weighted by how many
/// ordered index tuples it represents.
pub fn derivative_magnitude(spec: &SpectralField, order: u32) -> Vec<f64> {
    let grid = *spec.grid();
    let np = grid.npoints();
    if order == 0 {
        return inverse_unchecked(spec).magnitude();
    }
    let mut sq = vec![0.0; np];
    for (alpha, weight) in multi_indices(grid.dim(), order) {
        let d = inverse_unchecked(&mixed_derivative(spec, alpha));
        for c in 0..d.components() {
            for (s, v) in sq.iter_mut().zip(d.component(c)) {
                *s += weight * v * v;
            }
        }
    }
    sq.iter_mut().for_each(|s| *s = s.sqrt());
    sq
}

/// `‖∇^order f‖_{L^p}`.
pub fn homogeneous_norm(f: &Field, order: u32, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let spec = forward(f);
    lp_of_magnitude(f.grid(), &derivative_magnitude(&spec, order), p)
}

/// `‖f‖_{W^{m,p}} = (sum_{j<=m} ‖∇^j f‖_p^p)^(1/p)`, the maximum over `j` when `p = ∞`.
pub fn sobolev_norm(f: &Field, m: u32, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let spec = forward(f);
    let mut acc: f64 = 0.0;
    for j in 0..=m {
        let norm = lp_of_magnitude(f.grid(), &derivative_magnitude(&spec, j), p)?;
        if p.is_infinite() {
            acc = acc.max(norm);
        } else {
            acc += norm.powf(p);
        }
    }
    Ok(if p.is_infinite() {
        acc
    } else {
        acc.powf(1.0 / p)
    })
}

/// `‖∇f‖_{L^p}` over the full gradient tensor.
pub fn grad_lp(f: &Field, p: f64) -> Result<f64> {
    homogeneous_norm(f, 1, p)
}

/// One cube size in a [`CubeFamily`], in grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CubeScale {
    pub side: usize,
    pub stride: usize,
}

/// Set of axis-aligned on-grid cubes over which mean oscillation is maximized.
///
/// The default family uses sides `2^j` points (`j >= 1`, up to the full box)
/// placed at offsets strided by half the side, with periodic wrap-around so
/// that every scale covers the torus.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeFamily {
    grid: Grid,
    scales: Vec<CubeScale>,
}

impl CubeFamily {
    pub fn dyadic(grid: Grid) -> Self {
        let mut scales = Vec::new();
        let mut side = 2;
        while side <= grid.n() {
            scales.push(CubeScale {
                side,
                stride: side / 2,
            });
            side *= 2;
        }
        CubeFamily { grid, scales }
    }

    pub fn from_scales(grid: Grid, scales: Vec<CubeScale>) -> Result<Self> {
        for s in &scales {
            if s.side == 0 || s.side > grid.n() || s.stride == 0 {
                return Err(Error::InvalidArgument(format!("bad cube scale {s:?}")));
            }
        }
        Ok(CubeFamily { grid, scales })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn scales(&self) -> &[CubeScale] {
        &self.scales
    }

    /// Side lengths in physical units.
    pub fn side_lengths(&self) -> Vec<f64> {
        self.scales
            .iter()
            .map(|s| s.side as f64 * self.grid.spacing())
            .collect()
    }

    pub fn cube_count(&self) -> usize {
        let dim = self.grid.dim() as u32;
        self.scales
            .iter()
            .map(|s| self.grid.n().div_ceil(s.stride).pow(dim))
            .sum()
    }
}

/// Mean oscillation `(1/|Q|) sum_Q |f - f_Q|` of one cube with wrapped per-axis
/// point lists. `mean` is scratch space of length `components`.
fn cube_oscillation(f: &Field, axes: &[Vec<usize>], mean: &mut [f64]) -> f64 {
    let grid = f.grid();
    let np = grid.npoints();
    let n = grid.n();
    let comps = f.components();
    let vals = f.values();
    let count = axes.iter().map(Vec::len).product::<usize>() as f64;

    let visit = |g: &mut dyn FnMut(usize)| {
        if grid.dim() == 2 {
            for &i in &axes[0] {
                for &j in &axes[1] {
                    g(i * n + j);
                }
            }
        } else {
            for &i in &axes[0] {
                for &j in &axes[1] {
                    let row = (i * n + j) * n;
                    for &k in &axes[2] {
                        g(row + k);
                    }
                }
            }
        }
    };

    mean.iter_mut().for_each(|m| *m = 0.0);
    visit(&mut |p| {
        for (c, m) in mean.iter_mut().enumerate() {
            *m += vals[c * np + p];
        }
    });
    mean.iter_mut().for_each(|m| *m /= count);

    let mut osc = 0.0;
    if comps == 1 {
        let m0 = mean[0];
        visit(&mut |p| osc += (vals[p] - m0).abs());
    } else {
        visit(&mut |p| {
            let mut s = 0.0;
            for (c, m) in mean.iter().enumerate() {
                let d = vals[c * np + p] - m;
                s += d * d;
            }
            osc += s.sqrt();
        });
    }
    osc / count
}

/// `sup_Q (1/|Q|) ∫_Q |f - f_Q|` over the cubes of `cubes`.
///
/// Vector fields use the pointwise Euclidean distance to the vector mean, so
/// `bmo_norm(f) <= 2 ‖f‖_∞` holds exactly.
pub fn bmo_norm(f: &Field, cubes: &CubeFamily) -> Result<f64> {
    if cubes.scales.is_empty() {
        return Err(Error::InvalidArgument("empty cube family".into()));
    }
    if cubes.grid != *f.grid() {
        return Err(Error::Shape(
            "cube family built for a different grid".into(),
        ));
    }
    let grid = f.grid();
    let n = grid.n();
    let dim = grid.dim();
    let mut mean = vec![0.0; f.components()];
    let mut best: f64 = 0.0;
    for scale in &cubes.scales {
        let starts: Vec<usize> = (0..n).step_by(scale.stride).collect();
        let wrapped = |s: usize| (s..s + scale.side).map(|i| i % n).collect::<Vec<_>>();
        let lists: Vec<Vec<usize>> = starts.iter().map(|&s| wrapped(s)).collect();
        let m = starts.len();
        let total = m.pow(dim as u32);
        let mut axes: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for cube in 0..total {
            let mut rest = cube;
            for axis in (0..dim).rev() {
                axes[axis].clone_from(&lists[rest % m]);
                rest /= m;
            }
            best = best.max(cube_oscillation(f, &axes, &mut mean));
        }
    }
    Ok(best)
}
