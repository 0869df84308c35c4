//! Named initial conditions and random band-limited fields.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex64;

use crate::dynamics::{renormalize_director, State};
use crate::error::{Error, Result};
use crate::fft::inverse_unchecked;
use crate::grid::{Field, Grid, SpectralField};
use crate::ops::leray_project;

/// Parameters of a named initial condition.
pub type Params = BTreeMap<String, f64>;

/// Every name accepted by [`make_initial`].
pub const INITIAL_NAMES: [&str; 5] = [
    "taylor_green",
    "constant",
    "helical",
    "random_smooth",
    "near_singular",
];

/// Spectral envelope of random fields: integer modes `m` with
/// `max_a |m_a| <= kmax`, amplitude `(1 + |m|²)^(-decay/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    pub kmax: u32,
    pub decay: f64,
}

impl Default for Spectrum {
    fn default() -> Self {
        Spectrum {
            kmax: 3,
            decay: 2.0,
        }
    }
}

/// ChaCha8 generator for sample `stream` of a seeded family.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Representatives of {m, -m} pairs, first nonzero entry positive.
fn half_lattice(dim: usize, kmax: i64) -> Vec<[i64; 3]> {
    let range = |on: bool| if on { -kmax..=kmax } else { 0..=0 };
    let mut out = Vec::new();
    for a in -kmax..=kmax {
        for b in range(dim >= 2) {
            for c in range(dim == 3) {
                let m = [a, b, c];
                if m.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0) {
                    out.push(m);
                }
            }
        }
    }
    out
}

/// Random real trigonometric polynomial with unit root-mean-square magnitude.
///
/// Coefficients are drawn in a fixed mode order that does not involve `n`, so
/// the same generator state gives the same function on every grid fine enough
/// to hold it (`kmax <= n / 3`).
pub fn random_band_limited(
    grid: Grid,
    components: usize,
    spectrum: &Spectrum,
    rng: &mut impl Rng,
) -> Result<SpectralField> {
    let kmax = spectrum.kmax as i64;
    if kmax == 0 || kmax > grid.n() as i64 / 3 {
        return Err(Error::InvalidArgument(format!(
            "kmax {kmax} must lie in 1..={} on n = {}",
            grid.n() / 3,
            grid.n()
        )));
    }
    if !spectrum.decay.is_finite() {
        return Err(Error::InvalidArgument(
            "spectral decay must be finite".into(),
        ));
    }
    let n = grid.n() as i64;
    let slot = |m: [i64; 3]| {
        let w = |v: i64| v.rem_euclid(n) as usize;
        grid.ravel([w(m[0]), w(m[1]), w(m[2])])
    };
    let modes = half_lattice(grid.dim(), kmax);
    let mut spec = SpectralField::zeros(grid, components);
    for c in 0..components {
        let comp = spec.component_mut(c);
        for &m in &modes {
            let m2 = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64;
            let amp = (1.0 + m2).powf(-0.5 * spectrum.decay);
            let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * amp;
            comp[slot(m)] = z;
            comp[slot([-m[0], -m[1], -m[2]])] = z.conj();
        }
    }
    let rms = (spec.l2_norm_sq() / grid.volume()).sqrt();
    if rms > 0.0 {
        for z in spec.coeffs_mut() {
            *z /= rms;
        }
    }
    Ok(spec)
}

/// `d = (e_z + amplitude p) / |e_z + amplitude p|` with `p` a random field of
/// unit root-mean-square magnitude.
pub fn random_unit_director(
    grid: Grid,
    spectrum: &Spectrum,
    amplitude: f64,
    rng: &mut impl Rng,
) -> Result<Field> {
    let mut d = inverse_unchecked(&random_band_limited(grid, 3, spectrum, rng)?).scaled(amplitude);
    for v in d.component_mut(2) {
        *v += 1.0;
    }
    let shortest = d.magnitude().into_iter().fold(f64::INFINITY, f64::min);
    if shortest < 0.05 {
        return Err(Error::InvalidArgument(format!(
            "director perturbation of size {amplitude} nearly cancels the mean direction"
        )));
    }
    renormalize_director(&d)
}

struct ParamReader<'a> {
    name: &'a str,
    params: &'a Params,
    known: &'a [&'a str],
}

impl ParamReader<'_> {
    fn get(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.params.get(key).copied().unwrap_or(default);
        if !v.is_finite() {
            return Err(self.err(key, "must be finite"));
        }
        Ok(v)
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.get(key, default)?;
        if v <= 0.0 {
            return Err(self.err(key, "must be positive"));
        }
        Ok(v)
    }

    fn err(&self, key: &str, msg: &str) -> Error {
        Error::config(
            &format!("initial.params.{key}"),
            format!("{msg} for {}", self.name),
        )
    }

    fn check_unknown(&self) -> Result<()> {
        match self
            .params
            .keys()
            .find(|k| !self.known.contains(&k.as_str()))
        {
            Some(k) => Err(self.err(k, "unknown parameter")),
            None => Ok(()),
        }
    }
}

/// Builds the named initial state at `t = 0`.
///
/// `seed` only affects `random_smooth`.
pub fn make_initial(name: &str, params: &Params, seed: u64, grid: Grid) -> Result<State> {
    let known: &[&str] = match name {
        "taylor_green" => &["amplitude"],
        "constant" => &["dx", "dy", "dz", "ux", "uy", "uz"],
        "helical" => &["mode"],
        "random_smooth" => &["u_amplitude", "d_amplitude", "kmax", "decay"],
        "near_singular" => &["delta"],
        _ => {
            return Err(Error::config(
                "initial.name",
                format!("unknown initial condition {name:?}; expected one of {INITIAL_NAMES:?}"),
            ))
        }
    };
    let p = ParamReader {
        name,
        params,
        known,
    };
    p.check_unknown()?;
    let dim = grid.dim();
    let k0 = grid.base_wavenumber();
    let ez = Field::from_fn(grid, 3, |_| vec![0.0, 0.0, 1.0]);
    let state = match name {
        "taylor_green" => {
            let a = p.get("amplitude", 1.0)?;
            let u = Field::from_fn(grid, dim, |x| {
                let (s0, c0) = (k0 * x[0]).sin_cos();
                let (s1, c1) = (k0 * x[1]).sin_cos();
                let mut v = vec![a * s0 * c1, -a * c0 * s1];
                if dim == 3 {
                    let cz = (k0 * x[2]).cos();
                    v = vec![v[0] * cz, v[1] * cz, 0.0];
                }
                v
            });
            State::new(0.0, u, ez)?
        }
        "constant" => {
            let dir = [p.get("dx", 0.0)?, p.get("dy", 0.0)?, p.get("dz", 1.0)?];
            let len = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len == 0.0 {
                return Err(p.err("dz", "director must be nonzero"));
            }
            let vel = [p.get("ux", 0.0)?, p.get("uy", 0.0)?, p.get("uz", 0.0)?];
            if dim == 2 && vel[2] != 0.0 {
                return Err(p.err("uz", "must be zero in 2D"));
            }
            let u = Field::from_fn(grid, dim, |_| vel[..dim].to_vec());
            let d = Field::from_fn(grid, 3, |_| dir.iter().map(|v| v / len).collect());
            State::new(0.0, u, d)?
        }
        "helical" => {
            let m = p.get("mode", 1.0)?;
            if m < 1.0 || m.fract() != 0.0 || m >= grid.n() as f64 / 2.0 {
                return Err(p.err("mode", "must be an integer in 1..n/2"));
            }
            let k = m * k0;
            let u = Field::zeros(grid, dim);
            let d = Field::from_fn(grid, 3, |x| vec![(k * x[0]).cos(), (k * x[0]).sin(), 0.0]);
            State::new(0.0, u, d)?
        }
        "random_smooth" => {
            let ua = p.get("u_amplitude", 0.5)?;
            if ua < 0.0 {
                return Err(p.err("u_amplitude", "must be non-negative"));
            }
            let da = p.get("d_amplitude", 0.3)?;
            if !(0.0..1.0).contains(&da) {
                return Err(p.err("d_amplitude", "must lie in [0, 1)"));
            }
            let kmax = p.positive("kmax", 3.0)?;
            if kmax.fract() != 0.0 {
                return Err(p.err("kmax", "must be an integer"));
            }
            let spectrum = Spectrum {
                kmax: kmax as u32,
                decay: p.get("decay", 2.0)?,
            };
            let mut rng = stream_rng(seed, 0);
            let u_hat = leray_project(&random_band_limited(grid, dim, &spectrum, &mut rng)?)?;
            let u = inverse_unchecked(&u_hat);
            // Rescale after projection so the amplitude is the actual RMS speed.
            let rms =
                (u.values().iter().map(|v| v * v).sum::<f64>() / grid.npoints() as f64).sqrt();
            let u = if rms > 0.0 { u.scaled(ua / rms) } else { u };
            let d = random_unit_director(grid, &spectrum, da, &mut rng)
                .map_err(|e| p.err("d_amplitude", &e.to_string()))?;
            State::new(0.0, u, d)?
        }
        "near_singular" => {
            let delta = p.positive("delta", 0.3)?;
            if delta > 0.1 * grid.length() {
                return Err(p.err("delta", "must not exceed a tenth of the box length"));
            }
            State::new(
                0.0,
                Field::zeros(grid, dim),
                near_singular_director(grid, delta)?,
            )?
        }
        _ => unreachable!(),
    };
    state.check_constraints()?;
    Ok(state)
}

// exp(-1/t) glued to a smooth 1 -> 0 step on [0, 1].
fn smooth_step(t: f64) -> f64 {
    let psi = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let a = psi(1.0 - t);
    let b = psi(t);
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

/// A stereographic bubble of width `delta` centred in the box, glued smoothly
/// to the constant state `-e_z` away from the centre. In 3D the width varies
/// periodically along `z` between `delta` and `3 delta`.
pub fn near_singular_director(grid: Grid, delta: f64) -> Result<Field> {
    let l = grid.length();
    let half = 0.5 * l;
    let (inner, outer) = (0.55 * half, 0.95 * half);
    let wrap = |v: f64| (v + half).rem_euclid(l) - half;
    let cutoff = |r: f64| smooth_step(((r.abs() - inner) / (outer - inner)).clamp(0.0, 1.0));
    let dim = grid.dim();
    let raw = Field::from_fn(grid, 3, |x| {
        let p0 = wrap(x[0] - half);
        let p1 = wrap(x[1] - half);
        let width = if dim == 3 {
            delta * (2.0 - (2.0 * PI * (x[2] - half) / l).cos())
        } else {
            delta
        };
        let rho2 = p0 * p0 + p1 * p1;
        let den = width * width + rho2;
        let bubble = [
            2.0 * width * p0 / den,
            2.0 * width * p1 / den,
            (width * width - rho2) / den,
        ];
        let chi = cutoff(p0) * cutoff(p1);
        vec![
            chi * bubble[0],
            chi * bubble[1],
            chi * bubble[2] - (1.0 - chi),
        ]
    });
    let shortest = raw.magnitude().into_iter().fold(f64::INFINITY, f64::min);
    if shortest < 0.1 {
        return Err(Error::InvalidArgument(format!(
            "bubble width {delta} too large for the box"
        )));
    }
    renormalize_director(&raw)
}
