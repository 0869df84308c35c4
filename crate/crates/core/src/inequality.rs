//! Empirical checks of the functional inequalities and pointwise identities
//! used in the regularity argument.
//!
//! Each check returns a ratio `lhs / rhs` (or the pieces of one); constants are
//! estimated as corpus maxima over seeded random band-limited fields and are
//! reported, never compared with a fixed value.

use serde::{Deserialize, Serialize};

use crate::dynamics::CONSTRAINT_TOLERANCE;
use crate::error::{Error, Result};
use crate::fft::{forward, inverse_unchecked};
use crate::grid::{Field, Grid};
use crate::initial::{random_band_limited, Spectrum};
use crate::norms::{
    bmo_norm, derivative_magnitude, lp_norm, lp_of_magnitude, sobolev_norm, CubeFamily,
};
use crate::ops::{
    curl_spectral, divergence_spectral, gradient_spectral, laplacian_spectral, leray_project,
};

/// Exponents of a Gagliardo–Nirenberg inequality
/// `‖∇ⁱf‖_p <= C ‖f‖_q^α ‖∇ᵏf‖_r^(1-α)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnExponents {
    pub i: u32,
    pub k: u32,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub alpha: f64,
    pub dim: usize,
}

impl GnExponents {
    /// Validates `1/p - i/dim = α/q + (1/r - k/dim)(1 - α)`, `i <= k`, `0 <= α <= 1`.
    pub fn new(i: u32, k: u32, p: f64, q: f64, r: f64, alpha: f64, dim: usize) -> Result<Self> {
        if i > k {
            return Err(Error::InvalidArgument(format!(
                "need i <= k, got {i} > {k}"
            )));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha {alpha} outside [0, 1]"
            )));
        }
        if [p, q, r].iter().any(|e| !(*e >= 1.0)) {
            return Err(Error::InvalidArgument(
                "Lebesgue exponents must be >= 1".into(),
            ));
        }
        let d = dim as f64;
        let lhs = 1.0 / p - i as f64 / d;
        let rhs = alpha / q + (1.0 / r - k as f64 / d) * (1.0 - alpha);
        if (lhs - rhs).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "scaling relation fails: {lhs} != {rhs}"
            )));
        }
        Ok(GnExponents {
            i,
            k,
            p,
            q,
            r,
            alpha,
            dim,
        })
    }

    /// `‖∇²g‖_{L³} <= C ‖∇g‖_{L⁴}^{2/5} ‖∇³g‖_{L²}^{3/5}` in 3D, written for `f = ∇g`.
    pub fn director_l3_instance() -> Self {
        Self::new(1, 2, 3.0, 4.0, 2.0, 0.4, 3).expect("valid exponents")
    }
}

fn ratio(num: f64, den: f64, what: &str) -> Result<f64> {
    if !(den > 0.0) {
        return Err(Error::UndefinedRatio(format!(
            "{what}: denominator is {den}"
        )));
    }
    Ok(num / den)
}

/// `‖∇ⁱf‖_p / (‖f‖_q^α ‖∇ᵏf‖_r^(1-α))`.
pub fn gn_ratio(f: &Field, e: &GnExponents) -> Result<f64> {
    let spec = forward(f);
    let g = f.grid();
    let lhs = lp_of_magnitude(g, &derivative_magnitude(&spec, e.i), e.p)?;
    let low = lp_of_magnitude(g, &derivative_magnitude(&spec, 0), e.q)?;
    let high = lp_of_magnitude(g, &derivative_magnitude(&spec, e.k), e.r)?;
    ratio(
        lhs,
        low.powf(e.alpha) * high.powf(1.0 - e.alpha),
        "Gagliardo-Nirenberg",
    )
}

/// `‖Δd‖_p / (‖∇d‖_q^α ‖∇Δd‖_r^(1-α))`: the exponents `e` (with `i = 1`,
/// `k = 2`) applied to `∇d`, with the Hessian contracted to the Laplacian.
pub fn gn_laplacian_ratio(d: &Field, e: &GnExponents) -> Result<f64> {
    if (e.i, e.k) != (1, 2) {
        return Err(Error::InvalidArgument(
            "Laplacian form needs i = 1, k = 2".into(),
        ));
    }
    let g = d.grid();
    let spec = forward(d);
    let lap = laplacian_spectral(&spec);
    let lhs = lp_of_magnitude(g, &inverse_unchecked(&lap).magnitude(), e.p)?;
    let grad = lp_of_magnitude(
        g,
        &inverse_unchecked(&gradient_spectral(&spec)).magnitude(),
        e.q,
    )?;
    let grad_lap = lp_of_magnitude(
        g,
        &inverse_unchecked(&gradient_spectral(&lap)).magnitude(),
        e.r,
    )?;
    ratio(
        lhs,
        grad.powf(e.alpha) * grad_lap.powf(1.0 - e.alpha),
        "Laplacian Gagliardo-Nirenberg",
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSobolevTerms {
    /// `‖∇f‖_∞`
    pub lhs: f64,
    /// `‖f‖_{L²}`
    pub l2: f64,
    /// `‖∇×f‖_BMO ln(1 + ‖f‖_{W^{2,p}})`
    pub bmo_log: f64,
}

impl LogSobolevTerms {
    /// `lhs / (1 + l2 + bmo_log)`.
    pub fn ratio(&self) -> f64 {
        self.lhs / (1.0 + self.l2 + self.bmo_log)
    }
}

/// Ingredients of the logarithmic Sobolev bound for a divergence-free field,
/// with the `W^{2,p}` norm taken at exponent `p` (must exceed the dimension).
pub fn log_sobolev_terms(f: &Field, cubes: &CubeFamily, p: f64) -> Result<LogSobolevTerms> {
    let g = f.grid();
    if !(p > g.dim() as f64) {
        return Err(Error::InvalidArgument(format!(
            "W^{{2,p}} exponent must exceed the dimension, got {p}"
        )));
    }
    let spec = forward(f);
    let grad_mag = derivative_magnitude(&spec, 1);
    let lhs = lp_of_magnitude(g, &grad_mag, f64::INFINITY)?;
    let div = inverse_unchecked(&divergence_spectral(&spec)?).max_abs();
    if div > CONSTRAINT_TOLERANCE * lhs.max(1.0) {
        return Err(Error::Constraint(format!(
            "log-Sobolev bound needs a divergence-free field, max |div| = {div:.3e}"
        )));
    }
    let l2 = lp_norm(f, 2.0)?;
    let vort = inverse_unchecked(&curl_spectral(&spec)?);
    let w2p = sobolev_norm(f, 2, p)?;
    let bmo_log = bmo_norm(&vort, cubes)? * (1.0 + w2p).ln();
    Ok(LogSobolevTerms { lhs, l2, bmo_log })
}

/// `‖∇ˢ(fg)‖_{L²} / (‖g‖_∞ ‖∇ˢf‖_{L²} + ‖f‖_∞ ‖∇ˢg‖_{L²})`.
///
/// `g` is either scalar or has as many components as `f` (then the product is
/// taken component by component).
pub fn moser_ratio(f: &Field, g: &Field, s: u32) -> Result<f64> {
    if s == 0 {
        return Err(Error::InvalidArgument("Moser estimate needs s >= 1".into()));
    }
    if f.grid() != g.grid() || (g.components() != 1 && g.components() != f.components()) {
        return Err(Error::Shape(
            "Moser factors have incompatible shapes".into(),
        ));
    }
    let grid = *f.grid();
    let mut prod = f.clone();
    for c in 0..f.components() {
        let gc = g
            .component(if g.components() == 1 { 0 } else { c })
            .to_vec();
        for (x, y) in prod.component_mut(c).iter_mut().zip(gc) {
            *x *= y;
        }
    }
    let top = |h: &Field| lp_of_magnitude(&grid, &derivative_magnitude(&forward(h), s), 2.0);
    let num = top(&prod)?;
    let den = lp_norm(g, f64::INFINITY)? * top(f)? + lp_norm(f, f64::INFINITY)? * top(g)?;
    ratio(num, den, "Moser")
}

/// Residuals of `|∇d|² = -d·Δd` and `(∇d)ᵀΔd = ∇·(∇d⊗∇d - ½|∇d|² I)` for a
/// unit director, as pointwise maxima.
pub fn unit_director_identities(d: &Field) -> Result<(f64, f64)> {
    let grid = *d.grid();
    let dim = grid.dim();
    let np = grid.npoints();
    let dev = d
        .magnitude()
        .iter()
        .fold(0.0_f64, |m, r| m.max((r - 1.0).abs()));
    if dev > CONSTRAINT_TOLERANCE {
        return Err(Error::Constraint(format!(
            "director identities need |d| = 1, max deviation {dev:.3e}"
        )));
    }
    let comps = d.components();
    let spec = forward(d);
    let grad = inverse_unchecked(&gradient_spectral(&spec));
    let lap = inverse_unchecked(&laplacian_spectral(&spec));
    let gd = |k: usize, i: usize| grad.component(k * dim + i);

    let mut res1: f64 = 0.0;
    let mut grad_sq = vec![0.0; np];
    for p in 0..np {
        let mut g2 = 0.0;
        let mut d_lap = 0.0;
        for k in 0..comps {
            for i in 0..dim {
                g2 += gd(k, i)[p] * gd(k, i)[p];
            }
            d_lap += d.component(k)[p] * lap.component(k)[p];
        }
        grad_sq[p] = g2;
        res1 = res1.max((g2 + d_lap).abs());
    }

    // Stress tensor rows T_{i,j} stored as component j * dim + i so that the
    // spectral divergence over i of row j is a gradient component.
    let mut stress = Field::zeros(grid, dim * dim);
    for j in 0..dim {
        for i in 0..dim {
            let out = stress.component_mut(j * dim + i);
            for p in 0..np {
                let mut t = 0.0;
                for k in 0..comps {
                    t += gd(k, i)[p] * gd(k, j)[p];
                }
                if i == j {
                    t -= 0.5 * grad_sq[p];
                }
                out[p] = t;
            }
        }
    }
    let stress_grad = inverse_unchecked(&gradient_spectral(&forward(&stress)));
    let mut res2: f64 = 0.0;
    for j in 0..dim {
        for p in 0..np {
            let mut lhs = 0.0;
            for k in 0..comps {
                lhs += gd(k, j)[p] * lap.component(k)[p];
            }
            let mut div = 0.0;
            for i in 0..dim {
                div += stress_grad.component((j * dim + i) * dim + i)[p];
            }
            res2 = res2.max((lhs - div).abs());
        }
    }
    Ok((res1, res2))
}

/// `‖f‖²_{H^k} / (‖f‖²_{L²} + ‖∇ᵏf‖²_{L²})`.
pub fn interpolation_check(f: &Field, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument(
            "interpolation check needs k >= 1".into(),
        ));
    }
    let hk = sobolev_norm(f, k, 2.0)?;
    let l2 = lp_norm(f, 2.0)?;
    let top = lp_of_magnitude(f.grid(), &derivative_magnitude(&forward(f), k), 2.0)?;
    ratio(hk * hk, l2 * l2 + top * top, "interpolation")
}

/// Constraint imposed on every sample of a [`FieldCorpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleConstraint {
    None,
    DivergenceFree,
    UnitLength,
}

/// Reproducible family of random band-limited fields.
///
/// Sample `i` is drawn from ChaCha8 seeded with `seed` on stream `i`, so it
/// does not depend on `count` and samples can be evaluated in any order.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCorpus {
    pub seed: u64,
    pub count: usize,
    pub spectrum: Spectrum,
    pub constraint: SampleConstraint,
    /// Size of the perturbation of `e_z` before renormalization, for unit samples.
    pub director_amplitude: f64,
}

impl FieldCorpus {
    pub fn new(seed: u64, count: usize, constraint: SampleConstraint) -> Self {
        FieldCorpus {
            seed,
            count,
            spectrum: Spectrum::default(),
            constraint,
            director_amplitude: 0.3,
        }
    }

    /// Sample `index` on `grid` with `components` components (3 for unit
    /// directors, `dim` for divergence-free fields).
    pub fn sample(&self, index: usize, grid: Grid, components: usize) -> Result<Field> {
        let mut rng = crate::initial::stream_rng(self.seed, index as u64);
        match self.constraint {
            SampleConstraint::None => {
                let s = random_band_limited(grid, components, &self.spectrum, &mut rng)?;
                Ok(inverse_unchecked(&s))
            }
            SampleConstraint::DivergenceFree => {
                if components != grid.dim() {
                    return Err(Error::Shape(
                        "divergence-free samples need dim components".into(),
                    ));
                }
                let s = random_band_limited(grid, components, &self.spectrum, &mut rng)?;
                Ok(inverse_unchecked(&leray_project(&s)?))
            }
            SampleConstraint::UnitLength => crate::initial::random_unit_director(
                grid,
                &self.spectrum,
                self.director_amplitude,
                &mut rng,
            ),
        }
    }
}

/// Corpus maximum of one ratio, over all samples and over the first half.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    pub name: &'static str,
    pub samples: usize,
    pub max_ratio: f64,
    pub max_ratio_half: f64,
    /// Index of the sample attaining `max_ratio`.
    pub argmax: usize,
}

impl ConstantEstimate {
    /// Relative growth of the maximum when the corpus doubles.
    pub fn doubling_change(&self) -> f64 {
        (self.max_ratio - self.max_ratio_half).abs() / self.max_ratio_half
    }
}

fn corpus_max(
    name: &'static str,
    count: usize,
    mut eval: impl FnMut(usize) -> Result<f64>,
) -> Result<ConstantEstimate> {
    let half = count.div_ceil(2);
    let mut est = ConstantEstimate {
        name,
        samples: count,
        max_ratio: 0.0,
        max_ratio_half: 0.0,
        argmax: 0,
    };
    for i in 0..count {
        let r = eval(i)?;
        if !r.is_finite() {
            return Err(Error::UndefinedRatio(format!(
                "{name}: sample {i} gave {r}"
            )));
        }
        if r > est.max_ratio {
            est.max_ratio = r;
            est.argmax = i;
        }
        if i < half {
            est.max_ratio_half = est.max_ratio;
        }
    }
    Ok(est)
}

/// Runs every inequality over seeded corpora on `grid`.
pub fn run_inequality_suite(grid: Grid, seed: u64, count: usize) -> Result<Vec<ConstantEstimate>> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "corpus must hold at least one sample".into(),
        ));
    }
    let dim = grid.dim();
    let cubes = CubeFamily::dyadic(grid);
    let unit = FieldCorpus::new(seed, count, SampleConstraint::UnitLength);
    let solenoidal = FieldCorpus::new(
        seed.wrapping_add(1),
        count,
        SampleConstraint::DivergenceFree,
    );
    let plain = FieldCorpus::new(seed.wrapping_add(2), count, SampleConstraint::None);

    let mut out = Vec::new();
    let gn = if dim == 3 {
        GnExponents::director_l3_instance()
    } else {
        GnExponents::new(1, 2, 3.0, 4.0, 2.0, 4.0 / 9.0, 2)?
    };
    out.push(corpus_max("gn_laplacian_l3", count, |i| {
        gn_laplacian_ratio(&unit.sample(i, grid, 3)?, &gn)
    })?);
    out.push(corpus_max("gn_hessian_l3", count, |i| {
        let d = unit.sample(i, grid, 3)?;
        gn_ratio(&inverse_unchecked(&gradient_spectral(&forward(&d))), &gn)
    })?);
    out.push(corpus_max("log_sobolev", count, |i| {
        Ok(log_sobolev_terms(&solenoidal.sample(i, grid, dim)?, &cubes, 4.0)?.ratio())
    })?);
    out.push(corpus_max("moser_s3", count, |i| {
        let pair = plain.sample(i, grid, 2)?;
        moser_ratio(&pair.extract(0), &pair.extract(1), 3)
    })?);
    out.push(corpus_max("interpolation_k3", count, |i| {
        interpolation_check(&plain.sample(i, grid, 1)?, 3)
    })?);
    Ok(out)
}
