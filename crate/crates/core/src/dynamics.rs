//! Time integration of the coupled velocity / director system
//!
//! ```text
//! u_t + u·∇u - ν Δu + ∇P = -(∇d)ᵀ Δd,   ∇·u = 0
//! d_t + u·∇d = Δd + |∇d|² d,            |d| = 1
//! ```
//!
//! Diffusion is treated mode by mode in spectral space; transport, elastic
//! stress and the harmonic-map reaction term are explicit. The pressure is
//! eliminated by Leray projection and the unit-length constraint is restored
//! by pointwise renormalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{forward, inverse_unchecked};
use crate::grid::{Field, Grid, SpectralField};
use crate::monitor::{DiagnosticsRecord, Monitor};
use crate::ops::{
    dealias_in_place, divergence_spectral, for_each_mode, gradient_spectral, laplacian_spectral,
    leray_project,
};

/// Tolerance for both state constraints.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-10;

/// Directors shorter than this cannot be renormalized.
pub const MIN_DIRECTOR_LENGTH: f64 = 1e-12;

/// Velocity `u` (`dim` components) and director `d` (3 components) at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub d: Field,
}

impl State {
    pub fn new(t: f64, u: Field, d: Field) -> Result<Self> {
        let grid = *u.grid();
        if *d.grid() != grid {
            return Err(Error::Shape("u and d live on different grids".into()));
        }
        if u.components() != grid.dim() {
            return Err(Error::Shape(format!(
                "velocity needs {} components, got {}",
                grid.dim(),
                u.components()
            )));
        }
        if d.components() != 3 {
            return Err(Error::Shape(format!(
                "director needs 3 components, got {}",
                d.components()
            )));
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite time {t}")));
        }
        Ok(State { t, u, d })
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `max |∇·u|`, evaluated spectrally.
    pub fn divergence_max(&self) -> f64 {
        let div = divergence_spectral(&forward(&self.u)).expect("velocity shape checked");
        inverse_unchecked(&div).max_abs()
    }

    /// `max | |d(x)| - 1 |`.
    pub fn unit_deviation_max(&self) -> f64 {
        self.d
            .magnitude()
            .iter()
            .fold(0.0, |m, r| m.max((r - 1.0).abs()))
    }

    /// Spatial average of `d`. On the torus this stands in for the far-field
    /// direction, which is recorded but not enforced.
    pub fn mean_director(&self) -> [f64; 3] {
        let np = self.d.grid().npoints() as f64;
        std::array::from_fn(|c| self.d.component(c).iter().sum::<f64>() / np)
    }

    pub fn check_constraints(&self) -> Result<()> {
        let div = self.divergence_max();
        if div > CONSTRAINT_TOLERANCE {
            return Err(Error::Constraint(format!("max |div u| = {div:.3e}")));
        }
        let dev = self.unit_deviation_max();
        if dev > CONSTRAINT_TOLERANCE {
            return Err(Error::Constraint(format!("max ||d| - 1| = {dev:.3e}")));
        }
        Ok(())
    }
}

/// Time integrator.
///
/// All variants integrate the diffusion exactly or implicitly per Fourier mode
/// and take the nonlinear terms explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// First-order exponential IMEX Euler: `x⁺ = e^{hL} x + h φ₁(hL) N(x)`.
    #[default]
    Imex1,
    /// Second-order two-step exponential scheme with linearly extrapolated
    /// explicit terms: `x⁺ = e^{hL} x + h[(φ₁+φ₂) N - φ₂ N_prev]`.
    Sbdf2,
    /// First-order backward-Euler diffusion: `(1 - hL) x⁺ = x + h N(x)`.
    BackwardEuler,
    /// Classical SBDF2: `(3 - 2hL) x⁺ = 4x - x_prev + 2h(2N - N_prev)`.
    Bdf2,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Imex1 => "imex1",
            Scheme::Sbdf2 => "sbdf2",
            Scheme::BackwardEuler => "backward-euler",
            Scheme::Bdf2 => "bdf2",
        }
    }

    pub fn is_two_step(&self) -> bool {
        matches!(self, Scheme::Sbdf2 | Scheme::Bdf2)
    }

    /// The one-step scheme used to start a two-step one.
    fn starter(&self) -> Scheme {
        match self {
            Scheme::Sbdf2 => Scheme::Imex1,
            Scheme::Bdf2 => Scheme::BackwardEuler,
            s => *s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub nu: f64,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    #[serde(rename = "dealias_on")]
    pub dealias: bool,
    pub renormalize_every: u64,
    pub diagnostics_every: u64,
    /// Advisory bound on `max|u| dt / h`; exceeding it is reported, not enforced.
    pub cfl_limit: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            nu: 1.0,
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::Imex1,
            dealias: true,
            renormalize_every: 1,
            diagnostics_every: 10,
            cfl_limit: 0.5,
        }
    }
}

impl SolverConfig {
    /// Checks every invariant, naming the offending `solver.*` field.
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::config("solver.nu", "must be positive and finite"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("solver.dt", "must be positive and finite"));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(
                "solver.t_end",
                "must be non-negative and finite",
            ));
        }
        if self.t_end > 0.0 && self.dt > self.t_end {
            return Err(Error::config("solver.dt", "must not exceed solver.t_end"));
        }
        let steps = (self.t_end / self.dt).round();
        if (steps * self.dt - self.t_end).abs() > 1e-9 * self.t_end.max(self.dt) {
            return Err(Error::config(
                "solver.t_end",
                "must be an integer multiple of solver.dt",
            ));
        }
        if self.renormalize_every == 0 {
            return Err(Error::config("solver.renormalize_every", "must be >= 1"));
        }
        if self.diagnostics_every == 0 {
            return Err(Error::config("solver.diagnostics_every", "must be >= 1"));
        }
        if !(self.cfl_limit > 0.0) {
            return Err(Error::config("solver.cfl_limit", "must be positive"));
        }
        Ok(())
    }

    /// Checks that `dt (k_max)² max(1, ν)` is finite on `grid`.
    pub fn validate_for(&self, grid: &Grid) -> Result<()> {
        self.validate()?;
        let kmax = grid.n() as f64 / 2.0 * grid.base_wavenumber();
        let stiff = self.dt * kmax * kmax * self.nu.max(1.0);
        if !stiff.is_finite() {
            return Err(Error::config(
                "solver.dt",
                "stiffness product is not finite",
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

/// Explicit right-hand sides in spectral space.
struct Explicit {
    velocity: SpectralField,
    director: SpectralField,
}

fn product_to_spectral(f: &Field, dealias: bool) -> SpectralField {
    let mut s = forward(f);
    if dealias {
        dealias_in_place(&mut s);
    }
    s
}

/// `-u·∇u - (∇d)ᵀΔd` (projected) and `-u·∇d + |∇d|² d`.
fn explicit_terms(
    u: &Field,
    d: &Field,
    u_hat: &SpectralField,
    d_hat: &SpectralField,
    dealias: bool,
) -> Explicit {
    let grid = *u.grid();
    let dim = grid.dim();
    let np = grid.npoints();
    let grad_u = inverse_unchecked(&gradient_spectral(u_hat));
    let grad_d = inverse_unchecked(&gradient_spectral(d_hat));
    let lap_d = inverse_unchecked(&laplacian_spectral(d_hat));

    // Components 0..dim: velocity terms; dim..dim+3: director advection.
    let mut quad = Field::zeros(grid, dim + 3);
    let mut grad_sq = Field::zeros(grid, 1);
    {
        let out = quad.values_mut();
        let gs = grad_sq.values_mut();
        let gu = grad_u.values();
        let gd = grad_d.values();
        let ld = lap_d.values();
        let uv = u.values();
        for p in 0..np {
            for j in 0..dim {
                let mut conv = 0.0;
                for i in 0..dim {
                    conv += uv[i * np + p] * gu[(j * dim + i) * np + p];
                }
                let mut elastic = 0.0;
                for k in 0..3 {
                    elastic += gd[(k * dim + j) * np + p] * ld[k * np + p];
                }
                out[j * np + p] = -conv - elastic;
            }
            let mut g2 = 0.0;
            for k in 0..3 {
                let mut adv = 0.0;
                for i in 0..dim {
                    let g = gd[(k * dim + i) * np + p];
                    adv += uv[i * np + p] * g;
                    g2 += g * g;
                }
                out[(dim + k) * np + p] = -adv;
            }
            gs[p] = g2;
        }
    }
    let quad_hat = product_to_spectral(&quad, dealias);
    let velocity = leray_project(&quad_hat.select(0, dim)).expect("velocity shape checked");
    let mut director = quad_hat.select(dim, 3);

    // Cubic term as two binary products, each truncated when dealiasing.
    let grad_sq = if dealias {
        inverse_unchecked(&product_to_spectral(&grad_sq, true))
    } else {
        grad_sq
    };
    let mut reaction = Field::zeros(grid, 3);
    for k in 0..3 {
        let dk = d.component(k);
        for ((r, g), x) in reaction
            .component_mut(k)
            .iter_mut()
            .zip(grad_sq.values())
            .zip(dk)
        {
            *r = g * x;
        }
    }
    let reaction_hat = product_to_spectral(&reaction, dealias);
    for (a, b) in director.coeffs_mut().iter_mut().zip(reaction_hat.coeffs()) {
        *a += b;
    }
    Explicit { velocity, director }
}

/// Explicit part of the momentum equation, `P(-u·∇u - (∇d)ᵀΔd)`.
///
/// The viscous term is handled implicitly by the stepper and is not included.
pub fn velocity_rhs(s: &State, dealias: bool) -> Result<Field> {
    s.check_constraints()?;
    let e = explicit_terms(&s.u, &s.d, &forward(&s.u), &forward(&s.d), dealias);
    Ok(inverse_unchecked(&e.velocity))
}

/// Explicit part of the director equation, `-u·∇d + |∇d|² d`.
pub fn director_rhs(s: &State, dealias: bool) -> Result<Field> {
    s.check_constraints()?;
    let e = explicit_terms(&s.u, &s.d, &forward(&s.u), &forward(&s.d), dealias);
    Ok(inverse_unchecked(&e.director))
}

/// Zero-mean pressure solving `-ΔP = ∇·(u·∇u + (∇d)ᵀΔd)`.
pub fn pressure(s: &State, dealias: bool) -> Result<Field> {
    let grid = *s.grid();
    let dim = grid.dim();
    let u_hat = forward(&s.u);
    let d_hat = forward(&s.d);
    let grad_u = inverse_unchecked(&gradient_spectral(&u_hat));
    let grad_d = inverse_unchecked(&gradient_spectral(&d_hat));
    let lap_d = inverse_unchecked(&laplacian_spectral(&d_hat));
    let np = grid.npoints();
    let mut force = Field::zeros(grid, dim);
    for j in 0..dim {
        for p in 0..np {
            let mut v = 0.0;
            for i in 0..dim {
                v += s.u.component(i)[p] * grad_u.component(j * dim + i)[p];
            }
            for k in 0..3 {
                v += grad_d.component(k * dim + j)[p] * lap_d.component(k)[p];
            }
            force.component_mut(j)[p] = v;
        }
    }
    let div = divergence_spectral(&product_to_spectral(&force, dealias))?;
    let k = grid.wavenumbers();
    let mut p_hat = div;
    let coeffs = p_hat.coeffs_mut();
    for_each_mode(&grid, |idx, j| {
        let k2: f64 = (0..dim).map(|a| k[j[a]] * k[j[a]]).sum();
        coeffs[idx] = if k2 == 0.0 {
            Default::default()
        } else {
            coeffs[idx] / k2
        };
    });
    Ok(inverse_unchecked(&p_hat))
}

/// Pointwise `d / |d|`.
pub fn renormalize_director(d: &Field) -> Result<Field> {
    let mut out = d.clone();
    renormalize_in_place(&mut out, f64::NAN)?;
    Ok(out)
}

fn renormalize_in_place(d: &mut Field, t: f64) -> Result<()> {
    let mag = d.magnitude();
    if let Some(point) = mag
        .iter()
        .position(|r| !(*r >= MIN_DIRECTOR_LENGTH) || !r.is_finite())
    {
        return Err(Error::ZeroDirector { t, point });
    }
    for c in 0..d.components() {
        for (x, r) in d.component_mut(c).iter_mut().zip(&mag) {
            *x /= r;
        }
    }
    Ok(())
}

/// `φ₁(z) = (e^z - 1)/z`.
fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.exp_m1() / z
    }
}

/// `φ₂(z) = (e^z - 1 - z)/z²`, by series near zero to avoid cancellation.
fn phi2(z: f64) -> f64 {
    if z.abs() < 0.5 {
        let mut term = 0.5;
        let mut sum = 0.0;
        for j in 0..24 {
            sum += term;
            term *= z / (j as f64 + 3.0);
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Per-mode coefficients of `x⁺ = a x + b x_prev + c N + e N_prev`.
#[derive(Debug, Clone)]
struct Update {
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    e: Vec<f64>,
}

impl Update {
    fn new(k2: &[f64], diffusivity: f64, h: f64, scheme: Scheme) -> Self {
        let len = k2.len();
        let mut u = Update {
            a: vec![0.0; len],
            b: vec![0.0; len],
            c: vec![0.0; len],
            e: vec![0.0; len],
        };
        for (i, &kk) in k2.iter().enumerate() {
            let z = -diffusivity * kk * h;
            match scheme {
                Scheme::Imex1 => {
                    u.a[i] = z.exp();
                    u.c[i] = h * phi1(z);
                }
                Scheme::Sbdf2 => {
                    let p2 = phi2(z);
                    u.a[i] = z.exp();
                    u.c[i] = h * (phi1(z) + p2);
                    u.e[i] = -h * p2;
                }
                Scheme::BackwardEuler => {
                    u.a[i] = 1.0 / (1.0 - z);
                    u.c[i] = h / (1.0 - z);
                }
                Scheme::Bdf2 => {
                    let den = 3.0 - 2.0 * z;
                    u.a[i] = 4.0 / den;
                    u.b[i] = -1.0 / den;
                    u.c[i] = 4.0 * h / den;
                    u.e[i] = -2.0 * h / den;
                }
            }
        }
        u
    }

    fn apply(
        &self,
        x: &SpectralField,
        x_prev: Option<&SpectralField>,
        n: &SpectralField,
        n_prev: Option<&SpectralField>,
    ) -> SpectralField {
        let np = x.grid().npoints();
        let mut out = SpectralField::zeros(*x.grid(), x.components());
        for comp in 0..x.components() {
            let range = comp * np..(comp + 1) * np;
            let dst = &mut out.coeffs_mut()[range.clone()];
            let xs = &x.coeffs()[range.clone()];
            let ns = &n.coeffs()[range.clone()];
            for i in 0..np {
                dst[i] = xs[i] * self.a[i] + ns[i] * self.c[i];
            }
            if let (Some(xp), Some(npv)) = (x_prev, n_prev) {
                let xp = &xp.coeffs()[range.clone()];
                let npv = &npv.coeffs()[range];
                for i in 0..np {
                    dst[i] += xp[i] * self.b[i] + npv[i] * self.e[i];
                }
            }
        }
        out
    }
}

struct History {
    u_hat: SpectralField,
    d_hat: SpectralField,
    explicit: Explicit,
}

/// Advances a state in place, carrying the history needed by two-step schemes.
pub struct Stepper {
    cfg: SolverConfig,
    grid: Grid,
    start_u: Update,
    start_d: Update,
    main: Option<(Update, Update)>,
    history: Option<History>,
    steps_taken: u64,
    last_unit_drift: f64,
}

impl Stepper {
    pub fn new(grid: Grid, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate_for(&grid)?;
        let k = grid.wavenumbers();
        let mut k2 = vec![0.0; grid.npoints()];
        for_each_mode(&grid, |idx, j| {
            k2[idx] = (0..grid.dim()).map(|a| k[j[a]] * k[j[a]]).sum();
        });
        let starter = cfg.scheme.starter();
        let main = cfg.scheme.is_two_step().then(|| {
            (
                Update::new(&k2, cfg.nu, cfg.dt, cfg.scheme),
                Update::new(&k2, 1.0, cfg.dt, cfg.scheme),
            )
        });
        Ok(Stepper {
            cfg: cfg.clone(),
            grid,
            start_u: Update::new(&k2, cfg.nu, cfg.dt, starter),
            start_d: Update::new(&k2, 1.0, cfg.dt, starter),
            main,
            history: None,
            steps_taken: 0,
            last_unit_drift: 0.0,
        })
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    /// `max | |d|² - 1 |` of the last step before renormalization.
    pub fn last_unit_drift(&self) -> f64 {
        self.last_unit_drift
    }

    /// One time step. On failure the state is left unchanged.
    pub fn advance(&mut self, s: &mut State) -> Result<()> {
        if *s.grid() != self.grid {
            return Err(Error::Shape("state grid differs from stepper grid".into()));
        }
        let dt = self.cfg.dt;
        let u_hat = forward(&s.u);
        let d_hat = forward(&s.d);
        let explicit = explicit_terms(&s.u, &s.d, &u_hat, &d_hat, self.cfg.dealias);

        let (u_next, d_next) = match (&self.main, &self.history) {
            (Some((mu, md)), Some(h)) => (
                mu.apply(
                    &u_hat,
                    Some(&h.u_hat),
                    &explicit.velocity,
                    Some(&h.explicit.velocity),
                ),
                md.apply(
                    &d_hat,
                    Some(&h.d_hat),
                    &explicit.director,
                    Some(&h.explicit.director),
                ),
            ),
            _ => (
                self.start_u.apply(&u_hat, None, &explicit.velocity, None),
                self.start_d.apply(&d_hat, None, &explicit.director, None),
            ),
        };
        let u_next = leray_project(&u_next)?;
        let t_next = s.t + dt;
        let u = inverse_unchecked(&u_next);
        let mut d = inverse_unchecked(&d_next);
        if !u.is_finite() || !d.is_finite() {
            return Err(Error::Diverged { t: t_next });
        }
        self.last_unit_drift = d
            .magnitude()
            .iter()
            .fold(0.0, |m, r| m.max((r * r - 1.0).abs()));
        let steps = self.steps_taken + 1;
        if steps.is_multiple_of(self.cfg.renormalize_every) {
            renormalize_in_place(&mut d, t_next)?;
        }

        if self.main.is_some() {
            self.history = Some(History {
                u_hat,
                d_hat,
                explicit,
            });
        }
        self.steps_taken = steps;
        s.u = u;
        s.d = d;
        s.t = t_next;
        Ok(())
    }
}

/// One step from `s` with no history (two-step schemes use their starter).
pub fn step(s: &State, cfg: &SolverConfig) -> Result<State> {
    let mut stepper = Stepper::new(*s.grid(), cfg)?;
    let mut next = s.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

/// Result of [`run`]: final state, every emitted record, and the failure if any.
#[derive(Debug)]
pub struct RunOutcome {
    pub state: State,
    pub records: Vec<DiagnosticsRecord>,
    pub failure: Option<Error>,
    /// Largest observed `max|u| dt / h`.
    pub cfl_max: f64,
    pub steps: u64,
}

impl RunOutcome {
    pub fn criterion_value(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.criterion_value)
    }
}

/// Steps from `s0` to `cfg.t_end`, emitting a diagnostics record at the start,
/// every `diagnostics_every` steps and at the final time.
///
/// Step failures end the run but keep every record produced before them.
pub fn run(
    s0: State,
    cfg: &SolverConfig,
    sink: &mut dyn FnMut(&DiagnosticsRecord),
) -> Result<RunOutcome> {
    run_observed(s0, cfg, sink, &mut |_, _| Ok(()))
}

/// [`run`] with a callback receiving the step count and state after every
/// step; an error from it aborts the run.
pub fn run_observed(
    s0: State,
    cfg: &SolverConfig,
    sink: &mut dyn FnMut(&DiagnosticsRecord),
    observer: &mut dyn FnMut(u64, &State) -> Result<()>,
) -> Result<RunOutcome> {
    s0.check_constraints()?;
    let grid = *s0.grid();
    let mut stepper = Stepper::new(grid, cfg)?;
    let mut monitor = Monitor::new(grid);
    let mut records = Vec::new();
    let mut emit = |monitor: &mut Monitor, s: &State, records: &mut Vec<DiagnosticsRecord>| {
        let r = monitor.observe(s)?;
        sink(&r);
        records.push(r);
        Ok::<_, Error>(())
    };

    let t0 = s0.t;
    let total = cfg.steps();
    let mut state = s0;
    emit(&mut monitor, &state, &mut records)?;
    let h = grid.spacing();
    let mut cfl_max: f64 = 0.0;
    let mut failure = None;
    for k in 1..=total {
        cfl_max = cfl_max.max(state.u.max_abs() * cfg.dt / h);
        if let Err(e) = stepper.advance(&mut state) {
            failure = Some(e);
            break;
        }
        // Avoid accumulating rounding in t.
        state.t = t0 + k as f64 * cfg.dt;
        if k % cfg.diagnostics_every == 0 || k == total {
            if let Err(e) = emit(&mut monitor, &state, &mut records) {
                failure = Some(e);
                break;
            }
        }
        observer(k, &state)?;
    }
    Ok(RunOutcome {
        state,
        records,
        failure,
        cfl_max,
        steps: stepper.steps_taken(),
    })
}
