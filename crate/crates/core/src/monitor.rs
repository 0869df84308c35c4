//! Blow-up criterion, energy law and high-order energy monitors.
//!
//! The criterion integrand is `‖∇×u‖_BMO + ‖∇d‖⁸_{L⁴}`; its time integral is
//! accumulated with the trapezoid rule on the diagnostics cadence. Squared
//! norms are stored unhalved, so the energy identity reads
//! `d/dt (‖u‖² + ‖∇d‖²) = -2ν‖∇u‖² - 2‖Δd + |∇d|²d‖²`.

use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::fft::{forward, inverse_unchecked};
use crate::grid::{Field, Grid};
use crate::norms::{bmo_norm, lp_of_magnitude, CubeFamily};
use crate::ops::{curl_spectral, gradient_spectral, homogeneous_energy, laplacian_spectral};

/// One time sample of every monitored quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `‖u‖²_{L²}`
    pub kinetic: f64,
    /// `‖∇d‖²_{L²}`
    pub dirichlet: f64,
    /// `‖∇u‖²_{L²}`
    pub visc_dissip: f64,
    /// `‖Δd + |∇d|²d‖²_{L²}`
    pub tension_dissip: f64,
    /// `‖∇d‖_{L⁴}`
    pub grad_d_l4: f64,
    /// `‖∇×u‖_BMO`
    pub vort_bmo: f64,
    /// Running integral of the criterion integrand.
    pub criterion_value: f64,
    /// `‖∇³u‖²_{L²}`
    pub h3_u: f64,
    /// `‖∇⁴d‖²_{L²}`
    pub h4_d: f64,
    /// Running sup of `h3_u + h4_d`.
    pub h_sup: f64,
    pub div_max: f64,
    pub unit_max_dev: f64,
}

impl DiagnosticsRecord {
    pub const HEADER: [&'static str; 13] = [
        "t",
        "kinetic",
        "dirichlet",
        "visc_dissip",
        "tension_dissip",
        "grad_d_l4",
        "vort_bmo",
        "criterion_value",
        "h3_u",
        "h4_d",
        "H_sup",
        "div_max",
        "unit_max_dev",
    ];

    pub fn to_array(&self) -> [f64; 13] {
        [
            self.t,
            self.kinetic,
            self.dirichlet,
            self.visc_dissip,
            self.tension_dissip,
            self.grad_d_l4,
            self.vort_bmo,
            self.criterion_value,
            self.h3_u,
            self.h4_d,
            self.h_sup,
            self.div_max,
            self.unit_max_dev,
        ]
    }

    pub fn from_array(v: [f64; 13]) -> Self {
        DiagnosticsRecord {
            t: v[0],
            kinetic: v[1],
            dirichlet: v[2],
            visc_dissip: v[3],
            tension_dissip: v[4],
            grad_d_l4: v[5],
            vort_bmo: v[6],
            criterion_value: v[7],
            h3_u: v[8],
            h4_d: v[9],
            h_sup: v[10],
            div_max: v[11],
            unit_max_dev: v[12],
        }
    }

    /// `‖u‖² + ‖∇d‖²`.
    pub fn basic_energy(&self) -> f64 {
        self.kinetic + self.dirichlet
    }

    /// Criterion integrand recovered from the stored norms.
    pub fn integrand(&self) -> f64 {
        self.vort_bmo + self.grad_d_l4.powi(8)
    }

    /// `‖(∇u, ∇²d)‖²_{L²} + ‖∇d‖⁴_{L⁴}`.
    ///
    /// For a unit director `d·Δd = -|∇d|²`, so the tension `Δd + |∇d|²d` is
    /// pointwise orthogonal to `|∇d|²d` and `‖Δd‖² = tension + ‖∇d‖⁴_{L⁴}`.
    /// On the torus `‖∇²d‖² = ‖Δd‖²`.
    pub fn low_order_energy(&self) -> f64 {
        let l4 = self.grad_d_l4.powi(4);
        self.visc_dissip + self.tension_dissip + 2.0 * l4
    }
}

/// Running trapezoid integral of the criterion integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionAccumulator {
    pub last_t: f64,
    pub last_integrand: f64,
    pub total: f64,
}

impl CriterionAccumulator {
    pub fn new(t0: f64, integrand0: f64) -> Result<Self> {
        if !(integrand0 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "integrand must be non-negative, got {integrand0}"
            )));
        }
        Ok(CriterionAccumulator {
            last_t: t0,
            last_integrand: integrand0,
            total: 0.0,
        })
    }

    pub fn accumulate(&mut self, t_new: f64, integrand_new: f64) -> Result<f64> {
        if !(t_new > self.last_t) {
            return Err(Error::InvalidArgument(format!(
                "time must increase: {t_new} after {}",
                self.last_t
            )));
        }
        if !(integrand_new >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "integrand must be non-negative, got {integrand_new}"
            )));
        }
        self.total += 0.5 * (self.last_integrand + integrand_new) * (t_new - self.last_t);
        self.last_t = t_new;
        self.last_integrand = integrand_new;
        Ok(self.total)
    }
}

/// `‖∇×u‖_BMO + ‖∇d‖⁸_{L⁴}`.
pub fn criterion_integrand(s: &State, cubes: &CubeFamily) -> Result<f64> {
    let vort = inverse_unchecked(&curl_spectral(&forward(&s.u))?);
    let l4 = crate::norms::grad_lp(&s.d, 4.0)?;
    Ok(bmo_norm(&vort, cubes)? + l4.powi(8))
}

/// Fills `h3_u`, `h4_d` and raises `h_sup` (which holds the previous sup on entry).
pub fn energy_functional_update(mut record: DiagnosticsRecord, s: &State) -> DiagnosticsRecord {
    record.h3_u = homogeneous_energy(&forward(&s.u), 3);
    record.h4_d = homogeneous_energy(&forward(&s.d), 4);
    record.h_sup = record.h_sup.max(record.h3_u + record.h4_d);
    record
}

/// Produces diagnostics records along a run, owning the running accumulators.
#[derive(Debug, Clone)]
pub struct Monitor {
    cubes: CubeFamily,
    acc: Option<CriterionAccumulator>,
    h_sup: f64,
}

impl Monitor {
    pub fn new(grid: Grid) -> Self {
        Self::with_cubes(CubeFamily::dyadic(grid))
    }

    pub fn with_cubes(cubes: CubeFamily) -> Self {
        Monitor {
            cubes,
            acc: None,
            h_sup: 0.0,
        }
    }

    pub fn observe(&mut self, s: &State) -> Result<DiagnosticsRecord> {
        let grid = *s.grid();
        let np = grid.npoints();
        let u_hat = forward(&s.u);
        let d_hat = forward(&s.d);

        let grad_d = inverse_unchecked(&gradient_spectral(&d_hat));
        let lap_d = inverse_unchecked(&laplacian_spectral(&d_hat));
        let grad_mag = grad_d.magnitude();
        let mut tension = Field::zeros(grid, 3);
        for k in 0..3 {
            let out = tension.component_mut(k);
            for p in 0..np {
                let g2 = grad_mag[p] * grad_mag[p];
                out[p] = lap_d.component(k)[p] + g2 * s.d.component(k)[p];
            }
        }
        let w = grid.cell_volume();
        let sq = |f: &Field| f.values().iter().map(|v| v * v).sum::<f64>() * w;

        let grad_u = inverse_unchecked(&gradient_spectral(&u_hat));
        let vort = inverse_unchecked(&curl_spectral(&u_hat)?);
        let grad_d_l4 = lp_of_magnitude(&grid, &grad_mag, 4.0)?;
        let vort_bmo = bmo_norm(&vort, &self.cubes)?;
        let integrand = vort_bmo + grad_d_l4.powi(8);

        let criterion_value = match &mut self.acc {
            None => {
                self.acc = Some(CriterionAccumulator::new(s.t, integrand)?);
                0.0
            }
            Some(acc) => acc.accumulate(s.t, integrand)?,
        };
        let record = DiagnosticsRecord {
            t: s.t,
            kinetic: sq(&s.u),
            dirichlet: sq(&grad_d),
            visc_dissip: sq(&grad_u),
            tension_dissip: sq(&tension),
            grad_d_l4,
            vort_bmo,
            criterion_value,
            h3_u: 0.0,
            h4_d: 0.0,
            h_sup: self.h_sup,
            div_max: s.divergence_max(),
            unit_max_dev: s.unit_deviation_max(),
        };
        let record = energy_functional_update(record, s);
        self.h_sup = record.h_sup;
        Ok(record)
    }
}

fn trapezoid(ts: &[f64], ys: &[f64]) -> Vec<f64> {
    let mut acc = vec![0.0; ts.len()];
    for i in 1..ts.len() {
        acc[i] = acc[i - 1] + 0.5 * (ys[i] + ys[i - 1]) * (ts[i] - ts[i - 1]);
    }
    acc
}

/// Largest relative defect of the energy identity along a record sequence:
/// `max_t |E(t) + ∫₀ᵗ 2(ν‖∇u‖² + ‖Δd+|∇d|²d‖²) - E(0)| / E(0)`.
///
/// Returns the absolute defect when `E(0) = 0`.
pub fn energy_law_residual(records: &[DiagnosticsRecord], nu: f64) -> Result<f64> {
    if records.len() < 2 {
        return Err(Error::InvalidArgument(
            "energy law residual needs at least two records".into(),
        ));
    }
    let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
    let rate: Vec<f64> = records
        .iter()
        .map(|r| 2.0 * (nu * r.visc_dissip + r.tension_dissip))
        .collect();
    let dissipated = trapezoid(&ts, &rate);
    let e0 = records[0].basic_energy();
    let worst = records
        .iter()
        .zip(&dissipated)
        .map(|(r, q)| (r.basic_energy() + q - e0).abs())
        .fold(0.0, f64::max);
    Ok(if e0 > 0.0 { worst / e0 } else { worst })
}

/// One row of the Grönwall report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GronwallRow {
    pub t: f64,
    /// `‖(∇u, ∇²d)‖² + ‖∇d‖⁴_{L⁴}`
    pub energy: f64,
    /// `∫_{t*}^t (‖∇×u‖_BMO + ‖∇d‖⁸_{L⁴}) ds`
    pub accumulated: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GronwallReport {
    pub t_star: f64,
    pub rows: Vec<GronwallRow>,
    /// Least-squares slope of `ln L(t) - ln L(t*)` against `A(t)`, clamped at 0.
    pub c_fit: f64,
    /// Smallest `C >= 0` with `L(t) <= L(t*) exp(C A(t))` at every row.
    pub c_envelope: f64,
}

/// Fits the exponential growth bound `L(t) <= L(t*) exp(C A(t))` over the
/// records with `t >= t_star`.
pub fn gronwall_report(records: &[DiagnosticsRecord], t_star: f64) -> Result<GronwallReport> {
    let window: Vec<&DiagnosticsRecord> = records
        .iter()
        .filter(|r| r.t >= t_star - 1e-12 * t_star.abs().max(1.0))
        .collect();
    if window.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "Grönwall window from t* = {t_star} holds {} record(s), need 2",
            window.len()
        )));
    }
    let ts: Vec<f64> = window.iter().map(|r| r.t).collect();
    let integrand: Vec<f64> = window.iter().map(|r| r.integrand()).collect();
    let acc = trapezoid(&ts, &integrand);
    let rows: Vec<GronwallRow> = window
        .iter()
        .zip(&acc)
        .map(|(r, &a)| GronwallRow {
            t: r.t,
            energy: r.low_order_energy(),
            accumulated: a,
        })
        .collect();

    let l0 = rows[0].energy;
    let (mut num, mut den) = (0.0, 0.0);
    let mut envelope: f64 = 0.0;
    if l0 > 0.0 {
        for row in &rows[1..] {
            if row.accumulated <= 0.0 || row.energy <= 0.0 {
                continue;
            }
            let y = (row.energy / l0).ln();
            num += row.accumulated * y;
            den += row.accumulated * row.accumulated;
            envelope = envelope.max(y / row.accumulated);
        }
    }
    let c_fit = if den > 0.0 { (num / den).max(0.0) } else { 0.0 };
    Ok(GronwallReport {
        t_star,
        rows,
        c_fit,
        c_envelope: envelope,
    })
}
