//! Stationary Fokker-Planck problem on the circle.
//!
//! The stationary density of `dx = h dt + sqrt(eps) gamma dW` (with `Gamma =
//! gamma^2`) solves `(eps/2)(Gamma rho)'' - (h rho)' = 0`. Integrating once,
//! the probability flux `J = h rho - (eps/2)(Gamma rho)'` is constant.
//!
//! Two independent solvers are provided:
//!
//! * [`solve_stationary_quadrature`] integrates the first-order equation with
//!   an integrating factor. Writing `u = Gamma rho`, `b = 2h/(eps Gamma)` and
//!   `B(x) = int_0^x b`, the periodic solution is
//!   `u(x) = (2J/eps) int_0^inf exp(-(B(x+t) - B(x))) dt`, which only ever
//!   exponentiates non-positive numbers.
//! * [`solve_stationary_fd`] assembles second-order central differences and
//!   extracts the normalized null vector.
//!
//! The residual `r = rho_eps - rho_0` is then measured against the explicit
//! `O(eps)` bounds in [`certify_bounds`] and over families of `eps` in
//! [`convergence_study`].

use crate::error::{Error, Result};
use crate::fields::{spectral::Spectrum, DiffusionCoeff1D, FlowField1D, Grid1D, PeriodicField1D};
use crate::linalg::{fold, PeriodicOperator};
use crate::order::{fit_order, OrderFit};
use rayon::prelude::*;
use serde::Serialize;

/// A nonnegative grid function with unit integral.
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    field: PeriodicField1D,
}

impl Density {
    pub const MASS_TOL: f64 = 1e-10;

    pub fn new(field: PeriodicField1D) -> Result<Self> {
        let min = field.min();
        if min < 0.0 {
            return Err(Error::NegativeDensity { min_value: min });
        }
        let mass = field.integrate();
        if (mass - 1.0).abs() > Self::MASS_TOL {
            return Err(Error::InvalidInput(format!("density has mass {mass}, expected 1")));
        }
        Ok(Density { field })
    }

    /// Rescales a nonnegative field to unit mass.
    pub fn normalized(field: PeriodicField1D) -> Result<Self> {
        let mass = field.integrate();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidInput(format!("cannot normalize field of mass {mass}")));
        }
        Self::new(field.map(|v| v / mass))
    }

    pub fn uniform(grid: Grid1D) -> Self {
        Density {
            field: PeriodicField1D::derived(grid, vec![1.0; grid.n()]),
        }
    }

    pub fn field(&self) -> &PeriodicField1D {
        &self.field
    }

    pub fn samples(&self) -> &[f64] {
        self.field.samples()
    }

    pub fn grid(&self) -> Grid1D {
        self.field.grid()
    }

    pub fn min(&self) -> f64 {
        self.field.min()
    }

    /// Mass of the arc `[a, b]` (`a <= b <= a + 1`, endpoints anywhere on the
    /// real line) under the piecewise-linear interpolant of the samples.
    ///
    /// Summed cell by cell, so tiny tail masses keep their relative accuracy.
    pub fn arc_mass(&self, a: f64, b: f64) -> f64 {
        assert!(a <= b && b - a <= 1.0 + 1e-12, "arc [{a}, {b}] is not a sub-arc of the circle");
        let n = self.field.n();
        let nf = n as f64;
        let f = self.samples();
        let value_at = |cell: i64, t: f64| {
            let k = cell.rem_euclid(n as i64) as usize;
            f[k] + t * (f[(k + 1) % n] - f[k])
        };
        let first = (a * nf).floor() as i64;
        let last = (b * nf).ceil() as i64;
        let mut acc = 0.0;
        for cell in first..last {
            let lo = (a * nf - cell as f64).max(0.0);
            let hi = (b * nf - cell as f64).min(1.0);
            if hi > lo {
                acc += (hi - lo) * 0.5 * (value_at(cell, lo) + value_at(cell, hi));
            }
        }
        acc / nf
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverTag {
    Quadrature,
    FiniteDifference,
}

#[derive(Clone, Debug)]
pub struct StationarySolution {
    pub density: Density,
    pub epsilon: f64,
    /// `(eps/2)(Gamma rho)' - h rho`, i.e. minus the probability flux.
    pub flux_constant: f64,
    pub solver: SolverTag,
    /// FD only: small negative samples were clamped to zero.
    pub clamped: bool,
    /// FD only: pivot-ratio condition estimate of the linear system.
    pub condition_estimate: Option<f64>,
}

impl StationarySolution {
    /// Pointwise flux `h rho - (eps/2)(Gamma rho)'` with a spectral derivative.
    pub fn flux(&self, h: &PeriodicField1D, gamma: &DiffusionCoeff1D) -> Result<PeriodicField1D> {
        let rho = self.density.field();
        let u = rho.zip_with(gamma.gamma_sq(), |r, g| r * g)?;
        let du = u.differentiate();
        let hr = h.zip_with(rho, |a, b| a * b)?;
        hr.zip_with(&du, |a, d| a - 0.5 * self.epsilon * d)
    }

    /// Standard deviation of the flux over the grid relative to its mean magnitude.
    pub fn flux_relative_std(&self, h: &PeriodicField1D, gamma: &DiffusionCoeff1D) -> Result<f64> {
        let f = self.flux(h, gamma)?;
        let mean = f.integrate();
        let var = f.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / f.n() as f64;
        Ok(var.sqrt() / mean.abs())
    }
}

/// `rho_0 = c / h` with `c = 1 / int(1/h)`.
pub fn unperturbed_density(h: &FlowField1D) -> Result<Density> {
    let recip = h.field().map(|v| 1.0 / v.abs());
    Density::normalized(recip)
}

/// Largest fine-grid size the quadrature solver will allocate.
pub const MAX_QUADRATURE_POINTS: usize = 1 << 22;
/// Target bound on `b * dt` over one fine cell.
const QUADRATURE_STEP: f64 = 0.125;
/// Terms with `B(x+t) - B(x)` beyond this contribute below double precision.
const EXPONENT_CUTOFF: f64 = 50.0;

/// Exact-quadrature stationary solution (the oracle).
pub fn solve_stationary_quadrature(
    h: &FlowField1D,
    gamma: &DiffusionCoeff1D,
    eps: f64,
) -> Result<StationarySolution> {
    check_eps(eps)?;
    h.field().ensure_same_grid(gamma.gamma_sq())?;
    let grid = h.grid();
    let gam = if h.reversed() {
        gamma.gamma_sq().reflect()
    } else {
        gamma.gamma_sq().clone()
    };
    let hv = h.oriented();
    let b = hv.zip_with(&gam, |a, g| 2.0 * a / (eps * g))?;
    let window = window_integrals(&b, eps)?;
    let weights: Vec<f64> = window.iter().zip(gam.samples()).map(|(w, g)| w / g).collect();
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    let flux = eps / (2.0 * mean);
    let mut rho = PeriodicField1D::derived(grid, weights.iter().map(|w| w / mean).collect());
    if h.reversed() {
        rho = rho.reflect();
    }
    Ok(StationarySolution {
        density: Density::new(rho)?,
        epsilon: eps,
        flux_constant: if h.reversed() { flux } else { -flux },
        solver: SolverTag::Quadrature,
        clamped: false,
        condition_estimate: None,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("eps must be positive and finite, got {eps}")))
    }
}

/// `W(x_i) = int_0^inf exp(-(B(x_i + t) - B(x_i))) dt` for `b > 0`.
///
/// `B` is the antiderivative of the trigonometric interpolant of `b`, sampled on
/// a refined grid fine enough that `b dt <= QUADRATURE_STEP`. The trapezoid sum
/// over one period is completed to the half line by the geometric factor
/// `1/(1 - exp(-B(1)))` and corrected with Euler-Maclaurin terms through the
/// fifth derivative at `t = 0`; the tail terms vanish.
fn window_integrals(b: &PeriodicField1D, eps: f64) -> Result<Vec<f64>> {
    let n = b.n();
    let b_max = b.max();
    let mut refine = 1usize;
    while b_max / (n * refine) as f64 > QUADRATURE_STEP {
        refine *= 2;
        if n * refine > MAX_QUADRATURE_POINTS {
            return Err(Error::PrecisionExhausted {
                eps,
                smallest_safe_eps: eps * b_max / (QUADRATURE_STEP * MAX_QUADRATURE_POINTS as f64),
            });
        }
    }
    let m = n * refine;
    let dt = 1.0 / m as f64;

    let spec = b.spectrum();
    let period_gain = spec.mean();
    let periodic = spec.antiderivative_periodic().resample(m);
    let big_b: Vec<f64> = (0..m)
        .map(|k| period_gain * k as f64 * dt + periodic[k] - periodic[0])
        .collect();

    // Derivatives of b at the coarse nodes, for the endpoint corrections.
    let mut derivs = Vec::with_capacity(5);
    let mut s: Spectrum = spec;
    derivs.push(b.samples().to_vec());
    for _ in 0..4 {
        s = s.derivative();
        derivs.push(s.to_samples());
    }

    let tail = -(-period_gain).exp_m1();
    let w: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let base = i * refine;
            let b0 = big_b[base];
            let mut acc = 0.5;
            for j in 1..=m {
                let idx = base + j;
                let bj = if idx < m {
                    big_b[idx]
                } else {
                    big_b[idx - m] + period_gain
                };
                let g = bj - b0;
                if g > EXPONENT_CUTOFF {
                    break;
                }
                acc += if j == m { 0.5 * (-g).exp() } else { (-g).exp() };
            }
            let trapezoid = acc * dt / tail;
            // f = exp(phi) with phi^(k) = -b^(k-1); f^(k)(0) are complete Bell polynomials.
            let phi = [
                -derivs[0][i],
                -derivs[1][i],
                -derivs[2][i],
                -derivs[3][i],
                -derivs[4][i],
            ];
            let y = bell_up_to_5(&phi);
            let dt2 = dt * dt;
            trapezoid + dt2 / 12.0 * y[1] - dt2 * dt2 / 720.0 * y[3] + dt2 * dt2 * dt2 / 30240.0 * y[5]
        })
        .collect();
    Ok(w)
}

/// Complete Bell polynomials `Y_0..Y_5` of `phi[0..5] = (phi', ..., phi^(5))`.
fn bell_up_to_5(phi: &[f64; 5]) -> [f64; 6] {
    const BINOM: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];
    let mut y = [0.0; 6];
    y[0] = 1.0;
    for n in 0..5 {
        y[n + 1] = (0..=n).map(|k| BINOM[n][k] * y[n - k] * phi[k]).sum();
    }
    y
}

/// Zero-flux stationary density `rho ∝ exp(B)/Gamma`, `B = int 2 drift/(eps Gamma)`.
///
/// Valid when `drift/Gamma` has zero mean (reversible drifts such as gradient
/// fields), where the integrating factor is itself periodic. The drift may
/// vanish, unlike in [`solve_stationary_quadrature`].
pub fn solve_reversible(drift: &PeriodicField1D, gamma: &DiffusionCoeff1D, eps: f64) -> Result<Density> {
    check_eps(eps)?;
    drift.ensure_same_grid(gamma.gamma_sq())?;
    let b = drift.zip_with(gamma.gamma_sq(), |a, g| 2.0 * a / (eps * g))?;
    let scale = b.norm_sup().max(1.0);
    if b.integrate().abs() > 1e-10 * scale {
        return Err(Error::InvalidInput(format!(
            "drift is not reversible: mean of 2h/(eps Gamma) is {}",
            b.integrate()
        )));
    }
    let big_b = b.cumulative_integral().field;
    let log_w = big_b.zip_with(gamma.gamma_sq(), |bb, g| bb - g.ln())?;
    let top = log_w.max();
    Density::normalized(log_w.map(|v| (v - top).exp()))
}

/// Stationary density of the Stratonovich equation `dx = h dt + sqrt(eps) gamma ∘ dW`
/// for a reversible `h`: the noise-induced drift `(eps/4) Gamma'` is added before
/// solving the zero-flux problem. With `h = 0` this gives `rho ∝ Gamma^(-1/2)`.
pub fn stratonovich_reversible(drift: &PeriodicField1D, gamma: &DiffusionCoeff1D, eps: f64) -> Result<Density> {
    let gp = gamma.gamma_sq().differentiate();
    let effective = drift.zip_with(&gp, |a, d| a + 0.25 * eps * d)?;
    solve_reversible(&effective, gamma, eps)
}

/// FD solver minimum grid size.
pub const FD_MIN_POINTS: usize = 64;
/// Samples more negative than this are a solver failure.
pub const FD_NEGATIVE_TOL: f64 = 1e-8;
pub const FD_ROW_RESIDUAL_TOL: f64 = 1e-8;

/// Central-difference stationary solution on an `n`-point grid.
///
/// The drift may vanish or change sign here. `h` and `gamma` are resampled to
/// `n` points (exactly when they carry a rule).
pub fn solve_stationary_fd(
    h: &PeriodicField1D,
    gamma: &DiffusionCoeff1D,
    eps: f64,
    n: usize,
) -> Result<StationarySolution> {
    check_eps(eps)?;
    if n < FD_MIN_POINTS || n % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "FD grid must be even and >= {FD_MIN_POINTS}, got {n}"
        )));
    }
    let grid = Grid1D::new(n)?;
    let hv = h.resample(grid);
    let gv = gamma.gamma_sq().resample(grid);
    let (hs, gs) = (hv.samples(), gv.samples());
    let dx = grid.spacing();
    let diff = 0.5 * eps / (dx * dx);
    let adv = 0.5 / dx;
    let mut op = PeriodicOperator::new(n);
    for i in 0..n {
        let (l, r) = ((i + n - 1) % n, (i + 1) % n);
        op.push(i, l, diff * gs[l] + adv * hs[l]);
        op.push(i, i, -2.0 * diff * gs[i]);
        op.push(i, r, diff * gs[r] - adv * hs[r]);
    }
    let nv = op.pinned_null_vector(&|k| fold(k, n), 2, 0)?;
    if nv.dropped_row_residual > FD_ROW_RESIDUAL_TOL {
        return Err(Error::ReplacedRowResidual {
            residual: nv.dropped_row_residual,
        });
    }
    let mut values = nv.values;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let clamped = min < 0.0;
    if min < -FD_NEGATIVE_TOL {
        return Err(Error::NegativeDensity { min_value: min });
    }
    if clamped {
        values.iter_mut().for_each(|v| *v = v.max(0.0));
    }
    let density = Density::normalized(PeriodicField1D::derived(grid, values))?;
    let mut sol = StationarySolution {
        density,
        epsilon: eps,
        flux_constant: 0.0,
        solver: SolverTag::FiniteDifference,
        clamped,
        condition_estimate: Some(nv.condition_estimate),
    };
    let gamma_n = DiffusionCoeff1D::new(gv)?;
    sol.flux_constant = -sol.flux(&hv, &gamma_n)?.integrate();
    Ok(sol)
}

/// `r_eps = rho_eps - rho_0` and its norms.
#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub epsilon: f64,
    #[serde(skip)]
    pub residual: PeriodicField1D,
    pub l2: f64,
    pub deriv_l2: f64,
    pub sup: f64,
    pub zero_mean_defect: f64,
}

impl ResidualReport {
    pub const ZERO_MEAN_TOL: f64 = 1e-10;
}

pub fn residual(sol: &StationarySolution, rho0: &Density) -> Result<ResidualReport> {
    let r = sol.density.field().zip_with(rho0.field(), |a, b| a - b)?;
    Ok(ResidualReport {
        epsilon: sol.epsilon,
        l2: r.norm_l2(),
        deriv_l2: r.differentiate().norm_l2(),
        sup: r.norm_sup(),
        zero_mean_defect: r.integrate().abs(),
        residual: r,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    /// `eps` is above the threshold where the estimate was derived.
    NotApplicable,
}

impl Verdict {
    pub fn is_violated(self) -> bool {
        self == Verdict::Violated
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCertificate {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `||(Gamma rho_0)'||_2`
    pub norm_gp1: f64,
    /// `||(Gamma rho_0)''||_2`
    pub norm_gp2: f64,
    pub eps_threshold_l2: f64,
    pub eps_threshold_h1: f64,
    pub l2_bound: f64,
    pub h1_bound: f64,
    pub l2_ok: Verdict,
    pub h1_ok: Verdict,
}

impl BoundCertificate {
    pub fn passed(&self) -> bool {
        !self.l2_ok.is_violated() && !self.h1_ok.is_violated()
    }
}

pub fn certificate_slack(bound: f64) -> f64 {
    1e-8 + 1e-6 * bound
}

/// Evaluates the `O(eps)` estimates
///
/// ```text
/// ||r||_2  <= (eps/alpha) ||(Gamma rho_0)'||_2                      (eps < 2 alpha / max Gamma')
/// ||r'||_2 <= eps (2 beta/alpha^2 ||(Gamma rho_0)'||_2
///                  + (1/alpha) ||(Gamma rho_0)''||_2)                (eps < 2 alpha / (3 max Gamma'))
/// ```
///
/// with `alpha = min h` and `beta = max(|h'| + alpha/(3 max Gamma') |Gamma''|)`
/// (`beta = max |h'|` when `Gamma` is constant). Everything is computed in the
/// coordinates where `h > 0`.
pub fn certify_bounds(
    h: &FlowField1D,
    gamma: &DiffusionCoeff1D,
    rho0: &Density,
    report: &ResidualReport,
) -> Result<BoundCertificate> {
    h.field().ensure_same_grid(gamma.gamma_sq())?;
    h.field().ensure_same_grid(rho0.field())?;
    let (gam, rho) = if h.reversed() {
        (gamma.gamma_sq().reflect(), rho0.field().reflect())
    } else {
        (gamma.gamma_sq().clone(), rho0.field().clone())
    };
    let hv = h.oriented();
    let alpha = h.alpha();
    let dh = hv.differentiate();
    let gp = gam.zip_with(&rho, |g, r| g * r)?;
    let norm_gp1 = gp.differentiate().norm_l2();
    let norm_gp2 = gp.derivative_of_order(2).norm_l2();

    let (beta, thr_l2, thr_h1) = if gamma.is_constant() {
        (dh.norm_sup(), f64::INFINITY, f64::INFINITY)
    } else {
        let g1 = gam.differentiate();
        let g2 = gam.derivative_of_order(2);
        let max_g1 = g1.max();
        let w = alpha / (3.0 * max_g1);
        let beta = dh
            .samples()
            .iter()
            .zip(g2.samples())
            .map(|(a, c)| a.abs() + w * c.abs())
            .fold(f64::NEG_INFINITY, f64::max);
        (beta, 2.0 * alpha / max_g1, 2.0 * alpha / (3.0 * max_g1))
    };
    let eps = report.epsilon;
    let l2_bound = eps / alpha * norm_gp1;
    let h1_bound = eps * (2.0 * beta / (alpha * alpha) * norm_gp1 + norm_gp2 / alpha);
    let verdict = |applicable: bool, value: f64, bound: f64| {
        if !applicable {
            Verdict::NotApplicable
        } else if value <= bound + certificate_slack(bound) {
            Verdict::Holds
        } else {
            Verdict::Violated
        }
    };
    Ok(BoundCertificate {
        epsilon: eps,
        alpha,
        beta,
        norm_gp1,
        norm_gp2,
        eps_threshold_l2: thr_l2,
        eps_threshold_h1: thr_h1,
        l2_bound,
        h1_bound,
        l2_ok: verdict(eps < thr_l2, report.l2, l2_bound),
        h1_ok: verdict(eps < thr_h1, report.deriv_l2, h1_bound),
    })
}

/// Metrics at or below this are treated as exactly zero in convergence fits.
pub const EXACT_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub l2: f64,
    pub deriv_l2: f64,
    pub sup: f64,
    pub zero_mean_defect: f64,
    pub flux_relative_std: f64,
    pub certificate: BoundCertificate,
    /// `||r||_inf <= ||r'||_2` (mean-zero Poincare-Wirtinger on the unit circle).
    pub poincare_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// `None` when the metric is identically zero (see `exact`) or too few
    /// positive values remain.
    pub l2_slope: Option<OrderFit>,
    pub deriv_l2_slope: Option<OrderFit>,
    pub sup_slope: Option<OrderFit>,
    /// Every residual vanished to rounding; slopes are undefined.
    pub exact: bool,
    pub sup_monotone: bool,
}

impl ConvergenceReport {
    pub fn eps_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.eps).collect()
    }

    pub fn certificates_passed(&self) -> bool {
        self.rows.iter().all(|r| r.certificate.passed())
    }

    pub fn poincare_passed(&self) -> bool {
        self.rows.iter().all(|r| r.poincare_ok)
    }

    /// Slope of the named metric, NaN when undefined.
    pub fn slope_or_nan(fit: &Option<OrderFit>) -> f64 {
        fit.as_ref().map_or(f64::NAN, |f| f.slope)
    }
}

pub fn convergence_study(
    h: &FlowField1D,
    gamma: &DiffusionCoeff1D,
    eps_values: &[f64],
) -> Result<ConvergenceReport> {
    if eps_values.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: eps_values.len(),
        });
    }
    if eps_values.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidInput("eps values must be strictly decreasing".into()));
    }
    let rho0 = unperturbed_density(h)?;
    let rows: Vec<ConvergenceRow> = eps_values
        .par_iter()
        .map(|&eps| -> Result<ConvergenceRow> {
            let sol = solve_stationary_quadrature(h, gamma, eps)?;
            let rep = residual(&sol, &rho0)?;
            let cert = certify_bounds(h, gamma, &rho0, &rep)?;
            if !(eps < cert.eps_threshold_l2) {
                return Err(Error::InvalidInput(format!(
                    "eps = {eps} is above the L2 threshold {}",
                    cert.eps_threshold_l2
                )));
            }
            Ok(ConvergenceRow {
                eps,
                l2: rep.l2,
                deriv_l2: rep.deriv_l2,
                sup: rep.sup,
                zero_mean_defect: rep.zero_mean_defect,
                flux_relative_std: sol.flux_relative_std(h.field(), gamma)?,
                poincare_ok: rep.sup <= rep.deriv_l2 + EXACT_FLOOR,
                certificate: cert,
            })
        })
        .collect::<Result<_>>()?;

    let exact = rows
        .iter()
        .all(|r| r.l2 <= EXACT_FLOOR && r.deriv_l2 <= EXACT_FLOOR && r.sup <= EXACT_FLOOR);
    let fit = |metric: fn(&ConvergenceRow) -> f64| -> Option<OrderFit> {
        if exact {
            return None;
        }
        let pairs: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| {
                let v = metric(r);
                (r.eps, if v <= EXACT_FLOOR { 0.0 } else { v })
            })
            .collect();
        fit_order(&pairs).ok()
    };
    let sup_monotone = exact || rows.windows(2).all(|w| w[1].sup < w[0].sup);
    Ok(ConvergenceReport {
        l2_slope: fit(|r| r.l2),
        deriv_l2_slope: fit(|r| r.deriv_l2),
        sup_slope: fit(|r| r.sup),
        exact,
        sup_monotone,
        rows,
    })
}
