//! Volume-preserving flows on the 2-torus. With homogeneous diffusion the
//! uniform density is stationary for every noise level, and the mean-zero part
//! of any stationary solution vanishes.

use crate::error::{Error, Result};
use crate::fields::{Grid2D, PeriodicField2D, Rule2D};
use crate::linalg::{fold, PeriodicOperator};
use crate::sde::{occupation_measure_2d, SdeConfig, Velocity2D};
use serde::Serialize;

/// Fields whose spectral divergence exceeds this are rejected.
pub const DIVERGENCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct StreamFunction2D {
    pub psi: PeriodicField2D,
}

impl StreamFunction2D {
    pub fn new(psi: PeriodicField2D) -> Self {
        StreamFunction2D { psi }
    }

    pub fn from_rule(grid: Grid2D, rule: Rule2D) -> Result<Self> {
        Ok(StreamFunction2D {
            psi: PeriodicField2D::from_rule(grid, rule)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    Stream(Option<Rule2D>),
    Constant { a: f64, b: f64 },
}

#[derive(Clone, Debug)]
pub struct TorusField2D {
    pub h1: PeriodicField2D,
    pub h2: PeriodicField2D,
    pub divergence_sup: f64,
    pub source: FieldSource,
}

/// `h = (d psi/dy, -d psi/dx)` by spectral differentiation.
pub fn field_from_stream(psi: &StreamFunction2D) -> Result<TorusField2D> {
    let h1 = psi.psi.dy();
    let h2 = psi.psi.dx().samples().iter().map(|v| -v).collect::<Vec<_>>();
    let h2 = PeriodicField2D::derived(psi.psi.grid(), h2);
    let divergence_sup = divergence_sup(&h1, &h2);
    if !(divergence_sup <= DIVERGENCE_TOL) {
        return Err(Error::Divergence { sup: divergence_sup });
    }
    Ok(TorusField2D {
        h1,
        h2,
        divergence_sup,
        source: FieldSource::Stream(psi.psi.rule().cloned()),
    })
}

/// The constant field `(a, b)`, from the non-periodic stream function `a y - b x`.
pub fn constant_field(grid: Grid2D, a: f64, b: f64) -> Result<TorusField2D> {
    Ok(TorusField2D {
        h1: PeriodicField2D::constant(grid, a)?,
        h2: PeriodicField2D::constant(grid, b)?,
        divergence_sup: 0.0,
        source: FieldSource::Constant { a, b },
    })
}

fn divergence_sup(h1: &PeriodicField2D, h2: &PeriodicField2D) -> f64 {
    h1.dx()
        .samples()
        .iter()
        .zip(h2.dy().samples())
        .fold(0.0_f64, |m, (a, b)| m.max((a + b).abs()))
}

impl TorusField2D {
    pub fn grid(&self) -> Grid2D {
        self.h1.grid()
    }

    /// The same field on an `n x n` grid. Only fields built from a rule or a
    /// constant can change grids.
    pub fn regrid(&self, n: usize) -> Result<TorusField2D> {
        if n == self.grid().n() {
            return Ok(self.clone());
        }
        let grid = Grid2D::new(n)?;
        match &self.source {
            FieldSource::Constant { a, b } => constant_field(grid, *a, *b),
            FieldSource::Stream(Some(rule)) => field_from_stream(&StreamFunction2D::from_rule(grid, rule.clone())?),
            FieldSource::Stream(None) => Err(Error::GridMismatch {
                left: self.grid().n(),
                right: n,
            }),
        }
    }

    /// Off-grid evaluator for the SDE integrator.
    pub fn velocity(&self) -> Velocity2D {
        match &self.source {
            FieldSource::Constant { a, b } => Velocity2D::Constant(*a, *b),
            FieldSource::Stream(Some(rule)) => Velocity2D::Stream(rule.clone()),
            FieldSource::Stream(None) => Velocity2D::Grid {
                n: self.grid().n(),
                h1: self.h1.samples().to_vec(),
                h2: self.h2.samples().to_vec(),
            },
        }
    }
}

/// Position-independent `Gamma = [[g11, g12], [g12, g22]]`, symmetric positive definite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogeneousDiffusion {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
}

impl HomogeneousDiffusion {
    pub fn new(g11: f64, g12: f64, g22: f64) -> Result<Self> {
        let g = HomogeneousDiffusion { g11, g12, g22 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let det = self.g11 * self.g22 - self.g12 * self.g12;
        if !(self.g11 > 0.0 && det > 0.0 && det.is_finite()) {
            return Err(Error::DegenerateDiffusion {
                min: det.min(self.g11),
            });
        }
        Ok(())
    }

    pub fn identity() -> Self {
        HomogeneousDiffusion {
            g11: 1.0,
            g12: 0.0,
            g22: 1.0,
        }
    }

    pub fn diag(a: f64, b: f64) -> Result<Self> {
        Self::new(a, 0.0, b)
    }

    /// Lower Cholesky factor `(l11, l21, l22)`.
    pub fn cholesky(&self) -> (f64, f64, f64) {
        let l11 = self.g11.sqrt();
        let l21 = self.g12 / l11;
        (l11, l21, (self.g22 - l21 * l21).sqrt())
    }
}

#[derive(Clone, Debug)]
pub enum Diffusion2D {
    Homogeneous(HomogeneousDiffusion),
    /// `Gamma(x, y) * identity`; there is no uniform-stationarity result for
    /// this case and it only serves as a contrast.
    ScalarField(PeriodicField2D),
}

/// Nonnegative samples with unit mean on a [`Grid2D`].
#[derive(Clone, Debug, PartialEq)]
pub struct Density2D {
    field: PeriodicField2D,
    pub clamped: bool,
    pub condition_estimate: f64,
}

impl Density2D {
    pub fn field(&self) -> &PeriodicField2D {
        &self.field
    }

    pub fn samples(&self) -> &[f64] {
        self.field.samples()
    }

    pub fn grid(&self) -> Grid2D {
        self.field.grid()
    }

    pub fn sup_deviation_from_uniform(&self) -> f64 {
        self.samples().iter().fold(0.0_f64, |m, v| m.max((v - 1.0).abs()))
    }

    pub fn l1_to_uniform(&self) -> f64 {
        self.field.samples().iter().map(|v| (v - 1.0).abs()).sum::<f64>() / self.samples().len() as f64
    }
}

/// Central-difference stationary operator, in natural indexing.
///
/// Homogeneous: `(eps/2) Gamma : grad grad rho - h . grad rho` (advective form,
/// which kills constants exactly). Scalar field: `(eps/2) Laplace(Gamma rho) - h . grad rho`.
fn build_operator(h: &TorusField2D, gamma: &Diffusion2D, eps: f64) -> Result<PeriodicOperator> {
    let grid = h.grid();
    let n = grid.n();
    let d = grid.spacing();
    let (h1, h2) = (h.h1.samples(), h.h2.samples());
    let mut op = PeriodicOperator::new(grid.len());
    let at = |i: usize, j: usize| grid.index(i % n, j % n);
    let adv = 0.5 / d;
    match gamma {
        Diffusion2D::Homogeneous(g) => {
            g.validate()?;
            let cxx = 0.5 * eps * g.g11 / (d * d);
            let cyy = 0.5 * eps * g.g22 / (d * d);
            let cxy = 0.5 * eps * 2.0 * g.g12 / (4.0 * d * d);
            for j in 0..n {
                for i in 0..n {
                    let r = grid.index(i, j);
                    let (ip, im, jp, jm) = (i + 1, i + n - 1, j + 1, j + n - 1);
                    op.push(r, r, -2.0 * cxx - 2.0 * cyy);
                    op.push(r, at(ip, j), cxx - adv * h1[r]);
                    op.push(r, at(im, j), cxx + adv * h1[r]);
                    op.push(r, at(i, jp), cyy - adv * h2[r]);
                    op.push(r, at(i, jm), cyy + adv * h2[r]);
                    if cxy != 0.0 {
                        op.push(r, at(ip, jp), cxy);
                        op.push(r, at(im, jm), cxy);
                        op.push(r, at(ip, jm), -cxy);
                        op.push(r, at(im, jp), -cxy);
                    }
                }
            }
        }
        Diffusion2D::ScalarField(gs) => {
            if gs.grid() != grid {
                return Err(Error::GridMismatch {
                    left: n,
                    right: gs.grid().n(),
                });
            }
            if gs.min() <= 0.0 {
                return Err(Error::DegenerateDiffusion { min: gs.min() });
            }
            let g = gs.samples();
            let c = 0.5 * eps / (d * d);
            for j in 0..n {
                for i in 0..n {
                    let r = grid.index(i, j);
                    let (e, w, nn, s) = (at(i + 1, j), at(i + n - 1, j), at(i, j + 1), at(i, j + n - 1));
                    op.push(r, r, -4.0 * c * g[r]);
                    op.push(r, e, c * g[e] - adv * h1[r]);
                    op.push(r, w, c * g[w] + adv * h1[r]);
                    op.push(r, nn, c * g[nn] - adv * h2[r]);
                    op.push(r, s, c * g[s] + adv * h2[r]);
                }
            }
        }
    }
    Ok(op)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

fn fold_order(n: usize) -> impl Fn(usize) -> usize {
    move |k| fold(k / n, n) * n + fold(k % n, n)
}

/// `sup |A 1|` for the discretized stationary operator: zero up to rounding
/// whenever the diffusion is homogeneous.
pub fn operator_on_uniform(h: &TorusField2D, gamma: &Diffusion2D, eps: f64, n: usize) -> Result<f64> {
    check_eps(eps)?;
    let h = h.regrid(n)?;
    let op = build_operator(&h, gamma, eps)?;
    let ones = vec![1.0; op.size()];
    Ok(op.apply(&ones).iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// Pinned kernel vector of the operator, scaled to unit mean.
fn stationary_kernel(h: &TorusField2D, gamma: &Diffusion2D, eps: f64) -> Result<(Vec<f64>, f64)> {
    let n = h.grid().n();
    let op = build_operator(h, gamma, eps)?;
    let nv = op.pinned_null_vector(&fold_order(n), 2 * n + 2, 0)?;
    if nv.dropped_row_residual > crate::circle_fpe::FD_ROW_RESIDUAL_TOL {
        return Err(Error::ReplacedRowResidual {
            residual: nv.dropped_row_residual,
        });
    }
    Ok((nv.values, nv.condition_estimate))
}

pub fn solve_stationary_fd_2d(h: &TorusField2D, gamma: &Diffusion2D, eps: f64, n: usize) -> Result<Density2D> {
    check_eps(eps)?;
    let h = h.regrid(n)?;
    let (mut values, condition_estimate) = stationary_kernel(&h, gamma, eps)?;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -crate::circle_fpe::FD_NEGATIVE_TOL {
        return Err(Error::NegativeDensity { min_value: min });
    }
    let clamped = min < 0.0;
    if clamped {
        values.iter_mut().for_each(|v| *v = v.max(0.0));
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        values.iter_mut().for_each(|v| *v /= mean);
    }
    Ok(Density2D {
        field: PeriodicField2D::derived(h.grid(), values),
        clamped,
        condition_estimate,
    })
}

pub const RIGIDITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct RigidityVerdict {
    pub epsilon: f64,
    pub n: usize,
    /// `sup |r|` for the mean-zero part `r = z/mean(z) - 1` of the kernel.
    pub r_sup: f64,
    pub r_l2: f64,
    /// `|mean((h r) . grad r)|`
    pub transport_energy: f64,
    /// `mean(|grad r|^2)`
    pub gradient_energy: f64,
    pub condition_estimate: f64,
    pub passed: bool,
}

impl RigidityVerdict {
    pub fn describe(&self) -> String {
        if self.passed {
            "r ≡ 0".to_string()
        } else {
            format!(
                "nonzero r (sup {:e}); discretization artifact, condition estimate {:e}",
                self.r_sup, self.condition_estimate
            )
        }
    }
}

/// Checks that the discrete stationary equation has no mean-zero solution
/// besides 0.
///
/// The kernel is computed with the pinned solve; any kernel vector that is not
/// constant survives in `r`. A failure is reported, never turned into an error.
pub fn rigidity_check(h: &TorusField2D, gamma: &HomogeneousDiffusion, eps: f64, n: usize) -> Result<RigidityVerdict> {
    check_eps(eps)?;
    let h = h.regrid(n)?;
    let grid = h.grid();
    let (z, condition_estimate) = stationary_kernel(&h, &Diffusion2D::Homogeneous(*gamma), eps)?;
    let r: Vec<f64> = z.iter().map(|v| v - 1.0).collect();
    let len = r.len() as f64;
    let d = grid.spacing();
    let at = |i: usize, j: usize| grid.index(i % n, j % n);
    let (h1, h2) = (h.h1.samples(), h.h2.samples());
    let (mut transport, mut energy) = (0.0, 0.0);
    for j in 0..n {
        for i in 0..n {
            let k = grid.index(i, j);
            let rx = (r[at(i + 1, j)] - r[at(i + n - 1, j)]) / (2.0 * d);
            let ry = (r[at(i, j + 1)] - r[at(i, j + n - 1)]) / (2.0 * d);
            transport += r[k] * (h1[k] * rx + h2[k] * ry);
            energy += rx * rx + ry * ry;
        }
    }
    let r_sup = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let r_l2 = (r.iter().map(|v| v * v).sum::<f64>() / len).sqrt();
    let transport_energy = (transport / len).abs();
    let gradient_energy = energy / len;
    let passed = r_sup <= RIGIDITY_TOL && transport_energy <= RIGIDITY_TOL && gradient_energy <= RIGIDITY_TOL;
    Ok(RigidityVerdict {
        epsilon: eps,
        n,
        r_sup,
        r_l2,
        transport_energy,
        gradient_energy,
        condition_estimate,
        passed,
    })
}

/// Default Monte Carlo tolerance on the L1 distance to uniform.
pub const ZERO_NOISE_TOL: f64 = 0.05;

#[derive(Clone, Debug, Serialize)]
pub struct ZeroNoiseRow {
    pub eps: f64,
    pub l1_to_uniform: f64,
    pub samples: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroNoiseReport {
    pub rows: Vec<ZeroNoiseRow>,
    pub tolerance: f64,
    pub passed: bool,
}

/// Occupation measures of the torus ensemble for each `eps`, against the
/// uniform density. Initial states are uniform, so non-ergodic (cellular)
/// flows are probed ensemble-wise.
pub fn zero_noise_probe_2d(
    h: &TorusField2D,
    gamma: &HomogeneousDiffusion,
    eps_values: &[f64],
    config: &SdeConfig,
) -> Result<ZeroNoiseReport> {
    gamma.validate()?;
    config.validate()?;
    let velocity = h.velocity();
    let rows = eps_values
        .iter()
        .map(|&eps| -> Result<ZeroNoiseRow> {
            check_eps(eps)?;
            let occ = occupation_measure_2d(&velocity, gamma.cholesky(), eps, config)?;
            Ok(ZeroNoiseRow {
                eps,
                l1_to_uniform: occ.l1_to_uniform(),
                samples: occ.samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = rows.iter().all(|r| r.l1_to_uniform <= ZERO_NOISE_TOL);
    Ok(ZeroNoiseReport {
        rows,
        tolerance: ZERO_NOISE_TOL,
        passed,
    })
}
