//! Calculus on smooth periodic scalar functions sampled on uniform grids.
//!
//! The circle is normalized to unit circumference, so a grid of `n` points
//! sits at `x_i = i/n`. Derivatives are Fourier-collocation; integrals are the
//! periodic trapezoid rule (the sample mean), which is spectrally accurate for
//! smooth integrands.

pub(crate) mod spectral;
mod torus;

pub use torus::{Grid2D, PeriodicField2D, Rule2D};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use spectral::Spectrum;
use std::f64::consts::PI;

/// Uniform grid of `n` points on the unit circle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid1D {
    n: usize,
}

impl Grid1D {
    pub const MIN_POINTS: usize = 8;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_POINTS || n % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "grid size must be even and >= {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        Ok(Grid1D { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        i as f64 / self.n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.point(i))
    }
}

/// Closed-form generators for periodic fields. All rules are 1-periodic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rule1D {
    Constant {
        value: f64,
    },
    /// `offset + amplitude * sin(2 pi k x)`
    Sin {
        offset: f64,
        amplitude: f64,
        #[serde(default = "one")]
        k: u32,
    },
    /// `offset + amplitude * cos(2 pi k x)`
    Cos {
        offset: f64,
        amplitude: f64,
        #[serde(default = "one")]
        k: u32,
    },
    /// `offset + sum_k cos[k-1] cos(2 pi k x) + sin[k-1] sin(2 pi k x)`
    Trig {
        offset: f64,
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

fn one() -> u32 {
    1
}

impl Rule1D {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Rule1D::Constant { value } => value,
            Rule1D::Sin { offset, amplitude, k } => offset + amplitude * (2.0 * PI * k as f64 * x).sin(),
            Rule1D::Cos { offset, amplitude, k } => offset + amplitude * (2.0 * PI * k as f64 * x).cos(),
            Rule1D::Trig {
                offset,
                ref cos,
                ref sin,
            } => {
                let mut acc = offset;
                for (k, a) in cos.iter().enumerate() {
                    acc += a * (2.0 * PI * (k + 1) as f64 * x).cos();
                }
                for (k, b) in sin.iter().enumerate() {
                    acc += b * (2.0 * PI * (k + 1) as f64 * x).sin();
                }
                acc
            }
        }
    }

    /// Closed-form derivative.
    pub fn derivative(&self) -> Rule1D {
        let w = |k: u32| 2.0 * PI * k as f64;
        match *self {
            Rule1D::Constant { .. } => Rule1D::Constant { value: 0.0 },
            Rule1D::Sin { amplitude, k, .. } => Rule1D::Cos {
                offset: 0.0,
                amplitude: amplitude * w(k),
                k,
            },
            Rule1D::Cos { amplitude, k, .. } => Rule1D::Sin {
                offset: 0.0,
                amplitude: -amplitude * w(k),
                k,
            },
            Rule1D::Trig { ref cos, ref sin, .. } => {
                let len = cos.len().max(sin.len());
                let at = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
                Rule1D::Trig {
                    offset: 0.0,
                    cos: (0..len).map(|i| at(sin, i) * w(i as u32 + 1)).collect(),
                    sin: (0..len).map(|i| -at(cos, i) * w(i as u32 + 1)).collect(),
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Rule1D::Constant { value } => value.is_finite(),
            Rule1D::Sin { offset, amplitude, .. } | Rule1D::Cos { offset, amplitude, .. } => {
                offset.is_finite() && amplitude.is_finite()
            }
            Rule1D::Trig { offset, cos, sin } => {
                offset.is_finite() && cos.iter().chain(sin).all(|v| v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("non-finite rule parameter in {self:?}")))
        }
    }
}

/// A smooth periodic function sampled on a [`Grid1D`].
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField1D {
    grid: Grid1D,
    samples: Vec<f64>,
    rule: Option<Rule1D>,
}

impl PeriodicField1D {
    pub fn from_rule(grid: Grid1D, rule: Rule1D) -> Result<Self> {
        rule.validate()?;
        let samples = grid.points().map(|x| rule.eval(x)).collect();
        Self::checked(grid, samples, Some(rule))
    }

    pub fn from_samples(samples: Vec<f64>) -> Result<Self> {
        let grid = Grid1D::new(samples.len())?;
        Self::checked(grid, samples, None)
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = grid.points().map(f).collect();
        Self::checked(grid, samples, None)
    }

    pub fn constant(grid: Grid1D, value: f64) -> Result<Self> {
        Self::from_rule(grid, Rule1D::Constant { value })
    }

    fn checked(grid: Grid1D, samples: Vec<f64>, rule: Option<Rule1D>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
        }
        Ok(PeriodicField1D { grid, samples, rule })
    }

    /// Internal constructor for results of arithmetic on finite fields.
    pub(crate) fn derived(grid: Grid1D, samples: Vec<f64>) -> Self {
        debug_assert_eq!(grid.n(), samples.len());
        PeriodicField1D {
            grid,
            samples,
            rule: None,
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rule(&self) -> Option<&Rule1D> {
        self.rule.as_ref()
    }

    /// Samples the generating rule on another grid. `None` for sample-only fields.
    pub fn resample_rule(&self, grid: Grid1D) -> Option<Result<Self>> {
        self.rule.clone().map(|r| Self::from_rule(grid, r))
    }

    /// The same function on another grid: the rule when known, otherwise the
    /// trigonometric interpolant.
    pub fn resample(&self, grid: Grid1D) -> Self {
        if grid == self.grid {
            return self.clone();
        }
        match &self.rule {
            Some(r) => PeriodicField1D {
                grid,
                samples: grid.points().map(|x| r.eval(x)).collect(),
                rule: Some(r.clone()),
            },
            None => {
                let s = self.spectrum();
                let samples = if grid.n() > self.n() {
                    s.resample(grid.n())
                } else {
                    grid.points().map(|x| s.eval(x)).collect()
                };
                Self::derived(grid, samples)
            }
        }
    }

    /// Value at an arbitrary point: the closed form if known, else the
    /// trigonometric interpolant.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.rule {
            Some(r) => r.eval(x),
            None => Spectrum::from_samples(&self.samples).eval(x),
        }
    }

    pub(crate) fn spectrum(&self) -> Spectrum {
        Spectrum::from_samples(&self.samples)
    }

    pub fn ensure_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::derived(self.grid, self.samples.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_same_grid(other)?;
        Ok(Self::derived(
            self.grid,
            self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    /// Fourier-collocation derivative.
    pub fn differentiate(&self) -> Self {
        self.derivative_of_order(1)
    }

    pub fn derivative_of_order(&self, order: u32) -> Self {
        let mut s = self.spectrum();
        for _ in 0..order {
            s = s.derivative();
        }
        Self::derived(self.grid, s.to_samples())
    }

    /// Second-order central difference derivative, kept for cross-validation.
    pub fn differentiate_central(&self) -> Self {
        let n = self.n();
        let inv = 0.5 * n as f64;
        let f = &self.samples;
        Self::derived(
            self.grid,
            (0..n).map(|i| (f[(i + 1) % n] - f[(i + n - 1) % n]) * inv).collect(),
        )
    }

    /// Periodic trapezoid rule over the unit circle.
    pub fn integrate(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.n() as f64
    }

    /// Antiderivative vanishing at `x = 0`.
    ///
    /// Computed from the trigonometric interpolant, so it is exact for
    /// band-limited `f`. The result is periodic only when the mean of `f`
    /// vanishes; otherwise it carries the linear ramp `mean * x`.
    pub fn cumulative_integral(&self) -> Antiderivative {
        let s = self.spectrum();
        let mean = s.mean();
        let p = s.antiderivative_periodic();
        let p0 = p.eval(0.0);
        let ramp: Vec<f64> = p
            .to_samples()
            .iter()
            .enumerate()
            .map(|(i, v)| mean * self.grid.point(i) + v - p0)
            .collect();
        Antiderivative {
            field: Self::derived(self.grid, ramp),
            total: mean,
            periodic: mean.abs() <= Antiderivative::PERIODIC_TOL,
        }
    }

    /// Exact integral of the trigonometric interpolant over `[a, b]` (`a <= b`,
    /// any real endpoints).
    pub fn integrate_interval(&self, a: f64, b: f64) -> f64 {
        let s = self.spectrum();
        let p = s.antiderivative_periodic();
        s.mean() * (b - a) + p.eval(b) - p.eval(a)
    }

    pub fn norm_l2(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.n() as f64).sqrt()
    }

    pub fn norm_sup(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Minimum over grid samples (an O(n^-2) surrogate for the true minimum).
    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `x -> f(-x)` sampled on the same grid.
    pub fn reflect(&self) -> Self {
        let n = self.n();
        Self::derived(self.grid, (0..n).map(|i| self.samples[(n - i) % n]).collect())
    }

    /// Fast repeated evaluation off the grid.
    pub fn sampler(&self) -> FieldSampler {
        match &self.rule {
            Some(r) => FieldSampler::Rule(r.clone()),
            None => FieldSampler::table(self),
        }
    }
}

/// Result of [`PeriodicField1D::cumulative_integral`].
#[derive(Clone, Debug)]
pub struct Antiderivative {
    pub field: PeriodicField1D,
    /// Integral over the whole circle, i.e. the value extrapolated to `x -> 1-`.
    pub total: f64,
    pub periodic: bool,
}

impl Antiderivative {
    pub const PERIODIC_TOL: f64 = 1e-12;
}

/// Off-grid evaluator used in the inner loops of the SDE integrators.
#[derive(Clone, Debug)]
pub enum FieldSampler {
    Rule(Rule1D),
    /// Periodic cubic Hermite interpolation with spectral nodal slopes.
    Table {
        n: usize,
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
}

impl FieldSampler {
    fn table(f: &PeriodicField1D) -> Self {
        FieldSampler::Table {
            n: f.n(),
            values: f.samples.clone(),
            slopes: f.differentiate().samples,
        }
    }

    /// Evaluate at `x`, which must lie in `[0, 1)`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FieldSampler::Rule(r) => r.eval(x),
            FieldSampler::Table { n, values, slopes } => {
                let n = *n;
                let s = x * n as f64;
                let i = (s.floor() as usize).min(n - 1);
                let t = s - i as f64;
                let j = (i + 1) % n;
                let h = 1.0 / n as f64;
                let (t2, t3) = (t * t, t * t * t);
                values[i] * (2.0 * t3 - 3.0 * t2 + 1.0)
                    + slopes[i] * h * (t3 - 2.0 * t2 + t)
                    + values[j] * (-2.0 * t3 + 3.0 * t2)
                    + slopes[j] * h * (t3 - t2)
            }
        }
    }
}

/// The drift `h` of a nonsingular flow on the circle.
///
/// Inputs that are negative everywhere are stored in reversed coordinates
/// (`x -> -x`, `h -> -h`) with `reversed = true`, so `oriented` is always
/// strictly positive.
#[derive(Clone, Debug)]
pub struct FlowField1D {
    field: PeriodicField1D,
    oriented: PeriodicField1D,
    reversed: bool,
    alpha: f64,
}

impl FlowField1D {
    pub fn new(field: PeriodicField1D) -> Result<Self> {
        let (min, max) = (field.min(), field.max());
        let (oriented, reversed) = if min > 0.0 {
            (field.clone(), false)
        } else if max < 0.0 {
            (field.reflect().map(|v| -v), true)
        } else {
            return Err(Error::Nonsingularity { min, max });
        };
        let alpha = oriented.min();
        Ok(FlowField1D {
            field,
            oriented,
            reversed,
            alpha,
        })
    }

    pub fn field(&self) -> &PeriodicField1D {
        &self.field
    }

    /// The drift in positively oriented coordinates.
    pub fn oriented(&self) -> &PeriodicField1D {
        &self.oriented
    }

    pub fn reversed(&self) -> bool {
        self.reversed
    }

    /// `min h` over the grid, in oriented coordinates.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> Grid1D {
        self.field.grid()
    }
}

/// `Gamma = gamma^2`, strictly positive.
#[derive(Clone, Debug)]
pub struct DiffusionCoeff1D {
    gamma_sq: PeriodicField1D,
}

impl DiffusionCoeff1D {
    pub fn new(gamma_sq: PeriodicField1D) -> Result<Self> {
        let min = gamma_sq.min();
        if min <= 0.0 {
            return Err(Error::DegenerateDiffusion { min });
        }
        Ok(DiffusionCoeff1D { gamma_sq })
    }

    pub fn constant(grid: Grid1D, value: f64) -> Result<Self> {
        Self::new(PeriodicField1D::constant(grid, value)?)
    }

    pub fn gamma_sq(&self) -> &PeriodicField1D {
        &self.gamma_sq
    }

    /// Whether `Gamma` is constant to within rounding.
    pub fn is_constant(&self) -> bool {
        let f = &self.gamma_sq;
        f.max() - f.min() <= 1e-14 * f.max().abs()
    }

    pub fn grid(&self) -> Grid1D {
        self.gamma_sq.grid()
    }
}
