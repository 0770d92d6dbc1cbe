use super::spectral::partial_2d;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Uniform `n x n` product grid on the unit torus. Samples are stored row-major
/// with `x` varying fastest: index `j * n + i` holds `(i/n, j/n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid2D {
    n: usize,
}

impl Grid2D {
    pub const MIN_POINTS: usize = 32;

    pub fn new(n: usize) -> Result<Self> {
        if n < Self::MIN_POINTS || n % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "torus grid size must be even and >= {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        Ok(Grid2D { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn point(&self, idx: usize) -> (f64, f64) {
        let n = self.n as f64;
        ((idx % self.n) as f64 / n, (idx / self.n) as f64 / n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum Rule2D {
    Constant { value: f64 },
    /// `amplitude * sin(2 pi kx x) sin(2 pi ky y)`
    SinSin {
        amplitude: f64,
        #[serde(default = "one")]
        kx: u32,
        #[serde(default = "one")]
        ky: u32,
    },
    /// `amplitude * cos(2 pi kx x) cos(2 pi ky y)`
    CosCos {
        amplitude: f64,
        #[serde(default = "one")]
        kx: u32,
        #[serde(default = "one")]
        ky: u32,
    },
}

fn one() -> u32 {
    1
}

impl Rule2D {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            Rule2D::Constant { value } => value,
            Rule2D::SinSin { amplitude, kx, ky } => {
                amplitude * (2.0 * PI * kx as f64 * x).sin() * (2.0 * PI * ky as f64 * y).sin()
            }
            Rule2D::CosCos { amplitude, kx, ky } => {
                amplitude * (2.0 * PI * kx as f64 * x).cos() * (2.0 * PI * ky as f64 * y).cos()
            }
        }
    }

    /// Closed-form `(d/dx, d/dy)`.
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            Rule2D::Constant { .. } => (0.0, 0.0),
            Rule2D::SinSin { amplitude, kx, ky } => {
                let (wx, wy) = (2.0 * PI * kx as f64, 2.0 * PI * ky as f64);
                let (sx, cx) = (wx * x).sin_cos();
                let (sy, cy) = (wy * y).sin_cos();
                (amplitude * wx * cx * sy, amplitude * wy * sx * cy)
            }
            Rule2D::CosCos { amplitude, kx, ky } => {
                let (wx, wy) = (2.0 * PI * kx as f64, 2.0 * PI * ky as f64);
                let (sx, cx) = (wx * x).sin_cos();
                let (sy, cy) = (wy * y).sin_cos();
                (-amplitude * wx * sx * cy, -amplitude * wy * cx * sy)
            }
        }
    }

    /// Upper bound on `|grad|` over the torus.
    pub fn gradient_bound(&self) -> f64 {
        match *self {
            Rule2D::Constant { .. } => 0.0,
            Rule2D::SinSin { amplitude, kx, ky } | Rule2D::CosCos { amplitude, kx, ky } => {
                amplitude.abs() * 2.0 * PI * ((kx * kx + ky * ky) as f64).sqrt()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicField2D {
    grid: Grid2D,
    samples: Vec<f64>,
    rule: Option<Rule2D>,
}

impl PeriodicField2D {
    pub fn from_rule(grid: Grid2D, rule: Rule2D) -> Result<Self> {
        let samples = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.point(idx);
                rule.eval(x, y)
            })
            .collect();
        Self::checked(grid, samples, Some(rule))
    }

    pub fn from_fn(grid: Grid2D, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let samples = (0..grid.len())
            .map(|idx| {
                let (x, y) = grid.point(idx);
                f(x, y)
            })
            .collect();
        Self::checked(grid, samples, None)
    }

    pub fn from_samples(grid: Grid2D, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::GridMismatch {
                left: grid.len(),
                right: samples.len(),
            });
        }
        Self::checked(grid, samples, None)
    }

    pub fn constant(grid: Grid2D, value: f64) -> Result<Self> {
        Self::from_rule(grid, Rule2D::Constant { value })
    }

    fn checked(grid: Grid2D, samples: Vec<f64>, rule: Option<Rule2D>) -> Result<Self> {
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
        }
        Ok(PeriodicField2D { grid, samples, rule })
    }

    pub(crate) fn derived(grid: Grid2D, samples: Vec<f64>) -> Self {
        PeriodicField2D {
            grid,
            samples,
            rule: None,
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn rule(&self) -> Option<&Rule2D> {
        self.rule.as_ref()
    }

    /// Spectral `d/dx`.
    pub fn dx(&self) -> Self {
        Self::derived(self.grid, partial_2d(&self.samples, self.grid.n(), 0, 1))
    }

    /// Spectral `d/dy`.
    pub fn dy(&self) -> Self {
        Self::derived(self.grid, partial_2d(&self.samples, self.grid.n(), 1, 1))
    }

    pub fn integrate(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn norm_sup(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}
