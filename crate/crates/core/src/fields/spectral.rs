//! Discrete Fourier representation of real periodic samples on `[0, 1)`.
//!
//! A real signal on an even grid of `n` points is stored as the mean, the
//! positive modes `0 < k < n/2` and a Nyquist pair `alpha cos(pi n x) + beta
//! sin(pi n x)`. Keeping the sine half of the Nyquist mode explicit lets
//! derivatives and antiderivatives be composed exactly before the result is
//! resampled on a finer grid, where that term is no longer invisible.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

#[derive(Clone, Debug)]
pub(crate) struct Spectrum {
    n: usize,
    /// Coefficients for k = 0..n/2 (exclusive), normalized by 1/n.
    modes: Vec<Complex64>,
    nyq_cos: f64,
    nyq_sin: f64,
}

pub(crate) fn fft_forward(data: &mut [Complex64]) {
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(data.len()).process(data);
}

pub(crate) fn fft_inverse(data: &mut [Complex64]) {
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_inverse(data.len()).process(data);
}

/// Signed wavenumber of FFT bin `idx` on `n` points; the Nyquist bin maps to `n/2`.
pub(crate) fn wavenumber(idx: usize, n: usize) -> f64 {
    if idx <= n / 2 {
        idx as f64
    } else {
        idx as f64 - n as f64
    }
}

impl Spectrum {
    pub(crate) fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        debug_assert!(n % 2 == 0 && n >= 2);
        let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_forward(&mut buf);
        let scale = 1.0 / n as f64;
        let modes = buf[..n / 2].iter().map(|c| c * scale).collect();
        Spectrum {
            n,
            modes,
            nyq_cos: buf[n / 2].re * scale,
            nyq_sin: 0.0,
        }
    }

    pub(crate) fn mean(&self) -> f64 {
        self.modes[0].re
    }

    /// Derivative of the trigonometric interpolant.
    pub(crate) fn derivative(&self) -> Self {
        let modes = self
            .modes
            .iter()
            .enumerate()
            .map(|(k, c)| c * Complex64::new(0.0, 2.0 * PI * k as f64))
            .collect();
        let w = PI * self.n as f64;
        Spectrum {
            n: self.n,
            modes,
            nyq_cos: w * self.nyq_sin,
            nyq_sin: -w * self.nyq_cos,
        }
    }

    /// Periodic part of the antiderivative: the mean is dropped and the result
    /// is the zero-mode-free primitive of the oscillating modes.
    pub(crate) fn antiderivative_periodic(&self) -> Self {
        let mut modes: Vec<Complex64> = self
            .modes
            .iter()
            .enumerate()
            .map(|(k, c)| {
                if k == 0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c / Complex64::new(0.0, 2.0 * PI * k as f64)
                }
            })
            .collect();
        modes[0] = Complex64::new(0.0, 0.0);
        let w = PI * self.n as f64;
        Spectrum {
            n: self.n,
            modes,
            nyq_cos: -self.nyq_sin / w,
            nyq_sin: self.nyq_cos / w,
        }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let mut acc = self.modes[0].re;
        for (k, c) in self.modes.iter().enumerate().skip(1) {
            let (s, co) = (2.0 * PI * k as f64 * x).sin_cos();
            acc += 2.0 * (c.re * co - c.im * s);
        }
        let (s, co) = (PI * self.n as f64 * x).sin_cos();
        acc + self.nyq_cos * co + self.nyq_sin * s
    }

    /// Samples of the interpolant on a uniform grid of `m >= n` points (`m` even).
    pub(crate) fn resample(&self, m: usize) -> Vec<f64> {
        assert!(m >= self.n && m % 2 == 0, "resample target must be an even m >= n");
        let n = self.n;
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[0] = self.modes[0];
        for k in 1..n / 2 {
            buf[k] = self.modes[k];
            buf[m - k] = self.modes[k].conj();
        }
        if m == n {
            buf[n / 2] = Complex64::new(self.nyq_cos, 0.0);
        } else {
            buf[n / 2] = Complex64::new(0.5 * self.nyq_cos, -0.5 * self.nyq_sin);
            buf[m - n / 2] = Complex64::new(0.5 * self.nyq_cos, 0.5 * self.nyq_sin);
        }
        fft_inverse(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    pub(crate) fn to_samples(&self) -> Vec<f64> {
        self.resample(self.n)
    }
}

/// Spectral derivative of order `order` along one axis of a row-major `n x n` array.
/// `axis = 0` differentiates along x (contiguous index), `axis = 1` along y.
pub(crate) fn partial_2d(samples: &[f64], n: usize, axis: usize, order: u32) -> Vec<f64> {
    let mut out = samples.to_vec();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    let factors: Vec<Complex64> = (0..n)
        .map(|idx| {
            if idx == n / 2 && order % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            Complex64::new(0.0, 2.0 * PI * wavenumber(idx, n)).powu(order) / n as f64
        })
        .collect();
    for line_idx in 0..n {
        let at = |t: usize| -> usize {
            if axis == 0 {
                line_idx * n + t
            } else {
                t * n + line_idx
            }
        };
        for (t, slot) in line.iter_mut().enumerate() {
            *slot = Complex64::new(samples[at(t)], 0.0);
        }
        fwd.process(&mut line);
        for (slot, f) in line.iter_mut().zip(&factors) {
            *slot *= f;
        }
        inv.process(&mut line);
        for (t, slot) in line.iter().enumerate() {
            out[at(t)] = slot.re;
        }
    }
    out
}
