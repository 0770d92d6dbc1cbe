//! Gradient flows `h = -H'` under standard diffusion.
//!
//! The stationary density is the Gibbs density `c_eps exp(-2H/eps)`, which
//! concentrates on the minimizers of `H` as `eps -> 0`. Concentration is
//! measured by the mass escaping a `delta`-ball around the global minimum.

use crate::circle_fpe::Density;
use crate::error::{Error, Result};
use crate::fields::PeriodicField1D;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Minimum {
    pub location: f64,
    pub value: f64,
    /// `H''` at the minimum from the local quadratic fit.
    pub curvature: f64,
}

#[derive(Clone, Debug)]
pub struct PotentialField {
    h: PeriodicField1D,
    minima: Vec<Minimum>,
}

/// Relative tolerance for treating two minima as equally deep.
const DEPTH_TOL: f64 = 1e-10;

impl PotentialField {
    pub fn new(h: PeriodicField1D) -> Self {
        let minima = local_extrema(&h, true);
        PotentialField { h, minima }
    }

    pub fn field(&self) -> &PeriodicField1D {
        &self.h
    }

    /// Nondegenerate local minima, sorted by location.
    pub fn minima(&self) -> &[Minimum] {
        &self.minima
    }

    /// Minima within `DEPTH_TOL` of the lowest one.
    pub fn global_minima(&self) -> Vec<Minimum> {
        let lowest = self.minima.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
        let scale = self.h.norm_sup().max(1.0);
        self.minima
            .iter()
            .copied()
            .filter(|m| m.value - lowest <= DEPTH_TOL * scale)
            .collect()
    }

    /// No sample differs from the first.
    pub fn is_flat(&self) -> bool {
        let s = self.h.samples();
        s.iter().all(|&v| v == s[0])
    }
}

/// Strict local minima (or maxima) of the samples, refined by a three-point
/// quadratic fit.
fn local_extrema(h: &PeriodicField1D, minima: bool) -> Vec<Minimum> {
    let n = h.n();
    let dx = h.grid().spacing();
    let sign = if minima { 1.0 } else { -1.0 };
    let f: Vec<f64> = h.samples().iter().map(|v| sign * v).collect();
    let mut out = Vec::new();
    for i in 0..n {
        let (l, c, r) = (f[(i + n - 1) % n], f[i], f[(i + 1) % n]);
        if !(c < l && c <= r) {
            continue;
        }
        let second = l - 2.0 * c + r;
        if second <= 0.0 {
            continue;
        }
        let shift = 0.5 * (l - r) / second;
        let value = c - (r - l).powi(2) / (8.0 * second);
        out.push(Minimum {
            location: (h.grid().point(i) + shift * dx).rem_euclid(1.0),
            value: sign * value,
            curvature: sign * second / (dx * dx),
        });
    }
    out.sort_by(|a, b| a.location.total_cmp(&b.location));
    out
}

/// `-H'` by Fourier differentiation. Vanishes at critical points of `H`, so it
/// is not a [`crate::fields::FlowField1D`].
pub fn gradient_drift(h: &PotentialField) -> PeriodicField1D {
    h.field().differentiate().map(|v| -v)
}

#[derive(Clone, Debug)]
pub struct GibbsDensity {
    pub density: Density,
    pub epsilon: f64,
    /// `log c_eps` with `c_eps = 1 / int exp(-2H/eps)`.
    pub log_normalizer: f64,
}

/// Fewer effective grid points than this under the peak means the density is
/// not resolved.
pub const MIN_EFFECTIVE_POINTS: f64 = 8.0;

pub fn gibbs_density(h: &PotentialField, eps: f64) -> Result<GibbsDensity> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let field = h.field();
    let n = field.n();
    let h_min = field.min();
    let weights = field.map(|v| (-2.0 * (v - h_min) / eps).exp());
    let (sum, sum_sq) = weights
        .samples()
        .iter()
        .fold((0.0, 0.0), |(s, q), w| (s + w, q + w * w));
    let effective = sum * sum / sum_sq;
    if effective < MIN_EFFECTIVE_POINTS {
        let factor = (MIN_EFFECTIVE_POINTS / effective).ceil() as usize;
        return Err(Error::RefineGrid {
            eps,
            n,
            suggested_n: (n * factor.next_power_of_two()).max(2 * n),
        });
    }
    let mean = sum / n as f64;
    Ok(GibbsDensity {
        density: Density::normalized(weights)?,
        epsilon: eps,
        log_normalizer: -mean.ln() + 2.0 * h_min / eps,
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct WellMass {
    pub location: f64,
    pub depth: f64,
    pub mass: f64,
}

/// Gibbs mass of each basin of attraction, split at the local maxima between
/// consecutive minima. The symmetric-well counterpart of [`concentration_study`].
pub fn well_masses(h: &PotentialField, eps: f64) -> Result<Vec<WellMass>> {
    let g = gibbs_density(h, eps)?;
    let minima = h.minima();
    if minima.len() <= 1 {
        return Ok(minima
            .iter()
            .map(|m| WellMass {
                location: m.location,
                depth: m.value,
                mass: 1.0,
            })
            .collect());
    }
    let maxima: Vec<f64> = local_extrema(h.field(), false).iter().map(|m| m.location).collect();
    if maxima.is_empty() {
        return Err(Error::Mode("several minima but no separating maximum".into()));
    }
    let mut out = Vec::with_capacity(minima.len());
    for m in minima {
        let lo = maxima
            .iter()
            .rev()
            .copied()
            .find(|&x| x < m.location)
            .unwrap_or(maxima[maxima.len() - 1] - 1.0);
        let hi = maxima
            .iter()
            .copied()
            .find(|&x| x > m.location)
            .unwrap_or(maxima[0] + 1.0);
        out.push(WellMass {
            location: m.location,
            depth: m.value,
            mass: g.density.arc_mass(lo, hi),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationRow {
    pub eps: f64,
    /// `1 - mu_eps(ball)`, integrated directly over the complement.
    pub outside_mass: f64,
    pub eps_times_log_mass: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationTable {
    pub center: f64,
    pub delta: f64,
    /// `min(H on the ball boundary) - min H`.
    pub barrier: f64,
    pub rows: Vec<ConcentrationRow>,
    pub strictly_decreasing: bool,
    /// `|eps log m + 2 barrier| <= 0.2 * 2 barrier` at the smallest eps.
    /// `None` for a flat potential, where nothing concentrates.
    pub log_rate_ok: Option<bool>,
}

impl ConcentrationTable {
    pub const LOG_RATE_REL_TOL: f64 = 0.2;

    pub fn passed(&self) -> bool {
        self.log_rate_ok.unwrap_or(true) && (self.strictly_decreasing || self.log_rate_ok.is_none())
    }
}

pub fn concentration_study(h: &PotentialField, eps_values: &[f64], delta: f64) -> Result<ConcentrationTable> {
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    if eps_values.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let flat = h.is_flat();
    let center = if flat {
        0.0
    } else {
        let global = h.global_minima();
        match global.as_slice() {
            [only] => only.location,
            [] => return Err(Error::Mode("potential has no nondegenerate minimum".into())),
            many => {
                return Err(Error::Mode(format!(
                    "{} equally deep minima; use well_masses for the symmetric-well split",
                    many.len()
                )))
            }
        }
    };
    let barrier = if flat {
        0.0
    } else {
        let f = h.field();
        let h_min = h.global_minima()[0].value;
        f.eval((center - delta).rem_euclid(1.0)).min(f.eval((center + delta).rem_euclid(1.0))) - h_min
    };
    let rows = eps_values
        .iter()
        .map(|&eps| -> Result<ConcentrationRow> {
            let g = gibbs_density(h, eps)?;
            let outside = g.density.arc_mass(center + delta, center + 1.0 - delta);
            Ok(ConcentrationRow {
                eps,
                outside_mass: outside,
                eps_times_log_mass: eps * outside.ln(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let strictly_decreasing = rows.windows(2).all(|w| w[1].outside_mass < w[0].outside_mass);
    let log_rate_ok = (!flat).then(|| {
        let last = rows.last().expect("non-empty");
        (last.eps_times_log_mass + 2.0 * barrier).abs() <= ConcentrationTable::LOG_RATE_REL_TOL * 2.0 * barrier
    });
    Ok(ConcentrationTable {
        center,
        delta,
        barrier,
        rows,
        strictly_decreasing,
        log_rate_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle_fpe::{solve_reversible, solve_stationary_fd};
    use crate::fields::{DiffusionCoeff1D, Grid1D, Rule1D};
    use std::f64::consts::PI;

    fn cosine_well(n: usize, k: u32) -> PotentialField {
        PotentialField::new(
            PeriodicField1D::from_rule(
                Grid1D::new(n).unwrap(),
                Rule1D::Cos {
                    offset: 1.0,
                    amplitude: -1.0,
                    k,
                },
            )
            .unwrap(),
        )
    }

    #[test]
    fn drift_examples() {
        let flat = PotentialField::new(PeriodicField1D::constant(Grid1D::new(32).unwrap(), 4.0).unwrap());
        assert!(gradient_drift(&flat).norm_sup() < 1e-14);
        assert!(flat.minima().is_empty());
        let h = cosine_well(128, 1);
        let d = gradient_drift(&h);
        for (i, v) in d.samples().iter().enumerate() {
            let x = i as f64 / 128.0;
            assert!((v + 2.0 * PI * (2.0 * PI * x).sin()).abs() < 1e-10);
        }
        assert!(d.samples()[0].abs() < 1e-12 && d.samples()[64].abs() < 1e-12);
        let two = cosine_well(128, 2);
        let locs: Vec<f64> = two.global_minima().iter().map(|m| m.location).collect();
        assert_eq!(locs.len(), 2);
        assert!(locs[0].abs() < 1e-12 && (locs[1] - 0.5).abs() < 1e-12);
        // H'' = 4 pi^2 k^2 at the minima, up to the O(dx^2) three-point error
        assert!((two.minima()[0].curvature / (16.0 * PI * PI) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn gibbs_examples() {
        let flat = PotentialField::new(PeriodicField1D::constant(Grid1D::new(64).unwrap(), 2.0).unwrap());
        for eps in [1.0, 0.01] {
            let g = gibbs_density(&flat, eps).unwrap();
            assert!(g.density.samples().iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
        let g = gibbs_density(&cosine_well(512, 1), 0.1).unwrap();
        assert!(g.density.arc_mass(-0.1, 0.1) >= 0.99);
        let two = cosine_well(512, 2);
        for eps in [1.0, 0.1, 0.02] {
            let w = well_masses(&two, eps).unwrap();
            assert_eq!(w.len(), 2);
            assert!((w[0].mass - 0.5).abs() < 1e-10, "{w:?}");
            assert!((w[1].mass - 0.5).abs() < 1e-10, "{w:?}");
        }
        assert!(matches!(
            concentration_study(&two, &[0.1, 0.05, 0.02], 0.2),
            Err(Error::Mode(_))
        ));
    }

    #[test]
    fn gibbs_log_normalizer_matches_mass() {
        let h = cosine_well(256, 1);
        let g = gibbs_density(&h, 0.3).unwrap();
        let raw: f64 = h.field().samples().iter().map(|v| (-2.0 * v / 0.3).exp()).sum::<f64>() / 256.0;
        assert!((g.log_normalizer + raw.ln()).abs() < 1e-12);
    }

    #[test]
    fn under_resolved_gibbs_asks_for_refinement() {
        let err = gibbs_density(&cosine_well(32, 1), 1e-4).unwrap_err();
        assert!(matches!(err, Error::RefineGrid { suggested_n, .. } if suggested_n > 32));
    }

    #[test]
    fn gibbs_equals_reversible_quadrature_and_fd() {
        let n = 512;
        let h = cosine_well(n, 1);
        let drift = gradient_drift(&h);
        let gamma = DiffusionCoeff1D::constant(h.field().grid(), 1.0).unwrap();
        for eps in [0.5, 0.2, 0.1] {
            let g = gibbs_density(&h, eps).unwrap();
            let q = solve_reversible(&drift, &gamma, eps).unwrap();
            let gap = g
                .density
                .samples()
                .iter()
                .zip(q.samples())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(gap <= 1e-8, "eps {eps}: {gap:e}");
            let fd = solve_stationary_fd(&drift, &gamma, eps, n).unwrap();
            assert!(fd.flux_constant.abs() < 1e-8);
            let gap = g
                .density
                .samples()
                .iter()
                .zip(fd.density.samples())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            // second-order FD error, relative to the peak
            assert!(gap <= 1e-3 * g.density.field().max(), "eps {eps}: fd gap {gap:e}");
        }
    }

    #[test]
    fn shift_invariance_and_symmetry() {
        let h = cosine_well(256, 1);
        let shifted = PotentialField::new(h.field().map(|v| v + 7.5));
        let a = gibbs_density(&h, 0.2).unwrap();
        let b = gibbs_density(&shifted, 0.2).unwrap();
        // the constant cancels in H - min H up to one rounding of the shifted samples
        for (u, v) in a.density.samples().iter().zip(b.density.samples()) {
            assert!((u - v).abs() <= 1e-12 * u.max(1e-300), "{u} vs {v}");
        }
        let s = a.density.samples();
        for i in 1..256 {
            assert!((s[i] - s[256 - i]).abs() <= 1e-14 * s[i].max(1e-300));
        }
    }

    #[test]
    fn concentration_examples() {
        let h = cosine_well(1024, 1);
        let t = concentration_study(&h, &[0.4, 0.2, 0.1, 0.05], 0.25).unwrap();
        assert!(t.strictly_decreasing);
        assert!((t.barrier - 1.0).abs() < 1e-12);
        let last = t.rows.last().unwrap();
        assert!((last.eps_times_log_mass + 2.0).abs() <= 0.4, "{last:?}");
        assert_eq!(t.log_rate_ok, Some(true));

        let flat = PotentialField::new(PeriodicField1D::constant(Grid1D::new(64).unwrap(), 0.0).unwrap());
        let t = concentration_study(&flat, &[0.4, 0.1], 0.25).unwrap();
        for r in &t.rows {
            assert!((r.outside_mass - 0.5).abs() < 1e-14);
        }
        assert_eq!(t.log_rate_ok, None);
    }
}
