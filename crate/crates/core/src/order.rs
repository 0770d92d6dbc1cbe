//! Least-squares estimation of convergence orders from `(eps, metric)` pairs.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    /// Slope of `log(metric)` against `log(eps)`.
    pub slope: f64,
    /// Intercept in log space: `metric ~ exp(intercept) * eps^slope`.
    pub intercept: f64,
    /// Slopes between consecutive valid pairs, in input order.
    pub interval_slopes: Vec<f64>,
    /// Input indices dropped because the metric was not strictly positive.
    pub excluded: Vec<usize>,
}

pub const MIN_PAIRS: usize = 3;

pub fn fit_order(pairs: &[(f64, f64)]) -> Result<OrderFit> {
    let mut excluded = Vec::new();
    let mut pts = Vec::with_capacity(pairs.len());
    for (i, &(eps, metric)) in pairs.iter().enumerate() {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        if metric > 0.0 && metric.is_finite() {
            pts.push((eps.ln(), metric.ln()));
        } else {
            excluded.push(i);
        }
    }
    if pts.len() < MIN_PAIRS {
        return Err(Error::InsufficientData {
            needed: MIN_PAIRS,
            got: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all eps values coincide".into()));
    }
    let slope = sxy / sxx;
    let interval_slopes = pts.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    Ok(OrderFit {
        slope,
        intercept: my - slope * mx,
        interval_slopes,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_first_order() {
        let pairs: Vec<_> = [0.2, 0.1, 0.05].iter().map(|&e| (e, e)).collect();
        let fit = fit_order(&pairs).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
    }

    #[test]
    fn exact_second_order_with_prefactor() {
        let pairs: Vec<_> = [0.3, 0.1, 0.03, 0.01].iter().map(|&e| (e, 3.0 * e * e)).collect();
        let fit = fit_order(&pairs).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-10);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(fit.interval_slopes.iter().all(|s| (s - 2.0).abs() < 1e-10));
    }

    #[test]
    fn nonpositive_metrics_are_excluded() {
        let pairs = [(0.4, 0.4), (0.2, 0.0), (0.1, 0.1), (0.05, 0.05), (0.02, -1.0)];
        let fit = fit_order(&pairs).unwrap();
        assert_eq!(fit.excluded, vec![1, 4]);
        assert!((fit.slope - 1.0).abs() < 1e-12);
        let too_few = [(0.4, 0.4), (0.2, 0.0), (0.1, 0.1)];
        assert!(matches!(fit_order(&too_few), Err(Error::InsufficientData { .. })));
    }

    proptest! {
        #[test]
        fn recovers_power_laws(p in -1.0f64..4.0, c in 0.01f64..100.0) {
            let pairs: Vec<_> = [0.5, 0.2, 0.1, 0.01].iter().map(|&e: &f64| (e, c * e.powf(p))).collect();
            let fit = fit_order(&pairs).unwrap();
            prop_assert!((fit.slope - p).abs() < 1e-9);
            prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
