//! Banded LU with partial pivoting, plus the periodic "fold" ordering that
//! turns cyclic stencils into narrow bands.
//!
//! On a periodic line of `n` points the ordering `0, n-1, 1, n-2, ...` puts
//! every pair of cyclic neighbours at most two positions apart. Applying it
//! per axis on the torus bounds the bandwidth by `2n + 2`.

use crate::error::{Error, Result};

/// Position of periodic index `k` in the fold ordering of a line of length `n`.
#[inline]
pub(crate) fn fold(k: usize, n: usize) -> usize {
    if k < n / 2 {
        2 * k
    } else {
        2 * (n - 1 - k) + 1
    }
}

/// Square band matrix with room for pivoting fill-in. Row `r` stores columns
/// `r - kl ..= r + ku + kl`.
#[derive(Clone, Debug)]
pub(crate) struct BandMatrix {
    size: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn new(size: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix {
            size,
            kl,
            ku,
            width,
            data: vec![0.0; size * width],
        }
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        debug_assert!(c + self.kl >= r && c <= r + self.ku + self.kl);
        r * self.width + (c + self.kl - r)
    }

    /// Accumulates `v` into entry `(r, c)`; the entry must lie inside the band.
    pub(crate) fn add(&mut self, r: usize, c: usize, v: f64) {
        assert!(
            c + self.kl >= r && c <= r + self.ku,
            "entry ({r}, {c}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(r, c);
        self.data[s] += v;
    }

    pub(crate) fn clear_row(&mut self, r: usize) {
        let start = r * self.width;
        self.data[start..start + self.width].fill(0.0);
    }

    pub(crate) fn factor(mut self) -> Result<BandLu> {
        let n = self.size;
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let last_col = (k + self.kl + self.ku).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.slot(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.slot(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivots[k] = p;
            if best == 0.0 {
                return Err(Error::SingularSystem {
                    condition_estimate: f64::INFINITY,
                });
            }
            if p != k {
                for c in k..=last_col {
                    let (a, b) = (self.slot(k, c), self.slot(p, c));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.slot(k, k)];
            for r in k + 1..=last_row {
                let sr = self.slot(r, k);
                let l = self.data[sr] / pivot;
                self.data[sr] = l;
                if l == 0.0 {
                    continue;
                }
                for c in k + 1..=last_col {
                    let (dst, src) = (self.slot(r, c), self.slot(k, c));
                    self.data[dst] -= l * self.data[src];
                }
            }
        }
        let diag: Vec<f64> = (0..n).map(|k| self.data[self.slot(k, k)].abs()).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(BandLu {
            m: self,
            pivots,
            condition_estimate: max / min,
        })
    }
}

#[derive(Clone, Debug)]
pub(crate) struct BandLu {
    m: BandMatrix,
    pivots: Vec<usize>,
    /// Ratio of the largest to smallest pivot magnitude.
    pub(crate) condition_estimate: f64,
}

impl BandLu {
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let m = &self.m;
        let n = m.size;
        assert_eq!(b.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + m.kl).min(n - 1) {
                    b[r] -= m.data[m.slot(r, k)] * bk;
                }
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for c in k + 1..=(k + m.kl + m.ku).min(n - 1) {
                acc -= m.data[m.slot(k, c)] * b[c];
            }
            b[k] = acc / m.data[m.slot(k, k)];
        }
    }
}

/// A sparse operator on a periodic grid, assembled from per-row stencils in
/// natural indexing and stored in fold order.
pub(crate) struct PeriodicOperator {
    rows: Vec<Vec<(usize, f64)>>,
}

/// Threshold above which the pivot-ratio condition estimate is treated as singular.
pub(crate) const CONDITION_LIMIT: f64 = 1e13;

/// Output of [`PeriodicOperator::pinned_null_vector`].
pub(crate) struct NullVector {
    pub values: Vec<f64>,
    pub condition_estimate: f64,
    /// Relative residual of the dropped equation at the pinned row.
    pub dropped_row_residual: f64,
}

impl PeriodicOperator {
    pub(crate) fn new(size: usize) -> Self {
        PeriodicOperator {
            rows: vec![Vec::new(); size],
        }
    }

    pub(crate) fn push(&mut self, r: usize, c: usize, v: f64) {
        self.rows[r].push((c, v));
    }

    pub(crate) fn size(&self) -> usize {
        self.rows.len()
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    /// Solves `A rho = 0` with row `pinned` replaced by the normalization
    /// `mean(rho) = 1`.
    ///
    /// The replacement row is dense, so the system is split as a band solve
    /// with row `pinned` set to the unit vector (`B z = e_pinned`) followed by
    /// rescaling: any `z` satisfying the other equations with `z_pinned = 1`
    /// gives `rho = z / mean(z)`.
    pub(crate) fn pinned_null_vector(
        &self,
        order: &dyn Fn(usize) -> usize,
        bandwidth: usize,
        pinned: usize,
    ) -> Result<NullVector> {
        let n = self.size();
        let mut band = BandMatrix::new(n, bandwidth, bandwidth);
        for (r, row) in self.rows.iter().enumerate() {
            let pr = order(r);
            if r == pinned {
                band.clear_row(pr);
                band.add(pr, pr, 1.0);
                continue;
            }
            for &(c, v) in row {
                band.add(pr, order(c), v);
            }
        }
        let lu = band.factor()?;
        if !(lu.condition_estimate < CONDITION_LIMIT) {
            return Err(Error::SingularSystem {
                condition_estimate: lu.condition_estimate,
            });
        }
        let mut rhs = vec![0.0; n];
        rhs[order(pinned)] = 1.0;
        lu.solve_in_place(&mut rhs);
        let z: Vec<f64> = (0..n).map(|i| rhs[order(i)]).collect();
        let mean = z.iter().sum::<f64>() / n as f64;
        if !(mean.is_finite() && mean != 0.0) {
            return Err(Error::SingularSystem {
                condition_estimate: lu.condition_estimate,
            });
        }
        let values: Vec<f64> = z.iter().map(|v| v / mean).collect();
        let row = &self.rows[pinned];
        let scale: f64 = row.iter().map(|&(c, v)| (v * values[c]).abs()).sum();
        let residual: f64 = row.iter().map(|&(c, v)| v * values[c]).sum();
        let dropped_row_residual = if scale > 0.0 { residual.abs() / scale } else { residual.abs() };
        Ok(NullVector {
            values,
            condition_estimate: lu.condition_estimate,
            dropped_row_residual,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_is_a_permutation_with_short_cyclic_gaps() {
        for n in [8usize, 10, 64] {
            let mut seen = vec![false; n];
            for k in 0..n {
                seen[fold(k, n)] = true;
                let gap = fold(k, n).abs_diff(fold((k + 1) % n, n));
                assert!(gap <= 2);
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn band_lu_matches_dense_solution() {
        // Tridiagonal with pivoting forced by a tiny diagonal entry.
        let n = 6;
        let dense = |r: usize, c: usize| -> f64 {
            if r == c {
                if r == 2 {
                    1e-12
                } else {
                    4.0
                }
            } else if r.abs_diff(c) == 1 {
                1.0 + 0.1 * r as f64
            } else {
                0.0
            }
        };
        let mut m = BandMatrix::new(n, 1, 1);
        for r in 0..n {
            for c in r.saturating_sub(1)..=(r + 1).min(n - 1) {
                m.add(r, c, dense(r, c));
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let mut b: Vec<f64> = (0..n).map(|r| (0..n).map(|c| dense(r, c) * x_true[c]).sum()).collect();
        m.factor().unwrap().solve_in_place(&mut b);
        for (u, v) in b.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-9, "{u} vs {v}");
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut m = BandMatrix::new(3, 1, 1);
        m.add(0, 0, 1.0);
        m.add(1, 0, 1.0);
        assert!(matches!(m.factor(), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn null_vector_of_periodic_laplacian_is_constant() {
        let n = 16;
        let mut op = PeriodicOperator::new(n);
        for i in 0..n {
            op.push(i, (i + n - 1) % n, 1.0);
            op.push(i, i, -2.0);
            op.push(i, (i + 1) % n, 1.0);
        }
        let nv = op.pinned_null_vector(&|k| fold(k, n), 2, 0).unwrap();
        for v in &nv.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        assert!(nv.dropped_row_residual < 1e-12);
    }
}
