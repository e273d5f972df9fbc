//! Banded symmetric positive-definite linear algebra.
//!
//! The ring-ordered disk mesh gives the Galerkin matrices a fixed half
//! bandwidth of `n_sectors + 1`, so a dense banded Cholesky factorization
//! is a deterministic sparse direct solver for every system in this crate.

use crate::error::{Error, Result};

/// Symmetric banded matrix; only the lower band is stored.
///
/// Entry `(i, j)` with `i - hb <= j <= i` lives at `data[i * (hb + 1) + (j - i + hb)]`.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    hb: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, half_bandwidth: usize) -> Self {
        BandMatrix {
            n,
            hb: half_bandwidth,
            data: vec![0.0; n * (half_bandwidth + 1)],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Add `v` to the symmetric entry `(i, j)`; stores into the lower band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(r - c <= self.hb, "entry ({i},{j}) outside band {}", self.hb);
        self.data[r * (self.hb + 1) + (c + self.hb - r)] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.hb {
            0.0
        } else {
            self.data[r * (self.hb + 1) + (c + self.hb - r)]
        }
    }

    /// Symmetric matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.hb);
            for j in lo..=i {
                let a = self.data[i * (self.hb + 1) + (j + self.hb - i)];
                y[i] += a * x[j];
                if i != j {
                    y[j] += a * x[i];
                }
            }
        }
        y
    }

    /// In-place banded Cholesky factorization `A = L L^T`.
    pub fn cholesky(mut self) -> Result<BandCholesky> {
        let hb = self.hb;
        let w = hb + 1;
        // scale reference for the singularity test
        let max_diag = (0..self.n)
            .map(|i| self.data[i * w + hb].abs())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        for i in 0..self.n {
            let lo = i.saturating_sub(hb);
            for j in lo..=i {
                let mut sum = self.data[i * w + (j + hb - i)];
                let klo = lo.max(j.saturating_sub(hb));
                for k in klo..j {
                    sum -= self.data[i * w + (k + hb - i)] * self.data[j * w + (k + hb - j)];
                }
                if i == j {
                    if sum <= 1e-14 * max_diag {
                        return Err(Error::SingularSystem(format!(
                            "nonpositive pivot {sum:.3e} at row {i}"
                        )));
                    }
                    self.data[i * w + hb] = sum.sqrt();
                } else {
                    self.data[i * w + (j + hb - i)] = sum / self.data[j * w + hb];
                }
            }
        }
        Ok(BandCholesky {
            n: self.n,
            hb,
            data: self.data,
        })
    }
}

/// Banded Cholesky factor; solves by forward/back substitution.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    hb: usize,
    data: Vec<f64>,
}

impl BandCholesky {
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(rhs.len(), self.n);
        let w = self.hb + 1;
        let mut x = rhs.to_vec();
        // L z = b
        for i in 0..self.n {
            let lo = i.saturating_sub(self.hb);
            let mut sum = x[i];
            for k in lo..i {
                sum -= self.data[i * w + (k + self.hb - i)] * x[k];
            }
            x[i] = sum / self.data[i * w + self.hb];
        }
        // L^T x = z
        for i in (0..self.n).rev() {
            let hi = (i + self.hb).min(self.n - 1);
            let mut sum = x[i];
            for k in (i + 1)..=hi {
                sum -= self.data[k * w + (i + self.hb - k)] * x[k];
            }
            x[i] = sum / self.data[i * w + self.hb];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_spd() {
        // -u'' discretization plus identity
        let n = 50;
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 3.0);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.matvec(&x_true);
        let x = a.clone().cholesky().unwrap().solve(&b);
        let err = x
            .iter()
            .zip(&x_true)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn wider_band_round_trip() {
        let n = 40;
        let hb = 7;
        let mut a = BandMatrix::zeros(n, hb);
        for i in 0..n {
            a.add(i, i, 10.0 + i as f64 * 0.01);
            for d in 1..=hb {
                if i + d < n {
                    a.add(i + d, i, -0.5 / d as f64);
                }
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| 1.0 - (i % 5) as f64).collect();
        let b = a.matvec(&x_true);
        let x = a.clone().cholesky().unwrap().solve(&b);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).abs() < 1e-11);
        }
    }

    #[test]
    fn reports_singularity() {
        let n = 5;
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 1.0);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
        }
        // row of near-cancellation: make the matrix indefinite
        a.add(2, 2, -2.5);
        assert!(matches!(a.cholesky(), Err(Error::SingularSystem(_))));
    }
}
