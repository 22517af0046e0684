//! Zero-forcing reception for multiple robots sharing one multi-antenna server.

use num_complex::Complex;

use crate::error::{GscloError, Result};
use crate::num::Real;

/// Channel matrix `H_t` of one frame, stored column-wise: `columns[k]` is the
/// `N`-antenna channel of robot `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiAntennaChannel<F> {
    num_antennas: usize,
    columns: Vec<Vec<Complex<F>>>,
}

impl<F: Real> MultiAntennaChannel<F> {
    pub fn new(num_antennas: usize, columns: Vec<Vec<Complex<F>>>) -> Result<Self> {
        if num_antennas == 0 || columns.is_empty() {
            return Err(GscloError::InvalidArgument("need at least one antenna and one robot".into()));
        }
        if columns.len() > num_antennas {
            return Err(GscloError::InvalidArgument(format!(
                "{} robots exceed {} antennas",
                columns.len(),
                num_antennas
            )));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != num_antennas) {
            return Err(GscloError::LengthMismatch {
                expected: num_antennas,
                actual: c.len(),
            });
        }
        Ok(Self {
            num_antennas,
            columns,
        })
    }

    pub fn num_antennas(&self) -> usize {
        self.num_antennas
    }

    pub fn num_robots(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, k: usize) -> &[Complex<F>] {
        &self.columns[k]
    }
}

/// Zero-forcing combiner rows `w_k^H` and the effective per-robot gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroForcing<F> {
    /// Row `k` is `w_k^H`, the `k`-th row of `(H^H H)^{-1} H^H`.
    pub combiners: Vec<Vec<Complex<F>>>,
    /// `H_k = |w_k^H h_k|² / ‖w_k‖²`.
    pub gains: Vec<F>,
}

fn dot<F: Real>(row: &[Complex<F>], col: &[Complex<F>]) -> Complex<F> {
    row.iter().zip(col).fold(Complex::new(F::zero(), F::zero()), |acc, (&w, &h)| acc + w * h)
}

/// Inverts a square complex matrix by Gauss-Jordan elimination with
/// partial pivoting. `None` when a pivot falls below `tol`.
fn invert<F: Real>(mut m: Vec<Vec<Complex<F>>>, tol: F) -> Option<Vec<Vec<Complex<F>>>> {
    let n = m.len();
    let zero = Complex::new(F::zero(), F::zero());
    let one = Complex::new(F::one(), F::zero());
    let mut inv: Vec<Vec<Complex<F>>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { one } else { zero }).collect())
        .collect();
    for col in 0..n {
        let pivot_row = (col..n).max_by(|&i, &j| {
            m[i][col]
                .norm()
                .partial_cmp(&m[j][col].norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if !(m[pivot_row][col].norm() > tol) {
            return None;
        }
        m.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let p = m[col][col];
        for j in 0..n {
            m[col][j] /= p;
            inv[col][j] /= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = m[i][col];
            if f == zero {
                continue;
            }
            for j in 0..n {
                let (mc, ic) = (m[col][j], inv[col][j]);
                m[i][j] -= f * mc;
                inv[i][j] -= f * ic;
            }
        }
    }
    Some(inv)
}

/// Builds the zero-forcing receiver `(H^H H)^{-1} H^H` and the effective
/// gains it leaves each robot.
pub fn zf_effective_gains<F: Real>(channel: &MultiAntennaChannel<F>) -> Result<ZeroForcing<F>> {
    let k_robots = channel.num_robots();
    let cols = &channel.columns;
    // Gram matrix G_ij = h_i^H h_j.
    let gram: Vec<Vec<Complex<F>>> = (0..k_robots)
        .map(|i| {
            (0..k_robots)
                .map(|j| {
                    cols[i]
                        .iter()
                        .zip(&cols[j])
                        .fold(Complex::new(F::zero(), F::zero()), |acc, (hi, &hj)| acc + hi.conj() * hj)
                })
                .collect()
        })
        .collect();
    let scale = gram
        .iter()
        .enumerate()
        .map(|(i, row)| row[i].re)
        .fold(F::zero(), F::max);
    let tol = F::lit(1e-10) * scale;
    let inv = invert(gram, tol).ok_or(GscloError::RankDeficient { frame: 0 })?;
    let combiners: Vec<Vec<Complex<F>>> = (0..k_robots)
        .map(|k| {
            (0..channel.num_antennas)
                .map(|n| {
                    (0..k_robots).fold(Complex::new(F::zero(), F::zero()), |acc, j| {
                        acc + inv[k][j] * cols[j][n].conj()
                    })
                })
                .collect()
        })
        .collect();
    let gains = combiners
        .iter()
        .zip(cols)
        .map(|(w, h)| {
            let norm2: F = w.iter().map(|c| c.norm_sqr()).sum();
            dot(w, h).norm_sqr() / norm2
        })
        .collect();
    Ok(ZeroForcing { combiners, gains })
}

/// `w_i^H h_j` for every robot pair; the identity matrix under exact ZF.
pub fn zf_cross_terms<F: Real>(zf: &ZeroForcing<F>, channel: &MultiAntennaChannel<F>) -> Vec<Vec<Complex<F>>> {
    zf.combiners
        .iter()
        .map(|w| channel.columns.iter().map(|h| dot(w, h)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn scalar_channel() {
        let ch = MultiAntennaChannel::new(1, vec![vec![c(2.0, 0.0)]]).unwrap();
        let zf = zf_effective_gains(&ch).unwrap();
        assert_eq!(zf.combiners[0][0], c(0.5, 0.0));
        assert_eq!(zf.gains[0], 4.0);
    }

    #[test]
    fn orthogonal_columns_keep_their_norms() {
        let h1 = vec![c(1.0, 0.5), c(-0.3, 0.2), c(0.0, 0.0), c(0.0, 0.0)];
        let h2 = vec![c(0.0, 0.0), c(0.0, 0.0), c(0.7, -0.1), c(0.4, 0.9)];
        let n1: f64 = h1.iter().map(|v| v.norm_sqr()).sum();
        let n2: f64 = h2.iter().map(|v| v.norm_sqr()).sum();
        let ch = MultiAntennaChannel::new(4, vec![h1, h2]).unwrap();
        let zf = zf_effective_gains(&ch).unwrap();
        assert!((zf.gains[0] - n1).abs() < 1e-12 * n1);
        assert!((zf.gains[1] - n2).abs() < 1e-12 * n2);
    }

    #[test]
    fn nulls_interference() {
        let ch = MultiAntennaChannel::new(
            3,
            vec![
                vec![c(0.3, -1.2), c(0.8, 0.1), c(-0.5, 0.4)],
                vec![c(1.1, 0.2), c(-0.2, 0.7), c(0.6, 0.6)],
            ],
        )
        .unwrap();
        let zf = zf_effective_gains(&ch).unwrap();
        let cross = zf_cross_terms(&zf, &ch);
        for (i, row) in cross.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_deficient_rejected() {
        let h = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let h2: Vec<_> = h.iter().map(|v| v * c(0.0, 2.0)).collect();
        let ch = MultiAntennaChannel::new(2, vec![h, h2]).unwrap();
        assert!(matches!(zf_effective_gains(&ch), Err(GscloError::RankDeficient { .. })));
    }

    #[test]
    fn more_robots_than_antennas_rejected() {
        let col = vec![c(1.0, 0.0)];
        assert!(MultiAntennaChannel::new(1, vec![col.clone(), col]).is_err());
    }
}
