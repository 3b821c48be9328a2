//! Log-determinants of the sparse Hermitian Gram matrices produced by the
//! circular channel models.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hermitian matrix stored by its lower triangle, one sparse row per index.
///
/// The Gram matrix of a circular banded channel is banded except for a few
/// wrap-around entries in its last rows.  Factorising inside the row envelope
/// (skyline storage) keeps the cost at `O(n w²)` for bandwidth `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    n: usize,
    /// `rows[i]` holds `(j, G[i][j])` for `j <= i`, sorted by `j`.
    rows: Vec<Vec<(usize, Complex64)>>,
    first: Vec<usize>,
    offset: Vec<usize>,
    envelope: usize,
}

impl SparseHermitian {
    /// Builds the matrix from lower-triangle rows; entries with `j > i` are
    /// rejected, duplicates are summed.
    pub fn from_lower_rows(mut rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let n = rows.len();
        for (i, row) in rows.iter_mut().enumerate() {
            assert!(row.iter().all(|&(j, _)| j <= i), "entry above the diagonal");
            row.sort_by_key(|&(j, _)| j);
            row.dedup_by(|next, kept| {
                if next.0 == kept.0 {
                    kept.1 += next.1;
                    true
                } else {
                    false
                }
            });
        }
        let first: Vec<usize> = rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.first().map_or(i, |&(j, _)| j.min(i)))
            .collect();
        let mut offset = Vec::with_capacity(n);
        let mut envelope = 0;
        for (i, &f) in first.iter().enumerate() {
            offset.push(envelope);
            envelope += i - f;
        }
        SparseHermitian {
            n,
            rows,
            first,
            offset,
            envelope,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `G[i][j]` for any `i, j`.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let (r, c, conj) = if j <= i { (i, j, false) } else { (j, i, true) };
        let v = self.rows[r]
            .iter()
            .find(|&&(k, _)| k == c)
            .map_or(Complex64::new(0.0, 0.0), |&(_, v)| v);
        if conj {
            v.conj()
        } else {
            v
        }
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        self.get(i, i).re
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for &(j, v) in &self.rows[i] {
                out[i * n + j] = v;
                out[j * n + i] = v.conj();
            }
        }
        out
    }

    /// Pivots of the `LDL†` factorisation of `I + scale·G`.
    pub fn ldl_pivots(&self, scale: f64) -> Result<Vec<f64>> {
        let n = self.n;
        let zero = Complex64::new(0.0, 0.0);
        let mut l = vec![zero; self.envelope];
        let mut d = vec![0.0; n];
        for i in 0..n {
            let fi = self.first[i];
            let (done, rest) = l.split_at_mut(self.offset[i]);
            let li = &mut rest[..i - fi];
            let mut diag = 1.0;
            for &(j, v) in &self.rows[i] {
                if j == i {
                    diag += scale * v.re;
                } else {
                    li[j - fi] = v * scale;
                }
            }
            for j in fi..i {
                let fj = self.first[j];
                let lj = &done[self.offset[j]..self.offset[j] + (j - fj)];
                let mut s = li[j - fi];
                for k in fi.max(fj)..j {
                    s -= li[k - fi] * lj[k - fj].conj() * d[k];
                }
                li[j - fi] = s / d[j];
            }
            for k in fi..i {
                diag -= li[k - fi].norm_sqr() * d[k];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(Error::numeric(
                    "LDL factorisation",
                    format!("non-positive pivot {diag} at row {i}"),
                ));
            }
            d[i] = diag;
        }
        Ok(d)
    }

    /// `log2 det(I + scale·G)`.
    pub fn log2_det_shifted(&self, scale: f64) -> Result<f64> {
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok(self.ldl_pivots(scale)?.iter().map(|d| d.log2()).sum())
    }

    /// `log2 det` of every leading principal block of `I + scale·G`;
    /// entry `m` covers indices `0..m`.
    pub fn prefix_log2_dets(&self, scale: f64) -> Result<Vec<f64>> {
        let pivots = self.ldl_pivots(scale)?;
        let mut out = Vec::with_capacity(self.n + 1);
        let mut acc = 0.0;
        out.push(acc);
        for d in pivots {
            acc += d.log2();
            out.push(acc);
        }
        Ok(out)
    }
}

/// Cholesky `log2 det` of a dense real symmetric positive-definite matrix.
pub fn dense_log2_det(a: &[f64], n: usize) -> Result<f64> {
    let mut l = vec![0.0; n * n];
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::numeric(
                        "dense Cholesky",
                        format!("non-positive pivot {s} at row {i}"),
                    ));
                }
                l[i * n + i] = s.sqrt();
                total += s.log2();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn tridiagonal_circulant(n: usize, diag: f64, off: Complex64) -> SparseHermitian {
        let mut rows = vec![Vec::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            row.push((i, c(diag, 0.0)));
            if i > 0 {
                row.push((i - 1, off));
            }
        }
        // G[n-1][0] = conj(G[0][n-1]) = off for a Hermitian circulant
        rows[n - 1].push((0, off.conj()));
        SparseHermitian::from_lower_rows(rows)
    }

    #[test]
    fn identity_log_det() {
        let rows = (0..5).map(|i| vec![(i, c(1.0, 0.0))]).collect();
        let g = SparseHermitian::from_lower_rows(rows);
        let v = g.log2_det_shifted(3.0).unwrap();
        assert!((v - 5.0 * 4f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn circulant_matches_its_eigenvalues() {
        // Eigenvalues of a Hermitian circulant with symbol diag + 2 Re(off e^{iθ}).
        let n = 9;
        let off = c(0.3, 0.2);
        let g = tridiagonal_circulant(n, 1.5, off);
        let scale = 2.0;
        let want: f64 = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let lam = 1.5 + 2.0 * (off * Complex64::from_polar(1.0, th)).re;
                (1.0 + scale * lam).log2()
            })
            .sum();
        let got = g.log2_det_shifted(scale).unwrap();
        assert!((got - want).abs() < 1e-11, "{got} vs {want}");
    }

    #[test]
    fn duplicates_are_summed_and_dense_copy_is_hermitian() {
        let rows = vec![
            vec![(0, c(2.0, 0.0))],
            vec![(0, c(0.5, 0.1)), (0, c(0.5, 0.1)), (1, c(3.0, 0.0))],
        ];
        let g = SparseHermitian::from_lower_rows(rows);
        assert_eq!(g.get(1, 0), c(1.0, 0.2));
        assert_eq!(g.get(0, 1), c(1.0, -0.2));
        let d = g.to_dense();
        assert_eq!(d[1], c(1.0, -0.2));
        // det(I + G) = 3·4 − |1+0.2i|² = 12 − 1.04
        let v = g.log2_det_shifted(1.0).unwrap();
        assert!((v - (12.0f64 - 1.04).log2()).abs() < 1e-12);
    }

    #[test]
    fn prefix_dets_end_with_the_full_det() {
        let g = tridiagonal_circulant(7, 2.0, c(0.4, -0.3));
        let prefix = g.prefix_log2_dets(1.5).unwrap();
        assert_eq!(prefix.len(), 8);
        assert_eq!(prefix[0], 0.0);
        let full = g.log2_det_shifted(1.5).unwrap();
        assert!((prefix[7] - full).abs() < 1e-12);
        // first block is the scalar 1 + 1.5·2
        assert!((prefix[1] - 4f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn dense_cholesky_on_a_small_matrix() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let v = dense_log2_det(&a, 2).unwrap();
        assert!((v - 8f64.log2()).abs() < 1e-12);
        assert!(dense_log2_det(&[-1.0], 1).is_err());
    }
}
