//! Finite circular channel transfer matrices.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::SparseHermitian;
use crate::params::{ChannelKind, Model, SystemParams};

/// `N × NK` transfer matrix of a circular network.
///
/// Row `j` (cell-site `j`) sees the users of cell `j` through `a_j`, the users
/// of cell `j−1` through `α b_j` and, for the Wyner model, the users of cell
/// `j+1` through `α c_j`.  Column `cell·K + user` addresses one user.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    pub model: Model,
    pub n_cells: usize,
    pub k_users: usize,
    pub alpha: f64,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    c: Vec<Complex64>,
}

/// Random stream used for trial `trial` of a seeded ensemble.
pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn complex_gaussian<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

impl ChannelMatrix {
    fn draw<R: Rng>(
        model: Model,
        channel: ChannelKind,
        alpha: f64,
        n_cells: usize,
        k_users: usize,
        rng: &mut R,
    ) -> Self {
        let len = n_cells * k_users;
        let fill = |rng: &mut R| -> Vec<Complex64> {
            match channel {
                ChannelKind::Gaussian => vec![Complex64::new(1.0, 0.0); len],
                ChannelKind::Rayleigh => (0..len).map(|_| complex_gaussian(rng)).collect(),
            }
        };
        let a = fill(rng);
        let b = fill(rng);
        let c = match model {
            Model::Wyner => fill(rng),
            Model::SoftHandoff => Vec::new(),
        };
        ChannelMatrix {
            model,
            n_cells,
            k_users,
            alpha,
            a,
            b,
            c,
        }
    }

    /// Blocks of row `j` as `(cell, coefficients)`; coefficients include `α`.
    fn row_blocks(&self, j: usize) -> Vec<(usize, Vec<Complex64>)> {
        let n = self.n_cells;
        let k = self.k_users;
        let slice = |v: &[Complex64], scale: f64| -> Vec<Complex64> {
            v[j * k..(j + 1) * k].iter().map(|x| x * scale).collect()
        };
        let mut blocks = vec![
            (j, slice(&self.a, 1.0)),
            ((j + n - 1) % n, slice(&self.b, self.alpha)),
        ];
        if self.model == Model::Wyner {
            blocks.push(((j + 1) % n, slice(&self.c, self.alpha)));
        }
        blocks
    }

    /// Single entry `H[row][col]`.
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        let (cell, user) = (col / self.k_users, col % self.k_users);
        self.row_blocks(row)
            .into_iter()
            .filter(|(c, _)| *c == cell)
            .map(|(_, coeffs)| coeffs[user])
            .sum()
    }

    /// Row-major dense copy of `H`.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let cols = self.n_cells * self.k_users;
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_cells * cols];
        for j in 0..self.n_cells {
            for (cell, coeffs) in self.row_blocks(j) {
                for (u, v) in coeffs.into_iter().enumerate() {
                    out[j * cols + cell * self.k_users + u] += v;
                }
            }
        }
        out
    }

    /// The Gram matrix `H H†`.
    pub fn gram(&self) -> SparseHermitian {
        let n = self.n_cells;
        let blocks: Vec<_> = (0..n).map(|j| self.row_blocks(j)).collect();
        let reach: usize = match self.model {
            Model::Wyner => 2,
            Model::SoftHandoff => 1,
        };
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            let mut partners: Vec<usize> = (0..=2 * reach)
                .map(|d| (i + n + d - reach) % n)
                .filter(|&m| m <= i)
                .collect();
            partners.sort_unstable();
            partners.dedup();
            for m in partners {
                let mut acc = Complex64::new(0.0, 0.0);
                for (ci, vi) in &blocks[i] {
                    for (cm, vm) in &blocks[m] {
                        if ci == cm {
                            acc += vi.iter().zip(vm).map(|(x, y)| x * y.conj()).sum::<Complex64>();
                        }
                    }
                }
                if acc != Complex64::new(0.0, 0.0) || m == i {
                    rows[i].push((m, acc));
                }
            }
        }
        SparseHermitian::from_lower_rows(rows)
    }
}

fn check_cells(model: Model, n_cells: usize) -> Result<()> {
    if n_cells < model.min_cells() {
        return Err(Error::TooFewCells {
            model,
            min: model.min_cells(),
            got: n_cells,
        });
    }
    Ok(())
}

/// Draws one channel realisation; deterministic in `(params, n_cells, seed)`.
pub fn build_matrix(params: &SystemParams, n_cells: usize, seed: u64) -> Result<ChannelMatrix> {
    params.validate()?;
    check_cells(params.model, n_cells)?;
    let mut rng = trial_rng(seed, 0);
    Ok(build_with_rng(params, n_cells, &mut rng))
}

pub(crate) fn build_with_rng<R: Rng>(params: &SystemParams, n_cells: usize, rng: &mut R) -> ChannelMatrix {
    ChannelMatrix::draw(
        params.model,
        params.channel,
        params.alpha,
        n_cells,
        params.active_users(),
        rng,
    )
}

/// `(1/N) log2 det(I + (p_eff/K) H H†)` for one realisation.
pub fn gram_eigen_rate(h: &ChannelMatrix, p_eff: f64) -> Result<f64> {
    if !(p_eff >= 0.0) {
        return Err(Error::Validation(format!(
            "effective power must be non-negative, got {p_eff}"
        )));
    }
    let scale = p_eff / h.k_users as f64;
    Ok(h.gram().log2_det_shifted(scale)? / h.n_cells as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Protocol;

    fn re_rows(h: &ChannelMatrix) -> Vec<Vec<f64>> {
        let cols = h.n_cells * h.k_users;
        h.to_dense()
            .chunks(cols)
            .map(|r| r.iter().map(|z| z.re).collect())
            .collect()
    }

    #[test]
    fn wyner_without_interference_is_the_identity() {
        let p = SystemParams::gaussian(Model::Wyner, 0.0, 10.0, 3.0);
        let h = build_matrix(&p, 4, 1).unwrap();
        for (i, row) in re_rows(&h).iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn wyner_gaussian_is_circulant() {
        let p = SystemParams::gaussian(Model::Wyner, 0.5, 10.0, 3.0);
        let h = build_matrix(&p, 4, 1).unwrap();
        let rows = re_rows(&h);
        assert_eq!(rows[0], vec![1.0, 0.5, 0.0, 0.5]);
        assert_eq!(rows[2], vec![0.0, 0.5, 1.0, 0.5]);
    }

    #[test]
    fn soft_handoff_two_users() {
        let p = SystemParams::gaussian(Model::SoftHandoff, 1.0, 10.0, 3.0).with_users(2);
        let h = build_matrix(&p, 3, 1).unwrap();
        let rows = re_rows(&h);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], vec![1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
        assert_eq!(rows[1], vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn too_few_cells_is_rejected() {
        let p = SystemParams::gaussian(Model::Wyner, 0.5, 10.0, 3.0);
        assert!(matches!(build_matrix(&p, 2, 0), Err(Error::TooFewCells { .. })));
        let sh = SystemParams::gaussian(Model::SoftHandoff, 0.5, 10.0, 3.0);
        assert!(build_matrix(&sh, 2, 0).is_ok());
        assert!(build_matrix(&sh, 1, 0).is_err());
    }

    #[test]
    fn tdma_uses_one_column_per_cell() {
        let p = SystemParams::rayleigh(Model::Wyner, 0.3, 10.0, 3.0, 4).with_protocol(Protocol::Tdma);
        let h = build_matrix(&p, 5, 9).unwrap();
        assert_eq!(h.k_users, 1);
    }

    #[test]
    fn identity_rate_and_zero_power() {
        let p = SystemParams::gaussian(Model::Wyner, 0.0, 10.0, 3.0);
        let h = build_matrix(&p, 4, 0).unwrap();
        assert!((gram_eigen_rate(&h, 10.0).unwrap() - 11f64.log2()).abs() < 1e-12);
        assert_eq!(gram_eigen_rate(&h, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn wyner_rate_matches_circulant_spectrum() {
        let p = SystemParams::gaussian(Model::Wyner, 0.5, 10.0, 3.0);
        let h = build_matrix(&p, 4, 0).unwrap();
        let want: f64 = (0..4)
            .map(|k| {
                let c = (2.0 * std::f64::consts::PI * k as f64 / 4.0).cos();
                (1.0 + 10.0 * (1.0 + c).powi(2)).log2()
            })
            .sum::<f64>()
            / 4.0;
        assert!((gram_eigen_rate(&h, 10.0).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_is_reproducible_and_seed_dependent() {
        let p = SystemParams::rayleigh(Model::Wyner, 0.7, 10.0, 3.0, 3);
        let x = build_matrix(&p, 6, 42).unwrap();
        let y = build_matrix(&p, 6, 42).unwrap();
        let z = build_matrix(&p, 6, 43).unwrap();
        assert_eq!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn entry_agrees_with_dense_copy() {
        let p = SystemParams::rayleigh(Model::SoftHandoff, 0.6, 10.0, 3.0, 2);
        let h = build_matrix(&p, 4, 5).unwrap();
        let dense = h.to_dense();
        for r in 0..4 {
            for col in 0..8 {
                assert_eq!(h.entry(r, col), dense[r * 8 + col]);
            }
        }
    }
}
