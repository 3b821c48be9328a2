//! Cross-checks against independent dense and spectral computations.

use approx::assert_relative_eq;
use backhaul_core::{
    build_matrix, f_sh_gaussian, f_wyner_gaussian, gram_eigen_rate, rate_single_user, solve_fixed_point,
    Model, Protocol, RateFunctional, SystemParams,
};
use nalgebra::{Complex, DMatrix};

/// `(1/N) log2 det(I + (p/K) H H†)` by dense complex Cholesky.
fn dense_rate(h: &backhaul_core::ChannelMatrix, p: f64) -> f64 {
    let rows = h.n_cells;
    let cols = h.n_cells * h.k_users;
    let dense = h.to_dense();
    let hm = DMatrix::from_fn(rows, cols, |i, j| dense[i * cols + j]);
    let scale = Complex::new(p / h.k_users as f64, 0.0);
    let a = DMatrix::<Complex<f64>>::identity(rows, rows) + &hm * hm.adjoint() * scale;
    let l = a.cholesky().expect("positive definite").unpack();
    let log2_det: f64 = (0..rows).map(|i| 2.0 * l[(i, i)].re.log2()).sum();
    log2_det / rows as f64
}

#[test]
fn sparse_log_det_matches_dense_cholesky() {
    let cases = [
        SystemParams::gaussian(Model::Wyner, 0.7, 10.0, 3.0),
        SystemParams::gaussian(Model::SoftHandoff, 1.0, 100.0, 3.0),
        SystemParams::rayleigh(Model::Wyner, 0.4, 10.0, 3.0, 1),
        SystemParams::rayleigh(Model::Wyner, 0.9, 31.6, 3.0, 4),
        SystemParams::rayleigh(Model::SoftHandoff, 0.5, 3.0, 3.0, 3),
        SystemParams::rayleigh(Model::SoftHandoff, 0.8, 10.0, 3.0, 6).with_protocol(Protocol::Tdma),
    ];
    for (i, p) in cases.iter().enumerate() {
        for n in [3, 4, 7, 16, 33] {
            let h = build_matrix(p, n, 100 + i as u64).unwrap();
            let sparse = gram_eigen_rate(&h, p.p).unwrap();
            assert_relative_eq!(sparse, dense_rate(&h, p.p), epsilon = 1e-10);
        }
    }
}

#[test]
fn large_circle_matches_wyner_spectrum_integral() {
    for (alpha, p) in [(0.0, 10.0), (0.3, 1.0), (0.5, 10.0), (1.0, 100.0)] {
        let params = SystemParams::gaussian(Model::Wyner, alpha, p, 3.0);
        let h = build_matrix(&params, 512, 0).unwrap();
        let finite = gram_eigen_rate(&h, p).unwrap();
        let integral = f_wyner_gaussian(f64::INFINITY, &params).unwrap();
        assert_relative_eq!(finite, integral, epsilon = 1e-8);
    }
}

#[test]
fn large_circle_matches_soft_handoff_closed_form() {
    for (alpha, p) in [(0.0, 10.0), (0.4, 1.0), (1.0, 10.0)] {
        let params = SystemParams::gaussian(Model::SoftHandoff, alpha, p, 3.0);
        let h = build_matrix(&params, 512, 0).unwrap();
        let finite = gram_eigen_rate(&h, p).unwrap();
        assert_relative_eq!(finite, f_sh_gaussian(f64::INFINITY, &params), epsilon = 1e-8);
    }
}

#[test]
fn single_user_fixed_point_matches_closed_form() {
    // With α = 0 the fixed point is log2((1 + P)2^C / (2^C + P)).
    for p in [0.1, 1.0, 10.0, 1000.0] {
        for c in [0.25, 1.0, 3.0, 8.0] {
            let want = ((1.0 + p) * 2f64.powf(c) / (2f64.powf(c) + p)).log2();
            assert_relative_eq!(rate_single_user(p, c), want, epsilon = 1e-12);
            let f = RateFunctional::WynerGaussian { alpha: 0.0, p };
            assert_relative_eq!(solve_fixed_point(&f, c).unwrap().rate, want, epsilon = 1e-9);
        }
    }
}
