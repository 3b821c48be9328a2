//! Achievable uplink rates of circular cellular networks whose cell-sites
//! reach a central processor over finite-capacity backhaul links.
//!
//! The crate covers the circular Wyner and soft-handoff models with unity or
//! Rayleigh-faded coefficients, the rate functionals `F(r)` that drive the
//! compress-and-forward fixed point, oblivious and local-decoding schemes,
//! and their low- and high-SNR characterisations.
//!
//! All powers are linear and all rates are in bits per channel use.

// `!(x > 0.0)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod channel;
pub mod error;
pub mod linalg;
pub mod local;
pub mod oblivious;
pub mod params;
pub mod quadrature;
pub mod rates;
pub mod solver;

pub use asymptotics::{
    affine_lowsnr_curve, cutset_bound, exact_lowsnr_curve, highsnr_scaling_check, highsnr_unlimited,
    lowsnr_dec, lowsnr_local_decode, lowsnr_oblivious, lowsnr_oblivious_closed, lowsnr_unlimited,
    solve_r_tilde_m, CutsetBound, DecLowSnrChar, HighSnrChar, LowSnrChar, ScalingRow,
};
pub use channel::{build_matrix, gram_eigen_rate, ChannelMatrix};
pub use error::{Error, Result};
pub use local::{
    r_d_fading, r_d_gaussian, r_d_sh_gaussian, r_d_wyner_gaussian, rate_dec_convexhull,
    rate_dec_fading_largek, rate_dec_timeshare, rate_sd, DecodeStrategy, DecodingSplit, LocalDecoder,
    LocalRateParams,
};
pub use oblivious::{
    rate_finite_n, rate_sh_fading_upper, rate_sh_gaussian_closed, rate_sh_tdma_rayleigh_limited,
    rate_single_user, rate_wyner_fading_largek, region_finite_n, region_minimizers, solve_fixed_point,
    RateResult, RegionResult, SubsetSearch, MAX_EXHAUSTIVE_CELLS,
};
pub use params::{db_to_linear, linear_to_db, ChannelKind, Model, Protocol, SystemParams, INFINITE_USERS};
pub use rates::{
    compression_gain, f_montecarlo, f_sh_gaussian, f_wyner_gaussian, r_sh_tdma_rayleigh, r_sh_wb_upper,
    unlimited_rate, unlimited_rate_with, Estimate, FunctionalKind, MonteCarloCfg, MonteCarloEnsemble,
    RateFunctional,
};
