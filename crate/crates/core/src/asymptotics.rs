//! Low- and high-SNR characterisations and the cut-set bound.
//!
//! At low SNR a rate is summarised by its minimum energy per bit
//! `Eb/N0min = ln2/Ḟ(0)` and its wideband slope `S0 = 2Ḟ(0)²/(−F̈(0))`.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::oblivious::solve_fixed_point;
use crate::params::{linear_to_db, ChannelKind, Model, Protocol, SystemParams, INFINITE_USERS};
use crate::rates::{inverse_users, r_sh_tdma_rayleigh, r_sh_wb_upper, MonteCarloCfg, RateFunctional};
use crate::solver::bisect;

/// Power at which the high-SNR offset is read off.
const HIGH_SNR_POWER: f64 = 1e8;

/// Minimum energy per bit (linear) and wideband slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowSnrChar {
    pub eb_n0_min: f64,
    pub s0: f64,
}

impl LowSnrChar {
    pub fn new(eb_n0_min: f64, s0: f64) -> Result<Self> {
        if !(eb_n0_min > 0.0) || !(s0 > 0.0) {
            return Err(Error::Validation(format!(
                "low-SNR pair must be positive, got ({eb_n0_min}, {s0})"
            )));
        }
        Ok(LowSnrChar { eb_n0_min, s0 })
    }

    pub fn eb_n0_min_db(&self) -> f64 {
        linear_to_db(self.eb_n0_min)
    }
}

/// Low-SNR pair of local plus central decoding with its time-sharing data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecLowSnrChar {
    pub base: LowSnrChar,
    /// Backhaul per unit time while decoding centrally, `max{C, r̃_m}`.
    pub r_m: f64,
    pub r_tilde_m: f64,
    /// Fraction of time spent decoding locally.
    pub lambda_o: f64,
}

/// High-SNR slope and offset (in 3 dB units) of `R = S∞(log2 P − L∞) + o(1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrChar {
    pub s_inf: f64,
    pub l_inf: f64,
}

/// One power point of [`highsnr_scaling_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRow {
    pub p_db: f64,
    pub c: f64,
    pub unlimited: f64,
    pub oblivious: f64,
    pub gap: f64,
}

/// `min{C, R}` where `R` may be replaced by an upper bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutsetBound {
    pub value: f64,
    pub rate_term: f64,
    /// Set when `rate_term` is an upper bound on the unlimited rate.
    pub rate_is_upper_bound: bool,
}

fn inv_k(params: &SystemParams) -> f64 {
    inverse_users(params.active_users())
}

/// Unlimited-backhaul low-SNR pair.
pub fn lowsnr_unlimited(params: &SystemParams) -> LowSnrChar {
    let a2 = params.alpha * params.alpha;
    let gain = params.array_gain();
    let s0 = match (params.channel, params.model) {
        (ChannelKind::Gaussian, Model::Wyner) => {
            2.0 * (1.0 + 2.0 * a2).powi(2) / (1.0 + 12.0 * a2 + 6.0 * a2 * a2)
        }
        (ChannelKind::Gaussian, Model::SoftHandoff) => 2.0 * (1.0 + a2).powi(2) / (1.0 + 4.0 * a2 + a2 * a2),
        (ChannelKind::Rayleigh, _) => 2.0 / (1.0 + inv_k(params)),
    };
    LowSnrChar {
        eb_n0_min: LN_2 / gain,
        s0,
    }
}

/// Effect of finite backhaul `c` on a low-SNR pair under oblivious
/// processing: `Eb/N0min/(1 − q)` and `S0/(1 + S0 q/(1 − q))`, `q = 2^{−c}`.
pub fn lowsnr_oblivious(base: &LowSnrChar, c: f64) -> Result<LowSnrChar> {
    if c.is_nan() || c < 0.0 {
        return Err(Error::Validation(format!(
            "backhaul must be non-negative, got {c}"
        )));
    }
    if c == 0.0 {
        return Err(Error::ZeroBackhaul);
    }
    if c.is_infinite() {
        return Ok(*base);
    }
    let q = (-c * LN_2).exp();
    let keep = -(-c * LN_2).exp_m1();
    Ok(LowSnrChar {
        eb_n0_min: base.eb_n0_min / keep,
        s0: base.s0 / (1.0 + base.s0 * q / keep),
    })
}

/// Direct closed forms of the oblivious low-SNR pair at the scenario's
/// backhaul, independent of [`lowsnr_oblivious`].
pub fn lowsnr_oblivious_closed(params: &SystemParams) -> Result<LowSnrChar> {
    params.validate()?;
    let c = params.c_backhaul;
    if c == 0.0 {
        return Err(Error::ZeroBackhaul);
    }
    let q = if c.is_infinite() { 0.0 } else { (-c * LN_2).exp() };
    let keep = 1.0 - q;
    let a2 = params.alpha * params.alpha;
    let s0 = match (params.channel, params.model) {
        (ChannelKind::Gaussian, Model::Wyner) => {
            2.0 * (1.0 + 2.0 * a2).powi(2) * keep
                / (1.0 + 12.0 * a2 + 6.0 * a2 * a2 + (1.0 - 4.0 * a2 + 2.0 * a2 * a2) * q)
        }
        (ChannelKind::Gaussian, Model::SoftHandoff) => {
            2.0 * (1.0 + a2).powi(2) * keep / (1.0 + 4.0 * a2 + a2 * a2 + (1.0 + a2 * a2) * q)
        }
        (ChannelKind::Rayleigh, _) => {
            let ik = inv_k(params);
            2.0 * keep / (1.0 + ik + (1.0 - ik) * q)
        }
    };
    Ok(LowSnrChar {
        eb_n0_min: LN_2 / (params.array_gain() * keep),
        s0,
    })
}

/// Low-SNR pair of purely local decoding (`β = 0`).
pub fn lowsnr_local_decode(params: &SystemParams) -> LowSnrChar {
    let a2 = params.alpha * params.alpha;
    let denom = match (params.channel, params.model) {
        (ChannelKind::Gaussian, Model::Wyner) => 1.0 + 4.0 * a2,
        (ChannelKind::Gaussian, Model::SoftHandoff) => 1.0 + 2.0 * a2,
        (ChannelKind::Rayleigh, Model::Wyner) => 1.0 + 4.0 * a2 + 0.5 * inv_k(params),
        (ChannelKind::Rayleigh, Model::SoftHandoff) => 1.0 + 2.0 * a2 + inv_k(params),
    };
    LowSnrChar {
        eb_n0_min: LN_2,
        s0: 2.0 / denom,
    }
}

/// Root of `2^{−r}(1 + r ln2) = 1 − Eb_unl/Eb_d`, the central-decoding
/// backhaul beyond which local decoding no longer helps at low SNR.
///
/// Infinite when there is no interference.
pub fn solve_r_tilde_m(params: &SystemParams) -> Result<f64> {
    params.validate()?;
    let rhs = 1.0 - lowsnr_unlimited(params).eb_n0_min / lowsnr_local_decode(params).eb_n0_min;
    if rhs <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let lhs = |r: f64| (-r * LN_2).exp() * (1.0 + r * LN_2);
    let mut hi = 1.0;
    while lhs(hi) > rhs {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::numeric("r_tilde_m", "no bracket found"));
        }
    }
    bisect(|r| Ok(rhs - lhs(r)), 0.0, hi, 1e-13, 200)
}

/// Time-shared local and central decoding at low SNR.
///
/// Central decoding runs at backhaul `r_m = max{C, r̃_m}` for a fraction
/// `1 − λ_o = C/r_m` of the time; the pairs combine as
/// `1/Eb = λ/Eb_d + (1−λ)/Eb_o` and
/// `1/(S0 Eb²) = λ/(S0_d Eb_d²) + (1−λ)/(S0_o Eb_o²)`.
pub fn lowsnr_dec(params: &SystemParams) -> Result<DecLowSnrChar> {
    params.validate()?;
    let c = params.c_backhaul;
    if c == 0.0 {
        return Err(Error::ZeroBackhaul);
    }
    let local = lowsnr_local_decode(params);
    let r_tilde_m = solve_r_tilde_m(params)?;
    if r_tilde_m.is_infinite() {
        return Ok(DecLowSnrChar {
            base: local,
            r_m: f64::INFINITY,
            r_tilde_m,
            lambda_o: 1.0,
        });
    }
    let r_m = c.max(r_tilde_m);
    let lambda = if c.is_infinite() { 0.0 } else { 1.0 - c / r_m };
    let central = lowsnr_oblivious(&lowsnr_unlimited(params), r_m)?;
    let inv_eb = lambda / local.eb_n0_min + (1.0 - lambda) / central.eb_n0_min;
    let eb = 1.0 / inv_eb;
    let curv = lambda / (local.s0 * local.eb_n0_min.powi(2))
        + (1.0 - lambda) / (central.s0 * central.eb_n0_min.powi(2));
    Ok(DecLowSnrChar {
        base: LowSnrChar {
            eb_n0_min: eb,
            s0: 1.0 / (eb * eb * curv),
        },
        r_m,
        r_tilde_m,
        lambda_o: lambda,
    })
}

/// `(Eb/N0 dB, R)` on the affine low-SNR approximation, clamped at 0.
pub fn affine_lowsnr_curve(ch: &LowSnrChar, eb_n0_grid_db: &[f64]) -> Vec<(f64, f64)> {
    let per_db = ch.s0 / (10.0 * 2f64.log10());
    let floor = ch.eb_n0_min_db();
    eb_n0_grid_db
        .iter()
        .map(|&x| (x, (per_db * (x - floor)).max(0.0)))
        .collect()
}

/// `(P/R(P) in dB, R(P))` for each power, skipping points where `R ≤ 0`.
pub fn exact_lowsnr_curve<F>(mut rate_fn: F, p_grid: &[f64]) -> Result<Vec<(f64, f64)>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut out = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let r = rate_fn(p)?;
        if r > 0.0 {
            out.push((linear_to_db(p / r), r));
        }
    }
    Ok(out)
}

/// Unit slope and offset `L∞ = log2 P − R(P)` read off at large `P`.
pub fn highsnr_unlimited(params: &SystemParams) -> Result<HighSnrChar> {
    let at = params.with_power(HIGH_SNR_POWER);
    let r = RateFunctional::for_params(&at, &MonteCarloCfg::default())?
        .unlimited()?
        .mean;
    Ok(HighSnrChar {
        s_inf: 1.0,
        l_inf: HIGH_SNR_POWER.log2() - r,
    })
}

/// Oblivious rate with backhaul `C(P) = S∞(log2 P − L∞) + θ(P)` against the
/// unlimited rate, for each power in `p_grid_db`.
pub fn highsnr_scaling_check<T>(params: &SystemParams, p_grid_db: &[f64], theta: T) -> Result<Vec<ScalingRow>>
where
    T: Fn(f64) -> f64,
{
    let hs = highsnr_unlimited(params)?;
    p_grid_db
        .iter()
        .map(|&p_db| {
            let p = crate::params::db_to_linear(p_db);
            let c = (hs.s_inf * (p.log2() - hs.l_inf) + theta(p)).max(0.0);
            let f = RateFunctional::for_params(&params.with_power(p), &MonteCarloCfg::default())?;
            let unlimited = f.unlimited()?.mean;
            let oblivious = solve_fixed_point(&f, c)?.rate;
            Ok(ScalingRow {
                p_db,
                c,
                unlimited,
                oblivious,
                gap: unlimited - oblivious,
            })
        })
        .collect()
}

/// Upper bound `min{C, R}` on every scheme's per-cell sum-rate.
///
/// Where `R` has no exact form, a known upper bound on it is used instead:
/// the soft-handoff fading bound for soft-handoff with finitely many users
/// (TDMA counts as one user), and `log2(1 + (1 + 2α²)P)` for Wyner fading
/// with finitely many users.
pub fn cutset_bound(params: &SystemParams) -> Result<CutsetBound> {
    params.validate()?;
    let (alpha, p) = (params.alpha, params.p);
    let exact = |r: f64| (r, false);
    let (rate_term, rate_is_upper_bound) = match (params.channel, params.model) {
        (ChannelKind::Gaussian, _) => exact(
            RateFunctional::for_params(params, &MonteCarloCfg::default())?
                .unlimited()?
                .mean,
        ),
        (ChannelKind::Rayleigh, Model::SoftHandoff) if params.protocol == Protocol::Tdma && alpha == 1.0 => {
            exact(r_sh_tdma_rayleigh(p)?)
        }
        (ChannelKind::Rayleigh, Model::SoftHandoff) => {
            let k = params.active_users();
            (r_sh_wb_upper(p, k, alpha), k != INFINITE_USERS)
        }
        (ChannelKind::Rayleigh, Model::Wyner) => (
            (Model::Wyner.array_gain(alpha) * p).ln_1p() / LN_2,
            params.active_users() != INFINITE_USERS,
        ),
    };
    Ok(CutsetBound {
        value: params.c_backhaul.min(rate_term),
        rate_term,
        rate_is_upper_bound,
    })
}
