//! Rates of oblivious cell-sites that compress and forward their received
//! signal.
//!
//! For an infinite circle the rate is `F(r*)` where `F(r*) = C − r*`.  For a
//! finite circle the rate is the max over `r` of a min over cell subsets.

use crate::channel::build_matrix;
use crate::error::{Error, Result};
use crate::params::{ChannelKind, Model, Protocol, SystemParams};
use crate::rates::{compression_gain, inverse_users, RateFunctional};
use crate::solver::{bisect, golden_max};

const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

/// Largest circle for which all `2^N` cell subsets are enumerated.
pub const MAX_EXHAUSTIVE_CELLS: usize = 16;

/// A rate and the compression parameter that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateResult {
    pub rate: f64,
    pub r_star: f64,
    /// `|F(r*) − (C − r*)|`.
    pub residual: f64,
    /// Standard error propagated from a Monte Carlo functional.
    pub uncertainty: f64,
}

impl RateResult {
    fn zero() -> Self {
        RateResult {
            rate: 0.0,
            r_star: 0.0,
            residual: 0.0,
            uncertainty: 0.0,
        }
    }
}

fn check_backhaul(c: f64) -> Result<()> {
    if c.is_nan() || c < 0.0 {
        return Err(Error::Validation(format!(
            "backhaul capacity must be non-negative, got {c}"
        )));
    }
    Ok(())
}

/// Solves `F(r*) = C − r*` on `[0, C]` by bisection.
///
/// `G(r) = F(r) − C + r` is strictly increasing with `G(0) = −C` and
/// `G(C) = F(C) ≥ 0`, so the bracket always holds the unique root.  For a
/// Monte Carlo `F` the root of the sample mean is returned and its standard
/// error is divided by `1 + F'(r*)`.
pub fn solve_fixed_point(f: &RateFunctional, c: f64) -> Result<RateResult> {
    check_backhaul(c)?;
    if c == 0.0 {
        return Ok(RateResult::zero());
    }
    if c.is_infinite() {
        let u = f.unlimited()?;
        return Ok(RateResult {
            rate: u.mean,
            r_star: f64::INFINITY,
            residual: 0.0,
            uncertainty: u.std_err,
        });
    }
    let r_star = bisect(
        |r| Ok(f.value(r)? - c + r),
        0.0,
        c,
        BISECTION_TOL,
        BISECTION_MAX_ITER,
    )?;
    let est = f.eval(r_star)?;
    let uncertainty = if est.std_err > 0.0 {
        let h = 1e-4_f64.min(c / 2.0);
        let lo = (r_star - h).max(0.0);
        let hi = lo + 2.0 * h;
        let slope = ((f.value(hi)? - f.value(lo)?) / (hi - lo)).max(0.0);
        est.std_err / (1.0 + slope)
    } else {
        0.0
    };
    Ok(RateResult {
        rate: est.mean,
        r_star,
        residual: (est.mean - (c - r_star)).abs(),
        uncertainty,
    })
}

/// Single user, single cell-site: `log2(1 + p(1 − 2^{−c}) / (1 + p 2^{−c}))`.
pub fn rate_single_user(p: f64, c: f64) -> f64 {
    let gain = compression_gain(c);
    let tail = 1.0 - gain;
    (p * gain / (1.0 + p * tail)).ln_1p() / std::f64::consts::LN_2
}

fn closed_result(rate: f64, c: f64, f: &RateFunctional) -> Result<RateResult> {
    if c == 0.0 {
        return Ok(RateResult::zero());
    }
    let r_star = if c.is_infinite() {
        f64::INFINITY
    } else {
        (c - rate).max(0.0)
    };
    let residual = if c.is_infinite() {
        (f.unlimited()?.mean - rate).abs()
    } else {
        (f.value(r_star)? - rate).abs()
    };
    Ok(RateResult {
        rate,
        r_star,
        residual,
        uncertainty: 0.0,
    })
}

fn require(params: &SystemParams, model: Model, channel: ChannelKind) -> Result<()> {
    params.validate()?;
    if params.model != model || params.channel != channel {
        return Err(Error::Validation(format!(
            "expected the {model} model with a {channel} channel, got {} with {}",
            params.model, params.channel
        )));
    }
    Ok(())
}

/// Soft-handoff with unity coefficients, solved in closed form (the
/// non-negative root of the quadratic in `2^{r*}`).
pub fn rate_sh_gaussian_closed(params: &SystemParams) -> Result<RateResult> {
    require(params, Model::SoftHandoff, ChannelKind::Gaussian)?;
    let (a2, p, c) = (params.alpha * params.alpha, params.p, params.c_backhaul);
    let q = 1.0 - compression_gain(c);
    let num = 1.0
        + (1.0 + a2) * p
        + 2.0 * a2 * q * p * p
        + (1.0 + 2.0 * (1.0 + a2) * p + ((1.0 - a2).powi(2) + 4.0 * a2 * q) * p * p).sqrt();
    let den = 2.0 * (1.0 + q * p) * (1.0 + a2 * q * p);
    let f = RateFunctional::ShGaussian {
        alpha: params.alpha,
        p,
    };
    closed_result((num / den).log2(), c, &f)
}

/// Wyner with Rayleigh fading and many users per cell: the single-user rate
/// at the array power `(1 + 2α²)P`.  An upper bound for any user count.
pub fn rate_wyner_fading_largek(params: &SystemParams) -> Result<RateResult> {
    require(params, Model::Wyner, ChannelKind::Rayleigh)?;
    let gain = params.array_gain();
    let rate = rate_single_user(gain * params.p, params.c_backhaul);
    let f = RateFunctional::LargeKWyner {
        alpha: params.alpha,
        p: params.p,
    };
    closed_result(rate, params.c_backhaul, &f)
}

/// Upper bound for soft-handoff wideband Rayleigh fading with `K` users.
pub fn rate_sh_fading_upper(params: &SystemParams) -> Result<RateResult> {
    require(params, Model::SoftHandoff, ChannelKind::Rayleigh)?;
    let (a2, p, c) = (params.alpha * params.alpha, params.p, params.c_backhaul);
    let k = params.active_users();
    let inv_k = inverse_users(k);
    let q = 1.0 - compression_gain(c);
    let s = 1.0 + p * (1.0 + a2);
    let num =
        s + 2.0 * p * p * a2 * q * inv_k + (s * s - 4.0 * p * p * a2 * (1.0 - q) * inv_k).max(0.0).sqrt();
    let den = 2.0 * (1.0 + p * (1.0 + a2) * q + p * p * a2 * q * q * inv_k);
    let f = RateFunctional::ShWbUpperBound {
        alpha: params.alpha,
        p,
        k_users: k,
    };
    closed_result((num / den).log2(), c, &f)
}

/// Soft-handoff TDMA with Rayleigh fading at `α = 1`, solved numerically.
pub fn rate_sh_tdma_rayleigh_limited(params: &SystemParams) -> Result<RateResult> {
    require(params, Model::SoftHandoff, ChannelKind::Rayleigh)?;
    if params.protocol != Protocol::Tdma || params.alpha != 1.0 {
        return Err(Error::Validation(
            "requires the TDMA protocol and alpha = 1".into(),
        ));
    }
    solve_fixed_point(&RateFunctional::ShTdmaRayleigh { p: params.p }, params.c_backhaul)
}

/// How cell subsets are searched in the finite-circle region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetSearch {
    /// All `2^N` subsets; `N ≤ 16`.
    Exhaustive,
    /// Runs of consecutive cells only.
    Consecutive,
}

/// Minimum of the sum-rate bound over cell subsets at a fixed `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionResult {
    /// Per-cell value of the minimising bound.
    pub sum_rate: f64,
    /// Sorted cell indices of the minimising subset.
    pub minimizing_subset: Vec<usize>,
    pub r_used: f64,
}

struct RegionSetup {
    n: usize,
    c: f64,
    r: f64,
    scale: f64,
    gram: crate::linalg::SparseHermitian,
}

fn region_setup(n: usize, params: &SystemParams, r: f64) -> Result<RegionSetup> {
    params.validate()?;
    if params.channel != ChannelKind::Gaussian {
        return Err(Error::Unsupported(
            "the finite-circle region needs unity coefficients".into(),
        ));
    }
    let c = params.c_backhaul;
    if !c.is_finite() {
        return Err(Error::Validation(
            "the finite-circle region needs a finite backhaul".into(),
        ));
    }
    if !(0.0..=c).contains(&r) {
        return Err(Error::Validation(format!("r must lie in [0, {c}], got {r}")));
    }
    let h = build_matrix(params, n, 0)?;
    let scale = params.p * compression_gain(r) / h.k_users as f64;
    Ok(RegionSetup {
        n,
        c,
        r,
        scale,
        gram: h.gram(),
    })
}

/// `log2 det(I + scale·G_T)` for every subset `T`, indexed by bit mask.
fn all_principal_log_dets(setup: &RegionSetup) -> Result<Vec<f64>> {
    let n = setup.n;
    let a: Vec<f64> = setup
        .gram
        .to_dense()
        .iter()
        .enumerate()
        .map(|(idx, z)| setup.scale * z.re + if idx % (n + 1) == 0 { 1.0 } else { 0.0 })
        .collect();
    let mut out = vec![0.0; 1 << n];
    // Depth-first over membership decisions; `l` is the Cholesky factor of the
    // chosen members in order, grown one row at a time.
    let mut members: Vec<usize> = Vec::with_capacity(n);
    let mut l: Vec<Vec<f64>> = Vec::with_capacity(n);
    #[allow(clippy::too_many_arguments)]
    fn walk(
        i: usize,
        mask: usize,
        log_det: f64,
        n: usize,
        a: &[f64],
        members: &mut Vec<usize>,
        l: &mut Vec<Vec<f64>>,
        out: &mut [f64],
    ) -> Result<()> {
        if i == n {
            out[mask] = log_det;
            return Ok(());
        }
        walk(i + 1, mask, log_det, n, a, members, l, out)?;
        let m = members.len();
        let mut row = vec![0.0; m + 1];
        for k in 0..m {
            let mut s = a[i * n + members[k]];
            for j in 0..k {
                s -= row[j] * l[k][j];
            }
            row[k] = s / l[k][k];
        }
        let pivot = a[i * n + i] - row[..m].iter().map(|x| x * x).sum::<f64>();
        if !(pivot > 0.0) {
            return Err(Error::numeric("subset Cholesky", format!("pivot {pivot}")));
        }
        row[m] = pivot.sqrt();
        members.push(i);
        l.push(row);
        walk(
            i + 1,
            mask | 1 << i,
            log_det + pivot.log2(),
            n,
            a,
            members,
            l,
            out,
        )?;
        members.pop();
        l.pop();
        Ok(())
    }
    walk(0, 0, 0.0, n, &a, &mut members, &mut l, &mut out)?;
    Ok(out)
}

fn subset_indices(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// Per-cell bound `(|S|(C − r) + log2 det(I + P'G_{S^c})) / N` for every
/// subset `S`, indexed by bit mask.
fn all_subset_values(setup: &RegionSetup) -> Result<Vec<f64>> {
    let n = setup.n;
    let full = (1usize << n) - 1;
    let log_dets = all_principal_log_dets(setup)?;
    Ok((0..=full)
        .map(|s| {
            let size = s.count_ones() as f64;
            (size * (setup.c - setup.r) + log_dets[full & !s]) / n as f64
        })
        .collect())
}

const TIE_TOL: f64 = 1e-12;

/// Smaller value wins; near-ties go to the smaller subset, then the
/// lexicographically smaller one.
fn better(candidate: (f64, &[usize]), incumbent: (f64, &[usize])) -> bool {
    if candidate.0 < incumbent.0 - TIE_TOL {
        return true;
    }
    if candidate.0 > incumbent.0 + TIE_TOL {
        return false;
    }
    (candidate.1.len(), candidate.1) < (incumbent.1.len(), incumbent.1)
}

/// Minimum over cell subsets `S` of the per-cell sum-rate bound at a fixed
/// compression parameter `r`, on a circle of `n_cells` cells with unity
/// coefficients.
pub fn region_finite_n(
    n_cells: usize,
    params: &SystemParams,
    r: f64,
    search: SubsetSearch,
) -> Result<RegionResult> {
    if search == SubsetSearch::Exhaustive && n_cells > MAX_EXHAUSTIVE_CELLS {
        return Err(Error::TooManyCells {
            max: MAX_EXHAUSTIVE_CELLS,
            got: n_cells,
        });
    }
    let setup = region_setup(n_cells, params, r)?;
    let n = setup.n;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut offer = |value: f64, subset: Vec<usize>| match &best {
        Some((v, s)) if !better((value, &subset), (*v, s)) => {}
        _ => best = Some((value, subset)),
    };
    match search {
        SubsetSearch::Exhaustive => {
            for (mask, v) in all_subset_values(&setup)?.into_iter().enumerate() {
                offer(v, subset_indices(mask, n));
            }
        }
        SubsetSearch::Consecutive => {
            // Rotations of an arc share one log-det, so `S = {0..s}` stands
            // for every arc of length `s`; its complement is a leading block
            // up to rotation.
            let prefix = setup.gram.prefix_log2_dets(setup.scale)?;
            for s in 0..=n {
                let v = (s as f64 * (setup.c - setup.r) + prefix[n - s]) / n as f64;
                offer(v, (0..s).collect());
            }
        }
    }
    let (sum_rate, minimizing_subset) = best.expect("at least one subset");
    Ok(RegionResult {
        sum_rate,
        minimizing_subset,
        r_used: r,
    })
}

/// Every subset whose bound lies within `tol` of the minimum, by exhaustive
/// enumeration; returns the minimum and the subsets.
pub fn region_minimizers(
    n_cells: usize,
    params: &SystemParams,
    r: f64,
    tol: f64,
) -> Result<(f64, Vec<Vec<usize>>)> {
    if n_cells > MAX_EXHAUSTIVE_CELLS {
        return Err(Error::TooManyCells {
            max: MAX_EXHAUSTIVE_CELLS,
            got: n_cells,
        });
    }
    let setup = region_setup(n_cells, params, r)?;
    let values = all_subset_values(&setup)?;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let subsets = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= min + tol)
        .map(|(mask, _)| subset_indices(mask, n_cells))
        .collect();
    Ok((min, subsets))
}

/// Finite-circle oblivious rate: max over `r ∈ [0, C]` of the subset
/// minimum, by golden-section search (the objective is concave in `r`).
///
/// `residual` reports the width of the final search bracket.
pub fn rate_finite_n(n_cells: usize, params: &SystemParams, search: SubsetSearch) -> Result<RateResult> {
    params.validate()?;
    let c = params.c_backhaul;
    if c == 0.0 {
        return Ok(RateResult::zero());
    }
    const TOL: f64 = 1e-9;
    let (r_star, rate) = golden_max(
        |r| Ok(region_finite_n(n_cells, params, r, search)?.sum_rate),
        0.0,
        c,
        TOL,
    )?;
    // The maximum may sit on the boundary, where the golden interior points
    // never land.
    let at_c = region_finite_n(n_cells, params, c, search)?.sum_rate;
    let (r_star, rate) = if at_c > rate { (c, at_c) } else { (r_star, rate) };
    Ok(RateResult {
        rate,
        r_star,
        residual: TOL,
        uncertainty: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::f_sh_gaussian;

    #[test]
    fn single_user_values() {
        let v = rate_single_user(10.0, 3.0);
        assert!((v - (1.0 + 8.75 / 2.25f64).log2()).abs() < 1e-14);
        assert!((v - 2.2895).abs() < 1e-4);
        assert!((rate_single_user(10.0, f64::INFINITY) - 11f64.log2()).abs() < 1e-14);
        assert!((rate_single_user(1e12, 3.0) - 3.0).abs() < 1e-9);
        assert_eq!(rate_single_user(10.0, 0.0), 0.0);
    }

    #[test]
    fn fixed_point_without_interference_is_single_user() {
        for model in [Model::Wyner, Model::SoftHandoff] {
            let p = SystemParams::gaussian(model, 0.0, 10.0, 3.0);
            let f = RateFunctional::for_params(&p, &Default::default()).unwrap();
            let res = solve_fixed_point(&f, 3.0).unwrap();
            assert!((res.rate - rate_single_user(10.0, 3.0)).abs() < 1e-10);
            assert!(res.residual < 1e-9);
            assert!((res.rate - (3.0 - res.r_star)).abs() < 1e-9);
        }
    }

    #[test]
    fn fixed_point_edge_capacities() {
        let f = RateFunctional::WynerGaussian { alpha: 0.4, p: 10.0 };
        assert_eq!(solve_fixed_point(&f, 0.0).unwrap(), RateResult::zero());
        let big = solve_fixed_point(&f, 40.0).unwrap();
        let unlimited = f.unlimited().unwrap().mean;
        assert!((big.rate - unlimited).abs() < 1e-6);
        let inf = solve_fixed_point(&f, f64::INFINITY).unwrap();
        assert_eq!(inf.rate, unlimited);
        assert!(solve_fixed_point(&f, -1.0).is_err());
    }

    #[test]
    fn sh_closed_form_matches_the_solver() {
        let p = SystemParams::gaussian(Model::SoftHandoff, 0.4, 10.0, 3.0);
        let closed = rate_sh_gaussian_closed(&p).unwrap();
        let f = RateFunctional::ShGaussian { alpha: 0.4, p: 10.0 };
        let solved = solve_fixed_point(&f, 3.0).unwrap();
        assert!((closed.rate - solved.rate).abs() < 1e-9);
        assert!(closed.residual < 1e-12);
        let unl = rate_sh_gaussian_closed(&p.with_backhaul(60.0)).unwrap();
        assert!((unl.rate - f_sh_gaussian(f64::INFINITY, &p)).abs() < 1e-9);
        let a0 = rate_sh_gaussian_closed(&p.with_alpha(0.0)).unwrap();
        assert!((a0.rate - rate_single_user(10.0, 3.0)).abs() < 1e-14);
    }

    #[test]
    fn large_k_wyner_is_enhanced_single_user() {
        let p = SystemParams::rayleigh(Model::Wyner, 0.5, 10.0, 3.0, crate::INFINITE_USERS);
        let res = rate_wyner_fading_largek(&p).unwrap();
        assert!((res.rate - rate_single_user(15.0, 3.0)).abs() < 1e-14);
        assert!((res.rate - 2.4765).abs() < 1e-4);
        assert!(res.residual < 1e-12);
        let sat = rate_wyner_fading_largek(&p.with_power(1e15)).unwrap();
        assert!((sat.rate - 3.0).abs() < 1e-6);
    }

    #[test]
    fn sh_fading_upper_bound_limits() {
        let p = SystemParams::rayleigh(Model::SoftHandoff, 1.0, 10.0, 3.0, 1_000_000_000);
        let v = rate_sh_fading_upper(&p).unwrap();
        assert!((v.rate - rate_single_user(20.0, 3.0)).abs() < 1e-6);
        let k3 = p.with_users(3);
        let unl = rate_sh_fading_upper(&k3.with_backhaul(f64::INFINITY)).unwrap();
        assert!((unl.rate - crate::rates::r_sh_wb_upper(10.0, 3, 1.0)).abs() < 1e-12);
        let sat = rate_sh_fading_upper(&k3.with_power(1e12)).unwrap();
        assert!((sat.rate - 3.0).abs() < 1e-5);
        // It is the fixed point of the bound functional.
        let solved = solve_fixed_point(
            &RateFunctional::ShWbUpperBound {
                alpha: 1.0,
                p: 10.0,
                k_users: 3,
            },
            3.0,
        )
        .unwrap();
        let closed = rate_sh_fading_upper(&k3).unwrap();
        assert!((solved.rate - closed.rate).abs() < 1e-9);
    }

    #[test]
    fn tdma_limited_rate_limits() {
        let p = SystemParams::rayleigh(Model::SoftHandoff, 1.0, 10.0, 0.0, 1).with_protocol(Protocol::Tdma);
        assert_eq!(rate_sh_tdma_rayleigh_limited(&p).unwrap().rate, 0.0);
        let unl = crate::rates::r_sh_tdma_rayleigh(10.0).unwrap();
        let big = rate_sh_tdma_rayleigh_limited(&p.with_backhaul(60.0)).unwrap();
        assert!((big.rate - unl).abs() < 1e-5);
        let mid = rate_sh_tdma_rayleigh_limited(&p.with_backhaul(3.0)).unwrap();
        assert!(mid.rate <= 3.0f64.min(unl));
        assert!(rate_sh_tdma_rayleigh_limited(&p.with_alpha(0.5)).is_err());
    }

    #[test]
    fn region_without_interference_has_extreme_minimisers() {
        let p = SystemParams::gaussian(Model::Wyner, 0.0, 10.0, 3.0);
        let r = 1.2;
        let res = region_finite_n(6, &p, r, SubsetSearch::Exhaustive).unwrap();
        let want = (3.0 - r).min((1.0 + 10.0 * compression_gain(r)).log2());
        assert!((res.sum_rate - want).abs() < 1e-12);
        assert!(res.minimizing_subset.is_empty() || res.minimizing_subset.len() == 6);
    }

    #[test]
    fn region_full_set_is_bounded_by_the_backhaul_term() {
        let p = SystemParams::gaussian(Model::Wyner, 0.4, 10.0, 3.0);
        let res = region_finite_n(8, &p, 1.0, SubsetSearch::Exhaustive).unwrap();
        assert!(res.sum_rate <= 3.0 - 1.0 + 1e-12);
    }

    #[test]
    fn exhaustive_and_consecutive_agree_when_the_minimiser_is_an_arc() {
        let p = SystemParams::gaussian(Model::Wyner, 0.4, 10.0, 3.0);
        let f = RateFunctional::WynerGaussian { alpha: 0.4, p: 10.0 };
        let r = solve_fixed_point(&f, 3.0).unwrap().r_star;
        let ex = region_finite_n(8, &p, r, SubsetSearch::Exhaustive).unwrap();
        let arc = region_finite_n(8, &p, r, SubsetSearch::Consecutive).unwrap();
        assert!((ex.sum_rate - arc.sum_rate).abs() < 1e-9);
    }

    #[test]
    fn region_size_limits() {
        let p = SystemParams::gaussian(Model::Wyner, 0.4, 10.0, 3.0);
        assert!(matches!(
            region_finite_n(17, &p, 1.0, SubsetSearch::Exhaustive),
            Err(Error::TooManyCells { .. })
        ));
        assert!(region_finite_n(17, &p, 1.0, SubsetSearch::Consecutive).is_ok());
        assert!(region_finite_n(8, &p, 4.0, SubsetSearch::Exhaustive).is_err());
    }

    #[test]
    fn finite_circle_rate_limits() {
        let p = SystemParams::gaussian(Model::Wyner, 0.0, 10.0, 3.0);
        let res = rate_finite_n(8, &p, SubsetSearch::Exhaustive).unwrap();
        assert!((res.rate - rate_single_user(10.0, 3.0)).abs() < 1e-8);
        assert_eq!(
            rate_finite_n(8, &p.with_backhaul(0.0), SubsetSearch::Exhaustive)
                .unwrap()
                .rate,
            0.0
        );
    }

    #[test]
    fn finite_circle_approaches_the_infinite_rate() {
        let p = SystemParams::gaussian(Model::Wyner, 0.4, 10.0, 3.0);
        let res = rate_finite_n(64, &p, SubsetSearch::Consecutive).unwrap();
        let f = RateFunctional::WynerGaussian { alpha: 0.4, p: 10.0 };
        let inf = solve_fixed_point(&f, 3.0).unwrap();
        assert!((res.rate - inf.rate).abs() < 1e-2, "{} vs {}", res.rate, inf.rate);
    }
}
