//! Schemes in which cell-sites decode part of the traffic themselves and
//! forward the rest in compressed form.
//!
//! A user splits its power: `(1 − β)P` carries a message decoded at its own
//! cell-site, `βP` carries a message decoded centrally from compressed
//! signals.  Locally decoded bits occupy backhaul one for one.

use std::f64::consts::LN_2;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Gamma;
use rayon::prelude::*;

use crate::channel::trial_rng;
use crate::error::{Error, Result};
use crate::oblivious::solve_fixed_point;
use crate::params::{ChannelKind, Model, SystemParams, INFINITE_USERS};
use crate::rates::{Estimate, MonteCarloCfg, RateFunctional};
use crate::solver::{golden_max, grid_then_golden};

const BETA_GRID: usize = 101;
const BETA_TOL: f64 = 1e-6;
const R_SEARCH_SPAN: f64 = 40.0;
const R_GRID: usize = 80;
const R_TOL: f64 = 1e-9;
/// Offset separating local-decoding fading streams from channel streams.
const LOCAL_STREAM_BASE: u64 = 1 << 40;

/// Which messages a cell-site decodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DecodeStrategy {
    /// The better of the available strategies.
    #[default]
    Auto,
    /// Only its own users, treating neighbours as noise.
    LocalOnly,
    /// Its own users jointly with the interfering neighbours.
    WithInterferers,
    /// All three arriving messages (Wyner only).
    AllThree,
}

impl std::str::FromStr for DecodeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(DecodeStrategy::Auto),
            "local" | "local-only" => Ok(DecodeStrategy::LocalOnly),
            "interferers" | "with-interferers" => Ok(DecodeStrategy::WithInterferers),
            "all" | "all-three" => Ok(DecodeStrategy::AllThree),
            other => Err(Error::Validation(format!("unknown decoding strategy `{other}`"))),
        }
    }
}

/// Options for local decoding.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LocalRateParams {
    pub strategy: DecodeStrategy,
    /// Sampling of the fading expectations.
    pub mc: MonteCarloCfg,
}

/// Operating point of a local-decoding scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodingSplit {
    /// Power share of the centrally decoded stream, averaged over time.
    pub beta: f64,
    /// Locally decodable rate without central decoding, `min{C, R_d(0)}`.
    pub t: f64,
    /// Time fraction spent at the lower-backhaul operating point.
    pub lambda: f64,
    /// Compression parameter of the centrally decoded stream.
    pub r_opt: f64,
    pub rate: f64,
    pub uncertainty: f64,
    /// Backhaul used at the two time-shared operating points.
    pub c_low: f64,
    pub c_high: f64,
}

impl DecodingSplit {
    fn zero() -> Self {
        DecodingSplit {
            beta: 0.0,
            t: 0.0,
            lambda: 1.0,
            r_opt: 0.0,
            rate: 0.0,
            uncertainty: 0.0,
            c_low: 0.0,
            c_high: 0.0,
        }
    }
}

/// Rates of the individual decoding strategies for one channel state.
///
/// `xa` is the normalised own-cell energy and `xi` the normalised energy of
/// the interfering cells (both 1 per cell without fading).
#[derive(Debug, Clone, Copy)]
struct Terms {
    local: f64,
    pair: f64,
    triple: f64,
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

fn terms(model: Model, alpha: f64, p: f64, beta: f64, xa: f64, xi: f64) -> Terms {
    let a2 = alpha * alpha;
    let total = xa + a2 * xi;
    let local = log2_1p((1.0 - beta) * xa * p / (1.0 + (beta * xa + a2 * xi) * p));
    let denom = 1.0 + beta * total * p;
    match model {
        Model::Wyner => Terms {
            local,
            pair: 0.5 * log2_1p((1.0 - beta) * a2 * xi * p / denom),
            triple: log2_1p((1.0 - beta) * total * p / denom) / 3.0,
        },
        Model::SoftHandoff => Terms {
            local,
            pair: 0.5 * log2_1p((1.0 - beta) * total * p / denom),
            triple: f64::INFINITY,
        },
    }
}

/// Combines strategy rates; returns the value and which term it came from.
fn combine(strategy: DecodeStrategy, t: &Terms) -> (f64, usize) {
    let joint = if t.pair <= t.triple {
        (t.pair, 1)
    } else {
        (t.triple, 2)
    };
    match strategy {
        DecodeStrategy::Auto => {
            if t.local >= joint.0 {
                (t.local, 0)
            } else {
                joint
            }
        }
        DecodeStrategy::LocalOnly => (t.local, 0),
        DecodeStrategy::WithInterferers | DecodeStrategy::AllThree => joint,
    }
}

fn check_strategy(model: Model, strategy: DecodeStrategy) -> Result<()> {
    if model == Model::SoftHandoff && strategy == DecodeStrategy::AllThree {
        return Err(Error::Validation(
            "soft-handoff cell-sites receive only two messages".into(),
        ));
    }
    Ok(())
}

fn check_beta(beta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::Validation(format!("beta must lie in [0, 1], got {beta}")));
    }
    Ok(())
}

fn interference_cells(model: Model) -> f64 {
    match model {
        Model::Wyner => 2.0,
        Model::SoftHandoff => 1.0,
    }
}

/// Locally decodable rate with unity coefficients for a given strategy.
pub fn r_d_gaussian(beta: f64, params: &SystemParams, strategy: DecodeStrategy) -> Result<f64> {
    params.validate()?;
    check_beta(beta)?;
    check_strategy(params.model, strategy)?;
    let t = terms(
        params.model,
        params.alpha,
        params.p,
        beta,
        1.0,
        interference_cells(params.model),
    );
    Ok(combine(strategy, &t).0)
}

/// Wyner, unity coefficients: the better of decoding the own user alone and
/// decoding all three arriving messages.
pub fn r_d_wyner_gaussian(beta: f64, params: &SystemParams) -> Result<f64> {
    r_d_gaussian(
        beta,
        &SystemParams {
            model: Model::Wyner,
            ..*params
        },
        DecodeStrategy::Auto,
    )
}

/// Soft-handoff, unity coefficients: the better of decoding the own user
/// alone and decoding it jointly with the left neighbour.
pub fn r_d_sh_gaussian(beta: f64, params: &SystemParams) -> Result<f64> {
    r_d_gaussian(
        beta,
        &SystemParams {
            model: Model::SoftHandoff,
            ..*params
        },
        DecodeStrategy::Auto,
    )
}

/// Normalised fading energies `|a|²/K` and interference sums, one pair per
/// cell per trial.
#[derive(Debug)]
struct FadingSamples {
    xa: Vec<f64>,
    xi: Vec<f64>,
    cap: Option<f64>,
}

impl FadingSamples {
    fn draw(params: &SystemParams, cfg: &MonteCarloCfg) -> Result<Self> {
        cfg.validate()?;
        let k = params.active_users() as f64;
        let gamma =
            Gamma::new(k, 1.0 / k).map_err(|e| Error::Validation(format!("fading distribution: {e}")))?;
        let wyner = params.model == Model::Wyner;
        let per_trial: Vec<Vec<(f64, f64)>> = (0..cfg.n_trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, LOCAL_STREAM_BASE + t);
                (0..cfg.n_cells)
                    .map(|_| {
                        let xa: f64 = rng.sample(gamma);
                        let xb: f64 = rng.sample(gamma);
                        let xc: f64 = if wyner { rng.sample(gamma) } else { 0.0 };
                        (xa, xb + xc)
                    })
                    .collect()
            })
            .collect();
        let (xa, xi) = per_trial.into_iter().flatten().unzip();
        Ok(FadingSamples {
            xa,
            xi,
            cap: cfg.std_err_cap,
        })
    }

    fn r_d(&self, params: &SystemParams, beta: f64, strategy: DecodeStrategy) -> Estimate {
        let all: Vec<Terms> = self
            .xa
            .iter()
            .zip(&self.xi)
            .map(|(&xa, &xi)| terms(params.model, params.alpha, params.p, beta, xa, xi))
            .collect();
        let est = |pick: fn(&Terms) -> f64| {
            let v: Vec<f64> = all.iter().map(pick).collect();
            Estimate::from_samples(&v, self.cap)
        };
        let local = est(|t| t.local);
        let pair = est(|t| t.pair);
        let triple = if params.model == Model::Wyner {
            est(|t| t.triple)
        } else {
            Estimate::exact(f64::INFINITY)
        };
        let means = Terms {
            local: local.mean,
            pair: pair.mean,
            triple: triple.mean,
        };
        match combine(strategy, &means).1 {
            0 => local,
            1 => pair,
            _ => triple,
        }
    }
}

fn is_large_k(params: &SystemParams) -> bool {
    params.channel == ChannelKind::Gaussian || params.active_users() == INFINITE_USERS
}

/// Locally decodable rate under Rayleigh fading, as a Monte Carlo average
/// over `n_trials × n_cells` draws of the normalised energies.
///
/// With infinitely many users the energies concentrate at 1 and the value is
/// the unity-coefficient rate.
pub fn r_d_fading(beta: f64, params: &SystemParams, local: &LocalRateParams) -> Result<Estimate> {
    params.validate()?;
    check_beta(beta)?;
    check_strategy(params.model, local.strategy)?;
    if is_large_k(params) {
        return Ok(Estimate::exact(r_d_gaussian(beta, params, local.strategy)?));
    }
    Ok(FadingSamples::draw(params, &local.mc)?.r_d(params, beta, local.strategy))
}

#[derive(Debug, Clone)]
enum RdSource {
    Closed,
    Sampled(Arc<FadingSamples>),
}

/// Local-decoding rates for one scenario and central-decoding functional.
///
/// The functional `f` is taken at full power; the split at `β` uses `f`
/// scaled to `βP`.
#[derive(Debug, Clone)]
pub struct LocalDecoder {
    params: SystemParams,
    f: RateFunctional,
    strategy: DecodeStrategy,
    source: RdSource,
}

impl LocalDecoder {
    pub fn new(params: &SystemParams, f: RateFunctional, local: &LocalRateParams) -> Result<Self> {
        params.validate()?;
        check_strategy(params.model, local.strategy)?;
        let source = if is_large_k(params) {
            RdSource::Closed
        } else {
            RdSource::Sampled(Arc::new(FadingSamples::draw(params, &local.mc)?))
        };
        Ok(LocalDecoder {
            params: *params,
            f,
            strategy: local.strategy,
            source,
        })
    }

    pub fn functional(&self) -> &RateFunctional {
        &self.f
    }

    /// Locally decodable rate `R_d(β)`.
    pub fn r_d(&self, beta: f64) -> Result<Estimate> {
        check_beta(beta)?;
        Ok(match &self.source {
            RdSource::Closed => Estimate::exact(r_d_gaussian(beta, &self.params, self.strategy)?),
            RdSource::Sampled(s) => s.r_d(&self.params, beta, self.strategy),
        })
    }

    /// Rate-splitting at a fixed `β` and backhaul `c_eff`; returns the rate
    /// and the compression parameter of the central stream.
    pub fn split_at(&self, beta: f64, c_eff: f64) -> Result<(f64, f64)> {
        let r_hat = self.r_d(beta)?.mean.min(c_eff);
        let central = solve_fixed_point(&self.f.scaled(beta), c_eff - r_hat)?;
        Ok((central.rate + r_hat, central.r_star))
    }

    /// Separate decoding: best power split for backhaul `c_eff`.
    pub fn rate_sd(&self, c_eff: f64) -> Result<DecodingSplit> {
        if c_eff.is_nan() || c_eff < 0.0 {
            return Err(Error::Validation(format!(
                "backhaul must be non-negative, got {c_eff}"
            )));
        }
        let t = self.r_d(0.0)?.mean.min(c_eff);
        if c_eff == 0.0 {
            return Ok(DecodingSplit::zero());
        }
        let (beta, rate) =
            grid_then_golden(|b| Ok(self.split_at(b, c_eff)?.0), 0.0, 1.0, BETA_GRID, BETA_TOL)?;
        let (_, r_opt) = self.split_at(beta, c_eff)?;
        Ok(DecodingSplit {
            beta,
            t,
            lambda: 1.0,
            r_opt,
            rate,
            uncertainty: 0.0,
            c_low: c_eff,
            c_high: c_eff,
        })
    }

    /// Time-sharing between pure local decoding (`β = 0`, backhaul `t`) and
    /// pure central decoding at some `r ≥ r*` (backhaul `F(r) + r`):
    ///
    /// `R = max(t, max_{r ≥ r*} t + (C − t)(F(r) − t)/(F(r) + r − t))`.
    pub fn rate_dec_timeshare(&self) -> Result<DecodingSplit> {
        let c = self.params.c_backhaul;
        if c == 0.0 {
            return Ok(DecodingSplit::zero());
        }
        let rd0 = self.r_d(0.0)?;
        if rd0.mean >= c {
            return Ok(DecodingSplit {
                beta: 0.0,
                t: c,
                lambda: 1.0,
                r_opt: 0.0,
                rate: c,
                uncertainty: 0.0,
                c_low: c,
                c_high: c,
            });
        }
        if c.is_infinite() {
            let u = self.f.unlimited()?;
            return Ok(DecodingSplit {
                beta: 1.0,
                t: rd0.mean,
                lambda: 0.0,
                r_opt: f64::INFINITY,
                rate: u.mean.max(rd0.mean),
                uncertainty: u.std_err,
                c_low: c,
                c_high: c,
            });
        }
        let r_star = solve_fixed_point(&self.f, c)?.r_star;
        timeshare_search(&self.f, rd0, c, r_star)
    }

    /// Convex hull of separate decoding over two backhaul loads `c1 ≤ C ≤ c2`
    /// used for fractions `λ` and `1 − λ` of the time, by grid search with
    /// coordinate-wise golden refinement.
    pub fn rate_dec_convexhull(&self) -> Result<DecodingSplit> {
        let c = self.params.c_backhaul;
        if c == 0.0 {
            return Ok(DecodingSplit::zero());
        }
        if c.is_infinite() {
            return self.rate_sd(c);
        }
        const STEPS: usize = 20;
        const REFINE_ROUNDS: usize = 2;
        let span = 20.0_f64.max(c);
        let sd = |x: f64| -> Result<f64> { Ok(self.rate_sd(x)?.rate) };
        let mix = |c1: f64, c2: f64, r1: f64, r2: f64| -> (f64, f64) {
            if c2 - c1 <= 0.0 {
                return (1.0, r1);
            }
            let lambda = (c2 - c) / (c2 - c1);
            (lambda, lambda * r1 + (1.0 - lambda) * r2)
        };
        let lows: Vec<f64> = (0..=STEPS).map(|i| c * i as f64 / STEPS as f64).collect();
        let highs: Vec<f64> = (0..=STEPS).map(|j| c + span * j as f64 / STEPS as f64).collect();
        let low_rates: Vec<f64> = lows.iter().map(|&x| sd(x)).collect::<Result<_>>()?;
        let high_rates: Vec<f64> = highs.iter().map(|&x| sd(x)).collect::<Result<_>>()?;
        let mut best = (c, c, high_rates[0]);
        for (i, &c1) in lows.iter().enumerate() {
            for (j, &c2) in highs.iter().enumerate() {
                let (_, v) = mix(c1, c2, low_rates[i], high_rates[j]);
                if v > best.2 {
                    best = (c1, c2, v);
                }
            }
        }
        let (mut c1, mut c2) = (best.0, best.1);
        let (mut r1, mut r2) = (sd(c1)?, sd(c2)?);
        let (d1, d2) = (c / STEPS as f64, span / STEPS as f64);
        for _ in 0..REFINE_ROUNDS {
            let (x, _) = golden_max(
                |x| Ok(mix(x, c2, sd(x)?, r2).1),
                (c1 - d1).max(0.0),
                (c1 + d1).min(c),
                1e-5,
            )?;
            let rx = sd(x)?;
            if mix(x, c2, rx, r2).1 > mix(c1, c2, r1, r2).1 {
                c1 = x;
                r1 = rx;
            }
            let (y, _) = golden_max(|y| Ok(mix(c1, y, r1, sd(y)?).1), (c2 - d2).max(c), c2 + d2, 1e-5)?;
            let ry = sd(y)?;
            if mix(c1, y, r1, ry).1 > mix(c1, c2, r1, r2).1 {
                c2 = y;
                r2 = ry;
            }
        }
        let (lambda, rate) = mix(c1, c2, r1, r2);
        let at_c1 = self.rate_sd(c1)?;
        Ok(DecodingSplit {
            beta: at_c1.beta,
            t: self.r_d(0.0)?.mean.min(c),
            lambda,
            r_opt: at_c1.r_opt,
            rate: rate.max(best.2),
            uncertainty: 0.0,
            c_low: c1,
            c_high: c2,
        })
    }
}

fn timeshare_search(f: &RateFunctional, rd0: Estimate, c: f64, r_star: f64) -> Result<DecodingSplit> {
    let t = rd0.mean;
    let phi = |r: f64| -> Result<f64> {
        let fr = f.value(r)?;
        Ok(t + (c - t) * (fr - t) / (fr + r - t))
    };
    let (r_opt, best) = grid_then_golden(phi, r_star, r_star + R_SEARCH_SPAN, R_GRID, R_TOL)?;
    if best <= t {
        return Ok(DecodingSplit {
            beta: 0.0,
            t,
            lambda: 1.0,
            r_opt: r_star,
            rate: t,
            uncertainty: rd0.std_err,
            c_low: t,
            c_high: t,
        });
    }
    let fr = f.eval(r_opt)?;
    let load = fr.mean + r_opt;
    let lambda = ((c - load) / (t - load)).clamp(0.0, 1.0);
    Ok(DecodingSplit {
        beta: 1.0 - lambda,
        t,
        lambda,
        r_opt,
        rate: best,
        uncertainty: lambda * rd0.std_err + (1.0 - lambda) * fr.std_err,
        c_low: t,
        c_high: load,
    })
}

/// Separate decoding at backhaul `c_eff`.
pub fn rate_sd(
    params: &SystemParams,
    f: &RateFunctional,
    c_eff: f64,
    local: &LocalRateParams,
) -> Result<DecodingSplit> {
    LocalDecoder::new(params, f.clone(), local)?.rate_sd(c_eff)
}

/// Time-sharing between local and central decoding.
pub fn rate_dec_timeshare(
    params: &SystemParams,
    f: &RateFunctional,
    local: &LocalRateParams,
) -> Result<DecodingSplit> {
    LocalDecoder::new(params, f.clone(), local)?.rate_dec_timeshare()
}

/// Convex hull of separate decoding over two backhaul loads.
pub fn rate_dec_convexhull(
    params: &SystemParams,
    f: &RateFunctional,
    local: &LocalRateParams,
) -> Result<DecodingSplit> {
    LocalDecoder::new(params, f.clone(), local)?.rate_dec_convexhull()
}

/// Time-sharing with Rayleigh fading and infinitely many users, where the
/// central functional is `log2(1 + gP(1 − 2^{−r}))` for array gain `g` and
/// `r* = log2((2^C + gP)/(1 + gP))`.
pub fn rate_dec_fading_largek(params: &SystemParams) -> Result<DecodingSplit> {
    params.validate()?;
    if params.channel != ChannelKind::Rayleigh {
        return Err(Error::Validation("requires a Rayleigh channel".into()));
    }
    let (alpha, p, c) = (params.alpha, params.p, params.c_backhaul);
    let f = match params.model {
        Model::Wyner => RateFunctional::LargeKWyner { alpha, p },
        Model::SoftHandoff => RateFunctional::LargeKSh { alpha, p },
    };
    if c == 0.0 {
        return Ok(DecodingSplit::zero());
    }
    let large = SystemParams {
        k_users: INFINITE_USERS,
        ..*params
    };
    let decoder = LocalDecoder::new(&large, f.clone(), &LocalRateParams::default())?;
    let rd0 = decoder.r_d(0.0)?;
    if rd0.mean >= c || c.is_infinite() {
        return decoder.rate_dec_timeshare();
    }
    let gp = params.array_gain() * p;
    // log2((2^C + gP)/(1 + gP)) without forming 2^C
    let r_star = c + ((gp * (-c * LN_2).exp()).ln_1p() - gp.ln_1p()) / LN_2;
    timeshare_search(&f, rd0, c, r_star)
}
