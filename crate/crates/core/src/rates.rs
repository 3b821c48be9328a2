//! Rate functionals `F(r)` and unlimited-backhaul reference rates.
//!
//! Every functional is the unlimited rate `R(x)` evaluated at the effective
//! power `x = P(1 − 2^{−r})`, so `F(0) = 0` and `F(∞) = R(P)`.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::channel::{build_with_rng, trial_rng};
use crate::error::{Error, Result};
use crate::linalg::SparseHermitian;
use crate::params::{ChannelKind, Model, Protocol, SystemParams, INFINITE_USERS};
use crate::quadrature::{exp_integral_e1_scaled, integrate, periodic_even_mean};

/// Beyond this many bits `2^{−r}` is below double-precision resolution.
const SATURATION_BITS: f64 = 60.0;
const QUADRATURE_REL_TOL: f64 = 1e-11;

/// `1 − 2^{−r}`, exactly 1 for `r = ∞` or `r > 60`.
pub fn compression_gain(r: f64) -> f64 {
    if r.is_infinite() || r > SATURATION_BITS {
        1.0
    } else {
        -(-r * LN_2).exp_m1()
    }
}

/// Monte Carlo settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloCfg {
    pub n_cells: usize,
    pub n_trials: usize,
    pub seed: u64,
    /// Standard errors above this value set [`Estimate::flagged`].
    pub std_err_cap: Option<f64>,
}

impl MonteCarloCfg {
    pub const DEFAULT_SEED: u64 = 20_091_001;

    pub fn new(n_cells: usize, n_trials: usize, seed: u64) -> Self {
        MonteCarloCfg {
            n_cells,
            n_trials,
            seed,
            std_err_cap: None,
        }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.std_err_cap = Some(cap);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 3 {
            return Err(Error::Validation(format!(
                "Monte Carlo needs at least 3 cells, got {}",
                self.n_cells
            )));
        }
        if self.n_trials == 0 {
            return Err(Error::Validation("Monte Carlo needs at least one trial".into()));
        }
        Ok(())
    }
}

impl Default for MonteCarloCfg {
    fn default() -> Self {
        MonteCarloCfg::new(100, 1000, Self::DEFAULT_SEED)
    }
}

/// A rate with its standard error; deterministic values carry zero error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    /// Set when the standard error exceeds the configured cap.
    pub flagged: bool,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Estimate {
            mean,
            std_err: 0.0,
            flagged: false,
        }
    }

    pub(crate) fn from_samples(samples: &[f64], cap: Option<f64>) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std_err = if samples.len() > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Estimate {
            mean,
            std_err,
            flagged: cap.is_some_and(|c| std_err > c),
        }
    }
}

/// Pre-drawn channel Gram matrices shared by every evaluation of a Monte
/// Carlo functional, so that `F(r)` is smooth in `r`.
#[derive(Debug)]
pub struct MonteCarloEnsemble {
    grams: Vec<SparseHermitian>,
    n_cells: usize,
    k_users: usize,
    cap: Option<f64>,
}

impl MonteCarloEnsemble {
    /// Trial `t` draws its channel from stream `t` of the configured seed,
    /// so ensembles for different `α` or `P` share their fading samples.
    pub fn new(params: &SystemParams, cfg: &MonteCarloCfg) -> Result<Self> {
        params.validate()?;
        cfg.validate()?;
        if cfg.n_cells < params.model.min_cells() {
            return Err(Error::TooFewCells {
                model: params.model,
                min: params.model.min_cells(),
                got: cfg.n_cells,
            });
        }
        if params.active_users() == INFINITE_USERS {
            return Err(Error::Unsupported(
                "Monte Carlo with infinitely many users; use the large-K functional".into(),
            ));
        }
        let grams = (0..cfg.n_trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(cfg.seed, t);
                build_with_rng(params, cfg.n_cells, &mut rng).gram()
            })
            .collect();
        Ok(MonteCarloEnsemble {
            grams,
            n_cells: cfg.n_cells,
            k_users: params.active_users(),
            cap: cfg.std_err_cap,
        })
    }

    pub fn n_trials(&self) -> usize {
        self.grams.len()
    }

    /// Sample mean of `(1/N) log2 det(I + (p_eff/K) H H†)`.
    pub fn rate(&self, p_eff: f64) -> Result<Estimate> {
        if p_eff == 0.0 {
            return Ok(Estimate::exact(0.0));
        }
        let scale = p_eff / self.k_users as f64;
        let n = self.n_cells as f64;
        let samples: Vec<f64> = self
            .grams
            .par_iter()
            .map(|g| g.log2_det_shifted(scale).map(|v| v / n))
            .collect::<Result<_>>()?;
        Ok(Estimate::from_samples(&samples, self.cap))
    }
}

/// Which closed form or estimator backs a [`RateFunctional`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FunctionalKind {
    WynerGaussianSzego,
    ShGaussianClosedForm,
    ShTdmaRayleighExact,
    ShWbUpperBound,
    LargeKWyner,
    LargeKSh,
    MonteCarloLogDet,
    SingleUser,
}

impl fmt::Display for FunctionalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FunctionalKind::WynerGaussianSzego => "wyner-gaussian",
            FunctionalKind::ShGaussianClosedForm => "sh-gaussian",
            FunctionalKind::ShTdmaRayleighExact => "sh-tdma-rayleigh",
            FunctionalKind::ShWbUpperBound => "sh-wb-upper-bound",
            FunctionalKind::LargeKWyner => "large-k-wyner",
            FunctionalKind::LargeKSh => "large-k-sh",
            FunctionalKind::MonteCarloLogDet => "monte-carlo",
            FunctionalKind::SingleUser => "single-user",
        };
        f.write_str(s)
    }
}

/// `F(r) = R(P(1 − 2^{−r}))` for one of the supported unlimited rates `R`.
#[derive(Debug, Clone)]
pub enum RateFunctional {
    WynerGaussian {
        alpha: f64,
        p: f64,
    },
    ShGaussian {
        alpha: f64,
        p: f64,
    },
    /// Soft-handoff, TDMA, Rayleigh, `α = 1`.
    ShTdmaRayleigh {
        p: f64,
    },
    ShWbUpperBound {
        alpha: f64,
        p: f64,
        k_users: usize,
    },
    LargeKWyner {
        alpha: f64,
        p: f64,
    },
    LargeKSh {
        alpha: f64,
        p: f64,
    },
    MonteCarlo {
        ensemble: Arc<MonteCarloEnsemble>,
        p: f64,
    },
    SingleUser {
        p: f64,
    },
}

impl RateFunctional {
    /// The exact functional for a scenario, or a Monte Carlo estimate for
    /// wideband fading with finitely many users.
    ///
    /// TDMA with fading has no exact form except for soft-handoff at `α = 1`;
    /// such requests fail rather than silently switch estimator.  Use
    /// [`RateFunctional::montecarlo`] to ask for simulation explicitly.
    pub fn for_params(params: &SystemParams, cfg: &MonteCarloCfg) -> Result<Self> {
        params.validate()?;
        let (alpha, p) = (params.alpha, params.p);
        Ok(match (params.channel, params.protocol, params.model) {
            (ChannelKind::Gaussian, _, Model::Wyner) => RateFunctional::WynerGaussian { alpha, p },
            (ChannelKind::Gaussian, _, Model::SoftHandoff) => RateFunctional::ShGaussian { alpha, p },
            (ChannelKind::Rayleigh, Protocol::Tdma, Model::SoftHandoff) if alpha == 1.0 => {
                RateFunctional::ShTdmaRayleigh { p }
            }
            (ChannelKind::Rayleigh, Protocol::Tdma, model) => {
                return Err(Error::Unsupported(format!(
                    "no exact TDMA fading rate for the {model} model at alpha = {alpha}"
                )))
            }
            (ChannelKind::Rayleigh, Protocol::Wideband, Model::Wyner) if params.is_large_k() => {
                RateFunctional::LargeKWyner { alpha, p }
            }
            (ChannelKind::Rayleigh, Protocol::Wideband, Model::SoftHandoff) if params.is_large_k() => {
                RateFunctional::LargeKSh { alpha, p }
            }
            (ChannelKind::Rayleigh, Protocol::Wideband, _) => Self::montecarlo(params, cfg)?,
        })
    }

    /// Monte Carlo functional over a freshly drawn ensemble.
    pub fn montecarlo(params: &SystemParams, cfg: &MonteCarloCfg) -> Result<Self> {
        Ok(RateFunctional::MonteCarlo {
            ensemble: Arc::new(MonteCarloEnsemble::new(params, cfg)?),
            p: params.p,
        })
    }

    pub fn kind(&self) -> FunctionalKind {
        match self {
            RateFunctional::WynerGaussian { .. } => FunctionalKind::WynerGaussianSzego,
            RateFunctional::ShGaussian { .. } => FunctionalKind::ShGaussianClosedForm,
            RateFunctional::ShTdmaRayleigh { .. } => FunctionalKind::ShTdmaRayleighExact,
            RateFunctional::ShWbUpperBound { .. } => FunctionalKind::ShWbUpperBound,
            RateFunctional::LargeKWyner { .. } => FunctionalKind::LargeKWyner,
            RateFunctional::LargeKSh { .. } => FunctionalKind::LargeKSh,
            RateFunctional::MonteCarlo { .. } => FunctionalKind::MonteCarloLogDet,
            RateFunctional::SingleUser { .. } => FunctionalKind::SingleUser,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, RateFunctional::MonteCarlo { .. })
    }

    pub fn power(&self) -> f64 {
        match *self {
            RateFunctional::WynerGaussian { p, .. }
            | RateFunctional::ShGaussian { p, .. }
            | RateFunctional::ShTdmaRayleigh { p }
            | RateFunctional::ShWbUpperBound { p, .. }
            | RateFunctional::LargeKWyner { p, .. }
            | RateFunctional::LargeKSh { p, .. }
            | RateFunctional::MonteCarlo { p, .. }
            | RateFunctional::SingleUser { p } => p,
        }
    }

    /// Same functional at total power `p`.
    pub fn with_power(&self, new_p: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            RateFunctional::WynerGaussian { p, .. }
            | RateFunctional::ShGaussian { p, .. }
            | RateFunctional::ShTdmaRayleigh { p }
            | RateFunctional::ShWbUpperBound { p, .. }
            | RateFunctional::LargeKWyner { p, .. }
            | RateFunctional::LargeKSh { p, .. }
            | RateFunctional::MonteCarlo { p, .. }
            | RateFunctional::SingleUser { p } => *p = new_p,
        }
        out
    }

    /// Same functional with its power scaled by `beta`.
    pub fn scaled(&self, beta: f64) -> Self {
        self.with_power(self.power() * beta)
    }

    /// The underlying unlimited rate `R(x)` at effective power `x`.
    pub fn unlimited_at(&self, x: f64) -> Result<Estimate> {
        if x == 0.0 {
            return Ok(Estimate::exact(0.0));
        }
        Ok(match self {
            RateFunctional::WynerGaussian { alpha, .. } => Estimate::exact(wyner_gaussian(*alpha, x)?),
            RateFunctional::ShGaussian { alpha, .. } => Estimate::exact(sh_gaussian(*alpha, x)),
            RateFunctional::ShTdmaRayleigh { .. } => Estimate::exact(r_sh_tdma_rayleigh(x)?),
            RateFunctional::ShWbUpperBound { alpha, k_users, .. } => {
                Estimate::exact(r_sh_wb_upper(x, *k_users, *alpha))
            }
            RateFunctional::LargeKWyner { alpha, .. } => {
                Estimate::exact(log2_1p(Model::Wyner.array_gain(*alpha) * x))
            }
            RateFunctional::LargeKSh { alpha, .. } => {
                Estimate::exact(log2_1p(Model::SoftHandoff.array_gain(*alpha) * x))
            }
            RateFunctional::MonteCarlo { ensemble, .. } => ensemble.rate(x)?,
            RateFunctional::SingleUser { .. } => Estimate::exact(log2_1p(x)),
        })
    }

    /// `F(r)` with its standard error.
    pub fn eval(&self, r: f64) -> Result<Estimate> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::Validation(format!(
                "compression parameter must be >= 0, got {r}"
            )));
        }
        self.unlimited_at(self.power() * compression_gain(r))
    }

    /// `F(r)` without its error estimate.
    pub fn value(&self, r: f64) -> Result<f64> {
        Ok(self.eval(r)?.mean)
    }

    /// `F(∞)`, the unlimited-backhaul rate.
    pub fn unlimited(&self) -> Result<Estimate> {
        self.unlimited_at(self.power())
    }
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

fn wyner_gaussian(alpha: f64, x: f64) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(log2_1p(x));
    }
    let nats = periodic_even_mean(
        |theta| {
            let s = 1.0 + 2.0 * alpha * (2.0 * PI * theta).cos();
            (x * s * s).ln_1p()
        },
        QUADRATURE_REL_TOL,
    )?;
    Ok(nats / LN_2)
}

fn sh_gaussian(alpha: f64, x: f64) -> f64 {
    let a2 = alpha * alpha;
    let disc = 1.0 + 2.0 * (1.0 + a2) * x + ((1.0 - a2) * x).powi(2);
    ((1.0 + (1.0 + a2) * x + disc.sqrt()) / 2.0).log2()
}

/// Wyner, unity coefficients: `∫ log2(1 + P'(1 + 2α cos 2πθ)²) dθ` with
/// `P' = P(1 − 2^{−r})`.
pub fn f_wyner_gaussian(r: f64, params: &SystemParams) -> Result<f64> {
    RateFunctional::WynerGaussian {
        alpha: params.alpha,
        p: params.p,
    }
    .value(r)
}

/// Soft-handoff, unity coefficients, at effective power `P(1 − 2^{−r})`.
pub fn f_sh_gaussian(r: f64, params: &SystemParams) -> f64 {
    sh_gaussian(params.alpha, params.p * compression_gain(r))
}

/// Sample mean and standard error of the finite-circle log-det rate at
/// effective power `P(1 − 2^{−r})`.
pub fn f_montecarlo(r: f64, params: &SystemParams, cfg: &MonteCarloCfg) -> Result<Estimate> {
    if r == 0.0 {
        return Ok(Estimate::exact(0.0));
    }
    RateFunctional::montecarlo(params, cfg)?.eval(r)
}

/// Soft-handoff TDMA rate with Rayleigh fading and `α = 1`:
///
/// `∫_1^∞ (ln x)² e^{−x/P} dx / (E1(1/P) · P · ln 2)`.
///
/// After `x = 1 + P u` both numerator and denominator carry `P e^{−1/P}`, which
/// cancels, leaving `∫_0^∞ ln²(1 + P u) e^{−u} du / (e^{1/P} E1(1/P) ln 2)`.
pub fn r_sh_tdma_rayleigh(p_eff: f64) -> Result<f64> {
    if !(p_eff >= 0.0) {
        return Err(Error::Validation(format!(
            "power must be non-negative, got {p_eff}"
        )));
    }
    if p_eff == 0.0 {
        return Ok(0.0);
    }
    // e^{-50} leaves a tail far below the requested accuracy.
    let upper = 50.0;
    let num = integrate(
        |u| {
            let l = (p_eff * u).ln_1p();
            l * l * (-u).exp()
        },
        0.0,
        upper,
        0.0,
        1e-12,
    )?;
    let den = exp_integral_e1_scaled(1.0 / p_eff) * LN_2;
    Ok(num.value / den)
}

/// Soft-handoff wideband fading upper bound; `k_users = INFINITE_USERS`
/// gives its large-K limit `log2(1 + (1 + α²)P)`.
pub fn r_sh_wb_upper(p_eff: f64, k_users: usize, alpha: f64) -> f64 {
    let a2 = alpha * alpha;
    let inv_k = inverse_users(k_users);
    let s = 1.0 + (1.0 + a2) * p_eff;
    let disc = s * s - 4.0 * a2 * p_eff * p_eff * inv_k;
    ((s + disc.max(0.0).sqrt()) / 2.0).log2()
}

pub(crate) fn inverse_users(k_users: usize) -> f64 {
    if k_users == INFINITE_USERS {
        0.0
    } else {
        1.0 / k_users as f64
    }
}

/// The unlimited-backhaul rate with default Monte Carlo settings.
pub fn unlimited_rate(params: &SystemParams) -> Result<Estimate> {
    unlimited_rate_with(params, &MonteCarloCfg::default())
}

pub fn unlimited_rate_with(params: &SystemParams, cfg: &MonteCarloCfg) -> Result<Estimate> {
    RateFunctional::for_params(params, cfg)?.unlimited()
}
