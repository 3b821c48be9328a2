//! Parameter sweeps and their CSV output.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use backhaul_core::{
    cutset_bound, db_to_linear, linear_to_db, lowsnr_oblivious_closed, solve_fixed_point, ChannelKind, Error,
    LocalDecoder, LocalRateParams, LowSnrChar, MonteCarloCfg, RateFunctional, SystemParams,
};
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

pub const CSV_HEADER: &str = "axis,scheme,rate_bits,r_star,uncertainty,wall_ms";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Unlimited,
    Oblivious,
    LocalDecoding,
    Cutset,
    LowsnrAffine,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Unlimited,
        Scheme::Oblivious,
        Scheme::LocalDecoding,
        Scheme::Cutset,
        Scheme::LowsnrAffine,
    ];

    fn needs_functional(self) -> bool {
        matches!(
            self,
            Scheme::Unlimited | Scheme::Oblivious | Scheme::LocalDecoding
        )
    }

    /// Parses `all` or a comma-separated list.
    pub fn parse_list(s: &str) -> CliResult<Vec<Scheme>> {
        if s.trim() == "all" {
            return Ok(Scheme::ALL.to_vec());
        }
        let mut out = Vec::new();
        for part in s.split(',') {
            let scheme: Scheme = part.parse()?;
            if !out.contains(&scheme) {
                out.push(scheme);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Unlimited => "unlimited",
            Scheme::Oblivious => "oblivious",
            Scheme::LocalDecoding => "local_decoding",
            Scheme::Cutset => "cutset",
            Scheme::LowsnrAffine => "lowsnr_affine",
        })
    }
}

impl FromStr for Scheme {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().replace('-', "_").as_str() {
            "unlimited" => Ok(Scheme::Unlimited),
            "oblivious" => Ok(Scheme::Oblivious),
            "local_decoding" | "local" => Ok(Scheme::LocalDecoding),
            "cutset" | "upper_bound" => Ok(Scheme::Cutset),
            "lowsnr_affine" | "affine" => Ok(Scheme::LowsnrAffine),
            other => Err(CliError::Config(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Alpha,
    PDb,
    CBits,
}

impl Axis {
    pub fn apply(self, base: &SystemParams, v: f64) -> SystemParams {
        match self {
            Axis::Alpha => base.with_alpha(v),
            Axis::PDb => base.with_power(db_to_linear(v)),
            Axis::CBits => base.with_backhaul(v),
        }
    }

    pub fn value_of(self, params: &SystemParams) -> f64 {
        match self {
            Axis::Alpha => params.alpha,
            Axis::PDb => linear_to_db(params.p),
            Axis::CBits => params.c_backhaul,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Alpha => "alpha",
            Axis::PDb => "p_db",
            Axis::CBits => "c_bits",
        })
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s.trim().replace('-', "_").as_str() {
            "alpha" => Ok(Axis::Alpha),
            "p_db" | "p" => Ok(Axis::PDb),
            "c_bits" | "c" => Ok(Axis::CBits),
            other => Err(CliError::Config(format!("unknown axis `{other}`"))),
        }
    }
}

/// Parses `v1,v2,...` or `lo:hi:count` into a grid.
pub fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    let bad = |what: &str| CliError::Config(format!("grid `{s}`: {what}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad("bad lower end"))?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad("bad upper end"))?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad("bad count"))?;
        return Ok(match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        });
    }
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| bad("bad value")))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub schemes: Vec<Scheme>,
    pub axis: Axis,
    pub base: SystemParams,
    pub grid: Vec<f64>,
    pub mc: MonteCarloCfg,
    /// Use Monte Carlo even where the scenario has no exact evaluator.
    pub force_mc: bool,
    /// Appended to scheme names as `scheme/label`.
    pub label: Option<String>,
}

impl SweepSpec {
    pub fn validate(&self) -> CliResult<()> {
        if self.grid.is_empty() {
            return Err(CliError::Config("the sweep grid is empty".into()));
        }
        if self
            .grid
            .windows(2)
            .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
        {
            return Err(CliError::Config(
                "the sweep grid must be strictly increasing".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(CliError::Config("no schemes selected".into()));
        }
        for &v in &self.grid {
            self.axis.apply(&self.base, v).validate()?;
        }
        if self.schemes.iter().any(|s| s.needs_functional()) && self.uses_montecarlo() {
            self.mc.validate()?;
        }
        Ok(())
    }

    fn uses_montecarlo(&self) -> bool {
        self.base.channel == ChannelKind::Rayleigh && !self.base.is_large_k()
    }

    fn scheme_label(&self, s: Scheme) -> String {
        match &self.label {
            Some(l) => format!("{s}/{l}"),
            None => s.to_string(),
        }
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub axis: f64,
    pub scheme: String,
    pub outcome: Outcome,
    pub wall_ms: f64,
    /// Linear power of the point; not written to CSV.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Value {
        rate: f64,
        r_star: Option<f64>,
        uncertainty: f64,
    },
    Failed(Error),
}

impl Outcome {
    pub fn rate(&self) -> Option<f64> {
        match self {
            Outcome::Value { rate, .. } => Some(*rate),
            Outcome::Failed(_) => None,
        }
    }

    pub fn uncertainty(&self) -> f64 {
        match self {
            Outcome::Value { uncertainty, .. } => *uncertainty,
            Outcome::Failed(_) => 0.0,
        }
    }
}

/// The rate functional for a scenario; with `force_mc` a finite-user
/// fading scenario is simulated even when no exact form exists.
pub fn build_functional(
    params: &SystemParams,
    mc: &MonteCarloCfg,
    force_mc: bool,
) -> backhaul_core::Result<RateFunctional> {
    if force_mc && params.channel == ChannelKind::Rayleigh && !params.is_large_k() {
        RateFunctional::montecarlo(params, mc)
    } else {
        RateFunctional::for_params(params, mc)
    }
}

/// Rate on the affine low-SNR line at power `p`, where `Eb/N0 = p/R`.
pub fn affine_rate_at(ch: &LowSnrChar, p: f64) -> f64 {
    let per_db = ch.s0 / (10.0 * 2f64.log10());
    let floor = ch.eb_n0_min_db();
    // R − k(10 log10(p/R) − floor) is increasing in R.
    let g = |r: f64| r - per_db * (linear_to_db(p / r) - floor);
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    let (mut lo, mut hi) = (0.0, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn eval_scheme(
    scheme: Scheme,
    params: &SystemParams,
    f: &backhaul_core::Result<RateFunctional>,
    mc: &MonteCarloCfg,
) -> backhaul_core::Result<Outcome> {
    let value = |rate, r_star, uncertainty| Outcome::Value {
        rate,
        r_star,
        uncertainty,
    };
    Ok(match scheme {
        Scheme::Unlimited => {
            let u = f.clone()?.unlimited()?;
            value(u.mean, None, u.std_err)
        }
        Scheme::Oblivious => {
            let r = solve_fixed_point(f.as_ref().map_err(Clone::clone)?, params.c_backhaul)?;
            value(r.rate, Some(r.r_star), r.uncertainty)
        }
        Scheme::LocalDecoding => {
            let local = LocalRateParams {
                mc: *mc,
                ..Default::default()
            };
            let d = LocalDecoder::new(params, f.clone()?, &local)?.rate_dec_timeshare()?;
            value(d.rate, Some(d.r_opt), d.uncertainty)
        }
        Scheme::Cutset => value(cutset_bound(params)?.value, None, 0.0),
        Scheme::LowsnrAffine => {
            let ch = lowsnr_oblivious_closed(params)?;
            value(affine_rate_at(&ch, params.p), None, 0.0)
        }
    })
}

fn run_point(spec: &SweepSpec, v: f64, shared: Option<&backhaul_core::Result<RateFunctional>>) -> Vec<Row> {
    let params = spec.axis.apply(&spec.base, v);
    let needs = spec.schemes.iter().any(|s| s.needs_functional());
    let f = match shared {
        Some(f) => f.clone().map(|f| f.with_power(params.p)),
        None if needs => build_functional(&params, &spec.mc, spec.force_mc),
        None => Err(Error::Unsupported("no functional needed".into())),
    };
    spec.schemes
        .iter()
        .map(|&s| {
            let start = Instant::now();
            let outcome = eval_scheme(s, &params, &f, &spec.mc).unwrap_or_else(Outcome::Failed);
            Row {
                axis: v,
                scheme: spec.scheme_label(s),
                outcome,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                power: params.p,
            }
        })
        .collect()
}

/// Evaluates every scheme at every grid value.  Failures become error rows;
/// rows come out ordered by axis value, then by scheme.
pub fn run_sweep(spec: &SweepSpec) -> CliResult<Vec<Row>> {
    spec.validate()?;
    // Only α changes the channel statistics, so other axes share one
    // functional (and one Monte Carlo ensemble).
    let shared = (spec.axis != Axis::Alpha && spec.schemes.iter().any(|s| s.needs_functional()))
        .then(|| build_functional(&spec.base, &spec.mc, spec.force_mc));
    let rows: Vec<Vec<Row>> = spec
        .grid
        .par_iter()
        .map(|&v| run_point(spec, v, shared.as_ref()))
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

/// `x` to 9 significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..9).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

pub fn csv_line(row: &Row, timing: bool) -> String {
    let wall = if timing {
        format!("{:.3}", row.wall_ms)
    } else {
        "0".into()
    };
    match &row.outcome {
        Outcome::Value {
            rate,
            r_star,
            uncertainty,
        } => format!(
            "{},{},{},{},{},{}",
            fmt_sig(row.axis),
            row.scheme,
            fmt_sig(*rate),
            r_star.map(fmt_sig).unwrap_or_default(),
            fmt_sig(*uncertainty),
            wall
        ),
        Outcome::Failed(e) => format!("{},{},ERR:{},,,{}", fmt_sig(row.axis), row.scheme, e.code(), wall),
    }
}

pub fn write_csv<W: Write>(rows: &[Row], mut w: W, timing: bool) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", csv_line(row, timing))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use backhaul_core::{Model, Protocol};

    fn spec(schemes: Vec<Scheme>, axis: Axis, grid: Vec<f64>) -> SweepSpec {
        SweepSpec {
            schemes,
            axis,
            base: SystemParams::gaussian(Model::Wyner, 0.4, 10.0, 3.0),
            grid,
            mc: MonteCarloCfg::new(20, 20, 1),
            force_mc: false,
            label: None,
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(3.0), "3.00000000");
        assert_eq!(fmt_sig(123.456), "123.456000");
        assert_eq!(fmt_sig(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_sig(1e-7), "1.00000000e-7");
        assert_eq!(fmt_sig(f64::INFINITY), "inf");
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("1, 2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert!(parse_grid("a,b").is_err());
        assert!(run_sweep(&spec(vec![Scheme::Cutset], Axis::Alpha, vec![0.5, 0.2])).is_err());
        assert!(run_sweep(&spec(vec![Scheme::Cutset], Axis::Alpha, vec![])).is_err());
        assert!(run_sweep(&spec(vec![Scheme::Cutset], Axis::Alpha, vec![1.5])).is_err());
    }

    #[test]
    fn single_point_gives_one_row_per_scheme() {
        let rows = run_sweep(&spec(Scheme::ALL.to_vec(), Axis::Alpha, vec![0.4])).unwrap();
        assert_eq!(rows.len(), Scheme::ALL.len());
        for r in &rows {
            assert!(r.outcome.rate().is_some(), "{r:?}");
        }
    }

    #[test]
    fn unsupported_points_become_error_rows() {
        let mut s = spec(
            vec![Scheme::Oblivious, Scheme::Cutset],
            Axis::CBits,
            vec![1.0, 2.0],
        );
        s.base = SystemParams::rayleigh(Model::Wyner, 0.4, 10.0, 3.0, 1).with_protocol(Protocol::Tdma);
        let rows = run_sweep(&s).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(csv_line(&rows[0], false).contains("ERR:unsupported"));
        assert!(rows[1].outcome.rate().is_some());
    }

    #[test]
    fn affine_rate_lies_on_the_line() {
        let ch = LowSnrChar::new(std::f64::consts::LN_2, 2.0).unwrap();
        let p = 0.05;
        let r = affine_rate_at(&ch, p);
        let on_line = ch.s0 / (10.0 * 2f64.log10()) * (linear_to_db(p / r) - ch.eb_n0_min_db());
        assert!((r - on_line).abs() < 1e-12);
    }

    #[test]
    fn schemes_parse() {
        assert_eq!(Scheme::parse_list("all").unwrap().len(), 5);
        assert_eq!(
            Scheme::parse_list("oblivious,cutset").unwrap(),
            vec![Scheme::Oblivious, Scheme::Cutset]
        );
        assert!(Scheme::parse_list("magic").is_err());
    }
}
