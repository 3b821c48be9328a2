//! Command-line definition and command dispatch.

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use backhaul_core::{
    db_to_linear, lowsnr_dec, lowsnr_local_decode, lowsnr_oblivious, lowsnr_unlimited, rate_finite_n,
    region_finite_n, ChannelKind, Model, MonteCarloCfg, Protocol, SubsetSearch, SystemParams, INFINITE_USERS,
    MAX_EXHAUSTIVE_CELLS,
};
use clap::{Args, Parser, Subcommand};

use crate::config::ConfigFile;
use crate::error::{CliError, CliResult};
use crate::figures::run_figure;
use crate::selftest::{format_report, run_selftest};
use crate::sweep::{fmt_sig, parse_grid, run_sweep, write_csv, Axis, Outcome, Scheme, SweepSpec};

#[derive(Debug, Parser)]
#[command(
    name = "backhaul",
    version,
    about = "Uplink rates of cellular networks with limited-capacity backhaul"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Every selected scheme at a single operating point.
    Rate(CommonArgs),
    /// Selected schemes over a grid of one parameter.
    Sweep(SweepArgs),
    /// Dataset and gnuplot script for one figure (2 to 12).
    Figure(FigureArgs),
    /// Minimum energy per bit and wideband slope of each scheme.
    Lowsnr(CommonArgs),
    /// Oblivious rate of a finite circle by subset enumeration.
    Region(RegionArgs),
    /// Internal consistency checks.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// wyner or sh
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Per-cell SNR in dB.
    #[arg(long, allow_negative_numbers = true)]
    pub p_db: Option<f64>,
    /// Backhaul capacity per cell in bits per channel use (`inf` allowed).
    #[arg(long, allow_negative_numbers = true)]
    pub c_bits: Option<f64>,
    /// Users per cell, or `inf`.
    #[arg(long)]
    pub k_users: Option<String>,
    /// gaussian or rayleigh
    #[arg(long)]
    pub channel: Option<String>,
    /// wb or tdma
    #[arg(long)]
    pub protocol: Option<String>,
    /// `all` or a comma-separated list of unlimited, oblivious,
    /// local_decoding, cutset, lowsnr_affine.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Cells per Monte Carlo trial, or circle size for `region`.
    #[arg(long)]
    pub cells: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file (directory for `figure`); stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Simulate fading scenarios that have no exact evaluator.
    #[arg(long)]
    pub force_mc: bool,
    /// Write 0 in the wall_ms column so reruns are byte-identical.
    #[arg(long)]
    pub no_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// alpha, p_db or c_bits
    #[arg(long)]
    pub axis: Option<String>,
    /// `v1,v2,...` or `lo:hi:count`
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct FigureArgs {
    pub id: u8,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// exhaustive or consecutive
    #[arg(long)]
    pub search: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SelftestArgs {
    #[arg(long, default_value_t = MonteCarloCfg::DEFAULT_SEED)]
    pub seed: u64,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

/// Fully resolved options of one invocation.
#[derive(Debug, Clone)]
pub struct Settings {
    pub params: SystemParams,
    pub schemes: Vec<Scheme>,
    pub mc: MonteCarloCfg,
    pub force_mc: bool,
    pub timing: bool,
    pub out: Option<PathBuf>,
    pub cells: Option<usize>,
    cfg: ConfigFile,
}

fn parse_users(s: &str) -> CliResult<usize> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(INFINITE_USERS),
        v => match v.parse::<usize>() {
            Ok(k) if k >= 1 => Ok(k),
            _ => Err(CliError::Config(format!(
                "users per cell must be a positive integer or inf, got `{s}`"
            ))),
        },
    }
}

fn from_core<T: FromStr<Err = backhaul_core::Error>>(s: &str) -> CliResult<T> {
    Ok(s.parse::<T>()?)
}

impl Settings {
    pub fn resolve(args: &CommonArgs) -> CliResult<Self> {
        let cfg = match &args.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let text = |flag: &Option<String>, key: &str| flag.clone().or_else(|| cfg.get(key).map(String::from));
        let model: Model = from_core(&text(&args.model, "model").unwrap_or_else(|| "wyner".into()))?;
        let channel: ChannelKind =
            from_core(&text(&args.channel, "channel").unwrap_or_else(|| "gaussian".into()))?;
        let protocol: Protocol = from_core(&text(&args.protocol, "protocol").unwrap_or_else(|| "wb".into()))?;
        let k = parse_users(&text(&args.k_users, "k_users").unwrap_or_else(|| "1".into()))?;
        let alpha = args.alpha.or(cfg.parsed("alpha")?).unwrap_or(0.4);
        let p_db = args.p_db.or(cfg.parsed("p_db")?).unwrap_or(10.0);
        let c = args.c_bits.or(cfg.parsed("c_bits")?).unwrap_or(3.0);
        let p = db_to_linear(p_db);
        let params = match channel {
            ChannelKind::Gaussian => SystemParams::gaussian(model, alpha, p, c).with_users(k),
            ChannelKind::Rayleigh => SystemParams::rayleigh(model, alpha, p, c, k),
        }
        .with_protocol(protocol);
        params.validate()?;
        let schemes = Scheme::parse_list(&text(&args.scheme, "scheme").unwrap_or_else(|| "all".into()))?;
        let cells = args.cells.or(cfg.parsed("cells")?);
        let defaults = MonteCarloCfg::default();
        let mc = MonteCarloCfg::new(
            cells.unwrap_or(defaults.n_cells),
            args.trials.or(cfg.parsed("trials")?).unwrap_or(defaults.n_trials),
            args.seed.or(cfg.parsed("seed")?).unwrap_or(defaults.seed),
        );
        Ok(Settings {
            params,
            schemes,
            mc,
            force_mc: args.force_mc || cfg.flag("force_mc")?,
            timing: !(args.no_timing || cfg.flag("no_timing")?),
            out: args.out.clone().or_else(|| cfg.get("out").map(PathBuf::from)),
            cells,
            cfg,
        })
    }

    /// A value given on the command line or, failing that, in the config file.
    pub fn extra(&self, flag: &Option<String>, key: &str) -> Option<String> {
        flag.clone().or_else(|| self.cfg.get(key).map(String::from))
    }

    fn writer(&self) -> CliResult<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
            None => Box::new(std::io::stdout().lock()),
        })
    }
}

fn cmd_rate(args: &CommonArgs) -> CliResult<()> {
    let s = Settings::resolve(args)?;
    let spec = SweepSpec {
        schemes: s.schemes.clone(),
        axis: Axis::Alpha,
        base: s.params,
        grid: vec![s.params.alpha],
        mc: s.mc,
        force_mc: s.force_mc,
        label: None,
    };
    let rows = run_sweep(&spec)?;
    write_csv(&rows, s.writer()?, s.timing)?;
    match rows.into_iter().find_map(|r| match r.outcome {
        Outcome::Failed(e) => Some(e),
        Outcome::Value { .. } => None,
    }) {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let s = Settings::resolve(&args.common)?;
    let axis: Axis = s
        .extra(&args.axis, "axis")
        .ok_or_else(|| CliError::Config("a sweep needs --axis".into()))?
        .parse()?;
    let grid = parse_grid(
        &s.extra(&args.grid, "grid")
            .or_else(|| s.extra(&None, "range"))
            .ok_or_else(|| CliError::Config("a sweep needs --grid".into()))?,
    )?;
    let spec = SweepSpec {
        schemes: s.schemes.clone(),
        axis,
        base: s.params,
        grid,
        mc: s.mc,
        force_mc: s.force_mc,
        label: None,
    };
    let rows = run_sweep(&spec)?;
    write_csv(&rows, s.writer()?, s.timing)?;
    Ok(())
}

fn cmd_figure(args: &FigureArgs) -> CliResult<()> {
    let s = Settings::resolve(&args.common)?;
    let dir = s.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let out = run_figure(args.id, &dir, &s.mc, s.timing)?;
    eprintln!("wrote {} and {}", out.csv.display(), out.script.display());
    Ok(())
}

fn cmd_lowsnr(args: &CommonArgs) -> CliResult<()> {
    let s = Settings::resolve(args)?;
    let p = s.params;
    let line = |name: &str, ch: backhaul_core::LowSnrChar, extra: String| {
        format!(
            "{name},{},{},{},{extra}",
            fmt_sig(ch.eb_n0_min),
            fmt_sig(ch.eb_n0_min_db()),
            fmt_sig(ch.s0)
        )
    };
    let failed = |name: &str, e: backhaul_core::Error| format!("{name},ERR:{},,,,", e.code());
    let unl = lowsnr_unlimited(&p);
    let lines = [
        line("unlimited", unl, ",".into()),
        lowsnr_oblivious(&unl, p.c_backhaul)
            .map_or_else(|e| failed("oblivious", e), |ch| line("oblivious", ch, ",".into())),
        line("local_only", lowsnr_local_decode(&p), ",".into()),
        lowsnr_dec(&p).map_or_else(
            |e| failed("local_decoding", e),
            |d| {
                let extra = format!("{},{}", fmt_sig(d.r_tilde_m), fmt_sig(d.lambda_o));
                line("local_decoding", d.base, extra)
            },
        ),
    ];
    let mut w = s.writer()?;
    writeln!(w, "scheme,eb_n0_min,eb_n0_min_db,s0,r_tilde_m,lambda_o")?;
    for l in lines {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

fn cmd_region(args: &RegionArgs) -> CliResult<()> {
    let s = Settings::resolve(&args.common)?;
    let n = s.cells.unwrap_or(8);
    let search = match s.extra(&args.search, "search").as_deref() {
        None if n <= MAX_EXHAUSTIVE_CELLS => SubsetSearch::Exhaustive,
        None | Some("consecutive") => SubsetSearch::Consecutive,
        Some("exhaustive") => SubsetSearch::Exhaustive,
        Some(other) => return Err(CliError::Config(format!("unknown subset search `{other}`"))),
    };
    let start = std::time::Instant::now();
    let res = rate_finite_n(n, &s.params, search)?;
    let wall = start.elapsed().as_secs_f64() * 1e3;
    let row = crate::sweep::Row {
        axis: n as f64,
        scheme: match search {
            SubsetSearch::Exhaustive => "region_exhaustive".into(),
            SubsetSearch::Consecutive => "region_consecutive".into(),
        },
        outcome: Outcome::Value {
            rate: res.rate,
            r_star: Some(res.r_star),
            uncertainty: 0.0,
        },
        wall_ms: wall,
        power: s.params.p,
    };
    write_csv(&[row], s.writer()?, s.timing)?;
    if s.params.c_backhaul > 0.0 {
        let at = region_finite_n(n, &s.params, res.r_star, search)?;
        eprintln!(
            "minimising cell subset at r = {}: {:?}",
            fmt_sig(res.r_star),
            at.minimizing_subset
        );
    }
    Ok(())
}

fn cmd_selftest(args: &SelftestArgs) -> CliResult<()> {
    let checks = run_selftest(args.seed, args.tolerance_scale);
    print!("{}", format_report(&checks));
    match checks.iter().filter(|c| !c.passed).count() {
        0 => Ok(()),
        n => Err(CliError::SelftestFailed(n)),
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Rate(a) => cmd_rate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Figure(a) => cmd_figure(a),
        Command::Lowsnr(a) => cmd_lowsnr(a),
        Command::Region(a) => cmd_region(a),
        Command::Selftest(a) => cmd_selftest(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("backhaul").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn flags_override_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "alpha = 0.7\nmodel = sh\nk-users = inf\nchannel = rayleigh\n",
        )
        .unwrap();
        let cli = parse(&[
            "rate",
            "--config",
            path.to_str().unwrap(),
            "--alpha",
            "0.2",
            "--p-db",
            "-5",
        ]);
        let Command::Rate(args) = cli.command else {
            panic!()
        };
        let s = Settings::resolve(&args).unwrap();
        assert_eq!(s.params.alpha, 0.2);
        assert_eq!(s.params.model, Model::SoftHandoff);
        assert_eq!(s.params.k_users, INFINITE_USERS);
        assert!((s.params.p - db_to_linear(-5.0)).abs() < 1e-15);
    }

    #[test]
    fn invalid_values_are_rejected() {
        for bad in [
            vec!["rate", "--alpha", "1.5"],
            vec!["rate", "--k-users", "0"],
            vec!["rate", "--model", "hex"],
            vec!["rate", "--scheme", "nope"],
        ] {
            let Command::Rate(args) = parse(&bad).command else {
                panic!()
            };
            let err = Settings::resolve(&args).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{bad:?}");
        }
    }

    #[test]
    fn users_parse() {
        assert_eq!(parse_users("inf").unwrap(), INFINITE_USERS);
        assert_eq!(parse_users("5").unwrap(), 5);
        assert!(parse_users("-1").is_err());
    }
}
