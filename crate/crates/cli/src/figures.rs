//! Datasets for the rate-versus-parameter and low-SNR figures.

use std::path::{Path, PathBuf};

use backhaul_core::{
    affine_lowsnr_curve, exact_lowsnr_curve, lowsnr_dec, lowsnr_oblivious_closed, lowsnr_unlimited,
    solve_fixed_point, ChannelKind, LocalDecoder, LocalRateParams, Model, MonteCarloCfg, Protocol,
    RateFunctional, SystemParams, INFINITE_USERS,
};

use crate::error::{CliError, CliResult};
use crate::sweep::{run_sweep, write_csv, Axis, Outcome, Row, Scheme, SweepSpec};

pub const FIGURE_IDS: std::ops::RangeInclusive<u8> = 2..=12;

/// Access variants compared in the fading figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    Awgn,
    Tdma,
    Wideband(usize),
}

impl Access {
    pub fn label(self) -> Option<String> {
        match self {
            Access::Awgn => None,
            Access::Tdma => Some("tdma".into()),
            Access::Wideband(INFINITE_USERS) => Some("wb-kinf".into()),
            Access::Wideband(k) => Some(format!("wb-k{k}")),
        }
    }

    fn params(self, base: SystemParams) -> SystemParams {
        match self {
            Access::Awgn => base,
            Access::Tdma => SystemParams {
                channel: ChannelKind::Rayleigh,
                ..base
            }
            .with_protocol(Protocol::Tdma)
            .with_users(1),
            Access::Wideband(k) => SystemParams {
                channel: ChannelKind::Rayleigh,
                ..base
            }
            .with_protocol(Protocol::Wideband)
            .with_users(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FigureKind {
    /// Achievable rates against one parameter.
    Sweep {
        axis: Axis,
        grid: Vec<f64>,
        access: Vec<Access>,
    },
    /// Spectral efficiency against `Eb/N0`.
    LowSnr {
        p_db_grid: Vec<f64>,
        eb_n0_db_grid: Vec<f64>,
    },
}

/// Fixed parameters and swept axis of one figure.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureRecipe {
    pub id: u8,
    pub model: Model,
    pub alpha: f64,
    pub p_db: f64,
    pub c_bits: f64,
    pub kind: FigureKind,
}

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

const FADING: [Access; 3] = [
    Access::Tdma,
    Access::Wideband(5),
    Access::Wideband(INFINITE_USERS),
];

pub fn recipe(id: u8) -> CliResult<FigureRecipe> {
    let sweep = |axis, grid, access: &[Access]| FigureKind::Sweep {
        axis,
        grid,
        access: access.to_vec(),
    };
    let low = || FigureKind::LowSnr {
        p_db_grid: grid(-30.0, 10.0, 41),
        eb_n0_db_grid: grid(-2.0, 8.0, 51),
    };
    let (alpha, p_db, c_bits, kind) = match id {
        2 => (
            0.0,
            10.0,
            3.0,
            sweep(Axis::Alpha, grid(0.0, 1.0, 21), &[Access::Awgn]),
        ),
        3 => (
            0.0,
            10.0,
            6.0,
            sweep(Axis::Alpha, grid(0.0, 1.0, 21), &[Access::Awgn]),
        ),
        4 => (0.0, 10.0, 3.0, sweep(Axis::Alpha, grid(0.0, 1.0, 11), &FADING)),
        5 => (0.0, 10.0, 6.0, sweep(Axis::Alpha, grid(0.0, 1.0, 11), &FADING)),
        6 => (
            0.15,
            0.0,
            6.0,
            sweep(Axis::PDb, grid(-10.0, 30.0, 21), &[Access::Awgn]),
        ),
        7 => (0.15, 0.0, 6.0, sweep(Axis::PDb, grid(-10.0, 30.0, 9), &FADING)),
        8 => (
            0.4,
            10.0,
            0.0,
            sweep(Axis::CBits, grid(0.0, 10.0, 21), &[Access::Awgn]),
        ),
        9 => (0.4, 10.0, 0.0, sweep(Axis::CBits, grid(0.0, 10.0, 11), &FADING)),
        10 => (0.2, 0.0, 2.0, low()),
        11 => (0.2, 0.0, 4.0, low()),
        12 => (0.2, 0.0, 6.0, low()),
        other => {
            return Err(CliError::Config(format!(
                "figure ids run from {} to {}, got {other}",
                FIGURE_IDS.start(),
                FIGURE_IDS.end()
            )))
        }
    };
    Ok(FigureRecipe {
        id,
        model: Model::Wyner,
        alpha,
        p_db,
        c_bits,
        kind,
    })
}

impl FigureRecipe {
    pub fn base(&self) -> SystemParams {
        SystemParams::gaussian(
            self.model,
            self.alpha,
            backhaul_core::db_to_linear(self.p_db),
            self.c_bits,
        )
    }

    pub fn file_stem(&self) -> String {
        format!("fig{:02}", self.id)
    }

    pub fn x_label(&self) -> &'static str {
        match &self.kind {
            FigureKind::Sweep {
                axis: Axis::Alpha, ..
            } => "interference level alpha",
            FigureKind::Sweep { axis: Axis::PDb, .. } => "P [dB]",
            FigureKind::Sweep {
                axis: Axis::CBits, ..
            } => "backhaul capacity C [bits/channel use]",
            FigureKind::LowSnr { .. } => "Eb/N0 [dB]",
        }
    }
}

const SWEEP_SCHEMES: [Scheme; 4] = [
    Scheme::Unlimited,
    Scheme::Oblivious,
    Scheme::LocalDecoding,
    Scheme::Cutset,
];

fn lowsnr_rows(recipe: &FigureRecipe, p_db_grid: &[f64], eb_grid: &[f64]) -> CliResult<Vec<Row>> {
    let base = recipe.base();
    let f = RateFunctional::for_params(&base, &MonteCarloCfg::default())?;
    let c = base.c_backhaul;
    let powers: Vec<f64> = p_db_grid
        .iter()
        .map(|&d| backhaul_core::db_to_linear(d))
        .collect();
    let mut rows = Vec::new();
    let mut push_curve = |name: &str, pts: Vec<(f64, f64, f64, Option<f64>)>| {
        for (x, rate, p, r_star) in pts {
            rows.push(Row {
                axis: x,
                scheme: name.to_string(),
                outcome: Outcome::Value {
                    rate,
                    r_star,
                    uncertainty: 0.0,
                },
                wall_ms: 0.0,
                power: p,
            });
        }
    };
    let exact = |rate: &dyn Fn(f64) -> backhaul_core::Result<(f64, Option<f64>)>| {
        let mut out = Vec::new();
        for &p in &powers {
            let (r, r_star) = rate(p)?;
            if let Some(&(x, r)) = exact_lowsnr_curve(|_| Ok(r), &[p])?.first() {
                out.push((x, r, p, r_star));
            }
        }
        Ok::<_, CliError>(out)
    };
    push_curve(
        "upper_bound",
        exact(&|p| Ok((f.with_power(p).unlimited()?.mean.min(c), None)))?,
    );
    push_curve(
        "oblivious",
        exact(&|p| {
            let r = solve_fixed_point(&f.with_power(p), c)?;
            Ok((r.rate, Some(r.r_star)))
        })?,
    );
    push_curve(
        "local_decoding",
        exact(&|p| {
            let params = base.with_power(p);
            let d = LocalDecoder::new(&params, f.with_power(p), &LocalRateParams::default())?
                .rate_dec_timeshare()?;
            Ok((d.rate, Some(d.r_opt)))
        })?,
    );
    let affine = |ch| -> Vec<(f64, f64, f64, Option<f64>)> {
        affine_lowsnr_curve(&ch, eb_grid)
            .into_iter()
            .map(|(x, r)| (x, r, f64::NAN, None))
            .collect()
    };
    push_curve("upper_bound_affine", affine(lowsnr_unlimited(&base)));
    push_curve("oblivious_affine", affine(lowsnr_oblivious_closed(&base)?));
    push_curve("local_decoding_affine", affine(lowsnr_dec(&base)?.base));
    Ok(rows)
}

/// Runs a figure's recipe and returns its rows.
pub fn figure_rows(recipe: &FigureRecipe, mc: &MonteCarloCfg) -> CliResult<Vec<Row>> {
    match &recipe.kind {
        FigureKind::Sweep { axis, grid, access } => {
            let mut rows = Vec::new();
            for &a in access {
                let spec = SweepSpec {
                    schemes: SWEEP_SCHEMES.to_vec(),
                    axis: *axis,
                    base: a.params(recipe.base()),
                    grid: grid.clone(),
                    mc: *mc,
                    force_mc: a == Access::Tdma,
                    label: a.label(),
                };
                rows.extend(run_sweep(&spec)?);
            }
            Ok(rows)
        }
        FigureKind::LowSnr {
            p_db_grid,
            eb_n0_db_grid,
        } => lowsnr_rows(recipe, p_db_grid, eb_n0_db_grid),
    }
}

fn plot_script(recipe: &FigureRecipe, csv_name: &str, rows: &[Row]) -> String {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.scheme.as_str()) {
            names.push(&r.scheme);
        }
    }
    let mut s = String::new();
    s.push_str("# gnuplot script\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set key outside right\n");
    s.push_str(&format!("set xlabel '{}'\n", recipe.x_label()));
    s.push_str("set ylabel 'per-cell sum-rate [bits/channel use]'\n");
    s.push_str(&format!("set title 'Figure {}'\n", recipe.id));
    s.push_str(&format!("schemes = \"{}\"\n", names.join(" ")));
    s.push_str(&format!(
        "plot for [s in schemes] '{csv_name}' using 1:(strcol(2) eq s ? $3 : NaN) \
         every ::1 with linespoints title s\n"
    ));
    s
}

pub struct FigureOutput {
    pub csv: PathBuf,
    pub script: PathBuf,
    pub rows: Vec<Row>,
}

/// Writes `figNN.csv` and `figNN.gp` into `out_dir`.
pub fn run_figure(id: u8, out_dir: &Path, mc: &MonteCarloCfg, timing: bool) -> CliResult<FigureOutput> {
    let recipe = recipe(id)?;
    let rows = figure_rows(&recipe, mc)?;
    std::fs::create_dir_all(out_dir)?;
    let stem = recipe.file_stem();
    let csv = out_dir.join(format!("{stem}.csv"));
    let script = out_dir.join(format!("{stem}.gp"));
    write_csv(
        &rows,
        std::io::BufWriter::new(std::fs::File::create(&csv)?),
        timing,
    )?;
    std::fs::write(&script, plot_script(&recipe, &format!("{stem}.csv"), &rows))?;
    Ok(FigureOutput { csv, script, rows })
}

fn base_name(scheme: &str) -> (&str, Option<&str>) {
    match scheme.split_once('/') {
        Some((s, l)) => (s, Some(l)),
        None => (scheme, None),
    }
}

/// Ordering checks on a figure's rows: achievable rates below the upper
/// bound, local decoding at least as good as oblivious processing, and rates
/// growing with the number of users in the fading figures.
pub fn figure_violations(recipe: &FigureRecipe, rows: &[Row]) -> Vec<String> {
    const TOL: f64 = 1e-9;
    let mut out = Vec::new();
    let find = |scheme: &str, label: Option<&str>, power: f64, axis: Option<f64>| {
        rows.iter().find(|r| {
            base_name(&r.scheme) == (scheme, label) && r.power == power && axis.map_or(true, |a| r.axis == a)
        })
    };
    let is_lowsnr = matches!(recipe.kind, FigureKind::LowSnr { .. });
    for r in rows {
        if let Outcome::Failed(e) = &r.outcome {
            out.push(format!("{} at {}: {e}", r.scheme, r.axis));
            continue;
        }
        let (name, label) = base_name(&r.scheme);
        if !matches!(name, "oblivious" | "local_decoding" | "unlimited") {
            continue;
        }
        let rate = r.outcome.rate().unwrap_or(f64::NAN);
        let slack = TOL + 3.0 * r.outcome.uncertainty();
        let bound = if is_lowsnr {
            find("upper_bound", label, r.power, None)
        } else {
            find("cutset", label, r.power, Some(r.axis))
        };
        let bound_rate = bound.and_then(|b| b.outcome.rate());
        if name != "unlimited" {
            match bound_rate {
                Some(b) if rate <= b + slack => {}
                Some(b) => out.push(format!("{} at {}: {rate} exceeds bound {b}", r.scheme, r.axis)),
                None => out.push(format!("{} at {}: no bound row", r.scheme, r.axis)),
            }
        }
        if name == "local_decoding" {
            let obl = if is_lowsnr {
                find("oblivious", label, r.power, None)
            } else {
                find("oblivious", label, r.power, Some(r.axis))
            };
            if let Some(o) = obl.and_then(|o| o.outcome.rate()) {
                if rate < o - TOL {
                    out.push(format!("{} at {}: {rate} below oblivious {o}", r.scheme, r.axis));
                }
            }
        }
    }
    if let FigureKind::Sweep { access, .. } = &recipe.kind {
        if access.len() > 1 {
            let labels: Vec<String> = access.iter().filter_map(|a| a.label()).collect();
            for scheme in ["unlimited", "oblivious"] {
                for pair in labels.windows(2) {
                    for lo in rows
                        .iter()
                        .filter(|r| base_name(&r.scheme) == (scheme, Some(&pair[0])))
                    {
                        let hi = find(scheme, Some(&pair[1]), lo.power, Some(lo.axis));
                        if let (Some(a), Some(b)) = (lo.outcome.rate(), hi.and_then(|h| h.outcome.rate())) {
                            let slack = TOL
                                + 3.0
                                    * (lo.outcome.uncertainty()
                                        + hi.map_or(0.0, |h| h.outcome.uncertainty()));
                            if a > b + slack {
                                out.push(format!(
                                    "{scheme} at {}: {} gives {a} > {} gives {b}",
                                    lo.axis, pair[0], pair[1]
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipes_bind_the_caption_parameters() {
        let expect = [
            (2, 10.0, 3.0, None),
            (3, 10.0, 6.0, None),
            (4, 10.0, 3.0, None),
            (5, 10.0, 6.0, None),
            (6, f64::NAN, 6.0, Some(0.15)),
            (7, f64::NAN, 6.0, Some(0.15)),
            (8, 10.0, f64::NAN, Some(0.4)),
            (9, 10.0, f64::NAN, Some(0.4)),
            (10, f64::NAN, 2.0, Some(0.2)),
            (11, f64::NAN, 4.0, Some(0.2)),
            (12, f64::NAN, 6.0, Some(0.2)),
        ];
        for (id, p_db, c, alpha) in expect {
            let r = recipe(id).unwrap();
            if !f64::is_nan(p_db) {
                assert_eq!(r.p_db, p_db, "figure {id}");
            }
            if !f64::is_nan(c) {
                assert_eq!(r.c_bits, c, "figure {id}");
            }
            if let Some(a) = alpha {
                assert_eq!(r.alpha, a, "figure {id}");
            }
        }
        let axis = |id| match recipe(id).unwrap().kind {
            FigureKind::Sweep { axis, .. } => Some(axis),
            FigureKind::LowSnr { .. } => None,
        };
        assert_eq!(axis(2), Some(Axis::Alpha));
        assert_eq!(axis(5), Some(Axis::Alpha));
        assert_eq!(axis(6), Some(Axis::PDb));
        assert_eq!(axis(9), Some(Axis::CBits));
        assert_eq!(axis(11), None);
        assert!(recipe(1).is_err());
        assert!(recipe(13).is_err());
    }

    #[test]
    fn fading_figures_compare_three_access_schemes() {
        for id in [4, 5, 7, 9] {
            match recipe(id).unwrap().kind {
                FigureKind::Sweep { access, .. } => assert_eq!(access, FADING.to_vec()),
                _ => panic!("figure {id}"),
            }
        }
        for id in [2, 3, 6, 8] {
            match recipe(id).unwrap().kind {
                FigureKind::Sweep { access, .. } => assert_eq!(access, vec![Access::Awgn]),
                _ => panic!("figure {id}"),
            }
        }
    }

    #[test]
    fn access_labels() {
        assert_eq!(Access::Tdma.label().as_deref(), Some("tdma"));
        assert_eq!(Access::Wideband(5).label().as_deref(), Some("wb-k5"));
        assert_eq!(
            Access::Wideband(INFINITE_USERS).label().as_deref(),
            Some("wb-kinf")
        );
        assert_eq!(Access::Awgn.label(), None);
    }
}
