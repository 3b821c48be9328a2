//! Internal consistency checks run by `backhaul selftest`.

use std::time::Instant;

use backhaul_core::{
    cutset_bound, db_to_linear, highsnr_scaling_check, highsnr_unlimited, lowsnr_oblivious,
    lowsnr_oblivious_closed, lowsnr_unlimited, rate_dec_timeshare, rate_sh_gaussian_closed, rate_single_user,
    region_minimizers, solve_fixed_point, solve_r_tilde_m, LocalRateParams, LowSnrChar, Model, MonteCarloCfg,
    Protocol, RateFunctional, SystemParams, INFINITE_USERS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Outcome = backhaul_core::Result<(bool, String)>;

fn gaussian(model: Model, alpha: f64, p: f64, c: f64) -> SystemParams {
    SystemParams::gaussian(model, alpha, p, c)
}

fn max_dev<I: IntoIterator<Item = backhaul_core::Result<f64>>>(it: I) -> backhaul_core::Result<f64> {
    let mut worst = 0.0_f64;
    for d in it {
        worst = worst.max(d?.abs());
    }
    Ok(worst)
}

fn within(dev: f64, tol: f64) -> (bool, String) {
    (
        dev <= tol,
        format!("max deviation {dev:.3e} (tolerance {tol:.1e})"),
    )
}

fn penalty_anchor(s: f64) -> Outcome {
    let su = LowSnrChar::new(std::f64::consts::LN_2, 2.0)?;
    let pen = lowsnr_oblivious(&su, 3.2)?.eb_n0_min_db() - su.eb_n0_min_db();
    Ok((
        (pen - 0.5).abs() <= 1e-3 * s,
        format!("Eb/N0 penalty at C = 3.2 is {pen:.5} dB (want 0.500)"),
    ))
}

fn r_tilde_anchor(s: f64) -> Outcome {
    let r = solve_r_tilde_m(&gaussian(Model::Wyner, 0.2, 1.0, 2.0))?;
    Ok((
        (r - 2.15).abs() <= 0.01 * s,
        format!("r~_m = {r:.4} bits (want 2.15)"),
    ))
}

fn closed_vs_solver(s: f64) -> Outcome {
    let mut devs = Vec::new();
    for &alpha in &[0.0, 0.25, 0.5, 0.75, 1.0] {
        for &p_db in &[-10.0, 0.0, 10.0, 20.0, 30.0] {
            for &c in &[0.5, 2.0, 4.0, 7.0, 10.0] {
                let p = gaussian(Model::SoftHandoff, alpha, db_to_linear(p_db), c);
                devs.push((|| {
                    let f = RateFunctional::ShGaussian { alpha, p: p.p };
                    Ok(rate_sh_gaussian_closed(&p)?.rate - solve_fixed_point(&f, c)?.rate)
                })());
            }
        }
    }
    Ok(within(max_dev(devs)?, 1e-9 * s))
}

fn single_user_reduction(s: f64) -> Outcome {
    let mut devs = Vec::new();
    for model in [Model::Wyner, Model::SoftHandoff] {
        for &p_db in &[-10.0, 10.0, 30.0] {
            for &c in &[0.5, 3.0, 9.0] {
                let p = gaussian(model, 0.0, db_to_linear(p_db), c);
                devs.push((|| {
                    let f = RateFunctional::for_params(&p, &MonteCarloCfg::default())?;
                    Ok(solve_fixed_point(&f, c)?.rate - rate_single_user(p.p, c))
                })());
            }
        }
    }
    Ok(within(max_dev(devs)?, 1e-9 * s))
}

fn unlimited_limits(s: f64) -> Outcome {
    let mut devs = Vec::new();
    let mut zero_ok = true;
    for model in [Model::Wyner, Model::SoftHandoff] {
        for &alpha in &[0.2, 0.6, 1.0] {
            let p = gaussian(model, alpha, 10.0, 40.0);
            let f = RateFunctional::for_params(&p, &MonteCarloCfg::default())?;
            devs.push(Ok(solve_fixed_point(&f, 40.0)?.rate - f.unlimited()?.mean));
            zero_ok &= solve_fixed_point(&f, 0.0)?.rate == 0.0;
        }
    }
    let (ok, detail) = within(max_dev(devs)?, 1e-6 * s);
    Ok((
        ok && zero_ok,
        format!("{detail}; zero backhaul gives zero: {zero_ok}"),
    ))
}

fn cutset_dominance(s: f64) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    for model in [Model::Wyner, Model::SoftHandoff] {
        for &alpha in &[0.0, 0.5, 1.0] {
            for &p_db in &[-10.0, 10.0, 30.0] {
                for &c in &[0.5, 3.0, 8.0] {
                    let p = gaussian(model, alpha, db_to_linear(p_db), c);
                    let f = RateFunctional::for_params(&p, &MonteCarloCfg::default())?;
                    let bound = cutset_bound(&p)?.value;
                    let obl = solve_fixed_point(&f, c)?.rate;
                    let dec = rate_dec_timeshare(&p, &f, &LocalRateParams::default())?.rate;
                    worst = worst.max(obl.max(dec) - bound);
                }
            }
        }
    }
    Ok((
        worst <= 1e-9 * s,
        format!("largest excess over the bound {worst:.3e}"),
    ))
}

fn finite_n_consecutive(s: f64) -> Outcome {
    let mut failures = Vec::new();
    for model in [Model::Wyner, Model::SoftHandoff] {
        for &alpha in &[0.2, 0.5, 1.0] {
            let p = gaussian(model, alpha, 10.0, 3.0);
            let f = RateFunctional::for_params(&p, &MonteCarloCfg::default())?;
            let r = solve_fixed_point(&f, 3.0)?.r_star;
            let (_, subsets) = region_minimizers(8, &p, r, 1e-9 * s)?;
            if !subsets.iter().any(|set| is_circular_run(set, 8)) {
                failures.push(format!("{model} alpha={alpha}"));
            }
        }
    }
    Ok((
        failures.is_empty(),
        if failures.is_empty() {
            "a consecutive subset attains the minimum in every case".into()
        } else {
            format!("no consecutive minimiser for {}", failures.join(", "))
        },
    ))
}

/// True when `set` is a run of cells that are adjacent on a circle of `n`.
pub fn is_circular_run(set: &[usize], n: usize) -> bool {
    if set.len() <= 1 || set.len() == n {
        return true;
    }
    let inside = |i: usize| set.binary_search(&i).is_ok();
    let starts = (0..n).filter(|&i| inside(i) && !inside((i + n - 1) % n)).count();
    starts == 1
}

fn lowsnr_identities(s: f64) -> Outcome {
    let mut devs = Vec::new();
    let cases = [
        SystemParams::gaussian(Model::Wyner, 0.2, 1.0, 1.0),
        SystemParams::gaussian(Model::SoftHandoff, 0.6, 1.0, 1.0),
        SystemParams::rayleigh(Model::Wyner, 0.4, 1.0, 1.0, 5),
        SystemParams::rayleigh(Model::SoftHandoff, 1.0, 1.0, 1.0, 1),
    ];
    for p in cases {
        for &c in &[0.25, 1.0, 2.0, 4.0, 8.0] {
            let p = p.with_backhaul(c);
            let a = lowsnr_oblivious(&lowsnr_unlimited(&p), c)?;
            let b = lowsnr_oblivious_closed(&p)?;
            devs.push(Ok(a.eb_n0_min - b.eb_n0_min));
            devs.push(Ok(a.s0 - b.s0));
        }
    }
    Ok(within(max_dev(devs)?, 1e-12 * s))
}

fn montecarlo_tdma(seed: u64, s: f64) -> Outcome {
    let p =
        SystemParams::rayleigh(Model::SoftHandoff, 1.0, 10.0, f64::INFINITY, 1).with_protocol(Protocol::Tdma);
    let exact = RateFunctional::ShTdmaRayleigh { p: 10.0 }.unlimited()?.mean;
    let mc = RateFunctional::montecarlo(&p, &MonteCarloCfg::new(60, 300, seed))?.unlimited()?;
    let tol = (4.0 * mc.std_err + 0.01 * exact) * s;
    let dev = (mc.mean - exact).abs();
    Ok((
        dev <= tol,
        format!("exact {exact:.5}, simulated {:.5} ± {:.5}", mc.mean, mc.std_err),
    ))
}

fn highsnr_scaling(_s: f64) -> Outcome {
    let p = gaussian(Model::Wyner, 0.4, 1.0, 0.0);
    let l_inf = highsnr_unlimited(&p)?.l_inf;
    let rows = highsnr_scaling_check(&p, &[20.0, 40.0, 60.0], |x| l_inf + x.log2().log2())?;
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let ok = gaps.iter().all(|&g| g > 0.0) && gaps.windows(2).all(|w| w[1] < w[0]);
    let shown: Vec<String> = gaps.iter().map(|g| format!("{g:.3e}")).collect();
    Ok((ok, format!("gaps {}", shown.join(", "))))
}

fn large_k_sanity(s: f64) -> Outcome {
    let p = SystemParams::rayleigh(Model::Wyner, 0.5, 10.0, 3.0, INFINITE_USERS);
    let f = RateFunctional::for_params(&p, &MonteCarloCfg::default())?;
    let r = solve_fixed_point(&f, 3.0)?.rate;
    let direct = backhaul_core::rate_wyner_fading_largek(&p)?.rate;
    Ok(within((r - direct).abs(), 1e-9 * s))
}

/// Runs every check; `tol_scale` multiplies all tolerances.
pub fn run_selftest(seed: u64, tol_scale: f64) -> Vec<Check> {
    type Named = (&'static str, Box<dyn Fn() -> Outcome>);
    let checks: Vec<Named> = vec![
        (
            "backhaul for a 0.5 dB energy penalty",
            Box::new(move || penalty_anchor(tol_scale)),
        ),
        (
            "low-SNR local-decoding threshold",
            Box::new(move || r_tilde_anchor(tol_scale)),
        ),
        (
            "soft-handoff closed form vs solver",
            Box::new(move || closed_vs_solver(tol_scale)),
        ),
        (
            "no interference gives single-user rate",
            Box::new(move || single_user_reduction(tol_scale)),
        ),
        (
            "large and zero backhaul limits",
            Box::new(move || unlimited_limits(tol_scale)),
        ),
        (
            "cut-set bound dominates",
            Box::new(move || cutset_dominance(tol_scale)),
        ),
        (
            "finite circle has consecutive minimiser",
            Box::new(move || finite_n_consecutive(tol_scale)),
        ),
        (
            "low-SNR closed forms",
            Box::new(move || lowsnr_identities(tol_scale)),
        ),
        (
            "simulated vs exact TDMA rate",
            Box::new(move || montecarlo_tdma(seed, tol_scale)),
        ),
        (
            "large-K fading closed form",
            Box::new(move || large_k_sanity(tol_scale)),
        ),
        (
            "high-SNR backhaul scaling",
            Box::new(move || highsnr_scaling(tol_scale)),
        ),
    ];
    checks
        .into_iter()
        .map(|(name, run)| {
            let start = Instant::now();
            let (passed, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
            Check {
                name,
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

pub fn format_report(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for c in checks {
        out.push_str(&format!(
            "{}  {:<width$}  {:>7.2}s  {}\n",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.seconds,
            c.detail
        ));
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    out.push_str(&format!("{} passed, {failed} failed\n", checks.len() - failed));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_runs() {
        assert!(is_circular_run(&[], 6));
        assert!(is_circular_run(&[2, 3, 4], 6));
        assert!(is_circular_run(&[0, 1, 5], 6));
        assert!(!is_circular_run(&[0, 2], 6));
        assert!(is_circular_run(&[0, 1, 2, 3, 4, 5], 6));
    }

    #[test]
    fn zero_tolerance_fails_the_suite() {
        let checks = run_selftest(MonteCarloCfg::DEFAULT_SEED, 0.0);
        assert!(checks.iter().any(|c| !c.passed));
        assert!(format_report(&checks).contains("FAIL"));
    }
}
