use std::fs;
use std::process::{Command, Output};

fn backhaul(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_backhaul"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn rate_prints_one_row_per_scheme() {
    let out = backhaul(&[
        "rate",
        "--alpha",
        "0.4",
        "--p-db",
        "10",
        "--c-bits",
        "3",
        "--no-timing",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("axis,scheme,rate_bits,r_star,uncertainty,wall_ms")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 5);
    let cutset = rows.iter().find(|l| l.contains(",cutset,")).unwrap();
    assert!(cutset.contains(",3.00000000,"), "{cutset}");
}

#[test]
fn sweep_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        let out = backhaul(&[
            "sweep",
            "--model",
            "sh",
            "--axis",
            "c_bits",
            "--grid",
            "0:6:4",
            "--scheme",
            "oblivious,local_decoding",
            "--no-timing",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(path).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 9);
}

#[test]
fn simulated_reruns_are_byte_identical() {
    let args = [
        "rate",
        "--channel",
        "rayleigh",
        "--k-users",
        "3",
        "--cells",
        "20",
        "--trials",
        "40",
        "--seed",
        "7",
        "--scheme",
        "unlimited,oblivious",
        "--no-timing",
    ];
    assert_eq!(backhaul(&args).stdout, backhaul(&args).stdout);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "model = sh\nalpha = 0.5\nc-bits = 2\nscheme = cutset\nno_timing = true\n",
    )
    .unwrap();
    let from_file = stdout(&backhaul(&["rate", "--config", cfg.to_str().unwrap()]));
    assert!(from_file.contains(",cutset,2.00000000,"), "{from_file}");
    let flagged = stdout(&backhaul(&[
        "rate",
        "--config",
        cfg.to_str().unwrap(),
        "--c-bits",
        "1",
    ]));
    assert!(flagged.contains(",cutset,1.00000000,"), "{flagged}");
}

#[test]
fn unknown_config_key_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "alpah = 0.5\n").unwrap();
    let out = backhaul(&["rate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpah"));
}

#[test]
fn invalid_parameters_exit_with_one() {
    assert_eq!(backhaul(&["rate", "--alpha", "1.5"]).status.code(), Some(1));
    assert_eq!(backhaul(&["figure", "13"]).status.code(), Some(1));
}

#[test]
fn unsupported_scenario_writes_error_row() {
    let out = backhaul(&[
        "rate",
        "--channel",
        "rayleigh",
        "--protocol",
        "tdma",
        "--scheme",
        "oblivious",
        "--no-timing",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("ERR:"));
}

#[test]
fn lowsnr_reports_each_scheme() {
    let out = backhaul(&["lowsnr", "--alpha", "0.2", "--c-bits", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("scheme,eb_n0_min,eb_n0_min_db,s0,r_tilde_m,lambda_o"));
    assert!(text.lines().count() >= 4);
}

#[test]
fn region_reports_minimising_subset() {
    let out = backhaul(&["region", "--cells", "8", "--alpha", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn selftest_with_zero_tolerance_exits_with_three() {
    let out = backhaul(&["selftest", "--tolerance-scale", "0"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    assert_eq!(backhaul(&[]).status.code(), Some(2));
}
