use std::fs;
use std::process::Command;

use cweno_net::cweno::NamedSet;
use cweno_net::harness::scenarios::{EdgeSnapshot, ScenarioKind, Snapshot};
use cweno_net::harness::{ConvergenceTable, ReconCase};
use cweno_net_cli::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cweno-net"))
}

#[test]
fn parses_a_named_set() {
    let c = parse_args(["--scenario", "recon-smooth", "--params", "sigma1", "--n-max", "14"]).unwrap();
    assert_eq!(c.scenario, ScenarioKind::ReconSmooth);
    assert_eq!(c.param_set, ParamChoice::Named(NamedSet::Sigma1));
    assert_eq!((c.n_min, c.n_max), (1, 14));
    assert_eq!(c.emit, EmitKind::Table);
    assert!(c.warnings.is_empty());
}

#[test]
fn custom_set_violating_conditions_warns() {
    let c = parse_args(["--scenario", "recon-smooth", "--params", "custom", "--q", "2", "--gamma0", "1", "--K1", "0.25"])
        .unwrap();
    let ParamChoice::Custom(p) = c.param_set else { panic!("expected custom") };
    assert_eq!((p.q, p.gamma0, p.k1), (2.0, 1.0, 0.25));
    assert!(c.warnings.iter().any(|w| w.contains("gamma0 >= q")), "{:?}", c.warnings);
}

#[test]
fn custom_constant_epsilon() {
    let c = parse_args(["--scenario", "recon-disc-i25", "--params", "custom", "--eps", "1e-6", "--gamma0", "2", "--K1", "1", "--gamma1", "1"]).unwrap();
    let ParamChoice::Custom(p) = c.param_set else { panic!("expected custom") };
    assert_eq!(p, NamedSet::Sigma4.params());
    assert!(!c.warnings.is_empty());
}

#[test]
fn usage_errors() {
    assert!(matches!(parse_args(Vec::<&str>::new()), Err(CliError::Usage(_))));
    assert!(matches!(parse_args(["--scenario", "recon-smooth", "--bogus"]), Err(CliError::Usage(_))));
    assert!(matches!(parse_args(["--scenario", "recon-smooth", "--emit", "plot"]), Err(CliError::Usage(_))));
    assert!(matches!(
        parse_args(["--scenario", "recon-smooth", "--n-min", "5", "--n-max", "3"]),
        Err(CliError::Config(_))
    ));
    assert!(matches!(parse_args(["--scenario", "recon-smooth", "--q", "2"]), Err(CliError::Config(_))));
    assert!(matches!(parse_args(["--scenario", "nope"]), Err(CliError::Solver(_))));
    assert!(matches!(parse_args(["--scenario", "dam-break-a", "--emit", "snapshot"]), Err(CliError::Config(_))));
    assert!(parse_args(["--scenario", "recon-smooth", "--params", "custom", "--q", "3"]).is_err());
}

#[test]
fn times_are_comma_separated() {
    let c = parse_args(["--scenario", "dam-break-b", "--emit", "snapshot", "--out", "x", "--times", "0.35,0.6"]).unwrap();
    assert_eq!(c.times, vec![0.35, 0.6]);
    assert_eq!((c.n_min, c.n_max), (3, 3));
}

fn two_rows() -> ConvergenceTable {
    ConvergenceTable::from_errors("recon-smooth", "sigma1", &[(1, 0.125, 0.322), (2, 0.0625, 0.0903)])
}

#[test]
fn table_csv_format() {
    let mut buf = Vec::new();
    write_table_csv(&two_rows(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.split_terminator('\n').collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "n,h,error,eoc");
    assert_eq!(lines[1], "1,1.25e-01,3.220000e-01,");
    assert_eq!(lines[2], "2,6.25e-02,9.030000e-02,1.83");
    assert!(!text.contains('\r'));
}

#[test]
fn number_formats() {
    assert_eq!(format_error(6.612e-13), "6.612000e-13");
    assert_eq!(format_error(1.25), "1.250000e+00");
    assert_eq!(format_error(2.5e-100), "2.500000e-100");
    assert_eq!(format_exact(0.5), "5.00e-01");
    assert_eq!(format_exact(1.0 / 3.0), "3.333333333333333e-01");
    assert_eq!(format_exact(-4.0), "-4.00e+00");
    assert_eq!(format_exact(0.0), "0.00e+00");
    for x in [0.1, 1.0 / 3.0, -2.0e-7, 123456.789] {
        assert_eq!(format_exact(x).parse::<f64>().unwrap(), x);
    }
}

#[test]
fn table_round_trip() {
    let table = cweno_net::harness::reconstruction_study(ReconCase::Smooth, &NamedSet::Sigma2.params(), "sigma2", 1..=8)
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.csv");
    emit_table_csv(&table, &path).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let back = parse_table_csv(&text, "recon-smooth", "sigma2").unwrap();
    assert_eq!(back.rows.len(), table.rows.len());
    for (a, b) in table.rows.iter().zip(&back.rows) {
        assert_eq!(a.n, b.n);
        assert_eq!(a.h, b.h);
        assert!((a.error - b.error).abs() <= 5e-7 * a.error);
        match (a.eoc, b.eoc) {
            (Some(x), Some(y)) => assert!((x - y).abs() <= 0.005 + 1e-12),
            (None, None) => {}
            other => panic!("eoc mismatch {other:?}"),
        }
    }
    let again = dir.path().join("u.csv");
    emit_table_csv(&back, &again).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
    assert!(parse_table_csv("n,h\n", "a", "b").is_err());
    assert!(parse_table_csv("n,h,error,eoc\n1,x,1,\n", "a", "b").is_err());
}

#[test]
fn snapshot_of_constant_edge() {
    let shot = Snapshot {
        t: 0.5,
        edges: vec![EdgeSnapshot {
            name: "road".into(),
            components: vec!["rho".into()],
            x_center: vec![0.5, 1.5, 2.5],
            values: vec![vec![0.3]; 3],
        }],
    };
    let dir = tempfile::tempdir().unwrap();
    let files = emit_snapshot_csv(&shot, dir.path(), "s").unwrap();
    assert_eq!(files.len(), 1);
    let first = fs::read(&files[0]).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert_eq!(text, "x_center,rho\n5.00e-01,3.00e-01\n1.50e+00,3.00e-01\n2.50e+00,3.00e-01\n");
    emit_snapshot_csv(&shot, dir.path(), "s").unwrap();
    assert_eq!(fs::read(&files[0]).unwrap(), first);
}

#[test]
fn dam_break_snapshot_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("snap");
    let cfg = parse_args([
        "--scenario",
        "dam-break-b",
        "--emit",
        "snapshot",
        "--n-max",
        "1",
        "--times",
        "0.35",
        "--out",
        out.to_str().unwrap(),
    ])
    .unwrap();
    let RunOutput::Snapshots { files, steps } = run(&cfg).unwrap() else { panic!("expected snapshots") };
    assert!(steps > 0);
    assert_eq!(files.len(), 1);
    let text = fs::read_to_string(&files[0]).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x_center,h,q"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r[1] > 0.0));
    // symmetric dam: mirror-symmetric heights
    for i in 0..50 {
        assert!((rows[i][1] - rows[99 - i][1]).abs() < 1e-10, "cell {i}");
    }
}

#[test]
fn identical_runs_give_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let path = dir.path().join(format!("{k}.csv"));
        let cfg = parse_args([
            "--scenario",
            "traffic-smooth",
            "--params",
            "sigma2",
            "--n-min",
            "0",
            "--n-max",
            "2",
            "--out",
            path.to_str().unwrap(),
        ])
        .unwrap();
        run(&cfg).unwrap();
        outputs.push(fs::read(path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(String::from_utf8_lossy(&outputs[0]).lines().count(), 4);
}

#[test]
fn binary_exit_codes() {
    let empty = bin().output().unwrap();
    assert!(!empty.status.success());
    let err = String::from_utf8_lossy(&empty.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");

    let ok = bin().args(["--scenario", "recon-disc-i15", "--params", "sigma2", "--n-max", "3"]).output().unwrap();
    assert!(ok.status.success());
    let out = String::from_utf8_lossy(&ok.stdout);
    assert!(out.starts_with("n,h,error,eoc\n1,1.25e-01,7.32"), "{out}");

    let dir = tempfile::tempdir().unwrap();
    let blocked = dir.path().join("missing").join("t.csv");
    let fail = bin()
        .args(["--scenario", "recon-smooth", "--n-max", "2", "--out", blocked.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(!fail.status.success());
    assert_eq!(String::from_utf8_lossy(&fail.stderr).trim_end().lines().count(), 1);

    let no_measure = bin().args(["--scenario", "dam-break-a"]).output().unwrap();
    assert!(!no_measure.status.success());

    let warn = bin()
        .args(["--scenario", "recon-smooth", "--params", "custom", "--q", "2", "--gamma0", "1", "--n-max", "2"])
        .output()
        .unwrap();
    assert!(warn.status.success());
    assert!(String::from_utf8_lossy(&warn.stderr).contains("warning"));
}
