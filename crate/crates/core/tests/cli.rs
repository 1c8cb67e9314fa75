use std::path::Path;
use std::process::{Command, Output};

use factor_repro::efa::{sample_data, SeedTrace};
use factor_repro::metrics::delta_pair;
use factor_repro::model::{build_simple_structure, implied_sigma, ModelSet, ModelSetSpec};

fn bin(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_factor-repro"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn synthetic_csv(dir: &Path, per_factor: usize, l: f64) -> String {
    let model = build_simple_structure(&ModelSetSpec::new(ModelSet::Set1, 1, per_factor, l)).unwrap();
    let data = sample_data(&model, 900, SeedTrace::new(3, 0, 0)).unwrap();
    let mut text = (1..=per_factor).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    text.push('\n');
    for row in data.values.row_iter() {
        text.push_str(&row.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(","));
        text.push_str("\r\n");
    }
    let path = dir.join(format!("data_{per_factor}.csv"));
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bin(&["verify"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    let report = std::fs::read_to_string(dir.path().join("verify_report.csv")).unwrap();
    assert!(report.starts_with("theorem,conditions_checked,max_violation,tolerance,passed,note\n"));
    let t32 = report.lines().find(|l| l.starts_with("T32")).unwrap();
    assert!(t32.contains("[0.759, 0.761]"), "{t32}");
    let fail = bin(&["verify", "--tolerance-override", "1e-20"], dir.path());
    assert_eq!(fail.status.code(), Some(1));
}

#[test]
fn population_sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["population-sweep", "--param", "sets=1", "--svg"];
    assert!(bin(&args, dir.path()).status.success());
    let sweep = std::fs::read(dir.path().join("population_sweep.csv")).unwrap();
    let text = String::from_utf8(sweep.clone()).unwrap();
    assert_eq!(text.lines().count(), 1 + 10 * 9 * 15);
    assert!(!text.contains('\r'));
    let thresholds = std::fs::read_to_string(dir.path().join("thresholds.csv")).unwrap();
    assert!(thresholds.lines().any(|l| l == "1,2,0.95,upper"), "{thresholds}");
    let svg = std::fs::read_to_string(dir.path().join("gap_heatmap_set1.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("#ffffff"));

    let again = tempfile::tempdir().unwrap();
    assert!(bin(&args, again.path()).status.success());
    assert_eq!(std::fs::read(again.path().join("population_sweep.csv")).unwrap(), sweep);
}

#[test]
fn sample_sweep_seed_changes_values_not_schema() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "sample-sweep",
        "--param",
        "cells=q1_orth",
        "--param",
        "per_factor=3",
        "--param",
        "l=.6",
    ];
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let mut args = base.to_vec();
        args.extend([
            "--param",
            "loading_modes=constant",
            "--param",
            "n=150",
            "--reps",
            "5",
            "--seed",
            seed,
        ]);
        let o = bin(&args, &out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stderr).contains("[1/1] q1_orth"));
        std::fs::read_to_string(out.join("sample_sweep.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("2", "b");
    assert_eq!(a.lines().next(), b.lines().next());
    assert_ne!(a, b);
}

#[test]
fn sample_sweep_rejects_single_replication() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["sample-sweep", "--reps", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reps"));
}

#[test]
fn analyze_recommendations() {
    let dir = tempfile::tempdir().unwrap();
    let weak = synthetic_csv(dir.path(), 4, 0.40);
    let o = bin(&["analyze", &weak, "--q", "1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("recommendation: single-variable"), "{text}");
    assert!(text.contains("rule of thumb"));

    // the population gap at the same coordinates has the same sign
    let model = build_simple_structure(&ModelSetSpec::new(ModelSet::Set1, 1, 4, 0.40)).unwrap();
    assert!(delta_pair(&model, &implied_sigma(&model).unwrap()).unwrap().gap > 0.0);

    let strong = synthetic_csv(dir.path(), 9, 0.80);
    let o = bin(&["analyze", &strong, "--q", "1"], dir.path());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("recommendation: conventional"), "{text}");
    assert!(dir.path().join("analyze_report.txt").exists());
}

#[test]
fn analyze_reports_parse_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "a,b,c\n1,2,3\n4,x,6\n").unwrap();
    let o = bin(&["analyze", path.to_str().unwrap(), "--q", "1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 3, column 2"), "{err}");
}

#[test]
fn config_errors_name_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.conf");
    std::fs::write(&cfg, "# grid\nsets = 1\nq = one\n").unwrap();
    let o = bin(&["population-sweep", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("`q`"), "{err}");
}

#[test]
fn threshold_command() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["threshold", "--set", "1", "--per-factor", "3"], dir.path());
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("thresholds.csv")).unwrap();
    assert_eq!(csv, "set,per_factor,threshold,censored\n1,3,0.759,no\n");
}

#[test]
fn msq_denominator_flag() {
    let dir = tempfile::tempdir().unwrap();
    let read = |denom: &str| {
        let out = dir.path().join(denom);
        let args = [
            "population-sweep",
            "--param",
            "sets=1",
            "--param",
            "q=1",
            "--param",
            "per_factor=3",
            "--msq-denominator",
            denom,
        ];
        assert!(bin(&args, &out).status.success());
        std::fs::read_to_string(out.join("population_sweep.csv")).unwrap()
    };
    assert_ne!(read("offdiag"), read("all"));
    let o = bin(&["population-sweep", "--msq-denominator", "half"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}
