use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use darktraj::format::{read_json, EnsembleDoc};
use darktraj::stages::{summarize, AtlasDoc, ChiDoc, ConvergenceDoc, ErgodicDoc, GroupDoc, SummaryDoc, ValidateReport};
use darktraj_core::presets;

fn darktraj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_darktraj"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    let d = dir.to_str().unwrap();
    all.extend(["--out", d]);
    let out = darktraj(&all);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    out
}

#[test]
fn validate_examples() {
    let out = darktraj(&["validate", "--example", "1"]);
    assert_eq!(code(&out), 0);
    let r: ValidateReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((r.irreducible, r.period), (Some(true), Some(2)));
    assert!(r.stochasticity_residual <= 1e-12);

    let out = darktraj(&["validate", "--example", "2", "--theta", "0.62", "--phi", "0.41"]);
    assert_eq!(code(&out), 0);
    let r: ValidateReport = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((r.irreducible, r.period), (Some(true), Some(1)));

    let out = darktraj(&["validate", "--example", "3"]);
    assert_eq!(code(&out), 3);
    assert_eq!(code(&darktraj(&["validate", "--example", "3", "--with-v3"])), 0);
}

#[test]
fn validate_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let broken = dir.path().join("broken.json");
    fs::write(&broken, "{\"dim\": 2, \"kraus\": [").unwrap();
    assert_eq!(code(&darktraj(&["validate", "--ensemble", broken.to_str().unwrap()])), 4);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&darktraj(&["validate", "--ensemble", missing.to_str().unwrap()])), 4);

    let lossy = dir.path().join("lossy.json");
    let doc = EnsembleDoc {
        dim: 2,
        kraus: vec![darktraj::format::KrausDoc {
            weight: 1.0,
            matrix: vec![vec![[0.9, 0.0], [0.0, 0.0]], vec![[0.0, 0.0], [1.0, 0.0]]],
        }],
    };
    fs::write(&lossy, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = darktraj(&["validate", "--ensemble", lossy.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let r: ValidateReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(!r.stochastic && (r.stochasticity_residual - 0.19).abs() < 1e-12);
    // Admitted by a looser tolerance, then rejected as reducible (diagonal).
    let out = darktraj(&["validate", "--ensemble", lossy.to_str().unwrap(), "--tol-stochastic", "0.2"]);
    assert_eq!(code(&out), 3);
    let r: ValidateReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(r.stochastic);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&darktraj(&["frobnicate"])), 64);
    assert_eq!(code(&darktraj(&["validate", "--example", "7"])), 64);
    assert_eq!(code(&darktraj(&["validate"])), 4);
    assert_eq!(code(&darktraj(&["--help"])), 0);
}

fn summary(dir: &Path, args: &[&str]) -> SummaryDoc {
    let out = run_in(dir, args);
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn pipeline_example1_variants() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(dir.path(), &["pipeline", "--example", "1", "--variant", "5c"]);
    assert_eq!(s.r_m, 2);
    assert_eq!((s.group_kind.as_str(), s.group_order), ("finite", Some(8)));
    assert_eq!(s.transitivity, "not_transitive");
    assert!(!s.unique_invariant_measure);
    let ergodic: ErgodicDoc = read_json(&dir.path().join("ergodic.json")).unwrap();
    assert_eq!(ergodic.clusters.unwrap().len(), 8);
    let samples = fs::read_to_string(dir.path().join("samples.csv")).unwrap();
    assert!(samples.starts_with("bx,by,bz,weight,sphere_index\n"));
    assert_eq!(samples.lines().count(), 10_001);

    let s = summary(dir.path(), &["pipeline", "--example", "1", "--variant", "5a"]);
    assert_eq!(s.transitivity, "full_su");
    assert!(s.unique_invariant_measure);
    assert_eq!(s.lie_dim, Some(3));
}

#[test]
fn pipeline_example3_group_grows() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(dir.path(), &["pipeline", "--example", "3"]);
    assert_eq!(s.group_order, Some(4));
    let s = summary(dir.path(), &["pipeline", "--example", "3", "--with-v3"]);
    assert_eq!(s.group_order, Some(8));
}

#[test]
fn summary_rederives_from_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let s = summary(dir.path(), &["pipeline", "--example", "2", "--theta", "1.5707963267948966", "--phi", "0.7853981633974483"]);
    assert_eq!(s.group_order, Some(16));
    let p = dir.path();
    let atlas: AtlasDoc = read_json(&p.join("atlas.json")).unwrap();
    let chi: ChiDoc = read_json(&p.join("chi.json")).unwrap();
    let group: GroupDoc = read_json(&p.join("group.json")).unwrap();
    let ergodic: ErgodicDoc = read_json(&p.join("ergodic.json")).unwrap();
    assert!(group.smart_certified);
    let again = summarize(&atlas, &chi, &group, &ergodic).unwrap();
    assert_eq!(again, s);
    let on_disk: SummaryDoc = read_json(&p.join("summary.json")).unwrap();
    assert_eq!(on_disk, s);
}

#[test]
fn stage_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    run_in(p, &["dark", "--example", "1"]);
    let atlas: AtlasDoc = read_json(&p.join("atlas.json")).unwrap();
    for (row, want) in atlas.transitions.iter().zip([[0.0, 1.0], [1.0, 0.0]]) {
        assert!(row.iter().zip(want).all(|(a, b)| (a - b).abs() <= 1e-12));
    }
    run_in(p, &["chi", "--example", "1"]);
    let chi: ChiDoc = read_json(&p.join("chi.json")).unwrap();
    assert_eq!(chi.period, 2);
    assert!(chi.atoms.iter().all(|a| (a.weight - 0.5).abs() < 0.01));
    run_in(p, &["group", "--example", "1", "--variant", "5b"]);
    let group: GroupDoc = read_json(&p.join("group.json")).unwrap();
    assert_eq!((group.kind.as_str(), group.lie_dim), ("continuous", Some(1)));
    assert_eq!(group.transitivity, "undecided");
    run_in(p, &["ergodic", "--example", "1", "--variant", "5c", "--format", "json"]);
    let rows: Vec<serde_json::Value> = read_json(&p.join("samples.json")).unwrap();
    assert_eq!(rows.len(), 10_000);
    assert!(rows[0].get("sphere_index").is_some());
}

fn convergence(dir: &Path, args: &[&str]) -> ConvergenceDoc {
    let out = run_in(dir, args);
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn convergence_curves() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    convergence(p, &["convergence", "--example", "2"]);
    let s_n = fs::read_to_string(p.join("s_n.csv")).unwrap();
    for line in s_n.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(v <= 1e-12);
    }

    let c = convergence(p, &["convergence", "--example", "1"]);
    let fit = c.darkness_gap_fit.unwrap();
    assert!(fit.slope < 0.0 && fit.r_squared >= 0.9, "{fit:?}");
    assert!(p.join("w1.csv").exists() && p.join("darkness_gap.csv").exists());
}

#[test]
fn single_unitary_never_leaves_darkness() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("u.json");
    let e = presets::single_unitary(presets::demo_unitary(2)).unwrap();
    fs::write(&file, serde_json::to_string(&EnsembleDoc::from_ensemble(&e)).unwrap()).unwrap();
    let c = convergence(dir.path(), &["convergence", "--ensemble", file.to_str().unwrap()]);
    assert!(c.darkness_gap_fit.is_none());
    let gaps = fs::read_to_string(dir.path().join("darkness_gap.csv")).unwrap();
    for line in gaps.lines().skip(1) {
        assert_eq!(line.split(',').nth(1).unwrap(), "0");
    }
}

#[test]
fn config_documents() {
    let dir = tempfile::tempdir().unwrap();
    let e = presets::example2(0.62, 0.41).unwrap();
    fs::write(dir.path().join("e2.json"), serde_json::to_string(&EnsembleDoc::from_ensemble(&e)).unwrap()).unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"ensemble": {"file": "e2.json"}, "seeds": [5], "params": {"chi_keep": 2000}, "format": "json"}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = darktraj(&["chi", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let chi: ChiDoc = read_json(&out_dir.join("chi.json")).unwrap();
    assert_eq!(chi.n_keep, 2000);

    fs::write(&cfg, r#"{"ensemble": {"example": {"number": 1}}, "tolerances": {"stochastic": -1}}"#).unwrap();
    assert_eq!(code(&darktraj(&["validate", "--config", cfg.to_str().unwrap()])), 4);
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    for args in [
        vec!["pipeline", "--example", "1", "--variant", "5c", "--seed", "9"],
        vec!["convergence", "--example", "2", "--seed", "3"],
    ] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let out_a = run_in(a.path(), &args);
        let out_b = run_in(b.path(), &args);
        assert_eq!(out_a.stdout, out_b.stdout);
        assert_eq!(snapshot(a.path()), snapshot(b.path()));
    }
}
