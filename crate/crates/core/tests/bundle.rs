use std::fs;

use hiring_sim::io::{content_hash, emit_results, run_experiment, run_preset};
use hiring_sim::{parse_config_str, preset};

fn header(path: &std::path::Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn preset_tables_have_stable_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = preset("fig1_pu_vs_k1").unwrap();
    p.base.horizon = 150;
    let b = run_preset(&p, 6, 2).unwrap();
    emit_results(&b, dir.path()).unwrap();
    assert_eq!(header(&dir.path().join("pu_frequency.csv")), "k1,freq,ci_halfwidth,runs");
    let body = fs::read_to_string(dir.path().join("pu_frequency.csv")).unwrap();
    assert_eq!(body.lines().nth(1).unwrap().split(',').next().unwrap(), "2");
    assert_eq!(body.lines().count(), 5);

    let mut p = preset("fig2_lf_vs_ucb").unwrap();
    p.base.horizon = 60;
    let b = run_preset(&p, 4, 1).unwrap();
    let out = dir.path().join("fig2");
    emit_results(&b, &out).unwrap();
    assert_eq!(header(&out.join("regret.csv")), "round,policy,mean,p5,p95");
    assert_eq!(header(&out.join("final.csv")), "policy,metric,mean,ci_halfwidth,runs");
    assert_eq!(header(&out.join("pu_frequency.csv")), "policy,group,freq,ci_halfwidth,runs");
    let rows = fs::read_to_string(out.join("regret.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 2 * (60 - 12));

    let mut p = preset("fig7_rooney_pu").unwrap();
    p.base.horizon = 40;
    let b = run_preset(&p, 3, 1).unwrap();
    let out = dir.path().join("fig7");
    emit_results(&b, &out).unwrap();
    assert_eq!(header(&out.join("pu_frequency.csv")), "sigma_eta2,policy,freq,ci_halfwidth,runs");
}

#[test]
fn emission_is_idempotent_and_hashed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(r#"{"horizon": 80, "policy": "hybrid", "subsidy": "cost_saving"}"#).unwrap();
    let b = run_experiment(&cfg, 5, 1).unwrap();
    assert_eq!(b.manifest.config_hash, content_hash(&b.manifest.config));
    assert_eq!(b.manifest.seed, 1);
    let files = emit_results(&b, dir.path()).unwrap();
    let first: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    emit_results(&b, dir.path()).unwrap();
    let second: Vec<Vec<u8>> = files.iter().map(|f| fs::read(f).unwrap()).collect();
    assert_eq!(first, second);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap(), content_hash(&manifest["config"]));
    assert_eq!(header(&dir.path().join("subsidy.csv")), "round,policy,mean,p5,p95");
    let rows = fs::read_to_string(dir.path().join("subsidy.csv")).unwrap().lines().count() - 1;
    assert_eq!(rows, 80 - 12);
}

#[test]
fn unwritable_target_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let cfg = parse_config_str(r#"{"horizon": 20, "policy": "lf"}"#).unwrap();
    let b = run_experiment(&cfg, 1, 1).unwrap();
    let err = emit_results(&b, &blocker.join("sub")).unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}
