use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn shmbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shmbench"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("SHMBENCH_WORKERS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn generate(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "--json",
        "generate",
        "-s",
        "D1",
        "-s",
        "D4",
        "--start",
        "2021-07-01",
        "--hours",
        "24",
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    shmbench(&args)
}

#[test]
fn generate_then_inspect() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let g = generate(&out, &[]);
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    let rep = json(&g);
    assert_eq!(rep["ok"], true);
    assert_eq!(rep["report"]["subdatasets"][0]["files"], 24);

    let i = shmbench(&["--json", "inspect", out.to_str().unwrap()]);
    assert!(i.status.success());
    let rep = json(&i);
    assert_eq!(rep["subdatasets"]["D1"]["files"], 24);
    assert_eq!(rep["subdatasets"]["D1"]["full_scale"], 26280);
    assert_eq!(rep["deflection_rows"], 26280);

    let file = out.join("D1").join("acc13104-1.h5");
    let f = json(&shmbench(&["--json", "inspect", file.to_str().unwrap()]));
    assert_eq!(f["samples"], 18000);
    assert_eq!(f["fs_hz"], 100.0);
    assert_eq!(f["nan_count"], 0);
    if f["accepted"] == true {
        assert!(f["relative_error"].as_f64().unwrap().abs() <= 0.01);
    }
}

#[test]
fn same_seed_same_manifest_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(generate(&a, &["--workers", "1"]).status.success());
    assert!(generate(&b, &["--workers", "3"]).status.success());
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn corrupted_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert!(generate(&out, &[]).status.success());
    let victim = out.join("D1").join("acc13110-1.h5");
    let bytes = fs::read(&victim).unwrap();
    fs::write(&victim, &bytes[..bytes.len() / 2]).unwrap();
    assert!(!shmbench(&["inspect", victim.to_str().unwrap()]).status.success());
    assert!(!shmbench(&["inspect", out.to_str().unwrap()]).status.success());

    let junk = dir.path().join("acc00001-1.h5");
    fs::write(&junk, b"junk").unwrap();
    assert!(!shmbench(&["inspect", junk.to_str().unwrap()]).status.success());
}

#[test]
fn contaminate_with_zero_fraction_copies_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert!(generate(&out, &[]).status.success());
    let policy = dir.path().join("policy.json");
    fs::write(&policy, r#"{"fraction": 0.0, "target_count": null}"#).unwrap();
    let dest = dir.path().join("c");
    let c = shmbench(&[
        "--json",
        "contaminate",
        out.join("D1").to_str().unwrap(),
        "--policy",
        policy.to_str().unwrap(),
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let rep = json(&c);
    assert_eq!(rep["contaminated"], 0);
    assert_eq!(rep["files"], 24);
    let name = "acc13104-1.h5";
    assert_eq!(fs::read(out.join("D1").join(name)).unwrap(), fs::read(dest.join(name)).unwrap());
    assert_eq!(fs::read_to_string(dest.join("faults.txt")).unwrap().lines().count(), 1);
}

#[test]
fn contaminate_respects_bound_and_labels_match() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert!(generate(&out, &[]).status.success());
    let policy = dir.path().join("policy.json");
    fs::write(&policy, r#"{"fraction": 0.5, "target_count": null, "run_length": [1, 2]}"#).unwrap();
    let dest = dir.path().join("c");
    let c = shmbench(&[
        "--json",
        "contaminate",
        out.join("D1").to_str().unwrap(),
        "--policy",
        policy.to_str().unwrap(),
        "--out",
        dest.to_str().unwrap(),
    ]);
    assert!(c.status.success(), "{}", String::from_utf8_lossy(&c.stderr));
    let rep = json(&c);
    let n = rep["contaminated"].as_u64().unwrap() as usize;
    assert!(n > 0 && n <= 12);
    assert_eq!(fs::read_to_string(dest.join("faults.txt")).unwrap().lines().count(), n + 1);
}

#[test]
fn contaminate_missing_corpus_fails() {
    let dir = tempfile::tempdir().unwrap();
    let c = shmbench(&["contaminate", dir.path().join("none").to_str().unwrap(), "--out", dir.path().join("c").to_str().unwrap()]);
    assert!(!c.status.success());
}

#[test]
fn plots_are_svg_only() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("e.svg");
    let p = shmbench(&["--json", "plot", "modulus", "--out", svg.to_str().unwrap()]);
    assert!(p.status.success());
    assert!(fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    let png = dir.path().join("e.png");
    assert!(!shmbench(&["plot", "modulus", "--out", png.to_str().unwrap()]).status.success());
    assert!(!png.exists());
}

#[test]
fn deflection_plot_spans_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("d.svg");
    let p = shmbench(&["--json", "plot", "deflection", "--out", svg.to_str().unwrap()]);
    assert!(p.status.success());
    assert_eq!(json(&p)["points"][0], 26280);
}

#[test]
fn fault_plot_has_time_and_frequency_panels() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("f.svg");
    let p = shmbench(&["--json", "plot", "fault", "--class", "S", "--index", "20000", "--out", svg.to_str().unwrap()]);
    assert!(p.status.success(), "{}", String::from_utf8_lossy(&p.stderr));
    let rep = json(&p);
    assert_eq!(rep["panels"], 2);
    assert_eq!(rep["points"][0], 18000);
    let text = fs::read_to_string(&svg).unwrap();
    assert!(text.contains("Time domain") && text.contains("Frequency domain"));
}

#[test]
fn init_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    assert!(shmbench(&["init-config", "--out", cfg.to_str().unwrap()]).status.success());
    let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cfg).unwrap()).unwrap();
    assert_eq!(parsed["master_seed"], 2020);
    let out = dir.path().join("o");
    assert!(generate(&out, &["--config", cfg.to_str().unwrap()]).status.success());
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"dead_load": -1.0}"#).unwrap();
    let g = generate(&dir.path().join("o"), &["--config", cfg.to_str().unwrap()]);
    assert!(!g.status.success());
}
