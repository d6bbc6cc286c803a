use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use kresnet_cli::config::ExperimentConfig;
use kresnet_cli::output::{RunManifest, MANIFEST_FILE, RESOLVED_CONFIG_FILE};
use kresnet_cli::{recipes, run, RunOptions};

fn kresnet(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kresnet"))
        .args(args)
        .env("KRESNET_OUTPUT_ROOT", root)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = r#"
name = "small"
kind = "meanfield"
activation = "tanh"

[grid]
x = { lower = -4.0, upper = 4.0, cells = 64 }
boundary = "zero-flux"

[initial]
family = "gaussian"
mean = 0.5
std = 0.7

[network]
w = -1.0
b = 0.25

[time]
end = 0.5
every = 0.25
"#;

/// Every CSV of a run directory, keyed by relative path.
fn csv_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let m = RunManifest::read(&dir.join(MANIFEST_FILE)).unwrap();
    m.outputs
        .iter()
        .map(|o| (o.path.clone(), std::fs::read(dir.join(&o.path)).unwrap()))
        .collect()
}

#[test]
fn negative_cell_count_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, SMALL.replace("cells = 64", "cells = -5")).unwrap();
    let o = kresnet(&["run", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("grid.x.cells"), "{}", stderr(&o));
}

#[test]
fn validation_lists_every_violation() {
    let text = SMALL
        .replace("cells = 64", "cells = -5")
        .replace("std = 0.7", "std = -1.0")
        .replace("end = 0.5", "end = 0.0");
    let cfg = ExperimentConfig::from_toml(&text, "inline").unwrap();
    let issues = cfg.validate();
    let fields: Vec<&str> = issues.iter().map(|i| i.field.as_str()).collect();
    assert!(fields.contains(&"grid.x.cells"), "{issues:?}");
    assert!(fields.contains(&"initial"), "{issues:?}");
    assert!(fields.contains(&"time.end"), "{issues:?}");

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let o = kresnet(&["validate", path.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("3 configuration error(s)"), "{}", stderr(&o));
}

#[test]
fn missing_sections_and_unknown_keys_are_reported() {
    let cfg = ExperimentConfig::from_toml("name = \"x\"\nkind = \"fokker-planck\"\nactivation = \"identity\"\n", "inline").unwrap();
    let fields: Vec<String> = cfg.validate().into_iter().map(|i| i.field).collect();
    for f in ["grid", "initial", "network", "time", "kinetic"] {
        assert!(fields.iter().any(|g| g == f), "{f} missing from {fields:?}");
    }
    let err = ExperimentConfig::from_toml(&format!("{SMALL}\n[extra]\nfoo = 1\n"), "inline").unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("extra"), "{err}");
}

#[test]
fn histogram_file_must_exist() {
    let text = SMALL.replace(
        "family = \"gaussian\"\nmean = 0.5\nstd = 0.7",
        "family = \"histogram\"\npath = \"nowhere.txt\"",
    );
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("h.toml");
    std::fs::write(&path, text).unwrap();
    let err = ExperimentConfig::load(&path).unwrap_err();
    assert!(err.to_string().contains("initial.path"), "{err}");
}

#[test]
fn runtime_failures_exit_with_one() {
    let text = r#"
name = "blowup"
kind = "particles"
activation = "identity"
[initial]
family = "gaussian"
mean = 1.0
std = 1.0
[network]
w = 1000.0
b = 0.0
[time]
end = 500.0
[particles]
count = 4
dt = 1.0
"#;
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("blowup.toml");
    std::fs::write(&path, text).unwrap();
    let o = kresnet(&["run", path.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn unknown_recipe_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = kresnet(&["run", "no_such_recipe"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_recipe_is_listed_and_valid() {
    assert_eq!(recipes::RECIPES.len(), 8);
    for r in recipes::RECIPES {
        let cfg = r.config().unwrap();
        assert_eq!(cfg.name, r.name);
    }
    let tmp = tempfile::tempdir().unwrap();
    let o = kresnet(&["list-recipes"], tmp.path());
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert_eq!(out.lines().count(), 8);
}

#[test]
fn output_root_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let root = tmp.path().join("elsewhere");
    let o = kresnet(&["run", cfg.to_str().unwrap()], &root);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = root.join("small");
    let m = RunManifest::read(&dir.join(MANIFEST_FILE)).unwrap();
    assert!(dir.join(RESOLVED_CONFIG_FILE).is_file());
    for f in &m.outputs {
        assert!(dir.join(&f.path).is_file(), "{}", f.path);
        assert!(!f.columns.is_empty());
    }
    assert_eq!(m.mass_ledger.len(), 3);
    assert!(!dir.join("manifest.tmp").exists());
}

#[test]
fn identical_configs_give_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = recipes::find("classification_fig3_fig4").unwrap().config().unwrap();
    let a = run(&cfg, &tmp.path().join("a"), RunOptions::default()).unwrap();
    let b = run(&cfg, &tmp.path().join("b"), RunOptions::default()).unwrap();
    let (ba, bb) = (csv_bytes(Path::new(&a.run_dir)), csv_bytes(Path::new(&b.run_dir)));
    assert!(ba.len() > 5);
    assert_eq!(ba, bb);
}

#[test]
fn echoed_config_reruns_to_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = recipes::find("regression_fig5_fig6").unwrap().config().unwrap();
    let mut cheap = cfg.clone();
    if let Some(g) = cheap.grid.as_mut() {
        g.x.cells = 40;
        g.y.as_mut().unwrap().cells = 40;
    }
    let first = run(&cheap, &tmp.path().join("first"), RunOptions::default()).unwrap();

    // the manifest's echo, and the resolved TOML, both reproduce the run
    let from_manifest = RunManifest::read(&Path::new(&first.run_dir).join(MANIFEST_FILE)).unwrap().config;
    assert_eq!(from_manifest, cheap);
    let toml_path = Path::new(&first.run_dir).join(RESOLVED_CONFIG_FILE);
    let reloaded = ExperimentConfig::load(&toml_path).unwrap();
    assert_eq!(reloaded, cheap);
    let second = run(&reloaded, &tmp.path().join("second"), RunOptions::default()).unwrap();
    assert_eq!(csv_bytes(Path::new(&first.run_dir)), csv_bytes(Path::new(&second.run_dir)));
}

#[test]
fn sequential_and_parallel_runs_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml(SMALL, "inline").unwrap();
    let a = run(&cfg, &tmp.path().join("p"), RunOptions::default()).unwrap();
    let seq = RunOptions {
        exec: kresnet_core::Execution::Sequential,
    };
    let b = run(&cfg, &tmp.path().join("s"), seq).unwrap();
    assert_eq!(csv_bytes(Path::new(&a.run_dir)), csv_bytes(Path::new(&b.run_dir)));
}

#[test]
fn ingest_command_prints_the_histogram() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("lengths.txt");
    std::fs::write(&p, "3\n3.5\n5.5\n7\n4.5\n8\n").unwrap();
    let o = kresnet(&["ingest", p.to_str().unwrap(), "2:8:6"], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8_lossy(&o.stdout);
    let g: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    let expected = [0.0, 2.0, 1.0, 1.0, 0.0, 2.0].map(|c| c / 6.0);
    assert_eq!(g, expected);

    let bad = kresnet(&["ingest", p.to_str().unwrap(), "2:8:-1"], tmp.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn regress_preprocess_writes_sample_files() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("points.csv");
    std::fs::write(&p, "x,y\n0,0\n1,1\n0,1\n2,1\n3,0\n3,4\n").unwrap();
    let out = tmp.path().join("out");
    let o = kresnet(&["regress-preprocess", p.to_str().unwrap(), "--out-dir", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("slopes.txt")).unwrap(), "1\n0\n");
    assert_eq!(std::fs::read_to_string(out.join("intercepts.txt")).unwrap(), "0\n1\n");
    assert!(stderr(&o).contains("1 vertical"));
}

#[test]
fn other_kinds_run() {
    let tmp = tempfile::tempdir().unwrap();
    let base = ExperimentConfig::from_toml(SMALL, "inline").unwrap();

    let mut particles = base.clone();
    particles.name = "particles".into();
    particles.output = None;
    particles.kind = kresnet_cli::config::ExperimentKind::Particles;
    particles.particles = Some(kresnet_cli::config::ParticleSpec {
        count: 200,
        dt: 0.01,
        walls: true,
        record_every: None,
    });
    particles.resolve(None);
    let m = run(&particles, tmp.path(), RunOptions::default()).unwrap();
    assert!(m.outputs.iter().filter(|o| o.path.starts_with("particles/")).count() >= 2);

    let moments = ExperimentConfig::from_toml(
        r#"
name = "moments"
kind = "moments"
activation = "identity"
[initial]
family = "gaussian"
mean = 1.0
std = 1.0
[network]
w = -1.0
b = 0.0
[time]
end = 2.0
every = 0.5
[moments]
max_order = 3
classify = [1.0, 2.0]
thresholds = [0.01, 0.1]
"#,
        "inline",
    )
    .unwrap();
    let m = run(&moments, tmp.path(), RunOptions::default()).unwrap();
    assert_eq!(m.diagnostic_bool("clustering"), Some(true));
    let t = m.diagnostics["threshold_times"][0]["time"].as_f64().unwrap();
    assert!((t - 0.01f64.ln() / -2.0).abs() < 1e-12);

    let mc = ExperimentConfig::from_toml(
        r#"
name = "mc"
kind = "boltzmann-mc"
activation = "identity"
seed = 4
[grid]
x = { lower = -8.0, upper = 8.0, cells = 64 }
[initial]
family = "gaussian"
mean = 1.0
std = 1.0
[network]
w = -1.0
b = 0.0
[kinetic]
nu2 = 2.0
eps = 0.1
particles = 2000
[time]
end = 1.0
"#,
        "inline",
    )
    .unwrap();
    let m = run(&mc, tmp.path(), RunOptions::default()).unwrap();
    assert!(m.output("ensemble_final.csv").is_some());
    assert!(m.output("histogram_final.csv").is_some());
}
