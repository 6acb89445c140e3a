use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const THETA_INIT_CONFIG: &str = "\
[moves]
n1 = 20

[run]
init_sweeps = 10
theta_init = [0.6, 0.6, 1, 8, 50, 60, 50, 25, 1, 1.5, 16, 0.02]
";

fn mtt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mtt")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = mtt(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(dir).map(|d| d.map(|e| e.unwrap().path()).collect()).unwrap_or_default();
    v.sort();
    v
}

/// Simulated 20-scan scene in `dir`.
fn scene(dir: &Path) -> PathBuf {
    ok(&["simulate", "--seed", "11", "--scans", "20", "--out-dir", p(dir)]);
    dir.join("scene.csv")
}

/// Rows of a CSV file below its `#` header block.
fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn simulate_is_byte_identical_for_a_seed() {
    let d = tempfile::tempdir().unwrap();
    let (a, b, c) = (d.path().join("a"), d.path().join("b"), d.path().join("c"));
    for dir in [&a, &b] {
        ok(&["simulate", "--seed", "7", "--out-dir", p(dir)]);
    }
    ok(&["simulate", "--seed", "8", "--out-dir", p(&c)]);
    for name in ["scene.csv", "truth.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
        assert_ne!(fs::read(a.join(name)).unwrap(), fs::read(c.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn every_output_carries_a_header_block() {
    let d = tempfile::tempdir().unwrap();
    let sc = scene(d.path());
    let cfg = d.path().join("learn.toml");
    fs::write(&cfg, THETA_INIT_CONFIG).unwrap();
    let run = d.path().join("run");
    ok(&["learn", "--config", p(&cfg), "--scene", p(&sc), "--sweeps", "6", "--burn-in", "2", "--seed", "5", "--out-dir", p(&run)]);
    let ev = d.path().join("eval");
    ok(&["evaluate", "--truth", p(&d.path().join("truth.json")), "--samples", p(&run.join("samples_0.json")), "--out-dir", p(&ev)]);
    let mut files = files_in(d.path());
    files.extend(files_in(&run));
    files.extend(files_in(&ev));
    let outputs: Vec<_> = files.iter().filter(|f| f.extension().is_some_and(|e| e == "csv" || e == "json")).collect();
    assert_eq!(outputs.len(), 2 + 4 + 2);
    for f in outputs {
        let text = fs::read_to_string(f).unwrap();
        let keys: Vec<String> = if f.extension().unwrap() == "csv" {
            text.lines().map_while(|l| l.strip_prefix("# ")).map(|l| l.split(':').next().unwrap().to_string()).collect()
        } else {
            let v: Value = serde_json::from_str(&text).unwrap();
            v["header"].as_object().unwrap().keys().cloned().collect()
        };
        for k in ["software", "seed", "config_sha256"] {
            assert!(keys.iter().any(|x| x == k), "{} lacks {k}", f.display());
        }
    }
    let ospa = fs::read_to_string(ev.join("ospa.csv")).unwrap();
    assert!(ospa.contains("# ospa_c: 10\n") && ospa.contains("# ospa_p: 1\n"));
}

#[test]
fn learn_emits_twelve_parameter_columns() {
    let d = tempfile::tempdir().unwrap();
    let sc = scene(d.path());
    let cfg = d.path().join("learn.toml");
    fs::write(&cfg, THETA_INIT_CONFIG).unwrap();
    let out = d.path().join("run");
    ok(&["learn", "--config", p(&cfg), "--scene", p(&sc), "--sweeps", "8", "--burn-in", "2", "--out-dir", p(&out)]);
    let rows = csv_rows(&out.join("theta_0.csv"));
    assert_eq!(rows[0].len(), 13);
    assert_eq!(rows[0][0], "sweep");
    assert_eq!(rows.len(), 1 + 8);
    for r in &rows[1..] {
        assert_eq!(r.len(), 13);
        assert!(r[1..].iter().all(|v| v.parse::<f64>().unwrap().is_finite()));
    }
}

#[test]
fn track_starts_from_all_clutter() {
    let d = tempfile::tempdir().unwrap();
    let sc = scene(d.path());
    let cfg = d.path().join("frozen.toml");
    fs::write(&cfg, "[moves]\nn1 = 0\nn2 = 0\n").unwrap();
    let out = d.path().join("run");
    ok(&["track", "--config", p(&cfg), "--scene", p(&sc), "--sweeps", "3", "--burn-in", "0", "--out-dir", p(&out)]);
    let total_obs = csv_rows(&sc).len() - 1;
    let samples: Value = serde_json::from_str(&fs::read_to_string(out.join("samples_0.json")).unwrap()).unwrap();
    let first = &samples["samples"][0];
    assert_eq!(first["tracks"].as_array().unwrap().len(), 0);
    assert_eq!(first["clutter"].as_array().unwrap().len(), total_obs);
    assert!(!out.join("theta_0.csv").exists());
}

#[test]
fn chains_do_not_depend_on_worker_count() {
    let d = tempfile::tempdir().unwrap();
    let sc = scene(d.path());
    let (one, three) = (d.path().join("one"), d.path().join("three"));
    for (dir, w) in [(&one, "1"), (&three, "3")] {
        ok(&["track", "--scene", p(&sc), "--sweeps", "5", "--burn-in", "1", "--chains", "3", "--workers", w, "--seed", "9", "--out-dir", p(dir)]);
    }
    let names: Vec<_> = files_in(&one).iter().map(|f| f.file_name().unwrap().to_owned()).collect();
    assert_eq!(names.len(), 3 * 3);
    for n in names {
        assert_eq!(fs::read(one.join(&n)).unwrap(), fs::read(three.join(&n)).unwrap(), "{n:?}");
    }
    assert_ne!(fs::read(one.join("trace_0.csv")).unwrap(), fs::read(one.join("trace_1.csv")).unwrap());
}

#[test]
fn truth_scored_against_itself_is_zero() {
    let d = tempfile::tempdir().unwrap();
    scene(d.path());
    let truth: Value = serde_json::from_str(&fs::read_to_string(d.path().join("truth.json")).unwrap()).unwrap();
    let mut sample = truth.clone();
    let obj = sample.as_object_mut().unwrap();
    obj.remove("header");
    obj.insert("sweep".into(), 0.into());
    obj.insert("log_joint".into(), 0.0.into());
    let samples = d.path().join("self.json");
    fs::write(&samples, serde_json::json!({ "samples": [sample] }).to_string()).unwrap();
    let ev = d.path().join("eval");
    ok(&["evaluate", "--truth", p(&d.path().join("truth.json")), "--samples", p(&samples), "--out-dir", p(&ev)]);
    let rows = csv_rows(&ev.join("ospa.csv"));
    assert_eq!(rows.len(), 1 + 2 * 20);
    for r in &rows[1..] {
        assert!(r[2..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0), "{r:?}");
    }
}

#[test]
fn configuration_errors_exit_nonzero_without_outputs() {
    let d = tempfile::tempdir().unwrap();
    let cfg = d.path().join("bad.toml");
    fs::write(&cfg, "[run]\nsweep = 3\n").unwrap();
    let out = d.path().join("out");
    let r = mtt(&["simulate", "--config", p(&cfg), "--out-dir", p(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(files_in(&out).is_empty());

    fs::write(&cfg, "[model]\np_s = 1.5\n").unwrap();
    assert_eq!(mtt(&["simulate", "--config", p(&cfg), "--out-dir", p(&out)]).status.code(), Some(2));
    assert!(files_in(&out).is_empty());
}

#[test]
fn failed_runs_remove_partial_outputs() {
    let d = tempfile::tempdir().unwrap();
    let sc = scene(d.path());
    let out = d.path().join("run");
    // A directory in place of a later output makes that write fail after the
    // trace has been written.
    fs::create_dir_all(out.join("samples_0.json")).unwrap();
    let r = mtt(&["track", "--scene", p(&sc), "--sweeps", "3", "--burn-in", "0", "--out-dir", p(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(files_in(&out), vec![out.join("samples_0.json")]);
    assert!(out.join("samples_0.json").is_dir());
}

#[test]
fn malformed_scene_is_an_input_error() {
    let d = tempfile::tempdir().unwrap();
    let sc = d.path().join("scene.csv");
    fs::write(&sc, "t,obs_id,y1,y2\n1,1,0,0\n").unwrap();
    let r = mtt(&["track", "--scene", p(&sc), "--sweeps", "2", "--burn-in", "0", "--out-dir", p(&d.path().join("o"))]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("n_scans"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let configs = files_in(&dir);
    assert!(!configs.is_empty());
    for c in configs {
        let r = mtt(&["config", "--config", p(&c)]);
        assert!(r.status.success(), "{}: {}", c.display(), String::from_utf8_lossy(&r.stderr));
    }
}
