use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const TINY: &str = r#"
seed = 3

[dataset]
count = 6
split_ratio = 0.5

[gen]
n_max = 4

[train]
steps = 3
batch_size = 2
d = 16
heads = 2
n_geo = 2
d_edge = 4
m_train = 16
shape_tokens = 2
diffusion_steps = 40

[sampler]
steps = 40
geometry_points = 32

[guidance]
guidance_start_t = 20

[metrics]
samples = 200
stability_runs = 2
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_physlayout"));
    c.env("RUST_LOG", "warn");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    if !cfg.exists() {
        fs::write(&cfg, TINY).unwrap();
    }
    let mut all = vec!["-c", cfg.to_str().unwrap()];
    all.extend_from_slice(args);
    bin().args(&all).current_dir(dir).output().unwrap()
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

/// Digest of every file below `dir`, keyed by relative path.
fn tree_hash(dir: &Path) -> BTreeMap<PathBuf, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let h = Sha256::digest(fs::read(&p).unwrap());
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), format!("{h:x}"));
            }
        }
    }
    out
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_data_is_reproducible_and_config_is_strict() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(run(a.path(), &["gen-data", "--out", "data"]));
    ok(run(b.path(), &["gen-data", "--out", "data"]));
    let (ha, hb) = (tree_hash(&a.path().join("data")), tree_hash(&b.path().join("data")));
    assert_eq!(ha.len(), 7);
    assert_eq!(ha, hb);

    let c = tempfile::tempdir().unwrap();
    fs::write(c.path().join("run.toml"), "[gen]\nn_maxx = 3\n").unwrap();
    let o = run(c.path(), &["gen-data"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_maxx"));
}

#[test]
fn train_writes_loss_log_and_checks_resume_shapes() {
    let a = tempfile::tempdir().unwrap();
    ok(run(a.path(), &["gen-data", "--out", "data"]));
    ok(run(a.path(), &["train", "--data", "data", "--out", "t1"]));
    let csv = fs::read_to_string(a.path().join("t1/loss.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,loss");
    assert_eq!(lines.len() - 1, 3);

    // Same invocation, same bytes.
    ok(run(a.path(), &["train", "--data", "data", "--out", "t2"]));
    assert_eq!(tree_hash(&a.path().join("t1")), tree_hash(&a.path().join("t2")));

    ok(run(a.path(), &["train", "--data", "data", "--out", "t3", "--resume", "t1/checkpoint.json"]));

    let wide = TINY.replace("d = 16", "d = 24");
    fs::write(a.path().join("wide.toml"), wide).unwrap();
    let o = bin()
        .args(["-c", "wide.toml", "train", "--data", "data", "--out", "t4", "--resume", "t1/checkpoint.json"])
        .current_dir(a.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn sample_modes_counts_and_trace_prefix() {
    let a = tempfile::tempdir().unwrap();
    ok(run(a.path(), &["gen-data", "--out", "data"]));
    ok(run(a.path(), &["sample", "--analytic", "--templates", "data", "--out", "g"]));
    ok(run(a.path(), &["sample", "--analytic", "--templates", "data", "--out", "u", "--no-guidance"]));
    ok(run(a.path(), &["sample", "--analytic", "--templates", "data", "--out", "g2", "--jobs", "1"]));
    let scenes = |d: &str| fs::read_dir(a.path().join(d)).unwrap().filter(|e| e.as_ref().unwrap().path().is_file()).count();
    assert_eq!(scenes("g"), 3);
    assert_eq!(tree_hash(&a.path().join("g")), tree_hash(&a.path().join("g2")));

    for k in 0..3 {
        let name = format!("traces/trace_{k:05}.json");
        let (g, u) = (json(&a.path().join("g").join(&name)), json(&a.path().join("u").join(&name)));
        let (g, u) = (g["trace"].as_array().unwrap(), u["trace"].as_array().unwrap());
        assert_eq!(g.len(), 41);
        // Entries for t ≥ 19 are computed before the first guided update.
        for (eg, eu) in g.iter().zip(u) {
            if eg["t"].as_u64().unwrap() >= 19 {
                assert_eq!(eg, eu);
            }
        }
    }

    ok(run(a.path(), &["train", "--data", "data", "--out", "t"]));
    ok(run(a.path(), &["sample", "--ckpt", "t/checkpoint.json", "--templates", "data/test", "--out", "m"]));
    assert_eq!(scenes("m"), 3);
    let o = run(a.path(), &["sample", "--templates", "data", "--out", "x"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_truth_against_itself_and_report_schema() {
    let a = tempfile::tempdir().unwrap();
    ok(run(a.path(), &["gen-data", "--out", "data"]));
    let out = ok(run(a.path(), &["eval", "--scenes", "data", "--truth", "data", "--out", "r1.json"]));
    assert!(out.lines().next().unwrap().split_whitespace().eq(["Col_mesh", "GRecall", "ASD", "Stability"]));
    let r = json(&a.path().join("r1.json"));
    assert_eq!(r["grecall"], 1.0);
    assert_eq!(r["col_mesh"], 0.0);

    ok(run(a.path(), &["eval", "--scenes", "data", "--truth", "data", "--out", "r2.json"]));
    assert_eq!(fs::read(a.path().join("r1.json")).unwrap(), fs::read(a.path().join("r2.json")).unwrap());

    let mut keys = Vec::new();
    for (k, v) in r.as_object().unwrap() {
        keys.push(k.clone());
        if k == "scenes" {
            for sk in v[0].as_object().unwrap().keys() {
                keys.push(format!("scenes[].{sk}"));
            }
        }
    }
    keys.sort();
    let golden = include_str!("golden/report_schema.txt");
    assert_eq!(keys, golden.lines().collect::<Vec<_>>());

    let o = run(a.path(), &["eval", "--scenes", "data/test/scene_00000.json", "--truth", "data"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_round_trips_and_is_idempotent() {
    let a = tempfile::tempdir().unwrap();
    ok(run(a.path(), &["gen-data", "--out", "data"]));
    ok(run(a.path(), &["simulate", "--scenes", "data", "--runs", "3", "--out", "s1"]));
    ok(run(a.path(), &["simulate", "--scenes", "data", "--runs", "3", "--out", "s1b"]));
    assert_eq!(tree_hash(&a.path().join("s1")), tree_hash(&a.path().join("s1b")));

    // Settled scenes load again and settling them a second time keeps
    // stability within 0.01.
    fs::create_dir(a.path().join("settled")).unwrap();
    for k in 0..3 {
        let f = format!("scene_{k:05}.json");
        fs::copy(a.path().join("s1").join(&f), a.path().join("settled").join(&f)).unwrap();
    }
    ok(run(a.path(), &["simulate", "--scenes", "settled", "--runs", "3", "--out", "s2"]));
    let (s1, s2) = (json(&a.path().join("s1/stability.json")), json(&a.path().join("s2/stability.json")));
    assert_eq!(s1["runs"], 3);
    let d = (s1["stability"].as_f64().unwrap() - s2["stability"].as_f64().unwrap()).abs();
    assert!(d < 0.01, "{d}");

    let o = run(a.path(), &["simulate", "--scenes", "missing"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn export_obj_writes_one_group_per_object() {
    let a = tempfile::tempdir().unwrap();
    ok(run(a.path(), &["gen-data", "--out", "data"]));
    ok(run(a.path(), &["export-obj", "--scene", "data/test/scene_00000.json", "--out", "s.obj"]));
    let scene = json(&a.path().join("data/test/scene_00000.json"));
    let obj = fs::read_to_string(a.path().join("s.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("o ")).count(), scene["objects"].as_array().unwrap().len());
}
