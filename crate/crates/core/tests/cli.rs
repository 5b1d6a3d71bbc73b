use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rcurrent::harness::records::{read_manifest, read_records, write_records, FAILURE_MARKER, RECORDS_FILE};
use rcurrent::harness::RunStatus;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_rcurrent"));
    c.env_remove("RCURRENT_OUT");
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn only_subdir(root: &Path) -> PathBuf {
    let dirs: Vec<_> = fs::read_dir(root).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_dir()).collect();
    assert_eq!(dirs.len(), 1, "{dirs:?}");
    dirs[0].clone()
}

#[test]
fn list_experiments_prints_every_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["--list-experiments"], tmp.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.contains("locate-betac") && text.contains("bracket"));
}

#[test]
fn malformed_config_exits_2_without_records() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        "sizes = [8]\nbetas = [0.4]\nseeds = [1]\ntypo = 1",
        "sizes = [8]\nbetas = [0.4]",
        "dimension = 2\nsizes = [8]\nbetas = [-0.4]\nseeds = [1]",
        "dimension = 2\nsizes = [8\n",
        "kind = \"gs-match\"\ndimension = 2\nsizes = [8]\nbetas = [0.4]\nseeds = [1]",
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = tmp.path().join(format!("bad{i}.toml"));
        fs::write(&cfg, text).unwrap();
        let out = tmp.path().join(format!("out{i}"));
        let o = run(&["scan-rl", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], tmp.path());
        assert_eq!(code(&o), 2, "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
        assert!(!out.exists(), "case {i} wrote output");
    }
    let o = run(&["scan-rl", "--config", "missing.toml"], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(!tmp.path().join("results").exists());
}

#[test]
fn verification_run_then_replay_then_tamper() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("pf.toml");
    fs::write(&cfg, "sizes = [3]\nbetas = [0.2, 0.7]\n").unwrap();
    let o = run(&["verify-pfaffian", "--config", cfg.to_str().unwrap(), "--out", "res"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verification PASSED"));
    let dir = only_subdir(&tmp.path().join("res"));
    for f in ["config.toml", "records.csv", "manifest.json", "summary.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
    assert!(!dir.join(FAILURE_MARKER).exists());
    let m = read_manifest(&dir).unwrap();
    assert_eq!(m.status, RunStatus::Complete);
    assert!(m.summary.unwrap().passed);

    let o = run(&["replay", dir.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    let path = dir.join(RECORDS_FILE);
    let mut recs = read_records(&path).unwrap();
    let hash = recs[0].input_hash.clone();
    assert!(recs.iter().all(|r| r.input_hash == hash));
    recs[3].value = f64::from_bits(recs[3].value.to_bits() ^ 1);
    let name = recs[3].observable.clone();
    write_records(&path, &recs).unwrap();
    let o = run(&["replay", dir.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("record 3") && err.contains(&name), "{err}");
}

#[test]
fn mc_run_with_graph_file_replays_from_anywhere() {
    let tmp = tempfile::tempdir().unwrap();
    let conf = tmp.path().join("conf");
    fs::create_dir(&conf).unwrap();
    fs::write(conf.join("tri.json"), r#"{"vertices": 3, "edges": [[0, 1, 1.0], [1, 2, 0.5], [0, 2, 0.25]]}"#).unwrap();
    fs::write(
        conf.join("mc.toml"),
        r#"betas = [0.3]
seeds = [11]
graph = { file = "tri.json" }
[budget]
sweeps = 3000
[[observables]]
kind = "s2-pairs"
pairs = [[0, 2]]
[[observables]]
kind = "magnetization"
"#,
    )
    .unwrap();
    let o = run(&["mc-run", "--config", "conf/mc.toml", "--out", "res"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = only_subdir(&tmp.path().join("res"));
    let recs = read_records(&dir.join(RECORDS_FILE)).unwrap();
    assert!(recs.iter().any(|r| r.observable == "s2(0,2)" && r.seed == Some(11)));
    assert!(recs.iter().all(|r| r.error.is_some()));
    let o = run(&["replay", dir.to_str().unwrap()], &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // --seed changes the seed and therefore the experiment id.
    let o = run(&["mc-run", "--config", "conf/mc.toml", "--out", "res", "--seed", "12", "--budget", "2000"], tmp.path());
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_dir(tmp.path().join("res")).unwrap().count(), 2);
}

#[test]
fn output_root_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path().join("envroot");
    let o = bin().args(["gs-match", "--config", "gs.toml"]).env("RCURRENT_OUT", &root).current_dir(tmp.path()).output().unwrap();
    // gs.toml does not exist yet: config error, nothing written.
    assert_eq!(code(&o), 2);
    assert!(!root.exists());
    fs::write(tmp.path().join("gs.toml"), "id = \"gs\"\nblock_sizes = [16]\n").unwrap();
    let o = bin().args(["gs-match", "--config", "gs.toml"]).env("RCURRENT_OUT", &root).current_dir(tmp.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(root.join("gs").join(RECORDS_FILE).exists());
}

#[test]
fn exhausted_budget_keeps_partial_results_with_marker() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("v.toml"), "id = \"v\"\n[budget]\nwall_clock_secs = 0\n[corpus]\ncount = 3\n").unwrap();
    let o = run(&["verify-identities", "--config", "v.toml", "--out", "res"], tmp.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let dir = tmp.path().join("res/v");
    assert!(dir.join(FAILURE_MARKER).exists());
    assert!(dir.join(RECORDS_FILE).exists());
    let m = read_manifest(&dir).unwrap();
    assert_eq!(m.status, RunStatus::Failed);
    assert!(m.failure.unwrap().contains("budget"));
}
