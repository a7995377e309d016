//! End-to-end checks of the command-line workflow on tiny runs.

use std::fs;
use std::path::Path;

use thg_core::cli::{content_hash, load_checkpoint, run, CliError, RunConfig, RunManifest, RunStatus};

fn thg(args: &[&str]) -> Result<String, CliError> {
    let mut out = Vec::new();
    run(std::iter::once("thg").chain(args.iter().copied()), &mut out)?;
    Ok(String::from_utf8(out).expect("utf-8 output"))
}

fn train(root: &Path, cell: &str, seed: u64, iters: usize) -> std::path::PathBuf {
    let seed = seed.to_string();
    let iters = iters.to_string();
    let out = root.to_str().unwrap();
    thg(&[
        "train", "--cell", cell, "--seed", &seed, "--iters", &iters, "--out", out,
    ])
    .expect("train succeeds");
    root.join(format!("tmaze-{cell}-L1-3-s{seed}"))
}

#[test]
fn train_writes_one_metric_row_per_iteration() {
    let root = tempfile::tempdir().unwrap();
    let dir = train(root.path(), "gru", 3, 5);
    let metrics = fs::read_to_string(dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 6);

    let manifest = RunManifest::from_text(&fs::read_to_string(dir.join("manifest.txt")).unwrap()).unwrap();
    assert_eq!(manifest.status, RunStatus::Done);
    assert_eq!(manifest.seed, 3);
    let bytes = fs::read(dir.join("checkpoint.bin")).unwrap();
    assert_eq!(manifest.checkpoint_sha256, content_hash(&bytes));
    let sidecar = fs::read_to_string(dir.join("checkpoint.txt")).unwrap();
    assert!(sidecar.contains(&manifest.checkpoint_sha256));
}

#[test]
fn zero_iterations_keep_the_initial_checkpoint() {
    let root = tempfile::tempdir().unwrap();
    let dir = train(root.path(), "bmru", 2, 0);
    assert_eq!(fs::read_to_string(dir.join("metrics.csv")).unwrap().lines().count(), 1);
    let (ck, _) = load_checkpoint(&dir.join("checkpoint.bin")).unwrap();
    assert_eq!(ck.iteration, 0);
}

#[test]
fn intermediate_checkpoints_follow_the_cadence() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().to_str().unwrap();
    thg(&[
        "train",
        "--seed",
        "1",
        "--iters",
        "4",
        "--set",
        "checkpoint_every=2",
        "--out",
        out,
    ])
    .unwrap();
    let dir = root.path().join("tmaze-gru-L1-3-s1");
    assert!(dir.join("checkpoint-00002.bin").exists());
    assert!(!dir.join("checkpoint-00004.bin").exists());
    assert!(dir.join("checkpoint.bin").exists());
}

#[test]
fn manifest_snapshot_reproduces_the_run() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let dir = train(a.path(), "mingru", 4, 2);
    let manifest = dir.join("manifest.txt");
    thg(&[
        "train",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        b.path().to_str().unwrap(),
    ])
    .unwrap();
    let twin = b.path().join("tmaze-mingru-L1-3-s4");
    for file in ["metrics.csv", "checkpoint.bin", "config.txt"] {
        assert_eq!(
            fs::read(dir.join(file)).unwrap(),
            fs::read(twin.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn config_file_and_overrides_resolve_in_order() {
    let root = tempfile::tempdir().unwrap();
    let path = root.path().join("run.cfg");
    fs::write(&path, "# short run\nseed=9\ncell=bmru\niters=1\npi_lr=0.01\n").unwrap();
    let out = root.path().to_str().unwrap();
    thg(&[
        "train",
        "--config",
        path.to_str().unwrap(),
        "--set",
        "pi_lr=0.02",
        "--out",
        out,
    ])
    .unwrap();
    let manifest =
        RunManifest::from_text(&fs::read_to_string(root.path().join("tmaze-bmru-L1-3-s9/manifest.txt")).unwrap())
            .unwrap();
    assert_eq!(manifest.config.ppo.pi_lr, 0.02);
    assert_eq!(manifest.config.ppo.total_iterations, 1);
}

#[test]
fn bad_inputs_are_rejected() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().to_str().unwrap();
    assert!(matches!(
        thg(&["train", "--seed", "1", "--set", "learning_rate=1", "--out", out]),
        Err(CliError::UnknownKey(k)) if k == "learning_rate"
    ));
    assert!(matches!(
        thg(&["train", "--out", out]),
        Err(CliError::MissingKey("seed"))
    ));
    assert!(matches!(
        thg(&["population", "--seeds", "1,2,1", "--iters", "1", "--out", out]),
        Err(CliError::DuplicateSeed(1))
    ));
    assert!(matches!(thg(&["report", "--dir", out]), Err(CliError::NoRuns(_))));
    assert!(matches!(thg(&["frobnicate"]), Err(CliError::Usage(_))));
}

#[test]
fn corrupt_checkpoint_is_reported() {
    let root = tempfile::tempdir().unwrap();
    let dir = train(root.path(), "gru", 1, 1);
    let path = dir.join("checkpoint.bin");
    let mut bytes = fs::read(&path).unwrap();
    bytes.truncate(bytes.len() / 2);
    fs::write(&path, bytes).unwrap();
    assert!(matches!(load_checkpoint(&path), Err(CliError::Checkpoint(_))));
}

#[test]
fn report_tabulates_analyzed_runs() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().to_str().unwrap();
    thg(&[
        "population",
        "--cell",
        "bmru",
        "--seeds",
        "1-2",
        "--iters",
        "1",
        "--out",
        out,
    ])
    .unwrap();
    thg(&[
        "population",
        "--cell",
        "mingru",
        "--seeds",
        "1-2",
        "--iters",
        "1",
        "--out",
        out,
    ])
    .unwrap();
    let mut runs = 0;
    for entry in fs::read_dir(root.path()).unwrap() {
        let dir = entry.unwrap().path();
        if !dir.is_dir() {
            continue;
        }
        let ck = dir.join("checkpoint.bin");
        let ck = ck.to_str().unwrap();
        thg(&["vaa", "--checkpoint", ck]).unwrap();
        thg(&[
            "sweep",
            "--checkpoint",
            ck,
            "--horizons",
            "2,10",
            "--episodes",
            "100",
            "--seed",
            "5",
        ])
        .unwrap();
        runs += 1;
    }
    assert_eq!(runs, 4);
    // An unfinished run is skipped rather than failing the report.
    fs::create_dir(root.path().join("stray")).unwrap();
    let msg = thg(&["report", "--dir", out]).unwrap();
    assert!(msg.starts_with("4 runs, 1 skipped"), "{msg}");

    let crosstab = fs::read_to_string(root.path().join("crosstab.csv")).unwrap();
    let counted: usize = crosstab
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("10,"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(counted, 4);
    let scatter = fs::read_to_string(root.path().join("scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 1 + 4 * 2);
    assert!(root.path().join("crosstab-bmru.csv").exists());
    assert!(root.path().join("crosstab-mingru.csv").exists());
}

#[test]
fn resolved_config_round_trips_through_text() {
    let pairs = [
        ("seed", "5"),
        ("env", "lookup"),
        ("cell", "hybrid"),
        ("lookup_mazes", "2-6"),
    ]
    .map(|(k, v)| (k.to_string(), v.to_string()));
    let cfg = RunConfig::resolve(&pairs).unwrap();
    let again = RunConfig::resolve(&thg_core::cli::parse_pairs(&cfg.to_text()).unwrap()).unwrap();
    assert_eq!(cfg, again);
    assert_eq!(cfg.run_id(), "lookup-hybrid-N2-6-s5");
}
