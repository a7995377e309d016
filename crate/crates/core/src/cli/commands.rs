use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::cells::{bptt_gradcheck, scan_check, CellFamily, Model};
use crate::dynamics::{classify_stability, task_initial_states, Stability, STABILITY_HEADER};
use crate::envs::{EnvKind, LookupConfig, LookupOracle, TmazeOracle, TMAZE_OBS_WIDTH};
use crate::ppo::{Trainer, METRICS_HEADER};
use crate::thg::{
    horizon_sweep, population_report, ModelAgent, ModelSummary, SweepConfig, SweepEntry, SweepResult, CROSSTAB_HEADER,
    SCATTER_HEADER, SWEEP_HEADER,
};

use super::checkpoint::{content_hash, Checkpoint};
use super::config::{parse_override, parse_pairs, RunConfig};
use super::manifest::{RunManifest, RunStatus};
use super::CliError;

pub const OUT_DIR_ENV: &str = "THG_OUT_DIR";
const MANIFEST_FILE: &str = "manifest.txt";
const CHECKPOINT_FILE: &str = "checkpoint.bin";
const METRICS_FILE: &str = "metrics.csv";

#[derive(Debug, Parser)]
#[command(
    name = "thg",
    version,
    about = "Recurrent PPO, memory dynamics and horizon sweeps on T-maze POMDPs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one actor-critic pair with PPO.
    Train(TrainArgs),
    /// Train one run per seed.
    Population(PopulationArgs),
    /// Attractor analysis of a checkpoint's policy under the idle input.
    Vaa(VaaArgs),
    /// Greedy evaluation over a range of horizons.
    Sweep(SweepArgs),
    /// Cross-tabulate behavior and stability over completed runs.
    Report(ReportArgs),
    /// Compare scan evaluation with sequential stepping.
    ScanCheck(ScanCheckArgs),
    /// Compare backpropagation through time with finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// key=value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Re-run from the configuration snapshot of a manifest.
    #[arg(long, conflicts_with = "config")]
    pub manifest: Option<PathBuf>,
    /// Configuration override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub env: Option<String>,
    #[arg(long)]
    pub cell: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub iters: Option<usize>,
    /// Output root; defaults to $THG_OUT_DIR, then `runs`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PopulationArgs {
    #[command(flatten)]
    pub train: TrainArgs,
    /// Seeds as a list and/or ranges, e.g. `1-5` or `1,4,9-12`.
    #[arg(long)]
    pub seeds: String,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct VaaArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the environment of the run the checkpoint belongs to.
    #[arg(long)]
    pub env: Option<String>,
    /// Iterations of the idle map.
    #[arg(long = "M", default_value_t = crate::dynamics::DEFAULT_ITERATIONS)]
    pub iterations: usize,
    /// Distance under which two final states count as the same attractor.
    #[arg(long, default_value_t = crate::dynamics::DEFAULT_TOLERANCE)]
    pub eps: f64,
    #[arg(long, default_value_t = 4)]
    pub tau: usize,
    /// Output CSV; defaults to `vaa.csv` next to the checkpoint.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, required_unless_present = "oracle")]
    pub checkpoint: Option<PathBuf>,
    /// Evaluate the scripted optimal agent instead of a checkpoint.
    #[arg(long, conflicts_with = "checkpoint")]
    pub oracle: bool,
    /// Defaults to the environment of the run the checkpoint belongs to.
    #[arg(long)]
    pub env: Option<String>,
    /// Comma-separated horizons: T-maze lengths or numbers of mazes.
    #[arg(long)]
    pub horizons: Option<String>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub tau: usize,
    /// Length of every maze in LookupTreeMaze sweeps.
    #[arg(long, default_value_t = 3)]
    pub lookup_length: usize,
    /// Output CSV; defaults to `sweep.csv` next to the checkpoint.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of run directories; defaults to the output root.
    #[arg(long)]
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScanCheckArgs {
    #[arg(long, default_value_t = 200)]
    pub cases: usize,
    #[arg(long, default_value_t = 4096)]
    pub max_len: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 12)]
    pub seq: usize,
    #[arg(long, default_value_t = 6)]
    pub hidden: usize,
    #[arg(long)]
    pub seed: u64,
}

pub fn out_root(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"))
}

/// Parses and executes a command line; human-readable output goes to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return Ok(());
        }
        Err(e) => {
            return Err(CliError::Usage(
                e.to_string().trim_end().trim_start_matches("error: ").to_string(),
            ))
        }
    };
    match cli.command {
        Command::Train(a) => cmd_train(&a, out),
        Command::Population(a) => cmd_population(&a, out),
        Command::Vaa(a) => cmd_vaa(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Report(a) => cmd_report(&a, out),
        Command::ScanCheck(a) => cmd_scan_check(&a, out),
        Command::Gradcheck(a) => cmd_gradcheck(&a, out),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(CliError::io(path))
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn csv_text(header: &str, rows: &[String]) -> String {
    let mut s = format!("{header}\n");
    for r in rows {
        s.push_str(r);
        s.push('\n');
    }
    s
}

fn train_pairs(a: &TrainArgs) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = match (&a.config, &a.manifest) {
        (Some(p), _) => parse_pairs(&read(p)?)?,
        (None, Some(p)) => RunManifest::from_text(&read(p)?)?.config.pairs(),
        (None, None) => Vec::new(),
    };
    for s in &a.set {
        pairs.push(parse_override(s)?);
    }
    let flags = [
        ("env", a.env.clone()),
        ("cell", a.cell.clone()),
        ("seed", a.seed.map(|v| v.to_string())),
        ("iters", a.iters.map(|v| v.to_string())),
    ];
    pairs.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    Ok(pairs)
}

fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&train_pairs(a)?)?;
    let root = out_root(a.out.as_deref());
    let m = run_training(&cfg, &root)?;
    let _ = writeln!(out, "{} {} {}", m.run_id, m.status, root.join(&m.run_id).display());
    Ok(())
}

/// Trains `cfg` into `root/<run id>`: config snapshot, manifest, metrics CSV,
/// checkpoint and its sidecar. A failure mid-run is recorded in the manifest.
pub fn run_training(cfg: &RunConfig, root: &Path) -> Result<RunManifest, CliError> {
    let run_id = cfg.run_id();
    let dir = root.join(&run_id);
    fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
    write(&dir.join("config.txt"), cfg.to_text())?;
    let mut manifest = RunManifest {
        run_id: run_id.clone(),
        seed: cfg.seed,
        config: cfg.clone(),
        checkpoint: CHECKPOINT_FILE.into(),
        checkpoint_sha256: String::new(),
        metrics: METRICS_FILE.into(),
        status: RunStatus::Running,
        started_unix: now_unix(),
        finished_unix: None,
        error: None,
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    write(&manifest_path, manifest.to_text())?;
    match train_into(cfg, &dir) {
        Ok(hash) => {
            manifest.status = RunStatus::Done;
            manifest.checkpoint_sha256 = hash;
            manifest.finished_unix = Some(now_unix());
            write(&manifest_path, manifest.to_text())?;
            Ok(manifest)
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.error = Some(e.to_string());
            manifest.finished_unix = Some(now_unix());
            write(&manifest_path, manifest.to_text())?;
            Err(CliError::RunFailed {
                run: run_id,
                reason: e.to_string(),
            })
        }
    }
}

fn train_into(cfg: &RunConfig, dir: &Path) -> Result<String, CliError> {
    let (actor, critic) = cfg.specs()?;
    let mut trainer = Trainer::new(cfg.ppo.clone(), actor, critic, cfg.seed)?;
    let mut env = cfg.make_env()?;
    let metrics_path = dir.join(METRICS_FILE);
    let file = fs::File::create(&metrics_path).map_err(CliError::io(&metrics_path))?;
    let mut metrics = std::io::BufWriter::new(file);
    writeln!(metrics, "{METRICS_HEADER}").map_err(CliError::io(&metrics_path))?;
    let every = cfg.checkpoint_every;
    trainer.run::<CliError>(&mut env, |t, m| {
        writeln!(metrics, "{}", m.csv_row())
            .and_then(|_| metrics.flush())
            .map_err(CliError::io(&metrics_path))?;
        if every > 0 && t.iteration % every == 0 && !t.finished() {
            save_checkpoint(t, dir, &format!("checkpoint-{:05}", t.iteration))?;
        }
        Ok(())
    })?;
    save_checkpoint(&trainer, dir, "checkpoint")
}

/// Writes `<stem>.bin` and its `<stem>.txt` sidecar, returning the content hash.
fn save_checkpoint(trainer: &Trainer, dir: &Path, stem: &str) -> Result<String, CliError> {
    let ck = Checkpoint::from_trainer(trainer);
    let bytes = ck.to_bytes();
    let hash = content_hash(&bytes);
    write(&dir.join(format!("{stem}.bin")), &bytes)?;
    write(&dir.join(format!("{stem}.txt")), ck.sidecar(&hash))?;
    Ok(hash)
}

/// `1-5`, `1,4,9-12`; duplicates are rejected.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::BadValue {
        key: "seeds".into(),
        value: s.to_string(),
        reason: "expected a comma-separated list of seeds or ranges".into(),
    };
    let mut seen = BTreeSet::new();
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let v: u64 = part.parse().map_err(|_| bad())?;
                (v, v)
            }
        };
        if lo > hi {
            return Err(bad());
        }
        for seed in lo..=hi {
            if !seen.insert(seed) {
                return Err(CliError::DuplicateSeed(seed));
            }
            seeds.push(seed);
        }
    }
    Ok(seeds)
}

fn cmd_population(a: &PopulationArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let seeds = parse_seeds(&a.seeds)?;
    let mut pairs = train_pairs(&a.train)?;
    pairs.retain(|(k, _)| k != "seed");
    let configs = seeds
        .iter()
        .map(|s| {
            let mut p = pairs.clone();
            p.push(("seed".into(), s.to_string()));
            RunConfig::resolve(&p)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let root = out_root(a.train.out.as_deref());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<RunManifest, CliError>)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..a.workers.clamp(1, configs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cfg) = configs.get(i) else { break };
                let r = run_training(cfg, &root);
                results.lock().expect("no panics while holding the lock").push((i, r));
            });
        }
    });
    let mut results = results.into_inner().expect("workers joined");
    results.sort_by_key(|(i, _)| *i);
    let mut rows = Vec::new();
    let mut failed = 0;
    for (i, r) in &results {
        let cfg = &configs[*i];
        let (status, error) = match r {
            Ok(m) => (m.status.to_string(), String::new()),
            Err(e) => {
                failed += 1;
                ("failed".to_string(), e.to_string().replace(',', ";"))
            }
        };
        rows.push(format!("{},{},{status},{error}", cfg.seed, cfg.run_id()));
    }
    let first = &configs[0];
    let index = root.join(format!(
        "population-{}-{}-{}.csv",
        first.env,
        first.cell,
        first.regime()
    ));
    write(&index, csv_text("seed,run_id,status,error", &rows))?;
    let _ = writeln!(out, "{} runs, {failed} failed, index {}", rows.len(), index.display());
    if failed > 0 {
        return Err(CliError::RunFailed {
            run: "population".into(),
            reason: format!("{failed} of {} seeds failed", rows.len()),
        });
    }
    Ok(())
}

/// Reads a checkpoint and, if the run manifest sits next to it, the run.
pub fn load_checkpoint(path: &Path) -> Result<(Checkpoint, Option<RunManifest>), CliError> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    let ck = Checkpoint::from_bytes(&bytes)?;
    let manifest_path = path.parent().unwrap_or(Path::new(".")).join(MANIFEST_FILE);
    let manifest = if manifest_path.exists() {
        Some(RunManifest::from_text(&read(&manifest_path)?)?)
    } else {
        None
    };
    Ok((ck, manifest))
}

/// Model id, family and training regime of a checkpoint.
fn identify(path: &Path, model: &Model, manifest: Option<&RunManifest>) -> (String, String, String) {
    match manifest {
        Some(m) => (m.run_id.clone(), m.config.cell.to_string(), m.config.regime()),
        None => (
            path.file_stem()
                .map_or("model".into(), |s| s.to_string_lossy().into_owned()),
            model
                .spec()
                .families()
                .iter()
                .map(|f| f.as_str())
                .collect::<Vec<_>>()
                .join("+"),
            "unknown".into(),
        ),
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new(".")).join(name)
}

fn parse_env(s: &str) -> Result<EnvKind, CliError> {
    s.parse().map_err(|e: crate::envs::EnvError| CliError::BadValue {
        key: "env".into(),
        value: s.to_string(),
        reason: e.to_string(),
    })
}

/// The `--env` flag, or else the environment recorded in the run manifest.
fn env_of(flag: Option<&str>, manifest: Option<&RunManifest>) -> Result<EnvKind, CliError> {
    match (flag, manifest) {
        (Some(v), _) => parse_env(v),
        (None, Some(m)) => Ok(m.config.env),
        (None, None) => Err(CliError::Usage(
            "--env is required when no run manifest accompanies the checkpoint".into(),
        )),
    }
}

fn cmd_vaa(a: &VaaArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (ck, manifest) = load_checkpoint(&a.checkpoint)?;
    let env = env_of(a.env.as_deref(), manifest.as_ref())?;
    let model = ck.actor()?;
    let (id, family, _) = identify(&a.checkpoint, &model, manifest.as_ref());
    let (initial, x_bar) = task_initial_states(&model, env, a.tau)?;
    let report = classify_stability(&model, &x_bar, &initial, a.iterations, a.eps)?;
    let text = csv_text(STABILITY_HEADER, &[report.csv_row(&id, &family)]);
    let path = a.output.clone().unwrap_or_else(|| sibling(&a.checkpoint, "vaa.csv"));
    write(&path, &text)?;
    let _ = write!(out, "{text}");
    Ok(())
}

fn parse_horizons(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim().parse().map_err(|_| CliError::BadValue {
                key: "horizons".into(),
                value: s.to_string(),
                reason: format!("`{p}` is not a positive integer"),
            })
        })
        .collect()
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let loaded = a.checkpoint.as_deref().map(load_checkpoint).transpose()?;
    let env = env_of(a.env.as_deref(), loaded.as_ref().and_then(|(_, m)| m.as_ref()))?;
    let mut cfg = match env {
        EnvKind::Tmaze => SweepConfig::tmaze(),
        EnvKind::Lookup => SweepConfig::lookup(),
    };
    cfg.tau = a.tau;
    cfg.lookup_length = a.lookup_length;
    if let Some(h) = &a.horizons {
        cfg.horizons = parse_horizons(h)?;
    }
    if let Some(n) = a.episodes {
        cfg.episodes = n;
    }
    let (result, family, regime) = match (&a.checkpoint, loaded) {
        (None, _) | (_, None) => {
            let result = match env {
                EnvKind::Tmaze => horizon_sweep(&mut TmazeOracle::default(), "oracle", &cfg, a.seed)?,
                EnvKind::Lookup => horizon_sweep(&mut LookupOracle::new(a.tau), "oracle", &cfg, a.seed)?,
            };
            (result, "oracle".to_string(), "none".to_string())
        }
        (Some(path), Some((ck, manifest))) => {
            let model = ck.actor()?;
            let (id, family, regime) = identify(path, &model, manifest.as_ref());
            let width = match env {
                EnvKind::Tmaze => TMAZE_OBS_WIDTH,
                EnvKind::Lookup => LookupConfig {
                    tau: a.tau,
                    ..LookupConfig::default()
                }
                .obs_width(),
            };
            if width != model.spec().input {
                return Err(CliError::Dynamics(crate::dynamics::DynamicsError::WidthMismatch {
                    expected: model.spec().input,
                    got: width,
                }));
            }
            let mut agent = ModelAgent::new(&model);
            (horizon_sweep(&mut agent, &id, &cfg, a.seed)?, family, regime)
        }
    };
    let text = csv_text(SWEEP_HEADER, &result.csv_rows(&family, &regime));
    let path = match (&a.output, &a.checkpoint) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(c)) => Some(sibling(c, "sweep.csv")),
        (None, None) => None,
    };
    if let Some(p) = path {
        write(&p, &text)?;
    }
    let _ = write!(out, "{text}");
    Ok(())
}

fn csv_rows(path: &Path, header: &str) -> Result<Vec<Vec<String>>, CliError> {
    let text = read(path)?;
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(CliError::Csv {
            path: path.to_path_buf(),
            reason: "unexpected header".into(),
        });
    }
    let width = header.split(',').count();
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let cols: Vec<String> = l.split(',').map(str::to_string).collect();
            if cols.len() == width {
                Ok(cols)
            } else {
                Err(CliError::Csv {
                    path: path.to_path_buf(),
                    reason: format!("row `{l}` has {} columns", cols.len()),
                })
            }
        })
        .collect()
}

fn num<T: std::str::FromStr>(path: &Path, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Csv {
        path: path.to_path_buf(),
        reason: format!("`{v}` is not a number"),
    })
}

/// Summary of one completed run directory, or `None` if it lacks a finished
/// manifest, a VAA row or a sweep.
fn load_summary(dir: &Path) -> Result<Option<ModelSummary>, CliError> {
    let (mpath, vpath, spath) = (dir.join(MANIFEST_FILE), dir.join("vaa.csv"), dir.join("sweep.csv"));
    if !mpath.exists() || !vpath.exists() || !spath.exists() {
        return Ok(None);
    }
    let manifest = RunManifest::from_text(&read(&mpath)?)?;
    if manifest.status != RunStatus::Done {
        return Ok(None);
    }
    let vaa_rows = csv_rows(&vpath, STABILITY_HEADER)?;
    let Some(v) = vaa_rows.first() else { return Ok(None) };
    let stability = match v[7].as_str() {
        "multistable" => Stability::Multistable,
        "monostable" => Stability::Monostable,
        other => {
            return Err(CliError::Csv {
                path: vpath,
                reason: format!("unknown classification `{other}`"),
            })
        }
    };
    let rows = csv_rows(&spath, SWEEP_HEADER)?;
    let Some(first) = rows.first() else { return Ok(None) };
    let entries = rows
        .iter()
        .map(|r| {
            Ok(SweepEntry {
                horizon: num(&spath, &r[3])?,
                episodes: num(&spath, &r[4])?,
                mean_reward: num(&spath, &r[5])?,
                success_frac: num(&spath, &r[6])?,
                reach_frac: num(&spath, &r[7])?,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Some(ModelSummary {
        id: manifest.run_id.clone(),
        family: first[1].clone(),
        regime: first[2].clone(),
        vaa: num(&vpath, &v[5])?,
        stability,
        sweep: SweepResult {
            model_id: first[0].clone(),
            env: manifest.config.env,
            entries,
        },
    }))
}

fn write_report(dir: &Path, suffix: &str, models: &[ModelSummary]) -> Result<usize, CliError> {
    let r = population_report(models)?;
    write(
        &dir.join(format!("crosstab{suffix}.csv")),
        csv_text(CROSSTAB_HEADER, &r.crosstab_rows()),
    )?;
    write(
        &dir.join(format!("scatter{suffix}.csv")),
        csv_text(SCATTER_HEADER, &r.scatter_rows()),
    )?;
    Ok(r.crosstab.values().sum())
}

fn cmd_report(a: &ReportArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let dir = a.dir.clone().unwrap_or_else(|| out_root(None));
    let mut subdirs: Vec<PathBuf> = match fs::read_dir(&dir) {
        Ok(rd) => rd
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect(),
        Err(_) => return Err(CliError::NoRuns(dir)),
    };
    subdirs.sort();
    let mut models = Vec::new();
    let mut skipped = 0;
    for d in &subdirs {
        match load_summary(d) {
            Ok(Some(m)) => models.push(m),
            Ok(None) | Err(_) => skipped += 1,
        }
    }
    if models.len() < 2 {
        return Err(CliError::NoRuns(dir));
    }
    let total = write_report(&dir, "", &models)?;
    let mut by_family: BTreeMap<&str, Vec<ModelSummary>> = BTreeMap::new();
    for m in &models {
        by_family.entry(m.family.as_str()).or_default().push(m.clone());
    }
    if by_family.len() > 1 {
        for (family, group) in &by_family {
            if group.len() >= 2 {
                write_report(&dir, &format!("-{family}"), group)?;
            } else {
                let _ = writeln!(out, "family {family}: single run, no sub-table");
            }
        }
    }
    let _ = writeln!(
        out,
        "{} runs, {skipped} skipped, {total} classified sweep points, {} families",
        models.len(),
        by_family.len()
    );
    Ok(())
}

fn cmd_scan_check(a: &ScanCheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let _ = writeln!(out, "family,cases,longest,max_abs_error,inexact_cases,pass");
    let mut failed = Vec::new();
    for family in [CellFamily::MinGru, CellFamily::Bmru] {
        let c = scan_check(family, a.cases, a.max_len, a.seed)?;
        let pass = match family {
            CellFamily::Bmru => c.inexact_cases == 0,
            _ => c.max_abs_error <= 1e-10,
        };
        let _ = writeln!(
            out,
            "{family},{},{},{:e},{},{pass}",
            c.cases, c.longest, c.max_abs_error, c.inexact_cases
        );
        if !pass {
            failed.push(family.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "scan mismatch for {}",
            failed.join(", ")
        )))
    }
}

fn cmd_gradcheck(a: &GradcheckArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let _ = writeln!(out, "family,checked,entries,worst_rel_error,pass");
    let mut failed = Vec::new();
    for family in CellFamily::ALL {
        let c = bptt_gradcheck(family, a.seq, a.hidden, a.seed)?;
        let _ = writeln!(
            out,
            "{family},{},{},{:e},{}",
            c.checked.join("+"),
            c.report.entries_checked,
            c.report.worst_rel_error,
            c.report.passed
        );
        if !c.report.passed {
            failed.push(family.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!(
            "gradient mismatch for {}",
            failed.join(", ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_lists_and_ranges() {
        assert_eq!(parse_seeds("1-5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_seeds("1,4,9-10").unwrap(), vec![1, 4, 9, 10]);
        assert!(matches!(parse_seeds("1,2,2"), Err(CliError::DuplicateSeed(2))));
        assert!(matches!(parse_seeds("1-3,3"), Err(CliError::DuplicateSeed(3))));
        assert!(parse_seeds("5-1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn horizons_parse() {
        assert_eq!(parse_horizons("2,10,100").unwrap(), vec![2, 10, 100]);
        assert!(parse_horizons("2,,3").is_err());
    }
}
