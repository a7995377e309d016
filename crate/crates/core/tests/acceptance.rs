//! Acceptance run: trains and analyzes the populations the criteria call for
//! and prints one PASS/FAIL line per criterion, then a summary.
//!
//! The process exits successfully whatever the outcome so that a criterion
//! the method cannot meet is reported rather than hidden; set
//! `THG_ACCEPT_STRICT=1` to turn any failure into a nonzero exit.
//! `THG_ACCEPT_ONLY=3,9` restricts the run to the listed criteria.
//! `THG_ACCEPT_LOOKUP_ITERS` and `THG_ACCEPT_LOOKUP_STEPS` set the
//! LookupTreeMaze training budget (iterations, environment steps per
//! iteration).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thg_core::cells::{bptt_gradcheck, scan_check, CellFamily, CellParams, Model};
use thg_core::cli::{load_checkpoint, run, run_training, RunConfig};
use thg_core::dynamics::{
    classify_stability, gated_steady_state, linear_steady_state, task_initial_states, vaa, FnMap, Stability,
};
use thg_core::envs::{
    AnyEnv, EnvKind, LookupConfig, LookupOracle, LookupTreeMaze, RandomJunction, Range, TMaze, TmazeConfig, TmazeOracle,
};
use thg_core::numerics::{Rng, Tensor2};
use thg_core::thg::{classify_behavior, horizon_sweep, run_episode, Behavior, ModelAgent, SweepConfig, SweepResult};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// A trained T-maze or LookupTreeMaze policy and its analyses.
struct Trained {
    best_reward: f64,
    final_reward: f64,
    actor: Model,
}

struct Ctx {
    root: PathBuf,
    trained: BTreeMap<(String, String, u64), Trained>,
    lookup_iters: usize,
    lookup_steps: usize,
}

impl Ctx {
    fn train(&mut self, env: EnvKind, cell: &str, seed: u64) -> &Trained {
        let key = (env.to_string(), cell.to_string(), seed);
        if !self.trained.contains_key(&key) {
            let mut pairs = vec![
                ("env".to_string(), env.to_string()),
                ("cell".to_string(), cell.to_string()),
                ("seed".to_string(), seed.to_string()),
            ];
            if env == EnvKind::Lookup {
                pairs.push(("iters".into(), self.lookup_iters.to_string()));
                pairs.push(("sample_steps".into(), self.lookup_steps.to_string()));
            }
            let cfg = RunConfig::resolve(&pairs).expect("valid config");
            let t0 = Instant::now();
            let manifest = run_training(&cfg, &self.root).expect("training runs");
            let dir = self.root.join(&manifest.run_id);
            let rewards = metric_rewards(&dir.join("metrics.csv"));
            let (ck, _) = load_checkpoint(&dir.join("checkpoint.bin")).expect("checkpoint loads");
            let t = Trained {
                best_reward: rewards.iter().cloned().fold(f64::MIN, f64::max),
                final_reward: *rewards.last().expect("at least one iteration"),
                actor: ck.actor().expect("actor restores"),
            };
            eprintln!(
                "  trained {} in {:.0}s: best {:.3}, final {:.3}",
                manifest.run_id,
                t0.elapsed().as_secs_f64(),
                t.best_reward,
                t.final_reward
            );
            self.trained.insert(key.clone(), t);
        }
        &self.trained[&key]
    }
}

/// Environment steps per LookupTreeMaze iteration. With episodes of about 50
/// steps, the training table's 250 collects only a handful of episodes per
/// iteration.
const LOOKUP_SAMPLE_STEPS: usize = 2000;

fn metric_rewards(path: &Path) -> Vec<f64> {
    std::fs::read_to_string(path)
        .expect("metrics readable")
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .nth(1)
                .expect("mean_reward column")
                .parse()
                .expect("number")
        })
        .collect()
}

fn tmaze_stability(model: &Model) -> (Stability, usize, f64) {
    let (h, x_bar) = task_initial_states(model, EnvKind::Tmaze, 4).expect("T-maze widths");
    let r = classify_stability(model, &x_bar, &h, 1000, 1e-3).expect("idle map iterates");
    (r.classification, r.cluster_count(), r.vaa)
}

fn tmaze_clusters(model: &Model, iterations: usize) -> usize {
    let (h, x_bar) = task_initial_states(model, EnvKind::Tmaze, 4).expect("T-maze widths");
    classify_stability(model, &x_bar, &h, iterations, 1e-3)
        .expect("idle map iterates")
        .cluster_count()
}

fn sweep(model: &Model, cfg: &SweepConfig, seed: u64) -> SweepResult {
    let mut agent = ModelAgent::new(model);
    horizon_sweep(&mut agent, "acceptance", cfg, seed).expect("sweep runs")
}

fn tmaze_class(model: &Model, horizon: usize) -> (Behavior, f64) {
    let cfg = SweepConfig {
        horizons: vec![horizon],
        episodes: 100,
        ..SweepConfig::tmaze()
    };
    let r = sweep(model, &cfg, 2024);
    let e = &r.entries[0];
    (classify_behavior(e).expect("100 episodes"), e.mean_reward)
}

fn gradients(_: &mut Ctx) -> Outcome {
    let mut worst = 0.0f64;
    let mut failed = Vec::new();
    for family in CellFamily::ALL {
        let c = bptt_gradcheck(family, 12, 6, 1).expect("gradcheck runs");
        worst = worst.max(c.report.worst_rel_error);
        if !c.report.passed {
            failed.push(format!("{family} ({:e})", c.report.worst_rel_error));
        }
    }
    outcome(
        failed.is_empty(),
        format!("worst relative error {worst:.2e} over 5 families; failing: {failed:?}"),
    )
}

fn scan(_: &mut Ctx) -> Outcome {
    let m = scan_check(CellFamily::MinGru, 200, 4096, 1).expect("minGRU scan");
    let b = scan_check(CellFamily::Bmru, 200, 4096, 1).expect("BMRU scan");
    outcome(
        m.max_abs_error <= 1e-10 && b.inexact_cases == 0 && m.longest == 4096,
        format!(
            "minGRU max |Δ| {:.2e}; BMRU inexact cases {} of {}; longest {}",
            m.max_abs_error, b.inexact_cases, b.cases, m.longest
        ),
    )
}

fn steady_states(_: &mut Ctx) -> Outcome {
    let mut rng = Rng::derive(3, "acceptance.steady");
    let (mut worst_lin, mut worst_gated) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.range_inclusive(1, 6);
        let m = rng.range_inclusive(1, 4);
        let raw: Vec<f64> = (0..n * n).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let fro = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        let scale = rng.uniform_in(0.1, 0.9) / fro.max(1e-12);
        let a = Tensor2::from_vec(n, n, raw.iter().map(|v| v * scale).collect()).expect("shape");
        let b = Tensor2::from_vec(n, m, (0..n * m).map(|_| rng.uniform_in(-1.0, 1.0)).collect()).expect("shape");
        let x: Vec<f64> = (0..m).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
        let closed = linear_steady_state(&a, &b, &x).expect("contracting");
        let mut h = vec![0.0; n];
        for _ in 0..10_000 {
            h = (0..n)
                .map(|r| {
                    (0..n).map(|c| a.get(r, c) * h[c]).sum::<f64>() + (0..m).map(|c| b.get(r, c) * x[c]).sum::<f64>()
                })
                .collect();
        }
        worst_lin = worst_lin.max(closed.iter().zip(&h).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));

        let hidden = rng.range_inclusive(1, 8);
        let input = rng.range_inclusive(1, 5);
        let p = CellParams::init(CellFamily::MinGru, input, hidden, &mut rng).expect("init");
        let x: Vec<f64> = (0..input).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let closed = gated_steady_state(&p, &x).expect("non-degenerate gate");
        let mut h: Vec<f64> = (0..hidden).map(|_| rng.uniform_in(-3.0, 3.0)).collect();
        for _ in 0..10_000 {
            h = p.step(&h, &x).expect("step");
        }
        worst_gated = worst_gated.max(closed.iter().zip(&h).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max));
    }
    outcome(
        worst_lin < 1e-8 && worst_gated < 1e-8,
        format!("100 instances each; linear max |Δ| {worst_lin:.2e}, minGRU max |Δ| {worst_gated:.2e}"),
    )
}

fn monostability(_: &mut Ctx) -> Outcome {
    let mut rng = Rng::derive(4, "acceptance.mono");
    let mut multi = 0;
    for _ in 0..100 {
        let hidden = rng.range_inclusive(1, 8);
        let input = rng.range_inclusive(1, 5);
        let p = CellParams::init(CellFamily::MinGru, input, hidden, &mut rng).expect("init");
        let initial: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..hidden).map(|_| rng.uniform_in(-5.0, 5.0)).collect())
            .collect();
        for _ in 0..10 {
            let x: Vec<f64> = (0..input).map(|_| rng.uniform_in(-2.0, 2.0)).collect();
            let mut map = FnMap::new(hidden, |h: &[f64]| p.step(h, &x).expect("step"));
            if vaa(&mut map, &initial, 1000, 1e-3).expect("iterates").classification != Stability::Monostable {
                multi += 1;
            }
        }
    }
    let b = CellParams::init(CellFamily::Bmru, 3, 5, &mut Rng::derive(4, "acceptance.bmru")).expect("init");
    let x_bar = vec![0.0; 3];
    let closed = b
        .gates(&[0.0; 5], &x_bar)
        .expect("gates")
        .into_iter()
        .find(|(n, _)| *n == "z")
        .is_some_and(|(_, z)| z.iter().all(|&v| v == 0.0));
    let alpha = b.get("alpha").expect("alpha").data().to_vec();
    let minus: Vec<f64> = alpha.iter().map(|a| -a).collect();
    let mut map = FnMap::new(5, |h: &[f64]| b.step(h, &x_bar).expect("step"));
    let r = vaa(&mut map, &[minus, alpha], 1000, 1e-3).expect("iterates");
    outcome(
        multi == 0 && closed && r.classification == Stability::Multistable && r.vaa == 1.0,
        format!(
            "minGRU: {multi} of 1000 (params, input) pairs not monostable; BMRU gate closed {closed}, {} with VAA {}",
            r.classification, r.vaa
        ),
    )
}

fn env_oracles(_: &mut Ctx) -> Outcome {
    let mut tmaze = AnyEnv::Tmaze(
        TMaze::with_rng(
            TmazeConfig::new(Range::new(1, 100).expect("range")),
            Rng::derive(5, "t"),
        )
        .expect("env"),
    );
    let mut lookup =
        AnyEnv::Lookup(LookupTreeMaze::with_rng(LookupConfig::default(), Rng::derive(5, "l")).expect("env"));
    let mut oracle_t = TmazeOracle::default();
    let mut oracle_l = LookupOracle::new(4);
    let (mut worst_t, mut worst_l) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        worst_t = worst_t.max((run_episode(&mut tmaze, &mut oracle_t).expect("episode").reward - 4.0).abs());
        worst_l = worst_l.max((run_episode(&mut lookup, &mut oracle_l).expect("episode").reward - 4.0).abs());
    }
    let mut short = AnyEnv::Tmaze(
        TMaze::with_rng(TmazeConfig::new(Range::new(1, 3).expect("range")), Rng::derive(5, "r")).expect("env"),
    );
    let mut random = RandomJunction::new(Rng::derive(5, "agent"), 3);
    let n = 10_000;
    let mean = (0..n)
        .map(|_| run_episode(&mut short, &mut random).expect("episode").reward)
        .sum::<f64>()
        / n as f64;
    outcome(
        worst_t == 0.0 && worst_l <= 1e-12 && (mean - 1.95).abs() <= 0.05,
        format!(
            "T-maze oracle max |r−4| {worst_t:e}; lookup oracle max |r−4| {worst_l:.1e}; random junction mean {mean:.4}"
        ),
    )
}

fn short_training(ctx: &mut Ctx) -> Outcome {
    let mut detail = Vec::new();
    let mut pass = true;
    for cell in ["gru", "bmru"] {
        let mut reached = 0;
        let mut bests = Vec::new();
        for seed in 1..=5 {
            let t = ctx.train(EnvKind::Tmaze, cell, seed);
            if t.best_reward >= 3.9 {
                reached += 1;
            }
            bests.push(format!("{:.2}/{:.2}", t.best_reward, t.final_reward));
        }
        pass &= reached >= 4;
        detail.push(format!("{cell} {reached}/5 reach 3.9 (best/final {})", bests.join(" ")));
    }
    outcome(pass, detail.join("; "))
}

fn dichotomy(ctx: &mut Ctx) -> Outcome {
    let mut violations = Vec::new();
    let (mut bi, mut mono) = (0, 0);
    let mut rows = Vec::new();
    for cell in ["gru", "bmru"] {
        for seed in 1..=5 {
            let actor = ctx.train(EnvKind::Tmaze, cell, seed).actor.clone();
            let (stability, clusters, v) = tmaze_stability(&actor);
            let (class, mean) = tmaze_class(&actor, 10_000);
            let bistable = clusters == 2;
            let ok = if bistable {
                bi += 1;
                class == Behavior::Solved
            } else {
                mono += 1;
                stability == Stability::Monostable && matches!(class, Behavior::Random | Behavior::Timeout)
            };
            rows.push(format!("{cell}{seed}:{clusters}c/vaa{v}/{class}/{mean:.2}"));
            if !ok {
                // Re-classify with a longer horizon to expose slow drift that
                // the default iteration count mistakes for convergence.
                let long = tmaze_clusters(&actor, 10_000);
                violations.push(format!("{cell}{seed}(M=10^4:{long}c)"));
            }
        }
    }
    outcome(
        violations.is_empty() && clusters_ok(bi, mono),
        format!(
            "{bi} bistable, {mono} monostable; violations {violations:?}; {}",
            rows.join(" ")
        ),
    )
}

/// The dichotomy is only tested when both classes occur.
fn clusters_ok(bi: usize, mono: usize) -> bool {
    bi > 0 && mono > 0
}

fn mingru_vs_bmru(ctx: &mut Ctx) -> Outcome {
    let mut rows = Vec::new();
    let mut pass = true;
    for seed in 1..=5 {
        let actor = ctx.train(EnvKind::Tmaze, "mingru", seed).actor.clone();
        let (class, mean) = tmaze_class(&actor, 10_000);
        pass &= class == Behavior::Random;
        rows.push(format!("mingru{seed}:{class}/{mean:.2}"));
    }
    for seed in 1..=5 {
        let actor = ctx.train(EnvKind::Tmaze, "bmru", seed).actor.clone();
        let (c4, m4) = tmaze_class(&actor, 10_000);
        let (c6, m6) = tmaze_class(&actor, 1_000_000);
        pass &= c4 == Behavior::Solved && c6 == Behavior::Solved;
        rows.push(format!("bmru{seed}:{c4}/{m4:.2},{c6}/{m6:.2}"));
    }
    outcome(pass, rows.join(" "))
}

fn vaa_formula(_: &mut Ctx) -> Outcome {
    let mut identity = FnMap::new(1, |h: &[f64]| h.to_vec());
    let near = vaa(&mut identity, &[vec![0.3], vec![0.3 + 1e-4]], 1000, 1e-3)
        .expect("iterates")
        .vaa;
    let apart = vaa(&mut identity, &[vec![-1.0], vec![1.0]], 1000, 1e-3)
        .expect("iterates")
        .vaa;
    let mut contraction = FnMap::new(2, |h: &[f64]| vec![0.5 * h[0] + 0.1, 0.25 * h[1] - 0.2]);
    let contracted = vaa(&mut contraction, &[vec![-3.0, 2.0], vec![4.0, -1.0]], 1000, 1e-3)
        .expect("iterates")
        .vaa;
    let mut two_basin = FnMap::new(1, |h: &[f64]| vec![(3.0 * h[0]).tanh()]);
    let basins = vaa(&mut two_basin, &[vec![-0.5], vec![0.5]], 1000, 1e-3)
        .expect("iterates")
        .vaa;
    outcome(
        near == 0.5 && apart == 1.0 && contracted == 0.5 && basins == 1.0,
        format!(
            "identity {near} (pair within ε) and {apart} (pair apart); contraction {contracted}; two-basin {basins}"
        ),
    )
}

fn lookup_trend(ctx: &mut Ctx) -> Outcome {
    let cfg10 = SweepConfig {
        horizons: vec![10],
        episodes: 100,
        ..SweepConfig::lookup()
    };
    let cfg_long = SweepConfig {
        horizons: vec![10_000],
        episodes: 30,
        ..SweepConfig::lookup()
    };
    let mut rows = Vec::new();
    let mut all_ten = true;
    let mut mingru_collapse = true;
    let mut hybrid_holds = false;
    for cell in ["mingru", "bmru", "hybrid"] {
        for seed in 1..=3 {
            let actor = ctx.train(EnvKind::Lookup, cell, seed).actor.clone();
            let r10 = sweep(&actor, &cfg10, 77).entries[0].mean_reward;
            let r4 = sweep(&actor, &cfg_long, 77).entries[0].mean_reward;
            all_ten &= r10 > 3.0;
            if cell == "mingru" {
                mingru_collapse &= r4 <= 2.2;
            }
            if cell == "hybrid" {
                hybrid_holds |= r4 >= 3.0;
            }
            rows.push(format!("{cell}{seed}:{r10:.2}/{r4:.2}"));
        }
    }
    outcome(
        all_ten && mingru_collapse && hybrid_holds,
        format!(
            "{} iterations of {} steps; at 10 mazes all > 3: {all_ten}; minGRU ≤ 2.2 at 10^4: {mingru_collapse}; a hybrid ≥ 3 at 10^4: {hybrid_holds}; {}",
            ctx.lookup_iters,
            ctx.lookup_steps,
            rows.join(" ")
        ),
    )
}

fn determinism(_: &mut Ctx) -> Outcome {
    let tmp = tempfile::tempdir().expect("temp dir");
    let base = tmp.path();
    let mut sink = Vec::new();
    let mut files = Vec::new();
    for rep in ["a", "b"] {
        let out = base.join(rep);
        let o = out.to_str().expect("utf-8 path").to_string();
        for (env, cell) in [("tmaze", "bmru"), ("lookup", "hybrid")] {
            run(
                [
                    "thg", "train", "--env", env, "--cell", cell, "--seed", "7", "--iters", "2", "--out", &o,
                ],
                &mut sink,
            )
            .expect("train");
        }
        let run_dir = out.join("tmaze-bmru-L1-3-s7");
        let ck = run_dir.join("checkpoint.bin");
        let ck = ck.to_str().expect("utf-8 path");
        let vaa_out = out.join("vaa.csv");
        let sweep_out = out.join("sweep.csv");
        run(
            [
                "thg",
                "vaa",
                "--checkpoint",
                ck,
                "--env",
                "tmaze",
                "--output",
                vaa_out.to_str().expect("utf-8"),
            ],
            &mut sink,
        )
        .expect("vaa");
        run(
            [
                "thg",
                "sweep",
                "--checkpoint",
                ck,
                "--env",
                "tmaze",
                "--horizons",
                "2,10,100",
                "--seed",
                "5",
                "--output",
                sweep_out.to_str().expect("utf-8"),
            ],
            &mut sink,
        )
        .expect("sweep");
        files.push(vec![
            run_dir.join("metrics.csv"),
            out.join("lookup-hybrid-N1-20-s7").join("metrics.csv"),
            vaa_out,
            sweep_out,
        ]);
    }
    let same = files[0]
        .iter()
        .zip(&files[1])
        .all(|(a, b)| std::fs::read(a).expect("readable") == std::fs::read(b).expect("readable"));
    outcome(same, format!("{} CSV pairs compared byte for byte", files[0].len()))
}

type Criterion = (usize, &'static str, fn(&mut Ctx) -> Outcome);

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; none apply here.
    let only: Option<Vec<usize>> = std::env::var("THG_ACCEPT_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let strict = std::env::var("THG_ACCEPT_STRICT").is_ok_and(|v| v == "1");
    let var = |name: &str, default: usize| std::env::var(name).ok().and_then(|v| v.parse().ok()).unwrap_or(default);
    let lookup_iters = var("THG_ACCEPT_LOOKUP_ITERS", 250);
    let lookup_steps = var("THG_ACCEPT_LOOKUP_STEPS", LOOKUP_SAMPLE_STEPS);
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut ctx = Ctx {
        root: tmp.path().to_path_buf(),
        trained: BTreeMap::new(),
        lookup_iters,
        lookup_steps,
    };
    let criteria: [Criterion; 11] = [
        (1, "BPTT gradients match finite differences", gradients),
        (2, "scan evaluation matches sequential steps", scan),
        (3, "closed-form steady states match iteration", steady_states),
        (4, "minGRU monostable, gate-closed BMRU multistable", monostability),
        (5, "environment oracles", env_oracles),
        (6, "short T-maze training", short_training),
        (7, "bistable solves T=10^4, monostable does not", dichotomy),
        (8, "minGRU random and BMRU solved at long horizons", mingru_vs_bmru),
        (9, "VAA on synthetic maps", vaa_formula),
        (10, "LookupTreeMaze generalization trend", lookup_trend),
        (11, "repeated commands give identical CSVs", determinism),
    ];
    let mut passed = 0;
    let mut ran = 0;
    for (n, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t0 = Instant::now();
        let r = f(&mut ctx);
        ran += 1;
        if r.pass {
            passed += 1;
        }
        println!(
            "criterion {n:>2}: {} {name} ({:.0}s) | {}",
            if r.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            r.detail
        );
    }
    println!("acceptance: {passed}/{ran} criteria passed");
    if strict && passed < ran {
        std::process::exit(1);
    }
}
