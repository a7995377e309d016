use crate::cells::{Model, Runner};
use crate::envs::{admissible_tables, EnvKind, LookupConfig, LookupTreeMaze, Pomdp, Range, TMaze, DOWN, RIGHT, UP};
use crate::numerics::{argmax, Rng, Tensor2};

use super::ThgError;

fn required_turn(goal: i8) -> usize {
    if goal < 0 {
        UP
    } else {
        DOWN
    }
}

/// Advances `runner` by up to `steps` applications of the idle input,
/// stopping early once the state is a bitwise fixed point.
fn roll_idle(runner: &mut Runner, features: &Tensor2, steps: usize) -> Result<(), ThgError> {
    let mut prev = runner.state();
    for _ in 0..steps {
        runner.advance_features(features)?;
        let now = runner.state();
        if now == prev {
            break;
        }
        prev = now;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutReport {
    pub horizons: Vec<usize>,
    /// One label per probed memory content.
    pub labels: Vec<String>,
    /// `decisions[s][k]`: greedy action for content `s` at horizon `k`.
    pub decisions: Vec<Vec<usize>>,
    pub logits: Vec<Vec<Vec<f64>>>,
    pub required: Vec<usize>,
    /// Decision constant across horizons for every content.
    pub compatible: bool,
    /// At every horizon, contents that need different actions get different decisions.
    pub separating: bool,
}

impl ReadoutReport {
    pub fn pass(&self) -> bool {
        self.compatible && self.separating
    }
}

/// Feeds each memory content once from the zero state, holds the idle input
/// for `T − 2` steps (the corridor of a length-`T` maze) and reads the greedy
/// decision at the junction observation.
///
/// T-maze contents are the two goal signals. LookupTreeMaze contents are
/// (table, index) pairs: the table is shown alone, the idle input is held,
/// then the index is shown and the junction follows on the next step.
pub fn readout_invariance_check(
    model: &Model,
    env: EnvKind,
    tau: usize,
    horizons: &[usize],
) -> Result<ReadoutReport, ThgError> {
    if horizons.is_empty() || horizons[0] == 0 || horizons.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ThgError::BadHorizons);
    }
    struct Probe {
        label: String,
        first: Vec<f64>,
        cue: Option<Vec<f64>>,
        /// First observation of a length-1 maze, where goal and junction coincide.
        single_cell: Option<Vec<f64>>,
        required: usize,
    }
    let (probes, idle, junction): (Vec<Probe>, Vec<f64>, Vec<f64>) = match env {
        EnvKind::Tmaze => (
            [-1i8, 1]
                .into_iter()
                .map(|g| Probe {
                    label: format!("goal{g:+}"),
                    first: TMaze::observation(g, false),
                    cue: None,
                    single_cell: Some(TMaze::observation(g, true)),
                    required: required_turn(g),
                })
                .collect(),
            TMaze::observation(0, false),
            TMaze::observation(0, true),
        ),
        EnvKind::Lookup => {
            let cfg = LookupConfig {
                tau,
                ..LookupConfig::default()
            };
            let mut probes = Vec::new();
            for table in admissible_tables(tau) {
                for (i, &g) in table.iter().enumerate() {
                    let code: String = table.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect();
                    probes.push(Probe {
                        label: format!("{code}@{i}"),
                        first: cfg.observation(Some(&table), None, false),
                        cue: Some(cfg.observation(None, Some(i), false)),
                        single_cell: None,
                        required: required_turn(g),
                    });
                }
            }
            (
                probes,
                cfg.observation(None, None, false),
                cfg.observation(None, None, true),
            )
        }
    };
    let mut decisions = Vec::with_capacity(probes.len());
    let mut logits = Vec::with_capacity(probes.len());
    for probe in &probes {
        let mut runner = Runner::new(model, 1);
        let features = runner.features(&idle)?;
        runner.advance(&probe.first)?;
        let mut rolled = 0;
        let (mut row, mut raw) = (Vec::new(), Vec::new());
        for &t in horizons {
            let idle_steps = t.saturating_sub(2);
            roll_idle(&mut runner, &features, idle_steps - rolled.min(idle_steps))?;
            rolled = idle_steps;
            let mut probe_runner = runner.clone();
            if let Some(cue) = &probe.cue {
                probe_runner.advance(cue)?;
            }
            let out = match (&probe.single_cell, t) {
                (Some(obs), 1) => Runner::new(model, 1).step(obs, None)?,
                _ => probe_runner.step(&junction, None)?,
            };
            row.push(argmax(out.data()));
            raw.push(out.data().to_vec());
        }
        decisions.push(row);
        logits.push(raw);
    }
    let compatible = decisions.iter().all(|row| row.iter().all(|&d| d == row[0]));
    let separating = (0..horizons.len()).all(|k| {
        (0..probes.len()).all(|a| {
            (a + 1..probes.len())
                .all(|b| probes[a].required == probes[b].required || decisions[a][k] != decisions[b][k])
        })
    });
    Ok(ReadoutReport {
        horizons: horizons.to_vec(),
        labels: probes.iter().map(|p| p.label.clone()).collect(),
        decisions,
        logits,
        required: probes.iter().map(|p| p.required).collect(),
        compatible,
        separating,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    pub extra_idle: Vec<usize>,
    pub junctions: usize,
    /// Fraction of junction decisions equal to the unperturbed run's.
    pub agreement: Vec<f64>,
    /// Fraction of junction decisions that were correct.
    pub accuracy: Vec<f64>,
}

impl PerturbationReport {
    pub fn unchanged(&self, k_index: usize) -> bool {
        self.agreement[k_index] == 1.0
    }
}

/// LookupTreeMaze episodes with scripted locomotion (always right) and the
/// model's choice between up and down at each junction. For every `k`, the
/// agent is held in place for `k` extra idle steps after each maze's first
/// observation; decisions are compared with the `k = 0` run on the same
/// episodes.
pub fn perturbed_idle_check(
    model: &Model,
    tau: usize,
    mazes: usize,
    episodes: usize,
    extra_idle: &[usize],
    seed: u64,
) -> Result<PerturbationReport, ThgError> {
    let cfg = LookupConfig {
        mazes: Range::fixed(mazes)?,
        length: Range::fixed(3)?,
        tau,
        ..LookupConfig::default()
    };
    let idle = cfg.observation(None, None, false);
    let flag = 4 * tau + 1;
    let index_slots = 3 * tau..4 * tau;
    let mut ks: Vec<usize> = vec![0];
    ks.extend(extra_idle.iter().copied().filter(|&k| k != 0));
    let mut runs: Vec<(Vec<usize>, usize)> = Vec::with_capacity(ks.len());
    for &k in &ks {
        let mut decisions = Vec::new();
        let mut correct = 0;
        for e in 0..episodes {
            let mut env = LookupTreeMaze::with_rng(cfg, Rng::derive(seed, &format!("perturb.{e}")))?;
            let mut runner = Runner::new(model, 1);
            let mut obs = env.reset();
            loop {
                let out = runner.step(&obs, None)?;
                let action = if obs[flag] == 1.0 {
                    let l = out.data();
                    let d = if l[UP] >= l[DOWN] { UP } else { DOWN };
                    decisions.push(d);
                    if d == required_turn(env.current_goal()) {
                        correct += 1;
                    }
                    d
                } else {
                    if obs[index_slots.clone()].contains(&1.0) {
                        for _ in 0..k {
                            runner.step(&idle, None)?;
                        }
                    }
                    RIGHT
                };
                let step = env.step(action)?;
                if step.done {
                    break;
                }
                obs = step.obs;
            }
        }
        runs.push((decisions, correct));
    }
    let base = runs[0].0.clone();
    let n = base.len().max(1) as f64;
    let mut agreement = Vec::new();
    let mut accuracy = Vec::new();
    for &k in extra_idle {
        let (d, c) = &runs[ks.iter().position(|&x| x == k).expect("k listed")];
        agreement.push(d.iter().zip(&base).filter(|(a, b)| a == b).count() as f64 / n);
        accuracy.push(*c as f64 / n);
    }
    Ok(PerturbationReport {
        extra_idle: extra_idle.to_vec(),
        junctions: base.len(),
        agreement,
        accuracy,
    })
}
