use crate::cells::{CellFamily, CellParams, Model, Runner};
use crate::envs::{admissible_tables, EnvKind, LookupConfig, TMaze};
use crate::numerics::{sigmoid, solve, spectral_radius_bound, Tensor2};

use super::DynamicsError;

/// Fixed point of `h ← A h + B x̄` (column vectors): `(I − A)^{-1} B x̄`.
/// Requires the spectral radius of `A` to be below one.
pub fn linear_steady_state(a: &Tensor2, b: &Tensor2, x_bar: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n || b.cols() != x_bar.len() {
        return Err(DynamicsError::WidthMismatch {
            expected: n,
            got: b.rows(),
        });
    }
    let rho = spectral_radius_bound(a, 40);
    if rho >= 1.0 {
        return Err(DynamicsError::NotContracting(rho));
    }
    let mut i_minus_a = a.map(|v| -v);
    for k in 0..n {
        i_minus_a.set(k, k, 1.0 + i_minus_a.get(k, k));
    }
    let bx: Vec<f64> = (0..n)
        .map(|r| b.row(r).iter().zip(x_bar).map(|(w, x)| w * x).sum())
        .collect();
    Ok(solve(&i_minus_a, &bx)?)
}

/// Fixed point of a minGRU under constant input: `h̄ = x̄ W_n + b_n`, the
/// candidate state, valid whenever every unit has `1 − z(x̄) > 0`.
pub fn gated_steady_state(params: &CellParams, x_bar: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    if params.family() != CellFamily::MinGru {
        return Err(DynamicsError::NotInputGated(params.family()));
    }
    if x_bar.len() != params.input_size() {
        return Err(DynamicsError::WidthMismatch {
            expected: params.input_size(),
            got: x_bar.len(),
        });
    }
    let affine = |w: &str, b: &str| -> Vec<f64> {
        let (w, b) = (
            params.get(w).expect("minGRU weight"),
            params.get(b).expect("minGRU bias"),
        );
        (0..params.hidden_size())
            .map(|j| b.get(0, j) + x_bar.iter().enumerate().map(|(i, x)| x * w.get(i, j)).sum::<f64>())
            .collect()
    };
    let z_pre = affine("W_z", "b_z");
    if let Some(unit) = z_pre.iter().position(|&p| 1.0 - sigmoid(p) == 0.0) {
        return Err(DynamicsError::DegenerateGate { unit });
    }
    Ok(affine("W_n", "b_n"))
}

/// Initial states for the VAA of a trained model and the idle input: the
/// states after the first informative observation from the zero state.
/// T-maze: both goal signals. LookupTreeMaze: every admissible table, with
/// no index shown.
pub fn task_initial_states(
    model: &Model,
    env: EnvKind,
    tau: usize,
) -> Result<(Vec<Vec<f64>>, Vec<f64>), DynamicsError> {
    let (firsts, idle): (Vec<Vec<f64>>, Vec<f64>) = match env {
        EnvKind::Tmaze => (
            vec![TMaze::observation(-1, false), TMaze::observation(1, false)],
            TMaze::observation(0, false),
        ),
        EnvKind::Lookup => {
            let cfg = LookupConfig {
                tau,
                ..LookupConfig::default()
            };
            (
                admissible_tables(tau)
                    .iter()
                    .map(|t| cfg.observation(Some(t), None, false))
                    .collect(),
                cfg.observation(None, None, false),
            )
        }
    };
    if idle.len() != model.spec().input {
        return Err(DynamicsError::WidthMismatch {
            expected: model.spec().input,
            got: idle.len(),
        });
    }
    let mut states = Vec::with_capacity(firsts.len());
    for obs in &firsts {
        let mut runner = Runner::new(model, 1);
        runner.advance(obs)?;
        states.push(runner.state().flatten());
    }
    Ok((states, idle))
}

/// Roots of `h − u(h)` on `[lo, hi]`: sign changes over a uniform grid, each
/// refined by bisection to `tol`.
pub fn scalar_fixed_points(u: impl Fn(f64) -> f64, lo: f64, hi: f64, grid: usize, tol: f64) -> Vec<f64> {
    let g = |h: f64| h - u(h);
    let mut roots = Vec::new();
    let step = (hi - lo) / grid as f64;
    let mut prev_x = lo;
    let mut prev = g(lo);
    for k in 1..=grid {
        let x = lo + step * k as f64;
        let v = g(x);
        if prev == 0.0 {
            roots.push(prev_x);
        } else if prev * v < 0.0 {
            let (mut a, mut b) = (prev_x, x);
            while b - a > tol {
                let m = 0.5 * (a + b);
                if g(a) * g(m) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev_x = x;
        prev = v;
    }
    roots
}
