//! Backpropagation-through-time check of a single cell against central
//! differences of an eagerly evaluated objective.

use crate::numerics::{finite_diff_check, Backend, FdReport, Rng, Tape, Tensor2};

use super::cell::{cell_step, CellFamily, CellParams};
use super::CellError;

pub const GRADCHECK_INPUT: usize = 3;
pub const GRADCHECK_STEP: f64 = 1e-6;
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct BpttCheck {
    pub family: CellFamily,
    /// Names of the checked tensors, in report order.
    pub checked: Vec<String>,
    pub report: FdReport,
}

/// Parameters whose true gradient is defined. The BMRU gate and candidate
/// pass through step functions, so only its amplitude and the readout are
/// smooth; all other families are checked in full.
pub fn smooth_params(family: CellFamily) -> Vec<&'static str> {
    match family {
        CellFamily::Bmru => vec!["alpha"],
        f => f.param_names().to_vec(),
    }
}

/// Objective `Σ_t (h_t · W_o)²` over a random sequence, differentiated on the
/// tape and compared with central differences of the eager cell step.
pub fn bptt_gradcheck(family: CellFamily, seq_len: usize, hidden: usize, seed: u64) -> Result<BpttCheck, CellError> {
    let mut rng = Rng::derive(seed, "gradcheck");
    let mut params = CellParams::init(family, GRADCHECK_INPUT, hidden, &mut rng)?;
    for (name, t) in family.param_names().iter().zip(params.weights_mut()) {
        match *name {
            "alpha" => t.data_mut().iter_mut().for_each(|v| *v = rng.uniform_in(0.5, 1.5)),
            n if n.starts_with('b') => t.data_mut().iter_mut().for_each(|v| *v = rng.uniform_in(-0.5, 0.5)),
            _ => {}
        }
    }
    let w_o = Tensor2::from_vec(hidden, 1, (0..hidden).map(|_| rng.uniform_in(-1.0, 1.0)).collect())?;
    let h0: Vec<f64> = (0..hidden).map(|_| rng.uniform_in(-0.5, 0.5)).collect();
    let inputs: Vec<Vec<f64>> = (0..seq_len)
        .map(|_| (0..GRADCHECK_INPUT).map(|_| rng.uniform_in(-1.0, 1.0)).collect())
        .collect();

    let mut tape = Tape::new();
    let w: Vec<_> = family.param_names().iter().map(|n| tape.leaf(*n)).collect();
    let wo = tape.leaf("W_o");
    let mut h = tape.constant(Tensor2::row_vector(&h0));
    let mut total = None;
    for x in &inputs {
        let xv = tape.constant(Tensor2::row_vector(x));
        h = cell_step(&mut tape, family, &w, &h, &xv)?;
        let y = Backend::matmul(&mut tape, &h, &wo)?;
        let sq = tape.mul(y, y);
        total = Some(match total {
            None => sq,
            Some(acc) => tape.add(acc, sq),
        });
    }
    let total = total.ok_or_else(|| CellError::BadParams("empty sequence".into()))?;
    tape.forward_with(|name| if name == "W_o" { Some(&w_o) } else { params.get(name) })?;
    let grads = tape.backward(total, Tensor2::scalar(1.0))?;

    let mut checked: Vec<String> = smooth_params(family).iter().map(|s| s.to_string()).collect();
    checked.push("W_o".into());
    let values: Vec<Tensor2> = checked
        .iter()
        .map(|n| {
            if n == "W_o" {
                w_o.clone()
            } else {
                params.get(n).expect("known name").clone()
            }
        })
        .collect();
    let analytic: Vec<Tensor2> = checked
        .iter()
        .zip(&values)
        .map(|(n, v)| {
            grads
                .get(n)
                .cloned()
                .unwrap_or_else(|| Tensor2::zeros(v.rows(), v.cols()))
        })
        .collect();

    let objective = |trial: &[Tensor2]| -> f64 {
        let mut p = params.clone();
        let mut readout = &w_o;
        for (n, t) in checked.iter().zip(trial) {
            if n == "W_o" {
                readout = t;
            } else {
                *p.get_mut(n).expect("known name") = t.clone();
            }
        }
        let mut h = h0.clone();
        let mut acc = 0.0;
        for x in &inputs {
            h = match p.step(&h, x) {
                Ok(v) => v,
                Err(_) => return f64::NAN,
            };
            let y: f64 = h.iter().zip(readout.data()).map(|(a, b)| a * b).sum();
            acc += y * y;
        }
        acc
    };
    let report = finite_diff_check(objective, &values, &analytic, GRADCHECK_STEP, GRADCHECK_TOLERANCE);
    Ok(BpttCheck {
        family,
        checked,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_family_passes_at_small_size() {
        for family in CellFamily::ALL {
            let c = bptt_gradcheck(family, 5, 3, 11).unwrap();
            assert!(c.report.passed, "{family}: {:?}", c.report);
            assert!(c.report.entries_checked > 0);
        }
    }
}
