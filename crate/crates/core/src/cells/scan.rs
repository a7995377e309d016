//! Associative-scan evaluation of the input-gated cells. Gates depend only on
//! the input, so every step is a map on the state that can be composed ahead
//! of time and applied to `h0` in one pass.

use crate::numerics::{Backend, Eager, Rng, Tensor2};

use super::cell::{gate_values, CellFamily, CellParams};
use super::network::{HiddenState, Layer, LayerSpec, Model, NetworkSpec, Runner};
use super::CellError;

/// Inclusive scan with an associative `combine(earlier, later)`, evaluated as
/// a balanced tree (pairwise reduction, recursion, then fill-in).
pub fn inclusive_scan<T: Clone>(items: &mut [T], combine: &impl Fn(&T, &T) -> T) {
    let n = items.len();
    if n < 2 {
        return;
    }
    let mut pairs: Vec<T> = (0..n / 2).map(|i| combine(&items[2 * i], &items[2 * i + 1])).collect();
    inclusive_scan(&mut pairs, combine);
    for i in 0..n / 2 {
        items[2 * i + 1] = pairs[i].clone();
        if 2 * i + 2 < n {
            items[2 * i + 2] = combine(&pairs[i], &items[2 * i + 2]);
        }
    }
}

/// Per-step state of every unit for `inputs`, starting from `h0`.
pub fn scan_forward(params: &CellParams, h0: &[f64], inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CellError> {
    let family = params.family();
    if !family.is_input_gated() {
        return Err(CellError::WrongFamily(family));
    }
    if h0.len() != params.hidden_size() {
        return Err(CellError::ShapeMismatch(format!(
            "h0 of length {} for hidden size {}",
            h0.len(),
            params.hidden_size()
        )));
    }
    let mut be = Eager;
    let w: Vec<_> = params.named().map(|(n, t)| be.param(n, t)).collect();
    let h_dummy = be.input(Tensor2::row_vector(h0));
    let mut steps = Vec::with_capacity(inputs.len());
    for x in inputs {
        if x.len() != params.input_size() {
            return Err(CellError::ShapeMismatch(format!(
                "input of length {} for input size {}",
                x.len(),
                params.input_size()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CellError::NonFinite);
        }
        let xv = be.input(Tensor2::row_vector(x));
        let g = gate_values(&mut be, family, &w, &h_dummy, &xv)?;
        let get = |name: &str| {
            g.iter()
                .find(|(n, _)| *n == name)
                .map(|(_, v)| v.data().to_vec())
                .expect("gate present")
        };
        steps.push((get("z"), get("n")));
    }
    match family {
        CellFamily::MinGru => Ok(scan_affine(h0, steps)),
        CellFamily::Bmru => {
            let alpha = params.get("alpha").expect("BMRU has alpha").data().to_vec();
            Ok(scan_set_or_carry(h0, &alpha, steps))
        }
        _ => unreachable!("input-gated families are minGRU and BMRU"),
    }
}

/// `h_t = a_t ⊙ h_{t-1} + b_t` with `a = z`, `b = (1 − z) ⊙ n`.
fn scan_affine(h0: &[f64], steps: Vec<(Vec<f64>, Vec<f64>)>) -> Vec<Vec<f64>> {
    let mut maps: Vec<(Vec<f64>, Vec<f64>)> = steps
        .into_iter()
        .map(|(z, n)| {
            let b = z.iter().zip(&n).map(|(z, n)| (1.0 - z) * n).collect();
            (z, b)
        })
        .collect();
    inclusive_scan(&mut maps, &|(a1, b1): &(Vec<f64>, Vec<f64>), (a2, b2)| {
        let a = a1.iter().zip(a2).map(|(x, y)| x * y).collect();
        let b = a2.iter().zip(b1).zip(b2).map(|((a2, b1), b2)| a2 * b1 + b2).collect();
        (a, b)
    });
    maps.into_iter()
        .map(|(a, b)| a.iter().zip(&b).zip(h0).map(|((a, b), h)| a * h + b).collect())
        .collect()
}

/// Each unit either takes `S(n) α` (gate open) or keeps its value (gate closed);
/// the composition of two such maps is the later write if any, else the earlier.
fn scan_set_or_carry(h0: &[f64], alpha: &[f64], steps: Vec<(Vec<f64>, Vec<f64>)>) -> Vec<Vec<f64>> {
    let mut maps: Vec<Vec<Option<f64>>> = steps
        .into_iter()
        .map(|(z, n)| {
            z.iter()
                .zip(&n)
                .zip(alpha)
                .map(|((&z, &n), &a)| (z == 1.0).then(|| crate::numerics::sign(n) * a))
                .collect()
        })
        .collect();
    inclusive_scan(&mut maps, &|first: &Vec<Option<f64>>, second| {
        first.iter().zip(second).map(|(f, s)| s.or(*f)).collect()
    });
    maps.into_iter()
        .map(|m| m.iter().zip(h0).map(|(v, h)| v.unwrap_or(*h)).collect())
        .collect()
}

/// Largest deviation between `scan_forward` and the network's sequential
/// step over random cases.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanCheck {
    pub family: CellFamily,
    pub cases: usize,
    pub longest: usize,
    pub max_abs_error: f64,
    /// Cases whose states differ bitwise somewhere.
    pub inexact_cases: usize,
}

/// Random single-cell networks (input 3, hidden 4) driven by random inputs of
/// length `1..=max_len`; the first case always has length `max_len`.
pub fn scan_check(family: CellFamily, cases: usize, max_len: usize, seed: u64) -> Result<ScanCheck, CellError> {
    let mut rng = Rng::derive(seed, "scan-check");
    let (input, hidden) = (3, 4);
    let spec = NetworkSpec {
        input,
        layers: vec![LayerSpec::Recurrent(vec![(family, hidden)]), LayerSpec::Linear(1)],
    };
    let mut out = ScanCheck {
        family,
        cases,
        longest: 0,
        max_abs_error: 0.0,
        inexact_cases: 0,
    };
    for case in 0..cases {
        let mut model = Model::init(spec.clone(), &mut rng)?;
        if let Some(Layer::Recurrent(cells)) = model.layers_mut().first_mut() {
            for name in ["b_z", "b_n", "b_beta"] {
                if let Some(t) = cells[0].get_mut(name) {
                    t.data_mut().iter_mut().for_each(|v| *v = rng.uniform_in(-0.5, 0.5));
                }
            }
        }
        let len = if case == 0 {
            max_len
        } else {
            rng.range_inclusive(1, max_len)
        };
        out.longest = out.longest.max(len);
        let h0: Vec<f64> = (0..hidden).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let xs: Vec<Vec<f64>> = (0..len)
            .map(|_| (0..input).map(|_| rng.uniform_in(-2.0, 2.0)).collect())
            .collect();
        let scanned = scan_forward(model.cells()[0], &h0, &xs)?;
        let mut runner = Runner::new(&model, 1);
        runner.set_state(&HiddenState::from_flat(&spec, &h0)?)?;
        let mut exact = true;
        for (x, s) in xs.iter().zip(&scanned) {
            runner.advance(x)?;
            for (a, b) in runner.state().flatten().iter().zip(s) {
                exact &= a.to_bits() == b.to_bits();
                out.max_abs_error = out.max_abs_error.max((a - b).abs());
            }
        }
        if !exact {
            out.inexact_cases += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scan_matches_fold() {
        let mut rng = Rng::new(2);
        for n in 0..40 {
            let mut items: Vec<usize> = (0..n).map(|_| rng.below(100)).collect();
            let expect: Vec<usize> = items
                .iter()
                .scan(0, |acc, &x| {
                    *acc += x;
                    Some(*acc)
                })
                .collect();
            inclusive_scan(&mut items, &|a, b| a + b);
            assert_eq!(items, expect);
        }
    }

    #[test]
    fn rejects_state_gated_family() {
        let p = CellParams::init(CellFamily::Gru, 2, 3, &mut Rng::new(0)).unwrap();
        assert!(matches!(
            scan_forward(&p, &[0.0; 3], &[vec![0.0; 2]]),
            Err(CellError::WrongFamily(CellFamily::Gru))
        ));
    }

    #[test]
    fn closed_gates_hold_h0() {
        let mut p = CellParams::init(CellFamily::Bmru, 2, 3, &mut Rng::new(0)).unwrap();
        for v in p.get_mut("b_beta").unwrap().data_mut() {
            *v = 100.0;
        }
        let h0 = [0.3, -0.2, 0.9];
        let xs: Vec<Vec<f64>> = (0..17).map(|t| vec![t as f64 * 0.1, -0.5]).collect();
        for h in scan_forward(&p, &h0, &xs).unwrap() {
            assert_eq!(h, h0);
        }
    }

    #[test]
    fn matches_sequential_steps() {
        let mut rng = Rng::new(11);
        for family in [CellFamily::MinGru, CellFamily::Bmru] {
            let p = CellParams::init(family, 3, 4, &mut rng).unwrap();
            let h0: Vec<f64> = (0..4).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let xs: Vec<Vec<f64>> = (0..256)
                .map(|_| (0..3).map(|_| rng.uniform_in(-2.0, 2.0)).collect())
                .collect();
            let scanned = scan_forward(&p, &h0, &xs).unwrap();
            let mut h = h0.clone();
            for (x, s) in xs.iter().zip(&scanned) {
                h = p.step(&h, x).unwrap();
                for (a, b) in h.iter().zip(s) {
                    if family == CellFamily::Bmru {
                        assert_eq!(a, b);
                    } else {
                        assert!((a - b).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn scan_check_small() {
        let m = scan_check(CellFamily::MinGru, 5, 64, 3).unwrap();
        assert!(m.max_abs_error < 1e-10);
        assert_eq!(m.longest, 64);
        let b = scan_check(CellFamily::Bmru, 5, 64, 3).unwrap();
        assert_eq!(b.inexact_cases, 0);
        assert!(scan_check(CellFamily::Nbrc, 1, 4, 3).is_err());
    }
}
