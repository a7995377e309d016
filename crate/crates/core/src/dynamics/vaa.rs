use std::fmt;

use crate::cells::Model;

use super::map::{iterate_map, IdleMap, StateMap};
use super::DynamicsError;

pub const DEFAULT_ITERATIONS: usize = 1000;
pub const DEFAULT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stability {
    Monostable,
    Multistable,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Monostable => "monostable",
            Stability::Multistable => "multistable",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub initial_count: usize,
    pub iterations: usize,
    pub tolerance: f64,
    pub finals: Vec<Vec<f64>>,
    pub converged_at: Vec<Option<usize>>,
    /// Single-linkage cluster of each final state at distance `tolerance`.
    pub assignment: Vec<usize>,
    /// One representative final state per cluster.
    pub attractors: Vec<Vec<f64>>,
    pub vaa: f64,
    pub classification: Stability,
}

impl StabilityReport {
    pub fn cluster_count(&self) -> usize {
        self.attractors.len()
    }
}

pub const STABILITY_HEADER: &str = "model,family,initial_states,iterations,tolerance,vaa,clusters,classification";

impl StabilityReport {
    pub fn csv_row(&self, model_id: &str, family: &str) -> String {
        format!(
            "{model_id},{family},{},{},{},{},{},{}",
            self.initial_count,
            self.iterations,
            self.tolerance,
            self.vaa,
            self.cluster_count(),
            self.classification
        )
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `(1/|H|) Σ_i 1 / #{j : ‖f_i − f_j‖ ≤ ε}` over final states `f`.
pub fn vaa_of_finals(finals: &[Vec<f64>], tolerance: f64) -> f64 {
    let n = finals.len();
    let sum: f64 = finals
        .iter()
        .map(|fi| {
            let close = finals.iter().filter(|fj| distance(fi, fj) <= tolerance).count();
            1.0 / close as f64
        })
        .sum();
    sum / n as f64
}

/// Connected components of the `‖·‖ ≤ ε` relation, numbered by first appearance.
pub fn single_linkage(finals: &[Vec<f64>], tolerance: f64) -> Vec<usize> {
    let n = finals.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if distance(&finals[i], &finals[j]) <= tolerance {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut labels = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let r = root(&mut parent, i);
        if labels[r] == usize::MAX {
            labels[r] = next;
            next += 1;
        }
        out.push(labels[r]);
    }
    out
}

/// Iterates the map `iterations` times from every initial state and reports
/// the approximate VAA and the attractor clusters.
pub fn vaa(
    map: &mut impl StateMap,
    initial: &[Vec<f64>],
    iterations: usize,
    tolerance: f64,
) -> Result<StabilityReport, DynamicsError> {
    if initial.len() < 2 {
        return Err(DynamicsError::TooFewStates(initial.len()));
    }
    let mut finals = Vec::with_capacity(initial.len());
    let mut converged_at = Vec::with_capacity(initial.len());
    for h in initial {
        if h.len() != map.dim() {
            return Err(DynamicsError::WidthMismatch {
                expected: map.dim(),
                got: h.len(),
            });
        }
        let tr = iterate_map(map, h, iterations, tolerance / 10.0)?;
        finals.push(tr.last);
        converged_at.push(tr.converged_at);
    }
    let assignment = single_linkage(&finals, tolerance);
    let count = assignment.iter().max().map_or(0, |m| m + 1);
    let attractors = (0..count)
        .map(|c| finals[assignment.iter().position(|&a| a == c).expect("label used")].clone())
        .collect();
    let classification = if count >= 2 {
        Stability::Multistable
    } else {
        Stability::Monostable
    };
    Ok(StabilityReport {
        initial_count: initial.len(),
        iterations,
        tolerance,
        vaa: vaa_of_finals(&finals, tolerance),
        finals,
        converged_at,
        assignment,
        attractors,
        classification,
    })
}

pub fn classify_stability(
    model: &Model,
    x_bar: &[f64],
    initial: &[Vec<f64>],
    iterations: usize,
    tolerance: f64,
) -> Result<StabilityReport, DynamicsError> {
    let mut map = IdleMap::new(model, x_bar)?;
    vaa(&mut map, initial, iterations, tolerance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::FnMap;

    #[test]
    fn common_fixed_point_gives_inverse_count() {
        let mut map = FnMap::new(1, |h: &[f64]| vec![0.5 * h[0]]);
        let r = vaa(&mut map, &[vec![-1.0], vec![1.0]], 1000, 1e-3).unwrap();
        assert_eq!(r.vaa, 0.5);
        assert_eq!(r.classification, Stability::Monostable);
    }

    #[test]
    fn identity_distinct_states_give_one() {
        let mut map = FnMap::new(1, |h: &[f64]| h.to_vec());
        let r = vaa(&mut map, &[vec![-1.0], vec![0.0], vec![1.0]], 10, 1e-3).unwrap();
        assert_eq!(r.vaa, 1.0);
        assert_eq!(r.cluster_count(), 3);
    }

    #[test]
    fn formula_is_not_transitive() {
        let finals = vec![vec![0.0], vec![0.8e-3], vec![1.6e-3]];
        // Counts are 2, 3, 2.
        let expect = (0.5 + 1.0 / 3.0 + 0.5) / 3.0;
        assert!((vaa_of_finals(&finals, 1e-3) - expect).abs() < 1e-15);
        assert_eq!(single_linkage(&finals, 1e-3), vec![0, 0, 0]);
    }

    #[test]
    fn permutation_invariant() {
        let finals = vec![vec![0.0], vec![0.5e-3], vec![3.0], vec![3.0]];
        let mut rev = finals.clone();
        rev.reverse();
        assert_eq!(vaa_of_finals(&finals, 1e-3), vaa_of_finals(&rev, 1e-3));
    }

    #[test]
    fn needs_two_states() {
        let mut map = FnMap::new(1, |h: &[f64]| h.to_vec());
        assert!(matches!(
            vaa(&mut map, &[vec![0.0]], 10, 1e-3),
            Err(DynamicsError::TooFewStates(1))
        ));
    }
}
