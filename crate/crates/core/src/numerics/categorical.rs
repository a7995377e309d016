use super::{NumericsError, Rng};

/// Softmax with the maximum logit subtracted before exponentiation.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&l| l - lse).collect()
}

/// Entropy of the categorical distribution with the given logits.
pub fn entropy(logits: &[f64]) -> f64 {
    log_softmax(logits).iter().map(|&lp| -lp.exp() * lp).sum()
}

/// Index of the largest logit; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Draws an index with probability `softmax(logits)`.
pub fn sample_categorical(rng: &mut Rng, logits: &[f64]) -> Result<usize, NumericsError> {
    if logits.is_empty() {
        return Err(NumericsError::EmptyLogits);
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(NumericsError::NonFiniteLogits);
    }
    let probs = softmax(logits);
    let u = rng.uniform();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding left `acc` just under 1; fall back to the last nonzero entry.
    Ok(probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn frequencies(logits: &[f64], draws: usize, seed: u64) -> Vec<f64> {
        let mut rng = Rng::new(seed);
        let mut counts = vec![0usize; logits.len()];
        for _ in 0..draws {
            counts[sample_categorical(&mut rng, logits).unwrap()] += 1;
        }
        counts.iter().map(|&c| c as f64 / draws as f64).collect()
    }

    #[test]
    fn dominant_logit_almost_always_drawn() {
        let f = frequencies(&[1000.0, 0.0, 0.0, 0.0], 10_000, 1);
        assert!(f[0] > 0.999);
    }

    #[test]
    fn uniform_logits_uniform_frequencies() {
        let f = frequencies(&[0.0; 4], 100_000, 2);
        for p in f {
            assert!((p - 0.25).abs() < 0.02);
        }
    }

    #[test]
    fn ln2_logits_two_to_one() {
        let f = frequencies(&[2f64.ln(), 0.0], 100_000, 3);
        assert!((f[0] - 2.0 / 3.0).abs() < 0.02);
        assert!((f[1] - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn empty_and_nonfinite_rejected() {
        let mut rng = Rng::new(0);
        assert!(matches!(
            sample_categorical(&mut rng, &[]),
            Err(NumericsError::EmptyLogits)
        ));
        assert!(sample_categorical(&mut rng, &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn argmax_ties_lowest_index() {
        assert_eq!(argmax(&[0.5, 0.5, 0.1]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }

    proptest! {
        #[test]
        fn softmax_sums_to_one_and_is_shift_invariant(
            logits in prop::collection::vec(-50.0f64..50.0, 1..8),
            shift in -100.0f64..100.0,
        ) {
            let p = softmax(&logits);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
            let q = softmax(&shifted);
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
