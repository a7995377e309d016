use super::Tensor2;

/// Outcome of comparing analytic gradients with central differences.
#[derive(Debug, Clone)]
pub struct FdReport {
    /// max over entries of `|analytic − numeric| / max(1, |numeric|)`
    pub worst_rel_error: f64,
    /// `(parameter index, flat entry index)` of the worst entry
    pub worst_at: Option<(usize, usize)>,
    pub entries_checked: usize,
    pub passed: bool,
    pub failure: Option<String>,
}

/// Central-difference check of `analytic` against `objective` around `params`.
///
/// `objective` must be deterministic. A non-finite objective value fails the
/// check and records where it happened.
pub fn finite_diff_check<F>(
    mut objective: F,
    params: &[Tensor2],
    analytic: &[Tensor2],
    step: f64,
    tolerance: f64,
) -> FdReport
where
    F: FnMut(&[Tensor2]) -> f64,
{
    let mut report = FdReport {
        worst_rel_error: 0.0,
        worst_at: None,
        entries_checked: 0,
        passed: true,
        failure: None,
    };
    if params.len() != analytic.len() {
        report.passed = false;
        report.failure = Some(format!("{} parameters but {} gradients", params.len(), analytic.len()));
        return report;
    }
    let mut work: Vec<Tensor2> = params.to_vec();
    for (pi, grad) in analytic.iter().enumerate() {
        if grad.shape() != params[pi].shape() {
            report.passed = false;
            report.failure = Some(format!("gradient {pi} has shape {:?}", grad.shape()));
            return report;
        }
        for e in 0..params[pi].data().len() {
            let orig = params[pi].data()[e];
            work[pi].data_mut()[e] = orig + step;
            let plus = objective(&work);
            work[pi].data_mut()[e] = orig - step;
            let minus = objective(&work);
            work[pi].data_mut()[e] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                report.passed = false;
                report.failure = Some(format!("non-finite objective at parameter {pi}, entry {e}"));
                report.worst_at = Some((pi, e));
                return report;
            }
            let numeric = (plus - minus) / (2.0 * step);
            let rel = (grad.data()[e] - numeric).abs() / numeric.abs().max(1.0);
            report.entries_checked += 1;
            if report.worst_at.is_none() || rel > report.worst_rel_error {
                report.worst_rel_error = rel;
                report.worst_at = Some((pi, e));
            }
        }
    }
    report.passed = report.worst_rel_error < tolerance;
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_objective_exact() {
        let x = [0.3, -1.2, 2.5];
        let w = Tensor2::row_vector(&[1.0, 2.0, -0.5]);
        let objective = |p: &[Tensor2]| p[0].data().iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        let analytic = Tensor2::row_vector(&x);
        let r = finite_diff_check(objective, &[w], &[analytic], 1e-5, 1e-9);
        assert!(r.passed, "{r:?}");
        assert!(r.worst_rel_error < 1e-9);
        assert_eq!(r.entries_checked, 3);
    }

    #[test]
    fn wrong_gradient_detected() {
        let w = Tensor2::row_vector(&[1.0]);
        let r = finite_diff_check(
            |p: &[Tensor2]| p[0].data()[0].powi(2),
            &[w],
            &[Tensor2::scalar(0.0)],
            1e-5,
            1e-4,
        );
        assert!(!r.passed);
        assert!((r.worst_rel_error - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nonfinite_objective_reported() {
        let w = Tensor2::row_vector(&[0.0]);
        let r = finite_diff_check(
            |p: &[Tensor2]| p[0].data()[0].ln(),
            &[w],
            &[Tensor2::scalar(0.0)],
            1e-5,
            1e-4,
        );
        assert!(!r.passed);
        assert_eq!(r.worst_at, Some((0, 0)));
        assert!(r.failure.unwrap().contains("non-finite"));
    }
}
