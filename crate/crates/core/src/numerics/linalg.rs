use super::{NumericsError, Tensor2};

/// Solves `a · x = b` for square `a` by Gaussian elimination with partial pivoting.
pub fn solve(a: &Tensor2, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(NumericsError::ShapeMismatch {
            node: 0,
            op: "solve",
            detail: format!("{:?} with rhs of length {}", a.shape(), b.len()),
        });
    }
    let mut m: Vec<Vec<f64>> = (0..n).map(|r| a.row(r).to_vec()).collect();
    let mut x = b.to_vec();
    let scale = a.data().iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= 1e-13 * scale {
            return Err(NumericsError::Singular);
        }
        m.swap(col, pivot);
        x.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                x[row] -= f * x[col];
            }
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col];
        for k in col + 1..n {
            acc -= m[col][k] * x[k];
        }
        x[col] = acc / m[col][col];
    }
    Ok(x)
}

/// Upper estimate of the spectral radius via `‖A^k‖_∞^{1/k}` with `k = 2^squarings`.
///
/// Gelfand's formula approaches the radius from above, so a value below 1
/// certifies stability.
pub fn spectral_radius_bound(a: &Tensor2, squarings: u32) -> f64 {
    let inf_norm = |m: &Tensor2| {
        (0..m.rows())
            .map(|r| m.row(r).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    let mut p = a.clone();
    // log of the accumulated normalization keeps powers from overflowing
    let mut log_scale = 0.0;
    for _ in 0..squarings {
        let n = inf_norm(&p);
        if n == 0.0 {
            return 0.0;
        }
        p.scale_assign(1.0 / n);
        log_scale = 2.0 * (log_scale + n.ln());
        p = p.matmul(&p).expect("square");
    }
    let n = inf_norm(&p);
    if n == 0.0 {
        return 0.0;
    }
    let k = 2f64.powi(squarings as i32);
    ((log_scale + n.ln()) / k).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = Tensor2::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = solve(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn singular_rejected() {
        let a = Tensor2::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(solve(&a, &[1.0, 1.0]), Err(NumericsError::Singular)));
    }

    #[test]
    fn spectral_radius_of_rotation_and_diagonal() {
        let d = Tensor2::from_rows(&[vec![0.5, 0.0], vec![0.0, -0.9]]).unwrap();
        assert!((spectral_radius_bound(&d, 10) - 0.9).abs() < 1e-2);
        // scaled rotation has complex eigenvalues of modulus 0.7
        let (c, s) = (0.7 * 0.3f64.cos(), 0.7 * 0.3f64.sin());
        let r = Tensor2::from_rows(&[vec![c, -s], vec![s, c]]).unwrap();
        assert!((spectral_radius_bound(&r, 10) - 0.7).abs() < 1e-2);
    }
}
