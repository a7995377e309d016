use crate::numerics::Tensor2;

/// `base · (1 + cos(π t / T)) / 2`, held at 0 from `t = T` on.
pub fn cosine_lr(base: f64, iteration: usize, t_max: usize) -> f64 {
    let t = iteration.min(t_max) as f64 / t_max as f64;
    base * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
}

/// Scales `grads` in place so their joint L2 norm is at most `max_norm`;
/// returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [Tensor2], max_norm: f64) -> f64 {
    let norm = grads.iter().map(Tensor2::squared_norm).sum::<f64>().sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            g.scale_assign(scale);
        }
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<Tensor2>,
    pub v: Vec<Tensor2>,
}

impl Adam {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor2>, eps: f64) -> Self {
        let m: Vec<Tensor2> = params.into_iter().map(|p| Tensor2::zeros(p.rows(), p.cols())).collect();
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps,
            t: 0,
            v: m.clone(),
            m,
        }
    }

    pub fn step(&mut self, params: Vec<&mut Tensor2>, grads: &[Tensor2], lr: f64) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            let (p, g, m, v) = (p.data_mut(), g.data(), m.data_mut(), v.data_mut());
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_values() {
        assert_eq!(cosine_lr(0.005, 0, 250), 0.005);
        assert!((cosine_lr(0.005, 125, 250) - 0.0025).abs() < 1e-15);
        assert!(cosine_lr(0.005, 250, 250).abs() < 1e-18);
        assert!(cosine_lr(0.005, 400, 250).abs() < 1e-18);
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = vec![Tensor2::row_vector(&[3.0, 4.0]), Tensor2::scalar(12.0)];
        let before = clip_grad_norm(&mut g, 1.0);
        assert_eq!(before, 13.0);
        let after = g.iter().map(Tensor2::squared_norm).sum::<f64>().sqrt();
        assert!(after <= 1.0 + 1e-9);
        let mut small = vec![Tensor2::scalar(0.5)];
        clip_grad_norm(&mut small, 1.0);
        assert_eq!(small[0].get(0, 0), 0.5);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = Tensor2::row_vector(&[1.0, -1.0]);
        let mut opt = Adam::new([&p], 1e-8);
        opt.step(vec![&mut p], &[Tensor2::row_vector(&[0.3, -2.0])], 0.1);
        assert!((p.get(0, 0) - 0.9).abs() < 1e-6);
        assert!((p.get(0, 1) + 0.9).abs() < 1e-6);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = Tensor2::scalar(5.0);
        let mut opt = Adam::new([&p], 1e-8);
        for _ in 0..2000 {
            let g = Tensor2::scalar(2.0 * (p.get(0, 0) - 1.5));
            opt.step(vec![&mut p], &[g], 0.05);
        }
        assert!((p.get(0, 0) - 1.5).abs() < 1e-3);
    }
}
