/// AdaDelta state: running means of squared gradients and squared updates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaDelta {
    rho: f64,
    eps: f64,
    lr: f64,
    eg2: Vec<f64>,
    edx2: Vec<f64>,
}

impl AdaDelta {
    pub fn new(len: usize, rho: f64, eps: f64, lr: f64) -> Self {
        Self {
            rho,
            eps,
            lr,
            eg2: vec![0.0; len],
            edx2: vec![0.0; len],
        }
    }

    pub fn mean_sq_grad(&self) -> &[f64] {
        &self.eg2
    }

    pub fn mean_sq_update(&self) -> &[f64] {
        &self.edx2
    }

    /// One update of `params` against `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let (rho, eps) = (self.rho, self.eps);
        for (((p, &g), eg2), edx2) in params
            .iter_mut()
            .zip(grad)
            .zip(&mut self.eg2)
            .zip(&mut self.edx2)
        {
            *eg2 = rho * *eg2 + (1.0 - rho) * g * g;
            let dx = -((*edx2 + eps).sqrt() / (*eg2 + eps).sqrt()) * g;
            *edx2 = rho * *edx2 + (1.0 - rho) * dx * dx;
            *p += self.lr * dx;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_size() {
        let mut opt = AdaDelta::new(1, 0.95, 1e-6, 1.0);
        let mut p = [1.0];
        opt.step(&mut p, &[2.0]);
        // Eg² = 0.05·4, Δ = −√1e-6 / √(0.2 + 1e-6) · 2
        let dx = -(1e-6f64).sqrt() / (0.2f64 + 1e-6).sqrt() * 2.0;
        assert!((p[0] - (1.0 + dx)).abs() < 1e-15);
        assert!(opt.mean_sq_update()[0] > 0.0);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut opt = AdaDelta::new(2, 0.9, 1e-6, 1.0);
        let mut p = [0.5, -0.5];
        opt.step(&mut p, &[0.0, 0.0]);
        assert_eq!(p, [0.5, -0.5]);
    }
}
