//! Adam with bias correction, operating on ordered parameter blocks so one
//! optimizer instance can drive a whole network (plus extras such as a
//! policy's log-std vector).

use super::mlp::NnError;

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Number of successfully applied steps; rejected updates do not count.
    pub step_count: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(block_sizes: &[usize], learning_rate: f64) -> Self {
        OptimizerState {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            m: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: block_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// One Adam step over every block. Gradients containing non-finite values
    /// are rejected wholesale: no parameter, moment or step-count changes.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<(), NnError> {
        assert_eq!(params.len(), self.m.len(), "block count mismatch");
        assert_eq!(grads.len(), self.m.len(), "gradient block count mismatch");
        for (b, (p, g)) in params.iter().zip(grads).enumerate() {
            assert_eq!(p.len(), self.m[b].len(), "block {b} size mismatch");
            assert_eq!(g.len(), self.m[b].len(), "gradient block {b} size mismatch");
        }
        for (b, g) in grads.iter().enumerate() {
            if let Some(index) = g.iter().position(|x| !x.is_finite()) {
                return Err(NnError::NonFiniteGradient { block: b, index });
            }
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for (b, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[b];
            let v = &mut self.v[b];
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let m_hat = m[i] / bias1;
                let v_hat = v[i] / bias2;
                p[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
