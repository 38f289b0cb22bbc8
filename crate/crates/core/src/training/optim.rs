use crate::numerics::{Parameter, Tensor2D};

/// Adam with bias correction. Moment buffers are matched to parameters by
/// position, so callers must pass the same parameter list on every step.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f32,
    pub beta1: f32,
    pub beta2: f32,
    pub eps: f32,
    step: u64,
    moments: Vec<Option<(Tensor2D, Tensor2D)>>,
}

impl Adam {
    pub fn new(lr: f32) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            moments: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update from each parameter's accumulated `grad`. Frozen parameters are skipped.
    pub fn step(&mut self, params: &mut [&mut Parameter]) {
        self.step += 1;
        if self.moments.len() < params.len() {
            self.moments.resize(params.len(), None);
        }
        let t = self.step as i32;
        let bc1 = 1.0 - (self.beta1 as f64).powi(t);
        let bc2 = 1.0 - (self.beta2 as f64).powi(t);
        for (p, slot) in params.iter_mut().zip(&mut self.moments) {
            if p.frozen {
                continue;
            }
            let (rows, cols) = p.shape();
            let (m, v) = slot.get_or_insert_with(|| (Tensor2D::zeros(rows, cols), Tensor2D::zeros(rows, cols)));
            let grad = p.grad.data();
            let value = p.value.data_mut();
            for i in 0..grad.len() {
                let g = grad[i];
                let mi = &mut m.data_mut()[i];
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                let vi = &mut v.data_mut()[i];
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                let m_hat = *mi as f64 / bc1;
                let v_hat = *vi as f64 / bc2;
                value[i] -= (self.lr as f64 * m_hat / (v_hat.sqrt() + self.eps as f64)) as f32;
            }
        }
    }
}

/// Scales gradients so their global L2 norm is at most `max_norm`. Returns the pre-clip norm.
pub fn clip_grad_norm(params: &mut [&mut Parameter], max_norm: f32) -> f32 {
    let total: f64 = params
        .iter()
        .filter(|p| !p.frozen)
        .flat_map(|p| p.grad.data().iter())
        .map(|&g| (g as f64) * (g as f64))
        .sum();
    let norm = total.sqrt() as f32;
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for p in params.iter_mut().filter(|p| !p.frozen) {
            p.grad.data_mut().iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}

/// Free-function form of [`Adam::step`].
pub fn optimizer_step(params: &mut [&mut Parameter], state: &mut Adam) {
    state.step(params);
}
