use super::network::{Gradients, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

fn update(theta: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64], cfg: &AdamConfig, c1: f64, c2: f64) {
    for i in 0..theta.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, cfg: &AdamConfig) {
    params.adam_step += 1;
    let t = params.adam_step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (layer, g) in params.layers_mut().zip(&grads.layers) {
        update(&mut layer.weights, &mut layer.m_w, &mut layer.v_w, &g.weights, cfg, c1, c2);
        update(&mut layer.bias, &mut layer.m_b, &mut layer.v_b, &g.bias, cfg, c1, c2);
    }
}
