use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::numerics::Matrix;

use super::backward::Gradients;

#[derive(Clone, Copy, Debug, PartialEq)]
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

/// First and second moment estimates per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        let zeros: Vec<Matrix> = params.tensors().iter().map(|t| Matrix::zeros(t.rows(), t.cols())).collect();
        Self { m: zeros.clone(), v: zeros, step: 0 }
    }
}

/// One bias-corrected Adam update applied in place.
pub fn adam_step(params: &mut ModelParams, grads: &Gradients, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    let gt = grads.tensors();
    if gt.len() != state.m.len() {
        return Err(Error::Shape(format!("{} gradient tensors for {} moment tensors", gt.len(), state.m.len())));
    }
    state.step += 1;
    let step = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(step);
    let bc2 = 1.0 - cfg.beta2.powi(step);
    for (i, p) in params.tensors_mut().into_iter().enumerate() {
        let g = gt[i];
        if p.shape() != g.shape() || p.shape() != state.m[i].shape() {
            return Err(Error::Shape(format!(
                "adam: parameter {:?}, gradient {:?}, moment {:?}",
                p.shape(),
                g.shape(),
                state.m[i].shape()
            )));
        }
        let m = state.m[i].data_mut();
        let v = state.v[i].data_mut();
        for (((theta, &g), m), v) in p.data_mut().iter_mut().zip(g.data()).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *theta -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Architecture;
    use crate::numerics::Rng;

    fn tiny() -> Architecture {
        Architecture { filters: 3, hidden: 2, fnn_units: 4, gru_layers: 1, ..Default::default() }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let p0 = ModelParams::init(tiny(), &mut Rng::new(0));
        let mut p = p0.clone();
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &Gradients::zeros_like(&p0), &mut st, &AdamConfig::default()).unwrap();
        assert_eq!(p, p0);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let p0 = ModelParams::init(tiny(), &mut Rng::new(0));
        let mut p = p0.clone();
        let mut g = Gradients::zeros_like(&p0);
        g.tensors_mut().into_iter().for_each(|m| m.fill(1.0));
        let mut st = AdamState::new(&p);
        let cfg = AdamConfig::default();
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        for (a, b) in p.tensors().iter().zip(p0.tensors()) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!(((y - x) - cfg.learning_rate).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn matches_hand_stepped_scalar_oracle() {
        // f(θ) = 0.5 θ², gradient θ, stepped by hand with the textbook rule.
        let cfg = AdamConfig { learning_rate: 0.1, ..Default::default() };
        let arch = tiny();
        let mut p = ModelParams::zeros(arch);
        p.att_b.data_mut()[0] = 2.0;
        let mut st = AdamState::new(&p);
        let (mut theta, mut m, mut v) = (2.0f64, 0.0f64, 0.0f64);
        for k in 1..=10 {
            let g = theta;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mh = m / (1.0 - 0.9f64.powi(k));
            let vh = v / (1.0 - 0.999f64.powi(k));
            theta -= 0.1 * mh / (vh.sqrt() + 1e-8);

            let mut grads = Gradients::zeros_like(&p);
            grads.att_b.data_mut()[0] = p.att_b.data()[0];
            adam_step(&mut p, &grads, &mut st, &cfg).unwrap();
            assert!((p.att_b.data()[0] - theta).abs() < 1e-12);
        }
        assert!(st.v.iter().all(|m| m.data().iter().all(|v| *v >= 0.0)));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let p = ModelParams::zeros(tiny());
        let other = ModelParams::zeros(Architecture { hidden: 3, ..tiny() });
        let mut st = AdamState::new(&p);
        let mut q = p.clone();
        let g = Gradients::zeros_like(&other);
        assert!(adam_step(&mut q, &g, &mut st, &AdamConfig::default()).is_err());
    }
}
