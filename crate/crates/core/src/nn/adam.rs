use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    /// lr 1e-4, beta1 0.9, beta2 0.999 and the enlarged epsilon 0.1.
    fn default() -> Self {
        AdamHyper { learning_rate: 1e-4, beta1: 0.9, beta2: 0.999, epsilon: 0.1 }
    }
}

impl AdamHyper {
    /// A zero learning rate is accepted so an epoch can be run as a pure
    /// forward/backward sweep.
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..1.0;
        if !unit.contains(&self.beta1) || !unit.contains(&self.beta2) {
            return Err(Error::config("Adam betas must lie in [0, 1)"));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning rate must be a non-negative number"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// First and second moments per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub m: Vec<Tensor<F>>,
    pub v: Vec<Tensor<F>>,
    pub step_count: u64,
}

impl<F: Real> AdamState<F> {
    pub fn new(params: &[Tensor<F>]) -> Self {
        AdamState {
            m: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            v: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step_count: 0,
        }
    }
}

/// One Adam update using each parameter's `grad`.
///
/// `p -= lr * m_hat / (sqrt(v_hat) + eps)`. All gradients are validated
/// before anything is modified, so a non-finite gradient leaves both the
/// parameters and the state untouched.
pub fn adam_step<F: Real>(params: &mut [Tensor<F>], state: &mut AdamState<F>, hyper: &AdamHyper) -> Result<()> {
    hyper.validate()?;
    if state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::shape("Adam state does not match parameter list"));
    }
    for (i, p) in params.iter().enumerate() {
        let g = p.grad.as_ref().ok_or_else(|| Error::shape(format!("parameter {i} has no gradient")))?;
        if g.len() != p.numel() || !state.m[i].same_shape(p) || !state.v[i].same_shape(p) {
            return Err(Error::shape(format!("parameter {i} gradient or moment shape mismatch")));
        }
        if let Some(j) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of parameter {i} at {j}")));
        }
    }

    state.step_count += 1;
    let t = state.step_count as i32;
    let b1 = F::of(hyper.beta1);
    let b2 = F::of(hyper.beta2);
    let one = F::one();
    let bc1 = one - b1.powi(t);
    let bc2 = one - b2.powi(t);
    let lr = F::of(hyper.learning_rate);
    let eps = F::of(hyper.epsilon);

    for ((p, m), v) in params.iter_mut().zip(&mut state.m).zip(&mut state.v) {
        let g = p.grad.take().expect("checked above");
        for (((pv, mv), vv), &gv) in p.data_mut().iter_mut().zip(m.data_mut()).zip(v.data_mut()).zip(&g) {
            *mv = b1 * *mv + (one - b1) * gv;
            *vv = b2 * *vv + (one - b2) * gv * gv;
            let m_hat = *mv / bc1;
            let v_hat = *vv / bc2;
            *pv -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        p.grad = Some(g);
    }
    Ok(())
}
