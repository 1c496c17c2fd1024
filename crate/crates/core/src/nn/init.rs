use rand::distr::{Distribution, Uniform};

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `sqrt(6 / (fan_in + fan_out))` for a `[D, M]` linear weight or a
/// `[K, C, kh, kw]` conv kernel.
pub fn xavier_bound(shape: &[usize]) -> Result<f64> {
    let (fan_in, fan_out) = match shape {
        [d, m] => (*d, *m),
        [k, c, kh, kw] => (c * kh * kw, k * kh * kw),
        _ => return Err(Error::shape(format!("no Xavier fan for shape {shape:?}"))),
    };
    Ok((6.0 / (fan_in + fan_out) as f64).sqrt())
}

/// Glorot-uniform weights; rank-1 (bias) shapes are zero.
pub fn xavier_init<F: Real>(shape: &[usize], rng: &mut impl rand::Rng) -> Result<Tensor<F>> {
    if shape.is_empty() || shape.contains(&0) {
        return Err(Error::shape(format!("degenerate shape {shape:?}")));
    }
    if shape.len() == 1 {
        return Ok(Tensor::zeros(shape));
    }
    let a = xavier_bound(shape)?;
    let dist = Uniform::new_inclusive(-a, a).map_err(|e| Error::config(e.to_string()))?;
    let numel = shape.iter().product();
    let data = (0..numel).map(|_| F::of(dist.sample(rng))).collect();
    Tensor::new(shape.to_vec(), data)
}
