use crate::error::{Error, Result};
use crate::scalar::Real;

pub const VARIANCE_FLOOR: f64 = 1e-6;

/// One diagonal Gaussian per class over fixed-size embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBackend<F> {
    pub genuine_mean: Vec<F>,
    pub genuine_var: Vec<F>,
    pub spoof_mean: Vec<F>,
    pub spoof_var: Vec<F>,
}

fn fit_class<F: Real>(rows: &[Vec<F>], dim: usize) -> Result<(Vec<F>, Vec<F>)> {
    if rows.len() < 2 {
        return Err(Error::Empty("Gaussian back-end needs at least two samples per class"));
    }
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::shape("embeddings differ in dimension"));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v.as_f64();
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0f64; dim];
    for r in rows {
        for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
            let d = v.as_f64() - m;
            *s += d * d;
        }
    }
    Ok((mean.into_iter().map(F::of).collect(), var.into_iter().map(|s| F::of((s / n).max(VARIANCE_FLOOR))).collect()))
}

fn log_density<F: Real>(x: &[F], mean: &[F], var: &[F]) -> f64 {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((x, m), v)| {
            let (x, m, v) = (x.as_f64(), m.as_f64(), v.as_f64());
            -0.5 * (ln_2pi + v.ln() + (x - m) * (x - m) / v)
        })
        .sum()
}

impl<F: Real> GaussianBackend<F> {
    /// Maximum-likelihood mean and (floored) diagonal variance per class.
    pub fn fit(genuine: &[Vec<F>], spoof: &[Vec<F>]) -> Result<Self> {
        let dim = genuine.first().map(Vec::len).ok_or(Error::Empty("no genuine embeddings"))?;
        let (genuine_mean, genuine_var) = fit_class(genuine, dim)?;
        let (spoof_mean, spoof_var) = fit_class(spoof, dim)?;
        Ok(GaussianBackend { genuine_mean, genuine_var, spoof_mean, spoof_var })
    }

    pub fn dim(&self) -> usize {
        self.genuine_mean.len()
    }

    /// `ln N(x; genuine) - ln N(x; spoof)`.
    pub fn llr(&self, x: &[F]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!("embedding has {} dims, back-end {}", x.len(), self.dim())));
        }
        Ok(log_density(x, &self.genuine_mean, &self.genuine_var) - log_density(x, &self.spoof_mean, &self.spoof_var))
    }
}
