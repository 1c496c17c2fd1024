use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_STEP: f64 = 1e-4;

/// `|a - n| / max(1e-8, |a| + |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares the reverse-mode gradient returned by `f` against central
/// differences `(f(x + h) - f(x - h)) / 2h`, coordinate by coordinate, and
/// returns the worst relative error.
///
/// `f` returns the scalar value and its gradient with respect to `x`.
pub fn grad_check<F, Func>(f: Func, x: &Tensor<F>, h: F) -> Result<f64>
where
    F: Real,
    Func: Fn(&Tensor<F>) -> Result<(F, Tensor<F>)>,
{
    let (_, analytic) = f(x)?;
    if !analytic.same_shape(x) {
        return Err(Error::shape(format!("gradient shape {:?} differs from input {:?}", analytic.shape(), x.shape())));
    }
    let two_h = (h + h).as_f64();
    let mut probe = x.clone();
    let mut worst = 0.0f64;
    for i in 0..x.numel() {
        let orig = x.data()[i];
        probe.data_mut()[i] = orig + h;
        let (up, _) = f(&probe)?;
        probe.data_mut()[i] = orig - h;
        let (down, _) = f(&probe)?;
        probe.data_mut()[i] = orig;
        let numeric = (up.as_f64() - down.as_f64()) / two_h;
        worst = worst.max(relative_error(analytic.data()[i].as_f64(), numeric));
    }
    Ok(worst)
}
