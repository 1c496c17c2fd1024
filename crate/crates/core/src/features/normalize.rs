use super::spectrogram::Spectrogram;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Lower bound applied to every per-bin standard deviation.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-frequency-bin mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats<F> {
    pub mean: Vec<F>,
    pub std: Vec<F>,
}

impl<F: Real> NormStats<F> {
    pub fn bins(&self) -> usize {
        self.mean.len()
    }

    pub fn identity(bins: usize) -> Self {
        NormStats { mean: vec![F::zero(); bins], std: vec![F::one(); bins] }
    }
}

/// Pools every frame of every spectrogram and computes population
/// statistics per bin, accumulating in `f64`.
pub fn fit_normalizer<'a, F: Real>(specs: impl IntoIterator<Item = &'a Spectrogram<F>>) -> Result<NormStats<F>> {
    let mut bins = None;
    let mut count = 0usize;
    let mut sum = Vec::new();
    let mut sum_sq = Vec::new();
    // two passes would need the collection twice; shifted sums keep one pass stable
    let mut shift: Vec<f64> = Vec::new();
    for spec in specs {
        match bins {
            None => {
                bins = Some(spec.bins());
                sum = vec![0.0f64; spec.bins()];
                sum_sq = vec![0.0f64; spec.bins()];
                shift = if spec.frames() > 0 {
                    spec.row(0).iter().map(|v| v.as_f64()).collect()
                } else {
                    vec![0.0; spec.bins()]
                };
            }
            Some(b) if b != spec.bins() => {
                return Err(Error::shape(format!("spectrogram has {} bins, expected {b}", spec.bins())));
            }
            Some(_) => {}
        }
        for t in 0..spec.frames() {
            for (f, v) in spec.row(t).iter().enumerate() {
                let d = v.as_f64() - shift[f];
                sum[f] += d;
                sum_sq[f] += d * d;
            }
        }
        count += spec.frames();
    }
    if bins.is_none() {
        return Err(Error::Empty("no spectrograms to fit normalization on"));
    }
    if count == 0 {
        return Err(Error::Empty("spectrograms contain no frames"));
    }
    let n = count as f64;
    let mut mean = Vec::with_capacity(sum.len());
    let mut std = Vec::with_capacity(sum.len());
    for f in 0..sum.len() {
        let m = sum[f] / n;
        let var = (sum_sq[f] / n - m * m).max(0.0);
        mean.push(F::of(m + shift[f]));
        std.push(F::of(var.sqrt().max(STD_FLOOR)));
    }
    Ok(NormStats { mean, std })
}

/// `(x - mean[f]) / std[f]` for every frame.
pub fn normalize<F: Real>(spec: &Spectrogram<F>, stats: &NormStats<F>) -> Result<Spectrogram<F>> {
    if spec.bins() != stats.bins() || stats.std.len() != stats.bins() {
        return Err(Error::shape(format!("spectrogram has {} bins, stats have {}", spec.bins(), stats.bins())));
    }
    Ok(spec.map_values(|f, v| (v - stats.mean[f]) / stats.std[f]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(values: Vec<f64>, frames: usize, bins: usize) -> Spectrogram<f64> {
        Spectrogram::new(values, frames, bins, 0.01).unwrap()
    }

    #[test]
    fn constant_input_gets_floored_std() {
        let s = spec(vec![3.5; 12], 4, 3);
        let st = fit_normalizer([&s]).unwrap();
        assert_eq!(st.mean, vec![3.5; 3]);
        assert_eq!(st.std, vec![STD_FLOOR; 3]);
    }

    #[test]
    fn population_convention() {
        let s = spec(vec![0.0, 2.0], 2, 1);
        let st = fit_normalizer([&s]).unwrap();
        assert!((st.mean[0] - 1.0).abs() < 1e-15);
        assert!((st.std[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pooling_equals_concatenation() {
        let a = spec((0..12).map(|i| (i * 7 % 5) as f64).collect(), 4, 3);
        let b = spec((0..6).map(|i| (i * 3 % 4) as f64 - 1.0).collect(), 2, 3);
        let c = spec((0..9).map(|i| i as f64 * 0.3).collect(), 3, 3);
        let mut all = a.values().to_vec();
        all.extend_from_slice(b.values());
        all.extend_from_slice(c.values());
        let cat = spec(all, 9, 3);
        let pooled = fit_normalizer([&a, &b, &c]).unwrap();
        let direct = fit_normalizer([&cat]).unwrap();
        for f in 0..3 {
            assert!((pooled.mean[f] - direct.mean[f]).abs() < 1e-12);
            assert!((pooled.std[f] - direct.std[f]).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_arithmetic() {
        let s = spec(vec![5.0], 1, 1);
        let st = NormStats { mean: vec![3.0], std: vec![2.0] };
        assert_eq!(normalize(&s, &st).unwrap().values(), &[1.0]);
        let s = spec(vec![1.0, -2.0, 0.5, 9.0], 2, 2);
        assert_eq!(normalize(&s, &NormStats::identity(2)).unwrap(), s);
    }

    #[test]
    fn errors() {
        let empty: Vec<&Spectrogram<f64>> = vec![];
        assert!(fit_normalizer(empty).is_err());
        let a = spec(vec![0.0; 4], 2, 2);
        let b = spec(vec![0.0; 3], 1, 3);
        assert!(fit_normalizer([&a, &b]).is_err());
        assert!(normalize(&a, &NormStats::identity(3)).is_err());
    }
}
