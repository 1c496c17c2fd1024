use rayon::prelude::*;

use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_ELU_ALPHA: f64 = 1.0;

// ---------------------------------------------------------------------------
// convolution

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// Output keeps the input extent; an odd total pad puts the extra row or
    /// column on the high-index side.
    Same,
    Valid,
}

impl Padding {
    /// (low pad, output extent) along one axis.
    fn resolve(self, input: usize, kernel: usize) -> Option<(usize, usize)> {
        match self {
            Padding::Same if kernel >= 1 => Some(((kernel - 1) / 2, input)),
            Padding::Valid if kernel <= input => Some((0, input - kernel + 1)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    k: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    pad_top: usize,
    pad_left: usize,
}

impl ConvGeom {
    fn new<F: Real>(x: &Tensor<F>, weight: &Tensor<F>, padding: Padding) -> Result<Self> {
        let [n, c, h, w] = x.dims4("conv input")?;
        let [k, wc, kh, kw] = weight.dims4("conv weight")?;
        if wc != c {
            return Err(Error::shape(format!("conv weight expects {wc} channels, input has {c}")));
        }
        let too_big = || Error::shape(format!("kernel {kh}x{kw} larger than padded input {h}x{w}"));
        let (pad_top, oh) = padding.resolve(h, kh).ok_or_else(too_big)?;
        let (pad_left, ow) = padding.resolve(w, kw).ok_or_else(too_big)?;
        Ok(ConvGeom { n, c, h, w, k, kh, kw, oh, ow, pad_top, pad_left })
    }

    /// Output rows touched by kernel row `i`, paired with the input row.
    fn rows(&self, i: usize) -> impl Iterator<Item = (usize, usize)> {
        let (h, pad) = (self.h, self.pad_top);
        (0..self.oh).filter_map(move |o| (o + i).checked_sub(pad).filter(|&r| r < h).map(|r| (o, r)))
    }

    /// Output column range touched by kernel column `j`; input column is `o + j - pad_left`.
    fn cols(&self, j: usize) -> (usize, usize) {
        let lo = self.pad_left.saturating_sub(j);
        let hi = (self.w + self.pad_left).saturating_sub(j).min(self.ow);
        (lo, hi.max(lo))
    }
}

impl ConvGeom {
    /// Per kernel column: (first output column, end, first input column),
    /// or `None` when the column never overlaps the input.
    fn col_spans(&self) -> Vec<Option<(usize, usize, usize)>> {
        (0..self.kw)
            .map(|j| {
                let (lo, hi) = self.cols(j);
                (lo < hi).then(|| (lo, hi, lo + j - self.pad_left))
            })
            .collect()
    }
}

#[inline]
fn axpy<F: Real>(a: F, x: &[F], y: &mut [F]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += a * xv;
    }
}

/// Dot product with four interleaved partial sums. The fixed summation
/// order keeps results reproducible while breaking the serial add chain.
#[inline]
fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: F = ca.remainder().iter().zip(cb.remainder()).map(|(&x, &y)| x * y).sum();
    let mut acc = [F::zero(); 4];
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn sum4<F: Real>(a: &[F]) -> F {
    let c = a.chunks_exact(4);
    let tail: F = c.remainder().iter().copied().sum();
    let mut acc = [F::zero(); 4];
    for x in c {
        for l in 0..4 {
            acc[l] += x[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Stride-1 2-D cross-correlation of `x[N,C,H,W]` with `weight[K,C,kh,kw]`.
pub fn conv2d<F: Real>(
    x: &Tensor<F>,
    weight: &Tensor<F>,
    bias: Option<&Tensor<F>>,
    padding: Padding,
) -> Result<Tensor<F>> {
    let g = ConvGeom::new(x, weight, padding)?;
    if let Some(b) = bias {
        if b.shape() != [g.k] {
            return Err(Error::shape(format!("conv bias {:?} for {} filters", b.shape(), g.k)));
        }
    }
    let in_plane = g.h * g.w;
    let out_plane = g.oh * g.ow;
    let xd = x.data();
    let wd = weight.data();
    let spans = g.col_spans();
    let mut out = vec![F::zero(); g.n * g.k * out_plane];
    out.par_chunks_mut(g.k * out_plane).enumerate().for_each(|(n, y)| {
        let xn = &xd[n * g.c * in_plane..(n + 1) * g.c * in_plane];
        for k in 0..g.k {
            let yk = &mut y[k * out_plane..(k + 1) * out_plane];
            if let Some(b) = bias {
                yk.fill(b.data()[k]);
            }
            for c in 0..g.c {
                let xc = &xn[c * in_plane..(c + 1) * in_plane];
                for i in 0..g.kh {
                    for (o, r) in g.rows(i) {
                        let x_row = &xc[r * g.w..(r + 1) * g.w];
                        let y_row = &mut yk[o * g.ow..(o + 1) * g.ow];
                        let w_row = &wd[((k * g.c + c) * g.kh + i) * g.kw..][..g.kw];
                        for (&wv, span) in w_row.iter().zip(&spans) {
                            if let Some((lo, hi, shift)) = *span {
                                axpy(wv, &x_row[shift..shift + hi - lo], &mut y_row[lo..hi]);
                            }
                        }
                    }
                }
            }
        }
    });
    Ok(Tensor::from_parts(vec![g.n, g.k, g.oh, g.ow], out))
}

#[derive(Debug, Clone)]
pub struct ConvGrads<F> {
    pub input: Tensor<F>,
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
}

/// Gradients of [`conv2d`] with respect to input, weight and bias.
///
/// Per-sample partial weight gradients are reduced in batch order, so the
/// result does not depend on the rayon thread count.
pub fn conv2d_backward<F: Real>(
    x: &Tensor<F>,
    weight: &Tensor<F>,
    padding: Padding,
    grad_out: &Tensor<F>,
) -> Result<ConvGrads<F>> {
    let g = ConvGeom::new(x, weight, padding)?;
    if grad_out.shape() != [g.n, g.k, g.oh, g.ow] {
        return Err(Error::shape(format!("conv upstream gradient {:?}", grad_out.shape())));
    }
    let in_plane = g.h * g.w;
    let out_plane = g.oh * g.ow;
    let xd = x.data();
    let wd = weight.data();
    let dyd = grad_out.data();

    let spans = g.col_spans();
    let mut dx = vec![F::zero(); xd.len()];
    let partials: Vec<(Vec<F>, Vec<F>)> = dx
        .par_chunks_mut(g.c * in_plane)
        .enumerate()
        .map(|(n, dxn)| {
            let xn = &xd[n * g.c * in_plane..(n + 1) * g.c * in_plane];
            let dyn_ = &dyd[n * g.k * out_plane..(n + 1) * g.k * out_plane];
            let mut dw = vec![F::zero(); wd.len()];
            let mut db = vec![F::zero(); g.k];
            for k in 0..g.k {
                let dyk = &dyn_[k * out_plane..(k + 1) * out_plane];
                db[k] = sum4(dyk);
                for c in 0..g.c {
                    let xc = &xn[c * in_plane..(c + 1) * in_plane];
                    let dxc = &mut dxn[c * in_plane..(c + 1) * in_plane];
                    for i in 0..g.kh {
                        for (o, r) in g.rows(i) {
                            let dy_row = &dyk[o * g.ow..(o + 1) * g.ow];
                            let x_row = &xc[r * g.w..(r + 1) * g.w];
                            let dx_row = &mut dxc[r * g.w..(r + 1) * g.w];
                            let base = ((k * g.c + c) * g.kh + i) * g.kw;
                            for (j, span) in spans.iter().enumerate() {
                                if let Some((lo, hi, shift)) = *span {
                                    let dy = &dy_row[lo..hi];
                                    let len = hi - lo;
                                    dw[base + j] += dot(dy, &x_row[shift..shift + len]);
                                    axpy(wd[base + j], dy, &mut dx_row[shift..shift + len]);
                                }
                            }
                        }
                    }
                }
            }
            (dw, db)
        })
        .collect();

    let mut dw = vec![F::zero(); wd.len()];
    let mut db = vec![F::zero(); g.k];
    for (pw, pb) in &partials {
        dw.iter_mut().zip(pw).for_each(|(a, &b)| *a += b);
        db.iter_mut().zip(pb).for_each(|(a, &b)| *a += b);
    }
    Ok(ConvGrads { input: x.with_data(dx), weight: weight.with_data(dw), bias: Tensor::from_parts(vec![g.k], db) })
}

// ---------------------------------------------------------------------------
// max pooling

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolSpec {
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub ceil_mode: bool,
}

impl Default for PoolSpec {
    fn default() -> Self {
        PoolSpec { kernel: (3, 3), stride: (3, 3), ceil_mode: true }
    }
}

/// Output extent of one pooled axis. Ceil mode keeps a trailing partial
/// window as long as it starts inside the input.
pub fn pool_extent(len: usize, kernel: usize, stride: usize, ceil_mode: bool) -> Option<usize> {
    if len == 0 || kernel == 0 || stride == 0 {
        return None;
    }
    if ceil_mode {
        let mut n = if len <= kernel { 1 } else { (len - kernel).div_ceil(stride) + 1 };
        if (n - 1) * stride >= len {
            n -= 1;
        }
        Some(n)
    } else {
        (len >= kernel).then(|| (len - kernel) / stride + 1)
    }
}

/// Flat input index of the winner for every output element.
#[derive(Debug, Clone)]
pub struct PoolIndices {
    input_shape: Vec<usize>,
    argmax: Vec<usize>,
}

pub fn maxpool2d<F: Real>(x: &Tensor<F>, spec: &PoolSpec) -> Result<(Tensor<F>, PoolIndices)> {
    let [n, c, h, w] = x.dims4("pool input")?;
    let (kh, kw) = spec.kernel;
    let (sh, sw) = spec.stride;
    let oh = pool_extent(h, kh, sh, spec.ceil_mode);
    let ow = pool_extent(w, kw, sw, spec.ceil_mode);
    let (oh, ow) = match (oh, ow) {
        (Some(a), Some(b)) if a > 0 && b > 0 => (a, b),
        _ => return Err(Error::shape(format!("cannot pool {h}x{w} with kernel {kh}x{kw}"))),
    };
    let xd = x.data();
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut argmax = Vec::with_capacity(n * c * oh * ow);
    for plane in 0..n * c {
        let base = plane * h * w;
        for oy in 0..oh {
            let r0 = oy * sh;
            let r1 = (r0 + kh).min(h);
            for ox in 0..ow {
                let c0 = ox * sw;
                let c1 = (c0 + kw).min(w);
                let mut best = base + r0 * w + c0;
                for r in r0..r1 {
                    for col in c0..c1 {
                        let idx = base + r * w + col;
                        // strict comparison: first occurrence wins ties
                        if xd[idx] > xd[best] {
                            best = idx;
                        }
                    }
                }
                out.push(xd[best]);
                argmax.push(best);
            }
        }
    }
    Ok((Tensor::from_parts(vec![n, c, oh, ow], out), PoolIndices { input_shape: x.shape().to_vec(), argmax }))
}

pub fn maxpool2d_backward<F: Real>(grad_out: &Tensor<F>, idx: &PoolIndices) -> Result<Tensor<F>> {
    if grad_out.numel() != idx.argmax.len() {
        return Err(Error::shape("pool upstream gradient does not match forward output"));
    }
    let mut dx = vec![F::zero(); idx.input_shape.iter().product()];
    for (&g, &i) in grad_out.data().iter().zip(&idx.argmax) {
        dx[i] += g;
    }
    Ok(Tensor::from_parts(idx.input_shape.clone(), dx))
}

// ---------------------------------------------------------------------------
// max-feature-map

/// `true` where the second half of the pair won.
#[derive(Debug, Clone)]
pub struct MfmWinners {
    input_shape: Vec<usize>,
    second: Vec<bool>,
}

/// (outer, 2k, inner) decomposition of the split axis, which is axis 1 for
/// both `[N, C, H, W]` and `[N, D]` inputs.
fn mfm_layout(shape: &[usize]) -> Result<(usize, usize, usize)> {
    if shape.len() != 2 && shape.len() != 4 {
        return Err(Error::shape(format!("mfm needs a rank 2 or 4 input, got {shape:?}")));
    }
    let pair = shape[1];
    if pair % 2 != 0 {
        return Err(Error::shape(format!("mfm needs an even extent, got {pair}")));
    }
    Ok((shape[0], pair / 2, shape[2..].iter().product()))
}

/// Max-feature-map: pairs unit `i` with unit `i + k` along axis 1 and keeps
/// the larger, halving that axis.
pub fn mfm<F: Real>(x: &Tensor<F>) -> Result<(Tensor<F>, MfmWinners)> {
    let (outer, half, inner) = mfm_layout(x.shape())?;
    let xd = x.data();
    let mut out = Vec::with_capacity(xd.len() / 2);
    let mut second = Vec::with_capacity(xd.len() / 2);
    for o in 0..outer {
        let block = &xd[o * 2 * half * inner..(o + 1) * 2 * half * inner];
        let (a, b) = block.split_at(half * inner);
        for (&p, &q) in a.iter().zip(b) {
            let take_second = q > p;
            out.push(if take_second { q } else { p });
            second.push(take_second);
        }
    }
    let mut shape = x.shape().to_vec();
    shape[1] = half;
    Ok((Tensor::from_parts(shape, out), MfmWinners { input_shape: x.shape().to_vec(), second }))
}

pub fn mfm_backward<F: Real>(grad_out: &Tensor<F>, winners: &MfmWinners) -> Result<Tensor<F>> {
    if grad_out.numel() != winners.second.len() {
        return Err(Error::shape("mfm upstream gradient does not match forward output"));
    }
    let (outer, half, inner) = mfm_layout(&winners.input_shape)?;
    let span = half * inner;
    let mut dx = vec![F::zero(); 2 * grad_out.numel()];
    for o in 0..outer {
        for i in 0..span {
            let src = o * span + i;
            let dst = o * 2 * span + i + if winners.second[src] { span } else { 0 };
            dx[dst] = grad_out.data()[src];
        }
    }
    Ok(Tensor::from_parts(winners.input_shape.clone(), dx))
}

// ---------------------------------------------------------------------------
// pointwise activations

pub fn relu<F: Real>(x: &Tensor<F>) -> Tensor<F> {
    x.map(|v| if v > F::zero() { v } else { F::zero() })
}

/// Subgradient 0 at the origin.
pub fn relu_backward<F: Real>(x: &Tensor<F>, grad_out: &Tensor<F>) -> Tensor<F> {
    let data = x.data().iter().zip(grad_out.data()).map(|(&v, &g)| if v > F::zero() { g } else { F::zero() }).collect();
    x.with_data(data)
}

pub fn elu<F: Real>(x: &Tensor<F>, alpha: F) -> Tensor<F> {
    x.map(|v| if v > F::zero() { v } else { alpha * v.exp_m1() })
}

pub fn elu_backward<F: Real>(x: &Tensor<F>, alpha: F, grad_out: &Tensor<F>) -> Tensor<F> {
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > F::zero() { g } else { g * alpha * v.exp() })
        .collect();
    x.with_data(data)
}

// ---------------------------------------------------------------------------
// fully connected

/// `x[N,D] · weight[D,M] (+ bias[M])`.
pub fn linear<F: Real>(x: &Tensor<F>, weight: &Tensor<F>, bias: Option<&Tensor<F>>) -> Result<Tensor<F>> {
    let [n, d] = x.dims2("linear input")?;
    let [wd, m] = weight.dims2("linear weight")?;
    if wd != d {
        return Err(Error::shape(format!("linear weight has {wd} inputs, got {d}")));
    }
    if let Some(b) = bias {
        if b.shape() != [m] {
            return Err(Error::shape(format!("linear bias {:?} for width {m}", b.shape())));
        }
    }
    let (xd, w) = (x.data(), weight.data());
    let mut out = Vec::with_capacity(n * m);
    for row in xd.chunks_exact(d) {
        let mut y = match bias {
            Some(b) => b.data().to_vec(),
            None => vec![F::zero(); m],
        };
        for (&xv, w_row) in row.iter().zip(w.chunks_exact(m)) {
            for (yv, &wv) in y.iter_mut().zip(w_row) {
                *yv += xv * wv;
            }
        }
        out.extend(y);
    }
    Ok(Tensor::from_parts(vec![n, m], out))
}

#[derive(Debug, Clone)]
pub struct LinearGrads<F> {
    pub input: Tensor<F>,
    pub weight: Tensor<F>,
    pub bias: Tensor<F>,
}

pub fn linear_backward<F: Real>(x: &Tensor<F>, weight: &Tensor<F>, grad_out: &Tensor<F>) -> Result<LinearGrads<F>> {
    let [n, d] = x.dims2("linear input")?;
    let [_, m] = weight.dims2("linear weight")?;
    if grad_out.shape() != [n, m] {
        return Err(Error::shape(format!("linear upstream gradient {:?}", grad_out.shape())));
    }
    let (xd, w, dy) = (x.data(), weight.data(), grad_out.data());
    let mut dx = vec![F::zero(); n * d];
    let mut dw = vec![F::zero(); d * m];
    let mut db = vec![F::zero(); m];
    for s in 0..n {
        let dy_row = &dy[s * m..(s + 1) * m];
        let x_row = &xd[s * d..(s + 1) * d];
        for (b, &g) in db.iter_mut().zip(dy_row) {
            *b += g;
        }
        for i in 0..d {
            let w_row = &w[i * m..(i + 1) * m];
            dx[s * d + i] = w_row.iter().zip(dy_row).map(|(&a, &b)| a * b).sum();
            let dw_row = &mut dw[i * m..(i + 1) * m];
            for (acc, &g) in dw_row.iter_mut().zip(dy_row) {
                *acc += x_row[i] * g;
            }
        }
    }
    Ok(LinearGrads { input: x.with_data(dx), weight: weight.with_data(dw), bias: Tensor::from_parts(vec![m], db) })
}

// ---------------------------------------------------------------------------
// dropout

/// Per-element multiplier applied in the forward pass (0 or `1/(1-rate)`);
/// `None` when the forward pass was the identity.
#[derive(Debug, Clone)]
pub struct DropoutMask<F>(Option<Vec<F>>);

/// Inverted dropout. Identity when `training` is false or `rate` is zero.
pub fn dropout<F: Real>(
    x: &Tensor<F>,
    rate: f64,
    rng: &mut impl rand::Rng,
    training: bool,
) -> Result<(Tensor<F>, DropoutMask<F>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!("dropout rate {rate} outside [0, 1)")));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), DropoutMask(None)));
    }
    let keep = F::of(1.0 / (1.0 - rate));
    let mask: Vec<F> = (0..x.numel()).map(|_| if rng.random::<f64>() < rate { F::zero() } else { keep }).collect();
    let data = x.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
    Ok((x.with_data(data), DropoutMask(Some(mask))))
}

pub fn dropout_backward<F: Real>(grad_out: &Tensor<F>, mask: &DropoutMask<F>) -> Tensor<F> {
    match &mask.0 {
        None => grad_out.clone(),
        Some(m) => grad_out.with_data(grad_out.data().iter().zip(m).map(|(&g, &k)| g * k).collect()),
    }
}

// ---------------------------------------------------------------------------
// loss

/// Mean over the batch of `-ln softmax(logits)[label]`, with its gradient
/// `(softmax - onehot) / N`. Per-sample terms are accumulated in `f64`.
pub fn softmax_cross_entropy<F: Real>(logits: &Tensor<F>, labels: &[usize]) -> Result<(F, Tensor<F>)> {
    let [n, classes] = logits.dims2("logits")?;
    if labels.len() != n {
        return Err(Error::shape(format!("{} labels for {n} logit rows", labels.len())));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::config(format!("label {bad} out of range for {classes} classes")));
    }
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0f64;
    let mut grad = Vec::with_capacity(n * classes);
    for (row, &label) in logits.data().chunks_exact(classes).zip(labels) {
        let row: Vec<f64> = row.iter().map(|v| v.as_f64()).collect();
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
        let log_z = max + sum.ln();
        total += log_z - row[label];
        for (c, &z) in row.iter().enumerate() {
            let p = (z - log_z).exp();
            let target = if c == label { 1.0 } else { 0.0 };
            grad.push(F::of((p - target) * inv_n));
        }
    }
    let loss = total * inv_n;
    if !loss.is_finite() {
        return Err(Error::NonFinite("cross-entropy loss".into()));
    }
    Ok((F::of(loss), Tensor::from_parts(vec![n, classes], grad)))
}
