use std::cmp::Ordering;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EerMethod {
    /// Equal error rate of the ROC convex hull.
    #[default]
    Rocch,
    /// Linear interpolation of the empirical miss / false-alarm crossing.
    Interpolated,
}

impl FromStr for EerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rocch" => Ok(EerMethod::Rocch),
            "interpolated" | "interp" => Ok(EerMethod::Interpolated),
            other => Err(Error::config(format!("unknown EER method '{other}'"))),
        }
    }
}

/// One operating point: (false-alarm rate, miss rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub p_fa: f64,
    pub p_miss: f64,
}

pub fn eer<F: Real>(genuine: &[F], spoof: &[F], method: EerMethod) -> Result<f64> {
    match method {
        EerMethod::Rocch => eer_rocch(genuine, spoof),
        EerMethod::Interpolated => eer_interpolated(genuine, spoof),
    }
}

fn check<F: Real>(genuine: &[F], spoof: &[F]) -> Result<()> {
    if genuine.is_empty() || spoof.is_empty() {
        return Err(Error::SingleClass);
    }
    if genuine.iter().chain(spoof).any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("trial score".into()));
    }
    Ok(())
}

/// Vertices of the ROC convex hull, from (p_fa 1, p_miss 0) to (0, 1).
///
/// Trials are sorted by score with genuine trials first among ties, then
/// pool-adjacent-violators on the ideal 0/1 posteriors merges every run that
/// is not increasing; each surviving block boundary is a hull vertex.
pub fn rocch<F: Real>(genuine: &[F], spoof: &[F]) -> Result<Vec<RocPoint>> {
    check(genuine, spoof)?;
    let mut trials: Vec<(F, bool)> =
        genuine.iter().map(|&s| (s, true)).chain(spoof.iter().map(|&s| (s, false))).collect();
    trials.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(Ordering::Equal).then(b.1.cmp(&a.1)));

    // blocks of (targets, width); merge while the previous mean >= the last
    let mut blocks: Vec<(usize, usize)> = Vec::with_capacity(trials.len());
    for &(_, is_target) in &trials {
        blocks.push((is_target as usize, 1));
        while blocks.len() >= 2 {
            let (t1, w1) = blocks[blocks.len() - 1];
            let (t0, w0) = blocks[blocks.len() - 2];
            if t0 * w1 >= t1 * w0 {
                blocks.pop();
                let last = blocks.len() - 1;
                blocks[last] = (t0 + t1, w0 + w1);
            } else {
                break;
            }
        }
    }

    let n_target = genuine.len() as f64;
    let n_non = spoof.len() as f64;
    let mut points = Vec::with_capacity(blocks.len() + 1);
    let (mut miss, mut fa) = (0usize, spoof.len());
    points.push(RocPoint { p_fa: 1.0, p_miss: 0.0 });
    for &(targets, width) in &blocks {
        miss += targets;
        fa -= width - targets;
        points.push(RocPoint { p_fa: fa as f64 / n_non, p_miss: miss as f64 / n_target });
    }
    Ok(points)
}

/// Largest intersection of a hull segment's supporting line with
/// `p_miss = p_fa`; axis-parallel segments contribute 0.
pub fn eer_rocch<F: Real>(genuine: &[F], spoof: &[F]) -> Result<f64> {
    let hull = rocch(genuine, spoof)?;
    let mut eer = 0.0f64;
    for seg in hull.windows(2) {
        let (x1, y1) = (seg[0].p_fa, seg[0].p_miss);
        let (x2, y2) = (seg[1].p_fa, seg[1].p_miss);
        let (dx, dy) = (x1 - x2, y1 - y2);
        if dx == 0.0 || dy == 0.0 {
            continue;
        }
        eer = eer.max((x1 * y2 - x2 * y1) / (dx - dy));
    }
    Ok(eer)
}

/// Sweeps the decision threshold over every distinct score (accept when
/// `score >= t`) plus `+inf`, and linearly interpolates between the two
/// operating points where `p_miss - p_fa` changes sign.
pub fn eer_interpolated<F: Real>(genuine: &[F], spoof: &[F]) -> Result<f64> {
    check(genuine, spoof)?;
    let sorted = |v: &[F]| {
        let mut v: Vec<f64> = v.iter().map(|s| s.as_f64()).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let g = sorted(genuine);
    let s = sorted(spoof);
    let mut thresholds: Vec<f64> = g.iter().chain(&s).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    thresholds.push(f64::INFINITY);

    let point = |t: f64| {
        let miss = g.partition_point(|&x| x < t) as f64 / g.len() as f64;
        let fa = (s.len() - s.partition_point(|&x| x < t)) as f64 / s.len() as f64;
        (miss, fa)
    };
    let mut prev = point(thresholds[0]);
    for &t in &thresholds[1..] {
        let cur = point(t);
        let d_prev = prev.0 - prev.1;
        let d_cur = cur.0 - cur.1;
        if d_cur >= 0.0 {
            if d_cur == 0.0 {
                return Ok(cur.0);
            }
            let alpha = -d_prev / (d_cur - d_prev);
            return Ok(prev.0 + alpha * (cur.0 - prev.0));
        }
        prev = cur;
    }
    unreachable!("the +inf threshold always has p_miss = 1 > p_fa = 0")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn both(g: &[f64], s: &[f64]) -> (f64, f64) {
        (eer_rocch(g, s).unwrap(), eer_interpolated(g, s).unwrap())
    }

    #[test]
    fn separable() {
        assert_eq!(both(&[2.0, 3.0], &[0.0, 1.0]), (0.0, 0.0));
    }

    #[test]
    fn identical_classes() {
        assert_eq!(both(&[0.0, 1.0], &[0.0, 1.0]), (0.5, 0.5));
    }

    #[test]
    fn interleaved_classes() {
        let (r, i) = both(&[1.0, 3.0], &[0.0, 2.0]);
        assert!((r - 0.25).abs() < 1e-12);
        // the empirical staircase passes through (0.5, 0.5)
        assert!((i - 0.5).abs() < 1e-12);
    }

    #[test]
    fn fully_reversed() {
        let (r, i) = both(&[0.0, 1.0], &[2.0, 3.0]);
        assert_eq!(i, 1.0);
        assert_eq!(r, 0.5);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(eer_rocch::<f64>(&[1.0], &[]), Err(Error::SingleClass)));
        assert!(matches!(eer_interpolated::<f64>(&[], &[1.0]), Err(Error::SingleClass)));
    }

    #[test]
    fn hull_endpoints() {
        let h = rocch(&[1.0f64, 3.0], &[0.0, 2.0]).unwrap();
        assert_eq!(h.first().unwrap(), &RocPoint { p_fa: 1.0, p_miss: 0.0 });
        assert_eq!(h.last().unwrap(), &RocPoint { p_fa: 0.0, p_miss: 1.0 });
    }
}
