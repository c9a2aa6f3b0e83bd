use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Centered moving average with an odd window, truncated at the ends.
/// Results are not re-normalized.
pub fn smooth<V: AsRef<[f64]>>(raw: &[V], window: usize) -> Result<Vec<Vec<f64>>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::InvalidParam("smoothing window must be odd and positive"));
    }
    let half = window / 2;
    let n = raw.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(half);
        let hi = (i + half).min(n - 1);
        let dim = raw[i].as_ref().len();
        let mut acc = vec![0.0; dim];
        for v in &raw[lo..=hi] {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    found: v.len(),
                });
            }
            acc.iter_mut().zip(v).for_each(|(a, x)| *a += x);
        }
        let count = (hi - lo + 1) as f64;
        acc.iter_mut().for_each(|a| *a /= count);
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_one_is_identity() {
        let raw = vec![vec![1.0, 2.0], vec![-3.0, 0.5], vec![7.0, 7.0]];
        assert_eq!(smooth(&raw, 1).unwrap(), raw);
    }

    #[test]
    fn constant_is_fixed() {
        let raw = vec![vec![0.25, -0.5]; 6];
        assert_eq!(smooth(&raw, 5).unwrap(), raw);
    }

    #[test]
    fn three_point_window() {
        let raw = vec![vec![3.0, 0.0], vec![0.0, 6.0], vec![0.0, 0.0]];
        let s = smooth(&raw, 3).unwrap();
        // ends average over two, the middle over all three
        assert_eq!(s[0], vec![1.5, 3.0]);
        assert_eq!(s[1], vec![1.0, 2.0]);
        assert_eq!(s[2], vec![0.0, 3.0]);
    }

    #[test]
    fn rejects_even_window() {
        assert!(smooth(&[vec![1.0]], 2).is_err());
        assert!(smooth(&[vec![1.0]], 0).is_err());
    }
}
