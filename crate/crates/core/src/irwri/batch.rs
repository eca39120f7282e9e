use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Angular frequencies inverted jointly with one model.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyBatch {
    omegas: Vec<f64>,
}

impl FrequencyBatch {
    /// `omegas` must be nonempty, finite, positive and strictly increasing.
    pub fn new(omegas: Vec<f64>) -> Result<Self> {
        if omegas.is_empty() {
            return Err(Error::invalid("a frequency batch needs at least one frequency"));
        }
        if omegas.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::invalid(format!("frequencies must be positive and finite: {omegas:?}")));
        }
        if omegas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!("frequencies must be strictly increasing: {omegas:?}")));
        }
        Ok(FrequencyBatch { omegas })
    }

    pub fn from_hz(freqs: &[f64]) -> Result<Self> {
        Self::new(freqs.iter().map(|f| 2.0 * PI * f).collect())
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn hz(&self) -> Vec<f64> {
        self.omegas.iter().map(|w| w / (2.0 * PI)).collect()
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }
}

/// `f_min, f_min + df, ...` up to `f_max` (inclusive, with a small tolerance).
pub fn frequency_grid(f_min: f64, f_max: f64, df: f64) -> Result<Vec<f64>> {
    if !(f_min > 0.0 && f_min.is_finite() && f_max.is_finite() && f_min <= f_max) {
        return Err(Error::invalid(format!("need 0 < f_min <= f_max, got {f_min}, {f_max}")));
    }
    if !(df > 0.0 && df.is_finite()) {
        return Err(Error::invalid(format!("frequency step must be positive, got {df}")));
    }
    let count = ((f_max - f_min) / df + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| f_min + i as f64 * df).collect())
}

/// Overlapping batches: consecutive batches share `overlap` frequencies and the
/// last batch may be shorter.
pub fn build_batches(
    f_min: f64,
    f_max: f64,
    df: f64,
    batch_size: usize,
    overlap: usize,
) -> Result<Vec<FrequencyBatch>> {
    if batch_size == 0 || overlap >= batch_size {
        return Err(Error::invalid(format!(
            "need batch_size >= 1 and overlap < batch_size, got {batch_size}, {overlap}"
        )));
    }
    let freqs = frequency_grid(f_min, f_max, df)?;
    let stride = batch_size - overlap;
    let mut batches = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + batch_size).min(freqs.len());
        batches.push(FrequencyBatch::from_hz(&freqs[start..end])?);
        if end == freqs.len() {
            break;
        }
        start += stride;
    }
    Ok(batches)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hz(b: &[FrequencyBatch]) -> Vec<Vec<i64>> {
        b.iter().map(|b| b.hz().iter().map(|f| f.round() as i64).collect()).collect()
    }

    #[test]
    fn nine_frequencies_in_threes() {
        let b = build_batches(1.0, 9.0, 1.0, 3, 1).unwrap();
        assert_eq!(hz(&b), vec![vec![1, 2, 3], vec![3, 4, 5], vec![5, 6, 7], vec![7, 8, 9]]);
    }

    #[test]
    fn single_frequency_batches() {
        let b = build_batches(2.0, 5.0, 1.0, 1, 0).unwrap();
        assert_eq!(hz(&b), vec![vec![2], vec![3], vec![4], vec![5]]);
    }

    #[test]
    fn remainder_goes_to_a_short_batch() {
        let b = build_batches(1.0, 10.0, 1.0, 3, 1).unwrap();
        assert_eq!(hz(&b), vec![vec![1, 2, 3], vec![3, 4, 5], vec![5, 6, 7], vec![7, 8, 9], vec![9, 10]]);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(build_batches(5.0, 1.0, 1.0, 3, 1).is_err());
        assert!(build_batches(1.0, 5.0, 0.0, 3, 1).is_err());
        assert!(build_batches(1.0, 5.0, 1.0, 3, 3).is_err());
        assert!(build_batches(1.0, 5.0, 1.0, 0, 0).is_err());
        assert!(FrequencyBatch::new(vec![2.0, 1.0]).is_err());
    }

    #[test]
    fn half_hertz_plan() {
        let freqs = frequency_grid(3.0, 15.0, 0.5).unwrap();
        assert_eq!(freqs.len(), 25);
        assert!((freqs[24] - 15.0).abs() < 1e-12);
        let b = build_batches(3.0, 15.0, 0.5, 3, 1).unwrap();
        assert_eq!(b.len(), 12);
        assert!(b.iter().all(|b| b.len() == 3));
    }
}
