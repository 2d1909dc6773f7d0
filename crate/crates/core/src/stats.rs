//! Cross-run summaries.

use crate::error::{Error, Result};

pub fn mean(samples: &[f64]) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    Some(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(samples: &[f64]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let m = mean(samples)?;
    let ss: f64 = samples.iter().map(|x| (x - m) * (x - m)).sum();
    Some((ss / (samples.len() - 1) as f64).sqrt())
}

/// Mean and 95% half-width under the normal approximation, 1.96 standard errors.
pub fn ci95(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "ci95 needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let m = mean(samples).unwrap();
    let s = sample_std(samples).unwrap();
    Ok((m, 1.96 * s / (samples.len() as f64).sqrt()))
}
