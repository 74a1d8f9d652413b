use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("no (real, estimated) pairs to score")]
    EmptyInput,
    #[error("mean real cost is zero")]
    ZeroMeanReal,
}

fn means(pairs: &[(f64, f64)]) -> Result<(f64, f64), MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let n = pairs.len() as f64;
    let (r, e) = pairs.iter().fold((0.0, 0.0), |(r, e), (x, y)| (r + x, e + y));
    Ok((r / n, e / n))
}

/// Mean of |real − estimated| over `(real, estimated)` pairs.
pub fn avg_abs_diff(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(pairs.iter().map(|(r, e)| (r - e).abs()).sum::<f64>() / pairs.len() as f64)
}

/// Signed gap between the mean estimate and the mean real cost, as a
/// percentage of the mean real cost. Positive when estimates run high.
pub fn pct_avg_diff(pairs: &[(f64, f64)]) -> Result<f64, MetricError> {
    let (real, est) = means(pairs)?;
    if real == 0.0 {
        return Err(MetricError::ZeroMeanReal);
    }
    Ok(100.0 * (est - real) / real)
}
