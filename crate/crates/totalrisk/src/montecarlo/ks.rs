//! Kolmogorov–Smirnov distance against the Exp(1) CDF.

use super::sample::SampleBatch;
use super::McError;

/// `D = sup_x |empirical CDF − (1 − e^{−x})|`, evaluated at both edges of
/// every step of the empirical CDF.
pub fn ks_statistic(batch: &SampleBatch) -> Result<f64, McError> {
    if batch.is_empty() {
        return Err(McError::EmptyBatch);
    }
    let mut sorted = batch.values.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let reference = -(-x).exp_m1(); // 1 − e^{−x}
        let below = i as f64 / n;
        let above = (i + 1) as f64 / n;
        d = d.max((reference - below).abs()).max((above - reference).abs());
    }
    Ok(d)
}

/// The 99% asymptotic acceptance band `1.63/√N` for the KS statistic.
pub fn ks_band_99(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}
