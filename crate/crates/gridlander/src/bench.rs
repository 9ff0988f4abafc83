//! Latency summary for repeated timed runs.

/// Summary of per-run latencies in milliseconds. Percentiles use the
/// nearest-rank definition, so every reported value is an observed sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub samples: usize,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    /// Inputs per second at the mean latency.
    pub throughput: f64,
}

impl LatencyStats {
    /// `None` for an empty sample set.
    pub fn from_samples(samples_ms: &[f64]) -> Option<Self> {
        if samples_ms.is_empty() {
            return None;
        }
        let mut sorted = samples_ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let rank = |p: f64| sorted[((p * n as f64).ceil() as usize).clamp(1, n) - 1];
        let mean = sorted.iter().sum::<f64>() / n as f64;
        Some(Self {
            samples: n,
            mean_ms: mean.clamp(sorted[0], sorted[n - 1]),
            p50_ms: rank(0.50),
            p95_ms: rank(0.95),
            min_ms: sorted[0],
            max_ms: sorted[n - 1],
            throughput: 1000.0 / mean,
        })
    }
}
