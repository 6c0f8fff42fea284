use crate::error::{Error, Result};

/// Nearest-rank percentile: the `ceil(p·n)`-th smallest sample.
pub fn percentile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("percentile must be in [0, 1], got {p}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((p * sorted.len() as f64).ceil() as usize).max(1);
    Ok(sorted[rank - 1])
}

/// Centred moving average. Near the ends the window shrinks to what fits.
pub fn smooth_trace(trace: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Config(format!("smoothing window must be odd and positive, got {window}")));
    }
    let half = window / 2;
    let mut prefix = Vec::with_capacity(trace.len() + 1);
    prefix.push(0.0);
    for v in trace {
        prefix.push(prefix.last().unwrap() + v);
    }
    Ok((0..trace.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(trace.len());
            if hi - lo == 1 {
                trace[i]
            } else {
                (prefix[hi] - prefix[lo]) / (hi - lo) as f64
            }
        })
        .collect())
}
