use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::time::Timestamp;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct VelocityParams {
    /// Seconds per velocity time unit (60 gives distance per minute).
    pub unit_secs: f64,
    /// Floor on the time step, in seconds.
    pub min_step_secs: f64,
}

impl Default for VelocityParams {
    fn default() -> Self {
        VelocityParams {
            unit_secs: 60.0,
            min_step_secs: 1.0,
        }
    }
}

/// Embedding-space speed between consecutive points; the first entry is 0.
pub fn velocity_series<V: AsRef<[f64]>>(
    embeddings: &[V],
    times: &[Timestamp],
    params: &VelocityParams,
) -> Result<Vec<f64>> {
    if embeddings.len() != times.len() {
        return Err(Error::InvalidParam("one timestamp per embedding is required"));
    }
    if !(params.unit_secs > 0.0 && params.min_step_secs > 0.0) {
        return Err(Error::InvalidParam("velocity time unit and floor must be positive"));
    }
    let floor = params.min_step_secs / params.unit_secs;
    let mut out = Vec::with_capacity(embeddings.len());
    for i in 0..embeddings.len() {
        if i == 0 {
            out.push(0.0);
            continue;
        }
        let (a, b) = (embeddings[i - 1].as_ref(), embeddings[i].as_ref());
        let dist = libm::sqrt(a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>());
        let dt = times[i].seconds_since(&times[i - 1]) / params.unit_secs;
        out.push(dist / dt.max(floor));
    }
    Ok(out)
}
