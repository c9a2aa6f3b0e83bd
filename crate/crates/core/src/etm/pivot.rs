use alloc::vec::Vec;

use crate::embed::{cosine_slices, norm};
use crate::error::{Error, Result};

use super::trajectory::{EpistemicTrajectory, PivotMarker};

/// Norms below this are treated as no movement.
const STILL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct PivotParams {
    /// A turn needs `cos(d_in, d_out)` strictly below this.
    pub cos_max: f64,
    /// Quantile of all step lengths that the outgoing step must reach.
    pub mag_quantile: f64,
    /// How many timeline cards before the post-turn point are searched for a provocation.
    pub k_attrib: usize,
}

impl Default for PivotParams {
    fn default() -> Self {
        PivotParams {
            cos_max: 0.0,
            mag_quantile: 0.5,
            k_attrib: 2,
        }
    }
}

impl PivotParams {
    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.cos_max) {
            return Err(Error::InvalidParam("cos_max must lie in [-1, 1]"));
        }
        if !(0.0..=1.0).contains(&self.mag_quantile) {
            return Err(Error::InvalidParam("mag_quantile must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Turn {
    pub index: usize,
    pub turn_cosine: f64,
    pub magnitude: f64,
}

/// Linear-interpolation quantile (the common "type 7" definition).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = libm::ceil(pos) as usize;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

/// Interior indices where the path reverses direction with a large outgoing step.
pub fn find_turns<V: AsRef<[f64]>>(points: &[V], params: &PivotParams) -> Vec<Turn> {
    if points.len() < 3 {
        return Vec::new();
    }
    let steps: Vec<Vec<f64>> = points
        .windows(2)
        .map(|w| {
            w[1].as_ref()
                .iter()
                .zip(w[0].as_ref())
                .map(|(b, a)| b - a)
                .collect()
        })
        .collect();
    let lengths: Vec<f64> = steps.iter().map(|s| norm(s)).collect();
    let gate = quantile(&lengths, params.mag_quantile).unwrap_or(0.0);
    let mut turns = Vec::new();
    for i in 1..points.len() - 1 {
        let (d_in, d_out) = (&steps[i - 1], &steps[i]);
        if lengths[i - 1] < STILL || lengths[i] < STILL {
            continue;
        }
        let Ok(c) = cosine_slices(d_in, d_out) else {
            continue;
        };
        if c < params.cos_max && lengths[i] >= gate {
            turns.push(Turn {
                index: i,
                turn_cosine: c,
                magnitude: lengths[i],
            });
        }
    }
    turns
}

/// Pivots of an assembled trajectory, with provocation attribution.
pub fn detect_pivots(traj: &EpistemicTrajectory, params: &PivotParams) -> Vec<PivotMarker> {
    let smoothed: Vec<&[f64]> = traj.points.iter().map(|p| p.e.as_slice()).collect();
    find_turns(&smoothed, params)
        .into_iter()
        .map(|t| {
            let after = traj.points[t.index + 1].timeline_index;
            let attributed_provocation = traj.timeline[..after]
                .iter()
                .rev()
                .take(params.k_attrib)
                .find(|e| !e.kind.is_learner())
                .map(|e| e.card_id.clone());
            PivotMarker {
                index: t.index,
                turn_cosine: t.turn_cosine,
                magnitude: t.magnitude,
                attributed_provocation,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn straight_path_has_no_turns() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.3, i as f64 * -0.1, 1.0]).collect();
        assert!(find_turns(&pts, &PivotParams::default()).is_empty());
    }

    #[test]
    fn right_angle_corner() {
        // 3 steps along dim 0 then 3 steps along dim 1 of a 128-dim space.
        let mut pts = Vec::new();
        for i in 0..4 {
            let mut v = vec![0.0; 128];
            v[0] = i as f64 * 0.5;
            pts.push(v);
        }
        for j in 1..4 {
            let mut v = vec![0.0; 128];
            v[0] = 1.5;
            v[1] = j as f64 * 0.5;
            pts.push(v);
        }
        // Only the corner turns: cos = 0 is not < 0, so loosen to cos_max = 0.5.
        let params = PivotParams {
            cos_max: 0.5,
            ..Default::default()
        };
        let turns = find_turns(&pts, &params);
        assert_eq!(turns.len(), 1);
        assert_eq!(turns[0].index, 3);
        assert!(turns[0].turn_cosine.abs() < 1e-9);
        assert!((turns[0].magnitude - 0.5).abs() < 1e-12);
        // With the default strict threshold a right angle is not a reversal.
        assert!(find_turns(&pts, &PivotParams::default()).is_empty());
    }

    #[test]
    fn zero_steps_never_pivot() {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]];
        assert!(find_turns(&pts, &PivotParams::default()).is_empty());
    }

    #[test]
    fn reversal_pivots() {
        let pts = vec![vec![0.0], vec![1.0], vec![-1.0]];
        let t = find_turns(&pts, &PivotParams::default());
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].turn_cosine, -1.0);
    }

    #[test]
    fn quantile_definition() {
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), Some(2.0));
        assert_eq!(quantile(&[4.0, 1.0, 2.0, 3.0], 0.5), Some(2.5));
        assert_eq!(quantile(&[], 0.5), None);
        assert_eq!(quantile(&[5.0], 0.9), Some(5.0));
    }
}
