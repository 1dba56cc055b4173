//! Budgeted uniform search (ERE) and intensity-ray smoothness (SS).

use nalgebra::Vector3;

use super::oracle::{class_index, ClassifierOracle, CLASS_COUNT};
use super::MetricError;
use crate::emotion::BasicEmotion;
use crate::space::{AxisFrame, C2A2Point, ConditionSampler, SamplingMode};

pub const DEFAULT_ERE_BUDGET: usize = 500;
pub const DEFAULT_ERE_RUNS: usize = 10;

/// Condition space searched by [`ere`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionSpace {
    /// Uniform `(θ, ρ)` on the AV disk.
    TwoD,
    /// Uniform in the unit ball.
    ThreeD,
}

impl ConditionSpace {
    fn sampling_mode(self) -> SamplingMode {
        match self {
            ConditionSpace::TwoD => SamplingMode::Uniform2D,
            ConditionSpace::ThreeD => SamplingMode::UniformBall3D,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn stream_seed(seed: u64, target: usize, run: usize) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(target as u64)) ^ run as u64)
}

/// Mean in index order, shifted by the first element so that constant
/// inputs reproduce their value exactly.
fn ordered_mean(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return f64::NAN;
    };
    first + values.iter().map(|v| v - first).sum::<f64>() / values.len() as f64
}

/// Emotion reconstruction error.
///
/// For every target and run, `budget` conditions are drawn uniformly from
/// `space`; each scores `1 − p(target)` under the oracle and the run keeps
/// its minimum. The result is the mean over runs and targets. Each
/// `(target, run)` pair owns a sample stream derived from `seed`, so a
/// larger budget searches a superset of a smaller one.
#[allow(clippy::too_many_arguments)]
pub fn ere<O: ClassifierOracle + ?Sized>(
    oracle: &O,
    targets: &[BasicEmotion],
    budget: usize,
    runs: usize,
    seed: u64,
    frame: &AxisFrame,
    space: ConditionSpace,
) -> Result<f64, MetricError> {
    if budget == 0 || runs == 0 {
        return Err(MetricError::InvalidArgument(
            "budget and runs must be at least 1".into(),
        ));
    }
    if targets.is_empty() || targets.iter().any(|t| t.is_neutral()) {
        return Err(MetricError::InvalidArgument(
            "targets must be non-empty basic emotions".into(),
        ));
    }
    let mut per_run = Vec::with_capacity(targets.len() * runs);
    for (ti, &target) in targets.iter().enumerate() {
        let class = class_index(target);
        for run in 0..runs {
            let mut sampler = ConditionSampler::new(
                space.sampling_mode(),
                stream_seed(seed, ti, run),
                frame,
                0.0,
            );
            let mut best = f64::INFINITY;
            for _ in 0..budget {
                let y = sampler.next_point();
                let err = 1.0 - oracle.probabilities(&y)[class];
                if err < best {
                    best = err;
                }
            }
            per_run.push(best);
        }
    }
    Ok(ordered_mean(&per_run))
}

/// The six basic axes, the default rays for [`smoothness`].
pub fn default_directions(frame: &AxisFrame) -> Vec<Vector3<f64>> {
    BasicEmotion::AXES
        .iter()
        .map(|&e| frame.axis(e).expect("axis emotion"))
        .collect()
}

/// Smoothness score: along each unit direction the oracle is evaluated at
/// intensities `k / n_steps` for `k = 1..=n_steps`; a ray scores the mean L1
/// distance between consecutive probability vectors and the result averages
/// the rays. Lower is smoother.
pub fn smoothness<O: ClassifierOracle + ?Sized>(
    oracle: &O,
    n_steps: usize,
    directions: &[Vector3<f64>],
) -> Result<f64, MetricError> {
    if n_steps < 2 {
        return Err(MetricError::InvalidArgument(
            "n_steps must be at least 2".into(),
        ));
    }
    if directions.is_empty() {
        return Err(MetricError::InvalidArgument("no directions".into()));
    }
    let mut per_ray = Vec::with_capacity(directions.len());
    for d in directions {
        let norm = d.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(MetricError::InvalidArgument(
                "directions must be non-zero".into(),
            ));
        }
        let unit = d / norm;
        let probs: Vec<[f64; CLASS_COUNT]> = (1..=n_steps)
            .map(|k| {
                let p = unit * (k as f64 / n_steps as f64);
                oracle.probabilities(&C2A2Point {
                    a: p.x,
                    v: p.y,
                    z: p.z,
                })
            })
            .collect();
        let steps: Vec<f64> = probs
            .windows(2)
            .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum())
            .collect();
        per_ray.push(ordered_mean(&steps));
    }
    Ok(ordered_mean(&per_ray))
}
