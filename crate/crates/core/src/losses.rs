//! Supervision losses for the discriminator heads and Z-label composition.

use thiserror::Error;

use crate::au::{PROB_EPS, RELEVANT_COUNT};
use crate::space::{AVPoint, C2A2Point};

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: &'static str, got: usize },
    #[error("entry {index} is {value}, outside [eps, 1 - eps]")]
    RangeViolation { index: usize, value: f64 },
    #[error("non-finite prediction")]
    NonFinite,
    #[error("empty batch")]
    EmptyBatch,
}

/// A loss value with its gradient w.r.t. the prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Loss {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Output of the coordinate head: planar or full 3D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordPrediction {
    Planar([f64; 2]),
    Lifted([f64; 3]),
}

impl CoordPrediction {
    pub fn from_slice(values: &[f64]) -> Result<Self, LossError> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(LossError::NonFinite);
        }
        match *values {
            [a, v] => Ok(CoordPrediction::Planar([a, v])),
            [a, v, z] => Ok(CoordPrediction::Lifted([a, v, z])),
            _ => Err(LossError::DimensionMismatch {
                expected: "2 or 3",
                got: values.len(),
            }),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        match self {
            CoordPrediction::Planar(p) => p,
            CoordPrediction::Lifted(p) => p,
        }
    }
}

/// Squared L2 distance between the predicted AV coordinates and the label.
/// 3D predictions are projected first, so the z-gradient is zero.
pub fn av_loss(pred: &CoordPrediction, label: AVPoint) -> Loss {
    let p = pred.as_slice();
    let da = p[0] - label.valence;
    let dv = p[1] - label.arousal;
    let mut grad = vec![2.0 * da, 2.0 * dv];
    if p.len() == 3 {
        grad.push(0.0);
    }
    Loss {
        value: da * da + dv * dv,
        grad,
    }
}

/// `KL(p‖q)` between two Bernoulli distributions.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
}

/// `KL(p‖q) + KL(q‖p)`, which simplifies to `(p − q)(logit p − logit q)`.
pub fn symmetric_bernoulli_kl(p: f64, q: f64) -> f64 {
    (p - q) * (logit(p) - logit(q))
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn check_probs(values: &[f64]) -> Result<(), LossError> {
    if values.len() != RELEVANT_COUNT {
        return Err(LossError::DimensionMismatch {
            expected: "15",
            got: values.len(),
        });
    }
    for (index, &value) in values.iter().enumerate() {
        if !(PROB_EPS..=1.0 - PROB_EPS).contains(&value) {
            return Err(LossError::RangeViolation { index, value });
        }
    }
    Ok(())
}

/// Symmetric KL summed over the relevant units, each an independent
/// Bernoulli. The gradient is taken w.r.t. `pred`:
/// `d/dp = logit p − logit q + (p − q) / (p (1 − p))`.
pub fn au_kl_loss(pred: &[f64], target: &[f64]) -> Result<Loss, LossError> {
    check_probs(pred)?;
    check_probs(target)?;
    let mut value = 0.0;
    let mut grad = Vec::with_capacity(RELEVANT_COUNT);
    for (&p, &q) in pred.iter().zip(target) {
        value += symmetric_bernoulli_kl(p, q);
        grad.push(logit(p) - logit(q) + (p - q) / (p * (1.0 - p)));
    }
    Ok(Loss { value, grad })
}

/// A model estimate of the lift coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZHat(f64);

impl ZHat {
    pub fn new(z: f64) -> Result<Self, LossError> {
        if z.is_finite() {
            Ok(ZHat(z))
        } else {
            Err(LossError::NonFinite)
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `Y = [A, V, Ẑ]`, shrinking `Ẑ` until the point fits in the unit ball.
/// The AV components are never altered.
pub fn compose_z_label(av: AVPoint, zhat: ZHat) -> C2A2Point {
    let planar = av.valence * av.valence + av.arousal * av.arousal;
    let room = (1.0 - planar).max(0.0).sqrt();
    let z = zhat.0.signum() * zhat.0.abs().min(room);
    // signum(0.0) is 1.0, so zero stays zero.
    C2A2Point {
        a: av.valence,
        v: av.arousal,
        z,
    }
}

/// Relative weights of the two added discriminator terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub av: f64,
    pub au: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights { av: 1.0, au: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLoss {
    pub av: f64,
    pub au: f64,
    pub total: f64,
    pub n: usize,
}

/// One supervised sample: predicted coordinates and AU probabilities against
/// the AV label and AU target.
#[derive(Debug, Clone)]
pub struct LossSample<'a> {
    pub coords: CoordPrediction,
    pub au_pred: &'a [f64],
    pub av_label: AVPoint,
    pub au_target: &'a [f64],
}

/// Batch means, accumulated in input order.
pub fn batch_loss(
    samples: &[LossSample<'_>],
    weights: LossWeights,
) -> Result<BatchLoss, LossError> {
    if samples.is_empty() {
        return Err(LossError::EmptyBatch);
    }
    let mut av_sum = 0.0;
    let mut au_sum = 0.0;
    for s in samples {
        av_sum += av_loss(&s.coords, s.av_label).value;
        au_sum += au_kl_loss(s.au_pred, s.au_target)?.value;
    }
    let n = samples.len();
    let av = av_sum / n as f64;
    let au = au_sum / n as f64;
    Ok(BatchLoss {
        av,
        au,
        total: weights.av * av + weights.au * au,
        n,
    })
}
