//! Classifier oracles: maps from a condition to 7-class probabilities.

use crate::emotion::BasicEmotion;
use crate::space::{AxisFrame, C2A2Point};

pub const CLASS_COUNT: usize = 7;

/// Class order of oracle outputs: Neutral, then the six basics in table order.
pub const CLASSES: [BasicEmotion; CLASS_COUNT] = [
    BasicEmotion::Neutral,
    BasicEmotion::Happy,
    BasicEmotion::Sad,
    BasicEmotion::Fearful,
    BasicEmotion::Angry,
    BasicEmotion::Surprised,
    BasicEmotion::Disgusted,
];

pub fn class_index(e: BasicEmotion) -> usize {
    CLASSES
        .iter()
        .position(|&c| c == e)
        .expect("every basic emotion is a class")
}

/// Stand-in for an emotion classifier evaluated on the image generated from
/// a condition. Outputs must be non-negative and sum to one.
pub trait ClassifierOracle {
    fn probabilities(&self, y: &C2A2Point) -> [f64; CLASS_COUNT];
}

impl<F> ClassifierOracle for F
where
    F: Fn(&C2A2Point) -> [f64; CLASS_COUNT],
{
    fn probabilities(&self, y: &C2A2Point) -> [f64; CLASS_COUNT] {
        self(y)
    }
}

/// Softmax over `sharpness · cos(y, axis_e)` for each basic axis and
/// `sharpness · (1 − ‖y‖) / (1 − neutral_rho)` for Neutral.
///
/// On an axis the two logits tie at `‖y‖ = neutral_rho`. The basic logits
/// only depend on direction, so along a ray every basic probability rises
/// monotonically while the neutral one falls.
#[derive(Debug, Clone)]
pub struct SyntheticOracle {
    pub frame: AxisFrame,
    pub sharpness: f64,
}

impl SyntheticOracle {
    pub fn new(frame: AxisFrame, sharpness: f64) -> Self {
        assert!(
            sharpness > 0.0 && sharpness.is_finite(),
            "sharpness must be positive"
        );
        SyntheticOracle { frame, sharpness }
    }
}

impl ClassifierOracle for SyntheticOracle {
    fn probabilities(&self, y: &C2A2Point) -> [f64; CLASS_COUNT] {
        let v = y.to_vector();
        let norm = v.norm();
        let mut logits = [0.0; CLASS_COUNT];
        for (slot, class) in logits.iter_mut().zip(CLASSES) {
            *slot = match self.frame.axis(class) {
                Some(axis) if norm > 0.0 => self.sharpness * v.dot(&axis) / norm,
                Some(_) => 0.0,
                None => self.sharpness * (1.0 - norm) / (1.0 - self.frame.neutral_rho()),
            };
        }
        softmax(&logits)
    }
}

pub fn softmax(logits: &[f64; CLASS_COUNT]) -> [f64; CLASS_COUNT] {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps = logits.map(|l| (l - max).exp());
    let total: f64 = exps.iter().sum();
    exps.map(|e| e / total)
}
