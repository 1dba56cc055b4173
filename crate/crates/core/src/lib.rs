//! A unified three-dimensional emotion space.
//!
//! Basic emotions become unit axes: four in the arousal-valence plane, fear
//! and sadness lifted ±60° out of it. Compound emotions are sums of their
//! constituents' axes, and every region of the space maps to a set of
//! facial action units. On top of the geometry the crate provides the
//! pseudo-labelling pipeline, the supervision losses used to learn the
//! lift coordinate, a number encoder for conditioning text-to-image models,
//! and the FED / ERE / SS evaluation metrics.

pub mod au;
pub mod emotion;
pub mod encoder;
pub mod fmt;
pub mod losses;
pub mod metrics;
pub mod pipeline;
pub mod space;

pub use emotion::{BasicEmotion, Category, CompoundEmotion, EmotionModel};
pub use space::{AVPoint, AxisFrame, C2A2Point, PolarCondition};
