//! The lifted 3D emotion space.
//!
//! Coordinates are `(a, v, z)`: `a` is valence (x), `v` is arousal (y) and
//! `z` is the learned lift. Four basic emotions sit on the unit circle of the
//! AV plane at their calibrated azimuths. Fear is lifted 60° above the plane
//! and sadness 60° below it, both keeping their planar azimuth. Azimuth zero
//! is positive valence, increasing counter-clockwise towards positive arousal.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_3, TAU};
use std::io::{Read, Write};

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::emotion::{BasicEmotion, Category, CompoundEmotion, EmotionModel};
use crate::fmt::g17;

/// Elevation of the lifted fear/sad axes above (below) the AV plane.
pub const LIFT_ANGLE: f64 = FRAC_PI_3;

/// Slack on the unit-ball constraint.
pub const BALL_TOLERANCE: f64 = 1e-9;

pub const DEFAULT_NEUTRAL_RHO: f64 = 0.1;

/// Half-angle of the sampling cone around emotion directions, degrees.
pub const DEFAULT_JITTER_DEG: f64 = 10.0;

pub const MAX_JITTER_DEG: f64 = 30.0;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("no calibration samples for {0}")]
    MissingCategory(BasicEmotion),
    #[error("coordinate {value} outside [-1, 1] ({what})")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("point ({a}, {v}, {z}) lies outside the unit ball")]
    OutOfBall { a: f64, v: f64, z: f64 },
    #[error("constituent axes of {0} cancel out")]
    DegenerateSum(CompoundEmotion),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A point of the arousal-valence plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AVPoint {
    pub valence: f64,
    pub arousal: f64,
}

impl AVPoint {
    pub fn new(valence: f64, arousal: f64) -> Result<Self, SpaceError> {
        let p = AVPoint { valence, arousal };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        for (what, value) in [("valence", self.valence), ("arousal", self.arousal)] {
            if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
                return Err(SpaceError::OutOfRange { what, value });
            }
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.valence.hypot(self.arousal)
    }

    /// Azimuth in `[0, 2π)`.
    pub fn azimuth(&self) -> f64 {
        wrap_angle(self.arousal.atan2(self.valence))
    }
}

/// Polar parameterisation of the AV plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarCondition {
    pub theta: f64,
    pub rho: f64,
}

impl PolarCondition {
    pub fn new(theta: f64, rho: f64) -> Result<Self, SpaceError> {
        if !(0.0..TAU).contains(&theta) {
            return Err(SpaceError::InvalidArgument(format!(
                "theta {theta} outside [0, 2π)"
            )));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(SpaceError::InvalidArgument(format!(
                "rho {rho} outside [0, 1]"
            )));
        }
        Ok(PolarCondition { theta, rho })
    }
}

/// An emotion condition `Y = [A, V, Z]` inside the unit ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct C2A2Point {
    /// Valence coordinate.
    pub a: f64,
    /// Arousal coordinate.
    pub v: f64,
    pub z: f64,
}

impl C2A2Point {
    pub const ORIGIN: C2A2Point = C2A2Point {
        a: 0.0,
        v: 0.0,
        z: 0.0,
    };

    pub fn new(a: f64, v: f64, z: f64) -> Result<Self, SpaceError> {
        let y = C2A2Point { a, v, z };
        y.validate()?;
        Ok(y)
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let finite = self.a.is_finite() && self.v.is_finite() && self.z.is_finite();
        if !finite || self.norm_squared() > 1.0 + BALL_TOLERANCE {
            return Err(SpaceError::OutOfBall {
                a: self.a,
                v: self.v,
                z: self.z,
            });
        }
        Ok(())
    }

    /// Embeds an AV point in the plane `z = 0`.
    pub fn from_av(p: AVPoint) -> Self {
        C2A2Point {
            a: p.valence,
            v: p.arousal,
            z: 0.0,
        }
    }

    pub fn from_vector(v: &Vector3<f64>) -> Result<Self, SpaceError> {
        C2A2Point::new(v.x, v.y, v.z)
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.a, self.v, self.z)
    }

    pub fn norm_squared(&self) -> f64 {
        self.a * self.a + self.v * self.v + self.z * self.z
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }
}

pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs.
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Unit direction vectors of the six basic emotions plus the neutral radius.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisFrame {
    axes: [Vector3<f64>; 6],
    neutral_rho: f64,
}

impl AxisFrame {
    /// Builds a frame from planar azimuths (radians) given in
    /// [`BasicEmotion::AXES`] order.
    pub fn from_azimuths(azimuths: [f64; 6], neutral_rho: f64) -> Result<Self, SpaceError> {
        check_neutral_rho(neutral_rho)?;
        let mut axes = [Vector3::zeros(); 6];
        for (slot, (emotion, &phi)) in axes
            .iter_mut()
            .zip(BasicEmotion::AXES.iter().zip(&azimuths))
        {
            if !phi.is_finite() {
                return Err(SpaceError::InvalidArgument(format!(
                    "non-finite azimuth for {emotion}"
                )));
            }
            *slot = lifted_axis(phi, emotion.lift_sign());
        }
        Ok(AxisFrame { axes, neutral_rho })
    }

    /// A frame with typical circumplex placements: happy at 15°, surprised
    /// at 70°, fearful at 115°, angry at 140°, disgusted at 165° and sad at
    /// 220°. Used when no calibrated frame is supplied.
    pub fn reference() -> Self {
        let deg = [15.0_f64, 220.0, 115.0, 140.0, 70.0, 165.0];
        AxisFrame::from_azimuths(deg.map(f64::to_radians), DEFAULT_NEUTRAL_RHO)
            .expect("reference azimuths are valid")
    }

    /// Unit axis of `emotion`; `None` for Neutral.
    pub fn axis(&self, emotion: BasicEmotion) -> Option<Vector3<f64>> {
        emotion.axis_index().map(|i| self.axes[i])
    }

    /// Planar azimuth of `emotion` in `[0, 2π)`; `None` for Neutral.
    pub fn azimuth(&self, emotion: BasicEmotion) -> Option<f64> {
        self.axis(emotion).map(|d| wrap_angle(d.y.atan2(d.x)))
    }

    pub fn neutral_rho(&self) -> f64 {
        self.neutral_rho
    }

    pub fn with_neutral_rho(mut self, neutral_rho: f64) -> Result<Self, SpaceError> {
        check_neutral_rho(neutral_rho)?;
        self.neutral_rho = neutral_rho;
        Ok(self)
    }

    /// The candidate directions used for nearest-emotion queries: the six
    /// basic axes, then every 3D-representable compound, in table order.
    /// Compounds whose axes cancel are left out.
    pub fn candidate_directions(&self) -> Vec<(Category, Vector3<f64>)> {
        let mut out: Vec<(Category, Vector3<f64>)> = BasicEmotion::AXES
            .iter()
            .zip(&self.axes)
            .map(|(&e, &d)| (Category::Basic(e), d))
            .collect();
        for c in CompoundEmotion::representable(EmotionModel::ThreeD) {
            if let Ok(d) = compound_direction(c, self) {
                out.push((Category::Compound(c), d));
            }
        }
        out
    }

    /// Serialises to `{"axes": {...}, "neutral_rho": r}` with every float
    /// printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        let mut s = String::from("{\n  \"axes\": {\n");
        for (i, (e, d)) in BasicEmotion::AXES.iter().zip(&self.axes).enumerate() {
            let sep = if i + 1 < self.axes.len() { "," } else { "" };
            s.push_str(&format!(
                "    \"{}\": [{}, {}, {}]{}\n",
                e.name(),
                g17(d.x),
                g17(d.y),
                g17(d.z),
                sep
            ));
        }
        s.push_str(&format!(
            "  }},\n  \"neutral_rho\": {}\n}}\n",
            g17(self.neutral_rho)
        ));
        s
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<(), SpaceError> {
        w.write_all(self.to_json().as_bytes())?;
        Ok(())
    }

    /// Parses and validates a frame document.
    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        #[derive(Deserialize)]
        struct Doc {
            axes: BTreeMap<String, [f64; 3]>,
            neutral_rho: f64,
        }
        let doc: Doc =
            serde_json::from_str(text).map_err(|e| SpaceError::MalformedFrame(e.to_string()))?;
        check_neutral_rho(doc.neutral_rho)?;
        let mut axes = [Vector3::zeros(); 6];
        for (key, value) in &doc.axes {
            let emotion: BasicEmotion = key
                .parse()
                .map_err(|_| SpaceError::MalformedFrame(format!("unknown axis `{key}`")))?;
            let idx = emotion
                .axis_index()
                .ok_or_else(|| SpaceError::MalformedFrame("neutral has no axis".into()))?;
            axes[idx] = Vector3::from(*value);
        }
        for (emotion, axis) in BasicEmotion::AXES.iter().zip(&axes) {
            if !doc
                .axes
                .keys()
                .any(|k| k.parse::<BasicEmotion>().ok() == Some(*emotion))
            {
                return Err(SpaceError::MissingCategory(*emotion));
            }
            check_axis(*emotion, axis)?;
        }
        Ok(AxisFrame {
            axes,
            neutral_rho: doc.neutral_rho,
        })
    }

    pub fn read_json<R: Read>(mut r: R) -> Result<Self, SpaceError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        Self::from_json(&text)
    }
}

fn check_neutral_rho(neutral_rho: f64) -> Result<(), SpaceError> {
    if neutral_rho > 0.0 && neutral_rho < 0.5 {
        Ok(())
    } else {
        Err(SpaceError::InvalidArgument(format!(
            "neutral_rho {neutral_rho} outside (0, 0.5)"
        )))
    }
}

fn check_axis(emotion: BasicEmotion, axis: &Vector3<f64>) -> Result<(), SpaceError> {
    let bad = |msg: &str| Err(SpaceError::MalformedFrame(format!("{emotion} axis {msg}")));
    if !axis.iter().all(|c| c.is_finite()) {
        return bad("is not finite");
    }
    if (axis.norm() - 1.0).abs() > 1e-9 {
        return bad("is not unit length");
    }
    let expected_z = emotion.lift_sign() * LIFT_ANGLE.sin();
    if (axis.z - expected_z).abs() > 1e-12 {
        return bad("has the wrong elevation");
    }
    Ok(())
}

fn lifted_axis(azimuth: f64, lift_sign: f64) -> Vector3<f64> {
    if lift_sign == 0.0 {
        Vector3::new(azimuth.cos(), azimuth.sin(), 0.0)
    } else {
        let planar = LIFT_ANGLE.cos();
        Vector3::new(
            planar * azimuth.cos(),
            planar * azimuth.sin(),
            lift_sign * LIFT_ANGLE.sin(),
        )
    }
}

/// Calibrates the axis frame from labelled AV samples.
///
/// Each basic emotion's azimuth is the direction of the mean of its
/// samples. Neutral samples are ignored.
pub fn calibrate_axes(
    samples: &[(BasicEmotion, AVPoint)],
    neutral_rho: f64,
) -> Result<AxisFrame, SpaceError> {
    let mut sums = [(0.0_f64, 0.0_f64, 0_usize); 6];
    for (emotion, p) in samples {
        p.validate()?;
        if let Some(i) = emotion.axis_index() {
            sums[i].0 += p.valence;
            sums[i].1 += p.arousal;
            sums[i].2 += 1;
        }
    }
    let mut azimuths = [0.0; 6];
    for (i, (sv, sa, n)) in sums.into_iter().enumerate() {
        if n == 0 {
            return Err(SpaceError::MissingCategory(BasicEmotion::AXES[i]));
        }
        let n = n as f64;
        azimuths[i] = wrap_angle((sa / n).atan2(sv / n));
    }
    AxisFrame::from_azimuths(azimuths, neutral_rho)
}

pub fn polar_to_av(p: PolarCondition) -> AVPoint {
    AVPoint {
        valence: p.rho * p.theta.cos(),
        arousal: p.rho * p.theta.sin(),
    }
}

/// Orthogonal projection onto the AV plane.
pub fn project_to_av(y: &C2A2Point) -> AVPoint {
    AVPoint {
        valence: y.a,
        arousal: y.v,
    }
}

/// Normalised vector sum of the constituent axes.
pub fn compound_direction(
    c: CompoundEmotion,
    frame: &AxisFrame,
) -> Result<Vector3<f64>, SpaceError> {
    let sum: Vector3<f64> = c
        .constituents()
        .iter()
        .map(|&e| {
            frame
                .axis(e)
                .expect("compound constituents are never neutral")
        })
        .sum();
    let norm = sum.norm();
    if norm < 1e-9 {
        return Err(SpaceError::DegenerateSum(c));
    }
    Ok(sum / norm)
}

/// Argmax of cosine similarity over basic axes and representable compound
/// directions. Points inside the neutral radius map to Neutral. Ties keep
/// the earlier candidate (basics first, then compounds in table order).
pub fn nearest_emotion(y: &C2A2Point, frame: &AxisFrame) -> (Category, f64) {
    let intensity = y.norm();
    if intensity < frame.neutral_rho {
        return (Category::NEUTRAL, intensity);
    }
    let category = argmax_cosine(&y.to_vector(), &frame.candidate_directions());
    (category, intensity)
}

pub(crate) fn argmax_cosine(y: &Vector3<f64>, candidates: &[(Category, Vector3<f64>)]) -> Category {
    let norm = y.norm();
    let mut best = (Category::NEUTRAL, f64::NEG_INFINITY);
    for &(category, d) in candidates {
        let cos = y.dot(&d) / norm;
        if cos > best.1 {
            best = (category, cos);
        }
    }
    best.0
}

pub fn is_representable(c: CompoundEmotion, model: EmotionModel) -> bool {
    c.is_representable(model)
}

/// How [`sample_conditions`] draws points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// `θ ~ U[0, 2π)`, `ρ ~ U[0, 1]`, `z = 0`.
    Uniform2D,
    /// A uniformly chosen basic or representable compound direction,
    /// perturbed inside a cone, scaled by `ρ ~ U[0, 1]`.
    AxisProximity3D,
    /// Uniform in the unit ball (rejection from the enclosing cube).
    UniformBall3D,
}

/// Draws `n` conditions. The output is a pure function of the arguments,
/// and the first `k` samples do not depend on `n`.
pub fn sample_conditions(
    mode: SamplingMode,
    n: usize,
    seed: u64,
    frame: &AxisFrame,
    jitter_deg: f64,
) -> Result<Vec<C2A2Point>, SpaceError> {
    if !(0.0..=MAX_JITTER_DEG).contains(&jitter_deg) {
        return Err(SpaceError::InvalidArgument(format!(
            "jitter {jitter_deg}° outside [0, 30]"
        )));
    }
    let mut sampler = ConditionSampler::new(mode, seed, frame, jitter_deg);
    Ok((0..n).map(|_| sampler.next_point()).collect())
}

/// Streaming form of [`sample_conditions`].
pub struct ConditionSampler {
    mode: SamplingMode,
    rng: ChaCha8Rng,
    directions: Vec<Vector3<f64>>,
    cos_jitter: f64,
}

impl ConditionSampler {
    pub fn new(mode: SamplingMode, seed: u64, frame: &AxisFrame, jitter_deg: f64) -> Self {
        let directions = match mode {
            SamplingMode::AxisProximity3D => frame
                .candidate_directions()
                .into_iter()
                .map(|(_, d)| d)
                .collect(),
            _ => Vec::new(),
        };
        ConditionSampler {
            mode,
            rng: ChaCha8Rng::seed_from_u64(seed),
            directions,
            cos_jitter: jitter_deg.to_radians().cos(),
        }
    }

    pub fn next_point(&mut self) -> C2A2Point {
        match self.mode {
            SamplingMode::Uniform2D => {
                let theta = self.rng.random::<f64>() * TAU;
                let rho = self.rng.random::<f64>();
                C2A2Point {
                    a: rho * theta.cos(),
                    v: rho * theta.sin(),
                    z: 0.0,
                }
            }
            SamplingMode::AxisProximity3D => {
                let idx = self.rng.random_range(0..self.directions.len());
                let d = perturb_in_cone(&self.directions[idx], self.cos_jitter, &mut self.rng);
                let rho = self.rng.random::<f64>();
                let p = d * rho;
                C2A2Point {
                    a: p.x,
                    v: p.y,
                    z: p.z,
                }
            }
            SamplingMode::UniformBall3D => loop {
                let p = Vector3::new(
                    self.rng.random_range(-1.0..=1.0),
                    self.rng.random_range(-1.0..=1.0),
                    self.rng.random_range(-1.0..=1.0),
                );
                if p.norm_squared() <= 1.0 {
                    break C2A2Point {
                        a: p.x,
                        v: p.y,
                        z: p.z,
                    };
                }
            },
        }
    }
}

/// Uniform direction on the spherical cap of `axis` with `cos(angle) ≥ cos_max`.
fn perturb_in_cone<R: Rng>(axis: &Vector3<f64>, cos_max: f64, rng: &mut R) -> Vector3<f64> {
    let cos_t = 1.0 - rng.random::<f64>() * (1.0 - cos_max);
    let phi = rng.random::<f64>() * TAU;
    if cos_t >= 1.0 {
        return *axis;
    }
    let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
    let helper = if axis.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let u = axis.cross(&helper).normalize();
    let w = axis.cross(&u);
    (axis * cos_t + (u * phi.cos() + w * phi.sin()) * sin_t).normalize()
}

/// `n_theta` evenly spaced azimuths on the circle of radius `radius` at
/// height `z_level`, starting at `θ = 0`.
pub fn circle_scan(
    z_level: f64,
    n_theta: usize,
    radius: f64,
) -> Result<Vec<(f64, C2A2Point)>, SpaceError> {
    if n_theta == 0 {
        return Err(SpaceError::InvalidArgument(
            "n_theta must be at least 1".into(),
        ));
    }
    if radius.is_nan() || radius < 0.0 || !z_level.is_finite() {
        return Err(SpaceError::InvalidArgument(format!(
            "bad radius {radius} or level {z_level}"
        )));
    }
    if radius * radius + z_level * z_level > 1.0 {
        return Err(SpaceError::OutOfBall {
            a: radius,
            v: 0.0,
            z: z_level,
        });
    }
    Ok((0..n_theta)
        .map(|k| {
            let theta = TAU * k as f64 / n_theta as f64;
            (
                theta,
                C2A2Point {
                    a: radius * theta.cos(),
                    v: radius * theta.sin(),
                    z: z_level,
                },
            )
        })
        .collect())
}

/// Points along every basic axis at intensities `k / n_steps`, `k = 1..=n_steps`.
pub fn axis_rays(frame: &AxisFrame, n_steps: usize) -> Vec<(BasicEmotion, C2A2Point)> {
    let mut out = Vec::with_capacity(6 * n_steps);
    for e in BasicEmotion::AXES {
        let d = frame.axis(e).expect("axis emotions have axes");
        for k in 1..=n_steps {
            let p = d * (k as f64 / n_steps as f64);
            out.push((
                e,
                C2A2Point {
                    a: p.x,
                    v: p.y,
                    z: p.z,
                },
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn samples_at(azimuths_deg: [f64; 6]) -> Vec<(BasicEmotion, AVPoint)> {
        let mut out = Vec::new();
        for (e, deg) in BasicEmotion::AXES.iter().zip(azimuths_deg) {
            let t = deg.to_radians();
            out.push((*e, AVPoint::new(0.6 * t.cos(), 0.6 * t.sin()).unwrap()));
            out.push((*e, AVPoint::new(0.4 * t.cos(), 0.4 * t.sin()).unwrap()));
        }
        out
    }

    #[test]
    fn calibrated_happy_axis_follows_cluster_mean() {
        let mut samples = samples_at([0.0, 220.0, 115.0, 140.0, 70.0, 165.0]);
        samples.retain(|(e, _)| *e != BasicEmotion::Happy);
        samples.push((BasicEmotion::Happy, AVPoint::new(0.8, 0.2).unwrap()));
        samples.push((BasicEmotion::Happy, AVPoint::new(0.8, 0.2).unwrap()));
        let frame = calibrate_axes(&samples, 0.1).unwrap();
        let happy = frame.axis(BasicEmotion::Happy).unwrap();
        assert!((frame.azimuth(BasicEmotion::Happy).unwrap() - 0.2_f64.atan2(0.8)).abs() < 1e-12);
        assert_eq!(happy.z, 0.0);
    }

    #[test]
    fn fear_and_sad_are_lifted_sixty_degrees() {
        let frame =
            calibrate_axes(&samples_at([10.0, 200.0, 120.0, 135.0, 80.0, 160.0]), 0.1).unwrap();
        let fear = frame.axis(BasicEmotion::Fearful).unwrap();
        let sad = frame.axis(BasicEmotion::Sad).unwrap();
        let half_root3 = 3.0_f64.sqrt() / 2.0;
        assert!((fear.z - half_root3).abs() < 1e-12);
        assert!((sad.z + half_root3).abs() < 1e-12);
        let elevation = |d: &Vector3<f64>| d.z.atan2(d.x.hypot(d.y)).to_degrees();
        assert!((elevation(&fear) - 60.0).abs() < 1e-9);
        assert!((elevation(&sad) + 60.0).abs() < 1e-9);
        for e in [
            BasicEmotion::Happy,
            BasicEmotion::Surprised,
            BasicEmotion::Disgusted,
            BasicEmotion::Angry,
        ] {
            assert_eq!(frame.axis(e).unwrap().z, 0.0);
        }
        for e in BasicEmotion::AXES {
            assert!((frame.axis(e).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_category_is_reported() {
        let mut samples = samples_at([0.0, 220.0, 115.0, 140.0, 70.0, 165.0]);
        samples.retain(|(e, _)| *e != BasicEmotion::Angry);
        assert!(matches!(
            calibrate_axes(&samples, 0.1),
            Err(SpaceError::MissingCategory(BasicEmotion::Angry))
        ));
    }

    #[test]
    fn out_of_range_sample_is_reported() {
        let mut samples = samples_at([0.0, 220.0, 115.0, 140.0, 70.0, 165.0]);
        samples.push((
            BasicEmotion::Happy,
            AVPoint {
                valence: 1.2,
                arousal: 0.0,
            },
        ));
        assert!(matches!(
            calibrate_axes(&samples, 0.1),
            Err(SpaceError::OutOfRange { .. })
        ));
    }

    #[test]
    fn polar_conversion_axis_cases() {
        let p = polar_to_av(PolarCondition::new(0.0, 1.0).unwrap());
        assert_eq!((p.valence, p.arousal), (1.0, 0.0));
        let p = polar_to_av(PolarCondition::new(FRAC_PI_2, 0.5).unwrap());
        assert!(p.valence.abs() < 1e-16 && p.arousal == 0.5);
        let p = polar_to_av(PolarCondition::new(4.0, 0.0).unwrap());
        assert_eq!(p.norm(), 0.0);
        assert!(PolarCondition::new(TAU, 0.5).is_err());
    }

    #[test]
    fn projection_drops_z() {
        let p = project_to_av(&C2A2Point::new(0.2, -0.5, 0.7).unwrap());
        assert_eq!((p.valence, p.arousal), (0.2, -0.5));
        let frame = AxisFrame::reference();
        let fear = frame.axis(BasicEmotion::Fearful).unwrap();
        let planar = project_to_av(&C2A2Point::from_vector(&fear).unwrap());
        assert!((planar.norm() - 0.5).abs() < 1e-12);
        assert!((planar.azimuth() - 115f64.to_radians()).abs() < 1e-12);
    }

    #[test]
    fn compound_directions() {
        let frame = AxisFrame::reference();
        let hs = compound_direction(CompoundEmotion::HappilySurprised, &frame).unwrap();
        assert_eq!(hs.z, 0.0);
        assert!((hs.y.atan2(hs.x) - 42.5f64.to_radians()).abs() < 1e-12);

        let sum = frame.axis(BasicEmotion::Happy).unwrap()
            + frame.axis(BasicEmotion::Surprised).unwrap()
            + frame.axis(BasicEmotion::Fearful).unwrap();
        let awed = compound_direction(CompoundEmotion::Awed, &frame).unwrap();
        assert!((awed.z - LIFT_ANGLE.sin() / sum.norm()).abs() < 1e-15);
        assert!(awed.z > 0.0);

        assert_eq!(
            compound_direction(CompoundEmotion::SadlyFearful, &frame)
                .unwrap()
                .z,
            0.0
        );
        assert!(
            compound_direction(CompoundEmotion::SadlySurprised, &frame)
                .unwrap()
                .z
                < 0.0
        );
    }

    #[test]
    fn opposite_planar_axes_are_degenerate() {
        // angry exactly opposite disgusted
        let frame = AxisFrame::from_azimuths([0.0, 3.5, 2.0, 0.5, 1.0, 0.5 + PI], 0.1).unwrap();
        assert!(matches!(
            compound_direction(CompoundEmotion::AngrilyDisgusted, &frame),
            Err(SpaceError::DegenerateSum(_))
        ));
        let cands = frame.candidate_directions();
        assert!(!cands
            .iter()
            .any(|(c, _)| *c == Category::Compound(CompoundEmotion::AngrilyDisgusted)));
    }

    #[test]
    fn nearest_emotion_cases() {
        let frame = AxisFrame::reference();
        let happy = frame.axis(BasicEmotion::Happy).unwrap() * 0.9;
        let (cat, s) = nearest_emotion(&C2A2Point::from_vector(&happy).unwrap(), &frame);
        assert_eq!(cat, Category::Basic(BasicEmotion::Happy));
        assert!((s - 0.9).abs() < 1e-12);

        let tiny = C2A2Point::new(0.01, 0.0, 0.0).unwrap();
        assert_eq!(nearest_emotion(&tiny, &frame), (Category::NEUTRAL, 0.01));
    }

    #[test]
    fn representability_counts() {
        let two = CompoundEmotion::representable(EmotionModel::TwoD).count();
        let three = CompoundEmotion::representable(EmotionModel::ThreeD).count();
        assert_eq!((two, three), (6, 15));
        assert!(!is_representable(
            CompoundEmotion::SadlyFearful,
            EmotionModel::TwoD
        ));
        assert!(is_representable(
            CompoundEmotion::SadlyFearful,
            EmotionModel::ThreeD
        ));
        assert!(is_representable(
            CompoundEmotion::FearfullyAngry,
            EmotionModel::TwoD
        ));
        assert!(!is_representable(
            CompoundEmotion::DisgustedlySurprised,
            EmotionModel::ThreeD
        ));
    }

    #[test]
    fn uniform_2d_samples_stay_in_plane() {
        let frame = AxisFrame::reference();
        let pts = sample_conditions(SamplingMode::Uniform2D, 1000, 3, &frame, 0.0).unwrap();
        assert!(pts.iter().all(|p| p.z == 0.0 && p.norm() <= 1.0));
    }

    #[test]
    fn zero_jitter_lands_on_directions() {
        let frame = AxisFrame::reference();
        let dirs = frame.candidate_directions();
        let pts = sample_conditions(SamplingMode::AxisProximity3D, 100, 11, &frame, 0.0).unwrap();
        for p in pts {
            let v = p.to_vector();
            let on_some = dirs
                .iter()
                .any(|(_, d)| (v - d * v.dot(d)).norm() < 1e-15 && v.dot(d) >= 0.0);
            assert!(on_some, "{p:?}");
        }
    }

    #[test]
    fn jitter_cone_is_respected() {
        let frame = AxisFrame::reference();
        let dirs = frame.candidate_directions();
        let cos_max = 10f64.to_radians().cos();
        for p in sample_conditions(SamplingMode::AxisProximity3D, 500, 5, &frame, 10.0).unwrap() {
            p.validate().unwrap();
            let v = p.to_vector();
            if v.norm() < 1e-12 {
                continue;
            }
            let best = dirs
                .iter()
                .map(|(_, d)| v.normalize().dot(d))
                .fold(f64::MIN, f64::max);
            assert!(best >= cos_max - 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_prefix_stable() {
        let frame = AxisFrame::reference();
        for mode in [
            SamplingMode::Uniform2D,
            SamplingMode::AxisProximity3D,
            SamplingMode::UniformBall3D,
        ] {
            let a = sample_conditions(mode, 50, 42, &frame, 10.0).unwrap();
            let b = sample_conditions(mode, 50, 42, &frame, 10.0).unwrap();
            let c = sample_conditions(mode, 20, 42, &frame, 10.0).unwrap();
            assert_eq!(a, b);
            assert_eq!(&a[..20], &c[..]);
        }
        assert!(sample_conditions(SamplingMode::Uniform2D, 1, 0, &frame, 31.0).is_err());
    }

    #[test]
    fn circle_scan_cases() {
        let pts = circle_scan(0.0, 4, 1.0).unwrap();
        let thetas: Vec<f64> = pts.iter().map(|(t, _)| *t).collect();
        assert_eq!(thetas, vec![0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2]);
        assert!((pts[1].1.v - 1.0).abs() < 1e-15 && (pts[2].1.a + 1.0).abs() < 1e-15);

        let pts = circle_scan(0.5, 7, 0.8).unwrap();
        assert!(pts.iter().all(|(_, p)| p.z == 0.5 && p.validate().is_ok()));

        assert!(matches!(
            circle_scan(0.8, 4, 0.8),
            Err(SpaceError::OutOfBall { .. })
        ));
        assert!(circle_scan(0.0, 0, 0.5).is_err());
    }

    #[test]
    fn frame_json_round_trips_bit_exactly() {
        let frame =
            calibrate_axes(&samples_at([12.3, 201.0, 117.7, 133.3, 77.0, 158.8]), 0.125).unwrap();
        let text = frame.to_json();
        let back = AxisFrame::from_json(&text).unwrap();
        assert_eq!(back, frame);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn frame_json_rejects_bad_axes() {
        let text = AxisFrame::reference()
            .to_json()
            .replace("\"happy\"", "\"contempt\"");
        assert!(AxisFrame::from_json(&text).is_err());
        let bad = r#"{"axes": {"happy": [1,0,0], "sad": [1,0,0], "fearful": [1,0,0],
            "angry": [1,0,0], "surprised": [1,0,0], "disgusted": [1,0,0]}, "neutral_rho": 0.1}"#;
        assert!(matches!(
            AxisFrame::from_json(bad),
            Err(SpaceError::MalformedFrame(_))
        ));
    }
}
