//! Action-unit lookup, angular AV-plane partition and AU targets.
//!
//! Activations are indexed by FACS id in a 41-entry catalogue (`au1` to
//! `au41`). Only the fifteen units that appear in the category table are
//! relevant for supervision.

use std::fmt;

use thiserror::Error;

use crate::emotion::{BasicEmotion, Category, CompoundEmotion};
use crate::space::{argmax_cosine, project_to_av, wrap_angle, AVPoint, AxisFrame, C2A2Point};

pub const CATALOGUE_SIZE: usize = 41;

/// Relevant units in ascending id order.
pub const RELEVANT_AUS: [u8; 15] = [1, 2, 4, 5, 6, 7, 9, 10, 12, 15, 17, 20, 24, 25, 26];

pub const RELEVANT_COUNT: usize = RELEVANT_AUS.len();

/// Probability floor/ceiling keeping every KL term finite.
pub const PROB_EPS: f64 = 1e-4;

/// Points with `|z|` at or below this are treated as lying in the AV plane.
pub const PLANE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum AuError {
    #[error("neutral has no action units")]
    NeutralHasNoAUs,
    #[error("action unit {0} is outside the 41-unit catalogue")]
    UnknownUnit(u32),
    #[error("activation for AU{id} is {value}, expected a probability")]
    InvalidProbability { id: u8, value: f64 },
    #[error("target entry {index} is {value}, outside [eps, 1 - eps]")]
    TargetOutOfRange { index: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ActionUnitId(u8);

impl ActionUnitId {
    pub fn new(id: u32) -> Result<Self, AuError> {
        if (1..=CATALOGUE_SIZE as u32).contains(&id) {
            Ok(ActionUnitId(id as u8))
        } else {
            Err(AuError::UnknownUnit(id))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn is_relevant(self) -> bool {
        RELEVANT_AUS.contains(&self.0)
    }

    /// Position among the relevant units.
    pub fn relevant_index(self) -> Option<usize> {
        RELEVANT_AUS.iter().position(|&id| id == self.0)
    }
}

impl fmt::Display for ActionUnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A set of action units, stored as a bitmask over catalogue ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct AuSet(u64);

impl AuSet {
    pub fn from_ids(ids: &[u8]) -> Result<Self, AuError> {
        let mut mask = 0;
        for &id in ids {
            let unit = ActionUnitId::new(id as u32)?;
            mask |= 1u64 << unit.0;
        }
        Ok(AuSet(mask))
    }

    pub fn contains(&self, id: u8) -> bool {
        id < 64 && self.0 & (1 << id) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn union(&self, other: &AuSet) -> AuSet {
        AuSet(self.0 | other.0)
    }

    /// Member ids in ascending order.
    pub fn ids(&self) -> Vec<u8> {
        (1..=CATALOGUE_SIZE as u8)
            .filter(|&id| self.contains(id))
            .collect()
    }
}

impl fmt::Display for AuSet {
    /// Semicolon-separated ids, the `au_table.csv` cell format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids: Vec<String> = self.ids().iter().map(u8::to_string).collect();
        f.write_str(&ids.join(";"))
    }
}

/// Category to AU table, 23 rows in table order.
pub const AU_TABLE: [(Category, &[u8]); 23] = {
    use BasicEmotion as B;
    use Category::{Basic, Compound};
    use CompoundEmotion as C;
    [
        (Basic(B::Happy), &[12, 25]),
        (Basic(B::Sad), &[4, 15]),
        (Basic(B::Fearful), &[1, 4, 20, 25]),
        (Basic(B::Angry), &[4, 7, 24]),
        (Basic(B::Surprised), &[1, 2, 25, 26]),
        (Basic(B::Disgusted), &[9, 10, 17]),
        (Compound(C::HappilySad), &[4, 6, 12, 25]),
        (Compound(C::HappilySurprised), &[1, 2, 12, 25]),
        (Compound(C::HappilyDisgusted), &[10, 12, 25]),
        (Compound(C::SadlyFearful), &[1, 4, 15, 25]),
        (Compound(C::SadlyAngry), &[4, 7, 15]),
        (Compound(C::SadlySurprised), &[1, 4, 25, 26]),
        (Compound(C::SadlyDisgusted), &[4, 10]),
        (Compound(C::FearfullyAngry), &[4, 20, 25]),
        (Compound(C::FearfullySurprised), &[1, 2, 5, 20, 25]),
        (Compound(C::FearfullyDisgusted), &[1, 4, 10, 20, 25]),
        (Compound(C::AngrilySurprised), &[4, 25, 26]),
        (Compound(C::DisgustedlySurprised), &[1, 2, 5, 10]),
        (Compound(C::HappilyFearful), &[1, 2, 12, 25, 26]),
        (Compound(C::AngrilyDisgusted), &[4, 10, 17]),
        (Compound(C::Awed), &[1, 2, 5, 25]),
        (Compound(C::Appalled), &[4, 9, 10]),
        (Compound(C::Hatred), &[4, 7, 10]),
    ]
};

pub fn category_to_aus(cat: Category) -> Result<AuSet, AuError> {
    let (_, ids) = AU_TABLE
        .iter()
        .find(|(c, _)| *c == cat)
        .ok_or(AuError::NeutralHasNoAUs)?;
    AuSet::from_ids(ids)
}

/// The table rendered as `au_table.csv` (`category,au_ids`).
pub fn au_table_csv() -> String {
    let mut out = String::from("category,au_ids\n");
    for (cat, _) in AU_TABLE {
        let set = category_to_aus(cat).expect("table rows are non-neutral");
        out.push_str(&format!("{},{}\n", cat.name(), set));
    }
    out
}

/// Labels an AV point by angular region.
///
/// Basic azimuths are visited counter-clockwise. Between two neighbours with
/// gap `Δ`, the first quarter belongs to the earlier basic, the middle half
/// to their planar compound and the last quarter to the later basic. Gaps
/// with no planar compound split at the bisector.
pub fn av_region_label(p: AVPoint, frame: &AxisFrame) -> Category {
    if p.norm() < frame.neutral_rho() {
        return Category::NEUTRAL;
    }
    let phi = p.azimuth();

    let mut order: Vec<(f64, BasicEmotion)> = BasicEmotion::AXES
        .iter()
        .map(|&e| (frame.azimuth(e).expect("axis emotion"), e))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Last basic at or before phi, wrapping to the largest azimuth.
    let i = order
        .iter()
        .rposition(|(theta, _)| *theta <= phi)
        .unwrap_or(order.len() - 1);
    let j = (i + 1) % order.len();
    let (theta_i, lower) = order[i];
    let (theta_j, upper) = order[j];

    let mut gap = wrap_angle(theta_j - theta_i);
    if gap == 0.0 {
        gap = std::f64::consts::TAU;
    }
    let t = wrap_angle(phi - theta_i);

    match CompoundEmotion::planar_between(lower, upper) {
        Some(compound) if lower != upper => {
            if t < gap / 4.0 {
                lower.into()
            } else if t <= gap - gap / 4.0 {
                compound.into()
            } else {
                upper.into()
            }
        }
        _ => {
            if t < gap / 2.0 {
                lower.into()
            } else {
                upper.into()
            }
        }
    }
}

/// Labels a point of the 3D space.
///
/// Points in the AV plane take the angular partition of
/// [`av_region_label`]; elsewhere the label is the argmax of cosine
/// similarity over basic axes and 3D-representable compounds, with the
/// same tie order as [`crate::space::nearest_emotion`].
pub fn c2a2_region_label(y: &C2A2Point, frame: &AxisFrame) -> Category {
    if y.norm() < frame.neutral_rho() {
        return Category::NEUTRAL;
    }
    if y.z.abs() <= PLANE_TOLERANCE {
        return av_region_label(project_to_av(y), frame);
    }
    argmax_cosine(&y.to_vector(), &frame.candidate_directions())
}

/// Observed activation probabilities for the full catalogue.
#[derive(Debug, Clone, PartialEq)]
pub struct AuActivation {
    probs: [f64; CATALOGUE_SIZE],
}

impl AuActivation {
    pub fn new(probs: [f64; CATALOGUE_SIZE]) -> Result<Self, AuError> {
        for (i, &value) in probs.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(AuError::InvalidProbability {
                    id: i as u8 + 1,
                    value,
                });
            }
        }
        Ok(AuActivation { probs })
    }

    pub fn get(&self, id: ActionUnitId) -> f64 {
        self.probs[id.0 as usize - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }
}

/// Target activation over the relevant units, bounded to `[ε, 1 − ε]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuTarget {
    probs: [f64; RELEVANT_COUNT],
}

impl AuTarget {
    pub fn new(probs: [f64; RELEVANT_COUNT]) -> Result<Self, AuError> {
        for (index, &value) in probs.iter().enumerate() {
            if !(PROB_EPS..=1.0 - PROB_EPS).contains(&value) {
                return Err(AuError::TargetOutOfRange { index, value });
            }
        }
        Ok(AuTarget { probs })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn to_array(&self) -> [f64; RELEVANT_COUNT] {
        self.probs
    }
}

fn clamp_prob(x: f64) -> f64 {
    if x.is_nan() {
        PROB_EPS
    } else {
        x.clamp(PROB_EPS, 1.0 - PROB_EPS)
    }
}

/// Target with the category's units at the (clamped) intensity and every
/// other relevant unit at `ε`. Neutral yields the all-`ε` vector.
pub fn make_au_target(cat: Category, intensity: f64) -> AuTarget {
    let mut probs = [PROB_EPS; RELEVANT_COUNT];
    if let Ok(set) = category_to_aus(cat) {
        let active = clamp_prob(intensity);
        for (slot, &id) in probs.iter_mut().zip(&RELEVANT_AUS) {
            if set.contains(id) {
                *slot = active;
            }
        }
    }
    AuTarget { probs }
}

/// Selects the relevant units in ascending id order, clamped to `[ε, 1 − ε]`.
pub fn restrict_activation(a: &AuActivation) -> [f64; RELEVANT_COUNT] {
    RELEVANT_AUS.map(|id| clamp_prob(a.probs[id as usize - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emotion::EmotionModel;
    use crate::space::{compound_direction, AxisFrame};
    use proptest::prelude::*;

    fn on_azimuth(theta: f64, rho: f64) -> AVPoint {
        AVPoint {
            valence: rho * theta.cos(),
            arousal: rho * theta.sin(),
        }
    }

    #[test]
    fn table_lookups() {
        assert_eq!(
            category_to_aus(BasicEmotion::Happy.into()).unwrap().ids(),
            vec![12, 25]
        );
        assert_eq!(
            category_to_aus(CompoundEmotion::FearfullyDisgusted.into())
                .unwrap()
                .ids(),
            vec![1, 4, 10, 20, 25]
        );
        assert_eq!(
            category_to_aus(CompoundEmotion::Awed.into()).unwrap().ids(),
            vec![1, 2, 5, 25]
        );
        assert_eq!(
            category_to_aus(Category::NEUTRAL),
            Err(AuError::NeutralHasNoAUs)
        );
    }

    #[test]
    fn table_covers_every_labelled_category_once() {
        let cats: Vec<Category> = AU_TABLE.iter().map(|(c, _)| *c).collect();
        assert_eq!(cats, Category::all_labelled().collect::<Vec<_>>());
    }

    #[test]
    fn union_is_the_relevant_subset() {
        let union = AU_TABLE.iter().fold(AuSet::default(), |acc, (c, _)| {
            acc.union(&category_to_aus(*c).unwrap())
        });
        assert_eq!(union.ids(), RELEVANT_AUS.to_vec());
        assert_eq!(union.len(), 15);
        for (c, _) in AU_TABLE {
            let set = category_to_aus(c).unwrap();
            assert!(!set.is_empty());
            assert!(set
                .ids()
                .iter()
                .all(|&id| ActionUnitId::new(id as u32).unwrap().is_relevant()));
        }
    }

    #[test]
    fn unit_ids_are_bounded() {
        assert!(ActionUnitId::new(0).is_err());
        assert!(ActionUnitId::new(42).is_err());
        assert_eq!(ActionUnitId::new(12).unwrap().relevant_index(), Some(8));
        assert_eq!(ActionUnitId::new(3).unwrap().relevant_index(), None);
    }

    #[test]
    fn region_on_axis_and_bisector() {
        let frame = AxisFrame::reference();
        let happy = frame.azimuth(BasicEmotion::Happy).unwrap();
        let surprised = frame.azimuth(BasicEmotion::Surprised).unwrap();
        assert_eq!(
            av_region_label(on_azimuth(happy, 0.8), &frame),
            BasicEmotion::Happy.into()
        );
        assert_eq!(
            av_region_label(on_azimuth((happy + surprised) / 2.0, 0.8), &frame),
            CompoundEmotion::HappilySurprised.into()
        );
        assert_eq!(
            av_region_label(on_azimuth(1.0, 0.05), &frame),
            Category::NEUTRAL
        );
    }

    #[test]
    fn quarter_boundaries() {
        let frame = AxisFrame::reference();
        let happy = 15f64.to_radians();
        let gap = 55f64.to_radians();
        let inside = |t: f64| av_region_label(on_azimuth(happy + t, 0.8), &frame);
        assert_eq!(inside(gap / 4.0 - 1e-9), BasicEmotion::Happy.into());
        assert_eq!(
            inside(gap / 4.0 + 1e-9),
            CompoundEmotion::HappilySurprised.into()
        );
        assert_eq!(
            inside(3.0 * gap / 4.0 - 1e-9),
            CompoundEmotion::HappilySurprised.into()
        );
        assert_eq!(
            inside(3.0 * gap / 4.0 + 1e-9),
            BasicEmotion::Surprised.into()
        );
    }

    #[test]
    fn wraparound_gap_uses_happily_sad() {
        // sad at 220°, happy at 15°: the gap crosses zero azimuth.
        let frame = AxisFrame::reference();
        let bisector = (220.0 + 155.0 / 2.0_f64).to_radians();
        assert_eq!(
            av_region_label(on_azimuth(bisector, 0.5), &frame),
            CompoundEmotion::HappilySad.into()
        );
        assert_eq!(
            av_region_label(on_azimuth(5f64.to_radians(), 0.5), &frame),
            BasicEmotion::Happy.into()
        );
    }

    #[test]
    fn missing_planar_compound_splits_at_bisector() {
        // Swap angry and disgusted so surprised neighbours disgusted, a pair
        // without a planar compound.
        let deg = [15.0_f64, 220.0, 165.0, 140.0, 70.0, 105.0];
        let frame = AxisFrame::from_azimuths(deg.map(f64::to_radians), 0.1).unwrap();
        let label = |d: f64| av_region_label(on_azimuth(d.to_radians(), 0.8), &frame);
        assert_eq!(label(87.0), BasicEmotion::Surprised.into());
        assert_eq!(label(88.0), BasicEmotion::Disgusted.into());
    }

    #[test]
    fn region_3d_cases() {
        let frame = AxisFrame::reference();
        let fear = frame.axis(BasicEmotion::Fearful).unwrap() * 0.7;
        assert_eq!(
            c2a2_region_label(&C2A2Point::from_vector(&fear).unwrap(), &frame),
            BasicEmotion::Fearful.into()
        );
        let sa = compound_direction(CompoundEmotion::SadlyAngry, &frame).unwrap() * 0.7;
        assert_eq!(
            c2a2_region_label(&C2A2Point::from_vector(&sa).unwrap(), &frame),
            CompoundEmotion::SadlyAngry.into()
        );
    }

    #[test]
    fn planar_3d_labels_never_use_lifted_compounds() {
        let frame = AxisFrame::reference();
        for k in 0..3600 {
            let t = (k as f64 / 10.0).to_radians();
            let y = C2A2Point::from_av(on_azimuth(t, 0.9));
            if let Category::Compound(c) = c2a2_region_label(&y, &frame) {
                assert!(c.is_representable(EmotionModel::TwoD), "{c} at {k}");
            }
        }
    }

    #[test]
    fn target_construction() {
        let t = make_au_target(BasicEmotion::Happy.into(), 1.0);
        for (i, &id) in RELEVANT_AUS.iter().enumerate() {
            let expected = if id == 12 || id == 25 {
                1.0 - PROB_EPS
            } else {
                PROB_EPS
            };
            assert_eq!(t.as_slice()[i], expected);
        }
        assert!(make_au_target(Category::NEUTRAL, 0.7)
            .as_slice()
            .iter()
            .all(|&x| x == PROB_EPS));
        let t = make_au_target(CompoundEmotion::SadlyAngry.into(), 0.5);
        for (i, &id) in RELEVANT_AUS.iter().enumerate() {
            let expected = if [4, 7, 15].contains(&id) {
                0.5
            } else {
                PROB_EPS
            };
            assert_eq!(t.as_slice()[i], expected);
        }
    }

    #[test]
    fn restriction_cases() {
        let zeros = AuActivation::new([0.0; CATALOGUE_SIZE]).unwrap();
        assert!(restrict_activation(&zeros).iter().all(|&x| x == PROB_EPS));
        let ones = AuActivation::new([1.0; CATALOGUE_SIZE]).unwrap();
        assert!(restrict_activation(&ones)
            .iter()
            .all(|&x| x == 1.0 - PROB_EPS));
        let mut probs = [0.0; CATALOGUE_SIZE];
        probs[11] = 1.0;
        let r = restrict_activation(&AuActivation::new(probs).unwrap());
        for (i, &id) in RELEVANT_AUS.iter().enumerate() {
            assert_eq!(r[i], if id == 12 { 1.0 - PROB_EPS } else { PROB_EPS });
        }
        probs[0] = 1.5;
        assert!(AuActivation::new(probs).is_err());
    }

    #[test]
    fn table_csv_lists_all_rows() {
        let csv = au_table_csv();
        assert_eq!(csv.lines().count(), 24);
        assert!(csv.contains("fearfully_disgusted,1;4;10;20;25\n"));
    }

    proptest! {
        #[test]
        fn target_is_monotone_in_intensity(lo in 0.0f64..1.0, hi in 0.0f64..1.0, idx in 0usize..23) {
            let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            let cat = AU_TABLE[idx].0;
            let set = category_to_aus(cat).unwrap();
            let a = make_au_target(cat, lo);
            let b = make_au_target(cat, hi);
            for (i, &id) in RELEVANT_AUS.iter().enumerate() {
                if set.contains(id) {
                    prop_assert!(a.as_slice()[i] <= b.as_slice()[i]);
                } else {
                    prop_assert_eq!(a.as_slice()[i], PROB_EPS);
                    prop_assert_eq!(b.as_slice()[i], PROB_EPS);
                }
            }
        }

        #[test]
        fn region_depends_on_azimuth_only(theta in 0.0f64..std::f64::consts::TAU, r in 0.11f64..1.0, s in 0.11f64..1.0) {
            let frame = AxisFrame::reference();
            prop_assert_eq!(av_region_label(on_azimuth(theta, r), &frame), av_region_label(on_azimuth(theta, s), &frame));
        }
    }
}
