//! Basic and compound emotion categories.
//!
//! Category order everywhere in the crate follows the category/AU table:
//! the six basics, then the seventeen compounds read column by column.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasicEmotion {
    Happy,
    Sad,
    Fearful,
    Angry,
    Surprised,
    Disgusted,
    Neutral,
}

impl BasicEmotion {
    /// The six emotions that own an axis, in table order.
    pub const AXES: [BasicEmotion; 6] = [
        BasicEmotion::Happy,
        BasicEmotion::Sad,
        BasicEmotion::Fearful,
        BasicEmotion::Angry,
        BasicEmotion::Surprised,
        BasicEmotion::Disgusted,
    ];

    /// Position in [`BasicEmotion::AXES`]; `None` for Neutral.
    pub fn axis_index(self) -> Option<usize> {
        Self::AXES.iter().position(|&e| e == self)
    }

    pub fn is_neutral(self) -> bool {
        self == BasicEmotion::Neutral
    }

    pub fn name(self) -> &'static str {
        match self {
            BasicEmotion::Happy => "happy",
            BasicEmotion::Sad => "sad",
            BasicEmotion::Fearful => "fearful",
            BasicEmotion::Angry => "angry",
            BasicEmotion::Surprised => "surprised",
            BasicEmotion::Disgusted => "disgusted",
            BasicEmotion::Neutral => "neutral",
        }
    }

    /// Lifted emotions leave the AV plane: fear upwards, sadness downwards.
    pub fn lift_sign(self) -> f64 {
        match self {
            BasicEmotion::Fearful => 1.0,
            BasicEmotion::Sad => -1.0,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompoundEmotion {
    HappilySad,
    HappilySurprised,
    HappilyDisgusted,
    SadlyFearful,
    SadlyAngry,
    SadlySurprised,
    SadlyDisgusted,
    FearfullyAngry,
    FearfullySurprised,
    FearfullyDisgusted,
    AngrilySurprised,
    DisgustedlySurprised,
    HappilyFearful,
    AngrilyDisgusted,
    Awed,
    Appalled,
    Hatred,
}

/// Which emotion model a representability question refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmotionModel {
    /// The planar arousal-valence circumplex.
    TwoD,
    /// The lifted three-dimensional space.
    ThreeD,
}

impl CompoundEmotion {
    pub const ALL: [CompoundEmotion; 17] = [
        CompoundEmotion::HappilySad,
        CompoundEmotion::HappilySurprised,
        CompoundEmotion::HappilyDisgusted,
        CompoundEmotion::SadlyFearful,
        CompoundEmotion::SadlyAngry,
        CompoundEmotion::SadlySurprised,
        CompoundEmotion::SadlyDisgusted,
        CompoundEmotion::FearfullyAngry,
        CompoundEmotion::FearfullySurprised,
        CompoundEmotion::FearfullyDisgusted,
        CompoundEmotion::AngrilySurprised,
        CompoundEmotion::DisgustedlySurprised,
        CompoundEmotion::HappilyFearful,
        CompoundEmotion::AngrilyDisgusted,
        CompoundEmotion::Awed,
        CompoundEmotion::Appalled,
        CompoundEmotion::Hatred,
    ];

    pub fn constituents(self) -> &'static [BasicEmotion] {
        use BasicEmotion::*;
        match self {
            CompoundEmotion::HappilySad => &[Happy, Sad],
            CompoundEmotion::HappilySurprised => &[Happy, Surprised],
            CompoundEmotion::HappilyDisgusted => &[Happy, Disgusted],
            CompoundEmotion::SadlyFearful => &[Sad, Fearful],
            CompoundEmotion::SadlyAngry => &[Sad, Angry],
            CompoundEmotion::SadlySurprised => &[Sad, Surprised],
            CompoundEmotion::SadlyDisgusted => &[Sad, Disgusted],
            CompoundEmotion::FearfullyAngry => &[Fearful, Angry],
            CompoundEmotion::FearfullySurprised => &[Fearful, Surprised],
            CompoundEmotion::FearfullyDisgusted => &[Fearful, Disgusted],
            CompoundEmotion::AngrilySurprised => &[Angry, Surprised],
            CompoundEmotion::DisgustedlySurprised => &[Disgusted, Surprised],
            CompoundEmotion::HappilyFearful => &[Happy, Fearful],
            CompoundEmotion::AngrilyDisgusted => &[Angry, Disgusted],
            CompoundEmotion::Awed => &[Happy, Surprised, Fearful],
            CompoundEmotion::Appalled => &[Disgusted, Surprised],
            CompoundEmotion::Hatred => &[Disgusted, Angry, Fearful],
        }
    }

    /// Representability of the compound in the planar and lifted models.
    pub fn is_representable(self, model: EmotionModel) -> bool {
        use CompoundEmotion::*;
        match model {
            EmotionModel::TwoD => matches!(
                self,
                SadlyDisgusted
                    | FearfullyAngry
                    | FearfullySurprised
                    | AngrilyDisgusted
                    | HappilySurprised
                    | HappilySad
            ),
            EmotionModel::ThreeD => !matches!(self, Appalled | DisgustedlySurprised),
        }
    }

    /// The representable compounds of `model`, in table order.
    pub fn representable(model: EmotionModel) -> impl Iterator<Item = CompoundEmotion> {
        Self::ALL
            .into_iter()
            .filter(move |c| c.is_representable(model))
    }

    /// The planar compound whose constituents are exactly `{a, b}`.
    pub fn planar_between(a: BasicEmotion, b: BasicEmotion) -> Option<CompoundEmotion> {
        Self::representable(EmotionModel::TwoD).find(|c| {
            let parts = c.constituents();
            parts.len() == 2 && parts.contains(&a) && parts.contains(&b)
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            CompoundEmotion::HappilySad => "happily_sad",
            CompoundEmotion::HappilySurprised => "happily_surprised",
            CompoundEmotion::HappilyDisgusted => "happily_disgusted",
            CompoundEmotion::SadlyFearful => "sadly_fearful",
            CompoundEmotion::SadlyAngry => "sadly_angry",
            CompoundEmotion::SadlySurprised => "sadly_surprised",
            CompoundEmotion::SadlyDisgusted => "sadly_disgusted",
            CompoundEmotion::FearfullyAngry => "fearfully_angry",
            CompoundEmotion::FearfullySurprised => "fearfully_surprised",
            CompoundEmotion::FearfullyDisgusted => "fearfully_disgusted",
            CompoundEmotion::AngrilySurprised => "angrily_surprised",
            CompoundEmotion::DisgustedlySurprised => "disgustedly_surprised",
            CompoundEmotion::HappilyFearful => "happily_fearful",
            CompoundEmotion::AngrilyDisgusted => "angrily_disgusted",
            CompoundEmotion::Awed => "awed",
            CompoundEmotion::Appalled => "appalled",
            CompoundEmotion::Hatred => "hatred",
        }
    }
}

/// Any labelled emotion: a basic one (including Neutral) or a compound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    Basic(BasicEmotion),
    Compound(CompoundEmotion),
}

impl Category {
    pub const NEUTRAL: Category = Category::Basic(BasicEmotion::Neutral);

    /// The 23 non-neutral categories in table order.
    pub fn all_labelled() -> impl Iterator<Item = Category> {
        BasicEmotion::AXES
            .into_iter()
            .map(Category::Basic)
            .chain(CompoundEmotion::ALL.into_iter().map(Category::Compound))
    }

    pub fn is_neutral(self) -> bool {
        self == Self::NEUTRAL
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Basic(b) => b.name(),
            Category::Compound(c) => c.name(),
        }
    }
}

impl From<BasicEmotion> for Category {
    fn from(b: BasicEmotion) -> Self {
        Category::Basic(b)
    }
}

impl From<CompoundEmotion> for Category {
    fn from(c: CompoundEmotion) -> Self {
        Category::Compound(c)
    }
}

impl fmt::Display for BasicEmotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for CompoundEmotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown emotion category `{0}`")]
pub struct UnknownCategory(pub String);

fn normalize_name(s: &str) -> String {
    let lowered = s.trim().to_ascii_lowercase();
    let mut out = String::with_capacity(lowered.len());
    let words: Vec<&str> = lowered
        .split([' ', '_', '-'])
        .filter(|w| !w.is_empty())
        .collect();
    for (i, word) in words.iter().enumerate() {
        if !out.is_empty() {
            out.push('_');
        }
        let word = word.trim_end_matches('.');
        // Table abbreviations; a leading "disgd." is the adverb.
        out.push_str(match word {
            "disgd" if i == 0 && words.len() > 1 => "disgustedly",
            "disgd" => "disgusted",
            "surpd" => "surprised",
            "feraful" => "fearful",
            other => other,
        });
    }
    out
}

impl FromStr for BasicEmotion {
    type Err = UnknownCategory;

    /// Accepts canonical names plus the dataset spellings
    /// (`happiness`, `fear`, `anger`, ...).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize_name(s);
        let found = match key.as_str() {
            "happy" | "happiness" | "joy" => BasicEmotion::Happy,
            "sad" | "sadness" => BasicEmotion::Sad,
            "fear" | "fearful" | "afraid" => BasicEmotion::Fearful,
            "anger" | "angry" => BasicEmotion::Angry,
            "surprise" | "surprised" => BasicEmotion::Surprised,
            "disgust" | "disgusted" => BasicEmotion::Disgusted,
            "neutral" => BasicEmotion::Neutral,
            _ => return Err(UnknownCategory(s.to_string())),
        };
        Ok(found)
    }
}

impl FromStr for CompoundEmotion {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize_name(s);
        CompoundEmotion::ALL
            .into_iter()
            .find(|c| c.name() == key)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

impl FromStr for Category {
    type Err = UnknownCategory;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse::<BasicEmotion>()
            .map(Category::Basic)
            .or_else(|_| s.parse::<CompoundEmotion>().map(Category::Compound))
    }
}
