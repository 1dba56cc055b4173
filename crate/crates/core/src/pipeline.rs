//! CSV ingestion, label joining, pseudo-labelling and condition grids.
//!
//! All files are UTF-8, comma separated, with a header row. Floats are
//! written with 17 significant digits so outputs are byte-reproducible.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::au::{
    c2a2_region_label, make_au_target, restrict_activation, AuActivation, AuTarget, CATALOGUE_SIZE,
    RELEVANT_COUNT,
};
use crate::emotion::{BasicEmotion, Category};
use crate::fmt::g17;
use crate::losses::{compose_z_label, ZHat};
use crate::space::{axis_rays, circle_scan, AVPoint, AxisFrame, C2A2Point, SpaceError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: {message}")]
    Range { line: u64, message: String },
    #[error("line {line}: duplicate image_id `{id}`")]
    DuplicateId { line: u64, id: String },
    #[error("no image_id is shared by all inputs")]
    EmptyJoin,
    #[error("image `{id}`: {source}")]
    Row { id: String, source: SpaceError },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl PipelineError {
    /// True for failures of the file system rather than of the data.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            PipelineError::Io(_) | PipelineError::Space(SpaceError::Io(_))
        )
    }
}

fn csv_error(e: csv::Error) -> PipelineError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => PipelineError::Io(io),
        other => PipelineError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn parse_f64(field: &str, what: &str, line: u64) -> Result<f64, PipelineError> {
    field.parse::<f64>().map_err(|_| PipelineError::Parse {
        line,
        message: format!("{what} `{field}` is not a number"),
    })
}

fn expect_header(
    headers: &csv::StringRecord,
    expected: &[&str],
    line: u64,
) -> Result<(), PipelineError> {
    let got: Vec<&str> = headers.iter().collect();
    if got.len() < expected.len() || got[..expected.len()] != *expected {
        return Err(PipelineError::Parse {
            line,
            message: format!("expected header {expected:?}, got {got:?}"),
        });
    }
    Ok(())
}

struct IdTracker(HashSet<String>);

impl IdTracker {
    fn new() -> Self {
        IdTracker(HashSet::new())
    }

    fn admit(&mut self, id: &str, line: u64) -> Result<(), PipelineError> {
        if id.is_empty() {
            return Err(PipelineError::Parse {
                line,
                message: "empty image_id".into(),
            });
        }
        if !self.0.insert(id.to_string()) {
            return Err(PipelineError::DuplicateId {
                line,
                id: id.to_string(),
            });
        }
        Ok(())
    }
}

/// One row of `av_labels.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct AvLabelRecord {
    pub image_id: String,
    pub valence: f64,
    pub arousal: f64,
    pub category: Option<BasicEmotion>,
}

impl AvLabelRecord {
    pub fn av(&self) -> AVPoint {
        AVPoint {
            valence: self.valence,
            arousal: self.arousal,
        }
    }
}

/// Parsed AV labels plus the count of dropped "contempt" rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AvLabels {
    pub records: Vec<AvLabelRecord>,
    pub dropped_contempt: usize,
}

/// Dataset category codes 0..=7 (neutral, happy, sad, surprise, fear,
/// disgust, anger, contempt) and names are both accepted.
fn parse_category(field: &str, line: u64) -> Result<Option<Option<BasicEmotion>>, PipelineError> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(Some(None));
    }
    let by_code = match field {
        "0" => Some(BasicEmotion::Neutral),
        "1" => Some(BasicEmotion::Happy),
        "2" => Some(BasicEmotion::Sad),
        "3" => Some(BasicEmotion::Surprised),
        "4" => Some(BasicEmotion::Fearful),
        "5" => Some(BasicEmotion::Disgusted),
        "6" => Some(BasicEmotion::Angry),
        "7" => return Ok(None),
        _ => None,
    };
    if let Some(e) = by_code {
        return Ok(Some(Some(e)));
    }
    if field.eq_ignore_ascii_case("contempt") {
        return Ok(None);
    }
    field
        .parse::<BasicEmotion>()
        .map(|e| Some(Some(e)))
        .map_err(|_| PipelineError::Parse {
            line,
            message: format!("unknown category `{field}`"),
        })
}

/// Reads `image_id,valence,arousal[,category]`. Contempt rows are dropped
/// and counted.
pub fn read_av_csv<R: Read>(input: R) -> Result<AvLabels, PipelineError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    expect_header(&headers, &["image_id", "valence", "arousal"], 1)?;
    let has_category = headers.get(3) == Some("category");
    let mut ids = IdTracker::new();
    let mut out = AvLabels::default();
    for result in rdr.records() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = rec.get(0).unwrap_or("");
        let valence = parse_f64(rec.get(1).unwrap_or(""), "valence", line)?;
        let arousal = parse_f64(rec.get(2).unwrap_or(""), "arousal", line)?;
        for (what, v) in [("valence", valence), ("arousal", arousal)] {
            if !(-1.0..=1.0).contains(&v) {
                return Err(PipelineError::Range {
                    line,
                    message: format!("{what} {v} outside [-1, 1]"),
                });
            }
        }
        let category = if has_category {
            match parse_category(rec.get(3).unwrap_or(""), line)? {
                Some(c) => c,
                None => {
                    out.dropped_contempt += 1;
                    continue;
                }
            }
        } else {
            None
        };
        ids.admit(id, line)?;
        out.records.push(AvLabelRecord {
            image_id: id.to_string(),
            valence,
            arousal,
            category,
        });
    }
    Ok(out)
}

pub fn load_av_csv(path: &Path) -> Result<AvLabels, PipelineError> {
    read_av_csv(File::open(path)?)
}

/// One row of `au_probs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuProbRecord {
    pub image_id: String,
    pub activation: AuActivation,
}

/// Reads `image_id,au1..au41`.
pub fn read_au_csv<R: Read>(input: R) -> Result<Vec<AuProbRecord>, PipelineError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut expected = vec!["image_id".to_string()];
    expected.extend((1..=CATALOGUE_SIZE).map(|i| format!("au{i}")));
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(PipelineError::Parse {
            line: 1,
            message: "expected header image_id,au1..au41".into(),
        });
    }
    let mut ids = IdTracker::new();
    let mut out = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = rec.get(0).unwrap_or("");
        let mut probs = [0.0; CATALOGUE_SIZE];
        for (i, slot) in probs.iter_mut().enumerate() {
            let v = parse_f64(rec.get(i + 1).unwrap_or(""), "activation", line)?;
            if !(0.0..=1.0).contains(&v) {
                return Err(PipelineError::Range {
                    line,
                    message: format!("au{} = {v} outside [0, 1]", i + 1),
                });
            }
            *slot = v;
        }
        ids.admit(id, line)?;
        let activation = AuActivation::new(probs).expect("validated above");
        out.push(AuProbRecord {
            image_id: id.to_string(),
            activation,
        });
    }
    Ok(out)
}

pub fn load_au_csv(path: &Path) -> Result<Vec<AuProbRecord>, PipelineError> {
    read_au_csv(File::open(path)?)
}

/// One row of `zhat.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZHatRecord {
    pub image_id: String,
    pub zhat: ZHat,
}

pub fn read_zhat_csv<R: Read>(input: R) -> Result<Vec<ZHatRecord>, PipelineError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    expect_header(&headers, &["image_id", "zhat"], 1)?;
    let mut ids = IdTracker::new();
    let mut out = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = rec.get(0).unwrap_or("");
        let z = parse_f64(rec.get(1).unwrap_or(""), "zhat", line)?;
        let zhat = ZHat::new(z).map_err(|_| PipelineError::Range {
            line,
            message: "zhat is not finite".into(),
        })?;
        ids.admit(id, line)?;
        out.push(ZHatRecord {
            image_id: id.to_string(),
            zhat,
        });
    }
    Ok(out)
}

pub fn load_zhat_csv(path: &Path) -> Result<Vec<ZHatRecord>, PipelineError> {
    read_zhat_csv(File::open(path)?)
}

/// Reads `features.csv` (`image_id,f0..f{d-1}`) into ids and an `n × d` matrix.
pub fn read_features_csv<R: Read>(input: R) -> Result<(Vec<String>, DMatrix<f64>), PipelineError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let d = headers.len().saturating_sub(1);
    let well_formed = headers.get(0) == Some("image_id")
        && d > 0
        && headers
            .iter()
            .skip(1)
            .enumerate()
            .all(|(i, h)| h == format!("f{i}"));
    if !well_formed {
        return Err(PipelineError::Parse {
            line: 1,
            message: "expected header image_id,f0..f{d-1}".into(),
        });
    }
    let mut ids = IdTracker::new();
    let mut names = Vec::new();
    let mut data = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = rec.get(0).unwrap_or("");
        for j in 0..d {
            let v = parse_f64(rec.get(j + 1).unwrap_or(""), "feature", line)?;
            if !v.is_finite() {
                return Err(PipelineError::Range {
                    line,
                    message: "feature is not finite".into(),
                });
            }
            data.push(v);
        }
        ids.admit(id, line)?;
        names.push(id.to_string());
    }
    let n = names.len();
    Ok((names, DMatrix::from_row_slice(n, d, &data)))
}

pub fn load_features_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>), PipelineError> {
    read_features_csv(File::open(path)?)
}

/// A row present in every input.
#[derive(Debug, Clone, PartialEq)]
pub struct JoinedRow {
    pub image_id: String,
    pub av: AVPoint,
    /// Zero when no `zhat` input was given.
    pub zhat: ZHat,
    pub activation: AuActivation,
}

impl JoinedRow {
    /// Observed activations restricted to the relevant units.
    pub fn observed_aus(&self) -> [f64; RELEVANT_COUNT] {
        restrict_activation(&self.activation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinOutcome {
    pub rows: Vec<JoinedRow>,
    /// Ids missing from at least one input, in first-seen order
    /// (AV file, then AU file, then Ẑ file).
    pub unmatched: Vec<String>,
}

/// Inner join on `image_id`, ordered as the AV records.
pub fn join_labels(
    av: &[AvLabelRecord],
    au: &[AuProbRecord],
    zhat: Option<&[ZHatRecord]>,
) -> Result<JoinOutcome, PipelineError> {
    let au_by_id: HashMap<&str, &AuProbRecord> =
        au.iter().map(|r| (r.image_id.as_str(), r)).collect();
    let z_by_id: Option<HashMap<&str, ZHat>> =
        zhat.map(|zs| zs.iter().map(|r| (r.image_id.as_str(), r.zhat)).collect());

    let mut rows = Vec::new();
    let mut unmatched = Vec::new();
    let mut reported = HashSet::new();
    let mut report = |id: &str, unmatched: &mut Vec<String>| {
        if reported.insert(id.to_string()) {
            unmatched.push(id.to_string());
        }
    };

    for rec in av {
        let id = rec.image_id.as_str();
        let z = match &z_by_id {
            Some(map) => map.get(id).copied(),
            None => Some(ZHat::new(0.0).expect("zero is finite")),
        };
        match (au_by_id.get(id), z) {
            (Some(au_rec), Some(zhat)) => rows.push(JoinedRow {
                image_id: rec.image_id.clone(),
                av: rec.av(),
                zhat,
                activation: au_rec.activation.clone(),
            }),
            _ => report(id, &mut unmatched),
        }
    }
    let joined: HashSet<&str> = rows.iter().map(|r| r.image_id.as_str()).collect();
    for rec in au {
        if !joined.contains(rec.image_id.as_str()) {
            report(&rec.image_id, &mut unmatched);
        }
    }
    if let Some(zs) = zhat {
        for rec in zs {
            if !joined.contains(rec.image_id.as_str()) {
                report(&rec.image_id, &mut unmatched);
            }
        }
    }
    if rows.is_empty() {
        return Err(PipelineError::EmptyJoin);
    }
    Ok(JoinOutcome { rows, unmatched })
}

/// A fully labelled training condition.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCondition {
    pub image_id: String,
    pub y: C2A2Point,
    pub region: Category,
    pub au_target: AuTarget,
}

/// Composes `Y = [A, V, Ẑ]`, labels its region and builds the AU target at
/// intensity `‖Y‖`.
pub fn pseudolabel(
    rows: &[JoinedRow],
    frame: &AxisFrame,
) -> Result<Vec<LabeledCondition>, PipelineError> {
    rows.iter()
        .map(|row| {
            let y = compose_z_label(row.av, row.zhat);
            y.validate().map_err(|source| PipelineError::Row {
                id: row.image_id.clone(),
                source,
            })?;
            let region = c2a2_region_label(&y, frame);
            Ok(LabeledCondition {
                image_id: row.image_id.clone(),
                y,
                region,
                au_target: make_au_target(region, y.norm()),
            })
        })
        .collect()
}

/// Writes `labels_out.csv`: `image_id,a,v,z,region,t1..t15`.
pub fn write_labels_csv<W: Write>(
    mut out: W,
    labels: &[LabeledCondition],
) -> Result<(), PipelineError> {
    let mut header = String::from("image_id,a,v,z,region");
    for i in 1..=RELEVANT_COUNT {
        header.push_str(&format!(",t{i}"));
    }
    writeln!(out, "{header}")?;
    for l in labels {
        write!(
            out,
            "{},{},{},{},{}",
            l.image_id,
            g17(l.y.a),
            g17(l.y.v),
            g17(l.y.z),
            l.region.name()
        )?;
        for t in l.au_target.as_slice() {
            write!(out, ",{}", g17(*t))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// One row of a `labels_out.csv` file read back.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRow {
    pub image_id: String,
    pub y: [f64; 3],
    pub region: String,
    pub targets: [f64; RELEVANT_COUNT],
}

pub fn read_labels_csv<R: Read>(input: R) -> Result<Vec<LabelRow>, PipelineError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    expect_header(&headers, &["image_id", "a", "v", "z", "region"], 1)?;
    if headers.len() != 5 + RELEVANT_COUNT {
        return Err(PipelineError::Parse {
            line: 1,
            message: "expected 15 target columns".into(),
        });
    }
    let mut ids = IdTracker::new();
    let mut out = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = rec.get(0).unwrap_or("");
        let mut y = [0.0; 3];
        for (j, slot) in y.iter_mut().enumerate() {
            *slot = parse_f64(rec.get(j + 1).unwrap_or(""), "coordinate", line)?;
        }
        let mut targets = [0.0; RELEVANT_COUNT];
        for (j, slot) in targets.iter_mut().enumerate() {
            *slot = parse_f64(rec.get(j + 5).unwrap_or(""), "target", line)?;
        }
        ids.admit(id, line)?;
        out.push(LabelRow {
            image_id: id.to_string(),
            y,
            region: rec.get(4).unwrap_or("").to_string(),
            targets,
        });
    }
    Ok(out)
}

/// One row of a discriminator prediction file:
/// `image_id,a,v[,z],p1..p15`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub image_id: String,
    pub coords: Vec<f64>,
    pub au: [f64; RELEVANT_COUNT],
}

pub fn read_predictions_csv<R: Read>(input: R) -> Result<Vec<PredictionRow>, PipelineError> {
    let mut rdr = reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let coord_cols = if headers.get(3) == Some("z") { 3 } else { 2 };
    expect_header(&headers, &["image_id", "a", "v"], 1)?;
    if headers.len() != 1 + coord_cols + RELEVANT_COUNT {
        return Err(PipelineError::Parse {
            line: 1,
            message: "expected image_id,a,v[,z],p1..p15".into(),
        });
    }
    let mut ids = IdTracker::new();
    let mut out = Vec::new();
    for result in rdr.records() {
        let rec = result.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let id = rec.get(0).unwrap_or("");
        let coords = (1..=coord_cols)
            .map(|j| parse_f64(rec.get(j).unwrap_or(""), "coordinate", line))
            .collect::<Result<Vec<_>, _>>()?;
        let mut au = [0.0; RELEVANT_COUNT];
        for (j, slot) in au.iter_mut().enumerate() {
            *slot = parse_f64(
                rec.get(1 + coord_cols + j).unwrap_or(""),
                "probability",
                line,
            )?;
        }
        ids.admit(id, line)?;
        out.push(PredictionRow {
            image_id: id.to_string(),
            coords,
            au,
        });
    }
    Ok(out)
}

/// Parameters of a conditioning grid.
#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// One circle scan per `z` level.
    Circle {
        z_levels: Vec<f64>,
        n_theta: usize,
        radius: f64,
    },
    /// Points along each basic axis at `k / n_steps` intensity.
    AxisRays { n_steps: usize },
}

/// A row of `conditions.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRow {
    pub theta: f64,
    pub y: C2A2Point,
}

pub fn condition_grid(spec: &GridSpec, frame: &AxisFrame) -> Result<Vec<GridRow>, PipelineError> {
    match spec {
        GridSpec::Circle {
            z_levels,
            n_theta,
            radius,
        } => {
            let mut rows = Vec::with_capacity(z_levels.len() * n_theta);
            for &z in z_levels {
                rows.extend(
                    circle_scan(z, *n_theta, *radius)?
                        .into_iter()
                        .map(|(theta, y)| GridRow { theta, y }),
                );
            }
            Ok(rows)
        }
        GridSpec::AxisRays { n_steps } => {
            if *n_steps == 0 {
                return Err(
                    SpaceError::InvalidArgument("n_steps must be at least 1".into()).into(),
                );
            }
            Ok(axis_rays(frame, *n_steps)
                .into_iter()
                .map(|(e, y)| GridRow {
                    theta: frame.azimuth(e).expect("axis emotion"),
                    y,
                })
                .collect())
        }
    }
}

/// Writes `conditions.csv`: `idx,theta,a,v,z`.
pub fn write_conditions_csv<W: Write>(mut out: W, rows: &[GridRow]) -> Result<(), PipelineError> {
    writeln!(out, "idx,theta,a,v,z")?;
    for (i, r) in rows.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            i,
            g17(r.theta),
            g17(r.y.a),
            g17(r.y.v),
            g17(r.y.z)
        )?;
    }
    Ok(())
}

pub fn emit_condition_grid(
    spec: &GridSpec,
    frame: &AxisFrame,
    out_path: &Path,
) -> Result<usize, PipelineError> {
    let rows = condition_grid(spec, frame)?;
    let mut w = BufWriter::new(File::create(out_path)?);
    write_conditions_csv(&mut w, &rows)?;
    w.flush()?;
    Ok(rows.len())
}

/// Calibration samples from AV records carrying a basic category.
pub fn calibration_samples(labels: &AvLabels) -> Vec<(BasicEmotion, AVPoint)> {
    labels
        .records
        .iter()
        .filter_map(|r| r.category.map(|c| (c, r.av())))
        .collect()
}
