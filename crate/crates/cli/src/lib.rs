//! The `c2a2` command-line tool.
//!
//! Exit codes: 0 on success, 1 on validation or usage errors, 2 on I/O
//! errors. Diagnostics go to stderr; data goes to `--out` or stdout.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use c2a2_core::au::{au_table_csv, c2a2_region_label, category_to_aus};
use c2a2_core::emotion::{BasicEmotion, Category, EmotionModel};
use c2a2_core::fmt::g17;
use c2a2_core::losses::{batch_loss, CoordPrediction, LossSample, LossWeights};
use c2a2_core::metrics::{
    default_directions, ere, fed, smoothness, ConditionSpace, SyntheticOracle,
};
use c2a2_core::pipeline::{
    calibration_samples, condition_grid, join_labels, load_au_csv, load_av_csv, load_features_csv,
    load_zhat_csv, pseudolabel, read_labels_csv, read_predictions_csv, write_conditions_csv,
    write_labels_csv, GridSpec, PipelineError,
};
use c2a2_core::space::{
    calibrate_axes, nearest_emotion, polar_to_av, sample_conditions, wrap_angle, AVPoint,
    AxisFrame, C2A2Point, PolarCondition, SamplingMode, SpaceError, DEFAULT_JITTER_DEG,
    DEFAULT_NEUTRAL_RHO,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "c2a2", version, about = "Unified 3D emotion space toolkit")]
pub struct Cli {
    /// Seed for every sampling step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Axis frame JSON; a reference frame is used when omitted.
    #[arg(long, global = true)]
    frame: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Mode::ThreeD)]
    mode: Mode,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Calibrate basic-emotion axes from categorised AV labels.
    Calibrate {
        #[arg(long)]
        av: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NEUTRAL_RHO)]
        neutral_rho: f64,
    },
    /// Turn AV labels, AU activations and optional Ẑ into training labels.
    Pseudolabel {
        #[arg(long)]
        av: PathBuf,
        #[arg(long)]
        au: PathBuf,
        #[arg(long)]
        zhat: Option<PathBuf>,
    },
    /// Convert between categories, AU sets and points.
    Map(MapArgs),
    /// Draw emotion conditions.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_JITTER_DEG)]
        jitter_deg: f64,
    },
    /// Emit a conditioning grid (`conditions.csv`).
    Grid(GridArgs),
    /// Loss evaluation.
    Losses {
        #[command(subcommand)]
        action: LossesAction,
    },
    /// Fréchet emotion distance between two feature files.
    Fed {
        #[arg(long)]
        real: PathBuf,
        #[arg(long)]
        gen: PathBuf,
    },
    /// Emotion reconstruction error against the synthetic oracle.
    Ere {
        #[arg(long, default_value_t = 500)]
        budget: usize,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 10.0)]
        sharpness: f64,
        /// Comma-separated basic emotions; all six by default.
        #[arg(long)]
        targets: Option<String>,
    },
    /// Smoothness score along the basic axes against the synthetic oracle.
    Smoothness {
        #[arg(long, default_value_t = 10)]
        steps: usize,
        #[arg(long, default_value_t = 10.0)]
        sharpness: f64,
    },
    /// Print the category/AU table as CSV.
    AuTable,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct MapArgs {
    /// Category name, e.g. "fearfully disgusted".
    #[arg(long)]
    category: Option<String>,
    /// Point `a,v,z`.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Polar AV condition `theta_deg,rho`.
    #[arg(long, allow_hyphen_values = true)]
    polar: Option<String>,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Comma-separated z levels of the circle scans.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    z_levels: String,
    #[arg(long, default_value_t = 10)]
    n_theta: usize,
    #[arg(long, default_value_t = 0.6)]
    radius: f64,
    /// Emit rays along the basic axes with this many steps instead of circles.
    #[arg(long)]
    rays: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum LossesAction {
    /// Mean AV and AU losses of predictions against a labels file.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        lambda_av: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda_au: f64,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        match e {
            SpaceError::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    1
                }
            };
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn open_output<'a>(
    out: &Option<PathBuf>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, CliError> {
    match out {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(stdout)),
    }
}

fn load_frame(path: &Option<PathBuf>, stderr: &mut dyn Write) -> Result<AxisFrame, CliError> {
    match path {
        Some(p) => {
            let file = File::open(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(AxisFrame::read_json(file)?)
        }
        None => {
            let _ = writeln!(stderr, "note: no --frame given, using the reference frame");
            Ok(AxisFrame::reference())
        }
    }
}

fn parse_floats(text: &str, expected: Option<usize>, what: &str) -> Result<Vec<f64>, CliError> {
    let values = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| invalid(format!("{what}: `{s}` is not a number")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(n) = expected {
        if values.len() != n {
            return Err(invalid(format!(
                "{what}: expected {n} comma-separated values"
            )));
        }
    }
    Ok(values)
}

fn json_ids(ids: &[u8]) -> String {
    let parts: Vec<String> = ids.iter().map(u8::to_string).collect();
    format!("[{}]", parts.join(","))
}

fn metric_json(name: &str, value: f64, n: usize, seed: u64) -> String {
    format!(
        "{{\"metric\":\"{name}\",\"value\":{},\"n\":{n},\"seed\":{seed}}}\n",
        g17(value)
    )
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::AuTable => {
            let mut out = open_output(&cli.out, stdout)?;
            out.write_all(au_table_csv().as_bytes())?;
            out.flush()?;
        }
        Command::Calibrate { av, neutral_rho } => {
            let labels = load_av_csv(av)?;
            if labels.dropped_contempt > 0 {
                let _ = writeln!(
                    stderr,
                    "warning: dropped {} contempt rows",
                    labels.dropped_contempt
                );
            }
            let frame = calibrate_axes(&calibration_samples(&labels), *neutral_rho)?;
            let mut out = open_output(&cli.out, stdout)?;
            frame.write_json(&mut out)?;
            out.flush()?;
        }
        Command::Pseudolabel { av, au, zhat } => {
            let frame = load_frame(&cli.frame, stderr)?;
            let labels = load_av_csv(av)?;
            if labels.dropped_contempt > 0 {
                let _ = writeln!(
                    stderr,
                    "warning: dropped {} contempt rows",
                    labels.dropped_contempt
                );
            }
            let activations = load_au_csv(au)?;
            let zhats = match (zhat, cli.mode) {
                (Some(path), Mode::ThreeD) => Some(load_zhat_csv(path)?),
                (Some(_), Mode::TwoD) => {
                    let _ = writeln!(stderr, "note: --mode 2d ignores --zhat");
                    None
                }
                (None, _) => None,
            };
            let joined = join_labels(&labels.records, &activations, zhats.as_deref())?;
            if !joined.unmatched.is_empty() {
                let _ = writeln!(
                    stderr,
                    "warning: {} unmatched ids: {}",
                    joined.unmatched.len(),
                    joined.unmatched.join(",")
                );
            }
            let rows = pseudolabel(&joined.rows, &frame)?;
            let mut out = open_output(&cli.out, stdout)?;
            write_labels_csv(&mut out, &rows)?;
            out.flush()?;
            let _ = writeln!(stderr, "labelled {} rows", rows.len());
        }
        Command::Map(args) => {
            let frame_needed = args.category.is_none();
            let frame = if frame_needed {
                Some(load_frame(&cli.frame, stderr)?)
            } else {
                None
            };
            let json = if let Some(name) = &args.category {
                map_category(name)?
            } else if let Some(text) = &args.point {
                let v = parse_floats(text, Some(3), "--point")?;
                map_point(
                    C2A2Point::new(v[0], v[1], v[2])?,
                    frame.as_ref().expect("frame loaded"),
                )
            } else if let Some(text) = &args.polar {
                let v = parse_floats(text, Some(2), "--polar")?;
                let polar = PolarCondition::new(wrap_angle(v[0].to_radians()), v[1])?;
                map_point(
                    C2A2Point::from_av(polar_to_av(polar)),
                    frame.as_ref().expect("frame loaded"),
                )
            } else {
                unreachable!("clap enforces one of the map arguments")
            };
            let mut out = open_output(&cli.out, stdout)?;
            out.write_all(json.as_bytes())?;
            out.flush()?;
        }
        Command::Sample { n, jitter_deg } => {
            let frame = load_frame(&cli.frame, stderr)?;
            let mode = match cli.mode {
                Mode::TwoD => SamplingMode::Uniform2D,
                Mode::ThreeD => SamplingMode::AxisProximity3D,
            };
            let points = sample_conditions(mode, *n, cli.seed, &frame, *jitter_deg)?;
            let mut out = open_output(&cli.out, stdout)?;
            writeln!(out, "idx,a,v,z")?;
            for (i, p) in points.iter().enumerate() {
                writeln!(out, "{i},{},{},{}", g17(p.a), g17(p.v), g17(p.z))?;
            }
            out.flush()?;
        }
        Command::Grid(args) => {
            let frame = load_frame(&cli.frame, stderr)?;
            let spec = match args.rays {
                Some(n_steps) => GridSpec::AxisRays { n_steps },
                None => GridSpec::Circle {
                    z_levels: parse_floats(&args.z_levels, None, "--z-levels")?,
                    n_theta: args.n_theta,
                    radius: args.radius,
                },
            };
            let rows = condition_grid(&spec, &frame)?;
            let mut out = open_output(&cli.out, stdout)?;
            write_conditions_csv(&mut out, &rows)?;
            out.flush()?;
        }
        Command::Losses {
            action:
                LossesAction::Eval {
                    pred,
                    labels,
                    lambda_av,
                    lambda_au,
                },
        } => {
            let json = eval_losses(
                pred,
                labels,
                LossWeights {
                    av: *lambda_av,
                    au: *lambda_au,
                },
            )?;
            let mut out = open_output(&cli.out, stdout)?;
            out.write_all(json.as_bytes())?;
            out.flush()?;
        }
        Command::Fed { real, gen } => {
            let (_, real_m) = load_features_csv(real)?;
            let (_, gen_m) = load_features_csv(gen)?;
            let value = fed(&real_m, &gen_m).map_err(|e| invalid(e.to_string()))?;
            let mut out = open_output(&cli.out, stdout)?;
            out.write_all(metric_json("fed", value, gen_m.nrows(), cli.seed).as_bytes())?;
            out.flush()?;
        }
        Command::Ere {
            budget,
            runs,
            sharpness,
            targets,
        } => {
            let frame = load_frame(&cli.frame, stderr)?;
            let targets: Vec<BasicEmotion> = match targets {
                Some(list) => list
                    .split(',')
                    .map(|s| {
                        s.parse::<BasicEmotion>()
                            .map_err(|e| invalid(e.to_string()))
                    })
                    .collect::<Result<_, _>>()?,
                None => BasicEmotion::AXES.to_vec(),
            };
            let oracle = synthetic_oracle(&frame, *sharpness)?;
            let space = match cli.mode {
                Mode::TwoD => ConditionSpace::TwoD,
                Mode::ThreeD => ConditionSpace::ThreeD,
            };
            let value = ere(&oracle, &targets, *budget, *runs, cli.seed, &frame, space)
                .map_err(|e| invalid(e.to_string()))?;
            let mut out = open_output(&cli.out, stdout)?;
            out.write_all(metric_json("ere", value, *budget, cli.seed).as_bytes())?;
            out.flush()?;
        }
        Command::Smoothness { steps, sharpness } => {
            let frame = load_frame(&cli.frame, stderr)?;
            let oracle = synthetic_oracle(&frame, *sharpness)?;
            let value = smoothness(&oracle, *steps, &default_directions(&frame))
                .map_err(|e| invalid(e.to_string()))?;
            let mut out = open_output(&cli.out, stdout)?;
            out.write_all(metric_json("smoothness", value, *steps, cli.seed).as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn synthetic_oracle(frame: &AxisFrame, sharpness: f64) -> Result<SyntheticOracle, CliError> {
    if !(sharpness > 0.0 && sharpness.is_finite()) {
        return Err(invalid("--sharpness must be positive"));
    }
    Ok(SyntheticOracle::new(frame.clone(), sharpness))
}

fn map_category(name: &str) -> Result<String, CliError> {
    let cat: Category = name
        .parse()
        .map_err(|e: c2a2_core::emotion::UnknownCategory| invalid(e.to_string()))?;
    let ids = match cat {
        c if c.is_neutral() => Vec::new(),
        c => category_to_aus(c)
            .map_err(|e| invalid(e.to_string()))?
            .ids(),
    };
    let (two, three) = match cat {
        Category::Basic(_) => (true, true),
        Category::Compound(c) => (
            c.is_representable(EmotionModel::TwoD),
            c.is_representable(EmotionModel::ThreeD),
        ),
    };
    Ok(format!(
        "{{\"aus\":{},\"representable_2d\":{two},\"representable_3d\":{three}}}\n",
        json_ids(&ids)
    ))
}

fn map_point(y: C2A2Point, frame: &AxisFrame) -> String {
    let (nearest, intensity) = nearest_emotion(&y, frame);
    let region = c2a2_region_label(&y, frame);
    let aus = if region.is_neutral() {
        Vec::new()
    } else {
        category_to_aus(region).map(|s| s.ids()).unwrap_or_default()
    };
    format!(
        "{{\"a\":{},\"v\":{},\"z\":{},\"nearest\":\"{}\",\"intensity\":{},\"region\":\"{}\",\"aus\":{}}}\n",
        g17(y.a),
        g17(y.v),
        g17(y.z),
        nearest.name(),
        g17(intensity),
        region.name(),
        json_ids(&aus)
    )
}

fn eval_losses(pred: &Path, labels: &Path, weights: LossWeights) -> Result<String, CliError> {
    let open = |p: &Path| File::open(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())));
    let preds = read_predictions_csv(open(pred)?)?;
    let labels = read_labels_csv(open(labels)?)?;
    let by_id: std::collections::HashMap<&str, &c2a2_core::pipeline::LabelRow> =
        labels.iter().map(|l| (l.image_id.as_str(), l)).collect();
    let mut samples = Vec::with_capacity(preds.len());
    for p in &preds {
        let label = by_id
            .get(p.image_id.as_str())
            .ok_or_else(|| invalid(format!("no label for `{}`", p.image_id)))?;
        let coords = CoordPrediction::from_slice(&p.coords).map_err(|e| invalid(e.to_string()))?;
        let av_label = AVPoint::new(label.y[0], label.y[1])?;
        samples.push(LossSample {
            coords,
            au_pred: &p.au,
            av_label,
            au_target: &label.targets,
        });
    }
    let b = batch_loss(&samples, weights).map_err(|e| invalid(e.to_string()))?;
    Ok(format!(
        "{{\"av_loss\":{},\"au_loss\":{},\"total\":{},\"n\":{}}}\n",
        g17(b.av),
        g17(b.au),
        g17(b.total),
        b.n
    ))
}
