//! Number encoder: an MLP lifting an emotion condition into the 768-wide
//! text-embedding space, fused with a token sequence by appending one token.
//!
//! Hidden layers use `tanh`, which is odd and fixes zero; the output layer
//! is affine and starts at zero so the appended token is initially null.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::space::C2A2Point;

pub const INPUT_DIM: usize = 3;
pub const EMBED_DIM: usize = 768;
pub const DEFAULT_DIMS: [usize; 4] = [3, 64, 256, 768];

const MAGIC: &[u8; 8] = b"C2A2MLP1";

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("invalid layer dims {0:?}: must start at 3 and end at 768")]
    InvalidDims(Vec<usize>),
    #[error("non-finite value in forward pass")]
    NonFinite,
    #[error("loss diverged at step {step}")]
    DivergenceDetected { step: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("malformed parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Weights `W_l` (out × in) and biases `b_l` of each affine layer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    dims: Vec<usize>,
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
}

fn check_dims(dims: &[usize]) -> Result<(), EncoderError> {
    let ok = dims.len() >= 2
        && dims[0] == INPUT_DIM
        && dims[dims.len() - 1] == EMBED_DIM
        && dims.iter().all(|&d| d > 0);
    if ok {
        Ok(())
    } else {
        Err(EncoderError::InvalidDims(dims.to_vec()))
    }
}

impl MlpParams {
    /// Glorot-uniform hidden layers with zero biases; the output layer is
    /// all zeros.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self, EncoderError> {
        let mut params = Self::init_random(dims, seed)?;
        let last = params.weights.len() - 1;
        params.weights[last].fill(0.0);
        Ok(params)
    }

    /// Glorot-uniform weights on every layer, output layer included.
    pub fn init_random(dims: &[usize], seed: u64) -> Result<Self, EncoderError> {
        check_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::with_capacity(dims.len() - 1);
        let mut biases = Vec::with_capacity(dims.len() - 1);
        for pair in dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(DMatrix::from_fn(fan_out, fan_in, |_, _| {
                rng.random_range(-limit..limit)
            }));
            biases.push(DVector::zeros(fan_out));
        }
        Ok(MlpParams {
            dims: dims.to_vec(),
            weights,
            biases,
        })
    }

    pub fn from_parts(
        weights: Vec<DMatrix<f64>>,
        biases: Vec<DVector<f64>>,
    ) -> Result<Self, EncoderError> {
        if weights.is_empty() || weights.len() != biases.len() {
            return Err(EncoderError::Shape(
                "need one bias per weight matrix".into(),
            ));
        }
        let mut dims = vec![weights[0].ncols()];
        for (i, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if w.ncols() != dims[i] || b.len() != w.nrows() {
                return Err(EncoderError::Shape(format!("layer {i} does not chain")));
            }
            if !w.iter().chain(b.iter()).all(|x| x.is_finite()) {
                return Err(EncoderError::NonFinite);
            }
            dims.push(w.nrows());
        }
        check_dims(&dims)?;
        Ok(MlpParams {
            dims,
            weights,
            biases,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn weights(&self) -> &[DMatrix<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[DVector<f64>] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [DMatrix<f64>] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [DVector<f64>] {
        &mut self.biases
    }

    pub fn layer_count(&self) -> usize {
        self.weights.len()
    }

    /// Binary layout: magic `C2A2MLP1`, layer count and every dim as
    /// little-endian u32, then per layer the row-major f64 weight matrix
    /// followed by its bias vector.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), EncoderError> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.layer_count() as u32).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for (weights, bias) in self.weights.iter().zip(&self.biases) {
            for r in 0..weights.nrows() {
                for c in 0..weights.ncols() {
                    w.write_all(&weights[(r, c)].to_le_bytes())?;
                }
            }
            for x in bias.iter() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, EncoderError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(EncoderError::Format("bad magic".into()));
        }
        let layers = read_u32(&mut r)? as usize;
        if layers == 0 || layers > 64 {
            return Err(EncoderError::Format(format!(
                "implausible layer count {layers}"
            )));
        }
        let dims = (0..=layers)
            .map(|_| read_u32(&mut r).map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        check_dims(&dims)?;
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for pair in dims.windows(2) {
            let (cols, rows) = (pair[0], pair[1]);
            let mut data = vec![0.0; rows * cols];
            for x in data.iter_mut() {
                *x = read_f64(&mut r)?;
            }
            weights.push(DMatrix::from_row_slice(rows, cols, &data));
            let bias = (0..rows)
                .map(|_| read_f64(&mut r))
                .collect::<Result<Vec<_>, _>>()?;
            biases.push(DVector::from_vec(bias));
        }
        Self::from_parts(weights, biases)
    }

    /// Flattened parameters in file order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for r in 0..w.nrows() {
                out.extend(w.row(r).iter());
            }
            out.extend(b.iter());
        }
        out
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, EncoderError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, EncoderError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionEmbedding(DVector<f64>);

impl EmotionEmbedding {
    pub fn values(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn zeros() -> Self {
        EmotionEmbedding(DVector::zeros(EMBED_DIM))
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self, EncoderError> {
        if values.len() != EMBED_DIM {
            return Err(EncoderError::Shape(format!(
                "embedding has {} values",
                values.len()
            )));
        }
        if !values.iter().all(|x| x.is_finite()) {
            return Err(EncoderError::NonFinite);
        }
        Ok(EmotionEmbedding(DVector::from_vec(values)))
    }
}

/// `L × 768` token embeddings, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    data: Vec<f64>,
}

impl TokenSequence {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, EncoderError> {
        if rows.is_empty() {
            return Err(EncoderError::Shape(
                "token sequence needs at least one token".into(),
            ));
        }
        let mut data = Vec::with_capacity(rows.len() * EMBED_DIM);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != EMBED_DIM {
                return Err(EncoderError::Shape(format!(
                    "token {i} has width {}",
                    row.len()
                )));
            }
            if !row.iter().all(|x| x.is_finite()) {
                return Err(EncoderError::NonFinite);
            }
            data.extend_from_slice(row);
        }
        Ok(TokenSequence { data })
    }

    pub fn len(&self) -> usize {
        self.data.len() / EMBED_DIM
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn token(&self, i: usize) -> &[f64] {
        &self.data[i * EMBED_DIM..(i + 1) * EMBED_DIM]
    }

    /// Drops the final token. `None` if only one is left.
    pub fn without_last(&self) -> Option<TokenSequence> {
        (self.len() > 1).then(|| TokenSequence {
            data: self.data[..self.data.len() - EMBED_DIM].to_vec(),
        })
    }
}

/// Appends the emotion embedding as the final token.
pub fn fuse(text: &TokenSequence, e: &EmotionEmbedding) -> TokenSequence {
    let mut data = Vec::with_capacity(text.data.len() + EMBED_DIM);
    data.extend_from_slice(&text.data);
    data.extend_from_slice(e.values());
    TokenSequence { data }
}

/// Pre- and post-activation values of every layer.
struct Trace {
    /// `inputs[l]` feeds layer `l`; the last entry is the network output.
    inputs: Vec<DVector<f64>>,
}

fn forward(y: &[f64; 3], params: &MlpParams) -> Trace {
    let mut inputs = Vec::with_capacity(params.layer_count() + 1);
    inputs.push(DVector::from_column_slice(y));
    let last = params.layer_count() - 1;
    for (l, (w, b)) in params.weights.iter().zip(&params.biases).enumerate() {
        let mut z = w * &inputs[l] + b;
        if l < last {
            z.apply(|x| *x = x.tanh());
        }
        inputs.push(z);
    }
    Trace { inputs }
}

pub fn encode_emotion(y: &C2A2Point, params: &MlpParams) -> Result<EmotionEmbedding, EncoderError> {
    let mut trace = forward(&[y.a, y.v, y.z], params);
    let out = trace.inputs.pop().expect("trace has an output");
    if !out.iter().all(|x| x.is_finite()) {
        return Err(EncoderError::NonFinite);
    }
    Ok(EmotionEmbedding(out))
}

/// Gradients of a scalar objective w.r.t. every parameter and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    pub input: [f64; 3],
}

/// Reverse-mode gradients given `upstream = ∂objective/∂embedding`.
pub fn encoder_backward(
    y: &C2A2Point,
    params: &MlpParams,
    upstream: &[f64],
) -> Result<EncoderGradients, EncoderError> {
    if upstream.len() != EMBED_DIM {
        return Err(EncoderError::Shape(format!(
            "upstream gradient has {} values",
            upstream.len()
        )));
    }
    let trace = forward(&[y.a, y.v, y.z], params);
    Ok(backward(
        &trace,
        params,
        DVector::from_column_slice(upstream),
    ))
}

fn backward(trace: &Trace, params: &MlpParams, upstream: DVector<f64>) -> EncoderGradients {
    let mut weights: Vec<DMatrix<f64>> = params
        .weights
        .iter()
        .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
        .collect();
    let mut biases: Vec<DVector<f64>> = params
        .biases
        .iter()
        .map(|b| DVector::zeros(b.len()))
        .collect();
    let input = accumulate_backward(trace, params, upstream, &mut weights, &mut biases);
    EncoderGradients {
        weights,
        biases,
        input,
    }
}

/// Adds this sample's parameter gradients into `weights`/`biases` and
/// returns the input gradient.
fn accumulate_backward(
    trace: &Trace,
    params: &MlpParams,
    upstream: DVector<f64>,
    weights: &mut [DMatrix<f64>],
    biases: &mut [DVector<f64>],
) -> [f64; 3] {
    // delta = ∂objective/∂(pre-activation of the current layer)
    let mut delta = upstream;
    for l in (0..params.layer_count()).rev() {
        weights[l].ger(1.0, &delta, &trace.inputs[l], 1.0);
        biases[l] += &delta;
        let mut back = params.weights[l].tr_mul(&delta);
        if l > 0 {
            // inputs[l] = tanh(pre); d tanh = 1 - tanh²
            back.zip_apply(&trace.inputs[l], |g, h| *g *= 1.0 - h * h);
        }
        delta = back;
    }
    [delta[0], delta[1], delta[2]]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub steps: usize,
    pub learning_rate: f64,
    /// Mini-batch size; `None` trains on the full dataset every step.
    pub batch_size: Option<usize>,
    pub seed: u64,
}

/// Mean over samples and embedding coordinates of the squared error.
pub fn regression_loss(
    dataset: &[(C2A2Point, Vec<f64>)],
    params: &MlpParams,
) -> Result<f64, EncoderError> {
    if dataset.is_empty() {
        return Err(EncoderError::EmptyDataset);
    }
    let mut total = 0.0;
    for (y, target) in dataset {
        let out = encode_emotion(y, params)?;
        total += out
            .values()
            .iter()
            .zip(target)
            .map(|(o, t)| (o - t) * (o - t))
            .sum::<f64>();
    }
    Ok(total / (dataset.len() * EMBED_DIM) as f64)
}

/// Plain gradient descent on [`regression_loss`]. The returned curve holds
/// the full-dataset loss before each step.
pub fn train_toy_regression(
    dataset: &[(C2A2Point, Vec<f64>)],
    mut params: MlpParams,
    config: TrainConfig,
) -> Result<(MlpParams, Vec<f64>), EncoderError> {
    if dataset.is_empty() {
        return Err(EncoderError::EmptyDataset);
    }
    if let Some((i, _)) = dataset
        .iter()
        .enumerate()
        .find(|(_, (_, t))| t.len() != EMBED_DIM)
    {
        return Err(EncoderError::Shape(format!("target {i} is not 768 wide")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let batch = config
        .batch_size
        .unwrap_or(dataset.len())
        .clamp(1, dataset.len());
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut cursor = dataset.len();
    let mut curve = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        let loss = match regression_loss(dataset, &params) {
            Ok(l) if l.is_finite() => l,
            Ok(_) | Err(EncoderError::NonFinite) => {
                return Err(EncoderError::DivergenceDetected { step })
            }
            Err(e) => return Err(e),
        };
        curve.push(loss);

        let mut picked = Vec::with_capacity(batch);
        if batch == dataset.len() {
            picked.extend(0..dataset.len());
        } else {
            for _ in 0..batch {
                if cursor == order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                picked.push(order[cursor]);
                cursor += 1;
            }
        }

        let scale = 2.0 / (picked.len() * EMBED_DIM) as f64;
        let mut grad_w: Vec<DMatrix<f64>> = params
            .weights
            .iter()
            .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
            .collect();
        let mut grad_b: Vec<DVector<f64>> = params
            .biases
            .iter()
            .map(|b| DVector::zeros(b.len()))
            .collect();
        for &i in &picked {
            let (y, target) = &dataset[i];
            let trace = forward(&[y.a, y.v, y.z], &params);
            let out = trace.inputs.last().expect("trace has an output");
            let upstream = DVector::from_fn(EMBED_DIM, |k, _| scale * (out[k] - target[k]));
            accumulate_backward(&trace, &params, upstream, &mut grad_w, &mut grad_b);
        }
        for (w, g) in params.weights.iter_mut().zip(&grad_w) {
            w.zip_apply(g, |wi, gi| *wi -= config.learning_rate * gi);
        }
        for (b, g) in params.biases.iter_mut().zip(&grad_b) {
            b.axpy(-config.learning_rate, g, 1.0);
        }
    }
    Ok((params, curve))
}
