//! Recurrent undercomplete autoencoder.
//!
//! An LSTM encoder reads a sequence step by step; its final hidden state is
//! mapped by a linear bottleneck to a low-dimensional embedding; an MLP
//! decoder plus a linear output head reconstruct the full sequence from the
//! embedding. Training minimizes the mean squared reconstruction error.
//!
//! Sequences are stored flat: a sequence of `T` timesteps with `input_size`
//! values per step is a `&[f64]` of length `T * input_size`, timestep-major.

mod backward;

pub use backward::{backward, gradient_check};
pub(crate) use backward::backward_any_order;

use serde::{Deserialize, Serialize};

use crate::dataset::NormStats;
use crate::error::{Error, Result};
use crate::math::rng::RngStream;
use crate::math::{logistic, Matrix};

/// Architecture sizes of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    /// Values per timestep.
    pub input_size: usize,
    /// LSTM hidden width.
    pub hidden: usize,
    /// Embedding dimension d.
    pub embed_dim: usize,
    /// Timesteps T.
    pub seq_len: usize,
}

impl ModelDims {
    /// Flat length of one sequence.
    pub fn flat_len(&self) -> usize {
        self.seq_len * self.input_size
    }
}

/// One LSTM gate: input weights, recurrent weights, bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmGate {
    /// hidden x input_size.
    pub w: Matrix,
    /// hidden x hidden.
    pub u: Matrix,
    /// hidden.
    pub b: Vec<f64>,
}

impl LstmGate {
    fn zeros(hidden: usize, input: usize) -> Self {
        LstmGate { w: Matrix::zeros(hidden, input), u: Matrix::zeros(hidden, hidden), b: vec![0.0; hidden] }
    }

    /// W x + U h + b.
    fn preactivation(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let mut a = self.w.matvec(x);
        let rec = self.u.matvec(h);
        for ((a, r), b) in a.iter_mut().zip(&rec).zip(&self.b) {
            *a += r + b;
        }
        a
    }
}

/// Parameters of the four LSTM gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub forget: LstmGate,
    pub input: LstmGate,
    pub output: LstmGate,
    pub candidate: LstmGate,
}

impl LstmParams {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        LstmParams {
            forget: LstmGate::zeros(hidden, input),
            input: LstmGate::zeros(hidden, input),
            output: LstmGate::zeros(hidden, input),
            candidate: LstmGate::zeros(hidden, input),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forget.b.len()
    }

    pub fn input_size(&self) -> usize {
        self.forget.w.cols()
    }
}

/// LSTM hidden/cell state pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zero(hidden: usize) -> Self {
        LstmState { h: vec![0.0; hidden], c: vec![0.0; hidden] }
    }
}

/// Activation applied by decoder layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::InvalidConfig(format!("unknown activation `{other}`"))),
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        })
    }
}

/// Affine map y = W x + b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Linear {
    pub fn zeros(out: usize, input: usize) -> Self {
        Linear { w: Matrix::zeros(out, input), b: vec![0.0; out] }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.w.matvec(x);
        for (y, b) in y.iter_mut().zip(&self.b) {
            *y += b;
        }
        y
    }
}

/// One decoder MLP layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderLayer {
    pub linear: Linear,
    pub activation: Activation,
}

/// Architecture configuration used to initialize a model.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    pub input_size: usize,
    pub hidden: usize,
    pub embed_dim: usize,
    pub decoder_widths: Vec<usize>,
    pub decoder_activation: Activation,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            input_size: 1,
            hidden: 32,
            embed_dim: 2,
            decoder_widths: vec![32, 32],
            decoder_activation: Activation::Tanh,
        }
    }
}

/// The full autoencoder: LSTM encoder, linear bottleneck, MLP decoder,
/// linear output head, plus the training data's normalization statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderModel {
    pub dims: ModelDims,
    pub encoder: LstmParams,
    /// embed_dim x hidden.
    pub bottleneck: Linear,
    pub decoder: Vec<DecoderLayer>,
    /// (seq_len * input_size) x last decoder width.
    pub output_head: Linear,
    pub norm: NormStats,
}

impl AutoencoderModel {
    /// Initialize with uniform [-s, s] weights, s = 1 / sqrt(fan-in), where
    /// the fan-in of a map is the total width feeding its preactivation
    /// (input_size + hidden for the LSTM gates). Draw order follows the
    /// serialized tensor order, so a seed pins the whole model.
    pub fn init(arch: &ArchConfig, seq_len: usize, norm: NormStats, rng: &mut RngStream) -> Result<Self> {
        if arch.input_size == 0 || arch.hidden == 0 || arch.embed_dim == 0 || seq_len == 0 {
            return Err(Error::InvalidConfig("model dimensions must be positive".into()));
        }
        let flat = seq_len * arch.input_size;
        if arch.embed_dim >= flat {
            return Err(Error::InvalidConfig(format!(
                "embedding dim {} must be smaller than the {flat} values per sequence",
                arch.embed_dim
            )));
        }
        let dims = ModelDims {
            input_size: arch.input_size,
            hidden: arch.hidden,
            embed_dim: arch.embed_dim,
            seq_len,
        };

        let gate_s = 1.0 / ((arch.input_size + arch.hidden) as f64).sqrt();
        let gate = |rng: &mut RngStream| LstmGate {
            w: Matrix::from_fn(arch.hidden, arch.input_size, |_, _| rng.uniform(-gate_s, gate_s)),
            u: Matrix::from_fn(arch.hidden, arch.hidden, |_, _| rng.uniform(-gate_s, gate_s)),
            b: (0..arch.hidden).map(|_| rng.uniform(-gate_s, gate_s)).collect(),
        };
        let encoder = LstmParams {
            forget: gate(rng),
            input: gate(rng),
            output: gate(rng),
            candidate: gate(rng),
        };

        let linear = |out: usize, input: usize, rng: &mut RngStream| {
            let s = 1.0 / (input as f64).sqrt();
            Linear {
                w: Matrix::from_fn(out, input, |_, _| rng.uniform(-s, s)),
                b: (0..out).map(|_| rng.uniform(-s, s)).collect(),
            }
        };
        let bottleneck = linear(arch.embed_dim, arch.hidden, rng);

        let mut decoder = Vec::with_capacity(arch.decoder_widths.len());
        let mut width = arch.embed_dim;
        for &next in &arch.decoder_widths {
            if next == 0 {
                return Err(Error::InvalidConfig("decoder width 0".into()));
            }
            decoder.push(DecoderLayer {
                linear: linear(next, width, rng),
                activation: arch.decoder_activation,
            });
            width = next;
        }
        let output_head = linear(flat, width, rng);

        Ok(AutoencoderModel { dims, encoder, bottleneck, decoder, output_head, norm })
    }

    /// Check that the layer shapes chain from the embedding to the output.
    pub fn validate(&self) -> Result<()> {
        let d = self.dims;
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::ShapeMismatch(format!("model {what} does not chain")))
            }
        };
        check(self.encoder.hidden() == d.hidden, "encoder hidden width")?;
        check(self.encoder.input_size() == d.input_size, "encoder input width")?;
        check(
            self.bottleneck.w.rows() == d.embed_dim && self.bottleneck.w.cols() == d.hidden,
            "bottleneck",
        )?;
        let mut width = d.embed_dim;
        for layer in &self.decoder {
            check(layer.linear.w.cols() == width, "decoder layer input")?;
            width = layer.linear.w.rows();
        }
        check(
            self.output_head.w.cols() == width && self.output_head.w.rows() == d.flat_len(),
            "output head",
        )?;
        if d.embed_dim >= d.flat_len() {
            return Err(Error::InvalidConfig("model is not undercomplete".into()));
        }
        Ok(())
    }

    /// All parameter tensors as flat slices, in the documented order:
    /// encoder gates (forget, input, output, candidate; each W, U, b),
    /// bottleneck (W, b), decoder layers (W, b), output head (W, b).
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for gate in [&self.encoder.forget, &self.encoder.input, &self.encoder.output, &self.encoder.candidate] {
            out.push(gate.w.as_slice());
            out.push(gate.u.as_slice());
            out.push(gate.b.as_slice());
        }
        out.push(self.bottleneck.w.as_slice());
        out.push(self.bottleneck.b.as_slice());
        for layer in &self.decoder {
            out.push(layer.linear.w.as_slice());
            out.push(layer.linear.b.as_slice());
        }
        out.push(self.output_head.w.as_slice());
        out.push(self.output_head.b.as_slice());
        out
    }

    /// Mutable view of the same tensors, same order as [`tensors`].
    ///
    /// [`tensors`]: AutoencoderModel::tensors
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for gate in [
            &mut self.encoder.forget,
            &mut self.encoder.input,
            &mut self.encoder.output,
            &mut self.encoder.candidate,
        ] {
            out.push(gate.w.as_mut_slice());
            out.push(gate.u.as_mut_slice());
            out.push(gate.b.as_mut_slice());
        }
        out.push(self.bottleneck.w.as_mut_slice());
        out.push(self.bottleneck.b.as_mut_slice());
        for layer in &mut self.decoder {
            out.push(layer.linear.w.as_mut_slice());
            out.push(layer.linear.b.as_mut_slice());
        }
        out.push(self.output_head.w.as_mut_slice());
        out.push(self.output_head.b.as_mut_slice());
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Serialize to JSON. The format is self-describing and round-trips
    /// every f64 bit-exactly.
    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)
            .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let model: AutoencoderModel = serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| Error::io(path.display().to_string(), std::io::Error::other(e)))?;
        model.validate()?;
        Ok(model)
    }
}

/// Gradients, one tensor per model parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub encoder: LstmParams,
    pub bottleneck: Linear,
    pub decoder: Vec<Linear>,
    pub output_head: Linear,
}

impl GradientSet {
    pub fn zeros_like(model: &AutoencoderModel) -> Self {
        GradientSet {
            encoder: LstmParams::zeros(model.dims.hidden, model.dims.input_size),
            bottleneck: Linear::zeros(model.bottleneck.w.rows(), model.bottleneck.w.cols()),
            decoder: model
                .decoder
                .iter()
                .map(|l| Linear::zeros(l.linear.w.rows(), l.linear.w.cols()))
                .collect(),
            output_head: Linear::zeros(model.output_head.w.rows(), model.output_head.w.cols()),
        }
    }

    /// Flat tensor views in the same order as the model's.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for gate in [&self.encoder.forget, &self.encoder.input, &self.encoder.output, &self.encoder.candidate] {
            out.push(gate.w.as_slice());
            out.push(gate.u.as_slice());
            out.push(gate.b.as_slice());
        }
        out.push(self.bottleneck.w.as_slice());
        out.push(self.bottleneck.b.as_slice());
        for layer in &self.decoder {
            out.push(layer.w.as_slice());
            out.push(layer.b.as_slice());
        }
        out.push(self.output_head.w.as_slice());
        out.push(self.output_head.b.as_slice());
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for gate in [
            &mut self.encoder.forget,
            &mut self.encoder.input,
            &mut self.encoder.output,
            &mut self.encoder.candidate,
        ] {
            out.push(gate.w.as_mut_slice());
            out.push(gate.u.as_mut_slice());
            out.push(gate.b.as_mut_slice());
        }
        out.push(self.bottleneck.w.as_mut_slice());
        out.push(self.bottleneck.b.as_mut_slice());
        for layer in &mut self.decoder {
            out.push(layer.w.as_mut_slice());
            out.push(layer.b.as_mut_slice());
        }
        out.push(self.output_head.w.as_mut_slice());
        out.push(self.output_head.b.as_mut_slice());
        out
    }

    /// self += other, elementwise.
    pub fn add_assign(&mut self, other: &GradientSet) {
        for (mine, theirs) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (a, b) in mine.iter_mut().zip(theirs) {
                *a += b;
            }
        }
    }

    /// self *= factor, elementwise.
    pub fn scale(&mut self, factor: f64) {
        for tensor in self.tensors_mut() {
            for g in tensor {
                *g *= factor;
            }
        }
    }

    /// Euclidean norm over all entries.
    pub fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// Per-step values the backward pass needs.
#[derive(Debug, Clone)]
pub(crate) struct GateCache {
    pub f: Vec<f64>,
    pub i: Vec<f64>,
    pub o: Vec<f64>,
    pub g: Vec<f64>,
    pub tanh_c: Vec<f64>,
}

/// One LSTM step together with its gate cache.
pub(crate) fn lstm_step_cached(
    params: &LstmParams,
    x_t: &[f64],
    state: &LstmState,
) -> (LstmState, GateCache) {
    let f: Vec<f64> = params.forget.preactivation(x_t, &state.h).into_iter().map(logistic).collect();
    let i: Vec<f64> = params.input.preactivation(x_t, &state.h).into_iter().map(logistic).collect();
    let o: Vec<f64> = params.output.preactivation(x_t, &state.h).into_iter().map(logistic).collect();
    let g: Vec<f64> = params.candidate.preactivation(x_t, &state.h).into_iter().map(f64::tanh).collect();

    let hidden = params.hidden();
    let mut c = vec![0.0; hidden];
    let mut tanh_c = vec![0.0; hidden];
    let mut h = vec![0.0; hidden];
    for j in 0..hidden {
        c[j] = f[j] * state.c[j] + i[j] * g[j];
        tanh_c[j] = c[j].tanh();
        h[j] = o[j] * tanh_c[j];
    }
    (LstmState { h, c }, GateCache { f, i, o, g, tanh_c })
}

/// One step of the LSTM recurrence.
///
/// Gates are logistic, the candidate is tanh, and
/// c_t = f o c_{t-1} + i o candidate, h_t = o o tanh(c_t).
pub fn lstm_step(params: &LstmParams, x_t: &[f64], state: &LstmState) -> Result<LstmState> {
    if x_t.len() != params.input_size() {
        return Err(Error::ShapeMismatch(format!(
            "input has {} values, gates expect {}",
            x_t.len(),
            params.input_size()
        )));
    }
    if state.h.len() != params.hidden() || state.c.len() != params.hidden() {
        return Err(Error::ShapeMismatch(format!(
            "state width {} does not match hidden width {}",
            state.h.len(),
            params.hidden()
        )));
    }
    Ok(lstm_step_cached(params, x_t, state).0)
}

fn check_sequence(model: &AutoencoderModel, sequence: &[f64]) -> Result<()> {
    if sequence.len() != model.dims.flat_len() {
        return Err(Error::LengthMismatch { expected: model.dims.flat_len(), got: sequence.len() });
    }
    Ok(())
}

/// Run the encoder over a full sequence and return the embedding.
pub fn encode(model: &AutoencoderModel, sequence: &[f64]) -> Result<Vec<f64>> {
    check_sequence(model, sequence)?;
    model.validate()?;
    let p = model.dims.input_size;
    let mut state = LstmState::zero(model.dims.hidden);
    for t in 0..model.dims.seq_len {
        let x_t = &sequence[t * p..(t + 1) * p];
        state = lstm_step_cached(&model.encoder, x_t, &state).0;
    }
    Ok(model.bottleneck.apply(&state.h))
}

/// Reconstruct a sequence from an embedding.
pub fn decode(model: &AutoencoderModel, embedding: &[f64]) -> Result<Vec<f64>> {
    if embedding.len() != model.dims.embed_dim {
        return Err(Error::ShapeMismatch(format!(
            "embedding has {} components, model expects {}",
            embedding.len(),
            model.dims.embed_dim
        )));
    }
    let mut z = embedding.to_vec();
    for layer in &model.decoder {
        z = layer.linear.apply(&z);
        for v in &mut z {
            *v = layer.activation.apply(*v);
        }
    }
    Ok(model.output_head.apply(&z))
}

/// Mean squared error of one reconstructed sequence, over all T * P values.
pub(crate) fn seq_loss(pred: &[f64], target: &[f64]) -> f64 {
    debug_assert_eq!(pred.len(), target.len());
    let mut acc = 0.0;
    for (p, y) in pred.iter().zip(target) {
        let e = p - y;
        acc += e * e;
    }
    acc / pred.len() as f64
}

/// Mean over the batch of the per-sequence mean squared reconstruction error.
pub fn reconstruction_loss(model: &AutoencoderModel, batch: &[&[f64]]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut total = 0.0;
    for seq in batch {
        let embedding = encode(model, seq)?;
        let pred = decode(model, &embedding)?;
        total += seq_loss(&pred, seq);
    }
    Ok(total / batch.len() as f64)
}
