//! Message-passing potency surrogate.
//!
//! Atoms and bonds start as embedding-table rows; a stack of message layers
//! updates both residually, each layer a two-layer sigmoid MLP over
//! (atom state, neighbor state, bond state). A readout collapses the final
//! atom states to one prediction, either aggregating states before the head
//! MLP ("molecular") or aggregating per-atom head outputs ("atomic"), with
//! five aggregators each: sum, mean, max, softmax, and attention.

mod batch;
mod train;

pub use batch::GraphBatch;
pub use train::{r_squared, readout_ablation, train, AblationTable, TrainConfig, TrainReport};

use crate::chem::MolGraph;
use crate::tensor::ops::{
    add, concat_cols, div, exp, gather, matmul, mul, scatter_add, segment_max, sub,
};
use crate::tensor::{check_unique_names, Activation, Mlp, Parameter, Rng, Tape, Tensor};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpnnError {
    #[error("element {0} is not in the embedding table")]
    UnknownElement(u8),
    #[error("bond type {0} is not in the embedding table")]
    UnknownBondType(u8),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("model io: {0}")]
    ModelIo(String),
}

/// Where the head MLP sits relative to aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReadoutMode {
    /// Aggregate per-atom head outputs (scalar contributions).
    Atomic,
    /// Aggregate atom states first, then apply the head.
    Molecular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    Sum,
    Mean,
    Max,
    Softmax,
    Attention,
}

impl Aggregator {
    pub const ALL: [Aggregator; 5] = [
        Aggregator::Attention,
        Aggregator::Max,
        Aggregator::Mean,
        Aggregator::Softmax,
        Aggregator::Sum,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Aggregator::Sum => "sum",
            Aggregator::Mean => "mean",
            Aggregator::Max => "max",
            Aggregator::Softmax => "softmax",
            Aggregator::Attention => "attention",
        }
    }
}

impl ReadoutMode {
    pub fn name(&self) -> &'static str {
        match self {
            ReadoutMode::Atomic => "atomic",
            ReadoutMode::Molecular => "molecular",
        }
    }
}

/// Readout selection: mode, aggregator, head, and the optional attention
/// network producing per-atom weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReadoutSpec {
    pub mode: ReadoutMode,
    pub aggregator: Aggregator,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurrogateConfig {
    /// Embedding and message width.
    pub width: usize,
    /// Number of residual message layers.
    pub depth: usize,
    pub readout: ReadoutSpec,
    /// Message-passing depth of the attention network.
    pub attention_depth: usize,
    /// Elements the embedding table covers, as atomic numbers.
    pub elements: Vec<u8>,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            width: 256,
            depth: 8,
            readout: ReadoutSpec { mode: ReadoutMode::Atomic, aggregator: Aggregator::Attention },
            attention_depth: 2,
            elements: vec![1, 5, 6, 7, 8, 9, 15, 16, 17, 35, 53],
        }
    }
}

impl SurrogateConfig {
    /// Small dimensions for minutes-scale runs.
    pub fn desk(readout: ReadoutSpec) -> SurrogateConfig {
        SurrogateConfig { width: 32, depth: 3, readout, ..Default::default() }
    }
}

/// One stack of message-passing layers over its own embedding tables.
struct MessageStack {
    atom_embed: Parameter,
    bond_embed: Parameter,
    layers: Vec<Mlp>,
}

impl MessageStack {
    fn new(prefix: &str, width: usize, depth: usize, n_elements: usize, rng: &mut Rng) -> Self {
        let atom_embed = Parameter::new(
            format!("{prefix}.atom_embed"),
            vec![n_elements, width],
            (0..n_elements * width).map(|_| rng.normal() * 0.1).collect(),
        );
        let bond_embed = Parameter::new(
            format!("{prefix}.bond_embed"),
            vec![4, width],
            (0..4 * width).map(|_| rng.normal() * 0.1).collect(),
        );
        let layers = (0..depth)
            .map(|l| {
                Mlp::new(
                    &format!("{prefix}.msg{l}"),
                    &[3 * width, width, width],
                    Activation::Sigmoid,
                    rng,
                )
            })
            .collect();
        MessageStack { atom_embed, bond_embed, layers }
    }

    /// Residual message passing; returns final atom states `[n_atoms, w]`.
    fn encode(&self, tape: &Tape, batch: &GraphBatch) -> Tensor {
        let mut h = gather(&tape.leaf(&self.atom_embed), &batch.atom_rows);
        let mut alpha = gather(&tape.leaf(&self.bond_embed), &batch.bond_rows);
        for layer in &self.layers {
            let h_src = gather(&h, &batch.edge_src);
            let h_dst = gather(&h, &batch.edge_dst);
            let a_edge = gather(&alpha, &batch.edge_bond);
            let msgs = layer.forward(tape, &concat_cols(&[&h_src, &h_dst, &a_edge]));
            let atom_update = scatter_add(&msgs, &batch.edge_src, batch.n_atoms);
            let bond_update = scatter_add(&msgs, &batch.edge_bond, batch.n_bonds);
            h = add(&h, &atom_update);
            alpha = add(&alpha, &bond_update);
        }
        h
    }

    fn params(&self) -> Vec<Parameter> {
        let mut out = vec![self.atom_embed.clone(), self.bond_embed.clone()];
        for l in &self.layers {
            out.extend(l.params());
        }
        out
    }
}

/// The trained potency predictor.
pub struct SurrogateModel {
    pub config: SurrogateConfig,
    stack: MessageStack,
    head: Mlp,
    attention: Option<AttentionNet>,
    /// Molecule-level offset applied after aggregation; per-atom terms
    /// alone cannot express a constant under normalized targets.
    output_bias: Parameter,
    /// Target normalization captured at training time.
    target_mean: Parameter,
    target_std: Parameter,
}

struct AttentionNet {
    stack: MessageStack,
    logit_head: Mlp,
}

impl SurrogateModel {
    pub fn new(config: SurrogateConfig, rng: &mut Rng) -> SurrogateModel {
        let w = config.width;
        let head_in = w;
        let stack =
            MessageStack::new("mpnn", w, config.depth, config.elements.len(), rng);
        // message layers follow the stated two-layer sigmoid form; the heads
        // use rectifier hiddens so size-extensive targets do not saturate
        let head = Mlp::new("head", &[head_in, w / 2, 1], Activation::Relu, rng);
        let attention = if config.readout.aggregator == Aggregator::Attention {
            Some(AttentionNet {
                stack: MessageStack::new(
                    "attn",
                    w,
                    config.attention_depth,
                    config.elements.len(),
                    rng,
                ),
                logit_head: Mlp::new("attn.logit", &[w, w / 2, 1], Activation::Relu, rng),
            })
        } else {
            None
        };
        let model = SurrogateModel {
            config,
            stack,
            head,
            attention,
            output_bias: Parameter::zeros("output_bias", vec![1]),
            target_mean: Parameter::frozen("target.mean", vec![1], vec![0.0]),
            target_std: Parameter::frozen("target.std", vec![1], vec![1.0]),
        };
        check_unique_names(&model.params());
        model
    }

    pub fn params(&self) -> Vec<Parameter> {
        let mut out = self.stack.params();
        out.extend(self.head.params());
        if let Some(attn) = &self.attention {
            out.extend(attn.stack.params());
            out.extend(attn.logit_head.params());
        }
        out.push(self.output_bias.clone());
        out.push(self.target_mean.clone());
        out.push(self.target_std.clone());
        out
    }

    pub fn set_target_stats(&self, mean: f64, std: f64) {
        self.target_mean.set_value(vec![mean]);
        self.target_std.set_value(vec![std]);
    }

    pub fn target_stats(&self) -> (f64, f64) {
        (self.target_mean.value()[0], self.target_std.value()[0])
    }

    /// Final atom states for one molecule (inference-time encode).
    pub fn encode(&self, mol: &MolGraph) -> Result<Vec<Vec<f64>>, MpnnError> {
        let batch = GraphBatch::build(&[mol], &self.config.elements)?;
        let tape = Tape::new();
        let h = self.stack.encode(&tape, &batch);
        let w = self.config.width;
        Ok((0..batch.n_atoms).map(|i| h.data()[i * w..(i + 1) * w].to_vec()).collect())
    }

    /// Normalized-scale predictions for a batch `[n_mols, 1]`.
    pub fn forward(&self, tape: &Tape, batch: &GraphBatch) -> Tensor {
        let h = self.stack.encode(tape, batch);
        let spec = self.config.readout;
        let aggregated = match spec.mode {
            ReadoutMode::Molecular => {
                let agg = self.aggregate(tape, batch, &h, &h);
                self.head.forward(tape, &agg)
            }
            ReadoutMode::Atomic => {
                let contributions = self.head.forward(tape, &h);
                self.aggregate(tape, batch, &contributions, &h)
            }
        };
        let bias = broadcast_rows(&tape.leaf(&self.output_bias), batch.n_mols);
        add(&aggregated, &bias)
    }

    /// Aggregates per-atom rows `x` into per-molecule rows. The attention
    /// variant derives weights from a separate message-passing pass.
    fn aggregate(&self, tape: &Tape, batch: &GraphBatch, x: &Tensor, _states: &Tensor) -> Tensor {
        let m = batch.n_mols;
        let ids = &batch.mol_id;
        match self.config.readout.aggregator {
            Aggregator::Sum => scatter_add(x, ids, m),
            Aggregator::Mean => {
                let sums = scatter_add(x, ids, m);
                let counts = Tensor::from_vec(
                    vec![m, 1],
                    batch.mol_atom_counts.iter().map(|&c| c as f64).collect(),
                );
                let d = x.shape()[1];
                div(&sums, &broadcast_cols(&counts, d))
            }
            Aggregator::Max => segment_max(x, ids, m),
            Aggregator::Softmax => {
                let weights = segment_softmax(tape, x, ids, m);
                scatter_add(&mul(&weights, x), ids, m)
            }
            Aggregator::Attention => {
                let attn = self.attention.as_ref().expect("attention net present");
                let states = attn.stack.encode(tape, batch);
                let logits = attn.logit_head.forward(tape, &states);
                let weights = segment_softmax(tape, &logits, ids, m);
                let d = x.shape()[1];
                scatter_add(&mul(&broadcast_cols(&weights, d), x), ids, m)
            }
        }
    }

    /// Per-atom attention weights for one molecule; they sum to one.
    pub fn attention_weights(&self, mol: &MolGraph) -> Result<Option<Vec<f64>>, MpnnError> {
        let attn = match &self.attention {
            Some(a) => a,
            None => return Ok(None),
        };
        let batch = GraphBatch::build(&[mol], &self.config.elements)?;
        let tape = Tape::new();
        let states = attn.stack.encode(&tape, &batch);
        let logits = attn.logit_head.forward(&tape, &states);
        let weights = segment_softmax(&tape, &logits, &batch.mol_id, 1);
        Ok(Some(weights.data().to_vec()))
    }

    /// Predicted potency for one molecule, on the original target scale.
    pub fn predict(&self, mol: &MolGraph) -> Result<f64, MpnnError> {
        Ok(self.predict_batch(&[mol])?[0])
    }

    /// Batched prediction on the original target scale.
    pub fn predict_batch(&self, mols: &[&MolGraph]) -> Result<Vec<f64>, MpnnError> {
        let (mean, std) = self.target_stats();
        if mols.iter().all(|m| m.atom_count() == 0) && !mols.is_empty() {
            return Ok(vec![mean; mols.len()]);
        }
        let batch = GraphBatch::build(mols, &self.config.elements)?;
        let tape = Tape::new();
        let out = self.forward(&tape, &batch);
        Ok(out.data().iter().map(|v| v * std + mean).collect())
    }

    /// Serializes weights (MFCK1) plus a JSON architecture sidecar.
    pub fn save(&self, checkpoint: &std::path::Path) -> Result<(), MpnnError> {
        crate::tensor::save_parameters(checkpoint, &self.params())
            .map_err(|e| MpnnError::ModelIo(e.to_string()))?;
        let sidecar = checkpoint.with_extension("json");
        let text = serde_json::to_string_pretty(&self.config)
            .map_err(|e| MpnnError::ModelIo(e.to_string()))?;
        std::fs::write(sidecar, text).map_err(|e| MpnnError::ModelIo(e.to_string()))
    }

    pub fn load(checkpoint: &std::path::Path) -> Result<SurrogateModel, MpnnError> {
        let sidecar = checkpoint.with_extension("json");
        let text =
            std::fs::read_to_string(sidecar).map_err(|e| MpnnError::ModelIo(e.to_string()))?;
        let config: SurrogateConfig =
            serde_json::from_str(&text).map_err(|e| MpnnError::ModelIo(e.to_string()))?;
        let mut rng = Rng::seed_from(0);
        let model = SurrogateModel::new(config, &mut rng);
        crate::tensor::load_parameters(checkpoint, &model.params())
            .map_err(|e| MpnnError::ModelIo(e.to_string()))?;
        Ok(model)
    }
}

/// `[m,1] -> [m,d]` by repeating the column.
fn broadcast_cols(x: &Tensor, d: usize) -> Tensor {
    let ones = Tensor::from_vec(vec![1, d], vec![1.0; d]);
    matmul(x, &ones)
}

/// `[1,1] -> [m,1]` by repeating the row.
fn broadcast_rows(x: &Tensor, m: usize) -> Tensor {
    let ones = Tensor::from_vec(vec![m, 1], vec![1.0; m]);
    matmul(&ones, x)
}

/// Per-segment softmax over rows, computed columnwise with the usual
/// max-shift for stability.
fn segment_softmax(_tape: &Tape, x: &Tensor, seg: &[usize], segments: usize) -> Tensor {
    let maxes = segment_max(x, seg, segments);
    let shifted = sub(x, &gather(&maxes, seg));
    let e = exp(&shifted);
    let denominators = scatter_add(&e, seg, segments);
    div(&e, &gather(&denominators, seg))
}
