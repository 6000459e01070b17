//! 3D windowed multi-head self-attention with relative position bias and the
//! paired unshifted/shifted transformer blocks.
//!
//! Attention within each window computes `SoftMax(QKᵀ/√d + B + mask)V` per
//! head, with `B` gathered from the compact displacement table. Masked pairs
//! are additionally excluded from the softmax normalization so cross-region
//! influence is exactly zero; the additive sentinel alone would leave
//! `e^-100`-scale dust in forward and backward.

use crate::error::{Error, Result};
use crate::tensor::{Element, Tape, Tensor, TensorId};
use crate::windowing::{GridDims, ShiftSpec, WindowPlan, WindowSpec};
use rand::Rng;
use std::rc::Rc;

/// Layer-norm epsilon used throughout the network.
pub const LN_EPS: f64 = 1e-5;

/// Default per-head query/key dimension.
pub const DEFAULT_HEAD_DIM: usize = 32;

/// MLP expansion ratio.
pub const MLP_RATIO: usize = 4;

/// Weights of one windowed-attention module. The three logical C→C
/// projections are stored fused as a single C→3C map, matching the prevalent
/// pretrained-weight layout.
#[derive(Clone, Debug)]
pub struct MsaWeights<T> {
    pub qkv_w: Tensor<T>,
    pub qkv_b: Tensor<T>,
    pub out_w: Tensor<T>,
    pub out_b: Tensor<T>,
    /// Compact relative-position bias table, `(num_heads, (2p−1)(2m−1)²)`.
    pub b_hat: Tensor<T>,
}

impl<T: Element> MsaWeights<T> {
    pub fn init<R: Rng>(
        channels: usize,
        head_dim: usize,
        spec: WindowSpec,
        rng: &mut R,
    ) -> Result<Self> {
        let heads = check_heads(channels, head_dim)?;
        Ok(MsaWeights {
            qkv_w: Tensor::trunc_normal(&[channels, 3 * channels], 0.02, rng),
            qkv_b: Tensor::zeros(&[3 * channels]),
            out_w: Tensor::trunc_normal(&[channels, channels], 0.02, rng),
            out_b: Tensor::zeros(&[channels]),
            b_hat: Tensor::trunc_normal(&[heads, spec.bias_table_len()], 0.02, rng),
        })
    }

    pub fn channels(&self) -> usize {
        self.out_w.shape()[0]
    }
}

/// Affine layer-norm parameters.
#[derive(Clone, Debug)]
pub struct NormWeights<T> {
    pub gamma: Tensor<T>,
    pub beta: Tensor<T>,
}

impl<T: Element> NormWeights<T> {
    pub fn identity(channels: usize) -> Self {
        NormWeights {
            gamma: Tensor::full(&[channels], T::ONE),
            beta: Tensor::zeros(&[channels]),
        }
    }
}

/// Learnable parameters of one transformer block (attention + FFN).
#[derive(Clone, Debug)]
pub struct BlockWeights<T> {
    pub ln1: NormWeights<T>,
    pub msa: MsaWeights<T>,
    pub ln2: NormWeights<T>,
    pub fc1_w: Tensor<T>,
    pub fc1_b: Tensor<T>,
    pub fc2_w: Tensor<T>,
    pub fc2_b: Tensor<T>,
}

impl<T: Element> BlockWeights<T> {
    /// Random initialization with the default MLP expansion ratio.
    pub fn init<R: Rng>(
        channels: usize,
        head_dim: usize,
        spec: WindowSpec,
        rng: &mut R,
    ) -> Result<Self> {
        Self::init_with_ratio(channels, head_dim, MLP_RATIO, spec, rng)
    }

    pub fn init_with_ratio<R: Rng>(
        channels: usize,
        head_dim: usize,
        mlp_ratio: usize,
        spec: WindowSpec,
        rng: &mut R,
    ) -> Result<Self> {
        if mlp_ratio == 0 {
            return Err(Error::Config("mlp ratio must be positive".into()));
        }
        let hidden = mlp_ratio * channels;
        Ok(BlockWeights {
            ln1: NormWeights::identity(channels),
            msa: MsaWeights::init(channels, head_dim, spec, rng)?,
            ln2: NormWeights::identity(channels),
            fc1_w: Tensor::trunc_normal(&[channels, hidden], 0.02, rng),
            fc1_b: Tensor::zeros(&[hidden]),
            fc2_w: Tensor::trunc_normal(&[hidden, channels], 0.02, rng),
            fc2_b: Tensor::zeros(&[channels]),
        })
    }
}

fn check_heads(channels: usize, head_dim: usize) -> Result<usize> {
    if head_dim == 0 || channels % head_dim != 0 {
        return Err(Error::Config(format!(
            "channel count {channels} is not divisible by head dim {head_dim}"
        )));
    }
    Ok(channels / head_dim)
}

/// Tape handles for one attention module's parameters.
#[derive(Clone, Copy, Debug)]
pub struct MsaParamIds {
    pub qkv_w: TensorId,
    pub qkv_b: TensorId,
    pub out_w: TensorId,
    pub out_b: TensorId,
    pub b_hat: TensorId,
}

impl<T: Element> MsaWeights<T> {
    pub fn register(&self, tape: &mut Tape<T>, trainable: bool) -> MsaParamIds {
        let mut reg = |t: &Tensor<T>| {
            if trainable {
                tape.param(t.clone())
            } else {
                tape.constant(t.clone())
            }
        };
        MsaParamIds {
            qkv_w: reg(&self.qkv_w),
            qkv_b: reg(&self.qkv_b),
            out_w: reg(&self.out_w),
            out_b: reg(&self.out_b),
            b_hat: reg(&self.b_hat),
        }
    }
}

/// Tape handles for one block's parameters.
#[derive(Clone, Copy, Debug)]
pub struct BlockParamIds {
    pub ln1_gamma: TensorId,
    pub ln1_beta: TensorId,
    pub msa: MsaParamIds,
    pub ln2_gamma: TensorId,
    pub ln2_beta: TensorId,
    pub fc1_w: TensorId,
    pub fc1_b: TensorId,
    pub fc2_w: TensorId,
    pub fc2_b: TensorId,
}

impl<T: Element> BlockWeights<T> {
    pub fn register(&self, tape: &mut Tape<T>, trainable: bool) -> BlockParamIds {
        BlockParamIds {
            ln1_gamma: register_one(tape, &self.ln1.gamma, trainable),
            ln1_beta: register_one(tape, &self.ln1.beta, trainable),
            msa: self.msa.register(tape, trainable),
            ln2_gamma: register_one(tape, &self.ln2.gamma, trainable),
            ln2_beta: register_one(tape, &self.ln2.beta, trainable),
            fc1_w: register_one(tape, &self.fc1_w, trainable),
            fc1_b: register_one(tape, &self.fc1_b, trainable),
            fc2_w: register_one(tape, &self.fc2_w, trainable),
            fc2_b: register_one(tape, &self.fc2_b, trainable),
        }
    }
}

/// Registers a tensor as a trainable param or a constant leaf.
pub fn register_one<T: Element>(tape: &mut Tape<T>, t: &Tensor<T>, trainable: bool) -> TensorId {
    if trainable {
        tape.param(t.clone())
    } else {
        tape.constant(t.clone())
    }
}

/// Fate of one residual branch under stochastic depth. Inference always
/// keeps branches unscaled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BranchMode {
    Keep,
    Drop,
    /// Kept during training, scaled by `1/(1−rate)`.
    KeepScaled(f64),
}

/// Branch fates for the attention and FFN residuals of one block.
#[derive(Clone, Copy, Debug)]
pub struct BlockBranches {
    pub msa: BranchMode,
    pub ffn: BranchMode,
}

impl BlockBranches {
    pub fn keep_all() -> Self {
        BlockBranches {
            msa: BranchMode::Keep,
            ffn: BranchMode::Keep,
        }
    }
}

/// Windowed multi-head self-attention over a flat `(tokens, C)` grid laid
/// out as `dims`. Zero offsets give the regular configuration, half-window
/// offsets the shifted one.
pub fn window_msa<T: Element>(
    tape: &mut Tape<T>,
    x: TensorId,
    dims: GridDims,
    w: &MsaParamIds,
    spec: WindowSpec,
    offsets: ShiftSpec,
    head_dim: usize,
) -> Result<TensorId> {
    let channels = tape.value(x).last_dim();
    let heads = check_heads(channels, head_dim)?;
    let table = tape.value(w.b_hat).shape().to_vec();
    if table != [heads, spec.bias_table_len()] {
        return Err(Error::shape(
            "relative position bias table",
            &table,
            &[heads, spec.bias_table_len()],
        ));
    }
    if tape.value(x).num_rows() != dims.tokens() {
        return Err(Error::shape(
            "window_msa tokens",
            tape.value(x).shape(),
            &[dims.tokens(), channels],
        ));
    }

    let plan = WindowPlan::new(dims, spec, offsets);
    let (nw, n) = (plan.num_windows, plan.window_len);

    let windows = tape.gather_rows(x, Rc::clone(&plan.gather))?;
    let qkv = tape.linear(windows, w.qkv_w, w.qkv_b)?;
    let qkv = tape.reshape(qkv, &[nw, n, 3, heads, head_dim])?;
    let qkv = tape.permute_axes(qkv, &[2, 0, 3, 1, 4])?;

    let third = (nw * heads * n) as i64;
    let slice = |tape: &mut Tape<T>, k: i64| -> Result<TensorId> {
        let rows: Vec<i64> = (k * third..(k + 1) * third).collect();
        let flat = tape.gather_rows(qkv, Rc::new(rows))?;
        tape.reshape(flat, &[nw * heads, n, head_dim])
    };
    let q = slice(tape, 0)?;
    let k = slice(tape, 1)?;
    let v = slice(tape, 2)?;

    let q = tape.scale(q, T::from_f64(1.0 / (head_dim as f64).sqrt()));
    let k_t = tape.permute_axes(k, &[0, 2, 1])?;
    let scores = tape.matmul(q, k_t)?;
    let scores = tape.reshape(scores, &[nw, heads, n, n])?;

    let rel_index = Rc::new(crate::windowing::relative_position_index(spec));
    let bias = tape.gather_bias(w.b_hat, rel_index, n)?;
    let bias = tape.reshape(bias, &[1, heads, n, n])?;
    let scores = tape.add_broadcast(scores, bias)?;

    let probs = match &plan.mask {
        Some(mask) => {
            let additive = tape.constant(mask.additive());
            let keep = tape.constant(mask.keep());
            let scores = tape.add_broadcast(scores, additive)?;
            tape.softmax_lastdim_masked(scores, keep)?
        }
        None => tape.softmax_lastdim(scores)?,
    };

    let probs = tape.reshape(probs, &[nw * heads, n, n])?;
    let ctx = tape.matmul(probs, v)?;
    let ctx = tape.reshape(ctx, &[nw, heads, n, head_dim])?;
    let ctx = tape.permute_axes(ctx, &[0, 2, 1, 3])?;
    let ctx = tape.reshape(ctx, &[nw * n, channels])?;
    let projected = tape.linear(ctx, w.out_w, w.out_b)?;

    tape.gather_rows(projected, Rc::clone(&plan.scatter))
}

fn apply_branch<T: Element>(
    tape: &mut Tape<T>,
    base: TensorId,
    branch: TensorId,
    mode: BranchMode,
) -> Result<TensorId> {
    match mode {
        BranchMode::Keep => tape.add(base, branch),
        BranchMode::Drop => Ok(base),
        BranchMode::KeepScaled(s) => {
            let scaled = tape.scale(branch, T::from_f64(s));
            tape.add(base, scaled)
        }
    }
}

/// One transformer block: pre-norm attention and pre-norm FFN, each behind a
/// residual connection.
#[allow(clippy::too_many_arguments)]
pub fn block_forward<T: Element>(
    tape: &mut Tape<T>,
    x: TensorId,
    dims: GridDims,
    w: &BlockParamIds,
    spec: WindowSpec,
    offsets: ShiftSpec,
    head_dim: usize,
    branches: BlockBranches,
) -> Result<TensorId> {
    let eps = T::from_f64(LN_EPS);
    let normed = tape.layer_norm(x, w.ln1_gamma, w.ln1_beta, eps)?;
    let attended = window_msa(tape, normed, dims, &w.msa, spec, offsets, head_dim)?;
    let x = apply_branch(tape, x, attended, branches.msa)?;

    let normed = tape.layer_norm(x, w.ln2_gamma, w.ln2_beta, eps)?;
    let hidden = tape.linear(normed, w.fc1_w, w.fc1_b)?;
    let hidden = tape.gelu(hidden);
    let ffn = tape.linear(hidden, w.fc2_w, w.fc2_b)?;
    apply_branch(tape, x, ffn, branches.ffn)
}

/// The two-block computation unit: a regular-window block followed by a
/// shifted-window block with half-window offsets.
#[allow(clippy::too_many_arguments)]
pub fn block_pair_forward<T: Element>(
    tape: &mut Tape<T>,
    x: TensorId,
    dims: GridDims,
    w1: &BlockParamIds,
    w2: &BlockParamIds,
    spec: WindowSpec,
    head_dim: usize,
    branches: [BlockBranches; 2],
) -> Result<TensorId> {
    let x = block_forward(
        tape,
        x,
        dims,
        w1,
        spec,
        ShiftSpec::none(),
        head_dim,
        branches[0],
    )?;
    block_forward(
        tape,
        x,
        dims,
        w2,
        spec,
        ShiftSpec::half_window(spec),
        head_dim,
        branches[1],
    )
}
