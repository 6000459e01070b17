//! Assembles patch embedding, four block stages with patch merging, the
//! final norm, and the classification head into the T/S/B/L variants.

use crate::attention::{
    block_pair_forward, BlockBranches, BlockParamIds, BlockWeights, NormWeights, LN_EPS,
};
use crate::error::{Error, Result};
use crate::tensor::{Element, Tape, Tensor, TensorId};
use crate::windowing::{GridDims, WindowSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::rc::Rc;

/// Temporal extent of one input patch.
pub const PATCH_T: usize = 2;
/// Spatial extent of one input patch.
pub const PATCH_S: usize = 4;
/// Input channels per pixel.
pub const IN_CHANNELS: usize = 3;
/// Flattened patch feature size `2·4·4·3`.
pub const PATCH_FEATURES: usize = PATCH_T * PATCH_S * PATCH_S * IN_CHANNELS;
/// Number of stages.
pub const NUM_STAGES: usize = 4;

/// Input clip extents in frames and pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClipDims {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

impl ClipDims {
    pub fn new(frames: usize, height: usize, width: usize) -> Self {
        ClipDims {
            frames,
            height,
            width,
        }
    }
}

/// Architecture hyper-parameters.
#[derive(Clone, Copy, Debug)]
pub struct ArchConfig {
    /// Channel count of the first stage.
    pub channels: usize,
    pub depths: [usize; NUM_STAGES],
    pub window: WindowSpec,
    pub head_dim: usize,
    pub mlp_ratio: usize,
    pub num_classes: usize,
    pub clip: ClipDims,
    pub drop_path_rate: f64,
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        for (i, &d) in self.depths.iter().enumerate() {
            if d == 0 || d % 2 != 0 {
                return Err(Error::Config(format!(
                    "stage {} depth {} is not a positive even number; blocks come in shifted/unshifted pairs",
                    i + 1,
                    d
                )));
            }
        }
        for i in 0..NUM_STAGES {
            let c = self.stage_channels(i);
            if self.head_dim == 0 || c % self.head_dim != 0 {
                return Err(Error::Config(format!(
                    "stage {} channels {} not divisible by head dim {}",
                    i + 1,
                    c,
                    self.head_dim
                )));
            }
        }
        if self.clip.frames % PATCH_T != 0
            || self.clip.height % (PATCH_S * 8) != 0
            || self.clip.width % (PATCH_S * 8) != 0
        {
            return Err(Error::Config(format!(
                "clip {}x{}x{} must have even frames and spatial dims divisible by {}",
                self.clip.frames,
                self.clip.height,
                self.clip.width,
                PATCH_S * 8
            )));
        }
        if !(0.0..1.0).contains(&self.drop_path_rate) {
            return Err(Error::Config(format!(
                "drop path rate {} outside [0, 1)",
                self.drop_path_rate
            )));
        }
        if self.mlp_ratio == 0 {
            return Err(Error::Config("mlp ratio must be positive".into()));
        }
        Ok(())
    }

    /// Channel count entering stage `i` (0-based): `2^i · C`.
    pub fn stage_channels(&self, i: usize) -> usize {
        self.channels << i
    }

    /// Attention heads of stage `i`: `2^i · C / d`.
    pub fn stage_heads(&self, i: usize) -> usize {
        self.stage_channels(i) / self.head_dim
    }

    /// Token grid entering stage `i`; the temporal extent never changes.
    pub fn stage_grid(&self, i: usize) -> GridDims {
        GridDims::new(
            self.clip.frames / PATCH_T,
            self.clip.height / (PATCH_S << i),
            self.clip.width / (PATCH_S << i),
        )
    }

    pub fn total_blocks(&self) -> usize {
        self.depths.iter().sum()
    }

    /// Per-block stochastic-depth rates, increasing linearly to the maximum.
    pub fn drop_path_rates(&self) -> Vec<f64> {
        let total = self.total_blocks();
        (0..total)
            .map(|b| {
                if total <= 1 {
                    self.drop_path_rate
                } else {
                    self.drop_path_rate * b as f64 / (total - 1) as f64
                }
            })
            .collect()
    }
}

/// The four published variants plus overridable knobs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    Tiny,
    Small,
    Base,
    Large,
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t" | "tiny" => Ok(Variant::Tiny),
            "s" | "small" => Ok(Variant::Small),
            "b" | "base" => Ok(Variant::Base),
            "l" | "large" => Ok(Variant::Large),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// Optional departures from a variant's preset.
#[derive(Clone, Copy, Debug, Default)]
pub struct ArchOverrides {
    pub window: Option<WindowSpec>,
    pub clip: Option<ClipDims>,
    pub num_classes: Option<usize>,
    pub depths: Option<[usize; NUM_STAGES]>,
    pub drop_path_rate: Option<f64>,
}

/// Returns the published presets: window 8×7×7, head dim 32, MLP ratio 4,
/// 32-frame 224² clips, 400 classes.
pub fn build_variant(variant: Variant, overrides: ArchOverrides) -> Result<ArchConfig> {
    let (channels, depths, drop_path) = match variant {
        Variant::Tiny => (96, [2, 2, 6, 2], 0.1),
        Variant::Small => (96, [2, 2, 18, 2], 0.2),
        Variant::Base => (128, [2, 2, 18, 2], 0.3),
        Variant::Large => (192, [2, 2, 18, 2], 0.3),
    };
    let config = ArchConfig {
        channels,
        depths: overrides.depths.unwrap_or(depths),
        window: match overrides.window {
            Some(w) => w,
            None => WindowSpec::new(8, 7)?,
        },
        head_dim: crate::attention::DEFAULT_HEAD_DIM,
        mlp_ratio: crate::attention::MLP_RATIO,
        num_classes: overrides.num_classes.unwrap_or(400),
        clip: overrides.clip.unwrap_or(ClipDims::new(32, 224, 224)),
        drop_path_rate: overrides.drop_path_rate.unwrap_or(drop_path),
    };
    config.validate()?;
    Ok(config)
}

/// Patch-embedding weights: a `(2, 4, 4, 3, C)` kernel applied to flattened
/// patches, with bias and layer norm.
#[derive(Clone, Debug)]
pub struct PatchEmbedWeights<T> {
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
    pub norm: NormWeights<T>,
}

/// Patch-merging weights: layer norm over `4c` concatenated features and an
/// unbiased linear map down to `2c`.
#[derive(Clone, Debug)]
pub struct MergeWeights<T> {
    pub norm: NormWeights<T>,
    pub linear: Tensor<T>,
}

/// The assembled network.
#[derive(Clone, Debug)]
pub struct VideoSwinModel<T> {
    pub config: ArchConfig,
    pub patch_embed: PatchEmbedWeights<T>,
    pub stages: Vec<Vec<BlockWeights<T>>>,
    pub merges: Vec<MergeWeights<T>>,
    pub final_norm: NormWeights<T>,
    pub head_w: Tensor<T>,
    pub head_b: Tensor<T>,
}

impl<T: Element> VideoSwinModel<T> {
    /// Random initialization: truncated-normal(0.02) weights, zero biases,
    /// identity norms.
    pub fn init(config: ArchConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with_rng(config, &mut rng)
    }

    pub fn init_with_rng<R: Rng>(config: ArchConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let c = config.channels;
        let patch_embed = PatchEmbedWeights {
            kernel: Tensor::trunc_normal(&[PATCH_T, PATCH_S, PATCH_S, IN_CHANNELS, c], 0.02, rng),
            bias: Tensor::zeros(&[c]),
            norm: NormWeights::identity(c),
        };
        let mut stages = Vec::with_capacity(NUM_STAGES);
        for i in 0..NUM_STAGES {
            let sc = config.stage_channels(i);
            let blocks: Result<Vec<_>> = (0..config.depths[i])
                .map(|_| {
                    BlockWeights::init_with_ratio(
                        sc,
                        config.head_dim,
                        config.mlp_ratio,
                        config.window,
                        rng,
                    )
                })
                .collect();
            stages.push(blocks?);
        }
        let merges = (0..NUM_STAGES - 1)
            .map(|i| {
                let sc = config.stage_channels(i);
                MergeWeights {
                    norm: NormWeights::identity(4 * sc),
                    linear: Tensor::trunc_normal(&[4 * sc, 2 * sc], 0.02, rng),
                }
            })
            .collect();
        let last = config.stage_channels(NUM_STAGES - 1);
        Ok(VideoSwinModel {
            config,
            patch_embed,
            stages,
            merges,
            final_norm: NormWeights::identity(last),
            head_w: Tensor::trunc_normal(&[last, config.num_classes], 0.02, rng),
            head_b: Tensor::zeros(&[config.num_classes]),
        })
    }

    /// Canonical parameter order: patch embed, stages (blocks then the
    /// stage's merge), final norm, head. Names follow the checkpoint scheme.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec![
            "patch_embed.kernel".into(),
            "patch_embed.bias".into(),
            "patch_embed.norm.gamma".into(),
            "patch_embed.norm.beta".into(),
        ];
        for (i, blocks) in self.stages.iter().enumerate() {
            let stage = i + 1;
            for j in 0..blocks.len() {
                let p = format!("stage{stage}.block{j}");
                for suffix in [
                    "ln1.gamma",
                    "ln1.beta",
                    "attn.qkv.w",
                    "attn.qkv.b",
                    "attn.out.w",
                    "attn.out.b",
                    "attn.relpos",
                    "ln2.gamma",
                    "ln2.beta",
                    "mlp.fc1.w",
                    "mlp.fc1.b",
                    "mlp.fc2.w",
                    "mlp.fc2.b",
                ] {
                    names.push(format!("{p}.{suffix}"));
                }
            }
            if i < NUM_STAGES - 1 {
                names.push(format!("stage{stage}.merge.norm.gamma"));
                names.push(format!("stage{stage}.merge.norm.beta"));
                names.push(format!("stage{stage}.merge.linear"));
            }
        }
        names.push("final_norm.gamma".into());
        names.push("final_norm.beta".into());
        names.push("head.w".into());
        names.push("head.b".into());
        names
    }

    /// Parameters in canonical order.
    pub fn params(&self) -> Vec<&Tensor<T>> {
        let mut out: Vec<&Tensor<T>> = vec![
            &self.patch_embed.kernel,
            &self.patch_embed.bias,
            &self.patch_embed.norm.gamma,
            &self.patch_embed.norm.beta,
        ];
        for (i, blocks) in self.stages.iter().enumerate() {
            for b in blocks {
                out.extend([
                    &b.ln1.gamma,
                    &b.ln1.beta,
                    &b.msa.qkv_w,
                    &b.msa.qkv_b,
                    &b.msa.out_w,
                    &b.msa.out_b,
                    &b.msa.b_hat,
                    &b.ln2.gamma,
                    &b.ln2.beta,
                    &b.fc1_w,
                    &b.fc1_b,
                    &b.fc2_w,
                    &b.fc2_b,
                ]);
            }
            if i < NUM_STAGES - 1 {
                let m = &self.merges[i];
                out.extend([&m.norm.gamma, &m.norm.beta, &m.linear]);
            }
        }
        out.extend([
            &self.final_norm.gamma,
            &self.final_norm.beta,
            &self.head_w,
            &self.head_b,
        ]);
        out
    }

    /// Mutable parameters in canonical order.
    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out: Vec<&mut Tensor<T>> = vec![
            &mut self.patch_embed.kernel,
            &mut self.patch_embed.bias,
            &mut self.patch_embed.norm.gamma,
            &mut self.patch_embed.norm.beta,
        ];
        let stages_len = self.stages.len();
        let mut merges = self.merges.iter_mut();
        for (i, blocks) in self.stages.iter_mut().enumerate() {
            for b in blocks {
                out.extend([
                    &mut b.ln1.gamma,
                    &mut b.ln1.beta,
                    &mut b.msa.qkv_w,
                    &mut b.msa.qkv_b,
                    &mut b.msa.out_w,
                    &mut b.msa.out_b,
                    &mut b.msa.b_hat,
                    &mut b.ln2.gamma,
                    &mut b.ln2.beta,
                    &mut b.fc1_w,
                    &mut b.fc1_b,
                    &mut b.fc2_w,
                    &mut b.fc2_b,
                ]);
            }
            if i < stages_len - 1 {
                let m = merges.next().expect("merge per non-final stage");
                out.extend([&mut m.norm.gamma, &mut m.norm.beta, &mut m.linear]);
            }
        }
        out.extend([
            &mut self.final_norm.gamma,
            &mut self.final_norm.beta,
            &mut self.head_w,
            &mut self.head_b,
        ]);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.params().iter().map(|t| t.numel()).sum()
    }

    /// Registers every parameter on a tape in canonical order.
    pub fn register(&self, tape: &mut Tape<T>, trainable: bool) -> ModelParamIds {
        use crate::attention::register_one as reg;
        let patch = PatchEmbedParamIds {
            kernel: reg(tape, &self.patch_embed.kernel, trainable),
            bias: reg(tape, &self.patch_embed.bias, trainable),
            norm_gamma: reg(tape, &self.patch_embed.norm.gamma, trainable),
            norm_beta: reg(tape, &self.patch_embed.norm.beta, trainable),
        };
        let mut stages = Vec::with_capacity(NUM_STAGES);
        let mut merges = Vec::with_capacity(NUM_STAGES - 1);
        for (i, blocks) in self.stages.iter().enumerate() {
            stages.push(
                blocks
                    .iter()
                    .map(|b| b.register(tape, trainable))
                    .collect::<Vec<_>>(),
            );
            if i < NUM_STAGES - 1 {
                let m = &self.merges[i];
                merges.push(MergeParamIds {
                    norm_gamma: reg(tape, &m.norm.gamma, trainable),
                    norm_beta: reg(tape, &m.norm.beta, trainable),
                    linear: reg(tape, &m.linear, trainable),
                });
            }
        }
        ModelParamIds {
            patch_embed: patch,
            stages,
            merges,
            final_gamma: reg(tape, &self.final_norm.gamma, trainable),
            final_beta: reg(tape, &self.final_norm.beta, trainable),
            head_w: reg(tape, &self.head_w, trainable),
            head_b: reg(tape, &self.head_b, trainable),
        }
    }

    /// Full forward pass: embed, four stages with merging, final norm,
    /// global average pool, head.
    pub fn forward(
        &self,
        tape: &mut Tape<T>,
        ids: &ModelParamIds,
        clip: TensorId,
        branches: Option<&[BlockBranches]>,
    ) -> Result<ForwardOutput> {
        let cfg = &self.config;
        if let Some(b) = branches {
            if b.len() != cfg.total_blocks() {
                return Err(Error::Config(format!(
                    "expected {} branch modes, got {}",
                    cfg.total_blocks(),
                    b.len()
                )));
            }
        }
        let mut tokens = patch_embed(tape, clip, &ids.patch_embed, cfg)?;
        let mut dims = cfg.stage_grid(0);
        let mut stage_outputs = Vec::with_capacity(NUM_STAGES);
        let mut block_cursor = 0usize;
        for (i, stage_ids) in ids.stages.iter().enumerate() {
            for pair in stage_ids.chunks(2) {
                let modes = match branches {
                    Some(all) => [all[block_cursor], all[block_cursor + 1]],
                    None => [BlockBranches::keep_all(); 2],
                };
                tokens = block_pair_forward(
                    tape,
                    tokens,
                    dims,
                    &pair[0],
                    &pair[1],
                    cfg.window,
                    cfg.head_dim,
                    modes,
                )?;
                block_cursor += 2;
            }
            stage_outputs.push((dims, tokens));
            if i < NUM_STAGES - 1 {
                tokens = patch_merge(tape, tokens, dims, &ids.merges[i])?;
                dims = cfg.stage_grid(i + 1);
            }
        }
        let eps = T::from_f64(LN_EPS);
        let normed = tape.layer_norm(tokens, ids.final_gamma, ids.final_beta, eps)?;
        let pooled = tape.mean_rows(normed);
        let logits = tape.linear(pooled, ids.head_w, ids.head_b)?;
        Ok(ForwardOutput {
            logits,
            stage_outputs,
        })
    }
}

/// Tape handles for the patch-embedding parameters.
#[derive(Clone, Copy, Debug)]
pub struct PatchEmbedParamIds {
    pub kernel: TensorId,
    pub bias: TensorId,
    pub norm_gamma: TensorId,
    pub norm_beta: TensorId,
}

/// Tape handles for one patch-merging layer.
#[derive(Clone, Copy, Debug)]
pub struct MergeParamIds {
    pub norm_gamma: TensorId,
    pub norm_beta: TensorId,
    pub linear: TensorId,
}

/// Tape handles for the whole model, in canonical order.
pub struct ModelParamIds {
    pub patch_embed: PatchEmbedParamIds,
    pub stages: Vec<Vec<BlockParamIds>>,
    pub merges: Vec<MergeParamIds>,
    pub final_gamma: TensorId,
    pub final_beta: TensorId,
    pub head_w: TensorId,
    pub head_b: TensorId,
}

impl ModelParamIds {
    /// Ids flattened into canonical parameter order.
    pub fn flatten(&self) -> Vec<TensorId> {
        let mut out = vec![
            self.patch_embed.kernel,
            self.patch_embed.bias,
            self.patch_embed.norm_gamma,
            self.patch_embed.norm_beta,
        ];
        for (i, blocks) in self.stages.iter().enumerate() {
            for b in blocks {
                out.extend([
                    b.ln1_gamma,
                    b.ln1_beta,
                    b.msa.qkv_w,
                    b.msa.qkv_b,
                    b.msa.out_w,
                    b.msa.out_b,
                    b.msa.b_hat,
                    b.ln2_gamma,
                    b.ln2_beta,
                    b.fc1_w,
                    b.fc1_b,
                    b.fc2_w,
                    b.fc2_b,
                ]);
            }
            if i < self.merges.len() {
                let m = &self.merges[i];
                out.extend([m.norm_gamma, m.norm_beta, m.linear]);
            }
        }
        out.extend([self.final_gamma, self.final_beta, self.head_w, self.head_b]);
        out
    }

    /// Inverse of [`ModelParamIds::flatten`] for a given architecture.
    pub fn from_flat(config: &ArchConfig, ids: &[TensorId]) -> Result<Self> {
        let expected = 4
            + config.total_blocks() * 13
            + (NUM_STAGES - 1) * 3
            + 4;
        if ids.len() != expected {
            return Err(Error::Config(format!(
                "expected {expected} parameter ids, got {}",
                ids.len()
            )));
        }
        let mut cursor = 0usize;
        let mut take = || {
            let id = ids[cursor];
            cursor += 1;
            id
        };
        let patch_embed = PatchEmbedParamIds {
            kernel: take(),
            bias: take(),
            norm_gamma: take(),
            norm_beta: take(),
        };
        let mut stages = Vec::with_capacity(NUM_STAGES);
        let mut merges = Vec::with_capacity(NUM_STAGES - 1);
        for i in 0..NUM_STAGES {
            let blocks = (0..config.depths[i])
                .map(|_| {
                    use crate::attention::MsaParamIds;
                    BlockParamIds {
                        ln1_gamma: take(),
                        ln1_beta: take(),
                        msa: MsaParamIds {
                            qkv_w: take(),
                            qkv_b: take(),
                            out_w: take(),
                            out_b: take(),
                            b_hat: take(),
                        },
                        ln2_gamma: take(),
                        ln2_beta: take(),
                        fc1_w: take(),
                        fc1_b: take(),
                        fc2_w: take(),
                        fc2_b: take(),
                    }
                })
                .collect();
            stages.push(blocks);
            if i < NUM_STAGES - 1 {
                merges.push(MergeParamIds {
                    norm_gamma: take(),
                    norm_beta: take(),
                    linear: take(),
                });
            }
        }
        Ok(ModelParamIds {
            patch_embed,
            stages,
            merges,
            final_gamma: take(),
            final_beta: take(),
            head_w: take(),
            head_b: take(),
        })
    }
}

/// Result of a forward pass: logits plus per-stage block outputs for
/// shape-trace cross-checks.
pub struct ForwardOutput {
    pub logits: TensorId,
    pub stage_outputs: Vec<(GridDims, TensorId)>,
}

/// Gather index flattening each non-overlapping `2×4×4` patch into 32
/// consecutive rgb rows, in `(t, h, w)` row-major order within the patch.
fn patch_gather_index(clip: ClipDims) -> Vec<i64> {
    let (gt, gh, gw) = (
        clip.frames / PATCH_T,
        clip.height / PATCH_S,
        clip.width / PATCH_S,
    );
    let mut index = Vec::with_capacity(gt * gh * gw * PATCH_T * PATCH_S * PATCH_S);
    for pt in 0..gt {
        for ph in 0..gh {
            for pw in 0..gw {
                for lt in 0..PATCH_T {
                    for lh in 0..PATCH_S {
                        for lw in 0..PATCH_S {
                            let t = pt * PATCH_T + lt;
                            let h = ph * PATCH_S + lh;
                            let w = pw * PATCH_S + lw;
                            index.push(((t * clip.height + h) * clip.width + w) as i64);
                        }
                    }
                }
            }
        }
    }
    index
}

/// Splits a `(T, H, W, 3)` clip into patch tokens, projects them to `C`, and
/// layer-norms: output is `(T/2 · H/4 · W/4, C)`.
pub fn patch_embed<T: Element>(
    tape: &mut Tape<T>,
    clip: TensorId,
    ids: &PatchEmbedParamIds,
    cfg: &ArchConfig,
) -> Result<TensorId> {
    let expected = [
        cfg.clip.frames,
        cfg.clip.height,
        cfg.clip.width,
        IN_CHANNELS,
    ];
    if tape.value(clip).shape() != expected {
        return Err(Error::shape(
            "patch_embed clip",
            tape.value(clip).shape(),
            &expected,
        ));
    }
    let grid = cfg.stage_grid(0);
    let index = Rc::new(patch_gather_index(cfg.clip));
    let rows = tape.gather_rows(clip, index)?;
    let flat = tape.reshape(rows, &[grid.tokens(), PATCH_FEATURES])?;
    let kernel = tape.reshape(ids.kernel, &[PATCH_FEATURES, cfg.channels])?;
    let projected = tape.linear(flat, kernel, ids.bias)?;
    tape.layer_norm(projected, ids.norm_gamma, ids.norm_beta, T::from_f64(LN_EPS))
}

/// Concatenates each spatial `2×2` token group `(h0w0, h1w0, h0w1, h1w1)`,
/// layer-norms the `4c` features, and projects to `2c`. The temporal extent
/// is left untouched.
pub fn patch_merge<T: Element>(
    tape: &mut Tape<T>,
    tokens: TensorId,
    dims: GridDims,
    ids: &MergeParamIds,
) -> Result<TensorId> {
    if dims.h % 2 != 0 || dims.w % 2 != 0 {
        return Err(Error::Config(format!(
            "patch merge needs even spatial dims, got {}x{}",
            dims.h, dims.w
        )));
    }
    let c = tape.value(tokens).last_dim();
    let mut index = Vec::with_capacity(dims.tokens());
    for t in 0..dims.t {
        for h2 in 0..dims.h / 2 {
            for w2 in 0..dims.w / 2 {
                for (dh, dw) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    index.push(dims.flat(t, 2 * h2 + dh, 2 * w2 + dw) as i64);
                }
            }
        }
    }
    let gathered = tape.gather_rows(tokens, Rc::new(index))?;
    let grouped = tape.reshape(gathered, &[dims.t * (dims.h / 2) * (dims.w / 2), 4 * c])?;
    let normed = tape.layer_norm(grouped, ids.norm_gamma, ids.norm_beta, T::from_f64(LN_EPS))?;
    let zero_bias = tape.constant(Tensor::zeros(&[2 * c]));
    tape.linear(normed, ids.linear, zero_bias)
}
