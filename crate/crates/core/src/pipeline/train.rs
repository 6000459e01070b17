//! Desk-scale training loop over synthetic labeled clips.

use super::optim::{adamw_step, lr_schedule, AdamWHyper, AdamWState, ParamGroup};
use crate::attention::{BlockBranches, BranchMode};
use crate::error::{Error, Result};
use crate::model::{ArchConfig, ClipDims, VideoSwinModel, IN_CHANNELS};
use crate::tensor::{Element, Tape, Tensor};
use crate::windowing::WindowSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Training hyper-parameters. The backbone learning rate is the head rate
/// times `backbone_lr_ratio`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub warmup_epochs: f64,
    pub batch_size: usize,
    pub base_lr: f64,
    pub backbone_lr_ratio: f64,
    pub weight_decay: f64,
    pub stochastic_depth_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            warmup_epochs: 5.0,
            batch_size: 8,
            base_lr: 3e-3,
            backbone_lr_ratio: 0.1,
            weight_decay: 0.02,
            stochastic_depth_rate: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.backbone_lr_ratio) {
            return Err(Error::Config(format!(
                "backbone lr ratio {} outside [0, 1]",
                self.backbone_lr_ratio
            )));
        }
        Ok(())
    }
}

/// Synthetic labeled clips.
#[derive(Clone, Debug)]
pub struct LabeledClips<T> {
    pub clips: Vec<Tensor<T>>,
    pub labels: Vec<usize>,
    pub classes: usize,
}

/// Class `k` is a spatial wave of frequency `k+1` moving over time, with a
/// random phase per sample plus noise. Every class is zero-mean, so the
/// pooled-feature shortcut is closed and the backbone has to pick up the
/// spatial structure.
pub fn synthetic_clips<T: Element>(
    count: usize,
    classes: usize,
    dims: ClipDims,
    seed: u64,
) -> LabeledClips<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = [dims.frames, dims.height, dims.width, IN_CHANNELS];
    let mut clips = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    let tau = 2.0 * std::f64::consts::PI;
    for i in 0..count {
        let label = i % classes;
        let phase: f64 = rng.gen::<f64>() * tau;
        let freq = (label + 1) as f64;
        let noise = Tensor::<f64>::rand_uniform(&shape, 0.05, &mut rng);
        let clip = Tensor::from_fn(&shape, |k| {
            let ch = k % IN_CHANNELS;
            let rest = k / IN_CHANNELS;
            let w = rest % dims.width;
            let rest = rest / dims.width;
            let h = rest % dims.height;
            let t = rest / dims.height;
            let pos = (h + w) as f64 / (dims.height + dims.width) as f64;
            let wave = (tau * freq * pos + phase + 0.5 * t as f64).sin();
            T::from_f64(0.5 * wave * (1.0 + 0.2 * ch as f64) + noise.data()[k])
        });
        clips.push(clip);
        labels.push(label);
    }
    LabeledClips {
        clips,
        labels,
        classes,
    }
}

/// The micro architecture used by the toy loop: C=16, depths {2,2,2,2},
/// head dim 8, window 4×4×4, 8×32×32 clips.
pub fn toy_arch(classes: usize) -> ArchConfig {
    ArchConfig {
        channels: 16,
        depths: [2, 2, 2, 2],
        window: WindowSpec::new(4, 4).expect("static window"),
        head_dim: 8,
        mlp_ratio: 4,
        num_classes: classes,
        clip: ClipDims::new(8, 32, 32),
        drop_path_rate: 0.0,
    }
}

/// One step's record.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepStats {
    pub step: usize,
    pub loss: f64,
    pub accuracy: f64,
    pub lr_head: f64,
    pub lr_backbone: f64,
}

/// Outcome of a toy run.
pub struct TrainRun<T> {
    pub model: VideoSwinModel<T>,
    pub history: Vec<StepStats>,
    /// First step (1-based) at which training accuracy reached 1.0, if any.
    pub converged_at: Option<usize>,
}

fn sample_branches<T: Element>(
    model: &VideoSwinModel<T>,
    rng: &mut ChaCha8Rng,
    rate_max: f64,
) -> Option<Vec<BlockBranches>> {
    if rate_max == 0.0 {
        return None;
    }
    let rates = model.config.drop_path_rates();
    Some(
        rates
            .iter()
            .map(|&rate| {
                let mut draw = |r: f64| {
                    if r == 0.0 {
                        BranchMode::Keep
                    } else if rng.gen::<f64>() < r {
                        BranchMode::Drop
                    } else {
                        BranchMode::KeepScaled(1.0 / (1.0 - r))
                    }
                };
                BlockBranches {
                    msa: draw(rate),
                    ffn: draw(rate),
                }
            })
            .collect(),
    )
}

/// Trains a freshly initialized micro model on the given clips with AdamW
/// and the warmup+cosine schedule, deterministically under the config seed.
pub fn train_toy<T: Element>(
    arch: ArchConfig,
    config: &TrainConfig,
    data: &LabeledClips<T>,
) -> Result<TrainRun<T>> {
    config.validate()?;
    let mut arch = arch;
    arch.drop_path_rate = config.stochastic_depth_rate;
    arch.validate()?;
    if data.clips.is_empty() || data.clips.len() != data.labels.len() {
        return Err(Error::Config("dataset must carry one label per clip".into()));
    }
    if arch.num_classes != data.classes {
        return Err(Error::Config(format!(
            "model has {} classes but dataset has {}",
            arch.num_classes, data.classes
        )));
    }

    let mut model = VideoSwinModel::<T>::init(arch, config.seed)?;
    let names = model.param_names();
    let sizes: Vec<usize> = model.params().iter().map(|p| p.numel()).collect();
    let groups: Vec<ParamGroup> = names
        .iter()
        .map(|n| {
            if n.starts_with("head.") {
                ParamGroup::Head
            } else {
                ParamGroup::Backbone
            }
        })
        .collect();
    let mut state = AdamWState::<T>::new(&sizes);
    let hp = AdamWHyper {
        weight_decay: config.weight_decay,
        ..Default::default()
    };

    let steps_per_epoch = data.clips.len().div_ceil(config.batch_size);
    let total_steps = (config.epochs * steps_per_epoch) as u64;
    let warmup_steps =
        ((config.warmup_epochs * steps_per_epoch as f64).round() as u64).min(total_steps - 1);
    let mut branch_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);

    let mut history = Vec::new();
    let mut converged_at = None;
    for step in 0..total_steps {
        let offset = (step as usize % steps_per_epoch) * config.batch_size;
        let end = (offset + config.batch_size).min(data.clips.len());

        let mut tape = Tape::<T>::new();
        let ids = model.register(&mut tape, true);
        let mut loss_terms = Vec::with_capacity(end - offset);
        let mut correct = 0usize;
        for i in offset..end {
            let clip = tape.constant(data.clips[i].clone());
            let branches = sample_branches(&model, &mut branch_rng, config.stochastic_depth_rate);
            // scores driven below the mask threshold everywhere are a
            // blow-up, not a masking bug: report divergence
            let out = match model.forward(&mut tape, &ids, clip, branches.as_deref()) {
                Ok(out) => out,
                Err(Error::FullyMaskedRow { .. }) => {
                    return Err(Error::Diverged {
                        step: step as usize + 1,
                    })
                }
                Err(other) => return Err(other),
            };
            let logits = tape.reshape(out.logits, &[1, arch.num_classes])?;
            loss_terms.push(tape.cross_entropy(logits, &[data.labels[i]])?);

            let lv = tape.value(out.logits).data();
            let pred = lv
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite logits"))
                .map(|(k, _)| k)
                .unwrap_or(0);
            if pred == data.labels[i] {
                correct += 1;
            }
        }
        let mut loss = loss_terms[0];
        for &term in &loss_terms[1..] {
            loss = tape.add(loss, term)?;
        }
        let loss = tape.scale(loss, T::from_f64(1.0 / loss_terms.len() as f64));
        let loss_value = tape.value(loss).data()[0].to_f64();
        if !loss_value.is_finite() {
            return Err(Error::Diverged {
                step: step as usize + 1,
            });
        }
        tape.backward(loss)?;

        let lr_head = lr_schedule(
            step + 1,
            total_steps,
            warmup_steps,
            config.base_lr,
            ParamGroup::Head,
            config.backbone_lr_ratio,
        );
        let lr_backbone = lr_schedule(
            step + 1,
            total_steps,
            warmup_steps,
            config.base_lr,
            ParamGroup::Backbone,
            config.backbone_lr_ratio,
        );

        let param_ids = ids.flatten();
        let grads: Vec<Vec<T>> = param_ids
            .iter()
            .map(|&id| tape.grad(id).expect("trainable param").to_vec())
            .collect();
        drop(tape);

        let lrs: Vec<f64> = groups
            .iter()
            .map(|g| match g {
                ParamGroup::Head => lr_head,
                ParamGroup::Backbone => lr_backbone,
            })
            .collect();
        let mut params = model.params_mut();
        adamw_step(&names, &mut params, &grads, &mut state, &lrs, &hp)?;

        let accuracy = correct as f64 / (end - offset) as f64;
        history.push(StepStats {
            step: step as usize + 1,
            loss: loss_value,
            accuracy,
            lr_head,
            lr_backbone,
        });

        if accuracy == 1.0 && end - offset == data.clips.len() && converged_at.is_none() {
            converged_at = Some(step as usize + 1);
        }
    }

    Ok(TrainRun {
        model,
        history,
        converged_at,
    })
}
