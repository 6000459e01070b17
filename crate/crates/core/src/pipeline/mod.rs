//! Multi-view clip sampling and score-averaged inference.

pub mod optim;
pub mod train;

pub use optim::{adamw_step, lr_schedule, AdamWHyper, AdamWState, ParamGroup};
pub use train::{synthetic_clips, toy_arch, train_toy, LabeledClips, StepStats, TrainConfig, TrainRun};

use crate::error::{Error, Result};
use crate::model::{ClipDims, VideoSwinModel, IN_CHANNELS};
use crate::tensor::{self, Element, Tape, Tensor};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How a full video becomes a set of evaluation views.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ViewSpec {
    pub temporal_clips: usize,
    pub spatial_crops: usize,
    pub clip_len: usize,
    pub frame_stride: usize,
    pub crop_size: usize,
}

impl Default for ViewSpec {
    fn default() -> Self {
        ViewSpec {
            temporal_clips: 4,
            spatial_crops: 3,
            clip_len: 32,
            frame_stride: 2,
            crop_size: 224,
        }
    }
}

impl ViewSpec {
    pub fn num_views(&self) -> usize {
        self.temporal_clips * self.spatial_crops
    }

    pub fn validate(&self) -> Result<()> {
        if self.temporal_clips == 0 || self.clip_len == 0 || self.frame_stride == 0 {
            return Err(Error::Config(
                "temporal clips, clip length, and stride must be positive".into(),
            ));
        }
        if !matches!(self.spatial_crops, 1 | 3) {
            return Err(Error::Config(format!(
                "{} spatial crops not supported; the implemented protocols use 1 or 3",
                self.spatial_crops
            )));
        }
        Ok(())
    }
}

/// Bilinear resize of a `(N, H, W, 3)` video to `(N, out_h, out_w, 3)`.
fn resize_bilinear<T: Element>(video: &Tensor<T>, out_h: usize, out_w: usize) -> Tensor<T> {
    let (n, h, w) = match video.shape() {
        [n, h, w, _] => (*n, *h, *w),
        _ => unreachable!("validated by caller"),
    };
    if h == out_h && w == out_w {
        return video.clone();
    }
    let mut out = Tensor::zeros(&[n, out_h, out_w, IN_CHANNELS]);
    let scale_y = h as f64 / out_h as f64;
    let scale_x = w as f64 / out_w as f64;
    let src = video.data();
    let dst = out.data_mut();
    for f in 0..n {
        let fbase = f * h * w * IN_CHANNELS;
        for y in 0..out_h {
            let sy = ((y as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (h - 1) as f64);
            let y0 = sy.floor() as usize;
            let y1 = (y0 + 1).min(h - 1);
            let fy = sy - y0 as f64;
            for x in 0..out_w {
                let sx = ((x as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (w - 1) as f64);
                let x0 = sx.floor() as usize;
                let x1 = (x0 + 1).min(w - 1);
                let fx = sx - x0 as f64;
                for ch in 0..IN_CHANNELS {
                    let at = |yy: usize, xx: usize| {
                        src[fbase + (yy * w + xx) * IN_CHANNELS + ch].to_f64()
                    };
                    let top = at(y0, x0) * (1.0 - fx) + at(y0, x1) * fx;
                    let bot = at(y1, x0) * (1.0 - fx) + at(y1, x1) * fx;
                    dst[(f * out_h + y) * out_w * IN_CHANNELS + x * IN_CHANNELS + ch] =
                        T::from_f64(top * (1.0 - fy) + bot * fy);
                }
            }
        }
    }
    out
}

/// First frame index of each temporal clip: uniformly spaced over the valid
/// start range, centered when only one clip is taken. Starts stay valid even
/// for short videos, whose frame indices wrap modulo the frame count.
pub fn temporal_starts(frames: usize, spec: &ViewSpec) -> Vec<usize> {
    let span = (spec.clip_len - 1) * spec.frame_stride + 1;
    let max_start = frames.saturating_sub(span);
    let k = spec.temporal_clips;
    if k == 1 {
        return vec![max_start / 2];
    }
    (0..k)
        .map(|i| (i * max_start + (k - 1) / 2) / (k - 1))
        .collect()
}

/// Cuts a video into `temporal_clips × spatial_crops` views: the shorter
/// spatial side is scaled to `crop_size` and crops anchor at the start,
/// center, and end of the longer axis.
pub fn sample_views<T: Element>(video: &Tensor<T>, spec: &ViewSpec) -> Result<Vec<Tensor<T>>> {
    spec.validate()?;
    let (n, h, w) = match video.shape() {
        [n, h, w, c] if *c == IN_CHANNELS && *n >= 1 => (*n, *h, *w),
        other => return Err(Error::shape("sample_views video", other, &[0, 0, 0, 3])),
    };

    let crop = spec.crop_size;
    let (out_h, out_w) = if h <= w {
        (crop, (w * crop).div_ceil(h).max(crop))
    } else {
        (((h * crop).div_ceil(w)).max(crop), crop)
    };
    let resized = resize_bilinear(video, out_h, out_w);

    let longer = out_h.max(out_w) - crop;
    let offsets: Vec<usize> = match spec.spatial_crops {
        1 => vec![longer / 2],
        3 => vec![0, longer / 2, longer],
        _ => unreachable!("validated above"),
    };

    let starts = temporal_starts(n, spec);
    let mut views = Vec::with_capacity(spec.num_views());
    for &start in &starts {
        for &off in &offsets {
            let (y0, x0) = if out_h > out_w { (off, 0) } else { (0, off) };
            let mut clip = Tensor::zeros(&[spec.clip_len, crop, crop, IN_CHANNELS]);
            for j in 0..spec.clip_len {
                let frame = (start + j * spec.frame_stride) % n;
                for y in 0..crop {
                    let src_row = ((frame * out_h + y0 + y) * out_w + x0) * IN_CHANNELS;
                    let dst_row = (j * crop + y) * crop * IN_CHANNELS;
                    clip.data_mut()[dst_row..dst_row + crop * IN_CHANNELS]
                        .copy_from_slice(&resized.data()[src_row..src_row + crop * IN_CHANNELS]);
                }
            }
            views.push(clip);
        }
    }
    Ok(views)
}

/// Result of multi-view inference.
#[derive(Clone, Debug)]
pub struct InferResult<T> {
    /// Uniform average of per-view softmax probabilities.
    pub probabilities: Vec<T>,
    pub predicted_class: usize,
    pub per_view: Vec<Vec<T>>,
}

/// Runs one view through the model and returns softmax probabilities.
pub fn infer_single<T: Element>(model: &VideoSwinModel<T>, clip: &Tensor<T>) -> Result<Vec<T>> {
    let mut tape = Tape::new();
    let ids = model.register(&mut tape, false);
    let clip_id = tape.constant(clip.clone());
    let out = model.forward(&mut tape, &ids, clip_id, None)?;
    let probs = tensor::softmax_lastdim(tape.value(out.logits))?;
    Ok(probs.into_data())
}

/// Multi-view inference: per-view softmax probabilities averaged uniformly.
/// Views evaluate in parallel and merge by view index.
pub fn infer<T: Element>(
    model: &VideoSwinModel<T>,
    video: &Tensor<T>,
    spec: &ViewSpec,
) -> Result<InferResult<T>> {
    let cfg = model.config.clip;
    let expected = ClipDims::new(spec.clip_len, spec.crop_size, spec.crop_size);
    if cfg != expected {
        return Err(Error::Config(format!(
            "view spec yields {}x{}x{} clips but the model expects {}x{}x{}",
            expected.frames, expected.height, expected.width, cfg.frames, cfg.height, cfg.width
        )));
    }
    let views = sample_views(video, spec)?;
    let per_view: Result<Vec<Vec<T>>> = views
        .par_iter()
        .map(|clip| infer_single(model, clip))
        .collect();
    let per_view = per_view?;

    let classes = model.config.num_classes;
    let mut avg = vec![T::ZERO; classes];
    for probs in &per_view {
        for (a, &p) in avg.iter_mut().zip(probs) {
            *a += p;
        }
    }
    let inv = T::ONE / T::from_f64(per_view.len() as f64);
    for a in avg.iter_mut() {
        *a = *a * inv;
    }
    let predicted_class = avg
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite probabilities"))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(InferResult {
        probabilities: avg,
        predicted_class,
        per_view,
    })
}
