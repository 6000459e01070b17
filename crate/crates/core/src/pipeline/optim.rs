//! AdamW with decoupled weight decay and the warmup + half-cosine schedule.

use crate::error::{Error, Result};
use crate::tensor::{Element, Tensor};

/// Optimizer hyper-parameters shared by all tensors.
#[derive(Clone, Copy, Debug)]
pub struct AdamWHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWHyper {
    fn default() -> Self {
        AdamWHyper {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.02,
        }
    }
}

/// First/second moment buffers per parameter tensor plus the step counter.
#[derive(Clone, Debug)]
pub struct AdamWState<T> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Element> AdamWState<T> {
    /// Zero moments for parameters of the given sizes.
    pub fn new(sizes: &[usize]) -> Self {
        AdamWState {
            step: 0,
            m: sizes.iter().map(|&n| vec![T::ZERO; n]).collect(),
            v: sizes.iter().map(|&n| vec![T::ZERO; n]).collect(),
        }
    }
}

/// One AdamW update over every parameter tensor. Weight decay is decoupled:
/// `θ ← θ − lr·wd·θ` applies separately from the bias-corrected adaptive
/// step. `lrs` carries the already-scheduled learning rate per tensor.
pub fn adamw_step<T: Element>(
    names: &[String],
    params: &mut [&mut Tensor<T>],
    grads: &[Vec<T>],
    state: &mut AdamWState<T>,
    lrs: &[f64],
    hp: &AdamWHyper,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() || params.len() != lrs.len() {
        return Err(Error::Config(format!(
            "optimizer arity mismatch: {} params, {} grads, {} states, {} lrs",
            params.len(),
            grads.len(),
            state.m.len(),
            lrs.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - hp.beta1.powi(t);
    let bc2 = 1.0 - hp.beta2.powi(t);

    for (i, param) in params.iter_mut().enumerate() {
        let grad = &grads[i];
        if grad.len() != param.numel() {
            return Err(Error::shape(
                format!("gradient for {}", names[i]),
                &[grad.len()],
                param.shape(),
            ));
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite(format!("gradient of `{}`", names[i])));
        }
        let lr = lrs[i];
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        let b1 = T::from_f64(hp.beta1);
        let b2 = T::from_f64(hp.beta2);
        let one_m_b1 = T::from_f64(1.0 - hp.beta1);
        let one_m_b2 = T::from_f64(1.0 - hp.beta2);
        let decay = T::from_f64(1.0 - lr * hp.weight_decay);
        let lr_bc = T::from_f64(lr / bc1);
        let inv_sqrt_bc2 = T::from_f64(1.0 / bc2.sqrt());
        let eps = T::from_f64(hp.eps);
        for ((p, &g), (ms, vs)) in param
            .data_mut()
            .iter_mut()
            .zip(grad)
            .zip(m.iter_mut().zip(v.iter_mut()))
        {
            *p = *p * decay;
            *ms = b1 * *ms + one_m_b1 * g;
            *vs = b2 * *vs + one_m_b2 * g * g;
            let denom = (*vs).sqrt() * inv_sqrt_bc2 + eps;
            *p = *p - lr_bc * *ms / denom;
        }
    }
    Ok(())
}

/// Learning-rate group: the pretrained backbone runs at `ratio` times the
/// head rate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    Backbone,
    Head,
}

/// Linear ramp from 0 to `base_lr` over the warmup, then a half-cosine decay
/// to 0 at `total_steps`. Continuous at the warmup boundary.
pub fn lr_schedule(
    step: u64,
    total_steps: u64,
    warmup_steps: u64,
    base_lr: f64,
    group: ParamGroup,
    ratio: f64,
) -> f64 {
    assert!(
        warmup_steps < total_steps,
        "warmup ({warmup_steps}) must end before the schedule does ({total_steps})"
    );
    let lr = if step < warmup_steps {
        base_lr * step as f64 / warmup_steps as f64
    } else {
        let progress = (step - warmup_steps) as f64 / (total_steps - warmup_steps) as f64;
        let progress = progress.min(1.0);
        base_lr * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
    };
    match group {
        ParamGroup::Head => lr,
        ParamGroup::Backbone => lr * ratio,
    }
}
