//! Central-difference validation of the tape's backward rules.

use super::{Tape, Tensor, TensorId};
use crate::error::{Error, Result};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Controls for [`grad_check`].
#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step; must lie in `[1e-6, 1e-4]`.
    pub step: f64,
    /// When set, check only this many randomly sampled elements per tensor.
    pub samples_per_tensor: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-5,
            samples_per_tensor: None,
            seed: 0,
        }
    }
}

/// Compares analytic gradients of a scalar-valued composite against central
/// differences, returning the max over checked parameters of
/// `|analytic − numeric| / max(1, |numeric|)`.
///
/// `build` must construct the same scalar from the parameter leaves it is
/// given; it runs once for the analytic pass and twice per checked element.
pub fn grad_check<F>(build: F, params: &[Tensor<f64>], opts: &GradCheckOptions) -> Result<f64>
where
    F: Fn(&mut Tape<f64>, &[TensorId]) -> Result<TensorId>,
{
    if !(1e-6..=1e-4).contains(&opts.step) {
        return Err(Error::Config(format!(
            "grad_check step {} outside [1e-6, 1e-4]",
            opts.step
        )));
    }

    let eval = |values: &[Tensor<f64>]| -> Result<(f64, Vec<Vec<f64>>)> {
        let mut tape = Tape::new();
        let ids: Vec<TensorId> = values.iter().map(|t| tape.param(t.clone())).collect();
        let root = build(&mut tape, &ids)?;
        let out = tape.value(root).data()[0];
        if !out.is_finite() {
            return Err(Error::NonFinite("grad_check objective".into()));
        }
        tape.backward(root)?;
        let grads = ids
            .iter()
            .map(|&id| tape.grad(id).expect("trainable leaf").to_vec())
            .collect();
        Ok((out, grads))
    };

    let (_, analytic) = eval(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut work: Vec<Tensor<f64>> = params.to_vec();
    let mut max_rel = 0.0f64;

    for (pi, param) in params.iter().enumerate() {
        let n = param.numel();
        let elements: Vec<usize> = match opts.samples_per_tensor {
            Some(k) if k < n => sample(&mut rng, n, k).into_vec(),
            _ => (0..n).collect(),
        };
        for e in elements {
            let orig = param.data()[e];
            work[pi].data_mut()[e] = orig + opts.step;
            let (f_plus, _) = eval(&work)?;
            work[pi].data_mut()[e] = orig - opts.step;
            let (f_minus, _) = eval(&work)?;
            work[pi].data_mut()[e] = orig;

            let numeric = (f_plus - f_minus) / (2.0 * opts.step);
            let a = analytic[pi][e];
            if !numeric.is_finite() || !a.is_finite() {
                return Err(Error::NonFinite(format!(
                    "grad_check derivative for parameter {pi} element {e}"
                )));
            }
            let rel = (a - numeric).abs() / numeric.abs().max(1.0);
            max_rel = max_rel.max(rel);
        }
    }
    Ok(max_rel)
}
