//! Forward kernels shared by the tape and by plain (non-recorded) callers.
//!
//! All kernels allocate fresh outputs and never mutate inputs. Batched matmul
//! runs data-parallel over the leading batch extent; outputs are disjoint so
//! results do not depend on the schedule.

use super::{strides, Element, Tensor};
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Additive sentinel for masked attention pairs.
pub const MASK_VALUE: f64 = -100.0;

/// Rows whose maximum entry is at or below this are treated as fully masked.
pub const FULLY_MASKED_THRESHOLD: f64 = MASK_VALUE / 2.0;

/// Below this many multiply-accumulates, matmul stays single-threaded.
const PAR_MACS: usize = 1 << 16;

fn mm_2d<T: Element>(a: &[T], b: &[T], out: &mut [T], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// Matrix product `a[m,k] · b[k,n]`, optionally with one identical leading
/// batch extent on both sides.
pub fn matmul<T: Element>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    match (a.shape(), b.shape()) {
        ([m, k1], [k2, n]) if k1 == k2 => {
            let mut out = Tensor::zeros(&[*m, *n]);
            mm_2d(a.data(), b.data(), out.data_mut(), *m, *k1, *n);
            Ok(out)
        }
        ([ba, m, k1], [bb, k2, n]) if ba == bb && k1 == k2 => {
            let (batch, m, k, n) = (*ba, *m, *k1, *n);
            let mut out = Tensor::zeros(&[batch, m, n]);
            let (asz, bsz, osz) = (m * k, k * n, m * n);
            if batch * m * k * n >= PAR_MACS {
                out.data_mut()
                    .par_chunks_mut(osz)
                    .enumerate()
                    .for_each(|(i, chunk)| {
                        mm_2d(
                            &a.data()[i * asz..(i + 1) * asz],
                            &b.data()[i * bsz..(i + 1) * bsz],
                            chunk,
                            m,
                            k,
                            n,
                        );
                    });
            } else {
                for i in 0..batch {
                    mm_2d(
                        &a.data()[i * asz..(i + 1) * asz],
                        &b.data()[i * bsz..(i + 1) * bsz],
                        &mut out.data_mut()[i * osz..(i + 1) * osz],
                        m,
                        k,
                        n,
                    );
                }
            }
            Ok(out)
        }
        _ => Err(Error::shape("matmul", a.shape(), b.shape())),
    }
}

/// Softmax over the last axis with max-subtraction.
///
/// A slice whose maximum is at or below [`FULLY_MASKED_THRESHOLD`] contains
/// only mask sentinels and is rejected rather than normalized.
pub fn softmax_lastdim<T: Element>(x: &Tensor<T>) -> Result<Tensor<T>> {
    let n = x.last_dim();
    if n == 0 {
        return Err(Error::shape("softmax_lastdim", x.shape(), &[]));
    }
    let mut out = Tensor::zeros(x.shape());
    for (slice, (xin, xout)) in x
        .data()
        .chunks(n)
        .zip(out.data_mut().chunks_mut(n))
        .enumerate()
    {
        let max = xin.iter().fold(xin[0], |acc, &v| acc.max(v));
        if max.to_f64() <= FULLY_MASKED_THRESHOLD {
            return Err(Error::FullyMaskedRow { slice });
        }
        let mut sum = T::ZERO;
        for (o, &v) in xout.iter_mut().zip(xin) {
            *o = (v - max).exp();
            sum += *o;
        }
        for o in xout.iter_mut() {
            *o = *o / sum;
        }
    }
    Ok(out)
}

/// Per-slice mean and biased-variance statistics used by layer norm.
pub(crate) fn layer_norm_stats<T: Element>(x: &Tensor<T>, c: usize, eps: T) -> (Vec<T>, Vec<T>) {
    let rows = x.numel() / c;
    let mut mean = Vec::with_capacity(rows);
    let mut inv_std = Vec::with_capacity(rows);
    for row in x.data().chunks(c) {
        let mut m = T::ZERO;
        for &v in row {
            m += v;
        }
        m = m / T::from_f64(c as f64);
        let mut var = T::ZERO;
        for &v in row {
            let d = v - m;
            var += d * d;
        }
        var = var / T::from_f64(c as f64);
        mean.push(m);
        inv_std.push(T::ONE / (var + eps).sqrt());
    }
    (mean, inv_std)
}

/// Zero-mean unit-variance normalization over the last axis followed by the
/// `gamma`/`beta` affine map. Variance is biased (divide by `c`).
pub fn layer_norm<T: Element>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    eps: T,
) -> Result<Tensor<T>> {
    let c = x.last_dim();
    if gamma.shape() != [c] || beta.shape() != [c] {
        return Err(Error::shape("layer_norm", x.shape(), gamma.shape()));
    }
    let (mean, inv_std) = layer_norm_stats(x, c, eps);
    let mut out = Tensor::zeros(x.shape());
    for (r, (xin, xout)) in x
        .data()
        .chunks(c)
        .zip(out.data_mut().chunks_mut(c))
        .enumerate()
    {
        for i in 0..c {
            xout[i] = (xin[i] - mean[r]) * inv_std[r] * gamma.data()[i] + beta.data()[i];
        }
    }
    Ok(out)
}

/// Elementwise `x · Φ(x)` with the exact error-function form.
pub fn gelu<T: Element>(x: &Tensor<T>) -> Tensor<T> {
    let mut out = Tensor::zeros(x.shape());
    let half = T::from_f64(0.5);
    let inv_sqrt2 = T::from_f64(std::f64::consts::FRAC_1_SQRT_2);
    for (o, &v) in out.data_mut().iter_mut().zip(x.data()) {
        *o = v * half * (T::ONE + (v * inv_sqrt2).erf());
    }
    out
}

pub(crate) fn gelu_derivative<T: Element>(x: T) -> T {
    let half = T::from_f64(0.5);
    let inv_sqrt2 = T::from_f64(std::f64::consts::FRAC_1_SQRT_2);
    let inv_sqrt_2pi = T::from_f64(1.0 / (2.0 * std::f64::consts::PI).sqrt());
    let phi_cdf = half * (T::ONE + (x * inv_sqrt2).erf());
    let phi_pdf = inv_sqrt_2pi * (-(x * x) * half).exp();
    phi_cdf + x * phi_pdf
}

/// `x · w + b` with `w: (in, out)` broadcast over the leading axes of `x`.
pub fn linear<T: Element>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let c_in = x.last_dim();
    let (w_in, w_out) = match w.shape() {
        [i, o] => (*i, *o),
        _ => return Err(Error::shape("linear weight", w.shape(), &[c_in, 0])),
    };
    if w_in != c_in || b.shape() != [w_out] {
        return Err(Error::shape("linear", x.shape(), w.shape()));
    }
    let rows = x.numel() / c_in;
    let mut out_shape = x.shape().to_vec();
    *out_shape.last_mut().unwrap() = w_out;
    let mut out = Tensor::zeros(&out_shape);
    for chunk in out.data_mut().chunks_mut(w_out) {
        chunk.copy_from_slice(b.data());
    }
    let run = |xd: &[T], od: &mut [T]| {
        mm_2d(xd, w.data(), od, xd.len() / c_in, c_in, w_out);
    };
    if rows * c_in * w_out >= PAR_MACS && rows >= 8 {
        let band = rows.div_ceil(rayon::current_num_threads().max(1));
        out.data_mut()
            .par_chunks_mut(band * w_out)
            .enumerate()
            .for_each(|(i, ochunk)| {
                let r0 = i * band;
                let r1 = (r0 + ochunk.len() / w_out).min(rows);
                run(&x.data()[r0 * c_in..r1 * c_in], ochunk);
            });
    } else {
        run(x.data(), out.data_mut());
    }
    Ok(out)
}

/// Elementwise sum of two same-shape tensors.
pub fn add<T: Element>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    if a.shape() != b.shape() {
        return Err(Error::shape("add", a.shape(), b.shape()));
    }
    let mut out = a.clone();
    out.clear_grad();
    for (o, &v) in out.data_mut().iter_mut().zip(b.data()) {
        *o += v;
    }
    Ok(out)
}

/// Validates that `y` matches `x` rank-for-rank with some axes collapsed to 1.
pub(crate) fn broadcast_axes<T: Element>(x: &Tensor<T>, y: &Tensor<T>) -> Result<Vec<bool>> {
    if x.shape().len() != y.shape().len() {
        return Err(Error::shape("broadcast", x.shape(), y.shape()));
    }
    x.shape()
        .iter()
        .zip(y.shape())
        .map(|(&xs, &ys)| {
            if ys == xs {
                Ok(false)
            } else if ys == 1 {
                Ok(true)
            } else {
                Err(Error::shape("broadcast", x.shape(), y.shape()))
            }
        })
        .collect()
}

fn for_each_broadcast<T: Element>(x: &Tensor<T>, y: &Tensor<T>, mut f: impl FnMut(usize, usize)) {
    let xs = strides(x.shape());
    let ys = strides(y.shape());
    let rank = x.shape().len();
    let mut idx = vec![0usize; rank];
    for xi in 0..x.numel() {
        let mut yi = 0;
        for d in 0..rank {
            if y.shape()[d] != 1 {
                yi += idx[d] * ys[d];
            }
        }
        f(xi, yi);
        for d in (0..rank).rev() {
            idx[d] += 1;
            if idx[d] < x.shape()[d] {
                break;
            }
            idx[d] = 0;
        }
        let _ = xs;
    }
}

/// `x + y` where `y` has the same rank with broadcast (extent-1) axes.
pub fn add_broadcast<T: Element>(x: &Tensor<T>, y: &Tensor<T>) -> Result<Tensor<T>> {
    broadcast_axes(x, y)?;
    let mut out = x.clone();
    out.clear_grad();
    let yd = y.data();
    let od = out.data_mut();
    for_each_broadcast(x, y, |xi, yi| od[xi] += yd[yi]);
    Ok(out)
}

/// Softmax over the last axis restricted to entries whose `keep` flag is
/// nonzero; dropped entries get weight exactly zero and are excluded from
/// the normalization. `keep` matches `x` rank-for-rank with broadcast
/// (extent-1) leading axes and a full last axis.
pub fn softmax_lastdim_masked<T: Element>(x: &Tensor<T>, keep: &Tensor<T>) -> Result<Tensor<T>> {
    broadcast_axes(x, keep)?;
    let n = x.last_dim();
    if keep.last_dim() != n || n == 0 {
        return Err(Error::shape("softmax_lastdim_masked", x.shape(), keep.shape()));
    }
    let rank = x.shape().len();
    let keep_strides = strides(keep.shape());
    let mut out = Tensor::zeros(x.shape());
    let rows = x.numel() / n;
    let mut idx = vec![0usize; rank - 1];
    for r in 0..rows {
        let mut koff = 0;
        for d in 0..rank - 1 {
            if keep.shape()[d] != 1 {
                koff += idx[d] * keep_strides[d];
            }
        }
        let krow = &keep.data()[koff..koff + n];
        let xrow = &x.data()[r * n..(r + 1) * n];
        let mut max: Option<T> = None;
        for (&kv, &xv) in krow.iter().zip(xrow) {
            if kv != T::ZERO {
                max = Some(match max {
                    Some(m) => m.max(xv),
                    None => xv,
                });
            }
        }
        let max = max.ok_or(Error::FullyMaskedRow { slice: r })?;
        let orow = &mut out.data_mut()[r * n..(r + 1) * n];
        let mut sum = T::ZERO;
        for ((o, &kv), &xv) in orow.iter_mut().zip(krow).zip(xrow) {
            if kv != T::ZERO {
                *o = (xv - max).exp();
                sum += *o;
            }
        }
        for o in orow.iter_mut() {
            *o = *o / sum;
        }
        for d in (0..rank - 1).rev() {
            idx[d] += 1;
            if idx[d] < x.shape()[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(out)
}

pub fn scale<T: Element>(x: &Tensor<T>, c: T) -> Tensor<T> {
    let mut out = x.clone();
    out.clear_grad();
    for v in out.data_mut() {
        *v = *v * c;
    }
    out
}

/// Row gather over `x` viewed as `(num_rows, last_dim)`. Index `-1` yields a
/// zero row (used for padded window slots).
pub fn gather_rows<T: Element>(x: &Tensor<T>, index: &[i64]) -> Result<Tensor<T>> {
    let c = x.last_dim();
    let rows = x.num_rows() as i64;
    let mut out = Tensor::zeros(&[index.len(), c]);
    for (slot, &src) in index.iter().enumerate() {
        if src < 0 {
            continue;
        }
        if src >= rows {
            return Err(Error::shape("gather_rows", x.shape(), &[src as usize]));
        }
        let src = src as usize;
        out.data_mut()[slot * c..(slot + 1) * c].copy_from_slice(&x.data()[src * c..(src + 1) * c]);
    }
    Ok(out)
}

/// Expands a per-head bias table into dense per-pair biases:
/// `out[h, i, j] = table[h, index[i·n + j]]`.
pub fn gather_bias<T: Element>(table: &Tensor<T>, index: &[usize], n: usize) -> Result<Tensor<T>> {
    let (heads, entries) = match table.shape() {
        [h, s] => (*h, *s),
        _ => return Err(Error::shape("gather_bias table", table.shape(), &[0, 0])),
    };
    if index.len() != n * n {
        return Err(Error::shape("gather_bias index", &[index.len()], &[n * n]));
    }
    let mut out = Tensor::zeros(&[heads, n, n]);
    for h in 0..heads {
        let trow = &table.data()[h * entries..(h + 1) * entries];
        let orow = &mut out.data_mut()[h * n * n..(h + 1) * n * n];
        for (o, &idx) in orow.iter_mut().zip(index) {
            debug_assert!(idx < entries);
            *o = trow[idx];
        }
    }
    Ok(out)
}

/// Materializing axis permutation: `out[perm(i)] = x[i]`.
pub fn permute_axes<T: Element>(x: &Tensor<T>, perm: &[usize]) -> Result<Tensor<T>> {
    let rank = x.shape().len();
    if perm.len() != rank {
        return Err(Error::shape("permute_axes", x.shape(), &[perm.len()]));
    }
    let mut seen = vec![false; rank];
    for &p in perm {
        if p >= rank || seen[p] {
            return Err(Error::shape("permute_axes", x.shape(), perm));
        }
        seen[p] = true;
    }
    let out_shape: Vec<usize> = perm.iter().map(|&p| x.shape()[p]).collect();
    let in_strides = strides(x.shape());
    let out_strides = strides(&out_shape);
    let mut out = Tensor::zeros(&out_shape);
    let od = out.data_mut();
    let mut idx = vec![0usize; rank];
    for &v in x.data() {
        let mut off = 0;
        for (d, &p) in perm.iter().enumerate() {
            off += idx[p] * out_strides[d];
        }
        od[off] = v;
        for d in (0..rank).rev() {
            idx[d] += 1;
            if idx[d] < x.shape()[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    let _ = in_strides;
    Ok(out)
}

/// Column means of `x` viewed as `(rows, last_dim)`.
pub fn mean_rows<T: Element>(x: &Tensor<T>) -> Tensor<T> {
    let c = x.last_dim();
    let rows = x.num_rows();
    let mut out = Tensor::zeros(&[c]);
    for row in x.data().chunks(c) {
        for (o, &v) in out.data_mut().iter_mut().zip(row) {
            *o += v;
        }
    }
    let inv = T::ONE / T::from_f64(rows.max(1) as f64);
    for o in out.data_mut() {
        *o = *o * inv;
    }
    out
}

pub fn sum_all<T: Element>(x: &Tensor<T>) -> Tensor<T> {
    let mut s = T::ZERO;
    for &v in x.data() {
        s += v;
    }
    Tensor::scalar(s)
}

/// Mean cross-entropy over rows of `logits: (batch, classes)`; also returns
/// the softmax probabilities for reuse in backward.
pub fn cross_entropy<T: Element>(
    logits: &Tensor<T>,
    targets: &[usize],
) -> Result<(T, Tensor<T>)> {
    let classes = logits.last_dim();
    let batch = logits.num_rows();
    if targets.len() != batch {
        return Err(Error::shape("cross_entropy", logits.shape(), &[targets.len()]));
    }
    let mut probs = Tensor::zeros(logits.shape());
    let mut loss = T::ZERO;
    for (r, (row, prow)) in logits
        .data()
        .chunks(classes)
        .zip(probs.data_mut().chunks_mut(classes))
        .enumerate()
    {
        let target = targets[r];
        if target >= classes {
            return Err(Error::Config(format!(
                "target class {target} out of range for {classes} classes"
            )));
        }
        let max = row.iter().fold(row[0], |acc, &v| acc.max(v));
        let mut sum = T::ZERO;
        for &v in row {
            sum += (v - max).exp();
        }
        let lse = max + sum.ln();
        loss += lse - row[target];
        for (p, &v) in prow.iter_mut().zip(row) {
            *p = (v - lse).exp();
        }
    }
    Ok((loss / T::from_f64(batch as f64), probs))
}
