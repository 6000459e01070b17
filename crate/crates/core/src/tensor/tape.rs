//! Reverse-mode tape over the forward kernels.
//!
//! Nodes are appended in execution order, so walking the records backwards
//! visits operations in exact reverse execution order. A tape is confined to
//! one thread; the tensors it produces are safe to share read-only.

use super::kernels::{self, broadcast_axes, gelu_derivative, layer_norm_stats};
use super::{strides, Element, Tensor};
use crate::error::{Error, Result};
use std::rc::Rc;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TensorId(usize);

#[derive(Clone)]
enum Op<T> {
    Leaf,
    MatMul {
        a: TensorId,
        b: TensorId,
    },
    Linear {
        x: TensorId,
        w: TensorId,
        b: TensorId,
    },
    Softmax {
        x: TensorId,
    },
    LayerNorm {
        x: TensorId,
        gamma: TensorId,
        beta: TensorId,
        mean: Rc<Vec<T>>,
        inv_std: Rc<Vec<T>>,
    },
    Gelu {
        x: TensorId,
    },
    Add {
        a: TensorId,
        b: TensorId,
    },
    AddBroadcast {
        x: TensorId,
        y: TensorId,
    },
    Scale {
        x: TensorId,
        c: T,
    },
    Reshape {
        x: TensorId,
    },
    PermuteAxes {
        x: TensorId,
        perm: Rc<Vec<usize>>,
    },
    GatherRows {
        x: TensorId,
        index: Rc<Vec<i64>>,
    },
    GatherBias {
        table: TensorId,
        index: Rc<Vec<usize>>,
    },
    MeanRows {
        x: TensorId,
    },
    SumAll {
        x: TensorId,
    },
    CrossEntropy {
        logits: TensorId,
        targets: Rc<Vec<usize>>,
        probs: Rc<Tensor<T>>,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    trainable: bool,
}

/// Records executed operations with enough context to run backward.
pub struct Tape<T: Element> {
    nodes: Vec<Node<T>>,
}

impl<T: Element> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Element> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>) -> TensorId {
        self.nodes.push(Node {
            value,
            op,
            trainable: false,
        });
        TensorId(self.nodes.len() - 1)
    }

    /// Non-trainable leaf (inputs, masks, other constants).
    pub fn constant(&mut self, value: Tensor<T>) -> TensorId {
        self.push(value, Op::Leaf)
    }

    /// Trainable leaf; guaranteed a populated grad after [`Tape::backward`].
    pub fn param(&mut self, value: Tensor<T>) -> TensorId {
        let id = self.push(value, Op::Leaf);
        self.nodes[id.0].trainable = true;
        id
    }

    pub fn value(&self, id: TensorId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn grad(&self, id: TensorId) -> Option<&[T]> {
        self.nodes[id.0].value.grad()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let out = kernels::matmul(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::MatMul { a, b }))
    }

    pub fn linear(&mut self, x: TensorId, w: TensorId, b: TensorId) -> Result<TensorId> {
        let out = kernels::linear(self.value(x), self.value(w), self.value(b))?;
        Ok(self.push(out, Op::Linear { x, w, b }))
    }

    pub fn softmax_lastdim(&mut self, x: TensorId) -> Result<TensorId> {
        let out = kernels::softmax_lastdim(self.value(x))?;
        Ok(self.push(out, Op::Softmax { x }))
    }

    /// Keep-masked softmax; `keep` is treated as a constant. Masked entries
    /// produce output exactly zero, so the shared softmax backward rule
    /// `y ⊙ (g − Σ g·y)` stays correct for them.
    pub fn softmax_lastdim_masked(&mut self, x: TensorId, keep: TensorId) -> Result<TensorId> {
        let out = kernels::softmax_lastdim_masked(self.value(x), self.value(keep))?;
        Ok(self.push(out, Op::Softmax { x }))
    }

    pub fn layer_norm(
        &mut self,
        x: TensorId,
        gamma: TensorId,
        beta: TensorId,
        eps: T,
    ) -> Result<TensorId> {
        let out = kernels::layer_norm(self.value(x), self.value(gamma), self.value(beta), eps)?;
        let c = self.value(x).last_dim();
        let (mean, inv_std) = layer_norm_stats(self.value(x), c, eps);
        Ok(self.push(
            out,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                mean: Rc::new(mean),
                inv_std: Rc::new(inv_std),
            },
        ))
    }

    pub fn gelu(&mut self, x: TensorId) -> TensorId {
        let out = kernels::gelu(self.value(x));
        self.push(out, Op::Gelu { x })
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let out = kernels::add(self.value(a), self.value(b))?;
        Ok(self.push(out, Op::Add { a, b }))
    }

    pub fn add_broadcast(&mut self, x: TensorId, y: TensorId) -> Result<TensorId> {
        let out = kernels::add_broadcast(self.value(x), self.value(y))?;
        Ok(self.push(out, Op::AddBroadcast { x, y }))
    }

    pub fn scale(&mut self, x: TensorId, c: T) -> TensorId {
        let out = kernels::scale(self.value(x), c);
        self.push(out, Op::Scale { x, c })
    }

    pub fn reshape(&mut self, x: TensorId, shape: &[usize]) -> Result<TensorId> {
        let out = self.value(x).reshape(shape)?;
        Ok(self.push(out, Op::Reshape { x }))
    }

    pub fn permute_axes(&mut self, x: TensorId, perm: &[usize]) -> Result<TensorId> {
        let out = kernels::permute_axes(self.value(x), perm)?;
        Ok(self.push(
            out,
            Op::PermuteAxes {
                x,
                perm: Rc::new(perm.to_vec()),
            },
        ))
    }

    pub fn gather_rows(&mut self, x: TensorId, index: Rc<Vec<i64>>) -> Result<TensorId> {
        let out = kernels::gather_rows(self.value(x), &index)?;
        Ok(self.push(out, Op::GatherRows { x, index }))
    }

    pub fn gather_bias(&mut self, table: TensorId, index: Rc<Vec<usize>>, n: usize) -> Result<TensorId> {
        let out = kernels::gather_bias(self.value(table), &index, n)?;
        Ok(self.push(out, Op::GatherBias { table, index }))
    }

    pub fn mean_rows(&mut self, x: TensorId) -> TensorId {
        let out = kernels::mean_rows(self.value(x));
        self.push(out, Op::MeanRows { x })
    }

    pub fn sum_all(&mut self, x: TensorId) -> TensorId {
        let out = kernels::sum_all(self.value(x));
        self.push(out, Op::SumAll { x })
    }

    pub fn cross_entropy(&mut self, logits: TensorId, targets: &[usize]) -> Result<TensorId> {
        let (loss, probs) = kernels::cross_entropy(self.value(logits), targets)?;
        Ok(self.push(
            Tensor::scalar(loss),
            Op::CrossEntropy {
                logits,
                targets: Rc::new(targets.to_vec()),
                probs: Rc::new(probs),
            },
        ))
    }

    fn accumulate(&mut self, id: TensorId, contribution: &[T]) {
        let g = self.nodes[id.0].value.grad_mut();
        debug_assert_eq!(g.len(), contribution.len());
        for (a, &b) in g.iter_mut().zip(contribution) {
            *a += b;
        }
    }

    /// Reverse pass from a scalar root. Every trainable leaf ends with a
    /// populated (possibly zero) grad.
    pub fn backward(&mut self, root: TensorId) -> Result<()> {
        if !self.value(root).is_scalar() {
            return Err(Error::Config(format!(
                "backward root must be scalar, got shape {:?}",
                self.value(root).shape()
            )));
        }
        for node in &mut self.nodes {
            node.value.clear_grad();
            if node.trainable {
                node.value.grad_mut();
            }
        }
        self.nodes[root.0].value.grad_mut()[0] = T::ONE;

        for i in (0..self.nodes.len()).rev() {
            let gout = match self.nodes[i].value.grad() {
                Some(g) => g.to_vec(),
                None => continue,
            };
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::MatMul { a, b } => self.backward_matmul(a, b, &gout),
                Op::Linear { x, w, b } => self.backward_linear(x, w, b, &gout),
                Op::Softmax { x } => {
                    let y = &self.nodes[i].value;
                    let n = y.last_dim();
                    let mut gx = vec![T::ZERO; y.numel()];
                    for (row, (yrow, grow)) in
                        y.data().chunks(n).zip(gout.chunks(n)).enumerate()
                    {
                        let mut dot = T::ZERO;
                        for (yv, gv) in yrow.iter().zip(grow) {
                            dot += *yv * *gv;
                        }
                        for (k, slot) in gx[row * n..(row + 1) * n].iter_mut().enumerate() {
                            *slot = yrow[k] * (grow[k] - dot);
                        }
                    }
                    self.accumulate(x, &gx);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    mean,
                    inv_std,
                } => self.backward_layer_norm(x, gamma, beta, &mean, &inv_std, &gout),
                Op::Gelu { x } => {
                    let gx: Vec<T> = self.nodes[x.0]
                        .value
                        .data()
                        .iter()
                        .zip(&gout)
                        .map(|(&v, &g)| g * gelu_derivative(v))
                        .collect();
                    self.accumulate(x, &gx);
                }
                Op::Add { a, b } => {
                    self.accumulate(a, &gout);
                    self.accumulate(b, &gout);
                }
                Op::AddBroadcast { x, y } => {
                    self.accumulate(x, &gout);
                    let gy = self.reduce_to(y, x, &gout);
                    self.accumulate(y, &gy);
                }
                Op::Scale { x, c } => {
                    let gx: Vec<T> = gout.iter().map(|&g| g * c).collect();
                    self.accumulate(x, &gx);
                }
                Op::Reshape { x } => self.accumulate(x, &gout),
                Op::PermuteAxes { x, perm } => {
                    let xv = &self.nodes[x.0].value;
                    let out_shape: Vec<usize> = perm.iter().map(|&p| xv.shape()[p]).collect();
                    let out_strides = strides(&out_shape);
                    let rank = xv.shape().len();
                    let mut gx = vec![T::ZERO; xv.numel()];
                    let mut idx = vec![0usize; rank];
                    for slot in gx.iter_mut() {
                        let mut off = 0;
                        for (d, &p) in perm.iter().enumerate() {
                            off += idx[p] * out_strides[d];
                        }
                        *slot = gout[off];
                        for d in (0..rank).rev() {
                            idx[d] += 1;
                            if idx[d] < xv.shape()[d] {
                                break;
                            }
                            idx[d] = 0;
                        }
                    }
                    self.accumulate(x, &gx);
                }
                Op::GatherRows { x, index } => {
                    let xv = &self.nodes[x.0].value;
                    let c = xv.last_dim();
                    let mut gx = vec![T::ZERO; xv.numel()];
                    for (slot, &src) in index.iter().enumerate() {
                        if src < 0 {
                            continue;
                        }
                        let src = src as usize;
                        for k in 0..c {
                            gx[src * c + k] += gout[slot * c + k];
                        }
                    }
                    self.accumulate(x, &gx);
                }
                Op::GatherBias { table, index } => {
                    let tv = &self.nodes[table.0].value;
                    let entries = tv.shape()[1];
                    let heads = tv.shape()[0];
                    let nn = index.len();
                    let mut gt = vec![T::ZERO; tv.numel()];
                    for h in 0..heads {
                        for (pair, &idx) in index.iter().enumerate() {
                            gt[h * entries + idx] += gout[h * nn + pair];
                        }
                    }
                    self.accumulate(table, &gt);
                }
                Op::MeanRows { x } => {
                    let xv = &self.nodes[x.0].value;
                    let c = xv.last_dim();
                    let rows = xv.num_rows();
                    let inv = T::ONE / T::from_f64(rows.max(1) as f64);
                    let mut gx = vec![T::ZERO; xv.numel()];
                    for row in 0..rows {
                        for k in 0..c {
                            gx[row * c + k] = gout[k] * inv;
                        }
                    }
                    self.accumulate(x, &gx);
                }
                Op::SumAll { x } => {
                    let n = self.nodes[x.0].value.numel();
                    let gx = vec![gout[0]; n];
                    self.accumulate(x, &gx);
                }
                Op::CrossEntropy {
                    logits,
                    targets,
                    probs,
                } => {
                    let classes = probs.last_dim();
                    let batch = probs.num_rows();
                    let inv = T::ONE / T::from_f64(batch as f64);
                    let mut gl = probs.data().to_vec();
                    for (r, &t) in targets.iter().enumerate() {
                        gl[r * classes + t] = gl[r * classes + t] - T::ONE;
                    }
                    for v in gl.iter_mut() {
                        *v = *v * inv * gout[0];
                    }
                    self.accumulate(logits, &gl);
                }
            }
        }
        Ok(())
    }

    fn backward_matmul(&mut self, a: TensorId, b: TensorId, gout: &[T]) {
        let (ashape, bshape) = (
            self.nodes[a.0].value.shape().to_vec(),
            self.nodes[b.0].value.shape().to_vec(),
        );
        let (batch, m, k, n) = match (ashape.as_slice(), bshape.as_slice()) {
            ([m, k], [_, n]) => (1usize, *m, *k, *n),
            ([ba, m, k], [_, _, n]) => (*ba, *m, *k, *n),
            _ => unreachable!("validated in forward"),
        };
        let av = self.nodes[a.0].value.data().to_vec();
        let bv = self.nodes[b.0].value.data().to_vec();
        let mut ga = vec![T::ZERO; av.len()];
        let mut gb = vec![T::ZERO; bv.len()];
        for t in 0..batch {
            let ab = &av[t * m * k..(t + 1) * m * k];
            let bb = &bv[t * k * n..(t + 1) * k * n];
            let gb_out = &gout[t * m * n..(t + 1) * m * n];
            let gab = &mut ga[t * m * k..(t + 1) * m * k];
            let gbb = &mut gb[t * k * n..(t + 1) * k * n];
            // a.grad += g · bᵀ
            for i in 0..m {
                for p in 0..k {
                    let mut s = T::ZERO;
                    for j in 0..n {
                        s += gb_out[i * n + j] * bb[p * n + j];
                    }
                    gab[i * k + p] += s;
                }
            }
            // b.grad += aᵀ · g
            for p in 0..k {
                for j in 0..n {
                    let mut s = T::ZERO;
                    for i in 0..m {
                        s += ab[i * k + p] * gb_out[i * n + j];
                    }
                    gbb[p * n + j] += s;
                }
            }
        }
        self.accumulate(a, &ga);
        self.accumulate(b, &gb);
    }

    fn backward_linear(&mut self, x: TensorId, w: TensorId, b: TensorId, gout: &[T]) {
        let c_in = self.nodes[x.0].value.last_dim();
        let c_out = self.nodes[w.0].value.shape()[1];
        let rows = self.nodes[x.0].value.numel() / c_in;
        let xv = self.nodes[x.0].value.data().to_vec();
        let wv = self.nodes[w.0].value.data().to_vec();

        let mut gx = vec![T::ZERO; xv.len()];
        for r in 0..rows {
            for p in 0..c_in {
                let mut s = T::ZERO;
                for j in 0..c_out {
                    s += gout[r * c_out + j] * wv[p * c_out + j];
                }
                gx[r * c_in + p] = s;
            }
        }
        let mut gw = vec![T::ZERO; wv.len()];
        for r in 0..rows {
            for p in 0..c_in {
                let xval = xv[r * c_in + p];
                for j in 0..c_out {
                    gw[p * c_out + j] += xval * gout[r * c_out + j];
                }
            }
        }
        let mut gb = vec![T::ZERO; c_out];
        for r in 0..rows {
            for j in 0..c_out {
                gb[j] += gout[r * c_out + j];
            }
        }
        self.accumulate(x, &gx);
        self.accumulate(w, &gw);
        self.accumulate(b, &gb);
    }

    fn backward_layer_norm(
        &mut self,
        x: TensorId,
        gamma: TensorId,
        beta: TensorId,
        mean: &[T],
        inv_std: &[T],
        gout: &[T],
    ) {
        let c = self.nodes[x.0].value.last_dim();
        let rows = self.nodes[x.0].value.numel() / c;
        let xv = self.nodes[x.0].value.data().to_vec();
        let gv = self.nodes[gamma.0].value.data().to_vec();
        let inv_c = T::ONE / T::from_f64(c as f64);

        let mut gx = vec![T::ZERO; xv.len()];
        let mut ggamma = vec![T::ZERO; c];
        let mut gbeta = vec![T::ZERO; c];
        for r in 0..rows {
            let xrow = &xv[r * c..(r + 1) * c];
            let grow = &gout[r * c..(r + 1) * c];
            let mut mean_gh = T::ZERO;
            let mut mean_ghx = T::ZERO;
            for i in 0..c {
                let xhat = (xrow[i] - mean[r]) * inv_std[r];
                let gh = grow[i] * gv[i];
                mean_gh += gh;
                mean_ghx += gh * xhat;
                ggamma[i] += grow[i] * xhat;
                gbeta[i] += grow[i];
            }
            mean_gh = mean_gh * inv_c;
            mean_ghx = mean_ghx * inv_c;
            for i in 0..c {
                let xhat = (xrow[i] - mean[r]) * inv_std[r];
                let gh = grow[i] * gv[i];
                gx[r * c + i] = inv_std[r] * (gh - mean_gh - xhat * mean_ghx);
            }
        }
        self.accumulate(x, &gx);
        self.accumulate(gamma, &ggamma);
        self.accumulate(beta, &gbeta);
    }

    /// Reduces a gradient over `x`'s shape down to `y`'s broadcast shape.
    fn reduce_to(&self, y: TensorId, x: TensorId, gout: &[T]) -> Vec<T> {
        let xv = &self.nodes[x.0].value;
        let yv = &self.nodes[y.0].value;
        broadcast_axes(xv, yv).expect("validated in forward");
        let mut gy = vec![T::ZERO; yv.numel()];
        for_each_broadcast_pair(xv.shape(), yv.shape(), |xi, yi| {
            gy[yi] += gout[xi];
        });
        gy
    }
}

fn for_each_broadcast_pair(
    x_shape: &[usize],
    y_shape: &[usize],
    mut f: impl FnMut(usize, usize),
) {
    let ys = strides(y_shape);
    let rank = x_shape.len();
    let numel: usize = x_shape.iter().product();
    let mut idx = vec![0usize; rank];
    for xi in 0..numel {
        let mut yi = 0;
        for d in 0..rank {
            if y_shape[d] != 1 {
                yi += idx[d] * ys[d];
            }
        }
        f(xi, yi);
        for d in (0..rank).rev() {
            idx[d] += 1;
            if idx[d] < x_shape[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_visits_reverse_order_and_fills_leaf_grads() {
        let mut tape = Tape::<f64>::new();
        let a = tape.param(Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());
        let unused = tape.param(Tensor::new(vec![1], vec![5.0]).unwrap());
        let s = tape.scale(a, 3.0);
        let loss = tape.sum_all(s);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(a).unwrap(), &[3.0, 3.0]);
        // trainable but off-path leaves still get a populated (zero) grad
        assert_eq!(tape.grad(unused).unwrap(), &[0.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_root() {
        let mut tape = Tape::<f64>::new();
        let a = tape.param(Tensor::zeros(&[2, 2]));
        assert!(tape.backward(a).is_err());
    }

    #[test]
    fn residual_reuse_accumulates() {
        // loss = sum(x + x): grad = 2.
        let mut tape = Tape::<f64>::new();
        let x = tape.param(Tensor::new(vec![3], vec![1.0, -1.0, 0.5]).unwrap());
        let y = tape.add(x, x).unwrap();
        let loss = tape.sum_all(y);
        tape.backward(loss).unwrap();
        assert_eq!(tape.grad(x).unwrap(), &[2.0, 2.0, 2.0]);
    }
}
