//! Naive oracles shared by the integration suites.
//!
//! Everything here recomputes results from first principles with plain loops
//! over `f64` slices. None of it calls into the crate's kernels, windowing
//! indexes, or tape — only shapes and parameter layouts are shared, which is
//! the contract under test.

#![allow(dead_code)]

use video_swin::attention::{BlockWeights, MsaWeights};
use video_swin::tensor::Tensor;

/// Triple-loop matrix product.
pub fn naive_matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            let mut s = 0.0;
            for p in 0..k {
                s += a[i * k + p] * b[p * n + j];
            }
            out[i * n + j] = s;
        }
    }
    out
}

/// Two-pass mean/variance layer norm (biased variance).
pub fn naive_layer_norm(x: &[f64], c: usize, gamma: &[f64], beta: &[f64], eps: f64) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (row_idx, row) in x.chunks(c).enumerate() {
        let mean: f64 = row.iter().sum::<f64>() / c as f64;
        let var: f64 = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
        let inv = 1.0 / (var + eps).sqrt();
        for i in 0..c {
            out[row_idx * c + i] = (row[i] - mean) * inv * gamma[i] + beta[i];
        }
    }
    out
}

pub fn naive_gelu(x: f64) -> f64 {
    x * 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn naive_softmax(row: &mut [f64]) {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Weights of one attention module flattened for the oracle.
pub struct OracleMsa {
    pub c: usize,
    pub heads: usize,
    pub head_dim: usize,
    pub qkv_w: Vec<f64>,
    pub qkv_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: Vec<f64>,
    /// `(heads, table)` layout.
    pub b_hat: Vec<f64>,
}

impl OracleMsa {
    pub fn from_weights(w: &MsaWeights<f64>, head_dim: usize) -> Self {
        let c = w.channels();
        OracleMsa {
            c,
            heads: c / head_dim,
            head_dim,
            qkv_w: w.qkv_w.data().to_vec(),
            qkv_b: w.qkv_b.data().to_vec(),
            out_w: w.out_w.data().to_vec(),
            out_b: w.out_b.data().to_vec(),
            b_hat: w.b_hat.data().to_vec(),
        }
    }
}

/// Full multi-head attention over one token group with an arbitrary per-pair
/// additive bias. `tokens` is `(n, c)` row-major.
pub fn naive_mha(
    tokens: &[f64],
    n: usize,
    w: &OracleMsa,
    bias: &dyn Fn(usize, usize, usize) -> f64,
) -> Vec<f64> {
    let c = w.c;
    let d = w.head_dim;
    // projections
    let mut q = vec![0.0; n * c];
    let mut k = vec![0.0; n * c];
    let mut v = vec![0.0; n * c];
    for i in 0..n {
        for o in 0..3 * c {
            let mut s = w.qkv_b[o];
            for p in 0..c {
                s += tokens[i * c + p] * w.qkv_w[p * 3 * c + o];
            }
            match o / c {
                0 => q[i * c + o % c] = s,
                1 => k[i * c + o % c] = s,
                _ => v[i * c + o % c] = s,
            }
        }
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut ctx = vec![0.0; n * c];
    for h in 0..w.heads {
        let base = h * d;
        for i in 0..n {
            let mut scores: Vec<f64> = (0..n)
                .map(|j| {
                    let mut dot = 0.0;
                    for e in 0..d {
                        dot += q[i * c + base + e] * k[j * c + base + e];
                    }
                    dot * scale + bias(h, i, j)
                })
                .collect();
            naive_softmax(&mut scores);
            for j in 0..n {
                for e in 0..d {
                    ctx[i * c + base + e] += scores[j] * v[j * c + base + e];
                }
            }
        }
    }
    // output projection
    let mut out = vec![0.0; n * c];
    for i in 0..n {
        for o in 0..c {
            let mut s = w.out_b[o];
            for p in 0..c {
                s += ctx[i * c + p] * w.out_w[p * c + o];
            }
            out[i * c + o] = s;
        }
    }
    out
}

/// Relative-position bias of a displacement, computed directly from the
/// definition: linearized `(Δt + p−1, Δh + m−1, Δw + m−1)`.
#[allow(clippy::too_many_arguments)]
pub fn displacement_bias(
    b_hat: &[f64],
    heads_total: usize,
    p: usize,
    m: usize,
    head: usize,
    dt: i64,
    dh: i64,
    dw: i64,
) -> f64 {
    let table = (2 * p - 1) * (2 * m - 1) * (2 * m - 1);
    let idx = ((dt + p as i64 - 1) as usize * (2 * m - 1) + (dh + m as i64 - 1) as usize)
        * (2 * m - 1)
        + (dw + m as i64 - 1) as usize;
    debug_assert!(head < heads_total && idx < table);
    b_hat[head * table + idx]
}

/// Shifted-window attention computed the slow way: tokens are grouped by
/// their true shifted region and each region runs full attention
/// independently. Shifting the partition by `+s` puts window boundaries at
/// `s, s+unit, …` along each axis, with the leading `[0, s)` sliver its own
/// region (the grid does not wrap). The shift is zeroed on axes a single
/// window already covers.
#[allow(clippy::too_many_arguments)]
pub fn naive_regional_msa(
    tokens: &[f64],
    (t, h, w): (usize, usize, usize),
    msa: &OracleMsa,
    p: usize,
    m: usize,
    shift: (usize, usize, usize),
) -> Vec<f64> {
    let c = msa.c;
    let st = if p >= t { 0 } else { shift.0 };
    let sh = if m >= h { 0 } else { shift.1 };
    let sw = if m >= w { 0 } else { shift.2 };
    let interval = |u: usize, s: usize, unit: usize| {
        if u < s {
            0
        } else {
            (u - s) / unit + 1
        }
    };

    // group real tokens by shifted-window id
    use std::collections::BTreeMap;
    type RegionId = (usize, usize, usize);
    type Member = (usize, usize, usize, usize);
    let mut groups: BTreeMap<RegionId, Vec<Member>> = BTreeMap::new();
    for tt in 0..t {
        for hh in 0..h {
            for ww in 0..w {
                let region = (
                    interval(tt, st, p),
                    interval(hh, sh, m),
                    interval(ww, sw, m),
                );
                let flat = (tt * h + hh) * w + ww;
                groups.entry(region).or_default().push((tt, hh, ww, flat));
            }
        }
    }

    let mut out = vec![0.0; tokens.len()];
    for members in groups.values() {
        let n = members.len();
        let mut group_tokens = vec![0.0; n * c];
        for (row, &(_, _, _, flat)) in members.iter().enumerate() {
            group_tokens[row * c..(row + 1) * c].copy_from_slice(&tokens[flat * c..(flat + 1) * c]);
        }
        let bias = |head: usize, i: usize, j: usize| {
            let (ti, hi, wi, _) = members[i];
            let (tj, hj, wj, _) = members[j];
            displacement_bias(
                &msa.b_hat,
                msa.heads,
                p,
                m,
                head,
                ti as i64 - tj as i64,
                hi as i64 - hj as i64,
                wi as i64 - wj as i64,
            )
        };
        let result = naive_mha(&group_tokens, n, msa, &bias);
        for (row, &(_, _, _, flat)) in members.iter().enumerate() {
            out[flat * c..(flat + 1) * c].copy_from_slice(&result[row * c..(row + 1) * c]);
        }
    }
    out
}

/// Oracle transformer block: pre-norm regional attention and pre-norm FFN
/// behind residuals, all recomputed naively.
pub struct OracleBlock {
    pub ln1_gamma: Vec<f64>,
    pub ln1_beta: Vec<f64>,
    pub msa: OracleMsa,
    pub ln2_gamma: Vec<f64>,
    pub ln2_beta: Vec<f64>,
    pub fc1_w: Vec<f64>,
    pub fc1_b: Vec<f64>,
    pub fc2_w: Vec<f64>,
    pub fc2_b: Vec<f64>,
}

impl OracleBlock {
    pub fn from_weights(w: &BlockWeights<f64>, head_dim: usize) -> Self {
        OracleBlock {
            ln1_gamma: w.ln1.gamma.data().to_vec(),
            ln1_beta: w.ln1.beta.data().to_vec(),
            msa: OracleMsa::from_weights(&w.msa, head_dim),
            ln2_gamma: w.ln2.gamma.data().to_vec(),
            ln2_beta: w.ln2.beta.data().to_vec(),
            fc1_w: w.fc1_w.data().to_vec(),
            fc1_b: w.fc1_b.data().to_vec(),
            fc2_w: w.fc2_w.data().to_vec(),
            fc2_b: w.fc2_b.data().to_vec(),
        }
    }

    pub fn forward(
        &self,
        tokens: &[f64],
        dims: (usize, usize, usize),
        p: usize,
        m: usize,
        shift: (usize, usize, usize),
    ) -> Vec<f64> {
        let c = self.msa.c;
        let eps = 1e-5;
        let normed = naive_layer_norm(tokens, c, &self.ln1_gamma, &self.ln1_beta, eps);
        let attended = naive_regional_msa(&normed, dims, &self.msa, p, m, shift);
        let z: Vec<f64> = tokens.iter().zip(&attended).map(|(a, b)| a + b).collect();

        let normed = naive_layer_norm(&z, c, &self.ln2_gamma, &self.ln2_beta, eps);
        let hidden_dim = self.fc1_b.len();
        let n = tokens.len() / c;
        let mut ffn = vec![0.0; n * c];
        for i in 0..n {
            let mut hidden = vec![0.0; hidden_dim];
            for (o, slot) in hidden.iter_mut().enumerate() {
                let mut s = self.fc1_b[o];
                for pidx in 0..c {
                    s += normed[i * c + pidx] * self.fc1_w[pidx * hidden_dim + o];
                }
                *slot = naive_gelu(s);
            }
            for o in 0..c {
                let mut s = self.fc2_b[o];
                for (pidx, &hv) in hidden.iter().enumerate() {
                    s += hv * self.fc2_w[pidx * c + o];
                }
                ffn[i * c + o] = s;
            }
        }
        z.iter().zip(&ffn).map(|(a, b)| a + b).collect()
    }
}

/// Oracle 2D patch embedding of a single `(h, w, 3)` frame: 4×4 patches
/// flattened `(h, w, rgb)`, projected by `kernel (48, c)`, then layer norm.
pub fn naive_patch_embed_2d(
    frame: &[f64],
    (h, w): (usize, usize),
    kernel: &[f64],
    bias: &[f64],
    gamma: &[f64],
    beta: &[f64],
    c: usize,
) -> Vec<f64> {
    let (gh, gw) = (h / 4, w / 4);
    let mut tokens = vec![0.0; gh * gw * c];
    for ph in 0..gh {
        for pw in 0..gw {
            let mut patch = [0.0; 48];
            let mut cursor = 0;
            for lh in 0..4 {
                for lw in 0..4 {
                    for ch in 0..3 {
                        patch[cursor] = frame[((ph * 4 + lh) * w + pw * 4 + lw) * 3 + ch];
                        cursor += 1;
                    }
                }
            }
            let token = &mut tokens[(ph * gw + pw) * c..(ph * gw + pw + 1) * c];
            for o in 0..c {
                let mut s = bias[o];
                for (pidx, &pv) in patch.iter().enumerate() {
                    s += pv * kernel[pidx * c + o];
                }
                token[o] = s;
            }
        }
    }
    naive_layer_norm(&tokens, c, gamma, beta, 1e-5)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn to_f64_vec(t: &Tensor<f32>) -> Vec<f64> {
    t.data().iter().map(|&v| v as f64).collect()
}
