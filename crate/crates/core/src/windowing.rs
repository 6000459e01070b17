//! Geometry for 3D window partitioning, cyclic shifts, shifted-window
//! attention masks, and relative-position index tables.
//!
//! Everything here is pure index arithmetic on the `(t, h, w)` token grid;
//! tensor data moves only through explicit row gathers. Grids that do not
//! divide evenly by the window are padded at the high end (end of time,
//! bottom, right); padded slots form their own mask region and are stripped
//! again on the way back.

use crate::error::{Error, Result};
use crate::tensor::{self, Element, Tensor, MASK_VALUE};
use std::rc::Rc;

/// Extents of the 3D token grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridDims {
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl GridDims {
    pub fn new(t: usize, h: usize, w: usize) -> Self {
        GridDims { t, h, w }
    }

    pub fn tokens(&self) -> usize {
        self.t * self.h * self.w
    }

    pub fn flat(&self, t: usize, h: usize, w: usize) -> usize {
        (t * self.h + h) * self.w + w
    }
}

/// 3D window extents: `p` temporal tokens by `m × m` spatial tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub p: usize,
    pub m: usize,
}

impl WindowSpec {
    pub fn new(p: usize, m: usize) -> Result<Self> {
        if p == 0 || m == 0 {
            return Err(Error::Config(format!(
                "window extents must be at least 1, got {p}x{m}x{m}"
            )));
        }
        Ok(WindowSpec { p, m })
    }

    /// Tokens per window.
    pub fn window_len(&self) -> usize {
        self.p * self.m * self.m
    }

    /// Relative-displacement table size `(2p−1)(2m−1)²`.
    pub fn bias_table_len(&self) -> usize {
        (2 * self.p - 1) * (2 * self.m - 1) * (2 * self.m - 1)
    }
}

/// Shift offsets in tokens along `(t, h, w)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShiftSpec {
    pub s_t: usize,
    pub s_h: usize,
    pub s_w: usize,
}

impl ShiftSpec {
    pub fn new(s_t: usize, s_h: usize, s_w: usize) -> Self {
        ShiftSpec { s_t, s_h, s_w }
    }

    pub fn none() -> Self {
        ShiftSpec::new(0, 0, 0)
    }

    /// Default shifted configuration `(⌊p/2⌋, ⌊m/2⌋, ⌊m/2⌋)`.
    pub fn half_window(spec: WindowSpec) -> Self {
        ShiftSpec::new(spec.p / 2, spec.m / 2, spec.m / 2)
    }

    pub fn is_zero(&self) -> bool {
        self.s_t == 0 && self.s_h == 0 && self.s_w == 0
    }
}

/// Reduces offsets into the window (shifting by a full window is a no-op on
/// the partition geometry) and zeroes the shift on every axis where a
/// single window already covers the grid; shifting there only creates
/// spurious mask regions.
pub fn effective_shift(dims: GridDims, spec: WindowSpec, shift: ShiftSpec) -> ShiftSpec {
    ShiftSpec {
        s_t: if spec.p >= dims.t { 0 } else { shift.s_t % spec.p },
        s_h: if spec.m >= dims.h { 0 } else { shift.s_h % spec.m },
        s_w: if spec.m >= dims.w { 0 } else { shift.s_w % spec.m },
    }
}

fn ceil_mul(x: usize, unit: usize) -> usize {
    x.div_ceil(unit) * unit
}

/// Grid extents after padding up to window multiples.
pub fn padded_dims(dims: GridDims, spec: WindowSpec) -> GridDims {
    GridDims {
        t: ceil_mul(dims.t, spec.p),
        h: ceil_mul(dims.h, spec.m),
        w: ceil_mul(dims.w, spec.m),
    }
}

/// Number of windows `⌈t/p⌉·⌈h/m⌉·⌈w/m⌉`.
pub fn num_windows(dims: GridDims, spec: WindowSpec) -> usize {
    let p = padded_dims(dims, spec);
    (p.t / spec.p) * (p.h / spec.m) * (p.w / spec.m)
}

/// Row-gather index realizing window partition: entry `(window, slot)` holds
/// the flat source token index, or `-1` for a padded slot.
pub fn window_partition_index(dims: GridDims, spec: WindowSpec) -> Vec<i64> {
    shifted_partition_index(dims, spec, ShiftSpec::none())
}

/// Partition index over the grid rolled by `−shift` (the batched computation
/// layout for the shifted configuration). The roll is toroidal over the
/// padded grid so that every shifted-window fragment lands inside a single
/// regular window.
pub fn shifted_partition_index(dims: GridDims, spec: WindowSpec, shift: ShiftSpec) -> Vec<i64> {
    let pd = padded_dims(dims, spec);
    let (nt, nh, nw) = (pd.t / spec.p, pd.h / spec.m, pd.w / spec.m);
    let mut index = Vec::with_capacity(nt * nh * nw * spec.window_len());
    for wt in 0..nt {
        for wh in 0..nh {
            for ww in 0..nw {
                for lt in 0..spec.p {
                    for lh in 0..spec.m {
                        for lw in 0..spec.m {
                            let gt = (wt * spec.p + lt + shift.s_t) % pd.t;
                            let gh = (wh * spec.m + lh + shift.s_h) % pd.h;
                            let gw = (ww * spec.m + lw + shift.s_w) % pd.w;
                            if gt < dims.t && gh < dims.h && gw < dims.w {
                                index.push(dims.flat(gt, gh, gw) as i64);
                            } else {
                                index.push(-1);
                            }
                        }
                    }
                }
            }
        }
    }
    index
}

/// Inverse of [`shifted_partition_index`]: entry for each real token holds
/// its row in the windowed layout. Padded slots are dropped.
pub fn shifted_reverse_index(dims: GridDims, spec: WindowSpec, shift: ShiftSpec) -> Vec<i64> {
    let pd = padded_dims(dims, spec);
    let (nh, nw) = (pd.h / spec.m, pd.w / spec.m);
    let n = spec.window_len();
    let mut index = Vec::with_capacity(dims.tokens());
    for t in 0..dims.t {
        for h in 0..dims.h {
            for w in 0..dims.w {
                // position in the rolled grid
                let rt = (t + pd.t - shift.s_t % pd.t) % pd.t;
                let rh = (h + pd.h - shift.s_h % pd.h) % pd.h;
                let rw = (w + pd.w - shift.s_w % pd.w) % pd.w;
                let win = ((rt / spec.p) * nh + rh / spec.m) * nw + rw / spec.m;
                let slot = ((rt % spec.p) * spec.m + rh % spec.m) * spec.m + rw % spec.m;
                index.push((win * n + slot) as i64);
            }
        }
    }
    index
}

/// Region id of every real token under the pre-shift partition geometry:
/// tokens share an id exactly when they belong to the same shifted window of
/// the padded grid. Shifted windows start at `+s` along each axis —
/// intervals `[0, s), [s, s+unit), …` with no toroidal wrap — which is what
/// the roll-then-partition computation realizes: rolled window `w` covers
/// padded coordinates `[w·unit + s, (w+1)·unit + s) mod L`, i.e. one whole
/// interior region or the two boundary fragments. Ids combine the three
/// axis-interval ids positionally.
pub fn region_ids(dims: GridDims, spec: WindowSpec, shift: ShiftSpec) -> Vec<i64> {
    let pd = padded_dims(dims, spec);
    let base_h = (pd.h / spec.m + 2) as i64;
    let base_w = (pd.w / spec.m + 2) as i64;
    let axis = |u: usize, s: usize, unit: usize| ((u + unit - s % unit) / unit) as i64;
    let mut ids = Vec::with_capacity(dims.tokens());
    for t in 0..dims.t {
        for h in 0..dims.h {
            for w in 0..dims.w {
                let rt = axis(t, shift.s_t, spec.p);
                let rh = axis(h, shift.s_h, spec.m);
                let rw = axis(w, shift.s_w, spec.m);
                ids.push((rt * base_h + rh) * base_w + rw);
            }
        }
    }
    ids
}

/// Per-window additive mask over token pairs for the shifted configuration.
#[derive(Clone, Debug)]
pub struct RegionMask {
    pub num_windows: usize,
    pub window_len: usize,
    /// `0` for same-region pairs, [`MASK_VALUE`] for cross-region pairs,
    /// flattened as `(num_windows, window_len, window_len)`.
    pub values: Vec<f64>,
}

impl RegionMask {
    /// Additive mask as a `(num_windows, 1, n, n)` tensor for broadcasting
    /// over heads.
    pub fn additive<T: Element>(&self) -> Tensor<T> {
        Tensor::from_fn(
            &[self.num_windows, 1, self.window_len, self.window_len],
            |i| T::from_f64(self.values[i]),
        )
    }

    /// Binary keep-mask (1 same-region, 0 cross-region) of the same shape;
    /// multiplying attention weights by it makes cross-region influence
    /// exactly zero instead of `e^MASK_VALUE` dust.
    pub fn keep<T: Element>(&self) -> Tensor<T> {
        Tensor::from_fn(
            &[self.num_windows, 1, self.window_len, self.window_len],
            |i| {
                if self.values[i] == 0.0 {
                    T::ONE
                } else {
                    T::ZERO
                }
            },
        )
    }
}

/// Builds the per-window region mask, or `None` when no pair needs masking
/// (zero effective shift and no padding).
pub fn shift_attention_mask(
    dims: GridDims,
    spec: WindowSpec,
    shift: ShiftSpec,
) -> Option<RegionMask> {
    let shift = effective_shift(dims, spec, shift);
    let pd = padded_dims(dims, spec);
    if shift.is_zero() && pd == dims {
        return None;
    }
    let ids = region_ids(dims, spec, shift);
    let partition = shifted_partition_index(dims, spec, shift);
    let n = spec.window_len();
    let nw = partition.len() / n;
    // padded slots share one region distinct from every real id
    let slot_ids: Vec<i64> = partition
        .iter()
        .map(|&src| if src < 0 { -1 } else { ids[src as usize] })
        .collect();
    let mut values = vec![0.0f64; nw * n * n];
    for win in 0..nw {
        let wids = &slot_ids[win * n..(win + 1) * n];
        let base = win * n * n;
        for i in 0..n {
            for j in 0..n {
                if wids[i] != wids[j] {
                    values[base + i * n + j] = MASK_VALUE;
                }
            }
        }
    }
    Some(RegionMask {
        num_windows: nw,
        window_len: n,
        values,
    })
}

/// Table of shape `(n, n)` flattened row-major; entry `(i, j)` indexes the
/// compact bias table by the 3D displacement of tokens `i` and `j` inside a
/// window: `(Δt + p−1, Δh + m−1, Δw + m−1)` linearized.
pub fn relative_position_index(spec: WindowSpec) -> Vec<usize> {
    let n = spec.window_len();
    let (p, m) = (spec.p, spec.m);
    let coord = |i: usize| {
        let w = i % m;
        let h = (i / m) % m;
        let t = i / (m * m);
        (t as i64, h as i64, w as i64)
    };
    let mut index = Vec::with_capacity(n * n);
    for i in 0..n {
        let (ti, hi, wi) = coord(i);
        for j in 0..n {
            let (tj, hj, wj) = coord(j);
            let dt = (ti - tj + p as i64 - 1) as usize;
            let dh = (hi - hj + m as i64 - 1) as usize;
            let dw = (wi - wj + m as i64 - 1) as usize;
            index.push((dt * (2 * m - 1) + dh) * (2 * m - 1) + dw);
        }
    }
    index
}

/// Direction of a toroidal roll.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftDirection {
    Forward,
    Inverse,
}

/// Gather index for a toroidal roll of the real grid by `−offsets`
/// (forward) or `+offsets` (inverse).
pub fn cyclic_shift_index(
    dims: GridDims,
    offsets: ShiftSpec,
    direction: ShiftDirection,
) -> Vec<i64> {
    let (st, sh, sw) = (
        offsets.s_t % dims.t,
        offsets.s_h % dims.h,
        offsets.s_w % dims.w,
    );
    let (st, sh, sw) = match direction {
        ShiftDirection::Forward => (st, sh, sw),
        ShiftDirection::Inverse => (
            (dims.t - st) % dims.t,
            (dims.h - sh) % dims.h,
            (dims.w - sw) % dims.w,
        ),
    };
    let mut index = Vec::with_capacity(dims.tokens());
    for t in 0..dims.t {
        for h in 0..dims.h {
            for w in 0..dims.w {
                index.push(dims.flat((t + st) % dims.t, (h + sh) % dims.h, (w + sw) % dims.w) as i64);
            }
        }
    }
    index
}

fn expect_grid_channels(x: &Tensor<impl Element>) -> Result<(GridDims, usize)> {
    match x.shape() {
        [t, h, w, c] => Ok((GridDims::new(*t, *h, *w), *c)),
        other => Err(Error::shape("expected (t, h, w, c) tensor", other, &[])),
    }
}

/// Partitions a `(T', H', W', C)` token grid into
/// `(num_windows, p·m², C)` windows, padding with zero rows as needed.
pub fn window_partition<T: Element>(x: &Tensor<T>, spec: WindowSpec) -> Result<Tensor<T>> {
    let (dims, c) = expect_grid_channels(x)?;
    let index = window_partition_index(dims, spec);
    let rows = tensor::gather_rows(x, &index)?;
    rows.reshape(&[num_windows(dims, spec), spec.window_len(), c])
}

/// Exact inverse of [`window_partition`]; padded rows are stripped.
pub fn window_reverse<T: Element>(
    wins: &Tensor<T>,
    spec: WindowSpec,
    dims: GridDims,
) -> Result<Tensor<T>> {
    let expected = [num_windows(dims, spec), spec.window_len()];
    match wins.shape() {
        [nw, n, c] if *nw == expected[0] && *n == expected[1] => {
            let index = shifted_reverse_index(dims, spec, ShiftSpec::none());
            let rows = tensor::gather_rows(wins, &index)?;
            rows.reshape(&[dims.t, dims.h, dims.w, *c])
        }
        other => Err(Error::shape("window_reverse", other, &expected)),
    }
}

/// Toroidal roll of the token grid along `(t, h, w)`.
pub fn cyclic_shift<T: Element>(
    x: &Tensor<T>,
    offsets: ShiftSpec,
    direction: ShiftDirection,
) -> Result<Tensor<T>> {
    let (dims, c) = expect_grid_channels(x)?;
    let index = cyclic_shift_index(dims, offsets, direction);
    let rows = tensor::gather_rows(x, &index)?;
    rows.reshape(&[dims.t, dims.h, dims.w, c])
}

/// Precomputed plan for one windowed-attention call: the composed
/// shift-and-partition gather, its inverse, and the region mask.
pub struct WindowPlan {
    pub dims: GridDims,
    pub spec: WindowSpec,
    pub shift: ShiftSpec,
    pub num_windows: usize,
    pub window_len: usize,
    pub gather: Rc<Vec<i64>>,
    pub scatter: Rc<Vec<i64>>,
    pub mask: Option<RegionMask>,
}

impl WindowPlan {
    pub fn new(dims: GridDims, spec: WindowSpec, shift: ShiftSpec) -> Self {
        let shift = effective_shift(dims, spec, shift);
        WindowPlan {
            dims,
            spec,
            shift,
            num_windows: num_windows(dims, spec),
            window_len: spec.window_len(),
            gather: Rc::new(shifted_partition_index(dims, spec, shift)),
            scatter: Rc::new(shifted_reverse_index(dims, spec, shift)),
            mask: shift_attention_mask(dims, spec, shift),
        }
    }
}
