//! Named-tensor checkpoint container and 2D→3D weight initialization.
//!
//! File layout: magic `VSWT`, version `u32`, manifest length `u64`, UTF-8
//! manifest (one `name dtype shape offset` line per tensor, in store order),
//! then the packed little-endian payload. Save→load roundtrips are bitwise,
//! including name order, and loading never needs the architecture config.

use crate::attention::MsaWeights;
use crate::error::{Error, Result};
use crate::model::{ArchConfig, VideoSwinModel, IN_CHANNELS, NUM_STAGES, PATCH_S, PATCH_T};
use crate::tensor::{Element, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"VSWT";
const VERSION: u32 = 1;

/// Element width of a stored tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn byte_width(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "f32" => Some(Dtype::F32),
            "f64" => Some(Dtype::F64),
            _ => None,
        }
    }
}

/// One stored tensor: shape, element width, and raw little-endian bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct StoredTensor {
    pub shape: Vec<usize>,
    pub dtype: Dtype,
    pub bytes: Vec<u8>,
}

impl StoredTensor {
    pub fn from_tensor<T: Element>(t: &Tensor<T>) -> Self {
        let dtype = if T::byte_width() == 4 {
            Dtype::F32
        } else {
            Dtype::F64
        };
        let mut bytes = Vec::with_capacity(t.numel() * T::byte_width());
        for &v in t.data() {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        StoredTensor {
            shape: t.shape().to_vec(),
            dtype,
            bytes,
        }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    /// Decodes into the requested element width, widening or narrowing as
    /// needed.
    pub fn to_tensor<T: Element>(&self) -> Result<Tensor<T>> {
        let numel = self.numel();
        if self.bytes.len() != numel * self.dtype.byte_width() {
            return Err(Error::Format {
                offset: 0,
                message: format!(
                    "stored tensor byte length {} does not match shape {:?}",
                    self.bytes.len(),
                    self.shape
                ),
            });
        }
        let mut data = Vec::with_capacity(numel);
        match self.dtype {
            Dtype::F32 => {
                for chunk in self.bytes.chunks_exact(4) {
                    let v = f32::from_le_bytes(chunk.try_into().unwrap());
                    data.push(T::from_f64(v as f64));
                }
            }
            Dtype::F64 => {
                for chunk in self.bytes.chunks_exact(8) {
                    let v = f64::from_le_bytes(chunk.try_into().unwrap());
                    data.push(T::from_f64(v));
                }
            }
        }
        Tensor::new(self.shape.clone(), data)
    }
}

/// Ordered map from tensor names to stored tensors.
#[derive(Clone, Debug, Default)]
pub struct NamedTensorStore {
    entries: Vec<(String, StoredTensor)>,
    index: HashMap<String, usize>,
}

impl PartialEq for NamedTensorStore {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl NamedTensorStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: StoredTensor) -> Result<()> {
        let name = name.into();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::Config(format!(
                "tensor name `{name}` must be non-empty and whitespace-free"
            )));
        }
        if self.index.contains_key(&name) {
            return Err(Error::Config(format!("duplicate tensor name `{name}`")));
        }
        if tensor.bytes.len() != tensor.numel() * tensor.dtype.byte_width() {
            return Err(Error::shape(
                format!("stored tensor {name} byte length"),
                &[tensor.bytes.len()],
                &tensor.shape,
            ));
        }
        self.index.insert(name.clone(), self.entries.len());
        self.entries.push((name, tensor));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&StoredTensor> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn require(&self, name: &str) -> Result<&StoredTensor> {
        self.get(name)
            .ok_or_else(|| Error::MissingTensor(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &StoredTensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut manifest = String::new();
        let mut payload = Vec::new();
        for (name, tensor) in &self.entries {
            let shape = tensor
                .shape
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(",");
            manifest.push_str(&format!(
                "{} {} {} {}\n",
                name,
                tensor.dtype.name(),
                shape,
                payload.len()
            ));
            payload.extend_from_slice(&tensor.bytes);
        }
        let mut out = Vec::with_capacity(16 + manifest.len() + payload.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
        out.extend_from_slice(manifest.as_bytes());
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let fail = |offset: usize, message: String| Error::Format {
            offset: offset as u64,
            message,
        };
        if bytes.len() < 16 {
            return Err(fail(bytes.len(), "truncated header".into()));
        }
        if &bytes[0..4] != MAGIC {
            return Err(fail(0, format!("bad magic {:?}", &bytes[0..4])));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(fail(4, format!("unsupported version {version}")));
        }
        let manifest_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        if bytes.len() < 16 + manifest_len {
            return Err(fail(bytes.len(), "truncated manifest".into()));
        }
        let manifest = std::str::from_utf8(&bytes[16..16 + manifest_len])
            .map_err(|e| fail(16 + e.valid_up_to(), "manifest is not UTF-8".into()))?;
        let payload = &bytes[16 + manifest_len..];

        let mut store = NamedTensorStore::new();
        let mut line_offset = 16usize;
        for line in manifest.lines() {
            let fields: Vec<&str> = line.split(' ').collect();
            if fields.len() != 4 {
                return Err(fail(line_offset, format!("malformed manifest line `{line}`")));
            }
            let dtype = Dtype::parse(fields[1])
                .ok_or_else(|| fail(line_offset, format!("unknown dtype `{}`", fields[1])))?;
            let shape: Vec<usize> = fields[2]
                .split(',')
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| fail(line_offset, format!("bad shape `{}`", fields[2])))?;
            let offset: usize = fields[3]
                .parse()
                .map_err(|_| fail(line_offset, format!("bad offset `{}`", fields[3])))?;
            let numel: usize = shape.iter().product();
            let nbytes = numel * dtype.byte_width();
            if offset + nbytes > payload.len() {
                return Err(fail(
                    16 + manifest_len + payload.len(),
                    format!("truncated payload for `{}`", fields[0]),
                ));
            }
            store.insert(
                fields[0],
                StoredTensor {
                    shape,
                    dtype,
                    bytes: payload[offset..offset + nbytes].to_vec(),
                },
            )?;
            line_offset += line.len() + 1;
        }
        Ok(store)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// How 2D pretrained weights become 3D ones.
#[derive(Clone, Copy, Debug)]
pub struct InitMode {
    pub embed: EmbedInit,
    pub relpos: RelposInit,
    /// Fill value for cross-frame bias entries under center init.
    pub center_mask_value: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmbedInit {
    /// Duplicate the 2D kernel across both temporal slices and halve it,
    /// preserving output mean and variance on temporally duplicated frames.
    Inflate,
    /// Place the 2D kernel at temporal slice 0 and zero the other slice.
    Center,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelposInit {
    /// Repeat the 2D table for every temporal displacement.
    Duplicate,
    /// Keep the 2D table at Δt = 0 and fill other displacements with the
    /// center mask value so tokens start out focused within their own frame.
    Center,
}

impl Default for InitMode {
    fn default() -> Self {
        InitMode {
            embed: EmbedInit::Inflate,
            relpos: RelposInit::Duplicate,
            center_mask_value: -4.6,
        }
    }
}

impl InitMode {
    pub fn validate(&self) -> Result<()> {
        if self.center_mask_value >= 0.0 {
            return Err(Error::Config(format!(
                "center mask value {} must be negative",
                self.center_mask_value
            )));
        }
        Ok(())
    }
}

/// Expands a `(4, 4, 3, C)` image patch kernel to the `(2, 4, 4, 3, C)`
/// video kernel.
pub fn inflate_patch_embed<T: Element>(w2d: &Tensor<T>, mode: EmbedInit) -> Result<Tensor<T>> {
    let c = match w2d.shape() {
        [s0, s1, ch, c] if *s0 == PATCH_S && *s1 == PATCH_S && *ch == IN_CHANNELS => *c,
        other => {
            return Err(Error::shape(
                "inflate_patch_embed",
                other,
                &[PATCH_S, PATCH_S, IN_CHANNELS, 0],
            ))
        }
    };
    let slice = w2d.numel();
    let mut out = Tensor::zeros(&[PATCH_T, PATCH_S, PATCH_S, IN_CHANNELS, c]);
    match mode {
        EmbedInit::Inflate => {
            let half = T::from_f64(0.5);
            for t in 0..PATCH_T {
                for (o, &v) in out.data_mut()[t * slice..(t + 1) * slice]
                    .iter_mut()
                    .zip(w2d.data())
                {
                    *o = v * half;
                }
            }
        }
        EmbedInit::Center => {
            out.data_mut()[..slice].copy_from_slice(w2d.data());
        }
    }
    Ok(out)
}

/// Expands a `((2m−1)², heads)` bias table to `((2p−1)(2m−1)², heads)`.
pub fn init_relative_position_bias<T: Element>(
    b2d: &Tensor<T>,
    p: usize,
    mode: RelposInit,
    center_mask_value: f64,
) -> Result<Tensor<T>> {
    let (s2, heads) = match b2d.shape() {
        [s2, heads] => (*s2, *heads),
        other => return Err(Error::shape("init_relative_position_bias", other, &[0, 0])),
    };
    let slabs = 2 * p - 1;
    let mut out = Tensor::zeros(&[slabs * s2, heads]);
    let row_bytes = s2 * heads;
    for slab in 0..slabs {
        let dst = &mut out.data_mut()[slab * row_bytes..(slab + 1) * row_bytes];
        match mode {
            RelposInit::Duplicate => dst.copy_from_slice(b2d.data()),
            RelposInit::Center => {
                if slab == p - 1 {
                    dst.copy_from_slice(b2d.data());
                } else {
                    dst.fill(T::from_f64(center_mask_value));
                }
            }
        }
    }
    Ok(out)
}

/// Expected checkpoint names and shapes for a config, in canonical order.
/// The `relpos` tables use the external `(table, heads)` layout.
pub fn param_specs(config: &ArchConfig) -> Vec<(String, Vec<usize>)> {
    let c = config.channels;
    let mut specs = vec![
        (
            "patch_embed.kernel".into(),
            vec![PATCH_T, PATCH_S, PATCH_S, IN_CHANNELS, c],
        ),
        ("patch_embed.bias".into(), vec![c]),
        ("patch_embed.norm.gamma".into(), vec![c]),
        ("patch_embed.norm.beta".into(), vec![c]),
    ];
    let table = config.window.bias_table_len();
    for i in 0..NUM_STAGES {
        let stage = i + 1;
        let sc = config.stage_channels(i);
        let heads = config.stage_heads(i);
        let hidden = config.mlp_ratio * sc;
        for j in 0..config.depths[i] {
            let p = format!("stage{stage}.block{j}");
            specs.extend([
                (format!("{p}.ln1.gamma"), vec![sc]),
                (format!("{p}.ln1.beta"), vec![sc]),
                (format!("{p}.attn.qkv.w"), vec![sc, 3 * sc]),
                (format!("{p}.attn.qkv.b"), vec![3 * sc]),
                (format!("{p}.attn.out.w"), vec![sc, sc]),
                (format!("{p}.attn.out.b"), vec![sc]),
                (format!("{p}.attn.relpos"), vec![table, heads]),
                (format!("{p}.ln2.gamma"), vec![sc]),
                (format!("{p}.ln2.beta"), vec![sc]),
                (format!("{p}.mlp.fc1.w"), vec![sc, hidden]),
                (format!("{p}.mlp.fc1.b"), vec![hidden]),
                (format!("{p}.mlp.fc2.w"), vec![hidden, sc]),
                (format!("{p}.mlp.fc2.b"), vec![sc]),
            ]);
        }
        if i < NUM_STAGES - 1 {
            specs.extend([
                (format!("stage{stage}.merge.norm.gamma"), vec![4 * sc]),
                (format!("stage{stage}.merge.norm.beta"), vec![4 * sc]),
                (format!("stage{stage}.merge.linear"), vec![4 * sc, 2 * sc]),
            ]);
        }
    }
    let last = config.stage_channels(NUM_STAGES - 1);
    specs.extend([
        ("final_norm.gamma".into(), vec![last]),
        ("final_norm.beta".into(), vec![last]),
        ("head.w".into(), vec![last, config.num_classes]),
        ("head.b".into(), vec![config.num_classes]),
    ]);
    specs
}

/// Shapes the 2D source checkpoint is expected to carry: the patch kernel
/// loses its temporal axis and bias tables shrink to `(2m−1)²` rows; heads,
/// blocks, and every other tensor match the 3D layout. `head.*` may be
/// absent.
pub fn param_specs_2d(config: &ArchConfig) -> Vec<(String, Vec<usize>)> {
    let table_2d = (2 * config.window.m - 1) * (2 * config.window.m - 1);
    param_specs(config)
        .into_iter()
        .map(|(name, mut shape)| {
            if name == "patch_embed.kernel" {
                shape = vec![PATCH_S, PATCH_S, IN_CHANNELS, config.channels];
            } else if name.ends_with(".attn.relpos") {
                shape[0] = table_2d;
            }
            (name, shape)
        })
        .collect()
}

fn transpose_2d<T: Element>(t: &Tensor<T>) -> Tensor<T> {
    crate::tensor::permute_axes(t, &[1, 0]).expect("rank-2 tensor")
}

impl<T: Element> VideoSwinModel<T> {
    /// Serializes every parameter under its canonical name. Bias tables are
    /// written in the external `(table, heads)` layout.
    pub fn to_store(&self) -> NamedTensorStore {
        let mut store = NamedTensorStore::new();
        for (name, tensor) in self.param_names().into_iter().zip(self.params()) {
            let stored = if name.ends_with(".attn.relpos") {
                StoredTensor::from_tensor(&transpose_2d(tensor))
            } else {
                StoredTensor::from_tensor(tensor)
            };
            store.insert(name, stored).expect("canonical names unique");
        }
        store
    }

    /// Loads a model from a store, validating every name and shape against
    /// the config.
    pub fn from_store(config: ArchConfig, store: &NamedTensorStore) -> Result<Self> {
        config.validate()?;
        let mut model = VideoSwinModel::init(config, 0)?;
        for ((name, shape), slot) in param_specs(&config).iter().zip(model.params_mut()) {
            let stored = store.require(name)?;
            if &stored.shape != shape {
                return Err(Error::shape(format!("checkpoint tensor {name}"), &stored.shape, shape));
            }
            let tensor: Tensor<T> = stored.to_tensor()?;
            *slot = if name.ends_with(".attn.relpos") {
                transpose_2d(&tensor)
            } else {
                tensor
            };
        }
        Ok(model)
    }
}

/// Copies every weight of a 2D image checkpoint into the 3D layout, applying
/// the embed and bias transforms and freshly initializing the head when the
/// source has none.
pub fn inflate_checkpoint(
    store2d: &NamedTensorStore,
    config: &ArchConfig,
    mode: InitMode,
) -> Result<NamedTensorStore> {
    mode.validate()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = NamedTensorStore::new();
    for ((name, shape3d), (_, shape2d)) in
        param_specs(config).into_iter().zip(param_specs_2d(config))
    {
        let stored = match store2d.get(&name) {
            Some(s) => s,
            None if name.starts_with("head.") => {
                let fresh: Tensor<f32> = if name == "head.w" {
                    Tensor::trunc_normal(&shape3d, 0.02, &mut rng)
                } else {
                    Tensor::zeros(&shape3d)
                };
                out.insert(name, StoredTensor::from_tensor(&fresh))?;
                continue;
            }
            None => return Err(Error::MissingTensor(name)),
        };
        if stored.shape != shape2d {
            return Err(Error::shape(
                format!("2D checkpoint tensor {name}"),
                &stored.shape,
                &shape2d,
            ));
        }
        let transformed = if name == "patch_embed.kernel" {
            let w2d: Tensor<f64> = stored.to_tensor()?;
            let w3d = inflate_patch_embed(&w2d, mode.embed)?;
            match stored.dtype {
                Dtype::F32 => StoredTensor::from_tensor(&w3d.cast::<f32>()),
                Dtype::F64 => StoredTensor::from_tensor(&w3d),
            }
        } else if name.ends_with(".attn.relpos") {
            let b2d: Tensor<f64> = stored.to_tensor()?;
            let b3d = init_relative_position_bias(
                &b2d,
                config.window.p,
                mode.relpos,
                mode.center_mask_value,
            )?;
            match stored.dtype {
                Dtype::F32 => StoredTensor::from_tensor(&b3d.cast::<f32>()),
                Dtype::F64 => StoredTensor::from_tensor(&b3d),
            }
        } else {
            stored.clone()
        };
        out.insert(name, transformed)?;
    }
    Ok(out)
}

/// Random 2D image-Swin checkpoint with canonical names, for exercising the
/// converter contract without framework files.
pub fn random_2d_store(config: &ArchConfig, seed: u64) -> NamedTensorStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = NamedTensorStore::new();
    for (name, shape) in param_specs_2d(config) {
        if name.starts_with("head.") {
            continue;
        }
        let tensor: Tensor<f32> = if name.ends_with(".gamma") {
            Tensor::full(&shape, 1.0)
        } else if name.ends_with(".beta") || name.ends_with(".b") || name.ends_with("bias") {
            Tensor::zeros(&shape)
        } else {
            Tensor::trunc_normal(&shape, 0.02, &mut rng)
        };
        store
            .insert(name, StoredTensor::from_tensor(&tensor))
            .expect("canonical names unique");
    }
    store
}

/// Builds attention weights from checkpoint-layout pieces; used by loaders
/// and tests that assemble models from stored tensors.
pub fn msa_from_parts<T: Element>(
    qkv_w: Tensor<T>,
    qkv_b: Tensor<T>,
    out_w: Tensor<T>,
    out_b: Tensor<T>,
    relpos: &Tensor<T>,
) -> MsaWeights<T> {
    MsaWeights {
        qkv_w,
        qkv_b,
        out_w,
        out_b,
        b_hat: transpose_2d(relpos),
    }
}
