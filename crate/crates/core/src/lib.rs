//! Hierarchical video transformer backbone with 3D shifted-window attention,
//! plus static cost analysis and a desk-scale train/infer pipeline.
//!
//! The crate is organized around seven concerns:
//!
//! - [`tensor`]: dense tensors, forward kernels, and a reverse-mode tape
//! - [`windowing`]: 3D window partitioning, cyclic shifts, attention masks,
//!   and relative-position index tables
//! - [`attention`]: windowed multi-head self-attention and the paired
//!   unshifted/shifted transformer blocks
//! - [`model`]: patch embedding, four stages with patch merging, and the
//!   T/S/B/L architecture presets
//! - [`checkpoint`]: the named-tensor container format and 2D→3D weight
//!   inflation
//! - [`analyzer`]: static parameter/FLOP accounting per layer
//! - [`pipeline`]: multi-view sampling, inference, AdamW with a warmup+cosine
//!   schedule, and a toy training loop

pub mod analyzer;
pub mod attention;
pub mod checkpoint;
pub mod error;
pub mod model;
pub mod pipeline;
pub mod tensor;
pub mod windowing;

pub use error::{Error, Result};
pub use tensor::{Tape, Tensor, TensorId};
