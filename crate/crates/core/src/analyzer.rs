//! Static parameter and FLOP accounting over an architecture config.
//!
//! One multiply-accumulate counts as one FLOP. The headline number covers
//! matrix products only: QKV/output projections, the two window-local `n²·d`
//! batched products per head, MLPs, patch embedding/merging, and the head.
//! Elementwise work (softmax, GELU, layer norm, pooling) is excluded.
//!
//! Three spatiotemporal designs are costed. `joint` is the executable
//! default. `split` is a spatial-only backbone (per-frame windows, 2D bias
//! tables) with two temporal transformer layers appended after the last
//! stage, sized like that stage. `factorized` inserts a temporal-only MSA
//! (with a zero-initialized output scale) after each spatial-only MSA,
//! attending across time at every spatial site. Neither is executed
//! numerically; they exist at cost level only.

use crate::error::{Error, Result};
use crate::model::{ArchConfig, ClipDims, NUM_STAGES, PATCH_FEATURES, PATCH_S, PATCH_T};
use crate::windowing::{num_windows, GridDims, WindowSpec};
use serde::Serialize;

/// Spatiotemporal attention design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AttentionDesign {
    Joint,
    Split,
    Factorized,
}

impl std::str::FromStr for AttentionDesign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "joint" => Ok(AttentionDesign::Joint),
            "split" => Ok(AttentionDesign::Split),
            "factorized" => Ok(AttentionDesign::Factorized),
            other => Err(Error::Config(format!("unknown attention design `{other}`"))),
        }
    }
}

/// One accounted layer.
#[derive(Clone, Debug, Serialize)]
pub struct CostRow {
    pub name: String,
    pub params: u64,
    pub flops: u64,
    /// Token-grid shape after this layer, `[t, h, w, c]` (or `[classes]`).
    pub output_shape: Vec<usize>,
}

/// Per-layer accounting plus the view it was costed for.
#[derive(Clone, Debug, Serialize)]
pub struct CostReport {
    pub design: AttentionDesign,
    pub view: [usize; 3],
    pub rows: Vec<CostRow>,
}

impl CostReport {
    pub fn total_params(&self) -> u64 {
        self.rows.iter().map(|r| r.params).sum()
    }

    pub fn total_flops(&self) -> u64 {
        self.rows.iter().map(|r| r.flops).sum()
    }

    pub fn params_millions(&self) -> f64 {
        self.total_params() as f64 / 1e6
    }

    pub fn gflops(&self) -> f64 {
        self.total_flops() as f64 / 1e9
    }
}

/// MACs of a dense map over `tokens` rows.
pub fn linear_flops(tokens: u64, c_in: u64, c_out: u64) -> u64 {
    tokens * c_in * c_out
}

/// MACs of windowed attention: `QKᵀ` and `AV` are each `n²·d` per head per
/// window, so `2·n²·c` per window across heads.
fn window_attention_flops(windows: u64, window_len: u64, channels: u64) -> u64 {
    2 * windows * window_len * window_len * channels
}

/// MACs of temporal-only attention over sequences of length `t` at every
/// spatial site.
fn temporal_attention_flops(sites: u64, t: u64, channels: u64) -> u64 {
    2 * sites * t * t * channels
}

fn block_linear_params(c: u64) -> u64 {
    // ln1 + ln2 (4c), qkv (3c² + 3c), out (c² + c), mlp (8c² + 5c)
    12 * c * c + 13 * c
}

fn block_linear_flops(tokens: u64, c: u64) -> u64 {
    linear_flops(tokens, c, 3 * c)
        + linear_flops(tokens, c, c)
        + linear_flops(tokens, c, 4 * c)
        + linear_flops(tokens, 4 * c, c)
}

fn validate_view(view: ClipDims) -> Result<()> {
    let unit = PATCH_S * (1 << (NUM_STAGES - 1));
    if view.frames % PATCH_T != 0 || view.height % unit != 0 || view.width % unit != 0 {
        return Err(Error::Config(format!(
            "view {}x{}x{} must have even frames and spatial dims divisible by {unit}",
            view.frames, view.height, view.width
        )));
    }
    Ok(())
}

fn stage_grid(view: ClipDims, stage: usize) -> GridDims {
    GridDims::new(
        view.frames / PATCH_T,
        view.height / (PATCH_S << stage),
        view.width / (PATCH_S << stage),
    )
}

/// Full per-layer accounting for a design under a given view.
pub fn analyze(arch: &ArchConfig, design: AttentionDesign, view: ClipDims) -> Result<CostReport> {
    arch.validate()?;
    validate_view(view)?;

    let c0 = arch.channels as u64;
    let window = arch.window;
    let spatial_window = WindowSpec::new(1, window.m)?;
    let table_3d = window.bias_table_len() as u64;
    let table_2d = ((2 * window.m - 1) * (2 * window.m - 1)) as u64;

    let mut rows = Vec::new();
    let grid0 = stage_grid(view, 0);
    rows.push(CostRow {
        name: "patch_embed".into(),
        params: PATCH_FEATURES as u64 * c0 + c0 + 2 * c0,
        flops: linear_flops(grid0.tokens() as u64, PATCH_FEATURES as u64, c0),
        output_shape: vec![grid0.t, grid0.h, grid0.w, arch.channels],
    });

    for i in 0..NUM_STAGES {
        let grid = stage_grid(view, i);
        let c = arch.stage_channels(i) as u64;
        let heads = arch.stage_heads(i) as u64;
        let tokens = grid.tokens() as u64;
        let shape = vec![grid.t, grid.h, grid.w, c as usize];

        for j in 0..arch.depths[i] {
            let (mut params, mut flops) = match design {
                AttentionDesign::Joint => (
                    block_linear_params(c) + heads * table_3d,
                    block_linear_flops(tokens, c)
                        + window_attention_flops(
                            num_windows(grid, window) as u64,
                            window.window_len() as u64,
                            c,
                        ),
                ),
                AttentionDesign::Split | AttentionDesign::Factorized => (
                    block_linear_params(c) + heads * table_2d,
                    block_linear_flops(tokens, c)
                        + window_attention_flops(
                            num_windows(grid, spatial_window) as u64,
                            spatial_window.window_len() as u64,
                            c,
                        ),
                ),
            };
            if design == AttentionDesign::Factorized {
                // temporal-only MSA: norm, qkv, out, zero-init scale
                params += 4 * c * c + 4 * c + 2 * c + 1;
                flops += linear_flops(tokens, c, 3 * c)
                    + linear_flops(tokens, c, c)
                    + temporal_attention_flops((grid.h * grid.w) as u64, grid.t as u64, c);
            }
            rows.push(CostRow {
                name: format!("stage{}.block{}", i + 1, j),
                params,
                flops,
                output_shape: shape.clone(),
            });
        }

        if i < NUM_STAGES - 1 {
            let merged = stage_grid(view, i + 1);
            rows.push(CostRow {
                name: format!("stage{}.merge", i + 1),
                params: 8 * c * c + 8 * c,
                flops: linear_flops(merged.tokens() as u64, 4 * c, 2 * c),
                output_shape: vec![merged.t, merged.h, merged.w, 2 * c as usize],
            });
        }
    }

    let last = stage_grid(view, NUM_STAGES - 1);
    let c4 = arch.stage_channels(NUM_STAGES - 1) as u64;
    if design == AttentionDesign::Split {
        let tokens = last.tokens() as u64;
        for j in 0..2 {
            rows.push(CostRow {
                name: format!("temporal.layer{j}"),
                params: block_linear_params(c4),
                flops: block_linear_flops(tokens, c4)
                    + temporal_attention_flops((last.h * last.w) as u64, last.t as u64, c4),
                output_shape: vec![last.t, last.h, last.w, c4 as usize],
            });
        }
    }

    rows.push(CostRow {
        name: "final_norm".into(),
        params: 2 * c4,
        flops: 0,
        output_shape: vec![last.t, last.h, last.w, c4 as usize],
    });
    rows.push(CostRow {
        name: "head".into(),
        params: c4 * arch.num_classes as u64 + arch.num_classes as u64,
        flops: linear_flops(1, c4, arch.num_classes as u64),
        output_shape: vec![arch.num_classes],
    });

    Ok(CostReport {
        design,
        view: [view.frames, view.height, view.width],
        rows,
    })
}

/// Exact integer parameter count; independent of the view.
pub fn count_params(arch: &ArchConfig, design: AttentionDesign) -> Result<CostReport> {
    analyze(arch, design, arch.clip)
}

/// Giga-FLOPs for a single view of the given clip dims.
pub fn count_flops(
    arch: &ArchConfig,
    design: AttentionDesign,
    view: ClipDims,
) -> Result<CostReport> {
    analyze(arch, design, view)
}

/// Cost report for the split/factorized designs (or joint, identically to
/// [`count_params`]/[`count_flops`] at the default view).
pub fn analyze_design(arch: &ArchConfig, design: AttentionDesign) -> Result<CostReport> {
    analyze(arch, design, arch.clip)
}

/// Output encoding for [`emit_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    JsonLines,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(ReportFormat::Table),
            "json-lines" | "jsonl" => Ok(ReportFormat::JsonLines),
            other => Err(Error::Config(format!("unknown report format `{other}`"))),
        }
    }
}

/// Renders a report deterministically in execution order. The table carries
/// rounded headline units; json-lines carries exact integers.
pub fn emit_report(report: &CostReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Table => {
            let mut out = String::new();
            let design = format!("{:?}", report.design).to_lowercase();
            out.push_str(&format!(
                "design={} view={}x{}x{}\n",
                design, report.view[0], report.view[1], report.view[2]
            ));
            out.push_str(&format!(
                "{:<24} {:>14} {:>16} {:>20}\n",
                "layer", "params", "flops", "output"
            ));
            for row in &report.rows {
                let shape = row
                    .output_shape
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join("x");
                out.push_str(&format!(
                    "{:<24} {:>14} {:>16} {:>20}\n",
                    row.name, row.params, row.flops, shape
                ));
            }
            out.push_str(&format!(
                "{:<24} {:>13.1}M {:>15.1}G\n",
                "total",
                report.params_millions(),
                report.gflops()
            ));
            out
        }
        ReportFormat::JsonLines => {
            let mut out = String::new();
            for row in &report.rows {
                out.push_str(&serde_json::to_string(row).expect("row serializes"));
                out.push('\n');
            }
            let totals = serde_json::json!({
                "design": report.design,
                "view": report.view,
                "total_params": report.total_params(),
                "total_flops": report.total_flops(),
            });
            out.push_str(&totals.to_string());
            out.push('\n');
            out
        }
    }
}
