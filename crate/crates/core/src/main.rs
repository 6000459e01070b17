use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use video_swin::analyzer::{analyze, emit_report, AttentionDesign, ReportFormat};
use video_swin::checkpoint::{
    inflate_checkpoint, EmbedInit, InitMode, NamedTensorStore, RelposInit,
};
use video_swin::error::{Error, Result};
use video_swin::model::{
    build_variant, ArchConfig, ArchOverrides, ClipDims, Variant, VideoSwinModel, IN_CHANNELS,
    NUM_STAGES, PATCH_S, PATCH_T,
};
use video_swin::pipeline::{infer, synthetic_clips, toy_arch, train_toy, TrainConfig, ViewSpec};
use video_swin::tensor::Tensor;
use video_swin::windowing::WindowSpec;

#[derive(Parser)]
#[command(
    name = "video-swin",
    about = "3D shifted-window transformer: cost analysis, weight inflation, inference, toy training"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Report per-layer parameter and FLOP counts for a variant.
    Analyze {
        /// Variant: t, s, b, or l.
        #[arg(long, default_value = "t")]
        variant: String,
        /// Frames per view clip.
        #[arg(long, default_value_t = 32)]
        frames: usize,
        /// Spatial view size in pixels.
        #[arg(long, default_value_t = 224)]
        size: usize,
        /// Window extents as PxMxM.
        #[arg(long, default_value = "8x7x7")]
        window: String,
        /// Attention design: joint, split, or factorized.
        #[arg(long, default_value = "joint")]
        design: String,
        /// Output format: table or json-lines.
        #[arg(long, default_value = "table")]
        format: String,
        /// Classification head width.
        #[arg(long, default_value_t = 400)]
        classes: usize,
    },
    /// Expand a 2D image checkpoint into the 3D layout.
    Inflate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Patch-kernel initialization: inflate or center.
        #[arg(long, default_value = "inflate")]
        embed: String,
        /// Bias-table initialization: duplicate or center.
        #[arg(long, default_value = "duplicate")]
        relpos: String,
        /// Temporal window extent of the target model.
        #[arg(long, default_value_t = 8)]
        temporal_window: usize,
        /// Head width when the source has no head.
        #[arg(long, default_value_t = 400)]
        classes: usize,
    },
    /// Multi-view inference over a clip container.
    Infer {
        #[arg(long)]
        ckpt: PathBuf,
        /// Store holding one tensor named "clip" of shape (N, H, W, 3).
        #[arg(long)]
        clip: PathBuf,
        /// Views as TxS (temporal clips x spatial crops).
        #[arg(long, default_value = "4x3")]
        views: String,
        /// Window extents as PxMxM (not recoverable from the checkpoint).
        #[arg(long, default_value = "8x7x7")]
        window: String,
        #[arg(long, default_value_t = 32)]
        clip_len: usize,
        #[arg(long, default_value_t = 2)]
        stride: usize,
        #[arg(long, default_value_t = 224)]
        crop: usize,
    },
    /// Train the micro model on synthetic clips and save a checkpoint.
    TrainToy {
        /// JSON file with TrainConfig fields plus optional samples/classes.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "toy.vswt")]
        out: PathBuf,
    },
}

fn parse_window(s: &str) -> Result<WindowSpec> {
    let parts: Vec<&str> = s.split('x').collect();
    let err = || Error::Config(format!("window `{s}` must look like PxMxM with equal M"));
    if parts.len() != 3 {
        return Err(err());
    }
    let p: usize = parts[0].parse().map_err(|_| err())?;
    let m1: usize = parts[1].parse().map_err(|_| err())?;
    let m2: usize = parts[2].parse().map_err(|_| err())?;
    if m1 != m2 {
        return Err(err());
    }
    WindowSpec::new(p, m1)
}

fn parse_views(s: &str) -> Result<(usize, usize)> {
    let err = || Error::Config(format!("views `{s}` must look like TxS"));
    let parts: Vec<&str> = s.split('x').collect();
    if parts.len() != 2 {
        return Err(err());
    }
    Ok((
        parts[0].parse().map_err(|_| err())?,
        parts[1].parse().map_err(|_| err())?,
    ))
}

/// Recovers channel count, depths, and head width from a checkpoint's
/// canonical names and shapes. The window extents are ambiguous in the flat
/// bias table and must come from the caller; they are validated here.
fn arch_from_store(
    store: &NamedTensorStore,
    window: WindowSpec,
    clip: ClipDims,
) -> Result<ArchConfig> {
    let kernel = store.require("patch_embed.kernel")?;
    let channels = match kernel.shape.as_slice() {
        [t, s1, s2, ch, c]
            if *t == PATCH_T && *s1 == PATCH_S && *s2 == PATCH_S && *ch == IN_CHANNELS =>
        {
            *c
        }
        other => {
            return Err(Error::shape(
                "patch_embed.kernel",
                other,
                &[PATCH_T, PATCH_S, PATCH_S, IN_CHANNELS, 0],
            ))
        }
    };
    let mut depths = [0usize; NUM_STAGES];
    for (i, depth) in depths.iter_mut().enumerate() {
        let mut j = 0;
        while store
            .get(&format!("stage{}.block{}.ln1.gamma", i + 1, j))
            .is_some()
        {
            j += 1;
        }
        *depth = j;
    }
    let relpos = store.require("stage1.block0.attn.relpos")?;
    let heads1 = *relpos.shape.last().unwrap_or(&0);
    if heads1 == 0 || channels % heads1 != 0 {
        return Err(Error::Config(format!(
            "cannot derive head dim from {channels} channels and {heads1} heads"
        )));
    }
    let head_dim = channels / heads1;
    if relpos.shape[0] != window.bias_table_len() {
        return Err(Error::shape(
            "stage1.block0.attn.relpos vs window",
            &relpos.shape,
            &[window.bias_table_len(), heads1],
        ));
    }
    let head_b = store.require("head.b")?;
    let num_classes = head_b.shape[0];
    let config = ArchConfig {
        channels,
        depths,
        window,
        head_dim,
        mlp_ratio: 4,
        num_classes,
        clip,
        drop_path_rate: 0.0,
    };
    config.validate()?;
    Ok(config)
}

/// Like [`arch_from_store`] but for 2D sources: the kernel has no temporal
/// axis, the bias tables are `(2m−1)²`, and the head may be absent.
fn arch_from_2d_store(
    store: &NamedTensorStore,
    temporal_window: usize,
    classes: usize,
) -> Result<ArchConfig> {
    let kernel = store.require("patch_embed.kernel")?;
    let channels = match kernel.shape.as_slice() {
        [s1, s2, ch, c] if *s1 == PATCH_S && *s2 == PATCH_S && *ch == IN_CHANNELS => *c,
        other => {
            return Err(Error::shape(
                "patch_embed.kernel",
                other,
                &[PATCH_S, PATCH_S, IN_CHANNELS, 0],
            ))
        }
    };
    let mut depths = [0usize; NUM_STAGES];
    for (i, depth) in depths.iter_mut().enumerate() {
        let mut j = 0;
        while store
            .get(&format!("stage{}.block{}.ln1.gamma", i + 1, j))
            .is_some()
        {
            j += 1;
        }
        *depth = j;
    }
    let relpos = store.require("stage1.block0.attn.relpos")?;
    let rows = relpos.shape[0];
    let side = (1..=rows).find(|m| (2 * m - 1) * (2 * m - 1) == rows);
    let m = side.ok_or_else(|| {
        Error::Config(format!("bias table with {rows} rows is not a (2m−1)² square"))
    })?;
    let heads1 = *relpos.shape.last().unwrap_or(&0);
    if heads1 == 0 || channels % heads1 != 0 {
        return Err(Error::Config(format!(
            "cannot derive head dim from {channels} channels and {heads1} heads"
        )));
    }
    let config = ArchConfig {
        channels,
        depths,
        window: WindowSpec::new(temporal_window, m)?,
        head_dim: channels / heads1,
        mlp_ratio: 4,
        num_classes: classes,
        clip: ClipDims::new(32, 224, 224),
        drop_path_rate: 0.0,
    };
    config.validate()?;
    Ok(config)
}

#[derive(serde::Deserialize)]
#[serde(default)]
struct ToyFileConfig {
    #[serde(flatten)]
    train: TrainConfig,
    samples: usize,
    classes: usize,
    data_seed: u64,
}

impl Default for ToyFileConfig {
    fn default() -> Self {
        ToyFileConfig {
            train: TrainConfig::default(),
            samples: 8,
            classes: 2,
            data_seed: 1,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze {
            variant,
            frames,
            size,
            window,
            design,
            format,
            classes,
        } => {
            let variant: Variant = variant.parse()?;
            let window = parse_window(&window)?;
            let design: AttentionDesign = design.parse()?;
            let format: ReportFormat = format.parse()?;
            let arch = build_variant(
                variant,
                ArchOverrides {
                    window: Some(window),
                    clip: Some(ClipDims::new(frames, size, size)),
                    num_classes: Some(classes),
                    ..Default::default()
                },
            )?;
            let report = analyze(&arch, design, arch.clip)?;
            print!("{}", emit_report(&report, format));
        }
        Command::Inflate {
            input,
            out,
            embed,
            relpos,
            temporal_window,
            classes,
        } => {
            let embed = match embed.as_str() {
                "inflate" => EmbedInit::Inflate,
                "center" => EmbedInit::Center,
                other => return Err(Error::Config(format!("unknown embed mode `{other}`"))),
            };
            let relpos = match relpos.as_str() {
                "duplicate" => RelposInit::Duplicate,
                "center" => RelposInit::Center,
                other => return Err(Error::Config(format!("unknown relpos mode `{other}`"))),
            };
            let store2d = NamedTensorStore::load(&input)?;
            let arch = arch_from_2d_store(&store2d, temporal_window, classes)?;
            let mode = InitMode {
                embed,
                relpos,
                ..Default::default()
            };
            let store3d = inflate_checkpoint(&store2d, &arch, mode)?;
            store3d.save(&out)?;
            println!(
                "inflated {} tensors ({} -> {})",
                store3d.len(),
                input.display(),
                out.display()
            );
        }
        Command::Infer {
            ckpt,
            clip,
            views,
            window,
            clip_len,
            stride,
            crop,
        } => {
            let (temporal_clips, spatial_crops) = parse_views(&views)?;
            let window = parse_window(&window)?;
            let spec = ViewSpec {
                temporal_clips,
                spatial_crops,
                clip_len,
                frame_stride: stride,
                crop_size: crop,
            };
            spec.validate()?;
            let store = NamedTensorStore::load(&ckpt)?;
            let arch = arch_from_store(&store, window, ClipDims::new(clip_len, crop, crop))?;
            let model = VideoSwinModel::<f32>::from_store(arch, &store)?;
            let clip_store = NamedTensorStore::load(&clip)?;
            let video: Tensor<f32> = clip_store.require("clip")?.to_tensor()?;
            let result = infer(&model, &video, &spec)?;
            let line = serde_json::json!({
                "predicted_class": result.predicted_class,
                "views": spec.num_views(),
                "probabilities": result.probabilities,
            });
            println!("{line}");
        }
        Command::TrainToy { config, seed, out } => {
            let mut file_config: ToyFileConfig = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    serde_json::from_str(&text).map_err(|e| Error::Format {
                        offset: 0,
                        message: format!("{}: {e}", path.display()),
                    })?
                }
                None => ToyFileConfig::default(),
            };
            if let Some(seed) = seed {
                file_config.train.seed = seed;
            }
            let arch = toy_arch(file_config.classes);
            let data = synthetic_clips::<f32>(
                file_config.samples,
                file_config.classes,
                arch.clip,
                file_config.data_seed,
            );
            let run = train_toy(arch, &file_config.train, &data)?;
            for stats in run.history.iter().filter(|s| s.step % 10 == 0 || s.step == 1) {
                println!(
                    "step {:4}  loss {:.6}  acc {:.3}  lr_head {:.2e}  lr_backbone {:.2e}",
                    stats.step, stats.loss, stats.accuracy, stats.lr_head, stats.lr_backbone
                );
            }
            match run.converged_at {
                Some(step) => println!("reached 100% training accuracy at step {step}"),
                None => println!("did not reach 100% training accuracy"),
            }
            run.model.to_store().save(&out)?;
            println!("saved checkpoint to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
