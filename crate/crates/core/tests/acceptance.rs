//! Acceptance suite. Each criterion runs as one test and prints a PASS line
//! with its measured numbers (visible under `--nocapture`).

mod common;

use common::{naive_regional_msa, OracleMsa};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use video_swin::analyzer::{analyze, count_flops, count_params, AttentionDesign};
use video_swin::attention::{
    block_pair_forward, window_msa, BlockBranches, BlockWeights, MsaWeights,
};
use video_swin::checkpoint::{
    inflate_checkpoint, inflate_patch_embed, init_relative_position_bias, random_2d_store,
    EmbedInit, InitMode, NamedTensorStore, RelposInit, StoredTensor,
};
use video_swin::model::{
    build_variant, patch_embed, ArchConfig, ArchOverrides, ClipDims, PatchEmbedParamIds, Variant,
    VideoSwinModel,
};
use video_swin::pipeline::{synthetic_clips, toy_arch, train_toy, TrainConfig};
use video_swin::tensor::{grad_check, GradCheckOptions, Tape, Tensor};
use video_swin::windowing::{
    cyclic_shift, relative_position_index, window_partition, window_reverse, GridDims,
    ShiftDirection, ShiftSpec, WindowSpec,
};

fn assert_within(label: &str, got: f64, expected: f64, pct: f64) {
    let rel = (got - expected).abs() / expected;
    assert!(
        rel <= pct / 100.0,
        "{label}: got {got:.3}, expected {expected:.3} ±{pct}% (off by {:.2}%)",
        rel * 100.0
    );
}

fn variant_with(variant: Variant, overrides: ArchOverrides) -> ArchConfig {
    build_variant(variant, overrides).expect("valid preset")
}

#[test]
fn criterion_1_parameter_counts() {
    let cases: Vec<(&str, ArchConfig, f64)> = vec![
        (
            "Swin-T 400cls",
            variant_with(Variant::Tiny, ArchOverrides::default()),
            28.2,
        ),
        (
            "Swin-S 400cls",
            variant_with(Variant::Small, ArchOverrides::default()),
            49.8,
        ),
        (
            "Swin-B 400cls",
            variant_with(Variant::Base, ArchOverrides::default()),
            88.1,
        ),
        (
            "Swin-L 400cls",
            variant_with(Variant::Large, ArchOverrides::default()),
            197.0,
        ),
        (
            // SSv2 configuration: 174 classes with the 16-frame temporal window
            "Swin-B 174cls",
            variant_with(
                Variant::Base,
                ArchOverrides {
                    num_classes: Some(174),
                    window: Some(WindowSpec::new(16, 7).unwrap()),
                    ..Default::default()
                },
            ),
            88.8,
        ),
        (
            "Swin-T window 16x7x7",
            variant_with(
                Variant::Tiny,
                ArchOverrides {
                    window: Some(WindowSpec::new(16, 7).unwrap()),
                    ..Default::default()
                },
            ),
            28.5,
        ),
        (
            "Swin-T window 8x7x7",
            variant_with(Variant::Tiny, ArchOverrides::default()),
            28.2,
        ),
        (
            "Swin-T window 4x7x7",
            variant_with(
                Variant::Tiny,
                ArchOverrides {
                    window: Some(WindowSpec::new(4, 7).unwrap()),
                    ..Default::default()
                },
            ),
            28.0,
        ),
    ];
    for (label, arch, expected_m) in cases {
        let report = count_params(&arch, AttentionDesign::Joint).unwrap();
        let got = report.params_millions();
        assert_within(label, got, expected_m, 1.5);
        println!("  {label}: {got:.2}M vs {expected_m}M");
    }
    println!("ACCEPTANCE 1 parameter counts: PASS");
}

#[test]
fn criterion_2_flop_counts() {
    let view224 = ClipDims::new(32, 224, 224);
    let gflops = |arch: &ArchConfig, view: ClipDims| {
        count_flops(arch, AttentionDesign::Joint, view)
            .unwrap()
            .gflops()
    };

    for (label, variant, expected) in [
        ("Swin-T", Variant::Tiny, 88.0),
        ("Swin-S", Variant::Small, 166.0),
        ("Swin-B", Variant::Base, 282.0),
        ("Swin-L", Variant::Large, 604.0),
    ] {
        let arch = variant_with(variant, ArchOverrides::default());
        let got = gflops(&arch, view224);
        assert_within(label, got, expected, 5.0);
        println!("  {label}: {got:.1}G vs {expected}G");
    }

    // 384² uses the window-12 pretrained geometry
    let arch_l384 = variant_with(
        Variant::Large,
        ArchOverrides {
            window: Some(WindowSpec::new(8, 12).unwrap()),
            clip: Some(ClipDims::new(32, 384, 384)),
            ..Default::default()
        },
    );
    let got = gflops(&arch_l384, arch_l384.clip);
    assert_within("Swin-L 384", got, 2107.0, 5.0);
    let params = count_params(&arch_l384, AttentionDesign::Joint)
        .unwrap()
        .params_millions();
    assert_within("Swin-L 384 params", params, 200.0, 1.5);
    println!("  Swin-L 384: {got:.0}G / {params:.1}M vs 2107G / 200.0M");

    // temporal-dimension sweep: window covers the whole temporal extent
    for (frames, p, expected) in [(32usize, 16usize, 106.0), (16, 8, 44.0), (8, 4, 20.0)] {
        let arch = variant_with(
            Variant::Tiny,
            ArchOverrides {
                window: Some(WindowSpec::new(p, 7).unwrap()),
                clip: Some(ClipDims::new(frames, 224, 224)),
                ..Default::default()
            },
        );
        let got = gflops(&arch, arch.clip);
        assert_within(&format!("temporal dim {}", frames / 2), got, expected, 5.0);
        println!("  temporal dim {} (window {p}x7x7): {got:.1}G vs {expected}G", frames / 2);
    }

    // temporal window sweep at 16 temporal tokens
    for (p, expected) in [(16usize, 106.0), (8, 88.0), (4, 79.0)] {
        let arch = variant_with(
            Variant::Tiny,
            ArchOverrides {
                window: Some(WindowSpec::new(p, 7).unwrap()),
                ..Default::default()
            },
        );
        let got = gflops(&arch, view224);
        assert_within(&format!("window {p}x7x7"), got, expected, 5.0);
        println!("  window {p}x7x7: {got:.1}G vs {expected}G");
    }

    // alternative spatiotemporal designs, cost level only
    let tiny = variant_with(Variant::Tiny, ArchOverrides::default());
    let split = analyze(&tiny, AttentionDesign::Split, view224).unwrap();
    assert_within("split flops", split.gflops(), 83.0, 5.0);
    assert_within("split params", split.params_millions(), 42.0, 2.0);
    println!(
        "  split: {:.1}G / {:.1}M vs 83G / 42.0M",
        split.gflops(),
        split.params_millions()
    );
    let fact = analyze(&tiny, AttentionDesign::Factorized, view224).unwrap();
    assert_within("factorized flops", fact.gflops(), 95.0, 5.0);
    assert_within("factorized params", fact.params_millions(), 36.5, 2.0);
    println!(
        "  factorized: {:.1}G / {:.1}M vs 95G / 36.5M",
        fact.gflops(),
        fact.params_millions()
    );
    println!("ACCEPTANCE 2 FLOP counts: PASS");
}

#[test]
fn criterion_3_shifted_window_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst_f64 = 0.0f64;
    let mut worst_f32 = 0.0f64;
    for trial in 0..50 {
        let dims = GridDims::new(
            rng.gen_range(1..=8),
            rng.gen_range(1..=8),
            rng.gen_range(1..=8),
        );
        let spec = WindowSpec::new(rng.gen_range(1..=4), rng.gen_range(1..=4)).unwrap();
        let head_dim = [2usize, 4][rng.gen_range(0..2)];
        let heads = rng.gen_range(1..=2);
        let c = head_dim * heads;
        let shift = ShiftSpec::half_window(spec);

        let w = MsaWeights::<f64>::init(c, head_dim, spec, &mut rng).unwrap();
        let x = Tensor::<f64>::rand_uniform(&[dims.tokens(), c], 1.0, &mut rng);
        let oracle = naive_regional_msa(
            x.data(),
            (dims.t, dims.h, dims.w),
            &OracleMsa::from_weights(&w, head_dim),
            spec.p,
            spec.m,
            (shift.s_t, shift.s_h, shift.s_w),
        );

        // 64-bit path
        let mut tape = Tape::<f64>::new();
        let x_id = tape.constant(x.clone());
        let ids = w.register(&mut tape, false);
        let out = window_msa(&mut tape, x_id, dims, &ids, spec, shift, head_dim).unwrap();
        let diff64 = common::max_abs_diff(tape.value(out).data(), &oracle);
        assert!(
            diff64 <= 1e-12,
            "trial {trial} ({dims:?} {spec:?}): f64 diff {diff64}"
        );
        worst_f64 = worst_f64.max(diff64);

        // 32-bit path against the same oracle
        let w32 = MsaWeights {
            qkv_w: w.qkv_w.cast::<f32>(),
            qkv_b: w.qkv_b.cast::<f32>(),
            out_w: w.out_w.cast::<f32>(),
            out_b: w.out_b.cast::<f32>(),
            b_hat: w.b_hat.cast::<f32>(),
        };
        let mut tape = Tape::<f32>::new();
        let x_id = tape.constant(x.cast::<f32>());
        let ids = w32.register(&mut tape, false);
        let out = window_msa(&mut tape, x_id, dims, &ids, spec, shift, head_dim).unwrap();
        let got32: Vec<f64> = tape.value(out).data().iter().map(|&v| v as f64).collect();
        let diff32 = common::max_abs_diff(&got32, &oracle);
        assert!(
            diff32 <= 1e-6,
            "trial {trial} ({dims:?} {spec:?}): f32 diff {diff32}"
        );
        worst_f32 = worst_f32.max(diff32);
    }
    println!("  worst deviation: f64 {worst_f64:.2e}, f32 {worst_f32:.2e}");
    println!("ACCEPTANCE 3 shifted-window equivalence: PASS");
}

#[test]
fn criterion_4_relative_position_index() {
    for p in [1usize, 2, 3] {
        for m in [1usize, 2, 3, 7] {
            let spec = WindowSpec::new(p, m).unwrap();
            let index = relative_position_index(spec);
            let n = spec.window_len();
            // brute-force pairwise displacement oracle
            let coord = |i: usize| {
                (
                    (i / (m * m)) as i64,
                    ((i / m) % m) as i64,
                    (i % m) as i64,
                )
            };
            for i in 0..n {
                for j in 0..n {
                    let (ti, hi, wi) = coord(i);
                    let (tj, hj, wj) = coord(j);
                    let expected = ((ti - tj + p as i64 - 1) * (2 * m as i64 - 1)
                        + (hi - hj + m as i64 - 1))
                        * (2 * m as i64 - 1)
                        + (wi - wj + m as i64 - 1);
                    assert_eq!(
                        index[i * n + j],
                        expected as usize,
                        "(p={p}, m={m}) pair ({i}, {j})"
                    );
                }
            }
        }
    }
    println!("ACCEPTANCE 4 relative-position index: PASS");
}

#[test]
fn criterion_5_gradient_checks() {
    let opts = GradCheckOptions::default();
    let trials_per_op = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut worst: Vec<(String, f64)> = Vec::new();

    let mut check = |name: &str, err: f64| {
        assert!(err <= 1e-5, "{name}: rel err {err}");
        worst.push((name.to_string(), err));
    };

    // kernel ops over randomized inputs
    let mut op_worst = [0.0f64; 10];
    for trial in 0..trials_per_op {
        let seed = 1000 + trial as u64;
        let t = |shape: &[usize], rng: &mut ChaCha8Rng| Tensor::rand_uniform(shape, 1.0, rng);

        let opts_t = GradCheckOptions {
            seed,
            ..GradCheckOptions::default()
        };
        let (m, k, n) = (
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
            rng.gen_range(1..=3),
        );
        let a = t(&[m, k], &mut rng);
        let b = t(&[k, n], &mut rng);
        op_worst[0] = op_worst[0].max(
            grad_check(
                |tape, p| {
                    let y = tape.matmul(p[0], p[1])?;
                    Ok(tape.sum_all(y))
                },
                &[a, b],
                &opts_t,
            )
            .unwrap(),
        );

        let batch = rng.gen_range(1..=2);
        let a = t(&[batch, m, k], &mut rng);
        let b = t(&[batch, k, n], &mut rng);
        op_worst[1] = op_worst[1].max(
            grad_check(
                |tape, p| {
                    let y = tape.matmul(p[0], p[1])?;
                    Ok(tape.sum_all(y))
                },
                &[a, b],
                &opts_t,
            )
            .unwrap(),
        );

        let x = t(&[2, 4], &mut rng);
        let w = t(&[4, 3], &mut rng);
        let bias = t(&[3], &mut rng);
        op_worst[2] = op_worst[2].max(
            grad_check(
                |tape, p| {
                    let y = tape.linear(p[0], p[1], p[2])?;
                    Ok(tape.sum_all(y))
                },
                &[x, w, bias],
                &opts_t,
            )
            .unwrap(),
        );

        // softmax composed with a weighting so every element matters
        let x = t(&[2, 4], &mut rng);
        let weight = t(&[2, 4], &mut rng);
        op_worst[3] = op_worst[3].max(
            grad_check(
                |tape, p| {
                    let y = tape.softmax_lastdim(p[0])?;
                    let z = tape.matmul(y, p[1])?;
                    let z = tape.gelu(z);
                    Ok(tape.sum_all(z))
                },
                &[x, weight.reshape(&[4, 2]).unwrap()],
                &opts_t,
            )
            .unwrap(),
        );

        let x = t(&[3, 4], &mut rng);
        let gamma = t(&[4], &mut rng);
        let beta = t(&[4], &mut rng);
        let weight = t(&[4, 2], &mut rng);
        op_worst[4] = op_worst[4].max(
            grad_check(
                |tape, p| {
                    let y = tape.layer_norm(p[0], p[1], p[2], 1e-5)?;
                    let z = tape.matmul(y, p[3])?;
                    let z = tape.gelu(z);
                    Ok(tape.sum_all(z))
                },
                &[x, gamma, beta, weight],
                &opts_t,
            )
            .unwrap(),
        );

        let x = t(&[6], &mut rng);
        op_worst[5] = op_worst[5].max(
            grad_check(
                |tape, p| {
                    let y = tape.gelu(p[0]);
                    Ok(tape.sum_all(y))
                },
                &[x],
                &opts_t,
            )
            .unwrap(),
        );

        // masked softmax with a fixed keep pattern
        let x = t(&[2, 1, 3, 3], &mut rng);
        let weight = t(&[2 * 3 * 3], &mut rng);
        op_worst[6] = op_worst[6].max(
            grad_check(
                |tape, p| {
                    let keep = tape.constant(Tensor::from_fn(&[2, 1, 3, 3], |i| {
                        if i % 9 == 4 || i % 3 != 1 {
                            1.0
                        } else {
                            0.0
                        }
                    }));
                    let y = tape.softmax_lastdim_masked(p[0], keep)?;
                    let y = tape.reshape(y, &[1, 2 * 3 * 3])?;
                    let w2 = tape.reshape(p[1], &[2 * 3 * 3, 1])?;
                    let z = tape.matmul(y, w2)?;
                    Ok(tape.sum_all(z))
                },
                &[x, weight],
                &opts_t,
            )
            .unwrap(),
        );

        // gather/bias/broadcast composite
        let table = t(&[2, 5], &mut rng);
        let scores = t(&[3, 2, 4, 4], &mut rng);
        op_worst[7] = op_worst[7].max(
            grad_check(
                |tape, p| {
                    let index: Vec<usize> = (0..16).map(|i| i % 5).collect();
                    let bias = tape.gather_bias(p[1], std::rc::Rc::new(index), 4)?;
                    let bias = tape.reshape(bias, &[1, 2, 4, 4])?;
                    let y = tape.add_broadcast(p[0], bias)?;
                    let y = tape.softmax_lastdim(y)?;
                    let y = tape.gelu(y);
                    Ok(tape.sum_all(y))
                },
                &[scores, table],
                &opts_t,
            )
            .unwrap(),
        );

        // row gather with padding and permutation
        let x = t(&[4, 3], &mut rng);
        op_worst[8] = op_worst[8].max(
            grad_check(
                |tape, p| {
                    let gathered =
                        tape.gather_rows(p[0], std::rc::Rc::new(vec![2, -1, 0, 3, 1, -1]))?;
                    let g = tape.reshape(gathered, &[2, 3, 3])?;
                    let g = tape.permute_axes(g, &[1, 0, 2])?;
                    let g = tape.gelu(g);
                    Ok(tape.sum_all(g))
                },
                &[x],
                &opts_t,
            )
            .unwrap(),
        );

        // mean rows + cross entropy + scale/add
        let logits = t(&[2, 4], &mut rng);
        let x = t(&[3, 4], &mut rng);
        op_worst[9] = op_worst[9].max(
            grad_check(
                |tape, p| {
                    let pooled = tape.mean_rows(p[1]);
                    let pooled = tape.reshape(pooled, &[1, 4])?;
                    let stacked = tape.add_broadcast(p[0], pooled)?;
                    let loss = tape.cross_entropy(stacked, &[1, 3])?;
                    let scaled = tape.scale(loss, 2.5);
                    let dup = tape.add(scaled, loss)?;
                    Ok(dup)
                },
                &[logits, x],
                &opts_t,
            )
            .unwrap(),
        );
    }
    for (name, err) in [
        "matmul", "matmul_batched", "linear", "softmax", "layer_norm", "gelu",
        "softmax_masked", "gather_bias", "gather_rows", "mean_ce",
    ]
    .iter()
    .zip(op_worst)
    {
        check(&format!("op {name} (100 trials)"), err);
    }

    // full block pair on a 2×4×4 grid, C=8
    let spec = WindowSpec::new(2, 2).unwrap();
    let dims = GridDims::new(2, 4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let w1 = BlockWeights::<f64>::init(8, 4, spec, &mut rng).unwrap();
    let w2 = BlockWeights::<f64>::init(8, 4, spec, &mut rng).unwrap();
    let x = Tensor::rand_uniform(&[dims.tokens(), 8], 1.0, &mut rng);
    let mut params = vec![x];
    for w in [&w1, &w2] {
        params.extend([
            w.ln1.gamma.clone(),
            w.ln1.beta.clone(),
            w.msa.qkv_w.clone(),
            w.msa.qkv_b.clone(),
            w.msa.out_w.clone(),
            w.msa.out_b.clone(),
            w.msa.b_hat.clone(),
            w.ln2.gamma.clone(),
            w.ln2.beta.clone(),
            w.fc1_w.clone(),
            w.fc1_b.clone(),
            w.fc2_w.clone(),
            w.fc2_b.clone(),
        ]);
    }
    let err = grad_check(
        |tape, p| {
            use video_swin::attention::{BlockParamIds, MsaParamIds};
            let block = |o: usize| BlockParamIds {
                ln1_gamma: p[o],
                ln1_beta: p[o + 1],
                msa: MsaParamIds {
                    qkv_w: p[o + 2],
                    qkv_b: p[o + 3],
                    out_w: p[o + 4],
                    out_b: p[o + 5],
                    b_hat: p[o + 6],
                },
                ln2_gamma: p[o + 7],
                ln2_beta: p[o + 8],
                fc1_w: p[o + 9],
                fc1_b: p[o + 10],
                fc2_w: p[o + 11],
                fc2_b: p[o + 12],
            };
            let out = block_pair_forward(
                tape,
                p[0],
                dims,
                &block(1),
                &block(14),
                spec,
                4,
                [BlockBranches::keep_all(); 2],
            )?;
            let out = tape.gelu(out);
            Ok(tape.sum_all(out))
        },
        &params,
        &GradCheckOptions {
            samples_per_tensor: Some(12),
            ..opts
        },
    )
    .unwrap();
    check("block pair 2x4x4 C=8", err);

    // micro end-to-end model: C=16, depths {2,2,2,2}, d=8.
    // The spatial extent is 32 (not the spec'd 16): a 16² input yields a
    // 1×1 stage-3 grid whose patch merge correctly rejects odd dims.
    let arch = ArchConfig {
        channels: 16,
        depths: [2, 2, 2, 2],
        window: WindowSpec::new(2, 2).unwrap(),
        head_dim: 8,
        mlp_ratio: 4,
        num_classes: 3,
        clip: ClipDims::new(4, 32, 32),
        drop_path_rate: 0.0,
    };
    let model = VideoSwinModel::<f64>::init(arch, 7).unwrap();
    let clip = Tensor::<f64>::rand_uniform(&[4, 32, 32, 3], 1.0, &mut rng);
    let params: Vec<Tensor<f64>> = model.params().into_iter().cloned().collect();
    let err = grad_check(
        |tape, p| {
            let ids = video_swin::model::ModelParamIds::from_flat(&arch, p)?;
            let clip_id = tape.constant(clip.clone());
            let out = model.forward(tape, &ids, clip_id, None)?;
            let logits = tape.reshape(out.logits, &[1, 3])?;
            tape.cross_entropy(logits, &[1])
        },
        &params,
        &GradCheckOptions {
            samples_per_tensor: Some(2),
            ..opts
        },
    )
    .unwrap();
    check("micro end-to-end model", err);

    for (name, err) in &worst {
        println!("  {name}: rel err {err:.2e}");
    }
    println!("ACCEPTANCE 5 gradient checks: PASS");
}

#[test]
fn criterion_6_inflation_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);

    // inflate-initialized patch embed reproduces the 2D embedding on
    // temporally duplicated frames
    let c = 16;
    let w2d = Tensor::<f32>::trunc_normal(&[4, 4, 3, c], 0.02, &mut rng);
    let w3d = inflate_patch_embed(&w2d, EmbedInit::Inflate).unwrap();
    let cfg = ArchConfig {
        channels: c,
        depths: [2, 2, 2, 2],
        window: WindowSpec::new(2, 2).unwrap(),
        head_dim: 8,
        mlp_ratio: 4,
        num_classes: 2,
        clip: ClipDims::new(4, 32, 32),
        drop_path_rate: 0.0,
    };
    let frame = Tensor::<f32>::rand_uniform(&[32, 32, 3], 1.0, &mut rng);
    let clip = Tensor::<f32>::from_fn(&[4, 32, 32, 3], |i| frame.data()[i % frame.numel()]);

    let mut tape = Tape::new();
    let clip_id = tape.constant(clip);
    let ids = PatchEmbedParamIds {
        kernel: tape.constant(w3d),
        bias: tape.constant(Tensor::zeros(&[c])),
        norm_gamma: tape.constant(Tensor::full(&[c], 1.0)),
        norm_beta: tape.constant(Tensor::zeros(&[c])),
    };
    let tokens = patch_embed(&mut tape, clip_id, &ids, &cfg).unwrap();
    let got = common::to_f64_vec(tape.value(tokens));

    let frame64 = common::to_f64_vec(&frame);
    let kernel64 = common::to_f64_vec(&w2d);
    let expected2d = common::naive_patch_embed_2d(
        &frame64,
        (32, 32),
        &kernel64,
        &vec![0.0; c],
        &vec![1.0; c],
        &vec![0.0; c],
        c,
    );
    // token grid (2, 8, 8): both temporal slices equal the 2D embedding
    let slice = 8 * 8 * c;
    for t in 0..2 {
        let diff = common::max_abs_diff(&got[t * slice..(t + 1) * slice], &expected2d);
        assert!(diff <= 1e-6, "slice {t}: diff {diff}");
    }
    println!("  inflate static-clip equivalence: PASS");

    // duplicate relpos init is constant along temporal displacement
    let heads = 3;
    let b2d = Tensor::<f32>::rand_uniform(&[25, heads], 0.5, &mut rng);
    let p = 4;
    let dup = init_relative_position_bias(&b2d, p, RelposInit::Duplicate, -4.6).unwrap();
    for slab in 0..2 * p - 1 {
        assert_eq!(
            &dup.data()[slab * 25 * heads..(slab + 1) * 25 * heads],
            b2d.data()
        );
    }
    println!("  duplicate relpos constant along temporal displacement: PASS");

    // center relpos init has exactly -4.6 at all Δt ≠ 0 entries
    let center = init_relative_position_bias(&b2d, p, RelposInit::Center, -4.6).unwrap();
    for slab in 0..2 * p - 1 {
        let rows = &center.data()[slab * 25 * heads..(slab + 1) * 25 * heads];
        if slab == p - 1 {
            assert_eq!(rows, b2d.data());
        } else {
            assert!(rows.iter().all(|&v| v == -4.6f32));
        }
    }
    println!("  center relpos masks cross-frame displacements: PASS");
    println!("ACCEPTANCE 6 inflation invariants: PASS");
}

#[test]
fn criterion_7_roundtrips() {
    // window partition/reverse identity, exhaustive over small grids
    for t in 1..=10usize {
        for h in 1..=10usize {
            for w in 1..=10usize {
                let dims = GridDims::new(t, h, w);
                for p in 1..=4usize {
                    for m in 1..=4usize {
                        let spec = WindowSpec::new(p, m).unwrap();
                        let x = Tensor::<f32>::from_fn(&[t, h, w, 1], |i| i as f32);
                        let wins = window_partition(&x, spec).unwrap();
                        let back = window_reverse(&wins, spec, dims).unwrap();
                        assert_eq!(back.data(), x.data(), "{dims:?} {spec:?}");
                    }
                }
            }
        }
    }
    println!("  partition/reverse identity over [1..10]^3 x windows [1..4]^2: PASS");

    // checkpoint save/load bitwise identity through a real file
    let arch = toy_arch(2);
    let model = VideoSwinModel::<f32>::init(arch, 77).unwrap();
    let store = model.to_store();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("roundtrip.vswt");
    store.save(&path).unwrap();
    let loaded = NamedTensorStore::load(&path).unwrap();
    assert_eq!(store, loaded);
    assert_eq!(store.to_bytes(), loaded.to_bytes());

    let mut random_store = NamedTensorStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for i in 0..64 {
        let t = Tensor::<f64>::rand_uniform(&[1 + i % 5, 1 + i % 3], 1.0, &mut rng);
        random_store
            .insert(format!("t{i}"), StoredTensor::from_tensor(&t))
            .unwrap();
    }
    let path = dir.path().join("random.vswt");
    random_store.save(&path).unwrap();
    assert_eq!(random_store, NamedTensorStore::load(&path).unwrap());
    println!("  checkpoint save/load bitwise identity: PASS");

    // cyclic shift group laws
    for _ in 0..200 {
        let dims = GridDims::new(
            rng.gen_range(1..=6),
            rng.gen_range(1..=6),
            rng.gen_range(1..=6),
        );
        let x = Tensor::<f32>::rand_uniform(&[dims.t, dims.h, dims.w, 2], 1.0, &mut rng);
        let a = ShiftSpec::new(
            rng.gen_range(0..=8),
            rng.gen_range(0..=8),
            rng.gen_range(0..=8),
        );
        let b = ShiftSpec::new(
            rng.gen_range(0..=8),
            rng.gen_range(0..=8),
            rng.gen_range(0..=8),
        );
        let ab = ShiftSpec::new(
            (a.s_t + b.s_t) % dims.t,
            (a.s_h + b.s_h) % dims.h,
            (a.s_w + b.s_w) % dims.w,
        );
        let two = cyclic_shift(
            &cyclic_shift(&x, a, ShiftDirection::Forward).unwrap(),
            b,
            ShiftDirection::Forward,
        )
        .unwrap();
        let one = cyclic_shift(&x, ab, ShiftDirection::Forward).unwrap();
        assert_eq!(two.data(), one.data());
        let back = cyclic_shift(
            &cyclic_shift(&x, a, ShiftDirection::Forward).unwrap(),
            a,
            ShiftDirection::Inverse,
        )
        .unwrap();
        assert_eq!(back.data(), x.data());
    }
    println!("  cyclic-shift group laws: PASS");
    println!("ACCEPTANCE 7 roundtrips: PASS");
}

#[test]
fn criterion_8_toy_trainability() {
    let arch = toy_arch(2);
    // 60 steps keep the run short; convergence is asserted against the
    // 200-step bound and lands near step 10 under this seed
    let config = TrainConfig {
        epochs: 60,
        warmup_epochs: 5.0,
        batch_size: 8,
        base_lr: 3e-3,
        backbone_lr_ratio: 0.1,
        weight_decay: 0.02,
        stochastic_depth_rate: 0.0,
        seed: 42,
    };
    let data = synthetic_clips::<f32>(8, 2, arch.clip, 1);
    let run = train_toy(arch, &config, &data).unwrap();

    let converged = run.converged_at.expect("training reached 100% accuracy");
    assert!(
        converged <= 200,
        "expected convergence within 200 steps, got {converged}"
    );
    assert!(run.history[0].accuracy < 1.0, "untrained model should not be perfect");
    println!("  100% training accuracy at step {converged}");

    // smoothed loss over the first 50 steps is non-increasing (windows of 10)
    let window_mean = |lo: usize| -> f64 {
        run.history[lo..lo + 10].iter().map(|s| s.loss).sum::<f64>() / 10.0
    };
    let mut prev = f64::INFINITY;
    for start in (0..50).step_by(10) {
        let mean = window_mean(start);
        assert!(
            mean <= prev + 1e-9,
            "smoothed loss increased at steps {start}..{}",
            start + 10
        );
        prev = mean;
    }
    println!("  smoothed loss non-increasing over first 50 steps");

    // determinism: same seed, bitwise-identical checkpoints on a short rerun
    let short = TrainConfig {
        epochs: 10,
        ..config
    };
    let a = train_toy(arch, &short, &data).unwrap();
    let b = train_toy(arch, &short, &data).unwrap();
    assert_eq!(a.model.to_store().to_bytes(), b.model.to_store().to_bytes());
    println!("  pinned seed gives bitwise-identical checkpoints");

    // zero backbone ratio freezes the backbone exactly
    let frozen_config = TrainConfig {
        epochs: 5,
        backbone_lr_ratio: 0.0,
        ..config
    };
    let before = VideoSwinModel::<f32>::init(arch, frozen_config.seed).unwrap();
    let frozen = train_toy(arch, &frozen_config, &data).unwrap();
    for ((name, a), b) in before
        .param_names()
        .iter()
        .zip(before.params())
        .zip(frozen.model.params())
    {
        if !name.starts_with("head.") {
            assert_eq!(a.data(), b.data(), "backbone tensor {name} changed");
        }
    }
    println!("  backbone_lr_ratio = 0 freezes the backbone exactly");
    println!("ACCEPTANCE 8 toy trainability: PASS");
}

#[test]
fn criterion_9_accuracy_non_reproduction_statement() {
    // The paper-scale accuracy numbers need full Kinetics/SSv2 training runs
    // and are intentionally not reproduced; the README must say so.
    let readme = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../README.md"))
        .expect("workspace README exists");
    assert!(
        readme.contains("not reproduced"),
        "README must state that accuracy results are not reproduced"
    );
    println!(
        "ACCEPTANCE 9 non-reproducibility statement: PASS — accuracy results \
         (e.g. 84.9 top-1 Kinetics-400, 69.6 top-1 SSv2) require full-scale \
         training and are not reproduced; criteria 1-8 stand in"
    );
}

#[test]
fn inflated_checkpoint_loads_and_runs() {
    // cross-module smoke path in the acceptance target: random 2D store ->
    // inflate -> load -> forward
    let cfg = ArchConfig {
        channels: 16,
        depths: [2, 2, 2, 2],
        window: WindowSpec::new(2, 2).unwrap(),
        head_dim: 8,
        mlp_ratio: 4,
        num_classes: 5,
        clip: ClipDims::new(4, 32, 32),
        drop_path_rate: 0.0,
    };
    let store2d = random_2d_store(&cfg, 4);
    let store3d = inflate_checkpoint(&store2d, &cfg, InitMode::default()).unwrap();
    let model = VideoSwinModel::<f32>::from_store(cfg, &store3d).unwrap();
    let mut tape = Tape::new();
    let ids = model.register(&mut tape, false);
    let clip = tape.constant(Tensor::full(&[4, 32, 32, 3], 0.2));
    let out = model.forward(&mut tape, &ids, clip, None).unwrap();
    assert_eq!(tape.value(out.logits).shape(), &[5]);
}
