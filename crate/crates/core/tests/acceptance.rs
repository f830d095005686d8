//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p darklight-core --test acceptance -- --nocapture`
//! to see the lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use darklight_core::classifier::{loss_and_gradient, softmax, ClassifierModel};
use darklight_core::experiment::{append_report, run_experiment};
use darklight_core::flow::{brightness_residual, horn_schunck, lucas_kanade};
use darklight_core::gamma::{
    apply_gamma, darken, estimate_gamma_target, fit_gamma_regressor, mean_enhanced_intensity,
    GammaValue, GAMMA_MAX,
};
use darklight_core::media::{
    clip_from_bytes, clip_to_bytes, flow_from_bytes, flow_to_bytes, load_clip, load_flow,
    load_ppm, parse_ppm, save_clip, save_flow, save_ppm, Clip, FlowField, Frame,
};
use darklight_core::pipeline::{CropMode, CropSpec, EnhanceKind, PipelineConfig};
use darklight_core::sampling::{delta_sample, SamplingParams};
use darklight_core::synth::{gen_synthetic, MotionClass, SyntheticSpec};

fn criterion(name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    match std::panic::catch_unwind(body) {
        Ok(()) => println!("acceptance {name}: PASS"),
        Err(e) => {
            println!("acceptance {name}: FAIL");
            std::panic::resume_unwind(e);
        }
    }
}

// ---------------------------------------------------------------------------
// fixture helpers
// ---------------------------------------------------------------------------

fn lcg_bytes(seed: u64, n: usize) -> Vec<u8> {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as u8
        })
        .collect()
}

/// Gray frame of bilinearly interpolated lattice noise over [lo, hi].
fn lattice_frame(seed: u64, w: usize, h: usize, cell: usize, lo: f64, hi: f64) -> Frame {
    let gw = w / cell + 2;
    let gh = h / cell + 2;
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let lattice: Vec<f64> = (0..gw * gh)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            lo + (hi - lo) * ((state >> 11) as f64 / (1u64 << 53) as f64)
        })
        .collect();
    let mut pixels = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let fx = x as f64 / cell as f64;
            let fy = y as f64 / cell as f64;
            let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
            let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
            let g = |gx: usize, gy: usize| lattice[gy * gw + gx];
            let top = (1.0 - tx) * g(x0, y0) + tx * g(x0 + 1, y0);
            let bot = (1.0 - tx) * g(x0, y0 + 1) + tx * g(x0 + 1, y0 + 1);
            let v = ((1.0 - ty) * top + ty * bot).round().clamp(0.0, 255.0) as u8;
            pixels.extend_from_slice(&[v, v, v]);
        }
    }
    Frame::new(w, h, pixels).unwrap()
}

/// Gray random wave field: sum of five sinusoids with seeded random
/// direction, wavelength in [8, 13], and phase.
fn wave_frame(seed: u64, w: usize, h: usize) -> Frame {
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let waves: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                next() * std::f64::consts::TAU,
                8.0 + next() * 5.0,
                next() * std::f64::consts::TAU,
            )
        })
        .collect();
    let mut pixels = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let mut v = 127.5;
            for &(theta, lambda, phase) in &waves {
                let proj = x as f64 * theta.cos() + y as f64 * theta.sin();
                v += 55.0 * (std::f64::consts::TAU * proj / lambda + phase).sin();
            }
            let q = v.round().clamp(0.0, 255.0) as u8;
            pixels.extend_from_slice(&[q, q, q]);
        }
    }
    Frame::new(w, h, pixels).unwrap()
}

/// (before, after) views of a wide texture so that `after` is `before`
/// shifted right by exactly `dx` pixels.
fn shifted_pair(seed: u64, w: usize, h: usize, dx: usize) -> (Frame, Frame) {
    let wide = wave_frame(seed, w + dx, h);
    let crop = |x0: usize| {
        let mut pixels = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            let start = (y * wide.width() + x0) * 3;
            pixels.extend_from_slice(&wide.pixels()[start..start + w * 3]);
        }
        Frame::new(w, h, pixels).unwrap()
    };
    (crop(dx), crop(0))
}

fn interior_mean_epe(field: &FlowField, truth: (f64, f64), margin: usize) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for y in margin..field.height() - margin {
        for x in margin..field.width() - margin {
            let (u, v) = field.at(x, y);
            let du = u as f64 - truth.0;
            let dv = v as f64 - truth.1;
            total += (du * du + dv * dv).sqrt();
            count += 1;
        }
    }
    total / count as f64
}

// ---------------------------------------------------------------------------
// 1. gamma algebra
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_gamma_algebra() {
    criterion("1 (gamma algebra)", || {
        let frame = Frame::new(16, 16, lcg_bytes(3, 16 * 16 * 3)).unwrap();
        // identity at gamma = 1, exact
        assert_eq!(apply_gamma(&frame, GammaValue::new(1.0).unwrap()), frame);
        assert_eq!(darken(&frame, GammaValue::new(1.0).unwrap()), frame);
        for g in [1.0, 1.5, 2.0, 3.0, 5.0, 10.0] {
            let gv = GammaValue::new(g).unwrap();
            // fixed points, exact
            let ends = Frame::new(1, 2, vec![0, 0, 0, 255, 255, 255]).unwrap();
            assert_eq!(apply_gamma(&ends, gv).pixels(), &[0, 0, 0, 255, 255, 255]);
            assert_eq!(darken(&ends, gv).pixels(), &[0, 0, 0, 255, 255, 255]);
            // monotonicity over all 256 values, exact
            let ramp_px: Vec<u8> = (0..=255u8).flat_map(|v| [v, v, v]).collect();
            let ramp = Frame::new(256, 1, ramp_px).unwrap();
            for out in [apply_gamma(&ramp, gv), darken(&ramp, gv)] {
                for x in 0..255 {
                    assert!(
                        out.pixel(x, 0)[0] <= out.pixel(x + 1, 0)[0],
                        "monotonicity broke at {x}, gamma {g}"
                    );
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 2. gamma recovery
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_gamma_recovery() {
    criterion("2 (gamma recovery)", || {
        let gammas = [1.5, 2.0, 3.0, 5.0];
        // uniform frames: within 10%
        for v in [102u8, 128, 160, 200] {
            let base = Frame::filled(24, 24, [v, v, v]).unwrap();
            let target = base.mean_luma();
            for g in gammas {
                let dark = darken(&base, GammaValue::new(g).unwrap());
                let est = estimate_gamma_target(&dark, target).unwrap();
                let rel = (est.gamma.value() - g).abs() / g;
                assert!(rel <= 0.10, "uniform v={v} gamma={g}: estimated {} ({rel:.3})", est.gamma.value());
            }
        }
        // textured frames: within 15%
        for seed in 0..6u64 {
            let base = lattice_frame(seed, 64, 64, 8, 90.0, 210.0);
            let target = base.mean_luma();
            for g in gammas {
                let dark = darken(&base, GammaValue::new(g).unwrap());
                let est = estimate_gamma_target(&dark, target).unwrap();
                let rel = (est.gamma.value() - g).abs() / g;
                assert!(rel <= 0.15, "textured seed={seed} gamma={g}: estimated {} ({rel:.3})", est.gamma.value());
            }
        }
        // regressor: mean relative error within 20% on >= 200 held-out frames
        let train_gammas = [1.5, 2.0, 2.5, 3.0, 4.0, 5.0];
        let mut pairs = Vec::new();
        for seed in 100..120u64 {
            let base = lattice_frame(seed, 48, 48, 8, 90.0, 210.0);
            for g in train_gammas {
                let gv = GammaValue::new(g).unwrap();
                pairs.push((darken(&base, gv), gv));
            }
        }
        let model = fit_gamma_regressor(&pairs).unwrap();
        let held_out_gammas = [1.6, 1.9, 2.3, 2.8, 3.4, 4.1, 4.8];
        let mut total_rel = 0.0;
        let mut count = 0usize;
        for seed in 200..230u64 {
            let base = lattice_frame(seed, 48, 48, 8, 90.0, 210.0);
            for g in held_out_gammas {
                let dark = darken(&base, GammaValue::new(g).unwrap());
                let pred = model.predict(&dark).value();
                total_rel += (pred - g).abs() / g;
                count += 1;
            }
        }
        assert!(count >= 200, "held-out set too small: {count}");
        let mean_rel = total_rel / count as f64;
        assert!(mean_rel <= 0.20, "regressor mean relative error {mean_rel:.3} on {count} frames");
    });
}

// ---------------------------------------------------------------------------
// 3. delta sampling invariants
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_delta_sampling_invariants() {
    criterion("3 (delta sampling)", || {
        let mut meta = ChaCha8Rng::seed_from_u64(777);
        for trial in 0..1000u64 {
            let omega = meta.random_range(1..=8usize);
            let sigma = omega + meta.random_range(0..=8usize);
            let alpha = meta.random_range(0..=4usize);
            let beta = alpha + meta.random_range(0..=5usize);
            let n = sigma + meta.random_range(0..=120usize);
            let params = SamplingParams::new(omega, alpha, beta, sigma).unwrap();
            let frames: Vec<Frame> = (0..n)
                .map(|i| Frame::filled(3, 2, [(i % 200) as u8 + 1, 2, 3]).unwrap())
                .collect();
            let clip = Clip::new(frames, None).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9000 + trial);
            let (out, plan) = delta_sample(&clip, &params, &mut rng).unwrap();
            assert_eq!(out.len(), n / omega, "length broke: n={n} omega={omega}");
            assert_eq!(plan.stride, (omega + plan.delta).min(sigma));
            assert!(plan.delta >= alpha && plan.delta <= beta);
            for w in plan.kept_indices.windows(2) {
                assert!(w[1] > w[0] && w[1] - w[0] == plan.stride);
            }
            assert_eq!(plan.p1 + plan.kept_indices.len() + plan.p2, n / omega);
        }
        // alpha = beta = 0 reproduces fixed-stride sampling exactly
        for omega in 1..=5usize {
            let n = 40;
            let frames: Vec<Frame> =
                (0..n).map(|i| Frame::filled(2, 2, [i as u8 + 1, 0, 0]).unwrap()).collect();
            let clip = Clip::new(frames.clone(), None).unwrap();
            let params = SamplingParams::new(omega, 0, 0, omega).unwrap();
            let (out, plan) = delta_sample(&clip, &params, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
            assert_eq!((plan.p1, plan.p2), (0, 0));
            let expected: Vec<Frame> = (0..n / omega).map(|i| frames[i * omega].clone()).collect();
            assert_eq!(out.frames(), &expected[..]);
        }
    });
}

// ---------------------------------------------------------------------------
// 4. optical flow accuracy
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_optical_flow_accuracy() {
    criterion("4 (optical flow)", || {
        let seeds = [11u64, 21, 31, 41, 51];
        let margin = 12;
        for seed in seeds {
            let (f1, f2) = shifted_pair(seed, 64, 64, 1);
            let (lk, _) = lucas_kanade(&f1, &f2, 15).unwrap();
            let lk_epe = interior_mean_epe(&lk, (1.0, 0.0), margin);
            assert!(lk_epe <= 0.2, "seed {seed}: LK endpoint error {lk_epe:.4}");
            let hs = horn_schunck(&f1, &f2, 1.0, 200).unwrap();
            let hs_epe = interior_mean_epe(&hs, (1.0, 0.0), margin);
            assert!(hs_epe <= 0.3, "seed {seed}: HS endpoint error {hs_epe:.4}");
            // residual non-increasing over iteration checkpoints
            let mut last = f64::INFINITY;
            for iters in [10, 50, 100, 200] {
                let field = horn_schunck(&f1, &f2, 1.0, iters).unwrap();
                let res = brightness_residual(&f1, &f2, &field).unwrap();
                assert!(res <= last + 1e-12, "seed {seed}: residual rose at {iters} iters");
                last = res;
            }
            // zero-motion identity, exact
            let (zero_lk, _) = lucas_kanade(&f1, &f1, 15).unwrap();
            assert!(zero_lk.vectors().iter().all(|&(u, v)| u == 0.0 && v == 0.0));
            let zero_hs = horn_schunck(&f1, &f1, 1.0, 50).unwrap();
            assert!(zero_hs.vectors().iter().all(|&(u, v)| u == 0.0 && v == 0.0));
        }
    });
}

// ---------------------------------------------------------------------------
// 5. classifier gradient + softmax invariance
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_classifier_gradient_and_softmax() {
    criterion("5 (classifier checks)", || {
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        for draw in 0..100 {
            let (c, d, m) = (3usize, 5usize, 10usize);
            let weights: Vec<Vec<f64>> =
                (0..c).map(|_| (0..d).map(|_| rng.random_range(-1.5..1.5)).collect()).collect();
            let bias: Vec<f64> = (0..c).map(|_| rng.random_range(-1.0..1.0)).collect();
            let examples: Vec<Vec<f64>> =
                (0..m).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..c)).collect();
            let l2 = 0.02;
            // independent finite-difference oracle over a plain loss
            let loss_of = |w: &[Vec<f64>], b: &[f64]| -> f64 {
                let mut total = 0.0;
                for (x, &y) in examples.iter().zip(labels.iter()) {
                    let scores: Vec<f64> = (0..c)
                        .map(|k| b[k] + w[k].iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>())
                        .collect();
                    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let logsum = scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln() + max;
                    total += logsum - scores[y];
                }
                total /= m as f64;
                for row in w {
                    total += 0.5 * l2 * row.iter().map(|v| v * v).sum::<f64>();
                }
                total
            };
            let (_, grad_w, grad_b) = loss_and_gradient(&weights, &bias, &examples, &labels, l2);
            let eps = 1e-5;
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..c {
                for j in 0..d {
                    let mut wp = weights.clone();
                    wp[k][j] += eps;
                    let mut wm = weights.clone();
                    wm[k][j] -= eps;
                    let fd = (loss_of(&wp, &bias) - loss_of(&wm, &bias)) / (2.0 * eps);
                    num += (fd - grad_w[k][j]).powi(2);
                    den += fd.powi(2) + grad_w[k][j].powi(2);
                }
                let mut bp = bias.clone();
                bp[k] += eps;
                let mut bm = bias.clone();
                bm[k] -= eps;
                let fd = (loss_of(&weights, &bp) - loss_of(&weights, &bm)) / (2.0 * eps);
                num += (fd - grad_b[k]).powi(2);
                den += fd.powi(2) + grad_b[k].powi(2);
            }
            let rel = (num / den.max(1e-300)).sqrt();
            assert!(rel <= 1e-4, "draw {draw}: gradient relative error {rel:.2e}");
        }
        // softmax argmax invariance on 10^4 random score vectors, exact
        let argmax = |s: &[f64]| {
            s.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        for _ in 0..10_000 {
            let c = rng.random_range(2..8usize);
            let scores: Vec<f64> = (0..c).map(|_| rng.random_range(-30.0..30.0)).collect();
            assert_eq!(argmax(&scores), argmax(&softmax(&scores)));
        }
    });
}

// ---------------------------------------------------------------------------
// 6. end-to-end synthetic benchmark
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_end_to_end_benchmark() {
    criterion("6 (end-to-end benchmark)", || {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            classes: MotionClass::ALL.to_vec(),
            train_per_class: 100,
            test_per_class: 40,
            frames_per_clip: 64,
            width: 170,
            height: 128,
            noise_amplitude: 20.0,
            gamma_lo: 2.0,
            gamma_hi: 5.0,
            per_frame_jitter: 0.0,
            seed: 42,
        };
        let manifest = gen_synthetic(&spec, dir.path()).unwrap();
        assert_eq!(manifest.entries().len(), 700);

        // full pipeline: delta sampling omega 4, maxcenter crop, target-mean
        // enhancement, LK flow, concat fusion
        let config = PipelineConfig::benchmark_default();
        let enhanced = run_experiment(&config, &manifest, &manifest).unwrap();
        eprintln!(
            "benchmark enhanced arm: top1 {:.4}, top5 {:.4} ({} ms)",
            enhanced.row.top1, enhanced.row.top5, enhanced.wall_ms
        );

        let mut dark_config = config.clone();
        dark_config.enhance.kind = EnhanceKind::Off;
        let dark = run_experiment(&dark_config, &manifest, &manifest).unwrap();
        eprintln!(
            "benchmark dark-only arm: top1 {:.4}, top5 {:.4} ({} ms)",
            dark.row.top1, dark.row.top5, dark.wall_ms
        );

        assert!(
            enhanced.row.top1 >= 0.90,
            "enhanced top-1 {:.4} below 0.90",
            enhanced.row.top1
        );
        assert!(
            enhanced.row.top1 >= dark.row.top1,
            "enhanced top-1 {:.4} below dark-only {:.4}",
            enhanced.row.top1,
            dark.row.top1
        );
    });
}

// ---------------------------------------------------------------------------
// 7. reproducibility
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_reproducibility() {
    criterion("7 (reproducibility)", || {
        // dataset generation is byte-identical
        let gen_a = tempfile::tempdir().unwrap();
        let gen_b = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec {
            classes: vec![MotionClass::TranslateH, MotionClass::Circular],
            train_per_class: 6,
            test_per_class: 2,
            frames_per_clip: 16,
            width: 96,
            height: 80,
            noise_amplitude: 20.0,
            gamma_lo: 2.0,
            gamma_hi: 4.0,
            per_frame_jitter: 0.0,
            seed: 7,
        };
        let manifest_a = gen_synthetic(&spec, gen_a.path()).unwrap();
        gen_synthetic(&spec, gen_b.path()).unwrap();
        let read_sorted = |dir: &std::path::Path| -> Vec<(String, Vec<u8>)> {
            let mut files: Vec<_> =
                std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            files
                .into_iter()
                .map(|p| {
                    (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
                })
                .collect()
        };
        assert_eq!(read_sorted(gen_a.path()), read_sorted(gen_b.path()));

        // two runs of one experiment: byte-identical model files and reports;
        // regressor mode also covers the gamma-model file
        let mut config = PipelineConfig::benchmark_default();
        config.sampling = SamplingParams::new(2, 0, 1, 4).unwrap();
        config.crop_train = CropSpec { mode: CropMode::Center, size: 64 };
        config.crop_test = CropSpec { mode: CropMode::Center, size: 64 };
        config.enhance.kind = EnhanceKind::Regressor;
        config.classifier.epochs = 150;
        config.flow.window = 9;

        let work = tempfile::tempdir().unwrap();
        let mut artifacts: Vec<(Vec<u8>, Vec<u8>, Vec<u8>)> = Vec::new();
        for run in 0..2 {
            let outcome = run_experiment(&config, &manifest_a, &manifest_a).unwrap();
            let model_path = work.path().join(format!("model_{run}.csv"));
            outcome.models.classifier.save(&model_path).unwrap();
            let gamma_path = work.path().join(format!("gamma_{run}.csv"));
            outcome.models.gamma.as_ref().unwrap().save(&gamma_path).unwrap();
            let report_path = work.path().join(format!("report_{run}.csv"));
            append_report(&report_path, std::slice::from_ref(&outcome.row)).unwrap();
            artifacts.push((
                std::fs::read(&model_path).unwrap(),
                std::fs::read(&gamma_path).unwrap(),
                std::fs::read(&report_path).unwrap(),
            ));
        }
        assert_eq!(artifacts[0].0, artifacts[1].0, "model files differ between runs");
        assert_eq!(artifacts[0].1, artifacts[1].1, "gamma model files differ between runs");
        assert_eq!(artifacts[0].2, artifacts[1].2, "report files differ between runs");
    });
}

// ---------------------------------------------------------------------------
// 8. format round trips
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_format_round_trips() {
    criterion("8 (format round trips)", || {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);

        for i in 0..100u64 {
            // PPM
            let (w, h) = (rng.random_range(1..12usize), rng.random_range(1..12usize));
            let frame = Frame::new(w, h, lcg_bytes(i, w * h * 3)).unwrap();
            let path = dir.path().join("t.ppm");
            save_ppm(&frame, &path).unwrap();
            assert_eq!(load_ppm(&path).unwrap(), frame);
            assert_eq!(parse_ppm(&std::fs::read(&path).unwrap()).unwrap(), frame);

            // DLV1 clip
            let n = rng.random_range(1..5usize);
            let (cw, ch) = (rng.random_range(1..9usize), rng.random_range(1..9usize));
            let frames: Vec<Frame> = (0..n)
                .map(|k| Frame::new(cw, ch, lcg_bytes(i * 31 + k as u64, cw * ch * 3)).unwrap())
                .collect();
            let label = if rng.random::<bool>() { Some(format!("class{}", i % 7)) } else { None };
            let clip = Clip::new(frames, label).unwrap();
            let cpath = dir.path().join("t.dlv");
            save_clip(&clip, &cpath).unwrap();
            assert_eq!(load_clip(&cpath).unwrap(), clip);
            assert_eq!(clip_from_bytes(&clip_to_bytes(&clip).unwrap()).unwrap(), clip);

            // PIEH flow
            let (fw, fh) = (rng.random_range(1..10usize), rng.random_range(1..10usize));
            let vectors: Vec<(f32, f32)> = (0..fw * fh)
                .map(|_| (rng.random_range(-50.0..50.0f32), rng.random_range(-50.0..50.0f32)))
                .collect();
            let field = FlowField::new(fw, fh, vectors).unwrap();
            let fpath = dir.path().join("t.flo");
            save_flow(&field, &fpath).unwrap();
            assert_eq!(load_flow(&fpath).unwrap(), field);
            assert_eq!(flow_from_bytes(&flow_to_bytes(&field)).unwrap(), field);

            // classifier model CSV
            let c = rng.random_range(2..6usize);
            let d = rng.random_range(1..16usize);
            let model = ClassifierModel {
                weights: (0..c)
                    .map(|_| {
                        (0..d)
                            .map(|_| {
                                let mag: f64 = rng.random_range(-40.0..40.0);
                                rng.random_range(-1.0..1.0) * 10f64.powf(mag / 4.0)
                            })
                            .collect()
                    })
                    .collect(),
                bias: (0..c).map(|_| rng.random_range(-5.0..5.0)).collect(),
                class_names: (0..c).map(|k| format!("class_{k}")).collect(),
                schema: "fused-concat+hof-g4-b8".into(),
            };
            let mpath = dir.path().join("t.model.csv");
            model.save(&mpath).unwrap();
            assert_eq!(ClassifierModel::load(&mpath).unwrap(), model);

            // pipeline config
            let omega = rng.random_range(1..6usize);
            let alpha = rng.random_range(0..3usize);
            let mut config = PipelineConfig::benchmark_default();
            config.seed = rng.random::<u64>();
            config.sampling = SamplingParams::new(
                omega,
                alpha,
                alpha + rng.random_range(0..4usize),
                omega + rng.random_range(0..5usize),
            )
            .unwrap();
            config.crop_train = CropSpec {
                mode: [CropMode::Center, CropMode::Maxcenter, CropMode::Scale]
                    [rng.random_range(0..3usize)],
                size: rng.random_range(16..200usize),
            };
            config.enhance.kind = [
                EnhanceKind::Off,
                EnhanceKind::Fixed,
                EnhanceKind::Target,
                EnhanceKind::Regressor,
            ][rng.random_range(0..4usize)];
            config.enhance.gamma = rng.random_range(1.0..GAMMA_MAX);
            config.enhance.target_mean = rng.random_range(1.0..254.0);
            config.enhance.per_video = rng.random::<bool>();
            config.enhance.model_path = format!("models/run_{i}/gamma.csv");
            config.flow.hs_alpha = rng.random_range(0.1..4.0);
            config.classifier.learning_rate = rng.random_range(0.001..1.0);
            config.classifier.l2 = rng.random_range(0.0..0.1);
            config.use_softmax_at_eval = rng.random::<bool>();
            let cfg_path = dir.path().join("t.cfg");
            config.save(&cfg_path).unwrap();
            assert_eq!(PipelineConfig::load(&cfg_path).unwrap(), config);
        }

        // one spot check pinned by the mean-intensity identity: the scalar
        // example 255*(64/255)^(1/2) survives the full pipeline's math
        let f = Frame::filled(1, 1, [64, 64, 64]).unwrap();
        let m = mean_enhanced_intensity(&f, GammaValue::new(2.0).unwrap());
        assert!((m - 127.749).abs() < 1e-3);
    });
}
