mod common;

use lumaflow_core::flow::{
    decode, encode, fm_loss, initial_net, load_model, model_from_bytes, model_to_bytes, sample_latent, save_model,
    train, train_with_report, wfm_loss, Latent, LatentOrigin, LossKind, TrainConfig, TrainExample, VelocityField,
    VelocityNet, MODEL_MAGIC,
};
use lumaflow_core::io::quantize8;
use lumaflow_core::retinex::{build_group, InterpMethod, DEFAULT_STRENGTHS};
use lumaflow_core::synth::{synthetic_pair, SynthOptions};
use lumaflow_core::weights::{weight_map_for_pair, MaskParams, WeightMap};
use lumaflow_core::{BilateralParams, ColorSpace, ImageBuffer, MapRole, ScalarMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn example(seed: u64, identical: bool) -> TrainExample {
    let pair = synthetic_pair(
        seed,
        SynthOptions {
            size: 32,
            ..Default::default()
        },
    );
    let target = if identical { &pair.low } else { &pair.normal };
    let group = build_group(
        &format!("p{seed}"),
        &pair.low,
        target,
        &DEFAULT_STRENGTHS,
        InterpMethod::Retinex,
        &BilateralParams::default(),
    )
    .unwrap();
    let weights = group.entries[1..]
        .iter()
        .map(|e| {
            let w = weight_map_for_pair(&pair.low, &quantize8(&e.image), &MaskParams::default()).unwrap();
            (e.strength, w)
        })
        .collect();
    TrainExample {
        input: pair.low,
        group,
        weights,
    }
}

fn small_config(steps: usize) -> TrainConfig {
    TrainConfig {
        steps,
        hidden: 8,
        rank: 2,
        batch_size: 2,
        ..Default::default()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[test]
fn training_is_deterministic() {
    let data = [example(1, false), example(2, false)];
    for loss in [LossKind::Fm, LossKind::Wfm] {
        let cfg = TrainConfig {
            loss,
            ..small_config(40)
        };
        let a = model_to_bytes(&train(&data, &cfg).unwrap());
        let b = model_to_bytes(&train(&data, &cfg).unwrap());
        assert_eq!(a, b, "{loss:?}");
    }
}

#[test]
fn zero_steps_returns_initial_net() {
    let cfg = small_config(0);
    let net = train(&[example(3, false)], &cfg).unwrap();
    assert_eq!(net, initial_net(&cfg));
}

#[test]
fn empty_dataset_is_rejected() {
    assert!(train(&[], &small_config(1)).is_err());
}

#[test]
fn loss_decreases_on_identical_pairs() {
    let cfg = TrainConfig {
        steps: 200,
        ..small_config(200)
    };
    let (_, report) = train_with_report(&[example(4, true), example(5, true)], &cfg).unwrap();
    let base = &report.base_losses;
    let (head, tail) = (mean(&base[..40]), mean(&base[base.len() - 40..]));
    assert!(tail < head, "base loss {head} -> {tail}");
    let adapter = &report.adapter_losses;
    let (head, tail) = (mean(&adapter[..40]), mean(&adapter[adapter.len() - 40..]));
    assert!(tail <= head, "adapter loss {head} -> {tail}");
}

#[test]
fn weighted_loss_by_hand() {
    // Two positions, errors per channel (1,1,1) and (0,0,0), weights 0.5 and 1:
    // e = [1, 0], loss = 0.5 * 1 / 1.5 = 1/3. Plain mean is 1/2.
    let pred = VelocityField::new(1, 2, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
    let target = VelocityField::new(1, 2, vec![0.0; 6]).unwrap();
    let w = WeightMap::new(ScalarMap::new(1, 2, MapRole::Weight, vec![0.5, 1.0]).unwrap(), 0.2).unwrap();
    assert!((wfm_loss(&pred, &target, &w).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((fm_loss(&pred, &target).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn weighted_loss_ignores_weight_scale() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let field = |rng: &mut ChaCha8Rng| {
        VelocityField::new(3, 4, (0..36).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    };
    let (p, t) = (field(&mut rng), field(&mut rng));
    let raw: Vec<f32> = (0..12).map(|_| rng.random_range(0.4f32..1.0)).collect();
    let w = WeightMap::new(ScalarMap::new(3, 4, MapRole::Weight, raw.clone()).unwrap(), 0.2).unwrap();
    let half = WeightMap::new(
        ScalarMap::new(3, 4, MapRole::Weight, raw.iter().map(|v| v * 0.5).collect()).unwrap(),
        0.2,
    )
    .unwrap();
    let (a, b) = (wfm_loss(&p, &t, &w).unwrap(), wfm_loss(&p, &t, &half).unwrap());
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    // Uniform weights at any level reduce to the plain mean.
    let flat = WeightMap::uniform(3, 4, 0.2);
    assert!((wfm_loss(&p, &t, &flat).unwrap() - fm_loss(&p, &t).unwrap()).abs() < 1e-12);
}

#[test]
fn model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.clfm");
    let net = train(&[example(6, false)], &small_config(5)).unwrap();
    save_model(&path, &net).unwrap();
    let loaded = load_model(&path).unwrap();
    // Stored as f32: a second round trip is exact.
    assert_eq!(model_to_bytes(&loaded), std::fs::read(&path).unwrap());
    for (a, b) in net.tensors().iter().zip(loaded.tensors()) {
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() <= 1e-7 * x.abs().max(1.0));
        }
    }
}

#[test]
fn model_rejects_bad_magic_and_version() {
    let bytes = model_to_bytes(&initial_net(&small_config(1)));
    let mut bad = bytes.clone();
    bad[..4].copy_from_slice(b"NOPE");
    assert!(model_from_bytes(&bad).unwrap_err().to_string().contains("magic"));
    let mut bad = bytes.clone();
    bad[4] = 99;
    assert!(model_from_bytes(&bad).unwrap_err().to_string().contains("version"));
    assert!(model_from_bytes(&bytes[..bytes.len() - 1]).is_err());
    assert!(model_from_bytes(MODEL_MAGIC).is_err());
}

#[test]
fn zero_net_sampler_returns_its_noise() {
    // Zero velocity everywhere: Euler steps leave the seeded noise untouched.
    let net = VelocityNet::zeros(small_config(1).dims());
    let cond = Latent::filled(2, 3, LatentOrigin::Encoded, 0.5);
    let a = sample_latent(&net, &cond, 0.7, 10, 9).unwrap();
    let b = sample_latent(&net, &cond, 0.7, 1, 9).unwrap();
    assert_eq!(a, b);
    let noise = Latent::noise(2, 3, &mut ChaCha8Rng::seed_from_u64(9));
    assert_eq!(a.data, noise.data);
}

#[test]
fn sampler_validates_arguments() {
    let net = initial_net(&small_config(1));
    let cond = Latent::filled(1, 1, LatentOrigin::Encoded, 0.5);
    assert!(sample_latent(&net, &cond, 0.5, 0, 0).is_err());
    assert!(sample_latent(&net, &cond, 1.5, 4, 0).is_err());
    assert!(sample_latent(&net, &cond, f64::NAN, 4, 0).is_err());
    let a = sample_latent(&net, &cond, 0.5, 4, 3).unwrap();
    assert_eq!(a, sample_latent(&net, &cond, 0.5, 4, 3).unwrap());
    assert!(a.data.iter().all(|v| v.is_finite()));
}

#[test]
fn codec_round_trips_block_constant_images() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let cells: Vec<f32> = (0..2 * 3 * 3).map(|_| rng.random::<f32>()).collect();
    let img = ImageBuffer::from_fn(16, 24, 3, ColorSpace::Linear, |y, x, c| {
        cells[((y / 8) * 3 + x / 8) * 3 + c]
    });
    let z = encode(&img).unwrap();
    assert_eq!((z.height, z.width), (2, 3));
    let back = decode(&z);
    let err = common::max_abs_diff(common::as_f64(back.data()), common::as_f64(img.data()));
    assert!(err <= 1e-6, "{err:e}");
    assert!(encode(&ImageBuffer::filled(12, 16, 3, ColorSpace::Linear, 0.5)).is_err());
}
