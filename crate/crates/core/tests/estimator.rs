use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use sparsecs_core::dictionary::{Dictionary, Provenance};
use sparsecs_core::estimator::io::{read_model, write_model};
use sparsecs_core::estimator::{
    extract_features, feature_dim, gradient, label_sparsity, predict_sparsity, round_and_clamp, stratified_split, train,
    Batch, FeatureEncoding, FeatureVector, LabeledDataset, MagnitudeOrder, Mlp, ModelMeta, Optimizer, RawPart, Transform,
    TransformKind, TrainingHyperparams,
};
use sparsecs_core::{dft, seed, CMat, C64};

fn tone(n: usize, bin: usize) -> Vec<C64> {
    // The DFT atom for `bin`: its transform is the unit vector e_bin.
    dft::dft_basis(n).column(bin).iter().cloned().collect()
}

#[test]
fn dft_features_of_a_tone_are_one_hot() {
    let n = 32;
    let enc = FeatureEncoding { raw: RawPart::Omitted, ..FeatureEncoding::default() };
    let v = extract_features(&tone(n, 5), Transform::Dft, &enc).unwrap();
    assert_eq!(v.len(), n);
    for (k, x) in v.0.iter().enumerate() {
        let want = if k == 5 { 1.0 } else { 0.0 };
        assert!((x - want).abs() < 1e-12, "bin {k}: {x}");
    }
    let sorted = extract_features(&tone(n, 5), Transform::Dft, &FeatureEncoding { order: MagnitudeOrder::Descending, ..enc })
        .unwrap();
    assert!((sorted.0[0] - 1.0).abs() < 1e-12);
    assert!(sorted.0[1..].iter().all(|x| x.abs() < 1e-12));
}

#[test]
fn magnitudes_scale_with_the_signal() {
    let mut rng = seed::rng(4);
    let y: Vec<C64> = (0..24).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect();
    let enc = FeatureEncoding::default();
    let a = extract_features(&y, Transform::Dft, &enc).unwrap();
    let scaled: Vec<C64> = y.iter().map(|z| z * C64::new(0.0, 2.5)).collect();
    let b = extract_features(&scaled, Transform::Dft, &enc).unwrap();
    for k in 0..24 {
        assert!((b.0[k] - 2.5 * a.0[k]).abs() < 1e-12);
    }
}

#[test]
fn default_layout_is_magnitudes_then_interleaved_raw() {
    let n = 128;
    let y: Vec<C64> = (0..n).map(|i| C64::new(i as f64, -(i as f64) * 0.5)).collect();
    let enc = FeatureEncoding::default();
    let v = extract_features(&y, Transform::Dft, &enc).unwrap();
    assert_eq!(v.len(), 3 * n);
    assert_eq!(feature_dim(n, Transform::Dft, &enc), 3 * n);
    let mag: Vec<f64> = dft::forward(&y).iter().map(|c| c.norm()).collect();
    for k in 0..n {
        assert!((v.0[k] - mag[k]).abs() < 1e-9);
        assert_eq!(v.0[n + 2 * k], y[k].re);
        assert_eq!(v.0[n + 2 * k + 1], y[k].im);
    }

    // A 128 × 256 dictionary with raw omitted gives 256 features.
    let mut rng = seed::rng(5);
    let cols = CMat::from_fn(n, 2 * n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let d = Dictionary::from_columns(cols, Provenance::custom()).unwrap();
    let enc = FeatureEncoding { transform: TransformKind::Dictionary, order: MagnitudeOrder::Descending, raw: RawPart::Omitted };
    assert_eq!(feature_dim(n, Transform::Dictionary(&d), &enc), 2 * n);
    let v = extract_features(&y, Transform::Dictionary(&d), &enc).unwrap();
    assert_eq!(v.len(), 2 * n);
    assert!(v.0.windows(2).all(|w| w[0] >= w[1]));
    // Mismatched transform and encoding is an error.
    assert!(extract_features(&y, Transform::Dft, &enc).is_err());
}

#[test]
fn label_examples() {
    let n = 16;
    let atoms = dft::dft_basis(n);
    assert_eq!(label_sparsity(&tone(n, 3), &atoms, 0.1).unwrap(), 1);
    let mut y = vec![C64::new(0.0, 0.0); n];
    for (bin, g) in [(1, 1.0), (7, -0.8), (12, 0.6)] {
        for (yi, t) in y.iter_mut().zip(tone(n, bin)) {
            *yi += t * g;
        }
    }
    assert_eq!(label_sparsity(&y, &atoms, 0.1).unwrap(), 3);
    assert_eq!(label_sparsity(&vec![C64::new(0.0, 0.0); n], &atoms, 0.1).unwrap(), 0);
    assert!(label_sparsity(&y, &atoms, 0.0).is_err());
}

#[test]
fn split_sizes_and_partition() {
    let targets: Vec<usize> = (0..22_400).map(|i| 1 + i % 7).collect();
    let s = stratified_split(&targets, [0.6, 0.2, 0.2], 11).unwrap();
    assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (13_440, 4_480, 4_480));
    assert!(s.is_partition_of(22_400));
    assert_eq!(s, stratified_split(&targets, [0.6, 0.2, 0.2], 11).unwrap());
    assert!(stratified_split(&targets, [0.5, 0.2, 0.2], 11).is_err());
}

#[test]
fn split_is_stratified() {
    let mut rng = seed::rng(8);
    let targets: Vec<usize> = (0..1000).map(|_| rng.random_range(0..5)).collect();
    let s = stratified_split(&targets, [0.6, 0.2, 0.2], 3).unwrap();
    for label in 0..5 {
        let total = targets.iter().filter(|&&t| t == label).count() as f64;
        for (part, share) in [(&s.train, 0.6), (&s.validation, 0.2), (&s.test, 0.2)] {
            let count = part.iter().filter(|&&i| targets[i] == label).count() as f64;
            assert!((count - share * total).abs() <= 2.0, "label {label}: {count} vs {}", share * total);
        }
    }
}

#[test]
fn rounding_is_half_away_from_zero_and_clamped() {
    assert_eq!(round_and_clamp(3.4, 10), 3);
    assert_eq!(round_and_clamp(2.5, 10), 3);
    assert_eq!(round_and_clamp(3.5, 10), 4);
    assert_eq!(round_and_clamp(-0.7, 10), 0);
    assert_eq!(round_and_clamp(-0.5, 10), 0);
    assert_eq!(round_and_clamp(42.0, 10), 10);
    assert_eq!(round_and_clamp(f64::INFINITY, 10), 10);
    assert_eq!(round_and_clamp(f64::NAN, 10), 0);
}

fn random_batch(p: usize, n: usize, seed_value: u64) -> Batch {
    let mut rng = seed::rng(seed_value);
    let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let t = DMatrix::from_fn(n, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    Batch::new(x, t).unwrap()
}

#[test]
fn gradient_matches_central_differences() {
    let batch = random_batch(6, 20, 1);
    let net = Mlp::random(6, 5, 1, 2);
    let g = gradient(&net, &batch);
    let theta = net.params();
    let h = 1e-6;
    for i in 0..theta.len() {
        let mut plus = net.clone();
        let mut minus = net.clone();
        let mut tp = theta.clone();
        tp[i] += h;
        plus.set_params(&tp);
        tp[i] -= 2.0 * h;
        minus.set_params(&tp);
        let fd = (plus.loss(&batch) - minus.loss(&batch)) / (2.0 * h);
        assert!((fd - g[i]).abs() <= 1e-6 * (1.0 + g[i].abs()), "param {i}: {fd} vs {}", g[i]);
    }
}

#[test]
fn gradient_vanishes_at_a_perfect_fit_and_is_linear_in_the_residual() {
    let mut batch = random_batch(4, 15, 3);
    let net = Mlp::random(4, 3, 1, 4);
    let out = net.forward_batch(&batch.inputs);
    batch.targets = out.clone();
    assert!(gradient(&net, &batch).iter().all(|g| g.abs() < 1e-14));

    // Targets out − r and out − 2r: the gradient doubles.
    let mut rng = seed::rng(5);
    let r = DMatrix::from_fn(15, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let one = Batch::new(batch.inputs.clone(), &out - &r).unwrap();
    let two = Batch::new(batch.inputs.clone(), &out - &r * 2.0).unwrap();
    for (a, b) in gradient(&net, &one).iter().zip(gradient(&net, &two)) {
        assert!((2.0 * a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

fn synthetic_dataset(n: usize, constant: Option<usize>, seed_value: u64) -> LabeledDataset {
    let mut rng = seed::rng(seed_value);
    let mut feats = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let label = constant.unwrap_or_else(|| (4.0 + 2.0 * x[0] - 1.5 * x[1] * x[2] + x[3]).round().max(0.0) as usize);
        feats.push(FeatureVector(x));
        labels.push(label);
    }
    let split = stratified_split(&labels, [0.6, 0.2, 0.2], seed_value).unwrap();
    LabeledDataset::new(&feats, labels, split).unwrap()
}

fn meta() -> ModelMeta {
    ModelMeta { encoding: FeatureEncoding::default(), epsilon: 0.1, max_sparsity: 20 }
}

fn test_mse(ds: &LabeledDataset, report: &sparsecs_core::estimator::TrainReport) -> (f64, f64) {
    let test = &ds.split.test;
    let train_labels = ds.labels(&ds.split.train);
    let mean = train_labels.iter().sum::<usize>() as f64 / train_labels.len() as f64;
    let mut model_se = 0.0;
    let mut mean_se = 0.0;
    for &i in test {
        let v = FeatureVector(ds.features.row(i).iter().cloned().collect());
        let raw = report.model.raw_output(&v).unwrap();
        model_se += (raw - ds.targets[i] as f64).powi(2);
        mean_se += (mean - ds.targets[i] as f64).powi(2);
    }
    (model_se / test.len() as f64, mean_se / test.len() as f64)
}

#[test]
fn training_beats_the_mean_predictor() {
    let ds = synthetic_dataset(1500, None, 7);
    for optimizer in [Optimizer::LevenbergMarquardt, Optimizer::Adam] {
        let hp = TrainingHyperparams {
            optimizer,
            learning_rate: if optimizer == Optimizer::Adam { 0.01 } else { 0.001 },
            ..TrainingHyperparams::default()
        };
        let report = train(&ds, &hp, &meta()).unwrap();
        let (model, baseline) = test_mse(&ds, &report);
        assert!(model <= 0.5 * baseline, "{optimizer:?}: {model} vs mean {baseline}");
        assert!(!report.curve.is_empty());
        assert!(report.best_epoch >= 1 && report.best_epoch <= report.curve.len());
        let best = report.curve[report.best_epoch - 1].validation_mse;
        assert!(report.curve.iter().all(|e| e.validation_mse >= best));
    }
}

#[test]
fn constant_targets_are_predicted_exactly() {
    let ds = synthetic_dataset(300, Some(4), 9);
    let report = train(&ds, &TrainingHyperparams::default(), &meta()).unwrap();
    for &i in &ds.split.test {
        let v = FeatureVector(ds.features.row(i).iter().cloned().collect());
        assert_eq!(predict_sparsity(&report.model, &v).unwrap(), 4);
    }
}

#[test]
fn training_is_deterministic() {
    let ds = synthetic_dataset(400, None, 12);
    let hp = TrainingHyperparams { max_epochs: 15, ..TrainingHyperparams::default() };
    let a = train(&ds, &hp, &meta()).unwrap();
    let b = train(&ds, &hp, &meta()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn models_round_trip_bit_exactly() {
    let ds = synthetic_dataset(200, None, 13);
    let hp = TrainingHyperparams { max_epochs: 5, ..TrainingHyperparams::default() };
    let model = train(&ds, &hp, &meta()).unwrap().model;
    let mut buf = Vec::new();
    write_model(&mut buf, &model).unwrap();
    let back = read_model(&mut buf.as_slice()).unwrap();
    assert_eq!(back, model);
    assert!(read_model(&mut &buf[..buf.len() - 1]).is_err());
    assert!(read_model(&mut &b"not a model"[..]).is_err());
    let v = FeatureVector(vec![0.0; 4]);
    assert!(predict_sparsity(&model, &v).is_err());
}
