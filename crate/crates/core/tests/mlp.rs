use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use supgnet::dataset::NormalizationStats;
use supgnet::mlp::{init_model_with, train_arrays, Activation, MlpModel, TrainConfig};

/// Largest relative mismatch between the analytic gradient and central
/// differences, over parameters whose step does not cross a ReLU kink.
fn gradient_mismatch(model: &MlpModel, xs: &[[f64; 3]], ys: &[f64]) -> f64 {
    let (_, grad) = model.loss_and_gradient(xs, ys);
    let params = model.params();
    let eps = 1e-6;
    let mut probe = model.clone();
    let mut worst: f64 = 0.0;
    for k in 0..params.len() {
        let mut p = params.clone();
        p[k] = params[k] + eps;
        probe.set_params(&p).unwrap();
        let (plus, _) = probe.loss_and_gradient(xs, ys);
        p[k] = params[k] - eps;
        probe.set_params(&p).unwrap();
        let (minus, _) = probe.loss_and_gradient(xs, ys);
        let fd = (plus - minus) / (2.0 * eps);
        let scale = grad[k].abs().max(fd.abs()).max(1e-8);
        worst = worst.max((fd - grad[k]).abs() / scale);
    }
    worst
}

fn random_batch(rng: &mut ChaCha8Rng, m: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let xs: Vec<[f64; 3]> = (0..m)
        .map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
        .collect();
    let ys = (0..m).map(|_| rng.gen_range(0.5..4.0)).collect();
    (xs, ys)
}

/// Random nonzero biases keep pre-activations off the ReLU kink at zero;
/// the output bias keeps the final ReLU active.
fn small_network(seed: u64, output: Activation) -> MlpModel {
    let mut model = init_model_with(&[3, 5, 4, 1], output, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    for layer in model.layers_mut() {
        for b in &mut layer.biases {
            *b = rng.gen_range(-0.5..0.5);
        }
    }
    let last = model.layers().len() - 1;
    model.layers_mut()[last].biases[0] = 3.0;
    model
}

#[test]
fn backpropagation_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for seed in 0..5 {
        for output in [Activation::Relu, Activation::Linear] {
            let model = small_network(seed, output);
            let (xs, ys) = random_batch(&mut rng, 6);
            let worst = gradient_mismatch(&model, &xs, &ys);
            assert!(worst <= 1e-5, "seed {seed} {output:?}: {worst:e}");
        }
    }
}

#[test]
fn saved_models_reload_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let mut model = small_network(3, Activation::Relu);
    model.set_stats(NormalizationStats {
        mean_r: 2.0,
        std_r: 0.81,
        mean_h: 0.07,
        std_h: 0.04,
        mean_log10_pe: 2.6,
        std_log10_pe: 1.0 / 3.0,
    });
    let path = dir.path().join("model.txt");
    model.save(&path).unwrap();
    let back = MlpModel::load(&path).unwrap();
    assert_eq!(back, model);
    assert_eq!(
        back.predict_tau(2, 0.1, 500.0).unwrap().to_bits(),
        model.predict_tau(2, 0.1, 500.0).unwrap().to_bits()
    );
}

#[test]
fn training_is_deterministic_and_reduces_the_loss() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // Smooth positive target over the normalized features.
    let xs: Vec<[f64; 3]> = (0..64)
        .map(|_| [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)])
        .collect();
    let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 0.3 * x[0] - 0.2 * x[1] + 0.5 * x[2]).collect();
    let (tx, vx) = xs.split_at(48);
    let (ty, vy) = ys.split_at(48);
    let config = TrainConfig {
        epochs: 60,
        ..TrainConfig::default()
    };
    let run = || {
        let mut model = small_network(1, Activation::Relu);
        let history = train_arrays(&mut model, tx, ty, vx, vy, &config).unwrap();
        (model, history)
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    let first = ha.epochs[0].train_mse;
    assert!(a.mse(tx, ty) < 0.2 * first, "{} vs {first}", a.mse(tx, ty));
}
