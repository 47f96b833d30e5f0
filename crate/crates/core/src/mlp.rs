//! Fully connected feed-forward network trained with momentum SGD on the
//! loss `J = 1/(2m) Σ (ŷ - y)²`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::{debug, info};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{normalize, tau_from_target, NormalizationStats, TauRecord};
use crate::error::{Error, Result};
use crate::metrics::fmt_f64;

/// Layer widths of the default network.
pub const DEFAULT_LAYERS: [usize; 5] = [3, 64, 64, 64, 1];

/// First line of the model file format.
pub const FORMAT_VERSION: &str = "supgnet-mlp 1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Linear => "linear",
        }
    }

    fn from_tag(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

/// Affine map followed by an activation. `weights` is row-major with one
/// row per output.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn n_params(&self) -> usize {
        self.weights.len() + self.biases.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<Layer>,
    stats: Option<NormalizationStats>,
}

/// Network with `sizes` widths, He-uniform weights (bound `√(6/fan_in)`)
/// and zero biases. Hidden layers use ReLU; the output layer uses
/// `output`.
pub fn init_model_with(sizes: &[usize], output: Activation, seed: u64) -> Result<MlpModel> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::invalid(format!("invalid layer sizes {sizes:?}")));
    }
    if sizes[sizes.len() - 1] != 1 {
        return Err(Error::invalid("the network must have a single output"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let last = sizes.len() - 2;
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(l, w)| {
            let bound = (6.0 / w[0] as f64).sqrt();
            Layer {
                inputs: w[0],
                outputs: w[1],
                weights: (0..w[0] * w[1]).map(|_| rng.gen_range(-bound..bound)).collect(),
                biases: vec![0.0; w[1]],
                activation: if l == last { output } else { Activation::Relu },
            }
        })
        .collect();
    Ok(MlpModel { layers, stats: None })
}

/// The default `[3, 64, 64, 64, 1]` network with ReLU on every layer.
pub fn init_model(seed: u64) -> MlpModel {
    init_model_with(&DEFAULT_LAYERS, Activation::Relu, seed).expect("default layer sizes are valid")
}

/// Pre-activations and activations of every layer for one input.
struct Trace {
    z: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
}

impl MlpModel {
    pub fn from_layers(layers: Vec<Layer>, stats: Option<NormalizationStats>) -> Result<Self> {
        let model = MlpModel { layers, stats };
        model.check_shapes()?;
        Ok(model)
    }

    fn check_shapes(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidModel("no layers".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.weights.len() != layer.inputs * layer.outputs || layer.biases.len() != layer.outputs {
                return Err(Error::InvalidModel(format!("layer {l} has inconsistent shapes")));
            }
            if l > 0 && self.layers[l - 1].outputs != layer.inputs {
                return Err(Error::InvalidModel(format!(
                    "layer {l} expects {} inputs but layer {} has {} outputs",
                    layer.inputs,
                    l - 1,
                    self.layers[l - 1].outputs
                )));
            }
        }
        if self.layers[self.layers.len() - 1].outputs != 1 {
            return Err(Error::InvalidModel("the network must have a single output".into()));
        }
        Ok(())
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Widths from input to output.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn stats(&self) -> Option<&NormalizationStats> {
        self.stats.as_ref()
    }

    pub fn set_stats(&mut self, stats: NormalizationStats) {
        self.stats = Some(stats);
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Layer::n_params).sum()
    }

    /// Parameters flattened layer by layer, weights before biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::invalid(format!(
                "{} parameters for a model with {}",
                params.len(),
                self.n_params()
            )));
        }
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[k..k + nw]);
            k += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&params[k..k + nb]);
            k += nb;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut z = Vec::with_capacity(self.layers.len());
        let mut a: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len() + 1);
        a.push(x.to_vec());
        for layer in &self.layers {
            let input = &a[a.len() - 1];
            let zl: Vec<f64> = (0..layer.outputs)
                .map(|o| {
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    layer.biases[o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect();
            a.push(zl.iter().map(|&v| layer.activation.apply(v)).collect());
            z.push(zl);
        }
        Trace { z, a }
    }

    /// Network output `ŷ` for a normalized input.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.layers[0].inputs {
            return Err(Error::invalid(format!(
                "expected {} inputs, got {}",
                self.layers[0].inputs,
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite input {x:?}")));
        }
        Ok(self.forward_unchecked(x))
    }

    fn forward_unchecked(&self, x: &[f64]) -> f64 {
        let t = self.trace(x);
        t.a[t.a.len() - 1][0]
    }

    /// Loss `J = 1/(2m) Σ (ŷ - y)²` over the batch and its gradient with
    /// respect to [`Self::params`].
    pub fn loss_and_gradient(&self, xs: &[[f64; 3]], ys: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.n_params()];
        let m = xs.len() as f64;
        let mut loss = 0.0;
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |k, l| {
                let start = *k;
                *k += l.n_params();
                Some(start)
            })
            .collect();
        for (x, &y) in xs.iter().zip(ys) {
            let t = self.trace(x);
            let out = t.a[t.a.len() - 1][0];
            let diff = out - y;
            loss += diff * diff;
            let last = self.layers.len() - 1;
            let mut delta: Vec<f64> =
                vec![diff / m * self.layers[last].activation.derivative(t.z[last][0])];
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input = &t.a[l];
                let off = offsets[l];
                let (gw, gb) = grad[off..off + layer.n_params()].split_at_mut(layer.weights.len());
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    for (g, &v) in gw[o * layer.inputs..(o + 1) * layer.inputs].iter_mut().zip(input) {
                        *g += d * v;
                    }
                    gb[o] += d;
                }
                if l == 0 {
                    break;
                }
                let below = &self.layers[l - 1];
                let mut next = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (n, &w) in next.iter_mut().zip(row) {
                        *n += w * d;
                    }
                }
                for (n, &z) in next.iter_mut().zip(&t.z[l - 1]) {
                    *n *= below.activation.derivative(z);
                }
                delta = next;
            }
        }
        (loss / (2.0 * m), grad)
    }

    /// Mean squared error `1/m Σ (ŷ - y)²`.
    pub fn mse(&self, xs: &[[f64; 3]], ys: &[f64]) -> f64 {
        let s: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (self.forward_unchecked(x) - y).powi(2))
            .sum();
        s / xs.len() as f64
    }

    /// `τ_ANN = 10^(-ŷ)` for raw features.
    pub fn predict_tau(&self, r: usize, h: f64, pe_g: f64) -> Result<f64> {
        let stats = self
            .stats
            .as_ref()
            .ok_or_else(|| Error::InvalidModel("model carries no normalization statistics".into()))?;
        if !self.is_finite() {
            return Err(Error::InvalidModel("non-finite parameters".into()));
        }
        if r == 0 || !(h > 0.0 && pe_g > 0.0) {
            return Err(Error::invalid(format!(
                "features must be positive, got r={r}, h={h}, Pe_g={pe_g}"
            )));
        }
        let x = stats.normalize_features(r as f64, h, pe_g);
        Ok(tau_from_target(self.forward(&x)?))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{FORMAT_VERSION}");
        let sizes: Vec<String> = self.sizes().iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "layers {}", sizes.join(" "));
        let tags: Vec<&str> = self.layers.iter().map(|l| l.activation.tag()).collect();
        let _ = writeln!(s, "activations {}", tags.join(" "));
        match &self.stats {
            Some(st) => {
                let v = [
                    st.mean_r,
                    st.std_r,
                    st.mean_h,
                    st.std_h,
                    st.mean_log10_pe,
                    st.std_log10_pe,
                ];
                let v: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
                let _ = writeln!(s, "stats {}", v.join(" "));
            }
            None => {
                let _ = writeln!(s, "stats none");
            }
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(s, "weights {l}");
            for row in layer.weights.chunks(layer.inputs) {
                let row: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
                let _ = writeln!(s, "{}", row.join(" "));
            }
            let _ = writeln!(s, "biases {l}");
            let b: Vec<String> = layer.biases.iter().map(|&x| fmt_f64(x)).collect();
            let _ = writeln!(s, "{}", b.join(" "));
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut last_line = 0;
        let mut next = |expect: &str| -> Result<(usize, &str)> {
            match lines.next() {
                Some((n, l)) => {
                    last_line = n;
                    Ok((n, l))
                }
                None => Err(Error::Deserialization {
                    what: "model",
                    line: last_line + 1,
                    reason: format!("unexpected end of file, expected {expect}"),
                }),
            }
        };
        let bad = |line: usize, reason: String| Error::Deserialization {
            what: "model",
            line,
            reason,
        };
        let reals = |line: usize, s: &str, count: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = s
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(line, e.to_string()))?;
            if v.len() != count {
                return Err(bad(line, format!("expected {count} values, found {}", v.len())));
            }
            Ok(v)
        };
        let keyed = |line: usize, s: &'_ str, key: &str| -> Result<String> {
            s.strip_prefix(key)
                .map(|r| r.trim().to_string())
                .ok_or_else(|| bad(line, format!("expected `{key} ...`")))
        };

        let (_, header) = next("version header")?;
        if header != FORMAT_VERSION {
            return Err(Error::IncompatibleVersion {
                found: header.to_string(),
                expected: FORMAT_VERSION.to_string(),
            });
        }
        let (n, l) = next("layer sizes")?;
        let sizes: Vec<usize> = keyed(n, l, "layers")?
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(n, e.to_string()))?;
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(bad(n, format!("invalid layer sizes {sizes:?}")));
        }
        let (n, l) = next("activations")?;
        let acts: Vec<Activation> = keyed(n, l, "activations")?
            .split_whitespace()
            .map(|t| Activation::from_tag(t).ok_or_else(|| bad(n, format!("unknown activation {t:?}"))))
            .collect::<Result<_>>()?;
        if acts.len() != sizes.len() - 1 {
            return Err(bad(n, "one activation per layer expected".into()));
        }
        let (n, l) = next("stats")?;
        let st = keyed(n, l, "stats")?;
        let stats = if st == "none" {
            None
        } else {
            let v = reals(n, &st, 6)?;
            let s = NormalizationStats {
                mean_r: v[0],
                std_r: v[1],
                mean_h: v[2],
                std_h: v[3],
                mean_log10_pe: v[4],
                std_log10_pe: v[5],
            };
            s.validate().map_err(|e| bad(n, e.to_string()))?;
            Some(s)
        };
        let mut layers = Vec::with_capacity(acts.len());
        for (l, w) in sizes.windows(2).enumerate() {
            let (n, t) = next("weights")?;
            if keyed(n, t, "weights")? != l.to_string() {
                return Err(bad(n, format!("expected weights of layer {l}")));
            }
            let mut weights = Vec::with_capacity(w[0] * w[1]);
            for _ in 0..w[1] {
                let (n, t) = next("weight row")?;
                weights.extend(reals(n, t, w[0])?);
            }
            let (n, t) = next("biases")?;
            if keyed(n, t, "biases")? != l.to_string() {
                return Err(bad(n, format!("expected biases of layer {l}")));
            }
            let (n, t) = next("bias row")?;
            let biases = reals(n, t, w[1])?;
            layers.push(Layer {
                inputs: w[0],
                outputs: w[1],
                weights,
                biases,
                activation: acts[l],
            });
        }
        let (n, t) = next("end marker")?;
        if t != "end" {
            return Err(bad(n, "expected `end`".into()));
        }
        MlpModel::from_layers(layers, stats)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many epochs without a validation improvement and
    /// restore the best parameters; `None` trains for all epochs.
    pub patience: Option<usize>,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 32,
            epochs: 500,
            patience: Some(50),
            seed: 7,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid("momentum must lie in [0, 1)"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    /// `NaN` when training without a validation set.
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochStats>,
    /// Epoch whose parameters the model holds after training.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainingHistory {
    pub const CSV_HEADER: &'static str = "epoch,train_mse,val_mse";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for e in &self.epochs {
            let _ = writeln!(s, "{},{},{}", e.epoch, fmt_f64(e.train_mse), fmt_f64(e.val_mse));
        }
        s
    }
}

/// Trains on normalized records. Statistics are computed from `training`
/// and attached to the model; `validation` is normalized with the same
/// statistics.
pub fn train(
    model: &mut MlpModel,
    training: &[TauRecord],
    validation: &[TauRecord],
    config: &TrainConfig,
) -> Result<TrainingHistory> {
    let stats = NormalizationStats::from_records(training)?;
    let (xs, ys) = normalize(training, &stats)?;
    let (vx, vy) = normalize(validation, &stats)?;
    model.set_stats(stats);
    train_arrays(model, &xs, &ys, &vx, &vy, config)
}

/// Trains on already normalized data.
pub fn train_arrays(
    model: &mut MlpModel,
    xs: &[[f64; 3]],
    ys: &[f64],
    val_xs: &[[f64; 3]],
    val_ys: &[f64],
    config: &TrainConfig,
) -> Result<TrainingHistory> {
    config.validate()?;
    if xs.is_empty() || xs.len() != ys.len() || val_xs.len() != val_ys.len() {
        return Err(Error::invalid("training data must be nonempty with matching lengths"));
    }
    if model.layers[0].inputs != 3 {
        return Err(Error::InvalidModel("the network must take 3 features".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut velocity = vec![0.0; model.n_params()];
    let mut params = model.params();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut bx = Vec::with_capacity(config.batch_size);
    let mut by = Vec::with_capacity(config.batch_size);
    let has_val = !val_xs.is_empty();

    let mut history = Vec::with_capacity(config.epochs);
    let mut best = (f64::INFINITY, 0, params.clone());
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        for batch in order.chunks(config.batch_size) {
            bx.clear();
            by.clear();
            bx.extend(batch.iter().map(|&i| xs[i]));
            by.extend(batch.iter().map(|&i| ys[i]));
            let (loss, grad) = model.loss_and_gradient(&bx, &by);
            if !loss.is_finite() {
                return Err(Error::TrainingFailure { epoch });
            }
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v - config.learning_rate * g;
                *p += *v;
            }
            model.set_params(&params)?;
        }
        let train_mse = model.mse(xs, ys);
        let val_mse = if has_val { model.mse(val_xs, val_ys) } else { f64::NAN };
        if !train_mse.is_finite() || (has_val && !val_mse.is_finite()) {
            return Err(Error::TrainingFailure { epoch });
        }
        debug!("epoch {epoch}: train {train_mse:.6e}, validation {val_mse:.6e}");
        history.push(EpochStats {
            epoch,
            train_mse,
            val_mse,
        });
        let score = if has_val { val_mse } else { train_mse };
        if score < best.0 {
            best = (score, epoch, params.clone());
        } else if let Some(p) = config.patience {
            if epoch - best.1 >= p {
                stopped_early = true;
                break;
            }
        }
    }

    let best_epoch = if config.patience.is_some() {
        model.set_params(&best.2)?;
        best.1
    } else {
        history.len()
    };
    info!(
        "trained {} epochs, keeping epoch {best_epoch} (score {:.6e})",
        history.len(),
        best.0
    );
    Ok(TrainingHistory {
        epochs: history,
        best_epoch,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats() -> NormalizationStats {
        NormalizationStats {
            mean_r: 2.0,
            std_r: 0.8,
            mean_h: 0.08,
            std_h: 0.05,
            mean_log10_pe: 2.5,
            std_log10_pe: 1.1,
        }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_model(1);
        assert_eq!(a, init_model(1));
        assert_ne!(a.params(), init_model(2).params());
        assert_eq!(a.sizes(), DEFAULT_LAYERS);
        for l in a.layers() {
            let bound = (6.0 / l.inputs as f64).sqrt();
            assert!(l.weights.iter().all(|w| w.abs() <= bound));
            assert!(l.biases.iter().all(|&b| b == 0.0));
            assert_eq!(l.activation, Activation::Relu);
        }
    }

    #[test]
    fn zero_weights_give_relu_of_the_output_bias() {
        let mut m = init_model(3);
        for l in m.layers_mut() {
            l.weights.fill(0.0);
        }
        let last = m.layers().len() - 1;
        for b in [1.5, -0.7] {
            m.layers_mut()[last].biases[0] = b;
            assert_eq!(m.forward(&[0.3, -1.0, 2.0]).unwrap(), b.max(0.0));
        }
        assert!(m.forward(&[f64::NAN, 0.0, 0.0]).is_err());
        assert!(m.forward(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn hand_built_relu_of_the_first_input() {
        let layers = vec![
            Layer {
                inputs: 3,
                outputs: 1,
                weights: vec![1.0, 0.0, 0.0],
                biases: vec![0.0],
                activation: Activation::Relu,
            },
            Layer {
                inputs: 1,
                outputs: 1,
                weights: vec![1.0],
                biases: vec![0.0],
                activation: Activation::Linear,
            },
        ];
        let m = MlpModel::from_layers(layers, None).unwrap();
        for (x, want) in [(-1.0, 0.0), (0.0, 0.0), (2.0, 2.0)] {
            assert_eq!(m.forward(&[x, 5.0, -3.0]).unwrap(), want);
        }
    }

    #[test]
    fn relu_networks_are_positively_homogeneous() {
        let mut m = init_model_with(&[3, 8, 8, 1], Activation::Linear, 5).unwrap();
        let x = [0.4, -0.2, 1.3];
        let t1 = m.trace(&x);
        m.layers_mut()[1].weights.iter_mut().for_each(|w| *w *= 2.0);
        let t2 = m.trace(&x);
        for (a, b) in t1.z[2].iter().zip(&t2.z[2]) {
            assert!((2.0 * a - b).abs() <= 1e-14 * a.abs().max(1.0));
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let mut m = init_model(9);
        m.set_stats(stats());
        let back = MlpModel::from_text(&m.to_text()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_text(), m.to_text());
    }

    #[test]
    fn malformed_files_are_rejected() {
        let mut m = init_model_with(&[3, 4, 1], Activation::Relu, 2).unwrap();
        m.set_stats(stats());
        let text = m.to_text();
        let lines: Vec<&str> = text.lines().collect();
        let truncated = lines[..lines.len() - 3].join("\n");
        assert!(matches!(
            MlpModel::from_text(&truncated),
            Err(Error::Deserialization { .. })
        ));
        let wrong = text.replacen(FORMAT_VERSION, "supgnet-mlp 0", 1);
        assert!(matches!(
            MlpModel::from_text(&wrong),
            Err(Error::IncompatibleVersion { .. })
        ));
        let garbled = text.replacen("weights 0\n", "weights 0\n1 2 x\n", 1);
        assert!(matches!(
            MlpModel::from_text(&garbled),
            Err(Error::Deserialization { line: 6, .. })
        ));
    }

    #[test]
    fn predict_needs_stats_and_finite_parameters() {
        let mut m = init_model(4);
        assert!(matches!(m.predict_tau(1, 0.1, 100.0), Err(Error::InvalidModel(_))));
        m.set_stats(stats());
        let tau = m.predict_tau(4, 0.0707107, 7071.0).unwrap();
        assert!(tau > 0.0 && tau <= 1.0);
        m.layers_mut()[0].weights[0] = f64::NAN;
        assert!(matches!(m.predict_tau(1, 0.1, 100.0), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn output_of_three_maps_to_a_milli_tau() {
        let mut m = init_model_with(&[3, 2, 1], Activation::Relu, 0).unwrap();
        for l in m.layers_mut() {
            l.weights.fill(0.0);
        }
        m.layers_mut()[1].biases[0] = 3.0;
        m.set_stats(stats());
        assert!((m.predict_tau(2, 0.1, 50.0).unwrap() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn single_record_is_memorized() {
        let mut m = init_model(11);
        // positive output bias keeps the output unit active
        let last = m.layers().len() - 1;
        m.layers_mut()[last].biases[0] = 0.5;
        let x = [[0.3, -0.5, 0.8]];
        let y = [2.4];
        let cfg = TrainConfig {
            epochs: 2000,
            patience: None,
            ..Default::default()
        };
        let h = train_arrays(&mut m, &x, &y, &[], &[], &cfg).unwrap();
        assert!(h.epochs.last().unwrap().train_mse <= 1e-6);
    }

    #[test]
    fn divergence_is_reported() {
        let mut m = init_model_with(&[3, 1], Activation::Linear, 1).unwrap();
        let xs: Vec<[f64; 3]> = (0..8).map(|i| [i as f64, 1.0, -(i as f64)]).collect();
        let ys = vec![1e3; 8];
        let cfg = TrainConfig {
            learning_rate: 10.0,
            epochs: 100,
            patience: None,
            ..Default::default()
        };
        assert!(matches!(
            train_arrays(&mut m, &xs, &ys, &[], &[], &cfg),
            Err(Error::TrainingFailure { .. })
        ));
    }
}
