//! Minimal fully-connected network with Adam, inverted dropout and a
//! two-headed Gaussian output, backing the MC-dropout and heteroscedastic
//! interval estimators.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputHead {
    /// Single output trained with mean squared error.
    Scalar,
    /// Two outputs (μ, logσ²) trained with Gaussian negative log-likelihood.
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MLPConfig {
    pub hidden_sizes: Vec<usize>,
    pub epochs: usize,
    /// Adam step size.
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    /// Dropout probability p after each hidden layer; 0 disables dropout.
    pub dropout_rate: f64,
    pub output_head: OutputHead,
    pub seed: u64,
}

impl Default for MLPConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![50],
            epochs: 20,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            dropout_rate: 0.2,
            output_head: OutputHead::Scalar,
            seed: 0,
        }
    }
}

impl MLPConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".to_string()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config("dropout_rate must be in [0, 1)".to_string()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".to_string()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".to_string()));
        }
        Ok(())
    }

    fn output_dim(&self) -> usize {
        match self.output_head {
            OutputHead::Scalar => 1,
            OutputHead::Gaussian => 2,
        }
    }
}

/// One dense layer, weights row-major `out_dim × in_dim`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Layer {
    w: Vec<f64>,
    b: Vec<f64>,
    in_dim: usize,
    out_dim: usize,
}

impl Layer {
    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.w[o * self.in_dim..(o + 1) * self.in_dim];
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
            out.push(z + self.b[o]);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MLPModel {
    layers: Vec<Layer>,
    pub config: MLPConfig,
    /// Mean training loss per epoch.
    pub loss_trace: Vec<f64>,
}

/// Gradients with the same layout as the model parameters.
struct Grads {
    layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Grads {
    fn zeros(model: &MLPModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
                .collect(),
        }
    }

    fn scale(&mut self, factor: f64) {
        for (gw, gb) in &mut self.layers {
            gw.iter_mut().for_each(|g| *g *= factor);
            gb.iter_mut().for_each(|g| *g *= factor);
        }
    }
}

/// Per-hidden-layer dropout masks; entries are 0 or 1/(1−p) (inverted
/// dropout, so expectations match the deterministic forward pass).
type DropoutMasks = Vec<Vec<f64>>;

fn sample_masks(config: &MLPConfig, rng: &mut ChaCha8Rng) -> DropoutMasks {
    let keep = 1.0 - config.dropout_rate;
    config
        .hidden_sizes
        .iter()
        .map(|&n| {
            (0..n)
                .map(|_| {
                    if rng.gen_range(0.0..1.0) < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

impl MLPModel {
    fn init(config: &MLPConfig, n_features: usize) -> Self {
        let mut rng = rng_from_seed(derive_seed(config.seed, 0x1217));
        let mut dims = vec![n_features];
        dims.extend_from_slice(&config.hidden_sizes);
        dims.push(config.output_dim());
        let layers = dims
            .windows(2)
            .map(|d| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let scale = (2.0 / fan_in.max(1) as f64).sqrt();
                let w = (0..fan_in * fan_out)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        scale * z
                    })
                    .collect();
                Layer {
                    w,
                    // The logσ² head keeps its zero bias: σ=1 at start.
                    b: vec![0.0; fan_out],
                    in_dim: fan_in,
                    out_dim: fan_out,
                }
            })
            .collect();
        Self {
            layers,
            config: config.clone(),
            loss_trace: Vec::new(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    /// Forward pass; `masks`, when given, applies dropout after each hidden
    /// activation. Returns per-layer post-activation values plus the raw
    /// output vector.
    fn forward(&self, row: &[f64], masks: Option<&DropoutMasks>) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n_hidden = self.layers.len() - 1;
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(n_hidden);
        let mut z = Vec::new();
        let mut input = row.to_vec();
        for (l, layer) in self.layers[..n_hidden].iter().enumerate() {
            layer.apply(&input, &mut z);
            let mut a: Vec<f64> = z.iter().map(|v| v.max(0.0)).collect();
            if let Some(masks) = masks {
                a.iter_mut().zip(&masks[l]).for_each(|(v, m)| *v *= m);
            }
            input = a.clone();
            activations.push(a);
        }
        let mut out = Vec::new();
        self.layers[n_hidden].apply(&input, &mut out);
        (activations, out)
    }

    /// Deterministic point prediction (dropout off). Gaussian head returns μ.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        Ok(self.forward(row, None).1[0])
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    /// (μ, σ) for the Gaussian head; σ = exp(logσ²/2) is strictly positive.
    pub fn predict_gaussian_row(&self, row: &[f64]) -> Result<(f64, f64)> {
        if self.config.output_head != OutputHead::Gaussian {
            return Err(Error::Model(
                "model was not trained with a gaussian head".to_string(),
            ));
        }
        self.check_row(row)?;
        let out = self.forward(row, None).1;
        Ok((out[0], (0.5 * out[1]).exp()))
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "network takes {} features, got {}",
                self.n_features(),
                row.len()
            )));
        }
        Ok(())
    }

    /// Per-sample loss and gradient accumulation (backprop).
    fn accumulate_grad(
        &self,
        row: &[f64],
        y: f64,
        masks: Option<&DropoutMasks>,
        grads: &mut Grads,
    ) -> f64 {
        let (activations, out) = self.forward(row, masks);

        // Output deltas dL/dz_out.
        let (loss, mut delta): (f64, Vec<f64>) = match self.config.output_head {
            OutputHead::Scalar => {
                let err = out[0] - y;
                (0.5 * err * err, vec![err])
            }
            OutputHead::Gaussian => {
                let (mu, s) = (out[0], out[1]);
                let inv_var = (-s).exp();
                let err = y - mu;
                let loss = 0.5 * (s + err * err * inv_var);
                (loss, vec![-err * inv_var, 0.5 * (1.0 - err * err * inv_var)])
            }
        };

        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input: &[f64] = if l == 0 { row } else { &activations[l - 1] };
            let (gw, gb) = &mut grads.layers[l];
            for o in 0..layer.out_dim {
                let d = delta[o];
                gb[o] += d;
                let grow = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, x) in grow.iter_mut().zip(input) {
                    *g += d * x;
                }
            }
            if l == 0 {
                break;
            }
            // Propagate through the dropout + ReLU of hidden layer l-1.
            let mut next = vec![0.0; layer.in_dim];
            for o in 0..layer.out_dim {
                let d = delta[o];
                let row_w = &layer.w[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (n, w) in next.iter_mut().zip(row_w) {
                    *n += d * w;
                }
            }
            let act = &activations[l - 1];
            for (j, n) in next.iter_mut().enumerate() {
                // Post-dropout activation is zero wherever the unit was
                // dropped or the ReLU was inactive; its local derivative is
                // the mask times the ReLU gate.
                let mask = masks.map_or(1.0, |m| m[l - 1][j]);
                *n *= if act[j] > 0.0 { mask } else { 0.0 };
            }
            delta = next;
        }
        loss
    }

    fn params_mut(&mut self) -> Vec<&mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.w.iter_mut().chain(l.b.iter_mut()))
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Writes the per-epoch loss trace as CSV (`epoch,loss`).
    pub fn export_loss_trace(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["epoch", "loss"])?;
        for (epoch, loss) in self.loss_trace.iter().enumerate() {
            w.write_record([format!("{}", epoch + 1), format!("{loss:.12e}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trains the network with Adam on minibatches. Deterministic per
/// `config.seed`; fails with a divergence error if the epoch loss goes
/// non-finite.
pub fn fit_mlp(x: &Matrix, y: &[f64], config: &MLPConfig) -> Result<MLPModel> {
    config.validate()?;
    if x.rows() == 0 || x.rows() != y.len() {
        return Err(Error::Shape(format!(
            "x has {} rows, y has {}",
            x.rows(),
            y.len()
        )));
    }
    let mut model = MLPModel::init(config, x.cols());
    let mut shuffle_rng = rng_from_seed(derive_seed(config.seed, 0x5471));
    let mut dropout_rng = rng_from_seed(derive_seed(config.seed, 0xd407));

    // Adam state, flat over all parameters.
    let n_params = model.n_params();
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut t = 0u64;

    let mut order: Vec<usize> = (0..x.rows()).collect();
    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let mut grads = Grads::zeros(&model);
            let mut batch_loss = 0.0;
            for &i in batch {
                let masks = (config.dropout_rate > 0.0)
                    .then(|| sample_masks(config, &mut dropout_rng));
                batch_loss += model.accumulate_grad(x.row(i), y[i], masks.as_ref(), &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            epoch_loss += batch_loss;

            t += 1;
            let bias1 = 1.0 - config.beta1.powi(t as i32);
            let bias2 = 1.0 - config.beta2.powi(t as i32);
            let flat_grads: Vec<f64> = grads
                .layers
                .iter()
                .flat_map(|(gw, gb)| gw.iter().chain(gb.iter()).copied())
                .collect();
            for (k, param) in model.params_mut().into_iter().enumerate() {
                let g = flat_grads[k];
                m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g;
                v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g * g;
                let m_hat = m[k] / bias1;
                let v_hat = v[k] / bias2;
                *param -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
        epoch_loss /= x.rows() as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                message: format!("mean loss {epoch_loss}"),
            });
        }
        model.loss_trace.push(epoch_loss);
    }
    Ok(model)
}

/// N stochastic forward passes with dropout active at inference.
/// Deterministic per seed; rejects p = 0, for which every pass would be
/// identical.
pub fn mc_dropout_samples(
    model: &MLPModel,
    row: &[f64],
    passes: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if model.config.dropout_rate == 0.0 {
        return Err(Error::Config(
            "MC dropout needs a model trained with dropout_rate > 0".to_string(),
        ));
    }
    model.check_row(row)?;
    let mut rng = rng_from_seed(seed);
    Ok((0..passes)
        .map(|_| {
            let masks = sample_masks(&model.config, &mut rng);
            model.forward(row, Some(&masks)).1[0]
        })
        .collect())
}

/// Compares analytic gradients against central finite differences
/// (step 1e-5) over every parameter, on the given batch with dropout
/// disabled. Returns the maximum relative error.
pub fn gradient_check(model: &MLPModel, x: &Matrix, y: &[f64]) -> Result<f64> {
    if x.rows() == 0 || x.rows() != y.len() {
        return Err(Error::Shape("empty or mismatched batch".to_string()));
    }
    let batch_loss = |m: &MLPModel| -> f64 {
        let mut grads = Grads::zeros(m);
        let total: f64 = (0..x.rows())
            .map(|i| m.accumulate_grad(x.row(i), y[i], None, &mut grads))
            .sum();
        total / x.rows() as f64
    };

    let mut grads = Grads::zeros(model);
    for i in 0..x.rows() {
        model.accumulate_grad(x.row(i), y[i], None, &mut grads);
    }
    grads.scale(1.0 / x.rows() as f64);
    let analytic: Vec<f64> = grads
        .layers
        .iter()
        .flat_map(|(gw, gb)| gw.iter().chain(gb.iter()).copied())
        .collect();

    const STEP: f64 = 1e-5;
    let mut max_rel = 0.0f64;
    let mut perturbed = model.clone();
    for k in 0..analytic.len() {
        let original = *perturbed.params_mut()[k];
        *perturbed.params_mut()[k] = original + STEP;
        let plus = batch_loss(&perturbed);
        *perturbed.params_mut()[k] = original - STEP;
        let minus = batch_loss(&perturbed);
        *perturbed.params_mut()[k] = original;
        let numeric = (plus - minus) / (2.0 * STEP);
        let denom = (analytic[k].abs() + numeric.abs()).max(1e-3);
        max_rel = max_rel.max((analytic[k] - numeric).abs() / denom);
    }
    Ok(max_rel)
}
