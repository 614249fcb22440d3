//! Per-class generative adversarial networks for minority oversampling.
//!
//! Networks work on features scaled into `[0, 1]`; [`augment`] takes care of
//! scaling encoded matrices in and out.

mod augment;
mod layers;
mod net;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{FeatureMatrix, FeatureRole};
use crate::seed;

pub use augment::{augment, default_targets, Augmentation, ClassAugmentation, ColumnScaler};
pub use layers::{batch_norm_forward, bce_loss, leaky_relu, sigmoid, BatchNormState, DenseLayer, Mode};
pub use net::{
    discriminator_step_grads, generator_loss_grads, DiscriminatorNet, GeneratorBlock, GeneratorNet, Grads,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub leaky_slope: f64,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
    pub seed: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            latent_dim: 64,
            generator_hidden: vec![128, 256, 256, 128],
            discriminator_hidden: vec![256, 128, 64],
            epochs: 5000,
            batch_size: 64,
            learning_rate: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            leaky_slope: 0.2,
            bn_momentum: 0.9,
            bn_epsilon: 1e-5,
            seed: 0,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(format!("gan config: {m}")));
        if self.latent_dim == 0 {
            return bad("latent_dim must be positive");
        }
        if self.generator_hidden.len() != 4 || self.generator_hidden.contains(&0) {
            return bad("generator_hidden needs 4 positive widths");
        }
        if self.discriminator_hidden.len() != 3 || self.discriminator_hidden.contains(&0) {
            return bad("discriminator_hidden needs 3 positive widths");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if self.batch_size < 2 {
            return bad("batch_size must be at least 2");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if [self.adam_epsilon, self.bn_epsilon].iter().any(|e| e.is_nan() || *e <= 0.0) {
            return bad("epsilons must be positive");
        }
        if !(0.0..=1.0).contains(&self.bn_momentum) {
            return bad("bn_momentum must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Adam with bias-corrected moments.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(sizes: &[usize], lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1,
            beta2,
            eps,
            t: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &Grads) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
}

/// Mean discriminator and generator loss per epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochLoss>,
}

impl TrainTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,d_loss,g_loss\n");
        for e in &self.epochs {
            s.push_str(&format!("{},{},{}\n", e.epoch, e.d_loss, e.g_loss));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub format: String,
    pub version: u32,
    pub config: GanConfig,
    pub generator: GeneratorNet,
    pub discriminator: DiscriminatorNet,
    pub trace: TrainTrace,
}

impl GanModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: GanModel = serde_json::from_str(text)?;
        if m.format != "nidsgan.gan" || m.version != 1 {
            return Err(Error::invalid(format!("unsupported gan format {} v{}", m.format, m.version)));
        }
        Ok(m)
    }
}

fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.sample(StandardNormal))
}

/// Trains on rows already scaled into `[0, 1]`.
///
/// Each epoch shuffles the rows and walks full batches only. Every batch
/// takes one discriminator step and then one generator step.
pub fn train_gan_scaled(real: &Array2<f64>, cfg: &GanConfig) -> Result<GanModel> {
    cfg.validate()?;
    if real.nrows() < cfg.batch_size {
        return Err(Error::invalid(format!(
            "gan needs at least batch_size={} rows, got {}",
            cfg.batch_size,
            real.nrows()
        )));
    }
    if real.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::invalid("gan training rows must lie in [0, 1]"));
    }
    let f = real.ncols();
    let mut g = GeneratorNet::new(
        cfg.latent_dim,
        &cfg.generator_hidden,
        f,
        cfg.leaky_slope,
        cfg.bn_momentum,
        cfg.bn_epsilon,
        &mut seed::rng(seed::derive(cfg.seed, 0)),
    );
    let mut d = DiscriminatorNet::new(
        f,
        &cfg.discriminator_hidden,
        cfg.leaky_slope,
        &mut seed::rng(seed::derive(cfg.seed, 1)),
    );
    let mut rng = seed::rng(seed::derive(cfg.seed, 2));
    let mut opt_g = Adam::new(&g.param_sizes(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon);
    let mut opt_d = Adam::new(&d.param_sizes(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon);

    let mut order: Vec<usize> = (0..real.nrows()).collect();
    let mut trace = TrainTrace::default();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut d_sum, mut g_sum, mut steps) = (0.0, 0.0, 0usize);
        for chunk in order.chunks_exact(cfg.batch_size) {
            let batch = real.select(ndarray::Axis(0), chunk);

            let z = normal_matrix(&mut rng, cfg.batch_size, cfg.latent_dim);
            let fake = g.forward(&z, Mode::Train)?;
            let (d_loss, d_grads) = net::discriminator_step_grads(&d, &batch, &fake)?;
            opt_d.step(d.params_mut(), &d_grads);

            let z = normal_matrix(&mut rng, cfg.batch_size, cfg.latent_dim);
            let (g_loss, g_grads, cache) = net::generator_step_grads(&g, &d, &z)?;
            opt_g.step(g.params_mut(), &g_grads);
            g.commit_running_stats(&cache);

            d_sum += d_loss;
            g_sum += g_loss;
            steps += 1;
        }
        trace.epochs.push(EpochLoss {
            epoch,
            d_loss: d_sum / steps as f64,
            g_loss: g_sum / steps as f64,
        });
    }
    Ok(GanModel {
        format: "nidsgan.gan".into(),
        version: 1,
        config: cfg.clone(),
        generator: g,
        discriminator: d,
        trace,
    })
}

/// Trains on the rows of a single class. Values must already lie in
/// `[0, 1]`.
pub fn train_gan(class_rows: &FeatureMatrix, cfg: &GanConfig) -> Result<GanModel> {
    if let Some(&first) = class_rows.class_ids.first() {
        if class_rows.class_ids.iter().any(|&c| c != first) {
            return Err(Error::invalid("gan training rows must belong to one class"));
        }
    }
    train_gan_scaled(&class_rows.values, cfg)
}

/// Snaps generator output onto valid encodings: each one-hot block keeps a
/// single 1 at its argmax (lowest index on ties) and ordinal codes round to
/// the nearest of their `levels` grid points in `[0, 1]`.
pub fn postprocess(rows: &mut Array2<f64>, roles: &[FeatureRole]) -> Result<()> {
    if roles.len() != rows.ncols() {
        return Err(Error::LayoutMismatch {
            expected: roles.len(),
            actual: rows.ncols(),
        });
    }
    for mut row in rows.rows_mut() {
        let mut j = 0;
        while j < roles.len() {
            match roles[j] {
                FeatureRole::OneHot { start, width } if start == j && width > 0 => {
                    let mut best = j;
                    for k in j..j + width {
                        if row[k] > row[best] {
                            best = k;
                        }
                    }
                    for k in j..j + width {
                        row[k] = if k == best { 1.0 } else { 0.0 };
                    }
                    j += width;
                    continue;
                }
                FeatureRole::Ordinal { levels } => {
                    row[j] = if levels <= 1 {
                        0.0
                    } else {
                        let top = (levels - 1) as f64;
                        (row[j].clamp(0.0, 1.0) * top).round() / top
                    };
                }
                _ => {}
            }
            j += 1;
        }
    }
    Ok(())
}

/// Draws `n` rows from the generator in eval mode and post-processes them.
pub fn synthesize(model: &GanModel, n: usize, seed_value: u64, roles: &[FeatureRole]) -> Result<Array2<f64>> {
    let g = &model.generator;
    if roles.len() != g.n_features() {
        return Err(Error::LayoutMismatch {
            expected: g.n_features(),
            actual: roles.len(),
        });
    }
    let mut rng = seed::rng(seed_value);
    let z = normal_matrix(&mut rng, n, g.latent_dim());
    let mut out = g.forward(&z, Mode::Eval)?;
    postprocess(&mut out, roles)?;
    Ok(out)
}
