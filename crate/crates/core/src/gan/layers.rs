use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp applied to predictions before taking logs.
pub const BCE_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

/// Fully connected layer `y = x Wᵀ + b` with `W` shaped `(out, in)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    /// Uniform `±1/√in` initialisation for weights and bias.
    pub fn new(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        let weights = Array2::from_shape_fn((outputs, inputs), |_| rng.random_range(-bound..bound));
        let bias = Array1::from_shape_fn(outputs, |_| rng.random_range(-bound..bound));
        DenseLayer { weights, bias }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }

    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weights.t()) + &self.bias
    }

    /// Returns `(dW, db, dx)`.
    pub fn backward(&self, x: &Array2<f64>, dy: &Array2<f64>) -> (Array2<f64>, Array1<f64>, Array2<f64>) {
        (dy.t().dot(x), dy.sum_axis(Axis(0)), dy.dot(&self.weights))
    }
}

/// Elementwise `max(v, slope·v)`.
pub fn leaky_relu(v: &[f64], slope: f64) -> Vec<f64> {
    v.iter().map(|&x| x.max(slope * x)).collect()
}

pub(crate) fn leaky_relu_matrix(a: &Array2<f64>, slope: f64) -> Array2<f64> {
    a.mapv(|x| x.max(slope * x))
}

pub(crate) fn leaky_relu_backward(a: &Array2<f64>, d: &Array2<f64>, slope: f64) -> Array2<f64> {
    let mut out = d.clone();
    out.zip_mut_with(a, |g, &x| {
        if x <= 0.0 {
            *g *= slope
        }
    });
    out
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean binary cross-entropy with predictions clamped into
/// `[1e-7, 1 − 1e-7]`.
pub fn bce_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::invalid(format!(
            "bce: {} predictions but {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("bce: empty input"));
    }
    let n = predictions.len() as f64;
    let total: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(&p, &y)| {
            let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            y * p.ln() + (1.0 - y) * (1.0 - p).ln()
        })
        .sum();
    Ok(-total / n)
}

/// Gradient of [`bce_loss`] with respect to the pre-sigmoid logits. Zero
/// where the clamp is active.
pub(crate) fn bce_grad_logits(predictions: &[f64], targets: &[f64]) -> Vec<f64> {
    let n = predictions.len() as f64;
    predictions
        .iter()
        .zip(targets)
        .map(|(&p, &y)| {
            if p > BCE_CLAMP && p < 1.0 - BCE_CLAMP {
                (p - y) / n
            } else {
                0.0
            }
        })
        .collect()
}

/// Batch normalisation parameters and running statistics.
///
/// Train mode normalises with the batch mean and biased batch variance, then
/// blends them into the running statistics as
/// `running = (1 − momentum)·running + momentum·batch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchNormState {
    pub scale: Array1<f64>,
    pub shift: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub momentum: f64,
    pub epsilon: f64,
}

pub(crate) struct BnCache {
    pub xhat: Array2<f64>,
    pub inv_std: Array1<f64>,
    pub mean: Array1<f64>,
    pub var: Array1<f64>,
}

impl BatchNormState {
    pub fn new(width: usize, momentum: f64, epsilon: f64) -> Self {
        BatchNormState {
            scale: Array1::ones(width),
            shift: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
            momentum,
            epsilon,
        }
    }

    pub(crate) fn forward_train(&self, x: &Array2<f64>) -> Result<(Array2<f64>, BnCache)> {
        if x.nrows() < 2 {
            return Err(Error::invalid("batch norm in train mode needs at least 2 rows"));
        }
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        let centered = x - &mean;
        let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).expect("nonempty");
        let inv_std = var.mapv(|v| 1.0 / (v + self.epsilon).sqrt());
        let xhat = centered * &inv_std;
        let y = &xhat * &self.scale + &self.shift;
        Ok((
            y,
            BnCache {
                xhat,
                inv_std,
                mean,
                var,
            },
        ))
    }

    pub(crate) fn forward_eval(&self, x: &Array2<f64>) -> Array2<f64> {
        let inv_std = self.running_var.mapv(|v| 1.0 / (v + self.epsilon).sqrt());
        (x - &self.running_mean) * &inv_std * &self.scale + &self.shift
    }

    pub(crate) fn update_running(&mut self, mean: &Array1<f64>, var: &Array1<f64>) {
        let m = self.momentum;
        self.running_mean = &self.running_mean * (1.0 - m) + mean * m;
        self.running_var = &self.running_var * (1.0 - m) + var * m;
    }

    /// Returns `(dscale, dshift, dx)`.
    pub(crate) fn backward(&self, cache: &BnCache, dy: &Array2<f64>) -> (Array1<f64>, Array1<f64>, Array2<f64>) {
        let n = dy.nrows() as f64;
        let dshift = dy.sum_axis(Axis(0));
        let dscale = (dy * &cache.xhat).sum_axis(Axis(0));
        let dxhat = dy * &self.scale;
        let sum_dxhat = dxhat.sum_axis(Axis(0));
        let sum_dxhat_xhat = (&dxhat * &cache.xhat).sum_axis(Axis(0));
        let dx = (dxhat * n - &sum_dxhat - &cache.xhat * &sum_dxhat_xhat) * &cache.inv_std / n;
        (dscale, dshift, dx)
    }
}

/// Normalises `batch`. In train mode the running statistics are updated.
pub fn batch_norm_forward(batch: &Array2<f64>, state: &mut BatchNormState, mode: Mode) -> Result<Array2<f64>> {
    match mode {
        Mode::Train => {
            let (y, cache) = state.forward_train(batch)?;
            state.update_running(&cache.mean, &cache.var);
            Ok(y)
        }
        Mode::Eval => Ok(state.forward_eval(batch)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn leaky_relu_values() {
        assert_eq!(leaky_relu(&[2.0, -1.0, 0.0], 0.2), vec![2.0, -0.2, 0.0]);
    }

    #[test]
    fn bce_half_half_is_ln2() {
        let l = bce_loss(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn bce_near_perfect_and_symmetric() {
        assert!(bce_loss(&[1.0 - 1e-7], &[1.0]).unwrap() < 1e-6);
        let p = [0.2, 0.9, 0.4];
        let y = [1.0, 0.0, 1.0];
        let flipped_p: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
        let flipped_y: Vec<f64> = y.iter().map(|v| 1.0 - v).collect();
        let a = bce_loss(&p, &y).unwrap();
        let b = bce_loss(&flipped_p, &flipped_y).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn bce_length_mismatch() {
        assert!(bce_loss(&[0.5], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn train_mode_standardises_columns() {
        let x = array![[1.0, 10.0], [2.0, 30.0], [4.0, 20.0], [7.0, 0.0]];
        let mut bn = BatchNormState::new(2, 0.9, 1e-5);
        let y = batch_norm_forward(&x, &mut bn, Mode::Train).unwrap();
        for col in y.columns() {
            let mean = col.mean().unwrap();
            let var = col.mapv(|v| (v - mean).powi(2)).mean().unwrap();
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-4, "{var}");
        }
    }

    #[test]
    fn eval_at_running_mean_is_zero() {
        let mut bn = BatchNormState::new(3, 0.9, 1e-5);
        bn.running_mean = array![0.3, -1.0, 2.0];
        bn.running_var = array![2.0, 0.5, 1.0];
        let x = bn.running_mean.clone().insert_axis(Axis(0));
        let y = batch_norm_forward(&x, &mut bn, Mode::Eval).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn running_stats_follow_update_rule() {
        let x = array![[1.0], [3.0]];
        let mut bn = BatchNormState::new(1, 0.9, 1e-5);
        batch_norm_forward(&x, &mut bn, Mode::Train).unwrap();
        // batch mean 2, biased variance 1; init mean 0, var 1.
        assert!((bn.running_mean[0] - (0.1 * 0.0 + 0.9 * 2.0)).abs() < 1e-15);
        assert!((bn.running_var[0] - (0.1 * 1.0 + 0.9 * 1.0)).abs() < 1e-15);
    }

    #[test]
    fn single_row_train_batch_rejected() {
        let mut bn = BatchNormState::new(2, 0.9, 1e-5);
        assert!(batch_norm_forward(&array![[1.0, 2.0]], &mut bn, Mode::Train).is_err());
    }
}
