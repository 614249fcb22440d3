use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    bce_grad_logits, leaky_relu_backward, leaky_relu_matrix, sigmoid, BatchNormState, BnCache,
    DenseLayer, Mode,
};
use crate::error::{Error, Result};

/// Gradients for every parameter tensor, flattened, in the network's
/// tensor order.
pub type Grads = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorBlock {
    pub dense: DenseLayer,
    pub norm: BatchNormState,
}

/// Latent vector to feature row: hidden blocks of
/// Dense → LeakyReLU → BatchNorm, then Dense → sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorNet {
    pub blocks: Vec<GeneratorBlock>,
    pub output: DenseLayer,
    pub slope: f64,
}

/// Feature row to probability of being real: hidden blocks of
/// Dense → LeakyReLU, then Dense → sigmoid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorNet {
    pub blocks: Vec<DenseLayer>,
    pub output: DenseLayer,
    pub slope: f64,
}

pub(crate) struct GenCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    norms: Vec<BnCache>,
    last: Array2<f64>,
    pub out: Array2<f64>,
}

pub(crate) struct DiscCache {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    last: Array2<f64>,
    pub out: Vec<f64>,
}

fn check_width(x: &Array2<f64>, expected: usize) -> Result<()> {
    if x.ncols() != expected {
        return Err(Error::LayoutMismatch {
            expected,
            actual: x.ncols(),
        });
    }
    Ok(())
}

fn flat1(a: &ndarray::Array1<f64>) -> Vec<f64> {
    a.to_vec()
}

fn flat2(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

impl GeneratorNet {
    pub fn new(
        latent_dim: usize,
        hidden: &[usize],
        n_features: usize,
        slope: f64,
        bn_momentum: f64,
        bn_epsilon: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut blocks = Vec::with_capacity(hidden.len());
        let mut width = latent_dim;
        for &h in hidden {
            blocks.push(GeneratorBlock {
                dense: DenseLayer::new(width, h, rng),
                norm: BatchNormState::new(h, bn_momentum, bn_epsilon),
            });
            width = h;
        }
        GeneratorNet {
            blocks,
            output: DenseLayer::new(width, n_features, rng),
            slope,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.blocks.first().map_or(self.output.inputs(), |b| b.dense.inputs())
    }

    pub fn n_features(&self) -> usize {
        self.output.outputs()
    }

    /// Eval mode uses running statistics; train mode uses batch statistics
    /// without touching the running ones.
    pub fn forward(&self, z: &Array2<f64>, mode: Mode) -> Result<Array2<f64>> {
        check_width(z, self.latent_dim())?;
        match mode {
            Mode::Train => Ok(self.forward_train(z)?.out),
            Mode::Eval => {
                let mut x = z.clone();
                for b in &self.blocks {
                    let h = leaky_relu_matrix(&b.dense.forward(&x), self.slope);
                    x = b.norm.forward_eval(&h);
                }
                Ok(self.output.forward(&x).mapv(sigmoid))
            }
        }
    }

    pub(crate) fn forward_train(&self, z: &Array2<f64>) -> Result<GenCache> {
        check_width(z, self.latent_dim())?;
        let mut inputs = Vec::with_capacity(self.blocks.len());
        let mut pre = Vec::with_capacity(self.blocks.len());
        let mut norms = Vec::with_capacity(self.blocks.len());
        let mut x = z.clone();
        for b in &self.blocks {
            let a = b.dense.forward(&x);
            let h = leaky_relu_matrix(&a, self.slope);
            let (y, cache) = b.norm.forward_train(&h)?;
            inputs.push(x);
            pre.push(a);
            norms.push(cache);
            x = y;
        }
        let out = self.output.forward(&x).mapv(sigmoid);
        Ok(GenCache {
            inputs,
            pre,
            norms,
            last: x,
            out,
        })
    }

    pub(crate) fn commit_running_stats(&mut self, cache: &GenCache) {
        for (b, c) in self.blocks.iter_mut().zip(&cache.norms) {
            b.norm.update_running(&c.mean, &c.var);
        }
    }

    /// Backpropagates `d_out`, the loss gradient with respect to the sigmoid
    /// outputs.
    pub(crate) fn backward(&self, cache: &GenCache, d_out: &Array2<f64>) -> Grads {
        let d_logits = d_out * &cache.out.mapv(|s| s * (1.0 - s));
        let (dw, db, mut dx) = self.output.backward(&cache.last, &d_logits);
        let mut per_block = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate().rev() {
            let (dscale, dshift, dh) = b.norm.backward(&cache.norms[i], &dx);
            let da = leaky_relu_backward(&cache.pre[i], &dh, self.slope);
            let (bw, bb, next) = b.dense.backward(&cache.inputs[i], &da);
            per_block.push([flat2(&bw), flat1(&bb), flat1(&dscale), flat1(&dshift)]);
            dx = next;
        }
        let mut grads: Grads = per_block.into_iter().rev().flatten().collect();
        grads.push(flat2(&dw));
        grads.push(flat1(&db));
        grads
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for b in &mut self.blocks {
            out.push(b.dense.weights.as_slice_mut().expect("standard layout"));
            out.push(b.dense.bias.as_slice_mut().expect("contiguous"));
            out.push(b.norm.scale.as_slice_mut().expect("contiguous"));
            out.push(b.norm.shift.as_slice_mut().expect("contiguous"));
        }
        out.push(self.output.weights.as_slice_mut().expect("standard layout"));
        out.push(self.output.bias.as_slice_mut().expect("contiguous"));
        out
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.extend([b.dense.weights.len(), b.dense.bias.len(), b.norm.scale.len(), b.norm.shift.len()]);
        }
        out.extend([self.output.weights.len(), self.output.bias.len()]);
        out
    }
}

impl DiscriminatorNet {
    pub fn new(n_features: usize, hidden: &[usize], slope: f64, rng: &mut impl Rng) -> Self {
        let mut blocks = Vec::with_capacity(hidden.len());
        let mut width = n_features;
        for &h in hidden {
            blocks.push(DenseLayer::new(width, h, rng));
            width = h;
        }
        DiscriminatorNet {
            blocks,
            output: DenseLayer::new(width, 1, rng),
            slope,
        }
    }

    pub fn n_features(&self) -> usize {
        self.blocks.first().map_or(self.output.inputs(), |b| b.inputs())
    }

    /// Probability that each row is real.
    pub fn forward(&self, x: &Array2<f64>) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.out)
    }

    pub(crate) fn forward_cached(&self, x: &Array2<f64>) -> Result<DiscCache> {
        check_width(x, self.n_features())?;
        let mut inputs = Vec::with_capacity(self.blocks.len());
        let mut pre = Vec::with_capacity(self.blocks.len());
        let mut h = x.clone();
        for d in &self.blocks {
            let a = d.forward(&h);
            let next = leaky_relu_matrix(&a, self.slope);
            inputs.push(h);
            pre.push(a);
            h = next;
        }
        let out = self.output.forward(&h).column(0).mapv(sigmoid).to_vec();
        Ok(DiscCache {
            inputs,
            pre,
            last: h,
            out,
        })
    }

    /// Backpropagates a BCE loss against `targets`. Returns parameter
    /// gradients and the gradient with respect to the input rows.
    pub(crate) fn backward(&self, cache: &DiscCache, targets: &[f64]) -> (Grads, Array2<f64>) {
        let d_logit = bce_grad_logits(&cache.out, targets);
        let d_logit = Array2::from_shape_vec((d_logit.len(), 1), d_logit).expect("column");
        let (dw, db, mut dh) = self.output.backward(&cache.last, &d_logit);
        let mut per_block = Vec::with_capacity(self.blocks.len());
        for (i, d) in self.blocks.iter().enumerate().rev() {
            let da = leaky_relu_backward(&cache.pre[i], &dh, self.slope);
            let (bw, bb, next) = d.backward(&cache.inputs[i], &da);
            per_block.push([flat2(&bw), flat1(&bb)]);
            dh = next;
        }
        let mut grads: Grads = per_block.into_iter().rev().flatten().collect();
        grads.push(flat2(&dw));
        grads.push(flat1(&db));
        (grads, dh)
    }

    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for d in &mut self.blocks {
            out.push(d.weights.as_slice_mut().expect("standard layout"));
            out.push(d.bias.as_slice_mut().expect("contiguous"));
        }
        out.push(self.output.weights.as_slice_mut().expect("standard layout"));
        out.push(self.output.bias.as_slice_mut().expect("contiguous"));
        out
    }

    pub fn param_sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for d in &self.blocks {
            out.extend([d.weights.len(), d.bias.len()]);
        }
        out.extend([self.output.weights.len(), self.output.bias.len()]);
        out
    }
}

/// Discriminator loss on a real batch labelled 1 and a fake batch labelled 0,
/// pooled into one BCE mean, with parameter gradients.
pub fn discriminator_step_grads(
    d: &DiscriminatorNet,
    real: &Array2<f64>,
    fake: &Array2<f64>,
) -> Result<(f64, Grads)> {
    let both = ndarray::concatenate(Axis(0), &[real.view(), fake.view()])
        .map_err(|e| Error::invalid(e.to_string()))?;
    let mut targets = vec![1.0; real.nrows()];
    targets.extend(std::iter::repeat_n(0.0, fake.nrows()));
    let cache = d.forward_cached(&both)?;
    let loss = super::layers::bce_loss(&cache.out, &targets)?;
    let (grads, _) = d.backward(&cache, &targets);
    Ok((loss, grads))
}

/// Non-saturating generator loss `BCE(D(G(z)), 1)` with generator gradients.
/// Also returns the forward cache so running statistics can be committed.
pub(crate) fn generator_step_grads(
    g: &GeneratorNet,
    d: &DiscriminatorNet,
    z: &Array2<f64>,
) -> Result<(f64, Grads, GenCache)> {
    let gc = g.forward_train(z)?;
    let dc = d.forward_cached(&gc.out)?;
    let targets = vec![1.0; z.nrows()];
    let loss = super::layers::bce_loss(&dc.out, &targets)?;
    let (_, d_fake) = d.backward(&dc, &targets);
    let grads = g.backward(&gc, &d_fake);
    Ok((loss, grads, gc))
}

/// [`generator_step_grads`] without the forward cache.
pub fn generator_loss_grads(g: &GeneratorNet, d: &DiscriminatorNet, z: &Array2<f64>) -> Result<(f64, Grads)> {
    generator_step_grads(g, d, z).map(|(loss, grads, _)| (loss, grads))
}
