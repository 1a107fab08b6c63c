use csmri_nn::{masked_mse_loss, mse_loss, BnMode, Parameters, Real, SgdMomentum, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Network, Result, UnetError};

/// Paired single-image tensors `(1, 1, H, W)`. With `masks`, the loss only
/// counts positions where the mask is nonzero.
#[derive(Debug, Clone)]
pub struct TrainSet<T> {
    pub inputs: Vec<Tensor<T>>,
    pub labels: Vec<Tensor<T>>,
    pub masks: Option<Vec<Tensor<T>>>,
}

impl<T: Real> TrainSet<T> {
    pub fn new(inputs: Vec<Tensor<T>>, labels: Vec<Tensor<T>>) -> Result<Self> {
        let set = Self { inputs, labels, masks: None };
        set.validate()?;
        Ok(set)
    }

    pub fn with_masks(mut self, masks: Vec<Tensor<T>>) -> Result<Self> {
        self.masks = Some(masks);
        self.validate()?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn validate(&self) -> Result<()> {
        let n = self.inputs.len();
        if self.labels.len() != n || self.masks.as_ref().is_some_and(|m| m.len() != n) {
            return Err(UnetError::Data("inputs, labels and masks differ in count".into()));
        }
        let shape = self.inputs.first().map(|t| t.shape());
        let all = self.inputs.iter().chain(&self.labels).chain(self.masks.iter().flatten());
        for t in all {
            if Some(t.shape()) != shape || t.batch() != 1 {
                return Err(UnetError::Data(format!("sample shape {:?} vs {shape:?}", t.shape())));
            }
        }
        Ok(())
    }

    fn batch(&self, idx: &[usize]) -> Result<(Tensor<T>, Tensor<T>, Option<Tensor<T>>)> {
        let pick = |v: &[Tensor<T>]| Tensor::stack(&idx.iter().map(|&i| &v[i]).collect::<Vec<_>>());
        let masks = match &self.masks {
            Some(m) => Some(pick(m)?),
            None => None,
        };
        Ok((pick(&self.inputs)?, pick(&self.labels)?, masks))
    }

    fn batches(&self, batch_size: usize, shuffle_seed: u64) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
    }
}

fn loss<T: Real>(pred: &Tensor<T>, label: &Tensor<T>, mask: Option<&Tensor<T>>) -> Result<(f64, Tensor<T>)> {
    Ok(match mask {
        Some(m) => masked_mse_loss(pred, label, m)?,
        None => mse_loss(pred, label)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub lr_start: f64,
    pub lr_end: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 50, batch_size: 3, momentum: 0.9, lr_start: 1e-2, lr_end: 1e-3, seed: 0 }
    }
}

impl TrainConfig {
    /// Shuffle seed of one epoch.
    pub fn epoch_seed(&self, epoch: usize) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(epoch as u64)
    }

    pub fn lr(&self, epoch: usize) -> f64 {
        lr_schedule(epoch, self.epochs, self.lr_start, self.lr_end)
    }
}

/// Learning rate decaying log-linearly from `start` at epoch 0 to `end` at
/// the last epoch. A zero endpoint has no logarithm, so that schedule is
/// interpolated linearly instead (`0 -> 0` stays frozen).
pub fn lr_schedule(epoch: usize, epochs: usize, start: f64, end: f64) -> f64 {
    if epochs <= 1 {
        return start;
    }
    let t = epoch.min(epochs - 1) as f64 / (epochs - 1) as f64;
    if start <= 0.0 || end <= 0.0 {
        return start + t * (end - start);
    }
    10f64.powf(start.log10() + t * (end.log10() - start.log10()))
}

/// One pass over shuffled mini-batches with batch statistics in BN, an SGD
/// momentum step after each batch. Returns the sample-weighted mean of the
/// batch losses, each measured before its update.
pub fn train_epoch<T: Real>(
    net: &mut Network<T>,
    data: &TrainSet<T>,
    opt: &mut SgdMomentum<T>,
    lr: f64,
    batch_size: usize,
    shuffle_seed: u64,
) -> Result<f64> {
    if data.is_empty() {
        return Err(UnetError::EmptyDataset);
    }
    let mut total = 0.0;
    for idx in data.batches(batch_size, shuffle_seed) {
        let (x, y, m) = data.batch(&idx)?;
        net.zero_grads();
        let pred = net.forward(&x, BnMode::Train)?;
        let (l, g) = loss(&pred, &y, m.as_ref())?;
        net.backward(&g)?;
        opt.step(net, lr)?;
        total += l * idx.len() as f64;
    }
    Ok(total / data.len() as f64)
}

/// The loss `train_epoch` would report with `lr = 0`, without touching the
/// network.
pub fn evaluate_batches<T: Real>(
    net: &Network<T>,
    data: &TrainSet<T>,
    batch_size: usize,
    shuffle_seed: u64,
) -> Result<f64> {
    if data.is_empty() {
        return Err(UnetError::EmptyDataset);
    }
    let mut total = 0.0;
    for idx in data.batches(batch_size, shuffle_seed) {
        let (x, y, m) = data.batch(&idx)?;
        let pred = net.infer(&x, BnMode::Train)?;
        total += loss(&pred, &y, m.as_ref())?.0 * idx.len() as f64;
    }
    Ok(total / data.len() as f64)
}

/// Inference-mode predictions, `batch_size` images at a time.
pub fn predict<T: Real>(net: &Network<T>, inputs: &[Tensor<T>], batch_size: usize) -> Result<Vec<Tensor<T>>> {
    let mut out = Vec::with_capacity(inputs.len());
    for chunk in inputs.chunks(batch_size.max(1)) {
        let x = Tensor::stack(&chunk.iter().collect::<Vec<_>>())?;
        out.extend(net.infer(&x, BnMode::Infer)?.unstack());
    }
    Ok(out)
}
