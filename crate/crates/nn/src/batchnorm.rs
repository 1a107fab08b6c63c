use crate::tensor::debug_check_finite;
use crate::{NnError, Real, Result, Tensor};

pub const BN_EPSILON: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BnMode {
    /// Normalise with batch statistics and update the running estimates.
    Train,
    /// Normalise with the running estimates.
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnParams<T> {
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub epsilon: f64,
    pub momentum: f64,
}

impl<T: Real> BnParams<T> {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: vec![T::one(); channels],
            beta: vec![T::zero(); channels],
            running_mean: vec![T::zero(); channels],
            running_var: vec![T::one(); channels],
            epsilon: BN_EPSILON,
            momentum: BN_MOMENTUM,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }
}

/// What the backward pass needs from a train-mode forward.
#[derive(Debug, Clone)]
pub struct BnCache<T> {
    x_hat: Tensor<T>,
    inv_std: Vec<f64>,
    mode: BnMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BnGrads<T> {
    pub input: Tensor<T>,
    pub gamma: Vec<T>,
    pub beta: Vec<T>,
}

pub fn batch_norm<T: Real>(
    x: &Tensor<T>,
    p: &mut BnParams<T>,
    mode: BnMode,
) -> Result<(Tensor<T>, BnCache<T>)> {
    let [n, c, h, w] = x.shape();
    if c != p.channels() {
        return Err(NnError::Channels { expected: p.channels(), got: c });
    }
    let hw = h * w;
    let count = n * hw;
    if mode == BnMode::Train && count < 2 {
        return Err(NnError::BatchTooSmall(count));
    }

    let mut x_hat = Tensor::zeros(x.shape());
    let mut out = Tensor::zeros(x.shape());
    let mut inv_std = vec![0.0; c];
    for ch in 0..c {
        let (mean, var) = match mode {
            BnMode::Train => {
                let mut sum = 0.0;
                for b in 0..n {
                    sum += x.plane(b, ch).iter().map(|v| v.f64()).sum::<f64>();
                }
                let mean = sum / count as f64;
                let mut ss = 0.0;
                for b in 0..n {
                    ss += x.plane(b, ch).iter().map(|v| (v.f64() - mean).powi(2)).sum::<f64>();
                }
                let var = ss / count as f64;
                let unbiased = ss / (count - 1) as f64;
                let m = p.momentum;
                p.running_mean[ch] = T::of((1.0 - m) * p.running_mean[ch].f64() + m * mean);
                p.running_var[ch] = T::of((1.0 - m) * p.running_var[ch].f64() + m * unbiased);
                (mean, var)
            }
            BnMode::Infer => (p.running_mean[ch].f64(), p.running_var[ch].f64()),
        };
        let is = 1.0 / (var + p.epsilon).sqrt();
        inv_std[ch] = is;
        let (g, bt) = (p.gamma[ch].f64(), p.beta[ch].f64());
        for b in 0..n {
            let base = x.offset(b, ch, 0, 0);
            for i in base..base + hw {
                let xh = (x.data()[i].f64() - mean) * is;
                x_hat.data_mut()[i] = T::of(xh);
                out.data_mut()[i] = T::of(g * xh + bt);
            }
        }
    }
    debug_check_finite(&out, "batch_norm");
    Ok((out, BnCache { x_hat, inv_std, mode }))
}

/// Inference-mode normalisation through a shared reference.
pub fn batch_norm_infer<T: Real>(x: &Tensor<T>, p: &BnParams<T>) -> Result<Tensor<T>> {
    let c = x.channels();
    if c != p.channels() {
        return Err(NnError::Channels { expected: p.channels(), got: c });
    }
    let hw = x.height() * x.width();
    let mut out = Tensor::zeros(x.shape());
    for ch in 0..c {
        let mean = p.running_mean[ch].f64();
        let is = 1.0 / (p.running_var[ch].f64() + p.epsilon).sqrt();
        let (g, bt) = (p.gamma[ch].f64(), p.beta[ch].f64());
        for b in 0..x.batch() {
            let base = x.offset(b, ch, 0, 0);
            for i in base..base + hw {
                out.data_mut()[i] = T::of(g * (x.data()[i].f64() - mean) * is + bt);
            }
        }
    }
    debug_check_finite(&out, "batch_norm_infer");
    Ok(out)
}

pub fn batch_norm_backward<T: Real>(
    cache: &BnCache<T>,
    p: &BnParams<T>,
    grad_out: &Tensor<T>,
) -> Result<BnGrads<T>> {
    cache.x_hat.same_shape(grad_out, "batch_norm_backward")?;
    let [n, c, h, w] = grad_out.shape();
    let hw = h * w;
    let m = (n * hw) as f64;
    let mut dx = Tensor::zeros(grad_out.shape());
    let mut dgamma = vec![T::zero(); c];
    let mut dbeta = vec![T::zero(); c];
    for ch in 0..c {
        let mut sum_dy = 0.0;
        let mut sum_dy_xh = 0.0;
        for b in 0..n {
            let base = grad_out.offset(b, ch, 0, 0);
            for i in base..base + hw {
                let dy = grad_out.data()[i].f64();
                sum_dy += dy;
                sum_dy_xh += dy * cache.x_hat.data()[i].f64();
            }
        }
        dgamma[ch] = T::of(sum_dy_xh);
        dbeta[ch] = T::of(sum_dy);
        let g = p.gamma[ch].f64();
        let is = cache.inv_std[ch];
        for b in 0..n {
            let base = grad_out.offset(b, ch, 0, 0);
            for i in base..base + hw {
                let dy = grad_out.data()[i].f64();
                let v = match cache.mode {
                    BnMode::Train => {
                        let xh = cache.x_hat.data()[i].f64();
                        g * is * (dy - sum_dy / m - xh * sum_dy_xh / m)
                    }
                    BnMode::Infer => g * is * dy,
                };
                dx.data_mut()[i] = T::of(v);
            }
        }
    }
    debug_check_finite(&dx, "batch_norm_backward");
    Ok(BnGrads { input: dx, gamma: dgamma, beta: dbeta })
}
