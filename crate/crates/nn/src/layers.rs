//! Stateful layers: parameters, gradient accumulators and forward caches.

use crate::persist::{find, NamedTensor};
use crate::{
    batch_norm, batch_norm_backward, batch_norm_infer, conv2d, conv2d_backward, relu,
    relu_backward, xavier_init, BnCache, BnMode, BnParams, ConvParams, NnError, ParamSlot, Real,
    Result, Tensor,
};

fn missing_cache(layer: &str) -> NnError {
    NnError::Shape(format!("{layer}: backward called without a training forward"))
}

#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub params: ConvParams<T>,
    pub grad_weights: Vec<T>,
    pub grad_bias: Vec<T>,
    input: Option<Tensor<T>>,
}

impl<T: Real> Conv2d<T> {
    pub fn new(params: ConvParams<T>) -> Self {
        let grad_weights = vec![T::zero(); params.weights.len()];
        let grad_bias = vec![T::zero(); params.bias.len()];
        Self { params, grad_weights, grad_bias, input: None }
    }

    pub fn xavier(k: usize, n_in: usize, n_out: usize, seed: u64) -> Result<Self> {
        Ok(Self::new(xavier_init(k, k, n_in, n_out, seed)?))
    }

    /// Forward pass that keeps the input for `backward`.
    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let y = conv2d(x, &self.params)?;
        self.input = Some(x.clone());
        Ok(y)
    }

    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        conv2d(x, &self.params)
    }

    /// Accumulate parameter gradients and return the input gradient.
    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.input.take().ok_or_else(|| missing_cache("conv"))?;
        let g = conv2d_backward(&x, &self.params, grad_out)?;
        for (a, b) in self.grad_weights.iter_mut().zip(&g.weights) {
            *a += *b;
        }
        for (a, b) in self.grad_bias.iter_mut().zip(&g.bias) {
            *a += *b;
        }
        Ok(g.input)
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamSlot<'_, T>)) {
        f(ParamSlot {
            name: &format!("{prefix}.weight"),
            value: &mut self.params.weights,
            grad: &mut self.grad_weights,
        });
        f(ParamSlot {
            name: &format!("{prefix}.bias"),
            value: &mut self.params.bias,
            grad: &mut self.grad_bias,
        });
    }

    pub fn export_state(&self, prefix: &str, out: &mut Vec<NamedTensor>) {
        let p = &self.params;
        out.push(NamedTensor::from_slice(format!("{prefix}.weight"), p.weight_dims().to_vec(), &p.weights));
        out.push(NamedTensor::from_slice(format!("{prefix}.bias"), vec![p.n_out], &p.bias));
    }

    pub fn import_state(&mut self, prefix: &str, tensors: &[NamedTensor]) -> Result<()> {
        find(tensors, &format!("{prefix}.weight"))?.copy_into(&mut self.params.weights)?;
        find(tensors, &format!("{prefix}.bias"))?.copy_into(&mut self.params.bias)
    }

    pub fn clear_cache(&mut self) {
        self.input = None;
    }
}

/// The `ReLU(BN(Conv(x)))` building block with a 3x3 (or 1x1) kernel.
#[derive(Debug, Clone)]
pub struct ConvBnRelu<T> {
    pub conv: Conv2d<T>,
    pub bn: BnParams<T>,
    pub grad_gamma: Vec<T>,
    pub grad_beta: Vec<T>,
    bn_cache: Option<BnCache<T>>,
    pre_activation: Option<Tensor<T>>,
}

impl<T: Real> ConvBnRelu<T> {
    pub fn new(conv: Conv2d<T>) -> Self {
        let c = conv.params.n_out;
        Self {
            conv,
            bn: BnParams::new(c),
            grad_gamma: vec![T::zero(); c],
            grad_beta: vec![T::zero(); c],
            bn_cache: None,
            pre_activation: None,
        }
    }

    pub fn xavier(k: usize, n_in: usize, n_out: usize, seed: u64) -> Result<Self> {
        Ok(Self::new(Conv2d::xavier(k, n_in, n_out, seed)?))
    }

    pub fn in_channels(&self) -> usize {
        self.conv.params.n_in
    }

    pub fn out_channels(&self) -> usize {
        self.conv.params.n_out
    }

    /// Training forward: batch statistics, caches kept for `backward`.
    pub fn forward(&mut self, x: &Tensor<T>, mode: BnMode) -> Result<Tensor<T>> {
        let z = self.conv.forward(x)?;
        let (y, cache) = batch_norm(&z, &mut self.bn, mode)?;
        let out = relu(&y);
        self.bn_cache = Some(cache);
        self.pre_activation = Some(y);
        Ok(out)
    }

    /// Forward without caching and without touching any state. `Infer` uses
    /// the running statistics, `Train` normalises with the batch statistics
    /// (running estimates are left alone).
    pub fn infer(&self, x: &Tensor<T>, stats: BnMode) -> Result<Tensor<T>> {
        let z = self.conv.infer(x)?;
        let y = match stats {
            BnMode::Infer => batch_norm_infer(&z, &self.bn)?,
            BnMode::Train => batch_norm(&z, &mut self.bn.clone(), BnMode::Train)?.0,
        };
        Ok(relu(&y))
    }

    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let y = self.pre_activation.take().ok_or_else(|| missing_cache("block"))?;
        let cache = self.bn_cache.take().ok_or_else(|| missing_cache("block"))?;
        let gy = relu_backward(&y, grad_out)?;
        let g = batch_norm_backward(&cache, &self.bn, &gy)?;
        for (a, b) in self.grad_gamma.iter_mut().zip(&g.gamma) {
            *a += *b;
        }
        for (a, b) in self.grad_beta.iter_mut().zip(&g.beta) {
            *a += *b;
        }
        self.conv.backward(&g.input)
    }

    pub fn visit_params(&mut self, prefix: &str, f: &mut dyn FnMut(ParamSlot<'_, T>)) {
        self.conv.visit_params(&format!("{prefix}.conv"), f);
        f(ParamSlot {
            name: &format!("{prefix}.bn.gamma"),
            value: &mut self.bn.gamma,
            grad: &mut self.grad_gamma,
        });
        f(ParamSlot {
            name: &format!("{prefix}.bn.beta"),
            value: &mut self.bn.beta,
            grad: &mut self.grad_beta,
        });
    }

    pub fn export_state(&self, prefix: &str, out: &mut Vec<NamedTensor>) {
        self.conv.export_state(&format!("{prefix}.conv"), out);
        let c = vec![self.bn.channels()];
        out.push(NamedTensor::from_slice(format!("{prefix}.bn.gamma"), c.clone(), &self.bn.gamma));
        out.push(NamedTensor::from_slice(format!("{prefix}.bn.beta"), c.clone(), &self.bn.beta));
        out.push(NamedTensor::from_slice(format!("{prefix}.bn.running_mean"), c.clone(), &self.bn.running_mean));
        out.push(NamedTensor::from_slice(format!("{prefix}.bn.running_var"), c, &self.bn.running_var));
    }

    pub fn import_state(&mut self, prefix: &str, tensors: &[NamedTensor]) -> Result<()> {
        self.conv.import_state(&format!("{prefix}.conv"), tensors)?;
        find(tensors, &format!("{prefix}.bn.gamma"))?.copy_into(&mut self.bn.gamma)?;
        find(tensors, &format!("{prefix}.bn.beta"))?.copy_into(&mut self.bn.beta)?;
        find(tensors, &format!("{prefix}.bn.running_mean"))?.copy_into(&mut self.bn.running_mean)?;
        find(tensors, &format!("{prefix}.bn.running_var"))?.copy_into(&mut self.bn.running_var)
    }

    pub fn clear_cache(&mut self) {
        self.conv.clear_cache();
        self.bn_cache = None;
        self.pre_activation = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{check_gradient, random_tensor, GRAD_TOL};

    #[test]
    fn block_output_is_nonnegative() {
        let mut b = ConvBnRelu::<f64>::xavier(3, 2, 4, 1).unwrap();
        let y = b.forward(&random_tensor([2, 2, 6, 6], 3), BnMode::Train).unwrap();
        assert!(y.data().iter().all(|&v| v >= 0.0));
        assert_eq!(y.shape(), [2, 4, 6, 6]);
    }

    #[test]
    fn stateless_batch_stats_match_training_forward() {
        let x = random_tensor([2, 2, 4, 4], 4);
        let mut b = ConvBnRelu::<f64>::xavier(3, 2, 3, 8).unwrap();
        let frozen = b.infer(&x, BnMode::Train).unwrap();
        let before = b.bn.clone();
        assert_eq!(b.forward(&x, BnMode::Train).unwrap(), frozen);
        assert_ne!(b.bn, before);
    }

    #[test]
    fn backward_without_forward_fails() {
        let mut b = ConvBnRelu::<f64>::xavier(3, 1, 1, 1).unwrap();
        assert!(b.backward(&Tensor::zeros([1, 1, 4, 4])).is_err());
    }

    #[test]
    fn block_gradient_check() {
        for seed in 0..3 {
            let x = random_tensor([2, 2, 4, 4], seed);
            let proj = random_tensor([2, 3, 4, 4], seed + 1);
            let mut b = ConvBnRelu::<f64>::xavier(3, 2, 3, seed + 2).unwrap();
            b.forward(&x, BnMode::Train).unwrap();
            let gx = b.backward(&proj).unwrap();
            let template = b.clone();
            let r = check_gradient(x.data(), gx.data(), |v| {
                let mut blk = template.clone();
                let y = blk.forward(&Tensor::new(x.shape(), v.to_vec()).unwrap(), BnMode::Train).unwrap();
                y.data().iter().zip(proj.data()).map(|(a, b)| a * b).sum()
            });
            assert!(r < GRAD_TOL, "block input rel err {r}");
        }
    }

    #[test]
    fn state_roundtrip() {
        let mut a = ConvBnRelu::<f64>::xavier(3, 2, 3, 5).unwrap();
        a.forward(&random_tensor([2, 2, 4, 4], 0), BnMode::Train).unwrap();
        let mut state = Vec::new();
        a.export_state("blk", &mut state);
        assert_eq!(state.len(), 6);
        let mut b = ConvBnRelu::<f64>::xavier(3, 2, 3, 99).unwrap();
        b.import_state("blk", &state).unwrap();
        let x = random_tensor([1, 2, 4, 4], 7);
        let (ya, yb) = (a.infer(&x, BnMode::Infer).unwrap(), b.infer(&x, BnMode::Infer).unwrap());
        for (p, q) in ya.data().iter().zip(yb.data()) {
            assert!((p - q).abs() < 1e-5);
        }
    }
}
