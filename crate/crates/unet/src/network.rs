use csmri_nn::layers::{Conv2d, ConvBnRelu};
use csmri_nn::persist::{NamedTensor, StateDict};
use csmri_nn::{
    add_tensors, concat_channels, concat_channels_backward, max_pool_2x2, max_pool_2x2_backward,
    unpool_2x2, unpool_2x2_backward, upsample_nearest_2x, upsample_nearest_2x_backward, BnMode,
    ParamSlot, Parameters, PoolSwitches, Real, Shape, Tensor,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spec::{block_name, stage_plan, NetMode, NetworkSpec, SkipMode, StageRole, Upsampling};
use crate::{Result, UnetError};

type Stage<T> = Vec<ConvBnRelu<T>>;

/// Runtime shape of one layer output, recorded by [`Network::infer_traced`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerTrace {
    pub name: String,
    pub shape: Shape,
}

/// The encoder-decoder (or single-scale) network with its parameters, BN
/// buffers and, between a training forward and its backward, the pool
/// switches.
#[derive(Debug, Clone)]
pub struct Network<T> {
    spec: NetworkSpec,
    encoder: Vec<Stage<T>>,
    bottom: Stage<T>,
    /// Indexed by scale, `decoder[s]` runs after returning to scale `s`.
    decoder: Vec<Stage<T>>,
    head: Conv2d<T>,
    switches: Vec<PoolSwitches>,
}

pub fn build_network<T: Real>(spec: &NetworkSpec, seed: u64) -> Result<Network<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut make_stage = |blocks: &[(usize, usize)]| -> Result<Stage<T>> {
        blocks.iter().map(|&(a, b)| Ok(ConvBnRelu::xavier(3, a, b, rng.next_u64())?)).collect()
    };
    let mut encoder = Vec::new();
    let mut bottom = Vec::new();
    let mut decoder: Vec<Stage<T>> = Vec::new();
    for stage in stage_plan(spec) {
        let built = make_stage(&stage.blocks)?;
        match stage.role {
            StageRole::Encoder => encoder.push(built),
            StageRole::Bottom => bottom = built,
            StageRole::Decoder => decoder.insert(0, built),
        }
    }
    let last = match (decoder.first(), bottom.last()) {
        (Some(stage), _) => stage.last(),
        (None, b) => b,
    };
    let head_in = last.map(|b| b.out_channels()).unwrap_or(spec.in_channels);
    let head = Conv2d::xavier(1, head_in, 1, rng.next_u64())?;
    Ok(Network { spec: spec.clone(), encoder, bottom, decoder, head, switches: Vec::new() })
}

fn forward_stage<T: Real>(stage: &mut Stage<T>, mut h: Tensor<T>, mode: BnMode) -> Result<Tensor<T>> {
    for b in stage.iter_mut() {
        h = b.forward(&h, mode)?;
    }
    Ok(h)
}

fn backward_stage<T: Real>(stage: &mut Stage<T>, mut g: Tensor<T>) -> Result<Tensor<T>> {
    for b in stage.iter_mut().rev() {
        g = b.backward(&g)?;
    }
    Ok(g)
}

impl<T: Real> Network<T> {
    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn head(&self) -> &Conv2d<T> {
        &self.head
    }

    pub fn head_mut(&mut self) -> &mut Conv2d<T> {
        &mut self.head
    }

    /// Number of conv blocks (the head excluded).
    pub fn block_count(&self) -> usize {
        self.encoder.iter().chain(&self.decoder).map(Vec::len).sum::<usize>() + self.bottom.len()
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        let (h, w) = self.spec.input_size;
        let [_, c, xh, xw] = x.shape();
        if c != self.spec.in_channels || (xh, xw) != (h, w) || x.batch() == 0 {
            return Err(UnetError::Input {
                expected: format!("(N, {}, {h}, {w})", self.spec.in_channels),
                got: x.shape(),
            });
        }
        Ok(())
    }

    fn upsample(&self, h: &Tensor<T>, switches: &PoolSwitches) -> Result<Tensor<T>> {
        Ok(match self.spec.upsampling {
            Upsampling::Unpool => unpool_2x2(h, switches)?,
            Upsampling::Nearest => upsample_nearest_2x(h),
        })
    }

    fn join(&self, up: &Tensor<T>, skip: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(match self.spec.skip {
            SkipMode::Concat => concat_channels(up, skip)?,
            SkipMode::Additive => add_tensors(up, skip)?,
        })
    }

    /// Training forward. Caches everything `backward` needs; `mode` selects
    /// batch statistics (`Train`) or running statistics (`Infer`) in every
    /// BN layer.
    pub fn forward(&mut self, x: &Tensor<T>, mode: BnMode) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut skips = Vec::with_capacity(self.encoder.len());
        self.switches.clear();
        let mut h = x.clone();
        for stage in self.encoder.iter_mut() {
            h = forward_stage(stage, h, mode)?;
            let (pooled, sw) = max_pool_2x2(&h)?;
            skips.push(h);
            self.switches.push(sw);
            h = pooled;
        }
        h = forward_stage(&mut self.bottom, h, mode)?;
        for s in (0..self.decoder.len()).rev() {
            let up = self.upsample(&h, &self.switches[s])?;
            h = self.join(&up, &skips[s])?;
            h = forward_stage(&mut self.decoder[s], h, mode)?;
        }
        Ok(self.head.forward(&h)?)
    }

    /// Backpropagate `grad_out` (gradient w.r.t. the output of the last
    /// `forward`), accumulating parameter gradients. Returns the input
    /// gradient.
    pub fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        if self.switches.len() != self.encoder.len() {
            return Err(UnetError::Spec("backward without a matching forward".into()));
        }
        let mut g = self.head.backward(grad_out)?;
        let mut skip_grads = vec![None; self.decoder.len()];
        for s in 0..self.decoder.len() {
            g = backward_stage(&mut self.decoder[s], g)?;
            let (g_up, g_skip) = match self.spec.skip {
                SkipMode::Concat => {
                    let c_up = g.channels() - self.spec.width(s);
                    concat_channels_backward(&g, c_up)?
                }
                SkipMode::Additive => (g.clone(), g),
            };
            skip_grads[s] = Some(g_skip);
            g = match self.spec.upsampling {
                Upsampling::Unpool => unpool_2x2_backward(&g_up, &self.switches[s])?,
                Upsampling::Nearest => upsample_nearest_2x_backward(&g_up)?,
            };
        }
        g = backward_stage(&mut self.bottom, g)?;
        for s in (0..self.encoder.len()).rev() {
            g = max_pool_2x2_backward(&g, &self.switches[s])?;
            if let Some(gs) = skip_grads[s].take() {
                g = add_tensors(&g, &gs)?;
            }
            g = backward_stage(&mut self.encoder[s], g)?;
        }
        self.switches.clear();
        Ok(g)
    }

    /// Stateless forward, safe to call from many threads.
    pub fn infer(&self, x: &Tensor<T>, stats: BnMode) -> Result<Tensor<T>> {
        self.run(x, stats, None)
    }

    /// [`Self::infer`] with running statistics, also returning every
    /// layer's output shape.
    pub fn infer_traced(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Vec<LayerTrace>)> {
        let mut trace = Vec::new();
        let y = self.run(x, BnMode::Infer, Some(&mut trace))?;
        Ok((y, trace))
    }

    fn run(&self, x: &Tensor<T>, stats: BnMode, mut trace: Option<&mut Vec<LayerTrace>>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut record = |name: String, t: &Tensor<T>| {
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(LayerTrace { name, shape: t.shape() });
            }
        };
        let stage = |blocks: &Stage<T>, role, scale, mut h: Tensor<T>, record: &mut dyn FnMut(String, &Tensor<T>)| {
            for (i, b) in blocks.iter().enumerate() {
                h = b.infer(&h, stats)?;
                record(block_name(role, scale, i), &h);
            }
            Ok::<_, UnetError>(h)
        };
        let mut skips = Vec::new();
        let mut switches = Vec::new();
        let mut h = x.clone();
        for (s, blocks) in self.encoder.iter().enumerate() {
            h = stage(blocks, StageRole::Encoder, s, h, &mut record)?;
            let (pooled, sw) = max_pool_2x2(&h)?;
            record(format!("pool{s}"), &pooled);
            skips.push(h);
            switches.push(sw);
            h = pooled;
        }
        h = stage(&self.bottom, StageRole::Bottom, self.encoder.len(), h, &mut record)?;
        for s in (0..self.decoder.len()).rev() {
            let up = self.upsample(&h, &switches[s])?;
            record(format!("up{s}"), &up);
            h = self.join(&up, &skips[s])?;
            record(format!("skip{s}"), &h);
            h = stage(&self.decoder[s], StageRole::Decoder, s, h, &mut record)?;
        }
        let y = self.head.infer(&h)?;
        record("head".into(), &y);
        Ok(y)
    }

    /// Drop all forward caches.
    pub fn clear_caches(&mut self) {
        for b in self.blocks_mut() {
            b.clear_cache();
        }
        self.head.clear_cache();
        self.switches.clear();
    }

    fn blocks_mut(&mut self) -> impl Iterator<Item = &mut ConvBnRelu<T>> {
        self.encoder.iter_mut().flatten().chain(self.bottom.iter_mut()).chain(self.decoder.iter_mut().flatten())
    }

    fn named_blocks(&self) -> Vec<(String, &ConvBnRelu<T>)> {
        let mut out = Vec::new();
        for (s, st) in self.encoder.iter().enumerate() {
            out.extend(st.iter().enumerate().map(|(i, b)| (block_name(StageRole::Encoder, s, i), b)));
        }
        let bs = if self.spec.mode == NetMode::SingleScale { 0 } else { self.encoder.len() };
        out.extend(self.bottom.iter().enumerate().map(|(i, b)| (block_name(StageRole::Bottom, bs, i), b)));
        for (s, st) in self.decoder.iter().enumerate() {
            out.extend(st.iter().enumerate().map(|(i, b)| (block_name(StageRole::Decoder, s, i), b)));
        }
        out
    }
}

impl<T: Real> Parameters<T> for Network<T> {
    fn visit_params(&mut self, f: &mut dyn FnMut(ParamSlot<'_, T>)) {
        for (s, st) in self.encoder.iter_mut().enumerate() {
            for (i, b) in st.iter_mut().enumerate() {
                b.visit_params(&block_name(StageRole::Encoder, s, i), f);
            }
        }
        for (i, b) in self.bottom.iter_mut().enumerate() {
            b.visit_params(&block_name(StageRole::Bottom, 0, i), f);
        }
        for (s, st) in self.decoder.iter_mut().enumerate() {
            for (i, b) in st.iter_mut().enumerate() {
                b.visit_params(&block_name(StageRole::Decoder, s, i), f);
            }
        }
        self.head.visit_params("head", f);
    }
}

impl<T: Real> StateDict for Network<T> {
    fn export_state(&self) -> Vec<NamedTensor> {
        let mut out = Vec::new();
        for (name, b) in self.named_blocks() {
            b.export_state(&name, &mut out);
        }
        self.head.export_state("head", &mut out);
        out
    }

    fn import_state(&mut self, tensors: &[NamedTensor]) -> csmri_nn::Result<()> {
        let names: Vec<String> = self.named_blocks().into_iter().map(|(n, _)| n).collect();
        for (name, b) in names.iter().zip(self.blocks_mut()) {
            b.import_state(name, tensors)?;
        }
        self.head.import_state("head", tensors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::layer_plan;
    use csmri_nn::gradcheck::random_tensor;

    fn tiny() -> NetworkSpec {
        NetworkSpec { n_scales: 2, layers_per_stage: 2, base_channels: 2, input_size: (8, 8), ..NetworkSpec::desk() }
    }

    #[test]
    fn output_shape_equals_input_shape() {
        for spec in [tiny(), NetworkSpec { upsampling: Upsampling::Nearest, skip: SkipMode::Additive, ..tiny() }] {
            let mut net = build_network::<f64>(&spec, 1).unwrap();
            let x = random_tensor([3, 1, 8, 8], 2);
            assert_eq!(net.forward(&x, BnMode::Train).unwrap().shape(), x.shape());
            assert_eq!(net.infer(&x, BnMode::Infer).unwrap().shape(), x.shape());
        }
    }

    #[test]
    fn wrong_input_size_rejected() {
        let net = build_network::<f64>(&tiny(), 1).unwrap();
        assert!(net.infer(&Tensor::zeros([1, 1, 16, 16]), BnMode::Infer).is_err());
        assert!(net.infer(&Tensor::zeros([1, 2, 8, 8]), BnMode::Infer).is_err());
    }

    #[test]
    fn zero_head_outputs_its_bias() {
        let mut net = build_network::<f64>(&tiny(), 3).unwrap();
        net.head_mut().params.weights.fill(0.0);
        net.head_mut().params.bias[0] = 0.25;
        let y = net.infer(&Tensor::zeros([2, 1, 8, 8]), BnMode::Infer).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.25));
    }

    #[test]
    fn training_forward_matches_stateless_batch_statistics() {
        let mut net = build_network::<f64>(&tiny(), 4).unwrap();
        let x = random_tensor([2, 1, 8, 8], 5);
        let frozen = net.infer(&x, BnMode::Train).unwrap();
        assert_eq!(net.forward(&x, BnMode::Train).unwrap(), frozen);
    }

    #[test]
    fn trace_matches_declared_plan() {
        let spec = tiny();
        let net = build_network::<f64>(&spec, 1).unwrap();
        let (_, trace) = net.infer_traced(&random_tensor([1, 1, 8, 8], 0)).unwrap();
        let plan = layer_plan(&spec).unwrap();
        assert_eq!(trace.len(), plan.len());
        for (t, p) in trace.iter().zip(&plan) {
            assert_eq!(t.name, p.name);
            assert_eq!(t.shape, [1, p.output.0, p.output.1, p.output.2]);
        }
    }

    #[test]
    fn same_seed_same_weights() {
        let a = build_network::<f64>(&tiny(), 9).unwrap().export_state();
        let b = build_network::<f64>(&tiny(), 9).unwrap().export_state();
        let c = build_network::<f64>(&tiny(), 10).unwrap().export_state();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn param_names_are_unique() {
        let mut net = build_network::<f64>(&NetworkSpec::desk(), 0).unwrap();
        let mut names = Vec::new();
        net.visit_params(&mut |s| names.push(s.name.to_string()));
        let n = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), n);
        assert_eq!(n, 2 + 4 * net.block_count());
    }
}
