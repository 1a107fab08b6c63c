//! A small CPU neural-network engine with hand-written backward passes.
//!
//! Tensors are dense `(N, C, H, W)` arrays generic over [`Real`] (`f32` for
//! training speed, `f64` for gradient checks and bit-reproducible runs).
//! Reductions (batch statistics, bias gradients, losses) accumulate in `f64`
//! regardless of the storage type.
//!
//! Every differentiable op comes as a forward/backward pair of free
//! functions; [`layers`] wraps them into stateful modules that cache what
//! the backward pass needs.

mod activation;
mod batchnorm;
mod concat;
mod conv;
mod error;
pub mod gradcheck;
mod init;
pub mod layers;
mod loss;
mod optim;
pub mod persist;
mod pool;
mod real;
mod tensor;

pub use activation::{relu, relu_backward};
pub use batchnorm::{batch_norm, batch_norm_backward, batch_norm_infer, BnCache, BnGrads, BnMode, BnParams};
pub use concat::{add_tensors, concat_channels, concat_channels_backward};
pub use conv::{conv2d, conv2d_backward, ConvGrads, ConvParams};
pub use error::{NnError, Result};
pub use init::{xavier_init, xavier_std};
pub use loss::{masked_mse_loss, mse_loss};
pub use optim::{sgd_momentum_step, ParamSlot, Parameters, SgdMomentum};
pub use pool::{
    max_pool_2x2, max_pool_2x2_backward, unpool_2x2, unpool_2x2_backward, upsample_nearest_2x,
    upsample_nearest_2x_backward, PoolSwitches,
};
pub use real::Real;
pub use tensor::{Shape, Tensor};
