//! The multi-scale artifact-learning network and its single-scale baseline.
//!
//! The multi-scale network is an encoder-decoder: stages of
//! `Conv3x3 + BN + ReLU` blocks separated by 2x2 max-pooling on the way
//! down (doubling the width at every scale) and by switch-based unpooling
//! on the way up, with the output of every encoder stage concatenated onto
//! the decoder at the same scale. A 1x1 convolution produces the
//! one-channel artifact estimate.

mod error;
mod network;
mod rf;
mod spec;
mod train;

pub use error::{Result, UnetError};
pub use network::{build_network, LayerTrace, Network};
pub use rf::{final_receptive_field, receptive_field, rf_table_csv, RfRow};
pub use spec::{layer_plan, stage_plan, LayerInfo, LayerKind, NetMode, NetworkSpec, SkipMode, StagePlan, StageRole, Upsampling};
pub use train::{evaluate_batches, lr_schedule, predict, train_epoch, TrainConfig, TrainSet};
