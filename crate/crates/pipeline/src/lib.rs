//! Simulation-to-reconstruction pipeline: phantom corpora and train/test
//! splits, magnitude and phase artifact networks, per-coil artifact
//! subtraction with SSOS combination, error metrics, persistence analysis
//! of the image and artifact manifolds, and file export.

pub mod analysis;
pub mod dataset;
mod error;
pub mod export;
pub mod metrics;
pub mod recon;
pub mod training;

pub use analysis::{auc_table_csv, manifold_analysis, summarize, ManifoldSummary};
pub use dataset::{
    build_dataset, make_corpus, phantom_seed, simulate_item, DatasetItem, DatasetSplit, PhantomCoils, SplitRule,
};
pub use error::{PipelineError, Result};
pub use export::{curves_csv, metrics_csv, pgm_bytes, write_pgm, MetricRow};
pub use metrics::{dice, image_nmse, make_phase_mask, masked_phase_nmse, nmse, PhaseMask, PHASE_THRESHOLD};
pub use recon::{reconstruct, ArtifactModel, NetModel, OracleModel, ReconResult, ZeroModel};
pub use training::{
    compare_learning_targets, image_to_tensor, magnitude_test_nmse, phase_test_nmse, predict_images,
    subtract_magnitude, subtract_phase, tensor_to_image, train_magnitude_network, train_phase_network,
    truth_phase_masks, zero_filled_magnitude_nmse, zero_filled_phase_nmse, CurveRow, LearningTarget, TrainedNet,
};
