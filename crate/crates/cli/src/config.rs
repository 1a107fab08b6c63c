use std::path::Path;

use csmri_io::KvDocument;
use csmri_kspace::MaskPattern;
use csmri_pipeline::{LearningTarget, SplitRule};
use csmri_unet::{NetworkSpec, TrainConfig};

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

/// Every tunable of an experiment. Defaults reproduce the desk-scale
/// magnitude/phase setup.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub precision: Precision,
    pub mask_pattern: MaskPattern,
    pub acceleration: usize,
    pub acs_fraction: f64,
    pub phantom_count: usize,
    pub phantom_rows: usize,
    pub phantom_cols: usize,
    pub n_coils: usize,
    pub split: SplitRule,
    pub augment: bool,
    pub target: LearningTarget,
    pub train_phase: bool,
    pub phase_threshold: f64,
    pub train: TrainConfig,
    pub spec: NetworkSpec,
    pub barcode_size: usize,
}

const OWN_KEYS: [&str; 20] = [
    "seed",
    "precision",
    "mask_pattern",
    "acceleration",
    "acs_fraction",
    "phantom_count",
    "phantom_rows",
    "phantom_cols",
    "n_coils",
    "split",
    "augment",
    "target",
    "train_phase",
    "phase_threshold",
    "epochs",
    "batch_size",
    "momentum",
    "lr_start",
    "lr_end",
    "barcode_size",
];

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            precision: Precision::F32,
            mask_pattern: MaskPattern::UniformAcs,
            acceleration: 4,
            acs_fraction: 0.05,
            phantom_count: 200,
            phantom_rows: 64,
            phantom_cols: 64,
            n_coils: 4,
            split: SplitRule::TrainCount(165),
            augment: false,
            target: LearningTarget::Artifact,
            train_phase: true,
            phase_threshold: csmri_pipeline::PHASE_THRESHOLD,
            train: TrainConfig::default(),
            spec: NetworkSpec::desk(),
            barcode_size: 32,
        }
    }
}

fn parse_split(v: &str) -> Option<SplitRule> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.as_slice() {
        ["count", k] => k.parse().ok().map(SplitRule::TrainCount),
        ["ratio", a, b] => Some(SplitRule::Ratio(a.parse().ok()?, b.parse().ok()?)),
        _ => None,
    }
}

fn split_str(s: SplitRule) -> String {
    match s {
        SplitRule::TrainCount(k) => format!("count:{k}"),
        SplitRule::Ratio(a, b) => format!("ratio:{a}:{b}"),
    }
}

impl ExperimentConfig {
    pub fn from_kv(doc: &KvDocument) -> Result<Self> {
        if let Some(k) = doc.keys().find(|k| !OWN_KEYS.contains(k) && !NetworkSpec::KEYS.contains(k)) {
            return Err(CliError::Config(format!("unknown key `{k}`")));
        }
        let mut c = Self::default();
        fn take<T: std::str::FromStr>(doc: &KvDocument, key: &str, dst: &mut T) -> Result<()> {
            if let Some(v) = doc.get(key) {
                *dst = v.parse().map_err(|_| CliError::Config(format!("bad value `{v}` for `{key}`")))?;
            }
            Ok(())
        }
        take(doc, "seed", &mut c.seed)?;
        if let Some(v) = doc.get("precision") {
            c.precision = match v {
                "f32" => Precision::F32,
                "f64" => Precision::F64,
                _ => return Err(CliError::Config(format!("precision must be f32 or f64, got `{v}`"))),
            };
        }
        take(doc, "mask_pattern", &mut c.mask_pattern)?;
        take(doc, "acceleration", &mut c.acceleration)?;
        take(doc, "acs_fraction", &mut c.acs_fraction)?;
        take(doc, "phantom_count", &mut c.phantom_count)?;
        take(doc, "phantom_rows", &mut c.phantom_rows)?;
        take(doc, "phantom_cols", &mut c.phantom_cols)?;
        take(doc, "n_coils", &mut c.n_coils)?;
        if let Some(v) = doc.get("split") {
            c.split = parse_split(v)
                .ok_or_else(|| CliError::Config(format!("split must be count:K or ratio:A:B, got `{v}`")))?;
        }
        take(doc, "augment", &mut c.augment)?;
        take(doc, "target", &mut c.target)?;
        take(doc, "train_phase", &mut c.train_phase)?;
        take(doc, "phase_threshold", &mut c.phase_threshold)?;
        take(doc, "epochs", &mut c.train.epochs)?;
        take(doc, "batch_size", &mut c.train.batch_size)?;
        take(doc, "momentum", &mut c.train.momentum)?;
        take(doc, "lr_start", &mut c.train.lr_start)?;
        take(doc, "lr_end", &mut c.train.lr_end)?;
        take(doc, "barcode_size", &mut c.barcode_size)?;
        c.spec.apply_kv(doc)?;
        c.sync_seeds();
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_kv(&KvDocument::load(path)?)
    }

    /// All defaults included, in a fixed key order.
    pub fn to_kv(&self) -> KvDocument {
        let mut d = KvDocument::new();
        d.set("seed", self.seed);
        d.set("precision", if self.precision == Precision::F64 { "f64" } else { "f32" });
        d.set("mask_pattern", self.mask_pattern);
        d.set("acceleration", self.acceleration);
        d.set("acs_fraction", self.acs_fraction);
        d.set("phantom_count", self.phantom_count);
        d.set("phantom_rows", self.phantom_rows);
        d.set("phantom_cols", self.phantom_cols);
        d.set("n_coils", self.n_coils);
        d.set("split", split_str(self.split));
        d.set("augment", self.augment);
        d.set("target", self.target);
        d.set("train_phase", self.train_phase);
        d.set("phase_threshold", self.phase_threshold);
        d.set("epochs", self.train.epochs);
        d.set("batch_size", self.train.batch_size);
        d.set("momentum", self.train.momentum);
        d.set("lr_start", self.train.lr_start);
        d.set("lr_end", self.train.lr_end);
        d.set("barcode_size", self.barcode_size);
        self.spec.write_kv(&mut d);
        d
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.sync_seeds();
    }

    fn sync_seeds(&mut self) {
        self.train.seed = self.seed;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.phantom_count < 2 {
            return bad(format!("phantom_count must be at least 2, got {}", self.phantom_count));
        }
        if self.n_coils == 0 {
            return bad("n_coils must be positive".into());
        }
        if self.spec.input_size != (self.phantom_rows, self.phantom_cols) {
            return bad(format!(
                "network input {:?} differs from phantom size {:?}",
                self.spec.input_size,
                (self.phantom_rows, self.phantom_cols)
            ));
        }
        if !(0.0..=1.0).contains(&self.phase_threshold) {
            return bad(format!("phase_threshold must be in [0, 1], got {}", self.phase_threshold));
        }
        if self.train.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.train.lr_start >= 0.0 && self.train.lr_end >= 0.0) {
            return bad("learning rates must be non-negative".into());
        }
        if self.barcode_size == 0 {
            return bad("barcode_size must be positive".into());
        }
        self.spec.validate()?;
        Ok(())
    }
}
