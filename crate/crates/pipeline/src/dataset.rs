use csmri_kspace::{
    augment, compute_artifact, dft2, generate_phantom, subsample, zero_fill_recon, ArtifactPair,
    ComplexImage, SamplingMask, TRANSFORM_COUNT,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::invalid;
use crate::Result;

/// Coil images of one phantom.
pub type PhantomCoils = Vec<ComplexImage>;

/// `count` phantoms of `rows x cols` with `n_coils` coils; phantom `i` is
/// drawn from its own seed derived from `seed` and `i`.
pub fn make_corpus(count: usize, rows: usize, cols: usize, n_coils: usize, seed: u64) -> Result<Vec<PhantomCoils>> {
    (0..count)
        .map(|i| Ok(generate_phantom(rows, cols, n_coils, phantom_seed(seed, i))?.coils))
        .collect()
}

pub fn phantom_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (index as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// One simulated coil image with where it came from.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub phantom: usize,
    pub coil: usize,
    /// Augmentation id, 0 for the untransformed image.
    pub transform: usize,
    pub truth: ComplexImage,
    pub aliased: ComplexImage,
    pub pair: ArtifactPair,
}

impl DatasetItem {
    pub fn tag(&self) -> String {
        format!("p{}c{}t{}", self.phantom, self.coil, self.transform)
    }
}

/// Simulate the undersampled acquisition of one truth image.
pub fn simulate_item(truth: ComplexImage, mask: &SamplingMask, phantom: usize, transform: usize) -> Result<DatasetItem> {
    let coil = truth.coil_index();
    let aliased = zero_fill_recon(&subsample(&dft2(&truth)?, mask)?)?;
    let pair = compute_artifact(&aliased, &truth)?;
    Ok(DatasetItem { phantom, coil, transform, truth, aliased, pair })
}

/// How many phantoms go to training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitRule {
    /// `train : test`, the training count rounded to nearest.
    Ratio(usize, usize),
    TrainCount(usize),
}

impl Default for SplitRule {
    fn default() -> Self {
        SplitRule::Ratio(66, 15)
    }
}

impl SplitRule {
    pub fn train_count(&self, n: usize) -> usize {
        match *self {
            SplitRule::Ratio(a, b) => ((n * a) as f64 / (a + b) as f64).round() as usize,
            SplitRule::TrainCount(k) => k.min(n),
        }
    }
}

/// Train/test items split by phantom, so every augmented copy and every
/// coil of a phantom stays on one side.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<DatasetItem>,
    pub test: Vec<DatasetItem>,
    pub train_phantoms: Vec<usize>,
    pub test_phantoms: Vec<usize>,
    pub split_seed: u64,
}

impl DatasetSplit {
    /// Test items grouped per phantom, coils in order.
    pub fn test_groups(&self) -> Vec<Vec<&DatasetItem>> {
        self.test_phantoms
            .iter()
            .map(|&p| self.test.iter().filter(|it| it.phantom == p).collect())
            .collect()
    }
}

pub fn build_dataset(
    phantoms: &[PhantomCoils],
    mask: &SamplingMask,
    augment_train: bool,
    rule: SplitRule,
    split_seed: u64,
) -> Result<DatasetSplit> {
    if phantoms.is_empty() || phantoms.iter().any(Vec::is_empty) {
        return invalid("dataset needs at least one phantom with at least one coil");
    }
    let mut order: Vec<usize> = (0..phantoms.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let n_train = rule.train_count(phantoms.len());
    let mut train_phantoms = order[..n_train].to_vec();
    let mut test_phantoms = order[n_train..].to_vec();
    train_phantoms.sort_unstable();
    test_phantoms.sort_unstable();

    let mut train = Vec::new();
    for &p in &train_phantoms {
        for coil in &phantoms[p] {
            if augment_train {
                // transforms act on the complex truth before acquisition
                for t in 0..TRANSFORM_COUNT {
                    train.push(simulate_item(augment(coil, t)?, mask, p, t)?);
                }
            } else {
                train.push(simulate_item(coil.clone(), mask, p, 0)?);
            }
        }
    }
    let mut test = Vec::new();
    for &p in &test_phantoms {
        for coil in &phantoms[p] {
            test.push(simulate_item(coil.clone(), mask, p, 0)?);
        }
    }
    Ok(DatasetSplit { train, test, train_phantoms, test_phantoms, split_seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use csmri_kspace::{make_mask, MaskPattern};

    fn mask(pattern: MaskPattern) -> SamplingMask {
        make_mask(pattern, 16, 4, 0.05, 1).unwrap()
    }

    #[test]
    fn ratio_66_15_on_81_phantoms() {
        assert_eq!(SplitRule::default().train_count(81), 66);
        assert_eq!(SplitRule::TrainCount(165).train_count(200), 165);
    }

    #[test]
    fn split_by_phantom_without_augmentation() {
        let corpus = make_corpus(81, 16, 16, 1, 3).unwrap();
        let split = build_dataset(&corpus, &mask(MaskPattern::UniformAcs), false, SplitRule::default(), 5).unwrap();
        assert_eq!((split.train.len(), split.test.len()), (66, 15));
        assert!(split.train_phantoms.iter().all(|p| !split.test_phantoms.contains(p)));
        assert_eq!(split.test_groups().len(), 15);
    }

    #[test]
    fn augmentation_multiplies_training_pairs_only() {
        let corpus = make_corpus(9, 16, 16, 2, 4).unwrap();
        let rule = SplitRule::Ratio(2, 1);
        let split = build_dataset(&corpus, &mask(MaskPattern::UniformAcs), true, rule, 0).unwrap();
        assert_eq!(split.train.len(), 6 * 2 * 32);
        assert_eq!(split.test.len(), 3 * 2);
        assert!(split.test.iter().all(|it| it.transform == 0));
        // provenance: no training item comes from a test phantom
        assert!(split.train.iter().all(|it| !split.test_phantoms.contains(&it.phantom)));
    }

    #[test]
    fn full_mask_gives_zero_magnitude_labels() {
        let corpus = make_corpus(3, 16, 16, 1, 0).unwrap();
        let split = build_dataset(&corpus, &mask(MaskPattern::Full), false, SplitRule::Ratio(2, 1), 0).unwrap();
        for it in split.train.iter().chain(&split.test) {
            assert!(it.pair.label_mag.data().iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(build_dataset(&[], &mask(MaskPattern::Full), false, SplitRule::default(), 0).is_err());
    }

    #[test]
    fn split_is_deterministic_in_seed() {
        let corpus = make_corpus(20, 16, 16, 1, 0).unwrap();
        let m = mask(MaskPattern::UniformAcs);
        let a = build_dataset(&corpus, &m, false, SplitRule::default(), 1).unwrap();
        let b = build_dataset(&corpus, &m, false, SplitRule::default(), 1).unwrap();
        let c = build_dataset(&corpus, &m, false, SplitRule::default(), 2).unwrap();
        assert_eq!(a.test_phantoms, b.test_phantoms);
        assert_ne!(a.test_phantoms, c.test_phantoms);
    }
}
