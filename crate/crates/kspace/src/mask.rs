//! Phase-encode sampling masks.

use std::fmt;
use std::str::FromStr;

use csmri_io::PtfTensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{KspaceError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskPattern {
    /// Every R-th row plus a centred block of auto-calibration rows.
    UniformAcs,
    /// Rows drawn without replacement from a Gaussian density centred on DC,
    /// with the same row budget as `UniformAcs`.
    GaussianRandom,
    Full,
}

impl fmt::Display for MaskPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MaskPattern::UniformAcs => "uniform_acs",
            MaskPattern::GaussianRandom => "gaussian",
            MaskPattern::Full => "full",
        })
    }
}

impl FromStr for MaskPattern {
    type Err = KspaceError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform_acs" => Ok(MaskPattern::UniformAcs),
            "gaussian" => Ok(MaskPattern::GaussianRandom),
            "full" => Ok(MaskPattern::Full),
            other => Err(KspaceError::BadMask(format!("unknown pattern {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    lines: Vec<bool>,
    pattern: MaskPattern,
    acceleration: usize,
    acs_count: usize,
}

impl SamplingMask {
    pub fn lines(&self) -> &[bool] {
        &self.lines
    }

    pub fn pattern(&self) -> MaskPattern {
        self.pattern
    }

    pub fn acceleration(&self) -> usize {
        self.acceleration
    }

    pub fn acs_count(&self) -> usize {
        self.acs_count
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn sampled_count(&self) -> usize {
        self.lines.iter().filter(|&&b| b).count()
    }

    /// Mask with an explicit row set, for tests and externally defined masks.
    pub fn from_lines(lines: Vec<bool>) -> Self {
        Self { lines, pattern: MaskPattern::GaussianRandom, acceleration: 1, acs_count: 0 }
    }

    /// `row_index,sampled` per line, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.lines.len() * 6);
        for (i, &b) in self.lines.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i, u8::from(b)));
        }
        out
    }

    pub fn to_ptf(&self) -> PtfTensor {
        let values = self.lines.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        PtfTensor::real(vec![self.lines.len()], values).expect("rank-1 mask")
    }
}

/// Centred ACS block `[H/2 - acs/2, H/2 - acs/2 + acs)`; odd counts put the
/// extra row above the centre (toward the lower index).
pub fn acs_block(rows: usize, acs_count: usize) -> std::ops::Range<usize> {
    let start = (rows / 2).saturating_sub(acs_count / 2);
    start..(start + acs_count).min(rows)
}

pub fn make_mask(
    pattern: MaskPattern,
    rows: usize,
    acceleration: usize,
    acs_fraction: f64,
    seed: u64,
) -> Result<SamplingMask> {
    if acceleration == 0 || acceleration > rows {
        return Err(KspaceError::BadMask(format!(
            "acceleration {acceleration} must be in 1..={rows}"
        )));
    }
    if !(0.0..1.0).contains(&acs_fraction) {
        return Err(KspaceError::BadMask(format!("acs_fraction {acs_fraction} must be in [0, 1)")));
    }
    match pattern {
        MaskPattern::Full => Ok(SamplingMask {
            lines: vec![true; rows],
            pattern,
            acceleration: 1,
            acs_count: 0,
        }),
        MaskPattern::UniformAcs => {
            let acs_count = (acs_fraction * rows as f64).round() as usize;
            Ok(SamplingMask {
                lines: uniform_acs_lines(rows, acceleration, acs_count),
                pattern,
                acceleration,
                acs_count,
            })
        }
        MaskPattern::GaussianRandom => {
            let acs_count = (acs_fraction * rows as f64).round() as usize;
            let budget = uniform_acs_lines(rows, acceleration, acs_count)
                .iter()
                .filter(|&&b| b)
                .count();
            Ok(SamplingMask {
                lines: gaussian_lines(rows, budget, seed),
                pattern,
                acceleration,
                acs_count: 0,
            })
        }
    }
}

fn uniform_acs_lines(rows: usize, acceleration: usize, acs_count: usize) -> Vec<bool> {
    let mut lines: Vec<bool> = (0..rows).map(|r| r % acceleration == 0).collect();
    for r in acs_block(rows, acs_count) {
        lines[r] = true;
    }
    lines
}

fn gaussian_lines(rows: usize, budget: usize, seed: u64) -> Vec<bool> {
    let sigma = rows as f64 / 6.0;
    let centre = rows as f64 / 2.0;
    let mut weights: Vec<f64> = (0..rows)
        .map(|r| {
            let d = r as f64 - centre;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = vec![false; rows];
    for _ in 0..budget {
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for (r, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            pick = Some(r);
            if u < w {
                break;
            }
            u -= w;
        }
        let r = pick.expect("budget never exceeds row count");
        lines[r] = true;
        weights[r] = 0.0;
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_mask_256_with_13_acs_rows() {
        let m = make_mask(MaskPattern::UniformAcs, 256, 4, 0.05, 0).unwrap();
        assert_eq!(m.acs_count(), 13);
        assert_eq!(acs_block(256, 13), 122..135);
        // multiples of 4 inside rows 122..=134: 124, 128, 132
        let overlap = (122..=134).filter(|r| r % 4 == 0).count();
        assert_eq!(overlap, 3);
        assert_eq!(m.sampled_count(), 64 + 13 - overlap);
        assert_eq!(m.sampled_count(), 74);
    }

    #[test]
    fn full_mask_samples_everything() {
        let m = make_mask(MaskPattern::Full, 64, 4, 0.05, 0).unwrap();
        assert_eq!(m.sampled_count(), 64);
    }

    #[test]
    fn gaussian_is_seed_deterministic_and_budget_matched() {
        let a = make_mask(MaskPattern::GaussianRandom, 64, 4, 0.05, 7).unwrap();
        let b = make_mask(MaskPattern::GaussianRandom, 64, 4, 0.05, 7).unwrap();
        assert_eq!(a, b);
        let u = make_mask(MaskPattern::UniformAcs, 64, 4, 0.05, 7).unwrap();
        assert_eq!(a.sampled_count(), u.sampled_count());
        let c = make_mask(MaskPattern::GaussianRandom, 64, 4, 0.05, 8).unwrap();
        assert_ne!(a.lines(), c.lines());
    }

    #[test]
    fn gaussian_prefers_centre() {
        let m = make_mask(MaskPattern::GaussianRandom, 256, 4, 0.05, 1).unwrap();
        let centre = (96..160).filter(|&r| m.lines()[r]).count();
        let edges = (0..32).chain(224..256).filter(|&r| m.lines()[r]).count();
        assert!(centre > 3 * edges, "centre {centre} edges {edges}");
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_mask(MaskPattern::UniformAcs, 8, 9, 0.0, 0).is_err());
        assert!(make_mask(MaskPattern::UniformAcs, 8, 0, 0.0, 0).is_err());
        assert!(make_mask(MaskPattern::UniformAcs, 8, 2, 1.0, 0).is_err());
        assert!(make_mask(MaskPattern::UniformAcs, 8, 2, -0.1, 0).is_err());
    }

    #[test]
    fn csv_has_one_row_per_line() {
        let m = make_mask(MaskPattern::UniformAcs, 256, 4, 0.05, 0).unwrap();
        let csv = m.to_csv();
        assert_eq!(csv.lines().count(), 256);
        assert_eq!(csv.lines().next(), Some("0,1"));
        assert_eq!(csv.lines().nth(1), Some("1,0"));
    }

    #[test]
    fn pattern_names_roundtrip() {
        for p in [MaskPattern::UniformAcs, MaskPattern::GaussianRandom, MaskPattern::Full] {
            assert_eq!(p.to_string().parse::<MaskPattern>().unwrap(), p);
        }
    }

    proptest! {
        #[test]
        fn uniform_count_matches_enumeration(log_h in 3u32..10, r in 1usize..9, frac in 0.0f64..0.5) {
            let h = 1usize << log_h;
            prop_assume!(r <= h);
            let m = make_mask(MaskPattern::UniformAcs, h, r, frac, 0).unwrap();
            let acs = (frac * h as f64).round() as usize;
            let block = acs_block(h, acs);
            let expected = (0..h).filter(|&i| i % r == 0 || block.contains(&i)).count();
            prop_assert_eq!(m.sampled_count(), expected);
            prop_assert!(m.sampled_count() >= h.div_ceil(r));
            prop_assert_eq!(block.len(), acs);
        }

        #[test]
        fn make_mask_is_pure(seed in any::<u64>()) {
            let a = make_mask(MaskPattern::GaussianRandom, 32, 3, 0.1, seed).unwrap();
            let b = make_mask(MaskPattern::GaussianRandom, 32, 3, 0.1, seed).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
