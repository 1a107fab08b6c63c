use crate::{DistanceMatrix, HomologyError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub birth: f64,
    /// `f64::INFINITY` for the component that never dies.
    pub death: f64,
}

impl Bar {
    pub fn is_finite(&self) -> bool {
        self.death.is_finite()
    }
}

/// Dimension-0 bars in canonical order: finite deaths ascending, the single
/// infinite bar last.
#[derive(Debug, Clone, PartialEq)]
pub struct Barcode {
    pub bars: Vec<Bar>,
    /// Largest finite death, the normalisation scale.
    pub scale_max: f64,
}

impl Barcode {
    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn finite_deaths(&self) -> Vec<f64> {
        self.bars.iter().filter(|b| b.is_finite()).map(|b| b.death).collect()
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Kruskal over all pairs. Roots are always the smallest index of their
/// component, so the elder rule reduces to "the larger root dies".
pub fn betti0_barcode(dist: &DistanceMatrix) -> Result<Barcode> {
    let n = dist.len();
    if n < 2 {
        return Err(HomologyError::TooFewPoints(n));
    }
    let mut edges: Vec<(f64, usize, usize)> =
        (0..n).flat_map(|i| (0..i).map(move |j| (j, i))).map(|(i, j)| (dist.get(i, j), i, j)).collect();
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf = UnionFind::new(n);
    let mut bars = Vec::with_capacity(n);
    for (d, i, j) in edges {
        let (ri, rj) = (uf.find(i), uf.find(j));
        if ri == rj {
            continue;
        }
        let (elder, younger) = if ri < rj { (ri, rj) } else { (rj, ri) };
        uf.parent[younger] = elder;
        bars.push(Bar { birth: 0.0, death: d });
        if bars.len() == n - 1 {
            break;
        }
    }
    let scale_max = bars.last().map_or(0.0, |b| b.death);
    bars.push(Bar { birth: 0.0, death: f64::INFINITY });
    Ok(Barcode { bars, scale_max })
}

/// Step function `beta_0(eps) = #{bars with death > eps}` as its
/// breakpoints: `(0, n)` at the start of the filtration, then one point per
/// finite death. With `normalize`, eps is divided by the largest finite
/// death (when that is positive).
pub fn betti0_curve(bc: &Barcode, normalize: bool) -> Vec<(f64, usize)> {
    let scale = if normalize && bc.scale_max > 0.0 { bc.scale_max } else { 1.0 };
    let deaths = bc.finite_deaths();
    let n = bc.len();
    let mut curve = vec![(0.0, n)];
    for (k, &d) in deaths.iter().enumerate() {
        // deaths are ascending: after the k-th, n - k - 1 bars remain
        curve.push((d / scale, n - k - 1));
    }
    curve
}

/// Area under `beta_0(eps) / n` for normalised eps in `[0, 1]`. Each bar
/// contributes its normalised lifetime capped at 1; the infinite bar
/// contributes 1. Lies in `(0, 1]`; smaller means earlier merging.
pub fn complexity_summary(bc: &Barcode) -> f64 {
    let n = bc.len() as f64;
    let total: f64 = bc
        .bars
        .iter()
        .map(|b| match (b.is_finite(), bc.scale_max > 0.0) {
            (false, _) => 1.0,
            (true, true) => (b.death / bc.scale_max).min(1.0),
            (true, false) => 0.0,
        })
        .sum();
    total / n
}

pub fn barcode_csv(bc: &Barcode) -> String {
    let mut out = String::from("bar_index,birth,death,finite\n");
    for (i, b) in bc.bars.iter().enumerate() {
        out.push_str(&format!("{i},{},{},{}\n", b.birth, b.death, u8::from(b.is_finite())));
    }
    out
}

pub fn curve_csv(curve: &[(f64, usize)]) -> String {
    let mut out = String::from("epsilon,betti0\n");
    for (e, c) in curve {
        out.push_str(&format!("{e},{c}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{pairwise_distances, PointCloud};

    fn line(xs: &[f64]) -> Barcode {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        betti0_barcode(&pairwise_distances(&PointCloud::new(&pts, "").unwrap())).unwrap()
    }

    #[test]
    fn collinear_points() {
        let bc = line(&[0.0, 1.0, 3.0]);
        assert_eq!(bc.finite_deaths(), [1.0, 2.0]);
        assert_eq!(bc.bars.iter().filter(|b| !b.is_finite()).count(), 1);
        assert!(bc.bars.iter().all(|b| b.birth == 0.0));
        assert_eq!(bc.scale_max, 2.0);
    }

    #[test]
    fn identical_points() {
        let bc = line(&[2.0; 5]);
        assert_eq!(bc.finite_deaths(), [0.0; 4]);
        assert!((complexity_summary(&bc) - 0.2).abs() < 1e-15);
        let curve = betti0_curve(&bc, true);
        assert_eq!(curve[0], (0.0, 5));
        assert_eq!(curve.last().unwrap().1, 1);
    }

    #[test]
    fn two_points_auc_is_one() {
        assert_eq!(complexity_summary(&line(&[0.0, 7.0])), 1.0);
    }

    #[test]
    fn curve_is_non_increasing_and_ends_at_one() {
        let bc = line(&[0.0, 0.5, 4.0, 4.1, 9.0, 20.0]);
        let curve = betti0_curve(&bc, true);
        assert_eq!(curve[0], (0.0, 6));
        assert!(curve.windows(2).all(|w| w[1].1 <= w[0].1 && w[1].0 >= w[0].0));
        assert_eq!(*curve.last().unwrap(), (1.0, 1));
        let raw = betti0_curve(&bc, false);
        assert_eq!(raw.last().unwrap().0, 11.0);
    }

    #[test]
    fn auc_matches_curve_integral() {
        let bc = line(&[0.0, 0.3, 1.0, 2.2, 2.5]);
        let curve = betti0_curve(&bc, true);
        let n = bc.len() as f64;
        let mut area = 0.0;
        for w in curve.windows(2) {
            area += (w[1].0 - w[0].0) * w[0].1 as f64 / n;
        }
        // after the last finite death only the infinite bar is left
        area += (1.0 - curve.last().unwrap().0) / n;
        assert!((area - complexity_summary(&bc)).abs() < 1e-12);
    }

    #[test]
    fn csv_schemas() {
        let bc = line(&[0.0, 1.0, 3.0]);
        let csv = barcode_csv(&bc);
        assert_eq!(csv.lines().next().unwrap(), "bar_index,birth,death,finite");
        assert_eq!(csv.lines().last().unwrap(), "2,0,inf,0");
        let c = curve_csv(&betti0_curve(&bc, false));
        assert_eq!(c.lines().count(), 4);
    }
}
