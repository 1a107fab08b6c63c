use csmri_homology::{betti0_barcode, complexity_summary, image_cloud, pairwise_distances, Barcode};
use csmri_kspace::{RealImage, SamplingMask};

use crate::dataset::{simulate_item, PhantomCoils};
use crate::error::invalid;
use crate::Result;

/// Persistence summary of one family of images.
#[derive(Debug, Clone)]
pub struct ManifoldSummary {
    pub name: String,
    pub points: usize,
    pub barcode: Barcode,
    pub auc: f64,
}

pub fn summarize(name: &str, images: &[RealImage], size: (usize, usize)) -> Result<ManifoldSummary> {
    let cloud = image_cloud(images, size, name)?;
    let barcode = betti0_barcode(&pairwise_distances(&cloud))?;
    let auc = complexity_summary(&barcode);
    Ok(ManifoldSummary { name: name.to_string(), points: cloud.len(), barcode, auc })
}

/// Compare the clean-image manifold with the magnitude-artifact manifolds
/// of two sampling masks. Every coil image of every phantom is one point.
pub fn manifold_analysis(
    phantoms: &[PhantomCoils],
    masks: &[(&str, &SamplingMask)],
    size: (usize, usize),
) -> Result<Vec<ManifoldSummary>> {
    if phantoms.is_empty() {
        return invalid("manifold analysis needs phantoms");
    }
    let truths: Vec<_> = phantoms.iter().flatten().collect();
    let images: Vec<RealImage> = truths.iter().map(|t| t.magnitude()).collect();
    let mut out = vec![summarize("image", &images, size)?];
    for (name, mask) in masks {
        let artifacts = truths
            .iter()
            .map(|t| Ok(simulate_item((*t).clone(), mask, 0, 0)?.pair.label_mag))
            .collect::<Result<Vec<_>>>()?;
        out.push(summarize(&format!("artifact-{name}"), &artifacts, size)?);
    }
    Ok(out)
}

pub fn auc_table_csv(rows: &[ManifoldSummary]) -> String {
    let mut out = String::from("manifold,points,auc\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.name, r.points, r.auc));
    }
    out
}
