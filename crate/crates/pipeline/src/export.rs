use std::fs;
use std::path::Path;

use csmri_kspace::RealImage;

use crate::training::CurveRow;
use crate::Result;

pub fn curves_csv(rows: &[CurveRow]) -> String {
    let mut out = String::from("epoch,train_loss,test_nmse\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.test_nmse));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub id: String,
    pub nmse_zero_fill: f64,
    pub nmse_recon: f64,
}

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from("id,nmse_zero_fill,nmse_recon\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.id, r.nmse_zero_fill, r.nmse_recon));
    }
    out
}

/// 8-bit binary PGM, linearly stretched from the image minimum to maximum.
pub fn pgm_bytes(img: &RealImage) -> Vec<u8> {
    let (h, w) = img.shape();
    let lo = img.data().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = img.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(img.data().iter().map(|&v| ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

pub fn write_pgm(path: impl AsRef<Path>, img: &RealImage) -> Result<()> {
    fs::write(path, pgm_bytes(img))?;
    Ok(())
}
