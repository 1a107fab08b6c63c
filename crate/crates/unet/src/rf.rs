//! Receptive-field recursion along the deepest path of the network.
//!
//! For a layer of kernel `k` and stride `s`: `rf += (k - 1) * jump` and
//! `jump *= s`. The 2x2 max-pool is a stride-2 kernel-2 layer; upsampling is
//! a stride-1/2 layer, which halves the jump without growing the field.
//! Skip joins merge a shallower path, so the deep path dominates.

use crate::spec::{layer_plan, LayerKind, NetworkSpec};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RfRow {
    pub layer: String,
    pub rf_h: usize,
    pub rf_w: usize,
    /// Input pixels between adjacent positions of this layer's output.
    pub jump: usize,
}

pub fn receptive_field(spec: &NetworkSpec) -> Result<Vec<RfRow>> {
    let mut rf = 1;
    let mut jump = 1;
    let mut rows = Vec::new();
    for layer in layer_plan(spec)? {
        match layer.kind {
            LayerKind::Block { kernel } => rf += (kernel - 1) * jump,
            LayerKind::Head => {}
            LayerKind::Pool => {
                rf += jump;
                jump *= 2;
            }
            LayerKind::Upsample => jump /= 2,
            LayerKind::Concat | LayerKind::Add => {}
        }
        rows.push(RfRow { layer: layer.name, rf_h: rf, rf_w: rf, jump });
    }
    Ok(rows)
}

/// Final receptive field clipped to the input size.
pub fn final_receptive_field(spec: &NetworkSpec) -> Result<(usize, usize)> {
    let rows = receptive_field(spec)?;
    let last = rows.last().map(|r| (r.rf_h, r.rf_w)).unwrap_or((1, 1));
    Ok((last.0.min(spec.input_size.0), last.1.min(spec.input_size.1)))
}

pub fn rf_table_csv(rows: &[RfRow]) -> String {
    let mut out = String::from("layer,rf_h,rf_w,jump\n");
    for r in rows {
        out.push_str(&format!("{},{},{},{}\n", r.layer, r.rf_h, r.rf_w, r.jump));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::NetMode;

    #[test]
    fn single_scale_18_layers_is_37() {
        let spec = NetworkSpec::single_scale((256, 256));
        assert_eq!(final_receptive_field(&spec).unwrap(), (37, 37));
    }

    #[test]
    fn one_conv_is_3() {
        let spec = NetworkSpec { single_scale_layers: 1, ..NetworkSpec::single_scale((64, 64)) };
        let rows = receptive_field(&spec).unwrap();
        assert_eq!((rows[0].rf_h, rows[0].rf_w), (3, 3));
        assert_eq!(final_receptive_field(&spec).unwrap(), (3, 3));
    }

    #[test]
    fn full_scale_network_covers_the_input() {
        let spec = NetworkSpec::full_scale();
        assert_eq!(spec.mode, NetMode::MultiScale);
        let rows = receptive_field(&spec).unwrap();
        assert!(rows.last().unwrap().rf_h >= 256);
        assert_eq!(final_receptive_field(&spec).unwrap(), (256, 256));
        assert!(rows.windows(2).all(|w| w[1].rf_h >= w[0].rf_h));
        assert_eq!(rows.last().unwrap().jump, 1);
    }

    #[test]
    fn csv_has_one_row_per_layer() {
        let spec = NetworkSpec::desk();
        let rows = receptive_field(&spec).unwrap();
        let csv = rf_table_csv(&rows);
        assert_eq!(csv.lines().count(), rows.len() + 1);
    }
}
