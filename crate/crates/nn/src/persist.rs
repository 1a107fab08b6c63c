//! Parameter persistence: one PTF file per tensor plus a `manifest.txt`
//! mapping tensor names to file names (`name=file.ptf`, one per line).

use std::path::Path;

use csmri_io::{KvDocument, PtfTensor};

use crate::{NnError, Real, Result};

pub const MANIFEST: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f32>,
}

impl NamedTensor {
    pub fn from_slice<T: Real>(name: impl Into<String>, dims: Vec<usize>, values: &[T]) -> Self {
        Self { name: name.into(), dims, values: values.iter().map(|v| v.f64() as f32).collect() }
    }

    /// Copy into `dst`, checking the element count.
    pub fn copy_into<T: Real>(&self, dst: &mut [T]) -> Result<()> {
        if dst.len() != self.values.len() {
            return Err(NnError::Persist(format!(
                "`{}` has {} values, destination holds {}",
                self.name,
                self.values.len(),
                dst.len()
            )));
        }
        for (d, &v) in dst.iter_mut().zip(&self.values) {
            *d = T::of(v as f64);
        }
        Ok(())
    }
}

/// Anything whose full state (parameters and buffers) can be exported.
pub trait StateDict {
    fn export_state(&self) -> Vec<NamedTensor>;
    fn import_state(&mut self, tensors: &[NamedTensor]) -> Result<()>;
}

pub fn find<'a>(tensors: &'a [NamedTensor], name: &str) -> Result<&'a NamedTensor> {
    tensors
        .iter()
        .find(|t| t.name == name)
        .ok_or_else(|| NnError::Persist(format!("missing tensor `{name}`")))
}

pub fn save_state(dir: impl AsRef<Path>, tensors: &[NamedTensor]) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(csmri_io::IoError::from)?;
    let mut manifest = KvDocument::new();
    for t in tensors {
        let file = format!("{}.ptf", t.name);
        PtfTensor::real(t.dims.clone(), t.values.clone())?.save(dir.join(&file))?;
        manifest.set(&t.name, file);
    }
    manifest.save(dir.join(MANIFEST))?;
    Ok(())
}

pub fn load_state(dir: impl AsRef<Path>) -> Result<Vec<NamedTensor>> {
    let dir = dir.as_ref();
    let manifest = KvDocument::load(dir.join(MANIFEST))?;
    manifest
        .iter()
        .map(|(name, file)| {
            let t = PtfTensor::load(dir.join(file))?;
            Ok(NamedTensor { name: name.to_string(), dims: t.dims, values: t.values })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn save_and_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let tensors = vec![
            NamedTensor::from_slice("a.weight", vec![2, 2], &[1.0f64, 2.0, 3.0, 4.0]),
            NamedTensor::from_slice("a.bias", vec![2], &[0.5f32, -0.5]),
        ];
        save_state(dir.path(), &tensors).unwrap();
        let manifest = std::fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        assert_eq!(manifest, "a.weight=a.weight.ptf\na.bias=a.bias.ptf\n");
        assert_eq!(load_state(dir.path()).unwrap(), tensors);
        let mut dst = [0.0f64; 2];
        find(&tensors, "a.bias").unwrap().copy_into(&mut dst).unwrap();
        assert_eq!(dst, [0.5, -0.5]);
        assert!(find(&tensors, "nope").is_err());
        assert!(find(&tensors, "a.bias").unwrap().copy_into(&mut [0.0f64; 3]).is_err());
    }
}
