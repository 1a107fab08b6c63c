use crate::{NnError, Real, Result};

/// `(N, C, H, W)`
pub type Shape = [usize; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Shape,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn new(shape: Shape, data: Vec<T>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(NnError::Shape(format!("{shape:?} needs {len} values, got {}", data.len())));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        Self { shape, data: vec![T::zero(); shape.iter().product()] }
    }

    pub fn filled(shape: Shape, v: T) -> Self {
        Self { shape, data: vec![v; shape.iter().product()] }
    }

    pub fn from_f64(shape: Shape, values: &[f64]) -> Result<Self> {
        Self::new(shape, values.iter().map(|&v| T::of(v)).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|v| v.f64()).collect()
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn batch(&self) -> usize {
        self.shape[0]
    }

    pub fn channels(&self) -> usize {
        self.shape[1]
    }

    pub fn height(&self) -> usize {
        self.shape[2]
    }

    pub fn width(&self) -> usize {
        self.shape[3]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn offset(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        let [_, cc, h, w] = self.shape;
        ((n * cc + c) * h + y) * w + x
    }

    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> T {
        self.data[self.offset(n, c, y, x)]
    }

    /// All channels of batch item `n`, contiguous.
    pub fn item(&self, n: usize) -> &[T] {
        let stride = self.shape[1] * self.shape[2] * self.shape[3];
        &self.data[n * stride..(n + 1) * stride]
    }

    pub fn item_mut(&mut self, n: usize) -> &mut [T] {
        let stride = self.shape[1] * self.shape[2] * self.shape[3];
        &mut self.data[n * stride..(n + 1) * stride]
    }

    pub fn plane(&self, n: usize, c: usize) -> &[T] {
        let hw = self.shape[2] * self.shape[3];
        let start = (n * self.shape[1] + c) * hw;
        &self.data[start..start + hw]
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { shape: self.shape, data: self.data.iter().map(|&v| f(v)).collect() }
    }

    pub fn same_shape(&self, other: &Self, what: &str) -> Result<()> {
        if self.shape != other.shape {
            return Err(NnError::Shape(format!("{what}: {:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(())
    }

    /// Stack single-item tensors along the batch axis.
    pub fn stack(items: &[&Tensor<T>]) -> Result<Self> {
        let first = items.first().ok_or_else(|| NnError::Shape("stack of nothing".into()))?;
        let [_, c, h, w] = first.shape;
        let mut data = Vec::with_capacity(items.len() * c * h * w);
        let mut n = 0;
        for t in items {
            if t.shape[1..] != first.shape[1..] {
                return Err(NnError::Shape(format!("stack: {:?} vs {:?}", t.shape, first.shape)));
            }
            data.extend_from_slice(&t.data);
            n += t.shape[0];
        }
        Ok(Self { shape: [n, c, h, w], data })
    }

    /// Split along the batch axis into single-item tensors.
    pub fn unstack(&self) -> Vec<Self> {
        let [n, c, h, w] = self.shape;
        (0..n)
            .map(|i| Self { shape: [1, c, h, w], data: self.item(i).to_vec() })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn sum_sq(&self) -> f64 {
        self.data.iter().map(|v| v.f64() * v.f64()).sum()
    }
}

/// Debug-build guard that an op produced only finite values.
#[inline]
pub(crate) fn debug_check_finite<T: Real>(t: &Tensor<T>, op: &str) {
    debug_assert!(t.all_finite(), "{op} produced a non-finite value");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks_length() {
        assert!(Tensor::<f64>::new([1, 2, 2, 2], vec![0.0; 7]).is_err());
        let t = Tensor::<f64>::new([2, 1, 1, 3], (0..6).map(|v| v as f64).collect()).unwrap();
        assert_eq!(t.at(1, 0, 0, 2), 5.0);
        assert_eq!(t.item(1), &[3.0, 4.0, 5.0]);
    }

    #[test]
    fn stack_unstack() {
        let a = Tensor::<f32>::filled([1, 2, 2, 2], 1.0);
        let b = Tensor::<f32>::filled([1, 2, 2, 2], 2.0);
        let s = Tensor::stack(&[&a, &b]).unwrap();
        assert_eq!(s.shape(), [2, 2, 2, 2]);
        assert_eq!(s.unstack(), vec![a, b]);
        assert!(Tensor::stack(&[&Tensor::<f32>::zeros([1, 1, 2, 2]), &Tensor::zeros([1, 2, 2, 2])]).is_err());
    }
}
