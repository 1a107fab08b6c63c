use crate::{NnError, Real, Result, Tensor};

/// Mean squared error over all elements and its gradient `2 (pred - target) / count`.
pub fn mse_loss<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    pred.same_shape(target, "mse_loss")?;
    let count = pred.len() as f64;
    let mut sum = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = p.f64() - t.f64();
            sum += d * d;
            T::of(2.0 * d / count)
        })
        .collect();
    Ok((sum / count, Tensor::new(pred.shape(), grad)?))
}

/// Mean squared error restricted to positions where `mask` is nonzero. An
/// empty mask gives zero loss and zero gradient.
pub fn masked_mse_loss<T: Real>(
    pred: &Tensor<T>,
    target: &Tensor<T>,
    mask: &Tensor<T>,
) -> Result<(f64, Tensor<T>)> {
    pred.same_shape(target, "masked_mse_loss")?;
    if mask.shape() != pred.shape() {
        return Err(NnError::Shape(format!("mask {:?} vs {:?}", mask.shape(), pred.shape())));
    }
    let count = mask.data().iter().filter(|&&m| m != T::zero()).count();
    if count == 0 {
        return Ok((0.0, Tensor::zeros(pred.shape())));
    }
    let count = count as f64;
    let mut sum = 0.0;
    let grad = pred
        .data()
        .iter()
        .zip(target.data())
        .zip(mask.data())
        .map(|((&p, &t), &m)| {
            if m == T::zero() {
                return T::zero();
            }
            let d = p.f64() - t.f64();
            sum += d * d;
            T::of(2.0 * d / count)
        })
        .collect();
    Ok((sum / count, Tensor::new(pred.shape(), grad)?))
}
