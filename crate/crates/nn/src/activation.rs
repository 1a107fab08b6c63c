use crate::{Real, Result, Tensor};

pub fn relu<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes the gradient where the forward input was strictly positive; the
/// subgradient at zero is taken as zero.
pub fn relu_backward<T: Real>(x: &Tensor<T>, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    x.same_shape(grad_out, "relu_backward")?;
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(x.shape(), data)
}
