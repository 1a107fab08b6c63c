use crate::{NnError, Real, Result, Tensor};

/// Concatenate along channels, `a` first.
pub fn concat_channels<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let [na, ca, ha, wa] = a.shape();
    let [nb, cb, hb, wb] = b.shape();
    if (na, ha, wa) != (nb, hb, wb) {
        return Err(NnError::Shape(format!("concat: {:?} vs {:?}", a.shape(), b.shape())));
    }
    let mut data = Vec::with_capacity(a.len() + b.len());
    for i in 0..na {
        data.extend_from_slice(a.item(i));
        data.extend_from_slice(b.item(i));
    }
    Tensor::new([na, ca + cb, ha, wa], data)
}

/// Split a concatenated gradient back into the parts for `a` and `b`.
pub fn concat_channels_backward<T: Real>(
    grad_out: &Tensor<T>,
    channels_a: usize,
) -> Result<(Tensor<T>, Tensor<T>)> {
    let [n, c, h, w] = grad_out.shape();
    if channels_a > c {
        return Err(NnError::Shape(format!("split at {channels_a} of {c} channels")));
    }
    let split = channels_a * h * w;
    let mut ga = Vec::with_capacity(n * split);
    let mut gb = Vec::with_capacity(grad_out.len() - n * split);
    for i in 0..n {
        let item = grad_out.item(i);
        ga.extend_from_slice(&item[..split]);
        gb.extend_from_slice(&item[split..]);
    }
    Ok((Tensor::new([n, channels_a, h, w], ga)?, Tensor::new([n, c - channels_a, h, w], gb)?))
}

/// Elementwise sum, used by the additive skip variant. Its backward passes
/// the gradient unchanged to both operands.
pub fn add_tensors<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    a.same_shape(b, "add")?;
    Tensor::new(a.shape(), a.data().iter().zip(b.data()).map(|(&x, &y)| x + y).collect())
}
