use crate::{NnError, Real, Result};

/// One learnable tensor as seen by an optimizer.
pub struct ParamSlot<'a, T> {
    pub name: &'a str,
    pub value: &'a mut [T],
    pub grad: &'a mut [T],
}

/// Anything holding learnable tensors. `visit_params` must always yield the
/// same tensors in the same order.
pub trait Parameters<T: Real> {
    fn visit_params(&mut self, f: &mut dyn FnMut(ParamSlot<'_, T>));

    fn zero_grads(&mut self) {
        self.visit_params(&mut |slot| slot.grad.fill(T::zero()));
    }

    fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |slot| n += slot.value.len());
        n
    }
}

/// `v <- momentum * v - lr * g; p <- p + v`, elementwise.
pub fn sgd_momentum_step<T: Real>(
    params: &mut [T],
    grads: &[T],
    velocity: &mut [T],
    lr: f64,
    momentum: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != velocity.len() {
        return Err(NnError::Shape(format!(
            "sgd: {} params, {} grads, {} velocities",
            params.len(),
            grads.len(),
            velocity.len()
        )));
    }
    let (lr, mu) = (T::of(lr), T::of(momentum));
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = mu * *v - lr * g;
        *p += *v;
    }
    Ok(())
}

/// Momentum state for a fixed, ordered list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdMomentum<T> {
    pub momentum: f64,
    velocity: Vec<Vec<T>>,
}

impl<T: Real> SgdMomentum<T> {
    pub fn new(momentum: f64) -> Self {
        Self { momentum, velocity: Vec::new() }
    }

    /// Update every parameter of `model`. Velocities are created on the
    /// first call and must keep matching shapes afterwards.
    pub fn step<P: Parameters<T> + ?Sized>(&mut self, model: &mut P, lr: f64) -> Result<()> {
        let init = self.velocity.is_empty();
        let momentum = self.momentum;
        let velocity = &mut self.velocity;
        let mut index = 0;
        let mut failure = None;
        model.visit_params(&mut |slot| {
            if failure.is_some() {
                return;
            }
            if init {
                velocity.push(vec![T::zero(); slot.value.len()]);
            }
            match velocity.get_mut(index) {
                Some(v) => {
                    if let Err(e) = sgd_momentum_step(slot.value, slot.grad, v, lr, momentum) {
                        failure = Some(e);
                    }
                }
                None => failure = Some(NnError::Shape(format!("optimizer has no state for `{}`", slot.name))),
            }
            index += 1;
        });
        if let Some(e) = failure {
            return Err(e);
        }
        if index != self.velocity.len() {
            return Err(NnError::Shape(format!(
                "optimizer tracks {} tensors, model has {index}",
                self.velocity.len()
            )));
        }
        Ok(())
    }

    pub fn velocities(&self) -> &[Vec<T>] {
        &self.velocity
    }

    pub fn set_velocities(&mut self, velocity: Vec<Vec<T>>) {
        self.velocity = velocity;
    }
}
