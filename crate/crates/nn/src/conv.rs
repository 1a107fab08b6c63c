//! 2D convolution (cross-correlation) with "same" zero padding.
//!
//! Weights are stored `(kh, kw, n_in, n_out)` row-major, which is exactly the
//! `K x n_out` matrix (K = kh·kw·n_in) the im2col formulation multiplies by.

use crate::tensor::debug_check_finite;
use crate::{NnError, Real, Result, Tensor};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T> {
    pub kh: usize,
    pub kw: usize,
    pub n_in: usize,
    pub n_out: usize,
    /// `(kh, kw, n_in, n_out)` row-major.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads<T> {
    pub input: Tensor<T>,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Real> ConvParams<T> {
    pub fn zeros(kh: usize, kw: usize, n_in: usize, n_out: usize) -> Result<Self> {
        if !matches!(kh, 1 | 3) || !matches!(kw, 1 | 3) {
            return Err(NnError::Kernel(kh, kw));
        }
        Ok(Self {
            kh,
            kw,
            n_in,
            n_out,
            weights: vec![T::zero(); kh * kw * n_in * n_out],
            bias: vec![T::zero(); n_out],
        })
    }

    pub fn weight_dims(&self) -> [usize; 4] {
        [self.kh, self.kw, self.n_in, self.n_out]
    }

    /// Rows of the im2col matrix.
    pub fn patch_len(&self) -> usize {
        self.kh * self.kw * self.n_in
    }

    pub fn weight_index(&self, ky: usize, kx: usize, ci: usize, co: usize) -> usize {
        ((ky * self.kw + kx) * self.n_in + ci) * self.n_out + co
    }

    fn validate(&self, x: &Tensor<T>) -> Result<()> {
        if x.channels() != self.n_in {
            return Err(NnError::Channels { expected: self.n_in, got: x.channels() });
        }
        if x.height() < self.kh || x.width() < self.kw {
            return Err(NnError::Shape(format!(
                "input {}x{} smaller than kernel {}x{}",
                x.height(),
                x.width(),
                self.kh,
                self.kw
            )));
        }
        if self.weights.len() != self.patch_len() * self.n_out || self.bias.len() != self.n_out {
            return Err(NnError::Shape("conv parameter buffers inconsistent with dims".into()));
        }
        Ok(())
    }
}

/// Unfold one `(C, H, W)` item into a `(kh·kw·C) x (H·W)` matrix.
fn im2col<T: Real>(item: &[T], c: usize, h: usize, w: usize, kh: usize, kw: usize, col: &mut [T]) {
    let (ph, pw) = ((kh - 1) / 2, (kw - 1) / 2);
    let hw = h * w;
    for ky in 0..kh {
        for kx in 0..kw {
            for ci in 0..c {
                let row = (ky * kw + kx) * c + ci;
                let dst = &mut col[row * hw..(row + 1) * hw];
                let src = &item[ci * hw..(ci + 1) * hw];
                for oy in 0..h {
                    let out = &mut dst[oy * w..(oy + 1) * w];
                    let iy = oy as isize + ky as isize - ph as isize;
                    if iy < 0 || iy >= h as isize {
                        out.fill(T::zero());
                        continue;
                    }
                    let src_row = &src[iy as usize * w..(iy as usize + 1) * w];
                    let shift = kx as isize - pw as isize;
                    for (ox, o) in out.iter_mut().enumerate() {
                        let ix = ox as isize + shift;
                        *o = if ix < 0 || ix >= w as isize { T::zero() } else { src_row[ix as usize] };
                    }
                }
            }
        }
    }
}

/// Fold a column-gradient matrix back onto a `(C, H, W)` gradient item.
fn col2im<T: Real>(col: &[T], c: usize, h: usize, w: usize, kh: usize, kw: usize, item: &mut [T]) {
    let (ph, pw) = ((kh - 1) / 2, (kw - 1) / 2);
    let hw = h * w;
    for ky in 0..kh {
        for kx in 0..kw {
            for ci in 0..c {
                let row = (ky * kw + kx) * c + ci;
                let src = &col[row * hw..(row + 1) * hw];
                let dst = &mut item[ci * hw..(ci + 1) * hw];
                for oy in 0..h {
                    let iy = oy as isize + ky as isize - ph as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst_row = &mut dst[iy as usize * w..(iy as usize + 1) * w];
                    let shift = kx as isize - pw as isize;
                    for (ox, &g) in src[oy * w..(oy + 1) * w].iter().enumerate() {
                        let ix = ox as isize + shift;
                        if ix >= 0 && ix < w as isize {
                            dst_row[ix as usize] += g;
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d<T: Real>(x: &Tensor<T>, p: &ConvParams<T>) -> Result<Tensor<T>> {
    p.validate(x)?;
    let [n, c, h, w] = x.shape();
    let hw = h * w;
    let k = p.patch_len();
    let pointwise = p.kh == 1 && p.kw == 1;
    let mut out = Tensor::zeros([n, p.n_out, h, w]);
    let mut col = if pointwise { Vec::new() } else { vec![T::zero(); k * hw] };
    for i in 0..n {
        let item = x.item(i);
        let b: &[T] = if pointwise {
            item
        } else {
            im2col(item, c, h, w, p.kh, p.kw, &mut col);
            &col
        };
        let o = out.item_mut(i);
        // out (n_out x hw) = W^T (n_out x K) * col (K x hw)
        T::gemm(
            p.n_out,
            k,
            hw,
            T::one(),
            &p.weights,
            (1, p.n_out as isize),
            b,
            (hw as isize, 1),
            T::zero(),
            o,
            (hw as isize, 1),
        );
        for (plane, &bias) in o.chunks_exact_mut(hw).zip(&p.bias) {
            for v in plane {
                *v += bias;
            }
        }
    }
    debug_check_finite(&out, "conv2d");
    Ok(out)
}

/// Gradients of a convolution given its input and the upstream gradient.
pub fn conv2d_backward<T: Real>(
    x: &Tensor<T>,
    p: &ConvParams<T>,
    grad_out: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    p.validate(x)?;
    let [n, c, h, w] = x.shape();
    if grad_out.shape() != [n, p.n_out, h, w] {
        return Err(NnError::Shape(format!(
            "conv backward: grad {:?} for input {:?}",
            grad_out.shape(),
            x.shape()
        )));
    }
    let hw = h * w;
    let k = p.patch_len();
    let pointwise = p.kh == 1 && p.kw == 1;
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = vec![T::zero(); k * p.n_out];
    let mut db = vec![0.0f64; p.n_out];
    let mut col = if pointwise { Vec::new() } else { vec![T::zero(); k * hw] };
    let mut dcol = vec![T::zero(); k * hw];
    for i in 0..n {
        let go = grad_out.item(i);
        for (acc, plane) in db.iter_mut().zip(go.chunks_exact(hw)) {
            *acc += plane.iter().map(|v| v.f64()).sum::<f64>();
        }
        let item = x.item(i);
        let b: &[T] = if pointwise {
            item
        } else {
            im2col(item, c, h, w, p.kh, p.kw, &mut col);
            &col
        };
        // dW (K x n_out) += col (K x hw) * go^T (hw x n_out)
        T::gemm(
            k,
            hw,
            p.n_out,
            T::one(),
            b,
            (hw as isize, 1),
            go,
            (1, hw as isize),
            T::one(),
            &mut dw,
            (p.n_out as isize, 1),
        );
        // dcol (K x hw) = W (K x n_out) * go (n_out x hw)
        T::gemm(
            k,
            p.n_out,
            hw,
            T::one(),
            &p.weights,
            (p.n_out as isize, 1),
            go,
            (hw as isize, 1),
            T::zero(),
            &mut dcol,
            (hw as isize, 1),
        );
        let dxi = dx.item_mut(i);
        if pointwise {
            dxi.copy_from_slice(&dcol);
        } else {
            col2im(&dcol, c, h, w, p.kh, p.kw, dxi);
        }
    }
    debug_check_finite(&dx, "conv2d_backward");
    Ok(ConvGrads { input: dx, weights: dw, bias: db.into_iter().map(T::of).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{check_gradient, random_tensor, GRAD_TOL};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(kh: usize, n_in: usize, n_out: usize, seed: u64) -> ConvParams<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ConvParams::zeros(kh, kh, n_in, n_out).unwrap();
        p.weights.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        p.bias.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        p
    }

    /// Direct nested-loop cross-correlation.
    fn naive_conv(x: &Tensor<f64>, p: &ConvParams<f64>) -> Tensor<f64> {
        let [n, _, h, w] = x.shape();
        let (ph, pw) = ((p.kh - 1) / 2, (p.kw - 1) / 2);
        let mut out = Tensor::zeros([n, p.n_out, h, w]);
        for b in 0..n {
            for co in 0..p.n_out {
                for y in 0..h {
                    for xx in 0..w {
                        let mut acc = p.bias[co];
                        for ci in 0..p.n_in {
                            for ky in 0..p.kh {
                                for kx in 0..p.kw {
                                    let iy = y as isize + ky as isize - ph as isize;
                                    let ix = xx as isize + kx as isize - pw as isize;
                                    if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                        acc += p.weights[p.weight_index(ky, kx, ci, co)]
                                            * x.at(b, ci, iy as usize, ix as usize);
                                    }
                                }
                            }
                        }
                        let o = out.offset(b, co, y, xx);
                        out.data_mut()[o] = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn identity_pointwise_kernel() {
        let x = random_tensor([2, 1, 5, 4], 1);
        let mut p = ConvParams::zeros(1, 1, 1, 1).unwrap();
        p.weights[0] = 1.0;
        assert_eq!(conv2d(&x, &p).unwrap(), x);
    }

    #[test]
    fn zero_kernel_gives_bias() {
        let x = random_tensor([1, 2, 6, 6], 2);
        let mut p = ConvParams::zeros(3, 3, 2, 3).unwrap();
        p.bias = vec![0.5, -1.0, 2.0];
        let y = conv2d(&x, &p).unwrap();
        assert_eq!(y.shape(), [1, 3, 6, 6]);
        for co in 0..3 {
            assert!(y.plane(0, co).iter().all(|&v| v == p.bias[co]));
        }
    }

    #[test]
    fn matches_naive_loops() {
        for (kh, n_in, n_out) in [(3, 2, 3), (1, 3, 2), (3, 1, 4)] {
            let x = random_tensor([2, n_in, 5, 7], 9);
            let p = random_params(kh, n_in, n_out, 4);
            let fast = conv2d(&x, &p).unwrap();
            let slow = naive_conv(&x, &p);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_channel_mismatch_and_bad_kernel() {
        let x = random_tensor([1, 2, 4, 4], 0);
        let p = ConvParams::<f64>::zeros(3, 3, 3, 1).unwrap();
        assert!(matches!(conv2d(&x, &p), Err(NnError::Channels { expected: 3, got: 2 })));
        assert!(ConvParams::<f64>::zeros(5, 5, 1, 1).is_err());
    }

    #[test]
    fn gradient_check_3x3() {
        for seed in 0..5 {
            let x = random_tensor([1, 2, 6, 6], seed);
            let p = random_params(3, 2, 3, seed + 100);
            let proj = random_tensor([1, 3, 6, 6], seed + 200);
            let grads = conv2d_backward(&x, &p, &proj).unwrap();
            let loss = |y: &Tensor<f64>| -> f64 {
                y.data().iter().zip(proj.data()).map(|(a, b)| a * b).sum()
            };
            let rx = check_gradient(x.data(), grads.input.data(), |v| {
                loss(&conv2d(&Tensor::new(x.shape(), v.to_vec()).unwrap(), &p).unwrap())
            });
            assert!(rx < GRAD_TOL, "input rel err {rx}");
            let rw = check_gradient(&p.weights, &grads.weights, |v| {
                let q = ConvParams { weights: v.to_vec(), ..p.clone() };
                loss(&conv2d(&x, &q).unwrap())
            });
            assert!(rw < GRAD_TOL, "weight rel err {rw}");
            let rb = check_gradient(&p.bias, &grads.bias, |v| {
                let q = ConvParams { bias: v.to_vec(), ..p.clone() };
                loss(&conv2d(&x, &q).unwrap())
            });
            assert!(rb < GRAD_TOL, "bias rel err {rb}");
        }
    }

    #[test]
    fn same_padding_preserves_shape() {
        let x = random_tensor([3, 2, 8, 4], 5);
        for k in [1, 3] {
            let p = random_params(k, 2, 5, 1);
            assert_eq!(conv2d(&x, &p).unwrap().shape(), [3, 5, 8, 4]);
        }
    }
}
