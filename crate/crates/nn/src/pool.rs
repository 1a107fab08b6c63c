//! 2x2 / stride-2 max pooling, switch-based unpooling and nearest-neighbour
//! upsampling.

use crate::{NnError, Real, Result, Shape, Tensor};

/// Argmax position inside each 2x2 patch, `0..4` in row-major order
/// (0 = top-left, 3 = bottom-right). Shape is that of the pooled output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolSwitches {
    shape: Shape,
    index: Vec<u8>,
}

impl PoolSwitches {
    pub fn new(shape: Shape, index: Vec<u8>) -> Result<Self> {
        if index.len() != shape.iter().product::<usize>() || index.iter().any(|&i| i > 3) {
            return Err(NnError::Shape(format!("invalid switches for {shape:?}")));
        }
        Ok(Self { shape, index })
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn indices(&self) -> &[u8] {
        &self.index
    }
}

pub fn max_pool_2x2<T: Real>(x: &Tensor<T>) -> Result<(Tensor<T>, PoolSwitches)> {
    let [n, c, h, w] = x.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(NnError::OddSpatial { h, w });
    }
    let (oh, ow) = (h / 2, w / 2);
    let shape = [n, c, oh, ow];
    let mut out = Vec::with_capacity(n * c * oh * ow);
    let mut index = Vec::with_capacity(out.capacity());
    for b in 0..n {
        for ch in 0..c {
            let plane = x.plane(b, ch);
            for oy in 0..oh {
                for ox in 0..ow {
                    let base = 2 * oy * w + 2 * ox;
                    let cells = [plane[base], plane[base + 1], plane[base + w], plane[base + w + 1]];
                    let mut best = 0;
                    for k in 1..4 {
                        // strict comparison keeps the lowest index on ties
                        if cells[k] > cells[best] {
                            best = k;
                        }
                    }
                    out.push(cells[best]);
                    index.push(best as u8);
                }
            }
        }
    }
    Ok((Tensor::new(shape, out)?, PoolSwitches { shape, index }))
}

fn patch_offset(k: u8, w: usize) -> usize {
    (k as usize >> 1) * w + (k as usize & 1)
}

/// Route the gradient of each pooled output to its argmax cell.
pub fn max_pool_2x2_backward<T: Real>(
    grad_out: &Tensor<T>,
    switches: &PoolSwitches,
) -> Result<Tensor<T>> {
    unpool_2x2(grad_out, switches)
}

/// Place each value at its recorded switch position in a 2x upsampled grid,
/// zeros elsewhere.
pub fn unpool_2x2<T: Real>(x: &Tensor<T>, switches: &PoolSwitches) -> Result<Tensor<T>> {
    if x.shape() != switches.shape {
        return Err(NnError::Switches { switches: switches.shape, input: x.shape() });
    }
    let [n, c, h, w] = x.shape();
    let ow = 2 * w;
    let mut out = Tensor::zeros([n, c, 2 * h, ow]);
    let plane_out = 4 * h * w;
    let mut i = 0;
    for p in 0..n * c {
        let base_out = p * plane_out;
        for y in 0..h {
            for xx in 0..w {
                let dst = base_out + 2 * y * ow + 2 * xx + patch_offset(switches.index[i], ow);
                out.data_mut()[dst] = x.data()[i];
                i += 1;
            }
        }
    }
    Ok(out)
}

/// Gather the gradient from the switch positions.
pub fn unpool_2x2_backward<T: Real>(
    grad_out: &Tensor<T>,
    switches: &PoolSwitches,
) -> Result<Tensor<T>> {
    let [n, c, h, w] = switches.shape;
    if grad_out.shape() != [n, c, 2 * h, 2 * w] {
        return Err(NnError::Switches { switches: switches.shape, input: grad_out.shape() });
    }
    let ow = 2 * w;
    let plane_out = 4 * h * w;
    let mut data = Vec::with_capacity(n * c * h * w);
    let mut i = 0;
    for p in 0..n * c {
        let base_out = p * plane_out;
        for y in 0..h {
            for xx in 0..w {
                let src = base_out + 2 * y * ow + 2 * xx + patch_offset(switches.index[i], ow);
                data.push(grad_out.data()[src]);
                i += 1;
            }
        }
    }
    Tensor::new(switches.shape, data)
}

/// Repeat every value over a 2x2 block.
pub fn upsample_nearest_2x<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let [n, c, h, w] = x.shape();
    let ow = 2 * w;
    let mut out = Tensor::zeros([n, c, 2 * h, ow]);
    for p in 0..n * c {
        let src = &x.data()[p * h * w..(p + 1) * h * w];
        let dst = &mut out.data_mut()[p * 4 * h * w..(p + 1) * 4 * h * w];
        for y in 0..2 * h {
            for xx in 0..ow {
                dst[y * ow + xx] = src[(y / 2) * w + xx / 2];
            }
        }
    }
    out
}

pub fn upsample_nearest_2x_backward<T: Real>(grad_out: &Tensor<T>) -> Result<Tensor<T>> {
    let [n, c, h2, w2] = grad_out.shape();
    if h2 % 2 != 0 || w2 % 2 != 0 {
        return Err(NnError::OddSpatial { h: h2, w: w2 });
    }
    let (h, w) = (h2 / 2, w2 / 2);
    let mut out = Tensor::zeros([n, c, h, w]);
    for p in 0..n * c {
        let src = &grad_out.data()[p * h2 * w2..(p + 1) * h2 * w2];
        let dst = &mut out.data_mut()[p * h * w..(p + 1) * h * w];
        for y in 0..h2 {
            for xx in 0..w2 {
                dst[(y / 2) * w + xx / 2] += src[y * w2 + xx];
            }
        }
    }
    Ok(out)
}
