//! 2D convolution with explicit backward, implemented as im2col + GEMM.

use super::gemm::matmul;
use crate::util::parallel::for_each_indexed_mut;
use ndarray::{Array1, Array2, Array4, ArrayView4, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Convolution layer carrying its own gradient and Adam buffers.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub w: Array4<f32>, // (out, in, k, k)
    pub b: Array1<f32>,
    pub stride: usize,
    pub pad: usize,
    gw: Array4<f32>,
    gb: Array1<f32>,
    adam_w: AdamBuf,
    adam_b: AdamBuf,
}

#[derive(Debug, Clone)]
struct AdamBuf {
    m: Vec<f32>,
    v: Vec<f32>,
}

impl AdamBuf {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

pub const ADAM_BETA1: f32 = 0.9;
pub const ADAM_BETA2: f32 = 0.999;
pub const ADAM_EPS: f32 = 1e-8;

/// One Adam update over a flat parameter slice.
pub(crate) fn adam_update(
    w: &mut [f32],
    g: &[f32],
    m: &mut [f32],
    v: &mut [f32],
    lr: f32,
    t: u32,
) {
    let bc1 = 1.0 - ADAM_BETA1.powi(t as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(t as i32);
    for i in 0..w.len() {
        m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
        v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
        let mhat = m[i] / bc1;
        let vhat = v[i] / bc2;
        w[i] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
    }
}

fn out_len(input: usize, k: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - k) / stride + 1
}

impl Conv2d {
    /// He-normal initialization; bias zero.
    pub fn new(
        c_in: usize,
        c_out: usize,
        k: usize,
        stride: usize,
        pad: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let std = (2.0 / (c_in * k * k) as f32).sqrt();
        let dist = Normal::new(0.0f32, std).unwrap();
        let w = Array4::from_shape_simple_fn((c_out, c_in, k, k), || dist.sample(rng));
        Self {
            b: Array1::zeros(c_out),
            gw: Array4::zeros(w.raw_dim()),
            gb: Array1::zeros(c_out),
            adam_w: AdamBuf::new(w.len()),
            adam_b: AdamBuf::new(c_out),
            w,
            stride,
            pad,
        }
    }

    pub fn kernel(&self) -> usize {
        self.w.shape()[2]
    }

    pub fn in_channels(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn out_channels(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        let k = self.kernel();
        (
            out_len(h, k, self.stride, self.pad),
            out_len(w, k, self.stride, self.pad),
        )
    }

    fn im2col(&self, x: ArrayView4<f32>) -> Array2<f32> {
        let (batch, c, h, w) = x.dim();
        let k = self.kernel();
        let (oh, ow) = self.output_hw(h, w);
        let mut cols = Array2::<f32>::zeros((batch * oh * ow, c * k * k));
        let x = &x;
        let (stride, pad) = (self.stride, self.pad);
        let mut rows: Vec<_> = cols.axis_chunks_iter_mut(Axis(0), oh * ow).collect();
        for_each_indexed_mut(&mut rows, |b, block| {
            for oy in 0..oh {
                for ox in 0..ow {
                    let mut row = block.row_mut(oy * ow + ox);
                    let mut col_idx = 0;
                    for ci in 0..c {
                        for ky in 0..k {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            for kx in 0..k {
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                    row[col_idx] = x[(b, ci, iy as usize, ix as usize)];
                                }
                                col_idx += 1;
                            }
                        }
                    }
                }
            }
        });
        cols
    }

    fn col2im(&self, gcols: &Array2<f32>, dims: (usize, usize, usize, usize)) -> Array4<f32> {
        let (batch, c, h, w) = dims;
        let k = self.kernel();
        let (oh, ow) = self.output_hw(h, w);
        let mut gx = Array4::<f32>::zeros(dims);
        let (stride, pad) = (self.stride, self.pad);
        let mut samples: Vec<_> = gx.axis_iter_mut(Axis(0)).collect();
        for_each_indexed_mut(&mut samples, |b, gxb| {
            for oy in 0..oh {
                for ox in 0..ow {
                    let row = gcols.row(b * oh * ow + oy * ow + ox);
                    let mut col_idx = 0;
                    for ci in 0..c {
                        for ky in 0..k {
                            let iy = (oy * stride + ky) as isize - pad as isize;
                            for kx in 0..k {
                                let ix = (ox * stride + kx) as isize - pad as isize;
                                if iy >= 0 && ix >= 0 && (iy as usize) < h && (ix as usize) < w {
                                    gxb[(ci, iy as usize, ix as usize)] += row[col_idx];
                                }
                                col_idx += 1;
                            }
                        }
                    }
                }
            }
        });
        gx
    }

    pub fn forward(&self, x: &Array4<f32>) -> Array4<f32> {
        let (batch, _, h, w) = x.dim();
        let (oh, ow) = self.output_hw(h, w);
        let c_out = self.out_channels();
        let cols = self.im2col(x.view());
        let w2 = self
            .w
            .view()
            .into_shape_with_order((c_out, self.w.len() / c_out))
            .unwrap();
        let y2 = matmul(cols.view(), w2.t()); // (batch*oh*ow, c_out)
        let mut y = Array4::<f32>::zeros((batch, c_out, oh, ow));
        let bias = &self.b;
        let mut samples: Vec<_> = y.axis_iter_mut(Axis(0)).collect();
        for_each_indexed_mut(&mut samples, |b, yb| {
            for o in 0..c_out {
                let bo = bias[o];
                for oy in 0..oh {
                    for ox in 0..ow {
                        yb[(o, oy, ox)] = y2[(b * oh * ow + oy * ow + ox, o)] + bo;
                    }
                }
            }
        });
        y
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Array4<f32>, gy: &Array4<f32>) -> Array4<f32> {
        let dims = x.dim();
        let (batch, _, h, w) = dims;
        let (oh, ow) = self.output_hw(h, w);
        let c_out = self.out_channels();
        debug_assert_eq!(gy.dim(), (batch, c_out, oh, ow));

        // (batch*oh*ow, c_out) view of gy
        let mut gy2 = Array2::<f32>::zeros((batch * oh * ow, c_out));
        {
            let mut rows: Vec<_> = gy2.axis_chunks_iter_mut(Axis(0), oh * ow).collect();
            for_each_indexed_mut(&mut rows, |b, block| {
                for o in 0..c_out {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            block[(oy * ow + ox, o)] = gy[(b, o, oy, ox)];
                        }
                    }
                }
            });
        }

        let cols = self.im2col(x.view());
        let gw2 = matmul(gy2.t(), cols.view()); // (c_out, c_in*k*k)
        let gw4 = gw2.into_shape_with_order(self.w.raw_dim()).unwrap();
        self.gw += &gw4;
        self.gb += &gy2.sum_axis(Axis(0));

        let w2 = self
            .w
            .view()
            .into_shape_with_order((c_out, self.w.len() / c_out))
            .unwrap();
        let gcols = matmul(gy2.view(), w2); // (batch*oh*ow, c_in*k*k)
        self.col2im(&gcols, (batch, dims.1, h, w))
    }

    pub fn zero_grad(&mut self) {
        self.gw.fill(0.0);
        self.gb.fill(0.0);
    }

    pub fn adam_step(&mut self, lr: f32, t: u32) {
        adam_update(
            self.w.as_slice_mut().unwrap(),
            self.gw.as_slice().unwrap(),
            &mut self.adam_w.m,
            &mut self.adam_w.v,
            lr,
            t,
        );
        adam_update(
            self.b.as_slice_mut().unwrap(),
            self.gb.as_slice().unwrap(),
            &mut self.adam_b.m,
            &mut self.adam_b.v,
            lr,
            t,
        );
    }

    /// Parameter tensors in serialization order (weights, then bias).
    pub fn param_slices(&self) -> Vec<&[f32]> {
        vec![self.w.as_slice().unwrap(), self.b.as_slice().unwrap()]
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f32]> {
        vec![
            self.w.as_slice_mut().unwrap(),
            self.b.as_slice_mut().unwrap(),
        ]
    }

    /// Accumulated gradients, same order as `param_slices`.
    pub fn grad_slices(&self) -> Vec<&[f32]> {
        vec![self.gw.as_slice().unwrap(), self.gb.as_slice().unwrap()]
    }
}

/// Fully connected layer (used as the classifier head).
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: Array2<f32>, // (out, in)
    pub b: Array1<f32>,
    gw: Array2<f32>,
    gb: Array1<f32>,
    adam_w: AdamBuf,
    adam_b: AdamBuf,
}

impl Linear {
    pub fn new(c_in: usize, c_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (1.0 / c_in as f32).sqrt();
        let w = Array2::from_shape_simple_fn((c_out, c_in), || rng.gen_range(-bound..bound));
        Self {
            b: Array1::zeros(c_out),
            gw: Array2::zeros(w.raw_dim()),
            gb: Array1::zeros(c_out),
            adam_w: AdamBuf::new(w.len()),
            adam_b: AdamBuf::new(c_out),
            w,
        }
    }

    pub fn forward(&self, x: &Array2<f32>) -> Array2<f32> {
        let mut y = matmul(x.view(), self.w.t());
        for mut row in y.axis_iter_mut(Axis(0)) {
            row += &self.b;
        }
        y
    }

    pub fn backward(&mut self, x: &Array2<f32>, gy: &Array2<f32>) -> Array2<f32> {
        self.gw += &matmul(gy.t(), x.view());
        self.gb += &gy.sum_axis(Axis(0));
        matmul(gy.view(), self.w.view())
    }

    pub fn zero_grad(&mut self) {
        self.gw.fill(0.0);
        self.gb.fill(0.0);
    }

    pub fn adam_step(&mut self, lr: f32, t: u32) {
        adam_update(
            self.w.as_slice_mut().unwrap(),
            self.gw.as_slice().unwrap(),
            &mut self.adam_w.m,
            &mut self.adam_w.v,
            lr,
            t,
        );
        adam_update(
            self.b.as_slice_mut().unwrap(),
            self.gb.as_slice().unwrap(),
            &mut self.adam_b.m,
            &mut self.adam_b.v,
            lr,
            t,
        );
    }

    pub fn param_slices(&self) -> Vec<&[f32]> {
        vec![self.w.as_slice().unwrap(), self.b.as_slice().unwrap()]
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f32]> {
        vec![
            self.w.as_slice_mut().unwrap(),
            self.b.as_slice_mut().unwrap(),
        ]
    }
}
