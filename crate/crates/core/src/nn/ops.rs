//! Elementwise ops, pooling, bilinear resampling, and losses with explicit
//! gradients.

use crate::util::parallel::for_each_indexed_mut;
use ndarray::{Array2, Array3, Array4, Axis};

pub fn relu(x: &Array4<f32>) -> Array4<f32> {
    x.mapv(|v| v.max(0.0))
}

/// Gradient of relu given the pre-activation input.
pub fn relu_backward(x: &Array4<f32>, gy: &Array4<f32>) -> Array4<f32> {
    let mut gx = gy.clone();
    gx.zip_mut_with(x, |g, &v| {
        if v <= 0.0 {
            *g = 0.0;
        }
    });
    gx
}

/// Spatial mean per channel: (B,C,H,W) -> (B,C).
pub fn global_avg_pool(x: &Array4<f32>) -> Array2<f32> {
    let (b, c, h, w) = x.dim();
    let mut out = Array2::<f32>::zeros((b, c));
    let inv = 1.0 / (h * w) as f32;
    for bi in 0..b {
        for ci in 0..c {
            let mut acc = 0.0f32;
            for y in 0..h {
                for xx in 0..w {
                    acc += x[(bi, ci, y, xx)];
                }
            }
            out[(bi, ci)] = acc * inv;
        }
    }
    out
}

pub fn global_avg_pool_backward(gy: &Array2<f32>, dims: (usize, usize, usize, usize)) -> Array4<f32> {
    let (_, _, h, w) = dims;
    let inv = 1.0 / (h * w) as f32;
    let mut gx = Array4::<f32>::zeros(dims);
    for ((bi, ci, _, _), g) in gx.indexed_iter_mut() {
        *g = gy[(bi, ci)] * inv;
    }
    gx
}

/// Precomputed 2-tap interpolation along one axis (half-pixel convention).
#[derive(Debug, Clone)]
pub struct ResizeTaps {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
    pub frac: Vec<f32>,
}

pub fn resize_taps(in_len: usize, out_len: usize) -> ResizeTaps {
    let scale = in_len as f32 / out_len as f32;
    let mut lo = Vec::with_capacity(out_len);
    let mut hi = Vec::with_capacity(out_len);
    let mut frac = Vec::with_capacity(out_len);
    for o in 0..out_len {
        let src = ((o as f32 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f32);
        let l = src.floor() as usize;
        let h = (l + 1).min(in_len - 1);
        lo.push(l);
        hi.push(h);
        frac.push(src - l as f32);
    }
    ResizeTaps { lo, hi, frac }
}

/// Bilinear resize of (B,C,H,W) to (out_h, out_w).
pub fn bilinear_resize(x: &Array4<f32>, out_h: usize, out_w: usize) -> Array4<f32> {
    let (b, c, h, w) = x.dim();
    if (h, w) == (out_h, out_w) {
        return x.clone();
    }
    let ty = resize_taps(h, out_h);
    let tx = resize_taps(w, out_w);
    let mut out = Array4::<f32>::zeros((b, c, out_h, out_w));
    let mut out_flat = out
        .view_mut()
        .into_shape_with_order((b * c, out_h, out_w))
        .unwrap();
    let mut planes: Vec<_> = out_flat.axis_iter_mut(Axis(0)).collect();
    let xf = x
        .view()
        .into_shape_with_order((b * c, h, w))
        .unwrap();
    for_each_indexed_mut(&mut planes, |p, plane| {
        let src = xf.index_axis(Axis(0), p);
        for oy in 0..out_h {
            let (y0, y1, fy) = (ty.lo[oy], ty.hi[oy], ty.frac[oy]);
            for ox in 0..out_w {
                let (x0, x1, fx) = (tx.lo[ox], tx.hi[ox], tx.frac[ox]);
                let top = src[(y0, x0)] * (1.0 - fx) + src[(y0, x1)] * fx;
                let bot = src[(y1, x0)] * (1.0 - fx) + src[(y1, x1)] * fx;
                plane[(oy, ox)] = top * (1.0 - fy) + bot * fy;
            }
        }
    });
    out
}

/// Adjoint of `bilinear_resize`: scatters output gradients back to input
/// positions with the same taps.
pub fn bilinear_resize_backward(
    gy: &Array4<f32>,
    in_h: usize,
    in_w: usize,
) -> Array4<f32> {
    let (b, c, out_h, out_w) = gy.dim();
    if (in_h, in_w) == (out_h, out_w) {
        return gy.clone();
    }
    let ty = resize_taps(in_h, out_h);
    let tx = resize_taps(in_w, out_w);
    let mut gx = Array4::<f32>::zeros((b, c, in_h, in_w));
    let gyf = gy
        .view()
        .into_shape_with_order((b * c, out_h, out_w))
        .unwrap();
    let mut gx_flat = gx
        .view_mut()
        .into_shape_with_order((b * c, in_h, in_w))
        .unwrap();
    let mut planes: Vec<_> = gx_flat.axis_iter_mut(Axis(0)).collect();
    for_each_indexed_mut(&mut planes, |p, plane| {
        let g = gyf.index_axis(Axis(0), p);
        for oy in 0..out_h {
            let (y0, y1, fy) = (ty.lo[oy], ty.hi[oy], ty.frac[oy]);
            for ox in 0..out_w {
                let (x0, x1, fx) = (tx.lo[ox], tx.hi[ox], tx.frac[ox]);
                let gv = g[(oy, ox)];
                plane[(y0, x0)] += gv * (1.0 - fx) * (1.0 - fy);
                plane[(y0, x1)] += gv * fx * (1.0 - fy);
                plane[(y1, x0)] += gv * (1.0 - fx) * fy;
                plane[(y1, x1)] += gv * fx * fy;
            }
        }
    });
    gx
}

/// Mean softmax cross-entropy over a batch of class logits.
/// Returns (loss, dlogits).
pub fn softmax_cross_entropy(logits: &Array2<f32>, targets: &[usize]) -> (f32, Array2<f32>) {
    let (b, k) = logits.dim();
    debug_assert_eq!(targets.len(), b);
    let mut dlogits = Array2::<f32>::zeros((b, k));
    let mut loss = 0.0f64;
    let inv = 1.0 / b as f32;
    for i in 0..b {
        let row = logits.row(i);
        let max = row.fold(f32::NEG_INFINITY, |a, &v| a.max(v));
        let mut z = 0.0f32;
        for j in 0..k {
            z += (row[j] - max).exp();
        }
        let log_z = z.ln() + max;
        loss += f64::from(log_z - row[targets[i]]);
        for j in 0..k {
            let p = (row[j] - log_z).exp();
            dlogits[(i, j)] = (p - if j == targets[i] { 1.0 } else { 0.0 }) * inv;
        }
    }
    ((loss / b as f64) as f32, dlogits)
}

/// Mean per-pixel softmax cross-entropy for (B,K,H,W) logits against
/// (B,H,W) class masks. Returns (loss, dlogits).
pub fn pixel_cross_entropy(logits: &Array4<f32>, targets: &Array3<u8>) -> (f32, Array4<f32>) {
    let (b, k, h, w) = logits.dim();
    debug_assert_eq!(targets.dim(), (b, h, w));
    let mut dlogits = Array4::<f32>::zeros((b, k, h, w));
    let inv = 1.0 / (b * h * w) as f32;
    let mut loss = 0.0f64;
    for bi in 0..b {
        for y in 0..h {
            for x in 0..w {
                let t = targets[(bi, y, x)] as usize;
                let mut max = f32::NEG_INFINITY;
                for j in 0..k {
                    max = max.max(logits[(bi, j, y, x)]);
                }
                let mut z = 0.0f32;
                for j in 0..k {
                    z += (logits[(bi, j, y, x)] - max).exp();
                }
                let log_z = z.ln() + max;
                loss += f64::from(log_z - logits[(bi, t, y, x)]);
                for j in 0..k {
                    let p = (logits[(bi, j, y, x)] - log_z).exp();
                    dlogits[(bi, j, y, x)] = (p - if j == t { 1.0 } else { 0.0 }) * inv;
                }
            }
        }
    }
    ((loss * f64::from(inv)) as f32, dlogits)
}

/// Mean logistic loss for (B,1,H,W) logits against binary (B,H,W) masks.
pub fn binary_logistic_loss(logits: &Array4<f32>, targets: &Array3<u8>) -> (f32, Array4<f32>) {
    let (b, k, h, w) = logits.dim();
    debug_assert_eq!(k, 1);
    let mut dlogits = Array4::<f32>::zeros((b, 1, h, w));
    let inv = 1.0 / (b * h * w) as f32;
    let mut loss = 0.0f64;
    for bi in 0..b {
        for y in 0..h {
            for x in 0..w {
                let z = logits[(bi, 0, y, x)];
                let t = f32::from(targets[(bi, y, x)].min(1));
                loss += f64::from(z.max(0.0) - z * t + (-z.abs()).exp().ln_1p());
                let sig = 1.0 / (1.0 + (-z).exp());
                dlogits[(bi, 0, y, x)] = (sig - t) * inv;
            }
        }
    }
    ((loss * f64::from(inv)) as f32, dlogits)
}
