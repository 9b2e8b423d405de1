//! Minimal CNN building blocks with hand-written backward passes.
//!
//! The toolkit trains only small networks (reference encoders and shallow
//! read-out probes), so the layer set is deliberately narrow: convolution,
//! relu, identity-skip residual units, global average pooling, bilinear
//! resampling, and a linear head. All kernels route through the deterministic
//! row-blocked GEMM in [`gemm`], which keeps training exactly reproducible
//! under any thread count.

pub mod conv;
pub mod gemm;
pub mod net;
pub mod ops;

pub use conv::{Conv2d, Linear};
pub use net::{Block, ConvNet, NetCache, StageTap};

#[cfg(test)]
mod grad_tests {
    //! Finite-difference oracles for every backward pass.

    use super::*;
    use crate::util::seeded_rng;
    use ndarray::{Array2, Array3, Array4};
    use rand::Rng;

    fn rand_array4(dims: (usize, usize, usize, usize), seed: u64) -> Array4<f32> {
        let mut rng = seeded_rng(seed, "grad-test");
        Array4::from_shape_simple_fn(dims, || rng.gen_range(-1.0..1.0f32))
    }

    /// Numerical gradient of `loss(x)` w.r.t. each entry of `x`.
    fn finite_diff<F: FnMut(&Array4<f32>) -> f32>(
        x: &Array4<f32>,
        mut loss: F,
        eps: f32,
    ) -> Array4<f32> {
        let mut grad = Array4::<f32>::zeros(x.raw_dim());
        let mut probe = x.clone();
        for idx in ndarray::indices(x.raw_dim()) {
            let orig = probe[idx];
            probe[idx] = orig + eps;
            let up = loss(&probe);
            probe[idx] = orig - eps;
            let down = loss(&probe);
            probe[idx] = orig;
            grad[idx] = (up - down) / (2.0 * eps);
        }
        grad
    }

    fn assert_close(analytic: &Array4<f32>, numeric: &Array4<f32>, tol: f32) {
        for (a, n) in analytic.iter().zip(numeric.iter()) {
            let scale = 1.0f32.max(a.abs()).max(n.abs());
            assert!(
                (a - n).abs() / scale < tol,
                "gradient mismatch: analytic {a}, numeric {n}"
            );
        }
    }

    /// Sum-of-squares loss so dL/dy = 2y is trivial to feed backward.
    fn sq_loss(y: &Array4<f32>) -> f32 {
        y.iter().map(|v| v * v).sum()
    }

    #[test]
    fn conv_input_gradient_matches_finite_difference() {
        let mut rng = seeded_rng(3, "conv");
        let mut conv = Conv2d::new(2, 3, 3, 2, 1, &mut rng);
        let x = rand_array4((2, 2, 5, 5), 11);
        let analytic = {
            let y = conv.forward(&x);
            conv.backward(&x, &y.mapv(|v| 2.0 * v))
        };
        let numeric = finite_diff(&x, |p| sq_loss(&conv.forward(p)), 1e-2);
        assert_close(&analytic, &numeric, 2e-2);
    }

    #[test]
    fn conv_weight_gradient_matches_finite_difference() {
        let mut rng = seeded_rng(4, "conv-w");
        let mut conv = Conv2d::new(2, 2, 3, 1, 1, &mut rng);
        let x = rand_array4((1, 2, 4, 4), 12);
        conv.zero_grad();
        let y = conv.forward(&x);
        conv.backward(&x, &y.mapv(|v| 2.0 * v));
        let analytic: Vec<f32> = conv.grad_slices()[0].to_vec();

        let eps = 1e-2f32;
        let shape = conv.w.raw_dim();
        let mut max_err = 0.0f32;
        for (flat, idx) in ndarray::indices(shape).into_iter().enumerate() {
            let orig = conv.w[idx];
            conv.w[idx] = orig + eps;
            let up = sq_loss(&conv.forward(&x));
            conv.w[idx] = orig - eps;
            let down = sq_loss(&conv.forward(&x));
            conv.w[idx] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let scale = 1.0f32.max(numeric.abs());
            max_err = max_err.max((analytic[flat] - numeric).abs() / scale);
        }
        assert!(max_err < 3e-2, "weight grad max rel err {max_err}");
    }

    #[test]
    fn resnet_style_net_gradient_matches_finite_difference() {
        let mut rng = seeded_rng(5, "net");
        let conv_a = Conv2d::new(2, 3, 3, 2, 1, &mut rng);
        let conv1 = Conv2d::new(3, 3, 3, 1, 1, &mut rng);
        let conv2 = Conv2d::new(3, 3, 3, 1, 1, &mut rng);
        let mut net = ConvNet {
            blocks: vec![
                Block::Conv(conv_a),
                Block::Relu,
                Block::Residual { conv1, conv2 },
            ],
            taps: vec![StageTap {
                name: "f1".into(),
                after_block: 2,
                channels: 3,
            }],
            in_channels: 2,
        };
        let x = rand_array4((2, 2, 6, 6), 13);
        let cache = net.forward_train(&x);
        let gy = cache.output.mapv(|v| 2.0 * v);
        let last = net.blocks.len() - 1;
        let analytic = net.backward(&cache, &[(last, gy)]);
        let numeric = finite_diff(&x, |p| sq_loss(&net.forward_train(p).output), 1e-2);
        assert_close(&analytic, &numeric, 3e-2);
    }

    #[test]
    fn bilinear_backward_is_adjoint_of_forward() {
        // <resize(x), y> == <x, resize_backward(y)> for all x, y.
        let x = rand_array4((1, 2, 5, 7), 21);
        let y = rand_array4((1, 2, 9, 11), 22);
        let fx = ops::bilinear_resize(&x, 9, 11);
        let bty = ops::bilinear_resize_backward(&y, 5, 7);
        let lhs: f64 = fx.iter().zip(y.iter()).map(|(a, b)| f64::from(a * b)).sum();
        let rhs: f64 = x.iter().zip(bty.iter()).map(|(a, b)| f64::from(a * b)).sum();
        assert!((lhs - rhs).abs() < 1e-3, "adjoint mismatch: {lhs} vs {rhs}");
    }

    #[test]
    fn pixel_cross_entropy_gradient_matches_finite_difference() {
        let logits = rand_array4((1, 3, 2, 2), 31);
        let targets = Array3::from_shape_fn((1, 2, 2), |(_, y, x)| ((y + x) % 3) as u8);
        let (_, analytic) = ops::pixel_cross_entropy(&logits, &targets);
        let numeric = finite_diff(
            &logits,
            |p| ops::pixel_cross_entropy(p, &targets).0,
            1e-3,
        );
        assert_close(&analytic, &numeric, 1e-2);
    }

    #[test]
    fn binary_logistic_gradient_matches_finite_difference() {
        let logits = rand_array4((1, 1, 3, 3), 32);
        let targets = Array3::from_shape_fn((1, 3, 3), |(_, y, x)| ((y * x) % 2) as u8);
        let (_, analytic) = ops::binary_logistic_loss(&logits, &targets);
        let numeric = finite_diff(
            &logits,
            |p| ops::binary_logistic_loss(p, &targets).0,
            1e-3,
        );
        assert_close(&analytic, &numeric, 1e-2);
    }

    #[test]
    fn classifier_loss_gradient_matches_finite_difference() {
        let mut rng = seeded_rng(6, "clf");
        let logits = Array2::from_shape_simple_fn((3, 4), || rng.gen_range(-1.0..1.0f32));
        let targets = [0usize, 3, 1];
        let (_, analytic) = ops::softmax_cross_entropy(&logits, &targets);
        let eps = 1e-3f32;
        let mut probe = logits.clone();
        for idx in ndarray::indices(logits.raw_dim()) {
            let orig = probe[idx];
            probe[idx] = orig + eps;
            let up = ops::softmax_cross_entropy(&probe, &targets).0;
            probe[idx] = orig - eps;
            let down = ops::softmax_cross_entropy(&probe, &targets).0;
            probe[idx] = orig;
            let numeric = (up - down) / (2.0 * eps);
            assert!((analytic[idx] - numeric).abs() < 1e-2);
        }
    }

    #[test]
    fn global_avg_pool_of_constant_plane_is_the_constant() {
        let x = Array4::from_elem((2, 3, 4, 5), 0.25f32);
        let pooled = ops::global_avg_pool(&x);
        assert!(pooled.iter().all(|&v| (v - 0.25).abs() < 1e-7));
    }
}
