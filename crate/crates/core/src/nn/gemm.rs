//! Row-blocked matrix multiply.
//!
//! Output rows are split into fixed-size blocks; each block is computed by a
//! single `general_mat_mul` call, so every output element is accumulated in
//! the same order no matter how blocks are scheduled. The parallel and
//! sequential paths are therefore bit-identical.

use crate::util::parallel::ROW_CHUNK;
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2, ArrayViewMut2, Axis};

fn run_blocks(a: ArrayView2<f32>, b: ArrayView2<f32>, out: &mut Array2<f32>, parallel: bool) {
    debug_assert_eq!(a.ncols(), b.nrows());
    let mut blocks: Vec<(usize, ArrayViewMut2<f32>)> = out
        .axis_chunks_iter_mut(Axis(0), ROW_CHUNK)
        .enumerate()
        .collect();
    let kernel = |(index, block): &mut (usize, ArrayViewMut2<f32>)| {
        let r0 = *index * ROW_CHUNK;
        let r1 = r0 + block.nrows();
        general_mat_mul(1.0, &a.slice(s![r0..r1, ..]), &b, 0.0, block);
    };
    #[cfg(feature = "parallel")]
    if parallel {
        use rayon::prelude::*;
        blocks.par_iter_mut().for_each(kernel);
        return;
    }
    let _ = parallel;
    blocks.iter_mut().for_each(kernel);
}

/// `a @ b`, parallel over row blocks when the `parallel` feature is on.
pub fn matmul(a: ArrayView2<f32>, b: ArrayView2<f32>) -> Array2<f32> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    run_blocks(a, b, &mut out, true);
    out
}

/// `a @ b` on the current thread regardless of features. Exists so benches
/// can compare both paths in one build.
pub fn matmul_seq(a: ArrayView2<f32>, b: ArrayView2<f32>) -> Array2<f32> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    run_blocks(a, b, &mut out, false);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;

    #[test]
    fn matches_reference_dot() {
        let a = Array::linspace(-1.0f32, 1.0, 130 * 7)
            .into_shape_with_order((130, 7))
            .unwrap();
        let b = Array::linspace(0.5f32, -0.5, 7 * 9)
            .into_shape_with_order((7, 9))
            .unwrap();
        let ours = matmul(a.view(), b.view());
        let reference = a.dot(&b);
        assert_eq!(ours, reference);
    }

    #[test]
    fn parallel_and_sequential_paths_are_bit_identical() {
        let a = Array::linspace(-2.0f32, 3.0, 257 * 33)
            .into_shape_with_order((257, 33))
            .unwrap();
        let b = Array::linspace(1.0f32, -1.0, 33 * 65)
            .into_shape_with_order((33, 65))
            .unwrap();
        assert_eq!(matmul(a.view(), b.view()), matmul_seq(a.view(), b.view()));
    }
}
