//! Sequential convolutional network with named stage taps and multi-tap
//! backward, plus receptive-field arithmetic over the layer geometry.

use super::conv::Conv2d;
use super::ops::{relu, relu_backward};
use ndarray::Array4;

#[derive(Debug, Clone)]
pub enum Block {
    Conv(Conv2d),
    Relu,
    /// Two same-width convolutions with an identity skip:
    /// `y = relu(conv2(relu(conv1(x))) + x)`.
    Residual { conv1: Conv2d, conv2: Conv2d },
}

impl Block {
    /// (kernel, stride) pairs seen by a signal passing through this block.
    fn geometry(&self) -> Vec<(usize, usize)> {
        match self {
            Block::Conv(c) => vec![(c.kernel(), c.stride)],
            Block::Relu => vec![],
            Block::Residual { conv1, conv2 } => {
                vec![(conv1.kernel(), conv1.stride), (conv2.kernel(), conv2.stride)]
            }
        }
    }
}

/// A named point in the block sequence where features are read out.
#[derive(Debug, Clone)]
pub struct StageTap {
    pub name: String,
    pub after_block: usize,
    pub channels: usize,
}

#[derive(Debug, Clone)]
pub struct ConvNet {
    pub blocks: Vec<Block>,
    pub taps: Vec<StageTap>,
    pub in_channels: usize,
}

/// Saved intermediates from `forward_train`, consumed by `backward`.
pub struct NetCache {
    block_inputs: Vec<Array4<f32>>,
    residual_inner: Vec<Option<ResCache>>,
    pub output: Array4<f32>,
}

struct ResCache {
    t1: Array4<f32>,
    r1: Array4<f32>,
    sum: Array4<f32>,
}

impl ConvNet {
    pub fn stage_names(&self) -> Vec<String> {
        self.taps.iter().map(|t| t.name.clone()).collect()
    }

    pub fn tap(&self, stage: &str) -> Option<&StageTap> {
        self.taps.iter().find(|t| t.name == stage)
    }

    /// Inference pass returning the outputs of the requested taps.
    pub fn forward_stages(&self, x: &Array4<f32>, stages: &[&str]) -> Vec<Array4<f32>> {
        let deepest = stages
            .iter()
            .map(|s| self.tap(s).expect("stage checked by caller").after_block)
            .max()
            .unwrap_or(0);
        let mut outputs: Vec<Option<Array4<f32>>> = vec![None; stages.len()];
        let mut cur = x.clone();
        for (i, block) in self.blocks.iter().enumerate().take(deepest + 1) {
            cur = match block {
                Block::Conv(c) => c.forward(&cur),
                Block::Relu => relu(&cur),
                Block::Residual { conv1, conv2 } => {
                    let t1 = conv1.forward(&cur);
                    let t2 = conv2.forward(&relu(&t1));
                    relu(&(t2 + &cur))
                }
            };
            for (si, stage) in stages.iter().enumerate() {
                if self.tap(stage).unwrap().after_block == i {
                    outputs[si] = Some(cur.clone());
                }
            }
        }
        outputs.into_iter().map(|o| o.expect("tap reached")).collect()
    }

    /// Training pass through the whole network, caching intermediates.
    pub fn forward_train(&self, x: &Array4<f32>) -> NetCache {
        let mut block_inputs = Vec::with_capacity(self.blocks.len());
        let mut residual_inner = Vec::with_capacity(self.blocks.len());
        let mut cur = x.clone();
        for block in &self.blocks {
            block_inputs.push(cur.clone());
            match block {
                Block::Conv(c) => {
                    cur = c.forward(&cur);
                    residual_inner.push(None);
                }
                Block::Relu => {
                    cur = relu(&cur);
                    residual_inner.push(None);
                }
                Block::Residual { conv1, conv2 } => {
                    let t1 = conv1.forward(&cur);
                    let r1 = relu(&t1);
                    let t2 = conv2.forward(&r1);
                    let sum = t2 + &cur;
                    cur = relu(&sum);
                    residual_inner.push(Some(ResCache { t1, r1, sum }));
                }
            }
        }
        NetCache {
            block_inputs,
            residual_inner,
            output: cur,
        }
    }

    /// Stage output recovered from a training cache.
    pub fn cached_stage_output<'a>(&self, cache: &'a NetCache, stage: &str) -> &'a Array4<f32> {
        let after = self.tap(stage).expect("stage checked by caller").after_block;
        if after + 1 < self.blocks.len() {
            &cache.block_inputs[after + 1]
        } else {
            &cache.output
        }
    }

    /// Backpropagates gradients injected at one or more stage outputs,
    /// accumulating parameter gradients; returns the input gradient.
    pub fn backward(&mut self, cache: &NetCache, taps: &[(usize, Array4<f32>)]) -> Array4<f32> {
        let deepest = taps
            .iter()
            .map(|(after, _)| *after)
            .max()
            .expect("at least one tap gradient");
        let mut grad: Option<Array4<f32>> = None;
        for i in (0..=deepest).rev() {
            for (after, tap_grad) in taps {
                if *after == i {
                    match &mut grad {
                        None => grad = Some(tap_grad.clone()),
                        Some(g) => *g += tap_grad,
                    }
                }
            }
            let gy = grad.take().expect("gradient present at deepest tap");
            let x = &cache.block_inputs[i];
            let gx = match &mut self.blocks[i] {
                Block::Conv(c) => c.backward(x, &gy),
                Block::Relu => relu_backward(x, &gy),
                Block::Residual { conv1, conv2 } => {
                    let inner = cache.residual_inner[i].as_ref().expect("residual cache");
                    let gsum = relu_backward(&inner.sum, &gy);
                    let gr1 = conv2.backward(&inner.r1, &gsum);
                    let gt1 = relu_backward(&inner.t1, &gr1);
                    conv1.backward(x, &gt1) + &gsum
                }
            };
            grad = Some(gx);
        }
        grad.expect("walked to input")
    }

    pub fn zero_grad(&mut self) {
        for block in &mut self.blocks {
            match block {
                Block::Conv(c) => c.zero_grad(),
                Block::Relu => {}
                Block::Residual { conv1, conv2 } => {
                    conv1.zero_grad();
                    conv2.zero_grad();
                }
            }
        }
    }

    pub fn adam_step(&mut self, lr: f32, t: u32) {
        for block in &mut self.blocks {
            match block {
                Block::Conv(c) => c.adam_step(lr, t),
                Block::Relu => {}
                Block::Residual { conv1, conv2 } => {
                    conv1.adam_step(lr, t);
                    conv2.adam_step(lr, t);
                }
            }
        }
    }

    pub fn param_slices(&self) -> Vec<&[f32]> {
        let mut out = Vec::new();
        for block in &self.blocks {
            match block {
                Block::Conv(c) => out.extend(c.param_slices()),
                Block::Relu => {}
                Block::Residual { conv1, conv2 } => {
                    out.extend(conv1.param_slices());
                    out.extend(conv2.param_slices());
                }
            }
        }
        out
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f32]> {
        let mut out = Vec::new();
        for block in &mut self.blocks {
            match block {
                Block::Conv(c) => out.extend(c.param_slices_mut()),
                Block::Relu => {}
                Block::Residual { conv1, conv2 } => {
                    out.extend(conv1.param_slices_mut());
                    out.extend(conv2.param_slices_mut());
                }
            }
        }
        out
    }

    /// Receptive field (in input pixels) of one output unit at the stage.
    pub fn receptive_field(&self, stage: &str) -> usize {
        let after = self.tap(stage).expect("stage checked by caller").after_block;
        let mut rf = 1usize;
        let mut jump = 1usize;
        for block in &self.blocks[..=after] {
            for (k, s) in block.geometry() {
                rf += (k - 1) * jump;
                jump *= s;
            }
        }
        rf
    }

    /// Spatial size of each stage output for a given input size.
    pub fn stage_spatial(&self, input_hw: (usize, usize)) -> Vec<(String, (usize, usize))> {
        let mut out = Vec::new();
        let (mut h, mut w) = input_hw;
        for (i, block) in self.blocks.iter().enumerate() {
            if let Block::Conv(c) = block {
                let (oh, ow) = c.output_hw(h, w);
                h = oh;
                w = ow;
            }
            for tap in &self.taps {
                if tap.after_block == i {
                    out.push((tap.name.clone(), (h, w)));
                }
            }
        }
        out
    }
}
