//! PNG loading/saving and image <-> tensor conversion.

use crate::error::{image_err, io_err, Result};
use image::{GrayImage, RgbImage};
use ndarray::{Array2, Array3, Array4};
use std::fs;
use std::path::Path;

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    let img = image::open(path).map_err(image_err(path))?;
    Ok(img.to_rgb8())
}

pub fn load_mask(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(image_err(path))?;
    Ok(img.to_luma8())
}

pub fn save_png(path: &Path, img: &image::DynamicImage) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    img.save(path).map_err(image_err(path))
}

/// RGB image to a (3,H,W) float tensor in [-0.5, 0.5].
pub fn rgb_to_tensor(img: &RgbImage) -> Array3<f32> {
    let (w, h) = img.dimensions();
    Array3::from_shape_fn((3, h as usize, w as usize), |(c, y, x)| {
        f32::from(img.get_pixel(x as u32, y as u32)[c]) / 255.0 - 0.5
    })
}

pub fn mask_to_array(img: &GrayImage) -> Array2<u8> {
    let (w, h) = img.dimensions();
    Array2::from_shape_fn((h as usize, w as usize), |(y, x)| {
        img.get_pixel(x as u32, y as u32)[0]
    })
}

/// Stacks equally sized (3,H,W) tensors into a batch.
pub fn stack_batch(tensors: &[Array3<f32>]) -> Array4<f32> {
    assert!(!tensors.is_empty());
    let (c, h, w) = tensors[0].dim();
    let mut out = Array4::zeros((tensors.len(), c, h, w));
    for (i, t) in tensors.iter().enumerate() {
        out.index_axis_mut(ndarray::Axis(0), i).assign(t);
    }
    out
}
