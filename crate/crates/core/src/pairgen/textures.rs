//! Parametric tileable textures and the style bank.
//!
//! A texture is a pure function of pixel coordinates, so restyling the same
//! silhouette is exactly reproducible and two images stylized with the same
//! style share identical local appearance statistics.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::util::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TextureFamily {
    Stripes,
    Checker,
    Dots,
    Noise,
    Rings,
}

const FAMILIES: [TextureFamily; 5] = [
    TextureFamily::Stripes,
    TextureFamily::Checker,
    TextureFamily::Dots,
    TextureFamily::Noise,
    TextureFamily::Rings,
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextureParams {
    pub family: TextureFamily,
    pub color_a: [u8; 3],
    pub color_b: [u8; 3],
    /// Pattern period in pixels.
    pub period: f32,
    pub angle: f32,
    pub phase: f32,
    /// Hash salt for the noise family.
    pub salt: u32,
}

fn sample_color(rng: &mut ChaCha8Rng) -> [u8; 3] {
    [
        rng.gen_range(30..=225),
        rng.gen_range(30..=225),
        rng.gen_range(30..=225),
    ]
}

/// Draws random texture parameters from an RNG stream.
pub fn sample_texture(rng: &mut ChaCha8Rng) -> TextureParams {
    let family = FAMILIES[rng.gen_range(0..FAMILIES.len())];
    TextureParams {
        family,
        color_a: sample_color(rng),
        color_b: sample_color(rng),
        period: rng.gen_range(3.0..9.0f32),
        angle: rng.gen_range(0.0..std::f32::consts::PI),
        phase: rng.gen_range(0.0..std::f32::consts::TAU),
        salt: rng.gen(),
    }
}

/// The signature texture of an object class (used by the class-signature
/// generation mode and by cue-conflict rendering).
pub fn class_signature_texture(class_id: usize, seed: u64) -> TextureParams {
    let mut rng = seeded_rng(seed, &format!("signature-texture-{class_id}"));
    let mut params = sample_texture(&mut rng);
    // Pin the family per class so different classes never share one.
    params.family = FAMILIES[(class_id - 1) % FAMILIES.len()];
    params
}

fn hash2(x: i64, y: i64, salt: u32) -> f32 {
    let mut h = (x as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ u64::from(salt).wrapping_mul(0x165667B19E3779F9);
    h ^= h >> 29;
    h = h.wrapping_mul(0xBF58476D1CE4E5B9);
    h ^= h >> 32;
    (h >> 40) as f32 / (1u64 << 24) as f32
}

fn mix(a: [u8; 3], b: [u8; 3], t: f32) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    [
        (f32::from(a[0]) + (f32::from(b[0]) - f32::from(a[0])) * t) as u8,
        (f32::from(a[1]) + (f32::from(b[1]) - f32::from(a[1])) * t) as u8,
        (f32::from(a[2]) + (f32::from(b[2]) - f32::from(a[2])) * t) as u8,
    ]
}

/// Texture color at a pixel.
pub fn texture_at(params: &TextureParams, x: u32, y: u32) -> [u8; 3] {
    let (fx, fy) = (x as f32 + 0.5, y as f32 + 0.5);
    let (c, s) = (params.angle.cos(), params.angle.sin());
    let u = fx * c + fy * s;
    let v = -fx * s + fy * c;
    let p = params.period;
    let t = match params.family {
        TextureFamily::Stripes => {
            let w = (std::f32::consts::TAU * u / p + params.phase).sin();
            if w > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        TextureFamily::Checker => {
            let cell = ((u / p).floor() as i64 + (v / p).floor() as i64).rem_euclid(2);
            cell as f32
        }
        TextureFamily::Dots => {
            let du = (u / p).fract().abs() - 0.5;
            let dv = (v / p).fract().abs() - 0.5;
            if (du * du + dv * dv).sqrt() < 0.30 {
                1.0
            } else {
                0.0
            }
        }
        TextureFamily::Noise => {
            let gx = (u / p).floor() as i64;
            let gy = (v / p).floor() as i64;
            let tx = (u / p) - gx as f32;
            let ty = (v / p) - gy as f32;
            let n00 = hash2(gx, gy, params.salt);
            let n10 = hash2(gx + 1, gy, params.salt);
            let n01 = hash2(gx, gy + 1, params.salt);
            let n11 = hash2(gx + 1, gy + 1, params.salt);
            let top = n00 + (n10 - n00) * tx;
            let bot = n01 + (n11 - n01) * tx;
            top + (bot - top) * ty
        }
        TextureFamily::Rings => {
            let r = (u * u + v * v).sqrt();
            let w = (std::f32::consts::TAU * r / p + params.phase).sin();
            0.5 + 0.5 * w
        }
    };
    mix(params.color_a, params.color_b, t)
}

/// How a style sources its texture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TextureSource {
    /// Derived from this seed by the procedural backend.
    Procedural { seed: u64 },
    /// Reference handed to an external stylizer (e.g. a style image path).
    External { reference: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleDef {
    pub style_id: String,
    pub texture_source: TextureSource,
}

impl StyleDef {
    /// Foreground/background texture pair for the procedural backend,
    /// including the per-style color jitter.
    pub fn procedural_textures(&self) -> Result<(TextureParams, TextureParams)> {
        let seed = match &self.texture_source {
            TextureSource::Procedural { seed } => *seed,
            TextureSource::External { reference } => {
                return Err(ProbeError::Config(format!(
                    "style '{}' sources texture from '{reference}' and cannot be \
                     rendered procedurally",
                    self.style_id
                )))
            }
        };
        let mut rng = seeded_rng(seed, "style-textures");
        let mut fg = sample_texture(&mut rng);
        let mut bg = sample_texture(&mut rng);
        // per-style color jitter
        let jitter: i16 = rng.gen_range(-18..=18);
        for color in [&mut fg.color_a, &mut fg.color_b, &mut bg.color_a, &mut bg.color_b] {
            for ch in color.iter_mut() {
                *ch = (i16::from(*ch) + jitter).clamp(0, 255) as u8;
            }
        }
        Ok((fg, bg))
    }
}

/// An ordered set of styles every image gets stylized with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleBank {
    pub styles: Vec<StyleDef>,
}

impl StyleBank {
    /// K procedurally seeded styles. K defaults to 5 at the CLI.
    pub fn procedural(count: usize, seed: u64) -> Result<Self> {
        if count < 2 {
            return Err(ProbeError::Config(format!(
                "style bank needs at least 2 styles, got {count}"
            )));
        }
        let styles = (0..count)
            .map(|i| StyleDef {
                style_id: format!("s{i:02}"),
                texture_source: TextureSource::Procedural {
                    seed: seed.wrapping_mul(1000).wrapping_add(i as u64),
                },
            })
            .collect();
        Ok(Self { styles })
    }

    pub fn count(&self) -> usize {
        self.styles.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.styles.len() < 2 {
            return Err(ProbeError::Config("style bank needs K >= 2".into()));
        }
        let mut ids: Vec<&str> = self.styles.iter().map(|s| s.style_id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.styles.len() {
            return Err(ProbeError::Config("style ids must be unique".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn texture_lookup_is_pure() {
        let p = class_signature_texture(2, 9);
        assert_eq!(texture_at(&p, 5, 11), texture_at(&p, 5, 11));
    }

    #[test]
    fn signature_textures_differ_between_classes() {
        let a = class_signature_texture(1, 9);
        let b = class_signature_texture(2, 9);
        assert_ne!(a.family, b.family);
    }

    #[test]
    fn bank_rejects_k_below_two() {
        assert!(StyleBank::procedural(1, 0).is_err());
        assert!(StyleBank::procedural(2, 0).is_ok());
    }

    #[test]
    fn bank_ids_unique_and_count_matches() {
        let bank = StyleBank::procedural(5, 3).unwrap();
        assert_eq!(bank.count(), 5);
        bank.validate().unwrap();
    }
}
