//! Image decoding, the seven base features, and a 64-bit DCT perceptual hash.

use std::fmt;
use std::sync::OnceLock;

use image::imageops::{self, FilterType};
use image::{ImageBuffer, Luma};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Decoded RGBA raster, row-major, 8 bits per channel.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
    pub source_byte_size: u64,
}

impl fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RasterImage")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("source_byte_size", &self.source_byte_size)
            .finish_non_exhaustive()
    }
}

impl RasterImage {
    pub fn from_rgba(width: u32, height: u32, pixels: Vec<u8>, source_byte_size: u64) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width as usize * height as usize * 4 {
            return Err(Error::invalid(format!(
                "raster {width}x{height} with {} bytes of samples",
                pixels.len()
            )));
        }
        Ok(RasterImage {
            width,
            height,
            pixels,
            source_byte_size,
        })
    }

    /// RGB samples after compositing over an opaque white background.
    pub fn composited_rgb(&self) -> impl Iterator<Item = [u8; 3]> + '_ {
        self.pixels.chunks_exact(4).map(|p| {
            let a = p[3] as u32;
            let blend = |c: u8| ((c as u32 * a + 255 * (255 - a) + 127) / 255) as u8;
            [blend(p[0]), blend(p[1]), blend(p[2])]
        })
    }
}

/// Decodes PNG, JPEG, GIF (first frame), WebP, BMP and ICO payloads.
pub fn decode_image(payload: &[u8]) -> Result<RasterImage> {
    let format = image::guess_format(payload).map_err(|e| Error::Decode {
        format: "unknown".into(),
        reason: e.to_string(),
    })?;
    let img = image::load_from_memory_with_format(payload, format).map_err(|e| Error::Decode {
        format: format!("{format:?}").to_lowercase(),
        reason: e.to_string(),
    })?;
    let rgba = img.to_rgba8();
    let (w, h) = rgba.dimensions();
    RasterImage::from_rgba(w, h, rgba.into_raw(), payload.len() as u64)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BaseFeatures {
    pub byte_size: u64,
    pub width: u32,
    pub height: u32,
    /// Empty bins across the R, G and B 256-bin histograms (0..=768).
    pub negative_space: u32,
    pub pixel_size: u64,
    /// width / height
    pub aspect_ratio: f64,
    /// Distinct RGB triples.
    pub color_count: u64,
}

impl BaseFeatures {
    pub const NAMES: [&'static str; 7] = [
        "byte_size",
        "width",
        "height",
        "negative_space",
        "pixel_size",
        "aspect_ratio",
        "color_count",
    ];

    pub fn to_vec(&self) -> [f64; 7] {
        [
            self.byte_size as f64,
            self.width as f64,
            self.height as f64,
            self.negative_space as f64,
            self.pixel_size as f64,
            self.aspect_ratio,
            self.color_count as f64,
        ]
    }
}

pub fn base_features(img: &RasterImage) -> BaseFeatures {
    let mut hist = [[0u64; 256]; 3];
    let mut colors: Vec<u32> = Vec::with_capacity(img.pixels.len() / 4);
    for rgb in img.composited_rgb() {
        for (band, &v) in rgb.iter().enumerate() {
            hist[band][v as usize] += 1;
        }
        colors.push(u32::from_be_bytes([0, rgb[0], rgb[1], rgb[2]]));
    }
    colors.sort_unstable();
    colors.dedup();
    let negative_space = hist.iter().flatten().filter(|&&c| c == 0).count() as u32;
    BaseFeatures {
        byte_size: img.source_byte_size,
        width: img.width,
        height: img.height,
        negative_space,
        pixel_size: img.width as u64 * img.height as u64,
        aspect_ratio: img.width as f64 / img.height as f64,
        color_count: colors.len() as u64,
    }
}

/// 64-bit DCT signature. Bit 63 holds the DC coefficient, bits then run
/// row-major through the 8x8 low-frequency block.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PerceptualHash(pub u64);

impl PerceptualHash {
    pub fn to_hex(self) -> String {
        format!("{:016x}", self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        u64::from_str_radix(s, 16)
            .map(PerceptualHash)
            .map_err(|e| Error::invalid(format!("bad hash {s:?}: {e}")))
    }

    pub fn hamming(self, other: PerceptualHash) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

impl fmt::Debug for PerceptualHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PerceptualHash({})", self.to_hex())
    }
}

impl fmt::Display for PerceptualHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for PerceptualHash {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for PerceptualHash {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        PerceptualHash::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

const HASH_SIDE: usize = 32;
const BLOCK: usize = 8;

fn dct_table() -> &'static [[f64; HASH_SIDE]; BLOCK] {
    static TABLE: OnceLock<[[f64; HASH_SIDE]; BLOCK]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0.0; HASH_SIDE]; BLOCK];
        for (k, row) in t.iter_mut().enumerate() {
            for (n, v) in row.iter_mut().enumerate() {
                *v = (std::f64::consts::PI / HASH_SIDE as f64 * (n as f64 + 0.5) * k as f64).cos();
            }
        }
        t
    })
}

/// Grayscale at 32x32, then the 8x8 lowest-frequency block of the type-II
/// DCT; each bit is set when its coefficient exceeds the block median.
pub fn phash(img: &RasterImage) -> PerceptualHash {
    let luma: Vec<f32> = img
        .composited_rgb()
        // f32 pixels are clamped to [0, 1] by resize
        .map(|[r, g, b]| (0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32) / 255.0)
        .collect();
    let gray: ImageBuffer<Luma<f32>, Vec<f32>> =
        ImageBuffer::from_raw(img.width, img.height, luma).expect("buffer sized from raster");
    let small = imageops::resize(&gray, HASH_SIDE as u32, HASH_SIDE as u32, FilterType::Triangle);
    let px = |x: usize, y: usize| small.get_pixel(x as u32, y as u32).0[0] as f64;

    let cos = dct_table();
    // rows first: rowdct[y][v] over x, only the first BLOCK frequencies are needed
    let mut rowdct = [[0.0f64; BLOCK]; HASH_SIDE];
    for (y, out) in rowdct.iter_mut().enumerate() {
        for (v, o) in out.iter_mut().enumerate() {
            *o = (0..HASH_SIDE).map(|x| px(x, y) * cos[v][x]).sum();
        }
    }
    let mut coeffs = [0.0f64; BLOCK * BLOCK];
    for u in 0..BLOCK {
        for v in 0..BLOCK {
            coeffs[u * BLOCK + v] = (0..HASH_SIDE).map(|y| rowdct[y][v] * cos[u][y]).sum();
        }
    }
    let mut sorted = coeffs;
    sorted.sort_by(f64::total_cmp);
    let median = (sorted[31] + sorted[32]) / 2.0;
    let bits = coeffs
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > median)
        .fold(0u64, |acc, (i, _)| acc | 1 << (63 - i));
    PerceptualHash(bits)
}

/// Hamming distance scaled to [0, 1].
pub fn phash_distance(a: PerceptualHash, b: PerceptualHash) -> f64 {
    (a.hamming(b) as f64 / 64.0).clamp(0.0, 1.0)
}
