//! Environmental image transforms: background compositing, per-camera
//! color bias, gamma, and resolution degradation.
//!
//! Every operation maps [0,1] images to [0,1] images and is pure given
//! explicit seeds. The generation pipeline applies them in a fixed order:
//! render, composite, color bias, gamma, degrade.

use crate::renderer::ImageBuffer;
use crate::rng::Stream;
use crate::scene::{valid_image_id, BackgroundRef};
use std::collections::BTreeMap;
use thiserror::Error;

const SALT_BG: u64 = 0x4247_5049;
const SALT_BIAS: u64 = 0x4249_4153;

#[derive(Debug, Error)]
pub enum ImageProcError {
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),
    #[error("background corpus has no images")]
    EmptyCorpus,
    #[error("bad image id `{0}`: only [A-Za-z0-9._-] allowed")]
    BadImageId(String),
    #[error("crop {x},{y} {w}x{h} outside image `{id}` ({iw}x{ih})")]
    CropOutsideImage { id: String, x: u32, y: u32, w: u32, h: u32, iw: u32, ih: u32 },
    #[error("crop manifest line {line}: {message}")]
    BadCropManifest { line: usize, message: String },
    #[error("crop manifest references unknown image `{0}`")]
    UnknownCropImage(String),
    #[error("color bias beta {0} outside [0, 0.5]")]
    BadBeta(f64),
    #[error("no background image with id `{0}`")]
    UnknownBackground(String),
    #[cfg(feature = "io")]
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[cfg(feature = "io")]
    #[error("image codec: {0}")]
    Codec(#[from] image::ImageError),
}

/// Crop rectangle in source-image pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CropRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

/// A set of background images with optional pre-annotated crops.
///
/// Read-only after construction; shareable across workers.
pub struct BackgroundCorpus {
    images: Vec<(String, ImageBuffer)>,
    crops: BTreeMap<String, Vec<CropRect>>,
    corpus_seed: u64,
}

impl BackgroundCorpus {
    /// Build from in-memory images. Ids must be unique and manifest-safe;
    /// crop rectangles must lie inside their image.
    pub fn new(
        mut images: Vec<(String, ImageBuffer)>,
        crops: BTreeMap<String, Vec<CropRect>>,
        corpus_seed: u64,
    ) -> Result<BackgroundCorpus, ImageProcError> {
        if images.is_empty() {
            return Err(ImageProcError::EmptyCorpus);
        }
        for (id, _) in &images {
            if !valid_image_id(id) {
                return Err(ImageProcError::BadImageId(id.clone()));
            }
        }
        images.sort_by(|a, b| a.0.cmp(&b.0));
        for (id, rects) in &crops {
            let img = images
                .iter()
                .find(|(i, _)| i == id)
                .map(|(_, img)| img)
                .ok_or_else(|| ImageProcError::UnknownCropImage(id.clone()))?;
            for r in rects {
                check_rect(id, img, *r)?;
            }
        }
        Ok(BackgroundCorpus { images, crops, corpus_seed })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.images.iter().map(|(id, _)| id.as_str())
    }

    fn image(&self, id: &str) -> Result<&ImageBuffer, ImageProcError> {
        self.images
            .iter()
            .find(|(i, _)| i == id)
            .map(|(_, img)| img)
            .ok_or_else(|| ImageProcError::UnknownBackground(id.to_string()))
    }

    /// Re-render the crop a [`BackgroundRef`] points at.
    pub fn render_ref(
        &self,
        bg_ref: &BackgroundRef,
        out_w: u32,
        out_h: u32,
    ) -> Result<ImageBuffer, ImageProcError> {
        let img = self.image(&bg_ref.image_id)?;
        let rect = CropRect { x: bg_ref.x, y: bg_ref.y, w: bg_ref.w, h: bg_ref.h };
        check_rect(&bg_ref.image_id, img, rect)?;
        Ok(resize_region(img, rect, out_w, out_h))
    }

    /// The first corpus image, full frame: the fixed-background ablation
    /// ignores seeds entirely.
    pub fn fixed_pick(&self, out_w: u32, out_h: u32) -> (BackgroundRef, ImageBuffer) {
        let (id, img) = &self.images[0];
        let rect = CropRect { x: 0, y: 0, w: img.width(), h: img.height() };
        let bg_ref =
            BackgroundRef { image_id: id.clone(), x: 0, y: 0, w: rect.w, h: rect.h };
        (bg_ref, resize_region(img, rect, out_w, out_h))
    }
}

fn check_rect(id: &str, img: &ImageBuffer, r: CropRect) -> Result<(), ImageProcError> {
    let inside = r.w >= 1
        && r.h >= 1
        && r.x.checked_add(r.w).is_some_and(|x1| x1 <= img.width())
        && r.y.checked_add(r.h).is_some_and(|y1| y1 <= img.height());
    if inside {
        Ok(())
    } else {
        Err(ImageProcError::CropOutsideImage {
            id: id.to_string(),
            x: r.x,
            y: r.y,
            w: r.w,
            h: r.h,
            iw: img.width(),
            ih: img.height(),
        })
    }
}

/// Pick a background image and crop for one render, deterministically from
/// the seed, and return the crop resized to the output dimensions.
///
/// Manifest crops are used when present for the chosen image; otherwise a
/// random rectangle covering at least 30% of the source area is drawn.
pub fn pick_background(
    corpus: &BackgroundCorpus,
    opts_seed: u64,
    out_w: u32,
    out_h: u32,
) -> (BackgroundRef, ImageBuffer) {
    let mut s = Stream::derive(opts_seed, &[corpus.corpus_seed, SALT_BG]);
    let (id, img) = &corpus.images[s.index(corpus.images.len())];
    let rect = match corpus.crops.get(id).filter(|r| !r.is_empty()) {
        Some(rects) => rects[s.index(rects.len())],
        None => {
            // sqrt(0.3) ~ 0.5477 per side keeps the area at >= 30%.
            let fw = s.uniform(0.55, 1.0);
            let fh = s.uniform(0.55, 1.0);
            let w = ((img.width() as f64 * fw).round() as u32).clamp(1, img.width());
            let h = ((img.height() as f64 * fh).round() as u32).clamp(1, img.height());
            let x = s.index((img.width() - w + 1) as usize) as u32;
            let y = s.index((img.height() - h + 1) as usize) as u32;
            CropRect { x, y, w, h }
        }
    };
    let crop = resize_region(img, rect, out_w, out_h);
    let bg_ref = BackgroundRef { image_id: id.clone(), x: rect.x, y: rect.y, w: rect.w, h: rect.h };
    (bg_ref, crop)
}

/// Alpha-composite `fg` over `bg` in linear space: `a*fg + (1-a)*bg`.
pub fn composite(fg: &ImageBuffer, bg: &ImageBuffer) -> Result<ImageBuffer, ImageProcError> {
    if fg.width() != bg.width() || fg.height() != bg.height() {
        return Err(ImageProcError::DimensionMismatch(
            fg.width(),
            fg.height(),
            bg.width(),
            bg.height(),
        ));
    }
    let mut out = ImageBuffer::new(fg.width(), fg.height());
    for ((o, f), b) in out.pixels_mut().iter_mut().zip(fg.pixels()).zip(bg.pixels()) {
        let a = f[3];
        for c in 0..3 {
            o[c] = a * f[c] + (1.0 - a) * b[c];
        }
        o[3] = 1.0;
    }
    Ok(out)
}

/// Per-channel gains simulating one camera's color response.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColorBias {
    pub gains: [f64; 3],
}

/// Derive the gains for a camera: uniform in [1-beta, 1+beta], fixed by
/// `(camera_id, global_seed)` for the whole dataset.
pub fn derive_color_bias(
    camera_id: u32,
    global_seed: u64,
    beta: f64,
) -> Result<ColorBias, ImageProcError> {
    if !(0.0..=0.5).contains(&beta) {
        return Err(ImageProcError::BadBeta(beta));
    }
    let mut s = Stream::derive(global_seed, &[camera_id as u64, SALT_BIAS]);
    Ok(ColorBias {
        gains: [
            s.uniform(1.0 - beta, 1.0 + beta),
            s.uniform(1.0 - beta, 1.0 + beta),
            s.uniform(1.0 - beta, 1.0 + beta),
        ],
    })
}

/// Multiply channels by the camera gains, clamped to [0, 1].
pub fn apply_color_bias(img: &ImageBuffer, bias: &ColorBias) -> ImageBuffer {
    let g = [bias.gains[0] as f32, bias.gains[1] as f32, bias.gains[2] as f32];
    let mut out = img.clone();
    for px in out.pixels_mut() {
        for c in 0..3 {
            px[c] = (px[c] * g[c]).clamp(0.0, 1.0);
        }
    }
    out
}

/// Tone transform `v -> v^gamma`; gamma above 1 darkens.
/// Callers keep gamma within [0.4, 2.5].
pub fn apply_gamma(img: &ImageBuffer, gamma: f64) -> ImageBuffer {
    debug_assert!((0.4..=2.5).contains(&gamma), "gamma {gamma} outside [0.4, 2.5]");
    let g = gamma as f32;
    img.map_rgb(|v| v.clamp(0.0, 1.0).powf(g))
}

/// Simulate a low-resolution capture: bilinear downscale to
/// `working_height_px` tall (aspect preserved), then bilinear upscale to
/// `(out_w, out_h)`. `working_height_px == out_h` is a plain resize.
pub fn degrade_resolution(
    img: &ImageBuffer,
    working_height_px: u32,
    out_w: u32,
    out_h: u32,
) -> ImageBuffer {
    debug_assert!(
        (32..=256).contains(&working_height_px),
        "working height {working_height_px} outside [32, 256]"
    );
    let inter_h = working_height_px;
    let inter_w =
        (((img.width() as f64) * inter_h as f64 / img.height() as f64).round() as u32).max(1);
    let down = resize_bilinear(img, inter_w, inter_h);
    resize_bilinear(&down, out_w, out_h)
}

/// Bilinear resample to new dimensions (all four channels).
pub fn resize_bilinear(img: &ImageBuffer, w: u32, h: u32) -> ImageBuffer {
    if img.width() == w && img.height() == h {
        return img.clone();
    }
    let mut out = ImageBuffer::new(w, h);
    let sx_scale = img.width() as f64 / w as f64;
    let sy_scale = img.height() as f64 / h as f64;
    for y in 0..h {
        let sy = ((y as f64 + 0.5) * sy_scale - 0.5).max(0.0);
        let y0 = (sy.floor() as u32).min(img.height() - 1);
        let y1 = (y0 + 1).min(img.height() - 1);
        let fy = (sy - y0 as f64) as f32;
        for x in 0..w {
            let sx = ((x as f64 + 0.5) * sx_scale - 0.5).max(0.0);
            let x0 = (sx.floor() as u32).min(img.width() - 1);
            let x1 = (x0 + 1).min(img.width() - 1);
            let fx = (sx - x0 as f64) as f32;
            let (p00, p10, p01, p11) =
                (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
            let mut px = [0.0f32; 4];
            for c in 0..4 {
                let top = p00[c] + (p10[c] - p00[c]) * fx;
                let bot = p01[c] + (p11[c] - p01[c]) * fx;
                px[c] = top + (bot - top) * fy;
            }
            out.set(x, y, px);
        }
    }
    out
}

/// Crop a region then resize it to the target dimensions.
pub fn resize_region(img: &ImageBuffer, rect: CropRect, out_w: u32, out_h: u32) -> ImageBuffer {
    let mut crop = ImageBuffer::new(rect.w, rect.h);
    for y in 0..rect.h {
        for x in 0..rect.w {
            crop.set(x, y, img.get(rect.x + x, rect.y + y));
        }
    }
    resize_bilinear(&crop, out_w, out_h)
}

/// Per-pixel RGB variance (mean over channels of the per-channel variance).
pub fn rgb_variance(img: &ImageBuffer) -> f64 {
    let n = img.pixels().len() as f64;
    let mut var = 0.0;
    for c in 0..3 {
        let mean: f64 = img.pixels().iter().map(|p| p[c] as f64).sum::<f64>() / n;
        let v: f64 = img.pixels().iter().map(|p| (p[c] as f64 - mean).powi(2)).sum::<f64>() / n;
        var += v;
    }
    var / 3.0
}

// ---------------------------------------------------------------------------
// File-system backed corpus loading and PNG output
// ---------------------------------------------------------------------------

#[cfg(feature = "io")]
mod fs_io {
    use super::*;
    use std::path::Path;

    /// Load an image file (PNG or JPEG) into a linear [0,1] buffer.
    ///
    /// 8-bit values map to v/255 with no transfer function, matching the
    /// quantization used when writing.
    pub fn load_image(path: &Path) -> Result<ImageBuffer, ImageProcError> {
        let rgb = image::open(path)?.to_rgb8();
        let (w, h) = rgb.dimensions();
        let mut out = ImageBuffer::new(w, h);
        for (x, y, px) in rgb.enumerate_pixels() {
            out.set(
                x,
                y,
                [
                    px[0] as f32 / 255.0,
                    px[1] as f32 / 255.0,
                    px[2] as f32 / 255.0,
                    1.0,
                ],
            );
        }
        Ok(out)
    }

    /// Write an 8-bit RGB PNG, quantizing channels by round(255 * v).
    pub fn write_png(img: &ImageBuffer, path: &Path) -> Result<(), ImageProcError> {
        image::RgbImage::from(img).save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }

    impl From<&ImageBuffer> for image::RgbImage {
        fn from(img: &ImageBuffer) -> image::RgbImage {
            image::RgbImage::from_fn(img.width(), img.height(), |x, y| {
                let px = img.get(x, y);
                image::Rgb([
                    (px[0].clamp(0.0, 1.0) * 255.0).round() as u8,
                    (px[1].clamp(0.0, 1.0) * 255.0).round() as u8,
                    (px[2].clamp(0.0, 1.0) * 255.0).round() as u8,
                ])
            })
        }
    }

    impl BackgroundCorpus {
        /// Load every PNG/JPEG in a directory (non-recursive, sorted by file
        /// name; the id is the file stem). The optional crop manifest is a
        /// text file of `image_id x y w h` lines; `#` starts a comment.
        pub fn load_dir(
            dir: &Path,
            crop_manifest: Option<&Path>,
            corpus_seed: u64,
        ) -> Result<BackgroundCorpus, ImageProcError> {
            let mut images = Vec::new();
            let mut entries: Vec<_> = std::fs::read_dir(dir)?
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| {
                    p.extension()
                        .and_then(|e| e.to_str())
                        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
                        .unwrap_or(false)
                })
                .collect();
            entries.sort();
            for path in entries {
                let id = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .map(str::to_string)
                    .ok_or_else(|| ImageProcError::BadImageId(path.display().to_string()))?;
                images.push((id, load_image(&path)?));
            }
            let crops = match crop_manifest {
                Some(p) => parse_crop_manifest(&std::fs::read_to_string(p)?)?,
                None => BTreeMap::new(),
            };
            BackgroundCorpus::new(images, crops, corpus_seed)
        }
    }

    /// Parse `image_id x y w h` lines.
    pub fn parse_crop_manifest(
        text: &str,
    ) -> Result<BTreeMap<String, Vec<CropRect>>, ImageProcError> {
        let mut out: BTreeMap<String, Vec<CropRect>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 5 {
                return Err(ImageProcError::BadCropManifest {
                    line: i + 1,
                    message: format!("expected `image_id x y w h`, found {} fields", toks.len()),
                });
            }
            if !valid_image_id(toks[0]) {
                return Err(ImageProcError::BadCropManifest {
                    line: i + 1,
                    message: format!("bad image id `{}`", toks[0]),
                });
            }
            let mut nums = [0u32; 4];
            for (n, t) in nums.iter_mut().zip(&toks[1..]) {
                *n = t.parse().map_err(|_| ImageProcError::BadCropManifest {
                    line: i + 1,
                    message: format!("bad number `{t}`"),
                })?;
            }
            out.entry(toks[0].to_string()).or_default().push(CropRect {
                x: nums[0],
                y: nums[1],
                w: nums[2],
                h: nums[3],
            });
        }
        Ok(out)
    }
}

#[cfg(feature = "io")]
pub use fs_io::{load_image, parse_crop_manifest, write_png};
