//! Software renderer: a posed low-poly humanoid under a perspective camera
//! and a single directional light, rasterized with a z-buffer.
//!
//! Rendering is pure and deterministic: identical inputs give pixel-identical
//! output on every run and under any parallel schedule (parallelism happens
//! per image, never inside one render).

mod mesh;
mod raster;

pub use mesh::{build_mesh, Mesh};
pub use raster::render;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RenderError {
    #[error("subject out of frame")]
    SubjectOutOfFrame,
    #[error("canvas {w}x{h} too small; both sides must be >= 16")]
    CanvasTooSmall { w: u32, h: u32 },
    #[error("mesh has no triangles")]
    EmptyMesh,
}

/// Linear-RGB image with coverage alpha. All channels in [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    data: Vec<[f32; 4]>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32) -> ImageBuffer {
        assert!(width >= 1 && height >= 1, "image dimensions must be >= 1");
        ImageBuffer {
            width,
            height,
            data: vec![[0.0, 0.0, 0.0, 0.0]; (width * height) as usize],
        }
    }

    pub fn filled(width: u32, height: u32, rgba: [f32; 4]) -> ImageBuffer {
        let mut img = ImageBuffer::new(width, height);
        img.data.fill(rgba);
        img
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [f32; 4] {
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, px: [f32; 4]) {
        self.data[(y * self.width + x) as usize] = px;
    }

    pub fn pixels(&self) -> &[[f32; 4]] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [[f32; 4]] {
        &mut self.data
    }

    /// Apply `f` to the RGB channels of every pixel; alpha untouched.
    pub fn map_rgb(&self, f: impl Fn(f32) -> f32) -> ImageBuffer {
        let mut out = self.clone();
        for px in out.data.iter_mut() {
            for c in px.iter_mut().take(3) {
                *c = f(*c);
            }
        }
        out
    }

    /// Bounding box of pixels with alpha > 0: (x0, y0, x1, y1), inclusive.
    pub fn alpha_bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y)[3] > 0.0 {
                    any = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        any.then_some((x0, y0, x1, y1))
    }

    /// Mean luma (0.2126 R + 0.7152 G + 0.0722 B) over all pixels.
    pub fn mean_luma(&self) -> f64 {
        let sum: f64 = self
            .data
            .iter()
            .map(|px| 0.2126 * px[0] as f64 + 0.7152 * px[1] as f64 + 0.0722 * px[2] as f64)
            .sum();
        sum / self.data.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_bbox_finds_covered_region() {
        let mut img = ImageBuffer::new(8, 8);
        img.set(2, 3, [1.0, 0.0, 0.0, 1.0]);
        img.set(5, 6, [0.0, 1.0, 0.0, 1.0]);
        assert_eq!(img.alpha_bbox(), Some((2, 3, 5, 6)));
        assert_eq!(ImageBuffer::new(4, 4).alpha_bbox(), None);
    }

    #[test]
    fn map_rgb_preserves_alpha() {
        let img = ImageBuffer::filled(2, 2, [0.5, 0.5, 0.5, 1.0]);
        let out = img.map_rgb(|v| v * 2.0);
        assert_eq!(out.get(0, 0), [1.0, 1.0, 1.0, 1.0]);
    }
}
