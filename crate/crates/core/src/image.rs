//! Planar floating-point images.
//!
//! All pixel data in the pipeline lives in `f64` planes in [0, 1]; 8-bit
//! conversion happens only at file and codec boundaries so quantization does
//! not accumulate through the multiplicative stages.

use crate::error::{Error, Result};

/// Three-channel planar image, row-major planes, samples nominally in [0, 1].
///
/// Channel semantics are by convention: RGB everywhere except inside the
/// color-space helpers, which document their own ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    pub height: usize,
    pub width: usize,
    pub planes: [Vec<f64>; 3],
}

impl RgbImage {
    pub fn new(height: usize, width: usize) -> Self {
        let plane = vec![0.0; height * width];
        Self {
            height,
            width,
            planes: [plane.clone(), plane.clone(), plane],
        }
    }

    pub fn constant(height: usize, width: usize, rgb: [f64; 3]) -> Self {
        Self {
            height,
            width,
            planes: [
                vec![rgb[0]; height * width],
                vec![rgb[1]; height * width],
                vec![rgb[2]; height * width],
            ],
        }
    }

    /// Builds an image by evaluating `f(channel, row, col)`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut img = Self::new(height, width);
        for ch in 0..3 {
            for r in 0..height {
                for c in 0..width {
                    img.planes[ch][r * width + c] = f(ch, r, c);
                }
            }
        }
        img
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    #[inline]
    pub fn get(&self, ch: usize, row: usize, col: usize) -> f64 {
        self.planes[ch][row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, ch: usize, row: usize, col: usize, v: f64) {
        self.planes[ch][row * self.width + col] = v;
    }

    pub fn same_dims(&self, other: &Self) -> bool {
        self.height == other.height && self.width == other.width
    }

    pub fn is_finite(&self) -> bool {
        self.planes.iter().all(|p| p.iter().all(|v| v.is_finite()))
    }

    pub fn in_unit_range(&self) -> bool {
        self.planes
            .iter()
            .all(|p| p.iter().all(|&v| (0.0..=1.0).contains(&v)))
    }

    pub fn clamp_unit(&mut self) {
        for p in &mut self.planes {
            for v in p.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
        }
    }

    /// Mirrors the image horizontally (flips columns).
    pub fn mirror_horizontal(&self) -> Self {
        let mut out = Self::new(self.height, self.width);
        for ch in 0..3 {
            for r in 0..self.height {
                for c in 0..self.width {
                    out.planes[ch][r * self.width + c] =
                        self.planes[ch][r * self.width + (self.width - 1 - c)];
                }
            }
        }
        out
    }

    /// Mean squared error against another image of the same dimensions.
    pub fn mse(&self, other: &Self) -> f64 {
        assert!(self.same_dims(other), "mse on mismatched dimensions");
        let n = (self.height * self.width * 3) as f64;
        let mut acc = 0.0;
        for ch in 0..3 {
            for (a, b) in self.planes[ch].iter().zip(&other.planes[ch]) {
                let d = a - b;
                acc += d * d;
            }
        }
        acc / n
    }

    /// PSNR in dB against a peak of 1.0, capped at 99 dB.
    pub fn psnr(&self, other: &Self) -> f64 {
        let mse = self.mse(other);
        if mse <= 1e-12 {
            99.0
        } else {
            (-10.0 * mse.log10()).min(99.0)
        }
    }

    pub fn validate_unit(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::NonFiniteSamples);
        }
        if !self.in_unit_range() {
            return Err(Error::SamplesOutOfRange);
        }
        Ok(())
    }
}

/// YUV image (BT.601 full range), same planar layout as [`RgbImage`].
#[derive(Debug, Clone, PartialEq)]
pub struct YuvImage {
    pub height: usize,
    pub width: usize,
    pub planes: [Vec<f64>; 3],
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_fn_and_get_agree() {
        let img = RgbImage::from_fn(3, 4, |ch, r, c| (ch * 100 + r * 10 + c) as f64 / 300.0);
        assert_eq!(img.get(2, 1, 3), 213.0 / 300.0);
    }

    #[test]
    fn mirror_is_involution() {
        let img = RgbImage::from_fn(4, 5, |ch, r, c| ((ch + 2 * r + 3 * c) % 7) as f64 / 7.0);
        assert_eq!(img.mirror_horizontal().mirror_horizontal(), img);
    }

    #[test]
    fn psnr_caps_on_identical() {
        let img = RgbImage::constant(8, 8, [0.3, 0.5, 0.7]);
        assert_eq!(img.psnr(&img), 99.0);
    }
}
