//! BT.601 full-range color conversions.

use crate::image::{RgbImage, YuvImage};

const KR: f64 = 0.299;
const KG: f64 = 0.587;
const KB: f64 = 0.114;

/// RGB -> YUV, BT.601 full range. Chroma planes are centered at 0.5 so an
/// achromatic input maps to (Y, 0.5, 0.5). Total on [0,1] input; invertible
/// to within 1e-6 per sample.
pub fn rgb_to_yuv(img: &RgbImage) -> YuvImage {
    let n = img.height * img.width;
    let mut y = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    for i in 0..n {
        let r = img.planes[0][i];
        let g = img.planes[1][i];
        let b = img.planes[2][i];
        let luma = KR * r + KG * g + KB * b;
        y[i] = luma;
        u[i] = (b - luma) / (2.0 * (1.0 - KB)) + 0.5;
        v[i] = (r - luma) / (2.0 * (1.0 - KR)) + 0.5;
    }
    YuvImage {
        height: img.height,
        width: img.width,
        planes: [y, u, v],
    }
}

/// Inverse of [`rgb_to_yuv`].
pub fn yuv_to_rgb(img: &YuvImage) -> RgbImage {
    let n = img.height * img.width;
    let mut out = RgbImage::new(img.height, img.width);
    for i in 0..n {
        let y = img.planes[0][i];
        let u = img.planes[1][i] - 0.5;
        let v = img.planes[2][i] - 0.5;
        let r = y + 2.0 * (1.0 - KR) * v;
        let b = y + 2.0 * (1.0 - KB) * u;
        let g = (y - KR * r - KB * b) / KG;
        out.planes[0][i] = r;
        out.planes[1][i] = g;
        out.planes[2][i] = b;
    }
    out
}
