//! Row-column 2D FFT on top of rustfft.
//!
//! Spectra are unnormalized row-major `height x width` buffers; the inverse
//! divides by `height * width`. Bin k of an axis of length n carries the
//! signed frequency `signed_index(k, n) / n` cycles per pixel.

use num_complex::Complex64;
use rustfft::FftPlanner;

fn transpose(width: usize, height: usize, data: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); data.len()];
    for r in 0..height {
        for c in 0..width {
            out[c * height + r] = data[r * width + c];
        }
    }
    out
}

fn fft2_inplace(height: usize, width: usize, data: &mut Vec<Complex64>, inverse: bool) {
    let mut planner = FftPlanner::new();
    let dir = if inverse {
        rustfft::FftDirection::Inverse
    } else {
        rustfft::FftDirection::Forward
    };
    let row_fft = planner.plan_fft(width, dir);
    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut t = transpose(width, height, data);
    let col_fft = planner.plan_fft(height, dir);
    for col in t.chunks_exact_mut(height) {
        col_fft.process(col);
    }
    *data = transpose(height, width, &t);
}

/// Unnormalized forward 2D FFT of a real plane.
pub fn fft2_real(height: usize, width: usize, plane: &[f64]) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = plane.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2_inplace(height, width, &mut data, false);
    data
}

/// Inverse 2D FFT (normalized by `height * width`), real part.
pub fn ifft2_to_real(height: usize, width: usize, spectrum: &[Complex64]) -> Vec<f64> {
    let (re, _) = ifft2_split(height, width, spectrum);
    re
}

/// Inverse 2D FFT returning the real plane and the largest |imaginary| residue.
pub fn ifft2_split(height: usize, width: usize, spectrum: &[Complex64]) -> (Vec<f64>, f64) {
    let mut data = spectrum.to_vec();
    fft2_inplace(height, width, &mut data, true);
    let scale = 1.0 / (height * width) as f64;
    let mut max_imag: f64 = 0.0;
    let re = data
        .iter()
        .map(|v| {
            max_imag = max_imag.max((v.im * scale).abs());
            v.re * scale
        })
        .collect();
    (re, max_imag)
}

/// Signed frequency index of bin `k` on an axis of length `n`.
pub fn signed_index(k: usize, n: usize) -> i32 {
    if k <= n / 2 {
        k as i32
    } else {
        k as i32 - n as i32
    }
}
