//! Quality and rate metrics: per-plane PSNR over a light field, weighted
//! YUV-PSNR, and Bjontegaard rate savings between two rate-distortion curves.

use serde::{Deserialize, Serialize};

use crate::color::rgb_to_yuv;
use crate::error::{Error, Result};
use crate::lightfield::LightField;

/// One point of a rate-distortion curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint {
    /// Rate in bytes (any consistent unit works; the metric is scale invariant).
    pub rate: f64,
    /// Quality in dB.
    pub quality: f64,
}

/// Per-plane PSNRs plus their weighted combination, in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YuvPsnr {
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub combined: f64,
}

/// Default plane weighting (6*Y + U + V) / 8, the common-test-condition
/// convention.
pub const DEFAULT_YUV_WEIGHTS: [f64; 3] = [6.0, 1.0, 1.0];

fn plane_psnr(sse: f64, samples: f64) -> f64 {
    let mse = sse / samples;
    if mse <= 1e-12 {
        99.0
    } else {
        (-10.0 * mse.log10()).min(99.0)
    }
}

/// YUV-PSNR of `test` against `ref_lf` over all views: per-plane PSNR of the
/// BT.601 conversion, combined with `weights`. Identical inputs cap at 99 dB.
pub fn yuv_psnr(ref_lf: &LightField, test: &LightField, weights: [f64; 3]) -> Result<YuvPsnr> {
    if ref_lf.angular_rows != test.angular_rows
        || ref_lf.angular_cols != test.angular_cols
        || ref_lf.height != test.height
        || ref_lf.width != test.width
    {
        return Err(Error::ShapeMismatch(
            "light field dimensions differ".to_string(),
        ));
    }
    let mut sse = [0.0f64; 3];
    for (a, b) in ref_lf.views().iter().zip(test.views()) {
        let ya = rgb_to_yuv(a);
        let yb = rgb_to_yuv(b);
        for ((acc, pa), pb) in sse.iter_mut().zip(&ya.planes).zip(&yb.planes) {
            for (x, y) in pa.iter().zip(pb) {
                let d = x - y;
                *acc += d * d;
            }
        }
    }
    let samples = (ref_lf.views().len() * ref_lf.height * ref_lf.width) as f64;
    let [py, pu, pv] = [
        plane_psnr(sse[0], samples),
        plane_psnr(sse[1], samples),
        plane_psnr(sse[2], samples),
    ];
    let wsum = weights.iter().sum::<f64>();
    Ok(YuvPsnr {
        y: py,
        u: pu,
        v: pv,
        combined: (weights[0] * py + weights[1] * pu + weights[2] * pv) / wsum,
    })
}

/// Least-squares cubic fit of log-rate as a function of quality, with the
/// quality axis centered at `mid` for conditioning. Returns coefficients
/// `c[0] + c[1] x + c[2] x^2 + c[3] x^3` in the centered variable.
pub fn fit_log_rate_cubic(points: &[RdPoint], mid: f64) -> [f64; 4] {
    // normal equations of the 4-term polynomial basis
    let mut moments = [0.0f64; 7];
    let mut rhs = [0.0f64; 4];
    for p in points {
        let x = p.quality - mid;
        let y = p.rate.ln();
        let mut xp = 1.0;
        for (i, m) in moments.iter_mut().enumerate() {
            *m += xp;
            if i < 4 {
                rhs[i] += xp * y;
            }
            xp *= x;
        }
    }
    let mut a = [[0.0f64; 5]; 4];
    for (r, row) in a.iter_mut().enumerate() {
        row[..4].copy_from_slice(&moments[r..r + 4]);
        row[4] = rhs[r];
    }
    // Gaussian elimination with partial pivoting
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, pivot);
        let pivot_row = a[col];
        let d = pivot_row[col];
        for (r, row) in a.iter_mut().enumerate() {
            if r == col || row[col] == 0.0 {
                continue;
            }
            let f = row[col] / d;
            for (v, pv) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *v -= f * pv;
            }
        }
    }
    std::array::from_fn(|i| a[i][4] / a[i][i])
}

fn poly_integral(c: &[f64; 4], lo: f64, hi: f64) -> f64 {
    let eval = |x: f64| {
        c[0] * x + c[1] * x * x / 2.0 + c[2] * x * x * x / 3.0 + c[3] * x * x * x * x / 4.0
    };
    eval(hi) - eval(lo)
}

fn quality_range(points: &[RdPoint]) -> (f64, f64) {
    let lo = points.iter().map(|p| p.quality).fold(f64::INFINITY, f64::min);
    let hi = points
        .iter()
        .map(|p| p.quality)
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Bjontegaard average rate difference of `test` against `anchor`, percent.
/// Negative values mean the test curve needs less rate at equal quality.
///
/// Both curves get a least-squares cubic fit of log-rate over quality; the
/// fitted difference is integrated in closed form over the overlapping
/// quality interval and mapped back via `100 (e^mean - 1)`.
pub fn bd_rate(anchor: &[RdPoint], test: &[RdPoint]) -> Result<f64> {
    for pts in [anchor, test] {
        if pts.len() < 4 {
            return Err(Error::TooFewRdPoints {
                needed: 4,
                got: pts.len(),
            });
        }
        if pts
            .iter()
            .any(|p| p.rate <= 0.0 || p.rate.is_nan() || !p.quality.is_finite())
        {
            return Err(Error::NonFiniteSamples);
        }
    }
    let (a_lo, a_hi) = quality_range(anchor);
    let (t_lo, t_hi) = quality_range(test);
    let lo = a_lo.max(t_lo);
    let hi = a_hi.min(t_hi);
    if hi <= lo {
        return Err(Error::NoQualityOverlap);
    }
    let mid = (lo + hi) / 2.0;
    let ca = fit_log_rate_cubic(anchor, mid);
    let ct = fit_log_rate_cubic(test, mid);
    let diff: [f64; 4] = std::array::from_fn(|i| ct[i] - ca[i]);
    let mean = poly_integral(&diff, lo - mid, hi - mid) / (hi - lo);
    Ok(100.0 * (mean.exp() - 1.0))
}

/// One row of the pipeline's rate-distortion report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdRecord {
    pub rank: usize,
    pub qp: u8,
    /// 1-based subset index within the scan order.
    pub subset: usize,
    pub bytes: usize,
    pub psnr_y: f64,
    pub psnr_u: f64,
    pub psnr_v: f64,
    pub psnr_yuv: f64,
}

pub fn write_rd_csv<W: std::io::Write>(writer: W, records: &[RdRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_rd_csv<R: std::io::Read>(reader: R) -> Result<Vec<RdRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize()
        .map(|rec| rec.map_err(|e| Error::Csv(e.to_string())))
        .collect()
}
