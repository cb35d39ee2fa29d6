//! Fourier disparity layer model.
//!
//! A light field is decomposed into `n` layers indexed by disparity: the
//! spectrum of the view at angular position (u, v) is the sum of the layer
//! spectra, each phase-shifted by `exp(+2i pi d_k (u f_r + v f_c))`. Layer
//! spectra are fit by an independent Tikhonov-regularized least squares
//! solve at every 2D frequency; calibration estimates the disparity values
//! and the angular-coordinate baseline from the view spectra themselves.
//!
//! Conventions: `u` pairs with the vertical (row) frequency axis and grid
//! offset `s`; `v` with the horizontal axis and offset `t`. Frequencies are
//! cycles per pixel, `f_r = signed(k_r) / H`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::color::rgb_to_yuv;
use crate::error::{Error, Result};
use crate::fft2::{fft2_real, ifft2_split, signed_index};
use crate::image::RgbImage;
use crate::lightfield::ViewCoord;

/// Fit and calibration controls.
#[derive(Debug, Clone)]
pub struct FdlFitParams {
    /// Absolute Tikhonov weight of the per-frequency ridge solves.
    pub lambda: f64,
    pub layer_count: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub calib_iters: usize,
}

impl Default for FdlFitParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            layer_count: 30,
            d_min: -2.0,
            d_max: 2.0,
            calib_iters: 10,
        }
    }
}

/// Fitted Fourier disparity layer model.
///
/// Carries the accumulated view spectra so [`refine`] can re-solve the
/// regression over every view seen so far. Immutable; refinement returns a
/// new model.
#[derive(Debug, Clone)]
pub struct FdlModel {
    pub height: usize,
    pub width: usize,
    /// Strictly increasing layer disparities.
    pub disparities: Vec<f64>,
    pub lambda: f64,
    /// Angular coordinates of the accumulated views.
    pub view_coords: Vec<(f64, f64)>,
    /// Forward FFT spectra of the accumulated views, `[channel][bin]`.
    view_spectra: Vec<[Vec<Complex64>; 3]>,
    /// Layer coefficients, indexed `(bin * n + layer) * 3 + channel`.
    coeffs: Vec<Complex64>,
}

impl FdlModel {
    pub fn layer_count(&self) -> usize {
        self.disparities.len()
    }

    pub fn view_count(&self) -> usize {
        self.view_coords.len()
    }

    #[inline]
    fn coeff(&self, bin: usize, layer: usize, ch: usize) -> Complex64 {
        self.coeffs[(bin * self.disparities.len() + layer) * 3 + ch]
    }

    /// Builds a model directly from per-layer channel spectra (row-major
    /// `height x width` bins). The fit path is bypassed; useful for
    /// synthetic models.
    pub fn from_layer_spectra(
        height: usize,
        width: usize,
        disparities: Vec<f64>,
        layer_spectra: &[[Vec<Complex64>; 3]],
        lambda: f64,
    ) -> Result<Self> {
        let n = disparities.len();
        if n == 0 || layer_spectra.len() != n {
            return Err(Error::FdlModel("layer count mismatch".into()));
        }
        validate_disparities(&disparities)?;
        let bins = height * width;
        for ls in layer_spectra {
            for ch in ls {
                if ch.len() != bins {
                    return Err(Error::FdlModel("spectrum size mismatch".into()));
                }
            }
        }
        let mut coeffs = vec![Complex64::default(); bins * n * 3];
        for bin in 0..bins {
            for (k, ls) in layer_spectra.iter().enumerate() {
                for ch in 0..3 {
                    coeffs[(bin * n + k) * 3 + ch] = ls[ch][bin];
                }
            }
        }
        Ok(Self {
            height,
            width,
            disparities,
            lambda,
            view_coords: Vec::new(),
            view_spectra: Vec::new(),
            coeffs,
        })
    }
}

fn validate_disparities(d: &[f64]) -> Result<()> {
    if d.is_empty() {
        return Err(Error::FdlModel("no disparities".into()));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSamples);
    }
    for w in d.windows(2) {
        if w[1] - w[0] <= 1e-6 {
            return Err(Error::FdlModel(format!(
                "disparities not strictly increasing: {} then {}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Sorts and merges near-duplicate disparities (1e-6 tolerance), then spreads
/// any residual ties so the strictly-increasing invariant holds.
fn canonicalize_disparities(d: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = d.to_vec();
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for i in 1..d.len() {
        if d[i] - d[i - 1] <= 1e-6 {
            d[i] = d[i - 1] + 2e-6;
        }
    }
    d
}

struct PhaseTables {
    /// `[(view * n + layer) * height + kr]`
    row: Vec<Complex64>,
    /// `[(view * n + layer) * width + kc]`
    col: Vec<Complex64>,
    n: usize,
    height: usize,
    width: usize,
}

impl PhaseTables {
    fn build(coords: &[(f64, f64)], disparities: &[f64], height: usize, width: usize) -> Self {
        let n = disparities.len();
        let m = coords.len();
        let mut row = vec![Complex64::default(); m * n * height];
        let mut col = vec![Complex64::default(); m * n * width];
        for (j, &(u, v)) in coords.iter().enumerate() {
            for (k, &d) in disparities.iter().enumerate() {
                for kr in 0..height {
                    let fr = signed_index(kr, height) as f64 / height as f64;
                    let arg = std::f64::consts::TAU * d * u * fr;
                    row[(j * n + k) * height + kr] = Complex64::new(arg.cos(), arg.sin());
                }
                for kc in 0..width {
                    let fc = signed_index(kc, width) as f64 / width as f64;
                    let arg = std::f64::consts::TAU * d * v * fc;
                    col[(j * n + k) * width + kc] = Complex64::new(arg.cos(), arg.sin());
                }
            }
        }
        Self {
            row,
            col,
            n,
            height,
            width,
        }
    }

    #[inline]
    fn entry(&self, view: usize, layer: usize, kr: usize, kc: usize) -> Complex64 {
        self.row[(view * self.n + layer) * self.height + kr]
            * self.col[(view * self.n + layer) * self.width + kc]
    }
}

/// In-place Cholesky solve of a Hermitian positive-definite system with
/// multiple right-hand sides. `g` is row-major n x n; solutions overwrite `rhs`.
fn hermitian_solve(g: &mut [Complex64], rhs: &mut [Vec<Complex64>], n: usize) -> Result<()> {
    // LL^H factorization into the lower triangle of g
    for j in 0..n {
        let mut diag = g[j * n + j].re;
        for k in 0..j {
            diag -= g[j * n + k].norm_sqr();
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::FdlModel(format!(
                "normal equations not positive definite (pivot {diag})"
            )));
        }
        let ljj = diag.sqrt();
        g[j * n + j] = Complex64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= g[i * n + k] * g[j * n + k].conj();
            }
            g[i * n + j] = s / ljj;
        }
    }
    for b in rhs.iter_mut() {
        // forward: L y = b
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= g[i * n + k] * b[k];
            }
            b[i] = s / g[i * n + i].re;
        }
        // backward: L^H x = y
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in (i + 1)..n {
                s -= g[k * n + i].conj() * b[k];
            }
            b[i] = s / g[i * n + i].re;
        }
    }
    Ok(())
}

/// Solves one bin's ridge system for all three channels, writing `n * 3`
/// coefficients into `out`. Returns an error only on numerical breakdown.
fn solve_bin(
    bin: usize,
    tables: &PhaseTables,
    spectra: &[[Vec<Complex64>; 3]],
    lambda: f64,
    out: &mut [Complex64],
) -> Result<()> {
    let n = tables.n;
    let m = spectra.len();
    let (kr, kc) = (bin / tables.width, bin % tables.width);
    let mut a = vec![Complex64::default(); m * n];
    for j in 0..m {
        for k in 0..n {
            a[j * n + k] = tables.entry(j, k, kr, kc);
        }
    }
    let mut g = vec![Complex64::default(); n * n];
    for i in 0..n {
        for j in i..n {
            let mut s = Complex64::default();
            for row in 0..m {
                s += a[row * n + i].conj() * a[row * n + j];
            }
            if i == j {
                s += lambda;
            }
            g[i * n + j] = s;
            g[j * n + i] = s.conj();
        }
    }
    let mut rhs: Vec<Vec<Complex64>> = (0..3)
        .map(|ch| {
            (0..n)
                .map(|k| {
                    let mut s = Complex64::default();
                    for row in 0..m {
                        s += a[row * n + k].conj() * spectra[row][ch][bin];
                    }
                    s
                })
                .collect()
        })
        .collect();
    hermitian_solve(&mut g, &mut rhs, n)?;
    for (ch, x) in rhs.iter().enumerate() {
        for k in 0..n {
            out[k * 3 + ch] = x[k];
        }
    }
    Ok(())
}

fn solve_all_bins(
    tables: &PhaseTables,
    spectra: &[[Vec<Complex64>; 3]],
    lambda: f64,
    height: usize,
    width: usize,
) -> Result<Vec<Complex64>> {
    let n = tables.n;
    let mut coeffs = vec![Complex64::default(); height * width * n * 3];
    // per-bin solves write disjoint chunks; parallel order cannot change results
    let results: Vec<Result<()>> = coeffs
        .par_chunks_mut(n * 3)
        .enumerate()
        .map(|(bin, chunk)| solve_bin(bin, tables, spectra, lambda, chunk))
        .collect();
    for r in results {
        r?;
    }
    Ok(coeffs)
}

fn view_spectra(views: &[(ViewCoord, RgbImage)]) -> Vec<[Vec<Complex64>; 3]> {
    views
        .iter()
        .map(|(_, img)| {
            std::array::from_fn(|ch| fft2_real(img.height, img.width, &img.planes[ch]))
        })
        .collect()
}

fn check_views(views: &[(ViewCoord, RgbImage)]) -> Result<(usize, usize)> {
    let (h, w) = (views[0].1.height, views[0].1.width);
    for (_, img) in views {
        if img.height != h || img.width != w {
            return Err(Error::ShapeMismatch("views have mixed dimensions".into()));
        }
        if !img.is_finite() {
            return Err(Error::NonFiniteSamples);
        }
    }
    Ok((h, w))
}

/// Fits the per-frequency ridge regression for fixed disparities and view
/// coordinates: at every 2D frequency, the layer coefficient vector minimizes
/// `|A x - b|^2 + lambda |x|^2` in closed form via the normal equations.
pub fn fit_fdl(
    views: &[(ViewCoord, RgbImage)],
    disparities: &[f64],
    coords: &[(f64, f64)],
    lambda: f64,
) -> Result<FdlModel> {
    if views.is_empty() {
        return Err(Error::EmptySubset);
    }
    if coords.len() != views.len() {
        return Err(Error::ShapeMismatch(
            "coords and views length mismatch".into(),
        ));
    }
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::FdlModel("lambda must be positive".into()));
    }
    let (h, w) = check_views(views)?;
    let disparities = canonicalize_disparities(disparities);
    validate_disparities(&disparities)?;
    let spectra = view_spectra(views);
    let tables = PhaseTables::build(coords, &disparities, h, w);
    let coeffs = solve_all_bins(&tables, &spectra, lambda, h, w)?;
    if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::NonFiniteSamples);
    }
    Ok(FdlModel {
        height: h,
        width: w,
        disparities,
        lambda,
        view_coords: coords.to_vec(),
        view_spectra: spectra,
        coeffs,
    })
}

/// Synthesizes the view at angular coordinate `(u, v)`: inverse transform of
/// the phase-shifted layer sum, real part, clamped to [0, 1].
pub fn synthesize_view(model: &FdlModel, coord: (f64, f64)) -> RgbImage {
    let (img, _) = synthesize_with_residue(model, coord);
    img
}

/// Synthesis plus the largest imaginary residue left by the inverse
/// transform (diagnostic for the Hermitian-symmetry contract).
pub fn synthesize_with_residue(model: &FdlModel, coord: (f64, f64)) -> (RgbImage, f64) {
    let n = model.layer_count();
    let (h, w) = (model.height, model.width);
    let tables = PhaseTables::build(&[coord], &model.disparities, h, w);
    let mut out = RgbImage::new(h, w);
    let mut max_residue: f64 = 0.0;
    let mut acc = vec![Complex64::default(); h * w];
    for ch in 0..3 {
        for (bin, slot) in acc.iter_mut().enumerate() {
            let (kr, kc) = (bin / w, bin % w);
            let mut s = Complex64::default();
            for k in 0..n {
                s += tables.entry(0, k, kr, kc) * model.coeff(bin, k, ch);
            }
            *slot = s;
        }
        let (plane, residue) = ifft2_split(h, w, &acc);
        max_residue = max_residue.max(residue);
        out.planes[ch] = plane.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    }
    (out, max_residue)
}

/// Re-solves the regression over the union of the model's accumulated views
/// and `new_views`. With no new views the model is returned unchanged,
/// bit for bit.
pub fn refine(
    model: &FdlModel,
    new_views: &[(ViewCoord, RgbImage)],
    new_coords: &[(f64, f64)],
    lambda: f64,
) -> Result<FdlModel> {
    if new_views.is_empty() {
        return Ok(model.clone());
    }
    if new_coords.len() != new_views.len() {
        return Err(Error::ShapeMismatch(
            "coords and views length mismatch".into(),
        ));
    }
    let (h, w) = check_views(new_views)?;
    if h != model.height || w != model.width {
        return Err(Error::ShapeMismatch(
            "new views do not match model dimensions".into(),
        ));
    }
    let mut spectra = model.view_spectra.clone();
    spectra.extend(view_spectra(new_views));
    let mut coords = model.view_coords.clone();
    coords.extend_from_slice(new_coords);
    let tables = PhaseTables::build(&coords, &model.disparities, h, w);
    let coeffs = solve_all_bins(&tables, &spectra, lambda, h, w)?;
    Ok(FdlModel {
        height: h,
        width: w,
        disparities: model.disparities.clone(),
        lambda,
        view_coords: coords,
        view_spectra: spectra,
        coeffs,
    })
}

/// Calibration output: disparities, per-input-view angular coordinates, and
/// the fitted grid baseline for positioning views the calibration never saw.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub disparities: Vec<f64>,
    pub coords: Vec<(f64, f64)>,
    pub baseline: f64,
    /// Set when the input carries no parallax information (all views
    /// identical with more than one layer requested).
    pub unidentifiable: bool,
    /// Band residual after each calibration iteration; non-increasing.
    pub residual_trace: Vec<f64>,
}

impl Calibration {
    pub fn coord_for(&self, vc: ViewCoord) -> (f64, f64) {
        (vc.s as f64 * self.baseline, vc.t as f64 * self.baseline)
    }
}

/// Low-frequency band: bins with both signed indices within 1/16 of the
/// sample rate (the lowest eighth of each axis' band).
fn low_band(h: usize, w: usize) -> Vec<usize> {
    let lim_r = (h / 16).max(1) as i32;
    let lim_c = (w / 16).max(1) as i32;
    let mut bins = Vec::new();
    for kr in 0..h {
        if signed_index(kr, h).abs() > lim_r {
            continue;
        }
        for kc in 0..w {
            if signed_index(kc, w).abs() <= lim_c {
                bins.push(kr * w + kc);
            }
        }
    }
    bins
}

/// Ridge residual over the band for luma spectra: sum of `|A x - b|^2` with
/// `x` re-solved per bin (profile residual).
fn band_residual(
    spectra: &[[Vec<Complex64>; 1]],
    coords: &[(f64, f64)],
    disparities: &[f64],
    lambda: f64,
    bins: &[usize],
    h: usize,
    w: usize,
) -> f64 {
    let n = disparities.len();
    let m = spectra.len();
    let tables = PhaseTables::build(coords, disparities, h, w);
    let mut total = 0.0;
    let mut a = vec![Complex64::default(); m * n];
    let mut g = vec![Complex64::default(); n * n];
    for &bin in bins {
        let (kr, kc) = (bin / w, bin % w);
        for j in 0..m {
            for k in 0..n {
                a[j * n + k] = tables.entry(j, k, kr, kc);
            }
        }
        for i in 0..n {
            for jj in i..n {
                let mut s = Complex64::default();
                for row in 0..m {
                    s += a[row * n + i].conj() * a[row * n + jj];
                }
                if i == jj {
                    s += lambda;
                }
                g[i * n + jj] = s;
                g[jj * n + i] = s.conj();
            }
        }
        let rhs_col: Vec<Complex64> = (0..n)
            .map(|k| {
                let mut s = Complex64::default();
                for row in 0..m {
                    s += a[row * n + k].conj() * spectra[row][0][bin];
                }
                s
            })
            .collect();
        let mut rhs = vec![rhs_col];
        if hermitian_solve(&mut g, &mut rhs, n).is_err() {
            return f64::INFINITY;
        }
        let x = &rhs[0];
        for row in 0..m {
            let mut s = Complex64::default();
            for k in 0..n {
                s += a[row * n + k] * x[k];
            }
            total += (s - spectra[row][0][bin]).norm_sqr();
        }
    }
    total
}

/// Golden-section refinement inside [lo, hi], assuming the coarse scan
/// bracketed the minimum.
fn golden_min(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Estimates layer disparities and view angular coordinates by block
/// coordinate descent on the low-band ridge residual of the luma spectra:
/// each disparity is updated by a bracketed golden-section line search, then
/// the grid baseline by a guarded Gauss-Newton step. Deterministic.
pub fn calibrate(views: &[(ViewCoord, RgbImage)], params: &FdlFitParams) -> Result<Calibration> {
    if views.len() < 2 {
        return Err(Error::TooFewViews);
    }
    let range_ok = params.d_min.partial_cmp(&params.d_max) == Some(std::cmp::Ordering::Less);
    if params.layer_count == 0 || !range_ok {
        return Err(Error::FdlModel("invalid calibration parameters".into()));
    }
    let (h, w) = check_views(views)?;
    let n = params.layer_count;

    let evenly_spaced = |n: usize| -> Vec<f64> {
        if n == 1 {
            vec![(params.d_min + params.d_max) / 2.0]
        } else {
            (0..n)
                .map(|i| {
                    params.d_min
                        + (params.d_max - params.d_min) * i as f64 / (n as f64 - 1.0)
                })
                .collect()
        }
    };

    // degenerate input: zero parallax cannot identify more than one layer
    let identical = views[1..].iter().all(|(_, img)| {
        img.planes
            .iter()
            .zip(&views[0].1.planes)
            .all(|(a, b)| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-12))
    });
    if identical && n > 1 {
        return Ok(Calibration {
            disparities: canonicalize_disparities(&evenly_spaced(n)),
            coords: views.iter().map(|(vc, _)| (vc.s as f64, vc.t as f64)).collect(),
            baseline: 1.0,
            unidentifiable: true,
            residual_trace: vec![],
        });
    }

    let spectra: Vec<[Vec<Complex64>; 1]> = views
        .iter()
        .map(|(_, img)| {
            let yuv = rgb_to_yuv(img);
            [fft2_real(h, w, &yuv.planes[0])]
        })
        .collect();
    let bins = low_band(h, w);
    let grid: Vec<(f64, f64)> = views.iter().map(|(vc, _)| (vc.s as f64, vc.t as f64)).collect();
    let coords_at = |b: f64| -> Vec<(f64, f64)> {
        grid.iter().map(|&(s, t)| (s * b, t * b)).collect()
    };

    let mut disparities = evenly_spaced(n);
    let mut baseline = 1.0f64;
    let residual = |d: &[f64], b: f64| -> f64 {
        band_residual(&spectra, &coords_at(b), d, params.lambda, &bins, h, w)
    };
    let mut best = residual(&disparities, baseline);
    let mut trace = vec![best];

    const SCAN_POINTS: usize = 17;
    for _ in 0..params.calib_iters {
        for k in 0..n {
            let eval = |x: f64, d: &[f64]| {
                let mut cand = d.to_vec();
                cand[k] = x;
                residual(&cand, baseline)
            };
            // coarse bracket scan, keeping the current value as a candidate
            let mut best_x = disparities[k];
            let mut best_r = best;
            let span = params.d_max - params.d_min;
            for i in 0..SCAN_POINTS {
                let x = params.d_min + span * i as f64 / (SCAN_POINTS as f64 - 1.0);
                let r = eval(x, &disparities);
                if r < best_r {
                    best_r = r;
                    best_x = x;
                }
            }
            let half = span / (SCAN_POINTS as f64 - 1.0);
            let lo = (best_x - half).max(params.d_min);
            let hi = (best_x + half).min(params.d_max);
            let (gx, gr) = golden_min(|x| eval(x, &disparities), lo, hi, 1e-4);
            if gr < best_r {
                best_r = gr;
                best_x = gx;
            }
            if best_r < best {
                disparities[k] = best_x;
                best = best_r;
            }
        }
        disparities = canonicalize_disparities(&disparities);
        best = residual(&disparities, baseline);

        // guarded Gauss-Newton on the shared baseline; the u*d product is
        // scale invariant, so only accept steps that clearly reduce residual
        let step = 1e-3;
        let rp = residual(&disparities, baseline + step);
        let rm = residual(&disparities, baseline - step);
        let grad = (rp - rm) / (2.0 * step);
        let curv = (rp - 2.0 * best + rm) / (step * step);
        if curv > 0.0 && grad.is_finite() {
            let cand = (baseline - grad / curv).clamp(0.25, 4.0);
            let rc = residual(&disparities, cand);
            if rc < best * (1.0 - 1e-3) {
                baseline = cand;
                best = rc;
            }
        }
        let prev = *trace.last().unwrap();
        trace.push(best);
        if prev - best <= 1e-9 * prev.max(1e-30) {
            break;
        }
    }

    Ok(Calibration {
        disparities,
        coords: coords_at(baseline),
        baseline,
        unidentifiable: false,
        residual_trace: trace,
    })
}

/// Serialized FDL metadata: `u32 n`, n disparities (f64), `u32 m`, m (u, v)
/// pairs (f64 each), then the absolute ridge lambda (f64). Little-endian.
pub fn serialize_metadata(disparities: &[f64], coords: &[(f64, f64)], lambda: f64) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + disparities.len() * 8 + coords.len() * 16 + 8);
    out.extend_from_slice(&(disparities.len() as u32).to_le_bytes());
    for d in disparities {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out.extend_from_slice(&(coords.len() as u32).to_le_bytes());
    for (u, v) in coords {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&lambda.to_le_bytes());
    out
}

/// Parsed FDL metadata: disparities, per-view coordinates, ridge lambda.
pub type FdlMetadata = (Vec<f64>, Vec<(f64, f64)>, f64);

pub fn parse_metadata(bytes: &[u8]) -> Result<FdlMetadata> {
    let mut r = crate::codec::ByteReader::new(bytes);
    let n = r.u32("layer count")? as usize;
    if n == 0 || n > 4096 {
        return Err(Error::DecodeError {
            offset: 0,
            reason: format!("layer count {n} out of range"),
        });
    }
    let mut disparities = Vec::with_capacity(n);
    for _ in 0..n {
        disparities.push(r.f64("disparity")?);
    }
    validate_disparities(&disparities)?;
    let m = r.u32("view count")? as usize;
    if m == 0 || m > 65536 {
        return Err(Error::DecodeError {
            offset: r.pos(),
            reason: format!("view count {m} out of range"),
        });
    }
    let mut coords = Vec::with_capacity(m);
    for _ in 0..m {
        let u = r.f64("coord u")?;
        let v = r.f64("coord v")?;
        if !u.is_finite() || !v.is_finite() {
            return Err(Error::DecodeError {
                offset: r.pos(),
                reason: "non-finite view coordinate".into(),
            });
        }
        coords.push((u, v));
    }
    let lambda = r.f64("lambda")?;
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(Error::DecodeError {
            offset: r.pos(),
            reason: "invalid lambda".into(),
        });
    }
    if r.remaining() != 0 {
        return Err(Error::DecodeError {
            offset: r.pos(),
            reason: "trailing metadata bytes".into(),
        });
    }
    Ok((disparities, coords, lambda))
}

/// Separable raised-cosine border window of the given border width, with a
/// floor so the post-synthesis compensation (division) stays conditioned.
pub fn border_window(h: usize, w: usize, border: usize, floor: f64) -> Vec<f64> {
    let ramp = |i: usize, n: usize| -> f64 {
        let b = border.min(n / 4).max(1);
        let pos = i.min(n - 1 - i);
        if pos >= b {
            1.0
        } else {
            let rc = 0.5 * (1.0 - (std::f64::consts::PI * (pos as f64 + 0.5) / b as f64).cos());
            floor + (1.0 - floor) * rc
        }
    };
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        let wr = ramp(r, h);
        for c in 0..w {
            out[r * w + c] = wr * ramp(c, w);
        }
    }
    out
}

pub fn apply_window(img: &RgbImage, window: &[f64]) -> RgbImage {
    let mut out = img.clone();
    for p in &mut out.planes {
        for (v, w) in p.iter_mut().zip(window) {
            *v *= w;
        }
    }
    out
}

pub fn remove_window(img: &RgbImage, window: &[f64]) -> RgbImage {
    let mut out = img.clone();
    for p in &mut out.planes {
        for (v, w) in p.iter_mut().zip(window) {
            *v /= w;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{band_limited_texture, Texture};

    fn grid_coords(half: i32) -> Vec<ViewCoord> {
        let mut out = Vec::new();
        for s in -half..=half {
            for t in -half..=half {
                out.push(ViewCoord::new(s, t));
            }
        }
        out
    }

    fn shifted_views(tex: &Texture, coords: &[ViewCoord], d: f64, h: usize, w: usize) -> Vec<(ViewCoord, RgbImage)> {
        coords
            .iter()
            .map(|&vc| {
                let img = RgbImage::from_fn(h, w, |ch, r, c| {
                    tex.eval(ch, r as f64 + vc.s as f64 * d, c as f64 + vc.t as f64 * d)
                });
                (vc, img)
            })
            .collect()
    }

    #[test]
    fn identical_views_single_layer_reproduces_input() {
        let tex = band_limited_texture(7, 16, 16);
        let img = RgbImage::from_fn(16, 16, |ch, r, c| tex.eval(ch, r as f64, c as f64));
        let coords = grid_coords(1);
        let views: Vec<_> = coords.iter().map(|&c| (c, img.clone())).collect();
        let angular: Vec<_> = coords.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let model = fit_fdl(&views, &[0.0], &angular, 1e-4).unwrap();
        for &(u, v) in &[(0.0, 0.0), (1.0, -1.0), (0.5, 0.25)] {
            let synth = synthesize_view(&model, (u, v));
            let rms = synth.mse(&img).sqrt();
            assert!(rms <= 1e-4, "rms {rms} at ({u},{v})");
        }
    }

    #[test]
    fn single_view_ridge_bias_matches_scalar_formula() {
        let tex = band_limited_texture(3, 16, 16);
        let img = RgbImage::from_fn(16, 16, |ch, r, c| tex.eval(ch, r as f64, c as f64));
        let lambda = 0.3; // large lambda so the bias is visible
        let views = vec![(ViewCoord::new(0, 0), img.clone())];
        let model = fit_fdl(&views, &[0.0], &[(0.0, 0.0)], lambda).unwrap();
        // scalar ridge: x = b / (1 + lambda); synthesis = b / (1 + lambda)
        let synth = synthesize_with_residue(&model, (0.0, 0.0)).0;
        let mean_in: f64 = img.planes[0].iter().sum::<f64>() / 256.0;
        let mean_out: f64 = synth.planes[0].iter().sum::<f64>() / 256.0;
        let expect = mean_in / (1.0 + lambda);
        assert!(
            (mean_out - expect).abs() < 1e-9,
            "mean {mean_out} vs {expect}"
        );
    }

    #[test]
    fn two_views_of_shifted_sinusoid_fit_exactly() {
        // disparity 1, coordinates -1 and +1: residual at every band bin
        // should collapse to ridge-bias level
        let tex = band_limited_texture(5, 16, 16);
        let coords = [ViewCoord::new(-1, 0), ViewCoord::new(1, 0)];
        let views = shifted_views(&tex, &coords, 1.0, 16, 16);
        let angular: Vec<_> = coords.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let model = fit_fdl(&views, &[1.0], &angular, 1e-9).unwrap();
        for (i, (_, img)) in views.iter().enumerate() {
            let synth = synthesize_view(&model, angular[i]);
            let rms = synth.mse(img).sqrt();
            assert!(rms <= 1e-6, "view {i} rms {rms}");
        }
    }

    #[test]
    fn center_synthesis_is_the_layer_sum() {
        // at (0, 0) every phase factor is 1: output = sum of layer images
        let (h, w) = (16usize, 16usize);
        let tex_a = band_limited_texture(41, h, w);
        let tex_b = band_limited_texture(42, h, w);
        let img_a = RgbImage::from_fn(h, w, |ch, r, c| 0.4 * tex_a.eval(ch, r as f64, c as f64));
        let img_b = RgbImage::from_fn(h, w, |ch, r, c| 0.4 * tex_b.eval(ch, r as f64, c as f64));
        let spec_a: [Vec<Complex64>; 3] =
            std::array::from_fn(|ch| fft2_real(h, w, &img_a.planes[ch]));
        let spec_b: [Vec<Complex64>; 3] =
            std::array::from_fn(|ch| fft2_real(h, w, &img_b.planes[ch]));
        let model =
            FdlModel::from_layer_spectra(h, w, vec![-1.0, 1.0], &[spec_a, spec_b], 1e-4).unwrap();
        let synth = synthesize_view(&model, (0.0, 0.0));
        for ch in 0..3 {
            for i in 0..h * w {
                let expect = (img_a.planes[ch][i] + img_b.planes[ch][i]).clamp(0.0, 1.0);
                assert!((synth.planes[ch][i] - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fitted_views_synthesize_above_35db() {
        // round trip at the default ridge weight on a band-limited scene
        let tex = band_limited_texture(44, 32, 32);
        let coords = grid_coords(1);
        let views = shifted_views(&tex, &coords, 1.0, 32, 32);
        let angular: Vec<_> = coords.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let model = fit_fdl(&views, &[0.0, 1.0], &angular, 1e-4).unwrap();
        for (i, (_, img)) in views.iter().enumerate() {
            let psnr = synthesize_view(&model, angular[i]).psnr(img);
            assert!(psnr >= 35.0, "view {i}: {psnr:.2} dB");
        }
    }

    #[test]
    fn shift_theorem_single_layer() {
        let tex = band_limited_texture(11, 32, 32);
        let img = RgbImage::from_fn(32, 32, |ch, r, c| tex.eval(ch, r as f64, c as f64));
        let spectra: [Vec<Complex64>; 3] =
            std::array::from_fn(|ch| fft2_real(32, 32, &img.planes[ch]));
        let model =
            FdlModel::from_layer_spectra(32, 32, vec![1.0], &[spectra], 1e-4).unwrap();
        // d = 1, u = 2: output equals the layer circularly shifted by 2 px
        let synth = synthesize_view(&model, (2.0, 0.0));
        let mut sq = 0.0;
        for ch in 0..3 {
            for r in 0..32usize {
                for c in 0..32usize {
                    let shifted = img.get(ch, (r + 2) % 32, c);
                    let d = synth.get(ch, r, c) - shifted;
                    sq += d * d;
                }
            }
        }
        let rms = (sq / (32.0 * 32.0 * 3.0)).sqrt();
        assert!(rms <= 1e-6, "rms {rms}");
    }

    #[test]
    fn shift_theorem_relative_form() {
        // synthesize(u) equals circshift(synthesize(0), u*d) for one layer
        let tex = band_limited_texture(13, 16, 16);
        let img = RgbImage::from_fn(16, 16, |ch, r, c| tex.eval(ch, r as f64, c as f64));
        let spectra: [Vec<Complex64>; 3] =
            std::array::from_fn(|ch| fft2_real(16, 16, &img.planes[ch]));
        let model =
            FdlModel::from_layer_spectra(16, 16, vec![-2.0], &[spectra], 1e-4).unwrap();
        let base = synthesize_view(&model, (0.0, 0.0));
        let moved = synthesize_view(&model, (0.0, 1.0));
        // d = -2, v = 1: shift by -2 along columns
        let mut sq = 0.0;
        for ch in 0..3 {
            for r in 0..16usize {
                for c in 0..16usize {
                    let expect = base.get(ch, r, (c + 16 - 2) % 16);
                    let d = moved.get(ch, r, c) - expect;
                    sq += d * d;
                }
            }
        }
        let rms = (sq / (16.0 * 16.0 * 3.0)).sqrt();
        assert!(rms <= 1e-6, "rms {rms}");
    }

    #[test]
    fn synthesized_images_are_real() {
        let tex = band_limited_texture(2, 16, 16);
        let coords = grid_coords(1);
        let views = shifted_views(&tex, &coords, 0.5, 16, 16);
        let angular: Vec<_> = coords.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let model = fit_fdl(&views, &[0.0, 0.5, 1.0], &angular, 1e-4).unwrap();
        let (_, residue) = synthesize_with_residue(&model, (0.7, -0.3));
        assert!(residue <= 1e-8, "imaginary residue {residue}");
    }

    #[test]
    fn fit_is_linear_in_views() {
        let tex = band_limited_texture(4, 16, 16);
        let coords = grid_coords(1);
        let views = shifted_views(&tex, &coords, 1.0, 16, 16);
        let angular: Vec<_> = coords.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let alpha = 0.5;
        let scaled: Vec<_> = views
            .iter()
            .map(|(c, img)| {
                let mut im = img.clone();
                im.planes
                    .iter_mut()
                    .for_each(|p| p.iter_mut().for_each(|v| *v *= alpha));
                (*c, im)
            })
            .collect();
        let m1 = fit_fdl(&views, &[1.0], &angular, 1e-4).unwrap();
        let m2 = fit_fdl(&scaled, &[1.0], &angular, 1e-4).unwrap();
        for (a, b) in m1.coeffs.iter().zip(&m2.coeffs) {
            assert!((a * alpha - b).norm() < 1e-9);
        }
    }

    #[test]
    fn bin_solves_are_order_independent() {
        let tex = band_limited_texture(8, 8, 8);
        let coords = grid_coords(1);
        let views = shifted_views(&tex, &coords, 0.5, 8, 8);
        let angular: Vec<_> = coords.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let spectra = view_spectra(&views);
        let d = [0.0, 0.5];
        let tables = PhaseTables::build(&angular, &d, 8, 8);
        let full = solve_all_bins(&tables, &spectra, 1e-4, 8, 8).unwrap();
        // solve two bins in reverse order into separate buffers
        for bin in [0usize, 17, 63] {
            let mut chunk = vec![Complex64::default(); d.len() * 3];
            solve_bin(bin, &tables, &spectra, 1e-4, &mut chunk).unwrap();
            for (i, v) in chunk.iter().enumerate() {
                assert_eq!(*v, full[bin * d.len() * 3 + i]);
            }
        }
    }

    #[test]
    fn refine_with_no_views_is_identity() {
        let tex = band_limited_texture(6, 8, 8);
        let coords = grid_coords(1);
        let views = shifted_views(&tex, &coords, 1.0, 8, 8);
        let angular: Vec<_> = coords.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let model = fit_fdl(&views, &[0.0, 1.0], &angular, 1e-4).unwrap();
        let refined = refine(&model, &[], &[], 1e-4).unwrap();
        assert_eq!(model.coeffs, refined.coeffs);
        assert_eq!(model.view_coords, refined.view_coords);
    }

    #[test]
    fn refine_with_duplicate_view_does_not_hurt_it() {
        let tex = band_limited_texture(9, 16, 16);
        let coords = grid_coords(1);
        let views = shifted_views(&tex, &coords, 1.0, 16, 16);
        let angular: Vec<_> = coords.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let model = fit_fdl(&views, &[0.5, 1.0], &angular, 1e-4).unwrap();
        let dup = vec![views[4].clone()];
        let refined = refine(&model, &dup, &[angular[4]], 1e-4).unwrap();
        let before = synthesize_view(&model, angular[4]).mse(&views[4].1);
        let after = synthesize_view(&refined, angular[4]).mse(&views[4].1);
        assert!(after <= before + 1e-12, "{after} vs {before}");
    }

    #[test]
    fn refine_does_not_degrade_previous_views() {
        let tex = band_limited_texture(10, 16, 16);
        let all = grid_coords(1);
        let first: Vec<_> = all[..5].to_vec();
        let second: Vec<_> = all[5..].to_vec();
        let views1 = shifted_views(&tex, &first, 1.0, 16, 16);
        let views2 = shifted_views(&tex, &second, 1.0, 16, 16);
        let ang1: Vec<_> = first.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let ang2: Vec<_> = second.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let model = fit_fdl(&views1, &[0.0, 1.0], &ang1, 1e-4).unwrap();
        let refined = refine(&model, &views2, &ang2, 1e-4).unwrap();
        for (i, (_, img)) in views1.iter().enumerate() {
            let before = synthesize_view(&model, ang1[i]).mse(img).sqrt();
            let after = synthesize_view(&refined, ang1[i]).mse(img).sqrt();
            assert!(after <= before + 1e-3, "view {i}: {after} vs {before}");
        }
    }

    #[test]
    fn refine_improves_unseen_subset() {
        let tex = band_limited_texture(12, 16, 16);
        let all = grid_coords(2);
        let (first, second): (Vec<_>, Vec<_>) =
            all.iter().partition(|c| c.radius() <= 1);
        let views1 = shifted_views(&tex, &first, 1.0, 16, 16);
        let views2 = shifted_views(&tex, &second, 1.0, 16, 16);
        let ang1: Vec<_> = first.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let ang2: Vec<_> = second.iter().map(|c| (c.s as f64, c.t as f64)).collect();
        let model = fit_fdl(&views1, &[0.5, 1.5], &ang1, 1e-4).unwrap();
        let refined = refine(&model, &views2, &ang2, 1e-4).unwrap();
        let mut before = 0.0;
        let mut after = 0.0;
        for (i, (_, img)) in views2.iter().enumerate() {
            before += synthesize_view(&model, ang2[i]).mse(img);
            after += synthesize_view(&refined, ang2[i]).mse(img);
        }
        assert!(after <= before, "{after} vs {before}");
    }

    #[test]
    fn calibrate_recovers_single_plane_disparity() {
        let tex = band_limited_texture(21, 32, 32);
        let coords = grid_coords(1);
        let d0 = 1.0;
        let views = shifted_views(&tex, &coords, d0, 32, 32);
        let params = FdlFitParams {
            layer_count: 1,
            ..Default::default()
        };
        let calib = calibrate(&views, &params).unwrap();
        assert!(!calib.unidentifiable);
        assert!(
            (calib.disparities[0] - d0).abs() <= 0.05,
            "recovered {} for planted {d0}",
            calib.disparities[0]
        );
    }

    #[test]
    fn calibrate_identical_views_single_layer_finds_zero() {
        let tex = band_limited_texture(22, 16, 16);
        let img = RgbImage::from_fn(16, 16, |ch, r, c| tex.eval(ch, r as f64, c as f64));
        let coords = grid_coords(1);
        let views: Vec<_> = coords.iter().map(|&c| (c, img.clone())).collect();
        let params = FdlFitParams {
            layer_count: 1,
            ..Default::default()
        };
        let calib = calibrate(&views, &params).unwrap();
        assert!(calib.disparities[0].abs() <= 0.05, "{}", calib.disparities[0]);
    }

    #[test]
    fn calibrate_flags_degenerate_multi_layer_input() {
        let img = RgbImage::constant(8, 8, [0.5; 3]);
        let coords = grid_coords(1);
        let views: Vec<_> = coords.iter().map(|&c| (c, img.clone())).collect();
        let params = FdlFitParams {
            layer_count: 3,
            ..Default::default()
        };
        let calib = calibrate(&views, &params).unwrap();
        assert!(calib.unidentifiable);
        assert_eq!(calib.disparities.len(), 3);
        assert!((calib.disparities[0] - params.d_min).abs() < 1e-9);
        assert!((calib.disparities[2] - params.d_max).abs() < 1e-9);
    }

    #[test]
    fn calibration_residual_trace_is_non_increasing() {
        let tex = band_limited_texture(25, 16, 16);
        let coords = grid_coords(1);
        let views = shifted_views(&tex, &coords, 0.75, 16, 16);
        let params = FdlFitParams {
            layer_count: 2,
            calib_iters: 4,
            ..Default::default()
        };
        let calib = calibrate(&views, &params).unwrap();
        for w in calib.residual_trace.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn too_few_views_is_rejected() {
        let img = RgbImage::constant(8, 8, [0.5; 3]);
        assert!(matches!(
            calibrate(&[(ViewCoord::new(0, 0), img)], &FdlFitParams::default()),
            Err(Error::TooFewViews)
        ));
    }

    #[test]
    fn metadata_round_trip() {
        let d = vec![-1.5, 0.0, 0.25];
        let coords = vec![(0.0, 0.0), (1.0, -1.0), (2.5, 0.5)];
        let bytes = serialize_metadata(&d, &coords, 3e-4);
        let (d2, c2, l2) = parse_metadata(&bytes).unwrap();
        assert_eq!(d, d2);
        assert_eq!(coords, c2);
        assert_eq!(l2, 3e-4);
    }

    #[test]
    fn metadata_rejects_truncation_and_garbage() {
        let bytes = serialize_metadata(&[0.0, 1.0], &[(0.0, 0.0)], 1e-4);
        for cut in [0, 3, 11, bytes.len() - 1] {
            assert!(parse_metadata(&bytes[..cut]).is_err());
        }
        let mut garbage = bytes.clone();
        garbage[0] = 0xff;
        garbage[1] = 0xff;
        assert!(parse_metadata(&garbage).is_err());
    }

    #[test]
    fn window_apply_remove_is_identity() {
        let tex = band_limited_texture(30, 24, 24);
        let img = RgbImage::from_fn(24, 24, |ch, r, c| tex.eval(ch, r as f64, c as f64));
        let win = border_window(24, 24, 8, 0.15);
        let lo = 0.15 * 0.15 - 1e-12;
        assert!(win.iter().all(|&v| (lo..=1.0).contains(&v)));
        let back = remove_window(&apply_window(&img, &win), &win);
        for ch in 0..3 {
            for (a, b) in img.planes[ch].iter().zip(&back.planes[ch]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
