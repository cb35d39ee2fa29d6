//! Randomized Block-Krylov SVD low-rank approximation of channel-stacked
//! layer matrices.
//!
//! The three transmittance layers of one color channel are stacked into a
//! `3m x n` matrix; a randomized block-Krylov iteration builds an orthonormal
//! subspace capturing the dominant singular directions, and projecting onto
//! its top-k vectors yields a rank-k approximation within `(1 + eps)` of the
//! optimal spectral-norm error with high probability over the sketch.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::layers::{LayerStack, TRANSMITTANCE_FLOOR};
use crate::rng::{derive_seed, seeded_rng};

/// One color channel of a layer stack, rows ordered T_{-1}, T_0, T_{+1}.
#[derive(Debug, Clone)]
pub struct StackedChannelMatrix {
    pub data: DMatrix<f64>,
    /// Height of a single layer; `data` has `3 * layer_rows` rows.
    pub layer_rows: usize,
}

/// Parameters of the Block-Krylov approximation.
#[derive(Debug, Clone)]
pub struct BkSvdParams {
    pub rank: usize,
    pub epsilon: f64,
    /// Krylov iteration count; 0 selects `ceil(ln(n) / sqrt(eps))`, clamped to [2, 32].
    pub iterations: usize,
    pub rng_seed: u64,
}

impl Default for BkSvdParams {
    fn default() -> Self {
        Self {
            rank: 8,
            epsilon: 0.1,
            iterations: 0,
            rng_seed: 0,
        }
    }
}

fn auto_iterations(cols: usize, epsilon: f64) -> usize {
    let q = ((cols.max(2) as f64).ln() / epsilon.sqrt()).ceil() as usize;
    q.clamp(2, 32)
}

/// Stacks the three layers of each color channel into one `3m x n` matrix.
pub fn stack_channels(stack: &LayerStack) -> [StackedChannelMatrix; 3] {
    let m = stack.padded_height();
    let n = stack.padded_width();
    std::array::from_fn(|ch| {
        let mut data = DMatrix::zeros(3 * m, n);
        for (li, layer) in stack.layers.iter().enumerate() {
            for r in 0..m {
                for c in 0..n {
                    data[(li * m + r, c)] = layer.planes[ch][r * n + c];
                }
            }
        }
        StackedChannelMatrix {
            data,
            layer_rows: m,
        }
    })
}

/// Rebuilds a [`LayerStack`] from per-channel matrices by sectioning the rows
/// into thirds. Values are clamped back into the valid transmittance range
/// (the approximation can exit it).
pub fn unstack_channels(
    red: &StackedChannelMatrix,
    green: &StackedChannelMatrix,
    blue: &StackedChannelMatrix,
    pad: usize,
) -> Result<LayerStack> {
    let channels = [red, green, blue];
    let (rows, cols) = (red.data.nrows(), red.data.ncols());
    if rows % 3 != 0 {
        return Err(Error::ShapeMismatch(format!(
            "row count {rows} not divisible by 3"
        )));
    }
    for ch in &channels {
        if ch.data.nrows() != rows || ch.data.ncols() != cols {
            return Err(Error::ShapeMismatch("channel shapes differ".to_string()));
        }
    }
    let m = rows / 3;
    let mut layers: [RgbImage; 3] = std::array::from_fn(|_| RgbImage::new(m, cols));
    for (li, layer) in layers.iter_mut().enumerate() {
        for (ci, ch) in channels.iter().enumerate() {
            for r in 0..m {
                for c in 0..cols {
                    layer.planes[ci][r * cols + c] =
                        ch.data[(li * m + r, c)].clamp(TRANSMITTANCE_FLOOR, 1.0);
                }
            }
        }
    }
    LayerStack::new(pad, layers)
}

fn validate(a: &DMatrix<f64>, params: &BkSvdParams) -> Result<()> {
    if params.rank == 0 || params.rank > a.nrows().min(a.ncols()) {
        return Err(Error::RankOutOfRange {
            rank: params.rank,
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if params.epsilon <= 0.0 || params.epsilon.is_nan() {
        return Err(Error::ShapeMismatch("epsilon must be positive".into()));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSamples);
    }
    Ok(())
}

fn gaussian_sketch(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = seeded_rng(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

/// Orthonormal rank-k basis of the block-Krylov subspace of `a`.
///
/// Blocks `(A A^T)^i A Pi` are built with re-orthonormalization after every
/// multiplication (raw powers overflow), jointly orthonormalized into Q, and
/// the top-k eigenvectors of `(Q^T A)(Q^T A)^T` select the basis `Q U_k`.
pub fn bk_svd_basis(a: &DMatrix<f64>, params: &BkSvdParams) -> Result<DMatrix<f64>> {
    validate(a, params)?;
    let k = params.rank;
    let q_iters = if params.iterations == 0 {
        auto_iterations(a.ncols(), params.epsilon)
    } else {
        params.iterations
    };

    let sketch = gaussian_sketch(a.ncols(), k, params.rng_seed);
    let mut block = orthonormalize(&(a * &sketch));
    let mut krylov = DMatrix::zeros(a.nrows(), (q_iters + 1) * k);
    krylov.columns_mut(0, block.ncols()).copy_from(&block);
    for i in 1..=q_iters {
        block = orthonormalize(&(a * (a.transpose() * &block)));
        krylov.columns_mut(i * k, block.ncols()).copy_from(&block);
    }
    let q = orthonormalize(&krylov);

    let w = q.transpose() * a;
    let s = &w * w.transpose();
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut top_k = DMatrix::zeros(q.ncols(), k);
    for (out_col, &src_col) in order.iter().take(k).enumerate() {
        top_k
            .column_mut(out_col)
            .copy_from(&eig.eigenvectors.column(src_col));
    }
    Ok(&q * top_k)
}

/// Rank-k approximation `D D^T A` of `a`, where `D` is the block-Krylov basis
/// of [`bk_svd_basis`]. Deterministic for a fixed `rng_seed`; satisfies the
/// spectral guarantee `‖A − D Dᵀ A‖₂ ≤ (1 + eps) ‖A − A_k‖₂` with probability
/// at least 99/100 over the sketch.
pub fn bk_svd_lowrank(a: &DMatrix<f64>, params: &BkSvdParams) -> Result<DMatrix<f64>> {
    let basis = bk_svd_basis(a, params)?;
    Ok(&basis * (basis.transpose() * a))
}

/// Applies the per-channel Block-Krylov approximation to a layer stack.
///
/// Channels use independent seed-derived sketch streams; the requested rank
/// is clamped to the stack's own limit `min(3m, n)` so a "full rank" request
/// stays valid for any pad.
pub fn approximate_stack(stack: &LayerStack, params: &BkSvdParams) -> Result<LayerStack> {
    let channels = stack_channels(stack);
    let max_rank = channels[0].data.nrows().min(channels[0].data.ncols());
    let mut approx: Vec<StackedChannelMatrix> = Vec::with_capacity(3);
    for (ci, ch) in channels.iter().enumerate() {
        let ch_params = BkSvdParams {
            rank: params.rank.min(max_rank),
            rng_seed: derive_seed(params.rng_seed, &[ci as u64]),
            ..params.clone()
        };
        let data = bk_svd_lowrank(&ch.data, &ch_params)?;
        approx.push(StackedChannelMatrix {
            data,
            layer_rows: ch.layer_rows,
        });
    }
    unstack_channels(&approx[0], &approx[1], &approx[2], stack.pad)
}

/// Largest singular value, used by the guarantee checks.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}
