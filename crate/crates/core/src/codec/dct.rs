//! 8x8 DCT-II transform and the QP-to-step law.
//!
//! The orthonormal basis and the step table are frozen as literals so
//! baseline payloads are byte-identical across platforms.

pub const BLOCK: usize = 8;

/// Orthonormal 1D DCT-II basis: `DCT8[k][n] = c_k * cos((2n+1) k pi / 16)`.
pub const DCT8: [[f64; 8]; 8] = [
    [
        0.3535533905932738,
        0.3535533905932738,
        0.3535533905932738,
        0.3535533905932738,
        0.3535533905932738,
        0.3535533905932738,
        0.3535533905932738,
        0.3535533905932738,
    ],
    [
        0.4903926402016152,
        0.4157348061512726,
        0.27778511650980114,
        0.09754516100806417,
        -0.0975451610080641,
        -0.277785116509801,
        -0.4157348061512727,
        -0.4903926402016152,
    ],
    [
        0.46193976625564337,
        0.19134171618254492,
        -0.19134171618254486,
        -0.46193976625564337,
        -0.4619397662556434,
        -0.19134171618254517,
        0.191341716182545,
        0.46193976625564326,
    ],
    [
        0.4157348061512726,
        -0.0975451610080641,
        -0.4903926402016152,
        -0.2777851165098011,
        0.2777851165098009,
        0.4903926402016152,
        0.09754516100806439,
        -0.41573480615127256,
    ],
    [
        0.3535533905932738,
        -0.35355339059327373,
        -0.35355339059327384,
        0.3535533905932737,
        0.35355339059327384,
        -0.35355339059327334,
        -0.35355339059327356,
        0.3535533905932733,
    ],
    [
        0.27778511650980114,
        -0.4903926402016152,
        0.09754516100806415,
        0.41573480615127273,
        -0.41573480615127256,
        -0.09754516100806401,
        0.4903926402016153,
        -0.27778511650980076,
    ],
    [
        0.19134171618254492,
        -0.4619397662556434,
        0.46193976625564326,
        -0.19134171618254495,
        -0.19134171618254528,
        0.46193976625564337,
        -0.4619397662556432,
        0.19134171618254478,
    ],
    [
        0.09754516100806417,
        -0.2777851165098011,
        0.41573480615127273,
        -0.4903926402016153,
        0.4903926402016152,
        -0.4157348061512725,
        0.27778511650980076,
        -0.09754516100806429,
    ],
];

/// HEVC-style QP-to-step law `2^((qp - 4) / 6)` in the 8-bit sample domain,
/// with qp 0 reserved as the lossless escape (step 1, identity transform).
#[allow(clippy::approx_constant)] // frozen literal table; entries land on 2^(k/6)
pub const QP_STEP: [f64; 52] = [
    1.0,
    0.7071067811865476,
    0.7937005259840998,
    0.8908987181403393,
    1.0,
    1.122462048309373,
    1.2599210498948732,
    1.4142135623730951,
    1.5874010519681994,
    1.7817974362806785,
    2.0,
    2.244924096618746,
    2.5198420997897464,
    2.8284271247461903,
    3.174802103936399,
    3.563594872561357,
    4.0,
    4.489848193237491,
    5.039684199579493,
    5.656854249492381,
    6.3496042078727974,
    7.127189745122715,
    8.0,
    8.979696386474982,
    10.079368399158986,
    11.313708498984761,
    12.699208415745595,
    14.25437949024543,
    16.0,
    17.959392772949972,
    20.158736798317967,
    22.627416997969522,
    25.398416831491197,
    28.508758980490853,
    32.0,
    35.918785545899944,
    40.317473596635935,
    45.254833995939045,
    50.796833662982394,
    57.017517960981706,
    64.0,
    71.83757109179989,
    80.63494719327187,
    90.50966799187809,
    101.59366732596479,
    114.03503592196341,
    128.0,
    143.67514218359977,
    161.26989438654374,
    181.01933598375618,
    203.18733465192958,
    228.07007184392683,
];

/// Standard zig-zag scan: position in scan order -> row-major block index.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

/// Forward 2D DCT of one 8x8 block, `out = D x Dt`.
pub fn forward(block: &[f64; 64], out: &mut [f64; 64]) {
    let mut tmp = [0.0f64; 64];
    // rows: tmp = x * Dt
    for r in 0..BLOCK {
        for k in 0..BLOCK {
            let mut acc = 0.0;
            for n in 0..BLOCK {
                acc += block[r * BLOCK + n] * DCT8[k][n];
            }
            tmp[r * BLOCK + k] = acc;
        }
    }
    // cols: out = D * tmp
    for k in 0..BLOCK {
        for c in 0..BLOCK {
            let mut acc = 0.0;
            for n in 0..BLOCK {
                acc += DCT8[k][n] * tmp[n * BLOCK + c];
            }
            out[k * BLOCK + c] = acc;
        }
    }
}

/// Inverse 2D DCT, `out = Dt x D`.
pub fn inverse(block: &[f64; 64], out: &mut [f64; 64]) {
    let mut tmp = [0.0f64; 64];
    for r in 0..BLOCK {
        for k in 0..BLOCK {
            let mut acc = 0.0;
            for n in 0..BLOCK {
                acc += block[r * BLOCK + n] * DCT8[n][k];
            }
            tmp[r * BLOCK + k] = acc;
        }
    }
    for k in 0..BLOCK {
        for c in 0..BLOCK {
            let mut acc = 0.0;
            for n in 0..BLOCK {
                acc += DCT8[n][k] * tmp[n * BLOCK + c];
            }
            out[k * BLOCK + c] = acc;
        }
    }
}
