//! End-to-end encoder/decoder orchestration and the container bitstream.
//!
//! Stage I factorizes each view subset into multiplicative layers, applies
//! the Block-Krylov low-rank approximation, and passes the layers through
//! the codec in-loop: the approximated light field L' that stage II sees is
//! always reconstructed from *decoded* layers. Stage II codes L's first
//! subset directly, calibrates and fits a Fourier disparity layer model on
//! the decoded views, then walks the remaining subsets: synthesize a
//! prediction, code the residual, add the decoded residual back, and refine
//! the model with the reconstruction. The decoder mirrors stage II exactly,
//! so its model state after every subset is bit-identical to the encoder's.
//!
//! Container layout (little-endian): magic `LFHC`, u16 version, u8 scan
//! order, u16 rank, u8 qp, u16 S, u16 T, u16 H, u16 W, u8 flags (bit 0 =
//! stage-1 payloads present), u32 metadata length + metadata, u32 payload
//! count, then u32-length-prefixed payloads. Transmitted payloads are the
//! stage-II subset payloads; stage-1 layer payloads are appended only when
//! requested (three per subset, disparity order).

use std::collections::HashMap;

use rayon::prelude::*;

use crate::bksvd::{approximate_stack, BkSvdParams};
use crate::codec::{decode_frames, encode_frames, ByteReader, CodecConfig, CodedPayload};
use crate::color::rgb_to_yuv;
use crate::error::{Error, Result};
use crate::fdl::{
    apply_window, border_window, calibrate, fit_fdl, parse_metadata, refine, remove_window,
    serialize_metadata, synthesize_view, FdlFitParams, FdlModel,
};
use crate::image::RgbImage;
use crate::layers::{optimize_layers, reconstruct_subset, LayerOptOptions, LayerStack};
use crate::lightfield::{LightField, ViewCoord};
use crate::metrics::{RdRecord, YuvPsnr, DEFAULT_YUV_WEIGHTS};
use crate::rng::derive_seed;
use crate::scan::{partition_views, ScanKind};

const CONTAINER_MAGIC: &[u8; 4] = b"LFHC";
const CONTAINER_VERSION: u16 = 1;
const FLAG_STAGE1: u8 = 0b0000_0001;
const WINDOW_BORDER: usize = 8;
const WINDOW_FLOOR: f64 = 0.15;
const MAX_GRID: usize = 63;

/// Full encoder configuration. `rank` and `qp` are the sweep axes and
/// override the corresponding fields inside `bk_params` and `codec`.
#[derive(Debug, Clone)]
pub struct EncodeConfig {
    pub scan_order: ScanKind,
    pub rank: usize,
    pub qp: u8,
    pub layer_opts: LayerOptOptions,
    pub bk_params: BkSvdParams,
    pub fdl_params: FdlFitParams,
    pub codec: CodecConfig,
    pub emit_stage1: bool,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            scan_order: ScanKind::C2,
            rank: 28,
            qp: 14,
            layer_opts: LayerOptOptions::default(),
            bk_params: BkSvdParams::default(),
            fdl_params: FdlFitParams::default(),
            codec: CodecConfig::default(),
            emit_stage1: false,
        }
    }
}

impl EncodeConfig {
    fn effective_codec(&self) -> CodecConfig {
        CodecConfig {
            qp: self.qp,
            ..self.codec.clone()
        }
    }

    fn validate(&self, lf: &LightField) -> Result<()> {
        if lf.angular_rows != lf.angular_cols {
            return Err(Error::InvalidEncodeConfig(format!(
                "angular grid {}x{} is not square",
                lf.angular_rows, lf.angular_cols
            )));
        }
        let grid = lf.angular_rows;
        let max_pad = (grid - 1) / 2;
        let rank_cap = 3 * (lf.height + 2 * max_pad);
        if self.rank == 0 || self.rank > rank_cap {
            return Err(Error::InvalidEncodeConfig(format!(
                "rank {} outside [1, {rank_cap}]",
                self.rank
            )));
        }
        self.effective_codec().validate()?;
        if self.fdl_params.layer_count == 0 {
            return Err(Error::InvalidEncodeConfig("zero FDL layers".into()));
        }
        Ok(())
    }
}

/// Container header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitstreamHeader {
    pub version: u16,
    pub scan_order: ScanKind,
    pub rank: u16,
    pub qp: u8,
    pub angular_rows: u16,
    pub angular_cols: u16,
    pub height: u16,
    pub width: u16,
    pub emit_stage1: bool,
}

/// Serialized coding result: header, FDL metadata, ordered payloads.
#[derive(Debug, Clone)]
pub struct Bitstream {
    pub header: BitstreamHeader,
    pub fdl_metadata: Vec<u8>,
    pub payloads: Vec<CodedPayload>,
}

impl Bitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut out = Vec::new();
        out.extend_from_slice(CONTAINER_MAGIC);
        out.extend_from_slice(&h.version.to_le_bytes());
        out.push(h.scan_order.code());
        out.extend_from_slice(&h.rank.to_le_bytes());
        out.push(h.qp);
        out.extend_from_slice(&h.angular_rows.to_le_bytes());
        out.extend_from_slice(&h.angular_cols.to_le_bytes());
        out.extend_from_slice(&h.height.to_le_bytes());
        out.extend_from_slice(&h.width.to_le_bytes());
        out.push(if h.emit_stage1 { FLAG_STAGE1 } else { 0 });
        out.extend_from_slice(&(self.fdl_metadata.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.fdl_metadata);
        out.extend_from_slice(&(self.payloads.len() as u32).to_le_bytes());
        for p in &self.payloads {
            out.extend_from_slice(&(p.bytes.len() as u32).to_le_bytes());
            out.extend_from_slice(&p.bytes);
        }
        out
    }

    /// Parses and validates a container. Any malformed input yields a
    /// structured error; no allocation is sized by untrusted lengths beyond
    /// the buffer itself.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(CONTAINER_MAGIC, "container")
            .map_err(into_container_err)?;
        let version = r.u16("version").map_err(into_container_err)?;
        if version != CONTAINER_VERSION {
            return Err(Error::CorruptContainer {
                offset: 4,
                reason: format!("unsupported version {version}"),
            });
        }
        let order_code = r.u8("scan order").map_err(into_container_err)?;
        let scan_order = ScanKind::from_code(order_code).ok_or(Error::CorruptContainer {
            offset: 6,
            reason: format!("unknown scan order {order_code}"),
        })?;
        let rank = r.u16("rank").map_err(into_container_err)?;
        let qp = r.u8("qp").map_err(into_container_err)?;
        if qp > 51 {
            return Err(Error::CorruptContainer {
                offset: 9,
                reason: format!("qp {qp} out of range"),
            });
        }
        let angular_rows = r.u16("angular rows").map_err(into_container_err)?;
        let angular_cols = r.u16("angular cols").map_err(into_container_err)?;
        let height = r.u16("height").map_err(into_container_err)?;
        let width = r.u16("width").map_err(into_container_err)?;
        let grid = angular_rows as usize;
        if angular_rows != angular_cols || !(5..=MAX_GRID).contains(&grid) || grid.is_multiple_of(2)
        {
            return Err(Error::CorruptContainer {
                offset: 10,
                reason: format!("invalid angular grid {angular_rows}x{angular_cols}"),
            });
        }
        if height == 0 || width == 0 {
            return Err(Error::CorruptContainer {
                offset: 14,
                reason: "zero view dimensions".into(),
            });
        }
        let flags = r.u8("flags").map_err(into_container_err)?;
        if flags & !FLAG_STAGE1 != 0 {
            return Err(Error::CorruptContainer {
                offset: 18,
                reason: format!("unknown flags {flags:#x}"),
            });
        }
        let emit_stage1 = flags & FLAG_STAGE1 != 0;
        let meta_len = r.u32("metadata length").map_err(into_container_err)? as usize;
        let meta_off = r.pos();
        let fdl_metadata = r
            .bytes(meta_len, "metadata")
            .map_err(into_container_err)?
            .to_vec();
        let _ = meta_off;
        let declared = r.u32("payload count").map_err(into_container_err)? as usize;
        let order = partition_views(grid, scan_order)
            .map_err(|_| Error::CorruptContainer {
                offset: 6,
                reason: format!("grid {grid} unsupported for {scan_order}"),
            })?;
        let expected = order.subsets.len() * if emit_stage1 { 4 } else { 1 };
        if declared != expected {
            return Err(Error::PayloadCountMismatch {
                expected,
                found: declared,
            });
        }
        let mut payloads = Vec::with_capacity(declared);
        for i in 0..declared {
            let off = r.pos();
            let len = r
                .u32(&format!("payload {i} length"))
                .map_err(into_container_err)? as usize;
            let body = r
                .bytes(len, &format!("payload {i}"))
                .map_err(into_container_err)?;
            let payload = CodedPayload::from_bytes(body).map_err(|e| match e {
                Error::DecodeError { offset, reason } => Error::CorruptContainer {
                    offset: off + 4 + offset,
                    reason: format!("payload {i}: {reason}"),
                },
                other => other,
            })?;
            payloads.push(payload);
        }
        if r.remaining() != 0 {
            return Err(Error::CorruptContainer {
                offset: r.pos(),
                reason: "trailing bytes after payloads".into(),
            });
        }
        Ok(Self {
            header: BitstreamHeader {
                version,
                scan_order,
                rank,
                qp,
                angular_rows,
                angular_cols,
                height,
                width,
                emit_stage1,
            },
            fdl_metadata,
            payloads,
        })
    }

    /// Total bytes of the payload section (sum of payload lengths).
    pub fn payload_bytes(&self) -> usize {
        self.payloads.iter().map(|p| p.bytes.len()).sum()
    }
}

fn into_container_err(e: Error) -> Error {
    match e {
        Error::DecodeError { offset, reason } => Error::CorruptContainer { offset, reason },
        other => other,
    }
}

/// Per-subset accounting of one encode.
#[derive(Debug, Clone)]
pub struct SubsetReport {
    /// 1-based subset index.
    pub subset: usize,
    pub view_count: usize,
    /// Transmitted stage-II payload bytes.
    pub stage2_bytes: usize,
    /// In-loop stage-1 layer payload bytes (in the container only when emitted).
    pub stage1_bytes: usize,
    pub psnr: YuvPsnr,
}

/// Encoder output report: per-subset bytes and quality, per-view quality,
/// and the encoder's own in-loop reconstruction (bit-identical to what the
/// decoder will produce).
#[derive(Debug, Clone)]
pub struct EncodeReport {
    pub subsets: Vec<SubsetReport>,
    pub per_view_psnr: Vec<(ViewCoord, YuvPsnr)>,
    pub reconstruction: LightField,
    pub container_bytes: usize,
}

fn images_yuv_psnr(pairs: &[(&RgbImage, &RgbImage)]) -> YuvPsnr {
    let mut sse = [0.0f64; 3];
    let mut samples = 0.0f64;
    for (a, b) in pairs {
        let ya = rgb_to_yuv(a);
        let yb = rgb_to_yuv(b);
        for ((acc, pa), pb) in sse.iter_mut().zip(&ya.planes).zip(&yb.planes) {
            for (x, y) in pa.iter().zip(pb) {
                let d = x - y;
                *acc += d * d;
            }
        }
        samples += (a.height * a.width) as f64;
    }
    let plane = |s: f64| {
        let mse = s / samples;
        if mse <= 1e-12 {
            99.0
        } else {
            (-10.0 * mse.log10()).min(99.0f64)
        }
    };
    let (y, u, v) = (plane(sse[0]), plane(sse[1]), plane(sse[2]));
    let wsum: f64 = DEFAULT_YUV_WEIGHTS.iter().sum();
    YuvPsnr {
        y,
        u,
        v,
        combined: (DEFAULT_YUV_WEIGHTS[0] * y + DEFAULT_YUV_WEIGHTS[1] * u + DEFAULT_YUV_WEIGHTS[2] * v)
            / wsum,
    }
}

/// Caches stage-1 intermediates across sweep points: layer optimization is
/// independent of (rank, qp), the Krylov approximation of qp.
#[derive(Default)]
pub struct StageOneCache {
    layers: HashMap<usize, LayerStack>,
    approx: HashMap<(usize, usize), LayerStack>,
}

struct StageTwoState {
    model: FdlModel,
    window: Vec<f64>,
    coords_all: Vec<(f64, f64)>,
    lambda: f64,
}

impl StageTwoState {
    fn coord_of(&self, grid: usize, vc: ViewCoord) -> (f64, f64) {
        let half = (grid as i32 - 1) / 2;
        let idx = ((vc.s + half) as usize) * grid + (vc.t + half) as usize;
        self.coords_all[idx]
    }

    /// Unwindowed clamped prediction for one view.
    fn predict(&self, grid: usize, vc: ViewCoord) -> RgbImage {
        let synth = synthesize_view(&self.model, self.coord_of(grid, vc));
        let mut pred = remove_window(&synth, &self.window);
        pred.clamp_unit();
        pred
    }

    /// Folds a reconstructed subset back into the model.
    fn refine_with(
        &mut self,
        views: &[(ViewCoord, RgbImage)],
        grid: usize,
    ) -> Result<()> {
        let windowed: Vec<(ViewCoord, RgbImage)> = views
            .iter()
            .map(|(c, img)| (*c, apply_window(img, &self.window)))
            .collect();
        let coords: Vec<(f64, f64)> = views.iter().map(|(c, _)| self.coord_of(grid, *c)).collect();
        self.model = refine(&self.model, &windowed, &coords, self.lambda)?;
        Ok(())
    }
}

fn residual_to_unit(residual: f64) -> f64 {
    ((residual.clamp(-1.0, 1.0)) + 1.0) / 2.0
}

fn unit_to_residual(unit: f64) -> f64 {
    2.0 * unit - 1.0
}

/// Encodes a light field. See the module docs for the staging; the report's
/// `reconstruction` is the encoder's in-loop result and matches `decode` of
/// the returned bitstream bit for bit.
pub fn encode(lf: &LightField, cfg: &EncodeConfig) -> Result<(Bitstream, EncodeReport)> {
    let mut cache = StageOneCache::default();
    encode_with_cache(lf, cfg, &mut cache)
}

/// [`encode`] with an external stage-1 cache, used by [`rd_sweep`] to share
/// layer optimizations across sweep points. Results are identical to fresh
/// encodes: the cached values are deterministic functions of the input.
pub fn encode_with_cache(
    lf: &LightField,
    cfg: &EncodeConfig,
    cache: &mut StageOneCache,
) -> Result<(Bitstream, EncodeReport)> {
    cfg.validate(lf)?;
    let grid = lf.angular_rows;
    let order = partition_views(grid, cfg.scan_order)?;
    let codec = cfg.effective_codec();

    // ---- stage I: layers -> low rank -> codec in-loop -> approximated LF
    let missing: Vec<usize> = (0..order.subsets.len())
        .filter(|i| !cache.layers.contains_key(i))
        .collect();
    let optimized: Vec<(usize, LayerStack)> = missing
        .par_iter()
        .map(|&i| {
            let views = lf.subset(&order.subsets[i]);
            let opts = LayerOptOptions {
                rng_seed: derive_seed(cfg.layer_opts.rng_seed, &[0x4c, i as u64]),
                ..cfg.layer_opts.clone()
            };
            optimize_layers(&views, &opts).map(|(stack, _)| (i, stack))
        })
        .collect::<Result<_>>()?;
    cache.layers.extend(optimized);

    let missing_approx: Vec<usize> = (0..order.subsets.len())
        .filter(|&i| !cache.approx.contains_key(&(i, cfg.rank)))
        .collect();
    let approximated: Vec<(usize, LayerStack)> = missing_approx
        .par_iter()
        .map(|&i| {
            let params = BkSvdParams {
                rank: cfg.rank,
                rng_seed: derive_seed(cfg.bk_params.rng_seed, &[0x4b, i as u64]),
                ..cfg.bk_params.clone()
            };
            approximate_stack(&cache.layers[&i], &params).map(|s| (i, s))
        })
        .collect::<Result<_>>()?;
    for (i, s) in approximated {
        cache.approx.insert((i, cfg.rank), s);
    }

    let mut approx_views: Vec<Vec<(ViewCoord, RgbImage)>> = Vec::with_capacity(order.subsets.len());
    let mut stage1_payloads: Vec<CodedPayload> = Vec::new();
    let mut stage1_bytes = vec![0usize; order.subsets.len()];
    for (i, coords) in order.subsets.iter().enumerate() {
        let approx = &cache.approx[&(i, cfg.rank)];
        let mut decoded_layers: Vec<RgbImage> = Vec::with_capacity(3);
        for layer in &approx.layers {
            let payload = encode_frames(std::slice::from_ref(layer), &codec, false)?;
            stage1_bytes[i] += payload.bytes.len();
            decoded_layers.push(decode_frames(&payload, &codec)?.remove(0));
            stage1_payloads.push(payload);
        }
        let decoded_stack = LayerStack::new(
            approx.pad,
            [
                decoded_layers.remove(0),
                decoded_layers.remove(0),
                decoded_layers.remove(0),
            ],
        )?;
        let views = reconstruct_subset(&decoded_stack, coords)?;
        approx_views.push(coords.iter().copied().zip(views).collect());
    }

    // ---- stage II: code subset 1, calibrate + fit FDL, predict the rest
    let subset1 = &approx_views[0];
    let s1_frames: Vec<RgbImage> = subset1.iter().map(|(_, img)| img.clone()).collect();
    let s1_payload = encode_frames(&s1_frames, &codec, false)?;
    let s1_decoded = decode_frames(&s1_payload, &codec)?;
    let s1_views: Vec<(ViewCoord, RgbImage)> = subset1
        .iter()
        .map(|(c, _)| *c)
        .zip(s1_decoded)
        .collect();

    let calib = calibrate(&s1_views, &cfg.fdl_params)?;
    let coords_all: Vec<(f64, f64)> = lf.coords().iter().map(|&vc| calib.coord_for(vc)).collect();
    let lambda = cfg.fdl_params.lambda;
    let fdl_metadata = serialize_metadata(&calib.disparities, &coords_all, lambda);

    let window = border_window(lf.height, lf.width, WINDOW_BORDER, WINDOW_FLOOR);
    let windowed1: Vec<(ViewCoord, RgbImage)> = s1_views
        .iter()
        .map(|(c, img)| (*c, apply_window(img, &window)))
        .collect();
    let coords1: Vec<(f64, f64)> = {
        let half = (grid as i32 - 1) / 2;
        s1_views
            .iter()
            .map(|(c, _)| coords_all[((c.s + half) as usize) * grid + (c.t + half) as usize])
            .collect()
    };
    let model = fit_fdl(&windowed1, &calib.disparities, &coords1, lambda)?;
    let mut state = StageTwoState {
        model,
        window,
        coords_all,
        lambda,
    };

    let mut recon: HashMap<ViewCoord, RgbImage> = s1_views.iter().cloned().collect();
    let mut payloads = vec![s1_payload];
    for coords in order.subsets.iter().skip(1) {
        let mut preds = Vec::with_capacity(coords.len());
        let mut mapped = Vec::with_capacity(coords.len());
        for &vc in coords {
            let pred = state.predict(grid, vc);
            let target = approx_views
                .iter()
                .flat_map(|s| s.iter())
                .find(|(c, _)| *c == vc)
                .map(|(_, img)| img)
                .expect("subset coord present");
            let res = RgbImage::from_fn(lf.height, lf.width, |ch, r, c| {
                residual_to_unit(target.get(ch, r, c) - pred.get(ch, r, c))
            });
            preds.push(pred);
            mapped.push(res);
        }
        let payload = encode_frames(&mapped, &codec, true)?;
        let decoded_res = decode_frames(&payload, &codec)?;
        payloads.push(payload);
        let recon_views: Vec<(ViewCoord, RgbImage)> = coords
            .iter()
            .zip(preds.iter().zip(&decoded_res))
            .map(|(&vc, (pred, res))| {
                let img = RgbImage::from_fn(lf.height, lf.width, |ch, r, c| {
                    (pred.get(ch, r, c) + unit_to_residual(res.get(ch, r, c))).clamp(0.0, 1.0)
                });
                (vc, img)
            })
            .collect();
        state.refine_with(&recon_views, grid)?;
        recon.extend(recon_views);
    }

    let stage2_bytes: Vec<usize> = payloads.iter().map(|p| p.bytes.len()).collect();
    if cfg.emit_stage1 {
        payloads.extend(stage1_payloads);
    }

    let header = BitstreamHeader {
        version: CONTAINER_VERSION,
        scan_order: cfg.scan_order,
        rank: cfg.rank as u16,
        qp: cfg.qp,
        angular_rows: lf.angular_rows as u16,
        angular_cols: lf.angular_cols as u16,
        height: lf.height as u16,
        width: lf.width as u16,
        emit_stage1: cfg.emit_stage1,
    };
    let bitstream = Bitstream {
        header,
        fdl_metadata,
        payloads,
    };

    // ---- report
    let recon_views: Vec<RgbImage> = lf
        .coords()
        .iter()
        .map(|vc| recon.get(vc).expect("full coverage").clone())
        .collect();
    let reconstruction = LightField::from_views(lf.angular_rows, lf.angular_cols, recon_views)?;
    let mut subsets = Vec::with_capacity(order.subsets.len());
    for (i, coords) in order.subsets.iter().enumerate() {
        let pairs: Vec<(&RgbImage, &RgbImage)> = coords
            .iter()
            .map(|&vc| (lf.view(vc), reconstruction.view(vc)))
            .collect();
        subsets.push(SubsetReport {
            subset: i + 1,
            view_count: coords.len(),
            stage2_bytes: stage2_bytes[i],
            stage1_bytes: stage1_bytes[i],
            psnr: images_yuv_psnr(&pairs),
        });
    }
    let per_view_psnr: Vec<(ViewCoord, YuvPsnr)> = lf
        .coords()
        .iter()
        .map(|&vc| {
            (
                vc,
                images_yuv_psnr(&[(lf.view(vc), reconstruction.view(vc))]),
            )
        })
        .collect();
    let container_bytes = bitstream.to_bytes().len();
    Ok((
        bitstream,
        EncodeReport {
            subsets,
            per_view_psnr,
            reconstruction,
            container_bytes,
        },
    ))
}

/// Decodes a container back to a light field, mirroring the encoder's
/// stage-II loop state exactly.
pub fn decode(bs: &Bitstream, hints: &CodecConfig) -> Result<LightField> {
    let h = &bs.header;
    let grid = h.angular_rows as usize;
    let order = partition_views(grid, h.scan_order)?;
    let expected = order.subsets.len() * if h.emit_stage1 { 4 } else { 1 };
    if bs.payloads.len() != expected {
        return Err(Error::PayloadCountMismatch {
            expected,
            found: bs.payloads.len(),
        });
    }
    let (height, width) = (h.height as usize, h.width as usize);
    let (disparities, coords_all, lambda) = parse_metadata(&bs.fdl_metadata)?;
    if coords_all.len() != grid * grid {
        return Err(Error::CorruptContainer {
            offset: 0,
            reason: format!(
                "metadata carries {} coordinates for a {grid}x{grid} grid",
                coords_all.len()
            ),
        });
    }
    let codec = CodecConfig {
        qp: bs.payloads[0].qp,
        ..hints.clone()
    };

    let check_payload = |i: usize, payload: &CodedPayload, residual: bool, frames: usize| -> Result<()> {
        if payload.width != width || payload.height != height {
            return Err(Error::CorruptContainer {
                offset: 0,
                reason: format!(
                    "payload {i} dimensions {}x{} do not match header {width}x{height}",
                    payload.width, payload.height
                ),
            });
        }
        if payload.is_residual != residual {
            return Err(Error::CorruptContainer {
                offset: 0,
                reason: format!("payload {i} residual flag mismatch"),
            });
        }
        if payload.frame_count != frames {
            return Err(Error::CorruptContainer {
                offset: 0,
                reason: format!(
                    "payload {i} carries {} frames, subset has {frames} views",
                    payload.frame_count
                ),
            });
        }
        Ok(())
    };

    check_payload(0, &bs.payloads[0], false, order.subsets[0].len())?;
    let s1_decoded = decode_frames(&bs.payloads[0], &codec)?;
    let s1_views: Vec<(ViewCoord, RgbImage)> = order.subsets[0]
        .iter()
        .copied()
        .zip(s1_decoded)
        .collect();

    let window = border_window(height, width, WINDOW_BORDER, WINDOW_FLOOR);
    let windowed1: Vec<(ViewCoord, RgbImage)> = s1_views
        .iter()
        .map(|(c, img)| (*c, apply_window(img, &window)))
        .collect();
    let half = (grid as i32 - 1) / 2;
    let coords1: Vec<(f64, f64)> = s1_views
        .iter()
        .map(|(c, _)| coords_all[((c.s + half) as usize) * grid + (c.t + half) as usize])
        .collect();
    let model = fit_fdl(&windowed1, &disparities, &coords1, lambda)?;
    let mut state = StageTwoState {
        model,
        window,
        coords_all,
        lambda,
    };

    let mut recon: HashMap<ViewCoord, RgbImage> = s1_views.into_iter().collect();
    for (i, coords) in order.subsets.iter().enumerate().skip(1) {
        let payload = &bs.payloads[i];
        check_payload(i, payload, true, coords.len())?;
        let decoded_res = decode_frames(payload, &codec)?;
        let recon_views: Vec<(ViewCoord, RgbImage)> = coords
            .iter()
            .zip(&decoded_res)
            .map(|(&vc, res)| {
                let pred = state.predict(grid, vc);
                let img = RgbImage::from_fn(height, width, |ch, r, c| {
                    (pred.get(ch, r, c) + unit_to_residual(res.get(ch, r, c))).clamp(0.0, 1.0)
                });
                (vc, img)
            })
            .collect();
        state.refine_with(&recon_views, grid)?;
        recon.extend(recon_views);
    }

    let center = (grid as i32 - 1) / 2;
    let mut views = Vec::with_capacity(grid * grid);
    for r in 0..grid as i32 {
        for c in 0..grid as i32 {
            let vc = ViewCoord::new(r - center, c - center);
            views.push(recon.remove(&vc).ok_or(Error::CorruptContainer {
                offset: 0,
                reason: format!("view ({}, {}) never reconstructed", vc.s, vc.t),
            })?);
        }
    }
    LightField::from_views(grid, grid, views)
}

/// Parses and decodes a serialized container.
pub fn decode_bytes(bytes: &[u8], hints: &CodecConfig) -> Result<LightField> {
    decode(&Bitstream::from_bytes(bytes)?, hints)
}

/// Summary of one sweep point.
#[derive(Debug, Clone)]
pub struct RdSweepPoint {
    pub rank: usize,
    pub qp: u8,
    pub total_bytes: usize,
    pub psnr: YuvPsnr,
}

/// Full rate-distortion sweep output: per-subset CSV records plus per-point
/// summaries.
#[derive(Debug, Clone)]
pub struct RdTable {
    pub records: Vec<RdRecord>,
    pub points: Vec<RdSweepPoint>,
}

/// Sweeps the (rank, qp) grid: encode, decode, record bytes and YUV-PSNR per
/// subset and per point. Layer optimization and Krylov approximations are
/// shared across points (they are deterministic functions of the input and
/// rank), so results match pointwise fresh encodes.
pub fn rd_sweep(
    lf: &LightField,
    ranks: &[usize],
    qps: &[u8],
    base: &EncodeConfig,
) -> Result<RdTable> {
    if ranks.is_empty() || qps.is_empty() {
        return Err(Error::InvalidEncodeConfig("empty sweep axes".into()));
    }
    let order = partition_views(lf.angular_rows, base.scan_order)?;
    let mut cache = StageOneCache::default();
    let mut records = Vec::new();
    let mut points = Vec::new();
    for &rank in ranks {
        for &qp in qps {
            let cfg = EncodeConfig {
                rank,
                qp,
                ..base.clone()
            };
            let (bs, report) = encode_with_cache(lf, &cfg, &mut cache)?;
            let decoded = decode(&bs, &cfg.codec)?;
            for (i, coords) in order.subsets.iter().enumerate() {
                let pairs: Vec<(&RgbImage, &RgbImage)> = coords
                    .iter()
                    .map(|&vc| (lf.view(vc), decoded.view(vc)))
                    .collect();
                let psnr = images_yuv_psnr(&pairs);
                records.push(RdRecord {
                    rank,
                    qp,
                    subset: i + 1,
                    bytes: report.subsets[i].stage2_bytes,
                    psnr_y: psnr.y,
                    psnr_u: psnr.u,
                    psnr_v: psnr.v,
                    psnr_yuv: psnr.combined,
                });
            }
            let all_pairs: Vec<(&RgbImage, &RgbImage)> = lf
                .coords()
                .iter()
                .map(|&vc| (lf.view(vc), decoded.view(vc)))
                .collect();
            points.push(RdSweepPoint {
                rank,
                qp,
                total_bytes: report.container_bytes,
                psnr: images_yuv_psnr(&all_pairs),
            });
        }
    }
    Ok(RdTable { records, points })
}
