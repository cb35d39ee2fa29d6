//! Pluggable 2D image/residual codec.
//!
//! The baseline backend is an intra-only block-DCT codec: per-channel 8x8
//! DCT-II, uniform quantization with the HEVC-style QP step law, zig-zag
//! scan, zero run-lengths and a frozen canonical prefix code. qp 0 is a
//! lossless escape (identity transform, step 1): a round trip reproduces the
//! 8-bit-quantized input exactly. Frames are coded independently; the
//! pipeline's redundancy removal happens upstream.
//!
//! The external backend pipes raw 8-bit planar BT.601 YUV through a
//! user-supplied command, standing in for a real HEVC binary.
//!
//! Payload layout (little-endian): magic `LFC1`, u8 backend, u8 qp,
//! u16 frame_count, u16 width, u16 height, u8 is_residual, then per-frame
//! u32-length-prefixed chunks.

mod bitio;
pub mod dct;
mod entropy;
mod external;

pub use external::ExternalCodec;

pub(crate) use bitio::ByteReader;

use bitio::{BitReader, BitWriter};

use crate::error::{Error, Result};
use crate::image::RgbImage;

const PAYLOAD_MAGIC: &[u8; 4] = b"LFC1";
const MAX_DIM: usize = 8192;
const MAX_FRAMES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecBackend {
    Baseline,
    External,
}

impl CodecBackend {
    fn code(self) -> u8 {
        match self {
            CodecBackend::Baseline => 0,
            CodecBackend::External => 1,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(CodecBackend::Baseline),
            1 => Some(CodecBackend::External),
            _ => None,
        }
    }
}

/// Codec selection and quantization strength.
#[derive(Debug, Clone)]
pub struct CodecConfig {
    pub backend: CodecBackend,
    /// Quantization parameter in [0, 51]; 0 is the baseline's lossless escape.
    pub qp: u8,
    /// Command template for the external backend; receives `{mode}` (encode
    /// or decode), `{w}`, `{h}`, `{n}` and `{qp}` substitutions.
    pub external_cmd: Option<String>,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            backend: CodecBackend::Baseline,
            qp: 14,
            external_cmd: None,
        }
    }
}

impl CodecConfig {
    pub fn baseline(qp: u8) -> Self {
        Self {
            backend: CodecBackend::Baseline,
            qp,
            external_cmd: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.qp > 51 {
            return Err(Error::InvalidCodecConfig(format!(
                "qp {} out of [0, 51]",
                self.qp
            )));
        }
        match self.backend {
            CodecBackend::External if self.external_cmd.is_none() => Err(
                Error::InvalidCodecConfig("external backend without a command".into()),
            ),
            CodecBackend::Baseline if self.external_cmd.is_some() => Err(
                Error::InvalidCodecConfig("external command with baseline backend".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// A self-describing coded frame sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPayload {
    /// Complete serialized payload, header included.
    pub bytes: Vec<u8>,
    pub frame_count: usize,
    pub width: usize,
    pub height: usize,
    pub is_residual: bool,
    pub backend: CodecBackend,
    pub qp: u8,
}

impl CodedPayload {
    /// Parses and validates a payload header, without decoding frames.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        r.expect_magic(PAYLOAD_MAGIC, "payload")?;
        let backend_code = r.u8("backend")?;
        let backend = CodecBackend::from_code(backend_code).ok_or(Error::DecodeError {
            offset: 4,
            reason: format!("unknown backend {backend_code}"),
        })?;
        let qp = r.u8("qp")?;
        if qp > 51 {
            return Err(Error::DecodeError {
                offset: 5,
                reason: format!("qp {qp} out of range"),
            });
        }
        let frame_count = r.u16("frame_count")? as usize;
        let width = r.u16("width")? as usize;
        let height = r.u16("height")? as usize;
        let is_residual = r.u8("is_residual")? != 0;
        if frame_count == 0 || frame_count > MAX_FRAMES {
            return Err(Error::DecodeError {
                offset: 6,
                reason: format!("frame count {frame_count} out of range"),
            });
        }
        if width == 0 || height == 0 || width > MAX_DIM || height > MAX_DIM {
            return Err(Error::DecodeError {
                offset: 8,
                reason: format!("dimensions {width}x{height} out of range"),
            });
        }
        // frame chunks must be present and consistent
        for f in 0..frame_count {
            let len = r.u32(&format!("frame {f} length"))? as usize;
            r.bytes(len, &format!("frame {f} body"))?;
        }
        if r.remaining() != 0 {
            return Err(Error::DecodeError {
                offset: r.pos(),
                reason: "trailing bytes after last frame".to_string(),
            });
        }
        Ok(Self {
            bytes: bytes.to_vec(),
            frame_count,
            width,
            height,
            is_residual,
            backend,
            qp,
        })
    }

    fn frame_bodies(&self) -> Result<Vec<&[u8]>> {
        let mut r = ByteReader::new(&self.bytes);
        r.bytes(13, "header")?;
        let mut out = Vec::with_capacity(self.frame_count);
        for f in 0..self.frame_count {
            let len = r.u32(&format!("frame {f} length"))? as usize;
            out.push(r.bytes(len, &format!("frame {f} body"))?);
        }
        Ok(out)
    }
}

fn payload_header(
    backend: CodecBackend,
    qp: u8,
    frame_count: usize,
    width: usize,
    height: usize,
    is_residual: bool,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(13);
    out.extend_from_slice(PAYLOAD_MAGIC);
    out.push(backend.code());
    out.push(qp);
    out.extend_from_slice(&(frame_count as u16).to_le_bytes());
    out.extend_from_slice(&(width as u16).to_le_bytes());
    out.extend_from_slice(&(height as u16).to_le_bytes());
    out.push(is_residual as u8);
    out
}

/// Encodes a uniform-dimension frame list. Deterministic for the baseline
/// backend: identical input and config give identical bytes.
pub fn encode_frames(
    frames: &[RgbImage],
    cfg: &CodecConfig,
    is_residual: bool,
) -> Result<CodedPayload> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (h, w) = (frames[0].height, frames[0].width);
    if h == 0 || w == 0 || h > MAX_DIM || w > MAX_DIM || frames.len() > MAX_FRAMES {
        return Err(Error::ShapeMismatch(format!(
            "unsupported frame geometry {w}x{h} x{}",
            frames.len()
        )));
    }
    for f in frames {
        if f.height != h || f.width != w {
            return Err(Error::ShapeMismatch("frames have mixed dimensions".into()));
        }
        if !f.is_finite() {
            return Err(Error::NonFiniteSamples);
        }
    }
    let mut bytes = payload_header(cfg.backend, cfg.qp, frames.len(), w, h, is_residual);
    match cfg.backend {
        CodecBackend::Baseline => {
            for frame in frames {
                let body = encode_frame_baseline(frame, cfg.qp);
                bytes.extend_from_slice(&(body.len() as u32).to_le_bytes());
                bytes.extend_from_slice(&body);
            }
        }
        CodecBackend::External => {
            let ext = ExternalCodec::new(cfg.external_cmd.as_deref().unwrap());
            let body = ext.encode(frames, cfg.qp)?;
            // external tools code the whole sequence as one chunk, carried
            // in the first frame slot; remaining slots are empty
            bytes.extend_from_slice(&(body.len() as u32).to_le_bytes());
            bytes.extend_from_slice(&body);
            for _ in 1..frames.len() {
                bytes.extend_from_slice(&0u32.to_le_bytes());
            }
        }
    }
    Ok(CodedPayload {
        bytes,
        frame_count: frames.len(),
        width: w,
        height: h,
        is_residual,
        backend: cfg.backend,
        qp: cfg.qp,
    })
}

/// Decodes a payload back to frames, clamped to [0, 1]. Corrupt payloads
/// yield structured `DecodeError`s, never panics.
pub fn decode_frames(payload: &CodedPayload, cfg: &CodecConfig) -> Result<Vec<RgbImage>> {
    if payload.backend != cfg.backend {
        return Err(Error::InvalidCodecConfig(format!(
            "payload coded with {:?}, config selects {:?}",
            payload.backend, cfg.backend
        )));
    }
    let bodies = payload.frame_bodies()?;
    match payload.backend {
        CodecBackend::Baseline => bodies
            .iter()
            .map(|body| decode_frame_baseline(body, payload))
            .collect(),
        CodecBackend::External => {
            let ext = ExternalCodec::new(
                cfg.external_cmd
                    .as_deref()
                    .ok_or_else(|| Error::InvalidCodecConfig("external command missing".into()))?,
            );
            ext.decode(
                bodies.first().copied().unwrap_or(&[]),
                payload.frame_count,
                payload.height,
                payload.width,
                payload.qp,
            )
        }
    }
}

fn padded(dim: usize) -> usize {
    dim.div_ceil(dct::BLOCK) * dct::BLOCK
}

/// One frame: three planes, each a u32-length-prefixed bitstream.
fn encode_frame_baseline(frame: &RgbImage, qp: u8) -> Vec<u8> {
    let mut out = Vec::new();
    for ch in 0..3 {
        let bits = encode_plane(&frame.planes[ch], frame.height, frame.width, qp);
        out.extend_from_slice(&(bits.len() as u32).to_le_bytes());
        out.extend_from_slice(&bits);
    }
    out
}

fn decode_frame_baseline(body: &[u8], payload: &CodedPayload) -> Result<RgbImage> {
    let mut r = ByteReader::new(body);
    let mut frame = RgbImage::new(payload.height, payload.width);
    for ch in 0..3 {
        let len = r.u32("plane length")? as usize;
        let bits = r.bytes(len, "plane body")?;
        frame.planes[ch] = decode_plane(bits, payload.height, payload.width, payload.qp)?;
    }
    if r.remaining() != 0 {
        return Err(Error::DecodeError {
            offset: r.pos(),
            reason: "trailing bytes after planes".to_string(),
        });
    }
    Ok(frame)
}

fn encode_plane(plane: &[f64], h: usize, w: usize, qp: u8) -> Vec<u8> {
    let (hp, wp) = (padded(h), padded(w));
    // edge-replicated padding in the 8-bit domain
    let mut samples = vec![0.0f64; hp * wp];
    for r in 0..hp {
        for c in 0..wp {
            let rr = r.min(h - 1);
            let cc = c.min(w - 1);
            samples[r * wp + c] = (plane[rr * w + cc].clamp(0.0, 1.0) * 255.0).round() - 128.0;
        }
    }
    let step = dct::QP_STEP[qp as usize];
    let mut bw = BitWriter::new();
    let mut block = [0.0f64; 64];
    let mut freq = [0.0f64; 64];
    let mut levels = [0i32; 64];
    let mut prev_dc = 0i32;
    for br in 0..hp / dct::BLOCK {
        for bc in 0..wp / dct::BLOCK {
            for r in 0..dct::BLOCK {
                for c in 0..dct::BLOCK {
                    block[r * dct::BLOCK + c] =
                        samples[(br * dct::BLOCK + r) * wp + bc * dct::BLOCK + c];
                }
            }
            let coeffs: &[f64; 64] = if qp == 0 {
                // lossless escape: identity transform on integer samples
                &block
            } else {
                dct::forward(&block, &mut freq);
                &freq
            };
            for (zi, &src) in dct::ZIGZAG.iter().enumerate() {
                levels[zi] = (coeffs[src] / step).round() as i32;
            }
            let dc = levels[0];
            levels[0] = dc - prev_dc;
            prev_dc = dc;
            entropy::encode_block(&levels, &mut bw);
        }
    }
    bw.finish()
}

fn decode_plane(bits: &[u8], h: usize, w: usize, qp: u8) -> Result<Vec<f64>> {
    let (hp, wp) = (padded(h), padded(w));
    let step = dct::QP_STEP[qp as usize];
    let mut br = BitReader::new(bits, 0);
    let mut samples = vec![0.0f64; hp * wp];
    let mut freq = [0.0f64; 64];
    let mut spatial = [0.0f64; 64];
    let mut prev_dc = 0i32;
    for brow in 0..hp / dct::BLOCK {
        for bcol in 0..wp / dct::BLOCK {
            let mut levels = entropy::decode_block(&mut br)?;
            levels[0] += prev_dc;
            prev_dc = levels[0];
            for (zi, &dst) in dct::ZIGZAG.iter().enumerate() {
                freq[dst] = levels[zi] as f64 * step;
            }
            if qp == 0 {
                spatial.copy_from_slice(&freq);
            } else {
                dct::inverse(&freq, &mut spatial);
            }
            for r in 0..dct::BLOCK {
                for c in 0..dct::BLOCK {
                    samples[(brow * dct::BLOCK + r) * wp + bcol * dct::BLOCK + c] =
                        spatial[r * dct::BLOCK + c];
                }
            }
        }
    }
    let mut plane = vec![0.0f64; h * w];
    for r in 0..h {
        for c in 0..w {
            plane[r * w + c] = ((samples[r * wp + c] + 128.0) / 255.0).clamp(0.0, 1.0);
        }
    }
    Ok(plane)
}
