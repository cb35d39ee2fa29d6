//! External codec bridge.
//!
//! Spawns a user-supplied command, pipes raw 8-bit planar BT.601 full-range
//! YUV frames to its stdin and reads coded bytes from its stdout; decoding
//! runs the same template with `{mode}` = `decode`. The substituted template
//! is split on whitespace, no shell involved.

use std::io::{Read, Write};
use std::process::{Command, Stdio};

use crate::color::{rgb_to_yuv, yuv_to_rgb};
use crate::error::{Error, Result};
use crate::image::{RgbImage, YuvImage};

pub struct ExternalCodec {
    template: String,
}

impl ExternalCodec {
    pub fn new(template: &str) -> Self {
        Self {
            template: template.to_string(),
        }
    }

    fn command(&self, mode: &str, w: usize, h: usize, n: usize, qp: u8) -> Result<Command> {
        let line = self
            .template
            .replace("{mode}", mode)
            .replace("{w}", &w.to_string())
            .replace("{h}", &h.to_string())
            .replace("{n}", &n.to_string())
            .replace("{qp}", &qp.to_string());
        let mut parts = line.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| Error::ExternalCodec("empty command template".into()))?;
        let mut cmd = Command::new(program);
        cmd.args(parts);
        Ok(cmd)
    }

    fn run(&self, mode: &str, w: usize, h: usize, n: usize, qp: u8, input: &[u8]) -> Result<Vec<u8>> {
        let mut child = self
            .command(mode, w, h, n, qp)?
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::ExternalCodec(format!("spawn failed: {e}")))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let input = input.to_vec();
        let writer = std::thread::spawn(move || stdin.write_all(&input));
        let mut out = Vec::new();
        child
            .stdout
            .take()
            .expect("piped stdout")
            .read_to_end(&mut out)
            .map_err(|e| Error::ExternalCodec(format!("read failed: {e}")))?;
        writer
            .join()
            .map_err(|_| Error::ExternalCodec("writer thread panicked".into()))?
            .map_err(|e| Error::ExternalCodec(format!("write failed: {e}")))?;
        let status = child
            .wait()
            .map_err(|e| Error::ExternalCodec(format!("wait failed: {e}")))?;
        if !status.success() {
            return Err(Error::ExternalCodec(format!(
                "command exited with {status}"
            )));
        }
        Ok(out)
    }

    pub fn encode(&self, frames: &[RgbImage], qp: u8) -> Result<Vec<u8>> {
        let (h, w) = (frames[0].height, frames[0].width);
        let mut raw = Vec::with_capacity(frames.len() * h * w * 3);
        for frame in frames {
            let yuv = rgb_to_yuv(frame);
            for plane in &yuv.planes {
                raw.extend(
                    plane
                        .iter()
                        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
                );
            }
        }
        let out = self.run("encode", w, h, frames.len(), qp, &raw)?;
        if out.is_empty() {
            return Err(Error::ExternalCodec("encoder produced no output".into()));
        }
        Ok(out)
    }

    pub fn decode(
        &self,
        body: &[u8],
        frame_count: usize,
        h: usize,
        w: usize,
        qp: u8,
    ) -> Result<Vec<RgbImage>> {
        let raw = self.run("decode", w, h, frame_count, qp, body)?;
        let plane_len = h * w;
        let need = frame_count * plane_len * 3;
        if raw.len() != need {
            return Err(Error::ExternalCodec(format!(
                "decoder returned {} bytes, expected {need}",
                raw.len()
            )));
        }
        let mut frames = Vec::with_capacity(frame_count);
        for f in 0..frame_count {
            let base = f * plane_len * 3;
            let mut planes: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; plane_len]);
            for (pi, plane) in planes.iter_mut().enumerate() {
                for (i, v) in plane.iter_mut().enumerate() {
                    *v = raw[base + pi * plane_len + i] as f64 / 255.0;
                }
            }
            let mut rgb = yuv_to_rgb(&YuvImage {
                height: h,
                width: w,
                planes,
            });
            rgb.clamp_unit();
            frames.push(rgb);
        }
        Ok(frames)
    }
}
