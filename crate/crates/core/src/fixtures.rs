//! Synthetic light field generators powering the oracle tests.
//!
//! All textures are band-limited sums of random-phase sinusoids with integer
//! cycle counts, so they are exactly periodic over the image: circular shifts
//! by arbitrary real offsets are evaluated analytically and the Fourier-domain
//! forward models hold without resampling error. Generators are deterministic
//! per seed.

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::layers::{render_view, LayerStack};
use crate::lightfield::{LightField, ViewCoord};
use crate::rng::{derive_seed, seeded_rng};

const COMPONENTS: usize = 8;

struct Sinusoid {
    amp: f64,
    cycles_r: f64,
    cycles_c: f64,
    phase: f64,
}

/// Band-limited periodic texture: per channel a base level plus
/// [`COMPONENTS`] sinusoids with integer cycle counts up to 1/8 of each
/// dimension.
pub struct Texture {
    height: f64,
    width: f64,
    base: f64,
    channels: [Vec<Sinusoid>; 3],
}

impl Texture {
    /// Evaluates channel `ch` at real (possibly fractional, out-of-range)
    /// coordinates; the texture is periodic over (height, width).
    pub fn eval(&self, ch: usize, r: f64, c: f64) -> f64 {
        let mut v = self.base;
        for s in &self.channels[ch] {
            let arg = std::f64::consts::TAU
                * (s.cycles_r * r / self.height + s.cycles_c * c / self.width)
                + s.phase;
            v += s.amp * arg.sin();
        }
        v
    }
}

/// Texture with samples in `base - amp ..= base + amp`.
pub fn texture_with(seed: u64, h: usize, w: usize, base: f64, amp: f64) -> Texture {
    let mut rng = seeded_rng(seed);
    let max_r = ((h / 8).max(1)) as i64;
    let max_c = ((w / 8).max(1)) as i64;
    let channels = std::array::from_fn(|_| {
        let mut comps = Vec::with_capacity(COMPONENTS);
        let mut total = 0.0;
        let weights: Vec<f64> = (0..COMPONENTS).map(|_| rng.random_range(0.2..1.0)).collect();
        let wsum: f64 = weights.iter().sum();
        for weight in weights {
            let mut cycles = (0i64, 0i64);
            while cycles == (0, 0) {
                cycles = (
                    rng.random_range(-max_r..=max_r),
                    rng.random_range(-max_c..=max_c),
                );
            }
            let a = amp * weight / wsum;
            total += a;
            comps.push(Sinusoid {
                amp: a,
                cycles_r: cycles.0 as f64,
                cycles_c: cycles.1 as f64,
                phase: rng.random_range(0.0..std::f64::consts::TAU),
            });
        }
        debug_assert!(total <= amp + 1e-9);
        comps
    });
    Texture {
        height: h as f64,
        width: w as f64,
        base,
        channels,
    }
}

/// Texture centered at 0.5 with amplitude 0.35 (samples in [0.15, 0.85]).
pub fn band_limited_texture(seed: u64, h: usize, w: usize) -> Texture {
    texture_with(seed, h, w, 0.5, 0.35)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SceneKind {
    /// Every view the same constant value.
    Constant { value: f64 },
    /// One textured plane at the given disparity: the view at (s, t) is the
    /// base texture circularly shifted by (s*d, t*d).
    TexturedPlane { disparity: f64 },
    /// Constant-alpha (0.5) blend of two independently shifted textures; an
    /// exact two-layer disparity scene.
    TwoPlane { d1: f64, d2: f64 },
    /// Views rendered exactly through the multiplicative layer model from a
    /// random transmittance stack.
    FromLayerStack { stack_seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSceneSpec {
    pub kind: SceneKind,
    pub rng_seed: u64,
}

impl SyntheticSceneSpec {
    pub fn new(kind: SceneKind, rng_seed: u64) -> Self {
        Self { kind, rng_seed }
    }

    /// Parses the CLI grammar `kind[:key=value,...]`, e.g.
    /// `constant:value=0.5`, `plane:d=1`, `two-plane:d1=0,d2=2`,
    /// `stack:seed=7`.
    pub fn parse(text: &str, rng_seed: u64) -> Result<Self> {
        let (kind, args) = match text.split_once(':') {
            Some((k, a)) => (k, a),
            None => (text, ""),
        };
        let mut map = std::collections::HashMap::new();
        for pair in args.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidSceneSpec(format!("bad argument {pair:?}")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| Error::InvalidSceneSpec(format!("bad number in {pair:?}")))?;
            map.insert(k.trim().to_string(), v);
        }
        let get = |key: &str, default: f64| map.get(key).copied().unwrap_or(default);
        let kind = match kind.trim() {
            "constant" => SceneKind::Constant {
                value: get("value", 0.5),
            },
            "plane" | "textured-plane" => SceneKind::TexturedPlane {
                disparity: get("d", 1.0),
            },
            "two-plane" => SceneKind::TwoPlane {
                d1: get("d1", 0.0),
                d2: get("d2", 2.0),
            },
            "stack" | "from-layer-stack" => SceneKind::FromLayerStack {
                stack_seed: get("seed", 7.0) as u64,
            },
            other => {
                return Err(Error::InvalidSceneSpec(format!("unknown kind {other:?}")));
            }
        };
        Ok(Self { kind, rng_seed })
    }
}

fn max_offset(s: usize, t: usize) -> f64 {
    (((s - 1) / 2).max((t - 1) / 2)) as f64
}

fn check_disparity(d: f64, s: usize, t: usize, h: usize, w: usize) -> Result<()> {
    let reach = d.abs() * max_offset(s, t);
    if reach >= h.min(w) as f64 {
        return Err(Error::InvalidSceneSpec(format!(
            "disparity {d} shifts beyond the {h}x{w} view extent"
        )));
    }
    Ok(())
}

/// Random smooth transmittance stack (samples in [0.3, 1.0]) used by the
/// `FromLayerStack` scene; exposed so tests can compare against the
/// generating stack directly.
pub fn random_layer_stack(
    stack_seed: u64,
    pad: usize,
    h: usize,
    w: usize,
) -> Result<LayerStack> {
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let layers: [RgbImage; 3] = std::array::from_fn(|li| {
        let tex = texture_with(derive_seed(stack_seed, &[li as u64]), ph, pw, 0.65, 0.35);
        RgbImage::from_fn(ph, pw, |ch, r, c| tex.eval(ch, r as f64, c as f64))
    });
    LayerStack::new(pad, layers)
}

/// Generates an `s x t` grid of `h x w` views for the scene.
pub fn generate(
    spec: &SyntheticSceneSpec,
    s: usize,
    t: usize,
    h: usize,
    w: usize,
) -> Result<LightField> {
    if s == 0 || t == 0 || h == 0 || w == 0 {
        return Err(Error::InvalidSceneSpec("empty dimensions".into()));
    }
    let center_s = (s as i32 - 1) / 2;
    let center_t = (t as i32 - 1) / 2;
    let coords: Vec<ViewCoord> = (0..s as i32)
        .flat_map(|r| (0..t as i32).map(move |c| ViewCoord::new(r - center_s, c - center_t)))
        .collect();
    let views: Vec<RgbImage> = match &spec.kind {
        SceneKind::Constant { value } => {
            if !(0.0..=1.0).contains(value) {
                return Err(Error::InvalidSceneSpec(format!(
                    "constant {value} outside [0, 1]"
                )));
            }
            coords
                .iter()
                .map(|_| RgbImage::constant(h, w, [*value; 3]))
                .collect()
        }
        SceneKind::TexturedPlane { disparity } => {
            check_disparity(*disparity, s, t, h, w)?;
            let tex = band_limited_texture(derive_seed(spec.rng_seed, &[1]), h, w);
            coords
                .iter()
                .map(|vc| {
                    let (dr, dc) = (vc.s as f64 * disparity, vc.t as f64 * disparity);
                    RgbImage::from_fn(h, w, |ch, r, c| {
                        tex.eval(ch, r as f64 + dr, c as f64 + dc).clamp(0.0, 1.0)
                    })
                })
                .collect()
        }
        SceneKind::TwoPlane { d1, d2 } => {
            check_disparity(*d1, s, t, h, w)?;
            check_disparity(*d2, s, t, h, w)?;
            let tex_a = band_limited_texture(derive_seed(spec.rng_seed, &[2]), h, w);
            let tex_b = band_limited_texture(derive_seed(spec.rng_seed, &[3]), h, w);
            coords
                .iter()
                .map(|vc| {
                    RgbImage::from_fn(h, w, |ch, r, c| {
                        let a = tex_a.eval(
                            ch,
                            r as f64 + vc.s as f64 * d1,
                            c as f64 + vc.t as f64 * d1,
                        );
                        let b = tex_b.eval(
                            ch,
                            r as f64 + vc.s as f64 * d2,
                            c as f64 + vc.t as f64 * d2,
                        );
                        (0.5 * a + 0.5 * b).clamp(0.0, 1.0)
                    })
                })
                .collect()
        }
        SceneKind::FromLayerStack { stack_seed } => {
            let pad = (max_offset(s, t) as usize).max(1);
            let stack = random_layer_stack(*stack_seed, pad, h, w)?;
            coords
                .iter()
                .map(|vc| render_view(&stack, *vc))
                .collect::<Result<Vec<_>>>()?
        }
    };
    LightField::from_views(s, t, views)
}
