//! Property tests for the crate's algebraic invariants.

use lfhc_core::codec::{decode_frames, encode_frames, CodecConfig};
use lfhc_core::color::{rgb_to_yuv, yuv_to_rgb};
use lfhc_core::layers::{render_view, LayerStack, TRANSMITTANCE_FLOOR};
use lfhc_core::metrics::{bd_rate, RdPoint};
use lfhc_core::{RgbImage, ViewCoord};

use proptest::prelude::*;

fn arb_image(max_dim: usize) -> impl Strategy<Value = RgbImage> {
    (2usize..=max_dim, 2usize..=max_dim)
        .prop_flat_map(|(h, w)| {
            (
                Just(h),
                Just(w),
                proptest::collection::vec(0.0f64..=1.0, h * w * 3),
            )
        })
        .prop_map(|(h, w, data)| {
            let mut img = RgbImage::new(h, w);
            for ch in 0..3 {
                img.planes[ch].copy_from_slice(&data[ch * h * w..(ch + 1) * h * w]);
            }
            img
        })
}

fn arb_stack() -> impl Strategy<Value = LayerStack> {
    (3usize..=6, 3usize..=6, 1usize..=2)
        .prop_flat_map(|(h, w, pad)| {
            let (ph, pw) = (h + 2 * pad, w + 2 * pad);
            (
                Just(pad),
                Just(ph),
                Just(pw),
                proptest::collection::vec(TRANSMITTANCE_FLOOR..=1.0f64, ph * pw * 9),
            )
        })
        .prop_map(|(pad, ph, pw, data)| {
            let mut layers: [RgbImage; 3] = std::array::from_fn(|_| RgbImage::new(ph, pw));
            for (i, v) in data.iter().enumerate() {
                let li = i / (ph * pw * 3);
                let rem = i % (ph * pw * 3);
                layers[li].planes[rem / (ph * pw)][rem % (ph * pw)] = *v;
            }
            LayerStack::new(pad, layers).unwrap()
        })
}

fn arb_curve() -> impl Strategy<Value = Vec<RdPoint>> {
    // rate-distortion-shaped curves: quality strictly increasing, rate
    // growing with quality (wild non-monotone rates make the cubic fit
    // extrapolate past where the (-100%, inf) percentage form can represent
    // the log-domain value)
    (100.0f64..1e5, proptest::collection::vec((0.5f64..4.0, 1.05f64..4.0), 4..8)).prop_map(
        |(rate0, steps)| {
            let mut q = 20.0;
            let mut rate = rate0;
            steps
                .into_iter()
                .map(|(dq, factor)| {
                    q += dq;
                    rate *= factor;
                    RdPoint { rate, quality: q }
                })
                .collect()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn yuv_round_trip_within_1e6(img in arb_image(12)) {
        let back = yuv_to_rgb(&rgb_to_yuv(&img));
        for ch in 0..3 {
            for (a, b) in img.planes[ch].iter().zip(&back.planes[ch]) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn codec_qp0_is_lossless_after_8bit(img in arb_image(20)) {
        let cfg = CodecConfig::baseline(0);
        let payload = encode_frames(std::slice::from_ref(&img), &cfg, false).unwrap();
        let out = &decode_frames(&payload, &cfg).unwrap()[0];
        for ch in 0..3 {
            for (a, b) in img.planes[ch].iter().zip(&out.planes[ch]) {
                prop_assert_eq!((a * 255.0).round() / 255.0, *b);
            }
        }
    }

    #[test]
    fn codec_preserves_geometry_and_is_deterministic(
        img in arb_image(20),
        qp in 0u8..=51,
    ) {
        let cfg = CodecConfig::baseline(qp);
        let frames = vec![img.clone(), img];
        let a = encode_frames(&frames, &cfg, false).unwrap();
        let b = encode_frames(&frames, &cfg, false).unwrap();
        prop_assert_eq!(&a.bytes, &b.bytes);
        let out = decode_frames(&a, &cfg).unwrap();
        prop_assert_eq!(out.len(), 2);
        prop_assert_eq!(out[0].height, frames[0].height);
        prop_assert_eq!(out[0].width, frames[0].width);
        prop_assert!(out.iter().all(|f| f.in_unit_range()));
    }

    #[test]
    fn render_scales_multiplicatively(stack in arb_stack(), alpha in 0.1f64..=1.0) {
        let coord = ViewCoord::new(1, -1);
        let base = render_view(&stack, coord).unwrap();
        let mut scaled_stack = stack.clone();
        for p in scaled_stack.layers[1].planes.iter_mut() {
            p.iter_mut().for_each(|v| *v *= alpha);
        }
        let scaled = render_view(&scaled_stack, coord).unwrap();
        for ch in 0..3 {
            for (s, b) in scaled.planes[ch].iter().zip(&base.planes[ch]) {
                prop_assert!((s - alpha * b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bd_rate_antisymmetry_and_scale_invariance(
        a in arb_curve(),
        b in arb_curve(),
        scale in 0.001f64..1000.0,
    ) {
        // curves share a quality range by construction (both start above 20)
        let fwd = bd_rate(&a, &b);
        let rev = bd_rate(&b, &a);
        if let (Ok(fwd), Ok(rev)) = (fwd, rev) {
            let lf = (1.0 + fwd / 100.0).ln();
            let lr = (1.0 + rev / 100.0).ln();
            prop_assert!((lf + lr).abs() < 1e-9, "antisymmetry broke: {} vs {}", lf, lr);

            let scale_curve = |pts: &[RdPoint]| -> Vec<RdPoint> {
                pts.iter().map(|p| RdPoint { rate: p.rate * scale, quality: p.quality }).collect()
            };
            let scaled = bd_rate(&scale_curve(&a), &scale_curve(&b)).unwrap();
            prop_assert!((scaled - fwd).abs() < 1e-6, "scale invariance broke: {} vs {}", scaled, fwd);
        }
    }

    #[test]
    fn bd_rate_identity_is_zero(a in arb_curve()) {
        prop_assert_eq!(bd_rate(&a, &a).unwrap(), 0.0);
    }
}
