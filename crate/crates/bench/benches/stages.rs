use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use lfhc_bench::{bench_lightfield, small_lightfield};
use lfhc_core::bksvd::{approximate_stack, stack_channels, bk_svd_lowrank, BkSvdParams};
use lfhc_core::codec::{decode_frames, encode_frames, CodecConfig};
use lfhc_core::fdl::{fit_fdl, synthesize_view, FdlFitParams};
use lfhc_core::fixtures::random_layer_stack;
use lfhc_core::layers::{optimize_layers, LayerOptOptions};
use lfhc_core::pipeline::{decode, encode, EncodeConfig};
use lfhc_core::scan::{partition_views, ScanKind};

fn bench_layer_optimizer(c: &mut Criterion) {
    let lf = bench_lightfield();
    let order = partition_views(9, ScanKind::C4).unwrap();
    let views = lf.subset(&order.subsets[0]); // 4 views
    let opts = LayerOptOptions {
        max_iters: 25,
        ..Default::default()
    };
    c.bench_function("layer_optimizer_25_iters_4_views_64px", |b| {
        b.iter(|| optimize_layers(black_box(&views), &opts).unwrap())
    });
}

fn bench_bksvd(c: &mut Criterion) {
    let stack = random_layer_stack(5, 4, 64, 64).unwrap();
    let [red, _, _] = stack_channels(&stack);
    let params = BkSvdParams {
        rank: 28,
        ..Default::default()
    };
    c.bench_function("bk_svd_rank28_216x72", |b| {
        b.iter(|| bk_svd_lowrank(black_box(&red.data), &params).unwrap())
    });
    c.bench_function("approximate_stack_rank28_64px", |b| {
        b.iter(|| approximate_stack(black_box(&stack), &params).unwrap())
    });
}

fn bench_codec(c: &mut Criterion) {
    let lf = bench_lightfield();
    let frames: Vec<_> = lf.views()[..8].to_vec();
    let cfg = CodecConfig::baseline(14);
    let payload = encode_frames(&frames, &cfg, false).unwrap();
    c.bench_function("codec_encode_8_frames_64px_qp14", |b| {
        b.iter(|| encode_frames(black_box(&frames), &cfg, false).unwrap())
    });
    c.bench_function("codec_decode_8_frames_64px_qp14", |b| {
        b.iter(|| decode_frames(black_box(&payload), &cfg).unwrap())
    });
}

fn bench_fdl(c: &mut Criterion) {
    let lf = bench_lightfield();
    let order = partition_views(9, ScanKind::C2).unwrap();
    let views = lf.subset(&order.subsets[0]); // 24 views
    let coords: Vec<(f64, f64)> = views.iter().map(|(vc, _)| (vc.s as f64, vc.t as f64)).collect();
    let disparities: Vec<f64> = (0..12).map(|i| -2.0 + 4.0 * i as f64 / 11.0).collect();
    let model = fit_fdl(&views, &disparities, &coords, 1e-4).unwrap();
    c.bench_function("fdl_fit_24_views_12_layers_64px", |b| {
        b.iter(|| fit_fdl(black_box(&views), &disparities, &coords, 1e-4).unwrap())
    });
    c.bench_function("fdl_synthesize_64px", |b| {
        b.iter(|| synthesize_view(black_box(&model), (0.5, -1.5)))
    });
}

fn bench_pipeline(c: &mut Criterion) {
    let lf = small_lightfield();
    let cfg = EncodeConfig {
        scan_order: ScanKind::C2,
        rank: 8,
        qp: 14,
        layer_opts: LayerOptOptions {
            max_iters: 30,
            ..Default::default()
        },
        fdl_params: FdlFitParams {
            layer_count: 4,
            calib_iters: 1,
            ..Default::default()
        },
        ..Default::default()
    };
    let (bs, _) = encode(&lf, &cfg).unwrap();
    c.bench_function("pipeline_encode_5x5_32px", |b| {
        b.iter(|| encode(black_box(&lf), &cfg).unwrap())
    });
    c.bench_function("pipeline_decode_5x5_32px", |b| {
        b.iter(|| decode(black_box(&bs), &cfg.codec).unwrap())
    });
}

criterion_group!(
    benches,
    bench_layer_optimizer,
    bench_bksvd,
    bench_codec,
    bench_fdl,
    bench_pipeline
);
criterion_main!(benches);
