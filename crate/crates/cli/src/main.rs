//! `lfhc`: encode, decode and benchmark hierarchical light field streams.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use lfhc_core::codec::{CodecBackend, CodecConfig};
use lfhc_core::fdl::FdlFitParams;
use lfhc_core::fixtures::{generate, SyntheticSceneSpec};
use lfhc_core::layers::LayerOptOptions;
use lfhc_core::lightfield::{crop_inner_grid, load_lightfield, save_lightfield};
use lfhc_core::metrics::{write_rd_csv, yuv_psnr, DEFAULT_YUV_WEIGHTS};
use lfhc_core::pipeline::{decode_bytes, encode, rd_sweep, Bitstream, EncodeConfig};
use lfhc_core::scan::ScanKind;
use lfhc_core::LightField;

#[derive(Parser)]
#[command(name = "lfhc", version, about = "Hierarchical light field codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    C2,
    C4,
    H2,
    H4,
}

impl From<OrderArg> for ScanKind {
    fn from(o: OrderArg) -> Self {
        match o {
            OrderArg::C2 => ScanKind::C2,
            OrderArg::C4 => ScanKind::C4,
            OrderArg::H2 => ScanKind::H2,
            OrderArg::H4 => ScanKind::H4,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Baseline,
    External,
}

#[derive(Args)]
struct CodecArgs {
    /// Codec backend for layer and residual frames.
    #[arg(long, value_enum, default_value = "baseline")]
    codec: BackendArg,
    /// External codec command template; receives {mode} {w} {h} {n} {qp}.
    #[arg(long)]
    codec_cmd: Option<String>,
}

impl CodecArgs {
    fn build(&self, qp: u8) -> Result<CodecConfig> {
        let cfg = CodecConfig {
            backend: match self.codec {
                BackendArg::Baseline => CodecBackend::Baseline,
                BackendArg::External => CodecBackend::External,
            },
            qp,
            external_cmd: self.codec_cmd.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode a view directory into a container file.
    Encode {
        /// Directory of view_{ss}_{tt}.png files.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output container path.
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "c2")]
        order: OrderArg,
        #[arg(long, default_value_t = 28)]
        rank: usize,
        #[arg(long, default_value_t = 14)]
        qp: u8,
        /// Crop to the centered inner NxN grid before encoding.
        #[arg(long)]
        inner: Option<usize>,
        /// Also embed the stage-1 coded layers in the container.
        #[arg(long)]
        emit_stage1: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Layer-optimizer iteration cap.
        #[arg(long, default_value_t = 2000)]
        layer_iters: usize,
        /// Fourier disparity layer count.
        #[arg(long, default_value_t = 30)]
        fdl_layers: usize,
        /// Calibration iterations.
        #[arg(long, default_value_t = 10)]
        calib_iters: usize,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Decode a container file into a view directory.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out")]
        output: PathBuf,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Rate-distortion sweep over (rank, qp); writes the per-subset CSV.
    Sweep {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "c2")]
        order: OrderArg,
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,28,44,52,60")]
        ranks: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2,6,10,14,20,26,38")]
        qps: Vec<u8>,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        inner: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 600)]
        layer_iters: usize,
        #[arg(long, default_value_t = 12)]
        fdl_layers: usize,
        #[arg(long, default_value_t = 2)]
        calib_iters: usize,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// YUV-PSNR between two view directories.
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long = "test")]
        test: PathBuf,
    },
    /// Generate a synthetic light field into a view directory.
    Gen {
        /// Scene spec: constant:value=V | plane:d=D | two-plane:d1=A,d2=B | stack:seed=N
        #[arg(long)]
        spec: String,
        #[arg(long = "out")]
        output: PathBuf,
        #[arg(long, default_value_t = 9)]
        views: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Infers the angular grid from the view_{ss}_{tt}.png names present.
fn infer_grid(dir: &Path) -> Result<(usize, usize)> {
    let mut max_row = None;
    let mut max_col = None;
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {dir:?}"))? {
        let name = entry?.file_name();
        let name = name.to_string_lossy();
        if let Some(rest) = name.strip_prefix("view_").and_then(|n| n.strip_suffix(".png")) {
            if let Some((r, c)) = rest.split_once('_') {
                if let (Ok(r), Ok(c)) = (r.parse::<usize>(), c.parse::<usize>()) {
                    max_row = Some(max_row.unwrap_or(0).max(r));
                    max_col = Some(max_col.unwrap_or(0).max(c));
                }
            }
        }
    }
    match (max_row, max_col) {
        (Some(r), Some(c)) => Ok((r + 1, c + 1)),
        _ => bail!("no view_{{ss}}_{{tt}}.png files in {dir:?}"),
    }
}

fn load_input(dir: &Path, inner: Option<usize>) -> Result<LightField> {
    let (rows, cols) = infer_grid(dir)?;
    let lf = load_lightfield(dir, rows, cols)?;
    match inner {
        Some(n) => Ok(crop_inner_grid(&lf, n)?),
        None => Ok(lf),
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Encode {
            input,
            output,
            order,
            rank,
            qp,
            inner,
            emit_stage1,
            seed,
            layer_iters,
            fdl_layers,
            calib_iters,
            codec,
        } => {
            let lf = load_input(&input, inner)?;
            let cfg = EncodeConfig {
                scan_order: order.into(),
                rank,
                qp,
                layer_opts: LayerOptOptions {
                    max_iters: layer_iters,
                    rng_seed: seed,
                    ..Default::default()
                },
                fdl_params: FdlFitParams {
                    layer_count: fdl_layers,
                    calib_iters,
                    ..Default::default()
                },
                codec: codec.build(qp)?,
                emit_stage1,
                ..Default::default()
            };
            let subset1 = lfhc_core::scan::partition_views(lf.angular_rows, cfg.scan_order)
                .map(|o| o.subsets[0].len())
                .unwrap_or(0);
            if fdl_layers > subset1 && subset1 > 0 {
                eprintln!(
                    "warning: {fdl_layers} FDL layers exceed the {subset1} views of subset 1; \
                     the ridge solve stays underdetermined until later refinements"
                );
            }
            let (bitstream, report) = encode(&lf, &cfg)?;
            let bytes = bitstream.to_bytes();
            std::fs::write(&output, &bytes).with_context(|| format!("writing {output:?}"))?;
            println!(
                "encoded {}x{} views of {}x{} px: {} bytes",
                lf.angular_rows,
                lf.angular_cols,
                lf.height,
                lf.width,
                bytes.len()
            );
            for s in &report.subsets {
                println!(
                    "  subset {}: {} views, {} bytes, {:.2} dB YUV-PSNR",
                    s.subset, s.view_count, s.stage2_bytes, s.psnr.combined
                );
            }
            Ok(())
        }
        Command::Decode {
            input,
            output,
            codec,
        } => {
            let bytes = std::fs::read(&input).with_context(|| format!("reading {input:?}"))?;
            let header_qp = Bitstream::from_bytes(&bytes)?.header.qp;
            let lf = decode_bytes(&bytes, &codec.build(header_qp)?)?;
            save_lightfield(&lf, &output)?;
            println!(
                "decoded {}x{} views of {}x{} px into {output:?}",
                lf.angular_rows, lf.angular_cols, lf.height, lf.width
            );
            Ok(())
        }
        Command::Sweep {
            input,
            order,
            ranks,
            qps,
            csv,
            inner,
            seed,
            layer_iters,
            fdl_layers,
            calib_iters,
            codec,
        } => {
            let lf = load_input(&input, inner)?;
            let base = EncodeConfig {
                scan_order: order.into(),
                layer_opts: LayerOptOptions {
                    max_iters: layer_iters,
                    rng_seed: seed,
                    ..Default::default()
                },
                fdl_params: FdlFitParams {
                    layer_count: fdl_layers,
                    calib_iters,
                    ..Default::default()
                },
                codec: codec.build(14)?,
                ..Default::default()
            };
            let table = rd_sweep(&lf, &ranks, &qps, &base)?;
            let file = std::fs::File::create(&csv).with_context(|| format!("creating {csv:?}"))?;
            write_rd_csv(file, &table.records)?;
            println!("rank qp bytes yuv_psnr");
            for p in &table.points {
                println!(
                    "{:4} {:2} {:8} {:7.2}",
                    p.rank, p.qp, p.total_bytes, p.psnr.combined
                );
            }
            println!("wrote {} rows to {csv:?}", table.records.len());
            Ok(())
        }
        Command::Metrics { reference, test } => {
            let r = load_input(&reference, None)?;
            let t = load_input(&test, None)?;
            let p = yuv_psnr(&r, &t, DEFAULT_YUV_WEIGHTS)?;
            println!(
                "psnr_y {:.4} dB\npsnr_u {:.4} dB\npsnr_v {:.4} dB\nyuv_psnr {:.4} dB",
                p.y, p.u, p.v, p.combined
            );
            Ok(())
        }
        Command::Gen {
            spec,
            output,
            views,
            height,
            width,
            seed,
        } => {
            let scene = SyntheticSceneSpec::parse(&spec, seed)?;
            let lf = generate(&scene, views, views, height, width)?;
            save_lightfield(&lf, &output)?;
            println!(
                "generated {views}x{views} views of {height}x{width} px into {output:?}"
            );
            Ok(())
        }
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
