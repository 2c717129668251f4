use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use scalic_cli::{
    cmd_base, cmd_bd, cmd_breakeven, cmd_decode, cmd_enh, cmd_preview, cmd_vtm_run,
    manifest::load_manifest,
    parse_convention, parse_filter, parse_kind, parse_method,
    pipeline::run_pipeline,
    plotdata::{plot_data, PlotSpec},
    render_bd_report, render_breakeven_report, VtmRunArgs,
};
use scalic_core::base::SurrogateConfig;
use scalic_core::enh::EnhConfig;

/// Scalable human/machine image coding toolkit.
#[derive(Parser)]
#[command(name = "scalic", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full sweep described by a manifest and write results CSV/JSON.
    Pipeline {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Base-layer encode a PPM image into a .smb bitstream.
    Base {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        scale: u8,
        #[arg(long)]
        bits: u8,
        #[arg(long, default_value = "bilinear")]
        filter: String,
        #[arg(long)]
        output: PathBuf,
    },
    /// Decode a .smb bitstream and synthesize its preview image.
    Preview {
        #[arg(long)]
        bitstream: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Enhancement-encode an original against a preview reference.
    Enh {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        preview: PathBuf,
        #[arg(long)]
        qp: u8,
        #[arg(long, default_value_t = 32)]
        search_range: u16,
        #[arg(long)]
        intra_only: bool,
        #[arg(long)]
        output: PathBuf,
        /// Also write the encoder-side reconstruction.
        #[arg(long)]
        recon: Option<PathBuf>,
    },
    /// Decode a .sme bitstream against its preview reference.
    Decode {
        #[arg(long)]
        bitstream: PathBuf,
        #[arg(long)]
        preview: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Bjøntegaard-delta metrics of a candidate curve against an anchor.
    Bd {
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long, default_value = "piecewise_cubic")]
        method: String,
        /// Require the curves to carry this quality kind.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Break-even frequency of one scalable codec against another.
    Breakeven {
        #[arg(long)]
        candidate_records: PathBuf,
        #[arg(long)]
        anchor_records: PathBuf,
        #[arg(long, default_value = "total_over_base")]
        rho_convention: String,
        #[arg(long, default_value = "piecewise_cubic")]
        method: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Drive the external VTM encoder over one preview/original pair.
    VtmRun {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        preview: PathBuf,
        #[arg(long)]
        qp: u8,
        #[arg(long)]
        workdir: PathBuf,
        #[arg(long, env = "SCALIC_VTM_ENCODER")]
        encoder: Option<PathBuf>,
        #[arg(long, env = "SCALIC_VTM_DECODER")]
        decoder: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Split a results CSV into per-group (x, y) series for plotting.
    PlotData {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        group: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn write_json<T: serde::Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    }
    Ok(())
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Pipeline { manifest } => {
            let manifest = load_manifest(&manifest)?;
            let rows = run_pipeline(&manifest)?;
            println!(
                "pipeline: {} rows written to {}",
                rows.len(),
                manifest.output_dir.join("results.csv").display()
            );
        }
        Command::Base {
            input,
            scale,
            bits,
            filter,
            output,
        } => {
            let cfg = SurrogateConfig::new(scale, bits, parse_filter(&filter)?)?;
            let bpp = cmd_base(&input, &cfg, &output)?;
            println!("base: {} -> {} ({bpp:.6} bpp)", input.display(), output.display());
        }
        Command::Preview { bitstream, output } => {
            cmd_preview(&bitstream, &output)?;
            println!("preview: {} -> {}", bitstream.display(), output.display());
        }
        Command::Enh {
            original,
            preview,
            qp,
            search_range,
            intra_only,
            output,
            recon,
        } => {
            let cfg = EnhConfig {
                search_range,
                intra_only,
                ..EnhConfig::new(qp)?
            };
            let outcome = cmd_enh(&original, &preview, &cfg, &output, recon.as_deref())?;
            println!(
                "enh: qp {qp}, {:.6} bpp, recon {:.4} dB -> {}",
                outcome.bpp,
                outcome.recon_psnr_db,
                output.display()
            );
        }
        Command::Decode {
            bitstream,
            preview,
            output,
        } => {
            cmd_decode(&bitstream, &preview, &output)?;
            println!("decode: {} -> {}", bitstream.display(), output.display());
        }
        Command::Bd {
            candidate,
            anchor,
            method,
            kind,
            json,
        } => {
            let kind = kind.as_deref().map(parse_kind).transpose()?;
            let report = cmd_bd(&candidate, &anchor, parse_method(&method)?, kind)?;
            print!("{}", render_bd_report(&report, ""));
            write_json(&json, &report)?;
        }
        Command::Breakeven {
            candidate_records,
            anchor_records,
            rho_convention,
            method,
            json,
        } => {
            let report = cmd_breakeven(
                &candidate_records,
                &anchor_records,
                parse_convention(&rho_convention)?,
                parse_method(&method)?,
            )?;
            print!("{}", render_breakeven_report(&report));
            write_json(&json, &report)?;
        }
        Command::VtmRun {
            original,
            preview,
            qp,
            workdir,
            encoder,
            decoder,
            json,
        } => {
            let result = cmd_vtm_run(&VtmRunArgs {
                original,
                preview,
                qp,
                workdir,
                encoder,
                decoder,
            })?;
            println!(
                "vtm-run: frame1 {} bits ({:.6} bpp), psnr Y {:.4} U {:.4} V {:.4}",
                result.frame1_bits,
                result.frame1_bpp,
                result.frame1_psnr_yuv[0],
                result.frame1_psnr_yuv[1],
                result.frame1_psnr_yuv[2]
            );
            println!(
                "vtm-run: bitstream {}, recon {}",
                result.bitstream_path.display(),
                result.recon_path.display()
            );
            #[derive(serde::Serialize)]
            struct VtmRunJson<'a> {
                frame1_bits: u64,
                frame1_bpp: f64,
                frame1_psnr_yuv: [f64; 3],
                frame0_bits: u64,
                frame0_psnr_yuv: [f64; 3],
                bitstream_path: &'a std::path::Path,
                recon_path: &'a std::path::Path,
            }
            write_json(
                &json,
                &VtmRunJson {
                    frame1_bits: result.frame1_bits,
                    frame1_bpp: result.frame1_bpp,
                    frame1_psnr_yuv: result.frame1_psnr_yuv,
                    frame0_bits: result.frame0_bits,
                    frame0_psnr_yuv: result.frame0_psnr_yuv,
                    bitstream_path: &result.bitstream_path,
                    recon_path: &result.recon_path,
                },
            )?;
        }
        Command::PlotData {
            results,
            x,
            y,
            group,
            out_dir,
        } => {
            let files = plot_data(
                &results,
                &PlotSpec {
                    x: &x,
                    y: &y,
                    group: &group,
                },
                &out_dir,
            )?;
            for f in files {
                println!("plot-data: wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
