//! Library backing the `scalic` binary: manifest parsing, the pipeline
//! sweep, and the analysis/codec subcommand implementations.

pub mod manifest;
pub mod pipeline;
pub mod plotdata;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use scalic_core::analysis::{
    bd_metrics, break_even_report, estimate_rho, load_records_csv, load_rd_csv, BdMethod,
    BdReport, BreakEvenReport, QualityKind, RdCurve, RdPoint, RhoConvention, ScalableRdRecord,
};
use scalic_core::base::{base_decode, base_encode, base_rate_bpp, synthesize_preview, BaseBitstream, SurrogateConfig};
use scalic_core::enh::{enh_decode, enh_encode, enh_rate_bpp, EnhBitstream, EnhConfig};
use scalic_core::pixel::{
    load_ppm, psnr, rgb_to_yuv444, save_ppm, write_yuv444_raw, yuv444_to_rgb, ColorSpace, Filter,
    Yuv444Frame,
};
use scalic_core::vtm::{run_vtm, VtmJobSpec, VtmRunResult};

/// Load a coding-domain (YUV444) frame from a `.ppm` image or a `.smb` base
/// bitstream (decoded and synthesized into its preview).
pub fn load_frame(path: &Path) -> Result<Yuv444Frame> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("smb") => {
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let bs = BaseBitstream::parse(&bytes)
                .with_context(|| format!("parsing {}", path.display()))?;
            Ok(synthesize_preview(&base_decode(&bs)?)?)
        }
        Some("ppm") => {
            let image = load_ppm(path)?;
            match image.color_space() {
                ColorSpace::Rgb => Ok(rgb_to_yuv444(&image)?),
                ColorSpace::Yuv444 => Ok(Yuv444Frame::new(image)?),
            }
        }
        _ => bail!(
            "{}: expected a .ppm image or a .smb base bitstream",
            path.display()
        ),
    }
}

/// Write a YUV444 frame as `.ppm` (converted to RGB) or raw `.yuv`.
pub fn write_frame(frame: &Yuv444Frame, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("ppm") => {
            let rgb = yuv444_to_rgb(frame)?;
            save_ppm(&rgb, path)?;
            Ok(())
        }
        Some("yuv") => {
            write_yuv444_raw(frame, path)?;
            Ok(())
        }
        _ => bail!("{}: expected a .ppm or .yuv output path", path.display()),
    }
}

pub fn cmd_base(input: &Path, cfg: &SurrogateConfig, output: &Path) -> Result<f64> {
    let image = load_ppm(input)?;
    let bs = base_encode(&image, cfg)?;
    std::fs::write(output, bs.serialize())
        .with_context(|| format!("writing {}", output.display()))?;
    Ok(base_rate_bpp(&bs, true))
}

pub fn cmd_preview(bitstream: &Path, output: &Path) -> Result<()> {
    let frame = load_frame(bitstream)?;
    write_frame(&frame, output)
}

pub struct EnhOutcome {
    pub bpp: f64,
    pub recon_psnr_db: f64,
}

pub fn cmd_enh(
    original: &Path,
    preview: &Path,
    cfg: &EnhConfig,
    output: &Path,
    recon_out: Option<&Path>,
) -> Result<EnhOutcome> {
    let orig = load_frame(original)?;
    let prev = load_frame(preview)?;
    let (bs, recon) = enh_encode(&orig, &prev, cfg)?;
    std::fs::write(output, bs.serialize())
        .with_context(|| format!("writing {}", output.display()))?;
    if let Some(path) = recon_out {
        write_frame(&recon, path)?;
    }
    Ok(EnhOutcome {
        bpp: enh_rate_bpp(&bs),
        recon_psnr_db: psnr(orig.image(), recon.image())?.psnr_combined,
    })
}

pub fn cmd_decode(bitstream: &Path, preview: &Path, output: &Path) -> Result<()> {
    let bytes = std::fs::read(bitstream)
        .with_context(|| format!("reading {}", bitstream.display()))?;
    let bs = EnhBitstream::parse(&bytes)
        .with_context(|| format!("parsing {}", bitstream.display()))?;
    let prev = load_frame(preview)?;
    let recon = enh_decode(&bs, &prev)?;
    write_frame(&recon, output)
}

pub fn cmd_bd(
    candidate_csv: &Path,
    anchor_csv: &Path,
    method: BdMethod,
    expected_kind: Option<QualityKind>,
) -> Result<BdReport> {
    let candidate = load_rd_csv(candidate_csv)?;
    let anchor = load_rd_csv(anchor_csv)?;
    if let Some(kind) = expected_kind {
        if candidate.kind() != kind {
            bail!(
                "{}: quality kind {} does not match requested {}",
                candidate_csv.display(),
                candidate.kind().name(),
                kind.name()
            );
        }
    }
    Ok(bd_metrics(&candidate, &anchor, method)?)
}

pub fn render_bd_report(report: &BdReport, quality_unit: &str) -> String {
    format!(
        "BD-Rate     : {:+.4} %\nBD-quality  : {:+.4} {}\noverlap     : [{:.4}, {:.4}]\nmethod      : {}\n",
        report.bd_rate_percent,
        report.bd_quality_delta,
        quality_unit,
        report.overlap_interval.0,
        report.overlap_interval.1,
        report.method.name(),
    )
}

fn records_to_curve(
    records: &[ScalableRdRecord],
    label: &str,
    kind: QualityKind,
    point: impl Fn(&ScalableRdRecord) -> (f64, f64),
) -> Result<RdCurve> {
    let mut points: Vec<RdPoint> = records
        .iter()
        .map(|r| {
            let (rate_bpp, quality) = point(r);
            RdPoint { rate_bpp, quality }
        })
        .collect();
    points.sort_by(|a, b| a.rate_bpp.total_cmp(&b.rate_bpp));
    RdCurve::new(label, kind, points)
        .with_context(|| format!("building {label} curve from records"))
}

/// Break-even analysis from per-layer record sweeps: BD-rate of the base
/// curves (task quality), BD-rate of the total-rate curves (reconstruction
/// quality), rho from the anchor records, closed-form break-even, and the
/// bisection-oracle cross-check.
pub fn cmd_breakeven(
    candidate_csv: &Path,
    anchor_csv: &Path,
    convention: RhoConvention,
    method: BdMethod,
) -> Result<BreakEvenReport> {
    let candidate = load_records_csv(candidate_csv)?;
    let anchor = load_records_csv(anchor_csv)?;
    let cand_base = records_to_curve(&candidate, "candidate-base", QualityKind::Map, |r| {
        (r.base_rate, r.base_quality)
    })?;
    let anch_base = records_to_curve(&anchor, "anchor-base", QualityKind::Map, |r| {
        (r.base_rate, r.base_quality)
    })?;
    let cand_total = records_to_curve(&candidate, "candidate-total", QualityKind::Psnr, |r| {
        (r.total_rate(), r.enh_quality)
    })?;
    let anch_total = records_to_curve(&anchor, "anchor-total", QualityKind::Psnr, |r| {
        (r.total_rate(), r.enh_quality)
    })?;
    let bdr_base = bd_metrics(&cand_base, &anch_base, method)?.bd_rate_percent;
    let bdr_total = bd_metrics(&cand_total, &anch_total, method)?.bd_rate_percent;
    let rho = estimate_rho(&anchor, convention)?;
    Ok(break_even_report(bdr_base, bdr_total, rho, convention)?)
}

pub fn render_breakeven_report(report: &BreakEvenReport) -> String {
    let f_star = match (report.always_equal, report.f_star) {
        (true, _) => "always equal".to_string(),
        (false, Some(f)) if report.in_range => format!("{f:.6}"),
        (false, Some(f)) => format!("{f:.6} (out of range: one codec dominates)"),
        (false, None) => "undefined".to_string(),
    };
    let oracle = report
        .oracle_f_star
        .map(|f| format!("{f:.6}"))
        .unwrap_or_else(|| "-".to_string());
    format!(
        "break-even f*    : {f_star}\nBDR base         : {:+.4} %\nBDR total        : {:+.4} %\nrho ({})  : {:.6}\noracle f*        : {oracle}\noracle agrees    : {}\n",
        report.bdr_base_percent,
        report.bdr_total_percent,
        report.rho_convention.name(),
        report.rho,
        report.oracle_agrees,
    )
}

pub struct VtmRunArgs {
    pub original: PathBuf,
    pub preview: PathBuf,
    pub qp: u8,
    pub workdir: PathBuf,
    pub encoder: Option<PathBuf>,
    pub decoder: Option<PathBuf>,
}

pub fn cmd_vtm_run(args: &VtmRunArgs) -> Result<VtmRunResult> {
    let encoder = args
        .encoder
        .clone()
        .ok_or_else(|| anyhow::anyhow!("no VTM encoder given (use --encoder or SCALIC_VTM_ENCODER)"))?;
    let original = load_frame(&args.original)?;
    let preview = load_frame(&args.preview)?;
    let mut job = VtmJobSpec::new(encoder, args.qp, preview, original, args.workdir.clone())?;
    job.decoder_binary = args.decoder.clone();
    Ok(run_vtm(&job)?)
}

/// Parse helpers shared by the binary.
pub fn parse_filter(s: &str) -> Result<Filter> {
    s.parse::<Filter>().map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn parse_method(s: &str) -> Result<BdMethod> {
    s.parse::<BdMethod>().map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn parse_kind(s: &str) -> Result<QualityKind> {
    s.parse::<QualityKind>().map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn parse_convention(s: &str) -> Result<RhoConvention> {
    s.parse::<RhoConvention>().map_err(|e| anyhow::anyhow!("{e}"))
}
