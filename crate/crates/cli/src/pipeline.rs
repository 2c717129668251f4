//! End-to-end sweep: for every (image, surrogate config, QP), run base
//! encode -> preview synthesis -> enhancement encode and record rates and
//! qualities. Jobs fan out across worker threads; rows are gathered and
//! written in manifest order regardless of completion order, and repeated
//! runs produce byte-identical outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use scalic_core::base::{base_decode, base_encode, base_rate_bpp, synthesize_preview, SurrogateConfig};
use scalic_core::enh::{enh_encode, enh_rate_bpp, EnhConfig};
use scalic_core::pixel::{load_ppm, psnr, read_yuv444_raw, rgb_to_yuv444, ColorSpace, Yuv444Frame};
use scalic_core::vtm::{binary_available, run_vtm, VtmJobSpec};

use crate::manifest::{Engine, RunManifest};

/// Version of the results CSV/JSON schema written by `pipeline`.
pub const RESULTS_SCHEMA_VERSION: u32 = 1;

pub const RESULTS_HEADER: &str =
    "image,cfg,scale,bits,filter,qp,engine,base_bpp,preview_psnr_db,enh_bpp,recon_psnr_db,total_bpp";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRow {
    pub image: String,
    pub cfg: String,
    pub scale: u8,
    pub bits: u8,
    pub filter: String,
    pub qp: u8,
    pub engine: String,
    pub base_bpp: f64,
    pub preview_psnr_db: f64,
    pub enh_bpp: f64,
    pub recon_psnr_db: f64,
    pub total_bpp: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub schema_version: u32,
    pub rows: Vec<ResultRow>,
}

struct Job {
    image_path: PathBuf,
    cfg: SurrogateConfig,
    qp: u8,
}

fn job_context(job: &Job) -> String {
    format!(
        "image {}, cfg {}, qp {}",
        job.image_path.display(),
        job.cfg.tag(),
        job.qp
    )
}

/// Load an image for coding: PPM becomes YUV444 via the BT.709 conversion.
fn load_image_yuv(path: &Path) -> Result<Yuv444Frame> {
    let image = load_ppm(path).with_context(|| format!("loading {}", path.display()))?;
    match image.color_space() {
        ColorSpace::Rgb => Ok(rgb_to_yuv444(&image)?),
        ColorSpace::Yuv444 => Ok(Yuv444Frame::new(image)?),
    }
}

fn run_job(job: &Job, manifest: &RunManifest) -> Result<ResultRow> {
    let original = load_image_yuv(&job.image_path)?;
    let bitstream = base_encode(original.image(), &job.cfg)?;
    let base_bpp = base_rate_bpp(&bitstream, true);
    let latent = base_decode(&bitstream)?;
    let preview = synthesize_preview(&latent)?;
    let preview_psnr = psnr(original.image(), preview.image())?.psnr_combined;

    let (enh_bpp, recon_psnr_db) = match manifest.engine {
        Engine::Inhouse => {
            let cfg = EnhConfig {
                search_range: manifest.search_range,
                ..EnhConfig::new(job.qp)?
            };
            let (enh_bs, recon) = enh_encode(&original, &preview, &cfg)?;
            let q = psnr(original.image(), recon.image())?.psnr_combined;
            (enh_rate_bpp(&enh_bs), q)
        }
        Engine::Vtm => {
            let encoder = resolve_vtm_encoder(manifest)?;
            let stem = job
                .image_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "image".into());
            let workdir = manifest
                .output_dir
                .join("vtm")
                .join(format!("{stem}_{}_qp{}", job.cfg.tag(), job.qp));
            let mut spec = VtmJobSpec::new(
                encoder,
                job.qp,
                preview.clone(),
                original.clone(),
                workdir,
            )?;
            spec.decoder_binary = manifest.vtm_decoder.clone();
            let result = run_vtm(&spec)?;
            // Frame 1 of the encoder-written reconstruction, measured with
            // the same PSNR as the in-house engine.
            let original10 = original.promote_to_10bit();
            let recon = read_yuv444_raw(
                &result.recon_path,
                original.width(),
                original.height(),
                10,
                1,
            )?;
            let q = psnr(original10.image(), recon.image())?.psnr_combined;
            (result.frame1_bpp, q)
        }
    };

    Ok(ResultRow {
        image: job.image_path.display().to_string(),
        cfg: job.cfg.tag(),
        scale: job.cfg.scale_factor,
        bits: job.cfg.quant_bits,
        filter: job.cfg.preview_filter.name().to_string(),
        qp: job.qp,
        engine: manifest.engine.name().to_string(),
        base_bpp,
        preview_psnr_db: preview_psnr,
        enh_bpp,
        recon_psnr_db,
        total_bpp: base_bpp + enh_bpp,
    })
}

fn resolve_vtm_encoder(manifest: &RunManifest) -> Result<PathBuf> {
    let path = manifest
        .vtm_encoder
        .clone()
        .or_else(|| std::env::var_os("SCALIC_VTM_ENCODER").map(PathBuf::from));
    match path {
        Some(p) => Ok(p),
        None => bail!(
            "vtm engine selected but no encoder given (set vtm_encoder in the manifest or SCALIC_VTM_ENCODER)"
        ),
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

pub fn write_results(rows: &[ResultRow], output_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(output_dir)
        .with_context(|| format!("creating {}", output_dir.display()))?;
    let csv_path = output_dir.join("results.csv");
    let mut csv = String::from(RESULTS_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.image,
            r.cfg,
            r.scale,
            r.bits,
            r.filter,
            r.qp,
            r.engine,
            fmt6(r.base_bpp),
            fmt6(r.preview_psnr_db),
            fmt6(r.enh_bpp),
            fmt6(r.recon_psnr_db),
            fmt6(r.total_bpp),
        ));
    }
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;

    let json_path = output_dir.join("results.json");
    let doc = ResultsDocument {
        schema_version: RESULTS_SCHEMA_VERSION,
        rows: rows.to_vec(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&doc)?)
        .with_context(|| format!("writing {}", json_path.display()))?;
    Ok((csv_path, json_path))
}

/// Run the full sweep and write `results.csv` + `results.json` into the
/// manifest's output directory.
pub fn run_pipeline(manifest: &RunManifest) -> Result<Vec<ResultRow>> {
    // Fail before any encoding starts when the external engine is missing.
    if manifest.engine == Engine::Vtm {
        let encoder = resolve_vtm_encoder(manifest)?;
        if !binary_available(&encoder) {
            bail!(
                "vtm engine selected but encoder binary {} does not exist or is not executable",
                encoder.display()
            );
        }
    }
    let mut jobs = Vec::new();
    for image_path in &manifest.images {
        for cfg in &manifest.surrogate_configs {
            for &qp in &manifest.qps {
                jobs.push(Job {
                    image_path: image_path.clone(),
                    cfg: *cfg,
                    qp,
                });
            }
        }
    }
    let rows: Vec<ResultRow> = jobs
        .par_iter()
        .map(|job| run_job(job, manifest).with_context(|| job_context(job)))
        .collect::<Result<Vec<_>>>()?;
    write_results(&rows, &manifest.output_dir)?;
    Ok(rows)
}
