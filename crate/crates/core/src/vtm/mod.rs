//! Bridge to the external VVC reference encoder (VTM).
//!
//! The workflow mirrors how a preview-referenced enhancement layer has to be
//! driven through stock VTM, which cannot take a reference frame directly in
//! its decoded picture buffer: the preview and the original are joined into
//! an uncompressed two-frame YUV444 10-bit sequence, the preview is coded as
//! an intra frame at effective QP 0 via `IntraQPOffset = -QP`, the original
//! as a low-delay P frame at the requested QP, and only the second frame's
//! bits enter any rate accounting.
//!
//! The configuration is a pure template substitution over
//! `appendix_template.cfg` (stored in this directory, QP 28 form): only the
//! `QP`, `IntraQPOffset`, `BitstreamFile`, and `ReconFile` values change,
//! plus an inserted input-description block (`InputFile`, source geometry,
//! frame rate, frame count) that VTM otherwise takes on the command line.
//! The log parser is pinned to the VTM 12.3 per-picture summary format and
//! validated against a captured fixture; other VTM versions need a new
//! fixture, not best-effort parsing.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use thiserror::Error;

use crate::pixel::{yuv444_to_bytes, PixelError, Yuv444Frame};

/// Log grammar this parser is pinned to.
pub const VTM_LOG_FORMAT: &str = "VTM 12.3";

/// The stored Appendix-style template (QP 28, str.bin/rec.yuv).
pub const CONFIG_TEMPLATE: &str = include_str!("appendix_template.cfg");

/// Keys whose values the generator rewrites.
pub const SUBSTITUTED_KEYS: [&str; 4] = ["QP", "IntraQPOffset", "BitstreamFile", "ReconFile"];

/// Input-description keys the generator inserts into the File I/O section;
/// the template leaves them to the command line, this bridge keeps the
/// invocation down to `-c <config>`.
pub const INPUT_KEYS: [&str; 7] = [
    "InputFile",
    "SourceWidth",
    "SourceHeight",
    "InputBitDepth",
    "InputChromaFormat",
    "FrameRate",
    "FramesToBeEncoded",
];

#[derive(Debug, Error)]
pub enum VtmError {
    #[error("qp {0} outside [0, 51]")]
    QpRange(u8),
    #[error("VTM encoder binary unavailable: {path} does not exist or is not executable")]
    EncoderUnavailable { path: PathBuf },
    #[error("VTM encoder exited with {status}; last log lines:\n{tail}")]
    EncoderFailed { status: String, tail: String },
    #[error("VTM decoder exited with {status}")]
    DecoderFailed { status: String },
    #[error("unparseable VTM log: {0}")]
    LogParse(String),
    #[error("expected exactly two per-picture records (POC 0 and POC 1), found {0}")]
    FrameCount(usize),
    #[error("preview and original differ: {0}")]
    FrameMismatch(PixelError),
    #[error(transparent)]
    Pixel(#[from] PixelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> VtmError {
    VtmError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// File paths substituted into the generated configuration.
#[derive(Debug, Clone)]
pub struct VtmIoPaths {
    pub input_yuv: PathBuf,
    pub bitstream: PathBuf,
    pub recon: PathBuf,
}

/// One encoder invocation: a preview/original pair, a QP, and a working
/// directory that keeps every intermediate file for audit.
#[derive(Debug, Clone)]
pub struct VtmJobSpec {
    pub encoder_binary: PathBuf,
    pub decoder_binary: Option<PathBuf>,
    pub qp: u8,
    pub preview: Yuv444Frame,
    pub original: Yuv444Frame,
    pub workdir: PathBuf,
    pub frame_rate: u32,
}

impl VtmJobSpec {
    pub fn new(
        encoder_binary: PathBuf,
        qp: u8,
        preview: Yuv444Frame,
        original: Yuv444Frame,
        workdir: PathBuf,
    ) -> Result<Self, VtmError> {
        if qp > 51 {
            return Err(VtmError::QpRange(qp));
        }
        preview
            .image()
            .same_geometry(original.image())
            .map_err(VtmError::FrameMismatch)?;
        Ok(VtmJobSpec {
            encoder_binary,
            decoder_binary: None,
            qp,
            preview,
            original,
            workdir,
            frame_rate: 2,
        })
    }
}

/// Per-picture record extracted from the encoder log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameStats {
    pub poc: u32,
    pub bits: u64,
    pub psnr_yuv: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct VtmRunResult {
    pub frame1_bits: u64,
    pub frame1_bpp: f64,
    pub frame1_psnr_yuv: [f64; 3],
    /// Preview-frame cost; informational only, never part of rate analysis.
    pub frame0_bits: u64,
    /// Preview-frame fidelity, kept so near-losslessness of the QP-0 intra
    /// coding can be audited.
    pub frame0_psnr_yuv: [f64; 3],
    pub log_text: String,
    pub bitstream_path: PathBuf,
    pub recon_path: PathBuf,
}

fn line_key(line: &str) -> Option<&str> {
    let trimmed = line.trim_start();
    if trimmed.is_empty() || trimmed.starts_with('#') {
        return None;
    }
    trimmed.split([':', ' ', '\t']).next()
}

/// Replace the value token of a `Key : value  # comment` line, keeping the
/// key padding and any trailing comment.
fn substitute_value(line: &str, value: &str) -> String {
    let colon = match line.find(':') {
        Some(c) => c,
        None => return line.to_string(),
    };
    let (head, tail) = line.split_at(colon + 1);
    let after_ws = tail.len() - tail.trim_start().len();
    let (ws, rest) = tail.split_at(after_ws);
    let value_len = rest
        .find(|c: char| c.is_whitespace())
        .unwrap_or(rest.len());
    format!("{head}{ws}{value}{}", &rest[value_len..])
}

/// Emit the encoder configuration: the stored template with the `QP`,
/// `IntraQPOffset`, and file/dimension fields substituted, every other key
/// byte-identical.
pub fn write_vtm_config(
    qp: u8,
    io: &VtmIoPaths,
    dims: (usize, usize),
    frame_rate: u32,
) -> Result<String, VtmError> {
    if qp > 51 {
        return Err(VtmError::QpRange(qp));
    }
    let mut out = String::new();
    for line in CONFIG_TEMPLATE.lines() {
        let rewritten = match line_key(line) {
            Some("QP") => substitute_value(line, &qp.to_string()),
            Some("IntraQPOffset") => substitute_value(line, &(-(qp as i32)).to_string()),
            Some("BitstreamFile") => substitute_value(line, &io.bitstream.display().to_string()),
            Some("ReconFile") => substitute_value(line, &io.recon.display().to_string()),
            _ => line.to_string(),
        };
        out.push_str(&rewritten);
        out.push('\n');
        if line_key(line) == Some("ReconFile") {
            let _ = writeln!(out, "{:<30}: {}", "InputFile", io.input_yuv.display());
            let _ = writeln!(out, "{:<30}: {}", "SourceWidth", dims.0);
            let _ = writeln!(out, "{:<30}: {}", "SourceHeight", dims.1);
            let _ = writeln!(out, "{:<30}: {}", "InputBitDepth", 10);
            let _ = writeln!(out, "{:<30}: {}", "InputChromaFormat", 444);
            let _ = writeln!(out, "{:<30}: {}", "FrameRate", frame_rate);
            let _ = writeln!(out, "{:<30}: {}", "FramesToBeEncoded", 2);
        }
    }
    Ok(out)
}

/// Join preview then original into one raw 10-bit planar YUV444 file.
/// 8-bit inputs are widened by a left shift of 2.
pub fn assemble_two_frame_sequence(
    preview: &Yuv444Frame,
    original: &Yuv444Frame,
    path: &Path,
) -> Result<(), VtmError> {
    preview
        .image()
        .same_geometry(original.image())
        .map_err(VtmError::FrameMismatch)?;
    let mut bytes = yuv444_to_bytes(&preview.promote_to_10bit());
    bytes.extend(yuv444_to_bytes(&original.promote_to_10bit()));
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

/// Extract the POC 0 and POC 1 per-picture records from an encoder log,
/// ignoring unrelated chatter. Exactly two records must be present.
pub fn parse_frame_bits(log_text: &str) -> Result<[FrameStats; 2], VtmError> {
    let mut records = Vec::new();
    for line in log_text.lines() {
        let trimmed = line.trim_start();
        if !trimmed.starts_with("POC") {
            continue;
        }
        records.push(parse_poc_line(trimmed)?);
    }
    if records.len() != 2 {
        return Err(VtmError::FrameCount(records.len()));
    }
    records.sort_by_key(|r| r.poc);
    if records[0].poc != 0 || records[1].poc != 1 {
        return Err(VtmError::LogParse(format!(
            "expected POC 0 and POC 1, got {} and {}",
            records[0].poc, records[1].poc
        )));
    }
    Ok([records[0], records[1]])
}

fn parse_poc_line(line: &str) -> Result<FrameStats, VtmError> {
    let bad = |what: &str| VtmError::LogParse(format!("{what} in per-picture line: {line:?}"));
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let poc: u32 = tokens
        .get(1)
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("missing POC number"))?;
    let bits_pos = tokens
        .iter()
        .position(|&t| t == "bits")
        .ok_or_else(|| bad("missing bits field"))?;
    let bits: u64 = tokens
        .get(bits_pos.wrapping_sub(1))
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| bad("malformed bit count"))?;
    let mut psnr = [0.0f64; 3];
    for (i, marker) in ["[Y", "U", "V"].iter().enumerate() {
        let pos = tokens[bits_pos..]
            .iter()
            .position(|t| t == marker)
            .ok_or_else(|| bad("missing PSNR fields"))?;
        psnr[i] = tokens
            .get(bits_pos + pos + 1)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("malformed PSNR value"))?;
    }
    Ok(FrameStats {
        poc,
        bits,
        psnr_yuv: psnr,
    })
}

/// Whether `path` names an existing executable file.
pub fn binary_available(path: &Path) -> bool {
    if !path.is_file() {
        return false;
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        match fs::metadata(path) {
            Ok(meta) => meta.permissions().mode() & 0o111 != 0,
            Err(_) => false,
        }
    }
    #[cfg(not(unix))]
    true
}

/// Drive one encoder run: write the sequence and config into the workdir,
/// invoke the encoder, parse its log, and optionally run the decoder.
/// Intermediate files are retained under the workdir.
pub fn run_vtm(job: &VtmJobSpec) -> Result<VtmRunResult, VtmError> {
    if job.qp > 51 {
        return Err(VtmError::QpRange(job.qp));
    }
    if !binary_available(&job.encoder_binary) {
        return Err(VtmError::EncoderUnavailable {
            path: job.encoder_binary.clone(),
        });
    }
    fs::create_dir_all(&job.workdir).map_err(|e| io_err(&job.workdir, e))?;
    let input_yuv = job.workdir.join("input.yuv");
    let bitstream = job.workdir.join("str.bin");
    let recon = job.workdir.join("rec.yuv");
    assemble_two_frame_sequence(&job.preview, &job.original, &input_yuv)?;
    let io = VtmIoPaths {
        input_yuv: input_yuv.clone(),
        bitstream: bitstream.clone(),
        recon: recon.clone(),
    };
    let dims = (job.original.width(), job.original.height());
    let config = write_vtm_config(job.qp, &io, dims, job.frame_rate)?;
    let cfg_path = job.workdir.join("encoder.cfg");
    fs::write(&cfg_path, &config).map_err(|e| io_err(&cfg_path, e))?;

    let output = Command::new(&job.encoder_binary)
        .arg("-c")
        .arg(&cfg_path)
        .current_dir(&job.workdir)
        .output()
        .map_err(|e| io_err(&job.encoder_binary, e))?;
    let mut log_text = String::from_utf8_lossy(&output.stdout).into_owned();
    log_text.push_str(&String::from_utf8_lossy(&output.stderr));
    let log_path = job.workdir.join("encoder.log");
    fs::write(&log_path, &log_text).map_err(|e| io_err(&log_path, e))?;
    if !output.status.success() {
        let tail: Vec<&str> = log_text.lines().rev().take(10).collect();
        return Err(VtmError::EncoderFailed {
            status: output.status.to_string(),
            tail: tail.into_iter().rev().collect::<Vec<_>>().join("\n"),
        });
    }

    let [frame0, frame1] = parse_frame_bits(&log_text)?;
    if let Some(decoder) = &job.decoder_binary {
        if !binary_available(decoder) {
            return Err(VtmError::EncoderUnavailable {
                path: decoder.clone(),
            });
        }
        let status = Command::new(decoder)
            .arg("-b")
            .arg(&bitstream)
            .arg("-o")
            .arg(job.workdir.join("dec.yuv"))
            .current_dir(&job.workdir)
            .status()
            .map_err(|e| io_err(decoder, e))?;
        if !status.success() {
            return Err(VtmError::DecoderFailed {
                status: status.to_string(),
            });
        }
    }

    let pixels = (dims.0 * dims.1) as f64;
    Ok(VtmRunResult {
        frame1_bits: frame1.bits,
        frame1_bpp: frame1.bits as f64 / pixels,
        frame1_psnr_yuv: frame1.psnr_yuv,
        frame0_bits: frame0.bits,
        frame0_psnr_yuv: frame0.psnr_yuv,
        log_text,
        bitstream_path: bitstream,
        recon_path: recon,
    })
}
