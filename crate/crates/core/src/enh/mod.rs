//! Enhancement-layer codec: encodes the original frame by inter-prediction
//! from the preview reference, with SKIP / INTER / INTRA_DC block modes,
//! full-search integer-pel motion, and an 8x8 fixed-point transform.
//!
//! The defining invariant is reconstruction closure: the reconstruction the
//! encoder returns is bit-identical to what the decoder produces from the
//! bitstream and the same preview, for every input and QP. Everything that
//! affects the bitstream or the reconstruction is integer arithmetic;
//! rate-distortion comparisons run in x16 fixed point. Block analysis is
//! embarrassingly parallel and fans out across threads, while entropy coding
//! is a strictly sequential pass over the finished records in raster order,
//! so the bitstream does not depend on internal parallelism.

mod motion;
mod syntax;
mod transform;

pub use motion::motion_search;
pub use transform::{dequantize_inverse_transform, qp_to_qstep, transform_quantize};

use rayon::prelude::*;
use thiserror::Error;

use crate::pixel::{ColorSpace, PixelError, RasterImage, Yuv444Frame};
use crate::range::{signed_eg_len, RangeDecoder, RangeEncoder, RangeError};

use motion::{mv_bits, search_padded, PaddedFrame};
use syntax::Contexts;
use transform::{dequantize, forward_transform, inverse_transform, quantize, qstep_x16};

/// Fixed coding block size in pixels.
pub const BLOCK_SIZE: usize = 16;
/// Transform size; each block holds a 2x2 grid of transform sub-blocks.
pub const SUB_SIZE: usize = 8;

pub const ENH_MAGIC: [u8; 4] = *b"SME1";
pub const ENH_VERSION: u8 = 1;
pub const ENH_HEADER_BYTES: usize = 19;

#[derive(Debug, Error)]
pub enum EnhError {
    #[error("qp {0} outside [0, 51]")]
    QpRange(u8),
    #[error("lambda_mode_scale {0} must be a positive finite number")]
    LambdaScale(f64),
    #[error("original and preview differ: {0}")]
    ReferenceMismatch(PixelError),
    #[error("bad magic {0:?}, expected \"SME1\"")]
    Magic([u8; 4]),
    #[error("unsupported bitstream version {0}")]
    Version(u8),
    #[error("bitstream header truncated or inconsistent")]
    Header,
    #[error("payload corrupt: {0}")]
    Payload(#[from] RangeError),
    #[error("payload corrupt: motion vector ({0}, {1}) reads outside the frame")]
    MvOutOfFrame(i32, i32),
    #[error(transparent)]
    Pixel(#[from] PixelError),
}

/// Encoder configuration. `block_size` is fixed at [`BLOCK_SIZE`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhConfig {
    pub qp: u8,
    /// Full-search window half-width in pixels.
    pub search_range: u16,
    /// Scale on the rate-distortion multiplier `2^((qp-12)/3)`.
    pub lambda_mode_scale: f64,
    /// Restrict mode decision to INTRA_DC, turning the coder into its own
    /// intra-only baseline. Decoding is unaffected.
    pub intra_only: bool,
}

impl EnhConfig {
    pub fn new(qp: u8) -> Result<Self, EnhError> {
        transform::check_qp(qp)?;
        Ok(EnhConfig {
            qp,
            search_range: 32,
            lambda_mode_scale: 0.85,
            intra_only: false,
        })
    }

    pub fn validate(&self) -> Result<(), EnhError> {
        transform::check_qp(self.qp)?;
        if !(self.lambda_mode_scale.is_finite() && self.lambda_mode_scale > 0.0) {
            return Err(EnhError::LambdaScale(self.lambda_mode_scale));
        }
        Ok(())
    }

    /// Rate-distortion multiplier in x16 fixed point.
    pub(crate) fn lambda_x16(&self) -> u64 {
        let scale_x16 = (self.lambda_mode_scale * 65536.0).round() as u64;
        transform::lambda_x16(self.qp, scale_x16)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MotionVector {
    pub dx: i32,
    pub dy: i32,
}

impl MotionVector {
    pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockMode {
    Skip,
    Inter,
    IntraDc,
}

/// Everything the entropy coder needs for one 16x16 block. SKIP carries no
/// motion vector and no levels; INTER carries a vector, INTRA_DC a signaled
/// per-plane DC predictor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockRecord {
    pub mode: BlockMode,
    pub mv: MotionVector,
    pub dc: [u16; 3],
    /// Quantized transform levels, `[plane][sub-block][raster coefficient]`.
    pub levels: [[[i32; 64]; 4]; 3],
}

impl BlockRecord {
    pub(crate) fn empty() -> Self {
        BlockRecord {
            mode: BlockMode::Skip,
            mv: MotionVector::ZERO,
            dc: [0; 3],
            levels: [[[0; 64]; 4]; 3],
        }
    }
}

/// Container for the entropy-coded enhancement layer. Header layout
/// (little-endian) is documented in `docs/FORMATS.md`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnhBitstream {
    pub width: u32,
    pub height: u32,
    pub bit_depth: u8,
    pub qp: u8,
    pub payload: Vec<u8>,
}

impl EnhBitstream {
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(ENH_HEADER_BYTES + self.payload.len());
        out.extend_from_slice(&ENH_MAGIC);
        out.push(ENH_VERSION);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.push(self.bit_depth);
        out.push(self.qp);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn parse(data: &[u8]) -> Result<Self, EnhError> {
        if data.len() < ENH_HEADER_BYTES {
            return Err(EnhError::Header);
        }
        let magic: [u8; 4] = data[0..4].try_into().unwrap();
        if magic != ENH_MAGIC {
            return Err(EnhError::Magic(magic));
        }
        if data[4] != ENH_VERSION {
            return Err(EnhError::Version(data[4]));
        }
        let width = u32::from_le_bytes(data[5..9].try_into().unwrap());
        let height = u32::from_le_bytes(data[9..13].try_into().unwrap());
        let bit_depth = data[13];
        let qp = data[14];
        let payload_len = u32::from_le_bytes(data[15..19].try_into().unwrap()) as usize;
        if data.len() != ENH_HEADER_BYTES + payload_len {
            return Err(EnhError::Header);
        }
        if width == 0 || height == 0 || (bit_depth != 8 && bit_depth != 10) || qp > 51 {
            return Err(EnhError::Header);
        }
        Ok(EnhBitstream {
            width,
            height,
            bit_depth,
            qp,
            payload: data[ENH_HEADER_BYTES..].to_vec(),
        })
    }

    /// Total container size in bits, header included.
    pub fn bit_count(&self) -> u64 {
        8 * (ENH_HEADER_BYTES + self.payload.len()) as u64
    }

    pub fn block_count(&self) -> usize {
        (self.width as usize).div_ceil(BLOCK_SIZE) * (self.height as usize).div_ceil(BLOCK_SIZE)
    }
}

/// Enhancement rate in bits per pixel. The preview reference contributes
/// zero bits by construction.
pub fn enh_rate_bpp(bs: &EnhBitstream) -> f64 {
    bs.bit_count() as f64 / (bs.width as f64 * bs.height as f64)
}

type PlaneBlock = [u16; BLOCK_SIZE * BLOCK_SIZE];
type BlockPixels = [PlaneBlock; 3];

fn predict_block(reference: &PaddedFrame, bx: usize, by: usize, mv: MotionVector) -> BlockPixels {
    let rx = (bx as i32 + mv.dx) as usize;
    let ry = (by as i32 + mv.dy) as usize;
    let mut out = [[0u16; 256]; 3];
    for (plane, block) in out.iter_mut().enumerate() {
        reference.block(plane, rx, ry, block);
    }
    out
}

fn constant_block(dc: &[u16; 3]) -> BlockPixels {
    [[dc[0]; 256], [dc[1]; 256], [dc[2]; 256]]
}

/// Transform + quantize the residual between the source block and a
/// prediction, and build the reconstruction the decoder will reproduce.
fn code_from_prediction(
    orig: &PaddedFrame,
    bx: usize,
    by: usize,
    pred: &BlockPixels,
    qstep: u64,
    depth: u8,
) -> ([[[i32; 64]; 4]; 3], BlockPixels) {
    let mut levels = [[[0i32; 64]; 4]; 3];
    let mut recon = *pred;
    let max = (1i32 << depth) - 1;
    let mut src = [0u16; 256];
    for plane in 0..3 {
        orig.block(plane, bx, by, &mut src);
        for sub in 0..4 {
            let sx = (sub % 2) * SUB_SIZE;
            let sy = (sub / 2) * SUB_SIZE;
            let mut residual = [0i32; 64];
            for r in 0..SUB_SIZE {
                for c in 0..SUB_SIZE {
                    let i = (sy + r) * BLOCK_SIZE + sx + c;
                    residual[r * 8 + c] = src[i] as i32 - pred[plane][i] as i32;
                }
            }
            let sub_levels = quantize(&forward_transform(&residual), qstep);
            let rec_res = inverse_transform(&dequantize(&sub_levels, qstep));
            for r in 0..SUB_SIZE {
                for c in 0..SUB_SIZE {
                    let i = (sy + r) * BLOCK_SIZE + sx + c;
                    recon[plane][i] =
                        (pred[plane][i] as i32 + rec_res[r * 8 + c]).clamp(0, max) as u16;
                }
            }
            levels[plane][sub] = sub_levels;
        }
    }
    (levels, recon)
}

/// Rebuild one block from its record, exactly as the decoder does.
fn reconstruct_block(
    record: &BlockRecord,
    preview: &PaddedFrame,
    bx: usize,
    by: usize,
    qstep: u64,
    depth: u8,
) -> BlockPixels {
    match record.mode {
        BlockMode::Skip => predict_block(preview, bx, by, MotionVector::ZERO),
        BlockMode::Inter => {
            let pred = predict_block(preview, bx, by, record.mv);
            apply_residual(&pred, &record.levels, qstep, depth)
        }
        BlockMode::IntraDc => {
            let pred = constant_block(&record.dc);
            apply_residual(&pred, &record.levels, qstep, depth)
        }
    }
}

fn apply_residual(
    pred: &BlockPixels,
    levels: &[[[i32; 64]; 4]; 3],
    qstep: u64,
    depth: u8,
) -> BlockPixels {
    let mut recon = *pred;
    let max = (1i32 << depth) - 1;
    for plane in 0..3 {
        for sub in 0..4 {
            let sx = (sub % 2) * SUB_SIZE;
            let sy = (sub / 2) * SUB_SIZE;
            let rec_res = inverse_transform(&dequantize(&levels[plane][sub], qstep));
            for r in 0..SUB_SIZE {
                for c in 0..SUB_SIZE {
                    let i = (sy + r) * BLOCK_SIZE + sx + c;
                    recon[plane][i] =
                        (pred[plane][i] as i32 + rec_res[r * 8 + c]).clamp(0, max) as u16;
                }
            }
        }
    }
    recon
}

/// Distortion over the valid (unpadded) pixels of a block, all planes.
fn block_ssd(orig: &PaddedFrame, bx: usize, by: usize, recon: &BlockPixels) -> u64 {
    let rows = BLOCK_SIZE.min(orig.height - by);
    let cols = BLOCK_SIZE.min(orig.width - bx);
    let mut ssd = 0u64;
    for plane in 0..3 {
        for r in 0..rows {
            let src = orig.row(plane, bx, by + r, cols);
            let rec = &recon[plane][r * BLOCK_SIZE..r * BLOCK_SIZE + cols];
            ssd += src
                .iter()
                .zip(rec)
                .map(|(&a, &b)| {
                    let d = (a as i64 - b as i64).unsigned_abs();
                    d * d
                })
                .sum::<u64>();
        }
    }
    ssd
}

/// One whole bit in the mode-decision cost model's 1/16-bit units. Zero
/// coefficients are charged a single unit: after adaptation their bins cost
/// far below one bit, and charging them whole bits would bias every
/// decision toward SKIP.
const BIT: u64 = 16;

/// Rate of the coded levels in 1/16-bit units: one cbf bin per sub-block,
/// and when coded, signed exp-Golomb lengths for nonzero coefficients plus
/// one unit per zero coefficient.
fn level_cost(levels: &[[[i32; 64]; 4]; 3]) -> u64 {
    let mut units = 0u64;
    for plane in levels {
        for sub in plane {
            units += BIT;
            if sub.iter().any(|&l| l != 0) {
                units += sub
                    .iter()
                    .map(|&l| {
                        if l == 0 {
                            1
                        } else {
                            BIT * signed_eg_len(l) as u64
                        }
                    })
                    .sum::<u64>();
            }
        }
    }
    units
}

/// Per-plane mean of the valid source pixels, rounded half up.
fn block_means(orig: &PaddedFrame, bx: usize, by: usize) -> [u16; 3] {
    let rows = BLOCK_SIZE.min(orig.height - by);
    let cols = BLOCK_SIZE.min(orig.width - bx);
    let count = (rows * cols) as u64;
    let mut dc = [0u16; 3];
    for (plane, out) in dc.iter_mut().enumerate() {
        let mut sum = 0u64;
        for r in 0..rows {
            sum += orig
                .row(plane, bx, by + r, cols)
                .iter()
                .map(|&v| v as u64)
                .sum::<u64>();
        }
        *out = ((2 * sum + count) / (2 * count)) as u16;
    }
    dc
}

/// Rate-distortion mode decision for one block. Candidates are compared by
/// `J = SSD * 2^20 + lambda_x16 * cost_units` (cost in 1/16-bit units),
/// ties resolved in the order SKIP, INTER, INTRA_DC.
fn analyze_block(
    orig: &PaddedFrame,
    preview: &PaddedFrame,
    bx: usize,
    by: usize,
    cfg: &EnhConfig,
    lambda: u64,
    qstep: u64,
) -> BlockRecord {
    let depth = orig.bit_depth;
    let mid = 1i32 << (depth - 1);

    // INTRA_DC: predict the signaled block mean, code the residual.
    let dc = block_means(orig, bx, by);
    let (intra_levels, intra_recon) =
        code_from_prediction(orig, bx, by, &constant_block(&dc), qstep, depth);
    let intra_cost: u64 = 2 * BIT
        + BIT
            * dc.iter()
                .map(|&d| signed_eg_len(d as i32 - mid) as u64)
                .sum::<u64>()
        + level_cost(&intra_levels);
    let intra_j = (block_ssd(orig, bx, by, &intra_recon) << 20) + lambda * intra_cost;
    let mut best = BlockRecord {
        mode: BlockMode::IntraDc,
        mv: MotionVector::ZERO,
        dc,
        levels: intra_levels,
    };
    let mut best_j = intra_j;

    if !cfg.intra_only {
        // INTER: best full-search vector, coded residual.
        let (mv, _) = search_padded(orig, preview, bx, by, cfg, lambda);
        let pred = predict_block(preview, bx, by, mv);
        let (inter_levels, inter_recon) = code_from_prediction(orig, bx, by, &pred, qstep, depth);
        let inter_cost = 2 * BIT + BIT * mv_bits(mv) as u64 + level_cost(&inter_levels);
        let inter_j = (block_ssd(orig, bx, by, &inter_recon) << 20) + lambda * inter_cost;
        if inter_j < best_j {
            best = BlockRecord {
                mode: BlockMode::Inter,
                mv,
                dc: [0; 3],
                levels: inter_levels,
            };
            best_j = inter_j;
        }

        // SKIP: copy the co-located preview block, no residual. Wins ties.
        let skip_recon = predict_block(preview, bx, by, MotionVector::ZERO);
        let skip_j = (block_ssd(orig, bx, by, &skip_recon) << 20) + lambda * BIT;
        if skip_j <= best_j {
            best = BlockRecord::empty();
        }
    }
    best
}

fn check_reference(original: &Yuv444Frame, preview: &Yuv444Frame) -> Result<(), EnhError> {
    original
        .image()
        .same_geometry(preview.image())
        .map_err(EnhError::ReferenceMismatch)
}

/// Encode `original` against the `preview` reference. Returns the bitstream
/// and the reconstruction, which is bit-identical to the decoder's output.
pub fn enh_encode(
    original: &Yuv444Frame,
    preview: &Yuv444Frame,
    cfg: &EnhConfig,
) -> Result<(EnhBitstream, Yuv444Frame), EnhError> {
    cfg.validate()?;
    check_reference(original, preview)?;
    let orig = PaddedFrame::from_frame(original);
    let prev = PaddedFrame::from_frame(preview);
    let lambda = cfg.lambda_x16();
    let qstep = qstep_x16(cfg.qp);
    let blocks_x = orig.padded_w / BLOCK_SIZE;
    let blocks_y = orig.padded_h / BLOCK_SIZE;

    let records: Vec<BlockRecord> = (0..blocks_x * blocks_y)
        .into_par_iter()
        .map(|bi| {
            let bx = (bi % blocks_x) * BLOCK_SIZE;
            let by = (bi / blocks_x) * BLOCK_SIZE;
            analyze_block(&orig, &prev, bx, by, cfg, lambda, qstep)
        })
        .collect();

    let mid = 1i32 << (original.bit_depth() - 1);
    let mut enc = RangeEncoder::new();
    let mut ctx = Contexts::new();
    for record in &records {
        syntax::encode_record(&mut enc, &mut ctx, record, mid);
    }
    let bs = EnhBitstream {
        width: original.width() as u32,
        height: original.height() as u32,
        bit_depth: original.bit_depth(),
        qp: cfg.qp,
        payload: enc.finish(),
    };
    let recon = assemble(&records, &prev, cfg.qp)?;
    Ok((bs, recon))
}

/// Decode a bitstream against the same preview the encoder used. Output is
/// bit-identical to the encoder-side reconstruction.
pub fn enh_decode(bs: &EnhBitstream, preview: &Yuv444Frame) -> Result<Yuv444Frame, EnhError> {
    if preview.width() != bs.width as usize
        || preview.height() != bs.height as usize
        || preview.bit_depth() != bs.bit_depth
    {
        return Err(EnhError::ReferenceMismatch(PixelError::DimensionMismatch(
            preview.width(),
            preview.height(),
            bs.width as usize,
            bs.height as usize,
        )));
    }
    let records = decode_records(bs)?;
    let prev = PaddedFrame::from_frame(preview);
    for record in &records {
        if record.mode == BlockMode::Inter {
            // Vectors must stay within the padded frame; the encoder clamps
            // its window, so anything else is corruption.
            let MotionVector { dx, dy } = record.mv;
            let limit_x = (prev.padded_w - BLOCK_SIZE) as i32;
            let limit_y = (prev.padded_h - BLOCK_SIZE) as i32;
            if dx.abs() > limit_x || dy.abs() > limit_y {
                return Err(EnhError::MvOutOfFrame(dx, dy));
            }
        }
    }
    // Per-block bounds depend on position; validate during assembly.
    let blocks_x = prev.padded_w / BLOCK_SIZE;
    for (bi, record) in records.iter().enumerate() {
        if record.mode == BlockMode::Inter {
            let bx = (bi % blocks_x) * BLOCK_SIZE;
            let by = (bi / blocks_x) * BLOCK_SIZE;
            let rx = bx as i32 + record.mv.dx;
            let ry = by as i32 + record.mv.dy;
            if rx < 0
                || ry < 0
                || rx + BLOCK_SIZE as i32 > prev.padded_w as i32
                || ry + BLOCK_SIZE as i32 > prev.padded_h as i32
            {
                return Err(EnhError::MvOutOfFrame(record.mv.dx, record.mv.dy));
            }
        }
    }
    assemble(&records, &prev, bs.qp)
}

/// Decode only the block syntax; used for mode statistics and tests.
pub fn decode_block_modes(bs: &EnhBitstream) -> Result<Vec<BlockMode>, EnhError> {
    Ok(decode_records(bs)?.iter().map(|r| r.mode).collect())
}

fn decode_records(bs: &EnhBitstream) -> Result<Vec<BlockRecord>, EnhError> {
    let mid = 1i32 << (bs.bit_depth - 1);
    let sample_max = (1i32 << bs.bit_depth) - 1;
    let mut dec = RangeDecoder::new(&bs.payload);
    let mut ctx = Contexts::new();
    let mut records = Vec::with_capacity(bs.block_count());
    for _ in 0..bs.block_count() {
        records.push(syntax::decode_record(&mut dec, &mut ctx, mid, sample_max)?);
    }
    dec.finish()?;
    Ok(records)
}

fn assemble(
    records: &[BlockRecord],
    preview: &PaddedFrame,
    qp: u8,
) -> Result<Yuv444Frame, EnhError> {
    let qstep = qstep_x16(qp);
    let (w, h) = (preview.width, preview.height);
    let blocks_x = preview.padded_w / BLOCK_SIZE;
    let mut planes = [vec![0u16; w * h], vec![0u16; w * h], vec![0u16; w * h]];
    for (bi, record) in records.iter().enumerate() {
        let bx = (bi % blocks_x) * BLOCK_SIZE;
        let by = (bi / blocks_x) * BLOCK_SIZE;
        let block = reconstruct_block(record, preview, bx, by, qstep, preview.bit_depth);
        let rows = BLOCK_SIZE.min(h - by);
        let cols = BLOCK_SIZE.min(w - bx);
        for plane in 0..3 {
            for r in 0..rows {
                let dst = &mut planes[plane][(by + r) * w + bx..(by + r) * w + bx + cols];
                dst.copy_from_slice(&block[plane][r * BLOCK_SIZE..r * BLOCK_SIZE + cols]);
            }
        }
    }
    Ok(Yuv444Frame::new(RasterImage::new(
        w,
        h,
        preview.bit_depth,
        ColorSpace::Yuv444,
        planes,
    )?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixel::psnr;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(qp: u8) -> EnhConfig {
        EnhConfig {
            search_range: 8,
            ..EnhConfig::new(qp).unwrap()
        }
    }

    fn natural(w: usize, h: usize, seed: u64) -> Yuv444Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut planes: [Vec<u16>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (p, out) in planes.iter_mut().enumerate() {
            *out = (0..w * h)
                .map(|i| {
                    let x = (i % w) as f64;
                    let y = (i / w) as f64;
                    let v = 128.0
                        + 60.0 * ((x * 0.11 + p as f64).sin() + (y * 0.07).cos())
                        + rng.gen_range(-12.0..12.0);
                    v.clamp(0.0, 255.0) as u16
                })
                .collect();
        }
        Yuv444Frame::new(RasterImage::new(w, h, 8, ColorSpace::Yuv444, planes).unwrap()).unwrap()
    }

    /// Smooth degradation of the kind a real preview exhibits: detail lost
    /// to a round trip through a lower resolution.
    fn degraded(frame: &Yuv444Frame, factor: usize) -> Yuv444Frame {
        let (w, h) = (frame.width(), frame.height());
        let small = crate::pixel::resample(
            frame.image(),
            (w / factor).max(1),
            (h / factor).max(1),
            crate::pixel::Filter::Bilinear,
        )
        .unwrap();
        let back = crate::pixel::resample(&small, w, h, crate::pixel::Filter::Bilinear).unwrap();
        Yuv444Frame::new(back).unwrap()
    }

    #[test]
    fn perfect_preview_degenerates_to_all_skip() {
        let original = natural(128, 96, 1);
        let (bs, recon) = enh_encode(&original, &original, &cfg(27)).unwrap();
        let modes = decode_block_modes(&bs).unwrap();
        assert!(modes.iter().all(|&m| m == BlockMode::Skip));
        assert_eq!(recon.image(), original.image());
        // Payload stays within 2 bits per block.
        assert!(bs.payload.len() as u64 * 8 <= 2 * bs.block_count() as u64);
        let decoded = enh_decode(&bs, &original).unwrap();
        assert_eq!(decoded.image(), original.image());
    }

    #[test]
    fn decoder_matches_encoder_reconstruction_bit_exactly() {
        let original = natural(80, 48, 2);
        let preview = degraded(&original, 2);
        for qp in [12u8, 27, 42] {
            let (bs, recon) = enh_encode(&original, &preview, &cfg(qp)).unwrap();
            let decoded = enh_decode(&bs, &preview).unwrap();
            assert_eq!(decoded.image(), recon.image(), "qp {qp}");
        }
    }

    #[test]
    fn repeated_encodes_are_byte_identical() {
        let original = natural(64, 64, 4);
        let preview = degraded(&original, 2);
        let (a, _) = enh_encode(&original, &preview, &cfg(27)).unwrap();
        let (b, _) = enh_encode(&original, &preview, &cfg(27)).unwrap();
        assert_eq!(a.serialize(), b.serialize());
    }

    #[test]
    fn mid_gray_preview_never_chooses_skip_at_moderate_qp() {
        let original = natural(96, 64, 6);
        let gray = Yuv444Frame::new(
            RasterImage::constant(96, 64, 8, ColorSpace::Yuv444, [128, 128, 128]).unwrap(),
        )
        .unwrap();
        for qp in [22u8, 27, 30] {
            let (bs, _) = enh_encode(&original, &gray, &cfg(qp)).unwrap();
            let skips = decode_block_modes(&bs)
                .unwrap()
                .iter()
                .filter(|&&m| m == BlockMode::Skip)
                .count();
            assert_eq!(skips, 0, "qp {qp}");
        }
    }

    #[test]
    fn quality_and_rate_are_monotone_in_qp() {
        let original = natural(96, 96, 7);
        let preview = degraded(&original, 2);
        let (bs22, recon22) = enh_encode(&original, &preview, &cfg(22)).unwrap();
        let (bs37, recon37) = enh_encode(&original, &preview, &cfg(37)).unwrap();
        let q22 = psnr(original.image(), recon22.image()).unwrap().psnr_combined;
        let q37 = psnr(original.image(), recon37.image()).unwrap().psnr_combined;
        assert!(q22 > q37, "psnr(qp22)={q22:.2} !> psnr(qp37)={q37:.2}");
        assert!(
            enh_rate_bpp(&bs22) > enh_rate_bpp(&bs37),
            "bpp(qp22) !> bpp(qp37)"
        );
    }

    #[test]
    fn wrong_preview_still_decodes_but_poorly() {
        let original = natural(64, 64, 9);
        let preview = degraded(&original, 2);
        let (bs, recon) = enh_encode(&original, &preview, &cfg(27)).unwrap();
        let wrong = natural(64, 64, 999);
        let decoded = enh_decode(&bs, &wrong).unwrap();
        let good = psnr(original.image(), recon.image()).unwrap().psnr_combined;
        let bad = psnr(original.image(), decoded.image()).unwrap().psnr_combined;
        assert!(bad < good, "wrong preview gave {bad:.2} dB vs {good:.2} dB");
    }

    #[test]
    fn truncated_stream_is_a_corruption_error() {
        let original = natural(48, 48, 11);
        let preview = degraded(&original, 2);
        let (bs, _) = enh_encode(&original, &preview, &cfg(27)).unwrap();
        let mut cut = bs.clone();
        cut.payload.truncate(cut.payload.len() / 3);
        assert!(enh_decode(&cut, &preview).is_err());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let original = natural(48, 48, 13);
        let preview = natural(48, 32, 14);
        assert!(matches!(
            enh_encode(&original, &preview, &cfg(27)),
            Err(EnhError::ReferenceMismatch(_))
        ));
        let (bs, _) = enh_encode(&original, &degraded(&original, 2), &cfg(27)).unwrap();
        assert!(enh_decode(&bs, &preview).is_err());
    }

    #[test]
    fn intra_only_mode_never_references_the_preview() {
        let original = natural(64, 48, 15);
        let preview = degraded(&original, 2);
        let mut c = cfg(27);
        c.intra_only = true;
        let (bs, recon) = enh_encode(&original, &preview, &c).unwrap();
        let modes = decode_block_modes(&bs).unwrap();
        assert!(modes.iter().all(|&m| m == BlockMode::IntraDc));
        // Decoding against any same-geometry preview gives the same output.
        let other = natural(64, 48, 777);
        assert_eq!(
            enh_decode(&bs, &other).unwrap().image(),
            recon.image()
        );
    }

    #[test]
    fn non_multiple_of_block_size_geometry_round_trips() {
        let original = natural(53, 37, 17);
        let preview = degraded(&original, 2);
        let (bs, recon) = enh_encode(&original, &preview, &cfg(32)).unwrap();
        assert_eq!(bs.block_count(), 4 * 3);
        let decoded = enh_decode(&bs, &preview).unwrap();
        assert_eq!(decoded.image(), recon.image());
        assert_eq!((decoded.width(), decoded.height()), (53, 37));
    }

    #[test]
    fn header_round_trips_and_rejects_tampering() {
        let original = natural(32, 32, 19);
        let (bs, _) = enh_encode(&original, &original, &cfg(27)).unwrap();
        let bytes = bs.serialize();
        assert_eq!(EnhBitstream::parse(&bytes).unwrap(), bs);
        let mut bad = bytes.clone();
        bad[0] = b'Z';
        assert!(matches!(EnhBitstream::parse(&bad), Err(EnhError::Magic(_))));
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(EnhBitstream::parse(&bad), Err(EnhError::Version(9))));
        let mut bad = bytes;
        bad.truncate(10);
        assert!(matches!(EnhBitstream::parse(&bad), Err(EnhError::Header)));
    }

    #[test]
    fn ten_bit_frames_round_trip() {
        let base = natural(48, 32, 20);
        let original = base.promote_to_10bit();
        let preview = degraded(&original, 2);
        let (bs, recon) = enh_encode(&original, &preview, &cfg(27)).unwrap();
        let decoded = enh_decode(&bs, &preview).unwrap();
        assert_eq!(decoded.image(), recon.image());
        assert_eq!(decoded.bit_depth(), 10);
    }
}
