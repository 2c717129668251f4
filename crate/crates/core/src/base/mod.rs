//! Deterministic surrogate base-layer codec and preview synthesis.
//!
//! The base layer's contract is [`BaseCodec`]: anything that can encode an
//! image, hand back a decoded latent, and synthesize a preview at the
//! original dimensions can serve as the machine-side codec. The bundled
//! [`SurrogateCodec`] is the simplest codec with a genuine rate-quality
//! trade-off: convert to YUV444, downsample every plane by `s`, requantize
//! samples to `b` bits, and entropy-code the quantized levels with
//! left-neighbor prediction feeding the adaptive binary range coder. It
//! carries no machine-task semantics; task-accuracy curves are ingested as
//! data by the analysis module, never computed here.
//!
//! Every stage is integer-exact and deterministic, so identical input and
//! config produce byte-identical bitstreams across runs and platforms, and
//! the entropy stage is lossless: the decoded latent equals the encoder's
//! latent bit for bit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pixel::{
    resample, rgb_to_yuv444, ColorSpace, Filter, PixelError, RasterImage, Yuv444Frame,
};
use crate::range::{
    decode_signed_eg, encode_signed_eg, BinProb, RangeDecoder, RangeEncoder, RangeError,
};

pub const BASE_MAGIC: [u8; 4] = *b"SMB1";
pub const BASE_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum BaseError {
    #[error("scale factor {0} not in {{1, 2, 4, 8}}")]
    ScaleFactor(u8),
    #[error("quant bits {0} outside [2, 8]")]
    QuantBits(u8),
    #[error("bad magic {0:?}, expected \"SMB1\"")]
    Magic([u8; 4]),
    #[error("unsupported bitstream version {0}")]
    Version(u8),
    #[error("bitstream header truncated or inconsistent")]
    Header,
    #[error("payload corrupt: {0}")]
    Payload(#[from] RangeError),
    #[error(transparent)]
    Pixel(#[from] PixelError),
}

/// Quality knob of the surrogate codec: spatial scale factor, requantization
/// depth, and the filter used to upsample the preview.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub scale_factor: u8,
    pub quant_bits: u8,
    pub preview_filter: Filter,
}

impl SurrogateConfig {
    pub fn new(scale_factor: u8, quant_bits: u8, preview_filter: Filter) -> Result<Self, BaseError> {
        if ![1, 2, 4, 8].contains(&scale_factor) {
            return Err(BaseError::ScaleFactor(scale_factor));
        }
        if !(2..=8).contains(&quant_bits) {
            return Err(BaseError::QuantBits(quant_bits));
        }
        Ok(SurrogateConfig {
            scale_factor,
            quant_bits,
            preview_filter,
        })
    }

    /// Compact human-readable tag, e.g. `s2b6_bilinear`.
    pub fn tag(&self) -> String {
        format!(
            "s{}b{}_{}",
            self.scale_factor,
            self.quant_bits,
            self.preview_filter.name()
        )
    }
}

/// Decoded base representation: quantized YUV444 latent planes at
/// `ceil(w/s) x ceil(h/s)`, plus everything needed to synthesize a preview
/// at the original geometry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseLatent {
    pub latent_planes: [Vec<u8>; 3],
    pub latent_width: usize,
    pub latent_height: usize,
    pub scale_factor: u8,
    pub quant_bits: u8,
    pub original_dims: (usize, usize),
    pub original_bit_depth: u8,
    pub preview_filter: Filter,
}

/// Container for the entropy-coded base layer. Header layout (little-endian)
/// is documented in `docs/FORMATS.md`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseBitstream {
    pub scale_factor: u8,
    pub quant_bits: u8,
    pub width: u32,
    pub height: u32,
    pub bit_depth: u8,
    pub preview_filter: Filter,
    pub payload: Vec<u8>,
}

pub const BASE_HEADER_BYTES: usize = 20;

impl BaseBitstream {
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(BASE_HEADER_BYTES + self.payload.len());
        out.extend_from_slice(&BASE_MAGIC);
        out.push(BASE_VERSION);
        out.push(self.scale_factor);
        out.push(self.quant_bits);
        out.push(self.bit_depth);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.push(match self.preview_filter {
            Filter::Bilinear => 0,
            Filter::Bicubic => 1,
        });
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn parse(data: &[u8]) -> Result<Self, BaseError> {
        if data.len() < BASE_HEADER_BYTES {
            return Err(BaseError::Header);
        }
        let magic: [u8; 4] = data[0..4].try_into().unwrap();
        if magic != BASE_MAGIC {
            return Err(BaseError::Magic(magic));
        }
        if data[4] != BASE_VERSION {
            return Err(BaseError::Version(data[4]));
        }
        let scale_factor = data[5];
        let quant_bits = data[6];
        let bit_depth = data[7];
        let width = u32::from_le_bytes(data[8..12].try_into().unwrap());
        let height = u32::from_le_bytes(data[12..16].try_into().unwrap());
        let preview_filter = match data[16] {
            0 => Filter::Bilinear,
            1 => Filter::Bicubic,
            _ => return Err(BaseError::Header),
        };
        let payload_len = u32::from_le_bytes(data[17..21].try_into().unwrap()) as usize;
        if data.len() != BASE_HEADER_BYTES + 1 + payload_len {
            return Err(BaseError::Header);
        }
        SurrogateConfig::new(scale_factor, quant_bits, preview_filter)?;
        if width == 0 || height == 0 || (bit_depth != 8 && bit_depth != 10) {
            return Err(BaseError::Header);
        }
        Ok(BaseBitstream {
            scale_factor,
            quant_bits,
            width,
            height,
            bit_depth,
            preview_filter,
            payload: data[BASE_HEADER_BYTES + 1..].to_vec(),
        })
    }

    /// Entropy payload size in bits.
    pub fn payload_bits(&self) -> u64 {
        8 * self.payload.len() as u64
    }

    /// Total container size in bits, header included.
    pub fn total_bits(&self) -> u64 {
        8 * self.serialize().len() as u64
    }
}

/// Base-layer rate in bits per pixel of the original image. Header bits are
/// counted by default; pass `include_header = false` for payload-only rates.
pub fn base_rate_bpp(bs: &BaseBitstream, include_header: bool) -> f64 {
    let bits = if include_header {
        bs.total_bits()
    } else {
        bs.payload_bits()
    };
    bits as f64 / (bs.width as f64 * bs.height as f64)
}

/// Pluggable base-layer contract: any codec whose decoded latent can be
/// turned into a preview at the original image geometry.
pub trait BaseCodec {
    type Quality;
    type Bitstream;
    type Latent;

    fn encode(&self, image: &RasterImage, quality: &Self::Quality)
        -> Result<Self::Bitstream, BaseError>;
    fn decode(&self, bs: &Self::Bitstream) -> Result<Self::Latent, BaseError>;
    fn synthesize_preview(&self, latent: &Self::Latent) -> Result<RasterImage, BaseError>;
}

/// The deterministic stand-in for a learned machine codec.
#[derive(Debug, Clone, Copy, Default)]
pub struct SurrogateCodec;

impl BaseCodec for SurrogateCodec {
    type Quality = SurrogateConfig;
    type Bitstream = BaseBitstream;
    type Latent = BaseLatent;

    fn encode(
        &self,
        image: &RasterImage,
        quality: &SurrogateConfig,
    ) -> Result<BaseBitstream, BaseError> {
        base_encode(image, quality)
    }

    fn decode(&self, bs: &BaseBitstream) -> Result<BaseLatent, BaseError> {
        base_decode(bs)
    }

    fn synthesize_preview(&self, latent: &BaseLatent) -> Result<RasterImage, BaseError> {
        Ok(synthesize_preview(latent)?.into_image())
    }
}

fn latent_dims(w: usize, h: usize, s: u8) -> (usize, usize) {
    let s = s as usize;
    (w.div_ceil(s), h.div_ceil(s))
}

/// Prediction contexts: one exp-Golomb context set for luma, one shared by
/// both chroma planes.
fn residual_contexts() -> [[BinProb; 3]; 2] {
    [[BinProb::new(); 3]; 2]
}

fn plane_class(plane: usize) -> usize {
    usize::from(plane > 0)
}

/// Encode an RGB or YUV444 image. RGB inputs are converted to YUV444 first;
/// the latent always holds YUV444 planes, so YUV444 inputs at `s = 1`,
/// `b = bit_depth` round-trip exactly through the preview.
pub fn base_encode(image: &RasterImage, cfg: &SurrogateConfig) -> Result<BaseBitstream, BaseError> {
    // Re-validate: configs are plain data and may not have come from `new`.
    let cfg = SurrogateConfig::new(cfg.scale_factor, cfg.quant_bits, cfg.preview_filter)?;
    let yuv: Yuv444Frame = match image.color_space() {
        ColorSpace::Rgb => rgb_to_yuv444(image)?,
        ColorSpace::Yuv444 => Yuv444Frame::new(image.clone())?,
    };
    let (lw, lh) = latent_dims(image.width(), image.height(), cfg.scale_factor);
    // Box-average downsample over s x s cells, then mid-rise requantization
    // to b bits. Both stages are integer-exact.
    let shift = image.bit_depth() - cfg.quant_bits;
    let s = cfg.scale_factor as usize;
    let mut latent_planes: [Vec<u8>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (p, out) in latent_planes.iter_mut().enumerate() {
        let plane = yuv.plane(p);
        let mut levels = Vec::with_capacity(lw * lh);
        for by in 0..lh {
            for bx in 0..lw {
                let x0 = bx * s;
                let y0 = by * s;
                let x1 = (x0 + s).min(image.width());
                let y1 = (y0 + s).min(image.height());
                let mut sum: u64 = 0;
                for y in y0..y1 {
                    for x in x0..x1 {
                        sum += plane[y * image.width() + x] as u64;
                    }
                }
                let count = ((x1 - x0) * (y1 - y0)) as u64;
                let mean = ((2 * sum + count) / (2 * count)) as u16;
                levels.push((mean >> shift) as u8);
            }
        }
        *out = levels;
    }

    // Left-neighbor prediction (above for the first column, mid-level for the
    // first sample), residuals as signed exp-Golomb.
    let mut enc = RangeEncoder::new();
    let mut ctxs = residual_contexts();
    let mid = 1i32 << (cfg.quant_bits - 1);
    for (p, levels) in latent_planes.iter().enumerate() {
        let class = plane_class(p);
        for y in 0..lh {
            for x in 0..lw {
                let level = levels[y * lw + x] as i32;
                let pred = if x > 0 {
                    levels[y * lw + x - 1] as i32
                } else if y > 0 {
                    levels[(y - 1) * lw] as i32
                } else {
                    mid
                };
                encode_signed_eg(&mut enc, &mut ctxs[class], level - pred);
            }
        }
    }
    Ok(BaseBitstream {
        scale_factor: cfg.scale_factor,
        quant_bits: cfg.quant_bits,
        width: image.width() as u32,
        height: image.height() as u32,
        bit_depth: image.bit_depth(),
        preview_filter: cfg.preview_filter,
        payload: enc.finish(),
    })
}

/// Losslessly recover the encoder-side latent from a bitstream.
pub fn base_decode(bs: &BaseBitstream) -> Result<BaseLatent, BaseError> {
    let (lw, lh) = latent_dims(bs.width as usize, bs.height as usize, bs.scale_factor);
    let mut dec = RangeDecoder::new(&bs.payload);
    let mut ctxs = residual_contexts();
    let mid = 1i32 << (bs.quant_bits - 1);
    let level_max = (1i32 << bs.quant_bits) - 1;
    let mut latent_planes: [Vec<u8>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (p, out) in latent_planes.iter_mut().enumerate() {
        let class = plane_class(p);
        let mut levels: Vec<u8> = Vec::with_capacity(lw * lh);
        for y in 0..lh {
            for x in 0..lw {
                let pred = if x > 0 {
                    levels[y * lw + x - 1] as i32
                } else if y > 0 {
                    levels[(y - 1) * lw] as i32
                } else {
                    mid
                };
                let level = pred + decode_signed_eg(&mut dec, &mut ctxs[class])?;
                if !(0..=level_max).contains(&level) {
                    return Err(BaseError::Payload(RangeError::Desync));
                }
                levels.push(level as u8);
            }
        }
        *out = levels;
    }
    dec.finish()?;
    Ok(BaseLatent {
        latent_planes,
        latent_width: lw,
        latent_height: lh,
        scale_factor: bs.scale_factor,
        quant_bits: bs.quant_bits,
        original_dims: (bs.width as usize, bs.height as usize),
        original_bit_depth: bs.bit_depth,
        preview_filter: bs.preview_filter,
    })
}

/// Dequantize levels to interval midpoints and resample to the original
/// geometry. The preview is the enhancement layer's inter-prediction
/// reference; its dimensions always equal the original image's.
pub fn synthesize_preview(latent: &BaseLatent) -> Result<Yuv444Frame, BaseError> {
    let depth = latent.original_bit_depth;
    let shift = depth - latent.quant_bits;
    let step = 1u16 << shift;
    let planes: [Vec<u16>; 3] = [
        dequantize(&latent.latent_planes[0], step),
        dequantize(&latent.latent_planes[1], step),
        dequantize(&latent.latent_planes[2], step),
    ];
    let small = RasterImage::new(
        latent.latent_width,
        latent.latent_height,
        depth,
        ColorSpace::Yuv444,
        planes,
    )?;
    let (w, h) = latent.original_dims;
    let full = resample(&small, w, h, latent.preview_filter)?;
    Ok(Yuv444Frame::new(full)?)
}

fn dequantize(levels: &[u8], step: u16) -> Vec<u16> {
    // Midpoint reconstruction; for step = 1 this is the identity.
    levels
        .iter()
        .map(|&l| l as u16 * step + step / 2)
        .collect()
}
