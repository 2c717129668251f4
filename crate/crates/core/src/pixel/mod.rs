//! Planar pixel buffers and the image plumbing shared by every other module:
//! color conversion, resampling, quality metrics, and PPM / raw-YUV444 I/O.
//!
//! All types are immutable after construction; every operation is a pure
//! function of its inputs (plus file I/O on distinct paths), so unrestricted
//! concurrent use is safe.

mod color;
mod metrics;
mod ppm;
mod rawyuv;
mod resample;

pub use color::{rgb_to_yuv444, yuv444_to_rgb};
pub use metrics::{psnr, PSNR_SENTINEL_DB};
pub use ppm::{load_ppm, save_ppm};
pub use rawyuv::{
    read_yuv444_raw, write_yuv444_raw, yuv444_frame_bytes, yuv444_from_bytes, yuv444_to_bytes,
};
pub use resample::resample;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColorSpace {
    Rgb,
    Yuv444,
}

/// Separable resampling kernel. Both preserve constant images bit-exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Filter {
    Bilinear,
    Bicubic,
}

impl Filter {
    pub fn name(self) -> &'static str {
        match self {
            Filter::Bilinear => "bilinear",
            Filter::Bicubic => "bicubic",
        }
    }
}

impl std::str::FromStr for Filter {
    type Err = PixelError;
    fn from_str(s: &str) -> Result<Self, PixelError> {
        match s {
            "bilinear" => Ok(Filter::Bilinear),
            "bicubic" => Ok(Filter::Bicubic),
            other => Err(PixelError::UnknownFilter(other.to_string())),
        }
    }
}

#[derive(Debug, Error)]
pub enum PixelError {
    #[error("plane {plane} has {got} samples, expected {expected} for {width}x{height}")]
    PlaneSize {
        plane: usize,
        got: usize,
        expected: usize,
        width: usize,
        height: usize,
    },
    #[error("sample {value} in plane {plane} exceeds {bit_depth}-bit range")]
    SampleRange {
        plane: usize,
        value: u16,
        bit_depth: u8,
    },
    #[error("unsupported bit depth {0}, expected 8 or 10")]
    BitDepth(u8),
    #[error("image has zero width or height")]
    EmptyImage,
    #[error("expected {expected:?} input, got {got:?}")]
    ColorSpace {
        expected: ColorSpace,
        got: ColorSpace,
    },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("bit depth mismatch: {0} vs {1}")]
    DepthMismatch(u8, u8),
    #[error("target dimensions must be positive")]
    ZeroTarget,
    #[error("unknown filter {0:?}, expected \"bilinear\" or \"bicubic\"")]
    UnknownFilter(String),
    #[error("malformed PPM header: {0}")]
    PpmHeader(String),
    #[error("PPM payload truncated: expected {expected} bytes, got {got}")]
    PpmTruncated { expected: usize, got: usize },
    #[error("unsupported PPM max value {0}, expected 255 or 1023")]
    PpmMaxValue(u32),
    #[error("raw YUV444 file of {len} bytes is not a multiple of the {frame_bytes}-byte frame size")]
    RawLength { len: u64, frame_bytes: u64 },
    #[error("frame {index} out of range, file holds {available} frame(s)")]
    FrameIndex { index: usize, available: usize },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

impl PixelError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        PixelError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// A planar three-plane image (4:4:4 only). Samples are stored row-major,
/// one `u16` per sample, every value strictly below `2^bit_depth`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    bit_depth: u8,
    color_space: ColorSpace,
    planes: [Vec<u16>; 3],
}

impl RasterImage {
    pub fn new(
        width: usize,
        height: usize,
        bit_depth: u8,
        color_space: ColorSpace,
        planes: [Vec<u16>; 3],
    ) -> Result<Self, PixelError> {
        if width == 0 || height == 0 {
            return Err(PixelError::EmptyImage);
        }
        if bit_depth != 8 && bit_depth != 10 {
            return Err(PixelError::BitDepth(bit_depth));
        }
        let expected = width * height;
        let max = (1u16 << bit_depth) - 1;
        for (i, plane) in planes.iter().enumerate() {
            if plane.len() != expected {
                return Err(PixelError::PlaneSize {
                    plane: i,
                    got: plane.len(),
                    expected,
                    width,
                    height,
                });
            }
            if let Some(&value) = plane.iter().find(|&&v| v > max) {
                return Err(PixelError::SampleRange {
                    plane: i,
                    value,
                    bit_depth,
                });
            }
        }
        Ok(RasterImage {
            width,
            height,
            bit_depth,
            color_space,
            planes,
        })
    }

    /// Image with every sample of plane `i` set to `values[i]`.
    pub fn constant(
        width: usize,
        height: usize,
        bit_depth: u8,
        color_space: ColorSpace,
        values: [u16; 3],
    ) -> Result<Self, PixelError> {
        let planes = [
            vec![values[0]; width * height],
            vec![values[1]; width * height],
            vec![values[2]; width * height],
        ];
        RasterImage::new(width, height, bit_depth, color_space, planes)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn color_space(&self) -> ColorSpace {
        self.color_space
    }

    /// Largest representable sample value, `2^bit_depth - 1`.
    pub fn max_value(&self) -> u16 {
        (1u16 << self.bit_depth) - 1
    }

    pub fn plane(&self, i: usize) -> &[u16] {
        &self.planes[i]
    }

    pub fn planes(&self) -> &[Vec<u16>; 3] {
        &self.planes
    }

    pub fn sample(&self, plane: usize, x: usize, y: usize) -> u16 {
        self.planes[plane][y * self.width + x]
    }

    pub(crate) fn same_geometry(&self, other: &RasterImage) -> Result<(), PixelError> {
        if self.width != other.width || self.height != other.height {
            return Err(PixelError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        if self.bit_depth != other.bit_depth {
            return Err(PixelError::DepthMismatch(self.bit_depth, other.bit_depth));
        }
        Ok(())
    }
}

/// A [`RasterImage`] whose color space is statically known to be YUV444.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Yuv444Frame(RasterImage);

impl Yuv444Frame {
    pub fn new(image: RasterImage) -> Result<Self, PixelError> {
        if image.color_space() != ColorSpace::Yuv444 {
            return Err(PixelError::ColorSpace {
                expected: ColorSpace::Yuv444,
                got: image.color_space(),
            });
        }
        Ok(Yuv444Frame(image))
    }

    pub fn image(&self) -> &RasterImage {
        &self.0
    }

    pub fn into_image(self) -> RasterImage {
        self.0
    }

    /// Widen 8-bit samples to 10-bit by a left shift of 2; 10-bit frames are
    /// returned unchanged. This is the convention the external encoder
    /// consumes.
    pub fn promote_to_10bit(&self) -> Yuv444Frame {
        if self.bit_depth() == 10 {
            return self.clone();
        }
        let planes = [
            self.0.planes[0].iter().map(|&v| v << 2).collect(),
            self.0.planes[1].iter().map(|&v| v << 2).collect(),
            self.0.planes[2].iter().map(|&v| v << 2).collect(),
        ];
        Yuv444Frame(
            RasterImage::new(self.width(), self.height(), 10, ColorSpace::Yuv444, planes)
                .expect("promoted planes stay in range"),
        )
    }
}

impl std::ops::Deref for Yuv444Frame {
    type Target = RasterImage;
    fn deref(&self) -> &RasterImage {
        &self.0
    }
}

/// MSE and PSNR per plane plus a combined PSNR computed from the mean MSE
/// over all three planes. A zero MSE maps to [`PSNR_SENTINEL_DB`] so reports
/// stay serializable and comparable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mse_per_plane: [f64; 3],
    pub psnr_per_plane: [f64; 3],
    pub psnr_combined: f64,
}

/// Round half away from zero. The single rounding rule used throughout the
/// pixel pipeline.
pub(crate) fn round_half_away(x: f64) -> i64 {
    if x >= 0.0 {
        (x + 0.5).floor() as i64
    } else {
        (x - 0.5).ceil() as i64
    }
}

pub(crate) fn clamp_to_depth(v: i64, bit_depth: u8) -> u16 {
    let max = (1i64 << bit_depth) - 1;
    v.clamp(0, max) as u16
}
