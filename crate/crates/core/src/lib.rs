//! Scalable human/machine image coding toolkit.
//!
//! A two-layer image codec plus the analysis tooling needed to benchmark it:
//!
//! * [`pixel`] — planar raster images, BT.709 color conversion, resampling,
//!   PSNR, and PPM / raw-YUV444 file I/O.
//! * [`range`] — the adaptive binary range coder shared by both codec layers.
//! * [`base`] — a deterministic surrogate base-layer codec (downsample +
//!   requantize + predictive entropy coding) and preview synthesis. Any codec
//!   that exposes a decoded latent can stand in via [`base::BaseCodec`].
//! * [`enh`] — the enhancement-layer coder: block-based inter-prediction from
//!   the preview reference with an all-integer transform/quantization
//!   pipeline, so bitstreams and reconstructions are bit-exact across runs
//!   and platforms.
//! * [`vtm`] — drives the external VVC reference encoder (VTM 12.3) over a
//!   two-frame preview+original sequence and extracts second-frame rate and
//!   quality from its log.
//! * [`analysis`] — Bjøntegaard-delta metrics over PSNR or mAP curves,
//!   relative rate of scalable codecs, and break-even frequency with an
//!   independent numeric oracle.
//!
//! Bitstream formats, syntax elements, and CSV schemas are documented in
//! `docs/FORMATS.md` at the repository root.

pub mod analysis;
pub mod base;
pub mod enh;
pub mod pixel;
pub mod range;
pub mod vtm;

pub use pixel::{ColorSpace, Filter, QualityReport, RasterImage, Yuv444Frame};
