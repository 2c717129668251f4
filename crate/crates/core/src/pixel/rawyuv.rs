//! Headerless planar raw YUV444 files, frame-sequential: all of Y, then Cb,
//! then Cr per frame. 8-bit samples take one byte; 10-bit samples are stored
//! little-endian in 16-bit containers, matching the convention the external
//! encoder consumes.

use std::fs;
use std::path::Path;

use super::{ColorSpace, PixelError, RasterImage, Yuv444Frame};

/// Bytes occupied by one frame of the given geometry.
pub fn yuv444_frame_bytes(width: usize, height: usize, bit_depth: u8) -> u64 {
    let bps = if bit_depth == 8 { 1 } else { 2 };
    3 * width as u64 * height as u64 * bps
}

/// Serialize one frame to its raw byte layout.
pub fn yuv444_to_bytes(frame: &Yuv444Frame) -> Vec<u8> {
    let image = frame.image();
    let n = image.width() * image.height();
    if image.bit_depth() == 8 {
        let mut out = Vec::with_capacity(3 * n);
        for p in 0..3 {
            out.extend(image.plane(p).iter().map(|&v| v as u8));
        }
        out
    } else {
        let mut out = Vec::with_capacity(6 * n);
        for p in 0..3 {
            for &v in image.plane(p) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }
}

/// Deserialize one frame from exactly `yuv444_frame_bytes` bytes.
pub fn yuv444_from_bytes(
    data: &[u8],
    width: usize,
    height: usize,
    bit_depth: u8,
) -> Result<Yuv444Frame, PixelError> {
    let expected = yuv444_frame_bytes(width, height, bit_depth);
    if data.len() as u64 != expected {
        return Err(PixelError::RawLength {
            len: data.len() as u64,
            frame_bytes: expected,
        });
    }
    let n = width * height;
    let mut planes = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    if bit_depth == 8 {
        for p in 0..3 {
            planes[p].extend(data[p * n..(p + 1) * n].iter().map(|&b| b as u16));
        }
    } else {
        for p in 0..3 {
            let start = p * n * 2;
            for pair in data[start..start + n * 2].chunks_exact(2) {
                planes[p].push(u16::from_le_bytes([pair[0], pair[1]]));
            }
        }
    }
    Yuv444Frame::new(RasterImage::new(
        width,
        height,
        bit_depth,
        ColorSpace::Yuv444,
        planes,
    )?)
}

/// Read frame `frame_index` of a (possibly multi-frame) raw file. The file
/// length must be an exact multiple of the frame size.
pub fn read_yuv444_raw(
    path: &Path,
    width: usize,
    height: usize,
    bit_depth: u8,
    frame_index: usize,
) -> Result<Yuv444Frame, PixelError> {
    if bit_depth != 8 && bit_depth != 10 {
        return Err(PixelError::BitDepth(bit_depth));
    }
    let data = fs::read(path).map_err(|e| PixelError::io(path, e))?;
    let frame_bytes = yuv444_frame_bytes(width, height, bit_depth);
    if frame_bytes == 0 || data.len() as u64 % frame_bytes != 0 {
        return Err(PixelError::RawLength {
            len: data.len() as u64,
            frame_bytes,
        });
    }
    let available = (data.len() as u64 / frame_bytes) as usize;
    if frame_index >= available {
        return Err(PixelError::FrameIndex {
            index: frame_index,
            available,
        });
    }
    let start = frame_index * frame_bytes as usize;
    yuv444_from_bytes(
        &data[start..start + frame_bytes as usize],
        width,
        height,
        bit_depth,
    )
}

/// Write a single frame, replacing any existing file.
pub fn write_yuv444_raw(frame: &Yuv444Frame, path: &Path) -> Result<(), PixelError> {
    fs::write(path, yuv444_to_bytes(frame)).map_err(|e| PixelError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(width: usize, height: usize, depth: u8, seed: u16) -> Yuv444Frame {
        let n = width * height;
        let max = (1u16 << depth) - 1;
        let planes = [
            (0..n).map(|i| (i as u16 * 7 + seed) % (max + 1)).collect(),
            (0..n).map(|i| (i as u16 * 13 + seed) % (max + 1)).collect(),
            (0..n).map(|i| (i as u16 * 31 + seed) % (max + 1)).collect(),
        ];
        Yuv444Frame::new(
            RasterImage::new(width, height, depth, ColorSpace::Yuv444, planes).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn two_by_two_ten_bit_frame_is_24_bytes() {
        assert_eq!(yuv444_frame_bytes(2, 2, 10), 24);
        assert_eq!(yuv444_to_bytes(&frame(2, 2, 10, 0)).len(), 24);
    }

    #[test]
    fn twenty_three_bytes_is_a_length_error() {
        let err = yuv444_from_bytes(&[0u8; 23], 2, 2, 10).unwrap_err();
        assert!(matches!(
            err,
            PixelError::RawLength {
                len: 23,
                frame_bytes: 24
            }
        ));
    }

    #[test]
    fn write_then_read_is_bit_exact_for_both_depths() {
        let dir = tempfile::tempdir().unwrap();
        for depth in [8u8, 10] {
            let f = frame(5, 3, depth, 11);
            let path = dir.path().join(format!("f{depth}.yuv"));
            write_yuv444_raw(&f, &path).unwrap();
            let back = read_yuv444_raw(&path, 5, 3, depth, 0).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn multi_frame_files_index_by_frame() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("two.yuv");
        let f0 = frame(4, 2, 10, 1);
        let f1 = frame(4, 2, 10, 2);
        let mut bytes = yuv444_to_bytes(&f0);
        bytes.extend(yuv444_to_bytes(&f1));
        std::fs::write(&path, bytes).unwrap();
        assert_eq!(read_yuv444_raw(&path, 4, 2, 10, 0).unwrap(), f0);
        assert_eq!(read_yuv444_raw(&path, 4, 2, 10, 1).unwrap(), f1);
        let err = read_yuv444_raw(&path, 4, 2, 10, 2).unwrap_err();
        assert!(matches!(
            err,
            PixelError::FrameIndex {
                index: 2,
                available: 2
            }
        ));
    }
}
