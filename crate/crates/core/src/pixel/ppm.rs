//! Binary PPM (P6) reader/writer.
//!
//! Reading accepts the usual liberal header (whitespace runs, `#` comments).
//! Writing always emits the canonical form — `P6\n<w> <h>\n<maxval>\n` with
//! single spaces and a single newline after the max value — so save/load
//! round trips are byte-exact for canonical files. Max value 255 maps to
//! 8-bit samples (1 byte each), 1023 to 10-bit (2 bytes, big-endian, per the
//! netpbm convention).

use std::fs;
use std::path::Path;

use super::{ColorSpace, PixelError, RasterImage};

pub fn load_ppm(path: &Path) -> Result<RasterImage, PixelError> {
    let data = fs::read(path).map_err(|e| PixelError::io(path, e))?;
    parse_ppm(&data)
}

pub fn save_ppm(image: &RasterImage, path: &Path) -> Result<(), PixelError> {
    let bytes = encode_ppm(image)?;
    fs::write(path, bytes).map_err(|e| PixelError::io(path, e))
}

pub(crate) fn parse_ppm(data: &[u8]) -> Result<RasterImage, PixelError> {
    let mut pos = 0usize;
    if data.len() < 2 || &data[0..2] != b"P6" {
        return Err(PixelError::PpmHeader("missing P6 magic".into()));
    }
    pos += 2;
    let width = read_header_int(data, &mut pos)?;
    let height = read_header_int(data, &mut pos)?;
    let maxval = read_header_int(data, &mut pos)?;
    // Exactly one whitespace byte separates the max value from the payload.
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(PixelError::PpmHeader("missing whitespace after max value".into())),
    }
    if width == 0 || height == 0 {
        return Err(PixelError::PpmHeader("zero dimension".into()));
    }
    let bit_depth = match maxval {
        255 => 8,
        1023 => 10,
        other => return Err(PixelError::PpmMaxValue(other)),
    };
    let n = width as usize * height as usize;
    let bytes_per_sample = if bit_depth == 8 { 1 } else { 2 };
    let expected = n * 3 * bytes_per_sample;
    let payload = &data[pos..];
    if payload.len() < expected {
        return Err(PixelError::PpmTruncated {
            expected,
            got: payload.len(),
        });
    }
    let mut planes = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    if bit_depth == 8 {
        for px in payload[..expected].chunks_exact(3) {
            planes[0].push(px[0] as u16);
            planes[1].push(px[1] as u16);
            planes[2].push(px[2] as u16);
        }
    } else {
        for px in payload[..expected].chunks_exact(6) {
            planes[0].push(u16::from_be_bytes([px[0], px[1]]));
            planes[1].push(u16::from_be_bytes([px[2], px[3]]));
            planes[2].push(u16::from_be_bytes([px[4], px[5]]));
        }
    }
    RasterImage::new(
        width as usize,
        height as usize,
        bit_depth,
        ColorSpace::Rgb,
        planes,
    )
}

pub(crate) fn encode_ppm(image: &RasterImage) -> Result<Vec<u8>, PixelError> {
    if image.color_space() != ColorSpace::Rgb {
        return Err(PixelError::ColorSpace {
            expected: ColorSpace::Rgb,
            got: image.color_space(),
        });
    }
    let maxval = image.max_value();
    let mut out = format!("P6\n{} {}\n{}\n", image.width(), image.height(), maxval).into_bytes();
    let n = image.width() * image.height();
    let (r, g, b) = (image.plane(0), image.plane(1), image.plane(2));
    if image.bit_depth() == 8 {
        out.reserve(n * 3);
        for i in 0..n {
            out.push(r[i] as u8);
            out.push(g[i] as u8);
            out.push(b[i] as u8);
        }
    } else {
        out.reserve(n * 6);
        for i in 0..n {
            out.extend_from_slice(&r[i].to_be_bytes());
            out.extend_from_slice(&g[i].to_be_bytes());
            out.extend_from_slice(&b[i].to_be_bytes());
        }
    }
    Ok(out)
}

/// Skip whitespace and `#` comments, then parse an unsigned decimal field.
fn read_header_int(data: &[u8], pos: &mut usize) -> Result<u32, PixelError> {
    loop {
        match data.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = data.get(*pos) {
                    *pos += 1;
                    if b == b'\n' {
                        break;
                    }
                }
            }
            Some(b) if b.is_ascii_digit() => break,
            Some(&b) => {
                return Err(PixelError::PpmHeader(format!(
                    "unexpected byte 0x{b:02x} in header"
                )))
            }
            None => return Err(PixelError::PpmHeader("truncated header".into())),
        }
    }
    let mut value: u64 = 0;
    let start = *pos;
    while let Some(&b) = data.get(*pos) {
        if !b.is_ascii_digit() {
            break;
        }
        value = value * 10 + (b - b'0') as u64;
        if value > u32::MAX as u64 {
            return Err(PixelError::PpmHeader("header field overflows u32".into()));
        }
        *pos += 1;
    }
    if *pos == start {
        return Err(PixelError::PpmHeader("expected integer field".into()));
    }
    Ok(value as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_black_2x2_parses() {
        let mut file = b"P6\n2 2\n255\n".to_vec();
        file.extend_from_slice(&[0u8; 12]);
        let img = parse_ppm(&file).unwrap();
        assert_eq!((img.width(), img.height(), img.bit_depth()), (2, 2, 8));
        assert!(img.planes().iter().all(|p| p.iter().all(|&v| v == 0)));
    }

    #[test]
    fn truncated_payload_errors() {
        let mut file = b"P6\n4 4\n255\n".to_vec();
        file.extend_from_slice(&[0u8; 6]); // 2 pixels instead of 16
        let err = parse_ppm(&file).unwrap_err();
        assert!(matches!(
            err,
            PixelError::PpmTruncated {
                expected: 48,
                got: 6
            }
        ));
    }

    #[test]
    fn unsupported_maxval_errors() {
        let mut file = b"P6\n1 1\n65535\n".to_vec();
        file.extend_from_slice(&[0u8; 6]);
        assert!(matches!(
            parse_ppm(&file),
            Err(PixelError::PpmMaxValue(65535))
        ));
    }

    #[test]
    fn one_by_one_white_canonical_bytes() {
        let img = RasterImage::constant(1, 1, 8, ColorSpace::Rgb, [255, 255, 255]).unwrap();
        let bytes = encode_ppm(&img).unwrap();
        let mut expected = b"P6\n1 1\n255\n".to_vec();
        expected.extend_from_slice(&[0xFF, 0xFF, 0xFF]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn yuv_input_is_rejected() {
        let img = RasterImage::constant(1, 1, 8, ColorSpace::Yuv444, [0, 0, 0]).unwrap();
        assert!(matches!(encode_ppm(&img), Err(PixelError::ColorSpace { .. })));
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let img = RasterImage::new(
            3,
            2,
            8,
            ColorSpace::Rgb,
            [
                vec![0, 1, 2, 3, 4, 5],
                vec![10, 11, 12, 13, 14, 15],
                vec![250, 251, 252, 253, 254, 255],
            ],
        )
        .unwrap();
        let bytes = encode_ppm(&img).unwrap();
        assert_eq!(parse_ppm(&bytes).unwrap(), img);
    }

    #[test]
    fn ten_bit_round_trip_is_exact() {
        let img = RasterImage::new(
            2,
            1,
            10,
            ColorSpace::Rgb,
            [vec![0, 1023], vec![512, 1], vec![7, 700]],
        )
        .unwrap();
        let bytes = encode_ppm(&img).unwrap();
        assert_eq!(parse_ppm(&bytes).unwrap(), img);
    }

    #[test]
    fn canonical_files_round_trip_byte_identically() {
        // load -> save must reproduce canonical-header files byte for byte.
        let mut file = b"P6\n3 1\n255\n".to_vec();
        file.extend_from_slice(&[1, 2, 3, 4, 5, 6, 7, 8, 9]);
        let img = parse_ppm(&file).unwrap();
        assert_eq!(encode_ppm(&img).unwrap(), file);
    }

    #[test]
    fn comments_and_extra_whitespace_are_accepted_on_read() {
        let mut file = b"P6 # comment\n# another\n  2\t1\n255\n".to_vec();
        file.extend_from_slice(&[9u8; 6]);
        let img = parse_ppm(&file).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
    }
}
