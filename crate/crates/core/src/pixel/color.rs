//! BT.709 full-range RGB <-> YUV444 conversion.
//!
//! Y  = 0.2126 R + 0.7152 G + 0.0722 B
//! Cb = (B - Y) / 1.8556 + mid
//! Cr = (R - Y) / 1.5748 + mid
//!
//! with mid = 2^(bit_depth-1), rounding half away from zero, and clamping to
//! the sample range. The inverse is the exact algebraic inverse before
//! rounding, which keeps the round trip within +/-1 per channel.

use super::{clamp_to_depth, round_half_away, ColorSpace, PixelError, RasterImage, Yuv444Frame};

const KR: f64 = 0.2126;
const KG: f64 = 0.7152;
const KB: f64 = 0.0722;
const CB_DIV: f64 = 1.8556; // 2 * (1 - KB)
const CR_DIV: f64 = 1.5748; // 2 * (1 - KR)

pub fn rgb_to_yuv444(image: &RasterImage) -> Result<Yuv444Frame, PixelError> {
    if image.color_space() != ColorSpace::Rgb {
        return Err(PixelError::ColorSpace {
            expected: ColorSpace::Rgb,
            got: image.color_space(),
        });
    }
    let n = image.width() * image.height();
    let mid = (1i64 << (image.bit_depth() - 1)) as f64;
    let depth = image.bit_depth();
    let mut y_plane = Vec::with_capacity(n);
    let mut cb_plane = Vec::with_capacity(n);
    let mut cr_plane = Vec::with_capacity(n);
    let (rp, gp, bp) = (image.plane(0), image.plane(1), image.plane(2));
    for i in 0..n {
        let r = rp[i] as f64;
        let g = gp[i] as f64;
        let b = bp[i] as f64;
        let y = KR * r + KG * g + KB * b;
        let cb = (b - y) / CB_DIV + mid;
        let cr = (r - y) / CR_DIV + mid;
        y_plane.push(clamp_to_depth(round_half_away(y), depth));
        cb_plane.push(clamp_to_depth(round_half_away(cb), depth));
        cr_plane.push(clamp_to_depth(round_half_away(cr), depth));
    }
    let image = RasterImage::new(
        image.width(),
        image.height(),
        depth,
        ColorSpace::Yuv444,
        [y_plane, cb_plane, cr_plane],
    )?;
    Yuv444Frame::new(image)
}

pub fn yuv444_to_rgb(frame: &Yuv444Frame) -> Result<RasterImage, PixelError> {
    let image = frame.image();
    let n = image.width() * image.height();
    let mid = (1i64 << (image.bit_depth() - 1)) as f64;
    let depth = image.bit_depth();
    let mut r_plane = Vec::with_capacity(n);
    let mut g_plane = Vec::with_capacity(n);
    let mut b_plane = Vec::with_capacity(n);
    let (yp, cbp, crp) = (image.plane(0), image.plane(1), image.plane(2));
    for i in 0..n {
        let y = yp[i] as f64;
        let cb = cbp[i] as f64 - mid;
        let cr = crp[i] as f64 - mid;
        let r = y + CR_DIV * cr;
        let b = y + CB_DIV * cb;
        let g = (y - KR * r - KB * b) / KG;
        r_plane.push(clamp_to_depth(round_half_away(r), depth));
        g_plane.push(clamp_to_depth(round_half_away(g), depth));
        b_plane.push(clamp_to_depth(round_half_away(b), depth));
    }
    RasterImage::new(
        image.width(),
        image.height(),
        depth,
        ColorSpace::Rgb,
        [r_plane, g_plane, b_plane],
    )
}
