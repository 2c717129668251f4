//! Separable resampling with half-pixel-center alignment: output pixel `i`
//! samples source coordinate `(i + 0.5) * src/dst - 0.5`, with edge clamping.
//! The horizontal pass produces an f64 intermediate; rounding happens once,
//! after the vertical pass. Bicubic is Catmull-Rom (a = -0.5). Both kernels
//! have unit DC gain, so constant images are preserved bit-exactly.

use super::{clamp_to_depth, round_half_away, Filter, PixelError, RasterImage};

pub fn resample(
    image: &RasterImage,
    target_w: usize,
    target_h: usize,
    filter: Filter,
) -> Result<RasterImage, PixelError> {
    if target_w == 0 || target_h == 0 {
        return Err(PixelError::ZeroTarget);
    }
    if target_w == image.width() && target_h == image.height() {
        return Ok(image.clone());
    }
    let mut planes: [Vec<u16>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (p, out) in planes.iter_mut().enumerate() {
        let src: Vec<f64> = image.plane(p).iter().map(|&v| v as f64).collect();
        let horiz = resample_axis(&src, image.width(), image.height(), target_w, filter, true);
        let vert = resample_axis(&horiz, target_w, image.height(), target_h, filter, false);
        *out = vert
            .into_iter()
            .map(|v| clamp_to_depth(round_half_away(v), image.bit_depth()))
            .collect();
    }
    RasterImage::new(
        target_w,
        target_h,
        image.bit_depth(),
        image.color_space(),
        planes,
    )
}

/// Resample rows (horizontal = true) or columns of a `w x h` plane to `target`
/// entries along that axis.
fn resample_axis(
    src: &[f64],
    w: usize,
    h: usize,
    target: usize,
    filter: Filter,
    horizontal: bool,
) -> Vec<f64> {
    let src_len = if horizontal { w } else { h };
    let taps = precompute_taps(src_len, target, filter);
    if horizontal {
        let mut out = vec![0.0; target * h];
        for y in 0..h {
            let row = &src[y * w..(y + 1) * w];
            for (x, tap) in taps.iter().enumerate() {
                out[y * target + x] = tap.apply(row, 1);
            }
        }
        out
    } else {
        let mut out = vec![0.0; w * target];
        for (y, tap) in taps.iter().enumerate() {
            for x in 0..w {
                out[y * w + x] = tap.apply(&src[x..], w);
            }
        }
        out
    }
}

struct Taps {
    /// Clamped source indices paired with kernel weights.
    entries: Vec<(usize, f64)>,
}

impl Taps {
    fn apply(&self, src: &[f64], stride: usize) -> f64 {
        self.entries
            .iter()
            .map(|&(i, w)| src[i * stride] * w)
            .sum()
    }
}

fn precompute_taps(src_len: usize, target: usize, filter: Filter) -> Vec<Taps> {
    let scale = src_len as f64 / target as f64;
    (0..target)
        .map(|i| {
            let center = (i as f64 + 0.5) * scale - 0.5;
            let base = center.floor();
            let frac = center - base;
            let entries = match filter {
                Filter::Bilinear => vec![
                    (clamp_index(base, src_len), 1.0 - frac),
                    (clamp_index(base + 1.0, src_len), frac),
                ],
                Filter::Bicubic => vec![
                    (clamp_index(base - 1.0, src_len), catmull_rom(frac + 1.0)),
                    (clamp_index(base, src_len), catmull_rom(frac)),
                    (clamp_index(base + 1.0, src_len), catmull_rom(1.0 - frac)),
                    (clamp_index(base + 2.0, src_len), catmull_rom(2.0 - frac)),
                ],
            };
            Taps { entries }
        })
        .collect()
}

fn clamp_index(i: f64, len: usize) -> usize {
    i.max(0.0).min((len - 1) as f64) as usize
}

/// Catmull-Rom kernel (cubic with a = -0.5), support [-2, 2].
fn catmull_rom(x: f64) -> f64 {
    let x = x.abs();
    if x < 1.0 {
        1.5 * x * x * x - 2.5 * x * x + 1.0
    } else if x < 2.0 {
        -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0
    } else {
        0.0
    }
}
