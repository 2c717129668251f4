//! Full-search integer-pel motion estimation against the preview reference.
//!
//! Frames are padded by edge replication to multiples of the 16-pixel block
//! size; the search window is clamped so every candidate reads only padded
//! samples, so no candidate needs border handling in the inner loop. The
//! rate term uses nominal signed exp-Golomb code lengths, and cost
//! comparisons run entirely in x16 fixed point.

use crate::pixel::Yuv444Frame;
use crate::range::signed_eg_len;

use super::{EnhConfig, MotionVector, BLOCK_SIZE};

/// A frame padded by edge replication to block-aligned dimensions.
pub(crate) struct PaddedFrame {
    pub width: usize,
    pub height: usize,
    pub padded_w: usize,
    pub padded_h: usize,
    pub bit_depth: u8,
    pub planes: [Vec<u16>; 3],
}

impl PaddedFrame {
    pub fn from_frame(frame: &Yuv444Frame) -> Self {
        let width = frame.width();
        let height = frame.height();
        let padded_w = width.div_ceil(BLOCK_SIZE) * BLOCK_SIZE;
        let padded_h = height.div_ceil(BLOCK_SIZE) * BLOCK_SIZE;
        let mut planes: [Vec<u16>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (p, out) in planes.iter_mut().enumerate() {
            let src = frame.plane(p);
            let mut data = vec![0u16; padded_w * padded_h];
            for y in 0..padded_h {
                let sy = y.min(height - 1);
                let row = &src[sy * width..sy * width + width];
                let dst = &mut data[y * padded_w..(y + 1) * padded_w];
                dst[..width].copy_from_slice(row);
                let edge = row[width - 1];
                for v in dst[width..].iter_mut() {
                    *v = edge;
                }
            }
            *out = data;
        }
        PaddedFrame {
            width,
            height,
            padded_w,
            padded_h,
            bit_depth: frame.bit_depth(),
            planes,
        }
    }

    #[inline]
    pub fn row(&self, plane: usize, x: usize, y: usize, len: usize) -> &[u16] {
        let start = y * self.padded_w + x;
        &self.planes[plane][start..start + len]
    }

    /// Copy the 16x16 block of `plane` at `(x, y)` into `out`.
    pub fn block(&self, plane: usize, x: usize, y: usize, out: &mut [u16; 256]) {
        for r in 0..BLOCK_SIZE {
            out[r * BLOCK_SIZE..(r + 1) * BLOCK_SIZE]
                .copy_from_slice(self.row(plane, x, y + r, BLOCK_SIZE));
        }
    }
}

fn sad_block(
    orig: &PaddedFrame,
    reference: &PaddedFrame,
    bx: usize,
    by: usize,
    rx: usize,
    ry: usize,
    rows: usize,
    cols: usize,
) -> u64 {
    let mut sad = 0u64;
    for r in 0..rows {
        let a = orig.row(0, bx, by + r, cols);
        let b = reference.row(0, rx, ry + r, cols);
        sad += a
            .iter()
            .zip(b)
            .map(|(&x, &y)| (x as i32 - y as i32).unsigned_abs() as u64)
            .sum::<u64>();
    }
    sad
}

/// Nominal rate of a motion vector: signed exp-Golomb lengths of both
/// components.
pub(crate) fn mv_bits(mv: MotionVector) -> u32 {
    signed_eg_len(mv.dx) + signed_eg_len(mv.dy)
}

/// Exhaustive search over the clamped window minimizing
/// `J = SAD_luma * 2^16 + lambda_x16 * bits(mv)`. Ties break toward smaller
/// |dx|+|dy|, then smaller dy, then smaller dx, independent of scan order.
pub(crate) fn search_padded(
    orig: &PaddedFrame,
    reference: &PaddedFrame,
    bx: usize,
    by: usize,
    cfg: &EnhConfig,
    lambda_x16: u64,
) -> (MotionVector, u64) {
    let sr = cfg.search_range as i32;
    let rows = BLOCK_SIZE.min(orig.height.saturating_sub(by));
    let cols = BLOCK_SIZE.min(orig.width.saturating_sub(bx));
    // Candidates must keep the whole 16x16 reference read inside the padded
    // frame.
    let dx_min = -(bx as i32).min(sr);
    let dx_max = ((reference.padded_w - BLOCK_SIZE - bx) as i32).min(sr);
    let dy_min = -(by as i32).min(sr);
    let dy_max = ((reference.padded_h - BLOCK_SIZE - by) as i32).min(sr);

    let mut best_mv = MotionVector { dx: 0, dy: 0 };
    let mut best_cost = u64::MAX;
    let mut best_abs = i32::MAX;
    for dy in dy_min..=dy_max {
        for dx in dx_min..=dx_max {
            let mv = MotionVector { dx, dy };
            let sad = sad_block(
                orig,
                reference,
                bx,
                by,
                (bx as i32 + dx) as usize,
                (by as i32 + dy) as usize,
                rows,
                cols,
            );
            let cost = (sad << 16) + lambda_x16 * mv_bits(mv) as u64;
            let abs = dx.abs() + dy.abs();
            let better = cost < best_cost
                || (cost == best_cost
                    && (abs < best_abs
                        || (abs == best_abs
                            && (dy < best_mv.dy || (dy == best_mv.dy && dx < best_mv.dx)))));
            if better {
                best_cost = cost;
                best_abs = abs;
                best_mv = mv;
            }
        }
    }
    (best_mv, best_cost)
}

/// Search for the 16x16 block of `original` whose top-left corner is
/// `origin`, using `reference` as the prediction source.
pub fn motion_search(
    original: &Yuv444Frame,
    reference: &Yuv444Frame,
    origin: (usize, usize),
    cfg: &EnhConfig,
) -> (MotionVector, u64) {
    let orig = PaddedFrame::from_frame(original);
    let refp = PaddedFrame::from_frame(reference);
    let lambda = cfg.lambda_x16();
    search_padded(&orig, &refp, origin.0, origin.1, cfg, lambda)
}
