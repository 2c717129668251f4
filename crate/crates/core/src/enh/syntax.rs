//! Entropy coding of block records: syntax element order, binarizations, and
//! context assignment. The normative description lives in `docs/FORMATS.md`;
//! this module is its only implementation.
//!
//! Per block, in raster order:
//!
//! ```text
//! skip_flag                              ctx SKIP
//! if !skip_flag:
//!   inter_flag                           ctx INTER
//!   if inter: mv_dx, mv_dy               signed EG, ctx set MV
//!   else:     dc_delta[Y, Cb, Cr]        signed EG, ctx set DC
//!   for plane in Y, Cb, Cr:
//!     for sub in 0..4 (2x2 raster of 8x8 sub-blocks):
//!       cbf                              ctx CBF[plane_class]
//!       if cbf: 64 levels in zigzag scan signed EG,
//!               ctx set LEVEL[plane_class][position_class]
//! ```
//!
//! `plane_class` is 0 for luma, 1 for chroma; `position_class` is 0 for the
//! DC position, 1 for zigzag indices 1..16, 2 for the rest.

use crate::range::{
    decode_signed_eg, encode_signed_eg, BinProb, RangeDecoder, RangeEncoder, RangeError,
};

use super::transform::LEVEL_CAP;
use super::{BlockMode, BlockRecord, MotionVector};

/// Zigzag scan order for an 8x8 block (raster indices).
pub(crate) const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

fn position_class(scan_index: usize) -> usize {
    match scan_index {
        0 => 0,
        1..=15 => 1,
        _ => 2,
    }
}

pub(crate) fn plane_class(plane: usize) -> usize {
    usize::from(plane > 0)
}

/// Adaptive contexts, reset at the start of every bitstream.
pub(crate) struct Contexts {
    skip: BinProb,
    inter: BinProb,
    mv: [BinProb; 3],
    dc: [BinProb; 3],
    cbf: [BinProb; 2],
    level: [[[BinProb; 3]; 3]; 2],
}

impl Contexts {
    pub fn new() -> Self {
        Contexts {
            skip: BinProb::new(),
            inter: BinProb::new(),
            mv: [BinProb::new(); 3],
            dc: [BinProb::new(); 3],
            cbf: [BinProb::new(); 2],
            level: [[[BinProb::new(); 3]; 3]; 2],
        }
    }
}

pub(crate) fn encode_record(
    enc: &mut RangeEncoder,
    ctx: &mut Contexts,
    record: &BlockRecord,
    mid: i32,
) {
    enc.encode_bit(&mut ctx.skip, record.mode == BlockMode::Skip);
    if record.mode == BlockMode::Skip {
        return;
    }
    enc.encode_bit(&mut ctx.inter, record.mode == BlockMode::Inter);
    match record.mode {
        BlockMode::Inter => {
            encode_signed_eg(enc, &mut ctx.mv, record.mv.dx);
            encode_signed_eg(enc, &mut ctx.mv, record.mv.dy);
        }
        BlockMode::IntraDc => {
            for p in 0..3 {
                encode_signed_eg(enc, &mut ctx.dc, record.dc[p] as i32 - mid);
            }
        }
        BlockMode::Skip => unreachable!(),
    }
    for plane in 0..3 {
        let class = plane_class(plane);
        for sub in 0..4 {
            let levels = &record.levels[plane][sub];
            let cbf = levels.iter().any(|&l| l != 0);
            enc.encode_bit(&mut ctx.cbf[class], cbf);
            if !cbf {
                continue;
            }
            for (scan, &raster) in ZIGZAG.iter().enumerate() {
                let set = &mut ctx.level[class][position_class(scan)];
                encode_signed_eg(enc, set, levels[raster]);
            }
        }
    }
}

pub(crate) fn decode_record(
    dec: &mut RangeDecoder,
    ctx: &mut Contexts,
    mid: i32,
    sample_max: i32,
) -> Result<BlockRecord, RangeError> {
    let mut record = BlockRecord::empty();
    if dec.decode_bit(&mut ctx.skip) {
        record.mode = BlockMode::Skip;
        return Ok(record);
    }
    if dec.decode_bit(&mut ctx.inter) {
        record.mode = BlockMode::Inter;
        let dx = decode_signed_eg(dec, &mut ctx.mv)?;
        let dy = decode_signed_eg(dec, &mut ctx.mv)?;
        record.mv = MotionVector { dx, dy };
    } else {
        record.mode = BlockMode::IntraDc;
        for p in 0..3 {
            let dc = mid + decode_signed_eg(dec, &mut ctx.dc)?;
            if !(0..=sample_max).contains(&dc) {
                return Err(RangeError::Desync);
            }
            record.dc[p] = dc as u16;
        }
    }
    for plane in 0..3 {
        let class = plane_class(plane);
        for sub in 0..4 {
            if !dec.decode_bit(&mut ctx.cbf[class]) {
                continue;
            }
            let levels = &mut record.levels[plane][sub];
            for (scan, &raster) in ZIGZAG.iter().enumerate() {
                let set = &mut ctx.level[class][position_class(scan)];
                let level = decode_signed_eg(dec, set)?;
                if level.abs() > LEVEL_CAP {
                    return Err(RangeError::Desync);
                }
                levels[raster] = level;
            }
        }
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zigzag_is_a_permutation_walking_antidiagonals() {
        let mut seen = [false; 64];
        for &i in ZIGZAG.iter() {
            assert!(!seen[i]);
            seen[i] = true;
        }
        assert!(seen.iter().all(|&s| s));
        // Antidiagonal index (row + col) never decreases by more than 0 and
        // increases one diagonal at a time.
        let diag = |i: usize| i / 8 + i % 8;
        for w in ZIGZAG.windows(2) {
            let (a, b) = (diag(w[0]), diag(w[1]));
            assert!(b == a || b == a + 1, "{w:?}");
        }
    }

    #[test]
    fn records_round_trip_through_the_coder() {
        let mut records = vec![BlockRecord::empty(); 3];
        records[0].mode = BlockMode::Skip;
        records[1].mode = BlockMode::Inter;
        records[1].mv = MotionVector { dx: -7, dy: 31 };
        records[1].levels[0][2][0] = 14;
        records[1].levels[2][3][63] = -3;
        records[2].mode = BlockMode::IntraDc;
        records[2].dc = [500, 12, 1023];
        records[2].levels[1][0][9] = -200;

        let mut enc = RangeEncoder::new();
        let mut ctx = Contexts::new();
        for r in &records {
            encode_record(&mut enc, &mut ctx, r, 512);
        }
        let payload = enc.finish();

        let mut dec = RangeDecoder::new(&payload);
        let mut dctx = Contexts::new();
        for r in &records {
            let got = decode_record(&mut dec, &mut dctx, 512, 1023).unwrap();
            assert_eq!(&got, r);
        }
        dec.finish().unwrap();
    }
}
