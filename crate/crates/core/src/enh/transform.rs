//! Fixed-point 8x8 transform and dead-zone quantization.
//!
//! The basis is the orthonormal DCT-II scaled by 2^14 and rounded
//! (`DCT_BASIS`); all arithmetic is i64 integer, so the pipeline is
//! deterministic across platforms. Scales:
//!
//! * forward:  `C = round_shift(M * X * M^T, 16)` — coefficients carry a
//!   2^12 fixed-point scale relative to the true orthonormal DCT.
//! * dequant:  `Chat = sign(l) * ((|l| * qstep_x16 + 8) >> 4)` — back to the
//!   same 2^12 coefficient scale.
//! * inverse:  `X = round_shift(M^T * Chat * M, 40)` — back to samples.
//!
//! Quantization is uniform with a dead zone of 2/3:
//! `level = sign(c) * floor(|c|/qstep + 1/3)`, evaluated exactly in integers
//! as `floor((3*(|C|<<4) + qstep_x16) / (3*qstep_x16))`.
//!
//! `qstep(qp) = 2^((qp-4)/6)` follows the usual video-codec convention. The
//! fixed-point tables below hold `2^(r/6)` and `2^(r/3)` with 16 fractional
//! bits; negative exponents shift right with truncation.

use super::EnhError;

pub(crate) const DCT_BASIS: [[i64; 8]; 8] = [
    [5793, 5793, 5793, 5793, 5793, 5793, 5793, 5793],
    [8035, 6811, 4551, 1598, -1598, -4551, -6811, -8035],
    [7568, 3135, -3135, -7568, -7568, -3135, 3135, 7568],
    [6811, -1598, -8035, -4551, 4551, 8035, 1598, -6811],
    [5793, -5793, -5793, 5793, 5793, -5793, -5793, 5793],
    [4551, -8035, 1598, 6811, -6811, -1598, 8035, -4551],
    [3135, -7568, 7568, -3135, -3135, 7568, -7568, 3135],
    [1598, -4551, 6811, -8035, 8035, -6811, 4551, -1598],
];

const FWD_SHIFT: u32 = 16;
const INV_SHIFT: u32 = 40;

/// 2^(r/6) * 2^16 for r in 0..6.
const POW6_X16: [u64; 6] = [65536, 73562, 82570, 92682, 104032, 116772];
/// 2^(r/3) * 2^16 for r in 0..3.
const POW3_X16: [u64; 3] = [65536, 82570, 104032];
/// 2^(r/6) in f64, exact at r = 0.
const POW6_F64: [f64; 6] = [
    1.0,
    1.122_462_048_309_373,
    1.259_921_049_894_873_2,
    std::f64::consts::SQRT_2,
    1.587_401_051_968_199_4,
    1.781_797_436_280_678_5,
];

/// Largest coded level magnitude; anything above is a corrupt stream.
pub(crate) const LEVEL_CAP: i32 = 1 << 20;
/// Residuals are clamped to the widest supported sample range (10-bit).
pub(crate) const MAX_RESIDUAL: i32 = 1023;

pub(crate) fn check_qp(qp: u8) -> Result<(), EnhError> {
    if qp > 51 {
        Err(EnhError::QpRange(qp))
    } else {
        Ok(())
    }
}

/// Quantizer step size `2^((qp-4)/6)`.
pub fn qp_to_qstep(qp: u8) -> Result<f64, EnhError> {
    check_qp(qp)?;
    let e = qp as i32 - 4;
    let q = e.div_euclid(6);
    let r = e.rem_euclid(6) as usize;
    Ok(POW6_F64[r] * 2f64.powi(q))
}

/// `qstep * 2^16` as an integer, the form the quantizer consumes.
pub(crate) fn qstep_x16(qp: u8) -> u64 {
    let e = qp as i32 - 4;
    let q = e.div_euclid(6);
    let r = e.rem_euclid(6) as usize;
    shift_by(POW6_X16[r], q)
}

/// Rate-distortion multiplier `lambda_mode_scale * 2^((qp-12)/3)` with 16
/// fractional bits. `lambda_scale_x16` is the mode scale, also x16.
pub(crate) fn lambda_x16(qp: u8, lambda_scale_x16: u64) -> u64 {
    let e = qp as i32 - 12;
    let q = e.div_euclid(3);
    let r = e.rem_euclid(3) as usize;
    (lambda_scale_x16 * shift_by(POW3_X16[r], q)) >> 16
}

fn shift_by(v: u64, q: i32) -> u64 {
    if q >= 0 {
        v << q
    } else {
        v >> (-q)
    }
}

fn round_shift(v: i64, s: u32) -> i64 {
    (v + (1i64 << (s - 1))) >> s
}

/// Forward transform to the 2^12-scaled coefficient domain.
pub(crate) fn forward_transform(block: &[i32; 64]) -> [i64; 64] {
    let mut tmp = [0i64; 64];
    for k in 0..8 {
        for c in 0..8 {
            let mut acc = 0i64;
            for r in 0..8 {
                acc += DCT_BASIS[k][r] * block[r * 8 + c] as i64;
            }
            tmp[k * 8 + c] = acc;
        }
    }
    let mut coef = [0i64; 64];
    for k in 0..8 {
        for l in 0..8 {
            let mut acc = 0i64;
            for c in 0..8 {
                acc += tmp[k * 8 + c] * DCT_BASIS[l][c];
            }
            coef[k * 8 + l] = round_shift(acc, FWD_SHIFT);
        }
    }
    coef
}

/// Inverse transform from the 2^12-scaled coefficient domain back to
/// residual samples, clamped to `[-MAX_RESIDUAL, MAX_RESIDUAL]`.
pub(crate) fn inverse_transform(coef: &[i64; 64]) -> [i32; 64] {
    let mut tmp = [0i64; 64];
    for r in 0..8 {
        for l in 0..8 {
            let mut acc = 0i64;
            for k in 0..8 {
                acc += DCT_BASIS[k][r] * coef[k * 8 + l];
            }
            tmp[r * 8 + l] = acc;
        }
    }
    let mut out = [0i32; 64];
    for r in 0..8 {
        for c in 0..8 {
            let mut acc = 0i64;
            for l in 0..8 {
                acc += tmp[r * 8 + l] * DCT_BASIS[l][c];
            }
            out[r * 8 + c] = round_shift(acc, INV_SHIFT)
                .clamp(-(MAX_RESIDUAL as i64), MAX_RESIDUAL as i64)
                as i32;
        }
    }
    out
}

pub(crate) fn quantize(coef: &[i64; 64], qstep_x16: u64) -> [i32; 64] {
    let den = 3 * qstep_x16;
    let mut levels = [0i32; 64];
    for (l, &c) in levels.iter_mut().zip(coef.iter()) {
        let num = 3 * ((c.unsigned_abs()) << 4) + qstep_x16;
        let mag = ((num / den) as i64).min(LEVEL_CAP as i64) as i32;
        *l = if c < 0 { -mag } else { mag };
    }
    levels
}

pub(crate) fn dequantize(levels: &[i32; 64], qstep_x16: u64) -> [i64; 64] {
    let mut coef = [0i64; 64];
    for (c, &l) in coef.iter_mut().zip(levels.iter()) {
        let mag = ((l.unsigned_abs() as u64 * qstep_x16 + 8) >> 4) as i64;
        *c = if l < 0 { -mag } else { mag };
    }
    coef
}

/// 8x8 forward transform + dead-zone quantization of a residual block.
pub fn transform_quantize(residual: &[i32; 64], qp: u8) -> [i32; 64] {
    quantize(&forward_transform(residual), qstep_x16(qp))
}

/// Exact integer inverse of the forward pipeline at the dequantized values.
pub fn dequantize_inverse_transform(levels: &[i32; 64], qp: u8) -> [i32; 64] {
    inverse_transform(&dequantize(levels, qstep_x16(qp)))
}
