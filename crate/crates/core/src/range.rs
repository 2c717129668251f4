//! Adaptive binary range coder shared by the base and enhancement codecs.
//!
//! Carry-counting byte-oriented coder with a 32-bit range register, 11-bit
//! adaptive probabilities, and renormalization whenever the range drops below
//! 2^24 (one output/input byte per renormalization). The encoder defers bytes
//! that could still be changed by a carry by counting pending 0xFF bytes
//! instead of storing them. See `docs/FORMATS.md` for the normative
//! description.
//!
//! Encoder and decoder renormalize in lockstep, so a decoder that consumes a
//! well-formed stream ends exactly at the encoder's byte count; every payload
//! additionally ends with a 16-bit sentinel so desynchronized decodes are
//! detected. [`decode_ueg`]/[`encode_ueg`] provide the exp-Golomb
//! binarization used for all multi-bit syntax elements.

use thiserror::Error;

const PROB_BITS: u32 = 11;
const PROB_ONE: u16 = 1 << PROB_BITS;
const PROB_INIT: u16 = PROB_ONE / 2;
const MOVE_BITS: u32 = 5;
const RENORM_LIMIT: u32 = 1 << 24;

/// Longest accepted exp-Golomb prefix; anything longer means a
/// desynchronized stream.
const MAX_UEG_PREFIX: u32 = 24;

/// Trailing bit pattern appended to every payload.
const SENTINEL: u16 = 0xA55A;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RangeError {
    #[error("payload truncated: decoder ran past the end of the stream")]
    Truncated,
    #[error("payload corrupt: exp-Golomb prefix exceeds {MAX_UEG_PREFIX} bits")]
    Desync,
    #[error("payload corrupt: trailing sentinel mismatch")]
    Sentinel,
    #[error("payload corrupt: {unread} unread byte(s) after the sentinel")]
    TrailingBytes { unread: usize },
}

/// Adaptive probability of decoding a zero bit, in units of 1/2048.
#[derive(Debug, Clone, Copy)]
pub struct BinProb {
    prob: u16,
}

impl Default for BinProb {
    fn default() -> Self {
        BinProb { prob: PROB_INIT }
    }
}

impl BinProb {
    pub fn new() -> Self {
        Self::default()
    }

    fn update(&mut self, bit: bool) {
        if bit {
            self.prob -= self.prob >> MOVE_BITS;
        } else {
            self.prob += (PROB_ONE - self.prob) >> MOVE_BITS;
        }
    }
}

pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out: Vec::new(),
        }
    }

    pub fn encode_bit(&mut self, ctx: &mut BinProb, bit: bool) {
        let bound = (self.range >> PROB_BITS) * ctx.prob as u32;
        if bit {
            self.low += bound as u64;
            self.range -= bound;
        } else {
            self.range = bound;
        }
        ctx.update(bit);
        while self.range < RENORM_LIMIT {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// Fixed 1/2 probability, no adaptation.
    pub fn encode_bypass(&mut self, bit: bool) {
        self.range >>= 1;
        if bit {
            self.low += self.range as u64;
        }
        if self.range < RENORM_LIMIT {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        // Flush unless the low register still sits in the ambiguous
        // 0xFF....... band without a carry; those bytes stay pending.
        if (self.low as u32) < 0xFF00_0000 || self.low > u32::MAX as u64 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low as u32) >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (((self.low as u32) << 8) & 0xFFFF_FF00) as u64;
    }

    /// Append the sentinel and flush. The returned payload is exactly the
    /// byte count a conforming decoder will consume.
    pub fn finish(mut self) -> Vec<u8> {
        let sentinel = SENTINEL;
        for i in (0..16).rev() {
            self.encode_bypass((sentinel >> i) & 1 == 1);
        }
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    data: &'a [u8],
    pos: usize,
    overrun: bool,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        let mut dec = RangeDecoder {
            code: 0,
            range: u32::MAX,
            data,
            pos: 0,
            overrun: false,
        };
        for _ in 0..5 {
            let b = dec.next_byte();
            dec.code = (dec.code << 8) | b as u32;
        }
        dec
    }

    fn next_byte(&mut self) -> u8 {
        match self.data.get(self.pos) {
            Some(&b) => {
                self.pos += 1;
                b
            }
            None => {
                self.overrun = true;
                0
            }
        }
    }

    pub fn decode_bit(&mut self, ctx: &mut BinProb) -> bool {
        let bound = (self.range >> PROB_BITS) * ctx.prob as u32;
        let bit = if self.code < bound {
            self.range = bound;
            false
        } else {
            self.code -= bound;
            self.range -= bound;
            true
        };
        ctx.update(bit);
        while self.range < RENORM_LIMIT {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte() as u32;
        }
        bit
    }

    pub fn decode_bypass(&mut self) -> bool {
        self.range >>= 1;
        let bit = if self.code >= self.range {
            self.code -= self.range;
            true
        } else {
            false
        };
        if self.range < RENORM_LIMIT {
            self.range <<= 8;
            self.code = (self.code << 8) | self.next_byte() as u32;
        }
        bit
    }

    /// Validate the trailing sentinel and exact payload consumption.
    pub fn finish(mut self) -> Result<(), RangeError> {
        let mut sentinel: u16 = 0;
        for _ in 0..16 {
            sentinel = (sentinel << 1) | self.decode_bypass() as u16;
        }
        if self.overrun {
            return Err(RangeError::Truncated);
        }
        if sentinel != SENTINEL {
            return Err(RangeError::Sentinel);
        }
        if self.pos != self.data.len() {
            return Err(RangeError::TrailingBytes {
                unread: self.data.len() - self.pos,
            });
        }
        Ok(())
    }
}

/// Map a signed value onto the non-negative exp-Golomb code numbers:
/// 0, 1, -1, 2, -2, ... -> 0, 1, 2, 3, 4, ...
pub fn signed_to_code(v: i32) -> u32 {
    if v > 0 {
        (v as u32) * 2 - 1
    } else {
        (-(v as i64)) as u32 * 2
    }
}

pub fn code_to_signed(u: u32) -> i32 {
    if u & 1 == 1 {
        ((u >> 1) + 1) as i32
    } else {
        -((u >> 1) as i32)
    }
}

/// Code length in bits of the order-0 exp-Golomb code for `u`: 2k+1 with
/// k = floor(log2(u+1)).
pub fn ueg_len(u: u32) -> u32 {
    debug_assert!(u < u32::MAX);
    let k = 31 - (u + 1).leading_zeros();
    2 * k + 1
}

/// Code length in bits of the signed exp-Golomb code for `v`.
pub fn signed_eg_len(v: i32) -> u32 {
    ueg_len(signed_to_code(v))
}

/// Exp-Golomb with adaptively coded prefix bins and bypass suffix bits.
/// Prefix bin `i` uses context `ctxs[min(i, ctxs.len()-1)]`.
pub fn encode_ueg(enc: &mut RangeEncoder, ctxs: &mut [BinProb], u: u32) {
    debug_assert!(u < (1 << MAX_UEG_PREFIX));
    let k = 31 - (u + 1).leading_zeros();
    let last = ctxs.len() - 1;
    for i in 0..k {
        enc.encode_bit(&mut ctxs[(i as usize).min(last)], true);
    }
    enc.encode_bit(&mut ctxs[(k as usize).min(last)], false);
    let rem = (u + 1) - (1 << k);
    for b in (0..k).rev() {
        enc.encode_bypass((rem >> b) & 1 == 1);
    }
}

pub fn decode_ueg(dec: &mut RangeDecoder, ctxs: &mut [BinProb]) -> Result<u32, RangeError> {
    let last = ctxs.len() - 1;
    let mut k = 0u32;
    while dec.decode_bit(&mut ctxs[(k as usize).min(last)]) {
        k += 1;
        if k > MAX_UEG_PREFIX {
            return Err(RangeError::Desync);
        }
    }
    let mut rem = 0u32;
    for _ in 0..k {
        rem = (rem << 1) | dec.decode_bypass() as u32;
    }
    Ok((1u32 << k) - 1 + rem)
}

pub fn encode_signed_eg(enc: &mut RangeEncoder, ctxs: &mut [BinProb], v: i32) {
    encode_ueg(enc, ctxs, signed_to_code(v));
}

pub fn decode_signed_eg(dec: &mut RangeDecoder, ctxs: &mut [BinProb]) -> Result<i32, RangeError> {
    Ok(code_to_signed(decode_ueg(dec, ctxs)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn signed_mapping_is_a_bijection() {
        for v in -1000..=1000 {
            assert_eq!(code_to_signed(signed_to_code(v)), v);
        }
        assert_eq!(signed_to_code(0), 0);
        assert_eq!(signed_to_code(1), 1);
        assert_eq!(signed_to_code(-1), 2);
    }

    #[test]
    fn ueg_lengths_match_the_code_structure() {
        assert_eq!(ueg_len(0), 1);
        assert_eq!(ueg_len(1), 3);
        assert_eq!(ueg_len(2), 3);
        assert_eq!(ueg_len(3), 5);
        assert_eq!(ueg_len(6), 5);
        assert_eq!(ueg_len(7), 7);
        assert_eq!(signed_eg_len(0), 1);
        assert_eq!(signed_eg_len(3), 5);
        assert_eq!(signed_eg_len(-3), 5);
    }

    #[test]
    fn empty_payload_is_five_bytes_plus_sentinel_renorms() {
        let enc = RangeEncoder::new();
        let payload = enc.finish();
        let mut dec = RangeDecoder::new(&payload);
        // Nothing was coded; the sentinel must still verify.
        let mut s = 0u16;
        for _ in 0..16 {
            s = (s << 1) | dec.decode_bypass() as u16;
        }
        assert_eq!(s, SENTINEL);
    }

    #[test]
    fn random_bit_streams_round_trip_and_consume_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..200 {
            let n = rng.gen_range(0..400);
            let bits: Vec<(bool, bool)> = (0..n)
                .map(|_| (rng.gen_bool(0.5), rng.gen_bool(0.8)))
                .collect();
            let mut enc = RangeEncoder::new();
            let mut ctxs = [BinProb::new(); 4];
            for &(bypass, bit) in &bits {
                if bypass {
                    enc.encode_bypass(bit);
                } else {
                    enc.encode_bit(&mut ctxs[0], bit);
                }
            }
            let payload = enc.finish();
            let mut dec = RangeDecoder::new(&payload);
            let mut dctxs = [BinProb::new(); 4];
            for (i, &(bypass, bit)) in bits.iter().enumerate() {
                let got = if bypass {
                    dec.decode_bypass()
                } else {
                    dec.decode_bit(&mut dctxs[0])
                };
                assert_eq!(got, bit, "trial {trial} symbol {i}");
            }
            dec.finish().expect("sentinel and exact consumption");
        }
    }

    #[test]
    fn ueg_values_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<u32> = (0..2000)
            .map(|i| match i % 4 {
                0 => rng.gen_range(0..4),
                1 => rng.gen_range(0..64),
                2 => rng.gen_range(0..5000),
                _ => rng.gen_range(0..(1 << 20)),
            })
            .collect();
        let mut enc = RangeEncoder::new();
        let mut ctxs = vec![BinProb::new(); 3];
        for &u in &values {
            encode_ueg(&mut enc, &mut ctxs, u);
        }
        let payload = enc.finish();
        let mut dec = RangeDecoder::new(&payload);
        let mut dctxs = vec![BinProb::new(); 3];
        for &u in &values {
            assert_eq!(decode_ueg(&mut dec, &mut dctxs).unwrap(), u);
        }
        dec.finish().unwrap();
    }

    #[test]
    fn adaptive_contexts_compress_biased_input() {
        let mut enc = RangeEncoder::new();
        let mut ctx = BinProb::new();
        for _ in 0..10_000 {
            enc.encode_bit(&mut ctx, false);
        }
        let payload = enc.finish();
        assert!(
            payload.len() < 200,
            "10000 heavily biased bits took {} bytes",
            payload.len()
        );
    }

    #[test]
    fn truncated_stream_is_detected() {
        let mut enc = RangeEncoder::new();
        let mut ctxs = vec![BinProb::new(); 3];
        for u in 0..200u32 {
            encode_ueg(&mut enc, &mut ctxs, u % 17);
        }
        let payload = enc.finish();
        let cut = &payload[..payload.len() / 2];
        let mut dec = RangeDecoder::new(cut);
        let mut dctxs = vec![BinProb::new(); 3];
        let mut failed = false;
        for u in 0..200u32 {
            match decode_ueg(&mut dec, &mut dctxs) {
                Ok(got) if got == u % 17 => {}
                _ => {
                    failed = true;
                    break;
                }
            }
        }
        if !failed {
            assert!(dec.finish().is_err());
        }
    }
}
