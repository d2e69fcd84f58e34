//! Posit<nbits, esbits> decode and encode.
//!
//! A posit pattern is a two's-complement integer X. X = 0 is zero,
//! X = -2^(nbits-1) is NaR, and everything else is
//! `sign(X) * useed^k * 2^e * (1 + f)` with `useed = 2^(2^esbits)`, regime
//! value k run-length-encoded after the sign bit, up to `esbits` exponent
//! bits, and the remainder as fraction. For nbits <= 32 and esbits <= 3
//! every finite posit value is exactly representable in binary64, so decode
//! returns an exact f64.
//!
//! The paper family of formats only ever stores posits; arithmetic stays in
//! binary32/64. Encode therefore only needs round-to-nearest-even with
//! saturation at the extrema (finite nonzero inputs never round to zero or
//! NaR), which is the de facto posit standard behavior.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PositError {
    #[error("nbits must be in 2..=32, got {0}")]
    BadWidth(u32),
    #[error("esbits must be at most min(3, nbits - 2), got {esbits} for nbits {nbits}")]
    BadExponentWidth { nbits: u32, esbits: u32 },
    #[error("pattern {bits:#x} does not fit in {nbits} bits")]
    PatternTooWide { bits: u32, nbits: u32 },
}

/// A posit format: total width and maximum exponent-field width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositFormat {
    nbits: u32,
    esbits: u32,
}

impl PositFormat {
    pub fn new(nbits: u32, esbits: u32) -> Result<Self, PositError> {
        if !(2..=32).contains(&nbits) {
            return Err(PositError::BadWidth(nbits));
        }
        if esbits > 3 || esbits > nbits - 2 {
            return Err(PositError::BadExponentWidth { nbits, esbits });
        }
        Ok(Self { nbits, esbits })
    }

    pub fn nbits(&self) -> u32 {
        self.nbits
    }

    pub fn esbits(&self) -> u32 {
        self.esbits
    }

    /// useed = 2^(2^esbits).
    pub fn useed(&self) -> f64 {
        2f64.powi(1 << self.esbits)
    }

    /// Bit pattern of NaR: the sign bit alone.
    pub fn nar_bits(&self) -> u32 {
        1 << (self.nbits - 1)
    }

    /// All-ones mask over nbits.
    pub fn mask(&self) -> u32 {
        if self.nbits == 32 {
            u32::MAX
        } else {
            (1 << self.nbits) - 1
        }
    }

    /// Largest positive pattern (maxpos).
    pub fn max_bits(&self) -> u32 {
        self.nar_bits() - 1
    }
}

/// A bit pattern paired with its format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PositBits {
    bits: u32,
    format: PositFormat,
}

impl PositBits {
    pub fn new(bits: u32, format: PositFormat) -> Result<Self, PositError> {
        if bits & !format.mask() != 0 {
            return Err(PositError::PatternTooWide {
                bits,
                nbits: format.nbits,
            });
        }
        Ok(Self { bits, format })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn format(&self) -> PositFormat {
        self.format
    }

    pub fn decode(&self) -> PositValue {
        decode(self.bits, self.format)
    }
}

/// Result of decoding a posit pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PositValue {
    Zero,
    NaR,
    Real(f64),
}

impl PositValue {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            PositValue::Real(x) => Some(*x),
            _ => None,
        }
    }
}

/// Decode a pattern already known to fit the format (see [`PositBits`]).
pub fn decode(bits: u32, fmt: PositFormat) -> PositValue {
    let n = fmt.nbits;
    if bits == 0 {
        return PositValue::Zero;
    }
    if bits == fmt.nar_bits() {
        return PositValue::NaR;
    }
    let negative = bits >> (n - 1) & 1 == 1;
    let abs = if negative {
        bits.wrapping_neg() & fmt.mask()
    } else {
        bits
    };

    // Regime: run of identical bits after the sign, terminated by the
    // opposite bit (or by the end of the pattern).
    let body_len = n - 1;
    let first = abs >> (body_len - 1) & 1;
    let mut run = 0;
    while run < body_len && abs >> (body_len - 1 - run) & 1 == first {
        run += 1;
    }
    let k: i32 = if first == 0 {
        -(run as i32)
    } else {
        run as i32 - 1
    };
    // Bits left after the regime and its terminator.
    let rem = body_len.saturating_sub(run + 1);
    let e_avail = rem.min(fmt.esbits);
    let frac_len = rem - e_avail;
    let tail = if rem == 0 { 0 } else { abs & ((1 << rem) - 1) };
    // Missing exponent bits are treated as zeros on the right.
    let e = ((tail >> frac_len) << (fmt.esbits - e_avail)) as i32;
    let frac = if frac_len == 0 {
        0
    } else {
        tail & ((1 << frac_len) - 1)
    };

    let total_exp = k * (1 << fmt.esbits) + e - frac_len as i32;
    let sig = ((1u64 << frac_len) + frac as u64) as f64;
    let mut value = sig * 2f64.powi(total_exp);
    if negative {
        value = -value;
    }
    PositValue::Real(value)
}

/// Encode a real into the nearest posit, round-to-nearest-even, saturating
/// at maxpos/minpos. NaN maps to NaR; infinities saturate.
pub fn encode(x: f64, fmt: PositFormat) -> u32 {
    if x.is_nan() {
        return fmt.nar_bits();
    }
    if x == 0.0 {
        return 0;
    }
    let negative = x < 0.0;
    let a = x.abs();
    let n = fmt.nbits as i64;

    let signed = |p: u32| {
        if negative {
            p.wrapping_neg() & fmt.mask()
        } else {
            p
        }
    };

    if a.is_infinite() {
        return signed(fmt.max_bits());
    }

    // Split |x| = (1 + man/2^52) * 2^exp, normalizing f64 subnormals first.
    let (exp, man) = {
        let bits = a.to_bits();
        if bits >> 52 & 0x7ff == 0 {
            let norm = (a * 2f64.powi(200)).to_bits();
            (
                (norm >> 52 & 0x7ff) as i64 - 1023 - 200,
                norm & ((1u64 << 52) - 1),
            )
        } else {
            ((bits >> 52 & 0x7ff) as i64 - 1023, bits & ((1u64 << 52) - 1))
        }
    };

    let es = fmt.esbits as i64;
    let k = exp.div_euclid(1 << es);
    let e = exp.rem_euclid(1 << es) as u64;

    // Regime runs that fill the whole body saturate outright.
    if k >= n - 2 {
        return signed(fmt.max_bits());
    }
    if k <= -(n - 1) {
        return signed(1);
    }

    // Assemble sign-less body msb-first: regime, exponent, fraction.
    let mut body: u128 = 0;
    let mut len: u32 = 0;
    let push = |value: u128, width: u32, body: &mut u128, len: &mut u32| {
        *body = (*body << width) | value;
        *len += width;
    };
    if k >= 0 {
        push((1 << (k + 1)) - 1, k as u32 + 1, &mut body, &mut len); // ones
        push(0, 1, &mut body, &mut len); // terminator
    } else {
        push(0, (-k) as u32, &mut body, &mut len); // zeros
        push(1, 1, &mut body, &mut len); // terminator
    }
    push(e as u128, es as u32, &mut body, &mut len);
    push(man as u128, 52, &mut body, &mut len);

    // Keep nbits - 1 body bits, round-to-nearest-even on the rest.
    let keep = (n - 1) as u32;
    debug_assert!(len >= keep);
    let cut = len - keep;
    let mut p = (body >> cut) as u32;
    if cut > 0 {
        let tail = body & ((1u128 << cut) - 1);
        let half = 1u128 << (cut - 1);
        if tail > half || (tail == half && p & 1 == 1) {
            p += 1;
        }
    }
    // Saturate: never round a finite nonzero value to NaR or zero.
    if p >= fmt.nar_bits() {
        p = fmt.max_bits();
    }
    if p == 0 {
        p = 1;
    }
    signed(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p16_2() -> PositFormat {
        PositFormat::new(16, 2).unwrap()
    }

    /// Independent reference decoder working on an explicit bit vector and
    /// building the value by repeated doubling/halving, used to cross-check
    /// the shift-based decoder.
    fn reference_decode(bits: u32, fmt: PositFormat) -> PositValue {
        let n = fmt.nbits as usize;
        if bits == 0 {
            return PositValue::Zero;
        }
        if bits == 1 << (n - 1) {
            return PositValue::NaR;
        }
        let mut v: Vec<bool> = (0..n).rev().map(|i| bits >> i & 1 == 1).collect();
        let negative = v[0];
        if negative {
            // Two's complement on the bit vector: invert, then add one.
            for b in v.iter_mut() {
                *b = !*b;
            }
            for i in (0..n).rev() {
                if v[i] {
                    v[i] = false;
                } else {
                    v[i] = true;
                    break;
                }
            }
        }
        let body = &v[1..];
        let lead = body[0];
        let run = body.iter().take_while(|&&b| b == lead).count();
        let k: i32 = if lead { run as i32 - 1 } else { -(run as i32) };
        let rest: &[bool] = if run + 1 <= body.len() {
            &body[run + 1..]
        } else {
            &[]
        };
        let es = fmt.esbits as usize;
        let mut e: i32 = 0;
        for i in 0..es {
            e <<= 1;
            if i < rest.len() && rest[i] {
                e |= 1;
            }
        }
        let mut total = 1.0f64;
        let mut scale = 0.5f64;
        for &b in rest.iter().skip(es) {
            if b {
                total += scale;
            }
            scale *= 0.5;
        }
        let steps = k * (1 << fmt.esbits()) + e;
        for _ in 0..steps.abs() {
            if steps > 0 {
                total *= 2.0;
            } else {
                total /= 2.0;
            }
        }
        PositValue::Real(if negative { -total } else { total })
    }

    #[test]
    fn decode_special_patterns() {
        assert_eq!(decode(0x0000, p16_2()), PositValue::Zero);
        assert_eq!(decode(0x8000, p16_2()), PositValue::NaR);
    }

    #[test]
    fn decode_known_values() {
        assert_eq!(decode(0x4000, p16_2()), PositValue::Real(1.0));
        assert_eq!(decode(0x5000, p16_2()), PositValue::Real(4.0));
        // -1.0 is the two's complement of 1.0.
        assert_eq!(decode(0xC000, p16_2()), PositValue::Real(-1.0));
    }

    #[test]
    fn encode_known_values() {
        assert_eq!(encode(1.0, p16_2()), 0x4000);
        assert_eq!(encode(4.0, p16_2()), 0x5000);
        assert_eq!(encode(-1.0, p16_2()), 0xC000);
        assert_eq!(encode(0.0, p16_2()), 0x0000);
        assert_eq!(encode(f64::NAN, p16_2()), 0x8000);
    }

    #[test]
    fn encode_saturates() {
        assert_eq!(encode(1e300, p16_2()), 0x7FFF);
        assert_eq!(encode(1e-300, p16_2()), 0x0001);
        assert_eq!(encode(-1e300, p16_2()), 0x8001);
        assert_eq!(encode(f64::INFINITY, p16_2()), 0x7FFF);
    }

    #[test]
    fn decode_matches_reference_decoder_p16_2() {
        let fmt = p16_2();
        for bits in 0..=u16::MAX as u32 {
            let got = decode(bits, fmt);
            let want = reference_decode(bits, fmt);
            match (got, want) {
                (PositValue::Real(a), PositValue::Real(b)) => {
                    assert_eq!(a, b, "pattern {bits:#06x}")
                }
                (a, b) => assert_eq!(a, b, "pattern {bits:#06x}"),
            }
        }
    }

    #[test]
    fn round_trip_exhaustive_small_formats() {
        for (nbits, esbits) in [(8, 0), (8, 1), (10, 2), (16, 1), (16, 2)] {
            let fmt = PositFormat::new(nbits, esbits).unwrap();
            for bits in 0..(1u32 << nbits) {
                match decode(bits, fmt) {
                    PositValue::NaR => {}
                    PositValue::Zero => assert_eq!(encode(0.0, fmt), 0),
                    PositValue::Real(x) => {
                        assert_eq!(
                            encode(x, fmt),
                            bits,
                            "posit<{nbits},{esbits}> pattern {bits:#x} value {x}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn ordering_matches_signed_pattern_order() {
        let fmt = p16_2();
        let mut prev: Option<f64> = None;
        // Walk patterns in signed two's-complement order, skipping NaR.
        for signed in (i16::MIN + 1)..=i16::MAX {
            let bits = signed as u16 as u32;
            let value = match decode(bits, fmt) {
                PositValue::Zero => 0.0,
                PositValue::Real(x) => x,
                PositValue::NaR => unreachable!(),
            };
            if let Some(p) = prev {
                assert!(p < value, "ordering violated at pattern {bits:#06x}");
            }
            prev = Some(value);
        }
    }

    #[test]
    fn rejects_bad_formats_and_patterns() {
        assert!(PositFormat::new(1, 0).is_err());
        assert!(PositFormat::new(33, 2).is_err());
        assert!(PositFormat::new(16, 9).is_err());
        let fmt = PositFormat::new(8, 1).unwrap();
        assert!(PositBits::new(0x100, fmt).is_err());
        assert!(PositBits::new(0xFF, fmt).is_ok());
    }
}
