//! Bit-exact codecs for the compressed real-number formats and the
//! conversion-error measurement behind the accuracy experiments.
//!
//! bfloat16 shares binary32's 8-bit exponent, so compression is a plain
//! 16-bit right shift and decompression a 16-bit left shift (zero pad) or a
//! bit replication into the low half. bfloat8 plays the same game against
//! binary16 with 8-bit shifts. Posits live in [`posit`].

pub mod posit;

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("relative error is undefined for a zero reference value")]
    ZeroReference,
    #[error("sample count must be at least 1")]
    EmptySample,
    #[error("bin count must be at least 1")]
    EmptyBins,
}

/// binary32 -> bfloat16 by truncation: keep the upper 16 bits.
///
/// This is the `vnsrl`-by-16 semantics the compressed kernels use; no
/// rounding takes place.
#[inline]
pub fn f32_to_bf16_trunc(bits: u32) -> u16 {
    (bits >> 16) as u16
}

/// binary32 -> bfloat16 with round-to-nearest-even on the discarded bits.
///
/// Optional alternative to [`f32_to_bf16_trunc`]; the kernels never use it.
/// NaNs are truncated with a forced fraction bit so they stay NaN.
#[inline]
pub fn f32_to_bf16_rne(bits: u32) -> u16 {
    if bits & 0x7f80_0000 == 0x7f80_0000 && bits & 0x007f_ffff != 0 {
        return ((bits >> 16) as u16) | 0x0040;
    }
    let round = 0x7fff + ((bits >> 16) & 1);
    (bits.wrapping_add(round) >> 16) as u16
}

/// bfloat16 -> binary32 by left shift with zero padding in the low 16 bits.
#[inline]
pub fn bf16_to_f32_zeropad(b: u16) -> u32 {
    (b as u32) << 16
}

/// bfloat16 -> binary32 with the 16 stored bits replicated into the low
/// half, which statistically centers the truncation error.
#[inline]
pub fn bf16_to_f32_replicate(b: u16) -> u32 {
    ((b as u32) << 16) | b as u32
}

/// binary16 -> bfloat8 by truncation: keep the upper 8 bits.
#[inline]
pub fn f16_to_bf8(h: u16) -> u8 {
    (h >> 8) as u8
}

/// bfloat8 -> binary16 by left shift with zero padding.
#[inline]
pub fn bf8_to_f16(b: u8) -> u16 {
    (b as u16) << 8
}

/// Numeric value of a bfloat16 pattern. Subnormals decode as (signed) zero;
/// NaN patterns pass through untouched.
#[inline]
pub fn bf16_value(b: u16) -> f32 {
    if b & 0x7f80 == 0 {
        return f32::from_bits((b as u32 & 0x8000) << 16);
    }
    f32::from_bits((b as u32) << 16)
}

/// How the low 16 bits are filled when expanding bfloat16 to binary32.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fill {
    ZeroPad,
    Replicate,
}

impl Fill {
    #[inline]
    pub fn decompress(self, b: u16) -> u32 {
        match self {
            Fill::ZeroPad => bf16_to_f32_zeropad(b),
            Fill::Replicate => bf16_to_f32_replicate(b),
        }
    }

    /// The widening-multiply constant that realizes this fill in-register:
    /// `b * 0x10000` zero-pads, `b * 0x10001` replicates.
    #[inline]
    pub fn multiplier(self) -> u32 {
        match self {
            Fill::ZeroPad => 0x1_0000,
            Fill::Replicate => 0x1_0001,
        }
    }
}

impl fmt::Display for Fill {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fill::ZeroPad => write!(f, "zeropad"),
            Fill::Replicate => write!(f, "replicate"),
        }
    }
}

impl FromStr for Fill {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zeropad" => Ok(Fill::ZeroPad),
            "replicate" => Ok(Fill::Replicate),
            other => Err(format!("unknown fill mode `{other}`")),
        }
    }
}

/// |x - y| / |x|. Undefined for x = 0.
pub fn relative_error(x: f64, y: f64) -> Result<f64, FormatError> {
    if x == 0.0 {
        return Err(FormatError::ZeroReference);
    }
    Ok((x - y).abs() / x.abs())
}

/// Distribution the accuracy experiment samples binary32 values from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampler {
    /// Standard normal.
    Normal,
    /// Uniform in [-1, 1).
    Uniform,
}

impl Sampler {
    /// Draw one finite, nonzero, normal (non-subnormal) binary32 value.
    fn draw(self, rng: &mut ChaCha8Rng) -> f32 {
        loop {
            let x: f32 = match self {
                Sampler::Normal => {
                    let v: f64 = rng.sample(StandardNormal);
                    v as f32
                }
                Sampler::Uniform => rng.gen_range(-1.0f32..1.0),
            };
            if x.is_normal() {
                return x;
            }
        }
    }
}

impl fmt::Display for Sampler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sampler::Normal => write!(f, "normal"),
            Sampler::Uniform => write!(f, "uniform"),
        }
    }
}

impl FromStr for Sampler {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normal" => Ok(Sampler::Normal),
            "uniform" => Ok(Sampler::Uniform),
            other => Err(format!("unknown sampler `{other}`")),
        }
    }
}

/// Histogram of round-trip relative errors for one decompression mode.
#[derive(Debug, Clone)]
pub struct ErrorHistogram {
    pub mode: Fill,
    pub sampler: Sampler,
    pub n: u64,
    pub seed: u64,
    /// bins + 1 monotone edges; the last bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub mean: f64,
}

/// Upper bound on the round-trip relative error of a normal binary32 value:
/// at most 2^16 - 1 units are dropped from a 23-bit fraction of a
/// significand that is at least 1.
pub const BF16_RELATIVE_ERROR_BOUND: f64 = 1.0 / 128.0;

/// Sample `n` binary32 values, round-trip them through bfloat16 with the
/// given fill mode, and histogram the relative errors over
/// [0, 2^-7]. Deterministic for a given seed.
pub fn error_density(
    mode: Fill,
    sampler: Sampler,
    n: u64,
    bins: usize,
    seed: u64,
) -> Result<ErrorHistogram, FormatError> {
    if n == 0 {
        return Err(FormatError::EmptySample);
    }
    if bins == 0 {
        return Err(FormatError::EmptyBins);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = BF16_RELATIVE_ERROR_BOUND / bins as f64;
    let mut counts = vec![0u64; bins];
    let mut sum = 0.0f64;
    for _ in 0..n {
        let x = sampler.draw(&mut rng);
        let y = f32::from_bits(mode.decompress(f32_to_bf16_trunc(x.to_bits())));
        let err = relative_error(x as f64, y as f64).expect("sampler yields nonzero values");
        sum += err;
        let idx = ((err / width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let edges = (0..=bins).map(|i| i as f64 * width).collect();
    Ok(ErrorHistogram {
        mode,
        sampler,
        n,
        seed,
        edges,
        counts,
        mean: sum / n as f64,
    })
}

impl ErrorHistogram {
    /// CSV export: `bin_lo,bin_hi,count` rows under a comment header that
    /// pins mode, sampler, sample count and seed.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "# mode={} sampler={} n={} seed={}",
            self.mode, self.sampler, self.n, self.seed
        )?;
        writeln!(w, "bin_lo,bin_hi,count")?;
        for (i, count) in self.counts.iter().enumerate() {
            writeln!(w, "{},{},{}", self.edges[i], self.edges[i + 1], count)?;
        }
        Ok(())
    }
}
