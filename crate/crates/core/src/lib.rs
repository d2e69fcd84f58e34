//! In-register compression/decompression study kit for vector CPUs.
//!
//! The crate bundles five pieces:
//!
//! - [`formats`]: bit-exact codecs for bfloat16, bfloat8 and posit, plus
//!   conversion-error measurement.
//! - [`vvm`]: a vector-length-agnostic virtual vector machine that executes
//!   the small instruction subset the kernels need and emits a
//!   committed-instruction trace.
//! - [`kernels`]: compressed (bfloat16 storage, binary32 compute) and
//!   uncompressed GEMM programs for the vvm, with scalar oracles.
//! - [`timing`]: a trace-driven timing simulator (L1 + memory + ROB overlap)
//!   computing cycle counts and the improvement metric.
//! - [`sweep`]: parameter-sweep engine over architectural configurations.

pub mod formats;
pub mod kernels;
pub mod sweep;
pub mod timing;
pub mod vvm;
