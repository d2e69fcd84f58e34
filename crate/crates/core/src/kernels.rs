//! GEMM programs for the virtual vector machine, plus scalar oracles.
//!
//! Both kernels compute C = A x B with the row-broadcast formulation: each
//! element of a row of A is broadcast as a scalar and multiply-accumulated
//! against a full row of B, so B and C stream through vector registers while
//! A stays in scalar code. Rows of B and C are strip-mined into chunks of
//! VLEN/32 elements in both variants, which keeps the number of memory
//! instructions identical; the compressed variant simply moves half the
//! bytes per instruction and widens in place.
//!
//! Compressed storage is bfloat16 obtained by truncating binary32. Loads are
//! widened with a scalar multiply (2^16 for zero padding, 65537 to replicate
//! the stored half) and results are narrowed back with a 16-bit right shift,
//! so compression and decompression never leave the register file.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::formats::{f32_to_bf16_trunc, Fill};
use crate::vvm::{execute, Fault, Instr, MachineShape, TraceRecord, VvmError, VvmState};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("dimension mismatch: {a_rows}x{a_cols} times {b_rows}x{b_cols}")]
    DimMismatch {
        a_rows: usize,
        a_cols: usize,
        b_rows: usize,
        b_cols: usize,
    },
    #[error("kernel needs {needed} accumulator registers but only {available} are free")]
    TooManyStrips { needed: usize, available: usize },
    #[error("reps must be positive")]
    ZeroReps,
    #[error(transparent)]
    Machine(#[from] VvmError),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("{path}: bad matrix file: {msg}")]
    BadMatrixFile { path: String, msg: String },
}

/// Dense row-major binary32 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

const MATRIX_MAGIC: &[u8; 4] = b"VMAT";

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self, KernelError> {
        if rows == 0 || cols == 0 {
            return Err(KernelError::EmptyMatrix { rows, cols });
        }
        Ok(Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        })
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self, KernelError> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(KernelError::EmptyMatrix { rows, cols });
        }
        Ok(Self { rows, cols, data })
    }

    /// Deterministic pseudo-random matrix with entries uniform in [-1, 1).
    pub fn random(rows: usize, cols: usize, seed: u64) -> Result<Self, KernelError> {
        let mut m = Self::zeros(rows, cols)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for v in &mut m.data {
            *v = rng.gen_range(-1.0f32..1.0);
        }
        Ok(m)
    }

    pub fn identity(n: usize) -> Result<Self, KernelError> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f32) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Binary file layout: `VMAT` magic, rows, cols and element width as
    /// little-endian u32 (16 header bytes), then row-major elements. Width 4
    /// stores binary32 bits; width 2 stores truncated bfloat16 halves, which
    /// are zero-padded back on load.
    pub fn write_file(&self, path: &Path, width: u32) -> Result<(), KernelError> {
        let bad = |msg: &str| KernelError::BadMatrixFile {
            path: path.display().to_string(),
            msg: msg.to_string(),
        };
        if width != 2 && width != 4 {
            return Err(bad("element width must be 2 or 4"));
        }
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MATRIX_MAGIC)?;
        w.write_all(&(self.rows as u32).to_le_bytes())?;
        w.write_all(&(self.cols as u32).to_le_bytes())?;
        w.write_all(&width.to_le_bytes())?;
        for v in &self.data {
            if width == 4 {
                w.write_all(&v.to_bits().to_le_bytes())?;
            } else {
                w.write_all(&f32_to_bf16_trunc(v.to_bits()).to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self, KernelError> {
        let bad = |msg: String| KernelError::BadMatrixFile {
            path: path.display().to_string(),
            msg,
        };
        let mut r = BufReader::new(File::open(path)?);
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|e| bad(format!("short header: {e}")))?;
        if &header[..4] != MATRIX_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
        let width = u32::from_le_bytes(header[12..16].try_into().unwrap());
        if rows == 0 || cols == 0 {
            return Err(bad(format!("degenerate shape {rows}x{cols}")));
        }
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| bad("shape overflow".into()))?;
        let mut body = Vec::new();
        r.read_to_end(&mut body)?;
        let expect = count * width as usize;
        if body.len() != expect {
            return Err(bad(format!("expected {expect} data bytes, got {}", body.len())));
        }
        let data = match width {
            4 => body
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
            2 => body
                .chunks_exact(2)
                .map(|c| {
                    let half = u16::from_le_bytes(c.try_into().unwrap());
                    f32::from_bits((half as u32) << 16)
                })
                .collect(),
            other => return Err(bad(format!("unsupported element width {other}"))),
        };
        Ok(Self { rows, cols, data })
    }
}

/// Kernel shape parameters shared by both variants.
#[derive(Debug, Clone, Copy)]
pub struct KernelSpec {
    /// Square matrix dimension.
    pub n: usize,
    pub vlen_bits: u32,
    /// Low-half fill used when widening compressed operands.
    pub fill: Fill,
    /// How many times the whole kernel body is repeated. Repetitions reuse
    /// the warmed cache state in the timing simulator, mirroring a kernel
    /// invoked more than once on resident data.
    pub reps: u32,
}

impl KernelSpec {
    pub fn new(n: usize, vlen_bits: u32, fill: Fill) -> Self {
        Self {
            n,
            vlen_bits,
            fill,
            reps: 1,
        }
    }

    /// Elements per strip: one full 32-bit register's worth in both
    /// variants, so compressed loads fill only the low half of a register.
    pub fn strip_elems(&self) -> usize {
        self.vlen_bits as usize / 32
    }
}

// Register allocation. Accumulators grow upward from v8, one per strip.
const REG_LOAD16: u8 = 1;
const REG_WIDE: u8 = 2;
const REG_PACK: u8 = 3;
const REG_ACC0: u8 = 8;

/// A kernel instance ready to execute: machine state with the B operand
/// placed in memory, and the instruction sequence.
pub struct GemmRun {
    pub state: VvmState,
    pub program: Vec<Instr>,
    pub n: usize,
    pub base_b: u64,
    pub base_c: u64,
    pub compressed: bool,
}

impl GemmRun {
    pub fn run(&mut self) -> Result<Vec<TraceRecord>, Fault> {
        execute(&mut self.state, &self.program)
    }

    /// Read the binary32 result matrix (uncompressed kernel).
    pub fn read_c_f32(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n).unwrap();
        let mem = self.state.mem();
        for idx in 0..self.n * self.n {
            let off = self.base_c as usize + 4 * idx;
            m.data[idx] = f32::from_le_bytes(mem[off..off + 4].try_into().unwrap());
        }
        m
    }

    /// Read the bfloat16 result payloads (compressed kernel).
    pub fn read_c_bf16(&self) -> Vec<u16> {
        let mem = self.state.mem();
        (0..self.n * self.n)
            .map(|idx| {
                let off = self.base_c as usize + 2 * idx;
                u16::from_le_bytes(mem[off..off + 2].try_into().unwrap())
            })
            .collect()
    }
}

fn align_up(x: usize, a: usize) -> usize {
    (x + a - 1) / a * a
}

/// Tracks the architectural (vl, sew) pair so `vsetvli` is emitted only when
/// the configuration actually changes, as a compiler would.
struct Emitter {
    program: Vec<Instr>,
    cfg: Option<(u64, u32)>,
}

impl Emitter {
    fn new() -> Self {
        Self {
            program: Vec::new(),
            cfg: None,
        }
    }

    fn set(&mut self, avl: u64, sew: u32) {
        if self.cfg != Some((avl, sew)) {
            self.program.push(Instr::Vsetvli { avl, sew });
            self.cfg = Some((avl, sew));
        }
    }

    fn push(&mut self, i: Instr) {
        self.program.push(i);
    }
}

fn strip_layout(spec: &KernelSpec) -> Result<Vec<(usize, usize)>, KernelError> {
    let chunk = spec.strip_elems();
    let strips: Vec<(usize, usize)> = (0..spec.n)
        .step_by(chunk)
        .map(|off| (off, chunk.min(spec.n - off)))
        .collect();
    let available = (crate::vvm::NUM_VREGS - REG_ACC0) as usize;
    if strips.len() > available {
        return Err(KernelError::TooManyStrips {
            needed: strips.len(),
            available,
        });
    }
    Ok(strips)
}

fn check_spec(spec: &KernelSpec, a: &Matrix, b: &Matrix) -> Result<(), KernelError> {
    if spec.reps == 0 {
        return Err(KernelError::ZeroReps);
    }
    if a.rows != spec.n || a.cols != spec.n || b.rows != spec.n || b.cols != spec.n {
        return Err(KernelError::DimMismatch {
            a_rows: a.rows,
            a_cols: a.cols,
            b_rows: b.rows,
            b_cols: b.cols,
        });
    }
    Ok(())
}

const BASE_B: usize = 0x1000;

/// Build the binary32 reference kernel. B lives in memory as binary32; each
/// A element costs one scalar load per use.
pub fn prepare_uncompressed(
    spec: &KernelSpec,
    a: &Matrix,
    b: &Matrix,
) -> Result<GemmRun, KernelError> {
    check_spec(spec, a, b)?;
    let strips = strip_layout(spec)?;
    let n = spec.n;
    let base_c = align_up(BASE_B + 4 * n * n, 4096);
    let mem_bytes = align_up(base_c + 4 * n * n, 4096);
    let shape = MachineShape::new(spec.vlen_bits)?;
    let mut state = VvmState::new(shape, mem_bytes);
    for (idx, v) in b.data.iter().enumerate() {
        let off = BASE_B + 4 * idx;
        state.mem_mut()[off..off + 4].copy_from_slice(&v.to_bits().to_le_bytes());
    }

    let mut e = Emitter::new();
    for _ in 0..spec.reps {
        for i in 0..n {
            for (s, (_, len)) in strips.iter().enumerate() {
                e.set(*len as u64, 32);
                e.push(Instr::VfmvSplat {
                    dst: REG_ACC0 + s as u8,
                    scalar: 0.0,
                });
            }
            for k in 0..n {
                // One scalar load to fetch a[i][k].
                e.push(Instr::ScalarOps(1));
                let a_ik = a.get(i, k);
                for (s, (off, len)) in strips.iter().enumerate() {
                    e.set(*len as u64, 32);
                    e.push(Instr::Vle {
                        width: 32,
                        dst: REG_WIDE,
                        base: (BASE_B + 4 * (k * n + off)) as u64,
                    });
                    e.push(Instr::VfmaccSc {
                        acc: REG_ACC0 + s as u8,
                        scalar: a_ik,
                        src: REG_WIDE,
                    });
                }
            }
            for (s, (off, len)) in strips.iter().enumerate() {
                e.set(*len as u64, 32);
                e.push(Instr::Vse {
                    width: 32,
                    src: REG_ACC0 + s as u8,
                    base: (base_c + 4 * (i * n + off)) as u64,
                });
            }
        }
    }
    Ok(GemmRun {
        state,
        program: e.program,
        n,
        base_b: BASE_B as u64,
        base_c: base_c as u64,
        compressed: false,
    })
}

/// Build the compressed kernel. B and C live in memory as truncated
/// bfloat16; operands are widened in the register file right after each
/// load and results narrowed right before each store.
pub fn prepare_compressed(
    spec: &KernelSpec,
    a: &Matrix,
    b: &Matrix,
) -> Result<GemmRun, KernelError> {
    check_spec(spec, a, b)?;
    let strips = strip_layout(spec)?;
    let n = spec.n;
    let base_c = align_up(BASE_B + 2 * n * n, 4096);
    let mem_bytes = align_up(base_c + 2 * n * n, 4096);
    let shape = MachineShape::new(spec.vlen_bits)?;
    let mut state = VvmState::new(shape, mem_bytes);
    for (idx, v) in b.data.iter().enumerate() {
        let off = BASE_B + 2 * idx;
        let half = f32_to_bf16_trunc(v.to_bits());
        state.mem_mut()[off..off + 2].copy_from_slice(&half.to_le_bytes());
    }
    let mult = spec.fill.multiplier();

    let mut e = Emitter::new();
    for _ in 0..spec.reps {
        for i in 0..n {
            for (s, (_, len)) in strips.iter().enumerate() {
                e.set(*len as u64, 32);
                e.push(Instr::VfmvSplat {
                    dst: REG_ACC0 + s as u8,
                    scalar: 0.0,
                });
            }
            for k in 0..n {
                // Two scalar ops: load the half-width a[i][k] and widen it.
                e.push(Instr::ScalarOps(2));
                let a_half = f32_to_bf16_trunc(a.get(i, k).to_bits());
                let a_ik = f32::from_bits(spec.fill.decompress(a_half));
                for (s, (off, len)) in strips.iter().enumerate() {
                    e.set(*len as u64, 16);
                    e.push(Instr::Vle {
                        width: 16,
                        dst: REG_LOAD16,
                        base: (BASE_B + 2 * (k * n + off)) as u64,
                    });
                    e.push(Instr::VwmuluSc {
                        dst: REG_WIDE,
                        src: REG_LOAD16,
                        scalar: mult,
                    });
                    e.set(*len as u64, 32);
                    e.push(Instr::VfmaccSc {
                        acc: REG_ACC0 + s as u8,
                        scalar: a_ik,
                        src: REG_WIDE,
                    });
                }
            }
            for (s, (off, len)) in strips.iter().enumerate() {
                e.set(*len as u64, 16);
                e.push(Instr::VnsrlImm {
                    dst: REG_PACK,
                    src: REG_ACC0 + s as u8,
                    shamt: 16,
                });
                e.push(Instr::Vse {
                    width: 16,
                    src: REG_PACK,
                    base: (base_c + 2 * (i * n + off)) as u64,
                });
            }
        }
    }
    Ok(GemmRun {
        state,
        program: e.program,
        n,
        base_b: BASE_B as u64,
        base_c: base_c as u64,
        compressed: true,
    })
}

/// Scalar oracle for the binary32 kernel. Accumulation order and operations
/// (one multiply, one add per term) mirror the vector kernel exactly, so
/// results must match bit for bit.
pub fn oracle_uncompressed(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows;
    let mut c = Matrix::zeros(n, n).unwrap();
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0f32;
            for k in 0..n {
                acc = acc + a.get(i, k) * b.get(k, j);
            }
            c.data[i * n + j] = acc;
        }
    }
    c
}

/// Scalar oracle for the compressed kernel: truncate both operands to
/// bfloat16, widen with the chosen fill, accumulate in binary32 in the same
/// order as the vector kernel, truncate the result.
pub fn oracle_compressed(a: &Matrix, b: &Matrix, fill: Fill) -> Vec<u16> {
    let n = a.rows;
    let mut c = vec![0u16; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0f32;
            for k in 0..n {
                let a_w = f32::from_bits(fill.decompress(f32_to_bf16_trunc(a.get(i, k).to_bits())));
                let b_w = f32::from_bits(fill.decompress(f32_to_bf16_trunc(b.get(k, j).to_bits())));
                acc = acc + a_w * b_w;
            }
            c[i * n + j] = f32_to_bf16_trunc(acc.to_bits());
        }
    }
    c
}

/// Per-mnemonic instruction counts and aggregate traffic for a trace.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Census {
    pub counts: std::collections::BTreeMap<crate::vvm::Mnemonic, u64>,
    pub loaded_bytes: u64,
    pub stored_bytes: u64,
    pub scalar_ops: u64,
}

impl Census {
    pub fn total_instructions(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn memory_bytes(&self) -> u64 {
        self.loaded_bytes + self.stored_bytes
    }

    pub fn count(&self, m: crate::vvm::Mnemonic) -> u64 {
        self.counts.get(&m).copied().unwrap_or(0)
    }
}

pub fn instruction_census(trace: &[TraceRecord]) -> Census {
    let mut census = Census::default();
    for rec in trace {
        *census.counts.entry(rec.mnemonic).or_insert(0) += 1;
        if rec.mnemonic.is_load() {
            census.loaded_bytes += rec.bytes as u64;
        } else if rec.mnemonic.is_store() {
            census.stored_bytes += rec.bytes as u64;
        }
        census.scalar_ops += rec.scalar_ops as u64;
    }
    census
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vvm::Mnemonic;
    use proptest::prelude::*;

    fn spec(n: usize, vlen: u32, fill: Fill) -> KernelSpec {
        KernelSpec::new(n, vlen, fill)
    }

    #[test]
    fn uncompressed_matches_oracle_bit_exact() {
        for &n in &[4usize, 8, 96, 128] {
            for &vlen in &[4096u32, 16384] {
                let a = Matrix::random(n, n, 7 + n as u64).unwrap();
                let b = Matrix::random(n, n, 1000 + n as u64).unwrap();
                let mut run = prepare_uncompressed(&spec(n, vlen, Fill::ZeroPad), &a, &b).unwrap();
                run.run().unwrap();
                let got = run.read_c_f32();
                let want = oracle_uncompressed(&a, &b);
                for (g, w) in got.data().iter().zip(want.data()) {
                    assert_eq!(g.to_bits(), w.to_bits(), "n={n} vlen={vlen}");
                }
            }
        }
    }

    #[test]
    fn compressed_matches_oracle_bit_exact() {
        for &fill in &[Fill::ZeroPad, Fill::Replicate] {
            for &n in &[4usize, 8, 96] {
                let a = Matrix::random(n, n, 21).unwrap();
                let b = Matrix::random(n, n, 22).unwrap();
                let mut run = prepare_compressed(&spec(n, 4096, fill), &a, &b).unwrap();
                run.run().unwrap();
                assert_eq!(run.read_c_bf16(), oracle_compressed(&a, &b, fill), "n={n} {fill:?}");
            }
        }
    }

    #[test]
    fn identity_times_b_with_zeropad_reproduces_compressed_b() {
        // With A = I and zero-pad fill, each output row is exactly one
        // bfloat16 row of B: 1.0 survives truncation and multiplying by a
        // zero-padded half is exact in binary32.
        let n = 16;
        let a = Matrix::identity(n).unwrap();
        let b = Matrix::random(n, n, 5).unwrap();
        let mut run = prepare_compressed(&spec(n, 4096, Fill::ZeroPad), &a, &b).unwrap();
        run.run().unwrap();
        let want: Vec<u16> = b
            .data()
            .iter()
            .map(|v| f32_to_bf16_trunc(v.to_bits()))
            .collect();
        assert_eq!(run.read_c_bf16(), want);
    }

    #[test]
    fn compressed_halves_traffic_with_equal_memory_instruction_counts() {
        for &(n, vlen) in &[(8usize, 4096u32), (64, 4096), (96, 16384)] {
            let a = Matrix::random(n, n, 1).unwrap();
            let b = Matrix::random(n, n, 2).unwrap();
            let mut ru = prepare_uncompressed(&spec(n, vlen, Fill::ZeroPad), &a, &b).unwrap();
            let mut rc = prepare_compressed(&spec(n, vlen, Fill::ZeroPad), &a, &b).unwrap();
            let cu = instruction_census(&ru.run().unwrap());
            let cc = instruction_census(&rc.run().unwrap());
            assert_eq!(
                cu.count(Mnemonic::Vle32),
                cc.count(Mnemonic::Vle16),
                "load count n={n}"
            );
            assert_eq!(cu.count(Mnemonic::Vse32), cc.count(Mnemonic::Vse16));
            assert_eq!(cc.loaded_bytes * 2, cu.loaded_bytes);
            assert_eq!(cc.stored_bytes * 2, cu.stored_bytes);
            assert_eq!(cc.memory_bytes() * 2, cu.memory_bytes());
        }
    }

    #[test]
    fn compressed_emits_more_vsetvli() {
        let n = 16;
        let a = Matrix::random(n, n, 1).unwrap();
        let b = Matrix::random(n, n, 2).unwrap();
        let mut ru = prepare_uncompressed(&spec(n, 4096, Fill::ZeroPad), &a, &b).unwrap();
        let mut rc = prepare_compressed(&spec(n, 4096, Fill::ZeroPad), &a, &b).unwrap();
        let cu = instruction_census(&ru.run().unwrap());
        let cc = instruction_census(&rc.run().unwrap());
        assert!(cc.count(Mnemonic::Vsetvli) > cu.count(Mnemonic::Vsetvli));
        // The reference kernel never changes configuration after the first.
        assert_eq!(cu.count(Mnemonic::Vsetvli), 1);
    }

    #[test]
    fn reps_scale_the_trace_without_changing_results() {
        let n = 8;
        let a = Matrix::random(n, n, 3).unwrap();
        let b = Matrix::random(n, n, 4).unwrap();
        let mut s2 = spec(n, 4096, Fill::Replicate);
        s2.reps = 2;
        let mut r1 = prepare_compressed(&spec(n, 4096, Fill::Replicate), &a, &b).unwrap();
        let mut r2 = prepare_compressed(&s2, &a, &b).unwrap();
        let t1 = r1.run().unwrap();
        let t2 = r2.run().unwrap();
        assert_eq!(t2.len(), 2 * t1.len());
        assert_eq!(r1.read_c_bf16(), r2.read_c_bf16());
    }

    #[test]
    fn matrix_file_round_trip_f32() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vmat");
        let m = Matrix::random(5, 7, 9).unwrap();
        m.write_file(&path, 4).unwrap();
        assert_eq!(Matrix::read_file(&path).unwrap(), m);
    }

    #[test]
    fn matrix_file_bf16_truncates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vmat");
        let m = Matrix::random(3, 3, 9).unwrap();
        m.write_file(&path, 2).unwrap();
        let back = Matrix::read_file(&path).unwrap();
        for (orig, got) in m.data().iter().zip(back.data()) {
            assert_eq!(
                got.to_bits(),
                (f32_to_bf16_trunc(orig.to_bits()) as u32) << 16
            );
        }
    }

    #[test]
    fn matrix_file_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.vmat");
        std::fs::write(&path, b"NOPE0000000000000000").unwrap();
        assert!(matches!(
            Matrix::read_file(&path),
            Err(KernelError::BadMatrixFile { .. })
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let a = Matrix::random(4, 4, 1).unwrap();
        let b = Matrix::random(8, 8, 2).unwrap();
        assert!(matches!(
            prepare_uncompressed(&spec(4, 4096, Fill::ZeroPad), &a, &b),
            Err(KernelError::DimMismatch { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn kernels_agree_for_random_shapes(n in 1usize..24, seed in 0u64..1000) {
            let a = Matrix::random(n, n, seed).unwrap();
            let b = Matrix::random(n, n, seed ^ 0xdead).unwrap();
            let mut ru = prepare_uncompressed(&spec(n, 4096, Fill::ZeroPad), &a, &b).unwrap();
            ru.run().unwrap();
            let want = oracle_uncompressed(&a, &b);
            for (g, w) in ru.read_c_f32().data().iter().zip(want.data()) {
                prop_assert_eq!(g.to_bits(), w.to_bits());
            }
            let mut rc = prepare_compressed(&spec(n, 4096, Fill::Replicate), &a, &b).unwrap();
            rc.run().unwrap();
            prop_assert_eq!(rc.read_c_bf16(), oracle_compressed(&a, &b, Fill::Replicate));
        }
    }
}
