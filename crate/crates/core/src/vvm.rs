//! Vector-length-agnostic virtual vector machine.
//!
//! Executes the small instruction subset the GEMM kernels need, in order and
//! purely functionally, and emits one [`TraceRecord`] per committed vector
//! instruction. All out-of-order effects live in the timing simulator; the
//! machine here only defines architectural state transitions.
//!
//! Scalar code between vector instructions is not executed; it is modeled as
//! an annotation count folded into the next record's `scalar_ops` field.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use thiserror::Error;

pub const NUM_VREGS: u8 = 32;

/// Vector register file geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineShape {
    vlen_bits: u32,
}

impl MachineShape {
    /// The paper experiments use 4096, 8192 and 16384 bits; any multiple of
    /// 64 is accepted.
    pub fn new(vlen_bits: u32) -> Result<Self, VvmError> {
        if vlen_bits == 0 || vlen_bits % 64 != 0 {
            return Err(VvmError::BadVlen { vlen_bits });
        }
        Ok(Self { vlen_bits })
    }

    pub fn vlen_bits(&self) -> u32 {
        self.vlen_bits
    }

    pub fn vlen_bytes(&self) -> usize {
        self.vlen_bits as usize / 8
    }

    /// Maximum element count for a given element width.
    pub fn vlmax(&self, sew: u32) -> u32 {
        self.vlen_bits / sew
    }
}

pub const SUPPORTED_SEW: [u32; 4] = [8, 16, 32, 64];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VvmError {
    #[error("vlen_bits must be a positive multiple of 64, got {vlen_bits}")]
    BadVlen { vlen_bits: u32 },
    #[error("unsupported element width {sew}")]
    UnsupportedSew { sew: u32 },
    #[error("register v{reg} out of range")]
    BadRegister { reg: u8 },
    #[error("memory access [{base:#x}, {base:#x}+{len}) out of bounds (memory is {mem} bytes)")]
    OutOfBounds { base: u64, len: u64, mem: usize },
    #[error("operation requires sew {required}, active sew is {active}")]
    SewMismatch { required: u32, active: u32 },
    #[error("vl {vl} x 32-bit results exceed the {vlen_bits}-bit register")]
    WideningOverflow { vl: u32, vlen_bits: u32 },
    #[error("shift amount {shamt} must be below 32")]
    BadShift { shamt: u32 },
}

/// An execution fault, located at the offending instruction.
#[derive(Debug, Error, PartialEq, Eq)]
#[error("fault at instruction {index}: {cause}")]
pub struct Fault {
    pub index: usize,
    pub cause: VvmError,
}

/// The instruction subset. Scalar operands are immediates baked into the
/// program; `ScalarOps` is an annotation, not an executed instruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Instr {
    /// Set vl = min(avl, VLEN/sew) and the active element width.
    Vsetvli { avl: u64, sew: u32 },
    /// Unit-stride load of vl elements of `width` bits from `base`.
    Vle { width: u32, dst: u8, base: u64 },
    /// Unit-stride store of vl elements of `width` bits to `base`.
    Vse { width: u32, src: u8, base: u64 },
    /// Widening unsigned multiply by a full 32-bit scalar: each 16-bit
    /// element is zero-extended and multiplied; dst holds vl 32-bit results.
    VwmuluSc { dst: u8, src: u8, scalar: u32 },
    /// Narrowing logical shift right: each 32-bit source element is shifted
    /// by `shamt` and truncated to 16 bits.
    VnsrlImm { dst: u8, src: u8, shamt: u32 },
    /// acc[i] <- acc[i] + scalar * src[i], IEEE binary32.
    VfmaccSc { acc: u8, scalar: f32, src: u8 },
    /// Broadcast a binary32 scalar into the first vl elements.
    VfmvSplat { dst: u8, scalar: f32 },
    /// Annotation: this many scalar instructions ran since the previous
    /// vector instruction.
    ScalarOps(u32),
}

/// Committed-instruction mnemonics as they appear in traces. Loads and
/// stores are split by element width so the timing simulator can attribute
/// compressed and uncompressed phases without re-deriving widths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mnemonic {
    Vsetvli,
    Vle16,
    Vle32,
    Vse16,
    Vse32,
    VwmuluSc,
    VnsrlImm,
    VfmaccSc,
    VfmvSplat,
}

impl Mnemonic {
    pub const ALL: [Mnemonic; 9] = [
        Mnemonic::Vsetvli,
        Mnemonic::Vle16,
        Mnemonic::Vle32,
        Mnemonic::Vse16,
        Mnemonic::Vse32,
        Mnemonic::VwmuluSc,
        Mnemonic::VnsrlImm,
        Mnemonic::VfmaccSc,
        Mnemonic::VfmvSplat,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mnemonic::Vsetvli => "vsetvli",
            Mnemonic::Vle16 => "vle16",
            Mnemonic::Vle32 => "vle32",
            Mnemonic::Vse16 => "vse16",
            Mnemonic::Vse32 => "vse32",
            Mnemonic::VwmuluSc => "vwmulu_sc",
            Mnemonic::VnsrlImm => "vnsrl_imm",
            Mnemonic::VfmaccSc => "vfmacc_sc",
            Mnemonic::VfmvSplat => "vfmv_splat",
        }
    }

    pub fn is_load(&self) -> bool {
        matches!(self, Mnemonic::Vle16 | Mnemonic::Vle32)
    }

    pub fn is_store(&self) -> bool {
        matches!(self, Mnemonic::Vse16 | Mnemonic::Vse32)
    }

    pub fn is_memory(&self) -> bool {
        self.is_load() || self.is_store()
    }
}

impl fmt::Display for Mnemonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mnemonic {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mnemonic::ALL
            .iter()
            .find(|m| m.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown mnemonic `{s}`"))
    }
}

/// One committed vector instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub seq: u32,
    pub mnemonic: Mnemonic,
    /// Element width the instruction operated on.
    pub sew: u32,
    pub vl: u32,
    /// Bytes transferred for memory ops (vl * sew / 8), zero otherwise.
    pub bytes: u32,
    /// Base address for memory ops, zero otherwise.
    pub base: u64,
    pub dst: Option<u8>,
    srcs: [u8; 2],
    nsrcs: u8,
    pub scalar_ops: u32,
}

impl TraceRecord {
    pub fn srcs(&self) -> &[u8] {
        &self.srcs[..self.nsrcs as usize]
    }
}

/// Architectural state: 32 vector registers of VLEN bits, the active
/// (vl, sew) pair, and a flat byte-addressable memory.
pub struct VvmState {
    shape: MachineShape,
    vregs: Vec<u8>,
    vl: u32,
    sew: u32,
    mem: Vec<u8>,
}

impl VvmState {
    pub fn new(shape: MachineShape, mem_bytes: usize) -> Self {
        Self {
            shape,
            vregs: vec![0; shape.vlen_bytes() * NUM_VREGS as usize],
            vl: 0,
            sew: 32,
            mem: vec![0; mem_bytes],
        }
    }

    pub fn shape(&self) -> MachineShape {
        self.shape
    }

    pub fn vl(&self) -> u32 {
        self.vl
    }

    pub fn sew(&self) -> u32 {
        self.sew
    }

    pub fn mem(&self) -> &[u8] {
        &self.mem
    }

    pub fn mem_mut(&mut self) -> &mut [u8] {
        &mut self.mem
    }

    fn check_reg(reg: u8) -> Result<(), VvmError> {
        if reg >= NUM_VREGS {
            return Err(VvmError::BadRegister { reg });
        }
        Ok(())
    }

    fn reg_range(&self, reg: u8) -> std::ops::Range<usize> {
        let bytes = self.shape.vlen_bytes();
        reg as usize * bytes..(reg as usize + 1) * bytes
    }

    /// Lower vl elements of a register viewed as 16-bit values.
    pub fn reg_u16(&self, reg: u8, count: usize) -> Vec<u16> {
        let r = self.reg_range(reg);
        self.vregs[r]
            .chunks_exact(2)
            .take(count)
            .map(|c| u16::from_le_bytes([c[0], c[1]]))
            .collect()
    }

    /// Lower vl elements of a register viewed as 32-bit values.
    pub fn reg_u32(&self, reg: u8, count: usize) -> Vec<u32> {
        let r = self.reg_range(reg);
        self.vregs[r]
            .chunks_exact(4)
            .take(count)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect()
    }

    fn check_mem(&self, base: u64, len: u64) -> Result<(), VvmError> {
        if base.checked_add(len).map_or(true, |end| end > self.mem.len() as u64) {
            return Err(VvmError::OutOfBounds {
                base,
                len,
                mem: self.mem.len(),
            });
        }
        Ok(())
    }

    fn step(&mut self, instr: &Instr) -> Result<TraceRecord, VvmError> {
        // seq and scalar_ops are filled in by the driver loop.
        let mut rec = TraceRecord {
            seq: 0,
            mnemonic: Mnemonic::Vsetvli,
            sew: self.sew,
            vl: self.vl,
            bytes: 0,
            base: 0,
            dst: None,
            srcs: [0; 2],
            nsrcs: 0,
            scalar_ops: 0,
        };
        match *instr {
            Instr::Vsetvli { avl, sew } => {
                if !SUPPORTED_SEW.contains(&sew) {
                    return Err(VvmError::UnsupportedSew { sew });
                }
                self.sew = sew;
                self.vl = (avl.min(self.shape.vlmax(sew) as u64)) as u32;
                rec.mnemonic = Mnemonic::Vsetvli;
                rec.sew = sew;
                rec.vl = self.vl;
            }
            Instr::Vle { width, dst, base } => {
                Self::check_reg(dst)?;
                if width != 16 && width != 32 {
                    return Err(VvmError::UnsupportedSew { sew: width });
                }
                let bytes = self.vl as u64 * width as u64 / 8;
                self.check_mem(base, bytes)?;
                let r = self.reg_range(dst).start;
                self.vregs[r..r + bytes as usize]
                    .copy_from_slice(&self.mem[base as usize..(base + bytes) as usize]);
                rec.mnemonic = if width == 16 { Mnemonic::Vle16 } else { Mnemonic::Vle32 };
                rec.sew = width;
                rec.bytes = bytes as u32;
                rec.base = base;
                rec.dst = Some(dst);
            }
            Instr::Vse { width, src, base } => {
                Self::check_reg(src)?;
                if width != 16 && width != 32 {
                    return Err(VvmError::UnsupportedSew { sew: width });
                }
                let bytes = self.vl as u64 * width as u64 / 8;
                self.check_mem(base, bytes)?;
                let r = self.reg_range(src).start;
                let (mem, regs) = (&mut self.mem, &self.vregs);
                mem[base as usize..(base + bytes) as usize]
                    .copy_from_slice(&regs[r..r + bytes as usize]);
                rec.mnemonic = if width == 16 { Mnemonic::Vse16 } else { Mnemonic::Vse32 };
                rec.sew = width;
                rec.bytes = bytes as u32;
                rec.base = base;
                rec.srcs[0] = src;
                rec.nsrcs = 1;
            }
            Instr::VwmuluSc { dst, src, scalar } => {
                Self::check_reg(dst)?;
                Self::check_reg(src)?;
                if self.sew != 16 {
                    return Err(VvmError::SewMismatch { required: 16, active: self.sew });
                }
                if self.vl * 32 > self.shape.vlen_bits {
                    return Err(VvmError::WideningOverflow {
                        vl: self.vl,
                        vlen_bits: self.shape.vlen_bits,
                    });
                }
                let elems = self.reg_u16(src, self.vl as usize);
                let d = self.reg_range(dst).start;
                for (i, e) in elems.iter().enumerate() {
                    let wide = (*e as u32).wrapping_mul(scalar);
                    self.vregs[d + 4 * i..d + 4 * i + 4].copy_from_slice(&wide.to_le_bytes());
                }
                rec.mnemonic = Mnemonic::VwmuluSc;
                rec.dst = Some(dst);
                rec.srcs[0] = src;
                rec.nsrcs = 1;
            }
            Instr::VnsrlImm { dst, src, shamt } => {
                Self::check_reg(dst)?;
                Self::check_reg(src)?;
                if shamt >= 32 {
                    return Err(VvmError::BadShift { shamt });
                }
                if self.sew != 16 {
                    return Err(VvmError::SewMismatch { required: 16, active: self.sew });
                }
                if self.vl * 32 > self.shape.vlen_bits {
                    return Err(VvmError::WideningOverflow {
                        vl: self.vl,
                        vlen_bits: self.shape.vlen_bits,
                    });
                }
                let elems = self.reg_u32(src, self.vl as usize);
                let d = self.reg_range(dst).start;
                for (i, e) in elems.iter().enumerate() {
                    let narrow = (*e >> shamt) as u16;
                    self.vregs[d + 2 * i..d + 2 * i + 2].copy_from_slice(&narrow.to_le_bytes());
                }
                rec.mnemonic = Mnemonic::VnsrlImm;
                rec.dst = Some(dst);
                rec.srcs[0] = src;
                rec.nsrcs = 1;
            }
            Instr::VfmaccSc { acc, scalar, src } => {
                Self::check_reg(acc)?;
                Self::check_reg(src)?;
                if self.sew != 32 {
                    return Err(VvmError::SewMismatch { required: 32, active: self.sew });
                }
                let elems = self.reg_u32(src, self.vl as usize);
                let a = self.reg_range(acc).start;
                for (i, e) in elems.iter().enumerate() {
                    let cur = f32::from_le_bytes(
                        self.vregs[a + 4 * i..a + 4 * i + 4].try_into().unwrap(),
                    );
                    let next = cur + scalar * f32::from_bits(*e);
                    self.vregs[a + 4 * i..a + 4 * i + 4].copy_from_slice(&next.to_le_bytes());
                }
                rec.mnemonic = Mnemonic::VfmaccSc;
                rec.dst = Some(acc);
                rec.srcs = [acc, src];
                rec.nsrcs = 2;
            }
            Instr::VfmvSplat { dst, scalar } => {
                Self::check_reg(dst)?;
                if self.sew != 32 {
                    return Err(VvmError::SewMismatch { required: 32, active: self.sew });
                }
                let d = self.reg_range(dst).start;
                for i in 0..self.vl as usize {
                    self.vregs[d + 4 * i..d + 4 * i + 4].copy_from_slice(&scalar.to_le_bytes());
                }
                rec.mnemonic = Mnemonic::VfmvSplat;
                rec.dst = Some(dst);
            }
            Instr::ScalarOps(_) => unreachable!("annotations are handled by the driver"),
        }
        Ok(rec)
    }
}

/// Execute a program in order, returning the committed-instruction trace.
/// Deterministic: identical program and initial state give a bit-identical
/// final state and trace.
pub fn execute(state: &mut VvmState, program: &[Instr]) -> Result<Vec<TraceRecord>, Fault> {
    let mut trace = Vec::new();
    let mut pending_scalar = 0u32;
    for (index, instr) in program.iter().enumerate() {
        if let Instr::ScalarOps(n) = instr {
            pending_scalar += n;
            continue;
        }
        let mut rec = state.step(instr).map_err(|cause| Fault { index, cause })?;
        rec.seq = trace.len() as u32;
        rec.scalar_ops = std::mem::take(&mut pending_scalar);
        trace.push(rec);
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Trace file format: the contract between the emulator and the timing
// simulator. One CSV record per committed instruction, preceded by a header
// comment carrying VLEN.
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Write a trace as CSV: `seq,mnemonic,sew,vl,bytes,base,regs,scalar_ops`.
/// The regs field packs destination and sources as `d<r>` / `s<r>` tokens
/// joined by `;`, or `-` when the instruction names no registers.
pub fn write_trace<W: Write>(
    mut w: W,
    vlen_bits: u32,
    trace: &[TraceRecord],
) -> io::Result<()> {
    writeln!(w, "# vlen_bits={vlen_bits}")?;
    writeln!(w, "seq,mnemonic,sew,vl,bytes,base,regs,scalar_ops")?;
    let mut regs = String::new();
    for rec in trace {
        regs.clear();
        if let Some(d) = rec.dst {
            regs.push_str(&format!("d{d}"));
        }
        for s in rec.srcs() {
            if !regs.is_empty() {
                regs.push(';');
            }
            regs.push_str(&format!("s{s}"));
        }
        if regs.is_empty() {
            regs.push('-');
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            rec.seq, rec.mnemonic, rec.sew, rec.vl, rec.bytes, rec.base, regs, rec.scalar_ops
        )?;
    }
    Ok(())
}

/// Parse a trace written by [`write_trace`]. Returns the VLEN recorded in
/// the header and the records.
pub fn read_trace<R: BufRead>(r: R) -> Result<(u32, Vec<TraceRecord>), TraceIoError> {
    let mut vlen_bits = None;
    let mut records = Vec::new();
    let parse = |line: usize, msg: String| TraceIoError::Parse { line, msg };
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("vlen_bits=") {
                vlen_bits =
                    Some(v.parse::<u32>().map_err(|e| parse(lineno, format!("bad vlen: {e}")))?);
            }
            continue;
        }
        if text.starts_with("seq,") {
            continue; // column header
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 8 {
            return Err(parse(lineno, format!("expected 8 fields, got {}", fields.len())));
        }
        let num = |idx: usize| -> Result<u64, TraceIoError> {
            fields[idx]
                .parse::<u64>()
                .map_err(|e| parse(lineno, format!("field {}: {e}", idx + 1)))
        };
        let mnemonic = fields[1]
            .parse::<Mnemonic>()
            .map_err(|e| parse(lineno, e))?;
        let mut rec = TraceRecord {
            seq: num(0)? as u32,
            mnemonic,
            sew: num(2)? as u32,
            vl: num(3)? as u32,
            bytes: num(4)? as u32,
            base: num(5)?,
            dst: None,
            srcs: [0; 2],
            nsrcs: 0,
            scalar_ops: num(7)? as u32,
        };
        if fields[6] != "-" {
            for tok in fields[6].split(';') {
                let (kind, reg) = tok.split_at(1);
                let reg = reg
                    .parse::<u8>()
                    .map_err(|e| parse(lineno, format!("regs token `{tok}`: {e}")))?;
                match kind {
                    "d" => rec.dst = Some(reg),
                    "s" => {
                        if rec.nsrcs as usize >= rec.srcs.len() {
                            return Err(parse(lineno, "too many source registers".into()));
                        }
                        rec.srcs[rec.nsrcs as usize] = reg;
                        rec.nsrcs += 1;
                    }
                    _ => return Err(parse(lineno, format!("bad regs token `{tok}`"))),
                }
            }
        }
        records.push(rec);
    }
    let vlen_bits = vlen_bits.ok_or_else(|| parse(0, "missing `# vlen_bits=` header".into()))?;
    Ok((vlen_bits, records))
}
