//! Parameter sweeps over architectural configurations.
//!
//! A sweep fixes one GEMM workload, generates its compressed and
//! uncompressed traces once, and prices the pair under the cross product of
//! the requested axes. Rows come out in lexicographic axis order (first axis
//! outermost) so columns can be reshaped into plot grids directly. Grid
//! points are priced in parallel; cache classification is memoized per cache
//! size because it does not depend on latencies or bandwidth.

use std::collections::HashMap;
use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::formats::Fill;
use crate::kernels::{prepare_compressed, prepare_uncompressed, KernelError, KernelSpec, Matrix};
use crate::timing::{
    check_inequalities, classify, improvement, schedule, HitMap, MachineConfig,
};
use crate::vvm::TraceRecord;

pub const DEFAULT_GRID_CAP: usize = 10_000;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep needs at least one axis with at least one value")]
    EmptyAxes,
    #[error("grid has {points} points, cap is {cap}")]
    CapExceeded { points: usize, cap: usize },
    #[error("axis {0} appears twice")]
    DuplicateAxis(AxisKey),
    #[error("axis {0} values must be positive and strictly increasing")]
    BadAxisValues(AxisKey),
    #[error("axis {0} is not part of this sweep")]
    AxisMissing(AxisKey),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("trace execution failed: {0}")]
    Execution(#[from] crate::vvm::Fault),
}

/// The architectural quantities a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AxisKey {
    MemBandwidth,
    L1Size,
    L1Latency,
    MemLatency,
    CompLatency,
}

impl AxisKey {
    pub const ALL: [AxisKey; 5] = [
        AxisKey::MemBandwidth,
        AxisKey::L1Size,
        AxisKey::L1Latency,
        AxisKey::MemLatency,
        AxisKey::CompLatency,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AxisKey::MemBandwidth => "mem_bandwidth_bytes_per_s",
            AxisKey::L1Size => "l1_size_bytes",
            AxisKey::L1Latency => "l1_latency_ns",
            AxisKey::MemLatency => "mem_latency_ns",
            AxisKey::CompLatency => "comp_latency_cycles",
        }
    }

    fn apply(&self, cfg: &mut MachineConfig, v: f64) {
        match self {
            AxisKey::MemBandwidth => cfg.mem_bandwidth_bytes_per_s = v,
            AxisKey::L1Size => cfg.l1_size_bytes = v as u64,
            AxisKey::L1Latency => cfg.l1_latency_ns = v,
            AxisKey::MemLatency => cfg.mem_latency_ns = v,
            AxisKey::CompLatency => cfg.set_comp_latency_cycles(v as u64),
        }
    }
}

impl std::fmt::Display for AxisKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AxisKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AxisKey::ALL
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown axis `{s}`"))
    }
}

/// Workload identity: which GEMM pair the sweep prices.
#[derive(Debug, Clone, Copy)]
pub struct Workload {
    pub n: usize,
    pub vlen_bits: u32,
    pub fill: Fill,
    /// Kernel body repetitions in the trace; repetitions after the first
    /// run against a warmed cache.
    pub reps: u32,
    pub seed: u64,
}

impl Default for Workload {
    fn default() -> Self {
        Self {
            n: 128,
            vlen_bits: 4096,
            fill: Fill::ZeroPad,
            reps: 2,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: MachineConfig,
    /// Axis order defines row order: first axis varies slowest.
    pub axes: Vec<(AxisKey, Vec<f64>)>,
    pub workload: Workload,
    pub cap: usize,
}

impl SweepSpec {
    pub fn new(base: MachineConfig, axes: Vec<(AxisKey, Vec<f64>)>) -> Self {
        Self {
            base,
            axes,
            workload: Workload::default(),
            cap: DEFAULT_GRID_CAP,
        }
    }

    fn validate(&self) -> Result<usize, SweepError> {
        if self.axes.is_empty() || self.axes.iter().any(|(_, v)| v.is_empty()) {
            return Err(SweepError::EmptyAxes);
        }
        for (i, (key, values)) in self.axes.iter().enumerate() {
            if self.axes[..i].iter().any(|(k, _)| k == key) {
                return Err(SweepError::DuplicateAxis(*key));
            }
            let increasing = values.windows(2).all(|w| w[0] < w[1]);
            if !increasing || values[0] <= 0.0 {
                return Err(SweepError::BadAxisValues(*key));
            }
        }
        let points = self
            .axes
            .iter()
            .try_fold(1usize, |acc, (_, v)| acc.checked_mul(v.len()))
            .ok_or(SweepError::CapExceeded {
                points: usize::MAX,
                cap: self.cap,
            })?;
        if points > self.cap {
            return Err(SweepError::CapExceeded {
                points,
                cap: self.cap,
            });
        }
        Ok(points)
    }

    /// Parse a sweep spec file: machine configuration keys as in the config
    /// file format, plus `sweep.<axis> = v1,v2,...`, `sweep.cap`, and
    /// `workload.{n,vlen_bits,fill,reps,seed}`.
    pub fn from_kv_text(text: &str) -> Result<Self, SweepError> {
        let mut spec = Self::new(MachineConfig::default(), Vec::new());
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let perr = |msg: String| SweepError::Parse { line: lineno, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(name) = key.strip_prefix("sweep.") {
                if name == "cap" {
                    spec.cap = value
                        .parse::<usize>()
                        .map_err(|e| perr(format!("`{key}`: {e}")))?;
                    continue;
                }
                let axis = name.parse::<AxisKey>().map_err(|e| perr(e))?;
                let values: Result<Vec<f64>, _> = value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect();
                let values = values.map_err(|e| perr(format!("`{key}`: {e}")))?;
                spec.axes.push((axis, values));
            } else if let Some(name) = key.strip_prefix("workload.") {
                let w = &mut spec.workload;
                let bad = |e: String| perr(format!("`{key}`: {e}"));
                match name {
                    "n" => w.n = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                    "vlen_bits" => {
                        w.vlen_bits = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                    }
                    "fill" => w.fill = value.parse().map_err(bad)?,
                    "reps" => w.reps = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                    "seed" => w.seed = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                    other => return Err(perr(format!("unknown workload key `{other}`"))),
                }
            } else {
                match spec.base.apply_kv(key, value) {
                    Ok(true) => {}
                    Ok(false) => return Err(perr(format!("unknown key `{key}`"))),
                    Err(msg) => return Err(perr(msg)),
                }
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// One priced grid point: the full effective configuration plus outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mem_bandwidth_bytes_per_s: f64,
    pub l1_size_bytes: u64,
    pub l1_line_bytes: u64,
    pub l1_latency_ns: f64,
    pub mem_latency_ns: f64,
    pub comp_latency_cycles: u64,
    pub rob_entries: usize,
    pub clock_hz: f64,
    pub cycles_c: u64,
    pub cycles_u: u64,
    pub improvement: f64,
    pub ineq_load: bool,
    pub ineq_store: bool,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axes: Vec<(AxisKey, Vec<f64>)>,
    pub rows: Vec<SweepRow>,
}

/// Generate the workload's trace pair once. Both kernels run on the same
/// random matrices.
pub fn generate_traces(w: &Workload) -> Result<(Vec<TraceRecord>, Vec<TraceRecord>), SweepError> {
    let a = Matrix::random(w.n, w.n, w.seed)?;
    let b = Matrix::random(w.n, w.n, w.seed.wrapping_add(0x9e3779b97f4a7c15))?;
    let mut spec = KernelSpec::new(w.n, w.vlen_bits, w.fill);
    spec.reps = w.reps;
    let mut rc = prepare_compressed(&spec, &a, &b)?;
    let mut ru = prepare_uncompressed(&spec, &a, &b)?;
    let tc = rc.run()?;
    let tu = ru.run()?;
    Ok((tc, tu))
}

/// Price the whole grid against an already generated trace pair.
pub fn run_sweep_on_traces(
    spec: &SweepSpec,
    trace_c: &[TraceRecord],
    trace_u: &[TraceRecord],
) -> Result<SweepResult, SweepError> {
    let points = spec.validate()?;

    // Hit/miss classification depends only on cache geometry, so compute it
    // once per distinct cache size on this grid.
    let sizes: Vec<u64> = match spec.axes.iter().find(|(k, _)| *k == AxisKey::L1Size) {
        Some((_, values)) => values.iter().map(|v| *v as u64).collect(),
        None => vec![spec.base.l1_size_bytes],
    };
    let line = spec.base.l1_line_bytes;
    let hitmaps: HashMap<u64, (HitMap, HitMap)> = sizes
        .iter()
        .map(|&size| {
            (
                size,
                (
                    classify(trace_c, size, line),
                    classify(trace_u, size, line),
                ),
            )
        })
        .collect();

    let dims: Vec<usize> = spec.axes.iter().map(|(_, v)| v.len()).collect();
    let rows: Vec<SweepRow> = (0..points)
        .into_par_iter()
        .map(|flat| {
            let mut cfg = spec.base.clone();
            let mut rem = flat;
            // Last axis varies fastest.
            for (axis_idx, (key, values)) in spec.axes.iter().enumerate().rev() {
                let _ = axis_idx;
                let pos = rem % values.len();
                rem /= values.len();
                key.apply(&mut cfg, values[pos]);
            }
            debug_assert_eq!(rem, 0);
            debug_assert_eq!(dims.len(), spec.axes.len());
            let (hits_c, hits_u) = &hitmaps[&cfg.l1_size_bytes];
            let rc = schedule(trace_c, &cfg, hits_c);
            let ru = schedule(trace_u, &cfg, hits_u);
            let (ineq_load, ineq_store) = check_inequalities(&rc, &ru);
            SweepRow {
                mem_bandwidth_bytes_per_s: cfg.mem_bandwidth_bytes_per_s,
                l1_size_bytes: cfg.l1_size_bytes,
                l1_line_bytes: cfg.l1_line_bytes,
                l1_latency_ns: cfg.l1_latency_ns,
                mem_latency_ns: cfg.mem_latency_ns,
                comp_latency_cycles: cfg.comp_latency_cycles(),
                rob_entries: cfg.rob_entries,
                clock_hz: cfg.clock_hz,
                cycles_c: rc.cycles,
                cycles_u: ru.cycles,
                improvement: improvement(rc.cycles, ru.cycles),
                ineq_load,
                ineq_store,
            }
        })
        .collect();
    Ok(SweepResult {
        axes: spec.axes.clone(),
        rows,
    })
}

/// Generate traces and price the grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    let (tc, tu) = generate_traces(&spec.workload)?;
    run_sweep_on_traces(spec, &tc, &tu)
}

pub fn write_rows_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(
        w,
        "mem_bandwidth_bytes_per_s,l1_size_bytes,l1_line_bytes,l1_latency_ns,\
         mem_latency_ns,comp_latency_cycles,rob_entries,clock_hz,\
         cycles_c,cycles_u,improvement,ineq_load,ineq_store"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{:.6},{},{}",
            r.mem_bandwidth_bytes_per_s,
            r.l1_size_bytes,
            r.l1_line_bytes,
            r.l1_latency_ns,
            r.mem_latency_ns,
            r.comp_latency_cycles,
            r.rob_entries,
            r.clock_hz,
            r.cycles_c,
            r.cycles_u,
            r.improvement,
            r.ineq_load,
            r.ineq_store
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

/// A broken monotonicity between two adjacent grid points along an axis.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingViolation {
    pub row_a: usize,
    pub row_b: usize,
    pub improvement_a: f64,
    pub improvement_b: f64,
}

/// Check that improvement is monotone along `axis` with all other axes
/// fixed. Equal values never violate either direction.
pub fn ordering_check(
    result: &SweepResult,
    axis: AxisKey,
    direction: Direction,
) -> Result<Vec<OrderingViolation>, SweepError> {
    let (axis_idx, axis_len) = result
        .axes
        .iter()
        .enumerate()
        .find(|(_, (k, _))| *k == axis)
        .map(|(i, (_, v))| (i, v.len()))
        .ok_or(SweepError::AxisMissing(axis))?;
    let stride: usize = result.axes[axis_idx + 1..]
        .iter()
        .map(|(_, v)| v.len())
        .product();
    let mut violations = Vec::new();
    for (i, row) in result.rows.iter().enumerate() {
        let pos = (i / stride) % axis_len;
        if pos + 1 >= axis_len {
            continue;
        }
        let j = i + stride;
        let next = &result.rows[j];
        let bad = match direction {
            Direction::NonIncreasing => next.improvement > row.improvement,
            Direction::NonDecreasing => next.improvement < row.improvement,
        };
        if bad {
            violations.push(OrderingViolation {
                row_a: i,
                row_b: j,
                improvement_a: row.improvement,
                improvement_b: next.improvement,
            });
        }
    }
    Ok(violations)
}

/// Conversion-latency budget annotation for one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhatIf {
    /// Largest per-instruction conversion latency (cycles, interpolated
    /// between sampled axis points) at which improvement stays positive.
    /// Zero when improvement is never positive; the axis maximum (a lower
    /// bound on the true budget) when it never crosses zero.
    pub budget_cycles: f64,
    /// Whether the queried converter latency fits inside the budget.
    pub feasible: bool,
}

/// For each grid point, interpolate along the conversion-latency axis to
/// find the budget a hardware converter of `posit_conversion_cycles` per
/// instruction would have to meet, and flag whether it does.
pub fn posit_whatif(
    result: &SweepResult,
    posit_conversion_cycles: u64,
) -> Result<Vec<WhatIf>, SweepError> {
    let (axis_idx, values) = result
        .axes
        .iter()
        .enumerate()
        .find(|(_, (k, _))| *k == AxisKey::CompLatency)
        .map(|(i, (_, v))| (i, v.clone()))
        .ok_or(SweepError::AxisMissing(AxisKey::CompLatency))?;
    let stride: usize = result.axes[axis_idx + 1..]
        .iter()
        .map(|(_, v)| v.len())
        .product();
    let len = values.len();
    let mut budgets: HashMap<usize, f64> = HashMap::new();
    let mut out = Vec::with_capacity(result.rows.len());
    for i in 0..result.rows.len() {
        let pos = (i / stride) % len;
        let group_base = i - pos * stride;
        let budget = *budgets.entry(group_base).or_insert_with(|| {
            let imp =
                |p: usize| result.rows[group_base + p * stride].improvement;
            if imp(0) <= 0.0 {
                return 0.0;
            }
            for p in 1..len {
                if imp(p) <= 0.0 {
                    let (x0, x1) = (values[p - 1], values[p]);
                    let (y0, y1) = (imp(p - 1), imp(p));
                    // Linear crossing of improvement = 0 in [x0, x1).
                    return x0 + (x1 - x0) * y0 / (y0 - y1);
                }
            }
            values[len - 1]
        });
        out.push(WhatIf {
            budget_cycles: budget,
            feasible: (posit_conversion_cycles as f64) <= budget,
        });
    }
    Ok(out)
}
