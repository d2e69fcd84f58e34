//! Trace-driven timing simulator.
//!
//! The model is deliberately small: a single in-order issue port feeding a
//! completion window of `rob_entries` instructions in flight, a fully
//! associative LRU first-level cache, and a flat memory behind it whose cost
//! is a fixed latency plus a bandwidth term proportional to the bytes moved.
//! Latencies are specified in nanoseconds and converted to cycles by rounding
//! up at the configured clock.
//!
//! Cache classification depends only on the trace and the cache geometry, so
//! it is exposed separately from scheduling: a parameter sweep can classify
//! once per cache size and reprice the same hit/miss map under many latency
//! and bandwidth settings.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::vvm::{Mnemonic, TraceRecord};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{field} must be positive")]
    NotPositive { field: &'static str },
}

/// Architectural parameters. Field names carry their units.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineConfig {
    pub l1_size_bytes: u64,
    pub l1_line_bytes: u64,
    pub l1_latency_ns: f64,
    pub mem_latency_ns: f64,
    pub mem_bandwidth_bytes_per_s: f64,
    /// Occupancy in cycles for non-memory instructions; mnemonics absent
    /// from the map cost one cycle.
    pub instr_latency: BTreeMap<Mnemonic, u64>,
    pub rob_entries: usize,
    pub clock_hz: f64,
}

impl Default for MachineConfig {
    fn default() -> Self {
        Self {
            l1_size_bytes: 512 * 1024,
            l1_line_bytes: 64,
            l1_latency_ns: 20.0,
            mem_latency_ns: 60.0,
            mem_bandwidth_bytes_per_s: 1e9,
            instr_latency: BTreeMap::new(),
            rob_entries: 16,
            clock_hz: 1e9,
        }
    }
}

impl MachineConfig {
    /// Set the latency of both in-register conversion instructions (the
    /// widening multiply and the narrowing shift) at once.
    pub fn set_comp_latency_cycles(&mut self, cycles: u64) {
        self.instr_latency.insert(Mnemonic::VwmuluSc, cycles);
        self.instr_latency.insert(Mnemonic::VnsrlImm, cycles);
    }

    pub fn comp_latency_cycles(&self) -> u64 {
        self.instr_latency
            .get(&Mnemonic::VwmuluSc)
            .copied()
            .unwrap_or(1)
    }

    fn ghz(&self) -> f64 {
        self.clock_hz / 1e9
    }

    fn cycles_from_ns(&self, ns: f64) -> u64 {
        (ns * self.ghz()).ceil() as u64
    }

    pub fn hit_cycles(&self) -> u64 {
        self.cycles_from_ns(self.l1_latency_ns)
    }

    pub fn miss_cycles(&self, bytes: u64) -> u64 {
        let transfer_ns = bytes as f64 * 1e9 / self.mem_bandwidth_bytes_per_s;
        self.cycles_from_ns(self.mem_latency_ns + transfer_ns)
    }

    fn occupancy(&self, m: Mnemonic) -> u64 {
        self.instr_latency.get(&m).copied().unwrap_or(1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks: [(&'static str, bool); 7] = [
            ("l1_size_bytes", self.l1_size_bytes > 0),
            ("l1_line_bytes", self.l1_line_bytes > 0),
            ("l1_latency_ns", self.l1_latency_ns > 0.0),
            ("mem_latency_ns", self.mem_latency_ns > 0.0),
            (
                "mem_bandwidth_bytes_per_s",
                self.mem_bandwidth_bytes_per_s > 0.0,
            ),
            ("rob_entries", self.rob_entries > 0),
            ("clock_hz", self.clock_hz > 0.0),
        ];
        for (field, ok) in checks {
            if !ok {
                return Err(ConfigError::NotPositive { field });
            }
        }
        Ok(())
    }

    /// Apply one `key = value` pair. Returns `Ok(false)` when the key is
    /// not a configuration key (callers layering more keys on top of the
    /// config file format use this to fall through), `Err` when the key is
    /// known but the value does not parse.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<bool, String> {
        let as_u64 = || value.parse::<u64>().map_err(|e| format!("`{key}`: {e}"));
        let as_f64 = || value.parse::<f64>().map_err(|e| format!("`{key}`: {e}"));
        match key {
            "l1_size_bytes" => self.l1_size_bytes = as_u64()?,
            "l1_line_bytes" => self.l1_line_bytes = as_u64()?,
            "l1_latency_ns" => self.l1_latency_ns = as_f64()?,
            "mem_latency_ns" => self.mem_latency_ns = as_f64()?,
            "mem_bandwidth_bytes_per_s" => self.mem_bandwidth_bytes_per_s = as_f64()?,
            "rob_entries" => self.rob_entries = as_u64()? as usize,
            "clock_hz" => self.clock_hz = as_f64()?,
            "comp_latency_cycles" => {
                let c = as_u64()?;
                self.set_comp_latency_cycles(c);
            }
            _ => {
                if let Some(name) = key.strip_prefix("instr_latency.") {
                    let m = name.parse::<Mnemonic>()?;
                    self.instr_latency.insert(m, as_u64()?);
                } else {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Parse a flat `key = value` configuration. Lines starting with `#`
    /// and blank lines are skipped. Recognized keys are the struct field
    /// names, `comp_latency_cycles`, and `instr_latency.<mnemonic>`.
    pub fn from_kv_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: lineno,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match cfg.apply_kv(key, value) {
                Ok(true) => {}
                Ok(false) => {
                    return Err(ConfigError::Parse {
                        line: lineno,
                        msg: format!("unknown key `{key}`"),
                    })
                }
                Err(msg) => return Err(ConfigError::Parse { line: lineno, msg }),
            }
        }
        cfg.validate().map_err(|e| ConfigError::Parse {
            line: 0,
            msg: e.to_string(),
        })?;
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// Fully associative LRU cache.
// ---------------------------------------------------------------------------

const NIL: u32 = u32::MAX;

struct Slot {
    tag: u64,
    prev: u32,
    next: u32,
}

/// Fully associative LRU over fixed-size lines. Loads allocate normally;
/// stores allocate only while free capacity remains and never evict a
/// resident line, so streaming writes cannot flush the read working set.
struct Lru {
    map: HashMap<u64, u32>,
    slots: Vec<Slot>,
    head: u32,
    tail: u32,
    capacity: usize,
}

impl Lru {
    fn new(capacity_lines: usize) -> Self {
        Self {
            map: HashMap::with_capacity(capacity_lines.min(1 << 22)),
            slots: Vec::with_capacity(capacity_lines.min(1 << 22)),
            head: NIL,
            tail: NIL,
            capacity: capacity_lines.max(1),
        }
    }

    fn unlink(&mut self, idx: u32) {
        let (prev, next) = {
            let s = &self.slots[idx as usize];
            (s.prev, s.next)
        };
        if prev != NIL {
            self.slots[prev as usize].next = next;
        } else {
            self.head = next;
        }
        if next != NIL {
            self.slots[next as usize].prev = prev;
        } else {
            self.tail = prev;
        }
    }

    fn push_front(&mut self, idx: u32) {
        let old = self.head;
        {
            let s = &mut self.slots[idx as usize];
            s.prev = NIL;
            s.next = old;
        }
        if old != NIL {
            self.slots[old as usize].prev = idx;
        } else {
            self.tail = idx;
        }
        self.head = idx;
    }

    fn touch(&mut self, idx: u32) {
        if self.head != idx {
            self.unlink(idx);
            self.push_front(idx);
        }
    }

    /// Returns whether the line was resident before the access.
    fn access(&mut self, tag: u64, allow_evict: bool) -> bool {
        if let Some(&idx) = self.map.get(&tag) {
            self.touch(idx);
            return true;
        }
        if self.slots.len() < self.capacity {
            let idx = self.slots.len() as u32;
            self.slots.push(Slot {
                tag,
                prev: NIL,
                next: NIL,
            });
            self.map.insert(tag, idx);
            self.push_front(idx);
        } else if allow_evict {
            let victim = self.tail;
            self.unlink(victim);
            let old_tag = std::mem::replace(&mut self.slots[victim as usize].tag, tag);
            self.map.remove(&old_tag);
            self.map.insert(tag, victim);
            self.push_front(victim);
        }
        false
    }
}

/// Per-record cache outcome: `true` where every line the access touched was
/// already resident. Non-memory records are marked `true`.
pub type HitMap = Vec<bool>;

/// Classify each trace record against a fresh cold cache.
pub fn classify(trace: &[TraceRecord], l1_size_bytes: u64, l1_line_bytes: u64) -> HitMap {
    let lines = (l1_size_bytes / l1_line_bytes).max(1) as usize;
    let mut cache = Lru::new(lines);
    let mut hits = Vec::with_capacity(trace.len());
    for rec in trace {
        if !rec.mnemonic.is_memory() || rec.bytes == 0 {
            hits.push(true);
            continue;
        }
        let first = rec.base / l1_line_bytes;
        let last = (rec.base + rec.bytes as u64 - 1) / l1_line_bytes;
        let allow_evict = rec.mnemonic.is_load();
        let mut all_hit = true;
        for tag in first..=last {
            if !cache.access(tag, allow_evict) {
                all_hit = false;
            }
        }
        hits.push(all_hit);
    }
    hits
}

// ---------------------------------------------------------------------------
// Scheduling.
// ---------------------------------------------------------------------------

/// Cycle totals attributed to kernel phases by mnemonic: plain loads and
/// stores, their compressed counterparts, in-register unpack and pack, and
/// everything else under processing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Phases {
    pub t_load: u64,
    pub t_cload: u64,
    pub t_unpack: u64,
    pub t_pack: u64,
    pub t_store: u64,
    pub t_cstore: u64,
    pub t_proc: u64,
}

impl Phases {
    pub fn total(&self) -> u64 {
        self.t_load
            + self.t_cload
            + self.t_unpack
            + self.t_pack
            + self.t_store
            + self.t_cstore
            + self.t_proc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    /// Wall-clock cycles: the completion time of the last instruction.
    pub cycles: u64,
    /// Per-phase occupancy sums. These add up instruction costs, so their
    /// total exceeds `cycles` whenever the window overlaps work.
    pub phases: Phases,
    pub instructions: u64,
    pub mem_accesses: u64,
    pub hits: u64,
    pub misses: u64,
}

impl TimingReport {
    pub fn hit_rate(&self) -> f64 {
        if self.mem_accesses == 0 {
            return 0.0;
        }
        self.hits as f64 / self.mem_accesses as f64
    }

    /// Serialized lower-bound cross-check: total occupancy if nothing
    /// overlapped. With a one-entry window the scheduler must agree with
    /// this figure up to issue bookkeeping.
    pub fn serial_cycles(&self) -> u64 {
        self.phases.total()
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let p = &self.phases;
        let _ = writeln!(s, "cycles              {}", self.cycles);
        let _ = writeln!(s, "instructions        {}", self.instructions);
        let _ = writeln!(
            s,
            "mem accesses        {} ({} hit, {} miss, {:.1}% hit rate)",
            self.mem_accesses,
            self.hits,
            self.misses,
            100.0 * self.hit_rate()
        );
        let _ = writeln!(s, "t_load              {}", p.t_load);
        let _ = writeln!(s, "t_cload             {}", p.t_cload);
        let _ = writeln!(s, "t_unpack            {}", p.t_unpack);
        let _ = writeln!(s, "t_pack              {}", p.t_pack);
        let _ = writeln!(s, "t_store             {}", p.t_store);
        let _ = writeln!(s, "t_cstore            {}", p.t_cstore);
        let _ = writeln!(s, "t_proc              {}", p.t_proc);
        s
    }
}

fn phase_slot<'a>(phases: &'a mut Phases, m: Mnemonic) -> &'a mut u64 {
    match m {
        Mnemonic::Vle32 => &mut phases.t_load,
        Mnemonic::Vle16 => &mut phases.t_cload,
        Mnemonic::VwmuluSc => &mut phases.t_unpack,
        Mnemonic::VnsrlImm => &mut phases.t_pack,
        Mnemonic::Vse32 => &mut phases.t_store,
        Mnemonic::Vse16 => &mut phases.t_cstore,
        Mnemonic::Vsetvli | Mnemonic::VfmaccSc | Mnemonic::VfmvSplat => &mut phases.t_proc,
    }
}

/// Price a classified trace. Instructions issue in order, one per cycle
/// after their source registers are ready; completion is out of order but at
/// most `rob_entries` instructions may be in flight. Scalar annotation ops
/// occupy issue slots and are attributed to processing.
pub fn schedule(trace: &[TraceRecord], cfg: &MachineConfig, hits: &HitMap) -> TimingReport {
    assert_eq!(trace.len(), hits.len(), "hit map does not match trace");
    let mut inflight: BinaryHeap<Reverse<u64>> = BinaryHeap::with_capacity(cfg.rob_entries + 1);
    let mut reg_ready = [0u64; crate::vvm::NUM_VREGS as usize];
    let mut next_issue = 0u64;
    let mut finish = 0u64;
    let mut report = TimingReport {
        cycles: 0,
        phases: Phases::default(),
        instructions: trace.len() as u64,
        mem_accesses: 0,
        hits: 0,
        misses: 0,
    };
    for (rec, &hit) in trace.iter().zip(hits) {
        if rec.scalar_ops > 0 {
            next_issue += rec.scalar_ops as u64;
            report.phases.t_proc += rec.scalar_ops as u64;
        }
        let mut t = next_issue;
        for &s in rec.srcs() {
            t = t.max(reg_ready[s as usize]);
        }
        // The window admits a new instruction only once the oldest slot is
        // free; completions up to the issue cycle retire eagerly.
        while let Some(&Reverse(c)) = inflight.peek() {
            if c <= t {
                inflight.pop();
            } else {
                break;
            }
        }
        while inflight.len() >= cfg.rob_entries {
            let Reverse(c) = inflight.pop().unwrap();
            t = t.max(c);
        }
        let cost = if rec.mnemonic.is_memory() {
            report.mem_accesses += 1;
            if hit {
                report.hits += 1;
                cfg.hit_cycles()
            } else {
                report.misses += 1;
                cfg.miss_cycles(rec.bytes as u64)
            }
        } else {
            cfg.occupancy(rec.mnemonic)
        };
        *phase_slot(&mut report.phases, rec.mnemonic) += cost;
        let done = t + cost;
        inflight.push(Reverse(done));
        if let Some(d) = rec.dst {
            reg_ready[d as usize] = done;
        }
        finish = finish.max(done);
        next_issue = t + 1;
    }
    report.cycles = finish.max(next_issue.saturating_sub(1));
    report
}

/// Classify and schedule in one call.
pub fn simulate(trace: &[TraceRecord], cfg: &MachineConfig) -> TimingReport {
    let hits = classify(trace, cfg.l1_size_bytes, cfg.l1_line_bytes);
    schedule(trace, cfg, &hits)
}

/// Percentage of cycles saved by the compressed kernel; negative when
/// compression slows the kernel down.
pub fn improvement(cycles_compressed: u64, cycles_uncompressed: u64) -> f64 {
    100.0 * (1.0 - cycles_compressed as f64 / cycles_uncompressed as f64)
}

/// The two per-phase conditions under which compression pays off on each
/// side of the kernel: loading compressed data plus unpacking must beat the
/// plain load, and packing plus the compressed store must beat the plain
/// store.
pub fn check_inequalities(compressed: &TimingReport, uncompressed: &TimingReport) -> (bool, bool) {
    let load_side = compressed.phases.t_cload + compressed.phases.t_unpack
        < uncompressed.phases.t_load;
    let store_side = compressed.phases.t_pack + compressed.phases.t_cstore
        < uncompressed.phases.t_store;
    (load_side, store_side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vvm::{execute, Instr, MachineShape, VvmState};

    fn trace_of(program: &[Instr], vlen: u32, mem: usize) -> Vec<TraceRecord> {
        let mut m = VvmState::new(MachineShape::new(vlen).unwrap(), mem);
        execute(&mut m, program).unwrap()
    }

    #[test]
    fn cold_miss_cost_example() {
        // 64 bytes missing at 60 ns latency, 1 GB/s, 1 GHz: 60 + 64 ns.
        let cfg = MachineConfig::default();
        assert_eq!(cfg.miss_cycles(64), 124);
        assert_eq!(cfg.hit_cycles(), 20);
    }

    #[test]
    fn single_load_times_as_one_miss() {
        let cfg = MachineConfig::default();
        let t = trace_of(
            &[
                Instr::Vsetvli { avl: 16, sew: 32 },
                Instr::Vle { width: 32, dst: 1, base: 0 },
            ],
            4096,
            4096,
        );
        let r = simulate(&t, &cfg);
        assert_eq!(r.misses, 1);
        assert_eq!(r.hits, 0);
        // vsetvli issues at 0 (cost 1), load issues at 1 and misses.
        assert_eq!(r.cycles, 1 + cfg.miss_cycles(64));
        assert_eq!(r.phases.t_load, cfg.miss_cycles(64));
        assert_eq!(r.phases.t_proc, 1);
    }

    #[test]
    fn repeated_load_hits() {
        let cfg = MachineConfig::default();
        let t = trace_of(
            &[
                Instr::Vsetvli { avl: 16, sew: 32 },
                Instr::Vle { width: 32, dst: 1, base: 0 },
                Instr::Vle { width: 32, dst: 2, base: 0 },
            ],
            4096,
            4096,
        );
        let r = simulate(&t, &cfg);
        assert_eq!((r.hits, r.misses), (1, 1));
    }

    #[test]
    fn partial_residency_counts_as_miss() {
        // First load covers one line; the second spans that line plus a
        // missing one and must be a miss.
        let cfg = MachineConfig::default();
        let t = trace_of(
            &[
                Instr::Vsetvli { avl: 16, sew: 32 },
                Instr::Vle { width: 32, dst: 1, base: 0 },
                Instr::Vsetvli { avl: 32, sew: 32 },
                Instr::Vle { width: 32, dst: 2, base: 0 },
            ],
            4096,
            4096,
        );
        let r = simulate(&t, &cfg);
        assert_eq!((r.hits, r.misses), (0, 2));
    }

    #[test]
    fn lru_evicts_least_recent() {
        // Two-line cache: touch lines 0, 1, then 2 (evicting 0); line 1
        // must still hit, line 0 must miss.
        let hits = classify(
            &trace_of(
                &[
                    Instr::Vsetvli { avl: 16, sew: 32 },
                    Instr::Vle { width: 32, dst: 1, base: 0 },
                    Instr::Vle { width: 32, dst: 1, base: 64 },
                    Instr::Vle { width: 32, dst: 1, base: 128 },
                    Instr::Vle { width: 32, dst: 1, base: 64 },
                    Instr::Vle { width: 32, dst: 1, base: 0 },
                ],
                4096,
                4096,
            ),
            128,
            64,
        );
        assert_eq!(hits, vec![true, false, false, false, true, false]);
    }

    #[test]
    fn stores_do_not_evict_loads() {
        // One-line cache holding line 0; a store to line 1 misses but must
        // not displace line 0.
        let hits = classify(
            &trace_of(
                &[
                    Instr::Vsetvli { avl: 16, sew: 32 },
                    Instr::Vle { width: 32, dst: 1, base: 0 },
                    Instr::Vse { width: 32, src: 1, base: 64 },
                    Instr::Vle { width: 32, dst: 1, base: 0 },
                ],
                4096,
                4096,
            ),
            64,
            64,
        );
        assert_eq!(hits, vec![true, false, false, true]);
    }

    #[test]
    fn stores_allocate_into_free_capacity() {
        // Two-line cache with one line used: a store can claim the free
        // line and hit on the rewrite.
        let hits = classify(
            &trace_of(
                &[
                    Instr::Vsetvli { avl: 16, sew: 32 },
                    Instr::Vle { width: 32, dst: 1, base: 0 },
                    Instr::Vse { width: 32, src: 1, base: 64 },
                    Instr::Vse { width: 32, src: 1, base: 64 },
                ],
                4096,
                4096,
            ),
            128,
            64,
        );
        assert_eq!(hits, vec![true, false, false, true]);
    }

    #[test]
    fn raw_dependency_serializes() {
        // Load (miss, 124 cycles) feeding an fmacc: the fmacc cannot issue
        // before the load completes.
        let cfg = MachineConfig::default();
        let t = trace_of(
            &[
                Instr::Vsetvli { avl: 16, sew: 32 },
                Instr::Vle { width: 32, dst: 1, base: 0 },
                Instr::VfmaccSc { acc: 2, scalar: 1.0, src: 1 },
            ],
            4096,
            4096,
        );
        let r = simulate(&t, &cfg);
        // vsetvli done at 1; load issues at 1, done at 125; fmacc issues at
        // 125, done at 126.
        assert_eq!(r.cycles, 126);
    }

    #[test]
    fn independent_misses_overlap_under_large_window() {
        let cfg = MachineConfig::default();
        let program: Vec<Instr> = std::iter::once(Instr::Vsetvli { avl: 16, sew: 32 })
            .chain((0..8).map(|i| Instr::Vle {
                width: 32,
                dst: 1 + i as u8,
                base: 64 * i,
            }))
            .collect();
        let t = trace_of(&program, 4096, 4096);
        let wide = simulate(&t, &cfg);
        let mut narrow_cfg = cfg.clone();
        narrow_cfg.rob_entries = 1;
        let narrow = simulate(&t, &narrow_cfg);
        // Eight independent 124-cycle misses issued back to back overlap
        // almost fully with a 16-entry window and not at all with 1.
        assert_eq!(wide.cycles, 1 + 7 + 124);
        assert_eq!(narrow.cycles, 1 + 8 * 124);
        assert!(wide.cycles < narrow.cycles);
    }

    #[test]
    fn window_limit_throttles_overlap() {
        let cfg = {
            let mut c = MachineConfig::default();
            c.rob_entries = 2;
            c
        };
        let program: Vec<Instr> = std::iter::once(Instr::Vsetvli { avl: 16, sew: 32 })
            .chain((0..4).map(|i| Instr::Vle {
                width: 32,
                dst: 1 + i as u8,
                base: 64 * i,
            }))
            .collect();
        let t = trace_of(&program, 4096, 4096);
        let r = simulate(&t, &cfg);
        // With two slots, loads pair up: issue 1&2 overlap, 3 waits for 1.
        // vsetvli @0..1, L0 @1..125, L1 @2..126, L2 @125..249, L3 @126..250.
        assert_eq!(r.cycles, 250);
    }

    #[test]
    fn serialized_window_matches_occupancy_sum() {
        let mut cfg = MachineConfig::default();
        cfg.rob_entries = 1;
        let program: Vec<Instr> = std::iter::once(Instr::Vsetvli { avl: 16, sew: 32 })
            .chain((0..6).map(|i| Instr::Vle {
                width: 32,
                dst: 1,
                base: 64 * i,
            }))
            .collect();
        let t = trace_of(&program, 4096, 4096);
        let r = simulate(&t, &cfg);
        assert_eq!(r.cycles, r.serial_cycles());
    }

    #[test]
    fn scalar_ops_delay_issue() {
        let cfg = MachineConfig::default();
        let t = trace_of(
            &[
                Instr::ScalarOps(10),
                Instr::Vsetvli { avl: 16, sew: 32 },
            ],
            4096,
            64,
        );
        let r = simulate(&t, &cfg);
        assert_eq!(r.cycles, 11);
        assert_eq!(r.phases.t_proc, 11);
    }

    #[test]
    fn improvement_signs() {
        assert_eq!(improvement(50, 100), 50.0);
        assert_eq!(improvement(100, 100), 0.0);
        assert!(improvement(150, 100) < 0.0);
    }

    #[test]
    fn clock_scaling_rounds_up() {
        let mut cfg = MachineConfig::default();
        cfg.clock_hz = 1.5e9;
        // 20 ns at 1.5 GHz is 30 cycles; 60 + 64 ns is 186.
        assert_eq!(cfg.hit_cycles(), 30);
        assert_eq!(cfg.miss_cycles(64), 186);
        cfg.clock_hz = 1e9;
        cfg.l1_latency_ns = 20.5;
        assert_eq!(cfg.hit_cycles(), 21);
    }

    #[test]
    fn config_text_round_trip() {
        let text = "\
# test configuration
l1_size_bytes = 1048576
l1_line_bytes = 64
l1_latency_ns = 15
mem_latency_ns = 90
mem_bandwidth_bytes_per_s = 5e10
rob_entries = 32
clock_hz = 1e9
comp_latency_cycles = 10
instr_latency.vfmacc_sc = 4
";
        let cfg = MachineConfig::from_kv_text(text).unwrap();
        assert_eq!(cfg.l1_size_bytes, 1048576);
        assert_eq!(cfg.mem_latency_ns, 90.0);
        assert_eq!(cfg.rob_entries, 32);
        assert_eq!(cfg.comp_latency_cycles(), 10);
        assert_eq!(cfg.instr_latency[&Mnemonic::VnsrlImm], 10);
        assert_eq!(cfg.instr_latency[&Mnemonic::VfmaccSc], 4);
    }

    #[test]
    fn config_errors_carry_line_numbers() {
        let err = MachineConfig::from_kv_text("l1_size_bytes = 1\n\nnot a pair\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::Parse {
                line: 3,
                msg: "expected `key = value`, got `not a pair`".into()
            }
        );
        let err = MachineConfig::from_kv_text("mystery_knob = 7\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }
}
