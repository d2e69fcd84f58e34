//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when a verification step fails (oracle
//! mismatch, posit round-trip violation), 2 on usage or input errors.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use vpack::formats::{error_density, Fill, Sampler};
use vpack::formats::posit::{decode, encode, PositFormat, PositValue};
use vpack::kernels::{
    instruction_census, oracle_compressed, oracle_uncompressed, prepare_compressed,
    prepare_uncompressed, KernelSpec, Matrix,
};
use vpack::sweep::{posit_whatif, run_sweep, write_rows_csv, SweepSpec};
use vpack::timing::{simulate, MachineConfig};
use vpack::vvm::{read_trace, write_trace, TraceRecord};

/// Environment variable holding the default machine configuration path for
/// `simulate` when `--config` is not given.
const CONFIG_ENV: &str = "VPACK_CONFIG";

#[derive(Parser)]
#[command(
    name = "vpack",
    about = "Vector-machine emulator and timing simulator for in-register compressed GEMM",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Zeropad,
    Replicate,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplerArg {
    Normal,
    Uniform,
}

impl From<SamplerArg> for Sampler {
    fn from(s: SamplerArg) -> Self {
        match s {
            SamplerArg::Normal => Sampler::Normal,
            SamplerArg::Uniform => Sampler::Uniform,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GemmMode {
    Compressed,
    Uncompressed,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FillArg {
    Zeropad,
    Replicate,
}

impl From<FillArg> for Fill {
    fn from(f: FillArg) -> Self {
        match f {
            FillArg::Zeropad => Fill::ZeroPad,
            FillArg::Replicate => Fill::Replicate,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Measure bfloat16 round-trip relative error and write histogram CSVs.
    Accuracy {
        /// Decompression fill mode; `both` writes one file per mode.
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        /// Distribution to draw samples from.
        #[arg(long, value_enum, default_value = "normal")]
        sampler: SamplerArg,
        /// Number of random samples.
        #[arg(long, default_value_t = 1_000_000)]
        n: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Histogram bin count over [0, 2^-7].
        #[arg(long, default_value_t = 64)]
        bins: usize,
        /// Output CSV path; with `--mode both` the mode name is inserted
        /// before the extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a GEMM kernel on the virtual vector machine.
    Gemm {
        /// Square matrix dimension.
        #[arg(long)]
        n: usize,
        /// Vector register length in bits.
        #[arg(long, default_value_t = 4096)]
        vlen: u32,
        #[arg(long, value_enum)]
        mode: GemmMode,
        /// Fill mode for compressed operand widening.
        #[arg(long, value_enum, default_value = "zeropad")]
        fill: FillArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Kernel body repetitions recorded in the trace.
        #[arg(long, default_value_t = 1)]
        reps: u32,
        /// Use the identity matrix for A instead of a random one.
        #[arg(long)]
        identity_a: bool,
        /// Write the committed-instruction trace here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Verify the result against the scalar oracle; mismatches exit 1.
        #[arg(long)]
        check: bool,
    },
    /// Count instructions per mnemonic in a trace file.
    Census {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Price a trace under one machine configuration.
    Simulate {
        #[arg(long)]
        trace: PathBuf,
        /// Machine configuration file; defaults to $VPACK_CONFIG, then to
        /// built-in defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the timing summary here in addition to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep and write one CSV row per grid point.
    Sweep {
        /// Sweep specification file.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Annotate rows with the conversion-latency budget for a
        /// hypothetical converter of this many cycles (needs a
        /// comp_latency_cycles axis).
        #[arg(long)]
        posit_budget: Option<u64>,
    },
    /// Exhaustively verify posit decode/encode round-trip and ordering.
    PositCheck {
        #[arg(long, default_value_t = 16)]
        nbits: u32,
        #[arg(long, default_value_t = 2)]
        esbits: u32,
    },
}

#[derive(Debug)]
enum CliError {
    /// Input, parse or io problems: exit 2.
    Usage(String),
    /// A verification step failed: exit 1.
    Verification(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Verification(m) => f.write_str(m),
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_trace(path: &Path) -> Result<(u32, Vec<TraceRecord>), CliError> {
    let file = File::open(path)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    read_trace(BufReader::new(file)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn with_mode_suffix(path: &Path, mode: Fill) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|s| s.to_str()) {
        Some(ext) => format!("{stem}.{mode}.{ext}"),
        None => format!("{stem}.{mode}"),
    };
    path.with_file_name(name)
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Accuracy {
            mode,
            sampler,
            n,
            seed,
            bins,
            out,
        } => {
            let fills: Vec<Fill> = match mode {
                ModeArg::Zeropad => vec![Fill::ZeroPad],
                ModeArg::Replicate => vec![Fill::Replicate],
                ModeArg::Both => vec![Fill::ZeroPad, Fill::Replicate],
            };
            let split = fills.len() > 1;
            for fill in fills {
                let hist = error_density(fill, sampler.into(), n, bins, seed).map_err(usage)?;
                let path = if split { with_mode_suffix(&out, fill) } else { out.clone() };
                let file = File::create(&path)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                hist.write_csv(BufWriter::new(file)).map_err(usage)?;
                println!(
                    "{fill}: mean relative error {:.3e} over {n} samples -> {}",
                    hist.mean,
                    path.display()
                );
            }
            Ok(())
        }
        Command::Gemm {
            n,
            vlen,
            mode,
            fill,
            seed,
            reps,
            identity_a,
            trace_out,
            check,
        } => {
            let fill: Fill = fill.into();
            let a = if identity_a {
                Matrix::identity(n).map_err(usage)?
            } else {
                Matrix::random(n, n, seed).map_err(usage)?
            };
            let b = Matrix::random(n, n, seed.wrapping_add(0x9e3779b97f4a7c15)).map_err(usage)?;
            let mut spec = KernelSpec::new(n, vlen, fill);
            spec.reps = reps;
            let mut run = match mode {
                GemmMode::Compressed => prepare_compressed(&spec, &a, &b),
                GemmMode::Uncompressed => prepare_uncompressed(&spec, &a, &b),
            }
            .map_err(usage)?;
            let trace = run.run().map_err(usage)?;
            let census = instruction_census(&trace);
            println!(
                "{} instructions, {} bytes loaded, {} bytes stored",
                census.total_instructions(),
                census.loaded_bytes,
                census.stored_bytes
            );
            if let Some(path) = trace_out {
                let file = File::create(&path)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                write_trace(BufWriter::new(file), vlen, &trace).map_err(usage)?;
                println!("trace written to {}", path.display());
            }
            if check {
                let mismatches = match mode {
                    GemmMode::Uncompressed => {
                        let want = oracle_uncompressed(&a, &b);
                        run.read_c_f32()
                            .data()
                            .iter()
                            .zip(want.data())
                            .filter(|(g, w)| g.to_bits() != w.to_bits())
                            .count()
                    }
                    GemmMode::Compressed => {
                        let want = oracle_compressed(&a, &b, fill);
                        run.read_c_bf16()
                            .iter()
                            .zip(&want)
                            .filter(|(g, w)| g != w)
                            .count()
                    }
                };
                if mismatches > 0 {
                    return Err(CliError::Verification(format!(
                        "{mismatches} of {} result elements differ from the scalar oracle",
                        n * n
                    )));
                }
                println!("check passed: result is bit-identical to the scalar oracle");
            }
            Ok(())
        }
        Command::Census { trace } => {
            let (_, records) = load_trace(&trace)?;
            let census = instruction_census(&records);
            println!("{:<12} {:>12}", "mnemonic", "count");
            for (m, c) in &census.counts {
                println!("{:<12} {:>12}", m.as_str(), c);
            }
            if !records.is_empty() {
                println!("{:<12} {:>12}", "loaded_bytes", census.loaded_bytes);
                println!("{:<12} {:>12}", "stored_bytes", census.stored_bytes);
                println!("{:<12} {:>12}", "scalar_ops", census.scalar_ops);
            }
            Ok(())
        }
        Command::Simulate { trace, config, out } => {
            let cfg = match config.or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from)) {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                    MachineConfig::from_kv_text(&text)
                        .map_err(|e| usage(format!("{}: {e}", path.display())))?
                }
                None => MachineConfig::default(),
            };
            let (_, records) = load_trace(&trace)?;
            let report = simulate(&records, &cfg);
            let mut text = report.summary();
            if cfg.rob_entries == 1 {
                text.push_str(&format!(
                    "serialized sum      {} (cross-check{})\n",
                    report.serial_cycles(),
                    if report.serial_cycles() == report.cycles {
                        ": matches total"
                    } else {
                        ""
                    }
                ));
            }
            print!("{text}");
            if let Some(path) = out {
                std::fs::write(&path, text)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            }
            Ok(())
        }
        Command::Sweep {
            spec,
            out,
            posit_budget,
        } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| usage(format!("{}: {e}", spec.display())))?;
            let spec = SweepSpec::from_kv_text(&text).map_err(usage)?;
            let result = run_sweep(&spec).map_err(usage)?;
            let file = File::create(&out)
                .map_err(|e| usage(format!("{}: {e}", out.display())))?;
            let mut w = BufWriter::new(file);
            match posit_budget {
                None => write_rows_csv(&mut w, &result.rows).map_err(usage)?,
                Some(cycles) => {
                    let annotations = posit_whatif(&result, cycles).map_err(usage)?;
                    let mut body = Vec::new();
                    write_rows_csv(&mut body, &result.rows).map_err(usage)?;
                    let mut lines = body.split(|b| *b == b'\n');
                    let header = std::str::from_utf8(lines.next().unwrap()).unwrap();
                    writeln!(w, "{header},budget_cycles,feasible").map_err(usage)?;
                    for (line, a) in lines.zip(&annotations) {
                        let line = std::str::from_utf8(line).unwrap();
                        writeln!(w, "{line},{:.6},{}", a.budget_cycles, a.feasible)
                            .map_err(usage)?;
                    }
                }
            }
            w.flush().map_err(usage)?;
            println!("{} rows written to {}", result.rows.len(), out.display());
            Ok(())
        }
        Command::PositCheck { nbits, esbits } => {
            if nbits > 16 {
                return Err(usage(
                    "exhaustive verification is limited to nbits <= 16".to_string(),
                ));
            }
            let fmt = PositFormat::new(nbits, esbits).map_err(usage)?;
            let mask = fmt.mask();
            let nar = fmt.nar_bits();
            let mut violations: Vec<String> = Vec::new();
            let mut checked = 0u64;
            let mut prev: Option<f64> = None;
            // Walk patterns in two's-complement order, NaR (the minimum
            // signed pattern) excluded from the ordering walk.
            let half = 1u32 << (nbits - 1);
            for signed in -(half as i64 - 1)..=(half as i64 - 1) {
                let bits = (signed as u32) & mask;
                let value = match decode(bits, fmt) {
                    PositValue::NaR => {
                        violations.push(format!("{bits:#06x}: unexpected NaR"));
                        continue;
                    }
                    PositValue::Zero => {
                        if bits != 0 {
                            violations.push(format!("{bits:#06x}: decoded to zero"));
                        }
                        0.0
                    }
                    PositValue::Real(v) => v,
                };
                if encode(value, fmt) != bits {
                    violations.push(format!(
                        "{bits:#06x}: round-trip gave {:#06x}",
                        encode(value, fmt)
                    ));
                }
                if let Some(p) = prev {
                    if !(value > p) {
                        violations.push(format!(
                            "{bits:#06x}: ordering broken ({value} <= {p})"
                        ));
                    }
                }
                prev = Some(value);
                if bits != 0 {
                    checked += 1;
                }
            }
            if decode(0, fmt) != PositValue::Zero {
                violations.push("0x0000: expected zero".into());
            }
            if decode(nar, fmt) != PositValue::NaR {
                violations.push(format!("{nar:#06x}: expected NaR"));
            }
            println!(
                "posit<{nbits},{esbits}>: {checked} non-special patterns verified, {} violations",
                violations.len()
            );
            if !violations.is_empty() {
                for v in violations.iter().take(10) {
                    eprintln!("  {v}");
                }
                if violations.len() > 10 {
                    eprintln!("  ... {} more", violations.len() - 10);
                }
                return Err(CliError::Verification(format!(
                    "{} posit patterns failed",
                    violations.len()
                )));
            }
            Ok(())
        }
    }
}
