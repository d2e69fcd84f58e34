//! Black-box tests of the command-line surface: exit codes, file outputs,
//! and the documented error behavior.

use std::process::Command;

fn vpack() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vpack"))
}

#[test]
fn posit_check_passes_for_supported_formats() {
    for (nbits, esbits) in [(16u32, 2u32), (8, 0), (8, 1), (10, 2)] {
        let out = vpack()
            .args([
                "posit-check",
                "--nbits",
                &nbits.to_string(),
                "--esbits",
                &esbits.to_string(),
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "posit<{nbits},{esbits}>: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.contains("0 violations"), "{stdout}");
    }
}

#[test]
fn posit_check_reports_pattern_count() {
    let out = vpack()
        .args(["posit-check", "--nbits", "16", "--esbits", "2"])
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    // All patterns except Zero and NaR.
    assert!(stdout.contains("65534 non-special patterns"), "{stdout}");
}

#[test]
fn posit_check_rejects_wide_formats_as_usage_error() {
    let out = vpack()
        .args(["posit-check", "--nbits", "32", "--esbits", "2"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = vpack()
        .args(["census", "--no-such-flag"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = vpack().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gemm_check_passes_and_identity_works() {
    let out = vpack()
        .args(["gemm", "--n", "16", "--mode", "uncompressed", "--check"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = vpack()
        .args(["gemm", "--n", "2", "--mode", "uncompressed", "--identity-a", "--check"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = vpack()
        .args(["gemm", "--n", "16", "--mode", "compressed", "--fill", "replicate", "--check"])
        .output()
        .unwrap();
    assert!(out.status.success());
}

#[test]
fn gemm_trace_feeds_census_and_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("g.trace");
    let out = vpack()
        .args([
            "gemm",
            "--n",
            "32",
            "--mode",
            "compressed",
            "--trace-out",
            trace.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());

    let out = vpack()
        .args(["census", "--trace", trace.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("vnsrl_imm"), "{stdout}");
    assert!(stdout.contains("vwmulu_sc"), "{stdout}");

    // rob_entries = 1 prints the serialized-sum cross-check and it must
    // match the total.
    let cfg = dir.path().join("serial.cfg");
    std::fs::write(&cfg, "rob_entries = 1\n").unwrap();
    let out = vpack()
        .args([
            "simulate",
            "--trace",
            trace.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("matches total"), "{stdout}");
}

#[test]
fn simulate_honors_config_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("g.trace");
    vpack()
        .args([
            "gemm",
            "--n",
            "8",
            "--mode",
            "uncompressed",
            "--trace-out",
            trace.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    let cfg = dir.path().join("env.cfg");
    std::fs::write(&cfg, "rob_entries = 1\n").unwrap();
    let out = vpack()
        .args(["simulate", "--trace", trace.to_str().unwrap()])
        .env("VPACK_CONFIG", cfg.to_str().unwrap())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("serialized sum"));
}

#[test]
fn parse_failures_carry_line_numbers_and_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("bad.trace");
    std::fs::write(
        &trace,
        "# vlen_bits=4096\nseq,mnemonic,sew,vl,bytes,base,regs,scalar_ops\n0,bogus,16,4,8,0,-,0\n",
    )
    .unwrap();
    let out = vpack()
        .args(["census", "--trace", trace.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("line 3"), "{stderr}");
}

#[test]
fn census_on_empty_trace_prints_empty_table() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("empty.trace");
    std::fs::write(&trace, "# vlen_bits=4096\nseq,mnemonic,sew,vl,bytes,base,regs,scalar_ops\n")
        .unwrap();
    let out = vpack()
        .args(["census", "--trace", trace.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 1, "{stdout}");
    assert!(lines[0].starts_with("mnemonic"));
}

#[test]
fn accuracy_single_sample_and_mode_split() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("h.csv");
    let out = vpack()
        .args([
            "accuracy",
            "--mode",
            "zeropad",
            "--n",
            "1",
            "--out",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("# mode=zeropad"));
    let total: u64 = text
        .lines()
        .skip(2)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 1);

    let out = vpack()
        .args([
            "accuracy",
            "--mode",
            "both",
            "--n",
            "5000",
            "--out",
            dir.path().join("pair.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("pair.zeropad.csv").exists());
    assert!(dir.path().join("pair.replicate.csv").exists());
}

#[test]
fn sweep_cap_violation_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("big.sweep");
    std::fs::write(
        &spec,
        "workload.n = 8\nsweep.cap = 2\nsweep.comp_latency_cycles = 1, 2, 3\n",
    )
    .unwrap();
    let out = vpack()
        .args([
            "sweep",
            "--spec",
            spec.to_str().unwrap(),
            "--out",
            dir.path().join("o.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
