//! Command-line front end: `run`, `verify`, `tables` and `expand`.
//!
//! [`run`] returns the rendered stdout/stderr and the exit code instead of
//! printing, so the binary is a thin wrapper and tests can call it directly.
//! Exit codes: 0 success, 1 verification or decode failure, 2 usage error.

use std::fmt::Write as _;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::circuits::{run_plan, CircuitKind};
use crate::elements::{detector_port, SpbsmKind};
use crate::error::Error;
use crate::hilbert::{BellLabel, GhzLabel, HyperBellLabel, HyperGhzLabel};
use crate::oracle::{expand_in_spbsm_basis, verify_all, AnyLabel, CheckKind, VerificationReport};
use crate::tables::{table_one, table_three, table_two};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const MAX_VERIFY_PHOTONS: usize = 8;
const MAX_RUN_PHOTONS: usize = 16;

#[derive(Debug, Parser)]
#[command(
    name = "hsa",
    version,
    about = "Hyperentangled Bell/GHZ state analysis with cross-Kerr parity probes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Bell,
    Ghz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    #[value(name = "I")]
    One,
    #[value(name = "II")]
    Two,
    #[value(name = "III")]
    Three,
}

#[derive(Debug, clap::Args)]
struct StateArgs {
    #[arg(long, value_enum, default_value = "bell")]
    mode: Mode,
    /// Photon count (GHZ mode only; defaults to 3).
    #[arg(long)]
    photons: Option<usize>,
    /// Polarization label, e.g. `Phi+` or `-:100`.
    #[arg(long, allow_hyphen_values = true)]
    pol: Option<String>,
    /// Spatial-mode label, e.g. `Psi-` or `+:010`.
    #[arg(long, allow_hyphen_values = true)]
    spatial: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the analyzer once on a labelled input with sampled measurements.
    Run {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Exhaustively check every label of an analyzer.
    Verify {
        #[arg(long, value_enum, default_value = "bell")]
        mode: Mode,
        #[arg(long)]
        photons: Option<usize>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Print a relation table generated from the circuits.
    Tables {
        #[arg(long, value_enum)]
        which: Which,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Expand a labelled state in the single-photon Bell basis.
    Expand {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
}

/// Rendered result of one invocation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        }
    }

    fn usage(message: impl std::fmt::Display) -> Self {
        Self {
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
            code: EXIT_USAGE,
        }
    }
}

pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                Output {
                    stdout: String::new(),
                    stderr: rendered,
                    code: EXIT_USAGE,
                }
            } else {
                Output::ok(rendered)
            };
        }
    };
    match cli.command {
        Command::Run {
            state,
            seed,
            format,
        } => cmd_run(&state, seed, format),
        Command::Verify {
            mode,
            photons,
            format,
        } => cmd_verify(mode, photons, format),
        Command::Tables { which, format } => cmd_tables(which, format),
        Command::Expand { state, format } => cmd_expand(&state, format),
    }
}

fn parse_label(args: &StateArgs) -> Result<AnyLabel, Error> {
    match args.mode {
        Mode::Bell => {
            if let Some(n) = args.photons.filter(|&n| n != 2) {
                return Err(Error::ShapeMismatch(format!(
                    "bell mode uses 2 photons, got --photons {n}"
                )));
            }
            let pol = args.pol.as_deref().unwrap_or("Phi+").parse::<BellLabel>()?;
            let spatial = args
                .spatial
                .as_deref()
                .unwrap_or("Phi+")
                .parse::<BellLabel>()?;
            Ok(AnyLabel::Bell(HyperBellLabel::new(pol, spatial)))
        }
        Mode::Ghz => {
            let n = args.photons.unwrap_or(3);
            if !(2..=MAX_RUN_PHOTONS).contains(&n) {
                return Err(Error::ShapeMismatch(format!(
                    "--photons must be in 2..={MAX_RUN_PHOTONS}, got {n}"
                )));
            }
            let default = format!("+:{}", "0".repeat(n));
            let spatial = GhzLabel::parse(args.spatial.as_deref().unwrap_or(&default), n)?;
            let pol = GhzLabel::parse(args.pol.as_deref().unwrap_or(&default), n)?;
            Ok(AnyLabel::Ghz(HyperGhzLabel::new(pol, spatial)?))
        }
    }
}

#[derive(Debug, Serialize)]
struct RunOutput {
    input: String,
    probes: Vec<String>,
    spbsm: Vec<String>,
    ports: Vec<String>,
    decoded: String,
    seed: u64,
    pass: bool,
}

fn cmd_run(args: &StateArgs, seed: u64, format: Format) -> Output {
    let label = match parse_label(args) {
        Ok(l) => l,
        Err(e) => return Output::usage(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (record, _) = match run_plan(&label.plan(), &label.input_state(), &mut rng) {
        Ok(r) => r,
        Err(e) => {
            return Output {
                stdout: String::new(),
                stderr: format!("error: {e}\n"),
                code: EXIT_FAILURE,
            }
        }
    };
    let decoded = AnyLabel::decode(&record);
    let out = RunOutput {
        input: label.to_string(),
        probes: record
            .probe_outcomes
            .iter()
            .map(|o| o.class.to_string())
            .collect(),
        spbsm: record
            .spbsm_outcomes
            .iter()
            .map(|o| o.kind.to_string())
            .collect(),
        ports: record
            .spbsm_outcomes
            .iter()
            .map(|o| detector_port(*o).to_string())
            .collect(),
        decoded: decoded.to_string(),
        seed,
        pass: decoded == label,
    };
    let stdout = match format {
        Format::Json => json_line(&out),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "input:   {}", out.input);
            let _ = writeln!(s, "probes:  {}", out.probes.join(" "));
            let _ = writeln!(s, "spbsm:   {}", out.spbsm.join(" "));
            let _ = writeln!(s, "ports:   {}", out.ports.join(" "));
            let _ = writeln!(s, "decoded: {}", out.decoded);
            let _ = writeln!(s, "seed:    {}", out.seed);
            let _ = writeln!(s, "pass:    {}", out.pass);
            s
        }
    };
    Output {
        stdout,
        stderr: String::new(),
        code: if out.pass { EXIT_OK } else { EXIT_FAILURE },
    }
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn circuit_name(circuit: CircuitKind) -> &'static str {
    match circuit {
        CircuitKind::Hbsa => "hbsa",
        CircuitKind::Hgsa => "hgsa",
    }
}

fn cmd_verify(mode: Mode, photons: Option<usize>, format: Format) -> Output {
    let (circuit, n) = match mode {
        Mode::Bell => (CircuitKind::Hbsa, photons.unwrap_or(2)),
        Mode::Ghz => (CircuitKind::Hgsa, photons.unwrap_or(3)),
    };
    if circuit == CircuitKind::Hbsa && n != 2 {
        return Output::usage(format!("bell mode uses 2 photons, got --photons {n}"));
    }
    if !(2..=MAX_VERIFY_PHOTONS).contains(&n) {
        return Output::usage(format!(
            "--photons must be in 2..={MAX_VERIFY_PHOTONS}, got {n}"
        ));
    }
    let report = match verify_all(circuit, n) {
        Ok(r) => r,
        Err(e) => return Output::usage(e),
    };
    let stdout = match format {
        Format::Json => json_line(&json!({
            "circuit": circuit_name(report.circuit),
            "photons": report.n_photons,
            "labels_tested": report.labels_tested,
            "labels_passed": report.labels_passed,
            "total_records": report.total_records,
            "records_per_label": report.records_per_label,
            "record_probabilities": report.record_probabilities,
            "checks": report
                .check_failures
                .iter()
                .map(|(k, v)| (k.as_str(), *v))
                .collect::<std::collections::BTreeMap<_, _>>(),
            "failures": report.failures,
            "wall_time_s": report.wall_time.as_secs_f64(),
            "pass": report.passed(),
        })),
        Format::Text => render_report(&report),
    };
    Output {
        stdout,
        stderr: String::new(),
        code: if report.passed() {
            EXIT_OK
        } else {
            EXIT_FAILURE
        },
    }
}

fn render_report(report: &VerificationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} with {} photons",
        circuit_name(report.circuit),
        report.n_photons
    );
    let _ = writeln!(
        s,
        "{}/{} labels, {} records, {}",
        report.labels_passed,
        report.labels_tested,
        report.total_records,
        if report.passed() { "pass" } else { "FAIL" }
    );
    let per_label: Vec<String> = report
        .records_per_label
        .iter()
        .map(|(records, labels)| format!("{records} records x {labels} labels"))
        .collect();
    let _ = writeln!(s, "reachable: {}", per_label.join(", "));
    let probs: Vec<String> = report
        .record_probabilities
        .iter()
        .map(|p| format!("{p:.6}"))
        .collect();
    let _ = writeln!(s, "record probability: {}", probs.join(", "));
    for check in CheckKind::ALL {
        let n = report.check_failures.get(&check).copied().unwrap_or(0);
        let status = if n == 0 {
            "ok".to_string()
        } else {
            format!("{n} failures")
        };
        let _ = writeln!(s, "  {:<18}{status}", check.as_str());
    }
    for f in report.failures.iter().take(20) {
        let _ = writeln!(s, "  ! {} {}: {}", f.check.as_str(), f.label, f.detail);
    }
    let _ = writeln!(s, "time: {:.3} s", report.wall_time.as_secs_f64());
    s
}

fn cmd_tables(which: Which, format: Format) -> Output {
    let rendered = match which {
        Which::One => table_one().map(|rows| match format {
            Format::Json => json_line(&json!(rows
                .iter()
                .map(|r| json!({
                    "original": r.original.to_string(),
                    "new": r.new.to_string(),
                    "alpha1": r.probes[0].as_str(),
                    "alpha2": r.probes[1].as_str(),
                }))
                .collect::<Vec<_>>())),
            Format::Text => {
                let mut s = format!(
                    "{:<10}{:<10}{:<8}{}\n",
                    "original", "new", "alpha1", "alpha2"
                );
                for r in rows {
                    let _ = writeln!(
                        s,
                        "{:<10}{:<10}{:<8}{}",
                        r.original.to_string(),
                        r.new.to_string(),
                        r.probes[0].as_str(),
                        r.probes[1].as_str()
                    );
                }
                s
            }
        }),
        Which::Two => {
            let groups = table_two();
            let states = |g: &crate::tables::TableTwoGroup| -> Vec<String> {
                g.states
                    .iter()
                    .map(|l| format!("{}(P) {}(S)", l.pol, l.spatial))
                    .collect()
            };
            let detections = |g: &crate::tables::TableTwoGroup| -> Vec<String> {
                g.detections
                    .iter()
                    .map(|(a, b)| format!("{a}(A) {b}(B)"))
                    .collect()
            };
            Ok(match format {
                Format::Json => json_line(&json!(groups
                    .iter()
                    .map(|g| json!({ "states": states(g), "detections": detections(g) }))
                    .collect::<Vec<_>>())),
                Format::Text => {
                    let mut s = String::new();
                    for (i, g) in groups.iter().enumerate() {
                        let _ = writeln!(s, "group {}", i + 1);
                        let _ = writeln!(s, "  states:     {}", states(g).join(", "));
                        let _ = writeln!(s, "  detections: {}", detections(g).join(", "));
                    }
                    s
                }
            })
        }
        Which::Three => table_three().map(|rows| match format {
            Format::Json => json_line(&json!(rows
                .iter()
                .map(|r| json!({
                    "original": r.spatial.to_string(),
                    "alpha1": r.probes[0].as_str(),
                    "alpha2": r.probes[1].as_str(),
                    "alpha3": r.probes[2].as_str(),
                }))
                .collect::<Vec<_>>())),
            Format::Text => {
                let mut s = format!(
                    "{:<10}{:<8}{:<8}{}\n",
                    "original", "alpha1", "alpha2", "alpha3"
                );
                for r in rows {
                    let _ = writeln!(
                        s,
                        "{:<10}{:<8}{:<8}{}",
                        r.spatial.to_string(),
                        r.probes[0].as_str(),
                        r.probes[1].as_str(),
                        r.probes[2].as_str()
                    );
                }
                s
            }
        }),
    };
    match rendered {
        Ok(s) => Output::ok(s),
        Err(e) => Output {
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
            code: EXIT_FAILURE,
        },
    }
}

fn format_amplitude(a: Complex64) -> String {
    if a.im.abs() < 1e-12 {
        format!("{:+.6}", a.re)
    } else {
        format!("{:+.6}{:+.6}i", a.re, a.im)
    }
}

fn cmd_expand(args: &StateArgs, format: Format) -> Output {
    let label = match parse_label(args) {
        Ok(l) => l,
        Err(e) => return Output::usage(e),
    };
    let dist = match expand_in_spbsm_basis(&label.input_state()) {
        Ok(d) => d,
        Err(e) => return Output::usage(e),
    };
    let combo = |kinds: &[SpbsmKind]| -> String {
        kinds
            .iter()
            .map(SpbsmKind::to_string)
            .collect::<Vec<_>>()
            .join(" ")
    };
    let stdout = match format {
        Format::Json => json_line(&json!({
            "input": label.to_string(),
            "entries": dist
                .entries
                .iter()
                .map(|(k, a)| json!({
                    "outcomes": k.iter().map(SpbsmKind::to_string).collect::<Vec<_>>(),
                    "amplitude": [a.re, a.im],
                    "probability": a.norm_sqr(),
                }))
                .collect::<Vec<_>>(),
        })),
        Format::Text => {
            let mut s = format!("input: {label}\n");
            for (k, a) in &dist.entries {
                let _ = writeln!(
                    s,
                    "{:<width$}  {:>10}  {:.6}",
                    combo(k),
                    format_amplitude(*a),
                    a.norm_sqr(),
                    width = 5 * k.len() - 1
                );
            }
            s
        }
    };
    Output::ok(stdout)
}
