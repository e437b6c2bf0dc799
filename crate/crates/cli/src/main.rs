//! `spinport`: run, sweep and validate the spin–light protocols, and check
//! experimental design points.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use spinport_core::dsl::{self, Diagnostic};
use spinport_core::engine::EngineOptions;
use spinport_core::feasibility::{design_report, FeasibilityError, PhysicalParams};
use spinport_core::gaussian::GaussianState;
use spinport_core::oracle::propagate;
use spinport_core::program::Program;
use spinport_core::protocols::{annotate, run_program, EngineKind, ProtocolConfig, ProtocolError, ProtocolKind, ProtocolReport};
use spinport_core::spin_light::StokesNorm;
use spinport_core::validation::{validate_point, ValidationRow, DEFAULT_R, DEFAULT_RATIOS};

const EXIT_MISMATCH: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Grid endpoints are included when within this distance.
const GRID_SLACK: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "spinport", version, about = "Teleportation and swapping of atomic spin states with EPR light")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one protocol and write its report as JSON.
    Run(RunArgs),
    /// Run a builtin over a grid of r values and write CSV.
    Sweep(SweepArgs),
    /// Derive a design report from a physical parameter file.
    Feasibility(FeasibilityArgs),
    /// Cross-check the analytic engine against the oracle and Monte Carlo.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Parametric gain of the EPR source.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    r: f64,
    /// Spin-light coupling κ.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    kappa: f64,
    /// Photon ratio of the coherent readout pulse to an EPR beam.
    #[arg(long, default_value_t = 1e6)]
    ratio: f64,
    /// Feedforward gain overrides, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    ff: Option<Vec<f64>>,
    #[arg(long, default_value = "analytic")]
    engine: EngineKind,
    #[arg(long, default_value_t = 1)]
    shots: u64,
    #[arg(long, env = "SPINPORT_SEED")]
    seed: Option<u64>,
    /// Stokes normalization: canonical or sqrt_n.
    #[arg(long, default_value = "canonical")]
    stokes_norm: StokesNorm,
}

impl ConfigArgs {
    fn config(&self, r: f64) -> ProtocolConfig {
        ProtocolConfig {
            r,
            kappa: self.kappa,
            readout_ratio: self.ratio,
            feedforward_gains: self.ff.clone(),
            engine: self.engine,
            shots: self.shots,
            seed: self.seed,
            stokes_norm: self.stokes_norm,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Builtin protocol: atom_to_light, atom_to_atom or swap.
    #[arg(long, conflicts_with = "script", required_unless_present = "script")]
    builtin: Option<String>,
    /// Protocol script (.qp).
    #[arg(long)]
    script: Option<PathBuf>,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Coherent input `x,p`, one per input system in io order.
    #[arg(long = "input", value_name = "X,P", allow_negative_numbers = true)]
    inputs: Vec<String>,
    /// Extra script variable `name=value`.
    #[arg(long = "var", value_name = "NAME=VALUE")]
    vars: Vec<String>,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    builtin: String,
    /// `start:stop:step`, endpoints inclusive.
    #[arg(long)]
    grid: String,
    #[command(flatten)]
    cfg: ConfigArgs,
    /// CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeasibilityArgs {
    /// TOML or JSON file with flat key/value parameters.
    params: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Restrict to one builtin.
    #[arg(long)]
    builtin: Option<String>,
    /// r values, comma separated.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// Readout ratios, comma separated.
    #[arg(long, value_delimiter = ',')]
    ratio: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100_000)]
    shots: u64,
    #[arg(long, env = "SPINPORT_SEED", default_value_t = 1)]
    seed: u64,
    /// Write the oracle coefficient tables here.
    #[arg(long)]
    oracle_json: Option<PathBuf>,
    /// Relative QND gain error applied to the analytic engine.
    #[arg(long, hide = true, default_value_t = 0.0, allow_negative_numbers = true)]
    inject_gain_error: f64,
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { code: EXIT_INTERNAL, message: message.into() }
    }
}

impl From<ProtocolError> for Failure {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::SeedRequired => Failure::usage("SEED_REQUIRED: monte_carlo needs --seed or SPINPORT_SEED"),
            ProtocolError::Engine(e) => Failure::internal(e.to_string()),
            other => Failure::usage(other.to_string()),
        }
    }
}

fn diagnostics(path: &Path, diags: &[Diagnostic]) -> Failure {
    let lines: Vec<String> = diags.iter().map(|d| format!("{}:{d}", path.display())).collect();
    Failure::usage(lines.join("\n"))
}

fn builtin_kind(name: &str) -> Result<ProtocolKind, Failure> {
    ProtocolKind::from_name(name).ok_or_else(|| {
        let d = dsl::builtin(name).expect_err("not a protocol kind");
        Failure::usage(format!("{}: {}", d.code, d.message))
    })
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::internal(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::internal(e.to_string())),
    }
}

fn parse_input(text: &str) -> Result<GaussianState, Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, p] => match (x.parse::<f64>(), p.parse::<f64>()) {
            (Ok(x), Ok(p)) if x.is_finite() && p.is_finite() => Ok(GaussianState::coherent(x, p)),
            _ => Err(Failure::usage(format!("--input `{text}`: expected two finite numbers"))),
        },
        _ => Err(Failure::usage(format!("--input `{text}`: expected X,P"))),
    }
}

fn parse_var(text: &str) -> Result<(String, f64), Failure> {
    text.split_once('=')
        .and_then(|(k, v)| Some((k.trim().to_string(), v.trim().parse::<f64>().ok().filter(|v| v.is_finite())?)))
        .ok_or_else(|| Failure::usage(format!("--var `{text}`: expected NAME=NUMBER")))
}

/// Expands `start:stop:step` into an increasing list.
fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let bad = |why: &str| Failure::usage(format!("BAD_GRID: `{spec}`: {why}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad("expected start:stop:step"))?;
    let [start, stop, step] = parts[..] else { return Err(bad("expected start:stop:step")) };
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if step <= 0.0 {
        return Err(bad("step must be positive"));
    }
    if stop < start {
        return Err(bad("stop is below start"));
    }
    let count = ((stop - start) / step + GRID_SLACK).floor() as usize + 1;
    if count > 1_000_000 {
        return Err(bad("more than 10^6 points"));
    }
    Ok((0..count).map(|i| start + step * i as f64).filter(|v| *v <= stop + GRID_SLACK).collect())
}

fn summary(rep: &ProtocolReport) -> String {
    let noise: Vec<String> = rep.added_noise.iter().map(|n| format!("{}: x {:.6e}, p {:.6e}", n.system, n.x, n.p)).collect();
    format!("{}: fidelity {:.6}; added noise {}", rep.protocol, rep.fidelity_coherent, noise.join("; "))
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let cfg = args.cfg.config(args.cfg.r);
    cfg.validate()?;
    let inputs = args.inputs.iter().map(|s| parse_input(s)).collect::<Result<Vec<_>, _>>()?;

    let (program, kind): (Program, Option<ProtocolKind>) = match (&args.builtin, &args.script) {
        (Some(name), _) => {
            let kind = builtin_kind(name)?;
            if kind == ProtocolKind::AtomToLight && cfg.kappa == 0.0 {
                return Err(ProtocolError::ZeroCoupling.into());
            }
            (dsl::compile_builtin(kind, &cfg)?, Some(kind))
        }
        (None, Some(path)) => {
            let bytes = fs::read(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
            let ast = dsl::parse_bytes(&bytes).map_err(|d| diagnostics(path, &d))?;
            let mut vars = cfg.bindings();
            for v in &args.vars {
                let (k, x) = parse_var(v)?;
                vars.insert(k, x);
            }
            (dsl::compile(&ast, &vars).map_err(|d| diagnostics(path, &d))?, None)
        }
        (None, None) => return Err(Failure::usage("one of --builtin or --script is required")),
    };

    let pairs = program.io_pairs();
    if inputs.len() > pairs.len() {
        return Err(Failure::usage(format!("{} inputs given, protocol has {}", inputs.len(), pairs.len())));
    }
    let overrides: Vec<(String, GaussianState)> = pairs.iter().map(|(i, _)| i.clone()).zip(inputs).collect();
    let mut report = run_program(&program, &cfg, &overrides, EngineOptions::default())?;
    if let Some(kind) = kind {
        annotate(kind, &cfg, &mut report);
    }
    let json = report.to_json() + "\n";
    write_output(args.out.as_deref(), &json)?;
    eprintln!("{}", summary(&report));
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let grid = parse_grid(&args.grid)?;
    let kind = builtin_kind(&args.builtin)?;
    args.cfg.config(0.0).validate()?;
    let reports: Vec<ProtocolReport> = grid
        .par_iter()
        .map(|&r| kind.run(&args.cfg.config(r), &[]))
        .collect::<Result<_, _>>()?;

    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::internal(e.to_string());
    w.write_record(["r", "added_noise_x", "added_noise_p", "fidelity_coherent", "engine", "shots", "seed"]).map_err(csv_err)?;
    for (r, rep) in grid.iter().zip(&reports) {
        // Worst case over the output systems.
        let nx = rep.added_noise.iter().map(|n| n.x).fold(f64::NEG_INFINITY, f64::max);
        let np = rep.added_noise.iter().map(|n| n.p).fold(f64::NEG_INFINITY, f64::max);
        let engine = match rep.engine.kind {
            EngineKind::Analytic => "analytic",
            EngineKind::MonteCarlo => "monte_carlo",
        };
        let seed = rep.engine.seed.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([
            r.to_string(),
            nx.to_string(),
            np.to_string(),
            rep.fidelity_coherent.to_string(),
            engine.to_string(),
            rep.engine.shots.to_string(),
            seed,
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::internal(e.to_string()))?;
    write_output(args.out.as_deref(), &String::from_utf8(bytes).expect("csv is utf-8"))?;
    eprintln!("{}: {} rows", kind.name(), grid.len());
    Ok(())
}

fn cmd_feasibility(args: FeasibilityArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.params)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", args.params.display())))?;
    let report = PhysicalParams::parse(&text).and_then(|p| design_report(&p)).map_err(|e| match e {
        FeasibilityError::Missing(names) => Failure::usage(format!("missing fields: {}", names.join(", "))),
        other => Failure::usage(other.to_string()),
    })?;
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write_output(args.out.as_deref(), &json)?;
    for c in &report.checks {
        eprintln!("{:<28} {:?}  value {:.6e}  threshold {:.6e}", c.name, c.status, c.value, c.threshold);
    }
    Ok(())
}

fn print_table(rows: &[&ValidationRow]) {
    println!(
        "{:<14} {:>5} {:>8} {:>12} {:>12} {:>9} {:>14}  status",
        "protocol", "r", "ratio", "oracle_dev", "commutator", "mc_sigma", "residual_noise"
    );
    for row in rows {
        println!(
            "{:<14} {:>5} {:>8.0e} {:>12.3e} {:>12.3e} {:>9.3} {:>14.6e}  {}",
            row.protocol,
            row.r,
            row.readout_ratio,
            row.oracle_deviation,
            row.commutator_defect,
            row.mc_sigmas,
            row.residual_noise,
            if row.pass { "ok" } else { "MISMATCH" }
        );
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<bool, Failure> {
    let kinds = match &args.builtin {
        Some(name) => vec![builtin_kind(name)?],
        None => ProtocolKind::ALL.to_vec(),
    };
    let rs = args.r.clone().unwrap_or_else(|| DEFAULT_R.to_vec());
    let ratios = args.ratio.clone().unwrap_or_else(|| DEFAULT_RATIOS.to_vec());
    let mut points = Vec::new();
    for &k in &kinds {
        for &r in &rs {
            for &ratio in &ratios {
                points.push((k, ProtocolConfig { readout_ratio: ratio, ..ProtocolConfig::with_r(r) }));
            }
        }
    }
    let opts = EngineOptions { gain_error: args.inject_gain_error };
    let rows: Vec<ValidationRow> = points
        .par_iter()
        .map(|(k, cfg)| validate_point(*k, cfg, args.shots, args.seed, opts))
        .collect::<Result<_, _>>()?;

    if let Some(path) = &args.oracle_json {
        let tables = points
            .iter()
            .map(|(k, cfg)| {
                let program = k.program(cfg)?;
                let table = propagate(&program).map_err(|e| ProtocolError::InvalidConfig(e.to_string()))?;
                Ok(serde_json::json!({
                    "protocol": k.name(),
                    "r": cfg.r,
                    "readout_ratio": cfg.readout_ratio,
                    "table": table,
                }))
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        let json = serde_json::to_string_pretty(&tables).expect("tables serialize") + "\n";
        write_output(Some(path), &json)?;
    }

    print_table(&rows.iter().collect::<Vec<_>>());
    let failed: Vec<&ValidationRow> = rows.iter().filter(|r| !r.pass).collect();
    if failed.is_empty() {
        println!("all {} points agree", rows.len());
        Ok(true)
    } else {
        println!("\ndiscrepancies ({} of {} points):", failed.len(), rows.len());
        print_table(&failed);
        Ok(false)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a).map(|()| true),
        Command::Sweep(a) => cmd_sweep(a).map(|()| true),
        Command::Feasibility(a) => cmd_feasibility(a).map(|()| true),
        Command::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_MISMATCH),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
