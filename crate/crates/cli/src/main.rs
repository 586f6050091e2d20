//! `sqz`: kernel analysis, theorem verification runs and parameter sweeps
//! for parity-conserving spin-1/2 models.
//!
//! Exit status: 0 on success / within tolerance, 1 on a tolerance failure,
//! 2 on invalid input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use spinsqueeze::adiabatic::{adiabatic_slope, default_lambda_grid};
use spinsqueeze::dynamics::{
    commutator_oracle, commutator_prediction, default_time_grid, pair_commutator_check, short_time_slope_with,
    HarnessOptions, SlopeResult, XiKind,
};
use spinsqueeze::fit::geometric_grid;
use spinsqueeze::generalize::{transform_spec, transform_spec_dense, verify_generalized_t1, verify_generalized_t2};
use spinsqueeze::io::{curve_csv, ModelFile};
use spinsqueeze::kernel::{summarize, KernelOptions, KernelSummary};
use spinsqueeze::model::{verify_parity, CouplingSpec, SpinConfig};
use spinsqueeze::random::random_angles;
use spinsqueeze::SqueezingReport;

const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Parser)]
#[command(name = "sqz", version, about = "First-order spin squeezing checks for bilinear spin-1/2 models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kernel values R0, I0, I_max, R_max and the squeezing verdicts.
    Kernel(Common),
    /// Short-time slope of xi^2(t) from the coherent spin state.
    #[command(name = "verify-t1")]
    VerifyT1(Verify),
    /// Slope of xi^2(lambda) for the ground state of lambda H - h sum S^z.
    #[command(name = "verify-t2")]
    VerifyT2(Verify),
    /// Kernel quantities over a range of one model parameter.
    Sweep(Sweep),
    /// Dense-matrix checks of the structural identities (N <= 6).
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Common {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args)]
struct Verify {
    #[command(flatten)]
    common: Common,
    /// `start,stop,npts`, geometric spacing.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, default_value = "local")]
    xi: String,
    /// Curve CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Initial product state, e.g. `+-+-`.
    #[arg(long)]
    init: Option<String>,
    /// Field h (verify-t2).
    #[arg(long, default_value_t = 1.0)]
    field: f64,
    /// Relative slope tolerance.
    #[arg(long, default_value_t = 0.01)]
    tol: f64,
}

#[derive(Args)]
struct Sweep {
    #[command(flatten)]
    common: Common,
    /// `param:start:stop:count` with param one of chi, jx, jy, jz, offset.
    #[arg(long)]
    vary: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Field h used for the adiabatic prediction column.
    #[arg(long, default_value_t = 1.0)]
    field: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Also check the flip transform for this configuration.
    #[arg(long)]
    init: Option<String>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

enum Failure {
    Tolerance(String),
    Invalid(String),
}

impl From<spinsqueeze::Error> for Failure {
    fn from(e: spinsqueeze::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

fn load(path: &Path) -> Result<(ModelFile, CouplingSpec), Failure> {
    let file = ModelFile::load(path)?;
    let spec = file.build()?;
    Ok((file, spec))
}

fn parse_grid(text: &str) -> Result<(f64, f64, usize), Failure> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(invalid(format!("--grid expects start,stop,npts; got {text:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| invalid(format!("--grid: bad number {s:?}")));
    let (a, b) = (num(parts[0])?, num(parts[1])?);
    let n = parts[2].parse::<usize>().map_err(|_| invalid(format!("--grid: bad point count {:?}", parts[2])))?;
    if n > 0 && !(a > 0.0 && b >= a && b.is_finite()) {
        return Err(invalid("--grid needs 0 < start <= stop"));
    }
    Ok((a, b, n))
}

fn emit_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable output"));
}

fn write_out(path: &Path, text: &str) -> CmdResult {
    std::fs::write(path, text).map_err(|e| invalid(format!("cannot write {}: {e}", path.display())))
}

fn fmt_grid(grid: &[f64]) -> String {
    match grid {
        [] => "empty".into(),
        [a, .., b] => format!("{a:e},{b:e},{}", grid.len()),
        [a] => format!("{a:e},{a:e},1"),
    }
}

fn harness_options(seed: u64, xi: &str) -> Result<HarnessOptions, Failure> {
    let which: XiKind = xi.parse()?;
    let mut opts = HarnessOptions::default().with_which(which);
    opts.local.ascent.seed = seed;
    opts.kernel.ascent.seed = seed;
    Ok(opts)
}

#[derive(Serialize)]
struct KernelOutput {
    model_hash: String,
    seed: u64,
    n_sites: usize,
    summary: KernelSummary,
    /// Same quantities with only the `i != j` terms.
    active_terms: KernelSummary,
    predicted_t1_slope: f64,
}

fn cmd_kernel(args: &Common) -> CmdResult {
    let (_, spec) = load(&args.model)?;
    let mut opts = KernelOptions::default();
    opts.ascent.seed = args.seed;
    let summary = summarize(&spec, &opts);
    let mut active_opts = KernelOptions::active_terms();
    active_opts.ascent.seed = args.seed;
    let active_terms = summarize(&spec, &active_opts);
    let n = spec.n_sites() as f64;
    emit_json(&KernelOutput {
        model_hash: spec.model_hash(),
        seed: args.seed,
        n_sites: spec.n_sites(),
        predicted_t1_slope: -4.0 * active_terms.i_max.value / n + 0.0,
        summary,
        active_terms,
    });
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    command: &'a str,
    model_hash: String,
    seed: u64,
    xi: XiKind,
    init: Option<String>,
    field: Option<f64>,
    grid: Vec<f64>,
    slope: Option<f64>,
    slope_stderr: Option<f64>,
    predicted_slope: Option<f64>,
    relative_error: Option<f64>,
    reliable: Option<bool>,
    verdict: &'static str,
    /// Direct-vs-transformed agreement when `--init` is given.
    max_pointwise_diff: Option<f64>,
    tol: f64,
    pass: bool,
}

fn verdict(r: &SlopeResult) -> &'static str {
    if r.squeezes() {
        "first-order squeezing"
    } else {
        "no first-order squeezing"
    }
}

fn cmd_verify(args: &Verify, adiabatic: bool) -> CmdResult {
    let (_, spec) = load(&args.common.model)?;
    let opts = harness_options(args.common.seed, &args.xi)?;
    if adiabatic && !(args.field > 0.0 && args.field.is_finite()) {
        return Err(invalid(format!("--field must be positive, got {}", args.field)));
    }
    let grid = match &args.grid {
        Some(g) => {
            let (a, b, n) = parse_grid(g)?;
            geometric_grid(a, b, n)
        }
        None if adiabatic => default_lambda_grid(&spec, args.field),
        None => default_time_grid(&spec),
    };
    let config = match &args.init {
        Some(s) => {
            let c: SpinConfig = s.parse()?;
            if c.len() != spec.n_sites() {
                return Err(invalid(format!("--init has {} spins, model has {}", c.len(), spec.n_sites())));
            }
            Some(c)
        }
        None => None,
    };
    let command = if adiabatic { "verify-t2" } else { "verify-t1" };

    let (result, diff): (Option<SlopeResult>, Option<f64>) = if grid.is_empty() {
        (None, None)
    } else {
        match (&config, adiabatic) {
            (Some(c), false) => {
                let g = verify_generalized_t1(&spec, c, &grid, &opts)?;
                (Some(g.direct), Some(g.max_pointwise_diff))
            }
            (Some(c), true) => {
                let g = verify_generalized_t2(&spec, c, args.field, &grid, &opts)?;
                (Some(g.direct), Some(g.max_pointwise_diff))
            }
            (None, false) => (Some(short_time_slope_with(&spec, &grid, &opts)?), None),
            (None, true) => (Some(adiabatic_slope(&spec, args.field, &grid, &opts)?), None),
        }
    };

    let pass = match &result {
        None => true,
        Some(r) => r.within(args.tol) && diff.is_none_or(|d| d <= 1e-9),
    };
    let reports: &[SqueezingReport] = result.as_ref().map_or(&[], |r| &r.reports);
    if let Some(path) = &args.out {
        let mut meta = vec![
            ("command", command.to_string()),
            ("seed", args.common.seed.to_string()),
            ("model_hash", spec.model_hash()),
            ("grid", fmt_grid(&grid)),
            ("xi", opts.which.to_string()),
        ];
        if let Some(c) = &config {
            meta.push(("init", c.to_string()));
        }
        if adiabatic {
            meta.push(("field", format!("{:e}", args.field)));
        }
        if let Some(r) = &result {
            meta.push(("fit_slope", format!("{:.17e}", r.slope_estimate)));
            meta.push(("predicted_slope", format!("{:.17e}", r.predicted_slope)));
        }
        write_out(path, &curve_csv(&meta, &grid, reports))?;
    }
    emit_json(&VerifyOutput {
        command,
        model_hash: spec.model_hash(),
        seed: args.common.seed,
        xi: opts.which,
        init: config.as_ref().map(|c| c.to_string()),
        field: adiabatic.then_some(args.field),
        slope: result.as_ref().map(|r| r.slope_estimate),
        slope_stderr: result.as_ref().map(|r| r.slope_stderr),
        predicted_slope: result.as_ref().map(|r| r.predicted_slope),
        relative_error: result.as_ref().map(|r| r.relative_error),
        reliable: result.as_ref().map(|r| r.reliable),
        verdict: result.as_ref().map_or("no data", verdict),
        max_pointwise_diff: diff,
        grid,
        tol: args.tol,
        pass,
    });
    if pass {
        Ok(())
    } else {
        Err(Failure::Tolerance(format!("{command}: slope outside tolerance {}", args.tol)))
    }
}

fn parse_vary(text: &str) -> Result<(String, Vec<f64>), Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 4 {
        return Err(invalid(format!("--vary expects param:start:stop:count; got {text:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| invalid(format!("--vary: bad number {s:?}")));
    let (a, b) = (num(parts[1])?, num(parts[2])?);
    let n = parts[3].parse::<usize>().map_err(|_| invalid(format!("--vary: bad count {:?}", parts[3])))?;
    let values = match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    };
    Ok((parts[0].to_string(), values))
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    model_hash: String,
    r0: f64,
    i0: f64,
    i_max: f64,
    r_max: f64,
    predicted_t1_slope: f64,
    predicted_t2_slope: f64,
}

fn cmd_sweep(args: &Sweep) -> CmdResult {
    let (file, _) = load(&args.common.model)?;
    let (param, values) = parse_vary(&args.vary)?;
    if !(args.field > 0.0 && args.field.is_finite()) {
        return Err(invalid(format!("--field must be positive, got {}", args.field)));
    }
    let mut opts = KernelOptions::default();
    opts.ascent.seed = args.common.seed;
    let mut active = KernelOptions::active_terms();
    active.ascent.seed = args.common.seed;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| {
            let spec = file.with_parameter(&param, v)?.build()?;
            let s = summarize(&spec, &opts);
            let a = summarize(&spec, &active);
            let n = spec.n_sites() as f64;
            Ok(SweepRow {
                value: v,
                model_hash: spec.model_hash(),
                r0: s.r0,
                i0: s.i0,
                i_max: s.i_max.value,
                r_max: s.r_max.value,
                predicted_t1_slope: -4.0 * a.i_max.value / n + 0.0,
                predicted_t2_slope: -2.0 * a.r_max.value / (args.field * n) + 0.0,
            })
        })
        .collect::<Result<_, Failure>>()?;
    if let Some(path) = &args.out {
        let mut text = String::new();
        writeln!(text, "# command: sweep").unwrap();
        writeln!(text, "# seed: {}", args.common.seed).unwrap();
        writeln!(text, "# model_hash: {}", file.build()?.model_hash()).unwrap();
        writeln!(text, "# vary: {}", args.vary).unwrap();
        writeln!(text, "# field: {:e}", args.field).unwrap();
        writeln!(text, "{param},r0,i0,i_max,r_max,predicted_t1_slope,predicted_t2_slope").unwrap();
        for r in &rows {
            writeln!(
                text,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                r.value, r.r0, r.i0, r.i_max, r.r_max, r.predicted_t1_slope, r.predicted_t2_slope
            )
            .unwrap();
        }
        write_out(path, &text)?;
    }
    emit_json(&serde_json::json!({ "command": "sweep", "parameter": param, "seed": args.common.seed, "rows": rows }));
    Ok(())
}

#[derive(Serialize)]
struct OracleOutput {
    model_hash: String,
    seed: u64,
    parity_residual: f64,
    commutator_max_dev: f64,
    pair_commutators_ok: bool,
    transform_max_dev: Option<f64>,
    tol: f64,
    pass: bool,
}

fn cmd_oracle(args: &OracleArgs) -> CmdResult {
    let (_, spec) = load(&args.common.model)?;
    let n = spec.n_sites();
    if n > spinsqueeze::dynamics::DENSE_ORACLE_CAP {
        return Err(invalid(format!("oracle needs n <= {}, got {n}", spinsqueeze::dynamics::DENSE_ORACLE_CAP)));
    }
    let parity_residual = verify_parity(&spec, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed);
    let mut commutator_max_dev = 0.0f64;
    for _ in 0..20 {
        let a = random_angles(n, &mut rng);
        let dev = (commutator_oracle(&spec, &a)? - commutator_prediction(&spec, &a)).norm();
        commutator_max_dev = commutator_max_dev.max(dev);
    }
    let pair_commutators_ok = pair_commutator_check(n.clamp(2, 4))?;
    let transform_max_dev = match &args.init {
        None => None,
        Some(s) => {
            let c: SpinConfig = s.parse()?;
            let closed = transform_spec(&spec, &c)?;
            let dense = transform_spec_dense(&spec, &c)?;
            let h1 = spinsqueeze::oracle::dense_hamiltonian(&closed);
            let h2 = spinsqueeze::oracle::dense_hamiltonian(&dense);
            Some(spinsqueeze::oracle::max_abs_diff(&h1, &h2))
        }
    };
    let pass = parity_residual <= args.tol
        && commutator_max_dev <= args.tol
        && pair_commutators_ok
        && transform_max_dev.is_none_or(|d| d <= args.tol);
    emit_json(&OracleOutput {
        model_hash: spec.model_hash(),
        seed: args.common.seed,
        parity_residual,
        commutator_max_dev,
        pair_commutators_ok,
        transform_max_dev,
        tol: args.tol,
        pass,
    });
    if pass {
        Ok(())
    } else {
        Err(Failure::Tolerance("oracle deviation above tolerance".into()))
    }
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("SQZ_THREADS") {
        let n: usize = v.parse().map_err(|_| invalid(format!("SQZ_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(invalid("SQZ_THREADS must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| invalid(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Kernel(a) => cmd_kernel(a),
        Command::VerifyT1(a) => cmd_verify(a, false),
        Command::VerifyT2(a) => cmd_verify(a, true),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Oracle(a) => cmd_oracle(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance(msg)) => {
            eprintln!("sqz: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("sqz: error: {msg}");
            ExitCode::from(2)
        }
    }
}
