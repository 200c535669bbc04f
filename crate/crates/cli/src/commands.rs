use std::fs;
use std::path::Path;

use clap::Args;
use serde::Serialize;

use riesz_kinetic::blowup::{self, BlowupReport, InitialFunctionals};
use riesz_kinetic::config::{BlowupCheck, OutputFormat, RunConfig};
use riesz_kinetic::diagnostics::Diagnostics;
use riesz_kinetic::grid::DistributionField;
use riesz_kinetic::identities::{self, EnergyCheck};
use riesz_kinetic::integrator::{KineticSolver, NullSink, RunResult, RunStatus};
use riesz_kinetic::output::{self, Provenance, RunWriter, CODE_VERSION};
use riesz_kinetic::riesz::{kernel_to_multiplier, multiplier_to_kernel, KernelConversion, KernelSpec, KernelTerm};
use riesz_kinetic::Error;

use crate::Common;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Config = 1,
    Halt = 2,
    Identity = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub code: Exit,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: Exit::Config,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NegativeDensity { .. } | Error::LinearSolve { .. } | Error::ToleranceNotMet { .. } => Exit::Halt,
            _ => Exit::Config,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type Outcome = Result<Exit, Failure>;

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let path = common
        .config
        .as_deref()
        .ok_or_else(|| Failure::config("--config PATH is required"))?;
    let mut config = RunConfig::load(path, &common.overrides)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(dir) = &common.output {
        config.output.directory = dir.clone();
    }
    Ok(config)
}

fn print_json<V: Serialize>(value: &V) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(value).map_err(Error::from)?);
    Ok(())
}

struct Prepared {
    f0: DistributionField<f64>,
    solver: KineticSolver<f64>,
    diagnostics: Diagnostics<f64>,
}

fn prepare(config: &RunConfig, dt_scale: f64, every_step: bool) -> Result<Prepared, Failure> {
    let grid = config.phase_grid()?;
    let f0 = config.initial_data.generate(grid, config.seed)?;
    let mut integrator = config.integrator_config();
    integrator.dt = integrator.dt * dt_scale;
    if every_step {
        integrator.diag_interval = 1;
    }
    let solver = KineticSolver::new(&grid, &config.kernel, integrator)?;
    let diagnostics = Diagnostics::new(&grid, &config.kernel, config.diagnostics_options())?;
    Ok(Prepared {
        f0,
        solver,
        diagnostics,
    })
}

#[derive(Debug, Serialize)]
struct RunSummary {
    status: RunStatus,
    steps_taken: usize,
    dt: f64,
    final_time: f64,
    records: usize,
    energy_check: EnergyCheck,
    energy_error: f64,
    config_hash: String,
    code_version: &'static str,
    seed: u64,
}

pub fn simulate(common: &Common) -> Outcome {
    let config = load(common)?;
    let p = prepare(&config, 1.0, false)?;
    let dir = config.output.directory.clone();
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), config.to_toml_string()?)?;
    let provenance = Provenance::new(config.config_hash(), config.seed, &config.kernel, config.grid.dim);
    let mut writer = RunWriter::new(
        &dir,
        config.output.wants(OutputFormat::Csv),
        config.output.wants(OutputFormat::Snapshot),
        config.output.snapshot_interval,
        provenance,
    )?;
    eprintln!(
        "simulate: {} steps of dt = {:e}, output in {}",
        p.solver.config().steps(),
        p.solver.dt(),
        dir.display()
    );
    let result = p.solver.run(&p.f0, &p.diagnostics, &mut writer)?;
    writer.finish(&result.final_field)?;
    let (energy_check, energy_error) = identities::energy_error(&result.series, config.integrator.sigma)?;
    let summary = RunSummary {
        status: result.status,
        steps_taken: result.steps_taken,
        dt: result.dt,
        final_time: result.final_field.time,
        records: result.series.len(),
        energy_check,
        energy_error,
        config_hash: config.config_hash(),
        code_version: CODE_VERSION,
        seed: config.seed,
    };
    let json = config.output.wants(OutputFormat::Json);
    if json {
        output::write_json(&dir.join("summary.json"), &summary)?;
    }
    if !config.blowup.checks.is_empty() {
        let reports = blowup_reports(&config, Some(&p.f0))?;
        if json {
            output::write_json(&dir.join("blowup.json"), &reports)?;
        }
    }
    print_json(&summary)?;
    Ok(halt_code(&result))
}

fn halt_code(result: &RunResult<f64>) -> Exit {
    match result.status {
        RunStatus::Completed => Exit::Ok,
        status => {
            eprintln!(
                "numerical halt ({status:?}) after {} steps at t = {:e}",
                result.steps_taken, result.final_field.time
            );
            Exit::Halt
        }
    }
}

fn kernel_terms(spec: &KernelSpec<f64>, dim: usize) -> Result<Vec<KernelTerm<f64>>, Failure> {
    let converted = multiplier_to_kernel(spec, dim)?;
    Ok(converted.terms().expect("kernel-sum form").to_vec())
}

fn is_mixed(terms: &[KernelTerm<f64>]) -> bool {
    terms.len() == 2 && terms[0].c == 1.0 && terms[1].c == -1.0
}

fn blowup_reports(config: &RunConfig, f0: Option<&DistributionField<f64>>) -> Result<Vec<BlowupReport<f64>>, Failure> {
    let terms = kernel_terms(&config.kernel, config.analysis_dim())?;
    let inputs = match (&config.blowup.closed_form, f0) {
        (Some(density), _) => InitialFunctionals::from_closed_form(density, &terms)?,
        (None, Some(f)) => InitialFunctionals::from_grid(f, &terms)?,
        (None, None) => {
            let f = config.initial_data.generate(config.phase_grid()?, config.seed)?;
            InitialFunctionals::from_grid(&f, &terms)?
        }
    };
    let sigma = config.integrator.sigma;
    let b = &config.blowup;
    let checks = if b.checks.is_empty() {
        vec![if is_mixed(&terms) {
            BlowupCheck::Mixed
        } else if sigma == 0.0 {
            BlowupCheck::SigmaZero
        } else {
            BlowupCheck::SigmaPositive
        }]
    } else {
        b.checks.clone()
    };
    checks
        .iter()
        .map(|check| {
            let r = match check {
                BlowupCheck::SigmaZero => blowup::check_sigma_zero(&inputs, b.horizon),
                BlowupCheck::SigmaPositive => blowup::check_sigma_positive(&inputs, sigma, b.delta, b.horizon),
                BlowupCheck::Mixed => blowup::check_mixed(&inputs, sigma, b.delta, b.horizon),
            };
            r.map_err(Failure::from)
        })
        .collect()
}

pub fn check_blowup(common: &Common) -> Outcome {
    let config = load(common)?;
    let reports = blowup_reports(&config, None)?;
    if let Some(dir) = &common.output {
        fs::create_dir_all(dir)?;
        output::write_json(&dir.join("blowup.json"), &reports)?;
    }
    print_json(&reports)?;
    Ok(Exit::Ok)
}

#[derive(Debug, Args)]
pub struct GronwallArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub c1: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub c2: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c3: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub h0: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub h0p: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    /// Number of table rows.
    #[arg(long, default_value_t = 11)]
    pub samples: usize,
    /// Directory for `gronwall.json`.
    #[arg(long, value_name = "DIR")]
    pub output: Option<std::path::PathBuf>,
}

#[derive(Debug, Serialize)]
struct GronwallRow {
    t: f64,
    bound: f64,
}

#[derive(Debug, Serialize)]
struct GronwallTable {
    c1: f64,
    c2: f64,
    c3: f64,
    h0: f64,
    h0p: f64,
    b_rate: f64,
    crossing_time: Option<f64>,
    rows: Vec<GronwallRow>,
}

pub fn gronwall(a: &GronwallArgs) -> Outcome {
    if !(a.c1 > 0.0 && a.c2 > 0.0) {
        return Err(Failure::config(format!("c1 and c2 must be positive (got {}, {})", a.c1, a.c2)));
    }
    if !(a.t_end > 0.0) || a.samples < 2 {
        return Err(Failure::config("need t_end > 0 and at least two samples"));
    }
    let rows = (0..a.samples)
        .map(|k| {
            let t = a.t_end * k as f64 / (a.samples - 1) as f64;
            GronwallRow {
                t,
                bound: blowup::gronwall_bound(a.h0, a.h0p, a.c1, a.c2, a.c3, t),
            }
        })
        .collect();
    let table = GronwallTable {
        c1: a.c1,
        c2: a.c2,
        c3: a.c3,
        h0: a.h0,
        h0p: a.h0p,
        b_rate: blowup::gronwall_rate(a.c1, a.c2),
        crossing_time: blowup::predict_crossing(a.h0, a.h0p, a.c1, a.c2, a.c3, a.t_end),
        rows,
    };
    if let Some(dir) = &a.output {
        fs::create_dir_all(dir)?;
        output::write_json(&dir.join("gronwall.json"), &table)?;
    }
    print_json(&table)?;
    Ok(Exit::Ok)
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    threshold: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct IdentityReport {
    energy_check: EnergyCheck,
    checks: Vec<Check>,
    passed: bool,
    config_hash: String,
}

pub fn verify_identities(common: &Common) -> Outcome {
    let config = load(common)?;
    let sigma = config.integrator.sigma;
    let v = &config.verify;
    let run = |scale: f64| -> Result<RunResult<f64>, Failure> {
        let p = prepare(&config, scale, true)?;
        Ok(p.solver.run(&p.f0, &p.diagnostics, &mut NullSink)?)
    };
    let fine = run(1.0)?;
    if fine.status != RunStatus::Completed {
        return Ok(halt_code(&fine));
    }
    let (kind, energy) = identities::energy_error(&fine.series, sigma)?;
    let energy_tol = if sigma == 0.0 { v.energy_tol } else { v.ledger_tol };
    let virial = identities::virial_error(&fine.series, sigma)?;
    let mut checks = vec![
        Check {
            name: "energy",
            value: energy,
            threshold: energy_tol,
            passed: energy <= energy_tol,
        },
        Check {
            name: "virial",
            value: virial,
            threshold: v.virial_tol,
            passed: virial <= v.virial_tol,
        },
    ];
    if v.order_check {
        let coarse = run(2.0)?;
        if coarse.status != RunStatus::Completed {
            return Ok(halt_code(&coarse));
        }
        let order = identities::observed_order(identities::virial_error(&coarse.series, sigma)?, virial);
        checks.push(Check {
            name: "virial_order",
            value: order,
            threshold: v.min_order,
            passed: order >= v.min_order,
        });
    }
    for c in &checks {
        let (value, cmp, threshold) = if c.name == "virial_order" {
            (format!("{:.3}", c.value), ">=", format!("{}", c.threshold))
        } else {
            (format!("{:.3e}", c.value), "<=", format!("{:e}", c.threshold))
        };
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{:<13} {value:>10} {cmp} {threshold:<6} {verdict}", c.name);
    }
    let passed = checks.iter().all(|c| c.passed);
    if let Some(dir) = &common.output {
        fs::create_dir_all(dir)?;
        let report = IdentityReport {
            energy_check: kind,
            checks,
            passed,
            config_hash: config.config_hash(),
        };
        output::write_json(&dir.join("identities.json"), &report)?;
    }
    Ok(if passed { Exit::Ok } else { Exit::Identity })
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Take the kernel from this config instead of the flags below.
    #[arg(long, value_name = "PATH")]
    pub config: Option<std::path::PathBuf>,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, default_value_t = 3)]
    pub dim: usize,
    #[arg(long, requires = "beta", conflicts_with = "term", allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    #[arg(long, requires = "kappa")]
    pub beta: Option<f64>,
    /// Power-law term `C:ALPHA`; repeatable.
    #[arg(long, value_name = "C:ALPHA", allow_hyphen_values = true)]
    pub term: Vec<String>,
}

#[derive(Debug, Serialize)]
struct Conversion {
    dim: usize,
    input: KernelSpec<f64>,
    output: Vec<KernelSpec<f64>>,
    normalization: Vec<Option<f64>>,
}

fn parse_term(s: &str) -> Result<KernelTerm<f64>, Failure> {
    let (c, alpha) = s
        .split_once(':')
        .ok_or_else(|| Failure::config(format!("term `{s}` must look like C:ALPHA")))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|e| Failure::config(format!("term `{s}`: {e}")))
    };
    Ok(KernelTerm {
        c: num(c)?,
        alpha: num(alpha)?,
    })
}

pub fn convert_kernel(a: &ConvertArgs) -> Outcome {
    let (spec, dim) = if let Some(path) = &a.config {
        let config = RunConfig::load(Path::new(path), &a.overrides)?;
        let dim = config.analysis_dim();
        (config.kernel, dim)
    } else if let (Some(kappa), Some(beta)) = (a.kappa, a.beta) {
        (KernelSpec::multiplier(kappa, beta), a.dim)
    } else if !a.term.is_empty() {
        let terms = a.term.iter().map(|s| parse_term(s)).collect::<Result<Vec<_>, _>>()?;
        (KernelSpec::kernel_sum(terms), a.dim)
    } else {
        return Err(Failure::config("give --config, --kappa/--beta or at least one --term"));
    };
    spec.validate(dim)?;
    let output = match kernel_to_multiplier(&spec, dim)? {
        KernelConversion::Single(s) if s == spec => vec![multiplier_to_kernel(&spec, dim)?],
        KernelConversion::Single(s) => vec![s],
        KernelConversion::PerTerm(v) => v,
    };
    let conversion = Conversion {
        dim,
        normalization: output::kernel_normalization(&spec, dim),
        input: spec,
        output,
    };
    print_json(&conversion)?;
    Ok(Exit::Ok)
}
