//! `oscidelay`: certify, simulate, sweep and reproduce from the command line.
//!
//! Exit codes: 0 certified (or success), 2 input or numerical error,
//! 3 nothing certified, 4 no criterion applicable.

mod input;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oscidelay::certify::{self, sweep_boundary, SweepOptions};
use oscidelay::models::{HutchinsonVariant, MgPrefactor, ModelOptions, Rounding};
use oscidelay::reproduce::{self, ReproReport};
use oscidelay::simulate::{self, SimOptions};
use oscidelay::{Certificate, Criterion, DecayEstimate, InitialHistory, Model, Options, Verdict};
use oscidelay::timefunc::{BoundMode, SplitPolicy};
use serde::Serialize;

use input::Problem;

const EXIT_ERROR: u8 = 2;
const EXIT_NOT_CERTIFIED: u8 = 3;
const EXIT_INAPPLICABLE: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "oscidelay", version, about = "Stability certificates for delay equations with oscillating coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run stability criteria on an equation or model file.
    Certify(CertifyArgs),
    /// Integrate an equation or model and fit its decay rate.
    Simulate(SimulateArgs),
    /// Bisect for the parameter value where a criterion stops certifying.
    Sweep(SweepArgs),
    /// Recompute the worked cases and compare with their reference values.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Conservative,
    Tight,
}

impl From<ModeArg> for BoundMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Conservative => BoundMode::Conservative,
            ModeArg::Tight => BoundMode::Tight,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PrefactorArg {
    Sound,
    Printed,
}

#[derive(Args, Debug, Clone)]
struct CriterionArgs {
    #[arg(long, value_enum, default_value = "conservative")]
    mode: ModeArg,
    /// Horizon for the integral tests.
    #[arg(long)]
    horizon: Option<f64>,
    /// Split the reference coefficient as `f − λ·sign(f)` instead of around its mean.
    #[arg(long, value_name = "LAMBDA")]
    shift: Option<f64>,
    /// Take each `||a_k||` only after the delay has left the initial interval.
    #[arg(long)]
    restricted_norms: bool,
    /// Rounded-up Hutchinson constants, `PREFACTOR,RATIO`.
    #[arg(long, value_name = "PREFACTOR,RATIO", value_parser = parse_rounding)]
    rounding: Option<(f64, f64)>,
    #[arg(long, value_enum, default_value = "sound")]
    mg_prefactor: PrefactorArg,
}

impl CriterionArgs {
    fn options(&self) -> Options {
        let mut o = Options { mode: self.mode.into(), restricted_norms: self.restricted_norms, ..Options::default() };
        if let Some(lambda) = self.shift {
            o.split = SplitPolicy::Shift { lambda };
        }
        o.direct.horizon = self.horizon;
        o
    }

    fn model_options(&self) -> ModelOptions<f64> {
        ModelOptions {
            mode: self.mode.into(),
            split: self.shift.map_or(SplitPolicy::ConstantMean, |lambda| SplitPolicy::Shift { lambda }),
            rounding: self.rounding.map(|(prefactor, ratio)| Rounding { prefactor, ratio }),
            mg_prefactor: match self.mg_prefactor {
                PrefactorArg::Sound => MgPrefactor::Sound,
                PrefactorArg::Printed => MgPrefactor::Printed,
            },
        }
    }
}

fn parse_rounding(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected PREFACTOR,RATIO")?;
    let p = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let r = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((p, r))
}

#[derive(Args, Debug)]
struct CertifyArgs {
    /// Equation or model JSON file.
    spec: PathBuf,
    /// Criterion to run; repeat for several. All applicable ones by default.
    #[arg(long = "criterion", value_name = "NAME")]
    criteria: Vec<Criterion>,
    #[command(flatten)]
    crit: CriterionArgs,
    /// Write the report here instead of standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    spec: PathBuf,
    /// Constant initial history.
    #[arg(long, conflicts_with = "history_file", allow_hyphen_values = true)]
    history: Option<f64>,
    /// Initial history as JSON (`{"kind": "constant", "value": ..}` or `{"kind": "function", "function": ..}`).
    #[arg(long)]
    history_file: Option<PathBuf>,
    /// End time.
    #[arg(long = "t-end", visible_alias = "T")]
    t_end: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Start of the envelope fit; a tenth of the way in by default.
    #[arg(long)]
    fit_start: Option<f64>,
    /// Trajectory CSV (`t,x`).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Decay estimate JSON.
    #[arg(long)]
    decay_out: Option<PathBuf>,
    /// Report JSON; standard output by default.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Equation or model JSON file used as a template.
    family: PathBuf,
    /// JSON pointer of a number to vary; repeat to tie several to one value.
    #[arg(long = "param", value_name = "POINTER", required = true)]
    params: Vec<String>,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], required = true, allow_hyphen_values = true)]
    range: Vec<f64>,
    #[arg(long)]
    criterion: Criterion,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Points checked for monotonicity before bisecting.
    #[arg(long, default_value_t = 17)]
    samples: usize,
    #[command(flatten)]
    crit: CriterionArgs,
    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, env = "OSCIDELAY_JOBS", default_value_t = 0)]
    jobs: usize,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    /// A case name or `all`.
    #[arg(long, default_value = "all")]
    which: String,
    #[arg(long, env = "OSCIDELAY_JOBS", default_value_t = 0)]
    jobs: usize,
    /// JSON report; the table always goes to standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Debug, Default)]
struct RunReport {
    tool: &'static str,
    version: &'static str,
    command: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input_sha256: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    certificates: Vec<Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trajectory: Option<TrajectorySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decay: Option<DecayEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    decay_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sweep: Option<SweepSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reproduction: Option<ReproReport>,
    exit_code: u8,
}

impl RunReport {
    fn new() -> Self {
        Self {
            tool: "oscidelay",
            version: env!("CARGO_PKG_VERSION"),
            command: std::env::args().skip(1).collect(),
            ..Self::default()
        }
    }
}

#[derive(Serialize, Debug)]
struct TrajectorySummary {
    points: usize,
    t_start: f64,
    t_end: f64,
    step: f64,
    final_value: f64,
    max_abs: f64,
}

#[derive(Serialize, Debug)]
struct SweepSummary {
    params: Vec<String>,
    criterion: Criterion,
    lo: f64,
    hi: f64,
    tol: f64,
    boundary: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Certify(a) => cmd_certify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Reproduce(a) => cmd_reproduce(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn emit(report: &RunReport, out: Option<&PathBuf>) -> Result<(), String> {
    let json = output::to_json(report).map_err(|e| e.to_string())?;
    match out {
        Some(p) => output::write_atomic(p, json.as_bytes()).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}

fn variant_of(c: Criterion) -> Option<HutchinsonVariant> {
    match c {
        Criterion::HutchinsonCombined => Some(HutchinsonVariant::Combined),
        Criterion::HutchinsonGrowth => Some(HutchinsonVariant::Growth),
        Criterion::HutchinsonControl => Some(HutchinsonVariant::Control),
        _ => None,
    }
}

/// One certificate for `problem`. Model criteria need the matching model;
/// equation criteria on a model run on its linearization.
fn certify_one(problem: &Problem, c: Criterion, a: &CriterionArgs) -> oscidelay::Result<Certificate> {
    let mode = BoundMode::from(a.mode).into();
    match (problem, c) {
        (Problem::Model(Model::Hutchinson(p)), _) if variant_of(c).is_some() => {
            p.certify(variant_of(c).unwrap(), &a.model_options())
        }
        (Problem::Model(Model::MackeyGlass(p)), Criterion::MackeyGlass) => p.certify(&a.model_options()),
        _ if variant_of(c).is_some() || c == Criterion::MackeyGlass => {
            Ok(Certificate::inapplicable(c, mode, "criterion needs the matching nonlinear model"))
        }
        _ => certify::run(&problem.linear()?, c, &a.options()),
    }
}

fn default_criteria(problem: &Problem) -> Vec<Criterion> {
    match problem {
        Problem::Linear(_) => certify::spec_criteria(),
        Problem::Model(Model::Hutchinson(_)) => {
            vec![Criterion::HutchinsonCombined, Criterion::HutchinsonGrowth, Criterion::HutchinsonControl]
        }
        Problem::Model(Model::MackeyGlass(_)) => vec![Criterion::MackeyGlass],
    }
}

fn cmd_certify(a: CertifyArgs) -> Result<u8, String> {
    let (bytes, value) = input::read_json(&a.spec)?;
    let problem = Problem::from_value(value)?;
    let criteria = if a.criteria.is_empty() { default_criteria(&problem) } else { a.criteria.clone() };
    let mut report = RunReport::new();
    report.input_sha256 = Some(output::sha256_hex(&bytes));
    for c in criteria {
        report.certificates.push(certify_one(&problem, c, &a.crit).map_err(|e| format!("{c}: {e}"))?);
    }
    // A certified reference ODE does not make the equation stable, so the
    // ODE checks decide the exit code only when nothing else ran.
    let decisive: Vec<&Certificate> = report.certificates.iter().filter(|c| !c.criterion.reference_only()).collect();
    let counted = if decisive.is_empty() { report.certificates.iter().collect() } else { decisive };
    let verdicts: Vec<Verdict> = counted.iter().map(|c| c.verdict).collect();
    report.exit_code = if verdicts.contains(&Verdict::Certified) {
        0
    } else if verdicts.contains(&Verdict::NotCertified) {
        EXIT_NOT_CERTIFIED
    } else {
        EXIT_INAPPLICABLE
    };
    emit(&report, a.out.as_ref())?;
    Ok(report.exit_code)
}

fn cmd_simulate(a: SimulateArgs) -> Result<u8, String> {
    let (bytes, value) = input::read_json(&a.spec)?;
    let problem = Problem::from_value(value)?;
    let history = match (&a.history, &a.history_file) {
        (Some(c), _) => InitialHistory::constant(*c),
        (None, Some(p)) => serde_json::from_value(input::read_json(p)?.1).map_err(|e| format!("history: {e}"))?,
        (None, None) => InitialHistory::default(),
    };
    let opts = SimOptions { t_end: a.t_end, step: a.step };
    let traj = match &problem {
        Problem::Linear(s) => simulate::simulate_linear(s, &history, &opts),
        Problem::Model(m) => simulate::simulate_model(m, &history, &opts),
    }
    .map_err(|e| e.to_string())?;
    let t0 = traj.grid[0];
    let t_end = *traj.grid.last().expect("trajectory is never empty");
    if let Some(p) = &a.out {
        output::write_atomic(p, traj.to_csv().as_bytes()).map_err(|e| format!("{}: {e}", p.display()))?;
    }
    let mut report = RunReport::new();
    report.input_sha256 = Some(output::sha256_hex(&bytes));
    report.trajectory = Some(TrajectorySummary {
        points: traj.grid.len(),
        t_start: t0,
        t_end,
        step: traj.step,
        final_value: traj.final_value(),
        max_abs: traj.max_abs_in(t0, t_end),
    });
    // For models the envelope is fitted to the deviation from equilibrium.
    let fit_traj = match &problem {
        Problem::Model(m) => {
            let eq = m.equilibrium().map_err(|e| e.to_string())?;
            simulate::Trajectory { values: traj.values.iter().map(|x| x - eq).collect(), ..traj.clone() }
        }
        Problem::Linear(_) => traj,
    };
    let fit_start = a.fit_start.unwrap_or(t0 + 0.1 * (t_end - t0));
    match simulate::estimate_decay(&fit_traj, fit_start) {
        Ok(est) => {
            if let Some(p) = &a.decay_out {
                let json = output::to_json(&est).map_err(|e| e.to_string())?;
                output::write_atomic(p, json.as_bytes()).map_err(|e| format!("{}: {e}", p.display()))?;
            }
            report.decay = Some(est);
        }
        Err(e) => report.decay_error = Some(e.to_string()),
    }
    emit(&report, a.report.as_ref())?;
    Ok(0)
}

fn cmd_sweep(a: SweepArgs) -> Result<u8, String> {
    let (bytes, template) = input::read_json(&a.family)?;
    let (lo, hi) = (a.range[0], a.range[1]);
    let family = |x: f64| -> oscidelay::Result<Certificate> {
        let v = input::substitute(&template, &a.params, x).map_err(oscidelay::Error::BadParams)?;
        let problem = Problem::from_value(v).map_err(oscidelay::Error::BadParams)?;
        certify_one(&problem, a.criterion, &a.crit)
    };
    family(lo).map_err(|e| e.to_string())?;
    let opts = SweepOptions { tol: a.tol, monotone_samples: a.samples, jobs: a.jobs };
    let boundary = sweep_boundary(family, lo, hi, &opts).map_err(|e| e.to_string())?;
    let mut report = RunReport::new();
    report.input_sha256 = Some(output::sha256_hex(&bytes));
    report.sweep = Some(SweepSummary { params: a.params.clone(), criterion: a.criterion, lo, hi, tol: a.tol, boundary });
    emit(&report, a.out.as_ref())?;
    Ok(0)
}

fn cmd_reproduce(a: ReproduceArgs) -> Result<u8, String> {
    let cases = reproduce::select(&a.which).map_err(|e| e.to_string())?;
    let result = reproduce::reproduce(&cases, a.jobs).map_err(|e| e.to_string())?;
    print!("{}", result.table());
    let code = if result.ok() { 0 } else { EXIT_NOT_CERTIFIED };
    if let Some(p) = &a.out {
        let mut report = RunReport::new();
        report.reproduction = Some(result);
        report.exit_code = code;
        output::write_atomic(p, output::to_json(&report).map_err(|e| e.to_string())?.as_bytes())
            .map_err(|e| format!("{}: {e}", p.display()))?;
    }
    Ok(code)
}
