//! The reproduction suite: every worked case recomputed with the settings
//! pinned in `reproduce/manifest.toml`, compared row by row against its
//! reference value.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::certify::{
    arithmetic_tau_star, gil_printed, harmonic_tau_star, run, sweep_boundary, Criterion, Options, SweepOptions,
};
use crate::error::{Error, Result};
use crate::models::{HutchinsonVariant, Model, ModelOptions, Rounding};
use crate::numerics::bisect_root;
use crate::simulate::{estimate_decay, simulate_linear, simulate_model, InitialHistory, SimOptions};
use crate::timefunc::{BoundMode, SplitPolicy};

const MANIFEST: &str = include_str!("reproduce/manifest.toml");

/// A named group of rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    OscillatingKernel,
    PureKernel,
    SquareWave,
    ControlledHutchinson,
    NonDecaying,
}

impl Case {
    pub const ALL: [Case; 5] =
        [Case::OscillatingKernel, Case::PureKernel, Case::SquareWave, Case::ControlledHutchinson, Case::NonDecaying];

    pub fn as_str(self) -> &'static str {
        match self {
            Case::OscillatingKernel => "oscillating-kernel",
            Case::PureKernel => "pure-kernel",
            Case::SquareWave => "square-wave",
            Case::ControlledHutchinson => "controlled-hutchinson",
            Case::NonDecaying => "non-decaying",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Case {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::BadParams(format!("unknown case '{s}'")))
    }
}

/// Cases selected by a `--which` argument: a case name or `all`.
pub fn select(which: &str) -> Result<Vec<Case>> {
    if which == "all" {
        Ok(Case::ALL.to_vec())
    } else {
        Ok(vec![which.parse()?])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expect {
    Match,
    KnownDiscrepancy,
    Positive,
    AtMost,
    AtLeast,
    Info,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Match,
    Mismatch,
    KnownDiscrepancy,
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn is_failure(self) -> bool {
        matches!(self, Status::Mismatch | Status::Fail)
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Match => "MATCH",
            Status::Mismatch => "MISMATCH",
            Status::KnownDiscrepancy => "KNOWN-DISCREPANCY",
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "INFO",
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
struct RowSpec {
    case: Case,
    quantity: String,
    expect: Expect,
    reference: Option<f64>,
    derived: Option<f64>,
    tolerance: Option<f64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct Settings {
    sweep_tol: f64,
    monotone_samples: usize,
    sim_t_end: f64,
    decay_t_start: f64,
    non_decaying_periods: usize,
    oscillating_kernel: CriterionSettings,
    pure_kernel: CriterionSettings,
    square_wave: SquareWaveSettings,
    controlled_hutchinson: HutchinsonSettings,
    non_decaying: NonDecayingSettings,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct CriterionSettings {
    criterion: Criterion,
    mode: BoundMode,
    #[serde(default)]
    sigma_range: Option<(f64, f64)>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct SquareWaveSettings {
    criterion: Criterion,
    mode: BoundMode,
    tau_range: (f64, f64),
    mu: f64,
    beta: f64,
    tau: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct HutchinsonSettings {
    h0_range: (f64, f64),
    h0: f64,
    initial: f64,
    rounded_prefactor: f64,
    rounded_ratio: f64,
}

#[derive(Clone, Debug, Deserialize)]
struct NonDecayingSettings {
    epsilons: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize)]
struct Manifest {
    settings: Settings,
    row: Vec<RowSpec>,
}

/// One line of the comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub case: Case,
    pub quantity: String,
    pub computed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derived: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub status: Status,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReproReport {
    pub rows: Vec<Row>,
    pub failures: usize,
}

impl ReproReport {
    pub fn ok(&self) -> bool {
        self.failures == 0
    }

    /// Fixed-width table with six significant digits.
    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<22} {:<34} {:>14} {:>14} {:>14}  {}\n",
            "case", "quantity", "computed", "reference", "derived", "status"
        );
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:<22} {:<34} {:>14} {:>14} {:>14}  {}\n",
                r.case.as_str(),
                r.quantity,
                format!("{:.6}", r.computed),
                fmt(r.reference),
                fmt(r.derived),
                r.status.label()
            ));
        }
        out
    }
}

fn manifest() -> Result<Manifest> {
    toml::from_str(MANIFEST).map_err(|e| Error::BadParams(format!("reproduction manifest: {e}")))
}

/// Runs the selected cases. `jobs` bounds the worker threads (`0` lets
/// rayon decide); the report does not depend on it.
pub fn reproduce(cases: &[Case], jobs: usize) -> Result<ReproReport> {
    let m = manifest()?;
    let s = &m.settings;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::BadParams(format!("thread pool: {e}")))?;
    let sweep = SweepOptions { tol: s.sweep_tol, monotone_samples: s.monotone_samples, jobs: 1 };
    let computed: Vec<(Case, BTreeMap<String, f64>)> = pool.install(|| {
        cases
            .par_iter()
            .map(|&c| compute(c, s, &sweep).map(|v| (c, v)))
            .collect::<Result<Vec<_>>>()
    })?;
    let values: BTreeMap<Case, BTreeMap<String, f64>> = computed.into_iter().collect();
    let mut rows = Vec::new();
    for spec in m.row.iter().filter(|r| cases.contains(&r.case)) {
        let computed = *values[&spec.case].get(&spec.quantity).ok_or_else(|| {
            Error::BadParams(format!("manifest names unknown quantity '{}' for {}", spec.quantity, spec.case))
        })?;
        rows.push(grade(spec, computed));
    }
    let failures = rows.iter().filter(|r| r.status.is_failure()).count();
    Ok(ReproReport { rows, failures })
}

fn grade(spec: &RowSpec, computed: f64) -> Row {
    let tol = spec.tolerance.unwrap_or(0.0);
    let near = |target: Option<f64>| target.is_some_and(|t| (computed - t).abs() <= tol);
    let pass = |ok: bool| if ok { Status::Pass } else { Status::Fail };
    let status = match spec.expect {
        Expect::Match => {
            if near(spec.reference) {
                Status::Match
            } else {
                Status::Mismatch
            }
        }
        Expect::KnownDiscrepancy => {
            if near(spec.derived) {
                Status::KnownDiscrepancy
            } else {
                Status::Mismatch
            }
        }
        Expect::Positive => pass(computed > 0.0),
        Expect::AtMost => pass(spec.reference.is_some_and(|r| computed <= r)),
        Expect::AtLeast => pass(spec.reference.is_some_and(|r| computed >= r)),
        Expect::Info => Status::Info,
    };
    Row {
        case: spec.case,
        quantity: spec.quantity.clone(),
        computed,
        reference: spec.reference,
        derived: spec.derived,
        tolerance: spec.tolerance,
        status,
    }
}

fn opts_for(mode: BoundMode) -> Options<f64> {
    Options { mode, ..Options::default() }
}

fn compute(case: Case, s: &Settings, sweep: &SweepOptions) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    let sim = SimOptions { t_end: Some(s.sim_t_end), step: None };
    let one = InitialHistory::constant(1.0);
    match case {
        Case::OscillatingKernel => {
            let c = &s.oscillating_kernel;
            let opts = opts_for(c.mode);
            let (lo, hi) = c.sigma_range.unwrap_or((0.05, 1.0));
            let v = sweep_boundary(|sigma| run(&catalog::oscillating_kernel(sigma)?, c.criterion, &opts), lo, hi, sweep)?;
            out.insert("sigma_boundary".into(), v);
            let traj = simulate_linear(&catalog::oscillating_kernel(0.4)?, &one, &sim)?;
            out.insert("lambda_hat_at_0.4".into(), estimate_decay(&traj, s.decay_t_start)?.lambda_hat);
        }
        Case::PureKernel => {
            let c = &s.pure_kernel;
            let spec = catalog::pure_kernel()?;
            let cert = run(&spec, c.criterion, &opts_for(c.mode))?;
            out.insert("beta0".into(), cert.constant("beta0").unwrap_or(f64::NAN));
            out.insert("lhs".into(), cert.ratio());
            out.insert("certified".into(), if cert.certified() { 1.0 } else { 0.0 });
            let est = estimate_decay(&simulate_linear(&spec, &one, &sim)?, s.decay_t_start)?;
            out.insert("lambda_hat".into(), est.lambda_hat);
            out.insert("r2".into(), est.r2);
        }
        Case::SquareWave => {
            let c = &s.square_wave;
            let lambda = (c.mu + c.beta) / 2.0;
            let opts = Options { split: SplitPolicy::Shift { lambda }, ..opts_for(c.mode) };
            let spec = catalog::square_wave_delay(c.mu, c.beta, c.tau)?;
            out.insert("ratio_at_tau".into(), run(&spec, c.criterion, &opts)?.ratio());
            let (lo, hi) = c.tau_range;
            let v = sweep_boundary(|t| run(&catalog::square_wave_delay(c.mu, c.beta, t)?, c.criterion, &opts), lo, hi, sweep)?;
            out.insert("tau_boundary".into(), v);
            out.insert(
                "lambda_hat_at_tau".into(),
                estimate_decay(&simulate_linear(&spec, &one, &sim)?, s.decay_t_start)?.lambda_hat,
            );
            for (mu, beta, tag) in [(1.1, 0.1, "1.1_0.1"), (0.55, 0.05, "0.55_0.05"), (11.0, 1.0, "11_1")] {
                out.insert(format!("arithmetic_tau_star_{tag}"), arithmetic_tau_star(mu, beta));
                out.insert(format!("harmonic_tau_star_{tag}"), harmonic_tau_star(mu, beta));
            }
            // Largest τ passing the delay half of the closed form, found by bisection on the certificate.
            let delay_ratio = |t: f64| gil_printed(0.55, 0.05, t).map_or(f64::NAN, |c| c.constant("delay_ratio").unwrap_or(f64::NAN));
            out.insert("closed_form_tau_bound_0.55_0.05".into(), bisect_root(&|t| delay_ratio(t) - 1.0, 1e-3, 10.0, 1e-13));
            let drift_ratio = |b: f64| gil_printed(11.0 * b, b, 1.0).map_or(f64::NAN, |c| c.constant("drift_ratio").unwrap_or(f64::NAN));
            out.insert("closed_form_beta_limit_mu_11_beta".into(), bisect_root(&|b| drift_ratio(b) - 1.0, 1e-3, 1.0, 1e-13));
        }
        Case::ControlledHutchinson => {
            let c = &s.controlled_hutchinson;
            let rounded = ModelOptions {
                rounding: Some(Rounding { prefactor: c.rounded_prefactor, ratio: c.rounded_ratio }),
                ..ModelOptions::default()
            };
            let plain = ModelOptions::default();
            let certify =
                |h: f64, o: &ModelOptions<f64>| catalog::controlled_hutchinson(h)?.certify(HutchinsonVariant::Combined, o);
            let cert = certify(c.h0, &rounded)?;
            out.insert("alpha0".into(), cert.constant("alpha0").unwrap_or(f64::NAN));
            let (lo, hi) = c.h0_range;
            out.insert("rounded_h0_boundary".into(), sweep_boundary(|h| certify(h, &rounded), lo, hi, sweep)?);
            out.insert("unrounded_h0_boundary".into(), sweep_boundary(|h| certify(h, &plain), lo, hi, sweep)?);
            let params = catalog::controlled_hutchinson(c.h0)?;
            let k = params.k;
            let traj = simulate_model(&Model::Hutchinson(params.clone()), &InitialHistory::constant(c.initial), &sim)?;
            out.insert("final_deviation".into(), (traj.final_value() - k).abs());
            let lin = simulate_linear(&params.linearize()?, &InitialHistory::constant(c.initial - k), &sim)?;
            out.insert("lambda_hat_linearized".into(), estimate_decay(&lin, s.decay_t_start)?.lambda_hat);
        }
        Case::NonDecaying => {
            let (mut dev, mut margin_min, mut margin_err, mut lam) = (0.0f64, f64::INFINITY, 0.0f64, 0.0f64);
            for &eps in &s.non_decaying.epsilons {
                let n = non_decaying_summary(eps, s.non_decaying_periods)?;
                dev = dev.max(n.max_period_deviation);
                margin_min = margin_min.min(n.window_margin);
                margin_err = margin_err.max((n.window_margin - (eps.exp() - 1.0 - eps)).abs());
                lam = lam.max(n.lambda_hat.abs());
            }
            out.insert("max_period_deviation".into(), dev);
            out.insert("min_window_margin".into(), margin_min);
            out.insert("window_margin_error".into(), margin_err);
            out.insert("max_abs_lambda_hat".into(), lam);
        }
    }
    Ok(out)
}

/// What the non-decaying equation does over a number of periods.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonDecayingSummary {
    pub period: f64,
    /// `max_n |x(n·period) − 1|`.
    pub max_period_deviation: f64,
    /// Smallest integral of the coefficient over one period, the positive
    /// margin that makes the reference ODE stable.
    pub window_margin: f64,
    pub lambda_hat: f64,
}

pub fn non_decaying_summary(epsilon: f64, periods: usize) -> Result<NonDecayingSummary> {
    let spec = catalog::non_decaying(epsilon)?;
    let period = epsilon + epsilon.exp() - 1.0;
    let opts = Options { ode: crate::certify::OdeParams { window: Some(period), ..Default::default() }, ..Options::default() };
    let window = run(&spec, Criterion::OdeWindow, &opts)?;
    let t_end = period * periods as f64;
    let traj = simulate_linear(&spec, &InitialHistory::constant(1.0), &SimOptions { t_end: Some(t_end), step: None })?;
    let mut dev = 0.0f64;
    for n in 1..=periods {
        let t = period * n as f64;
        let i = traj.grid.partition_point(|&g| g < t - 1e-9 * period);
        let x = traj.values.get(i).copied().unwrap_or(f64::NAN);
        dev = dev.max((x - 1.0).abs());
    }
    let est = estimate_decay(&traj, 0.0)?;
    Ok(NonDecayingSummary {
        period,
        max_period_deviation: dev,
        window_margin: if window.certified() { window.constant("a0").unwrap_or(f64::NAN) } else { f64::NAN },
        lambda_hat: est.lambda_hat,
    })
}
