//! Stability certificates for
//!
//! ```text
//! x'(t) + a0(t)·x(t) + Σ a_k(t)·x(h_k(t)) + ∫_{g(t)}^t K(t,s)·x(s) ds = f(t)
//! ```
//!
//! Each criterion produces a [`Certificate`]: a left-hand side, the threshold
//! it must stay strictly below, the constants that went into it and a
//! provenance trail.
//!
//! Three families are available. *Explicit* criteria use sup-norms and
//! oscillation bounds only. *Direct* criteria evaluate the Cauchy-type
//! integral `∫ e^{−∫_s^t ρ} w(s) ds` numerically by integrating
//! `S' = −ρS + w` over a finite horizon. *Comparators* reproduce
//! stability tests from the literature for side-by-side runs.

mod compare;
mod direct;
mod explicit;
mod ode;
mod sweep;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use compare::{
    arithmetic_tau_star, harmonic_tau_star, product_limsup, gil, gil_printed, lambda_split, zhang, GilOptions, LambdaPolicy,
};
pub use direct::{integral, nondelay_integral, refined_integral, single_delay_integral, DirectConfig};
pub use explicit::{delay_only, explicit, kernel_only, nondelay_explicit, single_delay_explicit};
pub use ode::{fundamental_decay, ode_check, OdeParams, OdeVariant};
pub use sweep::{sweep_boundary, SweepOptions};

use crate::error::{Error, Result};
use crate::kernelfunc::{check_offset, KernelFunction, MomentMode};
use crate::scalar::Real;
use crate::timefunc::{BoundMode, SplitPolicy, TightConfig, TimeFunction};

/// One delayed term `a_k(t)·x(t − offset_k(t))` with `0 ≤ offset_k ≤ τ_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DelayTerm<T> {
    pub coef: TimeFunction<T>,
    pub tau: T,
    /// `t − h_k(t)`; a constant `τ_k` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_offset: Option<TimeFunction<T>>,
}

impl<T: Real> DelayTerm<T> {
    pub fn new(coef: TimeFunction<T>, tau: T) -> Self {
        Self { coef, tau, delay_offset: None }
    }

    pub fn with_offset(coef: TimeFunction<T>, tau: T, offset: TimeFunction<T>) -> Self {
        Self { coef, tau, delay_offset: Some(offset) }
    }

    pub fn offset(&self) -> TimeFunction<T> {
        self.delay_offset.clone().unwrap_or_else(|| TimeFunction::constant(self.tau))
    }

    pub fn offset_at(&self, t: T) -> T {
        self.delay_offset.as_ref().map_or(self.tau, |g| g.eval(t))
    }

    pub(crate) fn offset_at_side(&self, t: T, side: crate::timefunc::Side) -> T {
        self.delay_offset.as_ref().map_or(self.tau, |g| g.eval_side(t, side))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EquationSpecRaw<T>", into = "EquationSpecRaw<T>", bound = "T: Real")]
pub struct EquationSpec<T> {
    pub(crate) terms: Vec<DelayTerm<T>>,
    pub(crate) nondelay_coef: Option<TimeFunction<T>>,
    pub(crate) kernel: Option<KernelFunction<T>>,
    pub(crate) forcing: Option<TimeFunction<T>>,
    pub(crate) t0: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct EquationSpecRaw<T> {
    #[serde(default)]
    pub terms: Vec<DelayTerm<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nondelay_coef: Option<TimeFunction<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelFunction<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<TimeFunction<T>>,
    #[serde(default)]
    pub t0: T,
}

impl<T: Real> TryFrom<EquationSpecRaw<T>> for EquationSpec<T> {
    type Error = Error;
    fn try_from(r: EquationSpecRaw<T>) -> Result<Self> {
        Self::new(r.terms, r.nondelay_coef, r.kernel, r.forcing, r.t0)
    }
}

impl<T: Real> From<EquationSpec<T>> for EquationSpecRaw<T> {
    fn from(s: EquationSpec<T>) -> Self {
        EquationSpecRaw {
            terms: s.terms,
            nondelay_coef: s.nondelay_coef,
            kernel: s.kernel,
            forcing: s.forcing,
            t0: s.t0,
        }
    }
}

impl<T: Real> EquationSpec<T> {
    pub fn new(
        terms: Vec<DelayTerm<T>>,
        nondelay_coef: Option<TimeFunction<T>>,
        kernel: Option<KernelFunction<T>>,
        forcing: Option<TimeFunction<T>>,
        t0: T,
    ) -> Result<Self> {
        if !(t0 >= T::zero()) || !t0.is_finite() {
            return Err(Error::InvalidFunction(format!("initial time must be finite and ≥ 0, got {t0}")));
        }
        if terms.is_empty() && kernel.is_none() && nondelay_coef.is_none() {
            return Err(Error::ShapeMismatch("equation has no terms, kernel or non-delay coefficient".into()));
        }
        for (k, term) in terms.iter().enumerate() {
            if !(term.tau >= T::zero()) || !term.tau.is_finite() {
                return Err(Error::InvalidFunction(format!("term {k}: delay bound {} must be ≥ 0", term.tau)));
            }
            if let Some(off) = &term.delay_offset {
                check_offset(off, term.tau, &format!("term {k} delay offset"))?;
            }
        }
        Ok(Self { terms, nondelay_coef, kernel, forcing, t0 })
    }

    /// `x' + Σ a_k x(t − τ_k) = 0` with constant delays.
    pub fn delays(terms: Vec<(TimeFunction<T>, T)>) -> Result<Self> {
        Self::new(terms.into_iter().map(|(c, tau)| DelayTerm::new(c, tau)).collect(), None, None, None, T::zero())
    }

    pub fn with_kernel(mut self, kernel: KernelFunction<T>) -> Self {
        self.kernel = Some(kernel);
        self
    }

    pub fn with_nondelay(mut self, a0: TimeFunction<T>) -> Self {
        self.nondelay_coef = Some(a0);
        self
    }

    pub fn with_forcing(mut self, f: TimeFunction<T>) -> Self {
        self.forcing = Some(f);
        self
    }

    pub fn with_t0(mut self, t0: T) -> Result<Self> {
        self.t0 = t0;
        Self::new(self.terms, self.nondelay_coef, self.kernel, self.forcing, t0)
    }

    pub fn terms(&self) -> &[DelayTerm<T>] {
        &self.terms
    }

    pub fn nondelay_coef(&self) -> Option<&TimeFunction<T>> {
        self.nondelay_coef.as_ref()
    }

    pub fn kernel(&self) -> Option<&KernelFunction<T>> {
        self.kernel.as_ref()
    }

    pub fn forcing(&self) -> Option<&TimeFunction<T>> {
        self.forcing.as_ref()
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    /// `a = Σ a_k`.
    pub fn coef_sum(&self) -> TimeFunction<T> {
        match self.terms.len() {
            0 => TimeFunction::zero(),
            1 => self.terms[0].coef.clone(),
            _ => TimeFunction::sum(self.terms.iter().map(|t| t.coef.clone()).collect()),
        }
    }

    pub fn tau_max(&self) -> T {
        self.terms.iter().map(|t| t.tau).fold(T::zero(), T::max)
    }

    pub fn sigma(&self) -> T {
        self.kernel.as_ref().map_or(T::zero(), |k| k.sigma())
    }

    pub fn max_lag(&self) -> T {
        self.tau_max().max(self.sigma())
    }

    /// Every time function in the equation, for period and breakpoint scans.
    pub(crate) fn functions(&self) -> Vec<TimeFunction<T>> {
        let mut fs: Vec<TimeFunction<T>> = Vec::new();
        for term in &self.terms {
            fs.push(term.coef.clone());
            fs.push(term.offset());
        }
        fs.extend(self.nondelay_coef.iter().cloned());
        fs.extend(self.forcing.iter().cloned());
        if let Some(k) = &self.kernel {
            fs.push(k.offset());
        }
        fs
    }

    pub fn component_periods(&self) -> Vec<T> {
        let mut ps: Vec<T> = self.functions().iter().flat_map(|f| f.component_periods()).collect();
        if let Some(crate::kernelfunc::KernelShape::Phase { omega_t, omega_s, .. }) = self.kernel.as_ref().map(|k| k.shape()) {
            let d = (*omega_t - *omega_s).abs();
            if d > T::zero() {
                ps.push(T::TAU() / d);
            }
        }
        ps
    }

    pub fn breakpoints_in(&self, a: T, b: T) -> Vec<T> {
        let mut out: Vec<T> = self.functions().iter().flat_map(|f| f.breakpoints_in(a, b)).collect();
        crate::timefunc::sort_dedup(&mut out, T::rel_tol(1e-12) * (T::one() + b.abs()));
        out
    }

    /// `Σ |a_k(t)|`.
    pub(crate) fn abs_coef_sum(&self, t: T, side: crate::timefunc::Side) -> T {
        self.terms.iter().map(|k| k.coef.eval_side(t, side).abs()).fold(T::zero(), |a, b| a + b)
    }

    /// `sup b̄`, zero without a kernel.
    pub fn b_abs_norm(&self, mode: MomentMode) -> T {
        self.kernel.as_ref().map_or(T::zero(), |k| k.b_abs_norm(self.t0, mode))
    }

    pub fn c_norm(&self, mode: MomentMode) -> T {
        self.kernel.as_ref().map_or(T::zero(), |k| k.c_norm(self.t0, mode))
    }

    /// `A = Σ ||a_k|| + ||b̄||`. With `restricted`, each `||a_k||` is taken
    /// over `t ≥ t0 + τ_k` only, where the delayed argument has left the
    /// initial interval.
    pub fn big_a(&self, mode: BoundMode, restricted: bool) -> T {
        let cfg = TightConfig::default();
        let sum = self
            .terms
            .iter()
            .map(|k| {
                if restricted {
                    k.coef.sup_norm_from(self.t0 + k.tau, mode, &cfg)
                } else {
                    k.coef.sup_norm_with(mode, &cfg)
                }
            })
            .fold(T::zero(), |a, b| a + b);
        sum + self.b_abs_norm(mode.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    NotCertified,
    Inapplicable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertMode {
    Conservative,
    Tight,
    Direct,
}

impl From<BoundMode> for CertMode {
    fn from(m: BoundMode) -> Self {
        match m {
            BoundMode::Conservative => CertMode::Conservative,
            BoundMode::Tight => CertMode::Tight,
        }
    }
}

macro_rules! criteria {
    ($($variant:ident => $name:literal, $doc:literal;)*) => {
        /// Identifier of a stability criterion.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Criterion {
            $(#[doc = $doc] #[serde(rename = $name)] $variant,)*
        }

        impl Criterion {
            pub const ALL: &'static [Criterion] = &[$(Criterion::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Criterion::$variant => $name,)*
                }
            }

            pub fn describe(self) -> &'static str {
                match self {
                    $(Criterion::$variant => $doc,)*
                }
            }
        }
    };
}

criteria! {
    OdeMean => "ode-mean", "Reference ODE: positive long-window averages (sampled)";
    OdeWindow => "ode-window", "Reference ODE: every window integral of length h at least a0";
    OdeSplit => "ode-split", "Reference ODE: positive floor plus bounded-antiderivative oscillation";
    IntegralA => "integral-a", "Integral test, reference coefficient a = Σ a_k";
    IntegralB => "integral-b", "Integral test, reference coefficient b (kernel mass)";
    IntegralC => "integral-c", "Integral test, reference coefficient a + b";
    RefinedIntegralA => "refined-integral-a", "Integral test with substituted derivative, reference a";
    RefinedIntegralB => "refined-integral-b", "Integral test with substituted derivative, reference b";
    RefinedIntegralC => "refined-integral-c", "Integral test with substituted derivative, reference a + b";
    ExplicitA => "explicit-a", "Norm test: A Σ τ_k ||a_k/ã|| + ||b̄/ã|| < e^{−α0}";
    ExplicitB => "explicit-b", "Norm test: Σ ||a_k/b̃|| + A ||c/b̃|| < e^{−β0}";
    ExplicitC => "explicit-c", "Norm test: A (Σ τ_k ||a_k/d|| + ||c/d||) < e^{−γ0}";
    DelayOnly => "delay-only", "Norm test without kernel: Σ ||a_k|| · Σ τ_k ||a_k/ã|| < e^{−α0}";
    KernelOnly => "kernel-only", "Norm test for a pure integral term: ||b̄|| ||c/b̃|| < e^{−β0}";
    SingleDelayIntegral => "single-delay-integral", "Integral test for one delay: weight |a|q + b̄";
    SingleDelayExplicit => "single-delay-explicit", "Norm test for one delay: ||aq/ã|| + ||b̄/ã|| < e^{−α0}";
    NondelayIntegral => "nondelay-integral", "Integral test against the non-delay coefficient";
    NondelayExplicit => "nondelay-explicit", "Norm test against the non-delay coefficient";
    Zhang => "zhang-asymptotic", "Fixed-point test for x' + a x + b x(h) = 0 (asymptotic stability only)";
    Gil => "gil", "Constant-delay test with a mean-level constant b";
    GilPrinted => "gil-printed", "Closed-form reduction of the constant-delay test for the square-wave family";
    ProductLimsup => "product-limsup", "Single-delay product test with a limsup over start times";
    LambdaSplit => "lambda-split", "Square-wave family: τμ max{μ/(μ−λ), β/(λ−β)} e^λ < 1";
    HutchinsonCombined => "hutchinson-combined", "Hutchinson model: split of K Σ r_j + u";
    HutchinsonGrowth => "hutchinson-growth", "Hutchinson model: split of K Σ r_j";
    HutchinsonControl => "hutchinson-control", "Hutchinson model: split of u";
    MackeyGlass => "mackey-glass", "Mackey-Glass model: floor (b+ν) r, oscillation u";
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Criterion::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::BadParams(format!("unknown criterion '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Certificate<T> {
    pub criterion: Criterion,
    pub verdict: Verdict,
    pub lhs: T,
    pub threshold: T,
    pub constants: BTreeMap<String, T>,
    pub mode: CertMode,
    pub provenance: Vec<String>,
}

impl<T: Real> Certificate<T> {
    /// Verdict from `lhs < threshold`; ties and NaN are not certified.
    pub fn decide(criterion: Criterion, lhs: T, threshold: T, mode: CertMode) -> Self {
        let verdict = if lhs < threshold { Verdict::Certified } else { Verdict::NotCertified };
        Self { criterion, verdict, lhs, threshold, constants: BTreeMap::new(), mode, provenance: Vec::new() }
    }

    pub fn inapplicable(criterion: Criterion, mode: CertMode, reason: impl Into<String>) -> Self {
        Self {
            criterion,
            verdict: Verdict::Inapplicable,
            lhs: T::nan(),
            threshold: T::nan(),
            constants: BTreeMap::new(),
            mode,
            provenance: vec![reason.into()],
        }
    }

    pub fn certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    /// `lhs / threshold`; below one means certified.
    pub fn ratio(&self) -> T {
        self.lhs / self.threshold
    }

    pub fn constant(&self, key: &str) -> Option<T> {
        self.constants.get(key).copied()
    }

    pub(crate) fn with(mut self, key: &str, value: T) -> Self {
        self.constants.insert(key.to_string(), value);
        self
    }

    pub(crate) fn note(mut self, line: impl Into<String>) -> Self {
        self.provenance.push(line.into());
        self
    }

    /// A condition of the criterion failed before any inequality was formed.
    pub(crate) fn refuse(mut self, reason: impl Into<String>) -> Self {
        self.verdict = Verdict::NotCertified;
        self.provenance.push(reason.into());
        self
    }
}

/// Knobs shared by the criteria.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct Options<T> {
    pub mode: BoundMode,
    pub split: SplitPolicy<T>,
    /// Take `||a_k||` in `A` only over `t ≥ t0 + τ_k`.
    pub restricted_norms: bool,
    pub direct: DirectConfig<T>,
    pub ode: OdeParams<T>,
    pub gil: GilOptions,
}

impl<T: Real> Default for Options<T> {
    fn default() -> Self {
        Self {
            mode: BoundMode::Conservative,
            split: SplitPolicy::ConstantMean,
            restricted_norms: false,
            direct: DirectConfig::default(),
            ode: OdeParams::default(),
            gil: GilOptions::default(),
        }
    }
}

/// Runs one criterion. Shape mismatches and infeasible splits come back as
/// inapplicable certificates instead of errors.
pub fn run<T: Real>(spec: &EquationSpec<T>, criterion: Criterion, opts: &Options<T>) -> Result<Certificate<T>> {
    use Criterion::*;
    let mode: CertMode = opts.mode.into();
    let result = match criterion {
        OdeMean | OdeWindow | OdeSplit => {
            let variant = match criterion {
                OdeMean => OdeVariant::Mean,
                OdeWindow => OdeVariant::Window,
                _ => OdeVariant::Split,
            };
            let a = reference_coef(spec);
            ode_check(&a, spec.t0, variant, &opts.ode, opts.split, opts.mode)
        }
        IntegralA => integral(spec, 'a', opts),
        IntegralB => integral(spec, 'b', opts),
        IntegralC => integral(spec, 'c', opts),
        RefinedIntegralA => refined_integral(spec, 'a', opts),
        RefinedIntegralB => refined_integral(spec, 'b', opts),
        RefinedIntegralC => refined_integral(spec, 'c', opts),
        ExplicitA => explicit(spec, 'a', opts),
        ExplicitB => explicit(spec, 'b', opts),
        ExplicitC => explicit(spec, 'c', opts),
        DelayOnly => delay_only(spec, opts),
        KernelOnly => kernel_only(spec, opts),
        SingleDelayIntegral => single_delay_integral(spec, opts),
        SingleDelayExplicit => single_delay_explicit(spec, opts),
        NondelayIntegral => nondelay_integral(spec, opts),
        NondelayExplicit => nondelay_explicit(spec, opts),
        Zhang => zhang(spec, opts),
        Gil => gil(spec, opts),
        ProductLimsup => product_limsup(spec, opts),
        GilPrinted | LambdaSplit | HutchinsonCombined | HutchinsonGrowth | HutchinsonControl | MackeyGlass => {
            Err(Error::ShapeMismatch(format!("{criterion} applies to a parameter family, not an equation spec")))
        }
    };
    match result {
        Err(
            e @ (Error::ShapeMismatch(_)
            | Error::SplitInfeasible(_)
            | Error::ReferenceOdeUnstable(_)
            | Error::UnsupportedKernel(_)
            | Error::NonZeroMean { .. }),
        ) => {
            let mode = if criterion.is_direct() { CertMode::Direct } else { mode };
            Ok(Certificate::inapplicable(criterion, mode, e.to_string()))
        }
        other => other,
    }
}

impl Criterion {
    /// True for the reference-ODE checks, which say nothing about the delay
    /// equation itself.
    pub fn reference_only(self) -> bool {
        matches!(self, Criterion::OdeMean | Criterion::OdeWindow | Criterion::OdeSplit)
    }

    /// True for the criteria whose left side comes from integrating along the
    /// coefficients rather than from norm bounds.
    pub fn is_direct(self) -> bool {
        use Criterion::*;
        matches!(
            self,
            IntegralA
                | IntegralB
                | IntegralC
                | RefinedIntegralA
                | RefinedIntegralB
                | RefinedIntegralC
                | SingleDelayIntegral
                | NondelayIntegral
                | Zhang
                | ProductLimsup
        )
    }
}

/// Criteria that can be run on an equation spec (everything except the
/// parameter-family checks).
pub fn spec_criteria() -> Vec<Criterion> {
    use Criterion::*;
    Criterion::ALL
        .iter()
        .copied()
        .filter(|c| {
            !matches!(c, GilPrinted | LambdaSplit | HutchinsonCombined | HutchinsonGrowth | HutchinsonControl | MackeyGlass)
        })
        .collect()
}


/// Coefficient of the reference ODE for the stand-alone ODE checks: the
/// non-delay coefficient when present, otherwise `Σ a_k`.
fn reference_coef<T: Real>(spec: &EquationSpec<T>) -> TimeFunction<T> {
    spec.nondelay_coef.clone().unwrap_or_else(|| spec.coef_sum())
}

#[cfg(test)]
mod tests;
