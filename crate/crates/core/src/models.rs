//! Population models with a control term: a generalized Hutchinson equation
//!
//! ```text
//! N'(t) = N(t) Σ r_j(t)[K − N(h_j(t))] − u(t)[N(g(t)) − K]
//! ```
//!
//! and a Mackey-Glass equation
//!
//! ```text
//! N'(t) = r(t)[a N(h(t)) / (1 + N(h(t))^γ) − b N(t)] − u(t)[N(g(t)) − N*].
//! ```
//!
//! Both are linearized about their positive equilibrium and certified
//! through the delay-only norm test on the linearization.

use serde::{Deserialize, Serialize};

use crate::certify::{Certificate, Criterion, DelayTerm, EquationSpec};
use crate::error::{Error, Result};
use crate::kernelfunc::check_offset;
use crate::scalar::{lit, Real};
use crate::timefunc::{periodicity_of, ratio_sup_norm, Periodicity, BoundMode, Side, SplitPolicy, SplitResult, TightConfig, TimeFunction};

/// One growth term `r_j(t)[K − N(t − offset_j(t))]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct GrowthTerm<T> {
    pub r: TimeFunction<T>,
    pub tau: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_offset: Option<TimeFunction<T>>,
}

impl<T: Real> GrowthTerm<T> {
    pub fn new(r: TimeFunction<T>, tau: T) -> Self {
        Self { r, tau, delay_offset: None }
    }

    pub fn with_offset(r: TimeFunction<T>, tau: T, offset: TimeFunction<T>) -> Self {
        Self { r, tau, delay_offset: Some(offset) }
    }

    fn offset_at(&self, t: T, side: Side) -> T {
        self.delay_offset.as_ref().map_or(self.tau, |g| g.eval_side(t, side))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct HutchinsonParams<T> {
    /// Carrying capacity.
    pub k: T,
    pub r_terms: Vec<GrowthTerm<T>>,
    #[serde(default = "TimeFunction::zero")]
    pub u: TimeFunction<T>,
    #[serde(default)]
    pub sigma: T,
    /// `t − g(t)`; a constant `sigma` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_offset: Option<TimeFunction<T>>,
    #[serde(default)]
    pub t0: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MackeyGlassParams<T> {
    pub a: T,
    pub b: T,
    pub gamma: T,
    pub r: TimeFunction<T>,
    #[serde(default = "TimeFunction::zero")]
    pub u: TimeFunction<T>,
    pub tau: T,
    #[serde(default)]
    pub sigma: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_offset: Option<TimeFunction<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_offset: Option<TimeFunction<T>>,
    #[serde(default)]
    pub t0: T,
}

/// Positive equilibrium of the Mackey-Glass model and the slope `−ν` of its
/// production term there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MgEquilibrium<T> {
    pub n_star: T,
    pub nu: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case", bound = "T: Real")]
pub enum Model<T> {
    Hutchinson(HutchinsonParams<T>),
    MackeyGlass(MackeyGlassParams<T>),
}

/// Which coefficient carries the positive floor in the Hutchinson test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HutchinsonVariant {
    /// Split `K Σ r_j + u`.
    #[default]
    Combined,
    /// Split `K Σ r_j`; `u` is treated as a perturbation.
    Growth,
    /// Split `u`; the growth terms are treated as a perturbation.
    Control,
}

impl HutchinsonVariant {
    fn criterion(self) -> Criterion {
        match self {
            Self::Combined => Criterion::HutchinsonCombined,
            Self::Growth => Criterion::HutchinsonGrowth,
            Self::Control => Criterion::HutchinsonControl,
        }
    }
}

/// Prefactor used in the Mackey-Glass test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MgPrefactor {
    /// `(b + |ν|)||r|| + ||u||`, the sum of the linearized coefficient norms.
    #[default]
    Sound,
    /// `(b + ν)||r|| + ||u||`, smaller when `ν < 0`.
    Printed,
}

/// Rounded-up replacements for the constants of the Hutchinson test. They
/// must not be smaller than the computed values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Rounding<T> {
    /// Replaces `K Σ ||r_j|| + ||u||`.
    pub prefactor: T,
    /// Replaces every ratio norm `||r_j/ã||` and `||u/ã||`.
    pub ratio: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct ModelOptions<T> {
    pub mode: BoundMode,
    pub split: SplitPolicy<T>,
    pub rounding: Option<Rounding<T>>,
    pub mg_prefactor: MgPrefactor,
}

impl<T: Real> Default for ModelOptions<T> {
    fn default() -> Self {
        Self { mode: BoundMode::Conservative, split: SplitPolicy::ConstantMean, rounding: None, mg_prefactor: MgPrefactor::Sound }
    }
}

fn sum_of<T: Real>(fs: Vec<TimeFunction<T>>) -> TimeFunction<T> {
    match fs.len() {
        0 => TimeFunction::zero(),
        1 => fs.into_iter().next().unwrap(),
        _ => TimeFunction::sum(fs),
    }
}

fn sampled_min<T: Real>(f: &TimeFunction<T>, t0: T) -> T {
    let lb = f.lower_bound();
    if lb >= T::zero() {
        return lb;
    }
    let span = match periodicity_of(&f.component_periods()) {
        Periodicity::Periodic(p) => p,
        Periodicity::Constant => T::one(),
        Periodicity::Aperiodic => lit(100.0),
    };
    let n = 4096;
    (0..=n).map(|i| f.eval(t0 + span * T::count(i) / T::count(n))).fold(T::infinity(), T::min)
}

impl<T: Real> HutchinsonParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > T::zero()) {
            return Err(Error::BadParams(format!("carrying capacity must be positive, got {}", self.k)));
        }
        if self.r_terms.is_empty() {
            return Err(Error::BadParams("at least one growth term is required".into()));
        }
        if !(self.sigma >= T::zero()) || !(self.t0 >= T::zero()) {
            return Err(Error::BadParams("sigma and t0 must be nonnegative".into()));
        }
        for (j, term) in self.r_terms.iter().enumerate() {
            if !(term.tau >= T::zero()) {
                return Err(Error::BadParams(format!("growth term {j}: delay bound must be ≥ 0")));
            }
            if let Some(off) = &term.delay_offset {
                check_offset(off, term.tau, &format!("growth term {j} delay offset"))?;
            }
        }
        if let Some(g) = &self.g_offset {
            check_offset(g, self.sigma, "control delay offset")?;
        }
        Ok(())
    }

    /// `y' = −K Σ r_j y(h_j) − u y(g)`, written as `y' + Σ a_k y(h_k) = 0`.
    pub fn linearize(&self) -> Result<EquationSpec<T>> {
        self.validate()?;
        let mut terms: Vec<DelayTerm<T>> = self
            .r_terms
            .iter()
            .map(|t| DelayTerm { coef: t.r.times(self.k), tau: t.tau, delay_offset: t.delay_offset.clone() })
            .collect();
        terms.push(DelayTerm { coef: self.u.clone(), tau: self.sigma, delay_offset: self.g_offset.clone() });
        EquationSpec::new(terms, None, None, None, self.t0)
    }

    /// `N' = N Σ r_j [K − N(h_j)] − u [N(g) − K]`, where `past(s)` returns
    /// `N(s)` for `s ≤ t`.
    pub fn rhs(&self, t: T, side: Side, n: T, past: &dyn Fn(T) -> T) -> T {
        let growth = self
            .r_terms
            .iter()
            .map(|term| term.r.eval_side(t, side) * (self.k - past(t - term.offset_at(t, side))))
            .fold(T::zero(), |a, b| a + b);
        let g = self.g_offset.as_ref().map_or(self.sigma, |g| g.eval_side(t, side));
        n * growth - self.u.eval_side(t, side) * (past(t - g) - self.k)
    }

    /// Norm test on the linearization with the positive floor taken from
    /// the coefficient named by `variant`.
    pub fn certify(&self, variant: HutchinsonVariant, opts: &ModelOptions<T>) -> Result<Certificate<T>> {
        self.validate()?;
        let mode = opts.mode;
        let cfg = TightConfig::default();
        let k = self.k;
        let growth = sum_of(self.r_terms.iter().map(|t| t.r.times(k)).collect());
        let reference = match variant {
            HutchinsonVariant::Combined => growth.plus(&self.u),
            HutchinsonVariant::Growth => growth,
            HutchinsonVariant::Control => self.u.clone(),
        };
        let split: SplitResult<T> = reference.split_with(opts.split, mode)?;
        let norm = |f: &TimeFunction<T>| f.sup_norm_with(mode, &cfg);
        let ratio = |f: &TimeFunction<T>| ratio_sup_norm(f, &split.tilde, mode, &cfg);

        let mut prefactor = self.r_terms.iter().map(|t| k * norm(&t.r)).fold(T::zero(), |a, b| a + b) + norm(&self.u);
        let mut r_ratios = Vec::with_capacity(self.r_terms.len());
        for term in &self.r_terms {
            r_ratios.push(ratio(&term.r.times(k))?);
        }
        let mut u_ratio = if self.u.is_zero() { T::zero() } else { ratio(&self.u)? };
        let mut cert_notes = vec![format!("{mode:?} norms, split of the {variant:?} coefficient")];
        if let Some(rnd) = opts.rounding {
            let k_ratio_max = r_ratios.iter().map(|&r| r / k).fold(u_ratio, T::max);
            let slack = T::one() + T::rel_tol(1e-12);
            if rnd.prefactor * slack < prefactor || rnd.ratio * slack < k_ratio_max {
                return Err(Error::BadParams(format!(
                    "rounded constants ({}, {}) are below the computed ones ({prefactor}, {k_ratio_max})",
                    rnd.prefactor, rnd.ratio
                )));
            }
            prefactor = rnd.prefactor;
            r_ratios.iter_mut().for_each(|r| *r = k * rnd.ratio);
            if !self.u.is_zero() {
                u_ratio = rnd.ratio;
            }
            cert_notes.push(format!("rounded constants: prefactor {}, ratio {}", rnd.prefactor, rnd.ratio));
        }
        let delay_sum = self
            .r_terms
            .iter()
            .zip(&r_ratios)
            .map(|(t, &r)| t.tau * r)
            .fold(T::zero(), |a, b| a + b)
            + self.sigma * u_ratio;
        let lhs = prefactor * delay_sum;
        let mut cert = Certificate::decide(variant.criterion(), lhs, (-split.alpha0).exp(), mode.into())
            .with("prefactor", prefactor)
            .with("delay_sum", delay_sum)
            .with("alpha0", split.alpha0)
            .with("a0_floor", split.a0_floor)
            .with("u_ratio", u_ratio);
        for (j, r) in r_ratios.iter().enumerate() {
            cert = cert.with(&format!("r{j}_ratio"), *r);
        }
        for n in cert_notes {
            cert = cert.note(n);
        }
        Ok(cert)
    }
}

impl<T: Real> MackeyGlassParams<T> {
    pub fn equilibrium(&self) -> Result<MgEquilibrium<T>> {
        let (a, b, gamma) = (self.a, self.b, self.gamma);
        if !(b > T::zero() && a > b && gamma > T::zero()) {
            return Err(Error::BadParams(format!("need a > b > 0 and γ > 0, got a = {a}, b = {b}, γ = {gamma}")));
        }
        let n_star = (a / b - T::one()).powf(T::one() / gamma);
        let nu = b / a * (gamma * (a - b) - a);
        Ok(MgEquilibrium { n_star, nu })
    }

    pub fn validate(&self) -> Result<MgEquilibrium<T>> {
        let eq = self.equilibrium()?;
        if !(self.tau >= T::zero()) || !(self.sigma >= T::zero()) || !(self.t0 >= T::zero()) {
            return Err(Error::BadParams("tau, sigma and t0 must be nonnegative".into()));
        }
        let rmin = sampled_min(&self.r, self.t0);
        if rmin < T::zero() {
            return Err(Error::BadParams(format!("r must be nonnegative, sampled minimum {rmin}")));
        }
        if let Some(h) = &self.delay_offset {
            check_offset(h, self.tau, "production delay offset")?;
        }
        if let Some(g) = &self.g_offset {
            check_offset(g, self.sigma, "control delay offset")?;
        }
        Ok(eq)
    }

    /// `y' = −ν r y(h) − b r y − u y(g)`.
    pub fn linearize(&self) -> Result<EquationSpec<T>> {
        let eq = self.validate()?;
        let terms = vec![
            DelayTerm { coef: self.r.times(eq.nu), tau: self.tau, delay_offset: self.delay_offset.clone() },
            DelayTerm::new(self.r.times(self.b), T::zero()),
            DelayTerm { coef: self.u.clone(), tau: self.sigma, delay_offset: self.g_offset.clone() },
        ];
        EquationSpec::new(terms, None, None, None, self.t0)
    }

    /// Production minus decay, `a x/(1 + x^γ)` with `|x|^γ` so the map is
    /// defined for every real state.
    fn production(&self, x: T) -> T {
        self.a * x / (T::one() + x.abs().powf(self.gamma))
    }

    pub fn rhs(&self, t: T, side: Side, n: T, past: &dyn Fn(T) -> T, n_star: T) -> T {
        let h = self.delay_offset.as_ref().map_or(self.tau, |f| f.eval_side(t, side));
        let g = self.g_offset.as_ref().map_or(self.sigma, |f| f.eval_side(t, side));
        self.r.eval_side(t, side) * (self.production(past(t - h)) - self.b * n)
            - self.u.eval_side(t, side) * (past(t - g) - n_star)
    }

    /// `((b+ν)||r|| + ||u||)(τ|ν|/(b+ν) + σ||u/r||/(b+ν)) < e^{−α0}` with
    /// `α0` bounding `|∫ u|`; see [`MgPrefactor`] for the first factor.
    pub fn certify(&self, opts: &ModelOptions<T>) -> Result<Certificate<T>> {
        let eq = self.validate()?;
        let mode = opts.mode;
        let cfg = TightConfig::default();
        let bn = self.b + eq.nu;
        let r_floor = self.r.lower_bound().max(sampled_min(&self.r, self.t0));
        if !(r_floor > T::zero()) {
            return Err(Error::SplitInfeasible(format!("r has no positive floor (min {r_floor})")));
        }
        let alpha0 = if self.u.is_zero() {
            T::zero()
        } else {
            self.u.oscillation_bound_with(mode, &cfg).map_err(|e| match e {
                Error::NonZeroMean { mean, .. } => {
                    Error::SplitInfeasible(format!("control u has nonzero mean {mean:e}; its integral is unbounded"))
                }
                other => other,
            })?
        };
        let r_norm = self.r.sup_norm_with(mode, &cfg);
        let u_norm = self.u.sup_norm_with(mode, &cfg);
        let coef = match opts.mg_prefactor {
            MgPrefactor::Sound => self.b + eq.nu.abs(),
            MgPrefactor::Printed => bn,
        };
        let prefactor = coef * r_norm + u_norm;
        let u_over_r = if self.u.is_zero() { T::zero() } else { ratio_sup_norm(&self.u, &self.r, mode, &cfg)? };
        let bracket = (self.tau * eq.nu.abs() + self.sigma * u_over_r) / bn;
        Ok(Certificate::decide(Criterion::MackeyGlass, prefactor * bracket, (-alpha0).exp(), mode.into())
            .with("n_star", eq.n_star)
            .with("nu", eq.nu)
            .with("b_plus_nu", bn)
            .with("prefactor", prefactor)
            .with("bracket", bracket)
            .with("u_over_r", u_over_r)
            .with("alpha0", alpha0)
            .with("r0", r_floor)
            .note(format!("{mode:?} norms, {:?} prefactor", opts.mg_prefactor)))
    }
}

impl<T: Real> Model<T> {
    pub fn t0(&self) -> T {
        match self {
            Model::Hutchinson(p) => p.t0,
            Model::MackeyGlass(p) => p.t0,
        }
    }

    /// The positive equilibrium.
    pub fn equilibrium(&self) -> Result<T> {
        match self {
            Model::Hutchinson(p) => Ok(p.k),
            Model::MackeyGlass(p) => p.equilibrium().map(|e| e.n_star),
        }
    }

    pub fn linearize(&self) -> Result<EquationSpec<T>> {
        match self {
            Model::Hutchinson(p) => p.linearize(),
            Model::MackeyGlass(p) => p.linearize(),
        }
    }

    /// Right-hand side of the nonlinear model. `past(s)` must cover
    /// `[t − max lag, t]`.
    pub fn rhs(&self, t: T, side: Side, n: T, past: &dyn Fn(T) -> T) -> T {
        match self {
            Model::Hutchinson(p) => p.rhs(t, side, n, past),
            Model::MackeyGlass(p) => {
                let n_star = p.equilibrium().map(|e| e.n_star).unwrap_or(T::nan());
                p.rhs(t, side, n, past, n_star)
            }
        }
    }

    /// The default certificate for the model: the combined Hutchinson test or
    /// the Mackey-Glass test.
    pub fn certify(&self, opts: &ModelOptions<T>) -> Result<Certificate<T>> {
        match self {
            Model::Hutchinson(p) => p.certify(HutchinsonVariant::Combined, opts),
            Model::MackeyGlass(p) => p.certify(opts),
        }
    }
}

#[cfg(test)]
mod tests;
