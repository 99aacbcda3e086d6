//! Distributed-delay kernels `K(t, s)` on the window `[g(t), t]` and their
//! moments
//!
//! ```text
//! b(t) = ∫ K(t,s) ds,   b̄(t) = ∫ |K(t,s)| ds,   c(t) = ∫ (t−s) |K(t,s)| ds,
//! ```
//!
//! each taken over `[g(t), t] ∩ [t0, ∞)`. The lower end of the window is
//! `g(t) = t − g_offset(t)` with `0 ≤ g_offset ≤ σ`; without an explicit
//! offset the full lag `σ` is used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::adaptive_simpson;
use crate::scalar::{lit, Real};
use crate::timefunc::{BoundMode, Periodicity, Side, SplitPolicy, SplitResult, TimeFunction, TrigTerm};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Real")]
pub enum KernelShape<T> {
    /// `K(t, s) = f(t − s)`.
    Convolution { f: TimeFunction<T> },
    /// `K(t, s) = p + q·cos(ω_t·t − ω_s·s + φ)`.
    Phase {
        p: T,
        q: T,
        omega_t: T,
        omega_s: T,
        #[serde(default)]
        phase: T,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRaw<T>", into = "KernelRaw<T>", bound = "T: Real")]
pub struct KernelFunction<T> {
    shape: KernelShape<T>,
    sigma: T,
    g_offset: Option<TimeFunction<T>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct KernelRaw<T> {
    #[serde(flatten)]
    pub shape: KernelShape<T>,
    pub sigma: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_offset: Option<TimeFunction<T>>,
}

impl<T: Real> TryFrom<KernelRaw<T>> for KernelFunction<T> {
    type Error = Error;
    fn try_from(r: KernelRaw<T>) -> Result<Self> {
        Self::new(r.shape, r.sigma, r.g_offset)
    }
}

impl<T: Real> From<KernelFunction<T>> for KernelRaw<T> {
    fn from(k: KernelFunction<T>) -> Self {
        KernelRaw { shape: k.shape, sigma: k.sigma, g_offset: k.g_offset }
    }
}

/// How `b̄` and `c` are bounded.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMode {
    /// `σ·sup|K|` and `σ²/2·sup|K|`.
    #[default]
    Conservative,
    /// Integrals of `|K|` split at its sign changes.
    Quadrature,
}

impl From<BoundMode> for MomentMode {
    fn from(m: BoundMode) -> Self {
        match m {
            BoundMode::Conservative => MomentMode::Conservative,
            BoundMode::Tight => MomentMode::Quadrature,
        }
    }
}

impl From<MomentMode> for BoundMode {
    fn from(m: MomentMode) -> Self {
        match m {
            MomentMode::Conservative => BoundMode::Conservative,
            MomentMode::Quadrature => BoundMode::Tight,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelMoments<T> {
    /// Signed mass `b` for `t ≥ t0 + σ`, where the window is never clipped.
    pub b: TimeFunction<T>,
    pub b_split: SplitResult<T>,
    /// Bound on `sup b̄`.
    pub b_abs_norm: T,
    /// Bound on `sup c`.
    pub c_norm: T,
    pub mode: MomentMode,
}

const QUAD_TOL: f64 = 1e-10;
const NORM_SAMPLES: usize = 2048;

impl<T: Real> KernelFunction<T> {
    pub fn new(shape: KernelShape<T>, sigma: T, g_offset: Option<TimeFunction<T>>) -> Result<Self> {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::InvalidFunction(format!("kernel lag bound must be finite and ≥ 0, got {sigma}")));
        }
        if let KernelShape::Phase { p, q, omega_t, omega_s, phase } = shape {
            if ![p, q, omega_t, omega_s, phase].iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidFunction("non-finite kernel parameter".into()));
            }
        }
        if let Some(g) = &g_offset {
            check_offset(g, sigma, "kernel window offset")?;
        }
        Ok(Self { shape, sigma, g_offset })
    }

    /// `p + q·cos(ω_t·t − ω_s·s + φ)` with the full window `σ`.
    pub fn phase(p: T, q: T, omega_t: T, omega_s: T, phase: T, sigma: T) -> Result<Self> {
        Self::new(KernelShape::Phase { p, q, omega_t, omega_s, phase }, sigma, None)
    }

    pub fn convolution(f: TimeFunction<T>, sigma: T) -> Result<Self> {
        Self::new(KernelShape::Convolution { f }, sigma, None)
    }

    pub fn with_offset(self, g_offset: TimeFunction<T>) -> Result<Self> {
        Self::new(self.shape, self.sigma, Some(g_offset))
    }

    pub fn shape(&self) -> &KernelShape<T> {
        &self.shape
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// `t − g(t)`, defaulting to `σ`.
    pub fn offset(&self) -> TimeFunction<T> {
        self.g_offset.clone().unwrap_or_else(|| TimeFunction::constant(self.sigma))
    }

    pub fn offset_at(&self, t: T) -> T {
        self.g_offset.as_ref().map_or(self.sigma, |g| g.eval(t))
    }

    pub(crate) fn offset_at_side(&self, t: T, side: Side) -> T {
        self.g_offset.as_ref().map_or(self.sigma, |g| g.eval_side(t, side))
    }

    /// Lower end of the clipped window `[g(t), t] ∩ [t0, ∞)`.
    pub fn window_start(&self, t: T, t0: T) -> T {
        (t - self.offset_at(t)).max(t0).min(t)
    }

    pub fn eval(&self, t: T, s: T) -> T {
        match &self.shape {
            KernelShape::Convolution { f } => f.eval(t - s),
            KernelShape::Phase { p, q, omega_t, omega_s, phase } => {
                *p + *q * (*omega_t * t - *omega_s * s + *phase).cos()
            }
        }
    }

    /// `sup |K|` as used by the conservative moment bounds.
    pub fn sup_abs(&self, mode: BoundMode) -> T {
        match &self.shape {
            KernelShape::Convolution { f } => f.sup_norm(mode),
            KernelShape::Phase { p, q, .. } => p.abs() + q.abs(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.shape {
            KernelShape::Convolution { f } => f.as_constant() == Some(T::zero()),
            KernelShape::Phase { p, q, .. } => *p == T::zero() && *q == T::zero(),
        }
    }

    /// `∫_lo^hi K(t, s) ds` in closed form.
    pub fn integral(&self, t: T, lo: T, hi: T) -> T {
        if hi <= lo {
            return T::zero();
        }
        match &self.shape {
            KernelShape::Convolution { f } => f.integrate(t - hi, t - lo),
            KernelShape::Phase { p, q, omega_t, omega_s, phase } => {
                let mass = *p * (hi - lo);
                if *omega_s == T::zero() {
                    return mass + *q * (hi - lo) * (*omega_t * t + *phase).cos();
                }
                // sin x − sin y = 2 cos((x+y)/2) sin((x−y)/2) keeps short windows accurate.
                let half = lit::<T>(0.5);
                let mid = *omega_t * t - *omega_s * (hi + lo) * half + *phase;
                let hw = *omega_s * (hi - lo) * half;
                mass + lit::<T>(2.0) * *q / *omega_s * mid.cos() * hw.sin()
            }
        }
    }

    /// `b(t)` in closed form.
    pub fn moment_b(&self, t: T, t0: T) -> T {
        self.integral(t, self.window_start(t, t0), t)
    }

    /// `b(t)` by adaptive Simpson, for cross-checking the closed form.
    pub fn moment_b_quadrature(&self, t: T, t0: T) -> T {
        let lo = self.window_start(t, t0);
        self.sign_cuts(t, lo, t)
            .windows(2)
            .map(|w| adaptive_simpson(&|s| self.eval(t, s), w[0], w[1], T::rel_tol(QUAD_TOL), 40))
            .fold(T::zero(), |a, b| a + b)
    }

    /// `b̄(t)`.
    pub fn moment_b_abs(&self, t: T, t0: T, mode: MomentMode) -> T {
        match mode {
            MomentMode::Conservative => self.sigma * self.sup_abs(BoundMode::Conservative),
            MomentMode::Quadrature => self.abs_integral(t, self.window_start(t, t0), t),
        }
    }

    /// `c(t)`.
    pub fn moment_c(&self, t: T, t0: T, mode: MomentMode) -> T {
        match mode {
            MomentMode::Conservative => {
                self.sigma * self.sigma * lit(0.5) * self.sup_abs(BoundMode::Conservative)
            }
            MomentMode::Quadrature => {
                self.abs_weighted_integral(t, self.window_start(t, t0), t, |s| t - s)
            }
        }
    }

    /// `∫_lo^hi |K(t, s)| ds`, exact on each sign-constant piece.
    pub fn abs_integral(&self, t: T, lo: T, hi: T) -> T {
        self.sign_cuts(t, lo, hi)
            .windows(2)
            .map(|w| self.integral(t, w[0], w[1]).abs())
            .fold(T::zero(), |a, b| a + b)
    }

    /// `∫_lo^hi |K(t, s)|·w(s) ds` for a smooth weight `w`.
    pub fn abs_weighted_integral(&self, t: T, lo: T, hi: T, w: impl Fn(T) -> T) -> T {
        let mut total = T::zero();
        for seg in self.sign_cuts(t, lo, hi).windows(2) {
            let (a, b) = (seg[0], seg[1]);
            if b <= a {
                continue;
            }
            let sign = if self.integral(t, a, b) < T::zero() { -T::one() } else { T::one() };
            let tol = T::rel_tol(QUAD_TOL) * (T::one() + (b - a));
            total += sign * adaptive_simpson(&|s| self.eval(t, s) * w(s), a, b, tol, 40);
        }
        total
    }

    /// `lo`, the sign changes of `s ↦ K(t, s)` inside `(lo, hi)`, then `hi`.
    pub fn sign_cuts(&self, t: T, lo: T, hi: T) -> Vec<T> {
        if hi <= lo {
            return vec![lo, lo];
        }
        match &self.shape {
            KernelShape::Convolution { f } => {
                let mut cuts: Vec<T> = f.sign_cuts(t - hi, t - lo).into_iter().map(|u| t - u).collect();
                cuts.reverse();
                cuts[0] = lo;
                *cuts.last_mut().unwrap() = hi;
                cuts
            }
            KernelShape::Phase { p, q, omega_t, omega_s, phase } => {
                let mut cuts = vec![lo];
                if *omega_s != T::zero() && p.abs() < q.abs() {
                    let theta = |s: T| *omega_t * t - *omega_s * s + *phase;
                    let (th_lo, th_hi) = {
                        let (x, y) = (theta(lo), theta(hi));
                        (x.min(y), x.max(y))
                    };
                    let base = (-*p / *q).acos();
                    let tau = T::TAU();
                    let mut roots = Vec::new();
                    for b in [base, -base] {
                        let mut k = ((th_lo - b) / tau).ceil();
                        while b + k * tau <= th_hi {
                            let s = (*omega_t * t + *phase - (b + k * tau)) / *omega_s;
                            if s > lo && s < hi {
                                roots.push(s);
                            }
                            k += T::one();
                        }
                    }
                    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    cuts.extend(roots);
                }
                cuts.push(hi);
                cuts
            }
        }
    }

    /// Periods of `t ↦ b̄(t)` once the window is unclipped.
    fn moment_periods(&self) -> Vec<T> {
        let mut periods = self.offset().component_periods();
        if let KernelShape::Phase { omega_t, omega_s, .. } = &self.shape {
            let d = (*omega_t - *omega_s).abs();
            if d > T::zero() {
                periods.push(T::TAU() / d);
            }
        }
        periods
    }

    /// Sampling grid over one period of the moments, starting where the
    /// window stops being clipped.
    fn steady_grid(&self, t0: T) -> Vec<T> {
        let start = t0 + self.sigma;
        let periods = self.moment_periods();
        let span = match crate::timefunc::periodicity_of(&periods) {
            Periodicity::Constant => return vec![start],
            Periodicity::Periodic(p) => p,
            Periodicity::Aperiodic => lit(100.0),
        };
        let n = NORM_SAMPLES;
        (0..=n).map(|i| start + span * T::count(i) / T::count(n)).collect()
    }

    /// Bound on `sup_{t ≥ t0} b̄(t)`. Clipping only shrinks the window, so
    /// the unclipped regime carries the supremum.
    pub fn b_abs_norm(&self, t0: T, mode: MomentMode) -> T {
        match mode {
            MomentMode::Conservative => self.moment_b_abs(t0, t0, mode),
            MomentMode::Quadrature => self
                .steady_grid(t0)
                .into_iter()
                .map(|t| self.moment_b_abs(t, t0, mode))
                .fold(T::zero(), T::max),
        }
    }

    /// Bound on `sup_{t ≥ t0} c(t)`.
    pub fn c_norm(&self, t0: T, mode: MomentMode) -> T {
        match mode {
            MomentMode::Conservative => self.moment_c(t0, t0, mode),
            MomentMode::Quadrature => self
                .steady_grid(t0)
                .into_iter()
                .map(|t| self.moment_c(t, t0, mode))
                .fold(T::zero(), T::max),
        }
    }

    /// The signed mass `b(t)` for `t ≥ t0 + σ` as a time function. Needs a
    /// constant window offset.
    pub fn mass_function(&self) -> Result<TimeFunction<T>> {
        let l = match &self.g_offset {
            None => self.sigma,
            Some(g) => g.as_constant().ok_or_else(|| {
                Error::UnsupportedKernel("signed mass is a time function only for a constant window offset".into())
            })?,
        };
        match &self.shape {
            KernelShape::Convolution { f } => Ok(TimeFunction::constant(f.integrate(T::zero(), l))),
            KernelShape::Phase { p, q, omega_t, omega_s, phase } => {
                let c0 = *p * l;
                if *omega_s == T::zero() {
                    let amp = *q * l;
                    return Ok(TimeFunction::trig(c0, vec![TrigTerm::cos(amp, *omega_t).with_phase(*phase)]));
                }
                let d = *omega_t - *omega_s;
                let k = *q / *omega_s;
                // b(t) = c0 + k·[sin(d·t + ω_s·l + φ) − sin(d·t + φ)]
                let (psi1, psi2) = (*omega_s * l + *phase, *phase);
                if d == T::zero() {
                    return Ok(TimeFunction::constant(c0 + k * (psi1.sin() - psi2.sin())));
                }
                let term = |amp: T, psi: T| {
                    if d > T::zero() {
                        TrigTerm::sin(amp, d).with_phase(psi)
                    } else {
                        TrigTerm::sin(-amp, -d).with_phase(-psi)
                    }
                };
                Ok(TimeFunction::trig(c0, vec![term(k, psi1), term(-k, psi2)]))
            }
        }
    }

    /// `b` split into a positive mean and a zero-mean oscillation, plus the
    /// `b̄` and `c` norms.
    pub fn moments(&self, t0: T, mode: MomentMode) -> Result<KernelMoments<T>> {
        let b = self.mass_function()?;
        let b_split = b.split_with(SplitPolicy::ConstantMean, mode.into())?;
        Ok(KernelMoments {
            b,
            b_split,
            b_abs_norm: self.b_abs_norm(t0, mode),
            c_norm: self.c_norm(t0, mode),
            mode,
        })
    }
}

/// Checks `0 ≤ offset ≤ bound` on a sample grid and through the bound calculus.
pub(crate) fn check_offset<T: Real>(g: &TimeFunction<T>, bound: T, what: &str) -> Result<()> {
    let tol = T::rel_tol(1e-9) * (T::one() + bound);
    let lo = g.lower_bound();
    let hi = g.upper_bound();
    if lo >= -tol && hi <= bound + tol {
        return Ok(());
    }
    let n = 4000;
    for i in 0..=n {
        let t = lit::<T>(100.0) * T::count(i) / T::count(n);
        let v = g.eval(t);
        if v < -tol || v > bound + tol {
            return Err(Error::InvalidFunction(format!("{what} {v} at t = {t} leaves [0, {bound}]")));
        }
    }
    Ok(())
}
