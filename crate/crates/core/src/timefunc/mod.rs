//! Structured scalar time-functions.
//!
//! Coefficients, controls, perturbations and delay offsets are all drawn from
//! a closed family of variants that admit exact integration: constants,
//! trigonometric sums, periodic piecewise-constant and piecewise-linear
//! functions, rectified sines, and sums/scalings of those. Arbitrary closures
//! are deliberately not representable.
//!
//! Two bound calculi sit on top: [`BoundMode::Conservative`] reproduces hand
//! estimates (amplitude sums, `2·amplitude/frequency` oscillation bounds) and
//! is a guaranteed upper bound, while [`BoundMode::Tight`] refines them on a
//! sample grid.

mod bounds;
mod canonical;
mod leaves;
mod split;

use serde::{Deserialize, Serialize};

pub use bounds::{ratio_sup_norm, BoundMode, Periodicity, TightConfig};
pub use leaves::{PiecewiseConstant, PiecewiseLinear, RectifiedSine};
pub use split::{SplitPolicy, SplitResult};

pub(crate) use bounds::periodicity_of;
pub(crate) use canonical::Canonical;

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Which one-sided limit to take at a jump. Functions are right-continuous,
/// so `Right` is the plain value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Side {
    #[default]
    Right,
    Left,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Cos,
    Sin,
}

/// `amplitude * basis(frequency * t + phase)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrigTermRaw<T>", into = "TrigTermRaw<T>")]
#[serde(bound = "T: Real")]
pub struct TrigTerm<T> {
    amplitude: T,
    frequency: T,
    phase: T,
    basis: Basis,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct TrigTermRaw<T> {
    pub amplitude: T,
    pub frequency: T,
    #[serde(default)]
    pub phase: T,
    #[serde(default)]
    pub basis: Basis,
}

impl<T: Real> TryFrom<TrigTermRaw<T>> for TrigTerm<T> {
    type Error = Error;
    fn try_from(r: TrigTermRaw<T>) -> Result<Self> {
        Self::new(r.amplitude, r.frequency, r.phase, r.basis)
    }
}

impl<T: Real> From<TrigTerm<T>> for TrigTermRaw<T> {
    fn from(t: TrigTerm<T>) -> Self {
        TrigTermRaw { amplitude: t.amplitude, frequency: t.frequency, phase: t.phase, basis: t.basis }
    }
}

impl<T: Real> TrigTerm<T> {
    pub fn new(amplitude: T, frequency: T, phase: T, basis: Basis) -> Result<Self> {
        if !(frequency > T::zero()) || !frequency.is_finite() {
            return Err(Error::InvalidFunction(format!("frequency must be positive, got {frequency}")));
        }
        if !amplitude.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidFunction("non-finite amplitude or phase".into()));
        }
        Ok(Self { amplitude, frequency, phase, basis })
    }

    /// `amplitude * cos(frequency * t)`. Panics on a non-positive frequency.
    pub fn cos(amplitude: T, frequency: T) -> Self {
        Self::new(amplitude, frequency, T::zero(), Basis::Cos).expect("valid cosine term")
    }

    /// `amplitude * sin(frequency * t)`. Panics on a non-positive frequency.
    pub fn sin(amplitude: T, frequency: T) -> Self {
        Self::new(amplitude, frequency, T::zero(), Basis::Sin).expect("valid sine term")
    }

    pub fn with_phase(mut self, phase: T) -> Self {
        self.phase = phase;
        self
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    pub fn frequency(&self) -> T {
        self.frequency
    }

    pub fn phase(&self) -> T {
        self.phase
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    fn eval(&self, t: T) -> T {
        let th = self.frequency * t + self.phase;
        match self.basis {
            Basis::Cos => self.amplitude * th.cos(),
            Basis::Sin => self.amplitude * th.sin(),
        }
    }

    fn derivative(&self, t: T) -> T {
        let th = self.frequency * t + self.phase;
        let aw = self.amplitude * self.frequency;
        match self.basis {
            Basis::Cos => -aw * th.sin(),
            Basis::Sin => aw * th.cos(),
        }
    }

    fn integrate(&self, s: T, t: T) -> T {
        // sin x − sin y and cos x − cos y in product form keep short windows accurate.
        let half = lit::<T>(0.5);
        let w = self.frequency;
        let mid = w * (t + s) * half + self.phase;
        let hw = w * (t - s) * half;
        let k = lit::<T>(2.0) * self.amplitude / w * hw.sin();
        match self.basis {
            Basis::Cos => k * mid.cos(),
            Basis::Sin => k * mid.sin(),
        }
    }

    /// Coefficients `(c, s)` with `term = c·cos(ωt) + s·sin(ωt)`.
    pub(crate) fn cos_sin_coefficients(&self) -> (T, T) {
        let (sp, cp) = self.phase.sin_cos();
        match self.basis {
            Basis::Cos => (self.amplitude * cp, -self.amplitude * sp),
            Basis::Sin => (self.amplitude * sp, self.amplitude * cp),
        }
    }
}

/// A structured scalar function of time on `[0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", bound = "T: Real")]
pub enum TimeFunction<T> {
    #[serde(rename = "const")]
    Constant { value: T },
    /// `c0 + Σ terms`.
    #[serde(rename = "trig")]
    TrigSum {
        #[serde(default)]
        c0: T,
        terms: Vec<TrigTerm<T>>,
    },
    #[serde(rename = "pwc")]
    PiecewiseConstant(PiecewiseConstant<T>),
    #[serde(rename = "pwl")]
    PiecewiseLinear(PiecewiseLinear<T>),
    #[serde(rename = "rectified")]
    RectifiedSine(RectifiedSine<T>),
    #[serde(rename = "sum")]
    Sum { terms: Vec<TimeFunction<T>> },
    #[serde(rename = "scaled")]
    Scaled { factor: T, inner: Box<TimeFunction<T>> },
}

impl<T: Real> Default for TimeFunction<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> From<PiecewiseConstant<T>> for TimeFunction<T> {
    fn from(p: PiecewiseConstant<T>) -> Self {
        Self::PiecewiseConstant(p)
    }
}

impl<T: Real> From<PiecewiseLinear<T>> for TimeFunction<T> {
    fn from(p: PiecewiseLinear<T>) -> Self {
        Self::PiecewiseLinear(p)
    }
}

impl<T: Real> From<RectifiedSine<T>> for TimeFunction<T> {
    fn from(r: RectifiedSine<T>) -> Self {
        Self::RectifiedSine(r)
    }
}

impl<T: Real> TimeFunction<T> {
    pub fn constant(value: T) -> Self {
        Self::Constant { value }
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    pub fn trig(c0: T, terms: Vec<TrigTerm<T>>) -> Self {
        Self::TrigSum { c0, terms }
    }

    pub fn piecewise_constant(breakpoints: Vec<T>, values: Vec<T>, period: T) -> Result<Self> {
        PiecewiseConstant::new(breakpoints, values, period).map(Self::PiecewiseConstant)
    }

    pub fn piecewise_linear(breakpoints: Vec<T>, values: Vec<T>, slopes: Vec<T>, period: T) -> Result<Self> {
        PiecewiseLinear::new(breakpoints, values, slopes, period).map(Self::PiecewiseLinear)
    }

    pub fn rectified_sine(amplitude: T, frequency: T, phase: T) -> Result<Self> {
        RectifiedSine::new(amplitude, frequency, phase).map(Self::RectifiedSine)
    }

    /// Two-level square wave: `high` on `[n·period, n·period + duty)`,
    /// `low` on the rest of each period.
    pub fn square_wave(high: T, low: T, duty: T, period: T) -> Result<Self> {
        Self::piecewise_constant(vec![T::zero(), duty], vec![high, low], period)
    }

    pub fn sum(terms: Vec<Self>) -> Self {
        Self::Sum { terms }
    }

    pub fn scaled(factor: T, inner: Self) -> Self {
        Self::Scaled { factor, inner: Box::new(inner) }
    }

    pub fn plus(&self, other: &Self) -> Self {
        Self::sum(vec![self.clone(), other.clone()])
    }

    pub fn times(&self, factor: T) -> Self {
        Self::scaled(factor, self.clone())
    }

    pub fn eval(&self, t: T) -> T {
        self.eval_side(t, Side::Right)
    }

    /// Value, or the left limit when `side` is `Left`.
    pub fn eval_side(&self, t: T, side: Side) -> T {
        match self {
            Self::Constant { value } => *value,
            Self::TrigSum { c0, terms } => terms.iter().fold(*c0, |acc, term| acc + term.eval(t)),
            Self::PiecewiseConstant(p) => p.eval_side(t, side),
            Self::PiecewiseLinear(p) => p.eval_side(t, side),
            Self::RectifiedSine(r) => r.eval(t),
            Self::Sum { terms } => terms.iter().fold(T::zero(), |acc, f| acc + f.eval_side(t, side)),
            Self::Scaled { factor, inner } => *factor * inner.eval_side(t, side),
        }
    }

    /// Right derivative. Piecewise-constant parts contribute zero.
    pub fn derivative(&self, t: T) -> T {
        match self {
            Self::Constant { .. } | Self::PiecewiseConstant(_) => T::zero(),
            Self::TrigSum { terms, .. } => terms.iter().fold(T::zero(), |acc, term| acc + term.derivative(t)),
            Self::PiecewiseLinear(p) => p.derivative(t),
            Self::RectifiedSine(r) => r.derivative(t),
            Self::Sum { terms } => terms.iter().fold(T::zero(), |acc, f| acc + f.derivative(t)),
            Self::Scaled { factor, inner } => *factor * inner.derivative(t),
        }
    }

    pub fn second_derivative(&self, t: T) -> T {
        match self {
            Self::Constant { .. } | Self::PiecewiseConstant(_) | Self::PiecewiseLinear(_) => T::zero(),
            Self::TrigSum { terms, .. } => terms.iter().fold(T::zero(), |acc, term| {
                acc - term.frequency * term.frequency * term.eval(t)
            }),
            Self::RectifiedSine(r) => r.second_derivative(t),
            Self::Sum { terms } => terms.iter().fold(T::zero(), |acc, f| acc + f.second_derivative(t)),
            Self::Scaled { factor, inner } => *factor * inner.second_derivative(t),
        }
    }

    /// Exact `∫_s^t f`. Reversed limits give the negated integral.
    pub fn integrate(&self, s: T, t: T) -> T {
        match self {
            Self::Constant { value } => *value * (t - s),
            Self::TrigSum { c0, terms } => {
                terms.iter().fold(*c0 * (t - s), |acc, term| acc + term.integrate(s, t))
            }
            Self::PiecewiseConstant(p) => p.integrate(s, t),
            Self::PiecewiseLinear(p) => p.integrate(s, t),
            Self::RectifiedSine(r) => r.integrate(s, t),
            Self::Sum { terms } => terms.iter().fold(T::zero(), |acc, f| acc + f.integrate(s, t)),
            Self::Scaled { factor, inner } => *factor * inner.integrate(s, t),
        }
    }

    /// Periods of every non-constant leaf.
    pub fn component_periods(&self) -> Vec<T> {
        let mut out = Vec::new();
        self.collect_periods(&mut out);
        out
    }

    fn collect_periods(&self, out: &mut Vec<T>) {
        match self {
            Self::Constant { .. } => {}
            Self::TrigSum { terms, .. } => {
                out.extend(terms.iter().map(|term| T::TAU() / term.frequency));
            }
            Self::PiecewiseConstant(p) => out.push(p.period()),
            Self::PiecewiseLinear(p) => out.push(p.period()),
            Self::RectifiedSine(r) => out.push(r.period()),
            Self::Sum { terms } => terms.iter().for_each(|f| f.collect_periods(out)),
            Self::Scaled { factor, inner } => {
                if *factor != T::zero() {
                    inner.collect_periods(out)
                }
            }
        }
    }

    /// Jumps and kinks (piecewise breakpoints, zeros of rectified sines)
    /// in `[a, b]`, sorted and deduplicated.
    pub fn breakpoints_in(&self, a: T, b: T) -> Vec<T> {
        let mut out = Vec::new();
        self.collect_breakpoints(a, b, &mut out);
        sort_dedup(&mut out, T::rel_tol(1e-12) * (T::one() + b.abs()));
        out
    }

    fn collect_breakpoints(&self, a: T, b: T, out: &mut Vec<T>) {
        match self {
            Self::Constant { .. } | Self::TrigSum { .. } => {}
            Self::PiecewiseConstant(p) => p.breakpoints_in(a, b, out),
            Self::PiecewiseLinear(p) => p.breakpoints_in(a, b, out),
            Self::RectifiedSine(r) => r.kinks_in(a, b, out),
            Self::Sum { terms } => terms.iter().for_each(|f| f.collect_breakpoints(a, b, out)),
            Self::Scaled { factor, inner } => {
                if *factor != T::zero() {
                    inner.collect_breakpoints(a, b, out)
                }
            }
        }
    }

    /// `true` when the function is a constant (possibly written as a sum or
    /// scaling of constants); returns the constant.
    pub fn as_constant(&self) -> Option<T> {
        let c = Canonical::of(self);
        c.is_constant().then_some(c.constant)
    }

    /// `true` for the zero function, however it is written.
    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(T::zero())
    }

    /// Flattens sums and scalings of constants and step functions with
    /// commensurate periods into a single step function.
    pub fn as_piecewise_constant(&self) -> Option<PiecewiseConstant<T>> {
        let mut constant = T::zero();
        let mut steps: Vec<PiecewiseConstant<T>> = Vec::new();
        if !self.collect_steps(T::one(), &mut constant, &mut steps) {
            return None;
        }
        let mut acc = match steps.split_first() {
            None => return PiecewiseConstant::new(vec![T::zero()], vec![constant], T::one()).ok(),
            Some((first, rest)) => {
                let mut acc = first.clone();
                for p in rest {
                    let period = bounds::common_period(&[acc.period(), p.period()])?;
                    acc = acc.combine(p, period, |x, y| x + y).ok()?;
                }
                acc
            }
        };
        if constant != T::zero() {
            acc = acc.map_values(|v| v + constant).ok()?;
        }
        Some(acc)
    }

    fn collect_steps(&self, k: T, constant: &mut T, steps: &mut Vec<PiecewiseConstant<T>>) -> bool {
        match self {
            Self::Constant { value } => {
                *constant += k * *value;
                true
            }
            Self::TrigSum { c0, terms } if terms.iter().all(|t| t.amplitude == T::zero()) => {
                *constant += k * *c0;
                true
            }
            Self::PiecewiseConstant(p) => {
                steps.push(p.scaled(k));
                true
            }
            Self::Sum { terms } => terms.iter().all(|f| f.collect_steps(k, constant, steps)),
            Self::Scaled { factor, inner } => inner.collect_steps(k * *factor, constant, steps),
            _ => false,
        }
    }
}

pub(crate) fn sort_dedup<T: Real>(xs: &mut Vec<T>, tol: T) {
    xs.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    xs.dedup_by(|a, b| (*a - *b).abs() <= tol);
}
