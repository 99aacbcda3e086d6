//! Periodic leaf shapes: piecewise-constant, piecewise-linear and rectified
//! sine. Each shape knows its exact mean, extremes, antiderivative and
//! antiderivative range.

use serde::{Deserialize, Serialize};

use super::Side;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Splits `t` into a whole number of periods and a local coordinate in
/// `[0, period)`. Local coordinates within `1e-12 * period` of a period
/// boundary snap onto it so that grid times computed as `n * period + b`
/// land on the intended side of a breakpoint.
pub(crate) fn locate<T: Real>(t: T, period: T) -> (T, T) {
    let n = (t / period).floor();
    let u = t - n * period;
    let snap = snap_tol(period);
    if u >= period - snap {
        (n + T::one(), T::zero())
    } else if u < snap {
        (n, T::zero())
    } else {
        (n, u)
    }
}

#[inline]
pub(crate) fn snap_tol<T: Real>(period: T) -> T {
    period * T::rel_tol(1e-12)
}

/// Index of the piece containing local coordinate `u`. `None` means the
/// left limit at the start of the period, which belongs to the last piece of
/// the previous period.
fn piece_index<T: Real>(breaks: &[T], u: T, snap: T, side: Side) -> Option<usize> {
    match side {
        Side::Right => {
            let idx = breaks.partition_point(|&b| b <= u + snap);
            Some(idx.saturating_sub(1))
        }
        Side::Left => {
            let idx = breaks.partition_point(|&b| b < u - snap);
            idx.checked_sub(1)
        }
    }
}

fn check_breakpoints<T: Real>(breaks: &[T], period: T, n_values: usize) -> Result<()> {
    if !(period > T::zero()) || !period.is_finite() {
        return Err(Error::InvalidFunction(format!("period must be positive, got {period}")));
    }
    if breaks.is_empty() {
        return Err(Error::InvalidFunction("at least one breakpoint required".into()));
    }
    if breaks.len() != n_values {
        return Err(Error::InvalidFunction(format!(
            "{} breakpoints but {} values",
            breaks.len(),
            n_values
        )));
    }
    if breaks[0] != T::zero() {
        return Err(Error::InvalidFunction("first breakpoint must be 0".into()));
    }
    if breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidFunction("breakpoints must be strictly increasing".into()));
    }
    if *breaks.last().unwrap() >= period {
        return Err(Error::InvalidFunction("breakpoints must lie in [0, period)".into()));
    }
    Ok(())
}

fn all_finite<T: Real>(xs: &[T]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

/// Periodic step function, right-continuous at its breakpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseConstantRaw<T>", into = "PiecewiseConstantRaw<T>")]
#[serde(bound = "T: Real")]
pub struct PiecewiseConstant<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    period: T,
    prefix: Vec<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PiecewiseConstantRaw<T> {
    pub breakpoints: Vec<T>,
    pub values: Vec<T>,
    pub period: T,
}

impl<T: Real> TryFrom<PiecewiseConstantRaw<T>> for PiecewiseConstant<T> {
    type Error = Error;
    fn try_from(raw: PiecewiseConstantRaw<T>) -> Result<Self> {
        Self::new(raw.breakpoints, raw.values, raw.period)
    }
}

impl<T: Real> From<PiecewiseConstant<T>> for PiecewiseConstantRaw<T> {
    fn from(p: PiecewiseConstant<T>) -> Self {
        PiecewiseConstantRaw { breakpoints: p.breakpoints, values: p.values, period: p.period }
    }
}

impl<T: Real> PiecewiseConstant<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, period: T) -> Result<Self> {
        check_breakpoints(&breakpoints, period, values.len())?;
        if !all_finite(&values) {
            return Err(Error::InvalidFunction("non-finite value".into()));
        }
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let mut acc = T::zero();
        prefix.push(acc);
        for i in 0..values.len() {
            acc += values[i] * (Self::end_of(&breakpoints, period, i) - breakpoints[i]);
            prefix.push(acc);
        }
        Ok(Self { breakpoints, values, period, prefix })
    }

    fn end_of(breaks: &[T], period: T, i: usize) -> T {
        breaks.get(i + 1).copied().unwrap_or(period)
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn piece_end(&self, i: usize) -> T {
        Self::end_of(&self.breakpoints, self.period, i)
    }

    pub fn eval_side(&self, t: T, side: Side) -> T {
        let (_, u) = locate(t, self.period);
        match piece_index(&self.breakpoints, u, snap_tol(self.period), side) {
            Some(i) => self.values[i],
            None => *self.values.last().unwrap(),
        }
    }

    pub fn mass(&self) -> T {
        *self.prefix.last().unwrap()
    }

    pub fn mean(&self) -> T {
        self.mass() / self.period
    }

    /// `∫_0^t` of the step function.
    pub fn antiderivative(&self, t: T) -> T {
        let (n, u) = locate(t, self.period);
        let i = piece_index(&self.breakpoints, u, T::zero(), Side::Right).unwrap_or(0);
        n * self.mass() + self.prefix[i] + self.values[i] * (u - self.breakpoints[i])
    }

    pub fn integrate(&self, s: T, t: T) -> T {
        self.antiderivative(t) - self.antiderivative(s)
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn sup_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Range (max − min) over one period of `∫_0^u (f − mean)`.
    pub fn centered_antiderivative_range(&self) -> T {
        let mean = self.mean();
        let (mut lo, mut hi) = (T::zero(), T::zero());
        for i in 1..self.prefix.len() {
            let u = Self::end_of(&self.breakpoints, self.period, i - 1);
            let g = self.prefix[i] - mean * u;
            lo = lo.min(g);
            hi = hi.max(g);
        }
        hi - lo
    }

    pub fn scaled(&self, k: T) -> Self {
        Self::new(self.breakpoints.clone(), self.values.iter().map(|&v| v * k).collect(), self.period)
            .expect("scaling preserves validity")
    }

    pub fn map_values(&self, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(self.breakpoints.clone(), self.values.iter().map(|&v| f(v)).collect(), self.period)
    }

    /// Breakpoint times (jumps) in `[a, b]`.
    pub fn breakpoints_in(&self, a: T, b: T, out: &mut Vec<T>) {
        periodic_points(&self.breakpoints, self.period, a, b, out);
    }

    /// Pointwise combination on the common refinement over `period`, which
    /// must be a whole multiple of both periods.
    pub fn combine(&self, other: &Self, period: T, op: impl Fn(T, T) -> T) -> Result<Self> {
        let mut cuts = Vec::new();
        periodic_points(&self.breakpoints, self.period, T::zero(), period, &mut cuts);
        periodic_points(&other.breakpoints, other.period, T::zero(), period, &mut cuts);
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let snap = snap_tol(period);
        let mut breaks: Vec<T> = Vec::with_capacity(cuts.len());
        for c in cuts {
            if c >= period - snap {
                continue;
            }
            if breaks.last().is_none_or(|&l| c - l > snap) {
                breaks.push(if breaks.is_empty() { T::zero() } else { c });
            }
        }
        if breaks.is_empty() || breaks[0] != T::zero() {
            breaks.insert(0, T::zero());
        }
        let values = breaks
            .iter()
            .map(|&b| op(self.eval_side(b, Side::Right), other.eval_side(b, Side::Right)))
            .collect();
        Self::new(breaks, values, period)
    }
}

/// Appends `n * period + b` for every local point `b` with the time in `[a, b]`.
pub(crate) fn periodic_points<T: Real>(local: &[T], period: T, a: T, b: T, out: &mut Vec<T>) {
    if b < a {
        return;
    }
    let mut n = (a / period).floor();
    loop {
        let base = n * period;
        if base > b {
            break;
        }
        for &l in local {
            let t = base + l;
            if t >= a && t <= b {
                out.push(t);
            }
        }
        n += T::one();
    }
}

/// Periodic function that is linear on each piece. Piece `i` starts at
/// `breakpoints[i]` with value `values[i]` and slope `slopes[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PiecewiseLinearRaw<T>", into = "PiecewiseLinearRaw<T>")]
#[serde(bound = "T: Real")]
pub struct PiecewiseLinear<T> {
    breakpoints: Vec<T>,
    values: Vec<T>,
    slopes: Vec<T>,
    period: T,
    prefix: Vec<T>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PiecewiseLinearRaw<T> {
    pub breakpoints: Vec<T>,
    pub values: Vec<T>,
    pub slopes: Vec<T>,
    pub period: T,
}

impl<T: Real> TryFrom<PiecewiseLinearRaw<T>> for PiecewiseLinear<T> {
    type Error = Error;
    fn try_from(raw: PiecewiseLinearRaw<T>) -> Result<Self> {
        Self::new(raw.breakpoints, raw.values, raw.slopes, raw.period)
    }
}

impl<T: Real> From<PiecewiseLinear<T>> for PiecewiseLinearRaw<T> {
    fn from(p: PiecewiseLinear<T>) -> Self {
        PiecewiseLinearRaw { breakpoints: p.breakpoints, values: p.values, slopes: p.slopes, period: p.period }
    }
}

impl<T: Real> PiecewiseLinear<T> {
    pub fn new(breakpoints: Vec<T>, values: Vec<T>, slopes: Vec<T>, period: T) -> Result<Self> {
        check_breakpoints(&breakpoints, period, values.len())?;
        if slopes.len() != values.len() {
            return Err(Error::InvalidFunction("slopes and values differ in length".into()));
        }
        if !all_finite(&values) || !all_finite(&slopes) {
            return Err(Error::InvalidFunction("non-finite value or slope".into()));
        }
        let half = lit::<T>(0.5);
        let mut prefix = vec![T::zero()];
        let mut acc = T::zero();
        for i in 0..values.len() {
            let len = breakpoints.get(i + 1).copied().unwrap_or(period) - breakpoints[i];
            acc += values[i] * len + half * slopes[i] * len * len;
            prefix.push(acc);
        }
        Ok(Self { breakpoints, values, slopes, period, prefix })
    }

    pub fn period(&self) -> T {
        self.period
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    fn piece_end(&self, i: usize) -> T {
        self.breakpoints.get(i + 1).copied().unwrap_or(self.period)
    }

    fn piece_at(&self, i: usize, u: T) -> T {
        self.values[i] + self.slopes[i] * (u - self.breakpoints[i])
    }

    /// Value at the (left-limit) end of piece `i`.
    fn end_value(&self, i: usize) -> T {
        self.piece_at(i, self.piece_end(i))
    }

    pub fn eval_side(&self, t: T, side: Side) -> T {
        let (_, u) = locate(t, self.period);
        match piece_index(&self.breakpoints, u, snap_tol(self.period), side) {
            Some(i) => self.piece_at(i, u),
            None => self.end_value(self.values.len() - 1),
        }
    }

    pub fn derivative(&self, t: T) -> T {
        let (_, u) = locate(t, self.period);
        let i = piece_index(&self.breakpoints, u, snap_tol(self.period), Side::Right).unwrap_or(0);
        self.slopes[i]
    }

    pub fn mass(&self) -> T {
        *self.prefix.last().unwrap()
    }

    pub fn mean(&self) -> T {
        self.mass() / self.period
    }

    pub fn antiderivative(&self, t: T) -> T {
        let (n, u) = locate(t, self.period);
        let i = piece_index(&self.breakpoints, u, T::zero(), Side::Right).unwrap_or(0);
        let d = u - self.breakpoints[i];
        n * self.mass() + self.prefix[i] + self.values[i] * d + lit::<T>(0.5) * self.slopes[i] * d * d
    }

    pub fn integrate(&self, s: T, t: T) -> T {
        self.antiderivative(t) - self.antiderivative(s)
    }

    fn extremes(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.values.len()).flat_map(move |i| [self.values[i], self.end_value(i)])
    }

    pub fn min_value(&self) -> T {
        self.extremes().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.extremes().fold(T::neg_infinity(), T::max)
    }

    pub fn sup_abs(&self) -> T {
        self.extremes().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn centered_antiderivative_range(&self) -> T {
        let mean = self.mean();
        let half = lit::<T>(0.5);
        let (mut lo, mut hi) = (T::zero(), T::zero());
        for i in 0..self.values.len() {
            let start = self.breakpoints[i];
            let end = self.piece_end(i);
            let g = |u: T| {
                let d = u - start;
                self.prefix[i] + self.values[i] * d + half * self.slopes[i] * d * d - mean * u
            };
            let mut cands = vec![g(end)];
            if self.slopes[i] != T::zero() {
                let u_star = start + (mean - self.values[i]) / self.slopes[i];
                if u_star > start && u_star < end {
                    cands.push(g(u_star));
                }
            }
            for c in cands {
                lo = lo.min(c);
                hi = hi.max(c);
            }
        }
        hi - lo
    }

    pub fn scaled(&self, k: T) -> Self {
        Self::new(
            self.breakpoints.clone(),
            self.values.iter().map(|&v| v * k).collect(),
            self.slopes.iter().map(|&v| v * k).collect(),
            self.period,
        )
        .expect("scaling preserves validity")
    }

    pub fn breakpoints_in(&self, a: T, b: T, out: &mut Vec<T>) {
        periodic_points(&self.breakpoints, self.period, a, b, out);
    }
}

/// `amplitude * |sin(frequency * t + phase)|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RectifiedSineRaw<T>", into = "RectifiedSineRaw<T>")]
#[serde(bound = "T: Real")]
pub struct RectifiedSine<T> {
    amplitude: T,
    frequency: T,
    phase: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RectifiedSineRaw<T> {
    pub amplitude: T,
    pub frequency: T,
    #[serde(default)]
    pub phase: T,
}

impl<T: Real> TryFrom<RectifiedSineRaw<T>> for RectifiedSine<T> {
    type Error = Error;
    fn try_from(raw: RectifiedSineRaw<T>) -> Result<Self> {
        Self::new(raw.amplitude, raw.frequency, raw.phase)
    }
}

impl<T: Real> From<RectifiedSine<T>> for RectifiedSineRaw<T> {
    fn from(r: RectifiedSine<T>) -> Self {
        RectifiedSineRaw { amplitude: r.amplitude, frequency: r.frequency, phase: r.phase }
    }
}

impl<T: Real> RectifiedSine<T> {
    pub fn new(amplitude: T, frequency: T, phase: T) -> Result<Self> {
        if !(frequency > T::zero()) || !frequency.is_finite() {
            return Err(Error::InvalidFunction(format!("frequency must be positive, got {frequency}")));
        }
        if !amplitude.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidFunction("non-finite amplitude or phase".into()));
        }
        Ok(Self { amplitude, frequency, phase })
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

    pub fn period(&self) -> T {
        T::PI() / self.frequency
    }

    pub fn eval(&self, t: T) -> T {
        self.amplitude * (self.frequency * t + self.phase).sin().abs()
    }

    pub fn derivative(&self, t: T) -> T {
        let th = self.frequency * t + self.phase;
        let sign = if th.sin() >= T::zero() { T::one() } else { -T::one() };
        self.amplitude * self.frequency * th.cos() * sign
    }

    pub fn second_derivative(&self, t: T) -> T {
        -self.frequency * self.frequency * self.eval(t)
    }

    /// Antiderivative of `|sin θ|` in θ, continuous and increasing.
    fn abs_sin_antiderivative(theta: T) -> T {
        let k = (theta / T::PI()).floor();
        lit::<T>(2.0) * k + T::one() - (theta - k * T::PI()).cos()
    }

    pub fn integrate(&self, s: T, t: T) -> T {
        let g = |x: T| Self::abs_sin_antiderivative(self.frequency * x + self.phase);
        self.amplitude / self.frequency * (g(t) - g(s))
    }

    pub fn mean(&self) -> T {
        lit::<T>(2.0) * self.amplitude / T::PI()
    }

    pub fn min_value(&self) -> T {
        self.amplitude.min(T::zero())
    }

    pub fn max_value(&self) -> T {
        self.amplitude.max(T::zero())
    }

    pub fn sup_abs(&self) -> T {
        self.amplitude.abs()
    }

    /// Over one arch, `∫(|sin θ| − 2/π)dθ = 1 − cos θ − 2θ/π`, whose extremes
    /// sit where `sin θ = 2/π`.
    pub fn centered_antiderivative_range(&self) -> T {
        let two_over_pi = lit::<T>(2.0) / T::PI();
        let th = two_over_pi.asin();
        let h = |x: T| T::one() - x.cos() - two_over_pi * x;
        let range = h(T::PI() - th) - h(th);
        self.amplitude.abs() / self.frequency * range
    }

    pub fn scaled(&self, k: T) -> Self {
        Self { amplitude: self.amplitude * k, ..self.clone() }
    }

    /// Zeros of the inner sine (kinks of the rectified wave) in `[a, b]`.
    pub fn kinks_in(&self, a: T, b: T, out: &mut Vec<T>) {
        let p = self.period();
        let x = -self.phase / self.frequency;
        let local = [x - p * (x / p).floor()];
        periodic_points(&local, self.period(), a, b, out);
    }
}
