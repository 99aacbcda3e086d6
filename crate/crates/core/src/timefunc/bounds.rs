//! Sup-norms, oscillation bounds and sign-aware integrals.

use serde::{Deserialize, Serialize};

use super::{Canonical, Side, TimeFunction};
use crate::error::{Error, Result};
use crate::numerics::bisect_root;
use crate::scalar::{lit, Real};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMode {
    /// Closed-form upper bounds.
    #[default]
    Conservative,
    /// Grid-refined values over one period (or a horizon when aperiodic).
    Tight,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TightConfig<T> {
    pub samples_per_period: usize,
    /// Sampling window `[0, horizon]` for aperiodic functions.
    pub horizon: T,
}

impl<T: Real> Default for TightConfig<T> {
    fn default() -> Self {
        Self { samples_per_period: 4096, horizon: lit(100.0) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Periodicity<T> {
    Constant,
    Periodic(T),
    Aperiodic,
}

const MAX_SAMPLES: usize = 1 << 20;

/// Smallest whole multiple (up to 64×) of the largest period that every
/// period divides, to a relative tolerance of 1e-9.
pub fn common_period<T: Real>(periods: &[T]) -> Option<T> {
    let p_max = periods.iter().copied().fold(T::zero(), T::max);
    if p_max <= T::zero() {
        return None;
    }
    let tol = T::rel_tol(1e-9);
    (1..=64).map(|k| T::count(k) * p_max).find(|&l| {
        periods.iter().all(|&p| {
            let r = l / p;
            (r - r.round()).abs() <= tol * r.max(T::one())
        })
    })
}

pub(crate) fn periodicity_of<T: Real>(periods: &[T]) -> Periodicity<T> {
    if periods.is_empty() {
        Periodicity::Constant
    } else {
        common_period(periods).map_or(Periodicity::Aperiodic, Periodicity::Periodic)
    }
}

/// Sampling window `[start, start + span]` with `n` cells.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Window<T> {
    pub start: T,
    pub span: T,
    pub cells: usize,
}

impl<T: Real> Window<T> {
    pub fn for_periods(periods: &[T], start: T, cfg: &TightConfig<T>) -> Self {
        let p_min = periods.iter().copied().fold(T::infinity(), T::min);
        let span = match periodicity_of(periods) {
            Periodicity::Constant => T::one(),
            Periodicity::Periodic(p) => p,
            Periodicity::Aperiodic => cfg.horizon,
        };
        let per = if p_min.is_finite() { (span / p_min).ceil() } else { T::one() };
        let cells = (per.to_usize().unwrap_or(1).max(1) * cfg.samples_per_period).min(MAX_SAMPLES);
        Window { start, span, cells }
    }

    pub fn end(&self) -> T {
        self.start + self.span
    }

    pub fn step(&self) -> T {
        self.span / T::count(self.cells)
    }

    pub fn at(&self, i: usize) -> T {
        self.start + self.step() * T::count(i)
    }
}

impl<T: Real> TimeFunction<T> {
    pub fn periodicity(&self) -> Periodicity<T> {
        periodicity_of(&self.component_periods())
    }

    /// Mean over a period (the constant part for aperiodic trig sums).
    pub fn mean(&self) -> T {
        Canonical::of(self).mean()
    }

    pub fn sup_norm(&self, mode: BoundMode) -> T {
        self.sup_norm_with(mode, &TightConfig::default())
    }

    pub fn sup_norm_with(&self, mode: BoundMode, cfg: &TightConfig<T>) -> T {
        match mode {
            BoundMode::Conservative => Canonical::of(self).sup_bound(),
            BoundMode::Tight => self.tight_sup(T::zero(), cfg),
        }
    }

    /// Sup-norm restricted to `t ≥ from`. Periodic functions attain their
    /// sup on every tail, so only the aperiodic tight path changes.
    pub fn sup_norm_from(&self, from: T, mode: BoundMode, cfg: &TightConfig<T>) -> T {
        match mode {
            BoundMode::Conservative => Canonical::of(self).sup_bound(),
            BoundMode::Tight => self.tight_sup(from, cfg),
        }
    }

    /// Whether the tight calculus for this function samples a finite
    /// horizon rather than a full period.
    pub fn tight_is_heuristic(&self) -> bool {
        matches!(self.periodicity(), Periodicity::Aperiodic)
    }

    fn tight_sup(&self, from: T, cfg: &TightConfig<T>) -> T {
        let periods = self.component_periods();
        let start = match periodicity_of(&periods) {
            Periodicity::Aperiodic => from,
            _ => T::zero(),
        };
        let w = Window::for_periods(&periods, start, cfg);
        let h = w.step();
        let mut best = T::zero();
        let mut prev2 = T::neg_infinity();
        let mut prev1 = self.eval(w.at(0)).abs();
        best = best.max(prev1);
        for i in 1..=w.cells + 1 {
            let cur = if i <= w.cells { self.eval(w.at(i)).abs() } else { T::neg_infinity() };
            best = best.max(cur);
            if prev1 >= prev2 && prev1 >= cur {
                // One Newton step on f' = 0 from the grid maximum.
                let t = w.at(i - 1);
                let dd = self.second_derivative(t);
                if dd != T::zero() {
                    let ts = t - self.derivative(t) / dd;
                    if (ts - t).abs() <= h {
                        best = best.max(self.eval(ts).abs());
                    }
                }
            }
            prev2 = prev1;
            prev1 = cur;
        }
        for b in self.breakpoints_in(w.start, w.end()) {
            best = best.max(self.eval_side(b, Side::Right).abs()).max(self.eval_side(b, Side::Left).abs());
        }
        best
    }

    /// Conservative lower bound of `inf f` (exact for step functions).
    pub fn lower_bound(&self) -> T {
        match self.as_piecewise_constant() {
            Some(p) => p.min_value(),
            None => Canonical::of(self).lower_bound(),
        }
    }

    /// Conservative upper bound of `sup f` (exact for step functions).
    pub fn upper_bound(&self) -> T {
        match self.as_piecewise_constant() {
            Some(p) => p.max_value(),
            None => Canonical::of(self).upper_bound(),
        }
    }

    fn check_zero_mean(&self) -> Result<()> {
        let c = Canonical::of(self);
        let mean = c.mean();
        let tol = T::rel_tol(1e-9) * c.sup_bound() + T::min_positive_value();
        if mean.abs() > tol {
            return Err(Error::NonZeroMean { mean: mean.as_f64(), tolerance: tol.as_f64() });
        }
        Ok(())
    }

    /// Bound on `sup_{t ≥ s} |∫_s^t f|` for a zero-mean function.
    pub fn oscillation_bound(&self, mode: BoundMode) -> Result<T> {
        self.oscillation_bound_with(mode, &TightConfig::default())
    }

    pub fn oscillation_bound_with(&self, mode: BoundMode, cfg: &TightConfig<T>) -> Result<T> {
        self.check_zero_mean()?;
        Ok(match mode {
            BoundMode::Conservative => Canonical::of(self).oscillation_bound(),
            BoundMode::Tight => self.tight_antiderivative_range(cfg),
        })
    }

    /// `max − min` of `∫_0^t f` sampled over one period (or the horizon).
    fn tight_antiderivative_range(&self, cfg: &TightConfig<T>) -> T {
        let w = Window::for_periods(&self.component_periods(), T::zero(), cfg);
        let h = w.step();
        let big = |i: usize| self.integrate(w.start, w.at(i));
        let (mut lo, mut hi) = (T::zero(), T::zero());
        let mut prev2 = T::nan();
        let mut prev1 = T::zero();
        let refine = |t: T, lo: &mut T, hi: &mut T| {
            let d = self.derivative(t);
            if d != T::zero() {
                let ts = t - self.eval(t) / d;
                if (ts - t).abs() <= h {
                    let v = self.integrate(w.start, ts);
                    *lo = lo.min(v);
                    *hi = hi.max(v);
                }
            }
        };
        for i in 1..=w.cells {
            let cur = big(i);
            lo = lo.min(cur);
            hi = hi.max(cur);
            if !prev2.is_nan() {
                let is_max = prev1 >= prev2 && prev1 >= cur;
                let is_min = prev1 <= prev2 && prev1 <= cur;
                if is_max || is_min {
                    refine(w.at(i - 1), &mut lo, &mut hi);
                }
            }
            prev2 = prev1;
            prev1 = cur;
        }
        for b in self.breakpoints_in(w.start, w.end()) {
            let v = self.integrate(w.start, b);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    /// `∫_s^t |f|`, exact up to root location: the interval is cut at
    /// breakpoints and at sign changes, and each sign-constant piece is
    /// integrated in closed form.
    pub fn integrate_abs(&self, s: T, t: T) -> T {
        self.sign_cuts(s, t).windows(2).map(|w| self.integrate(w[0], w[1]).abs()).fold(T::zero(), |a, b| a + b)
    }

    /// `s`, the breakpoints and sign changes inside `(s, t)`, then `t`.
    /// `f` keeps one sign on every consecutive pair.
    pub(crate) fn sign_cuts(&self, s: T, t: T) -> Vec<T> {
        if t <= s {
            return vec![s, s];
        }
        let mut cuts = vec![s];
        cuts.extend(self.breakpoints_in(s, t).into_iter().filter(|&b| b > s && b < t));
        cuts.push(t);
        let smooth_period = self.smooth_min_period();
        let mut out = vec![s];
        for seg in cuts.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let n = match smooth_period {
                Some(p) => ((b - a) / (p / lit(64.0))).ceil().to_usize().unwrap_or(1).max(2),
                None => 1,
            };
            let h = (b - a) / T::count(n);
            let value = |x: T, i: usize| {
                if i == n {
                    self.eval_side(x, Side::Left)
                } else {
                    self.eval_side(x, Side::Right)
                }
            };
            let mut x0 = a;
            let mut f0 = value(a, 0);
            for i in 1..=n {
                let x1 = if i == n { b } else { a + h * T::count(i) };
                let f1 = value(x1, i);
                if (f0 < T::zero() && f1 > T::zero()) || (f0 > T::zero() && f1 < T::zero()) {
                    out.push(bisect_root(&|x| self.eval(x), x0, x1, T::epsilon() * (T::one() + x1.abs())));
                }
                x0 = x1;
                f0 = f1;
            }
            out.push(b);
        }
        out
    }

    /// Shortest period among leaves that can change sign inside a piece.
    fn smooth_min_period(&self) -> Option<T> {
        // Linear pieces change sign at most once, so endpoint signs suffice
        // for them and they do not force sampling.
        fn walk<T: Real>(f: &TimeFunction<T>, acc: &mut Option<T>) {
            let mut put = |p: T| *acc = Some(acc.map_or(p, |a: T| a.min(p)));
            match f {
                TimeFunction::TrigSum { terms, .. } => {
                    terms.iter().for_each(|t| put(T::TAU() / t.frequency()))
                }
                TimeFunction::RectifiedSine(r) => put(r.period()),
                TimeFunction::Sum { terms } => terms.iter().for_each(|g| walk(g, acc)),
                TimeFunction::Scaled { inner, .. } => walk(inner, acc),
                _ => {}
            }
        }
        let mut acc = None;
        walk(self, &mut acc);
        acc
    }
}

/// Sup of `|num / den|` for a denominator bounded away from zero.
pub fn ratio_sup_norm<T: Real>(
    num: &TimeFunction<T>,
    den: &TimeFunction<T>,
    mode: BoundMode,
    cfg: &TightConfig<T>,
) -> Result<T> {
    let floor = den.lower_bound();
    if !(floor > T::zero()) {
        return Err(Error::SplitInfeasible(format!(
            "denominator not bounded away from zero (lower bound {floor})"
        )));
    }
    match mode {
        BoundMode::Conservative => {
            if let Some(c) = den.as_constant() {
                return Ok(num.sup_norm(mode) / c.abs());
            }
            if let (Some(pn), Some(pd)) = (num.as_piecewise_constant(), den.as_piecewise_constant()) {
                if let Some(period) = common_period(&[pn.period(), pd.period()]) {
                    if let Ok(q) = pn.combine(&pd, period, |x, y| x / y) {
                        return Ok(q.sup_abs());
                    }
                }
            }
            Ok(num.sup_norm(mode) / floor)
        }
        BoundMode::Tight => {
            let mut periods = num.component_periods();
            periods.extend(den.component_periods());
            let w = Window::for_periods(&periods, T::zero(), cfg);
            let mut best = T::zero();
            for i in 0..=w.cells {
                let t = w.at(i);
                best = best.max((num.eval(t) / den.eval(t)).abs());
            }
            let mut bps = num.breakpoints_in(w.start, w.end());
            bps.extend(den.breakpoints_in(w.start, w.end()));
            for b in bps {
                for side in [Side::Right, Side::Left] {
                    best = best.max((num.eval_side(b, side) / den.eval_side(b, side)).abs());
                }
            }
            Ok(best)
        }
    }
}
