//! Fixed-step RK4 for the linear equations and the nonlinear models, plus an
//! exponential envelope fit on the result.
//!
//! The grid contains every coefficient breakpoint and the first few
//! multiples of each constant delay, so no step straddles a jump. Delayed
//! values between stored nodes come from cubic Hermite interpolation with
//! the one-sided derivatives at both ends; values inside the step being
//! taken are interpolated linearly towards the current stage, which makes a
//! zero delay read the stage value itself. The distributed term is a
//! trapezoid sum over the stored nodes in the window with fractional cells
//! at both ends.

use serde::{Deserialize, Serialize};

use crate::certify::EquationSpec;
use crate::error::{Error, Result};
use crate::kernelfunc::MomentMode;
use crate::models::Model;
use crate::numerics::{aligned_grid, fit_line, hermite};
use crate::scalar::{lit, Real};
use crate::timefunc::{periodicity_of, BoundMode, Periodicity, Side, TimeFunction};

/// `x(t)` for `t ≤ t0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", bound = "T: Real")]
pub enum InitialHistory<T> {
    Constant { value: T },
    Function { function: TimeFunction<T> },
}

impl<T: Real> Default for InitialHistory<T> {
    fn default() -> Self {
        Self::Constant { value: T::one() }
    }
}

impl<T: Real> InitialHistory<T> {
    pub fn constant(value: T) -> Self {
        Self::Constant { value }
    }

    pub fn eval(&self, t: T) -> T {
        match self {
            Self::Constant { value } => *value,
            Self::Function { function } => function.eval(t),
        }
    }

    pub fn scaled(&self, c: T) -> Self {
        match self {
            Self::Constant { value } => Self::Constant { value: *value * c },
            Self::Function { function } => Self::Function { function: function.times(c) },
        }
    }

    fn validate(&self) -> Result<()> {
        let bound = match self {
            Self::Constant { value } => value.abs(),
            Self::Function { function } => function.sup_norm(BoundMode::Conservative),
        };
        if bound.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidFunction("initial history must be bounded".into()))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Trajectory<T> {
    pub grid: Vec<T>,
    pub values: Vec<T>,
    /// Nominal step; cells next to a breakpoint can be shorter or longer.
    pub step: T,
    pub aligned: bool,
}

impl<T: Real> Trajectory<T> {
    pub fn final_value(&self) -> T {
        *self.values.last().expect("trajectory is never empty")
    }

    /// Linear interpolation between grid nodes; clamps outside the grid.
    pub fn value_at(&self, t: T) -> T {
        let i = self.grid.partition_point(|&g| g <= t);
        if i == 0 {
            return self.values[0];
        }
        if i == self.grid.len() {
            return self.final_value();
        }
        let (t0, t1) = (self.grid[i - 1], self.grid[i]);
        let w = (t - t0) / (t1 - t0);
        self.values[i - 1] + (self.values[i] - self.values[i - 1]) * w
    }

    /// `sup |x|` over grid nodes in `[a, b]`.
    pub fn max_abs_in(&self, a: T, b: T) -> T {
        self.grid
            .iter()
            .zip(&self.values)
            .filter(|(&t, _)| t >= a && t <= b)
            .fold(T::zero(), |m, (_, x)| m.max(x.abs()))
    }

    /// CSV with header `t,x`, values in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.grid.len() * 40 + 4);
        out.push_str("t,x\n");
        for (t, x) in self.grid.iter().zip(&self.values) {
            out.push_str(&format!("{t},{x}\n"));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct DecayEstimate<T> {
    pub lambda_hat: T,
    pub m_hat: T,
    pub r2: T,
    pub window: (T, T),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct SimOptions<T> {
    /// End time; `t0 + 100·max(period, τ, σ, 1)` when absent.
    pub t_end: Option<T>,
    /// Nominal step; `min(0.01, shortest period/256)` when absent.
    pub step: Option<T>,
}

/// The thing being integrated.
#[derive(Clone, Copy, Debug)]
pub enum Problem<'a, T> {
    Linear(&'a EquationSpec<T>),
    Model(&'a Model<T>),
}

/// Stored solution plus the point reached by the stage being evaluated.
struct Store<'a, T> {
    t0: T,
    hist: &'a InitialHistory<T>,
    grid: &'a [T],
    vals: Vec<T>,
    d_right: Vec<T>,
    d_left: Vec<T>,
}

impl<T: Real> Store<'_, T> {
    fn at(&self, s: T, stage: (T, T)) -> T {
        if s < self.t0 {
            return self.hist.eval(s);
        }
        let n = self.vals.len() - 1;
        let tn = self.grid[n];
        if s >= tn {
            let (ts, xs) = stage;
            if ts <= tn || s >= ts {
                return if ts <= tn { self.vals[n] } else { xs };
            }
            return self.vals[n] + (xs - self.vals[n]) * (s - tn) / (ts - tn);
        }
        let i = self.grid[..=n].partition_point(|&g| g <= s) - 1;
        if s == self.grid[i] {
            return self.vals[i];
        }
        hermite(self.grid[i], self.vals[i], self.d_right[i], self.grid[i + 1], self.vals[i + 1], self.d_left[i + 1], s)
    }

    /// Trapezoid approximation of `∫_lo^t w(s) x(s) ds`, where `t` is the
    /// stage time.
    fn window_integral(&self, lo: T, stage: (T, T), step: T, w: &dyn Fn(T) -> T) -> T {
        let t = stage.0;
        if !(t > lo) {
            return T::zero();
        }
        let mut nodes = vec![lo];
        if lo < self.t0 {
            // Uniform nodes through the history, ending at t0.
            let k = ((self.t0 - lo) / step).floor().to_usize().unwrap_or(0);
            for j in (1..=k).rev() {
                let s = self.t0 - step * T::count(j);
                if s > lo {
                    nodes.push(s);
                }
            }
        }
        let n = self.vals.len() - 1;
        let first = self.grid[..=n].partition_point(|&g| g <= lo);
        nodes.extend(self.grid[first..=n].iter().copied().filter(|&g| g < t));
        nodes.push(t);
        let mut acc = T::zero();
        let mut prev = (nodes[0], w(nodes[0]) * self.at(nodes[0], stage));
        for &s in &nodes[1..] {
            if s <= prev.0 {
                continue;
            }
            let cur = (s, w(s) * self.at(s, stage));
            acc += (cur.0 - prev.0) * (cur.1 + prev.1) / lit(2.0);
            prev = cur;
        }
        acc
    }
}

fn linear_rhs<T: Real>(spec: &EquationSpec<T>, store: &Store<T>, t: T, side: Side, x: T, step: T) -> T {
    let stage = (t, x);
    let mut d = T::zero();
    for term in spec.terms() {
        d -= term.coef.eval_side(t, side) * store.at(t - term.offset_at_side(t, side), stage);
    }
    if let Some(a0) = spec.nondelay_coef() {
        d -= a0.eval_side(t, side) * x;
    }
    if let Some(k) = spec.kernel() {
        let lo = (t - k.offset_at_side(t, side)).min(t);
        d -= store.window_integral(lo, stage, step, &|s| k.eval(t, s));
    }
    if let Some(f) = spec.forcing() {
        d += f.eval_side(t, side);
    }
    d
}

/// Shortest component period, or `None` for constant data.
fn shortest_period<T: Real>(periods: &[T]) -> Option<T> {
    periods.iter().copied().filter(|p| p.is_finite() && *p > T::zero()).reduce(T::min)
}

/// `Σ||a_k|| + ||a0|| + sup b̄` of the (linearized) equation.
fn coefficient_mass<T: Real>(spec: &EquationSpec<T>) -> T {
    spec.terms().iter().map(|k| k.coef.sup_norm(BoundMode::Conservative)).fold(T::zero(), |a, b| a + b)
        + spec.nondelay_coef().map_or(T::zero(), |a| a.sup_norm(BoundMode::Conservative))
        + spec.b_abs_norm(MomentMode::Conservative)
}

/// Default end time `t0 + 100·max(period, τ, σ, 1)`.
pub fn default_t_end<T: Real>(spec: &EquationSpec<T>) -> T {
    let period = match periodicity_of(&spec.component_periods()) {
        Periodicity::Periodic(p) => p,
        _ => T::one(),
    };
    spec.t0() + lit::<T>(100.0) * period.max(spec.max_lag()).max(T::one())
}

/// Grid layout shared by both problem kinds.
fn layout<T: Real>(spec: &EquationSpec<T>, opts: &SimOptions<T>) -> Result<(Vec<T>, T)> {
    let t0 = spec.t0();
    let t_end = opts.t_end.unwrap_or_else(|| default_t_end(spec));
    if !(t_end > t0) || !t_end.is_finite() {
        return Err(Error::BadParams(format!("end time {t_end} must exceed t0 = {t0}")));
    }
    let mass = coefficient_mass(spec);
    let half: T = lit(0.5);
    let step = match opts.step {
        Some(h) => {
            if !(h > T::zero()) || !h.is_finite() {
                return Err(Error::BadParams(format!("step must be positive, got {h}")));
            }
            if h * mass > half {
                return Err(Error::StepTooLarge { step: h.as_f64(), product: (h * mass).as_f64() });
            }
            h
        }
        None => {
            let mut h: T = lit(0.01);
            if let Some(p) = shortest_period(&spec.component_periods()) {
                h = h.min(p / lit(256.0));
            }
            if h * mass > half {
                h = lit::<T>(0.25) / mass;
            }
            h
        }
    };
    let mut bps = spec.breakpoints_in(t0, t_end);
    let mut lags: Vec<T> = spec.terms().iter().filter(|k| k.delay_offset.is_none()).map(|k| k.tau).collect();
    lags.extend(spec.kernel().map(|k| k.sigma()));
    for lag in lags.into_iter().filter(|&l| l > T::zero()) {
        for j in 1..=4 {
            bps.push(t0 + lag * T::count(j));
        }
    }
    Ok((aligned_grid(t0, t_end, step, &bps), step))
}

/// Integrates `problem` from `history` on an aligned grid.
pub fn integrate_dde<T: Real>(problem: Problem<T>, history: &InitialHistory<T>, opts: &SimOptions<T>) -> Result<Trajectory<T>> {
    history.validate()?;
    match problem {
        Problem::Linear(spec) => {
            let (grid, step) = layout(spec, opts)?;
            run_rk4(&grid, step, spec.t0(), history, |store, t, side, x| linear_rhs(spec, store, t, side, x, step))
        }
        Problem::Model(model) => {
            let lin = model.linearize()?;
            let (grid, step) = layout(&lin, opts)?;
            run_rk4(&grid, step, model.t0(), history, |store, t, side, x| {
                model.rhs(t, side, x, &|s| store.at(s, (t, x)))
            })
        }
    }
}

pub fn simulate_linear<T: Real>(spec: &EquationSpec<T>, history: &InitialHistory<T>, opts: &SimOptions<T>) -> Result<Trajectory<T>> {
    integrate_dde(Problem::Linear(spec), history, opts)
}

pub fn simulate_model<T: Real>(model: &Model<T>, history: &InitialHistory<T>, opts: &SimOptions<T>) -> Result<Trajectory<T>> {
    integrate_dde(Problem::Model(model), history, opts)
}

fn run_rk4<T, F>(grid: &[T], step: T, t0: T, hist: &InitialHistory<T>, f: F) -> Result<Trajectory<T>>
where
    T: Real,
    F: Fn(&Store<T>, T, Side, T) -> T,
{
    let n = grid.len();
    let x0 = hist.eval(t0);
    let mut store = Store {
        t0,
        hist,
        grid,
        vals: Vec::with_capacity(n),
        d_right: Vec::with_capacity(n),
        d_left: Vec::with_capacity(n),
    };
    store.vals.push(x0);
    store.d_left.push(T::zero());
    let two: T = lit(2.0);
    let six: T = lit(6.0);
    for i in 0..n - 1 {
        let (tn, tn1) = (grid[i], grid[i + 1]);
        let h = tn1 - tn;
        let xn = store.vals[i];
        let tm = tn + h / two;
        let k1 = f(&store, tn, Side::Right, xn);
        store.d_right.push(k1);
        let k2 = f(&store, tm, Side::Right, xn + h / two * k1);
        let k3 = f(&store, tm, Side::Right, xn + h / two * k2);
        let k4 = f(&store, tn1, Side::Left, xn + h * k3);
        let x1 = xn + h / six * (k1 + two * k2 + two * k3 + k4);
        if !x1.is_finite() {
            return Err(Error::NonFiniteState { t: tn1.as_f64() });
        }
        let d = f(&store, tn1, Side::Left, x1);
        store.vals.push(x1);
        store.d_left.push(d);
    }
    Ok(Trajectory { grid: grid.to_vec(), values: store.vals, step, aligned: true })
}

/// Smallest `|x|` the envelope fit accepts.
const ZERO_GUARD: f64 = 1e-300;

/// Least-squares fit of `log|x|` at the local maxima of `|x|` after
/// `t_start`. Monotone stretches have no interior maxima, so with fewer than
/// five of them the window is cut into twenty pieces and each piece
/// contributes its maximum.
pub fn estimate_decay<T: Real>(traj: &Trajectory<T>, t_start: T) -> Result<DecayEstimate<T>> {
    let guard: T = lit(ZERO_GUARD);
    let first = traj.grid.partition_point(|&t| t < t_start);
    let (ts, xs) = (&traj.grid[first..], &traj.values[first..]);
    if xs.iter().all(|x| !(x.abs() >= guard)) {
        return Err(Error::ZeroSolution);
    }
    let abs: Vec<T> = xs.iter().map(|x| x.abs()).collect();
    let mut pts: Vec<(T, T)> = (1..abs.len().saturating_sub(1))
        .filter(|&i| abs[i] > abs[i - 1] && abs[i] >= abs[i + 1] && abs[i] >= guard)
        .map(|i| (ts[i], abs[i]))
        .collect();
    if pts.len() < 5 {
        pts = windowed_maxima(ts, &abs, 20, guard);
    }
    let t_end = traj.grid.last().copied().unwrap_or(t_start);
    if pts.len() < 5 {
        return Err(Error::InsufficientPeaks { found: pts.len(), t_start: t_start.as_f64() });
    }
    let tx: Vec<T> = pts.iter().map(|p| p.0).collect();
    let ly: Vec<T> = pts.iter().map(|p| p.1.ln()).collect();
    let fit = fit_line(&tx, &ly).ok_or(Error::InsufficientPeaks { found: pts.len(), t_start: t_start.as_f64() })?;
    let t0 = traj.grid[0];
    Ok(DecayEstimate {
        lambda_hat: -fit.slope,
        m_hat: (fit.intercept + fit.slope * t0).exp(),
        r2: fit.r2,
        window: (ts.first().copied().unwrap_or(t_start), t_end),
    })
}

fn windowed_maxima<T: Real>(ts: &[T], abs: &[T], pieces: usize, guard: T) -> Vec<(T, T)> {
    if ts.len() < 2 {
        return Vec::new();
    }
    let (a, b) = (ts[0], ts[ts.len() - 1]);
    let width = (b - a) / T::count(pieces);
    let mut out = Vec::with_capacity(pieces);
    let mut j = 0;
    for p in 0..pieces {
        let hi = if p + 1 == pieces { b } else { a + width * T::count(p + 1) };
        let mut best: Option<(T, T)> = None;
        while j < ts.len() && (ts[j] < hi || (p + 1 == pieces && ts[j] <= hi)) {
            if abs[j] >= guard && best.is_none_or(|(_, m)| abs[j] > m) {
                best = Some((ts[j], abs[j]));
            }
            j += 1;
        }
        out.extend(best);
    }
    out
}

#[cfg(test)]
mod tests;
