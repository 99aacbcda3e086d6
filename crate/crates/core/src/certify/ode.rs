//! Uniform exponential stability of the reference ODE `x' + a(t)x = 0`,
//! whose fundamental function is `X(t, s) = exp(−∫_s^t a)`.

use serde::{Deserialize, Serialize};

use super::{CertMode, Certificate, Criterion};
use crate::error::Result;
use crate::numerics::golden_section_min;
use crate::scalar::{lit, Real};
use crate::timefunc::{BoundMode, Periodicity, SplitPolicy, TimeFunction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OdeVariant {
    /// `inf (1/(t−s)) ∫_s^t a > 0` over windows of length at least `min_window`.
    Mean,
    /// `∫_t^{t+h} a ≥ a0 > 0` for all `t ≥ t0`.
    Window,
    /// `a = ã + α` with `ã ≥ a0 > 0` and `|∫ α| ≤ α0`.
    Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, bound = "T: Real")]
pub struct OdeParams<T> {
    /// Window length `h` for [`OdeVariant::Window`]; one period when absent.
    pub window: Option<T>,
    /// Shortest averaging window for [`OdeVariant::Mean`]; one period when absent.
    pub min_window: Option<T>,
    /// Horizon scanned when the coefficient is not periodic.
    pub horizon: T,
    pub samples: usize,
}

impl<T: Real> Default for OdeParams<T> {
    fn default() -> Self {
        Self { window: None, min_window: None, horizon: lit(100.0), samples: 4096 }
    }
}

/// `X(t, s) = exp(−∫_s^t a)`.
pub fn fundamental_decay<T: Real>(a: &TimeFunction<T>, s: T, t: T) -> T {
    (-a.integrate(s, t)).exp()
}

/// Checks one of the three sufficient conditions for UES of `x' + a x = 0`.
/// The certificate has `lhs = 0` and the positive margin (`a0`) as the
/// threshold.
pub fn ode_check<T: Real>(
    a: &TimeFunction<T>,
    t0: T,
    variant: OdeVariant,
    params: &OdeParams<T>,
    policy: SplitPolicy<T>,
    mode: BoundMode,
) -> Result<Certificate<T>> {
    let periodicity = a.periodicity();
    let (span, heuristic) = match periodicity {
        Periodicity::Constant => (T::one(), false),
        Periodicity::Periodic(p) => (p, false),
        Periodicity::Aperiodic => (params.horizon, true),
    };
    match variant {
        OdeVariant::Split => {
            let s = a.split_with(policy, mode)?;
            let mut cert = Certificate::decide(Criterion::OdeSplit, T::zero(), s.a0_floor, mode.into())
                .with("a0_floor", s.a0_floor)
                .with("alpha0", s.alpha0)
                .note(format!("split policy {policy:?}, {mode:?} bounds"));
            if a.tight_is_heuristic() && mode == BoundMode::Tight {
                cert = cert.note("tight bounds sampled over a finite horizon (aperiodic coefficient)");
            }
            Ok(cert)
        }
        OdeVariant::Window => {
            let h = params.window.unwrap_or(span);
            let a0 = min_window_integral(a, t0, h, span, params.samples);
            let mut cert = Certificate::decide(Criterion::OdeWindow, T::zero(), a0, CertMode::Tight)
                .with("a0", a0)
                .with("window", h)
                .note(format!("minimum of ∫_t^(t+h) a over one period of t, h = {h}"));
            if heuristic {
                cert = cert.note("aperiodic coefficient: minimum taken over a finite horizon");
            }
            Ok(cert)
        }
        OdeVariant::Mean => {
            let l = params.min_window.unwrap_or(span);
            // Window averages approach the mean as the length grows, so the
            // infimum is reached among lengths in [l, l + a few periods].
            let mut worst = T::infinity();
            let n_len = 64;
            for j in 0..=n_len {
                let len = l + span * lit::<T>(4.0) * T::count(j) / T::count(n_len);
                let m = min_window_integral(a, t0, len, span, params.samples / 16) / len;
                worst = worst.min(m);
            }
            let mean = a.mean();
            let a0 = worst.min(mean);
            Ok(Certificate::decide(Criterion::OdeMean, T::zero(), a0, CertMode::Tight)
                .with("min_average", a0)
                .with("mean", mean)
                .with("min_window", l)
                .note("heuristic: window lengths and start times are sampled, the infimum is not proven"))
        }
    }
}

/// `min_{t ∈ [t0, t0 + span]} ∫_t^{t+h} a`, sampled with refinement at
/// breakpoint-aligned candidates.
pub(crate) fn min_window_integral<T: Real>(a: &TimeFunction<T>, t0: T, h: T, span: T, samples: usize) -> T {
    let n = samples.max(16);
    let g = |t: T| a.integrate(t, t + h);
    let step = span / T::count(n);
    let mut best = T::infinity();
    let mut best_i = 0;
    for i in 0..=n {
        let v = g(t0 + step * T::count(i));
        if v < best {
            best = v;
            best_i = i;
        }
    }
    // The window integral is piecewise linear between the points where
    // either end crosses a breakpoint; those are exact candidates.
    for b in a.breakpoints_in(t0, t0 + span + h) {
        for t in [b, b - h] {
            if t >= t0 && t <= t0 + span {
                best = best.min(g(t));
            }
        }
    }
    let lo = t0 + step * T::count(best_i.saturating_sub(1));
    let hi = t0 + step * T::count((best_i + 1).min(n));
    let (_, refined) = golden_section_min(&g, lo, hi, step * lit(1e-6));
    best.min(refined)
}
