//! Ready-made equations and models: the worked cases the reproduction suite,
//! the CLI examples and the tests share.

use crate::certify::{DelayTerm, EquationSpec};
use crate::error::Result;
use crate::kernelfunc::KernelFunction;
use crate::models::{GrowthTerm, HutchinsonParams, Rounding};
use crate::scalar::{lit, Real};
use crate::timefunc::{TimeFunction, TrigTerm};

/// `x' + 0.1(0.9 − sin 5t) x(t−0.1) + 0.1(0.9 + cos 10t) x(t−0.2)
///   + ∫_{t−σ}^t [0.1 + 0.2 cos(t−s)] x(s) ds = 0`.
pub fn oscillating_kernel<T: Real>(sigma: T) -> Result<EquationSpec<T>> {
    let a1 = TimeFunction::trig(lit(0.09), vec![TrigTerm::sin(lit(-0.1), lit(5.0))]);
    let a2 = TimeFunction::trig(lit(0.09), vec![TrigTerm::cos(lit(0.1), lit(10.0))]);
    let k = KernelFunction::phase(lit(0.1), lit(0.2), T::one(), T::one(), T::zero(), sigma)?;
    Ok(EquationSpec::delays(vec![(a1, lit(0.1)), (a2, lit(0.2))])?.with_kernel(k))
}

/// `x' + ∫_{t−0.1}^t [10 + 11 sin(t − 10s)] x(s) ds = 0`.
pub fn pure_kernel<T: Real>() -> Result<EquationSpec<T>> {
    let k = KernelFunction::phase(lit(10.0), lit(11.0), T::one(), lit(10.0), -T::FRAC_PI_2(), lit(0.1))?;
    EquationSpec::new(vec![], None, Some(k), None, T::zero())
}

/// `μ` on `[2n, 2n+1)`, `−β` on `[2n+1, 2n+2)`.
pub fn two_level_wave<T: Real>(mu: T, beta: T) -> Result<TimeFunction<T>> {
    TimeFunction::square_wave(mu, -beta, T::one(), lit(2.0))
}

/// `x' + a(t) x(t − τ) = 0` with the two-level wave coefficient.
pub fn square_wave_delay<T: Real>(mu: T, beta: T, tau: T) -> Result<EquationSpec<T>> {
    EquationSpec::delays(vec![(two_level_wave(mu, beta)?, tau)])
}

/// Hutchinson model with `K = 1`, `r = 0.5 − 0.75 cos 10t`,
/// `u = 0.5 + 0.75 sin 10t`, delay `h0|sin t|` and control delay
/// `0.1 cos² t`.
pub fn controlled_hutchinson<T: Real>(h0: T) -> Result<HutchinsonParams<T>> {
    let r = TimeFunction::trig(lit(0.5), vec![TrigTerm::cos(lit(-0.75), lit(10.0))]);
    let u = TimeFunction::trig(lit(0.5), vec![TrigTerm::sin(lit(0.75), lit(10.0))]);
    let h = TimeFunction::rectified_sine(h0, T::one(), T::zero())?;
    let g = TimeFunction::trig(lit(0.05), vec![TrigTerm::cos(lit(0.05), lit(2.0))]);
    let p = HutchinsonParams {
        k: T::one(),
        r_terms: vec![GrowthTerm::with_offset(r, h0, h)],
        u,
        sigma: lit(0.1),
        g_offset: Some(g),
        t0: T::zero(),
    };
    p.validate()?;
    Ok(p)
}

/// Constants of [`controlled_hutchinson`] rounded up to 3 and 1.5.
pub fn controlled_hutchinson_rounding<T: Real>() -> Rounding<T> {
    Rounding { prefactor: lit(3.0), ratio: lit(1.5) }
}

/// An equation whose reference ODE is exponentially stable and whose delay
/// mass can be made arbitrarily small, yet whose solutions do not decay.
///
/// With `δ = e^ε − 1` and period `ε + δ`: on the first `ε` of each period
/// `a = −1` and the delay vanishes, so `x' = x`; on the rest `a = 1` and the
/// argument is frozen at the period start, so `x` falls linearly back to its
/// starting value.
pub fn non_decaying<T: Real>(epsilon: T) -> Result<EquationSpec<T>> {
    let delta = epsilon.exp() - T::one();
    let period = epsilon + delta;
    let coef = TimeFunction::piecewise_constant(vec![T::zero(), epsilon], vec![-T::one(), T::one()], period)?;
    let offset = TimeFunction::piecewise_linear(
        vec![T::zero(), epsilon],
        vec![T::zero(), epsilon],
        vec![T::zero(), T::one()],
        period,
    )?;
    EquationSpec::new(vec![DelayTerm::with_offset(coef, period, offset)], None, None, None, T::zero())
}
