//! Norm criteria: every quantity is a sup-norm, an oscillation bound or a
//! kernel moment norm, so the test is a single inequality
//! `lhs < e^{−osc}`.

use super::{Certificate, Criterion, EquationSpec, Options};
use crate::error::{Error, Result};
use crate::kernelfunc::MomentMode;
use crate::scalar::{lit, Real};
use crate::timefunc::{periodicity_of, ratio_sup_norm, BoundMode, Periodicity, SplitResult, TightConfig, TimeFunction};

struct Ctx<'a, T> {
    spec: &'a EquationSpec<T>,
    mode: BoundMode,
    cfg: TightConfig<T>,
}

impl<'a, T: Real> Ctx<'a, T> {
    fn new(spec: &'a EquationSpec<T>, opts: &Options<T>) -> Self {
        Self { spec, mode: opts.mode, cfg: TightConfig::default() }
    }

    fn norm(&self, f: &TimeFunction<T>) -> T {
        f.sup_norm_with(self.mode, &self.cfg)
    }

    fn ratio(&self, num: &TimeFunction<T>, split: &SplitResult<T>) -> Result<T> {
        ratio_sup_norm(num, &split.tilde, self.mode, &self.cfg)
    }

    /// `||v / tilde||` for a nonnegative quantity known only through its norm.
    fn over_floor(&self, norm: T, split: &SplitResult<T>) -> T {
        if norm == T::zero() {
            return T::zero();
        }
        norm / split.tilde.as_constant().unwrap_or(split.a0_floor)
    }

    fn b_abs(&self) -> T {
        self.spec.b_abs_norm(self.mode.into())
    }

    fn c(&self) -> T {
        self.spec.c_norm(self.mode.into())
    }

    /// `Σ τ_k ||a_k / tilde||`.
    fn tau_ratios(&self, split: &SplitResult<T>) -> Result<T> {
        let mut s = T::zero();
        for term in &self.spec.terms {
            if term.tau > T::zero() {
                s += term.tau * self.ratio(&term.coef, split)?;
            }
        }
        Ok(s)
    }

    fn ratios(&self, split: &SplitResult<T>) -> Result<T> {
        let mut s = T::zero();
        for term in &self.spec.terms {
            s += self.ratio(&term.coef, split)?;
        }
        Ok(s)
    }

    fn split(&self, f: &TimeFunction<T>, opts: &Options<T>, what: &str) -> Result<SplitResult<T>> {
        f.split_with(opts.split, self.mode)
            .map_err(|e| match e {
                Error::SplitInfeasible(m) => Error::SplitInfeasible(format!("{what}: {m}")),
                other => other,
            })
    }

    fn mass(&self) -> Result<TimeFunction<T>> {
        self.spec
            .kernel
            .as_ref()
            .ok_or_else(|| Error::ShapeMismatch("criterion needs a kernel".into()))?
            .mass_function()
    }

    fn certificate(&self, criterion: Criterion, lhs: T, split: &SplitResult<T>, osc_name: &str) -> Certificate<T> {
        let threshold = (-split.alpha0).exp();
        let mut cert = Certificate::decide(criterion, lhs, threshold, self.mode.into())
            .with(osc_name, split.alpha0)
            .with("a0_floor", split.a0_floor)
            .note(format!("{:?} sup-norms and moments", self.mode));
        if self.mode == BoundMode::Tight && self.spec.functions().iter().any(|f| f.tight_is_heuristic()) {
            cert = cert.note("tight norms sampled over a finite horizon for an aperiodic coefficient");
        }
        cert
    }
}

fn no_nondelay<T: Real>(spec: &EquationSpec<T>) -> Result<()> {
    if spec.nondelay_coef.is_some() {
        Err(Error::ShapeMismatch("equation has a non-delay term; use the non-delay criteria".into()))
    } else {
        Ok(())
    }
}

fn needs_terms<T: Real>(spec: &EquationSpec<T>) -> Result<()> {
    if spec.terms.is_empty() {
        Err(Error::ShapeMismatch("criterion needs delayed terms".into()))
    } else {
        Ok(())
    }
}

/// Norm test in three variants, by reference coefficient:
/// `a = Σ a_k` (a), the kernel mass `b` (b) and `a + b` (c).
pub fn explicit<T: Real>(spec: &EquationSpec<T>, variant: char, opts: &Options<T>) -> Result<Certificate<T>> {
    no_nondelay(spec)?;
    let cx = Ctx::new(spec, opts);
    let big_a = spec.big_a(opts.mode, opts.restricted_norms);
    match variant {
        'a' => {
            needs_terms(spec)?;
            let s = cx.split(&spec.coef_sum(), opts, "a = Σ a_k")?;
            let tr = cx.tau_ratios(&s)?;
            let br = cx.over_floor(cx.b_abs(), &s);
            Ok(cx
                .certificate(Criterion::ExplicitA, big_a * tr + br, &s, "alpha0")
                .with("A", big_a)
                .with("tau_ratio_sum", tr)
                .with("b_abs_ratio", br))
        }
        'b' => {
            let s = cx.split(&cx.mass()?, opts, "kernel mass b")?;
            let r = cx.ratios(&s)?;
            let cr = cx.over_floor(cx.c(), &s);
            Ok(cx
                .certificate(Criterion::ExplicitB, r + big_a * cr, &s, "beta0")
                .with("A", big_a)
                .with("ratio_sum", r)
                .with("c_ratio", cr))
        }
        'c' => {
            needs_terms(spec)?;
            let d = match &spec.kernel {
                Some(_) => spec.coef_sum().plus(&cx.mass()?),
                None => spec.coef_sum(),
            };
            let s = cx.split(&d, opts, "a + b")?;
            let tr = cx.tau_ratios(&s)?;
            let cr = cx.over_floor(cx.c(), &s);
            Ok(cx
                .certificate(Criterion::ExplicitC, big_a * (tr + cr), &s, "gamma0")
                .with("A", big_a)
                .with("tau_ratio_sum", tr)
                .with("c_ratio", cr))
        }
        other => Err(Error::BadParams(format!("unknown variant '{other}', expected a, b or c"))),
    }
}

/// Delays only: `Σ ||a_k|| · Σ τ_k ||a_k/ã|| < e^{−α0}`.
pub fn delay_only<T: Real>(spec: &EquationSpec<T>, opts: &Options<T>) -> Result<Certificate<T>> {
    no_nondelay(spec)?;
    needs_terms(spec)?;
    if spec.kernel.is_some() {
        return Err(Error::ShapeMismatch("criterion applies to equations without an integral term".into()));
    }
    let cx = Ctx::new(spec, opts);
    let s = cx.split(&spec.coef_sum(), opts, "a = Σ a_k")?;
    let norm_sum = spec.big_a(opts.mode, opts.restricted_norms);
    let tr = cx.tau_ratios(&s)?;
    Ok(cx
        .certificate(Criterion::DelayOnly, norm_sum * tr, &s, "alpha0")
        .with("A", norm_sum)
        .with("tau_ratio_sum", tr))
}

/// Integral term only: `||b̄|| · ||c/b̃|| < e^{−β0}`.
pub fn kernel_only<T: Real>(spec: &EquationSpec<T>, opts: &Options<T>) -> Result<Certificate<T>> {
    no_nondelay(spec)?;
    if !spec.terms.is_empty() || spec.kernel.is_none() {
        return Err(Error::ShapeMismatch("criterion needs a kernel and no delayed terms".into()));
    }
    let cx = Ctx::new(spec, opts);
    let s = cx.split(&cx.mass()?, opts, "kernel mass b")?;
    let b_abs = cx.b_abs();
    let cr = cx.over_floor(cx.c(), &s);
    Ok(cx
        .certificate(Criterion::KernelOnly, b_abs * cr, &s, "beta0")
        .with("b_abs_norm", b_abs)
        .with("c_norm", cx.c())
        .with("c_ratio", cr))
}

/// One delayed term: `||a q/ã|| + ||b̄/ã|| < e^{−α0}` with
/// `q(t) = ∫_{h(t)}^t (|a| + b̄)`.
pub fn single_delay_explicit<T: Real>(spec: &EquationSpec<T>, opts: &Options<T>) -> Result<Certificate<T>> {
    no_nondelay(spec)?;
    if spec.terms.len() != 1 {
        return Err(Error::ShapeMismatch("criterion needs exactly one delayed term".into()));
    }
    let cx = Ctx::new(spec, opts);
    let term = &spec.terms[0];
    let a = &term.coef;
    let s = cx.split(a, opts, "a")?;
    let b_abs = cx.b_abs();
    let br = cx.over_floor(b_abs, &s);
    let aq = match opts.mode {
        BoundMode::Conservative => {
            let q_sup = term.tau * (cx.norm(a) + b_abs);
            cx.ratio(a, &s)? * q_sup
        }
        BoundMode::Tight => sampled_aq(spec, &s),
    };
    Ok(cx
        .certificate(Criterion::SingleDelayExplicit, aq + br, &s, "alpha0")
        .with("aq_ratio", aq)
        .with("b_abs_ratio", br))
}

/// `sup |a(t) q(t) / ã(t)|` sampled over one steady period.
fn sampled_aq<T: Real>(spec: &EquationSpec<T>, s: &SplitResult<T>) -> T {
    let t0 = spec.t0;
    let term = &spec.terms[0];
    let k = spec.kernel.as_ref();
    let span = match periodicity_of(&spec.component_periods()) {
        Periodicity::Periodic(p) => p,
        Periodicity::Constant => T::one(),
        Periodicity::Aperiodic => lit(100.0),
    };
    let start = t0;
    let end = t0 + spec.max_lag() + span;
    let n = 4096usize;
    let mut ts: Vec<T> = (0..=n).map(|i| start + (end - start) * T::count(i) / T::count(n)).collect();
    ts.extend(spec.breakpoints_in(start, end));
    let mut best = T::zero();
    for t in ts {
        let from = (t - term.offset_at(t)).max(t0);
        let mut q = term.coef.integrate_abs(from, t);
        if let Some(k) = k {
            if t > from {
                q += crate::numerics::composite_simpson(
                    &|x| k.moment_b_abs(x, t0, MomentMode::Quadrature),
                    from,
                    t,
                    32,
                );
            }
        }
        best = best.max((term.coef.eval(t) * q / s.tilde.eval(t)).abs());
    }
    best
}

/// Non-delay reference `a0`: `Σ ||a_k/ã0|| + ||b̄/ã0|| < e^{−α0}`.
pub fn nondelay_explicit<T: Real>(spec: &EquationSpec<T>, opts: &Options<T>) -> Result<Certificate<T>> {
    let a0 = spec
        .nondelay_coef
        .as_ref()
        .ok_or_else(|| Error::ShapeMismatch("criterion needs a non-delay coefficient".into()))?;
    let cx = Ctx::new(spec, opts);
    let s = cx.split(a0, opts, "a0")?;
    let r = cx.ratios(&s)?;
    let br = cx.over_floor(cx.b_abs(), &s);
    Ok(cx
        .certificate(Criterion::NondelayExplicit, r + br, &s, "alpha0")
        .with("ratio_sum", r)
        .with("b_abs_ratio", br))
}
