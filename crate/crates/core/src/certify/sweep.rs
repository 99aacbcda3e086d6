//! Bisection for the parameter value where a criterion stops certifying.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Certificate, Verdict};
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    /// Width of the final bracket.
    pub tol: f64,
    /// Points sampled for the monotonicity check, endpoints included.
    pub monotone_samples: usize,
    /// Worker threads for the monotonicity samples; `0` lets rayon decide.
    pub jobs: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { tol: 1e-6, monotone_samples: 17, jobs: 0 }
    }
}

/// `lhs / threshold`, infinite for inapplicable certificates.
fn score<T: Real>(c: &Certificate<T>) -> T {
    match c.verdict {
        Verdict::Inapplicable => T::infinity(),
        _ => c.ratio(),
    }
}

/// Finds the boundary in `[lo, hi]` between certified and not certified
/// values of `family(p)`. The verdicts at the two ends must differ and the
/// ratio `lhs/threshold` must move monotonically from the certified end to
/// the other on a sampled grid. The returned value `v` certifies at
/// `v − tol` and fails at `v + tol`.
pub fn sweep_boundary<T, F>(family: F, lo: T, hi: T, opts: &SweepOptions) -> Result<T>
where
    T: Real,
    F: Fn(T) -> Result<Certificate<T>> + Sync,
{
    if !(lo < hi) {
        return Err(Error::BadParams(format!("empty range [{lo}, {hi}]")));
    }
    let tol: T = lit(opts.tol);
    if !(tol > T::zero()) {
        return Err(Error::BadParams(format!("tolerance {} must be positive", opts.tol)));
    }
    let n = opts.monotone_samples.max(2);
    let points: Vec<T> = (0..n).map(|i| lo + (hi - lo) * T::count(i) / T::count(n - 1)).collect();
    let eval = |p: &T| family(*p).map(|c| (c.certified(), score(&c)));
    let samples: Vec<(bool, T)> = if opts.jobs == 1 {
        points.iter().map(eval).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.jobs)
            .build()
            .map_err(|e| Error::BadParams(format!("thread pool: {e}")))?;
        pool.install(|| points.par_iter().map(eval).collect::<Result<_>>())?
    };
    let (cert_lo, cert_hi) = (samples[0].0, samples[n - 1].0);
    if cert_lo == cert_hi {
        return Err(Error::NoSignChange { lo: lo.as_f64(), hi: hi.as_f64() });
    }
    // Orient so the score should not decrease along `points`.
    let slack = lit::<T>(1e-9);
    for i in 1..n {
        let (prev, next) = (samples[i - 1].1, samples[i].1);
        let bad = if cert_lo { next < prev - slack * prev.abs() } else { next > prev + slack * prev.abs() };
        if bad {
            return Err(Error::NotMonotone { at: points[i].as_f64() });
        }
    }
    let (mut good, mut bad) = if cert_lo { (lo, hi) } else { (hi, lo) };
    while (bad - good).abs() > tol {
        let mid = (good + bad) / lit(2.0);
        if family(mid)?.certified() {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Ok((good + bad) / lit(2.0))
}
