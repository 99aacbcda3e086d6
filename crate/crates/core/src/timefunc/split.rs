//! Decomposition `f = tilde + osc` into a positive floor part and a zero-mean
//! oscillation with bounded antiderivative.

use serde::{Deserialize, Serialize};

use super::{BoundMode, TimeFunction};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "kebab-case", bound = "T: Real")]
pub enum SplitPolicy<T> {
    /// `tilde` is the mean, `osc` everything else.
    #[default]
    ConstantMean,
    /// For a sign-changing step function: `tilde = f − λ·sign(f)` and
    /// `osc = λ·sign(f)`.
    Shift { lambda: T },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SplitResult<T> {
    pub tilde: TimeFunction<T>,
    pub osc: TimeFunction<T>,
    /// Lower bound of `tilde`.
    pub a0_floor: T,
    /// Bound on `sup |∫_s^t osc|`.
    pub alpha0: T,
    pub mode: BoundMode,
}

impl<T: Real> TimeFunction<T> {
    pub fn split(&self, policy: SplitPolicy<T>) -> Result<SplitResult<T>> {
        self.split_with(policy, BoundMode::Conservative)
    }

    pub fn split_with(&self, policy: SplitPolicy<T>, mode: BoundMode) -> Result<SplitResult<T>> {
        let (tilde, osc) = match policy {
            SplitPolicy::ConstantMean => {
                let mean = self.mean();
                let tol = T::rel_tol(1e-12) * self.sup_norm(BoundMode::Conservative);
                if !(mean > tol) {
                    return Err(Error::SplitInfeasible(format!("mean {mean} is not positive")));
                }
                let osc = match self.as_constant() {
                    Some(_) => TimeFunction::zero(),
                    None => TimeFunction::sum(vec![self.clone(), TimeFunction::constant(-mean)]),
                };
                (TimeFunction::constant(mean), osc)
            }
            SplitPolicy::Shift { lambda } => {
                let steps = self.as_piecewise_constant().ok_or_else(|| {
                    Error::SplitInfeasible("shift split needs a piecewise-constant function".into())
                })?;
                if !(lambda > T::zero()) {
                    return Err(Error::SplitInfeasible(format!("shift {lambda} must be positive")));
                }
                let sign = |v: T| if v > T::zero() { T::one() } else { -T::one() };
                let tilde = steps.map_values(|v| v - lambda * sign(v))?;
                if !(tilde.min_value() > T::zero()) {
                    return Err(Error::SplitInfeasible(format!(
                        "shift {lambda} does not leave a positive floor (min {})",
                        tilde.min_value()
                    )));
                }
                let osc = steps.map_values(|v| lambda * sign(v))?;
                (TimeFunction::PiecewiseConstant(tilde), TimeFunction::PiecewiseConstant(osc))
            }
        };
        let alpha0 = osc.oscillation_bound(mode).map_err(|e| match e {
            Error::NonZeroMean { mean, .. } => {
                Error::SplitInfeasible(format!("oscillating part has nonzero mean {mean:e}"))
            }
            other => other,
        })?;
        let a0_floor = tilde.lower_bound();
        Ok(SplitResult { tilde, osc, a0_floor, alpha0, mode })
    }
}
