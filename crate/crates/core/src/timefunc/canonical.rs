//! Flattened form used by the conservative calculus: a constant, sinusoids
//! with same-frequency terms merged, and scaled periodic shapes.

use super::leaves::{PiecewiseConstant, PiecewiseLinear, RectifiedSine};
use super::{bounds, TimeFunction};
use crate::scalar::{lit, Real};

#[derive(Clone, Debug)]
pub(crate) struct Sinusoid<T> {
    pub frequency: T,
    pub cos_coef: T,
    pub sin_coef: T,
}

impl<T: Real> Sinusoid<T> {
    pub fn amplitude(&self) -> T {
        self.cos_coef.hypot(self.sin_coef)
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Shape<T> {
    Steps(PiecewiseConstant<T>),
    Linear(PiecewiseLinear<T>),
    Rectified(RectifiedSine<T>),
}

impl<T: Real> Shape<T> {
    pub fn mean(&self) -> T {
        match self {
            Self::Steps(p) => p.mean(),
            Self::Linear(p) => p.mean(),
            Self::Rectified(r) => r.mean(),
        }
    }

    pub fn min_value(&self) -> T {
        match self {
            Self::Steps(p) => p.min_value(),
            Self::Linear(p) => p.min_value(),
            Self::Rectified(r) => r.min_value(),
        }
    }

    pub fn max_value(&self) -> T {
        match self {
            Self::Steps(p) => p.max_value(),
            Self::Linear(p) => p.max_value(),
            Self::Rectified(r) => r.max_value(),
        }
    }

    pub fn sup_abs(&self) -> T {
        match self {
            Self::Steps(p) => p.sup_abs(),
            Self::Linear(p) => p.sup_abs(),
            Self::Rectified(r) => r.sup_abs(),
        }
    }

    pub fn centered_antiderivative_range(&self) -> T {
        match self {
            Self::Steps(p) => p.centered_antiderivative_range(),
            Self::Linear(p) => p.centered_antiderivative_range(),
            Self::Rectified(r) => r.centered_antiderivative_range(),
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct Canonical<T> {
    pub constant: T,
    pub sinusoids: Vec<Sinusoid<T>>,
    pub shapes: Vec<Shape<T>>,
}

impl<T: Real> Canonical<T> {
    pub fn of(f: &TimeFunction<T>) -> Self {
        let mut c = Canonical { constant: T::zero(), sinusoids: Vec::new(), shapes: Vec::new() };
        c.absorb(f, T::one());
        c.merge_sinusoids();
        c.merge_steps();
        c
    }

    fn absorb(&mut self, f: &TimeFunction<T>, k: T) {
        match f {
            TimeFunction::Constant { value } => self.constant += k * *value,
            TimeFunction::TrigSum { c0, terms } => {
                self.constant += k * *c0;
                for term in terms {
                    let (c, s) = term.cos_sin_coefficients();
                    self.sinusoids.push(Sinusoid { frequency: term.frequency(), cos_coef: k * c, sin_coef: k * s });
                }
            }
            TimeFunction::PiecewiseConstant(p) => self.shapes.push(Shape::Steps(p.scaled(k))),
            TimeFunction::PiecewiseLinear(p) => self.shapes.push(Shape::Linear(p.scaled(k))),
            TimeFunction::RectifiedSine(r) => self.shapes.push(Shape::Rectified(r.scaled(k))),
            TimeFunction::Sum { terms } => terms.iter().for_each(|g| self.absorb(g, k)),
            TimeFunction::Scaled { factor, inner } => self.absorb(inner, k * *factor),
        }
    }

    /// Same-frequency terms (relative tolerance 1e-9) become one sinusoid.
    fn merge_sinusoids(&mut self) {
        self.sinusoids.sort_by(|a, b| a.frequency.partial_cmp(&b.frequency).unwrap());
        let tol = T::rel_tol(1e-9);
        let mut merged: Vec<Sinusoid<T>> = Vec::with_capacity(self.sinusoids.len());
        for s in self.sinusoids.drain(..) {
            match merged.last_mut() {
                Some(last) if (s.frequency - last.frequency).abs() <= tol * last.frequency => {
                    last.cos_coef += s.cos_coef;
                    last.sin_coef += s.sin_coef;
                }
                _ => merged.push(s),
            }
        }
        merged.retain(|s| s.amplitude() > T::zero());
        self.sinusoids = merged;
    }

    /// Step functions with commensurate periods are combined exactly.
    fn merge_steps(&mut self) {
        let mut steps: Vec<PiecewiseConstant<T>> = Vec::new();
        let mut others = Vec::new();
        for shape in self.shapes.drain(..) {
            match shape {
                Shape::Steps(p) => {
                    let mut absorbed = false;
                    for existing in steps.iter_mut() {
                        if let Some(period) = bounds::common_period(&[existing.period(), p.period()]) {
                            if let Ok(c) = existing.combine(&p, period, |x, y| x + y) {
                                *existing = c;
                                absorbed = true;
                                break;
                            }
                        }
                    }
                    if !absorbed {
                        steps.push(p);
                    }
                }
                other => others.push(other),
            }
        }
        self.shapes = steps.into_iter().map(Shape::Steps).chain(others).collect();
    }

    pub fn is_constant(&self) -> bool {
        self.sinusoids.is_empty() && self.shapes.iter().all(|s| s.sup_abs() == T::zero())
    }

    pub fn mean(&self) -> T {
        self.shapes.iter().fold(self.constant, |acc, s| acc + s.mean())
    }

    /// `|c| + Σ amplitudes + Σ sup|shape|`, except that a lone step function
    /// plus constant is bounded exactly.
    pub fn sup_bound(&self) -> T {
        if self.sinusoids.is_empty() && self.shapes.len() == 1 {
            if let Shape::Steps(p) = &self.shapes[0] {
                return (p.max_value() + self.constant).abs().max((p.min_value() + self.constant).abs());
            }
        }
        let trig = self.sinusoids.iter().fold(T::zero(), |a, s| a + s.amplitude());
        let shapes = self.shapes.iter().fold(T::zero(), |a, s| a + s.sup_abs());
        self.constant.abs() + trig + shapes
    }

    pub fn lower_bound(&self) -> T {
        let trig = self.sinusoids.iter().fold(T::zero(), |a, s| a + s.amplitude());
        self.shapes.iter().fold(self.constant - trig, |a, s| a + s.min_value())
    }

    pub fn upper_bound(&self) -> T {
        let trig = self.sinusoids.iter().fold(T::zero(), |a, s| a + s.amplitude());
        self.shapes.iter().fold(self.constant + trig, |a, s| a + s.max_value())
    }

    /// `Σ 2·amplitude/frequency + Σ exact centred antiderivative ranges`.
    /// Meaningful only when the total mean vanishes.
    pub fn oscillation_bound(&self) -> T {
        let two = lit::<T>(2.0);
        let trig = self.sinusoids.iter().fold(T::zero(), |a, s| a + two * s.amplitude() / s.frequency);
        self.shapes.iter().fold(trig, |a, s| a + s.centered_antiderivative_range())
    }
}
