//! Small numerical kernels: quadrature, 1-D search and line fitting.

use crate::scalar::{lit, Real};

/// Adaptive Simpson quadrature of `f` over `[a, b]` with absolute tolerance
/// `tol`. Recursion stops at `max_depth` halvings.
pub fn adaptive_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T, max_depth: u32) -> T {
    if b <= a {
        return T::zero();
    }
    let half = lit::<T>(0.5);
    let m = (a + b) * half;
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / lit(6.0) * (fa + lit::<T>(4.0) * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let half = lit::<T>(0.5);
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let (flm, frm) = (f(lm), f(rm));
    let six = lit::<T>(6.0);
    let four = lit::<T>(4.0);
    let left = (m - a) / six * (fa + four * flm + fm);
    let right = (b - m) / six * (fm + four * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= lit::<T>(15.0) * tol {
        return left + right + delta / lit(15.0);
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol * half, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol * half, depth - 1)
}

/// Adaptive Simpson with a relative tolerance against the magnitude of a
/// coarse first estimate.
pub fn integrate_rel<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, rel: T) -> T {
    if b <= a {
        return T::zero();
    }
    // A 16-panel pass sets the scale so that near-cancelling integrands do
    // not demand absurd absolute accuracy.
    let n = 16usize;
    let h = (b - a) / T::count(n);
    let mut scale = T::zero();
    for i in 0..=n {
        scale = scale.max(f(a + h * T::count(i)).abs());
    }
    let tol = rel * (scale * (b - a)).max(T::min_positive_value());
    adaptive_simpson(f, a, b, tol, 40)
}

/// Composite Simpson on `n` panels (`n` rounded up to even).
pub fn composite_simpson<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, n: usize) -> T {
    if b <= a {
        return T::zero();
    }
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / T::count(n);
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { lit::<T>(4.0) } else { lit::<T>(2.0) };
        acc += w * f(a + h * T::count(i));
    }
    acc * h / lit(3.0)
}

/// Golden-section minimisation on `[lo, hi]`. Returns `(argmin, min)`.
pub fn golden_section_min<T: Real, F: Fn(T) -> T>(f: &F, lo: T, hi: T, tol: T) -> (T, T) {
    let inv_phi = (lit::<T>(5.0).sqrt() - T::one()) * lit(0.5);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) * lit(0.5);
    (x, f(x))
}

/// Bisection for a root of `f` on `[lo, hi]`, assuming a sign change.
pub fn bisect_root<T: Real, F: Fn(T) -> T>(f: &F, mut lo: T, mut hi: T, tol: T) -> T {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = (lo + hi) * lit(0.5);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return mid;
        }
        let fm = f(mid);
        if fm == T::zero() {
            return mid;
        }
        if (fm < T::zero()) == (flo < T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * lit(0.5)
}

/// Ordinary least-squares line `y = slope * x + intercept`, with the
/// coefficient of determination clamped to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r2: T,
}

pub fn fit_line<T: Real>(xs: &[T], ys: &[T]) -> Option<LineFit<T>> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = T::count(n);
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / nf;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / nf;
    let (mut sxx, mut sxy, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx <= T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = ys
        .iter()
        .zip(xs)
        .fold(T::zero(), |a, (&y, &x)| a + (y - slope * x - intercept).powi(2));
    // A flat, noiseless envelope is a perfect fit.
    let floor = T::epsilon() * T::epsilon() * nf * (T::one() + my * my);
    let r2 = if syy <= floor {
        T::one()
    } else {
        (T::one() - ss_res / syy).max(T::zero()).min(T::one())
    };
    Some(LineFit { slope, intercept, r2 })
}

/// Cubic Hermite interpolation on `[t0, t1]` from values and slopes.
#[inline]
pub fn hermite<T: Real>(t0: T, x0: T, d0: T, t1: T, x1: T, d1: T, t: T) -> T {
    let h = t1 - t0;
    if h <= T::zero() {
        return x0;
    }
    let s = (t - t0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let two = lit::<T>(2.0);
    let three = lit::<T>(3.0);
    let h00 = two * s3 - three * s2 + T::one();
    let h10 = s3 - two * s2 + s;
    let h01 = -two * s3 + three * s2;
    let h11 = s3 - s2;
    h00 * x0 + h10 * h * d0 + h01 * x1 + h11 * h * d1
}

/// Grid from `start` to `end` with spacing at most `step` that contains
/// every breakpoint strictly inside. Uniform nodes crowding a breakpoint are
/// dropped.
pub fn aligned_grid<T: Real>(start: T, end: T, step: T, breakpoints: &[T]) -> Vec<T> {
    let n = ((end - start) / step).ceil().to_usize().unwrap_or(1).max(1);
    let h = (end - start) / T::count(n);
    let crowd = h * lit(1e-3);
    let mut bps: Vec<T> = breakpoints.iter().copied().filter(|&b| b > start + crowd && b < end - crowd).collect();
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup_by(|a, b| (*a - *b).abs() <= crowd);
    let mut out = Vec::with_capacity(n + bps.len() + 1);
    let mut j = 0;
    for i in 0..=n {
        let t = if i == n { end } else { start + h * T::count(i) };
        while j < bps.len() && bps[j] < t - crowd {
            out.push(bps[j]);
            j += 1;
        }
        if j < bps.len() && (bps[j] - t).abs() <= crowd {
            if i == 0 || i == n {
                out.push(t);
            } else {
                out.push(bps[j]);
            }
            j += 1;
            continue;
        }
        out.push(t);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn adaptive_simpson_handles_smooth_integrands() {
        let v = integrate_rel(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert_relative_eq!(v, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn composite_simpson_exact_on_cubics() {
        let v = composite_simpson(&|x: f64| x * x * x - x, 0.0, 2.0, 2);
        assert_relative_eq!(v, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, fx) = golden_section_min(&|x: f64| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisect_root_of_cosine() {
        let r = bisect_root(&|x: f64| x.cos(), 1.0, 2.0, 1e-14);
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = fit_line(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, -0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_line_fit_is_perfect() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.1; 4];
        let fit = fit_line(&xs, &ys).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let p = |t: f64| t * t * t - 2.0 * t;
        let dp = |t: f64| 3.0 * t * t - 2.0;
        let v = hermite(1.0, p(1.0), dp(1.0), 2.0, p(2.0), dp(2.0), 1.37);
        assert_relative_eq!(v, p(1.37), epsilon = 1e-12);
    }

    #[test]
    fn grid_contains_breakpoints_and_ends() {
        let g = aligned_grid(0.0f64, 1.0, 0.1, &[0.25, 0.5, 0.5000000001, 1.0]);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.contains(&0.25));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(g.iter().any(|&t| (t - 0.5).abs() < 1e-9));
    }

}
