//! Small scalar numerics shared by the solvers: stable logarithmic means,
//! bracketing root finding, golden-section search and adaptive quadrature.

const SERIES_CUTOFF: f64 = 1e-2;
const SERIES_TERMS: i32 = 16;

/// `ln(1 + x) / x`, continuous at `x = 0`.
pub fn log1p_ratio(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        // 1 - x/2 + x^2/3 - ...
        let mut acc = 0.0;
        for k in (0..SERIES_TERMS).rev() {
            acc = 1.0 / (k as f64 + 1.0) - x * acc;
        }
        acc
    } else {
        x.ln_1p() / x
    }
}

/// Derivative of [`log1p_ratio`].
pub fn log1p_ratio_deriv(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        // sum_{k>=1} (-1)^k k x^{k-1} / (k+1)
        let mut acc = 0.0;
        for k in (1..=SERIES_TERMS).rev() {
            let kf = k as f64;
            acc = -kf / (kf + 1.0) - x * acc;
        }
        // the recurrence above alternates sign starting from k = 1
        acc
    } else {
        (x / (1.0 + x) - x.ln_1p()) / (x * x)
    }
}

/// `(1 - ln(1 + x) / x) / x`, continuous at `x = 0` where it equals 1/2.
pub fn log1p_defect(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        // 1/2 - x/3 + x^2/4 - ...
        let mut acc = 0.0;
        for k in (1..=SERIES_TERMS).rev() {
            acc = 1.0 / (k as f64 + 1.0) - x * acc;
        }
        acc
    } else {
        (1.0 - x.ln_1p() / x) / x
    }
}

/// Inverse logarithmic mean `(ln a - ln b) / (a - b)` for positive `a, b`.
/// Equals `1 / b` when `a == b`.
pub fn inv_log_mean(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    log1p_ratio((hi - lo) / lo) / lo
}

/// Bisection on a sign-changing bracket. Iterates until the bracket can no
/// longer be split in floating point or `max_iter` is reached, and returns
/// the endpoint with the smaller residual magnitude.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, max_iter: usize) -> f64 {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo == 0.0 {
        return lo;
    }
    if f_hi == 0.0 {
        return hi;
    }
    debug_assert!(f_lo.signum() != f_hi.signum(), "bracket does not change sign");
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    if f_lo.abs() <= f_hi.abs() {
        lo
    } else {
        hi
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`; the endpoints are also compared so that a
/// boundary minimum is reported exactly.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > xtol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    for x in [a, b] {
        let fx = f(x);
        if fx < best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
