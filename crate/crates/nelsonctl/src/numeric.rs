//! Small numerical kernels used throughout the crate: trapezoidal rules,
//! adaptive Simpson quadrature, fourth-order central differences and
//! tridiagonal solves.

/// Trapezoidal rule over uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * (values[0] + values[values.len() - 1]) + inner)
}

/// Cumulative trapezoidal integral; output has the same length as the input
/// and starts at zero.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for pair in values.windows(2) {
        acc += 0.5 * h * (pair[0] + pair[1]);
        out.push(acc);
    }
    out
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
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
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    // Pre-split into fixed panels so localized or odd-symmetric integrands
    // cannot fool the first subdivision into an early exit.
    const PANELS: usize = 32;
    let step = (b - a) / PANELS as f64;
    let mut total = 0.0;
    for p in 0..PANELS {
        let pa = a + p as f64 * step;
        let pb = pa + step;
        let m = 0.5 * (pa + pb);
        let (fa, fm, fb) = (f(pa), f(m), f(pb));
        let whole = simpson(fa, fm, fb, pa, pb);
        total += recurse(f, pa, pb, fa, fm, fb, whole, tol / PANELS as f64, 44);
    }
    total
}

/// Fourth-order central first derivative with step `h`.
pub fn central4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

/// Fourth-order central second derivative with step `h`.
pub fn second4(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-(f(x + 2.0 * h) + f(x - 2.0 * h)) + 16.0 * (f(x + h) + f(x - h)) - 30.0 * f(x))
        / (12.0 * h * h)
}

/// Solves a tridiagonal system in place (Thomas algorithm, no pivoting).
/// `lower[i]` couples row i to i-1 (lower[0] unused), `upper[i]` couples
/// row i to i+1 (last entry unused). Requires a diagonally dominant system.
pub fn thomas_solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    debug_assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    rhs[0] /= denom;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / denom;
        denom = diag[i] - lower[i] * c[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Solves (T - shift I) x = rhs for a symmetric tridiagonal T given by
/// `diag` and `off` (off[i] couples i and i+1), with partial pivoting so
/// near-singular shifts (inverse iteration) stay stable.
pub fn tridiag_shifted_solve(diag: &[f64], off: &[f64], shift: f64, rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    debug_assert!(off.len() + 1 == n);
    // Band storage after elimination: row i holds columns (i, i+1, i+2)
    // in (b[i], c[i], d[i]); a[i] is the original coupling of row i to i-1.
    let a: Vec<f64> = (0..n).map(|i| if i > 0 { off[i - 1] } else { 0.0 }).collect();
    let mut b: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let mut c: Vec<f64> = (0..n).map(|i| if i + 1 < n { off[i] } else { 0.0 }).collect();
    let mut d = vec![0.0; n];
    let mut x: Vec<f64> = rhs.to_vec();
    for i in 0..n - 1 {
        if a[i + 1].abs() <= b[i].abs() {
            let piv = if b[i] == 0.0 { f64::MIN_POSITIVE } else { b[i] };
            let m = a[i + 1] / piv;
            b[i + 1] -= m * c[i];
            c[i + 1] -= m * d[i];
            x[i + 1] -= m * x[i];
        } else {
            // swap rows i and i+1, then eliminate
            let m = b[i] / a[i + 1];
            let (bi1, ci1) = (b[i + 1], c[i + 1]);
            b[i] = a[i + 1];
            let old_ci = c[i];
            let old_di = d[i];
            c[i] = bi1;
            d[i] = ci1;
            b[i + 1] = old_ci - m * bi1;
            c[i + 1] = old_di - m * ci1;
            d[i + 1] = 0.0;
            let xi = x[i];
            x[i] = x[i + 1];
            x[i + 1] = xi - m * x[i];
        }
    }
    for i in (0..n).rev() {
        let mut acc = x[i];
        if i + 1 < n {
            acc -= c[i] * x[i + 1];
        }
        if i + 2 < n {
            acc -= d[i] * x[i + 2];
        }
        let piv = if b[i] == 0.0 { f64::MIN_POSITIVE } else { b[i] };
        x[i] = acc / piv;
    }
    x
}

/// Piecewise-linear interpolation of uniformly sampled data.
/// `x0` is the abscissa of `values[0]`, `h` the spacing. Clamps outside.
pub fn lerp_uniform(values: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = values.len();
    let s = (x - x0) / h;
    if s <= 0.0 {
        return values[0];
    }
    if s >= (n - 1) as f64 {
        return values[n - 1];
    }
    let i = s.floor() as usize;
    let frac = s - i as f64;
    values[i] * (1.0 - frac) + values[i + 1] * frac
}

/// A scalar field of (x, t) with derivative access. Default derivatives are
/// fourth-order central differences with the field's own step sizes.
pub trait Field2: Sync {
    fn eval(&self, x: f64, t: f64) -> f64;
    fn x_step(&self) -> f64 {
        1e-4
    }
    fn t_step(&self) -> f64 {
        1e-4
    }
    fn dx(&self, x: f64, t: f64) -> f64 {
        central4(|u| self.eval(u, t), x, self.x_step())
    }
    fn dt(&self, x: f64, t: f64) -> f64 {
        central4(|u| self.eval(x, u), t, self.t_step())
    }
    fn dxx(&self, x: f64, t: f64) -> f64 {
        second4(|u| self.eval(u, t), x, self.x_step())
    }
}

/// Closure-backed [`Field2`].
pub struct FnField<F: Fn(f64, f64) -> f64 + Sync> {
    f: F,
    x_step: f64,
    t_step: f64,
}

impl<F: Fn(f64, f64) -> f64 + Sync> FnField<F> {
    pub fn new(f: F, x_step: f64, t_step: f64) -> Self {
        Self { f, x_step, t_step }
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> Field2 for FnField<F> {
    fn eval(&self, x: f64, t: f64) -> f64 {
        (self.f)(x, t)
    }
    fn x_step(&self) -> f64 {
        self.x_step
    }
    fn t_step(&self) -> f64 {
        self.t_step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_line_exactly() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64 * 0.01).collect();
        let vals: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&vals, 0.01) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn simpson_gaussian_mass() {
        let f = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let m = adaptive_simpson(&f, -10.0, 10.0, 1e-12);
        assert!((m - 1.0).abs() < 1e-11, "mass {m}");
    }

    #[test]
    fn central4_matches_cos() {
        let d = central4(|x: f64| x.sin(), 0.7, 1e-3);
        assert!((d - 0.7f64.cos()).abs() < 1e-11);
    }

    #[test]
    fn thomas_solves_small_system() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] -> x = [1, 1, 1]
        let lower = [0.0, -1.0, -1.0];
        let diag = [2.0, 2.0, 2.0];
        let upper = [-1.0, -1.0, 0.0];
        let mut rhs = [1.0, 0.0, 1.0];
        thomas_solve(&lower, &diag, &upper, &mut rhs);
        for v in rhs {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn shifted_solve_handles_near_singular_shift() {
        // T = diag(1,2,3) tridiagonal with small couplings; shift close to 2.
        let diag = [1.0, 2.0, 3.0];
        let off = [0.1, 0.1];
        let rhs = [1.0, 1.0, 1.0];
        let x = tridiag_shifted_solve(&diag, &off, 2.000001, &rhs);
        // residual check: (T - s) x = rhs
        let s = 2.000001;
        let r0 = (diag[0] - s) * x[0] + off[0] * x[1] - rhs[0];
        let r1 = off[0] * x[0] + (diag[1] - s) * x[1] + off[1] * x[2] - rhs[1];
        let r2 = off[1] * x[1] + (diag[2] - s) * x[2] - rhs[2];
        let scale = x.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        assert!(r0.abs() / scale < 1e-9 && r1.abs() / scale < 1e-9 && r2.abs() / scale < 1e-9);
    }

    #[test]
    fn lerp_endpoints_and_middle() {
        let vals = [0.0, 1.0, 4.0];
        assert_eq!(lerp_uniform(&vals, 0.0, 1.0, -3.0), 0.0);
        assert_eq!(lerp_uniform(&vals, 0.0, 1.0, 5.0), 4.0);
        assert!((lerp_uniform(&vals, 0.0, 1.0, 1.5) - 2.5).abs() < 1e-14);
    }
}
