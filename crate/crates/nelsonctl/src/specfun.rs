//! Special functions backing the analytic formulas: physicists' Hermite
//! polynomials and Kummer's confluent hypergeometric function M(a, b; z).

use crate::error::{Error, Result};

/// Degree cap for [`hermite`]; keeps the recurrence well inside f64 range.
pub const HERMITE_MAX_DEGREE: u32 = 64;

/// Term cap for the Kummer series.
const KUMMER_MAX_TERMS: usize = 500;

/// Relative term-size stopping threshold for the Kummer series.
const KUMMER_TERM_CUTOFF: f64 = 1e-17;

/// Value of a series evaluation together with a conservative absolute
/// error estimate (rounding of the accumulated terms plus truncation).
#[derive(Debug, Clone, Copy)]
pub struct EvalResult {
    pub value: f64,
    pub est_abs_error: f64,
}

/// Physicists' Hermite polynomial H_n(x) by the three-term recurrence
/// H_0 = 1, H_1 = 2x, H_{n+1} = 2x H_n - 2n H_{n-1}.
pub fn hermite(n: u32, x: f64) -> Result<f64> {
    if n > HERMITE_MAX_DEGREE {
        return Err(Error::domain(format!(
            "hermite degree {n} above cap {HERMITE_MAX_DEGREE}"
        )));
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * x;
    for k in 1..n {
        let next = 2.0 * x * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// Derivative H_n'(x) = 2n H_{n-1}(x).
pub fn hermite_dx(n: u32, x: f64) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    Ok(2.0 * n as f64 * hermite(n - 1, x)?)
}

fn is_nonpositive_integer(v: f64) -> bool {
    v <= 0.0 && v == v.floor() && v.is_finite()
}

/// Kummer's confluent hypergeometric function
/// M(a, b; z) = sum_k (a)_k / (b)_k z^k / k!.
///
/// Plain power series with term-ratio stopping; when `a` is a non-positive
/// integer the series terminates and the value is an exact polynomial.
/// `b` must not be a non-positive integer.
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<EvalResult> {
    if is_nonpositive_integer(b) {
        return Err(Error::domain(format!(
            "kummer_m pole: b = {b} is a non-positive integer"
        )));
    }
    if !a.is_finite() || !b.is_finite() || !z.is_finite() {
        return Err(Error::domain("kummer_m requires finite arguments"));
    }
    let terminating = is_nonpositive_integer(a);
    let last_term = if terminating { (-a) as usize } else { usize::MAX };

    let mut sum = 1.0f64;
    let mut sum_abs = 1.0f64;
    let mut term = 1.0f64;
    for k in 0..KUMMER_MAX_TERMS {
        if terminating && k >= last_term {
            return Ok(EvalResult {
                value: sum,
                est_abs_error: f64::EPSILON * sum_abs,
            });
        }
        let kf = k as f64;
        term *= (a + kf) / (b + kf) * z / (kf + 1.0);
        sum += term;
        sum_abs += term.abs();
        if term.abs() < KUMMER_TERM_CUTOFF * sum.abs() {
            return Ok(EvalResult {
                value: sum,
                est_abs_error: f64::EPSILON * sum_abs + term.abs(),
            });
        }
    }
    Err(Error::Accuracy {
        context: format!("kummer_m({a}, {b}, {z}) series after {KUMMER_MAX_TERMS} terms"),
        partial: sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn hermite_low_orders() {
        assert_eq!(hermite(0, 3.7).unwrap(), 1.0);
        assert_eq!(hermite(1, 2.0).unwrap(), 4.0);
        assert_eq!(hermite(2, 1.0).unwrap(), 2.0); // 4x^2 - 2
        assert_eq!(hermite(3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hermite_reference_values() {
        // frozen from an independent high-precision evaluation
        assert!(close(hermite(5, 1.7).unwrap(), -127.72576, 1e-13));
        assert!(close(hermite(12, -2.2).unwrap(), -2749189.6657919345, 1e-12));
        assert!(close(hermite(20, 0.9).unwrap(), 867235623835.12299, 1e-11));
    }

    #[test]
    fn hermite_cap() {
        assert!(hermite(65, 0.1).is_err());
        assert!(hermite(64, 0.1).is_ok());
    }

    #[test]
    fn hermite_recurrence_consistency() {
        for n in 1..=20u32 {
            for i in 0..21 {
                let x = -5.0 + 0.5 * i as f64;
                let lhs = hermite(n + 1, x).unwrap();
                let rhs = 2.0 * x * hermite(n, x).unwrap()
                    - 2.0 * n as f64 * hermite(n - 1, x).unwrap();
                let scale = lhs.abs().max(rhs.abs()).max(1.0);
                assert!((lhs - rhs).abs() <= 1e-12 * scale, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn kummer_at_zero_is_one() {
        let r = kummer_m(-3.5, 0.5, 0.0).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn kummer_terminating_examples() {
        // M(-1, b; z) = 1 - z/b
        let r = kummer_m(-1.0, 1.5, 0.5).unwrap();
        assert!(close(r.value, 2.0 / 3.0, 1e-15));
        // frozen references
        assert!(close(kummer_m(-4.0, 1.5, 0.5).unwrap().value, 0.02962962962962963, 1e-13));
        assert!(close(kummer_m(-10.3, 0.5, 3.7).unwrap().value, 6.2986122525210099, 1e-12));
        assert!(close(kummer_m(-50.25, 1.5, 0.5).unwrap().value, -0.079064420097683703, 1e-10));
    }

    #[test]
    fn kummer_generic_references() {
        assert!(close(kummer_m(0.5, 1.5, -2.0).unwrap().value, 0.5981440066613041, 1e-13));
        assert!(close(kummer_m(2.5, 1.5, 1.0).unwrap().value, 4.5304697140984087, 1e-13));
        assert!(close(kummer_m(1.0, 1.0, 1.5).unwrap().value, 4.4816890703380648, 1e-13));
        assert!(close(kummer_m(3.0, 2.0, -7.5).unwrap().value, -0.0015209820179065424, 5e-9));
        assert!(close(kummer_m(-0.5, 0.5, 12.0).unwrap().value, -7898.7083055841819, 1e-10));
    }

    #[test]
    fn kummer_error_estimate_is_honest() {
        for (a, b, z, reference) in [
            (0.5, 1.5, -2.0, 0.5981440066613041),
            (2.5, 1.5, 1.0, 4.5304697140984087),
            (-50.25, 1.5, 0.5, -0.079064420097683703),
        ] {
            let r = kummer_m(a, b, z).unwrap();
            assert!((r.value - reference).abs() <= r.est_abs_error.max(4.0 * f64::EPSILON * reference.abs()));
        }
        // within the |z| <= 50 band used by the solvers the estimate is tight
        let r = kummer_m(-4.22, 1.5, 0.5).unwrap();
        assert!(r.est_abs_error < 1e-12 * r.value.abs().max(1.0));
    }

    #[test]
    fn kummer_pole_rejected() {
        assert!(kummer_m(1.0, 0.0, 0.5).is_err());
        assert!(kummer_m(1.0, -3.0, 0.5).is_err());
    }

    #[test]
    fn kummer_eigenvalue_condition_sign_change() {
        // The first excited eigenvalue condition crosses zero between 7.4 and 7.5.
        let f = |mu: f64| kummer_m(-(mu + 1.0) / 2.0, 1.5, 0.5).unwrap().value;
        assert!(f(7.4) * f(7.5) < 0.0);
    }

    #[test]
    fn kummer_derivative_identity() {
        // d/dz M(a,b;z) = (a/b) M(a+1, b+1; z), central differences at 1e-5
        let h = 1e-5;
        for (a, b) in [(0.7, 1.5), (-2.3, 0.5), (1.2, 2.5), (-6.0, 1.5)] {
            for z in [-3.0, -0.5, 0.4, 2.0, 5.0] {
                let num = (kummer_m(a, b, z + h).unwrap().value
                    - kummer_m(a, b, z - h).unwrap().value)
                    / (2.0 * h);
                let exact = a / b * kummer_m(a + 1.0, b + 1.0, z).unwrap().value;
                let scale = exact.abs().max(1e-30);
                assert!(
                    (num - exact).abs() / scale < 1e-6,
                    "a={a} b={b} z={z}: {num} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn kummer_terminating_matches_explicit_polynomials() {
        // a in {0,-1,-2,-3}: explicit polynomial evaluation
        let poly = |a: i32, b: f64, z: f64| -> f64 {
            match a {
                0 => 1.0,
                -1 => 1.0 - z / b,
                -2 => 1.0 - 2.0 * z / b + z * z / (b * (b + 1.0)),
                -3 => {
                    1.0 - 3.0 * z / b + 3.0 * z * z / (b * (b + 1.0))
                        - z * z * z / (b * (b + 1.0) * (b + 2.0))
                }
                _ => unreachable!(),
            }
        };
        for a in [0i32, -1, -2, -3] {
            for b in [0.5, 1.5, 2.25] {
                for z in [-1.5, 0.3, 2.0] {
                    let got = kummer_m(a as f64, b, z).unwrap().value;
                    let want = poly(a, b, z);
                    assert!(
                        (got - want).abs() <= 1e-14 * want.abs().max(1.0),
                        "a={a} b={b} z={z}"
                    );
                }
            }
        }
    }
}
