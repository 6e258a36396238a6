//! Closed-form transition densities and evolutions: the Ornstein-Uhlenbeck
//! kernel, the first-excited-state kernel with its two-sector structure,
//! the asymptotic reweighting of the excited density, and the decay mixture.

use crate::error::{Error, Result};
use crate::fpcore::TransitionKernel;
use crate::states::OscillatorParams;

const SQRT_TAU: f64 = 2.5066282746310002; // sqrt(2 pi)

/// Ground-state density rho_0 = N(0, sigma0^2).
pub fn ground_density(x: f64, params: &OscillatorParams) -> f64 {
    let s0sq = params.sigma0_sq();
    (-x * x / (2.0 * s0sq)).exp() / (s0sq.sqrt() * SQRT_TAU)
}

/// First-excited density rho_1 = x^2 e^{-x^2/2 sigma0^2} / (sigma0^3 sqrt(2 pi)).
pub fn excited_density(x: f64, params: &OscillatorParams) -> f64 {
    let s0sq = params.sigma0_sq();
    x * x * (-x * x / (2.0 * s0sq)).exp() / (s0sq * s0sq.sqrt() * SQRT_TAU)
}

/// Heaviside step with the half convention at zero.
pub fn theta_step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// Parameters of the Ornstein-Uhlenbeck transition density started from
/// (x0, t0): mean alpha(t) = x0 e^{-w(t-t0)} and variance
/// sigma^2(t) = sigma0^2 (1 - e^{-2w(t-t0)}).
#[derive(Debug, Clone, Copy)]
pub struct OuKernelParams {
    pub params: OscillatorParams,
    pub x0: f64,
    pub t0: f64,
}

impl OuKernelParams {
    pub fn new(params: OscillatorParams, x0: f64) -> Self {
        Self { params, x0, t0: 0.0 }
    }

    pub fn with_start(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn mean(&self, t: f64) -> f64 {
        self.x0 * (-self.params.omega * (t - self.t0)).exp()
    }

    /// Variance via expm1, stable for small elapsed times.
    pub fn variance(&self, t: f64) -> f64 {
        self.params.sigma0_sq() * (-(-2.0 * self.params.omega * (t - self.t0)).exp_m1())
    }
}

/// OU transition density p_0(x, t | x0, t0).
pub fn ou_kernel(x: f64, t: f64, p: &OuKernelParams) -> Result<f64> {
    if t <= p.t0 {
        return Err(Error::domain(format!(
            "ou_kernel needs t > t0 (delta limit at t0 = {})",
            p.t0
        )));
    }
    let var = p.variance(t);
    let dx = x - p.mean(t);
    Ok((-dx * dx / (2.0 * var)).exp() / (var.sqrt() * SQRT_TAU))
}

/// The OU kernel as a Chapman-Kolmogorov kernel in its y slot.
pub struct OuKernel {
    pub params: OscillatorParams,
    pub t0: f64,
}

impl TransitionKernel for OuKernel {
    fn eval(&self, x: f64, t: f64, y: f64) -> f64 {
        let p = OuKernelParams {
            params: self.params,
            x0: y,
            t0: self.t0,
        };
        ou_kernel(x, t, &p).unwrap_or(0.0)
    }
    fn start_time(&self) -> f64 {
        self.t0
    }
}

/// Parameters of the first-excited transition density. The start point must
/// sit off the node (x0 != 0); mass never crosses the node.
#[derive(Debug, Clone, Copy)]
pub struct ExcitedKernelParams {
    pub params: OscillatorParams,
    pub x0: f64,
    pub t0: f64,
}

impl ExcitedKernelParams {
    pub fn new(params: OscillatorParams, x0: f64) -> Result<Self> {
        if x0 == 0.0 {
            return Err(Error::domain(
                "excited kernel start x0 = 0 sits on the node",
            ));
        }
        Ok(Self { params, x0, t0: 0.0 })
    }

    pub fn with_start(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    fn ou(&self) -> OuKernelParams {
        OuKernelParams {
            params: self.params,
            x0: self.x0,
            t0: self.t0,
        }
    }
}

/// First-excited transition density
/// p_1 = Theta(x x0) (x/alpha) [e^{-(x-alpha)^2/2s} - e^{-(x+alpha)^2/2s}] / sqrt(2 pi s).
///
/// Evaluated as (x/alpha) e^{-(x-alpha)^2/2s} (-expm1(-2 x alpha / s)), which
/// is stable both for nearly-equal Gaussians (small alpha) and for small s.
pub fn excited_kernel(x: f64, t: f64, p: &ExcitedKernelParams) -> Result<f64> {
    if p.x0 == 0.0 {
        return Err(Error::domain("excited kernel start x0 = 0 sits on the node"));
    }
    if t <= p.t0 {
        return Err(Error::domain(format!(
            "excited_kernel needs t > t0 (delta limit at t0 = {})",
            p.t0
        )));
    }
    if x * p.x0 <= 0.0 {
        return Ok(0.0); // opposite semiaxis (and the node itself)
    }
    let ou = p.ou();
    let alpha = ou.mean(t);
    let s = ou.variance(t);
    let u = x * alpha / s;
    let gauss = (-(x - alpha) * (x - alpha) / (2.0 * s)).exp() / (s.sqrt() * SQRT_TAU);
    let factor = -(-2.0 * u).exp_m1();
    if factor == 0.0 {
        // alpha underflowed: odd-difference limit (x/alpha) factor -> 2x^2/s
        return Ok(2.0 * x * x / s * gauss);
    }
    Ok(x / alpha * gauss * factor)
}

/// The excited kernel as a Chapman-Kolmogorov kernel in its y slot.
pub struct ExcitedKernel {
    pub params: OscillatorParams,
    pub t0: f64,
}

impl TransitionKernel for ExcitedKernel {
    fn eval(&self, x: f64, t: f64, y: f64) -> f64 {
        if y == 0.0 {
            return 0.0;
        }
        let p = ExcitedKernelParams {
            params: self.params,
            x0: y,
            t0: self.t0,
        };
        excited_kernel(x, t, &p).unwrap_or(0.0)
    }
    fn start_time(&self) -> f64 {
        self.t0
    }
}

/// Asymptotic semiaxis reweighting Gamma(eps; x) rho_1(x) with
/// Gamma(eps; x) = eps Theta(x) + (2 - eps) Theta(-x); eps is twice the
/// initial mass on the right semiaxis.
pub fn excited_asymptote(eps: f64, x: f64, params: &OscillatorParams) -> Result<f64> {
    if !(0.0..=2.0).contains(&eps) {
        return Err(Error::domain(format!("mass fraction eps = {eps} outside [0, 2]")));
    }
    let gamma = eps * theta_step(x) + (2.0 - eps) * theta_step(-x);
    Ok(gamma * excited_density(x, params))
}

/// Mixture weights of the decay evolution: beta^2 = 1 - e^{-2wt},
/// gamma^2 = e^{-2wt}, b^2 = beta^2/gamma^2.
#[derive(Debug, Clone, Copy)]
pub struct MixtureWeights {
    pub omega: f64,
}

impl MixtureWeights {
    pub fn beta_sq(&self, t: f64) -> f64 {
        -(-2.0 * self.omega * t).exp_m1()
    }

    pub fn gamma_sq(&self, t: f64) -> f64 {
        (-2.0 * self.omega * t).exp()
    }

    pub fn b_sq(&self, t: f64) -> f64 {
        (2.0 * self.omega * t).exp_m1()
    }
}

/// Decay evolution of the first excited density under the ground drift:
/// rho(x, t) = beta^2(t) rho_0(x) + gamma^2(t) rho_1(x).
pub fn decay_mixture(x: f64, t: f64, params: &OscillatorParams) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::domain("decay mixture defined for t >= 0"));
    }
    let w = MixtureWeights { omega: params.omega };
    Ok(w.beta_sq(t) * ground_density(x, params) + w.gamma_sq(t) * excited_density(x, params))
}
