//! Harmonic-oscillator stationary states, coherent packets, and their
//! densities and forward drift fields.

use crate::error::{Error, Result};
use crate::specfun::{hermite, hermite_dx};

/// Level cap for eigenstate construction.
pub const EIGENSTATE_MAX_LEVEL: u32 = 20;

/// Node-proximity guard for drift evaluation, in units of sigma0.
pub const NODE_GUARD_REL: f64 = 1e-13;

/// Oscillator parameters. The derived quantities satisfy
/// `diffusion() == sigma0_sq() * omega` identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub mass: f64,
    pub hbar: f64,
    pub omega: f64,
}

impl OscillatorParams {
    pub fn new(mass: f64, hbar: f64, omega: f64) -> Result<Self> {
        if !(mass > 0.0 && hbar > 0.0 && omega > 0.0)
            || !(mass.is_finite() && hbar.is_finite() && omega.is_finite())
        {
            return Err(Error::domain(format!(
                "oscillator parameters must be positive and finite (m={mass}, hbar={hbar}, omega={omega})"
            )));
        }
        Ok(Self { mass, hbar, omega })
    }

    /// m = hbar = 1 convention.
    pub fn natural(omega: f64) -> Result<Self> {
        Self::new(1.0, 1.0, omega)
    }

    /// m = 1, hbar = 2, omega = 1: sigma0 = 1 and D = 1, the convention used
    /// by the control-schedule tables.
    pub fn unit_width() -> Self {
        Self {
            mass: 1.0,
            hbar: 2.0,
            omega: 1.0,
        }
    }

    /// sigma0^2 = hbar / (2 m omega)
    pub fn sigma0_sq(&self) -> f64 {
        self.hbar / (2.0 * self.mass * self.omega)
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0_sq().sqrt()
    }

    /// D = hbar / 2m
    pub fn diffusion(&self) -> f64 {
        self.hbar / (2.0 * self.mass)
    }

    /// E_n = hbar omega (n + 1/2)
    pub fn energy(&self, n: u32) -> f64 {
        self.hbar * self.omega * (n as f64 + 0.5)
    }
}

/// Stationary oscillator state: amplitude, density, nodes and forward drift.
#[derive(Debug, Clone)]
pub struct StationaryState {
    level: u32,
    params: OscillatorParams,
    nodes: Vec<f64>,
    /// log of the normalization prefactor 1/sqrt(sigma0 sqrt(2 pi) 2^n n!)
    log_prefactor: f64,
}

/// Builds the level-n eigenstate; nodes are located by bisection on the
/// Hermite factor to 1e-12 absolute.
pub fn oscillator_eigenstate(n: u32, params: OscillatorParams) -> Result<StationaryState> {
    StationaryState::new(n, params)
}

impl StationaryState {
    pub fn new(n: u32, params: OscillatorParams) -> Result<Self> {
        if n > EIGENSTATE_MAX_LEVEL {
            return Err(Error::domain(format!(
                "eigenstate level {n} above cap {EIGENSTATE_MAX_LEVEL}"
            )));
        }
        let sigma0 = params.sigma0();
        let mut ln_fact = 0.0;
        for k in 1..=n {
            ln_fact += (k as f64).ln();
        }
        let log_prefactor = -0.5
            * (sigma0.ln() + 0.5 * (2.0 * std::f64::consts::PI).ln() + n as f64 * 2f64.ln()
                + ln_fact);
        let nodes = hermite_nodes(n)?
            .into_iter()
            .map(|xi| xi * sigma0 * std::f64::consts::SQRT_2)
            .collect();
        Ok(Self {
            level: n,
            params,
            nodes,
            log_prefactor,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn params(&self) -> OscillatorParams {
        self.params
    }

    pub fn energy(&self) -> f64 {
        self.params.energy(self.level)
    }

    /// Sorted node positions (the n simple zeros of the amplitude).
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn xi(&self, x: f64) -> f64 {
        x / (self.params.sigma0() * std::f64::consts::SQRT_2)
    }

    /// Amplitude phi_n(x).
    pub fn amplitude(&self, x: f64) -> f64 {
        let xi = self.xi(x);
        let h = hermite(self.level, xi).expect("level within cap");
        let s0sq = self.params.sigma0_sq();
        (self.log_prefactor - x * x / (4.0 * s0sq)).exp() * h
    }

    /// Analytic phi_n'(x).
    pub fn amplitude_dx(&self, x: f64) -> f64 {
        let xi = self.xi(x);
        let h = hermite(self.level, xi).expect("level within cap");
        let hp = hermite_dx(self.level, xi).expect("level within cap");
        let s0sq = self.params.sigma0_sq();
        let scale = 1.0 / (self.params.sigma0() * std::f64::consts::SQRT_2);
        (self.log_prefactor - x * x / (4.0 * s0sq)).exp() * (hp * scale - h * x / (2.0 * s0sq))
    }

    /// Analytic phi_n''(x), via the eigenvalue identity
    /// phi'' = phi (xi^2 - (2n+1)) / (2 sigma0^2).
    pub fn amplitude_dxx(&self, x: f64) -> f64 {
        let xi = self.xi(x);
        self.amplitude(x) * (xi * xi - (2.0 * self.level as f64 + 1.0))
            / (2.0 * self.params.sigma0_sq())
    }

    /// Density rho_n = phi_n^2.
    pub fn density(&self, x: f64) -> f64 {
        let a = self.amplitude(x);
        a * a
    }

    /// d/dx ln rho_n = 2 phi'/phi (diverges at nodes).
    pub fn log_density_dx(&self, x: f64) -> f64 {
        2.0 * self.amplitude_dx(x) / self.amplitude(x)
    }

    /// d^2/dx^2 ln rho_n.
    pub fn log_density_dxx(&self, x: f64) -> f64 {
        let phi = self.amplitude(x);
        let dphi = self.amplitude_dx(x);
        let ddphi = self.amplitude_dxx(x);
        2.0 * (ddphi / phi - (dphi / phi) * (dphi / phi))
    }

    /// Absolute node guard radius.
    pub fn node_guard(&self) -> f64 {
        NODE_GUARD_REL * self.params.sigma0()
    }

    /// Forward drift v_n(x) = 2 D phi'/phi. Errors within the node guard,
    /// identifying the offending node.
    pub fn drift(&self, x: f64) -> Result<f64> {
        if let Some(&node) = self
            .nodes
            .iter()
            .find(|&&node| (x - node).abs() < self.node_guard())
        {
            return Err(Error::Singularity { x, node });
        }
        Ok(self.drift_unchecked(x))
    }

    /// Drift without the guard; +-inf exactly at a node.
    pub fn drift_unchecked(&self, x: f64) -> f64 {
        let d = self.params.diffusion();
        let xi = self.xi(x);
        let n = self.level;
        let s0sq = self.params.sigma0_sq();
        // 2D [ Hn'(xi) / (sigma0 sqrt2 Hn(xi)) - x / (2 sigma0^2) ]
        let h = hermite(n, xi).expect("level within cap");
        let hp = hermite_dx(n, xi).expect("level within cap");
        2.0 * d * (hp / (self.params.sigma0() * std::f64::consts::SQRT_2 * h) - x / (2.0 * s0sq))
    }

    /// Analytic d/dx of the drift.
    pub fn drift_dx(&self, x: f64) -> f64 {
        // v = 2D (phi'/phi); v' = 2D (phi''/phi - (phi'/phi)^2)
        let d = self.params.diffusion();
        let phi = self.amplitude(x);
        let r = self.amplitude_dx(x) / phi;
        let rr = self.amplitude_dxx(x) / phi;
        2.0 * d * (rr - r * r)
    }
}

/// Stationary forward drift field value (free-function form of
/// [`StationaryState::drift`]).
pub fn stationary_drift(state: &StationaryState, x: f64) -> Result<f64> {
    state.drift(x)
}

/// Zeros of H_n in the Hermite variable, sorted ascending.
fn hermite_nodes(n: u32) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    // All zeros lie inside |xi| < sqrt(4n + 2); roots come in +- pairs with
    // a zero at the origin for odd n.
    let bound = (4.0 * n as f64 + 2.0).sqrt();
    let f = |xi: f64| hermite(n, xi).expect("level within cap");
    let samples = 256 * n as usize;
    let lo = if n % 2 == 1 { 1e-12 } else { 0.0 };
    let mut positive = Vec::new();
    let step = (bound - lo) / samples as f64;
    let mut x_prev = lo;
    let mut f_prev = f(x_prev);
    for i in 1..=samples {
        let x_cur = lo + step * i as f64;
        let f_cur = f(x_cur);
        if f_prev == 0.0 {
            positive.push(x_prev);
        } else if f_prev * f_cur < 0.0 {
            let (mut a, mut b) = (x_prev, x_cur);
            let mut fa = f_prev;
            while b - a > 1e-13 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fa * fm <= 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            positive.push(0.5 * (a + b));
        }
        x_prev = x_cur;
        f_prev = f_cur;
    }
    if positive.len() != (n / 2) as usize {
        return Err(Error::Accuracy {
            context: format!("hermite node scan for n={n}"),
            partial: positive.len() as f64,
        });
    }
    let mut nodes: Vec<f64> = positive.iter().map(|&x| -x).collect();
    if n % 2 == 1 {
        nodes.push(0.0);
    }
    nodes.extend(positive.iter().copied());
    nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(nodes)
}

/// Coherent Gaussian packet snapshot: density rho_0(x - a cos wt) with the
/// matching linear drift field.
#[derive(Debug, Clone, Copy)]
pub struct GaussianPacket {
    pub displacement: f64,
    pub time: f64,
    pub params: OscillatorParams,
}

/// Coherent packet with initial displacement `a`, evaluated at time `t`.
pub fn coherent_state(a: f64, t: f64, params: OscillatorParams) -> GaussianPacket {
    GaussianPacket {
        displacement: a,
        time: t,
        params,
    }
}

impl GaussianPacket {
    pub fn mean(&self) -> f64 {
        self.displacement * (self.params.omega * self.time).cos()
    }

    pub fn variance(&self) -> f64 {
        self.params.sigma0_sq()
    }

    /// N(mean, sigma0^2) density.
    pub fn density(&self, x: f64) -> f64 {
        let v = self.variance();
        let dx = x - self.mean();
        (-dx * dx / (2.0 * v)).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
    }

    /// Forward drift a w (cos wt - sin wt) - w x.
    pub fn drift(&self, x: f64) -> f64 {
        let w = self.params.omega;
        let wt = w * self.time;
        self.displacement * w * (wt.cos() - wt.sin()) - w * x
    }

    /// Phase coefficients (curvature, tilt, offset) of
    /// S = (m/2)(curvature x^2 - 2 tilt x + offset).
    pub fn phase_coefficients(&self) -> (f64, f64, f64) {
        let w = self.params.omega;
        let wt = w * self.time;
        let a = self.displacement;
        let d = self.params.diffusion();
        let curvature = 0.0;
        let tilt = a * w * wt.sin();
        let offset = 0.5 * a * a * w * (2.0 * wt).sin() - 2.0 * d * w * self.time;
        (curvature, tilt, offset)
    }
}
