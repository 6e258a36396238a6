//! Smooth switch-off schedule and the coherent-transition potential.

use crate::error::{Error, Result};
use crate::states::OscillatorParams;

/// Exponent cap; binomial coefficients stay exact in f64 well past this.
pub const SWITCH_MAX_EXPONENT: u32 = 64;

/// F(t) = 1 - (1 - e^{-rate t})^N with rate = ln N / tau: a C^{N-1} ramp
/// from F(0) = 1 to 0, flat at the start (F'(0) = 0 needs N >= 2), with its
/// flex at t = tau. Held at one for t <= 0.
#[derive(Debug, Clone, Copy)]
pub struct SmoothSwitch {
    n: u32,
    tau: f64,
}

/// Constructs the switch (free-function form of [`SmoothSwitch::new`]).
pub fn smooth_switch(n: u32, tau: f64) -> Result<SmoothSwitch> {
    SmoothSwitch::new(n, tau)
}

impl SmoothSwitch {
    pub fn new(n: u32, tau: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain(format!(
                "switch exponent {n} < 2 would give a kick at t = 0"
            )));
        }
        if n > SWITCH_MAX_EXPONENT {
            return Err(Error::domain(format!(
                "switch exponent {n} above cap {SWITCH_MAX_EXPONENT}"
            )));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::domain("switch timescale must be positive"));
        }
        Ok(Self { n, tau })
    }

    pub fn exponent(&self) -> u32 {
        self.n
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Decay rate of the slowest mode: ln N / tau.
    pub fn rate(&self) -> f64 {
        (self.n as f64).ln() / self.tau
    }

    /// Mode rate k * rate.
    pub fn mode_rate(&self, k: u32) -> f64 {
        k as f64 * self.rate()
    }

    /// Expansion coefficient (-1)^{k+1} C(N, k) of e^{-k rate t}.
    pub fn coefficient(&self, k: u32) -> f64 {
        let mut c = 1.0f64;
        for j in 1..=k {
            c *= (self.n - k + j) as f64 / j as f64;
        }
        if k % 2 == 1 {
            c
        } else {
            -c
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        1.0 - (-(-self.rate() * t).exp_m1()).powi(self.n as i32)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let rate = self.rate();
        let e = (-rate * t).exp();
        -(self.n as f64) * (1.0 - e).powi(self.n as i32 - 1) * rate * e
    }
}

/// Controlled transition from a displaced coherent packet to the resting
/// ground packet: the drift offset a w (cos wt - sin wt) is ramped off by a
/// [`SmoothSwitch`], and the packet mean relaxes to zero.
#[derive(Debug, Clone, Copy)]
pub struct CoherentTransition {
    pub displacement: f64,
    pub params: OscillatorParams,
    pub switch: SmoothSwitch,
}

impl CoherentTransition {
    pub fn new(displacement: f64, params: OscillatorParams, switch: SmoothSwitch) -> Self {
        Self {
            displacement,
            params,
            switch,
        }
    }

    /// Resonant response amplitude of mode k:
    /// U_k(t) = sin wt + (2 w^2 sin wt - w_k^2 cos wt) / ((w_k - w)^2 + w^2).
    pub fn u_k(&self, k: u32, t: f64) -> f64 {
        let w = self.params.omega;
        let wk = self.switch.mode_rate(k);
        let denom = (wk - w) * (wk - w) + w * w;
        let wt = w * t;
        wt.sin() + (2.0 * w * w * wt.sin() - wk * wk * wt.cos()) / denom
    }

    /// W_k = 1 + (2 w^2 - w_k^2) / ((w_k - w)^2 + w^2) = sqrt(2) U_k(pi/4w).
    pub fn w_k(&self, k: u32) -> f64 {
        let w = self.params.omega;
        let wk = self.switch.mode_rate(k);
        let denom = (wk - w) * (wk - w) + w * w;
        1.0 + (2.0 * w * w - wk * wk) / denom
    }

    /// Drift offset A(t) = a w (cos wt - sin wt) F(t).
    pub fn drift_offset(&self, t: f64) -> f64 {
        let w = self.params.omega;
        let wt = w * t;
        self.displacement * w * (wt.cos() - wt.sin()) * self.switch.value(t)
    }

    /// dA/dt.
    pub fn drift_offset_dot(&self, t: f64) -> f64 {
        let w = self.params.omega;
        let wt = w * t;
        let a = self.displacement;
        a * w
            * ((-w * wt.sin() - w * wt.cos()) * self.switch.value(t)
                + (wt.cos() - wt.sin()) * self.switch.derivative(t))
    }

    /// Packet mean: a cos wt before the switch; for t > 0 the mode-by-mode
    /// response plus the homogeneous relaxation fixed by mean continuity.
    pub fn mean(&self, t: f64) -> f64 {
        let w = self.params.omega;
        let a = self.displacement;
        if t <= 0.0 {
            return a * (w * t).cos();
        }
        let wt = w * t;
        let mut total = 0.0;
        let mut homogeneous = a;
        for k in 1..=self.switch.exponent() {
            let ck = self.switch.coefficient(k);
            let wk = self.switch.mode_rate(k);
            let denom = (wk - w) * (wk - w) + w * w;
            let p = a * w * (2.0 * w - wk) / denom;
            let q = a * w * wk / denom;
            total += ck * (-wk * t).exp() * (p * wt.cos() + q * wt.sin());
            homogeneous -= ck * p; // p = a W_k / 2 at t = 0
        }
        total + homogeneous * (-w * t).exp()
    }

    /// d(mean)/dt via the first-order relaxation identity.
    pub fn mean_dot(&self, t: f64) -> f64 {
        self.drift_offset(t) - self.params.omega * self.mean(t)
    }

    /// Coefficient of -m x in the controlling potential: w^2 mean + mean''.
    ///
    /// The trailing 2 w e^{-wt} term is the homogeneous relaxation of the
    /// packet mean; it makes the coefficient vanish at t = 0 so the
    /// potential starts exactly harmonic.
    pub fn linear_coefficient(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let w = self.params.omega;
        let a = self.displacement;
        let mut sum = 0.0;
        for k in 1..=self.switch.exponent() {
            let ck = self.switch.coefficient(k);
            let wk = self.switch.mode_rate(k);
            sum += ck * (self.u_k(k, t) * wk * (-wk * t).exp() - self.w_k(k) * w * (-w * t).exp());
        }
        w * a * (sum + 2.0 * w * (-w * t).exp())
    }

    /// V_c(x, t) = m w^2 x^2 / 2 - m linear_coefficient(t) x.
    pub fn potential(&self, x: f64, t: f64) -> f64 {
        let m = self.params.mass;
        let w = self.params.omega;
        0.5 * m * w * w * x * x - m * self.linear_coefficient(t) * x
    }
}

/// Free-function form of [`CoherentTransition::potential`].
pub fn coherent_transition_potential(x: f64, t: f64, transition: &CoherentTransition) -> f64 {
    transition.potential(x, t)
}
