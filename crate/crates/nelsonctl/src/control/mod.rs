//! Phase and controlling-potential synthesis.
//!
//! Given a density/drift pair (rho, v) solving a Fokker-Planck equation with
//! constant diffusion D = hbar/2m, the phase
//!
//! ```text
//! S = m W - (hbar/2) ln(rho~) - theta(t),      dW/dx = v
//! ```
//!
//! and the controlling potential
//!
//! ```text
//! V_c = (hbar^2/4m) dxx ln rho~
//!     + (hbar/2) (dt ln rho~ + v dx ln rho~)
//!     - m v^2 / 2 - m dt W + dtheta/dt
//! ```
//!
//! make psi = sqrt(rho) exp(iS/hbar) a Schroedinger solution in V_c. The
//! gauge theta(t) is free; each library flow carries its canonical choice.

mod flows;
mod schedule;
mod switch;

pub use flows::{
    decay_potential, CoherentFlow, DecayFlow, ExcitedRelaxFlow, GaussianFlow, OuRelaxFlow,
    SqueezeFlow, StationaryFlow,
};
pub use schedule::{
    gaussian_schedule, squeeze_schedule, ControlSample, FnGauge, FnTimeFunction, Gauge,
    PhaseCoefficients, PotentialCoefficients, SqueezeSpec, TimeFunction,
};
pub use switch::{coherent_transition_potential, smooth_switch, CoherentTransition, SmoothSwitch};

use crate::error::{Error, Result};
use crate::numeric::{central4, second4, Field2};

/// A density/drift pair with its gauge and adimensionalizer. Log-density
/// derivatives default to fourth-order central differences with steps of
/// 1e-4 of the natural scales; library flows override them analytically.
pub trait FlowPair: Sync {
    fn mass(&self) -> f64;
    fn hbar(&self) -> f64;
    /// Multiplicative length constant making rho~ = rho_scale * rho
    /// adimensional inside logarithms.
    fn rho_scale(&self) -> f64;
    fn x_scale(&self) -> f64 {
        1.0
    }
    fn t_scale(&self) -> f64 {
        1.0
    }

    fn rho(&self, x: f64, t: f64) -> f64;
    fn drift(&self, x: f64, t: f64) -> f64;
    /// Drift potential W with dW/dx = drift.
    fn w(&self, x: f64, t: f64) -> f64;
    /// dW/dt; zero for time-independent drifts.
    fn w_t(&self, _x: f64, _t: f64) -> f64 {
        0.0
    }
    fn theta(&self, t: f64) -> f64;
    fn theta_dot(&self, t: f64) -> f64;

    fn diffusion(&self) -> f64 {
        self.hbar() / (2.0 * self.mass())
    }

    fn ln_rho_x(&self, x: f64, t: f64) -> f64 {
        central4(|u| self.rho(u, t).ln(), x, 1e-4 * self.x_scale())
    }

    fn ln_rho_xx(&self, x: f64, t: f64) -> f64 {
        second4(|u| self.rho(u, t).ln(), x, 1e-4 * self.x_scale())
    }

    fn ln_rho_t(&self, x: f64, t: f64) -> f64 {
        central4(|u| self.rho(x, u).ln(), t, 1e-4 * self.t_scale())
    }
}

/// Phase S(x, t) of the flow; requires rho > 0 at the point.
pub fn synthesize_phase(flow: &dyn FlowPair, x: f64, t: f64) -> Result<f64> {
    let rho = flow.rho(x, t);
    if !(rho > 0.0) {
        return Err(Error::domain(format!(
            "phase undefined where the density vanishes (x={x}, t={t})"
        )));
    }
    Ok(flow.mass() * flow.w(x, t)
        - 0.5 * flow.hbar() * (flow.rho_scale() * rho).ln()
        - flow.theta(t))
}

/// Controlling potential V_c(x, t) of the flow.
pub fn synthesize_potential(flow: &dyn FlowPair, x: f64, t: f64) -> Result<f64> {
    let rho = flow.rho(x, t);
    if !(rho > 0.0) {
        return Err(Error::Singularity { x, node: x });
    }
    let m = flow.mass();
    let hbar = flow.hbar();
    let v = flow.drift(x, t);
    let lx = flow.ln_rho_x(x, t);
    let lxx = flow.ln_rho_xx(x, t);
    let lt = flow.ln_rho_t(x, t);
    Ok(hbar * hbar / (4.0 * m) * lxx + 0.5 * hbar * (lt + v * lx) - 0.5 * m * v * v
        - m * flow.w_t(x, t)
        + flow.theta_dot(t))
}

/// Max absolute residual of the Hamilton-Jacobi-Madelung identity
///
/// ```text
/// dt S + (dx S)^2 / 2m + V - 2 m D^2 (dxx R) / R
/// ```
///
/// over the sample grid; a vanishing residual certifies that (R, S, V)
/// defines a genuine Schroedinger evolution.
pub fn madelung_residual(
    r_field: &dyn Field2,
    s_field: &dyn Field2,
    v_field: &dyn Field2,
    mass: f64,
    hbar: f64,
    xs: &[f64],
    ts: &[f64],
) -> f64 {
    let d = hbar / (2.0 * mass);
    let mut worst = 0.0f64;
    for &t in ts {
        for &x in xs {
            let st = s_field.dt(x, t);
            let sx = s_field.dx(x, t);
            let rxx = r_field.dxx(x, t);
            let r = r_field.eval(x, t);
            let residual = st + sx * sx / (2.0 * mass) + v_field.eval(x, t)
                - 2.0 * mass * d * d * rxx / r;
            worst = worst.max(residual.abs());
        }
    }
    worst
}

/// Madelung residual of a flow against a potential, using value-only fields
/// (all derivatives by finite differences).
pub fn flow_madelung_residual(
    flow: &dyn FlowPair,
    potential: &dyn Fn(f64, f64) -> f64,
    xs: &[f64],
    ts: &[f64],
) -> Result<f64> {
    let xstep = 1e-4 * flow.x_scale();
    let tstep = 1e-4 * flow.t_scale();
    struct Val<'a> {
        f: Box<dyn Fn(f64, f64) -> f64 + Sync + 'a>,
        xs: f64,
        ts: f64,
    }
    impl Field2 for Val<'_> {
        fn eval(&self, x: f64, t: f64) -> f64 {
            (self.f)(x, t)
        }
        fn x_step(&self) -> f64 {
            self.xs
        }
        fn t_step(&self) -> f64 {
            self.ts
        }
    }
    // probe every sample point first so domain errors surface as errors
    for &t in ts {
        for &x in xs {
            synthesize_phase(flow, x, t)?;
        }
    }
    let r = Val {
        f: Box::new(|x, t| flow.rho(x, t).sqrt()),
        xs: xstep,
        ts: tstep,
    };
    let s = Val {
        f: Box::new(|x, t| synthesize_phase(flow, x, t).unwrap_or(f64::NAN)),
        xs: xstep,
        ts: tstep,
    };
    let v = Val {
        f: Box::new(|x, t| potential(x, t)),
        xs: xstep,
        ts: tstep,
    };
    Ok(madelung_residual(
        &r,
        &s,
        &v,
        flow.mass(),
        flow.hbar(),
        xs,
        ts,
    ))
}

/// Wraps a flow with an extra gauge term: theta -> theta + delta, which
/// shifts S by -delta(t) and V_c by delta'(t), pointwise.
pub struct GaugeShift<'a> {
    pub inner: &'a dyn FlowPair,
    pub delta: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
    pub delta_dot: Box<dyn Fn(f64) -> f64 + Sync + 'a>,
}

impl FlowPair for GaugeShift<'_> {
    fn mass(&self) -> f64 {
        self.inner.mass()
    }
    fn hbar(&self) -> f64 {
        self.inner.hbar()
    }
    fn rho_scale(&self) -> f64 {
        self.inner.rho_scale()
    }
    fn x_scale(&self) -> f64 {
        self.inner.x_scale()
    }
    fn t_scale(&self) -> f64 {
        self.inner.t_scale()
    }
    fn rho(&self, x: f64, t: f64) -> f64 {
        self.inner.rho(x, t)
    }
    fn drift(&self, x: f64, t: f64) -> f64 {
        self.inner.drift(x, t)
    }
    fn w(&self, x: f64, t: f64) -> f64 {
        self.inner.w(x, t)
    }
    fn w_t(&self, x: f64, t: f64) -> f64 {
        self.inner.w_t(x, t)
    }
    fn theta(&self, t: f64) -> f64 {
        self.inner.theta(t) + (self.delta)(t)
    }
    fn theta_dot(&self, t: f64) -> f64 {
        self.inner.theta_dot(t) + (self.delta_dot)(t)
    }
    fn ln_rho_x(&self, x: f64, t: f64) -> f64 {
        self.inner.ln_rho_x(x, t)
    }
    fn ln_rho_xx(&self, x: f64, t: f64) -> f64 {
        self.inner.ln_rho_xx(x, t)
    }
    fn ln_rho_t(&self, x: f64, t: f64) -> f64 {
        self.inner.ln_rho_t(x, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::OscillatorParams;

    fn unit() -> OscillatorParams {
        OscillatorParams::unit_width()
    }

    #[test]
    fn stationary_round_trip_recovers_oscillator_potential() {
        // analytic derivatives: sup error < 1e-8 on [-5 sigma0, 5 sigma0]
        let p = unit();
        for n in [0u32, 1] {
            let flow = StationaryFlow::new(n, p).unwrap();
            let mut worst = 0.0f64;
            for i in 0..400 {
                let x = -5.0 + 10.0 * (i as f64 + 0.5) / 400.0;
                if flow.state().nodes().iter().any(|&nd| (x - nd).abs() < 1e-3) {
                    continue;
                }
                let v = synthesize_potential(&flow, x, 0.7).unwrap();
                let want = 0.5 * p.mass * p.omega * p.omega * x * x;
                worst = worst.max((v - want).abs());
            }
            assert!(worst < 1e-8, "n={n}: sup {worst}");
        }
    }

    #[test]
    fn stationary_phase_is_minus_energy_time() {
        let p = unit();
        for n in [0u32, 1] {
            let flow = StationaryFlow::new(n, p).unwrap();
            let e_n = p.energy(n);
            for (x, t) in [(0.4, 0.0), (1.3, 1.5), (-2.0, 3.0)] {
                let s = synthesize_phase(&flow, x, t).unwrap();
                assert!((s + e_n * t).abs() < 1e-10, "n={n} x={x} t={t}: {s}");
            }
        }
    }

    #[test]
    fn phase_rejects_vanishing_density() {
        let p = unit();
        let flow = StationaryFlow::new(1, p).unwrap();
        assert!(synthesize_phase(&flow, 0.0, 0.0).is_err());
        assert!(synthesize_potential(&flow, 0.0, 0.0).is_err());
    }

    #[test]
    fn gauge_covariance_shifts_exactly() {
        let p = unit();
        let flow = OuRelaxFlow::new(p, 1.2);
        let delta = |t: f64| 0.3 * t * t - 0.7 * t;
        let delta_dot = |t: f64| 0.6 * t - 0.7;
        let shifted = GaugeShift {
            inner: &flow,
            delta: Box::new(delta),
            delta_dot: Box::new(delta_dot),
        };
        for (x, t) in [(0.5, 0.4), (-1.0, 1.1), (2.0, 2.7)] {
            let s0 = synthesize_phase(&flow, x, t).unwrap();
            let s1 = synthesize_phase(&shifted, x, t).unwrap();
            assert!((s1 - (s0 - delta(t))).abs() < 1e-12 * s0.abs().max(1.0));
            let v0 = synthesize_potential(&flow, x, t).unwrap();
            let v1 = synthesize_potential(&shifted, x, t).unwrap();
            assert!((v1 - (v0 + delta_dot(t))).abs() < 1e-12 * v0.abs().max(1.0));
        }
    }

    #[test]
    fn madelung_stationary_exact() {
        // stationary ground state with the oscillator potential: residual ~ 0
        let p = unit();
        let flow = StationaryFlow::new(0, p).unwrap();
        let xs: Vec<f64> = (0..21).map(|i| -3.0 + 0.3 * i as f64).collect();
        let ts: Vec<f64> = (0..5).map(|i| 0.2 + 0.5 * i as f64).collect();
        let res = flow_madelung_residual(
            &flow,
            &|x: f64, _t: f64| 0.5 * p.mass * p.omega * p.omega * x * x,
            &xs,
            &ts,
        )
        .unwrap();
        assert!(res < 1e-4, "residual {res}");
    }
}
