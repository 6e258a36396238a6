//! Forward velocity fields driving the Fokker-Planck and SDE machinery.

use std::sync::Arc;

use crate::numeric::central4;
use crate::states::StationaryState;

/// A forward velocity field v(x, t), possibly singular at isolated points.
pub trait DriftField: Send + Sync {
    fn eval(&self, x: f64, t: f64) -> f64;

    /// d/dx of the field; default is a fourth-order central difference.
    fn eval_dx(&self, x: f64, t: f64) -> f64 {
        central4(|u| self.eval(u, t), x, 1e-6 * self.x_scale())
    }

    /// Sorted singular points (impenetrable barriers).
    fn singularities(&self) -> &[f64] {
        &[]
    }

    fn is_time_dependent(&self) -> bool {
        false
    }

    /// Characteristic relaxation rate (omega for oscillator-type drifts),
    /// used by step-size policies.
    fn rate(&self) -> Option<f64> {
        None
    }

    /// Natural length scale (finite-difference steps, node guards).
    fn x_scale(&self) -> f64 {
        1.0
    }
}

/// Drift of a stationary oscillator state, v_n = 2 D phi_n'/phi_n.
#[derive(Debug, Clone)]
pub struct StationaryDrift {
    state: StationaryState,
}

impl StationaryDrift {
    pub fn new(state: StationaryState) -> Self {
        Self { state }
    }

    pub fn state(&self) -> &StationaryState {
        &self.state
    }
}

impl DriftField for StationaryDrift {
    fn eval(&self, x: f64, _t: f64) -> f64 {
        self.state.drift_unchecked(x)
    }

    fn eval_dx(&self, x: f64, _t: f64) -> f64 {
        self.state.drift_dx(x)
    }

    fn singularities(&self) -> &[f64] {
        self.state.nodes()
    }

    fn rate(&self) -> Option<f64> {
        Some(self.state.params().omega)
    }

    fn x_scale(&self) -> f64 {
        self.state.params().sigma0()
    }
}

/// v(x, t) = A(t) + B(t) x.
pub struct LinearDrift {
    offset: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    slope: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    time_dependent: bool,
    rate: Option<f64>,
    x_scale: f64,
}

impl LinearDrift {
    pub fn new(
        offset: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        slope: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        rate: Option<f64>,
    ) -> Self {
        Self {
            offset,
            slope,
            time_dependent: true,
            rate,
            x_scale: 1.0,
        }
    }

    /// Ornstein-Uhlenbeck drift -omega x.
    pub fn ou(omega: f64) -> Self {
        Self {
            offset: Arc::new(|_| 0.0),
            slope: Arc::new(move |_| -omega),
            time_dependent: false,
            rate: Some(omega),
            x_scale: 1.0,
        }
    }

    pub fn with_x_scale(mut self, s: f64) -> Self {
        self.x_scale = s;
        self
    }

    pub fn offset_at(&self, t: f64) -> f64 {
        (self.offset)(t)
    }

    pub fn slope_at(&self, t: f64) -> f64 {
        (self.slope)(t)
    }
}

impl DriftField for LinearDrift {
    fn eval(&self, x: f64, t: f64) -> f64 {
        (self.offset)(t) + (self.slope)(t) * x
    }

    fn eval_dx(&self, _x: f64, t: f64) -> f64 {
        (self.slope)(t)
    }

    fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    fn rate(&self) -> Option<f64> {
        self.rate
    }

    fn x_scale(&self) -> f64 {
        self.x_scale
    }
}

/// Closure-backed drift with explicit metadata.
pub struct FnDrift<F: Fn(f64, f64) -> f64 + Send + Sync> {
    f: F,
    singular: Vec<f64>,
    time_dependent: bool,
    rate: Option<f64>,
    x_scale: f64,
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> FnDrift<F> {
    pub fn new(f: F) -> Self {
        Self {
            f,
            singular: Vec::new(),
            time_dependent: false,
            rate: None,
            x_scale: 1.0,
        }
    }

    pub fn with_singularities(mut self, mut s: Vec<f64>) -> Self {
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.singular = s;
        self
    }

    pub fn time_dependent(mut self) -> Self {
        self.time_dependent = true;
        self
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = Some(rate);
        self
    }

    pub fn with_x_scale(mut self, s: f64) -> Self {
        self.x_scale = s;
        self
    }
}

impl<F: Fn(f64, f64) -> f64 + Send + Sync> DriftField for FnDrift<F> {
    fn eval(&self, x: f64, t: f64) -> f64 {
        (self.f)(x, t)
    }

    fn singularities(&self) -> &[f64] {
        &self.singular
    }

    fn is_time_dependent(&self) -> bool {
        self.time_dependent
    }

    fn rate(&self) -> Option<f64> {
        self.rate
    }

    fn x_scale(&self) -> f64 {
        self.x_scale
    }
}
