//! Sturm-Liouville eigenproblem for the self-adjoint reduction of the
//! Fokker-Planck operator.
//!
//! Two solvers are provided. The finite-difference solver discretizes the
//! generator in detailed-balance (flux) form on cell centers, so the zero
//! eigenvalue and its eigenfunction sqrt(h) are exact at the discrete level;
//! explicit-potential problems fall back to the plain symmetric tridiagonal
//! stencil. The shooting solver evaluates the exact confluent-hypergeometric
//! solutions of the adimensional oscillator eigenproblem and bisects their
//! boundary determinant in the reduced eigenvalue mu.

use std::sync::Arc;

use crate::drift::DriftField;
use crate::error::{Error, Result};
use crate::fpcore::{Grid1D, GridDensity};
use crate::numeric::{lerp_uniform, tridiag_shifted_solve};
use crate::specfun::kummer_m;

/// Boundary condition kinds for the reduced eigenfunction G.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Natural zero-flux condition (Robin in G); degenerates to Dirichlet
    /// where the drift blows up.
    ZeroFlux,
    /// G = 0 at the endpoint (node-bounded sectors).
    Dirichlet,
}

enum SlSource {
    Drift { field: Arc<dyn DriftField> },
    Potential(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// Self-adjoint eigenproblem -(D G')' + q G = lambda G on an interval.
pub struct SlProblem {
    interval: (f64, f64),
    d_coeff: f64,
    bc: (BoundaryKind, BoundaryKind),
    source: SlSource,
}

/// Assembles the problem for a drift field on one sector: q = v^2/4D + v'/2,
/// with Dirichlet conditions at endpoints that sit on drift singularities
/// and zero-flux conditions elsewhere.
pub fn build_sl(drift: Arc<dyn DriftField>, d_coeff: f64, sector: (f64, f64)) -> Result<SlProblem> {
    SlProblem::from_drift(drift, d_coeff, sector)
}

impl SlProblem {
    pub fn from_drift(
        drift: Arc<dyn DriftField>,
        d_coeff: f64,
        sector: (f64, f64),
    ) -> Result<Self> {
        if !(d_coeff > 0.0) {
            return Err(Error::domain("diffusion coefficient must be positive"));
        }
        if !(sector.0.is_finite() && sector.1.is_finite() && sector.0 < sector.1) {
            return Err(Error::domain(format!(
                "sector ({}, {}) must be a finite interval (truncate first)",
                sector.0, sector.1
            )));
        }
        let tol = 1e-9 * drift.x_scale();
        let is_node = |x: f64| drift.singularities().iter().any(|&s| (s - x).abs() <= tol);
        let bc = (
            if is_node(sector.0) {
                BoundaryKind::Dirichlet
            } else {
                BoundaryKind::ZeroFlux
            },
            if is_node(sector.1) {
                BoundaryKind::Dirichlet
            } else {
                BoundaryKind::ZeroFlux
            },
        );
        Ok(Self {
            interval: sector,
            d_coeff,
            bc,
            source: SlSource::Drift { field: drift },
        })
    }

    pub fn from_potential(
        q: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        d_coeff: f64,
        interval: (f64, f64),
        bc: (BoundaryKind, BoundaryKind),
    ) -> Result<Self> {
        if !(d_coeff > 0.0) {
            return Err(Error::domain("diffusion coefficient must be positive"));
        }
        if !(interval.0.is_finite() && interval.1.is_finite() && interval.0 < interval.1) {
            return Err(Error::domain("interval must be finite and ordered"));
        }
        Ok(Self {
            interval,
            d_coeff,
            bc,
            source: SlSource::Potential(q),
        })
    }

    pub fn interval(&self) -> (f64, f64) {
        self.interval
    }

    pub fn d_coeff(&self) -> f64 {
        self.d_coeff
    }

    pub fn bc(&self) -> (BoundaryKind, BoundaryKind) {
        self.bc
    }

    /// The potential-like coefficient q(x) = v^2/(4D) + v'/2 for drift
    /// problems (analytic v' when the drift provides it), or the explicit q.
    pub fn q(&self, x: f64) -> f64 {
        match &self.source {
            SlSource::Drift { field } => {
                let v = field.eval(x, 0.0);
                v * v / (4.0 * self.d_coeff) + 0.5 * field.eval_dx(x, 0.0)
            }
            SlSource::Potential(q) => q(x),
        }
    }

    fn drift(&self) -> Option<&Arc<dyn DriftField>> {
        match &self.source {
            SlSource::Drift { field } => Some(field),
            SlSource::Potential(_) => None,
        }
    }
}

/// Discrete eigensystem: eigenfunctions sampled on `points`, orthonormal
/// under the quadrature `weights`, signs fixed positive near the left end.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    points: Vec<f64>,
    weights: Vec<f64>,
    eigenvalues: Vec<f64>,
    modes: Vec<Vec<f64>>,
    sqrt_h: Option<Vec<f64>>,
    resolution_warning: bool,
}

impl EigenSystem {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn mode(&self, n: usize) -> &[f64] {
        &self.modes[n]
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Discrete sqrt of the invariant density (drift-built systems only).
    pub fn sqrt_h(&self) -> Option<&[f64]> {
        self.sqrt_h.as_deref()
    }

    /// True when eigenvalues moved by more than 0.5% under grid doubling.
    pub fn resolution_warning(&self) -> bool {
        self.resolution_warning
    }

    /// Number of sign changes of mode n (oscillation count).
    pub fn sign_changes(&self, n: usize) -> usize {
        let mode = &self.modes[n];
        let peak = mode.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let mut count = 0;
        let mut last = 0.0f64;
        for &v in mode {
            if v.abs() < 1e-7 * peak {
                continue; // skip near-zero samples
            }
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
        count
    }

    /// A vertex grid spanning the sample points.
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::new(
            self.points[0],
            self.points[self.points.len() - 1],
            self.points.len(),
        )
    }
}

/// Lowest-k eigenpairs of the discretized problem on `grid`.
pub fn solve_eigs_fd(problem: &SlProblem, grid: &Grid1D, k: usize) -> Result<EigenSystem> {
    if k == 0 || k > grid.len() / 4 {
        return Err(Error::domain(format!(
            "requested {k} modes exceeds a quarter of the {} grid points",
            grid.len()
        )));
    }
    let tol = grid.spacing();
    if (grid.lo() - problem.interval.0).abs() > tol || (grid.hi() - problem.interval.1).abs() > tol
    {
        return Err(Error::Grid(format!(
            "grid [{}, {}] does not span the problem interval [{}, {}]",
            grid.lo(),
            grid.hi(),
            problem.interval.0,
            problem.interval.1
        )));
    }
    let cells = grid.len() - 1;
    let mut sys = solve_resolution(problem, cells, k)?;
    let check = solve_eigenvalues_only(problem, 2 * cells, k);
    let scale = check
        .iter()
        .map(|v| v.abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    sys.resolution_warning = sys
        .eigenvalues
        .iter()
        .zip(check.iter())
        .any(|(&a, &b)| (a - b).abs() > 5e-3 * b.abs().max(1e-9 * scale));
    Ok(sys)
}

struct Tridiag {
    diag: Vec<f64>,
    off: Vec<f64>,
    points: Vec<f64>,
    weights: Vec<f64>,
    sqrt_h: Option<Vec<f64>>,
}

fn assemble(problem: &SlProblem, cells: usize) -> Tridiag {
    let (a, b) = problem.interval;
    let d = problem.d_coeff;
    match problem.drift() {
        Some(field) => {
            // Cell-centered detailed-balance chain; outermost faces carry no
            // flux, which realizes both zero-flux and node-Dirichlet walls.
            let m = cells;
            let h = (b - a) / m as f64;
            let points: Vec<f64> = (0..m).map(|j| a + (j as f64 + 0.5) * h).collect();
            let v: Vec<f64> = points.iter().map(|&x| field.eval(x, 0.0)).collect();
            let w: Vec<f64> = (0..m - 1)
                .map(|j| (v[j] + v[j + 1]) * h / (2.0 * d))
                .collect();
            let scale = d / (h * h);
            // s(w) = sqrt(B(w) B(-w)) = (w/2)/sinh(w/2)
            let s = |w: f64| {
                if w.abs() < 1e-8 {
                    1.0 - w * w / 24.0
                } else {
                    let half = 0.5 * w;
                    if half.abs() > 700.0 {
                        0.0
                    } else {
                        half / half.sinh()
                    }
                }
            };
            let bern = |w: f64| {
                if w.abs() < 1e-10 {
                    1.0 - 0.5 * w
                } else {
                    let em = w.exp_m1();
                    if em.is_infinite() {
                        0.0
                    } else {
                        w / em
                    }
                }
            };
            let off: Vec<f64> = w.iter().map(|&wj| -scale * s(wj)).collect();
            let mut diag = vec![0.0; m];
            for j in 0..m {
                let mut acc = 0.0;
                if j + 1 < m {
                    acc += bern(-w[j]);
                }
                if j > 0 {
                    acc += bern(w[j - 1]);
                }
                diag[j] = scale * acc;
            }
            // discrete invariant density from the same face ratios
            let mut log_h = vec![0.0; m];
            for j in 0..m - 1 {
                log_h[j + 1] = log_h[j] + w[j];
            }
            let peak = log_h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut hvals: Vec<f64> = log_h.iter().map(|&lh| (lh - peak).exp()).collect();
            let mass: f64 = hvals.iter().map(|&v| v * h).sum();
            for v in &mut hvals {
                *v /= mass;
            }
            let sqrt_h = hvals.iter().map(|&v| v.sqrt()).collect();
            Tridiag {
                diag,
                off,
                points,
                weights: vec![h; m],
                sqrt_h: Some(sqrt_h),
            }
        }
        None => {
            // plain vertex stencil for an explicit potential
            let n = cells + 1;
            let h = (b - a) / (n - 1) as f64;
            let scale = d / (h * h);
            let all: Vec<f64> = (0..n).map(|i| a + i as f64 * h).collect();
            let dirichlet_l = problem.bc.0 == BoundaryKind::Dirichlet;
            let dirichlet_r = problem.bc.1 == BoundaryKind::Dirichlet;
            let lo = usize::from(dirichlet_l);
            let hi = n - usize::from(dirichlet_r);
            let points: Vec<f64> = all[lo..hi].to_vec();
            let m = points.len();
            let diag: Vec<f64> = points.iter().map(|&x| 2.0 * scale + problem.q(x)).collect();
            let mut off = vec![-scale; m - 1];
            let mut weights = vec![h; m];
            // natural (Neumann-like) ends: mirrored ghost, half-weight cell
            if !dirichlet_l {
                weights[0] = 0.5 * h;
                off[0] = -std::f64::consts::SQRT_2 * scale;
            }
            if !dirichlet_r {
                weights[m - 1] = 0.5 * h;
                off[m - 2] = -std::f64::consts::SQRT_2 * scale;
            }
            Tridiag {
                diag,
                off,
                points,
                weights,
                sqrt_h: None,
            }
        }
    }
}

fn solve_resolution(problem: &SlProblem, cells: usize, k: usize) -> Result<EigenSystem> {
    let t = assemble(problem, cells);
    let eigenvalues = lowest_eigenvalues(&t.diag, &t.off, k);
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(k);
    for (j, &lambda) in eigenvalues.iter().enumerate() {
        let prev = if j > 0 && (eigenvalues[j - 1] - lambda).abs() < 1e-8 * lambda.abs().max(1.0) {
            raw.last()
        } else {
            None
        };
        let u = inverse_iteration(&t.diag, &t.off, lambda, prev);
        let mut g: Vec<f64> = u
            .iter()
            .zip(t.weights.iter())
            .map(|(&ui, &wi)| ui / wi.sqrt())
            .collect();
        let norm: f64 = g
            .iter()
            .zip(t.weights.iter())
            .map(|(&gi, &wi)| wi * gi * gi)
            .sum::<f64>()
            .sqrt();
        let peak = g.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let sign = g
            .iter()
            .find(|v| v.abs() > 1e-8 * peak)
            .map(|v| v.signum())
            .unwrap_or(1.0);
        for v in &mut g {
            *v *= sign / norm;
        }
        raw.push(u);
        modes.push(g);
    }
    Ok(EigenSystem {
        points: t.points,
        weights: t.weights,
        eigenvalues,
        modes,
        sqrt_h: t.sqrt_h,
        resolution_warning: false,
    })
}

fn solve_eigenvalues_only(problem: &SlProblem, cells: usize, k: usize) -> Vec<f64> {
    let t = assemble(problem, cells);
    lowest_eigenvalues(&t.diag, &t.off, k)
}

/// Number of eigenvalues strictly below x (Sturm sequence via LDL^T).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let n = diag.len();
    let pivmin =
        f64::MIN_POSITIVE.max(f64::EPSILON * diag.iter().map(|v| v.abs()).fold(0.0, f64::max));
    let mut count = 0;
    let mut d = 1.0f64;
    for i in 0..n {
        let off2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
        d = diag[i] - x - off2 / d;
        if d.abs() < pivmin {
            d = -pivmin;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn lowest_eigenvalues(diag: &[f64], off: &[f64], k: usize) -> Vec<f64> {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = (if i > 0 { off[i - 1].abs() } else { 0.0 })
            + (if i < n - 1 { off[i].abs() } else { 0.0 });
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..90 {
            let m = 0.5 * (a + b);
            if count_below(diag, off, m) > j {
                b = m;
            } else {
                a = m;
            }
            if b - a <= f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
                break;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

fn inverse_iteration(
    diag: &[f64],
    off: &[f64],
    lambda: f64,
    orthogonal_to: Option<&Vec<f64>>,
) -> Vec<f64> {
    let n = diag.len();
    let scale = diag.iter().map(|v| v.abs()).fold(1.0, f64::max);
    let shift = lambda + 1e-12 * scale;
    // deterministic pseudo-random start vector
    let mut state = 0x9e3779b97f4a7c15u64 ^ (n as u64);
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    for _ in 0..4 {
        if let Some(prev) = orthogonal_to {
            let dot: f64 = v.iter().zip(prev.iter()).map(|(a, b)| a * b).sum();
            let prev_norm: f64 = prev.iter().map(|a| a * a).sum();
            for (vi, pi) in v.iter_mut().zip(prev.iter()) {
                *vi -= dot / prev_norm * pi;
            }
        }
        let w = tridiag_shifted_solve(diag, off, shift, &v);
        let norm = w.iter().map(|a| a * a).sum::<f64>().sqrt();
        v = w.into_iter().map(|a| a / norm).collect();
    }
    v
}

/// Parity class of a shooting eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeClass {
    Even,
    Odd,
    /// bounded asymmetric sector: no parity decomposition
    Mixed,
    /// half-line sector solved by series termination
    Terminating,
}

#[derive(Debug, Clone, Copy)]
pub struct ShootingMode {
    pub mu: f64,
    pub class: ModeClass,
}

#[derive(Debug, Clone)]
pub struct ShootingSolution {
    pub modes: Vec<ShootingMode>,
    /// true when the scan window (0, 200] ran out before k roots were found
    pub window_exhausted: bool,
}

const SCAN_MAX: f64 = 200.0;
const SCAN_STEP: f64 = 0.25;
const BISECT_TOL: f64 = 1e-8;

/// Exact eigenvalues (adimensional mu = lambda/omega) of the level-n
/// eigenproblem on a node-bounded sector, via the confluent-hypergeometric
/// solution pair. Positions are in units of sigma0.
///
/// Bounded sectors use Dirichlet conditions at both ends, split into even
/// and odd classes when the sector is symmetric (only the odd class is
/// quoted for the inner-sector ladder of the second excited state; the even
/// condition follows from the even solution of the same pair). A half-line
/// sector with its node at the origin (first excited state) is solved
/// exactly by series termination. Other half-line sectors need the
/// finite-difference solver.
pub fn solve_eigs_shooting(level: u32, sector: (f64, f64), k: usize) -> Result<ShootingSolution> {
    if !(level == 1 || level == 2) {
        return Err(Error::domain(format!(
            "shooting solver covers levels 1 and 2, got {level}"
        )));
    }
    if k == 0 {
        return Err(Error::domain("requested zero eigenvalues"));
    }
    let (a, b) = sector;
    if a >= b {
        return Err(Error::domain("sector must be ordered"));
    }
    let even_fn = |mu: f64, x: f64| -> Result<f64> {
        Ok(kummer_m(-(mu + level as f64) / 2.0, 0.5, x * x / 2.0)?.value)
    };
    let odd_fn = |mu: f64, x: f64| -> Result<f64> {
        Ok(x * kummer_m(-(mu + level as f64 - 1.0) / 2.0, 1.5, x * x / 2.0)?.value)
    };

    let mut modes: Vec<ShootingMode> = Vec::new();
    let mut exhausted = false;
    if a.is_finite() && b.is_finite() {
        if (a + b).abs() <= 1e-12 * b.abs() {
            // symmetric sector: even and odd Dirichlet conditions at x = b
            let even_cond = |mu: f64| even_fn(mu, b);
            let odd_cond = |mu: f64| odd_fn(mu, b);
            let mut even = scan_roots(&even_cond, k)?;
            let mut odd = scan_roots(&odd_cond, k)?;
            exhausted = even.1 || odd.1;
            modes.extend(even.0.drain(..).map(|mu| ShootingMode {
                mu,
                class: ModeClass::Even,
            }));
            modes.extend(odd.0.drain(..).map(|mu| ShootingMode {
                mu,
                class: ModeClass::Odd,
            }));
        } else {
            // generic bounded sector: two-point Dirichlet determinant
            let cond = |mu: f64| -> Result<f64> {
                Ok(even_fn(mu, a)? * odd_fn(mu, b)? - even_fn(mu, b)? * odd_fn(mu, a)?)
            };
            let mut found = scan_roots(&cond, k)?;
            exhausted = found.1;
            modes.extend(found.0.drain(..).map(|mu| ShootingMode {
                mu,
                class: ModeClass::Mixed,
            }));
        }
    } else if level == 1 && ((a == 0.0 && b.is_infinite()) || (b == 0.0 && a.is_infinite())) {
        // node at the origin selects the odd solution; decay at infinity
        // requires the series to terminate: mu = 2j exactly.
        for j in 0..k {
            modes.push(ShootingMode {
                mu: 2.0 * j as f64,
                class: ModeClass::Terminating,
            });
        }
    } else {
        return Err(Error::domain(format!(
            "sector ({a}, {b}) has no exact shooting form; use the finite-difference solver"
        )));
    }
    modes.sort_by(|p, q| p.mu.partial_cmp(&q.mu).unwrap());
    modes.truncate(k);
    Ok(ShootingSolution {
        modes,
        window_exhausted: exhausted,
    })
}

/// Roots of `cond` in [0, SCAN_MAX]: an exact root at mu = 0 is included,
/// positive roots are bracketed on the scan lattice and bisected.
/// Returns (roots, window_exhausted).
fn scan_roots(cond: &dyn Fn(f64) -> Result<f64>, k: usize) -> Result<(Vec<f64>, bool)> {
    let mut roots = Vec::new();
    let f0 = cond(0.0)?;
    if f0.abs() < 1e-12 {
        roots.push(0.0);
    }
    let mut prev_mu = 0.0;
    let mut prev = f0;
    let mut mu = SCAN_STEP;
    while mu <= SCAN_MAX + 1e-9 && roots.len() < k {
        let cur = cond(mu)?;
        if prev * cur < 0.0 {
            let (mut lo, mut hi) = (prev_mu, mu);
            let mut flo = prev;
            while hi - lo > BISECT_TOL {
                let mid = 0.5 * (lo + hi);
                let fm = cond(mid)?;
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push(0.5 * (lo + hi));
        } else if cur == 0.0 && prev != 0.0 {
            roots.push(mu);
        }
        prev_mu = mu;
        prev = cur;
        mu += SCAN_STEP;
    }
    let exhausted = roots.len() < k;
    Ok((roots, exhausted))
}

/// Expansion of a density over an eigensystem: c_n = int rho G_n / sqrt(h).
#[derive(Debug, Clone)]
pub struct Expansion {
    pub coefficients: Vec<f64>,
    /// points skipped because the invariant density underflowed there
    pub excluded_points: usize,
}

/// Projects `rho_in` (interpolated onto the system points) onto the modes.
/// c_0 recovers the sector mass of `rho_in`.
pub fn expand(rho_in: &GridDensity, sys: &EigenSystem) -> Result<Expansion> {
    let sqrt_h = sys
        .sqrt_h()
        .ok_or_else(|| Error::domain("expansion requires a drift-built eigensystem"))?;
    let g = rho_in.grid();
    let rho: Vec<f64> = sys
        .points()
        .iter()
        .map(|&x| lerp_uniform(rho_in.values(), g.lo(), g.spacing(), x))
        .collect();
    let mut excluded = 0usize;
    let mut usable = vec![true; sys.points().len()];
    for (i, &sh) in sqrt_h.iter().enumerate() {
        if sh < 1e-150 {
            usable[i] = false;
            excluded += 1;
        }
    }
    let coefficients = (0..sys.mode_count())
        .map(|n| {
            sys.points()
                .iter()
                .enumerate()
                .filter(|(i, _)| usable[*i])
                .map(|(i, _)| sys.weights()[i] * rho[i] * sys.mode(n)[i] / sqrt_h[i])
                .sum()
        })
        .collect();
    Ok(Expansion {
        coefficients,
        excluded_points: excluded,
    })
}

/// Spectral reconstruction at time `t` >= 0 relative to the expansion time.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    pub density: GridDensity,
    /// magnitude of the last retained term, a truncation-tail bound
    pub tail_bound: f64,
    pub truncation_warning: bool,
    pub renormalized: bool,
}

pub fn spectral_density(sys: &EigenSystem, coefficients: &[f64], t: f64) -> Result<SpectralSample> {
    if coefficients.len() > sys.mode_count() {
        return Err(Error::domain("more coefficients than modes"));
    }
    let sqrt_h = sys
        .sqrt_h()
        .ok_or_else(|| Error::domain("reconstruction requires a drift-built eigensystem"))?;
    let m = sys.points().len();
    let mut values = vec![0.0; m];
    let mut tail_bound = 0.0;
    for (n, &c) in coefficients.iter().enumerate() {
        let factor = c * (-sys.eigenvalues()[n] * t).exp();
        tail_bound = factor.abs();
        for i in 0..m {
            values[i] += factor * sqrt_h[i] * sys.mode(n)[i];
        }
    }
    let truncation_warning = tail_bound > 1e-10;
    let mut renormalized = false;
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-12 {
        for v in &mut values {
            *v = v.max(-1e-12);
        }
        renormalized = true;
    }
    let grid = sys.grid()?;
    let mut density = GridDensity::new(grid, values)?;
    if renormalized {
        density = density.normalized();
    }
    Ok(SpectralSample {
        density,
        tail_bound,
        truncation_warning,
        renormalized,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drift::{LinearDrift, StationaryDrift};
    use crate::states::{OscillatorParams, StationaryState};

    fn unit() -> OscillatorParams {
        OscillatorParams::unit_width()
    }

    fn adimensional_drift(level: u32) -> Arc<dyn DriftField> {
        Arc::new(StationaryDrift::new(
            StationaryState::new(level, unit()).unwrap(),
        ))
    }

    #[test]
    fn q_assembly_closed_forms() {
        // q = w^2 x^2 / 4D - (2n+1) w / 2 for the oscillator drifts
        let d = unit().diffusion();
        let w = unit().omega;
        let ou: Arc<dyn DriftField> = Arc::new(LinearDrift::ou(w));
        let p0 = build_sl(ou, d, (-8.0, 8.0)).unwrap();
        for x in [-2.0, 0.0, 1.5] {
            let want = w * w * x * x / (4.0 * d) - 0.5 * w;
            assert!((p0.q(x) - want).abs() < 1e-12, "x={x}");
        }
        // excited drift on the right semiaxis: the 1/x^2 pieces of
        // v^2/4D + v'/2 cancel into the same quadratic-minus-shift form
        let p1 = build_sl(adimensional_drift(1), d, (0.0, 8.0)).unwrap();
        for x in [0.3, 1.0, 2.5] {
            let v = 2.0 * d / x - w * x;
            let v_dx = -2.0 * d / (x * x) - w;
            let direct = v * v / (4.0 * d) + 0.5 * v_dx;
            let want = w * w * x * x / (4.0 * d) - 1.5 * w;
            assert!((p1.q(x) - direct).abs() < 1e-9, "x={x}");
            assert!((direct - want).abs() < 1e-12, "x={x}");
        }
        // zero drift -> q = 0
        let zero: Arc<dyn DriftField> =
            Arc::new(LinearDrift::new(Arc::new(|_| 0.0), Arc::new(|_| 0.0), None));
        let pz = build_sl(zero, 1.0, (0.0, 1.0)).unwrap();
        assert_eq!(pz.q(0.5), 0.0);
    }

    #[test]
    fn boundary_kinds_follow_singularities() {
        let d = unit().diffusion();
        let p = build_sl(adimensional_drift(2), d, (-1.0, 1.0)).unwrap();
        assert_eq!(p.bc(), (BoundaryKind::Dirichlet, BoundaryKind::Dirichlet));
        let p = build_sl(adimensional_drift(1), d, (0.0, 8.0)).unwrap();
        assert_eq!(p.bc(), (BoundaryKind::Dirichlet, BoundaryKind::ZeroFlux));
        let ou: Arc<dyn DriftField> = Arc::new(LinearDrift::ou(1.0));
        let p = build_sl(ou, d, (-8.0, 8.0)).unwrap();
        assert_eq!(p.bc(), (BoundaryKind::ZeroFlux, BoundaryKind::ZeroFlux));
    }

    #[test]
    fn dirichlet_laplacian_spectrum() {
        // q = 0, Dirichlet on [0, pi], D = 1: eigenvalues (j+1)^2
        let q: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|_| 0.0);
        let problem = SlProblem::from_potential(
            q,
            1.0,
            (0.0, std::f64::consts::PI),
            (BoundaryKind::Dirichlet, BoundaryKind::Dirichlet),
        )
        .unwrap();
        let grid = Grid1D::new(0.0, std::f64::consts::PI, 2001).unwrap();
        let sys = solve_eigs_fd(&problem, &grid, 5).unwrap();
        for (j, &lam) in sys.eigenvalues().iter().enumerate() {
            let want = ((j + 1) * (j + 1)) as f64;
            assert!((lam - want).abs() < 2e-5 * want, "j={j}: {lam}");
        }
        assert!(!sys.resolution_warning());
    }

    #[test]
    fn ou_spectrum_is_harmonic_ladder() {
        // dense solve at 4000 cells; lambda_1 = omega is the mean mode and
        // lambda_2 = 2 omega is the variance relaxation rate
        let p = unit();
        let d = p.diffusion();
        let ou: Arc<dyn DriftField> = Arc::new(LinearDrift::ou(p.omega));
        let problem = build_sl(ou, d, (-8.0, 8.0)).unwrap();
        let grid = Grid1D::symmetric(8.0, 4001).unwrap();
        let sys = solve_eigs_fd(&problem, &grid, 5).unwrap();
        assert!(
            sys.eigenvalues()[0].abs() < 1e-8 * p.omega,
            "lambda0 = {}",
            sys.eigenvalues()[0]
        );
        for j in 1..5 {
            let want = j as f64 * p.omega;
            assert!(
                (sys.eigenvalues()[j] - want).abs() < 2e-4 * want,
                "j={j}: {}",
                sys.eigenvalues()[j]
            );
        }
    }

    #[test]
    fn ground_mode_is_sqrt_invariant_density() {
        let p = unit();
        let ou: Arc<dyn DriftField> = Arc::new(LinearDrift::ou(p.omega));
        let problem = build_sl(ou, p.diffusion(), (-8.0, 8.0)).unwrap();
        let grid = Grid1D::symmetric(8.0, 1501).unwrap();
        let sys = solve_eigs_fd(&problem, &grid, 3).unwrap();
        let sh = sys.sqrt_h().unwrap();
        let norm: f64 = sh
            .iter()
            .zip(sys.weights())
            .map(|(&s, &w)| w * s * s)
            .sum::<f64>()
            .sqrt();
        let l2: f64 = sys
            .mode(0)
            .iter()
            .zip(sh.iter().zip(sys.weights()))
            .map(|(&g, (&s, &w))| w * (g - s / norm).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(l2 < 1e-6, "l2 = {l2}");
    }

    #[test]
    fn oscillation_counts() {
        let p = unit();
        let ou: Arc<dyn DriftField> = Arc::new(LinearDrift::ou(p.omega));
        let problem = build_sl(ou, p.diffusion(), (-8.0, 8.0)).unwrap();
        let grid = Grid1D::symmetric(8.0, 1201).unwrap();
        let sys = solve_eigs_fd(&problem, &grid, 6).unwrap();
        for n in 0..6 {
            assert_eq!(sys.sign_changes(n), n, "mode {n}");
        }
    }

    #[test]
    fn shooting_inner_sector_reference_roots() {
        let sol = solve_eigs_shooting(2, (-1.0, 1.0), 7).unwrap();
        let odd: Vec<f64> = sol
            .modes
            .iter()
            .filter(|m| m.class == ModeClass::Odd)
            .map(|m| m.mu)
            .collect();
        // frozen high-precision roots of the odd-class condition
        let want_odd = [7.4402028921912668, 37.058603971722656, 86.408378115661949];
        for (got, want) in odd.iter().zip(want_odd.iter()) {
            assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        }
        let even: Vec<f64> = sol
            .modes
            .iter()
            .filter(|m| m.class == ModeClass::Even)
            .map(|m| m.mu)
            .collect();
        assert_eq!(even[0], 0.0, "mu = 0 is always a root");
        let want_even = [19.784328829340076, 59.266350311825714];
        for (got, want) in even[1..].iter().zip(want_even.iter()) {
            assert!((got - want).abs() < 1e-7, "{got} vs {want}");
        }
        // interleaving: the merged ladder is strictly increasing
        let mus: Vec<f64> = sol.modes.iter().map(|m| m.mu).collect();
        assert!(mus.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn shooting_half_line_excited_is_even_integers() {
        let sol = solve_eigs_shooting(1, (0.0, f64::INFINITY), 4).unwrap();
        let mus: Vec<f64> = sol.modes.iter().map(|m| m.mu).collect();
        assert_eq!(mus, vec![0.0, 2.0, 4.0, 6.0]);
        let sol = solve_eigs_shooting(1, (f64::NEG_INFINITY, 0.0), 3).unwrap();
        assert_eq!(sol.modes.len(), 3);
    }

    #[test]
    fn shooting_rejects_unsupported_sectors() {
        assert!(solve_eigs_shooting(2, (1.0, f64::INFINITY), 3).is_err());
        assert!(solve_eigs_shooting(3, (-1.0, 1.0), 3).is_err());
    }

    #[test]
    fn fd_matches_shooting_on_inner_sector() {
        // adimensional inner sector of the second excited state
        let problem = build_sl(adimensional_drift(2), 1.0, (-1.0, 1.0)).unwrap();
        let grid = Grid1D::new(-1.0, 1.0, 1601).unwrap();
        let sys = solve_eigs_fd(&problem, &grid, 7).unwrap();
        let shoot = solve_eigs_shooting(2, (-1.0, 1.0), 7).unwrap();
        assert!(sys.eigenvalues()[0].abs() < 1e-8);
        for j in 1..7 {
            let fd = sys.eigenvalues()[j];
            let ex = shoot.modes[j].mu;
            assert!(
                (fd - ex).abs() < 1e-3 * ex,
                "mode {j}: fd {fd} vs shooting {ex}"
            );
        }
    }

    #[test]
    fn expansion_of_invariant_density_is_delta() {
        let p = unit();
        let ou: Arc<dyn DriftField> = Arc::new(LinearDrift::ou(p.omega));
        let problem = build_sl(ou, p.diffusion(), (-8.0, 8.0)).unwrap();
        let grid = Grid1D::symmetric(8.0, 1201).unwrap();
        let sys = solve_eigs_fd(&problem, &grid, 6).unwrap();
        // the system's own invariant density: exact orthogonality
        let h_own = GridDensity::new(
            sys.grid().unwrap(),
            sys.sqrt_h().unwrap().iter().map(|&s| s * s).collect(),
        )
        .unwrap();
        let exp = expand(&h_own, &sys).unwrap();
        assert!((exp.coefficients[0] - 1.0).abs() < 1e-9);
        for c in &exp.coefficients[1..] {
            assert!(c.abs() < 1e-9, "{c}");
        }
        // the vertex-grid invariant density agrees up to interpolation error
        let drift_ref = LinearDrift::ou(p.omega);
        let h_vertex = crate::fpcore::invariant_density(&drift_ref, p.diffusion(), &grid).unwrap();
        let exp = expand(&h_vertex, &sys).unwrap();
        assert!((exp.coefficients[0] - 1.0).abs() < 1e-4);
        for c in &exp.coefficients[1..] {
            assert!(c.abs() < 1e-4, "{c}");
        }
    }

    #[test]
    fn delta_expansion_coefficients() {
        // c_n = G_n(x0)/sqrt(h(x0)) for a delta start
        let p = unit();
        let ou: Arc<dyn DriftField> = Arc::new(LinearDrift::ou(p.omega));
        let problem = build_sl(ou, p.diffusion(), (-8.0, 8.0)).unwrap();
        let grid = Grid1D::symmetric(8.0, 1201).unwrap();
        let sys = solve_eigs_fd(&problem, &grid, 5).unwrap();
        let x0 = 0.75;
        let j0 = sys
            .points()
            .iter()
            .position(|&x| (x - x0).abs() <= 0.5 * sys.weights()[0])
            .unwrap();
        let mut vals = vec![0.0; grid.len()];
        let gh = grid.spacing();
        let idx = ((sys.points()[j0] - grid.lo()) / gh).round() as usize;
        vals[idx] = 1.0 / gh;
        let rho = GridDensity::new(grid.clone(), vals).unwrap().normalized();
        let exp = expand(&rho, &sys).unwrap();
        let sh = sys.sqrt_h().unwrap();
        for n in 0..sys.mode_count() {
            let want = sys.mode(n)[j0] / sh[j0];
            // hat mollification leaves O(h) error
            assert!(
                (exp.coefficients[n] - want).abs() < 2e-2 * want.abs().max(1.0),
                "n={n}: {} vs {want}",
                exp.coefficients[n]
            );
        }
    }

    #[test]
    fn spectral_relaxation_to_invariant_density() {
        let p = unit();
        let state1 = StationaryState::new(1, p).unwrap();
        let ou: Arc<dyn DriftField> = Arc::new(LinearDrift::ou(p.omega));
        let problem = build_sl(ou, p.diffusion(), (-8.0, 8.0)).unwrap();
        let grid = Grid1D::symmetric(8.0, 1601).unwrap();
        let sys = solve_eigs_fd(&problem, &grid, 8).unwrap();
        let rho1 = GridDensity::from_fn(grid, |x| state1.density(x))
            .unwrap()
            .normalized();
        let exp = expand(&rho1, &sys).unwrap();
        // t = 0 reproduces the input within truncation error
        let s0 = spectral_density(&sys, &exp.coefficients, 0.0).unwrap();
        assert!(s0.density.l1_distance_fn(|x| state1.density(x)) < 1e-4);
        // long time: the invariant density
        let s_inf = spectral_density(&sys, &exp.coefficients, 40.0).unwrap();
        let sh = sys.sqrt_h().unwrap();
        let l1: f64 = s_inf
            .density
            .values()
            .iter()
            .zip(sh.iter())
            .zip(sys.weights())
            .map(|((&a, &s), &w)| w * (a - s * s).abs())
            .sum();
        assert!(l1 < 1e-9, "l1 = {l1}");
        // decay mixture at intermediate times
        for t in [0.2, 1.0, 3.0] {
            let s = spectral_density(&sys, &exp.coefficients, t).unwrap();
            let l1 = s
                .density
                .l1_distance_fn(|x| crate::closedform::decay_mixture(x, t, &p).unwrap());
            assert!(l1 < 1e-4, "t={t}: l1={l1}");
        }
    }
}
