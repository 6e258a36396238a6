//! Grid-based Fokker-Planck evolution with zero-flux and barrier boundary
//! conditions, invariant densities, and Chapman-Kolmogorov propagation.
//!
//! The evolution uses Crank-Nicolson time stepping on a flux-form
//! discretization with Chang-Cooper-style face weighting: the face flux
//! reduces to centered (upwind-free) advection for small cell Peclet numbers
//! while keeping the discrete invariant density an exact fixed point and the
//! per-cell update an M-matrix at the chosen step bound.

use crate::drift::DriftField;
use crate::error::{Error, Result};
use crate::numeric::{cumulative_trapezoid, thomas_solve};

/// Tolerance below which densities may dip negative before the solver
/// reports a positivity error.
pub const POSITIVITY_TOL: f64 = -1e-10;

/// Per-sector mass conservation tolerance during evolution.
pub const MASS_TOL: f64 = 1e-6;

/// Mass tolerance for kernel propagation.
pub const PROPAGATE_MASS_TOL: f64 = 1e-4;

/// Uniform 1D grid with at least 16 points.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    lo: f64,
    hi: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Grid(format!("invalid bounds [{lo}, {hi}]")));
        }
        if n < 16 {
            return Err(Error::Grid(format!("n_points {n} below minimum 16")));
        }
        Ok(Self { lo, hi, n })
    }

    /// Symmetric grid on [-half_width, half_width].
    pub fn symmetric(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.lo + self.spacing() * i as f64
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Cell width of point i (finite-volume cells; half cells at the ends).
    pub fn cell_width(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.spacing()
        } else {
            self.spacing()
        }
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.n).map(|i| f(self.point(i))).collect()
    }
}

/// Interior barriers of a drift field mapped onto a grid.
///
/// A wall sits on the grid face nearest each singular point; when a node
/// falls on a grid point, that point is isolated between two walls and its
/// (essentially zero) mass stays frozen.
#[derive(Debug, Clone)]
pub struct SectorDecomposition {
    breakpoints: Vec<f64>,
    /// sorted face indices f (face f couples points f and f+1) carrying walls
    walls: Vec<usize>,
    /// grid points isolated because a node coincides with them
    isolated: Vec<usize>,
    n_points: usize,
}

/// Locates the barriers of `drift` inside `grid`.
pub fn split_domain(drift: &dyn DriftField, grid: &Grid1D) -> SectorDecomposition {
    SectorDecomposition::new(drift.singularities(), grid)
}

impl SectorDecomposition {
    pub fn new(singularities: &[f64], grid: &Grid1D) -> Self {
        let h = grid.spacing();
        let mut walls = Vec::new();
        let mut isolated = Vec::new();
        let mut breakpoints = Vec::new();
        for &s in singularities {
            if s <= grid.lo() || s >= grid.hi() {
                continue;
            }
            breakpoints.push(s);
            let rel = (s - grid.lo()) / h;
            let nearest_point = rel.round() as usize;
            if nearest_point < grid.len() && (s - grid.point(nearest_point)).abs() < 0.25 * h {
                // node on (or essentially on) a grid point: isolate it
                if nearest_point > 0 {
                    walls.push(nearest_point - 1);
                }
                if nearest_point < grid.len() - 1 {
                    walls.push(nearest_point);
                }
                isolated.push(nearest_point);
            } else {
                let face = (rel - 0.5).round().clamp(0.0, (grid.len() - 2) as f64) as usize;
                walls.push(face);
            }
        }
        walls.sort_unstable();
        walls.dedup();
        Self {
            breakpoints,
            walls,
            isolated,
            n_points: grid.len(),
        }
    }

    pub fn single(grid: &Grid1D) -> Self {
        Self {
            breakpoints: Vec::new(),
            walls: Vec::new(),
            isolated: Vec::new(),
            n_points: grid.len(),
        }
    }

    /// Interior barrier positions.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Sector intervals [x_k, x_{k+1}], outer ones truncated to the grid.
    pub fn intervals(&self, grid: &Grid1D) -> Vec<(f64, f64)> {
        let mut edges = vec![grid.lo()];
        edges.extend_from_slice(&self.breakpoints);
        edges.push(grid.hi());
        edges.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn wall_faces(&self) -> &[usize] {
        &self.walls
    }

    pub fn isolated_points(&self) -> &[usize] {
        &self.isolated
    }

    /// Contiguous point ranges separated by walls (isolated node points show
    /// up as singleton ranges).
    pub fn ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::with_capacity(self.walls.len() + 1);
        let mut start = 0usize;
        for &w in &self.walls {
            out.push(start..w + 1);
            start = w + 1;
        }
        out.push(start..self.n_points);
        out
    }

    pub fn sector_count(&self) -> usize {
        self.walls.len() + 1
    }

    /// Index of the sector range containing point `i`.
    pub fn sector_of_point(&self, i: usize) -> usize {
        match self.walls.binary_search(&i) {
            Ok(w) => w,        // point i is the left neighbor of wall face i
            Err(ins) => ins,
        }
    }
}

/// Probability density sampled on a grid, with per-sector mass bookkeeping.
#[derive(Debug, Clone)]
pub struct GridDensity {
    grid: Grid1D,
    values: Vec<f64>,
    sector_masses: Vec<f64>,
}

impl GridDensity {
    pub fn new(grid: Grid1D, values: Vec<f64>) -> Result<Self> {
        let single = SectorDecomposition::single(&grid);
        Self::with_sectors(grid, values, &single)
    }

    pub fn with_sectors(
        grid: Grid1D,
        values: Vec<f64>,
        sectors: &SectorDecomposition,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Grid(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        let mut min = f64::INFINITY;
        for &v in &values {
            if !v.is_finite() {
                return Err(Error::domain("density values must be finite"));
            }
            min = min.min(v);
        }
        if min < POSITIVITY_TOL {
            return Err(Error::Positivity { min });
        }
        let sector_masses = sector_masses(&grid, &values, sectors);
        Ok(Self {
            grid,
            values,
            sector_masses,
        })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.sample(f);
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Trapezoidal total mass.
    pub fn mass(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.grid.cell_width(i) * self.values[i])
            .sum()
    }

    pub fn sector_masses(&self) -> &[f64] {
        &self.sector_masses
    }

    /// Rescales to unit mass.
    pub fn normalized(mut self) -> Self {
        let m = self.mass();
        for v in &mut self.values {
            *v /= m;
        }
        for s in &mut self.sector_masses {
            *s /= m;
        }
        self
    }

    /// Value at x by linear interpolation.
    pub fn value_at(&self, x: f64) -> f64 {
        crate::numeric::lerp_uniform(&self.values, self.grid.lo(), self.grid.spacing(), x)
    }

    /// L1 distance against another density on the same grid.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Grid("grids differ".into()));
        }
        Ok((0..self.grid.len())
            .map(|i| self.grid.cell_width(i) * (self.values[i] - other.values[i]).abs())
            .sum())
    }

    /// L1 distance against a callable evaluated on this grid.
    pub fn l1_distance_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        (0..self.grid.len())
            .map(|i| self.grid.cell_width(i) * (self.values[i] - f(self.grid.point(i))).abs())
            .sum()
    }

    pub fn sup_distance_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        (0..self.grid.len())
            .map(|i| (self.values[i] - f(self.grid.point(i))).abs())
            .fold(0.0, f64::max)
    }
}

fn sector_masses(grid: &Grid1D, values: &[f64], sectors: &SectorDecomposition) -> Vec<f64> {
    sectors
        .ranges()
        .iter()
        .map(|r| r.clone().map(|i| grid.cell_width(i) * values[i]).sum())
        .collect()
}

/// Invariant density h = N^{-1} exp(int v/D dx) on a grid covering a single
/// sector (constant diffusion).
pub fn invariant_density(drift: &dyn DriftField, d: f64, grid: &Grid1D) -> Result<GridDensity> {
    if d <= 0.0 {
        return Err(Error::domain("diffusion coefficient must be positive"));
    }
    let ratio: Vec<f64> = grid.points().iter().map(|&x| drift.eval(x, 0.0) / d).collect();
    if ratio.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(
            "drift must be finite on the grid interior of one sector",
        ));
    }
    let log_h = cumulative_trapezoid(&ratio, grid.spacing());
    let peak = log_h.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let values: Vec<f64> = log_h.iter().map(|&lh| (lh - peak).exp()).collect();
    let density = GridDensity::new(grid.clone(), values)?;
    let norm = density.mass();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::domain("invariant density is not normalizable"));
    }
    Ok(density.normalized())
}

/// Bernoulli factor B(w) = w / (e^w - 1), the Chang-Cooper face weight.
fn bernoulli(w: f64) -> f64 {
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
}

/// Tridiagonal generator T with c_i drho_i/dt = (T rho)_i built from the
/// face fluxes at time `t`. Wall faces carry no flux.
struct Generator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

fn assemble_generator(
    drift: &dyn DriftField,
    d: f64,
    grid: &Grid1D,
    sectors: &SectorDecomposition,
    t: f64,
) -> Generator {
    let n = grid.len();
    let h = grid.spacing();
    let v: Vec<f64> = (0..n).map(|i| drift.eval(grid.point(i), t)).collect();
    let mut lower = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut wall_iter = sectors.wall_faces().iter().peekable();
    for f in 0..n - 1 {
        if wall_iter.peek() == Some(&&f) {
            wall_iter.next();
            continue;
        }
        let w = (v[f] + v[f + 1]) * h / (2.0 * d);
        // flux j_{f+1/2} = (D/h) [B(-w) rho_f - B(w) rho_{f+1}]
        let out_f = d / h * bernoulli(-w);
        let in_f = d / h * bernoulli(w);
        let (cl, cr) = (grid.cell_width(f), grid.cell_width(f + 1));
        diag[f] -= out_f / cl;
        upper[f] += in_f / cl;
        lower[f + 1] += out_f / cr;
        diag[f + 1] -= in_f / cr;
    }
    Generator { lower, diag, upper }
}

/// Crank-Nicolson evolution of `rho0` under `drift` with zero-flux walls at
/// the domain ends and at every interior drift singularity. `rho0` is taken
/// at `t_grid[0]`; one density per requested time is returned.
pub fn evolve_density(
    drift: &dyn DriftField,
    d: f64,
    rho0: &GridDensity,
    t_grid: &[f64],
) -> Result<Vec<GridDensity>> {
    if d <= 0.0 {
        return Err(Error::domain("diffusion coefficient must be positive"));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("t_grid must be non-empty and increasing"));
    }
    let mass0 = rho0.mass();
    if (mass0 - 1.0).abs() > 1e-6 {
        return Err(Error::domain(format!(
            "initial density mass {mass0} not normalized"
        )));
    }
    let grid = rho0.grid().clone();
    let sectors = split_domain(drift, &grid);

    // initial mass must not sit on a barrier
    let peak = rho0.values().iter().cloned().fold(0.0, f64::max);
    for &bp in sectors.breakpoints() {
        let near = rho0.value_at(bp);
        if near > 1e-3 * peak {
            return Err(Error::domain(format!(
                "initial density does not vanish at the node at x = {bp}"
            )));
        }
    }

    let h = grid.spacing();
    let mut dt_max = h * h / (2.0 * d);
    if let Some(rate) = drift.rate() {
        dt_max = dt_max.min(0.05 / rate);
    }

    let initial_masses = sector_masses(&grid, rho0.values(), &sectors);
    let mut rho = rho0.values().to_vec();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(GridDensity::with_sectors(grid.clone(), rho.clone(), &sectors)?);

    let n = grid.len();
    let static_gen = if drift.is_time_dependent() {
        None
    } else {
        Some(assemble_generator(drift, d, &grid, &sectors, t_grid[0]))
    };

    let mut lhs_lower = vec![0.0; n];
    let mut lhs_diag = vec![0.0; n];
    let mut lhs_upper = vec![0.0; n];
    let mut rhs = vec![0.0; n];

    for span in t_grid.windows(2) {
        let (t0, t1) = (span[0], span[1]);
        let steps = ((t1 - t0) / dt_max).ceil().max(1.0) as usize;
        let dt = (t1 - t0) / steps as f64;
        for s in 0..steps {
            let t_mid = t0 + (s as f64 + 0.5) * dt;
            let gen_storage;
            let gen = match &static_gen {
                Some(g) => g,
                None => {
                    gen_storage = assemble_generator(drift, d, &grid, &sectors, t_mid);
                    &gen_storage
                }
            };
            let half = 0.5 * dt;
            for i in 0..n {
                lhs_lower[i] = -half * gen.lower[i];
                lhs_diag[i] = 1.0 - half * gen.diag[i];
                lhs_upper[i] = -half * gen.upper[i];
                let mut acc = rho[i] * (1.0 + half * gen.diag[i]);
                if i > 0 {
                    acc += half * gen.lower[i] * rho[i - 1];
                }
                if i + 1 < n {
                    acc += half * gen.upper[i] * rho[i + 1];
                }
                rhs[i] = acc;
            }
            thomas_solve(&lhs_lower, &lhs_diag, &lhs_upper, &mut rhs);
            rho.copy_from_slice(&rhs);
        }

        // conservation and positivity checks at each output time
        let masses = sector_masses(&grid, &rho, &sectors);
        for (k, (&m, &m0)) in masses.iter().zip(initial_masses.iter()).enumerate() {
            if (m - m0).abs() > MASS_TOL {
                return Err(Error::Conservation {
                    sector: k,
                    drift: (m - m0).abs(),
                    tol: MASS_TOL,
                });
            }
        }
        let min = rho.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < POSITIVITY_TOL {
            return Err(Error::Positivity { min });
        }
        out.push(GridDensity::with_sectors(grid.clone(), rho.clone(), &sectors)?);
    }
    Ok(out)
}

/// A transition probability density p(x, t | y, t0).
pub trait TransitionKernel: Sync {
    fn eval(&self, x: f64, t: f64, y: f64) -> f64;
    fn start_time(&self) -> f64;
}

/// Closure-backed transition kernel.
pub struct FnKernel<F: Fn(f64, f64, f64) -> f64 + Sync> {
    pub f: F,
    pub t0: f64,
}

impl<F: Fn(f64, f64, f64) -> f64 + Sync> TransitionKernel for FnKernel<F> {
    fn eval(&self, x: f64, t: f64, y: f64) -> f64 {
        (self.f)(x, t, y)
    }
    fn start_time(&self) -> f64 {
        self.t0
    }
}

/// Chapman-Kolmogorov propagation: trapezoidal evaluation of
/// int p(x, t | y, t0) rho_in(y) dy on the grid of `rho_in`.
pub fn propagate(
    kernel: &dyn TransitionKernel,
    rho_in: &GridDensity,
    t: f64,
) -> Result<GridDensity> {
    if t < kernel.start_time() {
        return Err(Error::domain(format!(
            "propagation time {t} precedes kernel start {}",
            kernel.start_time()
        )));
    }
    if t == kernel.start_time() {
        return Ok(rho_in.clone());
    }
    let grid = rho_in.grid();
    let n = grid.len();
    let weights: Vec<f64> = (0..n).map(|j| grid.cell_width(j) * rho_in.values()[j]).collect();
    let ys = grid.points();
    let values: Vec<f64> = (0..n)
        .map(|i| {
            let x = grid.point(i);
            ys.iter()
                .zip(weights.iter())
                .map(|(&y, &w)| w * kernel.eval(x, t, y))
                .sum()
        })
        .collect();
    let out = GridDensity::new(grid.clone(), values)?;
    let mass = out.mass();
    if (mass - 1.0).abs() > PROPAGATE_MASS_TOL {
        return Err(Error::Quadrature {
            mass,
            tol: PROPAGATE_MASS_TOL,
        });
    }
    Ok(out)
}
