//! Operator-split time stepping for the Vlasov–Riesz–Fokker–Planck system.
//!
//! Free transport and acceleration are solved exactly by Fourier phase
//! shifts; the Fokker–Planck part is delegated to [`crate::fokker_planck`].
//! The Strang step is `T(dt/2) A(dt/2) FP(dt) A(dt/2) T(dt/2)` with the force
//! evaluated once after the first half transport; `A` and `FP` leave `ρ`
//! unchanged so the frozen force is exact for both acceleration halves.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{Diagnostics, DiagnosticsOptions, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::fokker_planck::{FokkerPlanck, FpScheme};
use crate::grid::{DistributionField, PhaseGrid, SpectralPlan, DEFAULT_NEG_TOL};
use crate::riesz::{KernelSpec, RieszSolver};
use crate::scalar::Real;
use crate::spectral;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    Lie,
    #[default]
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig<T> {
    pub dt: T,
    pub t_end: T,
    pub sigma: T,
    pub splitting: Splitting,
    pub fp_scheme: FpScheme,
    /// Upper bound on `lv·dt` as a fraction of the box width `2 lx`.
    pub cfl_guard: T,
    pub neg_tol: T,
    /// Halt once `max ρ` exceeds this multiple of its initial value.
    pub concentration_factor: T,
    /// Record diagnostics every this many steps (the final state is always
    /// recorded). Run configs set it from the diagnostics block.
    #[serde(skip)]
    pub diag_interval: usize,
}

impl<T: Real> Default for IntegratorConfig<T> {
    fn default() -> Self {
        Self {
            dt: T::lit(1e-3),
            t_end: T::one(),
            sigma: T::zero(),
            splitting: Splitting::Strang,
            fp_scheme: FpScheme::ExactOu,
            cfl_guard: T::one(),
            neg_tol: T::lit(DEFAULT_NEG_TOL),
            concentration_factor: T::lit(1e3),
            diag_interval: 1,
        }
    }
}

impl<T: Real> IntegratorConfig<T> {
    pub fn validate(&self, grid: &PhaseGrid<T>) -> Result<()> {
        let bad = |m: String| Err(Error::Precondition(m));
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_end >= T::zero()) || !self.t_end.is_finite() {
            return bad(format!("t_end = {} must be >= 0", self.t_end));
        }
        if !(self.sigma >= T::zero()) || !self.sigma.is_finite() {
            return bad(format!("sigma = {} must be >= 0", self.sigma));
        }
        if !(self.cfl_guard > T::zero() && self.cfl_guard <= T::one()) {
            return bad(format!("cfl_guard = {} must lie in (0, 1]", self.cfl_guard));
        }
        if !(self.neg_tol >= T::zero()) {
            return bad(format!("neg_tol = {} must be >= 0", self.neg_tol));
        }
        if !(self.concentration_factor > T::one()) {
            return bad(format!(
                "concentration_factor = {} must exceed 1",
                self.concentration_factor
            ));
        }
        if self.diag_interval == 0 {
            return bad("diag_interval must be at least 1".into());
        }
        let shift = grid.lv * self.effective_dt();
        if shift > self.cfl_guard * T::lit(2.0) * grid.lx {
            return bad(format!(
                "transport displacement lv*dt = {shift} exceeds cfl_guard x box width"
            ));
        }
        Ok(())
    }

    /// Number of steps: `t_end / dt` rounded, at least one when `t_end > 0`.
    pub fn steps(&self) -> usize {
        if self.t_end == T::zero() {
            return 0;
        }
        (self.t_end / self.dt).round().to_usize().unwrap_or(0).max(1)
    }

    /// Step size actually used, so that the run ends exactly at `t_end`.
    pub fn effective_dt(&self) -> T {
        match self.steps() {
            0 => self.dt,
            n => self.t_end / T::of(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    ConcentrationHalt,
    NanHalt,
}

#[derive(Debug, Clone)]
pub struct RunResult<T> {
    /// Last valid state.
    pub final_field: DistributionField<T>,
    pub status: RunStatus,
    pub series: Vec<DiagnosticsRecord<T>>,
    pub steps_taken: usize,
    pub dt: T,
}

/// Receives every recorded diagnostics row together with the field it
/// was computed from.
pub trait DiagnosticsSink<T> {
    fn record(&mut self, record: &DiagnosticsRecord<T>, field: &DistributionField<T>) -> Result<()>;
}

/// Sink that discards everything.
pub struct NullSink;

impl<T> DiagnosticsSink<T> for NullSink {
    fn record(&mut self, _: &DiagnosticsRecord<T>, _: &DistributionField<T>) -> Result<()> {
        Ok(())
    }
}

impl<T: Clone> DiagnosticsSink<T> for Vec<DiagnosticsRecord<T>> {
    fn record(&mut self, record: &DiagnosticsRecord<T>, _: &DistributionField<T>) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Smallest `r` with `|f(x, v)| ≤ threshold` whenever `|v| > r`.
pub fn support_radius<T: Real>(f: &DistributionField<T>, threshold: T) -> T {
    let g = &f.grid;
    let nvp = g.v_points();
    let mut r2 = T::zero();
    for (i, &val) in f.values.iter().enumerate() {
        if val.abs() > threshold {
            r2 = r2.max(g.v_norm_sq(i % nvp));
        }
    }
    r2.sqrt()
}

/// Cached phase table `e^{−i k_m v_j τ}` for one transport time.
#[derive(Debug, Clone)]
struct TransportPhases<T> {
    tau: T,
    /// Indexed `[m * nv + j]`.
    table: Vec<Complex<T>>,
}

/// Split-step solver bound to one grid, kernel and configuration.
#[derive(Debug, Clone)]
pub struct KineticSolver<T: Real> {
    grid: PhaseGrid<T>,
    plan: SpectralPlan<T>,
    riesz: RieszSolver<T>,
    config: IntegratorConfig<T>,
    dt: T,
    fp: FokkerPlanck<T>,
    phases: Vec<TransportPhases<T>>,
}

impl<T: Real> KineticSolver<T> {
    pub fn new(grid: &PhaseGrid<T>, spec: &KernelSpec<T>, config: IntegratorConfig<T>) -> Result<Self> {
        config.validate(grid)?;
        let dt = config.effective_dt();
        let riesz = RieszSolver::for_evolution(grid, spec)?;
        let fp = FokkerPlanck::new(grid, config.sigma, dt, config.fp_scheme)?;
        let taus = match config.splitting {
            Splitting::Strang => vec![dt / T::lit(2.0)],
            Splitting::Lie => vec![dt],
        };
        let phases = taus
            .into_iter()
            .map(|tau| TransportPhases {
                tau,
                table: phase_table(grid, tau),
            })
            .collect();
        Ok(Self {
            grid: *grid,
            plan: SpectralPlan::new(grid),
            riesz,
            config,
            dt,
            fp,
            phases,
        })
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn config(&self) -> &IntegratorConfig<T> {
        &self.config
    }

    /// Exact free transport `∂t f + v·∇x f = 0` over `tau`.
    pub fn step_transport(&self, f: &mut DistributionField<T>, tau: T) {
        let cached = self.phases.iter().find(|p| p.tau == tau);
        let owned;
        let table = match cached {
            Some(p) => &p.table,
            None => {
                owned = phase_table(&self.grid, tau);
                &owned
            }
        };
        let g = &self.grid;
        let d = g.dim;
        let nvp = g.v_points();
        let mut buf = spectral::to_complex(&f.values);
        self.plan.phase_x(&mut buf, false);
        for ix in 0..g.x_points() {
            let mi = g.unravel(ix, g.nx);
            for iv in 0..nvp {
                let vj = g.unravel(iv, g.nv);
                let mut ph = table[mi[0] * g.nv + vj[0]];
                for a in 1..d {
                    ph = ph * table[mi[a] * g.nv + vj[a]];
                }
                buf[ix * nvp + iv] = buf[ix * nvp + iv] * ph;
            }
        }
        self.plan.phase_x(&mut buf, true);
        for (x, c) in f.values.iter_mut().zip(&buf) {
            *x = c.re;
        }
    }

    /// Exact acceleration `∂t f + u(x)·∇v f = 0` over `tau` with `u` frozen.
    pub fn step_acceleration(&self, f: &mut DistributionField<T>, u: &[Vec<T>], tau: T) {
        let g = &self.grid;
        let d = g.dim;
        let nvp = g.v_points();
        let vshape = g.velocity_shape();
        let vplan = self.plan.v_plan();
        let zero = Complex::new(T::zero(), T::zero());
        let mut buf = vec![zero; nvp];
        let mut axis_phase = vec![zero; d * g.nv];
        for (ix, block) in f.values.chunks_mut(nvp).enumerate() {
            if u.iter().all(|c| c[ix] == T::zero()) {
                continue;
            }
            for a in 0..d {
                let shift = u[a][ix] * tau;
                for m in 0..g.nv {
                    let th = -(g.kv(m) * shift);
                    axis_phase[a * g.nv + m] = Complex::new(th.cos(), th.sin());
                }
            }
            for (c, &x) in buf.iter_mut().zip(block.iter()) {
                *c = Complex::new(x, T::zero());
            }
            for a in 0..d {
                spectral::transform_axis(&mut buf, &vshape, a, vplan, false);
            }
            for (iv, c) in buf.iter_mut().enumerate() {
                let mi = g.unravel(iv, g.nv);
                let mut ph = axis_phase[mi[0]];
                for a in 1..d {
                    ph = ph * axis_phase[a * g.nv + mi[a]];
                }
                *c = *c * ph;
            }
            for a in 0..d {
                spectral::transform_axis(&mut buf, &vshape, a, vplan, true);
            }
            for (x, c) in block.iter_mut().zip(&buf) {
                *x = c.re;
            }
        }
    }

    pub fn step_fokker_planck(&self, f: &mut DistributionField<T>) -> Result<()> {
        self.fp.apply(f)
    }

    /// Force `u = ∇Φ` of the current density.
    pub fn force(&self, f: &DistributionField<T>) -> Result<Vec<Vec<T>>> {
        self.riesz.force(&f.integrate_v())
    }

    /// One full split step.
    pub fn step(&self, f: &mut DistributionField<T>) -> Result<()> {
        let dt = self.dt;
        match self.config.splitting {
            Splitting::Strang => {
                let half = dt / T::lit(2.0);
                self.step_transport(f, half);
                let u = self.force(f)?;
                self.step_acceleration(f, &u, half);
                self.step_fokker_planck(f)?;
                self.step_acceleration(f, &u, half);
                self.step_transport(f, half);
            }
            Splitting::Lie => {
                self.step_transport(f, dt);
                let u = self.force(f)?;
                self.step_acceleration(f, &u, dt);
                self.step_fokker_planck(f)?;
            }
        }
        f.time = f.time + dt;
        Ok(())
    }

    /// Advances `f0` to `t_end`, recording diagnostics every
    /// `diag_interval` steps and accumulating the dissipation every step.
    pub fn run(
        &self,
        f0: &DistributionField<T>,
        diagnostics: &Diagnostics<T>,
        sink: &mut dyn DiagnosticsSink<T>,
    ) -> Result<RunResult<T>> {
        if f0.grid != self.grid {
            return Err(Error::Precondition("initial field grid differs from solver grid".into()));
        }
        if !f0.is_finite() {
            return Err(Error::Precondition("initial data is not finite".into()));
        }
        let (neg, min) = f0.negative_cells(self.config.neg_tol);
        if neg > 0 {
            return Err(Error::NegativeDensity {
                count: neg,
                min: min.as_f64(),
            });
        }
        let steps = self.config.steps();
        let interval = self.config.diag_interval;
        let max_rho = |f: &DistributionField<T>| f.integrate_v().into_iter().fold(T::zero(), T::max);
        let threshold = self.config.concentration_factor * max_rho(f0);
        let track = self.config.sigma > T::zero();

        let mut f = f0.clone();
        let mut series = Vec::new();
        let mut cumulative = T::zero();
        let mut d_prev = if track { diagnostics.fisher(&f) } else { T::zero() };
        let first = diagnostics.record(&f, cumulative)?;
        sink.record(&first, &f)?;
        series.push(first);

        let mut status = RunStatus::Completed;
        let mut taken = 0;
        for n in 1..=steps {
            let last_valid = f.clone();
            self.step(&mut f)?;
            if !f.is_finite() {
                f = last_valid;
                status = RunStatus::NanHalt;
                break;
            }
            taken = n;
            if track {
                let d_now = diagnostics.fisher(&f);
                cumulative = cumulative + (d_prev + d_now) * self.dt / T::lit(2.0);
                d_prev = d_now;
            }
            let halt = threshold > T::zero() && max_rho(&f) > threshold;
            if n % interval == 0 || n == steps || halt {
                let rec = diagnostics.record(&f, cumulative)?;
                sink.record(&rec, &f)?;
                series.push(rec);
            }
            if halt {
                status = RunStatus::ConcentrationHalt;
                break;
            }
        }
        Ok(RunResult {
            final_field: f,
            status,
            series,
            steps_taken: taken,
            dt: self.dt,
        })
    }
}

fn phase_table<T: Real>(g: &PhaseGrid<T>, tau: T) -> Vec<Complex<T>> {
    let mut table = Vec::with_capacity(g.nx * g.nv);
    for m in 0..g.nx {
        let k = g.kx(m);
        for j in 0..g.nv {
            let th = -(k * g.v_node(j) * tau);
            table.push(Complex::new(th.cos(), th.sin()));
        }
    }
    table
}

/// Convenience wrapper: builds the solver and diagnostics and runs.
pub fn run<T: Real>(
    f0: &DistributionField<T>,
    spec: &KernelSpec<T>,
    config: IntegratorConfig<T>,
    options: DiagnosticsOptions<T>,
    sink: &mut dyn DiagnosticsSink<T>,
) -> Result<RunResult<T>> {
    let solver = KineticSolver::new(&f0.grid, spec, config)?;
    let options = DiagnosticsOptions {
        sigma: config.sigma,
        neg_tol: config.neg_tol,
        ..options
    };
    let diagnostics = Diagnostics::new(&f0.grid, spec, options)?;
    solver.run(f0, &diagnostics, sink)
}
