//! Functionals of a phase-space snapshot: mass, energies, entropy, moments of
//! inertia, Fisher-type dissipation, weighted Sobolev norms and tail decay.

use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DistributionField, PhaseGrid, SpectralPlan, DEFAULT_NEG_TOL};
use crate::integrator::support_radius;
use crate::riesz::{FreeSpaceInteraction, KernelSpec, KernelTerm, RieszSolver};
use crate::scalar::Real;
use crate::spectral;

/// Which interaction path produced `interaction`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InteractionProvenance {
    TorusMultiplier,
    FreeSpaceKernel,
}

impl InteractionProvenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::TorusMultiplier => "torus-multiplier",
            Self::FreeSpaceKernel => "free-space-kernel",
        }
    }
}

/// One weighted Sobolev norm `‖f‖_{H^{s,2N}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevValue<T> {
    pub s: T,
    pub n: u32,
    pub value: T,
}

/// All monitored functionals at one time. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord<T> {
    pub time: T,
    pub mass: T,
    /// `½∬|v|²f`.
    pub kinetic: T,
    /// `∫ρK⋆ρ`, unsigned.
    pub interaction: T,
    pub interaction_provenance: InteractionProvenance,
    /// `∬f ln f`.
    pub entropy: T,
    /// `kinetic + entropy − ½ interaction`.
    pub total_e: T,
    /// `kinetic − ½ interaction`.
    pub tilde_e: T,
    /// `½∬|x|²f`.
    pub inertia_i: T,
    /// `∬(x·v)f`.
    pub inertia_iprime: T,
    /// `σ∬(1/f)|∇v f + vf|²`.
    pub fisher_dissipation: T,
    /// Time integral of `fisher_dissipation` since the start of the run.
    pub cumulative_dissipation: T,
    /// Force contribution to `I''`: `∫ρ x·∇Φ` on the torus, or
    /// `−½Σ c_i α_i ∫ρ K_i⋆ρ` for a free-space kernel sum.
    pub virial_force_term: T,
    pub support_radius_v: T,
    pub boundary_decay: T,
    pub boundary_mass_fraction: T,
    pub max_density: T,
    pub negative_cells: usize,
    pub sobolev_norms: Vec<SobolevValue<T>>,
}

impl<T: Real> DiagnosticsRecord<T> {
    /// `I'' ` predicted by the virial identity.
    pub fn virial_rhs(&self, sigma: T) -> T {
        T::lit(2.0) * self.kinetic + self.virial_force_term - sigma * self.inertia_iprime
    }

    /// CSV header matching [`Self::csv_row`].
    pub fn csv_header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "time",
            "mass",
            "kinetic",
            "interaction",
            "interaction_provenance",
            "entropy",
            "total_e",
            "tilde_e",
            "inertia_i",
            "inertia_iprime",
            "fisher_dissipation",
            "cumulative_dissipation",
            "virial_force_term",
            "support_radius_v",
            "boundary_decay",
            "boundary_mass_fraction",
            "max_density",
            "negative_cells",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        for sv in &self.sobolev_norms {
            h.push(format!("sobolev_s{}_n{}", sv.s, sv.n));
        }
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let num = |x: T| format!("{:e}", x.as_f64());
        let mut r = vec![
            num(self.time),
            num(self.mass),
            num(self.kinetic),
            num(self.interaction),
            self.interaction_provenance.as_str().to_string(),
            num(self.entropy),
            num(self.total_e),
            num(self.tilde_e),
            num(self.inertia_i),
            num(self.inertia_iprime),
            num(self.fisher_dissipation),
            num(self.cumulative_dissipation),
            num(self.virial_force_term),
            num(self.support_radius_v),
            num(self.boundary_decay),
            num(self.boundary_mass_fraction),
            num(self.max_density),
            self.negative_cells.to_string(),
        ];
        r.extend(self.sobolev_norms.iter().map(|s| num(s.value)));
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsOptions<T> {
    pub sigma: T,
    /// Samples below `-neg_tol` count as negative cells.
    pub neg_tol: T,
    /// Fail with [`Error::NegativeDensity`] instead of counting.
    pub strict_negativity: bool,
    /// Absolute floor below which cells are left out of the dissipation.
    pub fisher_floor: T,
    /// Relative floor (times `max f`) for the same purpose.
    pub fisher_rel_floor: T,
    pub support_threshold: T,
    /// `(s, N)` pairs.
    pub sobolev: Vec<(T, u32)>,
    pub decay_check: bool,
}

impl<T: Real> Default for DiagnosticsOptions<T> {
    fn default() -> Self {
        Self {
            sigma: T::zero(),
            neg_tol: T::lit(DEFAULT_NEG_TOL),
            strict_negativity: false,
            fisher_floor: T::lit(1e-30),
            fisher_rel_floor: T::lit(1e-13),
            support_threshold: T::lit(1e-10),
            sobolev: Vec::new(),
            decay_check: true,
        }
    }
}

#[derive(Debug, Clone)]
enum InteractionPath<T: Real> {
    Torus,
    Free {
        fs: FreeSpaceInteraction<T>,
        terms: Vec<KernelTerm<T>>,
    },
}

/// Reusable evaluator for one grid and kernel.
#[derive(Debug, Clone)]
pub struct Diagnostics<T: Real> {
    grid: PhaseGrid<T>,
    plan: SpectralPlan<T>,
    force: RieszSolver<T>,
    path: InteractionPath<T>,
    pub options: DiagnosticsOptions<T>,
}

impl<T: Real> Diagnostics<T> {
    pub fn new(grid: &PhaseGrid<T>, spec: &KernelSpec<T>, options: DiagnosticsOptions<T>) -> Result<Self> {
        let force = RieszSolver::for_evolution(grid, spec)?;
        let path = match spec.terms() {
            Some(terms) => InteractionPath::Free {
                fs: FreeSpaceInteraction::new(grid, terms)?,
                terms: terms.to_vec(),
            },
            None => InteractionPath::Torus,
        };
        for &(s, _) in &options.sobolev {
            if !(s >= T::zero()) {
                return Err(Error::Precondition(format!("sobolev order s = {s} must be >= 0")));
            }
        }
        Ok(Self {
            grid: *grid,
            plan: SpectralPlan::new(grid),
            force,
            path,
            options,
        })
    }

    pub fn grid(&self) -> &PhaseGrid<T> {
        &self.grid
    }

    pub fn provenance(&self) -> InteractionProvenance {
        match self.path {
            InteractionPath::Torus => InteractionProvenance::TorusMultiplier,
            InteractionPath::Free { .. } => InteractionProvenance::FreeSpaceKernel,
        }
    }

    /// `(∫ρK⋆ρ, virial force term)` for a density.
    pub fn interaction(&self, rho: &[T]) -> Result<(T, T)> {
        match &self.path {
            InteractionPath::Torus => {
                let energy = self.force.quadratic_form(rho)?;
                let u = self.force.force(rho)?;
                let g = &self.grid;
                let mut virial = T::zero();
                for (ix, &r) in rho.iter().enumerate() {
                    let x = g.x_coords(ix);
                    for a in 0..g.dim {
                        virial = virial + r * x[a] * u[a][ix];
                    }
                }
                Ok((energy, virial * g.x_cell()))
            }
            InteractionPath::Free { fs, terms } => {
                let js = fs.term_energies(rho)?;
                let mut energy = T::zero();
                let mut virial = T::zero();
                for (j, t) in js.iter().zip(terms) {
                    energy = energy + t.c * *j;
                    virial = virial - t.c * t.alpha * *j / T::lit(2.0);
                }
                Ok((energy, virial))
            }
        }
    }

    /// `σ∬(1/f)|∇v f + vf|²` with `∇v f` computed spectrally.
    pub fn fisher(&self, f: &DistributionField<T>) -> T {
        let sigma = self.options.sigma;
        if sigma == T::zero() {
            return T::zero();
        }
        let g = &self.grid;
        let d = g.dim;
        let nvp = g.v_points();
        let floor = self
            .options
            .fisher_floor
            .max(self.options.fisher_rel_floor * f.max_value());
        let vshape = g.velocity_shape();
        let mut acc = T::zero();
        let mut spec_buf = vec![Complex::new(T::zero(), T::zero()); nvp];
        let mut grad = vec![Complex::new(T::zero(), T::zero()); nvp];
        let mut flux = vec![T::zero(); nvp];
        for block in f.values.chunks(nvp) {
            for (c, &x) in spec_buf.iter_mut().zip(block) {
                *c = Complex::new(x, T::zero());
            }
            for a in 0..d {
                spectral::transform_axis(&mut spec_buf, &vshape, a, self.plan.v_plan(), false);
            }
            flux.iter_mut().for_each(|x| *x = T::zero());
            for a in 0..d {
                for (iv, gr) in grad.iter_mut().enumerate() {
                    let m = g.unravel(iv, g.nv)[a];
                    *gr = if spectral::is_nyquist(m, g.nv) {
                        Complex::new(T::zero(), T::zero())
                    } else {
                        spec_buf[iv] * Complex::new(T::zero(), g.kv(m))
                    };
                }
                for b in 0..d {
                    spectral::transform_axis(&mut grad, &vshape, b, self.plan.v_plan(), true);
                }
                for (iv, fl) in flux.iter_mut().enumerate() {
                    let v = g.v_coords(iv)[a];
                    let c = grad[iv].re + v * block[iv];
                    *fl = *fl + c * c;
                }
            }
            for (fl, &x) in flux.iter().zip(block) {
                if x > floor {
                    acc = acc + *fl / x;
                }
            }
        }
        sigma * acc * g.cell_volume()
    }

    /// Tail quantity `f(|v||x|² + (|v|+|x|)|v|² + |ln f| + |∇K⋆ρ|)`,
    /// maximized over nodes in the outer 10% of any axis.
    pub fn decay(&self, f: &DistributionField<T>, u: &[Vec<T>]) -> T {
        let g = &self.grid;
        let nvp = g.v_points();
        let mut worst = T::zero();
        for ix in 0..g.x_points() {
            let x_outer = g.in_outer_shell(ix, g.nx, 0.1);
            let x = g.x_norm_sq(ix).sqrt();
            let un = u.iter().map(|c| c[ix] * c[ix]).sum::<T>().sqrt();
            for iv in 0..nvp {
                if !(x_outer || g.in_outer_shell(iv, g.nv, 0.1)) {
                    continue;
                }
                let val = f.values[ix * nvp + iv];
                if !(val > T::zero()) {
                    continue;
                }
                let v2 = g.v_norm_sq(iv);
                let v = v2.sqrt();
                let q = v * x * x + (v + x) * v2 + val.ln().abs() + un;
                worst = worst.max(val * q);
            }
        }
        worst
    }

    /// Squared components `(‖wf‖², ‖wΛ^s_x f‖², ‖wΛ^s_v f‖²)` with
    /// `w = ⟨v⟩^{2N}`.
    pub fn sobolev_components(&self, f: &DistributionField<T>, s: T, n: u32) -> [T; 3] {
        let g = &self.grid;
        let d = g.dim;
        let nvp = g.v_points();
        let weight: Vec<T> = (0..nvp)
            .map(|iv| (T::one() + g.v_norm_sq(iv)).powi(n as i32))
            .collect();
        let cell = g.cell_volume();
        let weighted = |vals: &[T]| -> T {
            vals.iter()
                .enumerate()
                .map(|(i, &x)| {
                    let y = weight[i % nvp] * x;
                    y * y
                })
                .sum::<T>()
                * cell
        };
        let plain = weighted(&f.values);
        if s == T::zero() {
            return [plain, plain, plain];
        }
        let mut bx = spectral::to_complex(&f.values);
        self.plan.phase_x(&mut bx, false);
        let xpts = g.x_points();
        for (i, c) in bx.iter_mut().enumerate() {
            let ix = i / nvp;
            let k = g.kx_vec(ix);
            let kn = k[..d].iter().map(|&c| c * c).sum::<T>().sqrt();
            *c = *c * kn.powf(s);
        }
        debug_assert_eq!(bx.len(), xpts * nvp);
        self.plan.phase_x(&mut bx, true);
        let lx = weighted(&spectral::real_part(&bx));

        let mut bv = spectral::to_complex(&f.values);
        self.plan.phase_v(&mut bv, false);
        for (i, c) in bv.iter_mut().enumerate() {
            let k = g.kv_vec(i % nvp);
            let kn = k[..d].iter().map(|&c| c * c).sum::<T>().sqrt();
            *c = *c * kn.powf(s);
        }
        self.plan.phase_v(&mut bv, true);
        let lv = weighted(&spectral::real_part(&bv));
        [plain, lx, lv]
    }

    pub fn sobolev_norm(&self, f: &DistributionField<T>, s: T, n: u32) -> T {
        let [a, b, c] = self.sobolev_components(f, s, n);
        (a + b + c).sqrt()
    }

    /// Full record; `cumulative_dissipation` is carried by the caller.
    pub fn record(&self, f: &DistributionField<T>, cumulative_dissipation: T) -> Result<DiagnosticsRecord<T>> {
        let g = &self.grid;
        if f.grid != *g {
            return Err(Error::Precondition("field grid differs from diagnostics grid".into()));
        }
        let neg_tol = self.options.neg_tol;
        let (negative_cells, min) = f.negative_cells(neg_tol);
        if negative_cells > 0 && self.options.strict_negativity {
            return Err(Error::NegativeDensity {
                count: negative_cells,
                min: min.as_f64(),
            });
        }
        let nvp = g.v_points();
        let mut kinetic = T::zero();
        let mut entropy = T::zero();
        let mut inertia = T::zero();
        let mut iprime = T::zero();
        for ix in 0..g.x_points() {
            let x = g.x_coords(ix);
            let x2 = g.x_norm_sq(ix);
            for iv in 0..nvp {
                let val = f.values[ix * nvp + iv];
                let v = g.v_coords(iv);
                kinetic = kinetic + g.v_norm_sq(iv) * val;
                inertia = inertia + x2 * val;
                let xv: T = (0..g.dim).map(|a| x[a] * v[a]).sum();
                iprime = iprime + xv * val;
                if val > neg_tol {
                    entropy = entropy + val * val.ln();
                }
            }
        }
        let cell = g.cell_volume();
        let half = T::lit(0.5);
        let kinetic = half * kinetic * cell;
        let rho = f.integrate_v();
        let (interaction, virial_force_term) = self.interaction(&rho)?;
        let entropy = entropy * cell;
        let boundary_decay = if self.options.decay_check {
            let u = self.force.force(&rho)?;
            self.decay(f, &u)
        } else {
            T::zero()
        };
        let sobolev_norms = self
            .options
            .sobolev
            .iter()
            .map(|&(s, n)| SobolevValue {
                s,
                n,
                value: self.sobolev_norm(f, s, n),
            })
            .collect();
        Ok(DiagnosticsRecord {
            time: f.time,
            mass: f.mass(),
            kinetic,
            interaction,
            interaction_provenance: self.provenance(),
            entropy,
            total_e: kinetic + entropy - half * interaction,
            tilde_e: kinetic - half * interaction,
            inertia_i: half * inertia * cell,
            inertia_iprime: iprime * cell,
            fisher_dissipation: self.fisher(f),
            cumulative_dissipation,
            virial_force_term,
            support_radius_v: support_radius(f, self.options.support_threshold),
            boundary_decay,
            boundary_mass_fraction: f.boundary_mass_fraction(),
            max_density: rho.iter().copied().fold(T::zero(), T::max),
            negative_cells,
            sobolev_norms,
        })
    }
}

/// One-shot record with strict negativity checking.
pub fn compute_record<T: Real>(f: &DistributionField<T>, spec: &KernelSpec<T>, sigma: T) -> Result<DiagnosticsRecord<T>> {
    let options = DiagnosticsOptions {
        sigma,
        strict_negativity: true,
        ..DiagnosticsOptions::default()
    };
    Diagnostics::new(&f.grid, spec, options)?.record(f, T::zero())
}

pub fn sobolev_norm<T: Real>(f: &DistributionField<T>, s: T, n: u32) -> Result<T> {
    if !(s >= T::zero()) {
        return Err(Error::Precondition(format!("sobolev order s = {s} must be >= 0")));
    }
    let spec = KernelSpec::multiplier(T::zero(), T::one());
    let diag = Diagnostics::new(&f.grid, &spec, DiagnosticsOptions::default())?;
    Ok(diag.sobolev_norm(f, s, n))
}

pub fn decay_check<T: Real>(f: &DistributionField<T>, spec: &KernelSpec<T>) -> Result<T> {
    let diag = Diagnostics::new(&f.grid, spec, DiagnosticsOptions::default())?;
    let u = diag.force.force(&f.integrate_v())?;
    Ok(diag.decay(f, &u))
}
