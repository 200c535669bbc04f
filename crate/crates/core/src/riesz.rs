//! Riesz interaction: potential and force on the periodic grid via the
//! Fourier multiplier `κ|k|^{-β}`, kernel ↔ multiplier conversion, and the
//! free-space interaction energy `∫ρ K⋆ρ` for power-law kernels.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::closed_form::ClosedFormDensity;
use crate::error::{Error, Result};
use crate::grid::{PhaseGrid, SpectralPlan, MAX_GRID_DIM};
use crate::scalar::{ball_volume, sphere_area, Real};
use crate::spectral::{self, AxisPlan};

/// One power-law term `c / |x|^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm<T> {
    pub c: T,
    pub alpha: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum KernelForm<T> {
    /// `Φ = κ Λ^{-β} ρ`.
    Multiplier { kappa: T, beta: T },
    /// `Φ = Σ c_i |x|^{-α_i} ⋆ ρ`.
    KernelSum { terms: Vec<KernelTerm<T>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec<T> {
    #[serde(flatten)]
    pub form: KernelForm<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mollify_eps: Option<T>,
}

impl<T: Real> KernelSpec<T> {
    pub fn multiplier(kappa: T, beta: T) -> Self {
        Self {
            form: KernelForm::Multiplier { kappa, beta },
            mollify_eps: None,
        }
    }

    pub fn kernel_sum(terms: Vec<KernelTerm<T>>) -> Self {
        Self {
            form: KernelForm::KernelSum { terms },
            mollify_eps: None,
        }
    }

    pub fn single_term(c: T, alpha: T) -> Self {
        Self::kernel_sum(vec![KernelTerm { c, alpha }])
    }

    pub fn with_mollifier(mut self, eps: T) -> Self {
        self.mollify_eps = Some(eps);
        self
    }

    /// Checks the invariants for a problem in `dim` spatial dimensions.
    ///
    /// The multiplier only needs `β > 0`: with the zero mode removed the
    /// symbol is bounded on the torus even when `β ≥ d`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match &self.form {
            KernelForm::Multiplier { kappa, beta } => {
                if !(*beta > T::zero() && beta.is_finite()) || !kappa.is_finite() {
                    return Err(Error::Kernel(format!(
                        "multiplier needs finite kappa and beta > 0 (got kappa = {kappa}, beta = {beta})"
                    )));
                }
            }
            KernelForm::KernelSum { terms } => {
                if terms.is_empty() {
                    return Err(Error::Kernel("kernel sum has no terms".into()));
                }
                for t in terms {
                    if !t.c.is_finite() {
                        return Err(Error::Kernel(format!("non-finite coefficient {}", t.c)));
                    }
                    if !(t.alpha > T::zero()) {
                        return Err(Error::Kernel(format!("alpha = {} must be positive", t.alpha)));
                    }
                    if t.alpha >= T::of(dim) {
                        return Err(Error::DivergentKernel {
                            alpha: t.alpha.as_f64(),
                            dim,
                        });
                    }
                }
            }
        }
        if let Some(eps) = self.mollify_eps {
            if !(eps > T::zero()) {
                return Err(Error::Kernel(format!("mollify_eps = {eps} must be positive")));
            }
        }
        Ok(())
    }

    pub fn terms(&self) -> Option<&[KernelTerm<T>]> {
        match &self.form {
            KernelForm::KernelSum { terms } => Some(terms),
            KernelForm::Multiplier { .. } => None,
        }
    }

    /// Multiplier pairs `(κ_i, β_i)` driving the evolution force. Kernel
    /// sums are converted term by term.
    pub fn evolution_multipliers(&self, dim: usize) -> Result<Vec<(T, T)>> {
        match &self.form {
            KernelForm::Multiplier { kappa, beta } => Ok(vec![(*kappa, *beta)]),
            KernelForm::KernelSum { terms } => terms
                .iter()
                .map(|t| term_to_multiplier(*t, dim))
                .collect(),
        }
    }
}

/// `r(d, β) = Γ((d−β)/2) / (2^β π^{d/2} Γ(β/2))`, so that
/// `Λ^{-β}ρ = r(d, β) · |x|^{-(d−β)} ⋆ ρ` on R^d.
pub fn riesz_normalization<T: Real>(dim: usize, beta: T) -> T {
    let d = T::of(dim);
    let two = T::lit(2.0);
    ((d - beta) / two).gamma() / (two.powf(beta) * T::PI().powf(d / two) * (beta / two).gamma())
}

fn term_to_multiplier<T: Real>(term: KernelTerm<T>, dim: usize) -> Result<(T, T)> {
    let d = T::of(dim);
    if !(term.alpha > T::zero() && term.alpha < d) {
        return Err(Error::UnsupportedOrder(format!(
            "alpha = {} outside (0, {dim})",
            term.alpha
        )));
    }
    let beta = d - term.alpha;
    if beta > T::lit(2.0) {
        return Err(Error::UnsupportedOrder(format!(
            "alpha = {} gives beta = {beta} > 2",
            term.alpha
        )));
    }
    Ok((term.c / riesz_normalization(dim, beta), beta))
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelConversion<T> {
    Single(KernelSpec<T>),
    /// One multiplier per term of a multi-term kernel sum.
    PerTerm(Vec<KernelSpec<T>>),
}

/// Converts `c|x|^{-α}` into `κΛ^{-β}` with `β = d − α`, `κ = c / r(d, β)`.
pub fn kernel_to_multiplier<T: Real>(spec: &KernelSpec<T>, dim: usize) -> Result<KernelConversion<T>> {
    match &spec.form {
        KernelForm::Multiplier { .. } => Ok(KernelConversion::Single(spec.clone())),
        KernelForm::KernelSum { terms } => {
            if terms.is_empty() {
                return Err(Error::Kernel("kernel sum has no terms".into()));
            }
            let mut out = Vec::with_capacity(terms.len());
            for t in terms {
                let (kappa, beta) = term_to_multiplier(*t, dim)?;
                out.push(KernelSpec {
                    form: KernelForm::Multiplier { kappa, beta },
                    mollify_eps: spec.mollify_eps,
                });
            }
            if out.len() == 1 {
                Ok(KernelConversion::Single(out.pop().unwrap()))
            } else {
                Ok(KernelConversion::PerTerm(out))
            }
        }
    }
}

/// Inverse of [`kernel_to_multiplier`] for `β ∈ (0, min(d, 2)]`.
pub fn multiplier_to_kernel<T: Real>(spec: &KernelSpec<T>, dim: usize) -> Result<KernelSpec<T>> {
    match &spec.form {
        KernelForm::KernelSum { .. } => Ok(spec.clone()),
        KernelForm::Multiplier { kappa, beta } => {
            let d = T::of(dim);
            if !(*beta > T::zero() && *beta < d && *beta <= T::lit(2.0)) {
                return Err(Error::UnsupportedOrder(format!(
                    "beta = {beta} has no power-law kernel in d = {dim}"
                )));
            }
            Ok(KernelSpec {
                form: KernelForm::KernelSum {
                    terms: vec![KernelTerm {
                        c: *kappa * riesz_normalization(dim, *beta),
                        alpha: d - *beta,
                    }],
                },
                mollify_eps: spec.mollify_eps,
            })
        }
    }
}

/// Fourier transform of the unit-mass mollifier at `ξ`: a tensor product of
/// cubic B-splines supported in `[-1, 1]^d`, `Π sinc⁴(ξ_j / 4)`.
pub fn mollifier_symbol<T: Real>(xi: &[T]) -> T {
    xi.iter().fold(T::one(), |acc, &k| {
        let t = k / T::lit(4.0);
        let s = if t.abs() < T::lit(1e-8) {
            T::one() - t * t / T::lit(6.0)
        } else {
            t.sin() / t
        };
        acc * s.powi(4)
    })
}

/// Spectral potential/force solver on one grid.
#[derive(Debug, Clone)]
pub struct RieszSolver<T: Real> {
    plan: SpectralPlan<T>,
    symbol: Vec<T>,
}

impl<T: Real> RieszSolver<T> {
    /// Solver for a multiplier-form spec; kernel sums are rejected.
    pub fn new(grid: &PhaseGrid<T>, spec: &KernelSpec<T>) -> Result<Self> {
        spec.validate(grid.dim)?;
        match spec.form {
            KernelForm::Multiplier { kappa, beta } => {
                Ok(Self::from_multipliers(grid, &[(kappa, beta)], spec.mollify_eps))
            }
            KernelForm::KernelSum { .. } => Err(Error::KernelSumForm),
        }
    }

    /// Solver for the evolution force of any spec (kernel sums converted).
    pub fn for_evolution(grid: &PhaseGrid<T>, spec: &KernelSpec<T>) -> Result<Self> {
        spec.validate(grid.dim)?;
        let pairs = spec.evolution_multipliers(grid.dim)?;
        Ok(Self::from_multipliers(grid, &pairs, spec.mollify_eps))
    }

    pub fn from_multipliers(grid: &PhaseGrid<T>, pairs: &[(T, T)], mollify_eps: Option<T>) -> Self {
        let d = grid.dim;
        let symbol = (0..grid.x_points())
            .map(|ix| {
                let idx = grid.unravel(ix, grid.nx);
                if idx[..d].iter().any(|&m| spectral::is_nyquist(m, grid.nx)) {
                    return T::zero();
                }
                let k = grid.kx_vec(ix);
                let k2: T = k[..d].iter().map(|&c| c * c).sum();
                if k2 == T::zero() {
                    return T::zero();
                }
                let kn = k2.sqrt();
                let mut s = pairs
                    .iter()
                    .fold(T::zero(), |acc, &(kappa, beta)| acc + kappa * kn.powf(-beta));
                if let Some(eps) = mollify_eps {
                    let scaled: Vec<T> = k[..d].iter().map(|&c| c * eps).collect();
                    s = s * mollifier_symbol(&scaled);
                }
                s
            })
            .collect();
        Self {
            plan: SpectralPlan::new(grid),
            symbol,
        }
    }

    pub fn grid(&self) -> &PhaseGrid<T> {
        &self.plan.grid
    }

    fn potential_spectrum(&self, rho: &[T]) -> Result<Vec<Complex<T>>> {
        let mut spec = self.plan.spectral_forward_x(rho)?;
        for (c, &s) in spec.iter_mut().zip(&self.symbol) {
            *c = *c * s;
        }
        Ok(spec)
    }

    /// `Φ` with `Φ̂(k) = symbol(k) ρ̂(k)`; the zero mode and Nyquist planes
    /// are removed, so the force below is the exact gradient of `Φ`.
    pub fn potential(&self, rho: &[T]) -> Result<Vec<T>> {
        let spec = self.potential_spectrum(rho)?;
        self.plan.spectral_inverse_x_real(&spec)
    }

    /// `u = ∇Φ`, one spatial array per component. Modes on any Nyquist
    /// plane are dropped so that `k × û = 0` holds exactly.
    pub fn force(&self, rho: &[T]) -> Result<Vec<Vec<T>>> {
        let g = *self.grid();
        let spec = self.potential_spectrum(rho)?;
        let mut out = Vec::with_capacity(g.dim);
        for a in 0..g.dim {
            let mut comp: Vec<Complex<T>> = spec
                .iter()
                .enumerate()
                .map(|(ix, &c)| {
                    let idx = g.unravel(ix, g.nx);
                    if idx[..g.dim].iter().any(|&m| spectral::is_nyquist(m, g.nx)) {
                        Complex::new(T::zero(), T::zero())
                    } else {
                        c * Complex::new(T::zero(), g.kx(idx[a]))
                    }
                })
                .collect();
            self.plan.inverse_spatial_in_place(&mut comp);
            out.push(spectral::real_part(&comp));
        }
        Ok(out)
    }

    /// Torus quadratic form `∫ρΦ dx`.
    pub fn quadratic_form(&self, rho: &[T]) -> Result<T> {
        let phi = self.potential(rho)?;
        Ok(rho.iter().zip(&phi).map(|(&r, &p)| r * p).sum::<T>() * self.grid().x_cell())
    }
}

pub fn riesz_potential<T: Real>(grid: &PhaseGrid<T>, rho: &[T], spec: &KernelSpec<T>) -> Result<Vec<T>> {
    RieszSolver::new(grid, spec)?.potential(rho)
}

pub fn force_field<T: Real>(grid: &PhaseGrid<T>, rho: &[T], spec: &KernelSpec<T>) -> Result<Vec<Vec<T>>> {
    RieszSolver::new(grid, spec)?.force(rho)
}

/// Free-space truncated convolution `∫∫ρ(x)|x−y|^{-α}ρ(y)` on the grid,
/// evaluated with a zero-padded FFT (exactly the direct O(N²) sum). The
/// self-cell weight integrates `|x|^{-α}` over the ball of one cell volume.
#[derive(Debug, Clone)]
pub struct FreeSpaceInteraction<T: Real> {
    grid: PhaseGrid<T>,
    plan: AxisPlan<T>,
    terms: Vec<KernelTerm<T>>,
    kernels: Vec<Vec<Complex<T>>>,
}

impl<T: Real> FreeSpaceInteraction<T> {
    pub fn new(grid: &PhaseGrid<T>, terms: &[KernelTerm<T>]) -> Result<Self> {
        KernelSpec::kernel_sum(terms.to_vec()).validate(grid.dim)?;
        let d = grid.dim;
        let n2 = 2 * grid.nx;
        let mut planner = FftPlanner::new();
        let plan = AxisPlan::new(&mut planner, n2);
        let shape = vec![n2; d];
        let len = n2.pow(d as u32);
        let dx = grid.dx();
        let kernels = terms
            .iter()
            .map(|t| {
                let w0 = self_cell_weight(d, t.alpha, grid.x_cell());
                let mut buf: Vec<Complex<T>> = (0..len)
                    .map(|flat| {
                        let idx = unravel_padded(flat, n2, d);
                        let mut r2 = T::zero();
                        for &i in &idx[..d] {
                            if i == grid.nx {
                                return Complex::new(T::zero(), T::zero());
                            }
                            let o = T::lit(spectral::signed_index(i, n2) as f64) * dx;
                            r2 = r2 + o * o;
                        }
                        let w = if r2 == T::zero() {
                            w0
                        } else {
                            r2.powf(-t.alpha / T::lit(2.0))
                        };
                        Complex::new(w, T::zero())
                    })
                    .collect();
                for a in 0..d {
                    spectral::transform_axis(&mut buf, &shape, a, &plan, false);
                }
                buf
            })
            .collect();
        Ok(Self {
            grid: *grid,
            plan,
            terms: terms.to_vec(),
            kernels,
        })
    }

    pub fn terms(&self) -> &[KernelTerm<T>] {
        &self.terms
    }

    /// `J_i = ∫∫ρ(x)|x−y|^{-α_i}ρ(y)` for each term (coefficients excluded).
    pub fn term_energies(&self, rho: &[T]) -> Result<Vec<T>> {
        let g = &self.grid;
        if rho.len() != g.x_points() {
            return Err(Error::Shape {
                expected: g.x_points(),
                actual: rho.len(),
            });
        }
        let d = g.dim;
        let n2 = 2 * g.nx;
        let shape = vec![n2; d];
        let len = n2.pow(d as u32);
        let mut padded = vec![Complex::new(T::zero(), T::zero()); len];
        for (ix, &r) in rho.iter().enumerate() {
            padded[embed(g, ix, n2)] = Complex::new(r, T::zero());
        }
        for a in 0..d {
            spectral::transform_axis(&mut padded, &shape, a, &self.plan, false);
        }
        let weight = g.x_cell() * g.x_cell();
        let mut out = Vec::with_capacity(self.kernels.len());
        for kernel in &self.kernels {
            let mut conv: Vec<Complex<T>> =
                padded.iter().zip(kernel).map(|(a, b)| a * b).collect();
            for a in 0..d {
                spectral::transform_axis(&mut conv, &shape, a, &self.plan, true);
            }
            let e: T = rho
                .iter()
                .enumerate()
                .map(|(ix, &r)| r * conv[embed(g, ix, n2)].re)
                .sum();
            out.push(e * weight);
        }
        Ok(out)
    }

    /// `Σ c_i J_i`.
    pub fn energy(&self, rho: &[T]) -> Result<T> {
        Ok(self
            .term_energies(rho)?
            .iter()
            .zip(&self.terms)
            .map(|(&j, t)| t.c * j)
            .sum())
    }
}

fn unravel_padded(flat: usize, n: usize, d: usize) -> [usize; MAX_GRID_DIM] {
    if d == 1 {
        [flat, 0]
    } else {
        [flat / n, flat % n]
    }
}

fn embed<T: Real>(g: &PhaseGrid<T>, ix: usize, n2: usize) -> usize {
    let idx = g.unravel(ix, g.nx);
    if g.dim == 1 {
        idx[0]
    } else {
        idx[0] * n2 + idx[1]
    }
}

/// Average of `|x|^{-α}` over one cell, approximated by the ball of equal volume.
pub fn self_cell_weight<T: Real>(dim: usize, alpha: T, cell: T) -> T {
    let d = T::of(dim);
    let radius = (cell / ball_volume::<T>(dim)).powf(T::one() / d);
    sphere_area::<T>(dim) * radius.powf(d - alpha) / (d - alpha) / cell
}

/// Density handed to [`interaction_energy`].
#[derive(Debug, Clone, Copy)]
pub enum DensityInput<'a, T> {
    Grid { grid: &'a PhaseGrid<T>, rho: &'a [T] },
    ClosedForm(&'a ClosedFormDensity<T>),
}

/// Unsigned interaction integral `Σ c_i ∫ρ K_i⋆ρ` for a kernel-sum spec.
pub fn interaction_energy<T: Real>(input: DensityInput<'_, T>, spec: &KernelSpec<T>) -> Result<T> {
    let terms = spec.terms().ok_or(Error::KernelSumForm)?;
    match input {
        DensityInput::Grid { grid, rho } => FreeSpaceInteraction::new(grid, terms)?.energy(rho),
        DensityInput::ClosedForm(density) => {
            spec.validate(density.dim)?;
            let mut total = T::zero();
            for t in terms {
                total = total + t.c * density.interaction_term(t.alpha)?;
            }
            Ok(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_form::RadialProfile;
    use proptest::prelude::*;

    fn grid(n: usize, l: f64) -> PhaseGrid<f64> {
        PhaseGrid::new(1, l, 4.0, n, 8).unwrap()
    }

    #[test]
    fn single_mode_potential_and_force() {
        let g = PhaseGrid::<f64>::new(1, std::f64::consts::PI, 4.0, 64, 8).unwrap();
        let spec = KernelSpec::multiplier(1.0, 1.0);
        let rho: Vec<f64> = (0..g.nx).map(|i| (2.0 * g.x_node(i)).cos()).collect();
        let phi = riesz_potential(&g, &rho, &spec).unwrap();
        let u = force_field(&g, &rho, &spec).unwrap();
        for i in 0..g.nx {
            let x = g.x_node(i);
            assert!((phi[i] - 0.5 * (2.0 * x).cos()).abs() < 1e-12);
            assert!((u[0][i] + (2.0 * x).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_2d() {
        let g = PhaseGrid::<f64>::new(2, std::f64::consts::PI, 4.0, 16, 8).unwrap();
        let spec = KernelSpec::multiplier(2.0, 0.5);
        // k = (1, 1), |k| = √2.
        let rho: Vec<f64> = (0..g.x_points())
            .map(|ix| {
                let x = g.x_coords(ix);
                (x[0] + x[1]).cos()
            })
            .collect();
        let phi = riesz_potential(&g, &rho, &spec).unwrap();
        let u = force_field(&g, &rho, &spec).unwrap();
        let amp = 2.0 * 2f64.sqrt().powf(-0.5);
        for ix in 0..g.x_points() {
            let x = g.x_coords(ix);
            assert!((phi[ix] - amp * (x[0] + x[1]).cos()).abs() < 1e-12);
            for a in 0..2 {
                assert!((u[a][ix] + amp * (x[0] + x[1]).sin()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_density_has_no_potential() {
        let g = grid(32, 3.0);
        let spec = KernelSpec::multiplier(-1.5, 0.7);
        let phi = riesz_potential(&g, &vec![3.0; 32], &spec).unwrap();
        let u = force_field(&g, &vec![3.0; 32], &spec).unwrap();
        assert!(phi.iter().chain(&u[0]).all(|v| v.abs() < 1e-13));
    }

    #[test]
    fn kernel_sum_rejected_by_multiplier_path() {
        let g = grid(16, 1.0);
        let spec = KernelSpec::single_term(1.0, 0.5);
        assert!(matches!(
            riesz_potential(&g, &[0.0; 16], &spec),
            Err(Error::KernelSumForm)
        ));
    }

    #[test]
    fn dense_convolution_oracle() {
        // Independent path: inverse-transform the symbol to a periodic
        // kernel once, then convolve directly in O(n²).
        let n = 256;
        let g = grid(n, 20.0);
        let spec = KernelSpec::multiplier(1.0, 0.5);
        let rho: Vec<f64> = (0..n)
            .map(|i| (-(g.x_node(i) / 0.5).powi(2)).exp())
            .collect();
        let phi = riesz_potential(&g, &rho, &spec).unwrap();

        let kernel: Vec<f64> = (0..n)
            .map(|j| {
                (1..n)
                    .filter(|&m| m != n / 2)
                    .map(|m| {
                        let k = g.kx(m);
                        k.abs().powf(-0.5) * (k * j as f64 * g.dx()).cos()
                    })
                    .sum::<f64>()
                    / n as f64
            })
            .collect();
        let direct: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| kernel[(i + n - j) % n] * rho[j]).sum())
            .collect();
        let err: f64 = phi.iter().zip(&direct).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = direct.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err / norm < 1e-8, "relative L2 error {}", err / norm);
    }

    #[test]
    fn integration_by_parts_on_torus() {
        let g = PhaseGrid::<f64>::new(1, 4.0, 4.0, 64, 8).unwrap();
        let spec = KernelSpec::multiplier(0.8, 0.6);
        let rho: Vec<f64> = (0..g.nx)
            .map(|i| ((i * 37 + 11) % 17) as f64 / 17.0)
            .collect();
        let solver = RieszSolver::new(&g, &spec).unwrap();
        let phi = solver.potential(&rho).unwrap();
        let u = solver.force(&rho).unwrap();
        // ∇ρ spectrally, Nyquist dropped like the force.
        let plan = SpectralPlan::new(&g);
        let mut s = plan.spectral_forward_x(&rho).unwrap();
        for (m, c) in s.iter_mut().enumerate() {
            *c = if spectral::is_nyquist(m, g.nx) {
                Complex::new(0.0, 0.0)
            } else {
                *c * Complex::new(0.0, g.kx(m))
            };
        }
        let grad = plan.spectral_inverse_x_real(&s).unwrap();
        let lhs: f64 = rho.iter().zip(&u[0]).map(|(r, v)| r * v).sum::<f64>() * g.dx();
        let rhs: f64 = -phi.iter().zip(&grad).map(|(p, q)| p * q).sum::<f64>() * g.dx();
        assert!((lhs - rhs).abs() < 1e-8 * (1.0 + lhs.abs()));
    }

    #[test]
    fn force_is_curl_free_2d() {
        let g = PhaseGrid::<f64>::new(2, 3.0, 3.0, 16, 8).unwrap();
        let rho: Vec<f64> = (0..g.x_points()).map(|i| ((i * 31) % 13) as f64).collect();
        let u = force_field(&g, &rho, &KernelSpec::multiplier(1.0, 0.8)).unwrap();
        let plan = SpectralPlan::new(&g);
        let s0 = plan.spectral_forward_x(&u[0]).unwrap();
        let s1 = plan.spectral_forward_x(&u[1]).unwrap();
        for ix in 0..g.x_points() {
            let k = g.kx_vec(ix);
            let curl = s1[ix] * k[0] - s0[ix] * k[1];
            assert!(curl.norm() < 1e-9);
        }
    }

    #[test]
    fn mollified_force_converges_monotonically() {
        let g = PhaseGrid::<f64>::new(1, 6.0, 4.0, 128, 8).unwrap();
        let rho: Vec<f64> = (0..g.nx).map(|i| (-(g.x_node(i)).powi(2)).exp()).collect();
        let base = KernelSpec::multiplier(1.0, 0.8);
        let exact = force_field(&g, &rho, &base).unwrap();
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&eps| {
                let u = force_field(&g, &rho, &base.clone().with_mollifier(eps)).unwrap();
                u[0].iter().zip(&exact[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn kernel_conversion_examples() {
        let manev = kernel_to_multiplier(&KernelSpec::<f64>::single_term(1.0, 2.0), 3).unwrap();
        let KernelConversion::Single(KernelSpec { form: KernelForm::Multiplier { beta, kappa }, .. }) = manev else {
            panic!("expected single multiplier");
        };
        assert!((beta - 1.0).abs() < 1e-15);
        // r(3, 1) = Γ(1) / (2 π^{3/2} Γ(1/2)) = 1 / (2π²).
        assert!((kappa - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);

        let coulomb = kernel_to_multiplier(&KernelSpec::<f64>::single_term(1.0, 1.0), 3).unwrap();
        let KernelConversion::Single(KernelSpec { form: KernelForm::Multiplier { beta, kappa }, .. }) = coulomb else {
            panic!("expected single multiplier");
        };
        assert!((beta - 2.0).abs() < 1e-15);
        assert!((kappa - 4.0 * std::f64::consts::PI).abs() < 1e-12);

        let multi = KernelSpec::kernel_sum(vec![
            KernelTerm { c: 1.0, alpha: 2.0 },
            KernelTerm { c: 0.5, alpha: 1.5 },
        ]);
        assert!(matches!(
            kernel_to_multiplier(&multi, 3).unwrap(),
            KernelConversion::PerTerm(v) if v.len() == 2
        ));
        assert!(matches!(
            kernel_to_multiplier(&KernelSpec::single_term(1.0, 0.5), 3),
            Err(Error::UnsupportedOrder(_))
        ));
        assert!(matches!(
            kernel_to_multiplier(&KernelSpec::single_term(1.0, 3.5), 3),
            Err(Error::UnsupportedOrder(_))
        ));
    }

    proptest! {
        #[test]
        fn multiplier_kernel_round_trip(kappa in -5.0f64..5.0, beta in 0.05f64..1.95, d in 2usize..=3) {
            let spec = KernelSpec::multiplier(kappa, beta);
            let kernel = multiplier_to_kernel(&spec, d).unwrap();
            let KernelConversion::Single(back) = kernel_to_multiplier(&kernel, d).unwrap() else {
                panic!("single term expected");
            };
            let KernelForm::Multiplier { kappa: k2, beta: b2 } = back.form else { panic!() };
            prop_assert!((k2 - kappa).abs() < 1e-12 * (1.0 + kappa.abs()));
            prop_assert!((b2 - beta).abs() < 1e-14);
        }

        #[test]
        fn potential_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, seed in 0usize..100) {
            let g = grid(32, 2.0);
            let solver = RieszSolver::new(&g, &KernelSpec::multiplier(1.3, 0.9)).unwrap();
            let r1: Vec<f64> = (0..32).map(|i| (((i + seed) * 7) % 11) as f64).collect();
            let r2: Vec<f64> = (0..32).map(|i| ((i * seed + 3) % 5) as f64).collect();
            let comb: Vec<f64> = r1.iter().zip(&r2).map(|(x, y)| a * x + b * y).collect();
            let (p1, p2, pc) = (solver.potential(&r1).unwrap(), solver.potential(&r2).unwrap(), solver.potential(&comb).unwrap());
            let scale = p1.iter().chain(&p2).fold(1.0f64, |m, v| m.max(v.abs()));
            for i in 0..32 {
                prop_assert!((pc[i] - a * p1[i] - b * p2[i]).abs() < 1e-12 * scale * (1.0 + a.abs() + b.abs()));
            }
        }

        #[test]
        fn grid_interaction_reflection_symmetric(seed in 0usize..200) {
            let g = PhaseGrid::<f64>::new(2, 2.0, 2.0, 8, 8).unwrap();
            let rho: Vec<f64> = (0..64).map(|i| (((i + 1) * (seed + 3)) % 7) as f64).collect();
            // Index reversal is x ↦ −x − dx: a reflection composed with a translation.
            let refl: Vec<f64> = (0..64)
                .map(|ix| {
                    let (a, b) = (ix / 8, ix % 8);
                    rho[(7 - a) * 8 + (7 - b)]
                })
                .collect();
            let fs = FreeSpaceInteraction::new(&g, &[KernelTerm { c: 1.0, alpha: 1.2 }]).unwrap();
            let (e1, e2) = (fs.energy(&rho).unwrap(), fs.energy(&refl).unwrap());
            prop_assert!((e1 - e2).abs() <= 1e-10 * e1.abs(), "{e1} {e2}");
        }
    }

    #[test]
    fn grid_interaction_matches_direct_sum() {
        let g = PhaseGrid::<f64>::new(2, 2.0, 2.0, 8, 8).unwrap();
        let rho: Vec<f64> = (0..64).map(|i| ((i * 13) % 9) as f64 / 9.0).collect();
        let alpha = 1.3;
        let fs = FreeSpaceInteraction::new(&g, &[KernelTerm { c: 1.0, alpha }]).unwrap();
        let w0 = self_cell_weight(2, alpha, g.x_cell());
        let mut direct = 0.0;
        for i in 0..64 {
            for j in 0..64 {
                let (xi, xj) = (g.x_coords(i), g.x_coords(j));
                let r2 = (xi[0] - xj[0]).powi(2) + (xi[1] - xj[1]).powi(2);
                let w = if i == j { w0 } else { r2.powf(-alpha / 2.0) };
                direct += rho[i] * rho[j] * w;
            }
        }
        direct *= g.x_cell().powi(2);
        assert!((fs.energy(&rho).unwrap() - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn point_mass_surrogates_cross_term() {
        // Two narrow unit Gaussians at ±r/2: the cross term tends to 2c/r^α.
        let (r, alpha, c) = (1.0, 0.5, 1.5);
        let s = r / 50.0;
        let g = PhaseGrid::<f64>::new(1, 2.0, 1.0, 2048, 8).unwrap();
        let bump = |x0: f64| -> Vec<f64> {
            (0..g.nx)
                .map(|i| {
                    let z = (g.x_node(i) - x0) / s;
                    (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
                })
                .collect()
        };
        let (a, b) = (bump(-r / 2.0), bump(r / 2.0));
        let both: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + q).collect();
        let spec = KernelSpec::single_term(c, alpha);
        let e = |rho: &[f64]| interaction_energy(DensityInput::Grid { grid: &g, rho }, &spec).unwrap();
        let cross = e(&both) - e(&a) - e(&b);
        let limit = 2.0 * c / r.powf(alpha);
        assert!((cross - limit).abs() < 0.01 * limit, "{cross} vs {limit}");
    }

    #[test]
    fn divergent_kernel_rejected() {
        let g = grid(16, 1.0);
        let spec = KernelSpec::single_term(1.0, 1.0);
        assert!(matches!(
            interaction_energy(DensityInput::Grid { grid: &g, rho: &[0.0; 16] }, &spec),
            Err(Error::DivergentKernel { .. })
        ));
        let zero = interaction_energy(
            DensityInput::Grid { grid: &g, rho: &[0.0; 16] },
            &KernelSpec::single_term(1.0, 0.4),
        )
        .unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn closed_form_path_matches_gaussian_formula() {
        // ∫∫ρρ|x−y|^{-α} for unit N(0, s²) in R^d: s^{-α} 2^{-α} Γ((d−α)/2) / Γ(d/2).
        for (d, alpha, s) in [(1usize, 0.5f64, 0.7f64), (3, 2.0, 1.0), (3, 1.3, 0.4), (2, 1.1, 1.2)] {
            let density = ClosedFormDensity::separable(
                d,
                1.0,
                RadialProfile::Gaussian { std: s },
                RadialProfile::Gaussian { std: 1.0 },
            )
            .unwrap();
            let got = interaction_energy(DensityInput::ClosedForm(&density), &KernelSpec::single_term(1.0, alpha)).unwrap();
            let expect = s.powf(-alpha) * 2f64.powf(-alpha) * libm::tgamma((d as f64 - alpha) / 2.0)
                / libm::tgamma(d as f64 / 2.0);
            assert!((got - expect).abs() < 1e-7 * expect, "d={d} alpha={alpha}: {got} vs {expect}");
        }
    }
}
