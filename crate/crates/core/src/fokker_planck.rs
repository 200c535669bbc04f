//! Linear Fokker–Planck step `∂t f = σ ∇v·(∇v f + v f)` applied independently
//! at every spatial node.
//!
//! Two discretizations are provided. [`FpScheme::ExactOu`] applies the exact
//! Ornstein–Uhlenbeck transition in velocity-Fourier variables,
//! `f̂(μ) ← f̂(μ e^{−σdt}) exp(−|μ|²(1 − e^{−2σdt})/2)`, evaluating the
//! rescaled spectrum with a chirp-z transform. [`FpScheme::ImplicitFd`] is a
//! backward-Euler finite-volume scheme whose flux vanishes on the discrete
//! Maxwellian. Both conserve the discrete mass to round-off.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DistributionField, PhaseGrid};
use crate::scalar::Real;
use crate::spectral::AxisPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum FpScheme {
    #[default]
    #[serde(rename = "exact_ou", alias = "ExactOU")]
    ExactOu,
    #[serde(rename = "implicit_fd", alias = "ImplicitFD")]
    ImplicitFd,
}

/// Bluestein evaluation of `Z_p = Σ_j x_j e^{−2πi q p j / n}` for `p < n`.
#[derive(Debug, Clone)]
struct ChirpZ<T: Real> {
    n: usize,
    plan: AxisPlan<T>,
    /// `e^{−iπ q j²/n}`, applied to the input.
    chirp: Vec<Complex<T>>,
    /// Forward transform of the length-2n kernel `e^{iπ q k²/n}`.
    kernel: Vec<Complex<T>>,
}

fn cis<T: Real>(phase: f64) -> Complex<T> {
    Complex::new(T::lit(phase.cos()), T::lit(phase.sin()))
}

impl<T: Real> ChirpZ<T> {
    fn new(planner: &mut FftPlanner<T>, n: usize, q: f64) -> Self {
        let m = 2 * n;
        let plan = AxisPlan::new(planner, m);
        let pi = std::f64::consts::PI;
        let nf = n as f64;
        let chirp = (0..n)
            .map(|j| cis(-pi * q * (j * j) as f64 / nf))
            .collect();
        let mut kernel = vec![Complex::new(T::zero(), T::zero()); m];
        for k in 0..n {
            let w = cis(pi * q * (k * k) as f64 / nf);
            kernel[k] = w;
            if k > 0 {
                kernel[m - k] = w;
            }
        }
        plan.forward_lines(&mut kernel);
        Self {
            n,
            plan,
            chirp,
            kernel,
        }
    }

    /// `out[p] = e^{iπ q p²/n} Z_p`; the caller folds the output chirp into
    /// its own post-factor.
    fn apply(&self, input: &[Complex<T>], work: &mut [Complex<T>]) {
        let n = self.n;
        for (w, (x, c)) in work.iter_mut().zip(input.iter().zip(&self.chirp)) {
            *w = x * c;
        }
        work[n..].iter_mut().for_each(|w| *w = Complex::new(T::zero(), T::zero()));
        self.plan.forward_lines(work);
        for (w, k) in work.iter_mut().zip(&self.kernel) {
            *w = *w * k;
        }
        self.plan.inverse_lines(work);
    }
}

/// Exact OU transition along one velocity axis.
#[derive(Debug, Clone)]
struct OuAxis<T: Real> {
    n: usize,
    chirp: ChirpZ<T>,
    /// Input phase `e^{iπ q j}`.
    pre: Vec<Complex<T>>,
    /// Output factor per FFT bin, including damping and the output chirp.
    post: Vec<Complex<T>>,
    plan: AxisPlan<T>,
}

impl<T: Real> OuAxis<T> {
    fn new(planner: &mut FftPlanner<T>, grid: &PhaseGrid<T>, tau: f64) -> Self {
        let n = grid.nv;
        let nf = n as f64;
        let q = (-tau).exp();
        let damp = -(-2.0 * tau).exp_m1() / 2.0;
        let lv = grid.lv.as_f64();
        let pi = std::f64::consts::PI;
        let pre = (0..n).map(|j| cis(pi * q * j as f64)).collect();
        let mut post = vec![Complex::new(T::zero(), T::zero()); n];
        // Output index p corresponds to the signed frequency m = p − n/2; the
        // unpaired m = −n/2 bin (p = 0) is dropped.
        for p in 1..n {
            let m = p as f64 - nf / 2.0;
            let k = pi * m / lv;
            let phase = -pi * q * (p * p) as f64 / nf + pi * m * q + pi * m;
            let bin = (p + n / 2) % n;
            post[bin] = cis::<T>(phase) * T::lit((-damp * k * k).exp());
        }
        Self {
            n,
            chirp: ChirpZ::new(planner, n, q),
            pre,
            post,
            plan: AxisPlan::new(planner, n),
        }
    }

    fn apply(&self, line: &mut [T], work: &mut [Complex<T>], buf: &mut [Complex<T>]) {
        let n = self.n;
        for ((b, &x), c) in buf.iter_mut().zip(line.iter()).zip(&self.pre) {
            *b = c * x;
        }
        self.chirp.apply(buf, work);
        for p in 0..n {
            let bin = (p + n / 2) % n;
            buf[bin] = work[p] * self.post[bin];
        }
        self.plan.inverse_lines(buf);
        for (x, b) in line.iter_mut().zip(buf.iter()) {
            *x = b.re;
        }
    }
}

/// Pre-factored tridiagonal system `(I − σdt L) f' = f` along one axis.
#[derive(Debug, Clone)]
struct FdAxis<T> {
    lower: Vec<T>,
    diag: Vec<T>,
    upper: Vec<T>,
    /// Thomas forward-sweep factors.
    c_prime: Vec<T>,
    inv_denom: Vec<T>,
}

impl<T: Real> FdAxis<T> {
    fn new(grid: &PhaseGrid<T>, sigma: T, dt: T) -> Result<Self> {
        let n = grid.nv;
        let dv = grid.dv();
        let lambda = sigma * dt / (dv * dv);
        // e_j = sqrt(M_j / M_{j+1}) on the face between nodes j and j+1.
        let e: Vec<T> = (0..n - 1)
            .map(|j| {
                let (a, b) = (grid.v_node(j), grid.v_node(j + 1));
                ((b * b - a * a) / T::lit(4.0)).exp()
            })
            .collect();
        let mut lower = vec![T::zero(); n];
        let mut diag = vec![T::one(); n];
        let mut upper = vec![T::zero(); n];
        for j in 0..n {
            if j + 1 < n {
                diag[j] = diag[j] + lambda / e[j];
                upper[j] = -lambda * e[j];
            }
            if j > 0 {
                diag[j] = diag[j] + lambda * e[j - 1];
                lower[j] = -lambda / e[j - 1];
            }
        }
        let mut c_prime = vec![T::zero(); n];
        let mut inv_denom = vec![T::zero(); n];
        for j in 0..n {
            let denom = diag[j] - if j > 0 { lower[j] * c_prime[j - 1] } else { T::zero() };
            if !(denom.abs() > T::zero()) || !denom.is_finite() {
                return Err(Error::LinearSolve {
                    residual: f64::INFINITY,
                });
            }
            inv_denom[j] = T::one() / denom;
            c_prime[j] = upper[j] * inv_denom[j];
        }
        Ok(Self {
            lower,
            diag,
            upper,
            c_prime,
            inv_denom,
        })
    }

    fn solve(&self, line: &mut [T], rhs: &mut [T]) -> Result<()> {
        let n = line.len();
        rhs.copy_from_slice(line);
        line[0] = rhs[0] * self.inv_denom[0];
        for j in 1..n {
            line[j] = (rhs[j] - self.lower[j] * line[j - 1]) * self.inv_denom[j];
        }
        for j in (0..n - 1).rev() {
            line[j] = line[j] - self.c_prime[j] * line[j + 1];
        }
        let mut residual = T::zero();
        let mut scale = T::zero();
        for j in 0..n {
            let mut r = self.diag[j] * line[j] - rhs[j];
            if j > 0 {
                r = r + self.lower[j] * line[j - 1];
            }
            if j + 1 < n {
                r = r + self.upper[j] * line[j + 1];
            }
            residual = residual.max(r.abs());
            scale = scale.max(rhs[j].abs());
        }
        let tol = T::epsilon().sqrt() * scale.max(T::min_positive_value());
        if !(residual <= tol) {
            return Err(Error::LinearSolve {
                residual: (residual / scale.max(T::min_positive_value())).as_f64(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Kernel<T: Real> {
    Identity,
    Exact(OuAxis<T>),
    Fd(FdAxis<T>),
}

/// Fokker–Planck propagator for a fixed `(grid, σ, dt)`.
#[derive(Debug, Clone)]
pub struct FokkerPlanck<T: Real> {
    grid: PhaseGrid<T>,
    pub sigma: T,
    pub dt: T,
    pub scheme: FpScheme,
    kernel: Kernel<T>,
}

impl<T: Real> FokkerPlanck<T> {
    pub fn new(grid: &PhaseGrid<T>, sigma: T, dt: T, scheme: FpScheme) -> Result<Self> {
        if !(sigma >= T::zero()) || !sigma.is_finite() {
            return Err(Error::Precondition(format!("sigma = {sigma} must be >= 0")));
        }
        if !(dt >= T::zero()) || !dt.is_finite() {
            return Err(Error::Precondition(format!("dt = {dt} must be >= 0")));
        }
        let kernel = if sigma == T::zero() || dt == T::zero() {
            Kernel::Identity
        } else {
            match scheme {
                FpScheme::ExactOu => {
                    let mut planner = FftPlanner::new();
                    Kernel::Exact(OuAxis::new(&mut planner, grid, (sigma * dt).as_f64()))
                }
                FpScheme::ImplicitFd => Kernel::Fd(FdAxis::new(grid, sigma, dt)?),
            }
        };
        Ok(Self {
            grid: *grid,
            sigma,
            dt,
            scheme,
            kernel,
        })
    }

    pub fn apply(&self, field: &mut DistributionField<T>) -> Result<()> {
        if field.grid != self.grid {
            return Err(Error::Precondition("field grid differs from propagator grid".into()));
        }
        let n = self.grid.nv;
        let d = self.grid.dim;
        let nvp = self.grid.v_points();
        let zero = Complex::new(T::zero(), T::zero());
        let mut line = vec![T::zero(); n];
        let mut scratch = vec![T::zero(); n];
        let mut work = vec![zero; 2 * n];
        let mut buf = vec![zero; n];
        match &self.kernel {
            Kernel::Identity => Ok(()),
            Kernel::Exact(axis) => {
                for block in field.values.chunks_mut(nvp) {
                    for_each_line(block, d, n, &mut line, |l| {
                        axis.apply(l, &mut work, &mut buf);
                        Ok(())
                    })?;
                }
                Ok(())
            }
            Kernel::Fd(axis) => {
                for block in field.values.chunks_mut(nvp) {
                    for_each_line(block, d, n, &mut line, |l| axis.solve(l, &mut scratch))?;
                }
                Ok(())
            }
        }
    }
}

/// Runs `op` on every line of a `n^d` velocity block, one axis after another.
fn for_each_line<T: Real>(
    block: &mut [T],
    dim: usize,
    n: usize,
    line: &mut [T],
    mut op: impl FnMut(&mut [T]) -> Result<()>,
) -> Result<()> {
    for axis in 0..dim {
        let stride = n.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            for l in block.chunks_mut(n) {
                op(l)?;
            }
            continue;
        }
        for outer in block.chunks_mut(n * stride) {
            for inner in 0..stride {
                for (k, x) in line.iter_mut().enumerate() {
                    *x = outer[inner + k * stride];
                }
                op(line)?;
                for (k, x) in line.iter().enumerate() {
                    outer[inner + k * stride] = *x;
                }
            }
        }
    }
    Ok(())
}

/// One Fokker–Planck step on a copy of `f`.
pub fn step_fokker_planck<T: Real>(
    f: &DistributionField<T>,
    sigma: T,
    dt: T,
    scheme: FpScheme,
) -> Result<DistributionField<T>> {
    let mut out = f.clone();
    FokkerPlanck::new(&f.grid, sigma, dt, scheme)?.apply(&mut out)?;
    Ok(out)
}
