//! Analytic radial densities and the functionals of separable phase-space
//! data `f(x, v) = M p(x) q(v − a x)`, evaluated by adaptive quadrature in
//! dimensions 1 to 3.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};
use crate::scalar::{sphere_area, Real};

pub const MAX_CLOSED_FORM_DIM: usize = 3;

/// Unit-mass radial profile in R^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum RadialProfile<T> {
    /// Isotropic normal density with standard deviation `std` per axis.
    Gaussian { std: T },
    /// Smooth compactly supported bump `C exp(−1/(1 − |x|²/R²))` on `|x| < R`.
    Bump { radius: T },
}

impl<T: Real> RadialProfile<T> {
    /// Profile of `λ^d p(λx)`.
    pub fn scaled(&self, lambda: T) -> Self {
        match *self {
            RadialProfile::Gaussian { std } => RadialProfile::Gaussian { std: std / lambda },
            RadialProfile::Bump { radius } => RadialProfile::Bump {
                radius: radius / lambda,
            },
        }
    }

    /// Radius beyond which the profile is zero or negligible.
    pub fn support(&self) -> T {
        match *self {
            RadialProfile::Gaussian { std } => T::lit(12.0) * std,
            RadialProfile::Bump { radius } => radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let width = match *self {
            RadialProfile::Gaussian { std } => std,
            RadialProfile::Bump { radius } => radius,
        };
        if !(width > T::zero() && width.is_finite()) {
            return Err(Error::Domain(format!("profile width {width} must be positive")));
        }
        Ok(())
    }

    pub fn evaluator(&self, dim: usize) -> Result<RadialEval<T>> {
        self.validate()?;
        if dim == 0 || dim > MAX_CLOSED_FORM_DIM {
            return Err(Error::Domain(format!(
                "closed-form dimension {dim} unsupported (1..={MAX_CLOSED_FORM_DIM})"
            )));
        }
        let ln_norm = match *self {
            RadialProfile::Gaussian { std } => {
                -T::lit(dim as f64 / 2.0) * (T::lit(2.0) * T::PI() * std * std).ln()
            }
            RadialProfile::Bump { radius } => {
                let raw = integrate(
                    |u: T| bump_shape(u) * u.powi(dim as i32 - 1),
                    T::zero(),
                    T::one(),
                    QuadOptions::with_rel_tol(1e-13),
                )?;
                -(sphere_area::<T>(dim) * radius.powi(dim as i32) * raw.value).ln()
            }
        };
        Ok(RadialEval {
            profile: *self,
            dim,
            ln_norm,
        })
    }
}

fn bump_shape<T: Real>(u: T) -> T {
    if u >= T::one() {
        T::zero()
    } else {
        (-T::one() / (T::one() - u * u)).exp()
    }
}

/// A profile bound to a dimension with its normalization resolved.
#[derive(Debug, Clone, Copy)]
pub struct RadialEval<T> {
    pub profile: RadialProfile<T>,
    pub dim: usize,
    ln_norm: T,
}

impl<T: Real> RadialEval<T> {
    /// `ln p(r)`; `-∞` outside the support.
    pub fn ln_density(&self, r: T) -> T {
        match self.profile {
            RadialProfile::Gaussian { std } => self.ln_norm - r * r / (T::lit(2.0) * std * std),
            RadialProfile::Bump { radius } => {
                let u = r / radius;
                if u >= T::one() {
                    T::neg_infinity()
                } else {
                    self.ln_norm - T::one() / (T::one() - u * u)
                }
            }
        }
    }

    pub fn density(&self, r: T) -> T {
        self.ln_density(r).exp()
    }

    fn radial_integral(&self, g: impl Fn(T) -> T) -> Result<T> {
        let area = sphere_area::<T>(self.dim);
        let d1 = self.dim as i32 - 1;
        let e = integrate(
            |r: T| {
                let p = self.density(r);
                if p == T::zero() {
                    T::zero()
                } else {
                    p * g(r) * r.powi(d1)
                }
            },
            T::zero(),
            self.profile.support(),
            QuadOptions::with_rel_tol(1e-12),
        )?;
        Ok(area * e.value)
    }

    /// `∫|x|² p dx`.
    pub fn second_moment(&self) -> Result<T> {
        match self.profile {
            RadialProfile::Gaussian { std } => Ok(T::of(self.dim) * std * std),
            RadialProfile::Bump { .. } => self.radial_integral(|r| r * r),
        }
    }

    /// `∫ p ln p dx`.
    pub fn entropy(&self) -> Result<T> {
        match self.profile {
            RadialProfile::Gaussian { std } => Ok(-T::lit(self.dim as f64 / 2.0)
                * (T::lit(2.0) * T::PI() * T::E() * std * std).ln()),
            RadialProfile::Bump { .. } => self.radial_integral(|r| self.ln_density(r)),
        }
    }

    /// `∫∫p(x)|x−y|^{-α}p(y) dx dy` for `0 < α < d`.
    pub fn pair_energy(&self, alpha: T) -> Result<T> {
        let d = self.dim;
        if !(alpha > T::zero()) {
            return Err(Error::Kernel(format!("alpha = {alpha} must be positive")));
        }
        if alpha >= T::of(d) {
            return Err(Error::DivergentKernel {
                alpha: alpha.as_f64(),
                dim: d,
            });
        }
        let support = self.profile.support();
        let d1 = d as i32 - 1;
        let k = (T::lit(2.0) / (T::of(d) - alpha)).max(T::one());
        let inner_opts = QuadOptions {
            abs_tol: 1e-15,
            rel_tol: 1e-11,
            max_intervals: 4000,
        };
        let mut failure = None;
        let outer = integrate(
            |r1: T| {
                let p1 = self.density(r1);
                if p1 == T::zero() {
                    return T::zero();
                }
                // r2 = r1 (1 − w^k) flattens the |r1 − r2|^{d−1−α} edge.
                let inner = integrate(
                    |w: T| {
                        if w == T::zero() {
                            return T::zero();
                        }
                        let wk = w.powf(k);
                        let r2 = r1 * (T::one() - wk);
                        let p2 = self.density(r2);
                        if p2 == T::zero() {
                            return T::zero();
                        }
                        let jac = k * r1 * wk / w;
                        p2 * r2.powi(d1) * angular_kernel_gap(d, alpha, r1, r2, r1 * wk) * jac
                    },
                    T::zero(),
                    T::one(),
                    inner_opts,
                );
                match inner {
                    Ok(e) => p1 * r1.powi(d1) * e.value,
                    Err(err) => {
                        failure.get_or_insert(err);
                        T::zero()
                    }
                }
            },
            T::zero(),
            support,
            QuadOptions {
                abs_tol: 1e-14,
                rel_tol: 1e-10,
                max_intervals: 4000,
            },
        )?;
        if let Some(err) = failure {
            return Err(err);
        }
        // Symmetric in (r1, r2): integrate r2 < r1 and double.
        Ok(T::lit(2.0) * sphere_area::<T>(d) * outer.value)
    }
}

/// `∫_{S^{d-1}} |r1 e − r2 ω|^{-α} dω` for a fixed unit vector `e`.
pub fn angular_kernel<T: Real>(dim: usize, alpha: T, r1: T, r2: T) -> T {
    angular_kernel_gap(dim, alpha, r1, r2, (r1 - r2).abs())
}

/// Same as [`angular_kernel`] with `|r1 − r2|` supplied by the caller, which
/// keeps precision when the gap is far below the radii.
fn angular_kernel_gap<T: Real>(dim: usize, alpha: T, r1: T, r2: T, diff: T) -> T {
    let sum = r1 + r2;
    match dim {
        1 => diff.powf(-alpha) + sum.powf(-alpha),
        3 => {
            // 2π/(r1 r2) · (sum^p − diff^p)/p with p = 2 − α; written via
            // expm1/ln_1p so p → 0 (α = 2) is handled without cancellation.
            let p = T::lit(2.0) - alpha;
            let log_ratio = (T::lit(2.0) * r1.min(r2) / diff).ln_1p();
            let body = if p.abs() < T::lit(1e-12) {
                log_ratio
            } else if diff == T::zero() {
                sum.powf(p) / p
            } else {
                diff.powf(p) * (p * log_ratio).exp_m1() / p
            };
            T::lit(2.0) * T::PI() / (r1 * r2) * body
        }
        _ => {
            // d = 2: 2∫_0^π ((r1−r2)² + 4 r1 r2 sin²(θ/2))^{-α/2} dθ.
            let half = -alpha / T::lit(2.0);
            let narrow = (diff / sum.max(T::min_positive_value())).max(T::lit(1e-12));
            let breaks = [narrow, T::lit(10.0) * narrow, T::lit(100.0) * narrow];
            integrate_with_breaks(
                |theta: T| {
                    let s = (theta / T::lit(2.0)).sin();
                    (diff * diff + T::lit(4.0) * r1 * r2 * s * s).powf(half)
                },
                T::zero(),
                T::PI(),
                &breaks,
                QuadOptions::with_rel_tol(1e-12),
            )
            .map(|e| T::lit(2.0) * e.value)
            .unwrap_or(T::nan())
        }
    }
}

/// Separable phase-space density `f(x, v) = M p(x) q(v − a x)` with radial
/// `p`, `q` and a linear velocity shear `a` (negative for inward motion).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormDensity<T> {
    pub dim: usize,
    pub mass: T,
    pub x_profile: RadialProfile<T>,
    pub v_profile: RadialProfile<T>,
    #[serde(default)]
    pub shear: T,
}

impl<T: Real> ClosedFormDensity<T> {
    pub fn separable(
        dim: usize,
        mass: T,
        x_profile: RadialProfile<T>,
        v_profile: RadialProfile<T>,
    ) -> Result<Self> {
        let out = Self {
            dim,
            mass,
            x_profile,
            v_profile,
            shear: T::zero(),
        };
        out.validate()?;
        Ok(out)
    }

    /// Concentrated data `M ε'^{-d} φ(x/ε') ε^{-d} ψ(v/ε)` with unit-radius bumps.
    pub fn concentrated(dim: usize, mass: T, eps_x: T, eps_v: T) -> Result<Self> {
        Self::separable(
            dim,
            mass,
            RadialProfile::Bump { radius: eps_x },
            RadialProfile::Bump { radius: eps_v },
        )
    }

    pub fn with_shear(mut self, shear: T) -> Self {
        self.shear = shear;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_CLOSED_FORM_DIM {
            return Err(Error::Domain(format!(
                "closed-form dimension {} unsupported",
                self.dim
            )));
        }
        if !(self.mass >= T::zero() && self.mass.is_finite()) {
            return Err(Error::Domain(format!("mass {} must be nonnegative", self.mass)));
        }
        self.x_profile.validate()?;
        self.v_profile.validate()
    }

    /// `λ^d p(λx)` in space, velocity profile unchanged.
    pub fn scaled_x(&self, lambda: T) -> Self {
        Self {
            x_profile: self.x_profile.scaled(lambda),
            ..*self
        }
    }

    fn x_eval(&self) -> Result<RadialEval<T>> {
        self.x_profile.evaluator(self.dim)
    }

    fn v_eval(&self) -> Result<RadialEval<T>> {
        self.v_profile.evaluator(self.dim)
    }

    /// `½∬|v|² f`.
    pub fn kinetic(&self) -> Result<T> {
        let mx = self.x_eval()?.second_moment()?;
        let mv = self.v_eval()?.second_moment()?;
        Ok(T::lit(0.5) * self.mass * (mv + self.shear * self.shear * mx))
    }

    /// `I = ½∬|x|² f`.
    pub fn inertia(&self) -> Result<T> {
        Ok(T::lit(0.5) * self.mass * self.x_eval()?.second_moment()?)
    }

    /// `I' = ∬(x·v) f`.
    pub fn inertia_prime(&self) -> Result<T> {
        Ok(self.mass * self.shear * self.x_eval()?.second_moment()?)
    }

    /// `∬ f ln f` (the shear has unit Jacobian).
    pub fn entropy(&self) -> Result<T> {
        if self.mass == T::zero() {
            return Ok(T::zero());
        }
        Ok(self.mass * (self.mass.ln() + self.x_eval()?.entropy()? + self.v_eval()?.entropy()?))
    }

    /// `∫ρ |x|^{-α}⋆ρ = M² J_α(p)`.
    pub fn interaction_term(&self, alpha: T) -> Result<T> {
        if self.mass == T::zero() {
            return Ok(T::zero());
        }
        Ok(self.mass * self.mass * self.x_eval()?.pair_energy(alpha)?)
    }
}
