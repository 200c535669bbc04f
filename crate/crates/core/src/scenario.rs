//! Initial-data generators on the phase-space grid.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::closed_form::{RadialEval, RadialProfile};
use crate::error::{Error, Result};
use crate::grid::{DistributionField, PhaseGrid};
use crate::scalar::Real;

/// Gaussian tails are cut at this many standard deviations when checking
/// that data fits the box.
pub const GAUSSIAN_FIT_STDS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Gaussian,
    Bump,
    Concentrated,
    TwoStream,
    CustomSeparable,
}

impl Generator {
    pub const ALL: [Generator; 5] = [
        Generator::Gaussian,
        Generator::Bump,
        Generator::Concentrated,
        Generator::TwoStream,
        Generator::CustomSeparable,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Generator::Gaussian => "gaussian",
            Generator::Bump => "bump",
            Generator::Concentrated => "concentrated",
            Generator::TwoStream => "two_stream",
            Generator::CustomSeparable => "custom_separable",
        }
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| Error::config("initial_data.generator", format!("unknown generator `{s}`")))
    }
}

/// Generator name and parameters. Fields a generator does not use are
/// ignored; missing required ones are reported by path.
///
/// Every generator is multiplied by `1 + amplitude·cos(wavenumber·x₁)` and,
/// when `noise > 0`, by `1 + noise·ξ(x)` with `ξ` uniform in `[-1, 1]` per
/// spatial node drawn from the run seed. The result is rescaled to `mass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct InitialData<T> {
    pub generator: Generator,
    #[serde(default = "one")]
    pub mass: T,
    #[serde(default = "zero")]
    pub amplitude: T,
    /// Perturbation wavenumber; defaults to the first box mode `π/lx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<T>,
    #[serde(default = "zero")]
    pub noise: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_x: Option<T>,
    /// Thermal speed of the Maxwellian factor.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_th: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_x: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_v: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_x: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_v: Option<T>,
    /// Beam speed for `two_stream`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_profile: Option<RadialProfile<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_profile: Option<RadialProfile<T>>,
}

fn one<T: Real>() -> T {
    T::one()
}

fn zero<T: Real>() -> T {
    T::zero()
}

impl<T: Real> InitialData<T> {
    pub fn new(generator: Generator) -> Self {
        Self {
            generator,
            mass: T::one(),
            amplitude: T::zero(),
            wavenumber: None,
            noise: T::zero(),
            std_x: None,
            v_th: None,
            radius_x: None,
            radius_v: None,
            eps_x: None,
            eps_v: None,
            drift: None,
            x_profile: None,
            v_profile: None,
        }
    }

    pub fn gaussian(std_x: T, v_th: T) -> Self {
        Self {
            std_x: Some(std_x),
            v_th: Some(v_th),
            ..Self::new(Generator::Gaussian)
        }
    }

    pub fn concentrated(eps_x: T, eps_v: T) -> Self {
        Self {
            eps_x: Some(eps_x),
            eps_v: Some(eps_v),
            ..Self::new(Generator::Concentrated)
        }
    }

    pub fn with_perturbation(mut self, amplitude: T, wavenumber: T) -> Self {
        self.amplitude = amplitude;
        self.wavenumber = Some(wavenumber);
        self
    }

    pub fn with_mass(mut self, mass: T) -> Self {
        self.mass = mass;
        self
    }

    /// Spatial and velocity profiles; `two_stream` returns its thermal
    /// Maxwellian as the velocity profile and applies the drift separately.
    fn profiles(&self) -> Result<(RadialProfile<T>, RadialProfile<T>)> {
        let positive = |name: &str, v: Option<T>, default: Option<T>| -> Result<T> {
            let v = v.or(default).ok_or_else(|| {
                Error::config(
                    format!("initial_data.{name}"),
                    format!("required by generator {}", self.generator),
                )
            })?;
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::config(format!("initial_data.{name}"), format!("{v} must be positive")));
            }
            Ok(v)
        };
        let one = Some(T::one());
        Ok(match self.generator {
            Generator::Gaussian => (
                RadialProfile::Gaussian {
                    std: positive("std_x", self.std_x, one)?,
                },
                RadialProfile::Gaussian {
                    std: positive("v_th", self.v_th, one)?,
                },
            ),
            Generator::Bump => (
                RadialProfile::Bump {
                    radius: positive("radius_x", self.radius_x, one)?,
                },
                RadialProfile::Bump {
                    radius: positive("radius_v", self.radius_v, one)?,
                },
            ),
            Generator::Concentrated => (
                RadialProfile::Bump {
                    radius: positive("eps_x", self.eps_x, None)?,
                },
                RadialProfile::Bump {
                    radius: positive("eps_v", self.eps_v, None)?,
                },
            ),
            Generator::TwoStream => (
                // Uniform in space up to the perturbation.
                RadialProfile::Gaussian { std: T::infinity() },
                RadialProfile::Gaussian {
                    std: positive("v_th", self.v_th, one)?,
                },
            ),
            Generator::CustomSeparable => {
                let get = |name: &str, p: Option<RadialProfile<T>>| {
                    let p = p.ok_or_else(|| {
                        Error::config(format!("initial_data.{name}"), "required by generator custom_separable")
                    })?;
                    p.validate()
                        .map_err(|e| Error::config(format!("initial_data.{name}"), e.to_string()))?;
                    Ok::<_, Error>(p)
                };
                (get("x_profile", self.x_profile)?, get("v_profile", self.v_profile)?)
            }
        })
    }

    /// Checks parameters and that the data fits inside the box.
    pub fn validate(&self, grid: &PhaseGrid<T>) -> Result<()> {
        if !(self.mass >= T::zero() && self.mass.is_finite()) {
            return Err(Error::config("initial_data.mass", format!("{} must be nonnegative", self.mass)));
        }
        if !(self.amplitude.abs() < T::one()) {
            return Err(Error::config(
                "initial_data.amplitude",
                format!("|{}| must be below 1 to keep f nonnegative", self.amplitude),
            ));
        }
        if !(self.noise >= T::zero() && self.noise < T::one()) {
            return Err(Error::config("initial_data.noise", format!("{} must lie in [0, 1)", self.noise)));
        }
        if let Some(k) = self.wavenumber {
            if !k.is_finite() {
                return Err(Error::config("initial_data.wavenumber", "must be finite"));
            }
        }
        let (xp, vp) = self.profiles()?;
        let drift = match self.generator {
            Generator::TwoStream => {
                let u = self.drift.ok_or_else(|| {
                    Error::config("initial_data.drift", "required by generator two_stream")
                })?;
                if !(u >= T::zero() && u.is_finite()) {
                    return Err(Error::config("initial_data.drift", format!("{u} must be nonnegative")));
                }
                u
            }
            _ => T::zero(),
        };
        if self.generator != Generator::TwoStream {
            fit("x", reach(&xp), grid.lx)?;
        }
        fit("v", drift + reach(&vp), grid.lv)
    }

    /// Samples the datum on `grid`, normalized to `mass`.
    pub fn generate(&self, grid: PhaseGrid<T>, seed: u64) -> Result<DistributionField<T>> {
        self.validate(&grid)?;
        let (xp, vp) = self.profiles()?;
        let d = grid.dim;
        let x_eval = if self.generator == Generator::TwoStream {
            None
        } else {
            Some(xp.evaluator(d)?)
        };
        let v_eval = vp.evaluator(d)?;
        let drift = self.drift.unwrap_or_else(T::zero);
        let k = self.wavenumber.unwrap_or_else(|| T::PI() / grid.lx);

        let spatial: Vec<T> = {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..grid.x_points())
                .map(|ix| {
                    let x = grid.x_coords(ix);
                    let base = x_eval.as_ref().map_or(T::one(), |e| radial(e, &x[..d]));
                    let mut w = base * (T::one() + self.amplitude * (k * x[0]).cos());
                    if self.noise > T::zero() {
                        let xi = T::lit(rng.random_range(-1.0..=1.0));
                        w = w * (T::one() + self.noise * xi);
                    }
                    w
                })
                .collect()
        };
        let velocity: Vec<T> = (0..grid.v_points())
            .map(|iv| {
                let v = grid.v_coords(iv);
                if self.generator == Generator::TwoStream {
                    let mut plus = v;
                    let mut minus = v;
                    plus[0] = plus[0] - drift;
                    minus[0] = minus[0] + drift;
                    T::lit(0.5) * (radial(&v_eval, &plus[..d]) + radial(&v_eval, &minus[..d]))
                } else {
                    radial(&v_eval, &v[..d])
                }
            })
            .collect();

        let mut values = Vec::with_capacity(grid.len());
        for &s in &spatial {
            values.extend(velocity.iter().map(|&p| s * p));
        }
        let mut field = DistributionField::from_values(grid, values)?;
        let m = field.mass();
        if self.mass == T::zero() {
            field.values.iter_mut().for_each(|v| *v = T::zero());
        } else if m > T::zero() {
            let scale = self.mass / m;
            field.values.iter_mut().for_each(|v| *v = *v * scale);
        } else {
            return Err(Error::Domain("generated datum has no mass on this grid".into()));
        }
        Ok(field)
    }
}

fn radial<T: Real>(eval: &RadialEval<T>, p: &[T]) -> T {
    let r = p.iter().map(|&a| a * a).sum::<T>().sqrt();
    eval.density(r)
}

fn reach<T: Real>(p: &RadialProfile<T>) -> T {
    match *p {
        RadialProfile::Gaussian { std } => T::lit(GAUSSIAN_FIT_STDS) * std,
        RadialProfile::Bump { radius } => radius,
    }
}

fn fit<T: Real>(axis: &str, reach: T, half_width: T) -> Result<()> {
    if reach > half_width {
        return Err(Error::Domain(format!(
            "initial data does not fit the box: {axis}-extent {reach} exceeds half-width {half_width}"
        )));
    }
    Ok(())
}

/// Samples the named generator with its parameters.
pub fn generate_initial<T: Real>(data: &InitialData<T>, grid: PhaseGrid<T>, seed: u64) -> Result<DistributionField<T>> {
    data.generate(grid, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1() -> PhaseGrid<f64> {
        PhaseGrid::new(1, 8.0, 6.0, 64, 64).unwrap()
    }

    #[test]
    fn unit_mass_for_every_generator() {
        let g = grid1();
        let mut data = vec![
            InitialData::gaussian(1.0, 1.0).with_perturbation(0.3, 2.0),
            InitialData::new(Generator::Bump),
            InitialData::concentrated(0.5, 0.5),
            InitialData {
                drift: Some(2.0),
                v_th: Some(0.5),
                amplitude: 0.05,
                ..InitialData::new(Generator::TwoStream)
            },
            InitialData {
                x_profile: Some(RadialProfile::Bump { radius: 2.0 }),
                v_profile: Some(RadialProfile::Gaussian { std: 0.7 }),
                ..InitialData::new(Generator::CustomSeparable)
            },
        ];
        data[0].noise = 0.2;
        for d in &data {
            let f = d.generate(g, 3).unwrap();
            assert!((f.mass() - 1.0).abs() < 1e-12, "{}", d.generator);
            assert!(f.values.iter().all(|&v| v >= 0.0));
        }
        let g2 = PhaseGrid::<f64>::new(2, 4.0, 4.0, 16, 16).unwrap();
        let f = InitialData::gaussian(0.6, 0.6).with_mass(2.5).generate(g2, 0).unwrap();
        assert!((f.mass() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn bump_support_within_radius() {
        let g = grid1();
        let data = InitialData {
            radius_x: Some(3.0),
            radius_v: Some(2.0),
            ..InitialData::new(Generator::Bump)
        };
        let f = data.generate(g, 0).unwrap();
        let nvp = g.v_points();
        let (mut rx, mut rv) = (0.0f64, 0.0f64);
        for ix in 0..g.x_points() {
            for iv in 0..nvp {
                if f.values[ix * nvp + iv] > 0.0 {
                    rx = rx.max(g.x_node(ix).abs());
                    rv = rv.max(g.v_node(iv).abs());
                }
            }
        }
        assert!(rx < 3.0 && rx >= 3.0 - g.dx(), "{rx}");
        assert!(rv < 2.0 && rv >= 2.0 - g.dv(), "{rv}");
    }

    #[test]
    fn domain_fit_and_missing_parameters() {
        let g = grid1();
        let err = InitialData::<f64>::gaussian(2.0, 1.0).generate(g, 0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
        let err = InitialData::<f64>::concentrated(0.1, 7.0).generate(g, 0).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        let err = InitialData::<f64>::new(Generator::Concentrated).generate(g, 0).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "initial_data.eps_x"), "{err}");
        let err = InitialData::<f64>::new(Generator::TwoStream).generate(g, 0).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "initial_data.drift"));
        assert!("landau".parse::<Generator>().is_err());
        assert_eq!("two_stream".parse::<Generator>().unwrap(), Generator::TwoStream);
    }

    #[test]
    fn noise_is_seeded() {
        let g = grid1();
        let mut d = InitialData::gaussian(1.0, 1.0);
        d.noise = 0.5;
        let a = d.generate(g, 11).unwrap();
        let b = d.generate(g, 11).unwrap();
        let c = d.generate(g, 12).unwrap();
        assert_eq!(a.values, b.values);
        assert_ne!(a.values, c.values);
    }
}
