//! Sufficient conditions for finite-time blow-up, their constants and the
//! Grönwall-type upper bound on the moment of inertia.
//!
//! Conventions: `I = ½∬|x|² f`, `I' = ∬(x·v) f`, `kinetic = ½∬|v|² f`,
//! `E = kinetic + ∬ f ln f − ½∫ρ K⋆ρ`. The inequalities are written with
//! the velocity moment `∬|v|² f = 2·kinetic`.

use serde::{Deserialize, Serialize};

use crate::closed_form::ClosedFormDensity;
use crate::error::{Error, Result};
use crate::grid::DistributionField;
use crate::riesz::{FreeSpaceInteraction, KernelTerm};
use crate::scalar::Real;

/// Number of log-spaced δ values tried when the caller leaves δ free.
pub const DELTA_SCAN_POINTS: usize = 16;

const NEAR_BOUNDARY_REL: f64 = 1e-9;
const CROSSING_TOL: f64 = 1e-8;
const BRACKET_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlowupCase {
    VlasovSigmaZero,
    VlasovFokkerPlanck,
    MixedSign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalSource {
    ClosedFormQuadrature,
    Grid,
}

/// Functionals of the initial datum consumed by the checkers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialFunctionals<T> {
    pub dim: usize,
    pub source: FunctionalSource,
    pub terms: Vec<KernelTerm<T>>,
    pub mass: T,
    /// `½∬|v|² f`.
    pub kinetic: T,
    /// `J_i = ∫ρ |x|^{-α_i}⋆ρ`, one per term, coefficient excluded.
    pub term_energies: Vec<T>,
    /// `Σ c_i J_i`.
    pub interaction: T,
    pub entropy: T,
    pub energy: T,
    pub inertia: T,
    pub inertia_prime: T,
}

impl<T: Real> InitialFunctionals<T> {
    pub fn from_closed_form(density: &ClosedFormDensity<T>, terms: &[KernelTerm<T>]) -> Result<Self> {
        validate_terms(terms)?;
        let term_energies = terms
            .iter()
            .map(|t| density.interaction_term(t.alpha))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::assemble(
            density.dim,
            FunctionalSource::ClosedFormQuadrature,
            terms,
            density.mass,
            density.kinetic()?,
            term_energies,
            density.entropy()?,
            density.inertia()?,
            density.inertia_prime()?,
        ))
    }

    /// Grid evaluation with the free-space (zero-padded) interaction.
    pub fn from_grid(f: &DistributionField<T>, terms: &[KernelTerm<T>]) -> Result<Self> {
        validate_terms(terms)?;
        let g = &f.grid;
        let (negative, min) = f.negative_cells(T::zero());
        if negative > 0 {
            return Err(Error::NegativeDensity {
                count: negative,
                min: min.as_f64(),
            });
        }
        let nvp = g.v_points();
        let (mut kinetic, mut entropy, mut inertia, mut iprime) = (T::zero(), T::zero(), T::zero(), T::zero());
        for ix in 0..g.x_points() {
            let x = g.x_coords(ix);
            let x2 = g.x_norm_sq(ix);
            for iv in 0..nvp {
                let val = f.values[ix * nvp + iv];
                if val == T::zero() {
                    continue;
                }
                let v = g.v_coords(iv);
                kinetic = kinetic + g.v_norm_sq(iv) * val;
                inertia = inertia + x2 * val;
                iprime = iprime + (0..g.dim).map(|a| x[a] * v[a]).sum::<T>() * val;
                entropy = entropy + val * val.ln();
            }
        }
        let cell = g.cell_volume();
        let half = T::lit(0.5);
        let term_energies = FreeSpaceInteraction::new(g, terms)?.term_energies(&f.integrate_v())?;
        Ok(Self::assemble(
            g.dim,
            FunctionalSource::Grid,
            terms,
            f.mass(),
            half * kinetic * cell,
            term_energies,
            entropy * cell,
            half * inertia * cell,
            iprime * cell,
        ))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dim: usize,
        source: FunctionalSource,
        terms: &[KernelTerm<T>],
        mass: T,
        kinetic: T,
        term_energies: Vec<T>,
        entropy: T,
        inertia: T,
        inertia_prime: T,
    ) -> Self {
        let interaction: T = terms.iter().zip(&term_energies).map(|(t, &j)| t.c * j).sum();
        Self {
            dim,
            source,
            terms: terms.to_vec(),
            mass,
            kinetic,
            term_energies,
            interaction,
            entropy,
            energy: kinetic + entropy - T::lit(0.5) * interaction,
            inertia,
            inertia_prime,
        }
    }

    /// `∬|v|² f`.
    pub fn velocity_moment(&self) -> T {
        T::lit(2.0) * self.kinetic
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupConstants<T> {
    pub delta: Option<T>,
    pub c_delta: Option<T>,
    pub b_rate: Option<T>,
    pub c0: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaScanPoint<T> {
    pub delta: T,
    pub lhs: T,
    pub rhs: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport<T> {
    pub case: BlowupCase,
    pub branch: Option<String>,
    pub sigma: T,
    pub constants: BlowupConstants<T>,
    pub lhs: Option<T>,
    pub rhs: Option<T>,
    pub condition_met: Option<bool>,
    pub near_boundary: bool,
    pub predicted_crossing_time: Option<T>,
    pub horizon: T,
    pub reason: Option<String>,
    pub delta_scan: Vec<DeltaScanPoint<T>>,
    pub inputs_digest: InitialFunctionals<T>,
}

impl<T: Real> BlowupReport<T> {
    fn inapplicable(case: BlowupCase, sigma: T, horizon: T, inputs: &InitialFunctionals<T>, reason: String) -> Self {
        Self {
            case,
            branch: None,
            sigma,
            constants: BlowupConstants {
                delta: None,
                c_delta: None,
                b_rate: None,
                c0: T::zero(),
            },
            lhs: None,
            rhs: None,
            condition_met: None,
            near_boundary: false,
            predicted_crossing_time: None,
            horizon,
            reason: Some(reason),
            delta_scan: Vec::new(),
            inputs_digest: inputs.clone(),
        }
    }

    /// `lhs − rhs`; negative when the condition holds.
    pub fn margin(&self) -> Option<T> {
        Some(self.lhs? - self.rhs?)
    }
}

/// `C_δ = 4(1+δ)(1+δ⁻¹)^{d/(2+d)} (e⁻¹ 2^{3d} π^{2d})^{1/(2+d)}`.
pub fn c_delta<T: Real>(delta: T, dim: usize) -> Result<T> {
    if !(delta > T::zero() && delta.is_finite()) {
        return Err(Error::Domain(format!("delta = {delta} must be positive")));
    }
    if dim == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    let d = T::of(dim);
    let two = T::lit(2.0);
    // Assembled in log space to keep f32 away from overflow at larger d.
    let ln_inner = -T::one() + T::lit(3.0) * d * two.ln() + two * d * T::PI().ln();
    let ln = (T::lit(4.0) * (T::one() + delta)).ln()
        + d / (two + d) * (T::one() + delta.recip()).ln()
        + ln_inner / (two + d);
    Ok(ln.exp())
}

/// Positive root of `b² + c1 b − c2 = 0`.
pub fn gronwall_rate<T: Real>(c1: T, c2: T) -> T {
    // Rationalized form: no cancellation when c1² ≫ c2.
    let two = T::lit(2.0);
    two * c2 / (c1 + (c1 * c1 + T::lit(4.0) * c2).sqrt())
}

fn validate_terms<T: Real>(terms: &[KernelTerm<T>]) -> Result<()> {
    if terms.is_empty() {
        return Err(Error::Kernel("kernel sum has no terms".into()));
    }
    for t in terms {
        if !(t.c.is_finite() && t.alpha.is_finite() && t.alpha > T::zero()) {
            return Err(Error::Kernel(format!("invalid term c = {}, alpha = {}", t.c, t.alpha)));
        }
    }
    Ok(())
}

fn require_attractive<T: Real>(terms: &[KernelTerm<T>]) -> Result<()> {
    validate_terms(terms)?;
    if let Some(t) = terms.iter().find(|t| t.c <= T::zero()) {
        return Err(Error::Precondition(format!(
            "all coefficients must be positive (found c = {} at alpha = {})",
            t.c, t.alpha
        )));
    }
    Ok(())
}

/// Largest exponent and the summed coefficient of the terms carrying it.
fn leading<T: Real>(terms: &[KernelTerm<T>]) -> (T, T) {
    let alpha_max = terms.iter().map(|t| t.alpha).fold(T::neg_infinity(), T::max);
    let c = terms.iter().filter(|t| t.alpha == alpha_max).map(|t| t.c).sum();
    (alpha_max, c)
}

/// Sub-threshold sum `S = Σ_{α_i < 2(1+δ)} c_i (1 + δ − α_i/2)` and the
/// leading coefficient `c' = c_M(α_M/2 − 1 − δ)`.
fn splitting_parts<T: Real>(terms: &[KernelTerm<T>], delta: T) -> Result<(T, T, T)> {
    require_attractive(terms)?;
    if !(delta >= T::zero()) {
        return Err(Error::Domain(format!("delta = {delta} must be nonnegative")));
    }
    let two = T::lit(2.0);
    let threshold = two * (T::one() + delta);
    let (alpha_max, c_lead) = leading(terms);
    if alpha_max <= threshold {
        return Err(Error::Precondition(format!(
            "no supercritical attractive term: max alpha = {alpha_max} must exceed 2(1+delta) = {threshold}"
        )));
    }
    let s: T = terms
        .iter()
        .filter(|t| t.alpha < threshold)
        .map(|t| t.c * (T::one() + delta - t.alpha / two))
        .sum();
    Ok((s, c_lead * (alpha_max / two - T::one() - delta), alpha_max))
}

/// `C_0 = S^{1 − 2/(α_M−2)} c'^{2/(α_M−2)}`, zero for an empty sub-threshold sum.
pub fn c_zero<T: Real>(terms: &[KernelTerm<T>], delta: T) -> Result<T> {
    let (s, lead, alpha_max) = splitting_parts(terms, delta)?;
    if s == T::zero() {
        return Ok(T::zero());
    }
    let p = T::lit(2.0) / (alpha_max - T::lit(2.0));
    Ok(s.powf(T::one() - p) * lead.powf(p))
}

/// Optimum of the ε-splitting behind `C_0`: the smallest `S ε⁻²` over
/// splittings `ε` whose `J`-coefficient `S ε^{α_M−2} − c'` is nonpositive,
/// `S^{1 + 2/(α_M−2)} c'^{−2/(α_M−2)}`. Agrees with [`c_zero`] when `S = c'`.
pub fn c_zero_splitting<T: Real>(terms: &[KernelTerm<T>], delta: T) -> Result<T> {
    let (s, lead, alpha_max) = splitting_parts(terms, delta)?;
    if s == T::zero() {
        return Ok(T::zero());
    }
    let p = T::lit(2.0) / (alpha_max - T::lit(2.0));
    Ok(s.powf(T::one() + p) * lead.powf(-p))
}

/// Closed-form upper bound for `h'' + c1 h' ≤ c2 h + c3` from `(h0, h0p)`.
pub fn gronwall_bound<T: Real>(h0: T, h0p: T, c1: T, c2: T, c3: T, t: T) -> T {
    let b = gronwall_rate(c1, c2);
    let k = (h0p - b * h0 - c3 / (b + c1)) / (c1 + T::lit(2.0) * b);
    let steady = c3 / (b * (b + c1));
    (h0 + steady + k) * (b * t).exp() - k * (-(c1 + b) * t).exp() - steady
}

/// Smallest `t ∈ (0, horizon]` with `gronwall_bound(..., t) ≤ 0`.
pub fn predict_crossing<T: Real>(h0: T, h0p: T, c1: T, c2: T, c3: T, horizon: T) -> Option<T> {
    let bound = |t: T| gronwall_bound(h0, h0p, c1, c2, c3, t);
    first_nonpositive(bound, horizon)
}

fn first_nonpositive<T: Real>(h: impl Fn(T) -> T, horizon: T) -> Option<T> {
    if !(horizon > T::zero()) {
        return None;
    }
    let step = horizon / T::of(BRACKET_SAMPLES);
    let mut lo = T::zero();
    let mut hi = None;
    for k in 1..=BRACKET_SAMPLES {
        let t = if k == BRACKET_SAMPLES { horizon } else { step * T::of(k) };
        if h(t) <= T::zero() {
            hi = Some(t);
            break;
        }
        lo = t;
    }
    let mut hi = hi?;
    if h(lo) <= T::zero() {
        return Some(lo);
    }
    let tol = T::lit(CROSSING_TOL);
    for _ in 0..200 {
        if hi - lo <= tol * T::one().max(hi) {
            break;
        }
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) <= T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// First root of `I0 + I0' t − (a/2) t²` when `a > 0`.
fn quadratic_crossing<T: Real>(i0: T, i0p: T, a: T, horizon: T) -> Option<T> {
    if !(a > T::zero()) {
        return None;
    }
    let disc = (i0p * i0p + T::lit(2.0) * a * i0.max(T::zero())).sqrt();
    let t = (i0p + disc) / a;
    (t <= horizon).then_some(t)
}

fn near_boundary<T: Real>(lhs: T, rhs: T) -> bool {
    let scale = T::one().max(lhs.abs()).max(rhs.abs());
    (lhs - rhs).abs() < T::lit(NEAR_BOUNDARY_REL) * scale
}

/// Log-spaced δ in `(0, upper)`: `upper · 10^{-3 + 3(k + ½)/N}`.
pub fn delta_scan_values<T: Real>(upper: T) -> Vec<T> {
    (0..DELTA_SCAN_POINTS)
        .map(|k| {
            let e = -3.0 + 3.0 * (k as f64 + 0.5) / DELTA_SCAN_POINTS as f64;
            upper * T::lit(10f64.powf(e))
        })
        .collect()
}

/// Vlasov case without diffusion. Uses the pure-Manev comparison when
/// every exponent is at least 2, the `C_0` comparison otherwise.
pub fn check_sigma_zero<T: Real>(inputs: &InitialFunctionals<T>, horizon: T) -> Result<BlowupReport<T>> {
    let case = BlowupCase::VlasovSigmaZero;
    require_attractive(&inputs.terms)?;
    let two = T::lit(2.0);
    let alpha_min = inputs.terms.iter().map(|t| t.alpha).fold(T::infinity(), T::min);
    let (alpha_max, _) = leading(&inputs.terms);
    let (branch, c0) = if alpha_min >= two {
        ("manev", T::zero())
    } else if alpha_max > two {
        ("main", c_zero(&inputs.terms, T::zero())? * inputs.mass * inputs.mass)
    } else {
        return Ok(BlowupReport::inapplicable(
            case,
            T::zero(),
            horizon,
            inputs,
            format!("needs max alpha > 2 or min alpha >= 2 (exponents span [{alpha_min}, {alpha_max}])"),
        ));
    };
    let lhs = inputs.velocity_moment() + c0;
    let rhs = inputs.interaction;
    let met = lhs < rhs;
    let crossing = if met {
        quadratic_crossing(inputs.inertia, inputs.inertia_prime, rhs - lhs, horizon)
    } else {
        None
    };
    Ok(BlowupReport {
        case,
        branch: Some(branch.into()),
        sigma: T::zero(),
        constants: BlowupConstants {
            delta: None,
            c_delta: None,
            b_rate: None,
            c0,
        },
        lhs: Some(lhs),
        rhs: Some(rhs),
        condition_met: Some(met),
        near_boundary: near_boundary(lhs, rhs),
        predicted_crossing_time: crossing,
        horizon,
        reason: None,
        delta_scan: Vec::new(),
        inputs_digest: inputs.clone(),
    })
}

struct Evaluated<T> {
    delta: T,
    c_delta: T,
    b_rate: T,
    c0: T,
    lhs: T,
    rhs: T,
}

/// Both sides of `2(1+δ)E + βI' < −β(σ+β)I − C_δ − C`.
fn diffusive_sides<T: Real>(inputs: &InitialFunctionals<T>, sigma: T, delta: T, c0: T) -> Result<Evaluated<T>> {
    let cd = c_delta(delta, inputs.dim)?;
    let b = gronwall_rate(sigma, cd);
    let lhs = T::lit(2.0) * (T::one() + delta) * inputs.energy + b * inputs.inertia_prime;
    let rhs = -b * (sigma + b) * inputs.inertia - cd - c0;
    Ok(Evaluated {
        delta,
        c_delta: cd,
        b_rate: b,
        c0,
        lhs,
        rhs,
    })
}

fn diffusive_report<T: Real>(
    case: BlowupCase,
    branch: String,
    inputs: &InitialFunctionals<T>,
    sigma: T,
    delta: Option<T>,
    upper: T,
    upper_closed: bool,
    horizon: T,
    c0_of: impl Fn(T) -> Result<T>,
) -> Result<BlowupReport<T>> {
    let feasible = |d: T| d > T::zero() && (d < upper || (upper_closed && d == upper));
    let (best, scan) = match delta {
        Some(d) => {
            if !feasible(d) {
                let close = if upper_closed { "]" } else { ")" };
                return Err(Error::Precondition(format!(
                    "delta = {d} infeasible; feasible interval is (0, {upper}{close}"
                )));
            }
            (diffusive_sides(inputs, sigma, d, c0_of(d)?)?, Vec::new())
        }
        None => {
            let mut best: Option<Evaluated<T>> = None;
            let mut scan = Vec::with_capacity(DELTA_SCAN_POINTS);
            for d in delta_scan_values(upper) {
                let e = diffusive_sides(inputs, sigma, d, c0_of(d)?)?;
                scan.push(DeltaScanPoint {
                    delta: d,
                    lhs: e.lhs,
                    rhs: e.rhs,
                });
                if best.as_ref().is_none_or(|b| e.lhs - e.rhs < b.lhs - b.rhs) {
                    best = Some(e);
                }
            }
            (best.expect("scan is nonempty"), scan)
        }
    };
    let met = best.lhs < best.rhs;
    let crossing = if met {
        let c3 = T::lit(2.0) * (T::one() + best.delta) * inputs.energy + best.c0 + best.c_delta;
        predict_crossing(inputs.inertia, inputs.inertia_prime, sigma, best.c_delta, c3, horizon)
    } else {
        None
    };
    Ok(BlowupReport {
        case,
        branch: Some(branch),
        sigma,
        constants: BlowupConstants {
            delta: Some(best.delta),
            c_delta: Some(best.c_delta),
            b_rate: Some(best.b_rate),
            c0: best.c0,
        },
        lhs: Some(best.lhs),
        rhs: Some(best.rhs),
        condition_met: Some(met),
        near_boundary: near_boundary(best.lhs, best.rhs),
        predicted_crossing_time: crossing,
        horizon,
        reason: None,
        delta_scan: scan,
        inputs_digest: inputs.clone(),
    })
}

/// Vlasov–Fokker–Planck case. With `delta = None` the most favorable of
/// [`DELTA_SCAN_POINTS`] log-spaced values in `(0, α_M/2 − 1)` is reported.
pub fn check_sigma_positive<T: Real>(
    inputs: &InitialFunctionals<T>,
    sigma: T,
    delta: Option<T>,
    horizon: T,
) -> Result<BlowupReport<T>> {
    if !(sigma > T::zero() && sigma.is_finite()) {
        return Err(Error::Precondition(format!("sigma = {sigma} must be positive")));
    }
    require_attractive(&inputs.terms)?;
    let (alpha_max, _) = leading(&inputs.terms);
    let upper = alpha_max / T::lit(2.0) - T::one();
    if !(upper > T::zero()) {
        return Err(Error::Precondition(format!(
            "max alpha = {alpha_max} must exceed 2; no feasible delta"
        )));
    }
    let mass2 = inputs.mass * inputs.mass;
    diffusive_report(
        BlowupCase::VlasovFokkerPlanck,
        "fokker-planck".into(),
        inputs,
        sigma,
        delta,
        upper,
        false,
        horizon,
        |d| Ok(c_zero(&inputs.terms, d)? * mass2),
    )
}

/// Terms of `K = |x|^{-α1} − |x|^{-α2}`.
pub fn mixed_terms<T: Real>(alpha1: T, alpha2: T) -> Vec<KernelTerm<T>> {
    vec![
        KernelTerm {
            c: T::one(),
            alpha: alpha1,
        },
        KernelTerm {
            c: -T::one(),
            alpha: alpha2,
        },
    ]
}

/// Attractive-minus-repulsive kernel. `inputs` must carry the terms of
/// [`mixed_terms`]. The additive constant is scaled by `M²`.
pub fn check_mixed<T: Real>(
    inputs: &InitialFunctionals<T>,
    sigma: T,
    delta: Option<T>,
    horizon: T,
) -> Result<BlowupReport<T>> {
    let terms = &inputs.terms;
    validate_terms(terms)?;
    if terms.len() != 2 || terms[0].c != T::one() || terms[1].c != -T::one() {
        return Err(Error::Precondition(
            "mixed kernel must be |x|^-alpha1 - |x|^-alpha2 with unit coefficients".into(),
        ));
    }
    let (a1, a2) = (terms[0].alpha, terms[1].alpha);
    let two = T::lit(2.0);
    let floor = two.max(a2);
    let mass2 = inputs.mass * inputs.mass;
    let repulsive_strong = a2 >= two;
    let branch = if repulsive_strong { "indicator-on" } else { "indicator-off" };
    if sigma == T::zero() {
        if !(a1 >= floor) || a1 == a2 {
            return Err(Error::Precondition(format!(
                "need alpha1 >= max(2, alpha2) and alpha1 != alpha2 (alpha1 = {a1}, alpha2 = {a2})"
            )));
        }
        let c0 = if repulsive_strong {
            (a2 / two - T::one()) * mass2
        } else {
            T::zero()
        };
        let lhs = inputs.velocity_moment() + c0;
        let rhs = inputs.interaction;
        let met = lhs < rhs;
        let crossing = if met {
            quadratic_crossing(inputs.inertia, inputs.inertia_prime, rhs - lhs, horizon)
        } else {
            None
        };
        return Ok(BlowupReport {
            case: BlowupCase::MixedSign,
            branch: Some(branch.into()),
            sigma,
            constants: BlowupConstants {
                delta: None,
                c_delta: None,
                b_rate: None,
                c0,
            },
            lhs: Some(lhs),
            rhs: Some(rhs),
            condition_met: Some(met),
            near_boundary: near_boundary(lhs, rhs),
            predicted_crossing_time: crossing,
            horizon,
            reason: None,
            delta_scan: Vec::new(),
            inputs_digest: inputs.clone(),
        });
    }
    if !(sigma > T::zero() && sigma.is_finite()) {
        return Err(Error::Precondition(format!("sigma = {sigma} must be nonnegative")));
    }
    if !(a1 > floor) {
        return Err(Error::Precondition(format!(
            "need alpha1 > max(2, alpha2) (alpha1 = {a1}, alpha2 = {a2})"
        )));
    }
    diffusive_report(
        BlowupCase::MixedSign,
        branch.into(),
        inputs,
        sigma,
        delta,
        a1 / two - T::one(),
        true,
        horizon,
        |d| {
            Ok(if repulsive_strong {
                (a2 / two - T::one() - d).max(T::zero()) * mass2
            } else {
                T::zero()
            })
        },
    )
}

/// Both sides of `−2(1+δ)∬ f ln f χ_{0<f≤1} ≤ C_δ(I+1) + δ∬|v|² f` on the grid.
pub fn entropy_bound_check<T: Real>(f: &DistributionField<T>, delta: T) -> Result<(T, T, bool)> {
    let g = &f.grid;
    let cd = c_delta(delta, g.dim)?;
    let nvp = g.v_points();
    let (mut neg_entropy, mut x2, mut v2) = (T::zero(), T::zero(), T::zero());
    for ix in 0..g.x_points() {
        let xs = g.x_norm_sq(ix);
        for iv in 0..nvp {
            let val = f.values[ix * nvp + iv];
            if val < T::zero() {
                return Err(Error::NegativeDensity {
                    count: 1,
                    min: val.as_f64(),
                });
            }
            if val > T::zero() && val <= T::one() {
                neg_entropy = neg_entropy - val * val.ln();
            }
            x2 = x2 + xs * val;
            v2 = v2 + g.v_norm_sq(iv) * val;
        }
    }
    let cell = g.cell_volume();
    let lhs = T::lit(2.0) * (T::one() + delta) * neg_entropy * cell;
    let inertia = T::lit(0.5) * x2 * cell;
    let rhs = cd * (inertia + T::one()) + delta * v2 * cell;
    Ok((lhs, rhs, lhs <= rhs))
}
