//! Conservation and virial checks on a recorded diagnostics series.

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyCheck {
    /// `max |Ẽ(t) − Ẽ(0)| / |Ẽ(0)|`, used without diffusion.
    TildeEnergyDrift,
    /// `max |E(t) + ∫D − E(0)| / |E(0)|`, used with diffusion.
    DissipationLedger,
}

/// Relative energy error of a series: drift of `Ẽ` when `sigma = 0`,
/// otherwise the balance of `E` against the accumulated dissipation.
pub fn energy_error<T: Real>(series: &[DiagnosticsRecord<T>], sigma: T) -> Result<(EnergyCheck, T)> {
    let first = series
        .first()
        .ok_or_else(|| Error::Precondition("empty diagnostics series".into()))?;
    let (kind, e0, value): (_, T, fn(&DiagnosticsRecord<T>) -> T) = if sigma == T::zero() {
        (EnergyCheck::TildeEnergyDrift, first.tilde_e, |r| r.tilde_e)
    } else {
        (EnergyCheck::DissipationLedger, first.total_e, |r| r.total_e + r.cumulative_dissipation)
    };
    let worst = series
        .iter()
        .map(|r| (value(r) - e0).abs())
        .fold(T::zero(), T::max);
    let scale = if e0 == T::zero() { T::one() } else { e0.abs() };
    Ok((kind, worst / scale))
}

/// `max |ΔΔI/h² − RHS| / max |RHS|` over interior records, where `ΔΔI` is
/// the centered second difference and `RHS = 2·kinetic + virial − σI'`.
/// Triplets with unequal spacing (a trailing partial interval) are skipped.
pub fn virial_error<T: Real>(series: &[DiagnosticsRecord<T>], sigma: T) -> Result<T> {
    let mut worst = T::zero();
    let mut scale = T::zero();
    let mut used = 0;
    for w in series.windows(3) {
        let h1 = w[1].time - w[0].time;
        let h2 = w[2].time - w[1].time;
        if !(h1 > T::zero()) || (h1 - h2).abs() > T::lit(1e-9) * h1 {
            continue;
        }
        let fd = (w[2].inertia_i - T::lit(2.0) * w[1].inertia_i + w[0].inertia_i) / (h1 * h1);
        let rhs = w[1].virial_rhs(sigma);
        worst = worst.max((fd - rhs).abs());
        scale = scale.max(rhs.abs());
        used += 1;
    }
    if used == 0 {
        return Err(Error::Precondition(
            "virial check needs at least three equally spaced records".into(),
        ));
    }
    Ok(if scale > T::zero() { worst / scale } else { worst })
}

/// Observed convergence order from errors at step `2h` and `h`.
pub fn observed_order<T: Real>(coarse: T, fine: T) -> T {
    (coarse / fine).log2()
}
