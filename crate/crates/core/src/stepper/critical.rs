//! Largest time step for which the energy decays monotonically.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::stability::SchemeParams;

use super::Discretization;

/// Relative per-step slack separating roundoff from genuine energy growth.
pub const DECAY_SLACK: f64 = 1e-12;

/// Fixed data for a decay experiment; only `τ` varies.
#[derive(Clone, Copy)]
pub struct DecayConfig<'a, T, D: ?Sized> {
    pub backend: &'a D,
    pub initial: &'a [T],
    pub nu: T,
    pub a: T,
    pub horizon: usize,
}

/// Result of a bisection for the critical time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalTau<T> {
    pub a: T,
    /// Largest step found to decay; the true threshold lies in
    /// `[tau_c, tau_c·(1 + rel_tol)]`.
    pub tau_c: T,
    pub evaluations: usize,
    /// Whether the run at `tau_c / 2` also decays. `false` flags a
    /// non-monotone predicate on this data.
    pub halved_step_decays: bool,
}

/// Whether `E(u^{n+1}) ≤ E(u^n)(1 + DECAY_SLACK)` for every step up to the
/// horizon. A step that blows up counts as growth.
pub fn energy_decays<T: Real, D: Discretization<T> + ?Sized>(
    config: &DecayConfig<'_, T, D>,
    tau: T,
) -> Result<bool> {
    let params = SchemeParams::new(config.nu, tau, config.a)?;
    let backend = config.backend;
    let slack = T::lit(DECAY_SLACK);
    let mut u = config.initial.to_vec();
    let mut e_prev = backend.energy(&u, config.nu);
    for _ in 0..config.horizon {
        u = match backend.solve_step(&params, &u) {
            Ok(next) => next,
            Err(Error::NonFinite(_) | Error::NotConverged { .. }) => return Ok(false),
            Err(e) => return Err(e),
        };
        let e_next = backend.energy(&u, config.nu);
        if !e_next.is_finite()
            || u.iter().any(|v| !v.is_finite())
            || e_next > e_prev + slack * e_prev.abs()
        {
            return Ok(false);
        }
        e_prev = e_next;
    }
    Ok(true)
}

/// Geometric bisection between a decaying `tau_lo` and a failing `tau_hi`
/// until `hi/lo - 1 ≤ rel_tol`.
pub fn find_critical_tau<T: Real, D: Discretization<T> + ?Sized>(
    config: &DecayConfig<'_, T, D>,
    tau_lo: T,
    tau_hi: T,
    rel_tol: T,
) -> Result<CriticalTau<T>> {
    if config.initial.len() != config.backend.len() {
        return Err(Error::InvalidGrid(format!(
            "initial data has {} values, discretization has {} unknowns",
            config.initial.len(),
            config.backend.len()
        )));
    }
    if !(tau_lo > T::zero() && tau_lo <= tau_hi && tau_hi.is_finite()) {
        return Err(invalid(
            "tau",
            format!("need 0 < tau_lo ≤ tau_hi, got [{tau_lo}, {tau_hi}]"),
        ));
    }
    if !(rel_tol > T::zero()) {
        return Err(invalid("rel_tol", format!("{rel_tol} must be positive")));
    }
    let mut evaluations = 1;
    if !energy_decays(config, tau_lo)? {
        return Err(Error::NotBracketed(format!(
            "energy already grows at tau_lo = {tau_lo}"
        )));
    }
    let (mut lo, mut hi) = (tau_lo, tau_hi);
    if lo < hi {
        evaluations += 1;
        if energy_decays(config, hi)? {
            return Err(Error::NotBracketed(format!(
                "energy still decays at tau_hi = {tau_hi}"
            )));
        }
        while hi > lo * (T::one() + rel_tol) {
            let mid = (lo * hi).sqrt();
            evaluations += 1;
            if energy_decays(config, mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let halved_step_decays = energy_decays(config, lo / T::lit(2.0))?;
    Ok(CriticalTau {
        a: config.a,
        tau_c: lo,
        evaluations: evaluations + 1,
        halved_step_decays,
    })
}

/// One [`find_critical_tau`] per stabilization value, run in parallel.
/// Results come back in input order.
pub fn sweep_critical_tau<T: Real, D: Discretization<T> + ?Sized>(
    backend: &D,
    initial: &[T],
    nu: T,
    a_values: &[T],
    horizon: usize,
    (tau_lo, tau_hi): (T, T),
    rel_tol: T,
) -> Vec<Result<CriticalTau<T>>> {
    a_values
        .par_iter()
        .map(|&a| {
            let config = DecayConfig {
                backend,
                initial,
                nu,
                a,
                horizon,
            };
            find_critical_tau(&config, tau_lo, tau_hi, rel_tol)
        })
        .collect()
}
