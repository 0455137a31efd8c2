//! Stabilized semi-implicit time stepping with per-step energy auditing.

mod backend;
mod critical;
mod initial;

pub use backend::{Discretization, GraphBackend, SpectralBackend};
pub use critical::{
    energy_decays, find_critical_tau, sweep_critical_tau, CriticalTau, DecayConfig, DECAY_SLACK,
};
pub use initial::{cosine_mode, random_meanzero, scale_to_linf};

use crate::error::{Error, Result};
use crate::field::{Field, TorusGrid};
use crate::scalar::{Real, SpectralReal};
use crate::stability::{critical_a, splitting, SchemeParams};

/// `f(u) = u³ - u`.
pub fn nonlinearity<T: Real>(u: T) -> T {
    u * u * u - u
}

/// Energy and dissipation terms of one step, all evaluated at the new state.
///
/// `H = -νΔu^{n+1} + A(u^{n+1} - u^n) + f(u^n)` and the residual is
/// `E(u^n) - E(u^{n+1}) - (A/2)‖u^{n+1} - u^n‖² - τ‖∇H‖²`, which is
/// nonnegative for admissible parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport<T> {
    pub step: usize,
    pub time: T,
    pub energy: T,
    pub linf: T,
    pub mean: T,
    pub increment_l2: T,
    pub grad_h_l2: T,
    pub dissipation_residual: T,
}

impl<T: Real> EnergyReport<T> {
    /// Report for the initial state: no increment, no residual.
    pub fn initial<D: Discretization<T> + ?Sized>(backend: &D, u: &[T], nu: T) -> Self {
        let norms = backend.norms(u);
        Self {
            step: 0,
            time: T::zero(),
            energy: backend.energy(u, nu),
            linf: norms.linf,
            mean: norms.mean,
            increment_l2: T::zero(),
            grad_h_l2: T::zero(),
            dissipation_residual: T::zero(),
        }
    }
}

/// A run in progress: `u^n` at `t = nτ` and the reports of every step so far.
#[derive(Debug, Clone, PartialEq)]
pub struct StepperState<T> {
    pub n: usize,
    pub t: T,
    pub u: Vec<T>,
    pub history: Vec<EnergyReport<T>>,
}

impl<T: Real> StepperState<T> {
    pub fn new(u: Vec<T>) -> Result<Self> {
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        Ok(Self {
            n: 0,
            t: T::zero(),
            u,
            history: Vec::new(),
        })
    }

    pub fn from_field(field: Field<T>) -> Self {
        Self::new(field.into_values()).expect("fields hold finite values")
    }

    pub fn to_field(&self, grid: TorusGrid) -> Result<Field<T>> {
        Field::new(grid, self.u.clone())
    }

    fn advance(mut self, u_next: Vec<T>, report: EnergyReport<T>) -> Self {
        self.n += 1;
        self.u = u_next;
        self.history.push(report);
        self
    }
}

/// Energy of a grid field, with the gradient term differentiated spectrally.
pub fn energy<T: SpectralReal>(u: &Field<T>, nu: T) -> T {
    SpectralBackend::new(*u.grid()).energy(u.values(), nu)
}

/// Evaluates every term of the discrete energy inequality for one step.
pub fn dissipation_report<T: Real, D: Discretization<T> + ?Sized>(
    backend: &D,
    u_prev: &[T],
    u_next: &[T],
    params: &SchemeParams<T>,
) -> EnergyReport<T> {
    let h = backend.cell_volume();
    let increment: Vec<T> = u_next.iter().zip(u_prev).map(|(&b, &a)| b - a).collect();
    let lap_next = backend.laplacian(u_next);
    let potential: Vec<T> = lap_next
        .iter()
        .zip(&increment)
        .zip(u_prev)
        .map(|((&l, &d), &u)| -params.nu * l + params.a * d + nonlinearity(u))
        .collect();
    let grad_h_sq = backend.dirichlet_form(&potential);
    let increment_sq = h * increment.iter().map(|&d| d * d).sum::<T>();
    let e_prev = backend.energy(u_prev, params.nu);
    let e_next = backend.energy(u_next, params.nu);
    let norms = backend.norms(u_next);
    EnergyReport {
        step: 0,
        time: T::zero(),
        energy: e_next,
        linf: norms.linf,
        mean: norms.mean,
        increment_l2: increment_sq.sqrt(),
        grad_h_l2: grad_h_sq.sqrt(),
        dissipation_residual: e_prev
            - e_next
            - T::lit(0.5) * params.a * increment_sq
            - params.tau * grad_h_sq,
    }
}

fn finish<T: Real, D: Discretization<T> + ?Sized>(
    backend: &D,
    state: StepperState<T>,
    params: &SchemeParams<T>,
    u_next: Vec<T>,
) -> Result<StepperState<T>> {
    if u_next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("time step"));
    }
    let mut report = dissipation_report(backend, &state.u, &u_next, params);
    report.step = state.n + 1;
    report.time = T::from_usize(state.n + 1).expect("step count fits the scalar type") * params.tau;
    let mut next = state.advance(u_next, report);
    next.t = report.time;
    Ok(next)
}

/// One step of the scheme on any discretization.
pub fn step<T: Real, D: Discretization<T> + ?Sized>(
    backend: &D,
    state: StepperState<T>,
    params: &SchemeParams<T>,
) -> Result<StepperState<T>> {
    check_len(backend, &state)?;
    let u_next = backend.solve_step(params, &state.u)?;
    finish(backend, state, params, u_next)
}

/// One step solved exactly in coefficient space.
pub fn step_spectral<T: SpectralReal>(
    backend: &SpectralBackend<T>,
    state: StepperState<T>,
    params: &SchemeParams<T>,
) -> Result<StepperState<T>> {
    step(backend, state, params)
}

/// One step with the graph Laplacian, solved by conjugate gradients.
pub fn step_graph<T: Real>(
    backend: &GraphBackend<T>,
    state: StepperState<T>,
    params: &SchemeParams<T>,
) -> Result<StepperState<T>> {
    step(backend, state, params)
}

/// One step computed through the two-resolvent factorization that underlies
/// the maximum-principle argument:
///
/// `u^{n+1} = R((1-β)Aτ) [ (f₂(u) + R(βAτ) f₁(u)) / (βA) ]`
///
/// with `R(k) = (I - kΔ)^{-1}`, `f₁(u) = u³ - ((1-β)A + 1)u` and
/// `f₂(u) = -u³ + (A + 1)u`. Algebraically identical to [`step`].
pub fn invariant_region_step<T: Real, D: Discretization<T> + ?Sized>(
    backend: &D,
    state: StepperState<T>,
    params: &SchemeParams<T>,
) -> Result<StepperState<T>> {
    check_len(backend, &state)?;
    let a_cr = critical_a(params.nu, params.tau)?;
    if params.a < a_cr {
        return Err(Error::Inadmissible(format!(
            "A = {} < A_cr = {a_cr}",
            params.a
        )));
    }
    let split = splitting(params)?;
    let (a, tau) = (params.a, params.tau);
    let beta_a = split.beta * a;
    let lower = split.complement * a + T::one();
    let upper = a + T::one();

    let f1: Vec<T> = state.u.iter().map(|&u| u * u * u - lower * u).collect();
    let smoothed = backend.resolvent(beta_a * tau, &f1)?;
    let g: Vec<T> = state
        .u
        .iter()
        .zip(&smoothed)
        .map(|(&u, &s)| (upper * u - u * u * u + s) / beta_a)
        .collect();
    let u_next = backend.resolvent(split.complement * a * tau, &g)?;
    finish(backend, state, params, u_next)
}

fn check_len<T: Real, D: Discretization<T> + ?Sized>(
    backend: &D,
    state: &StepperState<T>,
) -> Result<()> {
    if state.u.len() != backend.len() {
        return Err(Error::InvalidGrid(format!(
            "state has {} values, discretization has {} unknowns",
            state.u.len(),
            backend.len()
        )));
    }
    Ok(())
}
