//! Closed-form L∞ stability theory of the stabilized semi-implicit scheme.
//!
//! For `(u^{n+1}-u^n)/τ = -νΔ²u^{n+1} + AΔ(u^{n+1}-u^n) + Δf(u^n)` with
//! `f(u) = u³ - u`, every step maps the ball `‖u‖∞ ≤ M` into itself whenever
//! `A ≥ A_cr = 1 + 2√(1 + 4ν/(3τ))` and `M ∈ [M0, M1]`. The step splits as a
//! product of two resolvents with weights `β` and `1-β`, where
//! `β(1-β) = ν/(A²τ)`.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Scheme parameters `(ν, τ, A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams<T> {
    pub nu: T,
    pub tau: T,
    pub a: T,
}

impl<T: Real> SchemeParams<T> {
    pub fn new(nu: T, tau: T, a: T) -> Result<Self> {
        if !(nu > T::zero() && nu.is_finite()) {
            return Err(invalid("nu", format!("{nu} must be positive")));
        }
        if !(tau > T::zero() && tau.is_finite()) {
            return Err(invalid("tau", format!("{tau} must be positive")));
        }
        if !(a >= T::zero() && a.is_finite()) {
            return Err(invalid("A", format!("{a} must be nonnegative")));
        }
        let p = Self { nu, tau, a };
        if !p.k().is_finite() {
            return Err(invalid("nu/tau", "ratio overflows"));
        }
        Ok(p)
    }

    /// `k = ν/τ`.
    pub fn k(&self) -> T {
        self.nu / self.tau
    }

    pub fn with_tau(&self, tau: T) -> Result<Self> {
        Self::new(self.nu, tau, self.a)
    }

    pub fn with_a(&self, a: T) -> Result<Self> {
        Self::new(self.nu, self.tau, a)
    }
}

/// `A_cr = 1 + 2√(1 + (4/3)·ν/τ)`.
pub fn critical_a<T: Real>(nu: T, tau: T) -> Result<T> {
    if !(nu > T::zero() && nu.is_finite()) {
        return Err(invalid("nu", format!("{nu} must be positive")));
    }
    if !(tau > T::zero() && tau.is_finite()) {
        return Err(invalid("tau", format!("{tau} must be positive")));
    }
    let k = nu / tau;
    Ok(T::one() + T::lit(2.0) * (T::one() + T::lit(4.0) / T::lit(3.0) * k).sqrt())
}

/// The splitting weights `β ∈ [1/2, 1)` and `1 - β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splitting<T> {
    pub beta: T,
    /// `1 - β`, computed as `ν/(A²τβ)` to avoid cancellation when `β → 1`.
    pub complement: T,
}

/// Larger root of `β(1-β) = ν/(A²τ)`.
///
/// Fails when `ν/(A²τ) > 1/4` (no real root) or when the root rounds to 1.
pub fn splitting<T: Real>(params: &SchemeParams<T>) -> Result<Splitting<T>> {
    let quarter = T::lit(0.25);
    let product = params.k() / (params.a * params.a);
    if !(product <= quarter) {
        return Err(Error::Inadmissible(format!(
            "ν/(A²τ) = {product} exceeds 1/4, no splitting exists"
        )));
    }
    let half = T::lit(0.5);
    let beta = half + (quarter - product).sqrt();
    if beta >= T::one() {
        return Err(Error::Inadmissible(format!(
            "ν/(A²τ) = {product} is below working precision, β rounds to 1"
        )));
    }
    Ok(Splitting {
        beta,
        complement: product / beta,
    })
}

/// `β` alone; see [`splitting`].
pub fn splitting_beta<T: Real>(params: &SchemeParams<T>) -> Result<T> {
    splitting(params).map(|s| s.beta)
}

fn window_unchecked<T: Real>(params: &SchemeParams<T>, split: &Splitting<T>) -> (T, T) {
    let three = T::lit(3.0);
    let m0 = T::lit(2.0) * ((T::one() + split.complement * params.a) / three).sqrt();
    let m1 = ((params.a + T::one()) / three).sqrt();
    (m0, m1)
}

/// Invariant window `[M0, M1]` with `M0 = 2√((1+(1-β)A)/3)` and `M1 = √((A+1)/3)`.
///
/// Fails when `A < A_cr`, which is exactly when `M0 > M1`.
pub fn bound_window<T: Real>(params: &SchemeParams<T>) -> Result<(T, T)> {
    let a_cr = critical_a(params.nu, params.tau)?;
    let split = splitting(params)?;
    if params.a < a_cr {
        let (m0, m1) = window_unchecked(params, &split);
        return Err(Error::Inadmissible(format!(
            "A = {} < A_cr = {a_cr}: window is empty (M0 = {m0} > M1 = {m1})",
            params.a
        )));
    }
    Ok(window_unchecked(params, &split))
}

/// Outcome of checking a parameter set and initial bound against the theory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCertificate<T> {
    pub params: SchemeParams<T>,
    pub a_cr: T,
    /// `None` when `ν/(A²τ) > 1/4`.
    pub beta: Option<T>,
    pub m0: Option<T>,
    pub m1: T,
    /// The bound being certified.
    pub m: T,
    pub linf_u0: T,
    pub admissible: bool,
}

impl<T: Real> StabilityCertificate<T> {
    /// `A ≥ A_cr`, independent of the initial data.
    pub fn stabilization_ok(&self) -> bool {
        self.params.a >= self.a_cr
    }
}

/// Certifies `‖u^n‖∞ ≤ M1` for all `n`, given `‖u^0‖∞ = linf_u0`.
pub fn certify<T: Real>(params: &SchemeParams<T>, linf_u0: T) -> StabilityCertificate<T> {
    let m1 = ((params.a + T::one()) / T::lit(3.0)).sqrt();
    certify_with_bound(params, linf_u0, m1)
}

/// As [`certify`], with an explicit `M`; admissible only if `M ∈ [M0, M1]`.
pub fn certify_with_bound<T: Real>(
    params: &SchemeParams<T>,
    linf_u0: T,
    m: T,
) -> StabilityCertificate<T> {
    let a_cr = critical_a(params.nu, params.tau).expect("SchemeParams validated ν and τ");
    let split = splitting(params).ok();
    let (m0, m1) = match &split {
        Some(s) => {
            let (m0, m1) = window_unchecked(params, s);
            (Some(m0), m1)
        }
        None => (None, ((params.a + T::one()) / T::lit(3.0)).sqrt()),
    };
    let in_window = m0.is_some_and(|m0| m >= m0 * (T::one() - T::lit(1e-12))) && m <= m1;
    StabilityCertificate {
        params: *params,
        a_cr,
        beta: split.map(|s| s.beta),
        m0,
        m1,
        m,
        linf_u0,
        admissible: params.a >= a_cr && in_window && linf_u0 <= m,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubicBranch {
    /// `f1(x) = x³ - αx`
    F1,
    /// `f2(x) = -x³ + αx`
    F2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope<T> {
    /// `max_{|x| ≤ L} |f(x)|`
    pub max_abs: T,
    /// `f(L)`
    pub endpoint: T,
    /// `max_abs ≤ f(L)` up to rounding.
    pub holds: bool,
}

/// Analytic maximum of `|f|` over `[-L, L]` for the two auxiliary cubics.
///
/// `|f1|` and `|f2|` coincide; both are odd, so the maximum is taken at `L` or
/// at the interior critical point `√(α/3)` when it lies inside.
pub fn cubic_envelope<T: Real>(alpha: T, l: T, branch: CubicBranch) -> Result<Envelope<T>> {
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(invalid("alpha", format!("{alpha} must be positive")));
    }
    if !(l > T::zero() && l.is_finite()) {
        return Err(invalid("L", format!("{l} must be positive")));
    }
    let f1 = |x: T| x * x * x - alpha * x;
    let critical = (alpha / T::lit(3.0)).sqrt();
    let mut max_abs = f1(l).abs();
    if critical <= l {
        max_abs = max_abs.max(f1(critical).abs());
    }
    let endpoint = match branch {
        CubicBranch::F1 => f1(l),
        CubicBranch::F2 => -f1(l),
    };
    let slack = T::lit(8.0) * T::epsilon() * (max_abs + alpha * l);
    Ok(Envelope {
        max_abs,
        endpoint,
        holds: max_abs <= endpoint + slack,
    })
}

/// Heuristic step limit `8ν/L²` for the unstabilized (`A = 0`) scheme.
///
/// This is a necessary-style condition from a crude Lipschitz estimate of `f`,
/// not a proven stability bound.
pub fn unstabilized_tau_heuristic<T: Real>(nu: T, lipschitz: T) -> Result<T> {
    if !(nu > T::zero()) {
        return Err(invalid("nu", format!("{nu} must be positive")));
    }
    if !(lipschitz > T::zero()) {
        return Err(invalid(
            "lipschitz_L",
            format!("{lipschitz} must be positive"),
        ));
    }
    Ok(T::lit(8.0) * nu / (lipschitz * lipschitz))
}
