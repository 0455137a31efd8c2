//! Spatial discretizations the stepper runs on.

use crate::error::{Error, Result};
use crate::field::{vector_norms, Norms, TorusGrid, Transform};
use crate::graph::{GraphLaplacianOp, ResolventProblem};
use crate::scalar::{Real, SpectralReal};
use crate::stability::SchemeParams;

use super::nonlinearity;

/// Relative residual the graph step solve aims for.
const STEP_SOLVE_RTOL: f64 = 1e-13;
/// Relative residual the graph step solve must reach.
const STEP_SOLVE_RTOL_REQUIRED: f64 = 1e-11;

/// A discrete Laplacian together with the solves the scheme needs.
pub trait Discretization<T: Real>: Send + Sync {
    /// Number of unknowns.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight attached to each unknown.
    fn cell_volume(&self) -> T;

    fn laplacian(&self, u: &[T]) -> Vec<T>;

    /// `u^{n+1}` from `(I + ντΔ² - AτΔ)u^{n+1} = (I - AτΔ)u^n + τΔf(u^n)`.
    fn solve_step(&self, params: &SchemeParams<T>, u: &[T]) -> Result<Vec<T>>;

    /// `(I - kΔ)^{-1} f`.
    fn resolvent(&self, k: T, f: &[T]) -> Result<Vec<T>>;

    /// Whether the scheme preserves `Σu` exactly.
    fn conserves_mean(&self) -> bool;

    /// Grid the unknowns live on, when there is one.
    fn grid(&self) -> Option<TorusGrid>;

    /// Discrete Dirichlet form `‖∇u‖² = -h^d (u, Δu)`.
    fn dirichlet_form(&self, u: &[T]) -> T {
        let lap = self.laplacian(u);
        let s: T = u.iter().zip(&lap).map(|(&a, &b)| a * b).sum();
        (-self.cell_volume() * s).max(T::zero())
    }

    /// `E(u) = h^d Σ [ν/2 |∇u|² + (u² - 1)²/4]`, with the gradient term from
    /// [`Self::dirichlet_form`].
    fn energy(&self, u: &[T], nu: T) -> T {
        let quarter = T::lit(0.25);
        let potential: T = u
            .iter()
            .map(|&v| {
                let w = v * v - T::one();
                quarter * w * w
            })
            .sum();
        T::lit(0.5) * nu * self.dirichlet_form(u) + self.cell_volume() * potential
    }

    fn norms(&self, u: &[T]) -> Norms<T> {
        vector_norms(u, self.cell_volume())
    }
}

/// Pseudo-spectral discretization on the torus.
#[derive(Debug, Clone)]
pub struct SpectralBackend<T: SpectralReal> {
    transform: Transform<T>,
    k2: Vec<T>,
    dealias: Option<Vec<bool>>,
}

impl<T: SpectralReal> SpectralBackend<T> {
    pub fn new(grid: TorusGrid) -> Self {
        let transform = Transform::new(grid);
        let k2 = transform.wavevector_sq();
        Self {
            transform,
            k2,
            dealias: None,
        }
    }

    /// Truncates the nonlinear term to `|k_a| ≤ n/3` before each step.
    pub fn with_dealiasing(mut self, on: bool) -> Self {
        self.dealias = on.then(|| self.transform.dealias_mask());
        self
    }

    pub fn transform(&self) -> &Transform<T> {
        &self.transform
    }

    fn apply_multiplier(&self, u: &[T], m: impl Fn(T) -> T) -> Vec<T> {
        let mut hat = self.transform.forward_raw(u);
        for (c, &k2) in hat.iter_mut().zip(&self.k2) {
            *c = *c * m(k2);
        }
        self.transform.inverse_raw(hat)
    }
}

impl<T: SpectralReal> Discretization<T> for SpectralBackend<T> {
    fn len(&self) -> usize {
        self.k2.len()
    }

    fn cell_volume(&self) -> T {
        self.transform.grid().cell_volume()
    }

    fn laplacian(&self, u: &[T]) -> Vec<T> {
        self.apply_multiplier(u, |k2| -k2)
    }

    fn solve_step(&self, params: &SchemeParams<T>, u: &[T]) -> Result<Vec<T>> {
        let SchemeParams { nu, tau, a } = *params;
        let u_hat = self.transform.forward_raw(u);
        let nl: Vec<T> = u.iter().map(|&v| nonlinearity(v)).collect();
        let mut f_hat = self.transform.forward_raw(&nl);
        if let Some(mask) = &self.dealias {
            for (c, &keep) in f_hat.iter_mut().zip(mask) {
                if !keep {
                    *c = *c * T::zero();
                }
            }
        }
        let next: Vec<_> = u_hat
            .iter()
            .zip(&f_hat)
            .zip(&self.k2)
            .map(|((&uh, &fh), &k2)| {
                let implicit = T::one() + nu * tau * k2 * k2 + a * tau * k2;
                (uh * (T::one() + a * tau * k2) - fh * (tau * k2)) / implicit
            })
            .collect();
        Ok(self.transform.inverse_raw(next))
    }

    fn resolvent(&self, k: T, f: &[T]) -> Result<Vec<T>> {
        Ok(self.apply_multiplier(f, |k2| T::one() / (T::one() + k * k2)))
    }

    fn conserves_mean(&self) -> bool {
        true
    }

    fn grid(&self) -> Option<TorusGrid> {
        Some(*self.transform.grid())
    }
}

/// Graph-Laplacian discretization; each vertex carries weight `cell_volume`.
#[derive(Debug, Clone)]
pub struct GraphBackend<T> {
    op: GraphLaplacianOp<T>,
    cell_volume: T,
    grid: Option<TorusGrid>,
}

impl<T: Real> GraphBackend<T> {
    pub fn new(op: GraphLaplacianOp<T>, cell_volume: T) -> Self {
        Self {
            op,
            cell_volume,
            grid: None,
        }
    }

    /// Periodic lattice stencil (central difference, five-point, seven-point)
    /// on the collocation points of `grid`.
    pub fn periodic_lattice(grid: TorusGrid) -> Result<Self> {
        let op =
            GraphLaplacianOp::periodic_lattice(grid.dim(), grid.points_per_dim(), grid.spacing())?;
        Ok(Self {
            op,
            cell_volume: grid.cell_volume(),
            grid: Some(grid),
        })
    }

    /// Attaches a grid for snapshot output; its size must match the operator.
    pub fn with_grid(mut self, grid: TorusGrid) -> Result<Self> {
        if grid.len() != self.op.vertex_count() {
            return Err(Error::InvalidGrid(format!(
                "grid of {} points for an operator on {} vertices",
                grid.len(),
                self.op.vertex_count()
            )));
        }
        self.grid = Some(grid);
        Ok(self)
    }

    pub fn operator(&self) -> &GraphLaplacianOp<T> {
        &self.op
    }

    /// `x + ντΔ²x - AτΔx`
    fn apply_step_matrix(&self, params: &SchemeParams<T>, x: &[T]) -> Vec<T> {
        let lap = self.op.apply(x);
        let bih = self.op.apply(&lap);
        let (nt, at) = (params.nu * params.tau, params.a * params.tau);
        x.iter()
            .zip(&lap)
            .zip(&bih)
            .map(|((&xi, &li), &bi)| xi + nt * bi - at * li)
            .collect()
    }
}

impl<T: Real> Discretization<T> for GraphBackend<T> {
    fn len(&self) -> usize {
        self.op.vertex_count()
    }

    fn cell_volume(&self) -> T {
        self.cell_volume
    }

    fn laplacian(&self, u: &[T]) -> Vec<T> {
        self.op.apply(u)
    }

    /// Solves for the increment `δ = u^{n+1} - u^n`, which satisfies
    /// `(I + ντΔ² - AτΔ)δ = τΔ(f(u^n) - νΔu^n)`. The right side lies in the
    /// range of `Δ`, so for conservative operators the Krylov iterates stay
    /// sum-free and `Σu` is preserved.
    fn solve_step(&self, params: &SchemeParams<T>, u: &[T]) -> Result<Vec<T>> {
        let lap_u = self.op.apply(u);
        let nl: Vec<T> = u.iter().map(|&v| nonlinearity(v)).collect();
        let lap_nl = self.op.apply(&nl);
        let potential: Vec<T> = nl
            .iter()
            .zip(&lap_u)
            .map(|(&f, &l)| f - params.nu * l)
            .collect();
        let b: Vec<T> = self
            .op
            .apply(&potential)
            .into_iter()
            .map(|v| params.tau * v)
            .collect();

        let full_rhs_norm = norm2(
            &u.iter()
                .zip(&lap_u)
                .zip(&lap_nl)
                .map(|((&ui, &li), &ni)| ui - params.a * params.tau * li + params.tau * ni)
                .collect::<Vec<_>>(),
        );
        let delta = conjugate_gradient(
            |x| self.apply_step_matrix(params, x),
            &b,
            T::lit(STEP_SOLVE_RTOL) * full_rhs_norm,
            T::lit(STEP_SOLVE_RTOL_REQUIRED) * full_rhs_norm,
            10 * self.len() + 1000,
        )?;
        Ok(u.iter().zip(&delta).map(|(&a, &d)| a + d).collect())
    }

    fn resolvent(&self, k: T, f: &[T]) -> Result<Vec<T>> {
        Ok(ResolventProblem::new(&self.op, k)?.solve(f)?.u)
    }

    fn conserves_mean(&self) -> bool {
        self.op.is_conservative()
    }

    fn grid(&self) -> Option<TorusGrid> {
        self.grid
    }
}

fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Conjugate gradients from a zero start.
///
/// Iterates until `‖r‖₂ ≤ target`; if the cap is hit first, the result is
/// still accepted when `‖r‖₂ ≤ required`. Non-positive curvature means the
/// matrix is not symmetric positive definite.
pub(crate) fn conjugate_gradient<T: Real>(
    apply: impl Fn(&[T]) -> Vec<T>,
    b: &[T],
    target: T,
    required: T,
    max_iter: usize,
) -> Result<Vec<T>> {
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target {
        return Ok(x);
    }
    for _ in 0..max_iter {
        let ap = apply(&p);
        let curvature = dot(&p, &ap);
        if !(curvature > T::zero()) {
            return Err(Error::Indefinite(curvature.to_f64_lossy()));
        }
        let alpha = rr / curvature;
        for i in 0..n {
            x[i] = x[i] + alpha * p[i];
            r[i] = r[i] - alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        if rr_next.sqrt() <= target {
            return Ok(x);
        }
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
    }
    // the recursive residual drifts; check the true one before giving up
    let true_r: Vec<T> = apply(&x).iter().zip(b).map(|(&ax, &bi)| bi - ax).collect();
    let res = norm2(&true_r);
    if res <= required {
        Ok(x)
    } else {
        Err(Error::NotConverged {
            solver: "conjugate gradient",
            iterations: max_iter,
            residual: res.to_f64_lossy(),
        })
    }
}
