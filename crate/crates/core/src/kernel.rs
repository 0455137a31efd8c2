//! Resolvent kernels and improved contraction constants for mean-zero data.
//!
//! On a periodic 1D lattice the fixed-point equation
//! `u_j = (θ/2)(u_{j-1} + u_{j+1}) + (1-θ) f_j` is solved by a circular
//! convolution `u = c * f` with a strictly positive kernel summing to one.
//! For mean-zero `f` this gives `‖u‖∞ ≤ ε‖f‖∞` with `ε < 1`, either the sharp
//! value from the extreme points of `{‖σ‖∞ ≤ 1, Σσ = 0}` or the cruder
//! `1 - N·min c`. On a general conservative graph only the cruder bound is
//! available, from the columns of the resolvent.

use crate::error::{invalid, Error, Result};
use crate::graph::{GraphLaplacianOp, ResolventProblem};
use crate::scalar::Real;

/// Convolution kernel of the periodic 1D resolvent.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventKernel<T> {
    pub n: usize,
    pub theta: T,
    /// `u_k = Σ_j c_{(k-j) mod N} f_j`
    pub c: Vec<T>,
    pub epsilon_sharp: T,
    /// `1 - N·min_j c_j`
    pub epsilon_perturbation: T,
}

/// Kernel `c_j = (1-θ)/N Σ_k e^{2πijk/N} / (1 - θcos(2πk/N))`.
///
/// Evaluated through the periodized free-space kernel
/// `c_j = (1-r)/(1+r) · (r^j + r^{N-j}) / (1 - r^N)` with
/// `r = θ/(1 + √(1-θ²))`, which keeps every entry positive to full relative
/// precision even where it decays far below the largest one.
pub fn kernel_1d_periodic<T: Real>(n: usize, theta: T) -> Result<ResolventKernel<T>> {
    if n < 2 {
        return Err(invalid("N", format!("{n} < 2")));
    }
    if !(theta > T::zero() && theta < T::one()) {
        return Err(invalid("theta", format!("{theta} not in (0, 1)")));
    }
    let nf = T::from_usize(n).unwrap();
    let r = theta / (T::one() + (T::one() - theta * theta).sqrt());
    let scale = (T::one() - r) / (T::one() + r) / (T::one() - r.powi(n as i32));
    let c: Vec<T> = (0..n)
        .map(|j| scale * (r.powi(j as i32) + r.powi((n - j) as i32)))
        .collect();
    let min_c = c.iter().copied().fold(T::infinity(), T::min);
    let mut kernel = ResolventKernel {
        n,
        theta,
        epsilon_perturbation: T::one() - nf * min_c,
        epsilon_sharp: T::zero(),
        c,
    };
    kernel.epsilon_sharp = sharp_meanzero_constant(&kernel)?;
    Ok(kernel)
}

impl<T: Real> ResolventKernel<T> {
    /// Circular convolution `(c * f)_k`.
    pub fn convolve(&self, f: &[T]) -> Vec<T> {
        assert_eq!(f.len(), self.n, "data length mismatch");
        (0..self.n)
            .map(|k| {
                f.iter()
                    .enumerate()
                    .map(|(j, &fj)| self.c[(k + self.n - j) % self.n] * fj)
                    .sum()
            })
            .collect()
    }

    /// Mean-zero `f` with `‖f‖∞ = 1` and `(c * f)_0 = ε_sharp`.
    pub fn extremal_data(&self) -> Vec<T> {
        let (order, sorted) = sorted_with_order(&self.c);
        let (_, sigma) = maximize_linear_meanzero(&sorted).expect("kernel entries are nonnegative");
        // (c*f)_0 = Σ_j c_{-j} f_j, so f_{-i} carries the weight of c_i.
        let mut f = vec![T::zero(); self.n];
        for (rank, &i) in order.iter().enumerate() {
            f[(self.n - i) % self.n] = sigma[rank];
        }
        f
    }
}

/// Stable ascending sort; returns the original indices and the sorted values.
fn sorted_with_order<T: Real>(c: &[T]) -> (Vec<usize>, Vec<T>) {
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[a].partial_cmp(&c[b]).expect("finite kernel entries"));
    let sorted = order.iter().map(|&i| c[i]).collect();
    (order, sorted)
}

/// `max c·σ` over `{‖σ‖∞ ≤ 1, Σσ = 0}` for ascending nonnegative `c`.
///
/// The maximum is `Σ_{j ≥ N-⌊N/2⌋} c_j - Σ_{j < ⌊N/2⌋} c_j`, attained by
/// `σ = (-1, …, -1, [0,] 1, …, 1)`.
pub fn maximize_linear_meanzero<T: Real>(c: &[T]) -> Result<(T, Vec<T>)> {
    let n = c.len();
    if n < 2 {
        return Err(invalid("c", format!("length {n} < 2")));
    }
    if c.iter().any(|&x| !(x >= T::zero()) || !x.is_finite()) {
        return Err(invalid("c", "entries must be finite and nonnegative"));
    }
    if c.windows(2).any(|w| w[0] > w[1]) {
        return Err(invalid("c", "entries must be sorted ascending"));
    }
    let half = n / 2;
    let top: T = c[n - half..].iter().copied().sum();
    let bottom: T = c[..half].iter().copied().sum();
    let sigma = (0..n)
        .map(|j| {
            if j < half {
                -T::one()
            } else if j >= n - half {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect();
    Ok((top - bottom, sigma))
}

/// Sharp mean-zero contraction constant of a circulant kernel.
pub fn sharp_meanzero_constant<T: Real>(kernel: &ResolventKernel<T>) -> Result<T> {
    let (_, sorted) = sorted_with_order(&kernel.c);
    maximize_linear_meanzero(&sorted).map(|(v, _)| v)
}

/// Resolvent columns of a general conservative graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralKernel<T> {
    pub vertex_count: usize,
    pub k: T,
    /// `columns[l][i] = c_i^(l)`: the solution with Kronecker data at `l`.
    pub columns: Vec<Vec<T>>,
    /// `min_{i,l} c_i^(l)`
    pub epsilon0: T,
    /// `1 - N_v·ε₀`
    pub epsilon: T,
}

impl<T: Real> GeneralKernel<T> {
    /// Zero `ε₀` means the mean-zero bound is vacuous (disconnected graph).
    pub fn is_degenerate(&self) -> bool {
        self.epsilon0 <= T::zero()
    }

    /// `u_i = Σ_l c_i^(l) f_l`
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        assert_eq!(f.len(), self.vertex_count, "data length mismatch");
        (0..self.vertex_count)
            .map(|i| {
                self.columns
                    .iter()
                    .zip(f)
                    .map(|(col, &fl)| col[i] * fl)
                    .sum()
            })
            .collect()
    }

    /// `Σ_l c_i^(l)` for each row `i`.
    pub fn row_sums(&self) -> Vec<T> {
        (0..self.vertex_count)
            .map(|i| self.columns.iter().map(|col| col[i]).sum())
            .collect()
    }
}

/// Solves the resolvent with every Kronecker datum; columns are computed in parallel.
pub fn general_kernel<T: Real>(op: &GraphLaplacianOp<T>, k: T) -> Result<GeneralKernel<T>> {
    use rayon::prelude::*;

    if !op.is_conservative() {
        return Err(Error::MalformedOperator(
            "general kernel requires a conservative operator".into(),
        ));
    }
    let problem = ResolventProblem::new(op, k)?;
    let n = op.vertex_count();
    let columns = (0..n)
        .into_par_iter()
        .map(|l| {
            let mut delta = vec![T::zero(); n];
            delta[l] = T::one();
            problem.solve(&delta).map(|s| s.u)
        })
        .collect::<Result<Vec<_>>>()?;
    let epsilon0 = columns
        .iter()
        .flatten()
        .copied()
        .fold(T::infinity(), T::min)
        .max(T::zero());
    Ok(GeneralKernel {
        vertex_count: n,
        k,
        columns,
        epsilon0,
        epsilon: T::one() - T::from_usize(n).unwrap() * epsilon0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Boundary;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute force over extreme points: σ ∈ {-1, 1}^N with one coordinate
    /// replaced by whatever balances the sum (when it lands in [-1, 1]).
    fn brute_force_max(c: &[f64]) -> f64 {
        let n = c.len();
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << n) {
            let sigma: Vec<f64> = (0..n)
                .map(|j| if mask >> j & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            for free in 0..n {
                let rest: f64 = sigma
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != free)
                    .map(|(_, s)| s)
                    .sum();
                let s_free = -rest;
                if s_free.abs() <= 1.0 {
                    let mut s = sigma.clone();
                    s[free] = s_free;
                    best = best.max(c.iter().zip(&s).map(|(a, b)| a * b).sum());
                }
            }
        }
        best
    }

    /// Dense fixed-point oracle: (I - θ/2 (S + S^T)) u = (1-θ) δ_0.
    fn dense_kernel(n: usize, theta: f64) -> Vec<f64> {
        let mut m = nalgebra::DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            m[(i, (i + 1) % n)] -= theta / 2.0;
            m[(i, (i + n - 1) % n)] -= theta / 2.0;
        }
        let mut rhs = nalgebra::DVector::zeros(n);
        rhs[0] = 1.0 - theta;
        m.lu().solve(&rhs).unwrap().iter().copied().collect()
    }

    #[test]
    fn n2_kernel() {
        for theta in [0.1f64, 0.5, 0.9] {
            let k = kernel_1d_periodic(2, theta).unwrap();
            assert!((k.c[0] - 1.0 / (1.0 + theta)).abs() < 1e-15);
            assert!((k.c[1] - theta / (1.0 + theta)).abs() < 1e-15);
            assert!((k.epsilon_sharp - (1.0 - theta) / (1.0 + theta)).abs() < 1e-15);
        }
    }

    #[test]
    fn n3_meanzero_scaling() {
        for theta in [0.1f64, 0.5, 0.9] {
            let k = kernel_1d_periodic(3, theta).unwrap();
            let factor = (1.0 - theta) / (1.0 + theta / 2.0);
            let f = [0.4, -1.0, 0.6];
            for (u, fi) in k.convolve(&f).iter().zip(f) {
                assert!((u - factor * fi).abs() < 1e-15);
            }
            assert!((k.epsilon_sharp - factor).abs() < 1e-15);
        }
        assert!((kernel_1d_periodic(3, 0.5f64).unwrap().epsilon_sharp - 0.4).abs() < 1e-15);
    }

    #[test]
    fn kernel_matches_dense_fixed_point() {
        for n in [2, 3, 5, 8, 17] {
            for theta in [0.1, 0.5, 0.99] {
                let k = kernel_1d_periodic(n, theta).unwrap();
                let dense = dense_kernel(n, theta);
                for (a, b) in k.c.iter().zip(&dense) {
                    assert!((a - b).abs() < 1e-13, "n={n} θ={theta}");
                }
                let ones = k.convolve(&vec![1.0; n]);
                assert!(ones.iter().all(|x| (x - 1.0).abs() < 1e-13));
            }
        }
    }

    fn cosine_sum_kernel(n: usize, theta: f64) -> Vec<f64> {
        let w = 2.0 * std::f64::consts::PI / n as f64;
        (0..n)
            .map(|j| {
                (1.0 - theta) / n as f64
                    * (0..n)
                        .map(|k| {
                            ((j * k % n) as f64 * w).cos() / (1.0 - theta * (k as f64 * w).cos())
                        })
                        .sum::<f64>()
            })
            .collect()
    }

    #[test]
    fn closed_form_matches_cosine_sum() {
        for n in 2..=64 {
            for theta in [0.1, 0.5, 0.9, 0.99] {
                let k = kernel_1d_periodic(n, theta).unwrap();
                for (a, b) in k.c.iter().zip(cosine_sum_kernel(n, theta)) {
                    assert!((a - b).abs() <= 1e-14, "n={n} θ={theta}");
                }
            }
        }
    }

    #[test]
    fn kernel_rejects_bad_theta() {
        assert!(kernel_1d_periodic(4, 0.0).is_err());
        assert!(kernel_1d_periodic(4, 1.0).is_err());
        assert!(kernel_1d_periodic(1, 0.5).is_err());
    }

    #[test]
    fn positivity_and_normalization_sweep() {
        for n in 2..=256 {
            for theta in [0.1, 0.5, 0.9, 0.99] {
                let k = kernel_1d_periodic(n, theta).unwrap();
                let sum: f64 = k.c.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12, "n={n} θ={theta} sum={sum}");
                assert!(k.c.iter().all(|&x| x > 0.0), "n={n} θ={theta}");
                assert!(k.epsilon_sharp > 0.0 && k.epsilon_sharp <= 1.0 + 1e-15);
                let min_c = k.c.iter().copied().fold(f64::INFINITY, f64::min);
                if n as f64 * min_c > 1e-12 {
                    assert!(k.epsilon_sharp < 1.0);
                }
                assert!(k.epsilon_sharp <= k.epsilon_perturbation + 1e-15);
                // 1 - N·min c can round to 1 when min c is tiny; positivity is checked above
                assert!(k.epsilon_perturbation <= 1.0);
            }
        }
    }

    #[test]
    fn small_n_closed_forms() {
        let (v, s) = maximize_linear_meanzero(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((v, s), (2.0, vec![-1.0, 0.0, 1.0]));
        assert_eq!(maximize_linear_meanzero(&[0.0, 0.0]).unwrap().0, 0.0);
        let (v, s) = maximize_linear_meanzero(&[1.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!((v, s), (4.0, vec![-1.0, -1.0, 1.0, 1.0]));
        assert_eq!(brute_force_max(&[1.0, 1.0, 2.0, 4.0]), 4.0);
        assert!(maximize_linear_meanzero(&[2.0, 1.0]).is_err());
        assert!(maximize_linear_meanzero(&[-1.0, 1.0]).is_err());
    }

    #[test]
    fn extremal_data_attains_sharp_constant() {
        for n in 2..=8 {
            for theta in [0.1, 0.5, 0.9] {
                let k = kernel_1d_periodic(n, theta).unwrap();
                let f = k.extremal_data();
                assert!(f.iter().sum::<f64>().abs() < 1e-15);
                assert!(f.iter().all(|x| x.abs() <= 1.0));
                let u = k.convolve(&f);
                assert!((u[0] - k.epsilon_sharp).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn general_kernel_matches_circulant_kernel() {
        let n = 9;
        let dx = 0.4f64;
        let kk = 0.3;
        let op = GraphLaplacianOp::central_difference_1d(n, dx, Boundary::Periodic).unwrap();
        let theta = 2.0 * kk / (2.0 * kk + dx * dx);
        let circ = kernel_1d_periodic(n, theta).unwrap();
        let gen = general_kernel(&op, kk).unwrap();
        for (l, col) in gen.columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                assert!((v - circ.c[(i + n - l) % n]).abs() < 1e-12);
            }
        }
        assert!((gen.epsilon - circ.epsilon_perturbation).abs() < 1e-12);
        let u = gen.apply(&[2.0; 9]);
        // n columns, each within 1e-13 of exact
        assert!(u.iter().all(|x| (x - 2.0).abs() <= 2.0 * n as f64 * 1e-13));
    }

    #[test]
    fn general_kernel_degenerate_and_nonconservative() {
        let split = GraphLaplacianOp::from_edges(4, [(0, 1, 1.0f64), (2, 3, 1.0)], None).unwrap();
        let gk = general_kernel(&split, 1.0).unwrap();
        assert!(gk.is_degenerate());
        assert_eq!(gk.epsilon, 1.0);
        let dirichlet =
            GraphLaplacianOp::central_difference_1d(4, 1.0, Boundary::Dirichlet).unwrap();
        assert!(general_kernel(&dirichlet, 1.0).is_err());
    }

    #[test]
    fn general_kernel_random_graph_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let mut edges = vec![];
        for i in 0..6 {
            edges.push((i, (i + 1) % 6, rng.gen_range(0.2..2.0)));
        }
        edges.push((0, 3, 0.7f64));
        let op = GraphLaplacianOp::from_edges(6, edges, None).unwrap();
        let gk = general_kernel(&op, 0.8).unwrap();
        assert!(gk.epsilon0 > 0.0);
        for s in gk.row_sums() {
            assert!((s - 1.0).abs() <= 1e-11);
        }
        let problem = ResolventProblem::new(&op, 0.8).unwrap();
        for _ in 0..200 {
            let mut f: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = f.iter().sum::<f64>() / 6.0;
            f.iter_mut().for_each(|x| *x -= mean);
            let u = problem.solve_dense(&f).unwrap();
            let ratio = u.iter().fold(0.0f64, |m, x| m.max(x.abs()))
                / f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(ratio <= gk.epsilon * (1.0 + 1e-11));
        }
    }

    proptest! {
        #[test]
        fn closed_form_matches_enumeration(mut c in proptest::collection::vec(0.0f64..1.0, 2..=8)) {
            c.sort_by(f64::total_cmp);
            let (v, sigma) = maximize_linear_meanzero(&c).unwrap();
            prop_assert!((v - brute_force_max(&c)).abs() <= 1e-12);
            let dot: f64 = c.iter().zip(&sigma).map(|(a, b)| a * b).sum();
            prop_assert!((dot - v).abs() <= 1e-12);
            prop_assert_eq!(sigma.iter().sum::<f64>(), 0.0);
        }

        #[test]
        fn improved_contraction(seed in any::<u64>(), n in 2usize..=16, theta in 0.05f64..0.95) {
            let k = kernel_1d_periodic(n, theta).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = f.iter().sum::<f64>() / n as f64;
            f.iter_mut().for_each(|x| *x -= mean);
            let fmax = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let umax = k.convolve(&f).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            prop_assert!(umax <= k.epsilon_sharp * fmax * (1.0 + 1e-12));
        }
    }
}
