//! Weighted graph Laplacians `(Δu)_i = -w_ii u_i + Σ_{j≠i} w_ij u_j` and their resolvents.
//!
//! Operators are symmetric with nonnegative off-diagonal weights and diagonally
//! dominant rows. A *conservative* operator has `w_ii = Σ_{j≠i} w_ij` on every
//! row; it annihilates constants and preserves vector sums.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Relative slack when comparing a diagonal entry against its off-diagonal row sum.
const ROW_SUM_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Zero ghost values outside `0..n`.
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphLaplacianOp<T> {
    neighbors: Vec<Vec<(usize, T)>>,
    diagonal: Vec<T>,
    conservative: bool,
}

impl<T: Real> GraphLaplacianOp<T> {
    /// Builds an operator from undirected edges `(i, j, w_ij)`.
    ///
    /// Repeated edges accumulate. When `diagonal` is `None` every `w_ii` is
    /// the off-diagonal row sum, which makes the operator conservative.
    pub fn from_edges(
        vertex_count: usize,
        edges: impl IntoIterator<Item = (usize, usize, T)>,
        diagonal: Option<Vec<T>>,
    ) -> Result<Self> {
        if vertex_count == 0 {
            return Err(invalid("vertex_count", "graph has no vertices"));
        }
        let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); vertex_count];
        for (i, j, w) in edges {
            if i >= vertex_count || j >= vertex_count {
                return Err(Error::MalformedOperator(format!(
                    "edge ({i}, {j}) outside 0..{vertex_count}"
                )));
            }
            if i == j {
                return Err(Error::MalformedOperator(format!("self-loop at vertex {i}")));
            }
            if !(w.is_finite() && w >= T::zero()) {
                return Err(Error::MalformedOperator(format!(
                    "edge ({i}, {j}) has weight {w}, expected finite and nonnegative"
                )));
            }
            for (a, b) in [(i, j), (j, i)] {
                let slot = rows[a].entry(b).or_insert_with(T::zero);
                *slot = *slot + w;
            }
        }
        let neighbors: Vec<Vec<(usize, T)>> =
            rows.into_iter().map(|r| r.into_iter().collect()).collect();
        let row_sums: Vec<T> = neighbors
            .iter()
            .map(|r| r.iter().map(|&(_, w)| w).sum())
            .collect();

        let diagonal = match diagonal {
            None => row_sums.clone(),
            Some(d) => {
                if d.len() != vertex_count {
                    return Err(Error::MalformedOperator(format!(
                        "{} diagonal entries for {vertex_count} vertices",
                        d.len()
                    )));
                }
                d
            }
        };
        let tol = T::lit(ROW_SUM_RTOL);
        let mut conservative = true;
        for (i, (&d, &s)) in diagonal.iter().zip(&row_sums).enumerate() {
            if !d.is_finite() {
                return Err(Error::MalformedOperator(format!("diagonal {i} not finite")));
            }
            if d < s * (T::one() - tol) {
                return Err(Error::MalformedOperator(format!(
                    "row {i} not diagonally dominant: w_ii = {d} < {s}"
                )));
            }
            if d > s * (T::one() + tol) {
                conservative = false;
            }
        }
        Ok(Self {
            neighbors,
            diagonal,
            conservative,
        })
    }

    /// Second-order central difference on `n` points with spacing `dx`.
    pub fn central_difference_1d(n: usize, dx: T, bc: Boundary) -> Result<Self> {
        if n < 2 {
            return Err(invalid("N", format!("{n} < 2")));
        }
        if !(dx > T::zero() && dx.is_finite()) {
            return Err(invalid("dx", format!("{dx} must be positive")));
        }
        let w = T::one() / (dx * dx);
        match bc {
            Boundary::Periodic => Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n, w)), None),
            Boundary::Dirichlet => Self::from_edges(
                n,
                (0..n - 1).map(|i| (i, i + 1, w)),
                Some(vec![T::lit(2.0) * w; n]),
            ),
        }
    }

    /// Periodic five-point stencil on an `n × n` grid with spacing `h`.
    pub fn five_point_2d(n: usize, h: T) -> Result<Self> {
        Self::periodic_lattice(2, n, h)
    }

    /// Periodic `(2d+1)`-point stencil on an `n^dim` grid, row-major vertex order.
    pub fn periodic_lattice(dim: usize, n: usize, h: T) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid("dim", format!("{dim} not in 1..=3")));
        }
        if n < 2 {
            return Err(invalid("N", format!("{n} < 2")));
        }
        if !(h > T::zero() && h.is_finite()) {
            return Err(invalid("h", format!("{h} must be positive")));
        }
        let w = T::one() / (h * h);
        let total = n.pow(dim as u32);
        let mut edges = Vec::with_capacity(total * dim);
        for v in 0..total {
            for axis in 0..dim {
                let stride = n.pow((dim - 1 - axis) as u32);
                let coord = (v / stride) % n;
                let next = v - coord * stride + ((coord + 1) % n) * stride;
                edges.push((v, next, w));
            }
        }
        Self::from_edges(total, edges, None)
    }

    pub fn vertex_count(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_conservative(&self) -> bool {
        self.conservative
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diagonal
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, T)] {
        &self.neighbors[i]
    }

    pub fn max_diagonal(&self) -> T {
        self.diagonal.iter().fold(T::zero(), |m, &d| m.max(d))
    }

    /// `(Δu)_i = -w_ii u_i + Σ_j w_ij u_j`.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); u.len()];
        self.apply_into(u, &mut out);
        out
    }

    pub fn apply_into(&self, u: &[T], out: &mut [T]) {
        assert_eq!(u.len(), self.vertex_count(), "vector length mismatch");
        for (i, slot) in out.iter_mut().enumerate() {
            let off: T = self.neighbors[i].iter().map(|&(j, w)| w * u[j]).sum();
            *slot = off - self.diagonal[i] * u[i];
        }
    }

    /// `Δ` applied twice.
    pub fn apply_biharmonic(&self, u: &[T]) -> Vec<T> {
        self.apply(&self.apply(u))
    }

    /// Connectivity over edges of positive weight.
    pub fn is_connected(&self) -> bool {
        let n = self.vertex_count();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &(j, w) in &self.neighbors[i] {
                if w > T::zero() && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == n
    }

    /// Dense `f64` matrix of `Δ`, for oracle checks on small graphs.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.vertex_count();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = -self.diagonal[i].to_f64_lossy();
            for &(j, w) in &self.neighbors[i] {
                m[(i, j)] += w.to_f64_lossy();
            }
        }
        m
    }

    /// Plain-text edge list: header `N_v conservative_flag`, then `i j w_ij` lines
    /// (one per undirected edge, `i < j`). Non-conservative operators also list
    /// every diagonal entry as `i i w_ii`.
    pub fn to_edge_list(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.vertex_count(), u8::from(self.conservative));
        for (i, row) in self.neighbors.iter().enumerate() {
            for &(j, w) in row {
                if i < j {
                    let _ = writeln!(s, "{i} {j} {w}");
                }
            }
        }
        if !self.conservative {
            for (i, d) in self.diagonal.iter().enumerate() {
                let _ = writeln!(s, "{i} {i} {d}");
            }
        }
        s
    }

    /// Parses the format written by [`Self::to_edge_list`].
    ///
    /// Blank lines and `#` comments are ignored; repeated edges accumulate.
    /// For a conservative header, diagonal lines are optional but must equal
    /// the row sum. For a non-conservative header every diagonal entry must be
    /// given, and the resulting operator must actually be non-conservative.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Format("empty operator file".into()))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        let [nv, flag] = head[..] else {
            return Err(Error::Format(format!(
                "header `{header}` is not `N_v conservative_flag`"
            )));
        };
        let vertex_count: usize = nv
            .parse()
            .map_err(|_| Error::Format(format!("bad vertex count `{nv}`")))?;
        let conservative = match flag {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(Error::Format(format!("bad conservative flag `{other}`"))),
        };

        let mut edges = Vec::new();
        let mut diag: Vec<Option<T>> = vec![None; vertex_count];
        for (lineno, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [a, b, c] = parts[..] else {
                return Err(Error::Format(format!(
                    "line {}: expected `i j w`",
                    lineno + 1
                )));
            };
            let bad = || Error::Format(format!("line {}: cannot parse `{line}`", lineno + 1));
            let i: usize = a.parse().map_err(|_| bad())?;
            let j: usize = b.parse().map_err(|_| bad())?;
            let w: f64 = c.parse().map_err(|_| bad())?;
            let w = T::from_f64(w).ok_or_else(bad)?;
            if i == j {
                if i >= vertex_count {
                    return Err(Error::MalformedOperator(format!(
                        "diagonal index {i} out of range"
                    )));
                }
                diag[i] = Some(diag[i].unwrap_or_else(T::zero) + w);
            } else {
                edges.push((i, j, w));
            }
        }

        let op = if conservative {
            let op = Self::from_edges(vertex_count, edges, None)?;
            for (i, d) in diag.iter().enumerate() {
                if let Some(d) = *d {
                    let s = op.diagonal[i];
                    if (d - s).abs() > T::lit(ROW_SUM_RTOL) * s.max(T::one()) {
                        return Err(Error::MalformedOperator(format!(
                            "row {i}: diagonal {d} differs from row sum {s} in a conservative operator"
                        )));
                    }
                }
            }
            op
        } else {
            let diagonal = diag
                .into_iter()
                .enumerate()
                .map(|(i, d)| {
                    d.ok_or_else(|| Error::Format(format!("missing diagonal line for vertex {i}")))
                })
                .collect::<Result<Vec<T>>>()?;
            Self::from_edges(vertex_count, edges, Some(diagonal))?
        };
        if op.conservative != conservative {
            return Err(Error::MalformedOperator(
                "header declares non-conservative but every row sums to its diagonal".into(),
            ));
        }
        Ok(op)
    }
}

/// The linear problem `u - kΔu = f` on a graph.
#[derive(Debug, Clone, Copy)]
pub struct ResolventProblem<'a, T> {
    op: &'a GraphLaplacianOp<T>,
    k: T,
}

/// Solution of a resolvent problem together with the work it took.
#[derive(Debug, Clone)]
pub struct ResolventSolution<T> {
    pub u: Vec<T>,
    pub iterations: usize,
}

impl<'a, T: Real> ResolventProblem<'a, T> {
    pub fn new(op: &'a GraphLaplacianOp<T>, k: T) -> Result<Self> {
        if !(k > T::zero() && k.is_finite()) {
            return Err(invalid("k", format!("{k} must be positive and finite")));
        }
        Ok(Self { op, k })
    }

    pub fn operator(&self) -> &GraphLaplacianOp<T> {
        self.op
    }

    pub fn k(&self) -> T {
        self.k
    }

    /// Contraction factor `θ = max_i k w_ii / (1 + k w_ii)`.
    pub fn theta(&self) -> T {
        self.op
            .diagonal
            .iter()
            .map(|&d| self.k * d / (T::one() + self.k * d))
            .fold(T::zero(), T::max)
    }

    /// One application of `(Tu)_i = Σ_{j≠i} k w_ij u_j / (1 + k w_ii) + f_i / (1 + k w_ii)`.
    pub fn contraction(&self, u: &[T], f: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); u.len()];
        self.contraction_into(u, f, &mut out);
        out
    }

    fn contraction_into(&self, u: &[T], f: &[T], out: &mut [T]) {
        for (i, slot) in out.iter_mut().enumerate() {
            let off: T = self.op.neighbors[i].iter().map(|&(j, w)| w * u[j]).sum();
            *slot = (self.k * off + f[i]) / (T::one() + self.k * self.op.diagonal[i]);
        }
    }

    /// Residual `u - kΔu - f`.
    pub fn residual(&self, u: &[T], f: &[T]) -> Vec<T> {
        let lap = self.op.apply(u);
        u.iter()
            .zip(&lap)
            .zip(f)
            .map(|((&ui, &li), &fi)| ui - self.k * li - fi)
            .collect()
    }

    /// Fixed-point iteration of the contraction, started from zero.
    ///
    /// Stops once the increment is at most `(1-θ)·1e-13·‖f‖∞`, which bounds the
    /// distance to the exact solution by `1e-13·‖f‖∞`, or once it reaches the
    /// rounding floor of the iterate.
    pub fn solve(&self, f: &[T]) -> Result<ResolventSolution<T>> {
        let n = self.op.vertex_count();
        if f.len() != n {
            return Err(invalid("f", format!("length {} for {n} vertices", f.len())));
        }
        if f.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("resolvent data"));
        }
        let f_norm = linf(f);
        if f_norm == T::zero() {
            return Ok(ResolventSolution {
                u: vec![T::zero(); n],
                iterations: 0,
            });
        }
        let theta = self.theta();
        let target = (T::one() - theta) * T::lit(1e-13) * f_norm;
        let cap = iteration_cap(theta.to_f64_lossy());

        let mut u = vec![T::zero(); n];
        let mut next = vec![T::zero(); n];
        let mut increment = T::infinity();
        for it in 1..=cap {
            self.contraction_into(&u, f, &mut next);
            increment = u
                .iter()
                .zip(&next)
                .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()));
            std::mem::swap(&mut u, &mut next);
            let floor = T::lit(8.0) * T::epsilon() * linf(&u);
            if increment <= target.max(floor) {
                return Ok(ResolventSolution { u, iterations: it });
            }
        }
        Err(Error::NotConverged {
            solver: "resolvent contraction",
            iterations: cap,
            residual: increment.to_f64_lossy(),
        })
    }

    /// Dense LU solve in `f64`; an independent check for small graphs.
    pub fn solve_dense(&self, f: &[T]) -> Result<Vec<T>> {
        let n = self.op.vertex_count();
        let k = self.k.to_f64_lossy();
        let m = DMatrix::<f64>::identity(n, n) - self.op.to_dense() * k;
        let rhs = DVector::from_iterator(n, f.iter().map(|v| v.to_f64_lossy()));
        let sol = m
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::MalformedOperator("singular resolvent matrix".into()))?;
        Ok(sol.iter().map(|&v| T::lit(v)).collect())
    }
}

/// Solves `u - kΔu = f` by the contraction iteration.
pub fn resolvent_solve<T: Real>(op: &GraphLaplacianOp<T>, k: T, f: &[T]) -> Result<Vec<T>> {
    Ok(ResolventProblem::new(op, k)?.solve(f)?.u)
}

fn linf<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, x| m.max(x.abs()))
}

fn iteration_cap(theta: f64) -> usize {
    if theta <= 0.0 {
        return 2;
    }
    let gap = (1.0 - theta).max(f64::EPSILON);
    let needed = (13.0 * std::f64::consts::LN_10 + (1.0 / gap).ln() + 5.0) / -theta.ln();
    (2.0 * needed).ceil().min(1e9) as usize + 100
}
