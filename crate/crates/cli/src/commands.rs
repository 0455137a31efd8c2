use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use chstab::graph::GraphLaplacianOp;
use chstab::stability::SchemeParams;
use chstab::stepper::{cosine_mode, random_meanzero, EnergyReport, StepperState};
use chstab::{
    certify, general_kernel, kernel_1d_periodic, read_chf1, step, sweep_critical_tau, write_chf1,
    Boundary, Discretization, Error, Field64, GraphBackend64, SpectralBackend64, TorusGrid,
};

use crate::config::{BoundaryKind, Initial, RunConfig, Scheme};

/// The run found `‖u^n‖∞ > M` although the certificate was admissible.
pub const EXIT_THEORY_ALARM: u8 = 3;
/// Not admissible (certify) or not bracketed (sweep).
pub const EXIT_NEGATIVE: u8 = 2;

pub const ENERGY_HEADER: &str =
    "step,time,energy,linf,mean,increment_l2,grad_H_l2,dissipation_residual";

/// Shortest round-trip decimal, switching to exponent form outside
/// `[1e-4, 1e15)`. Never locale dependent; NaN prints as `nan`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn linf(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn certify_report(
    nu: f64,
    tau: f64,
    a: f64,
    linf_u0: Option<f64>,
    out: &mut impl Write,
) -> Result<u8> {
    let params = SchemeParams::new(nu, tau, a)?;
    if let Some(l) = linf_u0 {
        if !(l >= 0.0 && l.is_finite()) {
            bail!("linf-u0: {l} must be a nonnegative number");
        }
    }
    let cert = certify(&params, linf_u0.unwrap_or(0.0));
    let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), fmt_num);
    writeln!(out, "nu: {}", fmt_num(nu))?;
    writeln!(out, "tau: {}", fmt_num(tau))?;
    writeln!(out, "A: {}", fmt_num(a))?;
    writeln!(out, "A_cr: {}", fmt_num(cert.a_cr))?;
    writeln!(out, "beta: {}", opt(cert.beta))?;
    writeln!(out, "M0: {}", opt(cert.m0))?;
    writeln!(out, "M1: {}", fmt_num(cert.m1))?;
    match linf_u0 {
        Some(l) => writeln!(out, "linf_u0: {}", fmt_num(l))?,
        None => writeln!(out, "linf_u0: not given (any data with ‖u0‖∞ ≤ M1)")?,
    }
    if cert.admissible {
        writeln!(
            out,
            "verdict: admissible, ‖u^n‖∞ ≤ {} for all n",
            fmt_num(cert.m)
        )?;
        Ok(0)
    } else if !cert.stabilization_ok() {
        writeln!(
            out,
            "verdict: not admissible, A = {} is below A_cr = {}; the L∞ bound is not certified for this \
             stabilization, whatever the observed behaviour",
            fmt_num(a),
            fmt_num(cert.a_cr)
        )?;
        Ok(EXIT_NEGATIVE)
    } else {
        writeln!(
            out,
            "verdict: not admissible, ‖u0‖∞ = {} exceeds M1 = {}",
            fmt_num(cert.linf_u0),
            fmt_num(cert.m1)
        )?;
        Ok(EXIT_NEGATIVE)
    }
}

struct Setup {
    grid: TorusGrid,
    backend: Box<dyn Discretization<f64>>,
    /// Allowed excess of `‖u^n‖∞` over a certified bound.
    linf_slack: fn(f64) -> f64,
}

fn setup(config: &RunConfig) -> Result<Setup> {
    config.validate()?;
    let grid = TorusGrid::new(config.dim, config.points_per_dim)?;
    Ok(match (config.scheme, config.bc) {
        (Scheme::Spectral, _) => Setup {
            grid,
            backend: Box::new(SpectralBackend64::new(grid).with_dealiasing(config.dealias)),
            // the invariant-region bound does not cover aliasing; checked empirically
            linf_slack: |_| 1e-8,
        },
        (Scheme::Graph, BoundaryKind::Periodic) => Setup {
            grid,
            backend: Box::new(GraphBackend64::periodic_lattice(grid)?),
            linf_slack: |m| 1e-12 * m,
        },
        (Scheme::Graph, BoundaryKind::Dirichlet) => {
            let h = grid.spacing();
            let op = GraphLaplacianOp::central_difference_1d(
                config.points_per_dim,
                h,
                Boundary::Dirichlet,
            )?;
            Setup {
                grid,
                backend: Box::new(GraphBackend64::new(op, h).with_grid(grid)?),
                linf_slack: |m| 1e-12 * m,
            }
        }
    })
}

fn initial_data(config: &RunConfig, grid: &TorusGrid) -> Result<Vec<f64>> {
    Ok(match &config.initial {
        Initial::Random => random_meanzero(grid.len(), config.amplitude, config.seed),
        Initial::Cosine => cosine_mode(grid, config.amplitude),
        Initial::File(path) => {
            let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let field: Field64 = read_chf1(BufReader::new(file))
                .with_context(|| format!("reading {}", path.display()))?;
            if field.grid() != grid {
                bail!(
                    "{} has extents {:?}, the run uses {:?}",
                    path.display(),
                    field.grid().extents(),
                    grid.extents()
                );
            }
            field.into_values()
        }
    })
}

fn write_row(out: &mut impl Write, r: &EnergyReport<f64>) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        r.step,
        fmt_num(r.time),
        fmt_num(r.energy),
        fmt_num(r.linf),
        fmt_num(r.mean),
        fmt_num(r.increment_l2),
        fmt_num(r.grad_h_l2),
        fmt_num(r.dissipation_residual)
    )
}

fn write_snapshot(dir: &Path, n: usize, grid: TorusGrid, u: &[f64]) -> Result<()> {
    let path = dir.join(format!("snapshot_{n:06}.chf1"));
    let field = Field64::new(grid, u.to_vec())?;
    let mut out = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    write_chf1(&field, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn simulate(config: &RunConfig, out: &mut impl Write) -> Result<u8> {
    let Setup {
        grid,
        backend,
        linf_slack,
    } = setup(config)?;
    let params = SchemeParams::new(config.nu, config.tau, config.a)?;
    let u0 = initial_data(config, &grid)?;
    let cert = certify(&params, linf(&u0));
    let limit = cert.m + linf_slack(cert.m);

    let dir = &config.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let csv_path = dir.join("energy.csv");
    let mut csv = BufWriter::new(
        File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?,
    );
    writeln!(csv, "{ENERGY_HEADER}")?;
    let initial = EnergyReport::initial(backend.as_ref(), &u0, config.nu);
    write_row(&mut csv, &initial)?;

    let stride = config.snapshot_stride;
    if stride > 0 {
        write_snapshot(dir, 0, grid, &u0)?;
    }
    let mut last = initial;
    let mut violation: Option<(usize, f64)> = None;
    let mut state = StepperState::new(u0)?;
    for _ in 0..config.steps {
        state = step(backend.as_ref(), state, &params)
            .with_context(|| format!("step {} failed", last.step + 1))?;
        last = *state.history.last().expect("a step records a report");
        // energy.csv is the history; keep memory flat on long runs
        state.history.clear();
        write_row(&mut csv, &last)?;
        if stride > 0 && state.n % stride == 0 {
            write_snapshot(dir, state.n, grid, &state.u)?;
        }
        if cert.admissible && last.linf > limit && violation.is_none() {
            violation = Some((state.n, last.linf));
        }
    }
    csv.flush()?;

    writeln!(out, "steps: {}", last.step)?;
    writeln!(out, "time: {}", fmt_num(last.time))?;
    writeln!(out, "energy: {}", fmt_num(last.energy))?;
    writeln!(out, "linf: {}", fmt_num(last.linf))?;
    writeln!(out, "mean: {}", fmt_num(last.mean))?;
    writeln!(out, "increment_l2: {}", fmt_num(last.increment_l2))?;
    writeln!(out, "grad_H_l2: {}", fmt_num(last.grad_h_l2))?;
    writeln!(
        out,
        "dissipation_residual: {}",
        fmt_num(last.dissipation_residual)
    )?;
    writeln!(
        out,
        "certificate: {}",
        if cert.admissible {
            format!("admissible (M = {})", fmt_num(cert.m))
        } else {
            "not admissible".into()
        }
    )?;
    writeln!(out, "energy_csv: {}", csv_path.display())?;
    if let Some((n, value)) = violation {
        eprintln!(
            "alarm: ‖u^{n}‖∞ = {} exceeds the certified bound {} (tolerance {})",
            fmt_num(value),
            fmt_num(cert.m),
            fmt_num(limit - cert.m)
        );
        return Ok(EXIT_THEORY_ALARM);
    }
    Ok(0)
}

pub struct SweepRequest<'a> {
    pub a_values: &'a [f64],
    pub tau_lo: f64,
    pub tau_hi: f64,
    pub rel_tol: f64,
}

pub fn sweep(config: &RunConfig, request: &SweepRequest<'_>, out: &mut impl Write) -> Result<u8> {
    let Setup { grid, backend, .. } = setup(config)?;
    if request.a_values.is_empty() {
        bail!("no stabilization values given");
    }
    if let Some(a) = request
        .a_values
        .iter()
        .find(|a| !(**a >= 0.0 && a.is_finite()))
    {
        bail!("A: {a} must be a nonnegative number");
    }
    let u0 = initial_data(config, &grid)?;
    let results = sweep_critical_tau(
        backend.as_ref(),
        &u0,
        config.nu,
        request.a_values,
        config.steps,
        (request.tau_lo, request.tau_hi),
        request.rel_tol,
    );
    let mut code = 0;
    let mut rows = String::from("A,tau_c\n");
    for (&a, result) in request.a_values.iter().zip(results) {
        let tau_c = match result {
            Ok(found) => {
                if !found.halved_step_decays {
                    eprintln!(
                        "warning: A = {}: energy grows at tau_c/2 = {}; decay is not monotone in tau here",
                        fmt_num(a),
                        fmt_num(found.tau_c / 2.0)
                    );
                }
                found.tau_c
            }
            Err(Error::NotBracketed(reason)) => {
                eprintln!("A = {}: {reason}", fmt_num(a));
                code = EXIT_NEGATIVE;
                f64::NAN
            }
            Err(e) => return Err(e.into()),
        };
        rows.push_str(&format!("{},{}\n", fmt_num(a), fmt_num(tau_c)));
    }
    out.write_all(rows.as_bytes())?;
    Ok(code)
}

pub fn kernel_report(n: usize, theta: f64, out: &mut impl Write) -> Result<u8> {
    let kernel = kernel_1d_periodic(n, theta)?;
    writeln!(out, "key,value")?;
    writeln!(out, "N,{n}")?;
    writeln!(out, "theta,{}", fmt_num(theta))?;
    writeln!(out, "epsilon_sharp,{}", fmt_num(kernel.epsilon_sharp))?;
    writeln!(
        out,
        "epsilon_perturbation,{}",
        fmt_num(kernel.epsilon_perturbation)
    )?;
    for (j, c) in kernel.c.iter().enumerate() {
        writeln!(out, "c_{j},{}", fmt_num(*c))?;
    }
    Ok(0)
}

pub fn resolvent_report(operator: &Path, k: f64, out: &mut impl Write) -> Result<u8> {
    let text =
        fs::read_to_string(operator).with_context(|| format!("reading {}", operator.display()))?;
    let op = GraphLaplacianOp::<f64>::parse_edge_list(&text)
        .with_context(|| format!("parsing {}", operator.display()))?;
    if !op.is_connected() {
        bail!("operator graph is disconnected; the kernel bound degenerates (ε0 = 0)");
    }
    if !op.is_conservative() {
        bail!("operator is not conservative (diagonal differs from row sums); the kernel analysis needs Δ1 = 0");
    }
    let kernel = general_kernel(&op, k)?;
    writeln!(out, "key,value")?;
    writeln!(out, "vertices,{}", kernel.vertex_count)?;
    writeln!(out, "k,{}", fmt_num(k))?;
    writeln!(out, "epsilon0,{}", fmt_num(kernel.epsilon0))?;
    writeln!(out, "epsilon_perturbation,{}", fmt_num(kernel.epsilon))?;
    Ok(0)
}
