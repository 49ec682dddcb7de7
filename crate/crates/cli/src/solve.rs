//! `fueter-solve`: Newton–Krylov solve of the first-order boundary value
//! problem on the finite cylinder. Emits the solved phase-space field as a
//! binary snapshot plus CSV, and a convergence report carrying the Newton
//! trajectory, the integrated energy identity, and the field diagnostics.

use crate::common::{parse_chart, parse_hamiltonian, parse_newton, RunContext};
use anyhow::{bail, Context, Result};
use crpslab::field::Periodicity;
use crpslab::fueter::{gaussian_packet_state, FueterProblem};
use crpslab::grid::CylinderGrid;
use crpslab::report::{to_json_string, ConvergenceReport, ReportHeader};
use crpslab::snapshot;
use crpslab::solver::newton_solve;

pub fn run(ctx: &RunContext) -> Result<bool> {
    let cfg = &ctx.config;
    let chart = parse_chart(cfg)?;
    let ham = parse_hamiltonian(cfg, chart)?;
    let s_half = cfg.f64_or("s_half", 4.0)?;
    let ns = cfg.usize_or("ns", 65)?;
    let nx = cfg.usize_or("nx", 16)?;
    let ny = cfg.usize_or("ny", 16)?;
    let identity_tol = cfg.f64_or("identity_tol", 1e-4)?;
    let params = parse_newton(cfg)?;

    let periodicity = match cfg.winding_opt("winding")? {
        Some(winding) => {
            if chart.is_curved() || winding.len() != chart.dim() {
                bail!(
                    "config key `winding`: needs the flat chart and one `wx,wy` pair per real component ({})",
                    chart.dim()
                );
            }
            Periodicity::FlatWinding { winding }
        }
        None => Periodicity::Periodic,
    };
    let grid = CylinderGrid::new(s_half, ns, nx, ny);
    let prob = FueterProblem::new(ham, periodicity.clone(), grid);

    let mut state = match cfg.str_or("start", "zero").as_str() {
        "zero" => prob.zero_state(),
        "packet" => gaussian_packet_state(&prob.grid, chart.n(), cfg.f64_or("packet_amplitude", 0.1)?),
        other => bail!("config key `start`: `{other}` is not `zero` or `packet`"),
    };

    let history = newton_solve(&prob, &mut state, &params).context("boundary value solve")?;

    let header = ReportHeader::new()
        .with_resolution(format!("{ns}×{nx}×{ny} (S = {s_half})"))
        .with_constant("newton_tol", params.residual_tol)
        .with_constant("identity_tol", identity_tol);
    let report = ConvergenceReport::collect(header, &prob, &state, &history)?;

    snapshot::write_file(
        ctx.out_path("state.snap"),
        &snapshot::cylinder_bytes(&chart, &periodicity, s_half, &state),
    )?;
    ctx.write_text("state.csv", &snapshot::cylinder_csv(&prob.grid, &state))?;
    ctx.write_text("convergence.json", &to_json_string(&report)?)?;

    let final_rms = report.residual_rms.last().copied().unwrap_or(f64::NAN);
    let iterations = report.residual_rms.len().saturating_sub(1);
    let verdict = if history.converged { "PASS" } else { "FAIL" };
    println!(
        "[{verdict}] newton: final rms {final_rms:.6e} after {iterations} iterations ({} matvecs)",
        report.matvecs
    );
    let identity_ok = report.energy.relative_defect <= identity_tol;
    let verdict = if identity_ok { "PASS" } else { "FAIL" };
    println!(
        "[{verdict}] energy_identity_defect: {:.6e} ≤ {identity_tol:.6e}",
        report.energy.relative_defect
    );
    println!(
        "sup |p|_g = {:.6e},  min eig G = {:.6e}",
        report.sup_momentum_norm, report.min_metric_eigenvalue
    );
    println!("fueter-solve: outputs in {}", ctx.out_dir.display());
    Ok(history.converged && identity_ok)
}
