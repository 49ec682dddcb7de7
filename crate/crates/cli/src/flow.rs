//! `harmonic-flow`: heat flow of a torus map to harmonicity, then the
//! momentum lift of the result. Emits the flowed base map and the lift as
//! binary snapshots with CSV twins, plus a JSON flow report.

use crate::common::{parse_chart, RunContext};
use anyhow::{bail, Result};
use crpslab::field::{Periodicity, TorusMap};
use crpslab::grid::TorusGrid;
use crpslab::harmonic::{heat_flow, lift_momentum, lift_residual_sup, FlowParams};
use crpslab::report::{to_json_string, FlowReport, ReportHeader};
use crpslab::snapshot;
use crpslab::Vec64;

pub fn run(ctx: &RunContext) -> Result<bool> {
    let cfg = &ctx.config;
    let chart = parse_chart(cfg)?;
    let nx = cfg.usize_or("nx", 64)?;
    let ny = cfg.usize_or("ny", 64)?;
    let amplitude = cfg.f64_or("amplitude", 0.1)?;
    let periodicity = match cfg.winding_opt("winding")? {
        Some(winding) => {
            if chart.is_curved() {
                bail!("config key `winding` needs the flat chart");
            }
            if winding.len() != chart.dim() {
                bail!(
                    "config key `winding`: {} pairs given, chart has {} real components",
                    winding.len(),
                    chart.dim()
                );
            }
            Periodicity::FlatWinding { winding }
        }
        None => Periodicity::Periodic,
    };
    if chart.is_curved() && amplitude > 0.3 {
        bail!("config key `amplitude`: start map must stay inside the unit ball (≤ 0.3)");
    }

    let params = FlowParams {
        dt: cfg.f64_or("dt", 0.05)?,
        max_steps: cfg.usize_or("max_steps", 20_000)?,
        tension_tol: cfg.f64_or("tension_tol", 1e-6)?,
        chart_margin: cfg.f64_or("chart_margin", 0.05)?,
    };

    // Smooth low-mode start: each component gets a phase-shifted wave, so
    // nothing is harmonic by accident.
    let d = chart.dim();
    let start = TorusMap::from_fn(chart, TorusGrid::new(nx, ny), periodicity, |x, y| {
        Vec64::from_fn(d, |c, _| {
            let ph = 0.3 * c as f64;
            amplitude * (x + ph).sin() * (y + 0.5 * ph).cos()
        })
    });

    let result = heat_flow(&start, &params)?;
    let mom = lift_momentum(&result.map);
    let lift_sup = lift_residual_sup(&result.map, &mom);

    snapshot::write_file(ctx.out_path("map.snap"), &snapshot::torus_map_bytes(&result.map))?;
    ctx.write_text("map.csv", &snapshot::torus_map_csv(&result.map))?;
    snapshot::write_file(ctx.out_path("momentum.snap"), &snapshot::momentum_bytes(&mom))?;

    let header = ReportHeader::new()
        .with_resolution(format!("{nx}×{ny}"))
        .with_constant("tension_tol", params.tension_tol);
    let report = FlowReport {
        header,
        steps: result.steps,
        converged: result.converged,
        tension_sup: result.tension_sup,
        dirichlet_energy: result.energy,
        energy_history: result.energy_history.clone(),
        lift_residual_sup: lift_sup,
    };
    ctx.write_text("flow.json", &to_json_string(&report)?)?;

    let verdict = if result.converged { "PASS" } else { "FAIL" };
    println!(
        "[{verdict}] tension_sup: {:.6e} ≤ {:.6e}  ({} steps, energy {:.6e})",
        result.tension_sup, params.tension_tol, result.steps, result.energy
    );
    println!("lift first-order residual sup: {lift_sup:.6e}");
    println!("harmonic-flow: outputs in {}", ctx.out_dir.display());
    Ok(result.converged)
}
