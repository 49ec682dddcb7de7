//! `estimates`: the confinement battery on a stored cylinder snapshot.
//!
//! Loads a solved field, rebuilds the problem from the perturbation keys,
//! and runs every inequality of the two proof chains: the barrier
//! constants, the Bochner subsolution bound, the mean-value sweep, the
//! averaged-momentum trio, the Poincaré window, the energy budget chain,
//! the pointwise vertical-gradient eigenvalue step, the discrete barrier
//! comparisons, and the L∞ budget at the frozen calibration constant.

use crate::common::{parse_hamiltonian, print_reports, RunContext};
use anyhow::{Context, Result};
use crpslab::chart::BaseChart;
use crpslab::estimates::{
    alpha_constant, barrier_comparison_check, barrier_comparison_check_3d, barrier_kappa,
    energy_budget_check, linfty_predictor, mean_value_check, pbar_check, phi_field,
    poincare_window_check, subsolution_check, vertical_gradient_step, EstimateReport,
    MeanValueSweep, KAPPA0_REFERENCE,
};
use crpslab::fueter::FueterProblem;
use crpslab::hamiltonian::SampledNorms;
use crpslab::hyperkahler::xi_norm;
use crpslab::kernels;
use crpslab::report::{csv_table, to_json_string, EstimateBundle, ReportHeader};
use crpslab::snapshot;
use crpslab::Vec64;
use std::f64::consts::PI;

/// FD Hessian of the free Hamiltonian in the base directions at (q,p).
/// Exploratory only: the concluding-remark sign structure has no
/// pass/fail semantics here.
fn horizontal_hessian_eigs(chart: &BaseChart, q: &Vec64, p: &Vec64) -> Vec<f64> {
    let d = chart.dim();
    let h0 = |q: &Vec64| 0.5 * (chart.metric_inverse(q) * p).dot(p);
    let step = 1e-4;
    let mut hess = nalgebra::DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            let mut qpp = q.clone();
            qpp[j] += step;
            qpp[k] += step;
            let mut qpm = q.clone();
            qpm[j] += step;
            qpm[k] -= step;
            let mut qmp = q.clone();
            qmp[j] -= step;
            qmp[k] += step;
            let mut qmm = q.clone();
            qmm[j] -= step;
            qmm[k] -= step;
            hess[(j, k)] = (h0(&qpp) - h0(&qpm) - h0(&qmp) + h0(&qmm)) / (4.0 * step * step);
        }
    }
    let mut vals: Vec<f64> = nalgebra::SymmetricEigen::new((hess.clone() + hess.transpose()) / 2.0)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals
}

pub fn run(ctx: &RunContext) -> Result<bool> {
    let cfg = &ctx.config;
    let input = cfg.require_str("input")?;
    let bytes = snapshot::read_file(&input)
        .with_context(|| format!("missing input snapshot `{input}`"))?;
    let snap = snapshot::cylinder_from_bytes(&bytes)
        .with_context(|| format!("reading snapshot `{input}`"))?;

    let ham = parse_hamiltonian(cfg, snap.chart)?;
    let delta = cfg.f64_or("delta", crpslab::DELTA0)?;
    let c_mv = cfg.f64_or("c_mv", 8.0)?;
    let c_infty = cfg.f64_or("c_infty", 1.0)?;
    let rel_tol = cfg.f64_or("rel_tol", 0.05)?;
    let subsolution_tol = cfg.f64_or("subsolution_tol", 1e-3)?;
    let pbar_tol = cfg.f64_or("pbar_tol", 1e-6)?;
    let poincare_r = cfg.f64_or("poincare_r", 0.5)?;
    let poincare_centers = cfg.f64_list_or("poincare_centers", &[-1.0, 0.0, 1.0])?;
    let mv_samples = cfg.usize_or("mv_samples", 50)?;
    let norm_samples = cfg.usize_or("norm_samples", 2000)?;
    let q_box = cfg.f64_or("q_box", PI)?;
    let p_radius = cfg.f64_or("p_radius", 0.5)?;
    let barrier_nodes = cfg.usize_or("barrier_nodes", 2049)?;
    let barrier_tol = cfg.f64_or("barrier_tol", 1e-5)?;
    let barrier_3d = cfg.bool_or("barrier_3d", false)?;
    let barrier_3d_nodes = cfg.usize_or("barrier_3d_nodes", 21)?;
    let barrier_3d_tol = cfg.f64_or("barrier_3d_tol", 0.25)?;

    let prob = FueterProblem::new(ham, snap.periodicity, snap.grid);
    let state = snap.state;
    let resolution = format!(
        "{}×{}×{} (S = {})",
        state.ns, state.nx, state.ny, prob.grid.s_half
    );

    let norms = match &prob.ham.perturbation {
        Some(p) => p.sampled_norms(q_box, p_radius, norm_samples),
        None => SampledNorms {
            c0: 0.0,
            c1: 0.0,
            c2: 0.0,
        },
    };
    let alpha = alpha_constant(norms.c2)?;
    let mut reports: Vec<EstimateReport> = Vec::new();

    // Frozen barrier constants and the comparison eigenfunction endpoints.
    let mu_extreme = -PI * PI / 8.0;
    let kappa0 = barrier_kappa(0.0, mu_extreme)?;
    reports.push(EstimateReport::new(
        "kappa0_frozen",
        "|κ(0) at μ = −π²/8 − frozen reference| ≤ 1e-9",
        (kappa0 - KAPPA0_REFERENCE).abs(),
        1e-9,
        0.0,
        "closed form",
    ));
    reports.push(EstimateReport::new(
        "phi1_center",
        "|φ₁(0) − π/2| ≤ 1e-10",
        (kernels::phi1(0.0) - PI / 2.0).abs(),
        1e-10,
        0.0,
        "closed form",
    ));
    reports.push(EstimateReport::new(
        "phi1_inner_floor",
        "|φ₁(3/2) − √2/3| ≤ 1e-10",
        (kernels::phi1(1.5) - 2.0f64.sqrt() / 3.0).abs(),
        1e-10,
        0.0,
        "closed form",
    ));

    // Subsolution inequality on the interior nodes.
    reports.push(subsolution_check(&prob, &state, alpha, subsolution_tol)?);

    // Mean-value constant sweep on Φ.
    let phi = phi_field(&state);
    let sweep = MeanValueSweep {
        samples: mv_samples,
        seed: ctx.seed,
    };
    let (mv_report, mv_samples_out) = mean_value_check(&prob.grid, &phi, alpha, c_mv, &sweep)?;
    reports.push(mv_report);
    let mv_rows: Vec<Vec<f64>> = mv_samples_out
        .iter()
        .map(|s| {
            vec![
                s.center.0, s.center.1, s.center.2, s.radius, s.sup, s.mean, s.ratio,
            ]
        })
        .collect();
    ctx.write_text(
        "mean_value.csv",
        &csv_table(
            &["center_s", "center_x", "center_y", "radius", "sup", "mean", "ratio"],
            &mv_rows,
        ),
    )?;

    // Averaged momentum: ODE defect, integral representation, sup bound.
    reports.extend(pbar_check(&prob, &state, norms.c1, pbar_tol)?);
    reports.push(poincare_window_check(
        &prob,
        &state,
        norms.c1,
        poincare_r,
        &poincare_centers,
        0.0,
    )?);

    // Energy budget chain.
    reports.extend(energy_budget_check(&prob, &state, delta, norms.c1, rel_tol)?);

    // Pointwise eigenvalue step at a canonical curved sample.
    let ball = BaseChart::ComplexHyperbolic { n: 1 };
    let q_sample = Vec64::from_vec(vec![0.2, 0.1]);
    let dir = Vec64::from_vec(vec![1.0, 0.0]);
    let p_sample = &dir * (0.3 / xi_norm(&ball, &q_sample, &dir));
    reports.push(vertical_gradient_step(&ball, &q_sample, &p_sample)?);

    // Discrete barrier comparison (radial; optionally the 3D lattice).
    reports.push(barrier_comparison_check(
        mu_extreme,
        1.0,
        barrier_nodes,
        barrier_tol,
    )?);
    if barrier_3d {
        reports.push(barrier_comparison_check_3d(
            mu_extreme,
            barrier_3d_nodes,
            barrier_3d_tol,
        )?);
    }

    // L∞ budget at the frozen constant.
    let sup_phi = phi.iter().cloned().fold(0.0f64, f64::max);
    let mut r_star = 0.0;
    let mut budget = 0.0;
    if norms.c1 > 0.0 {
        let (rs, b) = linfty_predictor(norms.c1, norms.c2, c_infty)?;
        r_star = rs;
        budget = b;
        reports.push(EstimateReport::new(
            "linfty_budget",
            "sup Φ ≤ C∞ α^(3/5) ‖h‖_C¹^(2/5) at the frozen C∞",
            sup_phi,
            budget,
            0.0,
            resolution.clone(),
        ));
    }

    // Smallness threshold ν, reported relative to the frozen C∞ (the
    // calibration constant, not a proven one).
    let nu = if alpha > 0.0 {
        1.0f64
            .min(kernels::c1_admissible_bound(alpha))
            .min((delta * delta / (2.0 * c_infty)).powf(2.5) * alpha.powf(-1.5))
    } else {
        1.0
    };

    let header = ReportHeader::new()
        .with_seed(ctx.seed)
        .with_resolution(resolution)
        .with_constant("alpha", alpha)
        .with_constant("c0", norms.c0)
        .with_constant("c1", norms.c1)
        .with_constant("c2", norms.c2)
        .with_constant("delta", delta)
        .with_constant("c_mv", c_mv)
        .with_constant("c_infty", c_infty)
        .with_constant("r_star", r_star)
        .with_constant("kappa0_reference", KAPPA0_REFERENCE)
        .with_constant("nu_at_frozen_c_infty", nu);
    let bundle = EstimateBundle::new(header, reports);
    ctx.write_text("estimates.json", &to_json_string(&bundle)?)?;
    ctx.write_text(
        "estimates.csv",
        &csv_table(&["c1", "sup_phi", "budget"], &[vec![norms.c1, sup_phi, budget]]),
    )?;

    print_reports(&bundle.reports);
    let eigs = horizontal_hessian_eigs(&ball, &q_sample, &p_sample);
    let eigs_str = eigs
        .iter()
        .map(|v| format!("{v:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    println!(
        "exploratory: horizontal Hess H⁰ eigenvalues at the curved sample = [{eigs_str}] \
         (|p|²_g = {:.3e}; no pass/fail semantics)",
        xi_norm(&ball, &q_sample, &p_sample).powi(2)
    );
    println!(
        "estimates: {} → {}",
        if bundle.all_pass { "all pass" } else { "FAILURES" },
        ctx.out_path("estimates.json").display()
    );
    Ok(bundle.all_pass)
}
