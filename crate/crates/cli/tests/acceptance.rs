//! End-to-end acceptance battery: eight checks covering the metric
//! assembly, the hyperkähler frame, the harmonic-map round-trip, the flat
//! boundary value solver, the integrated energy identities, the
//! confinement estimate chains, the exponent law, and byte-level
//! determinism of the sweep runner. Each check prints one PASS line; any
//! failure fails its test with the measured numbers in the message.

use crpslab::chart::BaseChart;
use crpslab::estimates::{
    alpha_constant, barrier_kappa, energy_budget_check, exponent_law_reports, mean_value_check,
    pbar_check, phi_field, poincare_window_check, subsolution_check, MeanValueSweep,
    KAPPA0_REFERENCE,
};
use crpslab::field::{Periodicity, TorusMap};
use crpslab::fueter::{flat_mode_matrix, gaussian_packet_state, FueterProblem};
use crpslab::grid::{CylinderGrid, TorusGrid};
use crpslab::hamiltonian::{Hamiltonian, Perturbation, TemporalProfile};
use crpslab::harmonic::{
    heat_flow, lift_momentum, lift_residual_sup, twisted_geodesic_map, FlowParams,
};
use crpslab::hyperkahler::{a_xi, domega0_defect_fd, frame, g_symmetric_eigenvalues, xi_norm};
use crpslab::kernels;
use crpslab::solver::{newton_solve, NewtonParams};
use crpslab::Vec64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Random base point and covector with |ξ|_g ≤ cap on the ball chart.
fn sample_ball_point(rng: &mut ChaCha8Rng, n: usize, cap: f64) -> (BaseChart, Vec64, Vec64) {
    let chart = BaseChart::ComplexHyperbolic { n };
    let d = 2 * n;
    let q_box = 0.7 / (d as f64).sqrt();
    let q = Vec64::from_fn(d, |_, _| rng.random_range(-q_box..q_box));
    let dir = Vec64::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let target = rng.random_range(0.0..cap);
    let norm = xi_norm(&chart, &q, &dir);
    let p = if norm > 1e-12 {
        dir * (target / norm)
    } else {
        Vec64::zeros(d)
    };
    (chart, q, p)
}

fn flat_problem(
    amplitude: f64,
    tau: f64,
    s_half: f64,
    ns: usize,
    nx: usize,
    ny: usize,
) -> FueterProblem {
    let perturbation = (amplitude != 0.0).then(|| Perturbation::standard(1, amplitude));
    let profile = if perturbation.is_some() {
        TemporalProfile::Plateau { tau }
    } else {
        TemporalProfile::Static
    };
    FueterProblem::new(
        Hamiltonian {
            chart: BaseChart::FlatTorus { n: 1 },
            perturbation,
            profile,
        },
        Periodicity::Periodic,
        CylinderGrid::new(s_half, ns, nx, ny),
    )
}

#[test]
fn check_1_fiber_operator_spectra() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC1);
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let n = if k % 2 == 0 { 1 } else { 2 };
        let (chart, q, p) = sample_ball_point(&mut rng, n, 0.45);
        let (a, t) = a_xi(&chart, &q, &p).unwrap();
        let got = g_symmetric_eigenvalues(&chart.metric(&q), &a).unwrap();
        let root = (1.0 - 4.0 * t).sqrt();
        let mut want = vec![root; 2];
        want.extend(std::iter::repeat((1.0 + root) / 2.0).take(2 * n - 2));
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (g, w) in got.iter().zip(want.iter()) {
            worst = worst.max((g - w).abs());
        }
    }
    assert!(worst < 1e-10, "spectrum defect {worst:.3e}");
    println!("[PASS] check 1: fiber-operator spectra match the closed form to {worst:.2e} over 1000 samples");
}

#[test]
fn check_2_frame_identities_and_closedness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACC2);
    let mut quat: f64 = 0.0;
    let mut compat: f64 = 0.0;
    let mut recov: f64 = 0.0;
    for k in 0..200 {
        let n = if k % 2 == 0 { 1 } else { 2 };
        let (chart, q, p) = sample_ball_point(&mut rng, n, 0.45);
        let f = frame(&chart, &q, &p).unwrap();
        quat = quat.max(f.quaternion_defect());
        compat = compat.max(f.compatibility_defect());
        recov = recov.max(f.omega2_recovery_defect());
    }
    assert!(quat < 1e-6, "quaternion defect {quat:.3e}");
    assert!(compat < 1e-6, "compatibility defect {compat:.3e}");
    assert!(recov < 1e-6, "recovery defect {recov:.3e}");

    // dω₀ by centered differences at three steps: second-order decay.
    let mut defects = [0.0f64; 3];
    let points: Vec<_> = (0..5)
        .map(|_| sample_ball_point(&mut rng, 1, 0.3))
        .collect();
    for (level, d) in defects.iter_mut().enumerate() {
        let step = 1e-3 / (1 << level) as f64;
        for (chart, q, p) in &points {
            *d = d.max(domega0_defect_fd(chart, q, p, step).unwrap());
        }
    }
    let o1 = (defects[0] / defects[1]).log2();
    let o2 = (defects[1] / defects[2]).log2();
    assert!(
        o1 >= 1.8 && o2 >= 1.8,
        "closedness orders {o1:.2}, {o2:.2} (defects {defects:?})"
    );
    println!(
        "[PASS] check 2: frame identities ≤ {:.2e} at 200 points; dω₀ decays at orders {o1:.2}/{o2:.2}",
        quat.max(compat).max(recov)
    );
}

#[test]
fn check_3_harmonic_map_roundtrip() {
    // Flat target with winding, 64×64, tension to 1e-6.
    let flat_start = TorusMap::from_fn(
        BaseChart::FlatTorus { n: 1 },
        TorusGrid::new(64, 64),
        Periodicity::FlatWinding {
            winding: vec![[1, 0], [0, 1]],
        },
        |x, y| {
            Vec64::from_vec(vec![
                x + 0.2 * (x + 2.0 * y).sin(),
                y + 0.2 * (y).cos() * (x).sin(),
            ])
        },
    );
    let params = FlowParams {
        tension_tol: 1e-6,
        ..FlowParams::default()
    };
    let flat = heat_flow(&flat_start, &params).unwrap();
    assert!(
        flat.converged && flat.tension_sup < 1e-6,
        "flat tension {:.3e} after {} steps",
        flat.tension_sup,
        flat.steps
    );

    // Ball-chart target, 64×64.
    let ball_start = TorusMap::from_fn(
        BaseChart::ComplexHyperbolic { n: 1 },
        TorusGrid::new(64, 64),
        Periodicity::Periodic,
        |x, y| {
            Vec64::from_vec(vec![
                0.2 + 0.1 * x.sin() + 0.05 * (x + y).cos(),
                0.1 * y.cos(),
            ])
        },
    );
    let ball = heat_flow(&ball_start, &params).unwrap();
    assert!(
        ball.converged && ball.tension_sup < 1e-6,
        "ball tension {:.3e} after {} steps",
        ball.tension_sup,
        ball.steps
    );

    // Momentum lift of the twisted geodesic band: the first-order-system
    // residual is pure discretization error and must decay at order ≥ 1.8
    // across 32 → 64 → 128.
    let lift_res = |nn: usize| {
        let map = twisted_geodesic_map(0.15, nn, 4);
        let mom = lift_momentum(&map);
        lift_residual_sup(&map, &mom)
    };
    let (r32, r64, r128) = (lift_res(32), lift_res(64), lift_res(128));
    let o1 = (r32 / r64).log2();
    let o2 = (r64 / r128).log2();
    assert!(
        o1 >= 1.8 && o2 >= 1.8,
        "lift residual orders {o1:.2}/{o2:.2} (residuals {r32:.3e}, {r64:.3e}, {r128:.3e})"
    );
    println!(
        "[PASS] check 3: heat flow reached tension {:.2e} (flat) / {:.2e} (ball); lift residual orders {o1:.2}/{o2:.2}",
        flat.tension_sup, ball.tension_sup
    );
}

#[test]
fn check_4_flat_boundary_value_solver() {
    // Manufactured recovery on 64×32×32 with a quadratic Newton tail. The
    // packet pushes |p|² well into the cutoff ramp so the solve is
    // genuinely nonlinear and leaves a measurable tail before roundoff.
    let prob0 = flat_problem(1.0, 2.0, 4.0, 64, 32, 32);
    let star = gaussian_packet_state(&prob0.grid, 1, 0.7);
    let forcing = prob0.residual(&star).unwrap();
    let mut prob = prob0;
    prob.forcing = Some(forcing);

    let params = NewtonParams {
        residual_tol: 1e-10,
        ..NewtonParams::default()
    };
    let mut state = prob.zero_state();
    let history = newton_solve(&prob, &mut state, &params).unwrap();
    assert!(history.converged, "manufactured solve did not converge");
    let err = (&state.data - &star.data).amax();
    assert!(err < 1e-8, "recovery error {err:.3e}");
    // Order from the last three residuals above the roundoff floor.
    let h = &history.rms_history;
    let pre: Vec<f64> = h.iter().copied().filter(|&r| r > 1e-13).collect();
    let m = pre.len();
    assert!(m >= 3, "history too short for a tail estimate: {h:?}");
    let tail = (pre[m - 2] / pre[m - 1]).ln() / (pre[m - 3] / pre[m - 2]).ln();
    assert!(tail >= 1.7, "convergence tail order {tail:.2} from {h:?}");

    // h = 0: the linear system lands on the zero section in one iteration.
    let free = flat_problem(0.0, 2.0, 4.0, 33, 16, 16);
    let mut zstate = gaussian_packet_state(&free.grid, 1, 0.1);
    let mut free_params = NewtonParams::default();
    free_params.gmres.rel_tol = 1e-13;
    let free_hist = newton_solve(&free, &mut zstate, &free_params).unwrap();
    assert!(free_hist.converged);
    assert_eq!(
        free_hist.rms_history.len(),
        2,
        "free solve took {} iterations",
        free_hist.rms_history.len() - 1
    );
    let sup = zstate.data.amax();
    assert!(sup < 1e-9, "free solution is not the zero section: sup {sup:.3e}");

    // Per-mode decay rate at κ = (1,0) against the frozen golden ratio.
    let m = flat_mode_matrix(1.0, 0.0);
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let lam = (tr - (tr * tr - det * 4.0).sqrt()) / 2.0;
    const LAMBDA_MINUS: f64 = -0.618_033_988_749_894_9; // (1 − √5)/2
    assert!(lam.im.abs() < 1e-14);
    assert!(
        (lam.re - LAMBDA_MINUS).abs() < 1e-10,
        "mode decay rate {} vs {LAMBDA_MINUS}",
        lam.re
    );
    assert!((kernels::flat_mode_decay_rate(1.0) - LAMBDA_MINUS).abs() < 1e-10);

    println!(
        "[PASS] check 4: manufactured recovery to {err:.2e} (tail order {tail:.2}); h=0 → zero section in one iteration; mode decay rate to {:.2e}",
        (lam.re - LAMBDA_MINUS).abs()
    );
}

#[test]
fn check_5_energy_identities() {
    // Long fine-axis cylinder: S > τ+1 so both end actions vanish and the
    // flow energy balances the switching work to quadrature accuracy.
    let prob = flat_problem(0.05, 2.0, 12.0, 4097, 8, 8);
    let mut state = prob.zero_state();
    let history = newton_solve(&prob, &mut state, &NewtonParams::default()).unwrap();
    assert!(history.converged);

    let identity = prob.energy_identity(&state).unwrap();
    assert!(
        identity.relative_defect < 1e-4,
        "energy identity defect {:.3e}",
        identity.relative_defect
    );
    assert!(identity.flow_energy > 1e-10, "degenerate test: no flow energy");

    // Full budget chain with nonnegative slack at every step.
    let c1 = Perturbation::standard(1, 0.05)
        .sampled_norms(PI, 0.5, 2000)
        .c1;
    let reports = energy_budget_check(&prob, &state, 0.5, c1, 1e-4).unwrap();
    for r in &reports {
        assert!(
            r.pass,
            "budget step `{}` failed: left {:.6e} right {:.6e}",
            r.name, r.left, r.right
        );
    }
    println!(
        "[PASS] check 5: flow energy balances switching work to {:.2e}; all {} budget steps hold",
        identity.relative_defect,
        reports.len()
    );
}

#[test]
fn check_6_confinement_battery() {
    // Small perturbation (sampled C² norm ≤ 0.1) on a torus grid fine
    // enough for the mean-value ball sweep.
    let amplitude = 0.01;
    let prob = flat_problem(amplitude, 2.0, 4.0, 33, 16, 16);
    let norms = prob
        .ham
        .perturbation
        .as_ref()
        .unwrap()
        .sampled_norms(PI, 0.5, 2000);
    assert!(norms.c2 <= 0.1, "battery wants c2 ≤ 0.1, got {}", norms.c2);
    let alpha = alpha_constant(norms.c2).unwrap();

    let mut state = prob.zero_state();
    let history = newton_solve(&prob, &mut state, &NewtonParams::default()).unwrap();
    assert!(history.converged);

    let mut reports = Vec::new();
    reports.push(subsolution_check(&prob, &state, alpha, 1e-3).unwrap());
    let phi = phi_field(&state);
    let (mv, _) = mean_value_check(
        &prob.grid,
        &phi,
        alpha,
        8.0,
        &MeanValueSweep::default(),
    )
    .unwrap();
    reports.push(mv);
    // |p̄| ≤ c1 + 1e-6 and the integral representation to 1e-6.
    reports.extend(pbar_check(&prob, &state, norms.c1, 1e-6).unwrap());
    reports.push(poincare_window_check(&prob, &state, norms.c1, 0.5, &[-1.0, 0.0, 1.0], 0.0).unwrap());
    for r in &reports {
        assert!(
            r.pass,
            "battery step `{}` failed: left {:.6e} right {:.6e}",
            r.name, r.left, r.right
        );
    }

    // Barrier center value at the extreme shift, against the frozen
    // reference (≈ 1.45).
    let kappa0 = barrier_kappa(0.0, -PI * PI / 8.0).unwrap();
    assert!(
        (kappa0 - KAPPA0_REFERENCE).abs() < 1e-9,
        "kappa0 {kappa0} vs frozen {KAPPA0_REFERENCE}"
    );
    assert!((kappa0 - 1.45).abs() < 0.01);

    // Radial eigenfunction endpoints.
    assert!((kernels::phi1(0.0) - PI / 2.0).abs() < 1e-10);
    assert!((kernels::phi1(1.5) - 2.0f64.sqrt() / 3.0).abs() < 1e-10);

    println!(
        "[PASS] check 6: subsolution/mean-value/averaged-momentum battery holds at c2 = {:.3}; κ(0) and φ₁ endpoints match",
        norms.c2
    );
}

#[test]
fn check_7_exponent_law() {
    // Ladder of perturbation C¹ norms 1e-1 … 1e-4 with fixed shape: the
    // sampled norms scale exactly linearly in the amplitude, so the rungs
    // hit the targets exactly.
    let unit = Perturbation::standard(1, 1.0).sampled_norms(PI, 0.5, 2000);
    let targets = [1e-1, 1e-2, 1e-3, 1e-4];
    let mut sups = Vec::new();
    let mut c1s = Vec::new();
    for &c1 in &targets {
        let amp = c1 / unit.c1;
        let prob = flat_problem(amp, 2.0, 4.0, 33, 8, 8);
        let mut state = prob.zero_state();
        let history = newton_solve(&prob, &mut state, &NewtonParams::default()).unwrap();
        assert!(history.converged, "rung c1 = {c1} did not converge");
        let sup_phi = phi_field(&state).iter().cloned().fold(0.0f64, f64::max);
        sups.push(sup_phi);
        c1s.push(c1);
    }
    for w in sups.windows(2) {
        assert!(w[1] < w[0], "sup Φ not monotone: {sups:?}");
    }

    // Calibrate the budget constant on the first rung, freeze it, and
    // demand every rung stays below its frozen-constant budget; the
    // budget sequence itself must follow the 10^(-2/5) law exactly.
    //
    // α is frozen from the largest rung inside the small-perturbation
    // regime (sampled C² norm ≤ 0.1): the top rung's own C² norm (≈ 0.4
    // for this shape) sits outside the admissible range (0, (2α/3)R₀⁵],
    // and first-rung calibration makes the within-budget comparisons
    // independent of the frozen value anyway — only admissibility and the
    // reported C∞ depend on it.
    let c2_frozen = (1e-2 / unit.c1) * unit.c2;
    assert!(c2_frozen <= 0.1, "frozen rung left the battery regime: {c2_frozen}");
    let alpha = alpha_constant(c2_frozen).unwrap();
    let c_infty = sups[0] / kernels::linfty_budget(1.0, alpha, c1s[0]);
    let reports = exponent_law_reports(&c1s, c2_frozen, c_infty * (1.0 + 1e-9), &sups).unwrap();
    for r in &reports {
        assert!(
            r.pass,
            "exponent-law step `{}` failed: left {:.6e} right {:.6e}",
            r.name, r.left, r.right
        );
    }
    println!(
        "[PASS] check 7: sup Φ monotone over the ladder and below the frozen budget (C∞ = {c_infty:.3e})"
    );
}

#[test]
fn check_8_sweep_determinism() {
    let bin = env!("CARGO_BIN_EXE_crpslab");
    let base = std::env::temp_dir().join(format!("crpslab-accept-{}", std::process::id()));
    std::fs::create_dir_all(&base).unwrap();
    let config = base.join("sweep.conf");
    std::fs::write(
        &config,
        "chart = flat\nns = 17\nnx = 8\nny = 8\ns_half = 4\namplitudes = 1e-1,1e-2\n",
    )
    .unwrap();

    let run = |out: &std::path::Path| {
        let status = std::process::Command::new(bin)
            .args(["sweep", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(out)
            .arg("--seed")
            .arg("7")
            .status()
            .unwrap();
        assert!(status.success(), "sweep exited with {status}");
    };
    let out_a = base.join("a");
    let out_b = base.join("b");
    run(&out_a);
    run(&out_b);

    for file in ["sweep.json", "sweep.csv", "sweep.gp"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{file} differs between identical runs");
    }
    std::fs::remove_dir_all(&base).ok();
    println!("[PASS] check 8: repeated sweep runs with a fixed seed are byte-identical");
}
