//! Harmonic-map machinery on the torus: tension field, Dirichlet energy,
//! an IMEX heat flow, and the momentum lift connecting base maps to slice
//! critical points.
//!
//! For a map u: 𝕋² → (M,g) the tension field in chart components is
//!
//! ```text
//!   τ(u) = Δu + Γ(∂ₓu, ∂ₓu) + Γ(∂_yu, ∂_yu),
//! ```
//!
//! the negative L²(g)-gradient of the Dirichlet energy
//! E(u) = ½∫ |∂ₓu|²_g + |∂_yu|²_g. The heat flow ∂_t u = τ(u) is integrated
//! with the Laplacian implicit (spectral division by 1 + Δt|k|²) and the
//! Christoffel term explicit.
//!
//! The momentum lift assigns to u the fiber field p = g·v with
//! v = (∂ₓu₁ + ∂_yu₂, ∂ₓu₂ − ∂_yu₁) per complex coordinate — the realified
//! 2∂u — which makes (u, p) satisfy the p-half of the slice Euler–Lagrange
//! system identically; the q-half residual then measures harmonicity and is
//! the quantity driven to zero under refinement in the order study. Across a
//! Möbius-twisted seam the momentum ghost transforms by P ↦ P/γ′(q).

use crate::chart::{complex_structure_apply, BaseChart};
use crate::field::{
    mobius, mobius_derivative, mobius_inverse, MomentumMap, Periodicity, TorusMap,
};
use crate::grid::TorusGrid;
use crate::hyperkahler::c_matrix;
use crate::{C64, Error, Result, Vec64};
use std::f64::consts::TAU;

/// Tension field τ(u) in chart components, one grid array per component.
pub fn tension(map: &TorusMap) -> Vec<Vec<f64>> {
    let d = map.chart.dim();
    let dx = map.derivative_x();
    let dy = map.derivative_y();
    let sxx = map.second_x();
    let syy = map.second_y();
    let mut out = vec![vec![0.0; map.grid.len()]; d];
    for iy in 0..map.grid.ny {
        for ix in 0..map.grid.nx {
            let idx = map.grid.idx(ix, iy);
            let q = map.value(ix, iy);
            let ux = Vec64::from_fn(d, |c, _| dx[c][idx]);
            let uy = Vec64::from_fn(d, |c, _| dy[c][idx]);
            let lap = Vec64::from_fn(d, |c, _| sxx[c][idx] + syy[c][idx]);
            let t = lap + map.chart.gamma_vector(&q, &ux, &ux) + map.chart.gamma_vector(&q, &uy, &uy);
            for c in 0..d {
                out[c][idx] = t[c];
            }
        }
    }
    out
}

/// Sup over nodes of the Euclidean length of the tension field.
pub fn tension_sup(map: &TorusMap) -> f64 {
    let t = tension(map);
    let d = t.len();
    let mut worst: f64 = 0.0;
    for idx in 0..map.grid.len() {
        let sq: f64 = (0..d).map(|c| t[c][idx] * t[c][idx]).sum();
        worst = worst.max(sq.sqrt());
    }
    worst
}

/// Dirichlet energy ½∫ |∂ₓu|²_g + |∂_yu|²_g dxdy.
pub fn dirichlet_energy(map: &TorusMap) -> f64 {
    let d = map.chart.dim();
    let dx = map.derivative_x();
    let dy = map.derivative_y();
    let mut total = 0.0;
    for iy in 0..map.grid.ny {
        for ix in 0..map.grid.nx {
            let idx = map.grid.idx(ix, iy);
            let q = map.value(ix, iy);
            let g = map.chart.metric(&q);
            let ux = Vec64::from_fn(d, |c, _| dx[c][idx]);
            let uy = Vec64::from_fn(d, |c, _| dy[c][idx]);
            total += 0.5 * ((&g * &ux).dot(&ux) + (&g * &uy).dot(&uy));
        }
    }
    total * TAU * TAU / map.grid.len() as f64
}

/// Heat-flow parameters.
#[derive(Debug, Clone, Copy)]
pub struct FlowParams {
    pub dt: f64,
    pub max_steps: usize,
    /// Stop once the tension sup-norm falls below this.
    pub tension_tol: f64,
    /// Abort if a ball-chart map approaches the boundary closer than this.
    pub chart_margin: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            dt: 0.05,
            max_steps: 20_000,
            tension_tol: 1e-8,
            chart_margin: 0.05,
        }
    }
}

/// Heat-flow outcome.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub map: TorusMap,
    pub steps: usize,
    pub tension_sup: f64,
    pub energy: f64,
    pub energy_history: Vec<f64>,
    pub converged: bool,
}

/// Integrates ∂_t u = τ(u) by the IMEX spectral scheme until the tension
/// drops below tolerance. Twisted maps are not flowed (the implicit solve
/// needs a true period).
pub fn heat_flow(start: &TorusMap, params: &FlowParams) -> Result<FlowResult> {
    if matches!(start.periodicity, Periodicity::MoebiusTwist { .. }) {
        return Err(Error::Domain {
            what: "heat flow requires a periodic or winding map",
            value: f64::NAN,
        });
    }
    let d = start.chart.dim();
    let grid = start.grid.clone();
    let mut map = start.clone();
    let mut history = Vec::new();
    let mut tension_now = tension_sup(&map);
    let mut steps = 0;

    // Precompute the implicit symbol (1 + dt·|k|²)⁻¹ on the grid.
    let mut symbol = vec![0.0; grid.len()];
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let kx = crate::grid::wavenumber(ix, grid.nx);
            let ky = crate::grid::wavenumber(iy, grid.ny);
            symbol[grid.idx(ix, iy)] = 1.0 / (1.0 + params.dt * (kx * kx + ky * ky));
        }
    }

    while tension_now > params.tension_tol && steps < params.max_steps {
        if map.chart.is_curved() {
            let r = map.max_radius();
            if r >= 1.0 - params.chart_margin {
                return Err(Error::ChartExit {
                    norm: r,
                    margin: params.chart_margin,
                });
            }
        }
        history.push(dirichlet_energy(&map));
        // Explicit Christoffel part N = Γ(uₓ,uₓ) + Γ(u_y,u_y).
        let dx = map.derivative_x();
        let dy = map.derivative_y();
        let mut nterm = vec![vec![0.0; grid.len()]; d];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let idx = grid.idx(ix, iy);
                let q = map.value(ix, iy);
                let ux = Vec64::from_fn(d, |c, _| dx[c][idx]);
                let uy = Vec64::from_fn(d, |c, _| dy[c][idx]);
                let n =
                    map.chart.gamma_vector(&q, &ux, &ux) + map.chart.gamma_vector(&q, &uy, &uy);
                for c in 0..d {
                    nterm[c][idx] = n[c];
                }
            }
        }
        // û ← (û + dt·N̂)/(1 + dt|k|²) on the periodic parts.
        for c in 0..d {
            let mut spec = grid.fft2(&map.comps[c]);
            let nspec = grid.fft2(&nterm[c]);
            for (i, v) in spec.iter_mut().enumerate() {
                *v = (*v + params.dt * nspec[i]) * symbol[i];
            }
            map.comps[c] = grid.ifft2(&spec);
        }
        steps += 1;
        tension_now = tension_sup(&map);
    }
    history.push(dirichlet_energy(&map));
    Ok(FlowResult {
        tension_sup: tension_now,
        energy: *history.last().unwrap(),
        converged: tension_now <= params.tension_tol,
        map,
        steps,
        energy_history: history,
    })
}

/// Momentum lift p = g·v with v = realified 2∂u.
pub fn lift_momentum(map: &TorusMap) -> MomentumMap {
    let d = map.chart.dim();
    let dx = map.derivative_x();
    let dy = map.derivative_y();
    let mut mom = MomentumMap::zeros(d, map.grid.clone());
    for iy in 0..map.grid.ny {
        for ix in 0..map.grid.nx {
            let idx = map.grid.idx(ix, iy);
            let q = map.value(ix, iy);
            let ux = Vec64::from_fn(d, |c, _| dx[c][idx]);
            let uy = Vec64::from_fn(d, |c, _| dy[c][idx]);
            // v = ∂ₓu − i_b ∂_y u (the realified 2∂u).
            let v = &ux - complex_structure_apply(&uy);
            let p = map.chart.metric(&q) * v;
            for c in 0..d {
                mom.comps[c][idx] = p[c];
            }
        }
    }
    mom
}

/// ∂ₓ of a momentum field paired with a base map; spectral off the seam.
///
/// Across a Möbius seam the continuum rule is P ↦ P/γ′(q), but transporting
/// the *discrete* momentum that way is only first-order accurate: the FD
/// truncation error of the lift is not itself a covector. Since the lift is
/// pointwise-geometric and commutes with the identification, the seam ghosts
/// are instead rebuilt by lifting the continued base map at the ghost
/// columns, which keeps the full second order of the stencil.
fn momentum_derivative_x(map: &TorusMap, mom: &MomentumMap) -> Vec<Vec<f64>> {
    match &map.periodicity {
        Periodicity::MoebiusTwist { rho } => {
            let rho = *rho;
            let grid = &map.grid;
            let nx = grid.nx;
            let h = TAU / nx as f64;
            let dy = map.derivative_y();
            let mut out = vec![vec![0.0; grid.len()]; 2];
            let qc = |ix: usize, iy: usize| {
                let idx = grid.idx(ix, iy);
                C64::new(map.comps[0][idx], map.comps[1][idx])
            };
            let dyc = |ix: usize, iy: usize| {
                let idx = grid.idx(ix, iy);
                C64::new(dy[0][idx], dy[1][idx])
            };
            let pc = |ix: usize, iy: usize| {
                let idx = grid.idx(ix, iy);
                C64::new(mom.comps[0][idx], -mom.comps[1][idx])
            };
            // P at a ghost column from its own centered x-stencil and the
            // transported y-derivative: P = conj(V)/σ², V = ∂ₓu − i∂_yu.
            let lift = |q_left: C64, q_center: C64, q_right: C64, du_y: C64| {
                let v = (q_right - q_left) / (2.0 * h) - C64::i() * du_y;
                let sigma = 1.0 - q_center.norm_sqr();
                v.conj() / (sigma * sigma)
            };
            for iy in 0..grid.ny {
                // Right ghost at x = 2π: u = γ(u(0)), neighbors u(2π−h) and
                // γ(u(h)), ∂_y = γ′(u(0))·∂_yu(0).
                let pg_right = lift(
                    qc(nx - 1, iy),
                    mobius(rho, qc(0, iy)),
                    mobius(rho, qc(1, iy)),
                    mobius_derivative(rho, qc(0, iy)) * dyc(0, iy),
                );
                // Left ghost at x = −h: u = γ⁻¹(u(2π−h)), neighbors
                // γ⁻¹(u(2π−2h)) and u(0), ∂_y = ∂_yu(2π−h)/γ′(γ⁻¹(u(2π−h))).
                let qg_left = mobius_inverse(rho, qc(nx - 1, iy));
                let pg_left = lift(
                    mobius_inverse(rho, qc(nx - 2, iy)),
                    qg_left,
                    qc(0, iy),
                    dyc(nx - 1, iy) / mobius_derivative(rho, qg_left),
                );
                for ix in 0..nx {
                    let left = if ix == 0 { pg_left } else { pc(ix - 1, iy) };
                    let right = if ix == nx - 1 { pg_right } else { pc(ix + 1, iy) };
                    let dpdx = (right - left) / (2.0 * h);
                    let idx = grid.idx(ix, iy);
                    out[0][idx] = dpdx.re;
                    out[1][idx] = -dpdx.im;
                }
            }
            out
        }
        _ => mom.comps.iter().map(|c| map.grid.dx(c)).collect(),
    }
}

/// Sup-norm of the free slice Euler–Lagrange residual of a lifted pair,
///
/// ```text
///   el_q = −∂ₓp − i_b ∂_y p + Cξ,    el_p = ∂ₓq − i_b ∂_y q − ξ,
/// ```
///
/// with twisted-seam ghosts for both q and p. The p-half vanishes by
/// construction of the lift; the q-half converges at the order of the seam
/// stencils when u is harmonic.
pub fn lift_residual_sup(map: &TorusMap, mom: &MomentumMap) -> f64 {
    let d = map.chart.dim();
    let dxq = map.derivative_x();
    let dyq = map.derivative_y();
    let dxp = momentum_derivative_x(map, mom);
    let dyp: Vec<Vec<f64>> = mom.comps.iter().map(|c| map.grid.dy(c)).collect();
    let mut worst: f64 = 0.0;
    for iy in 0..map.grid.ny {
        for ix in 0..map.grid.nx {
            let idx = map.grid.idx(ix, iy);
            let q = map.value(ix, iy);
            let p = mom.value(ix, iy);
            let xi = map.chart.metric_inverse(&q) * &p;
            let dp_x = Vec64::from_fn(d, |c, _| dxp[c][idx]);
            let dp_y = Vec64::from_fn(d, |c, _| dyp[c][idx]);
            let dq_x = Vec64::from_fn(d, |c, _| dxq[c][idx]);
            let dq_y = Vec64::from_fn(d, |c, _| dyq[c][idx]);
            let el_q = -&dp_x - complex_structure_apply(&dp_y)
                + c_matrix(&map.chart, &q, &p) * &xi;
            let el_p = &dq_x - complex_structure_apply(&dq_y) - xi;
            worst = worst.max(el_q.norm()).max(el_p.norm());
        }
    }
    worst
}

/// The analytic twisted harmonic band u(x,y) = tanh(a·x) on the disk chart,
/// satisfying the Möbius identification with ρ = tanh(2πa).
pub fn twisted_geodesic_map(a: f64, nx: usize, ny: usize) -> TorusMap {
    let rho = (TAU * a).tanh();
    TorusMap::from_fn(
        BaseChart::ComplexHyperbolic { n: 1 },
        TorusGrid::new(nx, ny),
        Periodicity::MoebiusTwist { rho },
        |x, _| Vec64::from_vec(vec![(a * x).tanh(), 0.0]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn tension_vanishes_on_linear_winding_maps() {
        let chart = BaseChart::FlatTorus { n: 1 };
        let map = TorusMap::from_fn(
            chart,
            TorusGrid::new(12, 12),
            Periodicity::FlatWinding {
                winding: vec![[2, 1], [0, 1]],
            },
            |x, y| Vec64::from_vec(vec![2.0 * x + y, y]),
        );
        assert!(tension_sup(&map) < 1e-12);
    }

    #[test]
    fn tension_matches_laplacian_on_flat_chart() {
        let chart = BaseChart::FlatTorus { n: 1 };
        let map = TorusMap::from_fn(
            chart,
            TorusGrid::new(16, 16),
            Periodicity::Periodic,
            |x, y| Vec64::from_vec(vec![(x + y).sin(), (2.0 * x).cos()]),
        );
        let t = tension(&map);
        for iy in 0..map.grid.ny {
            for ix in 0..map.grid.nx {
                let (x, y) = (map.grid.x(ix), map.grid.y(iy));
                let idx = map.grid.idx(ix, iy);
                assert_relative_eq!(t[0][idx], -2.0 * (x + y).sin(), epsilon = 1e-10);
                assert_relative_eq!(t[1][idx], -4.0 * (2.0 * x).cos(), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn twisted_geodesic_band_is_harmonic_at_second_order() {
        let t32 = tension_sup(&twisted_geodesic_map(0.15, 32, 4));
        let t64 = tension_sup(&twisted_geodesic_map(0.15, 64, 4));
        assert!(t64 < 1e-3, "coarse tension {t64}");
        let order = (t32 / t64).log2();
        assert!(order > 1.6 && order < 2.4, "tension order {order}");
    }

    #[test]
    fn heat_flow_relaxes_winding_map_to_linear_representative() {
        let chart = BaseChart::FlatTorus { n: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let amp = 0.3;
        let (a, b) = (rng.random_range(-amp..amp), rng.random_range(-amp..amp));
        let start = TorusMap::from_fn(
            chart,
            TorusGrid::new(16, 16),
            Periodicity::FlatWinding {
                winding: vec![[1, 0], [0, 1]],
            },
            |x, y| {
                Vec64::from_vec(vec![
                    x + a * (x + 2.0 * y).sin(),
                    y + b * (y).cos() * (x).sin(),
                ])
            },
        );
        let res = heat_flow(&start, &FlowParams::default()).unwrap();
        assert!(res.converged, "flow did not converge in {} steps", res.steps);
        assert!(res.tension_sup <= 1e-8);
        // Energy of the linear representative: ½∫(1+1) = 4π².
        assert_relative_eq!(res.energy, 4.0 * std::f64::consts::PI.powi(2), max_relative = 1e-6);
        // Energy decreases monotonically (up to roundoff).
        for w in res.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn heat_flow_on_ball_chart_settles_to_a_point() {
        let chart = BaseChart::ComplexHyperbolic { n: 1 };
        let start = TorusMap::from_fn(
            chart,
            TorusGrid::new(16, 16),
            Periodicity::Periodic,
            |x, y| {
                Vec64::from_vec(vec![
                    0.2 + 0.1 * (x).sin() + 0.05 * (x + y).cos(),
                    0.1 * (y).cos(),
                ])
            },
        );
        let params = FlowParams {
            tension_tol: 1e-9,
            ..FlowParams::default()
        };
        let res = heat_flow(&start, &params).unwrap();
        assert!(res.converged);
        // Energy of a constant map is zero.
        assert!(res.energy < 1e-12, "residual energy {}", res.energy);
        for w in res.energy_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn lift_of_linear_winding_map_is_exactly_critical() {
        let chart = BaseChart::FlatTorus { n: 1 };
        let map = TorusMap::from_fn(
            chart,
            TorusGrid::new(16, 16),
            Periodicity::FlatWinding {
                winding: vec![[1, 0], [0, 1]],
            },
            |x, y| Vec64::from_vec(vec![x, y]),
        );
        let mom = lift_momentum(&map);
        assert!(lift_residual_sup(&map, &mom) < 1e-12);
    }

    #[test]
    fn twisted_lift_residual_converges_at_second_order() {
        let res = |nn: usize| {
            let map = twisted_geodesic_map(0.15, nn, 4);
            let mom = lift_momentum(&map);
            lift_residual_sup(&map, &mom)
        };
        let r32 = res(32);
        let r64 = res(64);
        let order = (r32 / r64).log2();
        assert!(order > 1.6 && order < 2.4, "lift residual order {order}");
    }

    #[test]
    fn momentum_lift_matches_known_profile_on_the_band() {
        // For u = tanh(ax): V = 2∂u = u′ real; p = v/σ² with σ = sech²(ax),
        // so p¹ = a·sech²/sech⁴ = a·cosh²(ax), p² = 0.
        let map = twisted_geodesic_map(0.1, 64, 4);
        let mom = lift_momentum(&map);
        for ix in [0usize, 13, 40] {
            let x = map.grid.x(ix);
            let expect = 0.1 * (0.1 * x).cosh().powi(2);
            let got = mom.comps[0][map.grid.idx(ix, 2)];
            assert_relative_eq!(got, expect, max_relative = 1e-3);
            assert!(mom.comps[1][map.grid.idx(ix, 2)].abs() < 1e-10);
        }
    }
}
