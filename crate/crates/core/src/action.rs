//! The slice action functional on maps 𝕋² → T*M and its Euler–Lagrange
//! residual.
//!
//! With the constant Darboux matrices Ω₁, Ω₂ and a Hamiltonian H, the action
//! of a slice Z = (q,p) is
//!
//! ```text
//!   𝒜(Z) = ∫∫ [ ½ Z̃ᵀΩ₁∂ₓZ̃ + Z̃ᵀΩ₁Wₓ + ½ Z̃ᵀΩ₂∂_yZ̃ + Z̃ᵀΩ₂W_y − H(x,y,Z) ] dxdy,
//! ```
//!
//! where Z̃ is the periodic part and Wₓ, W_y the constant winding derivatives
//! (zero for honestly periodic maps). The winding cross-terms make the first
//! variation exact for periodic variations V:
//!
//! ```text
//!   δ𝒜[V] = ∫∫ ⟨ Ω₁∂ₓZ + Ω₂∂_yZ − dH , V ⟩ dxdy,
//! ```
//!
//! so the covector field `el = Ω₁∂ₓZ + Ω₂∂_yZ − dH` is the Euler–Lagrange
//! residual, and the metric gradient is G⁻¹·el. In components,
//!
//! ```text
//!   el_q = −∂ₓp − i_b ∂_y p + Cξ − β·∂h/∂q,
//!   el_p = ∂ₓq − i_b ∂_y q − ξ − β·∂h/∂p,      ξ = g⁻¹p.
//! ```
//!
//! Slices with a Möbius twist are outside this functional's domain (the
//! Darboux primitives are not single-valued across the twisted seam).

use crate::chart::complex_structure_apply;
use crate::field::{Periodicity, TorusMap};
use crate::grid::TorusGrid;
use crate::hamiltonian::Hamiltonian;
use crate::hyperkahler::frame;
use crate::{Error, Result, Vec64};
use std::f64::consts::TAU;

/// Everything needed to evaluate the action on one slice.
pub struct SliceContext<'a> {
    pub ham: &'a Hamiltonian,
    pub periodicity: &'a Periodicity,
    pub grid: &'a TorusGrid,
    /// Cylinder coordinate of the slice (enters the temporal profile).
    pub s: f64,
}

/// Splits 4n slice components into (q-part, p-part).
fn split(comps: &[Vec<f64>]) -> (&[Vec<f64>], &[Vec<f64>]) {
    let half = comps.len() / 2;
    (&comps[..half], &comps[half..])
}

impl SliceContext<'_> {
    fn dim(&self) -> usize {
        self.ham.chart.dim()
    }

    fn base_map(&self, qcomps: &[Vec<f64>]) -> TorusMap {
        TorusMap {
            chart: self.ham.chart,
            periodicity: self.periodicity.clone(),
            grid: self.grid.clone(),
            comps: qcomps.to_vec(),
        }
    }

    /// Constant winding derivatives (Wₓ, W_y) of the q-part.
    fn winding_rates(&self) -> (Vec64, Vec64) {
        let d = self.dim();
        match self.periodicity {
            Periodicity::FlatWinding { winding } => (
                Vec64::from_fn(d, |c, _| winding[c][0] as f64),
                Vec64::from_fn(d, |c, _| winding[c][1] as f64),
            ),
            _ => (Vec64::zeros(d), Vec64::zeros(d)),
        }
    }

    /// First derivatives of all 4n components: q via the periodicity-aware
    /// map (winding included), p spectrally.
    pub fn derivatives(&self, comps: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let (qc, pc) = split(comps);
        let map = self.base_map(qc);
        let mut dx = map.derivative_x();
        let mut dy = map.derivative_y();
        for c in pc {
            dx.push(self.grid.dx(c));
            dy.push(self.grid.dy(c));
        }
        (dx, dy)
    }

    /// Action value of the slice.
    pub fn action_value(&self, comps: &[Vec<f64>]) -> Result<f64> {
        if matches!(self.periodicity, Periodicity::MoebiusTwist { .. }) {
            return Err(Error::Domain {
                what: "slice action is not defined across a twisted seam",
                value: f64::NAN,
            });
        }
        let d = self.dim();
        let (qc, pc) = split(comps);
        let map = self.base_map(qc);
        // Spectral derivatives of the periodic parts only.
        let dxq: Vec<Vec<f64>> = qc.iter().map(|c| self.grid.dx(c)).collect();
        let dyq: Vec<Vec<f64>> = qc.iter().map(|c| self.grid.dy(c)).collect();
        let dxp: Vec<Vec<f64>> = pc.iter().map(|c| self.grid.dx(c)).collect();
        let dyp: Vec<Vec<f64>> = pc.iter().map(|c| self.grid.dy(c)).collect();
        let (wx, wy) = self.winding_rates();

        let mut total = 0.0;
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                let idx = self.grid.idx(ix, iy);
                let qper = Vec64::from_fn(d, |c, _| qc[c][idx]);
                let p = Vec64::from_fn(d, |c, _| pc[c][idx]);
                let dq_x = Vec64::from_fn(d, |c, _| dxq[c][idx]);
                let dq_y = Vec64::from_fn(d, |c, _| dyq[c][idx]);
                let dp_x = Vec64::from_fn(d, |c, _| dxp[c][idx]);
                let dp_y = Vec64::from_fn(d, |c, _| dyp[c][idx]);

                // ½ Z̃ᵀΩ₁∂ₓZ̃ = ½(p·∂ₓq̃ − q̃·∂ₓp); winding term Z̃ᵀΩ₁Wₓ = p·Wₓ.
                let mut v = 0.5 * (p.dot(&dq_x) - qper.dot(&dp_x)) + p.dot(&wx);
                // ½ Z̃ᵀΩ₂∂_yZ̃ = −½(q̃·i∂_yp + p·i∂_yq̃); winding term −p·(i W_y).
                v += -0.5
                    * (qper.dot(&complex_structure_apply(&dp_y))
                        + p.dot(&complex_structure_apply(&dq_y)))
                    - p.dot(&complex_structure_apply(&wy));
                let qfull = map.value(ix, iy);
                v -= self
                    .ham
                    .value(self.s, self.grid.x(ix), self.grid.y(iy), &qfull, &p);
                total += v;
            }
        }
        Ok(total * TAU * TAU / self.grid.len() as f64)
    }

    /// Euler–Lagrange residual covector field (4n components per node).
    pub fn el_residual(&self, comps: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let d = self.dim();
        let (dx, dy) = self.derivatives(comps);
        let (qc, pc) = split(comps);
        let map = self.base_map(qc);
        let mut out = vec![vec![0.0; self.grid.len()]; 2 * d];
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                let idx = self.grid.idx(ix, iy);
                let q = map.value(ix, iy);
                let p = Vec64::from_fn(d, |c, _| pc[c][idx]);
                let dq_x = Vec64::from_fn(d, |c, _| dx[c][idx]);
                let dq_y = Vec64::from_fn(d, |c, _| dy[c][idx]);
                let dp_x = Vec64::from_fn(d, |c, _| dx[d + c][idx]);
                let dp_y = Vec64::from_fn(d, |c, _| dy[d + c][idx]);

                let (hq, hp) = self.ham.differential(
                    self.s,
                    self.grid.x(ix),
                    self.grid.y(iy),
                    &q,
                    &p,
                );
                // dH_q already carries the −Cξ of the kinetic part, dH_p the ξ.
                let el_q = -&dp_x - complex_structure_apply(&dp_y) - &hq;
                let el_p = &dq_x - complex_structure_apply(&dq_y) - &hp;
                for c in 0..d {
                    out[c][idx] = el_q[c];
                    out[d + c][idx] = el_p[c];
                }
            }
        }
        out
    }

    /// Feature-metric gradient G⁻¹·el at every node.
    pub fn gradient(&self, comps: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let d = self.dim();
        let el = self.el_residual(comps);
        if !self.ham.chart.is_curved() {
            // Flat chart: G = Id exactly.
            return Ok(el);
        }
        let (qc, pc) = split(comps);
        let map = self.base_map(qc);
        let mut out = vec![vec![0.0; self.grid.len()]; 2 * d];
        for iy in 0..self.grid.ny {
            for ix in 0..self.grid.nx {
                let idx = self.grid.idx(ix, iy);
                let q = map.value(ix, iy);
                let p = Vec64::from_fn(d, |c, _| pc[c][idx]);
                let f = frame(&self.ham.chart, &q, &p)?;
                let elv = Vec64::from_fn(2 * d, |c, _| el[c][idx]);
                let grad = &f.metric_inv * elv;
                for c in 0..2 * d {
                    out[c][idx] = grad[c];
                }
            }
        }
        Ok(out)
    }

    /// Discrete L² pairing ∫⟨a, b⟩ dxdy of two component stacks.
    pub fn pair(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (ac, bc) in a.iter().zip(b) {
            for (x, y) in ac.iter().zip(bc) {
                total += x * y;
            }
        }
        total * TAU * TAU / self.grid.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::BaseChart;
    use crate::hamiltonian::{Perturbation, TemporalProfile};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trig_field(grid: &TorusGrid, rng: &mut ChaCha8Rng, scale: f64) -> Vec<f64> {
        let (a, b, c, d) = (
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let mut f = vec![0.0; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let (x, y) = (grid.x(ix), grid.y(iy));
                f[grid.idx(ix, iy)] = scale
                    * (a * x.sin() + b * (x + y).cos() + c * (2.0 * y).sin() + d * (x - y).cos());
            }
        }
        f
    }

    fn fd_variation(ctx: &SliceContext, comps: &[Vec<f64>], dir: &[Vec<f64>], eps: f64) -> f64 {
        let plus: Vec<Vec<f64>> = comps
            .iter()
            .zip(dir)
            .map(|(c, v)| c.iter().zip(v).map(|(a, b)| a + eps * b).collect())
            .collect();
        let minus: Vec<Vec<f64>> = comps
            .iter()
            .zip(dir)
            .map(|(c, v)| c.iter().zip(v).map(|(a, b)| a - eps * b).collect())
            .collect();
        (ctx.action_value(&plus).unwrap() - ctx.action_value(&minus).unwrap()) / (2.0 * eps)
    }

    #[test]
    fn variation_matches_el_residual_with_winding() {
        let chart = BaseChart::FlatTorus { n: 1 };
        let ham = Hamiltonian {
            chart,
            perturbation: Some(Perturbation::standard(1, 0.2)),
            profile: TemporalProfile::Static,
        };
        let grid = TorusGrid::new(12, 12);
        let periodicity = Periodicity::FlatWinding {
            winding: vec![[1, 0], [0, 1]],
        };
        let ctx = SliceContext {
            ham: &ham,
            periodicity: &periodicity,
            grid: &grid,
            s: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let comps: Vec<Vec<f64>> = (0..4).map(|_| trig_field(&grid, &mut rng, 0.3)).collect();
        let el = ctx.el_residual(&comps);
        for _ in 0..3 {
            let dir: Vec<Vec<f64>> = (0..4).map(|_| trig_field(&grid, &mut rng, 1.0)).collect();
            let fd = fd_variation(&ctx, &comps, &dir, 1e-6);
            let pairing = ctx.pair(&el, &dir);
            assert_relative_eq!(fd, pairing, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn variation_matches_el_residual_on_ball_chart() {
        let chart = BaseChart::ComplexHyperbolic { n: 1 };
        let ham = Hamiltonian {
            chart,
            perturbation: Some(Perturbation::standard(1, 0.15)),
            profile: TemporalProfile::Plateau { tau: 2.0 },
        };
        let grid = TorusGrid::new(10, 10);
        let periodicity = Periodicity::Periodic;
        let ctx = SliceContext {
            ham: &ham,
            periodicity: &periodicity,
            grid: &grid,
            s: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        // Small periodic fields keep q inside the ball and ξ under the guard.
        let comps: Vec<Vec<f64>> = (0..4).map(|_| trig_field(&grid, &mut rng, 0.05)).collect();
        let el = ctx.el_residual(&comps);
        for _ in 0..3 {
            let dir: Vec<Vec<f64>> = (0..4).map(|_| trig_field(&grid, &mut rng, 1.0)).collect();
            let fd = fd_variation(&ctx, &comps, &dir, 1e-6);
            let pairing = ctx.pair(&el, &dir);
            assert_relative_eq!(fd, pairing, epsilon = 1e-6, max_relative = 1e-6);
        }
    }

    #[test]
    fn lifted_winding_map_is_discrete_critical_point() {
        // q = x + iy as a complex chart value; its lift p = 2∂q = 2·½(1 − i·i)
        // = (2, 0) is constant, and the free flat action is exactly critical
        // there (even discretely, since derivatives of constants are exact).
        let chart = BaseChart::FlatTorus { n: 1 };
        let ham = Hamiltonian::free(chart);
        let grid = TorusGrid::new(8, 8);
        let periodicity = Periodicity::FlatWinding {
            winding: vec![[1, 0], [0, 1]],
        };
        let ctx = SliceContext {
            ham: &ham,
            periodicity: &periodicity,
            grid: &grid,
            s: 0.0,
        };
        let comps = vec![
            vec![0.0; grid.len()],
            vec![0.0; grid.len()],
            vec![2.0; grid.len()],
            vec![0.0; grid.len()],
        ];
        let el = ctx.el_residual(&comps);
        for c in &el {
            for v in c {
                assert!(v.abs() < 1e-13, "winding critical point violated: {v}");
            }
        }
    }

    #[test]
    fn action_value_hand_computed_case() {
        // Flat, free, periodic: q = (sin x, 0), p = (cos x, 0).
        // Ω₁ term integrates to 2π², H-term to π² ⟹ 𝒜 = π².
        let chart = BaseChart::FlatTorus { n: 1 };
        let ham = Hamiltonian::free(chart);
        let grid = TorusGrid::new(16, 8);
        let periodicity = Periodicity::Periodic;
        let ctx = SliceContext {
            ham: &ham,
            periodicity: &periodicity,
            grid: &grid,
            s: 0.0,
        };
        let mut comps = vec![vec![0.0; grid.len()]; 4];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let idx = grid.idx(ix, iy);
                comps[0][idx] = grid.x(ix).sin();
                comps[2][idx] = grid.x(ix).cos();
            }
        }
        let val = ctx.action_value(&comps).unwrap();
        assert_relative_eq!(val, std::f64::consts::PI.powi(2), max_relative = 1e-12);
    }

    #[test]
    fn gradient_is_metric_inverse_of_residual() {
        let chart = BaseChart::ComplexHyperbolic { n: 1 };
        let ham = Hamiltonian::free(chart);
        let grid = TorusGrid::new(6, 6);
        let periodicity = Periodicity::Periodic;
        let ctx = SliceContext {
            ham: &ham,
            periodicity: &periodicity,
            grid: &grid,
            s: 0.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let comps: Vec<Vec<f64>> = (0..4).map(|_| trig_field(&grid, &mut rng, 0.05)).collect();
        let el = ctx.el_residual(&comps);
        let grad = ctx.gradient(&comps).unwrap();
        // Re-multiply by G node by node.
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let idx = grid.idx(ix, iy);
                let q = Vec64::from_vec(vec![comps[0][idx], comps[1][idx]]);
                let p = Vec64::from_vec(vec![comps[2][idx], comps[3][idx]]);
                let f = frame(&chart, &q, &p).unwrap();
                let gv = Vec64::from_fn(4, |c, _| grad[c][idx]);
                let back = &f.metric * gv;
                for c in 0..4 {
                    assert_relative_eq!(back[c], el[c][idx], epsilon = 1e-11);
                }
            }
        }
    }

    #[test]
    fn twisted_slices_are_rejected() {
        let chart = BaseChart::ComplexHyperbolic { n: 1 };
        let ham = Hamiltonian::free(chart);
        let grid = TorusGrid::new(6, 6);
        let periodicity = Periodicity::MoebiusTwist { rho: 0.3 };
        let ctx = SliceContext {
            ham: &ham,
            periodicity: &periodicity,
            grid: &grid,
            s: 0.0,
        };
        let comps = vec![vec![0.0; grid.len()]; 4];
        assert!(ctx.action_value(&comps).is_err());
    }
}
