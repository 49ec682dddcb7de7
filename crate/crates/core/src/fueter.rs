//! The first-order boundary value problem on the finite cylinder
//! [−S, S] × 𝕋²: discrete residual, boundary rows, analytic flat-chart
//! Jacobian, per-mode symbol, and the energy identity.
//!
//! The interior equation is the negative-gradient flow of the slice action,
//!
//! ```text
//!   F(Z) = ∂_s Z + G⁻¹(Z) [ Ω₁∂ₓZ + Ω₂∂_yZ − dH_s(Z) ],
//! ```
//!
//! discretized with second-order centered differences along s and the slice
//! machinery of [`crate::action`] across 𝕋². For the free flat problem each
//! spatial Fourier mode κ = k₁ + ik₂ decouples into the 2×2 complex system
//! Z′ = M_κ Z with M_κ = [[0, iκ], [−iκ̄, 1]], whose eigenvalues
//! (1 ± √(1+4|κ|²))/2 straddle zero for κ ≠ 0: the problem is a hyperbolic
//! two-point connection problem.
//!
//! Boundary rows: the fiber components satisfy Dirichlet conditions p(±S)=0;
//! the base components keep their evolution equation with second-order
//! one-sided ∂_s stencils; and every spatial mode annihilated by the
//! discrete first-derivative symbols — the constant mode, plus the Nyquist
//! characters on even grids — is replaced inside the left base rows by the
//! gauge constraint pinning that mode of q(−S). Those modes see κ_eff = 0,
//! so their base lines are pure difference equations with a constant-in-s
//! kernel; without the gauge the discrete Jacobian is exactly singular.
//! A manufactured forcing vector can be subtracted from every row to pose
//! exact-recovery problems.

use crate::action::SliceContext;
use crate::field::{CylinderState, Periodicity, TorusMap};
use crate::grid::CylinderGrid;
use crate::hamiltonian::Hamiltonian;
use crate::hyperkahler::frame;
use crate::{C64, Error, Result, Vec64};
use std::f64::consts::TAU;

/// The discretized boundary value problem.
#[derive(Debug, Clone)]
pub struct FueterProblem {
    pub ham: Hamiltonian,
    pub periodicity: Periodicity,
    pub grid: CylinderGrid,
    /// Optional manufactured forcing, subtracted row-by-row.
    pub forcing: Option<Vec64>,
}

/// Mode symbol M_κ = [[0, iκ], [−iκ̄, 1]] of the free flat problem.
pub fn flat_mode_matrix(kx: f64, ky: f64) -> [[C64; 2]; 2] {
    let kappa = C64::new(kx, ky);
    [
        [C64::new(0.0, 0.0), C64::i() * kappa],
        [-C64::i() * kappa.conj(), C64::new(1.0, 0.0)],
    ]
}

/// ±1-valued characters of the spatial modes killed by the discrete
/// first-derivative symbols: the constant field, and on even grids the
/// Nyquist characters (−1)^ix, (−1)^iy, (−1)^{ix+iy}. These span the
/// gauge-pinned subspace.
pub fn gauge_characters(nx: usize, ny: usize) -> Vec<Vec<f64>> {
    let mut bins = vec![(0usize, 0usize)];
    if nx % 2 == 0 {
        bins.push((nx / 2, 0));
    }
    if ny % 2 == 0 {
        bins.push((0, ny / 2));
    }
    if nx % 2 == 0 && ny % 2 == 0 {
        bins.push((nx / 2, ny / 2));
    }
    bins.iter()
        .map(|&(a, b)| {
            let mut chi = vec![0.0; nx * ny];
            for iy in 0..ny {
                for ix in 0..nx {
                    let sign_x = if a > 0 && ix % 2 == 1 { -1.0 } else { 1.0 };
                    let sign_y = if b > 0 && iy % 2 == 1 { -1.0 } else { 1.0 };
                    chi[ix + nx * iy] = sign_x * sign_y;
                }
            }
            chi
        })
        .collect()
}

/// Outcome of the integrated energy identity
/// 𝒜(−S) − 𝒜(S) = ∫∫ |∂_sZ|²_G + ∫∫ β′·h.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EnergyIdentity {
    pub action_left: f64,
    pub action_right: f64,
    pub flow_energy: f64,
    pub switching_work: f64,
    pub relative_defect: f64,
}

impl FueterProblem {
    pub fn new(ham: Hamiltonian, periodicity: Periodicity, grid: CylinderGrid) -> Self {
        FueterProblem {
            ham,
            periodicity,
            grid,
            forcing: None,
        }
    }

    /// Complex base dimension.
    pub fn n(&self) -> usize {
        self.ham.chart.n()
    }

    /// Total number of unknowns 4n·ns·nx·ny.
    pub fn unknowns(&self) -> usize {
        4 * self.n() * self.grid.ns * self.grid.torus.nx * self.grid.torus.ny
    }

    /// A zero state with this problem's shape.
    pub fn zero_state(&self) -> CylinderState {
        CylinderState::zeros(self.n(), self.grid.ns, self.grid.torus.nx, self.grid.torus.ny)
    }

    fn slice_comps(&self, state: &CylinderState, js: usize) -> Vec<Vec<f64>> {
        (0..state.comps())
            .map(|c| state.slice_component(c, js))
            .collect()
    }

    /// Discrete residual. Layout matches the state vector.
    pub fn residual(&self, state: &CylinderState) -> Result<Vec64> {
        let d = 2 * self.n();
        let (ns, nx, ny) = (self.grid.ns, self.grid.torus.nx, self.grid.torus.ny);
        let ds = self.grid.ds();
        let nxy = nx * ny;

        // Spatial gradient field per slice.
        let mut grads: Vec<Vec<Vec<f64>>> = Vec::with_capacity(ns);
        for js in 0..ns {
            let comps = self.slice_comps(state, js);
            let ctx = SliceContext {
                ham: &self.ham,
                periodicity: &self.periodicity,
                grid: &self.grid.torus,
                s: self.grid.s(js),
            };
            grads.push(ctx.gradient(&comps)?);
        }

        let mut res = Vec64::zeros(self.unknowns());
        let z = &state.data;
        for js in 0..ns {
            for iy in 0..ny {
                for ix in 0..nx {
                    let off = state.node_offset(js, ix, iy);
                    let gidx = ix + nx * iy;
                    for c in 0..2 * d {
                        let row = off + c;
                        let interior = js > 0 && js < ns - 1;
                        if !interior && c >= d {
                            // Fiber Dirichlet rows: p(±S) = 0.
                            res[row] = z[row];
                            continue;
                        }
                        let dzds = if interior {
                            let fwd = state.node_offset(js + 1, ix, iy) + c;
                            let bwd = state.node_offset(js - 1, ix, iy) + c;
                            (z[fwd] - z[bwd]) / (2.0 * ds)
                        } else if js == 0 {
                            let z1 = state.node_offset(1, ix, iy) + c;
                            let z2 = state.node_offset(2, ix, iy) + c;
                            (-3.0 * z[row] + 4.0 * z[z1] - z[z2]) / (2.0 * ds)
                        } else {
                            let z1 = state.node_offset(ns - 2, ix, iy) + c;
                            let z2 = state.node_offset(ns - 3, ix, iy) + c;
                            (3.0 * z[row] - 4.0 * z[z1] + z[z2]) / (2.0 * ds)
                        };
                        res[row] = dzds + grads[js][c][gidx];
                    }
                }
            }
        }

        // Gauge: inside the left base rows, swap each κ_eff = 0 character
        // of the equation for the same character of q(−S) itself.
        for chi in gauge_characters(nx, ny) {
            for c in 0..d {
                let mut row_coef = 0.0;
                let mut q_coef = 0.0;
                for iy in 0..ny {
                    for ix in 0..nx {
                        let row = state.node_offset(0, ix, iy) + c;
                        let w = chi[ix + nx * iy];
                        row_coef += w * res[row];
                        q_coef += w * z[row];
                    }
                }
                let adj = (q_coef - row_coef) / nxy as f64;
                for iy in 0..ny {
                    for ix in 0..nx {
                        let row = state.node_offset(0, ix, iy) + c;
                        res[row] += chi[ix + nx * iy] * adj;
                    }
                }
            }
        }

        if let Some(f) = &self.forcing {
            if f.len() != res.len() {
                return Err(Error::Dimension {
                    what: "forcing vector",
                    expected: res.len(),
                    got: f.len(),
                });
            }
            res -= f;
        }
        Ok(res)
    }

    /// Analytic Jacobian–vector product for the flat chart, where
    /// G = Id and the only state dependence of dH is the Hessian of H.
    /// Variations are periodic, so their spatial derivatives are spectral.
    pub fn jacobian_apply_flat(&self, state: &CylinderState, v: &Vec64) -> Result<Vec64> {
        if self.ham.chart.is_curved() {
            return Err(Error::Domain {
                what: "analytic Jacobian is flat-chart only",
                value: f64::NAN,
            });
        }
        let d = 2 * self.n();
        let (ns, nx, ny) = (self.grid.ns, self.grid.torus.nx, self.grid.torus.ny);
        let ds = self.grid.ds();
        let nxy = nx * ny;
        let torus = &self.grid.torus;

        let mut out = Vec64::zeros(self.unknowns());
        // Per-slice spatial part: Ω₁∂ₓv + Ω₂∂_yv − Hess(H)[v].
        let mut spatial: Vec<Vec<Vec<f64>>> = Vec::with_capacity(ns);
        for js in 0..ns {
            let s = self.grid.s(js);
            let beta = self.ham.profile.factor(s);
            // Gather v on the slice.
            let mut vcomps = vec![vec![0.0; nxy]; 2 * d];
            for iy in 0..ny {
                for ix in 0..nx {
                    let off = state.node_offset(js, ix, iy);
                    for c in 0..2 * d {
                        vcomps[c][ix + nx * iy] = v[off + c];
                    }
                }
            }
            let dxv: Vec<Vec<f64>> = vcomps.iter().map(|c| torus.dx(c)).collect();
            let dyv: Vec<Vec<f64>> = vcomps.iter().map(|c| torus.dy(c)).collect();
            // Base map for full q values (winding enters h's arguments).
            let qmap = TorusMap {
                chart: self.ham.chart,
                periodicity: self.periodicity.clone(),
                grid: torus.clone(),
                comps: (0..d).map(|c| state.slice_component(c, js)).collect(),
            };
            let mut sl = vec![vec![0.0; nxy]; 2 * d];
            for iy in 0..ny {
                for ix in 0..nx {
                    let gidx = ix + nx * iy;
                    let vq = Vec64::from_fn(d, |c, _| dxv[c][gidx]);
                    let vq_y = Vec64::from_fn(d, |c, _| dyv[c][gidx]);
                    let vp = Vec64::from_fn(d, |c, _| dxv[d + c][gidx]);
                    let vp_y = Vec64::from_fn(d, |c, _| dyv[d + c][gidx]);
                    let vnode = Vec64::from_fn(2 * d, |c, _| vcomps[c][gidx]);
                    // Ω₁∂ₓv: q-rows −∂ₓv_p, p-rows +∂ₓv_q.
                    // Ω₂∂_yv: q-rows −i_b ∂_yv_p, p-rows −i_b ∂_yv_q.
                    let iq = crate::chart::complex_structure_apply(&vp_y);
                    let ip = crate::chart::complex_structure_apply(&vq_y);
                    // Free Hessian (flat): d(0,ξ)/dZ = [[0,0],[0,Id]].
                    let mut hv = Vec64::zeros(2 * d);
                    for c in 0..d {
                        hv[d + c] = vnode[d + c];
                    }
                    if beta != 0.0 {
                        if let Some(pert) = &self.ham.perturbation {
                            let q = qmap.value(ix, iy);
                            let p = Vec64::from_fn(d, |c, _| {
                                state.data[state.node_offset(js, ix, iy) + d + c]
                            });
                            let hess = pert.hessian_qp(torus.x(ix), torus.y(iy), &q, &p);
                            hv += hess * &vnode * beta;
                        }
                    }
                    for c in 0..d {
                        sl[c][gidx] = -vp[c] - iq[c] - hv[c];
                        sl[d + c][gidx] = vq[c] - ip[c] - hv[d + c];
                    }
                }
            }
            spatial.push(sl);
        }

        for js in 0..ns {
            for iy in 0..ny {
                for ix in 0..nx {
                    let off = state.node_offset(js, ix, iy);
                    let gidx = ix + nx * iy;
                    for c in 0..2 * d {
                        let row = off + c;
                        let interior = js > 0 && js < ns - 1;
                        if !interior && c >= d {
                            out[row] = v[row];
                            continue;
                        }
                        let dvds = if interior {
                            let fwd = state.node_offset(js + 1, ix, iy) + c;
                            let bwd = state.node_offset(js - 1, ix, iy) + c;
                            (v[fwd] - v[bwd]) / (2.0 * ds)
                        } else if js == 0 {
                            let z1 = state.node_offset(1, ix, iy) + c;
                            let z2 = state.node_offset(2, ix, iy) + c;
                            (-3.0 * v[row] + 4.0 * v[z1] - v[z2]) / (2.0 * ds)
                        } else {
                            let z1 = state.node_offset(ns - 2, ix, iy) + c;
                            let z2 = state.node_offset(ns - 3, ix, iy) + c;
                            (3.0 * v[row] - 4.0 * v[z1] + v[z2]) / (2.0 * ds)
                        };
                        out[row] = dvds + spatial[js][c][gidx];
                    }
                }
            }
        }

        for chi in gauge_characters(nx, ny) {
            for c in 0..d {
                let mut row_coef = 0.0;
                let mut v_coef = 0.0;
                for iy in 0..ny {
                    for ix in 0..nx {
                        let row = state.node_offset(0, ix, iy) + c;
                        let w = chi[ix + nx * iy];
                        row_coef += w * out[row];
                        v_coef += w * v[row];
                    }
                }
                let adj = (v_coef - row_coef) / nxy as f64;
                for iy in 0..ny {
                    for ix in 0..nx {
                        let row = state.node_offset(0, ix, iy) + c;
                        out[row] += chi[ix + nx * iy] * adj;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Finite-difference Jacobian–vector product (any chart).
    pub fn jacobian_apply_fd(
        &self,
        state: &CylinderState,
        base_residual: &Vec64,
        v: &Vec64,
    ) -> Result<Vec64> {
        let vn = v.norm();
        if vn == 0.0 {
            return Ok(Vec64::zeros(v.len()));
        }
        let eps = 1e-7 * (1.0 + state.data.norm()) / vn;
        let mut pert = state.clone();
        pert.data += v * eps;
        let r = self.residual(&pert)?;
        Ok((r - base_residual) / eps)
    }

    /// Slice action profile 𝒜(s_j) along the cylinder.
    pub fn action_profile(&self, state: &CylinderState) -> Result<Vec<f64>> {
        (0..self.grid.ns)
            .map(|js| {
                let comps = self.slice_comps(state, js);
                SliceContext {
                    ham: &self.ham,
                    periodicity: &self.periodicity,
                    grid: &self.grid.torus,
                    s: self.grid.s(js),
                }
                .action_value(&comps)
            })
            .collect()
    }

    /// Evaluates both sides of the integrated energy identity.
    pub fn energy_identity(&self, state: &CylinderState) -> Result<EnergyIdentity> {
        let d = 2 * self.n();
        let (ns, nx, ny) = (self.grid.ns, self.grid.torus.nx, self.grid.torus.ny);
        let ds = self.grid.ds();
        let weights = self.grid.s_weights();
        let nxy = (nx * ny) as f64;
        let area = TAU * TAU;

        let actions = self.action_profile(state)?;
        let action_left = actions[0];
        let action_right = actions[ns - 1];

        let mut flow_energy = 0.0;
        let mut switching_work = 0.0;
        for js in 0..ns {
            let s = self.grid.s(js);
            let beta_prime = self.ham.profile.factor_prime(s);
            let qmap = TorusMap {
                chart: self.ham.chart,
                periodicity: self.periodicity.clone(),
                grid: self.grid.torus.clone(),
                comps: (0..d).map(|c| state.slice_component(c, js)).collect(),
            };
            let mut slice_flow = 0.0;
            let mut slice_work = 0.0;
            for iy in 0..ny {
                for ix in 0..nx {
                    let off = state.node_offset(js, ix, iy);
                    let mut dzds = Vec64::zeros(2 * d);
                    for c in 0..2 * d {
                        dzds[c] = if js > 0 && js < ns - 1 {
                            (state.data[state.node_offset(js + 1, ix, iy) + c]
                                - state.data[state.node_offset(js - 1, ix, iy) + c])
                                / (2.0 * ds)
                        } else if js == 0 {
                            (-3.0 * state.data[off + c]
                                + 4.0 * state.data[state.node_offset(1, ix, iy) + c]
                                - state.data[state.node_offset(2, ix, iy) + c])
                                / (2.0 * ds)
                        } else {
                            (3.0 * state.data[off + c]
                                - 4.0 * state.data[state.node_offset(ns - 2, ix, iy) + c]
                                + state.data[state.node_offset(ns - 3, ix, iy) + c])
                                / (2.0 * ds)
                        };
                    }
                    let q = qmap.value(ix, iy);
                    let p = Vec64::from_fn(d, |c, _| state.data[off + d + c]);
                    let gnorm_sq = if self.ham.chart.is_curved() {
                        let f = frame(&self.ham.chart, &q, &p)?;
                        (&f.metric * &dzds).dot(&dzds)
                    } else {
                        dzds.norm_squared()
                    };
                    slice_flow += gnorm_sq;
                    if beta_prime != 0.0 {
                        if let Some(pert) = &self.ham.perturbation {
                            slice_work += beta_prime
                                * pert
                                    .jet(self.grid.torus.x(ix), self.grid.torus.y(iy), &q, &p)
                                    .value;
                        }
                    }
                }
            }
            flow_energy += weights[js] * slice_flow * area / nxy;
            switching_work += weights[js] * slice_work * area / nxy;
        }

        let lhs = action_left - action_right;
        let rhs = flow_energy + switching_work;
        let scale = flow_energy.abs().max(lhs.abs()).max(1e-300);
        Ok(EnergyIdentity {
            action_left,
            action_right,
            flow_energy,
            switching_work,
            relative_defect: (lhs - rhs).abs() / scale,
        })
    }
}

/// A manufactured smooth state: Gaussian envelope η(s) = exp(−s²/2) times
/// fixed low trigonometric patterns, distinct per component.
pub fn gaussian_packet_state(grid: &CylinderGrid, n: usize, amp: f64) -> CylinderState {
    let mut st = CylinderState::zeros(n, grid.ns, grid.torus.nx, grid.torus.ny);
    for js in 0..grid.ns {
        let s = grid.s(js);
        let eta = (-0.5 * s * s).exp();
        for iy in 0..grid.torus.ny {
            for ix in 0..grid.torus.nx {
                let (x, y) = (grid.torus.x(ix), grid.torus.y(iy));
                let mut z = Vec64::zeros(4 * n);
                for j in 0..n {
                    let ph = j as f64 * 0.7;
                    z[2 * j] = amp * eta * (x + ph).cos() * y.cos();
                    z[2 * j + 1] = amp * eta * (x + ph).sin() * y.cos();
                    z[2 * n + 2 * j] = amp * eta * (x + ph).cos() * y.sin();
                    z[2 * n + 2 * j + 1] = amp * eta * (x + ph).sin() * y.sin();
                }
                st.set_node(js, ix, iy, &z);
            }
        }
    }
    st
}
