//! Newton–Krylov solution of the cylinder boundary value problem.
//!
//! The linear solves use restarted GMRES with right preconditioning. The
//! preconditioner inverts the free flat-chart operator exactly, mode by
//! mode: after complexifying each (base, fiber) pair and taking the 2D
//! transform on every slice, the operator block-diagonalizes into 2×2
//! complex block-tridiagonal systems along the axis (one per spatial
//! mode). Each mode system is factored once as a banded LU with partial
//! pivoting — pivoting matters, because the centered first-derivative
//! rows have zero diagonal in the base component and pivotless
//! elimination breaks down at the constant mode. Boundary rows use
//! first-order one-sided closures inside the preconditioner — only the
//! preconditioned operator needs to be invertible, and the discrepancy
//! against the second-order rows of the true Jacobian is confined to the
//! two end slices.
//!
//! The outer iteration is a damped Newton method with backtracking; on the
//! flat chart the Jacobian–vector products are analytic, on the curved
//! chart they fall back to one-sided finite differences of the residual
//! (Jacobian-free Newton–Krylov). A small continuation driver walks a
//! problem family parameter and warm-starts each stage.

use crate::field::CylinderState;
use crate::fueter::FueterProblem;
use crate::grid::{CylinderGrid, d1_wavenumber};
use crate::{Error, Result, Vec64};
use num_complex::Complex64;

/// Root-mean-square norm, the residual size Newton monitors.
pub fn rms(v: &Vec64) -> f64 {
    v.norm() / (v.len() as f64).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct GmresParams {
    /// Relative residual target.
    pub rel_tol: f64,
    /// Krylov subspace size per cycle.
    pub restart: usize,
    /// Maximum number of restart cycles.
    pub max_outer: usize,
}

impl Default for GmresParams {
    fn default() -> Self {
        GmresParams {
            rel_tol: 1e-10,
            restart: 60,
            max_outer: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub solution: Vec64,
    pub relative_residual: f64,
    pub matvecs: usize,
}

/// Restarted GMRES for A x = b with right preconditioning: the Krylov
/// space is built for A·M⁻¹ and the returned x already includes M⁻¹.
pub fn gmres<A, P>(
    mut apply: A,
    precond: P,
    b: &Vec64,
    params: &GmresParams,
) -> Result<GmresOutcome>
where
    A: FnMut(&Vec64) -> Result<Vec64>,
    P: Fn(&Vec64) -> Vec64,
{
    let n = b.len();
    let b_norm = b.norm();
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            solution: Vec64::zeros(n),
            relative_residual: 0.0,
            matvecs: 0,
        });
    }
    let mut x = Vec64::zeros(n);
    let mut matvecs = 0;
    let mut rel = 1.0;

    for _cycle in 0..params.max_outer {
        let r = if matvecs == 0 {
            b.clone()
        } else {
            b - apply(&precond(&x))?
        };
        let beta = r.norm();
        rel = beta / b_norm;
        if rel <= params.rel_tol {
            break;
        }
        let m = params.restart;
        let mut basis: Vec<Vec64> = Vec::with_capacity(m + 1);
        basis.push(&r / beta);
        // Column-major Hessenberg entries after Givens elimination.
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;

        for k in 0..m {
            let mut w = apply(&precond(&basis[k]))?;
            matvecs += 1;
            // Modified Gram–Schmidt.
            for (i, v) in basis.iter().enumerate() {
                let hik = w.dot(v);
                h[i][k] = hik;
                w -= v * hik;
            }
            let hnorm = w.norm();
            h[k + 1][k] = hnorm;
            // Apply the accumulated rotations to the new column.
            for i in 0..k {
                let t = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = t;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                return Err(Error::Linalg("GMRES breakdown: zero Hessenberg column"));
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / b_norm;
            if rel <= params.rel_tol || hnorm < 1e-300 {
                break;
            }
            basis.push(w / hnorm);
        }

        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for (j, yj) in y.iter().enumerate().skip(i + 1) {
                s -= h[i][j] * yj;
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            x += &basis[j] * *yj;
        }
        if rel <= params.rel_tol {
            break;
        }
    }

    Ok(GmresOutcome {
        solution: precond(&x),
        relative_residual: rel,
        matvecs,
    })
}

/// Complex banded LU with partial pivoting, band-storage as in LAPACK's
/// gbtrf: column j holds rows j−kl−ku … j+kl, the extra ku slots taking
/// pivot fill.
#[derive(Debug, Clone)]
struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major, ldab = 2·kl + ku + 1 entries per column.
    ab: Vec<Complex64>,
    piv: Vec<usize>,
}

impl BandedLu {
    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn at(&mut self, i: usize, j: usize) -> &mut Complex64 {
        let ri = self.kl + self.ku + i - j;
        let ldab = self.ldab();
        &mut self.ab[j * ldab + ri]
    }

    fn get(&self, i: usize, j: usize) -> Complex64 {
        self.ab[j * self.ldab() + (self.kl + self.ku + i - j)]
    }

    /// Builds from a list of (row, col, value) entries within the band.
    fn factor(
        n: usize,
        kl: usize,
        ku: usize,
        entries: &[(usize, usize, Complex64)],
    ) -> Result<Self> {
        let ldab = 2 * kl + ku + 1;
        let mut lu = BandedLu {
            n,
            kl,
            ku,
            ab: vec![Complex64::ZERO; n * ldab],
            piv: (0..n).collect(),
        };
        for &(i, j, v) in entries {
            *lu.at(i, j) += v;
        }
        for j in 0..n {
            let pmax = (j + kl).min(n - 1);
            let mut ip = j;
            let mut best = lu.get(j, j).norm_sqr();
            for i in j + 1..=pmax {
                let m = lu.get(i, j).norm_sqr();
                if m > best {
                    best = m;
                    ip = i;
                }
            }
            if best == 0.0 {
                return Err(Error::Linalg("singular mode system in preconditioner"));
            }
            lu.piv[j] = ip;
            let cmax = (j + kl + ku).min(n - 1);
            if ip != j {
                for c in j..=cmax {
                    let a = lu.get(ip, c);
                    let b = lu.get(j, c);
                    *lu.at(j, c) = a;
                    *lu.at(ip, c) = b;
                }
            }
            let pivval = lu.get(j, j);
            for i in j + 1..=pmax {
                let m = lu.get(i, j) / pivval;
                *lu.at(i, j) = m;
                for c in j + 1..=cmax {
                    let sub = m * lu.get(j, c);
                    *lu.at(i, c) -= sub;
                }
            }
        }
        Ok(lu)
    }

    fn solve(&self, b: &mut [Complex64]) {
        let n = self.n;
        for j in 0..n {
            b.swap(j, self.piv[j]);
            let bj = b[j];
            let pmax = (j + self.kl).min(n - 1);
            for i in j + 1..=pmax {
                let m = self.get(i, j);
                b[i] -= m * bj;
            }
        }
        for j in (0..n).rev() {
            let cmax = (j + self.kl + self.ku).min(n - 1);
            let mut s = b[j];
            for c in j + 1..=cmax {
                s -= self.get(j, c) * b[c];
            }
            b[j] = s / self.get(j, j);
        }
    }
}

/// Inverse of the free flat-chart linearization with first-order one-sided
/// boundary closures, block-diagonal over spatial modes.
#[derive(Debug, Clone)]
pub struct ModePreconditioner {
    n: usize,
    ns: usize,
    grid: CylinderGrid,
    /// One factored axis system per spatial mode.
    systems: Vec<BandedLu>,
}

impl ModePreconditioner {
    /// Assembles the per-mode axis system with unknowns interleaved
    /// (q_0, p_0, q_1, p_1, …); bandwidth two on both sides.
    fn mode_system(ns: usize, ds: f64, kappa: Complex64) -> Result<BandedLu> {
        let one = Complex64::ONE;
        let ik = Complex64::i() * kappa;
        let ikbar = Complex64::i() * kappa.conj();
        let inv_ds = Complex64::new(1.0 / ds, 0.0);
        let half = Complex64::new(0.5 / ds, 0.0);
        let e = ns - 1;
        let mut en: Vec<(usize, usize, Complex64)> = Vec::with_capacity(8 * ns);
        // Left base row: gauge for the constant mode, else one-sided ∂_s.
        if kappa == Complex64::ZERO {
            en.push((0, 0, one));
        } else {
            en.push((0, 0, -inv_ds));
            en.push((0, 1, -ik));
            en.push((0, 2, inv_ds));
        }
        // Fiber Dirichlet rows at both ends.
        en.push((1, 1, one));
        en.push((2 * e + 1, 2 * e + 1, one));
        // Interior rows: central ∂_s − M_κ.
        for j in 1..e {
            let (q, p) = (2 * j, 2 * j + 1);
            en.push((q, q - 2, -half));
            en.push((q, q + 2, half));
            en.push((q, p, -ik));
            en.push((p, p - 2, -half));
            en.push((p, p + 2, half));
            en.push((p, q, ikbar));
            en.push((p, p, -one));
        }
        // Right base row: one-sided ∂_s.
        en.push((2 * e, 2 * e, inv_ds));
        en.push((2 * e, 2 * e - 2, -inv_ds));
        en.push((2 * e, 2 * e + 1, -ik));
        BandedLu::factor(2 * ns, 2, 2, &en)
    }

    pub fn new(grid: &CylinderGrid, n: usize) -> Result<Self> {
        let (ns, nx, ny) = (grid.ns, grid.torus.nx, grid.torus.ny);
        let ds = grid.ds();
        let mut systems = Vec::with_capacity(nx * ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let kappa =
                    Complex64::new(d1_wavenumber(ix, nx), d1_wavenumber(iy, ny));
                systems.push(Self::mode_system(ns, ds, kappa)?);
            }
        }
        Ok(ModePreconditioner {
            n,
            ns,
            grid: grid.clone(),
            systems,
        })
    }

    /// Applies the factored inverse to a residual-shaped vector.
    pub fn apply(&self, r: &Vec64) -> Vec64 {
        let (ns, nx, ny) = (self.ns, self.grid.torus.nx, self.grid.torus.ny);
        let nxy = nx * ny;
        let d = 2 * self.n;
        let mut out = Vec64::zeros(r.len());
        let node = |js: usize, ix: usize, iy: usize| 2 * d * (ix + nx * (iy + ny * js));

        // Mode-major workspace: the axis line of mode g starts at 2·ns·g.
        let mut lines = vec![Complex64::ZERO; 2 * ns * nxy];
        let mut qbuf = vec![Complex64::ZERO; nxy];
        let mut pbuf = vec![Complex64::ZERO; nxy];

        for pair in 0..self.n {
            for js in 0..ns {
                for iy in 0..ny {
                    for ix in 0..nx {
                        let off = node(js, ix, iy);
                        let g = ix + nx * iy;
                        qbuf[g] =
                            Complex64::new(r[off + 2 * pair], r[off + 2 * pair + 1]);
                        pbuf[g] = Complex64::new(
                            r[off + d + 2 * pair],
                            r[off + d + 2 * pair + 1],
                        );
                    }
                }
                self.grid.torus.fft2_complex(&mut qbuf);
                self.grid.torus.fft2_complex(&mut pbuf);
                for g in 0..nxy {
                    lines[2 * ns * g + 2 * js] = qbuf[g];
                    lines[2 * ns * g + 2 * js + 1] = pbuf[g];
                }
            }

            for (g, sys) in self.systems.iter().enumerate() {
                sys.solve(&mut lines[2 * ns * g..2 * ns * (g + 1)]);
            }

            let scale = 1.0 / nxy as f64;
            for js in 0..ns {
                for g in 0..nxy {
                    qbuf[g] = lines[2 * ns * g + 2 * js];
                    pbuf[g] = lines[2 * ns * g + 2 * js + 1];
                }
                self.grid.torus.ifft2_complex(&mut qbuf);
                self.grid.torus.ifft2_complex(&mut pbuf);
                for iy in 0..ny {
                    for ix in 0..nx {
                        let off = node(js, ix, iy);
                        let g = ix + nx * iy;
                        out[off + 2 * pair] = qbuf[g].re * scale;
                        out[off + 2 * pair + 1] = qbuf[g].im * scale;
                        out[off + d + 2 * pair] = pbuf[g].re * scale;
                        out[off + d + 2 * pair + 1] = pbuf[g].im * scale;
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonParams {
    /// Convergence target on the residual RMS.
    pub residual_tol: f64,
    pub max_iterations: usize,
    pub gmres: GmresParams,
    /// Halvings allowed in the backtracking line search.
    pub max_backtracks: u32,
}

impl Default for NewtonParams {
    fn default() -> Self {
        NewtonParams {
            residual_tol: 1e-11,
            max_iterations: 25,
            gmres: GmresParams::default(),
            max_backtracks: 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonHistory {
    /// Residual RMS before each iteration and after the last.
    pub rms_history: Vec<f64>,
    pub matvecs: usize,
    pub converged: bool,
}

/// Damped Newton iteration on the boundary value problem. The state is
/// updated in place; the history reports the RMS trajectory.
pub fn newton_solve(
    prob: &FueterProblem,
    state: &mut CylinderState,
    params: &NewtonParams,
) -> Result<NewtonHistory> {
    let precond = ModePreconditioner::new(&prob.grid, prob.n())?;
    let flat = !prob.ham.chart.is_curved();
    let mut history = NewtonHistory {
        rms_history: Vec::new(),
        matvecs: 0,
        converged: false,
    };

    let mut residual = prob.residual(state)?;
    let mut res_rms = rms(&residual);
    history.rms_history.push(res_rms);

    for _ in 0..params.max_iterations {
        if res_rms <= params.residual_tol {
            history.converged = true;
            return Ok(history);
        }
        let outcome = {
            let base = &residual;
            let apply = |v: &Vec64| -> Result<Vec64> {
                if flat {
                    prob.jacobian_apply_flat(state, v)
                } else {
                    prob.jacobian_apply_fd(state, base, v)
                }
            };
            gmres(apply, |v| precond.apply(v), &residual, &params.gmres)?
        };
        history.matvecs += outcome.matvecs;

        // Backtracking on the RMS with a modest decrease requirement.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=params.max_backtracks {
            let mut trial = state.clone();
            trial.data -= &outcome.solution * lambda;
            match prob.residual(&trial) {
                Ok(r) => {
                    let t_rms = rms(&r);
                    if t_rms <= (1.0 - 1e-4 * lambda) * res_rms {
                        *state = trial;
                        residual = r;
                        res_rms = t_rms;
                        accepted = true;
                        break;
                    }
                }
                // A trial step outside the chart just shortens the step.
                Err(Error::ChartExit { .. }) | Err(Error::MetricDegeneration { .. }) => {}
                Err(e) => return Err(e),
            }
            lambda *= 0.5;
        }
        history.rms_history.push(res_rms);
        if !accepted {
            return Ok(history);
        }
    }
    history.converged = res_rms <= params.residual_tol;
    Ok(history)
}

/// Walks a problem family parameter, warm-starting each stage from the
/// previous solution. Fails fast if any stage stalls.
pub fn continuation<F>(
    make: F,
    thetas: &[f64],
    mut state: CylinderState,
    params: &NewtonParams,
) -> Result<(CylinderState, Vec<NewtonHistory>)>
where
    F: Fn(f64) -> FueterProblem,
{
    let mut histories = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let prob = make(theta);
        let hist = newton_solve(&prob, &mut state, params)?;
        if !hist.converged {
            let last = *hist.rms_history.last().unwrap_or(&f64::NAN);
            return Err(Error::NoConvergence {
                what: "continuation stage",
                residual: last,
                iterations: hist.rms_history.len(),
            });
        }
        histories.push(hist);
    }
    Ok((state, histories))
}
