//! Covariant calculus on the total phase space: finite-difference
//! Christoffel symbols of the frame metric, covariant Hessians, and the
//! machine check of the second-order tension identity.
//!
//! A map Z(s,x,y) into phase space has tension
//!
//! ```text
//!   τ(Z)^c = Σ_μ ( ∂²_μ Z^c + Γ^c_{ab} ∂_μZ^a ∂_μZ^b ),   μ ∈ {s, x, y},
//! ```
//!
//! with Γ the Levi-Civita symbols of the frame metric G. Along solutions
//! of the first-order system this equals the six-term combination
//!
//! ```text
//!   τ(Z) = ∇²H[Z_s] − J ∇²H[Z_x] − K ∇²H[Z_y]
//!        + ∇(∂_s H) − J ∇(∂_x H) − K ∇(∂_y H),
//! ```
//!
//! where ∇²H is the covariant Hessian operator of the Hamiltonian in its
//! phase-space slot, ∇ the G-gradient, and the explicit partials hit only
//! the switching profile and the spatial dependence of the perturbation.
//! The structural input is that J and K are parallel for G; dropping the
//! three Hessian terms (the tempting shortcut) leaves order-one defects
//! even on the free flat problem, which the tests pin down.

use crate::chart::BaseChart;
use crate::hamiltonian::Hamiltonian;
use crate::hyperkahler::frame;
use crate::{Mat, Result, Vec64};

/// Packs (q, p) into a single phase-space coordinate vector.
pub fn pack_phase(q: &Vec64, p: &Vec64) -> Vec64 {
    let d = q.len();
    Vec64::from_fn(2 * d, |i, _| if i < d { q[i] } else { p[i - d] })
}

fn split_phase(z: &Vec64) -> (Vec64, Vec64) {
    let d = z.len() / 2;
    (
        Vec64::from_fn(d, |i, _| z[i]),
        Vec64::from_fn(d, |i, _| z[d + i]),
    )
}

fn metric_at(chart: &BaseChart, z: &Vec64) -> Result<Mat> {
    let (q, p) = split_phase(z);
    Ok(frame(chart, &q, &p)?.metric)
}

/// Central-difference Christoffel symbols Γ^c_{ab} of the frame metric,
/// returned as one matrix per upper index with (a,b) entries.
pub fn christoffel_fd(chart: &BaseChart, z: &Vec64, eta: f64) -> Result<Vec<Mat>> {
    let m = z.len();
    let (q, p) = split_phase(z);
    let f0 = frame(chart, &q, &p)?;
    let ginv = &f0.metric_inv;
    let mut dg: Vec<Mat> = Vec::with_capacity(m);
    for a in 0..m {
        let mut zp = z.clone();
        zp[a] += eta;
        let mut zm = z.clone();
        zm[a] -= eta;
        dg.push((metric_at(chart, &zp)? - metric_at(chart, &zm)?) / (2.0 * eta));
    }
    let mut gamma = vec![Mat::zeros(m, m); m];
    for c in 0..m {
        for a in 0..m {
            for b in a..m {
                let mut s = 0.0;
                for d in 0..m {
                    s += ginv[(c, d)] * (dg[a][(b, d)] + dg[b][(a, d)] - dg[d][(a, b)]);
                }
                let v = 0.5 * s;
                gamma[c][(a, b)] = v;
                gamma[c][(b, a)] = v;
            }
        }
    }
    Ok(gamma)
}

/// Contraction Γ(u, v)^c = Γ^c_{ab} u^a v^b.
pub fn christoffel_contract(gamma: &[Mat], u: &Vec64, v: &Vec64) -> Vec64 {
    Vec64::from_fn(gamma.len(), |c, _| (&gamma[c] * v).dot(u))
}

/// Covariant derivative of a (1,1) tensor field z ↦ T(z):
/// (∇_a T)^c_b = ∂_a T^c_b + Γ^c_{ad} T^d_b − Γ^d_{ab} T^c_d.
/// Returns the worst entry over all a.
fn parallel_defect<F>(tensor: F, gamma: &[Mat], z: &Vec64, eta: f64) -> Result<f64>
where
    F: Fn(&Vec64) -> Result<Mat>,
{
    let m = z.len();
    let t0 = tensor(z)?;
    let mut worst: f64 = 0.0;
    for a in 0..m {
        let mut zp = z.clone();
        zp[a] += eta;
        let mut zm = z.clone();
        zm[a] -= eta;
        let dt = (tensor(&zp)? - tensor(&zm)?) / (2.0 * eta);
        for c in 0..m {
            for b in 0..m {
                let mut v = dt[(c, b)];
                for d in 0..m {
                    v += gamma[c][(a, d)] * t0[(d, b)] - gamma[d][(a, b)] * t0[(c, d)];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Worst covariant-derivative entry of the two almost-complex structures
/// J and K over all directions — the parallelism that makes the tension
/// identity close on the curved chart.
pub fn complex_structure_parallel_defect(
    chart: &BaseChart,
    z: &Vec64,
    eta: f64,
) -> Result<(f64, f64)> {
    let gamma = christoffel_fd(chart, z, eta)?;
    let jd = parallel_defect(
        |w| {
            let (q, p) = split_phase(w);
            Ok(frame(chart, &q, &p)?.j_mat)
        },
        &gamma,
        z,
        eta,
    )?;
    let kd = parallel_defect(
        |w| {
            let (q, p) = split_phase(w);
            Ok(frame(chart, &q, &p)?.k_mat)
        },
        &gamma,
        z,
        eta,
    )?;
    Ok((jd, kd))
}

/// Plain z-Hessian of the Hamiltonian at frozen (s,x,y), by central
/// differences of the analytic differential.
fn hamiltonian_hessian_fd(
    ham: &Hamiltonian,
    s: f64,
    x: f64,
    y: f64,
    z: &Vec64,
    eta: f64,
) -> Mat {
    let m = z.len();
    let diff_at = |w: &Vec64| -> Vec64 {
        let (q, p) = split_phase(w);
        let (dq, dp) = ham.differential(s, x, y, &q, &p);
        pack_phase(&dq, &dp)
    };
    let mut h = Mat::zeros(m, m);
    for a in 0..m {
        let mut zp = z.clone();
        zp[a] += eta;
        let mut zm = z.clone();
        zm[a] -= eta;
        let col = (diff_at(&zp) - diff_at(&zm)) / (2.0 * eta);
        for b in 0..m {
            h[(b, a)] = col[b];
        }
    }
    // Symmetrize away the finite-difference skew part.
    0.5 * (&h + h.transpose())
}

/// Both sides of the tension identity at one point of a smooth map
/// Z(s,x,y), everything by finite differences of step `eta`.
#[derive(Debug, Clone)]
pub struct TensionIdentity {
    pub tension: Vec64,
    pub six_term: Vec64,
    /// The three-term truncation that ignores the rotated Hessians.
    pub truncated: Vec64,
    pub six_term_defect: f64,
    pub truncated_defect: f64,
}

pub fn tension_identity<Z>(
    ham: &Hamiltonian,
    map: Z,
    s: f64,
    x: f64,
    y: f64,
    eta: f64,
) -> Result<TensionIdentity>
where
    Z: Fn(f64, f64, f64) -> Vec64,
{
    let z0 = map(s, x, y);
    let m = z0.len();
    let gamma = christoffel_fd(&ham.chart, &z0, eta)?;
    let (q0, p0) = split_phase(&z0);
    let f = frame(&ham.chart, &q0, &p0)?;

    // First and second parameter derivatives of the map.
    let d1 = |mu: usize| -> Vec64 {
        let (sp, xp, yp) = match mu {
            0 => (s + eta, x, y),
            1 => (s, x + eta, y),
            _ => (s, x, y + eta),
        };
        let (sm, xm, ym) = match mu {
            0 => (s - eta, x, y),
            1 => (s, x - eta, y),
            _ => (s, x, y - eta),
        };
        (map(sp, xp, yp) - map(sm, xm, ym)) / (2.0 * eta)
    };
    let d2 = |mu: usize| -> Vec64 {
        let (sp, xp, yp) = match mu {
            0 => (s + eta, x, y),
            1 => (s, x + eta, y),
            _ => (s, x, y + eta),
        };
        let (sm, xm, ym) = match mu {
            0 => (s - eta, x, y),
            1 => (s, x - eta, y),
            _ => (s, x, y - eta),
        };
        (map(sp, xp, yp) - 2.0 * &z0 + map(sm, xm, ym)) / (eta * eta)
    };

    let mut tension = Vec64::zeros(m);
    let mut firsts = Vec::with_capacity(3);
    for mu in 0..3 {
        let v = d1(mu);
        tension += d2(mu) + christoffel_contract(&gamma, &v, &v);
        firsts.push(v);
    }

    // Covariant Hessian operator V ↦ G⁻¹ (Hess H − Γ·dH) V.
    let hess = hamiltonian_hessian_fd(ham, s, x, y, &z0, eta);
    let (dq, dp) = ham.differential(s, x, y, &q0, &p0);
    let dh = pack_phase(&dq, &dp);
    let mut cov_hess = hess;
    for c in 0..m {
        cov_hess -= &gamma[c] * dh[c];
    }
    let hess_op = &f.metric_inv * cov_hess;

    // G-gradients of the explicit partials ∂_sH, ∂_xH, ∂_yH.
    let explicit_grad = |which: usize| -> Vec64 {
        let scalar = |w: &Vec64| -> f64 {
            let (q, p) = split_phase(w);
            match which {
                0 => ham.ds_value(s, x, y, &q, &p),
                1 => ham.spatial_partials(s, x, y, &q, &p).0,
                _ => ham.spatial_partials(s, x, y, &q, &p).1,
            }
        };
        let mut grad = Vec64::zeros(m);
        for a in 0..m {
            let mut zp = z0.clone();
            zp[a] += eta;
            let mut zm = z0.clone();
            zm[a] -= eta;
            grad[a] = (scalar(&zp) - scalar(&zm)) / (2.0 * eta);
        }
        &f.metric_inv * grad
    };

    let hs = &hess_op * &firsts[0];
    let hx = &hess_op * &firsts[1];
    let hy = &hess_op * &firsts[2];
    let gs = explicit_grad(0);
    let gx = explicit_grad(1);
    let gy = explicit_grad(2);

    let six_term = &hs - &f.j_mat * &hx - &f.k_mat * &hy + &gs
        - &f.j_mat * &gx
        - &f.k_mat * &gy;
    let truncated = &hs + &gs - &f.j_mat * &gx - &f.k_mat * &gy;

    let scale = 1.0 + tension.amax();
    Ok(TensionIdentity {
        six_term_defect: (&tension - &six_term).amax() / scale,
        truncated_defect: (&tension - &truncated).amax() / scale,
        tension,
        six_term,
        truncated,
    })
}
