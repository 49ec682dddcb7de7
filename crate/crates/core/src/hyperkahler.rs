//! Hyperkähler frame assembly on the cotangent bundle.
//!
//! Over a base chart this module builds, at a point (q,p) of `T*M`, the
//! feature metric
//!
//! ```text
//!   G = g(A_ξ ·H, ·H) + g(A_ξ⁻¹ ·V, ·V),      A_ξ = Id + i∘R_{iφξ, φξ},
//! ```
//!
//! where ξ = g⁻¹p is the metric dual of the fiber covector, φ is evaluated by
//! the stable kernel [`crate::kernels::phi`] at the span eigenvalue −4t of
//! B = i∘R_{iξ,ξ}, and t = |ξ|²_g. The horizontal/vertical splitting enters
//! chart coordinates through the lift matrix `T = [[I,0],[−C,I]]` with
//! C_{ba} = Γ^c_{ab} p_c, so `G_chart = Tᵀ diag(gA, A⁻¹g⁻¹) T`.
//!
//! The Darboux symplectic pair is constant in chart coordinates:
//!
//! ```text
//!   Ω₁ = [[0,−I],[I,0]],   Ω₂ = −Ω₁·𝕀,   𝕀 = diag(i_b, −i_b),
//! ```
//!
//! and the remaining structures are recovered as J = G⁻¹Ω₁, K = G⁻¹Ω₂,
//! ω₀ = G·𝕀. On the span of {ξ, iξ} the operator A_ξ has eigenvalue
//! √(1−4t); on the g-orthogonal complement (1+√(1−4t))/2, so the assembly
//! degenerates as |ξ|_g → δ₀ = ½ and is guarded at 0.95·δ₀.
//!
//! On the flat chart the construction collapses to the Sasaki (standard flat)
//! metric with A = Id and C = 0.

use crate::chart::{
    complex_structure_apply, complex_structure_matrix, curvature_apply_with, BaseChart,
};
use crate::kernels::phi;
use crate::{Error, Mat, Result, Vec64, DELTA0};

/// Guard fraction of δ₀ beyond which frame assembly refuses to proceed.
pub const GUARD_FRACTION: f64 = 0.95;

/// Assembled pointwise hyperkähler frame at (q,p).
#[derive(Debug, Clone)]
pub struct Frame {
    /// Complex base dimension.
    pub n: usize,
    /// Squared fiber norm t = |ξ|²_g.
    pub t: f64,
    /// The operator A_ξ on the base tangent space (2n×2n).
    pub a_op: Mat,
    /// Base metric g at q.
    pub base_metric: Mat,
    /// Closed-form inverse of the base metric.
    pub base_metric_inv: Mat,
    /// Horizontal/vertical lift matrix T (4n×4n).
    pub lift: Mat,
    /// The feature metric G in chart coordinates (4n×4n).
    pub metric: Mat,
    /// G⁻¹ assembled from the factored form T⁻¹ D⁻¹ T⁻ᵀ.
    pub metric_inv: Mat,
    /// Constant symplectic form ω₁ (dp∧dq pairing).
    pub omega1: Mat,
    /// Constant symplectic form ω₂ = −ω₁(·, 𝕀·).
    pub omega2: Mat,
    /// Complex structure 𝕀 = diag(i_b, −i_b).
    pub i_mat: Mat,
    /// Complex structure J = G⁻¹Ω₁.
    pub j_mat: Mat,
    /// Complex structure K = G⁻¹Ω₂.
    pub k_mat: Mat,
    /// Kähler form of 𝕀: ω₀ = G·𝕀 (the only non-constant form of the triple).
    pub omega0: Mat,
}

fn try_inverse(m: &Mat, what: &'static str) -> Result<Mat> {
    m.clone()
        .try_inverse()
        .ok_or(Error::Linalg(what))
}

/// Fiber norm |ξ|_g of the covector p at q, with ξ = g⁻¹p.
pub fn xi_norm(chart: &BaseChart, q: &Vec64, p: &Vec64) -> f64 {
    let xi = chart.metric_inverse(q) * p;
    // |ξ|²_g = ⟨p, ξ⟩.
    p.dot(&xi).max(0.0).sqrt()
}

/// The operator A_ξ and the squared fiber norm t at (q,p).
///
/// Uses the closed form η = φ(−4t)·ξ (valid because ξ spans a B-eigenspace
/// with eigenvalue −4t), so no spectral decomposition is needed. Fails with
/// [`Error::MetricDegeneration`] once |ξ|_g ≥ 0.95·δ₀ on the curved chart.
pub fn a_xi(chart: &BaseChart, q: &Vec64, p: &Vec64) -> Result<(Mat, f64)> {
    let d = chart.dim();
    if p.len() != d {
        return Err(Error::Dimension {
            what: "fiber covector",
            expected: d,
            got: p.len(),
        });
    }
    chart.check_point(q, 0.0)?;
    let ginv = chart.metric_inverse(q);
    let xi = &ginv * p;
    let t = p.dot(&xi);
    if !chart.is_curved() {
        return Ok((Mat::identity(d, d), t));
    }
    let guard = GUARD_FRACTION * DELTA0;
    if t.sqrt() >= guard {
        return Err(Error::MetricDegeneration {
            xi_norm: t.sqrt(),
            guard,
            delta0: DELTA0,
        });
    }
    let phival = phi(-4.0 * t).ok_or(Error::Domain {
        what: "phi argument below −1 in frame assembly",
        value: -4.0 * t,
    })?;
    let eta = &xi * phival;
    let g = chart.metric(q);
    let mut a = Mat::identity(d, d);
    for col in 0..d {
        let e = crate::chart::basis_vector(d, col);
        let ieta = complex_structure_apply(&eta);
        let r = curvature_apply_with(&g, &ieta, &eta, &e);
        let ir = complex_structure_apply(&r);
        for row in 0..d {
            a[(row, col)] += ir[row];
        }
    }
    Ok((a, t))
}

/// Spectral-calculus route to A_ξ: build B = i∘R_{iξ,ξ} as a matrix,
/// diagonalize it in a g-orthonormal frame, apply φ through the spectrum.
/// Slower than [`a_xi`] but makes no use of the eigenstructure shortcut;
/// the two routes must agree.
pub fn a_xi_spectral(chart: &BaseChart, q: &Vec64, p: &Vec64) -> Result<Mat> {
    let d = chart.dim();
    if !chart.is_curved() {
        return Ok(Mat::identity(d, d));
    }
    let g = chart.metric(q);
    let ginv = chart.metric_inverse(q);
    let xi = &ginv * p;
    let mut b = Mat::zeros(d, d);
    for col in 0..d {
        let e = crate::chart::basis_vector(d, col);
        let ixi = complex_structure_apply(&xi);
        let r = curvature_apply_with(&g, &ixi, &xi, &e);
        let ir = complex_structure_apply(&r);
        for row in 0..d {
            b[(row, col)] = ir[row];
        }
    }
    let chol = nalgebra::linalg::Cholesky::new(g.clone()).ok_or(Error::Linalg(
        "base metric lost positivity in spectral frame route",
    ))?;
    let l = chol.l();
    // b_sym = Lᵀ B L⁻ᵀ: solve L Xᵀ = Bᵀ for Xᵀ = L⁻¹Bᵀ, then b_sym = Lᵀ X.
    let xt = l
        .solve_lower_triangular(&b.transpose())
        .ok_or(Error::Linalg("triangular solve failed"))?;
    let b_sym = symmetrize(&(l.transpose() * xt.transpose()));
    let eig = nalgebra::linalg::SymmetricEigen::new(b_sym);
    let mut phi_diag = Mat::zeros(d, d);
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        phi_diag[(i, i)] = phi(lam).ok_or(Error::Domain {
            what: "phi argument below −1 in spectral route",
            value: lam,
        })?;
    }
    // φ(B) = L⁻ᵀ V φ(Λ) Vᵀ Lᵀ
    let v = &eig.eigenvectors;
    let core = v * phi_diag * v.transpose() * l.transpose();
    let phib = l
        .transpose()
        .solve_upper_triangular(&core)
        .ok_or(Error::Linalg("triangular solve failed"))?;
    let eta = &phib * xi;
    let mut a = Mat::identity(d, d);
    for col in 0..d {
        let e = crate::chart::basis_vector(d, col);
        let ieta = complex_structure_apply(&eta);
        let r = curvature_apply_with(&g, &ieta, &eta, &e);
        let ir = complex_structure_apply(&r);
        for row in 0..d {
            a[(row, col)] += ir[row];
        }
    }
    Ok(a)
}

/// Eigenvalues of a g-self-adjoint operator, via Cholesky conjugation to an
/// ordinary symmetric problem. Returned ascending.
pub fn g_symmetric_eigenvalues(g: &Mat, m: &Mat) -> Result<Vec64> {
    let chol = nalgebra::linalg::Cholesky::new(g.clone())
        .ok_or(Error::Linalg("metric not positive definite"))?;
    let l = chol.l();
    let xt = l
        .solve_lower_triangular(&m.transpose())
        .ok_or(Error::Linalg("triangular solve failed"))?;
    let m_sym = symmetrize(&(l.transpose() * xt.transpose()));
    let mut vals: Vec<f64> = nalgebra::linalg::SymmetricEigen::new(m_sym)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(Vec64::from_vec(vals))
}

/// (M + Mᵀ)/2.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Lift-correction matrix C with C_{ba} = Γ^c_{ab} p_c (symmetric).
pub fn c_matrix(chart: &BaseChart, q: &Vec64, p: &Vec64) -> Mat {
    let d = chart.dim();
    let mut c = Mat::zeros(d, d);
    for a in 0..d {
        let e = crate::chart::basis_vector(d, a);
        let col = chart.gamma_covector(q, &e, p);
        for b in 0..d {
            c[(b, a)] = col[b];
        }
    }
    c
}

/// Constant symplectic matrix Ω₁ of the Darboux pairing dp∧dq.
pub fn omega1_matrix(n: usize) -> Mat {
    let d = 2 * n;
    let mut o = Mat::zeros(2 * d, 2 * d);
    for a in 0..d {
        o[(a, d + a)] = -1.0;
        o[(d + a, a)] = 1.0;
    }
    o
}

/// Complex structure 𝕀 = diag(i_b, −i_b) on chart coordinates of T*M.
pub fn i_matrix(n: usize) -> Mat {
    let d = 2 * n;
    let ib = complex_structure_matrix(n);
    let mut m = Mat::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(&ib);
    m.view_mut((d, d), (d, d)).copy_from(&(-&ib));
    m
}

/// Constant symplectic matrix Ω₂ = −Ω₁·𝕀.
pub fn omega2_matrix(n: usize) -> Mat {
    -omega1_matrix(n) * i_matrix(n)
}

/// Assembles the full frame at (q,p). See the module docs for the formulas.
pub fn frame(chart: &BaseChart, q: &Vec64, p: &Vec64) -> Result<Frame> {
    let n = chart.n();
    let d = 2 * n;
    let (a_op, t) = a_xi(chart, q, p)?;
    let g = chart.metric(q);
    let ginv = chart.metric_inverse(q);
    let a_inv = try_inverse(&a_op, "A_ξ not invertible")?;

    let c = c_matrix(chart, q, p);
    let mut lift = Mat::identity(2 * d, 2 * d);
    lift.view_mut((d, 0), (d, d)).copy_from(&(-&c));

    let dh = symmetrize(&(&g * &a_op));
    let dv = symmetrize(&(&a_inv * &ginv));
    let mut dmat = Mat::zeros(2 * d, 2 * d);
    dmat.view_mut((0, 0), (d, d)).copy_from(&dh);
    dmat.view_mut((d, d), (d, d)).copy_from(&dv);

    let metric = symmetrize(&(lift.transpose() * &dmat * &lift));

    // G⁻¹ = T⁻¹ D⁻¹ T⁻ᵀ; invert the stored (symmetrized) blocks directly so
    // G·G⁻¹ = Id holds to roundoff rather than up to the symmetrization.
    let mut lift_inv = Mat::identity(2 * d, 2 * d);
    lift_inv.view_mut((d, 0), (d, d)).copy_from(&c);
    let mut dinv = Mat::zeros(2 * d, 2 * d);
    let dinv_h = try_inverse(&dh, "horizontal metric block not invertible")?;
    let dinv_v = try_inverse(&dv, "vertical metric block not invertible")?;
    dinv.view_mut((0, 0), (d, d)).copy_from(&dinv_h);
    dinv.view_mut((d, d), (d, d)).copy_from(&dinv_v);
    let metric_inv = symmetrize(&(&lift_inv * &dinv * lift_inv.transpose()));

    let omega1 = omega1_matrix(n);
    let i_mat = i_matrix(n);
    let omega2 = omega2_matrix(n);
    let j_mat = &metric_inv * &omega1;
    let k_mat = &metric_inv * &omega2;
    let omega0 = &metric * &i_mat;

    Ok(Frame {
        n,
        t,
        a_op,
        base_metric: g,
        base_metric_inv: ginv,
        lift,
        metric,
        metric_inv,
        omega1,
        omega2,
        i_mat,
        j_mat,
        k_mat,
        omega0,
    })
}

/// Sasaki comparison metric: same lift matrix, fiberwise blocks g ⊕ g⁻¹
/// (the p → 0 limit of the feature metric).
pub fn sasaki_metric(chart: &BaseChart, q: &Vec64, p: &Vec64) -> Mat {
    let d = chart.dim();
    let g = chart.metric(q);
    let ginv = chart.metric_inverse(q);
    let c = c_matrix(chart, q, p);
    let mut lift = Mat::identity(2 * d, 2 * d);
    lift.view_mut((d, 0), (d, d)).copy_from(&(-&c));
    let mut dmat = Mat::zeros(2 * d, 2 * d);
    dmat.view_mut((0, 0), (d, d)).copy_from(&g);
    dmat.view_mut((d, d), (d, d)).copy_from(&ginv);
    symmetrize(&(lift.transpose() * dmat * lift))
}

impl Frame {
    /// Total chart dimension 4n.
    pub fn dim(&self) -> usize {
        4 * self.n
    }

    /// Largest entry-wise defect among the quaternion relations
    /// 𝕀² = J² = K² = −Id, 𝕀J = K, JK = 𝕀, K𝕀 = J.
    pub fn quaternion_defect(&self) -> f64 {
        let id = Mat::identity(self.dim(), self.dim());
        let mut worst: f64 = 0.0;
        let mut upd = |m: Mat| {
            worst = worst.max(m.abs().max());
        };
        upd(&self.i_mat * &self.i_mat + &id);
        upd(&self.j_mat * &self.j_mat + &id);
        upd(&self.k_mat * &self.k_mat + &id);
        upd(&self.i_mat * &self.j_mat - &self.k_mat);
        upd(&self.j_mat * &self.k_mat - &self.i_mat);
        upd(&self.k_mat * &self.i_mat - &self.j_mat);
        worst
    }

    /// Largest defect of metric compatibility G(S·, S·) = G for S ∈ {𝕀,J,K}.
    pub fn compatibility_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in [&self.i_mat, &self.j_mat, &self.k_mat] {
            let m = s.transpose() * &self.metric * s - &self.metric;
            worst = worst.max(m.abs().max());
        }
        worst
    }

    /// ω₂ recovered through ω₂ = −ω₁(·, 𝕀·); must equal the constant Ω₂.
    pub fn omega2_recovery_defect(&self) -> f64 {
        (-&self.omega1 * &self.i_mat - &self.omega2).abs().max()
    }
}

/// Largest cyclic-sum defect of dω₀ at (q,p) over all coordinate triples,
/// with central differences of step `eta`. Second-order small for the
/// genuinely Kähler assembly.
pub fn domega0_defect_fd(chart: &BaseChart, q: &Vec64, p: &Vec64, eta: f64) -> Result<f64> {
    let d = chart.dim();
    let nt = 2 * d;
    let omega_at = |z: &Vec64| -> Result<Mat> {
        let qq = z.rows(0, d).into_owned();
        let pp = z.rows(d, d).into_owned();
        Ok(frame(chart, &qq, &pp)?.omega0)
    };
    let mut z0 = Vec64::zeros(nt);
    z0.rows_mut(0, d).copy_from(q);
    z0.rows_mut(d, d).copy_from(p);
    let mut grads: Vec<Mat> = Vec::with_capacity(nt);
    for a in 0..nt {
        let mut zp = z0.clone();
        zp[a] += eta;
        let mut zm = z0.clone();
        zm[a] -= eta;
        grads.push((omega_at(&zp)? - omega_at(&zm)?) / (2.0 * eta));
    }
    let mut worst: f64 = 0.0;
    for a in 0..nt {
        for b in (a + 1)..nt {
            for c in (b + 1)..nt {
                let s = grads[a][(b, c)] + grads[b][(c, a)] + grads[c][(a, b)];
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}
