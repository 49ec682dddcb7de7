//! Base charts and their Kähler geometry.
//!
//! Two charts cover every experiment: the flat torus `ℝ²ⁿ/(2πℤ)²ⁿ` and the
//! unit-ball chart of complex hyperbolic space `ℂHⁿ` with the Bergman-type
//! metric of constant holomorphic sectional curvature −4,
//!
//! ```text
//!   h_{jk̄} = ½ [ δ_{jk}/σ + q̄^j q^k/σ² ],   σ = 1 − |q|²,
//! ```
//!
//! whose Christoffel contraction and curvature tensor both close:
//!
//! ```text
//!   Γ(u,v)        = ( (q̄·u) v + (q̄·v) u ) / σ,
//!   R_{X,Y} v     = g(Y,v)X − g(X,v)Y + g(iY,v)iX − g(iX,v)iY + 2g(X,iY)iv.
//! ```
//!
//! (Curvature in the sign convention R_{X,Y} = ∇_{[X,Y]} − [∇_X, ∇_Y].)
//! At n = 1 the metric reduces to the conformal disk factor 1/σ².
//!
//! Real chart coordinates interleave real and imaginary parts per complex
//! coordinate: `(q¹₁, q¹₂, …, qⁿ₁, qⁿ₂)`. Covectors pack as `P_j = p¹_j − i p²_j`
//! so that the pairing is ⟨p,v⟩ = Re Σ P_j V^j.

use crate::{C64, Error, Mat, Result, Vec64};
use nalgebra::DVector;

/// Base manifold chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseChart {
    /// Flat torus ℝ²ⁿ/(2πℤ)²ⁿ with the Euclidean metric.
    FlatTorus { n: usize },
    /// Unit-ball chart of ℂHⁿ, Bergman-type metric, hol. sect. curvature −4.
    ComplexHyperbolic { n: usize },
}

impl BaseChart {
    /// Complex dimension of the base.
    pub fn n(&self) -> usize {
        match *self {
            BaseChart::FlatTorus { n } | BaseChart::ComplexHyperbolic { n } => n,
        }
    }

    /// Real dimension 2n of the base chart.
    pub fn dim(&self) -> usize {
        2 * self.n()
    }

    /// Is this the curved chart?
    pub fn is_curved(&self) -> bool {
        matches!(self, BaseChart::ComplexHyperbolic { .. })
    }

    /// Chart-domain margin: `1 − |q|` on the ball, `+∞` on the torus.
    pub fn margin(&self, q: &Vec64) -> f64 {
        match self {
            BaseChart::FlatTorus { .. } => f64::INFINITY,
            BaseChart::ComplexHyperbolic { .. } => 1.0 - q.norm(),
        }
    }

    /// Validates that `q` lies inside the chart with the given margin.
    pub fn check_point(&self, q: &Vec64, margin: f64) -> Result<()> {
        if q.len() != self.dim() {
            return Err(Error::Dimension {
                what: "base point",
                expected: self.dim(),
                got: q.len(),
            });
        }
        if self.margin(q) <= margin {
            return Err(Error::ChartExit {
                norm: q.norm(),
                margin,
            });
        }
        Ok(())
    }

    /// σ(q) = 1 − |q|² (1 on the flat chart).
    pub fn sigma(&self, q: &Vec64) -> f64 {
        match self {
            BaseChart::FlatTorus { .. } => 1.0,
            BaseChart::ComplexHyperbolic { .. } => 1.0 - q.norm_squared(),
        }
    }

    /// Hermitian metric matrix `H_{jk} = h_{jk̄}` at `q`.
    pub fn hermitian_metric(&self, q: &Vec64) -> nalgebra::DMatrix<C64> {
        let n = self.n();
        match self {
            BaseChart::FlatTorus { .. } => {
                nalgebra::DMatrix::from_diagonal_element(n, n, C64::new(0.5, 0.0))
            }
            BaseChart::ComplexHyperbolic { .. } => {
                let z = pack_vector(q);
                let s = self.sigma(q);
                let mut h = nalgebra::DMatrix::zeros(n, n);
                for j in 0..n {
                    for k in 0..n {
                        let mut v = z[j].conj() * z[k] / (s * s);
                        if j == k {
                            v += C64::new(1.0 / s, 0.0);
                        }
                        h[(j, k)] = 0.5 * v;
                    }
                }
                h
            }
        }
    }

    /// Closed-form inverse of [`Self::hermitian_metric`]:
    /// `H⁻¹ = 2σ (I − q̄ qᵀ)` on the ball (Sherman–Morrison with σ + |q|² = 1).
    pub fn hermitian_metric_inverse(&self, q: &Vec64) -> nalgebra::DMatrix<C64> {
        let n = self.n();
        match self {
            BaseChart::FlatTorus { .. } => {
                nalgebra::DMatrix::from_diagonal_element(n, n, C64::new(2.0, 0.0))
            }
            BaseChart::ComplexHyperbolic { .. } => {
                let z = pack_vector(q);
                let s = self.sigma(q);
                let mut hinv = nalgebra::DMatrix::zeros(n, n);
                for j in 0..n {
                    for k in 0..n {
                        let mut v = -z[j].conj() * z[k];
                        if j == k {
                            v += C64::new(1.0, 0.0);
                        }
                        hinv[(j, k)] = 2.0 * s * v;
                    }
                }
                hinv
            }
        }
    }

    /// Real 2n×2n metric at `q` (identity on the flat torus).
    pub fn metric(&self, q: &Vec64) -> Mat {
        realify_hermitian(&self.hermitian_metric(q))
    }

    /// Real 2n×2n inverse metric at `q` (closed form).
    pub fn metric_inverse(&self, q: &Vec64) -> Mat {
        // g = 2·realify(H̄) ⟹ g⁻¹ = ½·realify(conj(H⁻¹)); realify_hermitian
        // carries the factor 2, so divide by 4.
        realify_hermitian(&self.hermitian_metric_inverse(q)) / 4.0
    }

    /// Christoffel contraction on vectors, `Γ(u,v)^l = Γ^l_{jk} u^k v^j`,
    /// realified. Symmetric in (u,v); zero on the flat chart.
    pub fn gamma_vector(&self, q: &Vec64, u: &Vec64, v: &Vec64) -> Vec64 {
        match self {
            BaseChart::FlatTorus { .. } => Vec64::zeros(self.dim()),
            BaseChart::ComplexHyperbolic { .. } => {
                let z = pack_vector(q);
                let zu = pack_vector(u);
                let zv = pack_vector(v);
                let s = self.sigma(q);
                let qu: C64 = z.iter().zip(&zu).map(|(a, b)| a.conj() * b).sum();
                let qv: C64 = z.iter().zip(&zv).map(|(a, b)| a.conj() * b).sum();
                let w: Vec<C64> = zv
                    .iter()
                    .zip(&zu)
                    .map(|(vj, uj)| (qu * vj + qv * uj) / s)
                    .collect();
                unpack_vector(&w)
            }
        }
    }

    /// Christoffel contraction on covectors: the transport correction
    /// `w_l = Γ^m_{kl} u^k P_m` with `P_j = p¹_j − i p²_j`, realified back to
    /// the covector packing. Satisfies the duality
    /// ⟨gamma_covector(u,p), v⟩ = ⟨p, gamma_vector(u,v)⟩.
    pub fn gamma_covector(&self, q: &Vec64, u: &Vec64, p: &Vec64) -> Vec64 {
        match self {
            BaseChart::FlatTorus { .. } => Vec64::zeros(self.dim()),
            BaseChart::ComplexHyperbolic { .. } => {
                let z = pack_vector(q);
                let zu = pack_vector(u);
                let pp = pack_covector(p);
                let s = self.sigma(q);
                let qu: C64 = z.iter().zip(&zu).map(|(a, b)| a.conj() * b).sum();
                let up: C64 = zu.iter().zip(&pp).map(|(a, b)| a * b).sum();
                let w: Vec<C64> = z
                    .iter()
                    .zip(&pp)
                    .map(|(zl, pl)| (zl.conj() * up + qu * pl) / s)
                    .collect();
                unpack_covector(&w)
            }
        }
    }

    /// Curvature applied to vectors in the sign convention
    /// R_{X,Y} = ∇_{[X,Y]} − [∇_X, ∇_Y]: the constant-holomorphic-curvature
    /// tensor on the ball, zero on the flat torus.
    pub fn curvature_apply(&self, q: &Vec64, x: &Vec64, y: &Vec64, v: &Vec64) -> Vec64 {
        match self {
            BaseChart::FlatTorus { .. } => Vec64::zeros(self.dim()),
            BaseChart::ComplexHyperbolic { .. } => {
                let g = self.metric(q);
                curvature_apply_with(&g, x, y, v)
            }
        }
    }
}

/// The five-term constant-curvature tensor for a given Hermitian real metric:
/// `R_{X,Y}v = g(Y,v)X − g(X,v)Y + g(iY,v)iX − g(iX,v)iY + 2g(X,iY)iv`.
pub fn curvature_apply_with(g: &Mat, x: &Vec64, y: &Vec64, v: &Vec64) -> Vec64 {
    let gy = g * y;
    let gx = g * x;
    let ix = complex_structure_apply(x);
    let iy = complex_structure_apply(y);
    let iv = complex_structure_apply(v);
    let giy = g * &iy;
    let gyv = gy.dot(v);
    let gxv = gx.dot(v);
    let giyv = giy.dot(v);
    let gixv = (g * &ix).dot(v);
    let gxiy = gx.dot(&iy);
    let mut out = x * gyv;
    out -= y * gxv;
    out += &ix * giyv;
    out -= &iy * gixv;
    out += &iv * (2.0 * gxiy);
    out
}

/// Applies the base complex structure `i` in interleaved coordinates:
/// per pair, `(a, b) ↦ (−b, a)`.
pub fn complex_structure_apply(v: &Vec64) -> Vec64 {
    let mut out = Vec64::zeros(v.len());
    for j in 0..v.len() / 2 {
        out[2 * j] = -v[2 * j + 1];
        out[2 * j + 1] = v[2 * j];
    }
    out
}

/// Real 2n×2n matrix of the base complex structure.
pub fn complex_structure_matrix(n: usize) -> Mat {
    let mut m = Mat::zeros(2 * n, 2 * n);
    for j in 0..n {
        m[(2 * j, 2 * j + 1)] = -1.0;
        m[(2 * j + 1, 2 * j)] = 1.0;
    }
    m
}

/// Packs an interleaved real vector into complex components `V^j = v₁ + i v₂`.
pub fn pack_vector(v: &Vec64) -> Vec<C64> {
    (0..v.len() / 2)
        .map(|j| C64::new(v[2 * j], v[2 * j + 1]))
        .collect()
}

/// Inverse of [`pack_vector`].
pub fn unpack_vector(z: &[C64]) -> Vec64 {
    let mut out = Vec64::zeros(2 * z.len());
    for (j, c) in z.iter().enumerate() {
        out[2 * j] = c.re;
        out[2 * j + 1] = c.im;
    }
    out
}

/// Packs an interleaved real covector into `P_j = p¹ − i p²`, so that
/// ⟨p, v⟩ = Re Σ P_j V^j.
pub fn pack_covector(p: &Vec64) -> Vec<C64> {
    (0..p.len() / 2)
        .map(|j| C64::new(p[2 * j], -p[2 * j + 1]))
        .collect()
}

/// Inverse of [`pack_covector`].
pub fn unpack_covector(z: &[C64]) -> Vec64 {
    let mut out = Vec64::zeros(2 * z.len());
    for (j, c) in z.iter().enumerate() {
        out[2 * j] = c.re;
        out[2 * j + 1] = -c.im;
    }
    out
}

/// Realifies a Hermitian matrix `H` into the real metric `2·M̃(H̄)`:
/// per (j,k) block `2[[Re H, Im H], [−Im H, Re H]]`.
pub fn realify_hermitian(h: &nalgebra::DMatrix<C64>) -> Mat {
    let n = h.nrows();
    let mut g = Mat::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            let (a, b) = (h[(j, k)].re, h[(j, k)].im);
            g[(2 * j, 2 * k)] = 2.0 * a;
            g[(2 * j, 2 * k + 1)] = 2.0 * b;
            g[(2 * j + 1, 2 * k)] = -2.0 * b;
            g[(2 * j + 1, 2 * k + 1)] = 2.0 * a;
        }
    }
    g
}

/// Finite-difference defect of the Kähler condition: the antisymmetrization of
/// `∂h_{jl̄}/∂q̄^k` in (l,k) via Wirtinger central differences of step `eta`.
/// O(η²)-small for the Bergman metric (exactly Kähler); O(1) for a non-Kähler
/// comparison metric.
pub fn kahler_defect_fd(chart: &BaseChart, q: &Vec64, eta: f64) -> f64 {
    let n = chart.n();
    let mut worst: f64 = 0.0;
    let dh = |dir: usize| -> Vec<nalgebra::DMatrix<C64>> {
        // ∂/∂q̄^k = ½(∂/∂q₁^k + i ∂/∂q₂^k)
        (0..n)
            .map(|k| {
                let mut ex = q.clone();
                ex[2 * k] += eta;
                let mut ex2 = q.clone();
                ex2[2 * k] -= eta;
                let ddx = (chart.hermitian_metric(&ex) - chart.hermitian_metric(&ex2))
                    .map(|c| c / (2.0 * eta));
                let mut ey = q.clone();
                ey[2 * k + 1] += eta;
                let mut ey2 = q.clone();
                ey2[2 * k + 1] -= eta;
                let ddy = (chart.hermitian_metric(&ey) - chart.hermitian_metric(&ey2))
                    .map(|c| c / (2.0 * eta));
                let _ = dir;
                ddx.map(|c| 0.5 * c) + ddy.map(|c| C64::new(0.0, 0.5) * c)
            })
            .collect()
    };
    let grads = dh(0);
    for k in 0..n {
        for l in 0..n {
            for j in 0..n {
                let d = grads[k][(j, l)] - grads[l][(j, k)];
                worst = worst.max(d.norm());
            }
        }
    }
    worst
}

/// Euclidean → metric norm shorthand |v|_g = √(vᵀ g v).
pub fn metric_norm(g: &Mat, v: &Vec64) -> f64 {
    (g * v).dot(v).max(0.0).sqrt()
}

/// Draws the interleaved real vector of a complex standard basis direction.
pub fn basis_vector(dim: usize, a: usize) -> Vec64 {
    DVector::from_fn(dim, |i, _| if i == a { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_ball_point(rng: &mut ChaCha8Rng, n: usize, rmax: f64) -> Vec64 {
        loop {
            let q = Vec64::from_fn(2 * n, |_, _| rng.random_range(-rmax..rmax));
            if q.norm() < rmax {
                return q;
            }
        }
    }

    #[test]
    fn flat_metric_is_identity() {
        let chart = BaseChart::FlatTorus { n: 2 };
        let q = Vec64::from_vec(vec![0.3, -0.2, 1.1, 0.7]);
        assert_relative_eq!(chart.metric(&q), Mat::identity(4, 4), max_relative = 1e-15);
        assert_relative_eq!(chart.metric_inverse(&q), Mat::identity(4, 4), max_relative = 1e-15);
        assert_eq!(chart.gamma_vector(&q, &q, &q).norm(), 0.0);
    }

    #[test]
    fn ball_metric_reduces_to_conformal_disk_at_n1() {
        let chart = BaseChart::ComplexHyperbolic { n: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let q = sample_ball_point(&mut rng, 1, 0.8);
            let s = 1.0 - q.norm_squared();
            let g = chart.metric(&q);
            let expect = Mat::identity(2, 2) / (s * s);
            assert_relative_eq!(g, expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn closed_form_inverse_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=3 {
            let chart = BaseChart::ComplexHyperbolic { n };
            for _ in 0..10 {
                let q = sample_ball_point(&mut rng, n, 0.7);
                let g = chart.metric(&q);
                let ginv = chart.metric_inverse(&q);
                assert_relative_eq!(&g * &ginv, Mat::identity(2 * n, 2 * n), epsilon = 1e-12);
                // Oracle: dense inverse.
                let dense = g.clone().try_inverse().unwrap();
                assert_relative_eq!(ginv, dense, epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn metric_is_hermitian_compatible() {
        // g(i·u, i·v) = g(u, v) and g symmetric positive definite.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chart = BaseChart::ComplexHyperbolic { n: 2 };
        for _ in 0..20 {
            let q = sample_ball_point(&mut rng, 2, 0.7);
            let g = chart.metric(&q);
            assert_relative_eq!(g.transpose(), g, max_relative = 1e-14);
            let u = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let v = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let iu = complex_structure_apply(&u);
            let iv = complex_structure_apply(&v);
            assert_relative_eq!((&g * &iu).dot(&iv), (&g * &u).dot(&v), max_relative = 1e-12);
            assert!((&g * &u).dot(&u) > 0.0);
        }
    }

    #[test]
    fn gamma_symmetry_and_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let chart = BaseChart::ComplexHyperbolic { n: 2 };
        for _ in 0..20 {
            let q = sample_ball_point(&mut rng, 2, 0.6);
            let u = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let v = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let p = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            // Torsion-freeness: Γ(u,v) = Γ(v,u).
            assert_relative_eq!(
                chart.gamma_vector(&q, &u, &v),
                chart.gamma_vector(&q, &v, &u),
                epsilon = 1e-13
            );
            // Covector duality: ⟨Γ*(u,p), v⟩ = ⟨p, Γ(u,v)⟩.
            assert_relative_eq!(
                chart.gamma_covector(&q, &u, &p).dot(&v),
                p.dot(&chart.gamma_vector(&q, &u, &v)),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn gamma_is_metric_compatible() {
        // ∂_u g(v,w) = g(Γ(u,v), w) + g(v, Γ(u,w)) via central differences.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let chart = BaseChart::ComplexHyperbolic { n: 2 };
        let q = sample_ball_point(&mut rng, 2, 0.5);
        for _ in 0..10 {
            let u = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let v = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let w = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let eta = 1e-6;
            let qp = &q + &u * eta;
            let qm = &q - &u * eta;
            let dg = ((chart.metric(&qp) - chart.metric(&qm)) / (2.0 * eta) * &v).dot(&w);
            let g = chart.metric(&q);
            let rhs = (&g * chart.gamma_vector(&q, &u, &v)).dot(&w)
                + (&g * &v).dot(&chart.gamma_vector(&q, &u, &w));
            assert_relative_eq!(dg, rhs, epsilon = 1e-7);
        }
    }

    #[test]
    fn curvature_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let chart = BaseChart::ComplexHyperbolic { n: 2 };
        let q = sample_ball_point(&mut rng, 2, 0.6);
        let g = chart.metric(&q);
        let rv = |x: &Vec64, y: &Vec64, v: &Vec64| chart.curvature_apply(&q, x, y, v);
        for _ in 0..10 {
            let x = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let y = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let v = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let w = Vec64::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            // Antisymmetry in (X,Y).
            assert_relative_eq!(rv(&x, &y, &v), -rv(&y, &x, &v), epsilon = 1e-12);
            // g(R(X,Y)v, w) antisymmetric in (v,w).
            assert_relative_eq!(
                (&g * rv(&x, &y, &v)).dot(&w),
                -(&g * rv(&x, &y, &w)).dot(&v),
                epsilon = 1e-12
            );
            // First Bianchi identity.
            let b = rv(&x, &y, &v) + rv(&y, &v, &x) + rv(&v, &x, &y);
            assert!(b.norm() < 1e-12);
            // ℂ-linearity: R(X,Y)(iv) = i R(X,Y)v.
            assert_relative_eq!(
                rv(&x, &y, &complex_structure_apply(&v)),
                complex_structure_apply(&rv(&x, &y, &v)),
                epsilon = 1e-12
            );
        }
    }

    /// Honest curvature: finite-difference Christoffels of the real metric,
    /// differentiated once more, must reproduce the five-term tensor.
    #[test]
    fn curvature_matches_finite_difference_geometry() {
        let chart = BaseChart::ComplexHyperbolic { n: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let q = sample_ball_point(&mut rng, 2, 0.4);
        let d = 4usize;

        let christoffel = |x: &Vec64, u: &Vec64, v: &Vec64| chart.gamma_vector(x, u, v);
        let x = Vec64::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let y = Vec64::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let v = Vec64::from_fn(d, |_, _| rng.random_range(-1.0..1.0));

        // R_paper(X,Y)v = −( ∂_X Γ(Y,v) − ∂_Y Γ(X,v) + Γ(X,Γ(Y,v)) − Γ(Y,Γ(X,v)) )
        // for constant coordinate fields X, Y, v.
        let eta = 1e-5;
        let dx = (christoffel(&(&q + &x * eta), &y, &v) - christoffel(&(&q - &x * eta), &y, &v))
            / (2.0 * eta);
        let dy = (christoffel(&(&q + &y * eta), &x, &v) - christoffel(&(&q - &y * eta), &x, &v))
            / (2.0 * eta);
        let comm = christoffel(&q, &x, &christoffel(&q, &y, &v))
            - christoffel(&q, &y, &christoffel(&q, &x, &v));
        let honest = -(dx - dy + comm);
        let formula = chart.curvature_apply(&q, &x, &y, &v);
        assert!(
            (honest - &formula).norm() < 1e-7 * formula.norm().max(1.0),
            "five-term tensor disagrees with differentiated Christoffels"
        );
    }

    #[test]
    fn kahler_defect_is_second_order_small() {
        let chart = BaseChart::ComplexHyperbolic { n: 2 };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let q = sample_ball_point(&mut rng, 2, 0.5);
        let d1 = kahler_defect_fd(&chart, &q, 1e-4);
        let d2 = kahler_defect_fd(&chart, &q, 1e-5);
        assert!(d1 < 1e-8, "Kähler defect {d1}");
        assert!(d2 < 1e-7, "Kähler defect {d2}");
    }

    #[test]
    fn packing_round_trip_and_pairing() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = Vec64::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        let p = Vec64::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
        assert_relative_eq!(unpack_vector(&pack_vector(&v)), v);
        assert_relative_eq!(unpack_covector(&pack_covector(&p)), p);
        // ⟨p,v⟩ = Re Σ P_j V^j.
        let lhs = p.dot(&v);
        let rhs: f64 = pack_covector(&p)
            .iter()
            .zip(&pack_vector(&v))
            .map(|(pp, vv)| (pp * vv).re)
            .sum();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
    }

    #[test]
    fn chart_exit_detection() {
        let chart = BaseChart::ComplexHyperbolic { n: 1 };
        let q = Vec64::from_vec(vec![0.8, 0.7]);
        assert!(chart.check_point(&q, 0.0).err().is_some());
        let q2 = Vec64::from_vec(vec![0.3, 0.1]);
        assert!(chart.check_point(&q2, 0.05).is_ok());
        assert!(chart.check_point(&q2, 0.7).is_err());
    }
}
