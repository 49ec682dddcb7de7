//! Hamiltonians on the cotangent chart: free kinetic part plus a bounded
//! perturbation family with a temporal plateau profile.
//!
//! The free Hamiltonian is H⁰(q,p) = ½ pᵀ g⁻¹(q) p. Its differential closes
//! without metric derivatives through the Christoffel contraction:
//!
//! ```text
//!   dH⁰ = (−Cξ, ξ),   ξ = g⁻¹p,   C_{ba} = Γ^c_{ab} p_c,
//! ```
//!
//! and its feature-metric gradient is (0, gAξ) in chart coordinates, with
//! squared length g(ξ, A_ξ ξ).
//!
//! Perturbations take the separated form
//!
//! ```text
//!   h(x,y,q,p) = A · cos(m₁x + m₂y + φ) · [ cos(k·q₁) + μ p₁ χ(|p|²) ],
//! ```
//!
//! where q₁ collects the first real component of each complex base
//! coordinate, p₁ is the first fiber component, and χ is a C² quintic cutoff
//! equal to 1 below an inner radius and 0 above an outer one. All partial
//! derivatives are available in closed form through [`Perturbation::jet`].
//! The temporal profile β_τ ramps the perturbation on and off over unit
//! intervals around a plateau of length τ.

use crate::chart::BaseChart;
use crate::hyperkahler::{c_matrix, Frame};
use crate::kernels::{beta_tau, beta_tau_prime, smoothstep, smoothstep_prime, smoothstep_second};
use crate::{Result, Vec64};
use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

/// Time dependence of the perturbation term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TemporalProfile {
    /// Perturbation always fully on (β ≡ 1).
    Static,
    /// Plateau profile β_τ: ramps on over (−1,0), holds 1 on [0,τ], ramps off
    /// over (τ,τ+1); compressed self-similarly when τ < 1.
    Plateau { tau: f64 },
}

impl TemporalProfile {
    /// β(s).
    pub fn factor(&self, s: f64) -> f64 {
        match *self {
            TemporalProfile::Static => 1.0,
            TemporalProfile::Plateau { tau } => beta_tau(s, tau),
        }
    }

    /// β'(s).
    pub fn factor_prime(&self, s: f64) -> f64 {
        match *self {
            TemporalProfile::Static => 0.0,
            TemporalProfile::Plateau { tau } => beta_tau_prime(s, tau),
        }
    }
}

/// Separated perturbation h = A·w(x,y)·[cos(k·q₁) + μ p₁ χ(|p|²)].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// Overall amplitude A.
    pub amplitude: f64,
    /// Spatial wavenumbers (m₁, m₂) of w(x,y) = cos(m₁x + m₂y + φ).
    pub spatial_wave: (i64, i64),
    /// Spatial phase φ.
    pub spatial_phase: f64,
    /// Base wavevector k against the first real components q₁.
    pub base_wave: Vec<f64>,
    /// Momentum coupling μ.
    pub mu: f64,
    /// Cutoff radii (inner², outer²) for χ(|p|²).
    pub cutoff_sq: (f64, f64),
}

/// Value and first partial derivatives of a perturbation at one point.
#[derive(Debug, Clone)]
pub struct PerturbationJet {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dq: Vec64,
    pub dp: Vec64,
}

/// Sampled supremum norms of a perturbation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampledNorms {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Perturbation {
    /// A deterministic default family on an n-dimensional base:
    /// w = cos(x + y + 0.4), k = e₁, μ = ½, cutoff radii (½, 1).
    pub fn standard(n: usize, amplitude: f64) -> Self {
        let mut k = vec![0.0; n];
        k[0] = 1.0;
        Perturbation {
            amplitude,
            spatial_wave: (1, 1),
            spatial_phase: 0.4,
            base_wave: k,
            mu: 0.5,
            cutoff_sq: (0.25, 1.0),
        }
    }

    fn chi(&self, u: f64) -> (f64, f64) {
        let (a, b) = self.cutoff_sq;
        if u <= a {
            (1.0, 0.0)
        } else if u >= b {
            (0.0, 0.0)
        } else {
            let t = (u - a) / (b - a);
            (1.0 - smoothstep(t), -smoothstep_prime(t) / (b - a))
        }
    }

    fn chi_second(&self, u: f64) -> f64 {
        let (a, b) = self.cutoff_sq;
        if u <= a || u >= b {
            0.0
        } else {
            let t = (u - a) / (b - a);
            -smoothstep_second(t) / ((b - a) * (b - a))
        }
    }

    /// Analytic Hessian in the (q,p) block, packed [q; p], at fixed (x,y).
    /// The separated form has no mixed q–p second derivatives.
    pub fn hessian_qp(&self, x: f64, y: f64, q: &Vec64, p: &Vec64) -> crate::Mat {
        let n = self.base_wave.len();
        let d = 2 * n;
        let (m1, m2) = self.spatial_wave;
        let w = (m1 as f64 * x + m2 as f64 * y + self.spatial_phase).cos();
        let kq: f64 = (0..n).map(|j| self.base_wave[j] * q[2 * j]).sum();
        let psq = p.norm_squared();
        let (_, dchi) = self.chi(psq);
        let ddchi = self.chi_second(psq);
        let aw = self.amplitude * w;
        let mut hess = crate::Mat::zeros(2 * d, 2 * d);
        for j in 0..n {
            for l in 0..n {
                hess[(2 * j, 2 * l)] =
                    -aw * self.base_wave[j] * self.base_wave[l] * kq.cos();
            }
        }
        for i in 0..d {
            for j in 0..d {
                let mut v = p[0] * (4.0 * ddchi * p[i] * p[j]);
                if i == j {
                    v += 2.0 * p[0] * dchi;
                }
                if i == 0 {
                    v += 2.0 * dchi * p[j];
                }
                if j == 0 {
                    v += 2.0 * dchi * p[i];
                }
                hess[(d + i, d + j)] = aw * self.mu * v;
            }
        }
        hess
    }

    /// Value and all first partials at (x, y, q, p).
    pub fn jet(&self, x: f64, y: f64, q: &Vec64, p: &Vec64) -> PerturbationJet {
        let n = self.base_wave.len();
        let (m1, m2) = self.spatial_wave;
        let arg = m1 as f64 * x + m2 as f64 * y + self.spatial_phase;
        let w = arg.cos();
        let dw = -arg.sin();
        let kq: f64 = (0..n).map(|j| self.base_wave[j] * q[2 * j]).sum();
        let psq = p.norm_squared();
        let (chi, dchi) = self.chi(psq);
        let f = kq.cos() + self.mu * p[0] * chi;
        let a = self.amplitude;

        let mut dq = Vec64::zeros(q.len());
        for j in 0..n {
            dq[2 * j] = a * w * (-self.base_wave[j] * kq.sin());
        }
        let mut dp = Vec64::zeros(p.len());
        for i in 0..p.len() {
            let mut d = self.mu * p[0] * dchi * 2.0 * p[i];
            if i == 0 {
                d += self.mu * chi;
            }
            dp[i] = a * w * d;
        }
        PerturbationJet {
            value: a * w * f,
            dx: a * m1 as f64 * dw * f,
            dy: a * m2 as f64 * dw * f,
            dq,
            dp,
        }
    }

    /// Deterministic sampled norms over 𝕋² × {|q| ≤ q_box} × {|p| ≤ p_radius}.
    /// C¹ takes the full (x,y,q,p) gradient; C² adds a finite-difference
    /// Hessian Frobenius norm on top.
    pub fn sampled_norms(&self, q_box: f64, p_radius: f64, samples: usize) -> SampledNorms {
        let n = self.base_wave.len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0FFEE);
        let mut c0: f64 = 0.0;
        let mut grad_max: f64 = 0.0;
        let mut hess_max: f64 = 0.0;
        let fd = 1e-4;
        for _ in 0..samples {
            let x = rng.random_range(0.0..std::f64::consts::TAU);
            let y = rng.random_range(0.0..std::f64::consts::TAU);
            let q = Vec64::from_fn(2 * n, |_, _| rng.random_range(-q_box..q_box));
            let p = Vec64::from_fn(2 * n, |_, _| rng.random_range(-p_radius..p_radius));
            let jet = self.jet(x, y, &q, &p);
            c0 = c0.max(jet.value.abs());
            let gsq = jet.dx * jet.dx
                + jet.dy * jet.dy
                + jet.dq.norm_squared()
                + jet.dp.norm_squared();
            grad_max = grad_max.max(gsq.sqrt());
            // FD Hessian in the (q,p) block (the x,y rows repeat the same
            // trigonometric bound, so the block Frobenius norm dominates up
            // to the wavenumber factor accounted below).
            let mut frob = 0.0;
            for i in 0..4 * n {
                let mut qp = q.clone();
                let mut pp = p.clone();
                let mut qm = q.clone();
                let mut pm = p.clone();
                if i < 2 * n {
                    qp[i] += fd;
                    qm[i] -= fd;
                } else {
                    pp[i - 2 * n] += fd;
                    pm[i - 2 * n] -= fd;
                }
                let jp = self.jet(x, y, &qp, &pp);
                let jm = self.jet(x, y, &qm, &pm);
                let row_q = (&jp.dq - &jm.dq) / (2.0 * fd);
                let row_p = (&jp.dp - &jm.dp) / (2.0 * fd);
                frob += row_q.norm_squared() + row_p.norm_squared();
                let dxx = (jp.dx - jm.dx) / (2.0 * fd);
                let dyy = (jp.dy - jm.dy) / (2.0 * fd);
                frob += dxx * dxx + dyy * dyy;
            }
            hess_max = hess_max.max(frob.sqrt());
        }
        let c1 = c0.max(grad_max);
        SampledNorms {
            c0,
            c1,
            c2: c1.max(hess_max),
        }
    }
}

/// A Hamiltonian H_s = H⁰ + β(s)·h on a base chart.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub chart: BaseChart,
    pub perturbation: Option<Perturbation>,
    pub profile: TemporalProfile,
}

impl Hamiltonian {
    /// Purely kinetic Hamiltonian.
    pub fn free(chart: BaseChart) -> Self {
        Hamiltonian {
            chart,
            perturbation: None,
            profile: TemporalProfile::Static,
        }
    }

    /// Kinetic part H⁰ = ½ pᵀ g⁻¹ p.
    pub fn free_value(&self, q: &Vec64, p: &Vec64) -> f64 {
        let xi = self.chart.metric_inverse(q) * p;
        0.5 * p.dot(&xi)
    }

    /// Closed-form differential of the kinetic part: (−Cξ, ξ).
    pub fn free_differential(&self, q: &Vec64, p: &Vec64) -> (Vec64, Vec64) {
        let xi = self.chart.metric_inverse(q) * p;
        let dq = -(c_matrix(&self.chart, q, p) * &xi);
        (dq, xi)
    }

    /// Full value H_s(x,y,q,p).
    pub fn value(&self, s: f64, x: f64, y: f64, q: &Vec64, p: &Vec64) -> f64 {
        let mut v = self.free_value(q, p);
        if let Some(h) = &self.perturbation {
            v += self.profile.factor(s) * h.jet(x, y, q, p).value;
        }
        v
    }

    /// Differential (∂H/∂q, ∂H/∂p) at fixed (s,x,y).
    pub fn differential(&self, s: f64, x: f64, y: f64, q: &Vec64, p: &Vec64) -> (Vec64, Vec64) {
        let (mut dq, mut dp) = self.free_differential(q, p);
        if let Some(h) = &self.perturbation {
            let beta = self.profile.factor(s);
            if beta != 0.0 {
                let jet = h.jet(x, y, q, p);
                dq += jet.dq * beta;
                dp += jet.dp * beta;
            }
        }
        (dq, dp)
    }

    /// ∂H/∂s = β'(s)·h.
    pub fn ds_value(&self, s: f64, x: f64, y: f64, q: &Vec64, p: &Vec64) -> f64 {
        match &self.perturbation {
            None => 0.0,
            Some(h) => self.profile.factor_prime(s) * h.jet(x, y, q, p).value,
        }
    }

    /// Spatial partials (∂H/∂x, ∂H/∂y) = β·(∂ₓh, ∂_y h).
    pub fn spatial_partials(&self, s: f64, x: f64, y: f64, q: &Vec64, p: &Vec64) -> (f64, f64) {
        match &self.perturbation {
            None => (0.0, 0.0),
            Some(h) => {
                let beta = self.profile.factor(s);
                let jet = h.jet(x, y, q, p);
                (beta * jet.dx, beta * jet.dy)
            }
        }
    }

    /// Feature-metric gradient G⁻¹·dH at an assembled frame.
    pub fn grad(&self, s: f64, x: f64, y: f64, q: &Vec64, p: &Vec64, frame: &Frame) -> Vec64 {
        let (dq, dp) = self.differential(s, x, y, q, p);
        let d = q.len();
        let mut dh = Vec64::zeros(2 * d);
        dh.rows_mut(0, d).copy_from(&dq);
        dh.rows_mut(d, d).copy_from(&dp);
        &frame.metric_inv * dh
    }

    /// Closed-form gradient of the kinetic part: (0, g A ξ).
    pub fn free_grad_closed(&self, q: &Vec64, p: &Vec64) -> Result<Vec64> {
        let (a, _) = crate::hyperkahler::a_xi(&self.chart, q, p)?;
        let xi = self.chart.metric_inverse(q) * p;
        let gax = self.chart.metric(q) * (a * xi);
        let d = q.len();
        let mut out = Vec64::zeros(2 * d);
        out.rows_mut(d, d).copy_from(&gax);
        Ok(out)
    }
}
