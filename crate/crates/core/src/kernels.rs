//! Closed-form scalar kernels.
//!
//! Everything here is a pure function of a handful of scalars: the metric
//! profile φ and the eigenvalue laws of `A_ξ`, the switching cutoff `β_τ`, and
//! the constants of the confinement estimate (α, R₀, the barrier `f`, the ball
//! eigenfunction φ₁, r_*, and the L∞ budget). Kernels are generic over
//! [`Real`] so the same formulas serve `f32` and `f64`; the crate-level users
//! instantiate them at `f64`.

use crate::scalar::Real;

/// Metric profile φ(w) = ((√(1+w) − 1)/w)^{1/2}, continuously extended by
/// φ(0) = 1/√2. Implemented through the rationalized form
/// `φ(w) = (1 + √(1+w))^{-1/2}` which has no cancellation near `w = 0`.
///
/// Returns `None` outside the domain `w > -1`.
pub fn phi<T: Real>(w: T) -> Option<T> {
    let one = T::one();
    if w <= -one {
        return None;
    }
    Some(((one + w).sqrt() + one).recip().sqrt())
}

/// Eigenvalue of `A_ξ` on span{ξ, iξ} as a function of `t = |ξ|²_g`, in the
/// rationalized product form `1 − 4t·φ(−4t)²` (the curvature-eigenvalue route).
pub fn axi_span_product_form<T: Real>(t: T) -> Option<T> {
    let four = T::lit(4.0);
    phi(-four * t).map(|p| T::one() - four * t * p * p)
}

/// Eigenvalue of `A_ξ` on the g-orthogonal complement of span{ξ, iξ}, in the
/// product form `1 − 2t·φ(−4t)²`.
pub fn axi_complement_product_form<T: Real>(t: T) -> Option<T> {
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    phi(-four * t).map(|p| T::one() - two * t * p * p)
}

/// Simplified span eigenvalue √(1 − 4t).
pub fn axi_span_eigenvalue<T: Real>(t: T) -> Option<T> {
    let x = T::one() - T::lit(4.0) * t;
    (x >= T::zero()).then(|| x.sqrt())
}

/// Simplified complement eigenvalue (1 + √(1 − 4t))/2.
pub fn axi_complement_eigenvalue<T: Real>(t: T) -> Option<T> {
    axi_span_eigenvalue(t).map(|s| (T::one() + s) / T::lit(2.0))
}

/// Quintic smoothstep `6x⁵ − 15x⁴ + 10x³` clamped to [0,1]; C² at both ends
/// with derivative bound 15/8 < 2.
pub fn smoothstep<T: Real>(x: T) -> T {
    if x <= T::zero() {
        T::zero()
    } else if x >= T::one() {
        T::one()
    } else {
        x * x * x * (T::lit(10.0) + x * (T::lit(-15.0) + x * T::lit(6.0)))
    }
}

/// Derivative of [`smoothstep`]: `30x²(1−x)²` on (0,1), zero outside.
pub fn smoothstep_prime<T: Real>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        T::zero()
    } else {
        let y = T::one() - x;
        T::lit(30.0) * x * x * y * y
    }
}

/// Second derivative of [`smoothstep`]: `60x(2x−1)(x−1)` on (0,1), zero
/// outside (the quintic is exactly C² across the junctions).
pub fn smoothstep_second<T: Real>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        T::zero()
    } else {
        T::lit(60.0) * x * (T::lit(2.0) * x - T::one()) * (x - T::one())
    }
}

/// Switching cutoff β_τ(s): 0 for s ≤ −1 and s ≥ τ+1, identically 1 on [0,τ]
/// when τ ≥ 1, smoothstep ramps on (−1,0) and (τ,τ+1). For 0 < τ < 1 the same
/// profile is scaled by τ, so the family tends to 0 with τ while keeping
/// |β'_τ| ≤ 2.
pub fn beta_tau<T: Real>(s: T, tau: T) -> T {
    if tau <= T::zero() {
        return T::zero();
    }
    let amp = if tau < T::one() { tau } else { T::one() };
    if s <= -T::one() || s >= tau + T::one() {
        T::zero()
    } else if s < T::zero() {
        amp * smoothstep(s + T::one())
    } else if s <= tau {
        amp
    } else {
        amp * smoothstep(tau + T::one() - s)
    }
}

/// s-derivative of [`beta_tau`].
pub fn beta_tau_prime<T: Real>(s: T, tau: T) -> T {
    if tau <= T::zero() {
        return T::zero();
    }
    let amp = if tau < T::one() { tau } else { T::one() };
    if s <= -T::one() || s >= tau + T::one() || (s >= T::zero() && s <= tau) {
        T::zero()
    } else if s < T::zero() {
        amp * smoothstep_prime(s + T::one())
    } else {
        -amp * smoothstep_prime(tau + T::one() - s)
    }
}

/// Subsolution constant α(c₂) = 16·c₂(1 + c₂) for c₂ = ‖h‖_{C²}.
pub fn alpha<T: Real>(c2: T) -> T {
    T::lit(16.0) * c2 * (T::one() + c2)
}

/// Admissible mean-value radius R₀(α) = min{1, π/√(2(4α−1))}, the second
/// branch only for α > 1/4.
pub fn r0_radius<T: Real>(alpha: T) -> T {
    let quarter = T::lit(0.25);
    if alpha <= quarter {
        T::one()
    } else {
        let r = T::PI() / (T::lit(2.0) * (T::lit(4.0) * alpha - T::one())).sqrt();
        if r < T::one() {
            r
        } else {
            T::one()
        }
    }
}

/// Radial barrier f(ρ; μ) = −(1/μ)(2 sin(√−μ ρ)/(ρ sin(2√−μ)) − 1) on [0,2]
/// for μ < 0, with the ρ → 0 limit branch 2√−μ/sin(2√−μ).
///
/// Satisfies (−Δ_{ℝ³} + μ)f = 1 radially with f(2) = 0; valid while
/// 2√−μ < π (first Dirichlet eigenvalue of B₂ is −μ = π²/4 · 1/4 ... the
/// caller stays below μ = −π²/8 in practice, where sin(2√−μ) > 0).
pub fn barrier_f<T: Real>(rho: T, mu: T) -> Option<T> {
    if mu >= T::zero() || rho < T::zero() || rho > T::lit(2.0) {
        return None;
    }
    let sm = (-mu).sqrt();
    let denom = (T::lit(2.0) * sm).sin();
    if denom <= T::zero() {
        return None;
    }
    let core = if rho == T::zero() {
        T::lit(2.0) * sm / denom
    } else {
        T::lit(2.0) * (sm * rho).sin() / (rho * denom)
    };
    Some(-(core - T::one()) / mu)
}

/// Barrier value at the origin, κ(0) = f(0; μ); at μ = −π²/8 this equals
/// 4√2/(π sin(π/√2)) − 8/π² = 1.452404034678…
pub fn barrier_kappa0<T: Real>(mu: T) -> Option<T> {
    barrier_f(T::zero(), mu)
}

/// First radial Dirichlet eigenfunction of B₂(0) ⊂ ℝ³:
/// φ₁(ρ) = sin(πρ/2)/ρ with φ₁(0) = π/2; eigenvalue λ₁ = π²/4.
pub fn phi1<T: Real>(rho: T) -> T {
    if rho == T::zero() {
        T::PI() / T::lit(2.0)
    } else {
        (T::PI() * rho / T::lit(2.0)).sin() / rho
    }
}

/// First Dirichlet eigenvalue λ₁ = π²/4 of B₂(0) ⊂ ℝ³ (radial sector).
pub fn lambda1<T: Real>() -> T {
    T::PI() * T::PI() / T::lit(4.0)
}

/// Confinement radius r_* = (3‖h‖_{C¹}/(2α))^{1/5}.
pub fn r_star<T: Real>(c1: T, alpha: T) -> T {
    (T::lit(1.5) * c1 / alpha).powf(T::lit(0.2))
}

/// L∞ budget C_∞ · α^{3/5} · ‖h‖_{C¹}^{2/5}.
pub fn linfty_budget<T: Real>(c_inf: T, alpha: T, c1: T) -> T {
    c_inf * alpha.powf(T::lit(0.6)) * c1.powf(T::lit(0.4))
}

/// Smallness threshold making r_* admissible: ‖h‖_{C¹} ≤ (2α/3)·R₀(α)⁵.
pub fn c1_admissible_bound<T: Real>(alpha: T) -> T {
    let r0 = r0_radius(alpha);
    T::lit(2.0) / T::lit(3.0) * alpha * r0.powi(5)
}

/// Decaying branch λ₋(κ) = (1 − √(1+4|κ|²))/2 of the flat per-mode system.
pub fn flat_mode_decay_rate<T: Real>(kappa_abs2: T) -> T {
    (T::one() - (T::one() + T::lit(4.0) * kappa_abs2).sqrt()) / T::lit(2.0)
}

/// Growing branch λ₊(κ) = (1 + √(1+4|κ|²))/2.
pub fn flat_mode_growth_rate<T: Real>(kappa_abs2: T) -> T {
    (T::one() + (T::one() + T::lit(4.0) * kappa_abs2).sqrt()) / T::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Frozen oracle values (independent high-precision evaluation).
    const PHI_AT_0: f64 = 0.707_106_781_186_547_6; // 1/√2
    const PHI_AT_3: f64 = 0.577_350_269_189_625_8; // 1/√3
    const PHI_AT_M064: f64 = 0.790_569_415_042_094_9; // √0.625
    const KAPPA0_AT_MU: f64 = 1.452_404_034_678; // 4√2/(π sin(π/√2)) − 8/π²
    const R0_AT_32: f64 = 0.197_121_054_8; // π/√254
    const LAMBDA_MINUS_10: f64 = -0.618_033_988_749_894_9; // (1−√5)/2

    #[test]
    fn phi_frozen_values() {
        assert_relative_eq!(phi(0.0f64).unwrap(), PHI_AT_0, max_relative = 1e-15);
        assert_relative_eq!(phi(3.0f64).unwrap(), PHI_AT_3, max_relative = 1e-15);
        assert_relative_eq!(phi(-0.64f64).unwrap(), PHI_AT_M064, max_relative = 1e-15);
        assert!(phi(-1.0f64).is_none());
        assert!(phi(-1.5f64).is_none());
    }

    #[test]
    fn phi_matches_naive_form_away_from_zero() {
        // Independent route: the textbook quotient form. Its √(1+w)−1
        // cancellation costs ~3 digits at |w| = 1e-3, which bounds how tightly
        // the two routes can be compared.
        for &w in &[-0.9, -0.64, -0.3, -1e-3, 1e-3, 0.5, 1.0, 3.0, 10.0, 1e4] {
            let naive = (((1.0f64 + w).sqrt() - 1.0) / w).sqrt();
            assert_relative_eq!(phi(w).unwrap(), naive, max_relative = 1e-12);
        }
    }

    #[test]
    fn phi_stable_near_zero() {
        // The rationalized form holds 1/√2 through w = ±1e-14 up to the true
        // slope φ'(0)/φ(0) = −1/8 (so |rel. dev.| ≤ 1.3e-15 here), while the
        // naive quotient already loses half its digits.
        for &w in &[-1e-14, -1e-18, 0.0, 1e-18, 1e-14] {
            assert_relative_eq!(phi(w).unwrap(), PHI_AT_0, max_relative = 5e-15);
        }
    }

    #[test]
    fn axi_eigenvalue_forms_agree() {
        // Product (curvature-eigenvalue) route vs simplified closed forms:
        // 1 − 4tφ(−4t)² = √(1−4t) and 1 − 2tφ(−4t)² = (1+√(1−4t))/2.
        let mut t = 0.0f64;
        while t < 0.2025 + 1e-12 {
            assert_relative_eq!(
                axi_span_product_form(t).unwrap(),
                axi_span_eigenvalue(t).unwrap(),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                axi_complement_product_form(t).unwrap(),
                axi_complement_eigenvalue(t).unwrap(),
                max_relative = 1e-14
            );
            t += 0.0025;
        }
        // Spot values at |ξ|_g = 0.3.
        assert_relative_eq!(axi_span_eigenvalue(0.09f64).unwrap(), 0.8, max_relative = 1e-15);
        assert_relative_eq!(
            axi_complement_eigenvalue(0.09f64).unwrap(),
            0.9,
            max_relative = 1e-15
        );
    }

    #[test]
    fn axi_span_vanishes_at_degeneration() {
        // Degeneration radius: span eigenvalue → 0 exactly at t = 1/4 (|ξ|_g = δ₀).
        assert_eq!(axi_span_eigenvalue(0.25f64).unwrap(), 0.0);
        assert!(axi_span_eigenvalue(0.2500001f64).is_none());
        // Monotone decrease along the ray.
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let t = 0.25 * k as f64 / 100.0;
            let e = axi_span_eigenvalue(t).unwrap();
            assert!(e < prev);
            prev = e;
        }
    }

    #[test]
    fn cutoff_profile() {
        for &tau in &[1.0f64, 2.5, 7.0] {
            assert_eq!(beta_tau(-1.0, tau), 0.0);
            assert_eq!(beta_tau(-5.0, tau), 0.0);
            assert_eq!(beta_tau(tau + 1.0, tau), 0.0);
            assert_eq!(beta_tau(0.0, tau), 1.0);
            assert_eq!(beta_tau(tau, tau), 1.0);
            assert_eq!(beta_tau(0.5 * tau, tau), 1.0);
            // Derivative bounds: 0 ≤ β' ≤ 2 on (−1,0), −2 ≤ β' ≤ 0 on (τ,τ+1).
            for k in 0..200 {
                let s = -1.0 + k as f64 / 200.0;
                let d = beta_tau_prime(s, tau);
                assert!((0.0..=2.0).contains(&d), "ramp-up bound at s={s}");
                let s2 = tau + k as f64 / 200.0;
                let d2 = beta_tau_prime(s2, tau);
                assert!((-2.0..=0.0).contains(&d2), "ramp-down bound at s={s2}");
            }
        }
        // Family tends to zero with τ.
        assert!(beta_tau(0.05, 0.1) <= 0.1 + 1e-15);
        assert_eq!(beta_tau(0.0, 0.0), 0.0);
    }

    #[test]
    fn cutoff_derivative_telescopes() {
        // ∫ β'_τ ds = 0 (trapezoid over a fine grid).
        for &tau in &[0.4f64, 1.0, 3.0] {
            let n = 400_000usize;
            let (a, b) = (-1.5, tau + 1.5);
            let hstep = (b - a) / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += w * beta_tau_prime(a + i as f64 * hstep, tau);
            }
            assert!((acc * hstep).abs() < 1e-10, "telescoping defect {}", acc * hstep);
        }
    }

    #[test]
    fn cutoff_derivative_is_consistent_with_value() {
        // Central finite differences of β_τ reproduce β'_τ (C¹ family).
        for &tau in &[0.7f64, 1.0, 2.3] {
            for k in 0..300 {
                let s = -1.4 + 0.015 * k as f64;
                let e = 1e-6;
                let fd = (beta_tau(s + e, tau) - beta_tau(s - e, tau)) / (2.0 * e);
                assert!(
                    (fd - beta_tau_prime(s, tau)).abs() < 1e-7,
                    "s={s} tau={tau}"
                );
            }
        }
    }

    #[test]
    fn alpha_and_radius() {
        assert_eq!(alpha(1.0f64), 32.0);
        assert_eq!(alpha(0.25f64), 5.0);
        assert_eq!(r0_radius(0.1f64), 1.0);
        assert_eq!(r0_radius(0.25f64), 1.0);
        assert_relative_eq!(r0_radius(32.0f64), R0_AT_32, max_relative = 1e-9);
        assert_relative_eq!(
            r0_radius(32.0f64),
            std::f64::consts::PI / 254.0f64.sqrt(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn barrier_values() {
        let mu = -std::f64::consts::PI.powi(2) / 8.0;
        assert_relative_eq!(barrier_kappa0(mu).unwrap(), KAPPA0_AT_MU, max_relative = 1e-10);
        // Independent closed form of the same constant.
        let closed = 4.0 * 2.0f64.sqrt()
            / (std::f64::consts::PI * (std::f64::consts::PI / 2.0f64.sqrt()).sin())
            - 8.0 / std::f64::consts::PI.powi(2);
        assert_relative_eq!(barrier_kappa0(mu).unwrap(), closed, max_relative = 1e-14);
        // Boundary value and limit-branch continuity.
        assert!(barrier_f(2.0, mu).unwrap().abs() < 1e-15);
        assert_relative_eq!(
            barrier_f(1e-9, mu).unwrap(),
            barrier_f(0.0, mu).unwrap(),
            max_relative = 1e-9
        );
        // (−Δ+μ)f = 1 radially: second-order FD check at interior points.
        let f = |r: f64| barrier_f(r, mu).unwrap();
        for &r in &[0.3, 0.7, 1.1, 1.6, 1.9] {
            let e = 1e-4;
            let lap = (f(r + e) - 2.0 * f(r) + f(r - e)) / (e * e)
                + (2.0 / r) * (f(r + e) - f(r - e)) / (2.0 * e);
            assert!((-lap + mu * f(r) - 1.0).abs() < 1e-6, "radial PDE at r={r}");
        }
    }

    #[test]
    fn ball_eigenfunction() {
        assert_relative_eq!(phi1(0.0f64), std::f64::consts::FRAC_PI_2, max_relative = 1e-15);
        assert_relative_eq!(phi1(1.5f64), 2.0f64.sqrt() / 3.0, max_relative = 1e-14);
        assert!(phi1(2.0f64).abs() < 1e-15);
        assert_relative_eq!(lambda1::<f64>(), std::f64::consts::PI.powi(2) / 4.0, max_relative = 1e-15);
        // Radial eigen-equation −φ₁'' − (2/ρ)φ₁' = λ₁φ₁ by FD.
        for &r in &[0.4, 0.9, 1.3, 1.8] {
            let e = 1e-4;
            let lap = (phi1(r + e) - 2.0 * phi1(r) + phi1(r - e)) / (e * e)
                + (2.0 / r) * (phi1(r + e) - phi1(r - e)) / (2.0 * e);
            assert!((-lap - lambda1::<f64>() * phi1(r)).abs() < 1e-5, "eigen PDE at ρ={r}");
        }
    }

    #[test]
    fn confinement_formulas() {
        assert_relative_eq!(
            flat_mode_decay_rate(1.0f64),
            LAMBDA_MINUS_10,
            max_relative = 1e-15
        );
        assert_relative_eq!(flat_mode_growth_rate(1.0f64), 1.618_033_988_749_894_9, max_relative = 1e-15);
        // r_* at the admissibility threshold equals R₀ exactly.
        for &a in &[0.2f64, 5.0, 32.0] {
            let c1 = c1_admissible_bound(a);
            assert_relative_eq!(r_star(c1, a), r0_radius(a), max_relative = 1e-13);
        }
        // Exponent law: halving c1 at fixed α multiplies the budget by 2^{−2/5}.
        let (ci, a, c1) = (3.7f64, 5.0f64, 1e-2f64);
        let ratio = linfty_budget(ci, a, 0.5 * c1) / linfty_budget(ci, a, c1);
        assert_relative_eq!(ratio, 2.0f64.powf(-0.4), max_relative = 1e-13);
    }

    #[test]
    fn kernels_are_generic_over_f32() {
        assert!((phi(0.0f32).unwrap() - 0.70710677f32).abs() < 1e-6);
        assert!((alpha(1.0f32) - 32.0).abs() < 1e-5);
        assert!((phi1(1.5f32) - 0.4714045f32).abs() < 1e-6);
    }

    use proptest::prelude::*;

    proptest! {
        // Cutoff family envelope: zero outside (−1, τ+1), the full plateau
        // for τ ≥ 1, |β| ≤ 1, and the two ramps carry the stated derivative
        // signs with |β'| ≤ 2.
        #[test]
        fn cutoff_family_envelope(tau in 0.0f64..6.0, s in -3.0f64..9.0) {
            let b = beta_tau(s, tau);
            let bp = beta_tau_prime(s, tau);
            prop_assert!((0.0..=1.0).contains(&b), "β = {b}");
            prop_assert!(b <= tau.min(1.0), "β = {b} exceeds the τ-amplitude");
            if s <= -1.0 || s >= tau + 1.0 {
                prop_assert_eq!(b, 0.0);
                prop_assert_eq!(bp, 0.0);
            } else if tau >= 1.0 && (0.0..=tau).contains(&s) {
                prop_assert_eq!(b, 1.0);
                prop_assert_eq!(bp, 0.0);
            }
            if s < 0.0 {
                prop_assert!((0.0..=2.0).contains(&bp), "rising ramp β' = {bp}");
            } else if s > tau {
                prop_assert!((-2.0..=0.0).contains(&bp), "falling ramp β' = {bp}");
            }
        }

        // The declared derivative matches a centered difference away from
        // the four breakpoints.
        #[test]
        fn cutoff_derivative_consistent(tau in 0.5f64..4.0, s in -2.0f64..7.0) {
            let dist = [-1.0, 0.0, tau, tau + 1.0]
                .iter()
                .map(|b| (s - b).abs())
                .fold(f64::INFINITY, f64::min);
            prop_assume!(dist > 1e-3);
            let eta = 1e-5;
            let fd = (beta_tau(s + eta, tau) - beta_tau(s - eta, tau)) / (2.0 * eta);
            prop_assert!(
                (fd - beta_tau_prime(s, tau)).abs() < 1e-6,
                "FD {fd} vs β' {}",
                beta_tau_prime(s, tau)
            );
        }

        // Per-mode dichotomy: for κ ≠ 0 exactly one decaying and one
        // growing rate, both roots of λ² − λ − |κ|² = 0.
        #[test]
        fn mode_rates_solve_the_symbol_quadratic(k2 in 1e-6f64..1e4) {
            let lm = flat_mode_decay_rate(k2);
            let lp = flat_mode_growth_rate(k2);
            prop_assert!(lm < 0.0 && lp > 0.0, "rates {lm}, {lp}");
            let scale = k2.max(1.0);
            prop_assert!((lm * lm - lm - k2).abs() <= 1e-11 * scale);
            prop_assert!((lp * lp - lp - k2).abs() <= 1e-11 * scale);
            prop_assert!((lm + lp - 1.0).abs() <= 1e-12, "trace identity");
        }
    }
}
