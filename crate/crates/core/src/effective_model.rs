//! Effective photon/atom Hamiltonian left after eliminating the two upper
//! atomic levels:
//!
//! ```text
//! H = 2ω'₁ m + 4ω'₁ n m + λ₁ m(m − 1),     ω'₁ = −|g₁|²/Δ
//! ```
//!
//! It is diagonal in `|n, m⟩`, so evolution is a phase per basis amplitude.
//! In scaled time `τ = λ₁ t` the phase is `e^{iτθ(n,m)}` with
//! `θ(n,m) = (1+K)m + 2Knm − m²` and `K = 2|g₁|²/(λ₁Δ)`.

use rayon::prelude::*;

use crate::fockspace::TwoModeState;
use crate::{Error, Result, C64};

/// Couplings of the Λ system and the quantities derived from them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveParams {
    pub g1: C64,
    pub g2: C64,
    pub delta: f64,
    pub lambda1: f64,
    /// ω'₁ = −|g₁|²/Δ
    pub omega1p: f64,
    /// ω'₃ = −|g₂|²/Δ
    pub omega3p: f64,
    /// g' = −g₁ g₂*/Δ
    pub gprime: C64,
    /// K = 2|g₁|²/(λ₁Δ)
    pub k: f64,
}

impl EffectiveParams {
    /// `|g₁/g₂|²`; the elimination assumes this is small.
    pub fn coupling_ratio_sq(&self) -> f64 {
        if self.g2.norm_sqr() == 0.0 {
            f64::INFINITY
        } else {
            self.g1.norm_sqr() / self.g2.norm_sqr()
        }
    }

    /// Whether `|g₁/g₂|² < 1`. Parameters outside are accepted but should be
    /// reported as such.
    pub fn in_elimination_regime(&self) -> bool {
        self.coupling_ratio_sq() < 1.0
    }
}

pub fn derive_params(g1: C64, g2: C64, delta: f64, lambda1: f64) -> Result<EffectiveParams> {
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::Domain("two-photon detuning must be finite and nonzero".into()));
    }
    if lambda1 == 0.0 || !lambda1.is_finite() {
        return Err(Error::Domain("lambda1 must be finite and nonzero".into()));
    }
    let params = EffectiveParams {
        g1,
        g2,
        delta,
        lambda1,
        omega1p: -g1.norm_sqr() / delta,
        omega3p: -g2.norm_sqr() / delta,
        gprime: -g1 * g2.conj() / delta,
        k: 2.0 * g1.norm_sqr() / (lambda1 * delta),
    };
    if !params.in_elimination_regime() {
        log::warn!(
            "|g1/g2|^2 = {} is not small; the two-mode reduction is not expected to hold",
            params.coupling_ratio_sq()
        );
    }
    Ok(params)
}

/// Running frequency θ(n, m) = (1+K)m + 2Knm − m².
pub fn theta(n: u64, m: u64, k: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    (1.0 + k) * m + 2.0 * k * n * m - m * m
}

/// Eigenvalue of `|n, m⟩`: 2ω'₁m + 4ω'₁nm + λ₁m(m−1).
pub fn energy(n: u64, m: u64, p: &EffectiveParams) -> f64 {
    let (n, m) = (n as f64, m as f64);
    2.0 * p.omega1p * m + 4.0 * p.omega1p * n * m + p.lambda1 * m * (m - 1.0)
}

/// Multiplies each amplitude by `e^{iτθ(n,m)}`. Expects a normalized state but
/// works on any; the map is unitary.
pub fn evolve(initial: &TwoModeState, tau: f64, k: f64) -> TwoModeState {
    initial.map_indexed(|n, m, a| a * C64::from_polar(1.0, tau * theta(n as u64, m as u64, k)))
}

/// Evolution in physical time through the spectrum, `e^{−iE(n,m)t}`.
pub fn evolve_physical(initial: &TwoModeState, t: f64, p: &EffectiveParams) -> TwoModeState {
    initial.map_indexed(|n, m, a| a * C64::from_polar(1.0, -energy(n as u64, m as u64, p) * t))
}

/// [`evolve`] over many scaled times, one parallel task per time. Output
/// order follows `taus`.
pub fn evolve_many(initial: &TwoModeState, taus: &[f64], k: f64) -> Vec<TwoModeState> {
    taus.par_iter().map(|&tau| evolve(initial, tau, k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{coherent, default_cutoff, fidelity_up_to_global_phase, normalize, tensor};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn product(alpha: C64, beta: C64) -> TwoModeState {
        tensor(&coherent(alpha, default_cutoff(alpha)), &coherent(beta, default_cutoff(beta)))
    }

    #[test]
    fn derived_parameters() {
        let p = derive_params(c(1.0, 0.0), c(10.0, 0.0), 2.0, 1.0).unwrap();
        assert_eq!(p.k, 1.0);
        assert_eq!(p.omega1p, -0.5);
        assert_eq!(p.omega3p, -50.0);
        assert_eq!(p.gprime, c(-5.0, 0.0));
        assert!(p.in_elimination_regime());

        let q = derive_params(c(1.0, 0.0), c(10.0, 0.0), -2.0, 1.0).unwrap();
        assert_eq!(q.k, -p.k);
        assert_eq!(q.omega1p, -p.omega1p);

        let z = derive_params(c(0.0, 0.0), c(10.0, 0.0), 2.0, 1.0).unwrap();
        assert_eq!((z.k, z.omega1p, z.gprime), (0.0, 0.0, c(0.0, 0.0)));
    }

    #[test]
    fn k_is_exact_and_signed() {
        for (g1, delta, l1) in [(0.3, 2.5, 0.7), (1.7, -0.4, 0.2), (0.9, 3.0, -1.5)] {
            let p = derive_params(c(g1 * 0.6, g1 * 0.8), c(5.0, 0.0), delta, l1).unwrap();
            assert_eq!(p.k, 2.0 * p.g1.norm_sqr() / (l1 * delta));
            assert_eq!(p.k.signum(), (l1 * delta).signum());
        }
    }

    #[test]
    fn outside_regime_is_flagged_not_rejected() {
        let p = derive_params(c(2.0, 0.0), c(1.0, 0.0), 1.0, 1.0).unwrap();
        assert!(!p.in_elimination_regime());
    }

    #[test]
    fn zero_detuning_or_collision_rejected() {
        assert!(matches!(derive_params(c(1.0, 0.0), c(1.0, 0.0), 0.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(derive_params(c(1.0, 0.0), c(1.0, 0.0), 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn theta_values() {
        for n in 0..5 {
            assert_eq!(theta(n, 0, 0.37), 0.0);
        }
        assert_eq!(theta(1, 1, -1.0), -3.0);
        assert_eq!(theta(0, 1, 1.0), 1.0);
    }

    #[test]
    fn energy_values() {
        let p = derive_params(c(1.0, 0.0), c(10.0, 0.0), 2.0, 1.0).unwrap();
        assert_eq!(energy(3, 0, &p), 0.0);
        assert_eq!(p.omega1p, -0.5);
        assert_eq!(energy(0, 2, &p), 0.0);
    }

    #[test]
    fn spectrum_identity_on_grid() {
        // E(n,m) t = −θ(n,m,K) τ with τ = λ₁ t
        let sets = [
            (0.31, 0.12, 4.0, 0.5, 1.0, 0.9),
            (1.2, -0.4, 7.0, -2.0, 0.3, 2.0),
            (0.05, 0.0, 1.0, 0.7, -0.8, 0.1),
            (2.0, 1.0, 9.0, 3.3, 2.2, 1.7),
            (0.6, 0.6, 3.0, -0.9, -0.4, 4.0),
            (0.01, 0.2, 2.0, 1.1, 5.0, 0.3),
            (0.8, -0.1, 5.0, 10.0, 0.05, 12.0),
            (1.5, 0.5, 6.0, -3.0, 1.4, 0.02),
            (0.2, 0.9, 8.0, 0.25, -2.5, 6.0),
            (0.45, -0.7, 2.5, -0.6, 0.9, 3.3),
        ];
        for (g1r, g1i, g2, delta, l1, t) in sets {
            let p = derive_params(c(g1r, g1i), c(g2, 0.0), delta, l1).unwrap();
            for n in 0..20u64 {
                for m in 0..20u64 {
                    let lhs = energy(n, m, &p) * t;
                    let rhs = -theta(n, m, p.k) * l1 * t;
                    assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()), "{n},{m}: {lhs} vs {rhs}");
                }
            }
        }
    }

    #[test]
    fn scaled_and_physical_evolution_agree() {
        let p = derive_params(c(0.4, 0.1), c(3.0, 0.0), 1.3, 0.45).unwrap();
        let s = product(c(1.0, 0.5), c(-0.7, 0.2));
        let t = 2.7;
        let a = evolve(&s, p.lambda1 * t, p.k);
        let b = evolve_physical(&s, t, &p);
        assert!(a.max_abs_diff(&b).unwrap() < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let s = product(c(1.0, 0.0), c(0.5, 0.5));
        assert_eq!(evolve(&s, 0.0, -1.0), s);
    }

    #[test]
    fn integer_k_full_period_returns_initial_state() {
        let s = normalize(&product(c(2.0, 0.0), c(2.0, 0.0))).unwrap();
        for k in [-2.0, -1.0, 1.0, 3.0] {
            let f = fidelity_up_to_global_phase(&s, &evolve(&s, 2.0 * PI, k)).unwrap();
            assert!((1.0 - f).abs() < 1e-12, "K={k}: {f}");
        }
    }

    #[test]
    fn parallel_sweep_preserves_order() {
        let s = product(c(0.8, 0.0), c(0.8, 0.0));
        let taus = [0.0, 0.3, 1.1, 2.0, 5.5];
        let many = evolve_many(&s, &taus, -1.0);
        for (tau, out) in taus.iter().zip(&many) {
            assert_eq!(*out, evolve(&s, *tau, -1.0));
        }
    }

    proptest! {
        #[test]
        fn evolution_is_phase_only(
            ar in -2.0f64..2.0, ai in -2.0f64..2.0,
            br in -2.0f64..2.0, bi in -2.0f64..2.0,
            tau in -10.0f64..10.0, k in -3.0f64..3.0,
        ) {
            let s = product(c(ar, ai), c(br, bi));
            let e = evolve(&s, tau, k);
            prop_assert!((e.norm() - s.norm()).abs() < 1e-13);
            for (x, y) in s.amplitudes().iter().zip(e.amplitudes().iter()) {
                prop_assert!((x.norm() - y.norm()).abs() < 1e-15);
            }
            let (p0, p1) = (s.photon_marginal(), e.photon_marginal());
            for (x, y) in p0.iter().zip(&p1) {
                prop_assert!((x - y).abs() < 1e-15);
            }
        }

        #[test]
        fn group_property(tau1 in -5.0f64..5.0, tau2 in -5.0f64..5.0, k in -2.0f64..2.0) {
            let s = product(c(1.0, 0.3), c(-0.6, 0.9));
            let two_step = evolve(&evolve(&s, tau1, k), tau2, k);
            let one_step = evolve(&s, tau1 + tau2, k);
            prop_assert!(two_step.max_abs_diff(&one_step).unwrap() < 1e-12);
        }
    }
}
