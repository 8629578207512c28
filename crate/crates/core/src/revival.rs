//! Fractional revivals at rational scaled times.
//!
//! For integer `K`, `e^{2πi(M/N)θ(n,m)}` is periodic in both `n` and `m` with
//! period `N`, so at `τ = 2πM/N` the evolved product coherent state is a finite
//! superposition
//!
//! ```text
//! Σ_{r,s=1..N} c_rs |α e^{2πir/N}⟩ ⊗ |β e^{2πis/N}⟩
//! ```
//!
//! whose coefficients are the inverse double DFT of the phase function.
//! All phase arguments are reduced modulo `N` in integer arithmetic first.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_integer::Integer;

use crate::fockspace::{coherent, TwoModeState};
use crate::{Error, Result, C64};

/// Moduli below this are reported as exact zeros in coefficient tables.
pub const ZERO_CLAMP: f64 = 1e-13;

/// Reduced fraction `M/N` for `τ = 2πM/N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RationalTau {
    m: u64,
    n: u64,
}

impl RationalTau {
    pub fn new(m: u64, n: u64) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Precondition(format!("M and N must be positive (got {m}/{n})")));
        }
        let g = m.gcd(&n);
        Ok(Self { m: m / g, n: n / g })
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    /// 2πM/N
    pub fn value(&self) -> f64 {
        2.0 * PI * self.m as f64 / self.n as f64
    }
}

/// θ(n,m,K) = (1+K)m + 2Knm − m², reduced modulo `modulus`.
pub fn theta_mod(n: i64, m: i64, k: i64, modulus: i64) -> i64 {
    let (n, m, k, q) = (n as i128, m as i128, k as i128, modulus as i128);
    let t = (1 + k) * m + 2 * k * n * m - m * m;
    t.rem_euclid(q) as i64
}

/// `(nr + ms − Mθ(n,m,K)) mod N`, the exponent shared by the coefficient
/// formula and the determining identity.
fn phase_index(n: i64, m: i64, r: i64, s: i64, tau: RationalTau, k: i64) -> usize {
    let q = tau.n as i128;
    let th = theta_mod(n, m, k, tau.n as i64) as i128;
    let e = n as i128 * r as i128 + m as i128 * s as i128 - tau.m as i128 * th;
    e.rem_euclid(q) as usize
}

/// `e^{2πij/N}` for `j = 0..N`.
fn roots_of_unity(n: u64) -> Vec<C64> {
    (0..n).map(|j| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64)).collect()
}

/// `N × N` coefficients `c_rs`, stored 0-based at `(r−1, s−1)`. Rows follow
/// the photon phase `φ_r`, columns the atom phase `φ_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientGrid {
    c: DMatrix<C64>,
}

impl CoefficientGrid {
    pub fn from_matrix(c: DMatrix<C64>) -> Result<Self> {
        if c.nrows() != c.ncols() || c.nrows() == 0 {
            return Err(Error::Dimension("coefficient grid must be square and non-empty".into()));
        }
        Ok(Self { c })
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    /// `c_rs` with 1-based `r, s`.
    pub fn get(&self, r: usize, s: usize) -> C64 {
        self.c[(r - 1, s - 1)]
    }

    pub fn set(&mut self, r: usize, s: usize, value: C64) {
        self.c[(r - 1, s - 1)] = value;
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.c
    }

    /// Σ |c_rs|²
    pub fn total_weight(&self) -> f64 {
        self.c.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Entries with modulus at or above [`ZERO_CLAMP`], as `(r, s, c_rs)` in
    /// row-major order.
    pub fn nonzero_entries(&self) -> Vec<(usize, usize, C64)> {
        let n = self.n();
        let mut out = Vec::new();
        for r in 1..=n {
            for s in 1..=n {
                let z = self.get(r, s);
                if z.norm() >= ZERO_CLAMP {
                    out.push((r, s, z));
                }
            }
        }
        out
    }
}

fn check_k(k: i64) -> Result<()> {
    if k == 0 {
        return Err(Error::Precondition("K must be a nonzero integer".into()));
    }
    Ok(())
}

/// Converts a real `K` to the integer the revival formulas require.
pub fn integer_k(k: f64) -> Result<i64> {
    if !k.is_finite() || k.fract() != 0.0 || k.abs() > i64::MAX as f64 / 4.0 {
        return Err(Error::Precondition(format!("K = {k} is not an integer")));
    }
    let k = k as i64;
    check_k(k)?;
    Ok(k)
}

/// `c_rs = N⁻² Σ_{n,m=1..N} exp{−(2πi/N)[nr + ms − Mθ(n,m,K)]}`.
pub fn coefficients(tau: RationalTau, k: i64) -> Result<CoefficientGrid> {
    check_k(k)?;
    let n = tau.n as usize;
    let roots = roots_of_unity(tau.n);
    let norm = 1.0 / (n * n) as f64;
    let c = DMatrix::from_fn(n, n, |r0, s0| {
        let (r, s) = (r0 as i64 + 1, s0 as i64 + 1);
        let mut acc = C64::new(0.0, 0.0);
        for nn in 1..=n as i64 {
            for mm in 1..=n as i64 {
                acc += roots[phase_index(nn, mm, r, s, tau, k)].conj();
            }
        }
        acc * norm
    });
    Ok(CoefficientGrid { c })
}

/// `max_{n,m ∈ 1..N} |Σ_{r,s} c_rs exp{(2πi/N)[nr + ms − Mθ(n,m,K)]} − 1|`.
pub fn verify_determining_identity(grid: &CoefficientGrid, tau: RationalTau, k: i64) -> Result<f64> {
    if grid.n() != tau.n as usize {
        return Err(Error::Dimension(format!("grid is {0}x{0} but N = {1}", grid.n(), tau.n)));
    }
    let n = grid.n();
    let roots = roots_of_unity(tau.n);
    let mut worst: f64 = 0.0;
    for nn in 1..=n as i64 {
        for mm in 1..=n as i64 {
            let mut acc = C64::new(0.0, 0.0);
            for r in 1..=n {
                for s in 1..=n {
                    acc += grid.get(r, s) * roots[phase_index(nn, mm, r as i64, s as i64, tau, k)];
                }
            }
            worst = worst.max((acc - 1.0).norm());
        }
    }
    Ok(worst)
}

/// `Σ_{r,s} c_rs |α e^{iφ_r}⟩ ⊗ |β e^{iφ_s}⟩`, φ_j = 2πj/N. No renormalization.
pub fn assemble(
    grid: &CoefficientGrid,
    alpha: C64,
    beta: C64,
    photon_cutoff: usize,
    atom_cutoff: usize,
) -> TwoModeState {
    let n = grid.n();
    let phase = |j: usize| C64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
    // Columns are the rotated coherent states; the sum is P · C · Aᵀ.
    let mut photon = DMatrix::<C64>::zeros(photon_cutoff + 1, n);
    let mut atom = DMatrix::<C64>::zeros(atom_cutoff + 1, n);
    for j in 1..=n {
        let p = coherent(alpha * phase(j), photon_cutoff);
        let a = coherent(beta * phase(j), atom_cutoff);
        photon.set_column(j - 1, &nalgebra::DVector::from_column_slice(p.amplitudes()));
        atom.set_column(j - 1, &nalgebra::DVector::from_column_slice(a.amplitudes()));
    }
    let amplitudes = &photon * grid.matrix() * atom.transpose();
    TwoModeState::from_matrix(amplitudes).expect("cutoffs give a non-empty grid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective_model::{evolve, theta};
    use crate::fockspace::{default_cutoff, fidelity_up_to_global_phase, normalize, tensor};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn rational_tau_reduces() {
        let t = RationalTau::new(6, 8).unwrap();
        assert_eq!((t.m(), t.n()), (3, 4));
        assert!((t.value() - 1.5 * PI).abs() < 1e-15);
        assert!(RationalTau::new(0, 3).is_err());
        assert!(RationalTau::new(1, 0).is_err());
    }

    #[test]
    fn quarter_period_table() {
        let g = coefficients(RationalTau::new(1, 4).unwrap(), -1).unwrap();
        assert!(close(g.get(2, 2), c(0.0, 0.5)));
        assert!(close(g.get(2, 4), c(0.0, -0.5)));
        assert!(close(g.get(4, 2), c(0.5, 0.0)));
        assert!(close(g.get(4, 4), c(0.5, 0.0)));
        let nz: Vec<_> = g.nonzero_entries().iter().map(|&(r, s, _)| (r, s)).collect();
        assert_eq!(nz, vec![(2, 2), (2, 4), (4, 2), (4, 4)]);
    }

    #[test]
    fn third_period_table() {
        let g = coefficients(RationalTau::new(1, 3).unwrap(), -1).unwrap();
        let a = -C64::from_polar(1.0, -PI / 3.0) / 3.0;
        let b = -C64::from_polar(1.0, PI / 3.0) / 3.0;
        let third = c(1.0 / 3.0, 0.0);
        assert!(close(g.get(1, 1), a));
        assert!(close(g.get(2, 2), a));
        assert!(close(g.get(1, 3), b));
        assert!(close(g.get(2, 3), b));
        for (r, s) in [(1, 2), (2, 1), (3, 1), (3, 2), (3, 3)] {
            assert!(close(g.get(r, s), third), "c_{r}{s} = {}", g.get(r, s));
        }
    }

    #[test]
    fn parseval_holds() {
        for (m, n, k) in [(1, 4, -1), (1, 3, -1), (1, 8, -1), (3, 7, 2), (5, 12, -3), (1, 1, 1)] {
            let g = coefficients(RationalTau::new(m, n).unwrap(), k).unwrap();
            assert!((g.total_weight() - 1.0).abs() < 1e-12, "{m}/{n} K={k}");
        }
    }

    #[test]
    fn k_zero_rejected() {
        assert!(matches!(coefficients(RationalTau::new(1, 4).unwrap(), 0), Err(Error::Precondition(_))));
        assert!(integer_k(0.5).is_err());
        assert!(integer_k(0.0).is_err());
        assert_eq!(integer_k(-2.0).unwrap(), -2);
    }

    #[test]
    fn identity_residuals() {
        let tau = RationalTau::new(1, 4).unwrap();
        let g = coefficients(tau, -1).unwrap();
        assert!(verify_determining_identity(&g, tau, -1).unwrap() < 1e-12);

        let mut broken = g.clone();
        broken.set(2, 2, c(0.0, 0.0));
        assert!(verify_determining_identity(&broken, tau, -1).unwrap() > 0.1);

        let one = RationalTau::new(1, 1).unwrap();
        let g1 = coefficients(one, 1).unwrap();
        assert_eq!(g1.n(), 1);
        assert!((g1.get(1, 1).norm() - 1.0).abs() < 1e-15);
        assert!(verify_determining_identity(&g1, one, 1).unwrap() < 1e-14);

        assert!(matches!(
            verify_determining_identity(&g, RationalTau::new(1, 3).unwrap(), -1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn phase_periodicity_is_exact() {
        for k in [-3i64, -2, -1, 1, 2, 5] {
            for n in 1..=9i64 {
                for a in 0..=2 * n {
                    for b in 0..=2 * n {
                        assert_eq!(theta_mod(a + n, b + n, k, n), theta_mod(a, b, k, n));
                    }
                }
            }
        }
    }

    #[test]
    fn theta_mod_matches_float_theta() {
        for k in [-2i64, -1, 1, 3] {
            for n in 0..12i64 {
                for m in 0..12i64 {
                    let t = theta(n as u64, m as u64, k as f64) as i64;
                    assert_eq!(theta_mod(n, m, k, 7), t.rem_euclid(7));
                }
            }
        }
    }

    fn evolved_and_assembled(m: u64, n: u64, k: i64, alpha: C64, beta: C64) -> f64 {
        let (pc, ac) = (default_cutoff(alpha), default_cutoff(beta));
        let tau = RationalTau::new(m, n).unwrap();
        let s = tensor(&coherent(alpha, pc), &coherent(beta, ac));
        let evolved = normalize(&evolve(&s, tau.value(), k as f64)).unwrap();
        let grid = coefficients(tau, k).unwrap();
        let built = normalize(&assemble(&grid, alpha, beta, pc, ac)).unwrap();
        fidelity_up_to_global_phase(&evolved, &built).unwrap()
    }

    #[test]
    fn assembled_states_match_evolution() {
        for n in [3, 4, 8] {
            let f = evolved_and_assembled(1, n, -1, c(2.0, 0.0), c(2.0, 0.0));
            assert!(f >= 1.0 - 1e-10, "N={n}: {f}");
        }
    }

    #[test]
    fn assembled_is_exact_not_just_up_to_phase() {
        let (alpha, beta) = (c(1.0, 0.5), c(-0.8, 0.3));
        let tau = RationalTau::new(1, 4).unwrap();
        let s = tensor(&coherent(alpha, 26), &coherent(beta, 26));
        let evolved = evolve(&s, tau.value(), -1.0);
        let built = assemble(&coefficients(tau, -1).unwrap(), alpha, beta, 26, 26);
        assert!(evolved.max_abs_diff(&built).unwrap() < 1e-12);
    }

    #[test]
    fn single_term_revival() {
        let g = coefficients(RationalTau::new(1, 1).unwrap(), 2).unwrap();
        let (alpha, beta) = (c(0.7, 0.1), c(0.2, -0.4));
        let s = assemble(&g, alpha, beta, 24, 24);
        let product = tensor(&coherent(alpha, 24), &coherent(beta, 24));
        let ratio = g.get(1, 1);
        assert!((ratio.norm() - 1.0).abs() < 1e-14);
        assert!(s.max_abs_diff(&product.scaled(ratio)).unwrap() < 1e-14);
    }

    #[test]
    fn vacuum_revival_collapses() {
        for (m, n) in [(1, 3), (1, 4), (3, 8)] {
            let g = coefficients(RationalTau::new(m, n).unwrap(), -1).unwrap();
            let s = assemble(&g, c(0.0, 0.0), c(0.0, 0.0), 5, 5);
            let sum: C64 = g.matrix().iter().sum();
            assert!((sum.norm() - 1.0).abs() < 1e-12);
            assert!((s.get(0, 0) - sum).norm() < 1e-14);
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn index_convention_photon_rows() {
        // At M/N = 1/4, K = −1 the photon branch |α⟩ (r = 4) carries the
        // even atomic cat and |−α⟩ (r = 2) the odd one.
        let g = coefficients(RationalTau::new(1, 4).unwrap(), -1).unwrap();
        assert!(close(g.get(4, 2), g.get(4, 4)));
        assert!(close(g.get(2, 2), -g.get(2, 4)));
    }

    proptest! {
        #[test]
        fn revival_equivalence(
            n in 1u64..=8, m_raw in 1u64..=8,
            k in prop::sample::select(vec![-2i64, -1, 1, 2]),
            ar in 0.0f64..2.5, ap in 0.0f64..6.3,
            br in 0.0f64..2.5, bp in 0.0f64..6.3,
        ) {
            let m = (m_raw - 1) % n + 1;
            prop_assume!(m.gcd(&n) == 1);
            let f = evolved_and_assembled(m, n, k, C64::from_polar(ar, ap), C64::from_polar(br, bp));
            prop_assert!(f >= 1.0 - 1e-9, "{}/{} K={}: {}", m, n, k, f);
        }

        #[test]
        fn parseval_and_identity(n in 1u64..=12, m in 1u64..=24, k in -4i64..=4) {
            prop_assume!(k != 0);
            let tau = RationalTau::new(m, n).unwrap();
            let g = coefficients(tau, k).unwrap();
            prop_assert!((g.total_weight() - 1.0).abs() < 1e-12);
            prop_assert!(verify_determining_identity(&g, tau, k).unwrap() < 1e-12);
        }
    }
}
