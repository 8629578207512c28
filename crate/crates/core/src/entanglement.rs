//! Concurrence of two-term superpositions `μ|η⟩|γ⟩ + ν|ξ⟩|δ⟩` with
//! nonorthogonal components, its closed form for the two-branch catalog
//! states, and a Schmidt-spectrum oracle for arbitrary two-mode states.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::catalog::{yurke_stoler_cat, CatSign, YsVariant};
use crate::fockspace::{coherent, Cutoffs, TruncatedMode, TwoModeState, NORMALIZED_TOL};
use crate::{Error, Result, C64};

/// Component states must be normalized to this accuracy.
pub const COMPONENT_NORM_TOL: f64 = 1e-10;
/// Overlap magnitude above which the two components are treated as linearly
/// dependent.
pub const DEGENERATE_OVERLAP: f64 = 1.0 - 1e-12;
/// Overlap magnitude above which the closed form is abandoned for the
/// numerical Schmidt route.
pub const ILL_CONDITIONED_OVERLAP: f64 = 1.0 - 1e-6;

/// `μ|η⟩⊗|γ⟩ + ν|ξ⟩⊗|δ⟩` with normalized component states.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoTermBipartite {
    mu: C64,
    nu: C64,
    eta: TruncatedMode,
    xi: TruncatedMode,
    gamma: TruncatedMode,
    delta: TruncatedMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConcurrenceMethod {
    /// Closed form in the overlaps.
    Analytic,
    /// Numerical Schmidt decomposition of the assembled state.
    Schmidt,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcurrenceResult {
    /// ⟨η|ξ⟩
    pub p1: C64,
    /// ⟨δ|γ⟩
    pub p2: C64,
    /// N² = |μ|² + |ν|² + 2Re(μ*ν p₁ p₂*)
    pub norm_sq: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub concurrence: f64,
    pub method: ConcurrenceMethod,
}

fn check_component(name: &str, m: &TruncatedMode) -> Result<()> {
    let d = (m.norm() - 1.0).abs();
    if d > COMPONENT_NORM_TOL {
        return Err(Error::Contract(format!("component {name} has norm defect {d:e}")));
    }
    Ok(())
}

impl TwoTermBipartite {
    pub fn new(
        mu: C64,
        nu: C64,
        eta: TruncatedMode,
        xi: TruncatedMode,
        gamma: TruncatedMode,
        delta: TruncatedMode,
    ) -> Result<Self> {
        for (name, m) in [("eta", &eta), ("xi", &xi), ("gamma", &gamma), ("delta", &delta)] {
            check_component(name, m)?;
        }
        if eta.cutoff() != xi.cutoff() || gamma.cutoff() != delta.cutoff() {
            return Err(Error::Dimension("components of one subsystem differ in cutoff".into()));
        }
        Ok(Self { mu, nu, eta, xi, gamma, delta })
    }

    pub fn mu(&self) -> C64 {
        self.mu
    }

    pub fn nu(&self) -> C64 {
        self.nu
    }

    /// ⟨η|ξ⟩
    pub fn p1(&self) -> C64 {
        self.eta.inner(&self.xi).expect("checked cutoffs")
    }

    /// ⟨δ|γ⟩
    pub fn p2(&self) -> C64 {
        self.delta.inner(&self.gamma).expect("checked cutoffs")
    }

    pub fn norm_sq(&self) -> f64 {
        let (p1, p2) = (self.p1(), self.p2());
        self.mu.norm_sqr() + self.nu.norm_sqr() + 2.0 * (self.mu.conj() * self.nu * p1 * p2.conj()).re
    }

    /// Unnormalized `μ|η⟩|γ⟩ + ν|ξ⟩|δ⟩`.
    pub fn to_unnormalized_state(&self) -> TwoModeState {
        let a = crate::fockspace::tensor(&self.eta, &self.gamma);
        let b = crate::fockspace::tensor(&self.xi, &self.delta);
        TwoModeState::combine(&[(self.mu, &a), (self.nu, &b)]).expect("equal shapes")
    }

    /// The state divided by N.
    pub fn to_state(&self) -> Result<TwoModeState> {
        crate::fockspace::normalize(&self.to_unnormalized_state())
    }

    /// Amplitudes `[c₀₀, c₀₁, c₁₀, c₁₁]` in the orthonormal bases
    /// `{|η⟩, ∝|ξ⟩ − p₁|η⟩}` and `{|δ⟩, ∝|γ⟩ − p₂|δ⟩}`.
    pub fn qubit_amplitudes(&self) -> [C64; 4] {
        let (p1, p2) = (self.p1(), self.p2());
        let n = self.norm_sq().sqrt();
        let s1 = (1.0 - p1.norm_sqr()).max(0.0).sqrt();
        let s2 = (1.0 - p2.norm_sqr()).max(0.0).sqrt();
        [(self.mu * p2 + self.nu * p1) / n, self.mu * s2 / n, self.nu * s1 / n, C64::new(0.0, 0.0)]
    }

    /// The qubit bases themselves, `([|0⟩₁, |1⟩₁], [|0⟩₂, |1⟩₂])`.
    pub fn qubit_bases(&self) -> Result<([TruncatedMode; 2], [TruncatedMode; 2])> {
        let one = C64::new(1.0, 0.0);
        let (p1, p2) = (self.p1(), self.p2());
        let e1 = TruncatedMode::combine(&[(one, &self.xi), (-p1, &self.eta)])?.normalized()?;
        let e2 = TruncatedMode::combine(&[(one, &self.gamma), (-p2, &self.delta)])?.normalized()?;
        Ok(([self.eta.clone(), e1], [self.delta.clone(), e2]))
    }
}

/// `λ± = ½(1 ± √(1 − C²))`, with λ₋ taken as `C²/(4λ₊)` to keep it accurate
/// when C is small.
pub fn schmidt_weights(concurrence: f64) -> (f64, f64) {
    let c2 = concurrence * concurrence;
    let plus = 0.5 * (1.0 + (1.0 - c2).max(0.0).sqrt());
    (plus, c2 / (4.0 * plus))
}

pub fn two_term_concurrence(s: &TwoTermBipartite) -> Result<ConcurrenceResult> {
    let (p1, p2) = (s.p1(), s.p2());
    let worst = p1.norm().max(p2.norm());
    if worst >= DEGENERATE_OVERLAP {
        return Err(Error::Degenerate(format!(
            "component overlap {worst} leaves no two-dimensional subspace; use the Schmidt spectrum"
        )));
    }
    let norm_sq = s.norm_sq();
    if norm_sq <= 0.0 {
        return Err(Error::Domain("superposition vanishes".into()));
    }
    if worst > ILL_CONDITIONED_OVERLAP {
        log::warn!("component overlap {worst} is close to 1; using the numerical Schmidt route");
        let state = s.to_state()?;
        let c = schmidt_concurrence(&state)?;
        let (lambda_plus, lambda_minus) = schmidt_weights(c);
        return Ok(ConcurrenceResult {
            p1,
            p2,
            norm_sq,
            lambda_plus,
            lambda_minus,
            concurrence: c,
            method: ConcurrenceMethod::Schmidt,
        });
    }
    let concurrence = (2.0 * s.mu.norm() * s.nu.norm() / norm_sq
        * ((1.0 - p1.norm_sqr()) * (1.0 - p2.norm_sqr())).sqrt())
    .clamp(0.0, 1.0);
    let (lambda_plus, lambda_minus) = schmidt_weights(concurrence);
    Ok(ConcurrenceResult {
        p1,
        p2,
        norm_sq,
        lambda_plus,
        lambda_minus,
        concurrence,
        method: ConcurrenceMethod::Analytic,
    })
}

/// √((1 − e^{−4|α|²})(1 − e^{−4|β|²}))
pub fn closed_form_concurrence(alpha: C64, beta: C64) -> f64 {
    let fa = -(-4.0 * alpha.norm_sqr()).exp_m1();
    let fb = -(-4.0 * beta.norm_sqr()).exp_m1();
    (fa * fb).sqrt()
}

fn unit(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// The two-branch state as `(β₊/2)|α⟩|β⟩₊ − i(β₋/2)|−α⟩|β⟩₋` with normalized
/// atomic cats. Needs `β ≠ 0`.
pub fn two_state_decomposition(alpha: C64, beta: C64, cutoffs: Cutoffs) -> Result<TwoTermBipartite> {
    use crate::catalog::{cat_normalizer, even_odd_cat, Parity};
    let bp = cat_normalizer(beta, Parity::Even);
    let bm = cat_normalizer(beta, Parity::Odd);
    TwoTermBipartite::new(
        unit(bp / 2.0),
        C64::new(0.0, -bm / 2.0),
        coherent(alpha, cutoffs.photon),
        coherent(-alpha, cutoffs.photon),
        even_odd_cat(beta, Parity::Even, cutoffs.atom)?,
        even_odd_cat(beta, Parity::Odd, cutoffs.atom)?,
    )
}

/// The same state as `(1/√2)[|α⟩₋|β⟩ + |α⟩₊|−β⟩]` with photon Yurke–Stoler cats.
pub fn two_state_alt_decomposition(alpha: C64, beta: C64, cutoffs: Cutoffs) -> Result<TwoTermBipartite> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    TwoTermBipartite::new(
        unit(r),
        unit(r),
        yurke_stoler_cat(alpha, CatSign::Minus, cutoffs.photon),
        yurke_stoler_cat(alpha, CatSign::Plus, cutoffs.photon),
        coherent(beta, cutoffs.atom),
        coherent(-beta, cutoffs.atom),
    )
}

/// Decomposition of the two Yurke–Stoler entangled coherent states.
pub fn ys_decomposition(alpha: C64, beta: C64, variant: YsVariant, cutoffs: Cutoffs) -> Result<TwoTermBipartite> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (pb, mb) = (coherent(beta, cutoffs.atom), coherent(-beta, cutoffs.atom));
    let (gamma, delta, nu) = match variant {
        YsVariant::Aligned => (pb, mb, C64::new(0.0, r)),
        YsVariant::Crossed => (mb, pb, C64::new(0.0, -r)),
    };
    TwoTermBipartite::new(unit(r), nu, coherent(alpha, cutoffs.photon), coherent(-alpha, cutoffs.photon), gamma, delta)
}

fn check_normalized(s: &TwoModeState) -> Result<()> {
    let d = (s.norm() - 1.0).abs();
    if d > NORMALIZED_TOL {
        return Err(Error::Contract(format!("state norm defect {d:e} exceeds {NORMALIZED_TOL:e}")));
    }
    Ok(())
}

fn hermitian_spectrum(rho: DMatrix<C64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(rho).eigenvalues.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// Eigenvalues of the photon reduced density operator, descending, clamped
/// to `[0, 1]`.
pub fn schmidt_spectrum(s: &TwoModeState) -> Result<Vec<f64>> {
    check_normalized(s)?;
    let a = s.amplitudes();
    Ok(hermitian_spectrum(a * a.adjoint()))
}

/// Eigenvalues of the atom reduced density operator, descending.
pub fn schmidt_spectrum_atom(s: &TwoModeState) -> Result<Vec<f64>> {
    check_normalized(s)?;
    let a = s.amplitudes();
    Ok(hermitian_spectrum(a.transpose() * a.conjugate()))
}

/// `2√(λ₁λ₂)` of the two largest Schmidt weights, computed from singular
/// values of the amplitude matrix so it stays accurate for weakly
/// entangled states.
pub fn schmidt_concurrence(s: &TwoModeState) -> Result<f64> {
    check_normalized(s)?;
    let mut sv: Vec<f64> = s.amplitudes().clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let s1 = sv.first().copied().unwrap_or(0.0);
    let s2 = sv.get(1).copied().unwrap_or(0.0);
    Ok((2.0 * s1 * s2).clamp(0.0, 1.0))
}

/// `√(2(1 − Σλ²))`; equals `2√(λ₁λ₂)` when the Schmidt rank is two.
pub fn generalized_concurrence(s: &TwoModeState) -> Result<f64> {
    let purity: f64 = schmidt_spectrum(s)?.iter().map(|l| l * l).sum();
    Ok((2.0 * (1.0 - purity)).max(0.0).sqrt())
}

/// Von Neumann entropy of either reduced state, in bits.
pub fn entanglement_entropy(s: &TwoModeState) -> Result<f64> {
    Ok(schmidt_spectrum(s)?.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.log2()).sum::<f64>().max(0.0))
}
