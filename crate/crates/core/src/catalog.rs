//! Closed-form target states: even/odd and Yurke–Stoler cats, and the two-,
//! three- and four-branch atom-photon entangled states reached from a product
//! coherent state at `K = −1`.
//!
//! Every two-mode constructor builds its formula literally from truncated
//! coherent states. [`dynamical_counterpart`] produces the matching state
//! from the effective-model evolution so the two can be compared.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use crate::effective_model::evolve;
use crate::fockspace::{coherent, tensor, Cutoffs, TruncatedMode, TwoModeState};
use crate::{Error, Result, C64};

/// Tolerance used to set [`NamedState::normalized`].
const NORMALIZED_FLAG_TOL: f64 = 1e-10;

/// Effective interaction parameter at which all catalog states arise.
pub const CATALOG_K: i64 = -1;

/// Global phase the three-branch formula omits relative to the evolved state.
pub const THREE_STATE_DISCARDED_PHASE: f64 = FRAC_PI_3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StateLabel {
    TwoState27,
    TwoState27Alt,
    Ys31,
    Ys33,
    ThreeState36,
    FourState39,
    EvenCat,
    OddCat,
    YsCatPlus,
    YsCatMinus,
}

impl StateLabel {
    pub const ALL: [StateLabel; 10] = [
        StateLabel::TwoState27,
        StateLabel::TwoState27Alt,
        StateLabel::Ys31,
        StateLabel::Ys33,
        StateLabel::ThreeState36,
        StateLabel::FourState39,
        StateLabel::EvenCat,
        StateLabel::OddCat,
        StateLabel::YsCatPlus,
        StateLabel::YsCatMinus,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StateLabel::TwoState27 => "two_state_27",
            StateLabel::TwoState27Alt => "two_state_27_alt",
            StateLabel::Ys31 => "ys_31",
            StateLabel::Ys33 => "ys_33",
            StateLabel::ThreeState36 => "three_state_36",
            StateLabel::FourState39 => "four_state_39",
            StateLabel::EvenCat => "even_cat",
            StateLabel::OddCat => "odd_cat",
            StateLabel::YsCatPlus => "ys_cat_plus",
            StateLabel::YsCatMinus => "ys_cat_minus",
        }
    }

    /// Whether the state lives on a single mode.
    pub fn is_single_mode(&self) -> bool {
        matches!(self, StateLabel::EvenCat | StateLabel::OddCat | StateLabel::YsCatPlus | StateLabel::YsCatMinus)
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StateLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StateLabel::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown state label {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CatalogState {
    TwoMode(TwoModeState),
    SingleMode(TruncatedMode),
}

impl CatalogState {
    pub fn norm(&self) -> f64 {
        match self {
            CatalogState::TwoMode(s) => s.norm(),
            CatalogState::SingleMode(s) => s.norm(),
        }
    }

    pub fn as_two_mode(&self) -> Option<&TwoModeState> {
        match self {
            CatalogState::TwoMode(s) => Some(s),
            CatalogState::SingleMode(_) => None,
        }
    }

    pub fn as_single_mode(&self) -> Option<&TruncatedMode> {
        match self {
            CatalogState::SingleMode(s) => Some(s),
            CatalogState::TwoMode(_) => None,
        }
    }

    pub fn normalized(&self) -> Result<CatalogState> {
        Ok(match self {
            CatalogState::TwoMode(s) => CatalogState::TwoMode(crate::fockspace::normalize(s)?),
            CatalogState::SingleMode(s) => CatalogState::SingleMode(s.normalized()?),
        })
    }
}

/// A catalog state together with the label that fixed its formula.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedState {
    pub label: StateLabel,
    pub state: CatalogState,
    /// Set when the stored amplitudes have unit norm to 1e-10.
    pub normalized: bool,
}

impl NamedState {
    fn new(label: StateLabel, state: CatalogState) -> Self {
        let normalized = (state.norm() - 1.0).abs() <= NORMALIZED_FLAG_TOL;
        Self { label, state, normalized }
    }

    /// Explicitly normalized copy.
    pub fn normalize(&self) -> Result<NamedState> {
        Ok(Self { label: self.label, state: self.state.normalized()?, normalized: true })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CatSign {
    Plus,
    Minus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YsVariant {
    /// (|α⟩|β⟩ + i|−α⟩|−β⟩)/√2
    Aligned,
    /// (|α⟩|−β⟩ − i|−α⟩|β⟩)/√2
    Crossed,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn one() -> C64 {
    c(1.0, 0.0)
}

/// Unnormalized `|γ⟩ ± |−γ⟩`.
/// Uses `⟨n|−γ⟩ = (−1)^n ⟨n|γ⟩` so the parity is exact.
fn raw_cat(gamma: C64, sign: f64, cutoff: usize) -> TruncatedMode {
    let plus = coherent(gamma, cutoff);
    let amps = plus
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, &a)| if n % 2 == 0 { a * (1.0 + sign) } else { a * (1.0 - sign) })
        .collect();
    TruncatedMode::from_amplitudes(amps).expect("nonempty")
}

/// β± = √(2(1 ± e^{−2|β|²}))
pub fn cat_normalizer(beta: C64, parity: Parity) -> f64 {
    let x = (-2.0 * beta.norm_sqr()).exp();
    match parity {
        Parity::Even => (2.0 * (1.0 + x)).sqrt(),
        // 1 − e^{−2|β|²} without cancellation
        Parity::Odd => (2.0 * -(-2.0 * beta.norm_sqr()).exp_m1()).sqrt(),
    }
}

/// (|β⟩ ± |−β⟩)/β±
pub fn even_odd_cat(beta: C64, parity: Parity, cutoff: usize) -> Result<TruncatedMode> {
    let norm = cat_normalizer(beta, parity);
    if norm == 0.0 {
        return Err(Error::Domain("the odd cat does not exist at beta = 0".into()));
    }
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    Ok(raw_cat(beta, sign, cutoff).scaled(c(1.0 / norm, 0.0)))
}

/// (|α⟩ ± i|−α⟩)/√2, normalized for every α since ⟨α|−α⟩ is real.
pub fn yurke_stoler_cat(alpha: C64, sign: CatSign, cutoff: usize) -> TruncatedMode {
    let s = match sign {
        CatSign::Plus => c(0.0, FRAC_1_SQRT_2),
        CatSign::Minus => c(0.0, -FRAC_1_SQRT_2),
    };
    let plus = coherent(alpha, cutoff);
    let minus = coherent(-alpha, cutoff);
    TruncatedMode::combine(&[(c(FRAC_1_SQRT_2, 0.0), &plus), (s, &minus)]).expect("equal cutoffs")
}

/// ½[β₊|α⟩⊗|β⟩₊ − iβ₋|−α⟩⊗|β⟩₋]
///
/// `β±|β⟩±` is formed as `|β⟩ ± |−β⟩` directly, which stays defined at β = 0.
pub fn two_state_entangled(alpha: C64, beta: C64, cutoffs: Cutoffs) -> NamedState {
    let pa = coherent(alpha, cutoffs.photon);
    let ma = coherent(-alpha, cutoffs.photon);
    let even = raw_cat(beta, 1.0, cutoffs.atom);
    let odd = raw_cat(beta, -1.0, cutoffs.atom);
    let state = TwoModeState::combine(&[(c(0.5, 0.0), &tensor(&pa, &even)), (c(0.0, -0.5), &tensor(&ma, &odd))])
        .expect("equal shapes");
    NamedState::new(StateLabel::TwoState27, CatalogState::TwoMode(state))
}

/// The same state written with photon Yurke–Stoler cats:
/// (1/√2)[|α⟩₋⊗|β⟩ + |α⟩₊⊗|−β⟩].
pub fn two_state_entangled_alt(alpha: C64, beta: C64, cutoffs: Cutoffs) -> NamedState {
    let cat_minus = yurke_stoler_cat(alpha, CatSign::Minus, cutoffs.photon);
    let cat_plus = yurke_stoler_cat(alpha, CatSign::Plus, cutoffs.photon);
    let pb = coherent(beta, cutoffs.atom);
    let mb = coherent(-beta, cutoffs.atom);
    let state = TwoModeState::combine(&[
        (c(FRAC_1_SQRT_2, 0.0), &tensor(&cat_minus, &pb)),
        (c(FRAC_1_SQRT_2, 0.0), &tensor(&cat_plus, &mb)),
    ])
    .expect("equal shapes");
    NamedState::new(StateLabel::TwoState27Alt, CatalogState::TwoMode(state))
}

/// Two-mode Yurke–Stoler entangled coherent states.
pub fn entangled_coherent_ys(alpha: C64, beta: C64, variant: YsVariant, cutoffs: Cutoffs) -> NamedState {
    let pa = coherent(alpha, cutoffs.photon);
    let ma = coherent(-alpha, cutoffs.photon);
    let pb = coherent(beta, cutoffs.atom);
    let mb = coherent(-beta, cutoffs.atom);
    let r = FRAC_1_SQRT_2;
    let (label, state) = match variant {
        YsVariant::Aligned => {
            (StateLabel::Ys31, TwoModeState::combine(&[(c(r, 0.0), &tensor(&pa, &pb)), (c(0.0, r), &tensor(&ma, &mb))]))
        }
        YsVariant::Crossed => (
            StateLabel::Ys33,
            TwoModeState::combine(&[(c(r, 0.0), &tensor(&pa, &mb)), (c(0.0, -r), &tensor(&ma, &pb))]),
        ),
    };
    NamedState::new(label, CatalogState::TwoMode(state.expect("equal shapes")))
}

/// ⅓[|α⟩₁|β⟩₁ + |α⟩₂|β⟩₂ + e^{−iπ/3}|α⟩₃|β⟩₃] with
/// `|α⟩_k = |(−1)^k α e^{−ikπ/3}⟩` and the three atomic superpositions
///
/// ```text
/// |β⟩₁ = e^{−iπ/3}|−βe^{iπ/3}⟩ + e^{iπ/3}|−βe^{−iπ/3}⟩ − |β⟩
/// |β⟩₂ = e^{iπ/3}|−βe^{iπ/3}⟩ + e^{−iπ/3}|−βe^{−iπ/3}⟩ − |β⟩
/// |β⟩₃ = |−βe^{iπ/3}⟩ + |−βe^{−iπ/3}⟩ + |β⟩
/// ```
///
/// The evolved state equals `e^{iπ/3}` times this one.
pub fn three_state_entangled(alpha: C64, beta: C64, cutoffs: Cutoffs) -> NamedState {
    let e = |phi: f64| C64::from_polar(1.0, phi);
    let photon = |k: i32| {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coherent(alpha * sign * e(-(k as f64) * FRAC_PI_3), cutoffs.photon)
    };
    let b_up = coherent(-beta * e(FRAC_PI_3), cutoffs.atom);
    let b_down = coherent(-beta * e(-FRAC_PI_3), cutoffs.atom);
    let b = coherent(beta, cutoffs.atom);
    let atom = |w_up: C64, w_down: C64, w_b: C64| {
        TruncatedMode::combine(&[(w_up, &b_up), (w_down, &b_down), (w_b, &b)]).expect("equal cutoffs")
    };
    let beta1 = atom(e(-FRAC_PI_3), e(FRAC_PI_3), -one());
    let beta2 = atom(e(FRAC_PI_3), e(-FRAC_PI_3), -one());
    let beta3 = atom(one(), one(), one());
    let third = c(1.0 / 3.0, 0.0);
    let state = TwoModeState::combine(&[
        (third, &tensor(&photon(1), &beta1)),
        (third, &tensor(&photon(2), &beta2)),
        (third * e(-FRAC_PI_3), &tensor(&photon(3), &beta3)),
    ])
    .expect("equal shapes");
    NamedState::new(StateLabel::ThreeState36, CatalogState::TwoMode(state))
}

/// ¼[e^{iπ/4}|iα⟩₋|iβ⟩₋ + e^{−iπ/4}|iα⟩₊|β⟩₋ + |α⟩₊|iβ⟩₊ + |α⟩₋|β⟩₊]
/// with unnormalized cats `|γ⟩± = |γ⟩ ± |−γ⟩`.
pub fn four_state_entangled(alpha: C64, beta: C64, cutoffs: Cutoffs) -> NamedState {
    let i = c(0.0, 1.0);
    let ia_m = raw_cat(i * alpha, -1.0, cutoffs.photon);
    let ia_p = raw_cat(i * alpha, 1.0, cutoffs.photon);
    let a_p = raw_cat(alpha, 1.0, cutoffs.photon);
    let a_m = raw_cat(alpha, -1.0, cutoffs.photon);
    let ib_m = raw_cat(i * beta, -1.0, cutoffs.atom);
    let ib_p = raw_cat(i * beta, 1.0, cutoffs.atom);
    let b_m = raw_cat(beta, -1.0, cutoffs.atom);
    let b_p = raw_cat(beta, 1.0, cutoffs.atom);
    let q = 0.25;
    let state = TwoModeState::combine(&[
        (C64::from_polar(q, FRAC_PI_4), &tensor(&ia_m, &ib_m)),
        (C64::from_polar(q, -FRAC_PI_4), &tensor(&ia_p, &b_m)),
        (c(q, 0.0), &tensor(&a_p, &ib_p)),
        (c(q, 0.0), &tensor(&a_m, &b_p)),
    ])
    .expect("equal shapes");
    NamedState::new(StateLabel::FourState39, CatalogState::TwoMode(state))
}

/// Builds the catalog state for `label`. Atomic cats (`even_cat`, `odd_cat`)
/// use `beta` on the atom cutoff; photon Yurke–Stoler cats use `alpha` on the
/// photon cutoff.
pub fn build(label: StateLabel, alpha: C64, beta: C64, cutoffs: Cutoffs) -> Result<NamedState> {
    let single = |m: TruncatedMode| NamedState::new(label, CatalogState::SingleMode(m));
    Ok(match label {
        StateLabel::TwoState27 => two_state_entangled(alpha, beta, cutoffs),
        StateLabel::TwoState27Alt => two_state_entangled_alt(alpha, beta, cutoffs),
        StateLabel::Ys31 => entangled_coherent_ys(alpha, beta, YsVariant::Aligned, cutoffs),
        StateLabel::Ys33 => entangled_coherent_ys(alpha, beta, YsVariant::Crossed, cutoffs),
        StateLabel::ThreeState36 => three_state_entangled(alpha, beta, cutoffs),
        StateLabel::FourState39 => four_state_entangled(alpha, beta, cutoffs),
        StateLabel::EvenCat => single(even_odd_cat(beta, Parity::Even, cutoffs.atom)?),
        StateLabel::OddCat => single(even_odd_cat(beta, Parity::Odd, cutoffs.atom)?),
        StateLabel::YsCatPlus => single(yurke_stoler_cat(alpha, CatSign::Plus, cutoffs.photon)),
        StateLabel::YsCatMinus => single(yurke_stoler_cat(alpha, CatSign::Minus, cutoffs.photon)),
    })
}

/// How a catalog state is reached from the effective-model dynamics.
#[derive(Clone, Debug)]
pub struct Counterpart {
    /// Two-mode initial state handed to the evolution.
    pub initial: TwoModeState,
    /// Scaled evolution time.
    pub tau: f64,
    pub k: f64,
    /// The evolved two-mode state.
    pub evolved: TwoModeState,
    /// What the catalog state is compared against: the evolved state itself,
    /// or the mode left after a projective conditioning of the other mode.
    pub target: CatalogState,
}

/// Component of `keep` orthogonal to `exclude`, normalized.
fn orthogonal_part(keep: &TruncatedMode, exclude: &TruncatedMode) -> Result<TruncatedMode> {
    let ov = exclude.inner(keep)?;
    if (1.0 - ov.norm()) < 1e-12 {
        return Err(Error::Domain("conditioning states are not distinguishable".into()));
    }
    TruncatedMode::combine(&[(one(), keep), (-ov, exclude)])?.normalized()
}

/// Scaled time at which the `K = −1` evolution produces `label`.
pub fn scenario_time(label: StateLabel) -> f64 {
    match label {
        StateLabel::ThreeState36 => 2.0 * PI / 3.0,
        StateLabel::FourState39 => FRAC_PI_4,
        _ => FRAC_PI_2,
    }
}

/// Evolves the initial state that produces `label` at `K = −1`.
///
/// Single-mode cats are obtained by conditioning the two-branch state at
/// τ = π/2: projecting the photon onto the part of `|±α⟩` orthogonal to
/// `|∓α⟩` leaves the even/odd atomic cat, and projecting the atom onto the
/// part of `|±β⟩` orthogonal to `|∓β⟩` leaves the photon Yurke–Stoler cats.
/// Those routes need `α ≠ 0` (atomic cats) or `β ≠ 0` (photon cats).
pub fn dynamical_counterpart(label: StateLabel, alpha: C64, beta: C64, cutoffs: Cutoffs) -> Result<Counterpart> {
    evolve_counterpart(label, alpha, beta, cutoffs, scenario_time(label), CATALOG_K as f64)
}

/// As [`dynamical_counterpart`] with the scaled time and `K` chosen by the
/// caller.
pub fn evolve_counterpart(
    label: StateLabel,
    alpha: C64,
    beta: C64,
    cutoffs: Cutoffs,
    tau: f64,
    k: f64,
) -> Result<Counterpart> {
    let product = || tensor(&coherent(alpha, cutoffs.photon), &coherent(beta, cutoffs.atom));
    let initial = match label {
        StateLabel::Ys31 => {
            tensor(&yurke_stoler_cat(alpha, CatSign::Plus, cutoffs.photon), &coherent(beta, cutoffs.atom))
        }
        StateLabel::Ys33 => {
            tensor(&yurke_stoler_cat(alpha, CatSign::Minus, cutoffs.photon), &coherent(beta, cutoffs.atom))
        }
        _ => product(),
    };
    let evolved = evolve(&initial, tau, k);
    let target = match label {
        StateLabel::EvenCat | StateLabel::OddCat => {
            let pa = coherent(alpha, cutoffs.photon);
            let ma = coherent(-alpha, cutoffs.photon);
            let chi =
                if label == StateLabel::EvenCat { orthogonal_part(&pa, &ma)? } else { orthogonal_part(&ma, &pa)? };
            CatalogState::SingleMode(evolved.project_photon(&chi)?.normalized()?)
        }
        StateLabel::YsCatPlus | StateLabel::YsCatMinus => {
            let pb = coherent(beta, cutoffs.atom);
            let mb = coherent(-beta, cutoffs.atom);
            let chi =
                if label == StateLabel::YsCatPlus { orthogonal_part(&mb, &pb)? } else { orthogonal_part(&pb, &mb)? };
            CatalogState::SingleMode(evolved.project_atom(&chi)?.normalized()?)
        }
        _ => CatalogState::TwoMode(evolved.clone()),
    };
    Ok(Counterpart { initial, tau, k, evolved, target })
}

/// Fidelity, insensitive to global phase, between a catalog state and its
/// dynamical counterpart. Both sides are normalized first.
pub fn catalog_fidelity(named: &NamedState, counterpart: &Counterpart) -> Result<f64> {
    let a = named.state.normalized()?;
    let b = counterpart.target.normalized()?;
    match (&a, &b) {
        (CatalogState::TwoMode(x), CatalogState::TwoMode(y)) => crate::fockspace::fidelity_up_to_global_phase(x, y),
        (CatalogState::SingleMode(x), CatalogState::SingleMode(y)) => crate::fockspace::mode_fidelity(x, y),
        _ => Err(Error::Dimension("catalog state and counterpart live on different spaces".into())),
    }
}
