//! Truncated Fock-space states of one and two bosonic modes.
//!
//! A [`TruncatedMode`] keeps occupations `0..=cutoff` of a single mode; a
//! [`TwoModeState`] keeps the `(n, m)` grid of photon number `n` and atom
//! number `m`. States are plain values: every operation returns a new state.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::format::{csv_text, fmt_f64};
use crate::{Error, Result, C64};

/// Default bound on the probability mass a truncation may discard.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Normalization tolerance demanded by operations that need unit states.
pub const NORMALIZED_TOL: f64 = 1e-8;

/// Cutoff used when none is given: `max(24, ceil(|α|² + 8|α| + 10))`.
///
/// Keeps the discarded coherent-state mass below 1e-12 for |α| ≤ 4.
pub fn default_cutoff(alpha: C64) -> usize {
    let a = alpha.norm();
    let c = (a * a + 8.0 * a + 10.0).ceil();
    (c as usize).max(24)
}

/// A single truncated mode, indexed by occupation number.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedMode {
    amplitudes: Vec<C64>,
}

impl TruncatedMode {
    /// Wraps raw amplitudes; `amplitudes.len()` must be at least one.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::Dimension("a mode needs at least one amplitude".into()));
        }
        Ok(Self { amplitudes })
    }

    /// Number state `|n⟩`.
    pub fn number(n: usize, cutoff: usize) -> Result<Self> {
        if n > cutoff {
            return Err(Error::Dimension(format!("occupation {n} above cutoff {cutoff}")));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); cutoff + 1];
        amplitudes[n] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn vacuum(cutoff: usize) -> Self {
        Self::number(0, cutoff).expect("0 <= cutoff")
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.cutoff() != other.cutoff() {
            return Err(Error::Dimension(format!("mode cutoffs differ: {} vs {}", self.cutoff(), other.cutoff())));
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { amplitudes: self.amplitudes.iter().map(|a| a * c).collect() }
    }

    /// `Σ cₖ |ψₖ⟩` over modes of equal cutoff.
    pub fn combine(terms: &[(C64, &TruncatedMode)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Dimension("empty linear combination".into()))?;
        let mut out = vec![C64::new(0.0, 0.0); first.1.amplitudes.len()];
        for (c, mode) in terms {
            if mode.amplitudes.len() != out.len() {
                return Err(Error::Dimension("mode cutoffs differ in combination".into()));
            }
            for (o, a) in out.iter_mut().zip(&mode.amplitudes) {
                *o += c * a;
            }
        }
        Ok(Self { amplitudes: out })
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Domain("cannot normalize a zero (or non-finite) mode".into()));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    /// Probability discarded relative to a unit state, `max(0, 1 − ‖ψ‖²)`.
    pub fn missing_mass(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }
}

/// A freshly truncated coherent state with the mass its truncation dropped.
#[derive(Clone, Debug)]
pub struct Truncated {
    pub mode: TruncatedMode,
    /// Poisson tail `Σ_{n > cutoff} e^{-|α|²} |α|^{2n} / n!`.
    pub tail_mass: f64,
}

impl Truncated {
    pub fn exceeds(&self, tail_tol: f64) -> bool {
        self.tail_mass > tail_tol
    }
}

/// Coherent state `|α⟩` on occupations `0..=cutoff`, together with its tail
/// mass. The amplitudes are not renormalized.
pub fn coherent_amplitudes(alpha: C64, cutoff: usize) -> Truncated {
    let mut amplitudes = vec![C64::new(0.0, 0.0); cutoff + 1];
    let r = alpha.norm();
    let x = r * r;
    if r == 0.0 {
        amplitudes[0] = C64::new(1.0, 0.0);
        return Truncated { mode: TruncatedMode { amplitudes }, tail_mass: 0.0 };
    }
    let phase = alpha.arg();
    let ln_r = r.ln();
    // ln|aₙ| = -|α|²/2 + n ln|α| - ½ ln n!, with ln n! accumulated term by term.
    let mut ln_fact = 0.0;
    for (n, amp) in amplitudes.iter_mut().enumerate() {
        if n > 0 {
            ln_fact += (n as f64).ln();
        }
        let ln_mod = -0.5 * x + n as f64 * ln_r - 0.5 * ln_fact;
        *amp = C64::from_polar(ln_mod.exp(), n as f64 * phase);
    }
    let tail_mass = poisson_tail(x, cutoff, ln_fact);
    Truncated { mode: TruncatedMode { amplitudes }, tail_mass }
}

/// `Σ_{n > cutoff} e^{-x} xⁿ / n!`, given `ln(cutoff!)`.
fn poisson_tail(x: f64, cutoff: usize, ln_fact_cutoff: f64) -> f64 {
    let first = cutoff + 1;
    let ln_term = -x + first as f64 * x.ln() - (ln_fact_cutoff + (first as f64).ln());
    let mut term = ln_term.exp();
    let mut sum = 0.0;
    let mut n = first;
    loop {
        sum += term;
        n += 1;
        term *= x / n as f64;
        if (n as f64 > x && term <= sum * 1e-18) || term == 0.0 {
            break;
        }
    }
    sum
}

/// Coherent state with the configured tolerance check; logs a warning when
/// the truncation loses more than `tail_tol`.
pub fn coherent_checked(alpha: C64, cutoff: usize, tail_tol: f64) -> TruncatedMode {
    let t = coherent_amplitudes(alpha, cutoff);
    if t.exceeds(tail_tol) {
        log::warn!("coherent state alpha={alpha} truncated at {cutoff} drops {:e} of its norm", t.tail_mass);
    }
    t.mode
}

/// Coherent state with the default tail tolerance.
pub fn coherent(alpha: C64, cutoff: usize) -> TruncatedMode {
    coherent_checked(alpha, cutoff, DEFAULT_TAIL_TOL)
}

/// Joint photon ⊗ atom state, amplitudes indexed `(n, m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    amplitudes: DMatrix<C64>,
}

impl TwoModeState {
    pub fn from_matrix(amplitudes: DMatrix<C64>) -> Result<Self> {
        if amplitudes.nrows() == 0 || amplitudes.ncols() == 0 {
            return Err(Error::Dimension("two-mode grid must be non-empty".into()));
        }
        Ok(Self { amplitudes })
    }

    pub fn zeros(photon_cutoff: usize, atom_cutoff: usize) -> Self {
        Self { amplitudes: DMatrix::zeros(photon_cutoff + 1, atom_cutoff + 1) }
    }

    /// Basis state `|n, m⟩`.
    pub fn basis(n: usize, m: usize, photon_cutoff: usize, atom_cutoff: usize) -> Result<Self> {
        if n > photon_cutoff || m > atom_cutoff {
            return Err(Error::Dimension(format!("|{n},{m}⟩ outside cutoffs ({photon_cutoff},{atom_cutoff})")));
        }
        let mut s = Self::zeros(photon_cutoff, atom_cutoff);
        s.amplitudes[(n, m)] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_fn(photon_cutoff: usize, atom_cutoff: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self { amplitudes: DMatrix::from_fn(photon_cutoff + 1, atom_cutoff + 1, f) }
    }

    pub fn photon_cutoff(&self) -> usize {
        self.amplitudes.nrows() - 1
    }

    pub fn atom_cutoff(&self) -> usize {
        self.amplitudes.ncols() - 1
    }

    pub fn amplitudes(&self) -> &DMatrix<C64> {
        &self.amplitudes
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.amplitudes
    }

    pub fn get(&self, n: usize, m: usize) -> C64 {
        self.amplitudes[(n, m)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.amplitudes.shape() == other.amplitudes.shape()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { amplitudes: self.amplitudes.map(|a| a * c) }
    }

    /// Entrywise `f(n, m, amplitude)`.
    pub fn map_indexed(&self, mut f: impl FnMut(usize, usize, C64) -> C64) -> Self {
        Self::from_fn(self.photon_cutoff(), self.atom_cutoff(), |n, m| f(n, m, self.amplitudes[(n, m)]))
    }

    /// `Σ cₖ |ψₖ⟩` over states of equal shape.
    pub fn combine(terms: &[(C64, &TwoModeState)]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::Dimension("empty linear combination".into()))?;
        let mut out = DMatrix::zeros(first.1.amplitudes.nrows(), first.1.amplitudes.ncols());
        for (c, s) in terms {
            if !s.same_shape(first.1) {
                return Err(Error::Dimension("two-mode shapes differ in combination".into()));
            }
            out.zip_apply(&s.amplitudes, |o, a| *o += c * a);
        }
        Ok(Self { amplitudes: out })
    }

    /// `P(n) = Σ_m |ψ(n,m)|²`.
    pub fn photon_marginal(&self) -> Vec<f64> {
        self.amplitudes.row_iter().map(|row| row.iter().map(|a| a.norm_sqr()).sum()).collect()
    }

    /// `P(m) = Σ_n |ψ(n,m)|²`.
    pub fn atom_marginal(&self) -> Vec<f64> {
        self.amplitudes.column_iter().map(|col| col.iter().map(|a| a.norm_sqr()).sum()).collect()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        check_shape(self, other)?;
        Ok(self.amplitudes.iter().zip(other.amplitudes.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Writes `n,m,re,im` rows preceded by a comment line carrying the cutoffs.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let comment = format!("photon_cutoff={} atom_cutoff={}", self.photon_cutoff(), self.atom_cutoff());
        let rows = (0..=self.photon_cutoff()).flat_map(|n| {
            (0..=self.atom_cutoff()).map(move |m| {
                let a = self.amplitudes[(n, m)];
                vec![n.to_string(), m.to_string(), fmt_f64(a.re), fmt_f64(a.im)]
            })
        });
        w.write_all(csv_text(Some(&comment), &CSV_HEADER, rows)?.as_bytes())?;
        Ok(())
    }

    /// Reads the format produced by [`TwoModeState::write_csv`]. Entries not
    /// listed are zero.
    pub fn read_csv<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let comment = text
            .lines()
            .map(str::trim)
            .find(|l| !l.is_empty())
            .and_then(|l| l.strip_prefix('#'))
            .ok_or_else(|| Error::Parse("missing cutoff header".into()))?;
        let field = |key: &str| {
            comment.split_whitespace().find_map(|f| f.strip_prefix(key)).and_then(|v| v.parse::<usize>().ok())
        };
        let (Some(pc), Some(ac)) = (field("photon_cutoff="), field("atom_cutoff=")) else {
            return Err(Error::Parse("header must carry photon_cutoff and atom_cutoff".into()));
        };
        let mut state = Self::zeros(pc, ac);
        let mut reader =
            csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        if reader.headers()? != CSV_HEADER.as_slice() {
            return Err(Error::Parse(format!("expected header {}", CSV_HEADER.join(","))));
        }
        for row in reader.deserialize() {
            let CsvRow { n, m, re, im } = row?;
            if n > pc || m > ac {
                return Err(Error::Parse(format!("index ({n}, {m}) outside cutoffs")));
            }
            state.amplitudes[(n, m)] = C64::new(re, im);
        }
        Ok(state)
    }
}

const CSV_HEADER: [&str; 4] = ["n", "m", "re", "im"];

#[derive(Deserialize)]
struct CsvRow {
    n: usize,
    m: usize,
    re: f64,
    im: f64,
}

/// Per-mode cutoffs of a photon ⊗ atom grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cutoffs {
    pub photon: usize,
    pub atom: usize,
}

impl Cutoffs {
    pub fn new(photon: usize, atom: usize) -> Self {
        Self { photon, atom }
    }

    /// [`default_cutoff`] applied to each mode.
    pub fn for_amplitudes(alpha: C64, beta: C64) -> Self {
        Self { photon: default_cutoff(alpha), atom: default_cutoff(beta) }
    }
}

impl TwoModeState {
    /// `(⟨χ| ⊗ 1)|ψ⟩`: the unnormalized atom state left after projecting the
    /// photon onto `χ`.
    pub fn project_photon(&self, chi: &TruncatedMode) -> Result<TruncatedMode> {
        if chi.cutoff() != self.photon_cutoff() {
            return Err(Error::Dimension("projector cutoff differs from photon cutoff".into()));
        }
        let amps = (0..=self.atom_cutoff())
            .map(|m| (0..=self.photon_cutoff()).map(|n| chi.amplitudes()[n].conj() * self.amplitudes[(n, m)]).sum())
            .collect();
        TruncatedMode::from_amplitudes(amps)
    }

    /// `(1 ⊗ ⟨χ|)|ψ⟩`: the unnormalized photon state left after projecting the
    /// atom onto `χ`.
    pub fn project_atom(&self, chi: &TruncatedMode) -> Result<TruncatedMode> {
        if chi.cutoff() != self.atom_cutoff() {
            return Err(Error::Dimension("projector cutoff differs from atom cutoff".into()));
        }
        let amps = (0..=self.photon_cutoff())
            .map(|n| (0..=self.atom_cutoff()).map(|m| chi.amplitudes()[m].conj() * self.amplitudes[(n, m)]).sum())
            .collect();
        TruncatedMode::from_amplitudes(amps)
    }
}

/// `|⟨a|b⟩|²` for unit single-mode states.
pub fn mode_fidelity(a: &TruncatedMode, b: &TruncatedMode) -> Result<f64> {
    for (label, s) in [("first", a), ("second", b)] {
        let dev = (s.norm() - 1.0).abs();
        if dev > NORMALIZED_TOL {
            return Err(Error::Contract(format!("{label} mode is not normalized (|norm - 1| = {dev:e})")));
        }
    }
    Ok(a.inner(b)?.norm_sqr())
}

fn check_shape(a: &TwoModeState, b: &TwoModeState) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::Dimension(format!(
            "two-mode shapes differ: ({},{}) vs ({},{})",
            a.photon_cutoff(),
            a.atom_cutoff(),
            b.photon_cutoff(),
            b.atom_cutoff()
        )))
    }
}

/// Product state `photon ⊗ atom`.
pub fn tensor(photon: &TruncatedMode, atom: &TruncatedMode) -> TwoModeState {
    TwoModeState::from_fn(photon.cutoff(), atom.cutoff(), |n, m| photon.amplitudes[n] * atom.amplitudes[m])
}

/// `⟨a|b⟩ = Σ conj(a[n,m]) b[n,m]`.
pub fn inner_product(a: &TwoModeState, b: &TwoModeState) -> Result<C64> {
    check_shape(a, b)?;
    Ok(a.amplitudes.iter().zip(b.amplitudes.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// `|⟨a|b⟩|²` for unit states; insensitive to a global phase on either side.
pub fn fidelity_up_to_global_phase(a: &TwoModeState, b: &TwoModeState) -> Result<f64> {
    for (label, s) in [("first", a), ("second", b)] {
        let dev = (s.norm() - 1.0).abs();
        if dev > NORMALIZED_TOL {
            return Err(Error::Contract(format!("{label} state is not normalized (|norm - 1| = {dev:e})")));
        }
    }
    Ok(inner_product(a, b)?.norm_sqr())
}

pub fn normalize(s: &TwoModeState) -> Result<TwoModeState> {
    let n = s.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Domain("cannot normalize a zero (or non-finite) state".into()));
    }
    Ok(s.scaled(C64::new(1.0 / n, 0.0)))
}
