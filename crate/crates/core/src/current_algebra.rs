//! Arithmetic in `g_p = g[z]/z^p`, in Laurent extensions with the affine cocycle, and in
//! tensor powers. Central elements stay symbolic until they act on a module.

use crate::lie_core::LieAlgebra;
use crate::linalg::add_entry;
use crate::rational::{Ratio, Q};
use num::Zero;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A current generator `X_basis z^deg`. Ordered by degree first, then basis index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Gen {
    pub deg: i64,
    pub basis: usize,
}

impl Gen {
    pub fn new(basis: usize, deg: i64) -> Self {
        Gen { deg, basis }
    }
}

/// Inclusive range of allowed z-degrees per tensor factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeWindow {
    pub lo: i64,
    pub hi: i64,
}

impl DegreeWindow {
    pub fn truncated(p: usize) -> Self {
        DegreeWindow { lo: 0, hi: p as i64 - 1 }
    }

    pub fn contains(&self, deg: i64) -> bool {
        self.lo <= deg && deg <= self.hi
    }

    pub fn hull(self, other: Self) -> Self {
        DegreeWindow { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }
}

/// What to do with degrees falling outside the window of a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    /// Drop them (the quotient `g[z]/z^p`).
    Truncate,
    /// Enlarge the window to hold them.
    Widen,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TensorError {
    #[error("degree {deg} outside window [{lo}, {hi}]")]
    OutOfWindow { deg: i64, lo: i64, hi: i64 },
    #[error("slot {slot} out of range for {arity} slots")]
    SlotOutOfRange { slot: usize, arity: usize },
    #[error("expected arity {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
}

/// Sparse element of `(g ⊗ C[z, z^{-1}])^{⊗k}`, plus a central part for arity one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurrentTensor {
    pub arity: usize,
    pub terms: BTreeMap<Vec<Gen>, Q>,
    pub window: DegreeWindow,
    /// Coefficient of the central element `K`.
    pub central: Q,
}

impl CurrentTensor {
    pub fn zero(arity: usize, window: DegreeWindow) -> Self {
        CurrentTensor { arity, terms: BTreeMap::new(), window, central: Q::zero() }
    }

    pub fn generator(g: Gen, window: DegreeWindow) -> Self {
        let mut t = Self::zero(1, window);
        t.add_term(vec![g], Q::from_integer(1.into()));
        t
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.central.is_zero()
    }

    /// Adds a term; out-of-window terms are dropped (callers choose the window beforehand).
    pub fn add_term(&mut self, factors: Vec<Gen>, coeff: Q) {
        debug_assert_eq!(factors.len(), self.arity);
        if factors.iter().all(|g| self.window.contains(g.deg)) {
            add_entry(&mut self.terms, factors, coeff);
        }
    }

    pub fn try_add_term(&mut self, factors: Vec<Gen>, coeff: Q) -> Result<(), TensorError> {
        if let Some(g) = factors.iter().find(|g| !self.window.contains(g.deg)) {
            return Err(TensorError::OutOfWindow { deg: g.deg, lo: self.window.lo, hi: self.window.hi });
        }
        add_entry(&mut self.terms, factors, coeff);
        Ok(())
    }

    pub fn add_scaled(&mut self, other: &CurrentTensor, scale: &Q) {
        assert_eq!(self.arity, other.arity);
        for (f, c) in &other.terms {
            self.add_term(f.clone(), c * scale);
        }
        self.central += &other.central * scale;
    }

    /// Same tensor in another window; terms outside it are dropped.
    pub fn with_window(&self, window: DegreeWindow) -> Self {
        let mut out = Self::zero(self.arity, window);
        out.add_scaled(self, &Q::from_integer(1.into()));
        out
    }

    pub fn scale(&self, s: &Q) -> Self {
        let mut out = Self::zero(self.arity, self.window);
        out.add_scaled(self, s);
        out
    }

    /// Reorders tensor factors: factor `k` of the result is factor `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let mut out = Self::zero(self.arity, self.window);
        for (f, c) in &self.terms {
            out.add_term(perm.iter().map(|&k| f[k]).collect(), c.clone());
        }
        out
    }

    pub fn swap(&self) -> Self {
        assert_eq!(self.arity, 2, "swap needs two factors");
        self.permute(&[1, 0])
    }

    pub fn to_json(&self) -> Vec<TensorTermJson> {
        self.terms
            .iter()
            .map(|(f, c)| TensorTermJson { factors: f.iter().map(|g| (g.basis, g.deg)).collect(), coeff: Ratio(c.clone()) })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorTermJson {
    pub factors: Vec<(usize, i64)>,
    pub coeff: Ratio,
}

/// `[X z^a, Y z^b] = [X, Y] z^{a+b}` with degrees `≥ p` discarded.
pub fn truncated_bracket(alg: &LieAlgebra, x: &CurrentTensor, y: &CurrentTensor, p: usize) -> CurrentTensor {
    assert!(x.arity == 1 && y.arity == 1);
    let mut out = CurrentTensor::zero(1, DegreeWindow::truncated(p));
    for (fx, cx) in &x.terms {
        for (fy, cy) in &y.terms {
            let deg = fx[0].deg + fy[0].deg;
            if deg >= p as i64 {
                continue;
            }
            let c = cx * cy;
            for (&k, s) in alg.bracket_basis(fx[0].basis, fy[0].basis) {
                out.add_term(vec![Gen::new(k, deg)], &c * s);
            }
        }
    }
    out
}

/// Residue cocycle `(X|Y) · Res(z^b d z^a) = a · δ_{a+b,0} · (X|Y)`.
pub fn cocycle(alg: &LieAlgebra, x: Gen, y: Gen) -> Q {
    if x.deg + y.deg != 0 {
        return Q::zero();
    }
    Q::from_integer(x.deg.into()) * alg.form_gram.get(x.basis, y.basis)
}

/// Affine bracket on Laurent currents, central part kept symbolic in `central`.
pub fn affine_bracket(alg: &LieAlgebra, x: &CurrentTensor, y: &CurrentTensor, mode: WindowMode) -> CurrentTensor {
    assert!(x.arity == 1 && y.arity == 1);
    let window = match mode {
        WindowMode::Truncate => x.window.hull(y.window),
        WindowMode::Widen => DegreeWindow {
            lo: (x.window.lo + y.window.lo).min(x.window.lo).min(y.window.lo),
            hi: (x.window.hi + y.window.hi).max(x.window.hi).max(y.window.hi),
        },
    };
    let mut out = CurrentTensor::zero(1, window);
    for (fx, cx) in &x.terms {
        for (fy, cy) in &y.terms {
            let (a, b) = (fx[0], fy[0]);
            let c = cx * cy;
            for (&k, s) in alg.bracket_basis(a.basis, b.basis) {
                out.add_term(vec![Gen::new(k, a.deg + b.deg)], &c * s);
            }
            out.central += &c * cocycle(alg, a, b);
        }
    }
    out
}

/// `Ω_{ml} = Σ_k X_k z^m ⊗ X^k z^l`.
pub fn omega_ml(alg: &LieAlgebra, m: i64, l: i64) -> CurrentTensor {
    let window = DegreeWindow { lo: m.min(l), hi: m.max(l) };
    let mut out = CurrentTensor::zero(2, window);
    for (a, b, c) in alg.casimir_pairs() {
        out.add_term(vec![Gen::new(*a, m), Gen::new(*b, l)], c.clone());
    }
    out
}

/// `Ω = Ω_{00}`.
pub fn casimir_tensor(alg: &LieAlgebra) -> CurrentTensor {
    omega_ml(alg, 0, 0)
}

/// Placement of a two-factor tensor into an `n`-slot tensor product (slots are 0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotEmbedding {
    pub first: usize,
    pub second: usize,
    pub target_arity: usize,
}

impl SlotEmbedding {
    pub fn product_in_slot(&self) -> bool {
        self.first == self.second
    }
}

/// A sum of ordered operator words; each word acts right-to-left, factor by factor, on the
/// indicated slots.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SlotOperator {
    pub arity: usize,
    pub terms: BTreeMap<Vec<(usize, Gen)>, Q>,
}

impl SlotOperator {
    pub fn new(arity: usize) -> Self {
        SlotOperator { arity, terms: BTreeMap::new() }
    }

    pub fn add(&mut self, word: Vec<(usize, Gen)>, coeff: Q) {
        add_entry(&mut self.terms, word, coeff);
    }

    pub fn add_scaled(&mut self, other: &SlotOperator, scale: &Q) {
        for (w, c) in &other.terms {
            self.add(w.clone(), c * scale);
        }
    }

    /// Canonical form in which words acting on distinct slots are sorted by slot; words that
    /// apply several factors to one slot keep their relative order there.
    pub fn canonical(&self) -> SlotOperator {
        let mut out = SlotOperator::new(self.arity);
        for (w, c) in &self.terms {
            let mut sorted = w.clone();
            sorted.sort_by_key(|(slot, _)| *slot);
            out.add(sorted, c.clone());
        }
        out
    }
}

/// `1^{⊗i} ⊗ X ⊗ … ⊗ Y ⊗ …`, or `XY` in a single slot when both slots coincide.
pub fn embed(t: &CurrentTensor, e: SlotEmbedding) -> Result<SlotOperator, TensorError> {
    if t.arity != 2 {
        return Err(TensorError::ArityMismatch { expected: 2, found: t.arity });
    }
    for slot in [e.first, e.second] {
        if slot >= e.target_arity {
            return Err(TensorError::SlotOutOfRange { slot, arity: e.target_arity });
        }
    }
    let mut op = SlotOperator::new(e.target_arity);
    for (f, c) in &t.terms {
        op.add(vec![(e.first, f[0]), (e.second, f[1])], c.clone());
    }
    Ok(op)
}

/// `Σ_k [X_a z^m ⊗ X^a z^l placed in slots (i, j), X^{(k)}]` for a constant `X`, as a two-factor
/// tensor in `g[z]^{⊗2}`. When `i = j` the tensor records ordered products in that slot.
pub fn g_equivariance_residual(alg: &LieAlgebra, m: i64, l: i64, x: usize) -> CurrentTensor {
    let omega = omega_ml(alg, m, l);
    let mut out = CurrentTensor::zero(2, omega.window);
    for (f, c) in &omega.terms {
        for (&k, s) in alg.bracket_basis(f[0].basis, x) {
            out.add_term(vec![Gen::new(k, f[0].deg), f[1]], c * s);
        }
        for (&k, s) in alg.bracket_basis(f[1].basis, x) {
            out.add_term(vec![f[0], Gen::new(k, f[1].deg)], c * s);
        }
    }
    out
}
