//! Finite singular modules `W` of `g_p` and truncated slices of the affine module `Ŵ`,
//! realized on PBW monomials by a memoized straightening engine; θ-duals, the Shapovalov
//! pairing and Sugawara operators.

use crate::current_algebra::{cocycle, CurrentTensor, Gen};
use crate::lie_core::{BasisKind, LieAlgebra};
use crate::linalg::{add_entry, Matrix, SparseVec};
use crate::rational::{format_q, q, Q};
use crate::weights::lattice_box;
use num::{One, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModuleError {
    #[error("result leaves the realized slice (monomial {0})")]
    TruncationExceeded(String),
    #[error("critical level κ = −h∨")]
    CriticalLevel,
    #[error("invalid character: {0}")]
    InvalidCharacter(String),
}

/// `χ(λ, q, κ)`: tame part, wild part and level. Functionals are stored by their values on
/// the simple coroots `H_k z^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingularCharacter {
    pub depth: usize,
    pub lambda: Vec<Q>,
    /// `wild[i - 1]` is `a_i` for `i = 1, …, p − 1`.
    pub wild: Vec<Vec<Q>>,
    pub kappa: Q,
}

impl SingularCharacter {
    pub fn new(depth: usize, lambda: Vec<Q>, wild: Vec<Vec<Q>>, kappa: Q) -> Result<Self, ModuleError> {
        if depth == 0 {
            return Err(ModuleError::InvalidCharacter("depth must be at least 1".into()));
        }
        if wild.len() != depth - 1 {
            return Err(ModuleError::InvalidCharacter(format!(
                "depth {depth} needs {} wild coefficients, got {}",
                depth - 1,
                wild.len()
            )));
        }
        if wild.iter().any(|a| a.len() != lambda.len()) {
            return Err(ModuleError::InvalidCharacter("wild coefficients must have the rank of λ".into()));
        }
        Ok(SingularCharacter { depth, lambda, wild, kappa })
    }

    pub fn tame(lambda: Vec<Q>, kappa: Q) -> Self {
        SingularCharacter { depth: 1, lambda, wild: Vec::new(), kappa }
    }

    /// `a_i` with `a_0 = λ`.
    pub fn coefficient(&self, i: usize) -> &[Q] {
        if i == 0 {
            &self.lambda
        } else {
            &self.wild[i - 1]
        }
    }
}

/// A PBW monomial: generators in nondecreasing `(deg, basis)` order, applied to `w` with the
/// first entry outermost. Nonnegative degrees carry lowering generators of degree `< p` only.
pub type Monomial = Vec<Gen>;

/// Vector of a singular module in the monomial basis.
pub type ModVec = BTreeMap<Monomial, Q>;

pub fn cyclic_vector() -> ModVec {
    ModVec::from([(Vec::new(), Q::one())])
}

pub fn describe_monomial(alg: &LieAlgebra, m: &[Gen]) -> String {
    let mut s: Vec<String> = m.iter().map(|g| format!("{}z^{}", alg.label(g.basis), g.deg)).collect();
    s.push("w".into());
    s.join("·")
}

pub fn describe_vector(alg: &LieAlgebra, v: &ModVec) -> String {
    if v.is_empty() {
        return "0".into();
    }
    v.iter().map(|(m, c)| format!("{}·{}", format_q(c), describe_monomial(alg, m))).collect::<Vec<_>>().join(" + ")
}

/// The affine singular module `Ŵ` (and its finite submodule `W`), acting on monomials.
pub struct SingularModule {
    pub alg: Arc<LieAlgebra>,
    pub chi: SingularCharacter,
    cache: Mutex<HashMap<(Gen, Monomial), Arc<ModVec>>>,
}

impl std::fmt::Debug for SingularModule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SingularModule").field("chi", &self.chi).finish_non_exhaustive()
    }
}

impl SingularModule {
    pub fn new(alg: Arc<LieAlgebra>, chi: SingularCharacter) -> Result<Self, ModuleError> {
        if chi.lambda.len() != alg.rank() {
            return Err(ModuleError::InvalidCharacter(format!(
                "λ has {} entries, algebra rank is {}",
                chi.lambda.len(),
                alg.rank()
            )));
        }
        Ok(SingularModule { alg, chi, cache: Mutex::new(HashMap::new()) })
    }

    pub fn depth(&self) -> usize {
        self.chi.depth
    }

    /// Generators that appear inside canonical monomials.
    pub fn is_creation(&self, g: Gen) -> bool {
        g.deg < 0 || (g.deg < self.depth() as i64 && matches!(self.alg.kind(g.basis), BasisKind::Lowering(_)))
    }

    /// Total `|deg|` of the negative-degree factors.
    pub fn negative_depth(m: &[Gen]) -> i64 {
        m.iter().filter(|g| g.deg < 0).map(|g| -g.deg).sum()
    }

    /// `ν` with weight `λ − ν`, in simple-root coordinates.
    pub fn weight_offset(&self, m: &[Gen]) -> Vec<i64> {
        let mut nu = vec![0i64; self.alg.rank()];
        for g in m {
            for (x, w) in nu.iter_mut().zip(self.alg.basis_weight(g.basis)) {
                *x -= w;
            }
        }
        nu
    }

    /// Height of the finite (nonnegative-degree) part.
    pub fn finite_height(&self, m: &[Gen]) -> i64 {
        m.iter()
            .filter(|g| g.deg >= 0)
            .map(|g| -self.alg.basis_weight(g.basis).iter().sum::<i64>())
            .sum()
    }

    /// `g · m`, memoized.
    pub fn act_gen(&self, g: Gen, m: &[Gen]) -> Arc<ModVec> {
        let key = (g, m.to_vec());
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return hit.clone();
        }
        let value = Arc::new(self.straighten(g, m));
        self.cache.lock().expect("cache lock").insert(key, value.clone());
        value
    }

    fn straighten(&self, g: Gen, m: &[Gen]) -> ModVec {
        let p = self.depth() as i64;
        let mut out = ModVec::new();
        if g.deg - Self::negative_depth(m) >= p {
            return out;
        }
        let Some((&first, rest)) = m.split_first() else {
            if g.deg < 0 {
                out.insert(vec![g], Q::one());
                return out;
            }
            match self.alg.kind(g.basis) {
                BasisKind::Lowering(_) => {
                    out.insert(vec![g], Q::one());
                }
                BasisKind::Raising(_) => {}
                BasisKind::Cartan(k) => {
                    add_entry(&mut out, Vec::new(), self.chi.coefficient(g.deg as usize)[k].clone());
                }
            }
            return out;
        };
        if self.is_creation(g) && g <= first {
            let mut prepended = Vec::with_capacity(m.len() + 1);
            prepended.push(g);
            prepended.extend_from_slice(m);
            out.insert(prepended, Q::one());
            return out;
        }
        // g · first · rest = first · (g · rest) + [g, first] · rest
        for (mono, c) in self.act_gen(g, rest).iter() {
            for (mono2, c2) in self.act_gen(first, mono).iter() {
                add_entry(&mut out, mono2.clone(), c * c2);
            }
        }
        for (&k, s) in self.alg.bracket_basis(g.basis, first.basis) {
            for (mono, c) in self.act_gen(Gen::new(k, g.deg + first.deg), rest).iter() {
                add_entry(&mut out, mono.clone(), s * c);
            }
        }
        let central = cocycle(&self.alg, g, first);
        if !central.is_zero() {
            add_entry(&mut out, rest.to_vec(), central * &self.chi.kappa);
        }
        out
    }

    pub fn act_vec(&self, g: Gen, v: &ModVec) -> ModVec {
        let mut out = ModVec::new();
        for (m, c) in v {
            for (m2, c2) in self.act_gen(g, m).iter() {
                add_entry(&mut out, m2.clone(), c * c2);
            }
        }
        out
    }

    /// Action of an arity-one current, with `K ↦ κ`.
    pub fn act_current(&self, x: &CurrentTensor, v: &ModVec) -> ModVec {
        assert_eq!(x.arity, 1);
        let mut out = ModVec::new();
        for (f, c) in &x.terms {
            for (m, c2) in self.act_vec(f[0], v) {
                add_entry(&mut out, m, c * c2);
            }
        }
        if !x.central.is_zero() {
            let s = &x.central * &self.chi.kappa;
            for (m, c) in v {
                add_entry(&mut out, m.clone(), &s * c);
            }
        }
        out
    }

    /// Applies a word of generators, rightmost first.
    pub fn act_word(&self, word: &[Gen], v: &ModVec) -> ModVec {
        word.iter().rev().fold(v.clone(), |acc, &g| self.act_vec(g, &acc))
    }

    /// Lowering generators of degree `0..p`, in canonical order.
    fn finite_generators(&self) -> Vec<Gen> {
        let mut gens: Vec<Gen> = (0..self.depth() as i64)
            .flat_map(|d| (0..self.alg.num_positive_roots()).map(move |a| (a, d)))
            .map(|(a, d)| Gen::new(self.alg.lowering(a), d))
            .collect();
        gens.sort();
        gens
    }

    /// Canonical finite monomials of weight `λ − ν`.
    pub fn finite_monomials(&self, nu: &[i64]) -> Vec<Monomial> {
        let gens = self.finite_generators();
        let roots: Vec<Vec<i64>> = gens.iter().map(|g| self.alg.basis_weight(g.basis).iter().map(|c| -c).collect()).collect();
        let mut out = Vec::new();
        if nu.iter().any(|&c| c < 0) {
            return out;
        }
        let mut current = Vec::new();
        let mut remaining = nu.to_vec();
        fn rec(
            idx: usize,
            gens: &[Gen],
            roots: &[Vec<i64>],
            remaining: &mut Vec<i64>,
            current: &mut Vec<Gen>,
            out: &mut Vec<Monomial>,
        ) {
            if remaining.iter().all(|&c| c == 0) {
                out.push(current.clone());
            }
            for j in idx..gens.len() {
                if remaining.iter().zip(&roots[j]).all(|(r, a)| r >= a) {
                    remaining.iter_mut().zip(&roots[j]).for_each(|(r, a)| *r -= a);
                    current.push(gens[j]);
                    rec(j, gens, roots, remaining, current, out);
                    current.pop();
                    remaining.iter_mut().zip(&roots[j]).for_each(|(r, a)| *r += a);
                }
            }
        }
        rec(0, &gens, &roots, &mut remaining, &mut current, &mut out);
        out.sort();
        out
    }

    /// Canonical negative parts with total `|deg| ≤ k`.
    pub fn negative_monomials(&self, k: usize) -> Vec<Monomial> {
        let k = k as i64;
        let mut gens: Vec<Gen> =
            (-k..0).flat_map(|d| (0..self.alg.dim()).map(move |b| Gen::new(b, d))).collect();
        gens.sort();
        let mut out = Vec::new();
        fn rec(idx: usize, gens: &[Gen], budget: i64, current: &mut Vec<Gen>, out: &mut Vec<Monomial>) {
            out.push(current.clone());
            for j in idx..gens.len() {
                if -gens[j].deg <= budget {
                    current.push(gens[j]);
                    rec(j, gens, budget + gens[j].deg, current, out);
                    current.pop();
                }
            }
        }
        rec(0, &gens, k, &mut Vec::new(), &mut out);
        out.sort();
        out
    }
}

/// An indexed basis of a truncated piece of a singular module.
#[derive(Debug)]
pub struct ModuleSlice {
    pub module: Arc<SingularModule>,
    pub height: usize,
    pub neg_degree: usize,
    pub basis: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    action_cache: Mutex<HashMap<Gen, Arc<Vec<SparseVec>>>>,
}

impl ModuleSlice {
    fn from_basis(module: Arc<SingularModule>, height: usize, neg_degree: usize, mut basis: Vec<Monomial>) -> Self {
        basis.sort_by(|a, b| {
            let (wa, wb) = (module.weight_offset(a), module.weight_offset(b));
            RootHeightOrder::key(&wa).cmp(&RootHeightOrder::key(&wb)).then_with(|| a.cmp(b))
        });
        let index = basis.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        ModuleSlice { module, height, neg_degree, basis, index, action_cache: Mutex::new(HashMap::new()) }
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn index_of(&self, m: &[Gen]) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn coords(&self, v: &ModVec) -> Result<SparseVec, ModuleError> {
        let mut out = SparseVec::new();
        for (m, c) in v {
            let i = self.index_of(m).ok_or_else(|| ModuleError::TruncationExceeded(describe_monomial(&self.module.alg, m)))?;
            out.insert(i, c.clone());
        }
        Ok(out)
    }

    pub fn vector(&self, coords: &SparseVec) -> ModVec {
        coords.iter().map(|(&i, c)| (self.basis[i].clone(), c.clone())).collect()
    }

    /// Columns of the action of `g` on the slice basis.
    pub fn act_matrix(&self, g: Gen) -> Result<Arc<Vec<SparseVec>>, ModuleError> {
        if let Some(hit) = self.action_cache.lock().expect("cache lock").get(&g) {
            return Ok(hit.clone());
        }
        let cols = self
            .basis
            .iter()
            .map(|m| self.coords(&self.module.act_gen(g, m)))
            .collect::<Result<Vec<_>, _>>()?;
        let cols = Arc::new(cols);
        self.action_cache.lock().expect("cache lock").insert(g, cols.clone());
        Ok(cols)
    }

    pub fn act(&self, g: Gen, v: &SparseVec) -> Result<SparseVec, ModuleError> {
        let cols = self.act_matrix(g)?;
        let mut out = SparseVec::new();
        for (&j, c) in v {
            for (&i, x) in &cols[j] {
                add_entry(&mut out, i, c * x);
            }
        }
        Ok(out)
    }

    /// Basis indices grouped by `ν` (weight `λ − ν`).
    pub fn weight_decomposition(&self) -> BTreeMap<Vec<i64>, Vec<usize>> {
        let mut out: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
        for (i, m) in self.basis.iter().enumerate() {
            out.entry(self.module.weight_offset(m)).or_default().push(i);
        }
        out
    }

    /// Matrix entries `(row, col, value)` of `g` on the slice; images leaving the slice are
    /// dropped and counted.
    pub fn truncated_action(&self, g: Gen) -> (Vec<(usize, usize, Q)>, usize) {
        let mut entries = Vec::new();
        let mut dropped = 0;
        for (col, mono) in self.basis.iter().enumerate() {
            for (m, c) in self.module.act_gen(g, mono).iter() {
                match self.index_of(m) {
                    Some(row) => entries.push((row, col, c.clone())),
                    None => dropped += 1,
                }
            }
        }
        (entries, dropped)
    }

    /// Every entry of `g` maps weight offset `ν` to `ν − wt(g)`.
    pub fn respects_weight_blocks(&self, g: Gen, entries: &[(usize, usize, Q)]) -> bool {
        let shift = self.module.alg.basis_weight(g.basis);
        entries.iter().all(|(row, col, _)| {
            let from = self.module.weight_offset(&self.basis[*col]);
            let to = self.module.weight_offset(&self.basis[*row]);
            from.iter().zip(&shift).zip(&to).all(|((f, s), t)| f - s == *t)
        })
    }

    pub fn to_json(&self) -> SliceJson {
        let alg = &self.module.alg;
        SliceJson {
            dimension: self.len(),
            basis: self.basis.iter().map(|m| describe_monomial(alg, m)).collect(),
            weights: self
                .weight_decomposition()
                .into_iter()
                .map(|(nu, idx)| WeightBlockJson { nu, indices: idx })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SliceJson {
    pub dimension: usize,
    pub basis: Vec<String>,
    pub weights: Vec<WeightBlockJson>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightBlockJson {
    pub nu: Vec<i64>,
    pub indices: Vec<usize>,
}

struct RootHeightOrder;

impl RootHeightOrder {
    fn key(nu: &[i64]) -> (i64, Vec<i64>) {
        (nu.iter().sum(), nu.to_vec())
    }
}

/// Root-lattice points `ν ∈ Q_+` of height at most `d`.
pub fn weights_up_to_height(rank: usize, d: usize) -> Vec<Vec<i64>> {
    lattice_box(&vec![d as i64; rank]).into_iter().filter(|nu| nu.iter().sum::<i64>() <= d as i64).collect()
}

/// All canonical finite monomials of height `≤ d`.
pub fn build_finite_module(module: Arc<SingularModule>, d: usize) -> ModuleSlice {
    let basis = weights_up_to_height(module.alg.rank(), d).iter().flat_map(|nu| module.finite_monomials(nu)).collect();
    ModuleSlice::from_basis(module, d, 0, basis)
}

/// Negative part of total degree `≤ k` times the finite slice of height `≤ d`.
pub fn build_affine_slice(module: Arc<SingularModule>, d: usize, k: usize) -> ModuleSlice {
    let finite: Vec<Monomial> =
        weights_up_to_height(module.alg.rank(), d).iter().flat_map(|nu| module.finite_monomials(nu)).collect();
    let mut basis = Vec::new();
    for neg in module.negative_monomials(k) {
        for fin in &finite {
            let mut m = neg.clone();
            m.extend_from_slice(fin);
            basis.push(m);
        }
    }
    ModuleSlice::from_basis(module, d, k, basis)
}

/// Orthogonal antimorphisms `g → g^op` used to twist restricted duals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theta {
    /// `θ_0 = −Id`.
    Dual,
    /// `θ_1`, the transposition `E_α ↔ F_α` fixing the Cartan subalgebra.
    Contragredient,
}

pub fn theta_image(alg: &LieAlgebra, theta: Theta, basis: usize) -> SparseVec {
    match theta {
        Theta::Dual => SparseVec::from([(basis, -Q::one())]),
        Theta::Contragredient => {
            let image = match alg.kind(basis) {
                BasisKind::Lowering(a) => alg.raising(a),
                BasisKind::Raising(a) => alg.lowering(a),
                BasisKind::Cartan(_) => basis,
            };
            SparseVec::from([(image, Q::one())])
        }
    }
}

/// The restricted θ-dual of a finite singular module. Vectors are keyed by the monomial whose
/// dual basis functional they represent; `ψ` is keyed by the empty monomial.
#[derive(Debug, Clone)]
pub struct DualModule {
    pub module: Arc<SingularModule>,
    pub theta: Theta,
}

impl DualModule {
    pub fn new(module: Arc<SingularModule>, theta: Theta) -> Self {
        DualModule { module, theta }
    }

    /// `ν` such that the dual functional of a weight-`(λ − ν)` monomial has weight `θ*(λ − ν)`.
    pub fn weight_offset(&self, m: &[Gen]) -> Vec<i64> {
        self.module.weight_offset(m)
    }

    /// `(X z^i φ)(v) = φ(θ(X) z^i v)`; only nonnegative degrees act on the finite dual.
    pub fn act_gen(&self, g: Gen, phi: &ModVec) -> ModVec {
        let mut out = ModVec::new();
        if g.deg < 0 {
            panic!("negative-degree generators do not act on the finite dual");
        }
        let alg = &self.module.alg;
        for (&image, sign) in &theta_image(alg, self.theta, g.basis) {
            let twisted = Gen::new(image, g.deg);
            let shift = alg.basis_weight(image);
            for (b, c) in phi {
                let nu_b = self.module.weight_offset(b);
                let nu_a: Vec<i64> = nu_b.iter().zip(&shift).map(|(x, s)| x + s).collect();
                for a in self.module.finite_monomials(&nu_a) {
                    if let Some(coef) = self.module.act_gen(twisted, &a).get(b) {
                        add_entry(&mut out, a, sign * c * coef);
                    }
                }
            }
        }
        out
    }

    pub fn act_vec(&self, g: Gen, phi: &ModVec) -> ModVec {
        self.act_gen(g, phi)
    }

    pub fn psi() -> ModVec {
        cyclic_vector()
    }

    /// Evaluation `⟨φ, v⟩` in the monomial bases.
    pub fn pair(phi: &ModVec, v: &ModVec) -> Q {
        phi.iter().filter_map(|(m, c)| v.get(m).map(|x| c * x)).sum()
    }
}

/// Canonical morphism `Φ: W → W^*_{θ_1}` with `Φ(w) = ψ`, evaluated on a monomial.
pub fn shapovalov_image(dual: &DualModule, m: &[Gen]) -> ModVec {
    assert_eq!(dual.theta, Theta::Contragredient);
    dual.module.act_word_dual(dual, m)
}

impl SingularModule {
    fn act_word_dual(&self, dual: &DualModule, word: &[Gen]) -> ModVec {
        word.iter().rev().fold(DualModule::psi(), |acc, &g| dual.act_gen(g, &acc))
    }
}

impl SingularModule {
    /// `n^+_p w = 0`, `H z^i w = a_i(H) w` for `i < p`, and `X z^p w = 0`.
    pub fn highest_weight_holds(&self) -> bool {
        let alg = &self.alg;
        let p = self.depth() as i64;
        let w: &[Gen] = &[];
        for d in 0..=p {
            for a in 0..alg.num_positive_roots() {
                if !self.act_gen(Gen::new(alg.raising(a), d), w).is_empty() {
                    return false;
                }
                if d == p && !self.act_gen(Gen::new(alg.lowering(a), d), w).is_empty() {
                    return false;
                }
            }
            for k in 0..alg.rank() {
                let image = self.act_gen(Gen::new(alg.cartan(k), d), w);
                let expected = if d < p { self.chi.coefficient(d as usize)[k].clone() } else { Q::zero() };
                let got = image.get(&Vec::new()).cloned().unwrap_or_else(Q::zero);
                if image.len() > usize::from(!got.is_zero()) || got != expected {
                    return false;
                }
            }
        }
        true
    }
}

/// `S(v_a, v_b) = ⟨Φ(v_a), v_b⟩` on the weight-`(λ − ν)` block.
pub fn shapovalov_block(module: &Arc<SingularModule>, nu: &[i64]) -> (Vec<Monomial>, Matrix) {
    let dual = DualModule::new(module.clone(), Theta::Contragredient);
    let basis = module.finite_monomials(nu);
    let mut m = Matrix::zeros(basis.len(), basis.len());
    for (a, ma) in basis.iter().enumerate() {
        let phi = shapovalov_image(&dual, ma);
        for (b, mb) in basis.iter().enumerate() {
            if let Some(c) = phi.get(mb) {
                m.set(a, b, c.clone());
            }
        }
    }
    (basis, m)
}

/// `M_{jk} = ⟨ψ̂, E_α z^j F_α z^k ŵ⟩` with `ψ̂` dual to the basis monomial `ŵ`.
pub fn obstruction_matrix(module: &SingularModule, root: usize, w_hat: &[Gen]) -> Matrix {
    let p = module.depth();
    let alg = &module.alg;
    let mut m = Matrix::zeros(p, p);
    let start = ModVec::from([(w_hat.to_vec(), Q::one())]);
    for j in 0..p {
        for k in 0..p {
            let lowered = module.act_vec(Gen::new(alg.lowering(root), k as i64), &start);
            let raised = module.act_vec(Gen::new(alg.raising(root), j as i64), &lowered);
            if let Some(c) = raised.get(w_hat) {
                m.set(j, k, c.clone());
            }
        }
    }
    m
}

pub fn obstruction_determinant(module: &SingularModule, root: usize, w_hat: &[Gen]) -> Q {
    obstruction_matrix(module, root, w_hat).determinant()
}

/// `1/(2(κ + h∨))`, rejecting the critical level.
pub fn sugawara_prefactor(alg: &LieAlgebra, kappa: &Q) -> Result<Q, ModuleError> {
    let shifted = kappa + &alg.dual_coxeter;
    if shifted.is_zero() {
        return Err(ModuleError::CriticalLevel);
    }
    Ok((q(2) * shifted).recip())
}

/// `Δ_λ = (λ | λ + 2ρ) / (2(κ + h∨))` for Dynkin labels `λ`.
pub fn conformal_weight(alg: &LieAlgebra, lambda: &[Q], kappa: &Q) -> Result<Q, ModuleError> {
    let shifted: Vec<Q> = lambda.iter().map(|x| x + q(2)).collect();
    Ok(sugawara_prefactor(alg, kappa)? * alg.functional_form(lambda, &shifted))
}

/// `⟨a, H_α⟩` for a functional given on the simple coroots (simply laced).
pub fn coroot_pairing(alg: &LieAlgebra, functional: &[Q], root: usize) -> Q {
    alg.root_system.positive_roots[root].iter().zip(functional).map(|(c, a)| q(*c) * a).sum()
}

/// `L_n v` with `L_n = 1/(2(κ+h∨)) Σ_j Σ_k :X_k z^{−j} X^k z^{n+j}:`, summing only the terms
/// that can act nontrivially on `v`.
pub fn sugawara_apply(module: &SingularModule, n: i64, v: &ModVec) -> Result<ModVec, ModuleError> {
    let alg = &module.alg;
    let pre = sugawara_prefactor(alg, &module.chi.kappa)?;
    let p = module.depth() as i64;
    let mut out = ModVec::new();
    for (mono, c) in v {
        let reach = p + SingularModule::negative_depth(mono);
        let single = ModVec::from([(mono.clone(), c.clone())]);
        for j in (1 - reach)..=(reach - n - 1).max(0) {
            for (a, b, coeff) in alg.casimir_pairs() {
                let (left, right) = if j >= 1 {
                    (Gen::new(*a, -j), Gen::new(*b, n + j))
                } else {
                    (Gen::new(*b, n + j), Gen::new(*a, -j))
                };
                let result = module.act_vec(left, &module.act_vec(right, &single));
                for (m, x) in result {
                    add_entry(&mut out, m, &pre * coeff * x);
                }
            }
        }
    }
    Ok(out)
}

/// Closed-form eigenvalue of `L_n` on `w` for `n ≥ p − 1`.
pub fn sugawara_eigenvalue(module: &SingularModule, n: i64) -> Result<Q, ModuleError> {
    let alg = &module.alg;
    let pre = sugawara_prefactor(alg, &module.chi.kappa)?;
    let p = module.depth() as i64;
    let chi = &module.chi;
    assert!(n >= p - 1, "closed forms are known only for n ≥ p − 1");
    if n > 2 * (p - 1) {
        return Ok(Q::zero());
    }
    let form = |i: i64, j: i64| alg.functional_form(chi.coefficient(i as usize), chi.coefficient(j as usize));
    if n == p - 1 {
        let rho = vec![Q::one(); alg.rank()];
        let mut total: Q = (0..p).map(|j| form(j, p - 1 - j)).sum();
        total += q(2 * p) * alg.functional_form(&rho, chi.coefficient((p - 1) as usize));
        Ok(pre * total)
    } else {
        Ok(pre * (1 - p + n..=p - 1).map(|j| form(j, n - j)).sum::<Q>())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EigenCheck {
    pub n: i64,
    pub computed: Option<String>,
    pub expected: String,
    pub pass: bool,
}

/// Straightens `L_n w` and compares it with the closed form.
pub fn sugawara_eigencheck(module: &SingularModule, n: i64) -> Result<EigenCheck, ModuleError> {
    let expected = sugawara_eigenvalue(module, n)?;
    let image = sugawara_apply(module, n, &cyclic_vector())?;
    let computed = match image.len() {
        0 => Some(Q::zero()),
        1 => image.get(&Vec::new()).cloned(),
        _ => None,
    };
    Ok(EigenCheck {
        n,
        pass: computed.as_ref() == Some(&expected),
        computed: computed.as_ref().map(format_q),
        expected: format_q(&expected),
    })
}

/// `[L_{−1}, X z^m] v + m X z^{m−1} v`; zero when the commutation relation holds.
pub fn sugawara_commutator_residual(module: &SingularModule, x: usize, m: i64, v: &ModVec) -> Result<ModVec, ModuleError> {
    let g = Gen::new(x, m);
    let lhs_a = sugawara_apply(module, -1, &module.act_vec(g, v))?;
    let lhs_b = module.act_vec(g, &sugawara_apply(module, -1, v)?);
    let mut out = lhs_a;
    for (mono, c) in lhs_b {
        add_entry(&mut out, mono, -c);
    }
    for (mono, c) in module.act_vec(Gen::new(x, m - 1), v) {
        add_entry(&mut out, mono, q(m) * c);
    }
    Ok(out)
}

/// Runs the commutator relation over all basis elements, `0 ≤ m ≤ p` and all slice vectors.
pub fn sugawara_commutator_check(slice: &ModuleSlice) -> Result<bool, ModuleError> {
    let module = &slice.module;
    for x in 0..module.alg.dim() {
        for m in 0..=module.depth() as i64 {
            for mono in &slice.basis {
                let v = ModVec::from([(mono.clone(), Q::one())]);
                if !sugawara_commutator_residual(module, x, m, &v)?.is_empty() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
