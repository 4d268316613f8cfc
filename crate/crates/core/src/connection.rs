//! The universal connection at depth `p`: rational r-matrices, Hamiltonians as sums of
//! coefficient functions times quadratic tensors, the classical Yang–Baxter residual and
//! exact flatness checks.

use crate::current_algebra::{embed, omega_ml, CurrentTensor, DegreeWindow, Gen, SlotEmbedding, SlotOperator};
use crate::lie_core::LieAlgebra;
use crate::linalg::Matrix;
use crate::rational::{binomial, pow, q, sign, Q};
use crate::tensor::{IndexedBasis, OutsideBasis, TensorProduct};
use num::complex::Complex64;
use num::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConnectionError {
    #[error("times must be pairwise distinct (slots {0} and {1} coincide)")]
    CoincidentTimes(usize, usize),
    #[error("time t = 0 is a pole of the r-matrix")]
    ZeroTime,
    #[error("critical level κ = −h∨")]
    CriticalLevel,
    #[error("operator leaves the chosen basis")]
    OutsideBasis,
}

impl From<OutsideBasis> for ConnectionError {
    fn from(_: OutsideBasis) -> Self {
        ConnectionError::OutsideBasis
    }
}

/// `1/(κ + h∨)`.
pub fn level_factor(alg: &LieAlgebra, kappa: &Q) -> Result<Q, ConnectionError> {
    let shifted = kappa + &alg.dual_coxeter;
    if shifted.is_zero() {
        return Err(ConnectionError::CriticalLevel);
    }
    Ok(shifted.recip())
}

/// Coefficient of `Ω_{ml}` in `r_p(t)`: `(−1)^m C(m+l, l) t^{−1−m−l}`.
pub fn r_coefficient(m: usize, l: usize, t: &Q) -> Q {
    sign(m as i64) * binomial((m + l) as u64, l as u64) * pow(t, -1 - (m + l) as i64)
}

/// `r_p(t) = Σ_{m,l<p} (−1)^m C(m+l, l) t^{−1−m−l} Ω_{ml}`, the truncated expansion of
/// `Ω/(t + w_1 − w_2)`.
pub fn r_matrix(alg: &LieAlgebra, p: usize, t: &Q) -> Result<CurrentTensor, ConnectionError> {
    if t.is_zero() {
        return Err(ConnectionError::ZeroTime);
    }
    let mut out = CurrentTensor::zero(2, DegreeWindow::truncated(p));
    for m in 0..p {
        for l in 0..p {
            out.add_scaled(&omega_ml(alg, m as i64, l as i64), &r_coefficient(m, l, t));
        }
    }
    Ok(out)
}

/// `s_p(t) = Σ_{m+l+1<p} C(m+l, l) t^l Ω_{m,m+l+1}`.
pub fn s_matrix(alg: &LieAlgebra, p: usize, t: &Q) -> CurrentTensor {
    let mut out = CurrentTensor::zero(2, DegreeWindow::truncated(p));
    for m in 0..p {
        for l in 0..p {
            if m + l + 1 < p {
                let c = binomial((m + l) as u64, l as u64) * pow(t, l as i64);
                out.add_scaled(&omega_ml(alg, m as i64, (m + l + 1) as i64), &c);
            }
        }
    }
    out
}

fn bracket_into(
    alg: &LieAlgebra,
    p: usize,
    out: &mut CurrentTensor,
    x: Gen,
    y: Gen,
    coeff: &Q,
    place: impl Fn(Gen) -> Vec<Gen>,
) {
    let deg = x.deg + y.deg;
    if deg >= p as i64 {
        return;
    }
    for (&k, s) in alg.bracket_basis(x.basis, y.basis) {
        out.add_term(place(Gen::new(k, deg)), coeff * s);
    }
}

/// `[r12, r13] + [r12, r23] + [r13, r23]` in `g_p^{⊗3}`.
pub fn cybe_residual_of(
    alg: &LieAlgebra,
    p: usize,
    r12: &CurrentTensor,
    r13: &CurrentTensor,
    r23: &CurrentTensor,
) -> CurrentTensor {
    let mut out = CurrentTensor::zero(3, DegreeWindow::truncated(p));
    for (f, c) in &r12.terms {
        for (g, d) in &r13.terms {
            let cd = c * d;
            bracket_into(alg, p, &mut out, f[0], g[0], &cd, |x| vec![x, f[1], g[1]]);
        }
        for (g, d) in &r23.terms {
            let cd = c * d;
            bracket_into(alg, p, &mut out, f[1], g[0], &cd, |x| vec![f[0], x, g[1]]);
        }
    }
    for (f, c) in &r13.terms {
        for (g, d) in &r23.terms {
            let cd = c * d;
            bracket_into(alg, p, &mut out, f[1], g[1], &cd, |x| vec![f[0], g[0], x]);
        }
    }
    out
}

pub fn cybe_residual(alg: &LieAlgebra, p: usize, t: [&Q; 3]) -> Result<CurrentTensor, ConnectionError> {
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        if t[a] == t[b] {
            return Err(ConnectionError::CoincidentTimes(a, b));
        }
    }
    let r12 = r_matrix(alg, p, &(t[0] - t[1]))?;
    let r13 = r_matrix(alg, p, &(t[0] - t[2]))?;
    let r23 = r_matrix(alg, p, &(t[1] - t[2]))?;
    Ok(cybe_residual_of(alg, p, &r12, &r13, &r23))
}

/// A factor of a Hamiltonian coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TimeFactor {
    /// `t_i − t_j`.
    Diff(usize, usize),
    /// `t_i`.
    Time(usize),
}

impl TimeFactor {
    fn eval(&self, t: &[Q]) -> Q {
        match *self {
            TimeFactor::Diff(i, j) => &t[i] - &t[j],
            TimeFactor::Time(i) => t[i].clone(),
        }
    }

    fn eval_complex(&self, t: &[Complex64]) -> Complex64 {
        match *self {
            TimeFactor::Diff(i, j) => t[i] - t[j],
            TimeFactor::Time(i) => t[i],
        }
    }

    /// `∂/∂t_k` of the factor, which is a constant.
    fn derivative(&self, k: usize) -> i64 {
        match *self {
            TimeFactor::Diff(i, j) => i64::from(i == k) - i64::from(j == k),
            TimeFactor::Time(i) => i64::from(i == k),
        }
    }
}

/// `scale · Π factor^power`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coefficient {
    pub scale: Q,
    pub powers: Vec<(TimeFactor, i64)>,
}

impl Coefficient {
    pub fn constant(scale: Q) -> Self {
        Coefficient { scale, powers: Vec::new() }
    }

    pub fn eval(&self, t: &[Q]) -> Result<Q, ConnectionError> {
        let mut acc = self.scale.clone();
        for (f, e) in &self.powers {
            let base = f.eval(t);
            if base.is_zero() && *e < 0 {
                return Err(match f {
                    TimeFactor::Diff(i, j) => ConnectionError::CoincidentTimes(*i, *j),
                    TimeFactor::Time(_) => ConnectionError::ZeroTime,
                });
            }
            acc *= pow(&base, *e);
        }
        Ok(acc)
    }

    pub fn eval_complex(&self, t: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(crate::rational::to_f64(&self.scale), 0.0);
        for (f, e) in &self.powers {
            acc *= f.eval_complex(t).powi(*e as i32);
        }
        acc
    }

    /// Product rule; each summand is again a monomial coefficient.
    pub fn derivative(&self, k: usize) -> Vec<Coefficient> {
        let mut out = Vec::new();
        for (idx, (f, e)) in self.powers.iter().enumerate() {
            let d = f.derivative(k);
            if d == 0 || *e == 0 {
                continue;
            }
            let mut powers = self.powers.clone();
            powers[idx].1 -= 1;
            out.push(Coefficient { scale: &self.scale * q(d * e), powers });
        }
        out
    }
}

/// Identifies the operator of a term, so its matrix is computed once per basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OperatorKey {
    Omega { first: usize, second: usize, m: i64, l: i64 },
    Cartan { slot: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TermKind {
    Finite,
    Infinity,
    Dynamical,
}

#[derive(Debug, Clone)]
pub struct HamiltonianTerm {
    pub kind: TermKind,
    pub coefficient: Coefficient,
    pub key: OperatorKey,
    pub operator: SlotOperator,
}

/// Contribution from the point at infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfinityTerms {
    /// No module acts at infinity (or it is tame, so all terms vanish there).
    None,
    /// `Ĥ″` acting on the tensor slot with this index.
    Universal { slot: usize },
    /// `1/(κ+h∨) Σ_k μ(H_k z) H^{k(i)}` with `μ` given by values on simple coroots.
    Dynamical { mu: Vec<Q> },
}

/// Deliberate coefficient errors for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    /// Replaces `C(m+l, l)` by `C(m+l, l) + 1` in `Ĥ′`.
    Binomial { m: usize, l: usize },
    /// Flips the sign of `Ĥ″`.
    InfinitySign,
}

#[derive(Debug, Clone)]
pub struct UniversalConnection {
    pub alg: Arc<LieAlgebra>,
    pub depth: usize,
    pub finite_slots: usize,
    pub arity: usize,
    pub kappa: Q,
    pub infinity: InfinityTerms,
    pub hamiltonians: Vec<Vec<HamiltonianTerm>>,
}

fn omega_operator(alg: &LieAlgebra, first: usize, second: usize, m: i64, l: i64, arity: usize) -> SlotOperator {
    embed(&omega_ml(alg, m, l), SlotEmbedding { first, second, target_arity: arity }).expect("slots in range")
}

impl UniversalConnection {
    pub fn new(
        alg: Arc<LieAlgebra>,
        kappa: Q,
        finite_slots: usize,
        depth: usize,
        infinity: InfinityTerms,
        corruption: Option<Corruption>,
    ) -> Result<Self, ConnectionError> {
        let inv = level_factor(&alg, &kappa)?;
        let arity = match infinity {
            InfinityTerms::Universal { slot } => finite_slots.max(slot + 1),
            _ => finite_slots,
        };
        let p = depth;
        let mut hamiltonians = Vec::with_capacity(finite_slots);
        for i in 0..finite_slots {
            let mut terms = Vec::new();
            for j in (0..finite_slots).filter(|&j| j != i) {
                for m in 0..p {
                    for l in 0..p {
                        let mut binom = binomial((m + l) as u64, l as u64);
                        if corruption == Some(Corruption::Binomial { m, l }) {
                            binom += Q::one();
                        }
                        terms.push(HamiltonianTerm {
                            kind: TermKind::Finite,
                            coefficient: Coefficient {
                                scale: -&inv * sign(m as i64) * binom,
                                powers: vec![(TimeFactor::Diff(i, j), -1 - (m + l) as i64)],
                            },
                            key: OperatorKey::Omega { first: i, second: j, m: m as i64, l: l as i64 },
                            operator: omega_operator(&alg, i, j, m as i64, l as i64, arity),
                        });
                    }
                }
            }
            match &infinity {
                InfinityTerms::None => {}
                InfinityTerms::Universal { slot } => {
                    let flip = if corruption == Some(Corruption::InfinitySign) { -Q::one() } else { Q::one() };
                    for m in 0..p {
                        for l in 0..p {
                            if m + l + 1 >= p {
                                continue;
                            }
                            let top = (m + l + 1) as i64;
                            terms.push(HamiltonianTerm {
                                kind: TermKind::Infinity,
                                coefficient: Coefficient {
                                    scale: &inv * &flip * binomial((m + l) as u64, l as u64),
                                    powers: vec![(TimeFactor::Time(i), l as i64)],
                                },
                                key: OperatorKey::Omega { first: i, second: *slot, m: m as i64, l: top },
                                operator: omega_operator(&alg, i, *slot, m as i64, top, arity),
                            });
                        }
                    }
                }
                InfinityTerms::Dynamical { mu } => {
                    let mut op = SlotOperator::new(arity);
                    for (h, c) in alg.cartan_dual(mu) {
                        op.add(vec![(i, Gen::new(h, 0))], c);
                    }
                    terms.push(HamiltonianTerm {
                        kind: TermKind::Dynamical,
                        coefficient: Coefficient::constant(inv.clone()),
                        key: OperatorKey::Cartan { slot: i },
                        operator: op,
                    });
                }
            }
            hamiltonians.push(terms);
        }
        Ok(UniversalConnection { alg, depth, finite_slots, arity, kappa, infinity, hamiltonians })
    }

    /// `L_0^{(i)} = −1/(κ+h∨) Σ_{j≠i} Σ_{m,l} C(m+l, l) (−1)^m t_{ij}^{−m−l} Ω^{(ij)}_{ml}`.
    pub fn dilation_terms(&self, i: usize) -> Vec<HamiltonianTerm> {
        let inv = level_factor(&self.alg, &self.kappa).expect("checked at construction");
        let p = self.depth;
        let mut terms = Vec::new();
        for j in (0..self.finite_slots).filter(|&j| j != i) {
            for m in 0..p {
                for l in 0..p {
                    terms.push(HamiltonianTerm {
                        kind: TermKind::Finite,
                        coefficient: Coefficient {
                            scale: -&inv * sign(m as i64) * binomial((m + l) as u64, l as u64),
                            powers: vec![(TimeFactor::Diff(i, j), -((m + l) as i64))],
                        },
                        key: OperatorKey::Omega { first: i, second: j, m: m as i64, l: l as i64 },
                        operator: omega_operator(&self.alg, i, j, m as i64, l as i64, self.arity),
                    });
                }
            }
        }
        terms
    }
}

/// One scalar coefficient times a shared operator matrix.
pub type WeightedMatrix = (Coefficient, Arc<Matrix>);

/// Exact operator matrices of every Hamiltonian term on a fixed basis.
#[derive(Debug, Clone)]
pub struct TermMatrices {
    pub dim: usize,
    pub hamiltonians: Vec<Vec<WeightedMatrix>>,
    pub dilations: Vec<Vec<WeightedMatrix>>,
}

impl TermMatrices {
    pub fn build(conn: &UniversalConnection, tensor: &TensorProduct, basis: &IndexedBasis) -> Result<Self, ConnectionError> {
        let mut cache: HashMap<OperatorKey, Arc<Matrix>> = HashMap::new();
        let mut lookup = |term: &HamiltonianTerm| -> Result<WeightedMatrix, ConnectionError> {
            if let Some(m) = cache.get(&term.key) {
                return Ok((term.coefficient.clone(), m.clone()));
            }
            let m = Arc::new(basis.operator_matrix(tensor, &term.operator)?);
            cache.insert(term.key, m.clone());
            Ok((term.coefficient.clone(), m))
        };
        let hamiltonians = conn
            .hamiltonians
            .iter()
            .map(|terms| terms.iter().map(&mut lookup).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let dilations = (0..conn.finite_slots)
            .map(|i| conn.dilation_terms(i).iter().map(&mut lookup).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TermMatrices { dim: basis.len(), hamiltonians, dilations })
    }

    /// Applies `f` to every distinct matrix (e.g. reduction to a quotient).
    pub fn map_matrices<E>(&self, mut f: impl FnMut(&Matrix) -> Result<Matrix, E>, dim: usize) -> Result<Self, E> {
        let mut done: HashMap<*const Matrix, Arc<Matrix>> = HashMap::new();
        let mut convert = |list: &Vec<Vec<WeightedMatrix>>| -> Result<Vec<Vec<WeightedMatrix>>, E> {
            list.iter()
                .map(|terms| {
                    terms
                        .iter()
                        .map(|(c, m)| {
                            let key = Arc::as_ptr(m);
                            if let Some(hit) = done.get(&key) {
                                return Ok((c.clone(), hit.clone()));
                            }
                            let image = Arc::new(f(m)?);
                            done.insert(key, image.clone());
                            Ok((c.clone(), image))
                        })
                        .collect()
                })
                .collect()
        };
        let hamiltonians = convert(&self.hamiltonians)?;
        let dilations = convert(&self.dilations)?;
        Ok(TermMatrices { dim, hamiltonians, dilations })
    }

    fn combine(&self, terms: &[WeightedMatrix], t: &[Q]) -> Result<Matrix, ConnectionError> {
        let mut acc = Matrix::zeros(self.dim, self.dim);
        for (c, m) in terms {
            let value = c.eval(t)?;
            if !value.is_zero() {
                acc = &acc + &m.scale(&value);
            }
        }
        Ok(acc)
    }

    pub fn hamiltonian(&self, i: usize, t: &[Q]) -> Result<Matrix, ConnectionError> {
        self.combine(&self.hamiltonians[i], t)
    }

    pub fn dilation(&self, i: usize, t: &[Q]) -> Result<Matrix, ConnectionError> {
        self.combine(&self.dilations[i], t)
    }

    /// `∂Ĥ_i/∂t_k` evaluated exactly.
    pub fn hamiltonian_derivative(&self, i: usize, k: usize, t: &[Q]) -> Result<Matrix, ConnectionError> {
        let mut acc = Matrix::zeros(self.dim, self.dim);
        for (c, m) in &self.hamiltonians[i] {
            for d in c.derivative(k) {
                let value = d.eval(t)?;
                if !value.is_zero() {
                    acc = &acc + &m.scale(&value);
                }
            }
        }
        Ok(acc)
    }

    /// `[Ĥ_i(t), Ĥ_j(t)]`.
    pub fn flatness_residual(&self, i: usize, j: usize, t: &[Q]) -> Result<Matrix, ConnectionError> {
        Ok(self.hamiltonian(i, t)?.commutator(&self.hamiltonian(j, t)?))
    }

    /// `∂_i Ĥ_j − ∂_j Ĥ_i`.
    pub fn closedness_residual(&self, i: usize, j: usize, t: &[Q]) -> Result<Matrix, ConnectionError> {
        Ok(&self.hamiltonian_derivative(j, i, t)? - &self.hamiltonian_derivative(i, j, t)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessReport {
    pub dim: usize,
    pub points_checked: usize,
    pub max_commutator_entry: String,
    pub max_closedness_entry: String,
    pub pass: bool,
}

/// Checks `[Ĥ_i, Ĥ_j] = 0` and `∂_iĤ_j = ∂_jĤ_i` exactly at every sample point, in parallel.
pub fn flatness_check(matrices: &TermMatrices, samples: &[Vec<Q>]) -> Result<FlatnessReport, ConnectionError> {
    let n = matrices.hamiltonians.len();
    let per_point: Vec<Result<(Q, Q), ConnectionError>> = samples
        .par_iter()
        .map(|t| {
            let hs = (0..n).map(|i| matrices.hamiltonian(i, t)).collect::<Result<Vec<_>, _>>()?;
            let mut worst = (Q::zero(), Q::zero());
            for i in 0..n {
                for j in i + 1..n {
                    worst.0 = worst.0.clone().max(hs[i].commutator(&hs[j]).max_abs());
                    worst.1 = worst.1.clone().max(matrices.closedness_residual(i, j, t)?.max_abs());
                }
            }
            Ok(worst)
        })
        .collect();
    let mut worst = (Q::zero(), Q::zero());
    for r in per_point {
        let (a, b) = r?;
        worst.0 = worst.0.max(a);
        worst.1 = worst.1.max(b);
    }
    Ok(FlatnessReport {
        dim: matrices.dim,
        points_checked: samples.len(),
        pass: worst.0.is_zero() && worst.1.is_zero(),
        max_commutator_entry: crate::rational::format_q(&worst.0),
        max_closedness_entry: crate::rational::format_q(&worst.1),
    })
}
