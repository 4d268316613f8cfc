//! Tensor products of singular modules and their θ-duals, operator words on slots, and
//! total-weight slices.

use crate::current_algebra::{Gen, SlotOperator};
use crate::lie_core::LieAlgebra;
use crate::linalg::{add_entry, Matrix, SparseVec};
use crate::rational::Q;
use crate::singular_module::{DualModule, ModVec, Monomial, SingularModule, Theta};
use crate::weights::splittings;
use num::{One, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// One tensor factor.
#[derive(Debug, Clone)]
pub enum SlotModule {
    Singular(Arc<SingularModule>),
    Dual(DualModule),
}

impl SlotModule {
    pub fn depth(&self) -> usize {
        match self {
            SlotModule::Singular(m) => m.depth(),
            SlotModule::Dual(d) => d.module.depth(),
        }
    }

    pub fn base(&self) -> &Arc<SingularModule> {
        match self {
            SlotModule::Singular(m) => m,
            SlotModule::Dual(d) => &d.module,
        }
    }

    pub fn act(&self, g: Gen, v: &ModVec) -> ModVec {
        match self {
            SlotModule::Singular(m) => m.act_vec(g, v),
            SlotModule::Dual(d) => d.act_vec(g, v),
        }
    }

    /// Whether weights decrease from the cyclic vector (`λ − Q_+`).
    pub fn is_highest_weight(&self) -> bool {
        !matches!(self, SlotModule::Dual(DualModule { theta: Theta::Dual, .. }))
    }

    /// Weight of a basis vector in simple-root coordinates.
    pub fn weight(&self, alg: &LieAlgebra, m: &[Gen]) -> Vec<Q> {
        let base = self.base();
        let lambda = alg.root_system.to_root_coords(&crate::lie_core::Weight::fundamental(base.chi.lambda.clone())).expect("rank checked");
        let nu = base.weight_offset(m);
        let w: Vec<Q> = lambda.iter().zip(&nu).map(|(l, &n)| l - Q::from_integer(n.into())).collect();
        match self {
            SlotModule::Dual(DualModule { theta: Theta::Dual, .. }) => w.into_iter().map(|x| -x).collect(),
            _ => w,
        }
    }
}

pub type TensorKey = Vec<Monomial>;
pub type TensorVec = BTreeMap<TensorKey, Q>;

#[derive(Debug, Clone)]
pub struct TensorProduct {
    pub alg: Arc<LieAlgebra>,
    pub slots: Vec<SlotModule>,
}

impl TensorProduct {
    pub fn new(alg: Arc<LieAlgebra>, slots: Vec<SlotModule>) -> Self {
        TensorProduct { alg, slots }
    }

    pub fn arity(&self) -> usize {
        self.slots.len()
    }

    pub fn cyclic_key(&self) -> TensorKey {
        vec![Vec::new(); self.arity()]
    }

    pub fn act_slot(&self, slot: usize, g: Gen, v: &TensorVec) -> TensorVec {
        let mut out = TensorVec::new();
        for (key, c) in v {
            let local = ModVec::from([(key[slot].clone(), Q::one())]);
            for (m, x) in self.slots[slot].act(g, &local) {
                let mut k = key.clone();
                k[slot] = m;
                add_entry(&mut out, k, c * x);
            }
        }
        out
    }

    /// Diagonal action `Σ_slots X^{(slot)}` of a constant generator.
    pub fn act_diagonal(&self, basis: usize, v: &TensorVec) -> TensorVec {
        let mut out = TensorVec::new();
        for slot in 0..self.arity() {
            for (k, c) in self.act_slot(slot, Gen::new(basis, 0), v) {
                add_entry(&mut out, k, c);
            }
        }
        out
    }

    /// Applies every word right-to-left.
    pub fn apply(&self, op: &SlotOperator, v: &TensorVec) -> TensorVec {
        let mut out = TensorVec::new();
        for (word, c) in &op.terms {
            let mut acc = v.clone();
            for &(slot, g) in word.iter().rev() {
                acc = self.act_slot(slot, g, &acc);
                if acc.is_empty() {
                    break;
                }
            }
            for (k, x) in acc {
                add_entry(&mut out, k, c * x);
            }
        }
        out
    }

    /// Sum of slot weights of a pure tensor.
    pub fn weight(&self, key: &TensorKey) -> Vec<Q> {
        let mut total = vec![Q::zero(); self.alg.rank()];
        for (slot, m) in self.slots.iter().zip(key) {
            for (t, w) in total.iter_mut().zip(slot.weight(&self.alg, m)) {
                *t += w;
            }
        }
        total
    }

    /// Pure tensors of total weight `target`; every slot must be of highest-weight type.
    pub fn weight_slice(&self, target: &[Q]) -> Vec<TensorKey> {
        assert!(self.slots.iter().all(SlotModule::is_highest_weight), "slices need highest-weight slots");
        let top = self.weight(&self.cyclic_key());
        let Some(total_nu) = integral_offset(&top, target) else {
            return Vec::new();
        };
        self.slice_by_offset(&total_nu)
    }

    /// Pure tensors with `Σ_j ν_j = total_nu`.
    pub fn slice_by_offset(&self, total_nu: &[i64]) -> Vec<TensorKey> {
        let mut out = Vec::new();
        for split in splittings(total_nu, self.arity()) {
            let per_slot: Vec<Vec<Monomial>> =
                split.iter().zip(&self.slots).map(|(nu, s)| s.base().finite_monomials(nu)).collect();
            let mut keys: Vec<TensorKey> = vec![Vec::new()];
            for options in per_slot {
                keys = keys
                    .into_iter()
                    .flat_map(|k| {
                        options.iter().map(move |m| {
                            let mut k2 = k.clone();
                            k2.push(m.clone());
                            k2
                        })
                    })
                    .collect();
            }
            out.extend(keys);
        }
        out.sort();
        out
    }
}

/// Index over a list of pure tensors.
#[derive(Debug, Clone)]
pub struct IndexedBasis {
    pub keys: Vec<TensorKey>,
    index: HashMap<TensorKey, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("vector leaves the indexed basis")]
pub struct OutsideBasis;

impl IndexedBasis {
    pub fn new(keys: Vec<TensorKey>) -> Self {
        let index = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        IndexedBasis { keys, index }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn index_of(&self, k: &TensorKey) -> Option<usize> {
        self.index.get(k).copied()
    }

    pub fn coords(&self, v: &TensorVec) -> Result<SparseVec, OutsideBasis> {
        v.iter().map(|(k, c)| Ok((self.index_of(k).ok_or(OutsideBasis)?, c.clone()))).collect()
    }

    pub fn vector(&self, coords: &SparseVec) -> TensorVec {
        coords.iter().map(|(&i, c)| (self.keys[i].clone(), c.clone())).collect()
    }

    pub fn unit(&self, i: usize) -> TensorVec {
        TensorVec::from([(self.keys[i].clone(), Q::one())])
    }

    /// Matrix of a weight-preserving operator on this basis.
    pub fn operator_matrix(&self, tensor: &TensorProduct, op: &SlotOperator) -> Result<Matrix, OutsideBasis> {
        let cols = (0..self.len())
            .map(|i| self.coords(&tensor.apply(op, &self.unit(i))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::from_sparse_columns(self.len(), &cols))
    }
}

/// `top − target` as a nonnegative integer vector, if it is one.
pub fn integral_offset(top: &[Q], target: &[Q]) -> Option<Vec<i64>> {
    top.iter()
        .zip(target)
        .map(|(t, x)| {
            let d = t - x;
            if d.is_integer() && d >= Q::zero() {
                d.to_integer().try_into().ok()
            } else {
                None
            }
        })
        .collect()
}
