//! g-coinvariants of tensor products of finite singular modules over marked points, computed
//! on a single total-weight slice by exact elimination, and the reduction of connection
//! operators to the quotient.

use crate::connection::{ConnectionError, Corruption, InfinityTerms, TermMatrices, UniversalConnection};
use crate::current_algebra::Gen;
use crate::lie_core::{LieAlgebra, RootSystem, Weight};
use crate::linalg::{add_entry, Echelon, Matrix, SparseVec};
use crate::rational::{binomial, format_q, pow, sign, Q};
use crate::singular_module::{
    describe_monomial, sugawara_apply, DualModule, ModVec, ModuleError, SingularCharacter, SingularModule, Theta,
};
use crate::tensor::{integral_offset, IndexedBasis, SlotModule, TensorKey, TensorProduct, TensorVec};
use crate::weights::dim_tensor_weight_space;
use num::Zero;
use serde::Serialize;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoinvariantError {
    #[error("marked points {0} and {1} share a time")]
    CoincidentTimes(usize, usize),
    #[error("point {0} has a level different from the configuration level")]
    LevelMismatch(usize),
    #[error("character of point {0} does not match the algebra rank")]
    RankMismatch(usize),
    #[error("unsupported module at infinity: {0}")]
    UnsupportedInfinity(String),
    #[error("height cutoff {cutoff} is below the required {required}")]
    CutoffTooSmall { cutoff: usize, required: usize },
    #[error("operator does not preserve the relation subspace (relation {0})")]
    NonInvariant(usize),
    #[error("vector leaves the ambient slice")]
    OutsideBasis,
    #[error(transparent)]
    Module(#[from] ModuleError),
    #[error(transparent)]
    Connection(#[from] ConnectionError),
}

impl From<crate::tensor::OutsideBasis> for CoinvariantError {
    fn from(_: crate::tensor::OutsideBasis) -> Self {
        CoinvariantError::OutsideBasis
    }
}

/// What sits at the point at infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfinitySpec {
    Singular(SingularCharacter),
    Dual { character: SingularCharacter, theta: Theta },
    /// No module; a Cartan term `h_μ` enters each Hamiltonian instead.
    Dynamical { mu: Vec<Q> },
}

#[derive(Debug, Clone)]
pub struct MarkedConfiguration {
    pub alg: Arc<LieAlgebra>,
    pub kappa: Q,
    pub times: Vec<Q>,
    pub characters: Vec<SingularCharacter>,
    pub infinity: InfinitySpec,
    /// Functions vanishing at an unmarked point: no relations at all.
    pub restricted: bool,
}

/// How the relation subspace of a block is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockMode {
    /// Finite slots only; relations `E_α · (slice at N + α)`.
    RaisingQuotient,
    /// Finite slots only; relations `F_α · (slice at N − α)`.
    LoweringQuotient,
    /// All slots including infinity; relations are diagonal `g`-images into total weight 0.
    FullTensor,
    /// Finite slots only, no relations.
    NoRelations,
}

impl MarkedConfiguration {
    pub fn new(
        alg: Arc<LieAlgebra>,
        kappa: Q,
        times: Vec<Q>,
        characters: Vec<SingularCharacter>,
        infinity: InfinitySpec,
        restricted: bool,
    ) -> Result<Self, CoinvariantError> {
        for i in 0..times.len() {
            for j in i + 1..times.len() {
                if times[i] == times[j] {
                    return Err(CoinvariantError::CoincidentTimes(i, j));
                }
            }
        }
        assert_eq!(times.len(), characters.len(), "one character per marked point");
        let at_infinity = match &infinity {
            InfinitySpec::Singular(c) | InfinitySpec::Dual { character: c, .. } => Some(c),
            InfinitySpec::Dynamical { mu } => {
                if mu.len() != alg.rank() {
                    return Err(CoinvariantError::RankMismatch(characters.len()));
                }
                None
            }
        };
        for (idx, chi) in characters.iter().chain(at_infinity).enumerate() {
            if chi.kappa != kappa {
                return Err(CoinvariantError::LevelMismatch(idx));
            }
            if chi.lambda.len() != alg.rank() {
                return Err(CoinvariantError::RankMismatch(idx));
            }
        }
        Ok(MarkedConfiguration { alg, kappa, times, characters, infinity, restricted })
    }

    pub fn finite_points(&self) -> usize {
        self.characters.len()
    }

    pub fn infinity_depth(&self) -> usize {
        match &self.infinity {
            InfinitySpec::Singular(c) | InfinitySpec::Dual { character: c, .. } => c.depth,
            InfinitySpec::Dynamical { .. } => 1,
        }
    }

    /// Largest depth over every slot, the depth of the universal connection.
    pub fn depth(&self) -> usize {
        self.characters.iter().map(|c| c.depth).chain([self.infinity_depth()]).max().unwrap_or(1)
    }

    pub fn default_mode(&self) -> Result<BlockMode, CoinvariantError> {
        if self.restricted {
            return Ok(BlockMode::NoRelations);
        }
        Ok(match &self.infinity {
            InfinitySpec::Singular(c) if c.depth == 1 => BlockMode::RaisingQuotient,
            InfinitySpec::Singular(_) => BlockMode::FullTensor,
            InfinitySpec::Dual { character, theta: Theta::Contragredient } if character.depth == 1 => {
                BlockMode::RaisingQuotient
            }
            InfinitySpec::Dual { theta: Theta::Contragredient, .. } => BlockMode::FullTensor,
            InfinitySpec::Dual { character, theta: Theta::Dual } if character.depth == 1 => BlockMode::LoweringQuotient,
            InfinitySpec::Dual { theta: Theta::Dual, .. } => {
                return Err(CoinvariantError::UnsupportedInfinity("θ0-dual of depth above 1".into()))
            }
            InfinitySpec::Dynamical { .. } => BlockMode::NoRelations,
        })
    }

    fn root_coords(&self, lambda: &[Q]) -> Vec<Q> {
        self.alg.root_system.to_root_coords(&Weight::fundamental(lambda.to_vec())).expect("rank validated")
    }

    /// `N = Σ_j λ_j ± λ_∞` in simple-root coordinates; the ambient slice is `Σ_j ν_j = N`.
    pub fn effective_offset(&self) -> Vec<Q> {
        let mut total = vec![Q::zero(); self.alg.rank()];
        for chi in &self.characters {
            for (t, x) in total.iter_mut().zip(self.root_coords(&chi.lambda)) {
                *t += x;
            }
        }
        let shift = match &self.infinity {
            InfinitySpec::Singular(c) | InfinitySpec::Dual { character: c, theta: Theta::Contragredient } => {
                self.root_coords(&c.lambda)
            }
            InfinitySpec::Dual { character: c, theta: Theta::Dual } => {
                self.root_coords(&c.lambda).into_iter().map(|x| -x).collect()
            }
            InfinitySpec::Dynamical { .. } => vec![Q::zero(); self.alg.rank()],
        };
        total.iter().zip(shift).map(|(a, b)| a + b).collect()
    }

    fn finite_slots(&self) -> Result<Vec<SlotModule>, CoinvariantError> {
        self.characters
            .iter()
            .map(|chi| Ok(SlotModule::Singular(Arc::new(SingularModule::new(self.alg.clone(), chi.clone())?))))
            .collect()
    }

    fn infinity_slot(&self) -> Result<SlotModule, CoinvariantError> {
        match &self.infinity {
            InfinitySpec::Singular(c) => Ok(SlotModule::Singular(Arc::new(SingularModule::new(self.alg.clone(), c.clone())?))),
            InfinitySpec::Dual { character, theta: Theta::Contragredient } => Ok(SlotModule::Dual(DualModule::new(
                Arc::new(SingularModule::new(self.alg.clone(), character.clone())?),
                Theta::Contragredient,
            ))),
            other => Err(CoinvariantError::UnsupportedInfinity(format!("{other:?} cannot be a tensor slot"))),
        }
    }

    pub fn tensor(&self, mode: BlockMode) -> Result<TensorProduct, CoinvariantError> {
        let mut slots = self.finite_slots()?;
        if mode == BlockMode::FullTensor {
            slots.push(self.infinity_slot()?);
        }
        Ok(TensorProduct::new(self.alg.clone(), slots))
    }

    pub fn connection(&self, mode: BlockMode, corruption: Option<Corruption>) -> Result<UniversalConnection, CoinvariantError> {
        let infinity = match (&self.infinity, mode) {
            (_, BlockMode::FullTensor) => InfinityTerms::Universal { slot: self.finite_points() },
            (InfinitySpec::Dynamical { mu }, _) => InfinityTerms::Dynamical { mu: mu.clone() },
            _ => InfinityTerms::None,
        };
        Ok(UniversalConnection::new(
            self.alg.clone(),
            self.kappa.clone(),
            self.finite_points(),
            self.depth(),
            infinity,
            corruption,
        )?)
    }
}

/// The ambient slice, its relation subspace in echelon form, and the quotient coordinates
/// (one per non-pivot column).
#[derive(Debug, Clone)]
pub struct BlockSpace {
    pub mode: BlockMode,
    pub tensor: TensorProduct,
    pub ambient: IndexedBasis,
    pub relations: Echelon,
    pub free_columns: Vec<usize>,
    /// `Σ ν` of the ambient slice, when the slice is nonempty.
    pub offset: Option<Vec<i64>>,
}

fn height_of(nu: &[i64]) -> usize {
    RootSystem::height(nu).max(0) as usize
}

fn shifted(offset: &[i64], root: &[i64], s: i64) -> Vec<i64> {
    offset.iter().zip(root).map(|(a, b)| a + s * b).collect()
}

pub fn compute_coinvariants(cfg: &MarkedConfiguration, cutoff: usize) -> Result<BlockSpace, CoinvariantError> {
    compute_block(cfg, cutoff, cfg.default_mode()?)
}

/// Builds the block in the requested mode; `FullTensor` doubles as an oracle for the reduced
/// modes when the module at infinity is a tensor slot.
pub fn compute_block(cfg: &MarkedConfiguration, cutoff: usize, mode: BlockMode) -> Result<BlockSpace, CoinvariantError> {
    let tensor = cfg.tensor(mode)?;
    let rs = &cfg.alg.root_system;
    let zero = vec![Q::zero(); cfg.alg.rank()];
    let offset = integral_offset(&cfg.effective_offset(), &zero);
    let theta_height = height_of(rs.highest_root());
    if let Some(n) = &offset {
        let required = match mode {
            BlockMode::RaisingQuotient | BlockMode::FullTensor => height_of(n) + theta_height,
            BlockMode::LoweringQuotient | BlockMode::NoRelations => height_of(n),
        };
        if cutoff < required {
            return Err(CoinvariantError::CutoffTooSmall { cutoff, required });
        }
    }
    let ambient_keys = match (&offset, mode) {
        (None, _) => Vec::new(),
        (Some(_), BlockMode::FullTensor) => tensor.weight_slice(&zero),
        (Some(n), _) => tensor.slice_by_offset(n),
    };
    let ambient = IndexedBasis::new(ambient_keys);
    let mut relations = Echelon::new();
    if let Some(n) = &offset {
        let mut add_images = |source: Vec<TensorKey>, generator: usize| -> Result<(), CoinvariantError> {
            for key in source {
                let image = tensor.act_diagonal(generator, &TensorVec::from([(key, Q::from_integer(1.into()))]));
                relations.insert(&ambient.coords(&image)?);
            }
            Ok(())
        };
        for (a, root) in rs.positive_roots.iter().enumerate() {
            match mode {
                BlockMode::RaisingQuotient => add_images(tensor.slice_by_offset(&shifted(n, root, 1)), cfg.alg.raising(a))?,
                BlockMode::LoweringQuotient => {
                    add_images(tensor.slice_by_offset(&shifted(n, root, -1)), cfg.alg.lowering(a))?
                }
                BlockMode::FullTensor => {
                    let weight: Vec<Q> = root.iter().map(|&c| Q::from_integer(c.into())).collect();
                    let negative: Vec<Q> = weight.iter().map(|c| -c).collect();
                    add_images(tensor.weight_slice(&negative), cfg.alg.raising(a))?;
                    add_images(tensor.weight_slice(&weight), cfg.alg.lowering(a))?;
                }
                BlockMode::NoRelations => {}
            }
        }
    }
    let free_columns = (0..ambient.len()).filter(|&c| !relations.is_pivot(c)).collect();
    Ok(BlockSpace { mode, tensor, ambient, relations, free_columns, offset })
}

impl BlockSpace {
    pub fn ambient_dim(&self) -> usize {
        self.ambient.len()
    }

    pub fn relation_rank(&self) -> usize {
        self.relations.rank()
    }

    pub fn quotient_dim(&self) -> usize {
        self.free_columns.len()
    }

    /// Quotient coordinates of an ambient vector.
    pub fn project(&self, v: &SparseVec) -> Vec<Q> {
        let r = self.relations.reduce(v);
        self.free_columns.iter().map(|c| r.get(c).cloned().unwrap_or_else(Q::zero)).collect()
    }

    /// Ambient representative of the `k`-th quotient basis vector.
    pub fn section(&self, k: usize) -> SparseVec {
        SparseVec::from([(self.free_columns[k], Q::from_integer(1.into()))])
    }

    /// Whether the class of a pure tensor is nonzero.
    pub fn class_is_nonzero(&self, key: &TensorKey) -> bool {
        match self.ambient.index_of(key) {
            Some(i) => !self.relations.contains(&SparseVec::from([(i, Q::from_integer(1.into()))])),
            None => false,
        }
    }

    /// `P · A · S` after checking `A` maps every relation into the relation span.
    pub fn reduce_operator(&self, a: &Matrix) -> Result<Matrix, CoinvariantError> {
        for (idx, pivot) in self.relations.pivots().enumerate() {
            let relation = self.relation_vector(pivot);
            if !self.relations.contains(&a.apply(&relation)) {
                return Err(CoinvariantError::NonInvariant(idx));
            }
        }
        let d = self.quotient_dim();
        let mut out = Matrix::zeros(d, d);
        for l in 0..d {
            for (k, x) in self.project(&a.apply(&self.section(l))).into_iter().enumerate() {
                out.set(k, l, x);
            }
        }
        Ok(out)
    }

    /// The normalized relation with the given pivot column.
    fn relation_vector(&self, pivot: usize) -> SparseVec {
        // e_pivot − reduce(e_pivot) is exactly the echelon row of that pivot.
        let unit = SparseVec::from([(pivot, Q::from_integer(1.into()))]);
        let mut row = unit.clone();
        for (k, x) in self.relations.reduce(&unit) {
            add_entry(&mut row, k, -x);
        }
        row
    }

    /// Reduces every term matrix of a connection to the quotient.
    pub fn reduce_terms(&self, matrices: &TermMatrices) -> Result<TermMatrices, CoinvariantError> {
        matrices.map_matrices(|m| self.reduce_operator(m), self.quotient_dim())
    }

    pub fn label(&self, key: &TensorKey) -> String {
        key.iter().map(|m| describe_monomial(&self.tensor.alg, m)).collect::<Vec<_>>().join(" ⊗ ")
    }
}

/// `Σ_{Σν_j = N} Π_j dim F_{ν_j}` for the ambient slice of a reduced mode.
pub fn expected_ambient_dim(cfg: &MarkedConfiguration, block: &BlockSpace) -> Option<u128> {
    let depths: Vec<usize> = block.tensor.slots.iter().map(SlotModule::depth).collect();
    let n = block.offset.as_ref()?;
    match block.mode {
        BlockMode::FullTensor => None,
        _ => Some(dim_tensor_weight_space(n, &depths, &cfg.alg.root_system)),
    }
}

/// Pure tensors `w ⊗ … ⊗ ŵ ⊗ … ⊗ w` with `ŵ` of weight offset `N` in slot `i`.
pub fn witness_keys(block: &BlockSpace) -> Vec<TensorKey> {
    let Some(n) = &block.offset else {
        return Vec::new();
    };
    let arity = block.tensor.arity();
    let mut out = Vec::new();
    for (i, slot) in block.tensor.slots.iter().enumerate() {
        for mono in slot.base().finite_monomials(n) {
            let mut key = vec![Vec::new(); arity];
            key[i] = mono;
            if !out.contains(&key) {
                out.push(key);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CoinvariantReport {
    pub mode: BlockMode,
    pub ambient_dim: usize,
    pub expected_ambient_dim: Option<String>,
    pub relation_rank: usize,
    pub block_dim: usize,
    pub basis_labels: Vec<String>,
    pub witnesses_nonzero: Vec<(String, bool)>,
}

pub fn report(cfg: &MarkedConfiguration, block: &BlockSpace) -> CoinvariantReport {
    CoinvariantReport {
        mode: block.mode,
        ambient_dim: block.ambient_dim(),
        expected_ambient_dim: expected_ambient_dim(cfg, block).map(|d| d.to_string()),
        relation_rank: block.relation_rank(),
        block_dim: block.quotient_dim(),
        basis_labels: block.free_columns.iter().map(|&c| block.label(&block.ambient.keys[c])).collect(),
        witnesses_nonzero: witness_keys(block).iter().map(|k| (block.label(k), block.class_is_nonzero(k))).collect(),
    }
}

/// Coefficient of `w^s` in `(w + t_l − t_i)^{−m}`, the expansion of `(z − t_i)^{−m}` at `t_l`.
pub fn pole_expansion_finite(m: usize, s: usize, t_i: &Q, t_l: &Q) -> Q {
    sign(s as i64) * binomial((m + s - 1) as u64, s as u64) * pow(&(t_l - t_i), -((m + s) as i64))
}

/// Coefficient of `ζ^{m+s}` in `(z − t_i)^{−m}` with `ζ = 1/z`.
pub fn pole_expansion_infinity(m: usize, s: usize, t_i: &Q) -> Q {
    binomial((m + s - 1) as u64, s as u64) * pow(t_i, s as i64)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidueReport {
    pub slot: usize,
    pub terms_from_sugawara: usize,
    pub pass: bool,
}

/// Computes `L_{−1}^{(i)} ŵ`, trades every `(Y z^{−m})^{(i)}` for the expansions of
/// `(z − t_i)^{−m}` at the other points (the coinvariant identity), and compares the result
/// with `−Ĥ_i ŵ` exactly.
pub fn residue_identity_check(
    cfg: &MarkedConfiguration,
    block: &BlockSpace,
    conn: &UniversalConnection,
    i: usize,
    key: &TensorKey,
) -> Result<ResidueReport, CoinvariantError> {
    let tensor = &block.tensor;
    let n = cfg.finite_points();
    let t = &cfg.times;
    let module = tensor.slots[i].base();
    let lowered = sugawara_apply(module, -1, &ModVec::from([(key[i].clone(), Q::from_integer(1.into()))]))?;
    let mut lhs = TensorVec::new();
    for (mono, c) in &lowered {
        let (head, rest) = mono.split_first().filter(|(g, _)| g.deg < 0).ok_or_else(|| {
            ModuleError::TruncationExceeded(describe_monomial(&cfg.alg, mono))
        })?;
        if rest.iter().any(|g| g.deg < 0) {
            return Err(ModuleError::TruncationExceeded(describe_monomial(&cfg.alg, mono)).into());
        }
        let m = (-head.deg) as usize;
        let mut base = key.clone();
        base[i] = rest.to_vec();
        let base = TensorVec::from([(base, c.clone())]);
        let mut push = |slot: usize, deg: usize, coeff: Q| {
            if coeff.is_zero() {
                return;
            }
            for (k, x) in tensor.act_slot(slot, Gen::new(head.basis, deg as i64), &base) {
                add_entry(&mut lhs, k, -(&coeff * x));
            }
        };
        for l in (0..n).filter(|&l| l != i) {
            for s in 0..tensor.slots[l].depth() {
                push(l, s, pole_expansion_finite(m, s, &t[i], &t[l]));
            }
        }
        if tensor.arity() > n {
            for s in 0..tensor.slots[n].depth().saturating_sub(m) {
                push(n, m + s, pole_expansion_infinity(m, s, &t[i]));
            }
        }
    }
    let mut rhs = TensorVec::new();
    let unit = TensorVec::from([(key.clone(), Q::from_integer(1.into()))]);
    for term in &conn.hamiltonians[i] {
        let c = term.coefficient.eval(t)?;
        for (k, x) in tensor.apply(&term.operator, &unit) {
            add_entry(&mut rhs, k, -(&c * x));
        }
    }
    Ok(ResidueReport { slot: i, terms_from_sugawara: lowered.len(), pass: lhs == rhs })
}

/// Exact matrices of all Hamiltonian terms on the ambient slice.
pub fn ambient_term_matrices(block: &BlockSpace, conn: &UniversalConnection) -> Result<TermMatrices, CoinvariantError> {
    Ok(TermMatrices::build(conn, &block.tensor, &block.ambient)?)
}

/// Rational rendering of a reduced matrix, row by row.
pub fn matrix_json(m: &Matrix) -> Vec<Vec<String>> {
    (0..m.rows).map(|r| m.row(r).iter().map(format_q).collect()).collect()
}
