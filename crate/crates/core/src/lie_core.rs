//! Simple Lie algebras in a Cartan–Weyl basis: root systems of finite type, the type-A
//! matrix realization, the normalized invariant form, dual bases, Casimir data and ρ.

use crate::linalg::{add_entry, Matrix, SparseVec};
use crate::rational::{format_q, q, qf, Ratio, Q};
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LieError {
    #[error("rank must be positive")]
    ZeroRank,
    #[error("not a Cartan matrix of finite type: {0}")]
    NotFiniteType(String),
    #[error("weights declared in different coordinate systems ({0:?} vs {1:?})")]
    CoordinateMismatch(Coords, Coords),
    #[error("weight has {got} coordinates, expected {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("unsupported algebra type {0:?}; only type A has a concrete realization")]
    UnsupportedType(String),
}

/// An element of the positive root lattice in simple-root coordinates.
pub type Root = Vec<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coords {
    /// Coefficients along the simple roots.
    Root,
    /// Values on the simple coroots (Dynkin labels).
    Fundamental,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Weight {
    pub coords: Coords,
    pub values: Vec<Q>,
}

impl Weight {
    pub fn root(values: Vec<Q>) -> Self {
        Weight { coords: Coords::Root, values }
    }

    pub fn fundamental(values: Vec<Q>) -> Self {
        Weight { coords: Coords::Fundamental, values }
    }
}

#[derive(Debug, Clone)]
pub struct RootSystem {
    pub rank: usize,
    /// `cartan_matrix[i][j] = ⟨α_j, α_i^∨⟩`.
    pub cartan_matrix: Vec<Vec<i64>>,
    pub simple_roots: Vec<Root>,
    /// Sorted by height, then by decreasing lexicographic order of coordinates.
    pub positive_roots: Vec<Root>,
    /// Gram matrix of the form on simple roots, scaled so every highest root has square length 2.
    pub form_on_weights: Matrix,
    index: HashMap<Root, usize>,
}

impl RootSystem {
    pub fn height(root: &[i64]) -> i64 {
        root.iter().sum()
    }

    pub fn root_index(&self, root: &[i64]) -> Option<usize> {
        self.index.get(root).copied()
    }

    pub fn highest_root(&self) -> &Root {
        self.positive_roots.last().expect("nonempty root system")
    }

    /// `⟨β, α_i^∨⟩` for a root-lattice vector `β`.
    pub fn coroot_pairing(&self, beta: &[i64], i: usize) -> i64 {
        (0..self.rank).map(|j| self.cartan_matrix[i][j] * beta[j]).sum()
    }

    pub fn to_root_coords(&self, w: &Weight) -> Result<Vec<Q>, LieError> {
        if w.values.len() != self.rank {
            return Err(LieError::WrongLength { expected: self.rank, got: w.values.len() });
        }
        match w.coords {
            Coords::Root => Ok(w.values.clone()),
            Coords::Fundamental => {
                let a = Matrix::from_rows(
                    &self.cartan_matrix.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect::<Vec<_>>(),
                );
                let inv = a.inverse().expect("finite-type Cartan matrices are invertible");
                Ok((0..self.rank)
                    .map(|i| (0..self.rank).map(|j| inv.get(i, j) * &w.values[j]).sum())
                    .collect())
            }
        }
    }

    pub fn to_fundamental_coords(&self, w: &Weight) -> Result<Vec<Q>, LieError> {
        if w.values.len() != self.rank {
            return Err(LieError::WrongLength { expected: self.rank, got: w.values.len() });
        }
        match w.coords {
            Coords::Fundamental => Ok(w.values.clone()),
            Coords::Root => Ok((0..self.rank)
                .map(|i| (0..self.rank).map(|j| q(self.cartan_matrix[i][j]) * &w.values[j]).sum())
                .collect()),
        }
    }

    /// Bilinear form on weights; both arguments must use the same declared coordinates.
    pub fn weight_form(&self, mu: &Weight, nu: &Weight) -> Result<Q, LieError> {
        if mu.coords != nu.coords {
            return Err(LieError::CoordinateMismatch(mu.coords, nu.coords));
        }
        let a = self.to_root_coords(mu)?;
        let b = self.to_root_coords(nu)?;
        Ok(self.form_root_coords(&a, &b))
    }

    pub fn form_root_coords(&self, a: &[Q], b: &[Q]) -> Q {
        let mut acc = Q::zero();
        for i in 0..self.rank {
            if a[i].is_zero() {
                continue;
            }
            for j in 0..self.rank {
                acc += &a[i] * self.form_on_weights.get(i, j) * &b[j];
            }
        }
        acc
    }

    pub fn rho_root_coords(&self) -> Vec<Q> {
        let mut rho = vec![Q::zero(); self.rank];
        for r in &self.positive_roots {
            for (x, &c) in rho.iter_mut().zip(r) {
                *x += qf(c, 2);
            }
        }
        rho
    }
}

/// Closed set of positive roots of a finite-type Cartan matrix.
pub fn generate_positive_roots(cartan: &[Vec<i64>]) -> Result<RootSystem, LieError> {
    let rank = cartan.len();
    if rank == 0 {
        return Err(LieError::ZeroRank);
    }
    let lengths = validate_cartan(cartan)?;

    let simple: Vec<Root> = (0..rank)
        .map(|i| (0..rank).map(|j| i64::from(i == j)).collect())
        .collect();
    let mut all: BTreeSet<Root> = simple.iter().cloned().collect();
    let mut layer: Vec<Root> = simple.clone();
    // A finite root system of rank r has fewer than 2·(r+1)^2 positive roots.
    let cap = 2 * (rank + 1) * (rank + 1);
    while !layer.is_empty() {
        let mut next = BTreeSet::new();
        for beta in &layer {
            for i in 0..rank {
                let mut down = 0;
                let mut probe = beta.clone();
                loop {
                    probe[i] -= 1;
                    if all.contains(&probe) {
                        down += 1;
                    } else {
                        break;
                    }
                }
                let pairing: i64 = (0..rank).map(|j| cartan[i][j] * beta[j]).sum();
                if down - pairing > 0 {
                    let mut up = beta.clone();
                    up[i] += 1;
                    if !all.contains(&up) {
                        next.insert(up);
                    }
                }
            }
        }
        all.extend(next.iter().cloned());
        if all.len() > cap {
            return Err(LieError::NotFiniteType("root generation did not terminate".into()));
        }
        layer = next.into_iter().collect();
    }

    let mut positive_roots: Vec<Root> = all.into_iter().collect();
    positive_roots.sort_by(|a, b| RootSystem::height(a).cmp(&RootSystem::height(b)).then_with(|| b.cmp(a)));
    let index = positive_roots.iter().cloned().enumerate().map(|(i, r)| (r, i)).collect();

    // Normalize each connected component so that its highest root has square length 2.
    let components = components(cartan);
    let mut lengths = lengths;
    for comp in &components {
        let top = positive_roots
            .iter()
            .filter(|r| r.iter().enumerate().all(|(j, &c)| c == 0 || comp.contains(&j)))
            .max_by_key(|r| RootSystem::height(r))
            .expect("component has roots");
        let raw = raw_form(cartan, &lengths);
        let top_q: Vec<Q> = top.iter().map(|&c| q(c)).collect();
        let mut norm = Q::zero();
        for i in 0..rank {
            for j in 0..rank {
                norm += &top_q[i] * raw.get(i, j) * &top_q[j];
            }
        }
        let factor = q(2) / norm;
        for &j in comp {
            lengths[j] *= &factor;
        }
    }
    let form_on_weights = raw_form(cartan, &lengths);

    Ok(RootSystem {
        rank,
        cartan_matrix: cartan.to_vec(),
        simple_roots: simple,
        positive_roots,
        form_on_weights,
        index,
    })
}

fn raw_form(cartan: &[Vec<i64>], lengths: &[Q]) -> Matrix {
    let rank = cartan.len();
    let mut m = Matrix::zeros(rank, rank);
    for i in 0..rank {
        for j in 0..rank {
            m.set(i, j, q(cartan[i][j]) * &lengths[i] / q(2));
        }
    }
    m
}

fn components(cartan: &[Vec<i64>]) -> Vec<Vec<usize>> {
    let rank = cartan.len();
    let mut seen = vec![false; rank];
    let mut out = Vec::new();
    for s in 0..rank {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let i = comp[k];
            for j in 0..rank {
                if !seen[j] && cartan[i][j] != 0 {
                    seen[j] = true;
                    comp.push(j);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Returns unnormalized square lengths of the simple roots.
fn validate_cartan(cartan: &[Vec<i64>]) -> Result<Vec<Q>, LieError> {
    let rank = cartan.len();
    let bad = |why: String| Err(LieError::NotFiniteType(why));
    for (i, row) in cartan.iter().enumerate() {
        if row.len() != rank {
            return bad(format!("row {i} has length {}, expected {rank}", row.len()));
        }
        if row[i] != 2 {
            return bad(format!("diagonal entry ({i},{i}) is {}, expected 2", row[i]));
        }
        for (j, &x) in row.iter().enumerate() {
            if i != j && x > 0 {
                return bad(format!("off-diagonal entry ({i},{j}) = {x} is positive"));
            }
            if i != j && (x == 0) != (cartan[j][i] == 0) {
                return bad(format!("entries ({i},{j}) and ({j},{i}) are not simultaneously zero"));
            }
        }
    }
    let mut lengths: Vec<Option<Q>> = vec![None; rank];
    for comp in components(cartan) {
        lengths[comp[0]] = Some(Q::one());
        let mut stack = vec![comp[0]];
        while let Some(i) = stack.pop() {
            let li = lengths[i].clone().expect("assigned");
            for j in 0..rank {
                if i == j || cartan[i][j] == 0 {
                    continue;
                }
                // a_ij ℓ_i = a_ji ℓ_j
                let lj = q(cartan[i][j]) * &li / q(cartan[j][i]);
                match &lengths[j] {
                    None => {
                        lengths[j] = Some(lj);
                        stack.push(j);
                    }
                    Some(existing) if *existing != lj => {
                        return bad("matrix is not symmetrizable".into());
                    }
                    Some(_) => {}
                }
            }
        }
    }
    let lengths: Vec<Q> = lengths.into_iter().map(|l| l.expect("every index visited")).collect();
    let sym = raw_form(cartan, &lengths);
    for k in 1..=rank {
        let minor = Matrix::from_rows(&(0..k).map(|i| (0..k).map(|j| sym.get(i, j).clone()).collect()).collect::<Vec<_>>());
        if !minor.determinant().is_positive() {
            return bad(format!("symmetrized form is not positive definite (leading minor {k})"));
        }
    }
    Ok(lengths)
}

pub fn cartan_matrix_type_a(rank: usize) -> Vec<Vec<i64>> {
    (0..rank)
        .map(|i| {
            (0..rank)
                .map(|j| match i.abs_diff(j) {
                    0 => 2,
                    1 => -1,
                    _ => 0,
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisKind {
    /// `F_α` for the positive root with this index.
    Lowering(usize),
    /// `H_{θ_i}`, the `i`-th simple coroot.
    Cartan(usize),
    /// `E_α` for the positive root with this index.
    Raising(usize),
}

/// An algebra element as sparse coordinates in the Cartan–Weyl basis.
pub type Element = SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlgebraSpec {
    #[serde(rename = "type")]
    pub kind: AlgebraType,
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlgebraType {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

#[derive(Debug, Clone)]
pub struct LieAlgebra {
    pub root_system: RootSystem,
    kinds: Vec<BasisKind>,
    labels: Vec<String>,
    matrices: Vec<Matrix>,
    structure: Vec<Vec<Element>>,
    pub form_gram: Matrix,
    /// Row `k` expresses the dual basis vector `X^k` in the basis.
    pub dual_basis_map: Matrix,
    pub rho: Vec<Q>,
    pub dual_coxeter: Q,
    casimir: Vec<(usize, usize, Q)>,
}

impl LieAlgebra {
    pub fn from_spec(spec: AlgebraSpec) -> Result<Self, LieError> {
        match spec.kind {
            AlgebraType::A => build_type_a(spec.rank),
            other => Err(LieError::UnsupportedType(format!("{other:?}"))),
        }
    }

    pub fn rank(&self) -> usize {
        self.root_system.rank
    }

    pub fn num_positive_roots(&self) -> usize {
        self.root_system.positive_roots.len()
    }

    pub fn dim(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, idx: usize) -> BasisKind {
        self.kinds[idx]
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn lowering(&self, root: usize) -> usize {
        root
    }

    pub fn cartan(&self, i: usize) -> usize {
        self.num_positive_roots() + i
    }

    pub fn raising(&self, root: usize) -> usize {
        self.num_positive_roots() + self.rank() + root
    }

    pub fn cartan_indices(&self) -> std::ops::Range<usize> {
        self.cartan(0)..self.cartan(0) + self.rank()
    }

    /// Root-lattice weight of a basis element under the adjoint Cartan action.
    pub fn basis_weight(&self, idx: usize) -> Vec<i64> {
        match self.kinds[idx] {
            BasisKind::Lowering(a) => self.root_system.positive_roots[a].iter().map(|c| -c).collect(),
            BasisKind::Cartan(_) => vec![0; self.rank()],
            BasisKind::Raising(a) => self.root_system.positive_roots[a].clone(),
        }
    }

    pub fn bracket_basis(&self, i: usize, j: usize) -> &Element {
        &self.structure[i][j]
    }

    pub fn bracket(&self, x: &Element, y: &Element) -> Element {
        let mut out = Element::new();
        for (&i, a) in x {
            for (&j, b) in y {
                let ab = a * b;
                for (&k, c) in &self.structure[i][j] {
                    add_entry(&mut out, k, &ab * c);
                }
            }
        }
        out
    }

    pub fn form(&self, x: &Element, y: &Element) -> Q {
        let mut acc = Q::zero();
        for (&i, a) in x {
            for (&j, b) in y {
                let g = self.form_gram.get(i, j);
                if !g.is_zero() {
                    acc += a * b * g;
                }
            }
        }
        acc
    }

    pub fn dual_basis_element(&self, k: usize) -> Element {
        (0..self.dim())
            .filter(|&l| !self.dual_basis_map.get(k, l).is_zero())
            .map(|l| (l, self.dual_basis_map.get(k, l).clone()))
            .collect()
    }

    /// The pairs `(a, b, c)` with `Ω = Σ c · X_a ⊗ X_b`.
    pub fn casimir_pairs(&self) -> &[(usize, usize, Q)] {
        &self.casimir
    }

    /// Matrix of an element in the defining representation.
    pub fn to_matrix(&self, x: &Element) -> Matrix {
        let n = self.rank() + 1;
        let mut m = Matrix::zeros(n, n);
        for (&i, c) in x {
            m = &m + &self.matrices[i].scale(c);
        }
        m
    }

    /// Inverse of [`to_matrix`](Self::to_matrix) on traceless matrices.
    pub fn from_matrix(&self, m: &Matrix) -> Element {
        let n = self.rank() + 1;
        let rs = &self.root_system;
        let mut out = Element::new();
        for (a, root) in rs.positive_roots.iter().enumerate() {
            let (i, j) = type_a_endpoints(root);
            add_entry(&mut out, self.raising(a), m.get(i, j).clone());
            add_entry(&mut out, self.lowering(a), m.get(j, i).clone());
        }
        let mut partial = Q::zero();
        for k in 0..n - 1 {
            partial += m.get(k, k);
            add_entry(&mut out, self.cartan(k), partial.clone());
        }
        out
    }

    /// Value `⟨μ, H⟩` of a functional given by its values on simple coroots, on a Cartan element.
    pub fn pair_cartan(&self, functional: &[Q], h: &Element) -> Q {
        h.iter()
            .map(|(&idx, c)| match self.kinds[idx] {
                BasisKind::Cartan(i) => c * &functional[i],
                _ => Q::zero(),
            })
            .sum()
    }

    /// `(μ|ν)` for functionals given by their values on simple coroots, via the dual Cartan basis.
    pub fn functional_form(&self, mu: &[Q], nu: &[Q]) -> Q {
        let h0 = self.cartan(0);
        let r = self.rank();
        let mut acc = Q::zero();
        for k in 0..r {
            for l in 0..r {
                let d = self.dual_basis_map.get(h0 + k, h0 + l);
                if !d.is_zero() {
                    acc += &mu[k] * d * &nu[l];
                }
            }
        }
        acc
    }

    /// Cartan element `h_μ` with `(h_μ | H) = ⟨μ, H⟩`, for `μ` given by values on simple coroots.
    pub fn cartan_dual(&self, functional: &[Q]) -> Element {
        let h0 = self.cartan(0);
        let mut out = Element::new();
        for k in 0..self.rank() {
            for l in 0..self.rank() {
                let d = self.dual_basis_map.get(h0 + k, h0 + l);
                if !d.is_zero() {
                    add_entry(&mut out, h0 + l, &functional[k] * d);
                }
            }
        }
        out
    }

    /// Serialized element as `(basis_index, "p/q")` pairs.
    pub fn element_json(x: &Element) -> Vec<(usize, Ratio)> {
        x.iter().map(|(&i, c)| (i, Ratio(c.clone()))).collect()
    }

    pub fn describe(&self, x: &Element) -> String {
        if x.is_empty() {
            return "0".into();
        }
        x.iter().map(|(&i, c)| format!("{}·{}", format_q(c), self.labels[i])).collect::<Vec<_>>().join(" + ")
    }
}

/// Row/column of the elementary matrix `E_α` for a type-A root `α = θ_i + … + θ_{j−1}`.
fn type_a_endpoints(root: &[i64]) -> (usize, usize) {
    let start = root.iter().position(|&c| c != 0).expect("nonzero root");
    let len = root.iter().filter(|&&c| c != 0).count();
    (start, start + len)
}

/// `sl(rank+1)` realized by elementary matrices, with the trace form.
pub fn build_type_a(rank: usize) -> Result<LieAlgebra, LieError> {
    if rank == 0 {
        return Err(LieError::ZeroRank);
    }
    let root_system = generate_positive_roots(&cartan_matrix_type_a(rank))?;
    let n = rank + 1;
    let s = root_system.positive_roots.len();
    let elementary = |i: usize, j: usize| {
        let mut m = Matrix::zeros(n, n);
        m.set(i, j, Q::one());
        m
    };

    let mut kinds = Vec::with_capacity(2 * s + rank);
    let mut labels = Vec::new();
    let mut matrices = Vec::new();
    let root_label = |r: &Root| {
        r.iter().enumerate().filter(|(_, &c)| c != 0).map(|(i, _)| (i + 1).to_string()).collect::<Vec<_>>().join("")
    };
    for (a, root) in root_system.positive_roots.iter().enumerate() {
        let (i, j) = type_a_endpoints(root);
        kinds.push(BasisKind::Lowering(a));
        labels.push(format!("F{}", root_label(root)));
        matrices.push(elementary(j, i));
    }
    for k in 0..rank {
        kinds.push(BasisKind::Cartan(k));
        labels.push(format!("H{}", k + 1));
        let mut m = elementary(k, k);
        m.set(k + 1, k + 1, -Q::one());
        matrices.push(m);
    }
    for (a, root) in root_system.positive_roots.iter().enumerate() {
        let (i, j) = type_a_endpoints(root);
        kinds.push(BasisKind::Raising(a));
        labels.push(format!("E{}", root_label(root)));
        matrices.push(elementary(i, j));
    }

    let mut alg = LieAlgebra {
        root_system,
        kinds,
        labels,
        matrices,
        structure: Vec::new(),
        form_gram: Matrix::zeros(0, 0),
        dual_basis_map: Matrix::zeros(0, 0),
        rho: Vec::new(),
        dual_coxeter: Q::zero(),
        casimir: Vec::new(),
    };
    let dim = alg.dim();

    alg.structure = (0..dim)
        .map(|i| (0..dim).map(|j| alg.from_matrix(&alg.matrices[i].commutator(&alg.matrices[j]))).collect())
        .collect();

    let mut gram = Matrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            gram.set(i, j, (&alg.matrices[i] * &alg.matrices[j]).trace());
        }
    }
    alg.dual_basis_map = gram.inverse().expect("trace form is nondegenerate on sl(n)");
    alg.form_gram = gram;
    alg.casimir = (0..dim)
        .flat_map(|a| (0..dim).map(move |b| (a, b)))
        .filter(|&(a, b)| !alg.dual_basis_map.get(a, b).is_zero())
        .map(|(a, b)| (a, b, alg.dual_basis_map.get(a, b).clone()))
        .collect();
    alg.rho = alg.root_system.rho_root_coords();
    alg.dual_coxeter = adjoint_casimir_eigenvalue(&alg) / q(2);
    Ok(alg)
}

/// The scalar by which `Σ_k ad(X_k) ad(X^k)` acts; panics if it is not a scalar.
fn adjoint_casimir_eigenvalue(alg: &LieAlgebra) -> Q {
    let mut eigen: Option<Q> = None;
    for x in 0..alg.dim() {
        let mut acc = Element::new();
        for (a, b, c) in alg.casimir_pairs() {
            let inner = alg.bracket_basis(*b, x).clone();
            let outer = alg.bracket(&Element::from([(*a, Q::one())]), &inner);
            for (k, v) in outer {
                add_entry(&mut acc, k, c * v);
            }
        }
        let value = acc.get(&x).cloned().unwrap_or_else(Q::zero);
        assert!(acc.len() <= 1, "Casimir does not act by a scalar on the adjoint representation");
        match &eigen {
            None => eigen = Some(value),
            Some(e) => assert_eq!(*e, value, "Casimir eigenvalue differs between basis elements"),
        }
    }
    eigen.unwrap_or_else(Q::zero)
}
