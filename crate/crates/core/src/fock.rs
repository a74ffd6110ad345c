//! Truncated symmetric and full Fock spaces with explicit ladder operators.
//!
//! States are stored in a raw (unnormalized) basis and all inner products go
//! through a diagonal Gram vector:
//!
//! * symmetric space: the occupation state `n = (n_1,…,n_d)` stands for the
//!   symmetrized tensor `e_1^{⊙n_1} ⊙ ⋯ ⊙ e_d^{⊙n_d}`; with the `n!`-weighted
//!   Fock inner product its squared norm is `Π_k n_k! w_k^{n_k}`;
//! * full space: the word `k_1⋯k_m` stands for `e_{k_1} ⊗ ⋯ ⊗ e_{k_m}` with
//!   squared norm `Π_j w_{k_j}`.
//!
//! In this basis `a⁺(e_k)` adds a quantum (prepends a letter) with
//! coefficient one, and `a⁻(e_k)` removes one with coefficient `n_k w_k`
//! (or `w_k` on the full space), which makes the two mutually adjoint.
//! Creation out of the top degree `N` is projected to zero.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::{Error, Result};

/// Basis size at or above which operators use sparse storage.
pub const DENSE_LIMIT: usize = 128;
/// Hard cap on the basis size of a truncated Fock space.
pub const MAX_BASIS: usize = 2_000_000;

/// `ℝ^d` with inner product `⟨u, v⟩ = Σ u_k v_k w_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseSpace {
    weights: Vec<f64>,
}

impl BaseSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("base space must have positive dimension"));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::domain(format!("base weights must be positive, got {w}")));
        }
        Ok(Self { weights })
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.weights).map(|((a, b), w)| a * b * w).sum()
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::shape(format!("base vector has dimension {}, expected {}", v.len(), self.dim())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FockKind {
    /// Symmetric (bosonic) Fock space, carrier of commutative fields.
    Symmetric,
    /// Full Fock space, carrier of free fields.
    Full,
}

/// A Fock space truncated at degree `N`.
#[derive(Debug)]
pub struct FockSpace {
    kind: FockKind,
    base: BaseSpace,
    truncation: usize,
    /// Occupation vectors (symmetric) or words (full).
    states: Vec<Vec<u8>>,
    degree: Vec<usize>,
    gram: Vec<f64>,
    index: HashMap<Vec<u8>, usize>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl FockSpace {
    /// Symmetric Fock space over `base`, degrees `0..=truncation`. States are
    /// ordered by degree, then lexicographically descending in the occupations.
    pub fn symmetric(base: BaseSpace, truncation: usize) -> Result<Arc<Self>> {
        let d = base.dim();
        let count: f64 = (0..=truncation).map(|m| binomial(m + d - 1, d - 1)).sum();
        Self::check_size(count)?;
        if truncation > u8::MAX as usize {
            return Err(Error::Bounds { what: "truncation", value: truncation, min: 0, max: u8::MAX as usize });
        }
        let mut states = Vec::with_capacity(count as usize);
        for m in 0..=truncation {
            let mut occ = vec![0u8; d];
            compositions(m, 0, &mut occ, &mut states);
        }
        let gram = states
            .iter()
            .map(|occ| {
                occ.iter()
                    .zip(base.weights())
                    .map(|(&n, &w)| (1..=n as usize).map(|k| k as f64 * w).product::<f64>())
                    .product()
            })
            .collect();
        let degree = states.iter().map(|s| s.iter().map(|&n| n as usize).sum()).collect();
        Ok(Arc::new(Self::assemble(FockKind::Symmetric, base, truncation, states, degree, gram)))
    }

    /// Full Fock space over `base`, words of length `0..=truncation` in
    /// length-then-lexicographic order.
    pub fn full(base: BaseSpace, truncation: usize) -> Result<Arc<Self>> {
        let d = base.dim();
        if d > u8::MAX as usize {
            return Err(Error::Bounds { what: "base dimension", value: d, min: 1, max: u8::MAX as usize });
        }
        let count: f64 = (0..=truncation).map(|m| (d as f64).powi(m as i32)).sum();
        Self::check_size(count)?;
        let mut states: Vec<Vec<u8>> = vec![Vec::new()];
        let mut layer: Vec<Vec<u8>> = vec![Vec::new()];
        for _ in 0..truncation {
            let mut next = Vec::with_capacity(layer.len() * d);
            for w in &layer {
                for k in 0..d as u8 {
                    let mut word = w.clone();
                    word.push(k);
                    next.push(word);
                }
            }
            states.extend(next.iter().cloned());
            layer = next;
        }
        let gram = states.iter().map(|w| w.iter().map(|&k| base.weights()[k as usize]).product()).collect();
        let degree = states.iter().map(Vec::len).collect();
        Ok(Arc::new(Self::assemble(FockKind::Full, base, truncation, states, degree, gram)))
    }

    fn check_size(count: f64) -> Result<()> {
        if count > MAX_BASIS as f64 {
            return Err(Error::Bounds {
                what: "Fock basis size",
                value: count.min(usize::MAX as f64) as usize,
                min: 1,
                max: MAX_BASIS,
            });
        }
        Ok(())
    }

    fn assemble(
        kind: FockKind,
        base: BaseSpace,
        truncation: usize,
        states: Vec<Vec<u8>>,
        degree: Vec<usize>,
        gram: Vec<f64>,
    ) -> Self {
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { kind, base, truncation, states, degree, gram, index }
    }

    pub fn kind(&self) -> FockKind {
        self.kind
    }

    pub fn base(&self) -> &BaseSpace {
        &self.base
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i]
    }

    /// Squared Fock norms of the basis states.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    pub fn index_of(&self, state: &[u8]) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// The vacuum `Ω`.
    pub fn vacuum(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[0] = 1.0;
        v
    }

    pub fn basis_vector(&self, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.dim()];
        v[i] = 1.0;
        v
    }

    /// Fock inner product.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).zip(&self.gram).map(|((a, b), g)| a * b * g).sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).sqrt()
    }

    fn check_vector(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::shape(format!("state has {} components, space has {}", x.len(), self.dim())));
        }
        Ok(())
    }
}

fn compositions(remaining: usize, pos: usize, occ: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if pos + 1 == occ.len() {
        occ[pos] = remaining as u8;
        out.push(occ.clone());
        return;
    }
    for n in (0..=remaining).rev() {
        occ[pos] = n as u8;
        compositions(remaining - n, pos + 1, occ, out);
    }
    occ[pos] = 0;
}

#[derive(Debug, Clone)]
enum Storage {
    /// Row-major.
    Dense(Vec<f64>),
    Sparse { row_ptr: Vec<usize>, cols: Vec<usize>, vals: Vec<f64> },
}

/// Linear operator on a truncated Fock space, as a matrix in the raw basis.
#[derive(Debug, Clone)]
pub struct FockOperator {
    space: Arc<FockSpace>,
    storage: Storage,
}

impl FockOperator {
    fn from_triplets(space: &Arc<FockSpace>, entries: BTreeMap<(usize, usize), f64>) -> Self {
        let n = space.dim();
        let storage = if n < DENSE_LIMIT {
            let mut m = vec![0.0; n * n];
            for ((i, j), v) in entries {
                m[i * n + j] += v;
            }
            Storage::Dense(m)
        } else {
            let mut row_ptr = vec![0usize; n + 1];
            let mut cols = Vec::with_capacity(entries.len());
            let mut vals = Vec::with_capacity(entries.len());
            for ((i, j), v) in entries {
                if v != 0.0 {
                    row_ptr[i + 1] += 1;
                    cols.push(j);
                    vals.push(v);
                }
            }
            for i in 0..n {
                row_ptr[i + 1] += row_ptr[i];
            }
            Storage::Sparse { row_ptr, cols, vals }
        };
        Self { space: Arc::clone(space), storage }
    }

    fn triplets(&self) -> BTreeMap<(usize, usize), f64> {
        let n = self.space.dim();
        let mut out = BTreeMap::new();
        match &self.storage {
            Storage::Dense(m) => {
                for (k, &v) in m.iter().enumerate() {
                    if v != 0.0 {
                        out.insert((k / n, k % n), v);
                    }
                }
            }
            Storage::Sparse { row_ptr, cols, vals } => {
                for i in 0..n {
                    for k in row_ptr[i]..row_ptr[i + 1] {
                        out.insert((i, cols[k]), vals[k]);
                    }
                }
            }
        }
        out
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse { .. })
    }

    /// Matrix entry `(row, col)` in the raw basis.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let n = self.space.dim();
        match &self.storage {
            Storage::Dense(m) => m[row * n + col],
            Storage::Sparse { row_ptr, cols, vals } => (row_ptr[row]..row_ptr[row + 1])
                .find(|&k| cols[k] == col)
                .map_or(0.0, |k| vals[k]),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.space.check_vector(x)?;
        Ok(self.apply_unchecked(x))
    }

    fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let n = self.space.dim();
        match &self.storage {
            Storage::Dense(m) => m.chunks_exact(n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect(),
            Storage::Sparse { row_ptr, cols, vals } => (0..n)
                .map(|i| (row_ptr[i]..row_ptr[i + 1]).map(|k| vals[k] * x[cols[k]]).sum())
                .collect(),
        }
    }

    fn same_space(&self, other: &FockOperator) -> Result<()> {
        if Arc::ptr_eq(&self.space, &other.space) {
            Ok(())
        } else {
            Err(Error::shape("operators act on different Fock spaces"))
        }
    }

    /// `Σ c_k T_k + shift·Id`.
    pub fn combine(terms: &[(f64, &FockOperator)], shift: f64) -> Result<FockOperator> {
        let first = terms.first().ok_or_else(|| Error::domain("empty operator combination"))?.1;
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(c, op) in terms {
            first.same_space(op)?;
            for (key, v) in op.triplets() {
                *acc.entry(key).or_insert(0.0) += c * v;
            }
        }
        if shift != 0.0 {
            for i in 0..first.space.dim() {
                *acc.entry((i, i)).or_insert(0.0) += shift;
            }
        }
        Ok(Self::from_triplets(&first.space, acc))
    }

    /// `Σ_{i,j} |G_i T_ij − G_j T_ji|`-style check: max asymmetry of `G·T`,
    /// zero iff `T` is self-adjoint for the Fock inner product.
    pub fn self_adjointness_defect(&self) -> f64 {
        let g = self.space.gram();
        let t = self.triplets();
        t.iter()
            .map(|(&(i, j), &v)| (g[i] * v - g[j] * t.get(&(j, i)).copied().unwrap_or(0.0)).abs())
            .fold(0.0, f64::max)
    }
}

/// Creation operator `a⁺(φ)`.
pub fn create(space: &Arc<FockSpace>, phi: &[f64]) -> Result<FockOperator> {
    space.base.check(phi)?;
    let mut entries = BTreeMap::new();
    for (j, state) in space.states.iter().enumerate() {
        if space.degree[j] >= space.truncation {
            continue;
        }
        for (k, &c) in phi.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let target = match space.kind {
                FockKind::Symmetric => {
                    let mut s = state.clone();
                    s[k] += 1;
                    s
                }
                FockKind::Full => {
                    let mut s = Vec::with_capacity(state.len() + 1);
                    s.push(k as u8);
                    s.extend_from_slice(state);
                    s
                }
            };
            let i = space.index[&target];
            *entries.entry((i, j)).or_insert(0.0) += c;
        }
    }
    Ok(FockOperator::from_triplets(space, entries))
}

/// Annihilation operator `a⁻(φ)`.
pub fn annihilate(space: &Arc<FockSpace>, phi: &[f64]) -> Result<FockOperator> {
    space.base.check(phi)?;
    let w = space.base.weights();
    let mut entries = BTreeMap::new();
    for (j, state) in space.states.iter().enumerate() {
        match space.kind {
            FockKind::Symmetric => {
                for (k, &n) in state.iter().enumerate() {
                    if n == 0 || phi[k] == 0.0 {
                        continue;
                    }
                    let mut s = state.clone();
                    s[k] -= 1;
                    let i = space.index[&s];
                    *entries.entry((i, j)).or_insert(0.0) += phi[k] * w[k] * n as f64;
                }
            }
            FockKind::Full => {
                if let Some((&k, rest)) = state.split_first() {
                    let k = k as usize;
                    if phi[k] != 0.0 {
                        let i = space.index[rest];
                        *entries.entry((i, j)).or_insert(0.0) += phi[k] * w[k];
                    }
                }
            }
        }
    }
    Ok(FockOperator::from_triplets(space, entries))
}

/// Neutral operator `a⁰(g)`: differential second quantization of
/// multiplication by `g` (symmetric space), or multiplication of the first
/// tensor factor by `g` (full space). Kills the vacuum in both cases.
pub fn neutral(space: &Arc<FockSpace>, g: &[f64]) -> Result<FockOperator> {
    space.base.check(g)?;
    let mut entries = BTreeMap::new();
    for (j, state) in space.states.iter().enumerate() {
        let v = match space.kind {
            FockKind::Symmetric => state.iter().zip(g).map(|(&n, &gk)| n as f64 * gk).sum(),
            FockKind::Full => state.first().map_or(0.0, |&k| g[k as usize]),
        };
        if v != 0.0 {
            entries.insert((j, j), v);
        }
    }
    Ok(FockOperator::from_triplets(space, entries))
}

/// `⟨T_1 T_2 ⋯ T_L Ω, Ω⟩` for `ops = [T_1, …, T_L]`: the last operator in
/// the written product acts on the vacuum first.
///
/// Requires `L ≤ N`, which guarantees the truncation never influences the
/// result.
pub fn vacuum_expectation(ops: &[&FockOperator]) -> Result<f64> {
    let Some(first) = ops.first() else {
        return Ok(1.0);
    };
    for op in ops {
        first.same_space(op)?;
    }
    let space = &first.space;
    if ops.len() > space.truncation {
        return Err(Error::Truncation { what: "Fock truncation", required: ops.len(), available: space.truncation });
    }
    let mut v = space.vacuum();
    for op in ops.iter().rev() {
        v = op.apply_unchecked(&v);
    }
    Ok(v[0] * space.gram[0])
}
