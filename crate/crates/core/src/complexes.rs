//! ℤ-graded chain complexes of finite-dimensional rational vector spaces.
//!
//! Grading is homological: the differential `d_n` goes from degree `n` to
//! degree `n - 1` and is stored as a `dims(n-1) × dims(n)` matrix. Elements of
//! a complex are addressed through a flattened basis that lists the degree
//! blocks in ascending degree order.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact::{sign, zero_vector, Rational, RationalMatrix, Vector};

pub type Degree = i64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("differential in degree {degree} has shape {found:?}, expected {expected:?}")]
    DifferentialShape {
        degree: Degree,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("chain map component in degree {degree} has shape {found:?}, expected {expected:?}")]
    ComponentShape {
        degree: Degree,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("image of homology representative {index} in degree {degree} is not a cycle class of the target")]
    Decomposition { degree: Degree, index: usize },
}

/// Finitely supported chain complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainComplex {
    dims: BTreeMap<Degree, usize>,
    d: BTreeMap<Degree, RationalMatrix>,
}

impl ChainComplex {
    /// Builds a complex from its dimensions and differentials, checking only
    /// matrix shapes. Use [`ChainComplex::validate`] to check `d∘d = 0`.
    pub fn new(
        dims: BTreeMap<Degree, usize>,
        d: BTreeMap<Degree, RationalMatrix>,
    ) -> Result<Self, ComplexError> {
        let dims: BTreeMap<Degree, usize> = dims.into_iter().filter(|&(_, n)| n > 0).collect();
        let dim = |n: Degree| dims.get(&n).copied().unwrap_or(0);
        let mut stored = BTreeMap::new();
        for (n, m) in d {
            let expected = (dim(n - 1), dim(n));
            if m.shape() != expected {
                return Err(ComplexError::DifferentialShape {
                    degree: n,
                    expected,
                    found: m.shape(),
                });
            }
            if !m.is_zero() {
                stored.insert(n, m);
            }
        }
        Ok(Self { dims, d: stored })
    }

    pub fn zero() -> Self {
        Self {
            dims: BTreeMap::new(),
            d: BTreeMap::new(),
        }
    }

    /// The monoidal unit: ℚ concentrated in degree 0.
    pub fn unit() -> Self {
        Self::concentrated(0, 1)
    }

    /// `ℚ^dim` in a single degree with zero differential.
    pub fn concentrated(degree: Degree, dim: usize) -> Self {
        Self::new(BTreeMap::from([(degree, dim)]), BTreeMap::new()).expect("no differentials")
    }

    pub fn dim(&self, n: Degree) -> usize {
        self.dims.get(&n).copied().unwrap_or(0)
    }

    pub fn dims(&self) -> &BTreeMap<Degree, usize> {
        &self.dims
    }

    /// Degrees with nonzero dimension, ascending.
    pub fn support(&self) -> Vec<Degree> {
        self.dims.keys().copied().collect()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }

    /// `d_n : C_n → C_{n-1}`; a zero matrix of the right shape when not stored.
    pub fn differential(&self, n: Degree) -> RationalMatrix {
        self.d
            .get(&n)
            .cloned()
            .unwrap_or_else(|| RationalMatrix::zeros(self.dim(n - 1), self.dim(n)))
    }

    /// Stored (nonzero) differentials.
    pub fn differentials(&self) -> &BTreeMap<Degree, RationalMatrix> {
        &self.d
    }

    /// Position of the first basis vector of degree `n` in the flattened basis.
    pub fn offset(&self, n: Degree) -> usize {
        self.dims.range(..n).map(|(_, &k)| k).sum()
    }

    /// Degree of the `i`-th flattened basis vector.
    pub fn degree_of(&self, i: usize) -> Option<Degree> {
        let mut start = 0;
        for (&n, &k) in &self.dims {
            if i < start + k {
                return Some(n);
            }
            start += k;
        }
        None
    }

    /// Degree of every flattened basis vector.
    pub fn basis_degrees(&self) -> Vec<Degree> {
        self.dims
            .iter()
            .flat_map(|(&n, &k)| std::iter::repeat_n(n, k))
            .collect()
    }

    /// The differential as one square matrix on the flattened basis.
    pub fn total_differential(&self) -> RationalMatrix {
        let total = self.total_dim();
        let mut m = RationalMatrix::zeros(total, total);
        for (&n, dn) in &self.d {
            let (ro, co) = (self.offset(n - 1), self.offset(n));
            for (r, c, v) in dn.triplets() {
                m.set(ro + r, co + c, v.clone());
            }
        }
        m
    }

    /// Degrees `n` where `d_{n-1} ∘ d_n ≠ 0`. Empty iff this is a complex.
    pub fn validate(&self) -> Vec<Degree> {
        self.d
            .iter()
            .filter(|(&n, dn)| {
                self.d
                    .get(&(n - 1))
                    .is_some_and(|prev| !prev.mul(dn).is_zero())
            })
            .map(|(&n, _)| n - 1)
            .collect()
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Homology in degree `n` together with representative cycles.
    ///
    /// Representatives are the kernel vectors of `d_n` that become pivots when
    /// the boundaries are listed first, so they are deterministic.
    pub fn homology(&self, n: Degree) -> Homology {
        let dim = self.dim(n);
        if dim == 0 {
            return Homology {
                degree: n,
                dim: 0,
                representatives: Vec::new(),
            };
        }
        let cycles = self.differential(n).kernel_basis();
        let boundaries = self.differential(n + 1);
        let nb = boundaries.ncols();
        let combined = boundaries.hstack(&RationalMatrix::from_columns(dim, &cycles));
        let rref = combined.rref();
        let representatives: Vec<Vector> = rref
            .pivot_columns
            .iter()
            .filter(|&&p| p >= nb)
            .map(|&p| cycles[p - nb].clone())
            .collect();
        Homology {
            degree: n,
            dim: representatives.len(),
            representatives,
        }
    }

    /// `dim H_n` for every degree of the support.
    pub fn homology_dims(&self) -> BTreeMap<Degree, usize> {
        self.dims
            .keys()
            .map(|&n| {
                let rank_out = self.differential(n).rank();
                let rank_in = self.differential(n + 1).rank();
                (n, self.dim(n) - rank_out - rank_in)
            })
            .collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.dims
            .iter()
            .map(|(&n, &k)| if n.rem_euclid(2) == 0 { k as i64 } else { -(k as i64) })
            .sum()
    }

    /// `(C ⊗ D)_n = ⊕_{p+q=n} C_p ⊗ D_q` with `d(x⊗y) = dx⊗y + (-1)^{|x|} x⊗dy`.
    ///
    /// Basis vectors are ordered lexicographically by `(p, i, j)` where `i`
    /// indexes `C_p` and `j` indexes `D_q`.
    pub fn tensor(&self, other: &Self) -> Self {
        let layout = TensorLayout::new(self, other);
        let mut d = BTreeMap::new();
        for (&n, &dim_n) in &layout.dims {
            let rows = layout.dims.get(&(n - 1)).copied().unwrap_or(0);
            let mut m = RationalMatrix::zeros(rows, dim_n);
            for &(p, q) in &layout.blocks[&n] {
                let (cp, dq) = (self.dim(p), other.dim(q));
                let col0 = layout.block_offset(n, p);
                if self.dim(p - 1) > 0 {
                    let row0 = layout.block_offset(n - 1, p - 1);
                    for (r, c, v) in self.differential(p).triplets() {
                        for j in 0..dq {
                            m.add_to(row0 + r * dq + j, col0 + c * dq + j, v.clone());
                        }
                    }
                }
                let dq1 = other.dim(q - 1);
                if dq1 > 0 {
                    let row0 = layout.block_offset(n - 1, p);
                    let s = sign(p);
                    for (r, c, v) in other.differential(q).triplets() {
                        for i in 0..cp {
                            m.add_to(row0 + i * dq1 + r, col0 + i * dq + c, &s * v);
                        }
                    }
                }
            }
            d.insert(n, m);
        }
        Self::new(layout.dims, d).expect("tensor layout shapes")
    }

    /// Reindexed complex: `dims'(n) = dims(n - k)`, differential scaled by `(-1)^k`.
    pub fn shift(&self, k: Degree) -> Self {
        let s = sign(k);
        let dims = self.dims.iter().map(|(&n, &v)| (n + k, v)).collect();
        let d = self.d.iter().map(|(&n, m)| (n + k, m.scale(&s))).collect();
        Self::new(dims, d).expect("shift preserves shapes")
    }

    /// Degreewise direct sum; the basis of `self` comes first in each degree.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let degrees: BTreeSet<Degree> = self.dims.keys().chain(other.dims.keys()).copied().collect();
        let dims: BTreeMap<Degree, usize> = degrees
            .iter()
            .map(|&n| (n, self.dim(n) + other.dim(n)))
            .collect();
        let mut d = BTreeMap::new();
        for &n in &degrees {
            let rows = self.dim(n - 1) + other.dim(n - 1);
            if rows == 0 {
                continue;
            }
            let mut m = RationalMatrix::zeros(rows, self.dim(n) + other.dim(n));
            for (r, c, v) in self.differential(n).triplets() {
                m.set(r, c, v.clone());
            }
            for (r, c, v) in other.differential(n).triplets() {
                m.set(self.dim(n - 1) + r, self.dim(n) + c, v.clone());
            }
            d.insert(n, m);
        }
        Self::new(dims, d).expect("direct sum shapes")
    }

    /// Degree of a flattened vector, `None` when it is zero or inhomogeneous.
    pub fn homogeneous_degree(&self, v: &[Rational]) -> Option<Degree> {
        let mut found = None;
        for (i, x) in v.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let n = self.degree_of(i)?;
            match found {
                None => found = Some(n),
                Some(m) if m != n => return None,
                _ => {}
            }
        }
        found
    }
}

struct TensorLayout {
    dims: BTreeMap<Degree, usize>,
    blocks: BTreeMap<Degree, Vec<(Degree, Degree)>>,
    offsets: BTreeMap<(Degree, Degree), usize>,
}

impl TensorLayout {
    fn new(c: &ChainComplex, d: &ChainComplex) -> Self {
        let mut blocks: BTreeMap<Degree, Vec<(Degree, Degree)>> = BTreeMap::new();
        for &p in c.dims.keys() {
            for &q in d.dims.keys() {
                blocks.entry(p + q).or_default().push((p, q));
            }
        }
        let mut dims = BTreeMap::new();
        let mut offsets = BTreeMap::new();
        for (&n, list) in &mut blocks {
            list.sort();
            let mut acc = 0;
            for &(p, q) in list.iter() {
                offsets.insert((n, p), acc);
                acc += c.dim(p) * d.dim(q);
            }
            dims.insert(n, acc);
        }
        Self {
            dims,
            blocks,
            offsets,
        }
    }

    fn block_offset(&self, n: Degree, p: Degree) -> usize {
        self.offsets[&(n, p)]
    }
}

/// Homology in one degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homology {
    pub degree: Degree,
    pub dim: usize,
    /// Cycles in `C_n` whose classes form a basis of `H_n`.
    pub representatives: Vec<Vector>,
}

/// Degreewise linear map between complexes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainMap {
    pub source: ChainComplex,
    pub target: ChainComplex,
    components: BTreeMap<Degree, RationalMatrix>,
}

/// Why a chain map fails to be a quasi-isomorphism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuasiIsoFailure {
    pub degree: Degree,
    pub source_homology: usize,
    pub target_homology: usize,
    pub rank: usize,
}

impl ChainMap {
    /// Builds a map checking component shapes (`target(n) × source(n)`).
    pub fn new(
        source: ChainComplex,
        target: ChainComplex,
        components: BTreeMap<Degree, RationalMatrix>,
    ) -> Result<Self, ComplexError> {
        let mut stored = BTreeMap::new();
        for (n, m) in components {
            let expected = (target.dim(n), source.dim(n));
            if m.shape() != expected {
                return Err(ComplexError::ComponentShape {
                    degree: n,
                    expected,
                    found: m.shape(),
                });
            }
            if !m.is_zero() {
                stored.insert(n, m);
            }
        }
        Ok(Self {
            source,
            target,
            components: stored,
        })
    }

    pub fn identity(c: &ChainComplex) -> Self {
        let comps = c
            .dims
            .iter()
            .map(|(&n, &k)| (n, RationalMatrix::identity(k)))
            .collect();
        Self::new(c.clone(), c.clone(), comps).expect("identity shapes")
    }

    pub fn zero(source: &ChainComplex, target: &ChainComplex) -> Self {
        Self::new(source.clone(), target.clone(), BTreeMap::new()).expect("zero map")
    }

    /// Splits a square matrix on flattened bases into degree components.
    /// Entries between different degrees are rejected.
    pub fn from_total(
        source: ChainComplex,
        target: ChainComplex,
        total: &RationalMatrix,
    ) -> Option<Self> {
        let sdeg = source.basis_degrees();
        let tdeg = target.basis_degrees();
        if total.shape() != (tdeg.len(), sdeg.len()) {
            return None;
        }
        let mut comps: BTreeMap<Degree, RationalMatrix> = BTreeMap::new();
        for (r, c, v) in total.triplets() {
            let n = sdeg[c];
            if tdeg[r] != n {
                return None;
            }
            comps
                .entry(n)
                .or_insert_with(|| RationalMatrix::zeros(target.dim(n), source.dim(n)))
                .set(r - target.offset(n), c - source.offset(n), v.clone());
        }
        Self::new(source, target, comps).ok()
    }

    pub fn component(&self, n: Degree) -> RationalMatrix {
        self.components
            .get(&n)
            .cloned()
            .unwrap_or_else(|| RationalMatrix::zeros(self.target.dim(n), self.source.dim(n)))
    }

    pub fn components(&self) -> &BTreeMap<Degree, RationalMatrix> {
        &self.components
    }

    /// The map as one matrix between flattened bases.
    pub fn total_matrix(&self) -> RationalMatrix {
        let mut m = RationalMatrix::zeros(self.target.total_dim(), self.source.total_dim());
        for (&n, f) in &self.components {
            let (ro, co) = (self.target.offset(n), self.source.offset(n));
            for (r, c, v) in f.triplets() {
                m.set(ro + r, co + c, v.clone());
            }
        }
        m
    }

    /// Degrees where `d ∘ f_n ≠ f_{n-1} ∘ d`.
    pub fn validate(&self) -> Vec<Degree> {
        let degrees: BTreeSet<Degree> = self
            .source
            .dims
            .keys()
            .chain(self.target.dims.keys())
            .copied()
            .collect();
        degrees
            .into_iter()
            .filter(|&n| {
                let lhs = self.target.differential(n).mul(&self.component(n));
                let rhs = self.component(n - 1).mul(&self.source.differential(n));
                lhs != rhs
            })
            .collect()
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// `self ∘ first`.
    pub fn compose(&self, first: &ChainMap) -> ChainMap {
        assert_eq!(first.target, self.source, "composing non-composable chain maps");
        let comps = first
            .components
            .keys()
            .map(|&n| (n, self.component(n).mul(&first.component(n))))
            .collect();
        ChainMap::new(first.source.clone(), self.target.clone(), comps).expect("composite shapes")
    }

    /// Matrix of `H_n(f)` in the representative bases of source and target.
    pub fn induced_homology_map(&self, n: Degree) -> Result<RationalMatrix, ComplexError> {
        let hs = self.source.homology(n);
        let ht = self.target.homology(n);
        let k = ht.dim;
        let dim = self.target.dim(n);
        let mut system = RationalMatrix::from_columns(dim, &ht.representatives);
        system = system.hstack(&self.target.differential(n + 1));
        let f = self.component(n);
        let mut out = RationalMatrix::zeros(k, hs.dim);
        for (j, z) in hs.representatives.iter().enumerate() {
            let image = if dim == 0 { Vec::new() } else { f.mul_vec(z) };
            if dim == 0 {
                continue;
            }
            let x = system
                .solve(&image)
                .ok_or(ComplexError::Decomposition { degree: n, index: j })?;
            for (i, v) in x.iter().take(k).enumerate() {
                out.set(i, j, v.clone());
            }
        }
        Ok(out)
    }

    /// First degree (ascending) where `H_n(f)` is not an isomorphism.
    pub fn quasi_iso_failure(&self) -> Result<Option<QuasiIsoFailure>, ComplexError> {
        let degrees: BTreeSet<Degree> = self
            .source
            .dims
            .keys()
            .chain(self.target.dims.keys())
            .copied()
            .collect();
        for n in degrees {
            let h = self.induced_homology_map(n)?;
            let rank = h.rank();
            if h.nrows() != h.ncols() || rank != h.nrows() {
                return Ok(Some(QuasiIsoFailure {
                    degree: n,
                    source_homology: h.ncols(),
                    target_homology: h.nrows(),
                    rank,
                }));
            }
        }
        Ok(None)
    }

    pub fn is_quasi_iso(&self) -> bool {
        matches!(self.quasi_iso_failure(), Ok(None))
    }

    /// Degreewise invertibility (an isomorphism of complexes).
    pub fn is_isomorphism(&self) -> bool {
        let degrees: BTreeSet<Degree> = self
            .source
            .dims
            .keys()
            .chain(self.target.dims.keys())
            .copied()
            .collect();
        degrees.into_iter().all(|n| self.component(n).is_invertible())
    }
}

/// Vector in the flattened basis of `c` that is the `i`-th basis vector of
/// degree `n`.
pub fn basis_vector(c: &ChainComplex, n: Degree, i: usize) -> Vector {
    let mut v = zero_vector(c.total_dim());
    v[c.offset(n) + i] = Rational::one();
    v
}
