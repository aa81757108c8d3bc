//! Finite-dimensional dg algebras over the named operads, given by structure
//! constants on a graded basis.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::complexes::{ChainComplex, ChainMap, Degree};
use crate::exact::{axpy_sparse, sign, Rational, RationalMatrix, SparseVec};
use crate::operads::{
    advance, check_relations, evaluate, named_presentation, phi_ulie_to_as, EvalError,
    NamedOperad, OperadAlgebra, OperadMorphism, RelationReport, StructureTensor,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("{kind} algebras have no operation `{op}`")]
    UnknownOperation { kind: NamedOperad, op: String },
    #[error("operation `{op}` has arity {expected}, tensor has arity {found}")]
    Arity {
        op: String,
        expected: usize,
        found: usize,
    },
    #[error("operation `{op}` refers to basis index {index} outside dimension {dim}")]
    IndexOutOfRange { op: String, index: usize, dim: usize },
    #[error("operation `{op}` sends inputs {inputs:?} to index {output} of the wrong degree")]
    DegreeMismatch {
        op: String,
        inputs: Vec<usize>,
        output: usize,
    },
    #[error("expected a {expected} algebra, got {found}")]
    KindMismatch {
        expected: NamedOperad,
        found: NamedOperad,
    },
    #[error("pairing entry ({0}, {1}) is out of range")]
    PairingIndex(usize, usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Dg algebra over one of the named operads.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DgAlgebra {
    kind: NamedOperad,
    carrier: ChainComplex,
    structure: BTreeMap<String, StructureTensor>,
    degrees: Vec<Degree>,
    dcols: Vec<SparseVec>,
}

impl DgAlgebra {
    /// Checks operation names, arities, index ranges and degrees. Missing
    /// operations are zero. Relations are checked by [`validate_algebra`].
    pub fn new(
        kind: NamedOperad,
        carrier: ChainComplex,
        structure: BTreeMap<String, StructureTensor>,
    ) -> Result<Self, AlgebraError> {
        let pres = named_presentation(kind);
        let degrees = carrier.basis_degrees();
        let dim = degrees.len();
        let mut full = BTreeMap::new();
        for g in pres.alphabet.generators() {
            full.insert(g.name.clone(), StructureTensor::new(g.arity()));
        }
        for (op, t) in structure {
            let g = pres
                .alphabet
                .get(&op)
                .ok_or_else(|| AlgebraError::UnknownOperation {
                    kind,
                    op: op.clone(),
                })?;
            if g.arity() != t.arity {
                return Err(AlgebraError::Arity {
                    op,
                    expected: g.arity(),
                    found: t.arity,
                });
            }
            for (inputs, out) in &t.entries {
                for &i in inputs.iter().chain(out.keys()) {
                    if i >= dim {
                        return Err(AlgebraError::IndexOutOfRange {
                            op: op.clone(),
                            index: i,
                            dim,
                        });
                    }
                }
                let want: Degree = inputs.iter().map(|&i| degrees[i]).sum::<Degree>() + g.degree;
                if let Some(&k) = out.keys().find(|&&k| degrees[k] != want) {
                    return Err(AlgebraError::DegreeMismatch {
                        op: op.clone(),
                        inputs: inputs.clone(),
                        output: k,
                    });
                }
            }
            full.insert(op, t);
        }
        let dcols = differential_columns(&carrier);
        Ok(Self {
            kind,
            carrier,
            structure: full,
            degrees,
            dcols,
        })
    }

    pub fn kind(&self) -> NamedOperad {
        self.kind
    }

    pub fn carrier(&self) -> &ChainComplex {
        &self.carrier
    }

    pub fn degrees(&self) -> &[Degree] {
        &self.degrees
    }

    pub fn tensor(&self, op: &str) -> Option<&StructureTensor> {
        self.structure.get(op)
    }

    pub fn structure(&self) -> &BTreeMap<String, StructureTensor> {
        &self.structure
    }

    /// The element selected by the nullary generator `eta`, if the kind has one.
    pub fn unit(&self) -> Option<SparseVec> {
        self.structure.get("eta").map(|t| t.apply(&[]))
    }

    /// The carrier differential applied to a sparse vector.
    pub fn differential(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&i, c) in v {
            axpy_sparse(&mut out, c, &self.dcols[i]);
        }
        out
    }

    /// Same algebra with a different operation tensor, revalidated.
    pub fn with_tensor(&self, op: &str, t: StructureTensor) -> Result<Self, AlgebraError> {
        let mut s = self.structure.clone();
        s.insert(op.to_string(), t);
        Self::new(self.kind, self.carrier.clone(), s)
    }
}

pub(crate) fn differential_columns(c: &ChainComplex) -> Vec<SparseVec> {
    let mut cols = vec![SparseVec::new(); c.total_dim()];
    for (r, col, v) in c.total_differential().triplets() {
        cols[col].insert(r, v.clone());
    }
    cols
}

impl OperadAlgebra for DgAlgebra {
    fn dimension(&self) -> usize {
        self.degrees.len()
    }

    fn basis_degree(&self, i: usize) -> Degree {
        self.degrees[i]
    }

    fn apply(&self, op: &str, inputs: &[SparseVec]) -> Result<SparseVec, EvalError> {
        let t = self
            .structure
            .get(op)
            .ok_or_else(|| EvalError::UnknownOperation(op.to_string()))?;
        if t.arity != inputs.len() {
            return Err(EvalError::InputCount {
                expected: t.arity,
                found: inputs.len(),
            });
        }
        Ok(t.apply(inputs))
    }
}

/// An operation that fails the graded Leibniz rule on a basis tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivationFailure {
    pub op: String,
    pub inputs: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlgebraReport {
    pub invalid_carrier: Vec<Degree>,
    pub derivation_failures: Vec<DerivationFailure>,
    pub relations: RelationReport,
}

impl AlgebraReport {
    pub fn is_ok(&self) -> bool {
        self.invalid_carrier.is_empty()
            && self.derivation_failures.is_empty()
            && self.relations.is_ok()
    }
}

/// `d(op(x₁…xₖ)) = Σ ± op(x₁…dxᵢ…xₖ)` on every basis tuple.
pub fn derivation_failures(a: &DgAlgebra) -> Vec<DerivationFailure> {
    let mut out = Vec::new();
    let dim = a.dimension();
    for (op, t) in &a.structure {
        let mut tuple = vec![0usize; t.arity];
        if t.arity > 0 && dim == 0 {
            continue;
        }
        loop {
            if !leibniz_holds(a, t, &tuple) {
                out.push(DerivationFailure {
                    op: op.clone(),
                    inputs: tuple.clone(),
                });
            }
            if !advance(&mut tuple, dim) {
                break;
            }
        }
    }
    out
}

fn leibniz_holds(a: &DgAlgebra, t: &StructureTensor, tuple: &[usize]) -> bool {
    let basis: Vec<SparseVec> = tuple
        .iter()
        .map(|&i| SparseVec::from([(i, Rational::one())]))
        .collect();
    let lhs = a.differential(&t.apply(&basis));
    let mut rhs = SparseVec::new();
    let mut passed: Degree = 0;
    for (k, &i) in tuple.iter().enumerate() {
        let di = &a.dcols[i];
        if !di.is_empty() {
            let mut args = basis.clone();
            args[k] = di.clone();
            axpy_sparse(&mut rhs, &sign(passed), &t.apply(&args));
        }
        passed += a.degrees[i];
    }
    lhs == rhs
}

/// Carrier, Leibniz rule and relations of the algebra's kind.
pub fn validate_algebra(a: &DgAlgebra) -> Result<AlgebraReport, AlgebraError> {
    Ok(AlgebraReport {
        invalid_carrier: a.carrier.validate(),
        derivation_failures: derivation_failures(a),
        relations: check_relations(&named_presentation(a.kind), a)?,
    })
}

/// Restricts an algebra along an operad morphism: each source generator acts
/// by its image evaluated in `a`.
pub fn pullback_algebra(
    m: &OperadMorphism,
    kind: NamedOperad,
    a: &DgAlgebra,
) -> Result<DgAlgebra, AlgebraError> {
    let dim = a.dimension();
    let mut structure = BTreeMap::new();
    for g in m.source.alphabet.generators() {
        let img = m
            .images
            .get(&g.name)
            .ok_or_else(|| AlgebraError::UnknownOperation {
                kind,
                op: g.name.clone(),
            })?;
        let mut t = StructureTensor::new(g.arity());
        let mut tuple = vec![0usize; g.arity()];
        if g.arity() == 0 || dim > 0 {
            loop {
                let inputs: Vec<SparseVec> = tuple
                    .iter()
                    .map(|&i| SparseVec::from([(i, Rational::one())]))
                    .collect();
                for (k, c) in evaluate(img, a, &inputs)? {
                    t.add(tuple.clone(), k, c);
                }
                if !advance(&mut tuple, dim) {
                    break;
                }
            }
        }
        structure.insert(g.name.clone(), t);
    }
    DgAlgebra::new(kind, a.carrier.clone(), structure)
}

/// The unital Lie algebra with the graded commutator `xy − (−1)^{|x||y|} yx`.
pub fn commutator_functor(a: &DgAlgebra) -> Result<DgAlgebra, AlgebraError> {
    if a.kind != NamedOperad::As {
        return Err(AlgebraError::KindMismatch {
            expected: NamedOperad::As,
            found: a.kind,
        });
    }
    pullback_algebra(&phi_ulie_to_as(), NamedOperad::ULie, a)
}

/// Entrywise failures of `f ∘ op = op ∘ (f ⊗ … ⊗ f)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MorphismDefect {
    pub op: String,
    pub inputs: Vec<usize>,
}

/// Checks that a chain map between carriers intertwines every operation.
pub fn algebra_map_defects(
    f: &ChainMap,
    source: &DgAlgebra,
    target: &DgAlgebra,
) -> Result<Vec<MorphismDefect>, AlgebraError> {
    if source.kind != target.kind {
        return Err(AlgebraError::KindMismatch {
            expected: source.kind,
            found: target.kind,
        });
    }
    let total = f.total_matrix();
    let cols = matrix_columns(&total);
    let mut out = Vec::new();
    let dim = source.dimension();
    for (op, t) in &source.structure {
        let tt = &target.structure[op];
        let mut tuple = vec![0usize; t.arity];
        if t.arity > 0 && dim == 0 {
            continue;
        }
        loop {
            let basis: Vec<SparseVec> = tuple
                .iter()
                .map(|&i| SparseVec::from([(i, Rational::one())]))
                .collect();
            let lhs = total.mul_sparse(&t.apply(&basis));
            let images: Vec<SparseVec> = tuple.iter().map(|&i| cols[i].clone()).collect();
            if lhs != tt.apply(&images) {
                out.push(MorphismDefect {
                    op: op.clone(),
                    inputs: tuple.clone(),
                });
            }
            if !advance(&mut tuple, dim) {
                break;
            }
        }
    }
    Ok(out)
}

pub(crate) fn matrix_columns(m: &RationalMatrix) -> Vec<SparseVec> {
    let mut cols = vec![SparseVec::new(); m.ncols()];
    for (r, c, v) in m.triplets() {
        cols[c].insert(r, v.clone());
    }
    cols
}

/// Chain complex with a degree-0 pairing `ω: V ⊗ V → ℚ` on flattened indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PresymplecticComplex {
    pub carrier: ChainComplex,
    omega: BTreeMap<(usize, usize), Rational>,
}

/// Invariants of a presymplectic complex that fail, with witnesses.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PresymplecticReport {
    pub invalid_carrier: Vec<Degree>,
    /// Nonzero entries pairing degrees that do not sum to zero.
    pub degree: Vec<(usize, usize)>,
    pub antisymmetry: Vec<(usize, usize)>,
    /// Pairs `(v, w)` with `ω(dv, w) + (−1)^{|v|} ω(v, dw) ≠ 0`.
    pub chain_map: Vec<(usize, usize)>,
}

impl PresymplecticReport {
    pub fn is_ok(&self) -> bool {
        self.invalid_carrier.is_empty()
            && self.degree.is_empty()
            && self.antisymmetry.is_empty()
            && self.chain_map.is_empty()
    }
}

impl PresymplecticComplex {
    pub fn new(
        carrier: ChainComplex,
        entries: impl IntoIterator<Item = ((usize, usize), Rational)>,
    ) -> Result<Self, AlgebraError> {
        let dim = carrier.total_dim();
        let mut omega = BTreeMap::new();
        for ((i, j), c) in entries {
            if i >= dim || j >= dim {
                return Err(AlgebraError::PairingIndex(i, j));
            }
            let e = omega.entry((i, j)).or_insert_with(Rational::zero);
            *e += c;
            if e.is_zero() {
                omega.remove(&(i, j));
            }
        }
        Ok(Self { carrier, omega })
    }

    pub fn entries(&self) -> &BTreeMap<(usize, usize), Rational> {
        &self.omega
    }

    pub fn omega(&self, i: usize, j: usize) -> Rational {
        self.omega.get(&(i, j)).cloned().unwrap_or_else(Rational::zero)
    }

    /// Bilinear extension of ω.
    pub fn pair(&self, v: &SparseVec, w: &SparseVec) -> Rational {
        let mut acc = Rational::zero();
        for (&i, a) in v {
            for (&j, b) in w {
                if let Some(c) = self.omega.get(&(i, j)) {
                    acc += a * b * c;
                }
            }
        }
        acc
    }

    pub fn validate(&self) -> PresymplecticReport {
        let deg = self.carrier.basis_degrees();
        let dim = deg.len();
        let mut report = PresymplecticReport {
            invalid_carrier: self.carrier.validate(),
            ..Default::default()
        };
        for (&(i, j), c) in &self.omega {
            if deg[i] + deg[j] != 0 {
                report.degree.push((i, j));
            }
            let expected = -(sign(deg[i] * deg[j]) * c);
            if self.omega(j, i) != expected {
                report.antisymmetry.push((i, j));
            }
        }
        let dcols = differential_columns(&self.carrier);
        for v in 0..dim {
            for w in 0..dim {
                if deg[v] + deg[w] != 1 {
                    continue;
                }
                let ev = SparseVec::from([(v, Rational::one())]);
                let ew = SparseVec::from([(w, Rational::one())]);
                let value = self.pair(&dcols[v], &ew) + sign(deg[v]) * self.pair(&ev, &dcols[w]);
                if !value.is_zero() {
                    report.chain_map.push((v, w));
                }
            }
        }
        report
    }

    /// Whether `f: self → other` satisfies `ω'(f x, f y) = ω(x, y)`.
    pub fn pulls_back_to(&self, other: &Self, f: &ChainMap) -> bool {
        let cols = matrix_columns(&f.total_matrix());
        let dim = self.carrier.total_dim();
        (0..dim).all(|i| (0..dim).all(|j| other.pair(&cols[i], &cols[j]) == self.omega(i, j)))
    }
}

/// Index bookkeeping for `V ⊕ ℚ·𝟙` with the unit last in degree 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeisenbergLayout {
    /// Position of each basis vector of `V` in the enlarged basis.
    pub embedding: Vec<usize>,
    pub unit: usize,
}

impl HeisenbergLayout {
    pub fn of(v: &ChainComplex) -> Self {
        let degrees = v.basis_degrees();
        let embedding = degrees
            .iter()
            .enumerate()
            .map(|(i, &n)| if n > 0 { i + 1 } else { i })
            .collect();
        Self {
            embedding,
            unit: v.offset(1),
        }
    }
}

/// `H(V, ω) = V ⊕ ℚ` with `[x ⊕ k, x' ⊕ k'] = 0 ⊕ ω(x, x')` and unit `0 ⊕ 1`.
pub fn heisenberg(v: &PresymplecticComplex) -> DgAlgebra {
    let layout = HeisenbergLayout::of(&v.carrier);
    let carrier = v.carrier.direct_sum(&ChainComplex::unit());
    let mut bracket = StructureTensor::new(2);
    for (&(i, j), c) in &v.omega {
        bracket.add(
            vec![layout.embedding[i], layout.embedding[j]],
            layout.unit,
            c.clone(),
        );
    }
    let mut eta = StructureTensor::new(0);
    eta.add(vec![], layout.unit, Rational::one());
    let structure = BTreeMap::from([("bracket".to_string(), bracket), ("eta".to_string(), eta)]);
    DgAlgebra::new(NamedOperad::ULie, carrier, structure).expect("Heisenberg data is well-formed")
}

/// `H(f) = f ⊕ id` on Heisenberg carriers.
pub fn heisenberg_map(f: &ChainMap) -> ChainMap {
    let unit = ChainComplex::unit();
    let source = f.source.direct_sum(&unit);
    let target = f.target.direct_sum(&unit);
    let mut comps = BTreeMap::new();
    for n in source.support() {
        let mut m = RationalMatrix::zeros(target.dim(n), source.dim(n));
        for (r, c, x) in f.component(n).triplets() {
            m.set(r, c, x.clone());
        }
        if n == 0 {
            m.set(f.target.dim(0), f.source.dim(0), Rational::one());
        }
        comps.insert(n, m);
    }
    ChainMap::new(source, target, comps).expect("direct sum shapes")
}

/// Elementary matrix `E_{ij}` in the flattened basis of `M_n(ℚ)` (row-major).
fn matrix_index(n: usize, i: usize, j: usize) -> usize {
    i * n + j
}

/// `M_n(ℚ)` concentrated in degree 0 with the basis `E_{ij}` in row-major order.
pub fn matrix_algebra(n: usize) -> DgAlgebra {
    let mut mu = StructureTensor::new(2);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                mu.add(
                    vec![matrix_index(n, i, j), matrix_index(n, j, k)],
                    matrix_index(n, i, k),
                    Rational::one(),
                );
            }
        }
    }
    let mut eta = StructureTensor::new(0);
    for i in 0..n {
        eta.add(vec![], matrix_index(n, i, i), Rational::one());
    }
    let structure = BTreeMap::from([("mu".to_string(), mu), ("eta".to_string(), eta)]);
    DgAlgebra::new(NamedOperad::As, ChainComplex::concentrated(0, n * n), structure)
        .expect("matrix algebra is well-formed")
}

/// Zero brackets and, if the kind has one, the first degree-0 basis vector as unit.
pub fn abelian(kind: NamedOperad, carrier: ChainComplex) -> Result<DgAlgebra, AlgebraError> {
    let mut structure = BTreeMap::new();
    if matches!(kind, NamedOperad::ULie) {
        let mut eta = StructureTensor::new(0);
        eta.add(vec![], carrier.offset(0), Rational::one());
        structure.insert("eta".to_string(), eta);
    }
    DgAlgebra::new(kind, carrier, structure)
}

/// The `i`-th basis vector as a sparse vector.
pub fn basis_element(i: usize) -> SparseVec {
    SparseVec::from([(i, Rational::one())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    fn plane() -> PresymplecticComplex {
        PresymplecticComplex::new(
            ChainComplex::concentrated(0, 2),
            [((0, 1), int(1)), ((1, 0), int(-1))],
        )
        .unwrap()
    }

    #[test]
    fn matrix_algebra_is_valid() {
        let m = matrix_algebra(2);
        let r = validate_algebra(&m).unwrap();
        assert!(r.is_ok(), "{r:?}");
        assert!(r.relations.checked > 0);
    }

    #[test]
    fn commutator_of_matrices() {
        let gl = commutator_functor(&matrix_algebra(2)).unwrap();
        assert_eq!(gl.kind(), NamedOperad::ULie);
        assert!(validate_algebra(&gl).unwrap().is_ok());
        // [E11, E12] = E12
        let v = gl.apply("bracket", &[basis_element(0), basis_element(1)]).unwrap();
        assert_eq!(v, basis_element(1));
        // [E12, E21] = E11 − E22
        let v = gl.apply("bracket", &[basis_element(1), basis_element(2)]).unwrap();
        assert_eq!(v, SparseVec::from([(0, int(1)), (3, int(-1))]));
        assert_eq!(gl.unit(), matrix_algebra(2).unit());
    }

    #[test]
    fn commutator_graded_sign() {
        // Λ(x) with x odd: basis 1 (degree 0), x (degree 1)
        let carrier = ChainComplex::new(
            BTreeMap::from([(0, 1), (1, 1)]),
            BTreeMap::new(),
        )
        .unwrap();
        let mut mu = StructureTensor::new(2);
        mu.add(vec![0, 0], 0, int(1));
        mu.add(vec![0, 1], 1, int(1));
        mu.add(vec![1, 0], 1, int(1));
        let mut eta = StructureTensor::new(0);
        eta.add(vec![], 0, int(1));
        let a = DgAlgebra::new(
            NamedOperad::As,
            carrier,
            BTreeMap::from([("mu".into(), mu), ("eta".into(), eta)]),
        )
        .unwrap();
        assert!(validate_algebra(&a).unwrap().is_ok());
        let l = commutator_functor(&a).unwrap();
        assert!(l.tensor("bracket").unwrap().is_zero());
    }

    #[test]
    fn commutator_rejects_lie_input() {
        let gl = commutator_functor(&matrix_algebra(2)).unwrap();
        assert!(matches!(
            commutator_functor(&gl),
            Err(AlgebraError::KindMismatch { .. })
        ));
    }

    #[test]
    fn heisenberg_plane() {
        let h = heisenberg(&plane());
        assert_eq!(h.dimension(), 3);
        let v = h.apply("bracket", &[basis_element(0), basis_element(1)]).unwrap();
        assert_eq!(v, basis_element(2));
        assert_eq!(h.unit(), Some(basis_element(2)));
        assert!(validate_algebra(&h).unwrap().is_ok());
    }

    #[test]
    fn heisenberg_zero_complex() {
        let h = heisenberg(&PresymplecticComplex::new(ChainComplex::zero(), []).unwrap());
        assert_eq!(h.dimension(), 1);
        assert!(validate_algebra(&h).unwrap().is_ok());
    }

    #[test]
    fn heisenberg_layout_places_unit_in_degree_zero() {
        let c = ChainComplex::new(
            BTreeMap::from([(-1, 1), (0, 2), (1, 1)]),
            BTreeMap::new(),
        )
        .unwrap();
        let l = HeisenbergLayout::of(&c);
        assert_eq!(l.embedding, vec![0, 1, 2, 4]);
        assert_eq!(l.unit, 3);
    }

    #[test]
    fn presymplectic_defects() {
        assert!(plane().validate().is_ok());
        let bad = PresymplecticComplex::new(
            ChainComplex::concentrated(0, 2),
            [((0, 1), int(1)), ((1, 0), int(1))],
        )
        .unwrap();
        assert_eq!(bad.validate().antisymmetry.len(), 2);
        // d: degree 1 → degree 0 identity, pairing of degree-0 with degree-0 fails chain map
        let c = ChainComplex::new(
            BTreeMap::from([(0, 1), (1, 1)]),
            BTreeMap::from([(1, RationalMatrix::from_i64(&[&[1]]))]),
        )
        .unwrap();
        let p = PresymplecticComplex::new(c, [((0, 0), rat(1, 2))]).unwrap();
        let r = p.validate();
        assert_eq!(r.chain_map, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn planted_jacobi_violation_is_reported() {
        let gl = commutator_functor(&matrix_algebra(2)).unwrap();
        let mut t = gl.tensor("bracket").unwrap().clone();
        t.add(vec![0, 1], 0, int(1));
        let bad = gl.with_tensor("bracket", t).unwrap();
        let r = validate_algebra(&bad).unwrap();
        assert!(!r.relations.is_ok());
    }

    #[test]
    fn heisenberg_functor_laws() {
        let p = plane();
        let id = ChainMap::identity(&p.carrier);
        assert_eq!(heisenberg_map(&id), ChainMap::identity(&heisenberg(&p).carrier().clone()));
        // symplectic scaling (x, y) ↦ (2x, y/2)
        let f = ChainMap::new(
            p.carrier.clone(),
            p.carrier.clone(),
            BTreeMap::from([(0, RationalMatrix::from_dense(&[
                vec![int(2), int(0)],
                vec![int(0), rat(1, 2)],
            ]))]),
        )
        .unwrap();
        assert!(p.pulls_back_to(&p, &f));
        let h = heisenberg(&p);
        assert!(algebra_map_defects(&heisenberg_map(&f), &h, &h).unwrap().is_empty());
        let ff = f.compose(&f);
        assert_eq!(heisenberg_map(&ff), heisenberg_map(&f).compose(&heisenberg_map(&f)));
        // a non-symplectic map is not an algebra map
        let g = ChainMap::new(
            p.carrier.clone(),
            p.carrier.clone(),
            BTreeMap::from([(0, RationalMatrix::from_i64(&[&[2, 0], &[0, 1]]))]),
        )
        .unwrap();
        assert!(!p.pulls_back_to(&p, &g));
        assert!(!algebra_map_defects(&heisenberg_map(&g), &h, &h).unwrap().is_empty());
    }

    #[test]
    fn leibniz_failure_detected() {
        // d: e1 (degree 1) ↦ e0, with product e1·e1 = e1 of wrong parity is rejected by degree
        let c = ChainComplex::new(
            BTreeMap::from([(0, 1), (1, 1)]),
            BTreeMap::from([(1, RationalMatrix::from_i64(&[&[1]]))]),
        )
        .unwrap();
        let mut mu = StructureTensor::new(2);
        mu.add(vec![0, 0], 0, int(1));
        let a = DgAlgebra::new(NamedOperad::As, c, BTreeMap::from([("mu".into(), mu)])).unwrap();
        // d(e1·e0) = 0 but d(e1)·e0 = e0·e0 = e0
        let fails = derivation_failures(&a);
        assert!(fails.iter().any(|f| f.inputs == vec![1, 0]));
    }
}
