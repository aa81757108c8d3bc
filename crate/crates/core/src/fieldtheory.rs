//! Finite orthogonal categories and field theories on them.
//!
//! A field theory assigns an algebra to each object and a chain map to each
//! morphism. Einstein causality is checked pointwise: the two distinguished
//! binary operations must agree on images of every orthogonal pair.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::One;
use thiserror::Error;

use crate::algebras::{commutator_functor, matrix_columns, AlgebraError, DgAlgebra};
use crate::complexes::{ChainComplex, ChainMap, ComplexError, Degree, QuasiIsoFailure};
use crate::envelope::{
    envelope, envelope_map, stage_map, EnvelopeError, PBWElement, TruncatedEnvelope,
};
use crate::exact::{Rational, SparseVec};
use crate::operads::{
    as_commutator_presentation, evaluate, named_presentation, EvalError, NamedOperad,
    OperadAlgebra, OperadElement,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CategoryError {
    #[error("duplicate name `{0}`")]
    Duplicate(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown morphism `{0}`")]
    UnknownMorphism(String),
    #[error("`{g}` ∘ `{f}` is not composable")]
    NotComposable { g: String, f: String },
    #[error("composite `{g}` ∘ `{f}` is missing from the table")]
    MissingComposite { g: String, f: String },
    #[error("composite `{g}` ∘ `{f}` = `{gf}` has the wrong source or target")]
    CompositeType { g: String, f: String, gf: String },
    #[error("composite `{g}` ∘ `{f}` is listed twice with different results")]
    ConflictingComposite { g: String, f: String },
    #[error("composition is not associative at ({h}, {g}, {f})")]
    NotAssociative { h: String, g: String, f: String },
    #[error("identity law fails for `{0}`")]
    Identity(String),
    #[error("orthogonal pair ({0}, {1}) has different targets")]
    OrthTarget(String, String),
    #[error("functor: {0}")]
    Functor(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Morphism {
    pub name: String,
    pub source: usize,
    pub target: usize,
}

/// Finite category given by a composition table, with an orthogonality relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrthCategory {
    objects: Vec<String>,
    morphisms: Vec<Morphism>,
    identities: Vec<usize>,
    compose: HashMap<(usize, usize), usize>,
    orth: BTreeSet<(usize, usize)>,
}

impl OrthCategory {
    /// Identities named `id_<object>` are added when missing, together with
    /// their composites. `compose` lists `(g, f, g∘f)`. The orthogonality
    /// relation is the closure of `orth`.
    pub fn new(
        objects: Vec<String>,
        morphisms: Vec<(String, String, String)>,
        compose: Vec<(String, String, String)>,
        orth: Vec<(String, String)>,
    ) -> Result<Self, CategoryError> {
        let mut obj_index = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if obj_index.insert(o.clone(), i).is_some() {
                return Err(CategoryError::Duplicate(o.clone()));
            }
        }
        let obj = |name: &str| {
            obj_index
                .get(name)
                .copied()
                .ok_or_else(|| CategoryError::UnknownObject(name.to_string()))
        };
        let mut morphs = Vec::new();
        let mut mor_index: HashMap<String, usize> = HashMap::new();
        for (name, s, t) in morphisms {
            if mor_index.insert(name.clone(), morphs.len()).is_some() {
                return Err(CategoryError::Duplicate(name));
            }
            morphs.push(Morphism {
                name,
                source: obj(&s)?,
                target: obj(&t)?,
            });
        }
        let mut identities = Vec::new();
        for (i, o) in objects.iter().enumerate() {
            let name = format!("id_{o}");
            let idx = match mor_index.get(&name) {
                Some(&k) => {
                    if morphs[k].source != i || morphs[k].target != i {
                        return Err(CategoryError::Identity(name));
                    }
                    k
                }
                None => {
                    mor_index.insert(name.clone(), morphs.len());
                    morphs.push(Morphism {
                        name,
                        source: i,
                        target: i,
                    });
                    morphs.len() - 1
                }
            };
            identities.push(idx);
        }
        let mor = |name: &str| {
            mor_index
                .get(name)
                .copied()
                .ok_or_else(|| CategoryError::UnknownMorphism(name.to_string()))
        };
        let mut table = HashMap::new();
        for (f, m) in morphs.iter().enumerate() {
            table.insert((identities[m.target], f), f);
            table.insert((f, identities[m.source]), f);
        }
        for (g, f, gf) in compose {
            let (gi, fi, gfi) = (mor(&g)?, mor(&f)?, mor(&gf)?);
            if morphs[gi].source != morphs[fi].target {
                return Err(CategoryError::NotComposable { g, f });
            }
            if morphs[gfi].source != morphs[fi].source || morphs[gfi].target != morphs[gi].target {
                return Err(CategoryError::CompositeType { g, f, gf });
            }
            if let Some(&prev) = table.get(&(gi, fi)) {
                if prev != gfi {
                    return Err(CategoryError::ConflictingComposite { g, f });
                }
            }
            table.insert((gi, fi), gfi);
        }
        let mut cat = Self {
            objects,
            morphisms: morphs,
            identities,
            compose: table,
            orth: BTreeSet::new(),
        };
        cat.check_table()?;
        let seeds = orth
            .iter()
            .map(|(a, b)| Ok((mor(a)?, mor(b)?)))
            .collect::<Result<Vec<_>, CategoryError>>()?;
        cat.orth = orth_closure(&seeds, &cat)?;
        Ok(cat)
    }

    fn check_table(&self) -> Result<(), CategoryError> {
        let n = self.morphisms.len();
        for g in 0..n {
            for f in 0..n {
                if self.morphisms[g].source == self.morphisms[f].target
                    && !self.compose.contains_key(&(g, f))
                {
                    return Err(CategoryError::MissingComposite {
                        g: self.morphisms[g].name.clone(),
                        f: self.morphisms[f].name.clone(),
                    });
                }
            }
        }
        for h in 0..n {
            for g in 0..n {
                let Some(&hg) = self.compose.get(&(h, g)) else { continue };
                for f in 0..n {
                    let Some(&gf) = self.compose.get(&(g, f)) else { continue };
                    if self.compose[&(hg, f)] != self.compose[&(h, gf)] {
                        return Err(CategoryError::NotAssociative {
                            h: self.morphisms[h].name.clone(),
                            g: self.morphisms[g].name.clone(),
                            f: self.morphisms[f].name.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn morphisms(&self) -> &[Morphism] {
        &self.morphisms
    }

    pub fn identity(&self, object: usize) -> usize {
        self.identities[object]
    }

    pub fn is_identity(&self, f: usize) -> bool {
        self.identities[self.morphisms[f].source] == f
    }

    /// `g ∘ f`, if composable.
    pub fn compose(&self, g: usize, f: usize) -> Option<usize> {
        self.compose.get(&(g, f)).copied()
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn morphism_index(&self, name: &str) -> Option<usize> {
        self.morphisms.iter().position(|m| m.name == name)
    }

    /// The orthogonality relation, as ordered pairs (symmetric).
    pub fn orth(&self) -> &BTreeSet<(usize, usize)> {
        &self.orth
    }

    pub fn is_orthogonal(&self, f1: usize, f2: usize) -> bool {
        self.orth.contains(&(f1, f2))
    }

    /// True when `rel` is symmetric and stable under composition.
    pub fn is_orth_stable(&self, rel: &BTreeSet<(usize, usize)>) -> bool {
        rel.iter()
            .all(|&(a, b)| self.closure_step(a, b).iter().all(|p| rel.contains(p)))
    }

    fn closure_step(&self, f1: usize, f2: usize) -> Vec<(usize, usize)> {
        let mut out = vec![(f2, f1)];
        let n = self.morphisms.len();
        for g in 0..n {
            if let (Some(a), Some(b)) = (self.compose(g, f1), self.compose(g, f2)) {
                out.push((a, b));
            }
            if let Some(a) = self.compose(f1, g) {
                out.push((a, f2));
            }
            if let Some(b) = self.compose(f2, g) {
                out.push((f1, b));
            }
        }
        out
    }
}

/// Smallest symmetric, composition-stable relation containing the seeds.
pub fn orth_closure(
    seeds: &[(usize, usize)],
    cat: &OrthCategory,
) -> Result<BTreeSet<(usize, usize)>, CategoryError> {
    let mut rel = BTreeSet::new();
    let mut work = Vec::new();
    for &(a, b) in seeds {
        if cat.morphisms[a].target != cat.morphisms[b].target {
            return Err(CategoryError::OrthTarget(
                cat.morphisms[a].name.clone(),
                cat.morphisms[b].name.clone(),
            ));
        }
        work.push((a, b));
    }
    while let Some(p) = work.pop() {
        if rel.insert(p) {
            work.extend(cat.closure_step(p.0, p.1));
        }
    }
    debug_assert!(cat.is_orth_stable(&rel));
    Ok(rel)
}

/// Functor between finite orthogonal categories, given on objects and morphisms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrthFunctor {
    pub source: OrthCategory,
    pub target: OrthCategory,
    pub objects: Vec<usize>,
    pub morphisms: Vec<usize>,
}

impl OrthFunctor {
    /// Checks types, identities, composition and preservation of orthogonality.
    pub fn new(
        source: OrthCategory,
        target: OrthCategory,
        objects: Vec<usize>,
        morphisms: Vec<usize>,
    ) -> Result<Self, CategoryError> {
        if objects.len() != source.objects.len() || morphisms.len() != source.morphisms.len() {
            return Err(CategoryError::Functor("incomplete assignment".into()));
        }
        for (f, m) in source.morphisms.iter().enumerate() {
            let t = &target.morphisms[morphisms[f]];
            if t.source != objects[m.source] || t.target != objects[m.target] {
                return Err(CategoryError::Functor(format!("`{}` maps to a morphism of the wrong type", m.name)));
            }
        }
        for (c, &id) in source.identities.iter().enumerate() {
            if morphisms[id] != target.identities[objects[c]] {
                return Err(CategoryError::Functor(format!("identity of `{}` not preserved", source.objects[c])));
            }
        }
        for (&(g, f), &gf) in &source.compose {
            if target.compose(morphisms[g], morphisms[f]) != Some(morphisms[gf]) {
                return Err(CategoryError::Functor(format!(
                    "composite `{}` ∘ `{}` not preserved",
                    source.morphisms[g].name, source.morphisms[f].name
                )));
            }
        }
        for &(a, b) in &source.orth {
            if !target.is_orthogonal(morphisms[a], morphisms[b]) {
                return Err(CategoryError::Functor(format!(
                    "orthogonal pair ({}, {}) is not preserved",
                    source.morphisms[a].name, source.morphisms[b].name
                )));
            }
        }
        Ok(Self {
            source,
            target,
            objects,
            morphisms,
        })
    }

    /// Inclusion of the full subcategory on the named objects.
    pub fn full_subcategory(target: &OrthCategory, keep: &[usize]) -> Result<Self, CategoryError> {
        let keep_set: BTreeSet<usize> = keep.iter().copied().collect();
        let objects: Vec<String> = keep.iter().map(|&c| target.objects[c].clone()).collect();
        let kept: Vec<usize> = (0..target.morphisms.len())
            .filter(|&f| {
                let m = &target.morphisms[f];
                keep_set.contains(&m.source) && keep_set.contains(&m.target)
            })
            .collect();
        let name = |f: usize| target.morphisms[f].name.clone();
        let obj = |c: usize| target.objects[c].clone();
        let morphisms = kept
            .iter()
            .map(|&f| (name(f), obj(target.morphisms[f].source), obj(target.morphisms[f].target)))
            .collect();
        let mut compose = Vec::new();
        for &g in &kept {
            for &f in &kept {
                if let Some(gf) = target.compose(g, f) {
                    compose.push((name(g), name(f), name(gf)));
                }
            }
        }
        let orth = target
            .orth
            .iter()
            .filter(|(a, b)| kept.contains(a) && kept.contains(b))
            .map(|&(a, b)| (name(a), name(b)))
            .collect();
        let source = OrthCategory::new(objects, morphisms, compose, orth)?;
        let objects = keep.to_vec();
        let morphisms = source
            .morphisms
            .iter()
            .map(|m| target.morphism_index(&m.name).expect("kept morphism"))
            .collect();
        Self::new(source, target.clone(), objects, morphisms)
    }
}

/// Algebras a field theory can take values in.
pub trait TheoryAlgebra: OperadAlgebra + Clone {
    fn kind(&self) -> NamedOperad;
    fn carrier(&self) -> &ChainComplex;
}

impl TheoryAlgebra for DgAlgebra {
    fn kind(&self) -> NamedOperad {
        DgAlgebra::kind(self)
    }

    fn carrier(&self) -> &ChainComplex {
        DgAlgebra::carrier(self)
    }
}

impl TheoryAlgebra for TruncatedEnvelope {
    fn kind(&self) -> NamedOperad {
        NamedOperad::As
    }

    fn carrier(&self) -> &ChainComplex {
        self.complex()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TheoryError {
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error("expected {expected} entries, got {found}")]
    Count { expected: usize, found: usize },
    #[error("algebra of `{object}` has kind {found}, theory has kind {expected}")]
    Kind {
        object: String,
        expected: NamedOperad,
        found: NamedOperad,
    },
    #[error("distinguished operations must be binary, found arity {0}")]
    PairArity(usize),
    #[error("action of `{0}` does not map between the carriers of its source and target")]
    ActionType(String),
    #[error("theory fails causality: {0} violations")]
    Causality(usize),
    #[error("only {0} theories can be {1}")]
    Unsupported(NamedOperad, &'static str),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

/// A functor from an orthogonal category to algebras of one kind.
#[derive(Clone, Debug)]
pub struct FieldTheory<A> {
    pub base: OrthCategory,
    pub kind: NamedOperad,
    /// The two binary operations that must agree on orthogonal pairs.
    pub pair: (OperadElement, OperadElement),
    algebras: Vec<A>,
    actions: Vec<ChainMap>,
    truncation: Option<usize>,
}

/// The pair used by default for each kind: the commutator and zero for
/// `As`, the bracket and zero for `uLie` and `Pois`.
pub fn default_pair(kind: NamedOperad) -> (OperadElement, OperadElement) {
    match kind {
        NamedOperad::As => as_commutator_presentation().distinguished_pair.unwrap(),
        k => named_presentation(k).distinguished_pair.unwrap(),
    }
}

impl<A: TheoryAlgebra> FieldTheory<A> {
    /// `actions` is indexed like `base.morphisms()`; identities may be given
    /// as `None` and are filled in.
    pub fn new(
        base: OrthCategory,
        kind: NamedOperad,
        pair: (OperadElement, OperadElement),
        algebras: Vec<A>,
        actions: Vec<Option<ChainMap>>,
    ) -> Result<Self, TheoryError> {
        for e in [&pair.0, &pair.1] {
            match e.arity() {
                Some(k) if k != 2 => return Err(TheoryError::PairArity(k)),
                _ => {}
            }
        }
        if algebras.len() != base.objects.len() {
            return Err(TheoryError::Count {
                expected: base.objects.len(),
                found: algebras.len(),
            });
        }
        if actions.len() != base.morphisms.len() {
            return Err(TheoryError::Count {
                expected: base.morphisms.len(),
                found: actions.len(),
            });
        }
        for (o, a) in base.objects.iter().zip(&algebras) {
            if a.kind() != kind {
                return Err(TheoryError::Kind {
                    object: o.clone(),
                    expected: kind,
                    found: a.kind(),
                });
            }
        }
        let mut filled = Vec::with_capacity(actions.len());
        for (m, act) in base.morphisms.iter().zip(actions) {
            let src = algebras[m.source].carrier();
            let tgt = algebras[m.target].carrier();
            let act = match act {
                Some(f) => f,
                None if m.source == m.target && base.identities[m.source] == filled.len() => {
                    ChainMap::identity(src)
                }
                None => return Err(TheoryError::ActionType(m.name.clone())),
            };
            if act.source.dims() != src.dims() || act.target.dims() != tgt.dims() {
                return Err(TheoryError::ActionType(m.name.clone()));
            }
            filled.push(act);
        }
        Ok(Self {
            base,
            kind,
            pair,
            algebras,
            actions: filled,
            truncation: None,
        })
    }

    pub fn algebra(&self, object: usize) -> &A {
        &self.algebras[object]
    }

    pub fn algebras(&self) -> &[A] {
        &self.algebras
    }

    pub fn action(&self, morphism: usize) -> &ChainMap {
        &self.actions[morphism]
    }

    pub fn actions(&self) -> &[ChainMap] {
        &self.actions
    }

    /// Truncation bound of a quantized theory.
    pub fn truncation(&self) -> Option<usize> {
        self.truncation
    }

    /// Functoriality, chain-map and algebra-map failures.
    pub fn validate(&self) -> FunctorReport {
        let mut report = FunctorReport::default();
        for (f, act) in self.actions.iter().enumerate() {
            let name = &self.base.morphisms[f].name;
            if !act.is_valid() {
                report.not_chain_maps.push(name.clone());
            }
            if self.base.is_identity(f) && *act != ChainMap::identity(&act.source) {
                report.identities.push(name.clone());
            }
            let m = &self.base.morphisms[f];
            let (a, b) = (&self.algebras[m.source], &self.algebras[m.target]);
            match intertwining_defects(act, a, b) {
                Ok((defects, skipped)) => {
                    report.skipped += skipped;
                    if !defects.is_empty() {
                        report.not_algebra_maps.push(name.clone());
                    }
                }
                Err(_) => report.not_algebra_maps.push(name.clone()),
            }
        }
        for (&(g, f), &gf) in &self.base.compose {
            if self.actions[g].compose(&self.actions[f]).total_matrix() != self.actions[gf].total_matrix() {
                report.composition.push((
                    self.base.morphisms[g].name.clone(),
                    self.base.morphisms[f].name.clone(),
                ));
            }
        }
        report.composition.sort();
        report
    }

    /// Evaluates both distinguished operations on the images of every basis
    /// pair under every orthogonal pair.
    pub fn check_causality(&self) -> Result<CausalityReport, TheoryError> {
        let mut report = CausalityReport::default();
        let diff = self.pair.0.minus(&self.pair.1);
        for &(f1, f2) in &self.base.orth {
            let (m1, m2) = (&self.base.morphisms[f1], &self.base.morphisms[f2]);
            let c = &self.algebras[m1.target];
            let cols1 = matrix_columns(&self.actions[f1].total_matrix());
            let cols2 = matrix_columns(&self.actions[f2].total_matrix());
            for (x, u) in cols1.iter().enumerate() {
                for (y, v) in cols2.iter().enumerate() {
                    match evaluate(&diff, c, &[u.clone(), v.clone()]) {
                        Ok(d) => {
                            report.checked += 1;
                            if !d.is_empty() {
                                report.violations.push(CausalityViolation {
                                    f1: m1.name.clone(),
                                    f2: m2.name.clone(),
                                    x,
                                    y,
                                    difference: d,
                                });
                            }
                        }
                        Err(EvalError::Truncation { .. }) => report.skipped += 1,
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
        Ok(report)
    }

    /// Strict mode asks each action in `w` to be an isomorphism, homotopy mode
    /// a quasi-isomorphism.
    pub fn check_w_constancy(&self, w: &[usize], mode: WMode) -> Result<WReport, TheoryError> {
        let mut entries = Vec::new();
        for &f in w {
            let act = &self.actions[f];
            let entry = match mode {
                WMode::Strict => WEntry {
                    morphism: self.base.morphisms[f].name.clone(),
                    stage: None,
                    ok: act.is_isomorphism(),
                    witness: first_non_invertible(act).map(WWitness::NotInvertible),
                },
                WMode::Homotopy => {
                    let fail = act.quasi_iso_failure()?;
                    WEntry {
                        morphism: self.base.morphisms[f].name.clone(),
                        stage: None,
                        ok: fail.is_none(),
                        witness: fail.map(WWitness::Homology),
                    }
                }
            };
            entries.push(entry);
        }
        Ok(WReport { mode, entries })
    }
}

fn first_non_invertible(f: &ChainMap) -> Option<Degree> {
    let degrees: BTreeSet<Degree> = f.source.support().into_iter().chain(f.target.support()).collect();
    degrees.into_iter().find(|&n| !f.component(n).is_invertible())
}

/// An operation name and the basis tuple on which it fails.
pub type Defect = (String, Vec<usize>);

/// Defects of `f ∘ op = op ∘ f^{⊗k}` on basis tuples; pairs that overflow a
/// truncation are counted as skipped.
pub fn intertwining_defects<A: TheoryAlgebra>(
    f: &ChainMap,
    a: &A,
    b: &A,
) -> Result<(Vec<Defect>, usize), TheoryError> {
    let total = f.total_matrix();
    let cols = matrix_columns(&total);
    let pres = named_presentation(a.kind());
    let mut defects = Vec::new();
    let mut skipped = 0;
    let dim = a.dimension();
    for g in pres.alphabet.generators() {
        let mut tuple = vec![0usize; g.arity()];
        if g.arity() > 0 && dim == 0 {
            continue;
        }
        loop {
            let basis: Vec<SparseVec> = tuple
                .iter()
                .map(|&i| SparseVec::from([(i, Rational::one())]))
                .collect();
            let images: Vec<SparseVec> = tuple.iter().map(|&i| cols[i].clone()).collect();
            match (a.apply(&g.name, &basis), b.apply(&g.name, &images)) {
                (Ok(x), Ok(y)) => {
                    if total.mul_sparse(&x) != y {
                        defects.push((g.name.clone(), tuple.clone()));
                    }
                }
                (Err(EvalError::Truncation { .. }), _) | (_, Err(EvalError::Truncation { .. })) => {
                    skipped += 1
                }
                (Err(e), _) | (_, Err(e)) => return Err(e.into()),
            }
            if !crate::operads::advance(&mut tuple, dim) {
                break;
            }
        }
    }
    Ok((defects, skipped))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FunctorReport {
    pub not_chain_maps: Vec<String>,
    pub not_algebra_maps: Vec<String>,
    pub identities: Vec<String>,
    /// Pairs `(g, f)` with `A(g)A(f) ≠ A(gf)`.
    pub composition: Vec<(String, String)>,
    /// Operation instances not checked because of truncation.
    pub skipped: usize,
}

impl FunctorReport {
    pub fn is_ok(&self) -> bool {
        self.not_chain_maps.is_empty()
            && self.not_algebra_maps.is_empty()
            && self.identities.is_empty()
            && self.composition.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalityViolation {
    pub f1: String,
    pub f2: String,
    /// Basis indices in the sources of `f1` and `f2`.
    pub x: usize,
    pub y: usize,
    /// `r1 − r2` evaluated on the images.
    pub difference: SparseVec,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CausalityReport {
    pub checked: usize,
    pub skipped: usize,
    pub violations: Vec<CausalityViolation>,
}

impl CausalityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WMode {
    Strict,
    Homotopy,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WWitness {
    /// Degree whose component is not invertible.
    NotInvertible(Degree),
    Homology(QuasiIsoFailure),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WEntry {
    pub morphism: String,
    /// Filtration stage, for quantized theories checked stagewise.
    pub stage: Option<usize>,
    pub ok: bool,
    pub witness: Option<WWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WReport {
    pub mode: WMode,
    pub entries: Vec<WEntry>,
}

impl WReport {
    pub fn is_ok(&self) -> bool {
        self.entries.iter().all(|e| e.ok)
    }
}

impl FieldTheory<DgAlgebra> {
    /// The linear quantization: pointwise truncated enveloping algebras.
    pub fn quantize(&self, n_max: usize) -> Result<FieldTheory<TruncatedEnvelope>, TheoryError> {
        if self.kind != NamedOperad::ULie {
            return Err(TheoryError::Unsupported(NamedOperad::ULie, "quantized"));
        }
        let report = self.check_causality()?;
        if !report.is_ok() {
            return Err(TheoryError::Causality(report.violations.len()));
        }
        let envs = self
            .algebras
            .iter()
            .map(|a| envelope(a, n_max))
            .collect::<Result<Vec<_>, _>>()?;
        let mut actions = Vec::with_capacity(self.actions.len());
        for (m, act) in self.base.morphisms.iter().zip(&self.actions) {
            actions.push(Some(envelope_map(act, &envs[m.source], &envs[m.target])?));
        }
        let mut q = FieldTheory::new(
            self.base.clone(),
            NamedOperad::As,
            default_pair(NamedOperad::As),
            envs,
            actions,
        )?;
        q.truncation = Some(n_max);
        Ok(q)
    }

    /// Pointwise commutator algebras of an `As` theory.
    pub fn dequantize(&self) -> Result<FieldTheory<DgAlgebra>, TheoryError> {
        if self.kind != NamedOperad::As {
            return Err(TheoryError::Unsupported(NamedOperad::As, "dequantized"));
        }
        let algebras = self
            .algebras
            .iter()
            .map(commutator_functor)
            .collect::<Result<Vec<_>, _>>()?;
        FieldTheory::new(
            self.base.clone(),
            NamedOperad::ULie,
            default_pair(NamedOperad::ULie),
            algebras,
            self.actions.iter().cloned().map(Some).collect(),
        )
    }

    /// For every object, generator pairs whose commutator in the quantized
    /// algebra differs from the image of their bracket, and whether the unit
    /// maps to the empty word.
    pub fn adjunction_unit_defects(
        &self,
        quantized: &FieldTheory<TruncatedEnvelope>,
    ) -> Result<Vec<(String, usize, usize)>, TheoryError> {
        let mut out = Vec::new();
        for (c, (v, u)) in self.algebras.iter().zip(&quantized.algebras).enumerate() {
            let name = &self.base.objects[c];
            if u.embed(&v.unit().unwrap_or_default()) != PBWElement::one() {
                out.push((name.clone(), usize::MAX, usize::MAX));
            }
            if u.bound() < 2 {
                continue;
            }
            let dim = v.dimension();
            for i in 0..dim {
                for j in 0..dim {
                    let (ei, ej) = (
                        SparseVec::from([(i, Rational::one())]),
                        SparseVec::from([(j, Rational::one())]),
                    );
                    let lhs = u.commutator(&u.embed(&ei), &u.embed(&ej))?;
                    let rhs = u.embed(&v.apply("bracket", &[ei, ej])?);
                    if lhs != rhs {
                        out.push((name.clone(), i, j));
                    }
                }
            }
        }
        Ok(out)
    }
}

impl FieldTheory<TruncatedEnvelope> {
    /// W-constancy checked on every filtration stage `0..=N`.
    pub fn check_w_stagewise(&self, w: &[usize], mode: WMode) -> Result<WReport, TheoryError> {
        let n = self.truncation.unwrap_or(0);
        let mut entries = Vec::new();
        for &f in w {
            let m = &self.base.morphisms[f];
            let (s, t) = (&self.algebras[m.source], &self.algebras[m.target]);
            for k in 0..=n {
                let sm = stage_map(&self.actions[f], s, t, k)?;
                let (ok, witness) = match mode {
                    WMode::Strict => {
                        let bad = first_non_invertible(&sm);
                        (bad.is_none(), bad.map(WWitness::NotInvertible))
                    }
                    WMode::Homotopy => {
                        let fail = sm.quasi_iso_failure()?;
                        (fail.is_none(), fail.map(WWitness::Homology))
                    }
                };
                entries.push(WEntry {
                    morphism: m.name.clone(),
                    stage: Some(k),
                    ok,
                    witness,
                });
            }
        }
        Ok(WReport { mode, entries })
    }
}

/// Precomposition `F*(𝔄) = 𝔄 ∘ F`.
pub fn pullback_theory<A: TheoryAlgebra>(
    functor: &OrthFunctor,
    ft: &FieldTheory<A>,
) -> Result<FieldTheory<A>, TheoryError> {
    if functor.target != ft.base {
        return Err(CategoryError::Functor("target category differs from the theory's base".into()).into());
    }
    let algebras = functor.objects.iter().map(|&c| ft.algebras[c].clone()).collect();
    let actions = functor
        .morphisms
        .iter()
        .map(|&f| Some(ft.actions[f].clone()))
        .collect();
    let mut out = FieldTheory::new(functor.source.clone(), ft.kind, ft.pair.clone(), algebras, actions)?;
    out.truncation = ft.truncation;
    Ok(out)
}

/// Induced maps on quantized algebras of a componentwise transformation
/// `η_c: 𝔄(c) → 𝔅(c)` of linear theories.
pub fn quantize_transformation(
    components: &[ChainMap],
    source: &FieldTheory<TruncatedEnvelope>,
    target: &FieldTheory<TruncatedEnvelope>,
) -> Result<Vec<ChainMap>, TheoryError> {
    components
        .iter()
        .enumerate()
        .map(|(c, eta)| Ok(envelope_map(eta, source.algebra(c), target.algebra(c))?))
        .collect()
}

/// Morphisms `f` where `η_t ∘ 𝔄(f) ≠ 𝔅(f) ∘ η_s`.
pub fn naturality_defects<A: TheoryAlgebra>(
    components: &[ChainMap],
    source: &FieldTheory<A>,
    target: &FieldTheory<A>,
) -> Vec<String> {
    source
        .base
        .morphisms
        .iter()
        .enumerate()
        .filter(|(f, m)| {
            let lhs = components[m.target].compose(source.action(*f));
            let rhs = target.action(*f).compose(&components[m.source]);
            lhs.total_matrix() != rhs.total_matrix()
        })
        .map(|(_, m)| m.name.clone())
        .collect()
}

/// Per-object summary used in reports.
pub fn dimension_table<A: TheoryAlgebra>(ft: &FieldTheory<A>) -> BTreeMap<String, usize> {
    ft.base
        .objects
        .iter()
        .zip(&ft.algebras)
        .map(|(o, a)| (o.clone(), a.dimension()))
        .collect()
}
