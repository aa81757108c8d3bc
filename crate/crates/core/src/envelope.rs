//! Truncated unital enveloping algebras of dg unital Lie algebras.
//!
//! Elements are combinations of ordered (PBW) monomials in a basis of
//! `Ṽ = V/ℚ·𝟙`. Words are brought to normal form by the rewriting rules
//!
//! * `x_j x_i → (−1)^{|x_i||x_j|} x_i x_j + [x_j, x_i]` for `j > i`,
//! * `x_i x_i → ½ [x_i, x_i]` for odd `x_i`,
//!
//! with brackets re-expressed in the `Ṽ` basis plus a multiple of the empty
//! word. Only words of length at most the truncation bound `N` are ever
//! formed; a product that would need a longer word is an error.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebras::{
    algebra_map_defects, commutator_functor, heisenberg, matrix_columns, AlgebraError, DgAlgebra,
    MorphismDefect, PresymplecticComplex,
};
use crate::complexes::{ChainComplex, ChainMap, ComplexError, Degree, QuasiIsoFailure};
use crate::exact::{add_entry, axpy_sparse, rat, sign, Rational, RationalMatrix, SparseVec};
use crate::operads::{EvalError, NamedOperad, OperadAlgebra};

/// A word in generator positions.
pub type Word = Vec<usize>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("expected a uLie algebra, got {0}")]
    NotULie(NamedOperad),
    #[error("the unit of the algebra is zero")]
    NoUnit,
    #[error("basis order must list every non-unit basis index exactly once")]
    BadOrder,
    #[error("generator position {0} out of range")]
    UnknownGenerator(usize),
    #[error("word length {needed} exceeds truncation bound {bound}")]
    Truncation { needed: usize, bound: usize },
    #[error("map is not a morphism of algebras: {0:?}")]
    NotMorphism(Vec<MorphismDefect>),
    #[error("map does not preserve filtration stage {0}")]
    Filtration(usize),
    #[error("products of {0} generator images do not vanish in the target")]
    NotNilpotent(usize),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

impl From<EnvelopeError> for EvalError {
    fn from(e: EnvelopeError) -> Self {
        match e {
            EnvelopeError::Truncation { needed, bound } => EvalError::Truncation { needed, bound },
            other => EvalError::UnknownOperation(other.to_string()),
        }
    }
}

/// Linear combination of words.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PBWElement {
    terms: BTreeMap<Word, Rational>,
}

impl PBWElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::word(Vec::new())
    }

    pub fn word(w: Word) -> Self {
        Self::term(Rational::one(), w)
    }

    pub fn term(c: Rational, w: Word) -> Self {
        let mut e = Self::zero();
        e.add_term(c, w);
        e
    }

    pub fn add_term(&mut self, c: Rational, w: Word) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(w) {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add_scaled(&mut self, c: &Rational, other: &Self) {
        for (w, x) in &other.terms {
            self.add_term(c * x, w.clone());
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(&Rational::one(), other);
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_scaled(&-Rational::one(), other);
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero();
        out.add_scaled(c, self);
        out
    }

    pub fn terms(&self) -> &BTreeMap<Word, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Longest word with a nonzero coefficient.
    pub fn length(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn coefficient(&self, w: &[usize]) -> Rational {
        self.terms.get(w).cloned().unwrap_or_else(Rational::zero)
    }
}

impl fmt::Display for PBWElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            let word = if w.is_empty() {
                "1".to_string()
            } else {
                w.iter().map(|g| format!("x{g}")).collect::<Vec<_>>().join("*")
            };
            write!(f, "{}*{word}", crate::exact::format_rational(c))?;
        }
        Ok(())
    }
}

/// A source vector split into its `Ṽ` coordinates and its unit coefficient.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Reduced {
    coords: SparseVec,
    unit: Rational,
}

impl Reduced {
    fn to_element(&self) -> PBWElement {
        let mut e = PBWElement::term(self.unit.clone(), Vec::new());
        for (&g, c) in &self.coords {
            e.add_term(c.clone(), vec![g]);
        }
        e
    }
}

/// Which redex to rewrite first in [`TruncatedEnvelope::normal_form_by`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewriteOrder {
    Leftmost,
    Rightmost,
}

/// Filtration stage `N` of the unital enveloping algebra of a uLie algebra.
#[derive(Clone, Debug)]
pub struct TruncatedEnvelope {
    source: DgAlgebra,
    bound: usize,
    /// Source basis index of each generator position.
    generators: Vec<usize>,
    position: Vec<Option<usize>>,
    gen_degrees: Vec<Degree>,
    unit_index: usize,
    eta: SparseVec,
    brackets: HashMap<(usize, usize), Reduced>,
    dgen: Vec<PBWElement>,
    basis: Vec<Word>,
    index: HashMap<Word, usize>,
    complex: ChainComplex,
}

/// Builds the envelope with the default generator order (carrier order).
pub fn envelope(v: &DgAlgebra, n_max: usize) -> Result<TruncatedEnvelope, EnvelopeError> {
    TruncatedEnvelope::new(v, n_max, None)
}

/// `envelope(heisenberg(v), n_max)`.
pub fn ccr(v: &PresymplecticComplex, n_max: usize) -> Result<TruncatedEnvelope, EnvelopeError> {
    envelope(&heisenberg(v), n_max)
}

impl TruncatedEnvelope {
    /// `order`, if given, lists the source basis indices that span `Ṽ`.
    ///
    /// The unit direction is the last index in the support of `η`; the
    /// remaining basis vectors map isomorphically onto `Ṽ`.
    pub fn new(v: &DgAlgebra, n_max: usize, order: Option<Vec<usize>>) -> Result<Self, EnvelopeError> {
        if v.kind() != NamedOperad::ULie {
            return Err(EnvelopeError::NotULie(v.kind()));
        }
        let eta = v.unit().unwrap_or_default();
        let unit_index = *eta.keys().next_back().ok_or(EnvelopeError::NoUnit)?;
        let dim = v.dimension();
        let generators = match order {
            Some(o) => {
                let mut sorted = o.clone();
                sorted.sort_unstable();
                let expected: Vec<usize> = (0..dim).filter(|&i| i != unit_index).collect();
                if sorted != expected {
                    return Err(EnvelopeError::BadOrder);
                }
                o
            }
            None => (0..dim).filter(|&i| i != unit_index).collect(),
        };
        let mut position = vec![None; dim];
        for (p, &i) in generators.iter().enumerate() {
            position[i] = Some(p);
        }
        let gen_degrees = generators.iter().map(|&i| v.degrees()[i]).collect();
        let mut env = Self {
            source: v.clone(),
            bound: n_max,
            generators,
            position,
            gen_degrees,
            unit_index,
            eta,
            brackets: HashMap::new(),
            dgen: Vec::new(),
            basis: Vec::new(),
            index: HashMap::new(),
            complex: ChainComplex::zero(),
        };
        let bracket = v.tensor("bracket").expect("uLie algebras have a bracket");
        for (inputs, out) in &bracket.entries {
            let (a, b) = (inputs[0], inputs[1]);
            if let (Some(p), Some(q)) = (env.position[a], env.position[b]) {
                env.brackets.insert((p, q), env.reduce(out));
            }
        }
        env.dgen = env
            .generators
            .iter()
            .map(|&i| {
                let dv = v.differential(&SparseVec::from([(i, Rational::one())]));
                env.reduce(&dv).to_element()
            })
            .collect();
        let mut basis = enumerate_words(&env.gen_degrees, n_max);
        basis.sort_by_cached_key(|w| (env.word_degree(w), w.len(), w.clone()));
        env.basis = basis;
        env.index = env.basis.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        env.complex = env.build_complex(n_max)?;
        Ok(env)
    }

    fn reduce(&self, v: &SparseVec) -> Reduced {
        let mut r = Reduced::default();
        let eta_u = &self.eta[&self.unit_index];
        for (&k, c) in v {
            if k == self.unit_index {
                let t = c / eta_u;
                r.unit += &t;
                for (&j, e) in &self.eta {
                    if j != self.unit_index {
                        add_entry(&mut r.coords, self.position[j].unwrap(), -(&t * e));
                    }
                }
            } else {
                add_entry(&mut r.coords, self.position[k].unwrap(), c.clone());
            }
        }
        r
    }

    pub fn source(&self) -> &DgAlgebra {
        &self.source
    }

    pub fn bound(&self) -> usize {
        self.bound
    }

    /// Source basis index of each generator position.
    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn generator_degrees(&self) -> &[Degree] {
        &self.gen_degrees
    }

    /// Source basis index spanning the unit direction.
    pub fn unit_index(&self) -> usize {
        self.unit_index
    }

    /// Normal-form words of length at most `N`, ordered by degree, length, then lexicographically.
    pub fn basis(&self) -> &[Word] {
        &self.basis
    }

    pub fn index_of(&self, w: &[usize]) -> Option<usize> {
        self.index.get(w).copied()
    }

    pub fn word_degree(&self, w: &[usize]) -> Degree {
        w.iter().map(|&g| self.gen_degrees[g]).sum()
    }

    /// Stage `N` as a chain complex on [`TruncatedEnvelope::basis`].
    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    pub fn is_normal(&self, w: &[usize]) -> bool {
        w.windows(2)
            .all(|p| p[0] < p[1] || (p[0] == p[1] && self.gen_degrees[p[0]] % 2 == 0))
    }

    /// The map `ι: V → U`, sending the unit direction to the empty word.
    pub fn embed(&self, v: &SparseVec) -> PBWElement {
        self.reduce(v).to_element()
    }

    /// The image of the `g`-th generator.
    pub fn generator(&self, g: usize) -> PBWElement {
        PBWElement::word(vec![g])
    }

    fn check_word(&self, w: &[usize]) -> Result<(), EnvelopeError> {
        if let Some(&g) = w.iter().find(|&&g| g >= self.generators.len()) {
            return Err(EnvelopeError::UnknownGenerator(g));
        }
        if w.len() > self.bound {
            return Err(EnvelopeError::Truncation {
                needed: w.len(),
                bound: self.bound,
            });
        }
        Ok(())
    }

    fn redexes(&self, w: &[usize]) -> Vec<usize> {
        (0..w.len().saturating_sub(1))
            .filter(|&p| {
                w[p] > w[p + 1] || (w[p] == w[p + 1] && self.gen_degrees[w[p]] % 2 != 0)
            })
            .collect()
    }

    /// Normal form rewriting the leftmost redex first.
    pub fn normal_form(&self, w: &[usize]) -> Result<PBWElement, EnvelopeError> {
        self.normal_form_by(w, &mut |_, r| r[0])
    }

    pub fn normal_form_ordered(&self, w: &[usize], order: RewriteOrder) -> Result<PBWElement, EnvelopeError> {
        match order {
            RewriteOrder::Leftmost => self.normal_form_by(w, &mut |_, r| r[0]),
            RewriteOrder::Rightmost => self.normal_form_by(w, &mut |_, r| r[r.len() - 1]),
        }
    }

    /// Normal form where `choose(word, redexes)` picks the position to rewrite.
    pub fn normal_form_by(
        &self,
        w: &[usize],
        choose: &mut dyn FnMut(&[usize], &[usize]) -> usize,
    ) -> Result<PBWElement, EnvelopeError> {
        self.check_word(w)?;
        let mut pending = PBWElement::word(w.to_vec());
        self.reduce_element(&mut pending, choose)
    }

    fn reduce_element(
        &self,
        pending: &mut PBWElement,
        choose: &mut dyn FnMut(&[usize], &[usize]) -> usize,
    ) -> Result<PBWElement, EnvelopeError> {
        let mut done = PBWElement::zero();
        while let Some((w, c)) = pending.terms.pop_last() {
            let r = self.redexes(&w);
            if r.is_empty() {
                done.add_term(c, w);
                continue;
            }
            let p = choose(&w, &r);
            let (a, b) = (w[p], w[p + 1]);
            let splice = |mid: &[usize]| -> Word {
                let mut out = Vec::with_capacity(w.len());
                out.extend_from_slice(&w[..p]);
                out.extend_from_slice(mid);
                out.extend_from_slice(&w[p + 2..]);
                out
            };
            let mut bracket_coeff = c.clone();
            if a > b {
                let s = sign(self.gen_degrees[a] * self.gen_degrees[b]);
                pending.add_term(&c * s, splice(&[b, a]));
            } else {
                bracket_coeff *= rat(1, 2);
            }
            if let Some(red) = self.brackets.get(&(a, b)) {
                pending.add_term(&bracket_coeff * &red.unit, splice(&[]));
                for (&g, x) in &red.coords {
                    pending.add_term(&bracket_coeff * x, splice(&[g]));
                }
            }
        }
        Ok(done)
    }

    /// Normal form of a combination of arbitrary words.
    pub fn normalize(&self, e: &PBWElement) -> Result<PBWElement, EnvelopeError> {
        for w in e.terms.keys() {
            self.check_word(w)?;
        }
        let mut pending = e.clone();
        self.reduce_element(&mut pending, &mut |_, r| r[0])
    }

    /// Product, failing if any pair of words is too long to multiply.
    pub fn multiply(&self, a: &PBWElement, b: &PBWElement) -> Result<PBWElement, EnvelopeError> {
        let needed = a.length() + b.length();
        if !a.is_zero() && !b.is_zero() && needed > self.bound {
            return Err(EnvelopeError::Truncation {
                needed,
                bound: self.bound,
            });
        }
        let mut pending = PBWElement::zero();
        for (u, x) in &a.terms {
            for (v, y) in &b.terms {
                let mut w = u.clone();
                w.extend_from_slice(v);
                pending.add_term(x * y, w);
            }
        }
        self.reduce_element(&mut pending, &mut |_, r| r[0])
    }

    /// Graded commutator `ab − (−1)^{|a||b|} ba` of homogeneous elements.
    pub fn commutator(&self, a: &PBWElement, b: &PBWElement) -> Result<PBWElement, EnvelopeError> {
        let s = sign(self.element_degree(a).unwrap_or(0) * self.element_degree(b).unwrap_or(0));
        Ok(self.multiply(a, b)?.minus(&self.multiply(b, a)?.scale(&s)))
    }

    pub fn element_degree(&self, e: &PBWElement) -> Option<Degree> {
        e.terms.keys().next().map(|w| self.word_degree(w))
    }

    /// The induced differential, by the Leibniz rule on words.
    pub fn differential(&self, e: &PBWElement) -> Result<PBWElement, EnvelopeError> {
        let mut pending = PBWElement::zero();
        for (w, c) in &e.terms {
            self.check_word(w)?;
            let mut passed: Degree = 0;
            for (m, &g) in w.iter().enumerate() {
                let s = sign(passed) * c;
                for (mid, x) in &self.dgen[g].terms {
                    let mut out = Vec::with_capacity(w.len());
                    out.extend_from_slice(&w[..m]);
                    out.extend_from_slice(mid);
                    out.extend_from_slice(&w[m + 1..]);
                    pending.add_term(&s * x, out);
                }
                passed += self.gen_degrees[g];
            }
        }
        self.reduce_element(&mut pending, &mut |_, r| r[0])
    }

    /// Pairs of basis words `(a, b)` with `|a| + |b| ≤ N` on which
    /// `d(ab) = (da)b + (−1)^{|a|} a(db)` fails.
    pub fn leibniz_failures(&self) -> Result<Vec<(Word, Word)>, EnvelopeError> {
        let mut out = Vec::new();
        for a in &self.basis {
            let (ea, da) = (PBWElement::word(a.clone()), self.differential(&PBWElement::word(a.clone()))?);
            let s = sign(self.word_degree(a));
            for b in self.basis.iter().filter(|b| a.len() + b.len() <= self.bound) {
                let eb = PBWElement::word(b.clone());
                let lhs = self.differential(&self.multiply(&ea, &eb)?)?;
                let db = self.differential(&eb)?;
                let rhs = self.multiply(&da, &eb)?.plus(&self.multiply(&ea, &db)?.scale(&s));
                if lhs != rhs {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        Ok(out)
    }

    pub fn to_vector(&self, e: &PBWElement) -> Result<SparseVec, EnvelopeError> {
        let mut v = SparseVec::new();
        for (w, c) in &e.terms {
            let i = self.index_of(w).ok_or_else(|| {
                if w.len() > self.bound {
                    EnvelopeError::Truncation {
                        needed: w.len(),
                        bound: self.bound,
                    }
                } else {
                    EnvelopeError::Shape(format!("word {w:?} is not in normal form"))
                }
            })?;
            v.insert(i, c.clone());
        }
        Ok(v)
    }

    pub fn from_vector(&self, v: &SparseVec) -> PBWElement {
        let mut e = PBWElement::zero();
        for (&i, c) in v {
            e.add_term(c.clone(), self.basis[i].clone());
        }
        e
    }

    fn build_complex(&self, stage: usize) -> Result<ChainComplex, EnvelopeError> {
        let words: Vec<&Word> = self.basis.iter().filter(|w| w.len() <= stage).collect();
        let mut dims: BTreeMap<Degree, usize> = BTreeMap::new();
        let mut local: HashMap<&Word, (Degree, usize)> = HashMap::new();
        for w in &words {
            let n = self.word_degree(w);
            let k = dims.entry(n).or_default();
            local.insert(*w, (n, *k));
            *k += 1;
        }
        let mut triplets: BTreeMap<Degree, Vec<(usize, usize, Rational)>> = BTreeMap::new();
        for w in &words {
            let (n, col) = local[*w];
            for (u, c) in self.differential(&PBWElement::word((*w).clone()))?.terms {
                let (m, row) = local[&u];
                debug_assert_eq!(m, n - 1);
                triplets.entry(n).or_default().push((row, col, c));
            }
        }
        let mut d = BTreeMap::new();
        for (n, t) in triplets {
            let rows = dims.get(&(n - 1)).copied().unwrap_or(0);
            let m = RationalMatrix::from_triplets(rows, dims[&n], t)
                .map_err(|e| EnvelopeError::Shape(e.to_string()))?;
            d.insert(n, m);
        }
        Ok(ChainComplex::new(dims, d)?)
    }

    /// Filtration stage `k ≤ N` as a chain complex on the words of length ≤ k,
    /// together with the position of each of its basis vectors in the full basis.
    pub fn stage(&self, k: usize) -> Result<(ChainComplex, Vec<usize>), EnvelopeError> {
        let k = k.min(self.bound);
        let complex = self.build_complex(k)?;
        let positions = (0..self.basis.len()).filter(|&i| self.basis[i].len() <= k).collect();
        Ok((complex, positions))
    }

    /// Per-degree dimensions of stage `k`.
    pub fn stage_dims(&self, k: usize) -> BTreeMap<Degree, usize> {
        let mut dims = BTreeMap::new();
        for w in self.basis.iter().filter(|w| w.len() <= k) {
            *dims.entry(self.word_degree(w)).or_default() += 1;
        }
        dims
    }
}

impl OperadAlgebra for TruncatedEnvelope {
    fn dimension(&self) -> usize {
        self.basis.len()
    }

    fn basis_degree(&self, i: usize) -> Degree {
        self.word_degree(&self.basis[i])
    }

    fn apply(&self, op: &str, inputs: &[SparseVec]) -> Result<SparseVec, EvalError> {
        let e = match (op, inputs) {
            ("mu", [a, b]) => self.multiply(&self.from_vector(a), &self.from_vector(b))?,
            ("eta", []) => PBWElement::one(),
            ("mu" | "eta", _) => {
                return Err(EvalError::InputCount {
                    expected: if op == "mu" { 2 } else { 0 },
                    found: inputs.len(),
                })
            }
            _ => return Err(EvalError::UnknownOperation(op.to_string())),
        };
        Ok(self.to_vector(&e)?)
    }
}

/// All normal words of length ≤ `n`: nondecreasing, odd letters at most once.
fn enumerate_words(degrees: &[Degree], n: usize) -> Vec<Word> {
    let mut out = vec![Vec::new()];
    let mut frontier: Vec<Word> = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &frontier {
            let start = w.last().copied().unwrap_or(0);
            for (g, deg) in degrees.iter().enumerate().skip(start) {
                if w.last() == Some(&g) && deg % 2 != 0 {
                    continue;
                }
                let mut u = w.clone();
                u.push(g);
                next.push(u);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Per-degree dimension of filtration stage `n`, counted from the
/// graded-symmetric algebra on `Ṽ` without enumerating words.
pub fn filtration_dim(v: &DgAlgebra, n: usize) -> Result<BTreeMap<Degree, usize>, EnvelopeError> {
    if v.kind() != NamedOperad::ULie {
        return Err(EnvelopeError::NotULie(v.kind()));
    }
    let eta = v.unit().unwrap_or_default();
    let u = *eta.keys().next_back().ok_or(EnvelopeError::NoUnit)?;
    // counts[len] : degree → number of monomials
    let mut counts: Vec<BTreeMap<Degree, usize>> = vec![BTreeMap::new(); n + 1];
    counts[0].insert(0, 1);
    for (i, &d) in v.degrees().iter().enumerate() {
        if i == u {
            continue;
        }
        let max_power = if d % 2 == 0 { n } else { 1 };
        let mut next = vec![BTreeMap::new(); n + 1];
        for (len, table) in counts.iter().enumerate() {
            for (&deg, &c) in table {
                for p in 0..=max_power.min(n - len) {
                    *next[len + p].entry(deg + p as Degree * d).or_insert(0) += c;
                }
            }
        }
        counts = next;
    }
    let mut total = BTreeMap::new();
    for table in counts {
        for (deg, c) in table {
            *total.entry(deg).or_insert(0) += c;
        }
    }
    Ok(total)
}

/// Algebra map between envelopes induced by a uLie morphism `ρ: V → W`,
/// expressed as a chain map between the stage-`N` complexes.
pub fn envelope_map(
    rho: &ChainMap,
    source: &TruncatedEnvelope,
    target: &TruncatedEnvelope,
) -> Result<ChainMap, EnvelopeError> {
    let defects = algebra_map_defects(rho, &source.source, &target.source)?;
    if !defects.is_empty() {
        return Err(EnvelopeError::NotMorphism(defects));
    }
    if source.bound > target.bound {
        return Err(EnvelopeError::Shape(format!(
            "source bound {} exceeds target bound {}",
            source.bound, target.bound
        )));
    }
    let cols = matrix_columns(&rho.total_matrix());
    let images: Vec<PBWElement> = source
        .generators
        .iter()
        .map(|&i| target.embed(&cols[i]))
        .collect();
    let mut m = RationalMatrix::zeros(target.basis.len(), source.basis.len());
    for (col, w) in source.basis.iter().enumerate() {
        let mut acc = PBWElement::one();
        for &g in w {
            acc = target.multiply(&acc, &images[g])?;
        }
        for (r, c) in target.to_vector(&acc)? {
            m.set(r, col, c);
        }
    }
    ChainMap::from_total(source.complex.clone(), target.complex.clone(), &m)
        .ok_or_else(|| EnvelopeError::Shape("induced map is not degree-preserving".into()))
}

/// Restriction of an induced map to filtration stage `k`.
pub fn stage_map(
    f: &ChainMap,
    source: &TruncatedEnvelope,
    target: &TruncatedEnvelope,
    k: usize,
) -> Result<ChainMap, EnvelopeError> {
    let (sc, spos) = source.stage(k)?;
    let (tc, tpos) = target.stage(k)?;
    let total = f.total_matrix();
    let row_of: HashMap<usize, usize> = tpos.iter().enumerate().map(|(r, &p)| (p, r)).collect();
    let mut m = RationalMatrix::zeros(tpos.len(), spos.len());
    for (c, &p) in spos.iter().enumerate() {
        for (r, x) in total.column(p).into_iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            let rr = *row_of.get(&r).ok_or(EnvelopeError::Filtration(k))?;
            m.set(rr, c, x);
        }
    }
    ChainMap::from_total(sc, tc, &m).ok_or(EnvelopeError::Filtration(k))
}

/// The first stage `k ≤ N` on which an induced map fails to be a
/// quasi-isomorphism, with the homology witness.
pub fn stagewise_quasi_iso_failure(
    f: &ChainMap,
    source: &TruncatedEnvelope,
    target: &TruncatedEnvelope,
) -> Result<Option<(usize, QuasiIsoFailure)>, EnvelopeError> {
    for k in 0..=source.bound.min(target.bound) {
        if let Some(fail) = stage_map(f, source, target, k)?.quasi_iso_failure()? {
            return Ok(Some((k, fail)));
        }
    }
    Ok(None)
}

/// Restriction of an algebra map `κ: U(V) → A` to generators: the uLie map
/// `V → φ*(A)`, `v ↦ κ(ι(v))`.
pub fn adjunction_forward(
    kappa: &ChainMap,
    env: &TruncatedEnvelope,
    a: &DgAlgebra,
) -> Result<ChainMap, EnvelopeError> {
    if kappa.source.dims() != env.complex.dims() || kappa.target.dims() != a.carrier().dims() {
        return Err(EnvelopeError::Shape("κ does not map U(V) to A".into()));
    }
    check_truncated_algebra_map(kappa, env, a)?;
    let k = kappa.total_matrix();
    let v = env.source();
    let mut m = RationalMatrix::zeros(a.dimension(), v.dimension());
    for i in 0..v.dimension() {
        let img = env.to_vector(&env.embed(&SparseVec::from([(i, Rational::one())])))?;
        for (r, c) in k.mul_sparse(&img) {
            m.set(r, i, c);
        }
    }
    let rho = ChainMap::from_total(v.carrier().clone(), a.carrier().clone(), &m)
        .ok_or_else(|| EnvelopeError::Shape("restriction is not degree-preserving".into()))?;
    let lie = commutator_functor(a)?;
    let defects = algebra_map_defects(&rho, v, &lie)?;
    if !defects.is_empty() {
        return Err(EnvelopeError::NotMorphism(defects));
    }
    Ok(rho)
}

/// `κ(1) = 1` and `κ(xy) = κ(x)κ(y)` whenever `xy` fits in the truncation.
fn check_truncated_algebra_map(
    kappa: &ChainMap,
    env: &TruncatedEnvelope,
    a: &DgAlgebra,
) -> Result<(), EnvelopeError> {
    let k = kappa.total_matrix();
    let cols = matrix_columns(&k);
    let one = env.index_of(&[]).expect("empty word is a basis element");
    let mut defects = Vec::new();
    if Some(cols[one].clone()) != a.unit() {
        defects.push(MorphismDefect {
            op: "eta".into(),
            inputs: vec![],
        });
    }
    for (i, u) in env.basis.iter().enumerate() {
        for (j, w) in env.basis.iter().enumerate() {
            if u.len() + w.len() > env.bound {
                continue;
            }
            let prod = env.multiply(&PBWElement::word(u.clone()), &PBWElement::word(w.clone()))?;
            let lhs = k.mul_sparse(&env.to_vector(&prod)?);
            let rhs = a.apply("mu", &[cols[i].clone(), cols[j].clone()]).map_err(|e| {
                EnvelopeError::Shape(e.to_string())
            })?;
            if lhs != rhs {
                defects.push(MorphismDefect {
                    op: "mu".into(),
                    inputs: vec![i, j],
                });
            }
        }
    }
    if defects.is_empty() {
        Ok(())
    } else {
        Err(EnvelopeError::NotMorphism(defects))
    }
}

/// Multiplicative extension of a uLie map `ρ: V → φ*(A)` to `κ: U(V) → A`.
///
/// Requires every product of `N + 1` generator images to vanish in `A`, so
/// that the extension to the truncation is the restriction of an honest
/// algebra map.
pub fn adjunction_backward(
    rho: &ChainMap,
    env: &TruncatedEnvelope,
    a: &DgAlgebra,
) -> Result<ChainMap, EnvelopeError> {
    let lie = commutator_functor(a)?;
    let defects = algebra_map_defects(rho, env.source(), &lie)?;
    if !defects.is_empty() {
        return Err(EnvelopeError::NotMorphism(defects));
    }
    let cols = matrix_columns(&rho.total_matrix());
    let images: Vec<SparseVec> = env.generators.iter().map(|&i| cols[i].clone()).collect();
    let mul = |x: &SparseVec, y: &SparseVec| -> SparseVec {
        a.tensor("mu").expect("As algebras have mu").apply(&[x.clone(), y.clone()])
    };
    let unit = a.unit().unwrap_or_default();
    // span of all products of k images, k = 0..=N+1
    let mut layer = vec![unit.clone()];
    for _ in 0..=env.bound {
        let mut next = Vec::new();
        for x in &layer {
            for y in &images {
                let p = mul(x, y);
                if !p.is_empty() {
                    next.push(p);
                }
            }
        }
        layer = span_basis(next);
    }
    if !layer.is_empty() {
        return Err(EnvelopeError::NotNilpotent(env.bound + 1));
    }
    let mut m = RationalMatrix::zeros(a.dimension(), env.basis.len());
    for (col, w) in env.basis.iter().enumerate() {
        let mut acc = unit.clone();
        for &g in w {
            acc = mul(&acc, &images[g]);
        }
        for (r, c) in acc {
            m.set(r, col, c);
        }
    }
    ChainMap::from_total(env.complex.clone(), a.carrier().clone(), &m)
        .ok_or_else(|| EnvelopeError::Shape("extension is not degree-preserving".into()))
}

/// A basis of the span of the given vectors.
fn span_basis(vectors: Vec<SparseVec>) -> Vec<SparseVec> {
    let mut pivots: Vec<(usize, SparseVec)> = Vec::new();
    for v in vectors {
        let mut v = v;
        for (p, b) in &pivots {
            if let Some(c) = v.get(p).cloned() {
                axpy_sparse(&mut v, &-c, b);
            }
        }
        if let Some((&p, c)) = v.iter().next() {
            let inv = c.recip();
            let mut b = SparseVec::new();
            axpy_sparse(&mut b, &inv, &v);
            for (_, other) in pivots.iter_mut() {
                if let Some(x) = other.get(&p).cloned() {
                    axpy_sparse(other, &-x, &b);
                }
            }
            pivots.push((p, b));
        }
    }
    pivots.into_iter().map(|(_, b)| b).collect()
}
