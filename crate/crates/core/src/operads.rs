//! Free colored operads as labelled rooted trees.
//!
//! A tree stores, at each leaf, the input slot it occupies. Planar order is the
//! left-to-right order of children; the slot labels say which input of the
//! operation feeds that leaf. Operadic composition grafts trees at leaves and
//! the symmetric group acts by relabelling slots.
//!
//! Presented operads are never quotiented symbolically. A relation holds in an
//! algebra when both sides evaluate equally on every tuple of basis elements,
//! which is how [`check_relations`] decides it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::complexes::Degree;
use crate::exact::{add_entry, axpy_sparse, format_rational, parse_rational, Rational, SparseVec};

pub type Color = String;

/// Color of every single-colored operad in this crate.
pub const SINGLE_COLOR: &str = "*";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OperadError {
    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),
    #[error("generator `{name}` uses undeclared color `{color}`")]
    UndeclaredColor { name: String, color: Color },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{name}` expects {expected} inputs, got {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("color mismatch: expected `{expected}`, found `{found}`")]
    ColorMismatch { expected: Color, found: Color },
    #[error("leaf labels {0:?} are not a permutation of 1..n")]
    BadLabels(Vec<usize>),
    #[error("permutation {0:?} does not match the tree arity {1}")]
    BadPermutation(Vec<usize>, usize),
    #[error("relation `{0}` has sides of different signature")]
    RelationSignature(String),
    #[error("distinguished operations must have arity 2")]
    PairArity,
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("algebra provides no operation `{0}`")]
    UnknownOperation(String),
    #[error("expected {expected} inputs, got {found}")]
    InputCount { expected: usize, found: usize },
    #[error("input {0} is not homogeneous")]
    Inhomogeneous(usize),
    #[error("index {0} outside the algebra")]
    OutOfRange(usize),
    #[error("word length {needed} exceeds truncation bound {bound}")]
    Truncation { needed: usize, bound: usize },
}

/// One generating operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    pub name: String,
    pub inputs: Vec<Color>,
    pub output: Color,
    pub degree: Degree,
}

impl Generator {
    pub fn arity(&self) -> usize {
        self.inputs.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorAlphabet {
    colors: BTreeSet<Color>,
    generators: Vec<Generator>,
}

impl GeneratorAlphabet {
    pub fn new(colors: BTreeSet<Color>, generators: Vec<Generator>) -> Result<Self, OperadError> {
        let mut seen = BTreeSet::new();
        for g in &generators {
            if !seen.insert(g.name.clone()) {
                return Err(OperadError::DuplicateGenerator(g.name.clone()));
            }
            for c in g.inputs.iter().chain(std::iter::once(&g.output)) {
                if !colors.contains(c) {
                    return Err(OperadError::UndeclaredColor {
                        name: g.name.clone(),
                        color: c.clone(),
                    });
                }
            }
        }
        Ok(Self { colors, generators })
    }

    /// Single-colored alphabet of degree-0 generators given as `(name, arity)`.
    pub fn single_colored(gens: &[(&str, usize)]) -> Self {
        let c = SINGLE_COLOR.to_string();
        let generators = gens
            .iter()
            .map(|&(name, arity)| Generator {
                name: name.to_string(),
                inputs: vec![c.clone(); arity],
                output: c.clone(),
                degree: 0,
            })
            .collect();
        Self::new(BTreeSet::from([c]), generators).expect("well-formed alphabet")
    }

    pub fn colors(&self) -> &BTreeSet<Color> {
        &self.colors
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn get(&self, name: &str) -> Option<&Generator> {
        self.generators.iter().find(|g| g.name == name)
    }

    /// The tree consisting of the generator with slots `1..n` in planar order.
    pub fn corolla(&self, name: &str) -> Result<OperadTree, OperadError> {
        let g = self
            .get(name)
            .ok_or_else(|| OperadError::UnknownGenerator(name.to_string()))?;
        Ok(OperadTree::Node {
            op: g.name.clone(),
            children: g
                .inputs
                .iter()
                .enumerate()
                .map(|(i, c)| OperadTree::Leaf {
                    color: c.clone(),
                    label: i + 1,
                })
                .collect(),
        })
    }
}

/// Element of the free operad: a rooted tree with labelled leaves.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OperadTree {
    /// The operadic unit on a color (arity 1).
    Unit(Color),
    /// Input slot `label` (1-based) of the given color.
    Leaf { color: Color, label: usize },
    /// Generator applied to subtrees in planar order.
    Node { op: String, children: Vec<OperadTree> },
}

/// Input colors by slot label and the output color of a tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub inputs: Vec<Color>,
    pub output: Color,
}

impl OperadTree {
    pub fn unit(color: &str) -> Self {
        Self::Unit(color.to_string())
    }

    pub fn leaf(label: usize) -> Self {
        Self::Leaf {
            color: SINGLE_COLOR.to_string(),
            label,
        }
    }

    pub fn node(op: &str, children: Vec<OperadTree>) -> Self {
        Self::Node {
            op: op.to_string(),
            children,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            Self::Unit(_) | Self::Leaf { .. } => 1,
            Self::Node { children, .. } => children.iter().map(Self::arity).sum(),
        }
    }

    /// Slot labels in planar (left-to-right) order.
    pub fn planar_labels(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut Vec<usize>) {
        match self {
            Self::Unit(_) => out.push(1),
            Self::Leaf { label, .. } => out.push(*label),
            Self::Node { children, .. } => children.iter().for_each(|c| c.collect_labels(out)),
        }
    }

    /// Checks colors along every edge and that labels form a permutation.
    pub fn signature(&self, alphabet: &GeneratorAlphabet) -> Result<Signature, OperadError> {
        let mut slots = BTreeMap::new();
        let output = self.check_node(alphabet, &mut slots)?;
        let labels: Vec<usize> = slots.keys().copied().collect();
        if labels != (1..=labels.len()).collect::<Vec<_>>() || labels.len() != self.arity() {
            return Err(OperadError::BadLabels(self.planar_labels()));
        }
        Ok(Signature {
            inputs: slots.into_values().collect(),
            output,
        })
    }

    fn check_node(
        &self,
        alphabet: &GeneratorAlphabet,
        slots: &mut BTreeMap<usize, Color>,
    ) -> Result<Color, OperadError> {
        match self {
            Self::Unit(c) => {
                slots.insert(1, c.clone());
                Ok(c.clone())
            }
            Self::Leaf { color, label } => {
                if slots.insert(*label, color.clone()).is_some() {
                    return Err(OperadError::BadLabels(vec![*label]));
                }
                Ok(color.clone())
            }
            Self::Node { op, children } => {
                let g = alphabet
                    .get(op)
                    .ok_or_else(|| OperadError::UnknownGenerator(op.clone()))?;
                if g.arity() != children.len() {
                    return Err(OperadError::ArityMismatch {
                        name: op.clone(),
                        expected: g.arity(),
                        found: children.len(),
                    });
                }
                for (child, want) in children.iter().zip(&g.inputs) {
                    if matches!(child, Self::Unit(_)) {
                        return Err(OperadError::BadLabels(self.planar_labels()));
                    }
                    let got = child.check_node(alphabet, slots)?;
                    if &got != want {
                        return Err(OperadError::ColorMismatch {
                            expected: want.clone(),
                            found: got,
                        });
                    }
                }
                Ok(g.output.clone())
            }
        }
    }

    fn output_color(&self, alphabet: &GeneratorAlphabet) -> Result<Color, OperadError> {
        match self {
            Self::Unit(c) | Self::Leaf { color: c, .. } => Ok(c.clone()),
            Self::Node { op, .. } => alphabet
                .get(op)
                .map(|g| g.output.clone())
                .ok_or_else(|| OperadError::UnknownGenerator(op.clone())),
        }
    }

    /// Sum of generator degrees over all nodes.
    pub fn degree(&self, alphabet: &GeneratorAlphabet) -> Degree {
        match self {
            Self::Unit(_) | Self::Leaf { .. } => 0,
            Self::Node { op, children } => {
                alphabet.get(op).map_or(0, |g| g.degree)
                    + children.iter().map(|c| c.degree(alphabet)).sum::<Degree>()
            }
        }
    }

    fn shifted(&self, offset: usize) -> Self {
        match self {
            Self::Unit(c) => Self::Leaf {
                color: c.clone(),
                label: offset + 1,
            },
            Self::Leaf { color, label } => Self::Leaf {
                color: color.clone(),
                label: label + offset,
            },
            Self::Node { op, children } => Self::Node {
                op: op.clone(),
                children: children.iter().map(|c| c.shifted(offset)).collect(),
            },
        }
    }

    fn substitute(&self, replacements: &[OperadTree]) -> Self {
        match self {
            Self::Unit(_) => replacements[0].clone(),
            Self::Leaf { label, .. } => replacements[label - 1].clone(),
            Self::Node { op, children } => Self::Node {
                op: op.clone(),
                children: children.iter().map(|c| c.substitute(replacements)).collect(),
            },
        }
    }

    fn relabel(&self, f: &dyn Fn(usize) -> usize) -> Self {
        match self {
            Self::Unit(c) => Self::Unit(c.clone()),
            Self::Leaf { color, label } => Self::Leaf {
                color: color.clone(),
                label: f(*label),
            },
            Self::Node { op, children } => Self::Node {
                op: op.clone(),
                children: children.iter().map(|c| c.relabel(f)).collect(),
            },
        }
    }
}

/// Operadic composition `γ(outer; inners)`.
///
/// Slot `i` of `outer` receives `inners[i-1]`; the inputs of the result are
/// numbered by concatenating the inputs of `inners[0]`, `inners[1]`, ….
pub fn graft(
    alphabet: &GeneratorAlphabet,
    outer: &OperadTree,
    inners: &[OperadTree],
) -> Result<OperadTree, OperadError> {
    let sig = outer.signature(alphabet)?;
    if sig.inputs.len() != inners.len() {
        return Err(OperadError::ArityMismatch {
            name: "graft".into(),
            expected: sig.inputs.len(),
            found: inners.len(),
        });
    }
    let mut replacements = Vec::with_capacity(inners.len());
    let mut offset = 0;
    for (inner, want) in inners.iter().zip(&sig.inputs) {
        inner.signature(alphabet)?;
        let got = inner.output_color(alphabet)?;
        if &got != want {
            return Err(OperadError::ColorMismatch {
                expected: want.clone(),
                found: got,
            });
        }
        replacements.push(inner.shifted(offset));
        offset += inner.arity();
    }
    if let OperadTree::Unit(_) = outer {
        return Ok(inners[0].clone());
    }
    Ok(outer.substitute(&replacements))
}

/// A permutation of `0..n`, `images[i]` being the image of `i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Option<Self> {
        let mut seen = vec![false; images.len()];
        for &i in &images {
            if i >= images.len() || std::mem::replace(&mut seen[i], true) {
                return None;
            }
        }
        Some(Self(images))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Transposition of `i` and `j` in `S_n`.
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut p: Vec<usize> = (0..n).collect();
        p.swap(i, j);
        Self(p)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    /// `self` followed by `then`.
    pub fn then(&self, then: &Self) -> Self {
        Self(self.0.iter().map(|&i| then.0[i]).collect())
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }
}

/// Right action of `S_n`: the leaf in slot `i` moves to slot `σ(i)`.
///
/// With this convention `permute(permute(t, σ), τ) = permute(t, σ.then(τ))`
/// and `evaluate(permute(t, σ), x) = ± evaluate(t, (x_{σ(1)}, …, x_{σ(n)}))`.
pub fn permute(t: &OperadTree, sigma: &Permutation) -> Result<OperadTree, OperadError> {
    if sigma.len() != t.arity() {
        return Err(OperadError::BadPermutation(sigma.0.clone(), t.arity()));
    }
    if let OperadTree::Unit(_) = t {
        return Ok(t.clone());
    }
    Ok(t.relabel(&|l| sigma.apply(l - 1) + 1))
}

/// Formal rational linear combination of trees.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OperadElement {
    terms: BTreeMap<OperadTree, Rational>,
}

impl OperadElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn tree(t: OperadTree) -> Self {
        Self::term(Rational::one(), t)
    }

    pub fn term(c: Rational, t: OperadTree) -> Self {
        let mut e = Self::zero();
        e.add_term(c, t);
        e
    }

    pub fn add_term(&mut self, c: Rational, t: OperadTree) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(t.clone()).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&t);
        }
    }

    pub fn terms(&self) -> &BTreeMap<OperadTree, Rational> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.add_term(c.clone(), t.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rational) -> Self {
        let mut out = Self::zero();
        for (t, c) in &self.terms {
            out.add_term(c * k, t.clone());
        }
        out
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.plus(&other.scale(&-Rational::one()))
    }

    /// Common signature of all terms, `None` for the zero element.
    pub fn signature(&self, alphabet: &GeneratorAlphabet) -> Result<Option<Signature>, OperadError> {
        let mut sig: Option<Signature> = None;
        for t in self.terms.keys() {
            let s = t.signature(alphabet)?;
            match &sig {
                Some(prev) if prev != &s => {
                    return Err(OperadError::ColorMismatch {
                        expected: prev.output.clone(),
                        found: s.output,
                    })
                }
                _ => sig = Some(s),
            }
        }
        Ok(sig)
    }

    pub fn arity(&self) -> Option<usize> {
        self.terms.keys().next().map(OperadTree::arity)
    }

    pub fn permute(&self, sigma: &Permutation) -> Result<Self, OperadError> {
        let mut out = Self::zero();
        for (t, c) in &self.terms {
            out.add_term(c.clone(), permute(t, sigma)?);
        }
        Ok(out)
    }
}

/// Multilinear extension of [`graft`].
pub fn graft_elements(
    alphabet: &GeneratorAlphabet,
    outer: &OperadElement,
    inners: &[OperadElement],
) -> Result<OperadElement, OperadError> {
    let mut out = OperadElement::zero();
    for (t, c) in &outer.terms {
        let mut partial: Vec<(Vec<OperadTree>, Rational)> = vec![(Vec::new(), c.clone())];
        for inner in inners {
            let mut next = Vec::new();
            for (trees, coeff) in &partial {
                for (u, k) in &inner.terms {
                    let mut ts = trees.clone();
                    ts.push(u.clone());
                    next.push((ts, coeff * k));
                }
            }
            partial = next;
        }
        for (trees, coeff) in partial {
            out.add_term(coeff, graft(alphabet, t, &trees)?);
        }
    }
    Ok(out)
}

impl fmt::Display for OperadTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Unit(_) => write!(f, "1"),
            Self::Leaf { label, .. } => write!(f, "slot({label})"),
            Self::Node { op, children } => {
                write!(f, "{op}(")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for OperadElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (t, c)) in self.terms.iter().enumerate() {
            let neg = c < &Rational::zero();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let a = if neg { -c.clone() } else { c.clone() };
            if a.is_one() {
                write!(f, "{t}")?;
            } else {
                write!(f, "{}*{t}", format_rational(&a))?;
            }
        }
        Ok(())
    }
}

/// Parses the prefix text form, e.g. `mu(eta(), 1) - 1/2*mu(slot(2), slot(1))`.
///
/// Inside a node, `1` is an input whose slot is its planar position; `slot(i)`
/// names the slot explicitly. The two forms cannot be mixed in one tree. A
/// bare `1` is the operadic unit and `0` the zero element.
pub fn parse_element(alphabet: &GeneratorAlphabet, text: &str) -> Result<OperadElement, OperadError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
        alphabet,
    };
    let e = p.element()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    alphabet: &'a GeneratorAlphabet,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> OperadError {
        OperadError::Parse {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn element(&mut self) -> Result<OperadElement, OperadError> {
        let mut out = OperadElement::zero();
        let mut negate = self.eat(b'-');
        loop {
            let (c, t) = self.term()?;
            let c = if negate { -c } else { c };
            if let Some(t) = t {
                out.add_term(c, t);
            }
            if self.eat(b'+') {
                negate = false;
            } else if self.eat(b'-') {
                negate = true;
            } else {
                return Ok(out);
            }
        }
    }

    fn number(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'/')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn term(&mut self) -> Result<(Rational, Option<OperadTree>), OperadError> {
        let save = self.pos;
        if let Some(num) = self.number() {
            let q = parse_rational(&num).map_err(|_| self.error("bad coefficient"))?;
            if self.eat(b'*') {
                let t = self.tree_top()?;
                return Ok((q, t));
            }
            return match num.as_str() {
                "1" => Ok((Rational::one(), Some(OperadTree::unit(SINGLE_COLOR)))),
                "0" => Ok((Rational::zero(), None)),
                _ => {
                    self.pos = save;
                    Err(self.error("a bare number must be 0 or 1"))
                }
            };
        }
        let t = self.tree_top()?;
        Ok((Rational::one(), t))
    }

    fn tree_top(&mut self) -> Result<Option<OperadTree>, OperadError> {
        if let Some(num) = self.number() {
            return match num.as_str() {
                "1" => Ok(Some(OperadTree::unit(SINGLE_COLOR))),
                "0" => Ok(None),
                _ => Err(self.error("expected a tree")),
            };
        }
        let mut auto = 0usize;
        let mut explicit = false;
        let t = self.tree(&mut auto, &mut explicit, SINGLE_COLOR)?;
        if auto > 0 && explicit {
            return Err(self.error("cannot mix `1` inputs with `slot(i)`"));
        }
        t.signature(self.alphabet)?;
        Ok(Some(t))
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        (self.pos > start).then(|| String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn tree(
        &mut self,
        auto: &mut usize,
        explicit: &mut bool,
        color: &str,
    ) -> Result<OperadTree, OperadError> {
        if self.peek() == Some(b'1') {
            self.pos += 1;
            *auto += 1;
            return Ok(OperadTree::Leaf {
                color: color.to_string(),
                label: *auto,
            });
        }
        let name = self.ident().ok_or_else(|| self.error("expected a tree"))?;
        if !self.eat(b'(') {
            return Err(self.error("expected `(`"));
        }
        if name == "slot" {
            let num = self.number().ok_or_else(|| self.error("expected slot number"))?;
            let label: usize = num.parse().map_err(|_| self.error("bad slot number"))?;
            if !self.eat(b')') {
                return Err(self.error("expected `)`"));
            }
            *explicit = true;
            return Ok(OperadTree::Leaf {
                color: color.to_string(),
                label,
            });
        }
        let g = self
            .alphabet
            .get(&name)
            .ok_or_else(|| OperadError::UnknownGenerator(name.clone()))?
            .clone();
        let mut children = Vec::new();
        if !self.eat(b')') {
            loop {
                let want = g
                    .inputs
                    .get(children.len())
                    .cloned()
                    .unwrap_or_else(|| SINGLE_COLOR.to_string());
                children.push(self.tree(auto, explicit, &want)?);
                if self.eat(b')') {
                    break;
                }
                if !self.eat(b',') {
                    return Err(self.error("expected `,` or `)`"));
                }
            }
        }
        Ok(OperadTree::Node { op: name, children })
    }
}

/// Finite-dimensional algebra that can realise generators as multilinear maps.
///
/// Elements are sparse vectors in a homogeneous basis.
pub trait OperadAlgebra {
    fn dimension(&self) -> usize;
    fn basis_degree(&self, i: usize) -> Degree;
    /// Applies the named generator to homogeneous inputs.
    fn apply(&self, op: &str, inputs: &[SparseVec]) -> Result<SparseVec, EvalError>;

    fn element_degree(&self, v: &SparseVec) -> Result<Option<Degree>, EvalError> {
        let mut found = None;
        for &i in v.keys() {
            if i >= self.dimension() {
                return Err(EvalError::OutOfRange(i));
            }
            let d = self.basis_degree(i);
            match found {
                None => found = Some(d),
                Some(e) if e != d => return Err(EvalError::Inhomogeneous(i)),
                _ => {}
            }
        }
        Ok(found)
    }
}

/// Koszul sign of listing graded elements with the given degrees in `order`.
pub fn koszul_sign(degrees: &[Degree], order: &[usize]) -> Rational {
    let mut odd = 0i64;
    for a in 0..order.len() {
        for b in a + 1..order.len() {
            if order[a] > order[b] {
                odd += degrees[order[a]] * degrees[order[b]];
            }
        }
    }
    crate::exact::sign(odd)
}

/// Evaluates a linear combination of trees on homogeneous inputs.
///
/// Inputs are given in slot order. Each tree moves them into planar order
/// (Koszul sign) and applies generators bottom-up.
pub fn evaluate<A: OperadAlgebra + ?Sized>(
    expr: &OperadElement,
    alg: &A,
    inputs: &[SparseVec],
) -> Result<SparseVec, EvalError> {
    let mut degrees = Vec::with_capacity(inputs.len());
    for (i, x) in inputs.iter().enumerate() {
        match alg.element_degree(x) {
            Ok(d) => degrees.push(d.unwrap_or(0)),
            Err(EvalError::Inhomogeneous(_)) => return Err(EvalError::Inhomogeneous(i)),
            Err(e) => return Err(e),
        }
    }
    let mut out = SparseVec::new();
    for (t, c) in &expr.terms {
        if t.arity() != inputs.len() {
            return Err(EvalError::InputCount {
                expected: t.arity(),
                found: inputs.len(),
            });
        }
        if inputs.iter().any(SparseVec::is_empty) {
            continue;
        }
        let order: Vec<usize> = t.planar_labels().iter().map(|l| l - 1).collect();
        let planar: Vec<&SparseVec> = order.iter().map(|&i| &inputs[i]).collect();
        let s = koszul_sign(&degrees, &order);
        let mut cursor = 0;
        let v = eval_planar(t, alg, &planar, &mut cursor)?;
        axpy_sparse(&mut out, &(c * s), &v);
    }
    Ok(out)
}

fn eval_planar<A: OperadAlgebra + ?Sized>(
    t: &OperadTree,
    alg: &A,
    inputs: &[&SparseVec],
    cursor: &mut usize,
) -> Result<SparseVec, EvalError> {
    match t {
        OperadTree::Unit(_) | OperadTree::Leaf { .. } => {
            let v = inputs[*cursor].clone();
            *cursor += 1;
            Ok(v)
        }
        OperadTree::Node { op, children } => {
            let mut args = Vec::with_capacity(children.len());
            for child in children {
                args.push(eval_planar(child, alg, inputs, cursor)?);
            }
            alg.apply(op, &args)
        }
    }
}

/// A relation `lhs = rhs` between operations of equal signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub lhs: OperadElement,
    pub rhs: OperadElement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NamedOperad {
    As,
    Lie,
    ULie,
    Pois,
}

impl NamedOperad {
    pub fn name(self) -> &'static str {
        match self {
            Self::As => "As",
            Self::Lie => "Lie",
            Self::ULie => "uLie",
            Self::Pois => "Pois",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "As" => Some(Self::As),
            "Lie" => Some(Self::Lie),
            "uLie" => Some(Self::ULie),
            "Pois" => Some(Self::Pois),
            _ => None,
        }
    }
}

impl fmt::Display for NamedOperad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Generators, relations and an optional pair of distinguished binary operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperadPresentation {
    pub alphabet: GeneratorAlphabet,
    pub relations: Vec<Relation>,
    pub distinguished_pair: Option<(OperadElement, OperadElement)>,
}

impl OperadPresentation {
    pub fn new(
        alphabet: GeneratorAlphabet,
        relations: Vec<Relation>,
        distinguished_pair: Option<(OperadElement, OperadElement)>,
    ) -> Result<Self, OperadError> {
        for r in &relations {
            let l = r.lhs.signature(&alphabet)?;
            let rr = r.rhs.signature(&alphabet)?;
            if let (Some(a), Some(b)) = (&l, &rr) {
                if a != b {
                    return Err(OperadError::RelationSignature(r.name.clone()));
                }
            }
            if l.is_none() && rr.is_none() {
                return Err(OperadError::RelationSignature(r.name.clone()));
            }
        }
        if let Some((a, b)) = &distinguished_pair {
            for e in [a, b] {
                if let Some(s) = e.signature(&alphabet)? {
                    if s.inputs.len() != 2 {
                        return Err(OperadError::PairArity);
                    }
                }
            }
        }
        Ok(Self {
            alphabet,
            relations,
            distinguished_pair,
        })
    }

    /// Replaces the distinguished pair, keeping generators and relations.
    pub fn with_pair(&self, pair: (OperadElement, OperadElement)) -> Result<Self, OperadError> {
        Self::new(self.alphabet.clone(), self.relations.clone(), Some(pair))
    }

    pub fn corolla(&self, name: &str) -> OperadElement {
        OperadElement::tree(self.alphabet.corolla(name).expect("generator exists"))
    }

    pub fn graft(&self, outer: &OperadTree, inners: &[OperadTree]) -> OperadTree {
        graft(&self.alphabet, outer, inners).expect("well-typed graft")
    }
}

fn swap12() -> Permutation {
    Permutation::transposition(2, 0, 1)
}

fn as_relations(alph: &GeneratorAlphabet) -> Vec<Relation> {
    let mu = alph.corolla("mu").unwrap();
    let eta = alph.corolla("eta").unwrap();
    let one = OperadTree::unit(SINGLE_COLOR);
    let g = |outer: &OperadTree, inners: &[OperadTree]| graft(alph, outer, inners).unwrap();
    vec![
        Relation {
            name: "left_unit".into(),
            lhs: OperadElement::tree(g(&mu, &[eta.clone(), one.clone()])),
            rhs: OperadElement::tree(one.clone()),
        },
        Relation {
            name: "right_unit".into(),
            lhs: OperadElement::tree(g(&mu, &[one.clone(), eta])),
            rhs: OperadElement::tree(one.clone()),
        },
        Relation {
            name: "associativity".into(),
            lhs: OperadElement::tree(g(&mu, &[mu.clone(), one.clone()])),
            rhs: OperadElement::tree(g(&mu, &[one, mu.clone()])),
        },
    ]
}

/// Antisymmetry and Jacobi for the binary generator `name`.
fn lie_relations(alph: &GeneratorAlphabet, name: &str) -> Vec<Relation> {
    let b = alph.corolla(name).unwrap();
    let leaf = OperadTree::leaf;
    let node = |l: OperadTree, r: OperadTree| OperadTree::node(name, vec![l, r]);
    let antisym = Relation {
        name: format!("{name}_antisymmetry"),
        lhs: OperadElement::tree(b.clone()),
        rhs: OperadElement::term(-Rational::one(), permute(&b, &swap12()).unwrap()),
    };
    let mut jacobi = OperadElement::zero();
    for (x, y, z) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
        jacobi.add_term(Rational::one(), node(leaf(x), node(leaf(y), leaf(z))));
    }
    vec![
        antisym,
        Relation {
            name: format!("{name}_jacobi"),
            lhs: jacobi,
            rhs: OperadElement::zero(),
        },
    ]
}

/// The presentations of the associative, Lie, unital Lie and Poisson operads.
///
/// Distinguished pairs: `(μ, μ^op)` for `As`, `([·,·], 0)` for `Lie` and
/// `uLie`, `({·,·}, 0)` for `Pois`.
pub fn named_presentation(which: NamedOperad) -> OperadPresentation {
    let zero = OperadElement::zero;
    match which {
        NamedOperad::As => {
            let alph = GeneratorAlphabet::single_colored(&[("mu", 2), ("eta", 0)]);
            let rels = as_relations(&alph);
            let mu = alph.corolla("mu").unwrap();
            let pair = (
                OperadElement::tree(mu.clone()),
                OperadElement::tree(permute(&mu, &swap12()).unwrap()),
            );
            OperadPresentation::new(alph, rels, Some(pair)).unwrap()
        }
        NamedOperad::Lie => {
            let alph = GeneratorAlphabet::single_colored(&[("bracket", 2)]);
            let rels = lie_relations(&alph, "bracket");
            let pair = (OperadElement::tree(alph.corolla("bracket").unwrap()), zero());
            OperadPresentation::new(alph, rels, Some(pair)).unwrap()
        }
        NamedOperad::ULie => {
            let alph = GeneratorAlphabet::single_colored(&[("bracket", 2), ("eta", 0)]);
            let mut rels = lie_relations(&alph, "bracket");
            let b = alph.corolla("bracket").unwrap();
            let eta = alph.corolla("eta").unwrap();
            rels.push(Relation {
                name: "bracket_unit".into(),
                lhs: OperadElement::tree(
                    graft(&alph, &b, &[OperadTree::unit(SINGLE_COLOR), eta]).unwrap(),
                ),
                rhs: zero(),
            });
            let pair = (OperadElement::tree(b), zero());
            OperadPresentation::new(alph, rels, Some(pair)).unwrap()
        }
        NamedOperad::Pois => {
            let alph =
                GeneratorAlphabet::single_colored(&[("mu", 2), ("eta", 0), ("bracket", 2)]);
            let mut rels = as_relations(&alph);
            rels.extend(lie_relations(&alph, "bracket"));
            let mu = alph.corolla("mu").unwrap();
            rels.push(Relation {
                name: "commutativity".into(),
                lhs: OperadElement::tree(mu.clone()),
                rhs: OperadElement::tree(permute(&mu, &swap12()).unwrap()),
            });
            let leaf = OperadTree::leaf;
            let m = |l, r| OperadTree::node("mu", vec![l, r]);
            let b = |l, r| OperadTree::node("bracket", vec![l, r]);
            let mut rhs = OperadElement::tree(m(b(leaf(1), leaf(2)), leaf(3)));
            rhs.add_term(Rational::one(), m(leaf(2), b(leaf(1), leaf(3))));
            rels.push(Relation {
                name: "derivation".into(),
                lhs: OperadElement::tree(b(leaf(1), m(leaf(2), leaf(3)))),
                rhs,
            });
            // consequence of the derivation rule composed with units
            let eta = OperadTree::node("eta", vec![]);
            rels.push(Relation {
                name: "bracket_unit".into(),
                lhs: OperadElement::tree(b(leaf(1), eta)),
                rhs: zero(),
            });
            let pair = (OperadElement::tree(alph.corolla("bracket").unwrap()), zero());
            OperadPresentation::new(alph, rels, Some(pair)).unwrap()
        }
    }
}

/// `As` with the pair `(μ − μ^op, 0)`, the form used for quantum field theories.
pub fn as_commutator_presentation() -> OperadPresentation {
    let p = named_presentation(NamedOperad::As);
    let pair = (commutator_element(), OperadElement::zero());
    p.with_pair(pair).unwrap()
}

/// `μ − μ^op` in the free operad on `μ, η`.
pub fn commutator_element() -> OperadElement {
    let mu = OperadTree::node("mu", vec![OperadTree::leaf(1), OperadTree::leaf(2)]);
    let op = permute(&mu, &swap12()).unwrap();
    OperadElement::tree(mu).minus(&OperadElement::tree(op))
}

/// One violated relation instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationViolation {
    pub relation: String,
    /// Basis indices fed into the slots.
    pub inputs: Vec<usize>,
    /// `lhs − rhs` evaluated on those inputs.
    pub difference: SparseVec,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelationReport {
    pub checked: usize,
    /// Tuples the algebra could not evaluate because of truncation.
    pub skipped: usize,
    pub violations: Vec<RelationViolation>,
}

impl RelationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evaluates every relation on every tuple of basis elements.
pub fn check_relations<A: OperadAlgebra + ?Sized>(
    p: &OperadPresentation,
    alg: &A,
) -> Result<RelationReport, EvalError> {
    scan_relations(p, alg, false)
}

/// Whether every relation holds, stopping at the first violation.
pub fn relations_hold<A: OperadAlgebra + ?Sized>(p: &OperadPresentation, alg: &A) -> Result<bool, EvalError> {
    Ok(scan_relations(p, alg, true)?.is_ok())
}

fn scan_relations<A: OperadAlgebra + ?Sized>(
    p: &OperadPresentation,
    alg: &A,
    stop_early: bool,
) -> Result<RelationReport, EvalError> {
    let mut report = RelationReport::default();
    let dim = alg.dimension();
    for r in &p.relations {
        let diff = r.lhs.minus(&r.rhs);
        let arity = r.lhs.arity().or(r.rhs.arity()).unwrap_or(0);
        let mut tuple = vec![0usize; arity];
        if arity > 0 && dim == 0 {
            continue;
        }
        loop {
            let inputs: Vec<SparseVec> = tuple
                .iter()
                .map(|&i| SparseVec::from([(i, Rational::one())]))
                .collect();
            match evaluate(&diff, alg, &inputs) {
                Ok(v) => {
                    report.checked += 1;
                    if !v.is_empty() {
                        report.violations.push(RelationViolation {
                            relation: r.name.clone(),
                            inputs: tuple.clone(),
                            difference: v,
                        });
                        if stop_early {
                            return Ok(report);
                        }
                    }
                }
                Err(EvalError::Truncation { .. }) => report.skipped += 1,
                Err(e) => return Err(e),
            }
            if !advance(&mut tuple, dim) {
                break;
            }
        }
    }
    Ok(report)
}

/// Odometer over `0..dim` tuples; false once exhausted.
pub(crate) fn advance(tuple: &mut [usize], dim: usize) -> bool {
    for slot in tuple.iter_mut().rev() {
        *slot += 1;
        if *slot < dim {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Assignment of generators of `source` to operations of `target`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperadMorphism {
    pub source: OperadPresentation,
    pub target: OperadPresentation,
    pub images: BTreeMap<String, OperadElement>,
}

impl OperadMorphism {
    pub fn image_of_tree(&self, t: &OperadTree) -> Result<OperadElement, OperadError> {
        match t {
            OperadTree::Unit(_) | OperadTree::Leaf { .. } => Ok(OperadElement::tree(t.clone())),
            OperadTree::Node { op, children } => {
                let img = self
                    .images
                    .get(op)
                    .ok_or_else(|| OperadError::UnknownGenerator(op.clone()))?;
                // Children carry global slot labels; standardise each to 1..k,
                // graft, then send the concatenated numbering back.
                let mut back = Vec::new();
                let mut inner = Vec::with_capacity(children.len());
                for c in children {
                    let mut labels = c.planar_labels();
                    labels.sort_unstable();
                    let rank = |l: usize| labels.binary_search(&l).unwrap() + 1;
                    let mut local = OperadElement::zero();
                    for (tree, k) in self.image_of_tree(c)?.terms {
                        local.add_term(k, tree.relabel(&rank));
                    }
                    inner.push(local);
                    back.extend(labels);
                }
                let grafted = graft_elements(&self.target.alphabet, img, &inner)?;
                let mut out = OperadElement::zero();
                for (tree, c) in grafted.terms {
                    out.add_term(c, tree.relabel(&|l| back[l - 1]));
                }
                Ok(out)
            }
        }
    }

    pub fn image(&self, e: &OperadElement) -> Result<OperadElement, OperadError> {
        let mut out = OperadElement::zero();
        for (t, c) in &e.terms {
            out = out.plus(&self.image_of_tree(t)?.scale(c));
        }
        Ok(out)
    }

    /// `φ(lhs) − φ(rhs)` for every source relation.
    pub fn relation_images(&self) -> Result<Vec<(String, OperadElement)>, OperadError> {
        self.source
            .relations
            .iter()
            .map(|r| Ok((r.name.clone(), self.image(&r.lhs)?.minus(&self.image(&r.rhs)?))))
            .collect()
    }

    /// True when the distinguished pair of the source maps onto that of the target.
    pub fn preserves_points(&self) -> Result<bool, OperadError> {
        match (&self.source.distinguished_pair, &self.target.distinguished_pair) {
            (Some((a, b)), Some((x, y))) => Ok(&self.image(a)? == x && &self.image(b)? == y),
            (None, None) => Ok(true),
            _ => Ok(false),
        }
    }
}

/// The morphism `uLie → As`: `η ↦ η`, `[·,·] ↦ μ − μ^op`.
pub fn phi_ulie_to_as() -> OperadMorphism {
    let source = named_presentation(NamedOperad::ULie);
    let target = as_commutator_presentation();
    let images = BTreeMap::from([
        ("eta".to_string(), target.corolla("eta")),
        ("bracket".to_string(), commutator_element()),
    ]);
    OperadMorphism {
        source,
        target,
        images,
    }
}

/// Sparse tensor of a multilinear operation on a basis:
/// `(input indices) → output vector`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StructureTensor {
    pub arity: usize,
    pub entries: BTreeMap<Vec<usize>, SparseVec>,
}

impl StructureTensor {
    pub fn new(arity: usize) -> Self {
        Self {
            arity,
            entries: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, inputs: Vec<usize>, output: usize, c: Rational) {
        assert_eq!(inputs.len(), self.arity, "tensor arity mismatch");
        let slot = self.entries.entry(inputs.clone()).or_default();
        add_entry(slot, output, c);
        if slot.is_empty() {
            self.entries.remove(&inputs);
        }
    }

    pub fn get(&self, inputs: &[usize]) -> Option<&SparseVec> {
        self.entries.get(inputs)
    }

    /// Multilinear application to sparse inputs.
    pub fn apply(&self, inputs: &[SparseVec]) -> SparseVec {
        let mut out = SparseVec::new();
        if self.arity == 0 {
            if let Some(v) = self.entries.get(&Vec::new()) {
                out = v.clone();
            }
            return out;
        }
        let mut idx = vec![0usize; self.arity];
        let lists: Vec<Vec<(&usize, &Rational)>> = inputs.iter().map(|v| v.iter().collect()).collect();
        if lists.iter().any(Vec::is_empty) {
            return out;
        }
        let mut pos = vec![0usize; self.arity];
        loop {
            let mut coeff = Rational::one();
            for (k, &p) in pos.iter().enumerate() {
                let (&i, c) = lists[k][p];
                idx[k] = i;
                coeff *= c;
            }
            if let Some(v) = self.entries.get(&idx) {
                axpy_sparse(&mut out, &coeff, v);
            }
            let mut k = self.arity;
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                pos[k] += 1;
                if pos[k] < lists[k].len() {
                    break;
                }
                pos[k] = 0;
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}
