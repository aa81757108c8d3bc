//! Linear Chern-Simons theory on triangulated oriented surfaces.
//!
//! Compactly supported forms on the interior of a surface are modelled by
//! relative simplicial cochains `C•(K, ∂K)`. The observable complex is
//!
//! ```text
//! 𝔏(M):  C²(K,∂K) ←−δ− C¹(K,∂K) ←−δ− C⁰(K,∂K)
//!          deg −1        deg 0          deg 1
//! ```
//!
//! and the pairing is the antisymmetrised cup product evaluated on the
//! fundamental class. Cup products use a global vertex order that surface
//! morphisms must preserve.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebras::{heisenberg, heisenberg_map, DgAlgebra, HeisenbergLayout, PresymplecticComplex};
use crate::complexes::{ChainComplex, ChainMap, Degree};
use crate::envelope::{PBWElement, TruncatedEnvelope};
use crate::exact::{rat, Rational, RationalMatrix, SparseVec};
use crate::fieldtheory::{default_pair, CategoryError, FieldTheory, OrthCategory, TheoryError};
use crate::operads::NamedOperad;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("triangle {0:?} refers to a missing vertex or repeats a vertex")]
    BadTriangle([usize; 3]),
    #[error("triangle on vertices {0:?} is listed twice")]
    DuplicateTriangle([usize; 3]),
    #[error("edge {0:?} bounds more than two triangles")]
    NonManifoldEdge([usize; 2]),
    #[error("edge {0:?} is traversed in the same direction by both of its triangles")]
    Incoherent([usize; 2]),
    #[error("boundary edges must be exactly the edges with one triangle; mismatch at {0:?}")]
    Boundary([usize; 2]),
    #[error("the link of vertex {0} is not a path or a cycle")]
    Link(usize),
    #[error("vertex {0} lies in no triangle")]
    Isolated(usize),
    #[error("vertex_order must be a permutation of 0..{0}")]
    VertexOrder(usize),
    #[error("morphism `{name}`: {msg}")]
    Morphism { name: String, msg: String },
    #[error("morphism `{name}` violates the star condition at target simplex {simplex:?}")]
    Star { name: String, simplex: Vec<usize> },
    #[error("unknown surface `{0}`")]
    UnknownSurface(String),
    #[error(transparent)]
    Category(#[from] CategoryError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
}

/// Compact oriented triangulated surface, possibly with boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriangulatedSurface {
    pub vertices: usize,
    /// Vertices listed in the global order used by cup products.
    pub vertex_order: Vec<usize>,
    /// Oriented triangles.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<[usize; 2]>,
}

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl TriangulatedSurface {
    pub fn validate(&self) -> Result<(), SurfaceError> {
        let n = self.vertices;
        let mut sorted_order = self.vertex_order.clone();
        sorted_order.sort_unstable();
        if sorted_order != (0..n).collect::<Vec<_>>() {
            return Err(SurfaceError::VertexOrder(n));
        }
        let mut seen = BTreeSet::new();
        let mut directed: HashMap<[usize; 2], Vec<(usize, usize)>> = HashMap::new();
        for t in &self.triangles {
            if t.iter().any(|&v| v >= n) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(SurfaceError::BadTriangle(*t));
            }
            let mut s = *t;
            s.sort_unstable();
            if !seen.insert(s) {
                return Err(SurfaceError::DuplicateTriangle(s));
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                directed.entry(edge_key(a, b)).or_default().push((a, b));
            }
        }
        let mut one_sided = BTreeSet::new();
        for (e, uses) in &directed {
            match uses.len() {
                1 => {
                    one_sided.insert(*e);
                }
                2 if uses[0] == uses[1] => return Err(SurfaceError::Incoherent(*e)),
                2 => {}
                _ => return Err(SurfaceError::NonManifoldEdge(*e)),
            }
        }
        let declared: BTreeSet<[usize; 2]> =
            self.boundary_edges.iter().map(|e| edge_key(e[0], e[1])).collect();
        if let Some(e) = declared.symmetric_difference(&one_sided).next() {
            return Err(SurfaceError::Boundary(*e));
        }
        for v in 0..n {
            let link: Vec<[usize; 2]> = self
                .triangles
                .iter()
                .filter_map(|t| {
                    let k = t.iter().position(|&x| x == v)?;
                    Some(edge_key(t[(k + 1) % 3], t[(k + 2) % 3]))
                })
                .collect();
            if link.is_empty() {
                return Err(SurfaceError::Isolated(v));
            }
            if !is_path_or_cycle(&link) {
                return Err(SurfaceError::Link(v));
            }
        }
        Ok(())
    }

    /// Position of each vertex in the global order.
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.vertices];
        for (i, &v) in self.vertex_order.iter().enumerate() {
            rank[v] = i;
        }
        rank
    }

    pub fn boundary_vertices(&self) -> BTreeSet<usize> {
        self.boundary_edges.iter().flat_map(|e| e.iter().copied()).collect()
    }

    /// All edges, as unordered vertex pairs.
    pub fn edges(&self) -> BTreeSet<[usize; 2]> {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| edge_key(t[k], t[(k + 1) % 3])))
            .collect()
    }
}

fn is_path_or_cycle(edges: &[[usize; 2]]) -> bool {
    let mut deg: BTreeMap<usize, usize> = BTreeMap::new();
    let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for e in edges {
        *deg.entry(e[0]).or_default() += 1;
        *deg.entry(e[1]).or_default() += 1;
        adj.entry(e[0]).or_default().push(e[1]);
        adj.entry(e[1]).or_default().push(e[0]);
    }
    if deg.values().any(|&d| d > 2) {
        return false;
    }
    let ends = deg.values().filter(|&&d| d == 1).count();
    if ends != 0 && ends != 2 {
        return false;
    }
    let start = *deg.keys().next().unwrap();
    let mut stack = vec![start];
    let mut visited = BTreeSet::from([start]);
    while let Some(v) = stack.pop() {
        for &w in &adj[&v] {
            if visited.insert(w) {
                stack.push(w);
            }
        }
    }
    visited.len() == deg.len()
}

/// Relative cochain data of one surface, with the basis of `𝔏(M)`.
#[derive(Clone, Debug)]
pub struct CsModel {
    pub surface: TriangulatedSurface,
    rank: Vec<usize>,
    /// Triangles with vertices sorted by rank, and the orientation sign of each.
    pub triangles: Vec<([usize; 3], i64)>,
    /// Interior edges `[u, v]` with `rank u < rank v`.
    pub edges: Vec<[usize; 2]>,
    /// Interior vertices.
    pub vertices: Vec<usize>,
    edge_index: HashMap<[usize; 2], usize>,
    vertex_index: HashMap<usize, usize>,
    triangle_index: HashMap<[usize; 3], usize>,
    complex: ChainComplex,
    pairing: PresymplecticComplex,
}

/// A relative cochain as values on sorted simplices.
pub type Cochain = BTreeMap<Vec<usize>, Rational>;

impl CsModel {
    pub fn new(surface: &TriangulatedSurface) -> Result<Self, SurfaceError> {
        surface.validate()?;
        let rank = surface.ranks();
        let sort = |mut s: Vec<usize>| {
            s.sort_by_key(|&v| rank[v]);
            s
        };
        let triangles: Vec<([usize; 3], i64)> = surface
            .triangles
            .iter()
            .map(|t| {
                let s = sort(t.to_vec());
                ([s[0], s[1], s[2]], permutation_sign(t, &s))
            })
            .collect();
        let bedges: BTreeSet<[usize; 2]> =
            surface.boundary_edges.iter().map(|e| edge_key(e[0], e[1])).collect();
        let mut edges: Vec<[usize; 2]> = surface
            .edges()
            .into_iter()
            .filter(|e| !bedges.contains(e))
            .map(|e| {
                let s = sort(e.to_vec());
                [s[0], s[1]]
            })
            .collect();
        edges.sort_by_key(|e| (rank[e[0]], rank[e[1]]));
        let bverts = surface.boundary_vertices();
        let vertices: Vec<usize> = (0..surface.vertices).filter(|v| !bverts.contains(v)).collect();
        let edge_index = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let vertex_index = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let triangle_index = triangles.iter().enumerate().map(|(i, (t, _))| (*t, i)).collect();
        let mut model = Self {
            surface: surface.clone(),
            rank,
            triangles,
            edges,
            vertices,
            edge_index,
            vertex_index,
            triangle_index,
            complex: ChainComplex::zero(),
            pairing: PresymplecticComplex::new(ChainComplex::zero(), []).unwrap(),
        };
        model.complex = model.build_complex();
        model.pairing = model.build_pairing();
        Ok(model)
    }

    fn build_complex(&self) -> ChainComplex {
        let (nt, ne, nv) = (self.triangles.len(), self.edges.len(), self.vertices.len());
        // d_0 : C¹ → C², d_1 : C⁰ → C¹, both −δ
        let mut d0 = RationalMatrix::zeros(nt, ne);
        for (ti, (t, _)) in self.triangles.iter().enumerate() {
            for (k, face) in faces(t).into_iter().enumerate() {
                if let Some(&ei) = self.edge_index.get(&[face[0], face[1]]) {
                    d0.add_to(ti, ei, -crate::exact::sign(k as i64));
                }
            }
        }
        let mut d1 = RationalMatrix::zeros(ne, nv);
        for (ei, e) in self.edges.iter().enumerate() {
            // δf(u,v) = f(v) − f(u)
            if let Some(&vi) = self.vertex_index.get(&e[1]) {
                d1.add_to(ei, vi, -Rational::one());
            }
            if let Some(&vi) = self.vertex_index.get(&e[0]) {
                d1.add_to(ei, vi, Rational::one());
            }
        }
        ChainComplex::new(
            BTreeMap::from([(-1, nt), (0, ne), (1, nv)]),
            BTreeMap::from([(0, d0), (1, d1)]),
        )
        .expect("cochain shapes")
    }

    /// The complex `𝔏(M)`.
    pub fn complex(&self) -> &ChainComplex {
        &self.complex
    }

    /// `(𝔏(M), ω)`.
    pub fn presymplectic(&self) -> &PresymplecticComplex {
        &self.pairing
    }

    /// Flattened index in `𝔏(M)` of an interior simplex given by its vertices.
    pub fn index_of(&self, simplex: &[usize]) -> Option<usize> {
        let mut s = simplex.to_vec();
        s.sort_by_key(|&v| self.rank[v]);
        let c = &self.complex;
        match s.len() {
            3 => self.triangle_index.get(&[s[0], s[1], s[2]]).map(|&i| c.offset(-1) + i),
            2 => self.edge_index.get(&[s[0], s[1]]).map(|&i| c.offset(0) + i),
            1 => self.vertex_index.get(&s[0]).map(|&i| c.offset(1) + i),
            _ => None,
        }
    }

    /// The sorted simplex behind a flattened index.
    pub fn simplex(&self, i: usize) -> Vec<usize> {
        let c = &self.complex;
        match c.degree_of(i) {
            Some(-1) => self.triangles[i - c.offset(-1)].0.to_vec(),
            Some(0) => self.edges[i - c.offset(0)].to_vec(),
            Some(1) => vec![self.vertices[i - c.offset(1)]],
            _ => panic!("index {i} outside 𝔏(M)"),
        }
    }

    /// Cochain degree (form degree) of the `𝔏` degree `n`.
    pub fn form_degree(n: Degree) -> usize {
        (1 - n) as usize
    }

    /// A vector of `𝔏(M)` as a cochain on sorted simplices.
    pub fn to_cochain(&self, v: &SparseVec) -> Cochain {
        v.iter().map(|(&i, c)| (self.simplex(i), c.clone())).collect()
    }

    /// A cochain on sorted or unsorted simplices as a vector; values on
    /// boundary simplices must vanish.
    pub fn from_cochain(&self, f: &Cochain) -> Option<SparseVec> {
        let mut v = SparseVec::new();
        for (s, c) in f {
            if c.is_zero() {
                continue;
            }
            let i = self.index_of(s)?;
            let sgn = if s.len() == 2 && self.rank[s[0]] > self.rank[s[1]] {
                -Rational::one()
            } else if s.len() == 3 {
                let mut sorted = s.clone();
                sorted.sort_by_key(|&v| self.rank[v]);
                crate::exact::int(permutation_sign(s, &sorted))
            } else {
                Rational::one()
            };
            crate::exact::add_entry(&mut v, i, sgn * c);
        }
        Some(v)
    }

    /// The same cochain keyed by rank-sorted simplices.
    fn sorted_cochain(&self, f: &Cochain) -> Cochain {
        let mut out = Cochain::new();
        for (s, c) in f {
            let mut sorted = s.clone();
            sorted.sort_by_key(|&v| self.rank[v]);
            let x = crate::exact::int(permutation_sign(s, &sorted)) * c;
            let entry = out.entry(sorted).or_insert_with(Rational::zero);
            *entry += x;
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    /// Simplicial coboundary `δ` evaluated simplex by simplex, on sorted
    /// simplices. Input simplices may be unsorted.
    pub fn coboundary(&self, f: &Cochain) -> Cochain {
        let f = self.sorted_cochain(f);
        let value = |s: &[usize]| f.get(s).cloned().unwrap_or_else(Rational::zero);
        let mut out = Cochain::new();
        for e in &self.edges {
            let x = value(&[e[1]]) - value(&[e[0]]);
            if !x.is_zero() {
                out.insert(e.to_vec(), x);
            }
        }
        for (t, _) in &self.triangles {
            let x = value(&[t[1], t[2]]) - value(&[t[0], t[2]]) + value(&[t[0], t[1]]);
            if !x.is_zero() {
                out.insert(t.to_vec(), x);
            }
        }
        out
    }

    /// `⟨a ∪ b, [K, ∂K]⟩` for cochains of complementary degree.
    pub fn cup_pairing(&self, a: &Cochain, b: &Cochain) -> Rational {
        let (a, b) = (&self.sorted_cochain(a), &self.sorted_cochain(b));
        let value = |f: &Cochain, s: &[usize]| f.get(s).cloned().unwrap_or_else(Rational::zero);
        let mut acc = Rational::zero();
        for (t, eps) in &self.triangles {
            for p in 0..=2 {
                let x = value(a, &t[..=p]) * value(b, &t[p..]);
                if !x.is_zero() {
                    acc += x * crate::exact::int(*eps);
                }
            }
        }
        acc
    }

    fn build_pairing(&self) -> PresymplecticComplex {
        let c = &self.complex;
        let deg = c.basis_degrees();
        let dim = deg.len();
        let ell = |n: Degree| if n == 0 { Rational::one() } else { -Rational::one() };
        let raw = |i: usize, j: usize| {
            let a = Cochain::from([(self.simplex(i), Rational::one())]);
            let b = Cochain::from([(self.simplex(j), Rational::one())]);
            self.cup_pairing(&a, &b)
        };
        let mut entries = Vec::new();
        for i in 0..dim {
            for j in 0..dim {
                if deg[i] + deg[j] != 0 {
                    continue;
                }
                // ω'(v, w) = ∫ v ∪ ℓ(w), antisymmetrised
                let wij = ell(deg[j]) * raw(i, j);
                let wji = ell(deg[i]) * raw(j, i);
                let w = rat(1, 2) * (wij - crate::exact::sign(deg[i] * deg[j]) * wji);
                if !w.is_zero() {
                    entries.push(((i, j), w));
                }
            }
        }
        PresymplecticComplex::new(c.clone(), entries).expect("indices in range")
    }

    /// Matrix of ω on homology representatives of degrees `n` and `−n`.
    pub fn homology_pairing(&self, n: Degree) -> RationalMatrix {
        let c = &self.complex;
        let left = c.homology(n).representatives;
        let right = c.homology(-n).representatives;
        let embed = |deg: Degree, v: &[Rational]| -> SparseVec {
            v.iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(|(k, x)| (c.offset(deg) + k, x.clone()))
                .collect()
        };
        let mut m = RationalMatrix::zeros(left.len(), right.len());
        for (i, a) in left.iter().enumerate() {
            for (j, b) in right.iter().enumerate() {
                m.set(i, j, self.pairing.pair(&embed(n, a), &embed(-n, b)));
            }
        }
        m
    }

    /// `H(𝔏(M))` with zero differential and the induced pairing, together
    /// with the inclusion of cycle representatives. The inclusion preserves
    /// the pairings and is a quasi-isomorphism.
    pub fn homology_model(&self) -> (PresymplecticComplex, ChainMap) {
        let c = &self.complex;
        let mut dims = BTreeMap::new();
        let mut comps = BTreeMap::new();
        for n in c.support() {
            let reps = c.homology(n).representatives;
            dims.insert(n, reps.len());
            comps.insert(n, RationalMatrix::from_columns(c.dim(n), &reps));
        }
        let h = ChainComplex::new(dims, BTreeMap::new()).expect("no differentials");
        let inclusion = ChainMap::new(h.clone(), c.clone(), comps).expect("component shapes");
        let cols = crate::algebras::matrix_columns(&inclusion.total_matrix());
        let mut entries = Vec::new();
        for (i, a) in cols.iter().enumerate() {
            for (j, b) in cols.iter().enumerate() {
                entries.push(((i, j), self.pairing.pair(a, b)));
            }
        }
        let ph = PresymplecticComplex::new(h, entries).expect("indices in range");
        (ph, inclusion)
    }
}

fn faces(t: &[usize; 3]) -> [[usize; 2]; 3] {
    [[t[1], t[2]], [t[0], t[2]], [t[0], t[1]]]
}

/// Sign of the permutation taking `from` to `to` (same elements).
fn permutation_sign(from: &[usize], to: &[usize]) -> i64 {
    let pos: Vec<usize> = from.iter().map(|x| to.iter().position(|y| y == x).unwrap()).collect();
    let mut inversions = 0;
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if pos[i] > pos[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// `𝔏(M)` of a surface.
pub fn cs_complex(m: &TriangulatedSurface) -> Result<ChainComplex, SurfaceError> {
    Ok(CsModel::new(m)?.complex)
}

/// `(𝔏(M), ω)` of a surface.
pub fn pairing(m: &TriangulatedSurface) -> Result<PresymplecticComplex, SurfaceError> {
    Ok(CsModel::new(m)?.pairing)
}

/// Simplicial embedding of one surface into another.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceMorphism {
    pub name: String,
    pub source: String,
    pub target: String,
    pub vertex_map: Vec<usize>,
}

impl SurfaceMorphism {
    /// Checks injectivity, orientation, vertex order and the star condition,
    /// and returns the extension-by-zero map `𝔏(source) → 𝔏(target)`.
    pub fn extension_by_zero(&self, s: &CsModel, t: &CsModel) -> Result<ChainMap, SurfaceError> {
        let err = |msg: &str| SurfaceError::Morphism {
            name: self.name.clone(),
            msg: msg.to_string(),
        };
        let phi = &self.vertex_map;
        if phi.len() != s.surface.vertices || phi.iter().any(|&v| v >= t.surface.vertices) {
            return Err(err("vertex map has the wrong length or leaves the target"));
        }
        if phi.iter().collect::<BTreeSet<_>>().len() != phi.len() {
            return Err(err("vertex map is not injective"));
        }
        for u in 0..phi.len() {
            for v in 0..phi.len() {
                if (s.rank[u] < s.rank[v]) != (t.rank[phi[u]] < t.rank[phi[v]]) {
                    return Err(err("vertex map does not preserve the vertex order"));
                }
            }
        }
        let target_oriented: BTreeSet<[usize; 3]> = t
            .surface
            .triangles
            .iter()
            .flat_map(|x| [*x, [x[1], x[2], x[0]], [x[2], x[0], x[1]]])
            .collect();
        let mut image_triangles = BTreeSet::new();
        for tri in &s.surface.triangles {
            let img = [phi[tri[0]], phi[tri[1]], phi[tri[2]]];
            if !target_oriented.contains(&img) {
                return Err(err(&format!("triangle {tri:?} does not map to a target triangle of the same orientation")));
            }
            let mut k = img;
            k.sort_unstable();
            image_triangles.insert(k);
        }
        // star condition: every target triangle meeting an interior simplex of
        // the image lies in the image
        let interior: Vec<Vec<usize>> = s
            .edges
            .iter()
            .map(|e| vec![phi[e[0]], phi[e[1]]])
            .chain(s.vertices.iter().map(|&v| vec![phi[v]]))
            .collect();
        for tri in &t.surface.triangles {
            let mut k = *tri;
            k.sort_unstable();
            if image_triangles.contains(&k) {
                continue;
            }
            if let Some(simplex) = interior.iter().find(|sim| sim.iter().all(|v| tri.contains(v))) {
                return Err(SurfaceError::Star {
                    name: self.name.clone(),
                    simplex: simplex.clone(),
                });
            }
        }
        let mut comps = BTreeMap::new();
        for n in [-1, 0, 1] {
            let mut m = RationalMatrix::zeros(t.complex.dim(n), s.complex.dim(n));
            let off = s.complex.offset(n);
            for k in 0..s.complex.dim(n) {
                let simplex: Vec<usize> = s.simplex(off + k).iter().map(|&v| phi[v]).collect();
                let i = t
                    .index_of(&simplex)
                    .ok_or_else(|| err(&format!("interior simplex {simplex:?} lands on the target boundary")))?;
                m.set(i - t.complex.offset(n), k, Rational::one());
            }
            comps.insert(n, m);
        }
        Ok(ChainMap::new(s.complex.clone(), t.complex.clone(), comps).expect("component shapes"))
    }

    /// Sorted target triangles hit by the morphism.
    fn image(&self, s: &TriangulatedSurface) -> BTreeSet<[usize; 3]> {
        s.triangles
            .iter()
            .map(|t| {
                let mut k = [self.vertex_map[t[0]], self.vertex_map[t[1]], self.vertex_map[t[2]]];
                k.sort_unstable();
                k
            })
            .collect()
    }
}

/// Surfaces and embeddings between them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CsDiagram {
    pub surfaces: BTreeMap<String, TriangulatedSurface>,
    pub morphisms: Vec<SurfaceMorphism>,
}

/// The linear theory `𝔅_CS` on a diagram, with the models of its surfaces.
pub struct CsTheory {
    pub models: Vec<CsModel>,
    pub theory: FieldTheory<DgAlgebra>,
    /// Vertex map of every morphism of the base category, composites included.
    pub vertex_maps: Vec<Vec<usize>>,
}

/// Builds `𝔅_CS`: Heisenberg algebras of `(𝔏(M), ω)` and extension by zero.
///
/// Composites of the listed morphisms are added. Two morphisms into the same
/// surface are orthogonal when their images share no triangle, which under
/// the star condition means disjoint interiors.
pub fn build_bcs(diagram: &CsDiagram) -> Result<CsTheory, SurfaceError> {
    let names: Vec<String> = diagram.surfaces.keys().cloned().collect();
    let obj = |n: &str| {
        names
            .iter()
            .position(|x| x == n)
            .ok_or_else(|| SurfaceError::UnknownSurface(n.to_string()))
    };
    let models = diagram
        .surfaces
        .values()
        .map(CsModel::new)
        .collect::<Result<Vec<_>, _>>()?;
    // morphisms: (name, source, target, vertex map), identities first
    let mut morphs: Vec<(String, usize, usize, Vec<usize>)> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (format!("id_{n}"), i, i, (0..models[i].surface.vertices).collect()))
        .collect();
    for m in &diagram.morphisms {
        morphs.push((m.name.clone(), obj(&m.source)?, obj(&m.target)?, m.vertex_map.clone()));
    }
    let mut compose = Vec::new();
    let mut i = 0;
    while i < morphs.len() {
        let mut j = 0;
        while j < morphs.len() {
            let (g, f) = (&morphs[i], &morphs[j]);
            if g.1 == f.2 {
                let map: Vec<usize> = f.3.iter().map(|&v| g.3[v]).collect();
                let (src, tgt) = (f.1, g.2);
                let existing = morphs
                    .iter()
                    .position(|h| h.1 == src && h.2 == tgt && h.3 == map);
                let gf = match existing {
                    Some(k) => morphs[k].0.clone(),
                    None => {
                        let name = format!("{}∘{}", g.0, f.0);
                        morphs.push((name.clone(), src, tgt, map));
                        name
                    }
                };
                compose.push((morphs[i].0.clone(), morphs[j].0.clone(), gf));
            }
            j += 1;
        }
        i += 1;
    }
    let mut maps = Vec::with_capacity(morphs.len());
    for (name, s, t, vm) in &morphs {
        let sm = SurfaceMorphism {
            name: name.clone(),
            source: names[*s].clone(),
            target: names[*t].clone(),
            vertex_map: vm.clone(),
        };
        maps.push(sm.extension_by_zero(&models[*s], &models[*t])?);
    }
    let mut orth = Vec::new();
    for (a, ma) in morphs.iter().enumerate() {
        for mb in morphs.iter().skip(a + 1) {
            if ma.2 != mb.2 {
                continue;
            }
            let sa = SurfaceMorphism { name: ma.0.clone(), source: String::new(), target: String::new(), vertex_map: ma.3.clone() };
            let sb = SurfaceMorphism { name: mb.0.clone(), source: String::new(), target: String::new(), vertex_map: mb.3.clone() };
            if sa.image(&models[ma.1].surface).is_disjoint(&sb.image(&models[mb.1].surface)) {
                orth.push((ma.0.clone(), mb.0.clone()));
            }
        }
    }
    let base = OrthCategory::new(
        names.clone(),
        morphs
            .iter()
            .map(|m| (m.0.clone(), names[m.1].clone(), names[m.2].clone()))
            .collect(),
        compose,
        orth,
    )?;
    let algebras: Vec<DgAlgebra> = models.iter().map(|m| heisenberg(&m.pairing)).collect();
    let mut actions = vec![None; base.morphisms().len()];
    let mut vertex_maps = vec![Vec::new(); base.morphisms().len()];
    for ((name, _, _, vm), map) in morphs.iter().zip(&maps) {
        let k = base.morphism_index(name).expect("morphism registered");
        actions[k] = Some(heisenberg_map(map));
        vertex_maps[k] = vm.clone();
    }
    let theory = FieldTheory::new(base, NamedOperad::ULie, default_pair(NamedOperad::ULie), algebras, actions)?;
    Ok(CsTheory {
        models,
        theory,
        vertex_maps,
    })
}

/// `𝔄_CS = 𝔔lin(𝔅_CS)` at truncation `n_max`.
pub fn build_acs(diagram: &CsDiagram, n_max: usize) -> Result<FieldTheory<TruncatedEnvelope>, SurfaceError> {
    let b = build_bcs(diagram)?;
    Ok(b.theory.quantize(n_max)?)
}

/// A diagram with a single surface and no morphisms.
pub fn single_surface(name: &str, s: TriangulatedSurface) -> CsDiagram {
    CsDiagram {
        surfaces: BTreeMap::from([(name.to_string(), s)]),
        morphisms: Vec::new(),
    }
}

/// Generators whose quantized relations fail.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CsRelationReport {
    /// Basis simplices `x` of `𝔏(M)` with `d x̂ ≠ (−δx)^`.
    pub differential: Vec<Vec<usize>>,
    /// Pairs with `[x̂, ŷ] ≠ ω(x, y)·𝟙`.
    pub commutators: Vec<(Vec<usize>, Vec<usize>)>,
}

impl CsRelationReport {
    pub fn is_ok(&self) -> bool {
        self.differential.is_empty() && self.commutators.is_empty()
    }
}

/// Checks the generator relations of the quantized algebra of `model`:
/// `dx̂ = (−δx)^` against a direct coboundary, and `[x̂, ŷ] = ω(x, y)·𝟙`.
pub fn quantized_relation_defects(
    model: &CsModel,
    env: &TruncatedEnvelope,
) -> Result<CsRelationReport, crate::envelope::EnvelopeError> {
    let layout = HeisenbergLayout::of(model.complex());
    let lift = |v: &SparseVec| -> PBWElement {
        let w: SparseVec = v.iter().map(|(&i, c)| (layout.embedding[i], c.clone())).collect();
        env.embed(&w)
    };
    let unit = |i: usize| SparseVec::from([(i, Rational::one())]);
    let dim = model.complex().total_dim();
    let mut report = CsRelationReport::default();
    for i in 0..dim {
        let x = model.simplex(i);
        let delta = model.coboundary(&Cochain::from([(x.clone(), Rational::one())]));
        let minus_delta: Cochain = delta.into_iter().map(|(s, c)| (s, -c)).collect();
        let expected = lift(&model.from_cochain(&minus_delta).expect("interior coboundary"));
        if env.differential(&lift(&unit(i)))? != expected {
            report.differential.push(x);
        }
    }
    if env.bound() >= 2 {
        for i in 0..dim {
            for j in 0..dim {
                let got = env.commutator(&lift(&unit(i)), &lift(&unit(j)))?;
                let w = model.presymplectic().omega(i, j);
                if got != PBWElement::one().scale(&w) {
                    report.commutators.push((model.simplex(i), model.simplex(j)));
                }
            }
        }
    }
    Ok(report)
}

/// Boundary of the 3-simplex.
pub fn tetrahedron() -> TriangulatedSurface {
    TriangulatedSurface {
        vertices: 4,
        vertex_order: vec![0, 1, 2, 3],
        triangles: vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        boundary_edges: vec![],
    }
}

/// A single triangle.
pub fn disk() -> TriangulatedSurface {
    TriangulatedSurface {
        vertices: 3,
        vertex_order: vec![0, 1, 2],
        triangles: vec![[0, 1, 2]],
        boundary_edges: vec![[0, 1], [1, 2], [0, 2]],
    }
}

/// `k × k` grid on the torus, vertex `(i, j)` numbered `k i + j`.
pub fn torus(k: usize) -> TriangulatedSurface {
    assert!(k >= 3, "grid too coarse for a simplicial torus");
    let v = |i: usize, j: usize| k * (i % k) + (j % k);
    let mut triangles = Vec::new();
    for i in 0..k {
        for j in 0..k {
            triangles.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
            triangles.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
        }
    }
    TriangulatedSurface {
        vertices: k * k,
        vertex_order: (0..k * k).collect(),
        triangles,
        boundary_edges: vec![],
    }
}

/// `rings` concentric circles of `k` vertices, vertex `m` of ring `r`
/// numbered `k r + m`.
pub fn annulus(rings: usize, k: usize) -> TriangulatedSurface {
    assert!(rings >= 2 && k >= 3, "annulus needs two rings of three vertices");
    let v = |r: usize, m: usize| k * r + (m % k);
    let mut triangles = Vec::new();
    for r in 0..rings - 1 {
        for m in 0..k {
            triangles.push([v(r, m), v(r, m + 1), v(r + 1, m + 1)]);
            triangles.push([v(r, m), v(r + 1, m + 1), v(r + 1, m)]);
        }
    }
    let boundary_edges = (0..k)
        .flat_map(|m| [[v(0, m), v(0, m + 1)], [v(rings - 1, m), v(rings - 1, m + 1)]])
        .collect();
    TriangulatedSurface {
        vertices: rings * k,
        vertex_order: (0..rings * k).collect(),
        triangles,
        boundary_edges,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(c: &ChainComplex) -> Vec<usize> {
        let h = c.homology_dims();
        [-1, 0, 1].iter().map(|n| h.get(n).copied().unwrap_or(0)).collect()
    }

    #[test]
    fn sphere_and_disk_homology() {
        assert_eq!(dims(&cs_complex(&tetrahedron()).unwrap()), vec![1, 0, 1]);
        assert_eq!(dims(&cs_complex(&disk()).unwrap()), vec![1, 0, 0]);
    }

    #[test]
    fn pairings_are_presymplectic() {
        for s in [tetrahedron(), disk()] {
            let p = pairing(&s).unwrap();
            assert!(p.validate().is_ok(), "{:?}", p.validate());
        }
    }

    #[test]
    fn surface_errors() {
        let mut bad = tetrahedron();
        bad.triangles[3] = [1, 3, 2];
        assert!(matches!(bad.validate(), Err(SurfaceError::Incoherent(_))));
        let mut open = tetrahedron();
        open.triangles.pop();
        assert!(matches!(open.validate(), Err(SurfaceError::Boundary(_))));
        let mut order = disk();
        order.vertex_order = vec![0, 0, 2];
        assert!(matches!(order.validate(), Err(SurfaceError::VertexOrder(3))));
    }

    #[test]
    fn disks_in_sphere() {
        let diagram = CsDiagram {
            surfaces: BTreeMap::from([
                ("d1".to_string(), disk()),
                ("d2".to_string(), disk()),
                ("s".to_string(), tetrahedron()),
            ]),
            morphisms: vec![
                SurfaceMorphism {
                    name: "i1".into(),
                    source: "d1".into(),
                    target: "s".into(),
                    vertex_map: vec![1, 2, 3],
                },
                SurfaceMorphism {
                    name: "i2".into(),
                    source: "d2".into(),
                    target: "s".into(),
                    vertex_map: vec![0, 1, 3],
                },
            ],
        };
        let b = build_bcs(&diagram).unwrap();
        let base = &b.theory.base;
        let (i1, i2) = (base.morphism_index("i1").unwrap(), base.morphism_index("i2").unwrap());
        assert!(base.is_orthogonal(i1, i2));
        assert!(b.theory.validate().is_ok());
        assert!(b.theory.check_causality().unwrap().is_ok());
    }

    #[test]
    fn orientation_reversing_map_is_rejected() {
        let s = CsModel::new(&disk()).unwrap();
        let t = CsModel::new(&tetrahedron()).unwrap();
        let m = SurfaceMorphism {
            name: "r".into(),
            source: "d".into(),
            target: "s".into(),
            vertex_map: vec![0, 1, 2],
        };
        assert!(matches!(m.extension_by_zero(&s, &t), Err(SurfaceError::Morphism { .. })));
    }

    #[test]
    fn torus_cycles_pair_to_one() {
        let k = 3;
        let m = CsModel::new(&torus(k)).unwrap();
        assert_eq!(dims(m.complex()), vec![1, 2, 1]);
        let v = |i: usize, j: usize| k * (i % k) + (j % k);
        // directed seam crossings: +x across i = k-1 → 0, +y across j = k-1 → 0
        let mut a = Cochain::new();
        let mut b = Cochain::new();
        for t in 0..k {
            a.insert(vec![v(k - 1, t), v(0, t)], Rational::one());
            a.insert(vec![v(k - 1, t), v(0, t + 1)], Rational::one());
            b.insert(vec![v(t, k - 1), v(t, 0)], Rational::one());
            b.insert(vec![v(t, k - 1), v(t + 1, 0)], Rational::one());
        }
        let (a, b) = (m.from_cochain(&a).unwrap(), m.from_cochain(&b).unwrap());
        let d = m.complex().total_differential();
        assert!(d.mul_sparse(&a).is_empty() && d.mul_sparse(&b).is_empty());
        let w = m.presymplectic().pair(&a, &b);
        assert_eq!(w.clone() * w, Rational::one());
        assert_eq!(m.homology_pairing(0).rank(), 2);
    }

    #[test]
    fn annulus_band_inclusion_is_quasi_iso() {
        let s = CsModel::new(&annulus(2, 3)).unwrap();
        let t = CsModel::new(&annulus(3, 3)).unwrap();
        assert_eq!(dims(s.complex()), vec![1, 1, 0]);
        let f = SurfaceMorphism {
            name: "band".into(),
            source: "a".into(),
            target: "b".into(),
            vertex_map: (0..6).collect(),
        };
        let map = f.extension_by_zero(&s, &t).unwrap();
        assert!(map.is_valid());
        assert!(map.is_quasi_iso());
    }

    #[test]
    fn bad_vertex_maps_are_rejected() {
        let d = CsModel::new(&disk()).unwrap();
        let t = CsModel::new(&torus(3)).unwrap();
        let m = |vm: Vec<usize>| SurfaceMorphism {
            name: "m".into(),
            source: "d".into(),
            target: "t".into(),
            vertex_map: vm,
        };
        // [0, 3, 4] is a torus triangle
        assert!(m(vec![0, 3, 4]).extension_by_zero(&d, &t).is_ok());
        assert!(m(vec![0, 0, 4]).extension_by_zero(&d, &t).is_err());
        let mut reordered = disk();
        reordered.vertex_order = vec![1, 0, 2];
        let r = CsModel::new(&reordered).unwrap();
        assert!(m(vec![0, 3, 4]).extension_by_zero(&r, &t).is_err());
    }

    #[test]
    fn quantized_generators_on_the_sphere() {
        let m = CsModel::new(&tetrahedron()).unwrap();
        let env = crate::envelope::ccr(m.presymplectic(), 2).unwrap();
        assert!(quantized_relation_defects(&m, &env).unwrap().is_ok());
        assert!(env.complex().is_valid());
        assert!(env.leibniz_failures().unwrap().is_empty());
    }
}
