#![allow(dead_code)]

use std::collections::BTreeMap;

use opft_core::algebras::{commutator_functor, matrix_algebra, DgAlgebra, PresymplecticComplex};
use opft_core::complexes::{ChainComplex, Degree};
use opft_core::exact::{int, rat, Rational, RationalMatrix, SparseVec};
use opft_core::operads::{NamedOperad, StructureTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn small_rational(r: &mut impl Rng) -> Rational {
    rat(r.gen_range(-3..=3), r.gen_range(1..=3))
}

pub fn nonzero_rational(r: &mut impl Rng) -> Rational {
    loop {
        let q = small_rational(r);
        if q != int(0) {
            return q;
        }
    }
}

/// `L·U` with unit lower `L` and upper `U` with nonzero diagonal.
pub fn random_invertible(r: &mut impl Rng, n: usize) -> RationalMatrix {
    let mut l = RationalMatrix::identity(n);
    let mut u = RationalMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i > j {
                l.set(i, j, small_rational(r));
            } else if i == j {
                u.set(i, j, nonzero_rational(r));
            } else {
                u.set(i, j, small_rational(r));
            }
        }
    }
    l.mul(&u)
}

/// A complex with known homology: a sum of `ℚ[n]` and `ℚ[n] → ℚ[n−1]`
/// pieces, then a random change of basis in every degree.
pub struct KnownComplex {
    pub complex: ChainComplex,
    pub homology: BTreeMap<Degree, usize>,
}

pub fn random_complex(r: &mut impl Rng, max_total: usize) -> KnownComplex {
    let mut dims: BTreeMap<Degree, usize> = BTreeMap::new();
    let mut homology: BTreeMap<Degree, usize> = BTreeMap::new();
    let mut pieces: Vec<(Degree, bool)> = Vec::new();
    let mut total = 0;
    let target = r.gen_range(0..=max_total);
    while total < target {
        let n = r.gen_range(-2..=2);
        let pair = r.gen_bool(0.5) && total + 2 <= target;
        pieces.push((n, pair));
        *dims.entry(n).or_insert(0) += 1;
        if pair {
            *dims.entry(n - 1).or_insert(0) += 1;
            total += 2;
        } else {
            *homology.entry(n).or_insert(0) += 1;
            total += 1;
        }
    }
    // position of each piece inside its degrees
    let mut fill: BTreeMap<Degree, usize> = BTreeMap::new();
    let mut d: BTreeMap<Degree, RationalMatrix> = BTreeMap::new();
    for &(n, pair) in &pieces {
        let top = *fill.entry(n).or_insert(0);
        *fill.get_mut(&n).unwrap() += 1;
        if pair {
            let bottom = *fill.entry(n - 1).or_insert(0);
            *fill.get_mut(&(n - 1)).unwrap() += 1;
            d.entry(n)
                .or_insert_with(|| RationalMatrix::zeros(dims[&(n - 1)], dims[&n]))
                .set(bottom, top, int(1));
        }
    }
    let p: BTreeMap<Degree, RationalMatrix> =
        dims.iter().map(|(&n, &k)| (n, random_invertible(r, k))).collect();
    let d = d
        .into_iter()
        .map(|(n, m)| {
            let q = p[&(n - 1)].inverse().unwrap();
            (n, q.mul(&m).mul(&p[&n]))
        })
        .collect();
    KnownComplex {
        complex: ChainComplex::new(dims, d).unwrap(),
        homology,
    }
}

fn tensor_from(arity: usize, entries: &[(&[usize], usize, i64)]) -> StructureTensor {
    let mut t = StructureTensor::new(arity);
    for (inputs, out, c) in entries {
        t.add(inputs.to_vec(), *out, int(*c));
    }
    t
}

fn unit_at(i: usize) -> StructureTensor {
    tensor_from(0, &[(&[], i, 1)])
}

/// The associative families sampled by [`random_associative`].
pub fn associative_families() -> Vec<(&'static str, DgAlgebra)> {
    let deg0 = |n| ChainComplex::concentrated(0, n);
    let mut out = Vec::new();
    out.push(("matrices", opft_core::algebras::matrix_algebra(2)));
    // ℚ[ε]/ε², basis 1, ε
    out.push((
        "dual numbers",
        DgAlgebra::new(
            NamedOperad::As,
            deg0(2),
            BTreeMap::from([
                ("mu".into(), tensor_from(2, &[(&[0, 0], 0, 1), (&[0, 1], 1, 1), (&[1, 0], 1, 1)])),
                ("eta".into(), unit_at(0)),
            ]),
        )
        .unwrap(),
    ));
    // upper triangular 2×2: E00, E01, E11
    out.push((
        "upper triangular",
        DgAlgebra::new(
            NamedOperad::As,
            deg0(3),
            BTreeMap::from([
                (
                    "mu".into(),
                    tensor_from(2, &[(&[0, 0], 0, 1), (&[0, 1], 1, 1), (&[1, 2], 1, 1), (&[2, 2], 2, 1)]),
                ),
                ("eta".into(), tensor_from(0, &[(&[], 0, 1), (&[], 2, 1)])),
            ]),
        )
        .unwrap(),
    ));
    // Λ(x, y) with |x| = |y| = 1: basis 1 | x, y | xy
    let ext = ChainComplex::new(BTreeMap::from([(0, 1), (1, 2), (2, 1)]), BTreeMap::new()).unwrap();
    out.push((
        "exterior",
        DgAlgebra::new(
            NamedOperad::As,
            ext,
            BTreeMap::from([
                (
                    "mu".into(),
                    tensor_from(
                        2,
                        &[
                            (&[0, 0], 0, 1),
                            (&[0, 1], 1, 1),
                            (&[1, 0], 1, 1),
                            (&[0, 2], 2, 1),
                            (&[2, 0], 2, 1),
                            (&[0, 3], 3, 1),
                            (&[3, 0], 3, 1),
                            (&[1, 2], 3, 1),
                            (&[2, 1], 3, -1),
                        ],
                    ),
                ),
                ("eta".into(), unit_at(0)),
            ]),
        )
        .unwrap(),
    ));
    // square-zero dg extension: 1, y (degree 0), x (degree 1), dx = y
    let dg = ChainComplex::new(
        BTreeMap::from([(0, 2), (1, 1)]),
        BTreeMap::from([(1, RationalMatrix::from_i64(&[&[0], &[1]]))]),
    )
    .unwrap();
    out.push((
        "dg square-zero",
        DgAlgebra::new(
            NamedOperad::As,
            dg,
            BTreeMap::from([
                (
                    "mu".into(),
                    tensor_from(2, &[(&[0, 0], 0, 1), (&[0, 1], 1, 1), (&[1, 0], 1, 1), (&[0, 2], 2, 1), (&[2, 0], 2, 1)]),
                ),
                ("eta".into(), unit_at(0)),
            ]),
        )
        .unwrap(),
    ));
    out
}

/// Transports every structure tensor along a degree-preserving basis change
/// `P` (columns are the new basis in old coordinates).
pub fn change_basis(a: &DgAlgebra, p: &BTreeMap<Degree, RationalMatrix>) -> DgAlgebra {
    let c = a.carrier();
    let n = c.total_dim();
    let mut total = RationalMatrix::zeros(n, n);
    for (&deg, m) in p {
        let off = c.offset(deg);
        for (r, col, x) in m.triplets() {
            total.set(off + r, off + col, x.clone());
        }
    }
    let inv = total.inverse().unwrap();
    let new_col = |k: usize| -> SparseVec { opft_core::exact::to_sparse(&total.column(k)) };
    let back = |v: &SparseVec| -> SparseVec { inv.mul_sparse(v) };
    let mut d = BTreeMap::new();
    for deg in c.support() {
        let m = c.differential(deg);
        if m.is_zero() {
            continue;
        }
        d.insert(deg, p[&(deg - 1)].inverse().unwrap().mul(&m).mul(&p[&deg]));
    }
    let carrier = ChainComplex::new(c.dims().clone(), d).unwrap();
    let mut structure = BTreeMap::new();
    for (op, t) in a.structure() {
        let mut nt = StructureTensor::new(t.arity);
        let mut tuple = vec![0usize; t.arity];
        loop {
            let inputs: Vec<SparseVec> = tuple.iter().map(|&k| new_col(k)).collect();
            for (k, x) in back(&t.apply(&inputs)) {
                nt.add(tuple.clone(), k, x);
            }
            if !advance(&mut tuple, n) {
                break;
            }
        }
        structure.insert(op.clone(), nt);
    }
    DgAlgebra::new(a.kind(), carrier, structure).unwrap()
}

/// Odometer over `0..n` tuples; false once exhausted.
pub fn advance(tuple: &mut [usize], n: usize) -> bool {
    for slot in tuple.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return true;
        }
        *slot = 0;
    }
    false
}

pub fn random_basis_change(r: &mut impl Rng, c: &ChainComplex) -> BTreeMap<Degree, RationalMatrix> {
    c.dims().iter().map(|(&n, &k)| (n, random_invertible(r, k))).collect()
}

/// A random associative dg algebra of dimension at most 4 from a known family.
pub fn random_associative(r: &mut impl Rng) -> (&'static str, DgAlgebra) {
    let mut fams = associative_families();
    let (name, a) = fams.swap_remove(r.gen_range(0..fams.len()));
    let p = random_basis_change(r, a.carrier());
    (name, change_basis(&a, &p))
}

/// A random graded-antisymmetric pairing on a complex with zero differential
/// and the given basis degrees.
pub fn random_presymplectic(r: &mut impl Rng, degrees: &[Degree]) -> PresymplecticComplex {
    let mut dims = BTreeMap::new();
    for &d in degrees {
        *dims.entry(d).or_insert(0) += 1;
    }
    let carrier = ChainComplex::new(dims, BTreeMap::new()).unwrap();
    let deg = carrier.basis_degrees();
    let mut entries = Vec::new();
    for i in 0..deg.len() {
        for j in i..deg.len() {
            if deg[i] + deg[j] != 0 {
                continue;
            }
            let x = small_rational(r);
            // ω(j, i) = −(−1)^{|i||j|} ω(i, j)
            let back = -opft_core::exact::sign(deg[i] * deg[j]) * &x;
            if i == j && back != x {
                continue;
            }
            entries.push(((i, j), x.clone()));
            if i != j {
                entries.push(((j, i), back));
            }
        }
    }
    PresymplecticComplex::new(carrier, entries).unwrap()
}

/// The symplectic plane `ω(e1, e2) = 1`.
pub fn plane() -> PresymplecticComplex {
    PresymplecticComplex::new(ChainComplex::concentrated(0, 2), [((0, 1), int(1)), ((1, 0), int(-1))]).unwrap()
}

/// `ℚ[x, y]/(degree > 2)` with `{x, y} = xy`; basis `1, x, y, x², xy, y²`.
pub fn truncated_poisson() -> DgAlgebra {
    let exps = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];
    let index = |e: (usize, usize)| exps.iter().position(|&f| f == e);
    let mut mu = StructureTensor::new(2);
    for (i, a) in exps.iter().enumerate() {
        for (j, b) in exps.iter().enumerate() {
            if let Some(k) = index((a.0 + b.0, a.1 + b.1)) {
                mu.add(vec![i, j], k, int(1));
            }
        }
    }
    let mut bracket = StructureTensor::new(2);
    bracket.add(vec![1, 2], 4, int(1));
    bracket.add(vec![2, 1], 4, int(-1));
    let mut eta = StructureTensor::new(0);
    eta.add(vec![], 0, int(1));
    DgAlgebra::new(
        NamedOperad::Pois,
        ChainComplex::concentrated(0, 6),
        BTreeMap::from([("mu".into(), mu), ("bracket".into(), bracket), ("eta".into(), eta)]),
    )
    .unwrap()
}

pub fn gl2(kind: NamedOperad) -> DgAlgebra {
    let comm = commutator_functor(&matrix_algebra(2)).unwrap();
    match kind {
        NamedOperad::ULie => comm,
        NamedOperad::Lie => DgAlgebra::new(
            NamedOperad::Lie,
            comm.carrier().clone(),
            BTreeMap::from([("bracket".into(), comm.tensor("bracket").unwrap().clone())]),
        )
        .unwrap(),
        _ => unreachable!(),
    }
}

/// Every algebra obtained by adding 1 to one structure constant, including
/// constants that were zero on the support of the original tensor.
pub fn single_defects(a: &DgAlgebra) -> Vec<(String, Vec<usize>, usize, DgAlgebra)> {
    let n = a.carrier().total_dim();
    let degrees = a.degrees();
    let mut out = Vec::new();
    for (op, t) in a.structure() {
        let mut tuple = vec![0usize; t.arity];
        loop {
            let in_deg: i64 = tuple.iter().map(|&i| degrees[i]).sum();
            for (k, &deg) in degrees.iter().enumerate() {
                if deg == in_deg {
                    let mut nt = t.clone();
                    nt.add(tuple.clone(), k, int(1));
                    if let Ok(b) = a.with_tensor(op, nt) {
                        out.push((op.clone(), tuple.clone(), k, b));
                    }
                }
            }
            if !advance(&mut tuple, n) {
                break;
            }
        }
    }
    out
}
