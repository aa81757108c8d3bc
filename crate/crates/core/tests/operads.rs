mod support;

use opft_core::algebras::matrix_algebra;
use opft_core::exact::{int, SparseVec};
use opft_core::operads::{
    evaluate, graft, named_presentation, parse_element, permute, NamedOperad, OperadAlgebra, OperadElement,
    OperadTree, Permutation,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use support::*;

/// A tree built from `mu` and `eta` with leaves numbered in planar order.
fn shape(r: &mut impl Rng, depth: usize, next: &mut usize) -> OperadTree {
    let roll = r.gen_range(0..10);
    if depth == 0 || roll < 4 {
        *next += 1;
        return OperadTree::leaf(*next);
    }
    if roll == 4 {
        return OperadTree::node("eta", vec![]);
    }
    let a = shape(r, depth - 1, next);
    let b = shape(r, depth - 1, next);
    OperadTree::node("mu", vec![a, b])
}

fn random_permutation(r: &mut impl Rng, n: usize) -> Permutation {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(r);
    Permutation::new(p).unwrap()
}

fn random_tree(r: &mut impl Rng, depth: usize) -> OperadTree {
    let mut n = 0;
    let t = shape(r, depth, &mut n);
    let sigma = random_permutation(r, t.arity());
    permute(&t, &sigma).unwrap()
}

fn random_inputs(r: &mut impl Rng, k: usize, dim: usize) -> Vec<SparseVec> {
    (0..k)
        .map(|_| (0..dim).map(|i| (i, small_rational(r))).filter(|(_, c)| *c != int(0)).collect())
        .collect()
}

fn eval_tree<A: OperadAlgebra>(t: &OperadTree, a: &A, x: &[SparseVec]) -> SparseVec {
    evaluate(&OperadElement::tree(t.clone()), a, x).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grafting_is_associative(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alphabet = named_presentation(NamedOperad::As).alphabet;
        let a = random_tree(&mut r, 2);
        let bs: Vec<OperadTree> = (0..a.arity()).map(|_| random_tree(&mut r, 2)).collect();
        let total: usize = bs.iter().map(OperadTree::arity).sum();
        let cs: Vec<OperadTree> = (0..total).map(|_| random_tree(&mut r, 1)).collect();
        let sequential = graft(&alphabet, &graft(&alphabet, &a, &bs).unwrap(), &cs).unwrap();
        let mut rest = &cs[..];
        let mut inner = Vec::new();
        for b in &bs {
            let (mine, tail) = rest.split_at(b.arity());
            inner.push(graft(&alphabet, b, mine).unwrap());
            rest = tail;
        }
        let parallel = graft(&alphabet, &a, &inner).unwrap();
        prop_assert_eq!(sequential, parallel);
    }

    #[test]
    fn units_are_neutral(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alphabet = named_presentation(NamedOperad::As).alphabet;
        let t = random_tree(&mut r, 3);
        let unit = OperadTree::unit("*");
        prop_assert_eq!(graft(&alphabet, &unit, std::slice::from_ref(&t)).unwrap(), t.clone());
        let units = vec![unit; t.arity()];
        prop_assert_eq!(graft(&alphabet, &t, &units).unwrap(), t);
    }

    #[test]
    fn permutations_act_on_the_right(seed in any::<u64>()) {
        let mut r = rng(seed);
        let t = random_tree(&mut r, 3);
        let n = t.arity();
        let (s, u) = (random_permutation(&mut r, n), random_permutation(&mut r, n));
        prop_assert_eq!(
            permute(&permute(&t, &s).unwrap(), &u).unwrap(),
            permute(&t, &s.then(&u)).unwrap()
        );
        prop_assert_eq!(permute(&t, &Permutation::identity(n)).unwrap(), t);
    }

    #[test]
    fn evaluation_is_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = matrix_algebra(2);
        let t = random_tree(&mut r, 3);
        let n = t.arity();
        let sigma = random_permutation(&mut r, n);
        let x = random_inputs(&mut r, n, 4);
        let moved: Vec<SparseVec> = (0..n).map(|i| x[sigma.apply(i)].clone()).collect();
        prop_assert_eq!(eval_tree(&permute(&t, &sigma).unwrap(), &a, &x), eval_tree(&t, &a, &moved));
    }

    #[test]
    fn evaluation_respects_grafting(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alphabet = named_presentation(NamedOperad::As).alphabet;
        let a = matrix_algebra(2);
        let outer = random_tree(&mut r, 2);
        let inners: Vec<OperadTree> = (0..outer.arity()).map(|_| random_tree(&mut r, 2)).collect();
        let total: usize = inners.iter().map(OperadTree::arity).sum();
        let x = random_inputs(&mut r, total, 4);
        let mut rest = &x[..];
        let mut values = Vec::new();
        for b in &inners {
            let (mine, tail) = rest.split_at(b.arity());
            values.push(eval_tree(b, &a, mine));
            rest = tail;
        }
        let g = graft(&alphabet, &outer, &inners).unwrap();
        prop_assert_eq!(eval_tree(&g, &a, &x), eval_tree(&outer, &a, &values));
    }

    #[test]
    fn text_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let alphabet = named_presentation(NamedOperad::As).alphabet;
        let arity = r.gen_range(0..=3);
        let mut e = OperadElement::zero();
        for _ in 0..r.gen_range(1..=3) {
            let t = loop {
                let t = random_tree(&mut r, 3);
                if t.arity() == arity {
                    break t;
                }
            };
            e.add_term(small_rational(&mut r), t);
        }
        let text = e.to_string();
        prop_assert_eq!(parse_element(&alphabet, &text).unwrap(), e, "{}", text);
    }
}

#[test]
fn opposite_product_agrees_on_graded_commutative_inputs() {
    // in Λ(x, y) the Koszul sign turns μ^op back into μ
    let ext = associative_families().into_iter().find(|(n, _)| *n == "exterior").unwrap().1;
    let alphabet = named_presentation(NamedOperad::As).alphabet;
    let mu = parse_element(&alphabet, "mu(slot(1), slot(2))").unwrap();
    let op = parse_element(&alphabet, "mu(slot(2), slot(1))").unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let x = [SparseVec::from([(i, int(1))]), SparseVec::from([(j, int(1))])];
            assert_eq!(evaluate(&mu, &ext, &x).unwrap(), evaluate(&op, &ext, &x).unwrap(), "({i}, {j})");
        }
    }
}
