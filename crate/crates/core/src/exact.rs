//! Exact rational scalars and sparse linear algebra over ℚ.
//!
//! Every matrix is stored row-major as a vector of sparse rows. Zero entries are
//! never stored. Elimination always picks the first available pivot in column
//! order, so kernels, solutions and pivot sets are reproducible.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational number, always kept in lowest terms with a
/// positive denominator.
pub type Rational = BigRational;

/// Dense vector of rationals.
pub type Vector = Vec<Rational>;

/// Sparse vector: index → nonzero coefficient.
pub type SparseVec = BTreeMap<usize, Rational>;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `n/d` reduced. Panics when `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `(-1)^k` as a rational.
pub fn sign(k: i64) -> Rational {
    if k.rem_euclid(2) == 0 {
        Rational::one()
    } else {
        -Rational::one()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

/// Canonical text form: `p/q`, or `p` when `q = 1`.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let t = s.trim();
    let (n, d) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let n: BigInt = n.parse().map_err(|_| err())?;
    let d: BigInt = d.parse().map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(n, d))
}

pub fn zero_vector(n: usize) -> Vector {
    vec![Rational::zero(); n]
}

pub fn unit_vector(n: usize, i: usize) -> Vector {
    let mut v = zero_vector(n);
    v[i] = Rational::one();
    v
}

pub fn is_zero_vector(v: &[Rational]) -> bool {
    v.iter().all(Zero::is_zero)
}

pub fn to_sparse(v: &[Rational]) -> SparseVec {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

pub fn to_dense(v: &SparseVec, n: usize) -> Vector {
    let mut out = zero_vector(n);
    for (&i, x) in v {
        out[i] = x.clone();
    }
    out
}

/// `acc += c * v`, dropping entries that cancel.
pub fn axpy_sparse(acc: &mut SparseVec, c: &Rational, v: &SparseVec) {
    if c.is_zero() {
        return;
    }
    for (&i, x) in v {
        add_entry(acc, i, c * x);
    }
}

/// `acc[i] += x`, removing the entry if it cancels.
pub fn add_entry(acc: &mut SparseVec, i: usize, x: Rational) {
    if x.is_zero() {
        return;
    }
    match acc.entry(i) {
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += x;
            if e.get().is_zero() {
                e.remove();
            }
        }
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(x);
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatrixError {
    #[error("entry ({row}, {col}) out of range for a {rows}x{cols} matrix")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

/// Sparse exact-rational matrix.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<SparseVec>,
}

/// Result of Gauss–Jordan elimination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rref {
    pub rank: usize,
    pub pivot_columns: Vec<usize>,
    pub reduced: RationalMatrix,
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![SparseVec::new(); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i].insert(i, Rational::one());
        }
        m
    }

    /// Builds a matrix from `(row, col, value)` triplets. Repeated positions are
    /// summed; zero results are dropped.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Result<Self, MatrixError>
    where
        I: IntoIterator<Item = (usize, usize, Rational)>,
    {
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(MatrixError::OutOfRange {
                    row: r,
                    col: c,
                    rows,
                    cols,
                });
            }
            add_entry(&mut m.data[r], c, v);
        }
        Ok(m)
    }

    /// Row-major dense constructor. Panics on ragged input.
    pub fn from_dense(rows: &[Vec<Rational>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(nrows, ncols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), ncols, "ragged dense matrix");
            m.data[i] = to_sparse(row);
        }
        m
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let dense: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| int(x)).collect())
            .collect();
        Self::from_dense(&dense)
    }

    /// Matrix whose `j`-th column is `columns[j]`.
    pub fn from_columns(rows: usize, columns: &[Vector]) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, x) in col.iter().enumerate() {
                if !x.is_zero() {
                    m.data[i].insert(j, x.clone());
                }
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, r: usize, c: usize) -> Rational {
        self.data[r].get(&c).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rational) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        if v.is_zero() {
            self.data[r].remove(&c);
        } else {
            self.data[r].insert(c, v);
        }
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: Rational) {
        assert!(r < self.rows && c < self.cols, "index out of range");
        add_entry(&mut self.data[r], c, v);
    }

    pub fn row(&self, r: usize) -> &SparseVec {
        &self.data[r]
    }

    pub fn column(&self, c: usize) -> Vector {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(BTreeMap::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(BTreeMap::is_empty)
    }

    /// Stored entries in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, &Rational)> + '_ {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |(&c, v)| (r, c, v)))
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for (r, c, v) in self.triplets() {
            t.data[c].insert(r, v.clone());
        }
        t
    }

    pub fn scale(&self, k: &Rational) -> Self {
        if k.is_zero() {
            return Self::zeros(self.rows, self.cols);
        }
        let mut out = self.clone();
        for row in &mut out.data {
            for v in row.values_mut() {
                *v *= k;
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.shape(), other.shape(), "shape mismatch in add");
        let mut out = self.clone();
        for (r, c, v) in other.triplets() {
            add_entry(&mut out.data[r], c, v.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in mul");
        let mut out = Self::zeros(self.rows, other.cols);
        for (r, row) in self.data.iter().enumerate() {
            let acc = &mut out.data[r];
            for (&k, a) in row {
                axpy_sparse(acc, a, &other.data[k]);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Vector {
        assert_eq!(self.cols, v.len(), "shape mismatch in mul_vec");
        self.data
            .iter()
            .map(|row| {
                row.iter()
                    .filter(|(&c, _)| !v[c].is_zero())
                    .fold(Rational::zero(), |acc, (&c, a)| acc + a * &v[c])
            })
            .collect()
    }

    pub fn mul_sparse(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (r, row) in self.data.iter().enumerate() {
            let mut acc = Rational::zero();
            for (c, a) in row {
                if let Some(x) = v.get(c) {
                    acc += a * x;
                }
            }
            if !acc.is_zero() {
                out.insert(r, acc);
            }
        }
        out
    }

    /// Submatrix on the given rows and columns (in the given order).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let col_pos: BTreeMap<usize, usize> =
            cols.iter().enumerate().map(|(j, &c)| (c, j)).collect();
        let mut out = Self::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (c, v) in &self.data[r] {
                if let Some(&j) = col_pos.get(c) {
                    out.data[i].insert(j, v.clone());
                }
            }
        }
        out
    }

    /// `[self | other]`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows, "row mismatch in hstack");
        let mut out = Self::zeros(self.rows, self.cols + other.cols);
        for r in 0..self.rows {
            out.data[r] = self.data[r].clone();
            for (&c, v) in &other.data[r] {
                out.data[r].insert(self.cols + c, v.clone());
            }
        }
        out
    }

    /// Gauss–Jordan elimination. The pivot for each column is the first
    /// remaining row with a nonzero entry there.
    pub fn rref(&self) -> Rref {
        let mut rows = self.data.clone();
        let mut pivots = Vec::new();
        let mut next = 0usize;
        for col in 0..self.cols {
            if next == self.rows {
                break;
            }
            let Some(found) = (next..self.rows).find(|&r| rows[r].contains_key(&col)) else {
                continue;
            };
            rows.swap(next, found);
            let inv = rows[next][&col].recip();
            if !inv.is_one() {
                for v in rows[next].values_mut() {
                    *v *= &inv;
                }
            }
            let pivot_row = rows[next].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r == next {
                    continue;
                }
                if let Some(f) = row.get(&col).cloned() {
                    axpy_sparse(row, &-f, &pivot_row);
                }
            }
            pivots.push(col);
            next += 1;
        }
        Rref {
            rank: pivots.len(),
            pivot_columns: pivots,
            reduced: Self {
                rows: self.rows,
                cols: self.cols,
                data: rows,
            },
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().rank
    }

    /// Basis of `{v : self·v = 0}`, one vector per non-pivot column.
    pub fn kernel_basis(&self) -> Vec<Vector> {
        let Rref {
            pivot_columns,
            reduced,
            ..
        } = self.rref();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivot_columns {
            is_pivot[p] = true;
        }
        (0..self.cols)
            .filter(|&f| !is_pivot[f])
            .map(|f| {
                let mut v = zero_vector(self.cols);
                v[f] = Rational::one();
                for (i, &p) in pivot_columns.iter().enumerate() {
                    v[p] = -reduced.get(i, f);
                }
                v
            })
            .collect()
    }

    /// Some `x` with `self·x = b`, free variables set to zero; `None` when `b`
    /// is outside the column space.
    pub fn solve(&self, b: &[Rational]) -> Option<Vector> {
        assert_eq!(b.len(), self.rows, "right-hand side length mismatch");
        let aug = self.hstack(&Self::from_columns(self.rows, &[b.to_vec()]));
        let Rref {
            pivot_columns,
            reduced,
            ..
        } = aug.rref();
        if pivot_columns.last() == Some(&self.cols) {
            return None;
        }
        let mut x = zero_vector(self.cols);
        for (i, &p) in pivot_columns.iter().enumerate() {
            x[p] = reduced.get(i, self.cols);
        }
        Some(x)
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        let Rref {
            rank, reduced, ..
        } = self.hstack(&Self::identity(n)).rref();
        if rank < n || (0..n).any(|i| !reduced.get(i, i).is_one()) {
            return None;
        }
        let cols: Vec<usize> = (n..2 * n).collect();
        let rows: Vec<usize> = (0..n).collect();
        Some(reduced.select(&rows, &cols))
    }

    pub fn max_abs_entry(&self) -> Rational {
        self.triplets()
            .map(|(_, _, v)| v.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| format_rational(&self.get(r, c)))
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Linear independence test by rank.
pub fn are_independent(vectors: &[Vector]) -> bool {
    match vectors.first() {
        None => true,
        Some(v) => RationalMatrix::from_columns(v.len(), vectors).rank() == vectors.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rref_examples() {
        let r = RationalMatrix::identity(3).rref();
        assert_eq!(r.rank, 3);
        assert_eq!(r.pivot_columns, vec![0, 1, 2]);

        let r = RationalMatrix::zeros(2, 5).rref();
        assert_eq!(r.rank, 0);
        assert!(r.pivot_columns.is_empty());

        let r = RationalMatrix::from_i64(&[&[1, 2], &[2, 4]]).rref();
        assert_eq!(r.rank, 1);
        assert_eq!(r.pivot_columns, vec![0]);
        assert_eq!(r.reduced, RationalMatrix::from_i64(&[&[1, 2], &[0, 0]]));
    }

    #[test]
    fn kernel_examples() {
        assert!(RationalMatrix::identity(4).kernel_basis().is_empty());
        let k = RationalMatrix::zeros(1, 3).kernel_basis();
        assert_eq!(k.len(), 3);
        assert!(are_independent(&k));
        let k = RationalMatrix::from_i64(&[&[1, 1]]).kernel_basis();
        assert_eq!(k, vec![vec![int(-1), int(1)]]);
    }

    #[test]
    fn solve_examples() {
        let b = vec![int(3), rat(1, 2), int(-7)];
        assert_eq!(RationalMatrix::identity(3).solve(&b), Some(b.clone()));
        assert_eq!(RationalMatrix::zeros(3, 3).solve(&b), None);
        assert_eq!(
            RationalMatrix::from_i64(&[&[2]]).solve(&[int(1)]),
            Some(vec![rat(1, 2)])
        );
        // free variable set to zero
        let m = RationalMatrix::from_i64(&[&[1, 1]]);
        assert_eq!(m.solve(&[int(5)]), Some(vec![int(5), int(0)]));
    }

    #[test]
    fn inverse_and_transpose() {
        let m = RationalMatrix::from_i64(&[&[2, 1], &[1, 1]]);
        let inv = m.inverse().unwrap();
        assert_eq!(m.mul(&inv), RationalMatrix::identity(2));
        assert!(RationalMatrix::from_i64(&[&[1, 2], &[2, 4]]).inverse().is_none());
        assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn rational_text_form() {
        assert_eq!(format_rational(&rat(6, -4)), "-3/2");
        assert_eq!(format_rational(&int(5)), "5");
        assert_eq!(parse_rational(" 4/6 ").unwrap(), rat(2, 3));
        assert_eq!(parse_rational("-7").unwrap(), int(-7));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
    }

    #[test]
    fn out_of_range_triplet() {
        let e = RationalMatrix::from_triplets(2, 2, [(2, 0, int(1))]).unwrap_err();
        assert!(matches!(e, MatrixError::OutOfRange { row: 2, .. }));
    }

    fn small_matrix() -> impl Strategy<Value = RationalMatrix> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec((-3i64..4, 1i64..4), r * c).prop_map(move |vals| {
                let dense: Vec<Vec<Rational>> = vals
                    .chunks(c)
                    .map(|ch| {
                        ch.iter()
                            .map(|&(n, d)| if n.abs() > 1 { int(0) } else { rat(n, d) })
                            .collect()
                    })
                    .collect();
                RationalMatrix::from_dense(&dense)
            })
        })
    }

    proptest! {
        #[test]
        fn rank_nullity(m in small_matrix()) {
            let k = m.kernel_basis();
            prop_assert_eq!(m.rank() + k.len(), m.ncols());
            for v in &k {
                prop_assert!(is_zero_vector(&m.mul_vec(v)));
            }
            prop_assert!(are_independent(&k));
        }

        #[test]
        fn rref_idempotent(m in small_matrix()) {
            let r = m.rref();
            let again = r.reduced.rref();
            prop_assert_eq!(&again.reduced, &r.reduced);
            prop_assert_eq!(again.pivot_columns, r.pivot_columns);
        }

        #[test]
        fn solve_is_consistent(m in small_matrix(), seed in proptest::collection::vec(-5i64..6, 6)) {
            let x: Vector = (0..m.ncols()).map(|i| int(seed[i])).collect();
            let b = m.mul_vec(&x);
            let y = m.solve(&b).expect("b is in the column space");
            prop_assert_eq!(m.mul_vec(&y), b);
        }

        #[test]
        fn field_identities(a in any::<i64>(), b in 1i64..i64::MAX, c in any::<i64>(), d in 1i64..i64::MAX) {
            let x = rat(a, b);
            let y = rat(c, d);
            let sum = &x + &y;
            let expected = Rational::new(
                BigInt::from(a) * BigInt::from(d) + BigInt::from(c) * BigInt::from(b),
                BigInt::from(b) * BigInt::from(d),
            );
            prop_assert_eq!(&sum, &expected);
            prop_assert!(sum.denom().is_positive());
            prop_assert!(num_integer::Integer::gcd(sum.numer(), sum.denom()).is_one());
            prop_assert_eq!(&(&sum - &y), &x);
            prop_assert_eq!(parse_rational(&format_rational(&sum)).unwrap(), sum);
            if !y.is_zero() {
                prop_assert_eq!(&(&x * &y) / &y, x);
            }
        }
    }
}
