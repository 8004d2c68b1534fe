//! Exact rational linear algebra: reduced row echelon form, conservation-law
//! bases, and integer row normalization.
//!
//! The conservation basis of a network is an integer matrix `C` whose rows
//! span the orthogonal complement of the stoichiometric subspace
//! `S = span{xi_r}`. Equivalently `ker C = S`, so two states lie in the same
//! compatibility class exactly when `C` maps them to the same value. All
//! intermediate arithmetic is arbitrary-precision rational; only the final
//! basis is scaled to coprime integers.

use num::{BigInt, BigRational, Integer, One, Zero};
use thiserror::Error;

use crate::network::ReactionNetwork;

pub type Rational = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("cannot normalize an all-zero row")]
    ZeroRow,
    #[error("matrix entry does not fit in i64")]
    Overflow,
}

/// Dense row-major matrix of arbitrary-precision rationals.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Rational>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        RationalMatrix {
            rows,
            cols,
            entries,
        }
    }

    pub fn zero(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            entries: vec![Rational::zero(); rows * cols],
        }
    }

    pub fn from_int_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            for &v in row {
                entries.push(Rational::from_integer(BigInt::from(v)));
            }
        }
        RationalMatrix {
            rows: r,
            cols: c,
            entries,
        }
    }

    /// Builds a matrix from columns, each an integer vector.
    pub fn from_int_cols(cols: &[Vec<i64>], rows: usize) -> Self {
        let mut m = RationalMatrix::zero(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), rows, "column length mismatch");
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, Rational::from_integer(BigInt::from(v)));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Transpose of a matrix built from integer rows, as rationals.
    pub fn transpose(&self) -> Self {
        let mut t = RationalMatrix::zero(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j).clone());
            }
        }
        t
    }
}

/// Integer basis of the conservation laws of a network. `c` has `d - s`
/// rows over `d` species where `s` is the dimension of the stoichiometric
/// subspace; each row is scaled to coprime integers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConservationBasis {
    pub c: Vec<Vec<i64>>,
    pub s: usize,
    pub d: usize,
}

impl ConservationBasis {
    pub fn law_count(&self) -> usize {
        self.c.len()
    }

    /// Evaluates every conserved quantity at an integer point.
    pub fn evaluate(&self, x: &[i64]) -> Vec<i64> {
        self.c
            .iter()
            .map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// True when two points lie in the same compatibility class.
    pub fn same_class(&self, x: &[i64], y: &[i64]) -> bool {
        self.evaluate(x) == self.evaluate(y)
    }
}

/// Reduced row echelon form with deterministic pivoting: pivots are chosen
/// left to right, always taking the topmost nonzero row. Returns the
/// reduced matrix and the pivot column indices in ascending order.
pub fn rref(m: &RationalMatrix) -> (RationalMatrix, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for col in 0..a.cols() {
        if r == a.rows() {
            break;
        }
        let Some(pivot_row) = (r..a.rows()).find(|&i| !a.get(i, col).is_zero()) else {
            continue;
        };
        a.swap_rows(r, pivot_row);
        let inv = a.get(r, col).clone();
        for j in col..a.cols() {
            let v = a.get(r, j).clone() / inv.clone();
            a.set(r, j, v);
        }
        for i in 0..a.rows() {
            if i == r || a.get(i, col).is_zero() {
                continue;
            }
            let factor = a.get(i, col).clone();
            for j in col..a.cols() {
                let v = a.get(i, j).clone() - factor.clone() * a.get(r, j).clone();
                a.set(i, j, v);
            }
        }
        pivots.push(col);
        r += 1;
    }
    (a, pivots)
}

/// Scales a rational vector to coprime integers, preserving sign.
/// `(2, -4, 6)` becomes `(1, -2, 3)`; the all-zero vector is rejected.
pub fn normalize_rational_row(row: &[Rational]) -> Result<Vec<i64>, LinalgError> {
    if row.iter().all(|v| v.is_zero()) {
        return Err(LinalgError::ZeroRow);
    }
    let mut lcm = BigInt::one();
    for v in row {
        lcm = lcm.lcm(v.denom());
    }
    let ints: Vec<BigInt> = row.iter().map(|v| v.numer() * (&lcm / v.denom())).collect();
    let mut gcd = BigInt::zero();
    for v in &ints {
        gcd = gcd.gcd(v);
    }
    ints.iter()
        .map(|v| {
            let reduced = v / &gcd;
            i64::try_from(&reduced).map_err(|_| LinalgError::Overflow)
        })
        .collect()
}

/// Divides an integer row by the GCD of its entries, preserving sign.
pub fn normalize_row(row: &[i64]) -> Result<Vec<i64>, LinalgError> {
    if row.iter().all(|&v| v == 0) {
        return Err(LinalgError::ZeroRow);
    }
    let mut g: i64 = 0;
    for &v in row {
        g = g.gcd(&v);
    }
    Ok(row.iter().map(|&v| v / g).collect())
}

/// Computes an integer conservation basis: `rref` of the transposed
/// stoichiometric matrix yields the pivot structure; each free column
/// produces one basis row with a positive leading entry in that column.
/// The rows satisfy `C xi_r = 0` exactly for every reaction.
pub fn conservation_basis(net: &ReactionNetwork) -> ConservationBasis {
    let d = net.species_count();
    let xi_rows: Vec<Vec<i64>> = net.reactions.iter().map(|r| r.xi.clone()).collect();
    let xi_t = RationalMatrix::from_int_rows(&xi_rows);
    let (reduced, pivots) = rref(&xi_t);
    let s = pivots.len();
    let free: Vec<usize> = (0..d).filter(|j| !pivots.contains(j)).collect();
    let mut c = Vec::with_capacity(d - s);
    for &f in &free {
        let mut row = vec![Rational::zero(); d];
        row[f] = Rational::one();
        for (i, &p) in pivots.iter().enumerate() {
            row[p] = -reduced.get(i, f).clone();
        }
        let ints = normalize_rational_row(&row).expect("basis row is nonzero");
        c.push(ints);
    }
    ConservationBasis { c, s, d }
}

/// True when the row spaces of two integer matrices coincide, decided by
/// exact rational row reduction of each row against the other basis.
pub fn same_row_space(a: &[Vec<i64>], b: &[Vec<i64>]) -> bool {
    fn spanned(rows: &[Vec<i64>], basis: &[Vec<i64>]) -> bool {
        if basis.is_empty() {
            return rows.iter().all(|r| r.iter().all(|&v| v == 0));
        }
        let m = RationalMatrix::from_int_rows(basis);
        let (red, pivots) = rref(&m);
        for row in rows {
            let mut v: Vec<Rational> = row
                .iter()
                .map(|&x| Rational::from_integer(BigInt::from(x)))
                .collect();
            for (i, &p) in pivots.iter().enumerate() {
                if !v[p].is_zero() {
                    let factor = v[p].clone();
                    for j in 0..v.len() {
                        let nv = v[j].clone() - factor.clone() * red.get(i, j).clone();
                        v[j] = nv;
                    }
                }
            }
            if !v.iter().all(|x| x.is_zero()) {
                return false;
            }
        }
        true
    }
    spanned(a, b) && spanned(b, a)
}


#[cfg(test)]
mod prop_tests {
    use super::*;
    use proptest::prelude::*;

    fn small_matrix() -> impl Strategy<Value = Vec<Vec<i64>>> {
        (1usize..=4, 1usize..=5).prop_flat_map(|(r, c)| {
            proptest::collection::vec(proptest::collection::vec(-5i64..=5, c), r)
        })
    }

    proptest! {
        #[test]
        fn rref_idempotent(rows in small_matrix()) {
            let m = RationalMatrix::from_int_rows(&rows);
            let (r1, p1) = rref(&m);
            let (r2, p2) = rref(&r1);
            prop_assert_eq!(r1, r2);
            prop_assert_eq!(p1, p2);
        }

        #[test]
        fn rref_preserves_row_space(rows in small_matrix()) {
            let m = RationalMatrix::from_int_rows(&rows);
            let (r, pivots) = rref(&m);
            let mut reduced_rows = Vec::new();
            for i in 0..pivots.len() {
                let ints = normalize_rational_row(r.row(i));
                if let Ok(v) = ints {
                    reduced_rows.push(v);
                }
            }
            let nonzero: Vec<Vec<i64>> = rows
                .iter()
                .filter(|row| row.iter().any(|&v| v != 0))
                .cloned()
                .collect();
            prop_assert!(same_row_space(&nonzero, &reduced_rows));
        }

        #[test]
        fn normalize_row_is_idempotent_and_coprime(row in proptest::collection::vec(-20i64..=20, 1..6)) {
            prop_assume!(row.iter().any(|&v| v != 0));
            let n1 = normalize_row(&row).unwrap();
            let n2 = normalize_row(&n1).unwrap();
            prop_assert_eq!(&n1, &n2);
            let mut g: i64 = 0;
            for &v in &n1 {
                g = num::integer::gcd(g, v);
            }
            prop_assert_eq!(g, 1);
            // sign preserved: first nonzero entries agree in sign
            let f1 = row.iter().find(|&&v| v != 0).unwrap();
            let f2 = n1.iter().find(|&&v| v != 0).unwrap();
            prop_assert_eq!(f1.signum(), f2.signum());
        }
    }
}
