//! Fourier-Motzkin elimination as an independent feasibility oracle.
//!
//! The implementation below shares nothing with the simplex kernel it
//! cross-checks: the equality system and sign constraints are turned into a
//! list of rational inequalities `a . alpha <= c`, variables are eliminated
//! one at a time by combining each positive-coefficient row with each
//! negative-coefficient row, and the system is feasible exactly when every
//! remaining constant inequality holds. Rows are kept normalized and
//! deduplicated to tame the quadratic growth.

use std::collections::BTreeSet;

use num::{BigInt, Integer, Signed, Zero};
use srn_order_core::linalg::{Rational, RationalMatrix};
use srn_order_core::lp::SignTag;

/// One inequality `coeffs . alpha <= rhs`, scaled to coprime integers.
type Row = (Vec<BigInt>, BigInt);

fn normalize(coeffs: Vec<Rational>, rhs: Rational) -> Row {
    let mut lcm = BigInt::from(1);
    for v in coeffs.iter().chain(std::iter::once(&rhs)) {
        lcm = lcm.lcm(v.denom());
    }
    let mut ints: Vec<BigInt> = coeffs
        .iter()
        .map(|v| v.numer() * (&lcm / v.denom()))
        .collect();
    let mut r = rhs.numer() * (&lcm / rhs.denom());
    let mut gcd = r.abs();
    for v in &ints {
        gcd = gcd.gcd(v);
    }
    if !gcd.is_zero() {
        for v in &mut ints {
            *v /= &gcd;
        }
        r /= &gcd;
    }
    (ints, r)
}

fn to_rational_row(row: &Row) -> (Vec<Rational>, Rational) {
    (
        row.0
            .iter()
            .map(|v| Rational::from_integer(v.clone()))
            .collect(),
        Rational::from_integer(row.1.clone()),
    )
}

/// Decides feasibility of `D alpha = b` with per-variable sign constraints
/// by pure Fourier-Motzkin elimination.
pub fn fm_feasible(d: &RationalMatrix, b: &[Rational], signs: &[SignTag]) -> bool {
    let n = d.cols();
    assert_eq!(b.len(), d.rows());
    assert_eq!(signs.len(), n);

    let mut rows: BTreeSet<Row> = BTreeSet::new();
    for i in 0..d.rows() {
        let coeffs: Vec<Rational> = (0..n).map(|j| d.get(i, j).clone()).collect();
        let neg: Vec<Rational> = coeffs.iter().map(|v| -v.clone()).collect();
        rows.insert(normalize(coeffs, b[i].clone()));
        rows.insert(normalize(neg, -b[i].clone()));
    }
    for (j, sign) in signs.iter().enumerate() {
        let mut coeffs = vec![Rational::zero(); n];
        match sign {
            SignTag::Nonneg => {
                coeffs[j] = -Rational::from_integer(BigInt::from(1));
                rows.insert(normalize(coeffs, Rational::zero()));
            }
            SignTag::Nonpos => {
                coeffs[j] = Rational::from_integer(BigInt::from(1));
                rows.insert(normalize(coeffs, Rational::zero()));
            }
            SignTag::Free => {}
        }
    }

    for var in 0..n {
        let mut zero: BTreeSet<Row> = BTreeSet::new();
        let mut pos: Vec<Row> = Vec::new();
        let mut neg: Vec<Row> = Vec::new();
        for row in rows {
            match row.0[var].sign() {
                num::bigint::Sign::NoSign => {
                    zero.insert(row);
                }
                num::bigint::Sign::Plus => pos.push(row),
                num::bigint::Sign::Minus => neg.push(row),
            }
        }
        for p in &pos {
            let (pc, pr) = to_rational_row(p);
            let pw = pc[var].clone();
            for q in &neg {
                let (qc, qr) = to_rational_row(q);
                let qw = -qc[var].clone();
                // scale p by 1/pw and q by 1/qw, then add: coefficient on
                // var cancels exactly
                let coeffs: Vec<Rational> = (0..n)
                    .map(|k| pc[k].clone() / pw.clone() + qc[k].clone() / qw.clone())
                    .collect();
                let rhs = pr.clone() / pw.clone() + qr.clone() / qw.clone();
                debug_assert!(coeffs[var].is_zero());
                zero.insert(normalize(coeffs, rhs));
            }
        }
        rows = zero;
    }

    rows.iter().all(|(_, rhs)| !rhs.is_negative())
}

#[cfg(test)]
mod tests {
    use super::*;
    use srn_order_core::lp::SignTag::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    #[test]
    fn unconstrained_invertible_system_is_feasible() {
        let d = RationalMatrix::from_int_rows(&[vec![0, 1], vec![1, 1]]);
        assert!(fm_feasible(&d, &[q(1), q(0)], &[Free, Free]));
    }

    #[test]
    fn conflicting_sign_constraints_are_infeasible() {
        let d = RationalMatrix::from_int_rows(&[vec![-1, 0, 1], vec![0, 1, 1]]);
        assert!(!fm_feasible(&d, &[q(1), q(0)], &[Nonneg, Nonneg, Free]));
    }

    #[test]
    fn zero_rhs_is_always_feasible() {
        let d = RationalMatrix::from_int_rows(&[vec![2, 3], vec![-1, 4]]);
        assert!(fm_feasible(&d, &[q(0), q(0)], &[Nonneg, Nonpos]));
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        // alpha = 1 and alpha = 2 simultaneously
        let d = RationalMatrix::from_int_rows(&[vec![1], vec![1]]);
        assert!(!fm_feasible(&d, &[q(1), q(2)], &[Free]));
    }
}
