//! Exact feasibility of `D alpha = b` under per-variable sign constraints.
//!
//! Feasibility is decided by a phase-I simplex over arbitrary-precision
//! rationals: sign-constrained variables become non-negative columns (after
//! negating non-positive ones), free variables split into differences of two
//! non-negative columns, and one artificial variable per row builds the
//! starting basis. Bland's anti-cycling rule makes every run terminate, so
//! the pivot count is bounded by the number of distinct bases. The system is
//! feasible exactly when the phase-I optimum is zero; a satisfying witness
//! is read off the final basis and mapped back through the column transform.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dashmap::DashMap;
use num::{One, Signed, Zero};

use crate::linalg::{Rational, RationalMatrix};

/// Sign constraint on one variable of a feasibility query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignTag {
    Nonneg,
    Nonpos,
    Free,
}

/// Outcome of a feasibility query. When feasible, `witness` satisfies the
/// system exactly; `pivots` counts simplex pivots for termination bounds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibilityResult {
    pub feasible: bool,
    pub witness: Option<Vec<Rational>>,
    pub pivots: u64,
}

/// Decides whether some `alpha` with the given sign pattern solves
/// `D alpha = b` exactly.
pub fn feasible(d: &RationalMatrix, b: &[Rational], signs: &[SignTag]) -> FeasibilityResult {
    assert_eq!(b.len(), d.rows(), "right-hand side length mismatch");
    assert_eq!(signs.len(), d.cols(), "sign pattern length mismatch");

    if b.iter().all(|v| v.is_zero()) {
        return FeasibilityResult {
            feasible: true,
            witness: Some(vec![Rational::zero(); d.cols()]),
            pivots: 0,
        };
    }

    // Column transform: each entry maps a tableau column to (variable,
    // multiplier), so a witness is recovered as alpha_j = sum mult * col.
    let mut col_map: Vec<(usize, i64)> = Vec::new();
    for (j, sign) in signs.iter().enumerate() {
        match sign {
            SignTag::Nonneg => col_map.push((j, 1)),
            SignTag::Nonpos => col_map.push((j, -1)),
            SignTag::Free => {
                col_map.push((j, 1));
                col_map.push((j, -1));
            }
        }
    }
    let n = col_map.len();
    let m = d.rows();
    let total = n + m;

    // Tableau rows with non-negative right-hand sides.
    let mut tableau: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut rhs: Vec<Rational> = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row: Vec<Rational> = Vec::with_capacity(total);
        for &(j, mult) in &col_map {
            let mut v = d.get(i, j).clone();
            if mult < 0 {
                v = -v;
            }
            if flip {
                v = -v;
            }
            row.push(v);
        }
        for k in 0..m {
            row.push(if k == i {
                Rational::one()
            } else {
                Rational::zero()
            });
        }
        tableau.push(row);
        rhs.push(if flip { -b[i].clone() } else { b[i].clone() });
    }

    // Phase-I objective: minimize the sum of artificials. With the
    // artificial basis, the reduced cost of column j is c_j - sum_i T[i][j].
    let mut basis: Vec<usize> = (n..total).collect();
    let mut red: Vec<Rational> = (0..total)
        .map(|j| {
            let cost = if j >= n {
                Rational::one()
            } else {
                Rational::zero()
            };
            let col_sum: Rational = tableau.iter().map(|row| row[j].clone()).sum();
            cost - col_sum
        })
        .collect();

    let mut pivots: u64 = 0;
    // Bland's entering rule: smallest index with negative reduced cost.
    while let Some(enter) = (0..total).find(|&j| red[j].is_negative()) {
        // Ratio test; ties broken by smallest basis variable index.
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if !tableau[i][enter].is_positive() {
                continue;
            }
            let ratio = rhs[i].clone() / tableau[i][enter].clone();
            match &leave {
                None => leave = Some((i, ratio)),
                Some((best, best_ratio)) => {
                    if ratio < *best_ratio || (ratio == *best_ratio && basis[i] < basis[*best]) {
                        leave = Some((i, ratio));
                    }
                }
            }
        }
        let (r, _) = leave.expect("phase-I objective is bounded below");
        pivots += 1;

        let pivot = tableau[r][enter].clone();
        for j in 0..total {
            let v = tableau[r][j].clone() / pivot.clone();
            tableau[r][j] = v;
        }
        let rv = rhs[r].clone() / pivot;
        rhs[r] = rv;
        for i in 0..m {
            if i == r || tableau[i][enter].is_zero() {
                continue;
            }
            let factor = tableau[i][enter].clone();
            for j in 0..total {
                let v = tableau[i][j].clone() - factor.clone() * tableau[r][j].clone();
                tableau[i][j] = v;
            }
            let v = rhs[i].clone() - factor.clone() * rhs[r].clone();
            rhs[i] = v;
        }
        let factor = red[enter].clone();
        for j in 0..total {
            let v = red[j].clone() - factor.clone() * tableau[r][j].clone();
            red[j] = v;
        }
        basis[r] = enter;
    }

    let objective: Rational = (0..m)
        .filter(|&i| basis[i] >= n)
        .map(|i| rhs[i].clone())
        .sum();
    if !objective.is_zero() {
        return FeasibilityResult {
            feasible: false,
            witness: None,
            pivots,
        };
    }

    let mut alpha = vec![Rational::zero(); d.cols()];
    for i in 0..m {
        if basis[i] < n {
            let (j, mult) = col_map[basis[i]];
            if mult > 0 {
                alpha[j] += rhs[i].clone();
            } else {
                alpha[j] -= rhs[i].clone();
            }
        }
    }
    debug_assert!(verify_witness(d, b, signs, &alpha));
    FeasibilityResult {
        feasible: true,
        witness: Some(alpha),
        pivots,
    }
}

/// Substitutes a witness into the system and checks it exactly.
pub fn verify_witness(
    d: &RationalMatrix,
    b: &[Rational],
    signs: &[SignTag],
    alpha: &[Rational],
) -> bool {
    if alpha.len() != d.cols() {
        return false;
    }
    for (j, sign) in signs.iter().enumerate() {
        match sign {
            SignTag::Nonneg if alpha[j].is_negative() => return false,
            SignTag::Nonpos if alpha[j].is_positive() => return false,
            _ => {}
        }
    }
    for i in 0..d.rows() {
        let dot: Rational = (0..d.cols())
            .map(|j| d.get(i, j).clone() * alpha[j].clone())
            .sum();
        if dot != b[i] {
            return false;
        }
    }
    true
}

/// Counts simplex solves and cache hits across an analysis run. Both are
/// deterministic for a fixed input regardless of thread count: the set of
/// distinct queries fixes the solves and every further lookup is a hit.
#[derive(Debug, Default)]
pub struct QueryCounters {
    pub solves: AtomicU64,
    pub cache_hits: AtomicU64,
}

impl QueryCounters {
    pub fn new() -> Arc<Self> {
        Arc::new(QueryCounters::default())
    }

    pub fn snapshot(&self) -> (u64, u64) {
        (
            self.solves.load(Ordering::Relaxed),
            self.cache_hits.load(Ordering::Relaxed),
        )
    }

    pub fn count_solve(&self) {
        self.solves.fetch_add(1, Ordering::Relaxed);
    }

    pub fn count_hit(&self) {
        self.cache_hits.fetch_add(1, Ordering::Relaxed);
    }

    /// Credits `n` hits at once, for caches whose entries stand in for a
    /// whole batch of solves.
    pub fn count_hits(&self, n: u64) {
        self.cache_hits.fetch_add(n, Ordering::Relaxed);
    }
}

/// Runs a plain feasibility query while recording it in shared counters.
pub fn feasible_counted(
    d: &RationalMatrix,
    b: &[Rational],
    signs: &[SignTag],
    counters: &QueryCounters,
) -> FeasibilityResult {
    counters.count_solve();
    feasible(d, b, signs)
}

type CacheKey = (Vec<Rational>, Vec<SignTag>);

/// Memoizes feasibility queries against one fixed matrix. Concurrent
/// queries for the same key solve once: the computing thread holds the map
/// entry while solving and latecomers observe the stored result, so the
/// recorded solve count equals the number of distinct keys.
pub struct FeasibilityCache {
    d: RationalMatrix,
    map: DashMap<CacheKey, (bool, Option<Vec<Rational>>)>,
    counters: Arc<QueryCounters>,
}

impl FeasibilityCache {
    pub fn new(d: RationalMatrix) -> Self {
        FeasibilityCache {
            d,
            map: DashMap::new(),
            counters: QueryCounters::new(),
        }
    }

    pub fn with_counters(d: RationalMatrix, counters: Arc<QueryCounters>) -> Self {
        FeasibilityCache {
            d,
            map: DashMap::new(),
            counters,
        }
    }

    pub fn matrix(&self) -> &RationalMatrix {
        &self.d
    }

    pub fn counters(&self) -> &QueryCounters {
        &self.counters
    }

    /// Memoized equivalent of [`feasible`] on the cached matrix.
    pub fn feasible(&self, b: &[Rational], signs: &[SignTag]) -> FeasibilityResult {
        let key: CacheKey = (b.to_vec(), signs.to_vec());
        if let Some(hit) = self.map.get(&key) {
            self.counters.count_hit();
            let (feasible, witness) = hit.clone();
            return FeasibilityResult {
                feasible,
                witness,
                pivots: 0,
            };
        }
        let mut solved_here = false;
        let entry = self.map.entry(key).or_insert_with(|| {
            solved_here = true;
            self.counters.count_solve();
            let r = feasible(&self.d, b, signs);
            (r.feasible, r.witness)
        });
        if !solved_here {
            self.counters.count_hit();
        }
        let (feasible, witness) = entry.clone();
        FeasibilityResult {
            feasible,
            witness,
            pivots: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::BigInt;

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn qs(vals: &[i64]) -> Vec<Rational> {
        vals.iter().map(|&v| q(v)).collect()
    }

    #[test]
    fn free_system_solves_unit_vector() {
        let d = RationalMatrix::from_int_rows(&[vec![0, 1], vec![1, 1]]);
        let r = feasible(&d, &qs(&[1, 0]), &[SignTag::Free, SignTag::Free]);
        assert!(r.feasible);
        let w = r.witness.unwrap();
        assert!(verify_witness(
            &d,
            &qs(&[1, 0]),
            &[SignTag::Free, SignTag::Free],
            &w
        ));
    }

    #[test]
    fn sign_constraints_make_system_infeasible() {
        let d = RationalMatrix::from_int_rows(&[vec![-1, 0, 1], vec![0, 1, 1]]);
        let r = feasible(
            &d,
            &qs(&[1, 0]),
            &[SignTag::Nonneg, SignTag::Nonneg, SignTag::Free],
        );
        assert!(!r.feasible);
        assert!(r.witness.is_none());
    }

    #[test]
    fn zero_rhs_feasible_with_zero_witness() {
        let d = RationalMatrix::from_int_rows(&[vec![3, -2], vec![1, 7]]);
        let r = feasible(&d, &qs(&[0, 0]), &[SignTag::Nonneg, SignTag::Nonpos]);
        assert!(r.feasible);
        assert_eq!(r.witness.unwrap(), qs(&[0, 0]));
        assert_eq!(r.pivots, 0);
    }

    #[test]
    fn nonpos_witness_mapped_back() {
        // alpha = -1 solves 2*alpha = -2 under a non-positive constraint.
        let d = RationalMatrix::from_int_rows(&[vec![2]]);
        let r = feasible(&d, &qs(&[-2]), &[SignTag::Nonpos]);
        assert!(r.feasible);
        assert_eq!(r.witness.unwrap(), qs(&[-1]));
        // and is infeasible when the variable must be non-negative
        let r2 = feasible(&d, &qs(&[-2]), &[SignTag::Nonneg]);
        assert!(!r2.feasible);
    }

    #[test]
    fn cache_agrees_with_fresh_solves_and_counts_hits() {
        let d = RationalMatrix::from_int_rows(&[vec![1, 2, 0], vec![0, 1, -1]]);
        let cache = FeasibilityCache::new(d.clone());
        let patterns = [
            vec![SignTag::Nonneg, SignTag::Nonneg, SignTag::Nonneg],
            vec![SignTag::Nonneg, SignTag::Free, SignTag::Nonpos],
            vec![SignTag::Free, SignTag::Free, SignTag::Free],
        ];
        let rhss = [qs(&[1, 0]), qs(&[0, 1]), qs(&[-1, 2])];
        for b in &rhss {
            for s in &patterns {
                let fresh = feasible(&d, b, s);
                let cached1 = cache.feasible(b, s);
                let cached2 = cache.feasible(b, s);
                assert_eq!(fresh.feasible, cached1.feasible);
                assert_eq!(cached1.feasible, cached2.feasible);
                if let Some(w) = &cached2.witness {
                    assert!(verify_witness(&d, b, s, w));
                }
            }
        }
        let (solves, hits) = cache.counters().snapshot();
        assert_eq!(solves, 9);
        assert_eq!(hits, 9);
    }

    #[test]
    fn concurrent_cache_solves_each_key_once() {
        use std::thread;
        let d = RationalMatrix::from_int_rows(&[vec![1, -1, 2], vec![2, 0, 1]]);
        let cache = std::sync::Arc::new(FeasibilityCache::new(d));
        let queries: Vec<(Vec<Rational>, Vec<SignTag>)> = (0..6)
            .map(|i| {
                (
                    qs(&[i % 3, (i + 1) % 2]),
                    vec![SignTag::Nonneg, SignTag::Free, SignTag::Nonpos],
                )
            })
            .collect();
        let distinct: std::collections::HashSet<_> =
            queries.iter().map(|(b, _)| b.clone()).collect();
        let mut handles = Vec::new();
        for _ in 0..8 {
            let cache = cache.clone();
            let queries = queries.clone();
            handles.push(thread::spawn(move || {
                for (b, s) in &queries {
                    cache.feasible(b, s);
                }
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        let (solves, hits) = cache.counters().snapshot();
        assert_eq!(solves as usize, distinct.len());
        assert_eq!(solves + hits, 8 * queries.len() as u64);
    }
}

#[cfg(test)]
mod prop_tests {
    use super::*;
    use num::BigInt;
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(BigInt::from(n))
    }

    fn binomial(n: u64, k: u64) -> u64 {
        if k > n {
            return 0;
        }
        let k = k.min(n - k);
        let mut acc: u128 = 1;
        for i in 0..k {
            acc = acc * (n - i) as u128 / (i + 1) as u128;
        }
        acc.min(u64::MAX as u128) as u64
    }

    fn sign_strategy() -> impl Strategy<Value = SignTag> {
        prop_oneof![
            Just(SignTag::Nonneg),
            Just(SignTag::Nonpos),
            Just(SignTag::Free),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn feasible_witnesses_verify_and_pivots_bounded(
            data in (1usize..=3, 1usize..=4).prop_flat_map(|(m, n)| {
                (
                    proptest::collection::vec(proptest::collection::vec(-3i64..=3, n), m),
                    proptest::collection::vec(-3i64..=3, m),
                    proptest::collection::vec(sign_strategy(), n),
                )
            })
        ) {
            let (rows, b, signs) = data;
            let d = RationalMatrix::from_int_rows(&rows);
            let b: Vec<Rational> = b.into_iter().map(q).collect();
            let r = feasible(&d, &b, &signs);
            if r.feasible {
                let w = r.witness.expect("feasible result must carry a witness");
                prop_assert!(verify_witness(&d, &b, &signs, &w));
            } else {
                prop_assert!(r.witness.is_none());
            }
            // one tableau column per non-free variable, two per free one,
            // plus one artificial per row
            let free_extra = signs.iter().filter(|s| matches!(s, SignTag::Free)).count();
            let total_cols = (d.cols() + free_extra + d.rows()) as u64;
            prop_assert!(r.pivots <= binomial(total_cols, d.rows() as u64));
        }

        #[test]
        fn scaling_b_preserves_feasibility(
            data in (1usize..=3, 1usize..=4).prop_flat_map(|(m, n)| {
                (
                    proptest::collection::vec(proptest::collection::vec(-3i64..=3, n), m),
                    proptest::collection::vec(-3i64..=3, m),
                    proptest::collection::vec(sign_strategy(), n),
                    1i64..=4,
                )
            })
        ) {
            let (rows, b, signs, scale) = data;
            let d = RationalMatrix::from_int_rows(&rows);
            let b1: Vec<Rational> = b.iter().map(|&v| q(v)).collect();
            let b2: Vec<Rational> = b.iter().map(|&v| q(v * scale)).collect();
            let r1 = feasible(&d, &b1, &signs);
            let r2 = feasible(&d, &b2, &signs);
            prop_assert_eq!(r1.feasible, r2.feasible);
        }
    }
}
