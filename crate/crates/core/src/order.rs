//! Matrix preorders on species counts: canonical forms, closures, and the
//! decision procedure that turns a candidate preorder into per-reaction
//! rate-constant constraints or rejects it.
//!
//! A preorder is given by an integer matrix `M`: state `x` precedes `y`
//! when `M (x - y) <= 0` componentwise. Whether a coupling can preserve the
//! preorder reduces to unit-vector reachability questions on the stacked
//! matrix `D = (M^T | C^T)`, where `C` is the conservation basis: entry
//! `(i, j)` of the matrix `A` records whether `e_j = D alpha` has a solution
//! whose `M`-coefficients are all non-negative except possibly the `i`-th
//! (row `m+1` exempts none); `B` is the same with non-positive coefficients.
//! For each reaction the positive and negative parts of `M xi_r` are matched
//! against three patterns per side. The side outcomes combine into the
//! constraint linking the two rate constants of the reaction: `Le` bounds
//! the X-side constant by the Y-side one, `Ge` the reverse, `Eq` forces
//! equality, and `Free` leaves the pair unconstrained. A reaction fitting
//! no pattern makes the preorder non-preservable and the first failure is
//! reported with its side.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{normalize_row, ConservationBasis, LinalgError, Rational, RationalMatrix};
use crate::lp::{feasible_counted, FeasibilityCache, QueryCounters, SignTag};
use crate::network::ReactionNetwork;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OrderError {
    #[error("preorder matrix row {0} is all zeros")]
    ZeroRow(usize),
    #[error("preorder matrix row {row} has {got} entries, expected {want}")]
    RowLength { row: usize, got: usize, want: usize },
    #[error("dimension mismatch: matrix is over {got} species, network has {want}")]
    SpeciesMismatch { got: usize, want: usize },
}

/// An integer matrix defining the preorder `x <= y iff M (x - y) <= 0`.
/// Rows must be nonzero; an empty matrix is the trivial (complete) preorder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreorderMatrix {
    rows: Vec<Vec<i64>>,
    d: usize,
}

impl PreorderMatrix {
    pub fn new(rows: Vec<Vec<i64>>, d: usize) -> Result<Self, OrderError> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(OrderError::RowLength {
                    row: i,
                    got: row.len(),
                    want: d,
                });
            }
            if row.iter().all(|&v| v == 0) {
                return Err(OrderError::ZeroRow(i));
            }
        }
        Ok(PreorderMatrix { rows, d })
    }

    pub fn rows(&self) -> &[Vec<i64>] {
        &self.rows
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn species_count(&self) -> usize {
        self.d
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// `M xi` as an integer vector of length `m`.
    pub fn apply(&self, xi: &[i64]) -> Vec<i64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(xi).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    /// Componentwise `M (x - y) <= 0`.
    pub fn relates(&self, x: &[i64], y: &[i64]) -> bool {
        self.rows.iter().all(|row| {
            row.iter()
                .zip(x.iter().zip(y))
                .map(|(&a, (&xv, &yv))| a * (xv - yv))
                .sum::<i64>()
                <= 0
        })
    }
}

/// A signed unit vector `+e_j` or `-e_j`, ordered by species then sign with
/// the positive unit first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedUnit {
    pub species: usize,
    pub negated: bool,
}

impl SignedUnit {
    pub fn plus(species: usize) -> Self {
        SignedUnit {
            species,
            negated: false,
        }
    }

    pub fn minus(species: usize) -> Self {
        SignedUnit {
            species,
            negated: true,
        }
    }
}

impl fmt::Display for SignedUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}e{}",
            if self.negated { "-" } else { "+" },
            self.species
        )
    }
}

/// How one species compares across the coupling under a preorder:
/// `Leq` keeps the X-copy at or below the Y-copy, `Geq` the reverse,
/// `Eq` pins them equal, `Uncompared` says nothing.
///
/// The discriminants order `Eq < Geq < Leq < Uncompared`; mirror-image
/// structures are disambiguated by this encoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpeciesTag {
    Eq,
    Geq,
    Leq,
    Uncompared,
}

/// Constraint linking the X and Y rate constants of one reaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateConstraint {
    Le,
    Ge,
    Eq,
    Free,
}

/// Which side of the per-reaction pattern match failed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::A => write!(f, "a"),
            Side::B => write!(f, "b"),
        }
    }
}

/// The two unit-reachability matrices, both `(m + 1) x d`. Row `i < m`
/// exempts the `i`-th `M`-coefficient from its sign constraint; row `m`
/// exempts none.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ABMatrices {
    pub a: Vec<Vec<bool>>,
    pub b: Vec<Vec<bool>>,
}

/// A validated preorder with everything the reporting layer needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreorderingStructure {
    pub canonical_m: Vec<Vec<i64>>,
    pub closure: BTreeSet<SignedUnit>,
    pub species_tags: Vec<SpeciesTag>,
    pub reaction_constraints: Vec<RateConstraint>,
}

/// Outcome of checking one preorder against a network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckOutcome {
    Valid(Vec<RateConstraint>),
    Invalid { reaction: usize, side: Side },
}

/// Stacks `M` rows and `C` rows as the columns of `D`, the matrix behind
/// every reachability query.
pub fn stacked_matrix(m: &PreorderMatrix, c: &ConservationBasis) -> RationalMatrix {
    let mut cols: Vec<Vec<i64>> = m.rows.clone();
    cols.extend(c.c.iter().cloned());
    RationalMatrix::from_int_cols(&cols, m.d)
}

fn unit_rhs(d: usize, j: usize, negated: bool) -> Vec<Rational> {
    let mut b = vec![Rational::zero(); d];
    b[j] = if negated {
        -Rational::one()
    } else {
        Rational::one()
    };
    b
}

/// Sign pattern for a reachability query: `M`-coefficients constrained to
/// `tag` except an optional exempt index, `C`-coefficients free.
fn sign_pattern(m: usize, c_rows: usize, tag: SignTag, exempt: Option<usize>) -> Vec<SignTag> {
    let mut signs = vec![tag; m];
    if let Some(i) = exempt {
        signs[i] = SignTag::Free;
    }
    signs.extend(std::iter::repeat_n(SignTag::Free, c_rows));
    signs
}

/// True when `row` is a non-negative combination of `others` plus an
/// arbitrary combination of conservation rows.
pub fn row_implied(row: &[i64], others: &[Vec<i64>], c: &ConservationBasis) -> bool {
    row_implied_counted(row, others, c, &QueryCounters::default())
}

pub(crate) fn row_implied_counted(
    row: &[i64],
    others: &[Vec<i64>],
    c: &ConservationBasis,
    counters: &QueryCounters,
) -> bool {
    let d = row.len();
    let mut cols: Vec<Vec<i64>> = others.to_vec();
    cols.extend(c.c.iter().cloned());
    let matrix = RationalMatrix::from_int_cols(&cols, d);
    let b: Vec<Rational> = row
        .iter()
        .map(|&v| Rational::from_integer(v.into()))
        .collect();
    let signs = sign_pattern(others.len(), c.law_count(), SignTag::Nonneg, None);
    feasible_counted(&matrix, &b, &signs, counters).feasible
}

/// Scales every row to coprime integers, then repeatedly removes the first
/// row implied by the remaining rows together with the conservation laws,
/// rescanning from the top after each removal. The result generates the
/// same preorder on every compatibility class; it is empty exactly when the
/// preorder is trivial on classes.
pub fn canonicalize(
    m: &PreorderMatrix,
    c: &ConservationBasis,
) -> Result<PreorderMatrix, OrderError> {
    canonicalize_counted(m, c, &QueryCounters::default())
}

pub(crate) fn canonicalize_counted(
    m: &PreorderMatrix,
    c: &ConservationBasis,
    counters: &QueryCounters,
) -> Result<PreorderMatrix, OrderError> {
    let mut rows: Vec<Vec<i64>> = Vec::with_capacity(m.m());
    for (i, row) in m.rows.iter().enumerate() {
        let normalized = normalize_row(row).map_err(|e| match e {
            LinalgError::ZeroRow => OrderError::ZeroRow(i),
            LinalgError::Overflow => OrderError::ZeroRow(i),
        })?;
        rows.push(normalized);
    }
    'scan: loop {
        for i in 0..rows.len() {
            let mut others = rows.clone();
            let row = others.remove(i);
            if row_implied_counted(&row, &others, c, counters) {
                rows = others;
                continue 'scan;
            }
        }
        break;
    }
    PreorderMatrix::new(rows, m.d)
}

/// All signed units reachable as a non-negative combination of `M` rows
/// plus any combination of conservation rows. Species tags read off the
/// closure: both units present pins the species equal across the coupling,
/// one unit orders it, neither leaves it uncompared.
pub fn closure_simple(m: &PreorderMatrix, c: &ConservationBasis) -> BTreeSet<SignedUnit> {
    closure_simple_counted(m, c, &QueryCounters::default())
}

pub(crate) fn closure_simple_counted(
    m: &PreorderMatrix,
    c: &ConservationBasis,
    counters: &QueryCounters,
) -> BTreeSet<SignedUnit> {
    let d = m.d;
    let mut out = BTreeSet::new();
    for j in 0..d {
        let mut plus = vec![0i64; d];
        plus[j] = 1;
        if row_implied_counted(&plus, &m.rows, c, counters) {
            out.insert(SignedUnit::plus(j));
        }
        let mut minus = vec![0i64; d];
        minus[j] = -1;
        if row_implied_counted(&minus, &m.rows, c, counters) {
            out.insert(SignedUnit::minus(j));
        }
    }
    out
}

/// Species tags induced by a closure over `d` species.
pub fn species_tags(closure: &BTreeSet<SignedUnit>, d: usize) -> Vec<SpeciesTag> {
    (0..d)
        .map(|j| {
            let plus = closure.contains(&SignedUnit::plus(j));
            let minus = closure.contains(&SignedUnit::minus(j));
            match (plus, minus) {
                (true, true) => SpeciesTag::Eq,
                (true, false) => SpeciesTag::Leq,
                (false, true) => SpeciesTag::Geq,
                (false, false) => SpeciesTag::Uncompared,
            }
        })
        .collect()
}

/// Computes both reachability matrices eagerly. Columns outside the span
/// of the generators are all-false without any feasibility query; a column
/// whose unconstrained row `m` is reachable is all-true by monotonicity.
pub fn compute_ab(m: &PreorderMatrix, c: &ConservationBasis) -> ABMatrices {
    let cache = FeasibilityCache::new(stacked_matrix(m, c));
    compute_ab_cached(m, c, &cache)
}

pub(crate) fn compute_ab_cached(
    m: &PreorderMatrix,
    c: &ConservationBasis,
    cache: &FeasibilityCache,
) -> ABMatrices {
    let d = m.d;
    let mm = m.m();
    let c_rows = c.law_count();
    let mut a = vec![vec![false; d]; mm + 1];
    let mut b = vec![vec![false; d]; mm + 1];

    // Span test once: reduce the transpose of D and keep the functionals
    // that vanish on its column space. e_j lies in the span exactly when
    // every such functional has a zero in coordinate j.
    let dt = stacked_matrix(m, c).transpose();
    let (red, pivots) = crate::linalg::rref(&dt);
    let span_ok: Vec<bool> = {
        let mut ok = vec![true; d];
        // rows of `red` beyond the pivot count are zero; a unit e_j is in
        // the row space of dt iff reducing it by the pivot rows kills it
        for j in 0..d {
            let mut v = unit_rhs(d, j, false);
            for (i, &p) in pivots.iter().enumerate() {
                if !v[p].is_zero() {
                    let factor = v[p].clone();
                    for k in 0..d {
                        let nv = v[k].clone() - factor.clone() * red.get(i, k).clone();
                        v[k] = nv;
                    }
                }
            }
            ok[j] = v.iter().all(|x| x.is_zero());
        }
        ok
    };

    for j in 0..d {
        if !span_ok[j] {
            continue;
        }
        let rhs = unit_rhs(d, j, false);
        for (matrix, tag) in [(&mut a, SignTag::Nonneg), (&mut b, SignTag::Nonpos)] {
            let full = cache
                .feasible(&rhs, &sign_pattern(mm, c_rows, tag, None))
                .feasible;
            if full {
                for row in matrix.iter_mut() {
                    row[j] = true;
                }
            } else {
                matrix[mm][j] = false;
                for i in 0..mm {
                    matrix[i][j] = cache
                        .feasible(&rhs, &sign_pattern(mm, c_rows, tag, Some(i)))
                        .feasible;
                }
            }
        }
    }
    ABMatrices { a, b }
}

/// Lazily answered reachability queries shared by a structure check.
pub(crate) struct ReachOracle<'a> {
    cache: Arc<FeasibilityCache>,
    m: usize,
    c_rows: usize,
    d: usize,
    /// Closure bits when already known from an earlier computation:
    /// bit `2j` is `+e_j`, bit `2j + 1` is `-e_j`.
    known_closure: Option<u64>,
    _marker: std::marker::PhantomData<&'a ()>,
}

impl<'a> ReachOracle<'a> {
    pub(crate) fn new(
        m: &PreorderMatrix,
        c: &ConservationBasis,
        counters: Arc<QueryCounters>,
        known_closure: Option<u64>,
    ) -> Self {
        ReachOracle {
            cache: Arc::new(FeasibilityCache::with_counters(
                stacked_matrix(m, c),
                counters,
            )),
            m: m.m(),
            c_rows: c.law_count(),
            d: m.species_count(),
            known_closure,
            _marker: std::marker::PhantomData,
        }
    }

    /// `A[m][j]`: is `+e_j` in the closure?
    fn plus_closure(&self, j: usize) -> bool {
        if let Some(mask) = self.known_closure {
            return mask & (1u64 << (2 * j)) != 0;
        }
        self.cache
            .feasible(
                &unit_rhs(self.d, j, false),
                &sign_pattern(self.m, self.c_rows, SignTag::Nonneg, None),
            )
            .feasible
    }

    /// `B[m][j]`: is `-e_j` in the closure?
    fn minus_closure(&self, j: usize) -> bool {
        if let Some(mask) = self.known_closure {
            return mask & (1u64 << (2 * j + 1)) != 0;
        }
        self.cache
            .feasible(
                &unit_rhs(self.d, j, false),
                &sign_pattern(self.m, self.c_rows, SignTag::Nonpos, None),
            )
            .feasible
    }

    fn a_entry(&self, i: usize, j: usize) -> bool {
        if self.plus_closure(j) {
            return true;
        }
        self.cache
            .feasible(
                &unit_rhs(self.d, j, false),
                &sign_pattern(self.m, self.c_rows, SignTag::Nonneg, Some(i)),
            )
            .feasible
    }

    fn b_entry(&self, i: usize, j: usize) -> bool {
        if self.minus_closure(j) {
            return true;
        }
        self.cache
            .feasible(
                &unit_rhs(self.d, j, false),
                &sign_pattern(self.m, self.c_rows, SignTag::Nonpos, Some(i)),
            )
            .feasible
    }
}

enum SideOutcome {
    Unconstrained,
    Bounded,
    Fail,
}

/// Decides the constraint system for one preorder matrix against a
/// network. `Valid` returns one constraint per reaction, in reaction
/// order; `Invalid` reports the first reaction and side that fit no
/// pattern. The matrix is used as given; canonicalize first if needed.
pub fn check_structure(
    net: &ReactionNetwork,
    m: &PreorderMatrix,
    c: &ConservationBasis,
) -> CheckOutcome {
    check_structure_counted(net, m, c, QueryCounters::new(), None)
}

pub(crate) fn check_structure_counted(
    net: &ReactionNetwork,
    m: &PreorderMatrix,
    c: &ConservationBasis,
    counters: Arc<QueryCounters>,
    known_closure: Option<u64>,
) -> CheckOutcome {
    debug_assert_eq!(m.species_count(), net.species_count());
    let oracle = ReachOracle::new(m, c, counters, known_closure);
    let mut constraints = Vec::with_capacity(net.reactions.len());

    for (r, reaction) in net.reactions.iter().enumerate() {
        let mxi = m.apply(&reaction.xi);
        let support: Vec<usize> = reaction.source.support().collect();

        // Pattern a1: no positive component, the X-side is unconstrained.
        let a_side = if mxi.iter().all(|&v| v <= 0) {
            SideOutcome::Unconstrained
        } else if support.iter().all(|&j| oracle.plus_closure(j)) {
            // a2: every source species is reachable without exemptions.
            SideOutcome::Bounded
        } else {
            // a3: the positive part must be exactly one coordinate at
            // exactly one, and that row must cover the source support.
            let positives: Vec<usize> = (0..mxi.len()).filter(|&i| mxi[i] > 0).collect();
            if positives.len() == 1 && mxi[positives[0]] == 1 {
                let i = positives[0];
                if support.iter().all(|&j| oracle.a_entry(i, j)) {
                    SideOutcome::Bounded
                } else {
                    SideOutcome::Fail
                }
            } else {
                SideOutcome::Fail
            }
        };
        if matches!(a_side, SideOutcome::Fail) {
            return CheckOutcome::Invalid {
                reaction: r,
                side: Side::A,
            };
        }

        let b_side = if mxi.iter().all(|&v| v >= 0) {
            SideOutcome::Unconstrained
        } else if support.iter().all(|&j| oracle.minus_closure(j)) {
            SideOutcome::Bounded
        } else {
            let negatives: Vec<usize> = (0..mxi.len()).filter(|&i| mxi[i] < 0).collect();
            if negatives.len() == 1 && mxi[negatives[0]] == -1 {
                let i = negatives[0];
                if support.iter().all(|&j| oracle.b_entry(i, j)) {
                    SideOutcome::Bounded
                } else {
                    SideOutcome::Fail
                }
            } else {
                SideOutcome::Fail
            }
        };
        if matches!(b_side, SideOutcome::Fail) {
            return CheckOutcome::Invalid {
                reaction: r,
                side: Side::B,
            };
        }

        let constraint = match (a_side, b_side) {
            (SideOutcome::Unconstrained, SideOutcome::Unconstrained) => RateConstraint::Free,
            (SideOutcome::Bounded, SideOutcome::Unconstrained) => RateConstraint::Le,
            (SideOutcome::Unconstrained, SideOutcome::Bounded) => RateConstraint::Ge,
            (SideOutcome::Bounded, SideOutcome::Bounded) => RateConstraint::Eq,
            _ => unreachable!("failures returned early"),
        };
        constraints.push(constraint);
    }
    CheckOutcome::Valid(constraints)
}

/// Builds the full structure record for a matrix already known valid.
pub fn build_structure(
    canonical: &PreorderMatrix,
    closure: BTreeSet<SignedUnit>,
    constraints: Vec<RateConstraint>,
) -> PreorderingStructure {
    let tags = species_tags(&closure, canonical.species_count());
    PreorderingStructure {
        canonical_m: canonical.rows().to_vec(),
        closure,
        species_tags: tags,
        reaction_constraints: constraints,
    }
}
