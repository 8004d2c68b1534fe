//! Exhaustive search for the preorders a network can preserve.
//!
//! Candidates are the nonempty subsets of the signed unit vectors
//! `{+e_1, -e_1, ..., +e_d, -e_d}` in which each species contributes the
//! positive unit, the negative unit, both, or neither: `4^d - 1` matrices,
//! indexed by a base-4 counter whose least significant digit belongs to
//! species 0. Many candidates generate the same preorder once conservation
//! laws are taken into account, so each candidate is first reduced to its
//! closure (the full set of signed units it implies) and only one
//! representative per closure is canonicalized and checked. Closures are
//! computed by folding units into an already-closed set, which makes the
//! per-step results reusable across candidates through a concurrent memo
//! table; the memo and the per-structure feasibility caches keep the solve
//! and hit counters identical for any worker count.
//!
//! Survivors are filtered: the two information-free relations (everything
//! comparable, nothing comparable) are dropped, one structure of each
//! mirror pair is kept (the one whose species tags are lexicographically
//! smaller under `Eq < Geq < Leq < Uncompared`), dominated structures are
//! removed unless requested, and relations that compare species only by
//! equality are reported separately as equivalence structures.

use std::collections::BTreeSet;

use dashmap::DashMap;

use crate::linalg::{conservation_basis, ConservationBasis};
use crate::lp::QueryCounters;
use crate::network::ReactionNetwork;
use crate::order::{
    build_structure, canonicalize_counted, check_structure_counted, row_implied_counted,
    CheckOutcome, PreorderMatrix, PreorderingStructure, RateConstraint, SignedUnit, SpeciesTag,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub include_dominated: bool,
    pub include_equivalence_structures: bool,
    pub worker_count: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            include_dominated: false,
            include_equivalence_structures: true,
            worker_count: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchCounts {
    pub candidates: u64,
    pub lp_queries: u64,
    pub cache_hits: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchReport {
    pub structures: Vec<PreorderingStructure>,
    pub equivalence_structures: Vec<PreorderingStructure>,
    pub counts: SearchCounts,
}

/// Number of candidate matrices for `d` species.
pub fn candidate_count(d: usize) -> u64 {
    assert!(
        (1..=31).contains(&d),
        "species count {d} out of supported range"
    );
    (1u64 << (2 * d)) - 1
}

/// Rows of candidate `index` (1-based up to `4^d - 1`), species ascending,
/// the positive unit before the negative one.
pub fn candidate_rows(d: usize, index: u64) -> Vec<Vec<i64>> {
    assert!(
        index >= 1 && index <= candidate_count(d),
        "candidate index out of range"
    );
    let mut rows = Vec::new();
    for j in 0..d {
        let digit = (index >> (2 * j)) & 3;
        if digit == 1 || digit == 3 {
            let mut row = vec![0i64; d];
            row[j] = 1;
            rows.push(row);
        }
        if digit == 2 || digit == 3 {
            let mut row = vec![0i64; d];
            row[j] = -1;
            rows.push(row);
        }
    }
    rows
}

/// All candidates in index order.
pub fn enumerate_candidates(d: usize) -> impl Iterator<Item = Vec<Vec<i64>>> {
    (1..=candidate_count(d)).map(move |index| candidate_rows(d, index))
}

/// Closure bitmask encoding: bit `2j` is `+e_j`, bit `2j + 1` is `-e_j`.
fn unit_bit(species: usize, negated: bool) -> u32 {
    (2 * species + usize::from(negated)) as u32
}

fn candidate_unit_bits(d: usize, index: u64) -> Vec<u32> {
    let mut bits = Vec::new();
    for j in 0..d {
        let digit = (index >> (2 * j)) & 3;
        if digit == 1 || digit == 3 {
            bits.push(unit_bit(j, false));
        }
        if digit == 2 || digit == 3 {
            bits.push(unit_bit(j, true));
        }
    }
    bits
}

fn mask_rows(d: usize, mask: u64) -> Vec<Vec<i64>> {
    let mut rows = Vec::new();
    for j in 0..d {
        for negated in [false, true] {
            if mask & (1u64 << unit_bit(j, negated)) != 0 {
                let mut row = vec![0i64; d];
                row[j] = if negated { -1 } else { 1 };
                rows.push(row);
            }
        }
    }
    rows
}

fn mask_units(d: usize, mask: u64) -> BTreeSet<SignedUnit> {
    let mut out = BTreeSet::new();
    for j in 0..d {
        if mask & (1u64 << unit_bit(j, false)) != 0 {
            out.insert(SignedUnit::plus(j));
        }
        if mask & (1u64 << unit_bit(j, true)) != 0 {
            out.insert(SignedUnit::minus(j));
        }
    }
    out
}

/// Closure of the units in `gen_mask`: each missing unit is tested for
/// membership in the cone of the generators plus the span of the
/// conservation rows. Costs one feasibility solve per missing unit.
fn closure_of_mask(
    d: usize,
    gen_mask: u64,
    c: &ConservationBasis,
    counters: &QueryCounters,
) -> u64 {
    let gens = mask_rows(d, gen_mask);
    let mut out = gen_mask;
    for j in 0..d {
        for negated in [false, true] {
            let bit = 1u64 << unit_bit(j, negated);
            if gen_mask & bit != 0 {
                continue;
            }
            let mut unit = vec![0i64; d];
            unit[j] = if negated { -1 } else { 1 };
            if row_implied_counted(&unit, &gens, c, counters) {
                out |= bit;
            }
        }
    }
    out
}

/// Folds the candidate's units into a running closure. Joining a unit into
/// a closed set depends only on the union, so results are shared across
/// candidates through `memo`; a memo hit is credited with the solves the
/// fresh computation would have spent.
fn fold_closure(
    d: usize,
    index: u64,
    empty_closure: u64,
    memo: &DashMap<u64, u64>,
    c: &ConservationBasis,
    counters: &QueryCounters,
) -> u64 {
    let mut closure = empty_closure;
    for bit in candidate_unit_bits(d, index) {
        let unit = 1u64 << bit;
        if closure & unit != 0 {
            continue;
        }
        let key = closure | unit;
        let avoided = 2 * d as u64 - u64::from(key.count_ones());
        if let Some(hit) = memo.get(&key) {
            counters.count_hits(avoided);
            closure = *hit;
            continue;
        }
        let mut solved_here = false;
        let value = *memo.entry(key).or_insert_with(|| {
            solved_here = true;
            closure_of_mask(d, key, c, counters)
        });
        if !solved_here {
            counters.count_hits(avoided);
        }
        closure = value;
    }
    closure
}

/// The reversed structure: all species-count and rate-constant
/// inequalities swapped. Equalities and unconstrained entries are fixed
/// points, so a structure that only compares by equality is its own
/// mirror.
pub fn mirror(s: &PreorderingStructure) -> PreorderingStructure {
    PreorderingStructure {
        canonical_m: s
            .canonical_m
            .iter()
            .map(|row| row.iter().map(|&v| -v).collect())
            .collect(),
        closure: s
            .closure
            .iter()
            .map(|u| SignedUnit {
                species: u.species,
                negated: !u.negated,
            })
            .collect(),
        species_tags: s.species_tags.iter().map(|&t| mirror_tag(t)).collect(),
        reaction_constraints: s
            .reaction_constraints
            .iter()
            .map(|&c| mirror_constraint(c))
            .collect(),
    }
}

fn mirror_tag(t: SpeciesTag) -> SpeciesTag {
    match t {
        SpeciesTag::Leq => SpeciesTag::Geq,
        SpeciesTag::Geq => SpeciesTag::Leq,
        other => other,
    }
}

fn mirror_constraint(c: RateConstraint) -> RateConstraint {
    match c {
        RateConstraint::Le => RateConstraint::Ge,
        RateConstraint::Ge => RateConstraint::Le,
        other => other,
    }
}

fn constraint_implied(wanted: RateConstraint, given: RateConstraint) -> bool {
    match wanted {
        RateConstraint::Free => true,
        RateConstraint::Le => matches!(given, RateConstraint::Le | RateConstraint::Eq),
        RateConstraint::Ge => matches!(given, RateConstraint::Ge | RateConstraint::Eq),
        RateConstraint::Eq => given == RateConstraint::Eq,
    }
}

/// True when `s1` constrains the kinetics no more than `s2` does while
/// comparing strictly more: every `s1` constraint already follows from the
/// matching `s2` constraint and `s1`'s closure strictly contains `s2`'s.
/// A structure dominated this way adds nothing to a report.
pub fn dominates(s1: &PreorderingStructure, s2: &PreorderingStructure) -> bool {
    if s1.reaction_constraints.len() != s2.reaction_constraints.len() {
        return false;
    }
    if !s1.closure.is_superset(&s2.closure) || s1.closure == s2.closure {
        return false;
    }
    s1.reaction_constraints
        .iter()
        .zip(&s2.reaction_constraints)
        .all(|(&c1, &c2)| constraint_implied(c1, c2))
}

fn is_pure_equivalence(s: &PreorderingStructure) -> bool {
    s.species_tags
        .iter()
        .all(|t| matches!(t, SpeciesTag::Eq | SpeciesTag::Uncompared))
}

/// Enumerates every candidate preorder, keeps the ones the network can
/// preserve, and reports them with their rate-constant constraint systems.
/// Deterministic for any `worker_count`, including the counters.
pub fn search(net: &ReactionNetwork, options: &SearchOptions) -> SearchReport {
    let d = net.species_count();
    let total = candidate_count(d);
    assert!(options.worker_count >= 1, "worker_count must be at least 1");

    let c = conservation_basis(net);
    let counters = QueryCounters::new();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.worker_count)
        .build()
        .expect("thread pool construction");

    let (survivors, equivalences) = pool.install(|| {
        use rayon::prelude::*;

        let empty_closure = closure_of_mask(d, 0, &c, &counters);
        let full_mask = (1u64 << (2 * d)) - 1;

        // Phase 1: closure and dedup. One representative (the smallest
        // candidate index) per distinct closure.
        let memo: DashMap<u64, u64> = DashMap::new();
        let dedup: DashMap<u64, u64> = DashMap::new();
        (1..=total).into_par_iter().for_each(|index| {
            let closure = fold_closure(d, index, empty_closure, &memo, &c, &counters);
            dedup
                .entry(closure)
                .and_modify(|rep| *rep = (*rep).min(index))
                .or_insert(index);
        });

        let mut reps: Vec<(u64, u64)> = dedup
            .into_iter()
            .filter(|&(closure, _)| closure != empty_closure && closure != full_mask)
            .map(|(closure, index)| (index, closure))
            .collect();
        reps.sort_unstable();

        // Phase 2: canonicalize and check one representative per closure.
        let checked: Vec<Option<PreorderingStructure>> = reps
            .par_iter()
            .map(|&(index, closure)| {
                let m = PreorderMatrix::new(candidate_rows(d, index), d)
                    .expect("candidate rows are unit vectors");
                let canon =
                    canonicalize_counted(&m, &c, &counters).expect("unit rows cannot overflow");
                match check_structure_counted(net, &canon, &c, counters.clone(), Some(closure)) {
                    CheckOutcome::Valid(cons) => {
                        Some(build_structure(&canon, mask_units(d, closure), cons))
                    }
                    CheckOutcome::Invalid { .. } => None,
                }
            })
            .collect();

        let mut valid: Vec<PreorderingStructure> = checked.into_iter().flatten().collect();

        // One of each mirror pair; self-mirrors pass the filter.
        valid.retain(|s| {
            let mirrored: Vec<SpeciesTag> = s.species_tags.iter().map(|&t| mirror_tag(t)).collect();
            s.species_tags <= mirrored
        });

        if !options.include_dominated {
            let keep: Vec<bool> = valid
                .iter()
                .map(|s2| !valid.iter().any(|s1| dominates(s1, s2)))
                .collect();
            let mut it = keep.iter();
            valid.retain(|_| *it.next().unwrap());
        }

        let (equivalences, survivors): (Vec<_>, Vec<_>) =
            valid.into_iter().partition(is_pure_equivalence);
        (survivors, equivalences)
    });

    debug_assert!(equivalences.iter().all(|s| {
        s.reaction_constraints
            .iter()
            .all(|c| matches!(c, RateConstraint::Eq | RateConstraint::Free))
    }));

    let (solves, hits) = counters.snapshot();
    SearchReport {
        structures: survivors,
        equivalence_structures: if options.include_equivalence_structures {
            equivalences
        } else {
            Vec::new()
        },
        counts: SearchCounts {
            candidates: total,
            lp_queries: solves,
            cache_hits: hits,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::conservation_basis;
    use crate::network::parse_network;
    use crate::order::check_structure;

    fn tags(s: &PreorderingStructure) -> &[SpeciesTag] {
        &s.species_tags
    }

    #[test]
    fn candidate_encoding_matches_base_four_counter() {
        assert_eq!(candidate_count(1), 3);
        assert_eq!(candidate_count(2), 15);
        let singles: Vec<_> = enumerate_candidates(1).collect();
        assert_eq!(
            singles,
            vec![vec![vec![1]], vec![vec![-1]], vec![vec![1], vec![-1]],]
        );
        assert_eq!(candidate_rows(2, 5), vec![vec![1, 0], vec![0, 1]],);
        assert_eq!(
            candidate_rows(2, 14),
            vec![vec![-1, 0], vec![0, 1], vec![0, -1]],
        );
    }

    #[test]
    fn reversible_conversion_has_one_structure() {
        let (net, _) = parse_network(srn_order_testkit::nets::REV).unwrap();
        let report = search(&net, &SearchOptions::default());
        assert_eq!(report.structures.len(), 1);
        assert!(report.equivalence_structures.is_empty());
        let s = &report.structures[0];
        assert_eq!(tags(s), &[SpeciesTag::Geq, SpeciesTag::Leq]);
        assert_eq!(
            s.reaction_constraints,
            vec![RateConstraint::Le, RateConstraint::Ge]
        );
        assert_eq!(report.counts.candidates, 15);
    }

    #[test]
    fn epidemic_with_recovery_has_no_structures() {
        let (net, _) = parse_network(srn_order_testkit::nets::SIR).unwrap();
        let report = search(&net, &SearchOptions::default());
        assert!(report.structures.is_empty());
        assert!(report.equivalence_structures.is_empty());
    }

    #[test]
    fn epidemic_without_recovery_matches_reversible_conversion() {
        let (net, _) = parse_network(srn_order_testkit::nets::SIS).unwrap();
        let report = search(&net, &SearchOptions::default());
        assert_eq!(report.structures.len(), 1);
        let s = &report.structures[0];
        assert_eq!(tags(s), &[SpeciesTag::Geq, SpeciesTag::Leq]);
        assert_eq!(
            s.reaction_constraints,
            vec![RateConstraint::Le, RateConstraint::Ge]
        );
    }

    #[test]
    fn chain_with_degradation_reports_orders_and_equivalence() {
        let (net, _) = parse_network(srn_order_testkit::nets::ERG).unwrap();
        let report = search(&net, &SearchOptions::default());
        assert_eq!(report.structures.len(), 2);
        assert_eq!(report.equivalence_structures.len(), 1);

        let eq = &report.equivalence_structures[0];
        assert_eq!(tags(eq), &[SpeciesTag::Eq, SpeciesTag::Uncompared]);
        assert_eq!(
            eq.reaction_constraints,
            vec![
                RateConstraint::Eq,
                RateConstraint::Eq,
                RateConstraint::Free,
                RateConstraint::Free
            ]
        );

        let single = report
            .structures
            .iter()
            .find(|s| tags(s) == [SpeciesTag::Geq, SpeciesTag::Uncompared])
            .expect("one-species structure");
        assert_eq!(
            single.reaction_constraints,
            vec![
                RateConstraint::Ge,
                RateConstraint::Le,
                RateConstraint::Free,
                RateConstraint::Free
            ]
        );
        let pinned = report
            .structures
            .iter()
            .find(|s| tags(s) == [SpeciesTag::Eq, SpeciesTag::Geq])
            .expect("pinned-species structure");
        assert_eq!(
            pinned.reaction_constraints,
            vec![
                RateConstraint::Eq,
                RateConstraint::Eq,
                RateConstraint::Le,
                RateConstraint::Le
            ]
        );
    }

    #[test]
    fn enzyme_network_contains_both_published_structures() {
        let (net, _) = parse_network(srn_order_testkit::nets::MM).unwrap();
        let report = search(&net, &SearchOptions::default());
        let one_sided = report.structures.iter().find(|s| {
            tags(s)
                == [
                    SpeciesTag::Geq,
                    SpeciesTag::Uncompared,
                    SpeciesTag::Uncompared,
                    SpeciesTag::Leq,
                ]
        });
        assert!(one_sided.is_some_and(|s| s.reaction_constraints
            == vec![RateConstraint::Le, RateConstraint::Ge, RateConstraint::Le]));
        let mixed = report.structures.iter().find(|s| {
            tags(s)
                == [
                    SpeciesTag::Geq,
                    SpeciesTag::Leq,
                    SpeciesTag::Geq,
                    SpeciesTag::Leq,
                ]
        });
        assert!(mixed.is_some_and(|s| s.reaction_constraints
            == vec![RateConstraint::Eq, RateConstraint::Eq, RateConstraint::Le]));
    }

    #[test]
    fn caching_pays_for_itself_on_the_enzyme_network() {
        let (net, _) = parse_network(srn_order_testkit::nets::MM).unwrap();
        let report = search(&net, &SearchOptions::default());
        assert!(
            report.counts.cache_hits >= report.counts.lp_queries,
            "hits {} below solves {}",
            report.counts.cache_hits,
            report.counts.lp_queries
        );
    }

    #[test]
    fn report_identical_for_any_worker_count() {
        for text in [srn_order_testkit::nets::MM, srn_order_testkit::nets::ERG] {
            let (net, _) = parse_network(text).unwrap();
            let base = search(&net, &SearchOptions::default());
            for workers in [2, 3, 8] {
                let report = search(
                    &net,
                    &SearchOptions {
                        worker_count: workers,
                        ..SearchOptions::default()
                    },
                );
                assert_eq!(base, report);
            }
        }
    }

    #[test]
    fn dominated_report_is_superset() {
        for text in [srn_order_testkit::nets::MM, srn_order_testkit::nets::ERG] {
            let (net, _) = parse_network(text).unwrap();
            let default = search(&net, &SearchOptions::default());
            let all = search(
                &net,
                &SearchOptions {
                    include_dominated: true,
                    ..SearchOptions::default()
                },
            );
            for s in default
                .structures
                .iter()
                .chain(&default.equivalence_structures)
            {
                assert!(
                    all.structures.contains(s) || all.equivalence_structures.contains(s),
                    "missing from dominated-inclusive report: {s:?}"
                );
            }
            assert!(
                all.structures.len() + all.equivalence_structures.len()
                    >= default.structures.len() + default.equivalence_structures.len()
            );
        }
    }

    #[test]
    fn reported_structures_recheck_valid() {
        for text in [
            srn_order_testkit::nets::REV,
            srn_order_testkit::nets::SIS,
            srn_order_testkit::nets::MM,
            srn_order_testkit::nets::ERG,
        ] {
            let (net, _) = parse_network(text).unwrap();
            let c = conservation_basis(&net);
            let report = search(&net, &SearchOptions::default());
            for s in report
                .structures
                .iter()
                .chain(&report.equivalence_structures)
            {
                let m = PreorderMatrix::new(s.canonical_m.clone(), net.species_count()).unwrap();
                assert_eq!(
                    check_structure(&net, &m, &c),
                    CheckOutcome::Valid(s.reaction_constraints.clone())
                );
            }
        }
    }

    #[test]
    fn no_reported_structure_mirrors_another() {
        for text in [srn_order_testkit::nets::MM, srn_order_testkit::nets::ERG] {
            let (net, _) = parse_network(text).unwrap();
            let report = search(&net, &SearchOptions::default());
            let all: Vec<_> = report
                .structures
                .iter()
                .chain(&report.equivalence_structures)
                .collect();
            for (i, s1) in all.iter().enumerate() {
                let m = mirror(s1);
                for (j, s2) in all.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    assert!(
                        m.closure != s2.closure
                            || m.reaction_constraints != s2.reaction_constraints,
                        "mirror pair reported: {s1:?} and {s2:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn mirror_is_an_involution() {
        let (net, _) = parse_network(srn_order_testkit::nets::MM).unwrap();
        let report = search(&net, &SearchOptions::default());
        for s in report
            .structures
            .iter()
            .chain(&report.equivalence_structures)
        {
            assert_eq!(&mirror(&mirror(s)), s);
            if is_pure_equivalence(s) {
                assert_eq!(&mirror(s), s);
            }
        }
    }

    #[test]
    fn domination_requires_strictly_larger_closure() {
        let (net, _) = parse_network(srn_order_testkit::nets::ERG).unwrap();
        let report = search(&net, &SearchOptions::default());
        for s in &report.structures {
            assert!(!dominates(s, s));
        }
    }

    #[test]
    #[ignore = "ten-species enumeration, minutes of work; run on demand"]
    fn cascade_smoke() {
        let (net, _) = parse_network(srn_order_testkit::nets::CASCADE).unwrap();
        let started = std::time::Instant::now();
        let report = search(
            &net,
            &SearchOptions {
                worker_count: 8,
                ..SearchOptions::default()
            },
        );
        println!(
            "cascade: {} structures, {} equivalences, {} solves, {} hits, {:?}",
            report.structures.len(),
            report.equivalence_structures.len(),
            report.counts.lp_queries,
            report.counts.cache_hits,
            started.elapsed()
        );
        for s in report
            .structures
            .iter()
            .chain(&report.equivalence_structures)
        {
            println!(
                "tags {:?} cons {:?}",
                s.species_tags, s.reaction_constraints
            );
        }
        assert_eq!(
            report.structures.len() + report.equivalence_structures.len(),
            7
        );
    }

    #[test]
    fn domination_examples() {
        // a structure concluding more from the same constraints dominates
        let wide = PreorderingStructure {
            canonical_m: vec![vec![-1, 0], vec![0, -1]],
            closure: [SignedUnit::minus(0), SignedUnit::minus(1)]
                .into_iter()
                .collect(),
            species_tags: vec![SpeciesTag::Geq, SpeciesTag::Geq],
            reaction_constraints: vec![RateConstraint::Eq, RateConstraint::Le],
        };
        let narrow = PreorderingStructure {
            canonical_m: vec![vec![-1, 0]],
            closure: [SignedUnit::minus(0)].into_iter().collect(),
            species_tags: vec![SpeciesTag::Geq, SpeciesTag::Uncompared],
            reaction_constraints: vec![RateConstraint::Eq, RateConstraint::Le],
        };
        assert!(dominates(&wide, &narrow));
        assert!(!dominates(&narrow, &wide));
        // equal closures never dominate
        assert!(!dominates(&narrow, &narrow));
        // a structure assuming strictly more does not dominate
        let pricier = PreorderingStructure {
            reaction_constraints: vec![RateConstraint::Eq, RateConstraint::Eq],
            ..wide.clone()
        };
        let cheap = PreorderingStructure {
            reaction_constraints: vec![RateConstraint::Eq, RateConstraint::Free],
            ..narrow.clone()
        };
        assert!(!dominates(&pricier, &cheap));
    }
}
