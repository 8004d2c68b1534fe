//! Coupled simulation of two rate parameterizations of one reaction
//! network, plus a brute-force oracle for the pathwise order-preservation
//! hypotheses on a finite window of the state space.
//!
//! The coupled chain moves on pairs `(x, y)` of states. For each net
//! change vector `xi`, write `a = qX(x, x+xi)` and `b = qY(y, y+xi)` for
//! the two aggregate rates, and let `p`, `q`, `s` be the membership flags
//! of the candidate targets `(x+xi, y)`, `(x, y+xi)`, `(x+xi, y+xi)` in
//! the relation. The joint rates are chosen so that each marginal sees
//! exactly its own aggregate rate while the pair never leaves the
//! relation: synchronized moves carry the shared mass when a lone move
//! would exit, and the excess rides on the component that may still move
//! alone. The eight membership patterns:
//!
//! ```text
//! 1 ( p,  q,  s): lone (x+xi, y) @ a and lone (x, y+xi) @ b
//! 2 ( p, !q,  s): lone (x+xi, y) @ a-b, synced (x+xi, y+xi) @ b; needs a >= b
//! 3 ( p, !q, !s): lone (x+xi, y) @ a
//! 4 (!p,  q,  s): lone (x, y+xi) @ b-a, synced (x+xi, y+xi) @ a; needs b >= a
//! 5 (!p,  q, !s): lone (x, y+xi) @ b
//! 6 (!p, !q,  s): synced (x+xi, y+xi) @ a; needs a = b
//! 7 (!p, !q, !s): no move
//! 8 ( p,  q, !s): unreachable when the relation is closed under joint
//!                 shifts; reported as a containment violation
//! ```
//!
//! Zero-rate entries are dropped. A reachable pattern whose split would
//! need a negative rate is reported as a hypothesis violation rather than
//! silently clamped; the required inequalities are exactly the rate bounds
//! that the structure checker certifies symbolically. Outside the relation
//! the two components move independently.
//!
//! The oracle re-derives the same rate bounds directly from the relation
//! definition over every state pair in a truncated compatibility window,
//! without going through the case table, so simulator and checker can be
//! validated against it independently.

use std::fmt;
use std::io::{self, Write};

use num::{BigInt, BigRational, Integer, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::conservation_basis;
use crate::network::{aggregate_rate, KineticsPair, ReactionNetwork, State};
use crate::order::{PreorderMatrix, Side};

/// A relation on pairs of states: both components non-negative and
/// `M(x - y) <= c` component-wise. A zero offset gives the matrix
/// preorder itself; a non-zero offset shifts each bound.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineRelation {
    m: PreorderMatrix,
    c: Vec<i64>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("offset length {got} does not match the matrix row count {want}")]
    OffsetLength { got: usize, want: usize },
}

impl AffineRelation {
    /// The plain matrix preorder, offset zero.
    pub fn preorder(m: PreorderMatrix) -> Self {
        let c = vec![0; m.m()];
        AffineRelation { m, c }
    }

    /// A shifted relation `M(x - y) <= c`.
    pub fn with_offset(m: PreorderMatrix, c: Vec<i64>) -> Result<Self, SimError> {
        if c.len() != m.m() {
            return Err(SimError::OffsetLength {
                got: c.len(),
                want: m.m(),
            });
        }
        Ok(AffineRelation { m, c })
    }

    pub fn matrix(&self) -> &PreorderMatrix {
        &self.m
    }

    pub fn offset(&self) -> &[i64] {
        &self.c
    }

    /// Membership test. States with a negative count are never related.
    pub fn contains(&self, x: &[i64], y: &[i64]) -> bool {
        if x.iter().any(|&v| v < 0) || y.iter().any(|&v| v < 0) {
            return false;
        }
        self.m.rows().iter().zip(&self.c).all(|(row, &bound)| {
            row.iter()
                .zip(x.iter().zip(y))
                .map(|(&a, (&xv, &yv))| a * (xv - yv))
                .sum::<i64>()
                <= bound
        })
    }
}

/// Which membership pattern produced a coupled transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CaseTag {
    Case1,
    Case2,
    Case3,
    Case4,
    Case5,
    Case6,
    Case7,
    OutsideRelation,
}

impl CaseTag {
    pub fn label(&self) -> &'static str {
        match self {
            CaseTag::Case1 => "1",
            CaseTag::Case2 => "2",
            CaseTag::Case3 => "3",
            CaseTag::Case4 => "4",
            CaseTag::Case5 => "5",
            CaseTag::Case6 => "6",
            CaseTag::Case7 => "7",
            CaseTag::OutsideRelation => "out",
        }
    }
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which hypothesis a witness state pair breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolatedCondition {
    /// The rate bound attached to one side: side a requires
    /// `qX <= qY` whenever `(x+xi, y)` exits the relation, side b requires
    /// `qX >= qY` whenever `(x, y+xi)` exits.
    RateBound(Side),
    /// A joint shift `(x+xi, y+xi)` lands outside the relation while both
    /// components stay valid states.
    Containment,
}

impl fmt::Display for ViolatedCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ViolatedCondition::RateBound(side) => write!(f, "side-{side} rate bound"),
            ViolatedCondition::Containment => write!(f, "joint-shift containment"),
        }
    }
}

fn join_ints(v: &[i64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    parts.join(",")
}

/// A state pair and change vector at which the coupling hypotheses fail,
/// with the two aggregate rates that witnessed the failure.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error(
    "{condition} violated at x=({}), y=({}), xi=({}): x-rate {x_rate}, y-rate {y_rate}",
    join_ints(.x),
    join_ints(.y),
    join_ints(.xi)
)]
pub struct ConditionViolation {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub xi: Vec<i64>,
    pub condition: ViolatedCondition,
    pub x_rate: BigRational,
    pub y_rate: BigRational,
}

/// One outgoing transition of the coupled chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledTransition {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub rate: BigRational,
    pub case: CaseTag,
    pub xi: Vec<i64>,
}

fn shifted(x: &[i64], xi: &[i64]) -> Vec<i64> {
    x.iter().zip(xi).map(|(&a, &b)| a + b).collect()
}

fn distinct_nonzero_vectors(net: &ReactionNetwork) -> Vec<&Vec<i64>> {
    net.distinct_vectors
        .iter()
        .filter(|v| v.iter().any(|&t| t != 0))
        .collect()
}

fn state_of(counts: &[i64]) -> State {
    State::new(counts.to_vec()).expect("simulation states stay non-negative")
}

/// Outgoing transitions of the coupled chain at `(x, y)`, exact in the
/// rate constants. Fails when the pair witnesses a broken hypothesis.
pub fn coupled_rates(
    net: &ReactionNetwork,
    kin: &KineticsPair,
    rel: &AffineRelation,
    x: &[i64],
    y: &[i64],
) -> Result<Vec<CoupledTransition>, Box<ConditionViolation>> {
    let sx = state_of(x);
    let sy = state_of(y);
    let in_relation = rel.contains(x, y);
    let mut out = Vec::new();
    let mut push = |x: Vec<i64>, y: Vec<i64>, rate: BigRational, case: CaseTag, xi: &[i64]| {
        if rate.is_positive() {
            out.push(CoupledTransition {
                x,
                y,
                rate,
                case,
                xi: xi.to_vec(),
            });
        }
    };
    let violation = |xi: &[i64], condition, a: &BigRational, b: &BigRational| {
        Box::new(ConditionViolation {
            x: x.to_vec(),
            y: y.to_vec(),
            xi: xi.to_vec(),
            condition,
            x_rate: a.clone(),
            y_rate: b.clone(),
        })
    };

    for xi in distinct_nonzero_vectors(net) {
        let a = aggregate_rate(net, &kin.kx, &sx, xi);
        let b = aggregate_rate(net, &kin.ky, &sy, xi);
        let xp = shifted(x, xi);
        let yp = shifted(y, xi);

        if !in_relation {
            push(xp, y.to_vec(), a, CaseTag::OutsideRelation, xi);
            push(x.to_vec(), yp, b, CaseTag::OutsideRelation, xi);
            continue;
        }

        let p = rel.contains(&xp, y);
        let q = rel.contains(x, &yp);
        let s = rel.contains(&xp, &yp);
        match (p, q, s) {
            (true, true, true) => {
                push(xp, y.to_vec(), a, CaseTag::Case1, xi);
                push(x.to_vec(), yp, b, CaseTag::Case1, xi);
            }
            (true, false, true) => {
                if a < b {
                    return Err(violation(xi, ViolatedCondition::RateBound(Side::B), &a, &b));
                }
                push(xp.clone(), y.to_vec(), &a - &b, CaseTag::Case2, xi);
                push(xp, yp, b, CaseTag::Case2, xi);
            }
            (true, false, false) => {
                push(xp, y.to_vec(), a, CaseTag::Case3, xi);
            }
            (false, true, true) => {
                if b < a {
                    return Err(violation(xi, ViolatedCondition::RateBound(Side::A), &a, &b));
                }
                push(x.to_vec(), yp.clone(), &b - &a, CaseTag::Case4, xi);
                push(xp, yp, a, CaseTag::Case4, xi);
            }
            (false, true, false) => {
                push(x.to_vec(), yp, b, CaseTag::Case5, xi);
            }
            (false, false, true) => {
                if a != b {
                    let side = if a > b { Side::A } else { Side::B };
                    return Err(violation(xi, ViolatedCondition::RateBound(side), &a, &b));
                }
                push(xp, yp, a, CaseTag::Case6, xi);
            }
            (false, false, false) => {}
            (true, true, false) => {
                return Err(violation(xi, ViolatedCondition::Containment, &a, &b));
            }
        }
    }
    Ok(out)
}

/// Which guard ended a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    TMaxReached,
    MaxEvents,
    Absorbed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledEvent {
    pub time: f64,
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub case: CaseTag,
    pub xi: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledTrajectory {
    pub x0: Vec<i64>,
    pub y0: Vec<i64>,
    pub t_max: f64,
    pub events: Vec<CoupledEvent>,
    pub terminated_by: Termination,
}

impl CoupledTrajectory {
    /// The pair occupied at time `t` (piecewise constant, right continuous).
    pub fn pair_at(&self, t: f64) -> (&[i64], &[i64]) {
        let n = self.events.partition_point(|e| e.time <= t);
        if n == 0 {
            (&self.x0, &self.y0)
        } else {
            let e = &self.events[n - 1];
            (&e.x, &e.y)
        }
    }

    /// Line-oriented export: `t<TAB>x<TAB>y<TAB>case<TAB>xi` with
    /// vectors comma-joined; the initial pair gets dashes for case and xi.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "0\t{}\t{}\t-\t-",
            join_ints(&self.x0),
            join_ints(&self.y0)
        )?;
        for e in &self.events {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}",
                e.time,
                join_ints(&e.x),
                join_ints(&e.y),
                e.case.label(),
                join_ints(&e.xi)
            )?;
        }
        Ok(())
    }
}

fn rate_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::INFINITY)
}

/// Exact-jump simulation of the coupled chain on one RNG stream.
/// Case arithmetic stays rational; only holding times and the jump choice
/// go through floating point.
#[allow(clippy::too_many_arguments)]
pub fn simulate_coupled_stream(
    net: &ReactionNetwork,
    kin: &KineticsPair,
    rel: &AffineRelation,
    x0: &[i64],
    y0: &[i64],
    t_max: f64,
    seed: u64,
    stream: u64,
    max_events: usize,
) -> Result<CoupledTrajectory, Box<ConditionViolation>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut x = x0.to_vec();
    let mut y = y0.to_vec();
    let mut t = 0.0_f64;
    let mut events = Vec::new();
    let terminated_by = loop {
        if events.len() >= max_events {
            break Termination::MaxEvents;
        }
        let transitions = coupled_rates(net, kin, rel, &x, &y)?;
        let total = transitions
            .iter()
            .fold(BigRational::zero(), |acc, tr| acc + &tr.rate);
        if total.is_zero() {
            break Termination::Absorbed;
        }
        let total_f = rate_to_f64(&total);
        let dt = -(1.0 - rng.gen::<f64>()).ln() / total_f;
        if !dt.is_finite() || t + dt > t_max {
            break Termination::TMaxReached;
        }
        t += dt;
        let draw = rng.gen::<f64>() * total_f;
        let mut acc = 0.0;
        let mut chosen = transitions.len() - 1;
        for (i, tr) in transitions.iter().enumerate() {
            acc += rate_to_f64(&tr.rate);
            if draw < acc {
                chosen = i;
                break;
            }
        }
        let tr = &transitions[chosen];
        x = tr.x.clone();
        y = tr.y.clone();
        events.push(CoupledEvent {
            time: t,
            x: x.clone(),
            y: y.clone(),
            case: tr.case,
            xi: tr.xi.clone(),
        });
    };
    Ok(CoupledTrajectory {
        x0: x0.to_vec(),
        y0: y0.to_vec(),
        t_max,
        events,
        terminated_by,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_coupled(
    net: &ReactionNetwork,
    kin: &KineticsPair,
    rel: &AffineRelation,
    x0: &[i64],
    y0: &[i64],
    t_max: f64,
    seed: u64,
    max_events: usize,
) -> Result<CoupledTrajectory, Box<ConditionViolation>> {
    simulate_coupled_stream(net, kin, rel, x0, y0, t_max, seed, 0, max_events)
}

/// Independent coupled trajectories on RNG streams `0..count`, in parallel.
/// The result is a function of the master seed alone, not of scheduling.
#[allow(clippy::too_many_arguments)]
pub fn simulate_coupled_batch(
    net: &ReactionNetwork,
    kin: &KineticsPair,
    rel: &AffineRelation,
    x0: &[i64],
    y0: &[i64],
    t_max: f64,
    seed: u64,
    max_events: usize,
    count: usize,
) -> Result<Vec<CoupledTrajectory>, Box<ConditionViolation>> {
    (0..count)
        .into_par_iter()
        .map(|i| simulate_coupled_stream(net, kin, rel, x0, y0, t_max, seed, i as u64, max_events))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SsaEvent {
    pub time: f64,
    pub reaction: usize,
    pub state: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SsaTrajectory {
    pub x0: Vec<i64>,
    pub t_max: f64,
    pub events: Vec<SsaEvent>,
    pub terminated_by: Termination,
}

impl SsaTrajectory {
    pub fn state_at(&self, t: f64) -> &[i64] {
        let n = self.events.partition_point(|e| e.time <= t);
        if n == 0 {
            &self.x0
        } else {
            &self.events[n - 1].state
        }
    }
}

/// Plain single-chain simulation on one RNG stream.
pub fn simulate_ssa_stream(
    net: &ReactionNetwork,
    constants: &[BigRational],
    x0: &[i64],
    t_max: f64,
    seed: u64,
    stream: u64,
    max_events: usize,
) -> SsaTrajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut x = x0.to_vec();
    let mut t = 0.0_f64;
    let mut events = Vec::new();
    let terminated_by = loop {
        if events.len() >= max_events {
            break Termination::MaxEvents;
        }
        let st = state_of(&x);
        let props: Vec<BigRational> = (0..net.reactions.len())
            .map(|r| crate::network::propensity(net, constants, r, &st))
            .collect();
        let total = props.iter().fold(BigRational::zero(), |acc, p| acc + p);
        if total.is_zero() {
            break Termination::Absorbed;
        }
        let total_f = rate_to_f64(&total);
        let dt = -(1.0 - rng.gen::<f64>()).ln() / total_f;
        if !dt.is_finite() || t + dt > t_max {
            break Termination::TMaxReached;
        }
        t += dt;
        let draw = rng.gen::<f64>() * total_f;
        let mut acc = 0.0;
        let mut chosen = props.len() - 1;
        for (r, p) in props.iter().enumerate() {
            acc += rate_to_f64(p);
            if draw < acc {
                chosen = r;
                break;
            }
        }
        x = shifted(&x, &net.reactions[chosen].xi);
        events.push(SsaEvent {
            time: t,
            reaction: chosen,
            state: x.clone(),
        });
    };
    SsaTrajectory {
        x0: x0.to_vec(),
        t_max,
        events,
        terminated_by,
    }
}

pub fn simulate_ssa(
    net: &ReactionNetwork,
    constants: &[BigRational],
    x0: &[i64],
    t_max: f64,
    seed: u64,
    max_events: usize,
) -> SsaTrajectory {
    simulate_ssa_stream(net, constants, x0, t_max, seed, 0, max_events)
}

/// Independent plain trajectories on RNG streams `0..count`, in parallel.
pub fn simulate_ssa_batch(
    net: &ReactionNetwork,
    constants: &[BigRational],
    x0: &[i64],
    t_max: f64,
    seed: u64,
    max_events: usize,
    count: usize,
) -> Vec<SsaTrajectory> {
    (0..count)
        .into_par_iter()
        .map(|i| simulate_ssa_stream(net, constants, x0, t_max, seed, i as u64, max_events))
        .collect()
}

/// Row-echelon integer basis of the lattice spanned by `rows`, by
/// Euclidean reduction. Pivot columns strictly increase and pivots are
/// positive; membership testing reduces a vector row by row.
fn hermite_staircase(rows: &[Vec<i64>], d: usize) -> Vec<Vec<BigInt>> {
    let mut work: Vec<Vec<BigInt>> = rows
        .iter()
        .filter(|r| r.iter().any(|&v| v != 0))
        .map(|r| r.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    let mut rank = 0;
    for col in 0..d {
        loop {
            let mut pivot: Option<usize> = None;
            for r in rank..work.len() {
                if work[r][col].is_zero() {
                    continue;
                }
                if pivot.is_none_or(|p| work[r][col].magnitude() < work[p][col].magnitude()) {
                    pivot = Some(r);
                }
            }
            let Some(p) = pivot else { break };
            work.swap(rank, p);
            let mut remainder_left = false;
            for r in rank + 1..work.len() {
                if work[r][col].is_zero() {
                    continue;
                }
                let q = &work[r][col] / &work[rank][col];
                if !q.is_zero() {
                    for j in 0..d {
                        let delta = &q * &work[rank][j];
                        work[r][j] -= delta;
                    }
                }
                if !work[r][col].is_zero() {
                    remainder_left = true;
                }
            }
            if !remainder_left {
                if work[rank][col].is_negative() {
                    for v in work[rank].iter_mut() {
                        *v = -&*v;
                    }
                }
                rank += 1;
                break;
            }
        }
    }
    work.truncate(rank);
    work
}

fn lattice_contains(basis: &[Vec<BigInt>], v: &[i64]) -> bool {
    let mut rem: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
    for row in basis {
        let p = row
            .iter()
            .position(|e| !e.is_zero())
            .expect("staircase rows are non-zero");
        if rem[p].is_zero() {
            continue;
        }
        let (q, r) = rem[p].div_rem(&row[p]);
        if !r.is_zero() {
            return false;
        }
        for j in 0..rem.len() {
            let delta = &q * &row[j];
            rem[j] -= delta;
        }
    }
    rem.iter().all(|e| e.is_zero())
}

/// States reachable from `anchor` by integer combinations of the
/// network's change vectors, truncated to counts in `0..=radius`.
/// Conservation laws prune the scan; exact lattice membership decides.
pub fn enumerate_lattice_box(net: &ReactionNetwork, anchor: &[i64], radius: i64) -> Vec<Vec<i64>> {
    let d = net.species_count();
    assert_eq!(anchor.len(), d, "anchor length must match species count");
    assert!(radius >= 0, "radius must be non-negative");
    let basis = hermite_staircase(&net.distinct_vectors, d);
    let cons = conservation_basis(net);
    let targets: Vec<i64> = cons
        .c
        .iter()
        .map(|row| row.iter().zip(anchor).map(|(&a, &b)| a * b).sum())
        .collect();
    // Interval bounds of what species j..d can still contribute to each law.
    let nlaws = cons.c.len();
    let mut lo_suffix = vec![vec![0i64; d + 1]; nlaws];
    let mut hi_suffix = vec![vec![0i64; d + 1]; nlaws];
    for (i, row) in cons.c.iter().enumerate() {
        for j in (0..d).rev() {
            let reach = row[j] * radius;
            lo_suffix[i][j] = lo_suffix[i][j + 1] + reach.min(0);
            hi_suffix[i][j] = hi_suffix[i][j + 1] + reach.max(0);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        j: usize,
        d: usize,
        radius: i64,
        cons_rows: &[Vec<i64>],
        targets: &[i64],
        lo_suffix: &[Vec<i64>],
        hi_suffix: &[Vec<i64>],
        basis: &[Vec<BigInt>],
        anchor: &[i64],
        cur: &mut Vec<i64>,
        partial: &mut Vec<i64>,
        out: &mut Vec<Vec<i64>>,
    ) {
        if j == d {
            let v: Vec<i64> = cur.iter().zip(anchor).map(|(&a, &b)| a - b).collect();
            if lattice_contains(basis, &v) {
                out.push(cur.clone());
            }
            return;
        }
        for val in 0..=radius {
            cur[j] = val;
            let mut ok = true;
            for i in 0..cons_rows.len() {
                partial[i] += cons_rows[i][j] * val;
                let window = partial[i] + lo_suffix[i][j + 1]..=partial[i] + hi_suffix[i][j + 1];
                if !window.contains(&targets[i]) {
                    ok = false;
                }
            }
            if ok {
                descend(
                    j + 1,
                    d,
                    radius,
                    cons_rows,
                    targets,
                    lo_suffix,
                    hi_suffix,
                    basis,
                    anchor,
                    cur,
                    partial,
                    out,
                );
            }
            for i in 0..cons_rows.len() {
                partial[i] -= cons_rows[i][j] * val;
            }
        }
        cur[j] = 0;
    }

    let mut out = Vec::new();
    let mut cur = vec![0i64; d];
    let mut partial = vec![0i64; nlaws];
    descend(
        0,
        d,
        radius,
        &cons.c,
        &targets,
        &lo_suffix,
        &hi_suffix,
        &basis,
        anchor,
        &mut cur,
        &mut partial,
        &mut out,
    );
    out
}

/// Tally of a brute-force hypothesis check over a truncated window.
#[derive(Clone, Debug)]
pub struct OracleReport {
    pub box_states: usize,
    pub pairs_checked: usize,
    pub violations: Vec<ConditionViolation>,
}

struct StationRates {
    mx: Vec<i64>,
    rates_x: Vec<BigRational>,
    rates_y: Vec<BigRational>,
    shift_ok: Vec<bool>,
    m_shift: Vec<Vec<i64>>,
}

fn diff_le(a: &[i64], b: &[i64], c: &[i64]) -> bool {
    a.iter()
        .zip(b)
        .zip(c)
        .all(|((&av, &bv), &cv)| av - bv <= cv)
}

/// Checks every related pair in the window against the three coupling
/// hypotheses: side-a rate bound, side-b rate bound, and joint-shift
/// containment. Target membership is evaluated exactly, not truncated
/// to the window.
pub fn oracle_check_conditions(
    net: &ReactionNetwork,
    kin: &KineticsPair,
    rel: &AffineRelation,
    anchor: &[i64],
    radius: i64,
) -> OracleReport {
    let states = enumerate_lattice_box(net, anchor, radius);
    let xis: Vec<Vec<i64>> = distinct_nonzero_vectors(net).into_iter().cloned().collect();
    let c = rel.offset();
    let per: Vec<StationRates> = states
        .par_iter()
        .map(|x| {
            let st = state_of(x);
            let rates_x = xis
                .iter()
                .map(|xi| aggregate_rate(net, &kin.kx, &st, xi))
                .collect();
            let rates_y = xis
                .iter()
                .map(|xi| aggregate_rate(net, &kin.ky, &st, xi))
                .collect();
            let shifts: Vec<Vec<i64>> = xis.iter().map(|xi| shifted(x, xi)).collect();
            StationRates {
                mx: rel.matrix().apply(x),
                rates_x,
                rates_y,
                shift_ok: shifts.iter().map(|s| s.iter().all(|&v| v >= 0)).collect(),
                m_shift: shifts.iter().map(|s| rel.matrix().apply(s)).collect(),
            }
        })
        .collect();

    let results: Vec<(usize, Vec<ConditionViolation>)> = (0..states.len())
        .into_par_iter()
        .map(|i| {
            let mut pairs = 0usize;
            let mut local = Vec::new();
            for j in 0..states.len() {
                if !diff_le(&per[i].mx, &per[j].mx, c) {
                    continue;
                }
                pairs += 1;
                for (k, xi) in xis.iter().enumerate() {
                    let a = &per[i].rates_x[k];
                    let b = &per[j].rates_y[k];
                    let record = |condition| ConditionViolation {
                        x: states[i].clone(),
                        y: states[j].clone(),
                        xi: xi.clone(),
                        condition,
                        x_rate: a.clone(),
                        y_rate: b.clone(),
                    };
                    let p = per[i].shift_ok[k] && diff_le(&per[i].m_shift[k], &per[j].mx, c);
                    if !p && a > b {
                        local.push(record(ViolatedCondition::RateBound(Side::A)));
                    }
                    let q = per[j].shift_ok[k] && diff_le(&per[i].mx, &per[j].m_shift[k], c);
                    if !q && a < b {
                        local.push(record(ViolatedCondition::RateBound(Side::B)));
                    }
                    let both_valid = per[i].shift_ok[k] && per[j].shift_ok[k];
                    let s = both_valid && diff_le(&per[i].m_shift[k], &per[j].m_shift[k], c);
                    if !s && both_valid {
                        local.push(record(ViolatedCondition::Containment));
                    }
                }
            }
            (pairs, local)
        })
        .collect();

    let pairs_checked = results.iter().map(|(p, _)| p).sum();
    let violations = results.into_iter().flat_map(|(_, v)| v).collect();
    OracleReport {
        box_states: states.len(),
        pairs_checked,
        violations,
    }
}

/// Verifies that the coupled generator moves each component at exactly
/// its own aggregate rate: for each pair and each change vector with a
/// valid target, the coupled mass moving that component equals the
/// marginal rate, in exact arithmetic. Returns false on any mismatch or
/// when a pair witnesses a hypothesis violation.
pub fn marginal_rate_identity(
    net: &ReactionNetwork,
    kin: &KineticsPair,
    rel: &AffineRelation,
    pairs: &[(Vec<i64>, Vec<i64>)],
) -> bool {
    for (x, y) in pairs {
        let Ok(transitions) = coupled_rates(net, kin, rel, x, y) else {
            return false;
        };
        let sx = state_of(x);
        let sy = state_of(y);
        for xi in distinct_nonzero_vectors(net) {
            let xp = shifted(x, xi);
            if xp.iter().all(|&v| v >= 0) {
                let want = aggregate_rate(net, &kin.kx, &sx, xi);
                let got = transitions
                    .iter()
                    .filter(|tr| tr.x == xp)
                    .fold(BigRational::zero(), |acc, tr| acc + &tr.rate);
                if got != want {
                    return false;
                }
            }
            let yp = shifted(y, xi);
            if yp.iter().all(|&v| v >= 0) {
                let want = aggregate_rate(net, &kin.ky, &sy, xi);
                let got = transitions
                    .iter()
                    .filter(|tr| tr.y == yp)
                    .fold(BigRational::zero(), |acc, tr| acc + &tr.rate);
                if got != want {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::parse_network;
    use srn_order_testkit::{nets, stats};

    fn parse(text: &str) -> (ReactionNetwork, KineticsPair) {
        let (net, kin) = parse_network(text).expect("fixture parses");
        (net, kin.expect("fixture carries rate annotations"))
    }

    fn preorder(rows: Vec<Vec<i64>>, d: usize) -> AffineRelation {
        AffineRelation::preorder(PreorderMatrix::new(rows, d).expect("valid matrix"))
    }

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn affine_relation_requires_nonnegative_states() {
        let rel =
            AffineRelation::with_offset(PreorderMatrix::new(vec![vec![1]], 1).unwrap(), vec![1])
                .unwrap();
        assert!(rel.contains(&[1], &[0]));
        assert!(!rel.contains(&[2], &[0]));
        assert!(rel.contains(&[0], &[5]));
        assert!(!rel.contains(&[-1], &[0]));
        assert!(!rel.contains(&[0], &[-1]));
    }

    #[test]
    fn offset_length_is_validated() {
        let m = PreorderMatrix::new(vec![vec![1]], 1).unwrap();
        assert_eq!(
            AffineRelation::with_offset(m, vec![1, 2]),
            Err(SimError::OffsetLength { got: 2, want: 1 })
        );
    }

    #[test]
    fn excess_rides_on_the_lagging_component() {
        let (net, kin) = parse(nets::PCC);
        let rel =
            AffineRelation::with_offset(PreorderMatrix::new(vec![vec![1]], 1).unwrap(), vec![1])
                .unwrap();
        // At the offset boundary x = y + 1 an upward move by x alone would
        // overshoot, so the shared mass rides the diagonal and only the
        // second component keeps an independent upward move.
        let trans = coupled_rates(&net, &kin, &rel, &[2], &[1]).unwrap();
        assert_eq!(
            trans,
            vec![
                CoupledTransition {
                    x: vec![2],
                    y: vec![2],
                    rate: q(1),
                    case: CaseTag::Case4,
                    xi: vec![1],
                },
                CoupledTransition {
                    x: vec![3],
                    y: vec![2],
                    rate: q(3),
                    case: CaseTag::Case4,
                    xi: vec![1],
                },
                CoupledTransition {
                    x: vec![0],
                    y: vec![1],
                    rate: q(4),
                    case: CaseTag::Case3,
                    xi: vec![-2],
                },
            ]
        );
    }

    #[test]
    fn rate_bound_violation_reported_with_witness() {
        let (net, kin) = parse(nets::PCC);
        let swapped = KineticsPair::new(kin.ky.clone(), kin.kx.clone()).unwrap();
        let rel =
            AffineRelation::with_offset(PreorderMatrix::new(vec![vec![1]], 1).unwrap(), vec![1])
                .unwrap();
        let err = coupled_rates(&net, &swapped, &rel, &[1], &[0]).unwrap_err();
        assert_eq!(err.condition, ViolatedCondition::RateBound(Side::A));
        assert_eq!((err.x.as_slice(), err.y.as_slice()), (&[1][..], &[0][..]));
        assert_eq!(err.xi, vec![1]);
        assert_eq!(err.x_rate, q(4));
        assert_eq!(err.y_rate, q(1));
        assert!(err.to_string().contains("side-a rate bound"));
    }

    #[test]
    fn synchronized_moves_require_equal_rates() {
        let (net, fig_kin) = parse(nets::REV);
        let pinned = preorder(vec![vec![0, 1], vec![0, -1]], 2);
        // Unequal constants break the forced synchronization.
        let err = coupled_rates(&net, &fig_kin, &pinned, &[2, 1], &[2, 1]).unwrap_err();
        assert_eq!(err.condition, ViolatedCondition::RateBound(Side::B));
        // Equal constants move only along the diagonal.
        let same = KineticsPair::new(fig_kin.kx.clone(), fig_kin.kx.clone()).unwrap();
        let trans = coupled_rates(&net, &same, &pinned, &[2, 1], &[2, 1]).unwrap();
        assert_eq!(trans.len(), 2);
        for tr in &trans {
            assert_eq!(tr.case, CaseTag::Case6);
            assert_eq!(tr.x, tr.y);
        }
    }

    #[test]
    fn independent_moves_outside_the_relation() {
        let (net, kin) = parse(nets::REV);
        let rel = preorder(vec![vec![0, 1]], 2);
        let trans = coupled_rates(&net, &kin, &rel, &[0, 3], &[3, 0]).unwrap();
        assert_eq!(
            trans,
            vec![
                CoupledTransition {
                    x: vec![0, 3],
                    y: vec![2, 1],
                    rate: q(6),
                    case: CaseTag::OutsideRelation,
                    xi: vec![-1, 1],
                },
                CoupledTransition {
                    x: vec![1, 2],
                    y: vec![3, 0],
                    rate: q(6),
                    case: CaseTag::OutsideRelation,
                    xi: vec![1, -1],
                },
            ]
        );
    }

    #[test]
    fn zero_horizon_trajectory_is_initial_pair_only() {
        let (net, kin) = parse(nets::REV);
        let rel = preorder(vec![vec![0, 1]], 2);
        let tr = simulate_coupled(&net, &kin, &rel, &[3, 0], &[3, 0], 0.0, 4, 1000).unwrap();
        assert!(tr.events.is_empty());
        assert_eq!(tr.terminated_by, Termination::TMaxReached);
        let mut buf = Vec::new();
        tr.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0\t3,0\t3,0\t-\t-\n");
    }

    #[test]
    fn coupled_trajectory_preserves_the_componentwise_order() {
        let (net, kin) = parse(nets::REV);
        let rel = preorder(vec![vec![0, 1]], 2);
        let tr = simulate_coupled(&net, &kin, &rel, &[3, 0], &[3, 0], 25.0, 11, 200_000).unwrap();
        assert_eq!(tr.terminated_by, Termination::TMaxReached);
        assert!(!tr.events.is_empty());
        let mut prev = 0.0;
        for e in &tr.events {
            assert!(e.time > prev);
            prev = e.time;
            assert!(e.x[0] >= e.y[0], "first species should stay ahead");
            assert!(e.x[1] <= e.y[1], "second species should stay behind");
            assert_ne!(e.case, CaseTag::OutsideRelation);
        }
    }

    #[test]
    fn same_stream_reproduces_bitwise_and_streams_diverge() {
        let (net, kin) = parse(nets::REV);
        let rel = preorder(vec![vec![0, 1]], 2);
        let a = simulate_coupled_stream(&net, &kin, &rel, &[3, 0], &[3, 0], 20.0, 7, 3, 100_000)
            .unwrap();
        let b = simulate_coupled_stream(&net, &kin, &rel, &[3, 0], &[3, 0], 20.0, 7, 3, 100_000)
            .unwrap();
        assert_eq!(a, b);
        let c = simulate_coupled_stream(&net, &kin, &rel, &[3, 0], &[3, 0], 20.0, 7, 4, 100_000)
            .unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn affine_example_stays_within_offset() {
        let (net, kin) = parse(nets::PCC);
        let rel =
            AffineRelation::with_offset(PreorderMatrix::new(vec![vec![1]], 1).unwrap(), vec![1])
                .unwrap();
        let tr = simulate_coupled(&net, &kin, &rel, &[1], &[0], 8.0, 5, 50_000).unwrap();
        assert!(!tr.events.is_empty());
        for e in &tr.events {
            assert!(e.x[0] <= e.y[0] + 1, "offset order broke at {:?}", e);
        }
    }

    #[test]
    fn ssa_absorbs_when_nothing_can_fire() {
        let (net, kin) = parse(nets::MM);
        let tr = simulate_ssa(&net, &kin.kx, &[5, 0, 0, 0], 10.0, 1, 1000);
        assert_eq!(tr.terminated_by, Termination::Absorbed);
        assert!(tr.events.is_empty());
    }

    #[test]
    fn ssa_event_count_matches_poisson_mean() {
        let (net, kin) = parse("0 -> A kX=2 kY=2\n");
        let runs = simulate_ssa_batch(&net, &kin.kx, &[0], 10.0, 99, 1_000_000, 400);
        let counts: Vec<f64> = runs.iter().map(|tr| tr.events.len() as f64).collect();
        let mean = stats::mean(&counts);
        // Event counts are Poisson with mean 20, so the sample mean over
        // 400 runs has standard error sqrt(20/400).
        let se = (20.0_f64 / 400.0).sqrt();
        assert!(
            (mean - 20.0).abs() <= 4.0 * se,
            "sample mean {mean} too far from 20"
        );
        for tr in &runs {
            assert_eq!(tr.terminated_by, Termination::TMaxReached);
        }
    }

    #[test]
    fn lattice_box_respects_change_vector_steps() {
        let (net, _) = parse("0 -> 2A kX=1 kY=1\n2A -> 0 kX=1 kY=1\n");
        assert_eq!(
            enumerate_lattice_box(&net, &[1], 8),
            vec![vec![1], vec![3], vec![5], vec![7]]
        );
        assert_eq!(
            enumerate_lattice_box(&net, &[0], 8),
            vec![vec![0], vec![2], vec![4], vec![6], vec![8]]
        );
    }

    #[test]
    fn lattice_box_stays_on_the_compatibility_class() {
        let (net, _) = parse(nets::REV);
        assert_eq!(
            enumerate_lattice_box(&net, &[3, 0], 8),
            vec![vec![0, 3], vec![1, 2], vec![2, 1], vec![3, 0]]
        );
    }

    #[test]
    fn oracle_accepts_compliant_reversible_rates() {
        let (net, kin) = parse(nets::REV);
        let rel = preorder(vec![vec![0, 1]], 2);
        let report = oracle_check_conditions(&net, &kin, &rel, &[3, 0], 8);
        assert_eq!(report.box_states, 4);
        assert_eq!(report.pairs_checked, 10);
        assert!(report.violations.is_empty(), "{:?}", report.violations);
    }

    #[test]
    fn oracle_flags_a_seeded_rate_violation() {
        let (net, _) = parse(nets::SIS);
        // Infection must slow down from X to Y; flip that inequality.
        let kin = KineticsPair::new(vec![q(2), q(1)], vec![q(1), q(1)]).unwrap();
        let rel = preorder(vec![vec![0, 1]], 2);
        let report = oracle_check_conditions(&net, &kin, &rel, &[3, 2], 8);
        assert_eq!(report.box_states, 6);
        assert!(!report.violations.is_empty());
        assert!(report
            .violations
            .iter()
            .any(|v| v.condition == ViolatedCondition::RateBound(Side::A) && v.xi == vec![-1, 1]));
        assert!(report
            .violations
            .iter()
            .all(|v| v.condition != ViolatedCondition::Containment));
    }

    #[test]
    fn empty_matrix_relates_everything() {
        let (net, kin) = parse(nets::SIS);
        let rel = preorder(vec![], 2);
        let report = oracle_check_conditions(&net, &kin, &rel, &[2, 1], 4);
        assert!(report.violations.is_empty());
        assert_eq!(report.pairs_checked, report.box_states * report.box_states);
    }

    #[test]
    fn marginal_identity_exact_across_the_window() {
        let (net, kin) = parse(nets::SIS);
        let rel = preorder(vec![vec![0, 1]], 2);
        let states = enumerate_lattice_box(&net, &[2, 1], 8);
        let mut pairs = Vec::new();
        for x in &states {
            for y in &states {
                pairs.push((x.clone(), y.clone()));
            }
        }
        // The split at a boundary pair exercises both excess cases.
        pairs.push((vec![1, 1], vec![0, 2]));
        pairs.push((vec![1, 1], vec![1, 1]));
        assert!(marginal_rate_identity(&net, &kin, &rel, &pairs));
    }

    #[test]
    fn marginal_identity_rejects_broken_rates() {
        let (net, _) = parse(nets::SIS);
        let kin = KineticsPair::new(vec![q(5), q(1)], vec![q(1), q(1)]).unwrap();
        let rel = preorder(vec![vec![0, 1]], 2);
        let pairs = vec![(vec![1, 1], vec![1, 1])];
        assert!(!marginal_rate_identity(&net, &kin, &rel, &pairs));
    }

    #[test]
    fn coupled_marginals_track_plain_chains() {
        let (net, kin) = parse(nets::REV);
        let rel = preorder(vec![vec![0, 1]], 2);
        let coupled =
            simulate_coupled_batch(&net, &kin, &rel, &[3, 0], &[3, 0], 6.0, 21, 100_000, 400)
                .unwrap();
        let ssa_x = simulate_ssa_batch(&net, &kin.kx, &[3, 0], 6.0, 22, 100_000, 400);
        let ssa_y = simulate_ssa_batch(&net, &kin.ky, &[3, 0], 6.0, 23, 100_000, 400);
        let at = 5.0;
        for species in 0..2 {
            let cx: Vec<f64> = coupled
                .iter()
                .map(|tr| tr.pair_at(at).0[species] as f64)
                .collect();
            let px: Vec<f64> = ssa_x
                .iter()
                .map(|tr| tr.state_at(at)[species] as f64)
                .collect();
            assert!(
                stats::within_tolerance(&cx, &px, 4.0),
                "coupled first marginal drifted for species {species}"
            );
            let cy: Vec<f64> = coupled
                .iter()
                .map(|tr| tr.pair_at(at).1[species] as f64)
                .collect();
            let py: Vec<f64> = ssa_y
                .iter()
                .map(|tr| tr.state_at(at)[species] as f64)
                .collect();
            assert!(
                stats::within_tolerance(&cy, &py, 4.0),
                "coupled second marginal drifted for species {species}"
            );
        }
    }

    #[test]
    fn tsv_lines_have_five_fields() {
        let (net, kin) = parse(nets::REV);
        let rel = preorder(vec![vec![0, 1]], 2);
        let tr = simulate_coupled(&net, &kin, &rel, &[3, 0], &[3, 0], 2.0, 9, 1000).unwrap();
        let mut buf = Vec::new();
        tr.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), tr.events.len() + 1);
        for line in lines {
            assert_eq!(line.split('\t').count(), 5, "bad record: {line}");
        }
    }

    #[test]
    fn staircase_membership_detects_scaled_sublattices() {
        let basis = hermite_staircase(&[vec![2, -2, 0], vec![0, 2, -2]], 3);
        assert_eq!(basis.len(), 2);
        assert!(lattice_contains(&basis, &[2, -2, 0]));
        assert!(lattice_contains(&basis, &[2, 0, -2]));
        assert!(lattice_contains(&basis, &[0, 0, 0]));
        assert!(!lattice_contains(&basis, &[1, -1, 0]));
        assert!(!lattice_contains(&basis, &[2, -1, -1]));
    }
}
