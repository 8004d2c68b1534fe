//! Random kinetics generators for round-trip testing: pairs that satisfy a
//! constraint system, and single-constant perturbations that break exactly
//! one constraint.

use num::{BigRational, One};
use rand::Rng;
use srn_order_core::network::{KineticsPair, ReactionNetwork};
use srn_order_core::order::RateConstraint;

fn random_rate<R: Rng>(rng: &mut R) -> BigRational {
    let num = rng.gen_range(1i64..=8);
    let den = rng.gen_range(1i64..=4);
    BigRational::new(num.into(), den.into())
}

/// Draws one rate-constant pair per reaction satisfying the given
/// constraints: `Le` keeps the X constant at or below the Y constant,
/// `Ge` the reverse, `Eq` draws a single shared value, `Free` draws the
/// two independently. All constants are strictly positive.
pub fn sample_compliant_kinetics<R: Rng>(
    net: &ReactionNetwork,
    constraints: &[RateConstraint],
    rng: &mut R,
) -> KineticsPair {
    assert_eq!(constraints.len(), net.reactions.len());
    let mut kx = Vec::with_capacity(constraints.len());
    let mut ky = Vec::with_capacity(constraints.len());
    for &c in constraints {
        match c {
            RateConstraint::Free => {
                kx.push(random_rate(rng));
                ky.push(random_rate(rng));
            }
            RateConstraint::Eq => {
                let v = random_rate(rng);
                kx.push(v.clone());
                ky.push(v);
            }
            RateConstraint::Le => {
                let a = random_rate(rng);
                let b = random_rate(rng);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                kx.push(lo);
                ky.push(hi);
            }
            RateConstraint::Ge => {
                let a = random_rate(rng);
                let b = random_rate(rng);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                kx.push(hi);
                ky.push(lo);
            }
        }
    }
    KineticsPair::new(kx, ky).expect("sampled constants are positive")
}

/// Starts from the all-ones kinetics (which satisfies every constraint
/// system) and bumps a single constant of the target reaction so that
/// exactly its constraint is violated. Returns `None` when the target is
/// unconstrained.
pub fn negative_control(
    net: &ReactionNetwork,
    constraints: &[RateConstraint],
    target: usize,
) -> Option<KineticsPair> {
    assert_eq!(constraints.len(), net.reactions.len());
    let one = BigRational::one;
    let mut kx = vec![one(); constraints.len()];
    let mut ky = vec![one(); constraints.len()];
    let two = BigRational::from_integer(2.into());
    match constraints[target] {
        RateConstraint::Free => return None,
        RateConstraint::Le | RateConstraint::Eq => kx[target] = two,
        RateConstraint::Ge => ky[target] = two,
    }
    Some(KineticsPair::new(kx, ky).expect("constants are positive"))
}
