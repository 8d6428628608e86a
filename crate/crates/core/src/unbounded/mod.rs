//! Polynomial-time decision procedure for instances where every pool item
//! has infinite supply and the budget is unlimited.
//!
//! The solve runs in two phases after a pre-check:
//!
//! * Pre-check: an agent valuing every pool item at zero has a frozen
//!   perception, so any initial envy by such an agent is final.
//! * Phase 1 handles each class of agents with pairwise-proportional pool
//!   valuations. After dividing out per-agent gcds all members share one
//!   normalized value vector with gcd 1, so relative utilities can be
//!   shifted in exact integer steps; whether every rounded pairwise gap can
//!   be covered is a difference-constraint system, solved by shortest paths
//!   with negative-cycle detection. A solution is realized with a pair of
//!   bundles whose normalized values differ by exactly one.
//! * Phase 2 eliminates the remaining (cross-class) envy edge by edge. Each
//!   edge is closed with a two-item handout that the envied agent values
//!   equally on both sides, and every bystander receives whichever side it
//!   values at least as much, so no new envy appears and the edge count
//!   strictly decreases.

mod classes;
mod constraints;
mod pairs;

pub use classes::{
    normalize_class, proportional_classes, vectors_proportional, EquivalenceClass, NormalizedClass,
};
pub use constraints::{DifferenceConstraint, DifferenceConstraintSystem};
pub use pairs::{
    pair_proportional_construct, pair_proportional_feasible, resolve_pair_nonproportional,
    unit_bundle_pair, PairResolution, ProportionalCheck, ResolutionDetail, UnitBundlePair,
};

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{Signed, Zero};

use crate::arith::ceil_div_big;
use crate::error::{Error, Result};
use crate::model::{Extension, Instance, Supply, Verdict, Witness};

/// Result of phase 1 on a single class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Phase1Outcome {
    /// Partial extension leaving the class internally envy-free.
    Resolved(Extension),
    /// The class's difference constraints contain a positive-sum cycle.
    Infeasible(Witness),
}

/// Resolves all envy inside one (non-zero) proportionality class, or proves
/// it impossible.
///
/// For every ordered member pair the constraint `x_a - x_b >= gap'(a, b)`
/// is posted (including pairs with non-positive rounded gaps, so the
/// constructed extension cannot introduce new intra-class envy). A solution
/// `z` is realized by handing `z_a` copies of the unit bundle `x` to each
/// member `a` and `z_a` copies of `y` to every other member.
pub fn phase1_class(inst: &Instance, norm: &NormalizedClass) -> Result<Phase1Outcome> {
    let members = &norm.class.members;
    let mut system = DifferenceConstraintSystem::new(members.iter().cloned());
    for ((a, b), &gap) in &norm.gap_matrix {
        system.require_min_difference(a, b, gap);
    }
    let solution = match system.solve() {
        Ok(solution) => solution,
        Err(cycle) => {
            // The witness must stand on its own: the rounded gaps along the
            // cycle have to sum to a positive number.
            let mut total: i128 = 0;
            for i in 0..cycle.len() {
                let pair = (cycle[i].clone(), cycle[(i + 1) % cycle.len()].clone());
                total += norm.gap_matrix[&pair];
            }
            if total <= 0 {
                return Err(Error::Certification(format!(
                    "extracted cycle sums to {total}, not a valid witness"
                )));
            }
            return Ok(Phase1Outcome::Infeasible(Witness::NegativeCycle {
                class_members: members.clone(),
                cycle,
            }));
        }
    };

    let mut ext = Extension::new();
    if solution.values().all(|&z| z == 0) {
        return Ok(Phase1Outcome::Resolved(ext));
    }
    let item_ids: Vec<String> = inst.pool_items.iter().map(|p| p.id.clone()).collect();
    let unit = unit_bundle_pair(&norm.normalized_values, &item_ids)?;
    for member in members {
        let z = solution[member];
        if z == 0 {
            continue;
        }
        let z = BigUint::from(u128::try_from(z).expect("solution values are nonnegative"));
        for (item, count) in &unit.x {
            ext.add(member, item, count * &z);
        }
        for other in members {
            if other == member {
                continue;
            }
            for (item, count) in &unit.y {
                ext.add(other, item, count * &z);
            }
        }
    }
    Ok(Phase1Outcome::Resolved(ext))
}

/// Value of a handout bundle in `viewer`'s eyes.
fn handout_value(inst: &Instance, viewer: &str, bundle: &BTreeMap<String, BigUint>) -> BigUint {
    let mut total = BigUint::zero();
    for (item, count) in bundle {
        let idx = inst.pool_index(item).expect("handout uses pool items");
        total += count * BigUint::from(inst.pool_value(viewer, idx));
    }
    total
}

/// The two handout bundles closing the envy edge (a, b): one for the envier
/// and one for the envied. For a non-proportional pair these come from the
/// two-item construction; if the envied agent values the whole pool at zero
/// the envier is simply topped up with its most valued item and the envied
/// side stays empty (the envied agent's perception cannot change anyway).
fn edge_handouts(
    inst: &Instance,
    ext: &Extension,
    envier: &str,
    envied: &str,
) -> Result<(BTreeMap<String, BigUint>, BTreeMap<String, BigUint>)> {
    if inst.all_zero_pool_values(envied) {
        let gap = inst.envy_gap(ext, envier, envied)?;
        if !gap.is_positive() {
            return Err(Error::NoEnvy);
        }
        let values = inst.pool_values_of(envier);
        let (best_idx, &best_value) = values
            .iter()
            .enumerate()
            .max_by(|(i, x), (j, y)| x.cmp(y).then(j.cmp(i)))
            .expect("nonempty pool");
        if best_value == 0 {
            // Both sides value the pool at zero; the pre-check rules this
            // situation out before phase 2 runs.
            return Err(Error::ZeroVector);
        }
        let copies = ceil_div_big(&gap, &BigInt::from(best_value))?
            .to_biguint()
            .expect("positive copy count");
        let mut to_envier = BTreeMap::new();
        to_envier.insert(inst.pool_items[best_idx].id.clone(), copies);
        return Ok((to_envier, BTreeMap::new()));
    }
    let resolution = resolve_pair_nonproportional(inst, ext, envier, envied)?;
    Ok((resolution.to_envier, resolution.to_envied))
}

/// Phase 2: repeatedly closes the lexicographically first remaining envy
/// edge. The envier and the envied receive their designated bundles; every
/// bystander receives whichever of the two bundles it values at least as
/// much, ties toward the envier's bundle. Returns the final extension and
/// the envy-edge counts observed before each iteration (ending with the
/// final zero).
pub fn phase2_traced(inst: &Instance, ext: Extension) -> Result<(Extension, Vec<usize>)> {
    let mut ext = ext;
    let mut trace = Vec::new();
    let max_iterations = inst.agents.len() * inst.agents.len();
    loop {
        let graph = inst.envy_graph(&ext)?;
        trace.push(graph.edges.len());
        if graph.is_edgeless() {
            return Ok((ext, trace));
        }
        if trace.len() > max_iterations {
            return Err(Error::Certification(
                "phase 2 exceeded its iteration bound".into(),
            ));
        }
        let edge = &graph.edges[0];
        let (to_envier, to_envied) = edge_handouts(inst, &ext, &edge.envier, &edge.envied)?;
        for agent in &inst.agents {
            let bundle = if agent == &edge.envier {
                &to_envier
            } else if agent == &edge.envied {
                &to_envied
            } else if handout_value(inst, agent, &to_envier)
                >= handout_value(inst, agent, &to_envied)
            {
                &to_envier
            } else {
                &to_envied
            };
            for (item, count) in bundle {
                ext.add(agent, item, count.clone());
            }
        }
    }
}

/// [`phase2_traced`] without the trace.
pub fn phase2(inst: &Instance, ext: Extension) -> Result<Extension> {
    phase2_traced(inst, ext).map(|(ext, _)| ext)
}

/// Decides the all-supplies-infinite, unlimited-budget case and returns a
/// certified extension or a checkable witness of impossibility.
pub fn solve_unbounded(inst: &Instance) -> Result<Verdict> {
    if inst.pool_items.is_empty() {
        return Err(Error::ModeMismatch("instance has no pool items".into()));
    }
    if inst.budget != Supply::Infinite {
        return Err(Error::ModeMismatch(
            "unbounded solver requires an infinite budget".into(),
        ));
    }
    if inst.pool_items.iter().any(|p| !p.supply.is_infinite()) {
        return Err(Error::ModeMismatch(
            "unbounded solver requires infinite supplies".into(),
        ));
    }

    // Agents valuing the whole pool at zero never change their mind about
    // any bundle; initial envy by them is final.
    for agent in &inst.agents {
        if !inst.all_zero_pool_values(agent) {
            continue;
        }
        for other in &inst.agents {
            if agent != other && inst.initial_gap(agent, other) > 0 {
                return Ok(Verdict::infeasible(Witness::ZeroValueEnvy {
                    agent: agent.clone(),
                    envied: other.clone(),
                }));
            }
        }
    }

    let mut ext = Extension::new();
    for class in proportional_classes(inst)? {
        if class.is_zero_class {
            continue;
        }
        let norm = normalize_class(inst, &class)?;
        match phase1_class(inst, &norm)? {
            Phase1Outcome::Resolved(partial) => ext.merge(&partial),
            Phase1Outcome::Infeasible(witness) => return Ok(Verdict::infeasible(witness)),
        }
    }
    let ext = phase2(inst, ext)?;
    Verdict::feasible_checked(inst, ext)
}
