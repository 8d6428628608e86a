//! Partitioning agents into proportionality classes over the pool, and
//! gcd-normalization of a class.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::arith::{ceil_div, gcd_list};
use crate::error::{Error, Result};
use crate::model::Instance;

/// Agents whose pool valuations are positive rational multiples of each
/// other. Agents valuing every pool item at zero form one dedicated class
/// (`is_zero_class`), since the zero vector is proportional to no nonzero
/// vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    /// Members in instance agent order; the first member is the
    /// representative.
    pub members: Vec<String>,
    /// alpha per member such that v_member = alpha * v_representative over
    /// the pool; 1 for the representative, empty for the zero class.
    pub factor_to_representative: BTreeMap<String, BigRational>,
    pub is_zero_class: bool,
}

impl EquivalenceClass {
    pub fn representative(&self) -> &str {
        &self.members[0]
    }

    pub fn contains(&self, agent: &str) -> bool {
        self.members.iter().any(|m| m.as_str() == agent)
    }
}

/// Exact proportionality test via cross products; no rationals are built.
/// Zero vectors are proportional only to each other.
pub fn vectors_proportional(va: &[u64], vb: &[u64]) -> bool {
    let a_zero = va.iter().all(|&v| v == 0);
    let b_zero = vb.iter().all(|&v| v == 0);
    if a_zero || b_zero {
        return a_zero && b_zero;
    }
    let pivot = va.iter().position(|&v| v != 0).unwrap();
    if vb[pivot] == 0 {
        return false;
    }
    va.iter()
        .zip(vb)
        .all(|(&x, &y)| (va[pivot] as u128) * (y as u128) == (x as u128) * (vb[pivot] as u128))
}

/// Partitions the agents of `inst` into proportionality classes over the
/// pool. Requires at least one pool item.
pub fn proportional_classes(inst: &Instance) -> Result<Vec<EquivalenceClass>> {
    if inst.pool_items.is_empty() {
        return Err(Error::ModeMismatch("instance has no pool items".into()));
    }
    let mut classes: Vec<EquivalenceClass> = Vec::new();
    let mut vectors: Vec<Vec<u64>> = Vec::new();
    for agent in &inst.agents {
        let values = inst.pool_values_of(agent);
        let is_zero = values.iter().all(|&v| v == 0);
        let mut joined = false;
        for (class, rep_values) in classes.iter_mut().zip(&vectors) {
            if class.is_zero_class != is_zero {
                continue;
            }
            if is_zero || vectors_proportional(&values, rep_values) {
                if !is_zero {
                    let pivot = rep_values.iter().position(|&v| v != 0).unwrap();
                    let alpha = BigRational::new(
                        BigInt::from(values[pivot]),
                        BigInt::from(rep_values[pivot]),
                    );
                    class.factor_to_representative.insert(agent.clone(), alpha);
                }
                class.members.push(agent.clone());
                joined = true;
                break;
            }
        }
        if !joined {
            let mut factors = BTreeMap::new();
            if !is_zero {
                factors.insert(agent.clone(), BigRational::from(BigInt::from(1)));
            }
            classes.push(EquivalenceClass {
                members: vec![agent.clone()],
                factor_to_representative: factors,
                is_zero_class: is_zero,
            });
            vectors.push(values);
        }
    }
    Ok(classes)
}

/// A non-zero class with per-agent gcds taken out of the pool valuations.
/// All members share `normalized_values`, whose gcd is 1, and the rounded
/// gap matrix states how much relative (normalized) utility each ordered
/// pair needs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizedClass {
    pub class: EquivalenceClass,
    pub d_per_agent: BTreeMap<String, u64>,
    /// Shared normalized pool values in pool order.
    pub normalized_values: Vec<u64>,
    /// (a, b) -> ceil(initial_gap(a, b) / d_a) for ordered member pairs.
    pub gap_matrix: BTreeMap<(String, String), i128>,
}

/// Normalizes a non-zero class: divides each member's pool values by its
/// gcd (the results must coincide across members) and rounds each pairwise
/// initial gap up to the member's gcd grid.
pub fn normalize_class(inst: &Instance, class: &EquivalenceClass) -> Result<NormalizedClass> {
    if class.is_zero_class {
        return Err(Error::ModeMismatch(
            "zero class cannot be normalized".into(),
        ));
    }
    let mut d_per_agent = BTreeMap::new();
    let mut normalized_values: Option<Vec<u64>> = None;
    for member in &class.members {
        let values = inst.pool_values_of(member);
        let d = gcd_list(&values)?;
        let scaled: Vec<u64> = values.iter().map(|&v| v / d).collect();
        match &normalized_values {
            None => normalized_values = Some(scaled),
            Some(existing) => {
                if *existing != scaled {
                    return Err(Error::Certification(format!(
                        "members of one class disagree on normalized values ({member})"
                    )));
                }
            }
        }
        d_per_agent.insert(member.clone(), d);
    }
    let normalized_values = normalized_values.expect("class has at least one member");
    debug_assert_eq!(gcd_list(&normalized_values), Ok(1));

    let mut gap_matrix = BTreeMap::new();
    for a in &class.members {
        for b in &class.members {
            if a == b {
                continue;
            }
            let gap = inst.initial_gap(a, b);
            let rounded = ceil_div(gap, d_per_agent[a] as i128)?;
            gap_matrix.insert((a.clone(), b.clone()), rounded);
        }
    }
    Ok(NormalizedClass {
        class: class.clone(),
        d_per_agent,
        normalized_values,
        gap_matrix,
    })
}
