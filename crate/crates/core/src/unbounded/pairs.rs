//! Resolving envy between a single pair of agents when every pool supply is
//! infinite.
//!
//! For a non-proportional pair there is always a fix: pick two items whose
//! value ratios differ between the agents and hand out copies so that the
//! envier gains strictly more (in its own eyes) than the envied, while the
//! envied values both handouts equally. For a proportional pair the
//! relative utility transfer is locked to the gcd grid of the envier's pool
//! values, so a fix exists iff some multiple of that gcd fits in the window
//! spanned by the two envy gaps.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::arith::{bezout_list, ceil_div_big, gcd_list};
use crate::error::{Error, Result};
use crate::model::{Extension, Instance};

use super::classes::vectors_proportional;

/// Two multisets of pool items with v'(x) = v'(y) + 1 under a class's
/// normalized values; handing one agent `x` and everyone else `y` shifts
/// that agent's relative utility up by exactly one unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitBundlePair {
    pub x: BTreeMap<String, BigUint>,
    pub y: BTreeMap<String, BigUint>,
}

/// Builds a unit bundle pair from values whose gcd is 1 (item ids given in
/// the same order as `values`).
pub fn unit_bundle_pair(values: &[u64], item_ids: &[String]) -> Result<UnitBundlePair> {
    let cert = bezout_list(values)?;
    if cert.d != 1 {
        return Err(Error::Certification(format!(
            "unit bundle pair needs gcd 1, got {}",
            cert.d
        )));
    }
    let mut x = BTreeMap::new();
    let mut y = BTreeMap::new();
    for (coeff, id) in cert.coefficients.iter().zip(item_ids) {
        if coeff.is_positive() {
            x.insert(id.clone(), coeff.to_biguint().unwrap());
        } else if coeff.is_negative() {
            y.insert(id.clone(), (-coeff).to_biguint().unwrap());
        }
    }
    Ok(UnitBundlePair { x, y })
}

/// How one envy edge between two agents gets resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairResolution {
    pub envier: String,
    pub envied: String,
    /// Copies handed to the envier, by item id.
    pub to_envier: BTreeMap<String, BigUint>,
    /// Copies handed to the envied, by item id.
    pub to_envied: BTreeMap<String, BigUint>,
    pub detail: ResolutionDetail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolutionDetail {
    NonProportional {
        /// Item handed to the envier (more valuable to it, relatively).
        item_for_envier: String,
        /// Item handed to the envied.
        item_for_envied: String,
        /// Envier's values for the two items.
        envier_values: (u64, u64),
        /// Envied's values for the two items.
        envied_values: (u64, u64),
        /// The envy gap being closed.
        gap: BigInt,
    },
    Proportional {
        /// The relative utility transfer, a multiple of `gcd`.
        target: BigInt,
        quotient: BigInt,
        gcd: u64,
    },
}

impl PairResolution {
    /// Folds the handouts into an extension.
    pub fn apply(&self, ext: &mut Extension) {
        for (item, count) in &self.to_envier {
            ext.add(&self.envier, item, count.clone());
        }
        for (item, count) in &self.to_envied {
            ext.add(&self.envied, item, count.clone());
        }
    }
}

fn require_infinite_supplies(inst: &Instance) -> Result<()> {
    if inst.pool_items.iter().any(|p| !p.supply.is_infinite()) {
        return Err(Error::ModeMismatch(
            "pair resolution requires infinite supplies".into(),
        ));
    }
    Ok(())
}

/// Finds a witness pair of pool items with differing value ratios between
/// the two vectors, or `None` if the vectors are proportional (or one is
/// zero).
fn ratio_witness(va: &[u64], vb: &[u64]) -> Option<(usize, usize)> {
    let pivot = (0..va.len()).find(|&i| va[i] != 0 || vb[i] != 0)?;
    for j in 0..va.len() {
        if (va[pivot] as u128) * (vb[j] as u128) != (va[j] as u128) * (vb[pivot] as u128) {
            return Some((pivot, j));
        }
    }
    None
}

/// Resolves the envy of `a` toward `b` for a non-proportional pair by
/// handing copies of one item to `a` and copies of another to `b`, such that
/// `a`'s gap drops to zero or below while `b`'s view of the two bundles is
/// unchanged. Runs in one scan over the pool.
pub fn resolve_pair_nonproportional(
    inst: &Instance,
    ext: &Extension,
    a: &str,
    b: &str,
) -> Result<PairResolution> {
    require_infinite_supplies(inst)?;
    let gap = inst.envy_gap(ext, a, b)?;
    if !gap.is_positive() {
        return Err(Error::NoEnvy);
    }
    let va = inst.pool_values_of(a);
    let vb = inst.pool_values_of(b);
    let (mut i, mut j) = ratio_witness(&va, &vb).ok_or(Error::PairProportional)?;
    // Orient so the first item is relatively more valuable to the envier:
    // va[i] * vb[j] > va[j] * vb[i].
    if (va[i] as u128) * (vb[j] as u128) < (va[j] as u128) * (vb[i] as u128) {
        std::mem::swap(&mut i, &mut j);
    }
    let gap_count = gap.to_biguint().expect("positive gap");
    // Per gap unit: vb[j] copies of item i to the envier, vb[i] copies of
    // item j to the envied. The envier nets va[i]*vb[j] - va[j]*vb[i] >= 1
    // per unit; the envied values both handouts at vb[i]*vb[j].
    let mut to_envier = BTreeMap::new();
    let envier_count = &gap_count * BigUint::from(vb[j]);
    if !envier_count.is_zero() {
        to_envier.insert(inst.pool_items[i].id.clone(), envier_count);
    }
    let mut to_envied = BTreeMap::new();
    let envied_count = &gap_count * BigUint::from(vb[i]);
    if !envied_count.is_zero() {
        to_envied.insert(inst.pool_items[j].id.clone(), envied_count);
    }
    let resolution = PairResolution {
        envier: a.to_string(),
        envied: b.to_string(),
        to_envier,
        to_envied,
        detail: ResolutionDetail::NonProportional {
            item_for_envier: inst.pool_items[i].id.clone(),
            item_for_envied: inst.pool_items[j].id.clone(),
            envier_values: (va[i], va[j]),
            envied_values: (vb[i], vb[j]),
            gap: gap.clone(),
        },
    };

    let mut merged = ext.clone();
    resolution.apply(&mut merged);
    if inst.envy_gap(&merged, a, b)?.is_positive() {
        return Err(Error::Certification(
            "pair resolution left the envier envious".into(),
        ));
    }
    if inst.envy_gap(&merged, b, a)? != inst.envy_gap(ext, b, a)? {
        return Err(Error::Certification(
            "pair resolution changed the envied agent's view".into(),
        ));
    }
    Ok(resolution)
}

/// Outcome of the divisibility test for a proportional pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProportionalCheck {
    pub feasible: bool,
    /// Lower end of the window: the envier's initial gap.
    pub lower: BigInt,
    /// Upper end: -alpha * (envied's initial gap), evaluated exactly.
    pub upper: BigRational,
    /// gcd of the envier's pool values.
    pub gcd: u64,
    /// Smallest multiple of `gcd` at or above `lower`, when it fits below
    /// `upper`.
    pub target: Option<BigInt>,
}

/// Decides whether the envy of `a` toward `b` can be resolved when
/// v_a = alpha * v_b over the pool: possible iff some multiple of
/// gcd(v_a over the pool) lies in [gap(a,b), -alpha * gap(b,a)].
pub fn pair_proportional_feasible(inst: &Instance, a: &str, b: &str) -> Result<ProportionalCheck> {
    require_infinite_supplies(inst)?;
    let va = inst.pool_values_of(a);
    let vb = inst.pool_values_of(b);
    if va.iter().all(|&v| v == 0) {
        return Err(Error::ZeroVector);
    }
    if !vectors_proportional(&va, &vb) {
        return Err(Error::PairNotProportional);
    }
    let gap_ab = inst.initial_gap(a, b);
    if gap_ab <= 0 {
        return Err(Error::NoEnvy);
    }
    let gap_ba = inst.initial_gap(b, a);
    let pivot = va.iter().position(|&v| v != 0).unwrap();
    let alpha = BigRational::new(BigInt::from(va[pivot]), BigInt::from(vb[pivot]));
    let lower = BigInt::from(gap_ab);
    let upper = -alpha * BigRational::from(BigInt::from(gap_ba));
    let d = gcd_list(&va)?;
    let quotient = ceil_div_big(&lower, &BigInt::from(d))?;
    let candidate = quotient * BigInt::from(d);
    let feasible = BigRational::from(candidate.clone()) <= upper;
    Ok(ProportionalCheck {
        feasible,
        lower,
        upper,
        gcd: d,
        target: feasible.then_some(candidate),
    })
}

/// Builds the extension realizing a transfer `target` (a multiple of the
/// envier's pool gcd) between a proportional pair: Bézout coefficients are
/// scaled by target/gcd and split into nonnegative handouts for the two
/// agents. Both resulting gaps are verified to be non-positive.
pub fn pair_proportional_construct(
    inst: &Instance,
    a: &str,
    b: &str,
    target: &BigInt,
) -> Result<PairResolution> {
    require_infinite_supplies(inst)?;
    let va = inst.pool_values_of(a);
    if va.iter().all(|&v| v == 0) {
        return Err(Error::ZeroVector);
    }
    let d = gcd_list(&va)?;
    let (quotient, rem) = num_integer::Integer::div_mod_floor(target, &BigInt::from(d));
    if !rem.is_zero() {
        return Err(Error::NotDivisible {
            target: target.to_string(),
            gcd: d,
        });
    }
    let cert = bezout_list(&va)?;
    let mut to_envier = BTreeMap::new();
    let mut to_envied = BTreeMap::new();
    for (coeff, item) in cert.coefficients.iter().zip(&inst.pool_items) {
        let scaled = &quotient * coeff;
        if scaled.is_positive() {
            to_envier.insert(item.id.clone(), scaled.to_biguint().unwrap());
        } else if scaled.is_negative() {
            to_envied.insert(item.id.clone(), (-scaled).to_biguint().unwrap());
        }
    }
    let resolution = PairResolution {
        envier: a.to_string(),
        envied: b.to_string(),
        to_envier,
        to_envied,
        detail: ResolutionDetail::Proportional {
            target: target.clone(),
            quotient,
            gcd: d,
        },
    };

    let mut merged = Extension::new();
    resolution.apply(&mut merged);
    if inst.envy_gap(&merged, a, b)?.is_positive() || inst.envy_gap(&merged, b, a)?.is_positive() {
        return Err(Error::Certification(
            "proportional resolution left envy in place".into(),
        ));
    }
    Ok(resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::unit_gap_even_pool;
    use crate::model::{InstanceBuilder, Supply};

    /// Non-proportional pair: v_a = (3, 1), v_b = (1, 1), b holds an item a
    /// values at 2.
    fn skewed_pair() -> Instance {
        InstanceBuilder::new(["a", "b"])
            .initial_item("p", &[("a", 2)], Some("b"))
            .pool_item("r1", Supply::Infinite, &[("a", 3), ("b", 1)])
            .pool_item("r2", Supply::Infinite, &[("a", 1), ("b", 1)])
            .build()
            .unwrap()
    }

    #[test]
    fn nonproportional_resolution_closes_the_gap() {
        let inst = skewed_pair();
        let ext = Extension::new();
        let res = resolve_pair_nonproportional(&inst, &ext, "a", "b").unwrap();
        assert_eq!(res.to_envier[&"r1".to_string()], BigUint::from(2u32));
        assert_eq!(res.to_envied[&"r2".to_string()], BigUint::from(2u32));

        let mut merged = ext.clone();
        res.apply(&mut merged);
        assert_eq!(inst.envy_gap(&merged, "a", "b").unwrap(), BigInt::from(-2));
        // The envied agent's view of the two bundles is unchanged.
        assert_eq!(
            inst.envy_gap(&merged, "b", "a").unwrap(),
            inst.envy_gap(&ext, "b", "a").unwrap()
        );
    }

    #[test]
    fn nonproportional_unit_gap_unit_margin() {
        // gap 1 and per-copy margin 1: exactly vb[j] copies of r1 and vb[i]
        // of r2 close the gap to 0.
        let inst = InstanceBuilder::new(["a", "b"])
            .initial_item("p", &[("a", 1), ("b", 1)], Some("b"))
            .pool_item("r1", Supply::Infinite, &[("a", 2), ("b", 1)])
            .pool_item("r2", Supply::Infinite, &[("a", 1), ("b", 1)])
            .build()
            .unwrap();
        let res = resolve_pair_nonproportional(&inst, &Extension::new(), "a", "b").unwrap();
        let mut merged = Extension::new();
        res.apply(&mut merged);
        assert_eq!(res.to_envier[&"r1".to_string()], BigUint::from(1u32));
        assert_eq!(res.to_envied[&"r2".to_string()], BigUint::from(1u32));
        assert_eq!(inst.envy_gap(&merged, "a", "b").unwrap(), BigInt::zero());
        assert_eq!(inst.envy_gap(&merged, "b", "a").unwrap(), BigInt::from(-1));
    }

    #[test]
    fn nonproportional_requires_envy() {
        let inst = skewed_pair();
        assert_eq!(
            resolve_pair_nonproportional(&inst, &Extension::new(), "b", "a"),
            Err(Error::NoEnvy)
        );
    }

    #[test]
    fn nonproportional_rejects_proportional_pairs() {
        let inst = unit_gap_even_pool();
        assert_eq!(
            resolve_pair_nonproportional(&inst, &Extension::new(), "a1", "a2"),
            Err(Error::PairProportional)
        );
    }

    #[test]
    fn proportional_feasibility_window() {
        // Unit gap, single even item: window [1, 1], gcd 2 -> infeasible.
        let inst = unit_gap_even_pool();
        let check = pair_proportional_feasible(&inst, "a1", "a2").unwrap();
        assert!(!check.feasible);
        assert_eq!(check.lower, BigInt::from(1));
        assert_eq!(check.upper, BigRational::from(BigInt::from(1)));
        assert_eq!(check.gcd, 2);
        assert_eq!(check.target, None);

        // Same window with pool values (2, 3): gcd 1 -> feasible at T = 1.
        let inst = InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 1), ("a2", 1)], Some("a2"))
            .pool_item("r1", Supply::Infinite, &[("a1", 2), ("a2", 2)])
            .pool_item("r2", Supply::Infinite, &[("a1", 3), ("a2", 3)])
            .build()
            .unwrap();
        let check = pair_proportional_feasible(&inst, "a1", "a2").unwrap();
        assert!(check.feasible);
        assert_eq!(check.gcd, 1);
        assert_eq!(check.target, Some(BigInt::from(1)));

        // Gap 2 against a single value-2 item: window [2, 2], gcd 2 -> T = 2.
        let inst = InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 2), ("a2", 2)], Some("a2"))
            .pool_item("r1", Supply::Infinite, &[("a1", 2), ("a2", 2)])
            .build()
            .unwrap();
        let check = pair_proportional_feasible(&inst, "a1", "a2").unwrap();
        assert!(check.feasible);
        assert_eq!(check.target, Some(BigInt::from(2)));
    }

    #[test]
    fn proportional_feasible_rejects_zero_vector_and_nonproportional() {
        let inst = InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 1)], Some("a2"))
            .pool_item("r1", Supply::Infinite, &[("a2", 1)])
            .build()
            .unwrap();
        assert_eq!(
            pair_proportional_feasible(&inst, "a1", "a2"),
            Err(Error::ZeroVector)
        );

        let inst = skewed_pair();
        assert_eq!(
            pair_proportional_feasible(&inst, "a", "b"),
            Err(Error::PairNotProportional)
        );
    }

    #[test]
    fn proportional_construct_examples() {
        // Pool (2, 3), T = 1: Bézout gives -1*2 + 1*3 = 1, so the envier
        // receives r2 and the envied receives r1; both gaps land on 0.
        let inst = InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 1), ("a2", 1)], Some("a2"))
            .pool_item("r1", Supply::Infinite, &[("a1", 2), ("a2", 2)])
            .pool_item("r2", Supply::Infinite, &[("a1", 3), ("a2", 3)])
            .build()
            .unwrap();
        let res = pair_proportional_construct(&inst, "a1", "a2", &BigInt::from(1)).unwrap();
        assert_eq!(res.to_envier[&"r2".to_string()], BigUint::from(1u32));
        assert_eq!(res.to_envied[&"r1".to_string()], BigUint::from(1u32));
        let mut ext = Extension::new();
        res.apply(&mut ext);
        assert_eq!(inst.envy_gap(&ext, "a1", "a2").unwrap(), BigInt::zero());
        assert_eq!(inst.envy_gap(&ext, "a2", "a1").unwrap(), BigInt::zero());

        // Single item of value 2, T = 2: the envier gets one copy.
        let inst = InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 2), ("a2", 2)], Some("a2"))
            .pool_item("r1", Supply::Infinite, &[("a1", 2), ("a2", 2)])
            .build()
            .unwrap();
        let res = pair_proportional_construct(&inst, "a1", "a2", &BigInt::from(2)).unwrap();
        assert_eq!(res.to_envier[&"r1".to_string()], BigUint::from(1u32));
        assert!(res.to_envied.is_empty());

        // T = 0 on an envy-free pair: empty resolution.
        let inst = InstanceBuilder::new(["a1", "a2"])
            .pool_item("r1", Supply::Infinite, &[("a1", 2), ("a2", 2)])
            .build()
            .unwrap();
        let res = pair_proportional_construct(&inst, "a1", "a2", &BigInt::zero()).unwrap();
        assert!(res.to_envier.is_empty());
        assert!(res.to_envied.is_empty());
    }

    #[test]
    fn proportional_construct_rejects_indivisible_target() {
        let inst = unit_gap_even_pool();
        assert_eq!(
            pair_proportional_construct(&inst, "a1", "a2", &BigInt::from(3)),
            Err(Error::NotDivisible {
                target: "3".into(),
                gcd: 2
            })
        );
    }

    #[test]
    fn unit_bundle_pair_shifts_by_one() {
        let ids = vec!["r1".to_string(), "r2".to_string()];
        let pair = unit_bundle_pair(&[2, 3], &ids).unwrap();
        let val = |bundle: &BTreeMap<String, BigUint>| -> BigInt {
            let mut total = BigInt::zero();
            for (id, count) in bundle {
                let v = if id == "r1" { 2 } else { 3 };
                total += BigInt::from(count.clone()) * BigInt::from(v);
            }
            total
        };
        assert_eq!(val(&pair.x) - val(&pair.y), BigInt::from(1));
        assert!(unit_bundle_pair(&[2, 4], &ids).is_err());
    }
}
