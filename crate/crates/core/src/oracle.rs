//! Ground-truth oracle: exhaustive enumeration of all valid extensions up
//! to a size bound.
//!
//! Only meant for desk-scale instances; the caller-supplied cap bounds the
//! number of complete extensions that get checked.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::model::{Extension, Instance, Supply, Verdict, Witness};

/// Default bound on the number of enumerated extensions.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

struct Enumerator<'a> {
    inst: &'a Instance,
    /// (agent index, item index) in lexicographic agent-id order, items in
    /// pool order.
    pairs: Vec<(usize, usize)>,
    pool_values: Vec<Vec<u64>>,
    gaps: Vec<i128>,
    supply_left: Vec<u64>,
    counts: Vec<u64>,
    states: u64,
    cap: u64,
}

impl<'a> Enumerator<'a> {
    fn new(inst: &'a Instance, k: u64, cap: u64) -> Enumerator<'a> {
        let n = inst.agents.len();
        let m = inst.pool_items.len();
        let mut agent_order: Vec<usize> = (0..n).collect();
        agent_order.sort_by(|&x, &y| inst.agents[x].cmp(&inst.agents[y]));
        let pairs: Vec<(usize, usize)> = agent_order
            .iter()
            .flat_map(|&a| (0..m).map(move |r| (a, r)))
            .collect();
        let pool_values: Vec<Vec<u64>> =
            inst.agents.iter().map(|a| inst.pool_values_of(a)).collect();
        let mut gaps = vec![0i128; n * n];
        for (i, a) in inst.agents.iter().enumerate() {
            for (j, b) in inst.agents.iter().enumerate() {
                if i != j {
                    gaps[i * n + j] = inst.initial_gap(a, b);
                }
            }
        }
        let supply_left = inst
            .pool_items
            .iter()
            .map(|p| p.supply.finite().unwrap_or(u64::MAX).min(k))
            .collect();
        Enumerator {
            inst,
            pairs,
            pool_values,
            gaps,
            supply_left,
            counts: vec![0; n * m],
            states: 0,
            cap,
        }
    }

    fn envy_free(&self) -> bool {
        self.gaps.iter().all(|&g| g <= 0)
    }

    fn shift(&mut self, agent: usize, item: usize, copies: i128) {
        let n = self.inst.agents.len();
        for x in 0..n {
            if x == agent {
                continue;
            }
            let gain_seen_by_x = copies
                .checked_mul(self.pool_values[x][item] as i128)
                .expect("gap overflow");
            self.gaps[x * n + agent] += gain_seen_by_x;
            let own_gain = copies
                .checked_mul(self.pool_values[agent][item] as i128)
                .expect("gap overflow");
            self.gaps[agent * n + x] -= own_gain;
        }
    }

    /// Distributes exactly `remaining` copies over pairs[idx..];
    /// lexicographic over the count vectors.
    fn place(&mut self, idx: usize, remaining: u64) -> Result<bool> {
        if idx == self.pairs.len() {
            if remaining > 0 {
                return Ok(false);
            }
            self.states += 1;
            if self.states > self.cap {
                return Err(Error::CapExceeded(self.cap));
            }
            return Ok(self.envy_free());
        }
        let (agent, item) = self.pairs[idx];
        let here_max = remaining.min(self.supply_left[item]);
        for c in 0..=here_max {
            if c > 0 {
                self.supply_left[item] -= 1;
                self.shift(agent, item, 1);
                self.counts[agent * self.inst.pool_items.len() + item] += 1;
            }
            if self.place(idx + 1, remaining - c)? {
                return Ok(true);
            }
        }
        // Undo the whole run of assignments for this pair.
        if here_max > 0 {
            self.supply_left[item] += here_max;
            self.shift(agent, item, -(here_max as i128));
            self.counts[agent * self.inst.pool_items.len() + item] -= here_max;
        }
        Ok(false)
    }

    fn extension(&self) -> Extension {
        let m = self.inst.pool_items.len();
        let mut ext = Extension::new();
        for (i, a) in self.inst.agents.iter().enumerate() {
            for (r, item) in self.inst.pool_items.iter().enumerate() {
                let c = self.counts[i * m + r];
                if c > 0 {
                    ext.add(a, &item.id, BigUint::from(c));
                }
            }
        }
        ext
    }
}

/// Enumerates every valid extension of size at most `k` in ascending size
/// order and returns the first envy-free one (thus one of minimum size),
/// or a search-exhausted witness. Errors once more than `cap` complete
/// extensions have been checked.
pub fn oracle_bounded(inst: &Instance, k: u64, cap: u64) -> Result<Verdict> {
    let k = match inst.budget {
        Supply::Finite(budget) => k.min(budget),
        Supply::Infinite => k,
    };
    let mut enumerator = Enumerator::new(inst, k, cap);
    for size in 0..=k {
        if enumerator.place(0, size)? {
            let ext = enumerator.extension();
            debug_assert_eq!(ext.size(), BigUint::from(size));
            return Verdict::feasible_checked(inst, ext);
        }
    }
    Ok(Verdict::infeasible(Witness::SearchExhausted {
        detail: format!("all extensions of size at most {k} enumerated"),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::testutil::unit_gap_even_pool;
    use crate::model::InstanceBuilder;

    #[test]
    fn no_envy_and_zero_budget_is_feasible() {
        let inst = InstanceBuilder::new(["a1", "a2"])
            .pool_item("r1", Supply::Finite(1), &[("a1", 1), ("a2", 1)])
            .build()
            .unwrap();
        let verdict = oracle_bounded(&inst, 0, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(verdict.extension().unwrap().is_empty());
    }

    #[test]
    fn single_copy_fix_is_found() {
        let inst = InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 1), ("a2", 1)], Some("a2"))
            .pool_item("r1", Supply::Finite(1), &[("a1", 1), ("a2", 1)])
            .build()
            .unwrap();
        let verdict = oracle_bounded(&inst, 1, DEFAULT_ENUMERATION_CAP).unwrap();
        let ext = verdict.extension().expect("feasible");
        assert_eq!(ext.get("a1", "r1"), BigUint::from(1u32));
        assert_eq!(ext.size(), BigUint::from(1u32));
    }

    #[test]
    fn unit_gap_even_pool_is_infeasible_at_any_small_size() {
        let inst = unit_gap_even_pool();
        for k in 0..=4 {
            let verdict = oracle_bounded(&inst, k, DEFAULT_ENUMERATION_CAP).unwrap();
            assert!(!verdict.is_feasible(), "k = {k}");
            assert!(matches!(
                verdict.witness(),
                Some(Witness::SearchExhausted { .. })
            ));
        }
    }

    #[test]
    fn minimum_size_witness() {
        // Gap of 2 against unit-value copies: minimum fix has size 2.
        let inst = InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 2), ("a2", 2)], Some("a2"))
            .pool_item("r1", Supply::Infinite, &[("a1", 1)])
            .build()
            .unwrap();
        let verdict = oracle_bounded(&inst, 5, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(verdict.extension().unwrap().size(), BigUint::from(2u32));
    }

    #[test]
    fn cap_is_enforced() {
        let inst = unit_gap_even_pool();
        assert_eq!(oracle_bounded(&inst, 6, 3), Err(Error::CapExceeded(3)));
    }

    #[test]
    fn instance_budget_tightens_the_bound() {
        let inst = InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 2), ("a2", 2)], Some("a2"))
            .pool_item("r1", Supply::Infinite, &[("a1", 1)])
            .budget(Supply::Finite(1))
            .build()
            .unwrap();
        // k = 5 requested but the instance only allows size 1.
        let verdict = oracle_bounded(&inst, 5, DEFAULT_ENUMERATION_CAP).unwrap();
        assert!(!verdict.is_feasible());
    }

    #[test]
    fn empty_pool_reduces_to_the_initial_check() {
        let envy_free = InstanceBuilder::new(["a1"]).build().unwrap();
        assert!(oracle_bounded(&envy_free, 3, 100).unwrap().is_feasible());

        let envious = InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 1)], Some("a2"))
            .build()
            .unwrap();
        let verdict = oracle_bounded(&envious, 3, 100).unwrap();
        assert!(!verdict.is_feasible());
        assert!(verdict.extension().is_none());
    }

    #[test]
    fn found_extensions_verify_against_the_model() {
        let inst = InstanceBuilder::new(["a1", "a2", "a3"])
            .initial_item("p1", &[("a1", 3), ("a2", 1), ("a3", 2)], Some("a3"))
            .pool_item("r1", Supply::Finite(2), &[("a1", 2), ("a2", 1), ("a3", 1)])
            .pool_item("r2", Supply::Finite(2), &[("a1", 1), ("a2", 2)])
            .build()
            .unwrap();
        let verdict = oracle_bounded(&inst, 4, DEFAULT_ENUMERATION_CAP).unwrap();
        let ext = verdict.extension().expect("feasible at size 4");
        assert!(inst.is_envy_free(ext).unwrap());
        assert!(inst.validate_extension(ext).is_empty());
    }
}
