//! Core data model: instances, extensions, envy gaps and graphs, and
//! certification of envy-freeness and extension validity.
//!
//! Input values are nonnegative 64-bit integers; copy counts and everything
//! derived from them use arbitrary precision because constructed extensions
//! can be Bézout-scaled far past machine word range.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::Zero;

use crate::error::{Error, Result};

/// A finite quantity or an unlimited one. Used for both item supplies and
/// the extension budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Supply {
    Finite(u64),
    Infinite,
}

impl Supply {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Supply::Infinite)
    }

    pub fn finite(&self) -> Option<u64> {
        match self {
            Supply::Finite(n) => Some(*n),
            Supply::Infinite => None,
        }
    }
}

impl fmt::Display for Supply {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Supply::Finite(n) => write!(f, "{n}"),
            Supply::Infinite => write!(f, "inf"),
        }
    }
}

/// Per-agent values of a single item; omitted agents value the item at 0.
pub type ValueMap = BTreeMap<String, u64>;

/// One pool item: identifier, supply, and per-agent values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolItem {
    pub id: String,
    pub supply: Supply,
    pub values: ValueMap,
}

impl PoolItem {
    pub fn value_to(&self, agent: &str) -> u64 {
        self.values.get(agent).copied().unwrap_or(0)
    }
}

/// A problem instance: agents, initially allocated items, a pool of
/// addable items, the (immutable) initial allocation, and a budget on the
/// total number of added copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub agents: Vec<String>,
    /// Initially held items: item id -> per-agent values.
    pub initial_items: BTreeMap<String, ValueMap>,
    /// Pool items in input order.
    pub pool_items: Vec<PoolItem>,
    /// Agent id -> ids of initially held items. Bundles are disjoint.
    pub initial_allocation: BTreeMap<String, BTreeSet<String>>,
    pub budget: Supply,
}

impl Instance {
    /// Validating constructor; all invariants of the data model are checked
    /// here so the solvers can assume them.
    pub fn new(
        agents: Vec<String>,
        initial_items: BTreeMap<String, ValueMap>,
        pool_items: Vec<PoolItem>,
        initial_allocation: BTreeMap<String, BTreeSet<String>>,
        budget: Supply,
    ) -> Result<Instance> {
        if agents.is_empty() {
            return Err(Error::InvalidInstance("no agents".into()));
        }
        let agent_set: BTreeSet<&String> = agents.iter().collect();
        if agent_set.len() != agents.len() {
            return Err(Error::InvalidInstance("duplicate agent id".into()));
        }
        let mut item_ids: BTreeSet<&String> = BTreeSet::new();
        for id in initial_items.keys().chain(pool_items.iter().map(|p| &p.id)) {
            if !item_ids.insert(id) {
                return Err(Error::InvalidInstance(format!("duplicate item id: {id}")));
            }
        }
        for (id, values) in initial_items
            .iter()
            .chain(pool_items.iter().map(|p| (&p.id, &p.values)))
        {
            for agent in values.keys() {
                if !agent_set.contains(agent) {
                    return Err(Error::InvalidInstance(format!(
                        "item {id} values unknown agent {agent}"
                    )));
                }
            }
        }
        let mut seen_items: BTreeSet<&String> = BTreeSet::new();
        for (agent, bundle) in &initial_allocation {
            if !agent_set.contains(agent) {
                return Err(Error::InvalidInstance(format!(
                    "allocation references unknown agent {agent}"
                )));
            }
            for item in bundle {
                if !initial_items.contains_key(item) {
                    return Err(Error::InvalidInstance(format!(
                        "allocation references unknown initial item {item}"
                    )));
                }
                if !seen_items.insert(item) {
                    return Err(Error::InvalidInstance(format!(
                        "initial item {item} allocated to more than one agent"
                    )));
                }
            }
        }
        Ok(Instance {
            agents,
            initial_items,
            pool_items,
            initial_allocation,
            budget,
        })
    }

    pub fn has_agent(&self, id: &str) -> bool {
        self.agents.iter().any(|a| a == id)
    }

    fn require_agent(&self, id: &str) -> Result<()> {
        if self.has_agent(id) {
            Ok(())
        } else {
            Err(Error::UnknownAgent(id.to_string()))
        }
    }

    pub fn pool_index(&self, item: &str) -> Option<usize> {
        self.pool_items.iter().position(|p| p.id == item)
    }

    /// `viewer`'s value for one copy of a pool item.
    pub fn pool_value(&self, viewer: &str, item_idx: usize) -> u64 {
        self.pool_items[item_idx].value_to(viewer)
    }

    /// `viewer`'s values over the whole pool, in pool order.
    pub fn pool_values_of(&self, viewer: &str) -> Vec<u64> {
        self.pool_items.iter().map(|p| p.value_to(viewer)).collect()
    }

    /// Whether `agent` values every pool item at zero.
    pub fn all_zero_pool_values(&self, agent: &str) -> bool {
        self.pool_items.iter().all(|p| p.value_to(agent) == 0)
    }

    /// `viewer`'s value for `owner`'s initial bundle.
    pub fn initial_bundle_value(&self, viewer: &str, owner: &str) -> u128 {
        let Some(bundle) = self.initial_allocation.get(owner) else {
            return 0;
        };
        bundle
            .iter()
            .map(|item| {
                self.initial_items
                    .get(item)
                    .and_then(|values| values.get(viewer))
                    .copied()
                    .unwrap_or(0) as u128
            })
            .sum()
    }

    /// Initial envy gap of `a` toward `b`: positive means `a` envies `b`
    /// before anything is added.
    pub fn initial_gap(&self, a: &str, b: &str) -> i128 {
        let own = self.initial_bundle_value(a, a);
        let other = self.initial_bundle_value(a, b);
        i128::try_from(other).expect("initial bundle value overflows i128")
            - i128::try_from(own).expect("initial bundle value overflows i128")
    }

    /// Envy gap of `a` toward `b` under the extended allocation: `a`'s value
    /// for `b`'s bundle minus `a`'s value for its own.
    pub fn envy_gap(&self, ext: &Extension, a: &str, b: &str) -> Result<BigInt> {
        self.require_agent(a)?;
        self.require_agent(b)?;
        let own = self.bundle_value(ext, a, a)?;
        let other = self.bundle_value(ext, a, b)?;
        Ok(other - own)
    }

    /// `viewer`'s value for `owner`'s extended bundle.
    pub fn bundle_value(&self, ext: &Extension, viewer: &str, owner: &str) -> Result<BigInt> {
        let mut total = BigInt::from(self.initial_bundle_value(viewer, owner));
        for (item, count) in ext.of_agent(owner) {
            let idx = self
                .pool_index(item)
                .ok_or_else(|| Error::UnknownItem(item.to_string()))?;
            total += BigInt::from(count.clone()) * BigInt::from(self.pool_value(viewer, idx));
        }
        Ok(total)
    }

    /// The directed envy graph of the extended allocation, edges sorted
    /// lexicographically by (envier, envied).
    pub fn envy_graph(&self, ext: &Extension) -> Result<EnvyGraph> {
        let mut ids: Vec<&String> = self.agents.iter().collect();
        ids.sort();
        let mut edges = Vec::new();
        for a in &ids {
            for b in &ids {
                if a == b {
                    continue;
                }
                let gap = self.envy_gap(ext, a, b)?;
                if gap > BigInt::zero() {
                    edges.push(EnvyEdge {
                        envier: (*a).clone(),
                        envied: (*b).clone(),
                        gap,
                    });
                }
            }
        }
        Ok(EnvyGraph { edges })
    }

    /// True iff no agent envies another under the extended allocation.
    /// Short-circuits on the first positive gap.
    pub fn is_envy_free(&self, ext: &Extension) -> Result<bool> {
        for a in &self.agents {
            for b in &self.agents {
                if a != b && self.envy_gap(ext, a, b)? > BigInt::zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Checks an extension against the supplies and the budget. An empty
    /// result means the extension is valid.
    pub fn validate_extension(&self, ext: &Extension) -> Vec<Violation> {
        let mut violations = Vec::new();
        for agent in ext.agents() {
            if !self.has_agent(agent) {
                violations.push(Violation::UnknownAgent(agent.to_string()));
            }
        }
        let mut item_totals: BTreeMap<&str, BigUint> = BTreeMap::new();
        for (_, item, count) in ext.iter() {
            *item_totals.entry(item).or_default() += count;
        }
        for (item, assigned) in item_totals {
            match self.pool_index(item) {
                None => violations.push(Violation::UnknownItem(item.to_string())),
                Some(idx) => {
                    if let Supply::Finite(supply) = self.pool_items[idx].supply {
                        if assigned > BigUint::from(supply) {
                            violations.push(Violation::SupplyExceeded {
                                item: item.to_string(),
                                assigned,
                                supply,
                            });
                        }
                    }
                }
            }
        }
        if let Supply::Finite(budget) = self.budget {
            let size = ext.size();
            if size > BigUint::from(budget) {
                violations.push(Violation::BudgetExceeded { size, budget });
            }
        }
        violations
    }

    /// Sum of the supplies; `Infinite` as soon as any single supply is.
    pub fn sum_finite_supplies(&self) -> Supply {
        let mut total = 0u64;
        for item in &self.pool_items {
            match item.supply {
                Supply::Infinite => return Supply::Infinite,
                Supply::Finite(s) => {
                    total = total.checked_add(s).expect("supply sum overflows u64");
                }
            }
        }
        Supply::Finite(total)
    }
}

/// Copy counts to hand out on top of the initial allocation:
/// agent -> pool item -> count. Absent entries mean zero; stored counts are
/// always positive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extension {
    counts: BTreeMap<String, BTreeMap<String, BigUint>>,
}

impl Extension {
    pub fn new() -> Extension {
        Extension::default()
    }

    pub fn from_counts(counts: BTreeMap<String, BTreeMap<String, BigUint>>) -> Extension {
        let mut ext = Extension::new();
        for (agent, items) in counts {
            for (item, count) in items {
                ext.add(&agent, &item, count);
            }
        }
        ext
    }

    /// Adds copies; zero counts are dropped so that representation stays
    /// canonical and `==` means equality of the underlying functions.
    pub fn add(&mut self, agent: &str, item: &str, count: BigUint) {
        if count.is_zero() {
            return;
        }
        *self
            .counts
            .entry(agent.to_string())
            .or_default()
            .entry(item.to_string())
            .or_default() += count;
    }

    pub fn add_u64(&mut self, agent: &str, item: &str, count: u64) {
        self.add(agent, item, BigUint::from(count));
    }

    pub fn get(&self, agent: &str, item: &str) -> BigUint {
        self.counts
            .get(agent)
            .and_then(|items| items.get(item))
            .cloned()
            .unwrap_or_default()
    }

    pub fn merge(&mut self, other: &Extension) {
        for (agent, item, count) in other.iter() {
            self.add(agent, item, count.clone());
        }
    }

    pub fn of_agent(&self, agent: &str) -> impl Iterator<Item = (&str, &BigUint)> {
        self.counts
            .get(agent)
            .into_iter()
            .flat_map(|items| items.iter().map(|(item, count)| (item.as_str(), count)))
    }

    pub fn agents(&self) -> impl Iterator<Item = &str> {
        self.counts.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, &BigUint)> {
        self.counts.iter().flat_map(|(agent, items)| {
            items
                .iter()
                .map(move |(item, count)| (agent.as_str(), item.as_str(), count))
        })
    }

    /// Total number of allocated copies.
    pub fn size(&self) -> BigUint {
        self.iter().map(|(_, _, count)| count).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// A directed envy edge annotated with its (positive) gap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyEdge {
    pub envier: String,
    pub envied: String,
    pub gap: BigInt,
}

/// All envy edges of an extended allocation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EnvyGraph {
    pub edges: Vec<EnvyEdge>,
}

impl EnvyGraph {
    pub fn is_edgeless(&self) -> bool {
        self.edges.is_empty()
    }
}

/// A single problem with an extension, reported by `validate_extension`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    UnknownAgent(String),
    UnknownItem(String),
    SupplyExceeded {
        item: String,
        assigned: BigUint,
        supply: u64,
    },
    BudgetExceeded {
        size: BigUint,
        budget: u64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnknownAgent(id) => write!(f, "unknown agent {id}"),
            Violation::UnknownItem(id) => write!(f, "unknown item {id}"),
            Violation::SupplyExceeded {
                item,
                assigned,
                supply,
            } => write!(
                f,
                "supply exceeded for {item}: assigned {assigned} of {supply}"
            ),
            Violation::BudgetExceeded { size, budget } => {
                write!(f, "budget exceeded: size {size} over budget {budget}")
            }
        }
    }
}

/// Why an instance has no envy-resolving extension. Every variant can be
/// re-checked without trusting the solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// An agent valuing every pool item at zero already envies someone;
    /// additions can never change that agent's perception.
    ZeroValueEnvy { agent: String, envied: String },
    /// Within one proportionality class the difference constraints contain a
    /// cycle whose rounded gaps sum to a positive number.
    NegativeCycle {
        class_members: Vec<String>,
        cycle: Vec<String>,
    },
    /// A bounded search explored its whole space without success.
    SearchExhausted { detail: String },
}

/// The recomputed checks a feasible verdict carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub envy_free: bool,
    pub extension_valid: bool,
    pub size: BigUint,
}

/// Outcome of a solve: a certified envy-resolving extension, or a witness of
/// infeasibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Feasible {
        extension: Extension,
        certificate: Certificate,
    },
    Infeasible {
        witness: Witness,
    },
}

impl Verdict {
    /// Builds a feasible verdict after recomputing envy-freeness and
    /// extension validity; a failed check is reported instead of silently
    /// producing an uncertified verdict.
    pub fn feasible_checked(inst: &Instance, extension: Extension) -> Result<Verdict> {
        let violations = inst.validate_extension(&extension);
        if !violations.is_empty() {
            let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::Certification(msgs.join("; ")));
        }
        if !inst.is_envy_free(&extension)? {
            return Err(Error::Certification(
                "extension does not eliminate envy".into(),
            ));
        }
        let size = extension.size();
        Ok(Verdict::Feasible {
            extension,
            certificate: Certificate {
                envy_free: true,
                extension_valid: true,
                size,
            },
        })
    }

    pub fn infeasible(witness: Witness) -> Verdict {
        Verdict::Infeasible { witness }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Verdict::Feasible { .. })
    }

    pub fn extension(&self) -> Option<&Extension> {
        match self {
            Verdict::Feasible { extension, .. } => Some(extension),
            Verdict::Infeasible { .. } => None,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::Feasible { .. } => None,
            Verdict::Infeasible { witness } => Some(witness),
        }
    }
}

/// Convenience builder for instances, mainly used in tests and generators.
#[derive(Debug, Clone, Default)]
pub struct InstanceBuilder {
    agents: Vec<String>,
    initial_items: BTreeMap<String, ValueMap>,
    pool_items: Vec<PoolItem>,
    initial_allocation: BTreeMap<String, BTreeSet<String>>,
    budget: Option<Supply>,
}

impl InstanceBuilder {
    pub fn new<I, S>(agents: I) -> InstanceBuilder
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        InstanceBuilder {
            agents: agents.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    /// Adds an initial item with the given per-agent values; `holder` is the
    /// agent that starts with it (or nobody).
    pub fn initial_item(
        mut self,
        id: &str,
        values: &[(&str, u64)],
        holder: Option<&str>,
    ) -> InstanceBuilder {
        self.initial_items.insert(
            id.to_string(),
            values
                .iter()
                .map(|(agent, v)| (agent.to_string(), *v))
                .collect(),
        );
        if let Some(holder) = holder {
            self.initial_allocation
                .entry(holder.to_string())
                .or_default()
                .insert(id.to_string());
        }
        self
    }

    pub fn pool_item(
        mut self,
        id: &str,
        supply: Supply,
        values: &[(&str, u64)],
    ) -> InstanceBuilder {
        self.pool_items.push(PoolItem {
            id: id.to_string(),
            supply,
            values: values
                .iter()
                .map(|(agent, v)| (agent.to_string(), *v))
                .collect(),
        });
        self
    }

    pub fn budget(mut self, budget: Supply) -> InstanceBuilder {
        self.budget = Some(budget);
        self
    }

    pub fn build(self) -> Result<Instance> {
        Instance::new(
            self.agents,
            self.initial_items,
            self.pool_items,
            self.initial_allocation,
            self.budget.unwrap_or(Supply::Infinite),
        )
    }
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;

    /// Two agents with identical valuations; `a2` starts with a unit-value
    /// item and the pool offers unlimited copies of an item both value at 2.
    pub fn unit_gap_even_pool() -> Instance {
        InstanceBuilder::new(["a1", "a2"])
            .initial_item("p1", &[("a1", 1), ("a2", 1)], Some("a2"))
            .pool_item("r1", Supply::Infinite, &[("a1", 2), ("a2", 2)])
            .build()
            .unwrap()
    }
}
