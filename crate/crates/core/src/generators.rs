//! Instance generators: graph-based constructions whose feasibility encodes
//! a combinatorial question, a bin-packing construction, and a seeded
//! random generator. Plus brute-force graph checkers used as test-side
//! ground truth for the constructions.

use std::collections::BTreeSet;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Instance, InstanceBuilder, Supply};

/// Undirected simple graph with named vertices. Edges are normalized
/// (endpoints sorted, duplicates removed).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

impl SimpleGraph {
    pub fn new(vertices: Vec<String>, edges: Vec<(String, String)>) -> Result<SimpleGraph> {
        let vertex_set: BTreeSet<&String> = vertices.iter().collect();
        if vertex_set.len() != vertices.len() {
            return Err(Error::InvalidGraph("duplicate vertex".into()));
        }
        let mut normalized: Vec<(String, String)> = Vec::new();
        let mut seen = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at {u}")));
            }
            if !vertex_set.contains(&u) || !vertex_set.contains(&v) {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u}, {v}) references an unknown vertex"
                )));
            }
            let edge = if u <= v { (u, v) } else { (v, u) };
            if seen.insert(edge.clone()) {
                normalized.push(edge);
            }
        }
        normalized.sort();
        Ok(SimpleGraph {
            vertices,
            edges: normalized,
        })
    }

    fn numbered(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("v{i}")).collect()
    }

    /// Complete graph on n vertices.
    pub fn complete(n: usize) -> SimpleGraph {
        let vertices = Self::numbered(n);
        let edges = vertices
            .iter()
            .tuple_combinations()
            .map(|(u, v)| (u.clone(), v.clone()))
            .collect();
        SimpleGraph::new(vertices, edges).expect("complete graph is valid")
    }

    /// Cycle on n >= 3 vertices.
    pub fn cycle(n: usize) -> SimpleGraph {
        let vertices = Self::numbered(n);
        let edges = (0..n)
            .map(|i| (vertices[i].clone(), vertices[(i + 1) % n].clone()))
            .collect();
        SimpleGraph::new(vertices, edges).expect("cycle is valid")
    }

    /// Path on n vertices.
    pub fn path(n: usize) -> SimpleGraph {
        let vertices = Self::numbered(n);
        let edges = (1..n)
            .map(|i| (vertices[i - 1].clone(), vertices[i].clone()))
            .collect();
        SimpleGraph::new(vertices, edges).expect("path is valid")
    }

    pub fn has_edge(&self, u: &str, v: &str) -> bool {
        let (a, b) = if u <= v { (u, v) } else { (v, u) };
        self.edges
            .iter()
            .any(|(x, y)| x.as_str() == a && y.as_str() == b)
    }
}

fn binomial2(l: u64) -> u64 {
    l * (l - 1) / 2
}

fn as_refs(values: &[(String, u64)]) -> Vec<(&str, u64)> {
    values.iter().map(|(a, v)| (a.as_str(), *v)).collect()
}

/// Builds an instance that has an envy-resolving extension iff `g` contains
/// a clique on `l` vertices.
///
/// One agent per vertex and per edge plus a distinguished holder `b`; three
/// pool items with supplies C(l, 2), |E| - C(l, 2), and l force any solution
/// to pick the edges and vertices of an l-clique. All valuations are
/// binary, the budget is unlimited, every supply is finite.
pub fn gen_clique(g: &SimpleGraph, l: u64) -> Result<Instance> {
    if l < 2 {
        return Err(Error::InvalidInstance(
            "clique construction needs l >= 2".into(),
        ));
    }
    let edge_pool = g.edges.len() as u64;
    if binomial2(l) > edge_pool {
        return Err(Error::InvalidInstance(format!(
            "graph has {} edges but the construction needs at least C({l},2) = {}",
            edge_pool,
            binomial2(l)
        )));
    }
    let vertex_agent = |v: &str| format!("v:{v}");
    let edge_agent = |u: &str, v: &str| format!("e:{u},{v}");

    let mut agents: Vec<String> = g.vertices.iter().map(|v| vertex_agent(v)).collect();
    agents.extend(g.edges.iter().map(|(u, v)| edge_agent(u, v)));
    agents.push("b".to_string());
    let mut builder = InstanceBuilder::new(agents);

    // b's item: approved by b and every edge agent.
    let mut star_values: Vec<(String, u64)> = vec![("b".to_string(), 1)];
    star_values.extend(g.edges.iter().map(|(u, v)| (edge_agent(u, v), 1)));
    let star_refs: Vec<(&str, u64)> = star_values.iter().map(|(a, v)| (a.as_str(), *v)).collect();
    builder = builder.initial_item("held:b", &star_refs, Some("b"));

    // Each vertex agent holds an item only it approves.
    for v in &g.vertices {
        let owner = vertex_agent(v);
        builder = builder.initial_item(
            &format!("held:{v}"),
            &[(owner.as_str(), 1)],
            Some(owner.as_str()),
        );
    }
    // Each edge agent holds an item approved exactly by its two endpoints.
    for (u, v) in &g.edges {
        let owner = edge_agent(u, v);
        let endpoint_u = vertex_agent(u);
        let endpoint_v = vertex_agent(v);
        builder = builder.initial_item(
            &format!("held:{u},{v}"),
            &[(endpoint_u.as_str(), 1), (endpoint_v.as_str(), 1)],
            Some(owner.as_str()),
        );
    }

    // Pool: r for vertex and edge agents, r' for edge agents only, r* for
    // vertex agents only.
    let vertex_and_edge: Vec<(String, u64)> = g
        .vertices
        .iter()
        .map(|v| (vertex_agent(v), 1))
        .chain(g.edges.iter().map(|(u, v)| (edge_agent(u, v), 1)))
        .collect();
    let edge_only: Vec<(String, u64)> =
        g.edges.iter().map(|(u, v)| (edge_agent(u, v), 1)).collect();
    let vertex_only: Vec<(String, u64)> = g.vertices.iter().map(|v| (vertex_agent(v), 1)).collect();
    builder = builder.pool_item(
        "r",
        Supply::Finite(binomial2(l)),
        &as_refs(&vertex_and_edge),
    );
    builder = builder.pool_item(
        "r_prime",
        Supply::Finite(edge_pool - binomial2(l)),
        &as_refs(&edge_only),
    );
    builder = builder.pool_item("r_star", Supply::Finite(l), &as_refs(&vertex_only));
    builder.budget(Supply::Infinite).build()
}

/// A bin-packing question: can `weights` be split into `bins` groups each
/// summing to exactly `bin_size`? (The weights must sum to bins * bin_size.)
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinPackingInput {
    pub weights: Vec<u64>,
    pub bins: u64,
    pub bin_size: u64,
}

impl BinPackingInput {
    pub fn new(weights: Vec<u64>, bins: u64, bin_size: u64) -> Result<BinPackingInput> {
        if weights.is_empty() || weights.contains(&0) {
            return Err(Error::InvalidInstance(
                "weights must be positive and nonempty".into(),
            ));
        }
        if bins == 0 {
            return Err(Error::InvalidInstance("need at least one bin".into()));
        }
        let total: u128 = weights.iter().map(|&w| w as u128).sum();
        if total != (bins as u128) * (bin_size as u128) {
            return Err(Error::InvalidInstance(format!(
                "weights sum to {total}, expected bins * bin_size = {}",
                (bins as u128) * (bin_size as u128)
            )));
        }
        Ok(BinPackingInput {
            weights,
            bins,
            bin_size,
        })
    }
}

/// Builds an instance that is feasible iff the weights pack into the bins
/// exactly: bins + 1 agents with identical valuations, the extra agent
/// holds an item worth one bin, and each weight is a supply-1 pool item.
pub fn gen_binpacking(bp: &BinPackingInput) -> Result<Instance> {
    let mut agents: Vec<String> = (1..=bp.bins).map(|i| format!("a{i}")).collect();
    agents.push("b".to_string());
    let everyone = agents.clone();
    let values_for =
        |v: u64| -> Vec<(String, u64)> { everyone.iter().map(|a| (a.clone(), v)).collect() };
    let mut builder = InstanceBuilder::new(agents);
    builder = builder.initial_item("p", &as_refs(&values_for(bp.bin_size)), Some("b"));
    for (j, &w) in bp.weights.iter().enumerate() {
        builder = builder.pool_item(
            &format!("r{}", j + 1),
            Supply::Finite(1),
            &as_refs(&values_for(w)),
        );
    }
    builder.budget(Supply::Infinite).build()
}

/// Builds an instance that has an envy-resolving extension of size at most
/// `l` iff `g` contains an independent set of `l` vertices.
///
/// One agent per edge plus a selection agent `b`. Each edge agent holds
/// l - 1 items only `b` approves and one item approved by `b` and every
/// edge agent; the pool has one item per vertex (supply l each), approved
/// by `b` and the incident edge agents; the budget is l.
pub fn gen_indset(g: &SimpleGraph, l: u64) -> Result<Instance> {
    if l < 1 {
        return Err(Error::InvalidInstance(
            "independent-set construction needs l >= 1".into(),
        ));
    }
    if g.edges.is_empty() {
        return Err(Error::InvalidGraph(
            "independent-set construction needs at least one edge".into(),
        ));
    }
    // An item of an isolated vertex is approved by nobody but the selection
    // agent, which could then take l copies of it and fill its bundle
    // without picking l distinct pairwise non-adjacent vertices.
    for v in &g.vertices {
        if !g.edges.iter().any(|(x, y)| x == v || y == v) {
            return Err(Error::InvalidGraph(format!(
                "independent-set construction needs every vertex covered by an edge ({v} is isolated)"
            )));
        }
    }
    let edge_agent = |u: &str, v: &str| format!("e:{u},{v}");
    let mut agents: Vec<String> = g.edges.iter().map(|(u, v)| edge_agent(u, v)).collect();
    agents.push("b".to_string());
    let edge_agents: Vec<String> = g.edges.iter().map(|(u, v)| edge_agent(u, v)).collect();

    let mut builder = InstanceBuilder::new(agents);
    for (u, v) in &g.edges {
        let owner = edge_agent(u, v);
        // l - 1 filler items only b approves.
        for i in 1..l {
            builder = builder.initial_item(
                &format!("t1:{u},{v}:{i}"),
                &[("b", 1)],
                Some(owner.as_str()),
            );
        }
        // One item approved by b and by every edge agent.
        let mut values: Vec<(&str, u64)> = vec![("b", 1)];
        values.extend(edge_agents.iter().map(|a| (a.as_str(), 1)));
        builder = builder.initial_item(&format!("t2:{u},{v}"), &values, Some(owner.as_str()));
    }
    for v in &g.vertices {
        let mut values: Vec<(String, u64)> = vec![("b".to_string(), 1)];
        values.extend(
            g.edges
                .iter()
                .filter(|(x, y)| x == v || y == v)
                .map(|(x, y)| (edge_agent(x, y), 1)),
        );
        let refs: Vec<(&str, u64)> = values.iter().map(|(a, val)| (a.as_str(), *val)).collect();
        builder = builder.pool_item(&format!("r:{v}"), Supply::Finite(l), &refs);
    }
    builder.budget(Supply::Finite(l)).build()
}

/// Supply pattern for random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupplyProfile {
    AllInfinite,
    /// Every supply finite, uniform in 1..=max.
    FiniteAtMost(u64),
    /// Mix of finite and infinite supplies; with at least two pool items the
    /// first is forced finite and the last infinite.
    Mixed(u64),
}

/// Knobs for the seeded random generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSpec {
    pub agents: usize,
    pub pool: usize,
    /// Number of initially allocated items.
    pub initial_items: usize,
    pub max_value: u64,
    pub supplies: SupplyProfile,
    pub budget: Supply,
    /// Force the first `n` agents into one proportionality class over the
    /// pool.
    pub proportional_group: Option<usize>,
    /// Restrict every valuation to {0, 1}.
    pub binary: bool,
    pub seed: u64,
}

impl RandomSpec {
    pub fn new(agents: usize, pool: usize, seed: u64) -> RandomSpec {
        RandomSpec {
            agents,
            pool,
            initial_items: agents,
            max_value: 10,
            supplies: SupplyProfile::AllInfinite,
            budget: Supply::Infinite,
            proportional_group: None,
            binary: false,
            seed,
        }
    }
}

/// Deterministic random instance for a fixed spec (same spec, same
/// instance).
pub fn gen_random(spec: &RandomSpec) -> Result<Instance> {
    if spec.agents == 0 || spec.pool == 0 {
        return Err(Error::InvalidInstance(
            "random instances need at least one agent and one pool item".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let agents: Vec<String> = (1..=spec.agents).map(|i| format!("a{i}")).collect();
    let max_value = spec.max_value.max(1);
    let value = |rng: &mut ChaCha8Rng| -> u64 {
        if spec.binary {
            rng.gen_range(0..=1)
        } else {
            rng.gen_range(0..=max_value)
        }
    };

    let mut builder = InstanceBuilder::new(agents.clone());
    for j in 1..=spec.initial_items {
        let values: Vec<(String, u64)> = agents
            .iter()
            .map(|a| (a.clone(), value(&mut rng)))
            .collect();
        let refs: Vec<(&str, u64)> = values.iter().map(|(a, v)| (a.as_str(), *v)).collect();
        let holder = agents[rng.gen_range(0..agents.len())].clone();
        builder = builder.initial_item(&format!("p{j}"), &refs, Some(holder.as_str()));
    }

    // Pool valuations. A forced proportional group shares one base vector
    // scaled by a small per-agent multiplier.
    let group = spec.proportional_group.unwrap_or(0).min(spec.agents);
    let base_cap = if spec.binary {
        1
    } else {
        (max_value / 3).max(1)
    };
    let mut base: Vec<u64> = (0..spec.pool)
        .map(|_| rng.gen_range(0..=base_cap))
        .collect();
    if group > 0 && base.iter().all(|&v| v == 0) {
        let idx = rng.gen_range(0..base.len());
        base[idx] = rng.gen_range(1..=base_cap);
    }
    let multipliers: Vec<u64> = (0..group)
        .map(|_| if spec.binary { 1 } else { rng.gen_range(1..=3) })
        .collect();

    let mut pool_values: Vec<Vec<(String, u64)>> = vec![Vec::new(); spec.pool];
    for (i, agent) in agents.iter().enumerate() {
        if i < group {
            for (r, row) in pool_values.iter_mut().enumerate() {
                row.push((agent.clone(), base[r] * multipliers[i]));
            }
        } else {
            for row in pool_values.iter_mut() {
                row.push((agent.clone(), value(&mut rng)));
            }
        }
    }

    for (r, row) in pool_values.iter().enumerate() {
        let supply = match spec.supplies {
            SupplyProfile::AllInfinite => Supply::Infinite,
            SupplyProfile::FiniteAtMost(max) => Supply::Finite(rng.gen_range(1..=max.max(1))),
            SupplyProfile::Mixed(max) => {
                if r == 0 {
                    Supply::Finite(rng.gen_range(1..=max.max(1)))
                } else if r == spec.pool - 1 || rng.gen_bool(0.5) {
                    Supply::Infinite
                } else {
                    Supply::Finite(rng.gen_range(1..=max.max(1)))
                }
            }
        };
        let refs: Vec<(&str, u64)> = row.iter().map(|(a, v)| (a.as_str(), *v)).collect();
        builder = builder.pool_item(&format!("r{}", r + 1), supply, &refs);
    }
    builder.budget(spec.budget).build()
}

fn subset_cap_check(vertices: usize, l: usize, cap: u64) -> Result<()> {
    // C(vertices, l) against the cap; the running product stays exact
    // because C(n, i+1) = C(n, i) * (n - i) / (i + 1) divides evenly.
    let k = l.min(vertices - l);
    let mut combinations: u128 = 1;
    for i in 0..k {
        combinations = combinations.saturating_mul((vertices - i) as u128) / (i as u128 + 1);
        if combinations > cap as u128 {
            return Err(Error::CapExceeded(cap));
        }
    }
    Ok(())
}

/// Exhaustive check for a clique of `l` vertices. Errors if C(|V|, l)
/// exceeds `cap`.
pub fn graph_has_clique(g: &SimpleGraph, l: usize, cap: u64) -> Result<bool> {
    if l > g.vertices.len() {
        return Ok(false);
    }
    subset_cap_check(g.vertices.len(), l, cap)?;
    Ok(g.vertices.iter().combinations(l).any(|subset| {
        subset
            .iter()
            .tuple_combinations()
            .all(|(u, v)| g.has_edge(u, v))
    }))
}

/// Exhaustive check for an independent set of `l` vertices. Errors if
/// C(|V|, l) exceeds `cap`.
pub fn graph_has_independent_set(g: &SimpleGraph, l: usize, cap: u64) -> Result<bool> {
    if l > g.vertices.len() {
        return Ok(false);
    }
    subset_cap_check(g.vertices.len(), l, cap)?;
    Ok(g.vertices.iter().combinations(l).any(|subset| {
        subset
            .iter()
            .tuple_combinations()
            .all(|(u, v)| !g.has_edge(u, v))
    }))
}
