//! Cross-module properties checked on seeded random instances: solver
//! agreement against the brute-force oracle, the two-agent
//! characterizations, certificate soundness, and invariances of the
//! polynomial pipeline.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use envyfix_core::bounded::{dispatch, solve_branching, solve_ilp_bb, Mode};
use envyfix_core::generators::{gen_random, RandomSpec, SupplyProfile};
use envyfix_core::model::{Extension, Instance, Supply};
use envyfix_core::oracle::{oracle_bounded, DEFAULT_ENUMERATION_CAP};
use envyfix_core::unbounded::{
    normalize_class, pair_proportional_construct, pair_proportional_feasible, phase1_class,
    phase2_traced, proportional_classes, solve_unbounded, vectors_proportional, Phase1Outcome,
};

fn small_bounded_spec(seed: u64) -> RandomSpec {
    let mut spec = RandomSpec::new(2 + (seed % 3) as usize, 1 + (seed % 3) as usize, seed);
    spec.initial_items = 1 + (seed % 3) as usize;
    spec.max_value = 6;
    spec.supplies = SupplyProfile::FiniteAtMost(3);
    spec.budget = Supply::Finite(seed % 6);
    spec
}

#[test]
fn branching_matches_the_oracle() {
    for seed in 0..80 {
        let spec = small_bounded_spec(seed);
        let inst = gen_random(&spec).unwrap();
        let k = spec.budget.finite().unwrap();
        let oracle = oracle_bounded(&inst, k, DEFAULT_ENUMERATION_CAP).unwrap();
        let branch = solve_branching(&inst, k).unwrap();
        assert_eq!(
            oracle.is_feasible(),
            branch.is_feasible(),
            "seed {seed}, k {k}"
        );
        if let Some(ext) = branch.extension() {
            assert!(inst.is_envy_free(ext).unwrap());
            assert!(inst.validate_extension(ext).is_empty());
        }
    }
}

#[test]
fn ilp_matches_branching() {
    for seed in 0..80 {
        let spec = small_bounded_spec(seed);
        let inst = gen_random(&spec).unwrap();
        let k = spec.budget.finite().unwrap();
        let branch = solve_branching(&inst, k).unwrap();
        let ilp = solve_ilp_bb(&inst, Supply::Finite(k)).unwrap();
        assert_eq!(branch.is_feasible(), ilp.is_feasible(), "seed {seed}");
    }
}

#[test]
fn feasibility_is_monotone_in_the_budget() {
    for seed in 0..40 {
        let mut spec = small_bounded_spec(seed);
        spec.budget = Supply::Infinite;
        let inst = gen_random(&spec).unwrap();
        let mut feasible_before = false;
        for k in 0..=4 {
            let now = solve_branching(&inst, k).unwrap().is_feasible();
            assert!(!feasible_before || now, "seed {seed}, k {k}");
            feasible_before = now;
        }
    }
}

/// Independent statement of the two-agent proportional characterization:
/// some integer divisible by gcd(envier's pool values) lies between the
/// envier's gap and -alpha * (envied's gap).
fn window_has_multiple(inst: &Instance, envier: &str, envied: &str) -> bool {
    let va = inst.pool_values_of(envier);
    let vb = inst.pool_values_of(envied);
    let d = va.iter().fold(0u64, |acc, &v| acc.gcd(&v));
    assert!(d > 0, "zero vectors are out of scope here");
    let pivot = va.iter().position(|&v| v != 0).unwrap();
    let alpha = BigRational::new(BigInt::from(va[pivot]), BigInt::from(vb[pivot]));
    let lower = BigInt::from(inst.initial_gap(envier, envied));
    let upper = -alpha * BigRational::from(BigInt::from(inst.initial_gap(envied, envier)));
    // Smallest multiple of d at or above lower.
    let d = BigInt::from(d);
    let quotient = {
        let (q, r) = lower.div_mod_floor(&d);
        if r.is_zero() {
            q
        } else {
            q + 1
        }
    };
    BigRational::from(quotient * d) <= upper
}

#[test]
fn two_agent_proportional_instances_match_the_window_criterion() {
    let mut checked = 0;
    for seed in 0..300 {
        let mut spec = RandomSpec::new(2, 1 + (seed % 3) as usize, seed);
        spec.initial_items = 1 + (seed % 4) as usize;
        spec.max_value = 20;
        spec.proportional_group = Some(2);
        let inst = gen_random(&spec).unwrap();
        if inst.pool_values_of("a1").iter().all(|&v| v == 0) {
            continue;
        }
        let gap_12 = inst.initial_gap("a1", "a2");
        let gap_21 = inst.initial_gap("a2", "a1");
        let envier = if gap_12 > 0 {
            Some(("a1", "a2"))
        } else if gap_21 > 0 {
            Some(("a2", "a1"))
        } else {
            None
        };
        let expected = match envier {
            None => true,
            Some((a, b)) => window_has_multiple(&inst, a, b),
        };
        let verdict = solve_unbounded(&inst).unwrap();
        assert_eq!(verdict.is_feasible(), expected, "seed {seed}");
        // The pair-level feasibility operation is a second route to the
        // same answer whenever there is an envier.
        if let Some((a, b)) = envier {
            let check = pair_proportional_feasible(&inst, a, b).unwrap();
            assert_eq!(check.feasible, expected, "seed {seed}");
            if let Some(target) = &check.target {
                let resolution = pair_proportional_construct(&inst, a, b, target).unwrap();
                let mut ext = Extension::new();
                resolution.apply(&mut ext);
                assert!(inst.is_envy_free(&ext).unwrap(), "seed {seed}");
            }
        }
        checked += 1;
    }
    assert!(checked >= 200, "only {checked} instances exercised");
}

#[test]
fn two_agent_nonproportional_envy_is_always_resolvable() {
    let mut checked = 0;
    for seed in 0..2000 {
        if checked >= 200 {
            break;
        }
        let mut spec = RandomSpec::new(2, 2 + (seed % 2) as usize, seed);
        spec.initial_items = 1 + (seed % 3) as usize;
        spec.max_value = 9;
        let inst = gen_random(&spec).unwrap();
        let v1 = inst.pool_values_of("a1");
        let v2 = inst.pool_values_of("a2");
        // Zero vectors are neither proportional nor coverable by the
        // two-item construction; they belong to the zero-class pre-check.
        if v1.iter().all(|&v| v == 0) || v2.iter().all(|&v| v == 0) {
            continue;
        }
        if vectors_proportional(&v1, &v2) {
            continue;
        }
        if inst.initial_gap("a1", "a2") <= 0 && inst.initial_gap("a2", "a1") <= 0 {
            continue;
        }
        let verdict = solve_unbounded(&inst).unwrap();
        let ext = verdict
            .extension()
            .expect("non-proportional pairs always resolve");
        assert!(inst.is_envy_free(ext).unwrap());
        assert!(inst.validate_extension(ext).is_empty());
        checked += 1;
    }
    assert!(checked >= 200, "only {checked} instances exercised");
}

#[test]
fn phase2_edge_count_strictly_decreases() {
    let mut checked = 0;
    for seed in 0..400 {
        if checked >= 100 {
            break;
        }
        let agents = 4 + (seed % 3) as usize;
        let mut spec = RandomSpec::new(agents, 2 + (seed % 2) as usize, seed);
        spec.initial_items = agents;
        spec.max_value = 8;
        spec.proportional_group = Some(2);
        let inst = gen_random(&spec).unwrap();
        let classes = proportional_classes(&inst).unwrap();
        if classes.iter().filter(|c| !c.is_zero_class).count() < 2 {
            continue;
        }
        if inst.agents.iter().any(|a| {
            inst.all_zero_pool_values(a) && inst.agents.iter().any(|b| inst.initial_gap(a, b) > 0)
        }) {
            continue;
        }
        let mut ext = Extension::new();
        let mut class_feasible = true;
        for class in &classes {
            if class.is_zero_class {
                continue;
            }
            let norm = normalize_class(&inst, class).unwrap();
            match phase1_class(&inst, &norm).unwrap() {
                Phase1Outcome::Resolved(partial) => ext.merge(&partial),
                Phase1Outcome::Infeasible(_) => {
                    class_feasible = false;
                    break;
                }
            }
        }
        if !class_feasible {
            continue;
        }
        let (final_ext, trace) = phase2_traced(&inst, ext).unwrap();
        assert!(
            trace.windows(2).all(|w| w[1] < w[0]),
            "seed {seed}: trace {trace:?} not strictly decreasing"
        );
        assert!(trace.len() <= inst.agents.len() * inst.agents.len() + 1);
        assert_eq!(*trace.last().unwrap(), 0);
        assert!(inst.is_envy_free(&final_ext).unwrap());
        checked += 1;
    }
    assert!(checked >= 100, "only {checked} instances exercised");
}

/// Multiplies one agent's whole valuation (initial items and pool) by c.
fn scale_agent(inst: &Instance, agent: &str, c: u64) -> Instance {
    let mut scaled = inst.clone();
    for values in scaled.initial_items.values_mut() {
        if let Some(v) = values.get_mut(agent) {
            *v *= c;
        }
    }
    for item in &mut scaled.pool_items {
        if let Some(v) = item.values.get_mut(agent) {
            *v *= c;
        }
    }
    scaled
}

#[test]
fn verdicts_are_invariant_under_valuation_scaling() {
    let mut checked = 0;
    for seed in 0..200 {
        if checked >= 100 {
            break;
        }
        let agents = 2 + (seed % 3) as usize;
        let mut spec = RandomSpec::new(agents, 1 + (seed % 3) as usize, seed);
        spec.max_value = 12;
        spec.proportional_group = Some(2.min(agents));
        let inst = gen_random(&spec).unwrap();
        let baseline = solve_unbounded(&inst).unwrap().is_feasible();
        for c in [2, 3, 5] {
            let agent = inst.agents[(seed as usize + c as usize) % agents].clone();
            let scaled = scale_agent(&inst, &agent, c);
            let rescored = solve_unbounded(&scaled).unwrap().is_feasible();
            assert_eq!(baseline, rescored, "seed {seed}, agent {agent}, c {c}");
        }
        checked += 1;
    }
    assert!(checked >= 100);
}

#[test]
fn envy_graph_edges_are_exactly_the_positive_gaps() {
    for seed in 0..60 {
        let mut spec = RandomSpec::new(2 + (seed % 4) as usize, 1 + (seed % 3) as usize, seed);
        spec.max_value = 7;
        let inst = gen_random(&spec).unwrap();
        // Random small extension on top.
        let mut ext = Extension::new();
        for (i, agent) in inst.agents.iter().enumerate() {
            for (j, item) in inst.pool_items.iter().enumerate() {
                let copies = (seed + i as u64 * 3 + j as u64) % 3;
                if copies > 0 {
                    ext.add(agent, &item.id, copies.into());
                }
            }
        }
        let graph = inst.envy_graph(&ext).unwrap();
        for a in &inst.agents {
            for b in &inst.agents {
                if a == b {
                    continue;
                }
                let gap = inst.envy_gap(&ext, a, b).unwrap();
                let has_edge = graph.edges.iter().any(|e| &e.envier == a && &e.envied == b);
                assert_eq!(has_edge, gap.is_positive(), "seed {seed} pair ({a}, {b})");
            }
        }
        assert_eq!(inst.is_envy_free(&ext).unwrap(), graph.is_edgeless());
    }
}

#[test]
fn envy_gap_is_additive_under_extension_merge() {
    for seed in 0..60 {
        let mut spec = RandomSpec::new(3, 2, seed);
        spec.max_value = 9;
        let inst = gen_random(&spec).unwrap();
        let mut first = Extension::new();
        let mut second = Extension::new();
        for (i, agent) in inst.agents.iter().enumerate() {
            for (j, item) in inst.pool_items.iter().enumerate() {
                first.add(agent, &item.id, ((seed + i as u64 + j as u64) % 2).into());
                second.add(
                    agent,
                    &item.id,
                    ((seed * 7 + i as u64 * 2 + j as u64) % 3).into(),
                );
            }
        }
        let mut merged = first.clone();
        merged.merge(&second);
        for a in &inst.agents {
            for b in &inst.agents {
                let whole = inst.envy_gap(&merged, a, b).unwrap();
                let part = inst.envy_gap(&first, a, b).unwrap();
                // The second extension contributes its own delta on top.
                let own: BigInt = inst.bundle_value(&second, a, b).unwrap()
                    - BigInt::from(inst.initial_bundle_value(a, b));
                let other: BigInt = inst.bundle_value(&second, a, a).unwrap()
                    - BigInt::from(inst.initial_bundle_value(a, a));
                assert_eq!(whole, part + own - other, "seed {seed} ({a}, {b})");
            }
        }
    }
}

/// Seeded edge-sampled graph on `n` named vertices.
fn random_graph(n: usize, seed: u64) -> envyfix_core::generators::SimpleGraph {
    use envyfix_core::generators::SimpleGraph;
    let vertices: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    for i in 0..n {
        for j in (i + 1)..n {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            if state >> 63 == 1 {
                edges.push((vertices[i].clone(), vertices[j].clone()));
            }
        }
    }
    SimpleGraph::new(vertices, edges).unwrap()
}

#[test]
fn clique_construction_matches_brute_force_on_random_graphs() {
    use envyfix_core::generators::{gen_clique, graph_has_clique};
    let mut checked = 0;
    for seed in 0..40 {
        let g = random_graph(4 + (seed % 2) as usize, seed);
        for l in [2u64, 3] {
            let Ok(inst) = gen_clique(&g, l) else {
                continue; // too few edges for this l
            };
            let (_, verdict) = dispatch(&inst, Mode::Auto).unwrap();
            let expected = graph_has_clique(&g, l as usize, DEFAULT_ENUMERATION_CAP).unwrap();
            assert_eq!(verdict.is_feasible(), expected, "seed {seed}, l {l}");
            checked += 1;
        }
    }
    assert!(checked >= 30, "only {checked} cases ran");
}

#[test]
fn indset_construction_matches_brute_force_on_random_graphs() {
    use envyfix_core::generators::{gen_indset, graph_has_independent_set};
    let mut checked = 0;
    for seed in 0..60 {
        let g = random_graph(4, seed);
        // The construction rejects graphs with isolated vertices.
        if g.vertices
            .iter()
            .any(|v| !g.edges.iter().any(|(x, y)| x == v || y == v))
        {
            continue;
        }
        for l in [1u64, 2, 3] {
            let inst = gen_indset(&g, l).unwrap();
            let verdict = solve_branching(&inst, l).unwrap();
            let expected =
                graph_has_independent_set(&g, l as usize, DEFAULT_ENUMERATION_CAP).unwrap();
            assert_eq!(verdict.is_feasible(), expected, "seed {seed}, l {l}");
            checked += 1;
        }
    }
    assert!(checked >= 30, "only {checked} cases ran");
}

#[test]
fn unbounded_infeasible_instances_resist_brute_force() {
    let mut infeasible_seen = 0;
    for seed in 0..200 {
        let mut spec = RandomSpec::new(2 + (seed % 2) as usize, 1 + (seed % 2) as usize, seed);
        spec.max_value = 4;
        spec.initial_items = 2;
        spec.proportional_group = Some(2);
        let inst = gen_random(&spec).unwrap();
        let verdict = solve_unbounded(&inst).unwrap();
        if !verdict.is_feasible() {
            infeasible_seen += 1;
            let oracle = oracle_bounded(&inst, 5, DEFAULT_ENUMERATION_CAP).unwrap();
            assert!(
                !oracle.is_feasible(),
                "seed {seed}: brute force found a small fix for an instance reported infeasible"
            );
        }
    }
    assert!(
        infeasible_seen >= 20,
        "only {infeasible_seen} infeasible instances in the sample"
    );
}

#[test]
fn hybrid_is_consistent_with_the_size_bounded_oracle() {
    use envyfix_core::bounded::solve_hybrid;
    let mut mixed_seen = 0;
    for seed in 0..120 {
        let mut spec = RandomSpec::new(2 + (seed % 2) as usize, 2, seed);
        spec.max_value = 5;
        spec.initial_items = 2;
        spec.supplies = SupplyProfile::Mixed(2);
        let inst = gen_random(&spec).unwrap();
        if inst.pool_items.iter().all(|p| p.supply.is_infinite()) {
            continue;
        }
        mixed_seen += 1;
        let hybrid = solve_hybrid(&inst).unwrap();
        // A size-bounded success implies unlimited-budget success; hybrid
        // infeasibility implies the oracle finds nothing at any small size.
        let oracle = oracle_bounded(&inst, 4, DEFAULT_ENUMERATION_CAP).unwrap();
        if oracle.is_feasible() {
            assert!(hybrid.is_feasible(), "seed {seed}");
        }
        if !hybrid.is_feasible() {
            assert!(!oracle.is_feasible(), "seed {seed}");
        }
        if let Some(ext) = hybrid.extension() {
            assert!(inst.is_envy_free(ext).unwrap(), "seed {seed}");
            assert!(inst.validate_extension(ext).is_empty(), "seed {seed}");
        }
    }
    assert!(mixed_seen >= 60, "only {mixed_seen} mixed instances");
}

#[test]
fn dispatch_feasible_verdicts_always_certify() {
    for seed in 0..60 {
        let mut spec = RandomSpec::new(2 + (seed % 3) as usize, 2, seed);
        spec.max_value = 6;
        spec.supplies = match seed % 3 {
            0 => SupplyProfile::AllInfinite,
            1 => SupplyProfile::FiniteAtMost(2),
            _ => SupplyProfile::Mixed(2),
        };
        if seed % 4 == 0 {
            spec.budget = Supply::Finite(3);
        }
        let inst = gen_random(&spec).unwrap();
        let (_, verdict) = dispatch(&inst, Mode::Auto).unwrap();
        if let Some(ext) = verdict.extension() {
            assert!(inst.is_envy_free(ext).unwrap(), "seed {seed}");
            assert!(inst.validate_extension(ext).is_empty(), "seed {seed}");
        }
    }
}
