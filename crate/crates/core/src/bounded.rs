//! Exact solvers for bounded budgets and/or finite supplies, and the mode
//! dispatcher.
//!
//! * [`solve_branching`] — depth-first branching: as long as some agent is
//!   envious, try every pool item with remaining supply for the
//!   lexicographically smallest envious agent. The tree has depth
//!   min(p, k), where p is the total finite supply.
//! * [`solve_ilp_bb`] — depth-first search over the per-(agent, item) copy
//!   counts with supply/budget pruning and an optimistic bound; decides the
//!   same question as branching, usable whenever every count has a finite
//!   upper bound.
//! * [`solve_hybrid`] — mixed finite/infinite supplies with unlimited
//!   budget: enumerates every placement of the finitely supplied copies and
//!   delegates the rest to the unbounded solver.

use std::collections::BTreeMap;

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::model::{Extension, Instance, PoolItem, Supply, Verdict, Witness};
use crate::unbounded::solve_unbounded;

/// Solver selection for [`dispatch`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Auto,
    Unbounded,
    Branch,
    Ilp,
    Hybrid,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "auto" => Ok(Mode::Auto),
            "unbounded" => Ok(Mode::Unbounded),
            "branch" => Ok(Mode::Branch),
            "ilp" => Ok(Mode::Ilp),
            "hybrid" => Ok(Mode::Hybrid),
            other => Err(Error::ModeMismatch(format!("unknown mode: {other}"))),
        }
    }
}

/// The solver that actually ran.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Unbounded,
    Branch,
    Ilp,
    Hybrid,
}

impl SolverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolverKind::Unbounded => "unbounded",
            SolverKind::Branch => "branch",
            SolverKind::Ilp => "ilp",
            SolverKind::Hybrid => "hybrid",
        }
    }
}

/// One record per branching assignment, for instrumentation in tests: the
/// chosen agent, the item, and the agent's largest envy gap at that moment
/// (always positive, since only envious agents receive items).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchAssignment {
    pub agent: String,
    pub item: String,
    pub gap_when_assigned: i128,
}

/// Search state of the branching solver. Gaps are kept incrementally so the
/// envy check per node is a scan.
#[derive(Debug, Clone)]
pub struct SearchNode {
    pub remaining_budget: u64,
    pub remaining_supply: Vec<u64>,
    counts: Vec<u64>,
    gaps: Vec<i128>,
}

struct BranchCtx<'a> {
    inst: &'a Instance,
    /// Agent indices in lexicographic id order.
    lex_agents: Vec<usize>,
    pool_values: Vec<Vec<u64>>,
    log: Option<&'a mut Vec<BranchAssignment>>,
}

impl SearchNode {
    fn initial(inst: &Instance, k: u64) -> SearchNode {
        let n = inst.agents.len();
        let m = inst.pool_items.len();
        let mut gaps = vec![0i128; n * n];
        for (i, a) in inst.agents.iter().enumerate() {
            for (j, b) in inst.agents.iter().enumerate() {
                if i != j {
                    gaps[i * n + j] = inst.initial_gap(a, b);
                }
            }
        }
        SearchNode {
            remaining_budget: k,
            // Infinite supplies are capped at k: no extension within the
            // budget can use more copies of one item.
            remaining_supply: inst
                .pool_items
                .iter()
                .map(|p| p.supply.finite().unwrap_or(u64::MAX).min(k))
                .collect(),
            counts: vec![0; n * m],
            gaps,
        }
    }

    /// Extension assembled so far.
    pub fn partial_extension(&self, inst: &Instance) -> Extension {
        let m = inst.pool_items.len();
        let mut ext = Extension::new();
        for (i, agent) in inst.agents.iter().enumerate() {
            for (r, item) in inst.pool_items.iter().enumerate() {
                if self.counts[i * m + r] > 0 {
                    ext.add(agent, &item.id, BigUint::from(self.counts[i * m + r]));
                }
            }
        }
        ext
    }

    fn shift(&mut self, ctx: &BranchCtx, agent: usize, item: usize, copies: i128) {
        let n = ctx.inst.agents.len();
        for x in 0..n {
            if x == agent {
                continue;
            }
            self.gaps[x * n + agent] += copies
                .checked_mul(ctx.pool_values[x][item] as i128)
                .expect("gap overflow");
            self.gaps[agent * n + x] -= copies
                .checked_mul(ctx.pool_values[agent][item] as i128)
                .expect("gap overflow");
        }
    }

    /// Lexicographically smallest envious agent with its largest gap.
    fn first_envious(&self, ctx: &BranchCtx) -> Option<(usize, i128)> {
        let n = ctx.inst.agents.len();
        for &a in &ctx.lex_agents {
            let worst = (0..n).map(|b| self.gaps[a * n + b]).max().unwrap_or(0);
            if worst > 0 {
                return Some((a, worst));
            }
        }
        None
    }
}

fn branch(node: &mut SearchNode, ctx: &mut BranchCtx) -> bool {
    let Some((agent, gap)) = node.first_envious(ctx) else {
        return true;
    };
    if node.remaining_budget == 0 {
        return false;
    }
    let m = ctx.inst.pool_items.len();
    for item in 0..m {
        if node.remaining_supply[item] == 0 {
            continue;
        }
        if let Some(log) = ctx.log.as_deref_mut() {
            log.push(BranchAssignment {
                agent: ctx.inst.agents[agent].clone(),
                item: ctx.inst.pool_items[item].id.clone(),
                gap_when_assigned: gap,
            });
        }
        node.remaining_supply[item] -= 1;
        node.remaining_budget -= 1;
        node.counts[agent * m + item] += 1;
        node.shift(ctx, agent, item, 1);
        if branch(node, ctx) {
            return true;
        }
        node.shift(ctx, agent, item, -1);
        node.counts[agent * m + item] -= 1;
        node.remaining_budget += 1;
        node.remaining_supply[item] += 1;
    }
    false
}

/// Branching solver with an optional assignment log.
pub fn solve_branching_logged(
    inst: &Instance,
    k: u64,
    log: Option<&mut Vec<BranchAssignment>>,
) -> Result<Verdict> {
    let k = match inst.budget {
        Supply::Finite(budget) => k.min(budget),
        Supply::Infinite => k,
    };
    let mut lex_agents: Vec<usize> = (0..inst.agents.len()).collect();
    lex_agents.sort_by(|&x, &y| inst.agents[x].cmp(&inst.agents[y]));
    let mut ctx = BranchCtx {
        inst,
        lex_agents,
        pool_values: inst.agents.iter().map(|a| inst.pool_values_of(a)).collect(),
        log,
    };
    let mut node = SearchNode::initial(inst, k);
    if branch(&mut node, &mut ctx) {
        Verdict::feasible_checked(inst, node.partial_extension(inst))
    } else {
        Ok(Verdict::infeasible(Witness::SearchExhausted {
            detail: format!("branching explored every extension of size at most {k}"),
        }))
    }
}

/// Decides whether an envy-resolving extension of size at most `k` exists,
/// by branching on the lexicographically smallest envious agent.
pub fn solve_branching(inst: &Instance, k: u64) -> Result<Verdict> {
    solve_branching_logged(inst, k, None)
}

/// One integer variable of the feasibility program: copies of `item` given
/// to `agent`, between 0 and `upper`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpVariable {
    pub agent: String,
    pub item: String,
    pub upper: u64,
}

/// The feasibility program behind [`solve_ilp_bb`]: per-(agent, item) copy
/// counts bounded by supplies and budget, supply and budget constraints,
/// and one no-envy constraint per ordered agent pair (checked directly on
/// the gap matrix during the search).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IlpModel {
    /// Variables in (lexicographic agent, pool order) sequence.
    pub variables: Vec<IlpVariable>,
    /// Total copies allowed; None when only supplies bind.
    pub budget: Option<u64>,
}

impl IlpModel {
    /// Builds the model; errors if some variable has no finite upper bound
    /// (infinite supply and infinite budget).
    pub fn build(inst: &Instance, budget: Supply) -> Result<IlpModel> {
        let mut lex_agents: Vec<usize> = (0..inst.agents.len()).collect();
        lex_agents.sort_by(|&x, &y| inst.agents[x].cmp(&inst.agents[y]));
        let mut variables = Vec::new();
        for &a in &lex_agents {
            for item in &inst.pool_items {
                let upper = match (item.supply, budget) {
                    (Supply::Finite(s), Supply::Finite(k)) => s.min(k),
                    (Supply::Finite(s), Supply::Infinite) => s,
                    (Supply::Infinite, Supply::Finite(k)) => k,
                    (Supply::Infinite, Supply::Infinite) => {
                        return Err(Error::UnboundedModel(format!(
                            "x[{}][{}]",
                            inst.agents[a], item.id
                        )))
                    }
                };
                variables.push(IlpVariable {
                    agent: inst.agents[a].clone(),
                    item: item.id.clone(),
                    upper,
                });
            }
        }
        Ok(IlpModel {
            variables,
            budget: budget.finite(),
        })
    }
}

struct IlpSearch<'a> {
    inst: &'a Instance,
    vars: Vec<(usize, usize, u64)>,
    pool_values: Vec<Vec<u64>>,
    gaps: Vec<i128>,
    supply_left: Vec<u64>,
    budget_left: u64,
    counts: Vec<u64>,
}

impl<'a> IlpSearch<'a> {
    /// Optimistic upper bound on what `agent` can still gain for itself.
    fn max_gain(&self, from_var: usize, agent: usize) -> i128 {
        let mut total: i128 = 0;
        for &(a, item, upper) in self.vars.iter().skip(from_var) {
            if a != agent {
                continue;
            }
            let copies = upper.min(self.supply_left[item]).min(self.budget_left);
            total += (copies as i128)
                .checked_mul(self.pool_values[agent][item] as i128)
                .expect("gain overflow");
        }
        total
    }

    /// True if some agent provably cannot close one of its gaps anymore:
    /// other bundles only grow as the search proceeds, so a gap larger than
    /// the agent's maximum remaining own gain is final.
    fn hopeless(&self, from_var: usize) -> bool {
        let n = self.inst.agents.len();
        for a in 0..n {
            let worst = (0..n).map(|b| self.gaps[a * n + b]).max().unwrap_or(0);
            if worst <= 0 {
                continue;
            }
            if worst > self.max_gain(from_var, a) {
                return true;
            }
        }
        false
    }

    fn shift(&mut self, agent: usize, item: usize, copies: i128) {
        let n = self.inst.agents.len();
        for x in 0..n {
            if x == agent {
                continue;
            }
            self.gaps[x * n + agent] += copies
                .checked_mul(self.pool_values[x][item] as i128)
                .expect("gap overflow");
            self.gaps[agent * n + x] -= copies
                .checked_mul(self.pool_values[agent][item] as i128)
                .expect("gap overflow");
        }
    }

    fn dfs(&mut self, var: usize) -> bool {
        if self.hopeless(var) {
            return false;
        }
        if var == self.vars.len() {
            let n = self.inst.agents.len();
            return (0..n * n).all(|i| self.gaps[i] <= 0);
        }
        let (agent, item, upper) = self.vars[var];
        let limit = upper.min(self.supply_left[item]).min(self.budget_left);
        for c in 0..=limit {
            if c > 0 {
                self.supply_left[item] -= 1;
                self.budget_left -= 1;
                self.counts[agent * self.inst.pool_items.len() + item] += 1;
                self.shift(agent, item, 1);
            }
            if self.dfs(var + 1) {
                return true;
            }
        }
        if limit > 0 {
            self.supply_left[item] += limit;
            self.budget_left += limit;
            self.counts[agent * self.inst.pool_items.len() + item] -= limit;
            self.shift(agent, item, -(limit as i128));
        }
        false
    }
}

/// Depth-first branch-and-bound over the per-(agent, item) copy counts.
/// Equivalent in verdict to [`solve_branching`]; requires a finite budget
/// or all-finite supplies so that every count is bounded.
pub fn solve_ilp_bb(inst: &Instance, budget: Supply) -> Result<Verdict> {
    let model = IlpModel::build(inst, budget)?;
    let n = inst.agents.len();
    let m = inst.pool_items.len();
    let mut gaps = vec![0i128; n * n];
    for (i, a) in inst.agents.iter().enumerate() {
        for (j, b) in inst.agents.iter().enumerate() {
            if i != j {
                gaps[i * n + j] = inst.initial_gap(a, b);
            }
        }
    }
    let agent_index: BTreeMap<&str, usize> = inst
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();
    let vars: Vec<(usize, usize, u64)> = model
        .variables
        .iter()
        .map(|v| {
            (
                agent_index[v.agent.as_str()],
                inst.pool_index(&v.item).expect("model uses pool items"),
                v.upper,
            )
        })
        .collect();
    let total_supply: u64 = inst
        .pool_items
        .iter()
        .map(|p| p.supply.finite().unwrap_or(u64::MAX))
        .fold(0u64, |acc, s| acc.saturating_add(s));
    let mut search = IlpSearch {
        inst,
        vars,
        pool_values: inst.agents.iter().map(|a| inst.pool_values_of(a)).collect(),
        gaps,
        supply_left: inst
            .pool_items
            .iter()
            .map(|p| p.supply.finite().unwrap_or(u64::MAX))
            .collect(),
        budget_left: model.budget.unwrap_or(total_supply),
        counts: vec![0; n * m],
    };
    if search.dfs(0) {
        let mut ext = Extension::new();
        for (i, agent) in inst.agents.iter().enumerate() {
            for (r, item) in inst.pool_items.iter().enumerate() {
                if search.counts[i * m + r] > 0 {
                    ext.add(agent, &item.id, BigUint::from(search.counts[i * m + r]));
                }
            }
        }
        Verdict::feasible_checked(inst, ext)
    } else {
        Ok(Verdict::infeasible(Witness::SearchExhausted {
            detail: "branch-and-bound explored the whole bounded model".into(),
        }))
    }
}

/// Mixed finite/infinite supplies with an unlimited budget: every placement
/// of the finitely supplied copies (to an agent or discarded) is folded
/// into the initial allocation and the residual all-infinite instance goes
/// to the unbounded solver. Exponential in the total finite supply.
pub fn solve_hybrid(inst: &Instance) -> Result<Verdict> {
    if inst.budget != Supply::Infinite {
        return Err(Error::ModeMismatch(
            "hybrid solver requires an infinite budget".into(),
        ));
    }
    let finite_items: Vec<&PoolItem> = inst
        .pool_items
        .iter()
        .filter(|p| !p.supply.is_infinite())
        .collect();
    let infinite_items: Vec<&PoolItem> = inst
        .pool_items
        .iter()
        .filter(|p| p.supply.is_infinite())
        .collect();
    if infinite_items.is_empty() {
        return Err(Error::ModeMismatch(
            "hybrid solver requires at least one infinite supply".into(),
        ));
    }
    if finite_items.is_empty() {
        // Plain unbounded instance; nothing to enumerate.
        return solve_unbounded(inst);
    }

    // One slot per finitely supplied copy, in pool order.
    let mut copy_slots: Vec<usize> = Vec::new();
    for (idx, item) in inst.pool_items.iter().enumerate() {
        if let Supply::Finite(s) = item.supply {
            for _ in 0..s {
                copy_slots.push(idx);
            }
        }
    }

    let n = inst.agents.len();
    // Digit 0 = discard the copy, digit i = give it to agent i - 1. The
    // all-discard combination comes first, so the finite part stays unused
    // whenever it is not needed.
    let mut digits = vec![0usize; copy_slots.len()];
    loop {
        let verdict = solve_residual(inst, &copy_slots, &digits)?;
        if verdict.is_feasible() {
            return Ok(verdict);
        }
        // Odometer step.
        let mut pos = 0;
        loop {
            if pos == digits.len() {
                return Ok(Verdict::infeasible(Witness::SearchExhausted {
                    detail: format!(
                        "all {}^{} placements of the finitely supplied copies exhausted",
                        n + 1,
                        digits.len()
                    ),
                }));
            }
            digits[pos] += 1;
            if digits[pos] <= n {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
    }
}

/// Folds one placement of the finite copies into the initial allocation and
/// solves the residual all-infinite instance. A feasible verdict is mapped
/// back to an extension of the original instance.
fn solve_residual(inst: &Instance, copy_slots: &[usize], digits: &[usize]) -> Result<Verdict> {
    let mut initial_items = inst.initial_items.clone();
    let mut allocation = inst.initial_allocation.clone();
    let mut finite_counts: BTreeMap<(String, String), u64> = BTreeMap::new();
    for (slot, (&item_idx, &digit)) in copy_slots.iter().zip(digits).enumerate() {
        if digit == 0 {
            continue;
        }
        let agent = &inst.agents[digit - 1];
        let item = &inst.pool_items[item_idx];
        let synthetic = format!("{}#copy{}", item.id, slot);
        debug_assert!(!initial_items.contains_key(&synthetic));
        initial_items.insert(synthetic.clone(), item.values.clone());
        allocation
            .entry(agent.clone())
            .or_default()
            .insert(synthetic);
        *finite_counts
            .entry((agent.clone(), item.id.clone()))
            .or_default() += 1;
    }
    let residual = Instance::new(
        inst.agents.clone(),
        initial_items,
        inst.pool_items
            .iter()
            .filter(|p| p.supply.is_infinite())
            .cloned()
            .collect(),
        allocation,
        Supply::Infinite,
    )?;
    match solve_unbounded(&residual)? {
        Verdict::Feasible { extension, .. } => {
            let mut combined = extension;
            for ((agent, item), count) in finite_counts {
                combined.add(&agent, &item, BigUint::from(count));
            }
            Verdict::feasible_checked(inst, combined)
        }
        infeasible => Ok(infeasible),
    }
}

/// Routes an instance to the right solver.
///
/// `Auto` picks: branching with k = budget for finite budgets; branching
/// with k = total supply when the budget is unlimited but every supply is
/// finite (an extension can never use more than all copies); the
/// polynomial unbounded solver when budget and all supplies are unlimited;
/// and the hybrid enumerator for mixed supplies. Explicit modes error when
/// their preconditions do not hold.
pub fn dispatch(inst: &Instance, mode: Mode) -> Result<(SolverKind, Verdict)> {
    match mode {
        Mode::Auto => {
            if let Supply::Finite(k) = inst.budget {
                return Ok((SolverKind::Branch, solve_branching(inst, k)?));
            }
            match inst.sum_finite_supplies() {
                Supply::Finite(p) => Ok((SolverKind::Branch, solve_branching(inst, p)?)),
                Supply::Infinite => {
                    if inst.pool_items.iter().all(|p| p.supply.is_infinite()) {
                        Ok((SolverKind::Unbounded, solve_unbounded(inst)?))
                    } else {
                        Ok((SolverKind::Hybrid, solve_hybrid(inst)?))
                    }
                }
            }
        }
        Mode::Unbounded => Ok((SolverKind::Unbounded, solve_unbounded(inst)?)),
        Mode::Branch => {
            let k = match inst.budget {
                Supply::Finite(k) => k,
                Supply::Infinite => match inst.sum_finite_supplies() {
                    Supply::Finite(p) => p,
                    Supply::Infinite => {
                        return Err(Error::ModeMismatch(
                            "branching needs a finite budget or all-finite supplies".into(),
                        ))
                    }
                },
            };
            Ok((SolverKind::Branch, solve_branching(inst, k)?))
        }
        Mode::Ilp => Ok((SolverKind::Ilp, solve_ilp_bb(inst, inst.budget)?)),
        Mode::Hybrid => Ok((SolverKind::Hybrid, solve_hybrid(inst)?)),
    }
}
