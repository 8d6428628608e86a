//! Difference-constraint systems solved by shortest paths.
//!
//! A system of constraints `x_lhs - x_rhs >= bound` is feasible over the
//! integers iff the graph with an edge lhs -> rhs of weight -bound has no
//! negative cycle. Shortest-path distances from a virtual source connected
//! to every variable with weight 0 (equivalently: all distances start at 0)
//! give an integral solution directly; shifting it so its minimum is 0
//! keeps feasibility because only differences are constrained.

use std::collections::BTreeMap;

/// One constraint `x_lhs - x_rhs >= min_diff`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DifferenceConstraint {
    pub lhs: String,
    pub rhs: String,
    pub min_diff: i128,
}

/// A conjunction of difference constraints over named variables.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DifferenceConstraintSystem {
    pub variables: Vec<String>,
    pub constraints: Vec<DifferenceConstraint>,
}

impl DifferenceConstraintSystem {
    pub fn new<I, S>(variables: I) -> DifferenceConstraintSystem
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        DifferenceConstraintSystem {
            variables: variables.into_iter().map(Into::into).collect(),
            constraints: Vec::new(),
        }
    }

    pub fn require_min_difference(&mut self, lhs: &str, rhs: &str, min_diff: i128) {
        self.constraints.push(DifferenceConstraint {
            lhs: lhs.to_string(),
            rhs: rhs.to_string(),
            min_diff,
        });
    }

    /// Solves the system. On success, returns nonnegative integer values
    /// with minimum 0 satisfying every constraint; on failure, returns the
    /// variable sequence of a cycle whose bounds sum to a positive number
    /// (walking the sequence in order, wrapping around).
    pub fn solve(&self) -> Result<BTreeMap<String, i128>, Vec<String>> {
        let n = self.variables.len();
        if n == 0 {
            return Ok(BTreeMap::new());
        }
        let index: BTreeMap<&str, usize> = self
            .variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i))
            .collect();
        // Edge lhs -> rhs with weight -min_diff.
        let edges: Vec<(usize, usize, i128)> = self
            .constraints
            .iter()
            .map(|c| (index[c.lhs.as_str()], index[c.rhs.as_str()], -c.min_diff))
            .collect();

        let mut dist = vec![0i128; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        let mut relaxed_vertex = None;
        for pass in 0..n {
            let mut changed = false;
            for &(u, v, w) in &edges {
                let candidate = dist[u].checked_add(w).expect("distance overflow");
                if candidate < dist[v] {
                    dist[v] = candidate;
                    pred[v] = Some(u);
                    changed = true;
                    if pass == n - 1 {
                        relaxed_vertex = Some(v);
                    }
                }
            }
            if !changed {
                break;
            }
        }

        if let Some(start) = relaxed_vertex {
            // A vertex still relaxing after n passes sits on or downstream
            // of a negative cycle; walking predecessors n times lands on it.
            let mut on_cycle = start;
            for _ in 0..n {
                on_cycle = pred[on_cycle].expect("relaxed vertex has a predecessor");
            }
            let mut backwards = vec![on_cycle];
            let mut cur = pred[on_cycle].expect("cycle vertex has a predecessor");
            while cur != on_cycle {
                backwards.push(cur);
                cur = pred[cur].expect("cycle vertex has a predecessor");
            }
            // pred points along reversed edges, so flip to edge order.
            backwards.reverse();
            return Err(backwards
                .into_iter()
                .map(|i| self.variables[i].clone())
                .collect());
        }

        let min = *dist.iter().min().expect("nonempty");
        Ok(self
            .variables
            .iter()
            .cloned()
            .zip(dist.iter().map(|d| d - min))
            .collect())
    }
}
