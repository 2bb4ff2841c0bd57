use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::qdmr::{is_continuous, DependencyGraph, Pipeline, QdmrOp, StepRef};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, thiserror::Error)]
#[serde(tag = "code")]
pub enum ReorderError {
    /// No order lets every step read the one before it. `edges` lists the
    /// dependencies `(from, to)` of the steps as given.
    #[error("no step order lets every step read the step before it; dependencies: {edges:?}")]
    NoContinuousOrder { edges: Vec<(usize, usize)> },
    #[error("steps {steps:?} depend on each other in a cycle")]
    Cycle { steps: Vec<usize> },
    #[error("no steps to order")]
    Empty,
}

impl ReorderError {
    pub fn code(&self) -> &'static str {
        match self {
            ReorderError::NoContinuousOrder { .. } => "NoContinuousOrder",
            ReorderError::Cycle { .. } => "Cycle",
            ReorderError::Empty => "Empty",
        }
    }
}

fn deps(steps: &[QdmrOp]) -> Vec<BTreeSet<usize>> {
    steps
        .iter()
        .map(|op| op.refs().iter().map(|r| r.index()).collect())
        .collect()
}

/// Steps on or feeding a cycle, one-based; empty when the graph is acyclic.
fn cyclic_steps(deps: &[BTreeSet<usize>]) -> Vec<usize> {
    let n = deps.len();
    let mut placed = vec![false; n];
    let mut progress = true;
    while progress {
        progress = false;
        for i in 0..n {
            if !placed[i] && deps[i].iter().all(|d| placed[*d]) {
                placed[i] = true;
                progress = true;
            }
        }
    }
    (0..n).filter(|i| !placed[*i]).map(|i| i + 1).collect()
}

/// Depth-first search over dependency-respecting orders where each step
/// reads its predecessor. Candidates are tried in original index order, so
/// the first order found is the lexicographically smallest.
fn search(
    deps: &[BTreeSet<usize>],
    order: &mut Vec<usize>,
    placed: u64,
    failed: &mut BTreeSet<(u64, usize)>,
) -> bool {
    let n = deps.len();
    if order.len() == n {
        return true;
    }
    let last = order.last().copied();
    if let Some(last) = last {
        if failed.contains(&(placed, last)) {
            return false;
        }
    }
    for c in 0..n {
        if placed & (1 << c) != 0 {
            continue;
        }
        if !deps[c].iter().all(|d| placed & (1 << d) != 0) {
            continue;
        }
        if let Some(last) = last {
            if !deps[c].contains(&last) {
                continue;
            }
        }
        order.push(c);
        if search(deps, order, placed | (1 << c), failed) {
            return true;
        }
        order.pop();
    }
    if let Some(last) = last {
        failed.insert((placed, last));
    }
    false
}

/// Orders draft steps (references may point forward) so that every step
/// after the first reads the step right before it, renumbering references.
/// A sequence that already has this property is returned unchanged.
pub fn reorder_steps(steps: &[QdmrOp]) -> Result<Vec<QdmrOp>, ReorderError> {
    let n = steps.len();
    if n == 0 {
        return Err(ReorderError::Empty);
    }
    let deps = deps(steps);
    if deps.iter().any(|d| d.iter().any(|&j| j >= n)) {
        return Err(ReorderError::NoContinuousOrder {
            edges: DependencyGraph::of_steps(steps).edges().iter().copied().collect(),
        });
    }
    let backward = deps.iter().enumerate().all(|(i, d)| d.iter().all(|j| *j < i));
    if backward && is_continuous(steps) {
        return Ok(steps.to_vec());
    }
    let cyclic = cyclic_steps(&deps);
    if !cyclic.is_empty() {
        return Err(ReorderError::Cycle { steps: cyclic });
    }
    if n > 63 {
        return Err(ReorderError::NoContinuousOrder {
            edges: DependencyGraph::of_steps(steps).edges().iter().copied().collect(),
        });
    }
    let mut order = Vec::with_capacity(n);
    let mut failed = BTreeSet::new();
    if !search(&deps, &mut order, 0, &mut failed) {
        return Err(ReorderError::NoContinuousOrder {
            edges: DependencyGraph::of_steps(steps).edges().iter().copied().collect(),
        });
    }
    let mut position = vec![0usize; n];
    for (new, old) in order.iter().enumerate() {
        position[*old] = new;
    }
    Ok(order
        .iter()
        .map(|old| steps[*old].map_refs(|r| StepRef(position[r.index()] + 1)))
        .collect())
}

/// Reorders a pipeline for data-flow continuity.
pub fn reorder(p: &Pipeline) -> Result<Pipeline, ReorderError> {
    if p.is_continuous() {
        return Ok(p.clone());
    }
    let steps = reorder_steps(p.steps())?;
    Ok(Pipeline::new(steps, p.provenance()).expect("reordered steps only reference earlier steps"))
}
