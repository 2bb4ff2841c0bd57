use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{Pipeline, QdmrOp};

/// Data dependencies between steps: edge `(j, i)` when step `i` reads `#j`.
/// Indices are one-based, matching script references.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    len: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl DependencyGraph {
    pub fn of_steps(steps: &[QdmrOp]) -> DependencyGraph {
        let edges = steps
            .iter()
            .enumerate()
            .flat_map(|(i, op)| op.refs().into_iter().map(move |r| (r.0, i + 1)))
            .collect();
        DependencyGraph {
            len: steps.len(),
            edges,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn predecessors(&self, step: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|(_, to)| *to == step)
            .map(|(from, _)| *from)
            .collect()
    }

    pub fn successors(&self, step: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter(|(from, _)| *from == step)
            .map(|(_, to)| *to)
            .collect()
    }

    /// Steps nothing else reads.
    pub fn sinks(&self) -> Vec<usize> {
        (1..=self.len)
            .filter(|s| self.successors(*s).is_empty())
            .collect()
    }
}

pub fn dependency_graph(p: &Pipeline) -> DependencyGraph {
    DependencyGraph::of_steps(p.steps())
}
