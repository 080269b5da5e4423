use std::collections::BTreeSet;
use std::sync::Arc;

use super::network::{NodeRegistry, TemporalNetwork};

/// Every ordered pair `(u, v)`, `u != v`, over a fixed node set, each labeled
/// by whether the link exists in the evaluation network.
///
/// Nodes are ordered by id, and pairs by source then destination, so the
/// pair order is also the export row order.
#[derive(Debug, Clone)]
pub struct CandidateUniverse {
    registry: Arc<NodeRegistry>,
    nodes: Vec<usize>,
    labels: Vec<bool>,
}

impl CandidateUniverse {
    /// Universe over `nodes` labeled by `positives`. Links with an endpoint
    /// outside `nodes` are ignored.
    pub fn new(
        registry: Arc<NodeRegistry>,
        nodes: impl IntoIterator<Item = usize>,
        positives: &BTreeSet<(usize, usize)>,
    ) -> Self {
        let mut nodes: Vec<usize> = nodes.into_iter().collect();
        nodes.sort_by(|&a, &b| registry.id(a).cmp(registry.id(b)));
        nodes.dedup();
        let mut labels = Vec::with_capacity(nodes.len() * nodes.len().saturating_sub(1));
        for &u in &nodes {
            for &v in &nodes {
                if u != v {
                    labels.push(positives.contains(&(u, v)));
                }
            }
        }
        CandidateUniverse {
            registry,
            nodes,
            labels,
        }
    }

    pub fn registry(&self) -> &Arc<NodeRegistry> {
        &self.registry
    }

    /// Member nodes in id order.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    /// Pairs in universe order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.iter().flat_map(move |&u| {
            self.nodes
                .iter()
                .filter(move |&&v| v != u)
                .map(move |&v| (u, v))
        })
    }

    /// Position of pair `(u, v)` in universe order, if both are members.
    pub fn position(&self, u: usize, v: usize) -> Option<usize> {
        if u == v {
            return None;
        }
        let by_id = |x: usize| {
            self.nodes
                .binary_search_by(|&n| self.registry.id(n).cmp(self.registry.id(x)))
                .ok()
        };
        let (i, j) = (by_id(u)?, by_id(v)?);
        let m = self.nodes.len();
        Some(i * (m - 1) + if j > i { j - 1 } else { j })
    }

    /// Same node set and registry.
    pub fn same_as(&self, other: &CandidateUniverse) -> bool {
        Arc::ptr_eq(&self.registry, &other.registry) && self.nodes == other.nodes
    }
}

/// All ordered pairs over the nodes of `eval_net`, positive iff linked in it.
pub fn candidate_pairs(eval_net: &TemporalNetwork) -> CandidateUniverse {
    CandidateUniverse::new(
        Arc::clone(eval_net.registry()),
        eval_net.nodes().iter().copied(),
        &eval_net.links(),
    )
}
