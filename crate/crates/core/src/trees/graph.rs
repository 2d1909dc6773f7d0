use std::collections::{BTreeSet, VecDeque};

use crate::topology::{NodeId, Topology};

/// The subgraph induced by a node set, with dense local indices.
///
/// Local index order follows node id order, so "lower local index" and
/// "lower node id" agree for tie-breaking.
pub(crate) struct InducedGraph {
    pub ids: Vec<NodeId>,
    pub adj: Vec<Vec<usize>>,
}

impl InducedGraph {
    pub fn new(topology: &Topology, set: &BTreeSet<NodeId>) -> Self {
        let ids: Vec<NodeId> = set.iter().copied().collect();
        let adj = ids
            .iter()
            .map(|&u| {
                topology
                    .neighbors(u)
                    .iter()
                    .filter_map(|v| ids.binary_search(v).ok())
                    .collect()
            })
            .collect();
        InducedGraph { ids, adj }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn local(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    /// Hop distances from `start`; `u32::MAX` for unreachable nodes.
    pub fn bfs(&self, start: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}
