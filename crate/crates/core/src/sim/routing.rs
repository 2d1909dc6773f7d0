use std::collections::VecDeque;

use crate::topology::{NodeId, Topology};

/// Min-hop next hops toward one sink over the nodes still alive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinkRoutes {
    pub sink: NodeId,
    /// Hop distance to the sink; `None` if unreachable.
    pub dist: Vec<Option<u32>>,
}

impl SinkRoutes {
    pub fn build(topology: &Topology, alive: &[bool], sink: NodeId) -> Self {
        let mut dist = vec![None; topology.len()];
        if alive[sink.index()] {
            dist[sink.index()] = Some(0);
            let mut queue = VecDeque::from([sink]);
            while let Some(u) = queue.pop_front() {
                let d = dist[u.index()].unwrap();
                for &v in topology.neighbors(u) {
                    if alive[v.index()] && dist[v.index()].is_none() {
                        dist[v.index()] = Some(d + 1);
                        queue.push_back(v);
                    }
                }
            }
        }
        SinkRoutes { sink, dist }
    }

    /// Lowest-id alive neighbor one hop closer to the sink.
    pub fn next_hop(&self, topology: &Topology, from: NodeId) -> Option<NodeId> {
        let d = self.dist[from.index()]?;
        if d == 0 {
            return None;
        }
        topology
            .neighbors(from)
            .iter()
            .copied()
            .find(|v| self.dist[v.index()] == Some(d - 1))
    }

    pub fn path(&self, topology: &Topology, from: NodeId) -> Option<Vec<NodeId>> {
        self.dist[from.index()]?;
        let mut path = vec![from];
        let mut cur = from;
        while let Some(n) = self.next_hop(topology, cur) {
            path.push(n);
            cur = n;
        }
        Some(path)
    }
}

/// Min-hop path from `root` to every sink; `None` for unreachable sinks.
pub fn route_to_sinks(
    topology: &Topology,
    alive: &[bool],
    root: NodeId,
    sinks: impl IntoIterator<Item = NodeId>,
) -> Vec<(NodeId, Option<Vec<NodeId>>)> {
    sinks
        .into_iter()
        .map(|s| (s, SinkRoutes::build(topology, alive, s).path(topology, root)))
        .collect()
}
