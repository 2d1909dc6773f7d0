use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topology::{EnergyView, NodeId, Topology};

use super::graph::InducedGraph;
use super::{check_sources, AggregationTree, TreeBuildResult};

/// Energy-aware spanning tree rooted at the highest-energy source.
///
/// Every other source attaches to the highest-energy neighbor that is one
/// hop closer to the root.
pub fn build_espan<S: Scalar>(
    topology: &Topology,
    energies: &EnergyView<S>,
    sources: &BTreeSet<NodeId>,
) -> Result<TreeBuildResult<S>> {
    check_sources(sources)?;
    let g = InducedGraph::new(topology, sources);
    let e: Vec<S> = g.ids.iter().map(|&id| energies.get(id)).collect();
    let r = (0..g.len())
        .reduce(|a, b| if e[b] > e[a] { b } else { a })
        .unwrap();
    let hops = g.bfs(r);
    if let Some(i) = hops.iter().position(|&h| h == u32::MAX) {
        return Err(Error::NotConnected(format!(
            "source {} cannot reach root {}",
            g.ids[i], g.ids[r]
        )));
    }
    let mut parent = BTreeMap::new();
    for v in 0..g.len() {
        if v == r {
            continue;
        }
        let p = g.adj[v]
            .iter()
            .copied()
            .filter(|&u| hops[u] + 1 == hops[v])
            .reduce(|a, b| if e[b] > e[a] { b } else { a })
            .unwrap();
        parent.insert(g.ids[v], g.ids[p]);
    }
    let tree = AggregationTree::from_parents(g.ids[r], parent)?;
    Ok(TreeBuildResult::new(tree, energies, 1))
}
