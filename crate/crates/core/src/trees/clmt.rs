use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topology::{EnergyView, NodeId, Topology};

use super::{check_sources, widest_tree, AggregationTree, TreeBuildResult};

/// The highest energy threshold `θ` such that the sources with energy `≥ θ`
/// induce a connected subgraph and every other source is adjacent to one of
/// them. Returns `θ` and that core set.
///
/// Aggregators of any spanning tree form a connected dominating set, so no
/// tree can have energy above `θ`; the core set shows `θ` is reachable.
pub fn clmt_threshold<S: Scalar>(
    topology: &Topology,
    energies: &EnergyView<S>,
    sources: &BTreeSet<NodeId>,
) -> Result<(S, BTreeSet<NodeId>)> {
    check_sources(sources)?;
    if !topology.is_induced_connected(sources) {
        return Err(Error::NotConnected(format!(
            "{} sources do not induce a connected subgraph",
            sources.len()
        )));
    }
    let mut levels: Vec<S> = sources.iter().map(|&v| energies.get(v)).collect();
    levels.sort_by(|a, b| b.total_cmp_energy(a));
    levels.dedup();
    // Feasibility is monotone in the threshold (lowering it only adds
    // dominated nodes), so the first feasible level scanning down is the best.
    for theta in levels {
        let core: BTreeSet<NodeId> = sources
            .iter()
            .copied()
            .filter(|&v| energies.get(v) >= theta)
            .collect();
        let dominated = sources
            .iter()
            .filter(|v| !core.contains(v))
            .all(|&v| topology.neighbors(v).iter().any(|u| core.contains(u)));
        if dominated && topology.is_induced_connected(&core) {
            return Ok((theta, core));
        }
    }
    unreachable!("the full source set is always a feasible core")
}

/// Centralized construction around the bottleneck threshold.
///
/// The root is the highest-energy core node (ties: lower id). The core is
/// spanned by a widest-branch tree from that root; every source below the
/// threshold hangs as a leaf from its highest-energy core neighbor.
pub fn build_clmt<S: Scalar>(
    topology: &Topology,
    energies: &EnergyView<S>,
    sources: &BTreeSet<NodeId>,
) -> Result<TreeBuildResult<S>> {
    let (theta, core) = clmt_threshold(topology, energies, sources)?;
    let root = core
        .iter()
        .copied()
        .reduce(|a, b| if energies.get(b) > energies.get(a) { b } else { a })
        .expect("core is non-empty");
    let core_tree = widest_tree(topology, energies, root, &core)?;
    let mut parent: BTreeMap<NodeId, NodeId> = core_tree.parents().clone();
    for &v in sources.iter().filter(|v| !core.contains(v)) {
        let p = topology
            .neighbors(v)
            .iter()
            .copied()
            .filter(|u| core.contains(u))
            .reduce(|a, b| if energies.get(b) > energies.get(a) { b } else { a })
            .expect("core dominates the sources");
        parent.insert(v, p);
    }
    let tree = AggregationTree::from_parents(root, parent)?;
    let result = TreeBuildResult::new(tree, energies, 1);
    debug_assert!(result.tree_energy == theta);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::fixtures::*;

    #[test]
    fn four_cycle_example() {
        let (t, e, s) = four_cycle();
        let r = build_clmt(&t, &e, &s).unwrap();
        assert_eq!(r.tree_energy, 5.0);
        assert_eq!(r.bottleneck_node, NodeId(3));
        let (theta, core) = clmt_threshold(&t, &e, &s).unwrap();
        assert_eq!(theta, 5.0);
        assert_eq!(core, ids(&[0, 2, 3]));
        // B (2 J) is a leaf.
        assert!(r.tree.leaves().contains(&NodeId(1)));
    }

    #[test]
    fn uniform_triangle() {
        let t = Topology::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        let e = EnergyView::uniform(3, 4.0);
        let r = build_clmt(&t, &e, &ids(&[0, 1, 2])).unwrap();
        assert_eq!(r.tree_energy, 4.0);
    }

    #[test]
    fn two_sources() {
        let t = Topology::from_edges(2, &[(0, 1)]);
        let e = EnergyView::from_vec(vec![3.0, 7.0]).unwrap();
        let r = build_clmt(&t, &e, &ids(&[0, 1])).unwrap();
        assert_eq!(r.tree_energy, 7.0);
        assert_eq!(r.tree.root(), NodeId(1));
        assert_eq!(r.tree.parent(NodeId(0)), Some(NodeId(1)));
    }

    #[test]
    fn single_source() {
        let t = Topology::from_edges(1, &[]);
        let e = EnergyView::uniform(1, 2.5);
        let r = build_clmt(&t, &e, &ids(&[0])).unwrap();
        assert_eq!(r.tree_energy, 2.5);
        assert_eq!(r.bottleneck_node, NodeId(0));
    }

    #[test]
    fn path_forces_middle_aggregator() {
        let t = Topology::from_edges(3, &[(0, 1), (1, 2)]);
        let e = EnergyView::from_vec(vec![3.0, 7.0, 5.0]).unwrap();
        let r = build_clmt(&t, &e, &ids(&[0, 1, 2])).unwrap();
        assert_eq!(r.tree_energy, 7.0);
        assert_eq!(r.tree.root(), NodeId(1));
    }

    #[test]
    fn not_connected() {
        let t = Topology::from_edges(3, &[(0, 1)]);
        let e = EnergyView::uniform(3, 1.0);
        assert!(matches!(
            build_clmt(&t, &e, &ids(&[0, 1, 2])),
            Err(Error::NotConnected(_))
        ));
    }
}
