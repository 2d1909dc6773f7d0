use crate::error::Result;
use crate::scalar::Scalar;
use crate::topology::{EnergyView, NodeId};

use super::AggregationTree;

/// Minimum residual energy over the ancestors of `leaf`.
///
/// A branch made of the root alone has the root's own energy.
pub fn branch_energy<S: Scalar>(
    tree: &AggregationTree,
    energies: &EnergyView<S>,
    leaf: NodeId,
) -> Result<S> {
    let path = tree.branch(leaf)?;
    let value = path.nodes[1..]
        .iter()
        .map(|&v| energies.get(v))
        .reduce(Scalar::min_energy)
        .unwrap_or_else(|| energies.get(leaf));
    Ok(value)
}

/// Minimum residual energy over the nodes that have children.
pub fn tree_energy<S: Scalar>(tree: &AggregationTree, energies: &EnergyView<S>) -> S {
    energies.get(bottleneck_node(tree, energies))
}

/// The lowest-energy aggregator (ties go to the lower id); the root for a singleton.
pub fn bottleneck_node<S: Scalar>(tree: &AggregationTree, energies: &EnergyView<S>) -> NodeId {
    let mut best: Option<(S, NodeId)> = None;
    for v in tree.non_leaves() {
        let e = energies.get(v);
        if best.map_or(true, |(b, _)| e < b) {
            best = Some((e, v));
        }
    }
    best.map_or(tree.root(), |(_, v)| v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::fixtures::*;
    use crate::Rational;
    use std::collections::BTreeMap;

    fn path_tree(edges: &[(u32, u32)], root: u32) -> AggregationTree {
        let parent = edges.iter().map(|&(c, p)| (NodeId(c), NodeId(p))).collect();
        AggregationTree::from_parents(NodeId(root), parent).unwrap()
    }

    #[test]
    fn branch_energy_examples() {
        // a(5) -> x(2) -> root(9)
        let e = EnergyView::from_vec(vec![5.0, 2.0, 9.0]).unwrap();
        let t = path_tree(&[(0, 1), (1, 2)], 2);
        assert_eq!(branch_energy(&t, &e, NodeId(0)).unwrap(), 2.0);
        // a(1) -> root(9)
        let e = EnergyView::from_vec(vec![1.0, 9.0]).unwrap();
        let t = path_tree(&[(0, 1)], 1);
        assert_eq!(branch_energy(&t, &e, NodeId(0)).unwrap(), 9.0);
        // leaf is the root
        let e = EnergyView::from_vec(vec![7.0]).unwrap();
        let t = AggregationTree::singleton(NodeId(0));
        assert_eq!(branch_energy(&t, &e, NodeId(0)).unwrap(), 7.0);
        assert!(branch_energy(&t, &e, NodeId(3)).is_err());
    }

    #[test]
    fn tree_energy_examples() {
        let (_, e, _) = four_cycle();
        // B -> C -> D -> A
        let t = path_tree(&[(1, 2), (2, 3), (3, 0)], 0);
        assert_eq!(tree_energy(&t, &e), 5.0);
        assert_eq!(bottleneck_node(&t, &e), NodeId(3));

        let e = EnergyView::from_vec(vec![6.0, 1.0, 2.0, 3.0]).unwrap();
        let star = path_tree(&[(1, 0), (2, 0), (3, 0)], 0);
        assert_eq!(tree_energy(&star, &e), 6.0);

        let e = EnergyView::from_vec(vec![3.0]).unwrap();
        assert_eq!(tree_energy(&AggregationTree::singleton(NodeId(0)), &e), 3.0);
    }

    #[test]
    fn exact_energies() {
        let e = EnergyView::from_vec(vec![Rational::new(1, 3), Rational::new(1, 7)]).unwrap();
        let t = AggregationTree::from_parents(NodeId(1), BTreeMap::from([(NodeId(0), NodeId(1))]))
            .unwrap();
        assert_eq!(tree_energy(&t, &e), Rational::new(1, 7));
    }
}
