use std::collections::BTreeSet;

use crate::error::Result;
use crate::scalar::Scalar;
use crate::topology::{EnergyView, NodeId, Topology};

use super::{check_sources, widest_tree, TreeBuildResult};

/// Build one widest-branch tree per source as root and keep the best.
///
/// Best means highest tree energy, then lowest total depth (equivalently
/// lowest average depth; every candidate spans the same sources), then
/// lowest root id.
pub fn build_dlmt<S: Scalar>(
    topology: &Topology,
    energies: &EnergyView<S>,
    sources: &BTreeSet<NodeId>,
) -> Result<TreeBuildResult<S>> {
    check_sources(sources)?;
    let mut best: Option<TreeBuildResult<S>> = None;
    for &root in sources {
        let tree = widest_tree(topology, energies, root, sources)?;
        let cand = TreeBuildResult::new(tree, energies, sources.len());
        let better = match &best {
            None => true,
            Some(b) => {
                cand.tree_energy > b.tree_energy
                    || (cand.tree_energy == b.tree_energy
                        && cand.tree.depth_sum() < b.tree.depth_sum())
            }
        };
        if better {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one source"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::fixtures::*;
    use crate::Error;

    #[test]
    fn four_cycle_example() {
        let (t, e, s) = four_cycle();
        let r = build_dlmt(&t, &e, &s).unwrap();
        assert_eq!(r.tree_energy, 5.0);
        assert_eq!(r.candidate_count, 4);
    }

    #[test]
    fn two_sources_root_at_higher() {
        let t = Topology::from_edges(2, &[(0, 1)]);
        let e = EnergyView::from_vec(vec![3.0, 7.0]).unwrap();
        let r = build_dlmt(&t, &e, &ids(&[0, 1])).unwrap();
        assert_eq!(r.tree.root(), NodeId(1));
        assert_eq!(r.tree_energy, 7.0);
    }

    #[test]
    fn single_source() {
        let t = Topology::from_edges(2, &[(0, 1)]);
        let e = EnergyView::from_vec(vec![3.0, 7.0]).unwrap();
        let r = build_dlmt(&t, &e, &ids(&[0])).unwrap();
        assert_eq!(r.tree.root(), NodeId(0));
        assert_eq!(r.candidate_count, 1);
        assert_eq!(r.tree_energy, 3.0);
    }

    #[test]
    fn depth_breaks_energy_ties() {
        // Path 0-1-2 with equal energies: rooting at the middle gives depth sum 2.
        let t = Topology::from_edges(3, &[(0, 1), (1, 2)]);
        let e = EnergyView::uniform(3, 5.0);
        let r = build_dlmt(&t, &e, &ids(&[0, 1, 2])).unwrap();
        assert_eq!(r.tree.root(), NodeId(1));
    }

    #[test]
    fn propagates_not_connected() {
        let t = Topology::from_edges(3, &[(0, 1)]);
        let e = EnergyView::uniform(3, 5.0);
        assert!(matches!(
            build_dlmt(&t, &e, &ids(&[0, 1, 2])),
            Err(Error::NotConnected(_))
        ));
    }
}
