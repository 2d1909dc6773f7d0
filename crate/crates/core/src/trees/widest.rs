use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topology::{EnergyView, NodeId, Topology};

use super::graph::InducedGraph;
use super::AggregationTree;

/// A tree rooted at `root` spanning `sources` in which every source's branch
/// energy is the best achievable over all paths to the root.
///
/// Construction runs in three passes over the induced source graph:
///
/// 1. best-first label expansion from the root, `label(v) = min(label(u), e_v)`
///    maximized over neighbors `u` (the widest path value including `v`);
/// 2. for each source `v`, the best branch value is the largest label among its
///    neighbors, and only neighbors carrying that label are admissible parents;
/// 3. a breadth-first pass over the admissible-parent relation picks, for each
///    source, an admissible parent with the fewest hops to the root, then the
///    highest residual energy, then the lowest id.
///
/// Every admissible parent's own branch is optimal, so the choice in pass 3
/// never loses branch energy; it only shortens the tree.
pub fn widest_tree<S: Scalar>(
    topology: &Topology,
    energies: &EnergyView<S>,
    root: NodeId,
    sources: &BTreeSet<NodeId>,
) -> Result<AggregationTree> {
    if !sources.contains(&root) {
        return Err(Error::InvalidArgument(format!(
            "root {root} is not one of the sources"
        )));
    }
    let g = InducedGraph::new(topology, sources);
    let n = g.len();
    let r = g.local(root).expect("root is a source");
    let e: Vec<S> = g.ids.iter().map(|&id| energies.get(id)).collect();

    let label = widest_labels(&g, &e, r);
    if let Some(i) = label.iter().position(Option::is_none) {
        return Err(Error::NotConnected(format!(
            "source {} cannot reach root {root}",
            g.ids[i]
        )));
    }
    let label: Vec<S> = label.into_iter().map(Option::unwrap).collect();

    // Best branch value: the largest neighbor label.
    let best: Vec<Option<S>> = (0..n)
        .map(|v| {
            g.adj[v]
                .iter()
                .map(|&u| label[u])
                .reduce(Scalar::max_energy)
        })
        .collect();
    let admissible = |p: usize, v: usize| v != r && best[v] == Some(label[p]);

    let mut hops = vec![u32::MAX; n];
    hops[r] = 0;
    let mut queue = VecDeque::from([r]);
    while let Some(p) = queue.pop_front() {
        for &v in &g.adj[p] {
            if hops[v] == u32::MAX && admissible(p, v) {
                hops[v] = hops[p] + 1;
                queue.push_back(v);
            }
        }
    }
    debug_assert!(hops.iter().all(|&h| h != u32::MAX));

    let mut parent = BTreeMap::new();
    for v in 0..n {
        if v == r {
            continue;
        }
        let chosen = g.adj[v]
            .iter()
            .copied()
            .filter(|&p| admissible(p, v) && hops[p] + 1 == hops[v])
            .reduce(|a, b| if e[b] > e[a] { b } else { a })
            .expect("an admissible parent one hop closer exists");
        parent.insert(g.ids[v], g.ids[chosen]);
    }
    AggregationTree::from_parents(root, parent)
}

/// Widest-path labels (node weights, endpoint included) from local root `r`.
fn widest_labels<S: Scalar>(g: &InducedGraph, e: &[S], r: usize) -> Vec<Option<S>> {
    let n = g.len();
    let mut label: Vec<Option<S>> = vec![None; n];
    let mut settled = vec![false; n];
    label[r] = Some(e[r]);
    // Source sets are small; a linear scan keeps the tie order (lowest index) explicit.
    loop {
        let mut pick: Option<usize> = None;
        for v in 0..n {
            if settled[v] {
                continue;
            }
            if let Some(lv) = label[v] {
                if pick.map_or(true, |p| lv > label[p].unwrap()) {
                    pick = Some(v);
                }
            }
        }
        let Some(u) = pick else { break };
        settled[u] = true;
        let lu = label[u].unwrap();
        for &v in &g.adj[u] {
            if settled[v] {
                continue;
            }
            let cand = lu.min_energy(e[v]);
            if label[v].map_or(true, |lv| cand > lv) {
                label[v] = Some(cand);
            }
        }
    }
    label
}
