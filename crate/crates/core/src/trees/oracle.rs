//! Exhaustive reference searches for small source sets.
//!
//! These do not share code with the builders: spanning trees are
//! enumerated as edge subsets and scored from vertex degrees, and branch
//! values come from enumerating simple paths.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topology::{EnergyView, NodeId, Topology};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Rational;

use super::{branch_energy, build_clmt, build_dlmt, build_espan, AggregationTree};

/// Default maximum number of sources the oracle accepts.
pub const ORACLE_LIMIT: usize = 8;

/// Enumerate every spanning tree of the induced source graph under every
/// root and return one with the highest tree energy.
pub fn oracle_best_tree<S: Scalar>(
    topology: &Topology,
    energies: &EnergyView<S>,
    sources: &BTreeSet<NodeId>,
    limit: usize,
) -> Result<(AggregationTree, S)> {
    if sources.len() > limit {
        return Err(Error::OracleLimit {
            size: sources.len(),
            limit,
        });
    }
    let ids: Vec<NodeId> = sources.iter().copied().collect();
    let n = ids.len();
    if n == 0 {
        return Err(Error::InvalidArgument("source set is empty".into()));
    }
    if n == 1 {
        return Ok((AggregationTree::singleton(ids[0]), energies.get(ids[0])));
    }
    let e: Vec<S> = ids.iter().map(|&v| energies.get(v)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if topology.are_adjacent(ids[i], ids[j]) {
                edges.push((i, j));
            }
        }
    }

    let mut best: Option<(S, Vec<(usize, usize)>, usize)> = None;
    let mut chosen = Vec::with_capacity(n - 1);
    let comp: Vec<usize> = (0..n).collect();
    enumerate(&edges, 0, n, comp, &mut chosen, &mut |tree_edges| {
        let mut degree = vec![0u32; n];
        for &(a, b) in tree_edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        for root in 0..n {
            let value = (0..n)
                .filter(|&v| v == root || degree[v] >= 2)
                .map(|v| e[v])
                .reduce(Scalar::min_energy)
                .unwrap();
            if best.as_ref().map_or(true, |(b, _, _)| value > *b) {
                best = Some((value, tree_edges.to_vec(), root));
            }
        }
    });
    let (value, tree_edges, root) = best.ok_or_else(|| {
        Error::NotConnected("induced source graph has no spanning tree".into())
    })?;
    Ok((orient(&ids, &tree_edges, root)?, value))
}

/// Backtracking over edge subsets; `comp` is a flat component labelling.
fn enumerate(
    edges: &[(usize, usize)],
    from: usize,
    n: usize,
    comp: Vec<usize>,
    chosen: &mut Vec<(usize, usize)>,
    visit: &mut dyn FnMut(&[(usize, usize)]),
) {
    if chosen.len() == n - 1 {
        visit(chosen);
        return;
    }
    let needed = n - 1 - chosen.len();
    for k in from..edges.len() {
        if edges.len() - k < needed {
            break;
        }
        let (a, b) = edges[k];
        let (ca, cb) = (comp[a], comp[b]);
        if ca == cb {
            continue;
        }
        let merged: Vec<usize> = comp.iter().map(|&c| if c == cb { ca } else { c }).collect();
        chosen.push((a, b));
        enumerate(edges, k + 1, n, merged, chosen, visit);
        chosen.pop();
    }
}

fn orient(ids: &[NodeId], edges: &[(usize, usize)], root: usize) -> Result<AggregationTree> {
    let n = ids.len();
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut parent = BTreeMap::new();
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                parent.insert(ids[v], ids[u]);
                queue.push_back(v);
            }
        }
    }
    AggregationTree::from_parents(ids[root], parent)
}

/// Best branch value from `leaf` to `root` over all simple paths inside
/// `sources`: the maximum over paths of the minimum energy on the path,
/// `leaf` excluded. `None` if no path exists.
pub fn exhaustive_branch_energy<S: Scalar>(
    topology: &Topology,
    energies: &EnergyView<S>,
    sources: &BTreeSet<NodeId>,
    leaf: NodeId,
    root: NodeId,
) -> Option<S> {
    if leaf == root {
        return Some(energies.get(root));
    }
    let mut on_path = BTreeSet::from([leaf]);
    let mut best = None;
    dfs(topology, energies, sources, leaf, root, None, &mut on_path, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn dfs<S: Scalar>(
    topology: &Topology,
    energies: &EnergyView<S>,
    sources: &BTreeSet<NodeId>,
    at: NodeId,
    root: NodeId,
    running: Option<S>,
    on_path: &mut BTreeSet<NodeId>,
    best: &mut Option<S>,
) {
    for &v in topology.neighbors(at) {
        if !sources.contains(&v) || on_path.contains(&v) {
            continue;
        }
        let m = running.map_or(energies.get(v), |r| r.min_energy(energies.get(v)));
        if v == root {
            if best.map_or(true, |b| m > b) {
                *best = Some(m);
            }
            continue;
        }
        on_path.insert(v);
        dfs(topology, energies, sources, v, root, Some(m), on_path, best);
        on_path.remove(&v);
    }
}

/// A small random instance: a connected source graph of 1..=`max_sources`
/// nodes, a few relays wired in at random, and integer energies drawn from
/// a narrow range so ties are common.
pub fn random_instance(seed: u64, max_sources: usize) -> (Topology, EnergyView<Rational>, BTreeSet<NodeId>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=max_sources.max(1));
    let relays = rng.gen_range(0..=3);
    let n = k + relays;
    let mut edges = Vec::new();
    // Random spanning tree over the sources keeps them induced-connected.
    for v in 1..k {
        edges.push((rng.gen_range(0..v) as u32, v as u32));
    }
    let density: f64 = rng.gen_range(0.0..0.7);
    for a in 0..n {
        for b in (a + 1)..n {
            let present = edges.contains(&(a as u32, b as u32));
            if !present && rng.gen_bool(density) {
                edges.push((a as u32, b as u32));
            }
        }
    }
    let sources: BTreeSet<NodeId> = (0..k as u32).map(NodeId).collect();
    let topology = Topology::from_edges(n, &edges).with_sources(sources.iter().copied());
    let top = rng.gen_range(2..=9);
    let energies = (0..n)
        .map(|_| Rational::from_integer(rng.gen_range(1..=top)))
        .collect();
    (topology, EnergyView::from_vec(energies).unwrap(), sources)
}

/// Outcome of checking the builders on one instance against the oracle.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InstanceCheck {
    /// CLMT tree energy equals the exhaustive optimum.
    pub clmt_optimal: bool,
    /// Every DLMT branch equals the best simple-path value to its root.
    pub dlmt_branches_optimal: bool,
    /// clmt >= dlmt >= espan in tree energy.
    pub dominance: bool,
}

impl InstanceCheck {
    pub fn ok(&self) -> bool {
        self.clmt_optimal && self.dlmt_branches_optimal && self.dominance
    }
}

pub fn check_instance<S: Scalar>(
    topology: &Topology,
    energies: &EnergyView<S>,
    sources: &BTreeSet<NodeId>,
    limit: usize,
) -> Result<InstanceCheck> {
    let (_, best) = oracle_best_tree(topology, energies, sources, limit)?;
    let clmt = build_clmt(topology, energies, sources)?;
    let dlmt = build_dlmt(topology, energies, sources)?;
    let espan = build_espan(topology, energies, sources)?;
    let root = dlmt.tree.root();
    let dlmt_branches_optimal = sources.iter().all(|&leaf| {
        exhaustive_branch_energy(topology, energies, sources, leaf, root)
            == Some(branch_energy(&dlmt.tree, energies, leaf).unwrap())
    });
    Ok(InstanceCheck {
        clmt_optimal: clmt.tree_energy == best,
        dlmt_branches_optimal,
        dominance: clmt.tree_energy >= dlmt.tree_energy && dlmt.tree_energy >= espan.tree_energy,
    })
}
