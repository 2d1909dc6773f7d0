//! Aggregation tree construction.
//!
//! All builders span the source set only, over the subgraph the sources
//! induce in the field. Branch energy of a source is the minimum residual
//! energy over its ancestors (the source itself excluded); tree energy is
//! the minimum over aggregating (non-leaf) nodes.
//!
//! * [`build_espan`]: root at the highest-energy source, parents one hop
//!   closer to the root with the highest energy. The original E-Span parent
//!   rule is not available to us; this is the reconstruction used throughout.
//! * [`build_dlmt`]: one widest-branch tree per candidate root, keep the
//!   highest-energy one.
//! * [`build_clmt`]: locate the bottleneck energy threshold directly and
//!   build the tree around the nodes above it.

mod clmt;
mod dlmt;
mod energy;
mod espan;
mod graph;
pub mod oracle;
mod widest;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

pub use clmt::{build_clmt, clmt_threshold};
pub use dlmt::build_dlmt;
pub use energy::{bottleneck_node, branch_energy, tree_energy};
pub use espan::build_espan;
pub use oracle::{exhaustive_branch_energy, oracle_best_tree};
pub use widest::widest_tree;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::topology::{EnergyView, NodeId, Topology};

/// A rooted tree over a node set, stored as a parent map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationTree {
    root: NodeId,
    parent: BTreeMap<NodeId, NodeId>,
    depth: BTreeMap<NodeId, u32>,
    members: BTreeSet<NodeId>,
}

impl AggregationTree {
    pub fn singleton(root: NodeId) -> Self {
        AggregationTree {
            root,
            parent: BTreeMap::new(),
            depth: BTreeMap::from([(root, 0)]),
            members: BTreeSet::from([root]),
        }
    }

    /// Build from a parent map; fails if some node does not reach `root`.
    pub fn from_parents(root: NodeId, parent: BTreeMap<NodeId, NodeId>) -> Result<Self> {
        if parent.contains_key(&root) {
            return Err(Error::InvalidArgument(format!("root {root} has a parent")));
        }
        let mut members: BTreeSet<NodeId> = parent.keys().copied().collect();
        members.insert(root);
        let mut depth = BTreeMap::from([(root, 0u32)]);
        for &start in parent.keys() {
            let mut chain = Vec::new();
            let mut cur = start;
            let base = loop {
                if let Some(&d) = depth.get(&cur) {
                    break d;
                }
                if chain.len() > members.len() {
                    return Err(Error::InvalidArgument(format!(
                        "cycle through node {start}"
                    )));
                }
                chain.push(cur);
                cur = match parent.get(&cur) {
                    Some(&p) => p,
                    None => {
                        return Err(Error::InvalidArgument(format!(
                            "node {cur} does not reach root {root}"
                        )))
                    }
                };
            };
            for (k, &v) in chain.iter().rev().enumerate() {
                depth.insert(v, base + k as u32 + 1);
            }
        }
        Ok(AggregationTree {
            root,
            parent,
            depth,
            members,
        })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent.get(&id).copied()
    }

    pub fn parents(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.parent
    }

    pub fn depth(&self, id: NodeId) -> Option<u32> {
        self.depth.get(&id).copied()
    }

    pub fn members(&self) -> &BTreeSet<NodeId> {
        &self.members
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.members.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_depth(&self) -> u32 {
        self.depth.values().copied().max().unwrap_or(0)
    }

    pub fn depth_sum(&self) -> u64 {
        self.depth.values().map(|&d| d as u64).sum()
    }

    /// Nodes with at least one child.
    pub fn non_leaves(&self) -> BTreeSet<NodeId> {
        self.parent.values().copied().collect()
    }

    pub fn leaves(&self) -> BTreeSet<NodeId> {
        let inner = self.non_leaves();
        self.members.difference(&inner).copied().collect()
    }

    pub fn children(&self, id: NodeId) -> Vec<NodeId> {
        self.parent
            .iter()
            .filter(|(_, &p)| p == id)
            .map(|(&c, _)| c)
            .collect()
    }

    /// The leaf-to-root node list for `leaf`.
    pub fn branch(&self, leaf: NodeId) -> Result<BranchPath> {
        if !self.contains(leaf) {
            return Err(Error::NotAMember(leaf));
        }
        let mut nodes = vec![leaf];
        let mut cur = leaf;
        while let Some(p) = self.parent(cur) {
            nodes.push(p);
            cur = p;
        }
        Ok(BranchPath { leaf, nodes })
    }

    /// Check the structural invariants against a topology.
    pub fn validate(&self, topology: &Topology) -> Result<()> {
        for (&c, &p) in &self.parent {
            if !topology.are_adjacent(c, p) {
                return Err(Error::InvalidArgument(format!(
                    "tree edge {c}-{p} is not in the topology"
                )));
            }
            if self.depth(c) != self.depth(p).map(|d| d + 1) {
                return Err(Error::InvalidArgument(format!("depth mismatch at {c}")));
            }
        }
        if self.depth(self.root) != Some(0) {
            return Err(Error::InvalidArgument("root depth is not 0".into()));
        }
        Ok(())
    }

    /// `root <id>` followed by one `edge <child> <parent> depth=<d>` line per non-root member.
    pub fn to_text(&self) -> String {
        let mut out = format!("root {}\n", self.root);
        for (&c, &p) in &self.parent {
            let _ = writeln!(out, "edge {c} {p} depth={}", self.depth[&c]);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut root = None;
        let mut parent = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Parse {
                line: i + 1,
                msg: format!("unrecognized tree line `{line}`"),
            };
            match f.as_slice() {
                [] => {}
                ["root", id] => root = Some(NodeId(id.parse().map_err(|_| bad())?)),
                ["edge", c, p, _depth] => {
                    parent.insert(
                        NodeId(c.parse().map_err(|_| bad())?),
                        NodeId(p.parse().map_err(|_| bad())?),
                    );
                }
                _ => return Err(bad()),
            }
        }
        let root = root.ok_or(Error::Parse {
            line: 1,
            msg: "missing root line".into(),
        })?;
        AggregationTree::from_parents(root, parent)
    }
}

/// Nodes from a leaf up to the root, leaf first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchPath {
    pub leaf: NodeId,
    pub nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeBuildResult<S> {
    pub tree: AggregationTree,
    pub tree_energy: S,
    /// The aggregator attaining the tree energy.
    pub bottleneck_node: NodeId,
    /// Number of candidate trees compared (one per root for DLMT).
    pub candidate_count: usize,
}

impl<S: Scalar> TreeBuildResult<S> {
    pub(crate) fn new(tree: AggregationTree, energies: &EnergyView<S>, candidate_count: usize) -> Self {
        let tree_energy = tree_energy(&tree, energies);
        let bottleneck_node = bottleneck_node(&tree, energies);
        TreeBuildResult {
            tree,
            tree_energy,
            bottleneck_node,
            candidate_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Espan,
    Dlmt,
    Clmt,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Espan, Scheme::Dlmt, Scheme::Clmt];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Espan => "espan",
            Scheme::Dlmt => "dlmt",
            Scheme::Clmt => "clmt",
        }
    }

    pub fn build<S: Scalar>(
        self,
        topology: &Topology,
        energies: &EnergyView<S>,
        sources: &BTreeSet<NodeId>,
    ) -> Result<TreeBuildResult<S>> {
        match self {
            Scheme::Espan => build_espan(topology, energies, sources),
            Scheme::Dlmt => build_dlmt(topology, energies, sources),
            Scheme::Clmt => build_clmt(topology, energies, sources),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "espan" => Ok(Scheme::Espan),
            "dlmt" => Ok(Scheme::Dlmt),
            "clmt" => Ok(Scheme::Clmt),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme `{other}` (expected espan, dlmt or clmt)"
            ))),
        }
    }
}

pub(crate) fn check_sources(sources: &BTreeSet<NodeId>) -> Result<()> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument("source set is empty".into()));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The 4-cycle A(9)-B(2)-C(7)-D(5)-A with A..D = 0..3.
    pub fn four_cycle() -> (Topology, EnergyView<f64>, BTreeSet<NodeId>) {
        let t = Topology::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        let e = EnergyView::from_vec(vec![9.0, 2.0, 7.0, 5.0]).unwrap();
        let s = (0..4).map(NodeId).collect();
        (t, e, s)
    }

    pub fn ids(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }
}
