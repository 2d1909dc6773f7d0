//! Random sensor-field deployment.
//!
//! Nodes are dropped uniformly over a square of side `sqrt(N / density)`;
//! two nodes are neighbors when their Euclidean distance is at most the
//! radio range. Sources form one connected cluster (a single stimulus) and
//! sinks are drawn from the remaining nodes.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};
use crate::scalar::Scalar;

/// Attempts per seed before source selection gives up.
pub const SOURCE_RETRIES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Source,
    Sink,
    Relay,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Source => "source",
            Role::Sink => "sink",
            Role::Relay => "relay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// An immutable deployed field.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    width: f64,
    positions: Vec<Position>,
    /// Sorted neighbor lists.
    adjacency: Vec<Vec<NodeId>>,
    sources: BTreeSet<NodeId>,
    sinks: BTreeSet<NodeId>,
}

impl Topology {
    /// Build a field from explicit positions, connecting every pair within `radio_range`.
    pub fn from_positions(width: f64, positions: Vec<Position>, radio_range: f64) -> Self {
        let n = positions.len();
        let mut adjacency = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if positions[i].distance(&positions[j]) <= radio_range {
                    adjacency[i].push(NodeId(j as u32));
                    adjacency[j].push(NodeId(i as u32));
                }
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Topology {
            width,
            positions,
            adjacency,
            sources: BTreeSet::new(),
            sinks: BTreeSet::new(),
        }
    }

    /// Build a field from an explicit edge list; positions are laid out on a line.
    ///
    /// Intended for hand-made graphs in tests and examples.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let positions = (0..n)
            .map(|i| Position {
                x: i as f64,
                y: 0.0,
            })
            .collect();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in edges {
            assert!(a != b, "self loop {a}");
            if !adjacency[a as usize].contains(&NodeId(b)) {
                adjacency[a as usize].push(NodeId(b));
                adjacency[b as usize].push(NodeId(a));
            }
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Topology {
            width: n as f64,
            positions,
            adjacency,
            sources: BTreeSet::new(),
            sinks: BTreeSet::new(),
        }
    }

    pub fn with_sources(mut self, sources: impl IntoIterator<Item = NodeId>) -> Self {
        self.sources = sources.into_iter().collect();
        self
    }

    pub fn with_sinks(mut self, sinks: impl IntoIterator<Item = NodeId>) -> Self {
        self.sinks = sinks.into_iter().collect();
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.len() as u32).map(NodeId)
    }

    pub fn position(&self, id: NodeId) -> Position {
        self.positions[id.index()]
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    pub fn neighbors(&self, id: NodeId) -> &[NodeId] {
        &self.adjacency[id.index()]
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        self.adjacency[a.index()].binary_search(&b).is_ok()
    }

    pub fn distance(&self, a: NodeId, b: NodeId) -> f64 {
        self.position(a).distance(&self.position(b))
    }

    pub fn sources(&self) -> &BTreeSet<NodeId> {
        &self.sources
    }

    pub fn sinks(&self) -> &BTreeSet<NodeId> {
        &self.sinks
    }

    pub fn role(&self, id: NodeId) -> Role {
        if self.sources.contains(&id) {
            Role::Source
        } else if self.sinks.contains(&id) {
            Role::Sink
        } else {
            Role::Relay
        }
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected components of the subgraph induced by `set`, each sorted,
    /// ordered by their smallest member.
    pub fn induced_components(&self, set: &BTreeSet<NodeId>) -> Vec<BTreeSet<NodeId>> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for &start in set {
            if seen.contains(&start) {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut queue = VecDeque::from([start]);
            seen.insert(start);
            while let Some(u) = queue.pop_front() {
                comp.insert(u);
                for &v in self.neighbors(u) {
                    if set.contains(&v) && seen.insert(v) {
                        queue.push_back(v);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    pub fn is_induced_connected(&self, set: &BTreeSet<NodeId>) -> bool {
        self.induced_components(set).len() <= 1
    }

    /// Write the line-oriented text form, including each node's energy.
    pub fn to_text(&self, energies: &EnergyView<f64>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "nodes {} width {}", self.len(), self.width);
        for id in self.node_ids() {
            let p = self.position(id);
            let _ = writeln!(
                out,
                "node {} {} {} {} {}",
                id,
                p.x,
                p.y,
                energies.get(id),
                self.role(id).as_str()
            );
        }
        for id in self.node_ids() {
            for &v in self.neighbors(id) {
                if id < v {
                    let _ = writeln!(out, "edge {id} {v}");
                }
            }
        }
        out
    }

    /// Parse the text form written by [`Topology::to_text`].
    pub fn from_text(text: &str) -> Result<(Topology, EnergyView<f64>)> {
        let perr = |line: usize, msg: String| Error::Parse { line, msg };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines
            .next()
            .ok_or_else(|| perr(1, "empty topology file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "nodes" || h[2] != "width" {
            return Err(perr(hl + 1, format!("bad header `{header}`")));
        }
        let n: usize = h[1].parse().map_err(|_| perr(hl + 1, "bad node count".into()))?;
        let width: f64 = h[3].parse().map_err(|_| perr(hl + 1, "bad width".into()))?;
        let mut positions = vec![None; n];
        let mut energy = vec![0.0; n];
        let mut sources = BTreeSet::new();
        let mut sinks = BTreeSet::new();
        let mut adjacency = vec![Vec::new(); n];
        for (i, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            let ln = i + 1;
            match f.first().copied() {
                Some("node") if f.len() == 6 => {
                    let id: usize = f[1].parse().map_err(|_| perr(ln, "bad id".into()))?;
                    if id >= n {
                        return Err(perr(ln, format!("node id {id} out of range")));
                    }
                    let x: f64 = f[2].parse().map_err(|_| perr(ln, "bad x".into()))?;
                    let y: f64 = f[3].parse().map_err(|_| perr(ln, "bad y".into()))?;
                    let e: f64 = f[4].parse().map_err(|_| perr(ln, "bad energy".into()))?;
                    positions[id] = Some(Position { x, y });
                    energy[id] = e;
                    match f[5] {
                        "source" => {
                            sources.insert(NodeId(id as u32));
                        }
                        "sink" => {
                            sinks.insert(NodeId(id as u32));
                        }
                        "relay" => {}
                        other => return Err(perr(ln, format!("unknown role `{other}`"))),
                    }
                }
                Some("edge") if f.len() == 3 => {
                    let a: usize = f[1].parse().map_err(|_| perr(ln, "bad edge".into()))?;
                    let b: usize = f[2].parse().map_err(|_| perr(ln, "bad edge".into()))?;
                    if a >= n || b >= n || a == b {
                        return Err(perr(ln, format!("invalid edge {a} {b}")));
                    }
                    adjacency[a].push(NodeId(b as u32));
                    adjacency[b].push(NodeId(a as u32));
                }
                _ => return Err(perr(ln, format!("unrecognized line `{line}`"))),
            }
        }
        let positions = positions
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| perr(0, format!("node {i} missing"))))
            .collect::<Result<Vec<_>>>()?;
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        let topo = Topology {
            width,
            positions,
            adjacency,
            sources,
            sinks,
        };
        Ok((topo, EnergyView::from_vec(energy)?))
    }
}

/// Per-node residual energy in joules, indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyView<S> {
    values: Vec<S>,
}

impl<S: Scalar> EnergyView<S> {
    pub fn from_vec(values: Vec<S>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| *v < S::zero()) {
            return Err(Error::InvalidArgument(format!(
                "negative energy for node {i}"
            )));
        }
        Ok(EnergyView { values })
    }

    pub fn uniform(n: usize, value: S) -> Self {
        EnergyView {
            values: vec![value; n],
        }
    }

    #[inline]
    pub fn get(&self, id: NodeId) -> S {
        self.values[id.index()]
    }

    pub fn set(&mut self, id: NodeId, value: S) {
        self.values[id.index()] = value;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    /// Convert to another scalar type.
    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> EnergyView<T> {
        EnergyView {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: S) -> Self {
        self.map(|v| v * factor)
    }
}

/// Side length of a square field holding `n` nodes at `density` nodes/m².
pub fn field_width(n: usize, density: f64) -> Result<f64> {
    if n < 1 || !(density > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "field_width needs n >= 1 and density > 0 (got n={n}, density={density})"
        )));
    }
    Ok((n as f64 / density).sqrt())
}

/// Deploy nodes, connect them and designate sources and sinks.
pub fn deploy(config: &SimConfig) -> Result<Topology> {
    config.validate()?;
    let width = field_width(config.node_count, config.node_density)?;
    let mut rng = stream(config.seed, Stream::Deployment);
    let positions = (0..config.node_count)
        .map(|_| Position {
            x: rng.gen::<f64>() * width,
            y: rng.gen::<f64>() * width,
        })
        .collect();
    let mut topo = Topology::from_positions(width, positions, config.radio_range);
    topo.sources = select_sources(&topo, config.source_fraction, config.seed)?;
    topo.sinks = select_sinks(&topo, config.sink_count, config.seed)?;
    Ok(topo)
}

/// Pick `round(fraction * N)` nodes forming a connected induced subgraph.
///
/// Each attempt starts at a uniformly random node and repeatedly adds a
/// uniformly random frontier node until the quota is met.
pub fn select_sources(topology: &Topology, fraction: f64, seed: u64) -> Result<BTreeSet<NodeId>> {
    let n = topology.len();
    let quota = (fraction * n as f64).round() as usize;
    if quota < 1 || quota > n {
        return Err(Error::InvalidConfig(format!(
            "source quota round({fraction} * {n}) = {quota} is not in [1, {n}]"
        )));
    }
    let mut rng = stream(seed, Stream::Sources);
    for _ in 0..SOURCE_RETRIES {
        let start = NodeId(rng.gen_range(0..n as u32));
        let mut chosen = vec![false; n];
        let mut in_frontier = vec![false; n];
        let mut frontier: Vec<NodeId> = Vec::new();
        let mut picked = BTreeSet::new();
        let add = |v: NodeId,
                       chosen: &mut Vec<bool>,
                       in_frontier: &mut Vec<bool>,
                       frontier: &mut Vec<NodeId>,
                       picked: &mut BTreeSet<NodeId>| {
            chosen[v.index()] = true;
            picked.insert(v);
            for &w in topology.neighbors(v) {
                if !chosen[w.index()] && !in_frontier[w.index()] {
                    in_frontier[w.index()] = true;
                    frontier.push(w);
                }
            }
        };
        add(start, &mut chosen, &mut in_frontier, &mut frontier, &mut picked);
        while picked.len() < quota && !frontier.is_empty() {
            let k = rng.gen_range(0..frontier.len());
            let v = frontier.swap_remove(k);
            add(v, &mut chosen, &mut in_frontier, &mut frontier, &mut picked);
        }
        if picked.len() == quota {
            return Ok(picked);
        }
    }
    Err(Error::DeploymentInfeasible {
        seed,
        reason: format!("no connected set of {quota} sources after {SOURCE_RETRIES} attempts"),
    })
}

/// Pick `count` distinct non-source nodes.
pub fn select_sinks(topology: &Topology, count: usize, seed: u64) -> Result<BTreeSet<NodeId>> {
    let mut candidates: Vec<NodeId> = topology
        .node_ids()
        .filter(|id| !topology.sources.contains(id))
        .collect();
    if count > candidates.len() {
        return Err(Error::InvalidConfig(format!(
            "{count} sinks requested but only {} non-source nodes",
            candidates.len()
        )));
    }
    let mut rng = stream(seed, Stream::Sinks);
    candidates.shuffle(&mut rng);
    Ok(candidates.into_iter().take(count).collect())
}

/// Initial energies: uniform in the configured range for sources, fixed for everyone else.
pub fn assign_energy(topology: &Topology, config: &SimConfig, seed: u64) -> Result<EnergyView<f64>> {
    config.validate()?;
    let mut rng = stream(seed, Stream::Energy);
    let mut values = vec![config.non_source_energy; topology.len()];
    let span = config.source_energy_max - config.source_energy_min;
    for &s in &topology.sources {
        values[s.index()] = config.source_energy_min + span * rng.gen::<f64>();
    }
    EnergyView::from_vec(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, seed: u64) -> SimConfig {
        SimConfig {
            node_count: n,
            seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn field_width_examples() {
        let d = 55.0 / 1652.0;
        assert!((field_width(100, d).unwrap() - 54.81).abs() < 0.01);
        assert!((field_width(55, d).unwrap() - 40.64).abs() < 0.01);
        assert_eq!(field_width(1, 1.0).unwrap(), 1.0);
        assert!(field_width(0, d).is_err());
        assert!(field_width(10, 0.0).is_err());
        assert!(field_width(10, -1.0).is_err());
    }

    #[test]
    fn deploy_bounds_and_counts() {
        let c = cfg(50, 1);
        let t = deploy(&c).unwrap();
        let w = field_width(50, c.node_density).unwrap();
        assert_eq!(t.len(), 50);
        for p in t.positions() {
            assert!((0.0..=w).contains(&p.x) && (0.0..=w).contains(&p.y));
        }
        let t = deploy(&cfg(100, 3)).unwrap();
        assert_eq!(t.sources().len(), 10);
        assert_eq!(t.sinks().len(), 5);
        assert!(t.sources().is_disjoint(t.sinks()));
        assert!(t.is_induced_connected(t.sources()));
    }

    #[test]
    fn deploy_is_deterministic() {
        let a = deploy(&cfg(100, 7)).unwrap();
        let b = deploy(&cfg(100, 7)).unwrap();
        let ea = assign_energy(&a, &cfg(100, 7), 7).unwrap();
        let eb = assign_energy(&b, &cfg(100, 7), 7).unwrap();
        assert_eq!(a.to_text(&ea), b.to_text(&eb));
    }

    #[test]
    fn single_node_sources() {
        let t = Topology::from_edges(1, &[]);
        let s = select_sources(&t, 1.0, 3).unwrap();
        assert_eq!(s, BTreeSet::from([NodeId(0)]));
    }

    #[test]
    fn infeasible_sources_name_the_seed() {
        // Four isolated nodes cannot host two connected sources.
        let t = Topology::from_edges(4, &[]);
        match select_sources(&t, 0.5, 99) {
            Err(Error::DeploymentInfeasible { seed, .. }) => assert_eq!(seed, 99),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sink_selection_rules() {
        let t = deploy(&cfg(100, 5)).unwrap();
        assert!(select_sinks(&t, 0, 5).unwrap().is_empty());
        let s = select_sinks(&t, 5, 5).unwrap();
        assert_eq!(s, select_sinks(&t, 5, 5).unwrap());
        assert!(s.is_disjoint(t.sources()));
        assert!(select_sinks(&t, 91, 5).is_err());
    }

    #[test]
    fn energy_assignment_ranges() {
        let c = cfg(100, 11);
        let t = deploy(&c).unwrap();
        let e = assign_energy(&t, &c, 11).unwrap();
        for id in t.node_ids() {
            let v = e.get(id);
            if t.sources().contains(&id) {
                assert!((12.0..=18.0).contains(&v));
            } else {
                assert_eq!(v, 50.0);
                assert!(v > 18.0);
            }
        }
    }

    #[test]
    fn text_format_round_trip() {
        let c = cfg(60, 2);
        let t = deploy(&c).unwrap();
        let e = assign_energy(&t, &c, 2).unwrap();
        let text = t.to_text(&e);
        let (t2, e2) = Topology::from_text(&text).unwrap();
        assert_eq!(t2, t);
        assert_eq!(e2, e);
        assert!(text.starts_with("nodes 60 width "));
    }

    #[test]
    fn text_format_rejects_garbage() {
        assert!(Topology::from_text("").is_err());
        assert!(Topology::from_text("nodes 1 width 1\nnode 0 0 0 1 wizard\n").is_err());
        assert!(Topology::from_text("nodes 1 width 1\nedge 0 0\n").is_err());
        assert!(Topology::from_text("nodes 2 width 1\nnode 0 0 0 1 relay\n").is_err());
    }
}
