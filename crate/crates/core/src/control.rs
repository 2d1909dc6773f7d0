//! Control-message accounting for tree construction.
//!
//! Messages are generated analytically from the induced source graph; they
//! are counted in bytes and never lost. Each call describes one
//! construction round.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::config::SimConfig;
use crate::error::{Error, Result};
use crate::topology::{NodeId, Topology};
use crate::trees::Scheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ControlKind {
    Hello,
    EidFlood,
    ParentClaim,
    CentralReport,
    CentralAssign,
}

impl ControlKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlKind::Hello => "hello",
            ControlKind::EidFlood => "eid_flood",
            ControlKind::ParentClaim => "parent_claim",
            ControlKind::CentralReport => "central_report",
            ControlKind::CentralAssign => "central_assign",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Receiver {
    Broadcast,
    Node(NodeId),
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Receiver::Broadcast => f.write_str("broadcast"),
            Receiver::Node(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlMessage {
    pub round: u32,
    pub kind: ControlKind,
    pub sender: NodeId,
    pub receiver: Receiver,
    pub size: u32,
}

/// Control sizes in bytes, taken from the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlSizes {
    pub espan: u32,
    pub hello: u32,
    pub dlmt_header: u32,
    pub dlmt_entry: u32,
    pub clmt_report: u32,
}

impl ControlSizes {
    pub fn from_config(c: &SimConfig) -> Self {
        ControlSizes {
            espan: c.espan_control_size,
            hello: c.dlmt_hello_size,
            dlmt_header: c.dlmt_header_size,
            dlmt_entry: c.dlmt_entry_size,
            clmt_report: c.clmt_report_size,
        }
    }
}

impl Default for ControlSizes {
    fn default() -> Self {
        ControlSizes::from_config(&SimConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlTrace {
    messages: Vec<ControlMessage>,
    bytes_by_source: BTreeMap<NodeId, u64>,
    discount: f64,
}

pub const CONTROL_CSV_HEADER: &str = "round,kind,sender,receiver,bytes";

impl ControlTrace {
    pub fn new(discount: f64) -> Self {
        ControlTrace {
            messages: Vec::new(),
            bytes_by_source: BTreeMap::new(),
            discount,
        }
    }

    pub fn push(&mut self, sources: &BTreeSet<NodeId>, msg: ControlMessage) {
        debug_assert!(msg.size > 0);
        debug_assert!(msg.receiver != Receiver::Node(msg.sender));
        if sources.contains(&msg.sender) {
            *self.bytes_by_source.entry(msg.sender).or_default() += u64::from(msg.size);
        }
        self.messages.push(msg);
    }

    pub fn append(&mut self, other: ControlTrace) {
        for (k, v) in other.bytes_by_source {
            *self.bytes_by_source.entry(k).or_default() += v;
        }
        self.messages.extend(other.messages);
    }

    pub fn messages(&self) -> &[ControlMessage] {
        &self.messages
    }

    pub fn bytes_by_source(&self) -> &BTreeMap<NodeId, u64> {
        &self.bytes_by_source
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn total_bytes(&self) -> u64 {
        self.messages.iter().map(|m| u64::from(m.size)).sum()
    }

    pub fn source_bytes(&self) -> u64 {
        self.bytes_by_source.values().sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CONTROL_CSV_HEADER);
        out.push('\n');
        for m in &self.messages {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                m.round,
                m.kind.as_str(),
                m.sender,
                m.receiver,
                m.size
            );
        }
        out
    }
}

/// One construction round of `scheme` over `sources`.
pub fn simulate_control(
    topology: &Topology,
    sources: &BTreeSet<NodeId>,
    scheme: Scheme,
    sizes: &ControlSizes,
    round: u32,
    discount: f64,
) -> ControlTrace {
    let mut trace = ControlTrace::new(discount);
    let mut emit = |kind, sender, receiver, size| {
        trace.push(
            sources,
            ControlMessage {
                round,
                kind,
                sender,
                receiver,
                size,
            },
        )
    };
    match scheme {
        Scheme::Espan => {
            for &s in sources {
                emit(ControlKind::ParentClaim, s, Receiver::Broadcast, sizes.espan);
            }
        }
        Scheme::Dlmt => {
            for &s in sources {
                emit(ControlKind::Hello, s, Receiver::Broadcast, sizes.hello);
            }
            // Each eid is rebroadcast once by every source it reaches, in the
            // order the flood reaches them; it carries one entry per hop of
            // the reverse path accumulated so far.
            for &origin in sources {
                for (v, d) in bfs_order(topology, sources, origin) {
                    let size = sizes.dlmt_header + sizes.dlmt_entry * (d + 1);
                    emit(ControlKind::EidFlood, v, Receiver::Broadcast, size);
                }
            }
        }
        Scheme::Clmt => {
            let Some(center) = computation_node(topology, sources) else {
                return trace;
            };
            let next = bfs_parents(topology, sources, center);
            let assign = sizes.dlmt_header + sizes.dlmt_entry * sources.len() as u32;
            for &s in sources {
                let mut cur = s;
                while let Some(&p) = next.get(&cur) {
                    emit(ControlKind::CentralReport, cur, Receiver::Node(p), sizes.clmt_report);
                    cur = p;
                }
            }
            for &s in sources {
                // Assignment travels the same path back, relayed by each hop.
                let mut path = Vec::new();
                let mut cur = s;
                while let Some(&p) = next.get(&cur) {
                    path.push((p, cur));
                    cur = p;
                }
                for &(from, to) in path.iter().rev() {
                    emit(ControlKind::CentralAssign, from, Receiver::Node(to), assign);
                }
            }
        }
    }
    trace
}

/// The source adjacent to the most other sources, lowest id on ties.
pub fn computation_node(topology: &Topology, sources: &BTreeSet<NodeId>) -> Option<NodeId> {
    let degree = |v: NodeId| {
        topology
            .neighbors(v)
            .iter()
            .filter(|u| sources.contains(u))
            .count()
    };
    sources
        .iter()
        .copied()
        .reduce(|a, b| if degree(b) > degree(a) { b } else { a })
}

/// Sources reachable from `origin` in BFS order (neighbors by id), with hop distance.
fn bfs_order(topology: &Topology, sources: &BTreeSet<NodeId>, origin: NodeId) -> Vec<(NodeId, u32)> {
    let mut seen = BTreeSet::from([origin]);
    let mut order = vec![(origin, 0)];
    let mut i = 0;
    while i < order.len() {
        let (u, d) = order[i];
        for &v in topology.neighbors(u) {
            if sources.contains(&v) && seen.insert(v) {
                order.push((v, d + 1));
            }
        }
        i += 1;
    }
    order
}

fn bfs_parents(
    topology: &Topology,
    sources: &BTreeSet<NodeId>,
    root: NodeId,
) -> BTreeMap<NodeId, NodeId> {
    let mut parent = BTreeMap::new();
    let order = bfs_order(topology, sources, root);
    let depth: BTreeMap<NodeId, u32> = order.iter().copied().collect();
    for &(v, d) in order.iter().skip(1) {
        // Lowest-id neighbor one hop closer.
        let p = topology
            .neighbors(v)
            .iter()
            .copied()
            .find(|u| depth.get(u) == Some(&(d - 1)))
            .expect("bfs predecessor");
        parent.insert(v, p);
    }
    parent
}

/// Per-message transmission cost: distance over interference.
pub fn message_cost(distance: f64, interference: f64) -> Result<f64> {
    if interference <= 0.0 {
        return Err(Error::DivisionDomain(format!(
            "interference must be positive, got {interference}"
        )));
    }
    Ok(distance / interference)
}

/// Discounted control bytes sent by sources, per source.
pub fn asc(trace: &ControlTrace, source_count: usize) -> Result<f64> {
    if source_count == 0 {
        return Err(Error::InvalidArgument("source count must be at least 1".into()));
    }
    Ok(trace.discount * trace.source_bytes() as f64 / source_count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: impl IntoIterator<Item = u32>) -> BTreeSet<NodeId> {
        v.into_iter().map(NodeId).collect()
    }

    fn path(n: u32) -> Topology {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Topology::from_edges(n as usize, &edges)
    }

    #[test]
    fn espan_ten_sources() {
        let t = path(10);
        let tr = simulate_control(&t, &ids(0..10), Scheme::Espan, &ControlSizes::default(), 0, 1.0);
        assert_eq!(tr.total_bytes(), 960);
        assert_eq!(tr.messages().len(), 10);
    }

    #[test]
    fn dlmt_single_source() {
        let t = path(1);
        let tr = simulate_control(&t, &ids([0]), Scheme::Dlmt, &ControlSizes::default(), 0, 1.0);
        let sizes: Vec<u32> = tr.messages().iter().map(|m| m.size).collect();
        assert_eq!(sizes, vec![63, 32]);
    }

    #[test]
    fn dlmt_message_bound_and_sizes() {
        let t = path(4);
        let s = ids(0..4);
        let tr = simulate_control(&t, &s, Scheme::Dlmt, &ControlSizes::default(), 0, 1.0);
        assert_eq!(tr.messages().len(), 16 + 4);
        // Origin 0 reaches 3 at three hops: 24 + 8 * 4.
        let far = tr
            .messages()
            .iter()
            .filter(|m| m.kind == ControlKind::EidFlood)
            .map(|m| m.size)
            .max();
        assert_eq!(far, Some(56));
    }

    #[test]
    fn clmt_routes_hop_by_hop() {
        // Star center 0 with a tail 3-4: center has degree 3.
        let t = Topology::from_edges(5, &[(0, 1), (0, 2), (0, 3), (3, 4)]);
        let s = ids(0..5);
        assert_eq!(computation_node(&t, &s), Some(NodeId(0)));
        let tr = simulate_control(&t, &s, Scheme::Clmt, &ControlSizes::default(), 2, 1.0);
        let reports = tr
            .messages()
            .iter()
            .filter(|m| m.kind == ControlKind::CentralReport)
            .count();
        // 1 + 1 + 1 + 2 hops
        assert_eq!(reports, 5);
        let assign: Vec<_> = tr
            .messages()
            .iter()
            .filter(|m| m.kind == ControlKind::CentralAssign)
            .collect();
        assert_eq!(assign.len(), 5);
        assert!(assign.iter().all(|m| m.size == 24 + 8 * 5 && m.round == 2));
        assert!(assign
            .iter()
            .any(|m| m.sender == NodeId(3) && m.receiver == Receiver::Node(NodeId(4))));
    }

    #[test]
    fn bytes_positive_for_two_sources() {
        let t = path(2);
        for scheme in Scheme::ALL {
            let tr = simulate_control(&t, &ids(0..2), scheme, &ControlSizes::default(), 0, 1.0);
            assert!(tr.source_bytes() > 0, "{scheme}");
            assert_eq!(tr.source_bytes(), tr.total_bytes());
        }
    }

    #[test]
    fn asc_examples() {
        let mut tr = ControlTrace::new(1.0);
        let s = ids(0..10);
        for i in 0..10 {
            tr.push(
                &s,
                ControlMessage {
                    round: 0,
                    kind: ControlKind::Hello,
                    sender: NodeId(i),
                    receiver: Receiver::Broadcast,
                    size: 400,
                },
            );
        }
        assert_eq!(asc(&tr, 10).unwrap(), 400.0);
        tr.discount = 0.5;
        assert_eq!(asc(&tr, 10).unwrap(), 200.0);
        assert_eq!(asc(&ControlTrace::new(1.0), 10).unwrap(), 0.0);
        assert!(asc(&tr, 0).is_err());
    }

    #[test]
    fn message_cost_examples() {
        assert_eq!(message_cost(10.0, 2.0).unwrap(), 5.0);
        assert_eq!(message_cost(0.0, 1.0).unwrap(), 0.0);
        assert_eq!(message_cost(45.0, 1.0).unwrap(), 45.0);
        assert!(matches!(message_cost(1.0, 0.0), Err(Error::DivisionDomain(_))));
    }

    #[test]
    fn csv_rows() {
        let t = path(2);
        let tr = simulate_control(&t, &ids(0..2), Scheme::Espan, &ControlSizes::default(), 3, 1.0);
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CONTROL_CSV_HEADER));
        assert_eq!(lines.next(), Some("3,parent_claim,0,broadcast,96"));
    }
}
