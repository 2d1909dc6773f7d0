use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::control::ControlTrace;
use crate::error::Result;
use crate::topology::NodeId;
use crate::trees::AggregationTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    /// Child to parent inside the aggregation tree.
    Tree,
    /// Root (or relay) toward a sink.
    Sink,
}

impl PacketKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PacketKind::Tree => "tree",
            PacketKind::Sink => "sink",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TxRecord {
    pub start_us: u64,
    pub end_us: u64,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub size: u32,
    pub kind: PacketKind,
    pub fused_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeathRecord {
    pub t_us: u64,
    pub node: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RebuildReason {
    Initial,
    Periodic,
    Repair,
}

impl RebuildReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RebuildReason::Initial => "initial",
            RebuildReason::Periodic => "periodic",
            RebuildReason::Repair => "repair",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RebuildRecord {
    pub t_us: u64,
    pub reason: RebuildReason,
    /// Root of the tree that reports to the sinks.
    pub root: NodeId,
    pub tree_energy: f64,
    /// Mean source depth of that tree.
    pub atd: f64,
    pub max_depth: u32,
    pub members: usize,
    pub components: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t_us: u64,
    pub node: NodeId,
    pub residual: f64,
}

/// One copy of a root packet reaching one sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub created_sum_us: u64,
    pub created_min_us: u64,
    pub root_sent_us: u64,
    pub sink: NodeId,
    pub delivered_us: u64,
    pub fused_count: u32,
}

impl Delivery {
    /// Mean constituent creation time, microseconds.
    pub fn created_mean_us(&self) -> f64 {
        self.created_sum_us as f64 / f64::from(self.fused_count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// Sender or receiver dead when the transmission started or ended.
    DeadEndpoint,
    /// Tree packet whose edge was removed by a rebuild while in flight.
    StaleEdge,
    /// No alive path to a sink.
    Unreachable,
    /// Queued or buffered at a node when it died.
    NodeDied,
    /// Reached the root of a tree that does not report to the sinks.
    Partitioned,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::DeadEndpoint => "dead_endpoint",
            DropReason::StaleEdge => "stale_edge",
            DropReason::Unreachable => "unreachable",
            DropReason::NodeDied => "node_died",
            DropReason::Partitioned => "partitioned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropRecord {
    pub t_us: u64,
    pub node: NodeId,
    pub reason: DropReason,
    pub kind: PacketKind,
}

/// A tree hop: queued at the child, received by the parent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopRecord {
    pub sender: NodeId,
    pub queued_us: u64,
    pub received_us: u64,
}

/// Fate of one packet the reporting root sent toward the sinks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RootPacket {
    pub sent_us: u64,
    pub copies: u32,
    pub delivered: u32,
    pub dropped: u32,
}

impl RootPacket {
    pub fn resolved(&self) -> bool {
        self.delivered + self.dropped == self.copies
    }
}

/// Per-node energy ledger for the conservation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeLedger {
    pub initial: f64,
    pub residual: f64,
    pub tx: f64,
    pub rx: f64,
    pub overhear: f64,
    /// Exact alive time, seconds.
    pub alive_s: f64,
}

impl NodeLedger {
    /// Relative gap between consumed energy and the debit ledger.
    pub fn conservation_error(&self, idle_power: f64) -> f64 {
        let consumed = self.initial - self.residual;
        let debited = self.tx + self.rx + self.overhear + idle_power * self.alive_s;
        (consumed - debited).abs() / self.initial.max(f64::MIN_POSITIVE)
    }
}

/// Everything one run records.
#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub sources: Vec<NodeId>,
    pub sinks: Vec<NodeId>,
    pub end_us: u64,
    pub idle_power: f64,
    pub transmissions: Vec<TxRecord>,
    pub deaths: Vec<DeathRecord>,
    pub rebuilds: Vec<RebuildRecord>,
    pub energy_log: Vec<EnergySample>,
    pub deliveries: Vec<Delivery>,
    pub drops: Vec<DropRecord>,
    pub tree_hops: Vec<HopRecord>,
    pub root_packets: Vec<RootPacket>,
    pub reports_created: u64,
    pub ledger: Vec<NodeLedger>,
    pub control: ControlTrace,
    pub initial_tree: Option<AggregationTree>,
}

pub const TRANSMISSIONS_HEADER: &str = "start_us,end_us,sender,receiver,bytes,kind,fused_count";
pub const DEATHS_HEADER: &str = "t_us,node";
pub const ENERGYLOG_HEADER: &str = "t_ms,node,residual_j";
pub const DELIVERIES_HEADER: &str = "created_us,root_sent_us,sink,delivered_us,fused_count";
pub const REBUILDS_HEADER: &str = "t_us,reason,root,tree_energy_j,atd,max_depth,members,components";
pub const DROPS_HEADER: &str = "t_us,node,reason,kind";
pub const LEDGER_HEADER: &str = "node,initial_j,residual_j,tx_j,rx_j,overhear_j,alive_s";

/// Milliseconds with exactly three decimals, so microseconds survive.
pub fn format_ms(t_us: u64) -> String {
    format!("{}.{:03}", t_us / 1000, t_us % 1000)
}

impl SimTrace {
    pub fn max_conservation_error(&self) -> f64 {
        self.ledger
            .iter()
            .map(|l| l.conservation_error(self.idle_power))
            .fold(0.0, f64::max)
    }

    pub fn end_s(&self) -> f64 {
        self.end_us as f64 * 1e-6
    }

    /// Sources alive at time `t_us` (deaths at exactly `t_us` count as dead).
    pub fn sources_alive_at(&self, t_us: u64) -> usize {
        let dead = self
            .deaths
            .iter()
            .filter(|d| d.t_us <= t_us && self.sources.binary_search(&d.node).is_ok())
            .count();
        self.sources.len() - dead
    }

    pub fn transmissions_csv(&self) -> String {
        let mut out = header(TRANSMISSIONS_HEADER);
        for t in &self.transmissions {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                t.start_us,
                t.end_us,
                t.sender,
                t.receiver,
                t.size,
                t.kind.as_str(),
                t.fused_count
            );
        }
        out
    }

    pub fn deaths_csv(&self) -> String {
        let mut out = header(DEATHS_HEADER);
        for d in &self.deaths {
            let _ = writeln!(out, "{},{}", d.t_us, d.node);
        }
        out
    }

    pub fn energylog_csv(&self) -> String {
        let mut out = header(ENERGYLOG_HEADER);
        for s in &self.energy_log {
            let _ = writeln!(out, "{},{},{}", format_ms(s.t_us), s.node, s.residual);
        }
        out
    }

    pub fn deliveries_csv(&self) -> String {
        let mut out = header(DELIVERIES_HEADER);
        for d in &self.deliveries {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                d.created_mean_us().round() as u64,
                d.root_sent_us,
                d.sink,
                d.delivered_us,
                d.fused_count
            );
        }
        out
    }

    pub fn rebuilds_csv(&self) -> String {
        let mut out = header(REBUILDS_HEADER);
        for r in &self.rebuilds {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.t_us,
                r.reason.as_str(),
                r.root,
                r.tree_energy,
                r.atd,
                r.max_depth,
                r.members,
                r.components
            );
        }
        out
    }

    pub fn drops_csv(&self) -> String {
        let mut out = header(DROPS_HEADER);
        for d in &self.drops {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                d.t_us,
                d.node,
                d.reason.as_str(),
                d.kind.as_str()
            );
        }
        out
    }

    pub fn ledger_csv(&self) -> String {
        let mut out = header(LEDGER_HEADER);
        for (i, l) in self.ledger.iter().enumerate() {
            let _ = writeln!(
                out,
                "{i},{},{},{},{},{},{}",
                l.initial, l.residual, l.tx, l.rx, l.overhear, l.alive_s
            );
        }
        out
    }

    /// All trace files, in a fixed order.
    pub fn csv_files(&self) -> Vec<(&'static str, String)> {
        vec![
            ("transmissions.csv", self.transmissions_csv()),
            ("deaths.csv", self.deaths_csv()),
            ("energylog.csv", self.energylog_csv()),
            ("deliveries.csv", self.deliveries_csv()),
            ("rebuilds.csv", self.rebuilds_csv()),
            ("drops.csv", self.drops_csv()),
            ("ledger.csv", self.ledger_csv()),
            ("control.csv", self.control.to_csv()),
        ]
    }

    pub fn write_csvs(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in self.csv_files() {
            fs::write(dir.join(name), body)?;
        }
        Ok(())
    }
}

fn header(h: &str) -> String {
    let mut s = String::with_capacity(4096);
    s.push_str(h);
    s.push('\n');
    s
}
