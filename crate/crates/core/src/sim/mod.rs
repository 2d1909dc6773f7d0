//! Discrete-event data-plane simulation.
//!
//! Time is kept in integer microseconds. Events are ordered by time, then
//! event kind, then node id, so runs are reproducible bit for bit. Node
//! deaths are projected from each node's remaining energy and processed
//! before any other event at the same instant.
//!
//! Every node is a single half-duplex transceiver. A transmission reserves
//! both endpoints from `max(now, sender free, receiver free)` for its
//! airtime; nothing collides and nothing is lost on a live link. Idle power
//! drains every alive node continuously; receive power is also charged to
//! every alive neighbor of the sender when overhearing is enabled.

mod packet;
mod radio;
mod routing;
mod trace;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rand::Rng;

pub use packet::{aggregate_reports, sensor_value, DataReport};
pub use radio::{transmit, Transmission};
pub use routing::{route_to_sinks, SinkRoutes};
pub use trace::{
    format_ms, DeathRecord, Delivery, DropReason, DropRecord, EnergySample, HopRecord,
    NodeLedger, PacketKind, RebuildReason, RebuildRecord, RootPacket, SimTrace, TxRecord,
    DEATHS_HEADER, DELIVERIES_HEADER, DROPS_HEADER, ENERGYLOG_HEADER, LEDGER_HEADER,
    REBUILDS_HEADER, TRANSMISSIONS_HEADER,
};

use crate::config::SimConfig;
use crate::control::{simulate_control, ControlSizes, ControlTrace};
use crate::error::Result;
use crate::rng::{stream, Stream};
use crate::topology::{assign_energy, deploy, EnergyView, NodeId, Topology};
use crate::trees::Scheme;

/// Deploy the field for `config.seed` and run it under `scheme`.
pub fn simulate(config: &SimConfig, scheme: Scheme) -> Result<(Topology, EnergyView<f64>, SimTrace)> {
    let topology = deploy(config)?;
    let energies = assign_energy(&topology, config, config.seed)?;
    let trace = run(config, &topology, &energies, scheme)?;
    Ok((topology, energies, trace))
}

/// Simulate one run over a deployed field with the given initial energies.
pub fn run(
    config: &SimConfig,
    topology: &Topology,
    energies: &EnergyView<f64>,
    scheme: Scheme,
) -> Result<SimTrace> {
    config.validate()?;
    Ok(Engine::new(config, topology, energies, scheme).run())
}

// Same-instant order; deaths come first and live outside the heap.
const EV_TX_END: u8 = 0;
const EV_REBUILD: u8 = 1;
const EV_REPORT: u8 = 2;
const EV_TX_START: u8 = 3;
const EV_LOG: u8 = 4;

#[derive(Debug, Clone, Copy)]
enum Dest {
    Tree,
    Sink { sink: usize, root_packet: usize },
}

#[derive(Debug, Clone)]
struct Packet {
    report: DataReport,
    dest: Dest,
    queued_us: u64,
}

#[derive(Debug)]
struct InFlight {
    packet: Packet,
    receiver: NodeId,
    start_us: u64,
    cancelled: bool,
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    topo: &'a Topology,
    scheme: Scheme,
    sizes: ControlSizes,
    data: Transmission,
    sinks: Vec<NodeId>,
    is_source: Vec<bool>,

    now: u64,
    heap: BinaryHeap<Reverse<(u64, u8, u32)>>,
    pending_deaths: BTreeSet<(u64, NodeId)>,
    death_key: Vec<Option<u64>>,

    initial: Vec<f64>,
    debits: Vec<f64>,
    tx_e: Vec<f64>,
    rx_e: Vec<f64>,
    over_e: Vec<f64>,
    alive: Vec<bool>,
    /// Exact projected (while alive) or actual death time, seconds.
    death_s: Vec<f64>,
    alive_sources: usize,

    queue: Vec<VecDeque<Packet>>,
    inflight: Vec<Option<InFlight>>,
    busy_until: Vec<u64>,
    seq: Vec<u64>,

    parent: Vec<Option<NodeId>>,
    main_root: Option<NodeId>,
    /// Fused groups waiting at the reporting root, oldest first.
    buffer: Vec<DataReport>,
    routes: Vec<SinkRoutes>,
    round: u32,

    trace: SimTrace,
}

impl<'a> Engine<'a> {
    fn new(cfg: &'a SimConfig, topo: &'a Topology, energies: &EnergyView<f64>, scheme: Scheme) -> Self {
        let n = topo.len();
        let sources: Vec<NodeId> = topo.sources().iter().copied().collect();
        let sinks: Vec<NodeId> = topo.sinks().iter().copied().collect();
        let mut is_source = vec![false; n];
        for s in &sources {
            is_source[s.index()] = true;
        }
        let initial = energies.as_slice().to_vec();
        let death_s = initial.iter().map(|e| e / cfg.idle_power).collect();
        let trace = SimTrace {
            sources: sources.clone(),
            sinks: sinks.clone(),
            end_us: 0,
            idle_power: cfg.idle_power,
            transmissions: Vec::new(),
            deaths: Vec::new(),
            rebuilds: Vec::new(),
            energy_log: Vec::new(),
            deliveries: Vec::new(),
            drops: Vec::new(),
            tree_hops: Vec::new(),
            root_packets: Vec::new(),
            reports_created: 0,
            ledger: Vec::new(),
            control: ControlTrace::new(cfg.discount),
            initial_tree: None,
        };
        let mut e = Engine {
            cfg,
            topo,
            scheme,
            sizes: ControlSizes::from_config(cfg),
            data: transmit(cfg, cfg.data_packet_size),
            sinks,
            is_source,
            now: 0,
            heap: BinaryHeap::new(),
            pending_deaths: BTreeSet::new(),
            death_key: vec![None; n],
            initial,
            debits: vec![0.0; n],
            tx_e: vec![0.0; n],
            rx_e: vec![0.0; n],
            over_e: vec![0.0; n],
            alive: vec![true; n],
            death_s,
            alive_sources: sources.len(),
            queue: (0..n).map(|_| VecDeque::new()).collect(),
            inflight: (0..n).map(|_| None).collect(),
            busy_until: vec![0; n],
            seq: vec![0; n],
            parent: vec![None; n],
            main_root: None,
            buffer: Vec::new(),
            routes: Vec::new(),
            round: 0,
            trace,
        };
        for v in 0..n {
            e.project_death(NodeId(v as u32));
        }
        e
    }

    fn run(mut self) -> SimTrace {
        let cfg = self.cfg;
        let end_us = if cfg.run_to_extinction {
            secs_to_us(cfg.extinction_cap)
        } else {
            secs_to_us(cfg.sim_duration)
        };
        self.recompute_routes();
        self.rebuild(RebuildReason::Initial);
        self.schedule(secs_to_us(cfg.timeframe), EV_REBUILD, 0);
        self.schedule(0, EV_LOG, 0);
        let period = self.report_period_us();
        let mut rng = stream(cfg.seed, Stream::Jitter);
        for &s in &self.trace.sources.clone() {
            let offset = secs_to_us(rng.gen::<f64>() * cfg.start_jitter_max);
            debug_assert!(period > 0);
            self.schedule(offset, EV_REPORT, s.0);
        }

        let mut stop = end_us;
        loop {
            let ev = self.heap.peek().map(|Reverse(k)| *k);
            let death = self.pending_deaths.first().copied();
            let t = match (ev, death) {
                (None, None) => break,
                (Some((t, _, _)), None) => t,
                (None, Some((t, _))) => t,
                (Some((te, _, _)), Some((td, _))) => te.min(td),
            };
            if t >= end_us {
                break;
            }
            self.now = t;
            if let Some((td, v)) = death {
                if td == t {
                    self.pending_deaths.remove(&(td, v));
                    self.die(v);
                    if cfg.run_to_extinction && self.alive_sources == 0 {
                        stop = t;
                        break;
                    }
                    continue;
                }
            }
            let Reverse((_, kind, node)) = self.heap.pop().unwrap();
            let v = NodeId(node);
            match kind {
                EV_TX_END => self.tx_end(v),
                EV_REBUILD => {
                    self.rebuild(RebuildReason::Periodic);
                    self.schedule(t + secs_to_us(cfg.timeframe), EV_REBUILD, 0);
                }
                EV_REPORT => self.report(v, period),
                EV_TX_START => self.tx_start(v),
                EV_LOG => {
                    self.log_energy();
                    self.schedule(t + secs_to_us(cfg.energy_log_period), EV_LOG, 0);
                }
                _ => unreachable!(),
            }
        }
        self.finish(stop)
    }

    fn report_period_us(&self) -> u64 {
        secs_to_us(1.0 / self.cfg.data_rate)
    }

    fn schedule(&mut self, t: u64, kind: u8, node: u32) {
        self.heap.push(Reverse((t, kind, node)));
    }

    fn now_s(&self) -> f64 {
        self.now as f64 * 1e-6
    }

    fn residual(&self, v: NodeId) -> f64 {
        let i = v.index();
        if !self.alive[i] {
            return 0.0;
        }
        (self.initial[i] - self.debits[i] - self.cfg.idle_power * self.now_s()).max(0.0)
    }

    fn project_death(&mut self, v: NodeId) {
        let i = v.index();
        if let Some(k) = self.death_key[i].take() {
            self.pending_deaths.remove(&(k, v));
        }
        let key = secs_to_us_ceil(self.death_s[i]).max(self.now);
        self.death_key[i] = Some(key);
        self.pending_deaths.insert((key, v));
    }

    /// Charge transceiver energy; a node that runs dry dies at this instant.
    fn debit(&mut self, v: NodeId, amount: f64, ledger: fn(&mut Self) -> &mut Vec<f64>) {
        let i = v.index();
        if !self.alive[i] {
            return;
        }
        let remaining = self.residual(v);
        let charged = amount.min(remaining);
        self.debits[i] += charged;
        ledger(self)[i] += charged;
        self.death_s[i] = if charged < amount {
            self.now_s()
        } else {
            (self.initial[i] - self.debits[i]) / self.cfg.idle_power
        };
        self.project_death(v);
    }

    fn die(&mut self, v: NodeId) {
        let i = v.index();
        self.alive[i] = false;
        self.death_key[i] = None;
        self.trace.deaths.push(DeathRecord { t_us: self.now, node: v });
        let dropped: Vec<Packet> = self.queue[i].drain(..).collect();
        for p in dropped {
            self.drop_packet(v, &p, DropReason::NodeDied);
        }
        if self.main_root == Some(v) {
            for g in std::mem::take(&mut self.buffer) {
                let p = Packet {
                    report: g,
                    dest: Dest::Tree,
                    queued_us: self.now,
                };
                self.drop_packet(v, &p, DropReason::NodeDied);
            }
        }
        self.recompute_routes();
        if self.is_source[i] {
            self.alive_sources -= 1;
            self.rebuild(RebuildReason::Repair);
        }
    }

    fn recompute_routes(&mut self) {
        self.routes = self
            .sinks
            .iter()
            .map(|&s| SinkRoutes::build(self.topo, &self.alive, s))
            .collect();
    }

    fn rebuild(&mut self, reason: RebuildReason) {
        let alive_src: BTreeSet<NodeId> = self
            .trace
            .sources
            .iter()
            .copied()
            .filter(|s| self.alive[s.index()])
            .collect();
        let old_root = self.main_root;
        self.parent.iter_mut().for_each(|p| *p = None);
        self.main_root = None;
        if alive_src.is_empty() {
            return;
        }
        let residuals: Vec<f64> = (0..self.topo.len())
            .map(|v| self.residual(NodeId(v as u32)))
            .collect();
        let energies = EnergyView::from_vec(residuals).expect("residuals are non-negative");
        let components = self.topo.induced_components(&alive_src);
        let mut main = None;
        for comp in &components {
            let built = self
                .scheme
                .build(self.topo, &energies, comp)
                .expect("components are connected and non-empty");
            let control = simulate_control(
                self.topo,
                comp,
                self.scheme,
                &self.sizes,
                self.round,
                self.cfg.discount,
            );
            self.trace.control.append(control);
            for (&c, &p) in built.tree.parents() {
                self.parent[c.index()] = Some(p);
            }
            if main.as_ref().map_or(true, |(m, _): &(usize, _)| comp.len() > *m) {
                main = Some((comp.len(), built));
            }
        }
        let (_, built) = main.unwrap();
        let tree = &built.tree;
        self.main_root = Some(tree.root());
        self.round += 1;

        // The old root's buffer follows it into the new tree.
        if let Some(r) = old_root {
            if self.main_root != Some(r) && self.alive[r.index()] {
                for g in std::mem::take(&mut self.buffer) {
                    self.enqueue(
                        r,
                        Packet {
                            report: g,
                            dest: Dest::Tree,
                            queued_us: self.now,
                        },
                    );
                }
            }
        }

        let depth_sum: u64 = tree.depth_sum();
        self.trace.rebuilds.push(RebuildRecord {
            t_us: self.now,
            reason,
            root: tree.root(),
            tree_energy: built.tree_energy,
            atd: depth_sum as f64 / tree.len() as f64,
            max_depth: tree.max_depth(),
            members: tree.len(),
            components: components.len(),
        });
        if self.trace.initial_tree.is_none() {
            self.trace.initial_tree = Some(built.tree);
        }
    }

    fn log_energy(&mut self) {
        for v in 0..self.topo.len() {
            let node = NodeId(v as u32);
            let residual = self.residual(node);
            self.trace.energy_log.push(EnergySample {
                t_us: self.now,
                node,
                residual,
            });
        }
    }

    fn report(&mut self, v: NodeId, period: u64) {
        let i = v.index();
        if !self.alive[i] {
            return;
        }
        self.schedule(self.now + period, EV_REPORT, v.0);
        let seq = self.seq[i];
        self.seq[i] += 1;
        self.trace.reports_created += 1;
        let reading = DataReport::reading(v, seq, self.now, self.cfg.data_packet_size);
        if self.main_root == Some(v) {
            if self.cfg.aggregation {
                self.flush(reading);
            } else {
                self.send_to_sinks(reading);
            }
        } else {
            self.enqueue(
                v,
                Packet {
                    report: reading,
                    dest: Dest::Tree,
                    queued_us: self.now,
                },
            );
        }
    }

    /// Fold a report into the root's buffer: the oldest group it fits.
    fn buffer_report(&mut self, r: DataReport) {
        match self.buffer.iter_mut().find(|g| g.disjoint(&r)) {
            Some(g) => g.absorb(&r),
            None => self.buffer.push(r),
        }
    }

    /// The root's own tick: send the oldest group, with its own reading.
    fn flush(&mut self, own: DataReport) {
        if self.buffer.is_empty() {
            self.send_to_sinks(own);
            return;
        }
        let mut group = self.buffer.remove(0);
        if group.disjoint(&own) {
            group.absorb(&own);
        } else {
            self.buffer_report(own);
        }
        self.send_to_sinks(group);
    }

    fn send_to_sinks(&mut self, report: DataReport) {
        let root = self.main_root.expect("only the reporting root sends to sinks");
        let id = self.trace.root_packets.len();
        self.trace.root_packets.push(RootPacket {
            sent_us: self.now,
            copies: self.sinks.len() as u32,
            delivered: 0,
            dropped: 0,
        });
        for k in 0..self.sinks.len() {
            self.enqueue(
                root,
                Packet {
                    report: report.clone(),
                    dest: Dest::Sink {
                        sink: k,
                        root_packet: id,
                    },
                    queued_us: self.now,
                },
            );
        }
    }

    /// A tree packet arriving at (or left over at) `v`.
    fn accept_tree(&mut self, v: NodeId, packet: Packet) {
        if self.main_root == Some(v) {
            if self.cfg.aggregation {
                self.buffer_report(packet.report);
            } else {
                self.send_to_sinks(packet.report);
            }
        } else if self.parent[v.index()].is_some() {
            self.enqueue(
                v,
                Packet {
                    queued_us: self.now,
                    ..packet
                },
            );
        } else {
            self.drop_packet(v, &packet, DropReason::Partitioned);
        }
    }

    fn enqueue(&mut self, v: NodeId, packet: Packet) {
        self.queue[v.index()].push_back(packet);
        if self.inflight[v.index()].is_none() {
            self.try_start(v);
        }
    }

    fn try_start(&mut self, v: NodeId) {
        let i = v.index();
        loop {
            // Handling a packet locally may already have started a transmission.
            if self.inflight[i].is_some() {
                return;
            }
            let Some(mut packet) = self.queue[i].pop_front() else {
                return;
            };
            let receiver = match packet.dest {
                Dest::Tree => match self.parent[i] {
                    Some(p) => p,
                    None => {
                        // Became a root after a rebuild.
                        self.accept_tree(v, packet);
                        continue;
                    }
                },
                Dest::Sink { sink, .. } => match self.routes[sink].next_hop(self.topo, v) {
                    Some(h) => h,
                    None => {
                        self.drop_packet(v, &packet, DropReason::Unreachable);
                        continue;
                    }
                },
            };
            if self.cfg.aggregation && matches!(packet.dest, Dest::Tree) {
                let mut k = 0;
                while k < self.queue[i].len() {
                    let q = &self.queue[i][k];
                    if matches!(q.dest, Dest::Tree) && q.report.disjoint(&packet.report) {
                        let q = self.queue[i].remove(k).unwrap();
                        packet.report.absorb(&q.report);
                    } else {
                        k += 1;
                    }
                }
            }
            let r = receiver.index();
            let start = self.now.max(self.busy_until[i]).max(self.busy_until[r]);
            let end = start + self.data.duration_us;
            self.busy_until[i] = end;
            self.busy_until[r] = end;
            self.inflight[i] = Some(InFlight {
                packet,
                receiver,
                start_us: start,
                cancelled: false,
            });
            self.schedule(start, EV_TX_START, v.0);
            self.schedule(end, EV_TX_END, v.0);
        }
    }

    fn tx_start(&mut self, v: NodeId) {
        let Some(f) = self.inflight[v.index()].as_ref() else {
            return;
        };
        let r = f.receiver;
        if !self.alive[v.index()] || !self.alive[r.index()] {
            let packet = f.packet.clone();
            self.inflight[v.index()].as_mut().unwrap().cancelled = true;
            self.drop_packet(v, &packet, DropReason::DeadEndpoint);
            return;
        }
        let kind = match f.packet.dest {
            Dest::Tree => PacketKind::Tree,
            Dest::Sink { .. } => PacketKind::Sink,
        };
        self.trace.transmissions.push(TxRecord {
            start_us: self.now,
            end_us: self.now + self.data.duration_us,
            sender: v,
            receiver: r,
            size: f.packet.report.size,
            kind,
            fused_count: f.packet.report.fused_count,
        });
        let data = self.data;
        self.debit(v, data.tx_energy, |e| &mut e.tx_e);
        self.debit(r, data.rx_energy, |e| &mut e.rx_e);
        if self.cfg.overhearing {
            for &w in self.topo.neighbors(v) {
                if w != r {
                    self.debit(w, data.rx_energy, |e| &mut e.over_e);
                }
            }
        }
    }

    fn tx_end(&mut self, v: NodeId) {
        let Some(f) = self.inflight[v.index()].take() else {
            return;
        };
        debug_assert!(f.start_us + self.data.duration_us == self.now);
        let r = f.receiver;
        if !f.cancelled {
            if !self.alive[v.index()] || !self.alive[r.index()] {
                self.drop_packet(v, &f.packet, DropReason::DeadEndpoint);
            } else {
                match f.packet.dest {
                    Dest::Tree => {
                        if self.parent[v.index()] != Some(r) {
                            self.drop_packet(v, &f.packet, DropReason::StaleEdge);
                        } else {
                            self.trace.tree_hops.push(HopRecord {
                                sender: v,
                                queued_us: f.packet.queued_us,
                                received_us: self.now,
                            });
                            self.accept_tree(r, f.packet);
                        }
                    }
                    Dest::Sink { sink, root_packet } => {
                        if self.sinks[sink] == r {
                            let rep = &f.packet.report;
                            self.trace.deliveries.push(Delivery {
                                created_sum_us: rep.created_sum_us,
                                created_min_us: rep.created_min_us,
                                root_sent_us: self.trace.root_packets[root_packet].sent_us,
                                sink: r,
                                delivered_us: self.now,
                                fused_count: rep.fused_count,
                            });
                            self.trace.root_packets[root_packet].delivered += 1;
                        } else {
                            self.enqueue(
                                r,
                                Packet {
                                    queued_us: self.now,
                                    ..f.packet
                                },
                            );
                        }
                    }
                }
            }
        }
        if self.alive[v.index()] {
            self.try_start(v);
        }
    }

    fn drop_packet(&mut self, at: NodeId, packet: &Packet, reason: DropReason) {
        let kind = match packet.dest {
            Dest::Tree => PacketKind::Tree,
            Dest::Sink { root_packet, .. } => {
                self.trace.root_packets[root_packet].dropped += 1;
                PacketKind::Sink
            }
        };
        self.trace.drops.push(DropRecord {
            t_us: self.now,
            node: at,
            reason,
            kind,
        });
    }

    fn finish(mut self, end_us: u64) -> SimTrace {
        self.now = end_us;
        let end_s = end_us as f64 * 1e-6;
        self.trace.end_us = end_us;
        self.trace.ledger = (0..self.topo.len())
            .map(|i| {
                let v = NodeId(i as u32);
                NodeLedger {
                    initial: self.initial[i],
                    residual: self.residual(v),
                    tx: self.tx_e[i],
                    rx: self.rx_e[i],
                    overhear: self.over_e[i],
                    alive_s: if self.alive[i] { end_s } else { self.death_s[i] },
                }
            })
            .collect();
        self.trace
    }
}

fn secs_to_us(s: f64) -> u64 {
    (s * 1e6).round() as u64
}

fn secs_to_us_ceil(s: f64) -> u64 {
    (s * 1e6).ceil() as u64
}
