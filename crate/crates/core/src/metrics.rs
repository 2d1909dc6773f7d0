//! Per-run metrics.
//!
//! Functions with a `_paper` suffix, `atd_formula` and `econs_formula`
//! evaluate the printed formulas literally. The headline metrics in
//! [`RunMetrics`] are measured from the trace instead.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::control::asc;
use crate::error::{Error, Result};
use crate::sim::SimTrace;
use crate::topology::NodeId;
use crate::trees::AggregationTree;

/// Quadratic depth formula `(H² + h1² + h2²) / (2H + h1)`, as printed.
pub fn atd_formula(h: f64, h1: f64, h2: f64) -> Result<f64> {
    let den = 2.0 * h + h1;
    if den == 0.0 {
        return Err(Error::UndefinedMetric("2H + h1 = 0".into()));
    }
    Ok((h * h + h1 * h1 + h2 * h2) / den)
}

/// Mean hop depth over the tree's members; the root contributes 0.
pub fn atd_empirical(tree: &AggregationTree) -> f64 {
    tree.depth_sum() as f64 / tree.len() as f64
}

/// Mean hop depth over `sources` only, for trees whose inner nodes may be relays.
pub fn atd_over(tree: &AggregationTree, sources: &BTreeSet<NodeId>) -> Result<f64> {
    if sources.is_empty() {
        return Err(Error::InvalidArgument("no sources".into()));
    }
    let mut sum = 0u64;
    for &s in sources {
        sum += u64::from(tree.depth(s).ok_or(Error::NotAMember(s))?);
    }
    Ok(sum as f64 / sources.len() as f64)
}

/// `E_cir + K E_amp + d + 2K`, as printed (units do not agree).
pub fn econs_formula(e_cir: f64, e_amp: f64, k: f64, d: f64) -> f64 {
    e_cir + k * e_amp + d + 2.0 * k
}

/// Energy consumed across the field per node.
pub fn ade_empirical(trace: &SimTrace, n: usize) -> f64 {
    let spent: f64 = trace.ledger.iter().map(|l| l.initial - l.residual).sum();
    spent / n as f64
}

/// Residual-energy samples of one node, for drain-rate estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeEstimator {
    window: usize,
    samples: VecDeque<(f64, f64)>,
}

impl LifetimeEstimator {
    pub fn new(window: usize) -> Self {
        LifetimeEstimator {
            window: window.max(2),
            samples: VecDeque::new(),
        }
    }

    /// Record residual `energy` at time `t` seconds; times must not decrease.
    pub fn push(&mut self, t: f64, energy: f64) {
        debug_assert!(self.samples.back().map_or(true, |&(lt, _)| t >= lt));
        if self.samples.len() == self.window {
            self.samples.pop_front();
        }
        self.samples.push_back((t, energy));
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn latest(&self) -> Option<(f64, f64)> {
        self.samples.back().copied()
    }

    /// Drain between the last two samples.
    pub fn drain_rate(&self) -> Result<f64> {
        let n = self.samples.len();
        if n < 2 {
            return Err(Error::InsufficientData("drain rate needs 2 samples".into()));
        }
        pair_rate(self.samples[n - 2], self.samples[n - 1])
    }

    /// Mean of consecutive-pair drain rates over the window.
    pub fn mean_drain(&self) -> Result<f64> {
        if self.samples.len() < 2 {
            return Err(Error::InsufficientData("drain rate needs 2 samples".into()));
        }
        let mut sum = 0.0;
        for k in 1..self.samples.len() {
            sum += pair_rate(self.samples[k - 1], self.samples[k])?;
        }
        Ok(sum / (self.samples.len() - 1) as f64)
    }
}

fn pair_rate((t0, e0): (f64, f64), (t1, e1): (f64, f64)) -> Result<f64> {
    if t1 <= t0 {
        return Err(Error::InsufficientData("samples share a timestamp".into()));
    }
    Ok((e0 - e1) / (t1 - t0))
}

/// Remaining lifetime from residual energy and mean drain; infinite when
/// nothing drains.
pub fn anlt_predicted(residual: f64, mean_drain: f64) -> f64 {
    if residual <= 0.0 {
        0.0
    } else if mean_drain <= 0.0 {
        f64::INFINITY
    } else {
        residual / mean_drain
    }
}

/// Lower of the two endpoints' residuals after their respective costs.
pub fn link_residual(r_i: f64, e_cons: f64, r_j: f64, e_rem: f64) -> f64 {
    (r_i - e_cons).min(r_j - e_rem)
}

/// Observed source lifetimes.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifetimes {
    /// (source, lifetime seconds, censored at the end of the run).
    pub per_source: Vec<(NodeId, f64, bool)>,
    pub mean: f64,
    /// Right-continuous step curve of (time µs, sources alive), starting at 0.
    pub curve: Vec<(u64, usize)>,
}

pub fn anlt_empirical(trace: &SimTrace) -> Lifetimes {
    let end = trace.end_s();
    let per_source: Vec<(NodeId, f64, bool)> = trace
        .sources
        .iter()
        .map(|&s| match trace.deaths.iter().find(|d| d.node == s) {
            Some(d) => (s, d.t_us as f64 * 1e-6, false),
            None => (s, end, true),
        })
        .collect();
    let mean = if per_source.is_empty() {
        0.0
    } else {
        per_source.iter().map(|p| p.1).sum::<f64>() / per_source.len() as f64
    };
    let mut curve = vec![(0u64, trace.sources.len())];
    let mut alive = trace.sources.len();
    for d in &trace.deaths {
        if trace.sources.binary_search(&d.node).is_err() {
            continue;
        }
        alive -= 1;
        match curve.last_mut() {
            Some(last) if last.0 == d.t_us => last.1 = alive,
            _ => curve.push((d.t_us, alive)),
        }
    }
    Lifetimes {
        per_source,
        mean,
        curve,
    }
}

/// Earliest time (seconds) at which a curve of (seconds, alive) is at or
/// below `level`.
pub fn time_to_level(curve: &[(f64, usize)], level: usize) -> Option<f64> {
    curve.iter().find(|p| p.1 <= level).map(|p| p.0)
}

/// Percent gain of `t_a` over `t_b`.
pub fn extension_percent(t_a: f64, t_b: f64) -> Result<f64> {
    if t_b <= 0.0 {
        return Err(Error::NotComparable(format!("baseline time {t_b} is not positive")));
    }
    Ok((t_a - t_b) / t_b * 100.0)
}

/// Lifetime extension of curve `a` over curve `b` at equal sources remaining.
pub fn lifetime_extension(a: &[(f64, usize)], b: &[(f64, usize)], level: usize) -> Result<f64> {
    let ta = time_to_level(a, level)
        .ok_or_else(|| Error::NotComparable(format!("first curve never reaches {level}")))?;
    let tb = time_to_level(b, level)
        .ok_or_else(|| Error::NotComparable(format!("second curve never reaches {level}")))?;
    extension_percent(ta, tb)
}

/// Overall delay formula, as printed.
pub fn avg_dly_paper(rs: f64, sp: f64, atd: f64, rec_snk: f64, rec_src: f64) -> Result<f64> {
    let den = rec_snk + rec_src;
    if den == 0.0 {
        return Err(Error::UndefinedMetric("no packets received".into()));
    }
    Ok((rs * rec_snk + sp * atd + rs * rec_src) / den)
}

/// Root-to-sink delay estimate: gathering rate over service rate, scaled by
/// path length and a propagation weight.
pub fn avg_dly_rs_paper(lambda_rt: f64, mu: f64, path_distances: &[f64], weight: f64) -> Result<f64> {
    if mu <= 0.0 {
        return Err(Error::DivisionDomain("service rate must be positive".into()));
    }
    Ok(lambda_rt / mu * weight * path_distances.iter().sum::<f64>())
}

/// Source-to-parent delay estimate: gathering rate over service rate.
pub fn avg_dly_sp_paper(lambda_rt: f64, mu: f64) -> Result<f64> {
    if mu <= 0.0 {
        return Err(Error::DivisionDomain("service rate must be positive".into()));
    }
    Ok(lambda_rt / mu)
}

/// Sink receptions per root packet per sink.
pub fn avg_dr(sent_by_root: u64, received_at_sinks: u64, sink_count: usize) -> Result<f64> {
    if sent_by_root == 0 || sink_count == 0 {
        return Err(Error::UndefinedMetric("nothing was sent to any sink".into()));
    }
    Ok(received_at_sinks as f64 / (sent_by_root as f64 * sink_count as f64))
}

/// Sent over received, as printed.
pub fn avg_dr_paper(sent_by_root: u64, received_at_sinks: u64) -> Result<f64> {
    if received_at_sinks == 0 {
        return Err(Error::UndefinedMetric("nothing was received".into()));
    }
    Ok(sent_by_root as f64 / received_at_sinks as f64)
}

/// One run's metrics. Undefined values are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub sources: usize,
    /// Control bytes per source, all construction rounds summed.
    pub asc: f64,
    /// Mean over tree builds of the reporting tree's mean depth.
    pub atd: f64,
    pub atd_paper: f64,
    /// Joules per node.
    pub ade: f64,
    /// Mean source lifetime, seconds, censored at the end of the run.
    pub anlt: f64,
    pub anlt_predicted: f64,
    /// Seconds.
    pub avg_dly_rs: f64,
    pub avg_dly_sp: f64,
    pub avg_dly: f64,
    pub avg_dly_paper: f64,
    pub avg_dr: f64,
    pub avg_dr_paper: f64,
    pub tree_energy: f64,
    pub control_bytes: u64,
    pub reports: u64,
    pub deliveries: u64,
    pub source_deaths: usize,
    pub end_us: u64,
    pub conservation_error: f64,
}

/// Column order of [`RunMetrics::values`].
pub const METRIC_NAMES: [&str; 20] = [
    "sources",
    "asc",
    "atd",
    "atd_paper",
    "ade",
    "anlt",
    "anlt_predicted",
    "avg_dly_rs",
    "avg_dly_sp",
    "avg_dly",
    "avg_dly_paper",
    "avg_dr",
    "avg_dr_paper",
    "tree_energy",
    "control_bytes",
    "reports",
    "deliveries",
    "source_deaths",
    "end_us",
    "conservation_error",
];

/// Samples per source fed to the drain estimator.
pub const DRAIN_WINDOW: usize = 20;

impl RunMetrics {
    pub fn from_trace(trace: &SimTrace, node_count: usize) -> Self {
        let sources = trace.sources.len();
        let asc = asc(&trace.control, sources.max(1)).unwrap_or(f64::NAN);

        let atd = if trace.rebuilds.is_empty() {
            f64::NAN
        } else {
            trace.rebuilds.iter().map(|r| r.atd).sum::<f64>() / trace.rebuilds.len() as f64
        };
        let atd_paper = trace
            .initial_tree
            .as_ref()
            .map_or(f64::NAN, |t| atd_paper_of(t).unwrap_or(f64::NAN));

        let life = anlt_empirical(trace);
        let anlt_predicted = predicted_lifetime(trace);

        // Integer microsecond sums, so equal delays give bit-equal means.
        let mean_us = |xs: &mut dyn Iterator<Item = u64>| {
            let (s, n) = xs.fold((0u128, 0u64), |(s, n), x| (s + u128::from(x), n + 1));
            if n == 0 {
                f64::NAN
            } else {
                s as f64 / n as f64 * 1e-6
            }
        };
        let avg_dly_rs = mean_us(&mut trace.deliveries.iter().map(|d| d.delivered_us - d.root_sent_us));
        let avg_dly_sp = mean_us(&mut trace.tree_hops.iter().map(|h| h.received_us - h.queued_us));
        let (num, den) = trace.deliveries.iter().fold((0.0, 0.0), |(n, d), x| {
            let c = f64::from(x.fused_count);
            (n + (x.delivered_us as f64 * c - x.created_sum_us as f64) * 1e-6, d + c)
        });
        let avg_dly = if den > 0.0 { num / den } else { f64::NAN };
        let rec_snk = trace.deliveries.len() as f64;
        let rec_src = trace.tree_hops.len() as f64;
        let avg_dly_paper = avg_dly_paper(
            nan_to_zero(avg_dly_rs),
            nan_to_zero(avg_dly_sp),
            nan_to_zero(atd),
            rec_snk,
            rec_src,
        )
        .unwrap_or(f64::NAN);

        let resolved: Vec<_> = trace.root_packets.iter().filter(|p| p.resolved()).collect();
        let sent = resolved.len() as u64;
        let received: u64 = resolved.iter().map(|p| u64::from(p.delivered)).sum();
        let avg_dr = avg_dr(sent, received, trace.sinks.len()).unwrap_or(f64::NAN);
        let avg_dr_paper = avg_dr_paper(sent, received).unwrap_or(f64::NAN);

        RunMetrics {
            sources,
            asc,
            atd,
            atd_paper,
            ade: ade_empirical(trace, node_count),
            anlt: life.mean,
            anlt_predicted,
            avg_dly_rs,
            avg_dly_sp,
            avg_dly,
            avg_dly_paper,
            avg_dr,
            avg_dr_paper,
            tree_energy: trace.rebuilds.first().map_or(f64::NAN, |r| r.tree_energy),
            control_bytes: trace.control.total_bytes(),
            reports: trace.reports_created,
            deliveries: trace.deliveries.len() as u64,
            source_deaths: trace.sources.len() - trace.sources_alive_at(trace.end_us),
            end_us: trace.end_us,
            conservation_error: trace.max_conservation_error(),
        }
    }

    /// Values in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [f64; 20] {
        [
            self.sources as f64,
            self.asc,
            self.atd,
            self.atd_paper,
            self.ade,
            self.anlt,
            self.anlt_predicted,
            self.avg_dly_rs,
            self.avg_dly_sp,
            self.avg_dly,
            self.avg_dly_paper,
            self.avg_dr,
            self.avg_dr_paper,
            self.tree_energy,
            self.control_bytes as f64,
            self.reports as f64,
            self.deliveries as f64,
            self.source_deaths as f64,
            self.end_us as f64,
            self.conservation_error,
        ]
    }

    pub fn from_values(v: &[f64]) -> Result<Self> {
        if v.len() != METRIC_NAMES.len() {
            return Err(Error::Parse {
                line: 0,
                msg: format!("expected {} metric values, got {}", METRIC_NAMES.len(), v.len()),
            });
        }
        Ok(RunMetrics {
            sources: v[0] as usize,
            asc: v[1],
            atd: v[2],
            atd_paper: v[3],
            ade: v[4],
            anlt: v[5],
            anlt_predicted: v[6],
            avg_dly_rs: v[7],
            avg_dly_sp: v[8],
            avg_dly: v[9],
            avg_dly_paper: v[10],
            avg_dr: v[11],
            avg_dr_paper: v[12],
            tree_energy: v[13],
            control_bytes: v[14] as u64,
            reports: v[15] as u64,
            deliveries: v[16] as u64,
            source_deaths: v[17] as usize,
            end_us: v[18] as u64,
            conservation_error: v[19],
        })
    }

    /// Comma-separated values for a CSV row.
    pub fn csv_fields(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.values().iter().enumerate() {
            if k > 0 {
                s.push(',');
            }
            // Integers print without a fractional part either way.
            let _ = write!(s, "{v}");
        }
        s
    }
}

fn nan_to_zero(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x
    }
}

/// The printed depth formula evaluated on a tree: H is the maximum depth,
/// h1 the mean depth and h2 the shallowest leaf depth.
pub fn atd_paper_of(tree: &AggregationTree) -> Result<f64> {
    let h = f64::from(tree.max_depth());
    let h1 = atd_empirical(tree);
    let h2 = tree
        .leaves()
        .iter()
        .filter_map(|&l| tree.depth(l))
        .min()
        .map_or(0.0, f64::from);
    atd_formula(h, h1, h2)
}

/// Mean over sources of predicted death time: last logged sample time plus
/// residual over windowed drain.
fn predicted_lifetime(trace: &SimTrace) -> f64 {
    if trace.sources.is_empty() {
        return f64::NAN;
    }
    let mut est: Vec<LifetimeEstimator> = trace
        .sources
        .iter()
        .map(|_| LifetimeEstimator::new(DRAIN_WINDOW))
        .collect();
    for s in &trace.energy_log {
        if let Ok(k) = trace.sources.binary_search(&s.node) {
            if s.residual > 0.0 {
                est[k].push(s.t_us as f64 * 1e-6, s.residual);
            }
        }
    }
    let total: f64 = est
        .iter()
        .map(|e| match (e.latest(), e.mean_drain()) {
            (Some((t, r)), Ok(d)) => t + anlt_predicted(r, d),
            (Some((t, _)), Err(_)) => t,
            _ => 0.0,
        })
        .sum();
    total / trace.sources.len() as f64
}
