use crate::topology::NodeId;

/// A (possibly fused) data report.
///
/// Fusion keeps the packet at a fixed size and carries the weighted mean of
/// its constituents. `origins` lists the contributing sources, sorted and
/// without repeats; fusion only ever combines packets with disjoint origins.
#[derive(Debug, Clone, PartialEq)]
pub struct DataReport {
    /// The node that created the first constituent, or the aggregator.
    pub origin: NodeId,
    pub seq: u64,
    pub value: f64,
    /// Mean creation time of the constituents, microseconds.
    pub created_at: f64,
    pub size: u32,
    pub fused_count: u32,
    pub origins: Vec<NodeId>,
    /// Sum of constituent creation times, microseconds.
    pub created_sum_us: u64,
    /// Earliest constituent creation time, microseconds.
    pub created_min_us: u64,
}

impl DataReport {
    pub fn reading(origin: NodeId, seq: u64, now_us: u64, size: u32) -> Self {
        DataReport {
            origin,
            seq,
            value: sensor_value(origin, seq),
            created_at: now_us as f64,
            size,
            fused_count: 1,
            origins: vec![origin],
            created_sum_us: now_us,
            created_min_us: now_us,
        }
    }

    pub fn disjoint(&self, other: &DataReport) -> bool {
        // Both sorted; merge walk.
        let (mut i, mut j) = (0, 0);
        while i < self.origins.len() && j < other.origins.len() {
            match self.origins[i].cmp(&other.origins[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn covers(&self, id: NodeId) -> bool {
        self.origins.binary_search(&id).is_ok()
    }

    /// Fold `other` into `self`, weighting values by fused count.
    pub fn absorb(&mut self, other: &DataReport) {
        debug_assert!(self.disjoint(other));
        let (a, b) = (f64::from(self.fused_count), f64::from(other.fused_count));
        self.value = (self.value * a + other.value * b) / (a + b);
        self.fused_count += other.fused_count;
        self.created_sum_us += other.created_sum_us;
        self.created_min_us = self.created_min_us.min(other.created_min_us);
        self.created_at = self.created_sum_us as f64 / f64::from(self.fused_count);
        self.origins.extend_from_slice(&other.origins);
        self.origins.sort_unstable();
    }
}

/// Synthetic reading: origin id plus a thousandth per sequence number.
pub fn sensor_value(origin: NodeId, seq: u64) -> f64 {
    f64::from(origin.0) + 0.001 * seq as f64
}

/// Combine received reports with the aggregator's own reading into one
/// fixed-size packet holding their weighted mean.
pub fn aggregate_reports(
    reports: &[DataReport],
    at: NodeId,
    self_value: f64,
    now_us: u64,
    size: u32,
) -> DataReport {
    let mut own = DataReport::reading(at, 0, now_us, size);
    own.value = self_value;
    let mut weighted = self_value;
    let mut count = 1u32;
    for r in reports {
        weighted += r.value * f64::from(r.fused_count);
        count += r.fused_count;
        own.created_sum_us += r.created_sum_us;
        own.created_min_us = own.created_min_us.min(r.created_min_us);
        own.origins.extend_from_slice(&r.origins);
    }
    own.origins.sort_unstable();
    own.origins.dedup();
    own.value = weighted / f64::from(count);
    own.fused_count = count;
    own.created_at = own.created_sum_us as f64 / f64::from(count);
    own
}
