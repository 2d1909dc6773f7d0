//! Simulation parameters.
//!
//! Defaults reproduce the reference deployment: density 55/1652 nodes/m²,
//! five sinks, 10% sources, 45 m radio range, 138-byte reports at one
//! packet per second, 40/400/680 mW idle/receive/transmit power and a
//! 1.63 Mbps MAC. The text form is a flat `key = value` file whose keys are
//! the field names below; `#` starts a comment.

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub node_count: usize,
    /// Nodes per square meter.
    pub node_density: f64,
    pub sink_count: usize,
    pub source_fraction: f64,
    /// Meters.
    pub radio_range: f64,
    /// Packets per second.
    pub data_rate: f64,
    /// Tree refresh period, seconds.
    pub timeframe: f64,
    pub data_packet_size: u32,
    pub espan_control_size: u32,
    pub dlmt_hello_size: u32,
    pub dlmt_header_size: u32,
    pub dlmt_entry_size: u32,
    pub clmt_report_size: u32,
    /// Watts.
    pub idle_power: f64,
    pub rx_power: f64,
    pub tx_power: f64,
    /// Bits per second.
    pub mac_bandwidth: f64,
    /// Seconds.
    pub energy_log_period: f64,
    /// Joules.
    pub source_energy_min: f64,
    pub source_energy_max: f64,
    pub non_source_energy: f64,
    /// Seconds.
    pub sim_duration: f64,
    pub start_jitter_max: f64,
    pub seed: u64,
    /// Discount applied to control bytes when computing ASC.
    pub discount: f64,
    /// Charge receive energy to every in-range node for each transmission.
    pub overhearing: bool,
    /// Fuse reports along the tree; `false` forwards every report unfused.
    pub aggregation: bool,
    /// Keep simulating past `sim_duration` until every source is dead.
    pub run_to_extinction: bool,
    /// Hard stop for extinction runs, seconds.
    pub extinction_cap: f64,
    pub oracle_limit: usize,
    // Diffusion parameters, kept for reference; the delivery model does not use them.
    pub diffusion_packet_size: u32,
    pub diffusion_delay: f64,
    pub diffusion_data_delay: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            node_count: 100,
            node_density: 55.0 / 1652.0,
            sink_count: 5,
            source_fraction: 0.1,
            radio_range: 45.0,
            data_rate: 1.0,
            timeframe: 28.0,
            data_packet_size: 138,
            espan_control_size: 96,
            dlmt_hello_size: 63,
            dlmt_header_size: 24,
            dlmt_entry_size: 8,
            clmt_report_size: 63,
            idle_power: 0.040,
            rx_power: 0.400,
            tx_power: 0.680,
            mac_bandwidth: 1.63e6,
            energy_log_period: 0.550,
            source_energy_min: 12.0,
            source_energy_max: 18.0,
            non_source_energy: 50.0,
            sim_duration: 250.0,
            start_jitter_max: 5.0,
            seed: 1,
            discount: 1.0,
            overhearing: true,
            aggregation: true,
            run_to_extinction: false,
            extinction_cap: 5000.0,
            oracle_limit: 8,
            diffusion_packet_size: 86,
            diffusion_delay: 5.0,
            diffusion_data_delay: 28.0,
        }
    }
}

macro_rules! config_keys {
    ($mac:ident) => {
        $mac! {
            node_count: usize,
            node_density: f64,
            sink_count: usize,
            source_fraction: f64,
            radio_range: f64,
            data_rate: f64,
            timeframe: f64,
            data_packet_size: u32,
            espan_control_size: u32,
            dlmt_hello_size: u32,
            dlmt_header_size: u32,
            dlmt_entry_size: u32,
            clmt_report_size: u32,
            idle_power: f64,
            rx_power: f64,
            tx_power: f64,
            mac_bandwidth: f64,
            energy_log_period: f64,
            source_energy_min: f64,
            source_energy_max: f64,
            non_source_energy: f64,
            sim_duration: f64,
            start_jitter_max: f64,
            seed: u64,
            discount: f64,
            overhearing: bool,
            aggregation: bool,
            run_to_extinction: bool,
            extinction_cap: f64,
            oracle_limit: usize,
            diffusion_packet_size: u32,
            diffusion_delay: f64,
            diffusion_data_delay: f64,
        }
    };
}

macro_rules! impl_set {
    ($($name:ident: $ty:ty,)*) => {
        impl SimConfig {
            /// Set one field from its textual value.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $(stringify!($name) => {
                        self.$name = value.parse::<$ty>().map_err(|e| {
                            Error::InvalidConfig(format!("{key} = {value}: {e}"))
                        })?;
                    })*
                    _ => return Err(Error::InvalidConfig(format!("unknown key `{key}`"))),
                }
                Ok(())
            }

            /// Dump every field as `key = value` lines.
            pub fn to_text(&self) -> String {
                let mut out = String::new();
                $(let _ = writeln!(out, "{} = {}", stringify!($name), self.$name);)*
                out
            }
        }
    };
}

config_keys!(impl_set);

impl SimConfig {
    /// Parse a `key = value` file on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            if key == "node_density" {
                self.node_density = parse_ratio(value).ok_or_else(|| {
                    Error::InvalidConfig(format!("node_density = {value}: not a number or a/b"))
                })?;
            } else {
                self.set(key, value)?;
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.node_count < 1 {
            return bad("node_count must be >= 1");
        }
        if !(self.node_density > 0.0) {
            return bad("node_density must be > 0");
        }
        if !(self.source_fraction > 0.0 && self.source_fraction <= 1.0) {
            return bad("source_fraction must be in (0, 1]");
        }
        if !(self.radio_range > 0.0) {
            return bad("radio_range must be > 0");
        }
        if !(self.data_rate > 0.0) {
            return bad("data_rate must be > 0");
        }
        if !(self.timeframe > 0.0) {
            return bad("timeframe must be > 0");
        }
        if !(self.source_energy_min <= self.source_energy_max
            && self.source_energy_max < self.non_source_energy)
        {
            return bad("need source_energy_min <= source_energy_max < non_source_energy");
        }
        if !(self.source_energy_min >= 0.0) {
            return bad("source energies must be >= 0");
        }
        if !(self.idle_power > 0.0 && self.rx_power > 0.0 && self.tx_power > 0.0) {
            return bad("all powers must be > 0");
        }
        if !(self.mac_bandwidth > 0.0) {
            return bad("mac_bandwidth must be > 0");
        }
        if !(self.energy_log_period > 0.0) {
            return bad("energy_log_period must be > 0");
        }
        if !(self.sim_duration >= 0.0 && self.start_jitter_max >= 0.0) {
            return bad("durations must be >= 0");
        }
        if self.data_packet_size == 0 {
            return bad("data_packet_size must be > 0");
        }
        if !(self.discount >= 0.0) {
            return bad("discount must be >= 0");
        }
        Ok(())
    }

    /// `round(source_fraction * node_count)`.
    pub fn source_quota(&self) -> usize {
        (self.source_fraction * self.node_count as f64).round() as usize
    }
}

fn parse_ratio(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().ok()?;
            let b: f64 = b.trim().parse().ok()?;
            Some(a / b)
        }
        None => s.parse().ok(),
    }
}
