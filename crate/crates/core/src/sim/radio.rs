use crate::config::SimConfig;

/// Airtime and energy of one transmission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transmission {
    /// Exact airtime, seconds.
    pub duration: f64,
    /// Airtime rounded up to whole microseconds, for scheduling.
    pub duration_us: u64,
    pub tx_energy: f64,
    pub rx_energy: f64,
}

/// Serialization time and transceiver energy for a `size`-byte packet.
pub fn transmit(config: &SimConfig, size: u32) -> Transmission {
    debug_assert!(size > 0, "zero-byte packet");
    let duration = f64::from(size) * 8.0 / config.mac_bandwidth;
    Transmission {
        duration,
        duration_us: (duration * 1e6).ceil() as u64,
        tx_energy: config.tx_power * duration,
        rx_energy: config.rx_power * duration,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_packet_airtime() {
        let t = transmit(&SimConfig::default(), 138);
        assert!((t.duration - 677.3e-6).abs() < 0.05e-6);
        assert_eq!(t.duration_us, 678);
        assert!((t.tx_energy - 460.5e-6).abs() < 0.1e-6);
        assert!((t.rx_energy - 270.9e-6).abs() < 0.05e-6);
    }

    #[test]
    #[should_panic]
    #[cfg(debug_assertions)]
    fn zero_bytes_rejected() {
        transmit(&SimConfig::default(), 0);
    }
}
