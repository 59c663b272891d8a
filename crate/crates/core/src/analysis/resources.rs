//! Storage and operation-count estimates for direct and segmented solves.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResourceAccount {
    pub pulses: u64,
    pub mp: u64,
    pub np: u64,
    pub segment_pulses: u64,
    /// Dense `M x N` matrix of doubles.
    pub bytes_full: u64,
    /// Dense `M~ x N~` segment matrix of doubles.
    pub bytes_segsr: u64,
    /// Order of a direct OMP solve, `K M N`.
    pub flops_full: u64,
    /// Order of one segment solve, `K~ M~ N~`.
    pub flops_segsr: u64,
}

/// `sparsity` and `segment_sparsity` only scale the operation counts.
pub fn resource_accounting(pulses: u64, mp: u64, np: u64, segment_pulses: u64, sparsity: u64, segment_sparsity: u64) -> ResourceAccount {
    let m = pulses * mp;
    let n = pulses.saturating_sub(1) * np;
    let m_seg = (segment_pulses + 1) * mp;
    let n_seg = segment_pulses * np;
    ResourceAccount {
        pulses,
        mp,
        np,
        segment_pulses,
        bytes_full: 8 * m * n,
        bytes_segsr: 8 * m_seg * n_seg,
        flops_full: sparsity * m * n,
        flops_segsr: segment_sparsity * m_seg * n_seg,
    }
}

/// Binary-prefixed size with two decimals, e.g. `92.02 GiB`.
pub fn format_binary(bytes: u64) -> String {
    const UNITS: [&str; 6] = ["B", "KiB", "MiB", "GiB", "TiB", "PiB"];
    let mut v = bytes as f64;
    let mut unit = 0;
    while v >= 1024.0 && unit + 1 < UNITS.len() {
        v /= 1024.0;
        unit += 1;
    }
    if unit == 0 {
        format!("{bytes} B")
    } else {
        format!("{v:.2} {}", UNITS[unit])
    }
}
