//! Closed-form resource and latency model of the hourglass tree.
//!
//! Register and carry-chain counts follow directly from the cell structure:
//! every cell holds two `w`-bit data registers, two valid bits and one
//! comparator, every leaf one `w`-bit register and a valid bit. LUT usage
//! has no structural model; it is an affine fit per element width to
//! synthesis results for power-of-two trees of 64 to 1024 elements.

use std::fmt::Write as _;

use serde::Serialize;

use crate::topology::{cell_count, depth_of};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResourceEstimate {
    pub n: usize,
    pub w: u32,
    pub reg_bits: u64,
    pub carry8_blocks: u64,
    /// `None` when no fit exists for the width.
    pub lut_estimate: Option<u64>,
    pub latency_first: u64,
    pub latency_total: u64,
    /// Outside the power-of-two, `n >= 64` domain the counts were fit on.
    pub extrapolated: bool,
}

fn cells(n: usize) -> u64 {
    cell_count(n) as u64
}

/// Flip-flops: `(2w + 2)` per cell plus `(w + 1)` per leaf.
pub fn reg_count(n: usize, w: u32) -> u64 {
    let w = w as u64;
    cells(n) * (2 * w + 2) + n as u64 * (w + 1)
}

/// One 8-bit carry block per comparator covers up to 16 bits of key.
pub fn carry8_count(n: usize, w: u32) -> u64 {
    cells(n) * (w as u64).div_ceil(16)
}

/// LUTs as `slope * n + intercept`, in half-LUT units to stay integral.
pub fn lut_fit(n: usize, w: u32) -> Option<u64> {
    let (slope2, intercept2): (i64, i64) = match w {
        8 => (55, -56),
        16 => (95, -96),
        32 => (174, -172),
        _ => return None,
    };
    let twice = slope2 * n as i64 + intercept2;
    // Round half up for odd n on the fractional-slope widths.
    Some(((twice + 1) / 2).max(0) as u64)
}

/// First output after `depth` cycles, then one per cycle.
pub fn latency_model(n: usize) -> (u64, u64) {
    let depth = depth_of(n) as u64;
    (depth, depth + n as u64)
}

pub fn in_fit_domain(n: usize) -> bool {
    n >= 64 && n.is_power_of_two()
}

pub fn estimate(n: usize, w: u32) -> ResourceEstimate {
    let (latency_first, latency_total) = latency_model(n);
    ResourceEstimate {
        n,
        w,
        reg_bits: reg_count(n, w),
        carry8_blocks: carry8_count(n, w),
        lut_estimate: lut_fit(n, w),
        latency_first,
        latency_total,
        extrapolated: !in_fit_domain(n),
    }
}

pub const CSV_HEADER: &str = "n,w,lut,reg,carry8,freq,latency";

/// One CSV row; frequency is left blank because it cannot be modeled.
pub fn csv_row(e: &ResourceEstimate) -> String {
    let lut = e.lut_estimate.map(|l| l.to_string()).unwrap_or_default();
    format!(
        "{},{},{},{},{},,{}+{}",
        e.n, e.w, lut, e.reg_bits, e.carry8_blocks, e.latency_first, e.n
    )
}

pub fn render_csv(estimates: &[ResourceEstimate]) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for e in estimates {
        writeln!(out, "{}", csv_row(e)).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reg_examples() {
        assert_eq!(reg_count(1024, 8), 27630);
        assert_eq!(reg_count(512, 8), 13806);
        assert_eq!(reg_count(64, 16), 3230);
        assert_eq!(reg_count(2, 8), 36);
    }

    #[test]
    fn carry_examples() {
        assert_eq!(carry8_count(1024, 8), 1023);
        assert_eq!(carry8_count(1024, 32), 2046);
        assert_eq!(carry8_count(128, 32), 254);
    }

    #[test]
    fn lut_examples() {
        assert_eq!(lut_fit(1024, 8), Some(28132));
        assert_eq!(lut_fit(256, 16), Some(12112));
        assert_eq!(lut_fit(64, 32), Some(5482));
        assert_eq!(lut_fit(64, 12), None);
    }

    #[test]
    fn latency_examples() {
        assert_eq!(latency_model(1024), (10, 1034));
        assert_eq!(latency_model(128), (7, 135));
        assert_eq!(latency_model(6), (3, 9));
    }

    #[test]
    fn padded_tree_uses_cell_count() {
        // n = 6: 3 + 2 + 1 cells.
        assert_eq!(reg_count(6, 8), 6 * 18 + 6 * 9);
        assert!(estimate(6, 8).extrapolated);
        assert!(!estimate(64, 8).extrapolated);
    }

    #[test]
    fn csv_rows() {
        assert_eq!(csv_row(&estimate(1024, 8)), "1024,8,28132,27630,1023,,10+1024");
        assert_eq!(csv_row(&estimate(64, 32)), "64,32,5482,6270,126,,6+64");
        assert_eq!(csv_row(&estimate(64, 12)), "64,12,,2470,63,,6+64");
    }
}
