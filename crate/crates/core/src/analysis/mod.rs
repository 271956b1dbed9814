//! Reference oracle, bubble detection, variant comparison and invariant
//! checking over finished runs.

pub mod checks;
pub mod resources;

use serde::Serialize;

use crate::engine::{run, RunReport};
use crate::error::SimError;
use crate::model::{CycleTrace, Element, SimConfig, Variant};

pub use checks::{check_invariants, Violation, ViolationKind};
pub use resources::{carry8_count, estimate, latency_model, lut_fit, reg_count, ResourceEstimate};

/// Ascending by value, equal values kept in their original order.
pub fn oracle_stable_sort(input: &[Element]) -> Vec<Element> {
    let mut out = input.to_vec();
    out.sort_by_key(|e| e.value);
    out
}

/// Cycles, from `first` until `count` transactions have been seen, where
/// the sink was ready but the root had nothing to give.
///
/// Cycles where the sink itself stalled are not bubbles; see
/// [`sink_stalls`] for those.
pub fn detect_bubbles(trace: &[CycleTrace], first: u64, count: usize) -> Vec<u64> {
    let mut bubbles = Vec::new();
    let mut seen = 0;
    for rec in trace.iter().filter(|r| r.cycle >= first) {
        if seen >= count {
            break;
        }
        if rec.root_transaction {
            seen += 1;
        } else if rec.sink_ready {
            bubbles.push(rec.cycle);
        }
    }
    bubbles
}

/// Cycles in the same window where the sink was not ready.
pub fn sink_stalls(trace: &[CycleTrace], first: u64, count: usize) -> Vec<u64> {
    let mut stalls = Vec::new();
    let mut seen = 0;
    for rec in trace.iter().filter(|r| r.cycle >= first) {
        if seen >= count {
            break;
        }
        if rec.root_transaction {
            seen += 1;
        } else if !rec.sink_ready {
            stalls.push(rec.cycle);
        }
    }
    stalls
}

/// Tree-induced bubbles of a finished run.
pub fn run_bubbles(report: &RunReport) -> Vec<u64> {
    match report.first_output_cycle {
        Some(first) => detect_bubbles(&report.trace, first, report.output.len()),
        None => Vec::new(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub n: usize,
    pub hourglass_first: Option<u64>,
    pub hourglass_total: u64,
    pub hourglass_bubbles: usize,
    pub registered_first: Option<u64>,
    pub registered_total: u64,
    pub registered_bubbles: usize,
    /// Hourglass total over registered total.
    pub ratio: f64,
    pub same_output: bool,
}

impl Comparison {
    /// The double-buffered tree must finish strictly earlier from n = 4 on.
    pub fn hourglass_faster(&self) -> bool {
        self.n < 4 || self.hourglass_total < self.registered_total
    }
}

/// Runs both clocked variants on the same input and sink.
pub fn compare_variants(config: &SimConfig, input: &[Element]) -> Result<Comparison, SimError> {
    let hourglass = run(&config.clone().variant(Variant::Hourglass), input)?;
    let registered = run(&config.clone().variant(Variant::Registered), input)?;
    Ok(Comparison {
        n: config.n,
        hourglass_first: hourglass.first_output_cycle,
        hourglass_total: hourglass.total_cycles,
        hourglass_bubbles: run_bubbles(&hourglass).len(),
        registered_first: registered.first_output_cycle,
        registered_total: registered.total_cycles,
        registered_bubbles: run_bubbles(&registered).len(),
        ratio: hourglass.total_cycles as f64 / registered.total_cycles.max(1) as f64,
        same_output: hourglass.output == registered.output,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_examples() {
        let sorted: Vec<u64> = oracle_stable_sort(&Element::plain(&[3, 1, 2]))
            .iter()
            .map(|e| e.value)
            .collect();
        assert_eq!(sorted, vec![1, 2, 3]);
        let tied = [Element::with_index(5, 0), Element::with_index(5, 1)];
        assert_eq!(oracle_stable_sort(&tied), tied.to_vec());
        assert!(oracle_stable_sort(&[]).is_empty());
    }

    fn rec(cycle: u64, ready: bool, txn: bool) -> CycleTrace {
        CycleTrace {
            cycle,
            cells: None,
            root_valid: txn,
            sink_ready: ready,
            root_transaction: txn,
            emitted: txn.then(|| Element::new(cycle)),
        }
    }

    #[test]
    fn bubbles_split_from_sink_stalls() {
        let trace = vec![
            rec(0, true, false),
            rec(1, true, true),
            rec(2, true, false),
            rec(3, false, false),
            rec(4, true, true),
            rec(5, true, false),
        ];
        assert_eq!(detect_bubbles(&trace, 1, 2), vec![2]);
        assert_eq!(sink_stalls(&trace, 1, 2), vec![3]);
    }
}
