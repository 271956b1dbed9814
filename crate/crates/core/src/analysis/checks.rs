//! Per-cycle invariant checks shared by the engine and offline trace
//! inspection.

use std::fmt;

use serde::Serialize;

use crate::model::{CellRegisters, CellSnapshot, CycleTrace, RegisteredNodeState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// Register one valid while register zero is empty.
    ValidOrder,
    /// Both registers valid but out of order.
    DataOrder,
    /// A valid flag without data behind it.
    MissingData,
    /// Registered node both valid and marked empty.
    ValidAndEmpty,
    /// Registered node's empty flag cleared after being set.
    EmptyCleared,
    Leaf,
    Conservation,
    Monotonicity,
    /// Root transaction without an emitted element or vice versa.
    Transaction,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Clock boundary (or trace cycle) where it was observed.
    pub cycle: Option<u64>,
    pub cell: Option<usize>,
    pub detail: String,
}

impl Violation {
    pub fn new(kind: ViolationKind, cycle: Option<u64>, cell: Option<usize>, detail: String) -> Self {
        Self {
            kind,
            cycle,
            cell,
            detail,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        if let Some(c) = self.cycle {
            write!(f, " at cycle {c}")?;
        }
        if let Some(id) = self.cell {
            write!(f, " in cell{id}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[inline]
fn hourglass_cell_ok(regs: &CellRegisters) -> bool {
    match (regs.v0, regs.v1) {
        (false, false) => true,
        (true, false) => regs.d0.is_some(),
        (true, true) => matches!((regs.d0, regs.d1), (Some(a), Some(b)) if a.value <= b.value),
        (false, true) => false,
    }
}

#[inline]
pub fn check_hourglass_cell(out: &mut Vec<Violation>, cycle: u64, id: usize, regs: &CellRegisters) {
    if !hourglass_cell_ok(regs) {
        report_hourglass_cell(out, cycle, id, regs);
    }
}

#[cold]
#[inline(never)]
fn report_hourglass_cell(out: &mut Vec<Violation>, cycle: u64, id: usize, regs: &CellRegisters) {
    let mut flag = |kind, detail: String| out.push(Violation::new(kind, Some(cycle), Some(id), detail));
    if regs.v1 && !regs.v0 {
        flag(ViolationKind::ValidOrder, "v1 set while v0 clear".into());
    }
    if (regs.v0 && regs.d0.is_none()) || (regs.v1 && regs.d1.is_none()) {
        flag(ViolationKind::MissingData, "valid register without data".into());
    }
    if let (true, true, Some(d0), Some(d1)) = (regs.v0, regs.v1, regs.d0, regs.d1) {
        if d0.value > d1.value {
            flag(ViolationKind::DataOrder, format!("d0={} > d1={}", d0.value, d1.value));
        }
    }
}

/// `before` is the same node one boundary earlier, when known.
pub fn check_registered_node(
    out: &mut Vec<Violation>,
    cycle: u64,
    id: usize,
    before: Option<&RegisteredNodeState>,
    node: &RegisteredNodeState,
) {
    let mut flag = |kind, detail: String| out.push(Violation::new(kind, Some(cycle), Some(id), detail));
    if node.v_out && node.e_out {
        flag(ViolationKind::ValidAndEmpty, "v_out and e_out both set".into());
    }
    if node.v_out && node.d_out.is_none() {
        flag(ViolationKind::MissingData, "valid output without data".into());
    }
    if before.is_some_and(|b| b.e_out && !node.e_out) {
        flag(ViolationKind::EmptyCleared, "e_out cleared after being set".into());
    }
}

/// Re-checks a recorded trace: cell invariants on verbose records, the
/// transaction/emission pairing and nondecreasing output.
pub fn check_invariants(trace: &[CycleTrace]) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut previous_cells: Option<&Vec<CellSnapshot>> = None;
    let mut last_value = None;
    for rec in trace {
        if rec.root_transaction != rec.emitted.is_some() {
            out.push(Violation::new(
                ViolationKind::Transaction,
                Some(rec.cycle),
                None,
                "root transaction and emitted element disagree".into(),
            ));
        }
        if rec.root_transaction && !(rec.root_valid && rec.sink_ready) {
            out.push(Violation::new(
                ViolationKind::Transaction,
                Some(rec.cycle),
                None,
                "transaction without valid and ready".into(),
            ));
        }
        if let Some(e) = rec.emitted {
            if last_value.is_some_and(|v| v > e.value) {
                out.push(Violation::new(
                    ViolationKind::Monotonicity,
                    Some(rec.cycle),
                    None,
                    format!("emitted {} after {}", e.value, last_value.unwrap()),
                ));
            }
            last_value = Some(e.value);
        }
        if let Some(cells) = &rec.cells {
            for (id, snap) in cells.iter().enumerate() {
                match snap {
                    CellSnapshot::Hourglass(regs) => check_hourglass_cell(&mut out, rec.cycle, id, regs),
                    CellSnapshot::Registered(node) => {
                        let before = previous_cells.and_then(|p| match p.get(id) {
                            Some(CellSnapshot::Registered(b)) => Some(b),
                            _ => None,
                        });
                        check_registered_node(&mut out, rec.cycle, id, before, node)
                    }
                }
            }
            previous_cells = Some(cells);
        }
    }
    out
}
