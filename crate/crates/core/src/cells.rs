//! Single-cycle step semantics for each node kind.
//!
//! Every function here is pure: it reads the cycle-start values of its
//! inputs and returns what the registers hold after the clock edge.

use crate::error::SimError;
use crate::model::{element_less, CellRegisters, Element, PortView, RegisteredNodeState, TieBreak};

/// Output of an hourglass cell's input multiplexer for one cycle.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Selection {
    pub d: Option<Element>,
    pub v: bool,
    pub r_l: bool,
    pub r_r: bool,
}

/// First-layer source register. Holds its element until it is handed off.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LeafState {
    pub d: Option<Element>,
    pub v: bool,
}

impl LeafState {
    pub fn loaded(e: Element) -> Self {
        Self { d: Some(e), v: true }
    }

    pub fn port(&self) -> PortView {
        PortView::new(self.d, self.v)
    }

    pub fn held(&self) -> Option<Element> {
        if self.v {
            self.d
        } else {
            None
        }
    }
}

/// Data, valid and empty-subtree flag offered to a registered node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RegisteredInput {
    pub d: Option<Element>,
    pub v: bool,
    pub e: bool,
}

impl RegisteredInput {
    /// First-layer registers are empty exactly when they are invalid.
    pub fn from_leaf(leaf: &LeafState) -> Self {
        Self {
            d: leaf.d,
            v: leaf.v,
            e: !leaf.v,
        }
    }

    pub fn from_node(node: &RegisteredNodeState) -> Self {
        Self {
            d: node.d_out,
            v: node.v_out,
            e: node.e_out,
        }
    }

    /// The missing parent of a padding node.
    pub fn absent() -> Self {
        Self {
            d: None,
            v: false,
            e: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegisteredStep {
    pub node: RegisteredNodeState,
    pub clear1: bool,
    pub clear2: bool,
}

/// Picks which parent feeds the cell this cycle and routes `ready = !v1`
/// to it.
pub fn hourglass_select(left: PortView, right: PortView, v1: bool, tie_break: TieBreak) -> Selection {
    let ready = !v1;
    let left_wins = match (left.d, right.d) {
        (Some(l), Some(r)) => element_less(&l, &r, tie_break),
        // Only reached when a side is invalid, where validity decides anyway.
        _ => right.d.is_none(),
    };
    let take_left = if left_wins { left.v } else { !right.v };
    let taken = if take_left { left } else { right };
    Selection {
        d: if taken.v { taken.d } else { None },
        v: taken.v,
        r_l: take_left && ready,
        r_r: !take_left && ready,
    }
}

/// Clock-edge update of an hourglass cell. `r_out` is the ready seen on
/// the cell's output port this cycle.
pub fn hourglass_commit(regs: CellRegisters, sel: Selection, r_out: bool) -> CellRegisters {
    let incoming = if sel.v { sel.d } else { None };
    let mut next = regs;
    if !regs.v0 {
        next.d0 = incoming;
        next.v0 = sel.v;
    } else if !regs.v1 {
        if r_out {
            next.d0 = incoming;
            next.v0 = sel.v;
        } else {
            next.d1 = incoming;
            next.v1 = sel.v;
        }
    } else if r_out {
        next.d0 = regs.d1;
        next.v0 = regs.v1;
        next.d1 = None;
        next.v1 = false;
    }
    next
}

/// Downstream view of a cell: register zero drives data and valid.
pub fn hourglass_outputs(regs: &CellRegisters) -> PortView {
    PortView {
        d: if regs.v0 { regs.d0 } else { None },
        v: regs.v0,
        r: !regs.v1,
    }
}

/// Clock-edge update of a registered comparator node. A node whose output
/// is consumed this cycle only clears; it cannot also refill.
pub fn registered_step(
    node: RegisteredNodeState,
    in1: RegisteredInput,
    in2: RegisteredInput,
    consumed: bool,
    tie_break: TieBreak,
) -> RegisteredStep {
    let idle = RegisteredStep {
        node,
        clear1: false,
        clear2: false,
    };
    if consumed {
        return RegisteredStep {
            node: RegisteredNodeState {
                v_out: false,
                ..node
            },
            ..idle
        };
    }
    if node.v_out {
        return idle;
    }
    let load = |d: Option<Element>, clear1: bool| RegisteredStep {
        node: RegisteredNodeState {
            d_out: d,
            v_out: true,
            e_out: false,
        },
        clear1,
        clear2: !clear1,
    };
    match (in1.v, in2.v) {
        (true, true) => match (in1.d, in2.d) {
            (Some(a), Some(b)) if !element_less(&a, &b, tie_break) => load(in2.d, false),
            _ => load(in1.d, true),
        },
        (true, false) if in2.e => load(in1.d, true),
        (false, true) if in1.e => load(in2.d, false),
        (false, false) if in1.e && in2.e => RegisteredStep {
            node: RegisteredNodeState {
                e_out: true,
                ..node
            },
            ..idle
        },
        _ => idle,
    }
}

/// Result of one extraction from an unregistered comparator tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Extraction {
    pub winner: Element,
    pub winner_leaf: usize,
    /// Comparator stages on the critical path: down to the root and the
    /// reset back up to the winning leaf.
    pub path_depth: usize,
}

/// Finds the tournament minimum among the valid leaves, pairing positions
/// `2j`/`2j+1` layer by layer exactly as the registered trees do.
pub fn comb_extract(leaves: &[LeafState], tie_break: TieBreak) -> Result<Extraction, SimError> {
    let mut round: Vec<Option<(Element, usize)>> = leaves
        .iter()
        .enumerate()
        .map(|(i, leaf)| leaf.held().map(|e| (e, i)))
        .collect();
    while round.len() > 1 {
        round = round
            .chunks(2)
            .map(|pair| match pair {
                [Some(l), Some(r)] => {
                    if element_less(&l.0, &r.0, tie_break) {
                        Some(*l)
                    } else {
                        Some(*r)
                    }
                }
                [l, r] => l.or(*r),
                [only] => *only,
                _ => unreachable!(),
            })
            .collect();
    }
    let (winner, winner_leaf) = round
        .first()
        .copied()
        .flatten()
        .ok_or(SimError::NoValidLeaf)?;
    Ok(Extraction {
        winner,
        winner_leaf,
        path_depth: 2 * crate::topology::depth_of(leaves.len().max(1)),
    })
}

/// A leaf hands its element off the first cycle it sees ready.
pub fn leaf_step(leaf: LeafState, ready_seen: bool) -> LeafState {
    if leaf.v && ready_seen {
        LeafState { v: false, ..leaf }
    } else {
        leaf
    }
}
