//! Cycle-accurate simulation of parallel-in/serial-out sorting trees.
//!
//! Three tree variants share one topology builder and one clocked engine:
//!
//! - **hourglass**: every cell double-buffers its output, so after the
//!   first `ceil(log2 n)` cycles one element leaves the root per cycle;
//! - **registered**: a single output register per node, which can't be
//!   read and refilled in the same cycle and so alternates with bubbles;
//! - **combinational**: an unregistered comparator tree, one extraction per
//!   cycle with a critical path that grows with the tree depth.
//!
//! ```
//! use hourglass::{run, Element, SimConfig};
//!
//! let report = run(&SimConfig::new(4, 8), &Element::plain(&[7, 3, 9, 1])).unwrap();
//! let sorted: Vec<u64> = report.output.iter().map(|e| e.value).collect();
//! assert_eq!(sorted, [1, 3, 7, 9]);
//! assert_eq!(report.first_output_cycle, Some(2));
//! assert_eq!(report.total_cycles, 6);
//! ```

pub mod analysis;
pub mod cells;
pub mod engine;
mod error;
pub mod model;
pub mod topology;
pub mod trace;
pub mod workload;

pub use analysis::{compare_variants, detect_bubbles, oracle_stable_sort, run_bubbles, Comparison};
pub use engine::{load, run, run_take, step, RunReport, SimState, Simulator};
pub use error::SimError;
pub use model::{
    element_less, CellRegisters, CellSnapshot, CycleTrace, Element, PortView, RegisteredNodeState,
    SimConfig, SinkPattern, TieBreak, Variant,
};
pub use topology::{build_tree, depth_of, validate_topology, TreeTopology};
