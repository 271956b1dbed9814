//! Two-phase clocked simulation of a whole tree.
//!
//! Every cycle first evaluates all selections, ready signals and
//! handshakes from the cycle-start snapshot, then commits every register
//! update at once. Cycle `c` is the period that starts from boundary `c`
//! (boundary 0 is the freshly loaded state); a root transaction in that
//! period is stamped `c`, and the edge closing it produces boundary `c + 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::checks::{self, Violation, ViolationKind};
use crate::cells::{
    comb_extract, hourglass_commit, hourglass_outputs, hourglass_select, leaf_step, registered_step,
    LeafState, RegisteredInput,
};
use crate::error::SimError;
use crate::model::{
    CellRegisters, CellSnapshot, CycleTrace, Element, PortView, RegisteredNodeState, SimConfig,
    SinkPattern, TieBreak, Variant,
};
use crate::topology::{build_tree, depth_of, NodeRef, TreeTopology};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum NodeStates {
    Hourglass(Vec<CellRegisters>),
    Registered(Vec<RegisteredNodeState>),
    /// The unregistered tree keeps no state besides the leaves.
    #[default]
    Combinational,
}

impl NodeStates {
    fn snapshot(&self) -> Vec<CellSnapshot> {
        match self {
            NodeStates::Hourglass(cells) => cells.iter().copied().map(CellSnapshot::Hourglass).collect(),
            NodeStates::Registered(cells) => cells.iter().copied().map(CellSnapshot::Registered).collect(),
            NodeStates::Combinational => Vec::new(),
        }
    }
}

/// Consumer attached to the root output.
#[derive(Clone, Debug, PartialEq)]
pub struct SinkState {
    pub pattern: SinkPattern,
    pub consumed: usize,
    rng: ChaCha8Rng,
}

impl Default for SinkState {
    fn default() -> Self {
        Self::new(SinkPattern::AlwaysReady, 0)
    }
}

impl SinkState {
    pub fn new(pattern: SinkPattern, seed: u64) -> Self {
        Self {
            pattern,
            consumed: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Ready for `cycle`. Random sinks draw exactly once per cycle.
    fn ready(&mut self, cycle: u64) -> bool {
        match self.pattern {
            SinkPattern::AlwaysReady => true,
            SinkPattern::EveryK(k) => cycle.is_multiple_of(k),
            SinkPattern::Random(p) => self.rng.gen_bool(p),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimState {
    pub cycle: u64,
    pub leaves: Vec<LeafState>,
    pub cells: NodeStates,
    pub sink: SinkState,
}

impl SimState {
    /// Valid elements currently held by leaves and cell registers.
    pub fn in_flight(&self) -> Vec<Element> {
        let mut out: Vec<Element> = self.leaves.iter().filter_map(LeafState::held).collect();
        match &self.cells {
            NodeStates::Hourglass(cells) => out.extend(cells.iter().flat_map(|c| c.held())),
            NodeStates::Registered(cells) => out.extend(cells.iter().filter_map(|c| c.held())),
                    NodeStates::Combinational => {}
        }
        out
    }

    fn root_port(&self) -> PortView {
        match &self.cells {
            NodeStates::Hourglass(cells) => hourglass_outputs(cells.last().expect("tree has a root")),
            NodeStates::Registered(cells) => {
                let root = cells.last().expect("tree has a root");
                PortView::new(root.held(), root.v_out)
            }
            NodeStates::Combinational => PortView::new(None, self.leaves.iter().any(|l| l.v)),
        }
    }
}

/// Parallel load of every element into its leaf register; all cells start
/// empty.
pub fn load(
    topo: &TreeTopology,
    variant: Variant,
    input: &[Element],
    width: u32,
) -> Result<SimState, SimError> {
    if input.len() != topo.n {
        return Err(SimError::LengthMismatch {
            expected: topo.n,
            got: input.len(),
        });
    }
    if let Some((position, e)) = input.iter().enumerate().find(|(_, e)| !e.fits_width(width)) {
        return Err(SimError::ValueOutOfRange {
            value: e.value,
            position,
            width,
        });
    }
    let mut seen = vec![false; input.len()];
    for (position, e) in input.iter().enumerate() {
        if let Some(index) = e.index.map(|i| i as usize) {
            if index >= input.len() || std::mem::replace(&mut seen[index], true) {
                return Err(SimError::BadIndex { index, position });
            }
        }
    }
    let cells = match variant {
        Variant::Hourglass => NodeStates::Hourglass(vec![CellRegisters::empty(); topo.cells.len()]),
        Variant::Registered => {
            NodeStates::Registered(vec![RegisteredNodeState::default(); topo.cells.len()])
        }
        Variant::Combinational => NodeStates::Combinational,
    };
    Ok(SimState {
        cycle: 0,
        leaves: input.iter().copied().map(LeafState::loaded).collect(),
        cells,
        sink: SinkState::new(SinkPattern::AlwaysReady, 0),
    })
}

/// Root-port activity during one cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CycleOutcome {
    pub cycle: u64,
    pub root_valid: bool,
    pub sink_ready: bool,
    pub emitted: Option<Element>,
}

impl CycleOutcome {
    pub fn transaction(&self) -> bool {
        self.emitted.is_some()
    }
}

/// Per-node handshake flags and flattened parent wiring reused across
/// cycles. A scratch buffer is tied to the topology it was first used with.
#[derive(Clone, Debug, Default)]
pub struct StepScratch {
    /// Indexed by port: leaves first, then cells.
    flags: Vec<bool>,
    wiring: Vec<[u32; 2]>,
    leaves: usize,
}

const ABSENT: u32 = u32::MAX;

impl StepScratch {
    fn prepare(&mut self, topo: &TreeTopology) {
        let n = topo.n;
        if self.leaves != n || self.wiring.len() != topo.cells.len() {
            let encode = |r: NodeRef| match r {
                NodeRef::Leaf(i) => i as u32,
                NodeRef::Cell(i) => (n + i) as u32,
            };
            self.wiring = topo
                .cells
                .iter()
                .map(|c| [encode(c.left), c.right.map_or(ABSENT, encode)])
                .collect();
            self.leaves = n;
        }
        self.flags.clear();
        self.flags.resize(n + topo.cells.len(), false);
    }
}

/// Advances one clock cycle. Reads only from `state`; the returned state is
/// the next boundary.
pub fn step(topo: &TreeTopology, state: &SimState, tie_break: TieBreak) -> (SimState, CycleOutcome) {
    let mut next = state.clone();
    let outcome = step_into(topo, state, &mut next, &mut StepScratch::default(), tie_break);
    (next, outcome)
}

/// [`step`] writing the next boundary into a caller-owned buffer.
pub fn step_into(
    topo: &TreeTopology,
    state: &SimState,
    next: &mut SimState,
    scratch: &mut StepScratch,
    tie_break: TieBreak,
) -> CycleOutcome {
    // Every register of the clocked variants is rewritten below, so only
    // shape and the sink need copying.
    next.cycle = state.cycle;
    next.sink.clone_from(&state.sink);
    let same_shape = match (&next.cells, &state.cells) {
        (NodeStates::Hourglass(a), NodeStates::Hourglass(b)) => a.len() == b.len(),
        (NodeStates::Registered(a), NodeStates::Registered(b)) => a.len() == b.len(),
        (NodeStates::Combinational, NodeStates::Combinational) => true,
        _ => false,
    };
    if !same_shape {
        next.cells = state.cells.clone();
    }
    next.leaves.clone_from(&state.leaves);
    let sink_ready = next.sink.ready(state.cycle);
    let root = state.root_port();
    let mut outcome = CycleOutcome {
        cycle: state.cycle,
        root_valid: root.v,
        sink_ready,
        emitted: None,
    };

    match &state.cells {
        NodeStates::Hourglass(cells) => {
            let NodeStates::Hourglass(next_cells) = &mut next.cells else { unreachable!() };
            scratch.prepare(topo);
            let n = state.leaves.len();
            let StepScratch { flags: ready, wiring, .. } = scratch;
            *ready.last_mut().expect("tree has a root") = sink_ready;
            let port = |p: u32| {
                let p = p as usize;
                if p == ABSENT as usize {
                    PortView::invalid()
                } else if p < n {
                    state.leaves[p].port()
                } else {
                    hourglass_outputs(&cells[p - n])
                }
            };
            // Children come after their parents, so walking backwards
            // settles each cell's downstream ready before it is needed.
            // Cells skipped below keep their registers.
            next_cells.copy_from_slice(cells);
            let rows = cells.iter().zip(next_cells.iter_mut()).zip(wiring.iter());
            for (id, ((&cur, slot), &[l, r])) in rows.enumerate().rev() {
                // Full and blocked: no ready goes upstream and nothing moves.
                if cur.v0 && cur.v1 && !ready[n + id] {
                    continue;
                }
                let (left, right) = (port(l), port(r));
                // Empty with nothing to take: the registers stay cleared.
                if !(cur.v0 || left.v || right.v) {
                    continue;
                }
                let sel = hourglass_select(left, right, cur.v1, tie_break);
                ready[l as usize] = sel.r_l;
                if r != ABSENT {
                    ready[r as usize] = sel.r_r;
                }
                *slot = hourglass_commit(cur, sel, ready[n + id]);
            }
            // `next.leaves` already holds the current leaves; only a flagged
            // one can change.
            for (leaf, _) in next.leaves.iter_mut().zip(ready.iter()).filter(|(_, r)| **r) {
                *leaf = leaf_step(*leaf, true);
            }
        }
        NodeStates::Registered(cells) => {
            let NodeStates::Registered(next_cells) = &mut next.cells else { unreachable!() };
            scratch.prepare(topo);
            let n = state.leaves.len();
            let StepScratch { flags: consumed, wiring, .. } = scratch;
            *consumed.last_mut().expect("tree has a root") = root.v && sink_ready;
            let input = |p: u32| {
                let p = p as usize;
                if p == ABSENT as usize {
                    RegisteredInput::absent()
                } else if p < n {
                    RegisteredInput::from_leaf(&state.leaves[p])
                } else {
                    RegisteredInput::from_node(&cells[p - n])
                }
            };
            for id in (0..cells.len()).rev() {
                let [l, r] = wiring[id];
                let s = registered_step(cells[id], input(l), input(r), consumed[n + id], tie_break);
                consumed[l as usize] = s.clear1;
                if r != ABSENT {
                    consumed[r as usize] = s.clear2;
                }
                next_cells[id] = s.node;
            }
            // `next.leaves` already holds the current leaves; only a flagged
            // one can change.
            for (leaf, _) in next.leaves.iter_mut().zip(consumed.iter()).filter(|(_, r)| **r) {
                *leaf = leaf_step(*leaf, true);
            }
        }
        NodeStates::Combinational => {
            if root.v && sink_ready {
                let x = comb_extract(&state.leaves, tie_break).expect("root valid implies a valid leaf");
                next.leaves[x.winner_leaf] = leaf_step(state.leaves[x.winner_leaf], true);
                outcome.emitted = Some(x.winner);
            }
        }
    }

    if root.v && sink_ready && outcome.emitted.is_none() {
        outcome.emitted = root.d;
    }
    if outcome.emitted.is_some() {
        next.sink.consumed += 1;
    }
    next.cycle += 1;
    outcome
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config: SimConfig,
    pub output: Vec<Element>,
    /// Cycle of the first root transaction.
    pub first_output_cycle: Option<u64>,
    /// Cycle of the last root transaction.
    pub last_output_cycle: Option<u64>,
    /// Cycles elapsed up to and including the last transaction.
    pub total_cycles: u64,
    /// One record per simulated cycle; cells only when verbose.
    pub trace: Vec<CycleTrace>,
    pub violations: Vec<Violation>,
    /// Comparator stages a value crosses per output, counting the reset path
    /// of the unregistered tree.
    pub critical_path_stages: usize,
}

/// Drives a tree from load to the last requested output, checking
/// invariants at every clock boundary.
pub struct Simulator {
    config: SimConfig,
    topo: TreeTopology,
    /// Loaded elements, always carrying their position for bookkeeping.
    loaded: Vec<Element>,
    state: SimState,
    next: SimState,
    scratch: StepScratch,
    output: Vec<Element>,
    trace: Vec<CycleTrace>,
    violations: Vec<Violation>,
    first: Option<u64>,
    last: Option<u64>,
    seen: Vec<bool>,
    emitted_seen: Vec<bool>,
}

impl Simulator {
    pub fn new(config: SimConfig, input: &[Element]) -> Result<Self, SimError> {
        config.validate()?;
        let topo = build_tree(config.n)?;
        let mut state = load(&topo, config.variant, input, config.width)?;
        let loaded: Vec<Element> = input
            .iter()
            .enumerate()
            .map(|(pos, e)| Element {
                index: Some(e.index.unwrap_or(pos as u32)),
                ..*e
            })
            .collect();
        // A mix of given and missing indices could collide after filling in.
        if input.iter().any(|e| e.index.is_some()) && input.iter().any(|e| e.index.is_none()) {
            return Err(SimError::InvalidConfig(
                "either every element carries an index or none does".into(),
            ));
        }
        for (leaf, e) in state.leaves.iter_mut().zip(&loaded) {
            *leaf = LeafState::loaded(*e);
        }
        state.sink = SinkState::new(config.sink, config.seed);
        Ok(Self {
            seen: vec![false; loaded.len()],
            emitted_seen: vec![false; loaded.len()],
            next: state.clone(),
            scratch: StepScratch::default(),
            config,
            topo,
            loaded,
            state,
            output: Vec::new(),
            trace: Vec::new(),
            violations: Vec::new(),
            first: None,
            last: None,
        })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.topo
    }

    pub fn output(&self) -> &[Element] {
        &self.output
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    /// Simulates one cycle, records it and checks the new boundary.
    pub fn step(&mut self) -> CycleOutcome {
        let outcome = step_into(
            &self.topo,
            &self.state,
            &mut self.next,
            &mut self.scratch,
            self.config.tie_break,
        );
        self.trace.push(CycleTrace {
            cycle: outcome.cycle,
            cells: self.config.verbose_trace.then(|| self.snapshot()),
            root_valid: outcome.root_valid,
            sink_ready: outcome.sink_ready,
            root_transaction: outcome.transaction(),
            emitted: outcome.emitted.map(|e| self.public(e)),
        });
        if let Some(e) = outcome.emitted {
            if let Some(prev) = self.output.last() {
                if prev.value > e.value {
                    self.violations.push(Violation::new(
                        ViolationKind::Monotonicity,
                        Some(outcome.cycle),
                        None,
                        format!("emitted {} after {}", e.value, prev.value),
                    ));
                }
            }
            self.first.get_or_insert(outcome.cycle);
            self.last = Some(outcome.cycle);
            self.output.push(e);
            self.mark_emitted(e, outcome.cycle);
        }
        std::mem::swap(&mut self.state, &mut self.next);
        self.check_boundary();
        outcome
    }

    fn snapshot(&self) -> Vec<CellSnapshot> {
        let cells = self.state.cells.snapshot();
        if self.config.track_indices {
            cells
        } else {
            cells.into_iter().map(CellSnapshot::without_indices).collect()
        }
    }

    fn public(&self, e: Element) -> Element {
        if self.config.track_indices {
            e
        } else {
            Element::new(e.value)
        }
    }

    /// Checks the boundary just reached in `state` against the previous one,
    /// which now sits in `next`.
    fn check_boundary(&mut self) {
        let (prev, next) = (&self.next, &self.state);
        let cycle = Some(next.cycle);
        for (i, (before, after)) in prev.leaves.iter().zip(&next.leaves).enumerate() {
            if !before.v && after.v {
                self.violations.push(Violation::new(
                    ViolationKind::Leaf,
                    cycle,
                    None,
                    format!("leaf{i} became valid again"),
                ));
            }
        }
        match (&prev.cells, &next.cells) {
            (NodeStates::Hourglass(_), NodeStates::Hourglass(cells)) => {
                for (id, regs) in cells.iter().enumerate() {
                    checks::check_hourglass_cell(&mut self.violations, next.cycle, id, regs);
                }
            }
            (NodeStates::Registered(before), NodeStates::Registered(cells)) => {
                for (id, (old, node)) in before.iter().zip(cells).enumerate() {
                    checks::check_registered_node(&mut self.violations, next.cycle, id, Some(old), node);
                }
            }
            _ => {}
        }
        if self.config.check_conservation {
            let problems = conservation_problems(&self.loaded, &self.emitted_seen, &mut self.seen, next);
            self.violations.extend(
                problems
                    .into_iter()
                    .map(|p| Violation::new(ViolationKind::Conservation, cycle, None, p)),
            );
        }
    }

    fn known(&self, e: &Element) -> Option<usize> {
        known(&self.loaded, e)
    }

    fn mark_emitted(&mut self, e: Element, cycle: u64) {
        if !self.config.check_conservation {
            return;
        }
        let problem = match self.known(&e) {
            Some(i) if std::mem::replace(&mut self.emitted_seen[i], true) => format!("element {e} emitted twice"),
            Some(_) => return,
            None => format!("emitted unknown element {e}"),
        };
        self.violations
            .push(Violation::new(ViolationKind::Conservation, Some(cycle), None, problem));
    }

    /// Steps until the requested number of outputs have left the root.
    pub fn run(mut self) -> Result<RunReport, SimError> {
        let expected = self.config.expected_outputs();
        let limit = 4 * self.config.n as u64 + 4 * depth_of(self.config.n) as u64;
        // A sink that is never ready cannot be told apart from a hang by the
        // ready-cycle count alone.
        let idle_limit = match self.config.sink {
            SinkPattern::EveryK(k) => limit.saturating_mul(k).saturating_mul(2),
            _ => limit.saturating_mul(1024),
        };
        let (mut stalled_ready, mut stalled) = (0u64, 0u64);
        while self.output.len() < expected {
            let outcome = self.step();
            if outcome.transaction() {
                stalled_ready = 0;
                stalled = 0;
                continue;
            }
            stalled += 1;
            stalled_ready += outcome.sink_ready as u64;
            if stalled_ready > limit || stalled > idle_limit {
                return Err(SimError::NonTermination {
                    cycle: outcome.cycle,
                    stalled,
                    emitted: self.output.len(),
                    expected,
                });
            }
        }
        let output = self.output.iter().map(|&e| self.public(e)).collect();
        let critical_path_stages = match self.config.variant {
            Variant::Combinational => 2 * depth_of(self.config.n),
            _ => 1,
        };
        Ok(RunReport {
            output,
            first_output_cycle: self.first,
            last_output_cycle: self.last,
            total_cycles: self.last.map_or(0, |c| c + 1),
            trace: self.trace,
            violations: self.violations,
            critical_path_stages,
            config: self.config,
        })
    }
}

pub fn run(config: &SimConfig, input: &[Element]) -> Result<RunReport, SimError> {
    Simulator::new(config.clone(), input)?.run()
}

/// Runs until the `m` smallest elements have been emitted.
pub fn run_take(config: &SimConfig, input: &[Element], m: usize) -> Result<RunReport, SimError> {
    run(&config.clone().take(m), input)
}

fn known(loaded: &[Element], e: &Element) -> Option<usize> {
    e.index
        .map(|i| i as usize)
        .filter(|&i| i < loaded.len() && loaded[i] == *e)
}

/// Every loaded element must be held exactly once, either in flight or
/// already emitted.
fn conservation_problems(
    loaded: &[Element],
    emitted: &[bool],
    seen: &mut [bool],
    state: &SimState,
) -> Vec<String> {
    seen.copy_from_slice(emitted);
    let mut problems = Vec::new();
    let mut visit = |e: Element| match known(loaded, &e) {
        Some(i) => {
            if std::mem::replace(&mut seen[i], true) {
                problems.push(format!("element {e} held twice"));
            }
        }
        None => problems.push(format!("unknown element {e}")),
    };
    state.leaves.iter().filter_map(LeafState::held).for_each(&mut visit);
    match &state.cells {
        NodeStates::Hourglass(cells) => cells.iter().flat_map(|c| c.held()).for_each(&mut visit),
        NodeStates::Registered(cells) => cells.iter().filter_map(|c| c.held()).for_each(&mut visit),
        NodeStates::Combinational => {}
    }
    let missing = seen.iter().filter(|s| !**s).count();
    if missing > 0 {
        problems.push(format!("{missing} loaded elements lost"));
    }
    problems
}
