//! Domain types shared by every tree variant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

/// A sortable payload: an unsigned key plus the optional position it was
/// loaded from. Ordering only ever looks at `value`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Element {
    pub value: u64,
    pub index: Option<u32>,
}

impl Element {
    pub fn new(value: u64) -> Self {
        Self { value, index: None }
    }

    pub fn with_index(value: u64, index: u32) -> Self {
        Self {
            value,
            index: Some(index),
        }
    }

    /// Builds elements tagged with their array position.
    pub fn indexed(values: &[u64]) -> Vec<Element> {
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| Element::with_index(v, i as u32))
            .collect()
    }

    pub fn plain(values: &[u64]) -> Vec<Element> {
        values.iter().map(|&v| Element::new(v)).collect()
    }

    pub fn fits_width(&self, width: u32) -> bool {
        width >= 64 || self.value < (1u64 << width)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{},{}", self.value, i),
            None => write!(f, "{}", self.value),
        }
    }
}

/// Which operand wins a comparison between equal keys.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieBreak {
    /// Equal keys select the left operand. Makes the tree a stable sorter.
    #[default]
    Left,
    /// Strict `<`: equal keys fall through to the right operand.
    Right,
}

impl FromStr for TieBreak {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "left" => Ok(TieBreak::Left),
            "right" => Ok(TieBreak::Right),
            other => Err(SimError::InvalidConfig(format!(
                "unknown tie-break policy `{other}` (expected left|right)"
            ))),
        }
    }
}

/// True when `left` should be selected over `right`.
pub fn element_less(left: &Element, right: &Element, tie_break: TieBreak) -> bool {
    match tie_break {
        TieBreak::Left => left.value <= right.value,
        TieBreak::Right => left.value < right.value,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Double-buffered cells; streams one value per cycle once the root fills.
    #[default]
    Hourglass,
    /// One output register per node plus an empty-subtree flag.
    Registered,
    /// Unregistered comparator tree, one extraction per cycle.
    Combinational,
}

impl FromStr for Variant {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hourglass" => Ok(Variant::Hourglass),
            "registered" => Ok(Variant::Registered),
            "combinational" => Ok(Variant::Combinational),
            other => Err(SimError::InvalidConfig(format!(
                "unknown variant `{other}` (expected hourglass|registered|combinational)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Hourglass => "hourglass",
            Variant::Registered => "registered",
            Variant::Combinational => "combinational",
        })
    }
}

/// Ready pattern of the consumer attached to the root.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum SinkPattern {
    #[default]
    AlwaysReady,
    /// Ready on cycles that are a multiple of the period.
    EveryK(u64),
    /// Ready with the given probability each cycle, drawn from the run seed.
    Random(f64),
}

impl SinkPattern {
    pub fn validate(&self) -> Result<(), SimError> {
        match *self {
            SinkPattern::AlwaysReady => Ok(()),
            SinkPattern::EveryK(0) => Err(SimError::InvalidConfig(
                "sink period must be at least 1".into(),
            )),
            SinkPattern::EveryK(_) => Ok(()),
            SinkPattern::Random(p) if (0.0..=1.0).contains(&p) => Ok(()),
            SinkPattern::Random(p) => Err(SimError::InvalidConfig(format!(
                "sink probability {p} outside [0, 1]"
            ))),
        }
    }
}

impl FromStr for SinkPattern {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || {
            SimError::InvalidConfig(format!(
                "bad sink pattern `{s}` (expected always|every:K|random:P)"
            ))
        };
        let pattern = if s == "always" {
            SinkPattern::AlwaysReady
        } else if let Some(k) = s.strip_prefix("every:") {
            SinkPattern::EveryK(k.parse().map_err(|_| bad())?)
        } else if let Some(p) = s.strip_prefix("random:") {
            SinkPattern::Random(p.parse().map_err(|_| bad())?)
        } else {
            return Err(bad());
        };
        pattern.validate()?;
        Ok(pattern)
    }
}

impl fmt::Display for SinkPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SinkPattern::AlwaysReady => f.write_str("always"),
            SinkPattern::EveryK(k) => write!(f, "every:{k}"),
            SinkPattern::Random(p) => write!(f, "random:{p}"),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub width: u32,
    pub variant: Variant,
    pub tie_break: TieBreak,
    /// Stop after this many outputs instead of draining the tree.
    pub take: Option<usize>,
    pub sink: SinkPattern,
    pub seed: u64,
    /// Keep original positions on the emitted elements.
    pub track_indices: bool,
    /// Record every cell's registers in the trace, not just the root port.
    pub verbose_trace: bool,
    /// Check the in-flight multiset against the loaded input every cycle.
    pub check_conservation: bool,
}

impl SimConfig {
    pub fn new(n: usize, width: u32) -> Self {
        Self {
            n,
            width,
            variant: Variant::Hourglass,
            tie_break: TieBreak::Left,
            take: None,
            sink: SinkPattern::AlwaysReady,
            seed: 0,
            track_indices: false,
            verbose_trace: false,
            check_conservation: true,
        }
    }

    pub fn variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn tie_break(mut self, tie_break: TieBreak) -> Self {
        self.tie_break = tie_break;
        self
    }

    pub fn take(mut self, m: usize) -> Self {
        self.take = Some(m);
        self
    }

    pub fn sink(mut self, sink: SinkPattern) -> Self {
        self.sink = sink;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn track_indices(mut self, on: bool) -> Self {
        self.track_indices = on;
        self
    }

    pub fn verbose(mut self, on: bool) -> Self {
        self.verbose_trace = on;
        self
    }

    pub fn check_conservation(mut self, on: bool) -> Self {
        self.check_conservation = on;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n == 0 || self.n > u32::MAX as usize {
            return Err(SimError::InvalidConfig(format!(
                "n = {} outside 1..=2^32-1",
                self.n
            )));
        }
        if self.width == 0 || self.width > 64 {
            return Err(SimError::InvalidConfig(format!(
                "width {} outside 1..=64",
                self.width
            )));
        }
        if let Some(m) = self.take {
            if m > self.n {
                return Err(SimError::InvalidConfig(format!(
                    "take {m} exceeds array length {}",
                    self.n
                )));
            }
        }
        self.sink.validate()
    }

    /// Number of root transactions the run waits for.
    pub fn expected_outputs(&self) -> usize {
        self.take.unwrap_or(self.n)
    }
}

/// One side of a ready/valid interface as seen during the combinational
/// phase. A transfer happens iff `v && r`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PortView {
    pub d: Option<Element>,
    pub v: bool,
    pub r: bool,
}

impl PortView {
    pub fn new(d: Option<Element>, v: bool) -> Self {
        Self { d, v, r: false }
    }

    pub fn invalid() -> Self {
        Self::default()
    }

    pub fn transfers(&self) -> bool {
        self.v && self.r
    }
}

/// The two data/valid register pairs of an hourglass cell. Register zero
/// drives the output; register one only holds data while zero is full.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRegisters {
    pub d0: Option<Element>,
    pub d1: Option<Element>,
    pub v0: bool,
    pub v1: bool,
}

impl CellRegisters {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn occupancy(&self) -> usize {
        self.v0 as usize + self.v1 as usize
    }

    /// Valid elements held, register zero first.
    pub fn held(&self) -> impl Iterator<Item = Element> {
        let first = if self.v0 { self.d0 } else { None };
        let second = if self.v1 { self.d1 } else { None };
        first.into_iter().chain(second)
    }
}

/// Output register of a node in the registered (single-buffer) baseline.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisteredNodeState {
    pub d_out: Option<Element>,
    pub v_out: bool,
    /// Set once nothing else will ever arrive from this subtree.
    pub e_out: bool,
}

impl RegisteredNodeState {
    pub fn held(&self) -> Option<Element> {
        if self.v_out {
            self.d_out
        } else {
            None
        }
    }
}

/// Register contents of one node at a clock boundary, as recorded in traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellSnapshot {
    Hourglass(CellRegisters),
    Registered(RegisteredNodeState),
}

impl CellSnapshot {
    pub fn without_indices(self) -> Self {
        let strip = |d: Option<Element>| d.map(|e| Element::new(e.value));
        match self {
            CellSnapshot::Hourglass(r) => CellSnapshot::Hourglass(CellRegisters {
                d0: strip(r.d0),
                d1: strip(r.d1),
                ..r
            }),
            CellSnapshot::Registered(n) => CellSnapshot::Registered(RegisteredNodeState {
                d_out: strip(n.d_out),
                ..n
            }),
        }
    }
}

/// What happened at the root during one cycle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleTrace {
    pub cycle: u64,
    /// Register snapshot at the start of the cycle, indexed by cell id.
    /// Only present for verbose runs.
    pub cells: Option<Vec<CellSnapshot>>,
    pub root_valid: bool,
    pub sink_ready: bool,
    pub root_transaction: bool,
    pub emitted: Option<Element>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn element_less_examples() {
        let (three, four, five) = (Element::new(3), Element::new(4), Element::new(5));
        assert!(element_less(&three, &five, TieBreak::Left));
        assert!(element_less(&four, &four, TieBreak::Left));
        assert!(!element_less(&four, &four, TieBreak::Right));
    }

    #[test]
    fn comparison_ignores_index() {
        let a = Element::with_index(4, 9);
        let b = Element::with_index(4, 0);
        assert!(element_less(&a, &b, TieBreak::Left));
        assert!(element_less(&b, &a, TieBreak::Left));
    }

    #[test]
    fn parses_sink_patterns() {
        assert_eq!("always".parse::<SinkPattern>().unwrap(), SinkPattern::AlwaysReady);
        assert_eq!("every:3".parse::<SinkPattern>().unwrap(), SinkPattern::EveryK(3));
        assert_eq!("random:0.5".parse::<SinkPattern>().unwrap(), SinkPattern::Random(0.5));
        assert!("every:0".parse::<SinkPattern>().is_err());
        assert!("random:1.5".parse::<SinkPattern>().is_err());
        assert!("sometimes".parse::<SinkPattern>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 8).validate().is_err());
        assert!(SimConfig::new(4, 0).validate().is_err());
        assert!(SimConfig::new(4, 8).take(5).validate().is_err());
        assert!(SimConfig::new(4, 8).take(4).validate().is_ok());
    }

    #[test]
    fn width_bound() {
        assert!(Element::new(255).fits_width(8));
        assert!(!Element::new(256).fits_width(8));
        assert!(Element::new(u64::MAX).fits_width(64));
    }

    proptest::proptest! {
        #[test]
        fn distinct_values_are_antisymmetric(a in 0u64..1000, b in 0u64..1000) {
            proptest::prop_assume!(a != b);
            let (x, y) = (Element::new(a), Element::new(b));
            for p in [TieBreak::Left, TieBreak::Right] {
                proptest::prop_assert_eq!(element_less(&x, &y, p), !element_less(&y, &x, p));
            }
        }

        #[test]
        fn equal_values_split_by_policy(a in 0u64..1000) {
            let (x, y) = (Element::new(a), Element::new(a));
            proptest::prop_assert!(element_less(&x, &y, TieBreak::Left));
            proptest::prop_assert!(!element_less(&x, &y, TieBreak::Right));
        }
    }
}
