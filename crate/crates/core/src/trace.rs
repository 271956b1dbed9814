//! Line-delimited JSON rendering of cycle traces.
//!
//! One object per cycle with the fields `cycle`, `root_valid`, `root_txn`,
//! `value`, `index` and, for verbose traces, `cells`: a map from cell id to
//! its registers at the start of the cycle.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::Serialize;

use crate::model::{CellSnapshot, CycleTrace};

#[derive(Serialize)]
#[serde(untagged)]
enum CellRecord {
    Hourglass {
        d0: Option<u64>,
        d1: Option<u64>,
        v0: bool,
        v1: bool,
    },
    Registered {
        d_out: Option<u64>,
        v_out: bool,
        e_out: bool,
    },
}

impl From<&CellSnapshot> for CellRecord {
    fn from(s: &CellSnapshot) -> Self {
        match s {
            CellSnapshot::Hourglass(r) => CellRecord::Hourglass {
                d0: r.d0.map(|e| e.value),
                d1: r.d1.map(|e| e.value),
                v0: r.v0,
                v1: r.v1,
            },
            CellSnapshot::Registered(n) => CellRecord::Registered {
                d_out: n.d_out.map(|e| e.value),
                v_out: n.v_out,
                e_out: n.e_out,
            },
        }
    }
}

#[derive(Serialize)]
struct Record {
    cycle: u64,
    root_valid: bool,
    root_txn: bool,
    value: Option<u64>,
    index: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cells: Option<BTreeMap<usize, CellRecord>>,
}

pub fn record_line(rec: &CycleTrace) -> String {
    let record = Record {
        cycle: rec.cycle,
        root_valid: rec.root_valid,
        root_txn: rec.root_transaction,
        value: rec.emitted.map(|e| e.value),
        index: rec.emitted.and_then(|e| e.index),
        cells: rec
            .cells
            .as_ref()
            .map(|cells| cells.iter().map(CellRecord::from).enumerate().collect()),
    };
    serde_json::to_string(&record).expect("trace records always serialize")
}

pub fn write_jsonl<W: Write>(mut out: W, trace: &[CycleTrace]) -> io::Result<()> {
    for rec in trace {
        writeln!(out, "{}", record_line(rec))?;
    }
    Ok(())
}

pub fn render_jsonl(trace: &[CycleTrace]) -> String {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, trace).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CellRegisters, Element};

    #[test]
    fn record_fields() {
        let rec = CycleTrace {
            cycle: 2,
            cells: Some(vec![CellSnapshot::Hourglass(CellRegisters {
                d0: Some(Element::new(3)),
                d1: None,
                v0: true,
                v1: false,
            })]),
            root_valid: true,
            sink_ready: true,
            root_transaction: true,
            emitted: Some(Element::with_index(3, 1)),
        };
        assert_eq!(
            record_line(&rec),
            r#"{"cycle":2,"root_valid":true,"root_txn":true,"value":3,"index":1,"cells":{"0":{"d0":3,"d1":null,"v0":true,"v1":false}}}"#
        );
        let quiet = CycleTrace {
            cells: None,
            emitted: None,
            root_transaction: false,
            ..rec
        };
        assert_eq!(
            record_line(&quiet),
            r#"{"cycle":2,"root_valid":true,"root_txn":false,"value":null,"index":null}"#
        );
    }
}
