//! JSON Lines dataset format.
//!
//! One UTF-8 object per LF-terminated line:
//!
//! ```text
//! {"id":"PS-n2-l1-0","family":"PS","n":2,
//!  "gates":[{"k":"RX","q":[0],"a":1.2345},{"k":"CNOT","q":[0,1]}],
//!  "labels":{"stab":1,"m2":0.31,"m2_src":"product","cls_sre":null},
//!  "meta":{"r_m":0.52}}
//! ```
//!
//! Floats are written in shortest round-trip form, so parsing a serialised
//! record reproduces every angle and label bit for bit.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::circuit::{validate, Circuit, CircuitMeta, Family, Gate, GateKind, TrotterParams};
use crate::dataset::DatasetRecord;
use crate::error::{Error, Result};
use crate::sre::{SreMethod, SreResult};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateJson {
    k: String,
    q: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
}

#[derive(Serialize, Deserialize, Default)]
struct LabelsJson {
    stab: Option<u8>,
    m2: Option<f64>,
    m2_src: Option<SreMethod>,
    cls_sre: Option<u8>,
}

#[derive(Serialize, Deserialize, Default)]
struct MetaJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clifford_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    trotter: Option<TrotterParams>,
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    id: String,
    family: Family,
    n: usize,
    gates: Vec<GateJson>,
    #[serde(default)]
    labels: LabelsJson,
    #[serde(default)]
    meta: MetaJson,
}

fn to_json(record: &DatasetRecord) -> RecordJson {
    let c = &record.circuit;
    RecordJson {
        id: c.meta.id.clone(),
        family: c.meta.family,
        n: c.n_qubits,
        gates: c
            .gates
            .iter()
            .map(|g| GateJson { k: g.kind.name().to_string(), q: g.qubits.clone(), a: g.angle })
            .collect(),
        labels: LabelsJson {
            stab: record.stab_label,
            m2: record.m2.map(|r| r.m2),
            m2_src: record.m2.map(|r| r.method),
            cls_sre: record.cls_sre_label,
        },
        meta: MetaJson {
            parent_id: c.meta.parent_id.clone(),
            clifford_depth: c.meta.clifford_depth,
            r_m: c.meta.r_m,
            trotter: c.meta.trotter,
        },
    }
}

fn from_json(raw: RecordJson, line: usize) -> Result<DatasetRecord> {
    let err = |message: String| Error::Parse { line, message };
    let mut gates = Vec::with_capacity(raw.gates.len());
    for (i, g) in raw.gates.into_iter().enumerate() {
        let kind: GateKind = g
            .k
            .parse()
            .ok()
            .filter(|k| GateKind::CIRCUIT_KINDS.contains(k))
            .ok_or_else(|| err(format!("field gates[{i}].k: unsupported gate kind `{}`", g.k)))?;
        gates.push(Gate { kind, qubits: g.q, angle: g.a });
    }
    let meta = CircuitMeta {
        id: raw.id,
        family: raw.family,
        parent_id: raw.meta.parent_id,
        clifford_depth: raw.meta.clifford_depth,
        r_m: raw.meta.r_m,
        trotter: raw.meta.trotter,
    };
    let circuit = Circuit::new(raw.n, gates, meta);
    if let Some(v) = validate(&circuit).into_iter().next() {
        return Err(err(format!("invalid circuit: {v}")));
    }
    let m2 = match (raw.labels.m2, raw.labels.m2_src) {
        (Some(m2), Some(method)) => Some(SreResult { m2, method, n_qubits: raw.n }),
        (Some(_), None) => return Err(err("field labels.m2_src: missing for a present m2".into())),
        (None, _) => None,
    };
    for (name, value) in [("stab", raw.labels.stab), ("cls_sre", raw.labels.cls_sre)] {
        if value.is_some_and(|v| v > 1) {
            return Err(err(format!("field labels.{name}: must be 0, 1 or null")));
        }
    }
    Ok(DatasetRecord { circuit, stab_label: raw.labels.stab, m2, cls_sre_label: raw.labels.cls_sre })
}

pub fn write_record<W: Write>(mut out: W, record: &DatasetRecord) -> Result<()> {
    serde_json::to_writer(&mut out, &to_json(record))?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn write_records<W: Write>(mut out: W, records: &[DatasetRecord]) -> Result<()> {
    for r in records {
        write_record(&mut out, r)?;
    }
    Ok(())
}

pub fn serialize(records: &[DatasetRecord]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    Ok(buf)
}

pub fn parse_line(line: &str, line_no: usize) -> Result<DatasetRecord> {
    let raw: RecordJson = serde_json::from_str(line)
        .map_err(|e| Error::Parse { line: line_no, message: e.to_string() })?;
    from_json(raw, line_no)
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<DatasetRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(parse_line(&line, i + 1)?);
    }
    Ok(out)
}

pub fn parse(bytes: &[u8]) -> Result<Vec<DatasetRecord>> {
    read_records(bytes)
}
