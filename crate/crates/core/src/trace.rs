//! Trace records and their line-delimited JSON serialization.
//!
//! One evaluation per line, fields always in this order:
//!
//! | field              | type                  | notes                                  |
//! |--------------------|-----------------------|----------------------------------------|
//! | `candidate_id`     | integer               | dispatch order, unique                 |
//! | `begin_ts`         | number                | simulated seconds                      |
//! | `end_ts`           | number                | `> begin_ts`, nondecreasing in file    |
//! | `worker_id`        | integer               |                                        |
//! | `sequence`         | array of integers     | one choice per slot                    |
//! | `quality`          | number in `[0, 1]`    |                                        |
//! | `stage`            | `1` or `2`            | random seeding / evolution             |
//! | `donor_id`         | integer or `null`     | transfer source                        |
//! | `donor_prefix_len` | integer or `null`     | slots shared with the donor            |
//! | `mutation_index`   | integer or `null`     | debug traces only                      |
//! | `sampled_ids`      | array or `null`       | debug traces only, ascending           |
//!
//! Floats carry 9 significant digits in positional notation. Values produced
//! by the simulator are already rounded to that precision (see
//! [`canonical_float`]), which makes `read(write(t)) == t` hold exactly.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::space::ArchSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub candidate_id: u64,
    pub begin_ts: f64,
    pub end_ts: f64,
    pub worker_id: u32,
    pub sequence: ArchSequence,
    pub quality: f64,
    pub stage: u8,
    pub donor_id: Option<u64>,
    pub donor_prefix_len: Option<u32>,
    pub mutation_index: Option<u32>,
    pub sampled_ids: Option<Vec<u64>>,
}

/// Rounds to the 9 significant digits the trace format stores.
pub fn canonical_float(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// Positional rendering with exactly 9 significant digits.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..]
        .parse()
        .expect("exponent parses");
    let value: f64 = sci.parse().expect("formatted float parses");
    let decimals = (8 - exp).max(0) as usize;
    format!("{value:.decimals$}")
}

fn check_event(ev: &TraceEvent) -> std::result::Result<(), String> {
    for (name, v) in [
        ("begin_ts", ev.begin_ts),
        ("end_ts", ev.end_ts),
        ("quality", ev.quality),
    ] {
        if !v.is_finite() {
            return Err(format!("field `{name}` is not finite"));
        }
    }
    if ev.end_ts <= ev.begin_ts {
        return Err(format!(
            "candidate {}: end_ts {} is not after begin_ts {}",
            ev.candidate_id, ev.end_ts, ev.begin_ts
        ));
    }
    if !(0.0..=1.0).contains(&ev.quality) {
        return Err(format!(
            "candidate {}: quality {} outside [0, 1]",
            ev.candidate_id, ev.quality
        ));
    }
    if ev.stage != 1 && ev.stage != 2 {
        return Err(format!(
            "candidate {}: stage must be 1 or 2",
            ev.candidate_id
        ));
    }
    if ev.donor_id.is_some() != ev.donor_prefix_len.is_some() {
        return Err(format!(
            "candidate {}: donor_id and donor_prefix_len must be both set or both null",
            ev.candidate_id
        ));
    }
    Ok(())
}

/// Checks per-event invariants, end_ts ordering and id uniqueness.
pub fn validate_events(events: &[TraceEvent]) -> Result<()> {
    let mut seen = HashSet::with_capacity(events.len());
    let mut last_end = f64::NEG_INFINITY;
    for ev in events {
        check_event(ev).map_err(Error::TraceInvariant)?;
        if ev.end_ts < last_end {
            return Err(Error::TraceInvariant(format!(
                "candidate {} is out of end_ts order",
                ev.candidate_id
            )));
        }
        last_end = ev.end_ts;
        if !seen.insert(ev.candidate_id) {
            return Err(Error::TraceInvariant(format!(
                "duplicate candidate_id {}",
                ev.candidate_id
            )));
        }
    }
    Ok(())
}

fn push_opt_u64(out: &mut String, v: Option<u64>) {
    match v {
        Some(v) => write!(out, "{v}").unwrap(),
        None => out.push_str("null"),
    }
}

fn push_list<T: std::fmt::Display>(out: &mut String, items: &[T]) {
    out.push('[');
    for (i, x) in items.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{x}").unwrap();
    }
    out.push(']');
}

fn encode_line(ev: &TraceEvent, out: &mut String) {
    write!(
        out,
        "{{\"candidate_id\":{},\"begin_ts\":{},\"end_ts\":{},\"worker_id\":{},\"sequence\":",
        ev.candidate_id,
        format_float(ev.begin_ts),
        format_float(ev.end_ts),
        ev.worker_id
    )
    .unwrap();
    push_list(out, ev.sequence.choices());
    write!(
        out,
        ",\"quality\":{},\"stage\":{},\"donor_id\":",
        format_float(ev.quality),
        ev.stage
    )
    .unwrap();
    push_opt_u64(out, ev.donor_id);
    out.push_str(",\"donor_prefix_len\":");
    push_opt_u64(out, ev.donor_prefix_len.map(u64::from));
    out.push_str(",\"mutation_index\":");
    push_opt_u64(out, ev.mutation_index.map(u64::from));
    out.push_str(",\"sampled_ids\":");
    match &ev.sampled_ids {
        Some(ids) => push_list(out, ids),
        None => out.push_str("null"),
    }
    out.push_str("}\n");
}

/// Serializes a validated trace to its file representation.
pub fn encode_trace(events: &[TraceEvent]) -> Result<String> {
    validate_events(events)?;
    let mut out = String::with_capacity(events.len() * 160);
    for ev in events {
        encode_line(ev, &mut out);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    candidate_id: u64,
    begin_ts: f64,
    end_ts: f64,
    worker_id: u32,
    sequence: Vec<u32>,
    quality: f64,
    stage: u8,
    donor_id: Option<u64>,
    donor_prefix_len: Option<u32>,
    mutation_index: Option<u32>,
    sampled_ids: Option<Vec<u64>>,
}

impl From<RawEvent> for TraceEvent {
    fn from(r: RawEvent) -> Self {
        TraceEvent {
            candidate_id: r.candidate_id,
            begin_ts: r.begin_ts,
            end_ts: r.end_ts,
            worker_id: r.worker_id,
            sequence: ArchSequence::new(r.sequence),
            quality: r.quality,
            stage: r.stage,
            donor_id: r.donor_id,
            donor_prefix_len: r.donor_prefix_len,
            mutation_index: r.mutation_index,
            sampled_ids: r.sampled_ids,
        }
    }
}

/// Parses trace text; `origin` labels error messages.
pub fn decode_trace(text: &str, origin: &Path) -> Result<Vec<TraceEvent>> {
    let fail = |line: usize, message: String| Error::TraceFormat {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut events = Vec::new();
    let mut seen = HashSet::new();
    let mut last_end = f64::NEG_INFINITY;
    let mut rest = text;
    let mut lineno = 0;
    while !rest.is_empty() {
        lineno += 1;
        let Some(nl) = rest.find('\n') else {
            return Err(fail(lineno, "truncated final line (no newline)".into()));
        };
        let line = &rest[..nl];
        rest = &rest[nl + 1..];
        let raw: RawEvent = serde_json::from_str(line)
            .map_err(|e| fail(lineno, format!("malformed record: {e}")))?;
        let ev = TraceEvent::from(raw);
        check_event(&ev).map_err(|m| fail(lineno, m))?;
        if ev.end_ts < last_end {
            return Err(fail(
                lineno,
                "end_ts decreases; trace must be sorted by end_ts".into(),
            ));
        }
        last_end = ev.end_ts;
        if !seen.insert(ev.candidate_id) {
            return Err(fail(
                lineno,
                format!("duplicate candidate_id {}", ev.candidate_id),
            ));
        }
        events.push(ev);
    }
    Ok(events)
}

/// Writes the whole trace with a single flush.
pub fn write_trace(events: &[TraceEvent], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = encode_trace(events)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceEvent>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    decode_trace(&text, path)
}
