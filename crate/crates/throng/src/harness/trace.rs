//! Append-only run traces: newline-delimited JSON, one record per
//! (tick, entity), tick-ordered.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::run::Strategy;
use super::scenario::Scenario;
use crate::control::{CcaState, Instruction, PoliceRequest};
use crate::detection::{Cause, CongestedRegion};
use crate::world::{ActiveDirective, GridId, Vec2};

/// Lifecycle events of a run, keyed by the owning region where one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RunEvent {
    /// A congested region entered control. `humans` counts pedestrians
    /// inside the bounding box at detection; `groups` the conflicting
    /// group count.
    Detected {
        key: GridId,
        humans: u32,
        groups: u32,
    },
    Resolved {
        key: GridId,
        detected_tick: u64,
        resolved_tick: u64,
    },
    PoliceRequest {
        key: GridId,
        request: PoliceRequest,
    },
    /// The tick budget ran out with the region still under control.
    Unresolved {
        key: GridId,
        last_tick: u64,
    },
}

/// One trace line. Grid verdicts are recorded only when positive: a grid
/// absent from a tick's verdict records reported no congestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "kebab-case")]
pub enum TraceRecord {
    /// First record of every trace: the fully-defaulted scenario and the
    /// run options, so a trace alone reproduces its run.
    Header {
        scenario: Box<Scenario>,
        strategy: Strategy,
        control: bool,
        workers: usize,
    },
    Pedestrian {
        tick: u64,
        id: u32,
        position: Vec2,
        velocity: Vec2,
        group_hint: u32,
        instruction: Option<ActiveDirective>,
    },
    Verdict {
        tick: u64,
        grid: GridId,
        cause: Option<Cause>,
    },
    Region {
        tick: u64,
        region: CongestedRegion,
    },
    Instruction {
        tick: u64,
        instruction: Instruction,
    },
    Controller {
        tick: u64,
        key: GridId,
        state: CcaState,
    },
    Event {
        tick: u64,
        event: RunEvent,
    },
    /// Final record: pedestrians that reached an exit, in crossing order.
    Exited {
        tick: u64,
        ids: Vec<u32>,
    },
}

/// Anything a run can stream trace records into. `Send` so the run loop
/// can hold the sink while inside its worker pool.
pub trait TraceSink: Send {
    fn record(&mut self, record: &TraceRecord) -> std::io::Result<()>;
}

/// Collects records in memory.
impl TraceSink for Vec<TraceRecord> {
    fn record(&mut self, record: &TraceRecord) -> std::io::Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Discards every record.
pub struct NullSink;

impl TraceSink for NullSink {
    fn record(&mut self, _record: &TraceRecord) -> std::io::Result<()> {
        Ok(())
    }
}

/// Streams records to a file, one JSON object per line.
pub struct TraceWriter {
    out: BufWriter<File>,
}

impl TraceWriter {
    pub fn create(path: impl AsRef<Path>) -> std::io::Result<TraceWriter> {
        Ok(TraceWriter {
            out: BufWriter::new(File::create(path)?),
        })
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

impl TraceSink for TraceWriter {
    fn record(&mut self, record: &TraceRecord) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n")
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Reads a whole trace file back into memory.
pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRecord>, TraceError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| TraceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| TraceError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}
