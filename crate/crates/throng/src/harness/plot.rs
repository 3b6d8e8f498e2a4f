//! Plot-data export: per-tick frame files any plotting tool can read.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::trace::TraceRecord;
use crate::world::{locate, GridId, GridPartition, Layer, Vec2};

/// One pedestrian in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub id: u32,
    pub position: Vec2,
    pub velocity: Vec2,
    pub group_hint: u32,
    /// True when any grid containing the pedestrian reported congestion
    /// at this tick; exactly the trace's verdicts, projected.
    pub congested: bool,
}

/// One sampled tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub tick: u64,
    pub sim_time: f64,
    /// Controller spotlight positions, ordered by region key.
    pub spotlights: Vec<Vec2>,
    pub rows: Vec<FrameRow>,
}

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("trace has no header record")]
    MissingHeader,
    #[error("stride must be at least 1")]
    ZeroStride,
    #[error("cannot write frames: {0}")]
    Io(#[from] std::io::Error),
}

/// Builds one frame per tick whose index is a multiple of `stride`.
pub fn frames_from_trace(records: &[TraceRecord], stride: u64) -> Result<Vec<Frame>, PlotError> {
    if stride == 0 {
        return Err(PlotError::ZeroStride);
    }
    let (partition, dt) = match records.iter().find_map(|r| match r {
        TraceRecord::Header { scenario, .. } => Some((scenario.partition(), scenario.dt)),
        _ => None,
    }) {
        Some(found) => found,
        None => return Err(PlotError::MissingHeader),
    };

    let mut pedestrians: BTreeMap<u64, Vec<(u32, Vec2, Vec2, u32)>> = BTreeMap::new();
    let mut verdicts: BTreeMap<u64, BTreeSet<GridId>> = BTreeMap::new();
    let mut spotlights: BTreeMap<u64, Vec<Vec2>> = BTreeMap::new();
    for record in records {
        match record {
            TraceRecord::Pedestrian {
                tick,
                id,
                position,
                velocity,
                group_hint,
                ..
            } => pedestrians
                .entry(*tick)
                .or_default()
                .push((*id, *position, *velocity, *group_hint)),
            TraceRecord::Verdict { tick, grid, .. } => {
                verdicts.entry(*tick).or_default().insert(*grid);
            }
            TraceRecord::Controller { tick, state, .. } => {
                spotlights.entry(*tick).or_default().push(state.position);
            }
            _ => {}
        }
    }

    let empty = BTreeSet::new();
    let frames = pedestrians
        .iter()
        .filter(|(tick, _)| *tick % stride == 0)
        .map(|(&tick, peds)| {
            let hot = verdicts.get(&tick).unwrap_or(&empty);
            let rows = peds
                .iter()
                .map(|&(id, position, velocity, group_hint)| FrameRow {
                    id,
                    position,
                    velocity,
                    group_hint,
                    congested: in_congested_grid(&partition, position, hot),
                })
                .collect();
            Frame {
                tick,
                sim_time: tick as f64 * dt,
                spotlights: spotlights.get(&tick).cloned().unwrap_or_default(),
                rows,
            }
        })
        .collect();
    Ok(frames)
}

fn in_congested_grid(partition: &GridPartition, position: Vec2, hot: &BTreeSet<GridId>) -> bool {
    Layer::ALL
        .into_iter()
        .filter_map(|layer| locate(partition, position, layer).ok())
        .any(|grid| hot.contains(&grid))
}

/// Writes one comma-delimited file per sampled tick and returns the
/// paths. The first line carries tick, time, and spotlight positions as
/// a `#` comment; data rows are one pedestrian each.
pub fn emit_plot_data(
    records: &[TraceRecord],
    stride: u64,
    out_dir: impl AsRef<Path>,
) -> Result<Vec<PathBuf>, PlotError> {
    let out_dir = out_dir.as_ref();
    std::fs::create_dir_all(out_dir)?;
    let frames = frames_from_trace(records, stride)?;
    let mut paths = Vec::with_capacity(frames.len());
    for frame in &frames {
        let path = out_dir.join(format!("frame_{:06}.csv", frame.tick));
        let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
        let spots = frame
            .spotlights
            .iter()
            .map(|s| format!("{:.6}:{:.6}", s.x, s.y))
            .collect::<Vec<_>>()
            .join(";");
        writeln!(file, "# tick={} time={:.4} spotlights={}", frame.tick, frame.sim_time, spots)?;
        writeln!(file, "id,x,y,vx,vy,group,congested")?;
        for row in &frame.rows {
            writeln!(
                file,
                "{},{:.6},{:.6},{:.6},{:.6},{},{}",
                row.id,
                row.position.x,
                row.position.y,
                row.velocity.x,
                row.velocity.y,
                row.group_hint,
                u8::from(row.congested)
            )?;
        }
        file.flush()?;
        paths.push(path);
    }
    Ok(paths)
}
