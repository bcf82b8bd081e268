//! File output: CSV tables, JSON event logs and binary value tiles.
//!
//! Floats are written in shortest round-trip form, so identical inputs give
//! byte-identical files.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PhaseState;
use crate::orbits::Continuation;
use crate::portrait::{CellVerdict, Cloud, GridSpec, Portrait, RegionMap};
use crate::simulator::{ResolvedEvent, ResolvedKind, Trajectory};

/// Magic bytes opening a tile file.
pub const TILE_MAGIC: [u8; 4] = *b"VIBT";
pub const TILE_VERSION: u32 = 1;

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

fn write_rows<W: Write, R: Serialize>(w: W, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn kind_label(kind: ResolvedKind) -> &'static str {
    match kind {
        ResolvedKind::Impact(crate::simulator::Wall::Left) => "impact_left",
        ResolvedKind::Impact(crate::simulator::Wall::Right) => "impact_right",
        ResolvedKind::Turning => "turning",
        ResolvedKind::StickStart => "stick_start",
        ResolvedKind::StickRelease => "stick_release",
        ResolvedKind::Grazing => "grazing",
        ResolvedKind::Horizon => "horizon",
    }
}

#[derive(Serialize)]
struct EventRecord {
    kind: &'static str,
    time: f64,
    x: f64,
    v_before: f64,
    v_after: f64,
    force: f64,
}

impl From<&ResolvedEvent> for EventRecord {
    fn from(e: &ResolvedEvent) -> Self {
        EventRecord {
            kind: kind_label(e.kind),
            time: e.time,
            x: e.state_after.x,
            v_before: e.state_before.v,
            v_after: e.state_after.v,
            force: e.force_at_event,
        }
    }
}

#[derive(Serialize)]
struct TrajectoryLog {
    initial: PhaseState,
    final_state: PhaseState,
    events: Vec<EventRecord>,
}

/// Event log of a trajectory as pretty-printed JSON.
pub fn write_trajectory_json<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    let log = TrajectoryLog {
        initial: traj.initial,
        final_state: traj.final_state,
        events: traj.events.iter().map(EventRecord::from).collect(),
    };
    serde_json::to_writer_pretty(&mut w, &log)?;
    writeln!(w)?;
    Ok(())
}

/// Columns `t,x,v`.
pub fn write_samples_csv<W: Write>(w: W, samples: &[PhaseState]) -> Result<()> {
    write_rows(w, samples.iter().map(|s| SampleRow { t: s.t, x: s.x, v: s.v }))
}

#[derive(Serialize)]
struct SampleRow {
    t: f64,
    x: f64,
    v: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StrobeRow {
    pub n: usize,
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub impacts: usize,
    pub turnings: usize,
    pub sticks: usize,
    pub det: f64,
}

/// One row per period: columns `n,t,x,v,impacts,turnings,sticks,det`.
pub fn write_strobe_csv<W: Write>(w: W, rows: &[StrobeRow]) -> Result<()> {
    write_rows(w, rows)
}

#[derive(Serialize)]
struct RegionRow {
    index: usize,
    x: f64,
    v: f64,
    class: &'static str,
    det: f64,
}

/// Columns `index,x,v,class,det`.
pub fn write_regions_csv<W: Write>(w: W, map: &RegionMap) -> Result<()> {
    let g = &map.grid;
    write_rows(
        w,
        (0..g.len()).map(|i| {
            let (x, v) = g.center(i);
            RegionRow { index: i, x, v, class: map.classes[i].label(), det: map.dets[i] }
        }),
    )
}

#[derive(Serialize)]
struct VerdictRow {
    index: usize,
    x: f64,
    v: f64,
    verdict: &'static str,
    attractor: Option<usize>,
    det: f64,
    iterations_used: usize,
}

/// Columns `index,x,v,verdict,attractor,det,iterations_used`; `det` is the
/// one-period determinant at the last iteration.
pub fn write_portrait_csv<W: Write>(w: W, portrait: &Portrait) -> Result<()> {
    let g = &portrait.grid;
    write_rows(
        w,
        portrait.cells.iter().enumerate().map(|(i, c)| {
            let (x, v) = g.center(i);
            let attractor = match c.verdict {
                CellVerdict::AttractedToPeriodicOrbit { id } => Some(id),
                _ => None,
            };
            VerdictRow {
                index: i,
                x,
                v,
                verdict: c.verdict.label(),
                attractor,
                det: c.diagnostics.det_history.last().copied().unwrap_or(f64::NAN),
                iterations_used: c.diagnostics.iterations_used,
            }
        }),
    )
}

#[derive(Serialize)]
struct CloudRow {
    seed: usize,
    iteration: usize,
    x: f64,
    v: f64,
}

/// Scatter points, columns `seed,iteration,x,v`.
pub fn write_cloud_csv<W: Write>(w: W, cloud: &Cloud) -> Result<()> {
    write_rows(w, cloud.points.iter().map(|p| CloudRow { seed: p.seed, iteration: p.iteration, x: p.x, v: p.v }))
}

#[derive(Serialize)]
struct BranchRow {
    f: f64,
    x0: f64,
    v0: f64,
    trace: f64,
    det: f64,
    kind: &'static str,
}

/// Columns `f,x0,v0,trace,det,kind`; a detected fold adds a final row of kind
/// `fold`.
pub fn write_branch_csv<W: Write>(w: W, branch: &Continuation) -> Result<()> {
    let mut rows: Vec<BranchRow> = branch
        .points
        .iter()
        .map(|p| BranchRow { f: p.f, x0: p.state.0, v0: p.state.1, trace: p.trace, det: p.det, kind: p.kind.label() })
        .collect();
    if let Some(fold) = &branch.fold {
        rows.push(BranchRow { f: fold.f_crit, x0: fold.state.0, v0: fold.state.1, trace: 2.0, det: 1.0, kind: "fold" });
    }
    write_rows(w, rows)
}

/// Binary tile of one value per cell.
///
/// Layout, little endian: magic `VIBT`, `u32` version, `u32` nx, `u32` nv,
/// four `f64` (x_lo, x_hi, v_lo, v_hi), then `nx * nv` `f64` values row-major
/// with `v` as the row.
pub fn write_tile<W: Write>(mut w: W, grid: &GridSpec, values: &[f64]) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::ContractViolation(format!("tile needs {} values, got {}", grid.len(), values.len())));
    }
    w.write_all(&TILE_MAGIC)?;
    for n in [TILE_VERSION, grid.nx as u32, grid.nv as u32] {
        w.write_all(&n.to_le_bytes())?;
    }
    for x in [grid.x_range.0, grid.x_range.1, grid.v_range.0, grid.v_range.1].iter().chain(values) {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub nx: usize,
    pub nv: usize,
    pub x_range: (f64, f64),
    pub v_range: (f64, f64),
    pub values: Vec<f64>,
}

pub fn read_tile<R: Read>(mut r: R) -> Result<Tile> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != TILE_MAGIC {
        return Err(Error::Config("not a tile file".into()));
    }
    let mut u = [0u8; 4];
    let mut next_u32 = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut u)?;
        Ok(u32::from_le_bytes(u))
    };
    let version = next_u32(&mut r)?;
    if version != TILE_VERSION {
        return Err(Error::Config(format!("unsupported tile version {version}")));
    }
    let nx = next_u32(&mut r)? as usize;
    let nv = next_u32(&mut r)? as usize;
    let mut d = [0u8; 8];
    let mut next_f64 = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut d)?;
        Ok(f64::from_le_bytes(d))
    };
    let x_range = (next_f64(&mut r)?, next_f64(&mut r)?);
    let v_range = (next_f64(&mut r)?, next_f64(&mut r)?);
    let values = (0..nx * nv).map(|_| next_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    Ok(Tile { nx, nv, x_range, v_range, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OscillatorParams;
    use crate::portrait::classify_regions;
    use crate::simulator::simulate;

    #[test]
    fn tile_round_trip() {
        let g = GridSpec::new((-1.0, 1.0), (-2.0, 2.0), 3, 2);
        let values = vec![0.0, 1.0, f64::NAN, -0.5, 1e-300, 7.0];
        let mut buf = Vec::new();
        write_tile(&mut buf, &g, &values).unwrap();
        assert_eq!(&buf[..4], b"VIBT");
        assert_eq!(buf.len(), 16 + 32 + 48);
        let t = read_tile(&buf[..]).unwrap();
        assert_eq!((t.nx, t.nv, t.x_range, t.v_range), (3, 2, (-1.0, 1.0), (-2.0, 2.0)));
        assert!(t.values[2].is_nan());
        assert_eq!(t.values[5], 7.0);
        assert!(write_tile(Vec::new(), &g, &values[..5]).is_err());
    }

    #[test]
    fn region_csv_is_byte_stable() {
        let p = OscillatorParams::uniform(1.0, 0.3, 1.0, 0.0, 2.0).validate().unwrap();
        let g = GridSpec::new((0.0, 2.0), (-1.0, 1.0), 5, 4);
        let render = || {
            let mut buf = Vec::new();
            write_regions_csv(&mut buf, &classify_regions(&p, &g).unwrap()).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = render();
        assert_eq!(a, render());
        assert!(a.starts_with("index,x,v,class,det\n"));
        assert_eq!(a.lines().count(), 21);
    }

    #[test]
    fn trajectory_log() {
        let p = OscillatorParams::uniform(1.0, 0.0, 1.0, -1.0, 0.2).validate().unwrap();
        let tr = simulate(&p, PhaseState::new(0.0, 0.0, 0.0), 2.0).unwrap();
        let mut buf = Vec::new();
        write_trajectory_json(&mut buf, &tr).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let kinds: Vec<&str> = v["events"].as_array().unwrap().iter().map(|e| e["kind"].as_str().unwrap()).collect();
        assert!(kinds.contains(&"impact_right"), "{kinds:?}");
        let mut csv = Vec::new();
        write_samples_csv(&mut csv, &tr.sample(0.5)).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 6);
    }
}
