//! Binary trajectory files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic     8 bytes  "LFLOWMAP"
//! version   u32      1
//! ndim      u32      1..=3
//! per axis  u64 nodes, f64 origin, f64 spacing, u8 periodic, 7 bytes padding
//! flags     u8 convention (0 identity-at-zero, 1 generalized), u8 has_velocities, 6 bytes padding
//! ntimes    u64, then ntimes f64 sample times
//! positions nodes × ntimes × 3 f64, node-major then time then component
//! velocities same layout, present when has_velocities = 1
//! ```
//!
//! A JSON sidecar (`<file>.json`) repeats the header and carries the map name,
//! reference density, integration step and step-halving error estimate.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{FlowMap, LabelConvention, ReferenceDensity, SampledTrajectories};
use crate::field::{Axis, LabelGrid};
use crate::{Error, Result, Vec3};

const MAGIC: &[u8; 8] = b"LFLOWMAP";
const VERSION: u32 = 1;

/// Contents of the JSON sidecar.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FlowMapHeader {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub convention: LabelConvention,
    pub grid: LabelGrid,
    pub times: Vec<f64>,
    pub has_velocities: bool,
    pub reference_density: Option<f64>,
    pub dt: Option<f64>,
    pub step_halving_error: Option<f64>,
    pub time_scale: f64,
    pub layout: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Write a sampled map (tabulate analytic maps first with [`FlowMap::sample`]).
pub fn write_flowmap(m: &FlowMap, path: &Path) -> Result<()> {
    let tr = m
        .trajectories()
        .ok_or_else(|| Error::Unavailable("file export of an analytic map; sample it first".into()))?;
    let grid = m.labels();
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.ndim() as u32).to_le_bytes())?;
    for ax in grid.axes() {
        w.write_all(&(ax.nodes as u64).to_le_bytes())?;
        w.write_all(&ax.origin.to_le_bytes())?;
        w.write_all(&ax.spacing.to_le_bytes())?;
        w.write_all(&[ax.periodic as u8, 0, 0, 0, 0, 0, 0, 0])?;
    }
    let conv = match m.convention() {
        LabelConvention::IdentityAtZero => 0u8,
        LabelConvention::Generalized => 1u8,
    };
    w.write_all(&[conv, tr.velocities.is_some() as u8, 0, 0, 0, 0, 0, 0])?;
    w.write_all(&(tr.times.len() as u64).to_le_bytes())?;
    for t in &tr.times {
        w.write_all(&t.to_le_bytes())?;
    }
    let mut put = |vs: &[Vec3]| -> Result<()> {
        for v in vs {
            for c in v.iter() {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        Ok(())
    };
    put(&tr.positions)?;
    if let Some(v) = &tr.velocities {
        put(v)?;
    }
    w.flush()?;
    let header = FlowMapHeader {
        format: "lflowmap".into(),
        version: VERSION,
        name: m.name().to_string(),
        convention: m.convention(),
        grid: grid.clone(),
        times: tr.times.clone(),
        has_velocities: tr.velocities.is_some(),
        reference_density: match m.reference_density() {
            ReferenceDensity::Constant(r) => Some(*r),
            ReferenceDensity::Field(_) => None,
        },
        dt: tr.dt,
        step_halving_error: tr.step_halving_error,
        time_scale: m.time_scale(),
        layout: "little-endian f64; node-major, then time, then x,y,z".into(),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&header)?)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.at + n > self.buf.len() {
            return Err(Error::Format("file ends early".into()));
        }
        let s = &self.buf[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn vecs(&mut self, n: usize) -> Result<Vec<Vec3>> {
        (0..n)
            .map(|_| Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?)))
            .collect()
    }
}

/// Read a map written by [`write_flowmap`]. The result answers queries at stored nodes and times only.
pub fn read_flowmap(path: &Path) -> Result<FlowMap> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    let mut c = Cursor { buf: &buf, at: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::Format("not a flow map file".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let ndim = c.u32()? as usize;
    if !(1..=3).contains(&ndim) {
        return Err(Error::Format(format!("bad axis count {ndim}")));
    }
    let mut axes = Vec::new();
    for _ in 0..ndim {
        let nodes = c.u64()? as usize;
        let origin = c.f64()?;
        let spacing = c.f64()?;
        let periodic = c.take(8)?[0] == 1;
        axes.push(Axis {
            nodes,
            origin,
            spacing,
            periodic,
        });
    }
    let grid = LabelGrid::new(axes)?;
    let flags = c.take(8)?;
    let convention = match flags[0] {
        0 => LabelConvention::IdentityAtZero,
        1 => LabelConvention::Generalized,
        v => return Err(Error::Format(format!("bad convention flag {v}"))),
    };
    let has_vel = flags[1] == 1;
    let nt = c.u64()? as usize;
    let times = (0..nt).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
    let count = grid.node_count() * nt;
    let positions = c.vecs(count)?;
    let velocities = if has_vel { Some(c.vecs(count)?) } else { None };
    if c.at != buf.len() {
        return Err(Error::Format("trailing bytes after trajectory data".into()));
    }
    let side = sidecar_path(path);
    let header: Option<FlowMapHeader> = if side.exists() {
        Some(serde_json::from_str(&fs::read_to_string(side)?)?)
    } else {
        None
    };
    if let Some(h) = &header {
        if h.grid != grid || h.times != times {
            return Err(Error::Format("sidecar does not match the binary header".into()));
        }
    }
    let table = SampledTrajectories {
        times,
        positions,
        velocities,
        dt: header.as_ref().and_then(|h| h.dt),
        step_halving_error: header.as_ref().and_then(|h| h.step_halving_error),
    };
    let name = header.as_ref().map_or("loaded".to_string(), |h| h.name.clone());
    let mut m = FlowMap::sampled(name, grid, table, None)?.with_convention(convention);
    if let Some(h) = header {
        m = m.with_time_scale(h.time_scale);
        if let Some(r) = h.reference_density {
            m = m.with_reference_density(ReferenceDensity::Constant(r));
        }
    }
    Ok(m)
}
