//! File formats: surface and CMC-input JSON, OBJ meshes and CSV tables.
//!
//! Grids are stored u-major: node `(i, j)` is entry `i·nv + j`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Domain, Grid2, GridGeom};
use crate::nkspace::PointNK;
use crate::quat::ImQuat;
use crate::surface::ParamSurface;
use crate::wente::CMCInput;

/// On-disk form of a sampled surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceFile {
    pub domain: [f64; 4],
    #[serde(default)]
    pub periodic: [bool; 2],
    pub nu: usize,
    pub nv: usize,
    /// `(p.w, p.x, p.y, p.z, q.w, q.x, q.y, q.z)` per node.
    pub nodes: Vec<[f64; 8]>,
}

/// On-disk form of a candidate H-surface solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmcFile {
    pub domain: [f64; 4],
    pub nu: usize,
    pub nv: usize,
    #[serde(default)]
    pub isothermal: bool,
    pub nodes: Vec<[f64; 3]>,
}

fn json_error(e: serde_json::Error) -> Error {
    let msg = e.to_string();
    let msg = msg.split(" at line ").next().unwrap_or(&msg);
    Error::BadInput(format!("line {}, column {}: {msg}", e.line(), e.column()))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::BadInput(format!("{}: {e}", path.display())))
}

fn geom_of(domain: [f64; 4], periodic: [bool; 2], nu: usize, nv: usize, nodes: usize) -> Result<GridGeom> {
    let [u0, u1, v0, v1] = domain;
    if domain.iter().any(|x| !x.is_finite()) {
        return Err(Error::BadInput(format!("domain: non-finite bound in {domain:?}")));
    }
    let geom = GridGeom::new(Domain::new(u0, u1, v0, v1).with_periodic(periodic), nu, nv)
        .map_err(|e| Error::BadInput(format!("domain/nu/nv: {e}")))?;
    if nodes != geom.len() {
        return Err(Error::BadInput(format!("nodes: expected {} = {nu}x{nv} entries, got {nodes}", geom.len())));
    }
    Ok(geom)
}

impl SurfaceFile {
    pub fn from_surface(s: &ParamSurface) -> Self {
        let g = s.geom();
        Self {
            domain: g.domain.as_array(),
            periodic: g.domain.periodic,
            nu: g.nu,
            nv: g.nv,
            nodes: s.nodes().data.iter().map(|x| x.to_array()).collect(),
        }
    }

    /// Validates every node and builds a grid surface.
    pub fn into_surface(self, name: &str) -> Result<ParamSurface> {
        let geom = geom_of(self.domain, self.periodic, self.nu, self.nv, self.nodes.len())?;
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(k, a)| PointNK::from_array(*a).map_err(|e| Error::BadInput(format!("nodes[{k}]: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        ParamSurface::from_nodes(name, geom, nodes)
    }
}

impl CmcFile {
    pub fn from_input(e: &CMCInput) -> Self {
        let g = e.geom();
        Self {
            domain: g.domain.as_array(),
            nu: g.nu,
            nv: g.nv,
            isothermal: e.isothermal,
            nodes: e.points.data.iter().map(|x| x.to_array()).collect(),
        }
    }

    pub fn into_input(self) -> Result<CMCInput> {
        let geom = geom_of(self.domain, [false, false], self.nu, self.nv, self.nodes.len())?;
        CMCInput::new(geom, self.isothermal, self.nodes.into_iter().map(ImQuat::from_array).collect())
    }
}

pub fn parse_surface(text: &str, name: &str) -> Result<ParamSurface> {
    serde_json::from_str::<SurfaceFile>(text).map_err(json_error)?.into_surface(name)
}

pub fn read_surface(path: &Path) -> Result<ParamSurface> {
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("surface");
    parse_surface(&read_text(path)?, name)
}

pub fn write_surface(path: &Path, s: &ParamSurface) -> Result<()> {
    let text = serde_json::to_string(&SurfaceFile::from_surface(s)).map_err(|e| Error::BadInput(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn parse_cmc(text: &str) -> Result<CMCInput> {
    serde_json::from_str::<CmcFile>(text).map_err(json_error)?.into_input()
}

pub fn read_cmc(path: &Path) -> Result<CMCInput> {
    parse_cmc(&read_text(path)?)
}

pub fn write_cmc(path: &Path, e: &CMCInput) -> Result<()> {
    let text = serde_json::to_string(&CmcFile::from_input(e)).map_err(|e| Error::BadInput(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

/// Wavefront OBJ: one vertex per node, each grid quad split into two
/// triangles. Indices are 1-based.
pub fn write_obj<W: Write>(mut w: W, points: &Grid2<ImQuat>) -> Result<()> {
    let g = &points.geom;
    for x in &points.data {
        writeln!(w, "v {} {} {}", x.x, x.y, x.z)?;
    }
    let id = |i: usize, j: usize| g.index(i, j) + 1;
    for i in 0..g.nu - 1 {
        for j in 0..g.nv - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            writeln!(w, "f {a} {b} {c}")?;
            writeln!(w, "f {a} {c} {d}")?;
        }
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::BadInput(format!("{other:?}")),
    }
}

/// CSV with header `u,v,x,y,z`.
pub fn write_points_csv<W: Write>(w: W, points: &Grid2<ImQuat>) -> Result<()> {
    let g = &points.geom;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["u", "v", "x", "y", "z"]).map_err(csv_error)?;
    for i in 0..g.nu {
        for j in 0..g.nv {
            let x = points.at(i, j);
            out.serialize((g.u(i), g.v(j), x.x, x.y, x.z)).map_err(csv_error)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// CSV with header `u,v,<names...>`, one row per node.
pub fn write_fields_csv<W: Write>(w: W, names: &[&str], fields: &[&Grid2<f64>]) -> Result<()> {
    let Some(first) = fields.first() else {
        return Err(Error::BadInput("no fields to write".into()));
    };
    if names.len() != fields.len() || fields.iter().any(|f| f.geom != first.geom) {
        return Err(Error::BadInput("field names and grids do not match".into()));
    }
    let g = &first.geom;
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<&str> = ["u", "v"].into_iter().chain(names.iter().copied()).collect();
    out.write_record(&header).map_err(csv_error)?;
    for i in 0..g.nu {
        for j in 0..g.nv {
            let mut row = vec![g.u(i), g.v(j)];
            row.extend(fields.iter().map(|f| f.at(i, j)));
            out.serialize(row).map_err(csv_error)?;
        }
    }
    out.flush()?;
    Ok(())
}
