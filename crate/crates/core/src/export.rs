//! Mesh file formats: OBJ, binary STL and ASCII PLY, with readers for the
//! same formats.
//!
//! Coordinates are written with Rust's shortest round-trip float formatting,
//! so OBJ and PLY reload bit-exactly; STL stores `f32`.

use crate::assemble::{FaceSource, LatticeMesh};
use crate::error::{Error, Result};
use crate::geom::{triangle_normal, Point};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    StlBinary,
    Ply,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MeshFormat::Obj => "obj",
            MeshFormat::StlBinary => "stl",
            MeshFormat::Ply => "ply",
        }
    }

    /// Format implied by a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Some(MeshFormat::Obj),
            "stl" => Some(MeshFormat::StlBinary),
            "ply" => Some(MeshFormat::Ply),
            _ => None,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "stl" | "stl_binary" | "stl-binary" => Ok(MeshFormat::StlBinary),
            "ply" => Ok(MeshFormat::Ply),
            other => Err(Error::InvalidArgument(format!("unknown mesh format '{other}'"))),
        }
    }
}

/// Named per-vertex scalar attribute for PLY output.
pub struct VertexScalar<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

pub fn export<W: Write>(mesh: &LatticeMesh, format: MeshFormat, sink: W) -> Result<()> {
    if mesh.triangles.is_empty() {
        return Err(Error::NothingToExport);
    }
    match format {
        MeshFormat::Obj => write_obj(mesh, sink),
        MeshFormat::StlBinary => write_stl(&mesh.positions, &mesh.triangles, sink),
        MeshFormat::Ply => write_ply(&mesh.positions, &mesh.triangles, Some(&mesh.provenance), &[], sink),
    }
}

fn write_obj<W: Write>(mesh: &LatticeMesh, sink: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(sink);
    let c = &mesh.census;
    writeln!(out, "# lattice mesh")?;
    writeln!(
        out,
        "# census cylindrical={} subdivision={} caps={} curves={}",
        c.cylindrical_faces, c.subdivision_faces, c.planar_caps, c.boundary_curves
    )?;
    for p in &mesh.positions {
        writeln!(out, "v {} {} {}", p.x, p.y, p.z)?;
    }
    let mut current = None;
    for (t, src) in mesh.triangles.iter().zip(&mesh.provenance) {
        if current != Some(*src) {
            writeln!(out, "g {}", src.label())?;
            current = Some(*src);
        }
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_stl<W: Write>(positions: &[Point], triangles: &[[u32; 3]], sink: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(sink);
    let mut header = [0u8; 80];
    let label = b"binary STL lattice mesh";
    header[..label.len()].copy_from_slice(label);
    out.write_all(&header)?;
    let count = u32::try_from(triangles.len())
        .map_err(|_| Error::InvalidArgument("too many triangles for STL".into()))?;
    out.write_all(&count.to_le_bytes())?;
    for t in triangles {
        let [a, b, c] = t.map(|i| positions[i as usize]);
        let n = triangle_normal(&a, &b, &c);
        let n = if n.norm() > 0.0 { n.normalize() } else { n };
        for v in [n.x, n.y, n.z] {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
        for p in [a, b, c] {
            for v in [p.x, p.y, p.z] {
                out.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        out.write_all(&0u16.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// ASCII PLY with optional face provenance and per-vertex scalars. Missing
/// scalar values are written as `nan`.
pub fn write_ply<W: Write>(
    positions: &[Point],
    triangles: &[[u32; 3]],
    provenance: Option<&[FaceSource]>,
    scalars: &[VertexScalar],
    sink: W,
) -> Result<()> {
    for s in scalars {
        if s.values.len() != positions.len() {
            return Err(Error::InvalidArgument(format!(
                "scalar '{}' has {} values for {} vertices",
                s.name,
                s.values.len(),
                positions.len()
            )));
        }
    }
    let mut out = std::io::BufWriter::new(sink);
    writeln!(out, "ply\nformat ascii 1.0")?;
    writeln!(out, "element vertex {}", positions.len())?;
    writeln!(out, "property double x\nproperty double y\nproperty double z")?;
    for s in scalars {
        writeln!(out, "property double {}", s.name)?;
    }
    writeln!(out, "element face {}", triangles.len())?;
    writeln!(out, "property list uchar uint vertex_indices")?;
    if provenance.is_some() {
        writeln!(out, "property uchar source_kind\nproperty uint source_id")?;
    }
    writeln!(out, "end_header")?;
    for (i, p) in positions.iter().enumerate() {
        write!(out, "{} {} {}", p.x, p.y, p.z)?;
        for s in scalars {
            write!(out, " {}", s.values[i])?;
        }
        writeln!(out)?;
    }
    for (k, t) in triangles.iter().enumerate() {
        write!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        if let Some(src) = provenance {
            write!(out, " {} {}", src[k].kind_code(), src[k].id())?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Triangle mesh read back from a file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LoadedMesh {
    pub positions: Vec<Point>,
    pub triangles: Vec<[u32; 3]>,
}

pub fn read_mesh<R: Read>(source: R, format: MeshFormat) -> Result<LoadedMesh> {
    match format {
        MeshFormat::Obj => read_obj(source),
        MeshFormat::StlBinary => read_stl(source),
        MeshFormat::Ply => read_ply(source),
    }
}

fn parse_err(what: impl Into<String>) -> Error {
    Error::Parse(what.into())
}

fn parse_f64(s: Option<&str>, line: usize) -> Result<f64> {
    s.and_then(|x| x.parse().ok())
        .ok_or_else(|| parse_err(format!("line {line}: bad number")))
}

pub fn read_obj<R: Read>(source: R) -> Result<LoadedMesh> {
    let mut mesh = LoadedMesh::default();
    for (k, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let x = parse_f64(it.next(), k + 1)?;
                let y = parse_f64(it.next(), k + 1)?;
                let z = parse_f64(it.next(), k + 1)?;
                mesh.positions.push(Point::new(x, y, z));
            }
            Some("f") => {
                let idx: Vec<u32> = it
                    .map(|tok| {
                        tok.split('/')
                            .next()
                            .and_then(|s| s.parse::<u32>().ok())
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                            .ok_or_else(|| parse_err(format!("line {}: bad face index", k + 1)))
                    })
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(parse_err(format!("line {}: face needs 3 vertices", k + 1)));
                }
                for j in 1..idx.len() - 1 {
                    mesh.triangles.push([idx[0], idx[j], idx[j + 1]]);
                }
            }
            _ => {}
        }
    }
    validate_indices(&mesh)?;
    Ok(mesh)
}

/// Reads binary STL, merging vertices with identical coordinates.
pub fn read_stl<R: Read>(mut source: R) -> Result<LoadedMesh> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    if bytes.len() < 84 {
        return Err(parse_err("STL file is shorter than its header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() != 84 + 50 * count {
        return Err(parse_err(format!(
            "STL declares {count} triangles but holds {} bytes",
            bytes.len()
        )));
    }
    let mut mesh = LoadedMesh::default();
    let mut index: HashMap<[u32; 3], u32> = HashMap::new();
    for t in 0..count {
        let base = 84 + 50 * t + 12;
        let mut tri = [0u32; 3];
        for (v, slot) in tri.iter_mut().enumerate() {
            let mut bits = [0u32; 3];
            let mut xyz = [0.0f64; 3];
            for c in 0..3 {
                let o = base + 12 * v + 4 * c;
                let f = f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
                bits[c] = f.to_bits();
                xyz[c] = f as f64;
            }
            *slot = *index.entry(bits).or_insert_with(|| {
                mesh.positions.push(Point::new(xyz[0], xyz[1], xyz[2]));
                mesh.positions.len() as u32 - 1
            });
        }
        mesh.triangles.push(tri);
    }
    Ok(mesh)
}

/// Reads the ASCII PLY layout written by [`write_ply`] (extra vertex and
/// face properties are skipped).
pub fn read_ply<R: Read>(source: R) -> Result<LoadedMesh> {
    let mut lines = BufReader::new(source).lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| parse_err("unexpected end of PLY file"))?
            .map_err(Error::from)
    };
    if next()?.trim() != "ply" {
        return Err(parse_err("missing PLY magic"));
    }
    let (mut nv, mut nf) = (0usize, 0usize);
    loop {
        let line = next()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts.as_slice() {
            ["format", fmt, ..] if *fmt != "ascii" => {
                return Err(parse_err("only ASCII PLY is supported"))
            }
            ["element", "vertex", n] => nv = n.parse().map_err(|_| parse_err("bad vertex count"))?,
            ["element", "face", n] => nf = n.parse().map_err(|_| parse_err("bad face count"))?,
            ["end_header"] => break,
            _ => {}
        }
    }
    let mut mesh = LoadedMesh::default();
    for k in 0..nv {
        let line = next()?;
        let mut it = line.split_whitespace();
        let x = parse_f64(it.next(), k + 1)?;
        let y = parse_f64(it.next(), k + 1)?;
        let z = parse_f64(it.next(), k + 1)?;
        mesh.positions.push(Point::new(x, y, z));
    }
    for _ in 0..nf {
        let line = next()?;
        let v: Vec<u32> = line
            .split_whitespace()
            .map(|s| s.parse::<u32>().map_err(|_| parse_err("bad face entry")))
            .collect::<Result<_>>()?;
        if v.first() != Some(&3) || v.len() < 4 {
            return Err(parse_err("only triangle faces are supported"));
        }
        mesh.triangles.push([v[1], v[2], v[3]]);
    }
    validate_indices(&mesh)?;
    Ok(mesh)
}

fn validate_indices(mesh: &LoadedMesh) -> Result<()> {
    let n = mesh.positions.len() as u32;
    if mesh.triangles.iter().flatten().any(|&i| i >= n) {
        return Err(parse_err("face index out of range"));
    }
    Ok(())
}
