//! Versioned plain-text mesh format.
//!
//! ```text
//! thermoblock-mesh 1
//! disks <D>
//! vertices <N>
//! <x> <y>
//! triangles <T>
//! <a> <b> <c> <tag>
//! edges <M>
//! <a> <b> <inflow|dirichlet|neumann>
//! ```
//! Indices are 0-based.

use std::path::Path;

use super::{fmt_f64, read_text, write_atomic};
use crate::error::{Error, Result};
use crate::geometry::BoundaryTag;
use crate::mesh::Mesh;

pub const MESH_MAGIC: &str = "thermoblock-mesh";
pub const MESH_VERSION: u32 = 1;

pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = format!("{MESH_MAGIC} {MESH_VERSION}\ndisks {}\n", mesh.n_disks);
    s.push_str(&format!("vertices {}\n", mesh.vertices.len()));
    for v in &mesh.vertices {
        s.push_str(&format!("{} {}\n", fmt_f64(v[0]), fmt_f64(v[1])));
    }
    s.push_str(&format!("triangles {}\n", mesh.triangles.len()));
    for (t, tag) in mesh.triangles.iter().zip(&mesh.triangle_tags) {
        s.push_str(&format!("{} {} {} {tag}\n", t[0], t[1], t[2]));
    }
    s.push_str(&format!("edges {}\n", mesh.boundary_edges.len()));
    for (e, tag) in &mesh.boundary_edges {
        s.push_str(&format!("{} {} {}\n", e[0], e[1], tag.name()));
    }
    s
}

pub fn write_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    write_atomic(path, mesh_to_string(mesh).as_bytes())
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&read_text(path)?, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    line: usize,
}

impl<'a> Lines<'a> {
    fn fields(&mut self) -> Result<Vec<&'a str>> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let l = l.trim();
            if !l.is_empty() {
                return Ok(l.split_whitespace().collect());
            }
        }
        Err(Error::parse(self.path, self.line + 1, "unexpected end of file"))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.path, self.line, msg)
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let f = self.fields()?;
        if f.len() != 2 || f[0] != name {
            return Err(self.err(format!("expected '{name} <count>'")));
        }
        f[1].parse().map_err(|_| self.err(format!("bad count '{}'", f[1])))
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("bad number '{s}'")))
    }
}

pub fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
        line: 0,
    };
    let head = lines.fields()?;
    if head.len() != 2 || head[0] != MESH_MAGIC {
        return Err(lines.err("not a thermoblock mesh file"));
    }
    if lines.num::<u32>(head[1])? != MESH_VERSION {
        return Err(lines.err(format!("unsupported mesh version {}", head[1])));
    }
    let n_disks = lines.section("disks")?;
    let nv = lines.section("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let f = lines.fields()?;
        if f.len() != 2 {
            return Err(lines.err("vertex needs x y"));
        }
        let (x, y): (f64, f64) = (lines.num(f[0])?, lines.num(f[1])?);
        if !(x.is_finite() && y.is_finite()) {
            return Err(lines.err("non-finite coordinate"));
        }
        vertices.push([x, y]);
    }
    let nt = lines.section("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut triangle_tags = Vec::with_capacity(nt);
    for _ in 0..nt {
        let f = lines.fields()?;
        if f.len() != 4 {
            return Err(lines.err("triangle needs three vertices and a tag"));
        }
        let mut t = [0usize; 3];
        for (k, slot) in t.iter_mut().enumerate() {
            *slot = lines.num(f[k])?;
            if *slot >= nv {
                return Err(lines.err(format!("vertex index {slot} out of range")));
            }
        }
        triangles.push(t);
        triangle_tags.push(lines.num(f[3])?);
    }
    let ne = lines.section("edges")?;
    let mut boundary_edges = Vec::with_capacity(ne);
    for _ in 0..ne {
        let f = lines.fields()?;
        if f.len() != 3 {
            return Err(lines.err("edge needs two vertices and a tag"));
        }
        let (a, b): (usize, usize) = (lines.num(f[0])?, lines.num(f[1])?);
        if a >= nv || b >= nv {
            return Err(lines.err("edge vertex out of range"));
        }
        let tag = BoundaryTag::from_name(f[2]).ok_or_else(|| lines.err(format!("unknown boundary tag '{}'", f[2])))?;
        boundary_edges.push(([a, b], tag));
    }
    let mesh = Mesh {
        vertices,
        triangles,
        triangle_tags,
        boundary_edges,
        n_disks,
    };
    mesh.check()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::two_triangles;

    #[test]
    fn round_trip() {
        let m = two_triangles().refine();
        let back = parse_mesh(&mesh_to_string(&m), Path::new("m")).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.triangle_tags, m.triangle_tags);
        assert_eq!(back.boundary_edges, m.boundary_edges);
        assert_eq!(back.n_disks, m.n_disks);
    }

    #[test]
    fn rejects_bad_files() {
        let good = mesh_to_string(&two_triangles());
        let p = Path::new("m");
        assert!(parse_mesh(&good.replace("thermoblock-mesh 1", "thermoblock-mesh 2"), p).is_err());
        assert!(parse_mesh(&good.replace("dirichlet", "robin"), p).is_err());
        assert!(parse_mesh(&good.replace("triangles 2", "triangles 3"), p).is_err());
        assert!(parse_mesh("hello", p).is_err());
    }
}
