//! Legacy ASCII VTK unstructured grids.

use std::path::Path;

use super::{fmt_f64, write_atomic};
use crate::error::{Error, Result};
use crate::mesh::Mesh;

const VTK_TRIANGLE: u8 = 5;

/// Mesh with a `subdomain` cell field and the given vertex fields.
pub fn vtk_string(mesh: &Mesh, point_fields: &[(&str, &[f64])]) -> Result<String> {
    let nv = mesh.n_vertices();
    let nt = mesh.n_triangles();
    for (name, f) in point_fields {
        if f.len() != nv {
            return Err(Error::Dimension(format!("field '{name}' has {} values, mesh has {nv} vertices", f.len())));
        }
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(Error::InvalidArgument(format!("invalid field name '{name}'")));
        }
    }
    let mut s = String::from("# vtk DataFile Version 3.0\nthermoblock\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    s.push_str(&format!("POINTS {nv} double\n"));
    for v in &mesh.vertices {
        s.push_str(&format!("{} {} 0\n", fmt_f64(v[0]), fmt_f64(v[1])));
    }
    s.push_str(&format!("CELLS {nt} {}\n", 4 * nt));
    for t in &mesh.triangles {
        s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    s.push_str(&format!("CELL_TYPES {nt}\n"));
    for _ in 0..nt {
        s.push_str(&format!("{VTK_TRIANGLE}\n"));
    }
    s.push_str(&format!("CELL_DATA {nt}\nSCALARS subdomain int 1\nLOOKUP_TABLE default\n"));
    for tag in &mesh.triangle_tags {
        s.push_str(&format!("{tag}\n"));
    }
    if !point_fields.is_empty() {
        s.push_str(&format!("POINT_DATA {nv}\n"));
        for (name, f) in point_fields {
            s.push_str(&format!("SCALARS {name} double 1\nLOOKUP_TABLE default\n"));
            for v in *f {
                s.push_str(&fmt_f64(*v));
                s.push('\n');
            }
        }
    }
    Ok(s)
}

pub fn write_vtk(path: &Path, mesh: &Mesh, point_fields: &[(&str, &[f64])]) -> Result<()> {
    write_atomic(path, vtk_string(mesh, point_fields)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::fixtures::two_triangles;

    #[test]
    fn layout() {
        let m = two_triangles();
        let s = vtk_string(&m, &[("theta", &[0.0, 1.0, 0.5, 0.25])]).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[4], "POINTS 4 double");
        assert!(s.contains("CELLS 2 8\n3 0 1 2\n3 0 2 3\n"));
        assert!(s.contains("CELL_TYPES 2\n5\n5\n"));
        assert!(s.contains("SCALARS subdomain int 1\nLOOKUP_TABLE default\n0\n1\n"));
        assert!(s.contains("POINT_DATA 4\nSCALARS theta double 1"));
        assert_eq!(lines.last().unwrap().parse::<f64>().unwrap(), 0.25);
        assert!(vtk_string(&m, &[("theta", &[0.0])]).is_err());
        assert!(vtk_string(&m, &[("a b", &[0.0; 4])]).is_err());
    }
}
