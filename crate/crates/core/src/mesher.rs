//! Mesh generation: constrained Delaunay triangulation of the unit square with
//! the disk polygons as internal constraints, followed by Delaunay refinement.

use spade::{AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation};

use crate::error::{Error, Result};
use crate::geometry::{classify_edge, GeometrySpec, BOUNDARY_TOL};
use crate::mesh::{point_in_polygon, Mesh};

/// Minimum angle targeted by the refinement, in degrees.
pub const MIN_ANGLE_DEG: f64 = 20.0;

fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

fn snap(x: f64) -> f64 {
    if x.abs() <= BOUNDARY_TOL {
        0.0
    } else if (x - 1.0).abs() <= BOUNDARY_TOL {
        1.0
    } else {
        x
    }
}

/// Triangulates the domain described by `spec`.
///
/// The target edge length is `spec.mesh_scale`; near the disks the mesh is
/// graded down to the polygon edge length. Output is deterministic for a
/// fixed spec.
pub fn generate_mesh(spec: &GeometrySpec) -> Result<Mesh> {
    spec.validate()?;
    let polygons: Vec<Vec<[f64; 2]>> = spec
        .disks
        .iter()
        .map(|d| d.polygon(spec.circle_segments))
        .collect();

    let mut points = vec![
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.0, 1.0),
        Point2::new(0.0, 1.0),
    ];
    let mut edges: Vec<[usize; 2]> = (0..4).map(|i| [i, (i + 1) % 4]).collect();
    for poly in &polygons {
        let base = points.len();
        points.extend(poly.iter().map(|q| Point2::new(q[0], q[1])));
        let m = poly.len();
        edges.extend((0..m).map(|i| [base + i, base + (i + 1) % m]));
    }
    let initial = points.len();

    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> =
        ConstrainedDelaunayTriangulation::bulk_load_cdt(points, edges)
            .map_err(|e| Error::MeshingGeneric(format!("triangulation failed: {e:?}")))?;

    let h = spec.mesh_scale;
    let max_area = 3f64.sqrt() / 4.0 * h * h;
    let budget = (50.0 / (h * h)) as usize + 50 * initial + 10_000;
    let result = cdt.refine(
        RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(MIN_ANGLE_DEG))
            .with_max_allowed_area(max_area)
            .with_max_additional_vertices(budget),
    );
    if !result.refinement_complete {
        return Err(Error::MeshingGeneric(format!(
            "refinement did not finish within {budget} additional vertices (mesh_scale {h})"
        )));
    }

    let vertices: Vec<[f64; 2]> = cdt
        .vertices()
        .map(|v| {
            let p = v.position();
            [snap(p.x), snap(p.y)]
        })
        .collect();
    let mut triangles = Vec::with_capacity(cdt.num_inner_faces());
    for face in cdt.inner_faces() {
        let [a, b, c] = face.vertices();
        triangles.push([a.fix().index(), b.fix().index(), c.fix().index()]);
    }

    let mut triangle_tags = Vec::with_capacity(triangles.len());
    for tri in &triangles {
        let c = [
            (vertices[tri[0]][0] + vertices[tri[1]][0] + vertices[tri[2]][0]) / 3.0,
            (vertices[tri[0]][1] + vertices[tri[1]][1] + vertices[tri[2]][1]) / 3.0,
        ];
        let tag = spec
            .disks
            .iter()
            .zip(&polygons)
            .position(|(d, poly)| {
                (c[0] - d.center[0]).hypot(c[1] - d.center[1]) < d.radius && point_in_polygon(c, poly)
            })
            .map_or(0, |i| i + 1);
        triangle_tags.push(tag);
    }

    let mut boundary_edges = Vec::new();
    for edge in cdt.undirected_edges() {
        let [a, b] = edge.vertices();
        let (a, b) = (a.fix().index(), b.fix().index());
        if let Some(tag) = classify_edge(vertices[a], vertices[b]) {
            boundary_edges.push(([a, b], tag));
        }
    }
    boundary_edges.sort_unstable_by_key(|(e, _)| *e);

    let mesh = Mesh {
        vertices,
        triangles,
        triangle_tags,
        boundary_edges,
        n_disks: spec.disks.len(),
    };

    let areas = mesh.subdomain_areas();
    for (i, poly) in polygons.iter().enumerate() {
        let expected = polygon_area(poly);
        if (areas[i + 1] - expected).abs() > 1e-9 * expected.max(1e-300) {
            return Err(Error::Meshing {
                disk: i + 1,
                reason: format!(
                    "tagged area {:e} does not match polygon area {:e}; the disk is not resolved",
                    areas[i + 1],
                    expected
                ),
            });
        }
    }
    mesh.check()
        .map_err(|e| Error::MeshingGeneric(format!("generated mesh is inconsistent: {e}")))?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{default_spec, grid_spec, BoundaryTag, Disk};
    use std::f64::consts::PI;

    #[test]
    fn default_mesh_invariants() {
        let mesh = generate_mesh(&default_spec()).unwrap();
        mesh.check().unwrap();
        assert!((mesh.total_area() - 1.0).abs() < 1e-12);
        let stats = mesh.statistics();
        assert!((stats.boundary_lengths.get(BoundaryTag::Inflow) - 1.0).abs() < 1e-12);
        assert!((stats.boundary_lengths.get(BoundaryTag::Neumann) - 2.0).abs() < 1e-12);
        assert!((stats.boundary_lengths.get(BoundaryTag::Dirichlet) - 1.0).abs() < 1e-12);
        assert!(stats.min_angle > 0.0);
        for i in 1..=4 {
            let rel = (stats.subdomain_areas[i] - PI * 0.01).abs() / (PI * 0.01);
            assert!(rel < 0.02, "disk {i}: {rel}");
        }
    }

    #[test]
    fn tags_follow_polygons() {
        let spec = default_spec();
        let mesh = generate_mesh(&spec).unwrap();
        let polys: Vec<_> = spec.disks.iter().map(|d| d.polygon(spec.circle_segments)).collect();
        for t in 0..mesh.n_triangles() {
            let c = mesh.centroid(t);
            let inside: Vec<usize> = (0..polys.len()).filter(|&i| point_in_polygon(c, &polys[i])).collect();
            match mesh.triangle_tags[t] {
                0 => assert!(inside.is_empty()),
                tag => assert_eq!(inside, vec![tag - 1]),
            }
        }
    }

    #[test]
    fn single_disk_grid() {
        let mesh = generate_mesh(&grid_spec(1).unwrap()).unwrap();
        let mut tags = mesh.triangle_tags.clone();
        tags.sort_unstable();
        tags.dedup();
        assert_eq!(tags, vec![0, 1]);
    }

    #[test]
    fn deterministic() {
        let spec = grid_spec(2).unwrap();
        assert_eq!(generate_mesh(&spec).unwrap(), generate_mesh(&spec).unwrap());
    }

    #[test]
    fn finer_scale_gives_more_vertices() {
        let coarse = generate_mesh(&default_spec().with_mesh_scale(0.2)).unwrap();
        let fine = generate_mesh(&default_spec().with_mesh_scale(0.1)).unwrap();
        let finer = generate_mesh(&default_spec().with_mesh_scale(0.05)).unwrap();
        assert!(coarse.n_vertices() <= fine.n_vertices());
        assert!(fine.n_vertices() <= finer.n_vertices());
    }

    #[test]
    fn invalid_geometry_names_disk() {
        let spec = GeometrySpec {
            disks: vec![Disk::new(0.5, 0.5, 0.1), Disk::new(0.95, 0.5, 0.1)],
            ..default_spec()
        };
        match generate_mesh(&spec) {
            Err(Error::Geometry { disk, .. }) => assert_eq!(disk, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
