//! Tagged triangle meshes of the unit square.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::BoundaryTag;

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// 0 for the background, `i` for disk `i`.
    pub triangle_tags: Vec<usize>,
    pub boundary_edges: Vec<([usize; 2], BoundaryTag)>,
    /// Number of disks, i.e. the largest admissible triangle tag.
    pub n_disks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryLengths {
    pub inflow: f64,
    pub dirichlet: f64,
    pub neumann: f64,
}

impl BoundaryLengths {
    pub fn get(&self, tag: BoundaryTag) -> f64 {
        match tag {
            BoundaryTag::Inflow => self.inflow,
            BoundaryTag::Dirichlet => self.dirichlet,
            BoundaryTag::Neumann => self.neumann,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshStatistics {
    pub n_vertices: usize,
    pub n_triangles: usize,
    /// Smallest interior angle in degrees.
    pub min_angle: f64,
    /// Area per subdomain, index 0 = background.
    pub subdomain_areas: Vec<f64>,
    pub boundary_lengths: BoundaryLengths,
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn subdomain_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.n_disks + 1];
        for t in 0..self.n_triangles() {
            areas[self.triangle_tags[t]] += self.triangle_area(t);
        }
        areas
    }

    /// Vertices touching a boundary edge with the given tag, sorted.
    pub fn vertices_on(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_edges
            .iter()
            .filter(|(_, t)| *t == tag)
            .flat_map(|(e, _)| e.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Checks conformity, orientation, tag ranges and boundary tagging.
    pub fn check(&self) -> Result<()> {
        let n = self.n_vertices();
        if self.triangle_tags.len() != self.triangles.len() {
            return Err(Error::InvalidMesh("one tag per triangle required".into()));
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            if self.triangle_tags[t] > self.n_disks {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} has tag {} but the mesh has {} disks",
                    self.triangle_tags[t], self.n_disks
                )));
            }
            if !(self.triangle_area(t) > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} is degenerate or clockwise")));
            }
            for k in 0..3 {
                *edge_count.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default() += 1;
            }
        }
        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for &(e, tag) in &self.boundary_edges {
            if tagged.insert(edge_key(e[0], e[1]), tag).is_some() {
                return Err(Error::InvalidMesh(format!("boundary edge {e:?} tagged twice")));
            }
        }
        for (&e, &count) in &edge_count {
            match count {
                1 if !tagged.contains_key(&e) => {
                    return Err(Error::InvalidMesh(format!("boundary edge {e:?} has no tag")))
                }
                1 => {}
                2 if tagged.contains_key(&e) => {
                    return Err(Error::InvalidMesh(format!("interior edge {e:?} carries a boundary tag")))
                }
                2 => {}
                c => return Err(Error::InvalidMesh(format!("edge {e:?} is shared by {c} triangles"))),
            }
        }
        if let Some(e) = tagged.keys().find(|e| !edge_count.contains_key(e)) {
            return Err(Error::InvalidMesh(format!("tagged edge {e:?} is not a mesh edge")));
        }
        Ok(())
    }

    /// Uniform red refinement: every triangle is split into four through its
    /// edge midpoints. Tags are inherited.
    pub fn refine(&self) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            *midpoints.entry(edge_key(a, b)).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut triangle_tags = Vec::with_capacity(4 * self.triangles.len());
        for (t, &[a, b, c]) in self.triangles.iter().enumerate() {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            triangle_tags.extend_from_slice(&[self.triangle_tags[t]; 4]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for &([a, b], tag) in &self.boundary_edges {
            let m = midpoint(a, b, &mut vertices);
            boundary_edges.push(([a, m], tag));
            boundary_edges.push(([m, b], tag));
        }
        Mesh {
            vertices,
            triangles,
            triangle_tags,
            boundary_edges,
            n_disks: self.n_disks,
        }
    }

    pub fn statistics(&self) -> MeshStatistics {
        let mut min_angle = f64::INFINITY;
        for t in 0..self.n_triangles() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let (o, u, v) = (p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
                let (ux, uy) = (u[0] - o[0], u[1] - o[1]);
                let (vx, vy) = (v[0] - o[0], v[1] - o[1]);
                let angle = (ux * vy - uy * vx).abs().atan2(ux * vx + uy * vy);
                min_angle = min_angle.min(angle.to_degrees());
            }
        }
        let mut lengths = BoundaryLengths {
            inflow: 0.0,
            dirichlet: 0.0,
            neumann: 0.0,
        };
        for &([a, b], tag) in &self.boundary_edges {
            let (p, q) = (self.vertices[a], self.vertices[b]);
            let len = (p[0] - q[0]).hypot(p[1] - q[1]);
            match tag {
                BoundaryTag::Inflow => lengths.inflow += len,
                BoundaryTag::Dirichlet => lengths.dirichlet += len,
                BoundaryTag::Neumann => lengths.neumann += len,
            }
        }
        MeshStatistics {
            n_vertices: self.n_vertices(),
            n_triangles: self.n_triangles(),
            min_angle,
            subdomain_areas: self.subdomain_areas(),
            boundary_lengths: lengths,
        }
    }
}

/// Free-function form of [`Mesh::refine`].
pub fn refine(mesh: &Mesh) -> Mesh {
    mesh.refine()
}

/// Free-function form of [`Mesh::statistics`].
pub fn mesh_statistics(mesh: &Mesh) -> MeshStatistics {
    mesh.statistics()
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Unit square split along the diagonal (0,0)-(1,1).
    pub fn two_triangles() -> Mesh {
        Mesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            triangle_tags: vec![0, 1],
            boundary_edges: vec![
                ([0, 1], BoundaryTag::Neumann),
                ([1, 2], BoundaryTag::Dirichlet),
                ([2, 3], BoundaryTag::Neumann),
                ([3, 0], BoundaryTag::Inflow),
            ],
            n_disks: 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::two_triangles;
    use super::*;

    #[test]
    fn fixture_is_valid() {
        let m = two_triangles();
        m.check().unwrap();
        assert_eq!(m.total_area(), 1.0);
        assert_eq!(m.subdomain_areas(), vec![0.5, 0.5]);
    }

    #[test]
    fn refinement_counts_and_areas() {
        let mut m = two_triangles();
        for level in 1..=3 {
            let r = m.refine();
            r.check().unwrap();
            assert_eq!(r.n_triangles(), 4 * m.n_triangles());
            assert_eq!(r.boundary_edges.len(), 2 * m.boundary_edges.len());
            assert!((r.total_area() - 1.0).abs() < 1e-12, "level {level}");
            for (a, b) in r.subdomain_areas().iter().zip(m.subdomain_areas()) {
                assert!((a - b).abs() < 1e-12);
            }
            m = r;
        }
        let stats = m.statistics();
        assert!((stats.min_angle - 45.0).abs() < 1e-9);
        assert!((stats.boundary_lengths.inflow - 1.0).abs() < 1e-12);
        assert!((stats.boundary_lengths.neumann - 2.0).abs() < 1e-12);
        assert!((stats.boundary_lengths.dirichlet - 1.0).abs() < 1e-12);
    }

    #[test]
    fn check_rejects_defects() {
        let mut m = two_triangles();
        m.triangles[1] = [0, 3, 2];
        assert!(m.check().is_err());

        let mut m = two_triangles();
        m.boundary_edges.pop();
        assert!(m.check().is_err());

        let mut m = two_triangles();
        m.triangle_tags[0] = 2;
        assert!(m.check().is_err());

        let mut m = two_triangles();
        m.boundary_edges.push(([0, 2], BoundaryTag::Neumann));
        assert!(m.check().is_err());
    }

    #[test]
    fn vertices_on_tags() {
        let m = two_triangles();
        assert_eq!(m.vertices_on(BoundaryTag::Dirichlet), vec![1, 2]);
        assert_eq!(m.vertices_on(BoundaryTag::Inflow), vec![0, 3]);
    }

    #[test]
    fn polygon_membership() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon([0.5, 0.5], &square));
        assert!(!point_in_polygon([1.5, 0.5], &square));
        assert!(!point_in_polygon([0.5, -0.1], &square));
    }
}
