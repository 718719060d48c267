//! Computational domain: the unit square with circular inclusions.
//!
//! Subdomain 0 is the background, subdomain `i` (1-based) is the interior of
//! disk `i`. The square boundary is split into an inflow edge (`x = 0`), a
//! Dirichlet edge (`x = 1`) and two Neumann edges (`y = 0`, `y = 1`).

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Tolerance used to decide whether a coordinate lies on a side of the square.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Inflow,
    Dirichlet,
    Neumann,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 3] = [BoundaryTag::Inflow, BoundaryTag::Dirichlet, BoundaryTag::Neumann];

    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Inflow => "inflow",
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Neumann => "neumann",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "inflow" => Some(BoundaryTag::Inflow),
            "dirichlet" => Some(BoundaryTag::Dirichlet),
            "neumann" => Some(BoundaryTag::Neumann),
            _ => None,
        }
    }

    /// Physical line number used in the `.geo` output.
    pub fn physical_id(self) -> usize {
        match self {
            BoundaryTag::Inflow => 1,
            BoundaryTag::Dirichlet => 2,
            BoundaryTag::Neumann => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Maps a side of the unit square onto its boundary tag.
pub fn boundary_rule(side: Side) -> BoundaryTag {
    match side {
        Side::Left => BoundaryTag::Inflow,
        Side::Right => BoundaryTag::Dirichlet,
        Side::Bottom | Side::Top => BoundaryTag::Neumann,
    }
}

fn on_side(p: [f64; 2], side: Side) -> bool {
    match side {
        Side::Left => p[0].abs() <= BOUNDARY_TOL,
        Side::Right => (p[0] - 1.0).abs() <= BOUNDARY_TOL,
        Side::Bottom => p[1].abs() <= BOUNDARY_TOL,
        Side::Top => (p[1] - 1.0).abs() <= BOUNDARY_TOL,
    }
}

/// Tag of a straight boundary edge `p`-`q`, or `None` if the edge does not lie
/// on the square boundary.
pub fn classify_edge(p: [f64; 2], q: [f64; 2]) -> Option<BoundaryTag> {
    [Side::Left, Side::Right, Side::Bottom, Side::Top]
        .into_iter()
        .find(|&s| on_side(p, s) && on_side(q, s))
        .map(boundary_rule)
}

/// Ownership of a boundary vertex: Dirichlet wins over inflow, inflow over
/// Neumann. Interior points return `None`.
pub fn vertex_tag(p: [f64; 2]) -> Option<BoundaryTag> {
    if on_side(p, Side::Right) {
        Some(BoundaryTag::Dirichlet)
    } else if on_side(p, Side::Left) {
        Some(BoundaryTag::Inflow)
    } else if on_side(p, Side::Bottom) || on_side(p, Side::Top) {
        Some(BoundaryTag::Neumann)
    } else {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disk {
    pub fn new(cx: f64, cy: f64, radius: f64) -> Self {
        Disk {
            center: [cx, cy],
            radius,
        }
    }

    /// Regular inscribed polygon, counterclockwise, first vertex at angle 0.
    pub fn polygon(&self, segments: usize) -> Vec<[f64; 2]> {
        (0..segments)
            .map(|m| {
                let theta = 2.0 * std::f64::consts::PI * m as f64 / segments as f64;
                [
                    self.center[0] + self.radius * theta.cos(),
                    self.center[1] + self.radius * theta.sin(),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub disks: Vec<Disk>,
    #[serde(default = "default_circle_segments")]
    pub circle_segments: usize,
    #[serde(default = "default_mesh_scale")]
    pub mesh_scale: f64,
}

fn default_circle_segments() -> usize {
    64
}

fn default_mesh_scale() -> f64 {
    0.1
}

impl Default for GeometrySpec {
    fn default() -> Self {
        default_spec()
    }
}

/// The four-disk layout of the original benchmark.
pub fn default_spec() -> GeometrySpec {
    GeometrySpec {
        disks: vec![
            Disk::new(0.3, 0.3, 0.1),
            Disk::new(0.7, 0.3, 0.1),
            Disk::new(0.7, 0.7, 0.1),
            Disk::new(0.3, 0.7, 0.1),
        ],
        circle_segments: default_circle_segments(),
        mesh_scale: default_mesh_scale(),
    }
}

/// `k`×`k` disks of radius `1/(4k)` centered on the cells of a uniform grid.
///
/// Disks are numbered row by row starting at the bottom left, so parameter
/// `j*k + i` belongs to column `i` of row `j`. This layout is a convention of
/// this crate; `grid_spec(2)` is *not* the original four-disk layout.
pub fn grid_spec(k: usize) -> Result<GeometrySpec> {
    if k == 0 {
        return Err(Error::InvalidArgument("grid size must be at least 1".into()));
    }
    let kf = k as f64;
    let radius = 1.0 / (4.0 * kf);
    let mut disks = Vec::with_capacity(k * k);
    for j in 1..=k {
        for i in 1..=k {
            disks.push(Disk::new(
                (2 * i - 1) as f64 / (2.0 * kf),
                (2 * j - 1) as f64 / (2.0 * kf),
                radius,
            ));
        }
    }
    Ok(GeometrySpec {
        disks,
        ..default_spec()
    })
}

impl GeometrySpec {
    /// Number of parameters, one per disk.
    pub fn n_params(&self) -> usize {
        self.disks.len()
    }

    pub fn with_mesh_scale(mut self, mesh_scale: f64) -> Self {
        self.mesh_scale = mesh_scale;
        self
    }

    pub fn with_circle_segments(mut self, segments: usize) -> Self {
        self.circle_segments = segments;
        self
    }

    /// Checks containment and pairwise disjointness. Disk indices in errors
    /// are 1-based, matching subdomain numbering.
    pub fn validate(&self) -> Result<()> {
        if self.circle_segments < 8 {
            return Err(Error::InvalidArgument(format!(
                "circle_segments must be at least 8, got {}",
                self.circle_segments
            )));
        }
        if !(self.mesh_scale.is_finite() && self.mesh_scale > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mesh_scale must be positive, got {}",
                self.mesh_scale
            )));
        }
        for (i, d) in self.disks.iter().enumerate() {
            let [cx, cy] = d.center;
            if !(d.radius.is_finite() && d.radius > 0.0) {
                return Err(Error::Geometry {
                    disk: i + 1,
                    reason: format!("radius must be positive, got {}", d.radius),
                });
            }
            let clearance = cx.min(cy).min(1.0 - cx).min(1.0 - cy);
            if !(clearance > d.radius) {
                return Err(Error::Geometry {
                    disk: i + 1,
                    reason: format!(
                        "disk at ({cx}, {cy}) with radius {} is not strictly inside the unit square",
                        d.radius
                    ),
                });
            }
        }
        for a in 0..self.disks.len() {
            for b in a + 1..self.disks.len() {
                let (da, db) = (&self.disks[a], &self.disks[b]);
                let dist = (da.center[0] - db.center[0]).hypot(da.center[1] - db.center[1]);
                if !(dist > da.radius + db.radius) {
                    return Err(Error::Geometry {
                        disk: b + 1,
                        reason: format!("overlaps or touches disk {}", a + 1),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: GeometrySpec =
            toml::from_str(text).map_err(|e| Error::Format(format!("geometry config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("geometry spec is always serializable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// SHA-256 of the canonical configuration text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }
}

/// Renders the geometry as a gmsh `.geo` script.
///
/// Disks are drawn with four quarter-circle arcs. Physical surface 0 is the
/// background, physical surface `i` is disk `i`; physical lines 1, 2 and 3
/// hold the inflow, Dirichlet and Neumann edges.
pub fn emit_geo_text(spec: &GeometrySpec) -> String {
    let mut s = String::new();
    let p = spec.disks.len();
    let _ = writeln!(s, "// thermal block geometry: unit square with {p} circular inclusion(s)");
    let _ = writeln!(s, "lc = {:?};", spec.mesh_scale);
    let _ = writeln!(s);
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    for (i, c) in corners.iter().enumerate() {
        let _ = writeln!(s, "Point({}) = {{{:?}, {:?}, 0, lc}};", i + 1, c[0], c[1]);
    }
    // bottom, right, top, left
    for i in 0..4 {
        let _ = writeln!(s, "Line({}) = {{{}, {}}};", i + 1, i + 1, (i + 1) % 4 + 1);
    }
    let _ = writeln!(s, "Curve Loop(1) = {{1, 2, 3, 4}};");

    let mut next_point = 5;
    let mut next_curve = 5;
    let mut disk_loops = Vec::with_capacity(p);
    for (i, d) in spec.disks.iter().enumerate() {
        let _ = writeln!(s);
        let _ = writeln!(s, "// disk {}", i + 1);
        let [cx, cy] = d.center;
        let r = d.radius;
        let center = next_point;
        let _ = writeln!(s, "Point({center}) = {{{cx:?}, {cy:?}, 0, lc}};");
        let rim = [[cx + r, cy], [cx, cy + r], [cx - r, cy], [cx, cy - r]];
        for (m, q) in rim.iter().enumerate() {
            let _ = writeln!(s, "Point({}) = {{{:?}, {:?}, 0, lc}};", center + 1 + m, q[0], q[1]);
        }
        let arcs: Vec<usize> = (0..4).map(|m| next_curve + m).collect();
        for m in 0..4 {
            let _ = writeln!(
                s,
                "Circle({}) = {{{}, {}, {}}};",
                arcs[m],
                center + 1 + m,
                center,
                center + 1 + (m + 1) % 4
            );
        }
        let loop_id = i + 2;
        let _ = writeln!(
            s,
            "Curve Loop({loop_id}) = {{{}, {}, {}, {}}};",
            arcs[0], arcs[1], arcs[2], arcs[3]
        );
        disk_loops.push(loop_id);
        next_point += 5;
        next_curve += 4;
    }

    let _ = writeln!(s);
    let holes: String = disk_loops.iter().map(|l| format!(", {l}")).collect();
    let _ = writeln!(s, "Plane Surface(1) = {{1{holes}}};");
    for (i, l) in disk_loops.iter().enumerate() {
        let _ = writeln!(s, "Plane Surface({}) = {{{l}}};", i + 2);
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Physical Surface(0) = {{1}};");
    for i in 0..p {
        let _ = writeln!(s, "Physical Surface({}) = {{{}}};", i + 1, i + 2);
    }
    let _ = writeln!(s, "Physical Line({}) = {{4}}; // inflow", BoundaryTag::Inflow.physical_id());
    let _ = writeln!(s, "Physical Line({}) = {{2}}; // dirichlet", BoundaryTag::Dirichlet.physical_id());
    let _ = writeln!(s, "Physical Line({}) = {{1, 3}}; // neumann", BoundaryTag::Neumann.physical_id());
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_layout() {
        let spec = default_spec();
        assert_eq!(spec.disks.len(), 4);
        assert_eq!(spec.disks[0], Disk::new(0.3, 0.3, 0.1));
        assert_eq!(spec.disks[1].center, [0.7, 0.3]);
        assert_eq!(spec.disks[2].center, [0.7, 0.7]);
        assert_eq!(spec.disks[3].center, [0.3, 0.7]);
        assert_eq!(spec.mesh_scale, 0.1);
        assert_eq!(spec.n_params(), 4);
        spec.validate().unwrap();
    }

    #[test]
    fn boundary_sides() {
        assert_eq!(boundary_rule(Side::Right), BoundaryTag::Dirichlet);
        assert_eq!(boundary_rule(Side::Left), BoundaryTag::Inflow);
        assert_eq!(boundary_rule(Side::Top), BoundaryTag::Neumann);
        assert_eq!(classify_edge([1.0, 0.2], [1.0, 0.3]), Some(BoundaryTag::Dirichlet));
        assert_eq!(classify_edge([0.0, 0.0], [0.0, 0.1]), Some(BoundaryTag::Inflow));
        assert_eq!(classify_edge([0.0, 0.0], [0.1, 0.0]), Some(BoundaryTag::Neumann));
        assert_eq!(classify_edge([0.0, 0.0], [0.1, 0.1]), None);
    }

    #[test]
    fn corner_ownership() {
        assert_eq!(vertex_tag([1.0, 0.0]), Some(BoundaryTag::Dirichlet));
        assert_eq!(vertex_tag([1.0, 1.0]), Some(BoundaryTag::Dirichlet));
        assert_eq!(vertex_tag([0.0, 0.0]), Some(BoundaryTag::Inflow));
        assert_eq!(vertex_tag([0.0, 1.0]), Some(BoundaryTag::Inflow));
        assert_eq!(vertex_tag([0.5, 1.0]), Some(BoundaryTag::Neumann));
        assert_eq!(vertex_tag([0.5, 0.5]), None);
    }

    #[test]
    fn grid_layouts() {
        let g1 = grid_spec(1).unwrap();
        assert_eq!(g1.disks, vec![Disk::new(0.5, 0.5, 0.25)]);
        let g2 = grid_spec(2).unwrap();
        assert_eq!(g2.disks[0], Disk::new(0.25, 0.25, 0.125));
        assert_ne!(g2.disks, default_spec().disks);
        assert_eq!(grid_spec(3).unwrap().disks.len(), 9);
        for k in 1..=6 {
            grid_spec(k).unwrap().validate().unwrap();
        }
        assert!(matches!(grid_spec(0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn rejects_bad_disks() {
        let mut spec = default_spec();
        spec.disks.push(Disk::new(0.35, 0.3, 0.1));
        assert!(matches!(spec.validate(), Err(Error::Geometry { disk: 5, .. })));

        let outside = GeometrySpec {
            disks: vec![Disk::new(0.05, 0.5, 0.1)],
            ..default_spec()
        };
        assert!(matches!(outside.validate(), Err(Error::Geometry { disk: 1, .. })));

        let touching = GeometrySpec {
            disks: vec![Disk::new(0.3, 0.5, 0.1), Disk::new(0.5, 0.5, 0.1)],
            ..default_spec()
        };
        assert!(touching.validate().is_err());

        assert!(default_spec().with_circle_segments(7).validate().is_err());
        assert!(default_spec().with_mesh_scale(0.0).validate().is_err());
    }

    #[test]
    fn geo_structure() {
        let text = emit_geo_text(&default_spec());
        assert_eq!(text.matches("Physical Surface").count(), 5);
        assert_eq!(text.matches("Physical Line").count(), 3);
        let g1 = emit_geo_text(&grid_spec(1).unwrap());
        assert_eq!(g1.matches("Physical Surface").count(), 2);
        assert_eq!(text, emit_geo_text(&default_spec()));
    }

    #[test]
    fn config_round_trip() {
        let spec = grid_spec(3).unwrap().with_mesh_scale(0.05);
        let text = spec.to_toml_string();
        assert_eq!(GeometrySpec::from_toml_str(&text).unwrap(), spec);
        assert_eq!(spec.hash(), GeometrySpec::from_toml_str(&text).unwrap().hash());
        assert_ne!(spec.hash(), default_spec().hash());
    }

    #[test]
    fn config_defaults_optional_keys() {
        let spec = GeometrySpec::from_toml_str(
            "disks = [{ center = [0.5, 0.5], radius = 0.2 }]\n",
        )
        .unwrap();
        assert_eq!(spec.circle_segments, 64);
        assert_eq!(spec.mesh_scale, 0.1);
        assert!(GeometrySpec::from_toml_str("disks = []\nfoo = 1\n").is_err());
    }

    #[test]
    fn polygon_is_inscribed() {
        let d = Disk::new(0.3, 0.7, 0.1);
        for q in d.polygon(64) {
            let r = (q[0] - 0.3).hypot(q[1] - 0.7);
            assert!((r - 0.1).abs() < 1e-15);
        }
    }
}
