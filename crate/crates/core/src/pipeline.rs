//! Geometry to model in one call, with provenance for exports.

use crate::error::Result;
use crate::fem::{assemble, AssemblyOutput};
use crate::geometry::GeometrySpec;
use crate::io::Provenance;
use crate::mesh::Mesh;
use crate::mesher::generate_mesh;
use crate::model::{AffineLtiModel, ParameterVariant};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone)]
pub struct Benchmark {
    pub spec: GeometrySpec,
    pub refine: usize,
    pub mesh: Mesh,
    pub assembly: AssemblyOutput,
}

/// Meshes `spec`, applies `refine` uniform refinements and assembles.
pub fn build(spec: &GeometrySpec, refine: usize) -> Result<Benchmark> {
    let mut mesh = generate_mesh(spec)?;
    for _ in 0..refine {
        mesh = mesh.refine();
    }
    let assembly = assemble(&mesh)?;
    Ok(Benchmark {
        spec: spec.clone(),
        refine,
        mesh,
        assembly,
    })
}

impl Benchmark {
    pub fn provenance(&self) -> Provenance {
        Provenance {
            tool_version: TOOL_VERSION.into(),
            spec_hash: self.spec.hash(),
            mesh_scale: self.spec.mesh_scale,
            circle_segments: self.spec.circle_segments,
            refine: self.refine,
        }
    }

    pub fn model(&self, variant: ParameterVariant) -> Result<AffineLtiModel> {
        AffineLtiModel::new(self.assembly.clone(), variant)
    }
}
