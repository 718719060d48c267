//! Benchmark manifest: a small TOML file naming the exported matrices.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::matrix_market::{read_matrix_market, write_matrix_market};
use super::mesh_text::write_mesh;
use super::{read_text, write_atomic};
use crate::error::{Error, Result};
use crate::fem::AssemblyOutput;
use crate::mesh::Mesh;
use crate::model::{AffineLtiModel, ParameterVariant};
use crate::sparse::SparseMatrix;

pub const MANIFEST_VERSION: &str = "thermoblock-benchmark/1";
pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixFiles {
    #[serde(rename = "E")]
    pub e: String,
    /// `A_0 … A_p`.
    #[serde(rename = "A")]
    pub a: Vec<String>,
    #[serde(rename = "B")]
    pub b: String,
    #[serde(rename = "C")]
    pub c: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub tool_version: String,
    pub spec_hash: String,
    pub mesh_scale: f64,
    pub circle_segments: usize,
    pub refine: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkManifest {
    pub version: String,
    pub n: usize,
    pub p: usize,
    pub k: usize,
    /// Per-component bounds of the raw parameter.
    pub parameter_box: Vec<[f64; 2]>,
    /// 0-based; when absent, inferred from the matrix structure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dirichlet_dofs: Option<Vec<usize>>,
    pub files: MatrixFiles,
    pub variant: ParameterVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl BenchmarkManifest {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let m: BenchmarkManifest = toml::from_str(text).map_err(|e| Error::Format(format!("manifest: {e}")))?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::Format(format!(
                "unsupported manifest version '{}' (expected '{MANIFEST_VERSION}')",
                m.version
            )));
        }
        Ok(m)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest is always serializable")
    }

    /// Files named by the manifest, resolved against `base`, in the order
    /// `E, A_0 … A_p, B, C`.
    pub fn matrix_paths(&self, base: &Path) -> Vec<(String, PathBuf)> {
        let mut v = vec![("E".to_string(), base.join(&self.files.e))];
        for (i, a) in self.files.a.iter().enumerate() {
            v.push((format!("A{i}"), base.join(a)));
        }
        v.push(("B".into(), base.join(&self.files.b)));
        v.push(("C".into(), base.join(&self.files.c)));
        v
    }
}

pub fn load_manifest(path: &Path) -> Result<BenchmarkManifest> {
    BenchmarkManifest::from_toml_str(&read_text(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn save_manifest(path: &Path, manifest: &BenchmarkManifest) -> Result<()> {
    write_atomic(path, manifest.to_toml_string().as_bytes())
}

pub fn manifest_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Writes `E.mtx`, `A0.mtx … Ap.mtx`, `B.mtx`, `C.mtx`, optionally
/// `mesh.txt`, and `manifest.toml` into `dir`.
pub fn export_benchmark(
    dir: &Path,
    model: &AffineLtiModel,
    mesh: Option<&Mesh>,
    provenance: Option<Provenance>,
) -> Result<BenchmarkManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let asm = &model.assembly;
    let files = MatrixFiles {
        e: "E.mtx".into(),
        a: (0..asm.a.len()).map(|i| format!("A{i}.mtx")).collect(),
        b: "B.mtx".into(),
        c: "C.mtx".into(),
        mesh: mesh.map(|_| "mesh.txt".to_string()),
    };
    write_matrix_market(&dir.join(&files.e), &asm.e, false)?;
    for (name, a) in files.a.iter().zip(&asm.a) {
        write_matrix_market(&dir.join(name), a, false)?;
    }
    write_matrix_market(&dir.join(&files.b), &asm.b, false)?;
    write_matrix_market(&dir.join(&files.c), &asm.c, false)?;
    if let (Some(m), Some(name)) = (mesh, &files.mesh) {
        write_mesh(&dir.join(name), m)?;
    }
    let manifest = BenchmarkManifest {
        version: MANIFEST_VERSION.into(),
        n: asm.n,
        p: asm.n_params(),
        k: asm.k(),
        parameter_box: model.parameter_box.clone(),
        dirichlet_dofs: Some(asm.dirichlet_dofs.clone()),
        files,
        variant: model.variant.clone(),
        provenance,
    };
    save_manifest(&dir.join(MANIFEST_NAME), &manifest)?;
    Ok(manifest)
}

/// Unit rows of `E` matched by `-1` rows of `A_0`: the structural signature
/// of an eliminated Dirichlet degree of freedom.
pub fn infer_dirichlet_dofs(e: &SparseMatrix, a0: &SparseMatrix) -> Vec<usize> {
    let unit = |m: &SparseMatrix, r: usize, d: f64| {
        let (cols, vals) = m.row(r);
        cols.iter().zip(vals).all(|(&c, &v)| if c == r { v == d } else { v == 0.0 }) && m.at(r, r) == d
    };
    (0..e.n_rows().min(a0.n_rows()))
        .filter(|&r| unit(e, r, 1.0) && unit(a0, r, -1.0))
        .collect()
}

/// Loads every referenced matrix and checks dimensions against the
/// manifest.
pub fn load_benchmark(path: &Path) -> Result<(BenchmarkManifest, AffineLtiModel)> {
    let manifest = load_manifest(path)?;
    let base = manifest_dir(path);
    let mut mats = manifest
        .matrix_paths(&base)
        .into_iter()
        .map(|(_, p)| read_matrix_market(&p))
        .collect::<Result<Vec<_>>>()?;
    let c = mats.pop().expect("C listed");
    let b = mats.pop().expect("B listed");
    let e = mats.remove(0);
    let a = mats;
    if e.n_rows() != manifest.n {
        return Err(Error::Dimension(format!("manifest says n = {}, E has {} rows", manifest.n, e.n_rows())));
    }
    if a.len() != manifest.p + 1 {
        return Err(Error::Dimension(format!(
            "manifest says p = {}, but lists {} A matrices",
            manifest.p,
            a.len()
        )));
    }
    let dirichlet = match &manifest.dirichlet_dofs {
        Some(d) => d.clone(),
        None => infer_dirichlet_dofs(&e, &a[0]),
    };
    if dirichlet.len() != manifest.k {
        return Err(Error::Dimension(format!(
            "manifest says k = {}, found {} Dirichlet dofs",
            manifest.k,
            dirichlet.len()
        )));
    }
    let assembly = AssemblyOutput::new(e, a, b, c, dirichlet)?;
    let model = AffineLtiModel::new(assembly, manifest.variant.clone())?.with_box(manifest.parameter_box.clone())?;
    Ok((manifest, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble;
    use crate::mesh::fixtures::two_triangles;

    fn tiny_model() -> AffineLtiModel {
        AffineLtiModel::new(assemble(&two_triangles()).unwrap(), ParameterVariant::single(1)).unwrap()
    }

    #[test]
    fn export_and_reload() {
        let dir = tempfile::tempdir().unwrap();
        let model = tiny_model();
        let prov = Provenance {
            tool_version: "0".into(),
            spec_hash: "abc".into(),
            mesh_scale: 0.1,
            circle_segments: 64,
            refine: 0,
        };
        let written = export_benchmark(dir.path(), &model, Some(&two_triangles()), Some(prov)).unwrap();
        let (read, back) = load_benchmark(&dir.path().join(MANIFEST_NAME)).unwrap();
        assert_eq!(read, written);
        assert_eq!(back.assembly, model.assembly);
        assert_eq!(back.variant, model.variant);
        assert!(dir.path().join("mesh.txt").exists());
    }

    #[test]
    fn inferred_dirichlet_matches() {
        let asm = assemble(&two_triangles()).unwrap();
        assert_eq!(infer_dirichlet_dofs(&asm.e, &asm.a[0]), asm.dirichlet_dofs);
    }

    #[test]
    fn load_errors() {
        let dir = tempfile::tempdir().unwrap();
        let m = tiny_model();
        export_benchmark(dir.path(), &m, None, None).unwrap();
        let path = dir.path().join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).unwrap();

        std::fs::write(&path, text.replace("n = 4", "n = 5")).unwrap();
        assert!(matches!(load_benchmark(&path), Err(Error::Dimension(_))));
        std::fs::write(&path, text.replace(MANIFEST_VERSION, "other/9")).unwrap();
        assert!(matches!(load_benchmark(&path), Err(Error::Format(_))));
        std::fs::write(&path, &text).unwrap();
        std::fs::remove_file(dir.path().join("B.mtx")).unwrap();
        assert!(load_benchmark(&path).unwrap_err().is_io());
    }
}
