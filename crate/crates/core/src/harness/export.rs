//! File outputs of the harness.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::assembly::AssembledSystem;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::subdivision::Subdivision;

/// Writes `node,x,y,u…` rows with round-trip precision.
pub fn write_solution_csv(path: &Path, mesh: &Mesh, coeffs: &[f64], components: usize) -> Result<()> {
    if coeffs.len() != mesh.num_vertices() * components {
        return Err(Error::Dimension("solution length does not match the mesh".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let cols = if components == 1 { "u" } else { "u1,u2" };
    writeln!(w, "node,x,y,{cols}").map_err(io)?;
    for (v, p) in mesh.vertices().iter().enumerate() {
        write!(w, "{v},{:.17e},{:.17e}", p[0], p[1]).map_err(io)?;
        for c in 0..components {
            write!(w, ",{:.17e}", coeffs[v * components + c]).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Writes the subdivision dump CSV.
pub fn write_subdivision_csv(path: &Path, mesh: &Mesh, sub: &Subdivision) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    sub.write_csv(mesh, &mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Writes `A.mtx`, `B.mtx`, `f.mtx`, `g.mtx` and the mesh dump `mesh.txt`
/// into `dir`; returns the written paths.
pub fn export_artifacts(dir: &Path, mesh: &Mesh, system: &AssembledSystem) -> Result<Vec<PathBuf>> {
    system.export_matrix_market(dir)?;
    let mesh_path = dir.join("mesh.txt");
    let file = File::create(&mesh_path).map_err(|e| Error::io(&mesh_path, e))?;
    let mut w = BufWriter::new(file);
    mesh.write_text(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(&mesh_path, e))?;
    Ok(["A.mtx", "B.mtx", "f.mtx", "g.mtx", "mesh.txt"].iter().map(|f| dir.join(f)).collect())
}
