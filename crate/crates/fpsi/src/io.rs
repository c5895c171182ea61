//! Result export: CSV tables, JSON-lines step logs, and legacy-VTK
//! unstructured-grid snapshots. All numeric output carries 17 significant
//! digits so downstream rate computation is exact.

use crate::mesh::TriMesh;
use crate::schemes::{SchemeContext, StepObserver, StepRecord};
use std::fs::File;
use std::io::{BufWriter, Result, Write};
use std::path::Path;

pub fn fmt_g(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV file with a header row and full-precision numeric rows.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_g(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Streams one JSON object per accepted step:
/// {"step":..,"t":..,"iterations":..,"E":..,"D":..,"S":..,"interface_residual":..}
pub struct JsonlLogger {
    w: BufWriter<File>,
}

impl JsonlLogger {
    pub fn create(path: &Path) -> Result<Self> {
        Ok(Self { w: BufWriter::new(File::create(path)?) })
    }
}

impl StepObserver for JsonlLogger {
    fn observe(&mut self, r: &StepRecord, _state: &crate::schemes::CoupledState, _ctx: &SchemeContext) {
        let iters = match r.iterations {
            Some((k, _)) => k.to_string(),
            None => "null".to_string(),
        };
        let _ = writeln!(
            self.w,
            "{{\"step\":{},\"t\":{},\"iterations\":{},\"E\":{},\"D\":{},\"S\":{},\"interface_residual\":{}}}",
            r.step,
            fmt_g(r.t),
            iters,
            fmt_g(r.energy.e),
            fmt_g(r.energy.d),
            fmt_g(r.energy.s),
            fmt_g(r.interface_residual),
        );
    }
}

/// Legacy-VTK ASCII writer (version 3.0 header, unstructured grid of linear
/// triangles). Point data are vertex samples; cell data are per-triangle.
pub struct VtkFields<'a> {
    pub point_vectors: Vec<(&'a str, Vec<[f64; 2]>)>,
    pub point_scalars: Vec<(&'a str, Vec<f64>)>,
    pub cell_vectors: Vec<(&'a str, Vec<[f64; 2]>)>,
    pub cell_scalars: Vec<(&'a str, Vec<f64>)>,
}

impl Default for VtkFields<'_> {
    fn default() -> Self {
        Self {
            point_vectors: Vec::new(),
            point_scalars: Vec::new(),
            cell_vectors: Vec::new(),
            cell_scalars: Vec::new(),
        }
    }
}

pub fn write_vtk(path: &Path, title: &str, mesh: &TriMesh, fields: &VtkFields<'_>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for v in &mesh.vertices {
        writeln!(w, "{} {} 0", fmt_g(v[0]), fmt_g(v[1]))?;
    }
    writeln!(w, "CELLS {} {}", mesh.n_cells(), 4 * mesh.n_cells())?;
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_cells())?;
    for _ in 0..mesh.n_cells() {
        writeln!(w, "5")?;
    }
    if !fields.point_vectors.is_empty() || !fields.point_scalars.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
        for (name, data) in &fields.point_vectors {
            writeln!(w, "VECTORS {name} double")?;
            for v in data {
                writeln!(w, "{} {} 0", fmt_g(v[0]), fmt_g(v[1]))?;
            }
        }
        for (name, data) in &fields.point_scalars {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in data {
                writeln!(w, "{}", fmt_g(*v))?;
            }
        }
    }
    if !fields.cell_vectors.is_empty() || !fields.cell_scalars.is_empty() {
        writeln!(w, "CELL_DATA {}", mesh.n_cells())?;
        for (name, data) in &fields.cell_vectors {
            writeln!(w, "VECTORS {name} double")?;
            for v in data {
                writeln!(w, "{} {} 0", fmt_g(v[0]), fmt_g(v[1]))?;
            }
        }
        for (name, data) in &fields.cell_scalars {
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for v in data {
                writeln!(w, "{}", fmt_g(*v))?;
            }
        }
    }
    Ok(())
}

/// Writes the interface-variable trajectory row for one time level:
/// columns (arc, mu_n, mu_tau), one file per export time.
pub fn write_mu_csv(
    path: &Path,
    space: &crate::interface::LambdaSpace,
    mu: &crate::interface::MuState,
) -> Result<()> {
    let order = space.nodes_by_arc();
    let rows: Vec<Vec<f64>> = order
        .iter()
        .map(|&i| vec![space.arc[i], mu.mu_n[i], mu.mu_tau[i]])
        .collect();
    write_csv(path, &["arc", "mu_n", "mu_tau"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, DiagonalRule, DomainLabel};

    #[test]
    fn vtk_file_structure() {
        let mesh =
            build_rect_mesh(0.0, 1.0, 0.0, 1.0, 2, 2, DiagonalRule::LowerLeft, DomainLabel::Fluid)
                .unwrap();
        let dir = std::env::temp_dir().join("fpsi_vtk_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mesh.vtk");
        let fields = VtkFields {
            point_scalars: vec![("p", (0..mesh.n_vertices()).map(|i| i as f64).collect())],
            ..Default::default()
        };
        write_vtk(&path, "test", &mesh, &fields).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0"));
        assert!(text.contains("DATASET UNSTRUCTURED_GRID"));
        assert!(text.contains("POINTS 9 double"));
        assert!(text.contains("CELLS 8 32"));
        assert!(text.contains("SCALARS p double 1"));
    }

    #[test]
    fn csv_full_precision() {
        let dir = std::env::temp_dir().join("fpsi_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        write_csv(&path, &["a", "b"], &[vec![1.0 / 3.0, 2.0]]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("3.3333333333333331e-1"));
    }
}
