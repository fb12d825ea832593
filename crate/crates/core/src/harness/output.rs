//! CSV tables and legacy VTK snapshots.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::fvem::VectorField3;
use crate::mesh::TriMesh;
use crate::{Error, Result, Scalar};

/// Legacy ASCII VTK text for a triangulated field: points at `z = 0`,
/// triangle cells (type 5), and a `magnetization` vector per node.
pub fn vtk_string<T: Scalar>(mesh: &TriMesh<T>, m: &VectorField3<T>) -> Result<String> {
    m.check_len(mesh.num_nodes())?;
    let n = mesh.num_nodes();
    let nt = mesh.num_triangles();
    let mut s = String::with_capacity(64 * n + 32 * nt);
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str("magnetization\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {n} {}", T::VTK_NAME);
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let _ = writeln!(s, "VECTORS magnetization {}", T::VTK_NAME);
    for v in &m.values {
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("snapshot field".into()));
        }
        let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
    }
    Ok(s)
}

pub fn write_vtk_snapshot<T: Scalar>(mesh: &TriMesh<T>, m: &VectorField3<T>, path: &Path) -> Result<()> {
    let text = vtk_string(mesh, m)?;
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Shortest round-trip representation; keeps files reproducible.
pub fn fmt_num(x: f64) -> String {
    format!("{x:e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Writes a CSV file with a header row.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}
