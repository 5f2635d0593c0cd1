//! Output helpers: round-trip float formatting, JSON and CSV writers, nodal
//! field dumps.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::error::{Error, Result};
use crate::grid::BoxMesh;

/// 17 significant digits in scientific notation; round-trips every finite f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Pretty JSON formatter that writes floats with [`fmt_f64`].
struct FloatFormatter<'a> {
    inner: serde_json::ser::PrettyFormatter<'a>,
}

impl Formatter for FloatFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            writer.write_all(fmt_f64(value).as_bytes())
        } else {
            writer.write_all(b"null")
        }
    }
    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> std::io::Result<()> {
        self.inner.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.inner.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let fmt = FloatFormatter {
        inner: serde_json::ser::PrettyFormatter::new(),
    };
    let mut ser = Serializer::with_formatter(&mut buf, fmt);
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json_string(value)?)?;
    Ok(())
}

/// Writes a CSV with a header row; every cell is a float.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| fmt_f64(*x)))?;
    }
    w.flush()?;
    Ok(())
}

fn check_fields(mesh: &BoxMesh, fields: &[(&str, &[f64])]) -> Result<()> {
    for (_, v) in fields {
        if v.len() != mesh.node_count() {
            return Err(Error::DimensionMismatch {
                expected: mesh.node_count(),
                got: v.len(),
            });
        }
    }
    Ok(())
}

/// Node coordinates followed by one column per field. 2D meshes write (x1, x3).
pub fn write_nodal_csv(path: &Path, mesh: &BoxMesh, fields: &[(&str, &[f64])]) -> Result<()> {
    check_fields(mesh, fields)?;
    let coords: &[&str] = if mesh.dim() == 2 {
        &["x1", "x3"]
    } else {
        &["x1", "x2", "x3"]
    };
    let header: Vec<&str> = coords
        .iter()
        .copied()
        .chain(fields.iter().map(|f| f.0))
        .collect();
    let rows = (0..mesh.node_count()).map(|n| {
        let x = mesh.node_coords(n);
        let mut row = x[..mesh.dim()].to_vec();
        row.extend(fields.iter().map(|f| f.1[n]));
        row
    });
    write_csv(path, &header, rows)
}

/// Legacy ASCII VTK structured-points file with one scalar per field.
pub fn write_vtk(
    path: &Path,
    mesh: &BoxMesh,
    title: &str,
    fields: &[(&str, &[f64])],
) -> Result<()> {
    check_fields(mesh, fields)?;
    let mut w = BufWriter::new(File::create(path)?);
    let d = mesh.dim();
    let mut dims = [1usize; 3];
    let mut origin = [0.0; 3];
    let mut spacing = [1.0; 3];
    for axis in 0..d {
        dims[axis] = mesh.nodes_per_axis(axis);
        origin[axis] = mesh.extents()[axis].0;
        spacing[axis] = mesh.h()[axis];
    }
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{}", title.lines().next().unwrap_or(""))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", dims[0], dims[1], dims[2])?;
    writeln!(
        w,
        "ORIGIN {} {} {}",
        fmt_f64(origin[0]),
        fmt_f64(origin[1]),
        fmt_f64(origin[2])
    )?;
    writeln!(
        w,
        "SPACING {} {} {}",
        fmt_f64(spacing[0]),
        fmt_f64(spacing[1]),
        fmt_f64(spacing[2])
    )?;
    writeln!(w, "POINT_DATA {}", mesh.node_count())?;
    for (name, v) in fields {
        writeln!(w, "SCALARS {name} double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for x in v.iter() {
            writeln!(w, "{}", fmt_f64(*x))?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_f64(2.0), "2.0000000000000000e0");
    }

    #[test]
    fn json_uses_full_precision() {
        #[derive(Serialize)]
        struct R {
            x: f64,
            n: usize,
        }
        let s = to_json_string(&R { x: 0.1, n: 3 }).unwrap();
        assert!(s.contains("\"x\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64().unwrap(), 0.1);
    }

    #[test]
    fn field_dumps_have_one_row_per_node() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = BoxMesh::unit(2, 3).unwrap();
        let f: Vec<f64> = (0..mesh.node_count()).map(|n| n as f64).collect();
        let csv_path = dir.path().join("f.csv");
        write_nodal_csv(&csv_path, &mesh, &[("f", &f)]).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("x1,x3,f\n"));

        let vtk_path = dir.path().join("f.vtk");
        write_vtk(&vtk_path, &mesh, "t", &[("f", &f)]).unwrap();
        let text = std::fs::read_to_string(&vtk_path).unwrap();
        assert!(text.contains("DIMENSIONS 4 4 1"));
        assert!(text.contains("POINT_DATA 16"));
        assert!(write_vtk(&vtk_path, &mesh, "t", &[("f", &f[..3])]).is_err());
    }
}
