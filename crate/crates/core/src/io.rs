//! File output and ingestion: time-series CSV, legacy VTK structured-points
//! snapshots (ASCII or big-endian binary), reference hydrogen curves.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::geometry::LevelSetField;
use crate::grid::{ScalarField, StructuredGrid, Unit};
use crate::observables::{ph_field, TimeSeries};
use crate::transport::ChemState;

pub const CSV_HEADER: &str = "time_h,mass_lost_g,hydrogen_ml,avg_ph,solid_volume_mm3";

/// Writes the time series as CSV. Plain `Display` formatting keeps the
/// shortest round-trip representation of every value.
pub fn export_csv(series: &TimeSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path)
        .map_err(|e| CoreError::io(format!("creating {}", path.display()), e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>, line: &str| -> Result<()> {
        writeln!(w, "{line}").map_err(|e| CoreError::io(format!("writing {}", path.display()), e))
    };
    write(&mut w, CSV_HEADER)?;
    for r in series.rows() {
        write(
            &mut w,
            &format!(
                "{},{},{},{},{}",
                r.time_h, r.mass_lost_g, r.hydrogen_ml, r.avg_ph, r.solid_volume_mm3
            ),
        )?;
    }
    w.flush()
        .map_err(|e| CoreError::io(format!("flushing {}", path.display()), e))?;
    Ok(())
}

/// Reads back a CSV written by [`export_csv`].
pub fn read_csv_series(path: impl AsRef<Path>) -> Result<Vec<[f64; 5]>> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| CoreError::io(format!("opening {}", path.display()), e))?;
    let mut rows = Vec::new();
    for (ln, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CoreError::io(format!("reading {}", path.display()), e))?;
        if ln == 0 {
            if line.trim() != CSV_HEADER {
                return Err(CoreError::Parse {
                    file: path.display().to_string(),
                    message: format!("unexpected header `{line}`"),
                });
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CoreError::Parse {
                file: path.display().to_string(),
                message: format!("line {}: expected 5 fields, got {}", ln + 1, fields.len()),
            });
        }
        let mut row = [0.0; 5];
        for (i, f) in fields.iter().enumerate() {
            row[i] = f.trim().parse().map_err(|_| CoreError::Parse {
                file: path.display().to_string(),
                message: format!("line {}: bad number `{f}`", ln + 1),
            })?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a two-column reference curve `time_h, hydrogen_ml`; a non-numeric
/// first line is treated as a header and skipped.
pub fn read_reference_csv(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let path = path.as_ref();
    let file = File::open(path)
        .map_err(|e| CoreError::io(format!("opening {}", path.display()), e))?;
    let mut out = Vec::new();
    for (ln, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CoreError::io(format!("reading {}", path.display()), e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        if fields.len() < 2 {
            return Err(CoreError::Parse {
                file: path.display().to_string(),
                message: format!("line {}: expected `time_h,hydrogen_ml`", ln + 1),
            });
        }
        match (fields[0].trim().parse::<f64>(), fields[1].trim().parse::<f64>()) {
            (Ok(t), Ok(h)) => out.push((t, h)),
            _ if ln == 0 => continue, // header
            _ => {
                return Err(CoreError::Parse {
                    file: path.display().to_string(),
                    message: format!("line {}: bad numbers `{trimmed}`", ln + 1),
                });
            }
        }
    }
    if out.is_empty() {
        return Err(CoreError::Parse {
            file: path.display().to_string(),
            message: "no data rows".into(),
        });
    }
    Ok(out)
}

const VTK_ARRAYS: [&str; 6] = ["c_mg", "c_film", "c_cl", "c_oh", "phi", "ph"];

/// Writes one legacy VTK structured-points snapshot carrying the four
/// concentrations, φ and the pH field.
pub fn export_vtk(
    state: &ChemState,
    phi: &LevelSetField,
    ph_floor: f64,
    ascii: bool,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if state.grid() != phi.grid() {
        return Err(CoreError::invalid("export_vtk: state and phi on different grids"));
    }
    let g = *phi.grid();
    let ph = ph_field(&state.c_oh, ph_floor);
    let arrays: [&ScalarField; 6] = [
        &state.c_mg,
        &state.c_film,
        &state.c_cl,
        &state.c_oh,
        phi.field(),
        &ph,
    ];

    let file = File::create(path)
        .map_err(|e| CoreError::io(format!("creating {}", path.display()), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e: std::io::Error| CoreError::io(format!("writing {}", path.display()), e);

    writeln!(w, "# vtk DataFile Version 3.0").map_err(io_err)?;
    writeln!(w, "biodegradation snapshot t={} h", state.time).map_err(io_err)?;
    writeln!(w, "{}", if ascii { "ASCII" } else { "BINARY" }).map_err(io_err)?;
    writeln!(w, "DATASET STRUCTURED_POINTS").map_err(io_err)?;
    writeln!(w, "DIMENSIONS {} {} {}", g.nx, g.ny, g.nz).map_err(io_err)?;
    writeln!(w, "ORIGIN {} {} {}", g.origin[0], g.origin[1], g.origin[2]).map_err(io_err)?;
    writeln!(w, "SPACING {} {} {}", g.h, g.h, g.h).map_err(io_err)?;
    writeln!(w, "POINT_DATA {}", g.node_count()).map_err(io_err)?;
    for (name, field) in VTK_ARRAYS.iter().zip(arrays) {
        writeln!(w, "SCALARS {name} double 1").map_err(io_err)?;
        writeln!(w, "LOOKUP_TABLE default").map_err(io_err)?;
        if ascii {
            for chunk in field.values().chunks(6) {
                let line: Vec<String> = chunk.iter().map(|v| format!("{v:e}")).collect();
                writeln!(w, "{}", line.join(" ")).map_err(io_err)?;
            }
        } else {
            // legacy VTK binary payloads are big-endian
            let mut buf = Vec::with_capacity(field.values().len() * 8);
            for v in field.values() {
                buf.extend_from_slice(&v.to_be_bytes());
            }
            w.write_all(&buf).map_err(io_err)?;
            writeln!(w).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// A snapshot read back from disk.
#[derive(Debug)]
pub struct VtkSnapshot {
    pub grid: StructuredGrid,
    pub arrays: Vec<(String, Vec<f64>)>,
}

impl VtkSnapshot {
    pub fn array(&self, name: &str) -> Option<&[f64]> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
    }

    pub fn field(&self, name: &str, unit: Unit) -> Result<ScalarField> {
        let values = self
            .array(name)
            .ok_or_else(|| CoreError::invalid(format!("snapshot has no array `{name}`")))?;
        ScalarField::from_values(self.grid, unit, values.to_vec())
    }
}

/// Reads a legacy VTK structured-points file written by [`export_vtk`]
/// (either encoding).
pub fn read_vtk(path: impl AsRef<Path>) -> Result<VtkSnapshot> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| CoreError::io(format!("reading {}", path.display()), e))?;
    let parse_err = |message: String| CoreError::Parse {
        file: path.display().to_string(),
        message,
    };

    // split into lines while tracking byte offsets, since binary payloads
    // follow their headers directly
    let mut pos = 0usize;
    let next_line = |bytes: &[u8], pos: &mut usize| -> Option<String> {
        if *pos >= bytes.len() {
            return None;
        }
        let start = *pos;
        while *pos < bytes.len() && bytes[*pos] != b'\n' {
            *pos += 1;
        }
        let line = String::from_utf8_lossy(&bytes[start..*pos]).trim_end().to_string();
        *pos += 1; // skip newline
        Some(line)
    };

    next_line(&bytes, &mut pos).ok_or_else(|| parse_err("empty file".into()))?; // version
    next_line(&bytes, &mut pos).ok_or_else(|| parse_err("missing title".into()))?;
    let mode = next_line(&bytes, &mut pos).ok_or_else(|| parse_err("missing mode".into()))?;
    let ascii = match mode.as_str() {
        "ASCII" => true,
        "BINARY" => false,
        other => return Err(parse_err(format!("unsupported data mode `{other}`"))),
    };
    let dataset = next_line(&bytes, &mut pos).ok_or_else(|| parse_err("missing dataset".into()))?;
    if dataset.trim() != "DATASET STRUCTURED_POINTS" {
        return Err(parse_err(format!("unsupported dataset `{dataset}`")));
    }

    let mut dims = [0usize; 3];
    let mut origin = [0.0f64; 3];
    let mut spacing = [0.0f64; 3];
    let n_points;
    loop {
        let line = next_line(&bytes, &mut pos).ok_or_else(|| parse_err("truncated header".into()))?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("DIMENSIONS") => {
                for d in &mut dims {
                    *d = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err("bad DIMENSIONS".into()))?;
                }
            }
            Some("ORIGIN") => {
                for o in &mut origin {
                    *o = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err("bad ORIGIN".into()))?;
                }
            }
            Some("SPACING") => {
                for s in &mut spacing {
                    *s = it
                        .next()
                        .and_then(|x| x.parse().ok())
                        .ok_or_else(|| parse_err("bad SPACING".into()))?;
                }
            }
            Some("POINT_DATA") => {
                n_points = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err("bad POINT_DATA".into()))?;
                break;
            }
            Some(_) | None => continue,
        }
    }
    if dims.iter().any(|&d| d < 1) || dims[0] * dims[1] * dims[2] != n_points {
        return Err(parse_err(format!(
            "inconsistent dimensions {dims:?} vs POINT_DATA {n_points}"
        )));
    }
    let grid = StructuredGrid {
        nx: dims[0],
        ny: dims[1],
        nz: dims[2],
        h: spacing[0],
        origin,
    };

    let mut arrays = Vec::new();
    while let Some(line) = next_line(&bytes, &mut pos) {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        if it.next() != Some("SCALARS") {
            return Err(parse_err(format!("expected SCALARS, got `{line}`")));
        }
        let name = it
            .next()
            .ok_or_else(|| parse_err("SCALARS without a name".into()))?
            .to_string();
        let lut = next_line(&bytes, &mut pos).ok_or_else(|| parse_err("missing LOOKUP_TABLE".into()))?;
        if !lut.starts_with("LOOKUP_TABLE") {
            return Err(parse_err(format!("expected LOOKUP_TABLE, got `{lut}`")));
        }
        let mut values = Vec::with_capacity(n_points);
        if ascii {
            while values.len() < n_points {
                let line =
                    next_line(&bytes, &mut pos).ok_or_else(|| parse_err("truncated ASCII data".into()))?;
                for tok in line.split_whitespace() {
                    values.push(
                        tok.parse()
                            .map_err(|_| parse_err(format!("bad value `{tok}` in array {name}")))?,
                    );
                }
            }
        } else {
            let need = n_points * 8;
            if pos + need > bytes.len() {
                return Err(parse_err(format!("truncated binary data in array {name}")));
            }
            for chunk in bytes[pos..pos + need].chunks_exact(8) {
                values.push(f64::from_be_bytes(chunk.try_into().expect("8-byte chunk")));
            }
            pos += need;
            // trailing newline after the payload
            if pos < bytes.len() && bytes[pos] == b'\n' {
                pos += 1;
            }
        }
        if values.len() != n_points {
            return Err(parse_err(format!(
                "array {name} has {} values, expected {n_points}",
                values.len()
            )));
        }
        arrays.push((name, values));
    }
    Ok(VtkSnapshot { grid, arrays })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sdf_build;
    use crate::geometry::GeometrySpec;
    use crate::grid::make_grid;
    use crate::observables::SeriesRow;

    fn slab_state() -> (ChemState, LevelSetField) {
        let g = make_grid([2.0, 2.0, 2.0], 1.0).unwrap();
        let spec = GeometrySpec::Cuboid {
            center: [1.0, 1.0, 0.5],
            half_sizes: [0.8, 0.8, 0.5],
        };
        let phi = sdf_build(&spec, &g).unwrap();
        let state = ChemState::new(
            ScalarField::from_fn(g, Unit::Concentration, |p| 1e-6 * (1.0 + p[0])),
            ScalarField::constant(g, Unit::Concentration, 0.0),
            ScalarField::constant(g, Unit::Concentration, 5.175e-6),
            ScalarField::constant(g, Unit::Concentration, 1e-7),
            0.5,
        )
        .unwrap();
        (state, phi)
    }

    #[test]
    fn csv_empty_series_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        export_csv(&TimeSeries::new(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn csv_single_row_and_field_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("one.csv");
        let mut ts = TimeSeries::new();
        ts.push(SeriesRow {
            time_h: 0.25,
            mass_lost_g: 1e-3,
            hydrogen_ml: 0.996,
            avg_ph: 7.25,
            solid_volume_mm3: 99.5,
        })
        .unwrap();
        export_csv(&ts, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "0.25,0.001,0.996,7.25,99.5");
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rt.csv");
        let mut ts = TimeSeries::new();
        let rows = [
            SeriesRow {
                time_h: 0.025,
                mass_lost_g: 1.2345678901234e-5,
                hydrogen_ml: 0.012300000000077,
                avg_ph: 5.600000001,
                solid_volume_mm3: 199.99999999999,
            },
            SeriesRow {
                time_h: 0.05,
                mass_lost_g: 2.5e-5,
                hydrogen_ml: 0.0249,
                avg_ph: 5.61,
                solid_volume_mm3: 199.9,
            },
        ];
        for r in rows {
            ts.push(r).unwrap();
        }
        export_csv(&ts, &path).unwrap();
        let back = read_csv_series(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (r, b) in rows.iter().zip(&back) {
            // Display -> parse is exact for f64
            assert_eq!(r.time_h, b[0]);
            assert_eq!(r.mass_lost_g, b[1]);
            assert_eq!(r.hydrogen_ml, b[2]);
            assert_eq!(r.avg_ph, b[3]);
            assert_eq!(r.solid_volume_mm3, b[4]);
        }
    }

    #[test]
    fn reference_csv_accepts_optional_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ref.csv");
        std::fs::write(&path, "time_h,hydrogen_ml\n0.0,0.0\n1.0,12.5\n").unwrap();
        let curve = read_reference_csv(&path).unwrap();
        assert_eq!(curve, vec![(0.0, 0.0), (1.0, 12.5)]);
        std::fs::write(&path, "0.5,3.25\n").unwrap();
        assert_eq!(read_reference_csv(&path).unwrap(), vec![(0.5, 3.25)]);
    }

    #[test]
    fn vtk_header_declares_dimensions_and_arrays() {
        let (state, phi) = slab_state();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.vtk");
        export_vtk(&state, &phi, 1e-9, true, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("DIMENSIONS 3 3 3"));
        assert!(text.contains("POINT_DATA 27"));
        for name in VTK_ARRAYS {
            assert!(text.contains(&format!("SCALARS {name} double 1")), "{name}");
        }
    }

    #[test]
    fn vtk_roundtrip_ascii_and_binary() {
        let (state, phi) = slab_state();
        let dir = tempfile::tempdir().unwrap();
        for (ascii, file) in [(true, "a.vtk"), (false, "b.vtk")] {
            let path = dir.path().join(file);
            export_vtk(&state, &phi, 1e-9, ascii, &path).unwrap();
            let snap = read_vtk(&path).unwrap();
            assert_eq!(snap.grid.dims(), [3, 3, 3]);
            assert_eq!(snap.arrays.len(), 6);
            let c_mg = snap.array("c_mg").unwrap();
            for (a, b) in c_mg.iter().zip(state.c_mg.values()) {
                if ascii {
                    assert!((a - b).abs() <= 1e-15 + 1e-12 * b.abs());
                } else {
                    assert_eq!(a, b, "binary roundtrip must be bitwise");
                }
            }
            let phi_back = snap.array("phi").unwrap();
            assert_eq!(phi_back.len(), phi.values().len());
        }
    }

    #[test]
    fn vtk_phi_sign_change_locates_the_front() {
        let g = make_grid([6.0, 2.0, 2.0], 1.0).unwrap();
        // slab face between x = 2 and x = 3
        let spec = GeometrySpec::Cuboid {
            center: [1.0, 1.0, 1.0],
            half_sizes: [1.5, 5.0, 5.0],
        };
        let phi = sdf_build(&spec, &g).unwrap();
        let state = ChemState::new(
            ScalarField::constant(g, Unit::Concentration, 0.0),
            ScalarField::constant(g, Unit::Concentration, 0.0),
            ScalarField::constant(g, Unit::Concentration, 0.0),
            ScalarField::constant(g, Unit::Concentration, 0.0),
            0.0,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("front.vtk");
        export_vtk(&state, &phi, 1e-9, false, &path).unwrap();
        let snap = read_vtk(&path).unwrap();
        let vals = snap.array("phi").unwrap();
        // along the x row at j = k = 0: sign change between i = 2 and i = 3
        assert!(vals[2] >= 0.0 && vals[3] < 0.0);
    }
}
