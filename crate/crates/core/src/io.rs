//! On-disk formats.
//!
//! A basin array is a pair of files: `<name>.bin` holds the labels as
//! little-endian `i32`, row-major, and `<name>.json` is the header describing
//! the grid. Attractor points go to a CSV file with one row per point:
//! attractor ID followed by the coordinates.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attractors::AttractorStore;
use crate::error::{Error, Result};
use crate::grid::{Axis, Grid};
use crate::params::RecurrenceParams;

pub const FORMAT_TAG: &str = "basins-i32le-v1";

/// Sidecar header of a basin array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinsHeader {
    pub format: String,
    pub axes: Vec<Axis>,
    pub shape: Vec<usize>,
    pub attractor_count: usize,
    pub system: String,
    #[serde(default)]
    pub system_params: BTreeMap<String, f64>,
    #[serde(default)]
    pub recurrence: Option<RecurrenceParams>,
    /// Resolved recurrence step.
    #[serde(default)]
    pub dt: Option<f64>,
}

impl BasinsHeader {
    pub fn new(grid: &Grid, attractor_count: usize, system: impl Into<String>) -> Self {
        BasinsHeader {
            format: FORMAT_TAG.to_string(),
            axes: grid.axes().to_vec(),
            shape: grid.shape(),
            attractor_count,
            system: system.into(),
            system_params: BTreeMap::new(),
            recurrence: None,
            dt: None,
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        let grid = Grid::new(self.axes.clone())?;
        if grid.shape() != self.shape {
            return Err(Error::Format(format!(
                "header shape {:?} does not match its axes {:?}",
                self.shape,
                grid.shape()
            )));
        }
        Ok(grid)
    }
}

/// Path of the header that belongs to a `.bin` payload.
pub fn header_path(bin: &Path) -> PathBuf {
    bin.with_extension("json")
}

pub fn write_basins(bin: &Path, header: &BasinsHeader, labels: &[i32]) -> Result<()> {
    let grid = header.grid()?;
    if grid.len() != labels.len() {
        return Err(Error::Contract(format!(
            "header describes {} cells but {} labels were given",
            grid.len(),
            labels.len()
        )));
    }
    let mut bytes = Vec::with_capacity(labels.len() * 4);
    for l in labels {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    fs::write(bin, bytes)?;
    fs::write(header_path(bin), serde_json::to_string_pretty(header)? + "\n")?;
    Ok(())
}

pub fn read_header(bin: &Path) -> Result<BasinsHeader> {
    let text = fs::read_to_string(header_path(bin))?;
    let header: BasinsHeader = serde_json::from_str(&text)?;
    if header.format != FORMAT_TAG {
        return Err(Error::Format(format!("unsupported format `{}`", header.format)));
    }
    Ok(header)
}

pub fn read_basins(bin: &Path) -> Result<(BasinsHeader, Vec<i32>)> {
    let header = read_header(bin)?;
    let grid = header.grid()?;
    let bytes = fs::read(bin)?;
    if bytes.len() != grid.len() * 4 {
        return Err(Error::Format(format!(
            "{} holds {} bytes, expected {}",
            bin.display(),
            bytes.len(),
            grid.len() * 4
        )));
    }
    let labels = bytes
        .chunks_exact(4)
        .map(|c| i32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok((header, labels))
}

/// Writes one row per cell: centre coordinates then label.
pub fn write_basins_csv(path: &Path, grid: &Grid, labels: &[i32]) -> Result<()> {
    if grid.len() != labels.len() {
        return Err(Error::Contract("label count does not match the grid".into()));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    let header: Vec<String> = (0..grid.dimension())
        .map(|d| format!("x{d}"))
        .chain(std::iter::once("label".into()))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    let mut center = vec![0.0; grid.dimension()];
    for (i, l) in labels.iter().enumerate() {
        grid.center_of_linear(i, &mut center);
        for c in &center {
            write!(w, "{c},")?;
        }
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_attractors_csv(path: &Path, attractors: &AttractorStore) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for (id, pts) in attractors.iter() {
        for p in pts {
            write!(w, "{id}")?;
            for v in p {
                // `{:?}` keeps enough digits to round-trip exactly
                write!(w, ",{v:?}")?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_attractors_csv(path: &Path) -> Result<AttractorStore> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut store = AttractorStore::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("{}:{}: {what}", path.display(), n + 1));
        let mut fields = line.split(',').map(str::trim);
        let id: u32 = fields
            .next()
            .and_then(|f| f.parse().ok())
            .filter(|&id| id >= 1)
            .ok_or_else(|| bad("expected a positive attractor id"))?;
        let point = fields
            .map(|f| f.parse::<f64>().map_err(|_| bad("invalid coordinate")))
            .collect::<Result<Vec<_>>>()?;
        if point.is_empty() {
            return Err(bad("row has no coordinates"));
        }
        store.push(id, &point);
    }
    store.validate()?;
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basins_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::from_ranges(&[(0.0, 1.0, 3), (-2.0, 2.0, 4)]).unwrap();
        let labels = vec![1, 2, -1, 3, 1, 1, 2, 2, -1, -1, 3, i32::MAX];
        let mut header = BasinsHeader::new(&grid, 3, "test");
        header.system_params.insert("a".into(), 1.5);
        header.recurrence = Some(RecurrenceParams::default());
        header.dt = Some(0.1);
        let bin = dir.path().join("basins.bin");
        write_basins(&bin, &header, &labels).unwrap();
        assert_eq!(fs::metadata(&bin).unwrap().len(), 48);
        let (h, l) = read_basins(&bin).unwrap();
        assert_eq!(h, header);
        assert_eq!(l, labels);
        assert_eq!(h.grid().unwrap(), grid);

        assert!(write_basins(&bin, &header, &labels[..5]).is_err());
        fs::write(&bin, [0u8; 7]).unwrap();
        assert!(matches!(read_basins(&bin), Err(Error::Format(_))));
    }

    #[test]
    fn attractors_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = AttractorStore::new();
        store.push(1, &[0.1, 1.0 / 3.0]);
        store.push(1, &[-2.5e-17, 7.0]);
        store.push(2, &[1e300, -0.0]);
        let path = dir.path().join("attractors.csv");
        write_attractors_csv(&path, &store).unwrap();
        assert_eq!(read_attractors_csv(&path).unwrap(), store);

        fs::write(&path, "").unwrap();
        assert!(read_attractors_csv(&path).unwrap().is_empty());
        fs::write(&path, "1,abc\n").unwrap();
        assert!(read_attractors_csv(&path).is_err());
        fs::write(&path, "2,0.5\n").unwrap();
        assert!(read_attractors_csv(&path).is_err());
    }

    #[test]
    fn csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid::from_ranges(&[(0.0, 1.0, 2)]).unwrap();
        let path = dir.path().join("b.csv");
        write_basins_csv(&path, &grid, &[1, -1]).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "x0,label\n0,1\n1,-1\n");
    }
}
