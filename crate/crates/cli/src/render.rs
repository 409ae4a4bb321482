//! Binary PPM rendering of 2D slices of a basin array.

use anyhow::{bail, Result};
use basins_core::{Error, Grid};

/// Which axes stay free in a slice; the others are fixed to an index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SliceAxis {
    Free,
    Fixed(usize),
}

/// Parses `":,:,50"`: one entry per axis, exactly two `:` entries.
pub fn parse_slice(spec: &str, shape: &[usize]) -> Result<Vec<SliceAxis>> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != shape.len() {
        bail!(Error::Config(format!(
            "slice `{spec}` has {} entries but the array has {} axes",
            parts.len(),
            shape.len()
        )));
    }
    let mut out = Vec::with_capacity(parts.len());
    for (d, (p, &len)) in parts.iter().zip(shape).enumerate() {
        if *p == ":" {
            out.push(SliceAxis::Free);
            continue;
        }
        let i: usize = p
            .parse()
            .map_err(|_| Error::Config(format!("slice entry `{p}` is neither `:` nor an index")))?;
        if i >= len {
            bail!(Error::Config(format!(
                "slice index {i} out of range for axis {d} of length {len}"
            )));
        }
        out.push(SliceAxis::Fixed(i));
    }
    if out.iter().filter(|s| **s == SliceAxis::Free).count() != 2 {
        bail!(Error::Config(format!("slice `{spec}` must leave exactly two axes free")));
    }
    Ok(out)
}

/// Default slice: the first two axes free, the rest at their middle index.
pub fn default_slice(shape: &[usize]) -> Vec<SliceAxis> {
    shape
        .iter()
        .enumerate()
        .map(|(d, &len)| if d < 2 { SliceAxis::Free } else { SliceAxis::Fixed(len / 2) })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Palette {
    /// Well-separated hues.
    Categorical,
    /// Evenly spaced grey levels.
    Gray,
}

const CATEGORICAL: [[u8; 3]; 10] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [188, 189, 34],
    [23, 190, 207],
    [127, 127, 127],
];

impl Palette {
    /// Colour of a label; diverged cells (-1) are black.
    pub fn color(self, label: i32, max_label: i32) -> [u8; 3] {
        if label < 1 {
            return [0, 0, 0];
        }
        match self {
            Palette::Categorical => CATEGORICAL[(label as usize - 1) % CATEGORICAL.len()],
            Palette::Gray => {
                let v = 64 + (191 * label as i64 / max_label.max(1) as i64) as u8;
                [v, v, v]
            }
        }
    }
}

/// Renders the slice as P6. The first free axis runs left to right, the
/// second bottom to top, so row 0 holds the largest value of that axis.
pub fn render_ppm(grid: &Grid, labels: &[i32], slice: &[SliceAxis], palette: Palette) -> Vec<u8> {
    let shape = grid.shape();
    let free: Vec<usize> = (0..shape.len()).filter(|&d| slice[d] == SliceAxis::Free).collect();
    let (h_axis, v_axis) = (free[0], free[1]);
    let (width, height) = (shape[h_axis], shape[v_axis]);
    let max_label = labels.iter().copied().max().unwrap_or(1);

    let mut index: Vec<usize> = slice
        .iter()
        .map(|s| match s {
            SliceAxis::Fixed(i) => *i,
            SliceAxis::Free => 0,
        })
        .collect();
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.reserve(width * height * 3);
    for row in 0..height {
        index[v_axis] = height - 1 - row;
        for col in 0..width {
            index[h_axis] = col;
            let cell = grid.linear_index(&index).expect("slice indices are in range");
            out.extend_from_slice(&palette.color(labels[cell], max_label));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slice_parsing() {
        let shape = [100, 100, 100];
        assert_eq!(
            parse_slice(":,:,50", &shape).unwrap(),
            vec![SliceAxis::Free, SliceAxis::Free, SliceAxis::Fixed(50)]
        );
        assert!(parse_slice(":,:,100", &shape).is_err());
        assert!(parse_slice(":,:", &shape).is_err());
        assert!(parse_slice(":,3,4", &shape).is_err());
        assert!(parse_slice(":,:,x", &shape).is_err());
        assert_eq!(default_slice(&[4, 5, 6])[2], SliceAxis::Fixed(3));
    }

    #[test]
    fn two_by_two() {
        // labels[i][j] = [[1, 2], [2, -1]], i horizontal, j vertical
        let grid = Grid::from_ranges(&[(0.0, 1.0, 2), (0.0, 1.0, 2)]).unwrap();
        let img = render_ppm(&grid, &[1, 2, 2, -1], &default_slice(&[2, 2]), Palette::Categorical);
        let header = b"P6\n2 2\n255\n";
        assert_eq!(&img[..header.len()], header);
        let px: Vec<[u8; 3]> = img[header.len()..]
            .chunks(3)
            .map(|c| [c[0], c[1], c[2]])
            .collect();
        // top row is j = 1: (i=0, j=1) then (i=1, j=1)
        assert_eq!(px[0], CATEGORICAL[1]);
        assert_eq!(px[1], [0, 0, 0]);
        assert_eq!(px[2], CATEGORICAL[0]);
        assert_eq!(px[3], CATEGORICAL[1]);
        let distinct: std::collections::BTreeSet<_> = px.into_iter().collect();
        assert_eq!(distinct.len(), 3);
    }
}
