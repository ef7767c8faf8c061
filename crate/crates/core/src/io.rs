//! Point files and quantization.
//!
//! The text format holds one point per line with coordinates separated by
//! whitespace. `#` starts a comment that runs to the end of the line; blank
//! lines are skipped.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::codec::decode_with_header;
use crate::container::Dequantization;
use crate::error::{invalid, Error, Result};
use crate::points::{BoundsSpec, QuantizedPointSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointFormat {
    /// Whitespace-separated text.
    Text,
    /// A compressed container, read back as (dequantized) coordinates.
    Container,
}

impl FromStr for PointFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" | "txt" | "xyz" => Ok(PointFormat::Text),
            "dgpc" | "container" => Ok(PointFormat::Container),
            _ => Err(invalid(format!("unknown point format '{s}'"))),
        }
    }
}

/// Real-valued points, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RawPointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl RawPointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 && !coords.is_empty() {
            return Err(invalid("points need at least one coordinate"));
        }
        if dim > 0 && !coords.len().is_multiple_of(dim) {
            return Err(invalid("coordinate count is not a multiple of the dimension"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid("coordinates must be finite"));
        }
        Ok(RawPointCloud { dim, coords })
    }

    /// Dimension; zero for an empty cloud whose dimension was not declared.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Per-axis minimum and maximum, if the cloud is nonempty.
    pub fn extent(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let mut rows = self.rows();
        let first = rows.next()?;
        let (mut lo, mut hi) = (first.to_vec(), first.to_vec());
        for r in rows {
            for a in 0..self.dim {
                lo[a] = lo[a].min(r[a]);
                hi[a] = hi[a].max(r[a]);
            }
        }
        Some((lo, hi))
    }

    /// Whether every coordinate is a non-negative integer below `2^bits[i]`.
    pub fn fits_integer_grid(&self, bounds: &BoundsSpec) -> bool {
        self.dim == bounds.dim()
            && self
                .rows()
                .all(|r| r.iter().enumerate().all(|(a, &c)| c >= 0.0 && c.fract() == 0.0 && c < bounds.extent(a) as f64))
    }

    /// Converts integer-valued coordinates without quantization.
    pub fn to_quantized(&self, bounds: &BoundsSpec) -> Result<QuantizedPointSet> {
        if !self.fits_integer_grid(bounds) {
            return Err(invalid("coordinates are not integers inside the bounds"));
        }
        QuantizedPointSet::from_flat(bounds.clone(), self.coords.iter().map(|&c| c as u32).collect())
    }
}

impl From<&QuantizedPointSet> for RawPointCloud {
    fn from(points: &QuantizedPointSet) -> Self {
        RawPointCloud {
            dim: points.bounds().dim(),
            coords: points.coords().iter().map(|&c| f64::from(c)).collect(),
        }
    }
}

/// Parses text points. `dim` fixes the dimension; otherwise the first row
/// decides and an empty input has dimension zero.
pub fn read_text<R: BufRead>(reader: R, dim: Option<usize>) -> Result<RawPointCloud> {
    let mut coords = Vec::new();
    let mut width = dim;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("");
        let mut row = 0;
        for tok in content.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("'{tok}' is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse { line: line_no, message: format!("'{tok}' is not finite") });
            }
            coords.push(v);
            row += 1;
        }
        if row == 0 {
            continue;
        }
        match width {
            None => width = Some(row),
            Some(w) if w != row => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {w} coordinates, found {row}"),
                })
            }
            _ => {}
        }
    }
    RawPointCloud::new(width.unwrap_or(0), coords)
}

/// Reads points from `reader` in `format`.
pub fn read_points<R: BufRead>(mut reader: R, format: PointFormat, dim: Option<usize>) -> Result<RawPointCloud> {
    match format {
        PointFormat::Text => read_text(reader, dim),
        PointFormat::Container => {
            let mut bytes = Vec::new();
            reader.read_to_end(&mut bytes)?;
            let decoded = decode_with_header(&bytes)?;
            Ok(match &decoded.header.dequantization {
                Some(dq) => dequantize(&decoded.points, dq),
                None => RawPointCloud::from(&decoded.points),
            })
        }
    }
}

/// Writes one point per line. Integral values are written without a
/// fractional part; others use the shortest representation that parses back
/// to the same value.
pub fn write_points<W: Write>(mut writer: W, cloud: &RawPointCloud) -> Result<()> {
    let mut line = String::new();
    for row in cloud.rows().filter(|_| !cloud.is_empty()) {
        line.clear();
        for (i, &c) in row.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            if c.fract() == 0.0 && c.abs() < 1e15 {
                write!(line, "{}", c as i64).unwrap();
            } else {
                write!(line, "{c}").unwrap();
            }
        }
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_quantized<W: Write>(writer: W, points: &QuantizedPointSet) -> Result<()> {
    write_points(writer, &RawPointCloud::from(points))
}

/// `clamp(round((x - lo) / (hi - lo) * (2^b - 1)), 0, 2^b - 1)` per axis,
/// rounding halves up.
pub fn quantize(cloud: &RawPointCloud, bounds: &BoundsSpec, range: &Dequantization) -> Result<QuantizedPointSet> {
    let d = bounds.dim();
    if cloud.dim() != d && !cloud.is_empty() {
        return Err(invalid(format!("cloud has dimension {}, bounds have {d}", cloud.dim())));
    }
    if range.lo.len() != d || range.hi.len() != d {
        return Err(invalid("quantization range needs one (lo, hi) pair per axis"));
    }
    if let Some(a) = (0..d).find(|&a| range.hi[a].partial_cmp(&range.lo[a]) != Some(std::cmp::Ordering::Greater)) {
        return Err(invalid(format!("axis {a}: hi must exceed lo")));
    }
    let coords = cloud
        .rows()
        .filter(|_| !cloud.is_empty())
        .flat_map(|row| {
            row.iter().enumerate().map(|(a, &x)| {
                let levels = (bounds.extent(a) - 1) as f64;
                let t = (x - range.lo[a]) / (range.hi[a] - range.lo[a]) * levels;
                (t + 0.5).floor().clamp(0.0, levels) as u32
            })
        })
        .collect();
    QuantizedPointSet::from_flat(bounds.clone(), coords)
}

/// Inverse of [`quantize`]: `lo + q / (2^b - 1) * (hi - lo)`.
pub fn dequantize(points: &QuantizedPointSet, range: &Dequantization) -> RawPointCloud {
    let bounds = points.bounds();
    let coords = points
        .iter()
        .flat_map(|p| {
            p.iter().enumerate().map(|(a, &q)| {
                let levels = (bounds.extent(a) - 1) as f64;
                range.lo[a] + f64::from(q) / levels * (range.hi[a] - range.lo[a])
            })
        })
        .collect();
    RawPointCloud { dim: bounds.dim(), coords }
}
